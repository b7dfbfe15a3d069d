use std::f64::consts::FRAC_1_SQRT_2;

use qcsim_core::eigen::DavidsonOptions;
use qcsim_core::lattice::*;
use qcsim_core::linalg::{sym_eigen, SymMatrix};
use qcsim_core::single_particle::{LatticeHamiltonian, OrbitalField};
use qcsim_core::two_electron::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(n_sites: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_sites).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// `sum_b V(|a - b|) rho(b)` by looping over every pair of sites.
fn direct_convolution(lat: &LatticeSpec, kind: PotentialKind, v0: f64, rho: &[f64]) -> Vec<f64> {
    (0..lat.num_sites())
        .map(|a| {
            let pa = lat.unflatten(a).map(|c| c as f64);
            (0..lat.num_sites())
                .map(|b| kind.eval(v0, lat.distance(lat.unflatten(b), pa)) * rho[b])
                .sum()
        })
        .collect()
}

fn random_basis(lat: LatticeSpec, n: usize, seed: u64) -> OrbitalBasis {
    let cands = (0..n)
        .map(|k| {
            let v = random_field(lat.num_sites(), seed + k as u64);
            (OrbitalField::new(lat, v).unwrap(), OrbitalTag::H2plusLevel(k))
        })
        .collect();
    OrbitalBasis::orthonormalize(cands, DEFAULT_OVERLAP_FLOOR).unwrap()
}

#[test]
fn convolution_matches_direct_sum() {
    let lat = LatticeSpec::open(6).unwrap();
    let rho = random_field(lat.num_sites(), 7);
    for kind in [
        PotentialKind::Coulomb,
        PotentialKind::Yukawa {
            length: 3.0,
            offset: 0.02,
        },
    ] {
        let fast = ee_convolution(&rho, kind, 0.4, &lat).unwrap();
        let slow = direct_convolution(&lat, kind, 0.4, &rho);
        let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn corner_charges_see_open_distance() {
    let lat = LatticeSpec::open(16).unwrap();
    let mut rho = vec![0.0; lat.num_sites()];
    rho[lat.flatten([0, 0, 0])] = 1.0;
    let field = ee_convolution(&rho, PotentialKind::Coulomb, 1.0, &lat).unwrap();
    let far = field[lat.flatten([15, 15, 15])];
    assert!((far - 1.0 / (3.0f64.sqrt() * 15.0)).abs() < 1e-13);
    // A periodic image would sit at distance sqrt(3).
    assert!(far < 0.5 / 3.0f64.sqrt());
}

#[test]
fn point_orbital_integrals() {
    let lat = LatticeSpec::open(5).unwrap();
    let (p, q) = ([1, 1, 1], [3, 2, 1]);
    let delta = |s: [usize; 3]| {
        let mut v = vec![0.0; lat.num_sites()];
        v[lat.flatten(s)] = 1.0;
        OrbitalField::new(lat, v).unwrap()
    };
    let basis = OrbitalBasis::orthonormalize(
        vec![
            (delta(p), OrbitalTag::H2plusLevel(0)),
            (delta(q), OrbitalTag::H2plusLevel(1)),
        ],
        DEFAULT_OVERLAP_FLOOR,
    )
    .unwrap();
    let conv = Convolver::new(&lat, PotentialKind::Coulomb, 1.0).unwrap();
    let t = ee_integrals(&basis, &conv).unwrap();
    assert!((t.get(0, 1, 0, 1) - 1.0 / 5.0f64.sqrt()).abs() < 1e-13);
    assert!(t.get(0, 0, 1, 1).abs() < 1e-13);
    assert!((t.get(0, 0, 0, 0) - std::f64::consts::PI).abs() < 1e-12);
}

fn direct_tensor(basis: &OrbitalBasis, kind: PotentialKind, v0: f64) -> Vec<f64> {
    let lat = *basis.lattice();
    let n = basis.len();
    let sites = lat.num_sites();
    let mut pot = vec![0.0; sites * sites];
    for a in 0..sites {
        let pa = lat.unflatten(a).map(|c| c as f64);
        for b in 0..sites {
            pot[a * sites + b] = kind.eval(v0, lat.distance(lat.unflatten(b), pa));
        }
    }
    let mut out = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let (fi, fj, fr, fs) = (basis.orbital(i), basis.orbital(j), basis.orbital(r), basis.orbital(s));
                    let mut acc = 0.0;
                    for a in 0..sites {
                        let left = fi[a] * fr[a];
                        for b in 0..sites {
                            acc += left * pot[a * sites + b] * fj[b] * fs[b];
                        }
                    }
                    out[((i * n + j) * n + r) * n + s] = acc;
                }
            }
        }
    }
    out
}

#[test]
fn integrals_match_direct_sum_and_share_images() {
    let lat = LatticeSpec::open(6).unwrap();
    let basis = random_basis(lat, 4, 11);
    assert!(basis.gram_error() < 1e-9);
    let kind = PotentialKind::Coulomb;
    let conv = Convolver::new(&lat, kind, 0.5).unwrap();
    let t = ee_integrals(&basis, &conv).unwrap();
    let oracle = direct_tensor(&basis, kind, 0.5);
    let n = 4;
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = t.get(i, j, r, s);
                    assert!((v - oracle[((i * n + j) * n + r) * n + s]).abs() <= 1e-10 * scale);
                    for img in [
                        t.get(r, j, i, s),
                        t.get(i, s, r, j),
                        t.get(r, s, i, j),
                        t.get(j, i, s, r),
                        t.get(s, i, j, r),
                        t.get(j, r, s, i),
                        t.get(s, r, j, i),
                    ] {
                        assert_eq!(img.to_bits(), v.to_bits());
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            assert!(t.get(i, j, i, j) >= 0.0);
        }
    }
    let rebuilt = EeIntegralTensor::from_full(n, &oracle, 1e-12).unwrap();
    assert_eq!(rebuilt.n(), n);
    let mut broken = oracle.clone();
    broken[1] += 1e-3;
    assert!(EeIntegralTensor::from_full(n, &broken, 1e-12).is_err());
}

#[test]
fn two_orbital_block_matches_hand_assembly() {
    let lat = LatticeSpec::open(5).unwrap();
    let basis = random_basis(lat, 2, 3);
    let conv = Convolver::new(&lat, PotentialKind::Coulomb, 0.3).unwrap();
    let t = ee_integrals(&basis, &conv).unwrap();
    let one = SymMatrix::from_fn(2, |i, j| [[-1.3, 0.2], [0.2, -0.4]][i][j]);
    let f = 0.7;
    let (h00, h01, h11) = (one.get(0, 0), one.get(0, 1), one.get(1, 1));
    let r2 = 2.0f64.sqrt();
    let hand = [
        [2.0 * h00 + f * t.get(0, 0, 0, 0), r2 * (h01 + f * t.get(0, 0, 0, 1)), f * t.get(0, 0, 1, 1)],
        [
            r2 * (h01 + f * t.get(0, 0, 0, 1)),
            h00 + h11 + f * (t.get(0, 1, 0, 1) + t.get(0, 1, 1, 0)),
            r2 * (h01 + f * t.get(0, 1, 1, 1)),
        ],
        [f * t.get(0, 0, 1, 1), r2 * (h01 + f * t.get(0, 1, 1, 1)), 2.0 * h11 + f * t.get(1, 1, 1, 1)],
    ];
    let m = SymMatrix::from_fn(3, |i, j| hand[i][j]);
    let expect = sym_eigen(&m).unwrap().values[0];
    let ci = assemble_and_solve(&one, &t, f).unwrap();
    assert!((ci.energy - expect).abs() < 1e-13);
    let c = &ci.coefficients;
    assert!((c[1] - c[2]).abs() < 1e-15);
    assert!((ci.vector[1] * FRAC_1_SQRT_2 - c[1]).abs() < 1e-15);
}

fn molecule(n: usize, d: usize, ratio: f64) -> (LatticeSpec, ChemistryParams) {
    let lat = LatticeSpec::open(n).unwrap();
    let nuc = molecule_nuclei(&lat, d, 1.0, OffsetAxis::Y).unwrap();
    (lat, ChemistryParams::from_ratio(ratio, nuc.to_vec(), 2).unwrap())
}

#[test]
fn zero_repulsion_doubles_lowest_orbital() {
    let (lat, params) = molecule(12, 3, 1.5);
    let ion = h2plus_orbitals(&lat, &params, 4, &DavidsonOptions::default()).unwrap();
    let cands = ion
        .orbitals
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, o)| (o, OrbitalTag::H2plusLevel(i)))
        .collect();
    let basis = OrbitalBasis::orthonormalize(cands, DEFAULT_OVERLAP_FLOOR).unwrap();
    let conv = Convolver::new(&lat, PotentialKind::Coulomb, params.v0).unwrap();
    let t = ee_integrals(&basis, &conv).unwrap();
    let h0 = LatticeHamiltonian::new(&lat, &params).unwrap();
    let ci = assemble_and_solve(&one_body_matrix(&basis, &h0), &t, 0.0).unwrap();
    assert!((ci.energy - 2.0 * ion.energies[0]).abs() < 1e-10 * ion.energies[0].abs());
    assert!((ci.coefficients[0].abs() - 1.0).abs() < 1e-10);
    let n = basis.len();
    for a in 0..n {
        for b in 0..n {
            assert_eq!(ci.coefficients[a * n + b], ci.coefficients[b * n + a]);
        }
    }
}

#[test]
fn ground_energy_does_not_rise_with_basis_size() {
    let (lat, params) = molecule(24, 4, 1.5);
    let opts = DavidsonOptions::default();
    let ion = h2plus_orbitals(&lat, &params, 6, &opts).unwrap();
    let h0 = LatticeHamiltonian::new(&lat, &params).unwrap();
    let conv = Convolver::new(&lat, PotentialKind::Coulomb, params.v0).unwrap();
    let hf_opts = HartreeFockOptions::for_params(&params);
    let hf = hartree_fock(&h0, &conv, 1.0, 6, &hf_opts).unwrap();
    let mut cands: Vec<(OrbitalField, OrbitalTag)> = Vec::new();
    for i in 0..6 {
        cands.push((ion.orbitals[i].clone(), OrbitalTag::H2plusLevel(i)));
        cands.push((hf.spectrum.orbitals[i].clone(), OrbitalTag::HartreeFockLevel(i)));
    }
    let mut last = f64::INFINITY;
    for k in 2..=12 {
        let basis = OrbitalBasis::orthonormalize(cands[..k].to_vec(), DEFAULT_OVERLAP_FLOOR).unwrap();
        let t = ee_integrals(&basis, &conv).unwrap();
        let e = assemble_and_solve(&one_body_matrix(&basis, &h0), &t, 1.0).unwrap().energy;
        assert!(e <= last + 1e-12 * e.abs(), "k={k}: {e} > {last}");
        last = e;
    }
}

#[test]
fn mean_field_behaviour() {
    let (lat, params) = molecule(14, 2, 1.2);
    let h0 = LatticeHamiltonian::new(&lat, &params).unwrap();
    let conv = Convolver::new(&lat, PotentialKind::Coulomb, params.v0).unwrap();
    let opts = HartreeFockOptions::for_params(&params);
    let bare = hartree_fock(&h0, &conv, 0.0, 3, &opts).unwrap();
    let ion = h2plus_orbitals(&lat, &params, 3, &opts.davidson).unwrap();
    assert_eq!(bare.spectrum.energies, ion.energies);
    assert_eq!(bare.sweeps, 0);

    let mut last = bare.spectrum.energies[0];
    let mut converged = None;
    for scale in [0.25, 0.5, 1.0] {
        let r = hartree_fock(&h0, &conv, scale, 3, &opts).unwrap();
        assert!(r.spectrum.energies[0] > last);
        last = r.spectrum.energies[0];
        converged = Some(r);
    }
    // Feeding the converged orbital back changes nothing.
    let r = converged.unwrap();
    let rho: Vec<f64> = r.spectrum.orbitals[0].values().iter().map(|v| v * v).collect();
    let h = h0.with_extra_potential(&conv.convolve(&rho));
    let again = qcsim_core::single_particle::solve_hamiltonian(&h, 3, &opts.davidson, &[]).unwrap();
    for (a, b) in again.energies.iter().zip(&r.spectrum.energies) {
        assert!((a - b).abs() < 1e-6 * params.rydberg());
    }
}

#[test]
fn zero_repulsion_point_is_one_body() {
    let lat = LatticeSpec::open(14).unwrap();
    let opts = MolecularOptions {
        n1: 3,
        n2: 3,
        repulsion_scale: 0.0,
        ..Default::default()
    };
    let p = molecular_point(&lat, 4, 1.3, &opts).unwrap();
    assert!((p.e_electronic - 2.0 * p.e_h2plus).abs() <= 1e-8 * p.e_electronic.abs());
    assert!((p.e_total - p.e_electronic - 2.0 / p.d_atomic).abs() < 1e-12);
    assert_eq!(p.basis_size, 3);
    assert_eq!(p.dropped_orbitals.len(), 3);
}

#[test]
fn screened_kernel_lowers_the_curve() {
    let lat = LatticeSpec::open(16).unwrap();
    let coulomb = MolecularOptions {
        n1: 3,
        n2: 3,
        ..Default::default()
    };
    let yukawa = MolecularOptions {
        potential: PotentialKind::Yukawa {
            length: 2.0,
            offset: 0.0,
        },
        ..coulomb
    };
    let a = molecular_point(&lat, 8, 1.2, &coulomb).unwrap();
    let b = molecular_point(&lat, 8, 1.2, &yukawa).unwrap();
    assert!(b.e_total < a.e_total);
}

#[test]
fn yukawa_offset_reported_separately() {
    let lat = LatticeSpec::open(10).unwrap();
    let c = 0.01;
    let opts = MolecularOptions {
        n1: 2,
        n2: 2,
        potential: PotentialKind::Yukawa {
            length: 3.0,
            offset: c,
        },
        ..Default::default()
    };
    let plain = MolecularOptions {
        potential: PotentialKind::Yukawa {
            length: 3.0,
            offset: 0.0,
        },
        ..opts
    };
    let a = molecular_point(&lat, 2, 1.0, &opts).unwrap();
    let b = molecular_point(&lat, 2, 1.0, &plain).unwrap();
    assert!((a.e_electronic_offset_free - b.e_electronic).abs() < 1e-8);
}

#[test]
fn energies_in_rydberg_ignore_hopping_scale() {
    let lat = LatticeSpec::open(12).unwrap();
    let base = MolecularOptions {
        n1: 3,
        n2: 3,
        ..Default::default()
    };
    let doubled = MolecularOptions { t_f: 2.0, ..base };
    let a = molecular_point(&lat, 4, 1.4, &base).unwrap();
    let b = molecular_point(&lat, 4, 1.4, &doubled).unwrap();
    assert!((a.e_total - b.e_total).abs() < 1e-7);
    assert_eq!(a.d_atomic, b.d_atomic);
}

#[test]
fn too_small_basis_rejected() {
    let t = EeIntegralTensor::from_full(1, &[1.0], 0.0).unwrap();
    let one = SymMatrix::from_fn(1, |_, _| 0.0);
    assert!(assemble_and_solve(&one, &t, 1.0).is_err());
}
