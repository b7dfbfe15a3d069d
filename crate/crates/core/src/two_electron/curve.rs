//! Two-electron molecular energies as a function of nuclear separation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{h2plus_orbitals, OrbitalBasis, OrbitalTag, DEFAULT_OVERLAP_FLOOR};
use super::ci::{assemble_and_solve, one_body_matrix};
use super::convolution::Convolver;
use super::hartree_fock::{hartree_fock, HartreeFockOptions};
use super::integrals::ee_integrals;
use crate::eigen::DavidsonOptions;
use crate::error::{Error, Result};
use crate::lattice::{molecule_nuclei, to_atomic_units, ChemistryParams, LatticeSpec, OffsetAxis, PotentialKind};
use crate::planner::RatioSchedule;
use crate::single_particle::{lowest_eigenpairs, LatticeHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MolecularOptions {
    /// One-electron two-nucleus states in the basis.
    pub n1: usize,
    /// Mean-field orbitals in the basis.
    pub n2: usize,
    /// Fermion hopping; `v0 = t_f / ratio`. Energies in Rydberg do not depend on it.
    pub t_f: f64,
    pub potential: PotentialKind,
    /// Scale `F` of the electron-electron repulsion.
    pub repulsion_scale: f64,
    pub nuclear_repulsion: bool,
    pub offset_axis: OffsetAxis,
    pub davidson: DavidsonOptions,
    pub hf_max_sweeps: usize,
    pub overlap_floor: f64,
}

impl Default for MolecularOptions {
    fn default() -> Self {
        Self {
            n1: 8,
            n2: 8,
            t_f: 1.0,
            potential: PotentialKind::Coulomb,
            repulsion_scale: 1.0,
            nuclear_repulsion: true,
            offset_axis: OffsetAxis::Y,
            davidson: DavidsonOptions::default(),
            hf_max_sweeps: 300,
            overlap_floor: DEFAULT_OVERLAP_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularCurvePoint {
    pub d_lattice: usize,
    pub d_atomic: f64,
    pub ratio: f64,
    /// Electronic energy in Rydberg, band reference `-12 t_f` removed.
    pub e_electronic: f64,
    /// `e_electronic` without the constant pair-kernel offset.
    pub e_electronic_offset_free: f64,
    /// `e_electronic` plus `2 / (d / a0)` when nuclear repulsion is on.
    pub e_total: f64,
    /// Lowest one-electron level of the two-nucleus problem, Rydberg.
    pub e_h2plus: f64,
    pub basis_size: usize,
    pub hf_sweeps: usize,
    pub dropped_orbitals: Vec<OrbitalTag>,
}

fn molecule_params(
    lattice: &LatticeSpec,
    d_lattice: usize,
    ratio: f64,
    opts: &MolecularOptions,
) -> Result<ChemistryParams> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParams(format!("t_f/v0 must be positive, got {ratio}")));
    }
    let nuclei = molecule_nuclei(lattice, d_lattice, 1.0, opts.offset_axis)?;
    ChemistryParams::new(opts.t_f, opts.t_f / ratio, nuclei.to_vec(), 2)
}

/// Two-electron ground state at one separation and ratio.
pub fn molecular_point(
    lattice: &LatticeSpec,
    d_lattice: usize,
    ratio: f64,
    opts: &MolecularOptions,
) -> Result<MolecularCurvePoint> {
    let params = molecule_params(lattice, d_lattice, ratio, opts)?;
    let h0 = LatticeHamiltonian::new(lattice, &params)?;
    let ion = h2plus_orbitals(lattice, &params, opts.n1.max(1), &opts.davidson)?;
    let conv = Convolver::new(lattice, opts.potential, params.v0)?;
    let mut candidates: Vec<_> = ion
        .orbitals
        .iter()
        .take(opts.n1)
        .cloned()
        .enumerate()
        .map(|(i, o)| (o, OrbitalTag::H2plusLevel(i)))
        .collect();
    let mut hf_sweeps = 0;
    if opts.n2 > 0 {
        let hf_opts = HartreeFockOptions {
            max_sweeps: opts.hf_max_sweeps,
            davidson: opts.davidson,
            ..HartreeFockOptions::for_params(&params)
        };
        let hf = hartree_fock(&h0, &conv, opts.repulsion_scale, opts.n2, &hf_opts)?;
        hf_sweeps = hf.sweeps;
        candidates.extend(
            hf.spectrum
                .orbitals
                .into_iter()
                .enumerate()
                .map(|(i, o)| (o, OrbitalTag::HartreeFockLevel(i))),
        );
    }
    let basis = OrbitalBasis::orthonormalize(candidates, opts.overlap_floor)?;
    let tensor = ee_integrals(&basis, &conv)?;
    let one = one_body_matrix(&basis, &h0);
    let ci = assemble_and_solve(&one, &tensor, opts.repulsion_scale)?;
    let e_electronic = to_atomic_units(ci.energy, &params);
    let offset = opts.repulsion_scale * opts.potential.offset() / params.rydberg();
    let d_atomic = d_lattice as f64 / params.bohr_radius();
    let repulsion = if opts.nuclear_repulsion && d_lattice > 0 {
        2.0 / d_atomic
    } else {
        0.0
    };
    let one_electron = ChemistryParams { n_e: 1, ..params.clone() };
    Ok(MolecularCurvePoint {
        d_lattice,
        d_atomic,
        ratio,
        e_electronic,
        e_electronic_offset_free: e_electronic - offset,
        e_total: e_electronic + repulsion,
        e_h2plus: to_atomic_units(ion.energies[0], &one_electron),
        basis_size: basis.len(),
        hf_sweeps,
        dropped_orbitals: basis.dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub d_lattice: usize,
    pub ratio: Option<f64>,
    pub error: String,
    pub convergence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularCurve {
    pub points: Vec<MolecularCurvePoint>,
    pub failures: Vec<PointFailure>,
}

/// Curve over `d_values`; a failing point is recorded and the rest continue.
pub fn molecular_curve(
    d_values: &[usize],
    lattice: &LatticeSpec,
    schedule: &RatioSchedule,
    opts: &MolecularOptions,
) -> MolecularCurve {
    let results: Vec<(usize, Option<f64>, Result<MolecularCurvePoint>)> = d_values
        .par_iter()
        .map(|&d| match schedule.ratio_at(d as f64) {
            Ok(r) => (d, Some(r), molecular_point(lattice, d, r, opts)),
            Err(e) => (d, None, Err(e)),
        })
        .collect();
    let mut curve = MolecularCurve {
        points: vec![],
        failures: vec![],
    };
    for (d, ratio, r) in results {
        match r {
            Ok(p) => curve.points.push(p),
            Err(e) => curve.failures.push(PointFailure {
                d_lattice: d,
                ratio,
                convergence: e.is_convergence_failure(),
                error: e.to_string(),
            }),
        }
    }
    curve
}

/// Sum of the two separated-atom energies (Rydberg): one electron bound to
/// each nucleus of the `d_lattice` geometry alone, on the same lattice.
pub fn separated_atoms_energy(
    lattice: &LatticeSpec,
    d_lattice: usize,
    ratio: f64,
    axis: OffsetAxis,
    davidson: &DavidsonOptions,
) -> Result<f64> {
    let nuclei = molecule_nuclei(lattice, d_lattice, 1.0, axis)?;
    let mut total = 0.0;
    for nuc in nuclei {
        let p = ChemistryParams::from_ratio(ratio, vec![nuc], 1)?;
        let s = lowest_eigenpairs(lattice, &p, 1, davidson)?;
        total += to_atomic_units(s.energies[0], &p);
    }
    Ok(total)
}

/// Minimum of a curve in `d / a0`, refined by a parabola through the lowest
/// point and its neighbors. `None` when the lowest point is an endpoint.
pub fn curve_minimum(points: &[MolecularCurvePoint]) -> Option<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.d_atomic, p.e_total)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = (0..pts.len()).min_by(|&a, &b| pts[a].1.total_cmp(&pts[b].1))?;
    if k == 0 || k + 1 == pts.len() {
        return None;
    }
    let (x0, y0) = pts[k - 1];
    let (x1, y1) = pts[k];
    let (x2, y2) = pts[k + 1];
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a > 0.0) {
        return Some((x1, y1));
    }
    let b = d01 - a * (x0 + x1);
    let x = -b / (2.0 * a);
    let y = y1 + (x - x1) * (d01 + a * (x - x0));
    Some((x, y))
}
