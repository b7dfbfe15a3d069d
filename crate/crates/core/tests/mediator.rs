use std::f64::consts::PI;

use proptest::prelude::*;
use qcsim_core::mediator::*;
use qcsim_core::Error;

fn params(n_m: usize, n_e: usize, u: f64, g: f64) -> MediatorParams {
    MediatorParams {
        j: 1.0,
        j_c: 1.0,
        u,
        delta: 2.0,
        g,
        j_f: 0.0,
        n_m,
        n_e,
    }
}

/// Term-by-term complex momentum sum.
fn literal_green(e: f64, r: [i64; 3], j: f64, n: usize) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let k = [a, b, c].map(|i| 2.0 * PI * i as f64 / n as f64);
                let phase = k[0] * r[0] as f64 + k[1] * r[1] as f64 + k[2] * r[2] as f64;
                let w = 1.0 / (e - dispersion(k, j));
                re += phase.cos() * w;
                im += phase.sin() * w;
            }
        }
    }
    let norm = (n * n * n) as f64;
    assert!(im.abs() / norm < 1e-12);
    re / norm
}

#[test]
fn green_matches_literal_sum() {
    let g = green_function(7.0, [1, 0, 0], 1.0, 8).unwrap();
    assert!((g - literal_green(7.0, [1, 0, 0], 1.0, 8)).abs() < 1e-12);
    for r in [[0, 0, 0], [2, 1, 0], [3, 3, 1], [-1, 2, 5]] {
        for e in [6.05, 8.0, 20.0] {
            let a = green_function(e, r, 0.9, 6).unwrap();
            let b = literal_green(e, r, 0.9, 6);
            assert!((a - b).abs() < 1e-12, "{r:?} {e}: {a} vs {b}");
        }
    }
}

#[test]
fn green_table_matches_direct_at_full_size() {
    let n = 40;
    let t = GreenTable::new(1.0, n);
    let a = 1.0 / 1600.0;
    let ds = [0usize, 1, 5, 13, 20];
    for (d, v) in ds.iter().zip(t.axial(a, &ds)) {
        let direct = green_function(6.0 + a, [0, *d as i64, 0], 1.0, n).unwrap();
        assert!((v - direct).abs() <= 1e-12 * direct.abs(), "d={d}");
    }
}

#[test]
fn closed_residual_is_tiny() {
    let p = params(8, 2, 50.0, 0.3);
    let c = FermionConfig::new(vec![[1, 2, 3], [4, 2, 2]], 8).unwrap();
    let s = bound_state_closed(&c, &p).unwrap();
    assert!(s.energy > 6.0 * p.j);
    let e = s.energy;
    let g0 = green_function(e, [0, 0, 0], 1.0, 8).unwrap();
    let g1 = green_function(e, [-3, 0, 1], 1.0, 8).unwrap();
    let rhs = p.unperturbed_energy() + p.g * p.g / 2.0 * (2.0 * g0 + 2.0 * g1);
    assert!((e - rhs).abs() <= 1e-10 * (p.u + p.delta));
}

#[test]
fn single_fermion_closed_vs_exact() {
    let p = params(8, 1, 1e4, 0.1);
    let c = FermionConfig::single(8);
    let a = bound_state_closed(&c, &p).unwrap();
    let b = bound_state_exact(&c, &p, DEFAULT_DENSE_LIMIT).unwrap();
    assert!((a.energy - b.energy).abs() <= 1e-3);
    assert!(b.overlap_symmetric.unwrap() > 0.99);
}

#[test]
fn exact_energy_grows_with_u() {
    let c = FermionConfig::single(4);
    let mut last = f64::NEG_INFINITY;
    let mut last_deficit = f64::INFINITY;
    for u in [10.0, 30.0, 100.0, 300.0] {
        let s = bound_state_exact(&c, &params(4, 1, u, 0.2), DEFAULT_DENSE_LIMIT).unwrap();
        assert!(s.energy > last);
        let deficit = 1.0 - s.overlap_symmetric.unwrap();
        assert!(deficit < last_deficit);
        last = s.energy;
        last_deficit = deficit;
    }
}

#[test]
fn exact_vs_closed_shrinks_with_u() {
    let c = FermionConfig::pair(6, 2).unwrap();
    for g in [0.1, 0.2] {
        let mut last = f64::INFINITY;
        for u in [1e2, 1e3, 1e4] {
            let p = params(6, 2, u, g);
            let a = bound_state_closed(&c, &p).unwrap();
            let b = bound_state_exact(&c, &p, DEFAULT_DENSE_LIMIT).unwrap();
            let diff = (a.energy - b.energy).abs();
            assert!(diff <= 1e-2 * g * g, "u={u} g={g} diff={diff}");
            assert!(diff < last);
            last = diff;
        }
    }
}

#[test]
fn repulsion_decreases_with_separation() {
    let p = params(40, 2, 4.0 + 1.0 / 100.0, 1e-2);
    let ds: Vec<usize> = (1..=15).collect();
    let curve = effective_interaction_curve(&ds, &p, CurveMethod::Closed { path: GreenPath::Table }).unwrap();
    for w in curve.points.windows(2) {
        assert!(w[0].v_eff > w[1].v_eff);
    }
    assert!(curve.points.iter().all(|pt| pt.v_eff > curve.asymptote));
}

#[test]
fn screening_limit() {
    // L = 1: beyond d ~ 15 the pair term is gone and the curve is flat.
    let mut p = params(48, 2, 0.0, 0.05);
    p.u = 7.0 - p.delta - p.with_n_e(2).rho_m() * p.j_c;
    let ds = [1, 16, 20, 24];
    let curve = effective_interaction_curve(&ds, &p, CurveMethod::Closed { path: GreenPath::Table }).unwrap();
    let v: Vec<f64> = curve.points.iter().map(|pt| pt.v_eff).collect();
    let near = v[0] - v[3];
    assert!(near > 0.0);
    assert!((v[1] - v[3]).abs() < 1e-6 * near);
    assert!((v[2] - v[3]).abs() < 1e-8 * near);
    // The flat level is the cavity term up to the small gap shift it causes.
    assert!((v[3] - curve.asymptote).abs() < 1e-2 * curve.asymptote);
}

#[test]
fn curve_paths_agree() {
    let p = params(24, 2, 4.0 + 1.0 / 64.0, 1e-3);
    let ds = [1, 2, 5, 9];
    let a = effective_interaction_curve(&ds, &p, CurveMethod::Closed { path: GreenPath::Direct }).unwrap();
    let b = effective_interaction_curve(&ds, &p, CurveMethod::Closed { path: GreenPath::Table }).unwrap();
    for (x, y) in a.points.iter().zip(&b.points) {
        assert!((x.v_eff - y.v_eff).abs() <= 1e-12 * x.v_eff.abs());
    }
}

#[test]
fn table_rejects_off_axis_pairs() {
    let p = params(8, 2, 10.0, 0.1);
    let t = GreenTable::new(1.0, 8);
    let c = FermionConfig::new(vec![[0, 0, 0], [1, 1, 0]], 8).unwrap();
    assert!(matches!(bound_state_closed_table(&c, &p, &t), Err(Error::InvalidParams(_))));
}

#[test]
fn gap_violation_named() {
    let p = params(8, 2, 1.0, 0.1);
    match localization_length(&p) {
        Err(Error::Domain(msg)) => assert!(msg.contains("gap")),
        other => panic!("{other:?}"),
    }
    assert!(bound_state_closed(&FermionConfig::pair(8, 2).unwrap(), &p).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_has_cubic_symmetry(x in -5i64..6, y in -5i64..6, z in -5i64..6, e in 6.01f64..12.0) {
        let g = green_function(e, [x, y, z], 1.0, 7).unwrap();
        for r in [[-x, -y, -z], [y, x, z], [z, y, x], [x, z, y], [y, z, x]] {
            let h = green_function(e, r, 1.0, 7).unwrap();
            prop_assert!((g - h).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_energy_is_translation_invariant(
        a in prop::array::uniform3(0i64..9),
        b in prop::array::uniform3(0i64..9),
        shift in prop::array::uniform3(0i64..9),
        g in 0.01f64..0.5,
    ) {
        prop_assume!(a != b);
        let p = params(9, 2, 20.0, g);
        let c = FermionConfig::new(vec![a, b], 9).unwrap();
        let moved: Vec<[i64; 3]> = [a, b]
            .iter()
            .map(|v| [0, 1, 2].map(|i| (v[i] + shift[i]).rem_euclid(9)))
            .collect();
        let c2 = FermionConfig::new(moved, 9).unwrap();
        let e1 = bound_state_closed(&c, &p).unwrap();
        let e2 = bound_state_closed(&c2, &p).unwrap();
        prop_assert!((e1.energy - e2.energy).abs() <= 1e-12 * e1.energy);
    }
}

#[test]
fn exact_energy_is_translation_invariant() {
    let p = params(5, 2, 30.0, 0.3);
    let c = FermionConfig::new(vec![[0, 1, 2], [3, 1, 4]], 5).unwrap();
    let c2 = FermionConfig::new(vec![[2, 4, 2], [0, 4, 4]], 5).unwrap();
    let a = bound_state_exact(&c, &p, DEFAULT_DENSE_LIMIT).unwrap();
    let b = bound_state_exact(&c2, &p, DEFAULT_DENSE_LIMIT).unwrap();
    assert!((a.energy - b.energy).abs() < 1e-12 * a.energy);
}
