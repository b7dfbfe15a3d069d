//! Cubic grid geometry, interaction potentials and the lattice/atomic unit map.
//!
//! Lengths are in lattice units (spacing `a = 1`) and energies in the
//! simulator's hopping units throughout. Atomic units (Bohr radius, Rydberg)
//! appear only at output boundaries through [`ChemistryParams`].
//!
//! Flat indices are x-fastest: `i = x + n * (y + n * z)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    n: usize,
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(n: usize, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidLattice(format!(
                "need at least 2 sites per side, got {n}"
            )));
        }
        Ok(Self { n, boundary })
    }

    pub fn open(n: usize) -> Result<Self> {
        Self::new(n, Boundary::Open)
    }

    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, Boundary::Periodic)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn flatten(&self, [x, y, z]: [usize; 3]) -> usize {
        x + self.n * (y + self.n * z)
    }

    #[inline]
    pub fn unflatten(&self, i: usize) -> [usize; 3] {
        let n = self.n;
        [i % n, (i / n) % n, i / (n * n)]
    }

    /// Lattice index of the grid center, `floor(n / 2)`.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Distance between a site and an arbitrary point. Periodic lattices use
    /// the minimum image along each axis.
    pub fn distance(&self, site: [usize; 3], point: [f64; 3]) -> f64 {
        let n = self.n as f64;
        let mut r2 = 0.0;
        for axis in 0..3 {
            let mut d = site[axis] as f64 - point[axis];
            if self.boundary == Boundary::Periodic {
                d -= n * (d / n).round();
            }
            r2 += d * d;
        }
        r2.sqrt()
    }

    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        let hi = (self.n - 1) as f64;
        p.iter().all(|&c| (0.0..=hi).contains(&c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub charge: f64,
    pub pos: [f64; 3],
}

/// Axis that receives the half-site offset which keeps nuclei off lattice sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetAxis {
    X,
    #[default]
    Y,
    Z,
}

impl OffsetAxis {
    fn index(self) -> usize {
        match self {
            OffsetAxis::X => 0,
            OffsetAxis::Y => 1,
            OffsetAxis::Z => 2,
        }
    }
}

/// Single nucleus at `(m, m + 1/2, m)` with `m = floor(n / 2)`.
pub fn centered_nucleus(lattice: &LatticeSpec, charge: f64, offset: OffsetAxis) -> Nucleus {
    let m = lattice.center() as f64;
    let mut pos = [m; 3];
    pos[offset.index()] += 0.5;
    Nucleus { charge, pos }
}

/// Two nuclei separated by `d` sites along x, at `(m - ceil(d/2), m + 1/2, m)`
/// and `(m + floor(d/2), m + 1/2, m)`. Both carry the half offset.
pub fn molecule_nuclei(
    lattice: &LatticeSpec,
    d: usize,
    charge: f64,
    offset: OffsetAxis,
) -> Result<[Nucleus; 2]> {
    let m = lattice.center();
    let lo = m.checked_sub(d.div_ceil(2)).ok_or_else(|| {
        Error::InvalidParams(format!(
            "separation {d} does not fit in a lattice of {} sites",
            lattice.n()
        ))
    })?;
    let hi = m + d / 2;
    if hi >= lattice.n() {
        return Err(Error::InvalidParams(format!(
            "separation {d} does not fit in a lattice of {} sites",
            lattice.n()
        )));
    }
    let place = |x: usize| {
        let mut pos = [x as f64, m as f64, m as f64];
        pos[offset.index()] += 0.5;
        Nucleus { charge, pos }
    };
    Ok([place(lo), place(hi)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChemistryParams {
    pub t_f: f64,
    pub v0: f64,
    pub nuclei: Vec<Nucleus>,
    pub n_e: usize,
}

impl ChemistryParams {
    pub fn new(t_f: f64, v0: f64, nuclei: Vec<Nucleus>, n_e: usize) -> Result<Self> {
        let p = Self {
            t_f,
            v0,
            nuclei,
            n_e,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters at a given `t_f / v0` with unit hopping.
    pub fn from_ratio(ratio: f64, nuclei: Vec<Nucleus>, n_e: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "t_f/v0 must be positive, got {ratio}"
            )));
        }
        Self::new(1.0, 1.0 / ratio, nuclei, n_e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(Error::InvalidParams(format!("t_f must be > 0, got {}", self.t_f)));
        }
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return Err(Error::InvalidParams(format!("v0 must be > 0, got {}", self.v0)));
        }
        if self.n_e == 0 {
            return Err(Error::InvalidParams("n_e must be >= 1".into()));
        }
        for (i, nuc) in self.nuclei.iter().enumerate() {
            if !(nuc.charge > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "nucleus {i} has non-positive charge {}",
                    nuc.charge
                )));
            }
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.t_f / self.v0
    }

    /// Bohr radius in lattice units, `2 t_f / v0`.
    pub fn bohr_radius(&self) -> f64 {
        2.0 * self.t_f / self.v0
    }

    /// Rydberg energy in lattice energy units, `v0^2 / (4 t_f)`.
    pub fn rydberg(&self) -> f64 {
        self.v0 * self.v0 / (4.0 * self.t_f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialKind {
    Coulomb,
    /// `offset + (v0 / r) exp(-r / length)`.
    Yukawa { length: f64, offset: f64 },
}

impl PotentialKind {
    /// Pair potential at distance `r`. At `r = 0` the lattice cutoff `pi * v0`
    /// replaces the divergence.
    pub fn eval(&self, v0: f64, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match *self {
            PotentialKind::Coulomb => {
                if r == 0.0 {
                    PI * v0
                } else {
                    v0 / r
                }
            }
            PotentialKind::Yukawa { length, offset } => {
                if r == 0.0 {
                    offset + PI * v0
                } else {
                    offset + v0 / r * (-r / length).exp()
                }
            }
        }
    }

    /// Constant pair-energy shift carried by the kernel.
    pub fn offset(&self) -> f64 {
        match *self {
            PotentialKind::Coulomb => 0.0,
            PotentialKind::Yukawa { offset, .. } => offset,
        }
    }
}

pub fn potential_eval(kind: PotentialKind, v0: f64, r: f64) -> f64 {
    kind.eval(v0, r)
}

/// Attractive nuclear field `W(j) = sum_n Z_n v0 / |j - r_n|` on every site.
///
/// A nucleus that coincides with a site is rejected unless `onsite_cutoff`
/// is set, in which case that site receives `Z pi v0`.
pub fn nuclear_field(
    lattice: &LatticeSpec,
    params: &ChemistryParams,
    onsite_cutoff: bool,
) -> Result<Vec<f64>> {
    params.validate()?;
    for (index, nuc) in params.nuclei.iter().enumerate() {
        if !lattice.contains_point(nuc.pos) {
            return Err(Error::InvalidParams(format!(
                "nucleus {index} at {:?} lies outside the {}^3 grid",
                nuc.pos,
                lattice.n()
            )));
        }
        if !onsite_cutoff && nuc.pos.iter().all(|c| c.fract() == 0.0) {
            let site = nuc.pos.map(|c| c as usize);
            return Err(Error::NucleusOnSite { index, site });
        }
    }
    let mut w = vec![0.0; lattice.num_sites()];
    for (i, wi) in w.iter_mut().enumerate() {
        let site = lattice.unflatten(i);
        for nuc in &params.nuclei {
            let r = lattice.distance(site, nuc.pos);
            *wi += nuc.charge * PotentialKind::Coulomb.eval(params.v0, r);
        }
    }
    Ok(w)
}

/// Converts a lattice energy to Rydberg units after shifting out the
/// band-bottom reference `-6 t_f` per electron.
pub fn to_atomic_units(e_lattice: f64, params: &ChemistryParams) -> f64 {
    (e_lattice + 6.0 * params.t_f * params.n_e as f64) / params.rydberg()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hydrogen(n: usize, t_f: f64, v0: f64) -> (LatticeSpec, ChemistryParams) {
        let lat = LatticeSpec::open(n).unwrap();
        let nuc = centered_nucleus(&lat, 1.0, OffsetAxis::Y);
        (lat, ChemistryParams::new(t_f, v0, vec![nuc], 1).unwrap())
    }

    #[test]
    fn potential_values() {
        assert_eq!(PotentialKind::Coulomb.eval(1.0, 2.0), 0.5);
        assert_eq!(PotentialKind::Coulomb.eval(1.0, 0.0), PI);
        let y = PotentialKind::Yukawa {
            length: 10.0,
            offset: 0.0,
        };
        assert!((y.eval(1.0, 10.0) - 0.1 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((y.eval(1.0, 10.0) - 0.036788).abs() < 1e-6);
        let yc = PotentialKind::Yukawa {
            length: 10.0,
            offset: 0.25,
        };
        assert_eq!(yc.eval(2.0, 0.0), 0.25 + 2.0 * PI);
    }

    #[test]
    fn yukawa_long_length_matches_coulomb() {
        let y = PotentialKind::Yukawa {
            length: 1e6,
            offset: 0.0,
        };
        for i in 1..=100 {
            let r = i as f64;
            let c = PotentialKind::Coulomb.eval(1.0, r);
            assert!((y.eval(1.0, r) - c).abs() / c <= 1e-4);
        }
        // Further out the relative gap is exactly 1 - exp(-r/L), about 1e-3 at r = 1000.
        for i in 1..=1000 {
            let r = i as f64;
            let c = PotentialKind::Coulomb.eval(1.0, r);
            let gap = (c - y.eval(1.0, r)) / c;
            assert!((gap - (-(-r / 1e6f64).exp_m1())).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_tiny_lattice() {
        assert!(LatticeSpec::open(1).is_err());
        assert!(LatticeSpec::open(2).is_ok());
    }

    #[test]
    fn nearest_sites_of_offset_nucleus() {
        let (lat, p) = hydrogen(8, 1.0, 0.7);
        let w = nuclear_field(&lat, &p, false).unwrap();
        let m = lat.center();
        assert!((w[lat.flatten([m, m, m])] - 2.0 * 0.7).abs() < 1e-14);
        assert!((w[lat.flatten([m, m + 1, m])] - 2.0 * 0.7).abs() < 1e-14);
        assert!(w.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn superposition_of_equidistant_nuclei() {
        let lat = LatticeSpec::open(9).unwrap();
        let nuclei = vec![
            Nucleus {
                charge: 1.0,
                pos: [2.0, 4.5, 4.0],
            },
            Nucleus {
                charge: 1.0,
                pos: [6.0, 4.5, 4.0],
            },
        ];
        let p = ChemistryParams::new(1.0, 1.0, nuclei, 2).unwrap();
        let w = nuclear_field(&lat, &p, false).unwrap();
        let d = (4.0f64 + 0.25).sqrt();
        assert!((w[lat.flatten([4, 4, 4])] - 2.0 / d).abs() < 1e-14);
    }

    #[test]
    fn on_site_nucleus_requires_opt_in() {
        let lat = LatticeSpec::open(5).unwrap();
        let nuc = Nucleus {
            charge: 1.0,
            pos: [2.0, 2.0, 2.0],
        };
        let p = ChemistryParams::new(1.0, 0.5, vec![nuc], 1).unwrap();
        assert!(matches!(
            nuclear_field(&lat, &p, false),
            Err(Error::NucleusOnSite { index: 0, .. })
        ));
        let w = nuclear_field(&lat, &p, true).unwrap();
        assert!((w[lat.flatten([2, 2, 2])] - PI * 0.5).abs() < 1e-14);
    }

    #[test]
    fn nucleus_outside_grid_rejected() {
        let lat = LatticeSpec::open(5).unwrap();
        let nuc = Nucleus {
            charge: 1.0,
            pos: [2.0, 4.5, 2.0],
        };
        let p = ChemistryParams::new(1.0, 0.5, vec![nuc], 1).unwrap();
        assert!(nuclear_field(&lat, &p, false).is_err());
    }

    #[test]
    fn atomic_unit_conversion() {
        let (_, p) = hydrogen(4, 1.0, 0.5);
        assert!((to_atomic_units(-6.0625, &p) + 1.0).abs() < 1e-14);
        assert_eq!(to_atomic_units(-6.0, &p), 0.0);
        let p2 = ChemistryParams { n_e: 2, ..p };
        assert_eq!(to_atomic_units(-12.0, &p2), 0.0);
        assert_eq!(p2.bohr_radius(), 4.0);
        assert_eq!(p2.rydberg(), 0.0625);
    }

    #[test]
    fn molecule_placement() {
        let lat = LatticeSpec::open(20).unwrap();
        let [a, b] = molecule_nuclei(&lat, 5, 1.0, OffsetAxis::Y).unwrap();
        assert_eq!(a.pos, [7.0, 10.5, 10.0]);
        assert_eq!(b.pos, [12.0, 10.5, 10.0]);
        assert!(molecule_nuclei(&lat, 21, 1.0, OffsetAxis::Y).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flat_index_round_trips(n in 2usize..40, frac in 0.0f64..1.0) {
                let lat = LatticeSpec::open(n).unwrap();
                let i = ((lat.num_sites() - 1) as f64 * frac) as usize;
                prop_assert_eq!(lat.flatten(lat.unflatten(i)), i);
            }

            #[test]
            fn coulomb_strictly_decreasing(r in 1e-6f64..1e4, dr in 1e-6f64..10.0) {
                let k = PotentialKind::Coulomb;
                prop_assert!(k.eval(1.0, r + dr) < k.eval(1.0, r));
            }

            #[test]
            fn atomic_units_affine_increasing(e in -100.0f64..100.0, de in 1e-6f64..10.0, ratio in 0.1f64..10.0) {
                let p = ChemistryParams::from_ratio(ratio, vec![], 1).unwrap();
                let a = to_atomic_units(e, &p);
                let b = to_atomic_units(e + de, &p);
                prop_assert!(b > a);
                prop_assert!(((b - a) - de / p.rydberg()).abs() <= 1e-9 * (1.0 + de / p.rydberg()));
            }
        }
    }
}
