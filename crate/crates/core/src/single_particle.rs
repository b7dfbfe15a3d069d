//! One-electron lattice Hamiltonian `-t_f sum_nn - W` and its diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{davidson, DavidsonOptions, KineticPreconditioner, LinearOperator};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::lattice::{
    centered_nucleus, nuclear_field, to_atomic_units, Boundary, ChemistryParams, LatticeSpec,
    OffsetAxis,
};
use crate::linalg::{norm, scale};

/// Unit-normalized real amplitude on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalField {
    lattice: LatticeSpec,
    values: Vec<f64>,
}

impl OrbitalField {
    /// Wraps `values`, normalizing them to unit L2 norm.
    pub fn new(lattice: LatticeSpec, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.num_sites() {
            return Err(Error::DimensionMismatch {
                expected: lattice.num_sites(),
                got: values.len(),
            });
        }
        let nv = norm(&values);
        if !(nv > 0.0 && nv.is_finite()) {
            return Err(Error::InvalidParams("orbital has zero or non-finite norm".into()));
        }
        scale(1.0 / nv, &mut values);
        Ok(Self { lattice, values })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending, lattice units.
    pub energies: Vec<f64>,
    pub orbitals: Vec<OrbitalField>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// `H psi = -t_f sum_nn psi + diag * psi`, with `diag = -W` for the bare
/// nuclear problem. Mean-field terms are added to `diag`.
#[derive(Debug, Clone)]
pub struct LatticeHamiltonian {
    lattice: LatticeSpec,
    t_f: f64,
    diag: Vec<f64>,
}

impl LatticeHamiltonian {
    pub fn new(lattice: &LatticeSpec, params: &ChemistryParams) -> Result<Self> {
        let mut diag = nuclear_field(lattice, params, false)?;
        diag.iter_mut().for_each(|w| *w = -*w);
        Self::from_diagonal(lattice, params.t_f, diag)
    }

    pub fn from_diagonal(lattice: &LatticeSpec, t_f: f64, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != lattice.num_sites() {
            return Err(Error::DimensionMismatch {
                expected: lattice.num_sites(),
                got: diag.len(),
            });
        }
        Ok(Self {
            lattice: *lattice,
            t_f,
            diag,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Copy with `extra` added to the on-site term.
    pub fn with_extra_potential(&self, extra: &[f64]) -> Self {
        let diag = self.diag.iter().zip(extra).map(|(a, b)| a + b).collect();
        Self {
            lattice: self.lattice,
            t_f: self.t_f,
            diag,
        }
    }

    /// `<a|H|b>`
    pub fn matrix_element(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut hb = vec![0.0; b.len()];
        self.apply(b, &mut hb);
        crate::linalg::dot(a, &hb)
    }
}

impl LinearOperator for LatticeHamiltonian {
    fn dim(&self) -> usize {
        self.lattice.num_sites()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.lattice.n();
        let periodic = self.lattice.boundary() == Boundary::Periodic;
        let nn = n * n;
        let t = self.t_f;
        y.par_chunks_mut(nn).enumerate().for_each(|(z, plane)| {
            for yy in 0..n {
                for xx in 0..n {
                    let i = xx + n * (yy + n * z);
                    let mut s = 0.0;
                    if xx > 0 {
                        s += x[i - 1];
                    } else if periodic {
                        s += x[i + n - 1];
                    }
                    if xx + 1 < n {
                        s += x[i + 1];
                    } else if periodic {
                        s += x[i + 1 - n];
                    }
                    if yy > 0 {
                        s += x[i - n];
                    } else if periodic {
                        s += x[i + nn - n];
                    }
                    if yy + 1 < n {
                        s += x[i + n];
                    } else if periodic {
                        s += x[i + n - nn];
                    }
                    if z > 0 {
                        s += x[i - nn];
                    } else if periodic {
                        s += x[i + nn * (n - 1)];
                    }
                    if z + 1 < n {
                        s += x[i + nn];
                    } else if periodic {
                        s += x[i - nn * (n - 1)];
                    }
                    plane[xx + n * yy] = -t * s + self.diag[i] * x[i];
                }
            }
        });
    }
}

/// `(-t_f sum_nn - W) psi` for the nuclei in `params`.
pub fn apply_hamiltonian(
    psi: &[f64],
    lattice: &LatticeSpec,
    params: &ChemistryParams,
) -> Result<Vec<f64>> {
    if psi.len() != lattice.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            got: psi.len(),
        });
    }
    let h = LatticeHamiltonian::new(lattice, params)?;
    let mut out = vec![0.0; psi.len()];
    h.apply(psi, &mut out);
    Ok(out)
}

/// Lowest `k` eigenpairs of an assembled Hamiltonian.
pub fn solve_hamiltonian(
    h: &LatticeHamiltonian,
    k: usize,
    opts: &DavidsonOptions,
    initial: &[Vec<f64>],
) -> Result<Spectrum> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be >= 1".into()));
    }
    let pre = KineticPreconditioner::new(h.lattice(), h.t_f());
    let r = davidson(h, &pre, k, opts, initial)?;
    let orbitals = r
        .vectors
        .into_iter()
        .map(|v| OrbitalField::new(*h.lattice(), v))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        energies: r.values,
        orbitals,
        residuals: r.residuals,
        iterations: r.iterations,
    })
}

pub fn lowest_eigenpairs(
    lattice: &LatticeSpec,
    params: &ChemistryParams,
    k: usize,
    opts: &DavidsonOptions,
) -> Result<Spectrum> {
    let h = LatticeHamiltonian::new(lattice, params)?;
    solve_hamiltonian(&h, k, opts, &[])
}

/// Open `n^3` lattice with one unit charge at `(m, m + 1/2, m)` and `t_f = 1`,
/// `v0 = 1 / ratio`.
pub fn hydrogen_setup(n: usize, ratio: f64) -> Result<(LatticeSpec, ChemistryParams)> {
    let lattice = LatticeSpec::open(n)?;
    let nuc = centered_nucleus(&lattice, 1.0, OffsetAxis::Y);
    let params = ChemistryParams::from_ratio(ratio, vec![nuc], 1)?;
    Ok((lattice, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub ratio: f64,
    pub level: usize,
    pub energy_ry: f64,
    pub residual: f64,
}

/// Hydrogen spectra for each `t_f / v0`, rows ordered by (ratio, level).
///
/// Ratios are solved as independent jobs on the current rayon pool.
pub fn hydrogen_scan(
    n: usize,
    ratios: &[f64],
    k: usize,
    opts: &DavidsonOptions,
) -> Result<Vec<ScanRow>> {
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParams(format!("ratio must be positive, got {r}")));
    }
    let spectra: Vec<Result<(f64, Spectrum, ChemistryParams)>> = ratios
        .par_iter()
        .map(|&ratio| {
            let run = || -> Result<_> {
                let (lat, params) = hydrogen_setup(n, ratio)?;
                let s = lowest_eigenpairs(&lat, &params, k, opts)?;
                Ok((ratio, s, params))
            };
            run().map_err(|e| Error::AtRatio {
                ratio,
                source: Box::new(e),
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(ratios.len() * k);
    for item in spectra {
        let (ratio, s, params) = item?;
        for (level, (e, res)) in s.energies.iter().zip(&s.residuals).enumerate() {
            rows.push(ScanRow {
                ratio,
                level,
                energy_ry: to_atomic_units(*e, &params),
                residual: *res,
            });
        }
    }
    Ok(rows)
}

/// Maximum number of radial shells used by [`fit_bohr_radius`].
pub const BOHR_FIT_BINS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrFit {
    /// `-1 / slope` of log amplitude, i.e. `psi ~ exp(-r / a0)`.
    pub a0: f64,
    /// The same decay read as a density, `rho ~ exp(-r / a)`, which gives `a0 / 2`.
    pub a0_density_convention: f64,
    pub bins_used: usize,
    /// `(mean radius, mean |psi| / first-shell mean)` per shell.
    pub profile: Vec<(f64, f64)>,
}

/// Fits the exponential decay of the spherically averaged amplitude around
/// the first nucleus in `params`.
///
/// Shells have unit width. Only shells lying entirely inside the grid are
/// used, at most [`BOHR_FIT_BINS`]; `bins_used` reports how many.
pub fn fit_bohr_radius(ground: &OrbitalField, params: &ChemistryParams) -> Result<BohrFit> {
    let center = params
        .nuclei
        .first()
        .ok_or_else(|| Error::InvalidParams("no nucleus to center the fit on".into()))?
        .pos;
    let lat = ground.lattice();
    let hi = (lat.n() - 1) as f64;
    let reach = center
        .iter()
        .map(|&c| c.min(hi - c))
        .fold(f64::INFINITY, f64::min);
    let bins = (reach.floor().max(0.0) as usize).min(BOHR_FIT_BINS);
    if bins < 2 {
        return Err(Error::DegenerateFit(format!(
            "only {bins} complete radial shells fit in the lattice"
        )));
    }
    let mut sum_r = vec![0.0; bins];
    let mut sum_a = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (i, v) in ground.values().iter().enumerate() {
        let r = lat.distance(lat.unflatten(i), center);
        let b = r.floor() as usize;
        if b < bins {
            sum_r[b] += r;
            sum_a[b] += v.abs();
            count[b] += 1;
        }
    }
    if count.contains(&0) {
        return Err(Error::DegenerateFit("empty radial shell".into()));
    }
    let first = sum_a[0] / count[0] as f64;
    let profile: Vec<(f64, f64)> = (0..bins)
        .map(|b| (sum_r[b] / count[b] as f64, sum_a[b] / count[b] as f64 / first))
        .collect();
    let x: Vec<f64> = profile.iter().map(|p| p.0).collect();
    let y: Vec<f64> = profile.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&x, &y)?;
    if !(line.slope < 0.0) {
        return Err(Error::DegenerateFit(format!(
            "amplitude does not decay (slope {})",
            line.slope
        )));
    }
    let a0 = -1.0 / line.slope;
    Ok(BohrFit {
        a0,
        a0_density_convention: a0 / 2.0,
        bins_used: bins,
        profile,
    })
}

/// Inclusive ratio window in which finite-size and strong-discretization
/// effects are both negligible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioWindow {
    pub lower: f64,
    pub upper: f64,
}

impl RatioWindow {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.lower && r <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    /// `|E - E_ref| ~ prefactor * ratio^exponent`
    pub prefactor: f64,
    pub points: Vec<(f64, f64)>,
}

pub const MIN_EXPONENT_POINTS: usize = 4;

/// Slope of `log |E0 - reference|` against `log ratio` over the window.
///
/// `ground` holds `(ratio, E0 in Ry)` pairs.
pub fn fit_error_exponent(
    ground: &[(f64, f64)],
    reference: f64,
    window: RatioWindow,
) -> Result<ExponentFit> {
    let points: Vec<(f64, f64)> = ground
        .iter()
        .filter(|(r, _)| window.contains(*r))
        .map(|&(r, e)| (r, (e - reference).abs()))
        .collect();
    if points.len() < MIN_EXPONENT_POINTS {
        return Err(Error::EmptyWindow(format!(
            "{} ratios inside [{}, {}], need {MIN_EXPONENT_POINTS}; the window must respect \
             inequality (a): 1 << 2 t_f/v0 << N / n_e^(1/3)",
            points.len(),
            window.lower,
            window.upper
        )));
    }
    if points.iter().any(|(_, err)| *err == 0.0) {
        return Err(Error::DegenerateFit(
            "degenerate residuals: zero error at some ratio, log undefined".into(),
        ));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&x, &y)?;
    Ok(ExponentFit {
        exponent: line.slope,
        prefactor: line.intercept.exp(),
        points,
    })
}

/// Ground-state energies `(ratio, E0)` extracted from scan rows.
pub fn ground_energies(rows: &[ScanRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.level == 0)
        .map(|r| (r.ratio, r.energy_ry))
        .collect()
}
