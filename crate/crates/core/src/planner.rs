//! Choice of `t_f / v0` along a molecular curve and detection of the ratio
//! where finite-size error overtakes discretization error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::DavidsonOptions;
use crate::error::{Error, Result};
use crate::fit::{durbin_watson, fit_line, sign_runs};
use crate::lattice::{molecule_nuclei, to_atomic_units, ChemistryParams, LatticeSpec, OffsetAxis};
use crate::single_particle::{hydrogen_setup, lowest_eigenpairs};
use crate::two_electron::{molecular_point, MolecularOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioSchedule {
    /// `intercept + slope * d`
    Linear { intercept: f64, slope: f64 },
    Fixed { ratio: f64 },
    /// Piecewise-linear interpolation between `(d, ratio)` nodes.
    Table { points: Vec<(f64, f64)> },
}

impl RatioSchedule {
    pub fn ratio_at(&self, d_lattice: f64) -> Result<f64> {
        let r = match self {
            RatioSchedule::Linear { intercept, slope } => intercept + slope * d_lattice,
            RatioSchedule::Fixed { ratio } => *ratio,
            RatioSchedule::Table { points } => {
                let (first, last) = match (points.first(), points.last()) {
                    (Some(f), Some(l)) => (f, l),
                    _ => return Err(Error::InvalidParams("empty schedule table".into())),
                };
                if d_lattice < first.0 || d_lattice > last.0 {
                    return Err(Error::InvalidParams(format!(
                        "d = {d_lattice} outside schedule table [{}, {}]",
                        first.0, last.0
                    )));
                }
                let k = points.partition_point(|p| p.0 < d_lattice);
                if k == 0 || points[k].0 == d_lattice {
                    points[k].1
                } else {
                    let (a, b) = (points[k - 1], points[k]);
                    a.1 + (b.1 - a.1) * (d_lattice - a.0) / (b.0 - a.0)
                }
            }
        };
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "schedule gives non-positive ratio {r} at d = {d_lattice}"
            )));
        }
        Ok(r)
    }

    /// Parses `linear:INTERCEPT,SLOPE`, `fixed:RATIO` or `table:D=R;D=R;...`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("cannot parse schedule '{text}'"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let (kind, body) = text.split_once(':').ok_or_else(bad)?;
        let schedule = match kind.trim() {
            "linear" => {
                let (a, b) = body.split_once(',').ok_or_else(bad)?;
                RatioSchedule::Linear {
                    intercept: num(a)?,
                    slope: num(b)?,
                }
            }
            "fixed" => RatioSchedule::Fixed { ratio: num(body)? },
            "table" => {
                let mut points = body
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|entry| {
                        let (d, r) = entry.split_once('=').ok_or_else(bad)?;
                        Ok((num(d)?, num(r)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                if points.is_empty() || points.windows(2).any(|w| w[0].0 == w[1].0) {
                    return Err(bad());
                }
                RatioSchedule::Table { points }
            }
            _ => return Err(bad()),
        };
        Ok(schedule)
    }
}

impl std::str::FromStr for RatioSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RatioSchedule::parse(s)
    }
}

impl std::fmt::Display for RatioSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RatioSchedule::Linear { intercept, slope } => write!(f, "linear:{intercept},{slope}"),
            RatioSchedule::Fixed { ratio } => write!(f, "fixed:{ratio}"),
            RatioSchedule::Table { points } => {
                write!(f, "table:")?;
                for (i, (d, r)) in points.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{d}={r}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn schedule_ratio(schedule: &RatioSchedule, d_lattice: f64) -> Result<f64> {
    schedule.ratio_at(d_lattice)
}

/// Unweighted least-squares line through per-separation critical ratios.
pub fn fit_schedule(points: &[(f64, f64)]) -> Result<RatioSchedule> {
    let (d, r): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
    let line = fit_line(&d, &r)?;
    Ok(RatioSchedule::Linear {
        intercept: line.intercept,
        slope: line.slope,
    })
}

/// Energy (Rydberg) of some system at lattice side `n`, nuclear separation
/// `d_lattice` sites and `t_f / v0 = ratio`.
pub trait EnergySolver: Sync {
    fn energy(&self, n: usize, d_lattice: usize, ratio: f64) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepartureRow {
    pub ratio: f64,
    pub e_small: f64,
    pub e_large: f64,
    pub deviation: f64,
    /// `threshold * |e_small - n|`
    pub allowed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepartureStatus {
    /// The two sizes agree up to a ratio and separate beyond it.
    Departure,
    /// The sizes never separate within the scan.
    NoFiniteSizeSignal,
    /// Fewer than three points precede the departure, or the fit window did
    /// not settle.
    Unconverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepartureAnalysis {
    pub status: DepartureStatus,
    /// Largest ratio of the leading run of agreeing points.
    pub critical_ratio: Option<f64>,
    pub fit_m: f64,
    pub fit_n: f64,
    pub points_in_fit: usize,
    pub residual_sign_runs: usize,
    pub durbin_watson: f64,
    pub table: Vec<DepartureRow>,
}

pub const DEFAULT_DEPARTURE_THRESHOLD: f64 = 0.1;

fn scaling_fit(rows: &[(f64, f64, f64)]) -> Result<(f64, f64, Vec<f64>)> {
    let u: Vec<f64> = rows.iter().map(|r| r.0.powi(-2)).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let line = fit_line(&u, &e)?;
    Ok((line.slope, line.intercept, line.residuals))
}

/// Finds where `e_small` stops tracking `e_large`.
///
/// `rows` holds `(ratio, e_small, e_large)`. The large-lattice energies over
/// the agreeing window are fitted to `m x^-2 + n`; a point agrees while
/// `|e_small - e_large| <= threshold |e_small - n|`. Window and fit are
/// iterated until the window stops changing.
pub fn departure_analysis(rows: &[(f64, f64, f64)], threshold: f64) -> Result<DepartureAnalysis> {
    if rows.len() < 3 {
        return Err(Error::EmptyWindow(format!("need at least 3 scan points, got {}", rows.len())));
    }
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut window = rows.len();
    let mut status = DepartureStatus::Unconverged;
    let (mut m, mut n, mut resid) = scaling_fit(&rows)?;
    let mut fit_len = rows.len();
    for _ in 0..50 {
        let agree = rows
            .iter()
            .take_while(|r| (r.1 - r.2).abs() <= threshold * (r.1 - n).abs())
            .count();
        if agree < 3 {
            status = DepartureStatus::Unconverged;
            window = agree;
            break;
        }
        if agree == window {
            status = if agree == rows.len() {
                DepartureStatus::NoFiniteSizeSignal
            } else {
                DepartureStatus::Departure
            };
            break;
        }
        window = agree;
        (m, n, resid) = scaling_fit(&rows[..window])?;
        fit_len = window;
    }
    let table = rows
        .iter()
        .map(|r| DepartureRow {
            ratio: r.0,
            e_small: r.1,
            e_large: r.2,
            deviation: (r.1 - r.2).abs(),
            allowed: threshold * (r.1 - n).abs(),
        })
        .collect();
    let critical_ratio = match status {
        DepartureStatus::Departure => Some(rows[window - 1].0),
        _ => None,
    };
    Ok(DepartureAnalysis {
        status,
        critical_ratio,
        fit_m: m,
        fit_n: n,
        points_in_fit: fit_len,
        residual_sign_runs: sign_runs(&resid),
        durbin_watson: durbin_watson(&resid),
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRatioResult {
    pub d_atomic: f64,
    pub n_small: usize,
    pub n_large: usize,
    /// Nuclear separations (sites) scanned; ratio = d / (2 d_atomic).
    pub d_lattice: Vec<usize>,
    pub analysis: DepartureAnalysis,
}

/// Scans `d_lattice = 1 ..= min(d_max, n_small / 2)` at fixed `d / a0`, so
/// that each separation implies `ratio = d / (2 d_atomic)`, solving at both
/// lattice sizes.
pub fn critical_ratio(
    d_atomic: f64,
    n_small: usize,
    n_large: usize,
    solver: &dyn EnergySolver,
    d_max: usize,
    threshold: f64,
) -> Result<CriticalRatioResult> {
    if !(d_atomic > 0.0) {
        return Err(Error::InvalidParams(format!("d/a0 must be > 0, got {d_atomic}")));
    }
    if n_large < n_small {
        return Err(Error::InvalidParams(format!(
            "large lattice ({n_large}) must not be smaller than the small one ({n_small})"
        )));
    }
    let top = d_max.min(n_small / 2);
    let ds: Vec<usize> = (1..=top).collect();
    let jobs: Vec<(usize, usize)> = ds
        .iter()
        .flat_map(|&d| [(d, n_small), (d, n_large)])
        .collect();
    let energies = jobs
        .par_iter()
        .map(|&(d, n)| {
            let ratio = d as f64 / (2.0 * d_atomic);
            solver
                .energy(n, d, ratio)
                .map_err(|e| Error::AtRatio { ratio, source: Box::new(e) })
        })
        .collect::<Result<Vec<f64>>>()?;
    let rows: Vec<(f64, f64, f64)> = ds
        .iter()
        .enumerate()
        .map(|(k, &d)| (d as f64 / (2.0 * d_atomic), energies[2 * k], energies[2 * k + 1]))
        .collect();
    let analysis = departure_analysis(&rows, threshold)?;
    Ok(CriticalRatioResult {
        d_atomic,
        n_small,
        n_large,
        d_lattice: ds,
        analysis,
    })
}

/// Centered hydrogen atom; the separation is ignored.
pub struct HydrogenSolver {
    pub davidson: DavidsonOptions,
}

impl EnergySolver for HydrogenSolver {
    fn energy(&self, n: usize, _d_lattice: usize, ratio: f64) -> Result<f64> {
        let (lattice, params) = hydrogen_setup(n, ratio)?;
        let s = lowest_eigenpairs(&lattice, &params, 1, &self.davidson)?;
        Ok(to_atomic_units(s.energies[0], &params))
    }
}

/// One electron bound to two unit nuclei `d_lattice` sites apart, plus the
/// nuclear repulsion.
pub struct MolecularIonSolver {
    pub davidson: DavidsonOptions,
    pub offset_axis: OffsetAxis,
}

impl EnergySolver for MolecularIonSolver {
    fn energy(&self, n: usize, d_lattice: usize, ratio: f64) -> Result<f64> {
        let lattice = LatticeSpec::open(n)?;
        let nuclei = molecule_nuclei(&lattice, d_lattice, 1.0, self.offset_axis)?;
        let params = ChemistryParams::from_ratio(ratio, nuclei.to_vec(), 1)?;
        let s = lowest_eigenpairs(&lattice, &params, 1, &self.davidson)?;
        let d_atomic = d_lattice as f64 / params.bohr_radius();
        Ok(to_atomic_units(s.energies[0], &params) + 2.0 / d_atomic)
    }
}

/// Full two-electron molecular energy including nuclear repulsion.
pub struct MoleculeSolver {
    pub options: MolecularOptions,
}

impl EnergySolver for MoleculeSolver {
    fn energy(&self, n: usize, d_lattice: usize, ratio: f64) -> Result<f64> {
        let lattice = LatticeSpec::open(n)?;
        Ok(molecular_point(&lattice, d_lattice, ratio, &self.options)?.e_total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let s = RatioSchedule::Linear {
            intercept: 4.2,
            slope: -0.065,
        };
        assert_eq!(s.ratio_at(0.0).unwrap(), 4.2);
        assert!((s.ratio_at(29.23).unwrap() - 2.3).abs() < 1e-3);
        assert_eq!(RatioSchedule::Fixed { ratio: 3.0 }.ratio_at(17.0).unwrap(), 3.0);
        assert!(s.ratio_at(100.0).is_err());
    }

    #[test]
    fn schedule_parse_round_trip() {
        for text in ["linear:4.2,-0.065", "fixed:3", "table:0=4.2;10=3.5;20=2.9"] {
            let s = RatioSchedule::parse(text).unwrap();
            assert_eq!(RatioSchedule::parse(&s.to_string()).unwrap(), s);
        }
        let t = RatioSchedule::parse("table:0=4;10=3").unwrap();
        assert!((t.ratio_at(2.5).unwrap() - 3.75).abs() < 1e-15);
        assert!(t.ratio_at(11.0).is_err());
        assert!(RatioSchedule::parse("cubic:1").is_err());
    }

    #[test]
    fn schedule_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (1..10).map(|d| (d as f64, 4.2 - 0.065 * d as f64)).collect();
        match fit_schedule(&pts).unwrap() {
            RatioSchedule::Linear { intercept, slope } => {
                assert!((intercept - 4.2).abs() < 1e-12);
                assert!((slope + 0.065).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
