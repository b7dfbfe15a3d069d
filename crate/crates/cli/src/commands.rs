use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qcsim_core::eigen::DavidsonOptions;
use qcsim_core::lattice::{centered_nucleus, molecule_nuclei, ChemistryParams, LatticeSpec, OffsetAxis, PotentialKind};
use qcsim_core::mediator::{
    check_conditions, effective_interaction_curve, fit_yukawa, reference_setup, yukawa_parameters,
    ConditionReport, CurveMethod, GreenPath, MediatorParams, DEFAULT_DENSE_LIMIT,
};
use qcsim_core::planner::{
    critical_ratio, EnergySolver, HydrogenSolver, MolecularIonSolver, MoleculeSolver, RatioSchedule,
    DEFAULT_DEPARTURE_THRESHOLD,
};
use qcsim_core::single_particle::{fit_bohr_radius, hydrogen_scan, hydrogen_setup, lowest_eigenpairs};
use qcsim_core::snapshot::{write_field, write_field_csv};
use qcsim_core::two_electron::{
    curve_minimum, molecular_curve, separated_atoms_energy, MolecularCurve, MolecularOptions,
    DEFAULT_OVERLAP_FLOOR,
};

use crate::config::{BasisSpec, FloatList, Settings, UsizeList};
use crate::run::{gnuplot_script, sha256_hex, ConditionSummary, Csv, RunContext};
use crate::{Cli, CliError, Command, CommonArgs};

#[derive(Debug, Args)]
pub struct HydrogenArgs {
    /// Lattice side (`lattice.n`).
    #[arg(long)]
    pub n: Option<usize>,
    /// t_f/v0 values, `start:stop:step` or a comma list (`scan.ratios`).
    #[arg(long)]
    pub ratios: Option<FloatList>,
    /// Levels per ratio (`solver.levels`).
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BohrArgs {
    /// Lattice side (`lattice.n`).
    #[arg(long)]
    pub n: Option<usize>,
    /// t_f/v0 values (`scan.ratios`).
    #[arg(long)]
    pub ratios: Option<FloatList>,
}

#[derive(Debug, Args)]
pub struct MediatorArgs {
    /// `mediator.j`
    #[arg(long)]
    pub j: Option<f64>,
    /// `mediator.j_c`
    #[arg(long)]
    pub j_c: Option<f64>,
    /// `mediator.u`
    #[arg(long)]
    pub u: Option<f64>,
    /// `mediator.delta`
    #[arg(long)]
    pub delta: Option<f64>,
    /// `mediator.g`
    #[arg(long)]
    pub g: Option<f64>,
    /// `mediator.j_f` [default: renormalizes to t_f]
    #[arg(long)]
    pub j_f: Option<f64>,
    /// `mediator.n_m`
    #[arg(long)]
    pub n_m: Option<usize>,
    /// `mediator.n_e`
    #[arg(long)]
    pub n_e: Option<usize>,
    /// Fermion lattice side (`lattice.n`).
    #[arg(long)]
    pub lattice_n: Option<usize>,
    /// t_f/v0 on the fermion lattice (`chem.ratio`).
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Lattice v0 [default: the mediated v0] (`chem.v0`).
    #[arg(long)]
    pub v0: Option<f64>,
    /// Margin required by `<<` conditions (`conditions.threshold`).
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MediatorCurveArgs {
    #[command(flatten)]
    pub mediator: MediatorArgs,
    /// Separations, `start:stop[:step]` or a list (`curve.d`).
    #[arg(long)]
    pub d: Option<UsizeList>,
    /// closed | table | exact (`curve.method`).
    #[arg(long)]
    pub method: Option<String>,
    /// Largest dense dimension for `exact` (`curve.dense_limit`).
    #[arg(long)]
    pub dense_limit: Option<usize>,
    /// Yukawa fit window (`fit.r_min`, `fit.r_max`).
    #[arg(long)]
    pub fit_min: Option<f64>,
    #[arg(long)]
    pub fit_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub mediator: MediatorArgs,
}

#[derive(Debug, Args)]
pub struct MoleculeArgs {
    /// Lattice side (`lattice.n`).
    #[arg(long)]
    pub n: Option<usize>,
    /// Orbital counts `n1+n2` (`basis.orbitals`).
    #[arg(long)]
    pub basis: Option<BasisSpec>,
    /// Nuclear separations in sites (`curve.d`).
    #[arg(long)]
    pub d: Option<UsizeList>,
    /// `linear:a,b`, `fixed:r` or `table:d=r;...` (`curve.schedule`).
    #[arg(long)]
    pub schedule: Option<RatioSchedule>,
    /// coulomb | yukawa (`potential.kind`).
    #[arg(long)]
    pub potential: Option<String>,
    /// Yukawa screening length in sites (`potential.length`).
    #[arg(long)]
    pub length: Option<f64>,
    /// Constant pair shift (`potential.offset`).
    #[arg(long)]
    pub offset: Option<f64>,
    /// Add 2/d in Rydberg (`curve.nuclear_repulsion`).
    #[arg(long)]
    pub nuclear_repulsion: Option<bool>,
    /// Also solve the separated atoms at the largest separation (`curve.reference`).
    #[arg(long)]
    pub reference: Option<bool>,
}

#[derive(Debug, Args)]
pub struct H2Args {
    #[command(flatten)]
    pub molecule: MoleculeArgs,
    /// Repulsion scale F (`curve.f`).
    #[arg(long)]
    pub f: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PseudoArgs {
    #[command(flatten)]
    pub molecule: MoleculeArgs,
    /// Repulsion scales F (`curve.f`).
    #[arg(long)]
    pub f: Option<FloatList>,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Fixed separation in Bohr radii (`planner.d_atomic`).
    #[arg(long)]
    pub d_atomic: Option<f64>,
    /// `planner.n_small`
    #[arg(long)]
    pub n_small: Option<usize>,
    /// `planner.n_large`
    #[arg(long)]
    pub n_large: Option<usize>,
    /// Largest separation in sites (`planner.d_max`).
    #[arg(long)]
    pub d_max: Option<usize>,
    /// hydrogen | ion | molecule (`planner.backend`).
    #[arg(long)]
    pub backend: Option<String>,
    /// Relative departure threshold (`planner.threshold`).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Orbital counts for the molecule backend (`basis.orbitals`).
    #[arg(long)]
    pub basis: Option<BasisSpec>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Lattice side (`lattice.n`).
    #[arg(long)]
    pub n: Option<usize>,
    /// t_f/v0 (`chem.ratio`).
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Nuclear separation in sites, 0 for one nucleus (`density.d`).
    #[arg(long)]
    pub d: Option<usize>,
    /// Eigenstate index (`density.level`).
    #[arg(long)]
    pub level: Option<usize>,
    /// Also write the full field as x,y,z,value text (`density.csv`).
    #[arg(long)]
    pub csv: Option<bool>,
}

fn num(v: f64) -> String {
    v.to_string()
}

fn davidson(s: &mut Settings, c: &CommonArgs) -> Result<DavidsonOptions, CliError> {
    let d = DavidsonOptions::default();
    Ok(DavidsonOptions {
        tol: s.get("solver.tol", c.tol, d.tol)?,
        max_iter: s.get("solver.max_iter", c.max_iter, d.max_iter)?,
        seed: s.get("solver.seed", c.seed, d.seed)?,
        ..d
    })
}

fn offset_axis(s: &mut Settings) -> Result<OffsetAxis, CliError> {
    let axis: String = s.get("lattice.offset_axis", None, "y".to_string())?;
    match axis.as_str() {
        "x" => Ok(OffsetAxis::X),
        "y" => Ok(OffsetAxis::Y),
        "z" => Ok(OffsetAxis::Z),
        other => Err(CliError::Usage(format!("lattice.offset_axis must be x, y or z, got `{other}`"))),
    }
}

fn default_out(name: &str) -> PathBuf {
    match std::env::var_os("QCSIM_OUT") {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(name),
        _ => PathBuf::from("runs").join(name),
    }
}

/// Work captured before the output directory exists: resolved settings and
/// a closure producing the outputs.
type Job = Box<dyn FnOnce(&mut RunContext, bool) -> Result<Status, CliError>>;

/// Outcome of a run that produced outputs.
pub enum Status {
    Done,
    /// Outputs were written but some solves failed to converge.
    Partial(String),
}

pub fn run(cli: Cli) -> Result<PathBuf, CliError> {
    if let Some(j) = cli.common.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let name = cli.command.name();
    let mut s = Settings::load(cli.common.config.as_deref())?;
    let job = prepare(cli.command, &cli.common, &mut s)?;
    s.reject_unknown()?;
    let out = cli.common.out.clone().unwrap_or_else(|| default_out(name));
    let mut ctx = RunContext::new(name, out)?;
    let outcome = job(&mut ctx, cli.common.plot);
    if let Err(e) = &outcome {
        ctx.results = json!({ "error": e.to_string() });
    }
    let manifest = ctx.finish(s.resolved(), rayon::current_num_threads())?;
    match outcome? {
        Status::Done => Ok(manifest),
        Status::Partial(msg) => Err(CliError::NotConverged(format!("{msg}; see {}", manifest.display()))),
    }
}

fn prepare(command: Command, c: &CommonArgs, s: &mut Settings) -> Result<Job, CliError> {
    match command {
        Command::HydrogenSpectrum(a) => hydrogen_spectrum(a, c, s),
        Command::BohrFit(a) => bohr_fit(a, c, s),
        Command::MediatorCurve(a) => mediator_curve(a, s),
        Command::CheckConditions(a) => check(a, s),
        Command::H2Curve(a) => {
            let f = s.get("curve.f", a.f, 1.0)?;
            molecule_curves(a.molecule, vec![f], false, c, s)
        }
        Command::PseudoCurve(a) => {
            let f = s.get("curve.f", a.f, FloatList(vec![0.0, 0.5, 1.0]))?;
            molecule_curves(a.molecule, f.0, true, c, s)
        }
        Command::CriticalRatio(a) => critical(a, c, s),
        Command::ExportDensity(a) => density(a, c, s),
    }
}

fn hydrogen_spectrum(a: HydrogenArgs, c: &CommonArgs, s: &mut Settings) -> Result<Job, CliError> {
    let n = s.get("lattice.n", a.n, 100usize)?;
    let ratios = s.get("scan.ratios", a.ratios, "0.25:5:0.25".parse().unwrap())?;
    let levels = s.get("solver.levels", a.levels, 9usize)?;
    let opts = davidson(s, c)?;
    Ok(Box::new(move |ctx, plot| {
        let rows = hydrogen_scan(n, &ratios.0, levels, &opts)?;
        let mut csv = Csv::new(&["ratio", "level", "energy_ry", "residual"]);
        for r in &rows {
            csv.row(&[num(r.ratio), r.level.to_string(), num(r.energy_ry), num(r.residual)]);
        }
        let name = format!("{}.csv", ctx.stem());
        ctx.write(&name, &csv.into_bytes())?;
        if plot {
            let script = gnuplot_script(
                "hydrogen spectrum",
                &name,
                "t_f / v0",
                "E (Ry)",
                &[("1:3", "with points pt 7 ps 0.5 notitle")],
            );
            ctx.write("plot.gp", script.as_bytes())?;
        }
        Ok(Status::Done)
    }))
}

fn bohr_fit(a: BohrArgs, c: &CommonArgs, s: &mut Settings) -> Result<Job, CliError> {
    let n = s.get("lattice.n", a.n, 80usize)?;
    let ratios = s.get("scan.ratios", a.ratios, "1:10:1".parse().unwrap())?;
    let opts = davidson(s, c)?;
    Ok(Box::new(move |ctx, plot| {
        let fits = ratios
            .0
            .par_iter()
            .map(|&ratio| {
                let (lat, params) = hydrogen_setup(n, ratio)?;
                let spec = lowest_eigenpairs(&lat, &params, 1, &opts)?;
                Ok((ratio, fit_bohr_radius(&spec.orbitals[0], &params)?))
            })
            .collect::<Result<Vec<_>, qcsim_core::Error>>()?;
        let mut csv = Csv::new(&[
            "ratio",
            "a0_fit",
            "a0_expected",
            "relative_deviation",
            "a0_density_convention",
            "bins_used",
        ]);
        for (ratio, fit) in &fits {
            let expected = 2.0 * ratio;
            csv.row(&[
                num(*ratio),
                num(fit.a0),
                num(expected),
                num((fit.a0 - expected) / expected),
                num(fit.a0_density_convention),
                fit.bins_used.to_string(),
            ]);
        }
        let name = format!("{}.csv", ctx.stem());
        ctx.write(&name, &csv.into_bytes())?;
        if plot {
            let script = gnuplot_script(
                "Bohr radius",
                &name,
                "t_f / v0",
                "a0 (sites)",
                &[("1:2", "with points pt 7"), ("1:3", "with lines")],
            );
            ctx.write("plot.gp", script.as_bytes())?;
        }
        Ok(Status::Done)
    }))
}

struct MediatorSetup {
    params: MediatorParams,
    lattice_n: usize,
    t_f: f64,
    v0: f64,
    threshold: f64,
}

fn mediator_setup(a: &MediatorArgs, s: &mut Settings) -> Result<MediatorSetup, CliError> {
    let r = reference_setup();
    let d = r.params;
    let mut params = MediatorParams {
        j: s.get("mediator.j", a.j, d.j)?,
        j_c: s.get("mediator.j_c", a.j_c, d.j_c)?,
        u: s.get("mediator.u", a.u, d.u)?,
        delta: s.get("mediator.delta", a.delta, d.delta)?,
        g: s.get("mediator.g", a.g, d.g)?,
        j_f: 0.0,
        n_m: s.get("mediator.n_m", a.n_m, d.n_m)?,
        n_e: s.get("mediator.n_e", a.n_e, d.n_e)?,
    };
    let j_f = s.get_opt("mediator.j_f", a.j_f)?;
    let lattice_n = s.get("lattice.n", a.lattice_n, r.lattice_n)?;
    let ratio = s.get("chem.ratio", a.ratio, r.t_f / r.v0)?;
    let v0_flag = s.get_opt("chem.v0", a.v0)?;
    let threshold = s.get("conditions.threshold", a.threshold, r.threshold)?;
    params.validate()?;
    let v0 = match v0_flag {
        Some(v) => v,
        None => yukawa_parameters(&params)?.v0,
    };
    let t_f = ratio * v0;
    // Without an explicit bare hopping, pick the one that renormalizes to t_f.
    params.j_f = j_f.unwrap_or_else(|| {
        let ne = params.n_e as f64;
        if params.n_e > 1 {
            t_f * ne / (ne - 1.0)
        } else {
            t_f
        }
    });
    Ok(MediatorSetup {
        params,
        lattice_n,
        t_f,
        v0,
        threshold,
    })
}

fn conditions_output(ctx: &mut RunContext, report: &ConditionReport) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Other(e.to_string()))? + "\n";
    ctx.write("conditions.json", text.as_bytes())?;
    ctx.condition_report = Some(ConditionSummary {
        threshold: report.threshold,
        all_satisfied: report.all_satisfied(),
        failing: report.failing().iter().map(|c| c.name().to_string()).collect(),
        report_sha256: sha256_hex(text.as_bytes()),
    });
    Ok(())
}

fn check(a: CheckArgs, s: &mut Settings) -> Result<Job, CliError> {
    let m = mediator_setup(&a.mediator, s)?;
    Ok(Box::new(move |ctx, _| {
        let report = check_conditions(&m.params, m.lattice_n, m.t_f, m.v0, m.threshold)?;
        for cond in &report.conditions {
            println!(
                "{:<8} {:<32} margin {:>12.4e}  {}",
                cond.id.name(),
                cond.inequality,
                cond.margin,
                if cond.satisfied { "ok" } else { "VIOLATED" }
            );
        }
        conditions_output(ctx, &report)?;
        ctx.results = json!({ "all_satisfied": report.all_satisfied() });
        Ok(Status::Done)
    }))
}

fn mediator_curve(a: MediatorCurveArgs, s: &mut Settings) -> Result<Job, CliError> {
    let m = mediator_setup(&a.mediator, s)?;
    let ds = s.get("curve.d", a.d, UsizeList((1..=40).collect()))?;
    let method_name = s.get("curve.method", a.method, "table".to_string())?;
    let dense_limit = s.get("curve.dense_limit", a.dense_limit, DEFAULT_DENSE_LIMIT)?;
    let r_min = s.get("fit.r_min", a.fit_min, 2.0)?;
    let r_max = s.get("fit.r_max", a.fit_max, 20.0)?;
    let method = match method_name.as_str() {
        "closed" => CurveMethod::Closed { path: GreenPath::Direct },
        "table" => CurveMethod::Closed { path: GreenPath::Table },
        "exact" => CurveMethod::Exact { dense_limit },
        other => {
            return Err(CliError::Usage(format!(
                "curve.method must be closed, table or exact, got `{other}`"
            )))
        }
    };
    Ok(Box::new(move |ctx, plot| {
        let report = check_conditions(&m.params, m.lattice_n, m.t_f, m.v0, m.threshold)?;
        conditions_output(ctx, &report)?;
        let curve = effective_interaction_curve(&ds.0, &m.params, method)?;
        let mut csv = Csv::new(&["d", "e2", "e1", "v_eff", "yukawa_prediction"]);
        for p in &curve.points {
            csv.row(&[p.d.to_string(), num(p.e2), num(p.e1), num(p.v_eff), num(p.yukawa_prediction)]);
        }
        let name = format!("{}.csv", ctx.stem());
        ctx.write(&name, &csv.into_bytes())?;
        let fit = fit_yukawa(&curve, r_min, r_max);
        ctx.results = json!({
            "params": curve.params,
            "predicted": curve.yukawa,
            "asymptote": curve.asymptote,
            "fit": match &fit {
                Ok(f) => json!({
                    "v0": f.v0,
                    "length": f.length,
                    "points_used": f.points_used,
                    "v0_ratio": f.v0 / curve.yukawa.v0,
                    "length_ratio": f.length / curve.yukawa.length,
                }),
                Err(e) => json!({ "error": e.to_string() }),
            },
        });
        if plot {
            let script = gnuplot_script(
                "mediated interaction",
                &name,
                "d (sites)",
                "V_eff",
                &[("1:4", "with points pt 7"), ("1:5", "with lines dt 2")],
            );
            ctx.write("plot.gp", script.as_bytes())?;
        }
        Ok(Status::Done)
    }))
}

fn molecular_options(
    a: &MoleculeArgs,
    c: &CommonArgs,
    s: &mut Settings,
) -> Result<(usize, MolecularOptions), CliError> {
    let n = s.get("lattice.n", a.n, 40usize)?;
    let basis = s.get("basis.orbitals", a.basis, BasisSpec { n1: 8, n2: 8 })?;
    let kind = s.get("potential.kind", a.potential.clone(), "coulomb".to_string())?;
    let length = s.get_opt("potential.length", a.length)?;
    let offset = s.get("potential.offset", a.offset, 0.0)?;
    let potential = match kind.as_str() {
        "coulomb" => {
            if length.is_some() || offset != 0.0 {
                return Err(CliError::Usage(
                    "potential.length and potential.offset only apply to potential.kind = yukawa".into(),
                ));
            }
            PotentialKind::Coulomb
        }
        "yukawa" => PotentialKind::Yukawa {
            length: length.ok_or_else(|| CliError::Usage("potential.kind = yukawa needs potential.length".into()))?,
            offset,
        },
        other => return Err(CliError::Usage(format!("potential.kind must be coulomb or yukawa, got `{other}`"))),
    };
    let d = MolecularOptions::default();
    let opts = MolecularOptions {
        n1: basis.n1,
        n2: basis.n2,
        potential,
        nuclear_repulsion: s.get("curve.nuclear_repulsion", a.nuclear_repulsion, true)?,
        offset_axis: offset_axis(s)?,
        davidson: davidson(s, c)?,
        hf_max_sweeps: s.get("hf.max_sweeps", None, d.hf_max_sweeps)?,
        overlap_floor: s.get("basis.overlap_floor", None, DEFAULT_OVERLAP_FLOOR)?,
        ..d
    };
    Ok((n, opts))
}

#[derive(Serialize)]
struct CurveSummary {
    f: f64,
    minimum: Option<(f64, f64)>,
    reference: Option<f64>,
    binding_depth: Option<f64>,
    points: usize,
    failures: usize,
}

fn molecule_curves(
    a: MoleculeArgs,
    fs: Vec<f64>,
    with_f_column: bool,
    c: &CommonArgs,
    s: &mut Settings,
) -> Result<Job, CliError> {
    let (n, opts) = molecular_options(&a, c, s)?;
    let ds = s.get("curve.d", a.d.clone(), UsizeList((4..=30).step_by(2).collect()))?;
    let schedule = s.get(
        "curve.schedule",
        a.schedule.clone(),
        RatioSchedule::Linear {
            intercept: 4.2,
            slope: -0.065,
        },
    )?;
    let reference = s.get("curve.reference", a.reference, true)?;
    if let Some(f) = fs.iter().find(|f| !(**f >= 0.0)) {
        return Err(CliError::Usage(format!("repulsion scale must be >= 0, got {f}")));
    }
    let lattice = LatticeSpec::open(n)?;
    for &d in &ds.0 {
        schedule.ratio_at(d as f64)?;
    }
    Ok(Box::new(move |ctx, plot| {
        let mut header = vec![
            "d_lattice",
            "d_atomic",
            "ratio",
            "e_electronic_ry",
            "e_total_ry",
            "basis_n",
            "hf_sweeps",
            "e_electronic_offset_free_ry",
            "e_h2plus_ry",
            "dropped_orbitals",
        ];
        if with_f_column {
            header.insert(0, "f");
        }
        let mut csv = Csv::new(&header);
        let mut fail_csv = Csv::new(&["f", "d_lattice", "ratio", "convergence", "error"]);
        let mut summaries = Vec::new();
        let mut n_fail = 0usize;
        let mut n_conv_fail = 0usize;
        let ref_energy = match (reference, ds.0.iter().max()) {
            (true, Some(&d)) => {
                let ratio = schedule.ratio_at(d as f64)?;
                Some(separated_atoms_energy(&lattice, d, ratio, opts.offset_axis, &opts.davidson)?)
            }
            _ => None,
        };
        for &f in &fs {
            let o = MolecularOptions {
                repulsion_scale: f,
                ..opts
            };
            let MolecularCurve { mut points, failures } = molecular_curve(&ds.0, &lattice, &schedule, &o);
            points.sort_by_key(|p| p.d_lattice);
            for p in &points {
                let dropped: Vec<String> = p.dropped_orbitals.iter().map(|t| format!("{t:?}")).collect();
                let mut row = vec![
                    p.d_lattice.to_string(),
                    num(p.d_atomic),
                    num(p.ratio),
                    num(p.e_electronic),
                    num(p.e_total),
                    p.basis_size.to_string(),
                    p.hf_sweeps.to_string(),
                    num(p.e_electronic_offset_free),
                    num(p.e_h2plus),
                    dropped.join(" "),
                ];
                if with_f_column {
                    row.insert(0, num(f));
                }
                csv.row(&row);
            }
            for fl in &failures {
                n_fail += 1;
                n_conv_fail += fl.convergence as usize;
                fail_csv.row(&[
                    num(f),
                    fl.d_lattice.to_string(),
                    fl.ratio.map(num).unwrap_or_default(),
                    fl.convergence.to_string(),
                    format!("\"{}\"", fl.error.replace('"', "'")),
                ]);
            }
            let minimum = curve_minimum(&points);
            summaries.push(CurveSummary {
                f,
                minimum,
                reference: ref_energy,
                binding_depth: match (minimum, ref_energy) {
                    (Some((_, e)), Some(r)) => Some(r - e),
                    _ => None,
                },
                points: points.len(),
                failures: failures.len(),
            });
        }
        let name = format!("{}.csv", ctx.stem());
        ctx.write(&name, &csv.into_bytes())?;
        if n_fail > 0 {
            ctx.write("failures.csv", &fail_csv.into_bytes())?;
        }
        ctx.results = json!({ "curves": summaries });
        if plot {
            let using = if with_f_column { "3:6" } else { "2:5" };
            let script = gnuplot_script(
                "H2 potential energy",
                &name,
                "d / a0",
                "E (Ry)",
                &[(using, "with linespoints pt 7 notitle")],
            );
            ctx.write("plot.gp", script.as_bytes())?;
        }
        if n_conv_fail > 0 {
            Ok(Status::Partial(format!("{n_conv_fail} curve points did not converge")))
        } else if n_fail > 0 {
            Err(CliError::Usage(format!("{n_fail} curve points failed; see failures.csv")))
        } else {
            Ok(Status::Done)
        }
    }))
}

fn critical(a: CriticalArgs, c: &CommonArgs, s: &mut Settings) -> Result<Job, CliError> {
    let d_atomic = s.get("planner.d_atomic", a.d_atomic, 1.4)?;
    let n_small = s.get("planner.n_small", a.n_small, 75usize)?;
    let n_large = s.get("planner.n_large", a.n_large, 100usize)?;
    let d_max = s.get("planner.d_max", a.d_max, 14usize)?;
    let threshold = s.get("planner.threshold", a.threshold, DEFAULT_DEPARTURE_THRESHOLD)?;
    let backend = s.get("planner.backend", a.backend, "molecule".to_string())?;
    let davidson = davidson(s, c)?;
    let offset_axis = offset_axis(s)?;
    let solver: Box<dyn EnergySolver + Send> = match backend.as_str() {
        "hydrogen" => Box::new(HydrogenSolver { davidson }),
        "ion" => Box::new(MolecularIonSolver { davidson, offset_axis }),
        "molecule" => {
            let basis = s.get("basis.orbitals", a.basis, BasisSpec { n1: 2, n2: 2 })?;
            Box::new(MoleculeSolver {
                options: MolecularOptions {
                    n1: basis.n1,
                    n2: basis.n2,
                    offset_axis,
                    davidson,
                    ..MolecularOptions::default()
                },
            })
        }
        other => {
            return Err(CliError::Usage(format!(
                "planner.backend must be hydrogen, ion or molecule, got `{other}`"
            )))
        }
    };
    Ok(Box::new(move |ctx, plot| {
        let r = critical_ratio(d_atomic, n_small, n_large, solver.as_ref(), d_max, threshold)?;
        let mut csv = Csv::new(&["d_lattice", "ratio", "e_small_ry", "e_large_ry", "deviation", "allowed"]);
        for (d, row) in r.d_lattice.iter().zip(&r.analysis.table) {
            csv.row(&[
                d.to_string(),
                num(row.ratio),
                num(row.e_small),
                num(row.e_large),
                num(row.deviation),
                num(row.allowed),
            ]);
        }
        let name = format!("{}.csv", ctx.stem());
        ctx.write(&name, &csv.into_bytes())?;
        let a = &r.analysis;
        let record = json!({
            "backend": backend,
            "d_atomic": r.d_atomic,
            "n_small": r.n_small,
            "n_large": r.n_large,
            "status": a.status,
            "critical_ratio": a.critical_ratio,
            "fit_m": a.fit_m,
            "fit_n": a.fit_n,
            "points_in_fit": a.points_in_fit,
            "residual_sign_runs": a.residual_sign_runs,
            "durbin_watson": a.durbin_watson,
        });
        ctx.write_json("result.json", &record)?;
        ctx.results = record;
        if plot {
            let script = gnuplot_script(
                "finite-size departure",
                &name,
                "t_f / v0",
                "E (Ry)",
                &[("2:3", "with linespoints pt 7"), ("2:4", "with linespoints pt 5")],
            );
            ctx.write("plot.gp", script.as_bytes())?;
        }
        Ok(Status::Done)
    }))
}

fn density(a: DensityArgs, c: &CommonArgs, s: &mut Settings) -> Result<Job, CliError> {
    let n = s.get("lattice.n", a.n, 40usize)?;
    let ratio = s.get("chem.ratio", a.ratio, 3.0)?;
    let d = s.get("density.d", a.d, 0usize)?;
    let level = s.get("density.level", a.level, 0usize)?;
    let full_csv = s.get("density.csv", a.csv, false)?;
    let axis = offset_axis(s)?;
    let opts = davidson(s, c)?;
    let lattice = LatticeSpec::open(n)?;
    let nuclei = if d == 0 {
        vec![centered_nucleus(&lattice, 1.0, axis)]
    } else {
        molecule_nuclei(&lattice, d, 1.0, axis)?.to_vec()
    };
    let params = ChemistryParams::from_ratio(ratio, nuclei, 1)?;
    Ok(Box::new(move |ctx, plot| {
        let spec = lowest_eigenpairs(&lattice, &params, level + 1, &opts)?;
        let rho: Vec<f64> = spec.orbitals[level].values().iter().map(|v| v * v).collect();
        let mut bin = Vec::new();
        write_field(&mut bin, &lattice, &rho)?;
        ctx.write("density.bin", &bin)?;
        if full_csv {
            let mut text = Vec::new();
            write_field_csv(&mut text, &lattice, &rho)?;
            ctx.write("density.csv", &text)?;
        }
        // Plane through the nuclei: z = m.
        let m = lattice.center();
        let mut slice = Csv::new(&["x", "y", "density"]);
        for y in 0..n {
            for x in 0..n {
                slice.row(&[x.to_string(), y.to_string(), num(rho[lattice.flatten([x, y, m])])]);
            }
        }
        let name = format!("{}.csv", ctx.stem());
        ctx.write(&name, &slice.into_bytes())?;
        ctx.results = json!({
            "energy_lattice": spec.energies[level],
            "residual": spec.residuals[level],
            "nuclei": params.nuclei,
        });
        if plot {
            let script = format!(
                "set datafile separator ','\nset view map\nset size square\n\
                 set xlabel 'x'\nset ylabel 'y'\n\
                 splot '{name}' every ::1 using 1:2:3 with image notitle\n"
            );
            ctx.write("plot.gp", script.as_bytes())?;
        }
        Ok(Status::Done)
    }))
}
