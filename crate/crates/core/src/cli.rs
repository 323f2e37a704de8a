//! Command-line front end. Every command writes newline-delimited JSON: a
//! header record carrying the version and timestamp, then one record per
//! report.
//!
//! Exit codes: 0 all PASS, 1 some FAIL, 2 usage or validation error,
//! 3 some INCONCLUSIVE (or a solver that did not converge).

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::kernels::buser_sharp_bound;
use crate::mmspace::{DiscreteSet, SpaceDescriptor, WeightedGrid, MODEL_NAMES};
use crate::plaplacian::write_sweep_csv;
use crate::report::{Verdict, VerificationReport, TOOL_VERSION};
use crate::verify::{
    revolution_diagnostics, rigidity_scan, rigidity_summary, verify_buser, verify_cheeger, verify_heat_chain,
    verify_isoperimetry, verify_p_monotonicity, verify_smoothing, BUSER_TOL, CHEEGER_TOL, HEAT_CHAIN_TOL,
    ISOPERIMETRY_TOL, MONOTONICITY_TOL,
};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "CHEEGER_BUSER_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "cheeger-buser", version, about = "Spectral gaps, Cheeger constants and Buser-type bounds on weighted 1D spaces")]
struct Cli {
    /// Write records to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Model catalog.
    Space {
        #[command(subcommand)]
        action: SpaceAction,
    },
    /// Run one check on one space.
    Verify(VerifyArgs),
    /// Parameter sweeps.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// Evaluate the sharp Buser bound sup_t (1 − e^{−λ₁t})/J_K(t).
    Buser {
        #[arg(long, allow_hyphen_values = true)]
        lambda1: f64,
        #[arg(long = "K", allow_hyphen_values = true)]
        k: f64,
    },
    /// Run the standard battery of checks.
    Report {
        /// Coarse grids, for a fast smoke run.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Subcommand)]
enum SpaceAction {
    /// List the models with their default descriptors.
    List,
    /// Build a grid and summarize it.
    Info {
        descriptor: String,
        #[command(flatten)]
        grid: GridFlags,
    },
}

#[derive(Debug, Clone, Args)]
struct GridFlags {
    /// Node count override.
    #[arg(long)]
    n: Option<usize>,
    /// Truncation radius override (L for the interval, T for the meridian).
    #[arg(long = "R", allow_hyphen_values = true)]
    r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Cheeger,
    Buser,
    HeatChain,
    Isoperimetry,
    Smoothing,
    Revolution,
    PMonotonicity,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    check: Check,
    /// Space descriptor, e.g. `gaussian:K=1,R=8,n=4001`.
    #[arg(long)]
    space: Option<String>,
    #[command(flatten)]
    grid: GridFlags,
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// Times (comma-separated) for heat-chain and smoothing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    /// Number of smoothing test functions.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Heat-chain set {x < value}; defaults to the nodes below the median.
    #[arg(long, allow_hyphen_values = true)]
    below: Option<f64>,
    /// Exponents for p-monotonicity.
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,3")]
    ps: Vec<f64>,
    /// Meridian half-lengths for the revolution diagnostics.
    #[arg(long = "T", value_delimiter = ',', default_value = "10,20,40")]
    t_list: Vec<f64>,
}

#[derive(Debug, Subcommand)]
enum SweepKind {
    /// p ↦ p λ_{1,p}^{1/p} over a list of exponents.
    PMonotonicity {
        #[arg(long)]
        space: String,
        #[command(flatten)]
        grid: GridFlags,
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,3")]
        ps: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        tol: Option<f64>,
        /// Also write the sweep table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Buser gap along the perturbed Gaussians e^{−(x²/2 + εx⁴)}.
    Rigidity {
        /// `start:stop:step` or a comma-separated list.
        #[arg(long, default_value = "0:0.1:0.02", allow_hyphen_values = true)]
        eps: String,
        #[arg(long = "R", default_value_t = 8.0)]
        r: f64,
        #[arg(long, default_value_t = 4001)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        tol: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Output of one command: JSON records plus the verdicts that set the exit code.
#[derive(Default)]
struct Outcome {
    records: Vec<serde_json::Value>,
    verdicts: Vec<Verdict>,
}

impl Outcome {
    fn push_report(&mut self, report: &VerificationReport) {
        self.records.push(serde_json::to_value(report).expect("report serializes"));
        self.verdicts.push(report.verdict);
    }

    fn exit_code(&self) -> i32 {
        if self.verdicts.contains(&Verdict::Fail) {
            1
        } else if self.verdicts.contains(&Verdict::Inconclusive) {
            3
        } else {
            0
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_workers() {
        eprintln!("error: {e}");
        return 2;
    }
    let outcome = match execute(&cli.command) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::NoConvergence { .. } => 3,
                _ => 2,
            };
        }
    };
    if let Err(e) = emit(cli.out.as_ref(), &outcome) {
        eprintln!("error: {e}");
        return 2;
    }
    outcome.exit_code()
}

fn configure_workers() -> Result<()> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&w| w > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{WORKERS_ENV} must be a positive integer, got `{value}`")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(())
}

fn emit(out: Option<&PathBuf>, outcome: &Outcome) -> Result<()> {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut text = json!({"tool_version": TOOL_VERSION, "timestamp": timestamp}).to_string();
    text.push('\n');
    for record in &outcome.records {
        text.push_str(&record.to_string());
        text.push('\n');
    }
    match out {
        Some(path) => File::create(path)?.write_all(text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn descriptor(text: &str, flags: &GridFlags) -> Result<SpaceDescriptor> {
    let mut desc: SpaceDescriptor = text.parse()?;
    if let Some(n) = flags.n {
        desc = desc.with_n(n);
    }
    if let Some(r) = flags.r {
        desc = desc.with_extent(r);
    }
    desc.validate()?;
    Ok(desc)
}

fn check_tol(tol: Option<f64>, default: f64) -> Result<f64> {
    let tol = tol.unwrap_or(default);
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("--tol must be nonnegative and finite, got {tol}")));
    }
    Ok(tol)
}

fn execute(command: &Command) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    match command {
        Command::Space { action } => space(action, &mut outcome)?,
        Command::Verify(args) => {
            for report in verify(args)? {
                outcome.push_report(&report);
            }
        }
        Command::Sweep { kind } => sweep(kind, &mut outcome)?,
        Command::Buser { lambda1, k } => {
            if !(lambda1.is_finite() && *lambda1 > 0.0) {
                return Err(Error::InvalidArgument(format!("--lambda1 must be positive, got {lambda1}")));
            }
            let eval = buser_sharp_bound(*lambda1, *k)?;
            outcome.records.push(json!({
                "check": "buser_bound",
                "lambda1": eval.lambda1,
                "K": eval.k,
                "sup_value": eval.sup_value,
                "argmax_t": if eval.at_infinity { None } else { Some(eval.argmax_t) },
                "maximizer": if eval.at_infinity { "AT_INFINITY" } else { "INTERIOR" },
            }));
        }
        Command::Report { quick } => {
            for report in standard_battery(*quick)? {
                outcome.push_report(&report);
            }
        }
    }
    Ok(outcome)
}

fn space(action: &SpaceAction, outcome: &mut Outcome) -> Result<()> {
    match action {
        SpaceAction::List => {
            for name in MODEL_NAMES {
                let desc = SpaceDescriptor::default_for(name)?;
                let keys: Vec<&str> = desc.params().iter().map(|p| p.0).collect();
                outcome
                    .records
                    .push(json!({"model": name, "default": desc.to_string(), "keys": keys}));
            }
        }
        SpaceAction::Info { descriptor: text, grid } => {
            let desc = descriptor(text, grid)?;
            let g = WeightedGrid::build(&desc)?;
            let spacings: Vec<f64> = (0..g.len() - 1).map(|i| g.spacing(i)).collect();
            outcome.records.push(json!({
                "space": desc.to_string(),
                "nodes": g.len(),
                "lo": g.nodes()[0],
                "hi": g.nodes()[g.len() - 1],
                "min_spacing": spacings.iter().copied().fold(f64::INFINITY, f64::min),
                "max_spacing": spacings.iter().copied().fold(0.0, f64::max),
                "total_mass": g.total_mass(),
                "boundary": format!("{:?}", g.bc()),
                "measure_mode": format!("{:?}", g.measure_mode()),
                "K_tag": g.k_tag(),
            }));
        }
    }
    Ok(())
}

/// Nodes whose cumulative mass stays below half the total.
fn median_half_line(grid: &WeightedGrid) -> Result<DiscreteSet> {
    let half = 0.5 * grid.total_mass();
    let mut acc = 0.0;
    let mut end = 0;
    for (i, m) in grid.masses().iter().enumerate() {
        acc += m;
        if acc > half {
            break;
        }
        end = i;
    }
    DiscreteSet::new(grid, vec![(0, end.min(grid.len() - 2))])
}

fn verify(args: &VerifyArgs) -> Result<Vec<VerificationReport>> {
    if args.check == Check::Revolution {
        let n = args.grid.n.unwrap_or(8001);
        if n < 3 {
            return Err(Error::InvalidArgument(format!("--n must be at least 3, got {n}")));
        }
        return Ok(vec![revolution_diagnostics(&args.t_list, n)?]);
    }
    let text = args
        .space
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--space is required for this check".into()))?;
    let desc = descriptor(text, &args.grid)?;
    let times = args.t.clone();
    if let Some(ts) = &times {
        if ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidArgument("--t values must be positive and finite".into()));
        }
    }
    let grid = WeightedGrid::build(&desc)?;
    let report = match args.check {
        Check::Cheeger => verify_cheeger(&grid, check_tol(args.tol, CHEEGER_TOL)?)?,
        Check::Buser => verify_buser(&grid, check_tol(args.tol, BUSER_TOL)?)?,
        Check::HeatChain => {
            let set = match args.below {
                Some(x) => DiscreteSet::below(&grid, x)?,
                None => median_half_line(&grid)?,
            };
            let ts = times.unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
            verify_heat_chain(&grid, &set, &ts, check_tol(args.tol, HEAT_CHAIN_TOL)?)?
        }
        Check::Isoperimetry => verify_isoperimetry(&grid, check_tol(args.tol, ISOPERIMETRY_TOL)?)?,
        Check::Smoothing => {
            let ts = times.unwrap_or_else(|| vec![1.0]);
            if ts.len() != 1 {
                return Err(Error::InvalidArgument("smoothing takes a single --t".into()));
            }
            verify_smoothing(&grid, ts[0], args.trials)?
        }
        Check::PMonotonicity => verify_p_monotonicity(&grid, &args.ps, check_tol(args.tol, MONOTONICITY_TOL)?)?.0,
        Check::Revolution => unreachable!("handled above"),
    };
    Ok(vec![report])
}

/// `start:stop:step` (inclusive, step > 0) or `a,b,c`.
fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = |reason: &str| Error::Parse {
        input: text.to_string(),
        reason: reason.to_string(),
    };
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("expected numbers"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
                return Err(bad("need finite start ≤ stop and step > 0"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        [list] => list.split(',').map(number).collect(),
        _ => Err(bad("expected start:stop:step or a comma-separated list")),
    }
}

fn sweep(kind: &SweepKind, outcome: &mut Outcome) -> Result<()> {
    match kind {
        SweepKind::PMonotonicity { space, grid, ps, tol, csv } => {
            let desc = descriptor(space, grid)?;
            let tol = check_tol(*tol, MONOTONICITY_TOL)?;
            let (report, rows) = verify_p_monotonicity(&WeightedGrid::build(&desc)?, ps, tol)?;
            if let Some(path) = csv {
                write_sweep_csv(&rows, File::create(path)?)?;
            }
            outcome.push_report(&report);
        }
        SweepKind::Rigidity { eps, r, n, tol, csv } => {
            let epsilons = parse_range(eps)?;
            SpaceDescriptor::PerturbedGaussian { eps: 0.0, r: *r, n: *n }.validate()?;
            let tol = check_tol(*tol, BUSER_TOL)?;
            let scan = rigidity_scan(&epsilons, *r, *n, tol)?;
            if let Some(path) = csv {
                let mut w = csv::Writer::from_writer(File::create(path)?);
                w.write_record(["eps", "lambda1", "h", "B", "gap"])?;
                for (e, rep) in epsilons.iter().zip(&scan) {
                    let cell = |key: &str| rep.value(key).map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([e.to_string(), cell("lambda1"), cell("h"), cell("B"), cell("gap")])?;
                }
                w.flush()?;
            }
            for rep in &scan {
                outcome.push_report(rep);
            }
            outcome.push_report(&rigidity_summary(&scan, *n)?);
        }
    }
    Ok(())
}

type Task = Box<dyn Fn() -> Result<VerificationReport> + Send + Sync>;

fn on_grid(desc: SpaceDescriptor, run: impl Fn(&WeightedGrid) -> Result<VerificationReport> + Send + Sync + 'static) -> Task {
    Box::new(move || run(&WeightedGrid::build(&desc)?))
}

/// The standard battery, in declaration order regardless of scheduling.
fn standard_battery(quick: bool) -> Result<Vec<VerificationReport>> {
    let pi = std::f64::consts::PI;
    let (n_line, n_gauss, n_hyp, n_rev) = if quick { (401, 801, 801, 1601) } else { (2001, 4001, 4001, 8001) };
    let uniform = SpaceDescriptor::Uniform { l: pi, n: n_line };
    let gaussian = SpaceDescriptor::Gaussian { k: 1.0, r: 8.0, n: n_gauss };
    let perturbed = SpaceDescriptor::PerturbedGaussian { eps: 0.05, r: 8.0, n: n_gauss };
    let expx2 = SpaceDescriptor::Expx2 { r: 4.0, n: n_line };
    let hyperbolic = SpaceDescriptor::HyperbolicRadial { r: 20.0, n: n_hyp };
    let trials = if quick { 10 } else { 100 };

    let tasks: Vec<Task> = vec![
        on_grid(uniform, |g| verify_cheeger(g, CHEEGER_TOL)),
        on_grid(gaussian, |g| verify_cheeger(g, CHEEGER_TOL)),
        on_grid(expx2, |g| verify_cheeger(g, CHEEGER_TOL)),
        on_grid(hyperbolic, |g| verify_cheeger(g, CHEEGER_TOL)),
        on_grid(uniform, |g| verify_buser(g, BUSER_TOL)),
        on_grid(gaussian, |g| verify_buser(g, BUSER_TOL)),
        on_grid(perturbed, |g| verify_buser(g, BUSER_TOL)),
        on_grid(gaussian, |g| verify_heat_chain(g, &median_half_line(g)?, &[0.1, 1.0, 10.0], HEAT_CHAIN_TOL)),
        on_grid(gaussian, |g| verify_isoperimetry(g, ISOPERIMETRY_TOL)),
        on_grid(hyperbolic, |g| verify_isoperimetry(g, ISOPERIMETRY_TOL)),
        on_grid(uniform, move |g| verify_smoothing(g, 1.0, trials)),
        on_grid(gaussian, move |g| verify_smoothing(g, 1.0, trials)),
        on_grid(perturbed, move |g| verify_smoothing(g, 1.0, trials)),
        on_grid(SpaceDescriptor::Uniform { l: pi, n: 401 }, |g| {
            Ok(verify_p_monotonicity(g, &[1.0, 1.5, 2.0, 3.0], MONOTONICITY_TOL)?.0)
        }),
        Box::new(move || revolution_diagnostics(&[10.0, 20.0, 40.0], n_rev)),
        Box::new(move || {
            let scan = rigidity_scan(&[0.0, 0.02, 0.04, 0.06, 0.08, 0.1], 8.0, n_gauss, BUSER_TOL)?;
            rigidity_summary(&scan, n_gauss)
        }),
    ];
    tasks.par_iter().map(|task| task()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse_inclusively() {
        let v = parse_range("0:0.1:0.02").unwrap();
        assert_eq!(v.len(), 6);
        assert!((v[5] - 0.1).abs() < 1e-15);
        assert_eq!(parse_range("0,0.5").unwrap(), vec![0.0, 0.5]);
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("a:b").is_err());
    }

    #[test]
    fn overrides_apply_before_validation() {
        let flags = GridFlags { n: Some(11), r: Some(2.0) };
        let d = descriptor("gaussian:K=1", &flags).unwrap();
        assert_eq!(d, SpaceDescriptor::Gaussian { k: 1.0, r: 2.0, n: 11 });
        assert!(descriptor("uniform:L=-1", &GridFlags { n: None, r: None }).is_err());
    }

    #[test]
    fn exit_codes_follow_worst_verdict() {
        let mut o = Outcome::default();
        assert_eq!(o.exit_code(), 0);
        o.verdicts.push(Verdict::Inconclusive);
        assert_eq!(o.exit_code(), 3);
        o.verdicts.push(Verdict::Fail);
        assert_eq!(o.exit_code(), 1);
    }
}
