//! Experiment front end: JSON configs, subcommand dispatch and artifacts.
//!
//! Every run writes into `output_dir` (or `$MMSDE_OUT`):
//!
//! | run              | artifacts                                              |
//! |------------------|--------------------------------------------------------|
//! | `simulate`       | `solution.csv` (t, x_*, k_*, kvar)                     |
//! | `yosida-converge`| `yosida_converge.csv` (alpha, mean_sup_dist, max_sup_dist) |
//! | `rate`           | `rate.json`, `control.csv` (t, hdot_*)                 |
//! | `ldp-scan`       | `ldp_scan.csv`, `ldp_scan.json`                        |
//! | `fw-tube`        | `fw_tube.csv`, `fw_tube.json`                          |
//! | `flil`           | `flil.csv`, `flil.json`                                |
//! | `validate-ops`   | `validate_ops.json`                                    |
//!
//! plus `manifest.json` and the gnuplot files from [`emit_plotdata`].

mod plotdata;

use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use plotdata::emit_plotdata;

use crate::error::{Error, Result};
use crate::flil::{flil_experiment, FlilConfig};
use crate::ldp::{fw_tube_estimate, ldp_scan, Event, McSetup};
use crate::monotone_ops::{property_suite, ConvexSet, PropertyReport, ProxFunction};
use crate::paths::{sup_distance, Control, Path, TimeGrid};
use crate::rate::{rate_endpoint, rate_interior_path, rate_path, OptimizerConfig, RateResult};
use crate::rng::{Purpose, StreamKey};
use crate::solver::{simulate, simulate_with, simulate_yosida, ModelSpec, Noise, Scheme};

pub const OUTPUT_ENV: &str = "MMSDE_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub steps: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.steps)
    }
}

fn one() -> f64 {
    1.0
}

fn default_cases() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunSpec {
    Simulate {
        #[serde(default = "one")]
        epsilon: f64,
        #[serde(default)]
        scheme: Scheme,
    },
    YosidaConverge {
        #[serde(default = "one")]
        epsilon: f64,
        alphas: Vec<f64>,
        paths: u64,
    },
    Rate {
        /// Endpoint target `X(T) ∈ target`.
        #[serde(default)]
        target: Option<ConvexSet>,
        /// Path target as a CSV (t, x_1..x_m) on the config grid.
        #[serde(default)]
        path_csv: Option<PathBuf>,
        /// Use the closed-form interior formula for `path_csv`.
        #[serde(default)]
        interior: bool,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default)]
        optimizer: OptimizerConfig,
    },
    LdpScan {
        event: Event,
        epsilons: Vec<f64>,
        replicas: u64,
        #[serde(default)]
        scheme: Scheme,
        /// Endpoint set whose rate is reported next to the scan.
        #[serde(default)]
        rate_target: Option<ConvexSet>,
        #[serde(default)]
        optimizer: OptimizerConfig,
    },
    FwTube {
        /// Piecewise-constant control rates, one row per segment.
        control: Vec<Vec<f64>>,
        alpha: f64,
        eta: f64,
        epsilons: Vec<f64>,
        replicas: u64,
    },
    Flil {
        c: f64,
        jmax: u32,
        seeds: Vec<u64>,
        #[serde(default)]
        small_time: bool,
        #[serde(default)]
        settings: FlilConfig,
    },
    ValidateOps {
        #[serde(default = "default_cases")]
        cases: usize,
        /// Convex function whose subdifferential is the model operator.
        #[serde(default)]
        function: Option<ProxFunction>,
    },
}

fn default_tol() -> f64 {
    1e-2
}

impl RunSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RunSpec::Simulate { .. } => "simulate",
            RunSpec::YosidaConverge { .. } => "yosida-converge",
            RunSpec::Rate { .. } => "rate",
            RunSpec::LdpScan { .. } => "ldp-scan",
            RunSpec::FwTube { .. } => "fw-tube",
            RunSpec::Flil { .. } => "flil",
            RunSpec::ValidateOps { .. } => "validate-ops",
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("mmsde-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn unknown_key(raw: &serde_json::Value, echo: &serde_json::Value, at: &str) -> Option<String> {
    use serde_json::Value;
    match (raw, echo) {
        (Value::Object(a), Value::Object(b)) => a.iter().find_map(|(k, v)| {
            let here = format!("{at}/{k}");
            match b.get(k) {
                Some(w) => unknown_key(v, w, &here),
                None => Some(here),
            }
        }),
        (Value::Array(a), Value::Array(b)) => a
            .iter()
            .zip(b)
            .enumerate()
            .find_map(|(i, (v, w))| unknown_key(v, w, &format!("{at}/{i}"))),
        _ => None,
    }
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(invalid(
            "epsilons must be a non-empty list of positive numbers",
        ));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        let cfg: Self =
            serde_json::from_value(raw.clone()).map_err(|e| invalid(format!("config: {e}")))?;
        let echo = serde_json::to_value(&cfg)?;
        if let Some(key) = unknown_key(&raw, &echo, "") {
            return Err(invalid(format!("config: unknown key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MissingInput(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Schema checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.grid()?;
        self.model.validate()?;
        match &self.run {
            RunSpec::Simulate { epsilon, .. } => {
                if !(*epsilon >= 0.0) {
                    return Err(invalid("simulate: epsilon must be >= 0"));
                }
            }
            RunSpec::YosidaConverge {
                epsilon,
                alphas,
                paths,
            } => {
                if !(*epsilon >= 0.0) || *paths == 0 {
                    return Err(invalid("yosida-converge: need epsilon >= 0 and paths >= 1"));
                }
                if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0)) {
                    return Err(invalid("yosida-converge: alphas must be positive"));
                }
            }
            RunSpec::Rate {
                target,
                path_csv,
                interior,
                tol,
                ..
            } => {
                if target.is_some() == path_csv.is_some() {
                    return Err(invalid("rate: give exactly one of target and path_csv"));
                }
                if *interior && path_csv.is_none() {
                    return Err(invalid("rate: interior needs path_csv"));
                }
                if !(*tol > 0.0) {
                    return Err(invalid("rate: tol must be positive"));
                }
            }
            RunSpec::LdpScan {
                epsilons, replicas, ..
            } => {
                check_epsilons(epsilons)?;
                if epsilons.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(invalid("ldp-scan: epsilons must be strictly decreasing"));
                }
                if *replicas == 0 {
                    return Err(invalid("ldp-scan: replicas must be >= 1"));
                }
            }
            RunSpec::FwTube {
                control,
                alpha,
                eta,
                epsilons,
                replicas,
            } => {
                check_epsilons(epsilons)?;
                if !(*alpha > 0.0) || !(*eta >= 0.0) || *replicas == 0 {
                    return Err(invalid("fw-tube: need alpha > 0, eta >= 0, replicas >= 1"));
                }
                if control.is_empty() || control.iter().any(|r| r.len() != self.model.k) {
                    return Err(invalid("fw-tube: control rows must have k entries"));
                }
                if grid.steps % control.len() != 0 {
                    return Err(Error::GridMismatch(
                        "fw-tube: control segments must divide N".into(),
                    ));
                }
            }
            RunSpec::Flil { c, seeds, .. } => {
                if !(*c > 1.0) || seeds.is_empty() {
                    return Err(invalid("flil: need c > 1 and at least one seed"));
                }
            }
            RunSpec::ValidateOps { cases, .. } => {
                if *cases == 0 {
                    return Err(invalid("validate-ops: cases must be >= 1"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub run: String,
    pub version: String,
    pub master_seed: u64,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<String>,
    pub config: ExperimentConfig,
}

/// Outcome of a run whose artifacts were written. A `failure` still has
/// artifacts on disk but maps to a non-zero exit status.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    pub failure: Option<Error>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, Error::exit_code)
    }
}

fn write_json<T: Serialize>(path: &FsPath, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_rows(path: &FsPath, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }
}

/// Runs one experiment and writes its artifacts. Configuration errors are
/// returned as `Err`; numerical failures detected after the artifacts are
/// written come back in [`RunOutcome::failure`].
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.master_seed = seed;
    }
    if let Some(dir) = &opts.output_dir {
        config.output_dir = dir.clone();
    } else if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
        config.output_dir = PathBuf::from(dir);
    }
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;

    let workers = opts
        .workers
        .unwrap_or_else(rayon::current_num_threads)
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("worker pool: {e}")))?;

    let start = Instant::now();
    let mut artifacts = Artifacts {
        dir: config.output_dir.clone(),
        names: Vec::new(),
    };
    let failure = pool.install(|| dispatch(&config, &mut artifacts))?;
    if let Ok(files) = emit_plotdata(&config.output_dir) {
        artifacts.names.extend(
            files
                .iter()
                .filter_map(|p| p.file_name())
                .map(|n| n.to_string_lossy().into_owned()),
        );
    }
    let manifest = Manifest {
        run: config.run.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed,
        workers,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        artifacts: artifacts.names.clone(),
        config: config.clone(),
    };
    write_json(&config.output_dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome {
        output_dir: config.output_dir,
        manifest,
        failure,
    })
}

#[derive(Serialize)]
struct RateReport<'a> {
    #[serde(flatten)]
    result: &'a RateResult,
    control_csv_path: Option<String>,
}

fn dispatch(config: &ExperimentConfig, out: &mut Artifacts) -> Result<Option<Error>> {
    let model = &config.model;
    let grid = config.grid.grid()?;
    let seed = config.master_seed;
    match &config.run {
        RunSpec::Simulate { epsilon, scheme } => {
            let key = StreamKey::new(seed, Purpose::Brownian, 0);
            let noise = if *epsilon > 0.0 {
                Noise::Stream(key)
            } else {
                Noise::None
            };
            let sol = simulate_with(*scheme, model, *epsilon, None, noise, &grid)?;
            sol.write_csv(&out.path("solution.csv"))?;
        }
        RunSpec::YosidaConverge {
            epsilon,
            alphas,
            paths,
        } => {
            let mut rows = Vec::new();
            for &alpha in alphas {
                let dists = (0..*paths)
                    .map(|i| {
                        let w = crate::paths::sample_brownian_keyed(
                            model.k,
                            &grid,
                            StreamKey::new(seed, Purpose::Brownian, i),
                        );
                        let exact = simulate(model, *epsilon, None, Noise::Path(&w), &grid)?;
                        let pen =
                            simulate_yosida(model, alpha, *epsilon, None, Noise::Path(&w), &grid)?;
                        sup_distance(&exact.x, &pen)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let mean = dists.iter().sum::<f64>() / dists.len() as f64;
                let max = dists.iter().copied().fold(0.0, f64::max);
                rows.push(vec![alpha, mean, max]);
            }
            write_rows(
                &out.path("yosida_converge.csv"),
                &["alpha", "mean_sup_dist", "max_sup_dist"],
                &rows,
            )?;
        }
        RunSpec::Rate {
            target,
            path_csv,
            interior,
            tol,
            optimizer,
        } => {
            let mut opt = *optimizer;
            opt.seed ^= seed;
            let result = match (target, path_csv) {
                (Some(set), _) => rate_endpoint(model, set, &grid, &opt)?,
                (None, Some(file)) => {
                    let f = Path::read_csv(file)?;
                    if *interior {
                        rate_interior_path(model, &f)?
                    } else {
                        rate_path(model, &f, *tol, &opt)?
                    }
                }
                (None, None) => unreachable!("validated"),
            };
            let control_csv_path = match &result.minimizer {
                Some(h) => {
                    h.write_csv(&out.path("control.csv"))?;
                    Some("control.csv".to_string())
                }
                None => None,
            };
            write_json(
                &out.path("rate.json"),
                &RateReport {
                    result: &result,
                    control_csv_path,
                },
            )?;
        }
        RunSpec::LdpScan {
            event,
            epsilons,
            replicas,
            scheme,
            rate_target,
            optimizer,
        } => {
            let setup = McSetup {
                grid,
                scheme: *scheme,
            };
            let scan = ldp_scan(
                model,
                |p: &Path| event.holds(p),
                epsilons,
                &setup,
                *replicas,
                seed,
            )?;
            scan.write_csv(&out.path("ldp_scan.csv"))?;
            let rate = match rate_target {
                Some(set) => Some(rate_endpoint(model, set, &grid, optimizer)?),
                None => None,
            };
            #[derive(Serialize)]
            struct Summary<'a> {
                rows: &'a [crate::ldp::ScanRow],
                trend_intercept: Option<f64>,
                minus_rate: Option<f64>,
                rate: Option<&'a RateResult>,
                replicas: u64,
            }
            write_json(
                &out.path("ldp_scan.json"),
                &Summary {
                    rows: &scan.rows,
                    trend_intercept: scan.trend_intercept,
                    minus_rate: rate.as_ref().map(|r| -r.value),
                    rate: rate.as_ref(),
                    replicas: *replicas,
                },
            )?;
            if scan.all_zero_hits() {
                return Ok(Some(Error::ZeroHits(*epsilons.last().unwrap())));
            }
        }
        RunSpec::FwTube {
            control,
            alpha,
            eta,
            epsilons,
            replicas,
        } => {
            let cgrid = TimeGrid::new(grid.horizon, control.len())?;
            let h = Control::new(cgrid, model.k, control.concat())?;
            let setup = McSetup {
                grid,
                scheme: Scheme::ResolventEuler,
            };
            let mut rows = Vec::new();
            let mut results = Vec::new();
            for &eps in epsilons {
                let mc = fw_tube_estimate(model, &h, *alpha, *eta, eps, &setup, *replicas, seed)?;
                let (lo, hi) = mc.ci95();
                rows.push(vec![eps, mc.estimate, mc.std_error, lo, hi]);
                results.push(mc);
            }
            write_rows(
                &out.path("fw_tube.csv"),
                &["epsilon", "phat", "stderr", "ci_lo", "ci_hi"],
                &rows,
            )?;
            write_json(&out.path("fw_tube.json"), &results)?;
        }
        RunSpec::Flil {
            c,
            jmax,
            seeds,
            small_time,
            settings,
        } => {
            let report = flil_experiment(model, *c, *jmax, seeds, *small_time, settings)?;
            report.write_csv(&out.path("flil.csv"))?;
            write_json(&out.path("flil.json"), &report)?;
        }
        RunSpec::ValidateOps { cases, function } => {
            let report: PropertyReport =
                property_suite(&model.op, function.as_ref(), model.m, *cases, seed)?;
            write_json(&out.path("validate_ops.json"), &report)?;
            println!(
                "validate-ops: {}",
                if report.pass { "PASS" } else { "FAIL" }
            );
            if !report.pass {
                return Ok(Some(Error::NotInGraph {
                    residual: report
                        .nonexpansive_slack
                        .max(report.yosida_lipschitz_slack)
                        .max(report.monotonicity_slack),
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Parser)]
#[command(
    name = "mmsde",
    version,
    about = "Reflected SDEs driven by maximal monotone operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides `master_seed`
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FlilArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub jmax: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub small_time: bool,
    #[arg(long)]
    pub net_size: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One solution path
    Simulate(CommonArgs),
    /// Penalised vs reflected solutions along a sequence of alphas
    YosidaConverge(CommonArgs),
    /// Rate function value and minimizing control
    Rate(CommonArgs),
    /// Monte Carlo epsilon log p scan
    LdpScan(CommonArgs),
    /// Tube probabilities around a skeleton
    FwTube(CommonArgs),
    /// Functional LIL distances
    Flil(FlilArgs),
    /// Randomized resolvent property suite
    ValidateOps(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::YosidaConverge(_) => "yosida-converge",
            Command::Rate(_) => "rate",
            Command::LdpScan(_) => "ldp-scan",
            Command::FwTube(_) => "fw-tube",
            Command::Flil(_) => "flil",
            Command::ValidateOps(_) => "validate-ops",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Flil(a) => &a.common,
            Command::Simulate(a)
            | Command::YosidaConverge(a)
            | Command::Rate(a)
            | Command::LdpScan(a)
            | Command::FwTube(a)
            | Command::ValidateOps(a) => a,
        }
    }
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, RunOptions)> {
    let common = cli.command.common();
    let mut config = ExperimentConfig::from_path(&common.config)?;
    if config.run.name() != cli.command.name() {
        return Err(invalid(format!(
            "config describes a `{}` run but the subcommand is `{}`",
            config.run.name(),
            cli.command.name()
        )));
    }
    if let (
        Command::Flil(args),
        RunSpec::Flil {
            c,
            jmax,
            seeds,
            small_time,
            settings,
        },
    ) = (&cli.command, &mut config.run)
    {
        if let Some(v) = args.c {
            *c = v;
        }
        if let Some(v) = args.jmax {
            *jmax = v;
        }
        if let Some(v) = &args.seeds {
            *seeds = v.clone();
        }
        if args.small_time {
            *small_time = true;
        }
        if let Some(v) = args.net_size {
            settings.net_size = v;
        }
    }
    let opts = RunOptions {
        workers: common.workers,
        seed: common.seed,
        output_dir: None,
    };
    Ok((config, opts))
}

/// Parses `args` (including the program name), runs the experiment and
/// returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let name = cli.command.name();
    let result = load(&cli).and_then(|(config, opts)| run_experiment(&config, &opts));
    match result {
        Ok(outcome) => {
            if let Some(err) = &outcome.failure {
                eprintln!("mmsde {name}: {err}");
            }
            outcome.exit_code()
        }
        Err(err) => {
            eprintln!("mmsde {name}: {err}");
            err.exit_code()
        }
    }
}
