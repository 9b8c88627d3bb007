//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 unreliable result under `--strict`,
//! 3 I/O. A TOML file given with `--config` presets any flag; flags given on
//! the command line win. The default seed can also come from
//! `FIELD_OVERLAP_SEED`.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::fit_decay;
use crate::engine::{Engine, McConfig, DEFAULT_NORM_TOLERANCE, DEFAULT_PACKAGES, DEFAULT_SEED};
use crate::error::Error;
use crate::oracle::{self, default_nodes, QuadratureResult, MAX_QUADRATURE_DIMENSION};
use crate::output::{self, ResultRow};
use crate::overlap::{
    overlap_from_grid, split_boundaries, split_nonoverlapping, Family, GridFunctionPair,
    IntegralSpec, Which,
};
use crate::samplers::SamplerKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNRELIABLE: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const SEED_ENV: &str = "FIELD_OVERLAP_SEED";

#[derive(Debug, Parser)]
#[command(name = "field-overlap", version, about = "Overlaps of n-particle wavefunctionals")]
struct Cli {
    /// TOML file presetting any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate one overlap integral
    Rho(RhoArgs),
    /// Estimate a range of particle numbers and plot the decay
    Sweep(SweepArgs),
    /// Split two offset Gaussians on a grid and report their overlaps
    SplitDemo(SplitArgs),
    /// Tensor-quadrature value of one integral (small n only)
    Oracle(OracleArgs),
    /// Fit the decay law of a sweep CSV
    Fit(FitArgs),
}

#[derive(Debug, Args, Default)]
struct McArgs {
    /// nn, nvac or vacn
    #[arg(long)]
    family: Option<String>,
    /// Total Monte Carlo samples
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    packages: Option<usize>,
    /// cartesian, direct or spherical
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    norm_tolerance: Option<f64>,
    /// Exit with code 2 if any result is flagged unreliable
    #[arg(long)]
    strict: bool,
    /// Leave the wall_time_s column empty so output is byte-stable
    #[arg(long)]
    no_timing: bool,
    /// Add tensor-quadrature columns where the dimension allows
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    oracle_nodes: Option<usize>,
    /// Also write the rows as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RhoArgs {
    #[arg(long)]
    n: Option<usize>,
    /// NN only: integrate the second state over the region where the first dominates
    #[arg(long)]
    swap_roles: bool,
    /// CSV destination (stdout if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// CSV destination (stdout if omitted)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// SVG plot destination
    #[arg(long)]
    plot: Option<PathBuf>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Offset between the two Gaussians
    #[arg(long, default_value_t = 4.0)]
    delta: f64,
    /// lo:hi:nodes (default -6:delta+6:1601)
    #[arg(long)]
    grid: Option<String>,
    /// CSV with the split functions
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    swap_roles: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Sweep CSV to fit
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    min_n: Option<usize>,
    #[arg(long)]
    max_n: Option<usize>,
}

/// Values a config file may preset.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    family: Option<String>,
    n: Option<usize>,
    n_min: Option<usize>,
    n_max: Option<usize>,
    samples: Option<u64>,
    packages: Option<usize>,
    sampler: Option<String>,
    seed: Option<u64>,
    norm_tolerance: Option<f64>,
    threads: Option<usize>,
    oracle_nodes: Option<usize>,
    strict: Option<bool>,
    oracle: Option<bool>,
    no_timing: Option<bool>,
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Json(_) => EXIT_IO,
            Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

/// Resolved Monte Carlo options shared by `rho` and `sweep`.
struct Resolved {
    family: Family,
    config: McConfig,
    strict: bool,
    oracle: bool,
    oracle_nodes: Option<usize>,
    timing: bool,
}

fn resolve(mc: &McArgs, threads: Option<usize>, file: &FileConfig) -> Result<Resolved, Failure> {
    let family: Family = mc
        .family
        .as_deref()
        .or(file.family.as_deref())
        .unwrap_or("nn")
        .parse()?;
    let sampler: SamplerKind = mc
        .sampler
        .as_deref()
        .or(file.sampler.as_deref())
        .unwrap_or("direct")
        .parse()?;
    let seed = match mc.seed.or(file.seed) {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("{SEED_ENV} must be an unsigned integer")))?,
            Err(_) => DEFAULT_SEED,
        },
    };
    let config = McConfig {
        samples_total: mc.samples.or(file.samples).unwrap_or(1_000_000),
        packages: mc.packages.or(file.packages).unwrap_or(DEFAULT_PACKAGES),
        root_seed: seed,
        sampler,
        norm_tolerance: mc
            .norm_tolerance
            .or(file.norm_tolerance)
            .unwrap_or(DEFAULT_NORM_TOLERANCE),
        threads: threads.or(file.threads),
    };
    if config.samples_total == 0 {
        return Err(Failure::usage("--samples must be positive"));
    }
    if config.packages == 0 {
        return Err(Failure::usage("--packages must be positive"));
    }
    if config.threads == Some(0) {
        return Err(Failure::usage("--threads must be positive"));
    }
    Ok(Resolved {
        family,
        config,
        strict: mc.strict || file.strict.unwrap_or(false),
        oracle: mc.oracle || file.oracle.unwrap_or(false),
        oracle_nodes: mc.oracle_nodes.or(file.oracle_nodes),
        timing: !(mc.no_timing || file.no_timing.unwrap_or(false)),
    })
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn oracle_for(spec: IntegralSpec, nodes: Option<usize>) -> Result<Option<QuadratureResult>, Failure> {
    if spec.dimension() > MAX_QUADRATURE_DIMENSION {
        return Ok(None);
    }
    let nodes = nodes.unwrap_or_else(|| default_nodes(spec.dimension()));
    Ok(Some(oracle::quadrature_rho(spec, nodes)?))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn emit_rows(
    rows: &[ResultRow],
    csv_path: Option<&Path>,
    json_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let text = output::csv_string(rows)?;
    match csv_path {
        Some(p) => write_file(p, &text)?,
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| io_failure(Path::new("<stdout>"), e))?,
    }
    if let Some(p) = json_path {
        write_file(p, &output::json_string(rows)?)?;
    }
    Ok(())
}

fn cmd_rho(args: &RhoArgs, threads: Option<usize>, file: &FileConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let r = resolve(&args.mc, threads, file)?;
    let n = args
        .n
        .or(file.n)
        .ok_or_else(|| Failure::usage("--n is required"))?;
    if n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let mut spec = IntegralSpec::new(r.family, n)?;
    if args.swap_roles {
        spec = spec.swapped();
    }
    let est = Engine::default().estimate(spec, &r.config)?;
    let oracle = if r.oracle { oracle_for(spec, r.oracle_nodes)? } else { None };
    let row = ResultRow::new(r.family, n, &r.config, &est, oracle, r.timing);
    emit_rows(&[row], args.output.as_deref(), args.mc.json.as_deref(), out)?;
    Ok(if r.strict && !est.reliable { EXIT_UNRELIABLE } else { EXIT_OK })
}

fn cmd_sweep(args: &SweepArgs, threads: Option<usize>, file: &FileConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let r = resolve(&args.mc, threads, file)?;
    let n_min = args.n_min.or(file.n_min).unwrap_or(1);
    let n_max = args.n_max.or(file.n_max).unwrap_or(n_min);
    if n_min == 0 || n_min > n_max {
        return Err(Failure::usage(format!(
            "need 1 <= n-min <= n-max, got {n_min}..{n_max}"
        )));
    }
    let series = Engine::default().sweep(r.family, n_min..=n_max, &r.config)?;
    let mut rows = Vec::with_capacity(series.entries().len());
    for (n, est) in series.entries() {
        let spec = IntegralSpec::new(r.family, *n)?;
        let oracle = if r.oracle { oracle_for(spec, r.oracle_nodes)? } else { None };
        rows.push(ResultRow::new(r.family, *n, &r.config, est, oracle, r.timing));
    }
    emit_rows(&rows, args.csv.as_deref(), args.mc.json.as_deref(), out)?;
    if let Some(p) = &args.plot {
        let title = format!("overlap {} ({} sampler)", r.family, r.config.sampler);
        write_file(p, &output::render_svg(&rows, &title))?;
    }
    for (n, msg) in &series.failures {
        eprintln!("n = {n}: {msg}");
    }
    let all_reliable = series.failures.is_empty() && rows.iter().all(|r| r.reliable);
    Ok(if r.strict && !all_reliable { EXIT_UNRELIABLE } else { EXIT_OK })
}

fn parse_grid(spec: &str) -> Result<(f64, f64, usize), Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Failure::usage(format!("invalid grid `{spec}`, expected lo:hi:nodes"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let nodes: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok((lo, hi, nodes))
}

/// Summary of a split demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSummary {
    pub rho_0_given_1: f64,
    pub rho_1_given_0: f64,
    pub split_points: Vec<f64>,
}

/// Two unit-normalised Gaussians `e^{-x^2}` and `e^{-(x - delta)^2}` on a grid.
pub fn gaussian_pair(delta: f64, lo: f64, hi: f64, nodes: usize) -> crate::Result<GridFunctionPair> {
    let c = (2.0 / PI).powf(0.25);
    GridFunctionPair::uniform(
        lo,
        hi,
        nodes,
        |x| c * (-x * x).exp(),
        |x| c * (-(x - delta) * (x - delta)).exp(),
    )
}

pub fn split_summary(pair: &GridFunctionPair) -> SplitSummary {
    SplitSummary {
        rho_0_given_1: overlap_from_grid(pair, Which::Zero),
        rho_1_given_0: overlap_from_grid(pair, Which::One),
        split_points: split_boundaries(pair),
    }
}

fn cmd_split_demo(args: &SplitArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if !(args.delta >= 0.0) || !args.delta.is_finite() {
        return Err(Failure::usage("--delta must be a non-negative number"));
    }
    let (lo, hi, nodes) = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => (-6.0, args.delta + 6.0, 1601),
    };
    let pair = gaussian_pair(args.delta, lo, hi, nodes)?;
    let summary = split_summary(&pair);
    if let Some(path) = &args.output {
        let (s0, s1) = split_nonoverlapping(&pair);
        let mut text = String::from("x,f0,f1,f0_split,f1_split\n");
        for i in 0..pair.len() {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                pair.grid()[i],
                pair.f0()[i],
                pair.f1()[i],
                s0[i],
                s1[i]
            ));
        }
        write_file(path, &text)?;
    }
    let points: Vec<String> = summary.split_points.iter().map(|p| format!("{p}")).collect();
    writeln!(
        out,
        "delta={}\nrho_0_given_1={:e}\nrho_1_given_0={:e}\nsplit_points={}",
        args.delta,
        summary.rho_0_given_1,
        summary.rho_1_given_0,
        points.join(";")
    )
    .map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

fn cmd_oracle(args: &OracleArgs, file: &FileConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    let family: Family = args
        .family
        .as_deref()
        .or(file.family.as_deref())
        .unwrap_or("nn")
        .parse()?;
    let n = args.n.or(file.n).ok_or_else(|| Failure::usage("--n is required"))?;
    let mut spec = IntegralSpec::new(family, n)?;
    if args.swap_roles {
        spec = spec.swapped();
    }
    let nodes = args
        .nodes
        .or(file.oracle_nodes)
        .unwrap_or_else(|| default_nodes(spec.dimension()));
    let q = oracle::quadrature_rho(spec, nodes)?;
    let closed = match (family, n) {
        (Family::NN, 1) => Some(oracle::rho1_closed_form()),
        (Family::NVac, 1) => Some(oracle::nvac1_closed_form()),
        (Family::VacN, 1) => Some(oracle::vacn1_closed_form()),
        _ => None,
    };
    writeln!(
        out,
        "family={family}\nn={n}\nnodes={nodes}\nvalue={:e}\nrefinement_delta={:e}\nclosed_form={}\nmaxima_distance={}",
        q.value,
        q.refinement_delta,
        closed.map(|c| format!("{c:e}")).unwrap_or_default(),
        oracle::maxima_distance(family, n)?
    )
    .map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let rows = output::read_csv(&args.csv).map_err(|e| match e {
        Error::Csv(c) => match c.into_kind() {
            csv::ErrorKind::Io(io) => io_failure(&args.csv, io),
            other => Failure::usage(format!("{}: {other:?}", args.csv.display())),
        },
        other => other.into(),
    })?;
    let Some(first) = rows.first() else {
        return Err(Failure::usage("CSV has no rows"));
    };
    let mut series = crate::analysis::DecaySeries::new(first.family);
    for r in rows.iter().filter(|r| r.family == first.family) {
        series.push(
            r.n,
            crate::engine::McEstimate {
                mean: r.mean,
                package_min: r.err_lo,
                package_max: r.err_hi,
                std_error: r.std_error,
                norm_mean: r.norm_mean,
                norm_package_spread: (r.norm_mean, r.norm_mean),
                samples_used: r.samples,
                reliable: r.reliable,
                wall_time_seconds: r.wall_time_s.unwrap_or(0.0),
                package_means: Vec::new(),
            },
        )?;
    }
    let min_n = args.min_n.unwrap_or(1);
    let max_n = args.max_n.unwrap_or(usize::MAX);
    let fit = fit_decay(&series, min_n, max_n)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&fit).map_err(Error::from)?)
        .map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

/// Runs the CLI on `args` (including the program name), writing results to
/// `out` and diagnostics to stderr. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = load_file_config(cli.config.as_deref()).and_then(|file| match &cli.command {
        Command::Rho(a) => cmd_rho(a, cli.threads, &file, out),
        Command::Sweep(a) => cmd_sweep(a, cli.threads, &file, out),
        Command::SplitDemo(a) => cmd_split_demo(a, out),
        Command::Oracle(a) => cmd_oracle(a, &file, out),
        Command::Fit(a) => cmd_fit(a, out),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
