//! Command-line frontend.
//!
//! Exit codes: 0 retain, 1 detect, 2 bad arguments, 3 I/O failure,
//! 4 unreadable or non-square image.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::clusters::{label_clusters, Color};
use crate::error::{Error, Result};
use crate::lattice::TriangularLattice;
use crate::mctest::{run_test, threshold_scan, Calibrator, PeSource, ScanContext};
use crate::newman_ziff::{
    critical_value, linear_fit, sweep_two_region, type_ii_full_support, type_ii_square_support,
    CriticalValueTable, SweepOptions, DEFAULT_MEMORY_BUDGET,
};
use crate::noise::{synthesize, NoiseDescriptor, NoiseModel, SignalSpec};
use crate::pgm::{PgmEncoding, PgmImage};
use crate::rng;

pub const EXIT_RETAIN: i32 = 0;
pub const EXIT_DETECT: i32 = 1;
pub const EXIT_BAD_ARGS: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_BAD_IMAGE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "percodetect", version, about = "Maximum Cluster Test for noisy images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Critical cluster sizes for a grid of p_E and alpha.
    Calibrate(CalibrateArgs),
    /// Test a PGM image for an object.
    Detect(DetectArgs),
    /// Type II error table, rows p_B and columns p_E.
    Power(PowerArgs),
    /// Survival functions of the largest cluster and their quantiles.
    Dist(DistArgs),
    /// Time full detections over a range of lattice sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
    Pgm,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Monte Carlo trials for the null sweep.
    #[arg(long, default_value_t = 200_000)]
    trials: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pe: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    alpha: Vec<f64>,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// PGM image (P2 or P5).
    input: PathBuf,
    /// Expected side; checked against the image.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Critical value; calibrated from p_E and alpha when absent.
    #[arg(long)]
    c0: Option<usize>,
    /// p_E for calibration; one value per scan threshold with --scan.
    #[arg(long, value_delimiter = ',')]
    pe: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Noise family or JSON descriptor; with --sigma gives p_E(tau).
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Decreasing thresholds to scan instead of a single --tau.
    #[arg(long, value_delimiter = ',')]
    scan: Vec<f64>,
    /// Smallest threshold the scan may use.
    #[arg(long, default_value_t = 0.0)]
    tau0: f64,
    #[command(flatten)]
    sim: SimArgs,
    /// JSON report (with run configuration) or, with --format pgm, a label raster.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct PowerArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pb: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pe: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    alpha: Vec<f64>,
    /// Side of a centred signal square; full support when absent.
    #[arg(long)]
    rho: Option<usize>,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct DistArgs {
    #[arg(long)]
    n: usize,
    /// Occupation probabilities; defaults to 0.1, 0.15, ..., 0.9.
    #[arg(long, value_delimiter = ',')]
    pe: Vec<f64>,
    #[command(flatten)]
    sim: SimArgs,
    /// Directory for one survival CSV per p plus quantiles.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Repetitions per size; the fastest is reported.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// Everything needed to reproduce a run; written next to every output file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub version: String,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scan: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(rename = "p_E", skip_serializing_if = "Vec::is_empty")]
    pub p_e: Vec<f64>,
    #[serde(rename = "p_B", skip_serializing_if = "Vec::is_empty")]
    pub p_b: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub format: String,
}

impl RunConfig {
    fn new(command: &str, format: Format, seed: u64) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            format: format_name(format).into(),
            ..Default::default()
        }
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Pgm => "pgm",
    }
}

/// Failure of a command together with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Format(_) | Error::Json(_) => EXIT_IO,
            Error::Image(_) => EXIT_BAD_IMAGE,
            _ => EXIT_BAD_ARGS,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_IO, message: e.to_string() }
    }
}

fn bad_args(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_BAD_ARGS, message: msg.into() }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_ARGS } else { EXIT_RETAIN };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Calibrate(a) => cmd_calibrate(a, stdout),
        Command::Detect(a) => cmd_detect(a, stdout),
        Command::Power(a) => cmd_power(a, stdout),
        Command::Dist(a) => cmd_dist(a, stdout),
        Command::Bench(a) => cmd_bench(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn check_probabilities(name: &str, values: &[f64]) -> std::result::Result<(), Failure> {
    match values.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        Some(p) => Err(bad_args(format!("{name} values must lie in (0, 1), got {p}"))),
        None => Ok(()),
    }
}

fn calibrator(sim: &SimArgs) -> Calibrator {
    Calibrator::from_env(SweepOptions { jobs: sim.jobs, memory_budget: DEFAULT_MEMORY_BUDGET })
}

fn check_sim(sim: &SimArgs) -> std::result::Result<(), Failure> {
    if sim.trials == 0 {
        return Err(bad_args("--trials must be positive"));
    }
    Ok(())
}

/// Writes `data` to `out` (plus a `.config.json` sidecar) or to stdout.
fn emit(out: Option<&Path>, data: &[u8], config: &RunConfig, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, data)?;
            write_sidecar(path, config)?;
        }
        None => stdout.write_all(data)?,
    }
    Ok(())
}

fn write_sidecar(path: &Path, config: &RunConfig) -> std::result::Result<(), Failure> {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.json");
    let mut text = serde_json::to_string_pretty(config).map_err(Error::from)?;
    text.push('\n');
    std::fs::write(path.with_file_name(name), text)?;
    Ok(())
}

fn to_json_line<T: Serialize>(v: &T) -> std::result::Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_vec_pretty(v).map_err(Error::from)?;
    s.push(b'\n');
    Ok(s)
}

fn cmd_calibrate(a: CalibrateArgs, stdout: &mut dyn Write) -> CmdResult {
    check_sim(&a.sim)?;
    check_probabilities("--pe", &a.pe)?;
    check_probabilities("--alpha", &a.alpha)?;
    if a.format == Format::Pgm {
        return Err(bad_args("calibrate writes csv or json"));
    }
    TriangularLattice::new(a.n)?;
    let cal = calibrator(&a.sim);
    let mut table = CriticalValueTable::default();
    for &alpha in &a.alpha {
        for &pe in &a.pe {
            table.rows.push(cal.calibrate(a.n, pe, alpha, a.sim.trials, a.sim.seed)?.row);
        }
    }
    let mut config = RunConfig::new("calibrate", a.format, a.sim.seed);
    config.n = vec![a.n];
    config.p_e = a.pe;
    config.alpha = a.alpha;
    config.trials = Some(a.sim.trials);
    config.output = a.out.clone();
    let data = match a.format {
        Format::Csv => table.to_csv().into_bytes(),
        _ => to_json_line(&serde_json::json!({ "config": config, "rows": table.rows }))?,
    };
    emit(a.out.as_deref(), &data, &config, stdout)?;
    Ok(EXIT_RETAIN)
}

fn cmd_detect(a: DetectArgs, stdout: &mut dyn Write) -> CmdResult {
    let image = PgmImage::read(&a.input).map_err(|e| Failure { code: EXIT_BAD_IMAGE, message: e.to_string() })?;
    let field = image.to_field().map_err(|e| Failure { code: EXIT_BAD_IMAGE, message: e.to_string() })?;
    if let Some(n) = a.n {
        if n != field.side() {
            return Err(bad_args(format!("--n {n} but the image has side {}", field.side())));
        }
    }
    let lattice = TriangularLattice::new(field.side())?;
    let model = a.noise.as_deref().map(NoiseModel::parse).transpose()?;
    if model.is_some() != a.sigma.is_some() {
        return Err(bad_args("--noise and --sigma go together"));
    }
    if let Some(s) = a.sigma {
        if !(s > 0.0) {
            return Err(bad_args("--sigma must be positive"));
        }
    }
    check_probabilities("--pe", &a.pe)?;
    check_probabilities("--alpha", &[a.alpha])?;
    check_sim(&a.sim)?;

    let mut config = RunConfig::new("detect", a.format, a.sim.seed);
    config.n = vec![field.side()];
    config.alpha = vec![a.alpha];
    config.input = Some(a.input.clone());
    config.output = a.out.clone();
    config.noise = model.as_ref().map(NoiseModel::to_descriptor);
    config.sigma = a.sigma;
    config.p_e = a.pe.clone();
    let cal = calibrator(&a.sim);

    if !a.scan.is_empty() {
        if a.c0.is_some() {
            return Err(bad_args("--c0 cannot be combined with --scan"));
        }
        let pe_source = match (model, a.sigma) {
            (Some(model), Some(sigma)) => PeSource::Model { model, sigma },
            _ if !a.pe.is_empty() => PeSource::PerTau(a.pe.clone()),
            _ => return Err(bad_args("--scan needs --noise with --sigma, or one --pe per threshold")),
        };
        let ctx = ScanContext { calibrator: &cal, alpha: a.alpha, trials: a.sim.trials, seed: a.sim.seed, pe_source };
        let report = threshold_scan(&field, &lattice, &a.scan, a.tau0, &ctx)?;
        config.scan = a.scan.clone();
        config.tau0 = Some(a.tau0);
        config.trials = Some(a.sim.trials);
        stdout.write_all(&to_json_line(&report)?)?;
        if let Some(out) = &a.out {
            let data = to_json_line(&serde_json::json!({ "config": config, "scan": report }))?;
            emit(Some(out), &data, &config, stdout)?;
        }
        return Ok(if report.decision.is_reject() { EXIT_DETECT } else { EXIT_RETAIN });
    }

    config.tau = Some(a.tau);
    let p_e = match (&model, a.sigma, a.pe.as_slice()) {
        (_, _, [p]) => Some(*p),
        (Some(m), Some(s), []) => Some(m.survival(a.tau / s)),
        (_, _, []) => None,
        _ => return Err(bad_args("give a single --pe without --scan")),
    };
    let (c0, null) = match (a.c0, p_e) {
        (Some(c0), _) => (c0, None),
        (None, Some(p)) => {
            let null = cal.distribution(field.side(), p, a.sim.trials, a.sim.seed)?;
            (critical_value(&null, a.alpha)?.c0 as usize, Some(null))
        }
        (None, None) => return Err(bad_args("need --c0, --pe, or --noise with --sigma")),
    };
    if null.is_some() {
        config.trials = Some(a.sim.trials);
    }
    config.c0 = a.c0;
    let mut report = run_test(&field, a.tau, c0, &lattice)?;
    if let Some(null) = &null {
        report = report.with_null(null);
    } else {
        report.p_e = p_e;
    }
    stdout.write_all(&to_json_line(&report)?)?;
    if let Some(out) = &a.out {
        let data = match a.format {
            Format::Pgm => {
                let labels = label_clusters(&field.threshold(a.tau), &lattice, Color::Black)?;
                labels.to_pgm().encode(PgmEncoding::Raw)
            }
            _ => to_json_line(&serde_json::json!({ "config": config, "report": report }))?,
        };
        emit(Some(out), &data, &config, stdout)?;
    }
    Ok(if report.decision.is_reject() { EXIT_DETECT } else { EXIT_RETAIN })
}

/// Formats an error probability, flagging values below Monte Carlo resolution.
pub fn format_beta(beta: f64, trials: u64) -> String {
    let resolution = 1.0 / trials as f64;
    if beta < resolution {
        format!("<{resolution:e}")
    } else {
        format!("{beta:.4}")
    }
}

#[derive(Debug, Serialize)]
struct PowerEntry {
    alpha: f64,
    #[serde(rename = "p_B")]
    p_b: f64,
    #[serde(rename = "p_E")]
    p_e: f64,
    c0: u32,
    beta: String,
}

fn cmd_power(a: PowerArgs, stdout: &mut dyn Write) -> CmdResult {
    check_sim(&a.sim)?;
    check_probabilities("--pb", &a.pb)?;
    check_probabilities("--pe", &a.pe)?;
    check_probabilities("--alpha", &a.alpha)?;
    if a.format == Format::Pgm {
        return Err(bad_args("power writes csv or json"));
    }
    let lattice = TriangularLattice::new(a.n)?;
    let cal = calibrator(&a.sim);
    let micro = cal.table(a.n, a.sim.trials, a.sim.seed)?;
    // c0 per (alpha, p_E)
    let mut c0s = Vec::new();
    for &alpha in &a.alpha {
        for &pe in &a.pe {
            c0s.push(critical_value(&micro.canonical(pe)?, alpha)?.c0);
        }
    }
    let square = match a.rho {
        Some(rho) => {
            let inner = lattice.centered_square(rho)?;
            let options = SweepOptions { jobs: a.sim.jobs, memory_budget: DEFAULT_MEMORY_BUDGET };
            Some(sweep_two_region(&lattice, &inner, a.sim.trials, rng::derive(a.sim.seed, 1), &c0s, options)?)
        }
        None => None,
    };
    let mut entries = Vec::new();
    for (ai, &alpha) in a.alpha.iter().enumerate() {
        for &pb in &a.pb {
            for (ei, &pe) in a.pe.iter().enumerate() {
                let c0 = c0s[ai * a.pe.len() + ei];
                let beta = match &square {
                    Some(t) => type_ii_square_support(t, pb, pe, c0)?,
                    None => type_ii_full_support(&micro, pb, c0)?,
                };
                entries.push(PowerEntry { alpha, p_b: pb, p_e: pe, c0, beta: format_beta(beta, a.sim.trials) });
            }
        }
    }
    let mut config = RunConfig::new("power", a.format, a.sim.seed);
    config.n = vec![a.n];
    config.p_b = a.pb.clone();
    config.p_e = a.pe.clone();
    config.alpha = a.alpha.clone();
    config.rho = a.rho;
    config.trials = Some(a.sim.trials);
    config.output = a.out.clone();
    let data = match a.format {
        Format::Csv => {
            let mut s = String::from("alpha,p_B");
            for pe in &a.pe {
                s.push_str(&format!(",p_E={pe}"));
            }
            s.push('\n');
            for row in entries.chunks(a.pe.len()) {
                s.push_str(&format!("{},{}", row[0].alpha, row[0].p_b));
                for e in row {
                    s.push(',');
                    s.push_str(&e.beta);
                }
                s.push('\n');
            }
            s.into_bytes()
        }
        _ => to_json_line(&serde_json::json!({ "config": config, "entries": entries }))?,
    };
    emit(a.out.as_deref(), &data, &config, stdout)?;
    Ok(EXIT_RETAIN)
}

/// The default occupation probabilities of `dist`: 0.1, 0.15, ..., 0.9.
pub fn default_dist_probabilities() -> Vec<f64> {
    (0..17).map(|i| (10 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Serialize)]
struct QuantileRow {
    p: f64,
    q95: u32,
    q99: u32,
}

fn cmd_dist(a: DistArgs, stdout: &mut dyn Write) -> CmdResult {
    check_sim(&a.sim)?;
    let ps = if a.pe.is_empty() { default_dist_probabilities() } else { a.pe.clone() };
    check_probabilities("--pe", &ps)?;
    if a.format == Format::Pgm {
        return Err(bad_args("dist writes csv or json"));
    }
    TriangularLattice::new(a.n)?;
    let cal = calibrator(&a.sim);
    let micro = cal.table(a.n, a.sim.trials, a.sim.seed)?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
    }
    let mut quantiles = Vec::new();
    for &p in &ps {
        let dist = micro.canonical(p)?;
        // the q-quantile is the critical value at level 1 - q
        quantiles.push(QuantileRow {
            p,
            q95: critical_value(&dist, 0.05)?.c0,
            q99: critical_value(&dist, 0.01)?.c0,
        });
        if let Some(dir) = &a.out {
            std::fs::write(dir.join(format!("survival_p{p:.2}.csv")), dist.to_csv())?;
        }
    }
    let mut config = RunConfig::new("dist", a.format, a.sim.seed);
    config.n = vec![a.n];
    config.p_e = ps;
    config.trials = Some(a.sim.trials);
    config.output = a.out.clone();
    let data = match a.format {
        Format::Csv => {
            let mut s = String::from("p,q95,q99\n");
            for q in &quantiles {
                s.push_str(&format!("{},{},{}\n", q.p, q.q95, q.q99));
            }
            s.into_bytes()
        }
        _ => to_json_line(&serde_json::json!({ "config": config, "quantiles": quantiles }))?,
    };
    let target = a.out.as_ref().map(|d| d.join(if a.format == Format::Csv { "quantiles.csv" } else { "quantiles.json" }));
    emit(target.as_deref(), &data, &config, stdout)?;
    Ok(EXIT_RETAIN)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BenchPoint {
    #[serde(rename = "N")]
    pub n: usize,
    pub seconds: f64,
    pub sites_per_second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    /// Slope of log time against log N.
    pub exponent: f64,
    pub r_squared: f64,
}

/// Times `threshold` plus a complete cluster search (no early stop) on pure
/// Gaussian noise; the fastest of `reps` runs is kept per size.
pub fn bench_detection(sizes: &[usize], tau: f64, reps: usize, seed: u64) -> Result<BenchReport> {
    if sizes.len() < 2 || reps == 0 {
        return Err(Error::Parameter("need at least two sizes and one repetition".into()));
    }
    let mut points = Vec::new();
    for &n in sizes {
        let lattice = TriangularLattice::new(n)?;
        let field = synthesize(&SignalSpec::null(n, 1.0), &NoiseModel::Gaussian, &lattice, seed)?;
        let shifted = crate::noise::GrayField::new(n, field.values().iter().map(|v| v + 0.5).collect())?;
        let c0 = lattice.site_count() + 1;
        let mut best = f64::INFINITY;
        for _ in 0..reps {
            let start = Instant::now();
            let report = run_test(&shifted, tau, c0, &lattice)?;
            std::hint::black_box(report);
            best = best.min(start.elapsed().as_secs_f64());
        }
        points.push(BenchPoint { n, seconds: best, sites_per_second: (n * n) as f64 / best });
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|p| ((p.n as f64).ln(), p.seconds.ln())).collect();
    let (exponent, _, r_squared) = linear_fit(&pts);
    Ok(BenchReport { points, exponent, r_squared })
}

fn cmd_bench(a: BenchArgs, stdout: &mut dyn Write) -> CmdResult {
    if a.format == Format::Pgm {
        return Err(bad_args("bench writes csv or json"));
    }
    let report = bench_detection(&a.n, a.tau, a.reps, a.seed)?;
    let mut config = RunConfig::new("bench", a.format, a.seed);
    config.n = a.n.clone();
    config.tau = Some(a.tau);
    config.output = a.out.clone();
    let data = match a.format {
        Format::Csv => {
            let mut s = String::from("N,seconds,sites_per_second\n");
            for p in &report.points {
                s.push_str(&format!("{},{:.6e},{:.4e}\n", p.n, p.seconds, p.sites_per_second));
            }
            s.push_str(&format!("# exponent {:.3} (R^2 {:.4})\n", report.exponent, report.r_squared));
            s.into_bytes()
        }
        _ => to_json_line(&serde_json::json!({ "config": config, "bench": report }))?,
    };
    emit(a.out.as_deref(), &data, &config, stdout)?;
    Ok(EXIT_RETAIN)
}
