//! `otima` command line.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage, 3 validation failure,
//! 4 fit failure.

pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    extract_angles, fit_cross_section, fit_fringe, BeamAngles, CrossSectionFit, FringeFit, PhaseMode,
};
use crate::constants::{NANOMETRE, NANOSECOND, SQUARE_CENTIMETRE};
use crate::error::Error;
use crate::grating::{talbot_coefficient, CoefficientModel};
use crate::interferometer::{MomentumEnvelope, SignalCurve, SignalModel};
use crate::io::{self, Metadata};
use crate::oracle::{self, ComparisonReport, GridSpec, McSpec};
use crate::scenario::{load_scenario_file, Model, Scenario};
use sweep::{grid_values, parse_override, run_sweep, Metric, ParameterPath};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_FIT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "otima",
    version,
    about = "Time-domain optical Talbot-Lau interferometer simulation and fitting"
)]
pub struct Cli {
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Resonance scan S_N(τ) over the scenario's τ grid
    Scan(ScanArgs),
    /// Evaluate a metric over a range of one scenario parameter
    Sweep(SweepArgs),
    /// Compare the analytic signal with a brute-force oracle
    Validate(ValidateArgs),
    /// Fit fringe or cross-section data
    Fit(FitArgs),
    /// Talbot coefficients and signal terms at one delay
    DumpCoefficients(DumpArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario TOML file
    scenario: PathBuf,
    /// Override a scenario value, PATH=VALUE in the path's unit
    /// (e.g. beam.tilt_mrad=2, gratings.*.n0_eff=4, molecule.beta=50)
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    Quantum,
    Classical,
    Both,
}

impl ModelChoice {
    fn models(choice: Option<Self>, scenario: &Scenario) -> Vec<Model> {
        match choice {
            None => vec![scenario.model],
            Some(ModelChoice::Quantum) => vec![Model::Quantum],
            Some(ModelChoice::Classical) => vec![Model::Classical],
            Some(ModelChoice::Both) => vec![Model::Quantum, Model::Classical],
        }
    }
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Signal model (default: the scenario's)
    #[arg(long, value_enum)]
    model: Option<ModelChoice>,
    /// Output CSV; a .meta.json sidecar is written next to it. Default stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Parameter path, e.g. molecule.beta, gratings.*.n0_eff, timing.pulse_separation_us
    #[arg(long)]
    param: String,
    /// Explicit values, comma separated, in the path's unit
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "range",
        required_unless_present = "range"
    )]
    values: Vec<f64>,
    /// Grid START:STOP:COUNT in the path's unit
    #[arg(long)]
    range: Option<String>,
    /// Logarithmic spacing for --range
    #[arg(long, requires = "range")]
    log: bool,
    #[arg(long, value_enum, default_value = "visibility")]
    metric: Metric,
    #[arg(long, value_enum)]
    model: Option<ModelChoice>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    /// Grid wave propagation against the quantum model
    Wave,
    /// Trajectory Monte Carlo against the classical model
    Mc,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "wave")]
    oracle: OracleKind,
    /// Wave: max |ΔS_N|/max|S_N| (default 1e-3). MC: max pull in σ (default 3).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Wave-oracle nodes per grating period
    #[arg(long, default_value_t = GridSpec::default().points_per_period)]
    points_per_period: usize,
    /// Wave-oracle samples of the G(2) offset
    #[arg(long, default_value_t = GridSpec::default().phase_samples)]
    phase_samples: usize,
    /// Monte-Carlo particles
    #[arg(long, default_value_t = McSpec::default().n_particles)]
    particles: usize,
    #[arg(long, default_value_t = McSpec::default().seed)]
    seed: u64,
    /// Report JSON (default stdout)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write analytic and oracle curves to this CSV
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Override applied to the analytic model only, PATH=VALUE; a
    /// sensitivity check that the comparison can fail
    #[arg(long = "perturb-analytic", value_name = "PATH=VALUE")]
    perturb: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitKind {
    Fringe,
    CrossSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Extract {
    Angles,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(value_enum)]
    kind: FitKind,
    /// Data CSV: tau_ns,S_res,S_off,S_N,sigma_SN or fluence_per_cm2,counts
    data: PathBuf,
    /// Scenario supplying τ_off, grating period and speed
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Reference delay τ_off in ns (overrides the scenario)
    #[arg(long)]
    tau_off_ns: Option<f64>,
    /// Fit τ_off as a free phase instead of holding it fixed
    #[arg(long)]
    free_phase: bool,
    /// Rows to use when the CSV has a model column
    #[arg(long)]
    model: Option<String>,
    /// Convert the fitted widths to beam angles
    #[arg(long, value_enum)]
    extract: Option<Extract>,
    /// Grating period in nm for --extract (overrides the scenario)
    #[arg(long)]
    period_nm: Option<f64>,
    /// Mean speed in m/s for --extract (overrides the scenario)
    #[arg(long)]
    speed: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DumpArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Delay τ in ns
    #[arg(long, default_value_t = 0.0)]
    tau_ns: f64,
    #[arg(long, value_enum)]
    model: Option<ModelChoice>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Outcome categories that decide the exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Fit(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let command_line = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::debug!("thread pool already initialised: {e}");
        }
    }
    match dispatch(cli.command, &command_line) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            EXIT_VALIDATION
        }
        Err(Failure::Fit(e)) => {
            eprintln!("error: {e}");
            EXIT_FIT
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, command_line: &str) -> CliResult {
    match command {
        Command::Scan(a) => scan(a, command_line),
        Command::Sweep(a) => sweep_cmd(a, command_line),
        Command::Validate(a) => validate(a),
        Command::Fit(a) => fit(a),
        Command::DumpCoefficients(a) => dump(a, command_line),
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn load(args: &ScenarioArgs) -> CliResult<Scenario> {
    let mut scenario = load_scenario_file(&args.scenario)?;
    for text in &args.overrides {
        let (path, value) = parse_override(text).map_err(usage)?;
        path.apply(&mut scenario, value)?;
    }
    Ok(scenario)
}

/// Write `body` to `output` (plus a metadata sidecar) or to stdout.
fn emit(output: Option<&Path>, body: &[u8], metadata: Option<&Metadata>) -> CliResult {
    match output {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
            if let Some(m) = metadata {
                io::write_json(&io::sidecar_path(path), m)?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body).map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut body = serde_json::to_vec_pretty(value).map_err(Error::from)?;
    body.push(b'\n');
    Ok(body)
}

fn scan(args: ScanArgs, command_line: &str) -> CliResult {
    let scenario = load(&args.scenario)?;
    let taus = scenario.timing.tau_grid();
    let models = ModelChoice::models(args.model, &scenario);
    let curves: Vec<(Model, SignalCurve)> = models
        .iter()
        .map(|&m| Ok((m, SignalModel::with_model(&scenario, m)?.scan(&taus)?)))
        .collect::<crate::Result<_>>()?;
    let labelled: Vec<(Option<&str>, &SignalCurve)> = curves
        .iter()
        .map(|(m, c)| ((args.model == Some(ModelChoice::Both)).then(|| m.as_str()), c))
        .collect();
    let hash = io::scenario_hash(&scenario);
    let mut body = Vec::new();
    io::write_signal_csv(&mut body, &labelled, Some(&hash))?;
    let mut meta = Metadata::new(command_line, &scenario)?;
    meta.extra = serde_json::json!({
        "models": models.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
        "reference_residual": SignalModel::new(&scenario)?.reference_residual()?,
    });
    emit(args.output.as_deref(), &body, Some(&meta))
}

fn sweep_cmd(args: SweepArgs, command_line: &str) -> CliResult {
    let scenario = load(&args.scenario)?;
    let path: ParameterPath = args.param.parse().map_err(usage)?;
    let values = match &args.range {
        Some(spec) => grid_values(spec, args.log).map_err(usage)?,
        None => args.values.clone(),
    };
    let models = ModelChoice::models(args.model, &scenario);
    let rows = run_sweep(&scenario, &path, &values, &models, args.metric)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([path.to_string().as_str(), "model", args.metric.column()])
        .map_err(Error::from)?;
    for r in &rows {
        w.write_record([
            format!("{:.12e}", r.value),
            r.model.as_str().to_string(),
            format!("{:.12e}", r.metric),
        ])
        .map_err(Error::from)?;
    }
    let table = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
    let mut body = format!(
        "# otima {} scenario_sha256={}\n",
        io::VERSION,
        io::scenario_hash(&scenario)
    )
    .into_bytes();
    body.extend(table);
    let mut meta = Metadata::new(command_line, &scenario)?;
    meta.extra = serde_json::json!({ "parameter": path.to_string(), "metric": args.metric, "points": rows.len() });
    emit(args.output.as_deref(), &body, Some(&meta))
}

#[derive(Debug, Serialize)]
struct ValidationOutput<'a> {
    oracle: &'static str,
    model: &'static str,
    scenario_sha256: String,
    grid: Option<GridSpec>,
    monte_carlo: Option<McSpec>,
    report: &'a ComparisonReport,
}

fn validate(args: ValidateArgs) -> CliResult {
    let scenario = load(&args.scenario)?;
    let mut perturbed = scenario.clone();
    for text in &args.perturb {
        let (path, value) = parse_override(text).map_err(usage)?;
        path.apply(&mut perturbed, value)?;
    }
    let taus = scenario.timing.tau_grid();
    let (model, analytic, oracle_curve, report, grid, mc) = match args.oracle {
        OracleKind::Wave => {
            let grid = GridSpec {
                points_per_period: args.points_per_period,
                phase_samples: args.phase_samples,
            };
            let analytic = SignalModel::with_model(&perturbed, Model::Quantum)?.scan(&taus)?;
            let curve = oracle::WaveOracle::new(&scenario)?.scan(&taus, &grid)?;
            let report = oracle::compare(&analytic, &curve, args.tolerance.unwrap_or(1e-3))?;
            (Model::Quantum, analytic, curve, report, Some(grid), None)
        }
        OracleKind::Mc => {
            let mc = McSpec {
                n_particles: args.particles,
                seed: args.seed,
            };
            let analytic = SignalModel::with_model(&perturbed, Model::Classical)?.scan(&taus)?;
            let curve = oracle::MonteCarloOracle::new(&scenario)?.scan(&taus, &mc)?;
            let report = oracle::compare_statistical(&analytic, &curve, args.tolerance.unwrap_or(3.0))?;
            (Model::Classical, analytic, curve, report, None, Some(mc))
        }
    };
    let hash = io::scenario_hash(&scenario);
    if let Some(path) = &args.curves {
        io::write_signal_csv_file(
            path,
            &[(Some("analytic"), &analytic), (Some("oracle"), &oracle_curve)],
            Some(&hash),
        )?;
    }
    let out = ValidationOutput {
        oracle: match args.oracle {
            OracleKind::Wave => "wave",
            OracleKind::Mc => "mc",
        },
        model: model.as_str(),
        scenario_sha256: hash,
        grid,
        monte_carlo: mc,
        report: &report,
    };
    emit(args.output.as_deref(), &to_json(&out)?, None)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "max deviation {:.3e} at tau = {:.1} ns exceeds tolerance {:e}",
            report.max_sigma_deviation.unwrap_or(report.max_deviation),
            report.max_deviation_tau / NANOSECOND,
            report.tolerance
        )))
    }
}

#[derive(Debug, Serialize)]
struct FringeOutput {
    kind: &'static str,
    fit: FringeFit,
    #[serde(skip_serializing_if = "Option::is_none")]
    angles: Option<BeamAngles>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario_sha256: Option<String>,
}

#[derive(Debug, Serialize)]
struct CrossSectionOutput {
    kind: &'static str,
    fit: CrossSectionFit,
    sigma_pi_cm2: f64,
    sigma_pi_err_cm2: f64,
}

fn fit_error(e: Error) -> Failure {
    match e {
        Error::Fit(_) | Error::Domain { .. } => Failure::Fit(e),
        other => Failure::Runtime(other),
    }
}

fn fit(args: FitArgs) -> CliResult {
    let scenario = args.scenario.as_deref().map(load_scenario_file).transpose()?;
    match args.kind {
        FitKind::CrossSection => {
            let points = io::read_fluence_csv_file(&args.data)?;
            let fit = fit_cross_section(&points).map_err(fit_error)?;
            let out = CrossSectionOutput {
                kind: "cross-section",
                sigma_pi_cm2: fit.sigma_pi / SQUARE_CENTIMETRE,
                sigma_pi_err_cm2: fit.sigma_pi_err / SQUARE_CENTIMETRE,
                fit,
            };
            emit(args.output.as_deref(), &to_json(&out)?, None)
        }
        FitKind::Fringe => {
            let curve = io::read_signal_csv_file(&args.data, args.model.as_deref())?;
            let tau_off = match (args.tau_off_ns, &scenario) {
                (Some(t), _) => t * NANOSECOND,
                (None, Some(s)) => s.timing.tau_off,
                (None, None) if args.free_phase => 0.0,
                (None, None) => {
                    return Err(Failure::Usage(
                        "a fixed-phase fringe fit needs --tau-off-ns or --scenario".into(),
                    ))
                }
            };
            let mode = if args.free_phase {
                PhaseMode::Free
            } else {
                PhaseMode::Fixed
            };
            let fit = fit_fringe(&curve, tau_off, mode, None).map_err(fit_error)?;
            let angles = match args.extract {
                Some(Extract::Angles) => {
                    let d = args
                        .period_nm
                        .map(|p| p * NANOMETRE)
                        .or_else(|| scenario.as_ref().map(|s| s.period()));
                    let v = args.speed.or_else(|| scenario.as_ref().map(|s| s.beam.speed));
                    let (Some(d), Some(v)) = (d, v) else {
                        return Err(Failure::Usage(
                            "--extract angles needs --scenario or both --period-nm and --speed".into(),
                        ));
                    };
                    Some(extract_angles(&fit, d, v).map_err(fit_error)?)
                }
                None => None,
            };
            let out = FringeOutput {
                kind: "fringe",
                fit,
                angles,
                scenario_sha256: scenario.as_ref().map(io::scenario_hash),
            };
            emit(args.output.as_deref(), &to_json(&out)?, None)
        }
    }
}

fn dump(args: DumpArgs, command_line: &str) -> CliResult {
    let scenario = load(&args.scenario)?;
    let tau = args.tau_ns * NANOSECOND;
    let strengths = scenario.strengths()?;
    let tt = scenario.talbot_time();
    let t = scenario.timing.pulse_separation;
    let envelope = MomentumEnvelope::from_beam(&scenario.beam, scenario.molecule.mass);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model",
        "l",
        "chi1",
        "B1_minus_l",
        "chi2",
        "B2_2l",
        "B3_minus_l",
        "envelope",
        "S_l",
    ])
    .map_err(Error::from)?;
    for model in ModelChoice::models(args.model, &scenario) {
        let coefficients = SignalModel::with_model(&scenario, model)?.coefficients(tau)?;
        let cm = CoefficientModel::from(model);
        for (l, s_l) in coefficients.terms.iter().enumerate() {
            let l = l as i32;
            let chi1 = if scenario.g1_absorptive {
                0.0
            } else {
                l as f64 * tau / tt
            };
            let chi2 = l as f64 * (t + tau) / tt;
            let row = [
                talbot_coefficient(-l, chi1, &strengths[0], cm),
                talbot_coefficient(2 * l, chi2, &strengths[1], cm),
                talbot_coefficient(-l, 0.0, &strengths[2], CoefficientModel::Absorptive),
                envelope.value(l as f64 * tau * scenario.period() / tt),
                *s_l,
            ];
            w.write_record([
                model.as_str().to_string(),
                l.to_string(),
                format!("{chi1:.12e}"),
                format!("{:.12e}", row[0]),
                format!("{chi2:.12e}"),
                format!("{:.12e}", row[1]),
                format!("{:.12e}", row[2]),
                format!("{:.12e}", row[3]),
                format!("{:.12e}", row[4]),
            ])
            .map_err(Error::from)?;
        }
    }
    let table = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
    let mut body = format!(
        "# otima {} scenario_sha256={}\n",
        io::VERSION,
        io::scenario_hash(&scenario)
    )
    .into_bytes();
    body.extend(table);
    let meta = Metadata::new(command_line, &scenario)?;
    emit(args.output.as_deref(), &body, Some(&meta))
}
