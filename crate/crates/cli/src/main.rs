//! Command-line front end for the formation-control simulator.
//!
//! Four subcommands cover the workflow: `simulate` runs a scenario and writes
//! trace/detection artifacts, `validate-gains` checks the spectral gain
//! conditions, `calibrate` measures bound constants from an attack-free run
//! and writes them to a reusable bounds file, and `detectability` evaluates
//! the guaranteed-detection margin for one declared attack.
//!
//! Exit codes: 0 success; 2 parse or validation failure; 3 runtime
//! divergence; 4 refusal (calibrating an attacked scenario, unknown attack
//! id). Reports go to standard output, warnings and errors to standard
//! error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flocksim_core::report::{
    render_detectability, render_summary, write_detectability_csv, write_detection_csv,
    write_residual_csv, write_trace_csv,
};
use flocksim_core::scenario::BoundsSource;
use flocksim_core::sim::{CalibrateError, SimError};
use flocksim_core::{
    bundled_names, bundled_scenario, calibrate, detect, detectability_analysis, run,
    validate_gains, BoundsFile, Calibration, GainReport, Scenario,
};

#[derive(Parser)]
#[command(
    name = "flocksim",
    version,
    about = "Deterministic multi-agent formation simulator with residual-based attack detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trace, detection, and summary artifacts.
    Simulate(SimulateArgs),
    /// Check the gain conditions for a scenario and print the margins.
    ValidateGains(ValidateArgs),
    /// Measure bound constants from an attack-free run and write them to a
    /// bounds file.
    Calibrate(CalibrateArgs),
    /// Evaluate the guaranteed-detection margin for one declared attack.
    Detectability(DetectabilityArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Bundled scenario name or path to a scenario file.
    scenario: String,
    /// Run even when the gain conditions fail validation.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct ValidateArgs {
    /// Bundled scenario name or path to a scenario file.
    scenario: String,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Bundled scenario name or path to a scenario file (must be
    /// attack-free).
    scenario: String,
    /// Calibrate even when the gain conditions fail validation.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct DetectabilityArgs {
    /// Bundled scenario name or path to a scenario file.
    scenario: String,
    /// Id of the attack to analyse, as declared in the scenario.
    attack_id: String,
    /// Analyse even when the gain conditions fail validation.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct RunOpts {
    /// Directory for output artifacts (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    output_dir: PathBuf,
    /// Replace the scenario's declared horizon (number of steps).
    #[arg(long, value_name = "STEPS", value_parser = clap::value_parser!(u64).range(1..))]
    horizon_override: Option<u64>,
    /// Reserved for future stochastic extensions; the model is deterministic
    /// and the value is ignored.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::ValidateGains(args) => cmd_validate_gains(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Detectability(args) => cmd_detectability(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

/// A command failure carrying the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn refusal(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn from_sim(err: SimError) -> Self {
        match err {
            SimError::Diverged { .. } => Self { code: 3, message: err.to_string() },
            SimError::UnknownAttack { .. } | SimError::WindowNeverSampled { .. } => {
                Self::refusal(err.to_string())
            }
        }
    }
}

/// A scenario plus the directory it was loaded from, kept for resolving
/// relative bounds-file paths. Bundled scenarios have no directory.
struct LoadedScenario {
    scenario: Scenario,
    base_dir: Option<PathBuf>,
}

fn load_scenario(arg: &str, opts: &RunOpts) -> Result<LoadedScenario, Failure> {
    if opts.seed.is_some() {
        eprintln!("note: --seed is reserved; runs are deterministic and the value is ignored");
    }
    let (text, base_dir) = match bundled_scenario(arg) {
        Some(text) => (text.to_string(), None),
        None => {
            let path = Path::new(arg);
            let text = fs::read_to_string(path).map_err(|err| {
                Failure::validation(format!(
                    "'{arg}' is neither a bundled scenario nor a readable file ({err}); \
                     bundled scenarios: {}",
                    bundled_names().join(", ")
                ))
            })?;
            (text, path.parent().map(Path::to_path_buf))
        }
    };
    let mut scenario = Scenario::from_toml_str(&text)
        .map_err(|err| Failure::validation(format!("invalid scenario '{arg}': {err}")))?;
    if let Some(steps) = opts.horizon_override {
        scenario.horizon = steps as usize;
    }
    Ok(LoadedScenario { scenario, base_dir })
}

fn gain_report(scenario: &Scenario) -> GainReport {
    validate_gains(
        &scenario.graph.laplacian(scenario.state_dim),
        &scenario.gains,
        scenario.tuning,
        scenario.basis.activation_bound(),
    )
}

/// Enforces the gain conditions before an engine run. A failure is overridden
/// by `--force` or by the scenario's own `gains.force`, with a warning either
/// way.
fn gate_gains(scenario: &Scenario, force_flag: bool) -> Result<(), Failure> {
    let report = gain_report(scenario);
    if report.pass() {
        return Ok(());
    }
    let failed: Vec<&str> =
        report.conditions.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    if force_flag || scenario.force_gains {
        let why = if force_flag { "--force was given" } else { "the scenario sets gains.force" };
        eprintln!(
            "warning: gain conditions not satisfied ({}); continuing because {why}",
            failed.join(", ")
        );
        Ok(())
    } else {
        Err(Failure::validation(format!(
            "gain validation failed ({}); see `flocksim validate-gains`, or rerun with --force",
            failed.join(", ")
        )))
    }
}

/// Resolves the detection threshold per the scenario's bounds declaration:
/// either a fresh calibration of the attack-free closed loop, or a previously
/// written bounds file (relative paths resolve against the scenario file's
/// directory).
fn resolve_threshold(
    loaded: &LoadedScenario,
) -> Result<(f64, Option<Calibration>, String), Failure> {
    match &loaded.scenario.bounds.source {
        BoundsSource::Auto => {
            let cal =
                calibrate(&loaded.scenario.without_attacks()).map_err(calibrate_failure)?;
            let label = "auto-calibrated from an attack-free run".to_string();
            Ok((cal.threshold, Some(cal), label))
        }
        BoundsSource::File(declared) => {
            let path = match &loaded.base_dir {
                Some(dir) if Path::new(declared).is_relative() => dir.join(declared),
                _ => PathBuf::from(declared),
            };
            let text = fs::read_to_string(&path).map_err(|err| {
                Failure::validation(format!("cannot read bounds file {}: {err}", path.display()))
            })?;
            let file = BoundsFile::parse(&text).map_err(|err| {
                Failure::validation(format!("invalid bounds file {}: {err}", path.display()))
            })?;
            Ok((file.threshold, None, format!("bounds file {}", path.display())))
        }
    }
}

fn calibrate_failure(err: CalibrateError) -> Failure {
    match err {
        CalibrateError::AttacksPresent(_) => Failure::refusal(err.to_string()),
        CalibrateError::HorizonInsideTransient { .. } | CalibrateError::DegenerateResidual => {
            Failure::validation(err.to_string())
        }
        CalibrateError::Sim(e) => Failure::from_sim(e),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|err| Failure::io(format!("cannot create {}: {err}", dir.display())))
}

fn write_artifact<F>(dir: &Path, name: &str, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|err| Failure::io(format!("cannot create {}: {err}", path.display())))?;
    let mut w = BufWriter::new(file);
    write(&mut w)
        .and_then(|()| w.flush())
        .map_err(|err| Failure::io(format!("cannot write {}: {err}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let loaded = load_scenario(&args.scenario, &args.run)?;
    gate_gains(&loaded.scenario, args.force)?;
    let (threshold, calibration, source_label) = resolve_threshold(&loaded)?;
    let result = run(&loaded.scenario).map_err(Failure::from_sim)?;
    let detection = detect(result.trace.residual_inf_norms(), threshold);

    let dir = &args.run.output_dir;
    ensure_dir(dir)?;
    write_artifact(dir, "trace.csv", |w| write_trace_csv(w, &result.trace))?;
    write_artifact(dir, "detection.csv", |w| write_detection_csv(w, &detection))?;
    for agent in 0..loaded.scenario.n_agents() {
        write_artifact(dir, &format!("residual_agent_{}.csv", agent + 1), |w| {
            write_residual_csv(w, &result.trace, agent, threshold)
        })?;
    }
    if let Some(cal) = &calibration {
        let text = BoundsFile::from_calibration(cal).to_text();
        write_artifact(dir, "bounds.txt", |w| w.write_all(text.as_bytes()))?;
    }
    let summary = render_summary(&loaded.scenario, &source_label, calibration.as_ref(), &detection);
    write_artifact(dir, "summary.txt", |w| w.write_all(summary.as_bytes()))?;
    print!("{summary}");
    Ok(())
}

fn cmd_validate_gains(args: ValidateArgs) -> Result<(), Failure> {
    let opts = RunOpts { output_dir: PathBuf::new(), horizon_override: None, seed: None };
    let loaded = load_scenario(&args.scenario, &opts)?;
    let report = gain_report(&loaded.scenario);
    print!("{}", render_gain_report(&report));
    if report.pass() {
        Ok(())
    } else {
        Err(Failure::validation("gain conditions not satisfied"))
    }
}

fn render_gain_report(report: &GainReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for c in &report.conditions {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        writeln!(s, "[{verdict}] {}: {}", c.name, c.description).unwrap();
        match (c.lhs, c.rhs) {
            (Some(lhs), Some(rhs)) => {
                writeln!(s, "       left = {lhs}, right = {rhs}, margin = {}", rhs - lhs).unwrap()
            }
            _ => writeln!(s, "       not evaluable: a prerequisite condition failed").unwrap(),
        }
    }
    writeln!(s, "sigma_max(coupling matrix) = {}", report.sigma_max_l_bar).unwrap();
    writeln!(s, "sigma_max(closed-loop map) = {}", report.sigma_max_p).unwrap();
    match report.eta {
        Some(eta) => writeln!(s, "eta = {eta}").unwrap(),
        None => writeln!(s, "eta undefined (learning rate times squared activation bound >= 1)")
            .unwrap(),
    }
    writeln!(s, "overall = {}", if report.pass() { "PASS" } else { "FAIL" }).unwrap();
    s
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), Failure> {
    let loaded = load_scenario(&args.scenario, &args.run)?;
    gate_gains(&loaded.scenario, args.force)?;
    let cal = calibrate(&loaded.scenario).map_err(calibrate_failure)?;
    let text = BoundsFile::from_calibration(&cal).to_text();

    let dir = &args.run.output_dir;
    ensure_dir(dir)?;
    write_artifact(dir, "bounds.txt", |w| w.write_all(text.as_bytes()))?;
    print!("{text}");
    if let Some(reference) = loaded.scenario.bounds.reference_pi {
        println!(
            "# scenario declares reference threshold {reference}; computed - reference = {:+.3}",
            cal.threshold - reference
        );
    }
    Ok(())
}

fn cmd_detectability(args: DetectabilityArgs) -> Result<(), Failure> {
    let loaded = load_scenario(&args.scenario, &args.run)?;
    gate_gains(&loaded.scenario, args.force)?;
    let (threshold, _, source_label) = resolve_threshold(&loaded)?;
    let report = detectability_analysis(&loaded.scenario, &args.attack_id, threshold)
        .map_err(Failure::from_sim)?;

    let dir = &args.run.output_dir;
    ensure_dir(dir)?;
    let stem: String = args
        .attack_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    write_artifact(dir, &format!("detectability_{stem}.csv"), |w| {
        write_detectability_csv(w, &report)
    })?;
    println!("threshold_source = {source_label}");
    print!("{}", render_detectability(&report));
    Ok(())
}
