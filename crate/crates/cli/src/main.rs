use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use cvqec::codes::{code_by_name, encode, CodeSpec};
use cvqec::experiment::{run_and_write, ExperimentConfig, LogicalSpec, THREADS_ENV};
use cvqec::grid::{fidelity, GridSpec, MultiModeState};
use cvqec::symplectic::check_correctability;
use cvqec::syndrome::{
    correct, extract_syndrome, run_qec_cycle_detailed, ErrorSpec, MeasurementModel, ReadoutRoute,
};
use cvqec::transpiler::{
    emit_cv_circuit, enumerate_valid_assignments, parse_qubit_circuit, write_verdict_csv,
    EnumerateOptions, ErrorClass, SignAssignment,
};
use cvqec::{Circuit, Error};

/// Continuous-variable error-correction simulator on discretized position grids.
///
/// Positions and momenta are in grid points unless a flag says otherwise; one point is
/// dx = sqrt(π/N). Modes are 0-indexed on the command line.
#[derive(Parser)]
#[command(name = "cvqec", version, about, long_about = None)]
struct Cli {
    /// Worker threads for sweeps and enumeration (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a logical wavefunction and write `<out>.bin` plus `<out>.json`.
    Encode {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        logical: LogicalArgs,
        /// Output base path; extensions are replaced.
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply an error to a stored state.
    Inject {
        /// Input state base path.
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        error: ErrorArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the syndrome of a stored state, correct it and report against a fresh encoding.
    Decode {
        #[arg(long)]
        state: PathBuf,
        /// Code name; defaults to the one recorded by `encode`.
        #[arg(long)]
        code: Option<String>,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Write the corrected state here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 1 when the post-correction fidelity is lower.
        #[arg(long)]
        min_fidelity: Option<f64>,
    },
    /// Run one encode → error → syndrome → correction cycle and print the report as JSON.
    Cycle {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        logical: LogicalArgs,
        #[command(flatten)]
        error: ErrorArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        min_fidelity: Option<f64>,
    },
    /// Monte-Carlo sweep over record noise, configured by a TOML file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Sweep CSV path; overrides the config. Printed to stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trial CSV path; overrides the config.
        #[arg(long)]
        trial_out: Option<PathBuf>,
        /// Also write a matplotlib script that plots the sweep CSV.
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// Substitute a qubit circuit over {H, Hinv, XOR} into a continuous-variable encoder.
    Transpile {
        /// Qubit circuit JSON.
        #[arg(long = "in")]
        input: PathBuf,
        /// Check every sign assignment and write a verdict table.
        #[arg(long)]
        enumerate: bool,
        /// Sign bits for a single substitution, `0` = Sum, `1` = SumInv (default: all Sum).
        #[arg(long, conflicts_with = "enumerate")]
        assignment: Option<String>,
        /// Grid size of the parity test.
        #[arg(long, default_value_t = 8)]
        grid_n: usize,
        /// Enumerate first-layer XORs too instead of pinning them to Sum.
        #[arg(long)]
        all_first_layer: bool,
        #[arg(long, value_enum, default_value_t = ClassArg::Displacement)]
        class: ClassArg,
        /// Directory for `verdicts.csv` and one encoder per valid assignment; stdout otherwise.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Correctability report of a built-in code or an encoder circuit, as JSON.
    Check {
        #[arg(long, conflicts_with = "encoder", required_unless_present = "encoder")]
        code: Option<String>,
        /// Circuit JSON whose mode 0 is logical and whose other modes start in |x = 0⟩.
        #[arg(long)]
        encoder: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ClassArg::Displacement)]
        class: ClassArg,
    },
}

#[derive(Args)]
struct CodeArgs {
    /// repetition3, shor9 or cv5.
    #[arg(long)]
    code: String,
    /// Grid points per mode (even).
    #[arg(long, default_value_t = 16)]
    grid_n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogicalKind {
    Eigenstate,
    Gaussian,
    TwoPeak,
}

#[derive(Args)]
struct LogicalArgs {
    #[arg(long, value_enum, default_value_t = LogicalKind::Eigenstate)]
    logical: LogicalKind,
    /// Grid index of the eigenstate (default: the origin, N/2).
    #[arg(long)]
    index: Option<usize>,
    /// Gaussian center, in points.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    center: f64,
    /// Gaussian peak separation from the origin, in points.
    #[arg(long, default_value_t = 4.0)]
    peak: f64,
    /// Gaussian width, in points.
    #[arg(long, default_value_t = 1.0)]
    width: f64,
}

impl LogicalArgs {
    fn spec(&self, n: usize) -> LogicalSpec {
        match self.logical {
            LogicalKind::Eigenstate => LogicalSpec::Eigenstate {
                index: self.index.unwrap_or(n / 2),
            },
            LogicalKind::Gaussian => LogicalSpec::Gaussian {
                center_points: self.center,
                width_points: self.width,
            },
            LogicalKind::TwoPeak => LogicalSpec::TwoPeak {
                peak_points: self.peak,
                width_points: self.width,
            },
        }
    }
}

#[derive(Args)]
struct ErrorArgs {
    /// Mode the error acts on.
    #[arg(long, default_value_t = 0)]
    mode: usize,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    shift: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    kick: i64,
    /// Gaussian convolution width in dx units; replaces the displacement.
    #[arg(long, conflicts_with_all = ["shift", "kick"])]
    convolution_width: Option<f64>,
}

impl ErrorArgs {
    fn spec(&self, dx: f64) -> ErrorSpec {
        match self.convolution_width {
            Some(w) => ErrorSpec::GaussianConvolution {
                mode: self.mode,
                width: w * dx,
            },
            None if self.shift == 0 && self.kick == 0 => ErrorSpec::None,
            None => ErrorSpec::Displacement {
                mode: self.mode,
                shift_points: self.shift,
                kick_points: self.kick,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Projective,
    Circuit,
}

#[derive(Args)]
struct NoiseArgs {
    /// Gaussian record noise in dx units.
    #[arg(long, default_value_t = 0.0)]
    sigma_dx: f64,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = RouteArg::Projective)]
    route: RouteArg,
}

impl NoiseArgs {
    fn model(&self, dx: f64) -> cvqec::Result<MeasurementModel> {
        if self.sigma_dx == 0.0 && self.repetitions == 1 {
            return Ok(MeasurementModel::exact());
        }
        MeasurementModel::gaussian(self.sigma_dx * dx, self.repetitions)
    }

    fn route(&self) -> ReadoutRoute {
        match self.route {
            RouteArg::Projective => ReadoutRoute::Projective,
            RouteArg::Circuit => ReadoutRoute::Circuit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Displacement,
    Position,
    Momentum,
}

impl From<ClassArg> for ErrorClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Displacement => ErrorClass::Displacement,
            ClassArg::Position => ErrorClass::Position,
            ClassArg::Momentum => ErrorClass::Momentum,
        }
    }
}

/// Whether the command's check held; failures exit with status 1.
#[derive(PartialEq)]
enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}

/// Bad names, unreadable files and malformed inputs are usage errors.
fn is_usage_error(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        cause.is::<std::io::Error>()
            || matches!(
                cause.downcast_ref::<Error>(),
                Some(
                    Error::UnsupportedCode(_)
                        | Error::Io(_)
                        | Error::Config(_)
                        | Error::Parse { .. }
                        | Error::Json(_)
                        | Error::InvalidGrid(_)
                        | Error::ModeOutOfRange { .. }
                        | Error::IndexOutOfRange { .. }
                        | Error::AssignmentLength { .. }
                        | Error::InvalidGate(_)
                )
            )
    })
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let threads = cli.threads;
    match cli.command {
        Command::Encode { code, logical, out } => cmd_encode(&code, &logical, &out),
        Command::Inject { state, error, out } => cmd_inject(&state, &error, &out),
        Command::Decode {
            state,
            code,
            noise,
            out,
            min_fidelity,
        } => cmd_decode(&state, code.as_deref(), &noise, out.as_deref(), min_fidelity),
        Command::Cycle {
            code,
            logical,
            error,
            noise,
            min_fidelity,
        } => cmd_cycle(&code, &logical, &error, &noise, min_fidelity),
        Command::Sweep {
            config,
            out,
            trial_out,
            plot_script,
        } => cmd_sweep(&config, out, trial_out, plot_script.as_deref(), threads),
        Command::Transpile {
            input,
            enumerate,
            assignment,
            grid_n,
            all_first_layer,
            class,
            out_dir,
        } => {
            let options = EnumerateOptions {
                grid_n,
                fix_first_layer: !all_first_layer,
                error_class: class.into(),
            };
            cmd_transpile(&input, enumerate, assignment.as_deref(), options, out_dir.as_deref(), threads)
        }
        Command::Check {
            code,
            encoder,
            class,
        } => cmd_check(code.as_deref(), encoder.as_deref(), class.into()),
    }
}

fn print_text(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    print_text(&format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn header_extra(code: &CodeSpec, logical: &LogicalSpec) -> serde_json::Value {
    json!({ "code": code.name, "logical": logical })
}

fn cmd_encode(code: &CodeArgs, logical: &LogicalArgs, out: &Path) -> anyhow::Result<Outcome> {
    let spec = code_by_name(&code.code)?;
    let single = GridSpec::new(code.grid_n, 1)?;
    let logical = logical.spec(code.grid_n);
    let state = encode(&logical.wavefunction(&single)?, &spec, &single)?;
    state.write_files(out, header_extra(&spec, &logical))?;
    let nonzero = state.amplitudes().iter().filter(|a| a.norm() > 1e-12).count();
    print_json(&json!({
        "code": spec.name,
        "grid_n": code.grid_n,
        "mode_count": spec.mode_count,
        "nonzero_amplitudes": nonzero,
        "files": [out.with_extension("bin"), out.with_extension("json")],
    }))?;
    Ok(Outcome::Ok)
}

fn cmd_inject(state: &Path, error: &ErrorArgs, out: &Path) -> anyhow::Result<Outcome> {
    let (mut psi, header) = MultiModeState::read_files(state)
        .with_context(|| format!("reading state {}", state.display()))?;
    let spec = error.spec(psi.grid().dx());
    spec.apply(&mut psi)?;
    psi.write_files(out, header.extra)?;
    print_json(&json!({ "error": spec, "files": [out.with_extension("bin"), out.with_extension("json")] }))?;
    Ok(Outcome::Ok)
}

/// Fresh encoding of the logical state recorded in an `encode` header.
fn reference_from_header(extra: &serde_json::Value, code: &CodeSpec, grid: &GridSpec) -> Option<MultiModeState> {
    let logical: LogicalSpec = serde_json::from_value(extra.get("logical")?.clone()).ok()?;
    let single = grid.with_modes(1).ok()?;
    encode(&logical.wavefunction(&single).ok()?, code, &single).ok()
}

fn check_fidelity(value: f64, min: Option<f64>) -> Outcome {
    match min {
        Some(m) if value < m => {
            eprintln!("fidelity {value} is below {m}");
            Outcome::Failed
        }
        _ => Outcome::Ok,
    }
}

fn cmd_decode(
    state: &Path,
    code: Option<&str>,
    noise: &NoiseArgs,
    out: Option<&Path>,
    min_fidelity: Option<f64>,
) -> anyhow::Result<Outcome> {
    let (psi, header) = MultiModeState::read_files(state)
        .with_context(|| format!("reading state {}", state.display()))?;
    let name = match code {
        Some(c) => c.to_string(),
        None => match header.extra.get("code").and_then(|c| c.as_str()) {
            Some(c) => c.to_string(),
            None => bail!(Error::Config("state header names no code; pass --code".into())),
        },
    };
    let spec = code_by_name(&name)?;
    let grid = *psi.grid();
    let model = noise.model(grid.dx())?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let (record, collapsed) = extract_syndrome(&psi, &spec, &model, noise.route(), &mut rng)?;
    let fix = correct(&collapsed, &spec, &record)?;
    let fid = match reference_from_header(&header.extra, &spec, &grid) {
        Some(reference) => Some(fidelity(&reference, &fix.state)?.clamp(0.0, 1.0)),
        None => None,
    };
    if let Some(path) = out {
        fix.state.write_files(path, header.extra.clone())?;
    }
    print_json(&json!({
        "syndrome": record,
        "inferred_error": fix.inferred,
        "applied": fix.applied,
        "flagged": fix.flagged,
        "post_correction_fidelity": fid,
    }))?;
    Ok(match (fid, min_fidelity) {
        (None, Some(_)) => {
            eprintln!("no reference state recorded; cannot check fidelity");
            Outcome::Failed
        }
        (Some(f), m) => check_fidelity(f, m),
        (None, None) => Outcome::Ok,
    })
}

fn cmd_cycle(
    code: &CodeArgs,
    logical: &LogicalArgs,
    error: &ErrorArgs,
    noise: &NoiseArgs,
    min_fidelity: Option<f64>,
) -> anyhow::Result<Outcome> {
    let spec = code_by_name(&code.code)?;
    let single = GridSpec::new(code.grid_n, 1)?;
    let psi = logical.spec(code.grid_n).wavefunction(&single)?;
    let err = error.spec(single.dx());
    let model = noise.model(single.dx())?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let outcome = run_qec_cycle_detailed(&psi, &spec, &single, &err, &model, noise.route(), &mut rng)?;
    print_json(&outcome.report)?;
    Ok(check_fidelity(outcome.report.post_correction_fidelity, min_fidelity))
}

const PLOT_SCRIPT: &str = r#"import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
rows = list(csv.DictReader(open(path)))
s = [float(r["sigma_over_dx"]) for r in rows]
f = [float(r["mean_fidelity"]) for r in rows]
e = [float(r["std_fidelity"]) / float(r["trials"]) ** 0.5 for r in rows]
plt.errorbar(s, f, yerr=e, fmt="o-", label="Monte-Carlo")
if all(r["analytic_fidelity"] for r in rows):
    plt.plot(s, [float(r["analytic_fidelity"]) for r in rows], "k--", label="prediction")
plt.xlabel("record noise σ / dx")
plt.ylabel("logical fidelity")
plt.legend()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"#;

fn cmd_sweep(
    config: &Path,
    out: Option<PathBuf>,
    trial_out: Option<PathBuf>,
    plot_script: Option<&Path>,
    threads: Option<usize>,
) -> anyhow::Result<Outcome> {
    let mut cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    if out.is_some() {
        cfg.output = out;
    }
    if trial_out.is_some() {
        cfg.trial_output = trial_out;
    }
    if cfg.threads.is_none() {
        cfg.threads = threads;
    }
    let text = run_and_write(&cfg)?;
    if cfg.output.is_none() {
        print_text(&text)?;
    }
    if let Some(path) = plot_script {
        let csv = cfg
            .output
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "sweep.csv".into());
        fs::write(path, PLOT_SCRIPT.replace("{csv}", &csv))?;
    }
    Ok(Outcome::Ok)
}

fn cmd_transpile(
    input: &Path,
    enumerate: bool,
    assignment: Option<&str>,
    options: EnumerateOptions,
    out_dir: Option<&Path>,
    threads: Option<usize>,
) -> anyhow::Result<Outcome> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let qc = parse_qubit_circuit(&text)?;
    if !enumerate {
        let a = match assignment {
            Some(bits) => SignAssignment::parse(bits)?,
            None => SignAssignment::all_sum(qc.xor_count()),
        };
        match out_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let mut f = fs::File::create(dir.join(format!("encoder_{a}.json")))?;
                emit_cv_circuit(&qc, &a, &mut f)?;
            }
            None => emit_cv_circuit(&qc, &a, &mut std::io::stdout().lock())?,
        }
        return Ok(Outcome::Ok);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build()?;
    let verdicts = pool.install(|| enumerate_valid_assignments(&qc, &options))?;
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_verdict_csv(&verdicts, fs::File::create(dir.join("verdicts.csv"))?)?;
            for v in verdicts.iter().filter(|v| v.valid) {
                let mut f = fs::File::create(dir.join(format!("encoder_{}.json", v.assignment)))?;
                f.write_all(v.circuit.to_json().as_bytes())?;
                f.write_all(b"\n")?;
            }
        }
        None => write_verdict_csv(&verdicts, std::io::stdout().lock())?,
    }
    let valid = verdicts.iter().filter(|v| v.valid).count();
    eprintln!("{valid} of {} assignments valid", verdicts.len());
    Ok(if valid > 0 { Outcome::Ok } else { Outcome::Failed })
}

fn cmd_check(code: Option<&str>, encoder: Option<&Path>, class: ErrorClass) -> anyhow::Result<Outcome> {
    let spec = match (code, encoder) {
        (Some(name), _) => code_by_name(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            CodeSpec::from_encoder("custom", Circuit::from_json(&text)?)?
        }
        (None, None) => unreachable!("clap requires one of --code and --encoder"),
    };
    let report = check_correctability(&spec);
    print_text(&format!("{}\n", report.to_json()))?;
    let ok = match class {
        ErrorClass::Displacement => report.correctable,
        ErrorClass::Position => report.position_only.correctable,
        ErrorClass::Momentum => report.momentum_only.correctable,
    };
    Ok(if ok { Outcome::Ok } else { Outcome::Failed })
}
