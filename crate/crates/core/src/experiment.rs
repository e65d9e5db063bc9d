//! Config-driven Monte-Carlo sweeps over measurement noise.
//!
//! Trial `t` at sweep point `i` draws from its own ChaCha8 stream, seeded with the config seed
//! and stream id `(i << 40) | t`. Trials run on a rayon pool in fixed-size chunks and are reduced
//! sequentially in trial order, so the output is independent of the thread count.
//!
//! ```toml
//! code = "repetition3"
//! grid_n = 32
//! trials = 1000
//! seed = 7
//! output = "sweep.csv"
//!
//! [logical]
//! kind = "two_peak"
//! peak_points = 4.0
//! width_points = 1.0
//!
//! [error]
//! kind = "displacement"
//! mode = 0
//! shift_points = 15
//!
//! [measurement]
//! sigmas_dx = [0.0, 1.0, 2.0, 4.0]
//! repetitions = 1
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{code_by_name, CodeSpec, REPETITION3};
use crate::grid::{
    density_fidelity, eigenstate_wavefunction, sampled_wavefunction, trace_distance,
    DensityMatrix, GridSpec,
};
use crate::syndrome::{
    decoherence_prediction, run_qec_cycle_detailed, ErrorSpec, MeasurementModel, NoiseKind,
    ReadoutRoute,
};
use crate::{Error, Result};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "CVQEC_THREADS";

const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogicalSpec {
    Eigenstate { index: usize },
    /// Gaussian amplitude `exp(-(x - c)²/(2w²))`, center and width in grid points.
    Gaussian { center_points: f64, width_points: f64 },
    /// Equal-weight superposition of Gaussians at `±peak_points`.
    TwoPeak { peak_points: f64, width_points: f64 },
}

impl LogicalSpec {
    pub fn wavefunction(&self, grid: &GridSpec) -> Result<Vec<Complex64>> {
        let dx = grid.dx();
        let bump = |c: f64, w: f64| {
            move |x: f64| {
                let u = (x - c * dx) / (w * dx);
                (-0.5 * u * u).exp()
            }
        };
        match *self {
            LogicalSpec::Eigenstate { index } => eigenstate_wavefunction(grid, index),
            LogicalSpec::Gaussian {
                center_points,
                width_points,
            } => {
                check_width(width_points)?;
                let f = bump(center_points, width_points);
                sampled_wavefunction(grid, |x| Complex64::new(f(x), 0.0))
            }
            LogicalSpec::TwoPeak {
                peak_points,
                width_points,
            } => {
                check_width(width_points)?;
                let (f, g) = (bump(peak_points, width_points), bump(-peak_points, width_points));
                sampled_wavefunction(grid, |x| Complex64::new(f(x) + g(x), 0.0))
            }
        }
    }
}

fn check_width(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("width must be positive, got {w}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSweep {
    /// Noise widths in units of `dx`; merged with `sigmas`.
    #[serde(default)]
    pub sigmas_dx: Vec<f64>,
    /// Noise widths in position units.
    #[serde(default)]
    pub sigmas: Vec<f64>,
    #[serde(default = "one")]
    pub repetitions: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub code: String,
    pub grid_n: usize,
    pub logical: LogicalSpec,
    pub error: ErrorSpec,
    pub measurement: MeasurementSweep,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Optional per-trial CSV.
    #[serde(default)]
    pub trial_output: Option<PathBuf>,
    #[serde(default)]
    pub route: ReadoutRoute,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let code = code_by_name(&self.code)?;
        GridSpec::new(self.grid_n, code.mode_count)?;
        self.points()?;
        if self.measurement.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    /// Sweep points as `σ` in position units, sorted ascending.
    pub fn points(&self) -> Result<Vec<f64>> {
        let dx = (std::f64::consts::PI / self.grid_n as f64).sqrt();
        let mut sigmas: Vec<f64> = self
            .measurement
            .sigmas_dx
            .iter()
            .map(|s| s * dx)
            .chain(self.measurement.sigmas.iter().copied())
            .collect();
        if sigmas.is_empty() {
            return Err(Error::Config("the measurement sweep has no sigma values".into()));
        }
        if let Some(bad) = sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::Config(format!("sigma must be finite and >= 0, got {bad}")));
        }
        sigmas.sort_by(f64::total_cmp);
        Ok(sigmas)
    }
}

/// Deterministic stream for one trial.
pub fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 40) | trial as u64);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub pre_error_fidelity: f64,
    pub post_correction_fidelity: f64,
    pub logical_fidelity: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub sigma: f64,
    pub repetitions: usize,
    pub trials: usize,
    pub mean_logical_fidelity: f64,
    pub std_logical_fidelity: f64,
    pub mean_full_fidelity: f64,
    pub flagged: usize,
    /// Trial-averaged logical density matrix.
    pub mean_density: DensityMatrix,
    pub rows: Vec<TrialRow>,
}

impl PointResult {
    pub fn standard_error(&self) -> f64 {
        self.std_logical_fidelity / (self.trials as f64).sqrt()
    }
}

/// Inputs of one Monte-Carlo point.
pub struct PointSetup<'a> {
    pub code: &'a CodeSpec,
    pub grid: &'a GridSpec,
    pub logical: &'a [Complex64],
    pub error: &'a ErrorSpec,
    pub model: &'a MeasurementModel,
    pub route: ReadoutRoute,
    pub trials: usize,
    pub seed: u64,
    pub point: usize,
}

struct TrialOut {
    row: TrialRow,
    density: DensityMatrix,
}

/// Runs the trials of one sweep point on the current rayon pool.
pub fn run_point(setup: &PointSetup<'_>) -> Result<PointResult> {
    let n = setup.grid.n_points();
    let mut density = DensityMatrix::zeros(n, n);
    let mut rows = Vec::with_capacity(setup.trials);
    let (mut sum, mut sum_sq, mut full, mut flagged) = (0.0, 0.0, 0.0, 0);
    for start in (0..setup.trials).step_by(CHUNK) {
        let end = (start + CHUNK).min(setup.trials);
        let chunk: Vec<TrialOut> = (start..end)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(setup.seed, setup.point, t);
                let out = run_qec_cycle_detailed(
                    setup.logical,
                    setup.code,
                    setup.grid,
                    setup.error,
                    setup.model,
                    setup.route,
                    &mut rng,
                )?;
                Ok(TrialOut {
                    row: TrialRow {
                        trial: t,
                        pre_error_fidelity: out.report.pre_error_fidelity,
                        post_correction_fidelity: out.report.post_correction_fidelity,
                        logical_fidelity: out.report.logical_fidelity,
                        flagged: out.report.flagged.is_some(),
                    },
                    density: out.logical_density,
                })
            })
            .collect::<Result<_>>()?;
        for t in chunk {
            sum += t.row.logical_fidelity;
            sum_sq += t.row.logical_fidelity * t.row.logical_fidelity;
            full += t.row.post_correction_fidelity;
            flagged += usize::from(t.row.flagged);
            density += t.density;
            rows.push(t.row);
        }
    }
    let k = setup.trials as f64;
    let mean = sum / k;
    let var = if setup.trials > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(PointResult {
        sigma: match setup.model.kind {
            NoiseKind::Gaussian { sigma } => sigma,
            _ => 0.0,
        },
        repetitions: setup.model.repetitions,
        trials: setup.trials,
        mean_logical_fidelity: mean,
        std_logical_fidelity: var.sqrt(),
        mean_full_fidelity: full / k,
        flagged,
        mean_density: density / Complex64::new(k, 0.0),
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub result: PointResult,
    /// Analytic logical fidelity and Monte-Carlo trace distance, repetition code only.
    pub analytic: Option<(f64, f64)>,
}

pub const SWEEP_HEADER: [&str; 10] = [
    "sigma",
    "sigma_over_dx",
    "repetitions",
    "trials",
    "mean_fidelity",
    "std_fidelity",
    "mean_full_fidelity",
    "analytic_fidelity",
    "trace_distance",
    "flagged",
];

/// Thread count from the config, then [`THREADS_ENV`], then rayon's default.
pub fn thread_count(config: &ExperimentConfig) -> Result<Option<usize>> {
    if let Some(t) = config.threads {
        return Ok(Some(t.max(1)));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|t| Some(t.max(1)))
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count(config)? {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| sweep_inner(config))
}

fn sweep_inner(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let code = code_by_name(&config.code)?;
    let grid = GridSpec::new(config.grid_n, code.mode_count)?;
    let single = grid.with_modes(1)?;
    let logical = config.logical.wavefunction(&single)?;
    let mut rows = Vec::new();
    for (point, sigma) in config.points()?.into_iter().enumerate() {
        let model = MeasurementModel::gaussian(sigma, config.measurement.repetitions)?;
        let result = run_point(&PointSetup {
            code: &code,
            grid: &grid,
            logical: &logical,
            error: &config.error,
            model: &model,
            route: config.route,
            trials: config.trials,
            seed: config.seed,
            point,
        })?;
        let analytic = if code.name == REPETITION3 {
            let rho = decoherence_prediction(&logical, &code, &single, &model)?;
            Some((
                density_fidelity(&rho, &logical),
                trace_distance(&result.mean_density, &rho),
            ))
        } else {
            None
        };
        rows.push(SweepRow { result, analytic });
    }
    Ok(rows)
}

fn fmt_f(v: f64) -> String {
    format!("{v:.12}")
}

pub fn write_sweep_csv(config: &ExperimentConfig, rows: &[SweepRow], sink: impl Write) -> Result<()> {
    let dx = (std::f64::consts::PI / config.grid_n as f64).sqrt();
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let p = &r.result;
        let (af, td) = match r.analytic {
            Some((a, t)) => (fmt_f(a), fmt_f(t)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            fmt_f(p.sigma),
            fmt_f(p.sigma / dx),
            p.repetitions.to_string(),
            p.trials.to_string(),
            fmt_f(p.mean_logical_fidelity),
            fmt_f(p.std_logical_fidelity),
            fmt_f(p.mean_full_fidelity),
            af,
            td,
            p.flagged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const TRIAL_HEADER: [&str; 9] = [
    "code",
    "error",
    "sigma",
    "repetitions",
    "trial",
    "pre_error_fidelity",
    "post_correction_fidelity",
    "logical_fidelity",
    "flagged",
];

pub fn write_trial_csv(config: &ExperimentConfig, rows: &[SweepRow], sink: impl Write) -> Result<()> {
    let error = serde_json::to_string(&config.error)?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRIAL_HEADER)?;
    for r in rows {
        for t in &r.result.rows {
            w.write_record([
                config.code.clone(),
                error.clone(),
                fmt_f(r.result.sigma),
                r.result.repetitions.to_string(),
                t.trial.to_string(),
                fmt_f(t.pre_error_fidelity),
                fmt_f(t.post_correction_fidelity),
                fmt_f(t.logical_fidelity),
                t.flagged.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep and writes the configured outputs. Returns the sweep CSV text.
pub fn run_and_write(config: &ExperimentConfig) -> Result<String> {
    let rows = run_sweep(config)?;
    let mut buf = Vec::new();
    write_sweep_csv(config, &rows, &mut buf)?;
    if let Some(path) = &config.output {
        std::fs::write(path, &buf)?;
    }
    if let Some(path) = &config.trial_output {
        let mut trial = Vec::new();
        write_trial_csv(config, &rows, &mut trial)?;
        std::fs::write(path, trial)?;
    }
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
code = "repetition3"
grid_n = 16
trials = 5
seed = 3

[logical]
kind = "two_peak"
peak_points = 2.0
width_points = 1.0

[error]
kind = "displacement"
mode = 0
shift_points = 3

[measurement]
sigmas_dx = [1.0, 0.0]
"#;

    #[test]
    fn config_parses_and_sorts_points() {
        let c = ExperimentConfig::from_toml(CONFIG).unwrap();
        assert_eq!(c.measurement.repetitions, 1);
        let p = c.points().unwrap();
        assert_eq!(p[0], 0.0);
        assert!(p[1] > 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let zero = CONFIG.replace("trials = 5", "trials = 0");
        assert!(ExperimentConfig::from_toml(&zero).is_err());
        let code = CONFIG.replace("repetition3", "steane7");
        assert!(ExperimentConfig::from_toml(&code).is_err());
        let extra = format!("{CONFIG}\nbogus = 1\n");
        assert!(ExperimentConfig::from_toml(&extra).is_err());
    }

    #[test]
    fn trial_streams_differ() {
        use rand::Rng;
        let a: u64 = trial_rng(1, 0, 0).random();
        let b: u64 = trial_rng(1, 0, 1).random();
        let c: u64 = trial_rng(1, 1, 0).random();
        assert!(a != b && a != c && b != c);
    }
}
