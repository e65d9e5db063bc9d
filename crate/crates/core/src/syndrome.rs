//! Syndrome readout, finite-precision measurement, correction and full QEC cycles.
//!
//! Each readout form `f·R` has integer coefficients in `{-1, 0, 1}` and no mode carries both an
//! `x` and a `p` coefficient. It is read into a fresh ancilla in `|x = 0⟩` by Sum/SumInv gates
//! from the involved data modes; a `p` coefficient on mode `m` is read by conjugating that mode
//! with `F†(m) … F(m)`, which turns `p_m` into the position `x_m` for the duration of the copy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::circuit::{Circuit, Gate};
use crate::codes::{encode, CodeSpec};
use crate::grid::{density_fidelity, fidelity, DensityMatrix, GridSpec, MultiModeState};
use crate::symplectic::{
    describe_form, integer_det, integer_vector, DisplacementError, SyndromeMap,
};
use crate::{Error, Result};

/// Upper bound on readout-basis search nodes before giving up.
const SEARCH_BUDGET: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Exact,
    /// Additive zero-mean Gaussian record noise, `sigma` in position units.
    Gaussian { sigma: f64 },
    /// Record offsets drawn uniformly from a table, in position units.
    Custom { offsets: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub kind: NoiseKind,
    pub repetitions: usize,
}

impl MeasurementModel {
    pub fn exact() -> Self {
        Self {
            kind: NoiseKind::Exact,
            repetitions: 1,
        }
    }

    pub fn gaussian(sigma: f64, repetitions: usize) -> Result<Self> {
        let model = Self {
            kind: NoiseKind::Gaussian { sigma },
            repetitions,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn custom(offsets: Vec<f64>, repetitions: usize) -> Result<Self> {
        let model = Self {
            kind: NoiseKind::Custom { offsets },
            repetitions,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        match &self.kind {
            NoiseKind::Exact => Ok(()),
            NoiseKind::Gaussian { sigma } if *sigma >= 0.0 && sigma.is_finite() => Ok(()),
            NoiseKind::Gaussian { sigma } => {
                Err(Error::Config(format!("sigma must be finite and >= 0, got {sigma}")))
            }
            NoiseKind::Custom { offsets } if offsets.is_empty() => {
                Err(Error::Config("custom noise table is empty".into()))
            }
            NoiseKind::Custom { offsets } if offsets.iter().any(|o| !o.is_finite()) => {
                Err(Error::Config("custom noise table has non-finite entries".into()))
            }
            NoiseKind::Custom { .. } => Ok(()),
        }
    }

    /// True when reported values always equal the measured ones.
    pub fn is_exact(&self) -> bool {
        match &self.kind {
            NoiseKind::Exact => true,
            NoiseKind::Gaussian { sigma } => *sigma == 0.0,
            NoiseKind::Custom { offsets } => offsets.iter().all(|o| *o == 0.0),
        }
    }

    /// Mean of `repetitions` independent record offsets.
    fn sample_offset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total: f64 = match &self.kind {
            NoiseKind::Exact => return 0.0,
            NoiseKind::Gaussian { sigma } => {
                if *sigma == 0.0 {
                    return 0.0;
                }
                let normal = Normal::new(0.0, *sigma).expect("validated sigma");
                (0..self.repetitions).map(|_| normal.sample(rng)).sum()
            }
            NoiseKind::Custom { offsets } => (0..self.repetitions)
                .map(|_| offsets[rng.random_range(0..offsets.len())])
                .sum(),
        };
        total / self.repetitions as f64
    }

    /// Standard deviation of one reported value.
    pub fn reported_sigma(&self) -> f64 {
        let single = match &self.kind {
            NoiseKind::Exact => 0.0,
            NoiseKind::Gaussian { sigma } => *sigma,
            NoiseKind::Custom { offsets } => {
                let n = offsets.len() as f64;
                let mean = offsets.iter().sum::<f64>() / n;
                (offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / n).sqrt()
            }
        };
        single / (self.repetitions as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyndromeRecord {
    /// Measured form values (grid positions).
    pub true_values: Vec<f64>,
    pub reported_values: Vec<f64>,
    pub nullifier_ids: Vec<usize>,
    /// Readable readout forms, 1-indexed.
    pub forms: Vec<String>,
    /// Reported values carry no record noise.
    pub exact: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutRoute {
    /// Ancilla-free projection onto form-value subspaces, equivalent to running the
    /// ancilla circuit and measuring the ancilla.
    #[default]
    Projective,
    /// Appends one ancilla per form, runs its readout segment, measures and discards it.
    Circuit,
}

/// Signed, `{-1,0,1}`-valued readout forms as `(x coefficients, p coefficients)` per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutForm {
    pub coeffs: Vec<f64>,
    x: Vec<i8>,
    p: Vec<i8>,
}

impl ReadoutForm {
    fn new(coeffs: Vec<f64>) -> Result<Self> {
        let m = coeffs.len() / 2;
        let ints = integer_vector(&coeffs)
            .filter(|v| v.iter().all(|c| c.abs() <= 1))
            .ok_or_else(|| {
                Error::UnsupportedNullifier(format!(
                    "{} is not a ±1 combination",
                    describe_form(&coeffs)
                ))
            })?;
        let x: Vec<i8> = ints[..m].iter().map(|&c| c as i8).collect();
        let p: Vec<i8> = ints[m..].iter().map(|&c| c as i8).collect();
        if (0..m).any(|i| x[i] != 0 && p[i] != 0) {
            return Err(Error::UnsupportedNullifier(format!(
                "{} reads both quadratures of one mode",
                describe_form(&coeffs)
            )));
        }
        if x.iter().chain(&p).all(|c| *c == 0) {
            return Err(Error::UnsupportedNullifier("zero readout form".into()));
        }
        Ok(Self { coeffs, x, p })
    }

    fn momentum_modes(&self) -> impl Iterator<Item = usize> + '_ {
        self.p.iter().enumerate().filter(|(_, c)| **c != 0).map(|(m, _)| m)
    }

    /// Gates copying the form into `ancilla`.
    fn segment(&self, ancilla: usize) -> Vec<Gate> {
        let copy = |m: usize, c: i8| {
            if c > 0 {
                Gate::Sum {
                    control: m,
                    target: ancilla,
                }
            } else {
                Gate::SumInv {
                    control: m,
                    target: ancilla,
                }
            }
        };
        let mut gates = Vec::new();
        for (m, &c) in self.x.iter().enumerate() {
            if c != 0 {
                gates.push(copy(m, c));
            }
        }
        for (m, &c) in self.p.iter().enumerate() {
            if c != 0 {
                gates.push(Gate::FourierInv(m));
                gates.push(copy(m, c));
                gates.push(Gate::Fourier(m));
            }
        }
        gates
    }

    pub fn describe(&self) -> String {
        describe_form(&self.coeffs)
    }
}

#[derive(Clone, Debug)]
pub struct SyndromeCircuit {
    /// Data modes `0..M`, then one ancilla per form.
    pub circuit: Circuit,
    pub readout_modes: Vec<usize>,
    pub forms: Vec<ReadoutForm>,
}

/// Readout forms for `code`: its explicit override, or a `{-1,0,1}` integer recombination of
/// the nullifiers with unimodular combination matrix, so the forms generate the same lattice.
pub fn readout_forms(code: &CodeSpec) -> Result<Vec<ReadoutForm>> {
    if let Some(forms) = &code.readout_forms {
        let map = SyndromeMap::for_code(code);
        let forms = forms
            .iter()
            .map(|f| ReadoutForm::new(f.clone()))
            .collect::<Result<Vec<_>>>()?;
        for f in &forms {
            // A valid readout is a nullifier combination: its generator is a stabilizer.
            let m = code.mode_count;
            let mut d = vec![0.0; 2 * m];
            for i in 0..m {
                d[i] = -f.coeffs[m + i];
                d[m + i] = f.coeffs[i];
            }
            if !map.is_stabilizer_displacement(&d) {
                return Err(Error::UnsupportedNullifier(format!(
                    "{} is not in the nullifier span",
                    f.describe()
                )));
            }
        }
        return Ok(forms);
    }
    search_readout_basis(code)
}

fn search_readout_basis(code: &CodeSpec) -> Result<Vec<ReadoutForm>> {
    let rows: Vec<Vec<i64>> = code
        .nullifiers
        .iter()
        .map(|n| {
            let v = n.integer_coeffs().ok_or_else(|| {
                Error::UnsupportedNullifier(format!("{} is not integral", n.describe()))
            })?;
            let g = v.iter().fold(0i64, |g, c| gcd(g, *c));
            Ok(v.into_iter().map(|c| c / g.max(1)).collect())
        })
        .collect::<Result<_>>()?;
    let k = rows.len();
    let width = 2 * code.mode_count;
    let mut candidates: Vec<(Vec<i64>, ReadoutForm)> = Vec::new();
    let total = 3usize.pow(k as u32);
    for code_word in 1..total {
        let mut c = vec![0i64; k];
        let mut w = code_word;
        for ci in c.iter_mut() {
            *ci = (w % 3) as i64 - 1;
            w /= 3;
        }
        if c.iter().find(|v| **v != 0) != Some(&1) {
            continue;
        }
        let v: Vec<f64> = (0..width)
            .map(|j| c.iter().zip(&rows).map(|(ci, r)| ci * r[j]).sum::<i64>() as f64)
            .collect();
        if let Ok(form) = ReadoutForm::new(v) {
            candidates.push((c, form));
        }
    }
    candidates.sort_by_key(|(c, f)| {
        let support = c.iter().filter(|v| **v != 0).count();
        let weight = f.x.iter().chain(&f.p).filter(|v| **v != 0).count();
        let first = c.iter().position(|v| *v != 0).unwrap_or(0);
        (support, weight, first)
    });
    let mut chosen = Vec::new();
    let mut budget = SEARCH_BUDGET;
    if pick_basis(&candidates, k, 0, &mut chosen, &mut budget) {
        let mut forms: Vec<(usize, ReadoutForm)> = chosen
            .iter()
            .map(|&i| {
                let lead = candidates[i].0.iter().position(|v| *v != 0).unwrap_or(0);
                (lead, candidates[i].1.clone())
            })
            .collect();
        forms.sort_by_key(|(lead, _)| *lead);
        Ok(forms.into_iter().map(|(_, f)| f).collect())
    } else {
        Err(Error::UnsupportedNullifier(format!(
            "no ±1 readout basis for {}",
            code.name
        )))
    }
}

fn pick_basis(
    candidates: &[(Vec<i64>, ReadoutForm)],
    k: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    budget: &mut usize,
) -> bool {
    if chosen.len() == k {
        let c: Vec<Vec<i128>> = chosen
            .iter()
            .map(|&i| candidates[i].0.iter().map(|&v| v as i128).collect())
            .collect();
        return integer_det(c).abs() == 1;
    }
    for i in start..candidates.len() {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        chosen.push(i);
        if independent(candidates, chosen) && pick_basis(candidates, k, i + 1, chosen, budget) {
            return true;
        }
        chosen.pop();
    }
    false
}

fn independent(candidates: &[(Vec<i64>, ReadoutForm)], chosen: &[usize]) -> bool {
    let k = candidates[chosen[0]].0.len();
    let m = DMatrix::from_fn(chosen.len(), k, |i, j| candidates[chosen[i]].0[j] as f64);
    let sv = m.singular_values();
    sv.min() > 1e-9 * sv.max()
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Full readout circuit with one ancilla per form.
pub fn build_syndrome_circuit(code: &CodeSpec) -> Result<SyndromeCircuit> {
    let forms = readout_forms(code)?;
    let m = code.mode_count;
    let mut circuit = Circuit::new(m + forms.len());
    for (i, f) in forms.iter().enumerate() {
        for g in f.segment(m + i) {
            circuit.push(g)?;
        }
    }
    Ok(SyndromeCircuit {
        circuit,
        readout_modes: (m..m + forms.len()).collect(),
        forms,
    })
}

/// Measures one readout form, collapsing `state`. Returns the outcome as a centered offset.
fn measure_form<R: Rng + ?Sized>(
    state: &mut MultiModeState,
    form: &ReadoutForm,
    route: ReadoutRoute,
    rng: &mut R,
) -> Result<i64> {
    let grid = *state.grid();
    let m = grid.mode_count();
    match route {
        ReadoutRoute::Circuit => {
            let mut extended = state.append_mode(grid.center())?;
            let segment = Circuit::from_gates(m + 1, form.segment(m))?;
            extended.apply_circuit(&segment)?;
            let index = extended.measure_position(m, rng)?;
            *state = extended.discard_last_mode(index)?;
            Ok(grid.offset(index))
        }
        ReadoutRoute::Projective => {
            let conj: Vec<usize> = form.momentum_modes().collect();
            for &mode in &conj {
                state.apply_gate(&Gate::FourierInv(mode))?;
            }
            let n = grid.n_points();
            let center = grid.center() as i64;
            let mut value = vec![0i64; state.amplitudes().len()];
            for (i, (x, p)) in form.x.iter().zip(&form.p).enumerate() {
                let c = (*x + *p) as i64;
                if c != 0 {
                    for (v, d) in value.iter_mut().zip(grid.digits(i)) {
                        *v += c * (d as i64 - center);
                    }
                }
            }
            let value_index: Vec<usize> = value.iter().map(|v| grid.index_of_offset(*v)).collect();
            let mut probs = vec![0.0; n];
            for (a, v) in state.amplitudes().iter().zip(&value_index) {
                probs[*v] += a.norm_sqr();
            }
            let outcome = crate::grid::sample_index(&probs, rng);
            let kept: Vec<Complex64> = state
                .amplitudes()
                .iter()
                .zip(&value_index)
                .map(|(a, v)| if *v == outcome { *a } else { Complex64::new(0.0, 0.0) })
                .collect();
            let mut collapsed = MultiModeState::from_amplitudes(grid, kept)?;
            collapsed.normalize().map_err(|_| Error::ZeroNormSlice)?;
            for &mode in conj.iter().rev() {
                collapsed.apply_gate(&Gate::Fourier(mode))?;
            }
            *state = collapsed;
            Ok(grid.offset(outcome))
        }
    }
}

/// Reads every form of the code's readout basis in order, collapsing `state`, then adds record
/// noise per `model`. With `repetitions > 1` the collapsed value is re-read with fresh noise and
/// the mean is reported.
pub fn extract_syndrome<R: Rng + ?Sized>(
    state: &MultiModeState,
    code: &CodeSpec,
    model: &MeasurementModel,
    route: ReadoutRoute,
    rng: &mut R,
) -> Result<(SyndromeRecord, MultiModeState)> {
    model.validate()?;
    if state.grid().mode_count() != code.mode_count {
        return Err(Error::ModeCountMismatch {
            expected: code.mode_count,
            found: state.grid().mode_count(),
        });
    }
    let forms = readout_forms(code)?;
    let dx = state.grid().dx();
    let mut collapsed = state.clone();
    let mut true_values = Vec::with_capacity(forms.len());
    for f in &forms {
        true_values.push(measure_form(&mut collapsed, f, route, rng)? as f64 * dx);
    }
    let reported_values = true_values
        .iter()
        .map(|v| v + model.sample_offset(rng))
        .collect();
    Ok((
        SyndromeRecord {
            true_values,
            reported_values,
            nullifier_ids: (0..forms.len()).collect(),
            forms: forms.iter().map(ReadoutForm::describe).collect(),
            exact: model.is_exact(),
        },
        collapsed,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correction {
    pub state: MultiModeState,
    pub inferred: Option<DisplacementError>,
    /// `(mode, shift points, kick points)` of the applied inverse displacement.
    pub applied: Option<(usize, i64, i64)>,
    /// Set when decoding failed and the state was passed through.
    pub flagged: Option<String>,
}

/// Decodes the record and applies the grid-rounded inverse displacement. Exact records use the
/// unique-match decoder; noisy records use the minimum-residual decoder.
pub fn correct(state: &MultiModeState, code: &CodeSpec, record: &SyndromeRecord) -> Result<Correction> {
    let forms = readout_forms(code)?;
    let rows: Vec<Vec<f64>> = forms.iter().map(|f| f.coeffs.clone()).collect();
    let map = SyndromeMap::with_forms(code, &rows);
    let decoded = if record.exact {
        map.decode(&record.reported_values)
    } else {
        map.decode_nearest(&record.reported_values)
    };
    let inferred = match decoded {
        Ok(e) => e,
        Err(e @ (Error::UnrecognizedSyndrome | Error::AmbiguousSyndrome(_))) => {
            return Ok(Correction {
                state: state.clone(),
                inferred: None,
                applied: None,
                flagged: Some(e.to_string()),
            })
        }
        Err(e) => return Err(e),
    };
    let grid = state.grid();
    let shift = (inferred.e_x / grid.dx()).round() as i64;
    let kick = (inferred.e_p / grid.dp()).round() as i64;
    let mut out = state.clone();
    if shift != 0 || kick != 0 {
        // Inverse of kick-then-shift is unshift-then-unkick.
        out.apply_displacement(inferred.mode, -shift, 0.0)?;
        out.apply_kick_points(inferred.mode, -kick)?;
    }
    Ok(Correction {
        state: out,
        inferred: Some(inferred),
        applied: Some((inferred.mode, shift, kick)),
        flagged: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorSpec {
    None,
    /// Kick by `kick_points·dp`, then shift by `shift_points` grid points.
    Displacement {
        mode: usize,
        #[serde(default)]
        shift_points: i64,
        #[serde(default)]
        kick_points: i64,
    },
    /// Convolution with the Gaussian kernel `K(y) = exp(-y²/(2·width²))`, `width` in position
    /// units.
    GaussianConvolution { mode: usize, width: f64 },
}

impl ErrorSpec {
    pub fn apply(&self, state: &mut MultiModeState) -> Result<()> {
        match *self {
            ErrorSpec::None => Ok(()),
            ErrorSpec::Displacement {
                mode,
                shift_points,
                kick_points,
            } => {
                let q = kick_points as f64 * state.grid().dp();
                state.apply_displacement(mode, shift_points, q)
            }
            ErrorSpec::GaussianConvolution { mode, width } => {
                let kernel = gaussian_kernel(state.grid(), width)?;
                state.apply_kernel_convolution(mode, &kernel).map(|_| ())
            }
        }
    }
}

pub fn gaussian_kernel(grid: &GridSpec, width: f64) -> Result<Vec<Complex64>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Config(format!("kernel width must be positive, got {width}")));
    }
    Ok(grid
        .positions()
        .iter()
        .map(|y| Complex64::new((-y * y / (2.0 * width * width)).exp(), 0.0))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QecCycleReport {
    pub pre_error_fidelity: f64,
    pub post_correction_fidelity: f64,
    /// `⟨ψ|ρ_L|ψ⟩` for the logical-mode state after running the inverse encoder.
    pub logical_fidelity: f64,
    pub inferred_error: Option<DisplacementError>,
    pub applied: Option<(usize, i64, i64)>,
    pub flagged: Option<String>,
    pub syndrome: SyndromeRecord,
}

#[derive(Clone, Debug)]
pub struct CycleOutcome {
    pub report: QecCycleReport,
    pub corrected: MultiModeState,
    pub logical_density: DensityMatrix,
}

/// Reduced state of the logical mode after undoing the encoder.
pub fn logical_density(state: &MultiModeState, code: &CodeSpec) -> Result<DensityMatrix> {
    let mut decoded = state.clone();
    decoded.apply_circuit(&code.encoder.inverse())?;
    decoded.reduced_density(&[code.logical_mode])
}

/// encode → inject → extract → correct → compare against a fresh encoding.
pub fn run_qec_cycle<R: Rng + ?Sized>(
    logical: &[Complex64],
    code: &CodeSpec,
    grid: &GridSpec,
    error: &ErrorSpec,
    model: &MeasurementModel,
    rng: &mut R,
) -> Result<QecCycleReport> {
    run_qec_cycle_detailed(logical, code, grid, error, model, ReadoutRoute::default(), rng)
        .map(|o| o.report)
}

pub fn run_qec_cycle_detailed<R: Rng + ?Sized>(
    logical: &[Complex64],
    code: &CodeSpec,
    grid: &GridSpec,
    error: &ErrorSpec,
    model: &MeasurementModel,
    route: ReadoutRoute,
    rng: &mut R,
) -> Result<CycleOutcome> {
    let reference = encode(logical, code, grid)?;
    let mut noisy = reference.clone();
    error.apply(&mut noisy)?;
    let pre = fidelity(&reference, &noisy)?;
    let (record, collapsed) = extract_syndrome(&noisy, code, model, route, rng)?;
    let fix = correct(&collapsed, code, &record)?;
    let post = fidelity(&reference, &fix.state)?;
    let rho = logical_density(&fix.state, code)?;
    let logical_fidelity = density_fidelity(&rho, logical);
    Ok(CycleOutcome {
        report: QecCycleReport {
            pre_error_fidelity: pre.clamp(0.0, 1.0),
            post_correction_fidelity: post.clamp(0.0, 1.0),
            logical_fidelity: logical_fidelity.clamp(0.0, 1.0),
            inferred_error: fix.inferred,
            applied: fix.applied,
            flagged: fix.flagged,
            syndrome: record,
        },
        corrected: fix.state,
        logical_density: rho,
    })
}

/// Distribution of the residual shift left by grid-rounded correction, `P(k)` for the centered
/// offset `k`, indexed like grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftDistribution {
    pub probabilities: Vec<f64>,
}

impl ShiftDistribution {
    /// Residual from rounding a Gaussian position estimate of standard deviation `sigma_eff`.
    pub fn rounded_gaussian(grid: &GridSpec, sigma_eff: f64) -> Self {
        let n = grid.n_points();
        let mut probabilities = vec![0.0; n];
        if sigma_eff <= 0.0 {
            probabilities[grid.center()] = 1.0;
            return Self { probabilities };
        }
        let normal = NormalDist::new(0.0, sigma_eff).expect("positive sigma");
        let dx = grid.dx();
        // Integer shifts wrap on the periodic grid; fold far tails onto their residues.
        let reach = (12.0 * sigma_eff / dx).ceil() as i64 + 1;
        for k in -reach..=reach {
            let p = normal.cdf((k as f64 + 0.5) * dx) - normal.cdf((k as f64 - 0.5) * dx);
            probabilities[grid.index_of_offset(k)] += p;
        }
        Self { probabilities }
    }

    /// `Σ_k P(k) T_k ρ T_k†` on one mode.
    pub fn apply(&self, grid: &GridSpec, rho: &DensityMatrix) -> DensityMatrix {
        let n = grid.n_points();
        let mut out = DensityMatrix::zeros(n, n);
        for (idx, &p) in self.probabilities.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let k = grid.offset(idx).rem_euclid(n as i64) as usize;
            for i in 0..n {
                for j in 0..n {
                    out[((i + k) % n, (j + k) % n)] += rho[(i, j)] * p;
                }
            }
        }
        out
    }
}

/// Standard deviation of the position estimate for `mode` under `model`: the record noise
/// propagated through the least-squares estimator of the code's readout forms.
pub fn estimator_sigma(code: &CodeSpec, mode: usize, model: &MeasurementModel) -> Result<f64> {
    let forms = readout_forms(code)?;
    let a = DMatrix::from_fn(forms.len(), 1, |i, _| forms[i].coeffs[mode]);
    let norm_sq = a.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::Degenerate(format!(
            "mode {mode} position is not read out"
        )));
    }
    Ok(model.reported_sigma() / norm_sq.sqrt())
}

/// Predicted corrected state of the logical mode when a position error on it is read with
/// record noise: the pure input state smeared by the rounded residual-shift distribution.
///
/// The prediction assumes the decoder attributes the error to the right mode.
pub fn decoherence_prediction(
    logical: &[Complex64],
    code: &CodeSpec,
    grid: &GridSpec,
    model: &MeasurementModel,
) -> Result<DensityMatrix> {
    model.validate()?;
    let sigma_eff = match &model.kind {
        NoiseKind::Custom { .. } if !model.is_exact() => {
            return Err(Error::Config(
                "analytic prediction needs the exact or gaussian model".into(),
            ))
        }
        _ => estimator_sigma(code, code.logical_mode, model)?,
    };
    let rho = crate::grid::pure_density(logical);
    Ok(ShiftDistribution::rounded_gaussian(grid, sigma_eff).apply(grid, &rho))
}
