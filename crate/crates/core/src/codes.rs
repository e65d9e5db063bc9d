//! Built-in codes: the 3-mode position repetition code, the 9-mode concatenated code and the
//! 5-mode code correcting an arbitrary displacement on any single mode.
//!
//! Every code encodes logical mode 0; all other modes are ancillas prepared in `|x = 0⟩`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitRecord, Gate, GateCounts};
use crate::grid::{GridSpec, MultiModeState};
use crate::symplectic::{forms_matrix, nullifiers_for_encoder, Nullifier, RANK_TOLERANCE};
use crate::{Error, Result};

pub const REPETITION3: &str = "repetition3";
pub const SHOR9: &str = "shor9";
pub const CV5: &str = "cv5";

pub const BUILTIN_CODES: [&str; 3] = [REPETITION3, SHOR9, CV5];

#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec {
    pub name: String,
    pub mode_count: usize,
    pub logical_mode: usize,
    pub ancilla_modes: Vec<usize>,
    pub encoder: Circuit,
    pub nullifiers: Vec<Nullifier>,
    pub gate_counts: GateCounts,
    /// Readout forms to measure instead of a basis searched from the nullifiers.
    pub readout_forms: Option<Vec<Vec<f64>>>,
}

impl CodeSpec {
    /// Code prepared by `encoder` from logical mode 0 and ancillas `1..M` in `|x = 0⟩`.
    pub fn from_encoder(name: &str, encoder: Circuit) -> Result<Self> {
        let m = encoder.mode_count();
        if m < 2 {
            return Err(Error::InconsistentAncillas(
                "a code needs at least one ancilla".into(),
            ));
        }
        let ancilla_modes: Vec<usize> = (1..m).collect();
        let nullifiers = nullifiers_for_encoder(&encoder, &ancilla_modes)?;
        let rows: Vec<Vec<f64>> = nullifiers.iter().map(|n| n.coeffs.clone()).collect();
        let h = forms_matrix(&rows, 2 * m);
        let sv = h.singular_values();
        if sv.min() <= RANK_TOLERANCE * sv.max() {
            return Err(Error::Degenerate("derived nullifiers are dependent".into()));
        }
        Ok(Self {
            name: name.to_string(),
            mode_count: m,
            logical_mode: 0,
            ancilla_modes,
            gate_counts: encoder.gate_counts(),
            encoder,
            nullifiers,
            readout_forms: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CodeRecord::from(self)).expect("code serializes")
    }

    /// Rebuilds from the stored encoder; stored nullifiers must match the derived ones.
    pub fn from_json(text: &str) -> Result<Self> {
        let record: CodeRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let mut code = CodeSpec::from_encoder(&record.name, record.encoder.try_into()?)?;
        let stored: Vec<&Vec<f64>> = record.nullifiers.iter().map(|n| &n.coeffs).collect();
        let derived: Vec<&Vec<f64>> = code.nullifiers.iter().map(|n| &n.coeffs).collect();
        if stored != derived {
            return Err(Error::Parse {
                location: "nullifiers".into(),
                message: "stored nullifiers do not match the encoder".into(),
            });
        }
        code.readout_forms = record.readout_forms;
        Ok(code)
    }
}

#[derive(Serialize, Deserialize)]
struct NullifierRecord {
    coeffs: Vec<f64>,
    nominal_value: f64,
    #[serde(default)]
    form: String,
}

#[derive(Serialize, Deserialize)]
struct CodeRecord {
    name: String,
    mode_count: usize,
    logical_mode: usize,
    ancilla_modes: Vec<usize>,
    encoder: CircuitRecord,
    nullifiers: Vec<NullifierRecord>,
    gate_counts: GateCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    readout_forms: Option<Vec<Vec<f64>>>,
}

impl From<&CodeSpec> for CodeRecord {
    fn from(c: &CodeSpec) -> Self {
        CodeRecord {
            name: c.name.clone(),
            mode_count: c.mode_count,
            logical_mode: c.logical_mode,
            ancilla_modes: c.ancilla_modes.clone(),
            encoder: CircuitRecord::from(&c.encoder),
            nullifiers: c
                .nullifiers
                .iter()
                .map(|n| NullifierRecord {
                    coeffs: n.coeffs.clone(),
                    nominal_value: n.nominal_value,
                    form: n.describe(),
                })
                .collect(),
            gate_counts: c.gate_counts,
            readout_forms: c.readout_forms.clone(),
        }
    }
}

fn sum(control: usize, target: usize) -> Gate {
    Gate::Sum { control, target }
}

fn sum_inv(control: usize, target: usize) -> Gate {
    Gate::SumInv { control, target }
}

/// `|x⟩ → |x, x, x⟩`. Reads out the three pairwise differences `x1 - x0`, `x2 - x1`, `x0 - x2`.
pub fn build_repetition3() -> CodeSpec {
    let encoder = Circuit::from_gates(3, vec![sum(0, 1), sum(0, 2)]).expect("valid gates");
    let mut code = CodeSpec::from_encoder(REPETITION3, encoder).expect("valid encoder");
    code.readout_forms = Some(vec![
        vec![-1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, -1.0, 1.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.0],
    ]);
    code
}

/// `|x⟩ → ∫dw dy dz e^{2ix(w+y+z)} |w,w,w, y,y,y, z,z,z⟩`.
pub fn build_shor9() -> CodeSpec {
    let gates = vec![
        sum(0, 3),
        sum(0, 6),
        Gate::Fourier(0),
        Gate::Fourier(3),
        Gate::Fourier(6),
        sum(0, 1),
        sum(0, 2),
        sum(3, 4),
        sum(3, 5),
        sum(6, 7),
        sum(6, 8),
    ];
    let encoder = Circuit::from_gates(9, gates).expect("valid gates");
    CodeSpec::from_encoder(SHOR9, encoder).expect("valid encoder")
}

/// Sign assignment of the seven generalised XORs of [`build_cv5`], in gate order
/// (`false` = Sum, `true` = SumInv).
pub const CV5_ASSIGNMENT: [bool; 7] = [false, false, false, false, false, true, true];

/// `|x⟩ → ∫dw dy dz e^{2i(wy + xz)} |z, y+x, w+x, w-z, y-z⟩` with seven Sum-type gates.
pub fn build_cv5() -> CodeSpec {
    let gates = vec![
        sum(0, 1),
        sum(0, 2),
        Gate::Fourier(3),
        sum(3, 4),
        Gate::Fourier(4),
        Gate::Fourier(0),
        sum(4, 1),
        sum(3, 2),
        sum_inv(0, 3),
        sum_inv(0, 4),
    ];
    let encoder = Circuit::from_gates(5, gates).expect("valid gates");
    CodeSpec::from_encoder(CV5, encoder).expect("valid encoder")
}

pub fn code_by_name(name: &str) -> Result<CodeSpec> {
    match name {
        REPETITION3 => Ok(build_repetition3()),
        SHOR9 => Ok(build_shor9()),
        CV5 => Ok(build_cv5()),
        other => Err(Error::UnsupportedCode(format!(
            "{other:?} (known: {})",
            BUILTIN_CODES.join(", ")
        ))),
    }
}

/// Encoded logical eigenstate `|x_j⟩` assembled from the closed-form superposition.
///
/// The integration variables run over the centered grid offsets; with `dx² = π/N` the phase
/// `e^{2i·a·b}` of two grid values is `e^{2πi·c_a·c_b/N}` for their integer offsets.
pub fn direct_encoded_state(code: &CodeSpec, grid: &GridSpec, logical_index: usize) -> Result<MultiModeState> {
    let n = grid.n_points();
    if logical_index >= n {
        return Err(Error::IndexOutOfRange {
            index: logical_index,
            n,
        });
    }
    let grid = grid.with_modes(code.mode_count)?;
    let cx = grid.offset(logical_index);
    let offsets: Vec<i64> = (0..n).map(|j| grid.offset(j)).collect();
    let phase = |k: i64| Complex64::from_polar(1.0, 2.0 * PI * k.rem_euclid(n as i64) as f64 / n as f64);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut add = |tuple: &[i64], amp: Complex64| {
        let flat = tuple
            .iter()
            .fold(0, |acc, &c| acc * n + grid.index_of_offset(c));
        amplitudes[flat] += amp;
    };
    match code.name.as_str() {
        REPETITION3 => add(&[cx, cx, cx], Complex64::new(1.0, 0.0)),
        SHOR9 => {
            for &w in &offsets {
                for &y in &offsets {
                    for &z in &offsets {
                        add(&[w, w, w, y, y, y, z, z, z], phase(cx * (w + y + z)));
                    }
                }
            }
        }
        CV5 => {
            for &w in &offsets {
                for &y in &offsets {
                    for &z in &offsets {
                        add(&[z, y + cx, w + cx, w - z, y - z], phase(w * y + cx * z));
                    }
                }
            }
        }
        other => {
            return Err(Error::UnsupportedCode(format!(
                "no closed form for {other:?}"
            )))
        }
    }
    let mut state = MultiModeState::from_amplitudes(grid, amplitudes)?;
    state.normalize()?;
    Ok(state)
}

/// `encoder · (ψ ⊗ |0⟩^{⊗(M-1)})`; linear in `ψ`.
pub fn encode(logical: &[Complex64], code: &CodeSpec, grid: &GridSpec) -> Result<MultiModeState> {
    let grid = grid.with_modes(code.mode_count)?;
    let n = grid.n_points();
    if logical.len() != n {
        return Err(Error::InvalidGrid(format!(
            "logical wavefunction has {} samples, grid has {n}",
            logical.len()
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.len()];
    let stride = grid.stride(code.logical_mode);
    let center_flat: usize = code
        .ancilla_modes
        .iter()
        .map(|&a| grid.center() * grid.stride(a))
        .sum();
    for (j, a) in logical.iter().enumerate() {
        amplitudes[center_flat + j * stride] = *a;
    }
    let mut state = MultiModeState::from_amplitudes(grid, amplitudes)?;
    state.apply_circuit(&code.encoder)?;
    Ok(state)
}
