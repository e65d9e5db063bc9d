//! Qubit-to-CV circuit substitution.
//!
//! Hadamard becomes the Fourier gate, its inverse the inverse Fourier gate, and each XOR becomes
//! either Sum or SumInv. A [`SignAssignment`] picks one per XOR; candidates are kept when the
//! resulting code is parity covariant on a test grid and passes the correctability check.
//!
//! Qubit circuit JSON:
//!
//! ```json
//! {"qubit_count": 3, "gates": [{"type": "H", "modes": [0]}, {"type": "XOR", "modes": [0, 1, 2]}]}
//! ```
//!
//! An XOR with more than two modes is a fan-out: one control and several targets, expanded into
//! a pair (or more) of two-mode XORs in target order.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::codes::{encode, CodeSpec};
use crate::grid::{eigenstate_wavefunction, fidelity, GridSpec};
use crate::symplectic::{check_correctability, CorrectabilityReport};
use crate::{Error, Result};

/// The built-in 5-qubit encoding circuit.
pub const LAFLAMME5_FIXTURE: &str = include_str!("../fixtures/laflamme5_qubit.json");

/// The 3-qubit bit-flip repetition encoder.
pub const REPETITION3_FIXTURE: &str = include_str!("../fixtures/repetition3_qubit.json");

/// XOR count of the reference 5-wavepacket construction obtained from a higher-spin code.
pub const CHAU_BASELINE_SUM_GATES: usize = 9;

/// Fidelity threshold of the parity covariance test.
pub const PARITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitGate {
    Hadamard(usize),
    HadamardInv(usize),
    Xor { control: usize, target: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitCircuit {
    pub qubit_count: usize,
    pub gates: Vec<QubitGate>,
}

impl QubitCircuit {
    pub fn xor_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, QubitGate::Xor { .. }))
            .count()
    }

    pub fn hadamard_count(&self) -> usize {
        self.gates.len() - self.xor_count()
    }

    /// Positions, among the XORs, of those whose target is still untouched: these act on a
    /// fresh `|0⟩` ancilla, where Sum and SumInv coincide.
    pub fn first_layer_xors(&self) -> Vec<usize> {
        let mut touched = vec![false; self.qubit_count];
        let mut out = Vec::new();
        let mut xor_index = 0;
        for g in &self.gates {
            match *g {
                QubitGate::Hadamard(q) | QubitGate::HadamardInv(q) => touched[q] = true,
                QubitGate::Xor { control, target } => {
                    if !touched[target] && target != 0 {
                        out.push(xor_index);
                    }
                    touched[control] = true;
                    touched[target] = true;
                    xor_index += 1;
                }
            }
        }
        out
    }
}

#[derive(Deserialize)]
struct QubitGateRecord {
    #[serde(rename = "type")]
    kind: String,
    #[serde(alias = "qubits")]
    modes: Vec<usize>,
}

#[derive(Deserialize)]
struct QubitCircuitRecord {
    #[serde(alias = "mode_count")]
    qubit_count: usize,
    gates: Vec<QubitGateRecord>,
}

pub fn parse_qubit_circuit(text: &str) -> Result<QubitCircuit> {
    let record: QubitCircuitRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let n = record.qubit_count;
    let mut gates = Vec::new();
    for (i, g) in record.gates.iter().enumerate() {
        let err = |message: String| Error::Parse {
            location: format!("gate {i}"),
            message,
        };
        if let Some(&q) = g.modes.iter().find(|&&q| q >= n) {
            return Err(err(format!("qubit {q} out of range for {n} qubits")));
        }
        match g.kind.as_str() {
            "H" | "Hinv" => {
                if g.modes.len() != 1 {
                    return Err(err(format!("{} takes one qubit", g.kind)));
                }
                gates.push(if g.kind == "H" {
                    QubitGate::Hadamard(g.modes[0])
                } else {
                    QubitGate::HadamardInv(g.modes[0])
                });
            }
            "XOR" => {
                if g.modes.len() < 2 {
                    return Err(err("XOR needs a control and at least one target".into()));
                }
                let control = g.modes[0];
                let mut seen = vec![control];
                for &target in &g.modes[1..] {
                    if seen.contains(&target) {
                        return Err(err(format!("qubit {target} repeated in XOR")));
                    }
                    seen.push(target);
                    gates.push(QubitGate::Xor { control, target });
                }
            }
            other => {
                return Err(err(format!(
                    "unsupported gate type {other:?} (allowed: H, Hinv, XOR)"
                )))
            }
        }
    }
    Ok(QubitCircuit {
        qubit_count: n,
        gates,
    })
}

/// One bit per XOR in gate order: `false` selects Sum, `true` SumInv.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignAssignment {
    pub bits: Vec<bool>,
}

impl SignAssignment {
    pub fn all_sum(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        Self {
            bits: bits.to_vec(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    location: "assignment".into(),
                    message: format!("expected 0 or 1, got {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(|bits| Self { bits })
    }
}

impl fmt::Display for SignAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn substitute(qc: &QubitCircuit, assignment: &SignAssignment) -> Result<Circuit> {
    let expected = qc.xor_count();
    if assignment.bits.len() != expected {
        return Err(Error::AssignmentLength {
            expected,
            found: assignment.bits.len(),
        });
    }
    let mut bits = assignment.bits.iter();
    let gates = qc
        .gates
        .iter()
        .map(|g| match *g {
            QubitGate::Hadamard(q) => Gate::Fourier(q),
            QubitGate::HadamardInv(q) => Gate::FourierInv(q),
            QubitGate::Xor { control, target } => {
                if *bits.next().expect("length checked") {
                    Gate::SumInv { control, target }
                } else {
                    Gate::Sum { control, target }
                }
            }
        })
        .collect();
    Circuit::from_gates(qc.qubit_count, gates)
}

/// Writes the substituted circuit as circuit JSON.
pub fn emit_cv_circuit(qc: &QubitCircuit, assignment: &SignAssignment, sink: &mut impl Write) -> Result<()> {
    let circuit = substitute(qc, assignment)?;
    sink.write_all(circuit.to_json().as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Single-mode error class the substituted code must correct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    #[default]
    Displacement,
    Position,
    Momentum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerateOptions {
    pub grid_n: usize,
    /// Pin first-layer XORs (see [`QubitCircuit::first_layer_xors`]) to Sum.
    pub fix_first_layer: bool,
    pub error_class: ErrorClass,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            grid_n: 8,
            fix_first_layer: true,
            error_class: ErrorClass::Displacement,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentVerdict {
    pub assignment: SignAssignment,
    pub circuit: Circuit,
    pub report: CorrectabilityReport,
    pub parity_ok: bool,
    pub correctable: bool,
    /// Too few nullifiers to constrain even one mode's displacement; correctability is void.
    pub degenerate: bool,
    pub valid: bool,
    pub class: ErrorClass,
}

impl AssignmentVerdict {
    /// Failing mode pairs in 1-indexed wavepacket labels.
    pub fn failing_pairs_labelled(&self) -> Vec<String> {
        self.class_failures()
            .iter()
            .filter(|f| f.modes.len() == 2)
            .map(|f| format!("{}-{}", f.modes[0] + 1, f.modes[1] + 1))
            .collect()
    }

    fn class_failures(&self) -> &[crate::symplectic::Failure] {
        match self.class {
            ErrorClass::Displacement => &self.report.failures,
            ErrorClass::Position => &self.report.position_only.failures,
            ErrorClass::Momentum => &self.report.momentum_only.failures,
        }
    }
}

/// Grid test: parity on every mode maps `encode(|x_j⟩)` to `encode(|x_{-j}⟩)` up to phase.
pub fn parity_covariant(code: &CodeSpec, grid_n: usize) -> Result<bool> {
    let grid = GridSpec::new(grid_n, code.mode_count)?;
    for j in 0..grid_n {
        let mut lhs = encode(&eigenstate_wavefunction(&grid, j)?, code, &grid)?;
        lhs.apply_global_parity();
        let rhs = encode(&eigenstate_wavefunction(&grid, (grid_n - j) % grid_n)?, code, &grid)?;
        if fidelity(&lhs, &rhs)? < 1.0 - PARITY_TOLERANCE {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All candidate assignments with their verdicts, in increasing order of the enumerated bits.
pub fn enumerate_valid_assignments(qc: &QubitCircuit, options: &EnumerateOptions) -> Result<Vec<AssignmentVerdict>> {
    let xors = qc.xor_count();
    let pinned = if options.fix_first_layer {
        qc.first_layer_xors()
    } else {
        Vec::new()
    };
    let free: Vec<usize> = (0..xors).filter(|i| !pinned.contains(i)).collect();
    if free.len() > 20 {
        return Err(Error::Config(format!(
            "{} free XORs is too many to enumerate",
            free.len()
        )));
    }
    let assignments: Vec<SignAssignment> = (0..1usize << free.len())
        .map(|word| {
            let mut bits = vec![false; xors];
            for (k, &i) in free.iter().enumerate() {
                // Most significant bit first, so the order reads like the bit string.
                bits[i] = word >> (free.len() - 1 - k) & 1 == 1;
            }
            SignAssignment { bits }
        })
        .collect();
    assignments
        .into_par_iter()
        .map(|a| verdict(qc, a, options))
        .collect()
}

fn verdict(qc: &QubitCircuit, assignment: SignAssignment, options: &EnumerateOptions) -> Result<AssignmentVerdict> {
    let circuit = substitute(qc, &assignment)?;
    let code = CodeSpec::from_encoder("candidate", circuit.clone())?;
    let report = check_correctability(&code);
    let parity_ok = parity_covariant(&code, options.grid_n)?;
    let correctable = match options.error_class {
        ErrorClass::Displacement => report.correctable,
        ErrorClass::Position => report.position_only.correctable,
        ErrorClass::Momentum => report.momentum_only.correctable,
    };
    let needed = match options.error_class {
        ErrorClass::Displacement => 2,
        ErrorClass::Position | ErrorClass::Momentum => 1,
    };
    let degenerate = code.nullifiers.len() < needed;
    Ok(AssignmentVerdict {
        valid: parity_ok && (correctable || degenerate),
        assignment,
        circuit,
        report,
        parity_ok,
        correctable,
        degenerate,
        class: options.error_class,
    })
}

pub const VERDICT_HEADER: [&str; 8] = [
    "assignment",
    "parity_ok",
    "correctable",
    "degenerate",
    "valid",
    "sum_type_gates",
    "failing_pairs",
    "failures",
];

/// One CSV row per verdict; modes in `failing_pairs` and `failures` are 1-indexed.
pub fn write_verdict_csv(verdicts: &[AssignmentVerdict], sink: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(VERDICT_HEADER)?;
    for v in verdicts {
        let failures: Vec<&str> = v.class_failures().iter().map(|f| f.detail.as_str()).collect();
        w.write_record([
            v.assignment.to_string(),
            v.parity_ok.to_string(),
            v.correctable.to_string(),
            v.degenerate.to_string(),
            v.valid.to_string(),
            v.circuit.gate_counts().sum_type().to_string(),
            v.failing_pairs_labelled().join(";"),
            failures.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
