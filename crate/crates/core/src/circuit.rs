//! Gate set and circuits over `M` wavepacket modes.
//!
//! JSON layout:
//!
//! ```json
//! {"mode_count": 3, "gates": [{"type": "Sum", "modes": [0, 1]}, {"type": "F", "modes": [2]}]}
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One gate of the continuous-variable gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    /// Active Fourier transform `F|x⟩ = π^{-1/2} ∫dy e^{2ixy}|y⟩`.
    Fourier(usize),
    FourierInv(usize),
    /// Generalised XOR `|x_c, x_t⟩ → |x_c, x_t + x_c⟩`.
    Sum { control: usize, target: usize },
    SumInv { control: usize, target: usize },
}

impl Gate {
    pub fn modes(&self) -> Vec<usize> {
        match *self {
            Gate::Fourier(m) | Gate::FourierInv(m) => vec![m],
            Gate::Sum { control, target } | Gate::SumInv { control, target } => {
                vec![control, target]
            }
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Fourier(m) => Gate::FourierInv(m),
            Gate::FourierInv(m) => Gate::Fourier(m),
            Gate::Sum { control, target } => Gate::SumInv { control, target },
            Gate::SumInv { control, target } => Gate::Sum { control, target },
        }
    }

    pub fn is_sum_type(&self) -> bool {
        matches!(self, Gate::Sum { .. } | Gate::SumInv { .. })
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Gate::Fourier(_) => "F",
            Gate::FourierInv(_) => "Finv",
            Gate::Sum { .. } => "Sum",
            Gate::SumInv { .. } => "SumInv",
        }
    }

    /// Checks mode indices against `mode_count` and `control != target`.
    pub fn validate(&self, mode_count: usize) -> Result<()> {
        for m in self.modes() {
            if m >= mode_count {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    modes: mode_count,
                });
            }
        }
        if let Gate::Sum { control, target } | Gate::SumInv { control, target } = *self {
            if control == target {
                return Err(Error::InvalidGate(format!(
                    "{} with control == target == {control}",
                    self.type_name()
                )));
            }
        }
        Ok(())
    }

    /// Same gate with every mode index passed through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::Fourier(m) => Gate::Fourier(f(m)),
            Gate::FourierInv(m) => Gate::FourierInv(f(m)),
            Gate::Sum { control, target } => Gate::Sum {
                control: f(control),
                target: f(target),
            },
            Gate::SumInv { control, target } => Gate::SumInv {
                control: f(control),
                target: f(target),
            },
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Fourier(m) | Gate::FourierInv(m) => write!(f, "{}({m})", self.type_name()),
            Gate::Sum { control, target } | Gate::SumInv { control, target } => {
                write!(f, "{}({control},{target})", self.type_name())
            }
        }
    }
}

/// Gate counts by type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub fourier: usize,
    pub fourier_inv: usize,
    pub sum: usize,
    pub sum_inv: usize,
}

impl GateCounts {
    /// Number of generalised XOR gates, counting inverses.
    pub fn sum_type(&self) -> usize {
        self.sum + self.sum_inv
    }
}

/// Ordered gate list on a fixed number of modes, applied left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    mode_count: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(mode_count: usize) -> Self {
        Self {
            mode_count,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(mode_count: usize, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            g.validate(mode_count)?;
        }
        Ok(Self { mode_count, gates })
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.mode_count)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// The circuit undoing this one: reversed order, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            mode_count: self.mode_count,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    pub fn gate_counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            match g {
                Gate::Fourier(_) => c.fourier += 1,
                Gate::FourierInv(_) => c.fourier_inv += 1,
                Gate::Sum { .. } => c.sum += 1,
                Gate::SumInv { .. } => c.sum_inv += 1,
            }
        }
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CircuitRecord::from(self)).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: CircuitRecord = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        record.try_into()
    }
}

/// Serialized gate: `{"type": "Sum", "modes": [c, t]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateRecord {
    #[serde(rename = "type")]
    pub kind: String,
    pub modes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub mode_count: usize,
    pub gates: Vec<GateRecord>,
}

impl From<&Circuit> for CircuitRecord {
    fn from(c: &Circuit) -> Self {
        CircuitRecord {
            mode_count: c.mode_count,
            gates: c
                .gates
                .iter()
                .map(|g| GateRecord {
                    kind: g.type_name().to_string(),
                    modes: g.modes(),
                })
                .collect(),
        }
    }
}

impl TryFrom<CircuitRecord> for Circuit {
    type Error = Error;

    fn try_from(record: CircuitRecord) -> Result<Self> {
        let mut gates = Vec::with_capacity(record.gates.len());
        for (i, g) in record.gates.iter().enumerate() {
            let parse_err = |message: String| Error::Parse {
                location: format!("gate {i}"),
                message,
            };
            let arity = match g.kind.as_str() {
                "F" | "Finv" => 1,
                "Sum" | "SumInv" => 2,
                other => return Err(parse_err(format!("unknown gate type {other:?}"))),
            };
            if g.modes.len() != arity {
                return Err(parse_err(format!(
                    "{} takes {arity} mode(s), got {}",
                    g.kind,
                    g.modes.len()
                )));
            }
            let gate = match g.kind.as_str() {
                "F" => Gate::Fourier(g.modes[0]),
                "Finv" => Gate::FourierInv(g.modes[0]),
                "Sum" => Gate::Sum {
                    control: g.modes[0],
                    target: g.modes[1],
                },
                _ => Gate::SumInv {
                    control: g.modes[0],
                    target: g.modes[1],
                },
            };
            gate.validate(record.mode_count)
                .map_err(|e| parse_err(e.to_string()))?;
            gates.push(gate);
        }
        Ok(Circuit {
            mode_count: record.mode_count,
            gates,
        })
    }
}
