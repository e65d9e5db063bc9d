//! Phase-space representation of circuits and the displacement-error correctability check.
//!
//! A circuit `C` acts on quadrature vectors `R = (x_0..x_{M-1}, p_0..p_{M-1})` through a real
//! symplectic matrix `S_C`, in the sense that `C·D(d) = D(S_C·d)·C` up to a global phase for
//! every displacement `d`, and the mean quadratures of `C|ψ⟩` are `S_C` times those of `|ψ⟩`.
//!
//! Sign conventions (checked against the grid engine in the test suite):
//!
//! - `Fourier(m)`: `x_m → p_m`, `p_m → -x_m`, i.e. the block `[[0, -1], [1, 0]]`.
//! - `Sum(c, t)`: `x_t → x_t + x_c`, `p_c → p_c - p_t`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::codes::CodeSpec;
use crate::{Error, Result};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Residual threshold, relative to the syndrome norm, for an exact decode match.
pub const DECODE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticRep {
    modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticRep {
    pub fn identity(modes: usize) -> Self {
        Self {
            modes,
            matrix: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    pub fn from_matrix(modes: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != 2 * modes || matrix.ncols() != 2 * modes {
            return Err(Error::InvalidGrid(format!(
                "expected a {0}x{0} matrix",
                2 * modes
            )));
        }
        Ok(Self { modes, matrix })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `max |SᵀΩS - Ω|`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = omega(self.modes);
        let lhs = self.matrix.transpose() * &omega * &self.matrix;
        (lhs - omega).abs().max()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_defect() <= tol
    }

    /// Exact inverse `Ω⁻¹ Sᵀ Ω`.
    pub fn inverse(&self) -> Self {
        let omega = omega(self.modes);
        Self {
            modes: self.modes,
            matrix: omega.transpose() * self.matrix.transpose() * omega,
        }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &SymplecticRep) -> Self {
        Self {
            modes: self.modes,
            matrix: &self.matrix * &first.matrix,
        }
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(r))
            .iter()
            .copied()
            .collect()
    }
}

/// Standard form `[[0, I], [-I, 0]]`.
pub fn omega(modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * modes, 2 * modes);
    for m in 0..modes {
        o[(m, modes + m)] = 1.0;
        o[(modes + m, m)] = -1.0;
    }
    o
}

pub fn gate_symplectic(gate: &Gate, modes: usize) -> SymplecticRep {
    let mut s = DMatrix::identity(2 * modes, 2 * modes);
    let (x, p) = (|m: usize| m, |m: usize| modes + m);
    match *gate {
        Gate::Fourier(m) | Gate::FourierInv(m) => {
            let sign = if matches!(gate, Gate::Fourier(_)) { 1.0 } else { -1.0 };
            s[(x(m), x(m))] = 0.0;
            s[(p(m), p(m))] = 0.0;
            s[(p(m), x(m))] = sign;
            s[(x(m), p(m))] = -sign;
        }
        Gate::Sum { control, target } | Gate::SumInv { control, target } => {
            let sign = if matches!(gate, Gate::Sum { .. }) { 1.0 } else { -1.0 };
            s[(x(target), x(control))] = sign;
            s[(p(control), p(target))] = -sign;
        }
    }
    SymplecticRep { modes, matrix: s }
}

/// Ordered product `S_{g_k} ⋯ S_{g_1}`.
pub fn circuit_symplectic(circuit: &Circuit) -> SymplecticRep {
    circuit
        .gates()
        .iter()
        .fold(SymplecticRep::identity(circuit.mode_count()), |acc, g| {
            gate_symplectic(g, circuit.mode_count()).after(&acc)
        })
}

/// Linear quadrature form `coeffs·R` whose value on every encoded state is `nominal_value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nullifier {
    pub coeffs: Vec<f64>,
    pub nominal_value: f64,
}

impl Nullifier {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            nominal_value: 0.0,
        }
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn evaluate(&self, r: &[f64]) -> f64 {
        self.coeffs.iter().zip(r).map(|(a, b)| a * b).sum()
    }

    pub fn integer_coeffs(&self) -> Option<Vec<i64>> {
        integer_vector(&self.coeffs)
    }

    pub fn x_coeff(&self, mode: usize) -> f64 {
        self.coeffs[mode]
    }

    pub fn p_coeff(&self, mode: usize) -> f64 {
        self.coeffs[self.modes() + mode]
    }

    /// Human-readable form with 1-indexed wavepacket labels, e.g. `x2 - x3 + x4 - x5`.
    pub fn describe(&self) -> String {
        describe_form(&self.coeffs)
    }
}

pub(crate) fn describe_form(coeffs: &[f64]) -> String {
    let m = coeffs.len() / 2;
    let mut out = String::new();
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let label = if i < m {
            format!("x{}", i + 1)
        } else {
            format!("p{}", i - m + 1)
        };
        let mag = c.abs();
        let term = if (mag - 1.0).abs() < 1e-12 {
            label
        } else {
            format!("{mag}·{label}")
        };
        if out.is_empty() {
            out = if c < 0.0 { format!("-{term}") } else { term };
        } else {
            out += if c < 0.0 { " - " } else { " + " };
            out += &term;
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

/// Single-mode displacement `x_mode += e_x`, `p_mode += e_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementError {
    pub mode: usize,
    pub e_x: f64,
    pub e_p: f64,
}

impl DisplacementError {
    pub fn new(mode: usize, e_x: f64, e_p: f64) -> Result<Self> {
        if !e_x.is_finite() || !e_p.is_finite() {
            return Err(Error::Degenerate("displacement must be finite".into()));
        }
        Ok(Self { mode, e_x, e_p })
    }

    pub fn zero(mode: usize) -> Self {
        Self {
            mode,
            e_x: 0.0,
            e_p: 0.0,
        }
    }

    /// Quadrature-vector embedding for an `modes`-mode system.
    pub fn embed(&self, modes: usize) -> Vec<f64> {
        let mut d = vec![0.0; 2 * modes];
        d[self.mode] = self.e_x;
        d[modes + self.mode] = self.e_p;
        d
    }
}

/// Nullifiers of the code prepared by `encoder` from ancillas in `|x = 0⟩`.
///
/// The input forms `x_a` (one per ancilla) are pushed through the encoder: an input constraint
/// `f·R_in = 0` becomes `(S⁻ᵀ f)·R_out = 0`.
pub fn nullifiers_for_encoder(encoder: &Circuit, ancillas: &[usize]) -> Result<Vec<Nullifier>> {
    let m = encoder.mode_count();
    for &a in ancillas {
        if a >= m {
            return Err(Error::InconsistentAncillas(format!(
                "ancilla {a} outside a {m}-mode encoder"
            )));
        }
    }
    let mut sorted = ancillas.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ancillas.len() || ancillas.len() + 1 != m {
        return Err(Error::InconsistentAncillas(format!(
            "expected {} distinct ancillas, got {:?}",
            m.saturating_sub(1),
            ancillas
        )));
    }
    let s_inv_t = circuit_symplectic(encoder).inverse().matrix.transpose();
    Ok(ancillas
        .iter()
        .map(|&a| Nullifier::new(s_inv_t.column(a).iter().map(|v| v + 0.0).collect()))
        .collect())
}

pub fn derive_nullifiers(code: &CodeSpec) -> Result<Vec<Nullifier>> {
    nullifiers_for_encoder(&code.encoder, &code.ancilla_modes)
}

/// Rows are the code's nullifier coefficient vectors: `(M-1) × 2M`.
pub fn syndrome_matrix(code: &CodeSpec) -> DMatrix<f64> {
    forms_matrix(
        &code
            .nullifiers
            .iter()
            .map(|n| n.coeffs.clone())
            .collect::<Vec<_>>(),
        2 * code.mode_count,
    )
}

pub fn forms_matrix(forms: &[Vec<f64>], width: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(forms.len(), width);
    for (i, f) in forms.iter().enumerate() {
        for (j, v) in f.iter().enumerate() {
            h[(i, j)] = *v;
        }
    }
    h
}

/// Measured linear forms together with the stabilizer span used to recognise degenerate errors.
#[derive(Clone, Debug)]
pub struct SyndromeMap {
    modes: usize,
    forms: DMatrix<f64>,
    stabilizer_basis: DMatrix<f64>,
}

impl SyndromeMap {
    pub fn for_code(code: &CodeSpec) -> Self {
        let forms: Vec<Vec<f64>> = code.nullifiers.iter().map(|n| n.coeffs.clone()).collect();
        Self::with_forms(code, &forms)
    }

    /// Uses `forms` as the readout rows; they must lie in the span of the code's nullifiers.
    pub fn with_forms(code: &CodeSpec, forms: &[Vec<f64>]) -> Self {
        let width = 2 * code.mode_count;
        Self {
            modes: code.mode_count,
            forms: forms_matrix(forms, width),
            stabilizer_basis: row_space_basis(&syndrome_matrix(code)),
        }
    }

    pub fn forms(&self) -> &DMatrix<f64> {
        &self.forms
    }

    pub fn syndrome(&self, error: &DisplacementError) -> Vec<f64> {
        let d = DVector::from_vec(error.embed(self.modes));
        (&self.forms * d).iter().copied().collect()
    }

    fn mode_columns(&self, mode: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.forms.nrows(), 2);
        a.set_column(0, &self.forms.column(mode));
        a.set_column(1, &self.forms.column(self.modes + mode));
        a
    }

    /// Least-squares single-mode fit: `(error, residual norm)`.
    fn fit_mode(&self, mode: usize, s: &DVector<f64>) -> (DisplacementError, f64) {
        let a = self.mode_columns(mode);
        let scale = self.forms.norm().max(1e-300);
        let sol = pseudo_inverse(&a, RANK_TOLERANCE * scale) * s;
        let residual = (&a * &sol - s).norm();
        (
            DisplacementError {
                mode,
                e_x: sol[0] + 0.0,
                e_p: sol[1] + 0.0,
            },
            residual,
        )
    }

    /// True when `D(d)` acts trivially on the codespace: its generator `d_p·x - d_x·p`
    /// lies in the nullifier span.
    pub fn is_stabilizer_displacement(&self, d: &[f64]) -> bool {
        let m = self.modes;
        let mut generator = DVector::zeros(2 * m);
        for i in 0..m {
            generator[i] = d[m + i];
            generator[m + i] = -d[i];
        }
        let norm = generator.norm();
        if norm == 0.0 {
            return true;
        }
        let basis = &self.stabilizer_basis;
        let proj = basis.transpose() * (basis * &generator);
        (generator - proj).norm() <= 1e-9 * norm
    }

    fn resolve(&self, candidates: Vec<(DisplacementError, f64)>) -> Result<DisplacementError> {
        let first = candidates[0].0;
        let d0 = first.embed(self.modes);
        let clash: Vec<usize> = candidates
            .iter()
            .filter(|(c, _)| {
                let diff: Vec<f64> = c
                    .embed(self.modes)
                    .iter()
                    .zip(&d0)
                    .map(|(a, b)| a - b)
                    .collect();
                !self.is_stabilizer_displacement(&diff)
            })
            .map(|(c, _)| c.mode)
            .collect();
        if clash.is_empty() {
            Ok(first)
        } else {
            let mut modes = vec![first.mode];
            modes.extend(clash);
            Err(Error::AmbiguousSyndrome(modes))
        }
    }

    /// Exact decode: the single mode whose displacement image contains the syndrome.
    /// Matches differing by a stabilizer displacement are merged onto the lowest mode.
    pub fn decode(&self, syndrome: &[f64]) -> Result<DisplacementError> {
        let s = DVector::from_column_slice(syndrome);
        let norm = s.norm();
        if norm <= 1e-12 {
            return Ok(DisplacementError::zero(0));
        }
        let matches: Vec<(DisplacementError, f64)> = (0..self.modes)
            .map(|m| self.fit_mode(m, &s))
            .filter(|(_, r)| *r <= DECODE_TOLERANCE * norm)
            .collect();
        if matches.is_empty() {
            return Err(Error::UnrecognizedSyndrome);
        }
        self.resolve(matches)
    }

    /// Minimum-residual decode for noisy records; the maximum-likelihood single-mode choice
    /// under isotropic Gaussian record noise.
    pub fn decode_nearest(&self, syndrome: &[f64]) -> Result<DisplacementError> {
        let s = DVector::from_column_slice(syndrome);
        let fits: Vec<(DisplacementError, f64)> =
            (0..self.modes).map(|m| self.fit_mode(m, &s)).collect();
        let best = fits.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
        let slack = 1e-9 * s.norm().max(1e-12);
        let ties: Vec<(DisplacementError, f64)> = fits
            .into_iter()
            .filter(|(_, r)| *r <= best + slack)
            .collect();
        self.resolve(ties)
    }
}

pub fn decode_syndrome(code: &CodeSpec, syndrome: &[f64]) -> Result<DisplacementError> {
    SyndromeMap::for_code(code).decode(syndrome)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// A single-mode error of the class has zero syndrome without acting trivially.
    NotInjective,
    /// Two single-mode errors on different modes share a syndrome.
    ImagesIntersect,
    /// Real-injective, but the integer syndrome map is not unimodular, so syndromes collide on
    /// periodic grids whose size shares a factor with the reported determinant.
    NonUnimodular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    /// 0-indexed modes.
    pub modes: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeCheck {
    pub mode: usize,
    pub injective: bool,
    pub position_detectable: bool,
    pub momentum_detectable: bool,
    pub min_singular_value: f64,
    pub degenerate: bool,
    pub lattice_gcd: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub modes: [usize; 2],
    pub min_singular_value: f64,
    pub images_disjoint: bool,
    pub degenerate: bool,
    pub lattice_gcd: Option<i64>,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub correctable: bool,
    pub failures: Vec<Failure>,
}

/// Result of [`check_correctability`]. `modes`, `pairs` and `failures` refer to arbitrary
/// single-mode displacements; the two summaries restrict the error class to one quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectabilityReport {
    pub code: String,
    pub mode_count: usize,
    pub modes: Vec<ModeCheck>,
    pub pairs: Vec<PairCheck>,
    pub failures: Vec<Failure>,
    pub correctable: bool,
    pub position_only: ClassSummary,
    pub momentum_only: ClassSummary,
}

impl CorrectabilityReport {
    pub fn failing_pairs(&self) -> Vec<[usize; 2]> {
        self.pairs
            .iter()
            .filter(|p| !p.passes)
            .map(|p| p.modes)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Copy)]
enum Quadrature {
    X,
    P,
}

struct ClassCheck {
    modes: Vec<ModeCheck>,
    pairs: Vec<PairCheck>,
    failures: Vec<Failure>,
}

struct Checker<'a> {
    map: &'a SyndromeMap,
    h: &'a DMatrix<f64>,
    integer: Option<Vec<Vec<i64>>>,
    scale: f64,
}

impl Checker<'_> {
    fn columns(&self, modes: &[usize], quads: &[Quadrature]) -> Vec<usize> {
        let m = self.map.modes;
        modes
            .iter()
            .flat_map(|&mode| {
                quads.iter().map(move |q| match q {
                    Quadrature::X => mode,
                    Quadrature::P => m + mode,
                })
            })
            .collect()
    }

    fn sub(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.h.nrows(), cols.len(), |i, j| self.h[(i, cols[j])])
    }

    /// `(min relative singular value, kernel acts trivially, kernel empty)`
    fn rank_test(&self, cols: &[usize]) -> (f64, bool, bool) {
        let a = self.sub(cols);
        let m = self.map.modes;
        let mut sv = vec![0.0; cols.len()];
        let mut kernel: Vec<DVector<f64>> = Vec::new();
        if a.nrows() > 0 {
            // Zero rows leave singular values and kernel unchanged; padding to at least square
            // makes the thin SVD carry a full right basis.
            let rows = a.nrows().max(cols.len());
            let padded = DMatrix::from_fn(rows, cols.len(), |i, j| {
                if i < a.nrows() {
                    a[(i, j)]
                } else {
                    0.0
                }
            });
            let svd = padded.svd(false, true);
            let v_t = svd.v_t.expect("requested right vectors");
            for (i, s) in svd.singular_values.iter().enumerate() {
                sv[i] = s / self.scale;
                if sv[i] <= RANK_TOLERANCE {
                    kernel.push(v_t.row(i).transpose());
                }
            }
        } else {
            for i in 0..cols.len() {
                let mut e = DVector::zeros(cols.len());
                e[i] = 1.0;
                kernel.push(e);
            }
        }
        let min_sv = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let trivial = kernel.iter().all(|k| {
            let mut d = vec![0.0; 2 * m];
            for (c, v) in cols.iter().zip(k.iter()) {
                d[*c] += v;
            }
            self.map.is_stabilizer_displacement(&d)
        });
        (min_sv, trivial, kernel.is_empty())
    }

    fn lattice_gcd(&self, cols: &[usize]) -> Option<i64> {
        let rows = self.integer.as_ref()?;
        let k = cols.len();
        if rows.len() < k {
            return Some(0);
        }
        let mut g: i128 = 0;
        for subset in combinations(rows.len(), k) {
            let mat: Vec<Vec<i128>> = subset
                .iter()
                .map(|&r| cols.iter().map(|&c| rows[r][c] as i128).collect())
                .collect();
            g = gcd(g, integer_det(mat).abs());
            if g == 1 {
                break;
            }
        }
        Some(g as i64)
    }

    fn run(&self, quads: &[Quadrature]) -> ClassCheck {
        let m = self.map.modes;
        let mut modes = Vec::new();
        let mut pairs = Vec::new();
        let mut failures = Vec::new();
        for mode in 0..m {
            let cols = self.columns(&[mode], quads);
            let (min_sv, trivial, full_rank) = self.rank_test(&cols);
            let lattice = if full_rank { self.lattice_gcd(&cols) } else { None };
            let injective = full_rank || trivial;
            if !injective {
                failures.push(Failure {
                    kind: FailureKind::NotInjective,
                    modes: vec![mode],
                    detail: format!(
                        "wavepacket {}: a nontrivial displacement has zero syndrome",
                        mode + 1
                    ),
                });
            } else if let Some(g) = lattice.filter(|g| *g != 1) {
                failures.push(Failure {
                    kind: FailureKind::NonUnimodular,
                    modes: vec![mode],
                    detail: format!("wavepacket {}: lattice gcd {g}", mode + 1),
                });
            }
            let x_col = self.sub(&[mode]);
            let p_col = self.sub(&[m + mode]);
            modes.push(ModeCheck {
                mode,
                injective,
                position_detectable: x_col.norm() > 0.0,
                momentum_detectable: p_col.norm() > 0.0,
                min_singular_value: min_sv,
                degenerate: !full_rank && trivial,
                lattice_gcd: lattice,
            });
        }
        for j in 0..m {
            for k in j + 1..m {
                let cols = self.columns(&[j, k], quads);
                let (min_sv, trivial, full_rank) = self.rank_test(&cols);
                let lattice = if full_rank { self.lattice_gcd(&cols) } else { None };
                let disjoint = full_rank || trivial;
                let unimodular = lattice.is_none_or(|g| g == 1);
                if !disjoint {
                    failures.push(Failure {
                        kind: FailureKind::ImagesIntersect,
                        modes: vec![j, k],
                        detail: format!(
                            "wavepackets ({},{}): syndrome images intersect",
                            j + 1,
                            k + 1
                        ),
                    });
                } else if !unimodular {
                    failures.push(Failure {
                        kind: FailureKind::NonUnimodular,
                        modes: vec![j, k],
                        detail: format!(
                            "wavepackets ({},{}): lattice determinant {}",
                            j + 1,
                            k + 1,
                            lattice.unwrap_or(0)
                        ),
                    });
                }
                pairs.push(PairCheck {
                    modes: [j, k],
                    min_singular_value: min_sv,
                    images_disjoint: disjoint,
                    degenerate: !full_rank && trivial,
                    lattice_gcd: lattice,
                    passes: disjoint && unimodular,
                });
            }
        }
        ClassCheck {
            modes,
            pairs,
            failures,
        }
    }
}

/// Correctability of single-mode displacement errors.
///
/// Per mode, the syndrome map restricted to that mode's displacements must be injective; per
/// pair of modes, the two images may meet only at zero (rank of the stacked columns, relative
/// singular-value threshold [`RANK_TOLERANCE`]). Kernel directions that act trivially on the
/// codespace are accepted and flagged as degenerate. When the nullifiers are integral, each
/// test additionally requires the integer syndrome map to be unimodular (gcd of maximal minors
/// equal to 1), which is what keeps syndromes distinct on every periodic grid.
pub fn check_correctability(code: &CodeSpec) -> CorrectabilityReport {
    let map = SyndromeMap::for_code(code);
    let h = syndrome_matrix(code);
    let scale = largest_singular_value(&h).max(1e-300);
    let integer = (0..h.nrows())
        .map(|i| integer_vector(&h.row(i).iter().copied().collect::<Vec<_>>()))
        .collect::<Option<Vec<_>>>();
    let checker = Checker {
        map: &map,
        h: &h,
        integer,
        scale,
    };
    let full = checker.run(&[Quadrature::X, Quadrature::P]);
    let pos = checker.run(&[Quadrature::X]);
    let mom = checker.run(&[Quadrature::P]);
    CorrectabilityReport {
        code: code.name.clone(),
        mode_count: code.mode_count,
        correctable: full.failures.is_empty(),
        modes: full.modes,
        pairs: full.pairs,
        failures: full.failures,
        position_only: ClassSummary {
            correctable: pos.failures.is_empty(),
            failures: pos.failures,
        },
        momentum_only: ClassSummary {
            correctable: mom.failures.is_empty(),
            failures: mom.failures,
        },
    }
}

fn largest_singular_value(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// Orthonormal rows spanning the row space of `a`.
fn row_space_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::zeros(0, a.ncols());
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right vectors");
    let scale = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOLERANCE * scale)
        .collect();
    DMatrix::from_fn(keep.len(), a.ncols(), |i, j| v_t[(keep[i], j)])
}

fn pseudo_inverse(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    svd.pseudo_inverse(tol.max(1e-300))
        .unwrap_or_else(|_| DMatrix::zeros(a.ncols(), a.nrows()))
}

pub(crate) fn integer_vector(v: &[f64]) -> Option<Vec<i64>> {
    v.iter()
        .map(|x| {
            let r = x.round();
            ((x - r).abs() < 1e-9 && r.abs() < 1e12).then_some(r as i64)
        })
        .collect()
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Fraction-free (Bareiss) determinant of a square integer matrix.
pub(crate) fn integer_det(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}
