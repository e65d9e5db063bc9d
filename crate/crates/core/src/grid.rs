//! Dense state-vector engine on the discretized position basis.
//!
//! Each mode is sampled at `x_j = (j - N/2)·dx`, `j = 0..N`, with `dx = sqrt(π/N)`. A position
//! eigenstate `|x_j⟩` is the one-hot grid vector at `j`; it stands for `δ(x - x_j)·sqrt(dx)` of the
//! continuum. Amplitudes of an `M`-mode state are stored row-major over the index tuple
//! `(j_0, .., j_{M-1})`, mode 0 most significant.
//!
//! The grid is periodic. Addition in the SUM gate and integer displacements wrap modulo `N`, which
//! keeps every operation exactly unitary; states that should behave like the continuum must be
//! localized away from the wrap boundary.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::{Error, Result};

/// Upper bound on `N^M` for a dense state.
pub const MAX_AMPLITUDES: usize = 34_000_000;

/// Reduced density matrices are limited to this many entries.
const MAX_DENSITY_ENTRIES: usize = 1 << 16;

pub type DensityMatrix = DMatrix<Complex64>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n_points: usize,
    dx: f64,
    mode_count: usize,
}

impl GridSpec {
    pub fn new(n_points: usize, mode_count: usize) -> Result<Self> {
        if n_points < 2 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "N must be even and at least 2, got {n_points}"
            )));
        }
        if mode_count == 0 {
            return Err(Error::InvalidGrid("mode count must be positive".into()));
        }
        let total = (n_points as u128).checked_pow(mode_count as u32);
        match total {
            Some(t) if t <= MAX_AMPLITUDES as u128 => {}
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "N^M = {n_points}^{mode_count} exceeds the {MAX_AMPLITUDES}-amplitude budget"
                )))
            }
        }
        Ok(Self {
            n_points,
            dx: (PI / n_points as f64).sqrt(),
            mode_count,
        })
    }

    pub fn with_modes(&self, mode_count: usize) -> Result<Self> {
        Self::new(self.n_points, mode_count)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Momentum spacing; equal to `dx` on this grid.
    pub fn dp(&self) -> f64 {
        self.dx
    }

    pub fn center(&self) -> usize {
        self.n_points / 2
    }

    /// Number of amplitudes, `N^M`.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.mode_count as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed offset of index `j` from the centre, `j - N/2`.
    pub fn offset(&self, j: usize) -> i64 {
        j as i64 - self.center() as i64
    }

    /// Index of the point at signed offset `k` from the centre, wrapped onto the grid.
    pub fn index_of_offset(&self, k: i64) -> usize {
        let n = self.n_points as i64;
        (k + self.center() as i64).rem_euclid(n) as usize
    }

    pub fn position(&self, j: usize) -> f64 {
        self.offset(j) as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    /// Row-major stride of `mode`.
    pub fn stride(&self, mode: usize) -> usize {
        self.n_points.pow((self.mode_count - 1 - mode) as u32)
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.mode_count {
            return Err(Error::ModeOutOfRange {
                mode,
                modes: self.mode_count,
            });
        }
        Ok(())
    }

    /// Grid index of `mode` within flat index `flat`.
    pub fn digit(&self, flat: usize, mode: usize) -> usize {
        (flat / self.stride(mode)) % self.n_points
    }

    /// `digit(flat, mode)` for every flat index, built without divisions.
    pub(crate) fn digits(&self, mode: usize) -> Vec<u32> {
        let n = self.n_points;
        let stride = self.stride(mode);
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len() / (n * stride) {
            for d in 0..n as u32 {
                out.extend(std::iter::repeat_n(d, stride));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiModeState {
    grid: GridSpec,
    amplitudes: Vec<Complex64>,
}

impl MultiModeState {
    pub fn from_amplitudes(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} amplitudes, got {}",
                grid.len(),
                amplitudes.len()
            )));
        }
        Ok(Self { grid, amplitudes })
    }

    /// Unit basis vector at the given index tuple.
    pub fn product_state(grid: GridSpec, indices: &[usize]) -> Result<Self> {
        if indices.len() != grid.mode_count() {
            return Err(Error::ModeCountMismatch {
                expected: grid.mode_count(),
                found: indices.len(),
            });
        }
        let mut flat = 0;
        for (m, &j) in indices.iter().enumerate() {
            if j >= grid.n_points() {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    n: grid.n_points(),
                });
            }
            flat += j * grid.stride(m);
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.len()];
        amplitudes[flat] = Complex64::new(1.0, 0.0);
        Ok(Self { grid, amplitudes })
    }

    /// Tensor product of single-mode wavefunctions, one per mode.
    pub fn from_mode_wavefunctions(grid: GridSpec, modes: &[Vec<Complex64>]) -> Result<Self> {
        if modes.len() != grid.mode_count() {
            return Err(Error::ModeCountMismatch {
                expected: grid.mode_count(),
                found: modes.len(),
            });
        }
        let n = grid.n_points();
        if let Some(bad) = modes.iter().find(|w| w.len() != n) {
            return Err(Error::InvalidGrid(format!(
                "wavefunction has {} samples, grid has {n}",
                bad.len()
            )));
        }
        let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
        for w in modes {
            let mut next = Vec::with_capacity(amplitudes.len() * n);
            for a in &amplitudes {
                next.extend(w.iter().map(|b| a * b));
            }
            amplitudes = next;
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> Result<f64> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate("cannot normalize the zero vector".into()));
        }
        let inv = 1.0 / norm;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(norm)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &MultiModeState) -> Result<Complex64> {
        self.check_same_shape(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_same_shape(&self, other: &MultiModeState) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid(format!(
                "shape mismatch: {}^{} vs {}^{}",
                self.grid.n_points(),
                self.grid.mode_count(),
                other.grid.n_points(),
                other.grid.mode_count()
            )));
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.grid.mode_count())?;
        match *gate {
            Gate::Fourier(m) => self.fourier(m, FftDirection::Inverse),
            Gate::FourierInv(m) => self.fourier(m, FftDirection::Forward),
            Gate::Sum { control, target } => self.sum(control, target, 1),
            Gate::SumInv { control, target } => self.sum(control, target, -1),
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.mode_count() != self.grid.mode_count() {
            return Err(Error::ModeCountMismatch {
                expected: self.grid.mode_count(),
                found: circuit.mode_count(),
            });
        }
        for g in circuit.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// Centered transform `U_jk = N^{-1/2} exp(2i x_j x_k)` along one axis.
    ///
    /// Expanding `(j - N/2)(k - N/2)` gives an ordinary DFT with `(-1)^k` pre-modulation,
    /// `(-1)^j` post-modulation and a global sign `(-1)^{N/2}`. The inverse-direction FFT
    /// (`e^{+2πi jk/N}`) realises `F`, the forward one realises `F†`.
    fn fourier(&mut self, mode: usize, direction: FftDirection) {
        let n = self.grid.n_points();
        let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let sign = if (n / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        let scale = sign / (n as f64).sqrt();
        let alternating = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };

        let mut lines = self.gather_lines(mode);
        for line in lines.chunks_exact_mut(n) {
            if line.iter().all(|a| *a == Complex64::new(0.0, 0.0)) {
                continue;
            }
            for (k, a) in line.iter_mut().enumerate() {
                *a *= alternating(k);
            }
            fft.process_with_scratch(line, &mut scratch);
            for (j, a) in line.iter_mut().enumerate() {
                *a *= alternating(j) * scale;
            }
        }
        self.scatter_lines(mode, &lines);
    }

    /// Copies every line along `mode` into a contiguous buffer of `N`-length chunks.
    fn gather_lines(&self, mode: usize) -> Vec<Complex64> {
        let n = self.grid.n_points();
        let stride = self.grid.stride(mode);
        let block = n * stride;
        let mut out = Vec::with_capacity(self.amplitudes.len());
        for outer in (0..self.amplitudes.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                out.extend((0..n).map(|k| self.amplitudes[base + k * stride]));
            }
        }
        out
    }

    fn scatter_lines(&mut self, mode: usize, lines: &[Complex64]) {
        let n = self.grid.n_points();
        let stride = self.grid.stride(mode);
        let block = n * stride;
        let mut chunks = lines.chunks_exact(n);
        for outer in (0..self.amplitudes.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                let line = chunks.next().expect("line count matches");
                for (k, a) in line.iter().enumerate() {
                    self.amplitudes[base + k * stride] = *a;
                }
            }
        }
    }

    /// Basis map `(j, k) → (j, k + sign·(j - N/2) mod N)` on (control, target).
    fn sum(&mut self, control: usize, target: usize, sign: i64) {
        let grid = self.grid;
        let n = grid.n_points() as i64;
        let t_stride = grid.stride(target) as i64;
        let cd = grid.digits(control);
        let td = grid.digits(target);
        let center = grid.center() as i64;
        let old = std::mem::take(&mut self.amplitudes);
        let mut new = vec![Complex64::new(0.0, 0.0); old.len()];
        for (flat, amp) in old.into_iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let c = cd[flat] as i64 - center;
            let k = td[flat] as i64;
            let k_new = (k + sign * c).rem_euclid(n);
            new[(flat as i64 + (k_new - k) * t_stride) as usize] = amp;
        }
        self.amplitudes = new;
    }

    /// Marginal position distribution of `mode`.
    pub fn position_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.grid.check_mode(mode)?;
        let mut probs = vec![0.0; self.grid.n_points()];
        let digits = self.grid.digits(mode);
        for (a, d) in self.amplitudes.iter().zip(&digits) {
            probs[*d as usize] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Projects `mode` onto `|x_index⟩` and renormalizes. Returns the Born probability.
    pub fn project_position(&mut self, mode: usize, index: usize) -> Result<f64> {
        self.grid.check_mode(mode)?;
        if index >= self.grid.n_points() {
            return Err(Error::IndexOutOfRange {
                index,
                n: self.grid.n_points(),
            });
        }
        let digits = self.grid.digits(mode);
        let mut weight = 0.0;
        for (a, d) in self.amplitudes.iter_mut().zip(&digits) {
            if *d as usize == index {
                weight += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if weight <= 0.0 {
            return Err(Error::ZeroNormSlice);
        }
        let inv = 1.0 / weight.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(weight)
    }

    /// Born-rule position measurement of `mode`; collapses the state in place.
    pub fn measure_position<R: Rng + ?Sized>(&mut self, mode: usize, rng: &mut R) -> Result<usize> {
        let probs = self.position_distribution(mode)?;
        let outcome = sample_index(&probs, rng);
        self.project_position(mode, outcome)?;
        Ok(outcome)
    }

    /// Applies the displacement `T_shift · K_kick`: first the momentum kick
    /// `ψ(x_j) → e^{2i·kick·x_j} ψ(x_j)`, then the cyclic position shift
    /// `ψ(x_j) → ψ(x_{j - shift})`.
    pub fn apply_displacement(&mut self, mode: usize, shift_points: i64, momentum_kick: f64) -> Result<()> {
        self.grid.check_mode(mode)?;
        if !momentum_kick.is_finite() {
            return Err(Error::Degenerate("momentum kick must be finite".into()));
        }
        let grid = self.grid;
        if momentum_kick != 0.0 {
            let phases: Vec<Complex64> = grid
                .positions()
                .iter()
                .map(|x| Complex64::from_polar(1.0, 2.0 * momentum_kick * x))
                .collect();
            let digits = grid.digits(mode);
            for (a, d) in self.amplitudes.iter_mut().zip(&digits) {
                *a *= phases[*d as usize];
            }
        }
        let n = grid.n_points() as i64;
        let shift = shift_points.rem_euclid(n) as usize;
        if shift != 0 {
            let mut lines = self.gather_lines(mode);
            for line in lines.chunks_exact_mut(grid.n_points()) {
                line.rotate_right(shift);
            }
            self.scatter_lines(mode, &lines);
        }
        Ok(())
    }

    /// Momentum kick by an integer number of momentum-grid points, `q = k·dp`.
    pub fn apply_kick_points(&mut self, mode: usize, kick_points: i64) -> Result<()> {
        let q = kick_points as f64 * self.grid.dp();
        self.apply_displacement(mode, 0, q)
    }

    /// Cyclic convolution `ψ'(x_i) = Σ_j K(y_j) ψ(x_i - y_j)` along `mode`, where `kernel[j]`
    /// samples `K` at `y_j = x_j` (so `kernel[N/2]` is `y = 0`). The result is renormalized and
    /// the pre-normalization norm is returned.
    pub fn apply_kernel_convolution(&mut self, mode: usize, kernel: &[Complex64]) -> Result<f64> {
        self.grid.check_mode(mode)?;
        let n = self.grid.n_points();
        if kernel.len() != n {
            return Err(Error::InvalidGrid(format!(
                "kernel has {} samples, grid has {n}",
                kernel.len()
            )));
        }
        if kernel.iter().all(|k| k.norm_sqr() == 0.0) {
            return Err(Error::Degenerate("all-zero convolution kernel".into()));
        }
        let center = self.grid.center();
        let mut lines = self.gather_lines(mode);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for line in lines.chunks_exact_mut(n) {
            out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
            for (j, k) in kernel.iter().enumerate() {
                if k.norm_sqr() == 0.0 {
                    continue;
                }
                let shift = (j + n - center) % n;
                for (i, o) in out.iter_mut().enumerate() {
                    *o += k * line[(i + n - shift) % n];
                }
            }
            line.copy_from_slice(&out);
        }
        self.scatter_lines(mode, &lines);
        match self.normalize() {
            Ok(norm) => Ok(norm),
            Err(_) => Err(Error::Degenerate(
                "convolution annihilated the state".into(),
            )),
        }
    }

    /// Per-mode parity `j → (N - j) mod N`, i.e. `x → -x`, on every mode.
    pub fn apply_global_parity(&mut self) {
        let grid = self.grid;
        let n = grid.n_points();
        let mut target = vec![0usize; self.amplitudes.len()];
        for m in 0..grid.mode_count() {
            let stride = grid.stride(m);
            for (t, d) in target.iter_mut().zip(grid.digits(m)) {
                *t += ((n - d as usize) % n) * stride;
            }
        }
        let old = std::mem::take(&mut self.amplitudes);
        let mut new = vec![Complex64::new(0.0, 0.0); old.len()];
        for (amp, t) in old.into_iter().zip(target) {
            new[t] = amp;
        }
        self.amplitudes = new;
    }

    /// Reduced density matrix over `modes` (row-major over the subset in the given order).
    pub fn reduced_density(&self, modes: &[usize]) -> Result<DensityMatrix> {
        for &m in modes {
            self.grid.check_mode(m)?;
        }
        let mut seen = modes.to_vec();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != modes.len() || modes.is_empty() {
            return Err(Error::InvalidGrid("subset must be nonempty and distinct".into()));
        }
        let n = self.grid.n_points();
        if n > 16 && modes.len() > 1 {
            return Err(Error::InvalidGrid(
                "reduced densities over several modes need N <= 16".into(),
            ));
        }
        let dim = n.pow(modes.len() as u32);
        if dim * dim > MAX_DENSITY_ENTRIES {
            return Err(Error::InvalidGrid(format!(
                "reduced density of dimension {dim} exceeds budget"
            )));
        }
        if modes.len() == 1 {
            return Ok(self.single_mode_density(modes[0]));
        }
        let rest_dim = self.amplitudes.len() / dim;
        let rest: Vec<usize> = (0..self.grid.mode_count())
            .filter(|m| !modes.contains(m))
            .collect();
        let mut a = DMatrix::<Complex64>::zeros(dim, rest_dim);
        for (flat, amp) in self.amplitudes.iter().enumerate() {
            let sub = modes
                .iter()
                .fold(0, |acc, &m| acc * n + self.grid.digit(flat, m));
            let r = rest
                .iter()
                .fold(0, |acc, &m| acc * n + self.grid.digit(flat, m));
            a[(sub, r)] = *amp;
        }
        Ok(&a * a.adjoint())
    }

    /// `ρ_ij = Σ_lines line_i conj(line_j)`, skipping empty lines. Exploits the sparsity of
    /// encoded eigenstate superpositions.
    fn single_mode_density(&self, mode: usize) -> DensityMatrix {
        let n = self.grid.n_points();
        let mut rho = DensityMatrix::zeros(n, n);
        let lines = self.gather_lines(mode);
        let mut nz = Vec::with_capacity(n);
        for line in lines.chunks_exact(n) {
            nz.clear();
            nz.extend(
                line.iter()
                    .enumerate()
                    .filter(|(_, a)| **a != Complex64::new(0.0, 0.0))
                    .map(|(i, a)| (i, *a)),
            );
            for &(i, a) in &nz {
                for &(j, b) in &nz {
                    rho[(i, j)] += a * b.conj();
                }
            }
        }
        rho
    }

    /// Tensors on a new last mode prepared in the position eigenstate `index`.
    pub fn append_mode(&self, index: usize) -> Result<MultiModeState> {
        let n = self.grid.n_points();
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
        let grid = self.grid.with_modes(self.grid.mode_count() + 1)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (flat, a) in self.amplitudes.iter().enumerate() {
            amplitudes[flat * n + index] = *a;
        }
        Ok(MultiModeState { grid, amplitudes })
    }

    /// Removes the last mode after it has been projected onto `index`, keeping that slice.
    pub fn discard_last_mode(&self, index: usize) -> Result<MultiModeState> {
        let n = self.grid.n_points();
        if self.grid.mode_count() < 2 {
            return Err(Error::InvalidGrid("cannot discard the only mode".into()));
        }
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
        let grid = self.grid.with_modes(self.grid.mode_count() - 1)?;
        let amplitudes: Vec<Complex64> = (0..grid.len())
            .map(|flat| self.amplitudes[flat * n + index])
            .collect();
        let mut state = MultiModeState { grid, amplitudes };
        state.normalize().map_err(|_| Error::ZeroNormSlice)?;
        Ok(state)
    }

    /// Writes `<base>.bin` (interleaved little-endian re/im `f64`) and `<base>.json`.
    pub fn write_files(&self, base: &Path, header_extra: serde_json::Value) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.amplitudes.len() * 16);
        for a in &self.amplitudes {
            bytes.extend_from_slice(&a.re.to_le_bytes());
            bytes.extend_from_slice(&a.im.to_le_bytes());
        }
        fs::write(base.with_extension("bin"), bytes)?;
        let header = StateHeader {
            n_points: self.grid.n_points(),
            mode_count: self.grid.mode_count(),
            dx: self.grid.dx(),
            order: "row-major".into(),
            extra: header_extra,
        };
        fs::write(
            base.with_extension("json"),
            serde_json::to_string_pretty(&header)?,
        )?;
        Ok(())
    }

    pub fn read_files(base: &Path) -> Result<(MultiModeState, StateHeader)> {
        let header: StateHeader =
            serde_json::from_str(&fs::read_to_string(base.with_extension("json"))?)?;
        let grid = GridSpec::new(header.n_points, header.mode_count)?;
        let bytes = fs::read(base.with_extension("bin"))?;
        if bytes.len() != grid.len() * 16 {
            return Err(Error::InvalidGrid(format!(
                "state file holds {} bytes, header implies {}",
                bytes.len(),
                grid.len() * 16
            )));
        }
        let amplitudes = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok((MultiModeState { grid, amplitudes }, header))
    }
}

/// JSON header accompanying an exported state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateHeader {
    pub n_points: usize,
    pub mode_count: usize,
    pub dx: f64,
    pub order: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &MultiModeState, b: &MultiModeState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `⟨ψ|ρ|ψ⟩` for a single-mode wavefunction.
pub fn density_fidelity(rho: &DensityMatrix, psi: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in psi.iter().enumerate() {
        for (j, b) in psi.iter().enumerate() {
            acc += a.conj() * rho[(i, j)] * b;
        }
    }
    acc.re
}

/// `½ ‖ρ - σ‖₁` for Hermitian matrices of equal size.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let diff = rho - sigma;
    let eig = diff.symmetric_eigenvalues();
    0.5 * eig.iter().map(|v| v.abs()).sum::<f64>()
}

/// Projector `|ψ⟩⟨ψ|`.
pub fn pure_density(psi: &[Complex64]) -> DensityMatrix {
    let v = nalgebra::DVector::from_column_slice(psi);
    &v * v.adjoint()
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last_nonzero = i;
        }
        acc += p;
        if u < acc && *p > 0.0 {
            return i;
        }
    }
    last_nonzero
}

/// Normalized sampled wavefunction `ψ(x_j) ∝ f(x_j)` on one mode.
pub fn sampled_wavefunction(grid: &GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Vec<Complex64>> {
    let mut psi: Vec<Complex64> = grid.positions().into_iter().map(f).collect();
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate("wavefunction has zero norm".into()));
    }
    psi.iter_mut().for_each(|a| *a /= norm);
    Ok(psi)
}

/// One-hot single-mode wavefunction at grid index `j`.
pub fn eigenstate_wavefunction(grid: &GridSpec, j: usize) -> Result<Vec<Complex64>> {
    if j >= grid.n_points() {
        return Err(Error::IndexOutOfRange {
            index: j,
            n: grid.n_points(),
        });
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    psi[j] = Complex64::new(1.0, 0.0);
    Ok(psi)
}
