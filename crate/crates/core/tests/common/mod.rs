//! Independent dense-matrix oracle and shared helpers.
#![allow(dead_code)]

use cvqec::grid::{GridSpec, MultiModeState};
use cvqec::{Circuit, Gate};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// `U_jk = (dx/√π) exp(2i x_j x_k)` written out entry by entry.
pub fn dense_fourier(n: usize) -> DMatrix<C> {
    let dx = (std::f64::consts::PI / n as f64).sqrt();
    let x = |j: usize| (j as f64 - (n / 2) as f64) * dx;
    DMatrix::from_fn(n, n, |j, k| {
        C::from_polar(dx / std::f64::consts::PI.sqrt(), 2.0 * x(j) * x(k))
    })
}

fn tuple(flat: usize, n: usize, m: usize) -> Vec<usize> {
    let mut t = vec![0; m];
    let mut f = flat;
    for slot in t.iter_mut().rev() {
        *slot = f % n;
        f /= n;
    }
    t
}

fn flat(t: &[usize], n: usize) -> usize {
    t.iter().fold(0, |acc, d| acc * n + d)
}

/// Full `N^M × N^M` matrix of one gate.
pub fn dense_gate(gate: &Gate, n: usize, m: usize) -> DMatrix<C> {
    let dim = n.pow(m as u32);
    let mut u = DMatrix::zeros(dim, dim);
    let f = dense_fourier(n);
    for col in 0..dim {
        let t = tuple(col, n, m);
        match *gate {
            Gate::Fourier(q) | Gate::FourierInv(q) => {
                for j in 0..n {
                    let mut r = t.clone();
                    r[q] = j;
                    let v = f[(j, t[q])];
                    u[(flat(&r, n), col)] = if matches!(gate, Gate::Fourier(_)) {
                        v
                    } else {
                        f[(t[q], j)].conj()
                    };
                }
            }
            Gate::Sum { control, target } | Gate::SumInv { control, target } => {
                let sign: i64 = if matches!(gate, Gate::Sum { .. }) { 1 } else { -1 };
                let mut r = t.clone();
                let cval = t[control] as i64 - (n / 2) as i64;
                r[target] = (t[target] as i64 + sign * cval).rem_euclid(n as i64) as usize;
                u[(flat(&r, n), col)] = c(1.0, 0.0);
            }
        }
    }
    u
}

pub fn dense_circuit(circuit: &Circuit, n: usize) -> DMatrix<C> {
    let m = circuit.mode_count();
    let dim = n.pow(m as u32);
    circuit
        .gates()
        .iter()
        .fold(DMatrix::identity(dim, dim), |acc, g| dense_gate(g, n, m) * acc)
}

pub fn random_amplitudes<R: Rng>(len: usize, rng: &mut R) -> Vec<C> {
    let mut v: Vec<C> = (0..len)
        .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

pub fn random_state<R: Rng>(grid: GridSpec, rng: &mut R) -> MultiModeState {
    MultiModeState::from_amplitudes(grid, random_amplitudes(grid.len(), rng)).unwrap()
}

pub fn random_gate<R: Rng>(m: usize, rng: &mut R) -> Gate {
    let a = rng.random_range(0..m);
    let mut b = rng.random_range(0..m);
    if m > 1 {
        while b == a {
            b = rng.random_range(0..m);
        }
    }
    match rng.random_range(0..if m > 1 { 4 } else { 2 }) {
        0 => Gate::Fourier(a),
        1 => Gate::FourierInv(a),
        2 => Gate::Sum {
            control: a,
            target: b,
        },
        _ => Gate::SumInv {
            control: a,
            target: b,
        },
    }
}

pub fn random_circuit<R: Rng>(m: usize, len: usize, rng: &mut R) -> Circuit {
    Circuit::from_gates(m, (0..len).map(|_| random_gate(m, rng)).collect()).unwrap()
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn matvec(u: &DMatrix<C>, v: &[C]) -> Vec<C> {
    (u * DVector::from_column_slice(v)).iter().copied().collect()
}
