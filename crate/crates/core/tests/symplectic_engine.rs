mod common;

use common::*;
use cvqec::codes::{build_cv5, build_repetition3, build_shor9, direct_encoded_state, CodeSpec};
use cvqec::grid::{fidelity, GridSpec, MultiModeState};
use cvqec::symplectic::*;
use cvqec::syndrome::readout_forms;
use cvqec::{Circuit, Error, Gate};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Applies the integer displacement `d = (shifts, kicks)` in grid points, mode by mode.
fn displace(state: &mut MultiModeState, d: &[i64]) {
    let m = state.grid().mode_count();
    let dp = state.grid().dp();
    for mode in 0..m {
        state
            .apply_displacement(mode, d[mode], d[m + mode] as f64 * dp)
            .unwrap();
    }
}

fn integer_image(s: &SymplecticRep, d: &[i64]) -> Vec<i64> {
    let v: Vec<f64> = d.iter().map(|&x| x as f64).collect();
    s.apply(&v).iter().map(|x| x.round() as i64).collect()
}

#[test]
fn random_circuits_are_symplectic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in 1..=5 {
        for _ in 0..20 {
            let c = random_circuit(m, 30, &mut rng);
            let s = circuit_symplectic(&c);
            assert!(s.symplectic_defect() < 1e-12);
            let back = circuit_symplectic(&c.inverse()).after(&s);
            assert_eq!(back, SymplecticRep::identity(m));
            assert_eq!(s.inverse(), circuit_symplectic(&c.inverse()));
        }
    }
    assert_eq!(circuit_symplectic(&Circuit::new(4)), SymplecticRep::identity(4));
}

#[test]
fn cv5_encoder_matrix_is_symplectic_and_integral() {
    let s = circuit_symplectic(&build_cv5().encoder);
    assert_eq!(s.matrix().nrows(), 10);
    assert!(s.is_symplectic(1e-12));
    assert!(s.matrix().iter().all(|v| v.fract() == 0.0));
}

#[test]
fn displacements_propagate_covariantly_on_the_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 8;
    for m in 1..=3 {
        for _ in 0..10 {
            let c = random_circuit(m, 8, &mut rng);
            let s = circuit_symplectic(&c);
            let d: Vec<i64> = (0..2 * m).map(|_| rng.random_range(-2..=2)).collect();
            let psi = random_state(GridSpec::new(n, m).unwrap(), &mut rng);
            let mut lhs = psi.clone();
            displace(&mut lhs, &d);
            lhs.apply_circuit(&c).unwrap();
            let mut rhs = psi;
            rhs.apply_circuit(&c).unwrap();
            displace(&mut rhs, &integer_image(&s, &d));
            let f = fidelity(&lhs, &rhs).unwrap();
            assert!(f > 1.0 - 1e-9, "{c:?} d={d:?}: {f}");
        }
    }
}

#[test]
fn covariance_spot_check_on_the_five_mode_encoder() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let code = build_cv5();
    let s = circuit_symplectic(&code.encoder);
    let grid = GridSpec::new(12, 5).unwrap();
    let psi = random_state(grid, &mut rng);
    for _ in 0..2 {
        let d: Vec<i64> = (0..10).map(|_| rng.random_range(-2..=2)).collect();
        let mut lhs = psi.clone();
        displace(&mut lhs, &d);
        lhs.apply_circuit(&code.encoder).unwrap();
        let mut rhs = psi.clone();
        rhs.apply_circuit(&code.encoder).unwrap();
        displace(&mut rhs, &integer_image(&s, &d));
        assert!(fidelity(&lhs, &rhs).unwrap() > 1.0 - 1e-9);
    }
}

#[test]
fn fourier_sign_convention_matches_the_grid() {
    // F·D(d) = D(S_F d)·F with S_F mapping e_x → e_p.
    let s = gate_symplectic(&Gate::Fourier(0), 1);
    assert_eq!(s.apply(&[1.0, 0.0]), vec![0.0, 1.0]);
    assert_eq!(s.apply(&[0.0, 1.0]), vec![-1.0, 0.0]);
    let grid = GridSpec::new(16, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let psi = random_state(grid, &mut rng);
    let mut a = psi.clone();
    displace(&mut a, &[3, 0]);
    a.apply_gate(&Gate::Fourier(0)).unwrap();
    let mut b = psi;
    b.apply_gate(&Gate::Fourier(0)).unwrap();
    displace(&mut b, &[0, 3]);
    assert!(fidelity(&a, &b).unwrap() > 1.0 - 1e-12);
}

fn codes_and_grids() -> Vec<(CodeSpec, Vec<usize>)> {
    vec![
        (build_repetition3(), vec![8, 16]),
        (build_cv5(), vec![8, 12]),
        (build_shor9(), vec![4]),
    ]
}

#[test]
fn nullifiers_act_trivially_on_encoded_states() {
    // exp(i·t·f·R) fixes every state on which f has value 0 with zero spread; on the grid this
    // is the integer displacement with generator f.
    for (code, sizes) in codes_and_grids() {
        let m = code.mode_count;
        for n in sizes {
            let grid = GridSpec::new(n, m).unwrap();
            for j in [0, n / 2 - 1, n / 2, n - 1] {
                let psi = direct_encoded_state(&code, &grid, j).unwrap();
                for null in &code.nullifiers {
                    let f = null.integer_coeffs().unwrap();
                    let d: Vec<i64> = (0..m).map(|i| -f[m + i]).chain((0..m).map(|i| f[i])).collect();
                    let mut moved = psi.clone();
                    displace(&mut moved, &d);
                    let fid = fidelity(&psi, &moved).unwrap();
                    assert!(fid > 1.0 - 1e-9, "{} N={n} j={j} {}: {fid}", code.name, null.describe());
                }
            }
        }
    }
}

#[test]
fn readout_forms_vanish_on_encoded_states() {
    for (code, sizes) in codes_and_grids() {
        let m = code.mode_count;
        for n in sizes {
            let grid = GridSpec::new(n, m).unwrap();
            for j in [1, n / 2, n - 1] {
                let psi = direct_encoded_state(&code, &grid, j).unwrap();
                for form in readout_forms(&code).unwrap() {
                    let mut s = psi.clone();
                    for mode in 0..m {
                        if form.coeffs[m + mode] != 0.0 {
                            s.apply_gate(&Gate::FourierInv(mode)).unwrap();
                        }
                    }
                    // Values live on the periodic grid, so the form is zero modulo N.
                    let mut off_lattice = 0.0;
                    for (flat, a) in s.amplitudes().iter().enumerate() {
                        let v: i64 = (0..m)
                            .map(|mode| {
                                let c = (form.coeffs[mode] + form.coeffs[m + mode]) as i64;
                                c * grid.offset(grid.digit(flat, mode))
                            })
                            .sum();
                        if v.rem_euclid(n as i64) != 0 {
                            off_lattice += a.norm_sqr();
                        }
                    }
                    assert!(off_lattice < 1e-9, "{} {}", code.name, form.describe());
                }
            }
        }
    }
}

#[test]
fn repetition_nullifiers_are_position_differences() {
    let code = build_repetition3();
    let rows: Vec<Vec<f64>> = code.nullifiers.iter().map(|n| n.coeffs.clone()).collect();
    assert_eq!(rows[0], vec![-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(rows[1], vec![-1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
}

fn in_row_span(code: &CodeSpec, v: &[f64]) -> bool {
    let h = syndrome_matrix(code);
    let ht = h.transpose();
    let svd = ht.clone().svd(true, true);
    let coeffs = svd.solve(&DVector::from_column_slice(v), 1e-12).unwrap();
    (ht * coeffs - DVector::from_column_slice(v)).norm() < 1e-9
}

#[test]
fn five_mode_nullifiers_contain_the_position_combination() {
    let code = build_cv5();
    assert_eq!(code.nullifiers.len(), 4);
    let v = [0.0, 1.0, -1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    assert!(in_row_span(&code, &v));
    let h = syndrome_matrix(&code);
    assert_eq!(h.clone().rank(1e-9), 4);
}

#[test]
fn syndrome_matrix_is_linear_with_difference_pattern() {
    let code = build_repetition3();
    let rows: Vec<Vec<f64>> = readout_forms(&code)
        .unwrap()
        .iter()
        .map(|f| f.coeffs.clone())
        .collect();
    let map = SyndromeMap::with_forms(&code, &rows);
    assert_eq!(map.syndrome(&DisplacementError::zero(1)), vec![0.0; 3]);
    for y in [-2.5, 1.0, 4.0] {
        let s = map.syndrome(&DisplacementError::new(0, y, 0.0).unwrap());
        assert_eq!(s, vec![-y, 0.0, y]);
    }
    let h = syndrome_matrix(&build_cv5());
    let d1 = DVector::from_vec(DisplacementError::new(2, 0.5, -1.0).unwrap().embed(5));
    let d2 = DVector::from_vec(DisplacementError::new(4, 2.0, 3.0).unwrap().embed(5));
    assert!((&h * (&d1 + &d2) - (&h * &d1 + &h * &d2)).norm() < 1e-12);
}

#[test]
fn five_mode_code_passes_every_check() {
    let r = check_correctability(&build_cv5());
    assert!(r.correctable);
    assert_eq!(r.modes.len(), 5);
    assert_eq!(r.pairs.len(), 10);
    assert!(r.modes.iter().all(|m| m.injective && m.lattice_gcd == Some(1)));
    assert!(r.pairs.iter().all(|p| p.passes && p.images_disjoint && !p.degenerate));
    assert!(r.pairs.iter().all(|p| p.min_singular_value > 1e-3));
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["modes"][0]["injective"], true);
    assert!(json["pairs"][9]["min_singular_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn repetition_code_corrects_positions_only() {
    let r = check_correctability(&build_repetition3());
    assert!(r.position_only.correctable);
    assert!(!r.momentum_only.correctable);
    assert!(!r.correctable);
    assert!(r.modes.iter().all(|m| m.position_detectable && !m.momentum_detectable));
    let ids: Vec<Vec<usize>> = r.momentum_only.failures.iter().map(|f| f.modes.clone()).collect();
    for m in 0..3 {
        assert!(ids.contains(&vec![m]));
    }
}

#[test]
fn nine_mode_code_is_correctable_with_degenerate_momentum() {
    let r = check_correctability(&build_shor9());
    assert!(r.correctable, "{:?}", r.failures);
    let degenerate: Vec<[usize; 2]> = r.pairs.iter().filter(|p| p.degenerate).map(|p| p.modes).collect();
    assert_eq!(degenerate.len(), 9);
    assert!(degenerate.contains(&[0, 1]) && degenerate.contains(&[6, 8]));
}

#[test]
fn decode_roundtrips_single_mode_displacements() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for code in [build_cv5(), build_shor9()] {
        let map = SyndromeMap::for_code(&code);
        for mode in 0..code.mode_count {
            for _ in 0..10 {
                let e = DisplacementError::new(mode, rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)).unwrap();
                let got = decode_syndrome(&code, &map.syndrome(&e)).unwrap();
                if code.name == "cv5" {
                    assert_eq!(got.mode, mode);
                    assert!((got.e_x - e.e_x).abs() < 1e-9 && (got.e_p - e.e_p).abs() < 1e-9);
                } else {
                    let diff: Vec<f64> = got
                        .embed(9)
                        .iter()
                        .zip(e.embed(9))
                        .map(|(a, b)| a - b)
                        .collect();
                    let close = diff.iter().all(|v| v.abs() < 1e-9);
                    assert!(close || map.is_stabilizer_displacement(&diff), "{e:?} -> {got:?}");
                }
            }
        }
    }
    let zero = decode_syndrome(&build_cv5(), &[0.0; 4]).unwrap();
    assert_eq!(zero, DisplacementError::zero(0));
}

#[test]
fn decode_rejects_syndromes_outside_every_image() {
    let code = build_cv5();
    let h = syndrome_matrix(&code);
    // Orthogonal complement of mode 0's image, intersected away from the other images.
    let a0 = DMatrix::from_columns(&[h.column(0).into_owned(), h.column(5).into_owned()]);
    let svd = a0.clone().svd(true, false);
    let u = svd.u.unwrap();
    let full = DMatrix::<f64>::identity(4, 4) - &u * u.transpose();
    let s: Vec<f64> = (&full * DVector::from_vec(vec![1.0, 2.0, -0.5, 0.25])).iter().copied().collect();
    assert!(matches!(decode_syndrome(&code, &s), Err(Error::UnrecognizedSyndrome)));
}

#[test]
fn decode_reports_ambiguous_syndromes() {
    let two = Circuit::from_gates(
        2,
        vec![Gate::Sum {
            control: 0,
            target: 1,
        }],
    )
    .unwrap();
    let code = CodeSpec::from_encoder("pair", two).unwrap();
    assert!(matches!(decode_syndrome(&code, &[1.0]), Err(Error::AmbiguousSyndrome(_))));
}

#[test]
fn nullifier_derivation_checks_ancillas() {
    let enc = build_cv5().encoder;
    assert!(nullifiers_for_encoder(&enc, &[1, 2, 3]).is_err());
    assert!(nullifiers_for_encoder(&enc, &[1, 2, 3, 7]).is_err());
    assert!(nullifiers_for_encoder(&enc, &[1, 1, 2, 3]).is_err());
    assert_eq!(derive_nullifiers(&build_cv5()).unwrap(), build_cv5().nullifiers);
}
