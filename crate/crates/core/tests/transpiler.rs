mod common;

use common::*;
use cvqec::codes::{build_cv5, build_repetition3, encode, CodeSpec};
use cvqec::grid::{eigenstate_wavefunction, fidelity, GridSpec};
use cvqec::symplectic::{syndrome_matrix, FailureKind};
use cvqec::transpiler::*;
use cvqec::{Circuit, Error};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture() -> QubitCircuit {
    parse_qubit_circuit(LAFLAMME5_FIXTURE).unwrap()
}

fn code_for(bits: &str) -> CodeSpec {
    let circuit = substitute(&fixture(), &SignAssignment::parse(bits).unwrap()).unwrap();
    CodeSpec::from_encoder("candidate", circuit).unwrap()
}

const INVALID: [&str; 4] = ["0000000", "0000101", "0001010", "0001111"];

#[test]
fn enumeration_over_free_signs_finds_twelve_valid_assignments() {
    let verdicts = enumerate_valid_assignments(&fixture(), &EnumerateOptions::default()).unwrap();
    assert_eq!(verdicts.len(), 16);
    for v in &verdicts {
        let name = v.assignment.to_string();
        assert!(name.starts_with("000"), "{name}");
        assert!(v.parity_ok);
        assert!(!v.degenerate);
        assert_eq!(v.circuit.gate_counts().sum_type(), 7);
        assert_eq!(v.valid, !INVALID.contains(&name.as_str()), "{name}");
        if !v.valid {
            assert_eq!(v.failing_pairs_labelled(), vec!["4-5".to_string()]);
            assert!(v
                .report
                .failures
                .iter()
                .all(|f| f.kind == FailureKind::NonUnimodular && f.modes == vec![3, 4]));
        }
    }
    let valid = verdicts.iter().filter(|v| v.valid).count();
    assert_eq!(valid, 12);
    assert_eq!(CHAU_BASELINE_SUM_GATES, 9);
}

#[test]
fn shipped_assignment_is_valid_and_matches_the_builtin_code() {
    let verdicts = enumerate_valid_assignments(&fixture(), &EnumerateOptions::default()).unwrap();
    let shipped = verdicts.iter().find(|v| v.assignment.to_string() == "0000011").unwrap();
    assert!(shipped.valid);
    assert_eq!(shipped.circuit, build_cv5().encoder);
}

#[test]
fn pinning_the_first_layer_loses_no_valid_assignment_classes() {
    let options = EnumerateOptions {
        fix_first_layer: false,
        ..EnumerateOptions::default()
    };
    let verdicts = enumerate_valid_assignments(&fixture(), &options).unwrap();
    assert_eq!(verdicts.len(), 128);
    assert_eq!(verdicts.iter().filter(|v| v.valid).count(), 96);
    // Each first-layer prefix keeps exactly four invalid suffixes, a translate of the pinned set.
    let pinned: Vec<u8> = INVALID.iter().map(|s| u8::from_str_radix(&s[3..], 2).unwrap()).collect();
    for prefix in 0..8 {
        let invalid: Vec<u8> = verdicts
            .iter()
            .filter(|v| !v.valid && v.assignment.bits[..3] == bits3(prefix))
            .map(|v| u8::from_str_radix(&v.assignment.to_string()[3..], 2).unwrap())
            .collect();
        assert_eq!(invalid.len(), 4, "prefix {prefix:03b}");
        let mask = invalid[0] ^ pinned[0];
        let mut shifted: Vec<u8> = pinned.iter().map(|p| p ^ mask).collect();
        shifted.sort();
        assert_eq!(shifted, invalid, "prefix {prefix:03b}");
    }
}

fn bits3(prefix: u8) -> [bool; 3] {
    [prefix & 4 != 0, prefix & 2 != 0, prefix & 1 != 0]
}

#[test]
fn repetition_fixture_reproduces_the_builtin_encoder() {
    let qc = parse_qubit_circuit(REPETITION3_FIXTURE).unwrap();
    assert_eq!(qc.first_layer_xors(), vec![0, 1]);
    let circuit = substitute(&qc, &SignAssignment::all_sum(2)).unwrap();
    assert_eq!(circuit, build_repetition3().encoder);
    let options = EnumerateOptions {
        error_class: ErrorClass::Position,
        ..EnumerateOptions::default()
    };
    let verdicts = enumerate_valid_assignments(&qc, &options).unwrap();
    assert_eq!(verdicts.len(), 1);
    assert!(verdicts[0].valid && verdicts[0].correctable);
    let full = enumerate_valid_assignments(&qc, &EnumerateOptions::default()).unwrap();
    assert!(!full[0].valid);
}

#[test]
fn single_ancilla_codes_are_flagged_degenerate() {
    let qc = parse_qubit_circuit(r#"{"qubit_count": 2, "gates": [{"type": "XOR", "qubits": [0, 1]}]}"#).unwrap();
    let options = EnumerateOptions {
        fix_first_layer: false,
        ..EnumerateOptions::default()
    };
    let verdicts = enumerate_valid_assignments(&qc, &options).unwrap();
    assert_eq!(verdicts.len(), 2);
    assert!(verdicts.iter().all(|v| v.degenerate && v.valid && !v.correctable));
}

#[test]
fn emitted_circuits_roundtrip() {
    let qc = fixture();
    let a = SignAssignment::parse("0100011").unwrap();
    let mut out = Vec::new();
    emit_cv_circuit(&qc, &a, &mut out).unwrap();
    let parsed = Circuit::from_json(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(parsed, substitute(&qc, &a).unwrap());
    assert!(matches!(
        substitute(&qc, &SignAssignment::all_sum(6)),
        Err(Error::AssignmentLength { expected: 7, found: 6 })
    ));
    assert!(SignAssignment::parse("01x").is_err());
}

#[test]
fn verdict_csv_has_one_row_per_assignment() {
    let verdicts = enumerate_valid_assignments(&fixture(), &EnumerateOptions::default()).unwrap();
    let mut out = Vec::new();
    write_verdict_csv(&verdicts, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 17);
    assert_eq!(lines[0], VERDICT_HEADER.join(","));
    let bad = lines.iter().find(|l| l.starts_with("0000000,")).unwrap();
    assert!(bad.contains(",false,") && bad.contains("4-5") && bad.contains("lattice determinant"));
}

/// Syndrome columns of the `(x, p)` displacements of modes `a` and `b`, as an integer matrix.
fn pair_matrix(code: &CodeSpec, a: usize, b: usize) -> DMatrix<f64> {
    let h = syndrome_matrix(code);
    let m = code.mode_count;
    DMatrix::from_columns(&[h.column(a), h.column(m + a), h.column(b), h.column(m + b)])
}

fn grid_syndrome(code: &CodeSpec, mode: usize, s: i64, k: i64, n: i64) -> Vec<i64> {
    let h = syndrome_matrix(code);
    let m = code.mode_count;
    (0..h.nrows())
        .map(|r| (h[(r, mode)] as i64 * s + h[(r, m + mode)] as i64 * k).rem_euclid(n))
        .collect()
}

fn centered(v: f64, n: i64) -> i64 {
    let r = (v.round() as i64).rem_euclid(n);
    if r >= n / 2 {
        r - n
    } else {
        r
    }
}

#[test]
fn non_unimodular_pair_collides_on_a_twelve_point_grid() {
    let n = 12i64;
    let code = code_for("0000000");
    let a = pair_matrix(&code, 3, 4);
    let det = a.determinant();
    assert!((det.abs() - 3.0).abs() < 1e-9, "{det}");
    let adj = a.clone().try_inverse().unwrap() * det;
    // e = 4·adj(A)·u solves A·e = 4·det·u ≡ 0 (mod 12).
    let e = adj * DVector::from_vec(vec![4.0, 0.0, 0.0, 0.0]);
    let e: Vec<i64> = e.iter().map(|v| centered(*v, n)).collect();
    assert!(e.iter().any(|v| *v != 0));
    assert_eq!(
        grid_syndrome(&code, 3, e[0], e[1], n),
        grid_syndrome(&code, 4, -e[2], -e[3], n)
    );
    // No ±1 readout exists for this code, so the collision is shown on the codespace itself:
    // E₃⁻¹E₄ maps encoded states back into the code but acts on them as a nontrivial logical.
    let grid = GridSpec::new(n as usize, 1).unwrap();
    let basis: Vec<_> = (0..n as usize)
        .map(|j| encode(&eigenstate_wavefunction(&grid, j).unwrap(), &code, &grid).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let psi = random_amplitudes(n as usize, &mut rng);
    let encoded = encode(&psi, &code, &grid).unwrap();
    let dp = encoded.grid().dp();
    let mut moved = encoded.clone();
    moved.apply_displacement(3, -e[0], -e[1] as f64 * dp).unwrap();
    moved.apply_displacement(4, -e[2], -e[3] as f64 * dp).unwrap();
    let in_code: f64 = basis.iter().map(|b| b.inner(&moved).unwrap().norm_sqr()).sum();
    assert!((in_code - 1.0).abs() < 1e-9, "{in_code}");
    let same = fidelity(&encoded, &moved).unwrap();
    assert!(same < 0.99, "{same}");
    // Any recovery that undoes one error therefore applies this logical after the other.
    let mut first = encoded.clone();
    first.apply_displacement(3, e[0], e[1] as f64 * dp).unwrap();
    let mut second = encoded;
    second.apply_displacement(4, -e[2], -e[3] as f64 * dp).unwrap();
    first.apply_displacement(3, -e[0], -e[1] as f64 * dp).unwrap();
    second.apply_displacement(3, -e[0], -e[1] as f64 * dp).unwrap();
    let undone = basis.iter().map(|b| b.inner(&first).unwrap().norm_sqr()).sum::<f64>();
    assert!((undone - 1.0).abs() < 1e-9);
    assert!(fidelity(&first, &second).unwrap() < 0.99);
    assert!(matches!(
        cvqec::syndrome::readout_forms(&code),
        Err(Error::UnsupportedNullifier(_))
    ));
}

#[test]
fn unimodular_pair_never_collides_on_a_twelve_point_grid() {
    let n = 12i64;
    let code = build_cv5();
    assert!((pair_matrix(&code, 3, 4).determinant().abs() - 1.0).abs() < 1e-9);
    let half = n / 2;
    let syndromes = |mode: usize| -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for s in -half..half {
            for k in -half..half {
                if (s, k) != (0, 0) {
                    out.push(grid_syndrome(&code, mode, s, k, n));
                }
            }
        }
        out
    };
    let three = syndromes(3);
    let four = syndromes(4);
    assert!(three.iter().all(|s| !four.contains(s)));
    let invalid = code_for("0000000");
    let mut collisions = 0;
    for s in -half..half {
        for k in -half..half {
            let v = grid_syndrome(&invalid, 3, s, k, n);
            if (s, k) != (0, 0) && (-half..half).any(|t| (-half..half).any(|q| grid_syndrome(&invalid, 4, t, q, n) == v)) {
                collisions += 1;
            }
        }
    }
    assert!(collisions > 0);
}
