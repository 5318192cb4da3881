use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmvqe::oracle::dense_operator;
use rmvqe::pauli::{PauliSum, PauliWord};
use rmvqe::statevector::{coherent_summation, expectation, run_circuit, AngleSlot, Gate, ParamCircuit, Statevector};

const N: usize = 4;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Local matrix with operand 0 as the most significant bit.
fn local(gate: &Gate) -> DMatrix<Complex64> {
    let theta = match gate.angle {
        Some(AngleSlot::Fixed(t)) => t,
        _ => 0.0,
    };
    let (s, co) = theta.sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let g4 = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, co, s, 0.0],
        [0.0, -s, co, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    match gate.kind.name() {
        "X" => DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        "H" => DMatrix::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)]),
        "CNOT" => DMatrix::from_fn(4, 4, |r, col| {
            let image = if col >= 2 { col ^ 1 } else { col };
            c(if r == image { 1.0 } else { 0.0 })
        }),
        "GIVENS" => DMatrix::from_fn(4, 4, |r, col| c(g4[r][col])),
        "CGIVENS" => DMatrix::from_fn(8, 8, |r, col| {
            if r < 4 || col < 4 {
                c(if r == col { 1.0 } else { 0.0 })
            } else {
                c(g4[r - 4][col - 4])
            }
        }),
        other => panic!("no oracle for {other}"),
    }
}

/// Embeds a local gate into the full little-endian register.
fn embed(gate: &Gate, n: usize) -> DMatrix<Complex64> {
    let m = local(gate);
    let k = gate.qubits.len();
    let pick = |b: usize| {
        (0..k).fold(0, |acc, i| acc | ((b >> gate.qubits[i] & 1) << (k - 1 - i)))
    };
    let mask: usize = gate.qubits.iter().map(|q| 1 << q).sum();
    DMatrix::from_fn(1 << n, 1 << n, |r, col| {
        if r & !mask != col & !mask {
            c(0.0)
        } else {
            m[(pick(r), pick(col))]
        }
    })
}

fn gate() -> impl Strategy<Value = Gate> {
    let qubits = Just((0..N).collect::<Vec<_>>()).prop_shuffle();
    (0usize..5, qubits, -4.0f64..4.0).prop_map(|(kind, q, t)| match kind {
        0 => Gate::x(q[0]),
        1 => Gate::hadamard(q[0]),
        2 => Gate::cnot(q[0], q[1]),
        3 => Gate::givens(q[0], q[1], AngleSlot::Fixed(t)),
        _ => Gate::controlled_givens(q[0], q[1], q[2], AngleSlot::Fixed(t)),
    })
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Statevector {
    let raw: Vec<Complex64> = (0..1 << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Statevector::from_amplitudes(raw.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn vector(s: &Statevector) -> DVector<Complex64> {
    DVector::from_column_slice(s.amplitudes())
}

proptest! {
    #[test]
    fn circuits_match_dense_products(gates in prop::collection::vec(gate(), 1..10), seed in any::<u64>()) {
        let mut circuit = ParamCircuit::new(N).unwrap();
        let mut dense = DMatrix::<Complex64>::identity(1 << N, 1 << N);
        for g in &gates {
            circuit.push(g.clone()).unwrap();
            dense = embed(g, N) * dense;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(&mut rng, N);
        let out = run_circuit(&circuit, &psi).unwrap();
        let want = &dense * vector(&psi);
        prop_assert!((vector(&out) - want).camax() < 1e-12);
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        let u_adj_u = dense.adjoint() * &dense;
        prop_assert!((u_adj_u - DMatrix::identity(1 << N, 1 << N)).camax() < 1e-12);
    }

    #[test]
    fn circuits_preserve_inner_products(gates in prop::collection::vec(gate(), 1..10), seed in any::<u64>()) {
        let mut circuit = ParamCircuit::new(N).unwrap();
        for g in gates {
            circuit.push(g).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_state(&mut rng, N), random_state(&mut rng, N));
        let before = a.inner(&b).unwrap();
        let after = run_circuit(&circuit, &a).unwrap().inner(&run_circuit(&circuit, &b).unwrap()).unwrap();
        prop_assert!((before - after).norm() < 1e-12);
    }

    #[test]
    fn expectation_matches_dense(terms in prop::collection::vec((0u64..16, 0u64..16, -1.0f64..1.0), 1..8), seed in any::<u64>()) {
        let op = PauliSum::from_terms(N, terms.into_iter().map(|(x, z, v)| (PauliWord::from_masks(x, z), c(v)))).unwrap();
        let op = op.add(&op.adjoint()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(&mut rng, N);
        let v = vector(&psi);
        let want = (v.adjoint() * dense_operator(&op).unwrap() * &v)[(0, 0)];
        prop_assert!((expectation(&psi, &op).unwrap() - want).norm() < 1e-12);
    }
}

/// `Σ_ij ⟨ψ_i|H|ψ_j⟩` from explicit ancilla slices.
fn sliced_double_sum(psi: &Statevector, ancillas: &[usize], h: &PauliSum) -> f64 {
    let n = psi.n_qubits();
    let mask: usize = ancillas.iter().map(|q| 1 << q).sum();
    let hd = dense_operator(h).unwrap();
    let slice = |i: usize| {
        // branch i: ancilla j holds bit j of i; stored in the all-zero ancilla slot
        let pattern: usize = ancillas.iter().enumerate().map(|(j, q)| (i >> j & 1) << q).sum();
        DVector::from_fn(1 << n, |b, _| {
            if b & mask == 0 {
                psi.amplitude(b | pattern)
            } else {
                c(0.0)
            }
        })
    };
    let slices: Vec<_> = (0..1 << ancillas.len()).map(slice).collect();
    let mut total = c(0.0);
    for a in &slices {
        for b in &slices {
            total += (a.adjoint() * &hd * b)[(0, 0)];
        }
    }
    assert!(total.im.abs() < 1e-10);
    total.re
}

#[test]
fn coherent_summation_equals_sliced_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let system = 3;
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let a = 1 + trial % 3;
        let n = system + a;
        // scatter the ancillas through the register
        let mut qubits: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            qubits.swap(i, rng.random_range(0..=i));
        }
        let (ancillas, sys) = qubits.split_at(a);
        let sys_mask: u64 = sys.iter().map(|q| 1u64 << q).sum();
        let terms: Vec<_> = (0..6)
            .map(|_| {
                let x = rng.random_range(0..1u64 << n) & sys_mask;
                let z = rng.random_range(0..1u64 << n) & sys_mask;
                (PauliWord::from_masks(x, z), c(rng.random_range(-1.0..1.0)))
            })
            .collect();
        let h = PauliSum::from_terms(n, terms).unwrap();
        let h = h.add(&h.adjoint()).unwrap();
        let psi = random_state(&mut rng, n);
        let got = coherent_summation(&psi, ancillas, &h).unwrap();
        worst = worst.max((got - sliced_double_sum(&psi, ancillas, &h)).abs());
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn coherent_summation_rejects_observables_on_ancillas() {
    let h = PauliSum::from_real_terms(2, &[(1.0, "Z1")]).unwrap();
    let psi = Statevector::zero(2).unwrap();
    assert!(coherent_summation(&psi, &[1], &h).is_err());
}

#[test]
fn circuit_text_round_trip() {
    let mut circuit = ParamCircuit::new(3).unwrap();
    let t = circuit.add_param("theta_0", 0.3).unwrap();
    circuit.push(Gate::x(0)).unwrap();
    circuit.push(Gate::givens(0, 1, AngleSlot::Param(t))).unwrap();
    circuit.push(Gate::controlled_givens(2, 0, 1, AngleSlot::Fixed(-0.7))).unwrap();
    circuit.push(Gate::cnot(1, 2)).unwrap();
    let back = ParamCircuit::parse_text(&circuit.to_text()).unwrap();
    let psi = Statevector::basis(3, 0b100).unwrap();
    let (a, b) = (run_circuit(&circuit, &psi).unwrap(), run_circuit(&back, &psi).unwrap());
    assert!((vector(&a) - vector(&b)).camax() < 1e-15);
}
