mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmvqe::ansatz::{build_ansatz, build_cascade};
use rmvqe::oracle::{dense_operator, exact_spectrum};
use rmvqe::pauli::PauliSum;
use rmvqe::projection::{inner_region_projector, number_projector, ProjectorSpec};
use rmvqe::statevector::expectation;

const N: usize = 6;

fn assert_projector(p: &PauliSum) {
    assert!(p.is_diagonal());
    assert!(p.is_hermitian(0.0));
    let residue = p.multiply(p).unwrap().sub(p).unwrap();
    assert!(residue.is_empty(), "P² − P keeps {} terms", residue.len());
    let dense = dense_operator(p).unwrap();
    let real = DMatrix::from_fn(dense.nrows(), dense.ncols(), |r, c| dense[(r, c)].re);
    for v in exact_spectrum(&real).unwrap().values {
        assert!(v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12, "eigenvalue {v}");
    }
}

fn register() -> impl Strategy<Value = Vec<usize>> {
    Just((0..N).collect::<Vec<_>>()).prop_shuffle().prop_flat_map(|q| {
        (1..=N).prop_map(move |len| q[..len].to_vec())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn number_projectors_are_projectors(qubits in register(), pick in 0usize..=N) {
        let occupancy = pick.min(qubits.len());
        let p = number_projector(&ProjectorSpec::new(qubits.clone(), occupancy).unwrap(), N).unwrap();
        assert_projector(&p);
        for b in 0..1u64 << N {
            let count = qubits.iter().filter(|&&q| b >> q & 1 == 1).count();
            let want = if count == occupancy { 1.0 } else { 0.0 };
            let got: Complex64 = p.iter().map(|(w, c)| c * w.apply_to_basis(b).1).sum();
            prop_assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn number_projectors_resolve_the_identity(qubits in register()) {
        let mut total = PauliSum::zero(N);
        for n in 0..=qubits.len() {
            total = total
                .add(&number_projector(&ProjectorSpec::new(qubits.clone(), n).unwrap(), N).unwrap())
                .unwrap();
        }
        prop_assert_eq!(total, PauliSum::identity(N));
    }

    #[test]
    fn inner_region_projector_is_a_projector(split in 1usize..N, electrons in 0usize..4) {
        let target: Vec<usize> = (0..split).collect();
        let continuum: Vec<usize> = (split..N).collect();
        let p = inner_region_projector(&target, &continuum, electrons, N).unwrap();
        if !p.is_empty() {
            assert_projector(&p);
        }
    }
}

#[test]
fn h2_projector_properties() {
    let model = common::h2_model();
    assert_projector(&model.projector);
}

#[test]
fn projected_energy_equals_energy_on_ansatz_states() {
    let model = common::h2_model();
    let p = &model.projector;
    let php = p.multiply(&model.hamiltonian).unwrap().multiply(p).unwrap();
    let k = model.layout.k();
    let cascade = build_cascade(k).unwrap();
    let order: Vec<usize> = (0..k).collect();
    let ansatz = build_ansatz(&model.layout, &cascade, &order).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let params: Vec<f64> = (0..cascade.n_params())
            .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let state = ansatz.state(i % k, &params).unwrap();
        let e = expectation(&state, &model.hamiltonian).unwrap().re;
        let ep = expectation(&state, &php).unwrap().re;
        worst = worst.max((e - ep).abs());
    }
    assert!(worst < 1e-10, "max |⟨H⟩ − ⟨PHP⟩| = {worst:e}");
}
