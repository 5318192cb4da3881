mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rmvqe::model::ScatteringModel;
use rmvqe::oracle::{dense_hamiltonian, exact_spectrum, fix_column_signs};
use rmvqe::rmatrix::{sweep, EnergyGrid, ScatteringSolution, DEFAULT_POLE_GUARD};
use rmvqe::solver::{CostKind, OptimiserConfig, Solution};

struct Run {
    model: ScatteringModel,
    solutions: Vec<Solution>,
}

fn run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let model = common::h2_model();
        let cfg = OptimiserConfig::default();
        let solutions = CostKind::ALL.iter().map(|k| model.solve(*k, &cfg).unwrap()).collect();
        Run { model, solutions }
    })
}

fn solution(kind: CostKind) -> &'static Solution {
    run().solutions.iter().find(|s| s.kind == kind).unwrap()
}

fn max_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn boundary_values() -> BTreeMap<String, f64> {
    [("G", 0.35), ("U", 0.42), ("D1", 0.28), ("D2", 0.31)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

#[test]
fn trial_basis_spans_the_symmetry_sector() {
    let model = &run().model;
    let basis = model.sector(&common::h2_filter(model)).unwrap();
    assert_eq!(basis.len(), 5);
    assert!(model.sector_leakage(&basis).unwrap() < 1e-10);
    let php = model
        .projector
        .multiply(&model.hamiltonian)
        .unwrap()
        .multiply(&model.projector)
        .unwrap();
    let sector = exact_spectrum(&dense_hamiltonian(&php, &basis).unwrap()).unwrap();
    let trial = model.oracle().unwrap();
    assert!(max_error(&sector.values, &trial.values) < 1e-12);
}

#[test]
fn every_strategy_recovers_the_spectrum() {
    let exact = run().model.oracle().unwrap();
    for s in &run().solutions {
        let err = max_error(&s.energies, &exact.values);
        assert!(err < 1e-7, "{}: max |ΔE| = {err:e}", s.kind);
        assert!(s.max_cross_overlap() < 1e-10, "{}", s.kind);
        assert!(s.warnings.is_empty(), "{}: {:?}", s.kind, s.warnings);
    }
}

#[test]
fn subspace_rotation_matches_oracle_vectors() {
    let exact = run().model.oracle().unwrap();
    let s = solution(CostKind::Subspace);
    let dv = (fix_column_signs(&s.rotation) - fix_column_signs(&exact.vectors)).amax();
    assert!(dv < 1e-5, "max |ΔU| = {dv:e}");
}

#[test]
fn subspace_is_cheapest() {
    let model = &run().model;
    let evals = |k| solution(k).evaluations;
    assert!(evals(CostKind::Subspace) < evals(CostKind::Folded));
    assert!(evals(CostKind::Folded) < evals(CostKind::SumOfVariances));
    assert!(model.measurement_budget(CostKind::Subspace) < model.measurement_budget(CostKind::Variance));
    assert_eq!(
        model.measurement_budget(CostKind::Variance),
        model.measurement_budget(CostKind::Folded)
    );
}

/// `R_ij(E)` straight from the oracle eigenvectors.
fn oracle_r(vectors: &DMatrix<f64>, energies: &[f64], rows: &[(usize, f64)], e: f64) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| {
        (0..energies.len())
            .map(|k| {
                let wi = rows[i].1 * vectors[(rows[i].0, k)];
                let wj = rows[j].1 * vectors[(rows[j].0, k)];
                0.5 * wi * wj / (energies[k] - e)
            })
            .sum()
    })
}

#[test]
fn r_matrix_matches_oracle_pipeline() {
    let model = &run().model;
    let exact = model.oracle().unwrap();
    let u = boundary_values();
    let rows: Vec<(usize, f64)> = model.layout.channels().iter().map(|c| (c.trial, u[&c.name])).collect();
    let s = solution(CostKind::Subspace);
    let sol = ScatteringSolution::new(s.energies.clone(), &s.rotation, &model.layout, &u).unwrap();
    assert!(sol.orthogonality_error() < 1e-12);
    let grid = EnergyGrid::new(-1.2, 1.5, 100, DEFAULT_POLE_GUARD).unwrap();
    let swept = sweep(&sol, &grid).unwrap();
    assert_eq!(swept.rows.len(), 100);
    let mut worst: f64 = 0.0;
    for (e, r) in &swept.rows {
        let want = oracle_r(&exact.vectors, &exact.values, &rows, *e);
        worst = worst.max((r - &want).amax());
        assert!((r - r.transpose()).amax() < 1e-12);
    }
    assert!(worst < 1e-6, "max |ΔR| = {worst:e}");
}

#[test]
fn residues_are_nonpositive() {
    let model = &run().model;
    let s = solution(CostKind::Subspace);
    let sol = ScatteringSolution::new(s.energies.clone(), &s.rotation, &model.layout, &boundary_values()).unwrap();
    let h = 1e-6;
    for (k, ek) in s.energies.iter().enumerate() {
        for i in 0..sol.boundary.nrows() {
            // (E − E_k) R_ii(E) on both sides tends to −w_ik²/2
            let below = -h * sol.r_matrix(ek - h, DEFAULT_POLE_GUARD).unwrap()[(i, i)];
            let above = h * sol.r_matrix(ek + h, DEFAULT_POLE_GUARD).unwrap()[(i, i)];
            let want = -0.5 * sol.boundary[(i, k)].powi(2);
            assert!(want <= 0.0);
            assert!((below - want).abs() < 1e-5 && (above - want).abs() < 1e-5);
        }
    }
}

#[test]
fn perturbed_fixtures_recover_their_spectra() {
    let cfg = OptimiserConfig::default();
    for seed in [1, 7] {
        let model = common::random_model(seed);
        let exact = model.oracle().unwrap();
        for kind in [CostKind::Subspace, CostKind::Folded, CostKind::SumOfVariances] {
            let s = model.solve(kind, &cfg).unwrap();
            let err = max_error(&s.energies, &exact.values);
            assert!(err < 1e-7, "seed {seed}, {kind}: {err:e}");
        }
    }
}
