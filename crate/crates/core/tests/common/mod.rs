#![allow(dead_code)]

use std::path::PathBuf;

use rmvqe::ansatz::{BranchSpec, Channel, RegisterLayout};
use rmvqe::fermion::{read_fcidump, FermionProblem, HamiltonianOptions, SpatialIntegrals};
use rmvqe::model::{solve_target_block, target_problem, BlockSolution, ScatteringModel, TargetBlock};
use rmvqe::oracle::{IrrepTable, SectorFilter};
use rmvqe::solver::OptimiserConfig;
use rmvqe::synthetic::perturb_integrals;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub const ACTIVE: [usize; 6] = [0, 1, 2, 3, 7, 5];

pub fn h2_integrals() -> SpatialIntegrals {
    read_fcidump(fixture("h2_scattering.fcidump")).unwrap()
}

pub fn h2_problem() -> FermionProblem {
    h2_integrals().to_problem().restrict(&ACTIVE).unwrap()
}

pub fn h2_blocks(problem: &FermionProblem) -> (BlockSolution, BlockSolution) {
    let target = target_problem(problem).unwrap();
    let cfg = OptimiserConfig::default();
    let ag = TargetBlock {
        name: "ag".into(),
        configs: vec![vec![0, 1], vec![2, 3]],
    };
    let b1u = TargetBlock {
        name: "b1u".into(),
        configs: vec![vec![0, 3], vec![1, 2]],
    };
    (
        solve_target_block(&target, &ag, &cfg).unwrap(),
        solve_target_block(&target, &b1u, &cfg).unwrap(),
    )
}

/// Branches B, G, U, D1, D2 on 4 target + 2 continuum qubits and one ancilla.
pub fn h2_layout(ag: &BlockSolution, b1u: &BlockSolution) -> RegisterLayout {
    let branches = vec![
        BranchSpec::seeded("B", &[0, 1, 3], 3),
        BranchSpec::seeded("G", &[0, 1, 4], 4),
        BranchSpec::seeded("U", &[2, 3, 4], 2),
        BranchSpec::seeded("D1", &[0, 3, 5], 5),
        BranchSpec::seeded("D2", &[1, 2, 5], 6),
    ];
    let mut layout =
        RegisterLayout::new(vec![0, 1, 2, 3], vec![4, 5], Some(vec![6]), 2, branches).unwrap();
    for g in ag.replay(&[1, 2]).unwrap().into_iter().chain(b1u.replay(&[3, 4]).unwrap()) {
        layout.add_fixed_rotation(g).unwrap();
    }
    for (name, trial, q) in [("G", 1, 4), ("U", 2, 4), ("D1", 3, 5), ("D2", 4, 5)] {
        layout
            .add_channel(Channel {
                name: name.into(),
                trial,
                continuum_qubit: q,
            })
            .unwrap();
    }
    layout
}

pub fn h2_model() -> ScatteringModel {
    model_for(h2_problem())
}

/// The H2 layout on integrals scaled by seeded factors in [0.85, 1.15].
pub fn random_model(seed: u64) -> ScatteringModel {
    let ints = perturb_integrals(&h2_integrals(), seed, 0.15).unwrap();
    model_for(ints.to_problem().restrict(&ACTIVE).unwrap())
}

pub fn model_for(problem: FermionProblem) -> ScatteringModel {
    let (ag, b1u) = h2_blocks(&problem);
    let layout = h2_layout(&ag, &b1u);
    ScatteringModel::new(
        problem,
        layout,
        HamiltonianOptions {
            zero_continuum_pairs: true,
        },
    )
    .unwrap()
}

pub fn h2_filter(model: &ScatteringModel) -> SectorFilter {
    let table = IrrepTable::d2h();
    SectorFilter {
        twice_sz: Some(-1),
        twice_ms: model.twice_ms(),
        irrep: Some(table.code("b1u").unwrap()),
        irrep_codes: model
            .problem
            .orbitals
            .iter()
            .map(|o| table.code(&o.irrep).unwrap())
            .collect(),
    }
}
