//! Glue between integrals, register layout and cost operators.

use nalgebra::DMatrix;

use crate::ansatz::{build_cascade, replay_rotation, BranchSpec, FixedGivens, RegisterLayout};
use crate::error::{Error, Result};
use crate::fermion::{build_second_quantised, qubit_hamiltonian, FermionProblem, HamiltonianOptions, Register};
use crate::oracle::{dense_hamiltonian, enumerate_sector, exact_spectrum, sector_leakage, Eigen, SectorBasis, SectorFilter};
use crate::pauli::PauliSum;
use crate::projection::inner_region_projector;
use crate::solver::{measurement_budget, solve, CostKind, CostOperators, OptimiserConfig, Solution};

/// Everything needed to run a cost strategy on one `(N+1)`-electron layout.
#[derive(Clone, Debug)]
pub struct ScatteringModel {
    pub problem: FermionProblem,
    pub layout: RegisterLayout,
    /// Qubit Hamiltonian over the full register, ancillas included.
    pub hamiltonian: PauliSum,
    pub projector: PauliSum,
    pub ops: CostOperators,
}

impl ScatteringModel {
    /// `problem` must already be restricted to the active spin-orbitals,
    /// with mode `q` living on qubit `q`.
    pub fn new(problem: FermionProblem, layout: RegisterLayout, opts: HamiltonianOptions) -> Result<Self> {
        if problem.n_modes() != layout.n_system_qubits() {
            return Err(Error::Layout(format!(
                "{} active spin-orbitals but {} target + continuum qubits",
                problem.n_modes(),
                layout.n_system_qubits()
            )));
        }
        for (qubits, register) in [
            (layout.target_qubits(), Register::Target),
            (layout.continuum_qubits(), Register::Continuum),
        ] {
            if let Some(q) = qubits.iter().find(|q| problem.orbitals[**q].register != register) {
                return Err(Error::Layout(format!(
                    "qubit {q} is placed in the {register:?} register but its orbital is not"
                )));
            }
        }
        if problem.n_target_electrons != layout.n_target_electrons() {
            return Err(Error::Layout(format!(
                "integrals describe {} target electrons, layout {}",
                problem.n_target_electrons,
                layout.n_target_electrons()
            )));
        }
        let n = layout.n_qubits();
        let op = build_second_quantised(&problem, opts);
        let hamiltonian = qubit_hamiltonian(&op, n)?;
        let projector = inner_region_projector(
            layout.target_qubits(),
            layout.continuum_qubits(),
            layout.n_target_electrons(),
            n,
        )?;
        let ops = CostOperators::new(
            hamiltonian.clone(),
            Some(&projector),
            layout.eigenstate_qubits().to_vec(),
        )?;
        Ok(ScatteringModel {
            problem,
            layout,
            hamiltonian,
            projector,
            ops,
        })
    }

    pub fn twice_ms(&self) -> Vec<i32> {
        self.problem.orbitals.iter().map(|o| o.spin.twice_ms()).collect()
    }

    pub fn solve(&self, kind: CostKind, cfg: &OptimiserConfig) -> Result<Solution> {
        solve(kind, &self.ops, &self.layout, cfg)
    }

    pub fn measurement_budget(&self, kind: CostKind) -> usize {
        measurement_budget(kind, &self.ops)
    }

    /// The symmetry sector selected by `filter`, which must coincide with
    /// the set of branch occupations.
    pub fn sector(&self, filter: &SectorFilter) -> Result<SectorBasis> {
        let basis = enumerate_sector(
            self.layout.target_qubits(),
            self.layout.continuum_qubits(),
            self.layout.n_target_electrons(),
            filter,
        )?;
        let mut configs: Vec<u64> = (0..self.layout.k()).map(|i| self.layout.config(i)).collect();
        configs.sort_unstable();
        if configs != basis.bitstrings {
            return Err(Error::Layout(format!(
                "branches span {} configurations but the symmetry sector has {}; \
                 the layout must list exactly the sector",
                configs.len(),
                basis.len()
            )));
        }
        Ok(basis)
    }

    /// Largest off-sector amplitude of `PHP` applied to a sector string.
    pub fn sector_leakage(&self, basis: &SectorBasis) -> Result<f64> {
        let php = self.projector.multiply(&self.hamiltonian)?.multiply(&self.projector)?;
        Ok(sector_leakage(&php, basis))
    }

    /// `H` in the trial basis: `⟨trial_a|H|trial_b⟩` with the fixed
    /// rotations folded in.
    pub fn trial_matrix(&self) -> Result<DMatrix<f64>> {
        let k = self.layout.k();
        let configs: Vec<u64> = (0..k).map(|i| self.layout.config(i)).collect();
        let basis = SectorBasis::new(configs.clone());
        let sorted = dense_hamiltonian(&self.hamiltonian, &basis)?;
        let pos: Vec<usize> = configs
            .iter()
            .map(|c| basis.index_of(*c).expect("config is in its own basis"))
            .collect();
        let h_cfg = DMatrix::from_fn(k, k, |a, b| sorted[(pos[a], pos[b])]);
        let f = self.layout.fixed_matrix();
        Ok(f.transpose() * h_cfg * f)
    }

    /// Exact eigenpairs in the trial basis.
    pub fn oracle(&self) -> Result<Eigen> {
        exact_spectrum(&self.trial_matrix()?)
    }
}

/// A symmetry block of the `N`-electron target problem.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetBlock {
    pub name: String,
    /// Occupied target qubits of each configuration.
    pub configs: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct BlockSolution {
    pub name: String,
    pub configs: Vec<Vec<usize>>,
    pub layout: RegisterLayout,
    pub solution: Solution,
}

impl BlockSolution {
    /// Fixed rotations that rebuild this block's eigenvectors on the
    /// scattering branches `branch_map[config]`.
    pub fn replay(&self, branch_map: &[usize]) -> Result<Vec<FixedGivens>> {
        let k = self.configs.len();
        if branch_map.len() != k {
            return Err(Error::Layout(format!(
                "block `{}` has {k} configurations but {} branches were mapped",
                self.name,
                branch_map.len()
            )));
        }
        if k == 1 {
            return Ok(Vec::new());
        }
        replay_rotation(
            &build_cascade(k)?,
            &self.solution.params[0],
            &self.solution.order,
            branch_map,
        )
    }

    /// Ground-state CI vector of the block, one amplitude per configuration.
    pub fn ground_ci(&self) -> Vec<f64> {
        self.solution.rotation.column(0).iter().copied().collect()
    }
}

/// Target-only Hamiltonian: the problem restricted to its target modes.
pub fn target_problem(problem: &FermionProblem) -> Result<FermionProblem> {
    problem.restrict(&problem.modes_in(Register::Target))
}

/// Solves one target block by subspace expectation minimisation. No
/// projection is needed: every configuration already holds `N` electrons.
///
/// `target` is the full target-only problem; block configurations index its
/// modes.
pub fn solve_target_block(
    target: &FermionProblem,
    block: &TargetBlock,
    cfg: &OptimiserConfig,
) -> Result<BlockSolution> {
    if let Some(o) = target.orbitals.iter().find(|o| o.register != Register::Target) {
        return Err(Error::Layout(format!(
            "target solve given continuum orbital {}",
            o.index
        )));
    }
    let branches = block
        .configs
        .iter()
        .enumerate()
        .map(|(i, occ)| BranchSpec::new(&format!("{}{i}", block.name), occ))
        .collect();
    let layout = RegisterLayout::target_block(
        (0..target.n_modes()).collect(),
        None,
        target.n_target_electrons,
        branches,
    )?;
    let op = build_second_quantised(target, HamiltonianOptions::default());
    let h = qubit_hamiltonian(&op, layout.n_qubits())?;
    let ops = CostOperators::new(h, None, layout.eigenstate_qubits().to_vec())?;
    let solution = solve(CostKind::Subspace, &ops, &layout, cfg)?;
    Ok(BlockSolution {
        name: block.name.clone(),
        configs: block.configs.clone(),
        layout,
        solution,
    })
}
