//! Integrals → target solve → scattering model.

use std::path::{Path, PathBuf};

use rmvqe::ansatz::{build_cascade, clebsch_gordan_angle, replay_rotation, BranchSpec, Channel, FixedGivens, RegisterLayout};
use rmvqe::fermion::{read_fcidump, FermionProblem, HamiltonianOptions, Register, SpatialIntegrals};
use rmvqe::model::{solve_target_block, target_problem, ScatteringModel, TargetBlock};
use rmvqe::oracle::{IrrepTable, SectorBasis, SectorFilter};
use rmvqe::solver::{ConvergenceTrace, OptimiserConfig};
use rmvqe::synthetic::perturb_integrals;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Rounds to the 12 significant digits used for every emitted energy.
pub fn sig12(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn sig12_all(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(sig12).collect()
}

pub fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// A validated config with its integrals loaded.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: RunConfig,
    pub integrals: SpatialIntegrals,
    /// Restricted to the active spin-orbitals; mode `q` is qubit `q`.
    pub problem: FermionProblem,
}

pub fn prepare(config: RunConfig) -> CliResult<Prepared> {
    config.validate()?;
    let path = config.integrals_path();
    let mut integrals = read_fcidump(&path).map_err(|e| match e {
        rmvqe::Error::Io(source) => CliError::Read {
            path: path.clone(),
            source,
        },
        other => CliError::Document {
            path: path.clone(),
            message: other.to_string(),
        },
    })?;
    if config.perturbation > 0.0 {
        integrals = perturb_integrals(&integrals, config.seed, config.perturbation)?;
    }
    if integrals.nelec != config.sector.n_target_electrons {
        return Err(CliError::Config {
            path: config.base_dir.clone(),
            message: format!(
                "sector.n_target_electrons = {} but the integrals declare NELEC = {}",
                config.sector.n_target_electrons, integrals.nelec
            ),
        });
    }
    let full = integrals.to_problem();
    let problem = match &config.active_spin_orbitals {
        Some(active) => full.restrict(active)?,
        None => full,
    };
    Ok(Prepared {
        config,
        integrals,
        problem,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub name: String,
    pub configs: Vec<Vec<usize>>,
    pub energies: Vec<f64>,
    pub order: Vec<usize>,
    pub params: Vec<f64>,
    /// Row `j` = configuration `j`, column `i` = eigenstate `i`.
    pub rotation: Vec<Vec<f64>>,
    pub ground_ci: Vec<f64>,
    /// For two-configuration blocks, `atan2(c₁, c₀)` of the ground state.
    pub ci_angle: Option<f64>,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub integrals: PathBuf,
    pub seed: u64,
    pub perturbation: f64,
    pub blocks: Vec<BlockRecord>,
}

impl TargetReport {
    /// Whether this report was produced from the same integrals and blocks.
    pub fn matches(&self, prep: &Prepared) -> bool {
        let cfg = &prep.config;
        self.integrals == cfg.integrals
            && self.seed == cfg.seed
            && self.perturbation == cfg.perturbation
            && self.blocks.len() == cfg.target.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&cfg.target.blocks)
                .all(|(r, b)| r.name == b.name && r.configs == b.configs)
    }

    pub fn block(&self, name: &str) -> Option<&BlockRecord> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Document {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Solves every target block; traces come back even when a block fails so
/// the caller can write them.
pub fn solve_target(
    prep: &Prepared,
    cfg: &OptimiserConfig,
) -> (CliResult<TargetReport>, Vec<(String, ConvergenceTrace)>) {
    let mut traces = Vec::new();
    let result = (|| {
        let target = target_problem(&prep.problem)?;
        let modes = prep.problem.modes_in(Register::Target);
        let mut blocks = Vec::new();
        for b in &prep.config.target.blocks {
            let configs = b
                .configs
                .iter()
                .map(|occ| {
                    occ.iter()
                        .map(|q| {
                            modes.iter().position(|m| m == q).ok_or_else(|| CliError::Config {
                                path: prep.config.base_dir.clone(),
                                message: format!("block `{}` occupies non-target qubit {q}", b.name),
                            })
                        })
                        .collect::<CliResult<Vec<_>>>()
                })
                .collect::<CliResult<Vec<_>>>()?;
            let block = TargetBlock {
                name: b.name.clone(),
                configs,
            };
            let solved = match solve_target_block(&target, &block, cfg) {
                Ok(s) => s,
                Err(rmvqe::Error::Convergence { message, trace }) => {
                    traces.push((b.name.clone(), (*trace).clone()));
                    return Err(rmvqe::Error::Convergence {
                        message: format!("target block `{}`: {message}", b.name),
                        trace,
                    }
                    .into());
                }
                Err(e) => return Err(e.into()),
            };
            let sol = &solved.solution;
            traces.push((b.name.clone(), sol.trace.clone()));
            let ground_ci = solved.ground_ci();
            blocks.push(BlockRecord {
                name: b.name.clone(),
                configs: b.configs.clone(),
                energies: sig12_all(&sol.energies),
                order: sol.order.clone(),
                params: sol.params[0].clone(),
                rotation: rows(&sol.rotation),
                ci_angle: (ground_ci.len() == 2).then(|| ground_ci[1].atan2(ground_ci[0])),
                ground_ci,
                evaluations: sol.evaluations,
            });
        }
        Ok(TargetReport {
            integrals: prep.config.integrals.clone(),
            seed: prep.config.seed,
            perturbation: prep.config.perturbation,
            blocks,
        })
    })();
    (result, traces)
}

fn branch_index(layout: &RegisterLayout, name: &str) -> CliResult<usize> {
    layout.branch_index(name).ok_or_else(|| {
        CliError::Core(rmvqe::Error::Layout(format!("unknown branch `{name}`")))
    })
}

/// Builds the register layout and cost operators for the scattering solve.
pub fn build_model(prep: &Prepared, target: &TargetReport) -> CliResult<ScatteringModel> {
    let cfg = &prep.config;
    let lc = &cfg.layout;
    let branches = lc
        .branches
        .iter()
        .map(|b| BranchSpec {
            name: b.name.clone(),
            occupied: b.occupied.clone(),
            seed: b.seed,
        })
        .collect();
    let mut layout = RegisterLayout::new(
        lc.target_qubits.clone(),
        lc.continuum_qubits.clone(),
        lc.eigenstate_qubits.clone(),
        cfg.sector.n_target_electrons,
        branches,
    )?;
    for r in &lc.target_rotations {
        let block = target.block(&r.block).ok_or_else(|| CliError::Config {
            path: cfg.base_dir.clone(),
            message: format!("target report has no block `{}`", r.block),
        })?;
        let k = block.configs.len();
        if r.branches.len() != k {
            return Err(CliError::Config {
                path: cfg.base_dir.clone(),
                message: format!(
                    "rotation for block `{}` maps {} branches onto {k} configurations",
                    r.block,
                    r.branches.len()
                ),
            });
        }
        if k < 2 {
            continue;
        }
        let map = r
            .branches
            .iter()
            .map(|n| branch_index(&layout, n))
            .collect::<CliResult<Vec<_>>>()?;
        for g in replay_rotation(&build_cascade(k)?, &block.params, &block.order, &map)? {
            layout.add_fixed_rotation(g)?;
        }
    }
    for c in &lc.spin_couplings {
        let angle = clebsch_gordan_angle(c.s, c.m, c.s_target)?;
        layout.add_fixed_rotation(FixedGivens {
            carrier: branch_index(&layout, &c.carrier)?,
            partner: branch_index(&layout, &c.partner)?,
            angle,
        })?;
    }
    for c in &cfg.channels {
        let trial = branch_index(&layout, &c.trial)?;
        layout.add_channel(Channel {
            name: c.name.clone(),
            trial,
            continuum_qubit: c.continuum_qubit,
        })?;
    }
    let twice_ms: Vec<i32> = prep.problem.orbitals.iter().map(|o| o.spin.twice_ms()).collect();
    layout.check_spin(&twice_ms, cfg.twice_m()?)?;
    Ok(ScatteringModel::new(
        prep.problem.clone(),
        layout,
        HamiltonianOptions {
            zero_continuum_pairs: cfg.zero_continuum_pairs,
        },
    )?)
}

pub fn sector_filter(prep: &Prepared) -> CliResult<SectorFilter> {
    let s = &prep.config.sector;
    let table = match &s.irrep_codes {
        Some(codes) => IrrepTable::from_codes(codes.clone()),
        None => IrrepTable::d2h(),
    };
    let (irrep, irrep_codes) = match &s.irrep {
        Some(label) => (
            Some(table.code(label)?),
            prep.problem
                .orbitals
                .iter()
                .map(|o| table.code(&o.irrep))
                .collect::<rmvqe::Result<Vec<_>>>()?,
        ),
        None => (None, Vec::new()),
    };
    Ok(SectorFilter {
        twice_sz: Some(prep.config.twice_m()?),
        twice_ms: prep.problem.orbitals.iter().map(|o| o.spin.twice_ms()).collect(),
        irrep,
        irrep_codes,
    })
}

/// Sector basis of the model, checked against the branches and for
/// closure under `PHP`.
pub fn checked_sector(prep: &Prepared, model: &ScatteringModel) -> CliResult<(SectorBasis, f64)> {
    let basis = model.sector(&sector_filter(prep)?)?;
    let leakage = model.sector_leakage(&basis)?;
    if leakage > 1e-10 {
        return Err(CliError::Core(rmvqe::Error::Layout(format!(
            "PHP leaks {leakage:.3e} out of the symmetry sector"
        ))));
    }
    Ok((basis, leakage))
}

/// Loads `<out>/target.json` if it fits this run, else solves and writes it.
pub fn target_for(prep: &Prepared, cfg: &OptimiserConfig, out: &Path) -> CliResult<TargetReport> {
    let path = out.join("target.json");
    if path.exists() {
        let report = TargetReport::read(&path)?;
        if report.matches(prep) {
            return Ok(report);
        }
        eprintln!(
            "{}",
            serde_json::json!({"warning": format!("{} was produced by a different run; re-solving the target", path.display())})
        );
    }
    let (report, traces) = solve_target(prep, cfg);
    for (name, trace) in &traces {
        write_text(&out.join(format!("trace_target_{name}.csv")), &trace.to_csv())?;
    }
    let report = report?;
    write_json(&path, &report)?;
    Ok(report)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("result documents serialise");
    text.push('\n');
    write_text(path, &text)
}
