//! Run configuration, read from TOML. The schema is documented in the
//! README; paths inside the file resolve against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rmvqe::solver::{CostKind, FoldCadence, OptimiserConfig};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub integrals: PathBuf,
    /// Spin-orbitals kept, in qubit order. Defaults to all of them.
    pub active_spin_orbitals: Option<Vec<usize>>,
    #[serde(default)]
    pub zero_continuum_pairs: bool,
    #[serde(default)]
    pub seed: u64,
    /// Relative amplitude of the seeded integral perturbation; 0 keeps the
    /// integrals as read.
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default = "default_cost")]
    pub cost: String,
    pub output_dir: Option<PathBuf>,
    pub sector: SectorConfig,
    #[serde(default)]
    pub target: TargetConfig,
    pub layout: LayoutConfig,
    #[serde(default)]
    pub channels: Vec<ChannelConfig>,
    #[serde(default)]
    pub optimiser: OptimiserSection,
    pub grid: Option<GridConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_cost() -> String {
    "subspace".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    pub n_target_electrons: usize,
    /// Total `M_S` of the `N + 1`-electron states.
    pub spin_m: f64,
    /// Required irrep of the occupied-orbital product.
    pub irrep: Option<String>,
    /// Irrep label → code, multiplied by XOR. Defaults to D2h.
    pub irrep_codes: Option<BTreeMap<String, u8>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default)]
    pub blocks: Vec<BlockConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub name: String,
    /// Occupied target qubits per configuration.
    pub configs: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub target_qubits: Vec<usize>,
    #[serde(default)]
    pub continuum_qubits: Vec<usize>,
    pub eigenstate_qubits: Option<Vec<usize>>,
    pub branches: Vec<BranchConfig>,
    #[serde(default)]
    pub target_rotations: Vec<RotationConfig>,
    #[serde(default)]
    pub spin_couplings: Vec<SpinCouplingConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub name: String,
    pub occupied: Vec<usize>,
    pub seed: Option<usize>,
}

/// Replays a solved target block onto scattering branches, one branch per
/// block configuration.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    pub block: String,
    pub branches: Vec<String>,
}

/// Clebsch–Gordan mixing of two branches; `carrier` takes the cosine.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinCouplingConfig {
    pub carrier: String,
    pub partner: String,
    pub s: f64,
    pub m: f64,
    pub s_target: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub name: String,
    /// Branch whose trial state carries the channel.
    pub trial: String,
    pub continuum_qubit: usize,
    /// Continuum orbital value at the boundary, `u(a)`.
    pub u: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimiserSection {
    pub initial_trust_radius: f64,
    pub final_trust_radius: f64,
    pub max_evaluations: usize,
    pub energy_tolerance: f64,
    pub fold_cadence: String,
}

impl Default for OptimiserSection {
    fn default() -> Self {
        let d = OptimiserConfig::default();
        OptimiserSection {
            initial_trust_radius: d.initial_trust_radius,
            final_trust_radius: d.final_trust_radius,
            max_evaluations: d.max_evaluations,
            energy_tolerance: d.energy_tolerance,
            fold_cadence: "per-trial".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_guard")]
    pub pole_guard: f64,
}

fn default_points() -> usize {
    100
}

fn default_guard() -> f64 {
    rmvqe::rmatrix::DEFAULT_POLE_GUARD
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub cost: Option<String>,
    pub max_evals: Option<usize>,
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> CliResult<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            // Given on the command line, so relative to the working directory.
            self.output_dir = Some(std::path::absolute(out).unwrap_or_else(|_| out.clone()));
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(cost) = &o.cost {
            self.cost = cost.clone();
        }
        if let Some(n) = o.max_evals {
            self.optimiser.max_evaluations = n;
        }
        if let Some(t) = o.tol {
            self.optimiser.energy_tolerance = t;
        }
    }

    fn error(&self, message: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.base_dir.clone(),
            message: message.into(),
        }
    }

    pub fn integrals_path(&self) -> PathBuf {
        self.base_dir.join(&self.integrals)
    }

    pub fn output_dir(&self) -> PathBuf {
        match &self.output_dir {
            Some(p) => self.base_dir.join(p),
            None => self.base_dir.join("out"),
        }
    }

    pub fn cost_kind(&self) -> CliResult<CostKind> {
        Ok(self.cost.parse()?)
    }

    pub fn optimiser(&self) -> CliResult<OptimiserConfig> {
        let o = &self.optimiser;
        let fold_cadence = match o.fold_cadence.as_str() {
            "per-trial" => FoldCadence::PerTrial,
            "per-evaluation" => FoldCadence::PerEvaluation,
            other => return Err(self.error(format!("unknown fold_cadence `{other}`"))),
        };
        let cfg = OptimiserConfig {
            initial_trust_radius: o.initial_trust_radius,
            final_trust_radius: o.final_trust_radius,
            max_evaluations: o.max_evaluations,
            energy_tolerance: o.energy_tolerance,
            fold_cadence,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `2·M`, which must be an integer.
    pub fn twice_m(&self) -> CliResult<i32> {
        let t = 2.0 * self.sector.spin_m;
        if (t - t.round()).abs() > 1e-12 {
            return Err(self.error(format!("spin_m = {} is not a half-integer", self.sector.spin_m)));
        }
        Ok(t.round() as i32)
    }

    pub fn grid(&self) -> CliResult<rmvqe::rmatrix::EnergyGrid> {
        let g = self.grid.ok_or_else(|| self.error("no [grid] section"))?;
        Ok(rmvqe::rmatrix::EnergyGrid::new(g.start, g.stop, g.points, g.pole_guard)?)
    }

    pub fn boundary_values(&self) -> BTreeMap<String, f64> {
        self.channels
            .iter()
            .filter_map(|c| c.u.map(|u| (c.name.clone(), u)))
            .collect()
    }

    /// Checks that do not need the integrals.
    pub fn validate(&self) -> CliResult<()> {
        self.cost_kind()?;
        self.optimiser()?;
        self.twice_m()?;
        if !(0.0..1.0).contains(&self.perturbation) {
            return Err(self.error("perturbation must lie in [0, 1)"));
        }
        if self.grid.is_some() {
            self.grid()?;
        }
        let names: Vec<&str> = self.layout.branches.iter().map(|b| b.name.as_str()).collect();
        let known = |n: &str| names.contains(&n);
        for r in &self.layout.target_rotations {
            if !self.target.blocks.iter().any(|b| b.name == r.block) {
                return Err(self.error(format!("target rotation names unknown block `{}`", r.block)));
            }
            if let Some(b) = r.branches.iter().find(|b| !known(b)) {
                return Err(self.error(format!("target rotation names unknown branch `{b}`")));
            }
        }
        for c in &self.layout.spin_couplings {
            for b in [&c.carrier, &c.partner] {
                if !known(b) {
                    return Err(self.error(format!("spin coupling names unknown branch `{b}`")));
                }
            }
        }
        for c in &self.channels {
            if !known(&c.trial) {
                return Err(self.error(format!(
                    "channel `{}` names unknown branch `{}`",
                    c.name, c.trial
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.target.blocks.iter().find(|b| !seen.insert(&b.name)) {
            return Err(self.error(format!("target block `{}` is declared twice", dup.name)));
        }
        Ok(())
    }
}
