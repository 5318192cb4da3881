//! Register layout and the one-hot Givens ansatz.
//!
//! Every trial state is a *branch*: one occupation pattern on the target and
//! continuum registers plus a seed qubit. Preparing trial `i` sets the seed
//! of branch `i`; the Givens cascade then spreads the single excitation over
//! the seeds, fixed rotations (spin coupling, target CI) mix it further, and
//! a CNOT fan from each seed writes out the branch's occupation pattern.
//! A seed is normally one of the branch's own occupied qubits. When no
//! consistent choice exists, an eigenstate (ancilla) qubit takes the role and
//! stays set, which is what the coherent-summation readout accounts for.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::statevector::{AngleSlot, Gate, ParamCircuit, Statevector, MAX_QUBITS};

/// Fixed spin-coupling data for one two-branch mixing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinCoupling {
    pub s: f64,
    pub m: f64,
    pub s_target: f64,
    pub zeta: f64,
}

impl SpinCoupling {
    pub fn new(s: f64, m: f64, s_target: f64) -> Result<Self> {
        Ok(SpinCoupling {
            s,
            m,
            s_target,
            zeta: clebsch_gordan_angle(s, m, s_target)?,
        })
    }
}

fn is_half_integer_multiple(x: f64) -> bool {
    (2.0 * x - (2.0 * x).round()).abs() < 1e-12
}

/// Half-angle ζ of the two-term coupling
/// `|S,M⟩ = cos ζ |S_t, M−½⟩|↑⟩ + sin ζ |S_t, M+½⟩|↓⟩`.
///
/// `ζ = ½ arccos(M/S)` for `S_t = S − ½` and `π/2 + ½ arccos(M/(S+1))` for
/// `S_t = S + ½`, which reproduces Condon–Shortley signs.
pub fn clebsch_gordan_angle(s: f64, m: f64, s_target: f64) -> Result<f64> {
    let bad = |why: &str| Err(Error::Domain(format!("(S={s}, M={m}, S_t={s_target}): {why}")));
    if ![s, m, s_target].iter().all(|v| v.is_finite() && is_half_integer_multiple(*v)) {
        return bad("quantum numbers must be multiples of 1/2");
    }
    if s < 0.0 || s_target < 0.0 {
        return bad("spins must be non-negative");
    }
    if m.abs() > s + 1e-12 || !is_half_integer_multiple(s - m) || (s - m).round() != s - m {
        return bad("M must lie in -S..=S in integer steps");
    }
    if (s_target - (s - 0.5)).abs() < 1e-12 {
        if s <= 0.0 {
            return bad("S_t = S - 1/2 needs S > 0");
        }
        Ok(0.5 * (m / s).clamp(-1.0, 1.0).acos())
    } else if (s_target - (s + 0.5)).abs() < 1e-12 {
        Ok(FRAC_PI_2 + 0.5 * (m / (s + 1.0)).clamp(-1.0, 1.0).acos())
    } else {
        bad("S_t must be S - 1/2 or S + 1/2")
    }
}

/// Ordered Givens pairs. Pair `(i, j)` rotates trial position `i` into `j`:
/// `e_i ↦ cos θ e_i − sin θ e_j`, `e_j ↦ cos θ e_j + sin θ e_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeSpec {
    pub k: usize,
    pub pairs: Vec<(usize, usize)>,
    pub names: Vec<String>,
}

impl CascadeSpec {
    pub fn n_params(&self) -> usize {
        self.pairs.len()
    }

    /// Parameter indices of the block that starts at position `r`.
    pub fn round(&self, r: usize) -> Vec<usize> {
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.0 == r)
            .map(|(i, _)| i)
            .collect()
    }
}

fn pair_name(i: usize, j: usize) -> String {
    format!("theta_{i}_{j}")
}

/// Full SO(k) cascade, applied highest block first:
/// `(k−2,k−1)`, then `(k−3,k−2),(k−3,k−1)`, …, then `(0,1)…(0,k−1)`.
pub fn build_cascade(k: usize) -> Result<CascadeSpec> {
    if k < 2 {
        return Err(Error::Domain(format!("a cascade needs k >= 2, got {k}")));
    }
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in (0..k - 1).rev() {
        for j in i + 1..k {
            pairs.push((i, j));
        }
    }
    let names = pairs.iter().map(|(i, j)| pair_name(*i, *j)).collect();
    Ok(CascadeSpec { k, pairs, names })
}

/// `k − 1` rotations from position `i` to every other position; enough to
/// reach any unit vector from `e_i`.
pub fn build_star(k: usize, i: usize) -> Result<CascadeSpec> {
    if k < 2 || i >= k {
        return Err(Error::Domain(format!("star for trial {i} of k={k}")));
    }
    let pairs: Vec<(usize, usize)> = (0..k).filter(|j| *j != i).map(|j| (i, j)).collect();
    let names = pairs.iter().map(|(i, j)| pair_name(*i, *j)).collect();
    Ok(CascadeSpec { k, pairs, names })
}

/// k×k Givens factor of pair `(i, j)`.
pub fn givens_matrix(k: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut g = DMatrix::identity(k, k);
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(j, i)] = -s;
    g[(i, j)] = s;
    g
}

/// Product of the cascade's Givens factors, last gate leftmost. Column `i`
/// is the image of trial position `i`.
pub fn extract_rotation_matrix(cascade: &CascadeSpec, params: &[f64]) -> Result<DMatrix<f64>> {
    if params.len() != cascade.n_params() {
        return Err(Error::Parameter(format!(
            "cascade has {} parameters, got {}",
            cascade.n_params(),
            params.len()
        )));
    }
    let mut u = DMatrix::identity(cascade.k, cascade.k);
    for (&(i, j), &t) in cascade.pairs.iter().zip(params) {
        u = givens_matrix(cascade.k, i, j, t) * u;
    }
    Ok(u)
}

/// One trial branch as declared by the user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchSpec {
    pub name: String,
    /// Occupied target/continuum qubits.
    pub occupied: Vec<usize>,
    /// Seed qubit; chosen automatically when `None`.
    pub seed: Option<usize>,
}

impl BranchSpec {
    pub fn new(name: &str, occupied: &[usize]) -> Self {
        BranchSpec {
            name: name.to_string(),
            occupied: occupied.to_vec(),
            seed: None,
        }
    }

    pub fn seeded(name: &str, occupied: &[usize], seed: usize) -> Self {
        BranchSpec {
            seed: Some(seed),
            ..BranchSpec::new(name, occupied)
        }
    }
}

/// Fixed-angle Givens between two branches:
/// `carrier ↦ cos φ·carrier + sin φ·partner`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedGivens {
    pub carrier: usize,
    pub partner: usize,
    pub angle: f64,
}

/// An open scattering channel: trial `trial` carries one continuum electron
/// on `continuum_qubit`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    pub name: String,
    pub trial: usize,
    pub continuum_qubit: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegisterLayout {
    target: Vec<usize>,
    continuum: Vec<usize>,
    eigenstate: Vec<usize>,
    n_target_electrons: usize,
    names: Vec<String>,
    configs: Vec<u64>,
    seeds: Vec<usize>,
    imprint_order: Vec<usize>,
    fixed: Vec<FixedGivens>,
    channels: Vec<Channel>,
}

fn mask_of(qubits: &[usize]) -> u64 {
    qubits.iter().fold(0, |m, q| m | (1 << q))
}

fn bits_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|q| mask >> q & 1 == 1).collect()
}

impl RegisterLayout {
    /// Validates the registers and branches and settles every seed.
    ///
    /// With `eigenstate = Some(qubits)` exactly those qubits are available as
    /// ancilla seeds and each must end up used. With `None`, ancillas are
    /// appended above the highest system qubit as needed.
    pub fn new(
        target: Vec<usize>,
        continuum: Vec<usize>,
        eigenstate: Option<Vec<usize>>,
        n_target_electrons: usize,
        branches: Vec<BranchSpec>,
    ) -> Result<Self> {
        Self::build(target, continuum, eigenstate, n_target_electrons, branches, false)
    }

    /// A layout over the target register alone whose branches each hold
    /// exactly `n_electrons`; used to solve target symmetry blocks.
    pub fn target_block(
        target: Vec<usize>,
        eigenstate: Option<Vec<usize>>,
        n_electrons: usize,
        branches: Vec<BranchSpec>,
    ) -> Result<Self> {
        Self::build(target, Vec::new(), eigenstate, n_electrons, branches, true)
    }

    fn build(
        target: Vec<usize>,
        continuum: Vec<usize>,
        eigenstate: Option<Vec<usize>>,
        n_target_electrons: usize,
        branches: Vec<BranchSpec>,
        bound_only: bool,
    ) -> Result<Self> {
        let t_mask = mask_of(&target);
        let c_mask = mask_of(&continuum);
        if target.is_empty() {
            return Err(Error::Layout("target register is empty".into()));
        }
        let system: Vec<usize> = target.iter().chain(&continuum).copied().collect();
        let declared = eigenstate.clone().unwrap_or_default();
        let all: Vec<usize> = system.iter().chain(&declared).copied().collect();
        let unique: BTreeSet<usize> = all.iter().copied().collect();
        if unique.len() != all.len() {
            return Err(Error::Layout("registers overlap or repeat a qubit".into()));
        }
        if unique.iter().copied().ne(0..all.len()) {
            return Err(Error::Layout(format!(
                "registers must cover qubits 0..{} exactly",
                all.len()
            )));
        }
        if branches.is_empty() {
            return Err(Error::Layout("layout has no trial branches".into()));
        }
        let n = n_target_electrons;
        let mut configs = Vec::with_capacity(branches.len());
        for b in &branches {
            let cfg = mask_of(&b.occupied);
            if cfg.count_ones() as usize != b.occupied.len() {
                return Err(Error::Layout(format!("branch `{}` repeats a qubit", b.name)));
            }
            if cfg & !(t_mask | c_mask) != 0 {
                return Err(Error::Layout(format!(
                    "branch `{}` occupies a qubit outside the target and continuum registers",
                    b.name
                )));
            }
            let (nt, nc) = ((cfg & t_mask).count_ones() as usize, (cfg & c_mask).count_ones());
            if bound_only && nt != n {
                return Err(Error::Layout(format!(
                    "branch `{}` holds {nt} electrons; the block needs {n}",
                    b.name
                )));
            }
            if !bound_only && !((nt == n + 1 && nc == 0) || (nt == n && nc == 1)) {
                return Err(Error::Layout(format!(
                    "branch `{}` holds {nt} target and {nc} continuum electrons; \
                     the projected space allows ({}, 0) or ({n}, 1)",
                    b.name,
                    n + 1
                )));
            }
            if configs.contains(&cfg) {
                return Err(Error::Layout(format!(
                    "branch `{}` repeats another branch's occupation",
                    b.name
                )));
            }
            configs.push(cfg);
        }
        let fixed_seeds: Vec<Option<usize>> = branches.iter().map(|b| b.seed).collect();
        for (i, s) in fixed_seeds.iter().enumerate() {
            if let Some(s) = s {
                if configs[i] >> s & 1 == 0 && !declared.contains(s) {
                    return Err(Error::Layout(format!(
                        "seed {s} of branch `{}` is neither occupied by it nor an eigenstate qubit",
                        branches[i].name
                    )));
                }
            }
        }
        let first_free = all.len();
        let (seeds, order) = assign_seeds(&configs, &fixed_seeds, eigenstate.as_deref(), first_free)
            .ok_or_else(|| {
                Error::Layout(
                    "no seed assignment gives a consistent imprint order; \
                     declare more eigenstate qubits"
                        .into(),
                )
            })?;
        let eigenstate_qubits = match eigenstate {
            Some(list) => {
                if let Some(q) = list.iter().find(|q| !seeds.contains(q)) {
                    return Err(Error::Layout(format!("eigenstate qubit {q} seeds no branch")));
                }
                list
            }
            None => (first_free..first_free + seeds.iter().filter(|s| **s >= first_free).count())
                .collect(),
        };
        if first_free + eigenstate_qubits.len() - declared.len() > MAX_QUBITS {
            return Err(Error::Layout(format!("layout exceeds {MAX_QUBITS} qubits")));
        }
        Ok(RegisterLayout {
            target,
            continuum,
            eigenstate: eigenstate_qubits,
            n_target_electrons,
            names: branches.into_iter().map(|b| b.name).collect(),
            configs,
            seeds,
            imprint_order: order,
            fixed: Vec::new(),
            channels: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.target.len() + self.continuum.len() + self.eigenstate.len()
    }

    pub fn n_system_qubits(&self) -> usize {
        self.target.len() + self.continuum.len()
    }

    /// Number of trial states.
    pub fn k(&self) -> usize {
        self.configs.len()
    }

    pub fn target_qubits(&self) -> &[usize] {
        &self.target
    }

    pub fn continuum_qubits(&self) -> &[usize] {
        &self.continuum
    }

    pub fn eigenstate_qubits(&self) -> &[usize] {
        &self.eigenstate
    }

    pub fn n_target_electrons(&self) -> usize {
        self.n_target_electrons
    }

    pub fn branch_names(&self) -> &[String] {
        &self.names
    }

    pub fn branch_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Occupation mask of branch `i` on the system qubits.
    pub fn config(&self, i: usize) -> u64 {
        self.configs[i]
    }

    pub fn occupied(&self, i: usize) -> Vec<usize> {
        bits_of(self.configs[i])
    }

    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    pub fn imprint_order(&self) -> &[usize] {
        &self.imprint_order
    }

    pub fn fixed_rotations(&self) -> &[FixedGivens] {
        &self.fixed
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Full basis index of branch `i` once imprinted (ancilla seed included).
    pub fn branch_state(&self, i: usize) -> usize {
        (self.configs[i] | (1 << self.seeds[i])) as usize
    }

    pub fn add_fixed_rotation(&mut self, g: FixedGivens) -> Result<()> {
        let k = self.k();
        if g.carrier >= k || g.partner >= k || g.carrier == g.partner {
            return Err(Error::Layout(format!(
                "fixed rotation between branches {} and {} is invalid",
                g.carrier, g.partner
            )));
        }
        self.fixed.push(g);
        Ok(())
    }

    /// k×k matrix of the fixed rotations; column `j` is trial `j` expressed
    /// over branch occupations.
    pub fn fixed_matrix(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut f = DMatrix::identity(k, k);
        for g in &self.fixed {
            f = givens_matrix(k, g.partner, g.carrier, g.angle) * f;
        }
        f
    }

    /// Declares an open channel. The trial must carry exactly one continuum
    /// electron on `continuum_qubit` in every branch it mixes into.
    pub fn add_channel(&mut self, channel: Channel) -> Result<()> {
        if channel.trial >= self.k() {
            return Err(Error::Layout(format!(
                "channel `{}` names trial {} of {}",
                channel.name,
                channel.trial,
                self.k()
            )));
        }
        if !self.continuum.contains(&channel.continuum_qubit) {
            return Err(Error::Layout(format!(
                "channel `{}` names qubit {} outside the continuum register",
                channel.name, channel.continuum_qubit
            )));
        }
        if self.channels.iter().any(|c| c.trial == channel.trial) {
            return Err(Error::Layout(format!(
                "trial {} already belongs to a channel",
                channel.trial
            )));
        }
        self.channels.push(channel);
        Ok(())
    }

    /// Checks that every channel trial couples its target part to exactly
    /// one continuum orbital (close coupling).
    pub fn check_close_coupling(&self) -> Result<()> {
        let f = self.fixed_matrix();
        let c_mask = mask_of(&self.continuum);
        for ch in &self.channels {
            let want = 1u64 << ch.continuum_qubit;
            for b in 0..self.k() {
                if f[(b, ch.trial)].abs() > 1e-14 && self.configs[b] & c_mask != want {
                    return Err(Error::UnsupportedLayout(format!(
                        "channel `{}` mixes branch `{}`, which does not hold its continuum \
                         electron on qubit {}",
                        ch.name, self.names[b], ch.continuum_qubit
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that every branch has total spin projection `twice_m / 2`,
    /// given `2·m_s` per system qubit.
    pub fn check_spin(&self, twice_ms: &[i32], twice_m: i32) -> Result<()> {
        for (i, cfg) in self.configs.iter().enumerate() {
            let total: i32 = bits_of(*cfg).iter().map(|q| twice_ms[*q]).sum();
            if total != twice_m {
                return Err(Error::Layout(format!(
                    "branch `{}` has 2M = {total}, expected {twice_m}",
                    self.names[i]
                )));
            }
        }
        Ok(())
    }
}

/// Precedence edges: `j` must be imprinted before `i` when `seed_j ∈ config_i`.
fn imprint_order(configs: &[u64], seeds: &[usize]) -> Option<Vec<usize>> {
    let k = configs.len();
    let before = |j: usize, i: usize| i != j && configs[i] >> seeds[j] & 1 == 1;
    let mut indegree: Vec<usize> = (0..k).map(|i| (0..k).filter(|j| before(*j, i)).count()).collect();
    let mut done = vec![false; k];
    let mut order = Vec::with_capacity(k);
    while order.len() < k {
        let next = (0..k).find(|i| !done[*i] && indegree[*i] == 0)?;
        done[next] = true;
        order.push(next);
        for (i, d) in indegree.iter_mut().enumerate() {
            if before(next, i) {
                *d -= 1;
            }
        }
    }
    Some(order)
}

/// Depth-first seed search using as few ancillas as possible. Declared
/// eigenstate qubits must all be used.
fn assign_seeds(
    configs: &[u64],
    fixed: &[Option<usize>],
    declared: Option<&[usize]>,
    first_free: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let k = configs.len();
    let mut seeds = Vec::with_capacity(k);
    match declared {
        Some(pool) => search(configs, fixed, pool, pool.len(), &mut seeds),
        None => (0..=k).find_map(|budget| {
            let pool: Vec<usize> = (first_free..first_free + budget).collect();
            seeds.clear();
            search(configs, fixed, &pool, budget, &mut seeds)
        }),
    }
}

fn search(
    configs: &[u64],
    fixed: &[Option<usize>],
    pool: &[usize],
    budget: usize,
    seeds: &mut Vec<usize>,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let used = seeds.iter().filter(|s| pool.contains(s)).count();
    let i = seeds.len();
    if i == configs.len() {
        return (used == budget)
            .then(|| imprint_order(configs, seeds).map(|o| (seeds.clone(), o)))
            .flatten();
    }
    let candidates: Vec<usize> = match fixed[i] {
        Some(s) => vec![s],
        None => bits_of(configs[i])
            .into_iter()
            .chain(pool.iter().copied())
            .collect(),
    };
    for s in candidates {
        if seeds.contains(&s) || (pool.contains(&s) && used >= budget) {
            continue;
        }
        seeds.push(s);
        // Prune as soon as the partial precedence graph has a cycle.
        if partial_acyclic(configs, seeds) {
            if let Some(found) = search(configs, fixed, pool, budget, seeds) {
                return Some(found);
            }
        }
        seeds.pop();
    }
    None
}

fn partial_acyclic(configs: &[u64], seeds: &[usize]) -> bool {
    let m = seeds.len();
    imprint_order(&configs[..m], seeds).is_some()
}

/// A built ansatz circuit together with the data needed to seed trials.
#[derive(Clone, Debug)]
pub struct Ansatz {
    pub circuit: ParamCircuit,
    pub cascade: CascadeSpec,
    /// Layout branch index for each cascade position.
    pub order: Vec<usize>,
    pub seeds: Vec<usize>,
    pub ancillas: Vec<usize>,
}

/// Builds cascade → fixed rotations → imprint fans.
///
/// `order[p]` is the layout branch placed at cascade position `p`.
pub fn build_ansatz(layout: &RegisterLayout, cascade: &CascadeSpec, order: &[usize]) -> Result<Ansatz> {
    let k = layout.k();
    if cascade.k != k {
        return Err(Error::Layout(format!(
            "cascade for k={} on a layout with {k} trials",
            cascade.k
        )));
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted.iter().copied().ne(0..k) {
        return Err(Error::Layout("trial order is not a permutation".into()));
    }
    let mut circuit = ParamCircuit::new(layout.n_qubits())?;
    let seeds = layout.seeds();
    for ((i, j), name) in cascade.pairs.iter().zip(&cascade.names) {
        let slot = circuit.add_param(name, 0.0)?;
        circuit.push(Gate::givens(
            seeds[order[*j]],
            seeds[order[*i]],
            AngleSlot::Param(slot),
        ))?;
    }
    for g in layout.fixed_rotations() {
        circuit.push(Gate::givens(
            seeds[g.carrier],
            seeds[g.partner],
            AngleSlot::Fixed(g.angle),
        ))?;
    }
    for &b in layout.imprint_order() {
        for q in layout.occupied(b) {
            if q != seeds[b] {
                circuit.push(Gate::cnot(seeds[b], q))?;
            }
        }
    }
    Ok(Ansatz {
        circuit,
        cascade: cascade.clone(),
        order: order.to_vec(),
        seeds: seeds.to_vec(),
        ancillas: layout.eigenstate_qubits().to_vec(),
    })
}

impl Ansatz {
    /// The circuit prefixed by the X gate that seeds layout trial `trial`.
    pub fn prepare_trial(&self, trial: usize) -> Result<ParamCircuit> {
        let seed = *self.seeds.get(trial).ok_or_else(|| {
            Error::Domain(format!("trial {trial} out of range (k = {})", self.seeds.len()))
        })?;
        let mut c = self.circuit.clone();
        c.prepend(Gate::x(seed))?;
        Ok(c)
    }

    /// Prepared state of layout trial `trial` at `params`.
    pub fn state(&self, trial: usize, params: &[f64]) -> Result<Statevector> {
        let seed = *self.seeds.get(trial).ok_or_else(|| {
            Error::Domain(format!("trial {trial} out of range (k = {})", self.seeds.len()))
        })?;
        let init = Statevector::basis(self.circuit.n_qubits(), 1 << seed)?;
        self.circuit.run_with(params, &init)
    }

    /// State seeded at cascade position `p`.
    pub fn state_at_position(&self, p: usize, params: &[f64]) -> Result<Statevector> {
        self.state(self.order[p], params)
    }
}

/// Fixed rotations that reproduce a solved block: the block's cascade is
/// replayed with its optimal angles on the branches `branch_map[trial]`.
pub fn replay_rotation(
    cascade: &CascadeSpec,
    params: &[f64],
    order: &[usize],
    branch_map: &[usize],
) -> Result<Vec<FixedGivens>> {
    if params.len() != cascade.n_params() || order.len() != cascade.k || branch_map.len() != cascade.k
    {
        return Err(Error::Dimension("replayed block sizes disagree".into()));
    }
    Ok(cascade
        .pairs
        .iter()
        .zip(params)
        .map(|((i, j), t)| FixedGivens {
            carrier: branch_map[order[*j]],
            partner: branch_map[order[*i]],
            angle: *t,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cg_reference_values() {
        assert_eq!(clebsch_gordan_angle(0.5, 0.5, 0.0).unwrap(), 0.0);
        let z = clebsch_gordan_angle(0.5, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(z, 2.186276035465284, epsilon = 1e-12);
        assert_abs_diff_eq!(z.sin().powi(2), 2.0 / 3.0, epsilon = 1e-12);
        let z = clebsch_gordan_angle(0.5, -0.5, 1.0).unwrap();
        assert_abs_diff_eq!(z, 2.526112944919406, epsilon = 1e-12);
    }

    #[test]
    fn cg_rejects_bad_numbers() {
        assert!(clebsch_gordan_angle(0.5, 1.5, 0.0).is_err());
        assert!(clebsch_gordan_angle(0.5, 0.5, 2.0).is_err());
        assert!(clebsch_gordan_angle(0.0, 0.0, -0.5).is_err());
        assert!(clebsch_gordan_angle(0.3, 0.0, 0.8).is_err());
        assert!(clebsch_gordan_angle(1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn cascade_orders() {
        assert_eq!(build_cascade(2).unwrap().pairs, vec![(0, 1)]);
        assert_eq!(build_cascade(3).unwrap().pairs, vec![(1, 2), (0, 1), (0, 2)]);
        let c5 = build_cascade(5).unwrap();
        assert_eq!(c5.n_params(), 10);
        assert_eq!(c5.pairs.first(), Some(&(3, 4)));
        assert_eq!(c5.pairs.last(), Some(&(0, 4)));
        assert!(build_cascade(1).is_err());
        assert_eq!(c5.round(1), vec![3, 4, 5]);
    }

    #[test]
    fn rotation_matrix_examples() {
        let c = build_cascade(2).unwrap();
        let u = extract_rotation_matrix(&c, &[FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(u, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]), epsilon = 1e-15);
        let c5 = build_cascade(5).unwrap();
        assert_eq!(extract_rotation_matrix(&c5, &[0.0; 10]).unwrap(), DMatrix::identity(5, 5));
    }

    #[test]
    fn seeds_fall_back_to_an_ancilla() {
        let branches = vec![BranchSpec::new("tt", &[0, 1]), BranchSpec::new("t0c", &[0, 2])];
        let layout = RegisterLayout::new(vec![0, 1], vec![2], None, 1, branches).unwrap();
        assert!(layout.eigenstate_qubits().is_empty());
        assert_ne!(layout.seeds()[0], layout.seeds()[1]);

        // Three pairwise-overlapping patterns form a precedence cycle for
        // every choice of occupied seeds.
        let branches = vec![
            BranchSpec::new("tt", &[0, 1]),
            BranchSpec::new("t0c", &[0, 2]),
            BranchSpec::new("t1c", &[1, 2]),
        ];
        let layout = RegisterLayout::new(vec![0, 1], vec![2], None, 1, branches).unwrap();
        assert_eq!(layout.eigenstate_qubits(), &[3]);
        assert_eq!(layout.seeds().iter().filter(|s| **s == 3).count(), 1);
    }

    #[test]
    fn layout_rejections() {
        let b = |o: &[usize]| BranchSpec::new("x", o);
        assert!(RegisterLayout::new(vec![0, 1], vec![1], None, 1, vec![b(&[0, 1])]).is_err());
        assert!(RegisterLayout::new(vec![0, 1], vec![3], None, 1, vec![b(&[0, 1])]).is_err());
        // Wrong electron count.
        assert!(RegisterLayout::new(vec![0, 1], vec![2], None, 1, vec![b(&[0, 1, 2])]).is_err());
        // Duplicate configurations.
        assert!(RegisterLayout::new(vec![0, 1], vec![2], None, 1, vec![b(&[0, 1]), b(&[1, 0])]).is_err());
        // More declared eigenstate qubits than branches can use.
        assert!(
            RegisterLayout::new(vec![0, 1], vec![2], Some(vec![3, 4]), 1, vec![b(&[0, 1])]).is_err()
        );
    }
}
