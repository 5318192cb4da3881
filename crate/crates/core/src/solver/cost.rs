use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::projection::conjugate_by_projector;
use crate::statevector::{CompiledObservable, Statevector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// `⟨HPH⟩ − ⟨H⟩²` per trial.
    Variance,
    /// `⟨HPH⟩ − 2Ẽ⟨H⟩ + Ẽ²` per trial.
    Folded,
    /// `Σ_i Var(ψ_i)` over all trials of one shared rotation.
    SumOfVariances,
    /// Sequential minimisation of `⟨H⟩`, one trial per round.
    Subspace,
}

impl CostKind {
    pub fn label(self) -> &'static str {
        match self {
            CostKind::Variance => "variance",
            CostKind::Folded => "folded",
            CostKind::SumOfVariances => "sum-variance",
            CostKind::Subspace => "subspace",
        }
    }

    pub fn needs_hph(self) -> bool {
        self != CostKind::Subspace
    }

    pub const ALL: [CostKind; 4] = [
        CostKind::Variance,
        CostKind::Folded,
        CostKind::SumOfVariances,
        CostKind::Subspace,
    ];
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(CostKind::Variance),
            "folded" => Ok(CostKind::Folded),
            "sum-variance" | "sum_of_variances" | "sum-of-variances" => Ok(CostKind::SumOfVariances),
            "subspace" | "subspace_expectation" => Ok(CostKind::Subspace),
            other => Err(Error::Schema(format!("unknown cost kind `{other}`"))),
        }
    }
}

/// `H`, and `HPH` when a projector is supplied, compiled for repeated
/// coherent-summation readout over a fixed ancilla set.
#[derive(Clone, Debug)]
pub struct CostOperators {
    pub h: PauliSum,
    pub hph: Option<PauliSum>,
    ancillas: Vec<usize>,
    h_obs: CompiledObservable,
    hph_obs: Option<CompiledObservable>,
}

impl CostOperators {
    pub fn new(h: PauliSum, projector: Option<&PauliSum>, ancillas: Vec<usize>) -> Result<Self> {
        let hph = projector.map(|p| conjugate_by_projector(&h, p)).transpose()?;
        let anc_mask = ancillas.iter().fold(0u64, |m, q| m | (1 << q));
        if h.iter().any(|(w, _)| w.support() & anc_mask != 0) {
            return Err(Error::Layout("Hamiltonian acts on an eigenstate qubit".into()));
        }
        let h_obs = CompiledObservable::new(&h)?;
        let hph_obs = hph.as_ref().map(CompiledObservable::new).transpose()?;
        Ok(CostOperators {
            h,
            hph,
            ancillas,
            h_obs,
            hph_obs,
        })
    }

    pub fn ancillas(&self) -> &[usize] {
        &self.ancillas
    }

    /// Coherent-summation `⟨H⟩`.
    pub fn energy(&self, state: &Statevector) -> Result<f64> {
        self.h_obs.coherent_summation(state, &self.ancillas)
    }

    /// Coherent-summation `⟨HPH⟩`.
    pub fn hph_value(&self, state: &Statevector) -> Result<f64> {
        let obs = self
            .hph_obs
            .as_ref()
            .ok_or_else(|| Error::Domain("cost needs HPH but no projector was given".into()))?;
        obs.coherent_summation(state, &self.ancillas)
    }

    /// Returns `(cost, ⟨H⟩)`.
    pub fn variance(&self, state: &Statevector) -> Result<(f64, f64)> {
        let e = self.energy(state)?;
        Ok((self.hph_value(state)? - e * e, e))
    }

    /// Returns `(cost, ⟨H⟩)`.
    pub fn folded(&self, state: &Statevector, e_tilde: f64) -> Result<(f64, f64)> {
        let e = self.energy(state)?;
        Ok((self.hph_value(state)? - 2.0 * e_tilde * e + e_tilde * e_tilde, e))
    }

    /// Returns `(Σ variances, energies)`.
    pub fn sum_of_variances(&self, states: &[Statevector]) -> Result<(f64, Vec<f64>)> {
        let mut total = 0.0;
        let mut energies = Vec::with_capacity(states.len());
        for s in states {
            let (v, e) = self.variance(s)?;
            total += v;
            energies.push(e);
        }
        Ok((total, energies))
    }
}

/// Distinct Pauli words that must be estimated for `kind`, identity included.
pub fn measurement_budget(kind: CostKind, ops: &CostOperators) -> usize {
    match (&ops.hph, kind.needs_hph()) {
        (Some(hph), true) => PauliSum::union_count(&[&ops.h, hph]),
        _ => ops.h.count_distinct_terms(),
    }
}
