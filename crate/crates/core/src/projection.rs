//! Number-projection operators as Pauli-Z polynomials.
//!
//! `P_n = ∏_{m≠n} (N̂ − m)/(n − m)` with `N̂ = Σ (I − Z_i)/2`. Expansion is
//! carried out over Z-masks with exact integer (i128) coefficients. The
//! common denominator is a power of two times `∏ |n − m|`, so every final
//! coefficient is reduced before the single cast to `f64`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliWord, MAX_WORD_QUBITS};

/// Largest register for which the exact integer expansion cannot overflow.
pub const MAX_REGISTER: usize = 16;

/// A register and the electron count it should hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectorSpec {
    pub qubits: Vec<usize>,
    pub occupancy: usize,
}

impl ProjectorSpec {
    pub fn new(qubits: Vec<usize>, occupancy: usize) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::Domain("projector register is empty".into()));
        }
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("projector register repeats a qubit".into()));
        }
        if qubits.len() > MAX_REGISTER {
            return Err(Error::Domain(format!(
                "projector registers are limited to {MAX_REGISTER} qubits"
            )));
        }
        if occupancy > qubits.len() {
            return Err(Error::Domain(format!(
                "occupancy {occupancy} exceeds register size {}",
                qubits.len()
            )));
        }
        Ok(ProjectorSpec { qubits, occupancy })
    }

    fn mask(&self) -> u64 {
        self.qubits.iter().fold(0, |m, q| m | (1 << q))
    }
}

/// Polynomial over Z-masks with integer coefficients and a shared denominator.
#[derive(Clone, Debug)]
struct ZPoly {
    terms: BTreeMap<u64, i128>,
    denom: i128,
}

impl ZPoly {
    fn constant(c: i128) -> Self {
        ZPoly {
            terms: BTreeMap::from([(0, c)]),
            denom: 1,
        }
    }

    /// Multiplies by `(2N̂ − 2m) = Σ(I − Z_i) − 2m`, doubling the denominator.
    fn times_shifted_count(&self, qubits: &[usize], m: i128) -> Self {
        let mut factor: BTreeMap<u64, i128> = BTreeMap::new();
        factor.insert(0, qubits.len() as i128 - 2 * m);
        for q in qubits {
            factor.insert(1 << q, -1);
        }
        let mut out: BTreeMap<u64, i128> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &factor {
                *out.entry(ma ^ mb).or_default() += ca * cb;
            }
        }
        out.retain(|_, c| *c != 0);
        ZPoly {
            terms: out,
            denom: self.denom * 2,
        }
    }

    fn times(&self, other: &ZPoly) -> Self {
        let mut out: BTreeMap<u64, i128> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *out.entry(ma ^ mb).or_default() += ca * cb;
            }
        }
        out.retain(|_, c| *c != 0);
        ZPoly {
            terms: out,
            denom: self.denom * other.denom,
        }
    }

    fn to_pauli_sum(&self, n_qubits: usize) -> Result<PauliSum> {
        let g = self
            .terms
            .values()
            .fold(self.denom, |g, c| gcd(g, c.abs()));
        let terms = self.terms.iter().map(|(m, c)| {
            let v = (c / g) as f64 / (self.denom / g) as f64;
            (PauliWord::z_string(*m), Complex64::new(v, 0.0))
        });
        PauliSum::from_terms(n_qubits, terms)
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lagrange(spec: &ProjectorSpec) -> ZPoly {
    let n = spec.occupancy as i128;
    let size = spec.qubits.len() as i128;
    let mut poly = ZPoly::constant(1);
    let mut denom = 1i128;
    for m in 0..=size {
        if m == n {
            continue;
        }
        poly = poly.times_shifted_count(&spec.qubits, m);
        denom *= n - m;
    }
    if denom < 0 {
        for c in poly.terms.values_mut() {
            *c = -*c;
        }
    }
    poly.denom *= denom.abs();
    poly
}

fn check_range(qubits: &[usize], n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_WORD_QUBITS {
        return Err(Error::Dimension(format!("{n_qubits} qubits exceed the word width")));
    }
    match qubits.iter().find(|q| **q >= n_qubits) {
        Some(q) => Err(Error::Dimension(format!(
            "qubit {q} outside a {n_qubits}-qubit register"
        ))),
        None => Ok(()),
    }
}

/// Projector onto states with exactly `spec.occupancy` ones on `spec.qubits`.
pub fn number_projector(spec: &ProjectorSpec, n_qubits: usize) -> Result<PauliSum> {
    check_range(&spec.qubits, n_qubits)?;
    lagrange(spec).to_pauli_sum(n_qubits)
}

/// `P = P_{t,N+1} P_{c,0} + P_{t,N} P_{c,1}`: either all `N + 1` electrons
/// sit in the target register, or `N` do and one occupies the continuum.
pub fn inner_region_projector(
    target: &[usize],
    continuum: &[usize],
    n_electrons: usize,
    n_qubits: usize,
) -> Result<PauliSum> {
    check_range(target, n_qubits)?;
    check_range(continuum, n_qubits)?;
    let overlap = ProjectorSpec::new(target.to_vec(), 0)?.mask()
        & continuum.iter().fold(0u64, |m, q| m | (1 << q));
    if overlap != 0 {
        return Err(Error::Layout(format!(
            "target and continuum registers share qubits (mask {overlap:#b})"
        )));
    }
    let target_proj = |n: usize| -> Result<Option<ZPoly>> {
        if n > target.len() {
            return Ok(None);
        }
        Ok(Some(lagrange(&ProjectorSpec::new(target.to_vec(), n)?)))
    };
    let mut total: Option<ZPoly> = None;
    let mut add = |p: ZPoly| {
        total = Some(match total.take() {
            None => p,
            Some(t) => add_polys(&t, &p),
        });
    };
    if continuum.is_empty() {
        if let Some(p) = target_proj(n_electrons + 1)? {
            add(p);
        }
    } else {
        let c0 = lagrange(&ProjectorSpec::new(continuum.to_vec(), 0)?);
        let c1 = lagrange(&ProjectorSpec::new(continuum.to_vec(), 1)?);
        if let Some(p) = target_proj(n_electrons + 1)? {
            add(p.times(&c0));
        }
        if let Some(p) = target_proj(n_electrons)? {
            add(p.times(&c1));
        }
    }
    match total {
        Some(p) => p.to_pauli_sum(n_qubits),
        None => Ok(PauliSum::zero(n_qubits)),
    }
}

fn add_polys(a: &ZPoly, b: &ZPoly) -> ZPoly {
    let denom = a.denom / gcd(a.denom, b.denom) * b.denom;
    let (fa, fb) = (denom / a.denom, denom / b.denom);
    let mut terms = a.terms.clone();
    for c in terms.values_mut() {
        *c *= fa;
    }
    for (m, c) in &b.terms {
        *terms.entry(*m).or_default() += c * fb;
    }
    terms.retain(|_, c| *c != 0);
    ZPoly { terms, denom }
}

/// `H · P · H`, in that operator order.
pub fn conjugate_by_projector(h: &PauliSum, p: &PauliSum) -> Result<PauliSum> {
    h.multiply(p)?.multiply(h)
}
