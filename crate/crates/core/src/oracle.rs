//! Brute-force reference: sector enumeration, dense matrices and a cyclic
//! Jacobi eigensolver.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::statevector::MAX_QUBITS;

/// Abelian irrep labels encoded as bit vectors; the product is XOR.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrrepTable {
    codes: BTreeMap<String, u8>,
}

impl IrrepTable {
    /// D2h and its subgroups' labels as used by common quantum-chemistry codes.
    pub fn d2h() -> Self {
        let codes = [
            ("ag", 0),
            ("b1g", 1),
            ("b2g", 2),
            ("b3g", 3),
            ("au", 4),
            ("b1u", 5),
            ("b2u", 6),
            ("b3u", 7),
            ("a", 0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        IrrepTable { codes }
    }

    pub fn from_codes(codes: BTreeMap<String, u8>) -> Self {
        let codes = codes.into_iter().map(|(k, v)| (k.to_ascii_lowercase(), v)).collect();
        IrrepTable { codes }
    }

    pub fn code(&self, label: &str) -> Result<u8> {
        self.codes
            .get(&label.to_ascii_lowercase())
            .copied()
            .ok_or_else(|| Error::Schema(format!("irrep `{label}` is not in the product table")))
    }
}

/// Constraints that pick one symmetry sector out of the projected space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SectorFilter {
    /// Required `2·Sz`; needs `twice_ms` for every system qubit.
    pub twice_sz: Option<i32>,
    pub twice_ms: Vec<i32>,
    /// Required irrep code of the occupied-orbital product.
    pub irrep: Option<u8>,
    pub irrep_codes: Vec<u8>,
}

/// Occupation strings of one sector, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorBasis {
    pub bitstrings: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl SectorBasis {
    pub fn new(mut bitstrings: Vec<u64>) -> Self {
        bitstrings.sort_unstable();
        bitstrings.dedup();
        let index = bitstrings.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        SectorBasis { bitstrings, index }
    }

    pub fn len(&self) -> usize {
        self.bitstrings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bitstrings.is_empty()
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.index.get(&bits).copied()
    }
}

/// Strings with `N + 1` target electrons and an empty continuum, or `N`
/// target electrons and one continuum electron, that pass `filter`.
pub fn enumerate_sector(
    target: &[usize],
    continuum: &[usize],
    n_electrons: usize,
    filter: &SectorFilter,
) -> Result<SectorBasis> {
    let n = target.len() + continuum.len();
    if n > MAX_QUBITS {
        return Err(Error::Dimension(format!("{n} qubits exceed the {MAX_QUBITS}-qubit cap")));
    }
    let width = target.iter().chain(continuum).max().map_or(0, |m| m + 1);
    let t_mask: u64 = target.iter().fold(0, |m, q| m | (1 << q));
    let c_mask: u64 = continuum.iter().fold(0, |m, q| m | (1 << q));
    if filter.twice_sz.is_some() && filter.twice_ms.len() < width {
        return Err(Error::Schema("spin filter lacks per-qubit spins".into()));
    }
    if filter.irrep.is_some() && filter.irrep_codes.len() < width {
        return Err(Error::Schema("irrep filter lacks per-qubit labels".into()));
    }
    let mut out = Vec::new();
    for b in 0u64..(1 << width) {
        if b & !(t_mask | c_mask) != 0 {
            continue;
        }
        let (nt, nc) = ((b & t_mask).count_ones() as usize, (b & c_mask).count_ones());
        if !((nt == n_electrons + 1 && nc == 0) || (nt == n_electrons && nc == 1)) {
            continue;
        }
        let occupied = (0..width).filter(|q| b >> q & 1 == 1);
        if let Some(want) = filter.twice_sz {
            if occupied.clone().map(|q| filter.twice_ms[q]).sum::<i32>() != want {
                continue;
            }
        }
        if let Some(want) = filter.irrep {
            if occupied.fold(0u8, |acc, q| acc ^ filter.irrep_codes[q]) != want {
                continue;
            }
        }
        out.push(b);
    }
    Ok(SectorBasis::new(out))
}

/// `⟨r|H|c⟩` over the sector basis, computed from the Pauli action on
/// computational basis states. Fails if any element has an imaginary part.
pub fn dense_hamiltonian(h: &PauliSum, basis: &SectorBasis) -> Result<DMatrix<f64>> {
    let d = basis.len();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for (c, &b) in basis.bitstrings.iter().enumerate() {
        for (w, coeff) in h.iter() {
            let (out, phase) = w.apply_to_basis(b);
            if let Some(r) = basis.index_of(out) {
                m[(r, c)] += coeff * phase;
            }
        }
    }
    if m.iter().any(|z| z.im.abs() > 1e-10) {
        return Err(Error::Domain("sector matrix has imaginary entries".into()));
    }
    Ok(m.map(|z| z.re))
}

/// Largest norm of the part of `H|b⟩` that leaves the sector, over all `b`.
pub fn sector_leakage(h: &PauliSum, basis: &SectorBasis) -> f64 {
    let mut worst: f64 = 0.0;
    for &b in &basis.bitstrings {
        let mut outside: HashMap<u64, Complex64> = HashMap::new();
        for (w, coeff) in h.iter() {
            let (out, phase) = w.apply_to_basis(b);
            if basis.index_of(out).is_none() {
                *outside.entry(out).or_default() += coeff * phase;
            }
        }
        let norm = outside.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(norm);
    }
    worst
}

/// Full `2^n × 2^n` matrix of a Pauli sum; test-scale registers only.
pub fn dense_operator(op: &PauliSum) -> Result<DMatrix<Complex64>> {
    let n = op.n_qubits();
    if n > 12 {
        return Err(Error::Dimension(format!("dense operator on {n} qubits")));
    }
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        for (w, coeff) in op.iter() {
            let (r, phase) = w.apply_to_basis(c as u64);
            m[(r as usize, c)] += coeff * phase;
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` belongs to `values[k]`.
    pub vectors: DMatrix<f64>,
}

const JACOBI_SWEEPS: usize = 100;

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.
pub fn exact_spectrum(matrix: &DMatrix<f64>) -> Result<Eigen> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Input(format!("matrix is {}×{}", n, matrix.ncols())));
    }
    let scale = matrix.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in 0..i {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Input(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    let mut a = matrix.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off.sqrt() <= f64::EPSILON * scale * 1e-2 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|x, y| a[(*x, *x)].total_cmp(&a[(*y, *y)]).then(x.cmp(y)));
    let values = idx.iter().map(|i| a[(*i, *i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, idx[c])]);
    Ok(Eigen { values, vectors })
}

/// Flips each column so that its largest-magnitude entry is positive.
pub fn fix_column_signs(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() + 1e-12 { x } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    out
}

/// `‖M v − λ v‖` for each eigenpair.
pub fn residuals(matrix: &DMatrix<f64>, eig: &Eigen) -> Vec<f64> {
    eig.values
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let v: DVector<f64> = eig.vectors.column(k).into_owned();
            (matrix * &v - &v * *l).norm()
        })
        .collect()
}
