//! Integral ingestion, second quantisation and the Jordan–Wigner map.
//!
//! Spin-orbital `2p` is spatial orbital `p` with spin up and `2p + 1` the
//! same orbital with spin down. Two-electron integrals are stored in the
//! physicist convention `⟨pq|rs⟩ = ∫∫ φp*(1) φq*(2) r12⁻¹ φr(1) φs(2)`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliWord, DROP_TOLERANCE};

/// Tolerance for the permutational-symmetry checks on integrals.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Register {
    Target,
    Continuum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    /// Twice the spin projection, so ±1.
    pub fn twice_ms(self) -> i32 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinOrbital {
    pub index: usize,
    pub register: Register,
    pub spin: Spin,
    pub irrep: String,
    pub spatial_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralOrdering {
    /// `(ij|kl)`, the usual FCIDUMP convention.
    Chemist,
    /// `⟨ij|kl⟩`.
    Physicist,
}

/// Integrals over spatial orbitals, as read from an FCIDUMP file.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialIntegrals {
    pub norb: usize,
    pub nelec: usize,
    pub ms2: i32,
    pub h_one: DMatrix<f64>,
    /// Chemist-ordered `(ij|kl)`, flattened row-major, all permutations filled.
    pub eri: Vec<f64>,
    pub h_nuc: f64,
    pub irreps: Vec<String>,
    pub registers: Vec<Register>,
}

impl SpatialIntegrals {
    pub fn eri_index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let n = self.norb;
        ((i * n + j) * n + k) * n + l
    }

    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.eri[self.eri_index(i, j, k, l)]
    }

    /// Writes `(ij|kl)` into all eight symmetry-equivalent slots.
    pub fn set_eri(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        for (a, b, c, d) in [
            (i, j, k, l),
            (j, i, k, l),
            (i, j, l, k),
            (j, i, l, k),
            (k, l, i, j),
            (l, k, i, j),
            (k, l, j, i),
            (l, k, j, i),
        ] {
            let idx = self.eri_index(a, b, c, d);
            self.eri[idx] = v;
        }
    }

    /// Expands to spin-orbitals with interleaved spin ordering.
    pub fn to_problem(&self) -> FermionProblem {
        let n = 2 * self.norb;
        let orbitals = (0..n)
            .map(|p| SpinOrbital {
                index: p,
                register: self.registers[p / 2],
                spin: if p % 2 == 0 { Spin::Up } else { Spin::Down },
                irrep: self.irreps[p / 2].clone(),
                spatial_index: p / 2,
            })
            .collect();
        let h_one = DMatrix::from_fn(n, n, |p, q| {
            if p % 2 == q % 2 {
                self.h_one[(p / 2, q / 2)]
            } else {
                0.0
            }
        });
        let mut h_two = vec![0.0; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    if p % 2 != r % 2 {
                        continue;
                    }
                    for s in 0..n {
                        if q % 2 != s % 2 {
                            continue;
                        }
                        // ⟨pq|rs⟩ = (pr|qs)
                        h_two[((p * n + q) * n + r) * n + s] =
                            self.eri(p / 2, r / 2, q / 2, s / 2);
                    }
                }
            }
        }
        FermionProblem {
            n_modes: n,
            h_one,
            h_two,
            h_nuc: self.h_nuc,
            orbitals,
            n_target_electrons: self.nelec,
            boundary_amplitudes: BTreeMap::new(),
        }
    }
}

/// Integrals over spin-orbitals plus orbital metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionProblem {
    n_modes: usize,
    pub h_one: DMatrix<f64>,
    h_two: Vec<f64>,
    pub h_nuc: f64,
    pub orbitals: Vec<SpinOrbital>,
    pub n_target_electrons: usize,
    /// `(channel, continuum spin-orbital) → u(a)`.
    pub boundary_amplitudes: BTreeMap<(usize, usize), f64>,
}

impl FermionProblem {
    /// Builds a problem directly from spin-orbital integrals. `h_two` is the
    /// physicist tensor flattened as `((p·n + q)·n + r)·n + s`.
    pub fn from_spin_orbitals(
        h_one: DMatrix<f64>,
        h_two: Vec<f64>,
        h_nuc: f64,
        orbitals: Vec<SpinOrbital>,
        n_target_electrons: usize,
    ) -> Result<Self> {
        let n = orbitals.len();
        if h_one.nrows() != n || h_one.ncols() != n || h_two.len() != n.pow(4) {
            return Err(Error::Dimension(format!(
                "integrals do not match {n} spin-orbitals"
            )));
        }
        let problem = FermionProblem {
            n_modes: n,
            h_one,
            h_two,
            h_nuc,
            orbitals,
            n_target_electrons,
            boundary_amplitudes: BTreeMap::new(),
        };
        problem.check_symmetry()?;
        Ok(problem)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn h_two(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_modes;
        self.h_two[((p * n + q) * n + r) * n + s]
    }

    /// Verifies `h_one` symmetry and the real-orbital symmetries of `⟨pq|rs⟩`.
    pub fn check_symmetry(&self) -> Result<()> {
        let n = self.n_modes;
        for p in 0..n {
            for q in 0..n {
                if (self.h_one[(p, q)] - self.h_one[(q, p)]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::Schema(format!("h_one not symmetric at ({p},{q})")));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.h_two(p, q, r, s);
                        let partners = [
                            self.h_two(q, p, s, r),
                            self.h_two(r, s, p, q),
                            self.h_two(r, q, p, s),
                        ];
                        if partners.iter().any(|w| (v - w).abs() > SYMMETRY_TOLERANCE) {
                            return Err(Error::Schema(format!(
                                "two-electron integrals break permutational symmetry at ({p},{q},{r},{s})"
                            )));
                        }
                    }
                }
            }
        }
        for (ch, j) in self.boundary_amplitudes.keys() {
            match self.orbitals.get(*j) {
                Some(o) if o.register == Register::Continuum => {}
                _ => {
                    return Err(Error::Schema(format!(
                        "boundary amplitude for channel {ch} names non-continuum orbital {j}"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Keeps the listed spin-orbitals, renumbered by their position in `active`.
    pub fn restrict(&self, active: &[usize]) -> Result<FermionProblem> {
        let n = self.n_modes;
        let mut seen = vec![false; n];
        for &p in active {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Layout(format!(
                    "active spin-orbital {p} is out of range or repeated"
                )));
            }
        }
        let m = active.len();
        let h_one = DMatrix::from_fn(m, m, |a, b| self.h_one[(active[a], active[b])]);
        let mut h_two = vec![0.0; m.pow(4)];
        for (a, &p) in active.iter().enumerate() {
            for (b, &q) in active.iter().enumerate() {
                for (c, &r) in active.iter().enumerate() {
                    for (d, &s) in active.iter().enumerate() {
                        h_two[((a * m + b) * m + c) * m + d] = self.h_two(p, q, r, s);
                    }
                }
            }
        }
        let orbitals = active
            .iter()
            .enumerate()
            .map(|(a, &p)| SpinOrbital {
                index: a,
                ..self.orbitals[p].clone()
            })
            .collect();
        Ok(FermionProblem {
            n_modes: m,
            h_one,
            h_two,
            h_nuc: self.h_nuc,
            orbitals,
            n_target_electrons: self.n_target_electrons,
            boundary_amplitudes: BTreeMap::new(),
        })
    }

    pub fn modes_in(&self, register: Register) -> Vec<usize> {
        self.orbitals
            .iter()
            .filter(|o| o.register == register)
            .map(|o| o.index)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LadderOp {
    pub mode: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        LadderOp { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        LadderOp {
            mode,
            dagger: false,
        }
    }
}

/// Real linear combination of ladder-operator products plus a constant.
/// Each product is applied right to left, as written.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FermionOperator {
    pub n_modes: usize,
    pub constant: f64,
    pub terms: Vec<(f64, Vec<LadderOp>)>,
}

impl FermionOperator {
    pub fn new(n_modes: usize) -> Self {
        FermionOperator {
            n_modes,
            ..Default::default()
        }
    }

    pub fn push(&mut self, coeff: f64, ops: Vec<LadderOp>) {
        self.terms.push((coeff, ops));
    }

    /// Applies the operator to an occupation-number determinant, returning
    /// the resulting determinants with their coefficients. Signs follow the
    /// ordering where `a†_p` picks up `(−1)^(occupied modes below p)`.
    pub fn apply_to_determinant(&self, bits: u64) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, f64)> = Vec::new();
        if self.constant != 0.0 {
            out.push((bits, self.constant));
        }
        'terms: for (coeff, ops) in &self.terms {
            let mut state = bits;
            let mut sign = 1.0;
            for op in ops.iter().rev() {
                let bit = 1u64 << op.mode;
                let occupied = state & bit != 0;
                if occupied == op.dagger {
                    continue 'terms;
                }
                if (state & (bit - 1)).count_ones() % 2 == 1 {
                    sign = -sign;
                }
                state ^= bit;
            }
            out.push((state, coeff * sign));
        }
        out
    }

    /// Dense matrix `⟨basis[r]| op |basis[c]⟩` on a list of determinants.
    pub fn dense_matrix(&self, basis: &[u64]) -> DMatrix<f64> {
        let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        for (c, &b) in basis.iter().enumerate() {
            for (out, v) in self.apply_to_determinant(b) {
                if let Some(&r) = index.get(&out) {
                    m[(r, c)] += v;
                }
            }
        }
        m
    }
}

/// Options for [`build_second_quantised`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HamiltonianOptions {
    /// Drop two-electron terms that create or annihilate two continuum
    /// electrons at once. Such terms vanish inside the projected space.
    pub zero_continuum_pairs: bool,
}

/// `H = Σ h_pq a†p aq + ½ Σ ⟨pq|rs⟩ a†p a†q as ar + h_nuc`.
pub fn build_second_quantised(problem: &FermionProblem, opts: HamiltonianOptions) -> FermionOperator {
    let n = problem.n_modes();
    let mut op = FermionOperator::new(n);
    op.constant = problem.h_nuc;
    for p in 0..n {
        for q in 0..n {
            let h = problem.h_one[(p, q)];
            if h.abs() > DROP_TOLERANCE {
                op.push(h, vec![LadderOp::create(p), LadderOp::annihilate(q)]);
            }
        }
    }
    let is_cont = |p: usize| problem.orbitals[p].register == Register::Continuum;
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            for r in 0..n {
                for s in 0..n {
                    if r == s {
                        continue;
                    }
                    let v = problem.h_two(p, q, r, s);
                    if v.abs() <= DROP_TOLERANCE {
                        continue;
                    }
                    if opts.zero_continuum_pairs
                        && ((is_cont(p) && is_cont(q)) || (is_cont(r) && is_cont(s)))
                    {
                        continue;
                    }
                    op.push(
                        0.5 * v,
                        vec![
                            LadderOp::create(p),
                            LadderOp::create(q),
                            LadderOp::annihilate(s),
                            LadderOp::annihilate(r),
                        ],
                    );
                }
            }
        }
    }
    op
}

/// Qubit image of one ladder operator: `Z_{<p}(X_p ± iY_p)/2`.
fn ladder_image(op: LadderOp) -> [(PauliWord, Complex64); 2] {
    let below = (1u64 << op.mode) - 1;
    let bit = 1u64 << op.mode;
    let x = PauliWord::from_masks(bit, below);
    let y = PauliWord::from_masks(bit, below | bit);
    let im = if op.dagger { -0.5 } else { 0.5 };
    [(x, Complex64::new(0.5, 0.0)), (y, Complex64::new(0.0, im))]
}

/// Maps a fermion operator to qubits. `n_qubits` may exceed the number of
/// modes, leaving the extra qubits untouched.
pub fn jordan_wigner(op: &FermionOperator, n_qubits: usize) -> Result<PauliSum> {
    if op.n_modes > n_qubits {
        return Err(Error::Dimension(format!(
            "{} modes on {n_qubits} qubits",
            op.n_modes
        )));
    }
    let mut acc: HashMap<PauliWord, Complex64> = HashMap::new();
    if op.constant != 0.0 {
        acc.insert(PauliWord::IDENTITY, Complex64::new(op.constant, 0.0));
    }
    let mut product: Vec<(PauliWord, Complex64)> = Vec::with_capacity(16);
    let mut next: Vec<(PauliWord, Complex64)> = Vec::with_capacity(16);
    for (coeff, ops) in &op.terms {
        if let Some(bad) = ops.iter().find(|o| o.mode >= op.n_modes) {
            return Err(Error::Dimension(format!("mode {} out of range", bad.mode)));
        }
        product.clear();
        product.push((PauliWord::IDENTITY, Complex64::new(*coeff, 0.0)));
        for l in ops {
            next.clear();
            for (w, c) in &product {
                for (lw, lc) in ladder_image(*l) {
                    let (phase, word) = w.mul(&lw);
                    next.push((word, c * lc * phase.to_complex()));
                }
            }
            std::mem::swap(&mut product, &mut next);
        }
        for (w, c) in product.drain(..) {
            *acc.entry(w).or_default() += c;
        }
    }
    PauliSum::from_terms(n_qubits, acc)
}

/// Jordan–Wigner image of a Hermitian operator with imaginary residue
/// stripped; fails if the residue exceeds `SYMMETRY_TOLERANCE`.
pub fn qubit_hamiltonian(op: &FermionOperator, n_qubits: usize) -> Result<PauliSum> {
    jordan_wigner(op, n_qubits)?.into_hermitian(SYMMETRY_TOLERANCE)
}

/// Reads an FCIDUMP file. See [`parse_fcidump_str`].
pub fn parse_fcidump(path: impl AsRef<Path>) -> Result<FermionProblem> {
    Ok(read_fcidump(path)?.to_problem())
}

/// Reads and parses an FCIDUMP file; a missing or unreadable file is
/// [`Error::Io`].
pub fn read_fcidump(path: impl AsRef<Path>) -> Result<SpatialIntegrals> {
    parse_fcidump_str(&std::fs::read_to_string(path)?)
}

fn header_values(header: &str) -> Result<BTreeMap<String, Vec<String>>> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for tok in header.split(|c: char| c == ',' || c.is_whitespace()) {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let value = match tok.split_once('=') {
            Some((k, v)) => {
                let key = k.trim().to_ascii_uppercase();
                map.entry(key.clone()).or_default();
                current = Some(key);
                v.trim()
            }
            None => tok,
        };
        if value.is_empty() {
            continue;
        }
        let key = current
            .as_ref()
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("header value `{value}` has no key"),
            })?;
        map.get_mut(key)
            .unwrap()
            .push(value.trim_matches(|c| c == '\'' || c == '"').to_string());
    }
    Ok(map)
}

fn parse_float(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "e").parse().ok()
}

/// Parses FCIDUMP text.
///
/// Recognised header keys: `NORB`, `NELEC`, `MS2`, `IRREP` (one label per
/// spatial orbital), `REGISTER` (`T` or `C` per orbital) and `ORDERING`
/// (`CHEMIST`, the default, or `PHYSICIST`). Other keys such as `ORBSYM`
/// and `ISYM` are accepted and ignored. `NELEC` is the target electron count.
pub fn parse_fcidump_str(text: &str) -> Result<SpatialIntegrals> {
    let mut lines = text.lines().enumerate();
    let mut header = String::new();
    let mut end_line = 0;
    let mut closed = false;
    for (i, line) in lines.by_ref() {
        let t = line.trim();
        let upper = t.to_ascii_uppercase();
        let (body, done) = match upper.find("&END").or_else(|| (t == "/").then_some(0)) {
            Some(pos) => (&t[..pos], true),
            None => (t, false),
        };
        let body = if upper.starts_with("&FCI") { &body[4..] } else { body };
        header.push_str(body);
        header.push(' ');
        end_line = i + 1;
        if done {
            closed = true;
            break;
        }
    }
    if !closed {
        return Err(Error::Parse {
            line: end_line,
            message: "namelist header is not terminated by &END".into(),
        });
    }
    let values = header_values(&header)?;
    let int = |key: &str| -> Result<Option<i64>> {
        match values.get(key).and_then(|v| v.first()) {
            None => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|_| Error::Parse {
                line: 1,
                message: format!("{key} is not an integer: `{s}`"),
            }),
        }
    };
    let norb = int("NORB")?
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Schema("header lacks a positive NORB".into()))? as usize;
    let nelec = int("NELEC")?.ok_or_else(|| Error::Schema("header lacks NELEC".into()))?;
    if nelec < 0 {
        return Err(Error::Schema("NELEC is negative".into()));
    }
    let ms2 = int("MS2")?.unwrap_or(0) as i32;

    let irreps = match values.get("IRREP") {
        Some(v) if v.len() != norb => {
            return Err(Error::Schema(format!("IRREP lists {} labels for NORB={norb}", v.len())))
        }
        Some(v) => v.iter().map(|s| s.to_ascii_lowercase()).collect(),
        None => vec!["a".to_string(); norb],
    };
    let registers = match values.get("REGISTER") {
        Some(v) if v.len() != norb => {
            return Err(Error::Schema(format!("REGISTER lists {} tags for NORB={norb}", v.len())))
        }
        Some(v) => v
            .iter()
            .map(|s| match s.to_ascii_uppercase().as_str() {
                "T" | "TARGET" => Ok(Register::Target),
                "C" | "CONTINUUM" => Ok(Register::Continuum),
                other => Err(Error::Schema(format!("unknown register tag `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?,
        None => vec![Register::Target; norb],
    };
    let ordering = match values.get("ORDERING").and_then(|v| v.first()) {
        None => IntegralOrdering::Chemist,
        Some(s) => match s.to_ascii_uppercase().as_str() {
            "CHEMIST" => IntegralOrdering::Chemist,
            "PHYSICIST" => IntegralOrdering::Physicist,
            other => return Err(Error::Schema(format!("unknown ORDERING `{other}`"))),
        },
    };

    let mut data = SpatialIntegrals {
        norb,
        nelec: nelec as usize,
        ms2,
        h_one: DMatrix::zeros(norb, norb),
        eri: vec![0.0; norb.pow(4)],
        h_nuc: 0.0,
        irreps,
        registers,
    };
    for (i, line) in lines {
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let bad = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        if toks.len() != 5 || toks[0].starts_with('(') {
            return Err(bad(format!(
                "expected `value i j k l` with a real value, found {} fields",
                toks.len()
            )));
        }
        let v = parse_float(toks[0]).ok_or_else(|| bad(format!("bad value `{}`", toks[0])))?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&toks[1..]) {
            *slot = tok
                .parse()
                .map_err(|_| bad(format!("bad orbital index `{tok}`")))?;
            if *slot > norb {
                return Err(Error::Schema(format!(
                    "line {lineno}: orbital index {slot} exceeds NORB={norb}"
                )));
            }
        }
        match idx {
            [0, 0, 0, 0] => data.h_nuc = v,
            [i, j, 0, 0] if i > 0 && j > 0 => {
                data.h_one[(i - 1, j - 1)] = v;
                data.h_one[(j - 1, i - 1)] = v;
            }
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
                match ordering {
                    IntegralOrdering::Chemist => data.set_eri(i, j, k, l, v),
                    // ⟨ij|kl⟩ = (ik|jl)
                    IntegralOrdering::Physicist => data.set_eri(i, k, j, l, v),
                }
            }
            // Orbital energies (`e i 0 0 0`) carry no Hamiltonian information.
            [_, 0, 0, 0] => {}
            _ => return Err(bad(format!("index pattern {idx:?} is not recognised"))),
        }
    }
    Ok(data)
}
