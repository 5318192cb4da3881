//! Exact algebra over weighted Pauli strings.
//!
//! A [`PauliWord`] stores one letter per qubit as a pair of bit masks
//! (`x`, `z`), with `Y` spelled as both bits set. Qubit 0 is the least
//! significant bit. Words carry no phase; phases live either in a
//! [`PauliString`] or in the complex coefficients of a [`PauliSum`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped after every operation.
pub const DROP_TOLERANCE: f64 = 1e-12;

/// Widest register a word can describe.
pub const MAX_WORD_QUBITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn code(self) -> u8 {
        match self {
            Letter::I => 0,
            Letter::X => 1,
            Letter::Y => 2,
            Letter::Z => 3,
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// Complex unit `i^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    pub fn from_exponent(k: u8) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn exponent(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    // i^a · i^b = i^(a+b)
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, other: Phase) -> Phase {
        Phase::from_exponent(self.exponent() + other.exponent())
    }
}

/// Phase-free tensor product of single-qubit Pauli letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PauliWord {
    x: u64,
    z: u64,
}

impl PauliWord {
    pub const IDENTITY: PauliWord = PauliWord { x: 0, z: 0 };

    pub fn from_masks(x: u64, z: u64) -> Self {
        PauliWord { x, z }
    }

    pub fn single(qubit: usize, letter: Letter) -> Self {
        let mut w = PauliWord::IDENTITY;
        w.set(qubit, letter);
        w
    }

    pub fn from_letters<I: IntoIterator<Item = (usize, Letter)>>(letters: I) -> Self {
        let mut w = PauliWord::IDENTITY;
        for (q, l) in letters {
            w.set(q, l);
        }
        w
    }

    /// Product of `Z` on every qubit in `mask`.
    pub fn z_string(mask: u64) -> Self {
        PauliWord { x: 0, z: mask }
    }

    fn set(&mut self, qubit: usize, letter: Letter) {
        assert!(qubit < MAX_WORD_QUBITS, "qubit {qubit} out of word range");
        let bit = 1u64 << qubit;
        self.x &= !bit;
        self.z &= !bit;
        match letter {
            Letter::I => {}
            Letter::X => self.x |= bit,
            Letter::Y => {
                self.x |= bit;
                self.z |= bit
            }
            Letter::Z => self.z |= bit,
        }
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        let bit = 1u64 << qubit;
        Letter::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the word contains only `I` and `Z` letters.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// Index of the highest non-identity qubit.
    pub fn max_qubit(&self) -> Option<usize> {
        let s = self.support();
        (s != 0).then(|| 63 - s.leading_zeros() as usize)
    }

    pub fn fits(&self, n_qubits: usize) -> bool {
        n_qubits >= MAX_WORD_QUBITS || self.support() >> n_qubits == 0
    }

    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// `self · other = phase · word`.
    pub fn mul(&self, other: &PauliWord) -> (Phase, PauliWord) {
        let mut k = 0u8;
        let mut both = self.support() & other.support();
        while both != 0 {
            let q = both.trailing_zeros() as usize;
            both &= both - 1;
            let a = self.letter(q).code();
            let b = other.letter(q).code();
            if a != b {
                k += if b == a % 3 + 1 { 1 } else { 3 };
            }
        }
        (
            Phase::from_exponent(k),
            PauliWord {
                x: self.x ^ other.x,
                z: self.z ^ other.z,
            },
        )
    }

    /// Action on a computational basis state: `P|b⟩ = phase · |b'⟩`.
    pub fn apply_to_basis(&self, b: u64) -> (u64, Complex64) {
        let sign_flips = (b & self.z).count_ones() % 2;
        let k = self.y_count() as u8 + 2 * sign_flips as u8;
        (b ^ self.x, Phase::from_exponent(k).to_complex())
    }
}

impl Ord for PauliWord {
    /// Letter strings compared from qubit 0 upwards with `I < X < Y < Z`.
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = (self.x ^ other.x) | (self.z ^ other.z);
        if diff == 0 {
            return Ordering::Equal;
        }
        let q = diff.trailing_zeros() as usize;
        self.letter(q).code().cmp(&other.letter(q).code())
    }
}

impl PartialOrd for PauliWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut s = self.support();
        let mut first = true;
        while s != 0 {
            let q = s.trailing_zeros() as usize;
            s &= s - 1;
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}{}", self.letter(q).symbol(), q)?;
            first = false;
        }
        Ok(())
    }
}

impl std::str::FromStr for PauliWord {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(PauliWord::IDENTITY);
        }
        let mut w = PauliWord::IDENTITY;
        for tok in s.split_whitespace() {
            let mut chars = tok.chars();
            let letter = match chars.next() {
                Some('X') => Letter::X,
                Some('Y') => Letter::Y,
                Some('Z') => Letter::Z,
                _ => return Err(format!("bad Pauli token `{tok}`")),
            };
            let q: usize = chars
                .as_str()
                .parse()
                .map_err(|_| format!("bad qubit index in `{tok}`"))?;
            if q >= MAX_WORD_QUBITS {
                return Err(format!("qubit index {q} too large"));
            }
            if w.letter(q) != Letter::I {
                return Err(format!("qubit {q} appears twice"));
            }
            w.set(q, letter);
        }
        Ok(w)
    }
}

/// A Pauli word on a fixed number of qubits together with a unit phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    word: PauliWord,
    phase: Phase,
}

impl PauliString {
    pub fn new(n_qubits: usize, word: PauliWord, phase: Phase) -> Result<Self> {
        if n_qubits > MAX_WORD_QUBITS || !word.fits(n_qubits) {
            return Err(Error::Dimension(format!(
                "word {word} does not fit on {n_qubits} qubits"
            )));
        }
        Ok(PauliString {
            n_qubits,
            word,
            phase,
        })
    }

    /// Parses a dense letter string such as `"XIZY"` (qubit 0 first).
    pub fn from_letters(letters: &str) -> Result<Self> {
        let mut word = PauliWord::IDENTITY;
        let mut n = 0;
        for (q, c) in letters.chars().enumerate() {
            let l = match c {
                'I' => Letter::I,
                'X' => Letter::X,
                'Y' => Letter::Y,
                'Z' => Letter::Z,
                _ => return Err(Error::Domain(format!("bad Pauli letter `{c}`"))),
            };
            word.set(q, l);
            n = q + 1;
        }
        PauliString::new(n, word, Phase::PlusOne)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn word(&self) -> PauliWord {
        self.word
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n_qubits).map(|q| self.word.letter(q)).collect()
    }

    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension(format!(
                "{} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        let (p, word) = self.word.mul(&other.word);
        Ok(PauliString {
            n_qubits: self.n_qubits,
            word,
            phase: self.phase * other.phase * p,
        })
    }
}

/// Weighted sum of Pauli words on `n_qubits` qubits.
///
/// Terms are kept merged and canonically ordered; coefficients below
/// [`DROP_TOLERANCE`] are removed.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliWord, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_WORD_QUBITS);
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_word(n_qubits, PauliWord::IDENTITY, Complex64::new(1.0, 0.0))
    }

    pub fn from_word(n_qubits: usize, word: PauliWord, coeff: Complex64) -> Self {
        let mut s = Self::zero(n_qubits);
        s.add_term(word, coeff);
        s
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliWord, Complex64)>,
    {
        let mut s = Self::zero(n_qubits);
        for (w, c) in terms {
            if !w.fits(n_qubits) {
                return Err(Error::Dimension(format!(
                    "word {w} does not fit on {n_qubits} qubits"
                )));
            }
            s.accumulate(w, c);
        }
        s.prune();
        Ok(s)
    }

    /// Convenience constructor from `(coefficient, "X0 Z1")` pairs.
    pub fn from_real_terms(n_qubits: usize, terms: &[(f64, &str)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(c, w)| {
                let word = w.parse::<PauliWord>().map_err(Error::Domain)?;
                Ok((word, Complex64::new(*c, 0.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n_qubits, parsed)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliWord, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &PauliWord) -> Complex64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    /// Number of stored nonzero terms, identity included.
    pub fn count_distinct_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn words(&self) -> BTreeSet<PauliWord> {
        self.terms.keys().copied().collect()
    }

    fn accumulate(&mut self, word: PauliWord, coeff: Complex64) {
        *self.terms.entry(word).or_default() += coeff;
    }

    fn add_term(&mut self, word: PauliWord, coeff: Complex64) {
        assert!(word.fits(self.n_qubits), "word {word} exceeds register");
        self.accumulate(word, coeff);
        if self.terms[&word].norm() < DROP_TOLERANCE {
            self.terms.remove(&word);
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= DROP_TOLERANCE);
    }

    fn check_dims(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension(format!(
                "{} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.accumulate(*w, *c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        for (w, c) in &self.terms {
            out.accumulate(*w, c * factor);
        }
        out.prune();
        out
    }

    pub fn scale_real(&self, factor: f64) -> PauliSum {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Adds `c · I` in place.
    pub fn add_constant(&mut self, c: f64) {
        self.add_term(PauliWord::IDENTITY, Complex64::new(c, 0.0));
    }

    /// Operator product `self · other`.
    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_dims(other)?;
        let mut acc: HashMap<PauliWord, Complex64> =
            HashMap::with_capacity(self.len().saturating_mul(other.len()).min(1 << 20));
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let (phase, w) = wa.mul(wb);
                *acc.entry(w).or_default() += ca * cb * phase.to_complex();
            }
        }
        let mut out = PauliSum::zero(self.n_qubits);
        out.terms = acc
            .into_iter()
            .filter(|(_, c)| c.norm() >= DROP_TOLERANCE)
            .collect();
        Ok(out)
    }

    pub fn adjoint(&self) -> PauliSum {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.conj();
        }
        out
    }

    /// Hermitian iff every coefficient is real (Pauli words are Hermitian).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Drops imaginary parts below `tol`; fails if any is larger.
    pub fn into_hermitian(mut self, tol: f64) -> Result<PauliSum> {
        if !self.is_hermitian(tol) {
            return Err(Error::Domain("operator is not Hermitian".into()));
        }
        for c in self.terms.values_mut() {
            c.im = 0.0;
        }
        self.prune();
        Ok(self)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(PauliWord::is_diagonal)
    }

    /// Same operator on a wider register (identity on the added qubits).
    pub fn widen(&self, n_qubits: usize) -> Result<PauliSum> {
        if n_qubits < self.n_qubits {
            return Err(Error::Dimension(format!(
                "cannot narrow {} qubits to {n_qubits}",
                self.n_qubits
            )));
        }
        Ok(PauliSum {
            n_qubits,
            terms: self.terms.clone(),
        })
    }

    /// Union of stored words.
    pub fn union_count(ops: &[&PauliSum]) -> usize {
        ops.iter()
            .flat_map(|op| op.terms.keys().copied())
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Line-based text form: `<re> <im> <word>` per term, preceded by a
    /// `# n_qubits <n>` header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# n_qubits {}\n", self.n_qubits);
        for (w, c) in &self.terms {
            s.push_str(&format!("{:e} {:e} {}\n", c.re, c.im, w));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<PauliSum> {
        let mut n_qubits = None;
        let mut terms = Vec::new();
        let mut widest = 0usize;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("n_qubits") {
                    let n = it.next().and_then(|v| v.parse().ok()).ok_or(Error::Parse {
                        line: i + 1,
                        message: "bad n_qubits header".into(),
                    })?;
                    n_qubits = Some(n);
                }
                continue;
            }
            let mut it = line.splitn(3, char::is_whitespace);
            let mut num = |what: &str| -> Result<f64> {
                it.next()
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or(Error::Parse {
                        line: i + 1,
                        message: format!("missing or bad {what} part"),
                    })
            };
            let re = num("real")?;
            let im = num("imaginary")?;
            let word: PauliWord = it
                .next()
                .unwrap_or("I")
                .parse()
                .map_err(|message| Error::Parse {
                    line: i + 1,
                    message,
                })?;
            widest = widest.max(word.max_qubit().map_or(0, |q| q + 1));
            terms.push((word, Complex64::new(re, im)));
        }
        let n = n_qubits.unwrap_or(widest);
        PauliSum::from_terms(n, terms)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}·[{}]", c.re, w)?;
            } else {
                write!(f, "({}{:+}i)·[{}]", c.re, c.im, w)?;
            }
        }
        Ok(())
    }
}
