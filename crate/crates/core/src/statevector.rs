//! Dense statevector simulation.
//!
//! Basis index bit `q` is the occupation of qubit `q` (little-endian).
//! Two-qubit gates list their operands high-bit first: for `Givens(a, b)`
//! the local basis `{00, 01, 10, 11}` reads `(bit a, bit b)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliWord};

/// Hard cap on register width.
pub const MAX_QUBITS: usize = 24;

/// Norm drift tolerated after gate application.
pub const NORM_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Dimension(format!(
                "{n_qubits} qubits exceed the {MAX_QUBITS}-qubit cap"
            )));
        }
        if index >> n_qubits != 0 {
            return Err(Error::Dimension(format!(
                "basis index {index} outside {n_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Ok(Statevector { n_qubits, amps })
    }

    /// Wraps amplitudes; they must have length `2^n` and unit norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = amps.len().trailing_zeros() as usize;
        if !amps.len().is_power_of_two() || n_qubits > MAX_QUBITS {
            return Err(Error::Dimension(format!(
                "{} amplitudes is not a supported register size",
                amps.len()
            )));
        }
        let s = Statevector { n_qubits, amps };
        if (s.norm_sqr() - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Domain(format!("state norm² is {}", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        self.check_width(other.n_qubits)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_width(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::Dimension(format!("{} vs {n} qubits", self.n_qubits)));
        }
        Ok(())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for (i, q) in qubits.iter().enumerate() {
            if *q >= self.n_qubits {
                return Err(Error::Dimension(format!(
                    "qubit {q} outside {} qubits",
                    self.n_qubits
                )));
            }
            if qubits[..i].contains(q) {
                return Err(Error::Layout(format!("gate operand {q} repeated")));
            }
        }
        Ok(())
    }

    pub fn apply_x(&mut self, q: usize) {
        let bit = 1 << q;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                self.amps.swap(b, b | bit);
            }
        }
    }

    pub fn apply_hadamard(&mut self, q: usize) {
        let bit = 1 << q;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let (u, v) = (self.amps[b], self.amps[b | bit]);
                self.amps[b] = (u + v) * h;
                self.amps[b | bit] = (u - v) * h;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (1 << control, 1 << target);
        for b in 0..self.amps.len() {
            if b & c != 0 && b & t == 0 {
                self.amps.swap(b, b | t);
            }
        }
    }

    /// Rotation in the `{|a=0,b=1⟩, |a=1,b=0⟩}` block:
    /// `|01⟩ ↦ c|01⟩ − s|10⟩`, `|10⟩ ↦ s|01⟩ + c|10⟩`.
    pub fn apply_givens(&mut self, a: usize, b: usize, theta: f64) {
        self.apply_givens_masked(a, b, theta, 0);
    }

    fn apply_givens_masked(&mut self, a: usize, b: usize, theta: f64, control_mask: usize) {
        let (ba, bb) = (1 << a, 1 << b);
        let (s, c) = theta.sin_cos();
        for i in 0..self.amps.len() {
            // i has a = 0, b = 1 ("01"); its partner has a = 1, b = 0 ("10").
            if i & ba == 0 && i & bb != 0 && i & control_mask == control_mask {
                let j = (i | ba) & !bb;
                let (v01, v10) = (self.amps[i], self.amps[j]);
                self.amps[i] = v01 * c + v10 * s;
                self.amps[j] = v10 * c - v01 * s;
            }
        }
    }

    pub fn apply_controlled_givens(&mut self, control: usize, a: usize, b: usize, theta: f64) {
        self.apply_givens_masked(a, b, theta, 1 << control);
    }

    /// Amplitudes zeroed wherever any qubit in `mask` is set.
    fn masked_out(&self, mask: usize) -> Vec<Complex64> {
        self.amps
            .iter()
            .enumerate()
            .map(|(b, a)| if b & mask == 0 { *a } else { ZERO })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    PauliX,
    Hadamard,
    Cnot,
    Givens,
    ControlledGivens,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::PauliX | GateKind::Hadamard => 1,
            GateKind::Cnot | GateKind::Givens => 2,
            GateKind::ControlledGivens => 3,
        }
    }

    pub fn takes_angle(self) -> bool {
        matches!(self, GateKind::Givens | GateKind::ControlledGivens)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::PauliX => "X",
            GateKind::Hadamard => "H",
            GateKind::Cnot => "CNOT",
            GateKind::Givens => "GIVENS",
            GateKind::ControlledGivens => "CGIVENS",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s.to_ascii_uppercase().as_str() {
            "X" => GateKind::PauliX,
            "H" => GateKind::Hadamard,
            "CNOT" | "CX" => GateKind::Cnot,
            "GIVENS" => GateKind::Givens,
            "CGIVENS" => GateKind::ControlledGivens,
            _ => return None,
        })
    }
}

/// Where a gate angle comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum AngleSlot {
    Fixed(f64),
    /// Index into the circuit's parameter table.
    Param(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// Operands, control first where applicable.
    pub qubits: Vec<usize>,
    pub angle: Option<AngleSlot>,
}

impl Gate {
    pub fn x(q: usize) -> Self {
        Gate {
            kind: GateKind::PauliX,
            qubits: vec![q],
            angle: None,
        }
    }

    pub fn hadamard(q: usize) -> Self {
        Gate {
            kind: GateKind::Hadamard,
            qubits: vec![q],
            angle: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate {
            kind: GateKind::Cnot,
            qubits: vec![control, target],
            angle: None,
        }
    }

    pub fn givens(a: usize, b: usize, angle: AngleSlot) -> Self {
        Gate {
            kind: GateKind::Givens,
            qubits: vec![a, b],
            angle: Some(angle),
        }
    }

    pub fn controlled_givens(control: usize, a: usize, b: usize, angle: AngleSlot) -> Self {
        Gate {
            kind: GateKind::ControlledGivens,
            qubits: vec![control, a, b],
            angle: Some(angle),
        }
    }

    fn resolve(&self, params: &[f64]) -> Result<f64> {
        match &self.angle {
            None => Ok(0.0),
            Some(AngleSlot::Fixed(v)) => Ok(*v),
            Some(AngleSlot::Param(i)) => params.get(*i).copied().ok_or_else(|| {
                Error::Parameter(format!("parameter slot {i} has no value"))
            }),
        }
    }

    /// Dense unitary on the gate operands, first operand as the high bit.
    pub fn local_matrix(&self, theta: f64) -> DMatrix<Complex64> {
        let k = self.kind.arity();
        let dim = 1 << k;
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut s = Statevector::basis(k, reverse_bits(col, k)).unwrap();
            let local: Vec<usize> = (0..k).collect();
            let g = Gate {
                kind: self.kind,
                qubits: local,
                angle: Some(AngleSlot::Fixed(theta)),
            };
            apply_gate(&mut s, &g, &[]).unwrap();
            for row in 0..dim {
                m[(row, col)] = s.amps[reverse_bits(row, k)];
            }
        }
        m
    }
}

/// Maps "operand 0 is the high bit" indices to little-endian indices.
fn reverse_bits(i: usize, k: usize) -> usize {
    (0..k).fold(0, |acc, bit| acc | (((i >> (k - 1 - bit)) & 1) << bit))
}

/// Applies one gate in place; `params` resolves parameter slots.
pub fn apply_gate(state: &mut Statevector, gate: &Gate, params: &[f64]) -> Result<()> {
    if gate.qubits.len() != gate.kind.arity() {
        return Err(Error::Layout(format!(
            "{} takes {} operands, got {}",
            gate.kind.name(),
            gate.kind.arity(),
            gate.qubits.len()
        )));
    }
    state.check_qubits(&gate.qubits)?;
    let theta = gate.resolve(params)?;
    let q = &gate.qubits;
    match gate.kind {
        GateKind::PauliX => state.apply_x(q[0]),
        GateKind::Hadamard => state.apply_hadamard(q[0]),
        GateKind::Cnot => state.apply_cnot(q[0], q[1]),
        GateKind::Givens => state.apply_givens(q[0], q[1], theta),
        GateKind::ControlledGivens => state.apply_controlled_givens(q[0], q[1], q[2], theta),
    }
    Ok(())
}

/// Ordered gate list with a named parameter table.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    names: Vec<String>,
    values: Vec<f64>,
    index: HashMap<String, usize>,
}

impl ParamCircuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Dimension(format!(
                "{n_qubits} qubits exceed the {MAX_QUBITS}-qubit cap"
            )));
        }
        Ok(ParamCircuit {
            n_qubits,
            gates: Vec::new(),
            names: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn param_values(&self) -> &[f64] {
        &self.values
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Registers a named parameter and returns its slot.
    pub fn add_param(&mut self, name: &str, value: f64) -> Result<usize> {
        if self.index.contains_key(name) {
            return Err(Error::Parameter(format!("parameter `{name}` declared twice")));
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.values.push(value);
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::Parameter(format!(
                "expected {} parameter values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        self.values.copy_from_slice(values);
        Ok(())
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self
            .param_index(name)
            .ok_or_else(|| Error::Parameter(format!("unknown parameter `{name}`")))?;
        self.values[i] = value;
        Ok(())
    }

    /// Appends a gate after checking operands and parameter references.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if gate.qubits.len() != gate.kind.arity() {
            return Err(Error::Layout(format!(
                "{} takes {} operands",
                gate.kind.name(),
                gate.kind.arity()
            )));
        }
        for (i, q) in gate.qubits.iter().enumerate() {
            if *q >= self.n_qubits || gate.qubits[..i].contains(q) {
                return Err(Error::Layout(format!(
                    "bad operand {q} for {}",
                    gate.kind.name()
                )));
            }
        }
        if gate.kind.takes_angle() != gate.angle.is_some() {
            return Err(Error::Layout(format!(
                "angle slot mismatch for {}",
                gate.kind.name()
            )));
        }
        if let Some(AngleSlot::Param(i)) = gate.angle {
            if i >= self.names.len() {
                return Err(Error::Parameter(format!("parameter slot {i} is not declared")));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Prepends a gate (used to seed trial states).
    pub fn prepend(&mut self, gate: Gate) -> Result<()> {
        self.push(gate)?;
        let g = self.gates.pop().unwrap();
        self.gates.insert(0, g);
        Ok(())
    }

    /// Runs the circuit with explicit parameter values.
    pub fn run_with(&self, params: &[f64], initial: &Statevector) -> Result<Statevector> {
        if initial.n_qubits != self.n_qubits {
            return Err(Error::Dimension(format!(
                "circuit on {} qubits, state on {}",
                self.n_qubits, initial.n_qubits
            )));
        }
        let mut s = initial.clone();
        for g in &self.gates {
            apply_gate(&mut s, g, params)?;
        }
        debug_assert!((s.norm_sqr() - 1.0).abs() < NORM_TOLERANCE);
        Ok(s)
    }

    pub fn gate_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for g in &self.gates {
            *m.entry(g.kind.name()).or_default() += 1;
        }
        m
    }

    /// Line-based text form:
    /// `QUBITS n`, then `PARAM name value` lines, then
    /// `GATE kind q0 [q1 [q2]] [angle|$param]` lines.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse_text(text: &str) -> Result<ParamCircuit> {
        let mut circuit: Option<ParamCircuit> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "QUBITS" => {
                    let n = toks
                        .get(1)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err("bad QUBITS line".into()))?;
                    circuit = Some(ParamCircuit::new(n)?);
                }
                "PARAM" => {
                    let c = circuit.as_mut().ok_or_else(|| err("PARAM before QUBITS".into()))?;
                    let (name, value) = match toks.as_slice() {
                        [_, name, value] => (*name, value.parse::<f64>().ok()),
                        _ => return Err(err("expected `PARAM name value`".into())),
                    };
                    let value = value.ok_or_else(|| err("bad parameter value".into()))?;
                    c.add_param(name, value)?;
                }
                "GATE" => {
                    let c = circuit.as_mut().ok_or_else(|| err("GATE before QUBITS".into()))?;
                    let kind = toks
                        .get(1)
                        .and_then(|k| GateKind::from_name(k))
                        .ok_or_else(|| err("unknown gate kind".into()))?;
                    let k = kind.arity();
                    let expected = 2 + k + usize::from(kind.takes_angle());
                    if toks.len() != expected {
                        return Err(err(format!("{} expects {expected} fields", kind.name())));
                    }
                    let qubits = toks[2..2 + k]
                        .iter()
                        .map(|t| t.parse().map_err(|_| err(format!("bad qubit `{t}`"))))
                        .collect::<Result<Vec<usize>>>()?;
                    let angle = if kind.takes_angle() {
                        let t = toks[2 + k];
                        Some(match t.strip_prefix('$') {
                            Some(name) => AngleSlot::Param(c.param_index(name).ok_or_else(
                                || Error::Parameter(format!("unknown parameter `{name}`")),
                            )?),
                            None => AngleSlot::Fixed(
                                t.parse().map_err(|_| err(format!("bad angle `{t}`")))?,
                            ),
                        })
                    } else {
                        None
                    };
                    c.push(Gate {
                        kind,
                        qubits,
                        angle,
                    })?;
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        circuit.ok_or_else(|| Error::Parse {
            line: 0,
            message: "missing QUBITS line".into(),
        })
    }
}

impl fmt::Display for ParamCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QUBITS {}", self.n_qubits)?;
        for (n, v) in self.names.iter().zip(&self.values) {
            writeln!(f, "PARAM {n} {v:e}")?;
        }
        for g in &self.gates {
            write!(f, "GATE {}", g.kind.name())?;
            for q in &g.qubits {
                write!(f, " {q}")?;
            }
            match &g.angle {
                Some(AngleSlot::Fixed(v)) => write!(f, " {v:e}")?,
                Some(AngleSlot::Param(i)) => write!(f, " ${}", self.names[*i])?,
                None => {}
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Runs `circuit` with its stored parameter values.
pub fn run_circuit(circuit: &ParamCircuit, initial: &Statevector) -> Result<Statevector> {
    circuit.run_with(circuit.param_values(), initial)
}

/// `⟨ψ|op|ψ⟩`, applying each Pauli term to the state.
pub fn expectation(state: &Statevector, op: &PauliSum) -> Result<Complex64> {
    state.check_width(op.n_qubits())?;
    let mut total = ZERO;
    for (w, c) in op.iter() {
        total += c * word_expectation(&state.amps, w);
    }
    Ok(total)
}

fn word_expectation(amps: &[Complex64], w: &PauliWord) -> Complex64 {
    let (x, z) = (w.x_mask() as usize, w.z_mask() as usize);
    let mut acc = ZERO;
    for (b, a) in amps.iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let v = amps[b ^ x].conj() * a;
        if (b & z).count_ones() % 2 == 1 {
            acc -= v;
        } else {
            acc += v;
        }
    }
    let iy = crate::pauli::Phase::from_exponent(w.y_count() as u8).to_complex();
    acc * iy
}

/// Entries above which [`CompiledObservable`] falls back to per-term loops.
const DIAGONAL_TABLE_LIMIT: usize = 1 << 22;

/// A [`PauliSum`] grouped by X-mask for repeated expectation values.
///
/// Terms sharing an X-mask act as `D_x` followed by a bit flip, where `D_x`
/// is diagonal; for small registers the diagonals are tabulated.
#[derive(Clone, Debug)]
pub struct CompiledObservable {
    n_qubits: usize,
    groups: Vec<ObservableGroup>,
}

#[derive(Clone, Debug)]
struct ObservableGroup {
    x: usize,
    terms: Vec<(usize, Complex64)>,
    diagonal: Option<Vec<Complex64>>,
}

impl CompiledObservable {
    pub fn new(op: &PauliSum) -> Result<Self> {
        if op.n_qubits() > MAX_QUBITS {
            return Err(Error::Dimension(format!("{} qubits", op.n_qubits())));
        }
        let mut by_x: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (w, c) in op.iter() {
            let iy = crate::pauli::Phase::from_exponent(w.y_count() as u8).to_complex();
            by_x.entry(w.x_mask() as usize)
                .or_default()
                .push((w.z_mask() as usize, c * iy));
        }
        let dim = 1usize << op.n_qubits();
        let tabulate = dim.saturating_mul(by_x.len()) <= DIAGONAL_TABLE_LIMIT;
        let groups = by_x
            .into_iter()
            .map(|(x, terms)| {
                let diagonal = tabulate.then(|| {
                    (0..dim)
                        .map(|b| {
                            terms
                                .iter()
                                .map(|(z, c)| if (b & z).count_ones() % 2 == 1 { -c } else { *c })
                                .sum()
                        })
                        .collect()
                });
                ObservableGroup { x, terms, diagonal }
            })
            .collect();
        Ok(CompiledObservable {
            n_qubits: op.n_qubits(),
            groups,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn expectation(&self, state: &Statevector) -> Result<Complex64> {
        state.check_width(self.n_qubits)?;
        Ok(self.expectation_amps(&state.amps))
    }

    fn expectation_amps(&self, amps: &[Complex64]) -> Complex64 {
        let mut total = ZERO;
        for g in &self.groups {
            for (b, a) in amps.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let d = match &g.diagonal {
                    Some(d) => d[b],
                    None => g
                        .terms
                        .iter()
                        .map(|(z, c)| if (b & z).count_ones() % 2 == 1 { -c } else { *c })
                        .sum(),
                };
                total += amps[b ^ g.x].conj() * d * a;
            }
        }
        total
    }

    /// Coherent-summation value; see [`coherent_summation`].
    pub fn coherent_summation(&self, state: &Statevector, ancillas: &[usize]) -> Result<f64> {
        state.check_width(self.n_qubits)?;
        let mask = ancilla_mask(state, ancillas)?;
        if self.groups.iter().any(|g| g.x & mask != 0)
            || self
                .groups
                .iter()
                .any(|g| g.terms.iter().any(|(z, _)| z & mask != 0))
        {
            return Err(Error::Layout("observable acts on an ancilla qubit".into()));
        }
        Ok(self.summed(state, ancillas, mask))
    }

    fn summed(&self, state: &Statevector, ancillas: &[usize], mask: usize) -> f64 {
        if ancillas.is_empty() {
            return self.expectation_amps(&state.amps).re;
        }
        let mut s = state.clone();
        for q in ancillas {
            s.apply_hadamard(*q);
        }
        let kept = s.masked_out(mask);
        self.expectation_amps(&kept).re * (1u64 << ancillas.len()) as f64
    }
}

fn ancilla_mask(state: &Statevector, ancillas: &[usize]) -> Result<usize> {
    state.check_qubits(ancillas)?;
    Ok(ancillas.iter().fold(0, |m, q| m | (1 << q)))
}

/// `⟨ψ|(I+X)^{⊗a} ⊗ H|ψ⟩` for ancilla qubits `ancillas`.
///
/// Writing `|ψ⟩ = Σ_i |i⟩_anc ⊗ |ψ_i⟩` with unnormalised branches `|ψ_i⟩`,
/// the value is `Σ_ij ⟨ψ_i|H|ψ_j⟩`. It is obtained by applying a Hadamard
/// to every ancilla, keeping the all-zero ancilla slice and scaling by `2^a`.
pub fn coherent_summation(state: &Statevector, ancillas: &[usize], h: &PauliSum) -> Result<f64> {
    let mask = ancilla_mask(state, ancillas)?;
    if h.iter().any(|(w, _)| w.support() as usize & mask != 0) {
        return Err(Error::Layout("Hamiltonian acts on an ancilla qubit".into()));
    }
    CompiledObservable::new(h)?.coherent_summation(state, ancillas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn givens_zero_is_identity() {
        let mut s = Statevector::basis(2, 0b10).unwrap();
        s.apply_givens(0, 1, 0.0);
        assert_eq!(s, Statevector::basis(2, 0b10).unwrap());
    }

    #[test]
    fn givens_quarter_turn() {
        // Operand order (a, b) = (1, 0): "|01⟩" is a = 0, b = 1, i.e. qubit 0 set.
        let mut s = Statevector::basis(2, 0b01).unwrap();
        s.apply_givens(1, 0, FRAC_PI_2);
        assert!(close(s.amplitude(0b10), -ONE));
        assert!(s.amplitude(0b01).norm() < 1e-15);

        let mut s = Statevector::basis(2, 0b10).unwrap();
        s.apply_givens(1, 0, FRAC_PI_2);
        assert!(close(s.amplitude(0b01), ONE));
    }

    #[test]
    fn cnot_flips_target() {
        let mut s = Statevector::basis(2, 0b01).unwrap();
        apply_gate(&mut s, &Gate::cnot(0, 1), &[]).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b11).unwrap());
    }

    #[test]
    fn x_on_qubit_zero_sets_lowest_bit() {
        let mut c = ParamCircuit::new(3).unwrap();
        c.push(Gate::x(0)).unwrap();
        let out = run_circuit(&c, &Statevector::zero(3).unwrap()).unwrap();
        assert_eq!(out, Statevector::basis(3, 1).unwrap());
        let empty = ParamCircuit::new(3).unwrap();
        let init = Statevector::basis(3, 5).unwrap();
        assert_eq!(run_circuit(&empty, &init).unwrap(), init);
    }

    #[test]
    fn angle_addition() {
        let mut c = ParamCircuit::new(2).unwrap();
        let t1 = c.add_param("t1", 0.3).unwrap();
        let t2 = c.add_param("t2", -1.1).unwrap();
        c.push(Gate::givens(1, 0, AngleSlot::Param(t1))).unwrap();
        c.push(Gate::givens(1, 0, AngleSlot::Param(t2))).unwrap();
        let out = run_circuit(&c, &Statevector::basis(2, 0b01).unwrap()).unwrap();
        let t = 0.3 - 1.1f64;
        assert!(close(out.amplitude(0b01), Complex64::new(t.cos(), 0.0)));
        assert!(close(out.amplitude(0b10), Complex64::new(-t.sin(), 0.0)));
    }

    #[test]
    fn unresolved_parameter() {
        let g = Gate::givens(0, 1, AngleSlot::Param(3));
        let mut s = Statevector::zero(2).unwrap();
        assert!(matches!(apply_gate(&mut s, &g, &[0.0]), Err(Error::Parameter(_))));
        let mut c = ParamCircuit::new(2).unwrap();
        assert!(matches!(c.push(g), Err(Error::Parameter(_))));
    }

    #[test]
    fn simple_expectations() {
        let z = PauliSum::from_real_terms(1, &[(1.0, "Z0")]).unwrap();
        let x = PauliSum::from_real_terms(1, &[(1.0, "X0")]).unwrap();
        let zero = Statevector::zero(1).unwrap();
        assert!(close(expectation(&zero, &z).unwrap(), ONE));
        let mut plus = zero.clone();
        plus.apply_hadamard(0);
        assert!(close(expectation(&plus, &x).unwrap(), ONE));
        assert!(close(CompiledObservable::new(&x).unwrap().expectation(&plus).unwrap(), ONE));
    }

    #[test]
    fn coherent_summation_examples() {
        let h = PauliSum::from_real_terms(3, &[(0.7, "Z0"), (0.2, "X0")]).unwrap();
        // Ancilla qubit 2 in |0⟩: plain expectation.
        let mut s = Statevector::zero(3).unwrap();
        s.apply_hadamard(0);
        let plain = expectation(&s, &h).unwrap().re;
        assert!((coherent_summation(&s, &[2], &h).unwrap() - plain).abs() < 1e-12);

        let id = PauliSum::identity(3);
        let zero = Statevector::zero(3).unwrap();
        assert!((coherent_summation(&zero, &[1, 2], &id).unwrap() - 1.0).abs() < 1e-12);

        assert!(matches!(
            coherent_summation(&zero, &[0], &h),
            Err(Error::Layout(_))
        ));
    }

    #[test]
    fn two_branch_sum() {
        // (|0⟩|φ0⟩ + |1⟩|φ1⟩)/√2 with φ0 = |0⟩, φ1 = |1⟩ on the system qubit 0.
        let h = PauliSum::from_real_terms(2, &[(0.4, "Z0"), (0.3, "X0"), (-0.1, "I")]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![ZERO; 4];
        amps[0b00] = Complex64::new(r, 0.0);
        amps[0b11] = Complex64::new(r, 0.0);
        let s = Statevector::from_amplitudes(amps).unwrap();
        // ½(⟨0|H|0⟩ + 2⟨0|H|1⟩ + ⟨1|H|1⟩) = ½(0.3 + 0.6 − 0.5)
        let expected = 0.5 * ((0.4 - 0.1) + 2.0 * 0.3 + (-0.4 - 0.1));
        assert!((coherent_summation(&s, &[1], &h).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let mut c = ParamCircuit::new(3).unwrap();
        let t = c.add_param("theta_0_1", 0.25).unwrap();
        c.push(Gate::x(2)).unwrap();
        c.push(Gate::givens(1, 2, AngleSlot::Param(t))).unwrap();
        c.push(Gate::controlled_givens(0, 1, 2, AngleSlot::Fixed(-0.5))).unwrap();
        c.push(Gate::cnot(2, 0)).unwrap();
        c.push(Gate::hadamard(1)).unwrap();
        let text = c.to_text();
        assert!(text.contains("GATE GIVENS 1 2 $theta_0_1"));
        assert_eq!(ParamCircuit::parse_text(&text).unwrap(), c);
        assert!(ParamCircuit::parse_text("QUBITS 2\nGATE GIVENS 0 1 $nope\n").is_err());
        assert!(matches!(
            ParamCircuit::parse_text("QUBITS 2\nGATE CNOT 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn register_cap() {
        assert!(Statevector::zero(MAX_QUBITS + 1).is_err());
        assert!(ParamCircuit::new(MAX_QUBITS + 1).is_err());
    }
}
