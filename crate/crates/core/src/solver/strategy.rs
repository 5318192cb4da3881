use nalgebra::DMatrix;

use crate::ansatz::{build_ansatz, build_cascade, extract_rotation_matrix, Ansatz, RegisterLayout};
use crate::error::{Error, Result};
use crate::solver::cost::{CostKind, CostOperators};
use crate::solver::optimise::{cobyla_minimise, newton_refine, FoldCadence, OptimiserConfig, Recorder};
use crate::solver::ConvergenceTrace;
use crate::statevector::Statevector;

/// Residual variance (Ha²) above which a converged single-state solution
/// is flagged as not being an eigenstate.
pub const EIGENSTATE_VARIANCE: f64 = 1e-10;

/// Result of one variational solve over a layout.
#[derive(Clone, Debug)]
pub struct Solution {
    pub kind: CostKind,
    /// Converged energies, ascending.
    pub energies: Vec<f64>,
    /// `rotation[(j, i)]` is the amplitude of layout trial `j` in eigenstate `i`.
    pub rotation: DMatrix<f64>,
    /// Cascade position → layout trial, sorted by zero-parameter energy.
    pub order: Vec<usize>,
    /// One angle set for shared-rotation strategies; for single-state
    /// strategies one per eigenstate, aligned with `energies`.
    pub params: Vec<Vec<f64>>,
    /// Zero-parameter energy of each layout trial.
    pub reference_energies: Vec<f64>,
    pub evaluations: usize,
    pub trace: ConvergenceTrace,
    pub warnings: Vec<String>,
}

impl Solution {
    /// Mutual overlaps of the solution vectors, `max |⟨ψ_a|ψ_b⟩|` over `a ≠ b`.
    pub fn max_cross_overlap(&self) -> f64 {
        let g = self.rotation.transpose() * &self.rotation;
        let mut worst: f64 = 0.0;
        for a in 0..g.nrows() {
            for b in 0..g.ncols() {
                if a != b {
                    worst = worst.max(g[(a, b)].abs());
                }
            }
        }
        worst
    }
}

/// Runs the strategy selected by `kind`.
pub fn solve(
    kind: CostKind,
    ops: &CostOperators,
    layout: &RegisterLayout,
    cfg: &OptimiserConfig,
) -> Result<Solution> {
    cfg.validate()?;
    if kind.needs_hph() && ops.hph.is_none() {
        return Err(Error::Domain(format!("{kind} cost needs a projector")));
    }
    if ops.ancillas() != layout.eigenstate_qubits() {
        return Err(Error::Layout(
            "cost operators and layout disagree on the eigenstate qubits".into(),
        ));
    }
    match kind {
        CostKind::Subspace => subspace_optimise(ops, layout, cfg),
        CostKind::SumOfVariances => sum_of_variances_optimise(ops, layout, cfg),
        CostKind::Variance | CostKind::Folded => single_state_optimise(kind, ops, layout, cfg),
    }
}

/// Energy of every layout trial with all angles at zero, and the induced
/// order (ascending energy, ties to the lower index).
fn reference_order(ops: &CostOperators, layout: &RegisterLayout) -> Result<(Vec<f64>, Vec<usize>)> {
    let k = layout.k();
    let identity: Vec<usize> = (0..k).collect();
    let energies = if k == 1 {
        vec![ops.energy(&single_trial_state(layout)?)?]
    } else {
        let ansatz = build_ansatz(layout, &build_cascade(k)?, &identity)?;
        let zeros = vec![0.0; ansatz.cascade.n_params()];
        (0..k)
            .map(|j| ops.energy(&ansatz.state(j, &zeros)?))
            .collect::<Result<Vec<_>>>()?
    };
    let mut order = identity;
    order.sort_by(|a, b| energies[*a].total_cmp(&energies[*b]).then(a.cmp(b)));
    Ok((energies, order))
}

/// The lone trial of a one-branch layout, prepared without any cascade.
fn single_trial_state(layout: &RegisterLayout) -> Result<Statevector> {
    let mut s = Statevector::basis(layout.n_qubits(), 1 << layout.seeds()[0])?;
    for q in layout.occupied(0) {
        if q != layout.seeds()[0] {
            s.apply_cnot(layout.seeds()[0], q);
        }
    }
    Ok(s)
}

/// Maps a position-indexed cascade matrix onto layout rows and columns.
fn to_layout(c: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    let k = order.len();
    let mut r = DMatrix::zeros(k, k);
    for m in 0..k {
        for p in 0..k {
            r[(order[m], order[p])] = c[(m, p)];
        }
    }
    r
}

/// Sorts `(energy, column)` pairs ascending and assembles the outputs.
fn sorted_columns(energies: &[f64], columns: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..energies.len()).collect();
    idx.sort_by(|a, b| energies[*a].total_cmp(&energies[*b]).then(a.cmp(b)));
    let k = columns.first().map_or(0, Vec::len);
    let mut rot = DMatrix::zeros(k, idx.len());
    for (col, &i) in idx.iter().enumerate() {
        for row in 0..k {
            rot[(row, col)] = columns[i][row];
        }
    }
    (idx.iter().map(|i| energies[*i]).collect(), rot, idx)
}

fn finish_shared(
    kind: CostKind,
    ansatz: &Ansatz,
    params: Vec<f64>,
    energies_by_position: Vec<f64>,
    reference_energies: Vec<f64>,
    rec: Recorder,
) -> Result<Solution> {
    let c = extract_rotation_matrix(&ansatz.cascade, &params)?;
    let r = to_layout(&c, &ansatz.order);
    let columns: Vec<Vec<f64>> = ansatz
        .order
        .iter()
        .map(|&t| r.column(t).iter().copied().collect())
        .collect();
    let (energies, rotation, _) = sorted_columns(&energies_by_position, &columns);
    let trace = rec.trace.into_inner();
    Ok(Solution {
        kind,
        energies,
        rotation,
        order: ansatz.order.clone(),
        params: vec![params],
        reference_energies,
        evaluations: trace.len(),
        trace,
        warnings: Vec::new(),
    })
}

fn trivial_solution(kind: CostKind, ops: &CostOperators, layout: &RegisterLayout) -> Result<Solution> {
    let e = ops.energy(&single_trial_state(layout)?)?;
    let mut trace = ConvergenceTrace::new();
    trace.push(e, Vec::new(), vec![e]);
    Ok(Solution {
        kind,
        energies: vec![e],
        rotation: DMatrix::from_element(1, 1, 1.0),
        order: vec![0],
        params: vec![Vec::new()],
        reference_energies: vec![e],
        evaluations: 1,
        trace,
        warnings: Vec::new(),
    })
}

/// Sequential subspace expectation minimisation.
///
/// Round `r` minimises `⟨ψ_r|H|ψ_r⟩` over the angles first used by cascade
/// position `r`. Earlier angles stay frozen, and since `ψ_p` for `p < r`
/// does not depend on later angles, `ψ_r` is confined to the orthogonal
/// complement of the states already found. The last position has no free
/// angle and is read off once.
pub fn subspace_optimise(
    ops: &CostOperators,
    layout: &RegisterLayout,
    cfg: &OptimiserConfig,
) -> Result<Solution> {
    sequential(CostKind::Subspace, ops, layout, cfg)
}

/// Variance or folded-spectrum minimisation, one trial per cascade round.
///
/// The rounds follow [`subspace_optimise`], so every state is orthogonal to
/// the ones before it; only the cost differs. A state whose final variance
/// stays above [`EIGENSTATE_VARIANCE`] is reported in the warnings rather
/// than passed off as an eigenstate.
pub fn single_state_optimise(
    kind: CostKind,
    ops: &CostOperators,
    layout: &RegisterLayout,
    cfg: &OptimiserConfig,
) -> Result<Solution> {
    if !matches!(kind, CostKind::Variance | CostKind::Folded) {
        return Err(Error::Domain(format!("{kind} is not a single-state cost")));
    }
    sequential(kind, ops, layout, cfg)
}

fn sequential(
    kind: CostKind,
    ops: &CostOperators,
    layout: &RegisterLayout,
    cfg: &OptimiserConfig,
) -> Result<Solution> {
    let k = layout.k();
    if k == 1 {
        return trivial_solution(kind, ops, layout);
    }
    let (reference, order) = reference_order(ops, layout)?;
    let cascade = build_cascade(k)?;
    let ansatz = build_ansatz(layout, &cascade, &order)?;
    let rec = Recorder::new(cfg.max_evaluations);
    let tol = cfg.energy_tolerance;
    let ftol = if kind == CostKind::Subspace { tol } else { tol * tol };
    let mut params = vec![0.0; cascade.n_params()];
    let mut known: Vec<f64> = order.iter().map(|t| reference[*t]).collect();
    for r in 0..k {
        let free = cascade.round(r);
        let e_tilde = known[r];
        // Returns (cost, ⟨H⟩, full parameter vector).
        let evaluate = |theta: &[f64]| -> Result<(f64, f64, Vec<f64>)> {
            let mut full = params.clone();
            for (slot, v) in free.iter().zip(theta) {
                full[*slot] = *v;
            }
            let state = ansatz.state_at_position(r, &full)?;
            let (cost, e) = match (kind, cfg.fold_cadence) {
                (CostKind::Subspace, _) => {
                    let e = ops.energy(&state)?;
                    (e, e)
                }
                (CostKind::Folded, FoldCadence::PerTrial) => ops.folded(&state, e_tilde)?,
                (CostKind::Folded, FoldCadence::PerEvaluation) => {
                    let e = ops.energy(&state)?;
                    ops.folded(&state, e)?
                }
                _ => ops.variance(&state)?,
            };
            Ok((cost, e, full))
        };
        let context = format!("{kind} round {r}");
        let theta = if free.is_empty() {
            if rec.remaining() == 0 {
                return Err(rec.exhausted(&context));
            }
            Vec::new()
        } else {
            let x0: Vec<f64> = free.iter().map(|s| params[*s]).collect();
            let recorded = |theta: &[f64]| -> Result<f64> {
                let (cost, e, full) = evaluate(theta)?;
                let mut energies = known.clone();
                energies[r] = e;
                rec.record(cost, &full, energies);
                Ok(cost)
            };
            let theta = cobyla_minimise(recorded, &x0, cfg, ftol, &rec, &context)?.params;
            if kind == CostKind::Subspace {
                let at = recorded(&theta)?;
                newton_refine(recorded, theta, at, &rec)?
            } else {
                theta
            }
        };
        // One verification evaluation at the optimum (the only one for the
        // parameter-free last round).
        let (cost, e, full) = evaluate(&theta)?;
        known[r] = e;
        rec.record(cost, &full, known.clone());
        params = full;
    }
    let mut warnings = Vec::new();
    if kind != CostKind::Subspace {
        for (p, e) in known.iter().enumerate() {
            let (var, _) = ops.variance(&ansatz.state_at_position(p, &params)?)?;
            if var > EIGENSTATE_VARIANCE {
                warnings.push(format!(
                    "state at cascade position {p} (E = {e:.11e}) is not an eigenstate: \
                     residual variance {var:.3e} Ha²"
                ));
            }
        }
    }
    let mut solution = finish_shared(kind, &ansatz, params, known, reference, rec)?;
    solution.warnings = warnings;
    Ok(solution)
}

/// Minimises the summed variance of all trials under one shared cascade.
pub fn sum_of_variances_optimise(
    ops: &CostOperators,
    layout: &RegisterLayout,
    cfg: &OptimiserConfig,
) -> Result<Solution> {
    let k = layout.k();
    if k == 1 {
        return trivial_solution(CostKind::SumOfVariances, ops, layout);
    }
    let (reference, order) = reference_order(ops, layout)?;
    let cascade = build_cascade(k)?;
    let ansatz = build_ansatz(layout, &cascade, &order)?;
    let rec = Recorder::new(cfg.max_evaluations);
    let evaluate = |theta: &[f64]| -> Result<(f64, Vec<f64>)> {
        let states = (0..k)
            .map(|p| ansatz.state_at_position(p, theta))
            .collect::<Result<Vec<_>>>()?;
        ops.sum_of_variances(&states)
    };
    let tol = cfg.energy_tolerance;
    let m = cobyla_minimise(
        |theta| {
            let (cost, energies) = evaluate(theta)?;
            rec.record(cost, theta, energies);
            Ok(cost)
        },
        &vec![0.0; cascade.n_params()],
        cfg,
        tol * tol,
        &rec,
        "sum of variances",
    )?;
    let (_, energies) = evaluate(&m.params)?;
    finish_shared(CostKind::SumOfVariances, &ansatz, m.params, energies, reference, rec)
}

