use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use cobyla::{minimize, FailStatus, RhoBeg, StopTols, SuccessStatus};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solver::ConvergenceTrace;

/// How often the folded cost refreshes its reference energy `Ẽ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FoldCadence {
    /// `Ẽ` is the trial's energy at zero parameters and stays put.
    #[default]
    PerTrial,
    /// `Ẽ` is re-measured on every evaluated state, which makes the folded
    /// cost coincide with the variance.
    PerEvaluation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimiserConfig {
    pub initial_trust_radius: f64,
    pub final_trust_radius: f64,
    /// Cap on cost evaluations for a whole solve, summed over rounds and trials.
    pub max_evaluations: usize,
    /// Energy tolerance in Hartree. Variance-type costs stop on an
    /// improvement below its square.
    pub energy_tolerance: f64,
    pub fold_cadence: FoldCadence,
}

impl Default for OptimiserConfig {
    fn default() -> Self {
        OptimiserConfig {
            initial_trust_radius: 0.5,
            final_trust_radius: 1e-8,
            max_evaluations: 100_000,
            energy_tolerance: 1e-12,
            fold_cadence: FoldCadence::PerTrial,
        }
    }
}

impl OptimiserConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.initial_trust_radius, "initial_trust_radius")?;
        positive(self.final_trust_radius, "final_trust_radius")?;
        positive(self.energy_tolerance, "energy_tolerance")?;
        if self.final_trust_radius > self.initial_trust_radius {
            return Err(Error::Parameter(
                "final_trust_radius exceeds initial_trust_radius".into(),
            ));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Parameter("max_evaluations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one COBYLA run.
#[derive(Clone, Debug)]
pub(crate) struct Minimum {
    pub params: Vec<f64>,
}

/// Shared evaluation counter and trace for one solve.
pub(crate) struct Recorder {
    pub trace: RefCell<ConvergenceTrace>,
    pub used: Cell<usize>,
    pub budget: usize,
}

impl Recorder {
    pub fn new(budget: usize) -> Self {
        Recorder {
            trace: RefCell::new(ConvergenceTrace::new()),
            used: Cell::new(0),
            budget,
        }
    }

    pub fn record(&self, cost: f64, params: &[f64], energies: Vec<f64>) {
        self.used.set(self.used.get() + 1);
        self.trace.borrow_mut().push(cost, params.to_vec(), energies);
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.used.get())
    }

    pub fn exhausted(&self, context: &str) -> Error {
        Error::Convergence {
            message: format!(
                "{context}: evaluation budget of {} exhausted before the tolerance was met",
                self.budget
            ),
            trace: Box::new(self.trace.borrow().clone()),
        }
    }
}

/// Minimises `f` from `x0` with COBYLA, unconstrained apart from ±4π boxes.
///
/// `f` returns the cost; any error it raises aborts the run and is returned.
pub(crate) fn cobyla_minimise<F>(
    f: F,
    x0: &[f64],
    cfg: &OptimiserConfig,
    ftol: f64,
    rec: &Recorder,
    context: &str,
) -> Result<Minimum>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let budget = rec.remaining();
    if budget == 0 {
        return Err(rec.exhausted(context));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let objective = |x: &[f64], _: &mut ()| -> f64 {
        if failure.borrow().is_some() {
            return f64::MAX;
        }
        match f(x) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                f64::MAX
            }
        }
    };
    let bounds = vec![(-4.0 * PI, 4.0 * PI); x0.len()];
    let tols = StopTols {
        ftol_rel: 0.0,
        ftol_abs: ftol,
        xtol_rel: 0.0,
        xtol_abs: vec![cfg.final_trust_radius; x0.len()],
    };
    let outcome = minimize(
        objective,
        x0,
        &bounds,
        &[] as &[fn(&[f64], &mut ()) -> f64],
        (),
        budget,
        RhoBeg::All(cfg.initial_trust_radius),
        Some(tols),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    match outcome {
        Ok((SuccessStatus::MaxEvalReached, _, _)) => Err(rec.exhausted(context)),
        Ok((_, params, _)) | Err((FailStatus::RoundoffLimited, params, _)) => Ok(Minimum { params }),
        Err((status, _, _)) => Err(Error::Convergence {
            message: format!("{context}: COBYLA stopped with {status:?}"),
            trace: Box::new(rec.trace.borrow().clone()),
        }),
    }
}

/// Central-difference step for the gradient in [`newton_refine`]; near the
/// cube root of machine epsilon, which balances rounding and truncation.
const GRADIENT_STEP: f64 = 1e-5;
/// Step for the Hessian, which only has to be roughly right.
const HESSIAN_STEP: f64 = 1e-3;
/// A Newton step longer than this (radians) means the start point was not
/// in the quadratic basin, so the refinement is abandoned.
const NEWTON_REACH: f64 = 1e-3;

/// One Newton step from a COBYLA optimum, with central-difference
/// derivatives.
///
/// COBYLA works from cost values alone and stalls where the cost is flat
/// to machine precision, roughly `sqrt(ε / curvature)` ≈ 1e-8 rad from the
/// minimum. Differences over a finite step resolve the gradient far below
/// that, so one step lands within about 1e-10 rad. `fx` is `f(x)`. The step
/// costs `2m² + 2m + 1` evaluations; it is skipped when fewer remain in the
/// budget, when the Hessian is not positive definite, when the step would
/// leave the basin, or when it raises the cost. `x` is returned unchanged
/// in those cases.
pub(crate) fn newton_refine<F>(f: F, x: Vec<f64>, fx: f64, rec: &Recorder) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let m = x.len();
    if m == 0 || rec.remaining() < 2 * m * m + 2 * m + 1 {
        return Ok(x);
    }
    let at = |moves: &[(usize, f64)]| {
        let mut y = x.clone();
        for (i, d) in moves {
            y[*i] += d;
        }
        f(&y)
    };
    let (g, h) = (GRADIENT_STEP, HESSIAN_STEP);
    let mut grad = DVector::zeros(m);
    let mut hess = DMatrix::zeros(m, m);
    for j in 0..m {
        grad[j] = (at(&[(j, g)])? - at(&[(j, -g)])?) / (2.0 * g);
        hess[(j, j)] = (at(&[(j, h)])? - 2.0 * fx + at(&[(j, -h)])?) / (h * h);
        for l in 0..j {
            let v = (at(&[(j, h), (l, h)])? - at(&[(j, h), (l, -h)])? - at(&[(j, -h), (l, h)])?
                + at(&[(j, -h), (l, -h)])?)
                / (4.0 * h * h);
            hess[(j, l)] = v;
            hess[(l, j)] = v;
        }
    }
    let Some(chol) = hess.cholesky() else {
        return Ok(x);
    };
    let step = chol.solve(&(-grad));
    if step.amax().is_nan() || step.amax() > NEWTON_REACH {
        return Ok(x);
    }
    let next: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
    if f(&next)? > fx + 1e-14 * fx.abs().max(1.0) {
        return Ok(x);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let cfg = OptimiserConfig::default();
        let rec = Recorder::new(cfg.max_evaluations);
        let m = cobyla_minimise(
            |x| {
                let c = (x[0] - 1.0).powi(2) + (x[1] + 0.5).powi(2);
                rec.record(c, x, vec![]);
                Ok(c)
            },
            &[0.0, 0.0],
            &cfg,
            1e-14,
            &rec,
            "bowl",
        )
        .unwrap();
        assert!((m.params[0] - 1.0).abs() < 1e-6);
        assert!((m.params[1] + 0.5).abs() < 1e-6);
        assert_eq!(rec.used.get(), rec.trace.borrow().len());
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let cfg = OptimiserConfig {
            max_evaluations: 5,
            ..Default::default()
        };
        let rec = Recorder::new(cfg.max_evaluations);
        let err = cobyla_minimise(
            |x| {
                let c = x[0].cos() + x[1].sin();
                rec.record(c, x, vec![]);
                Ok(c)
            },
            &[0.3, 0.2],
            &cfg,
            1e-14,
            &rec,
            "capped",
        )
        .unwrap_err();
        match err {
            Error::Convergence { trace, .. } => assert_eq!(trace.len(), 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn objective_errors_propagate() {
        let cfg = OptimiserConfig::default();
        let rec = Recorder::new(100);
        let err = cobyla_minimise(
            |_| Err(Error::Domain("boom".into())),
            &[0.0],
            &cfg,
            1e-10,
            &rec,
            "err",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn newton_refine_polishes_a_near_minimum() {
        let f = |x: &[f64]| {
            -1.0 + 0.7 * (2.0 * x[0] - 0.3).cos() + 0.4 * (2.0 * x[1] + 0.2).sin()
                + 0.1 * (x[0] - 0.15).cos() * (x[1] + 0.1 + PI / 4.0).sin()
        };
        // the coupling term is stationary at the same point
        let exact = [(0.3 + PI) / 2.0, (-0.2 - PI / 2.0) / 2.0];
        let start = vec![exact[0] + 2e-6, exact[1] - 3e-6];
        let rec = Recorder::new(1000);
        let x = newton_refine(
            |x| {
                let v = f(x);
                rec.record(v, x, vec![]);
                Ok(v)
            },
            start.clone(),
            f(&start),
            &rec,
        )
        .unwrap();
        assert_eq!(rec.used.get(), 2 * 4 + 2 * 2 + 1);
        assert!((x[0] - exact[0]).abs() < 1e-10 && (x[1] - exact[1]).abs() < 1e-10);
        let far = vec![exact[0] + 0.5, exact[1]];
        let x = newton_refine(|x| Ok(f(x)), far.clone(), f(&far), &Recorder::new(1000)).unwrap();
        assert_eq!(x, far);
        let tight = Recorder::new(12);
        assert_eq!(newton_refine(|x| Ok(f(x)), start.clone(), f(&start), &tight).unwrap(), start);
    }

    #[test]
    fn config_validation() {
        assert!(OptimiserConfig::default().validate().is_ok());
        let bad = OptimiserConfig {
            final_trust_radius: 1.0,
            initial_trust_radius: 0.1,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Parameter(_))));
        let bad = OptimiserConfig {
            energy_tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
