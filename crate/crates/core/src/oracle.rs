//! Slow, independent checks of the fast paths.
//!
//! Gradients here come only from differencing black-box functional values;
//! nothing is shared with [`crate::solver::discrete_gradient`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{iso_residual, ElForm};
use crate::lagrangian::{Expr, Var};
use crate::solver::{closed_form_example, IsoperimetricProblem};
use crate::timescale::GridFunction;

/// Step used by [`kkt_check`].
pub const FD_STEP: f64 = 1e-6;

/// Central-difference gradient of `map` with respect to the interior values of `y`.
pub fn fd_gradient<F>(map: F, y: &GridFunction, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&GridFunction) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Argument(format!("step must be positive, got {h}")));
    }
    let n = y.values().len();
    let mut probe = y.values().to_vec();
    let mut out = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = map(&GridFunction::new(y.scale().clone(), probe.clone())?)?;
        probe[i] = orig - h;
        let down = map(&GridFunction::new(y.scale().clone(), probe.clone())?)?;
        probe[i] = orig;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Base step used by [`fd_partial`].
pub const PARTIAL_STEP: f64 = 1e-4;

/// Largest disagreement `|D(h) - D(h/2)| / (1 + |D(h/2)|)` between the two
/// extrapolated estimates that [`fd_partial`] still trusts.
pub const PARTIAL_STABILITY: f64 = 1e-9;

/// Richardson-extrapolated central difference `(4 D(h) - D(2h)) / 3` of `e`
/// in `var` at `(t, u, v)`, where `D(h) = (e(x+h) - e(x-h)) / 2h`.
///
/// Returns `None` where the estimate cannot be trusted: the expression fails
/// to evaluate anywhere on the stencil, or the estimates at `h` and `h/2`
/// disagree by more than [`PARTIAL_STABILITY`] (typically near a pole).
pub fn fd_partial(e: &Expr, var: Var, t: f64, u: f64, v: f64) -> Option<f64> {
    let at = |dx: f64| match var {
        Var::T => e.evaluate(t + dx, u, v),
        Var::U => e.evaluate(t, u + dx, v),
        Var::V => e.evaluate(t, u, v + dx),
    };
    let central = |h: f64| Some((at(h).ok()? - at(-h).ok()?) / (2.0 * h));
    let richardson = |h: f64| Some((4.0 * central(h)? - central(2.0 * h)?) / 3.0);
    let coarse = richardson(PARTIAL_STEP)?;
    let fine = richardson(PARTIAL_STEP / 2.0)?;
    ((coarse - fine).abs() <= PARTIAL_STABILITY * (1.0 + fine.abs())).then_some(fine)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub grad_objective: Vec<f64>,
    pub grad_constraint: Vec<f64>,
    /// Least-squares multiplier for `∇L ≈ λ∇K`.
    pub lambda_fit: f64,
    /// `‖∇L - λ∇K‖∞` at the supplied `λ`.
    pub residual_inf_norm: f64,
    /// `‖∇L - λ_fit ∇K‖∞`.
    pub fit_residual_inf_norm: f64,
    /// `|K(y) - k|`.
    pub feasibility_gap: f64,
}

fn kkt_residual(gl: &[f64], gk: &[f64], lambda: f64) -> f64 {
    gl.iter()
        .zip(gk)
        .fold(0.0_f64, |m, (l, k)| m.max((l - lambda * k).abs()))
}

pub fn kkt_check(p: &IsoperimetricProblem, y: &GridFunction, lambda: f64) -> Result<KktReport> {
    p.check_candidate(y)?;
    let grad_objective = fd_gradient(|y| Ok(p.objective.eval_functional(y)?.product), y, FD_STEP)?;
    let grad_constraint =
        fd_gradient(|y| Ok(p.constraint.eval_functional(y)?.product), y, FD_STEP)?;
    let kk: f64 = grad_constraint.iter().map(|k| k * k).sum();
    let lambda_fit = if kk > 0.0 {
        grad_objective
            .iter()
            .zip(&grad_constraint)
            .map(|(l, k)| l * k)
            .sum::<f64>()
            / kk
    } else {
        0.0
    };
    let feasibility_gap = (p.constraint.eval_functional(y)?.product - p.k).abs();
    Ok(KktReport {
        residual_inf_norm: kkt_residual(&grad_objective, &grad_constraint, lambda),
        fit_residual_inf_norm: kkt_residual(&grad_objective, &grad_constraint, lambda_fit),
        lambda_fit,
        feasibility_gap,
        grad_objective,
        grad_constraint,
    })
}

/// Thresholds applied by [`verify_worked_example`].
pub const EXAMPLE_CONSTRAINT_TOL: f64 = 1e-10;
pub const EXAMPLE_KKT_TOL: f64 = 1e-6;
pub const EXAMPLE_DEFECT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleReport {
    pub m: usize,
    pub pass: bool,
    pub y: Vec<f64>,
    pub boundary_error: f64,
    pub constraint_value: f64,
    pub lambda_fit: f64,
    pub solver_lambda: f64,
    pub kkt_residual: f64,
    pub el1_defect: f64,
    pub el2_defect: f64,
    pub failures: Vec<String>,
}

/// End-to-end check of the closed-form extremal of the worked example on
/// `{0, ..., m}`: boundary values, constraint level, oracle KKT residual and
/// the integral residuals with the solver's multiplier.
pub fn verify_worked_example(m: usize) -> Result<ExampleReport> {
    let p = IsoperimetricProblem::worked_example(m)?;
    let (y, meta) = closed_form_example(m)?;
    let vals = y.values();
    let boundary_error = (vals[0] - p.alpha).abs().max((vals[m] - p.beta).abs());
    let constraint_value = p.constraint.eval_functional(&y)?.product;
    let kkt = kkt_check(&p, &y, meta.lambda)?;
    let el1 = iso_residual(
        &p.objective,
        &p.constraint,
        &y,
        1.0,
        meta.lambda,
        ElForm::El1,
    )?;
    let el2 = iso_residual(
        &p.objective,
        &p.constraint,
        &y,
        1.0,
        meta.lambda,
        ElForm::El2,
    )?;

    let mut failures = Vec::new();
    if boundary_error != 0.0 {
        failures.push(format!("boundary values off by {boundary_error:e}"));
    }
    if (constraint_value - p.k).abs() > EXAMPLE_CONSTRAINT_TOL {
        failures.push(format!("constraint value {constraint_value} != {}", p.k));
    }
    if kkt.fit_residual_inf_norm > EXAMPLE_KKT_TOL {
        failures.push(format!(
            "KKT residual {:e} exceeds {EXAMPLE_KKT_TOL:e}",
            kkt.fit_residual_inf_norm
        ));
    }
    for r in [&el1, &el2] {
        if r.defect > EXAMPLE_DEFECT_TOL {
            failures.push(format!(
                "{:?} defect {:e} exceeds {EXAMPLE_DEFECT_TOL:e}",
                r.form, r.defect
            ));
        }
    }
    if !meta.solver_converged {
        failures.push("solver did not converge".to_string());
    }
    Ok(ExampleReport {
        m,
        pass: failures.is_empty(),
        y: vals.to_vec(),
        boundary_error,
        constraint_value,
        lambda_fit: kkt.lambda_fit,
        solver_lambda: meta.lambda,
        kkt_residual: kkt.fit_residual_inf_norm,
        el1_defect: el1.defect,
        el2_defect: el2.defect,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example3() -> (IsoperimetricProblem, GridFunction) {
        let p = IsoperimetricProblem::worked_example(3).unwrap();
        let y = p.embed(&[2.0, 3.0]).unwrap();
        (p, y)
    }

    #[test]
    fn fd_gradients_of_worked_example() {
        let (p, y) = example3();
        let g = fd_gradient(|y| Ok(p.objective.eval_functional(y)?.product), &y, 1e-6).unwrap();
        assert!((g[0] - 26.0).abs() < 1e-4 && (g[1] - 26.0).abs() < 1e-4);
        let g = fd_gradient(|y| Ok(p.constraint.eval_functional(y)?.product), &y, 1e-6).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-8 && (g[1] + 1.0).abs() < 1e-8);
        let g = fd_gradient(|_| Ok(4.2), &y, 1e-6).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(fd_gradient(|_| Ok(0.0), &y, 0.0).is_err());
    }

    #[test]
    fn partials_by_differences() {
        let e = crate::lagrangian::parse("t*u^2+sin(v)").unwrap();
        let du = fd_partial(&e, Var::U, 2.0, 3.0, 0.5).unwrap();
        assert!((du - 12.0).abs() < 1e-9);
        let dv = fd_partial(&e, Var::V, 2.0, 3.0, 0.5).unwrap();
        assert!((dv - 0.5f64.cos()).abs() < 1e-9);
        let dt = fd_partial(&e, Var::T, 2.0, 3.0, 0.5).unwrap();
        assert!((dt - 9.0).abs() < 1e-9);
        // stencil crosses the log singularity
        let e = crate::lagrangian::parse("log(v)").unwrap();
        assert_eq!(fd_partial(&e, Var::V, 0.0, 0.0, 1e-4), None);
        // steep pole: estimates at h and h/2 disagree
        let e = crate::lagrangian::parse("1/(v-0.01)").unwrap();
        assert_eq!(fd_partial(&e, Var::V, 0.0, 0.0, 0.0113), None);
    }

    #[test]
    fn kkt_of_worked_example() {
        let (p, y) = example3();
        let r = kkt_check(&p, &y, -26.0).unwrap();
        assert!(r.residual_inf_norm <= 1e-4);
        assert!(r.feasibility_gap <= 1e-12);
        assert!((r.lambda_fit + 26.0).abs() < 1e-4);

        let r = kkt_check(&p, &y, 0.0).unwrap();
        assert!((r.residual_inf_norm - 26.0).abs() < 1e-4);

        // K = 2·y(3) - y(1) - y(2) = 6 at (0, 0, 0, 3)
        let infeasible = p.embed(&[0.0, 0.0]).unwrap();
        let r = kkt_check(&p, &infeasible, 0.0).unwrap();
        assert!((r.feasibility_gap - 5.0).abs() < 1e-12);
    }

    #[test]
    fn worked_example_end_to_end() {
        let r = verify_worked_example(3).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        assert!((r.lambda_fit + 26.0).abs() < 1e-4);
        let r = verify_worked_example(2).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        assert!(r.lambda_fit.abs() < 1e-6);
        assert!(matches!(verify_worked_example(1), Err(Error::Argument(_))));
    }
}
