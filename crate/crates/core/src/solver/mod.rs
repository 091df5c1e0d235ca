//! Extremals of the isoperimetric problem
//!
//! ```text
//! extr  L(y) = (∫ L_Δ[y] Δt)(∫ L_∇{y} ∇t)
//! s.t.  y(a) = α, y(b) = β,  K(y) = (∫ K_Δ[y] Δt)(∫ K_∇{y} ∇t) = k
//! ```
//!
//! On a finite time scale the unknowns are the interior values of `y`, so
//! the problem is a finite-dimensional constrained stationarity problem.
//! The solver works on that system directly and then certifies the result
//! with the integral Euler–Lagrange residuals from [`crate::functional`].

mod newton;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{
    certify, constant_over_measure, is_extremal_for, DeltaNablaFunctional, EvaluationBreakdown,
};
use crate::lagrangian::Lagrangian;
use crate::timescale::{GridFunction, TimeScale};

pub use newton::NewtonStatus;

/// Solution candidates closer than this (max-abs) are the same point.
pub const DISTINCT_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct IsoperimetricProblem {
    pub scale: Arc<TimeScale>,
    pub alpha: f64,
    pub beta: f64,
    pub objective: DeltaNablaFunctional,
    pub constraint: DeltaNablaFunctional,
    pub k: f64,
}

impl IsoperimetricProblem {
    pub fn new(
        scale: Arc<TimeScale>,
        alpha: f64,
        beta: f64,
        objective: DeltaNablaFunctional,
        constraint: DeltaNablaFunctional,
        k: f64,
    ) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("k", k)] {
            if !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(Self {
            scale,
            alpha,
            beta,
            objective,
            constraint,
            k,
        })
    }

    /// The worked example on `T = {0, 1, ..., m}`:
    /// minimize `(∫ (y^Δ)² Δt)(∫ ((y^∇)² + y^∇) ∇t)` with `y(0) = 0`,
    /// `y(m) = m` and `∫ t y^Δ Δt = 1` (written with `K_∇ = 1/m`).
    pub fn worked_example(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Argument(format!(
                "the worked example needs M >= 2 (an interior point), got {m}"
            )));
        }
        let scale = Arc::new(TimeScale::integers(m)?);
        let objective = DeltaNablaFunctional::parse("v^2", "v^2+v")?;
        let constraint =
            DeltaNablaFunctional::new(Lagrangian::parse("t*v")?, constant_over_measure(&scale));
        Self::new(scale, 0.0, m as f64, objective, constraint, 1.0)
    }

    pub fn interior_len(&self) -> usize {
        self.scale.len() - 2
    }

    /// Embeds interior values between the boundary values.
    pub fn embed(&self, interior: &[f64]) -> Result<GridFunction> {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(self.alpha);
        values.extend_from_slice(interior);
        values.push(self.beta);
        GridFunction::new(Arc::clone(&self.scale), values)
    }

    /// Interior values of the straight line from `(a, α)` to `(b, β)`.
    pub fn linear_guess(&self) -> Vec<f64> {
        let (a, b) = (self.scale.min(), self.scale.max());
        let pts = self.scale.points();
        pts[1..pts.len() - 1]
            .iter()
            .map(|t| self.alpha + (self.beta - self.alpha) * (t - a) / (b - a))
            .collect()
    }

    /// Checks that `y` lives on this problem's scale.
    pub fn check_candidate(&self, y: &GridFunction) -> Result<()> {
        if y.scale().as_ref() != self.scale.as_ref() {
            return Err(Error::Argument(
                "candidate is defined on a different time scale".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Feasibility and stationarity tolerance (absolute).
    pub tol: f64,
    pub max_iter: usize,
    /// Number of randomly perturbed starts in addition to the linear guess.
    pub multistart: usize,
    pub seed: u64,
    /// Half-width of the uniform perturbation of interior values.
    pub spread: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            multistart: 4,
            seed: 0,
            spread: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    /// Not an extremal of the constraint functional.
    Normal,
    /// An extremal of the constraint functional.
    Abnormal,
}

/// What happened to one Newton start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartReport {
    pub index: usize,
    pub status: NewtonStatus,
    pub iterations: usize,
    pub residual_inf: f64,
    /// `‖F‖∞` per accepted iterate.
    pub history: Vec<f64>,
    pub certified: bool,
}

/// A distinct certified stationary point found by some start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub start: usize,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub y: GridFunction,
    pub lambda: f64,
    pub lambda0: f64,
    pub objective_value: EvaluationBreakdown,
    pub constraint_value: EvaluationBreakdown,
    /// Constancy defect of the multiplier residual, worst of both forms.
    pub el_defect: f64,
    pub el1_defect: f64,
    pub el2_defect: f64,
    /// Whether both residual forms agree on stationarity.
    pub forms_consistent: bool,
    /// `‖λ₀∇L - λ∇K‖∞` from the exact discrete gradients.
    pub kkt_residual_norm: f64,
    /// `|K(y) - k|`.
    pub feasibility_gap: f64,
    pub classification: Classification,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the start that produced `y` (0 is the linear guess).
    pub start: usize,
    pub starts: Vec<StartReport>,
    pub stationary_points: Vec<StationaryPoint>,
}

/// Exact gradient of `y ↦ J_Δ(y)·J_∇(y)` with respect to the interior values.
///
/// `y(t_j)` enters the delta sum through `y^σ(t_{j-1})`, `y^Δ(t_{j-1})` and
/// `y^Δ(t_j)`, and the nabla sum through `y^∇(t_j)`, `y^ρ(t_{j+1})` and
/// `y^∇(t_{j+1})`.
pub fn discrete_gradient(f: &DeltaNablaFunctional, y: &GridFunction) -> Result<Vec<f64>> {
    let scale = y.scale();
    let pts = scale.points();
    let vals = y.values();
    let n = pts.len();
    let eval = |l: &Lagrangian, t: f64, u: f64, v: f64| -> Result<(f64, f64, f64)> {
        let wrap = |source| Error::Eval { t, source };
        Ok((
            l.value.evaluate(t, u, v).map_err(wrap)?,
            l.d_u.evaluate(t, u, v).map_err(wrap)?,
            l.d_v.evaluate(t, u, v).map_err(wrap)?,
        ))
    };

    let mut delta = Vec::with_capacity(n - 1);
    let mut delta_factor = 0.0;
    for i in 0..n - 1 {
        let mu = pts[i + 1] - pts[i];
        let (l, du, dv) = eval(&f.delta, pts[i], vals[i + 1], (vals[i + 1] - vals[i]) / mu)?;
        delta_factor += l * mu;
        delta.push((du, dv, mu));
    }
    // index i holds point i; index 0 is unused
    let mut nabla = vec![(0.0, 0.0, 0.0); n];
    let mut nabla_factor = 0.0;
    for i in 1..n {
        let nu = pts[i] - pts[i - 1];
        let (l, du, dv) = eval(&f.nabla, pts[i], vals[i - 1], (vals[i] - vals[i - 1]) / nu)?;
        nabla_factor += l * nu;
        nabla[i] = (du, dv, nu);
    }

    Ok((1..n - 1)
        .map(|j| {
            let (du_prev, dv_prev, mu_prev) = delta[j - 1];
            let (_, dv_here, _) = delta[j];
            let grad_delta = du_prev * mu_prev + dv_prev - dv_here;
            let (_, dv_n, _) = nabla[j];
            let (du_next, dv_next, nu_next) = nabla[j + 1];
            let grad_nabla = dv_n + du_next * nu_next - dv_next;
            nabla_factor * grad_delta + delta_factor * grad_nabla
        })
        .collect())
}

fn starting_points(p: &IsoperimetricProblem, opts: &SolveOptions) -> Vec<Vec<f64>> {
    let base = p.linear_guess();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![base.clone()];
    for _ in 0..opts.multistart {
        let perturbed = base
            .iter()
            .map(|v| {
                if opts.spread > 0.0 {
                    v + rng.gen_range(-opts.spread..=opts.spread)
                } else {
                    *v
                }
            })
            .collect();
        starts.push(perturbed);
    }
    starts
}

/// Stationarity system `[∇L - λ∇K; K - k]` in `z = (interior y, λ)`.
fn normal_system(p: &IsoperimetricProblem, z: &[f64]) -> Result<Vec<f64>> {
    let m = p.interior_len();
    let y = p.embed(&z[..m])?;
    let lambda = z[m];
    let gl = discrete_gradient(&p.objective, &y)?;
    let gk = discrete_gradient(&p.constraint, &y)?;
    let mut out: Vec<f64> = gl.iter().zip(&gk).map(|(l, k)| l - lambda * k).collect();
    out.push(p.constraint.eval_functional(&y)?.product - p.k);
    Ok(out)
}

/// `[∇K; K - k]` in the interior values of `y`.
fn abnormal_system(p: &IsoperimetricProblem, z: &[f64]) -> Result<Vec<f64>> {
    let y = p.embed(z)?;
    let mut out = discrete_gradient(&p.constraint, &y)?;
    out.push(p.constraint.eval_functional(&y)?.product - p.k);
    Ok(out)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Builds the full result for a candidate and decides whether it is certified.
fn assess(
    p: &IsoperimetricProblem,
    y: GridFunction,
    lambda0: f64,
    lambda: f64,
    tol: f64,
) -> Result<SolveResult> {
    let objective_value = p.objective.eval_functional(&y)?;
    let constraint_value = p.constraint.eval_functional(&y)?;
    let cert = certify(&p.objective, &p.constraint, &y, lambda0, lambda, tol)?;
    let gl = discrete_gradient(&p.objective, &y)?;
    let gk = discrete_gradient(&p.constraint, &y)?;
    let kkt_residual_norm = gl
        .iter()
        .zip(&gk)
        .fold(0.0_f64, |m, (l, k)| m.max((lambda0 * l - lambda * k).abs()));
    let feasibility_gap = (constraint_value.product - p.k).abs();
    let abnormal = is_extremal_for(&p.constraint, &y, tol)?.0;
    let converged = feasibility_gap <= tol && cert.defect() <= tol;
    Ok(SolveResult {
        y,
        lambda,
        lambda0,
        objective_value,
        constraint_value,
        el_defect: cert.defect(),
        el1_defect: cert.el1.defect,
        el2_defect: cert.el2.defect,
        forms_consistent: cert.consistent,
        kkt_residual_norm,
        feasibility_gap,
        classification: if abnormal {
            Classification::Abnormal
        } else {
            Classification::Normal
        },
        iterations: 0,
        converged,
        start: 0,
        starts: Vec::new(),
        stationary_points: Vec::new(),
    })
}

struct Candidate {
    result: SolveResult,
    residual_inf: f64,
}

fn run_starts<F>(
    opts: &SolveOptions,
    starts: Vec<Vec<f64>>,
    system: F,
    finish: impl Fn(&[f64]) -> Result<SolveResult>,
) -> (Vec<StartReport>, Vec<Candidate>)
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut reports = Vec::with_capacity(starts.len());
    let mut candidates = Vec::new();
    for (index, z0) in starts.into_iter().enumerate() {
        let out = newton::solve(&system, z0, opts.tol * 1e-3, opts.max_iter);
        let mut certified = false;
        if out.status != NewtonStatus::EvaluationFailed {
            if let Ok(mut result) = finish(&out.z) {
                certified = result.converged;
                result.iterations = out.iterations;
                result.start = index;
                candidates.push(Candidate {
                    result,
                    residual_inf: out.residual_inf,
                });
            }
        }
        reports.push(StartReport {
            index,
            status: out.status,
            iterations: out.iterations,
            residual_inf: out.residual_inf,
            history: out.history,
            certified,
        });
    }
    (reports, candidates)
}

/// Distinct certified points, in start order.
fn distinct(candidates: &[Candidate]) -> Vec<&SolveResult> {
    let mut kept: Vec<&SolveResult> = Vec::new();
    for c in candidates.iter().filter(|c| c.result.converged) {
        if kept
            .iter()
            .all(|k| max_gap(k.y.values(), c.result.y.values()) > DISTINCT_GAP)
        {
            kept.push(&c.result);
        }
    }
    kept
}

/// Solves for a normal extremal and its multiplier `λ` (with `λ₀ = 1`).
///
/// Every start is run; among certified results the one with the smallest
/// objective value is returned. Without any certified result the candidate
/// with the smallest stationarity residual is returned with
/// `converged == false`.
pub fn solve_normal(p: &IsoperimetricProblem, opts: &SolveOptions) -> Result<SolveResult> {
    let m = p.interior_len();
    let starts = starting_points(p, opts)
        .into_iter()
        .map(|mut y| {
            y.push(0.0);
            y
        })
        .collect();
    let (reports, candidates) = run_starts(
        opts,
        starts,
        |z| normal_system(p, z),
        |z| assess(p, p.embed(&z[..m])?, 1.0, z[m], opts.tol),
    );

    let stationary_points: Vec<StationaryPoint> = distinct(&candidates)
        .into_iter()
        .map(|r| StationaryPoint {
            start: r.start,
            y: r.y.values().to_vec(),
            lambda: r.lambda,
            objective: r.objective_value.product,
        })
        .collect();

    let best = candidates
        .iter()
        .filter(|c| c.result.converged)
        .min_by(|a, b| {
            a.result
                .objective_value
                .product
                .total_cmp(&b.result.objective_value.product)
        })
        .or_else(|| {
            candidates
                .iter()
                .min_by(|a, b| a.residual_inf.total_cmp(&b.residual_inf))
        });
    let Some(best) = best else {
        return Err(Error::Argument(
            "no start could be evaluated: the Lagrangians fail on every starting point".into(),
        ));
    };
    let mut result = best.result.clone();
    result.starts = reports;
    result.stationary_points = stationary_points;
    Ok(result)
}

/// Searches for abnormal extremals: feasible points that are extremals of the
/// constraint functional (`λ₀ = 0`, `λ = 1`). Returns every distinct
/// certified point; an empty list means none was found.
pub fn find_abnormal(p: &IsoperimetricProblem, opts: &SolveOptions) -> Result<Vec<SolveResult>> {
    let (reports, candidates) = run_starts(
        opts,
        starting_points(p, opts),
        |z| abnormal_system(p, z),
        |z| {
            let mut r = assess(p, p.embed(z)?, 0.0, 1.0, opts.tol)?;
            r.converged = r.converged && r.classification == Classification::Abnormal;
            Ok(r)
        },
    );
    Ok(distinct(&candidates)
        .into_iter()
        .map(|r| {
            let mut r = r.clone();
            r.starts = reports.clone();
            r
        })
        .collect())
}

/// Values and multiplier accompanying [`closed_form_example`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExampleMeta {
    pub m: usize,
    /// Value of the nabla factor of the objective at the closed form.
    pub a: f64,
    /// Value of the delta factor of the objective at the closed form.
    pub b: f64,
    /// Multiplier recovered by [`solve_normal`].
    pub lambda: f64,
    pub solver_converged: bool,
}

/// The closed-form extremal `y(t) = (4M² - 7M - 3Mt + 6t) t / (M(M - 1))` of
/// [`IsoperimetricProblem::worked_example`], sampled on `{0, ..., M}`.
pub fn closed_form_example(m: usize) -> Result<(GridFunction, ExampleMeta)> {
    let p = IsoperimetricProblem::worked_example(m)?;
    let mf = m as f64;
    let y = GridFunction::from_fn(Arc::clone(&p.scale), |t| {
        (4.0 * mf * mf - 7.0 * mf - 3.0 * mf * t + 6.0 * t) * t / (mf * (mf - 1.0))
    })?;
    let value = p.objective.eval_functional(&y)?;
    let solved = solve_normal(&p, &SolveOptions::default())?;
    Ok((
        y,
        ExampleMeta {
            m,
            a: value.nabla_factor,
            b: value.delta_factor,
            lambda: solved.lambda,
            solver_converged: solved.converged,
        },
    ))
}
