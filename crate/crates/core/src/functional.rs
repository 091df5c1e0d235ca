//! Delta-nabla product functionals and their Euler–Lagrange residuals.
//!
//! A functional is `J(y) = J_Δ(y) · J_∇(y)` with
//! `J_Δ = ∫_a^b L_Δ(t, y^σ, y^Δ) Δt` and `J_∇ = ∫_a^b L_∇(t, y^ρ, y^∇) ∇t`.
//!
//! The residual forms are
//!
//! ```text
//! EL1(t) = J_∇ (∂₃L_Δ[y](ρ(t)) - ∫_a^{ρ(t)} ∂₂L_Δ[y] Δτ)
//!        + J_Δ (∂₃L_∇{y}(t)    - ∫_a^{t}    ∂₂L_∇{y} ∇τ),   t ∈ (a, b]
//! EL2(t) = J_∇ (∂₃L_Δ[y](t)    - ∫_a^{t}    ∂₂L_Δ[y] Δτ)
//!        + J_Δ (∂₃L_∇{y}(σ(t)) - ∫_a^{σ(t)} ∂₂L_∇{y} ∇τ),   t ∈ [a, b)
//! ```
//!
//! and a candidate is an extremal when the residual is constant in `t`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lagrangian::{Expr, Lagrangian};
use crate::timescale::{GridFunction, Kappa, KappaFunction, TimeScale};

/// `(L_Δ, L_∇)`, evaluated as the product of a delta and a nabla integral.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaNablaFunctional {
    pub delta: Lagrangian,
    pub nabla: Lagrangian,
}

/// The two integral factors and their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvaluationBreakdown {
    pub delta_factor: f64,
    pub nabla_factor: f64,
    pub product: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ElForm {
    /// Residual on `(a, b]`, delta terms evaluated at `ρ(t)`.
    El1,
    /// Residual on `[a, b)`, nabla terms evaluated at `σ(t)`.
    El2,
}

impl ElForm {
    pub fn domain(self) -> Kappa {
        match self {
            ElForm::El1 => Kappa::Lower,
            ElForm::El2 => Kappa::Upper,
        }
    }
}

/// A residual grid function and how far it is from constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub form: ElForm,
    pub residual: KappaFunction,
    /// `max - min` of the residual.
    pub defect: f64,
    /// Mean of the residual, the estimate of the unknown constant.
    pub constant_estimate: f64,
}

impl ResidualReport {
    fn new(form: ElForm, residual: KappaFunction) -> Self {
        let vals = residual.values();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        Self {
            form,
            residual,
            defect: max - min,
            constant_estimate: mean,
        }
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        self.defect <= tol
    }
}

/// Integrand arguments `[y](t)` for `t ∈ [a, b)`, indexed by point.
fn delta_args(y: &GridFunction) -> Vec<(f64, f64, f64)> {
    let pts = y.scale().points();
    let vals = y.values();
    let dy = y.delta_derivative();
    (0..pts.len() - 1)
        .map(|i| (pts[i], vals[i + 1], dy.values()[i]))
        .collect()
}

/// Integrand arguments `{y}(t)` for `t ∈ (a, b]`; entry `i` belongs to point `i + 1`.
fn nabla_args(y: &GridFunction) -> Vec<(f64, f64, f64)> {
    let pts = y.scale().points();
    let vals = y.values();
    let dy = y.nabla_derivative();
    (1..pts.len())
        .map(|i| (pts[i], vals[i - 1], dy.values()[i - 1]))
        .collect()
}

fn eval_at(e: &Expr, (t, u, v): (f64, f64, f64)) -> Result<f64> {
    e.evaluate(t, u, v)
        .map_err(|source| Error::Eval { t, source })
}

/// Per-point ingredients of both residual forms.
struct Terms {
    delta_factor: f64,
    nabla_factor: f64,
    /// `∂₃L_Δ[y](t_i) - Σ_{k<i} ∂₂L_Δ[y](t_k) μ_k`, for `i in 0..n-1`.
    delta_part: Vec<f64>,
    /// `∂₃L_∇{y}(t_i) - Σ_{1≤k≤i} ∂₂L_∇{y}(t_k) ν_k`, for `i in 1..n`, stored at `i - 1`.
    nabla_part: Vec<f64>,
}

impl DeltaNablaFunctional {
    pub fn new(delta: Lagrangian, nabla: Lagrangian) -> Self {
        Self { delta, nabla }
    }

    pub fn parse(delta: &str, nabla: &str) -> Result<Self> {
        Ok(Self::new(
            Lagrangian::parse(delta)?,
            Lagrangian::parse(nabla)?,
        ))
    }

    pub fn eval_functional(&self, y: &GridFunction) -> Result<EvaluationBreakdown> {
        let scale = y.scale();
        let mut delta_factor = 0.0;
        for (i, args) in delta_args(y).into_iter().enumerate() {
            delta_factor += eval_at(&self.delta.value, args)? * scale.mu(i);
        }
        let mut nabla_factor = 0.0;
        for (i, args) in nabla_args(y).into_iter().enumerate() {
            nabla_factor += eval_at(&self.nabla.value, args)? * scale.nu(i + 1);
        }
        Ok(EvaluationBreakdown {
            delta_factor,
            nabla_factor,
            product: delta_factor * nabla_factor,
        })
    }

    fn terms(&self, y: &GridFunction) -> Result<Terms> {
        let scale = y.scale();
        let n = scale.len();
        let factors = self.eval_functional(y)?;

        let mut delta_part = Vec::with_capacity(n - 1);
        let mut prefix = 0.0;
        for (i, args) in delta_args(y).into_iter().enumerate() {
            delta_part.push(eval_at(&self.delta.d_v, args)? - prefix);
            prefix += eval_at(&self.delta.d_u, args)? * scale.mu(i);
        }

        let mut nabla_part = Vec::with_capacity(n - 1);
        let mut prefix = 0.0;
        for (i, args) in nabla_args(y).into_iter().enumerate() {
            prefix += eval_at(&self.nabla.d_u, args)? * scale.nu(i + 1);
            nabla_part.push(eval_at(&self.nabla.d_v, args)? - prefix);
        }

        Ok(Terms {
            delta_factor: factors.delta_factor,
            nabla_factor: factors.nabla_factor,
            delta_part,
            nabla_part,
        })
    }

    /// Raw residual values for `form`, one per domain point.
    fn residual_values(&self, y: &GridFunction, form: ElForm) -> Result<Vec<f64>> {
        let terms = self.terms(y)?;
        let scale = y.scale();
        let n = scale.len();
        // delta part indexed by point, nabla part by point - 1
        let combine = |delta_at: usize, nabla_at: usize| {
            terms.nabla_factor * terms.delta_part[delta_at]
                + terms.delta_factor * terms.nabla_part[nabla_at - 1]
        };
        Ok(match form {
            ElForm::El1 => (1..n).map(|i| combine(scale.rho_index(i), i)).collect(),
            ElForm::El2 => (0..n - 1)
                .map(|i| combine(i, scale.sigma_index(i)))
                .collect(),
        })
    }

    /// Euler–Lagrange residual of this functional alone.
    pub fn el_residual(&self, y: &GridFunction, form: ElForm) -> Result<ResidualReport> {
        let values = self.residual_values(y, form)?;
        Ok(ResidualReport::new(
            form,
            KappaFunction::from_parts(Arc::clone(y.scale()), form.domain(), values),
        ))
    }
}

/// `λ₀ · EL(L) - λ · EL(K)`, combined pointwise.
pub fn iso_residual(
    objective: &DeltaNablaFunctional,
    constraint: &DeltaNablaFunctional,
    y: &GridFunction,
    lambda0: f64,
    lambda: f64,
    form: ElForm,
) -> Result<ResidualReport> {
    if lambda0 == 0.0 && lambda == 0.0 {
        return Err(Error::Argument(
            "multipliers (λ₀, λ) must not both be zero".into(),
        ));
    }
    let l = objective.residual_values(y, form)?;
    let k = constraint.residual_values(y, form)?;
    let values = l
        .iter()
        .zip(&k)
        .map(|(l, k)| lambda0 * l - lambda * k)
        .collect();
    Ok(ResidualReport::new(
        form,
        KappaFunction::from_parts(Arc::clone(y.scale()), form.domain(), values),
    ))
}

/// Whether `y` is an extremal of `constraint`: both residual forms constant
/// within `tol`.
pub fn is_extremal_for(
    constraint: &DeltaNablaFunctional,
    y: &GridFunction,
    tol: f64,
) -> Result<(bool, ResidualReport, ResidualReport)> {
    let el1 = constraint.el_residual(y, ElForm::El1)?;
    let el2 = constraint.el_residual(y, ElForm::El2)?;
    Ok((el1.is_constant(tol) && el2.is_constant(tol), el1, el2))
}

/// Both residual forms for one multiplier pair, with the stationarity verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub el1: ResidualReport,
    pub el2: ResidualReport,
    pub stationary: bool,
    /// `false` when the two forms disagree on whether the residual is constant.
    pub consistent: bool,
}

impl Certificate {
    pub fn defect(&self) -> f64 {
        self.el1.defect.max(self.el2.defect)
    }
}

/// Computes both forms of the multiplier residual and classifies them.
pub fn certify(
    objective: &DeltaNablaFunctional,
    constraint: &DeltaNablaFunctional,
    y: &GridFunction,
    lambda0: f64,
    lambda: f64,
    tol: f64,
) -> Result<Certificate> {
    let el1 = iso_residual(objective, constraint, y, lambda0, lambda, ElForm::El1)?;
    let el2 = iso_residual(objective, constraint, y, lambda0, lambda, ElForm::El2)?;
    let (c1, c2) = (el1.is_constant(tol), el2.is_constant(tol));
    Ok(Certificate {
        stationary: c1 && c2,
        consistent: c1 == c2,
        el1,
        el2,
    })
}

/// The constant `1 / (b - a)` whose nabla (or delta) integral over the whole
/// scale is one.
pub fn constant_over_measure(scale: &TimeScale) -> Lagrangian {
    Lagrangian::constant(1.0 / scale.measure())
}
