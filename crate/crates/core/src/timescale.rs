//! Calculus on finite time scales.
//!
//! Every point of a finite time scale is isolated, so delta and nabla
//! derivatives are exact difference quotients and delta and nabla integrals
//! are exact graininess-weighted sums:
//!
//! * `y^Δ(t) = (y(σ(t)) - y(t)) / μ(t)` on `T^κ = T \ {max T}`
//! * `y^∇(t) = (y(t) - y(ρ(t))) / ν(t)` on `T_κ = T \ {min T}`
//! * `∫_a^b f Δt = Σ_{t ∈ [a,b)} f(t) μ(t)`
//! * `∫_a^b f ∇t = Σ_{t ∈ (a,b]} f(t) ν(t)`
//!
//! with `σ(max T) = max T` and `ρ(min T) = min T`.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, strictly increasing set of real points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeScale {
    points: Vec<f64>,
}

impl TimeScale {
    /// Builds a time scale from strictly increasing finite points. At least
    /// three points are required so that `[a, b]` contains an interior point.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if points.len() < 3 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NotIncreasing(i + 1));
        }
        Ok(Self { points })
    }

    /// `n` equally spaced points from `a` to `b` inclusive.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewPoints(n));
        }
        let step = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
        points[n - 1] = b;
        Self::new(points)
    }

    /// The integer scale `{0, 1, ..., m}`.
    pub fn integers(m: usize) -> Result<Self> {
        Self::new((0..=m).map(|i| i as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `a = min T`.
    pub fn min(&self) -> f64 {
        self.points[0]
    }

    /// `b = max T`.
    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Measure of the whole scale, `b - a`.
    pub fn measure(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.points
            .binary_search_by(|p| p.partial_cmp(&t).unwrap_or(Ordering::Less))
            .map_err(|_| Error::NotInScale(t))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.index_of(t).is_ok()
    }

    /// Forward jump operator.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let i = self.index_of(t)?;
        Ok(self.points[self.sigma_index(i)])
    }

    /// Backward jump operator.
    pub fn rho(&self, t: f64) -> Result<f64> {
        let i = self.index_of(t)?;
        Ok(self.points[self.rho_index(i)])
    }

    /// Forward and backward graininess `(μ(t), ν(t))`.
    pub fn grain(&self, t: f64) -> Result<(f64, f64)> {
        let i = self.index_of(t)?;
        Ok((self.mu(i), self.nu(i)))
    }

    pub(crate) fn sigma_index(&self, i: usize) -> usize {
        (i + 1).min(self.points.len() - 1)
    }

    pub(crate) fn rho_index(&self, i: usize) -> usize {
        i.saturating_sub(1)
    }

    /// `μ` at the point with index `i`.
    pub(crate) fn mu(&self, i: usize) -> f64 {
        self.points[self.sigma_index(i)] - self.points[i]
    }

    /// `ν` at the point with index `i`.
    pub(crate) fn nu(&self, i: usize) -> f64 {
        self.points[i] - self.points[self.rho_index(i)]
    }

    /// Index range of `[a, b)` for the delta integral.
    fn delta_window(&self, a: f64, b: f64) -> Result<std::ops::Range<usize>> {
        let (ia, ib) = self.window(a, b)?;
        Ok(ia..ib)
    }

    /// Index range of `(a, b]` for the nabla integral.
    fn nabla_window(&self, a: f64, b: f64) -> Result<std::ops::Range<usize>> {
        let (ia, ib) = self.window(a, b)?;
        Ok(ia + 1..ib + 1)
    }

    fn window(&self, a: f64, b: f64) -> Result<(usize, usize)> {
        if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
            return Err(Error::EmptyWindow { a, b });
        }
        Ok((self.index_of(a)?, self.index_of(b)?))
    }
}

/// Direction of a jump-operator composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    /// `y^σ = y ∘ σ`
    Forward,
    /// `y^ρ = y ∘ ρ`
    Backward,
}

/// A real-valued function on every point of a time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    scale: Arc<TimeScale>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(scale: Arc<TimeScale>, values: Vec<f64>) -> Result<Self> {
        if values.len() != scale.len() {
            return Err(Error::LengthMismatch {
                expected: scale.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { scale, values })
    }

    /// Samples `f` at every point of `scale`.
    pub fn from_fn(scale: Arc<TimeScale>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = scale.points().iter().map(|&t| f(t)).collect();
        Self::new(scale, values)
    }

    pub fn constant(scale: Arc<TimeScale>, c: f64) -> Result<Self> {
        let n = scale.len();
        Self::new(scale, vec![c; n])
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        &self.scale
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.scale.index_of(t)?])
    }

    /// Composition with `σ` or `ρ`.
    pub fn shift(&self, direction: Shift) -> GridFunction {
        let n = self.values.len();
        let values = (0..n)
            .map(|i| match direction {
                Shift::Forward => self.values[self.scale.sigma_index(i)],
                Shift::Backward => self.values[self.scale.rho_index(i)],
            })
            .collect();
        GridFunction {
            scale: Arc::clone(&self.scale),
            values,
        }
    }

    /// Forward difference quotient on `T^κ`.
    pub fn delta_derivative(&self) -> KappaFunction {
        let values = (0..self.values.len() - 1)
            .map(|i| (self.values[i + 1] - self.values[i]) / self.scale.mu(i))
            .collect();
        KappaFunction {
            scale: Arc::clone(&self.scale),
            side: Kappa::Upper,
            values,
        }
    }

    /// Backward difference quotient on `T_κ`.
    pub fn nabla_derivative(&self) -> KappaFunction {
        let values = (1..self.values.len())
            .map(|i| (self.values[i] - self.values[i - 1]) / self.scale.nu(i))
            .collect();
        KappaFunction {
            scale: Arc::clone(&self.scale),
            side: Kappa::Lower,
            values,
        }
    }

    /// `∫_a^b f Δt`, summed over `[a, b)`.
    pub fn delta_integral(&self, a: f64, b: f64) -> Result<f64> {
        let range = self.scale.delta_window(a, b)?;
        Ok(range.map(|i| self.values[i] * self.scale.mu(i)).sum())
    }

    /// `∫_a^b f ∇t`, summed over `(a, b]`.
    pub fn nabla_integral(&self, a: f64, b: f64) -> Result<f64> {
        let range = self.scale.nabla_window(a, b)?;
        Ok(range.map(|i| self.values[i] * self.scale.nu(i)).sum())
    }

    /// `‖y^σ‖∞ + ‖y^ρ‖∞ + ‖y^Δ‖∞ + ‖y^∇‖∞`, each sup over `T \ {min, max}`.
    pub fn diamond_norm(&self) -> Result<f64> {
        let n = self.values.len();
        if n < 3 {
            return Err(Error::TooFewPoints(n));
        }
        let delta = self.delta_derivative();
        let nabla = self.nabla_derivative();
        let sup = |f: &dyn Fn(usize) -> f64| (1..n - 1).map(|i| f(i).abs()).fold(0.0, f64::max);
        Ok(sup(&|i| self.values[i + 1])
            + sup(&|i| self.values[i - 1])
            + sup(&|i| delta.values[i])
            + sup(&|i| nabla.values[i - 1]))
    }

    /// Pointwise map keeping the scale.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        let values = self
            .scale
            .points()
            .iter()
            .zip(&self.values)
            .map(|(&t, &y)| f(t, y))
            .collect();
        GridFunction::new(Arc::clone(&self.scale), values)
    }
}

/// Which endpoint a [`KappaFunction`] omits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kappa {
    /// `T^κ = T \ {max T}`, the domain of delta derivatives.
    Upper,
    /// `T_κ = T \ {min T}`, the domain of nabla derivatives.
    Lower,
}

/// A function on `T^κ` or `T_κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaFunction {
    scale: Arc<TimeScale>,
    side: Kappa,
    values: Vec<f64>,
}

impl KappaFunction {
    pub(crate) fn from_parts(scale: Arc<TimeScale>, side: Kappa, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() + 1, scale.len());
        Self {
            scale,
            side,
            values,
        }
    }

    pub fn side(&self) -> Kappa {
        self.side
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        &self.scale
    }

    /// The domain points, in order.
    pub fn points(&self) -> &[f64] {
        let pts = self.scale.points();
        match self.side {
            Kappa::Upper => &pts[..pts.len() - 1],
            Kappa::Lower => &pts[1..],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        let i = self.scale.index_of(t)?;
        match self.side {
            Kappa::Upper if i + 1 < self.scale.len() => Ok(self.values[i]),
            Kappa::Lower if i > 0 => Ok(self.values[i - 1]),
            _ => Err(Error::NotInScale(t)),
        }
    }

    /// Extends to the whole scale, filling the missing endpoint with `fill`.
    pub fn extend(&self, fill: f64) -> GridFunction {
        let mut values = Vec::with_capacity(self.values.len() + 1);
        match self.side {
            Kappa::Upper => {
                values.extend_from_slice(&self.values);
                values.push(fill);
            }
            Kappa::Lower => {
                values.push(fill);
                values.extend_from_slice(&self.values);
            }
        }
        GridFunction {
            scale: Arc::clone(&self.scale),
            values,
        }
    }
}
