//! Randomized checks of the calculus identities on finite time scales:
//! derivative and integral conversions, jump-operator duality, telescoping
//! and both integration-by-parts formulas.
//!
//! Errors are measured relative to the magnitude of the quantities being
//! compared: `|lhs - rhs| / max(|lhs|, |rhs|, Σ|summands|)`, so that
//! cancellation inside a sum is not counted against the identity.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::timescale::{GridFunction, Shift, TimeScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Identity {
    /// `σ(ρ(t)) = t` and `ρ(σ(t)) = t` at interior points.
    JumpDuality,
    /// `f^∇ = (f^Δ)^ρ` on `T_κ`.
    NablaFromDelta,
    /// `f^Δ = (f^∇)^σ` on `T^κ`.
    DeltaFromNabla,
    /// `∫ f Δt = ∫ f^ρ ∇t`.
    DeltaToNablaIntegral,
    /// `∫ f ∇t = ∫ f^σ Δt`.
    NablaToDeltaIntegral,
    /// `∫ y^Δ Δt = y(b) - y(a)` and `∫ y^∇ ∇t = y(b) - y(a)`.
    Telescoping,
    /// `∫ f^σ g^Δ Δt = [fg] - ∫ f^Δ g Δt`.
    DeltaByParts,
    /// `∫ f^ρ g^∇ ∇t = [fg] - ∫ f^∇ g ∇t`.
    NablaByParts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub cases: usize,
    pub checks: usize,
    pub tolerance: f64,
    /// Largest relative error seen per identity.
    pub worst: BTreeMap<Identity, f64>,
    pub failures: Vec<String>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `|a - b|` relative to `max(|a|, |b|, magnitude)`.
pub fn relative_error(a: f64, b: f64, magnitude: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(magnitude);
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// A strictly increasing scale of `n` points drawn uniformly from `[lo, hi)`.
pub fn random_scale(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> TimeScale {
    loop {
        let mut pts: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        pts.sort_by(f64::total_cmp);
        if let Ok(t) = TimeScale::new(pts) {
            return t;
        }
    }
}

/// A polynomial of degree at most 3 with coefficients in `[-2, 2]`, sampled on `scale`.
pub fn random_polynomial(rng: &mut impl Rng, scale: &Arc<TimeScale>) -> GridFunction {
    let degree = rng.gen_range(0..=3);
    let coeffs: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-2.0..2.0)).collect();
    GridFunction::from_fn(Arc::clone(scale), |t| {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    })
    .expect("polynomial values are finite")
}

struct Recorder {
    tol: f64,
    checks: usize,
    worst: BTreeMap<Identity, f64>,
    failures: Vec<String>,
}

impl Recorder {
    fn check(&mut self, case: usize, id: Identity, lhs: f64, rhs: f64, magnitude: f64) {
        let err = relative_error(lhs, rhs, magnitude);
        self.checks += 1;
        let w = self.worst.entry(id).or_insert(0.0);
        *w = w.max(err);
        if err.is_nan() || err > self.tol {
            self.failures.push(format!(
                "case {case}: {id:?} lhs={lhs:e} rhs={rhs:e} rel={err:e}"
            ));
        }
    }
}

fn abs_delta_sum(f: &GridFunction, a: f64, b: f64) -> Result<f64> {
    f.map(|_, v| v.abs())?.delta_integral(a, b)
}

fn abs_nabla_sum(f: &GridFunction, a: f64, b: f64) -> Result<f64> {
    f.map(|_, v| v.abs())?.nabla_integral(a, b)
}

fn product(f: &GridFunction, g: &GridFunction) -> GridFunction {
    let values = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .collect();
    GridFunction::new(Arc::clone(f.scale()), values).expect("same scale")
}

fn check_case(rng: &mut ChaCha8Rng, case: usize, rec: &mut Recorder) -> Result<()> {
    let n = rng.gen_range(3..=50);
    let scale = Arc::new(random_scale(rng, n, -5.0, 5.0));
    let f = random_polynomial(rng, &scale);
    let g = random_polynomial(rng, &scale);
    let pts = scale.points();

    for &t in &pts[1..n - 1] {
        let back = scale.sigma(scale.rho(t)?)?;
        let fwd = scale.rho(scale.sigma(t)?)?;
        rec.check(case, Identity::JumpDuality, back, t, 0.0);
        rec.check(case, Identity::JumpDuality, fwd, t, 0.0);
    }

    let fd = f.delta_derivative();
    let fn_ = f.nabla_derivative();
    for &t in fn_.points() {
        rec.check(
            case,
            Identity::NablaFromDelta,
            fn_.at(t)?,
            fd.at(scale.rho(t)?)?,
            0.0,
        );
    }
    for &t in fd.points() {
        rec.check(
            case,
            Identity::DeltaFromNabla,
            fd.at(t)?,
            fn_.at(scale.sigma(t)?)?,
            0.0,
        );
    }

    // the whole scale plus one random sub-window
    let i = rng.gen_range(0..n - 1);
    let j = rng.gen_range(i + 1..n);
    for (a, b) in [(pts[0], pts[n - 1]), (pts[i], pts[j])] {
        let lhs = f.delta_integral(a, b)?;
        let rhs = f.shift(Shift::Backward).nabla_integral(a, b)?;
        rec.check(
            case,
            Identity::DeltaToNablaIntegral,
            lhs,
            rhs,
            abs_delta_sum(&f, a, b)?,
        );
        let lhs = f.nabla_integral(a, b)?;
        let rhs = f.shift(Shift::Forward).delta_integral(a, b)?;
        rec.check(
            case,
            Identity::NablaToDeltaIntegral,
            lhs,
            rhs,
            abs_nabla_sum(&f, a, b)?,
        );

        let jump = f.at(b)? - f.at(a)?;
        let ext = fd.extend(0.0);
        let mag = abs_delta_sum(&ext, a, b)? + f.at(a)?.abs() + f.at(b)?.abs();
        rec.check(
            case,
            Identity::Telescoping,
            ext.delta_integral(a, b)?,
            jump,
            mag,
        );
        let ext = fn_.extend(0.0);
        let mag = abs_nabla_sum(&ext, a, b)? + f.at(a)?.abs() + f.at(b)?.abs();
        rec.check(
            case,
            Identity::Telescoping,
            ext.nabla_integral(a, b)?,
            jump,
            mag,
        );

        let fg = product(&f, &g);
        let bracket = fg.at(b)? - fg.at(a)?;
        let bracket_mag = fg.at(b)?.abs() + fg.at(a)?.abs();

        let left = product(&f.shift(Shift::Forward), &g.delta_derivative().extend(0.0));
        let right = product(&fd.extend(0.0), &g);
        let mag = abs_delta_sum(&left, a, b)? + abs_delta_sum(&right, a, b)? + bracket_mag;
        rec.check(
            case,
            Identity::DeltaByParts,
            left.delta_integral(a, b)?,
            bracket - right.delta_integral(a, b)?,
            mag,
        );

        let left = product(&f.shift(Shift::Backward), &g.nabla_derivative().extend(0.0));
        let right = product(&fn_.extend(0.0), &g);
        let mag = abs_nabla_sum(&left, a, b)? + abs_nabla_sum(&right, a, b)? + bracket_mag;
        rec.check(
            case,
            Identity::NablaByParts,
            left.nabla_integral(a, b)?,
            bracket - right.nabla_integral(a, b)?,
            mag,
        );
    }
    Ok(())
}

/// Runs `count` random cases from `seed`, each on a fresh scale of 3 to 50
/// points with random cubic-or-lower polynomial functions.
pub fn fuzz_identities(seed: u64, count: usize, tol: f64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder {
        tol,
        checks: 0,
        worst: BTreeMap::new(),
        failures: Vec::new(),
    };
    for case in 0..count {
        if let Err(e) = check_case(&mut rng, case, &mut rec) {
            rec.failures.push(format!("case {case}: {e}"));
        }
    }
    IdentityReport {
        seed,
        cases: count,
        checks: rec.checks,
        tolerance: tol,
        worst: rec.worst,
        failures: rec.failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold_for_seed_7() {
        let r = fuzz_identities(7, 100, 1e-12);
        assert!(r.passed(), "{:#?}", r.failures);
        assert_eq!(r.cases, 100);
        assert_eq!(r.worst.len(), 8);
    }

    #[test]
    fn relative_error_scales() {
        assert_eq!(relative_error(0.0, 0.0, 0.0), 0.0);
        assert_eq!(relative_error(1.0, 1.5, 0.0), 0.5 / 1.5);
        assert_eq!(relative_error(1e-3, 2e-3, 10.0), 1e-4);
    }
}
