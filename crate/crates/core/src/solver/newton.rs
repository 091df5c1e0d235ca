//! Damped Newton iteration for small dense systems with a forward-difference
//! Jacobian. Square systems are solved by LU, overdetermined ones in the
//! least-squares (Gauss–Newton) sense by SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

pub(crate) const DAMPING: f64 = 0.5;
pub(crate) const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum NewtonStatus {
    /// `‖F‖∞` fell below the requested tolerance.
    Converged,
    /// No damped step reduced `‖F‖`.
    Stalled,
    /// The Jacobian could not be formed or solved against.
    Singular,
    MaxIterations,
    /// `F` could not be evaluated at the starting point.
    EvaluationFailed,
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub z: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub status: NewtonStatus,
    /// `‖F‖∞` at every accepted iterate, starting with the initial guess.
    pub history: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn jacobian<F>(f: &F, z: &[f64], fz: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut jac = DMatrix::zeros(fz.len(), z.len());
    let mut probe = z.to_vec();
    for j in 0..z.len() {
        let h = 1e-7 * (1.0 + z[j].abs());
        probe[j] = z[j] + h;
        let fp = f(&probe)?;
        probe[j] = z[j];
        for (i, (a, b)) in fp.iter().zip(fz).enumerate() {
            jac[(i, j)] = (a - b) / h;
        }
    }
    Ok(jac)
}

fn newton_step(jac: DMatrix<f64>, fz: &[f64]) -> Option<Vec<f64>> {
    let rhs = -DVector::from_column_slice(fz);
    let step = if jac.is_square() {
        jac.lu().solve(&rhs)?
    } else {
        jac.svd(true, true).solve(&rhs, 1e-14).ok()?
    };
    step.iter()
        .all(|x| x.is_finite())
        .then(|| step.iter().copied().collect())
}

pub(crate) fn solve<F>(f: F, z0: Vec<f64>, tol: f64, max_iter: usize) -> NewtonOutcome
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut z = z0;
    let mut fz = match f(&z) {
        Ok(v) if v.iter().all(|x| x.is_finite()) => v,
        _ => {
            return NewtonOutcome {
                z,
                residual_inf: f64::INFINITY,
                iterations: 0,
                status: NewtonStatus::EvaluationFailed,
                history: Vec::new(),
            }
        }
    };
    let mut history = vec![inf_norm(&fz)];
    let mut iterations = 0;
    let status = loop {
        if inf_norm(&fz) <= tol {
            break NewtonStatus::Converged;
        }
        if iterations >= max_iter {
            break NewtonStatus::MaxIterations;
        }
        let Ok(jac) = jacobian(&f, &z, &fz) else {
            break NewtonStatus::Singular;
        };
        let Some(step) = newton_step(jac, &fz) else {
            break NewtonStatus::Singular;
        };
        iterations += 1;

        let current = two_norm(&fz);
        let mut scale = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(a, d)| a + scale * d).collect();
            if let Ok(ft) = f(&trial) {
                if ft.iter().all(|x| x.is_finite()) && two_norm(&ft) < current {
                    break Some((trial, ft));
                }
            }
            scale *= DAMPING;
            if scale < MIN_STEP {
                break None;
            }
        };
        match accepted {
            Some((trial, ft)) => {
                z = trial;
                fz = ft;
                history.push(inf_norm(&fz));
            }
            None => break NewtonStatus::Stalled,
        }
    };
    NewtonOutcome {
        residual_inf: inf_norm(&fz),
        z,
        iterations,
        status,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_square_system() {
        // x² + y² = 4, x = y
        let f = |z: &[f64]| Ok(vec![z[0] * z[0] + z[1] * z[1] - 4.0, z[0] - z[1]]);
        let out = solve(f, vec![1.0, 0.5], 1e-12, 50);
        assert_eq!(out.status, NewtonStatus::Converged);
        let r = 2f64.sqrt();
        assert!((out.z[0] - r).abs() < 1e-10 && (out.z[1] - r).abs() < 1e-10);
        assert_eq!(out.history.len(), out.iterations + 1);
    }

    #[test]
    fn least_squares_for_consistent_overdetermined_system() {
        let f = |z: &[f64]| Ok(vec![z[0] - 1.0, 2.0 * (z[0] - 1.0), (z[0] - 1.0).powi(3)]);
        let out = solve(f, vec![3.0], 1e-12, 100);
        assert_eq!(out.status, NewtonStatus::Converged);
        assert!((out.z[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inconsistent_system_does_not_converge() {
        let f = |z: &[f64]| Ok(vec![z[0] - 1.0, z[0] + 1.0]);
        let out = solve(f, vec![0.3], 1e-10, 100);
        assert_ne!(out.status, NewtonStatus::Converged);
        assert!(out.residual_inf >= 1.0 - 1e-9);
    }

    #[test]
    fn singular_jacobian_is_reported() {
        let f = |_: &[f64]| Ok(vec![1.0, 1.0]);
        let out = solve(f, vec![0.0, 0.0], 1e-10, 10);
        assert_eq!(out.status, NewtonStatus::Singular);
    }
}
