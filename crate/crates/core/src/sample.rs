//! Random expressions, Lagrangians and problems for property tests.

use std::sync::Arc;

use rand::Rng;

use crate::functional::{constant_over_measure, DeltaNablaFunctional};
use crate::identities::random_scale;
use crate::lagrangian::{Expr, Func, Lagrangian, Var};
use crate::solver::IsoperimetricProblem;

fn random_var(rng: &mut impl Rng) -> Expr {
    Expr::var(match rng.gen_range(0..3) {
        0 => Var::T,
        1 => Var::U,
        _ => Var::V,
    })
}

fn random_leaf(rng: &mut impl Rng) -> Expr {
    if rng.gen_bool(0.3) {
        Expr::constant((rng.gen_range(-3.0_f64..3.0) * 4.0).round() / 4.0)
    } else {
        random_var(rng)
    }
}

/// An expression tree of depth at most `depth` over `t`, `u`, `v` using every
/// operator and function of the grammar.
pub fn random_expr(rng: &mut impl Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return random_leaf(rng);
    }
    let sub = |rng: &mut _| Box::new(random_expr(rng, depth - 1));
    match rng.gen_range(0..10) {
        0 => Expr::Neg(sub(rng)),
        1 | 2 => Expr::Add(sub(rng), sub(rng)),
        3 => Expr::Sub(sub(rng), sub(rng)),
        4 | 5 => Expr::Mul(sub(rng), sub(rng)),
        6 => Expr::Div(sub(rng), sub(rng)),
        7 => Expr::Pow(sub(rng), rng.gen_range(-2..=3)),
        _ => {
            let f = match rng.gen_range(0..5) {
                0 => Func::Sin,
                1 => Func::Cos,
                2 => Func::Exp,
                3 => Func::Log,
                _ => Func::Sqrt,
            };
            Expr::Call(f, sub(rng))
        }
    }
}

/// `Σ c · t^i u^j v^k` over `i + j + k ≤ degree`, each monomial kept with
/// probability `density` and given a coefficient in `[-scale, scale]`.
pub fn random_polynomial_expr(rng: &mut impl Rng, degree: u32, density: f64, scale: f64) -> Expr {
    let mut acc: Option<Expr> = None;
    for i in 0..=degree {
        for j in 0..=degree - i {
            for k in 0..=degree - i - j {
                if !rng.gen_bool(density) {
                    continue;
                }
                let mut term = Expr::constant(rng.gen_range(-scale..scale));
                for (var, power) in [(Var::T, i), (Var::U, j), (Var::V, k)] {
                    if power > 0 {
                        let factor = Expr::Pow(Box::new(Expr::var(var)), power as i32);
                        term = Expr::Mul(Box::new(term), Box::new(factor));
                    }
                }
                acc = Some(match acc {
                    None => term,
                    Some(a) => Expr::Add(Box::new(a), Box::new(term)),
                });
            }
        }
    }
    acc.unwrap_or_else(|| Expr::constant(0.0))
}

fn strongly_convex_in_v(rng: &mut impl Rng) -> Lagrangian {
    let base = Expr::Pow(Box::new(Expr::var(Var::V)), 2);
    let noise = random_polynomial_expr(rng, 3, 0.3, 0.05);
    Lagrangian::new(Expr::Add(Box::new(base), Box::new(noise)))
}

/// An isoperimetric problem on 4 to 8 random points with cubic-or-lower
/// polynomial Lagrangians: objective factors are `v^2` plus small terms,
/// the constraint is `t*v` plus small terms against `1/(b-a)`.
pub fn random_problem(rng: &mut impl Rng) -> IsoperimetricProblem {
    let n = rng.gen_range(4..=8);
    let scale = Arc::new(random_scale(rng, n, 0.0, 4.0));
    let objective = DeltaNablaFunctional::new(strongly_convex_in_v(rng), strongly_convex_in_v(rng));
    let k_delta = Expr::Add(
        Box::new(Expr::Mul(
            Box::new(Expr::var(Var::T)),
            Box::new(Expr::var(Var::V)),
        )),
        Box::new(random_polynomial_expr(rng, 3, 0.2, 0.05)),
    );
    let constraint =
        DeltaNablaFunctional::new(Lagrangian::new(k_delta), constant_over_measure(&scale));
    let alpha = rng.gen_range(-1.0..1.0);
    let beta = rng.gen_range(-1.0..1.0);
    let k = rng.gen_range(-1.0..1.0);
    IsoperimetricProblem::new(scale, alpha, beta, objective, constraint, k)
        .expect("sampled data is finite")
}
