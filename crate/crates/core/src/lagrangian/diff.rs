//! Symbolic differentiation. Results are correct but not canonical; the
//! smart constructors below only fold constants and drop neutral elements.

use super::{Expr, Func, Var};

pub(super) fn derivative(e: &Expr, x: Var) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(v) => Expr::Const(if *v == x { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(derivative(a, x)),
        Expr::Add(a, b) => add(derivative(a, x), derivative(b, x)),
        Expr::Sub(a, b) => sub(derivative(a, x), derivative(b, x)),
        Expr::Mul(a, b) => add(
            mul(derivative(a, x), (**b).clone()),
            mul((**a).clone(), derivative(b, x)),
        ),
        Expr::Div(a, b) => {
            let da = derivative(a, x);
            let db = derivative(b, x);
            if is_zero(&db) {
                div(da, (**b).clone())
            } else {
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), 2),
                )
            }
        }
        Expr::Pow(a, n) => {
            let da = derivative(a, x);
            mul(
                mul(Expr::Const(f64::from(*n)), pow((**a).clone(), n - 1)),
                da,
            )
        }
        Expr::Call(func, a) => {
            let da = derivative(a, x);
            if is_zero(&da) {
                return Expr::Const(0.0);
            }
            let inner = (**a).clone();
            let outer = match func {
                Func::Sin => call(Func::Cos, inner),
                Func::Cos => neg(call(Func::Sin, inner)),
                Func::Exp => call(Func::Exp, inner),
                Func::Log => return div(da, inner),
                Func::Sqrt => {
                    return div(da, mul(Expr::Const(2.0), call(Func::Sqrt, inner)));
                }
            };
            mul(outer, da)
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn fold(a: &Expr, b: &Expr, op: impl Fn(f64, f64) -> f64) -> Option<Expr> {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => {
            let r = op(*x, *y);
            r.is_finite().then_some(Expr::Const(r))
        }
        _ => None,
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if let Some(c) = fold(&a, &b, |x, y| x + y) {
        return c;
    }
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if let Some(c) = fold(&a, &b, |x, y| x - y) {
        return c;
    }
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return neg(b);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if let Some(c) = fold(&a, &b, |x, y| x * y) {
        return c;
    }
    if is_zero(&a) || is_zero(&b) {
        return Expr::Const(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    // keep constants on the left: `2*v` rather than `v*2`
    if matches!(b, Expr::Const(_)) {
        return Expr::Mul(Box::new(b), Box::new(a));
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if matches!(b, Expr::Const(c) if c != 0.0) {
        if let Some(c) = fold(&a, &b, |x, y| x / y) {
            return c;
        }
    }
    if is_zero(&a) {
        return Expr::Const(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn pow(a: Expr, n: i32) -> Expr {
    match n {
        0 => Expr::Const(1.0),
        1 => a,
        _ => match a {
            Expr::Const(c) if c != 0.0 && c.powi(n).is_finite() => Expr::Const(c.powi(n)),
            other => Expr::Pow(Box::new(other), n),
        },
    }
}

fn call(func: Func, a: Expr) -> Expr {
    Expr::Call(func, Box::new(a))
}

#[cfg(test)]
mod tests {
    use crate::lagrangian::{parse, Var};

    fn d(text: &str, x: Var) -> String {
        parse(text).unwrap().differentiate(x).to_string()
    }

    #[test]
    fn power_rule() {
        assert_eq!(d("v^2", Var::V), "2*v");
        assert_eq!(d("v^2+v", Var::V), "2*v+1");
        assert_eq!(d("v^2", Var::U), "0");
        assert_eq!(d("v^3", Var::V), "3*v^2");
        assert_eq!(d("v^-1", Var::V), "-1*v^-2");
        assert_eq!(d("t*v", Var::V), "t");
        assert_eq!(d("t*v", Var::U), "0");
    }

    #[test]
    fn chain_rule_values() {
        let cases: &[(&str, Var, f64)] = &[
            ("sin(u*v)", Var::U, (1.5f64 * 0.5).cos() * 0.5),
            ("exp(2*v)", Var::V, 2.0 * (2.0f64 * 0.5).exp()),
            ("log(u^2+1)", Var::U, 2.0 * 1.5 / (1.5 * 1.5 + 1.0)),
            ("sqrt(u)", Var::U, 0.5 / 1.5f64.sqrt()),
            ("u/v", Var::V, -1.5 / 0.25),
            ("cos(v)", Var::V, -(0.5f64).sin()),
        ];
        for (text, x, expected) in cases {
            let got = parse(text)
                .unwrap()
                .differentiate(*x)
                .evaluate(0.7, 1.5, 0.5)
                .unwrap();
            assert!(
                (got - expected).abs() < 1e-14,
                "{text}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn folds_constants() {
        assert_eq!(d("3*v*4", Var::V), "12");
        assert_eq!(d("sin(t)", Var::V), "0");
        assert_eq!(d("1/3", Var::U), "0");
    }
}
