use std::sync::Arc;

use deltanabla::functional::{constant_over_measure, iso_residual};
use deltanabla::identities::{random_polynomial, random_scale};
use deltanabla::lagrangian::Expr;
use deltanabla::sample::random_polynomial_expr;
use deltanabla::{DeltaNablaFunctional, ElForm, GridFunction, Lagrangian, TimeScale};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

struct Case {
    scale: Arc<TimeScale>,
    y: GridFunction,
    rng: ChaCha8Rng,
}

fn case(seed: u64, n: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = Arc::new(random_scale(&mut rng, n, 0.0, 3.0));
    let y = random_polynomial(&mut rng, &scale);
    Case { scale, y, rng }
}

fn poly(rng: &mut ChaCha8Rng) -> Lagrangian {
    Lagrangian::new(random_polynomial_expr(rng, 3, 0.4, 1.0))
}

/// `∂₃F[y](t_i) - Σ_{k<i} ∂₂F[y](t_k) μ_k` for `F = l0·L - l·K`, written out
/// directly over the points.
fn delta_dubois_reymond(
    l: &Lagrangian,
    k: &Lagrangian,
    l0: f64,
    lam: f64,
    y: &GridFunction,
) -> Vec<f64> {
    let pts = y.scale().points();
    let ys = y.values();
    let mut out = Vec::new();
    let mut acc = 0.0;
    for i in 0..pts.len() - 1 {
        let mu = pts[i + 1] - pts[i];
        let (t, u, v) = (pts[i], ys[i + 1], (ys[i + 1] - ys[i]) / mu);
        let d3 = l0 * l.d_v.evaluate(t, u, v).unwrap() - lam * k.d_v.evaluate(t, u, v).unwrap();
        out.push(d3 - acc);
        acc +=
            (l0 * l.d_u.evaluate(t, u, v).unwrap() - lam * k.d_u.evaluate(t, u, v).unwrap()) * mu;
    }
    out
}

/// `∂₃F{y}(t_j) - Σ_{1≤k≤j} ∂₂F{y}(t_k) ν_k`, the nabla mirror.
fn nabla_dubois_reymond(
    l: &Lagrangian,
    k: &Lagrangian,
    l0: f64,
    lam: f64,
    y: &GridFunction,
) -> Vec<f64> {
    let pts = y.scale().points();
    let ys = y.values();
    let mut out = Vec::new();
    let mut acc = 0.0;
    for j in 1..pts.len() {
        let nu = pts[j] - pts[j - 1];
        let (t, u, v) = (pts[j], ys[j - 1], (ys[j] - ys[j - 1]) / nu);
        acc +=
            (l0 * l.d_u.evaluate(t, u, v).unwrap() - lam * k.d_u.evaluate(t, u, v).unwrap()) * nu;
        out.push(
            l0 * l.d_v.evaluate(t, u, v).unwrap() - lam * k.d_v.evaluate(t, u, v).unwrap() - acc,
        );
    }
    out
}

proptest! {
    #[test]
    fn both_forms_agree_up_to_shift(seed in any::<u64>(), n in 3usize..12) {
        let mut c = case(seed, n);
        let f = DeltaNablaFunctional::new(poly(&mut c.rng), poly(&mut c.rng));
        let el1 = f.el_residual(&c.y, ElForm::El1).unwrap();
        let el2 = f.el_residual(&c.y, ElForm::El2).unwrap();
        for &t in el2.residual.points() {
            let s = c.scale.sigma(t).unwrap();
            prop_assert_eq!(el1.residual.at(s).unwrap(), el2.residual.at(t).unwrap());
        }
        prop_assert_eq!(el1.defect, el2.defect);
    }

    #[test]
    fn delta_reduction(seed in any::<u64>(), n in 3usize..12, l0 in -2.0f64..2.0, lam in -2.0f64..2.0) {
        let mut c = case(seed, n);
        let (l, k) = (poly(&mut c.rng), poly(&mut c.rng));
        let one = constant_over_measure(&c.scale);
        let obj = DeltaNablaFunctional::new(l.clone(), one.clone());
        let con = DeltaNablaFunctional::new(k.clone(), one);
        let r = iso_residual(&obj, &con, &c.y, l0, lam, ElForm::El2).unwrap();
        let expected = delta_dubois_reymond(&l, &k, l0, lam, &c.y);
        for (a, b) in r.residual.values().iter().zip(&expected) {
            prop_assert!(close(*a, *b, 1e-12), "{} vs {}", a, b);
        }
    }

    #[test]
    fn nabla_reduction(seed in any::<u64>(), n in 3usize..12, l0 in -2.0f64..2.0, lam in -2.0f64..2.0) {
        let mut c = case(seed, n);
        let (l, k) = (poly(&mut c.rng), poly(&mut c.rng));
        let one = constant_over_measure(&c.scale);
        let obj = DeltaNablaFunctional::new(one.clone(), l.clone());
        let con = DeltaNablaFunctional::new(one, k.clone());
        let r = iso_residual(&obj, &con, &c.y, l0, lam, ElForm::El1).unwrap();
        let expected = nabla_dubois_reymond(&l, &k, l0, lam, &c.y);
        for (a, b) in r.residual.values().iter().zip(&expected) {
            prop_assert!(close(*a, *b, 1e-12), "{} vs {}", a, b);
        }
    }

    #[test]
    fn scaling_a_factor_scales_value_and_residual(seed in any::<u64>(), n in 3usize..12, s in -3.0f64..3.0) {
        let mut c = case(seed, n);
        let (ld, ln) = (poly(&mut c.rng), poly(&mut c.rng));
        let f = DeltaNablaFunctional::new(ld.clone(), ln.clone());
        let scaled = DeltaNablaFunctional::new(
            Lagrangian::new(Expr::Mul(Box::new(Expr::constant(s)), Box::new(ld.value))),
            ln,
        );
        let a = f.eval_functional(&c.y).unwrap();
        let b = scaled.eval_functional(&c.y).unwrap();
        prop_assert!(close(b.delta_factor, s * a.delta_factor, 1e-12));
        prop_assert_eq!(b.nabla_factor, a.nabla_factor);
        prop_assert!(close(b.product, s * a.product, 1e-12));
        let ra = f.el_residual(&c.y, ElForm::El2).unwrap();
        let rb = scaled.el_residual(&c.y, ElForm::El2).unwrap();
        let mag = ra.residual.values().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for (x, y) in ra.residual.values().iter().zip(rb.residual.values()) {
            prop_assert!((y - s * x).abs() <= 1e-12 * (1.0 + s.abs() * mag));
        }
    }

    #[test]
    fn constant_lagrangians(seed in any::<u64>(), n in 3usize..12, cd in -3.0f64..3.0, cn in -3.0f64..3.0) {
        let c = case(seed, n);
        let f = DeltaNablaFunctional::new(Lagrangian::constant(cd), Lagrangian::constant(cn));
        let e = f.eval_functional(&c.y).unwrap();
        let m = c.scale.measure();
        prop_assert!(close(e.product, m * m * cd * cn, 1e-12));
        let r = f.el_residual(&c.y, ElForm::El1).unwrap();
        prop_assert!(r.residual.values().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn both_multipliers_zero_is_rejected() {
    let mut c = case(1, 5);
    let f = DeltaNablaFunctional::new(poly(&mut c.rng), poly(&mut c.rng));
    assert!(iso_residual(&f, &f, &c.y, 0.0, 0.0, ElForm::El2).is_err());
}
