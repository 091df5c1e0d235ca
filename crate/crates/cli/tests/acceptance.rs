//! Acceptance criteria, each run at its stated tolerance. Prints one
//! `PASS`/`FAIL` line per criterion; run with `--nocapture` to see them.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use deltanabla::functional::{constant_over_measure, iso_residual};
use deltanabla::identities::{fuzz_identities, random_polynomial, random_scale};
use deltanabla::lagrangian::Var;
use deltanabla::oracle::{fd_partial, kkt_check};
use deltanabla::sample::{random_expr, random_polynomial_expr, random_problem};
use deltanabla::solver::{closed_form_example, find_abnormal, solve_normal};
use deltanabla::{
    DeltaNablaFunctional, ElForm, GridFunction, IsoperimetricProblem, Lagrangian, SolveOptions,
};
use deltanabla_cli::problem::worked_example_file;
use deltanabla_cli::solve_report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: Vec<String>, summary: String) -> Outcome {
    let pass = failures.is_empty();
    let detail = if pass {
        summary
    } else {
        format!("{summary}; {}", failures.join("; "))
    };
    Outcome { pass, detail }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Worked example for M = 2..=12 through the solve command path.
fn worked_example_reproduction() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_err = 0.0_f64;
    let mut worst_gap = 0.0_f64;
    let mut slowest = Duration::ZERO;
    for m in 2..=12 {
        let file = worked_example_file(m);
        let start = Instant::now();
        let report = solve_report(&file).expect("valid problem");
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        let (expected, _) = closed_form_example(m).unwrap();
        let ys: Vec<f64> = report.normal.grid.iter().map(|r| r.y).collect();
        let err = max_abs_diff(&ys, expected.values());
        let gap = (report.normal.constraint.product - 1.0).abs();
        worst_err = worst_err.max(err);
        worst_gap = worst_gap.max(gap);
        if !report.normal.converged {
            failures.push(format!("M={m}: not converged"));
        }
        if err > 1e-8 {
            failures.push(format!("M={m}: max error {err:e}"));
        }
        if gap > 1e-10 {
            failures.push(format!("M={m}: constraint off by {gap:e}"));
        }
        if elapsed >= Duration::from_secs(1) {
            failures.push(format!("M={m}: took {elapsed:?}"));
        }
        if m == 3 {
            if max_abs_diff(&ys, &[0.0, 2.0, 3.0, 3.0]) > 1e-8 {
                failures.push(format!("M=3: y = {ys:?}"));
            }
            let p = file.build().unwrap();
            let y = p.embed(&ys[1..3]).unwrap();
            let kkt = kkt_check(&p, &y, report.normal.lambda).unwrap();
            if (report.normal.lambda + 26.0).abs() > 1e-6 || (kkt.lambda_fit + 26.0).abs() > 1e-6 {
                failures.push(format!(
                    "M=3: lambda {} (oracle fit {})",
                    report.normal.lambda, kkt.lambda_fit
                ));
            }
        }
    }
    outcome(
        failures,
        format!("max error {worst_err:.1e}, constraint gap {worst_gap:.1e}, slowest {slowest:?}"),
    )
}

/// The abnormal residual of the constraint is `-t`, and no abnormal extremal exists.
fn normality() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for m in 2..=12 {
        let p = IsoperimetricProblem::worked_example(m).unwrap();
        let (closed, _) = closed_form_example(m).unwrap();
        let random: Vec<f64> = (0..m - 1).map(|_| rng.gen_range(-5.0..5.0)).collect();
        for y in [closed, p.embed(&random).unwrap()] {
            let r = iso_residual(&p.objective, &p.constraint, &y, 0.0, 1.0, ElForm::El2).unwrap();
            for (&t, &v) in r.residual.points().iter().zip(r.residual.values()) {
                worst = worst.max((v + t).abs());
            }
        }
        if !find_abnormal(&p, &SolveOptions::default())
            .unwrap()
            .is_empty()
        {
            failures.push(format!("M={m}: abnormal extremal reported"));
        }
    }
    if worst > 1e-12 {
        failures.push(format!("residual differs from -t by {worst:e}"));
    }
    outcome(
        failures,
        format!("max |residual + t| {worst:.1e}, no abnormal extremals for M=2..12"),
    )
}

fn identity_fuzzing() -> Outcome {
    let start = Instant::now();
    let report = fuzz_identities(2024, 100, 1e-12);
    let elapsed = start.elapsed();
    let worst = report.worst.values().fold(0.0_f64, |m, w| m.max(*w));
    let mut failures: Vec<String> = report.failures.iter().take(5).cloned().collect();
    if elapsed >= Duration::from_secs(5) {
        failures.push(format!("took {elapsed:?}"));
    }
    outcome(
        failures,
        format!(
            "{} cases, {} checks, worst relative error {worst:.1e}, {elapsed:?}",
            report.cases, report.checks
        ),
    )
}

/// Symbolic partials against central differences on 1000 random pairs.
/// Points where the difference quotient itself is unstable are resampled.
fn symbolic_derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut resampled) = (0, 0);
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    while checked < 1000 {
        let e = random_expr(&mut rng, 4);
        let (t, u, v) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let var = if rng.gen_bool(0.5) { Var::U } else { Var::V };
        let value = e.evaluate(t, u, v);
        let (Ok(value), Some(numeric)) = (value, fd_partial(&e, var, t, u, v)) else {
            resampled += 1;
            continue;
        };
        if value.abs() > 1e3 {
            resampled += 1;
            continue;
        }
        checked += 1;
        let symbolic = match e.differentiate(var).evaluate(t, u, v) {
            Ok(s) => s,
            Err(err) => {
                failures.push(format!("{e}: partial failed to evaluate: {err}"));
                continue;
            }
        };
        let rel = (symbolic - numeric).abs() / (1.0 + symbolic.abs());
        worst = worst.max(rel);
        if rel > 1e-6 {
            failures.push(format!(
                "{e} d{var:?} at ({t}, {u}, {v}): {symbolic} vs {numeric}"
            ));
        }
    }
    failures.truncate(5);
    outcome(
        failures,
        format!("{checked} pairs ({resampled} resampled), worst relative error {worst:.1e}"),
    )
}

/// Converged solves certified both by the integral residuals and the KKT oracle.
fn cross_certification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let (mut converged, mut worst_defect, mut worst_kkt) = (0, 0.0_f64, 0.0_f64);
    for i in 0..50 {
        let p = random_problem(&mut rng);
        let r = solve_normal(&p, &SolveOptions::default()).unwrap();
        if !r.converged {
            continue;
        }
        converged += 1;
        let kkt = kkt_check(&p, &r.y, r.lambda).unwrap();
        let el_stationary = r.el1_defect <= 1e-8 && r.el2_defect <= 1e-8;
        let kkt_stationary = kkt.residual_inf_norm <= 1e-5;
        worst_defect = worst_defect.max(r.el1_defect).max(r.el2_defect);
        worst_kkt = worst_kkt.max(kkt.residual_inf_norm);
        if !el_stationary || !kkt_stationary {
            failures.push(format!(
                "problem {i}: defects ({:e}, {:e}), KKT {:e}",
                r.el1_defect, r.el2_defect, kkt.residual_inf_norm
            ));
        }
        if el_stationary != kkt_stationary {
            failures.push(format!("problem {i}: certificates disagree"));
        }
    }
    if converged < 40 {
        failures.push(format!("only {converged} of 50 converged"));
    }
    outcome(
        failures,
        format!(
            "{converged}/50 converged, worst defect {worst_defect:.1e}, worst KKT {worst_kkt:.1e}"
        ),
    )
}

/// `∂₃F(t_i) - Σ_{k<i} ∂₂F(t_k) μ_k` for `F = l0·L - l·K` on delta arguments.
fn delta_form(l: &Lagrangian, k: &Lagrangian, l0: f64, lam: f64, y: &GridFunction) -> Vec<f64> {
    let (pts, ys) = (y.scale().points(), y.values());
    let mut acc = 0.0;
    (0..pts.len() - 1)
        .map(|i| {
            let mu = pts[i + 1] - pts[i];
            let args = (pts[i], ys[i + 1], (ys[i + 1] - ys[i]) / mu);
            let d = |e: &deltanabla::Expr| e.evaluate(args.0, args.1, args.2).unwrap();
            let out = l0 * d(&l.d_v) - lam * d(&k.d_v) - acc;
            acc += (l0 * d(&l.d_u) - lam * d(&k.d_u)) * mu;
            out
        })
        .collect()
}

/// `∂₃F(t_j) - Σ_{1≤k≤j} ∂₂F(t_k) ν_k` on nabla arguments.
fn nabla_form(l: &Lagrangian, k: &Lagrangian, l0: f64, lam: f64, y: &GridFunction) -> Vec<f64> {
    let (pts, ys) = (y.scale().points(), y.values());
    let mut acc = 0.0;
    (1..pts.len())
        .map(|j| {
            let nu = pts[j] - pts[j - 1];
            let args = (pts[j], ys[j - 1], (ys[j] - ys[j - 1]) / nu);
            let d = |e: &deltanabla::Expr| e.evaluate(args.0, args.1, args.2).unwrap();
            acc += (l0 * d(&l.d_u) - lam * d(&k.d_u)) * nu;
            l0 * d(&l.d_v) - lam * d(&k.d_v) - acc
        })
        .collect()
}

fn single_factor_reductions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let n = rng.gen_range(3..=20);
        let scale = Arc::new(random_scale(&mut rng, n, -2.0, 2.0));
        let y = random_polynomial(&mut rng, &scale);
        let l = Lagrangian::new(random_polynomial_expr(&mut rng, 3, 0.4, 1.0));
        let k = Lagrangian::new(random_polynomial_expr(&mut rng, 3, 0.4, 1.0));
        let (l0, lam) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let one = constant_over_measure(&scale);

        let obj = DeltaNablaFunctional::new(l.clone(), one.clone());
        let con = DeltaNablaFunctional::new(k.clone(), one.clone());
        let r = iso_residual(&obj, &con, &y, l0, lam, ElForm::El2).unwrap();
        let direct = delta_form(&l, &k, l0, lam, &y);
        let obj = DeltaNablaFunctional::new(one.clone(), l.clone());
        let con = DeltaNablaFunctional::new(one, k.clone());
        let m = iso_residual(&obj, &con, &y, l0, lam, ElForm::El1).unwrap();
        let mirrored = nabla_form(&l, &k, l0, lam, &y);

        for (a, b) in r
            .residual
            .values()
            .iter()
            .zip(&direct)
            .chain(m.residual.values().iter().zip(&mirrored))
        {
            worst = worst.max((a - b).abs() / (1.0 + b.abs()));
        }
    }
    let failures = if worst > 1e-12 {
        vec![format!("worst relative gap {worst:e}")]
    } else {
        Vec::new()
    };
    outcome(
        failures,
        format!("200 cases per reduction, worst relative gap {worst:.1e}"),
    )
}

fn determinism() -> Outcome {
    let problem = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems/worked_example_m3.json");
    let problem = problem.to_str().unwrap();
    let runs: [&[&str]; 3] = [
        &[
            "solve",
            problem,
            "--output",
            "structured",
            "--seed",
            "11",
            "--multistart",
            "8",
        ],
        &[
            "verify",
            "identities",
            "--seed",
            "3",
            "--count",
            "20",
            "--output",
            "structured",
        ],
        &["verify", "example", "--M", "7", "--output", "structured"],
    ];
    let mut failures = Vec::new();
    for args in runs {
        let once = || {
            Command::new(env!("CARGO_BIN_EXE_deltanabla"))
                .args(args)
                .output()
                .expect("binary runs")
        };
        let (a, b) = (once(), once());
        if a.stdout != b.stdout || a.status != b.status || a.stdout.is_empty() {
            failures.push(format!("{args:?} differs between runs"));
        }
    }
    outcome(
        failures,
        "solve, verify identities and verify example outputs byte-identical".into(),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 7] = [
        ("1 worked example M=2..12", worked_example_reproduction),
        ("2 normality of the constraint", normality),
        ("3 identity fuzzing", identity_fuzzing),
        ("4 symbolic vs numeric derivatives", symbolic_derivatives),
        ("5 EL/KKT cross-certification", cross_certification),
        ("6 single-factor reductions", single_factor_reductions),
        ("7 deterministic structured output", determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let o = check();
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
