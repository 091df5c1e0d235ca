//! Table, CSV and JSON rendering.
//!
//! Tables round to 12 significant digits; JSON carries full precision.

use std::fmt::Write as _;

use deltanabla::identities::IdentityReport;
use deltanabla::oracle::ExampleReport;
use deltanabla::EvaluationBreakdown;
use serde::Serialize;

use crate::{DiffReport, EvalReport, ExtremalReport, FormPair, ResidualCmdReport, SolveReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Rendered {
    pub fn ok(stdout: String) -> Self {
        Rendered {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }
}

/// One time-scale point: values, derivatives and residuals where defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub t: f64,
    pub y: f64,
    pub y_delta: Option<f64>,
    pub y_nabla: Option<f64>,
    pub residual_el1: Option<f64>,
    pub residual_el2: Option<f64>,
}

/// `x` rounded to 12 significant digits.
pub fn num(x: f64) -> String {
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r == 0.0 {
        "0".into()
    } else if r.abs() < 1e-4 || r.abs() >= 1e12 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "-".into())
}

pub fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports always serialize") + "\n"
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 records")
}

/// Shortest round-trip text, in exponent form for very small or large values.
fn exact(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() < 1e-4 || x.abs() >= 1e15 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn full(x: Option<f64>) -> String {
    x.map(exact).unwrap_or_default()
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    csv_text(
        &["t", "y", "y^Δ", "y^∇", "residual_EL1", "residual_EL2"],
        rows.iter().map(|r| {
            vec![
                exact(r.t),
                exact(r.y),
                full(r.y_delta),
                full(r.y_nabla),
                full(r.residual_el1),
                full(r.residual_el2),
            ]
        }),
    )
}

fn grid_table(out: &mut String, rows: &[GridRow]) {
    let residuals = rows
        .iter()
        .any(|r| r.residual_el1.is_some() || r.residual_el2.is_some());
    let _ = write!(out, "{:>14} {:>16} {:>16} {:>16}", "t", "y", "y^Δ", "y^∇");
    if residuals {
        let _ = write!(out, " {:>16} {:>16}", "EL1", "EL2");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{:>14} {:>16} {:>16} {:>16}",
            num(r.t),
            num(r.y),
            opt(r.y_delta),
            opt(r.y_nabla)
        );
        if residuals {
            let _ = write!(
                out,
                " {:>16} {:>16}",
                opt(r.residual_el1),
                opt(r.residual_el2)
            );
        }
        out.push('\n');
    }
}

fn breakdown(out: &mut String, name: &str, b: &EvaluationBreakdown) {
    let _ = writeln!(
        out,
        "{name:<11} delta factor {}, nabla factor {}, product {}",
        num(b.delta_factor),
        num(b.nabla_factor),
        num(b.product)
    );
}

fn extremal(out: &mut String, e: &ExtremalReport, k: f64) {
    let _ = writeln!(
        out,
        "{} extremal: {}",
        e.classification,
        if e.converged {
            "converged"
        } else {
            "not converged"
        }
    );
    let _ = writeln!(out, "  start {}, {} iterations", e.start, e.iterations);
    let _ = writeln!(out, "  lambda0 = {}", num(e.lambda0));
    let _ = writeln!(out, "  lambda  = {}", num(e.lambda));
    out.push_str("  ");
    breakdown(out, "objective", &e.objective);
    out.push_str("  ");
    breakdown(out, "constraint", &e.constraint);
    let _ = writeln!(
        out,
        "  k = {}, feasibility gap {}",
        num(k),
        num(e.feasibility_gap)
    );
    let _ = writeln!(
        out,
        "  defects: EL1 {}, EL2 {} ({}); KKT residual {}",
        num(e.el1_defect),
        num(e.el2_defect),
        if e.forms_consistent {
            "forms agree"
        } else {
            "forms disagree"
        },
        num(e.kkt_residual_norm)
    );
    grid_table(out, &e.grid);
}

pub fn solve_table(r: &SolveReport) -> String {
    let mut out = String::new();
    extremal(&mut out, &r.normal, r.k);
    let _ = writeln!(out, "starts:");
    for s in &r.normal.starts {
        let _ = writeln!(
            out,
            "  #{} {:?} after {} iterations, residual {}{}",
            s.index,
            s.status,
            s.iterations,
            num(s.residual_inf),
            if s.certified { ", certified" } else { "" }
        );
    }
    if r.normal.stationary_points.len() > 1 {
        let _ = writeln!(out, "distinct stationary points:");
        for p in &r.normal.stationary_points {
            let ys: Vec<String> = p.y.iter().map(|v| num(*v)).collect();
            let _ = writeln!(
                out,
                "  start {}: y = ({}), lambda {}, objective {}",
                p.start,
                ys.join(", "),
                num(p.lambda),
                num(p.objective)
            );
        }
    }
    if r.abnormal.is_empty() {
        let _ = writeln!(out, "abnormal extremals: none");
    } else {
        for a in &r.abnormal {
            out.push('\n');
            extremal(&mut out, a, r.k);
        }
    }
    out
}

fn forms(out: &mut String, name: &str, f: &FormPair) {
    let _ = writeln!(
        out,
        "{name:<11} EL1 defect {} (mean {}), EL2 defect {} (mean {}): {}",
        num(f.el1_defect),
        num(f.el1_constant),
        num(f.el2_defect),
        num(f.el2_constant),
        if f.stationary {
            "extremal"
        } else {
            "not extremal"
        }
    );
}

fn column_table(
    out: &mut String,
    title: &str,
    rows: &[crate::GridRow],
    el1: &[Option<f64>],
    el2: &[Option<f64>],
) {
    let _ = writeln!(out, "{title}:");
    let _ = writeln!(out, "{:>14} {:>16} {:>16}", "t", "EL1", "EL2");
    for ((r, a), b) in rows.iter().zip(el1).zip(el2) {
        let _ = writeln!(out, "{:>14} {:>16} {:>16}", num(r.t), opt(*a), opt(*b));
    }
}

pub fn residual_table(r: &ResidualCmdReport) -> String {
    let mut out = String::new();
    breakdown(&mut out, "objective", &r.objective);
    breakdown(&mut out, "constraint", &r.constraint);
    let _ = writeln!(
        out,
        "k = {}, feasibility gap {}",
        num(r.k),
        num(r.feasibility_gap)
    );
    forms(&mut out, "objective", &r.objective_forms);
    forms(&mut out, "constraint", &r.constraint_forms);
    match &r.multiplied {
        Some(m) => {
            let _ = writeln!(
                out,
                "multipliers lambda0 = {}, lambda = {}: EL1 defect {} (mean {}), EL2 defect {} (mean {})",
                num(m.lambda0),
                num(m.lambda),
                num(m.forms.el1_defect),
                num(m.forms.el1_constant),
                num(m.forms.el2_defect),
                num(m.forms.el2_constant)
            );
            let _ = writeln!(
                out,
                "classification: {} (tol {}){}",
                m.classification,
                num(r.tol),
                if m.forms_consistent {
                    ""
                } else {
                    ", forms disagree"
                }
            );
            out.push_str("combined residual:\n");
            grid_table(&mut out, &r.grid);
        }
        None => grid_table(&mut out, &r.grid),
    }
    column_table(
        &mut out,
        "objective residual",
        &r.grid,
        &r.objective_residual_el1,
        &r.objective_residual_el2,
    );
    column_table(
        &mut out,
        "constraint residual",
        &r.grid,
        &r.constraint_residual_el1,
        &r.constraint_residual_el2,
    );
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn eval_table(r: &EvalReport) -> String {
    let mut out = String::new();
    breakdown(&mut out, "objective", &r.objective);
    breakdown(&mut out, "constraint", &r.constraint);
    let _ = writeln!(
        out,
        "k = {}, feasibility gap {}",
        num(r.k),
        num(r.feasibility_gap)
    );
    let _ = writeln!(out, "diamond norm {}", num(r.diamond_norm));
    grid_table(&mut out, &r.grid);
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn example_rows(r: &ExampleReport) -> Vec<(&'static str, f64)> {
    vec![
        ("boundary_error", r.boundary_error),
        ("constraint_value", r.constraint_value),
        ("lambda_fit", r.lambda_fit),
        ("solver_lambda", r.solver_lambda),
        ("kkt_residual", r.kkt_residual),
        ("el1_defect", r.el1_defect),
        ("el2_defect", r.el2_defect),
    ]
}

pub fn example_table(r: &ExampleReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "worked example M = {}: {}",
        r.m,
        if r.pass { "pass" } else { "FAIL" }
    );
    let ys: Vec<String> = r.y.iter().map(|v| num(*v)).collect();
    let _ = writeln!(out, "  y = ({})", ys.join(", "));
    for (name, v) in example_rows(r) {
        let _ = writeln!(out, "  {name:<17} {}", num(v));
    }
    for f in &r.failures {
        let _ = writeln!(out, "  failure: {f}");
    }
    out
}

pub fn example_csv(r: &ExampleReport) -> String {
    let mut rows: Vec<Vec<String>> = vec![vec!["m".into(), r.m.to_string()]];
    rows.push(vec!["pass".into(), r.pass.to_string()]);
    for (i, v) in r.y.iter().enumerate() {
        rows.push(vec![format!("y{i}"), exact(*v)]);
    }
    for (name, v) in example_rows(r) {
        rows.push(vec![name.into(), exact(v)]);
    }
    csv_text(&["quantity", "value"], rows)
}

pub fn identities_table(r: &IdentityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "identities: seed {}, {} cases, {} checks, tolerance {}: {}",
        r.seed,
        r.cases,
        r.checks,
        num(r.tolerance),
        if r.passed() { "pass" } else { "FAIL" }
    );
    for (id, worst) in &r.worst {
        let _ = writeln!(
            out,
            "  {:<22} worst relative error {}",
            format!("{id:?}"),
            num(*worst)
        );
    }
    for f in &r.failures {
        let _ = writeln!(out, "  failure: {f}");
    }
    out
}

pub fn identities_csv(r: &IdentityReport) -> String {
    csv_text(
        &["identity", "worst_relative_error"],
        r.worst
            .iter()
            .map(|(id, w)| vec![format!("{id:?}"), exact(*w)]),
    )
}

pub fn diff_table(r: &DiffReport) -> String {
    format!(
        "L     = {}\n∂L/∂t = {}\n∂L/∂u = {}\n∂L/∂v = {}\n",
        r.expression, r.d_t, r.d_u, r.d_v
    )
}

pub fn diff_csv(r: &DiffReport) -> String {
    csv_text(
        &["quantity", "expression"],
        [
            vec!["L".into(), r.expression.clone()],
            vec!["dL/dt".into(), r.d_t.clone()],
            vec!["dL/du".into(), r.d_u.clone()],
            vec!["dL/dv".into(), r.d_v.clone()],
        ],
    )
}
