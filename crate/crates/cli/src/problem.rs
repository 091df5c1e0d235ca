//! JSON problem files.
//!
//! ```json
//! {
//!   "timescale": {"uniform": {"a": 0, "b": 3, "n": 4}},
//!   "boundary": {"alpha": 0, "beta": 3},
//!   "objective": {"delta": "v^2", "nabla": "v^2+v"},
//!   "constraint": {"delta": "t*v", "nabla": {"constant_over_measure": true}},
//!   "k": 1,
//!   "options": {"tol": 1e-8, "multistart": 4, "seed": 0}
//! }
//! ```
//!
//! `timescale` may also be an explicit increasing list of points.

use std::sync::Arc;

use deltanabla::functional::constant_over_measure;
use deltanabla::{DeltaNablaFunctional, IsoperimetricProblem, Lagrangian, SolveOptions, TimeScale};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub timescale: TimescaleInput,
    pub boundary: Boundary,
    pub objective: FunctionalInput,
    pub constraint: FunctionalInput,
    pub k: f64,
    #[serde(default, skip_serializing_if = "OptionsInput::is_empty")]
    pub options: OptionsInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimescaleInput {
    Points(Vec<f64>),
    Uniform { uniform: UniformInput },
}

/// `n` evenly spaced points from `a` to `b`, both included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformInput {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundary {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalInput {
    pub delta: FactorInput,
    pub nabla: FactorInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorInput {
    Expr(String),
    /// The constant `1/(b-a)`.
    ConstantOverMeasure {
        constant_over_measure: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multistart: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
}

impl OptionsInput {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: OptionsInput) -> OptionsInput {
        OptionsInput {
            tol: over.tol.or(self.tol),
            max_iter: over.max_iter.or(self.max_iter),
            multistart: over.multistart.or(self.multistart),
            seed: over.seed.or(self.seed),
            spread: over.spread.or(self.spread),
        }
    }

    pub fn resolve(self) -> Result<SolveOptions, CliError> {
        let d = SolveOptions::default();
        let opts = SolveOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            multistart: self.multistart.unwrap_or(d.multistart),
            seed: self.seed.unwrap_or(d.seed),
            spread: self.spread.unwrap_or(d.spread),
        };
        if !(opts.tol > 0.0 && opts.tol.is_finite()) {
            return Err(CliError::Input(format!(
                "options.tol: must be positive, got {}",
                opts.tol
            )));
        }
        if !(opts.spread >= 0.0 && opts.spread.is_finite()) {
            return Err(CliError::Input(format!(
                "options.spread: must be non-negative, got {}",
                opts.spread
            )));
        }
        Ok(opts)
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("problem file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn scale(&self) -> Result<TimeScale, CliError> {
        let built = match &self.timescale {
            TimescaleInput::Points(p) => TimeScale::new(p.clone()),
            TimescaleInput::Uniform { uniform: u } => TimeScale::uniform(u.a, u.b, u.n),
        };
        built.map_err(|e| CliError::Input(format!("timescale: {e}")))
    }

    /// Builds the library problem.
    pub fn build(&self) -> Result<IsoperimetricProblem, CliError> {
        let scale = Arc::new(self.scale()?);
        let objective = functional(&self.objective, &scale, "objective")?;
        let constraint = functional(&self.constraint, &scale, "constraint")?;
        IsoperimetricProblem::new(
            scale,
            self.boundary.alpha,
            self.boundary.beta,
            objective,
            constraint,
            self.k,
        )
        .map_err(|e| CliError::Input(e.to_string()))
    }
}

fn factor(given: &FactorInput, scale: &TimeScale, field: &str) -> Result<Lagrangian, CliError> {
    match given {
        FactorInput::Expr(text) => Lagrangian::parse(text)
            .map_err(|e| CliError::Input(format!("{field}: {e} in `{text}`"))),
        FactorInput::ConstantOverMeasure {
            constant_over_measure: true,
        } => Ok(constant_over_measure(scale)),
        FactorInput::ConstantOverMeasure {
            constant_over_measure: false,
        } => Err(CliError::Input(format!(
            "{field}: constant_over_measure must be true when given"
        ))),
    }
}

fn functional(
    given: &FunctionalInput,
    scale: &TimeScale,
    field: &str,
) -> Result<DeltaNablaFunctional, CliError> {
    Ok(DeltaNablaFunctional::new(
        factor(&given.delta, scale, &format!("{field}.delta"))?,
        factor(&given.nabla, scale, &format!("{field}.nabla"))?,
    ))
}

/// The worked example on `{0, ..., m}` as a problem file.
pub fn worked_example_file(m: usize) -> ProblemFile {
    ProblemFile {
        timescale: TimescaleInput::Uniform {
            uniform: UniformInput {
                a: 0.0,
                b: m as f64,
                n: m + 1,
            },
        },
        boundary: Boundary {
            alpha: 0.0,
            beta: m as f64,
        },
        objective: FunctionalInput {
            delta: FactorInput::Expr("v^2".into()),
            nabla: FactorInput::Expr("v^2+v".into()),
        },
        constraint: FunctionalInput {
            delta: FactorInput::Expr("t*v".into()),
            nabla: FactorInput::ConstantOverMeasure {
                constant_over_measure: true,
            },
        },
        k: 1.0,
        options: OptionsInput::default(),
    }
}
