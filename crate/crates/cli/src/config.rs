//! Experiment configuration: the JSON schema, strict unknown-key checking,
//! and the `SADDLEKIT_SEED` environment override.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use saddlekit::problems::{
    difference_matrix, make_basis_pursuit, make_counterexample, make_generalized_lasso,
    seeded_lasso, seeded_quadratic_saddle,
};
use saddlekit::{Algorithm, FunctionDescriptor, Matrix, SaddleProblem, StepSchedule, Vector};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentSpec {
    pub problem: ProblemConfig,
    pub algorithm: Algorithm,
    pub schedule: StepSchedule,
    pub x0: Vector,
    pub y0: Vector,
    pub iterations: usize,
    #[serde(default)]
    pub diagnostics: DiagnosticsMode,
    #[serde(default, skip_serializing_if = "Outputs::is_empty")]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
    /// Waives the step-size bound; accepted for Arrow-Hurwicz runs only.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub demonstration: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticsMode {
    #[default]
    All,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

impl Outputs {
    pub fn is_empty(&self) -> bool {
        self.csv.is_none() && self.json.is_none() && self.svg.is_none()
    }
}

// Config values exist once per process; variant size imbalance is irrelevant.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemConfig {
    Counterexample,
    GeneralizedLasso {
        a: Matrix,
        b: Vector,
        lambda: f64,
        coupling: CouplingConfig,
    },
    BasisPursuit {
        a: Matrix,
        b: Vector,
    },
    SeededLasso {
        rows: usize,
        dim: usize,
        lambda: f64,
        #[serde(default)]
        coupling: CouplingKind,
        seed: u64,
    },
    SeededQuadratic {
        #[serde(rename = "primal-dim")]
        primal_dim: usize,
        #[serde(rename = "dual-dim")]
        dual_dim: usize,
        seed: u64,
    },
    Custom {
        f: FunctionDescriptor,
        #[serde(rename = "g-star")]
        g_star: FunctionDescriptor,
        coupling: Matrix,
    },
}

/// Coupling matrices can be written inline or named.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingConfig {
    Named(CouplingKind),
    Inline(Matrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    #[default]
    Identity,
    Difference,
}

impl CouplingKind {
    fn materialize(self, dim: usize) -> Result<Matrix, CliError> {
        match self {
            CouplingKind::Identity => Ok(Matrix::identity(dim)),
            CouplingKind::Difference => Ok(difference_matrix(dim)?),
        }
    }
}

impl CouplingConfig {
    fn materialize(&self, dim: usize) -> Result<Matrix, CliError> {
        match self {
            CouplingConfig::Named(kind) => kind.materialize(dim),
            CouplingConfig::Inline(m) => Ok(m.clone()),
        }
    }
}

impl ProblemConfig {
    pub fn build(&self) -> Result<SaddleProblem, CliError> {
        let problem = match self {
            ProblemConfig::Counterexample => make_counterexample(),
            ProblemConfig::GeneralizedLasso {
                a,
                b,
                lambda,
                coupling,
            } => {
                let f = coupling.materialize(a.cols())?;
                make_generalized_lasso(a.clone(), b.clone(), *lambda, f)?
            }
            ProblemConfig::BasisPursuit { a, b } => make_basis_pursuit(a.clone(), b.clone())?,
            ProblemConfig::SeededLasso {
                rows,
                dim,
                lambda,
                coupling,
                seed,
            } => {
                let f = coupling.materialize(*dim)?;
                seeded_lasso(*rows, *dim, *lambda, f, *seed)?
            }
            ProblemConfig::SeededQuadratic {
                primal_dim,
                dual_dim,
                seed,
            } => seeded_quadratic_saddle(*primal_dim, *dual_dim, *seed)?,
            ProblemConfig::Custom {
                f,
                g_star,
                coupling,
            } => SaddleProblem::new(f.clone(), g_star.clone(), coupling.clone())?,
        };
        Ok(problem)
    }

    /// Short name for summary lines.
    pub fn label(&self) -> &'static str {
        match self {
            ProblemConfig::Counterexample => "counterexample",
            ProblemConfig::GeneralizedLasso { .. } => "generalized-lasso",
            ProblemConfig::BasisPursuit { .. } => "basis-pursuit",
            ProblemConfig::SeededLasso { .. } => "seeded-lasso",
            ProblemConfig::SeededQuadratic { .. } => "seeded-quadratic",
            ProblemConfig::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PlotSpec {
    pub kind: PlotKind,
    /// Trace columns to draw; defaults depend on the kind (`x_0`/`y_0` for
    /// trajectories, `ne` for series).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_label: Option<String>,
}

impl PlotSpec {
    /// The default figure: the iterate path in the first primal/dual plane.
    pub fn default_trajectory() -> Self {
        PlotSpec {
            kind: PlotKind::Trajectory2d,
            columns: Vec::new(),
            title: String::new(),
            x_label: None,
            y_label: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Trajectory2d,
    SeriesLoglog,
    SeriesLinear,
}

const TOP_KEYS: &[&str] = &[
    "problem",
    "algorithm",
    "schedule",
    "x0",
    "y0",
    "iterations",
    "diagnostics",
    "outputs",
    "seed",
    "demonstration",
    "plot",
];
const SCHEDULE_KEYS: &[&str] = &["s", "tau", "sigma"];
const OUTPUT_KEYS: &[&str] = &["csv", "json", "svg"];
const PLOT_KEYS: &[&str] = &["kind", "columns", "title", "x-label", "y-label"];

fn problem_keys(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "counterexample" => &["kind"],
        "generalized-lasso" => &["kind", "a", "b", "lambda", "coupling"],
        "basis-pursuit" => &["kind", "a", "b"],
        "seeded-lasso" => &["kind", "rows", "dim", "lambda", "coupling", "seed"],
        "seeded-quadratic" => &["kind", "primal-dim", "dual-dim", "seed"],
        "custom" => &["kind", "f", "g-star", "coupling"],
        _ => return None,
    })
}

fn descriptor_keys(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "quadratic" => &["kind", "p", "q", "constant"],
        "least-squares" => &["kind", "a", "b"],
        "scaled-l1" => &["kind", "lambda"],
        "linear" => &["kind", "c"],
        "indicator-linf-ball" => &["kind", "radius"],
        "indicator-affine" => &["kind", "a", "b"],
        "zero" => &["kind"],
        _ => return None,
    })
}

fn note_unknown_keys(value: &Value, path: &str, allowed: &[&str], unknown: &mut Vec<String>) {
    if let Value::Object(map) = value {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                unknown.push(if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                });
            }
        }
    }
}

fn object_kind(value: &Value) -> Option<&str> {
    value.get("kind").and_then(Value::as_str)
}

/// Every key the document carries that the schema does not know about, as
/// dotted paths. Objects with an unrecognized `kind` are skipped here: the
/// typed parse reports the bad kind with the valid alternatives.
fn collect_unknown_keys(root: &Value) -> Vec<String> {
    let mut unknown = Vec::new();
    note_unknown_keys(root, "", TOP_KEYS, &mut unknown);
    if let Some(problem) = root.get("problem") {
        if let Some(allowed) = object_kind(problem).and_then(problem_keys) {
            note_unknown_keys(problem, "problem", allowed, &mut unknown);
        }
        for (field, label) in [("f", "problem.f"), ("g-star", "problem.g-star")] {
            if let Some(descriptor) = problem.get(field) {
                if let Some(allowed) = object_kind(descriptor).and_then(descriptor_keys) {
                    note_unknown_keys(descriptor, label, allowed, &mut unknown);
                }
            }
        }
    }
    if let Some(schedule) = root.get("schedule") {
        note_unknown_keys(schedule, "schedule", SCHEDULE_KEYS, &mut unknown);
    }
    if let Some(outputs) = root.get("outputs") {
        note_unknown_keys(outputs, "outputs", OUTPUT_KEYS, &mut unknown);
    }
    if let Some(plot) = root.get("plot") {
        note_unknown_keys(plot, "plot", PLOT_KEYS, &mut unknown);
    }
    unknown
}

/// Parses and validates an experiment document. Rejections carry enough of
/// the document back to fix it in one pass: all unknown keys are listed, and
/// schedule mistakes name the expected key combinations.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, CliError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))?;
    let unknown = collect_unknown_keys(&value);
    if !unknown.is_empty() {
        return Err(CliError::Config(format!(
            "unknown configuration keys: {}",
            unknown.join(", ")
        )));
    }
    if let Some(schedule) = value.get("schedule").and_then(Value::as_object) {
        let has = |k: &str| schedule.contains_key(k);
        if has("s") && (has("tau") || has("sigma")) {
            return Err(CliError::Config(
                "schedule is ambiguous: give either \"s\" or \"tau\" and \"sigma\"".into(),
            ));
        }
        if !has("s") && !(has("tau") && has("sigma")) {
            return Err(CliError::Config(
                "schedule needs \"s\" or both \"tau\" and \"sigma\"".into(),
            ));
        }
    }
    serde_json::from_value(value)
        .map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
}

/// Applies `SADDLEKIT_SEED` on top of the parsed document.
pub fn apply_env_overrides(spec: &mut ExperimentSpec) -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("SADDLEKIT_SEED") {
        spec.seed = raw.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "SADDLEKIT_SEED must be a nonnegative integer, got {raw:?}"
            ))
        })?;
    }
    Ok(())
}
