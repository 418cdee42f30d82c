//! Turns a parsed [`ExperimentSpec`] into a run and its artifacts.

use std::fs;
use std::path::Path;

use serde::Serialize;

use saddlekit::diagnostics::{self, DiagnosticsReport};
use saddlekit::problems::saddle_oracle;
use saddlekit::solvers::{self, RunOptions};
use saddlekit::{SaddleCertificate, SaddleProblem, Trace};

use crate::config::{DiagnosticsMode, ExperimentSpec, PlotSpec};
use crate::error::CliError;
use crate::{csvio, svg};

/// A finished run plus everything derived from it.
#[derive(Debug)]
pub struct Outcome {
    pub problem: SaddleProblem,
    pub certificate: Option<SaddleCertificate>,
    pub trace: Trace,
    pub report: Option<DiagnosticsReport>,
}

/// The JSON artifact: run metadata, the saddle (when one was validated), and
/// the diagnostics report.
#[derive(Serialize)]
struct JsonDocument<'a> {
    meta: &'a saddlekit::solvers::TraceMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: &'a Option<SaddleCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: &'a Option<DiagnosticsReport>,
}

/// Rejects starting points whose shape does not match the problem before
/// any arithmetic sees them.
pub fn check_dimensions(spec: &ExperimentSpec, problem: &SaddleProblem) -> Result<(), CliError> {
    if spec.x0.len() != problem.primal_dim() {
        return Err(CliError::Config(format!(
            "x0 has {} entries but the problem's primal dimension is {}",
            spec.x0.len(),
            problem.primal_dim()
        )));
    }
    if spec.y0.len() != problem.dual_dim() {
        return Err(CliError::Config(format!(
            "y0 has {} entries but the problem's dual dimension is {}",
            spec.y0.len(),
            problem.dual_dim()
        )));
    }
    Ok(())
}

pub fn execute(spec: &ExperimentSpec) -> Result<Outcome, CliError> {
    let problem = spec.problem.build()?;
    check_dimensions(spec, &problem)?;
    // A missing saddle just disables the anchored diagnostics.
    let certificate = saddle_oracle(&problem).ok();
    let mut hooks = match spec.diagnostics {
        DiagnosticsMode::All => diagnostics::standard_hooks(certificate.as_ref()),
        DiagnosticsMode::None => Vec::new(),
    };
    let options = RunOptions {
        demonstration: spec.demonstration,
        ne_stop: None,
        seed: spec.seed,
    };
    let trace = solvers::run(
        &problem,
        spec.algorithm,
        spec.schedule,
        spec.x0.clone(),
        spec.y0.clone(),
        spec.iterations,
        &mut solvers::hook_refs(&mut hooks),
        &options,
    )?;
    let report = match spec.diagnostics {
        DiagnosticsMode::All => Some(diagnostics::report(&problem, &trace, certificate.as_ref())?),
        DiagnosticsMode::None => None,
    };
    Ok(Outcome {
        problem,
        certificate,
        trace,
        report,
    })
}

/// Writes via a sibling temp file and rename so partial output never lands
/// under the final name.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{ext}.tmp"),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_artifacts(spec: &ExperimentSpec, outcome: &Outcome) -> Result<(), CliError> {
    if let Some(path) = &spec.outputs.csv {
        write_atomic(path, &csvio::trace_csv(&outcome.trace))?;
    }
    if let Some(path) = &spec.outputs.json {
        let document = JsonDocument {
            meta: &outcome.trace.meta,
            certificate: &outcome.certificate,
            report: &outcome.report,
        };
        let mut text = serde_json::to_string_pretty(&document)
            .map_err(|e| CliError::Config(format!("serializing run document: {e}")))?;
        text.push('\n');
        write_atomic(path, &text)?;
    }
    if let Some(path) = &spec.outputs.svg {
        let default_plot = PlotSpec::default_trajectory();
        let plot = spec.plot.as_ref().unwrap_or(&default_plot);
        let figure = svg::render_trace(&outcome.trace, plot, outcome.certificate.as_ref())?;
        write_atomic(path, &figure)?;
    }
    Ok(())
}

/// One-line summary printed after a successful run.
pub fn summary_line(spec: &ExperimentSpec, outcome: &Outcome) -> String {
    let last = outcome.trace.last();
    let mut line = format!(
        "{} {} steps={} final_x[0]={:.6e}",
        spec.problem.label(),
        spec.algorithm,
        outcome.trace.steps(),
        last.x.as_slice()[0],
    );
    if let Some(report) = &outcome.report {
        if let Some(ne_last) = report.ne.last() {
            line.push_str(&format!(" ne_last={ne_last:.6e}"));
        }
        let failed = report.bound_checks.iter().filter(|c| !c.pass).count();
        line.push_str(&format!(
            " bounds={}/{} skipped={}",
            report.bound_checks.len() - failed,
            report.bound_checks.len(),
            report.skipped_checks.len()
        ));
    }
    line
}
