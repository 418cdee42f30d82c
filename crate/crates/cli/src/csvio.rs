//! CSV rendering for iterate traces and continuous trajectories.
//!
//! Values are written with 17 significant digits so a round-trip through the
//! file reproduces the run bit-for-bit, and the byte output is deterministic
//! for golden-file comparisons.

use saddlekit::ode::ContinuousState;
use saddlekit::Trace;

/// The per-record diagnostic columns, in trace order.
pub const DIAG_COLUMNS: [&str; 5] = [
    "lyapunov_saddle",
    "lyapunov_anchor",
    "ne",
    "vi_gap_saddle",
    "dist_sq_avg_x",
];

fn cell(value: Option<f64>) -> String {
    match value {
        None => "nan".into(),
        Some(v) if v.is_nan() => "nan".into(),
        Some(f64::INFINITY) => "inf".into(),
        Some(f64::NEG_INFINITY) => "-inf".into(),
        Some(v) => format!("{v:.16e}"),
    }
}

fn header(index_column: &str, primal_dim: usize, dual_dim: usize) -> String {
    let mut columns = vec![index_column.to_string()];
    columns.extend((0..primal_dim).map(|i| format!("x_{i}")));
    columns.extend((0..dual_dim).map(|j| format!("y_{j}")));
    columns.extend(DIAG_COLUMNS.iter().map(|c| c.to_string()));
    columns.join(",")
}

/// One row per record: iteration index, iterate coordinates, then the five
/// diagnostic columns (blank diagnostics render as `nan`).
pub fn trace_csv(trace: &Trace) -> String {
    let (d1, d2) = trace
        .records
        .first()
        .map(|r| (r.x.len(), r.y.len()))
        .unwrap_or((0, 0));
    let mut out = header("k", d1, d2);
    out.push('\n');
    for record in &trace.records {
        let mut row = vec![record.k.to_string()];
        row.extend(record.x.iter().map(|&v| cell(Some(v))));
        row.extend(record.y.iter().map(|&v| cell(Some(v))));
        row.push(cell(record.diag.lyapunov_saddle));
        row.push(cell(record.diag.lyapunov_anchor));
        row.push(cell(record.diag.ne));
        row.push(cell(record.diag.vi_gap_saddle));
        row.push(cell(record.diag.dist_sq_avg_x));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Continuous trajectories share the trace layout so plots and diffs can
/// treat both alike: `t` replaces `k` and the diagnostic columns stay `nan`.
pub fn trajectory_csv(states: &[ContinuousState]) -> String {
    let (d1, d2) = states
        .first()
        .map(|s| (s.x.len(), s.y.len()))
        .unwrap_or((0, 0));
    let mut out = header("t", d1, d2);
    out.push('\n');
    for state in states {
        let mut row = vec![format!("{:.16e}", state.t)];
        row.extend(state.x.iter().map(|&v| cell(Some(v))));
        row.extend(state.y.iter().map(|&v| cell(Some(v))));
        row.extend(DIAG_COLUMNS.iter().map(|_| "nan".to_string()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
