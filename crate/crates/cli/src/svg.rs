//! Self-contained SVG figures rendered straight from a trace — no plotting
//! dependency, deterministic bytes, and a small fixed canvas.

use saddlekit::{SaddleCertificate, Trace};

use crate::config::{PlotKind, PlotSpec};
use crate::csvio::DIAG_COLUMNS;
use crate::error::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 5] = ["#1f6fb2", "#d1495b", "#3c8d53", "#8a5fbf", "#c78f2d"];

/// A labeled source of per-record values.
enum Column {
    Iteration,
    Primal(usize),
    Dual(usize),
    Diag(usize),
}

fn resolve_column(trace: &Trace, name: &str) -> Result<Column, CliError> {
    let (d1, d2) = trace
        .records
        .first()
        .map(|r| (r.x.len(), r.y.len()))
        .unwrap_or((0, 0));
    if name == "k" {
        return Ok(Column::Iteration);
    }
    if let Some(i) = name
        .strip_prefix("x_")
        .and_then(|s| s.parse::<usize>().ok())
    {
        if i < d1 {
            return Ok(Column::Primal(i));
        }
    }
    if let Some(j) = name
        .strip_prefix("y_")
        .and_then(|s| s.parse::<usize>().ok())
    {
        if j < d2 {
            return Ok(Column::Dual(j));
        }
    }
    if let Some(c) = DIAG_COLUMNS.iter().position(|&c| c == name) {
        return Ok(Column::Diag(c));
    }
    let mut available = vec!["k".to_string()];
    available.extend((0..d1).map(|i| format!("x_{i}")));
    available.extend((0..d2).map(|j| format!("y_{j}")));
    available.extend(DIAG_COLUMNS.iter().map(|c| c.to_string()));
    Err(CliError::Config(format!(
        "unknown plot column {name:?} (available: {})",
        available.join(", ")
    )))
}

fn column_value(trace: &Trace, column: &Column, index: usize) -> Option<f64> {
    let record = &trace.records[index];
    match column {
        Column::Iteration => Some(record.k as f64),
        Column::Primal(i) => Some(record.x.as_slice()[*i]),
        Column::Dual(j) => Some(record.y.as_slice()[*j]),
        Column::Diag(c) => match c {
            0 => record.diag.lyapunov_saddle,
            1 => record.diag.lyapunov_anchor,
            2 => record.diag.ne,
            3 => record.diag.vi_gap_saddle,
            _ => record.diag.dist_sq_avg_x,
        },
    }
}

/// Saddle coordinate along a plotted axis, when the axis is an iterate
/// coordinate.
fn certificate_coordinate(cert: &SaddleCertificate, column: &Column) -> Option<f64> {
    match column {
        Column::Primal(i) => Some(cert.x_star.as_slice()[*i]),
        Column::Dual(j) => Some(cert.y_star.as_slice()[*j]),
        _ => None,
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_tick(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    let magnitude = value.abs();
    if (1e-3..1e4).contains(&magnitude) {
        let text = format!("{value:.3}");
        let trimmed = text.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        format!("{value:.2e}")
    }
}

#[derive(Debug, Clone, Copy)]
struct AxisRange {
    min: f64,
    max: f64,
    log: bool,
}

impl AxisRange {
    fn from_values(values: impl Iterator<Item = f64>, log: bool) -> Result<Self, CliError> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            let v = if log { v.log10() } else { v };
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            return Err(CliError::Config(
                "plot has no finite data points in the selected columns".into(),
            ));
        }
        if max - min < 1e-12 {
            // Flat series still deserve a visible line through the middle.
            min -= 0.5;
            max += 0.5;
        }
        Ok(AxisRange { min, max, log })
    }

    fn fraction(&self, value: f64) -> f64 {
        let v = if self.log { value.log10() } else { value };
        (v - self.min) / (self.max - self.min)
    }

    fn tick_values(&self) -> Vec<f64> {
        (0..TICKS)
            .map(|i| {
                let t = self.min + (self.max - self.min) * i as f64 / (TICKS - 1) as f64;
                if self.log {
                    10f64.powf(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

struct Canvas {
    x: AxisRange,
    y: AxisRange,
}

impl Canvas {
    fn px(&self, value: f64) -> f64 {
        MARGIN_LEFT + self.x.fraction(value) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, value: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - self.y.fraction(value) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    fn frame(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        out.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{}\" height=\"{}\" \
             fill=\"none\" stroke=\"#444444\"/>\n",
            WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            HEIGHT - MARGIN_TOP - MARGIN_BOTTOM,
        ));
        if !title.is_empty() {
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"15\" \
                 font-family=\"sans-serif\">{}</text>\n",
                WIDTH / 2.0,
                MARGIN_TOP - 14.0,
                escape(title)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" \
             font-family=\"sans-serif\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        ));
        out.push_str(&format!(
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" \
             font-family=\"sans-serif\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            escape(y_label)
        ));
        for tick in self.x.tick_values() {
            let px = self.px(tick);
            out.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{0}\" x2=\"{px:.2}\" y2=\"{1}\" stroke=\"#444444\"/>\n",
                HEIGHT - MARGIN_BOTTOM,
                HEIGHT - MARGIN_BOTTOM + 5.0,
            ));
            out.push_str(&format!(
                "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\" \
                 font-family=\"sans-serif\">{}</text>\n",
                HEIGHT - MARGIN_BOTTOM + 18.0,
                escape(&fmt_tick(tick))
            ));
        }
        for tick in self.y.tick_values() {
            let py = self.py(tick);
            out.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{py:.2}\" x2=\"{1}\" y2=\"{py:.2}\" stroke=\"#444444\"/>\n",
                MARGIN_LEFT - 5.0,
                MARGIN_LEFT,
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" \
                 font-family=\"sans-serif\">{}</text>\n",
                MARGIN_LEFT - 8.0,
                py + 4.0,
                escape(&fmt_tick(tick))
            ));
        }
    }

    fn polyline(&self, out: &mut String, points: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            coords.join(" ")
        ));
    }
}

fn document(body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         fill=\"#ffffff\"/>\n{body}</svg>\n"
    )
}

fn render_trajectory(
    trace: &Trace,
    plot: &PlotSpec,
    certificate: Option<&SaddleCertificate>,
) -> Result<String, CliError> {
    let names: Vec<String> = if plot.columns.is_empty() {
        vec!["x_0".into(), "y_0".into()]
    } else {
        plot.columns.clone()
    };
    if names.len() != 2 {
        return Err(CliError::Config(format!(
            "trajectory-2d needs exactly 2 columns, got {}",
            names.len()
        )));
    }
    let cols: Vec<Column> = names
        .iter()
        .map(|n| resolve_column(trace, n))
        .collect::<Result<_, _>>()?;
    let points: Vec<(f64, f64)> = (0..trace.records.len())
        .filter_map(|i| {
            let a = column_value(trace, &cols[0], i)?;
            let b = column_value(trace, &cols[1], i)?;
            (a.is_finite() && b.is_finite()).then_some((a, b))
        })
        .collect();
    if points.len() < 2 {
        return Err(CliError::Config(
            "trajectory plot needs at least 2 records with finite coordinates".into(),
        ));
    }
    let saddle = certificate.and_then(|cert| {
        Some((
            certificate_coordinate(cert, &cols[0])?,
            certificate_coordinate(cert, &cols[1])?,
        ))
    });
    let canvas = Canvas {
        x: AxisRange::from_values(points.iter().map(|p| p.0).chain(saddle.map(|s| s.0)), false)?,
        y: AxisRange::from_values(points.iter().map(|p| p.1).chain(saddle.map(|s| s.1)), false)?,
    };
    let mut body = String::new();
    canvas.frame(
        &mut body,
        &plot.title,
        plot.x_label.as_deref().unwrap_or(&names[0]),
        plot.y_label.as_deref().unwrap_or(&names[1]),
    );
    canvas.polyline(&mut body, &points, PALETTE[0]);
    let (sx, sy) = points[0];
    body.push_str(&format!(
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{}\"/>\n",
        canvas.px(sx),
        canvas.py(sy),
        PALETTE[0]
    ));
    if let Some((cx, cy)) = saddle {
        body.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"none\" stroke=\"{}\" \
             stroke-width=\"1.5\"/>\n",
            canvas.px(cx),
            canvas.py(cy),
            PALETTE[1]
        ));
    }
    Ok(document(&body))
}

fn render_series(trace: &Trace, plot: &PlotSpec, log: bool) -> Result<String, CliError> {
    let names: Vec<String> = if plot.columns.is_empty() {
        vec!["ne".into()]
    } else {
        plot.columns.clone()
    };
    let mut series = Vec::new();
    for name in &names {
        let col = resolve_column(trace, name)?;
        let points: Vec<(f64, f64)> = (0..trace.records.len())
            .filter_map(|i| {
                let k = trace.records[i].k as f64;
                let v = column_value(trace, &col, i)?;
                let usable = v.is_finite() && (!log || (v > 0.0 && k >= 1.0));
                usable.then_some((k, v))
            })
            .collect();
        if points.len() < 2 {
            return Err(CliError::Config(format!(
                "series column {name:?} has fewer than 2 plottable points"
            )));
        }
        series.push((name.clone(), points));
    }
    let canvas = Canvas {
        x: AxisRange::from_values(
            series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0)),
            log,
        )?,
        y: AxisRange::from_values(
            series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)),
            log,
        )?,
    };
    let mut body = String::new();
    canvas.frame(
        &mut body,
        &plot.title,
        plot.x_label.as_deref().unwrap_or("k"),
        plot.y_label.as_deref().unwrap_or(""),
    );
    for (idx, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        canvas.polyline(&mut body, points, color);
        let ly = MARGIN_TOP + 16.0 + 16.0 * idx as f64;
        body.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{ly:.2}\" x2=\"{1}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>\n",
            WIDTH - MARGIN_RIGHT - 120.0,
            WIDTH - MARGIN_RIGHT - 96.0,
        ));
        body.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"11\" font-family=\"sans-serif\">{}</text>\n",
            WIDTH - MARGIN_RIGHT - 90.0,
            ly + 4.0,
            escape(name)
        ));
    }
    Ok(document(&body))
}

/// Renders one figure from a trace. The saddle marker appears on trajectory
/// plots when a certificate is available and both axes are iterate
/// coordinates.
pub fn render_trace(
    trace: &Trace,
    plot: &PlotSpec,
    certificate: Option<&SaddleCertificate>,
) -> Result<String, CliError> {
    match plot.kind {
        PlotKind::Trajectory2d => render_trajectory(trace, plot, certificate),
        PlotKind::SeriesLinear => render_series(trace, plot, false),
        PlotKind::SeriesLoglog => render_series(trace, plot, true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use saddlekit::solvers::{self, Algorithm, RunOptions, StepSchedule};
    use saddlekit::{diagnostics, problems, Vector};

    fn v(entries: &[f64]) -> Vector {
        Vector::new(entries.to_vec()).unwrap()
    }

    fn hexagon_trace() -> Trace {
        let problem = problems::make_counterexample();
        solvers::run(
            &problem,
            Algorithm::ArrowHurwicz,
            StepSchedule::Single { s: 1.0 },
            v(&[0.0]),
            v(&[1.0]),
            6,
            &mut [],
            &RunOptions {
                demonstration: true,
                ..RunOptions::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn trajectory_contains_polyline_and_markers() {
        let trace = hexagon_trace();
        let cert =
            problems::certify(&problems::make_counterexample(), v(&[1.0]), v(&[1.0])).unwrap();
        let svg = render_trace(&trace, &PlotSpec::default_trajectory(), Some(&cert)).unwrap();
        assert!(svg.starts_with("<svg xmlns"));
        assert!(svg.trim_end().ends_with("</svg>"));
        let polyline = svg.split("<polyline points=\"").nth(1).unwrap();
        let coords = polyline.split('"').next().unwrap();
        assert_eq!(
            coords.split(' ').count(),
            7,
            "closed hexagon draws 7 vertices"
        );
        assert_eq!(
            svg.matches("<circle").count(),
            2,
            "start and saddle markers"
        );
    }

    #[test]
    fn unknown_columns_list_the_choices() {
        let trace = hexagon_trace();
        let plot = PlotSpec {
            columns: vec!["x_0".into(), "speed".into()],
            ..PlotSpec::default_trajectory()
        };
        let err = render_trace(&trace, &plot, None).unwrap_err().to_string();
        assert!(
            err.contains("speed") && err.contains("vi_gap_saddle"),
            "{err}"
        );
    }

    #[test]
    fn loglog_series_skips_nonpositive_points() {
        let problem = problems::seeded_lasso(6, 4, 0.3, saddlekit::Matrix::identity(4), 5).unwrap();
        let cert = problems::saddle_oracle(&problem).unwrap();
        let mut hooks = diagnostics::standard_hooks(Some(&cert));
        let trace = solvers::run(
            &problem,
            Algorithm::Pdhg,
            StepSchedule::Single {
                s: 0.9 / problem.coupling_norm(),
            },
            Vector::zeros(4),
            Vector::zeros(4),
            50,
            &mut solvers::hook_refs(&mut hooks),
            &RunOptions::default(),
        )
        .unwrap();
        let plot = PlotSpec {
            kind: PlotKind::SeriesLoglog,
            columns: vec!["ne".into(), "lyapunov_saddle".into()],
            title: "decay".into(),
            x_label: None,
            y_label: None,
        };
        let svg = render_trace(&trace, &plot, Some(&cert)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("lyapunov_saddle"));
    }

    #[test]
    fn titles_are_xml_escaped() {
        let trace = hexagon_trace();
        let plot = PlotSpec {
            title: "a < b & \"c\"".into(),
            ..PlotSpec::default_trajectory()
        };
        let svg = render_trace(&trace, &plot, None).unwrap();
        assert!(svg.contains("a &lt; b &amp; &quot;c&quot;"));
        assert!(!svg.contains("a < b"));
    }

    #[test]
    fn tick_labels_compact_by_magnitude() {
        assert_eq!(fmt_tick(0.0), "0");
        assert_eq!(fmt_tick(1.5), "1.5");
        assert_eq!(fmt_tick(2.0), "2");
        assert_eq!(fmt_tick(0.25), "0.25");
        assert_eq!(fmt_tick(12345.0), "1.23e4");
        assert_eq!(fmt_tick(0.00012), "1.20e-4");
    }
}
