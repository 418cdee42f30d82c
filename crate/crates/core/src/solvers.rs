//! Discrete-time primal-dual iterations and the trace machinery around them.
//!
//! All three solvers share the same skeleton: a proximal descent step on the
//! primal block followed by a proximal ascent step on the dual block. They
//! differ only in what the dual step looks at — the fresh primal iterate
//! (Arrow-Hurwicz) or its extrapolation `2 x_{k+1} - x_k` (the PDHG family).
//! That one-line difference separates orbiting from convergence on bilinear
//! problems, which is the behavior this crate exists to exhibit.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::Vector;
use crate::problems::SaddleProblem;

/// Iterates whose joint norm exceeds this are reported as divergence.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Alternating prox steps with no extrapolation; may orbit forever on
    /// bilinear couplings.
    ArrowHurwicz,
    /// Extrapolated dual update with one shared step size.
    Pdhg,
    /// Extrapolated dual update with separate primal/dual step sizes.
    GeneralPdhg,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::ArrowHurwicz => "arrow-hurwicz",
            Algorithm::Pdhg => "pdhg",
            Algorithm::GeneralPdhg => "general-pdhg",
        }
    }

    pub fn uses_extrapolation(self) -> bool {
        !matches!(self, Algorithm::ArrowHurwicz)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arrow-hurwicz" => Ok(Algorithm::ArrowHurwicz),
            "pdhg" => Ok(Algorithm::Pdhg),
            "general-pdhg" => Ok(Algorithm::GeneralPdhg),
            other => Err(Error::InvalidDescriptor {
                reason: format!(
                    "unknown algorithm '{other}' (expected arrow-hurwicz, pdhg, or general-pdhg)"
                ),
            }),
        }
    }
}

/// Step sizes for a run: one shared `s`, or a `(tau, sigma)` pair for the
/// primal and dual blocks. `Pair { tau: s, sigma: s }` and `Single { s }`
/// drive the iterations through identical arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSchedule {
    Single { s: f64 },
    Pair { tau: f64, sigma: f64 },
}

impl StepSchedule {
    pub fn tau(&self) -> f64 {
        match self {
            StepSchedule::Single { s } => *s,
            StepSchedule::Pair { tau, .. } => *tau,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            StepSchedule::Single { s } => *s,
            StepSchedule::Pair { sigma, .. } => *sigma,
        }
    }

    /// `sqrt(tau * sigma)`, the scale that multiplies `|F|` in every
    /// step-size condition.
    pub fn geometric_step(&self) -> f64 {
        (self.tau() * self.sigma()).sqrt()
    }

    pub(crate) fn ensure_positive(&self) -> Result<()> {
        for step in [self.tau(), self.sigma()] {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::InvalidStep { step });
            }
        }
        Ok(())
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Single { s } => write!(f, "s = {s}"),
            StepSchedule::Pair { tau, sigma } => write!(f, "tau = {tau}, sigma = {sigma}"),
        }
    }
}

/// What a schedule validation established about `tau * sigma * |F|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCheck {
    /// `sqrt(tau * sigma) * |F|`.
    pub step_norm: f64,
    /// `tau * sigma * |F|^2`, the quantity the convergence theory bounds by 1.
    pub product_bound: f64,
}

/// Checks `tau * sigma * |F|^2 <= 1` (or `< 1` when `strict`), reporting the
/// violating product by name on failure.
pub fn validate_schedule(
    problem: &SaddleProblem,
    schedule: &StepSchedule,
    strict: bool,
) -> Result<ScheduleCheck> {
    schedule.ensure_positive()?;
    let step_norm = schedule.geometric_step() * problem.coupling_norm();
    let name = match schedule {
        StepSchedule::Single { .. } => "s*|F|",
        StepSchedule::Pair { .. } => "sqrt(tau*sigma)*|F|",
    };
    let ok = if strict {
        step_norm < 1.0
    } else {
        step_norm <= 1.0
    };
    if !ok {
        return Err(Error::ScheduleBound {
            step_norm_name: name,
            step_norm,
            relation: if strict { "<" } else { "<=" },
        });
    }
    Ok(ScheduleCheck {
        step_norm,
        product_bound: step_norm * step_norm,
    })
}

/// Current iterate plus the running sums that make ergodic averages cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Number of completed steps.
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    /// Primal iterate one step back (equals `x` before any step); the
    /// extrapolated point the dual update saw is `2x - x_prev`.
    pub x_prev: Vector,
    /// Sum of `x_1..=x_k` (the initial point is not part of the average).
    pub sum_x: Vector,
    pub sum_y: Vector,
}

impl SolverState {
    pub fn initial(x0: Vector, y0: Vector) -> Self {
        let sum_x = Vector::zeros(x0.len());
        let sum_y = Vector::zeros(y0.len());
        SolverState {
            k: 0,
            x_prev: x0.clone(),
            x: x0,
            y: y0,
            sum_x,
            sum_y,
        }
    }

    /// Ergodic averages `(sum x_j / k, sum y_j / k)`; `None` before any step.
    pub fn average(&self) -> Option<(Vector, Vector)> {
        if self.k == 0 {
            return None;
        }
        let inv = 1.0 / self.k as f64;
        Some((self.sum_x.scaled(inv), self.sum_y.scaled(inv)))
    }
}

/// One prox-descent / prox-ascent sweep. With `extrapolate` the dual step
/// sees `2 x_{k+1} - x_k`; without it, just `x_{k+1}`.
fn momentum_step(
    problem: &SaddleProblem,
    state: &SolverState,
    tau: f64,
    sigma: f64,
    extrapolate: bool,
) -> Result<SolverState> {
    ensure_len(&state.x, problem.primal_dim(), "solver state primal block")?;
    ensure_len(&state.y, problem.dual_dim(), "solver state dual block")?;
    let v_x = state
        .x
        .add_scaled(-tau, &problem.coupling().matvec_t(&state.y)?);
    let x_next = problem.f().prox(tau, &v_x)?;
    let x_bar = if extrapolate {
        x_next.scaled(2.0).sub(&state.x)
    } else {
        x_next.clone()
    };
    let v_y = state
        .y
        .add_scaled(sigma, &problem.coupling().matvec(&x_bar)?);
    let y_next = problem.g_star().prox(sigma, &v_y)?;
    Ok(SolverState {
        k: state.k + 1,
        sum_x: state.sum_x.add(&x_next),
        sum_y: state.sum_y.add(&y_next),
        x_prev: state.x.clone(),
        x: x_next,
        y: y_next,
    })
}

/// Arrow-Hurwicz step: dual update sees the fresh primal iterate directly.
pub fn arrow_hurwicz_step(
    problem: &SaddleProblem,
    state: &SolverState,
    s: f64,
) -> Result<SolverState> {
    momentum_step(problem, state, s, s, false)
}

/// PDHG step with one shared step size.
pub fn pdhg_step(problem: &SaddleProblem, state: &SolverState, s: f64) -> Result<SolverState> {
    momentum_step(problem, state, s, s, true)
}

/// PDHG step with separate primal (`tau`) and dual (`sigma`) step sizes.
/// With `tau == sigma` this reproduces [`pdhg_step`] exactly, bit for bit.
pub fn general_pdhg_step(
    problem: &SaddleProblem,
    state: &SolverState,
    tau: f64,
    sigma: f64,
) -> Result<SolverState> {
    momentum_step(problem, state, tau, sigma, true)
}

/// Identity of a run, stamped onto every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub algorithm: Algorithm,
    pub schedule: StepSchedule,
    /// [`SaddleProblem::content_hash`] of the problem that produced the run.
    pub problem_hash: u64,
    /// Seed for any randomness attached to the run (probe draws, instance
    /// generation); the iterations themselves are deterministic.
    pub seed: u64,
}

/// Per-record diagnostic values, filled in by whichever hooks were attached.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticFields {
    /// Schedule-metric distance to the saddle anchor.
    pub lyapunov_saddle: Option<f64>,
    /// Same quantity anchored at the initial point.
    pub lyapunov_anchor: Option<f64>,
    /// Step displacement in the schedule metric (stored on the record the
    /// step started from).
    pub ne: Option<f64>,
    /// Objective gap of the running ergodic average against the saddle.
    pub vi_gap_saddle: Option<f64>,
    /// Squared distance of the running primal average to the saddle.
    pub dist_sq_avg_x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    #[serde(default)]
    pub diag: DiagnosticFields,
}

/// A completed (or truncated) run: record `k` holds the iterate after `k`
/// steps, starting with the initial point at `k = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// Number of completed steps (records minus the initial point).
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> &TraceRecord {
        self.records
            .last()
            .expect("a trace always has its initial record")
    }
}

/// Observer invoked after each record lands in the trace, including the
/// initial one. Hooks write into `trace.records[..].diag`; earlier records
/// stay mutable so step-difference quantities can land on the record the
/// step started from.
pub trait TraceHook {
    fn on_record(
        &mut self,
        problem: &SaddleProblem,
        schedule: &StepSchedule,
        trace: &mut Trace,
    ) -> Result<()>;
}

/// Reborrows boxed hooks in the shape [`run`] expects.
pub fn hook_refs(hooks: &mut [Box<dyn TraceHook>]) -> Vec<&mut dyn TraceHook> {
    hooks
        .iter_mut()
        .map(|h| h.as_mut() as &mut dyn TraceHook)
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Waives the step-size bound so unstable schedules can be exhibited.
    /// Only Arrow-Hurwicz runs accept this: the point of the flag is to
    /// show what goes wrong without extrapolation.
    pub demonstration: bool,
    /// Stop early once the step displacement in the schedule metric falls
    /// to or below this value.
    pub ne_stop: Option<f64>,
    /// Recorded in [`TraceMeta::seed`] for downstream probe draws.
    pub seed: u64,
}

fn push_record(trace: &mut Trace, state: &SolverState) {
    trace.records.push(TraceRecord {
        k: state.k,
        x: state.x.clone(),
        y: state.y.clone(),
        diag: DiagnosticFields::default(),
    });
}

/// Runs `iterations` steps of `algorithm` from `(x0, y0)`, recording every
/// iterate. Stops early on [`RunOptions::ne_stop`]; reports
/// [`Error::Divergence`] with the last finite record index if the joint norm
/// passes [`DIVERGENCE_GUARD`].
#[allow(clippy::too_many_arguments)]
pub fn run(
    problem: &SaddleProblem,
    algorithm: Algorithm,
    schedule: StepSchedule,
    x0: Vector,
    y0: Vector,
    iterations: usize,
    hooks: &mut [&mut dyn TraceHook],
    options: &RunOptions,
) -> Result<Trace> {
    ensure_len(&x0, problem.primal_dim(), "initial primal point")?;
    ensure_len(&y0, problem.dual_dim(), "initial dual point")?;
    if matches!(algorithm, Algorithm::ArrowHurwicz | Algorithm::Pdhg)
        && matches!(schedule, StepSchedule::Pair { .. })
    {
        return Err(Error::AlgorithmMismatch {
            algorithm: algorithm.tag(),
            reason: "two-parameter schedules require general-pdhg".into(),
        });
    }
    if options.demonstration {
        if algorithm != Algorithm::ArrowHurwicz {
            return Err(Error::AlgorithmMismatch {
                algorithm: algorithm.tag(),
                reason: "demonstration mode (step bound waived) is reserved for arrow-hurwicz"
                    .into(),
            });
        }
        schedule.ensure_positive()?;
    } else {
        validate_schedule(problem, &schedule, false)?;
    }

    let meta = TraceMeta {
        algorithm,
        schedule,
        problem_hash: problem.content_hash(),
        seed: options.seed,
    };
    let mut trace = Trace {
        meta,
        records: Vec::with_capacity(iterations + 1),
    };
    let mut state = SolverState::initial(x0, y0);
    push_record(&mut trace, &state);
    for hook in hooks.iter_mut() {
        hook.on_record(problem, &schedule, &mut trace)?;
    }

    let (tau, sigma) = (schedule.tau(), schedule.sigma());
    let extrapolate = algorithm.uses_extrapolation();
    for _ in 0..iterations {
        let next = momentum_step(problem, &state, tau, sigma, extrapolate)?;
        let magnitude = (next.x.dot(&next.x) + next.y.dot(&next.y)).sqrt();
        if !magnitude.is_finite() || magnitude > DIVERGENCE_GUARD {
            return Err(Error::Divergence {
                last_finite_k: state.k,
            });
        }
        state = next;
        push_record(&mut trace, &state);
        for hook in hooks.iter_mut() {
            hook.on_record(problem, &schedule, &mut trace)?;
        }
        if let Some(tol) = options.ne_stop {
            let n = trace.records.len();
            let prev = &trace.records[n - 2];
            let curr = &trace.records[n - 1];
            let ne = crate::diagnostics::numerical_error(
                problem,
                &schedule,
                (&prev.x, &prev.y),
                (&curr.x, &curr.y),
            )?;
            if ne <= tol {
                break;
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problems::{
        make_counterexample, make_generalized_lasso, saddle_oracle, seeded_lasso,
    };

    fn v(coords: &[f64]) -> Vector {
        Vector::new(coords.to_vec()).unwrap()
    }

    fn no_hooks() -> Vec<&'static mut dyn TraceHook> {
        Vec::new()
    }

    #[test]
    fn arrow_hurwicz_walks_the_six_point_loop() {
        let p = make_counterexample();
        let trace = run(
            &p,
            Algorithm::ArrowHurwicz,
            StepSchedule::Single { s: 1.0 },
            v(&[0.0]),
            v(&[1.0]),
            6,
            &mut no_hooks(),
            &RunOptions::default(),
        )
        .unwrap();
        let expected = [
            (0.0, 1.0),
            (0.0, 2.0),
            (1.0, 2.0),
            (2.0, 1.0),
            (2.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
        ];
        assert_eq!(trace.records.len(), 7);
        for (record, (ex, ey)) in trace.records.iter().zip(expected) {
            assert_eq!(record.x[0], ex, "x at k = {}", record.k);
            assert_eq!(record.y[0], ey, "y at k = {}", record.k);
        }
    }

    #[test]
    fn pdhg_reaches_the_saddle_in_two_steps_and_stays() {
        let p = make_counterexample();
        let trace = run(
            &p,
            Algorithm::Pdhg,
            StepSchedule::Single { s: 1.0 },
            v(&[0.0]),
            v(&[1.0]),
            5,
            &mut no_hooks(),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.records[1].x[0], 0.0);
        assert_eq!(trace.records[1].y[0], 2.0);
        for record in &trace.records[2..] {
            assert_eq!(record.x[0], 1.0, "fixed at k = {}", record.k);
            assert_eq!(record.y[0], 1.0, "fixed at k = {}", record.k);
        }
    }

    #[test]
    fn arrow_hurwicz_conserves_its_quadratic_invariant() {
        let p = make_counterexample();
        let s = 0.5;
        let q = |x: f64, y: f64| {
            let (u, w) = (x - 1.0, y - 1.0);
            u * u + w * w + s * u * w
        };
        let mut state = SolverState::initial(v(&[0.0]), v(&[1.0]));
        let q0 = q(state.x[0], state.y[0]);
        for _ in 0..200 {
            state = arrow_hurwicz_step(&p, &state, s).unwrap();
            assert!((q(state.x[0], state.y[0]) - q0).abs() <= 1e-9);
        }
    }

    #[test]
    fn general_pdhg_with_equal_steps_matches_pdhg_exactly() {
        let p = seeded_lasso(6, 4, 0.3, Matrix::identity(4), 3).unwrap();
        let x0 = v(&[0.4, -0.2, 0.0, 1.0]);
        let y0 = v(&[0.1, 0.1, -0.1, 0.0]);
        let s = 0.35;
        let a = run(
            &p,
            Algorithm::Pdhg,
            StepSchedule::Single { s },
            x0.clone(),
            y0.clone(),
            60,
            &mut no_hooks(),
            &RunOptions::default(),
        )
        .unwrap();
        let b = run(
            &p,
            Algorithm::GeneralPdhg,
            StepSchedule::Pair { tau: s, sigma: s },
            x0,
            y0,
            60,
            &mut no_hooks(),
            &RunOptions::default(),
        )
        .unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.x, rb.x);
            assert_eq!(ra.y, rb.y);
        }
    }

    #[test]
    fn saddle_points_are_fixed_points_of_all_three_steps() {
        let p = make_generalized_lasso(
            Matrix::identity(2),
            v(&[1.0, 1.0]),
            0.5,
            Matrix::identity(2),
        )
        .unwrap();
        let cert = saddle_oracle(&p).unwrap();
        let state = SolverState::initial(cert.x_star.clone(), cert.y_star.clone());
        for next in [
            arrow_hurwicz_step(&p, &state, 0.7).unwrap(),
            pdhg_step(&p, &state, 0.7).unwrap(),
            general_pdhg_step(&p, &state, 0.4, 0.9).unwrap(),
        ] {
            assert!(next.x.sub(&cert.x_star).norm() <= 1e-10);
            assert!(next.y.sub(&cert.y_star).norm() <= 1e-10);
        }
    }

    #[test]
    fn pdhg_converges_on_the_lasso_instance() {
        let p = make_generalized_lasso(
            Matrix::identity(2),
            v(&[1.0, 1.0]),
            0.5,
            Matrix::identity(2),
        )
        .unwrap();
        let cert = saddle_oracle(&p).unwrap();
        let trace = run(
            &p,
            Algorithm::Pdhg,
            StepSchedule::Single { s: 0.9 },
            Vector::zeros(2),
            Vector::zeros(2),
            500,
            &mut no_hooks(),
            &RunOptions::default(),
        )
        .unwrap();
        let last = trace.last();
        assert!(last.x.sub(&cert.x_star).norm() <= 1e-8);
        assert!(last.y.sub(&cert.y_star).norm() <= 1e-8);
    }

    #[test]
    fn unstable_arrow_hurwicz_reports_divergence_with_last_index() {
        let p = make_counterexample();
        let options = RunOptions {
            demonstration: true,
            ..RunOptions::default()
        };
        match run(
            &p,
            Algorithm::ArrowHurwicz,
            StepSchedule::Single { s: 2.05 },
            v(&[0.0]),
            v(&[1.0]),
            10_000,
            &mut no_hooks(),
            &options,
        ) {
            Err(Error::Divergence { last_finite_k }) => {
                assert!(
                    last_finite_k > 0 && last_finite_k < 200,
                    "k = {last_finite_k}"
                );
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn schedule_validation_enforces_the_product_bound() {
        let p = make_counterexample();
        let weak = validate_schedule(&p, &StepSchedule::Single { s: 1.0 }, false).unwrap();
        assert!((weak.product_bound - 1.0).abs() <= 1e-12);
        match validate_schedule(&p, &StepSchedule::Single { s: 1.0 }, true) {
            Err(Error::ScheduleBound {
                step_norm_name,
                relation,
                ..
            }) => {
                assert_eq!(step_norm_name, "s*|F|");
                assert_eq!(relation, "<");
            }
            other => panic!("expected bound violation, got {other:?}"),
        }
        let pair = StepSchedule::Pair {
            tau: 0.5,
            sigma: 2.0,
        };
        assert!(validate_schedule(&p, &pair, false).is_ok());
        match validate_schedule(&p, &pair, true) {
            Err(Error::ScheduleBound { step_norm_name, .. }) => {
                assert_eq!(step_norm_name, "sqrt(tau*sigma)*|F|");
            }
            other => panic!("expected bound violation, got {other:?}"),
        }
        match validate_schedule(&p, &StepSchedule::Single { s: -0.5 }, false) {
            Err(Error::InvalidStep { step }) => assert_eq!(step, -0.5),
            other => panic!("expected invalid step, got {other:?}"),
        }
    }

    #[test]
    fn algorithm_schedule_pairing_is_enforced() {
        let p = make_counterexample();
        let pair = StepSchedule::Pair {
            tau: 0.5,
            sigma: 0.5,
        };
        for algorithm in [Algorithm::ArrowHurwicz, Algorithm::Pdhg] {
            match run(
                &p,
                algorithm,
                pair,
                v(&[0.0]),
                v(&[1.0]),
                1,
                &mut no_hooks(),
                &RunOptions::default(),
            ) {
                Err(Error::AlgorithmMismatch { .. }) => {}
                other => panic!("expected mismatch for {algorithm}, got {other:?}"),
            }
        }
        // The pair schedule is the general solver's own; equal steps work too.
        assert!(run(
            &p,
            Algorithm::GeneralPdhg,
            pair,
            v(&[0.0]),
            v(&[1.0]),
            1,
            &mut no_hooks(),
            &RunOptions::default(),
        )
        .is_ok());
    }

    #[test]
    fn demonstration_mode_is_arrow_hurwicz_only() {
        let p = make_counterexample();
        let options = RunOptions {
            demonstration: true,
            ..RunOptions::default()
        };
        match run(
            &p,
            Algorithm::Pdhg,
            StepSchedule::Single { s: 1.5 },
            v(&[0.0]),
            v(&[1.0]),
            1,
            &mut no_hooks(),
            &options,
        ) {
            Err(Error::AlgorithmMismatch { algorithm, .. }) => assert_eq!(algorithm, "pdhg"),
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn running_sums_track_the_ergodic_average() {
        let p = make_generalized_lasso(
            Matrix::identity(2),
            v(&[1.0, 1.0]),
            0.5,
            Matrix::identity(2),
        )
        .unwrap();
        let mut state = SolverState::initial(Vector::zeros(2), Vector::zeros(2));
        assert!(state.average().is_none());
        let mut manual = Vector::zeros(2);
        for _ in 0..7 {
            state = pdhg_step(&p, &state, 0.8).unwrap();
            manual = manual.add(&state.x);
        }
        assert_eq!(state.k, 7);
        assert_eq!(state.sum_x, manual);
        let (avg_x, _) = state.average().unwrap();
        assert_eq!(avg_x, manual.scaled(1.0 / 7.0));
    }

    #[test]
    fn ne_stop_truncates_the_run() {
        let p = make_generalized_lasso(
            Matrix::identity(2),
            v(&[1.0, 1.0]),
            0.5,
            Matrix::identity(2),
        )
        .unwrap();
        let options = RunOptions {
            ne_stop: Some(1e-14),
            ..RunOptions::default()
        };
        let trace = run(
            &p,
            Algorithm::Pdhg,
            StepSchedule::Single { s: 0.9 },
            Vector::zeros(2),
            Vector::zeros(2),
            5_000,
            &mut no_hooks(),
            &options,
        )
        .unwrap();
        assert!(
            trace.steps() < 5_000,
            "stopped after {} steps",
            trace.steps()
        );
        assert!(trace.steps() > 2);
    }

    #[test]
    fn hooks_see_every_record_including_the_initial_one() {
        struct Counter(usize);
        impl TraceHook for Counter {
            fn on_record(
                &mut self,
                _: &SaddleProblem,
                _: &StepSchedule,
                trace: &mut Trace,
            ) -> Result<()> {
                self.0 += 1;
                assert_eq!(self.0, trace.records.len());
                Ok(())
            }
        }
        let p = make_counterexample();
        let mut counter = Counter(0);
        let mut hooks: Vec<&mut dyn TraceHook> = vec![&mut counter];
        run(
            &p,
            Algorithm::Pdhg,
            StepSchedule::Single { s: 1.0 },
            v(&[0.0]),
            v(&[1.0]),
            4,
            &mut hooks,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(counter.0, 5);
    }

    #[test]
    fn trace_meta_records_the_run_identity() {
        let p = make_counterexample();
        let trace = run(
            &p,
            Algorithm::Pdhg,
            StepSchedule::Single { s: 1.0 },
            v(&[0.0]),
            v(&[1.0]),
            1,
            &mut no_hooks(),
            &RunOptions {
                seed: 42,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert_eq!(trace.meta.algorithm, Algorithm::Pdhg);
        assert_eq!(trace.meta.problem_hash, p.content_hash());
        assert_eq!(trace.meta.seed, 42);
        assert_eq!(trace.steps(), 1);
    }

    #[test]
    fn algorithm_and_schedule_serialize_to_their_wire_names() {
        assert_eq!(
            serde_json::to_string(&Algorithm::ArrowHurwicz).unwrap(),
            "\"arrow-hurwicz\""
        );
        assert_eq!(
            serde_json::to_string(&Algorithm::GeneralPdhg).unwrap(),
            "\"general-pdhg\""
        );
        assert_eq!("pdhg".parse::<Algorithm>().unwrap(), Algorithm::Pdhg);
        assert!("pdhg-extra".parse::<Algorithm>().is_err());
        assert_eq!(Algorithm::ArrowHurwicz.to_string(), "arrow-hurwicz");

        let single: StepSchedule = serde_json::from_str("{\"s\": 0.5}").unwrap();
        assert_eq!(single, StepSchedule::Single { s: 0.5 });
        let pair: StepSchedule = serde_json::from_str("{\"tau\": 0.25, \"sigma\": 2.0}").unwrap();
        assert_eq!(
            pair,
            StepSchedule::Pair {
                tau: 0.25,
                sigma: 2.0
            }
        );
        assert_eq!(pair.geometric_step(), (0.5f64).sqrt());
    }
}
