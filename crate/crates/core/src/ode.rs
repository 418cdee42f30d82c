//! Continuous-time limits of the discrete solvers.
//!
//! The low-resolution system is the plain saddle flow
//! `dX = -F'Y - grad f(X)`, `dY = FX - grad g*(Y)`. The high-resolution
//! systems keep the step size as a model parameter through a mass matrix on
//! the left-hand side:
//!
//! ```text
//! [ alpha*I  -s F' ] [dX]   [ -F'Y - grad f(X) ]
//! [ -s F   beta*I  ] [dY] = [  FX - grad g*(Y) ]
//! ```
//!
//! with `alpha = sqrt(sigma/tau)`, `beta = sqrt(tau/sigma)`,
//! `s = sqrt(tau*sigma)` (all 1, 1, s for the single-step system). The mass
//! matrix is symmetric positive definite exactly when
//! `sqrt(tau*sigma)*|F| < 1` — the same product the discrete step-size rule
//! bounds. Implicit Euler on the high-resolution system with time step `s`
//! reproduces the extrapolated discrete solvers term by term, which is the
//! bridge this module exists to exercise.

use std::sync::OnceLock;

use crate::error::{ensure_len, Error, Result};
use crate::linalg::{LinalgError, Matrix, Vector};
use crate::problems::SaddleProblem;

/// Which continuous-time model a system integrates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeKind {
    /// The step-free saddle flow.
    LowRes,
    /// High-resolution model with one shared step parameter.
    HighRes { s: f64 },
    /// High-resolution model with separate primal/dual step parameters.
    GeneralHighRes { tau: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousState {
    pub t: f64,
    pub x: Vector,
    pub y: Vector,
}

/// A saddle problem with differentiable sides, packaged with one of the
/// continuous-time models. Gradients are precomputed into curvature/offset
/// form, and the mass matrix and implicit-step systems are factored once.
#[derive(Debug, Clone)]
pub struct OdeSystem {
    problem: SaddleProblem,
    kind: OdeKind,
    p_f: Matrix,
    q_f: Vector,
    p_g: Matrix,
    q_g: Vector,
    mass: OnceLock<Matrix>,
    implicit_x: OnceLock<Matrix>,
    implicit_y: OnceLock<Matrix>,
}

impl OdeSystem {
    /// Requires differentiable `f` and `g*` (the flows are gradient flows)
    /// and positive finite step parameters.
    pub fn new(problem: &SaddleProblem, kind: OdeKind) -> Result<Self> {
        for descriptor in [problem.f(), problem.g_star()] {
            if !descriptor.is_differentiable() {
                return Err(Error::NondifferentiableDescriptor {
                    kind: descriptor.kind_name(),
                });
            }
        }
        match kind {
            OdeKind::LowRes => {}
            OdeKind::HighRes { s } => {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::InvalidStep { step: s });
                }
            }
            OdeKind::GeneralHighRes { tau, sigma } => {
                for step in [tau, sigma] {
                    if !(step.is_finite() && step > 0.0) {
                        return Err(Error::InvalidStep { step });
                    }
                }
            }
        }
        let (p_f, q_f) = problem.f().quadratic_parts(problem.primal_dim())?;
        let (p_g, q_g) = problem.g_star().quadratic_parts(problem.dual_dim())?;
        Ok(OdeSystem {
            problem: problem.clone(),
            kind,
            p_f,
            q_f,
            p_g,
            q_g,
            mass: OnceLock::new(),
            implicit_x: OnceLock::new(),
            implicit_y: OnceLock::new(),
        })
    }

    pub fn problem(&self) -> &SaddleProblem {
        &self.problem
    }

    pub fn kind(&self) -> OdeKind {
        self.kind
    }

    /// `(tau, sigma)` for the high-resolution models, `None` for the
    /// step-free flow.
    pub fn steps(&self) -> Option<(f64, f64)> {
        match self.kind {
            OdeKind::LowRes => None,
            OdeKind::HighRes { s } => Some((s, s)),
            OdeKind::GeneralHighRes { tau, sigma } => Some((tau, sigma)),
        }
    }

    fn mass_matrix(&self) -> &Matrix {
        self.mass.get_or_init(|| {
            let (tau, sigma) = self
                .steps()
                .expect("mass matrix exists for high-res kinds only");
            let alpha = (sigma / tau).sqrt();
            let beta = (tau / sigma).sqrt();
            let s = (tau * sigma).sqrt();
            let d1 = self.problem.primal_dim();
            let d2 = self.problem.dual_dim();
            let coupling = self.problem.coupling();
            Matrix::from_fn(d1 + d2, d1 + d2, |i, j| match (i < d1, j < d1) {
                (true, true) => {
                    if i == j {
                        alpha
                    } else {
                        0.0
                    }
                }
                (true, false) => -s * coupling.get(j - d1, i),
                (false, true) => -s * coupling.get(i - d1, j),
                (false, false) => {
                    if i == j {
                        beta
                    } else {
                        0.0
                    }
                }
            })
        })
    }

    fn raw_rhs(&self, state: &ContinuousState) -> Result<(Vector, Vector)> {
        ensure_len(
            &state.x,
            self.problem.primal_dim(),
            "ode state primal block",
        )?;
        ensure_len(&state.y, self.problem.dual_dim(), "ode state dual block")?;
        let grad_f = self.p_f.matvec(&state.x)?.add(&self.q_f);
        let grad_g = self.p_g.matvec(&state.y)?.add(&self.q_g);
        let rhs_x = self
            .problem
            .coupling()
            .matvec_t(&state.y)?
            .add(&grad_f)
            .scaled(-1.0);
        let rhs_y = self.problem.coupling().matvec(&state.x)?.sub(&grad_g);
        Ok((rhs_x, rhs_y))
    }

    /// Velocity `(dX, dY)` at a state. High-resolution kinds solve against
    /// the mass matrix; a step product `sqrt(tau*sigma)*|F| >= 1` makes that
    /// matrix lose positive definiteness and is reported as
    /// [`Error::SingularMassMatrix`].
    pub fn field(&self, state: &ContinuousState) -> Result<(Vector, Vector)> {
        let (rhs_x, rhs_y) = self.raw_rhs(state)?;
        if self.kind == OdeKind::LowRes {
            return Ok((rhs_x, rhs_y));
        }
        let stacked = rhs_x.concat(&rhs_y);
        let solved = self
            .mass_matrix()
            .solve_spd(&stacked)
            .map_err(|e| match e {
                LinalgError::NonPositivePivot { .. } => Error::SingularMassMatrix,
                other => Error::from(other),
            })?;
        Ok(solved.split_at(self.problem.primal_dim()))
    }

    /// Forward step in `x`, then in `y` against the fresh `x`. Closed form
    /// only for linear `f` and `g*` (that restriction is what makes the
    /// update exactly area-preserving on the bilinear core).
    pub fn symplectic_euler_step(
        &self,
        state: &ContinuousState,
        dt: f64,
    ) -> Result<ContinuousState> {
        if self.kind != OdeKind::LowRes {
            return Err(Error::AlgorithmMismatch {
                algorithm: "symplectic-euler",
                reason: "discretizes the low-resolution flow; build the system as LowRes".into(),
            });
        }
        if !(self.p_f.is_zero() && self.p_g.is_zero()) {
            return Err(Error::AlgorithmMismatch {
                algorithm: "symplectic-euler",
                reason: "closed-form update needs linear f and g*".into(),
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidStep { step: dt });
        }
        ensure_len(
            &state.x,
            self.problem.primal_dim(),
            "ode state primal block",
        )?;
        ensure_len(&state.y, self.problem.dual_dim(), "ode state dual block")?;
        let coupling = self.problem.coupling();
        let x_next = state
            .x
            .add_scaled(-dt, &coupling.matvec_t(&state.y)?.add(&self.q_f));
        let y_next = state
            .y
            .add_scaled(dt, &coupling.matvec(&x_next)?.sub(&self.q_g));
        Ok(ContinuousState {
            t: state.t + dt,
            x: x_next,
            y: y_next,
        })
    }

    /// Implicit Euler on a high-resolution system, taken with time step equal
    /// to the system's own geometric step `sqrt(tau*sigma)`. At that step the
    /// implicit relations decouple into one primal and one dual linear solve
    /// and reproduce the extrapolated discrete update exactly.
    pub fn implicit_euler_step(&self, state: &ContinuousState, dt: f64) -> Result<ContinuousState> {
        let (tau, sigma) = self.steps().ok_or_else(|| Error::AlgorithmMismatch {
            algorithm: "implicit-euler",
            reason: "needs a high-resolution system carrying step parameters".into(),
        })?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidStep { step: dt });
        }
        let s = (tau * sigma).sqrt();
        if (dt - s).abs() > 1e-12 * s.max(1.0) {
            return Err(Error::AlgorithmMismatch {
                algorithm: "implicit-euler",
                reason: format!(
                    "time step {dt} must equal the system's geometric step {s}; \
                     other steps do not decouple"
                ),
            });
        }
        ensure_len(
            &state.x,
            self.problem.primal_dim(),
            "ode state primal block",
        )?;
        ensure_len(&state.y, self.problem.dual_dim(), "ode state dual block")?;
        let system_x = self.implicit_x.get_or_init(|| {
            Matrix::from_fn(self.p_f.rows(), self.p_f.cols(), |i, j| {
                self.p_f.get(i, j) + if i == j { 1.0 / tau } else { 0.0 }
            })
        });
        let system_y = self.implicit_y.get_or_init(|| {
            Matrix::from_fn(self.p_g.rows(), self.p_g.cols(), |i, j| {
                self.p_g.get(i, j) + if i == j { 1.0 / sigma } else { 0.0 }
            })
        });
        let coupling = self.problem.coupling();
        let rhs_x = state
            .x
            .scaled(1.0 / tau)
            .sub(&coupling.matvec_t(&state.y)?)
            .sub(&self.q_f);
        let x_next = system_x.solve_spd(&rhs_x)?;
        let x_bar = x_next.scaled(2.0).sub(&state.x);
        let rhs_y = state
            .y
            .scaled(1.0 / sigma)
            .add(&coupling.matvec(&x_bar)?)
            .sub(&self.q_g);
        let y_next = system_y.solve_spd(&rhs_y)?;
        Ok(ContinuousState {
            t: state.t + dt,
            x: x_next,
            y: y_next,
        })
    }

    /// Classical fourth-order Runge-Kutta trajectory: `steps + 1` states with
    /// `t_k = t_0 + k*dt` (times accumulated multiplicatively, not by
    /// repeated addition, so long trajectories do not drift).
    pub fn rk4_trajectory(
        &self,
        initial: &ContinuousState,
        dt: f64,
        steps: usize,
    ) -> Result<Vec<ContinuousState>> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidStep { step: dt });
        }
        let mut states = Vec::with_capacity(steps + 1);
        states.push(initial.clone());
        let mut current = initial.clone();
        for k in 1..=steps {
            let offset = |c: f64, vx: &Vector, vy: &Vector| ContinuousState {
                t: current.t,
                x: current.x.add_scaled(c, vx),
                y: current.y.add_scaled(c, vy),
            };
            let (k1x, k1y) = self.field(&current)?;
            let (k2x, k2y) = self.field(&offset(dt / 2.0, &k1x, &k1y))?;
            let (k3x, k3y) = self.field(&offset(dt / 2.0, &k2x, &k2y))?;
            let (k4x, k4y) = self.field(&offset(dt, &k3x, &k3y))?;
            let sixth = dt / 6.0;
            let x = current
                .x
                .add_scaled(sixth, &k1x)
                .add_scaled(2.0 * sixth, &k2x)
                .add_scaled(2.0 * sixth, &k3x)
                .add_scaled(sixth, &k4x);
            let y = current
                .y
                .add_scaled(sixth, &k1y)
                .add_scaled(2.0 * sixth, &k2y)
                .add_scaled(2.0 * sixth, &k3y)
                .add_scaled(sixth, &k4y);
            current = ContinuousState {
                t: initial.t + k as f64 * dt,
                x,
                y,
            };
            states.push(current.clone());
        }
        Ok(states)
    }

    /// Conserved energy of the scalar bilinear low-resolution flow:
    /// `-F00 (x^2 + y^2)/2 + q_g0 x - q_f0 y`. Defined for one-dimensional
    /// problems with linear `f` and `g*`.
    pub fn hamiltonian(&self, state: &ContinuousState) -> Result<f64> {
        if self.problem.primal_dim() != 1 || self.problem.dual_dim() != 1 {
            return Err(Error::DimensionMismatch {
                context: "closed-form energy is defined for scalar problems",
                expected: 1,
                found: self.problem.primal_dim().max(self.problem.dual_dim()),
            });
        }
        if !(self.p_f.is_zero() && self.p_g.is_zero()) {
            return Err(Error::AlgorithmMismatch {
                algorithm: "hamiltonian",
                reason: "closed-form energy needs linear f and g*".into(),
            });
        }
        let (x, y) = (state.x[0], state.y[0]);
        let fc = self.problem.coupling().get(0, 0);
        Ok(-fc * (x * x + y * y) / 2.0 + self.q_g[0] * x - self.q_f[0] * y)
    }
}

/// Trapezoidal time average of a trajectory's `x` and `y` components over
/// its full time span.
pub fn time_average(trajectory: &[ContinuousState]) -> Result<(Vector, Vector)> {
    if trajectory.len() < 2 {
        return Err(Error::InsufficientData {
            context: "trapezoidal time average",
            needed: 2,
            found: trajectory.len(),
        });
    }
    let span = trajectory.last().unwrap().t - trajectory[0].t;
    if !(span.is_finite() && span > 0.0) {
        return Err(Error::InsufficientData {
            context: "trapezoidal time average needs strictly increasing times",
            needed: 2,
            found: trajectory.len(),
        });
    }
    let mut acc_x = Vector::zeros(trajectory[0].x.len());
    let mut acc_y = Vector::zeros(trajectory[0].y.len());
    for pair in trajectory.windows(2) {
        let half_dt = (pair[1].t - pair[0].t) / 2.0;
        acc_x = acc_x
            .add_scaled(half_dt, &pair[0].x)
            .add_scaled(half_dt, &pair[1].x);
        acc_y = acc_y
            .add_scaled(half_dt, &pair[0].y)
            .add_scaled(half_dt, &pair[1].y);
    }
    Ok((acc_x.scaled(1.0 / span), acc_y.scaled(1.0 / span)))
}
