//! Saddle-point toolkit: first-order primal-dual algorithms, the ordinary
//! differential equations they discretize, and the diagnostics that certify
//! their convergence behavior.
//!
//! The crate is organized around a bilinearly coupled saddle problem
//!
//! ```text
//! min_x max_y  f(x) + <Fx, y> - g*(y)
//! ```
//!
//! with convex `f` and `g*` given as proximable descriptors and a dense
//! coupling matrix `F`. On top of that sit:
//!
//! * [`solvers`]: Arrow-Hurwicz, PDHG, and the two-step-size PDHG variant,
//!   all driven through a common [`solvers::run`] loop that records a
//!   [`solvers::Trace`].
//! * [`ode`]: the continuous-time systems the solvers discretize, a
//!   symplectic integrator for the scalar counterexample family, an implicit
//!   Euler step that reproduces PDHG exactly, and a Runge-Kutta integrator.
//! * [`diagnostics`]: Lyapunov energies, per-step numerical error, variational
//!   inequality gaps, convergence-rate fits, and bound checks for the known
//!   worst-case estimates.
//!
//! Everything is deterministic: random probes and seeded instances go through
//! an explicitly seeded ChaCha generator.

pub mod diagnostics;
pub mod error;
pub mod functions;
pub mod linalg;
pub mod ode;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
pub use functions::FunctionDescriptor;
pub use linalg::{Matrix, Vector};
pub use problems::{SaddleCertificate, SaddleProblem};
pub use solvers::{Algorithm, RunOptions, SolverState, StepSchedule, Trace, TraceRecord};
