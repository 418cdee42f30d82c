//! Crate-wide error type. Linear-algebra primitives carry their own
//! [`LinalgError`](crate::linalg::LinalgError) so factorization results can be
//! cached; everything else funnels into [`Error`].

use crate::linalg::LinalgError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid descriptor: {reason}")]
    InvalidDescriptor { reason: String },

    #[error("no closed-form conjugate for `{kind}`; supply the conjugate descriptor directly")]
    UnsupportedConjugate { kind: &'static str },

    #[error("`{kind}` is not differentiable")]
    NondifferentiableDescriptor { kind: &'static str },

    #[error("proximal step size must be positive and finite, got {step}")]
    InvalidStep { step: f64 },

    #[error(
        "step schedule violates the coupling bound: {step_norm_name} = {step_norm} \
         must be {relation} 1"
    )]
    ScheduleBound {
        /// Either `s*|F|` for a single step size or `sqrt(tau*sigma)*|F|` for a pair.
        step_norm_name: &'static str,
        step_norm: f64,
        relation: &'static str,
    },

    #[error("algorithm `{algorithm}` does not accept this schedule or option: {reason}")]
    AlgorithmMismatch {
        algorithm: &'static str,
        reason: String,
    },

    #[error("iterates diverged; last finite record has index {last_finite_k}")]
    Divergence { last_finite_k: usize },

    #[error("constraint system is infeasible: least-squares residual {residual:.3e}")]
    Infeasible { residual: f64 },

    #[error("saddle oracle cannot handle this problem: {reason}")]
    UnsupportedOracle { reason: String },

    #[error("candidate saddle point rejected: worst inequality violation {residual:.3e}")]
    CertificateRejected { residual: f64 },

    #[error("mass matrix is singular: step size times coupling norm must stay below 1")]
    SingularMassMatrix,

    #[error("{context}: needed at least {needed} usable points, found {found}")]
    InsufficientData {
        context: &'static str,
        needed: usize,
        found: usize,
    },
}

/// Shared length guard for vector arguments crossing a module boundary.
pub(crate) fn ensure_len(
    v: &crate::linalg::Vector,
    expected: usize,
    context: &'static str,
) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found: v.len(),
        })
    }
}
