//! Convex function descriptors with closed-form proximal maps.
//!
//! A [`FunctionDescriptor`] is a structural description of one of the convex
//! functions the solvers know how to handle: quadratics (in either curvature
//! or least-squares form), scaled l1 norms, linear functions, box and affine
//! indicators, and the zero function. Descriptors evaluate, differentiate
//! (when smooth), conjugate (within the closed subset of kinds), and above all
//! compute proximal points.

use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Feasibility slack when evaluating indicator functions, so that projections
/// computed in floating point still count as members of their own set.
pub const INDICATOR_SLACK: f64 = 1e-9;

/// Symmetry/PSD tolerance for quadratic curvature matrices.
pub const PSD_TOL: f64 = 1e-10;

/// `sign(v) * max(|v| - t, 0)`, with ties mapped to exactly zero.
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    let m = v.abs() - t;
    if m > 0.0 {
        v.signum() * m
    } else {
        0.0
    }
}

/// Lazily computed derived value attached to an immutable descriptor.
/// Cloning resets it; equality ignores it.
struct Lazy<T>(OnceLock<T>);

impl<T> Lazy<T> {
    fn get_or_init(&self, f: impl FnOnce() -> T) -> &T {
        self.0.get_or_init(f)
    }
}

impl<T> Default for Lazy<T> {
    fn default() -> Self {
        Self(OnceLock::new())
    }
}

impl<T> Clone for Lazy<T> {
    fn clone(&self) -> Self {
        Self::default()
    }
}

impl<T> PartialEq for Lazy<T> {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl<T> fmt::Debug for Lazy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Lazy(..)")
    }
}

/// Cache of assembled proximal system matrices, keyed by the exact bits of the
/// step size. A solver loop reuses the same one or two step sizes throughout,
/// so each cached matrix (and its Cholesky factor) is built once per run.
struct ProxCache(Mutex<Vec<(u64, Arc<Matrix>)>>);

impl ProxCache {
    fn system(&self, step: f64, build: impl FnOnce() -> Matrix) -> Arc<Matrix> {
        let key = step.to_bits();
        let mut slots = self.0.lock().expect("prox cache poisoned");
        if let Some((_, m)) = slots.iter().find(|(k, _)| *k == key) {
            return Arc::clone(m);
        }
        let m = Arc::new(build());
        if slots.len() >= 8 {
            slots.remove(0);
        }
        slots.push((key, Arc::clone(&m)));
        m
    }
}

impl Default for ProxCache {
    fn default() -> Self {
        Self(Mutex::new(Vec::new()))
    }
}

impl Clone for ProxCache {
    fn clone(&self) -> Self {
        Self::default()
    }
}

impl PartialEq for ProxCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Debug for ProxCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ProxCache(..)")
    }
}

/// `(1/2) x'Px + q'x + constant` with symmetric positive semidefinite `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticData {
    pub p: Matrix,
    pub q: Vector,
    #[serde(default)]
    pub constant: f64,
    #[serde(skip)]
    cache: ProxCache,
}

/// `(1/2) |Ax - b|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresData {
    pub a: Matrix,
    pub b: Vector,
    #[serde(skip)]
    gram: Lazy<Matrix>,
    #[serde(skip)]
    cache: ProxCache,
}

impl LeastSquaresData {
    /// `A'A`, built once.
    pub fn gram(&self) -> &Matrix {
        self.gram.get_or_init(|| self.a.gram())
    }
}

/// Indicator of the affine set `{x : Ax = b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSetData {
    pub a: Matrix,
    pub b: Vector,
    #[serde(skip)]
    outer: Lazy<Matrix>,
}

impl AffineSetData {
    fn outer_gram(&self) -> &Matrix {
        self.outer.get_or_init(|| self.a.outer_gram())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionDescriptor {
    Quadratic(QuadraticData),
    LeastSquares(LeastSquaresData),
    ScaledL1 { lambda: f64 },
    Linear { c: Vector },
    IndicatorLinfBall { radius: f64 },
    IndicatorAffine(AffineSetData),
    Zero,
}

use FunctionDescriptor as Fd;

impl FunctionDescriptor {
    pub fn quadratic(p: Matrix, q: Vector, constant: f64) -> Result<Self> {
        let d = Fd::Quadratic(QuadraticData {
            p,
            q,
            constant,
            cache: ProxCache::default(),
        });
        d.validate()?;
        Ok(d)
    }

    pub fn least_squares(a: Matrix, b: Vector) -> Result<Self> {
        let d = Fd::LeastSquares(LeastSquaresData {
            a,
            b,
            gram: Lazy::default(),
            cache: ProxCache::default(),
        });
        d.validate()?;
        Ok(d)
    }

    pub fn scaled_l1(lambda: f64) -> Result<Self> {
        let d = Fd::ScaledL1 { lambda };
        d.validate()?;
        Ok(d)
    }

    pub fn linear(c: Vector) -> Self {
        Fd::Linear { c }
    }

    pub fn indicator_linf_ball(radius: f64) -> Result<Self> {
        let d = Fd::IndicatorLinfBall { radius };
        d.validate()?;
        Ok(d)
    }

    pub fn indicator_affine(a: Matrix, b: Vector) -> Result<Self> {
        let d = Fd::IndicatorAffine(AffineSetData {
            a,
            b,
            outer: Lazy::default(),
        });
        d.validate()?;
        Ok(d)
    }

    pub fn zero() -> Self {
        Fd::Zero
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Fd::Quadratic(_) => "quadratic",
            Fd::LeastSquares(_) => "least-squares",
            Fd::ScaledL1 { .. } => "scaled-l1",
            Fd::Linear { .. } => "linear",
            Fd::IndicatorLinfBall { .. } => "indicator-linf-ball",
            Fd::IndicatorAffine(_) => "indicator-affine",
            Fd::Zero => "zero",
        }
    }

    /// Ambient dimension when the descriptor pins one; `None` for the
    /// dimension-generic kinds.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Fd::Quadratic(d) => Some(d.p.cols()),
            Fd::LeastSquares(d) => Some(d.a.cols()),
            Fd::Linear { c } => Some(c.len()),
            Fd::IndicatorAffine(d) => Some(d.a.cols()),
            Fd::ScaledL1 { .. } | Fd::IndicatorLinfBall { .. } | Fd::Zero => None,
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        match self.dim() {
            Some(expected) if expected != found => Err(Error::DimensionMismatch {
                context: "function descriptor argument",
                expected,
                found,
            }),
            _ => Ok(()),
        }
    }

    /// Structural checks: parameter ranges, shape consistency, and symmetric
    /// positive semidefinite curvature. Called by the constructors; call it
    /// again after deserializing untrusted input.
    pub fn validate(&self) -> Result<()> {
        match self {
            Fd::Quadratic(d) => {
                if d.p.rows() != d.p.cols() {
                    return Err(Error::InvalidDescriptor {
                        reason: format!(
                            "curvature matrix must be square, got {}x{}",
                            d.p.rows(),
                            d.p.cols()
                        ),
                    });
                }
                if d.q.len() != d.p.cols() {
                    return Err(Error::DimensionMismatch {
                        context: "quadratic linear term",
                        expected: d.p.cols(),
                        found: d.q.len(),
                    });
                }
                if !d.constant.is_finite() {
                    return Err(Error::InvalidDescriptor {
                        reason: "quadratic constant must be finite".into(),
                    });
                }
                let mut asym: f64 = 0.0;
                for i in 0..d.p.rows() {
                    for j in 0..i {
                        asym = asym.max((d.p.get(i, j) - d.p.get(j, i)).abs());
                    }
                }
                if asym > PSD_TOL {
                    return Err(Error::InvalidDescriptor {
                        reason: format!(
                            "curvature matrix asymmetry {asym:.3e} exceeds {PSD_TOL:e}"
                        ),
                    });
                }
                // Positive semidefiniteness: P + delta*I must admit a Cholesky
                // factorization. The shift tolerates eigenvalues that are zero
                // up to roundoff while still rejecting genuinely indefinite P.
                let mut max_abs: f64 = 0.0;
                for i in 0..d.p.rows() {
                    for j in 0..d.p.cols() {
                        max_abs = max_abs.max(d.p.get(i, j).abs());
                    }
                }
                let delta = PSD_TOL * max_abs.max(1.0);
                let shifted = Matrix::from_fn(d.p.rows(), d.p.cols(), |i, j| {
                    d.p.get(i, j) + if i == j { delta } else { 0.0 }
                });
                if let Err(err) = shifted.ensure_spd() {
                    return Err(Error::InvalidDescriptor {
                        reason: format!("curvature matrix is not positive semidefinite ({err})"),
                    });
                }
                Ok(())
            }
            Fd::LeastSquares(d) => {
                if d.a.rows() != d.b.len() {
                    return Err(Error::DimensionMismatch {
                        context: "least-squares offset",
                        expected: d.a.rows(),
                        found: d.b.len(),
                    });
                }
                Ok(())
            }
            Fd::ScaledL1 { lambda } => {
                if !lambda.is_finite() || *lambda < 0.0 {
                    return Err(Error::InvalidDescriptor {
                        reason: format!("l1 weight must be nonnegative and finite, got {lambda}"),
                    });
                }
                Ok(())
            }
            Fd::Linear { .. } => Ok(()),
            Fd::IndicatorLinfBall { radius } => {
                if !radius.is_finite() || *radius < 0.0 {
                    return Err(Error::InvalidDescriptor {
                        reason: format!("ball radius must be nonnegative and finite, got {radius}"),
                    });
                }
                Ok(())
            }
            Fd::IndicatorAffine(d) => {
                if d.a.rows() != d.b.len() {
                    return Err(Error::DimensionMismatch {
                        context: "affine set offset",
                        expected: d.a.rows(),
                        found: d.b.len(),
                    });
                }
                Ok(())
            }
            Fd::Zero => Ok(()),
        }
    }

    /// Extended-real evaluation; indicators return `+inf` outside their set
    /// (with [`INDICATOR_SLACK`] of leeway).
    pub fn eval(&self, v: &Vector) -> Result<f64> {
        self.check_dim(v.len())?;
        Ok(match self {
            Fd::Quadratic(d) => {
                let pv = d.p.matvec(v)?;
                0.5 * v.dot(&pv) + d.q.dot(v) + d.constant
            }
            Fd::LeastSquares(d) => {
                let r = d.a.matvec(v)?.sub(&d.b);
                0.5 * r.dot(&r)
            }
            Fd::ScaledL1 { lambda } => lambda * v.iter().map(|x| x.abs()).sum::<f64>(),
            Fd::Linear { c } => c.dot(v),
            Fd::IndicatorLinfBall { radius } => {
                if v.norm_inf() <= radius + INDICATOR_SLACK {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Fd::IndicatorAffine(d) => {
                let r = d.a.matvec(v)?.sub(&d.b);
                if r.norm_inf() <= INDICATOR_SLACK {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Fd::Zero => 0.0,
        })
    }

    pub fn is_differentiable(&self) -> bool {
        matches!(
            self,
            Fd::Quadratic(_) | Fd::LeastSquares(_) | Fd::Linear { .. } | Fd::Zero
        )
    }

    pub fn gradient(&self, v: &Vector) -> Result<Vector> {
        self.check_dim(v.len())?;
        match self {
            Fd::Quadratic(d) => Ok(d.p.matvec(v)?.add(&d.q)),
            Fd::LeastSquares(d) => {
                let r = d.a.matvec(v)?.sub(&d.b);
                Ok(d.a.matvec_t(&r)?)
            }
            Fd::Linear { c } => Ok(c.clone()),
            Fd::Zero => Ok(Vector::zeros(v.len())),
            other => Err(Error::NondifferentiableDescriptor {
                kind: other.kind_name(),
            }),
        }
    }

    /// `(P, q)` such that the descriptor equals `(1/2) u'Pu + q'u + const`.
    /// Only the differentiable kinds have such a form; `dim` settles the
    /// ambient dimension for the dimension-generic ones.
    pub fn quadratic_parts(&self, dim: usize) -> Result<(Matrix, Vector)> {
        self.check_dim(dim)?;
        match self {
            Fd::Quadratic(d) => Ok((d.p.clone(), d.q.clone())),
            Fd::LeastSquares(d) => {
                let q = d.a.matvec_t(&d.b)?.scaled(-1.0);
                Ok((d.gram().clone(), q))
            }
            Fd::Linear { c } => Ok((Matrix::zeros(dim, dim), c.clone())),
            Fd::Zero => Ok((Matrix::zeros(dim, dim), Vector::zeros(dim))),
            other => Err(Error::NondifferentiableDescriptor {
                kind: other.kind_name(),
            }),
        }
    }

    /// Fenchel conjugate, for the kinds whose conjugate stays in the catalog:
    /// scaled l1 and the sup-norm ball, linear functions and point indicators,
    /// and quadratics with invertible curvature.
    pub fn conjugate(&self) -> Result<FunctionDescriptor> {
        match self {
            Fd::ScaledL1 { lambda } => Self::indicator_linf_ball(*lambda),
            Fd::IndicatorLinfBall { radius } => Self::scaled_l1(*radius),
            Fd::Linear { c } => Self::indicator_affine(Matrix::identity(c.len()), c.clone()),
            Fd::IndicatorAffine(d) => {
                if is_identity(&d.a) {
                    Ok(Self::linear(d.b.clone()))
                } else {
                    Err(Error::UnsupportedConjugate {
                        kind: "indicator-affine (non-point set)",
                    })
                }
            }
            Fd::Quadratic(d) => {
                let inv = invert_spd(&d.p).map_err(|_| Error::UnsupportedConjugate {
                    kind: "quadratic (singular curvature)",
                })?;
                let pq = inv.matvec(&d.q)?;
                let constant = 0.5 * d.q.dot(&pq) - d.constant;
                Self::quadratic(inv, pq.scaled(-1.0), constant)
            }
            Fd::LeastSquares(d) => {
                let (p, q) = self.quadratic_parts(d.a.cols())?;
                let constant = 0.5 * d.b.dot(&d.b);
                Self::quadratic(p, q, constant)?.conjugate()
            }
            Fd::Zero => Err(Error::UnsupportedConjugate { kind: "zero" }),
        }
    }

    /// Proximal point: the minimizer of `d(u) + |u - point|^2 / (2 step)`.
    pub fn prox(&self, step: f64, point: &Vector) -> Result<Vector> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidStep { step });
        }
        self.check_dim(point.len())?;
        match self {
            Fd::Quadratic(d) => {
                // (step P + I) u = point - step q
                let sys = d.cache.system(step, || {
                    d.p.scaled_plus_identity(step)
                        .expect("curvature matrix is square")
                });
                let rhs = point.add_scaled(-step, &d.q);
                Ok(sys.solve_spd(&rhs)?)
            }
            Fd::LeastSquares(d) => {
                // (step A'A + I) u = point + step A'b
                let sys = d.cache.system(step, || {
                    d.gram()
                        .scaled_plus_identity(step)
                        .expect("gram matrix is square")
                });
                let rhs = point.add_scaled(step, &d.a.matvec_t(&d.b)?);
                Ok(sys.solve_spd(&rhs)?)
            }
            Fd::ScaledL1 { lambda } => {
                let t = step * lambda;
                Ok(
                    Vector::new(point.iter().map(|v| soft_threshold(*v, t)).collect())
                        .expect("soft threshold preserves finiteness"),
                )
            }
            Fd::Linear { c } => Ok(point.add_scaled(-step, c)),
            Fd::IndicatorLinfBall { radius } => {
                let r = *radius;
                Ok(Vector::new(point.iter().map(|v| v.clamp(-r, r)).collect())
                    .expect("clamp preserves finiteness"))
            }
            Fd::IndicatorAffine(d) => {
                // Euclidean projection: point - A'(AA')^{-1}(A point - b).
                let residual = d.a.matvec(point)?.sub(&d.b);
                let w = d.outer_gram().solve_spd(&residual)?;
                Ok(point.sub(&d.a.matvec_t(&w)?))
            }
            Fd::Zero => Ok(point.clone()),
        }
    }
}

fn is_identity(m: &Matrix) -> bool {
    m.rows() == m.cols()
        && (0..m.rows())
            .all(|i| (0..m.cols()).all(|j| m.get(i, j) == if i == j { 1.0 } else { 0.0 }))
}

/// Dense inverse of a symmetric positive definite matrix, column by column.
fn invert_spd(m: &Matrix) -> Result<Matrix> {
    let n = m.rows();
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(m.solve_spd(&Vector::new(e).expect("basis vector"))?);
    }
    // Symmetrize to wash out the roundoff asymmetry between columns.
    Ok(Matrix::from_fn(n, n, |i, j| {
        0.5 * (cols[j][i] + cols[i][j])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(entries: &[f64]) -> Vector {
        Vector::new(entries.to_vec()).unwrap()
    }

    fn m(rows: Vec<Vec<f64>>) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn half_norm_sq(dim: usize) -> FunctionDescriptor {
        FunctionDescriptor::quadratic(Matrix::identity(dim), Vector::zeros(dim), 0.0).unwrap()
    }

    #[test]
    fn eval_catalog() {
        let ls = FunctionDescriptor::least_squares(Matrix::identity(2), v(&[1.0, 1.0])).unwrap();
        assert_eq!(ls.eval(&v(&[0.0, 0.0])).unwrap(), 1.0);

        let l1 = FunctionDescriptor::scaled_l1(0.5).unwrap();
        assert_eq!(l1.eval(&v(&[2.0, -3.0])).unwrap(), 2.5);

        let lin = FunctionDescriptor::linear(v(&[1.0, -1.0]));
        assert_eq!(lin.eval(&v(&[3.0, 1.0])).unwrap(), 2.0);

        let ball = FunctionDescriptor::indicator_linf_ball(1.0).unwrap();
        assert_eq!(ball.eval(&v(&[1.0, -1.0])).unwrap(), 0.0);
        assert_eq!(ball.eval(&v(&[1.0 + 5e-10])).unwrap(), 0.0);
        assert_eq!(ball.eval(&v(&[1.1])).unwrap(), f64::INFINITY);

        let affine =
            FunctionDescriptor::indicator_affine(m(vec![vec![1.0, 1.0]]), v(&[1.0])).unwrap();
        assert_eq!(affine.eval(&v(&[0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(affine.eval(&v(&[1.0, 1.0])).unwrap(), f64::INFINITY);

        assert_eq!(FunctionDescriptor::zero().eval(&v(&[7.0])).unwrap(), 0.0);
    }

    #[test]
    fn eval_checks_dimensions() {
        let lin = FunctionDescriptor::linear(v(&[1.0, 2.0]));
        assert!(matches!(
            lin.eval(&v(&[1.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1,
                ..
            })
        ));
    }

    #[test]
    fn prox_catalog_hand_values() {
        // (step A'A + I) u = v + step A'b with A = I, b = 0: u = v / 2.
        let ls = FunctionDescriptor::least_squares(Matrix::identity(2), Vector::zeros(2)).unwrap();
        assert_eq!(ls.prox(1.0, &v(&[2.0, 4.0])).unwrap(), v(&[1.0, 2.0]));

        let l1 = FunctionDescriptor::scaled_l1(1.0).unwrap();
        assert_eq!(
            l1.prox(1.0, &v(&[2.0, -0.5, 0.0])).unwrap(),
            v(&[1.0, 0.0, 0.0])
        );
        // Exact tie lands exactly on zero.
        assert_eq!(l1.prox(1.0, &v(&[1.0, -1.0])).unwrap(), v(&[0.0, 0.0]));

        let ball = FunctionDescriptor::indicator_linf_ball(1.0).unwrap();
        assert_eq!(ball.prox(3.0, &v(&[2.0, -0.5])).unwrap(), v(&[1.0, -0.5]));

        let lin = FunctionDescriptor::linear(v(&[1.0]));
        assert_eq!(lin.prox(2.0, &v(&[0.0])).unwrap(), v(&[-2.0]));

        let affine =
            FunctionDescriptor::indicator_affine(m(vec![vec![1.0, 1.0]]), v(&[1.0])).unwrap();
        assert_eq!(affine.prox(1.0, &v(&[0.0, 0.0])).unwrap(), v(&[0.5, 0.5]));

        let zero = FunctionDescriptor::zero();
        assert_eq!(zero.prox(0.5, &v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));
    }

    #[test]
    fn prox_rejects_bad_steps() {
        let l1 = FunctionDescriptor::scaledl1_for_tests();
        for step in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                l1.prox(step, &v(&[1.0])),
                Err(Error::InvalidStep { .. })
            ));
        }
    }

    impl FunctionDescriptor {
        fn scaledl1_for_tests() -> Self {
            FunctionDescriptor::scaled_l1(1.0).unwrap()
        }
    }

    #[test]
    fn prox_tiny_step_is_near_identity() {
        let l1 = FunctionDescriptor::scaled_l1(1.0).unwrap();
        let p = l1.prox(1e-12, &v(&[2.0, -2.0])).unwrap();
        assert!(p.sub(&v(&[2.0, -2.0])).norm_inf() < 1e-6);
    }

    #[test]
    fn quadratic_constructor_rejects_bad_curvature() {
        let asym = m(vec![vec![1.0, 0.5], vec![0.0, 1.0]]);
        assert!(FunctionDescriptor::quadratic(asym, Vector::zeros(2), 0.0).is_err());

        let indefinite = m(vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert!(FunctionDescriptor::quadratic(indefinite, Vector::zeros(2), 0.0).is_err());

        // Positive semidefinite (singular) curvature is allowed.
        let psd = m(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(FunctionDescriptor::quadratic(psd, Vector::zeros(2), 0.0).is_ok());
    }

    #[test]
    fn conjugate_pairs() {
        let l1 = FunctionDescriptor::scaled_l1(0.7).unwrap();
        assert_eq!(
            l1.conjugate().unwrap(),
            FunctionDescriptor::indicator_linf_ball(0.7).unwrap()
        );
        assert_eq!(l1.conjugate().unwrap().conjugate().unwrap(), l1);

        let lin = FunctionDescriptor::linear(v(&[2.0, -1.0]));
        let point = lin.conjugate().unwrap();
        match &point {
            FunctionDescriptor::IndicatorAffine(d) => {
                assert!(is_identity(&d.a));
                assert_eq!(d.b, v(&[2.0, -1.0]));
            }
            other => panic!("expected point indicator, got {other:?}"),
        }
        assert_eq!(point.conjugate().unwrap(), lin);

        // (1/2)|y|^2 is self-conjugate.
        let q = half_norm_sq(2);
        assert_eq!(q.conjugate().unwrap(), q);

        assert!(FunctionDescriptor::zero().conjugate().is_err());
        let wide =
            FunctionDescriptor::indicator_affine(m(vec![vec![1.0, 1.0]]), v(&[1.0])).unwrap();
        assert!(wide.conjugate().is_err());
    }

    #[test]
    fn quadratic_biconjugate_round_trips() {
        let p = m(vec![vec![2.0, 0.5], vec![0.5, 1.0]]);
        let d = FunctionDescriptor::quadratic(p.clone(), v(&[1.0, -2.0]), 0.3).unwrap();
        let dd = d.conjugate().unwrap().conjugate().unwrap();
        match (&d, &dd) {
            (FunctionDescriptor::Quadratic(a), FunctionDescriptor::Quadratic(b)) => {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((a.p.get(i, j) - b.p.get(i, j)).abs() < 1e-9);
                    }
                    assert!((a.q[i] - b.q[i]).abs() < 1e-9);
                }
                assert!((a.constant - b.constant).abs() < 1e-9);
            }
            _ => panic!("biconjugate changed kind"),
        }
    }

    #[test]
    fn conjugate_of_scaled_l1_matches_grid_supremum() {
        // f*(y) = sup_x <y,x> - lambda |x|_1 over a box: zero inside the ball,
        // growing with the box size outside.
        let lambda = 0.8;
        let l1 = FunctionDescriptor::scaled_l1(lambda).unwrap();
        let conj = l1.conjugate().unwrap();
        let box_edge = 5.0;
        for y in [
            v(&[0.3, -0.7]),
            v(&[0.8, 0.0]),
            v(&[1.2, 0.4]),
            v(&[-2.0, 2.0]),
        ] {
            let mut sup = f64::NEG_INFINITY;
            let steps = 400;
            for i in 0..=steps {
                for j in 0..=steps {
                    let x = v(&[
                        -box_edge + 2.0 * box_edge * i as f64 / steps as f64,
                        -box_edge + 2.0 * box_edge * j as f64 / steps as f64,
                    ]);
                    sup = sup.max(y.dot(&x) - l1.eval(&x).unwrap());
                }
            }
            let conj_val = conj.eval(&y).unwrap();
            if conj_val.is_finite() {
                assert!(
                    sup.abs() < 1e-6,
                    "inside ball the sup should vanish, got {sup}"
                );
            } else {
                assert!(
                    sup > 0.5,
                    "outside ball the boxed sup should be positive, got {sup}"
                );
            }
        }
    }

    #[test]
    fn prox_matches_dense_grid_in_one_dimension() {
        let cases: Vec<(FunctionDescriptor, f64, f64)> = vec![
            (FunctionDescriptor::scaled_l1(0.6).unwrap(), 1.3, 1.7),
            (
                FunctionDescriptor::indicator_linf_ball(2.0).unwrap(),
                0.7,
                3.4,
            ),
            (FunctionDescriptor::linear(v(&[0.9])), 2.0, -1.2),
            (half_norm_sq(1), 2.0, 3.0),
            (FunctionDescriptor::zero(), 1.0, 0.25),
        ];
        for (d, step, point) in cases {
            let p = d.prox(step, &v(&[point])).unwrap();
            let mut best = f64::INFINITY;
            let mut best_u = 0.0;
            let res = 1e-3;
            let n = (10.0 / res) as usize;
            for i in 0..=n {
                let u = -5.0 + i as f64 * res;
                let val = d.eval(&v(&[u])).unwrap() + (u - point).powi(2) / (2.0 * step);
                if val < best {
                    best = val;
                    best_u = u;
                }
            }
            assert!(
                (p[0] - best_u).abs() <= 2e-3,
                "{}: prox {} vs grid {}",
                d.kind_name(),
                p[0],
                best_u
            );
        }
    }

    #[test]
    fn prox_optimality_by_finite_differences() {
        let descriptors = vec![
            half_norm_sq(2),
            FunctionDescriptor::least_squares(
                m(vec![vec![1.0, 2.0], vec![0.0, 1.0]]),
                v(&[1.0, -1.0]),
            )
            .unwrap(),
            FunctionDescriptor::linear(v(&[0.5, -0.25])),
            FunctionDescriptor::zero(),
        ];
        let point = v(&[0.7, -1.3]);
        for d in descriptors {
            let step = 0.8;
            let u = d.prox(step, &point).unwrap();
            let h = 1e-6;
            let mut grad_norm_sq = 0.0;
            for i in 0..u.len() {
                let mut up = Vec::from(u.clone());
                let mut dn = Vec::from(u.clone());
                up[i] += h;
                dn[i] -= h;
                let up = Vector::new(up).unwrap();
                let dn = Vector::new(dn).unwrap();
                let phi = |w: &Vector| {
                    d.eval(w).unwrap() + w.sub(&point).dot(&w.sub(&point)) / (2.0 * step)
                };
                let g = (phi(&up) - phi(&dn)) / (2.0 * h);
                grad_norm_sq += g * g;
            }
            assert!(
                grad_norm_sq.sqrt() <= 1e-8,
                "{}: prox objective gradient norm {:.3e}",
                d.kind_name(),
                grad_norm_sq.sqrt()
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = FunctionDescriptor::least_squares(
            m(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![0.5, -1.0]]),
            v(&[1.0, 0.0, 2.0]),
        )
        .unwrap();
        let x = v(&[0.3, -0.6]);
        let g = d.gradient(&x).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut up = Vec::from(x.clone());
            let mut dn = Vec::from(x.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (d.eval(&Vector::new(up).unwrap()).unwrap()
                - d.eval(&Vector::new(dn).unwrap()).unwrap())
                / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-6);
        }
        assert!(FunctionDescriptor::scaled_l1(1.0)
            .unwrap()
            .gradient(&x)
            .is_err());
    }

    #[test]
    fn serde_shape_and_round_trip() {
        let l1 = FunctionDescriptor::scaled_l1(0.5).unwrap();
        let json = serde_json::to_string(&l1).unwrap();
        assert_eq!(json, r#"{"kind":"scaled-l1","lambda":0.5}"#);

        let ls = FunctionDescriptor::least_squares(Matrix::identity(2), v(&[1.0, 1.0])).unwrap();
        let json = serde_json::to_value(&ls).unwrap();
        assert_eq!(json["kind"], "least-squares");
        assert_eq!(json["a"][0][0], 1.0);
        let back: FunctionDescriptor = serde_json::from_value(json).unwrap();
        assert_eq!(back, ls);
        back.validate().unwrap();

        let zero: FunctionDescriptor = serde_json::from_str(r#"{"kind":"zero"}"#).unwrap();
        assert_eq!(zero, FunctionDescriptor::zero());
    }

    /// Moreau identity: prox(d, s, v) + s * prox(d*, 1/s, v/s) = v.
    fn check_moreau(d: &FunctionDescriptor, step: f64, point: &Vector) {
        let conj = d.conjugate().unwrap();
        let a = d.prox(step, point).unwrap();
        let b = conj.prox(1.0 / step, &point.scaled(1.0 / step)).unwrap();
        let recomposed = a.add_scaled(step, &b);
        assert!(
            recomposed.sub(point).norm_inf() <= 1e-9,
            "{}: Moreau residual {:.3e}",
            d.kind_name(),
            recomposed.sub(point).norm_inf()
        );
    }

    #[test]
    fn moreau_identity_hand_cases() {
        check_moreau(
            &FunctionDescriptor::scaled_l1(0.8).unwrap(),
            1.7,
            &v(&[2.0, -0.3, 0.9]),
        );
        check_moreau(
            &FunctionDescriptor::indicator_linf_ball(1.2).unwrap(),
            0.4,
            &v(&[-3.0, 0.1]),
        );
        check_moreau(
            &FunctionDescriptor::linear(v(&[1.0, -2.0])),
            2.5,
            &v(&[0.4, 0.4]),
        );
        let p = m(vec![vec![2.0, 0.3], vec![0.3, 1.0]]);
        check_moreau(
            &FunctionDescriptor::quadratic(p, v(&[0.5, -0.5]), 0.0).unwrap(),
            0.9,
            &v(&[1.0, 2.0]),
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn firm_nonexpansiveness(
            kind in 0usize..5,
            param in 0.05f64..4.0,
            step in 0.05f64..4.0,
            u0 in -10.0f64..10.0, u1 in -10.0f64..10.0,
            w0 in -10.0f64..10.0, w1 in -10.0f64..10.0,
        ) {
            let d = match kind {
                0 => FunctionDescriptor::scaled_l1(param).unwrap(),
                1 => FunctionDescriptor::indicator_linf_ball(param).unwrap(),
                2 => FunctionDescriptor::linear(v(&[param, -param])),
                3 => half_norm_sq(2),
                _ => FunctionDescriptor::zero(),
            };
            let a = v(&[u0, u1]);
            let b = v(&[w0, w1]);
            let pa = d.prox(step, &a).unwrap();
            let pb = d.prox(step, &b).unwrap();
            let dp = pa.sub(&pb);
            let dv = a.sub(&b);
            prop_assert!(dp.dot(&dv) >= dp.dot(&dp) - 1e-9);
        }

        #[test]
        fn moreau_identity_fuzz(
            lambda in 0.05f64..3.0,
            step in 0.05f64..4.0,
            p0 in -8.0f64..8.0, p1 in -8.0f64..8.0,
        ) {
            let point = v(&[p0, p1]);
            check_moreau(&FunctionDescriptor::scaled_l1(lambda).unwrap(), step, &point);
            check_moreau(&FunctionDescriptor::indicator_linf_ball(lambda).unwrap(), step, &point);
        }
    }
}
