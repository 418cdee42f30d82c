//! Saddle-point problem containers, named instances, and exact-solution
//! oracles.
//!
//! A problem is `min_x max_y f(x) + <Fx, y> - g*(y)` with convex `f`, `g*`
//! and a dense coupling matrix `F`. The container precomputes `|F|` (spectral
//! norm) and the strong-convexity modulus of `f`, since every step-size rule
//! and convergence bound is phrased in terms of those two numbers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::FunctionDescriptor;
use crate::linalg::{Matrix, Vector};

/// Largest certificate violation accepted over all probe points.
pub const CERTIFICATE_TOL: f64 = 1e-7;

/// Number of random probe draws used when validating a certificate.
const PROBE_COUNT: usize = 100;

/// Probes are drawn from balls of this radius around the candidate saddle.
const PROBE_RADIUS: f64 = 5.0;

/// Active-set enumeration is exponential in the dual dimension; cap it.
const MAX_ENUM_DIM: usize = 12;

/// `min_x max_y f(x) + <Fx, y> - g*(y)` with everything the solvers and
/// diagnostics need precomputed once.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleProblem {
    f: FunctionDescriptor,
    g_star: FunctionDescriptor,
    coupling: Matrix,
    coupling_norm: f64,
    mu: f64,
}

impl SaddleProblem {
    /// Validates both descriptors against the coupling shape and precomputes
    /// the spectral norm and the strong-convexity modulus of `f`.
    pub fn new(
        f: FunctionDescriptor,
        g_star: FunctionDescriptor,
        coupling: Matrix,
    ) -> Result<Self> {
        f.validate()?;
        g_star.validate()?;
        if let Some(d) = f.dim() {
            if d != coupling.cols() {
                return Err(Error::DimensionMismatch {
                    context: "primal function vs coupling columns",
                    expected: coupling.cols(),
                    found: d,
                });
            }
        }
        if let Some(d) = g_star.dim() {
            if d != coupling.rows() {
                return Err(Error::DimensionMismatch {
                    context: "dual function vs coupling rows",
                    expected: coupling.rows(),
                    found: d,
                });
            }
        }
        let coupling_norm = coupling.spectral_norm()?;
        let mu = match &f {
            FunctionDescriptor::Quadratic(d) => {
                crate::linalg::lambda_min_sym_psd(&d.p, 1e-12)?.max(0.0)
            }
            FunctionDescriptor::LeastSquares(d) => {
                crate::linalg::lambda_min_sym_psd(d.gram(), 1e-12)?.max(0.0)
            }
            _ => 0.0,
        };
        Ok(Self {
            f,
            g_star,
            coupling,
            coupling_norm,
            mu,
        })
    }

    pub fn f(&self) -> &FunctionDescriptor {
        &self.f
    }

    pub fn g_star(&self) -> &FunctionDescriptor {
        &self.g_star
    }

    pub fn coupling(&self) -> &Matrix {
        &self.coupling
    }

    /// Spectral norm `|F|`, computed once at construction.
    pub fn coupling_norm(&self) -> f64 {
        self.coupling_norm
    }

    /// Strong-convexity modulus of `f` (zero when `f` has no curvature).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn primal_dim(&self) -> usize {
        self.coupling.cols()
    }

    pub fn dual_dim(&self) -> usize {
        self.coupling.rows()
    }

    /// Saddle objective `f(x) + <Fx, y> - g*(y)`. Extended-real: indicator
    /// terms can push the value to plus or minus infinity, and NaN appears
    /// only when both sides are infinite at once.
    pub fn phi(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let fx = self.coupling.matvec(x)?;
        Ok(self.f.eval(x)? + fx.dot(y) - self.g_star.eval(y)?)
    }

    /// Order-dependent FNV-1a hash of the problem data, stable across runs of
    /// the same build. Used to stamp traces so mismatched replays are caught.
    pub fn content_hash(&self) -> u64 {
        let mut h = FNV_OFFSET;
        for json in [
            serde_json::to_string(&self.f),
            serde_json::to_string(&self.g_star),
            serde_json::to_string(&self.coupling),
        ] {
            let json = json.expect("problem components serialize infallibly");
            h = fnv1a(h, json.as_bytes());
        }
        h
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn fnv1a(state: u64, bytes: &[u8]) -> u64 {
    let mut h = state;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// The scalar bilinear instance `x - x*y + y`: linear `f` and `g*` with
/// coupling `[[-1]]` and unique saddle at `(1, 1)`. Small enough to follow by
/// hand, yet it already separates the convergent schemes from the orbiting
/// ones.
pub fn make_counterexample() -> SaddleProblem {
    let f = FunctionDescriptor::linear(Vector::new(vec![1.0]).unwrap());
    let g_star = FunctionDescriptor::linear(Vector::new(vec![-1.0]).unwrap());
    let coupling = Matrix::from_rows(vec![vec![-1.0]]).unwrap();
    SaddleProblem::new(f, g_star, coupling).expect("counterexample is well formed")
}

/// `min_x 0.5|Ax - b|^2 + lambda |Fx|_1` in saddle form: `g = lambda|.|_1`
/// conjugates to the indicator of the infinity ball of radius `lambda`.
pub fn make_generalized_lasso(
    a: Matrix,
    b: Vector,
    lambda: f64,
    coupling: Matrix,
) -> Result<SaddleProblem> {
    let f = FunctionDescriptor::least_squares(a, b)?;
    let g_star = FunctionDescriptor::indicator_linf_ball(lambda)?;
    SaddleProblem::new(f, g_star, coupling)
}

/// `min_x |x|_1 subject to Ax = b` in saddle form: `f` is the indicator of
/// the affine set, the coupling is the identity, and `g*` is the unit
/// infinity-ball indicator. Rejects constructions whose constraint set is
/// detectably empty.
pub fn make_basis_pursuit(a: Matrix, b: Vector) -> Result<SaddleProblem> {
    let n = a.cols();
    let f = FunctionDescriptor::indicator_affine(a.clone(), b.clone())?;
    // Feasibility: least-squares residual of Ax = b via a lightly regularized
    // normal-equation solve (handles redundant rows without a pivot failure).
    let aat = a.outer_gram();
    let eps = 1e-12 * aat.frobenius_norm().max(1.0);
    let shifted = Matrix::from_fn(aat.rows(), aat.cols(), |i, j| {
        aat.get(i, j) + if i == j { eps } else { 0.0 }
    });
    let w = shifted
        .solve_spd(&b)
        .map_err(|e| Error::InvalidDescriptor {
            reason: format!("could not verify feasibility of the constraint set: {e}"),
        })?;
    let xhat = a.matvec_t(&w)?;
    let residual = a.matvec(&xhat)?.sub(&b).norm();
    if residual > 1e-8 * (1.0 + b.norm()) {
        return Err(Error::Infeasible { residual });
    }
    let g_star = FunctionDescriptor::indicator_linf_ball(1.0)?;
    SaddleProblem::new(f, g_star, Matrix::identity(n))
}

/// Forward-difference matrix with rows `(..., -1, 1, ...)`, shape
/// `(n-1) x n`. The usual coupling for total-variation-style penalties.
pub fn difference_matrix(n: usize) -> Result<Matrix> {
    if n < 2 {
        return Err(Error::InvalidDescriptor {
            reason: format!("difference matrix requires dimension >= 2, got {n}"),
        });
    }
    Ok(Matrix::from_fn(n - 1, n, |i, j| {
        if j == i {
            -1.0
        } else if j == i + 1 {
            1.0
        } else {
            0.0
        }
    }))
}

/// A validated saddle point: the pair satisfies both saddle inequalities on
/// every probe tried, up to `residual` (the worst violation observed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleCertificate {
    pub x_star: Vector,
    pub y_star: Vector,
    pub residual: f64,
}

fn violation(ineq_value: f64) -> f64 {
    if ineq_value.is_nan() {
        f64::INFINITY
    } else {
        (-ineq_value).max(0.0)
    }
}

pub(crate) fn ball_probe(rng: &mut ChaCha8Rng, center: &Vector, radius: f64) -> Vector {
    let d = center.len();
    loop {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / d as f64);
            let coords = center
                .iter()
                .zip(dir)
                .map(|(c, g)| c + r * g / norm)
                .collect();
            return Vector::new(coords).expect("probe coordinates are finite");
        }
    }
}

/// Checks the two saddle inequalities
///
/// ```text
/// f(x) - f(x*) + <F(x - x*), y*>  >= 0   for all x
/// g*(y) - g*(y*) - <Fx*, y - y*>  >= 0   for all y
/// ```
///
/// on a fixed-seed family of random probes (both raw draws and their
/// projections under the prox of each side, so indicator constraints get
/// informative feasible probes). Accepts when the worst violation stays
/// within [`CERTIFICATE_TOL`].
pub fn certify(
    problem: &SaddleProblem,
    x_star: Vector,
    y_star: Vector,
) -> Result<SaddleCertificate> {
    crate::error::ensure_len(&x_star, problem.primal_dim(), "certificate primal point")?;
    crate::error::ensure_len(&y_star, problem.dual_dim(), "certificate dual point")?;
    let f_star = problem.f.eval(&x_star)?;
    let g_star_val = problem.g_star.eval(&y_star)?;
    if !f_star.is_finite() || !g_star_val.is_finite() {
        return Err(Error::CertificateRejected {
            residual: f64::INFINITY,
        });
    }
    let fx_star = problem.coupling.matvec(&x_star)?;
    let fty_star = problem.coupling.matvec_t(&y_star)?;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0xCE27);
    for _ in 0..PROBE_COUNT {
        let xp_raw = ball_probe(&mut rng, &x_star, PROBE_RADIUS);
        let yp_raw = ball_probe(&mut rng, &y_star, PROBE_RADIUS);
        for xp in [xp_raw.clone(), problem.f.prox(1.0, &xp_raw)?] {
            let primal = problem.f.eval(&xp)? - f_star + xp.sub(&x_star).dot(&fty_star);
            worst = worst.max(violation(primal));
        }
        for yp in [yp_raw.clone(), problem.g_star.prox(1.0, &yp_raw)?] {
            let dual = problem.g_star.eval(&yp)? - g_star_val - fx_star.dot(&yp.sub(&y_star));
            worst = worst.max(violation(dual));
        }
    }
    if worst <= CERTIFICATE_TOL {
        Ok(SaddleCertificate {
            x_star,
            y_star,
            residual: worst,
        })
    } else {
        Err(Error::CertificateRejected { residual: worst })
    }
}

fn oracle_err(what: &str) -> impl Fn(crate::linalg::LinalgError) -> Error + '_ {
    move |e| Error::UnsupportedOracle {
        reason: format!("{what}: {e}"),
    }
}

/// Computes an exact saddle point in closed form where one exists and
/// validates it with [`certify`]. Supported families:
///
/// - linear `f` and linear `g*` (normal-equation solves on both sides),
/// - differentiable `f` and `g*` with positive definite dual curvature
///   (Schur-complement reduction to the primal block),
/// - quadratic-type `f` with an infinity-ball `g*` (sign-pattern
///   enumeration over the dual coordinates).
///
/// Anything else reports [`Error::UnsupportedOracle`].
pub fn saddle_oracle(problem: &SaddleProblem) -> Result<SaddleCertificate> {
    use FunctionDescriptor as Fd;
    let (x, y) = match (&problem.f, &problem.g_star) {
        (Fd::Linear { c: c_f }, Fd::Linear { c: c_g }) => {
            // Stationarity: Fx = c_g and F'y = -c_f, solved by normal equations.
            let ftf = problem.coupling.gram();
            let x = ftf
                .solve_spd(&problem.coupling.matvec_t(c_g)?)
                .map_err(oracle_err("primal normal equations"))?;
            let fft = problem.coupling.outer_gram();
            let y = fft
                .solve_spd(&problem.coupling.matvec(&c_f.scaled(-1.0))?)
                .map_err(oracle_err("dual normal equations"))?;
            (x, y)
        }
        (f, Fd::IndicatorLinfBall { radius }) if f.is_differentiable() => {
            let (p_f, q_f) = f.quadratic_parts(problem.primal_dim())?;
            lasso_active_set(problem, &p_f, &q_f, *radius)?
        }
        (f, g) if f.is_differentiable() && g.is_differentiable() => schur_saddle(problem, f, g)?,
        _ => {
            return Err(Error::UnsupportedOracle {
                reason: format!(
                    "no closed-form saddle for f = {}, g* = {}",
                    problem.f.kind_name(),
                    problem.g_star.kind_name()
                ),
            })
        }
    };
    certify(problem, x, y)
}

/// Joint stationarity for differentiable pairs, eliminating the dual block:
/// `(P_f + F' P_g^{-1} F) x = -q_f + F' P_g^{-1} q_g`, then
/// `y = P_g^{-1} (Fx - q_g)`. Needs `P_g` positive definite and the reduced
/// primal system nonsingular.
#[allow(clippy::needless_range_loop)]
fn schur_saddle(
    problem: &SaddleProblem,
    f: &FunctionDescriptor,
    g: &FunctionDescriptor,
) -> Result<(Vector, Vector)> {
    let d1 = problem.primal_dim();
    let d2 = problem.dual_dim();
    let (p_f, q_f) = f.quadratic_parts(d1)?;
    let (p_g, q_g) = g.quadratic_parts(d2)?;
    p_g.ensure_spd()
        .map_err(oracle_err("dual curvature must be positive definite"))?;
    // Columns of P_g^{-1} F, one solve per primal coordinate.
    let mut pg_inv_f: Vec<Vector> = Vec::with_capacity(d1);
    for j in 0..d1 {
        let col = Vector::new((0..d2).map(|i| problem.coupling.get(i, j)).collect())?;
        pg_inv_f.push(
            p_g.solve_spd(&col)
                .map_err(oracle_err("dual curvature solve"))?,
        );
    }
    let raw = Matrix::from_fn(d1, d1, |i, j| {
        let mut acc = p_f.get(i, j);
        for k in 0..d2 {
            acc += problem.coupling.get(k, i) * pg_inv_f[j][k];
        }
        acc
    });
    // Symmetrize: the cross term is symmetric analytically but each column
    // came from an independent solve.
    let reduced = Matrix::from_fn(d1, d1, |i, j| 0.5 * (raw.get(i, j) + raw.get(j, i)));
    let w = p_g
        .solve_spd(&q_g)
        .map_err(oracle_err("dual curvature solve"))?;
    let rhs = problem.coupling.matvec_t(&w)?.sub(&q_f);
    let x = reduced
        .solve_spd(&rhs)
        .map_err(oracle_err("reduced primal system is singular"))?;
    let y = p_g
        .solve_spd(&problem.coupling.matvec(&x)?.sub(&q_g))
        .map_err(oracle_err("dual curvature solve"))?;
    Ok((x, y))
}

/// Exact solution of `min_x 0.5 x'P x + q'x + lambda |Fx|_1` by enumerating
/// sign patterns of `Fx`. For pattern `sigma` with zero set `Z`:
///
/// ```text
/// x = P^{-1}(-q - lambda * F_P' sigma_P - lambda * F_Z' u),
/// u solves (F_Z P^{-1} F_Z') u = F_Z P^{-1}(-q - lambda F_P' sigma_P) / lambda,
/// ```
///
/// accepted when `|u| <= 1` coordinatewise and `sigma_i (Fx)_i >= 0` on the
/// support. All patterns share the per-row solves `c_i = P^{-1} F_i'`, so each
/// candidate costs one small Cholesky, and a sign guess from the
/// unregularized minimizer is tried before the full enumeration.
fn lasso_active_set(
    problem: &SaddleProblem,
    p_f: &Matrix,
    q_f: &Vector,
    lambda: f64,
) -> Result<(Vector, Vector)> {
    let d2 = problem.dual_dim();
    if d2 > MAX_ENUM_DIM {
        return Err(Error::UnsupportedOracle {
            reason: format!(
                "active-set enumeration supports dual dimension <= {MAX_ENUM_DIM}, got {d2}"
            ),
        });
    }
    p_f.ensure_spd().map_err(oracle_err(
        "active-set oracle needs positive definite primal curvature",
    ))?;
    let base = p_f.solve_spd(&q_f.scaled(-1.0)).map_err(Error::from)?;
    if lambda == 0.0 {
        return Ok((base, Vector::zeros(d2)));
    }
    let mut rows: Vec<Vector> = Vec::with_capacity(d2);
    for i in 0..d2 {
        rows.push(Vector::new(problem.coupling.row(i).to_vec())?);
    }
    let mut cols: Vec<Vector> = Vec::with_capacity(d2);
    for r in &rows {
        cols.push(p_f.solve_spd(r)?);
    }
    let fbase: Vec<f64> = rows.iter().map(|r| r.dot(&base)).collect();
    // d_tab[i][j] = F_i P^{-1} F_j', symmetrized against independent solves.
    let mut d_tab = vec![vec![0.0; d2]; d2];
    for i in 0..d2 {
        for j in 0..=i {
            let v = 0.5 * (rows[i].dot(&cols[j]) + rows[j].dot(&cols[i]));
            d_tab[i][j] = v;
            d_tab[j][i] = v;
        }
    }

    let z_scale = 1.0 + fbase.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let guess: Vec<i8> = fbase
        .iter()
        .map(|&z| {
            if z.abs() <= 1e-9 * z_scale {
                0
            } else if z > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();

    let try_pattern = |sigma: &[i8]| -> Option<(Vector, Vector)> {
        let zset: Vec<usize> = (0..d2).filter(|&i| sigma[i] == 0).collect();
        let pset: Vec<usize> = (0..d2).filter(|&i| sigma[i] != 0).collect();
        // gw_k = F_{Z_k} . w with w = base - lambda * sum_{j in P} sigma_j c_j.
        let gw = |k: usize| -> f64 {
            let mut acc = fbase[k];
            for &j in &pset {
                acc -= lambda * f64::from(sigma[j]) * d_tab[k][j];
            }
            acc
        };
        let u = if zset.is_empty() {
            Vec::new()
        } else {
            let m = Matrix::from_fn(zset.len(), zset.len(), |k, l| d_tab[zset[k]][zset[l]]);
            let rhs = Vector::new(zset.iter().map(|&k| gw(k) / lambda).collect()).ok()?;
            let u = m.solve_spd(&rhs).ok()?;
            if u.iter().any(|v| v.abs() > 1.0 + 1e-9) {
                return None;
            }
            Vec::from(u)
        };
        // (Fx)_i for the candidate x, from the shared dot table.
        let fx = |i: usize| -> f64 {
            let mut acc = fbase[i];
            for &j in &pset {
                acc -= lambda * f64::from(sigma[j]) * d_tab[i][j];
            }
            for (k, &z) in zset.iter().enumerate() {
                acc -= lambda * u[k] * d_tab[i][z];
            }
            acc
        };
        let fx_scale = 1.0 + (0..d2).fold(0.0f64, |m, i| m.max(fx(i).abs()));
        for &i in &pset {
            if f64::from(sigma[i]) * fx(i) < -1e-9 * fx_scale {
                return None;
            }
        }
        let mut x = base.clone();
        for &j in &pset {
            x = x.add_scaled(-lambda * f64::from(sigma[j]), &cols[j]);
        }
        for (k, &z) in zset.iter().enumerate() {
            x = x.add_scaled(-lambda * u[k], &cols[z]);
        }
        let mut v = vec![0.0; d2];
        for &j in &pset {
            v[j] = f64::from(sigma[j]);
        }
        for (k, &z) in zset.iter().enumerate() {
            v[z] = u[k].clamp(-1.0, 1.0);
        }
        let y = Vector::new(v).ok()?.scaled(lambda);
        Some((x, y))
    };

    if let Some(found) = try_pattern(&guess) {
        return Ok(found);
    }
    let total = 3usize.pow(d2 as u32);
    let mut sigma = vec![0i8; d2];
    for code in 0..total {
        let mut rem = code;
        for s in sigma.iter_mut() {
            *s = match rem % 3 {
                0 => 0,
                1 => 1,
                _ => -1,
            };
            rem /= 3;
        }
        if sigma == guess {
            continue;
        }
        if let Some(found) = try_pattern(&sigma) {
            return Ok(found);
        }
    }
    Err(Error::UnsupportedOracle {
        reason: "no consistent active set found".into(),
    })
}

/// Random least-squares-plus-l1 instance: Gaussian design scaled by
/// `1/sqrt(rows)`, Gaussian targets, caller-chosen coupling.
pub fn seeded_lasso(
    rows: usize,
    primal_dim: usize,
    lambda: f64,
    coupling: Matrix,
    seed: u64,
) -> Result<SaddleProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (rows.max(1) as f64).sqrt();
    let a = Matrix::from_fn(rows, primal_dim, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        z * scale
    });
    let b = Vector::new((0..rows).map(|_| rng.sample(StandardNormal)).collect())?;
    make_generalized_lasso(a, b, lambda, coupling)
}

/// Random smooth-strongly-convex pair: both curvatures are Gram matrices
/// shifted by the identity, so the saddle is unique and the closed-form
/// oracle applies.
pub fn seeded_quadratic_saddle(
    primal_dim: usize,
    dual_dim: usize,
    seed: u64,
) -> Result<SaddleProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian_matrix = |r: usize, c: usize, scale: f64| {
        Matrix::from_fn(r, c, |_, _| {
            let z: f64 = rng.sample(StandardNormal);
            z * scale
        })
    };
    let g1 = gaussian_matrix(primal_dim, primal_dim, 1.0 / (primal_dim as f64).sqrt());
    let p_f = g1.gram().scaled_plus_identity(1.0)?;
    let g2 = gaussian_matrix(dual_dim, dual_dim, 1.0 / (dual_dim as f64).sqrt());
    let p_g = g2.gram().scaled_plus_identity(1.0)?;
    let coupling = gaussian_matrix(
        dual_dim,
        primal_dim,
        1.0 / ((dual_dim * primal_dim) as f64).sqrt(),
    );
    let q_f = Vector::new(
        (0..primal_dim)
            .map(|_| rng.sample(StandardNormal))
            .collect(),
    )?;
    let q_g = Vector::new((0..dual_dim).map(|_| rng.sample(StandardNormal)).collect())?;
    let f = FunctionDescriptor::quadratic(p_f, q_f, 0.0)?;
    let g_star = FunctionDescriptor::quadratic(p_g, q_g, 0.0)?;
    SaddleProblem::new(f, g_star, coupling)
}
