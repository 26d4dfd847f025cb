//! Simplex-constrained ridge least squares.
//!
//! Minimizes `‖p − Qπ‖² + λ‖π‖²` over `π ≥ 0, Σπ = 1`. The category count is
//! small (four in practice), so the solver enumerates every face of the
//! simplex, solves the equality-constrained problem on its affine hull and
//! keeps the best feasible candidate. For a convex objective the optimum lies
//! in the relative interior of some face and is a stationary point there, so
//! the enumeration is exact.

use nalgebra::{DMatrix, DVector};

/// Largest category count accepted by the face enumeration.
pub const MAX_CATEGORIES: usize = 16;

const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("dimension mismatch: Q is {rows}x{cols}, p has {len} entries")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("between 1 and {MAX_CATEGORIES} categories are supported, got {0}")]
    Categories(usize),
    #[error("ridge weight must be finite and non-negative, got {0}")]
    Lambda(f64),
    #[error("no feasible point found")]
    Infeasible,
}

/// Objective value `‖p − Qπ‖² + λ‖π‖²`.
pub fn objective(q: &DMatrix<f64>, p: &DVector<f64>, lambda: f64, pi: &DVector<f64>) -> f64 {
    (p - q * pi).norm_squared() + lambda * pi.norm_squared()
}

pub fn solve_simplex_ls(
    q: &DMatrix<f64>,
    p: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>, SolverError> {
    let k = q.ncols();
    if q.nrows() != p.len() {
        return Err(SolverError::Shape {
            rows: q.nrows(),
            cols: k,
            len: p.len(),
        });
    }
    if k == 0 || k > MAX_CATEGORIES {
        return Err(SolverError::Categories(k));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(SolverError::Lambda(lambda));
    }

    let qt = q.transpose();
    let h = &qt * q + DMatrix::identity(k, k) * lambda;
    let g = &qt * p;
    let scale = h.amax().max(g.amax()).max(1.0);

    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 1u32..(1u32 << k) {
        let support: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let Some(x) = solve_on_face(&h, &g, &support, scale) else {
            continue;
        };
        if x.iter().any(|&v| v < -FEASIBILITY_TOL) {
            continue;
        }
        let value = objective(q, p, lambda, &x);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, x));
        }
    }
    let (_, mut x) = best.ok_or(SolverError::Infeasible)?;
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let total = x.sum();
    Ok(x / total)
}

/// Stationary point of `xᵀHx − 2gᵀx` on `{x : x_i = 0 off support, Σx = 1}`.
/// Returns `None` when the KKT system is inconsistent.
fn solve_on_face(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    support: &[usize],
    scale: f64,
) -> Option<DVector<f64>> {
    let m = support.len();
    // constraint row scaled to the curvature so the saddle system stays
    // well conditioned for large ridge weights
    let c = (2.0 * h.amax()).max(1.0);
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = 2.0 * h[(i, j)];
        }
        kkt[(a, m)] = c;
        kkt[(m, a)] = c;
        rhs[a] = 2.0 * g[i];
    }
    rhs[m] = c;

    let svd = kkt.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    let mut sol = svd.solve(&rhs, eps).ok()?;
    // the pseudo-inverse alone leaves round-off well above the consistency
    // tolerance on nearly collinear columns; refine against the residual
    for _ in 0..4 {
        let residual = &rhs - &kkt * &sol;
        if residual.amax() <= 1e-14 * scale.max(c) {
            break;
        }
        sol += svd.solve(&residual, eps).ok()?;
    }
    if (&kkt * &sol - &rhs).amax() > 1e-9 * scale.max(c) {
        return None;
    }
    let mut x = DVector::zeros(h.ncols());
    for (a, &i) in support.iter().enumerate() {
        x[i] = sol[a];
    }
    Some(x)
}
