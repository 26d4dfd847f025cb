//! Covariance-structure algebra and maximum-likelihood fitting.
//!
//! Variables are ordered observed-then-latent. With `A` the directed
//! coefficients (`A[to, from]`), `S₀` the residual (co)variances and `F` the
//! selection of observed rows, `Σ(θ) = F (I − A)⁻¹ S₀ (I − A)⁻ᵀ Fᵀ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::model::{ParamKind, SemModel};
use super::SemError;

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 500;

/// Significance stars: `***` below 0.01, `**` below 0.05, `*` below 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

struct Ram {
    /// (I − A)⁻¹
    b: DMatrix<f64>,
    s0: DMatrix<f64>,
}

fn ram(model: &SemModel, theta: &[f64]) -> Result<Ram, SemError> {
    if theta.len() != model.n_free() {
        return Err(SemError::Shape(format!(
            "θ has {} entries, model has {} free parameters",
            theta.len(),
            model.n_free()
        )));
    }
    let n = model.n_vars();
    let mut a = DMatrix::zeros(n, n);
    let mut s0 = DMatrix::zeros(n, n);
    let mut free = theta.iter();
    for p in model.parameters() {
        let v = if p.free { *free.next().expect("length checked") } else { p.value };
        let (i, j) = (model.index_of(&p.lhs), model.index_of(&p.rhs));
        match p.kind {
            ParamKind::Loading | ParamKind::Regression => a[(i, j)] = v,
            ParamKind::Covariance => {
                s0[(i, j)] = v;
                s0[(j, i)] = v;
            }
            ParamKind::Variance => s0[(i, i)] = v,
        }
    }
    let i_minus_a = DMatrix::identity(n, n) - a;
    let b = i_minus_a
        .try_inverse()
        .filter(|b| b.iter().all(|x| x.is_finite()))
        .ok_or(SemError::Degenerate)?;
    Ok(Ram { b, s0 })
}

fn observed_block(m: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    m.view((0, 0), (p, p)).into_owned()
}

/// Model-implied covariance of the observed variables at `theta` (free
/// parameters in table order).
pub fn implied_covariance(model: &SemModel, theta: &[f64]) -> Result<DMatrix<f64>, SemError> {
    let r = ram(model, theta)?;
    let full = &r.b * &r.s0 * r.b.transpose();
    Ok(observed_block(&full, model.observed().len()))
}

/// `∂Σ/∂θ_k` for every free parameter, analytically.
pub fn implied_covariance_jacobian(model: &SemModel, theta: &[f64]) -> Result<Vec<DMatrix<f64>>, SemError> {
    let r = ram(model, theta)?;
    let p = model.observed().len();
    let full = &r.b * &r.s0 * r.b.transpose();
    let mut out = Vec::with_capacity(theta.len());
    for param in model.parameters().iter().filter(|p| p.free) {
        let (i, j) = (model.index_of(&param.lhs), model.index_of(&param.rhs));
        let d = match param.kind {
            // d(B S₀ Bᵀ) = B E_ij M + M E_ji Bᵀ with M = B S₀ Bᵀ
            ParamKind::Loading | ParamKind::Regression => {
                let left = r.b.column(i) * full.row(j);
                &left + left.transpose()
            }
            ParamKind::Covariance => {
                let left = r.b.column(i) * r.b.column(j).transpose();
                &left + left.transpose()
            }
            ParamKind::Variance => r.b.column(i) * r.b.column(i).transpose(),
        };
        out.push(observed_block(&d, p));
    }
    Ok(out)
}

fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Objective pieces shared by value and gradient.
struct Evaluation {
    value: f64,
    sigma_inv: DMatrix<f64>,
}

fn evaluate(model: &SemModel, theta: &[f64], s: &DMatrix<f64>, log_det_s: f64) -> Option<Evaluation> {
    let sigma = implied_covariance(model, theta).ok()?;
    let ch = Cholesky::new(sigma)?;
    let sigma_inv = ch.inverse();
    let p = s.nrows() as f64;
    let value = log_det(&ch) + (s * &sigma_inv).trace() - log_det_s - p;
    value.is_finite().then_some(Evaluation { value, sigma_inv })
}

fn gradient(model: &SemModel, theta: &[f64], s: &DMatrix<f64>, sigma_inv: &DMatrix<f64>) -> DVector<f64> {
    let w = sigma_inv - sigma_inv * s * sigma_inv;
    let jac = implied_covariance_jacobian(model, theta).expect("θ evaluated already");
    DVector::from_iterator(jac.len(), jac.iter().map(|d| w.component_mul(d).sum()))
}

/// The ML discrepancy `log det Σ + tr(S Σ⁻¹) − log det S − p`, or `None`
/// when `Σ(θ)` is not positive definite.
pub fn ml_discrepancy(model: &SemModel, theta: &[f64], s: &DMatrix<f64>) -> Option<f64> {
    let ch = Cholesky::new(s.clone())?;
    evaluate(model, theta, s, log_det(&ch)).map(|e| e.value)
}

/// Analytic gradient of [`ml_discrepancy`].
pub fn ml_gradient(model: &SemModel, theta: &[f64], s: &DMatrix<f64>) -> Option<DVector<f64>> {
    let ch = Cholesky::new(s.clone())?;
    let e = evaluate(model, theta, s, log_det(&ch))?;
    Some(gradient(model, theta, s, &e.sigma_inv))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub kind: ParamKind,
    pub lhs: String,
    pub rhs: String,
    pub free: bool,
    pub estimate: f64,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemFit {
    pub parameters: Vec<ParameterEstimate>,
    pub theta: Vec<f64>,
    pub discrepancy: f64,
    /// (N − 1) · F
    pub chi_square: f64,
    pub degrees_of_freedom: i64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_max_norm: f64,
    pub diagnostics: Vec<String>,
    pub observed: Vec<String>,
    pub implied_covariance: Vec<Vec<f64>>,
}

impl SemFit {
    /// Estimate for the parameter `lhs`–`rhs` of the given kind, using the
    /// parameter table's orientation.
    pub fn get(&self, kind: ParamKind, lhs: &str, rhs: &str) -> Option<&ParameterEstimate> {
        self.parameters
            .iter()
            .find(|p| p.kind == kind && ((p.lhs == lhs && p.rhs == rhs) || (kind == ParamKind::Covariance && p.lhs == rhs && p.rhs == lhs)))
    }
}

fn max_norm(g: &DVector<f64>) -> f64 {
    g.amax()
}

/// Expected information `tr(Σ⁻¹ Δ_k Σ⁻¹ Δ_l)`, used to scale the first
/// quasi-Newton step.
fn expected_information(model: &SemModel, theta: &[f64], sigma_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let jac = implied_covariance_jacobian(model, theta).expect("θ evaluated already");
    let scaled: Vec<DMatrix<f64>> = jac.iter().map(|d| sigma_inv * d).collect();
    let k = jac.len();
    DMatrix::from_fn(k, k, |a, b| (&scaled[a] * &scaled[b]).trace())
}

fn initial_inverse_hessian(model: &SemModel, theta: &[f64], sigma_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let k = theta.len();
    Cholesky::new(expected_information(model, theta, sigma_inv))
        .map(|c| c.inverse())
        .unwrap_or_else(|| DMatrix::identity(k, k))
}

/// Central-difference Hessian of the discrepancy from the analytic gradient.
fn numerical_hessian(model: &SemModel, theta: &[f64], s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = theta.len();
    let mut h = DMatrix::zeros(k, k);
    let mut x = theta.to_vec();
    for j in 0..k {
        let step = 1e-5 * theta[j].abs().max(1.0);
        x[j] = theta[j] + step;
        let gp = ml_gradient(model, &x, s)?;
        x[j] = theta[j] - step;
        let gm = ml_gradient(model, &x, s)?;
        x[j] = theta[j];
        h.set_column(j, &((gp - gm) / (2.0 * step)));
    }
    Some((&h + h.transpose()) * 0.5)
}

/// Minimizes the ML discrepancy by BFGS from the model's start values.
/// Steps that leave the positive-definite region are rejected by the line
/// search. Standard errors come from the inverse of `(N − 1)/2` times the
/// Hessian at the optimum.
pub fn fit_ml(model: &SemModel, s: &DMatrix<f64>, n: usize) -> Result<SemFit, SemError> {
    let p = model.observed().len();
    if s.nrows() != p || s.ncols() != p {
        return Err(SemError::Shape(format!("sample covariance is {}×{}, model has {p} observed", s.nrows(), s.ncols())));
    }
    if (s - s.transpose()).amax() > 1e-10 * s.amax().max(1.0) {
        return Err(SemError::NotPositiveDefinite("sample covariance is not symmetric".into()));
    }
    if n <= p {
        return Err(SemError::SampleSize { n, p });
    }
    model.check_identification()?;
    let s_ch = Cholesky::new(s.clone())
        .ok_or_else(|| SemError::NotPositiveDefinite("sample covariance".into()))?;
    let log_det_s = log_det(&s_ch);

    let mut theta = model.start_values();
    let mut current = evaluate(model, &theta, s, log_det_s)
        .ok_or_else(|| SemError::NotPositiveDefinite("implied covariance at the start values".into()))?;
    let mut g = gradient(model, &theta, s, &current.sigma_inv);
    let fresh_inverse = |theta: &[f64], e: &Evaluation| initial_inverse_hessian(model, theta, &e.sigma_inv);
    let mut h_inv = fresh_inverse(&theta, &current);
    let mut just_reset = true;
    let mut iterations = 0;
    let mut diagnostics = Vec::new();

    while max_norm(&g) >= GRADIENT_TOLERANCE && iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut d = -(&h_inv * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h_inv = fresh_inverse(&theta, &current);
            d = -(&h_inv * &g);
            slope = g.dot(&d);
            just_reset = true;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(d.iter()).map(|(x, dx)| x + t * dx).collect();
            if let Some(e) = evaluate(model, &trial, s, log_det_s) {
                let tol = 1e-14 * current.value.abs().max(1.0);
                if e.value <= current.value + 1e-4 * t * slope + tol {
                    accepted = Some((trial, e));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((next, e)) = accepted else {
            if just_reset {
                diagnostics.push(format!("line search failed at iteration {iterations}"));
                break;
            }
            h_inv = fresh_inverse(&theta, &current);
            just_reset = true;
            continue;
        };
        let g_next = gradient(model, &next, s, &e.sigma_inv);
        let step = DVector::from_iterator(theta.len(), next.iter().zip(&theta).map(|(a, b)| a - b));
        let y = &g_next - &g;
        let sy = step.dot(&y);
        if sy > 1e-16 {
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            h_inv += (&step * step.transpose()) * (rho * rho * yhy + rho) - (&hy * step.transpose() + &step * hy.transpose()) * rho;
        }
        theta = next;
        current = e;
        g = g_next;
        just_reset = false;
    }
    // Newton polish: quasi-Newton stopping points depend on the path taken,
    // so a few full steps make the optimum reproducible well below tolerance
    if max_norm(&g) < GRADIENT_TOLERANCE {
        for _ in 0..5 {
            let Some(step) = numerical_hessian(model, &theta, s).and_then(|h| Cholesky::new(h)).map(|c| c.solve(&g)) else {
                break;
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(x, dx)| x - dx).collect();
            let Some(e) = evaluate(model, &trial, s, log_det_s) else { break };
            let g_next = gradient(model, &trial, s, &e.sigma_inv);
            if max_norm(&g_next) >= max_norm(&g) {
                break;
            }
            theta = trial;
            current = e;
            g = g_next;
            if max_norm(&g) < 1e-13 {
                break;
            }
        }
    }
    let gradient_max_norm = max_norm(&g);
    let converged = gradient_max_norm < GRADIENT_TOLERANCE;
    if !converged {
        diagnostics.push(format!(
            "not converged after {iterations} iterations (gradient max-norm {gradient_max_norm:.3e})"
        ));
    }

    let covariance = numerical_hessian(model, &theta, s)
        .map(|h| h * ((n as f64 - 1.0) / 2.0))
        .and_then(|h| Cholesky::new(h).map(|c| c.inverse()));
    if covariance.is_none() {
        diagnostics.push("Hessian not positive definite at the optimum; standard errors unavailable".into());
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut free = 0;
    let parameters = model
        .parameters()
        .iter()
        .map(|param| {
            let (estimate, se) = if param.free {
                let k = free;
                free += 1;
                let se = covariance.as_ref().map(|c| c[(k, k)]).filter(|v| *v > 0.0).map(f64::sqrt);
                (theta[k], se)
            } else {
                (param.value, None)
            };
            let z = se.map(|se| estimate / se);
            let p_value = z.map(|z| 2.0 * (1.0 - normal.cdf(z.abs())));
            ParameterEstimate {
                kind: param.kind,
                lhs: param.lhs.clone(),
                rhs: param.rhs.clone(),
                free: param.free,
                estimate,
                se,
                z,
                p_value,
                stars: p_value.map(stars).unwrap_or("").to_string(),
            }
        })
        .collect();
    let sigma = implied_covariance(model, &theta)?;
    Ok(SemFit {
        parameters,
        discrepancy: current.value,
        chi_square: (n as f64 - 1.0) * current.value,
        degrees_of_freedom: (p * (p + 1) / 2) as i64 - model.n_free() as i64,
        n,
        iterations,
        converged,
        gradient_max_norm,
        diagnostics,
        observed: model.observed().to_vec(),
        implied_covariance: sigma.row_iter().map(|r| r.iter().copied().collect()).collect(),
        theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::model::parse_model;
    use approx::assert_abs_diff_eq;

    #[test]
    fn star_boundaries_are_open_on_the_left() {
        assert_eq!(stars(0.1), "");
        assert_eq!(stars(0.0999), "*");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.0499), "**");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.0099), "***");
    }

    #[test]
    fn no_paths_gives_diagonal() {
        let m = parse_model("a ~~ a\nb ~~ b\n").unwrap();
        let sigma = implied_covariance(&m, &[2.0, 3.0]).unwrap();
        assert_eq!(sigma, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])));
    }

    #[test]
    fn one_factor_identity() {
        let m = parse_model("F =~ a + b + c").unwrap();
        // loadings then residual variances of a, b, c
        let theta = [0.9, 0.8, 0.7, 0.2, 0.3, 0.4];
        let sigma = implied_covariance(&m, &theta).unwrap();
        let l = DVector::from_vec(vec![0.9, 0.8, 0.7]);
        let expected = &l * l.transpose() + DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.3, 0.4]));
        assert_abs_diff_eq!(sigma, expected, epsilon = 1e-14);
    }

    #[test]
    fn saturated_model_reaches_zero() {
        let m = parse_model("a ~~ b\na ~~ c\nb ~~ c\n").unwrap();
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.5, 0.4, -0.2, 0.4, 0.8]);
        let fit = fit_ml(&m, &s, 200).unwrap();
        assert!(fit.converged, "{:?}", fit.diagnostics);
        assert!(fit.discrepancy.abs() < 1e-8);
        assert_eq!(fit.degrees_of_freedom, 0);
        assert_abs_diff_eq!(fit.get(ParamKind::Covariance, "c", "b").unwrap().estimate, 0.4, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = parse_model("a ~~ b").unwrap();
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(fit_ml(&m, &not_pd, 100), Err(SemError::NotPositiveDefinite(_))));
        assert!(matches!(fit_ml(&m, &DMatrix::identity(2, 2), 2), Err(SemError::SampleSize { .. })));
        assert!(matches!(implied_covariance(&m, &[1.0]), Err(SemError::Shape(_))));
    }
}
