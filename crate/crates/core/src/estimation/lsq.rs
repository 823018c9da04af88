//! Weighted least squares: a direct solver for models linear in their
//! coefficients and a damped Gauss–Newton (Levenberg–Marquardt) loop for the
//! nonlinear ones.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Weighted sum of squared residuals.
    pub chi2: f64,
    pub dof: usize,
    /// Unweighted root-mean-square residual.
    pub residual_rms: f64,
}

/// Covariance `(JᵀWJ)⁻¹`, scaled by `χ²/dof` unless the weights are absolute
/// inverse variances.
fn covariance(
    jtj: &DMatrix<f64>,
    chi2: f64,
    dof: usize,
    absolute_sigma: bool,
) -> Option<DMatrix<f64>> {
    let inv = jtj.clone().try_inverse()?;
    if absolute_sigma {
        Some(inv)
    } else if dof > 0 {
        Some(inv * (chi2 / dof as f64))
    } else {
        Some(inv * 0.0)
    }
}

/// Fits `y ≈ Σ_k c_k·basis_k(x)` by weighted least squares.
pub fn linear_least_squares(
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    absolute_sigma: bool,
    basis: &[&dyn Fn(f64) -> f64],
) -> Result<LinearFit> {
    let n = x.len();
    let p = basis.len();
    if n < p {
        return Err(Error::TooFewSamples { needed: p, got: n });
    }
    // Columns are rescaled to unit norm before solving.
    let mut design = DMatrix::<f64>::zeros(n, p);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        let sw = weights[i].sqrt();
        for (k, f) in basis.iter().enumerate() {
            design[(i, k)] = sw * f(x[i]);
        }
        rhs[i] = sw * y[i];
    }
    let scales: Vec<f64> = (0..p)
        .map(|k| {
            let norm = design.column(k).norm();
            if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = design.clone();
    for (k, s) in scales.iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / s);
    }
    let svd = scaled.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if !(min_sv > 1e-12 * max_sv) {
        return Err(Error::Unidentifiable("linear model coefficients".into()));
    }
    let solution = svd
        .solve(&rhs, 1e-14 * max_sv)
        .map_err(|e| Error::Unidentifiable(e.to_string()))?;
    let coefficients: Vec<f64> = (0..p).map(|k| solution[k] / scales[k]).collect();

    let mut chi2 = 0.0;
    let mut sq = 0.0;
    for i in 0..n {
        let model: f64 = basis
            .iter()
            .zip(&coefficients)
            .map(|(f, c)| c * f(x[i]))
            .sum();
        let r = y[i] - model;
        chi2 += weights[i] * r * r;
        sq += r * r;
    }
    let dof = n - p;
    let jtj_scaled = scaled.transpose() * &scaled;
    let cov_scaled = covariance(&jtj_scaled, chi2, dof, absolute_sigma)
        .ok_or_else(|| Error::Unidentifiable("linear model coefficients".into()))?;
    let covariance = DMatrix::from_fn(p, p, |a, b| cov_scaled[(a, b)] / (scales[a] * scales[b]));
    let standard_errors = (0..p).map(|k| covariance[(k, k)].max(0.0).sqrt()).collect();
    Ok(LinearFit {
        coefficients,
        standard_errors,
        covariance,
        chi2,
        dof,
        residual_rms: (sq / n as f64).sqrt(),
    })
}

/// A model `f(x; p)` with its gradient in `p`. Returns `None` when `p` is
/// outside the model's domain.
pub trait CurveModel {
    fn n_params(&self) -> usize;
    fn eval(&self, x: f64, params: &[f64], grad: &mut [f64]) -> Option<f64>;
}

#[derive(Debug, Clone)]
pub struct NonlinearFit {
    pub params: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when every parameter moves by less than this, relatively.
    pub param_tol: f64,
    /// Stop when χ² decreases by less than this, relatively.
    pub chi2_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            param_tol: 1e-13,
            chi2_tol: 1e-15,
        }
    }
}

/// χ², `JᵀWJ` and `JᵀW(y − f)` at `params`, accumulated point by point.
fn evaluate<M: CurveModel>(
    model: &M,
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    params: &[f64],
) -> Option<(f64, DMatrix<f64>, DVector<f64>)> {
    let p = model.n_params();
    let mut jtj = DMatrix::<f64>::zeros(p, p);
    let mut jtr = DVector::<f64>::zeros(p);
    let mut grad = vec![0.0; p];
    let mut chi2 = 0.0;
    for i in 0..x.len() {
        let f = model.eval(x[i], params, &mut grad)?;
        if !f.is_finite() {
            return None;
        }
        let r = y[i] - f;
        chi2 += weights[i] * r * r;
        for a in 0..p {
            let wa = weights[i] * grad[a];
            jtr[a] += wa * r;
            for b in 0..=a {
                jtj[(a, b)] += wa * grad[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            jtj[(b, a)] = jtj[(a, b)];
        }
    }
    Some((chi2, jtj, jtr))
}

/// Levenberg–Marquardt with Marquardt's diagonal scaling.
pub fn levenberg_marquardt<M: CurveModel>(
    model: &M,
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    absolute_sigma: bool,
    initial: &[f64],
    options: &LmOptions,
) -> Result<NonlinearFit> {
    let (n, p) = (x.len(), model.n_params());
    if n < p {
        return Err(Error::TooFewSamples { needed: p, got: n });
    }
    let mut params = initial.to_vec();
    let (mut chi2, mut jtj, mut jtr) = evaluate(model, x, y, weights, &params)
        .ok_or_else(|| crate::error::invalid("initial guess", "outside the model domain"))?;
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let mut improved = false;
        let mut small_step = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(delta) = a
                .clone()
                .cholesky()
                .map(|c| c.solve(&jtr))
                .or_else(|| a.lu().solve(&jtr))
            else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params
                .iter()
                .zip(delta.iter())
                .map(|(p, d)| p + d)
                .collect();
            match evaluate(model, x, y, weights, &trial) {
                Some((c2, j2, r2)) if c2 <= chi2 => {
                    small_step = trial
                        .iter()
                        .zip(&params)
                        .all(|(t, p)| (t - p).abs() <= options.param_tol * p.abs().max(1e-300));
                    let rel_drop = (chi2 - c2) / chi2.max(1e-300);
                    params = trial;
                    let flat = rel_drop < options.chi2_tol;
                    chi2 = c2;
                    jtj = j2;
                    jtr = r2;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = true;
                    if flat && chi2 > 0.0 {
                        small_step = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
            if lambda > 1e16 {
                break;
            }
        }
        if !improved {
            // No downhill step at any damping: a minimum to working precision.
            converged = true;
            break;
        }
        if small_step || chi2 == 0.0 {
            converged = true;
            break;
        }
    }

    let dof = n - p;
    let covariance = covariance(&jtj, chi2, dof, absolute_sigma)
        .ok_or_else(|| Error::Unidentifiable("fit parameters (singular normal matrix)".into()))?;
    let standard_errors = (0..p).map(|k| covariance[(k, k)].max(0.0).sqrt()).collect();
    let mut grad = vec![0.0; p];
    let sq: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let f = model.eval(xi, &params, &mut grad).unwrap_or(f64::NAN);
            (yi - f).powi(2)
        })
        .sum();
    Ok(NonlinearFit {
        params,
        standard_errors,
        covariance,
        chi2,
        dof,
        residual_rms: (sq / n as f64).sqrt(),
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_exact() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 3.0 + 0.5 * x).collect();
        let fit = linear_least_squares(&x, &y, &[1.0; 10], false, &[&|_| 1.0, &|x| x]).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 0.5).abs() < 1e-12);
        assert_eq!(fit.dof, 8);
    }

    #[test]
    fn textbook_line_errors() {
        // y = a + b x with known residuals; compare with closed-form OLS
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.1, 3.9, 6.2, 7.8, 10.1];
        let fit = linear_least_squares(&x, &y, &[1.0; 5], false, &[&|_| 1.0, &|x| x]).unwrap();
        let n = 5.0;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let a = (sy - b * sx) / n;
        let s2: f64 = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (yi - a - b * xi).powi(2))
            .sum::<f64>()
            / 3.0;
        let se_b = (s2 * n / (n * sxx - sx * sx)).sqrt();
        assert!((fit.coefficients[1] - b).abs() < 1e-12);
        assert!((fit.coefficients[0] - a).abs() < 1e-12);
        assert!((fit.standard_errors[1] - se_b).abs() < 1e-12);
    }

    #[test]
    fn collinear_basis_is_unidentifiable() {
        let x = [0.0, 1.0, 2.0];
        let r = linear_least_squares(
            &x,
            &[1.0, 2.0, 3.0],
            &[1.0; 3],
            false,
            &[&|x| x, &|x| 2.0 * x],
        );
        assert!(matches!(r, Err(Error::Unidentifiable(_))));
    }

    struct Exp;
    impl CurveModel for Exp {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, x: f64, p: &[f64], g: &mut [f64]) -> Option<f64> {
            let e = (-p[1] * x).exp();
            g[0] = e;
            g[1] = -p[0] * x * e;
            Some(p[0] * e)
        }
    }

    #[test]
    fn lm_recovers_exponential() {
        let x: Vec<f64> = (0..50).map(|i| 0.2 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 7e6 * (-0.37 * x).exp()).collect();
        let fit = levenberg_marquardt(
            &Exp,
            &x,
            &y,
            &[1.0; 50],
            false,
            &[1e6, 1.0],
            &LmOptions::default(),
        )
        .unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] / 7e6 - 1.0).abs() < 1e-10);
        assert!((fit.params[1] / 0.37 - 1.0).abs() < 1e-10);
    }
}
