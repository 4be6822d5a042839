//! Small dense Levenberg–Marquardt solver with a central-difference Jacobian.
//!
//! Problems here have at most a handful of parameters, so the normal
//! equations are formed explicitly and solved by Cholesky.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Stop once an accepted step changes the objective by less than this
    /// fraction.
    pub relative_tolerance: f64,
    /// Stop immediately when the objective is at or below this value.
    pub absolute_tolerance: f64,
    /// Central-difference step, absolute in the (usually log-scaled) parameters.
    pub jacobian_step: f64,
    pub initial_damping: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-10,
            absolute_tolerance: 0.0,
            jacobian_step: 1e-6,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub objective: f64,
    /// Number of accepted steps.
    pub iterations: usize,
    pub converged: bool,
    /// Objective before the first step and after every accepted step.
    pub history: Vec<f64>,
}

fn objective(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn eval<F>(f: &F, x: &[f64]) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    f(x).filter(|r| r.iter().all(|v| v.is_finite()))
}

/// Central-difference Jacobian of `f` at `x`. Rows are residuals.
pub fn jacobian<F>(f: &F, x: &[f64], step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let m = eval(f, x)?.len();
    let mut j = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        xp[k] = x[k] + step;
        let up = eval(f, &xp)?;
        xp[k] = x[k] - step;
        let down = eval(f, &xp)?;
        xp[k] = x[k];
        for i in 0..m {
            j[(i, k)] = (up[i] - down[i]) / (2.0 * step);
        }
    }
    Some(j)
}

/// Numerical rank of `j` after scaling each column to unit norm.
pub fn column_scaled_rank(j: &DMatrix<f64>, tolerance: f64) -> usize {
    let mut scaled = j.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tolerance * max).count()
}

/// Minimizes `Σ r_i(x)²`. `residuals` returns `None` for inadmissible
/// parameters, which rejects the trial step.
pub fn minimize<F>(residuals: F, x0: &[f64], cfg: &LmConfig) -> LmOutcome
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let mut x = x0.to_vec();
    let mut r = match eval(&residuals, &x) {
        Some(r) => r,
        None => {
            return LmOutcome {
                params: x,
                objective: f64::INFINITY,
                iterations: 0,
                converged: false,
                history: vec![f64::INFINITY],
            }
        }
    };
    let mut obj = objective(&r);
    let mut history = vec![obj];
    let mut lambda = cfg.initial_damping;
    let mut iterations = 0;
    let n = x.len();

    if obj <= cfg.absolute_tolerance {
        return LmOutcome {
            params: x,
            objective: obj,
            iterations,
            converged: true,
            history,
        };
    }

    while iterations < cfg.max_iterations {
        let Some(j) = jacobian(&residuals, &x, cfg.jacobian_step) else {
            break;
        };
        let rv = DVector::from_column_slice(&r);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * rv;

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some(tr) = eval(&residuals, &trial) {
                let tobj = objective(&tr);
                if tobj < obj {
                    let rel = (obj - tobj) / obj;
                    x = trial;
                    r = tr;
                    obj = tobj;
                    history.push(obj);
                    iterations += 1;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if rel < cfg.relative_tolerance || obj <= cfg.absolute_tolerance {
                        return LmOutcome {
                            params: x,
                            objective: obj,
                            iterations,
                            converged: true,
                            history,
                        };
                    }
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction left at working precision
            return LmOutcome {
                params: x,
                objective: obj,
                iterations,
                converged: true,
                history,
            };
        }
    }

    LmOutcome {
        params: x,
        objective: obj,
        iterations,
        converged: false,
        history,
    }
}
