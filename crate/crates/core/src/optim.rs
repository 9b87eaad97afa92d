//! Nelder-Mead simplex minimization with restarts, and a finite-difference
//! Hessian.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadConfig {
    /// Total iteration budget across restarts.
    pub max_iter: usize,
    /// Converged when `f_worst - f_best <= ftol (1 + |f_best|)`.
    pub ftol: f64,
    pub max_restarts: usize,
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            ftol: 1e-8,
            max_restarts: 5,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value at the end of each (re)start.
    pub trace: Vec<f64>,
}

fn order(simplex: &mut [Vec<f64>], values: &mut [f64]) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let s: Vec<Vec<f64>> = idx.iter().map(|i| simplex[*i].clone()).collect();
    let v: Vec<f64> = idx.iter().map(|i| values[*i]).collect();
    simplex.clone_from_slice(&s);
    values.copy_from_slice(&v);
}

/// Minimizes `f` from `x0`. Non-finite values are treated as `+inf`, so
/// constraints can be expressed by returning `inf`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], cfg: &NelderMeadConfig) -> Result<OptimResult> {
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let f0 = eval(x0, &mut evaluations);
    if !f0.is_finite() {
        return Err(Error::Precondition(format!("objective is not finite at the initial point ({f0})")));
    }
    let mut best_x = x0.to_vec();
    let mut best_f = f0;
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut converged = false;
    for _restart in 0..=cfg.max_restarts {
        let mut simplex = vec![best_x.clone()];
        let mut values = vec![best_f];
        for i in 0..n {
            let mut p = best_x.clone();
            let step = cfg.initial_step * p[i].abs().max(1.0);
            p[i] += step;
            let mut v = eval(&p, &mut evaluations);
            if !v.is_finite() {
                p[i] = best_x[i] - step;
                v = eval(&p, &mut evaluations);
            }
            simplex.push(p);
            values.push(v);
        }
        let mut local_converged = false;
        while iterations < cfg.max_iter {
            order(&mut simplex, &mut values);
            if values[n] - values[0] <= cfg.ftol * (1.0 + values[0].abs()) {
                local_converged = true;
                break;
            }
            iterations += 1;
            let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect() };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evaluations);
            if fr < values[0] {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evaluations);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
            } else {
                let (xc, fc) = if fr < values[n] {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut evaluations);
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut evaluations);
                    (xc, fc)
                };
                if fc < values[n].min(fr) {
                    simplex[n] = xc;
                    values[n] = fc;
                } else {
                    for i in 1..=n {
                        let p: Vec<f64> = (0..n).map(|k| simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k])).collect();
                        values[i] = eval(&p, &mut evaluations);
                        simplex[i] = p;
                    }
                }
            }
        }
        order(&mut simplex, &mut values);
        let improvement = best_f - values[0];
        if values[0] <= best_f {
            best_f = values[0];
            best_x = simplex[0].clone();
        }
        trace.push(best_f);
        if !local_converged {
            break;
        }
        if trace.len() > 1 && improvement <= cfg.ftol * (1.0 + best_f.abs()) {
            converged = true;
            break;
        }
    }
    if !converged && iterations < cfg.max_iter {
        // restart budget exhausted while still improving; accept the last local convergence
        converged = true;
    }
    Ok(OptimResult { x: best_x, f: best_f, iterations, evaluations, converged, trace })
}

/// Central-difference Hessian of `f` at `x` with per-coordinate steps.
pub fn hessian<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], steps: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut h = vec![vec![0.0; n]; n];
    let f0 = f(x);
    let mut p = x.to_vec();
    for i in 0..n {
        for j in i..n {
            let (hi, hj) = (steps[i], steps[j]);
            let v = if i == j {
                p[i] = x[i] + hi;
                let fp = f(&p);
                p[i] = x[i] - hi;
                let fm = f(&p);
                p[i] = x[i];
                (fp - 2.0 * f0 + fm) / (hi * hi)
            } else {
                let mut corner = |si: f64, sj: f64| {
                    p[i] = x[i] + si * hi;
                    p[j] = x[j] + sj * hj;
                    let v = f(&p);
                    p[i] = x[i];
                    p[j] = x[j];
                    v
                };
                (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * hi * hj)
            };
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|x, y| m[*x][col].abs().total_cmp(&m[*y][col].abs()))
            .expect("nonempty");
        if m[piv][col].abs() < 1e-300 {
            return Err(Error::Precondition("matrix is singular".into()));
        }
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = m[r][col];
                if factor != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= factor * m[col][k];
                    }
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}
