//! Maximum likelihood fitting of parametric GP families.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::density::log_density_std_logistic;
use crate::error::{check_dim, Error, Result};
use crate::ext::box_cox;
use crate::matrix::Matrix;
use crate::optim::{hessian, invert, minimize, NelderMeadConfig};
use crate::params::GpParams;
use crate::stdf::StdfModel;

/// Parametric families with a closed-form density.
///
/// Natural parameter order: `UnivariateGp` is `[sigma, gamma]`;
/// `LogisticGp` is `[sigma_1..d, gamma_1..d, theta, tau_2..d]` with `tau_1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FitFamily {
    UnivariateGp,
    LogisticGp { dim: usize },
}

impl FitFamily {
    pub fn dim(&self) -> usize {
        match self {
            Self::UnivariateGp => 1,
            Self::LogisticGp { dim } => *dim,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Self::UnivariateGp => 2,
            Self::LogisticGp { dim } => 3 * dim,
        }
    }

    pub fn names(&self) -> Vec<String> {
        match self {
            Self::UnivariateGp => vec!["sigma".into(), "gamma".into()],
            Self::LogisticGp { dim } => {
                let mut v: Vec<String> = (1..=*dim).map(|j| format!("sigma{j}")).collect();
                v.extend((1..=*dim).map(|j| format!("gamma{j}")));
                v.push("theta".into());
                v.extend((2..=*dim).map(|j| format!("tau{j}")));
                v
            }
        }
    }

    /// A neutral starting point; `gamma = 0` keeps every finite row in the support.
    pub fn default_init(&self) -> Vec<f64> {
        match self {
            Self::UnivariateGp => vec![1.0, 0.0],
            Self::LogisticGp { dim } => {
                let mut v = vec![1.0; *dim];
                v.extend(vec![0.0; *dim]);
                v.push(0.5);
                v.extend(vec![1.0; dim - 1]);
                v
            }
        }
    }

    fn to_internal(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_params(), p.len())?;
        let d = self.dim();
        let mut out = p.to_vec();
        for j in 0..d {
            if !(p[j] > 0.0) {
                return Err(Error::invalid("sigma", format!("initial value {} is not positive", p[j])));
            }
            out[j] = p[j].ln();
        }
        if let Self::LogisticGp { .. } = self {
            let theta = p[2 * d];
            if !(theta > 0.0 && theta < 1.0) {
                return Err(Error::invalid("theta", format!("initial value {theta} is outside (0, 1)")));
            }
            out[2 * d] = (theta / (1.0 - theta)).ln();
            for k in 2 * d + 1..3 * d {
                if !(p[k] > 0.0) {
                    return Err(Error::invalid("tau", format!("initial value {} is not positive", p[k])));
                }
                out[k] = p[k].ln();
            }
        }
        Ok(out)
    }

    fn to_natural(&self, q: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = q.to_vec();
        for v in out.iter_mut().take(d) {
            *v = v.exp();
        }
        if let Self::LogisticGp { .. } = self {
            out[2 * d] = 1.0 / (1.0 + (-q[2 * d]).exp());
            for v in out.iter_mut().skip(2 * d + 1) {
                *v = v.exp();
            }
        }
        out
    }

    /// GP parameters at a natural parameter vector.
    pub fn gp_params(&self, p: &[f64]) -> Result<GpParams> {
        check_dim(self.n_params(), p.len())?;
        let d = self.dim();
        let sigma = p[..d].to_vec();
        let gamma = p[d..2 * d].to_vec();
        match self {
            Self::UnivariateGp => GpParams::new(sigma, gamma, vec![1.0], StdfModel::independence(1)?),
            Self::LogisticGp { .. } => {
                let mut tau = vec![1.0];
                tau.extend_from_slice(&p[2 * d + 1..]);
                GpParams::from_tau(sigma, gamma, tau, StdfModel::logistic(d, p[2 * d])?)
            }
        }
    }

    /// Log-likelihood at natural parameters; `-inf` outside the parameter
    /// space or when a row leaves the support.
    pub fn loglik(&self, p: &[f64], data: &Matrix) -> f64 {
        let d = self.dim();
        let sigma = &p[..d];
        let gamma = &p[d..2 * d];
        if sigma.iter().any(|s| !(*s > 0.0)) || gamma.iter().any(|g| !g.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let (pi, theta) = match self {
            Self::UnivariateGp => (vec![1.0], 0.5),
            Self::LogisticGp { .. } => {
                let theta = p[2 * d];
                if !(theta > 0.0 && theta < 1.0) || p[2 * d + 1..].iter().any(|t| !(*t > 0.0)) {
                    return f64::NEG_INFINITY;
                }
                let mut tau = vec![1.0];
                tau.extend_from_slice(&p[2 * d + 1..]);
                let ell: f64 = {
                    let inv = 1.0 / theta;
                    tau.iter().map(|t| t.powf(inv)).sum::<f64>().powf(theta)
                };
                (tau.iter().map(|t| t / ell).collect(), theta)
            }
        };
        let mut z = vec![0.0; d];
        let mut total = 0.0;
        for row in data.rows() {
            let mut log_jac = 0.0;
            for j in 0..d {
                let scale = sigma[j] + gamma[j] * row[j];
                if !(scale > 0.0) {
                    return f64::NEG_INFINITY;
                }
                log_jac += scale.ln();
                z[j] = box_cox(row[j] / sigma[j], gamma[j]);
            }
            let lh = if d == 1 { pi[0].ln() - z[0] } else { log_density_std_logistic(&pi, theta, &z) };
            total += lh - log_jac;
        }
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub family: FitFamily,
    pub params: BTreeMap<String, f64>,
    pub se: BTreeMap<String, f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each optimizer (re)start.
    pub trace: Vec<f64>,
    #[serde(skip)]
    pub estimate: Vec<f64>,
    #[serde(skip)]
    pub std_errors: Vec<f64>,
}

impl FitReport {
    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::IterationCap { iterations: self.iterations, best: self.loglik })
        }
    }

    pub fn gp_params(&self) -> Result<GpParams> {
        self.family.gp_params(&self.estimate)
    }
}

fn check_data(family: &FitFamily, data: &Matrix) -> Result<()> {
    check_dim(family.dim(), data.ncols())?;
    if data.nrows() == 0 {
        return Err(Error::EmptyInput("no rows to fit".into()));
    }
    for (i, row) in data.rows().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "row {} has a non-finite value; densities exclude atoms",
                i + 1
            )));
        }
        if !row.iter().any(|v| *v > 0.0) {
            return Err(Error::Precondition(format!("row {} is not an exceedance (all coordinates <= 0)", i + 1)));
        }
    }
    Ok(())
}

/// Maximizes the log-likelihood by Nelder-Mead from `init` (natural
/// parameters); standard errors come from the observed information.
pub fn fit_mle(data: &Matrix, family: FitFamily, init: &[f64], cfg: &NelderMeadConfig) -> Result<FitReport> {
    check_data(&family, data)?;
    let q0 = family.to_internal(init)?;
    let l0 = family.loglik(init, data);
    if !l0.is_finite() {
        return Err(Error::Precondition(format!("log-likelihood is {l0} at the initial point")));
    }
    let res = minimize(|q| -family.loglik(&family.to_natural(q), data), &q0, cfg)?;
    let estimate = family.to_natural(&res.x);
    let steps: Vec<f64> = estimate.iter().map(|v| 1e-4 * v.abs().max(0.1)).collect();
    let info = hessian(|p| -family.loglik(p, data), &estimate, &steps);
    let std_errors = match invert(&info) {
        Ok(cov) => (0..estimate.len())
            .map(|i| if cov[i][i] > 0.0 { cov[i][i].sqrt() } else { f64::NAN })
            .collect(),
        Err(_) => vec![f64::NAN; estimate.len()],
    };
    let names = family.names();
    Ok(FitReport {
        family,
        params: names.iter().cloned().zip(estimate.iter().copied()).collect(),
        se: names.into_iter().zip(std_errors.iter().copied()).collect(),
        loglik: -res.f,
        iterations: res.iterations,
        converged: res.converged,
        trace: res.trace.iter().map(|f| -f).collect(),
        estimate,
        std_errors,
    })
}
