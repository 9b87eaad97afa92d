//! Parametrizations of multivariate generalized Pareto laws.
//!
//! A GP law is `GP(sigma, gamma, pi, l)` with marginal scales `sigma > 0`,
//! shapes `gamma`, exceedance probabilities `pi_j = P(X_j > 0)` and a stdf `l`
//! with `l(pi) = 1`. The alternative `tau` parametrization drops the
//! constraint: `pi = tau / l(tau)`, with `tau` identified only up to scale and
//! stored normalized to `sum(tau) = d`.
//!
//! The cdf is
//!
//! ```text
//! H(x) = l(pi a(x ^ 0)) - l(pi a(x)),   a_j(x) = (1 + gamma_j x_j / sigma_j)^(-1/gamma_j)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::ext::{self, box_cox, box_cox_inv, gp_tail, is_gamma_zero};
use crate::limits::limit_at_zero;
use crate::stdf::StdfModel;

/// Tolerance on the constraint `l(pi) = 1` and on `pi = tau / l(tau)`.
pub const PI_CONSTRAINT_TOL: f64 = 1e-10;

/// Scaled tails `pi_j a_j(x_j)` above this are treated as the lower boundary.
pub const BOUNDARY_SCALE: f64 = 1e8;

/// Multivariate GEV parameters `(mu, gamma, alpha, l)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub ell: StdfModel,
}

impl GevParams {
    pub fn new(mu: Vec<f64>, gamma: Vec<f64>, alpha: Vec<f64>, ell: StdfModel) -> Result<Self> {
        let g = Self { mu, gamma, alpha, ell };
        g.validate()?;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `sigma = alpha - gamma mu`, common to the whole orbit `G^t`.
    pub fn sigma(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.gamma)
            .zip(&self.mu)
            .map(|((a, g), m)| a - g * m)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        check_dim(d, self.gamma.len())?;
        check_dim(d, self.alpha.len())?;
        check_dim(d, self.ell.dim())?;
        if let Some(j) = self.alpha.iter().position(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid(format!("alpha[{j}]"), format!("{} is not positive", self.alpha[j])));
        }
        if let Some(j) = self.mu.iter().chain(&self.gamma).position(|v| !v.is_finite()) {
            return Err(Error::invalid("mu/gamma", format!("entry {j} is not finite")));
        }
        let bad: Vec<usize> = self
            .sigma()
            .iter()
            .enumerate()
            .filter(|(_, s)| !(**s > 0.0))
            .map(|(j, _)| j)
            .collect();
        if !bad.is_empty() {
            return Err(Error::invalid(
                "sigma = alpha - gamma * mu",
                format!("nonpositive at coordinates {bad:?} (need 0 < G_j(0) < 1)"),
            ));
        }
        Ok(())
    }

    /// The GEV law of `G^t`: `mu(t) = mu + alpha (t^gamma - 1) / gamma`,
    /// `alpha(t) = t^gamma alpha`.
    pub fn orbit(&self, t: f64) -> Result<GevParams> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("{t} is not positive")));
        }
        let log_t = t.ln();
        let mut mu = Vec::with_capacity(self.dim());
        let mut alpha = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let (m, a, g) = (self.mu[j], self.alpha[j], self.gamma[j]);
            mu.push(m + a * box_cox_inv(log_t, g));
            alpha.push(if is_gamma_zero(g) { a } else { (g * log_t).exp() * a });
        }
        Ok(GevParams {
            mu,
            gamma: self.gamma.clone(),
            alpha,
            ell: self.ell.clone(),
        })
    }

    /// The GP law `GP(G)` generated by this GEV law.
    pub fn to_gp(&self) -> Result<GpParams> {
        self.validate()?;
        let sigma = self.sigma();
        // tau_j = -log G_j(0) = (1 - gamma mu / alpha)^(-1/gamma)
        let tau: Vec<f64> = (0..self.dim())
            .map(|j| gp_tail(-self.mu[j] / self.alpha[j], self.gamma[j]))
            .collect();
        GpParams::from_tau(sigma, self.gamma.clone(), tau, self.ell.clone())
    }
}

/// Lower endpoints `eta_j = -sigma_j / gamma_j` (`gamma_j > 0`) or `-inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEndpoints {
    #[serde(with = "ext::serde_vec")]
    pub eta: Vec<f64>,
}

/// A multivariate GP law `GP(sigma, gamma, pi, l)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GpParamsRepr", into = "GpParamsRepr")]
pub struct GpParams {
    sigma: Vec<f64>,
    gamma: Vec<f64>,
    pi: Vec<f64>,
    tau: Vec<f64>,
    ell: StdfModel,
}

#[derive(Serialize, Deserialize)]
struct GpParamsRepr {
    sigma: Vec<f64>,
    gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<Vec<f64>>,
    ell: StdfModel,
}

impl From<GpParams> for GpParamsRepr {
    fn from(h: GpParams) -> Self {
        Self {
            sigma: h.sigma,
            gamma: h.gamma,
            pi: Some(h.pi),
            tau: Some(h.tau),
            ell: h.ell,
        }
    }
}

impl TryFrom<GpParamsRepr> for GpParams {
    type Error = Error;

    fn try_from(r: GpParamsRepr) -> Result<Self> {
        match (r.pi, r.tau) {
            (Some(pi), _) => GpParams::new(r.sigma, r.gamma, pi, r.ell),
            (None, Some(tau)) => GpParams::from_tau(r.sigma, r.gamma, tau, r.ell),
            (None, None) => Err(Error::invalid("pi/tau", "one of them is required")),
        }
    }
}

fn check_margins(sigma: &[f64], gamma: &[f64], ell: &StdfModel) -> Result<()> {
    let d = sigma.len();
    if d == 0 {
        return Err(Error::invalid("sigma", "empty"));
    }
    check_dim(d, gamma.len())?;
    check_dim(d, ell.dim())?;
    if let Some(j) = sigma.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::invalid(format!("sigma[{j}]"), format!("{} is not positive", sigma[j])));
    }
    if let Some(j) = gamma.iter().position(|g| !g.is_finite()) {
        return Err(Error::invalid(format!("gamma[{j}]"), "not finite"));
    }
    Ok(())
}

fn normalized_tau(pi: &[f64]) -> Vec<f64> {
    let d = pi.len() as f64;
    let total: f64 = pi.iter().sum();
    pi.iter().map(|p| d * p / total).collect()
}

impl GpParams {
    /// Builds `GP(sigma, gamma, pi, l)`; `l(pi) = 1` is checked (to
    /// [`PI_CONSTRAINT_TOL`], widened by four standard errors for Monte Carlo
    /// D-norms).
    pub fn new(sigma: Vec<f64>, gamma: Vec<f64>, pi: Vec<f64>, ell: StdfModel) -> Result<Self> {
        check_margins(&sigma, &gamma, &ell)?;
        check_dim(sigma.len(), pi.len())?;
        if let Some(j) = pi.iter().position(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::invalid(format!("pi[{j}]"), format!("{} is outside (0, 1]", pi[j])));
        }
        let est = ell.eval_estimate(&pi)?;
        if (est.value - 1.0).abs() > PI_CONSTRAINT_TOL + 4.0 * est.se {
            return Err(Error::invalid("pi", format!("l(pi) = {} differs from 1", est.value)));
        }
        let tau = normalized_tau(&pi);
        Ok(Self { sigma, gamma, pi, tau, ell })
    }

    /// Builds `GP(sigma, gamma, tau, l)` with `pi = tau / l(tau)`.
    pub fn from_tau(sigma: Vec<f64>, gamma: Vec<f64>, tau: Vec<f64>, ell: StdfModel) -> Result<Self> {
        check_margins(&sigma, &gamma, &ell)?;
        check_dim(sigma.len(), tau.len())?;
        if let Some(j) = tau.iter().position(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::invalid(format!("tau[{j}]"), format!("{} is not positive", tau[j])));
        }
        let norm = ell.eval(&tau)?;
        let pi: Vec<f64> = tau.iter().map(|t| (t / norm).min(1.0)).collect();
        let tau = normalized_tau(&tau);
        Ok(Self { sigma, gamma, pi, tau, ell })
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// `tau`, normalized to sum to `d`.
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn ell(&self) -> &StdfModel {
        &self.ell
    }

    pub fn lower_endpoints(&self) -> MarginalEndpoints {
        MarginalEndpoints {
            eta: self
                .sigma
                .iter()
                .zip(&self.gamma)
                .map(|(s, g)| if *g > 0.0 && !is_gamma_zero(*g) { -s / g } else { f64::NEG_INFINITY })
                .collect(),
        }
    }

    /// `(1 + gamma_j x / sigma_j)^(-1/gamma_j)`.
    pub fn scaled_tail(&self, j: usize, x: f64) -> f64 {
        gp_tail(x / self.sigma[j], self.gamma[j])
    }

    /// `P(X_j > x)` for `x >= 0`.
    pub fn marginal_survival(&self, j: usize, x: f64) -> f64 {
        self.pi[j] * self.scaled_tail(j, x)
    }

    /// Fails if some `x_j` lies strictly below the lower support boundary
    /// (`sigma_j + gamma_j x_j < 0`) or is NaN.
    pub fn check_support(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        for (j, &xj) in x.iter().enumerate() {
            if xj.is_nan() {
                return Err(Error::Domain {
                    coordinate: j,
                    reason: "NaN".into(),
                });
            }
            let g = self.gamma[j];
            if g > 0.0 && !is_gamma_zero(g) && self.sigma[j] + g * xj < 0.0 {
                return Err(Error::Domain {
                    coordinate: j,
                    reason: format!("x = {xj} is below the lower endpoint {}", -self.sigma[j] / g),
                });
            }
        }
        Ok(())
    }

    /// The GP cdf `H(x)`.
    ///
    /// Coordinates exactly on the lower boundary are evaluated by continuity
    /// from the right. Coordinates beyond the upper endpoint of a negative
    /// shape contribute a zero tail.
    pub fn cdf(&self, x: &[f64]) -> Result<f64> {
        self.check_support(x)?;
        let d = self.dim();
        let mut lower = vec![0.0; d];
        let mut upper = vec![0.0; d];
        let mut boundary = vec![false; d];
        for j in 0..d {
            lower[j] = self.pi[j] * self.scaled_tail(j, x[j].min(0.0));
            upper[j] = self.pi[j] * self.scaled_tail(j, x[j]);
            // past this scale l(lower) - l(upper) cancels to noise; the limit
            // route is accurate to about 1 / BOUNDARY_SCALE instead
            boundary[j] = upper[j] > BOUNDARY_SCALE;
        }
        let value = if boundary.iter().any(|b| *b) {
            let (mut lo, mut up) = (vec![0.0; d], vec![0.0; d]);
            limit_at_zero("cdf at the lower boundary", |eps| {
                for j in 0..d {
                    if boundary[j] {
                        lo[j] = self.pi[j];
                        up[j] = self.pi[j];
                    } else {
                        lo[j] = eps * lower[j];
                        up[j] = eps * upper[j];
                    }
                }
                (self.ell.value(&lo) - self.ell.value(&up)) / eps
            })?
        } else {
            self.ell.value(&lower) - self.ell.value(&upper)
        };
        Ok(value.clamp(0.0, 1.0))
    }

    /// `P(X not <= x) = l(P(X_1 > x_1), ..., P(X_d > x_d))` for `x >= 0`.
    pub fn joint_survival(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        if let Some(j) = x.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::Precondition(format!(
                "joint survival needs x >= 0, coordinate {j} is {}",
                x[j]
            )));
        }
        let y: Vec<f64> = (0..self.dim()).map(|j| self.marginal_survival(j, x[j])).collect();
        self.ell.eval(&y)
    }

    /// `z = log(1 + gamma x / sigma) / gamma`; lower-boundary points map to `-inf`.
    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        standardize_with(&self.sigma, &self.gamma, x)
    }

    /// `x = sigma (exp(gamma z) - 1) / gamma`.
    pub fn unstandardize(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), z.len())?;
        Ok(unstandardize_with(&self.sigma, &self.gamma, z))
    }
}

pub fn standardize_with(sigma: &[f64], gamma: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    x.iter()
        .enumerate()
        .map(|(j, &xj)| {
            if xj == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            let z = box_cox(xj / sigma[j], gamma[j]);
            if z.is_nan() {
                Err(Error::Domain {
                    coordinate: j,
                    reason: format!("sigma + gamma x = {} is negative", sigma[j] + gamma[j] * xj),
                })
            } else {
                Ok(z)
            }
        })
        .collect()
}

pub fn unstandardize_with(sigma: &[f64], gamma: &[f64], z: &[f64]) -> Vec<f64> {
    z.iter()
        .enumerate()
        .map(|(j, &zj)| sigma[j] * box_cox_inv(zj, gamma[j]))
        .collect()
}

/// Cdf of the standardized law `GP(1, 0, pi, l)`:
/// `l(pi exp(-(z ^ 0))) - l(pi exp(-z))`.
pub fn std_cdf(pi: &[f64], ell: &StdfModel, z: &[f64]) -> Result<f64> {
    let d = ell.dim();
    let ones = vec![1.0; d];
    let h = GpParams::new(ones, vec![0.0; d], pi.to_vec(), ell.clone())?;
    h.cdf(z)
}
