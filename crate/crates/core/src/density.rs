//! Lebesgue densities of GP laws.
//!
//! Densities of the standardized vector `Z` come from the T, U, R or S
//! representation; [`density_general`] maps them to `X = sigma (e^(gamma Z) - 1) / gamma`.
//! All of them vanish on `{z <= 0}`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimate::Estimate;
use crate::ext;
use crate::family::VectorFamily;
use crate::params::{standardize_with, GpParams};
use crate::quad::{integrate_exp_real_line, QuadConfig};
use crate::rng::{stream, stream_rng};
use crate::stdf::StdfModel;

fn in_exceedance_region(z: &[f64]) -> bool {
    z.iter().any(|v| *v > 0.0)
}

fn check_finite(z: &[f64]) -> Result<()> {
    if let Some(j) = z.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain {
            coordinate: j,
            reason: format!("density needs a finite point, got {}", z[j]),
        });
    }
    Ok(())
}

/// `h(z) = 1{z not <= 0} e^(-max z) int_R f_T(z + r) dr`, with `log_f_t` the
/// log-density of `T`.
pub fn density_std_t<F: Fn(&[f64]) -> f64>(log_f_t: F, z: &[f64], cfg: &QuadConfig) -> Result<f64> {
    check_finite(z)?;
    if !in_exceedance_region(z) {
        return Ok(0.0);
    }
    let integral = integrate_exp_real_line(
        |r| {
            let t: Vec<f64> = z.iter().map(|zj| zj + r).collect();
            log_f_t(&t)
        },
        cfg,
    )?;
    Ok((-ext::max(z)).exp() * integral.value)
}

/// `h(z) = 1{z not <= 0} norm^-1 int_R e^s f_U(z + s) ds`, `norm = E[e^max(U)]`.
pub fn density_std_u<F: Fn(&[f64]) -> f64>(log_f_u: F, norm: f64, z: &[f64], cfg: &QuadConfig) -> Result<f64> {
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("norm", format!("{norm} is not positive and finite")));
    }
    check_finite(z)?;
    if !in_exceedance_region(z) {
        return Ok(0.0);
    }
    let integral = integrate_exp_real_line(
        |s| {
            let b: Vec<f64> = z.iter().map(|zj| zj + s).collect();
            s + log_f_u(&b)
        },
        cfg,
    )?;
    Ok(integral.value / norm)
}

/// `h(x) = 1{x not <= 0} norm^-1 int_0^inf f_R(t^gamma (x + sigma/gamma)) t^(sum gamma) dt`
/// with `norm = E[max_j (gamma_j R_j / sigma_j)^(1/gamma_j)]`, integrated in `log t`.
pub fn density_r<F: Fn(&[f64]) -> f64>(
    log_f_r: F,
    sigma: &[f64],
    gamma: &[f64],
    norm: f64,
    x: &[f64],
    cfg: &QuadConfig,
) -> Result<f64> {
    let d = x.len();
    check_dim(d, sigma.len())?;
    check_dim(d, gamma.len())?;
    if sigma.iter().chain(gamma).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("r_density", "sigma and gamma must be positive"));
    }
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("norm", format!("{norm} is not positive and finite")));
    }
    check_finite(x)?;
    for j in 0..d {
        if !(sigma[j] + gamma[j] * x[j] > 0.0) {
            return Err(Error::Domain { coordinate: j, reason: "sigma + gamma x is not positive".into() });
        }
    }
    if !in_exceedance_region(x) {
        return Ok(0.0);
    }
    let c: Vec<f64> = (0..d).map(|j| x[j] + sigma[j] / gamma[j]).collect();
    let power: f64 = gamma.iter().sum::<f64>() + 1.0;
    let integral = integrate_exp_real_line(
        |s| {
            let r: Vec<f64> = (0..d).map(|j| (gamma[j] * s).exp() * c[j]).collect();
            log_f_r(&r) + power * s
        },
        cfg,
    )?;
    Ok(integral.value / norm)
}

/// `h(z) = 1{z not <= 0} f_S(z - max z) e^(-max z)` for a face density `f_S`.
pub fn density_std_s<F: Fn(&[f64]) -> f64>(face_density: F, z: &[f64]) -> f64 {
    if !in_exceedance_region(z) || z.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    let top = ext::max(z);
    let s: Vec<f64> = z.iter().map(|v| v - top).collect();
    face_density(&s) * (-top).exp()
}

/// `h_X(x) = h_Z(log(1 + gamma x / sigma) / gamma) prod 1 / (sigma_j + gamma_j x_j)`.
pub fn density_general<F: Fn(&[f64]) -> Result<f64>>(
    sigma: &[f64],
    gamma: &[f64],
    std_density: F,
    x: &[f64],
) -> Result<f64> {
    check_dim(sigma.len(), x.len())?;
    check_dim(gamma.len(), x.len())?;
    let mut jac = 1.0;
    for j in 0..x.len() {
        let scale = sigma[j] + gamma[j] * x[j];
        if !(scale > 0.0) {
            return Err(Error::Domain {
                coordinate: j,
                reason: format!("sigma + gamma x = {scale} is not positive"),
            });
        }
        jac /= scale;
    }
    let z = standardize_with(sigma, gamma, x)?;
    Ok(std_density(&z)? * jac)
}

/// Log-density of the standardized GP with logistic stdf (`theta < 1`):
/// `h(z) = theta prod_{k<d}(k - theta) theta^-d s^(theta-d) prod y_j^(1/theta)`
/// with `y = pi e^-z` and `s = sum y^(1/theta)`.
pub fn log_density_std_logistic(pi: &[f64], theta: f64, z: &[f64]) -> f64 {
    if !in_exceedance_region(z) || z.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let d = z.len();
    let inv = 1.0 / theta;
    let logs: Vec<f64> = pi.iter().zip(z).map(|(p, zj)| inv * (p.ln() - zj)).collect();
    let top = ext::max(&logs);
    let log_s = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    let log_c: f64 = theta.ln() - d as f64 * theta.ln() + (1..d).map(|k| (k as f64 - theta).ln()).sum::<f64>();
    log_c + (theta - d as f64) * log_s + logs.iter().sum::<f64>()
}

/// Density of a GP law with absolutely continuous closed-form stdf.
pub fn gp_density(h: &GpParams, x: &[f64]) -> Result<f64> {
    let theta = match h.ell() {
        StdfModel::Logistic { theta, .. } if *theta < 1.0 => *theta,
        StdfModel::Independence { dim: 1 } | StdfModel::CompleteDependence { dim: 1 } | StdfModel::Logistic { dim: 1, .. } => 0.5,
        _ => {
            return Err(Error::Unsupported(
                "closed-form density needs a logistic stdf with theta < 1 (other closed forms are singular)".into(),
            ))
        }
    };
    let pi = h.pi();
    density_general(h.sigma(), h.gamma(), |z| Ok(log_density_std_logistic(pi, theta, z).exp()), x)
}

/// Which representation a [`DensityModel`] integrates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityKind {
    T { family: VectorFamily },
    U { family: VectorFamily, norm: Estimate },
    /// Evaluated at `x` on the original scale.
    R {
        family: VectorFamily,
        sigma: Vec<f64>,
        gamma: Vec<f64>,
        norm: Estimate,
    },
    /// The family must have a face density.
    S { family: VectorFamily },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub kind: DensityKind,
    #[serde(default)]
    pub quad: QuadConfig,
}

/// `E[e^max(U)]` by Monte Carlo.
pub fn u_norm(family: &VectorFamily, n_mc: usize, seed: u64) -> Estimate {
    let mut rng = stream_rng(seed, stream::POOL);
    let mut buf = vec![0.0; family.dim()];
    Estimate::mean((0..n_mc).map(|_| {
        family.sample(&mut rng, &mut buf);
        ext::max(&buf).exp()
    }))
}

/// `E[max_j (gamma_j R_j / sigma_j)^(1/gamma_j)]` by Monte Carlo.
pub fn r_norm(family: &VectorFamily, sigma: &[f64], gamma: &[f64], n_mc: usize, seed: u64) -> Estimate {
    let mut rng = stream_rng(seed, stream::POOL);
    let mut buf = vec![0.0; family.dim()];
    Estimate::mean((0..n_mc).map(|_| {
        family.sample(&mut rng, &mut buf);
        (0..buf.len())
            .map(|j| (gamma[j] * buf[j] / sigma[j]).powf(1.0 / gamma[j]))
            .fold(0.0, f64::max)
    }))
}

impl DensityModel {
    pub fn new(kind: DensityKind) -> Self {
        Self { kind, quad: QuadConfig::default() }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DensityKind::T { family } | DensityKind::U { family, .. } | DensityKind::R { family, .. } | DensityKind::S { family } => {
                family.dim()
            }
        }
    }

    /// Density at `z` (standardized scale; original scale for R-kind).
    pub fn density(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.dim(), z.len())?;
        let no_density = || Error::Unsupported("the generator family has no Lebesgue density".into());
        match &self.kind {
            DensityKind::T { family } => {
                family.log_density(z).ok_or_else(no_density)?;
                density_std_t(|t| family.log_density(t).unwrap_or(f64::NEG_INFINITY), z, &self.quad)
            }
            DensityKind::U { family, norm } => {
                family.log_density(z).ok_or_else(no_density)?;
                density_std_u(|u| family.log_density(u).unwrap_or(f64::NEG_INFINITY), norm.value, z, &self.quad)
            }
            DensityKind::R { family, sigma, gamma, norm } => {
                family.log_density(z).ok_or_else(no_density)?;
                density_r(
                    |r| family.log_density(r).unwrap_or(f64::NEG_INFINITY),
                    sigma,
                    gamma,
                    norm.value,
                    z,
                    &self.quad,
                )
            }
            DensityKind::S { family } => {
                family
                    .face_density(&vec![0.0; z.len()])
                    .ok_or_else(|| Error::Unsupported("the spectral family has no face density".into()))?;
                Ok(density_std_s(|s| family.face_density(s).unwrap_or(0.0), z))
            }
        }
    }

    /// Whether [`DensityModel::density`] takes standardized arguments.
    pub fn is_standardized(&self) -> bool {
        !matches!(self.kind, DensityKind::R { .. })
    }
}
