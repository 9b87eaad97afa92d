//! Margins, lower-boundary atoms, exceedance identities, thresholding and
//! linear combinations.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimate::Estimate;
use crate::ext::{self, gp_tail, is_gamma_zero};
use crate::family::VectorFamily;
use crate::limits::limit_at_zero;
use crate::matrix::Matrix;
use crate::params::{GpParams, MarginalEndpoints, BOUNDARY_SCALE};
use crate::repr::{GeneratorLaw, ModelSpec, SpectralLaw, DEFAULT_POOL_SIZE};
use crate::stdf::StdfModel;

fn check_index(h: &GpParams, j: usize) -> Result<()> {
    if j >= h.dim() {
        return Err(Error::invalid("j", format!("index {j} out of range for dimension {}", h.dim())));
    }
    Ok(())
}

/// `H_j(x) = P(X_j <= x)`.
pub fn margin_cdf(h: &GpParams, j: usize, x: f64) -> Result<f64> {
    check_index(h, j)?;
    let (s, g) = (h.sigma()[j], h.gamma()[j]);
    if x.is_nan() {
        return Err(Error::Domain { coordinate: j, reason: "NaN".into() });
    }
    if g > 0.0 && !is_gamma_zero(g) && s + g * x <= 0.0 {
        if s + g * x < 0.0 {
            return Err(Error::Domain {
                coordinate: j,
                reason: format!("x = {x} is below the lower endpoint {}", -s / g),
            });
        }
        return atom_mass(h, j);
    }
    let pi = h.pi();
    if x >= 0.0 {
        return Ok(1.0 - pi[j] * gp_tail(x / s, g));
    }
    let t = gp_tail(x / s, g);
    if pi[j] * t > BOUNDARY_SCALE {
        return atom_mass(h, j);
    }
    let mut y = pi.to_vec();
    y[j] = pi[j] * t;
    Ok((h.ell().eval(&y)? - pi[j] * t).clamp(0.0, 1.0))
}

/// Ways of computing the atom `H_j({eta_j})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomRoute {
    /// `lim (l(eps pi_{-j}, pi_j) - pi_j) / eps`.
    Limit,
    /// `sum_{k != j} pi_k d_k l(pi_j e_j)`.
    Gradient,
}

/// Atom by the epsilon-scaling limit; works for every stdf.
///
/// A sample D-norm is piecewise linear along the ray, so the quotient is
/// evaluated once below its last breakpoint, where it equals the limit.
pub fn atom_mass_limit(h: &GpParams, j: usize) -> Result<f64> {
    check_index(h, j)?;
    let pi = h.pi();
    if let StdfModel::DNormMonteCarlo(sample) = h.ell() {
        let last = sample.last_breakpoint(pi, j);
        let eps = if last.is_finite() { 0.5 * last.min(1.0) } else { 1.0 };
        return Ok(sample.difference_quotient(pi, j, eps).clamp(0.0, 1.0));
    }
    let mut y = vec![0.0; pi.len()];
    let v = limit_at_zero("atom mass limit", |eps| {
        for (k, yk) in y.iter_mut().enumerate() {
            *yk = if k == j { pi[k] } else { eps * pi[k] };
        }
        (h.ell().eval(&y).unwrap_or(f64::NAN) - pi[j]) / eps
    })?;
    Ok(v.clamp(0.0, 1.0))
}

/// Atom from the gradient of `l` at `pi_j e_j`; `None` without a closed form.
pub fn atom_mass_gradient(h: &GpParams, j: usize) -> Result<Option<f64>> {
    check_index(h, j)?;
    let pi = h.pi();
    let mut y = vec![0.0; pi.len()];
    y[j] = pi[j];
    Ok(h.ell().gradient(&y)?.map(|grad| {
        grad.iter()
            .zip(pi)
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, (g, p))| g * p)
            .sum()
    }))
}

/// Atom as `P(S_j = -inf)` under the spectral law.
pub fn atom_mass_generator(s: &SpectralLaw, j: usize, n_mc: usize, seed: u64) -> Result<Estimate> {
    if j >= s.dim() {
        return Err(Error::invalid("j", format!("index {j} out of range for dimension {}", s.dim())));
    }
    Ok(s.atom_probs(n_mc, seed)?[j])
}

/// `H_j({eta_j})`, by the gradient when available and the limit otherwise.
pub fn atom_mass(h: &GpParams, j: usize) -> Result<f64> {
    match atom_mass_gradient(h, j)? {
        Some(v) => Ok(v),
        None => atom_mass_limit(h, j),
    }
}

pub fn lower_endpoints(h: &GpParams) -> MarginalEndpoints {
    h.lower_endpoints()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceProbs {
    /// `P(X not <= x)`.
    pub any: f64,
    /// `P(X > x)` in every coordinate.
    pub all: f64,
}

fn check_nonneg(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !(*v >= 0.0)) {
        Some(index) => Err(Error::NegativeArgument { index, value: x[index] }),
        None => Ok(()),
    }
}

/// `any = l(y)`, `all = R(y)` at the marginal survivals `y_j = P(X_j > x_j)`.
pub fn exceedance_probs(h: &GpParams, x: &[f64]) -> Result<ExceedanceProbs> {
    check_dim(h.dim(), x.len())?;
    check_nonneg(x)?;
    let y: Vec<f64> = (0..h.dim()).map(|j| h.marginal_survival(j, x[j])).collect();
    // l(pi) = 1 holds by construction; avoid the last-bit rounding of l
    let at_zero = x.iter().all(|v| *v == 0.0);
    Ok(ExceedanceProbs {
        any: if at_zero { 1.0 } else { h.ell().eval(&y)? },
        all: h.ell().tail_copula(&y)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseRow {
    pub p: f64,
    /// Fraction of rows with some `P(X_j > x_j) < p` under the model margins.
    pub empirical: f64,
    pub se: f64,
    /// `p l(1, ..., 1)`.
    pub predicted: f64,
    /// `empirical / p`, flat at `l(1, ..., 1)` under the model.
    pub ratio: f64,
}

/// The exceedance constancy table: for `p <= min pi_j`,
/// `P(exists j: P(X_j > x)|_{x = X_j} < p) = p l(1, ..., 1)`.
pub fn diagnose(data: &Matrix, h: &GpParams, ps: &[f64]) -> Result<Vec<DiagnoseRow>> {
    check_dim(h.dim(), data.ncols())?;
    let n = data.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("no rows to diagnose".into()));
    }
    let min_pi = ext::min(h.pi());
    let ones = vec![1.0; h.dim()];
    let extremal = h.ell().eval(&ones)?;
    ps.iter()
        .map(|&p| {
            if !(p > 0.0 && p <= min_pi) {
                return Err(Error::invalid("p", format!("{p} is outside (0, min pi = {min_pi}]")));
            }
            let hits = data
                .rows()
                .filter(|row| row.iter().enumerate().any(|(j, &x)| x > 0.0 && h.marginal_survival(j, x) < p))
                .count();
            let q = hits as f64 / n as f64;
            Ok(DiagnoseRow {
                p,
                empirical: q,
                se: (q * (1.0 - q) / n as f64).sqrt(),
                predicted: p * extremal,
                ratio: q / p,
            })
        })
        .collect()
}

/// Law of `X_J - u` given `X_J not <= u`, which is again GP.
pub fn conditional_excess(h: &GpParams, subset: &[usize], u: &[f64]) -> Result<GpParams> {
    check_dim(subset.len(), u.len())?;
    let ell = h.ell().marginal(subset)?;
    if let Some(k) = u.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("u", format!("threshold {} must be finite and nonnegative", u[k])));
    }
    let k = subset.len();
    let mut sigma = Vec::with_capacity(k);
    let mut gamma = Vec::with_capacity(k);
    let mut tau = Vec::with_capacity(k);
    for (&j, &uj) in subset.iter().zip(u) {
        let t = h.marginal_survival(j, uj);
        if !(t > 0.0) {
            return Err(Error::Precondition(format!("P(X_{j} > {uj}) = 0")));
        }
        sigma.push(h.sigma()[j] + h.gamma()[j] * uj);
        gamma.push(h.gamma()[j]);
        tau.push(t);
    }
    GpParams::from_tau(sigma, gamma, tau, ell)
}

/// `AX` for a GP vector `X` with common shape, through a spectral sample.
#[derive(Debug, Clone)]
pub struct LinearCombination {
    /// `A sigma`, the scales of the combined vector.
    pub scale: Vec<f64>,
    pub gamma: f64,
    /// Draws of `U` (one row per spectral draw, one column per row of `A`).
    pub u: Matrix,
}

/// Builds `U_i = log(sum_j p_ij e^(gamma S_j)) / gamma` (or `sum_j p_ij S_j`
/// when `gamma = 0`) with `p_ij = a_ij sigma_j / (A_i sigma)` from `n_mc`
/// spectral draws.
pub fn linear_combination(
    sigma: &[f64],
    gamma: &[f64],
    s: &SpectralLaw,
    a: &Matrix,
    n_mc: usize,
    seed: u64,
) -> Result<LinearCombination> {
    let d = s.dim();
    check_dim(d, sigma.len())?;
    check_dim(d, gamma.len())?;
    check_dim(d, a.ncols())?;
    if a.nrows() == 0 {
        return Err(Error::invalid("A", "needs at least one row"));
    }
    let g = gamma[0];
    if gamma.iter().any(|v| *v != g) {
        return Err(Error::Unsupported("linear combinations need a common shape".into()));
    }
    if let Some(v) = a.as_slice().iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("A", format!("entry {v} is negative or not finite")));
    }
    let m = a.nrows();
    let mut scale = Vec::with_capacity(m);
    let mut p = Matrix::zeros(m, d);
    for i in 0..m {
        let total: f64 = a.row(i).iter().zip(sigma).map(|(x, y)| x * y).sum();
        if !(total > 0.0) {
            return Err(Error::invalid("A", format!("row {} has A_i sigma = 0", i + 1)));
        }
        scale.push(total);
        for (pij, (aij, sj)) in p.row_mut(i).iter_mut().zip(a.row(i).iter().zip(sigma)) {
            *pij = aij * sj / total;
        }
    }
    let spectral = s.sample(n_mc, seed)?.values;
    let mut u = Matrix::zeros(n_mc, m);
    let zero = is_gamma_zero(g);
    for (srow, urow) in spectral.rows().zip(u.row_mut_iter()) {
        for (i, ui) in urow.iter_mut().enumerate() {
            let pi = p.row(i);
            *ui = if zero {
                ext::weighted_sum(pi, srow)
            } else {
                // terms with p_ij = 0 drop out, so -inf never meets a zero weight
                let sum: f64 = pi
                    .iter()
                    .zip(srow)
                    .filter(|(c, _)| **c > 0.0)
                    .map(|(c, v)| c * (g * v).exp())
                    .sum();
                sum.ln() / g
            };
        }
    }
    for i in 0..m {
        if u.column(i).all(ext::is_atom) {
            return Err(Error::Precondition(format!("P(A_{} X > 0) is zero on the spectral sample", i + 1)));
        }
    }
    Ok(LinearCombination { scale, gamma: g, u })
}

impl LinearCombination {
    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// `P(AX not <= x) = E[1 ^ max_i a_i(x_i) e^U_i]` for `x >= 0`.
    pub fn survival(&self, x: &[f64]) -> Result<Estimate> {
        check_dim(self.dim(), x.len())?;
        check_nonneg(x)?;
        let tails: Vec<f64> = x.iter().zip(&self.scale).map(|(xi, s)| gp_tail(xi / s, self.gamma)).collect();
        Ok(Estimate::mean(self.u.rows().map(|row| {
            row.iter()
                .zip(&tails)
                .map(|(ui, t)| if *t == 0.0 { 0.0 } else { t * ui.exp() })
                .fold(0.0, f64::max)
                .min(1.0)
        })))
    }

    /// The U-kind generator law of `AX` given `AX not <= 0`.
    pub fn conditional_law(&self) -> GeneratorLaw {
        GeneratorLaw::U { family: self.empirical_u() }
    }

    /// `GPU(A sigma, gamma, law(U))` as a simulatable model.
    pub fn conditional_model(&self) -> ModelSpec {
        ModelSpec::Spectral {
            sigma: self.scale.clone(),
            gamma: vec![self.gamma; self.dim()],
            spectral: SpectralLaw::FromU {
                family: self.empirical_u(),
                pool_size: DEFAULT_POOL_SIZE,
            },
        }
    }

    fn empirical_u(&self) -> VectorFamily {
        VectorFamily::Empirical { rows: self.u.rows().map(<[f64]>::to_vec).collect() }
    }
}
