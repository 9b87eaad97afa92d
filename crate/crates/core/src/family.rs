//! Built-in random-vector families used as generators of GP laws.
//!
//! A family knows how to draw a vector, and when it has one, its Lebesgue
//! density on `R^d` (or, for [`VectorFamily::UniformFaces`], its density on
//! the face set `{s : max(s) = 0}`). Coordinates may take the atom value
//! `-inf`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::ext::{self, NEG_INF};
use crate::rng::StreamRng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum VectorFamily {
    /// A fixed vector (entries may be `-inf`).
    Deterministic {
        #[serde(with = "ext::serde_vec")]
        values: Vec<f64>,
    },
    /// Independent Gumbel coordinates `loc_j + scale * G_j`.
    IidGumbel { loc: Vec<f64>, scale: f64 },
    /// Multivariate normal with a positive definite covariance.
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    /// Independent `-E_j` with `E_j` unit exponential.
    IidNegExponential { dim: usize },
    /// Independent exponentials with the given mean.
    IidExponential { dim: usize, mean: f64 },
    /// Spectral law: pick a face `j` uniformly, set `s_j = 0` and draw the
    /// other coordinates uniformly on `[-width, 0]`.
    UniformFaces { dim: usize, width: f64 },
    /// Independently replace coordinate `j` of a base draw by `-inf` with
    /// probability `atom_probs[j]`.
    WithAtoms { base: Box<VectorFamily>, atom_probs: Vec<f64> },
    /// `U = log(gamma R / sigma) / gamma` for `R` drawn from `base` (`R_j = 0`
    /// maps to `-inf`).
    FromR {
        base: Box<VectorFamily>,
        sigma: Vec<f64>,
        gamma: Vec<f64>,
    },
    /// `base + scale * G` with one standard Gumbel `G` shared by all
    /// coordinates.
    CommonShift { base: Box<VectorFamily>, scale: f64 },
    /// Componentwise `exp` of a base draw (`-inf` maps to 0).
    Exp { base: Box<VectorFamily> },
    /// Uniform draw from a list of rows.
    Empirical {
        #[serde(with = "serde_rows")]
        rows: Vec<Vec<f64>>,
    },
}

impl VectorFamily {
    pub fn dim(&self) -> usize {
        match self {
            Self::Deterministic { values } => values.len(),
            Self::IidGumbel { loc, .. } => loc.len(),
            Self::Gaussian { mean, .. } => mean.len(),
            Self::IidNegExponential { dim } | Self::IidExponential { dim, .. } | Self::UniformFaces { dim, .. } => *dim,
            Self::WithAtoms { base, .. }
            | Self::FromR { base, .. }
            | Self::CommonShift { base, .. }
            | Self::Exp { base } => base.dim(),
            Self::Empirical { rows } => rows.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::invalid("family", "dimension must be at least 1"));
        }
        match self {
            Self::Deterministic { values } => {
                if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
                    return Err(Error::invalid("values", "must lie in [-inf, inf)"));
                }
            }
            Self::IidGumbel { loc, scale } => {
                if !(*scale > 0.0) || loc.iter().any(|l| !l.is_finite()) {
                    return Err(Error::invalid("iid_gumbel", "scale must be positive and loc finite"));
                }
            }
            Self::Gaussian { mean, cov } => {
                check_dim(mean.len(), cov.len())?;
                for row in cov {
                    check_dim(mean.len(), row.len())?;
                }
                cholesky(cov)?;
            }
            Self::IidExponential { mean, .. } => {
                if !(*mean > 0.0) {
                    return Err(Error::invalid("mean", "must be positive"));
                }
            }
            Self::UniformFaces { width, .. } => {
                if !(*width > 0.0) {
                    return Err(Error::invalid("width", "must be positive"));
                }
            }
            Self::WithAtoms { base, atom_probs } => {
                base.validate()?;
                check_dim(base.dim(), atom_probs.len())?;
                if atom_probs.iter().any(|p| !(0.0..1.0).contains(p)) {
                    return Err(Error::invalid("atom_probs", "must lie in [0, 1)"));
                }
            }
            Self::FromR { base, sigma, gamma } => {
                base.validate()?;
                check_dim(base.dim(), sigma.len())?;
                check_dim(base.dim(), gamma.len())?;
                if sigma.iter().chain(gamma).any(|v| !(*v > 0.0)) {
                    return Err(Error::invalid("from_r", "sigma and gamma must be positive"));
                }
            }
            Self::CommonShift { base, scale } => {
                base.validate()?;
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid("scale", "must be positive"));
                }
            }
            Self::Exp { base } => base.validate()?,
            Self::Empirical { rows } => {
                let d = self.dim();
                for r in rows {
                    check_dim(d, r.len())?;
                }
            }
            Self::IidNegExponential { .. } => {}
        }
        Ok(())
    }

    /// Draws one vector into `out`.
    pub fn sample(&self, rng: &mut StreamRng, out: &mut [f64]) {
        match self {
            Self::Deterministic { values } => out.copy_from_slice(values),
            Self::IidGumbel { loc, scale } => {
                for (o, l) in out.iter_mut().zip(loc) {
                    let e: f64 = Exp1.sample(rng);
                    *o = l - scale * e.ln();
                }
            }
            Self::Gaussian { mean, cov } => {
                let l = cholesky(cov).expect("validated covariance");
                let d = mean.len();
                let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                for i in 0..d {
                    out[i] = mean[i] + (0..=i).map(|k| l[i * d + k] * z[k]).sum::<f64>();
                }
            }
            Self::IidNegExponential { .. } => {
                for o in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *o = -e;
                }
            }
            Self::IidExponential { mean, .. } => {
                for o in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *o = mean * e;
                }
            }
            Self::UniformFaces { dim, width } => {
                let face = rng.random_range(0..*dim);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = if j == face { 0.0 } else { -width * rng.random::<f64>() };
                }
            }
            Self::WithAtoms { base, atom_probs } => {
                base.sample(rng, out);
                for (o, p) in out.iter_mut().zip(atom_probs) {
                    if rng.random::<f64>() < *p {
                        *o = NEG_INF;
                    }
                }
            }
            Self::FromR { base, sigma, gamma } => {
                base.sample(rng, out);
                for j in 0..out.len() {
                    out[j] = r_to_u(out[j], sigma[j], gamma[j]);
                }
            }
            Self::CommonShift { base, scale } => {
                base.sample(rng, out);
                let e: f64 = Exp1.sample(rng);
                let shift = -scale * e.ln();
                for o in out.iter_mut() {
                    *o += shift;
                }
            }
            Self::Exp { base } => {
                base.sample(rng, out);
                for o in out.iter_mut() {
                    *o = o.exp();
                }
            }
            Self::Empirical { rows } => {
                let i = rng.random_range(0..rows.len());
                out.copy_from_slice(&rows[i]);
            }
        }
    }

    /// Joint Lebesgue density on `R^d`, if the family has one.
    pub fn density(&self, x: &[f64]) -> Option<f64> {
        self.log_density(x).map(f64::exp)
    }

    pub fn log_density(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim() {
            return None;
        }
        match self {
            Self::IidGumbel { loc, scale } => Some(
                x.iter()
                    .zip(loc)
                    .map(|(v, l)| {
                        let w = (v - l) / scale;
                        if w == f64::NEG_INFINITY {
                            return NEG_INF;
                        }
                        -scale.ln() - w - (-w).exp()
                    })
                    .sum(),
            ),
            Self::Gaussian { mean, cov } => {
                let l = cholesky(cov).ok()?;
                let d = mean.len();
                let mut y = vec![0.0; d];
                let mut logdet = 0.0;
                for i in 0..d {
                    let s: f64 = (0..i).map(|k| l[i * d + k] * y[k]).sum();
                    y[i] = (x[i] - mean[i] - s) / l[i * d + i];
                    logdet += l[i * d + i].ln();
                }
                Some(-0.5 * y.iter().map(|v| v * v).sum::<f64>() - logdet - d as f64 * LN_SQRT_2PI)
            }
            Self::IidNegExponential { .. } => {
                Some(x.iter().map(|v| if *v <= 0.0 { *v } else { NEG_INF }).sum())
            }
            Self::IidExponential { mean, .. } => Some(
                x.iter()
                    .map(|v| if *v >= 0.0 { -mean.ln() - v / mean } else { NEG_INF })
                    .sum(),
            ),
            Self::FromR { base, sigma, gamma } => {
                // r_j = (sigma_j / gamma_j) exp(gamma_j u_j), dr_j/du_j = sigma_j exp(gamma_j u_j)
                let r: Vec<f64> = (0..x.len()).map(|j| sigma[j] / gamma[j] * (gamma[j] * x[j]).exp()).collect();
                let log_jac: f64 = (0..x.len()).map(|j| sigma[j].ln() + gamma[j] * x[j]).sum();
                base.log_density(&r).map(|lf| lf + log_jac)
            }
            Self::Exp { base } => {
                if x.iter().any(|v| !(*v > 0.0)) {
                    return Some(NEG_INF);
                }
                let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
                base.log_density(&logs).map(|lf| lf - logs.iter().sum::<f64>())
            }
            Self::Deterministic { .. }
            | Self::UniformFaces { .. }
            | Self::WithAtoms { .. }
            | Self::CommonShift { .. }
            | Self::Empirical { .. } => None,
        }
    }

    /// Density with respect to `(d-1)`-dimensional Lebesgue measure on
    /// `{s : max(s) = 0}`, for spectral families that have one.
    pub fn face_density(&self, s: &[f64]) -> Option<f64> {
        match self {
            Self::UniformFaces { dim, width } => {
                if s.len() != *dim {
                    return None;
                }
                let on_face = ext::max(s) == 0.0 && s.iter().all(|v| *v >= -width);
                Some(if on_face {
                    1.0 / (*dim as f64 * width.powi(*dim as i32 - 1))
                } else {
                    0.0
                })
            }
            _ => None,
        }
    }

    /// Known per-coordinate probabilities of the atom `-inf`, if available.
    pub fn atom_probs(&self) -> Option<Vec<f64>> {
        match self {
            Self::Deterministic { values } => Some(values.iter().map(|v| if ext::is_atom(*v) { 1.0 } else { 0.0 }).collect()),
            Self::WithAtoms { base, atom_probs } => {
                let b = base.atom_probs()?;
                Some(b.iter().zip(atom_probs).map(|(pb, pa)| pa + (1.0 - pa) * pb).collect())
            }
            Self::FromR { base, .. } => base.zero_probs(),
            Self::CommonShift { base, .. } => base.atom_probs(),
            Self::Empirical { rows } => {
                let n = rows.len() as f64;
                let d = self.dim();
                Some(
                    (0..d)
                        .map(|j| rows.iter().filter(|r| ext::is_atom(r[j])).count() as f64 / n)
                        .collect(),
                )
            }
            _ => Some(vec![0.0; self.dim()]),
        }
    }

    /// Known per-coordinate probabilities of the value 0, for positive
    /// (R-kind) families.
    fn zero_probs(&self) -> Option<Vec<f64>> {
        match self {
            Self::Exp { base } => base.atom_probs(),
            Self::Deterministic { values } => Some(values.iter().map(|v| if *v <= 0.0 { 1.0 } else { 0.0 }).collect()),
            Self::Empirical { rows } => {
                let n = rows.len() as f64;
                Some((0..self.dim()).map(|j| rows.iter().filter(|r| r[j] <= 0.0).count() as f64 / n).collect())
            }
            Self::WithAtoms { .. } | Self::CommonShift { .. } | Self::FromR { .. } => None,
            _ => Some(vec![0.0; self.dim()]),
        }
    }
}

/// `log(gamma r / sigma) / gamma`, with `r = 0` mapped to `-inf`.
#[inline]
pub fn r_to_u(r: f64, sigma: f64, gamma: f64) -> f64 {
    if r <= 0.0 {
        NEG_INF
    } else {
        (gamma * r / sigma).ln() / gamma
    }
}

/// Lower Cholesky factor (row-major) of a symmetric positive definite matrix.
pub fn cholesky(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = a.len();
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if !(v > 0.0) {
                    return Err(Error::invalid("cov", "not positive definite"));
                }
                l[i * d + j] = v.sqrt();
            } else {
                l[i * d + j] = (a[i][j] - s) / l[j * d + j];
            }
        }
    }
    Ok(l)
}

mod serde_rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row(#[serde(with = "crate::ext::serde_vec")] Vec<f64>);

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let wrapped: Vec<Row> = rows.iter().map(|r| Row(r.clone())).collect();
        wrapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let wrapped: Vec<Row> = Vec::deserialize(d)?;
        Ok(wrapped.into_iter().map(|r| r.0).collect())
    }
}
