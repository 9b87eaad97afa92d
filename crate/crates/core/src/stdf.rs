//! Stable tail dependence functions.
//!
//! A stable tail dependence function (stdf) `l : [0, inf)^d -> [0, inf)` is
//! convex, 1-homogeneous and squeezed between `max(y)` and `sum(y)`. Every stdf
//! is a D-norm `l(y) = E[max(y V)]` for some random `V >= 0` with unit means,
//! and its tail copula is `R(y) = E[min(y V)]`, or equivalently the
//! inclusion-exclusion sum of `l` over sub-vectors.
//!
//! Three closed-form families are provided together with a Monte Carlo
//! D-norm whose generator sample is frozen at construction, so that repeated
//! evaluations are deterministic and `l` and `R` share draws.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimate::Estimate;
use crate::matrix::Matrix;
use crate::rng::{stream, stream_rng};

/// Largest dimension for which the `2^d - 1` term inclusion-exclusion sum is used.
pub const MAX_INCLUSION_EXCLUSION_DIM: usize = 20;

/// Generator laws for a Monte Carlo D-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum DNormGenerator {
    /// `V = d e_K` with `K` uniform on the coordinates.
    Independence,
    /// `V = (1, ..., 1)`.
    CompleteDependence,
    /// Angular generator `V = d W` of the logistic model (bounded by `d`).
    Logistic { theta: f64 },
    /// A sample supplied by the caller (for instance extracted from a
    /// spectral law); not regenerable from a seed.
    Empirical,
}

/// A frozen D-norm sample: rows of `V` and optional self-normalized weights.
#[derive(Debug, Clone)]
pub struct DNormSample {
    generator: DNormGenerator,
    seed: Option<u64>,
    values: Arc<Matrix>,
    weights: Option<Arc<Vec<f64>>>,
}

impl DNormSample {
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_mc(&self) -> usize {
        self.values.nrows()
    }

    pub fn generator(&self) -> &DNormGenerator {
        &self.generator
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Normalized weights (summing to one), if the sample is weighted.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref().map(Vec::as_slice)
    }

    fn average<F: Fn(&[f64]) -> f64>(&self, f: F) -> Estimate {
        let vals: Vec<f64> = self.values.rows().map(f).collect();
        match &self.weights {
            None => Estimate::mean(vals),
            Some(w) => Estimate::weighted_mean(&vals, w),
        }
    }

    fn expect_max(&self, y: &[f64]) -> Estimate {
        self.average(|v| y.iter().zip(v).map(|(a, b)| a * b).fold(0.0, f64::max))
    }

    fn expect_min(&self, y: &[f64]) -> Estimate {
        self.average(|v| y.iter().zip(v).map(|(a, b)| a * b).fold(f64::INFINITY, f64::min))
    }

    /// `(l(y_j e_j + eps y_-j) - l(y_j e_j)) / eps`, summed row by row so the
    /// difference does not cancel for small `eps`.
    pub fn difference_quotient(&self, y: &[f64], j: usize, eps: f64) -> f64 {
        self.average(|v| {
            let others = off_axis_max(y, v, j);
            (others - y[j] * v[j] / eps).max(0.0)
        })
        .value
    }

    /// The largest `eps` at which some row switches between its axis term and
    /// the others; below it the difference quotient is constant in `eps`.
    pub fn last_breakpoint(&self, y: &[f64], j: usize) -> f64 {
        self.values
            .rows()
            .filter_map(|v| {
                let others = off_axis_max(y, v, j);
                let axis = y[j] * v[j];
                (others > 0.0 && axis > 0.0).then(|| axis / others)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn off_axis_max(y: &[f64], v: &[f64], j: usize) -> f64 {
    y.iter()
        .zip(v)
        .enumerate()
        .filter(|(k, _)| *k != j)
        .map(|(_, (a, b))| a * b)
        .fold(0.0, f64::max)
}

/// An evaluable stable tail dependence function of dimension `dim`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "StdfRepr", into = "StdfRepr")]
pub enum StdfModel {
    Independence { dim: usize },
    CompleteDependence { dim: usize },
    /// `l(y) = (sum y_j^(1/theta))^theta`, `theta` in `(0, 1]`.
    Logistic { dim: usize, theta: f64 },
    DNormMonteCarlo(DNormSample),
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid("theta", format!("{theta} is outside (0, 1]")));
    }
    Ok(())
}

fn check_dim_positive(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    Ok(())
}

impl StdfModel {
    pub fn independence(dim: usize) -> Result<Self> {
        check_dim_positive(dim)?;
        Ok(Self::Independence { dim })
    }

    pub fn complete_dependence(dim: usize) -> Result<Self> {
        check_dim_positive(dim)?;
        Ok(Self::CompleteDependence { dim })
    }

    pub fn logistic(dim: usize, theta: f64) -> Result<Self> {
        check_dim_positive(dim)?;
        check_theta(theta)?;
        Ok(Self::Logistic { dim, theta })
    }

    /// Monte Carlo D-norm with `n_mc` generator draws frozen from `seed`.
    pub fn dnorm_monte_carlo(
        generator: DNormGenerator,
        dim: usize,
        n_mc: usize,
        seed: u64,
    ) -> Result<Self> {
        check_dim_positive(dim)?;
        if n_mc == 0 {
            return Err(Error::invalid("n_mc", "must be positive"));
        }
        let values = sample_generator(&generator, dim, n_mc, seed)?;
        Ok(Self::DNormMonteCarlo(DNormSample {
            generator,
            seed: Some(seed),
            values: Arc::new(values),
            weights: None,
        }))
    }

    /// D-norm backed by a caller-supplied sample of `V` (rows), optionally
    /// weighted. Weights are normalized to sum to one.
    pub fn dnorm_from_sample(values: Matrix, weights: Option<Vec<f64>>) -> Result<Self> {
        check_dim_positive(values.ncols())?;
        if values.nrows() == 0 {
            return Err(Error::EmptyInput("D-norm sample has no rows".into()));
        }
        if let Some((idx, v)) = values
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NegativeArgument {
                index: idx % values.ncols(),
                value: *v,
            });
        }
        let weights = match weights {
            None => None,
            Some(w) => {
                check_dim(values.nrows(), w.len())?;
                let total: f64 = w.iter().sum();
                if !(total > 0.0) || w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(Error::invalid("weights", "must be finite, nonnegative, not all zero"));
                }
                Some(Arc::new(w.into_iter().map(|x| x / total).collect()))
            }
        };
        Ok(Self::DNormMonteCarlo(DNormSample {
            generator: DNormGenerator::Empirical,
            seed: None,
            values: Arc::new(values),
            weights,
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Independence { dim } | Self::CompleteDependence { dim } | Self::Logistic { dim, .. } => *dim,
            Self::DNormMonteCarlo(s) => s.dim(),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Self::DNormMonteCarlo(_))
    }

    /// Checks the argument of `l`: right length, no negative or NaN component.
    pub fn check_argument(&self, y: &[f64]) -> Result<()> {
        check_dim(self.dim(), y.len())?;
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeArgument { index, value });
        }
        Ok(())
    }

    /// `l(y)`.
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        self.check_argument(y)?;
        Ok(self.value(y))
    }

    /// `l(y)` with its Monte Carlo standard error (zero for closed forms).
    pub fn eval_estimate(&self, y: &[f64]) -> Result<Estimate> {
        self.check_argument(y)?;
        Ok(match self {
            Self::DNormMonteCarlo(s) => s.expect_max(y),
            _ => Estimate::exact(self.value(y)),
        })
    }

    /// Unchecked evaluation; callers guarantee a valid argument.
    pub(crate) fn value(&self, y: &[f64]) -> f64 {
        match self {
            Self::Independence { .. } => y.iter().sum(),
            Self::CompleteDependence { .. } => y.iter().copied().fold(0.0, f64::max),
            Self::Logistic { theta, .. } => logistic_value(y, *theta),
            Self::DNormMonteCarlo(s) => s.expect_max(y).value,
        }
    }

    /// Tail copula `R(y)`.
    ///
    /// Closed forms use the inclusion-exclusion sum (up to
    /// [`MAX_INCLUSION_EXCLUSION_DIM`]); Monte Carlo D-norms use `E[min(y V)]`.
    pub fn tail_copula(&self, y: &[f64]) -> Result<f64> {
        Ok(self.tail_copula_estimate(y)?.value)
    }

    pub fn tail_copula_estimate(&self, y: &[f64]) -> Result<Estimate> {
        self.check_argument(y)?;
        match self {
            Self::DNormMonteCarlo(s) => Ok(s.expect_min(y)),
            Self::CompleteDependence { .. } => Ok(Estimate::exact(y.iter().copied().fold(f64::INFINITY, f64::min))),
            Self::Independence { dim } if *dim >= 2 => Ok(Estimate::exact(0.0)),
            _ => {
                // cancellation can leave the sum a few ulps outside [0, min y]
                let top = y.iter().copied().fold(f64::INFINITY, f64::min);
                Ok(Estimate::exact(self.tail_copula_inclusion_exclusion(y)?.clamp(0.0, top)))
            }
        }
    }

    /// `R(y)` from the alternating sum of `l` over all nonempty sub-vectors.
    pub fn tail_copula_inclusion_exclusion(&self, y: &[f64]) -> Result<f64> {
        self.check_argument(y)?;
        let d = self.dim();
        if d > MAX_INCLUSION_EXCLUSION_DIM {
            return Err(Error::Unsupported(format!(
                "inclusion-exclusion tail copula in dimension {d} (limit {MAX_INCLUSION_EXCLUSION_DIM})"
            )));
        }
        let mut masked = vec![0.0; d];
        let mut total = 0.0;
        for mask in 1u32..(1u32 << d) {
            for (j, m) in masked.iter_mut().enumerate() {
                *m = if mask & (1 << j) != 0 { y[j] } else { 0.0 };
            }
            let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * self.value(&masked);
        }
        Ok(total)
    }

    /// The stdf of the sub-vector indexed by `subset` (0-based indices):
    /// `l_J(y) = l(sum_{j in J} y_j e_j)`.
    pub fn marginal(&self, subset: &[usize]) -> Result<StdfModel> {
        if subset.is_empty() {
            return Err(Error::invalid("subset", "must be nonempty"));
        }
        let d = self.dim();
        let mut seen = vec![false; d];
        for &j in subset {
            if j >= d {
                return Err(Error::invalid("subset", format!("index {j} out of range for dimension {d}")));
            }
            if seen[j] {
                return Err(Error::invalid("subset", format!("index {j} repeated")));
            }
            seen[j] = true;
        }
        let k = subset.len();
        Ok(match self {
            Self::Independence { .. } => Self::Independence { dim: k },
            Self::CompleteDependence { .. } => Self::CompleteDependence { dim: k },
            Self::Logistic { theta, .. } => Self::Logistic { dim: k, theta: *theta },
            Self::DNormMonteCarlo(s) => Self::DNormMonteCarlo(DNormSample {
                generator: DNormGenerator::Empirical,
                seed: s.seed,
                values: Arc::new(s.values.select_columns(subset)),
                weights: s.weights.clone(),
            }),
        })
    }

    /// Extremal coefficient `l(1, ..., 1)` and tail dependence coefficient
    /// `R(1, ..., 1)`.
    pub fn summary_coefficients(&self) -> Result<(f64, f64)> {
        let ones = vec![1.0; self.dim()];
        Ok((self.eval(&ones)?, self.tail_copula(&ones)?))
    }

    /// Gradient of `l` at `y` for the closed forms, `None` for Monte Carlo
    /// D-norms (no smoothness certificate).
    ///
    /// At points where `l` is not differentiable the one-sided derivative from
    /// the positive orthant interior is returned.
    pub fn gradient(&self, y: &[f64]) -> Result<Option<Vec<f64>>> {
        self.check_argument(y)?;
        Ok(match self {
            Self::Independence { dim } => Some(vec![1.0; *dim]),
            Self::CompleteDependence { .. } => {
                let m = y.iter().copied().fold(0.0, f64::max);
                let argmax = y.iter().position(|&v| v == m).unwrap_or(0);
                Some((0..y.len()).map(|j| if j == argmax { 1.0 } else { 0.0 }).collect())
            }
            Self::Logistic { theta, .. } => {
                let inv = 1.0 / theta;
                let m = y.iter().copied().fold(0.0, f64::max);
                if m == 0.0 {
                    return Ok(Some(vec![0.0; y.len()]));
                }
                let s: f64 = y.iter().map(|v| (v / m).powf(inv)).sum();
                Some(
                    y.iter()
                        .map(|v| {
                            if *v == 0.0 {
                                if *theta == 1.0 {
                                    1.0
                                } else {
                                    0.0
                                }
                            } else {
                                s.powf(theta - 1.0) * (v / m).powf(inv - 1.0)
                            }
                        })
                        .collect(),
                )
            }
            Self::DNormMonteCarlo(_) => None,
        })
    }
}

fn logistic_value(y: &[f64], theta: f64) -> f64 {
    let m = y.iter().copied().fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    if theta == 1.0 {
        return y.iter().sum();
    }
    let inv = 1.0 / theta;
    let s: f64 = y.iter().map(|v| (v / m).powf(inv)).sum();
    m * s.powf(theta)
}

/// Row-at-a-time sampler for a regenerable D-norm generator.
#[derive(Debug, Clone)]
pub struct GeneratorSampler {
    dim: usize,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Independence,
    CompleteDependence,
    Logistic { theta: f64, gamma: Gamma<f64> },
}

impl GeneratorSampler {
    pub fn new(generator: &DNormGenerator, dim: usize) -> Result<Self> {
        check_dim_positive(dim)?;
        let kind = match generator {
            DNormGenerator::Independence => SamplerKind::Independence,
            DNormGenerator::CompleteDependence => SamplerKind::CompleteDependence,
            DNormGenerator::Logistic { theta } => {
                check_theta(*theta)?;
                if *theta == 1.0 {
                    SamplerKind::Independence
                } else {
                    let gamma = Gamma::new(1.0 - theta, 1.0).map_err(|e| Error::invalid("theta", e.to_string()))?;
                    SamplerKind::Logistic { theta: *theta, gamma }
                }
            }
            DNormGenerator::Empirical => {
                return Err(Error::invalid("generator", "an empirical D-norm cannot be resampled from a seed"));
            }
        };
        Ok(Self { dim, kind })
    }

    /// Sampler for a closed-form stdf, `None` for Monte Carlo D-norms.
    pub fn for_model(model: &StdfModel) -> Option<Self> {
        let dim = model.dim();
        let generator = match model {
            StdfModel::Independence { .. } => DNormGenerator::Independence,
            StdfModel::CompleteDependence { .. } => DNormGenerator::CompleteDependence,
            StdfModel::Logistic { theta, .. } => DNormGenerator::Logistic { theta: *theta },
            StdfModel::DNormMonteCarlo(_) => return None,
        };
        Self::new(&generator, dim).ok()
    }

    /// Almost-sure upper bound on every coordinate of `V`.
    pub fn bound(&self) -> f64 {
        match self.kind {
            SamplerKind::CompleteDependence => 1.0,
            _ => self.dim as f64,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.dim as f64;
        match &self.kind {
            SamplerKind::Independence => {
                out.fill(0.0);
                out[rng.random_range(0..self.dim)] = d;
            }
            SamplerKind::CompleteDependence => out.fill(1.0),
            SamplerKind::Logistic { theta, gamma } => {
                // Angular construction: choose K uniformly, draw E_K ~ Gamma(1 - theta)
                // and the other E_k ~ Exp(1); with A = E^(-theta), V = d A / sum(A).
                let k = rng.random_range(0..self.dim);
                for (j, la) in out.iter_mut().enumerate() {
                    let e: f64 = if j == k { gamma.sample(rng) } else { Exp1.sample(rng) };
                    *la = -theta * e.ln();
                }
                let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for la in out.iter_mut() {
                    *la = (*la - top).exp();
                    total += *la;
                }
                for v in out.iter_mut() {
                    *v *= d / total;
                }
            }
        }
    }
}

/// Draws `n` rows of the generator `V` (unit means, `E[max(y V)] = l(y)`).
pub fn sample_generator(generator: &DNormGenerator, dim: usize, n: usize, seed: u64) -> Result<Matrix> {
    let sampler = GeneratorSampler::new(generator, dim)?;
    let mut rng = stream_rng(seed, stream::STDF);
    let mut out = Matrix::zeros(n, dim);
    for i in 0..n {
        sampler.draw(&mut rng, out.row_mut(i));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON form: {variant, dim, params, seed?, n_mc?}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct StdfRepr {
    variant: String,
    dim: usize,
    #[serde(default)]
    params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_mc: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct EmpiricalParams {
    rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl From<StdfModel> for StdfRepr {
    fn from(m: StdfModel) -> Self {
        let dim = m.dim();
        match m {
            StdfModel::Independence { .. } => StdfRepr {
                variant: "independence".into(),
                dim,
                params: serde_json::json!({}),
                seed: None,
                n_mc: None,
            },
            StdfModel::CompleteDependence { .. } => StdfRepr {
                variant: "complete_dependence".into(),
                dim,
                params: serde_json::json!({}),
                seed: None,
                n_mc: None,
            },
            StdfModel::Logistic { theta, .. } => StdfRepr {
                variant: "logistic".into(),
                dim,
                params: serde_json::json!({ "theta": theta }),
                seed: None,
                n_mc: None,
            },
            StdfModel::DNormMonteCarlo(s) => {
                let params = match (&s.generator, s.seed) {
                    (DNormGenerator::Empirical, _) | (_, None) => {
                        let mut p = serde_json::to_value(EmpiricalParams {
                            rows: s.values.rows().map(<[f64]>::to_vec).collect(),
                            weights: s.weights.as_ref().map(|w| w.to_vec()),
                        })
                        .expect("finite sample serializes");
                        p["generator"] = "empirical".into();
                        p
                    }
                    (g, Some(_)) => serde_json::to_value(g).expect("generator serializes"),
                };
                StdfRepr {
                    variant: "dnorm_monte_carlo".into(),
                    dim,
                    params,
                    seed: s.seed,
                    n_mc: Some(s.n_mc()),
                }
            }
        }
    }
}

impl TryFrom<StdfRepr> for StdfModel {
    type Error = Error;

    fn try_from(r: StdfRepr) -> Result<Self> {
        match r.variant.as_str() {
            "independence" => StdfModel::independence(r.dim),
            "complete_dependence" => StdfModel::complete_dependence(r.dim),
            "logistic" => {
                let theta = r
                    .params
                    .get("theta")
                    .and_then(serde_json::Value::as_f64)
                    .ok_or_else(|| Error::invalid("params.theta", "missing or not a number"))?;
                StdfModel::logistic(r.dim, theta)
            }
            "dnorm_monte_carlo" => {
                let generator: DNormGenerator = serde_json::from_value(r.params.clone())?;
                match generator {
                    DNormGenerator::Empirical => {
                        let p: EmpiricalParams = serde_json::from_value(r.params)?;
                        let mut data = Vec::with_capacity(p.rows.len() * r.dim);
                        for row in &p.rows {
                            check_dim(r.dim, row.len())?;
                            data.extend_from_slice(row);
                        }
                        let model = StdfModel::dnorm_from_sample(Matrix::from_rows(r.dim, data), p.weights)?;
                        match model {
                            StdfModel::DNormMonteCarlo(mut s) => {
                                s.seed = r.seed;
                                Ok(StdfModel::DNormMonteCarlo(s))
                            }
                            other => Ok(other),
                        }
                    }
                    g => {
                        let seed = r.seed.ok_or_else(|| Error::invalid("seed", "required for a Monte Carlo D-norm"))?;
                        let n_mc = r.n_mc.ok_or_else(|| Error::invalid("n_mc", "required for a Monte Carlo D-norm"))?;
                        StdfModel::dnorm_monte_carlo(g, r.dim, n_mc, seed)
                    }
                }
            }
            other => Err(Error::invalid("variant", format!("unknown stdf variant `{other}`"))),
        }
    }
}
