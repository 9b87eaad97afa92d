//! Spectral, T, U and R representations of GP laws.
//!
//! A standardized GP vector is `Z = S + E` with `S` spectral (`max S = 0`)
//! and `E` unit exponential. `S` is obtained from a generator `T` by
//! max-shifting, from `U` by exponential tilting, or from `(pi, l)` by tilting
//! the D-norm generator. R-kind generators reduce to U-kind.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::batch::{BatchMeta, SampleBatch};
use crate::error::{check_dim, Error, Result};
use crate::estimate::Estimate;
use crate::ext::{self, NEG_INF};
use crate::family::VectorFamily;
use crate::matrix::Matrix;
use crate::params::{unstandardize_with, GpParams};
use crate::rng::{stream, stream_rng};
use crate::stdf::{GeneratorSampler, StdfModel};

/// Resampling emits a warning below this fraction of the pool as ESS.
pub const ESS_WARNING_FRACTION: f64 = 0.01;

pub const DEFAULT_POOL_SIZE: usize = 1 << 18;

// Simulated spectral vectors and exponentials are snapped to this dyadic grid
// so that `S + E` is exact and `S` is recovered bit for bit from `Z`.
const SNAP_SCALE: f64 = 4_294_967_296.0; // 2^32
const SNAP_RANGE: f64 = 1_048_576.0; // 2^20

fn snap(x: f64) -> f64 {
    if x.abs() < SNAP_RANGE {
        (x * SNAP_SCALE).round() / SNAP_SCALE
    } else {
        x
    }
}

/// `t - m` with `-inf - m = -inf` for any `m`.
#[inline]
fn shift(t: f64, m: f64) -> f64 {
    if ext::is_atom(t) {
        NEG_INF
    } else {
        t - m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    T,
    U,
    R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorLaw {
    T { family: VectorFamily },
    U { family: VectorFamily },
    /// `R >= 0` with positive shape `gamma` and scale `sigma`.
    R {
        family: VectorFamily,
        sigma: Vec<f64>,
        gamma: Vec<f64>,
    },
}

impl GeneratorLaw {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            Self::T { .. } => GeneratorKind::T,
            Self::U { .. } => GeneratorKind::U,
            Self::R { .. } => GeneratorKind::R,
        }
    }

    pub fn family(&self) -> &VectorFamily {
        match self {
            Self::T { family } | Self::U { family } | Self::R { family, .. } => family,
        }
    }

    pub fn dim(&self) -> usize {
        self.family().dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.family().validate()?;
        if let Self::R { sigma, gamma, .. } = self {
            check_dim(self.dim(), sigma.len())?;
            check_dim(self.dim(), gamma.len())?;
            if let Some(j) = (0..sigma.len()).find(|&j| !(sigma[j] > 0.0 && gamma[j] > 0.0)) {
                return Err(Error::invalid(
                    "r_generator",
                    format!("sigma and gamma must be positive (coordinate {j})"),
                ));
            }
        }
        Ok(())
    }

    fn require(&self, kind: GeneratorKind) -> Result<()> {
        if self.kind() != kind {
            return Err(Error::invalid("generator", format!("expected a {kind:?}-kind generator, got {:?}", self.kind())));
        }
        Ok(())
    }

    /// Draws `n` generator vectors on the spectral stream of `seed`.
    pub fn sample_matrix(&self, n: usize, seed: u64) -> Matrix {
        sample_family(self.family(), n, seed, stream::SPECTRAL)
    }

    /// Monte Carlo check of the generator conditions. Returns per-coordinate
    /// estimates of `P(T_j > -inf)`, `E[e^U_j]` or `E[R_j^(1/gamma_j)]`.
    pub fn check_contract(&self, n_mc: usize, seed: u64) -> Result<Vec<Estimate>> {
        self.validate()?;
        let draws = self.sample_matrix(n_mc, seed);
        let d = self.dim();
        let per_coord = |f: &dyn Fn(usize, f64) -> f64| -> Vec<Estimate> {
            (0..d).map(|j| Estimate::mean(draws.column(j).map(|v| f(j, v)))).collect()
        };
        let est = match self {
            Self::T { .. } => {
                if let Some(i) = draws.rows().position(|r| ext::is_atom(ext::max(r))) {
                    return Err(Error::GeneratorContract(format!("draw {i} has max(T) = -inf")));
                }
                per_coord(&|_, v| if ext::is_atom(v) { 0.0 } else { 1.0 })
            }
            Self::U { .. } => per_coord(&|_, v| v.exp()),
            Self::R { gamma, .. } => {
                if let Some(v) = draws.as_slice().iter().find(|v| !(**v >= 0.0)) {
                    return Err(Error::GeneratorContract(format!("R draw {v} is negative")));
                }
                per_coord(&|j, v| v.powf(1.0 / gamma[j]))
            }
        };
        if let Some(j) = est.iter().position(|e| !(e.value > 0.0 && e.value.is_finite() && e.se.is_finite())) {
            return Err(Error::GeneratorContract(format!(
                "coordinate {j}: moment estimate {} (se {}) is not positive and finite",
                est[j].value, est[j].se
            )));
        }
        Ok(est)
    }
}

fn sample_family(family: &VectorFamily, n: usize, seed: u64, stream_id: u64) -> Matrix {
    let mut rng = stream_rng(seed, stream_id);
    let mut m = Matrix::zeros(n, family.dim());
    for i in 0..n {
        family.sample(&mut rng, m.row_mut(i));
    }
    m
}

/// Law of `U = log(gamma R / sigma) / gamma`; `R_j = 0` maps to `-inf`.
pub fn u_from_r(g: &GeneratorLaw) -> Result<GeneratorLaw> {
    g.require(GeneratorKind::R)?;
    g.validate()?;
    let GeneratorLaw::R { family, sigma, gamma } = g else { unreachable!() };
    Ok(GeneratorLaw::U {
        family: VectorFamily::FromR {
            base: Box::new(family.clone()),
            sigma: sigma.clone(),
            gamma: gamma.clone(),
        },
    })
}

/// Law of a spectral vector `S` (`max S = 0`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SpectralLaw {
    /// The family already draws spectral vectors.
    Direct { family: VectorFamily },
    /// `S = T - max(T)`.
    FromT { family: VectorFamily },
    /// `S = U - max(U)` under the law tilted by `e^max(U)`, sampled by
    /// importance resampling from a pool of proposals.
    FromU {
        family: VectorFamily,
        #[serde(default = "default_pool_size")]
        pool_size: usize,
    },
    /// `S = log(pi V) - max(log(pi V))` under the law of the D-norm generator
    /// `V` tilted by `max(pi V)`.
    FromStdf { pi: Vec<f64>, ell: StdfModel },
}

fn default_pool_size() -> usize {
    DEFAULT_POOL_SIZE
}

/// Draws of `S` with resampling diagnostics.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub values: Matrix,
    pub ess: Option<f64>,
    pub warning: Option<String>,
}

pub fn spectral_from_t(g: &GeneratorLaw) -> Result<SpectralLaw> {
    g.require(GeneratorKind::T)?;
    g.validate()?;
    Ok(SpectralLaw::FromT { family: g.family().clone() })
}

/// Accepts U-kind generators, and R-kind ones through [`u_from_r`].
pub fn spectral_from_u(g: &GeneratorLaw, pool_size: usize) -> Result<SpectralLaw> {
    let g = match g.kind() {
        GeneratorKind::R => u_from_r(g)?,
        _ => {
            g.require(GeneratorKind::U)?;
            g.validate()?;
            g.clone()
        }
    };
    if pool_size == 0 {
        return Err(Error::invalid("pool_size", "must be positive"));
    }
    Ok(SpectralLaw::FromU { family: g.family().clone(), pool_size })
}

impl SpectralLaw {
    pub fn dim(&self) -> usize {
        match self {
            Self::Direct { family } | Self::FromT { family } | Self::FromU { family, .. } => family.dim(),
            Self::FromStdf { pi, .. } => pi.len(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Direct { .. } => "spectral",
            Self::FromT { .. } => "t",
            Self::FromU { .. } => "u",
            Self::FromStdf { .. } => "pi_ell",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Direct { family } | Self::FromT { family } | Self::FromU { family, .. } => family.validate(),
            Self::FromStdf { pi, ell } => {
                GpParams::new(vec![1.0; pi.len()], vec![0.0; pi.len()], pi.clone(), ell.clone()).map(|_| ())
            }
        }
    }

    /// Face density of `S`, when the law has one.
    pub fn face_density(&self, s: &[f64]) -> Option<f64> {
        match self {
            Self::Direct { family } => family.face_density(s),
            _ => None,
        }
    }

    /// Draws `n` spectral vectors.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SpectralSample> {
        self.validate()?;
        let d = self.dim();
        match self {
            Self::Direct { family } => {
                let m = sample_family(family, n, seed, stream::SPECTRAL);
                if let Some(i) = m.rows().position(|r| ext::max(r) != 0.0) {
                    return Err(Error::SpectralCondition(format!(
                        "draw {i} has max {} instead of 0",
                        ext::max(m.row(i))
                    )));
                }
                Ok(SpectralSample { values: m, ess: None, warning: None })
            }
            Self::FromT { family } => {
                let mut m = sample_family(family, n, seed, stream::SPECTRAL);
                for i in 0..n {
                    let row = m.row_mut(i);
                    let top = ext::max(row);
                    if !top.is_finite() {
                        return Err(Error::GeneratorContract(format!("draw {i} has max(T) = {top}")));
                    }
                    for v in row.iter_mut() {
                        *v = shift(*v, top);
                    }
                }
                Ok(SpectralSample { values: m, ess: None, warning: None })
            }
            Self::FromU { pool_size, .. } => {
                let (pool, weights) = self.weighted_sample(*pool_size, seed)?;
                let weights = weights.expect("tilted pool is weighted");
                let index = WeightedIndex::new(&weights)
                    .map_err(|e| Error::GeneratorContract(format!("tilt weights: {e}")))?;
                let mut rng = stream_rng(seed, stream::RESAMPLE);
                let mut m = Matrix::with_capacity(d, n);
                for _ in 0..n {
                    m.push_row(pool.row(index.sample(&mut rng)));
                }
                let (s1, s2) = weights.iter().fold((0.0, 0.0), |(a, b), w| (a + w, b + w * w));
                let ess = s1 * s1 / s2;
                let warning = (ess < ESS_WARNING_FRACTION * *pool_size as f64).then(|| {
                    format!("effective sample size {ess:.1} is below 1% of the pool size {pool_size}")
                });
                Ok(SpectralSample { values: m, ess: Some(ess), warning })
            }
            Self::FromStdf { pi, ell } => Ok(SpectralSample {
                values: sample_from_stdf(pi, ell, n, seed)?,
                ess: None,
                warning: None,
            }),
        }
    }

    /// Draws for unbiased expectations under `S`: for tilted laws the raw
    /// pool `U - max(U)` with weights proportional to `e^max(U)` (normalized
    /// so the largest is one); otherwise a plain sample.
    pub fn weighted_sample(&self, n: usize, seed: u64) -> Result<(Matrix, Option<Vec<f64>>)> {
        match self {
            Self::FromU { family, .. } => {
                family.validate()?;
                let mut pool = sample_family(family, n, seed, stream::POOL);
                let tops: Vec<f64> = pool.rows().map(ext::max).collect();
                let overall = tops.iter().copied().fold(NEG_INF, f64::max);
                if !overall.is_finite() {
                    return Err(Error::GeneratorContract(format!(
                        "all tilt weights vanish or overflow (max U = {overall})"
                    )));
                }
                let weights: Vec<f64> = tops.iter().map(|t| (t - overall).exp()).collect();
                for (i, top) in tops.iter().enumerate() {
                    let row = pool.row_mut(i);
                    if ext::is_atom(*top) {
                        // zero weight; any spectral placeholder will do
                        row.fill(0.0);
                    } else {
                        for v in row.iter_mut() {
                            *v = shift(*v, *top);
                        }
                    }
                }
                Ok((pool, Some(weights)))
            }
            _ => Ok((self.sample(n, seed)?.values, None)),
        }
    }

    /// `E[f(S)]` by the unbiased route (self-normalized weights for tilted laws).
    pub fn expectation<F: Fn(&[f64]) -> f64>(&self, f: F, n_mc: usize, seed: u64) -> Result<Estimate> {
        let (m, w) = self.weighted_sample(n_mc, seed)?;
        let vals: Vec<f64> = m.rows().map(f).collect();
        Ok(match w {
            Some(w) => Estimate::weighted_mean(&vals, &w),
            None => Estimate::mean(vals),
        })
    }

    /// `P(S_j = -inf)` per coordinate: exact when the generator's atom
    /// probabilities are known, Monte Carlo otherwise.
    pub fn atom_probs(&self, n_mc: usize, seed: u64) -> Result<Vec<Estimate>> {
        match self {
            Self::Direct { family } | Self::FromT { family } => {
                if let Some(p) = family.atom_probs().filter(|_| !matches!(family, VectorFamily::Empirical { .. })) {
                    return Ok(p.into_iter().map(Estimate::exact).collect());
                }
            }
            Self::FromStdf { pi, ell } => return Ok(stdf_atom_probs(pi, ell).into_iter().map(Estimate::exact).collect()),
            Self::FromU { .. } => {}
        }
        (0..self.dim())
            .map(|j| self.expectation(|s| if ext::is_atom(s[j]) { 1.0 } else { 0.0 }, n_mc, seed))
            .collect()
    }
}

/// `P(S_j = -inf) = E[max(pi V) 1{V_j = 0}]` for the tilted D-norm law.
fn stdf_atom_probs(pi: &[f64], ell: &StdfModel) -> Vec<f64> {
    let d = pi.len();
    match ell {
        StdfModel::Independence { .. } => (0..d).map(|j| pi.iter().sum::<f64>() - pi[j]).collect(),
        StdfModel::Logistic { theta, .. } if *theta == 1.0 => (0..d).map(|j| pi.iter().sum::<f64>() - pi[j]).collect(),
        StdfModel::CompleteDependence { .. } | StdfModel::Logistic { .. } => vec![0.0; d],
        StdfModel::DNormMonteCarlo(s) => {
            let n = s.n_mc();
            let w = |i: usize| s.weights().map_or(1.0 / n as f64, |w| w[i]);
            (0..d)
                .map(|j| {
                    s.values()
                        .rows()
                        .enumerate()
                        .filter(|(_, v)| v[j] == 0.0)
                        .map(|(i, v)| w(i) * v.iter().zip(pi).map(|(a, b)| a * b).fold(0.0, f64::max))
                        .sum()
                })
                .collect()
        }
    }
}

fn spectral_from_v(pi: &[f64], v: &[f64], out: &mut [f64]) {
    let mut top = NEG_INF;
    for ((o, p), x) in out.iter_mut().zip(pi).zip(v) {
        *o = (p * x).ln();
        top = top.max(*o);
    }
    for o in out.iter_mut() {
        *o = shift(*o, top);
    }
}

/// Exact sampling of `S` from `(pi, l)`: rejection with the bounded
/// generator for closed forms, weighted row selection for D-norm samples.
fn sample_from_stdf(pi: &[f64], ell: &StdfModel, n: usize, seed: u64) -> Result<Matrix> {
    let d = pi.len();
    let mut rng = stream_rng(seed, stream::SPECTRAL);
    let mut out = Matrix::zeros(n, d);
    match GeneratorSampler::for_model(ell) {
        Some(sampler) => {
            let bound = sampler.bound() * ext::max(pi);
            let mut v = vec![0.0; d];
            for i in 0..n {
                loop {
                    sampler.draw(&mut rng, &mut v);
                    let w = v.iter().zip(pi).map(|(a, b)| a * b).fold(0.0, f64::max);
                    if rng.random::<f64>() * bound < w {
                        break;
                    }
                }
                spectral_from_v(pi, &v, out.row_mut(i));
            }
        }
        None => {
            let StdfModel::DNormMonteCarlo(s) = ell else { unreachable!() };
            let nrows = s.n_mc();
            let weights: Vec<f64> = s
                .values()
                .rows()
                .enumerate()
                .map(|(i, v)| {
                    let base = s.weights().map_or(1.0, |w| w[i] * nrows as f64);
                    base * v.iter().zip(pi).map(|(a, b)| a * b).fold(0.0, f64::max)
                })
                .collect();
            let index = WeightedIndex::new(&weights)
                .map_err(|e| Error::SpectralCondition(format!("D-norm sample: {e}")))?;
            for i in 0..n {
                let k = index.sample(&mut rng);
                spectral_from_v(pi, s.values().row(k), out.row_mut(i));
            }
        }
    }
    Ok(out)
}

/// `pi_j = E[e^S_j]` and the D-norm of `V = e^S / pi` frozen on `n_mc`
/// draws (weighted for tilted laws). On the frozen sample `l(pi) = 1`.
pub fn extract_pi_ell(s: &SpectralLaw, n_mc: usize, seed: u64) -> Result<(Vec<f64>, StdfModel)> {
    let (mut m, w) = s.weighted_sample(n_mc, seed)?;
    let d = s.dim();
    for v in m.row_mut_iter() {
        for x in v.iter_mut() {
            *x = x.exp();
        }
    }
    let pi: Vec<f64> = (0..d)
        .map(|j| {
            let col: Vec<f64> = m.column(j).collect();
            match &w {
                Some(w) => Estimate::weighted_mean(&col, w).value,
                None => Estimate::mean(col).value,
            }
        })
        .collect();
    if let Some(j) = pi.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::SpectralCondition(format!("P(S_{} > -inf) is zero in the sample", j + 1)));
    }
    for v in m.row_mut_iter() {
        for (x, p) in v.iter_mut().zip(&pi) {
            *x /= p;
        }
    }
    let ell = StdfModel::dnorm_from_sample(m, w)?;
    Ok((pi, ell))
}

/// `l(y)` of a spectral law on `n_mc` draws, with a standard error that
/// also carries the noise of the estimated `pi` (influence-function form).
pub fn stdf_estimate(s: &SpectralLaw, y: &[f64], n_mc: usize, seed: u64) -> Result<Estimate> {
    let d = s.dim();
    check_dim(d, y.len())?;
    let (m, w) = s.weighted_sample(n_mc, seed)?;
    let n = m.nrows();
    let total: f64 = w.as_ref().map_or(n as f64, |w| w.iter().sum());
    let wn = |i: usize| w.as_ref().map_or(1.0, |w| w[i]) / total;
    let mut pi = vec![0.0; d];
    for (i, r) in m.rows().enumerate() {
        for (p, v) in pi.iter_mut().zip(r) {
            *p += wn(i) * v.exp();
        }
    }
    if let Some(j) = pi.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::SpectralCondition(format!("P(S_{} > -inf) is zero in the sample", j + 1)));
    }
    let mut g = Vec::with_capacity(n);
    let mut arg = Vec::with_capacity(n);
    let mut value = 0.0;
    let mut c = vec![0.0; d];
    for (i, r) in m.rows().enumerate() {
        let (k, gi) = (0..d)
            .map(|j| (j, y[j] * r[j].exp() / pi[j]))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        value += wn(i) * gi;
        c[k] -= wn(i) * gi / pi[k];
        g.push(gi);
        arg.push(k);
    }
    let var: f64 = m
        .rows()
        .enumerate()
        .map(|(i, r)| {
            let psi = g[i] - value + (0..d).map(|j| c[j] * (r[j].exp() - pi[j])).sum::<f64>();
            wn(i) * wn(i) * psi * psi
        })
        .sum();
    Ok(Estimate { value, se: var.sqrt() })
}

/// `(pi, l)` of a spectral law as GP parameters with the given margins.
pub fn gp_from_spectral(sigma: Vec<f64>, gamma: Vec<f64>, s: &SpectralLaw, n_mc: usize, seed: u64) -> Result<GpParams> {
    let (pi, ell) = extract_pi_ell(s, n_mc, seed)?;
    GpParams::new(sigma, gamma, pi, ell)
}

/// Standardized simulation: `Z = S + E` together with the `S` and `E` used.
#[derive(Debug, Clone)]
pub struct StdSimulation {
    pub z: Matrix,
    pub s: Matrix,
    pub e: Vec<f64>,
    pub ess: Option<f64>,
    pub warning: Option<String>,
}

pub fn simulate_std(s: &SpectralLaw, n: usize, seed: u64) -> Result<StdSimulation> {
    let SpectralSample { values: mut spec, ess, warning } = s.sample(n, seed)?;
    let mut rng = stream_rng(seed, stream::EXPONENTIAL);
    let mut z = Matrix::zeros(n, s.dim());
    let mut e = Vec::with_capacity(n);
    for i in 0..n {
        let ei = snap(Exp1.sample(&mut rng));
        for (zj, sj) in z.row_mut(i).iter_mut().zip(spec.row_mut(i)) {
            *sj = snap(*sj);
            *zj = *sj + ei;
        }
        e.push(ei);
    }
    Ok(StdSimulation { z, s: spec, e, ess, warning })
}

/// `X = sigma (e^(gamma (S + E)) - 1) / gamma`; atoms land on the lower
/// endpoints (`-sigma/gamma` or `-inf`).
pub fn simulate_gp(sigma: &[f64], gamma: &[f64], s: &SpectralLaw, n: usize, seed: u64) -> Result<SampleBatch> {
    let d = s.dim();
    check_dim(d, sigma.len())?;
    check_dim(d, gamma.len())?;
    if let Some(j) = sigma.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("sigma", format!("coordinate {j} is {}", sigma[j])));
    }
    if let Some(j) = gamma.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid("gamma", format!("coordinate {j} is {}", gamma[j])));
    }
    let sim = simulate_std(s, n, seed)?;
    let mut data = Matrix::zeros(n, d);
    for i in 0..n {
        data.row_mut(i).copy_from_slice(&unstandardize_with(sigma, gamma, sim.z.row(i)));
    }
    let spec = ModelSpec::Spectral {
        sigma: sigma.to_vec(),
        gamma: gamma.to_vec(),
        spectral: s.clone(),
    };
    Ok(SampleBatch {
        data,
        meta: BatchMeta {
            seed,
            n,
            d,
            representation: s.label().to_string(),
            params: serde_json::to_value(&spec)?,
            ess: sim.ess,
            warning: sim.warning,
        },
    })
}

fn check_point(d: usize, z: &[f64]) -> Result<()> {
    check_dim(d, z.len())?;
    if let Some(j) = z.iter().position(|v| v.is_nan()) {
        return Err(Error::Domain { coordinate: j, reason: "NaN".into() });
    }
    Ok(())
}

/// `H(z) = 1 - E[1 ∧ e^(max(T - z) - max T)]` for the standardized GP of a
/// T-kind generator.
pub fn cdf_t(g: &GeneratorLaw, z: &[f64], n_mc: usize, seed: u64) -> Result<Estimate> {
    g.require(GeneratorKind::T)?;
    g.validate()?;
    check_point(g.dim(), z)?;
    let draws = g.sample_matrix(n_mc, seed);
    let mut vals = Vec::with_capacity(n_mc);
    for (i, t) in draws.rows().enumerate() {
        let top = ext::max(t);
        if !top.is_finite() {
            return Err(Error::GeneratorContract(format!("draw {i} has max(T) = {top}")));
        }
        let q = t.iter().zip(z).map(|(a, b)| shift(*a, *b)).fold(NEG_INF, f64::max) - top;
        vals.push(1.0 - q.exp().min(1.0));
    }
    Ok(Estimate::mean(vals))
}

/// `H(z) = 1 - E[e^max(U) ∧ e^max(U - z)] / E[e^max(U)]`.
pub fn cdf_u(g: &GeneratorLaw, z: &[f64], n_mc: usize, seed: u64) -> Result<Estimate> {
    g.require(GeneratorKind::U)?;
    g.validate()?;
    check_point(g.dim(), z)?;
    let draws = g.sample_matrix(n_mc, seed);
    let tops: Vec<f64> = draws.rows().map(ext::max).collect();
    let overall = tops.iter().copied().fold(NEG_INF, f64::max);
    if !overall.is_finite() {
        return Err(Error::GeneratorContract(format!("max U = {overall} over the whole sample")));
    }
    let mut numer = Vec::with_capacity(n_mc);
    let mut denom = Vec::with_capacity(n_mc);
    for (u, top) in draws.rows().zip(&tops) {
        let a = (top - overall).exp();
        let b = (u.iter().zip(z).map(|(x, y)| shift(*x, *y)).fold(NEG_INF, f64::max) - overall).exp();
        numer.push(a - a.min(b));
        denom.push(a);
    }
    Ok(Estimate::ratio(&numer, &denom))
}

/// Cdf of `GPU(sigma, gamma, law(U))` with `U = log(gamma R / sigma) / gamma`,
/// evaluated through the R-side integrals
/// `int_0^inf Fbar_R(t^gamma c) dt = E[max_j (R_j / c_j)^(1/gamma_j)]`.
pub fn cdf_r(g: &GeneratorLaw, x: &[f64], n_mc: usize, seed: u64) -> Result<Estimate> {
    g.require(GeneratorKind::R)?;
    g.validate()?;
    check_point(g.dim(), x)?;
    let GeneratorLaw::R { sigma, gamma, .. } = g else { unreachable!() };
    let d = g.dim();
    for j in 0..d {
        if !(sigma[j] + gamma[j] * x[j] > 0.0) {
            return Err(Error::Domain {
                coordinate: j,
                reason: format!("sigma + gamma x = {} is not positive", sigma[j] + gamma[j] * x[j]),
            });
        }
    }
    let c0: Vec<f64> = (0..d).map(|j| sigma[j] / gamma[j]).collect();
    let c_lo: Vec<f64> = (0..d).map(|j| x[j].min(0.0) + c0[j]).collect();
    let c_x: Vec<f64> = (0..d).map(|j| x[j] + c0[j]).collect();
    let integrand = |r: &[f64], c: &[f64]| -> f64 {
        (0..d).map(|j| (r[j] / c[j]).powf(1.0 / gamma[j])).fold(0.0, f64::max)
    };
    let draws = g.sample_matrix(n_mc, seed);
    let mut numer = Vec::with_capacity(n_mc);
    let mut denom = Vec::with_capacity(n_mc);
    for (i, r) in draws.rows().enumerate() {
        if let Some(v) = r.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::GeneratorContract(format!("R draw {i} has negative coordinate {v}")));
        }
        numer.push(integrand(r, &c_lo) - integrand(r, &c_x));
        denom.push(integrand(r, &c0));
    }
    Ok(Estimate::ratio(&numer, &denom))
}

/// `pi_j = E[e^U_j] / E[e^max(U)]` by direct Monte Carlo over `U`.
pub fn pi_from_u(g: &GeneratorLaw, n_mc: usize, seed: u64) -> Result<Vec<Estimate>> {
    g.require(GeneratorKind::U)?;
    g.validate()?;
    let draws = g.sample_matrix(n_mc, seed);
    let denom: Vec<f64> = draws.rows().map(|u| ext::max(u).exp()).collect();
    Ok((0..g.dim())
        .map(|j| {
            let numer: Vec<f64> = draws.column(j).map(f64::exp).collect();
            Estimate::ratio(&numer, &denom)
        })
        .collect())
}

/// A complete GP model: margins plus either `(pi, l)` or a spectral law.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "snake_case")]
pub enum ModelSpec {
    PiEll(GpParams),
    Spectral {
        sigma: Vec<f64>,
        gamma: Vec<f64>,
        spectral: SpectralLaw,
    },
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::PiEll(h) => h.dim(),
            Self::Spectral { spectral, .. } => spectral.dim(),
        }
    }

    pub fn sigma(&self) -> &[f64] {
        match self {
            Self::PiEll(h) => h.sigma(),
            Self::Spectral { sigma, .. } => sigma,
        }
    }

    pub fn gamma(&self) -> &[f64] {
        match self {
            Self::PiEll(h) => h.gamma(),
            Self::Spectral { gamma, .. } => gamma,
        }
    }

    pub fn spectral_law(&self) -> SpectralLaw {
        match self {
            Self::PiEll(h) => SpectralLaw::FromStdf { pi: h.pi().to_vec(), ell: h.ell().clone() },
            Self::Spectral { spectral, .. } => spectral.clone(),
        }
    }

    /// `(pi, l)` parameters; extracted by Monte Carlo for spectral models.
    pub fn gp_params(&self, n_mc: usize, seed: u64) -> Result<GpParams> {
        match self {
            Self::PiEll(h) => Ok(h.clone()),
            Self::Spectral { sigma, gamma, spectral } => {
                gp_from_spectral(sigma.clone(), gamma.clone(), spectral, n_mc, seed)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PiEll(_) => Ok(()),
            Self::Spectral { sigma, gamma, spectral } => {
                check_dim(spectral.dim(), sigma.len())?;
                check_dim(spectral.dim(), gamma.len())?;
                spectral.validate()
            }
        }
    }

    pub fn simulate(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        self.validate()?;
        simulate_gp(self.sigma(), self.gamma(), &self.spectral_law(), n, seed)
    }
}
