//! Brute-force checks of analytic quantities against simulated batches and
//! numerical integration.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::batch::SampleBatch;
use crate::error::{check_dim, Error, Result};
use crate::matrix::Matrix;
use crate::params::GpParams;
use crate::quad::{integrate_pieces, QuadConfig};

/// Standard errors allowed for binomial and delta-method checks.
pub const SIGMA_LEVEL: f64 = 3.0;

/// Asymptotic 1% critical value of `sqrt(n) D_n`.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub statistic: String,
    pub analytic: f64,
    pub empirical: f64,
    /// Standard error, or `None` for critical-value checks.
    pub se: Option<f64>,
    /// Largest accepted `|analytic - empirical|`.
    pub tolerance: f64,
    pub pass: bool,
    pub n: usize,
    pub seed: Option<u64>,
}

impl ComparisonReport {
    /// Passes when `|analytic - empirical| <= k se`.
    pub fn with_se(statistic: impl Into<String>, analytic: f64, empirical: f64, se: f64, k: f64, n: usize) -> Self {
        let tolerance = k * se;
        Self {
            statistic: statistic.into(),
            analytic,
            empirical,
            se: Some(se),
            tolerance,
            pass: (analytic - empirical).abs() <= tolerance,
            n,
            seed: None,
        }
    }

    /// Passes when `|analytic - empirical| <= tolerance`.
    pub fn with_tolerance(statistic: impl Into<String>, analytic: f64, empirical: f64, tolerance: f64, n: usize) -> Self {
        Self {
            statistic: statistic.into(),
            analytic,
            empirical,
            se: None,
            tolerance,
            pass: (analytic - empirical).abs() <= tolerance,
            n,
            seed: None,
        }
    }

    pub fn seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }
}

fn check_batch(data: &Matrix, d: usize) -> Result<()> {
    check_dim(d, data.ncols())?;
    if data.nrows() == 0 {
        return Err(Error::EmptyInput("batch has no rows".into()));
    }
    Ok(())
}

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}

/// Empirical `P(X <= x)` against `H(x)` with binomial standard error.
pub fn check_cdf(batch: &SampleBatch, h: &GpParams, grid: &[Vec<f64>]) -> Result<Vec<ComparisonReport>> {
    let data = &batch.data;
    check_batch(data, h.dim())?;
    let n = data.nrows();
    grid.iter()
        .map(|x| {
            let analytic = h.cdf(x)?;
            let hits = data.rows().filter(|r| r.iter().zip(x).all(|(a, b)| a <= b)).count();
            let se = (analytic * (1.0 - analytic) / n as f64).sqrt();
            Ok(ComparisonReport::with_se(
                format!("cdf{}", fmt_point(x)),
                analytic,
                hits as f64 / n as f64,
                se,
                SIGMA_LEVEL,
                n,
            )
            .seed(Some(batch.meta.seed)))
        })
        .collect()
}

/// Empirical `P(X not <= x)` against `l` applied to the empirical marginal
/// survivals, with a delta-method standard error for the difference.
pub fn check_stdf(batch: &SampleBatch, h: &GpParams, grid: &[Vec<f64>]) -> Result<Vec<ComparisonReport>> {
    let data = &batch.data;
    let d = h.dim();
    check_batch(data, d)?;
    let n = data.nrows();
    let nf = n as f64;
    grid.iter()
        .map(|x| {
            check_dim(d, x.len())?;
            if let Some(index) = x.iter().position(|v| !(*v >= 0.0)) {
                return Err(Error::NegativeArgument { index, value: x[index] });
            }
            let mut margins = vec![0usize; d];
            let mut any = 0usize;
            for row in data.rows() {
                let mut hit = false;
                for j in 0..d {
                    if row[j] > x[j] {
                        margins[j] += 1;
                        hit = true;
                    }
                }
                any += hit as usize;
            }
            let y: Vec<f64> = margins.iter().map(|m| *m as f64 / nf).collect();
            let analytic = h.ell().eval(&y)?;
            let grad = numerical_gradient(|v| h.ell().eval(v).unwrap_or(f64::NAN), &y);
            // influence of each row on P(any) - l(margins)
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for row in data.rows() {
                let mut psi = 0.0;
                let mut hit = false;
                for j in 0..d {
                    if row[j] > x[j] {
                        hit = true;
                        psi -= grad[j];
                    }
                }
                if hit {
                    psi += 1.0;
                }
                s1 += psi;
                s2 += psi * psi;
            }
            let var = (s2 / nf - (s1 / nf).powi(2)).max(0.0);
            Ok(ComparisonReport::with_se(
                format!("stdf{}", fmt_point(x)),
                analytic,
                any as f64 / nf,
                (var / nf).sqrt(),
                SIGMA_LEVEL,
                n,
            )
            .seed(Some(batch.meta.seed)))
        })
        .collect()
}

fn numerical_gradient<F: Fn(&[f64]) -> f64>(f: F, y: &[f64]) -> Vec<f64> {
    let mut p = y.to_vec();
    (0..y.len())
        .map(|j| {
            let h = 1e-6 * y[j].max(1e-3);
            let lo = (y[j] - h).max(0.0);
            let hi = y[j] + h;
            p[j] = hi;
            let fh = f(&p);
            p[j] = lo;
            let fl = f(&p);
            p[j] = y[j];
            (fh - fl) / (hi - lo)
        })
        .collect()
}

/// Empirical extremal coefficient `P(exists j: P(X_j > x)|_{x = X_j} < p) / p`
/// against `l(1, ..., 1)`.
pub fn check_extremal(batch: &SampleBatch, h: &GpParams, p: f64) -> Result<ComparisonReport> {
    let data = &batch.data;
    check_batch(data, h.dim())?;
    let row = crate::analysis::diagnose(data, h, &[p])?[0];
    let n = data.nrows();
    let q = row.predicted;
    let se = (q * (1.0 - q) / n as f64).sqrt() / p;
    Ok(
        ComparisonReport::with_se(format!("extremal(p = {p})"), q / p, row.ratio, se, SIGMA_LEVEL, n)
            .seed(Some(batch.meta.seed)),
    )
}

/// Kolmogorov-Smirnov distance between the sample and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS test at the 1% level.
pub fn check_ks<F: Fn(f64) -> f64>(statistic: impl Into<String>, sample: &[f64], cdf: F) -> Result<ComparisonReport> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("KS sample".into()));
    }
    let n = sample.len();
    let d = ks_statistic(sample, cdf);
    Ok(ComparisonReport::with_tolerance(
        statistic,
        0.0,
        d,
        KS_CRITICAL_1PCT / (n as f64).sqrt(),
        n,
    ))
}

/// Quadrature estimate of the mass of a density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassReport {
    /// Integral over the exceedance part of the box.
    pub mass: f64,
    /// Quadrature error estimate.
    pub error: f64,
    /// Bound on the mass outside the box above its upper corner.
    pub tail_bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Integrates a standardized density over `{z not <= 0}` within the box
/// `[lo, hi]` (`d <= 3`) by nested adaptive quadrature, with breakpoints at
/// 0 and along the diagonals where `max z` changes its argmax.
///
/// The upper tail outside the box is bounded by `sum_j e^-hi_j` (the
/// standardized margins have tails `pi_j e^-z`); the lower box edge must be
/// chosen low enough for the mass below it to be negligible. Fails when the
/// quadrature error estimate exceeds `tol`.
pub fn check_density<F: Fn(&[f64]) -> Result<f64>>(
    density: F,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    cfg: &QuadConfig,
) -> Result<MassReport> {
    check_density_with_offsets(density, lo, hi, &[], tol, cfg)
}

/// As [`check_density`], with extra breakpoints at `z_k + c` for every outer
/// coordinate `z_k` and offset `c`. Densities with jumps along shifted
/// diagonals (spectral laws with bounded support) need these; without them
/// a thin slice of support can fall between the first quadrature nodes.
pub fn check_density_with_offsets<F: Fn(&[f64]) -> Result<f64>>(
    density: F,
    lo: &[f64],
    hi: &[f64],
    offsets: &[f64],
    tol: f64,
    cfg: &QuadConfig,
) -> Result<MassReport> {
    let d = lo.len();
    check_dim(d, hi.len())?;
    if !(1..=3).contains(&d) {
        return Err(Error::Unsupported(format!("mass checks need 1 <= d <= 3, got {d}")));
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a < b) || *b <= 0.0) {
        return Err(Error::invalid("box", "needs lo < hi and hi > 0 in every coordinate"));
    }
    let mut failure: Option<Error> = None;
    let mut point = vec![0.0; d];
    let (mass, error) = nested(&density, lo, hi, offsets, 0, &mut point, cfg, &mut failure);
    if let Some(e) = failure {
        return Err(e);
    }
    if error > tol {
        return Err(Error::NonConvergence {
            what: "density mass quadrature".into(),
            estimate: mass,
            error,
        });
    }
    let tail_bound: f64 = hi.iter().map(|h| (-h).exp()).sum();
    Ok(MassReport {
        mass,
        error,
        tail_bound,
        tolerance: tol,
        pass: mass <= 1.0 + tol && mass >= 1.0 - tol - tail_bound,
    })
}

fn breakpoints(lo: f64, hi: f64, fixed: &[f64], offsets: &[f64]) -> Vec<f64> {
    let mut pts = vec![lo, hi, 0.0];
    for z in fixed {
        pts.push(*z);
        pts.extend(offsets.iter().map(|c| z + c));
    }
    pts.retain(|p| *p >= lo && *p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn nested<F: Fn(&[f64]) -> Result<f64>>(
    density: &F,
    lo: &[f64],
    hi: &[f64],
    offsets: &[f64],
    k: usize,
    point: &mut Vec<f64>,
    cfg: &QuadConfig,
    failure: &mut Option<Error>,
) -> (f64, f64) {
    let d = lo.len();
    let outer = point[..k].to_vec();
    let pts = breakpoints(lo[k], hi[k], &outer, offsets);
    let mut inner_error = 0.0f64;
    let res = integrate_pieces(
        |t| {
            if failure.is_some() {
                return 0.0;
            }
            point[k] = t;
            if k + 1 == d {
                if point.iter().all(|v| *v <= 0.0) {
                    return 0.0;
                }
                match density(point) {
                    Ok(v) => v,
                    Err(e) => {
                        *failure = Some(e);
                        0.0
                    }
                }
            } else {
                let (v, e) = nested(density, lo, hi, offsets, k + 1, point, cfg, failure);
                inner_error = inner_error.max(e);
                v
            }
        },
        &pts,
        2,
        cfg,
    );
    match res {
        Ok(r) => {
            let width = hi[k] - lo[k];
            (r.value, r.error + inner_error * width)
        }
        Err(e) => {
            if failure.is_none() {
                *failure = Some(e);
            }
            (0.0, f64::INFINITY)
        }
    }
}

/// One JSON object per line.
pub fn to_json_lines(reports: &[ComparisonReport]) -> Result<String> {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Aligned human-readable table.
pub fn to_table(reports: &[ComparisonReport]) -> String {
    let width = reports.iter().map(|r| r.statistic.len()).max().unwrap_or(9).max(9);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>12}  {:>12}  {:>10}  {:>8}  {}",
        "statistic", "analytic", "empirical", "tolerance", "n", "result"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>12.6}  {:>12.6}  {:>10.3e}  {:>8}  {}",
            r.statistic,
            r.analytic,
            r.empirical,
            r.tolerance,
            r.n,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::ModelSpec;
    use crate::stdf::StdfModel;

    fn batch(h: &GpParams, n: usize, seed: u64) -> SampleBatch {
        ModelSpec::PiEll(h.clone()).simulate(n, seed).unwrap()
    }

    #[test]
    fn cdf_checks() {
        let h = GpParams::new(vec![1.0; 2], vec![0.0; 2], vec![1.0; 2], StdfModel::complete_dependence(2).unwrap())
            .unwrap();
        let b = batch(&h, 200_000, 1);
        let reports = check_cdf(&b, &h, &[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!((reports[0].analytic - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
        assert_eq!(reports[1].empirical, 0.0);
        assert_eq!(reports[0].seed, Some(1));

        let h = GpParams::new(vec![1.0; 2], vec![0.0; 2], vec![0.5; 2], StdfModel::independence(2).unwrap()).unwrap();
        let b = batch(&h, 200_000, 2);
        let l2 = 2f64.ln();
        let r = &check_cdf(&b, &h, &[vec![l2, l2]]).unwrap()[0];
        assert!((r.analytic - 0.5).abs() < 1e-14);
        assert!(r.pass, "{r:?}");
        let empty = SampleBatch { data: Matrix::zeros(0, 2), meta: b.meta.clone() };
        assert!(matches!(check_cdf(&empty, &h, &[vec![0.0, 0.0]]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn stdf_checks() {
        let h = GpParams::from_tau(vec![1.0, 2.0], vec![0.2, 0.0], vec![1.0, 1.0], StdfModel::logistic(2, 0.5).unwrap())
            .unwrap();
        let b = batch(&h, 100_000, 3);
        let reports = check_stdf(&b, &h, &[vec![0.0, 0.0], vec![0.5, 1.0]]).unwrap();
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
        assert_eq!(reports[0].empirical, 1.0);
        let r = check_extremal(&b, &h, 0.1).unwrap();
        assert!((r.analytic - 2f64.sqrt()).abs() < 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn ks() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!((ks_statistic(&xs, |x| x) - 0.0005).abs() < 1e-12);
        assert!(check_ks("uniform", &xs, |x| x).unwrap().pass);
        assert!(!check_ks("skewed", &xs, |x| x * x).unwrap().pass);
    }

    #[test]
    fn mass_of_exponential_face() {
        // shifted iid exponentials conditioned on z not <= 0
        let f = |z: &[f64]| -> Result<f64> {
            if z.iter().all(|v| *v <= 0.0) {
                return Ok(0.0);
            }
            let inside = z.iter().all(|v| *v >= -1.0);
            Ok(if inside { (-(z[0] + 1.0) - (z[1] + 1.0)).exp() / (1.0 - (1.0 - (-1.0f64).exp()).powi(2)) } else { 0.0 })
        };
        let r = check_density(f, &[-1.0, -1.0], &[30.0, 30.0], 1e-3, &QuadConfig::with_tolerances(1e-8, 1e-10)).unwrap();
        assert!((r.mass - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.pass);
        assert!(check_density(f, &[-1.0; 4], &[1.0; 4], 1e-3, &QuadConfig::default()).is_err());
    }

    #[test]
    fn output_formats() {
        let r = vec![ComparisonReport::with_se("x", 0.5, 0.51, 0.01, 3.0, 100).seed(Some(7))];
        let lines = to_json_lines(&r).unwrap();
        let back: ComparisonReport = serde_json::from_str(lines.trim()).unwrap();
        assert_eq!(back, r[0]);
        let table = to_table(&r);
        assert!(table.contains("PASS") && table.lines().count() == 2);
    }
}
