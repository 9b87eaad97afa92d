//! Adaptive Gauss-Kronrod (7-15) quadrature.
//!
//! Infinite ranges are mapped onto `[0, 1)` with `r = m + s t / (1 - t)`
//! around a split point `m`, so nothing is truncated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

impl QuadConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    let value = k * h;
    let mut error = ((k - g) * h).abs();
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Piece { a, b, value, error }
}

/// Integrates `f` over `[points[0], points[last]]`, treating interior points
/// as breakpoints. Each initial piece is cut into `initial` equal parts.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    initial: usize,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let m = initial.max(1);
        for i in 0..m {
            let lo = a + (b - a) * i as f64 / m as f64;
            let hi = if i + 1 == m { b } else { a + (b - a) * (i + 1) as f64 / m as f64 };
            heap.push(gk15(&mut f, lo, hi));
            evaluations += 15;
        }
    }
    let totals = |heap: &BinaryHeap<Piece>| -> (f64, f64) {
        heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };
    let (mut value, mut error) = totals(&heap);
    let mut splits = 0;
    while error > cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
        if splits >= cfg.max_subdivisions {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature".into(),
                estimate: value,
                error,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval exhausted at machine precision; keep its estimate
            heap.push(Piece { error: 0.0, ..worst });
            (value, error) = totals(&heap);
            splits += 1;
            continue;
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
        if splits % 64 == 0 {
            // refresh running sums against drift
            (value, error) = totals(&heap);
        }
    }
    (value, error) = totals(&heap);
    if !value.is_finite() {
        return Err(Error::NonConvergence { what: "adaptive quadrature".into(), estimate: value, error });
    }
    Ok(QuadResult { value, error, evaluations })
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    integrate_pieces(f, &[a, b], 1, cfg)
}

/// `int_R f(r) dr`, split at `center` with length scale `scale`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(
    mut f: F,
    center: f64,
    scale: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    // t in (-1, 1): r = center + scale * t / (1 - |t|), dr = scale / (1 - |t|)^2
    let g = |t: f64| {
        let u = 1.0 - t.abs();
        if u <= 0.0 {
            return 0.0;
        }
        let v = f(center + scale * t / u);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (u * u)
        }
    };
    integrate_pieces(g, &[-1.0, 0.0, 1.0], 16, cfg)
}

/// Locates the maximizer of `logf` and a length scale over which it drops by
/// one unit, by a coarse symmetric scan followed by golden-section search.
pub fn locate_peak<F: Fn(f64) -> f64>(logf: F) -> Option<(f64, f64, f64)> {
    let mut grid = vec![0.0];
    for k in -8..=11 {
        let r = 2f64.powi(k);
        grid.push(r);
        grid.push(-r);
        grid.push(1.5 * r);
        grid.push(-1.5 * r);
    }
    grid.sort_by(f64::total_cmp);
    let vals: Vec<f64> = grid.iter().map(|r| logf(*r)).collect();
    let (ibest, &best) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if best == f64::NEG_INFINITY {
        return None;
    }
    let mut lo = grid[ibest.saturating_sub(1)];
    let mut hi = grid[(ibest + 1).min(grid.len() - 1)];
    // golden-section search on [lo, hi]
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (logf(x1), logf(x2));
    for _ in 0..80 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = logf(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = logf(x2);
        }
        if hi - lo < 1e-10 * (1.0 + lo.abs()) {
            break;
        }
    }
    let (mut m, mut peak) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if best > peak {
        m = grid[ibest];
        peak = best;
    }
    let mut scale = f64::INFINITY;
    for dir in [-1.0, 1.0] {
        let mut s = 1.0;
        if logf(m + dir * s) < peak - 1.0 {
            while s > 1e-8 && logf(m + dir * s) < peak - 1.0 {
                s *= 0.5;
            }
        } else {
            while s < 1e8 && logf(m + dir * s) >= peak - 1.0 {
                s *= 2.0;
            }
        }
        scale = scale.min(s);
    }
    Some((m, peak, scale))
}

/// `int_R exp(logf(r)) dr` computed as `e^peak int exp(logf - peak)`, split at
/// the peak of `logf`.
pub fn integrate_exp_real_line<F: Fn(f64) -> f64>(logf: F, cfg: &QuadConfig) -> Result<QuadResult> {
    let Some((m, peak, scale)) = locate_peak(&logf) else {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    };
    let r = integrate_real_line(|x| (logf(x) - peak).exp(), m, scale, cfg)?;
    let factor = peak.exp();
    Ok(QuadResult { value: r.value * factor, error: r.error * factor, evaluations: r.evaluations })
}
