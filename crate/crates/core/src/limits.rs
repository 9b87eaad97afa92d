//! One-sided limits `lim_{eps -> 0+} f(eps)` along `eps = 2^-k`.

use crate::error::{Error, Result};

pub const FIRST_K: i32 = 4;
pub const LAST_K: i32 = 20;
pub const LIMIT_TOL: f64 = 1e-6;

/// Aitken delta-squared extrapolation of three successive terms.
fn aitken(g0: f64, g1: f64, g2: f64) -> f64 {
    let denom = g2 - 2.0 * g1 + g0;
    let scale = g0.abs().max(g1.abs()).max(g2.abs()).max(1e-300);
    if denom.abs() <= 1e-13 * scale {
        return g2;
    }
    g2 - (g2 - g1) * (g2 - g1) / denom
}

/// Evaluates `f(2^-k)` for `k = FIRST_K..=LAST_K`, accelerates the sequence
/// with Aitken's delta-squared and stops once two successive accelerated
/// iterates differ by less than `LIMIT_TOL`.
pub fn limit_at_zero<F: FnMut(f64) -> f64>(what: &str, mut f: F) -> Result<f64> {
    let mut raw: Vec<f64> = Vec::new();
    let mut prev_acc: Option<f64> = None;
    let mut last = f64::NAN;
    for k in FIRST_K..=LAST_K {
        let v = f((-k as f64).exp2());
        if !v.is_finite() {
            return Err(Error::NonConvergence {
                what: what.into(),
                estimate: v,
                error: f64::INFINITY,
            });
        }
        raw.push(v);
        let n = raw.len();
        if n < 3 {
            continue;
        }
        let acc = aitken(raw[n - 3], raw[n - 2], raw[n - 1]);
        if let Some(p) = prev_acc {
            if (acc - p).abs() < LIMIT_TOL {
                return Ok(acc);
            }
            last = (acc - p).abs();
        }
        prev_acc = Some(acc);
    }
    Err(Error::NonConvergence {
        what: what.into(),
        estimate: prev_acc.unwrap_or(f64::NAN),
        error: last,
    })
}
