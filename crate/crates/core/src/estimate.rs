use serde::{Deserialize, Serialize};

/// A Monte Carlo (or exact) value together with its standard error.
///
/// Exact closed-form results carry `se = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }

    /// Sample mean and its standard error.
    pub fn mean<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for v in values {
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
        if n < 2 {
            return Self { value: mean, se: f64::INFINITY };
        }
        let var = m2 / (n - 1) as f64;
        Self {
            value: mean,
            se: (var / n as f64).sqrt(),
        }
    }

    /// Self-normalized weighted mean `sum w_i f_i / sum w_i` with the usual
    /// delta-method standard error.
    pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let value = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
        let var: f64 = values
            .iter()
            .zip(weights)
            .map(|(v, w)| {
                let wn = w / total;
                wn * wn * (v - value) * (v - value)
            })
            .sum();
        Self { value, se: var.sqrt() }
    }

    /// Ratio of means `mean(a) / mean(b)` over paired draws, delta-method SE.
    pub fn ratio(numer: &[f64], denom: &[f64]) -> Self {
        let n = numer.len() as f64;
        let ma = numer.iter().sum::<f64>() / n;
        let mb = denom.iter().sum::<f64>() / n;
        let r = ma / mb;
        let var = numer
            .iter()
            .zip(denom)
            .map(|(a, b)| {
                let e = a - r * b;
                e * e
            })
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        Self {
            value: r,
            se: (var / n).sqrt() / mb,
        }
    }

    /// Whether `other` lies within `k` combined standard errors of `self`,
    /// plus an absolute slack.
    pub fn agrees_with(&self, other: &Estimate, k: f64, slack: f64) -> bool {
        let combined = (self.se * self.se + other.se * other.se).sqrt();
        (self.value - other.value).abs() <= k * combined + slack
    }
}
