//! Arithmetic on the extended half-line `[-inf, inf)`.
//!
//! Coordinates of spectral and generator vectors may sit at `-inf` with
//! positive probability. IEEE negative infinity is used as the sentinel; the
//! helpers below pin down the few operations where IEEE semantics differ from
//! the conventions needed here (chiefly `0 * (-inf) = 0`).

/// The atom sentinel.
pub const NEG_INF: f64 = f64::NEG_INFINITY;

/// Shape parameters with `|gamma| < GAMMA_ZERO_TOL` use the `gamma = 0` limit.
pub const GAMMA_ZERO_TOL: f64 = 1e-12;

#[inline]
pub fn is_atom(x: f64) -> bool {
    x == NEG_INF
}

#[inline]
pub fn is_gamma_zero(gamma: f64) -> bool {
    gamma.abs() < GAMMA_ZERO_TOL
}

/// `coef * x` with `0 * (+-inf) = 0`.
#[inline]
pub fn mul(coef: f64, x: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * x
    }
}

/// `sum_j coef_j * x_j` under the `0 * (-inf) = 0` convention.
pub fn weighted_sum(coefs: &[f64], xs: &[f64]) -> f64 {
    coefs.iter().zip(xs).map(|(&c, &x)| mul(c, x)).sum()
}

/// Maximum of a slice; `-inf` for an empty slice or all-atom input.
#[inline]
pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(NEG_INF, f64::max)
}

#[inline]
pub fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `(exp(gamma * z) - 1) / gamma`, read as `z` at `gamma = 0`.
///
/// Maps `z = -inf` to `-1/gamma` for `gamma > 0` and to `-inf` otherwise.
#[inline]
pub fn box_cox_inv(z: f64, gamma: f64) -> f64 {
    if is_gamma_zero(gamma) {
        z
    } else if is_atom(z) {
        if gamma > 0.0 {
            -1.0 / gamma
        } else {
            NEG_INF
        }
    } else {
        (gamma * z).exp_m1() / gamma
    }
}

/// `log(1 + gamma * x) / gamma`, read as `x` at `gamma = 0`.
///
/// Returns `-inf` at the lower boundary `1 + gamma * x = 0` and `NaN` below it.
#[inline]
pub fn box_cox(x: f64, gamma: f64) -> f64 {
    if is_gamma_zero(gamma) {
        x
    } else {
        (gamma * x).ln_1p() / gamma
    }
}

/// Generalized Pareto tail `(1 + gamma * x)^(-1/gamma)` (`exp(-x)` at `gamma = 0`).
///
/// At and beyond the upper endpoint of a negative shape the tail is `0`; at the
/// lower boundary of a positive shape it is `+inf`.
#[inline]
pub fn gp_tail(x: f64, gamma: f64) -> f64 {
    if is_gamma_zero(gamma) {
        return (-x).exp();
    }
    let arg = 1.0 + gamma * x;
    if arg <= 0.0 {
        return if gamma < 0.0 { 0.0 } else { f64::INFINITY };
    }
    (-(gamma * x).ln_1p() / gamma).exp()
}


/// Serde adapter for `Vec<f64>` that writes non-finite values as the strings
/// `"-inf"`, `"inf"` and `"nan"` (JSON has no representation for them).
pub mod serde_vec {
    use serde::de::{self, Deserializer};
    use serde::ser::{SerializeSeq, Serializer};
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }

    pub fn to_token(x: f64) -> Option<&'static str> {
        if x == f64::NEG_INFINITY {
            Some("-inf")
        } else if x == f64::INFINITY {
            Some("inf")
        } else if x.is_nan() {
            Some("nan")
        } else {
            None
        }
    }

    pub fn from_token(s: &str) -> Option<f64> {
        match s.trim().to_ascii_lowercase().as_str() {
            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
            "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
            "nan" => Some(f64::NAN),
            other => other.parse().ok(),
        }
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            match to_token(x) {
                Some(t) => seq.serialize_element(t)?,
                None => seq.serialize_element(&x)?,
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Num> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|n| match n {
                Num::F(x) => Ok(x),
                Num::S(s) => from_token(&s).ok_or_else(|| de::Error::custom(format!("not a number: `{s}`"))),
            })
            .collect()
    }
}
