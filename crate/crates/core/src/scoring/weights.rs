//! Weight functions for threshold- and quantile-weighted scores.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{std_normal_cdf, std_normal_pdf};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    Uniform,
    Center,
    Tails,
    RightTail,
    LeftTail,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 5] = [
        WeightScheme::Uniform,
        WeightScheme::Center,
        WeightScheme::Tails,
        WeightScheme::RightTail,
        WeightScheme::LeftTail,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::Center => "center",
            WeightScheme::Tails => "tails",
            WeightScheme::RightTail => "right-tail",
            WeightScheme::LeftTail => "left-tail",
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        WeightScheme::ALL
            .into_iter()
            .find(|w| w.name() == norm)
            .ok_or_else(|| {
                Error::domain(format!(
                    "unknown weight scheme '{s}' (expected uniform, center, tails, right-tail, left-tail)"
                ))
            })
    }
}

/// Weight w(x) on the outcome axis.
pub fn threshold_weight(scheme: WeightScheme, x: f64) -> f64 {
    match scheme {
        WeightScheme::Uniform => 1.0,
        WeightScheme::Center => std_normal_pdf(x),
        WeightScheme::Tails => 1.0 - (-0.5 * x * x).exp(),
        WeightScheme::RightTail => std_normal_cdf(x),
        WeightScheme::LeftTail => std_normal_cdf(-x),
    }
}

/// Weight v(alpha) on the probability axis.
pub fn quantile_weight(scheme: WeightScheme, alpha: f64) -> f64 {
    match scheme {
        WeightScheme::Uniform => 1.0,
        WeightScheme::Center => alpha * (1.0 - alpha),
        WeightScheme::Tails => (2.0 * alpha - 1.0).powi(2),
        WeightScheme::RightTail => alpha * alpha,
        WeightScheme::LeftTail => (1.0 - alpha).powi(2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn threshold_examples() {
        assert_abs_diff_eq!(threshold_weight(WeightScheme::Tails, 0.0), 0.0);
        assert_abs_diff_eq!(
            threshold_weight(WeightScheme::RightTail, 0.0),
            0.5,
            epsilon = 1e-15
        );
        for x in [-3.0, 0.0, 7.5] {
            assert_eq!(threshold_weight(WeightScheme::Uniform, x), 1.0);
        }
        // 1 - phi(x)/phi(0)
        let x: f64 = 1.3;
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(
            threshold_weight(WeightScheme::Tails, x),
            1.0 - std_normal_pdf(x) / phi0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            threshold_weight(WeightScheme::LeftTail, x)
                + threshold_weight(WeightScheme::RightTail, x),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn quantile_examples() {
        assert_abs_diff_eq!(quantile_weight(WeightScheme::Center, 0.5), 0.25);
        assert_abs_diff_eq!(quantile_weight(WeightScheme::Tails, 0.5), 0.0);
        assert_abs_diff_eq!(quantile_weight(WeightScheme::LeftTail, 1.0), 0.0);
        assert_abs_diff_eq!(
            quantile_weight(WeightScheme::RightTail, 0.3),
            0.09,
            epsilon = 1e-15
        );
    }

    #[test]
    fn weights_nonnegative() {
        for s in WeightScheme::ALL {
            for i in -100..=100 {
                assert!(threshold_weight(s, i as f64 * 0.1) >= 0.0);
            }
            for i in 0..=100 {
                assert!(quantile_weight(s, i as f64 / 100.0) >= 0.0);
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "right_tail".parse::<WeightScheme>().unwrap(),
            WeightScheme::RightTail
        );
        assert_eq!(
            "Center".parse::<WeightScheme>().unwrap(),
            WeightScheme::Center
        );
        assert!("middle".parse::<WeightScheme>().is_err());
    }
}
