//! Gauss-Legendre rules and truncation grids.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};

/// Default number of nodes per side of the observation.
pub const DEFAULT_NODES: usize = 128;

#[derive(Debug)]
pub(crate) struct ReferenceRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights on [-1, 1], ascending. Roots of P_n are found by Newton
/// iteration on the three-term recurrence.
fn legendre_reference(n: usize) -> ReferenceRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        if n > 1 {
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    ReferenceRule { nodes, weights }
}

pub(crate) fn reference_rule(n: usize) -> Arc<ReferenceRule> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<ReferenceRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.read().expect("rule cache poisoned").get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(legendre_reference(n));
    cache
        .write()
        .expect("rule cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

/// `n`-point Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::domain("Gauss-Legendre rule needs at least one node"));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::domain(format!("invalid interval [{a}, {b}]")));
    }
    let rule = reference_rule(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let nodes = rule.nodes.iter().map(|x| mid + half * x).collect();
    let weights = rule.weights.iter().map(|w| half * w).collect();
    Ok((nodes, weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    #[default]
    GaussLegendre,
}

/// Truncation bounds plus quadrature resolution.
///
/// Raw ACPS values grow with `u_max - u_min`; only compare scores computed on
/// the same grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub u_min: f64,
    pub u_max: f64,
    pub nodes_per_side: usize,
    #[serde(default)]
    pub rule: QuadratureRule,
}

impl QuadratureGrid {
    pub fn new(u_min: f64, u_max: f64, nodes_per_side: usize) -> Result<Self> {
        let g = QuadratureGrid {
            u_min,
            u_max,
            nodes_per_side,
            rule: QuadratureRule::GaussLegendre,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_min.is_finite() && self.u_max.is_finite() && self.u_min < self.u_max) {
            return Err(Error::domain(format!(
                "grid bounds must be finite with u_min < u_max, got [{}, {}]",
                self.u_min, self.u_max
            )));
        }
        if self.nodes_per_side < 8 {
            return Err(Error::domain(format!(
                "nodes per side must be at least 8, got {}",
                self.nodes_per_side
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    /// Default bounds for one forecast and observation:
    /// `[min(y, q(0.001)) - m, max(y, q(0.999)) + m]` with `m = (q(0.999) - q(0.001)) / 2`.
    pub fn for_forecast(
        forecast: &PredictiveDistribution,
        y: f64,
        nodes_per_side: usize,
    ) -> Result<Self> {
        Self::shared(
            std::slice::from_ref(forecast),
            std::slice::from_ref(&y),
            nodes_per_side,
        )
    }

    /// One grid covering every forecast's central 99.8% range and every observation.
    pub fn shared(
        forecasts: &[PredictiveDistribution],
        ys: &[f64],
        nodes_per_side: usize,
    ) -> Result<Self> {
        Self::shared_refs(forecasts.iter(), ys, nodes_per_side)
    }

    pub fn shared_refs<'a>(
        forecasts: impl IntoIterator<Item = &'a PredictiveDistribution>,
        ys: &[f64],
        nodes_per_side: usize,
    ) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in forecasts {
            lo = lo.min(f.quantile_unchecked(0.001));
            hi = hi.max(f.quantile_unchecked(0.999));
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain("shared grid needs at least one forecast"));
        }
        let mut margin = 0.5 * (hi - lo);
        for &y in ys {
            if !y.is_finite() {
                return Err(Error::domain(format!("non-finite observation {y}")));
            }
            lo = lo.min(y);
            hi = hi.max(y);
        }
        if margin <= 0.0 {
            // degenerate forecast (all mass on one point)
            margin = 0.5 * (hi - lo).max(1.0);
        }
        Self::new(lo - margin, hi + margin, nodes_per_side)
    }
}
