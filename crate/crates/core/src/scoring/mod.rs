//! Asymmetric continuous probability score (ACPS), CRPS and their
//! threshold-/quantile-weighted variants.
//!
//! Every score is an integral over the outcome axis truncated to a
//! [`QuadratureGrid`]. The integral is split at the observation, at the
//! forecast quantile where the ACPS integrand has a kink (`P^{-1}(c)`), at
//! finite support bounds and, for empirical forecasts, at every draw. Each
//! piece is integrated with Gauss-Legendre; pieces get a share of the
//! `2 * nodes_per_side` budget proportional to their length.
//!
//! ACPS is positively oriented (higher is better) and bounded above by the
//! grid width. CRPS is the classical negatively oriented integral. At
//! `c = 0.5` the two are tied by `ACPS = (u_max - u_min) - 4 CRPS`, which holds
//! node for node because CRPS is split at the forecast median.

pub mod quadrature;
pub mod weights;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};

pub use quadrature::{gauss_legendre, QuadratureGrid, QuadratureRule, DEFAULT_NODES};
pub use weights::{quantile_weight, threshold_weight, WeightScheme};

use quadrature::{reference_rule, ReferenceRule};

/// Asymmetry levels used throughout the simulation tables.
pub const DEFAULT_C_LEVELS: [f64; 5] = [0.05, 0.275, 0.5, 0.725, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreFamily {
    Acps,
    Crps,
}

impl ScoreFamily {
    pub fn orientation(&self) -> Orientation {
        match self {
            ScoreFamily::Acps => Orientation::PositivelyOriented,
            ScoreFamily::Crps => Orientation::NegativelyOriented,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoreFamily::Acps => "acps",
            ScoreFamily::Crps => "crps",
        }
    }
}

impl FromStr for ScoreFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "acps" => Ok(ScoreFamily::Acps),
            "crps" => Ok(ScoreFamily::Crps),
            _ => Err(Error::domain(format!(
                "unknown score family '{s}' (expected acps or crps)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "scheme")]
pub enum Weighting {
    #[default]
    None,
    Threshold(WeightScheme),
    Quantile(WeightScheme),
}

impl Weighting {
    pub fn name(&self) -> &'static str {
        match self {
            Weighting::None => "none",
            Weighting::Threshold(_) => "threshold",
            Weighting::Quantile(_) => "quantile",
        }
    }

    pub fn scheme(&self) -> Option<WeightScheme> {
        match *self {
            Weighting::None => None,
            Weighting::Threshold(s) | Weighting::Quantile(s) => Some(s),
        }
    }

    /// Builds a weighting from its mode name and an optional scheme (defaults to uniform).
    pub fn parse(mode: &str, scheme: Option<&str>) -> Result<Self> {
        let scheme = scheme
            .map(str::parse)
            .transpose()?
            .unwrap_or(WeightScheme::Uniform);
        match mode.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Weighting::None),
            "threshold" => Ok(Weighting::Threshold(scheme)),
            "quantile" => Ok(Weighting::Quantile(scheme)),
            other => Err(Error::domain(format!(
                "unknown weighting '{other}' (expected none, threshold or quantile)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "positive")]
    PositivelyOriented,
    #[serde(rename = "negative")]
    NegativelyOriented,
}

impl Orientation {
    pub fn name(&self) -> &'static str {
        match self {
            Orientation::PositivelyOriented => "positive",
            Orientation::NegativelyOriented => "negative",
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(&self, a: f64, b: f64) -> bool {
        match self {
            Orientation::PositivelyOriented => a > b,
            Orientation::NegativelyOriented => a < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreValue {
    pub value: f64,
    pub orientation: Orientation,
    /// Set when the observation fell outside the grid and one side was dropped.
    pub truncation_warning: bool,
}

/// A score definition without a grid; the grid is attached per evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreKind {
    pub family: ScoreFamily,
    /// Asymmetry level; ignored for CRPS.
    pub c: f64,
    pub weighting: Weighting,
}

impl ScoreKind {
    pub fn acps(c: f64) -> Self {
        ScoreKind {
            family: ScoreFamily::Acps,
            c,
            weighting: Weighting::None,
        }
    }

    pub fn crps() -> Self {
        ScoreKind {
            family: ScoreFamily::Crps,
            c: 0.5,
            weighting: Weighting::None,
        }
    }

    pub fn weighted(self, weighting: Weighting) -> Self {
        ScoreKind { weighting, ..self }
    }

    /// CRPS followed by ACPS at each default asymmetry level.
    pub fn default_set() -> Vec<ScoreKind> {
        std::iter::once(ScoreKind::crps())
            .chain(DEFAULT_C_LEVELS.iter().map(|&c| ScoreKind::acps(c)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == ScoreFamily::Acps && !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::domain(format!(
                "asymmetry level c must lie in (0,1), got {}",
                self.c
            )));
        }
        Ok(())
    }

    pub fn orientation(&self) -> Orientation {
        self.family.orientation()
    }

    pub fn with_grid(self, grid: QuadratureGrid) -> ScoreSpec {
        ScoreSpec {
            family: self.family,
            c: self.c,
            weighting: self.weighting,
            grid,
        }
    }

    /// CDF level where the integrand has a kink.
    fn pivot(&self) -> f64 {
        match self.family {
            ScoreFamily::Acps => self.c,
            ScoreFamily::Crps => 0.5,
        }
    }

    /// Short identifier such as `CRPS`, `ACPS(0.05)` or `tACPS(0.95,right-tail)`.
    pub fn label(&self) -> String {
        let prefix = match self.weighting {
            Weighting::None => "",
            Weighting::Threshold(_) => "t",
            Weighting::Quantile(_) => "q",
        };
        let mut args = Vec::new();
        if self.family == ScoreFamily::Acps {
            args.push(format!("{}", self.c));
        }
        if let Some(s) = self.weighting.scheme() {
            args.push(s.name().to_string());
        }
        let name = self.family.name().to_ascii_uppercase();
        if args.is_empty() {
            format!("{prefix}{name}")
        } else {
            format!("{prefix}{name}({})", args.join(","))
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Full score specification: what to compute and on which grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub family: ScoreFamily,
    pub c: f64,
    pub weighting: Weighting,
    pub grid: QuadratureGrid,
}

impl ScoreSpec {
    pub fn kind(&self) -> ScoreKind {
        ScoreKind {
            family: self.family,
            c: self.c,
            weighting: self.weighting,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kind().validate()?;
        self.grid.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    LeftOfY,
    RightOfY,
}

/// Pointwise ACPS integrand given the forecast CDF value `p_u` at `u`.
pub fn acps_integrand(p_u: f64, side: Side, c: f64) -> f64 {
    let scale = if p_u > c {
        1.0 / ((1.0 - c) * (1.0 - c))
    } else {
        1.0 / (c * c)
    };
    match side {
        Side::LeftOfY => (c * c - p_u * p_u) * scale,
        Side::RightOfY => ((1.0 - c) * (1.0 - c) - (1.0 - p_u) * (1.0 - p_u)) * scale,
    }
}

fn base_integrand(kind: &ScoreKind, p: f64, side: Side) -> f64 {
    match kind.family {
        ScoreFamily::Acps => acps_integrand(p, side, kind.c),
        ScoreFamily::Crps => match side {
            Side::LeftOfY => p * p,
            Side::RightOfY => (1.0 - p) * (1.0 - p),
        },
    }
}

fn node_weight(kind: &ScoreKind, u: f64, p: f64) -> f64 {
    match kind.weighting {
        Weighting::None => 1.0,
        Weighting::Threshold(s) => threshold_weight(s, u),
        Weighting::Quantile(s) => quantile_weight(s, p),
    }
}

struct RuleCache {
    rules: Vec<Option<Arc<ReferenceRule>>>,
}

impl RuleCache {
    fn new(max: usize) -> Self {
        RuleCache {
            rules: vec![None; max + 1],
        }
    }

    fn get(&mut self, n: usize) -> &ReferenceRule {
        self.rules[n].get_or_insert_with(|| reference_rule(n))
    }
}

/// Composite Gauss-Legendre over `[a, b]` split at `breaks`.
///
/// `per_piece` is called once per piece with its midpoint; `per_node` receives
/// that context, the node and the forecast CDF there. Empirical CDFs are
/// constant on each piece and are evaluated once at the midpoint.
fn integrate<C>(
    forecast: &PredictiveDistribution,
    breaks: &mut Vec<f64>,
    a: f64,
    b: f64,
    nodes_per_side: usize,
    mut per_piece: impl FnMut(f64) -> C,
    mut per_node: impl FnMut(&C, f64, f64) -> f64,
) -> f64 {
    breaks.retain(|&x| x > a && x < b);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let total = b - a;
    let budget = 2.0 * nodes_per_side as f64;
    let min_nodes = if forecast.is_empirical() { 2 } else { 4 };
    let mut rules = RuleCache::new(nodes_per_side.max(min_nodes));
    let mut sum = 0.0;
    let mut lo = a;
    for hi in breaks.iter().copied().chain(std::iter::once(b)) {
        let len = hi - lo;
        if len <= 0.0 {
            lo = hi;
            continue;
        }
        let n = ((budget * len / total).ceil() as usize)
            .clamp(min_nodes, nodes_per_side.max(min_nodes));
        let rule = rules.get(n);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * len);
        let ctx = per_piece(mid);
        let mut piece = 0.0;
        match forecast {
            PredictiveDistribution::Empirical(e) => {
                let p = e.eval(mid);
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    piece += w * per_node(&ctx, mid + half * x, p);
                }
            }
            PredictiveDistribution::Analytic(d) => {
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let u = mid + half * x;
                    piece += w * per_node(&ctx, u, d.cdf(u));
                }
            }
        }
        sum += half * piece;
        lo = hi;
    }
    sum
}

fn check_y(y: f64) -> Result<()> {
    if y.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "observation must be finite, got {y}"
        )))
    }
}

fn breakpoints(
    forecast: &PredictiveDistribution,
    kind: &ScoreKind,
    grid: &QuadratureGrid,
) -> Vec<f64> {
    let mut breaks = vec![forecast.quantile_unchecked(kind.pivot())];
    forecast.kinks_between(grid.u_min, grid.u_max, &mut breaks);
    breaks
}

fn grid_integral(
    forecast: &PredictiveDistribution,
    y: f64,
    kind: &ScoreKind,
    grid: &QuadratureGrid,
) -> ScoreValue {
    let mut breaks = breakpoints(forecast, kind, grid);
    breaks.push(y);
    let value = integrate(
        forecast,
        &mut breaks,
        grid.u_min,
        grid.u_max,
        grid.nodes_per_side,
        |mid| {
            if mid < y {
                Side::LeftOfY
            } else {
                Side::RightOfY
            }
        },
        |&side, u, p| base_integrand(kind, p, side) * node_weight(kind, u, p),
    );
    ScoreValue {
        value,
        orientation: kind.orientation(),
        truncation_warning: y < grid.u_min || y > grid.u_max,
    }
}

/// Asymmetric continuous probability score of `forecast` at `y`.
pub fn acps(
    forecast: &PredictiveDistribution,
    y: f64,
    c: f64,
    grid: &QuadratureGrid,
) -> Result<ScoreValue> {
    score(forecast, y, &ScoreKind::acps(c).with_grid(*grid))
}

/// Continuous ranked probability score of `forecast` at `y`.
pub fn crps(
    forecast: &PredictiveDistribution,
    y: f64,
    grid: &QuadratureGrid,
) -> Result<ScoreValue> {
    score(forecast, y, &ScoreKind::crps().with_grid(*grid))
}

/// Threshold- or quantile-weighted score. Threshold weighting multiplies the
/// integrand by `w(u)`. Quantile-weighted ACPS uses the substitution
/// `alpha = P(u)`, multiplying by `v(P(u))`. Quantile-weighted CRPS is the
/// quantile-score integral `int_0^1 2 (1{y <= q(a)} - a)(q(a) - y) v(a) da`,
/// evaluated on the probability axis (it does not depend on the grid bounds).
pub fn weighted_score(
    forecast: &PredictiveDistribution,
    y: f64,
    spec: &ScoreSpec,
) -> Result<ScoreValue> {
    score(forecast, y, spec)
}

/// Evaluates any score specification.
pub fn score(forecast: &PredictiveDistribution, y: f64, spec: &ScoreSpec) -> Result<ScoreValue> {
    spec.validate()?;
    check_y(y)?;
    let kind = spec.kind();
    if let (ScoreFamily::Crps, Weighting::Quantile(s)) = (kind.family, kind.weighting) {
        return Ok(ScoreValue {
            value: quantile_crps(forecast, y, s, spec.grid.nodes_per_side),
            orientation: Orientation::NegativelyOriented,
            truncation_warning: false,
        });
    }
    Ok(grid_integral(forecast, y, &kind, &spec.grid))
}

// Smooth map of [0,1] onto itself with vanishing derivative at both ends; it
// tames the endpoint singularities of q(alpha).
fn cluster(t: f64) -> (f64, f64) {
    (t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t))
}

fn quantile_crps(
    forecast: &PredictiveDistribution,
    y: f64,
    scheme: WeightScheme,
    nodes: usize,
) -> f64 {
    let qs = |alpha: f64, q: f64| {
        let ind = if y <= q { 1.0 } else { 0.0 };
        2.0 * (ind - alpha) * (q - y) * quantile_weight(scheme, alpha)
    };
    match forecast {
        PredictiveDistribution::Empirical(e) => {
            // q is constant on ((j-1)/M, j/M]; the integrand is a cubic there
            let rule = reference_rule(2);
            let m = e.count() as f64;
            e.draws()
                .iter()
                .enumerate()
                .map(|(j, &q)| {
                    let (lo, hi) = (j as f64 / m, (j + 1) as f64 / m);
                    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                    half * rule
                        .nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(x, w)| w * qs(mid + half * x, q))
                        .sum::<f64>()
                })
                .sum()
        }
        PredictiveDistribution::Analytic(d) => {
            let py = d.cdf(y);
            let rule = reference_rule(nodes);
            let mut total = 0.0;
            for (lo, hi) in [(0.0, py), (py, 1.0)] {
                if hi - lo <= 0.0 {
                    continue;
                }
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let (g, dg) = cluster(0.5 * (x + 1.0));
                    let alpha = lo + (hi - lo) * g;
                    if alpha <= 0.0 || alpha >= 1.0 {
                        continue;
                    }
                    total += 0.5 * w * (hi - lo) * dg * qs(alpha, d.quantile(alpha));
                }
            }
            total
        }
    }
}

/// Mean score over observations.
///
/// `forecasts` holds either one forecast per observation or a single forecast
/// used for all of them. In the single-forecast case the average is computed
/// as one integral, `int (1 - F_y(u)) L(P(u)) + F_y(u) R(P(u)) du`, where
/// `F_y` is the empirical CDF of the observations and `L`, `R` the left/right
/// integrands; this equals the mean of the per-observation scores on the same
/// grid.
pub fn average_score(
    forecasts: &[PredictiveDistribution],
    ys: &[f64],
    spec: &ScoreSpec,
) -> Result<ScoreValue> {
    spec.validate()?;
    if ys.is_empty() {
        return Err(Error::domain(
            "average score needs at least one observation",
        ));
    }
    if forecasts.len() != 1 && forecasts.len() != ys.len() {
        return Err(Error::domain(format!(
            "{} forecasts for {} observations",
            forecasts.len(),
            ys.len()
        )));
    }
    for &y in ys {
        check_y(y)?;
    }
    let kind = spec.kind();
    let quantile_crps = matches!(
        (kind.family, kind.weighting),
        (ScoreFamily::Crps, Weighting::Quantile(_))
    );
    if forecasts.len() == 1 && !quantile_crps && ys.len() > 1 {
        let forecast = &forecasts[0];
        let grid = &spec.grid;
        let mut sorted = ys.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut breaks = breakpoints(forecast, &kind, grid);
        breaks.extend_from_slice(&sorted);
        let value = integrate(
            forecast,
            &mut breaks,
            grid.u_min,
            grid.u_max,
            grid.nodes_per_side,
            |mid| sorted.partition_point(|&y| y <= mid) as f64 / n,
            |&right, u, p| {
                let left = 1.0 - right;
                let mut v = 0.0;
                if left > 0.0 {
                    v += left * base_integrand(&kind, p, Side::LeftOfY);
                }
                if right > 0.0 {
                    v += right * base_integrand(&kind, p, Side::RightOfY);
                }
                v * node_weight(&kind, u, p)
            },
        );
        let warn = sorted[0] < grid.u_min || sorted[sorted.len() - 1] > grid.u_max;
        return Ok(ScoreValue {
            value,
            orientation: kind.orientation(),
            truncation_warning: warn,
        });
    }
    let mut total = 0.0;
    let mut warn = false;
    for (i, &y) in ys.iter().enumerate() {
        let f = if forecasts.len() == 1 {
            &forecasts[0]
        } else {
            &forecasts[i]
        };
        let s = score(f, y, spec)?;
        total += s.value;
        warn |= s.truncation_warning;
    }
    Ok(ScoreValue {
        value: total / ys.len() as f64,
        orientation: kind.orientation(),
        truncation_warning: warn,
    })
}

/// Ranks (1 = best) for `values` under `orientation`. Ties and NaNs keep
/// listing order; NaNs rank last.
pub fn rank_values(values: &[f64], orientation: Orientation) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (values[i], values[j]);
        match (a.is_nan(), b.is_nan()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => match orientation {
                Orientation::PositivelyOriented => b.partial_cmp(&a).unwrap(),
                Orientation::NegativelyOriented => a.partial_cmp(&b).unwrap(),
            },
        }
    });
    let mut ranks = vec![0; values.len()];
    for (r, &i) in idx.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

/// Ranks models by average score, best first gets rank 1.
pub fn rank_models<S: Clone>(avg_scores: &[(S, ScoreValue)]) -> Result<Vec<(S, usize)>> {
    let Some(first) = avg_scores.first() else {
        return Ok(Vec::new());
    };
    let orientation = first.1.orientation;
    if avg_scores.iter().any(|(_, s)| s.orientation != orientation) {
        return Err(Error::domain("cannot rank scores with mixed orientations"));
    }
    let values: Vec<f64> = avg_scores.iter().map(|(_, s)| s.value).collect();
    let ranks = rank_values(&values, orientation);
    Ok(avg_scores
        .iter()
        .zip(ranks)
        .map(|((id, _), r)| (id.clone(), r))
        .collect())
}
