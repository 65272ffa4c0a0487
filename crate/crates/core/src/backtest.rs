//! Rolling-window density-forecast evaluation.
//!
//! For every forecast origin `t` the models are refitted on the window
//! `y[t-W+1..=t]`, each produces `M` predictive draws of `y[t+h]` per horizon,
//! and every model is scored against the realisation on one grid shared by all
//! models at that `(t, h)`. Fits and scores are independent work items run on
//! the rayon pool; each derives its seed from the run seed, the origin and the
//! model id, so results do not depend on scheduling or on which other models
//! are present.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::PredictiveDistribution;
use crate::error::{Error, Result};
use crate::inference::{dm_test, Bandwidth, DmResult, MIN_DM_LENGTH};
use crate::models::{fit, predictive_draws, McmcConfig, ModelSpec};
use crate::rng::{hash_label, mix_seed};
use crate::scoring::{
    rank_values, score, Orientation, QuadratureGrid, ScoreKind, ScoreValue, DEFAULT_NODES,
};

pub const DEFAULT_PREDICTIVE_DRAWS: usize = 500;

/// A series with one label per observation (dates or integer indices).
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub timestamps: Vec<String>,
    pub values: Vec<f64>,
}

impl Series {
    /// Labels `0, 1, 2, ...`.
    pub fn from_values(values: Vec<f64>) -> Self {
        Series {
            timestamps: (0..values.len()).map(|i| i.to_string()).collect(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    pub id: String,
    pub model: ModelSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    pub window: usize,
    pub horizons: Vec<usize>,
    pub models: Vec<ModelEntry>,
    pub scores: Vec<ScoreKind>,
    pub benchmark: String,
    pub predictive_draws: usize,
    /// Burn-in and kept draws per fit; the seed field is ignored (derived per fit).
    pub mcmc: McmcConfig,
    pub seed: u64,
    pub nodes_per_side: usize,
    /// Evaluate only the most recent `n` forecast origins.
    pub max_vintages: Option<usize>,
    /// Score every cell on this grid instead of the per-vintage shared grid.
    pub fixed_grid: Option<QuadratureGrid>,
}

impl BacktestConfig {
    pub fn new(
        window: usize,
        horizons: Vec<usize>,
        models: Vec<ModelEntry>,
        benchmark: impl Into<String>,
    ) -> Self {
        BacktestConfig {
            window,
            horizons,
            models,
            scores: ScoreKind::default_set(),
            benchmark: benchmark.into(),
            predictive_draws: DEFAULT_PREDICTIVE_DRAWS,
            mcmc: McmcConfig::default(),
            seed: 0,
            nodes_per_side: DEFAULT_NODES,
            max_vintages: None,
            fixed_grid: None,
        }
    }

    /// Every violation, not just the first.
    pub fn violations(&self, series_len: Option<usize>) -> Vec<String> {
        let mut v = Vec::new();
        if self.window == 0 {
            v.push("window must be positive".into());
        }
        if self.horizons.is_empty() {
            v.push("at least one horizon is required".into());
        }
        if self.horizons.contains(&0) {
            v.push("horizons must be positive".into());
        }
        let mut sorted = self.horizons.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.horizons.len() {
            v.push("horizons must be distinct".into());
        }
        if self.models.is_empty() {
            v.push("at least one model is required".into());
        }
        for (i, m) in self.models.iter().enumerate() {
            if m.id.trim().is_empty() {
                v.push(format!("model {} has an empty id", i + 1));
            }
            if self.models[..i].iter().any(|o| o.id == m.id) {
                v.push(format!("duplicate model id '{}'", m.id));
            }
        }
        if !self.models.iter().any(|m| m.id == self.benchmark) {
            v.push(format!(
                "benchmark '{}' is not among the models",
                self.benchmark
            ));
        }
        if self.scores.is_empty() {
            v.push("at least one score is required".into());
        }
        for s in &self.scores {
            if let Err(e) = s.validate() {
                v.push(format!("score {}: {e}", s.label()));
            }
        }
        if self.predictive_draws == 0 {
            v.push("predictive_draws must be positive".into());
        }
        if self.mcmc.keep == 0 {
            v.push("mcmc keep must be positive".into());
        }
        if self.nodes_per_side < 8 {
            v.push("nodes_per_side must be at least 8".into());
        }
        if self.max_vintages == Some(0) {
            v.push("max_vintages must be positive".into());
        }
        if let Some(g) = &self.fixed_grid {
            if let Err(e) = g.validate() {
                v.push(format!("fixed grid: {e}"));
            }
        }
        if let Some(n) = series_len {
            let h_max = self.horizons.iter().copied().max().unwrap_or(0);
            if self.window + h_max >= n {
                v.push(format!(
                    "window {} plus largest horizon {h_max} leaves no forecast origin in a series of length {n}",
                    self.window
                ));
            }
        }
        v
    }

    pub fn validate(&self, series_len: Option<usize>) -> Result<()> {
        let v = self.violations(series_len);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.id.clone()).collect()
    }

    /// Forecast origins (0-based index of the last in-window observation).
    pub fn origins(&self, series_len: usize) -> Vec<usize> {
        let h_max = self.horizons.iter().copied().max().unwrap_or(1);
        if self.window == 0 || self.window + h_max > series_len {
            return Vec::new();
        }
        let first = self.window - 1;
        let last = series_len - 1 - h_max;
        let first = match self.max_vintages {
            Some(n) => first.max((last + 1).saturating_sub(n)),
            None => first,
        };
        (first..=last).collect()
    }
}

/// Seed of the MCMC fit for one (origin, model).
pub fn fit_seed(seed: u64, origin: usize, model_id: &str) -> u64 {
    mix_seed(seed, &[origin as u64, hash_label(model_id)])
}

/// Seed of the predictive simulation for one (origin, model, horizon).
pub fn draw_seed(seed: u64, origin: usize, model_id: &str, horizon: usize) -> u64 {
    mix_seed(seed, &[origin as u64, hash_label(model_id), horizon as u64])
}

/// Scores of one model at one (origin, horizon); `scores` follows the
/// configured score order and is empty when the model failed.
#[derive(Debug, Clone, PartialEq)]
pub struct VintageCell {
    pub model: usize,
    pub scores: Vec<ScoreValue>,
    pub failure: Option<String>,
}

impl VintageCell {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vintage {
    pub origin: usize,
    pub timestamp: String,
    pub horizon: usize,
    pub realized: f64,
    /// None when every model failed and no grid could be built.
    pub grid: Option<QuadratureGrid>,
    pub cells: Vec<VintageCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VintageTable {
    pub model_ids: Vec<String>,
    pub scores: Vec<ScoreKind>,
    pub horizons: Vec<usize>,
    /// Ordered by horizon (config order), then origin.
    pub vintages: Vec<Vintage>,
    pub elapsed: Duration,
}

impl VintageTable {
    pub fn for_horizon(&self, h: usize) -> impl Iterator<Item = &Vintage> {
        self.vintages.iter().filter(move |v| v.horizon == h)
    }

    pub fn n_origins(&self) -> usize {
        self.horizons
            .first()
            .map_or(0, |&h| self.for_horizon(h).count())
    }

    fn model_index(&self, id: &str) -> Result<usize> {
        self.model_ids
            .iter()
            .position(|m| m == id)
            .ok_or_else(|| Error::domain(format!("unknown model '{id}'")))
    }

    /// Long-format rows, one per (horizon, origin, model, score).
    pub fn records(&self) -> Vec<VintageRecord> {
        let mut out = Vec::new();
        for v in &self.vintages {
            for cell in &v.cells {
                for (s, kind) in self.scores.iter().enumerate() {
                    let sv = cell.scores.get(s);
                    out.push(VintageRecord {
                        origin: v.origin,
                        timestamp: v.timestamp.clone(),
                        horizon: v.horizon,
                        model: self.model_ids[cell.model].clone(),
                        score: kind.label(),
                        value: sv.map(|s| s.value),
                        orientation: kind.orientation().name(),
                        truncation_warning: sv.is_some_and(|s| s.truncation_warning),
                        realized: v.realized,
                        u_min: v.grid.map(|g| g.u_min),
                        u_max: v.grid.map(|g| g.u_max),
                        nodes_per_side: v.grid.map(|g| g.nodes_per_side),
                        status: if cell.failed() { "failed" } else { "ok" },
                        error: cell.failure.clone().unwrap_or_default(),
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VintageRecord {
    pub origin: usize,
    pub timestamp: String,
    pub horizon: usize,
    pub model: String,
    pub score: String,
    pub value: Option<f64>,
    pub orientation: &'static str,
    pub truncation_warning: bool,
    pub realized: f64,
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub nodes_per_side: Option<usize>,
    pub status: &'static str,
    pub error: String,
}

/// Runs the rolling-window evaluation. Model failures are recorded in their
/// cells; configuration and series problems are returned as errors.
pub fn run_backtest(series: &Series, cfg: &BacktestConfig) -> Result<VintageTable> {
    let start = Instant::now();
    if series.timestamps.len() != series.values.len() {
        return Err(Error::domain(
            "series timestamps and values differ in length",
        ));
    }
    if let Some((i, v)) = series
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite())
    {
        return Err(Error::domain(format!(
            "series value {i} ({}) is not finite",
            v
        )));
    }
    cfg.validate(Some(series.len()))?;
    let y = &series.values;
    let origins = cfg.origins(y.len());
    let n_models = cfg.models.len();

    // stage 1: fit and simulate per (origin, model)
    let jobs: Vec<(usize, usize)> = origins
        .iter()
        .flat_map(|&t| (0..n_models).map(move |m| (t, m)))
        .collect();
    let draws: Vec<std::result::Result<Vec<PredictiveDistribution>, String>> = jobs
        .par_iter()
        .map(|&(t, m)| {
            let entry = &cfg.models[m];
            let window = &y[t + 1 - cfg.window..=t];
            let mcmc = McmcConfig {
                seed: fit_seed(cfg.seed, t, &entry.id),
                ..cfg.mcmc
            };
            let run = || -> Result<Vec<PredictiveDistribution>> {
                let post = fit(window, &entry.model, &mcmc)?;
                cfg.horizons
                    .iter()
                    .map(|&h| {
                        let s = predictive_draws(
                            &post,
                            window,
                            h,
                            cfg.predictive_draws,
                            draw_seed(cfg.seed, t, &entry.id, h),
                        )?;
                        PredictiveDistribution::empirical(s.draws)
                    })
                    .collect()
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    // stage 2: shared grid and scores per (horizon, origin)
    let keys: Vec<(usize, usize)> = cfg
        .horizons
        .iter()
        .enumerate()
        .flat_map(|(hi, _)| (0..origins.len()).map(move |oi| (hi, oi)))
        .collect();
    let vintages: Vec<Vintage> = keys
        .par_iter()
        .map(|&(hi, oi)| {
            let h = cfg.horizons[hi];
            let t = origins[oi];
            let realized = y[t + h];
            let row = &draws[oi * n_models..(oi + 1) * n_models];
            let forecasts: Vec<Option<&PredictiveDistribution>> = row
                .iter()
                .map(|r| r.as_ref().ok().map(|fs| &fs[hi]))
                .collect();
            let grid = match cfg.fixed_grid {
                Some(g) => Some(g),
                None if forecasts.iter().any(Option::is_some) => Some(QuadratureGrid::shared_refs(
                    forecasts.iter().flatten().copied(),
                    &[realized],
                    cfg.nodes_per_side,
                )?),
                None => None,
            };
            let cells = row
                .iter()
                .enumerate()
                .map(|(m, r)| match (r, grid) {
                    (Ok(fs), Some(g)) => {
                        let scores = cfg
                            .scores
                            .iter()
                            .map(|k| score(&fs[hi], realized, &k.with_grid(g)))
                            .collect::<Result<Vec<_>>>();
                        match scores {
                            Ok(scores) => VintageCell {
                                model: m,
                                scores,
                                failure: None,
                            },
                            Err(e) => VintageCell {
                                model: m,
                                scores: Vec::new(),
                                failure: Some(e.to_string()),
                            },
                        }
                    }
                    (Err(e), _) => VintageCell {
                        model: m,
                        scores: Vec::new(),
                        failure: Some(e.clone()),
                    },
                    (Ok(_), None) => unreachable!("a grid exists whenever a model succeeded"),
                })
                .collect();
            Ok(Vintage {
                origin: t,
                timestamp: series.timestamps[t].clone(),
                horizon: h,
                realized,
                grid,
                cells,
            })
        })
        .collect::<Result<_>>()?;

    Ok(VintageTable {
        model_ids: cfg.model_ids(),
        scores: cfg.scores.clone(),
        horizons: cfg.horizons.clone(),
        vintages,
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRanking {
    pub model: String,
    /// Mean over the origins where every model succeeded.
    pub average: f64,
    pub rank: usize,
    /// Comparison with the benchmark; None for the benchmark itself and when
    /// fewer than the minimum number of origins are available.
    pub dm: Option<DmResult>,
}

impl ModelRanking {
    pub fn stars(&self) -> &'static str {
        self.dm.as_ref().map_or("", DmResult::stars)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub horizon: usize,
    pub score: ScoreKind,
    /// Origins entering the averages.
    pub n: usize,
    pub models: Vec<ModelRanking>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub benchmark: String,
    pub model_ids: Vec<String>,
    pub rows: Vec<RankingRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRecord {
    pub horizon: usize,
    pub score: String,
    pub orientation: &'static str,
    pub model: String,
    pub average: f64,
    pub rank: usize,
    pub n: usize,
    pub benchmark: String,
    pub dm_statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: &'static str,
}

impl RankingReport {
    pub fn records(&self) -> Vec<RankingRecord> {
        self.rows
            .iter()
            .flat_map(|row| {
                row.models.iter().map(move |m| RankingRecord {
                    horizon: row.horizon,
                    score: row.score.label(),
                    orientation: row.score.orientation().name(),
                    model: m.model.clone(),
                    average: m.average,
                    rank: m.rank,
                    n: row.n,
                    benchmark: self.benchmark.clone(),
                    dm_statistic: m.dm.map(|d| d.statistic),
                    p_value: m.dm.map(|d| d.p_value),
                    stars: m.stars(),
                })
            })
            .collect()
    }

    /// Plain-text table per horizon: one row per score, one column per model,
    /// cells `rank` followed by DM stars against the benchmark.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut horizons: Vec<usize> = self.rows.iter().map(|r| r.horizon).collect();
        horizons.dedup();
        let label_w = self
            .rows
            .iter()
            .map(|r| r.score.label().len())
            .max()
            .unwrap_or(5)
            .max(5);
        for h in horizons {
            out.push_str(&format!("horizon {h} (benchmark {})\n", self.benchmark));
            out.push_str(&format!("{:<label_w$}", "score"));
            for id in &self.model_ids {
                out.push_str(&format!("  {:>12}", id));
            }
            out.push('\n');
            for row in self.rows.iter().filter(|r| r.horizon == h) {
                out.push_str(&format!("{:<label_w$}", row.score.label()));
                for m in &row.models {
                    out.push_str(&format!("  {:>12}", format!("{}{}", m.rank, m.stars())));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Origins at which every model has scores, for one horizon.
fn complete_vintages(table: &VintageTable, h: usize) -> Vec<&Vintage> {
    table
        .for_horizon(h)
        .filter(|v| v.cells.iter().all(|c| !c.failed()))
        .collect()
}

/// Average scores, ranks and DM tests against the benchmark, per horizon and score.
pub fn ranking_report(table: &VintageTable, benchmark: &str) -> Result<RankingReport> {
    let b = table.model_index(benchmark)?;
    let mut rows = Vec::new();
    for &h in &table.horizons {
        let bench_ok = table.for_horizon(h).any(|v| !v.cells[b].failed());
        if !bench_ok {
            return Err(Error::domain(format!(
                "benchmark '{benchmark}' has no scores at horizon {h}"
            )));
        }
        let complete = complete_vintages(table, h);
        for (s, kind) in table.scores.iter().enumerate() {
            let orientation = kind.orientation();
            let series: Vec<Vec<f64>> = (0..table.model_ids.len())
                .map(|m| {
                    complete
                        .iter()
                        .map(|v| v.cells[m].scores[s].value)
                        .collect()
                })
                .collect();
            let averages: Vec<f64> = series
                .iter()
                .map(|xs| {
                    if xs.is_empty() {
                        f64::NAN
                    } else {
                        xs.iter().sum::<f64>() / xs.len() as f64
                    }
                })
                .collect();
            let ranks = rank_values(&averages, orientation);
            let models = (0..table.model_ids.len())
                .map(|m| {
                    let dm = if m == b || complete.len() < MIN_DM_LENGTH {
                        None
                    } else {
                        Some(dm_test(
                            &series[m],
                            &series[b],
                            orientation,
                            Bandwidth::Auto,
                        )?)
                    };
                    Ok(ModelRanking {
                        model: table.model_ids[m].clone(),
                        average: averages[m],
                        rank: ranks[m],
                        dm,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(RankingRow {
                horizon: h,
                score: *kind,
                n: complete.len(),
                models,
            });
        }
    }
    Ok(RankingReport {
        benchmark: benchmark.to_string(),
        model_ids: table.model_ids.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestModelTrace {
    pub model_ids: Vec<String>,
    pub horizon: usize,
    pub score: ScoreKind,
    /// (origin, timestamp, index of the best model).
    pub entries: Vec<(usize, String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub origin: usize,
    pub timestamp: String,
    pub horizon: usize,
    pub score: String,
    pub best_model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRecord {
    pub horizon: usize,
    pub score: String,
    pub model: String,
    pub frequency: f64,
}

impl BestModelTrace {
    pub fn records(&self) -> Vec<TraceRecord> {
        self.entries
            .iter()
            .map(|(o, ts, m)| TraceRecord {
                origin: *o,
                timestamp: ts.clone(),
                horizon: self.horizon,
                score: self.score.label(),
                best_model: self.model_ids[*m].clone(),
            })
            .collect()
    }
}

/// Best model at each origin (among models with scores), first listed wins ties.
pub fn best_model_trace(
    table: &VintageTable,
    horizon: usize,
    score_index: usize,
) -> Result<BestModelTrace> {
    let kind = *table
        .scores
        .get(score_index)
        .ok_or_else(|| Error::domain(format!("score index {score_index} out of range")))?;
    if !table.horizons.contains(&horizon) {
        return Err(Error::domain(format!("horizon {horizon} not in the table")));
    }
    let orientation = kind.orientation();
    let entries = table
        .for_horizon(horizon)
        .filter_map(|v| {
            best_of(
                v.cells
                    .iter()
                    .filter(|c| !c.failed())
                    .map(|c| (c.model, c.scores[score_index].value)),
                orientation,
            )
            .map(|m| (v.origin, v.timestamp.clone(), m))
        })
        .collect();
    Ok(BestModelTrace {
        model_ids: table.model_ids.clone(),
        horizon,
        score: kind,
        entries,
    })
}

fn best_of(cells: impl Iterator<Item = (usize, f64)>, orientation: Orientation) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (m, v) in cells {
        match best {
            None => best = Some((m, v)),
            Some((_, bv)) if orientation.better(v, bv) || (bv.is_nan() && !v.is_nan()) => {
                best = Some((m, v))
            }
            _ => {}
        }
    }
    best.map(|(m, _)| m)
}

/// Share of origins at which each model was best, for every model in the table.
pub fn best_model_frequency(trace: &BestModelTrace) -> Vec<(String, f64)> {
    let mut counts = vec![0usize; trace.model_ids.len()];
    for (_, _, m) in &trace.entries {
        counts[*m] += 1;
    }
    let n = trace.entries.len() as f64;
    trace
        .model_ids
        .iter()
        .zip(counts)
        .map(|(id, c)| (id.clone(), if n > 0.0 { c as f64 / n } else { 0.0 }))
        .collect()
}

/// Traces and frequencies for every (horizon, score) of the table.
pub fn all_traces(table: &VintageTable) -> Result<(Vec<TraceRecord>, Vec<FrequencyRecord>)> {
    let mut traces = Vec::new();
    let mut freqs = Vec::new();
    for &h in &table.horizons {
        for s in 0..table.scores.len() {
            let tr = best_model_trace(table, h, s)?;
            traces.extend(tr.records());
            freqs.extend(
                best_model_frequency(&tr)
                    .into_iter()
                    .map(|(model, frequency)| FrequencyRecord {
                        horizon: h,
                        score: tr.score.label(),
                        model,
                        frequency,
                    }),
            );
        }
    }
    Ok((traces, freqs))
}
