//! Simulation experiments: rank candidate densities against draws from a
//! known target under CRPS and ACPS at several asymmetry levels.
//!
//! Observations come from the target; each candidate is either its exact CDF
//! or an empirical CDF of `M` draws. All candidates share one grid covering
//! every candidate's central range and every observation.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::distributions::{AnalyticDistribution, PredictiveDistribution};
use crate::error::{Error, Result};
use crate::rng::mix_seed;
use crate::scoring::{
    average_score, rank_values, QuadratureGrid, ScoreKind, WeightScheme, Weighting, DEFAULT_NODES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Target N(0,1).
    Normal,
    /// Target N(2,4); no candidate is correct.
    NormalShifted,
    /// Target t(0,1,5).
    StudentT,
    /// Target Ga(2,1).
    Gamma,
    /// Target Be(1,2).
    Beta,
    /// Target N(1,4), threshold-weighted scores under every weight scheme.
    ThresholdWeighted,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Normal,
        Experiment::NormalShifted,
        Experiment::StudentT,
        Experiment::Gamma,
        Experiment::Beta,
        Experiment::ThresholdWeighted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Normal => "normal",
            Experiment::NormalShifted => "normal-shifted",
            Experiment::StudentT => "student-t",
            Experiment::Gamma => "gamma",
            Experiment::Beta => "beta",
            Experiment::ThresholdWeighted => "threshold-weighted",
        }
    }

    pub fn target(&self) -> AnalyticDistribution {
        use AnalyticDistribution::*;
        match self {
            Experiment::Normal => Normal {
                mean: 0.0,
                variance: 1.0,
            },
            Experiment::NormalShifted => Normal {
                mean: 2.0,
                variance: 4.0,
            },
            Experiment::StudentT => StudentT {
                location: 0.0,
                scale: 1.0,
                dof: 5.0,
            },
            Experiment::Gamma => Gamma {
                shape: 2.0,
                rate: 1.0,
            },
            Experiment::Beta => Beta { a: 1.0, b: 2.0 },
            Experiment::ThresholdWeighted => Normal {
                mean: 1.0,
                variance: 4.0,
            },
        }
    }

    pub fn candidates(&self) -> Vec<AnalyticDistribution> {
        use AnalyticDistribution::*;
        let normals = || {
            vec![
                Normal {
                    mean: 0.0,
                    variance: 1.0,
                },
                Normal {
                    mean: -3.0,
                    variance: 1.0,
                },
                Normal {
                    mean: 3.0,
                    variance: 1.0,
                },
                Normal {
                    mean: 0.0,
                    variance: 16.0,
                },
            ]
        };
        match self {
            Experiment::Normal | Experiment::NormalShifted | Experiment::ThresholdWeighted => {
                normals()
            }
            Experiment::StudentT => vec![
                StudentT {
                    location: -3.0,
                    scale: 1.0,
                    dof: 3.0,
                },
                StudentT {
                    location: 2.0,
                    scale: 1.0,
                    dof: 3.0,
                },
                StudentT {
                    location: 0.0,
                    scale: 1.0,
                    dof: 5.0,
                },
                StudentT {
                    location: 4.0,
                    scale: 1.0,
                    dof: 15.0,
                },
            ],
            Experiment::Gamma => vec![
                Gamma {
                    shape: 1.0,
                    rate: 1.0,
                },
                Gamma {
                    shape: 2.0,
                    rate: 1.0,
                },
                Gamma {
                    shape: 1.5,
                    rate: 1.5,
                },
                Gamma {
                    shape: 1.0,
                    rate: 2.0,
                },
            ],
            Experiment::Beta => vec![
                Beta { a: 1.0, b: 1.0 },
                Beta { a: 1.0, b: 5.0 },
                Beta { a: 1.0, b: 2.0 },
                Beta { a: 5.0, b: 5.0 },
            ],
        }
    }

    /// CRPS then ACPS at the default levels; the threshold-weighted experiment
    /// repeats that block for every weight scheme.
    pub fn score_kinds(&self) -> Vec<ScoreKind> {
        match self {
            Experiment::ThresholdWeighted => WeightScheme::ALL
                .iter()
                .flat_map(|&s| {
                    ScoreKind::default_set()
                        .into_iter()
                        .map(move |k| k.weighted(Weighting::Threshold(s)))
                })
                .collect(),
            _ => ScoreKind::default_set(),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::domain(format!(
                    "unknown experiment '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// Number of target observations.
    pub n: usize,
    /// Draws per candidate; None scores the exact candidate CDFs.
    pub draws: Option<usize>,
    pub nodes_per_side: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 100,
            draws: Some(500),
            nodes_per_side: DEFAULT_NODES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub score: ScoreKind,
    pub averages: Vec<f64>,
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub experiment: Experiment,
    pub target: AnalyticDistribution,
    pub candidates: Vec<AnalyticDistribution>,
    pub grid: QuadratureGrid,
    pub rows: Vec<ExperimentRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub target: String,
    pub score: String,
    pub candidate: String,
    pub average: f64,
    pub rank: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub nodes_per_side: usize,
}

impl ExperimentResult {
    pub fn row(&self, kind: &ScoreKind) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.score == *kind)
    }

    pub fn records(&self) -> Vec<ExperimentRecord> {
        self.rows
            .iter()
            .flat_map(|row| {
                self.candidates
                    .iter()
                    .enumerate()
                    .map(move |(i, c)| ExperimentRecord {
                        experiment: self.experiment.name().to_string(),
                        target: self.target.to_string(),
                        score: row.score.label(),
                        candidate: c.to_string(),
                        average: row.averages[i],
                        rank: row.ranks[i],
                        u_min: self.grid.u_min,
                        u_max: self.grid.u_max,
                        nodes_per_side: self.grid.nodes_per_side,
                    })
            })
            .collect()
    }

    /// Rank table: one row per score, one column per candidate.
    pub fn render(&self) -> String {
        let labels: Vec<String> = self.candidates.iter().map(|c| c.to_string()).collect();
        let label_w = self
            .rows
            .iter()
            .map(|r| r.score.label().len())
            .max()
            .unwrap_or(5)
            .max(5);
        let col_w = labels.iter().map(String::len).max().unwrap_or(6).max(6);
        let mut out = format!("target {}\n{:<label_w$}", self.target, "score");
        for l in &labels {
            out.push_str(&format!("  {l:>col_w$}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<label_w$}", row.score.label()));
            for r in &row.ranks {
                out.push_str(&format!("  {r:>col_w$}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.n == 0 {
        return Err(Error::domain("experiment needs at least one observation"));
    }
    if cfg.draws == Some(0) {
        return Err(Error::domain("number of forecast draws must be positive"));
    }
    let target = experiment.target();
    let candidates = experiment.candidates();
    let ys = target.sample(cfg.n, mix_seed(cfg.seed, &[0]))?;
    let forecasts = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| match cfg.draws {
            Some(m) => {
                PredictiveDistribution::empirical(c.sample(m, mix_seed(cfg.seed, &[1 + i as u64]))?)
            }
            None => Ok(PredictiveDistribution::from(*c)),
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = QuadratureGrid::shared(&forecasts, &ys, cfg.nodes_per_side)?;
    let rows = experiment
        .score_kinds()
        .into_iter()
        .map(|kind| {
            let spec = kind.with_grid(grid);
            let averages = forecasts
                .iter()
                .map(|f| average_score(std::slice::from_ref(f), &ys, &spec).map(|s| s.value))
                .collect::<Result<Vec<_>>>()?;
            let ranks = rank_values(&averages, kind.orientation());
            Ok(ExperimentRow {
                score: kind,
                averages,
                ranks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        experiment,
        target,
        candidates,
        grid,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(n: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            n,
            draws: None,
            nodes_per_side: DEFAULT_NODES,
            seed,
        }
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("cauchy".parse::<Experiment>().is_err());
    }

    #[test]
    fn target_is_among_candidates_except_shifted() {
        for e in Experiment::ALL {
            let hit = e.candidates().contains(&e.target());
            let expected = !matches!(e, Experiment::NormalShifted | Experiment::ThresholdWeighted);
            assert_eq!(hit, expected, "{e}");
        }
    }

    #[test]
    fn normal_experiment_ranks_truth_first_and_crps_matches_acps_half() {
        let r = run_experiment(Experiment::Normal, &exact(20_000, 1)).unwrap();
        for row in &r.rows {
            assert_eq!(row.ranks[0], 1, "{}", row.score.label());
        }
        let crps = r.row(&ScoreKind::crps()).unwrap();
        let half = r.row(&ScoreKind::acps(0.5)).unwrap();
        assert_eq!(crps.ranks, half.ranks);
    }

    #[test]
    fn gamma_experiment_ranks_truth_first() {
        let r = run_experiment(Experiment::Gamma, &exact(20_000, 2)).unwrap();
        for row in &r.rows {
            assert_eq!(row.ranks[1], 1, "{}", row.score.label());
        }
    }

    #[test]
    fn sampled_candidates_and_layout() {
        let r =
            run_experiment(Experiment::ThresholdWeighted, &ExperimentConfig::default()).unwrap();
        assert_eq!(r.rows.len(), 30);
        assert_eq!(r.records().len(), 120);
        let text = r.render();
        assert!(text.contains("tACPS(0.95,right-tail)"));
        assert!(text.contains("N(0,16)"));
        let again =
            run_experiment(Experiment::ThresholdWeighted, &ExperimentConfig::default()).unwrap();
        assert_eq!(r, again);
    }
}
