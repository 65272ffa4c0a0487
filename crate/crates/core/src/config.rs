//! TOML configuration for backtests.
//!
//! ```toml
//! seed = 42
//! window = 300
//! horizons = [1, 5]
//! benchmark = "wn"
//! predictive_draws = 500     # optional
//! nodes_per_side = 128       # optional
//! max_vintages = 100         # optional: most recent origins only
//!
//! [mcmc]                     # optional
//! burn = 1000
//! keep = 2000
//!
//! [grid]                     # optional fixed grid for every cell
//! u_min = -10.0
//! u_max = 10.0
//!
//! [[scores]]                 # optional; default CRPS + ACPS at 5 levels
//! family = "acps"
//! c = [0.05, 0.5, 0.95]
//! weighting = "threshold"    # none | threshold | quantile
//! scheme = "right-tail"
//!
//! [[models]]
//! id = "ar1"
//! kind = "ar"                # ar | msar | tvpar
//! order = 1                  # or lags = [1, 2, 7]
//! intercept = true
//! [models.prior]             # ar and msar: coeff_mean, coeff_var, intercept_var, sigma_shape, sigma_rate
//! coeff_var = 1.0
//!
//! [[models]]
//! id = "ms"
//! kind = "msar"
//! transition_prior = [[8.0, 2.0], [2.0, 8.0]]
//!
//! [[models]]
//! id = "tvp"
//! kind = "tvpar"
//! order = 2
//! [models.tvp]               # state_var, a_mean, a_var, omega_scale, omega_dof, sigma_shape, sigma_rate
//! omega_scale = 0.001
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::backtest::{BacktestConfig, ModelEntry, DEFAULT_PREDICTIVE_DRAWS};
use crate::error::{Error, Result};
use crate::models::{ArSpec, McmcConfig, ModelSpec, MsArPrior, MsArSpec, PriorSettings, TvpArSpec};
use crate::scoring::{QuadratureGrid, ScoreFamily, ScoreKind, Weighting, DEFAULT_NODES};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    window: usize,
    horizons: Vec<usize>,
    benchmark: String,
    predictive_draws: Option<usize>,
    nodes_per_side: Option<usize>,
    max_vintages: Option<usize>,
    #[serde(default)]
    mcmc: RawMcmc,
    grid: Option<RawGrid>,
    #[serde(default)]
    scores: Vec<RawScore>,
    models: Vec<RawModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMcmc {
    burn: usize,
    keep: usize,
}

impl Default for RawMcmc {
    fn default() -> Self {
        let d = McmcConfig::default();
        RawMcmc {
            burn: d.burn,
            keep: d.keep,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    u_min: f64,
    u_max: f64,
    nodes_per_side: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScore {
    family: String,
    c: Option<OneOrMany>,
    weighting: Option<String>,
    scheme: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    id: String,
    kind: String,
    order: Option<usize>,
    lags: Option<Vec<usize>>,
    intercept: Option<bool>,
    prior: Option<PriorSettings>,
    transition_prior: Option<[[f64; 2]; 2]>,
    tvp: Option<TvpArSpec>,
}

fn score_kinds(raw: &[RawScore], errs: &mut Vec<String>) -> Vec<ScoreKind> {
    if raw.is_empty() {
        return ScoreKind::default_set();
    }
    let mut out = Vec::new();
    for (i, s) in raw.iter().enumerate() {
        let at = format!("scores[{i}]");
        let family = match s.family.parse::<ScoreFamily>() {
            Ok(f) => f,
            Err(e) => {
                errs.push(format!("{at}: {e}"));
                continue;
            }
        };
        let weighting = match Weighting::parse(
            s.weighting.as_deref().unwrap_or("none"),
            s.scheme.as_deref(),
        ) {
            Ok(w) => w,
            Err(e) => {
                errs.push(format!("{at}: {e}"));
                continue;
            }
        };
        let cs = match (&s.c, family) {
            (Some(OneOrMany::One(c)), _) => vec![*c],
            (Some(OneOrMany::Many(cs)), _) => cs.clone(),
            (None, ScoreFamily::Crps) => vec![0.5],
            (None, ScoreFamily::Acps) => {
                errs.push(format!("{at}: acps needs at least one asymmetry level c"));
                continue;
            }
        };
        if family == ScoreFamily::Crps && s.c.is_some() {
            errs.push(format!("{at}: c does not apply to crps"));
        }
        for c in cs {
            let kind = match family {
                ScoreFamily::Acps => ScoreKind::acps(c),
                ScoreFamily::Crps => ScoreKind::crps(),
            }
            .weighted(weighting);
            if let Err(e) = kind.validate() {
                errs.push(format!("{at}: {e}"));
            }
            out.push(kind);
        }
    }
    out
}

fn model_entry(raw: &RawModel, i: usize, errs: &mut Vec<String>) -> Option<ModelEntry> {
    let at = format!("models[{i}] ('{}')", raw.id);
    let mut bad = |msg: String| errs.push(format!("{at}: {msg}"));
    if raw.order.is_some() && raw.lags.is_some() {
        bad("give either order or lags, not both".into());
        return None;
    }
    let model = match raw.kind.as_str() {
        "ar" => {
            if raw.transition_prior.is_some() || raw.tvp.is_some() {
                bad("transition_prior and tvp apply to other model kinds".into());
            }
            let lags = raw
                .lags
                .clone()
                .unwrap_or_else(|| (1..=raw.order.unwrap_or(1)).collect());
            match ArSpec::new(lags, raw.intercept.unwrap_or(true)) {
                Ok(spec) => ModelSpec::Ar {
                    spec,
                    prior: raw.prior.unwrap_or_default(),
                },
                Err(e) => {
                    bad(e.to_string());
                    return None;
                }
            }
        }
        "msar" => {
            let lags = raw
                .lags
                .as_ref()
                .map_or(raw.order.unwrap_or(1), |l| l.len());
            let spec = MsArSpec { regimes: 2, lags };
            let prior = MsArPrior {
                regime: raw.prior.unwrap_or_default(),
                transition: raw
                    .transition_prior
                    .unwrap_or(MsArPrior::default().transition),
            };
            if raw.intercept == Some(false) || raw.tvp.is_some() {
                bad("msar always has an intercept and takes no tvp settings".into());
            }
            if let Err(e) = spec.validate().and_then(|_| prior.validate()) {
                bad(e.to_string());
                return None;
            }
            ModelSpec::MsAr { spec, prior }
        }
        "tvpar" => {
            let mut spec = raw.tvp.unwrap_or_default();
            if let Some(p) = raw.order {
                spec.lags = p;
            }
            if raw.lags.is_some()
                || raw.prior.is_some()
                || raw.transition_prior.is_some()
                || raw.intercept == Some(false)
            {
                bad("tvpar takes order and a [tvp] table only".into());
            }
            if let Err(e) = spec.validate() {
                bad(e.to_string());
                return None;
            }
            ModelSpec::TvpAr { spec }
        }
        other => {
            bad(format!(
                "unknown model kind '{other}' (expected ar, msar or tvpar)"
            ));
            return None;
        }
    };
    Some(ModelEntry {
        id: raw.id.clone(),
        model,
    })
}

/// Parses a configuration, reporting every schema violation at once.
pub fn parse_backtest_config(text: &str) -> Result<BacktestConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))?;
    let mut errs = Vec::new();
    let scores = score_kinds(&raw.scores, &mut errs);
    let models: Vec<ModelEntry> = raw
        .models
        .iter()
        .enumerate()
        .filter_map(|(i, m)| model_entry(m, i, &mut errs))
        .collect();
    let nodes = raw.nodes_per_side.unwrap_or(DEFAULT_NODES);
    let fixed_grid = raw.grid.as_ref().and_then(|g| {
        QuadratureGrid::new(g.u_min, g.u_max, g.nodes_per_side.unwrap_or(nodes))
            .map_err(|e| errs.push(format!("grid: {e}")))
            .ok()
    });
    let cfg = BacktestConfig {
        window: raw.window,
        horizons: raw.horizons,
        models,
        scores,
        benchmark: raw.benchmark,
        predictive_draws: raw.predictive_draws.unwrap_or(DEFAULT_PREDICTIVE_DRAWS),
        mcmc: McmcConfig::new(raw.mcmc.burn, raw.mcmc.keep, 0),
        seed: raw.seed,
        nodes_per_side: nodes,
        max_vintages: raw.max_vintages,
        fixed_grid,
    };
    // failed model entries already reported; skip the derived "benchmark missing" noise
    let failed_ids: Vec<&str> = raw.models.iter().map(|m| m.id.as_str()).collect();
    errs.extend(
        cfg.violations(None).into_iter().filter(|v| {
            !(v.starts_with("benchmark") && failed_ids.contains(&cfg.benchmark.as_str()))
        }),
    );
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

pub fn load_backtest_config(path: &Path) -> Result<BacktestConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::input(path.display().to_string(), format!("cannot read: {e}")))?;
    parse_backtest_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 7
window = 120
horizons = [1, 5]
benchmark = "wn"
max_vintages = 20

[mcmc]
burn = 100
keep = 200

[[scores]]
family = "crps"

[[scores]]
family = "acps"
c = [0.05, 0.95]
weighting = "threshold"
scheme = "right-tail"

[[models]]
id = "ar1"
kind = "ar"
order = 1
[models.prior]
coeff_var = 2.0

[[models]]
id = "wn"
kind = "ar"
lags = []

[[models]]
id = "ms"
kind = "msar"
transition_prior = [[9.0, 1.0], [1.0, 9.0]]

[[models]]
id = "tvp"
kind = "tvpar"
order = 2
[models.tvp]
omega_scale = 0.01
"#;

    #[test]
    fn parses_full_example() {
        let cfg = parse_backtest_config(FULL).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.horizons, vec![1, 5]);
        assert_eq!(cfg.mcmc, McmcConfig::new(100, 200, 0));
        assert_eq!(cfg.scores.len(), 3);
        assert_eq!(cfg.scores[2].label(), "tACPS(0.95,right-tail)");
        assert_eq!(cfg.model_ids(), vec!["ar1", "wn", "ms", "tvp"]);
        match &cfg.models[1].model {
            ModelSpec::Ar { spec, .. } => assert_eq!(spec.n_coeffs(), 1),
            m => panic!("{m:?}"),
        }
        match &cfg.models[3].model {
            ModelSpec::TvpAr { spec } => {
                assert_eq!(spec.lags, 2);
                assert_eq!(spec.omega_scale, 0.01);
            }
            m => panic!("{m:?}"),
        }
        assert_eq!(cfg.max_vintages, Some(20));
    }

    #[test]
    fn defaults_apply() {
        let cfg = parse_backtest_config(
            "window = 50\nhorizons = [1]\nbenchmark = \"a\"\n[[models]]\nid = \"a\"\nkind = \"ar\"\n",
        )
        .unwrap();
        assert_eq!(cfg.scores, ScoreKind::default_set());
        assert_eq!(cfg.mcmc.keep, 2000);
        assert_eq!(cfg.predictive_draws, DEFAULT_PREDICTIVE_DRAWS);
    }

    #[test]
    fn lists_every_violation() {
        let text = r#"
window = 0
horizons = [0]
benchmark = "missing"
[[scores]]
family = "acps"
c = 1.5
[[models]]
id = "x"
kind = "garch"
[[models]]
id = "y"
kind = "tvpar"
order = 4
"#;
        match parse_backtest_config(text) {
            Err(Error::Config(v)) => {
                let all = v.join("\n");
                for needle in [
                    "garch",
                    "TVP-AR supports",
                    "(0,1)",
                    "window",
                    "horizons",
                    "benchmark 'missing'",
                ] {
                    assert!(all.contains(needle), "missing '{needle}' in:\n{all}");
                }
            }
            other => panic!("{other:?}"),
        }
        let e = parse_backtest_config(
            "window = 1\nhorizons = [1]\nbenchmark = \"a\"\nmodels = []\nbogus = 1\n",
        )
        .unwrap_err();
        assert!(e.is_usage());
        assert!(e.to_string().contains("bogus"));
    }
}
