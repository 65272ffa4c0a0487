//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid usage or input, 1 runtime failure.
//! Data goes to stdout or the requested files; diagnostics go to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use acps::backtest::{all_traces, ranking_report, run_backtest};
use acps::config::load_backtest_config;
use acps::distributions::{AnalyticDistribution, PredictiveDistribution};
use acps::error::{Error, Result};
use acps::experiments::{run_experiment, Experiment, ExperimentConfig};
use acps::inference::{dm_test, ks_uniform_distance, pit, pit_histogram, Bandwidth};
use acps::io::{emit, read_draws, read_series, read_table, read_values, write_draws, Format};
use acps::models::{
    fit, predictive_draws, ArSpec, McmcConfig, ModelSpec, MsArPrior, MsArSpec, TvpArSpec,
};
use acps::scoring::{
    score, Orientation, QuadratureGrid, ScoreFamily, ScoreKind, Weighting, DEFAULT_C_LEVELS,
    DEFAULT_NODES,
};

#[derive(Parser, Debug)]
#[command(
    name = "acps",
    version,
    about = "Asymmetric proper scoring of density forecasts"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a forecast against realised values.
    Score(ScoreArgs),
    /// Diebold-Mariano test between two score files.
    Compare(CompareArgs),
    /// Rank candidate densities in a simulation experiment.
    Simulate(SimulateArgs),
    /// Rolling-window backtest driven by a TOML config.
    Backtest(BacktestArgs),
    /// Probability integral transforms of realised values.
    Pit(PitArgs),
    /// Fit a model to a series and write h-step predictive draws.
    Forecast(ForecastArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output format.
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: Format,
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ForecastSource {
    /// Single-column file of predictive draws (no header).
    #[arg(long)]
    forecast_draws: Option<PathBuf>,
    /// Analytic forecast, e.g. normal:0,1 (mean, variance), student-t:0,1,5,
    /// gamma:2,1 (shape, rate) or beta:1,2.
    #[arg(long)]
    forecast: Option<String>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[command(flatten)]
    source: ForecastSource,
    /// Realised values: one column without header, or a table with a `value` column.
    #[arg(long)]
    realizations: PathBuf,
    /// Score family: acps or crps.
    #[arg(long, default_value = "acps")]
    family: String,
    /// Asymmetry level (repeatable); defaults to 0.05, 0.275, 0.5, 0.725, 0.95.
    #[arg(long = "c")]
    c: Vec<f64>,
    /// Weighting: none, threshold or quantile.
    #[arg(long, default_value = "none")]
    weighting: String,
    /// Weight scheme: uniform, center, tails, right-tail or left-tail.
    #[arg(long)]
    scheme: Option<String>,
    /// Lower integration bound (default: from the forecast and the data).
    #[arg(long, allow_hyphen_values = true)]
    umin: Option<f64>,
    /// Upper integration bound.
    #[arg(long, allow_hyphen_values = true)]
    umax: Option<f64>,
    /// Quadrature node budget.
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Score file of the first forecast (as written by `score`).
    first: PathBuf,
    /// Score file of the second forecast.
    second: PathBuf,
    /// Use only rows with this score label, e.g. "ACPS(0.05)".
    #[arg(long)]
    score: Option<String>,
    /// Orientation when the files carry no orientation column: positive or negative.
    #[arg(long)]
    orientation: Option<String>,
    /// Bartlett bandwidth (default floor(1.2 T^(1/3))).
    #[arg(long)]
    bandwidth: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// normal, normal-shifted, student-t, gamma, beta or threshold-weighted.
    experiment: String,
    /// Number of target observations.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Draws per candidate forecast.
    #[arg(long = "draws", short = 'm', default_value_t = 500)]
    draws: usize,
    /// Score the exact candidate CDFs instead of sampled ones.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit records (csv or json) instead of the rank table.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BacktestArgs {
    /// Two-column CSV (timestamp, value) with header.
    #[arg(long)]
    series: PathBuf,
    /// TOML configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the output files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured window length.
    #[arg(long)]
    window: Option<usize>,
    /// Override the configured horizons (repeatable).
    #[arg(long)]
    horizon: Vec<usize>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: Format,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct PitSource {
    /// Directory with one draws file per period, read in file-name order.
    #[arg(long)]
    forecast_dir: Option<PathBuf>,
    /// Analytic forecast used for every period.
    #[arg(long)]
    forecast: Option<String>,
}

#[derive(Args, Debug)]
struct PitArgs {
    #[command(flatten)]
    source: PitSource,
    #[arg(long)]
    realizations: PathBuf,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Also write the histogram records to this file.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ForecastArgs {
    /// Two-column CSV (timestamp, value) with header.
    #[arg(long)]
    series: PathBuf,
    /// ar, msar or tvpar.
    #[arg(long, default_value = "ar")]
    model: String,
    /// Number of lags (0 gives white noise for ar).
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long, default_value_t = 1)]
    horizon: usize,
    #[arg(long, default_value_t = 500)]
    draws: usize,
    #[arg(long, default_value_t = 1000)]
    burn: usize,
    #[arg(long, default_value_t = 2000)]
    keep: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Single-column output file (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Score(a) => cmd_score(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Backtest(a) => cmd_backtest(a),
        Command::Pit(a) => cmd_pit(a),
        Command::Forecast(a) => cmd_forecast(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn load_forecast(src: &ForecastSource) -> Result<PredictiveDistribution> {
    match (&src.forecast_draws, &src.forecast) {
        (Some(p), _) => PredictiveDistribution::empirical(read_draws(p)?),
        (None, Some(spec)) => Ok(spec.parse::<AnalyticDistribution>()?.into()),
        (None, None) => Err(Error::Domain("give --forecast-draws or --forecast".into())),
    }
}

#[derive(Serialize)]
struct ScoreRecord {
    index: usize,
    y: f64,
    score: String,
    family: &'static str,
    c: Option<f64>,
    weighting: &'static str,
    scheme: Option<&'static str>,
    value: f64,
    orientation: &'static str,
    truncation_warning: bool,
    u_min: f64,
    u_max: f64,
    nodes_per_side: usize,
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let family: ScoreFamily = a.family.parse()?;
    let weighting = Weighting::parse(&a.weighting, a.scheme.as_deref())?;
    let kinds: Vec<ScoreKind> = match family {
        ScoreFamily::Crps => {
            if !a.c.is_empty() {
                return Err(Error::Domain("--c does not apply to --family crps".into()));
            }
            vec![ScoreKind::crps().weighted(weighting)]
        }
        ScoreFamily::Acps => {
            let cs = if a.c.is_empty() {
                DEFAULT_C_LEVELS.to_vec()
            } else {
                a.c.clone()
            };
            cs.into_iter()
                .map(|c| ScoreKind::acps(c).weighted(weighting))
                .collect()
        }
    };
    for k in &kinds {
        k.validate()?;
    }
    let forecast = load_forecast(&a.source)?;
    let ys = read_values(&a.realizations)?;
    let grid = match (a.umin, a.umax) {
        (Some(lo), Some(hi)) => QuadratureGrid::new(lo, hi, a.nodes)?,
        (None, None) => QuadratureGrid::shared(std::slice::from_ref(&forecast), &ys, a.nodes)?,
        _ => {
            return Err(Error::Domain(
                "give both --umin and --umax, or neither".into(),
            ))
        }
    };
    let mut records = Vec::with_capacity(ys.len() * kinds.len());
    for (i, &y) in ys.iter().enumerate() {
        for k in &kinds {
            let s = score(&forecast, y, &k.with_grid(grid))?;
            records.push(ScoreRecord {
                index: i,
                y,
                score: k.label(),
                family: k.family.name(),
                c: (k.family == ScoreFamily::Acps).then_some(k.c),
                weighting: k.weighting.name(),
                scheme: k.weighting.scheme().map(|s| s.name()),
                value: s.value,
                orientation: s.orientation.name(),
                truncation_warning: s.truncation_warning,
                u_min: grid.u_min,
                u_max: grid.u_max,
                nodes_per_side: grid.nodes_per_side,
            });
        }
    }
    if records.iter().any(|r| r.truncation_warning) {
        eprintln!(
            "warning: some observations fall outside [{}, {}]",
            grid.u_min, grid.u_max
        );
    }
    emit(a.out.output.as_deref(), &records, a.out.format)
}

struct ScoreSeries {
    index: Vec<String>,
    values: Vec<f64>,
    orientation: Option<Orientation>,
}

fn parse_orientation(s: &str) -> Result<Orientation> {
    match s.trim().to_ascii_lowercase().as_str() {
        "positive" => Ok(Orientation::PositivelyOriented),
        "negative" => Ok(Orientation::NegativelyOriented),
        other => Err(Error::Domain(format!(
            "unknown orientation '{other}' (expected positive or negative)"
        ))),
    }
}

fn read_score_series(path: &Path, label: Option<&str>) -> Result<ScoreSeries> {
    let bad = |msg: String| Error::Input {
        path: path.display().to_string(),
        message: msg,
    };
    let table = read_table(path)?;
    let value_col = table
        .column("value")
        .ok_or_else(|| bad("no 'value' column".into()))?;
    let index_col = table.column("index");
    let score_col = table.column("score");
    let orient_col = table.column("orientation");
    let mut rows: Vec<&(u64, Vec<String>)> = table.rows.iter().collect();
    if let Some(sc) = score_col {
        let mut labels: Vec<&str> = rows.iter().map(|(_, r)| r[sc].as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        match label {
            Some(l) => {
                rows.retain(|(_, r)| r[sc] == l);
                if rows.is_empty() {
                    return Err(bad(format!(
                        "no rows with score '{l}' (available: {})",
                        labels.join(", ")
                    )));
                }
            }
            None if labels.len() > 1 => {
                return Err(bad(format!(
                    "several scores present ({}); choose one with --score",
                    labels.join(", ")
                )));
            }
            None => {}
        }
    }
    let mut orientation = None;
    if let Some(oc) = orient_col {
        let first = rows.first().map(|(_, r)| r[oc].clone()).unwrap_or_default();
        if rows.iter().any(|(_, r)| r[oc] != first) {
            return Err(bad("mixed orientations".into()));
        }
        if !first.is_empty() {
            orientation = Some(parse_orientation(&first)?);
        }
    }
    let mut index = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (i, (line, r)) in rows.iter().enumerate() {
        index.push(index_col.map_or_else(|| i.to_string(), |c| r[c].clone()));
        let v: f64 = r[value_col]
            .parse()
            .map_err(|_| bad(format!("line {line}: '{}' is not a number", r[value_col])))?;
        values.push(v);
    }
    Ok(ScoreSeries {
        index,
        values,
        orientation,
    })
}

#[derive(Serialize)]
struct DmRecord {
    first: String,
    second: String,
    t: usize,
    mean_diff: f64,
    lrv: f64,
    bandwidth: usize,
    statistic: f64,
    p_value: f64,
    stars: &'static str,
    degenerate: bool,
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let s1 = read_score_series(&a.first, a.score.as_deref())?;
    let s2 = read_score_series(&a.second, a.score.as_deref())?;
    if s1.index != s2.index {
        let pos = s1.index.iter().zip(&s2.index).position(|(x, y)| x != y);
        return Err(Error::Domain(match pos {
            Some(p) => format!(
                "score files are misaligned at row {}: index '{}' vs '{}'",
                p + 1,
                s1.index[p],
                s2.index[p]
            ),
            None => format!(
                "score files have different lengths ({} vs {})",
                s1.index.len(),
                s2.index.len()
            ),
        }));
    }
    let orientation = match (a.orientation.as_deref(), s1.orientation, s2.orientation) {
        (Some(o), _, _) => parse_orientation(o)?,
        (None, Some(o1), Some(o2)) if o1 != o2 => {
            return Err(Error::Domain(
                "the two files have different orientations".into(),
            ));
        }
        (None, Some(o), _) | (None, None, Some(o)) => o,
        (None, None, None) => {
            return Err(Error::Domain(
                "files carry no orientation column; pass --orientation".into(),
            ));
        }
    };
    let bw = a.bandwidth.map_or(Bandwidth::Auto, Bandwidth::Fixed);
    let dm = dm_test(&s1.values, &s2.values, orientation, bw)?;
    let rec = DmRecord {
        first: a.first.display().to_string(),
        second: a.second.display().to_string(),
        t: dm.t,
        mean_diff: dm.mean_diff,
        lrv: dm.lrv,
        bandwidth: dm.bandwidth,
        statistic: dm.statistic,
        p_value: dm.p_value,
        stars: dm.stars(),
        degenerate: dm.degenerate,
    };
    emit(a.out.output.as_deref(), &[rec], a.out.format)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let experiment: Experiment = a.experiment.parse()?;
    let cfg = ExperimentConfig {
        n: a.n,
        draws: if a.exact { None } else { Some(a.draws) },
        nodes_per_side: a.nodes,
        seed: a.seed,
    };
    let result = run_experiment(experiment, &cfg)?;
    match a.format {
        Some(f) => emit(a.output.as_deref(), &result.records(), f),
        None => {
            let text = result.render();
            match a.output {
                Some(p) => fs::write(&p, text).map_err(Error::from),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn cmd_backtest(a: BacktestArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = load_backtest_config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(w) = a.window {
        cfg.window = w;
    }
    if !a.horizon.is_empty() {
        cfg.horizons = a.horizon.clone();
    }
    let series = read_series(&a.series)?;
    cfg.validate(Some(series.len()))?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Input {
        path: a.out_dir.display().to_string(),
        message: format!("cannot create: {e}"),
    })?;
    let table = run_backtest(&series, &cfg)?;
    let report = ranking_report(&table, &cfg.benchmark)?;
    let (traces, freqs) = all_traces(&table)?;
    let e = ext(a.format);
    let path = |name: &str| a.out_dir.join(format!("{name}.{e}"));
    emit(Some(&path("vintages")), &table.records(), a.format)?;
    emit(Some(&path("ranking")), &report.records(), a.format)?;
    emit(Some(&path("trace")), &traces, a.format)?;
    emit(Some(&path("frequency")), &freqs, a.format)?;
    fs::write(a.out_dir.join("ranking.txt"), report.render())?;

    let failed = table
        .vintages
        .iter()
        .flat_map(|v| &v.cells)
        .filter(|c| c.failed())
        .count();
    eprintln!(
        "models: {}\nvintages: {} per horizon, horizons {:?}\nfailed cells: {failed}\nwall time: {:.1}s",
        cfg.model_ids().join(", "),
        table.n_origins(),
        cfg.horizons,
        start.elapsed().as_secs_f64()
    );
    eprint!("{}", report.render());
    Ok(())
}

#[derive(Serialize)]
struct PitRecord {
    index: usize,
    y: f64,
    pit: f64,
}

#[derive(Serialize)]
struct HistogramRecord {
    bin: usize,
    lower: f64,
    upper: f64,
    frequency: f64,
}

fn cmd_pit(a: PitArgs) -> Result<()> {
    if a.bins == 0 {
        return Err(Error::Domain("--bins must be positive".into()));
    }
    let ys = read_values(&a.realizations)?;
    let forecasts: Vec<PredictiveDistribution> = match (&a.source.forecast_dir, &a.source.forecast)
    {
        (Some(dir), _) => {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| Error::Input {
                    path: dir.display().to_string(),
                    message: format!("cannot read: {e}"),
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            files
                .iter()
                .map(|p| PredictiveDistribution::empirical(read_draws(p)?))
                .collect::<Result<_>>()?
        }
        (None, Some(spec)) => vec![spec.parse::<AnalyticDistribution>()?.into(); ys.len()],
        (None, None) => return Err(Error::Domain("give --forecast-dir or --forecast".into())),
    };
    if forecasts.len() != ys.len() {
        return Err(Error::Domain(format!(
            "{} forecasts for {} realizations",
            forecasts.len(),
            ys.len()
        )));
    }
    let records = ys
        .iter()
        .zip(&forecasts)
        .enumerate()
        .map(|(index, (&y, f))| {
            Ok(PitRecord {
                index,
                y,
                pit: pit(f, y)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pits: Vec<f64> = records.iter().map(|r| r.pit).collect();
    let hist: Vec<HistogramRecord> = pit_histogram(&pits, a.bins)
        .into_iter()
        .enumerate()
        .map(|(bin, frequency)| HistogramRecord {
            bin,
            lower: bin as f64 / a.bins as f64,
            upper: (bin + 1) as f64 / a.bins as f64,
            frequency,
        })
        .collect();
    emit(a.out.output.as_deref(), &records, a.out.format)?;
    if let Some(p) = &a.histogram {
        emit(Some(p), &hist, a.out.format)?;
    }
    eprintln!(
        "PIT histogram ({} periods, KS distance {:.4}):",
        pits.len(),
        ks_uniform_distance(&pits)
    );
    for h in &hist {
        eprintln!("  [{:.2}, {:.2})  {:.4}", h.lower, h.upper, h.frequency);
    }
    Ok(())
}

fn cmd_forecast(a: ForecastArgs) -> Result<()> {
    let series = read_series(&a.series)?;
    let model = match a.model.as_str() {
        "ar" => ModelSpec::Ar {
            spec: if a.order == 0 {
                ArSpec::white_noise()
            } else {
                ArSpec::order(a.order)?
            },
            prior: Default::default(),
        },
        "msar" => ModelSpec::MsAr {
            spec: MsArSpec {
                regimes: 2,
                lags: a.order,
            },
            prior: MsArPrior::default(),
        },
        "tvpar" => ModelSpec::TvpAr {
            spec: TvpArSpec::with_lags(a.order),
        },
        other => {
            return Err(Error::Domain(format!(
                "unknown model '{other}' (expected ar, msar or tvpar)"
            )))
        }
    };
    let mcmc = McmcConfig::new(a.burn, a.keep, a.seed);
    let post = fit(&series.values, &model, &mcmc)?;
    let sample = predictive_draws(
        &post,
        &series.values,
        a.horizon,
        a.draws,
        a.seed.wrapping_add(1),
    )?;
    match a.output {
        Some(p) => write_draws(&p, &sample.draws),
        None => {
            for d in &sample.draws {
                println!("{d}");
            }
            Ok(())
        }
    }
}
