//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF, Gamma, Normal, StudentsT};

use acps::backtest::{ranking_report, run_backtest};
use acps::config::load_backtest_config;
use acps::distributions::{AnalyticDistribution, PredictiveDistribution};
use acps::experiments::{run_experiment, Experiment, ExperimentConfig};
use acps::inference::{
    dm_test_differential, ks_uniform_distance, pit, Bandwidth, LossDifferentialSeries,
};
use acps::io::{read_series, write_records, Format};
use acps::models::ar::{coefficient_conditional, sigma2_conditional};
use acps::models::msar::transition_posterior_mean;
use acps::models::{
    fit, fit_ar, fit_msar, fit_tvpar, predictive_draws, ArSpec, McmcConfig, ModelSpec, MsArPrior,
    MsArSpec, NigPrior, PosteriorDraws, PriorSettings, TvpArSpec,
};
use acps::rng::{mix_seed, rng_from_seed, SeededRng};
use acps::scoring::{
    average_score, rank_models, score, QuadratureGrid, ScoreKind, WeightScheme, Weighting,
    DEFAULT_NODES,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn normal(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn random_analytic(rng: &mut SeededRng) -> AnalyticDistribution {
    match rng.random_range(0..4) {
        0 => AnalyticDistribution::normal(rng.random_range(-5.0..5.0), rng.random_range(0.1..9.0))
            .unwrap(),
        1 => AnalyticDistribution::student_t(
            rng.random_range(-5.0..5.0),
            rng.random_range(0.3..3.0),
            rng.random_range(2.5..30.0),
        )
        .unwrap(),
        2 => AnalyticDistribution::gamma(rng.random_range(1.0..6.0), rng.random_range(0.5..3.0))
            .unwrap(),
        _ => AnalyticDistribution::beta(rng.random_range(1.0..6.0), rng.random_range(1.0..6.0))
            .unwrap(),
    }
}

fn random_forecast(rng: &mut SeededRng, empirical: bool) -> PredictiveDistribution {
    let d = random_analytic(rng);
    if empirical {
        let m = rng.random_range(20..1000);
        let seed = rng.random();
        PredictiveDistribution::empirical(d.sample(m, seed).unwrap()).unwrap()
    } else {
        d.into()
    }
}

/// Observation drawn from a slightly wider range than the forecast's bulk.
fn random_y(rng: &mut SeededRng, f: &PredictiveDistribution) -> f64 {
    let lo = f.quantile(0.001).unwrap();
    let hi = f.quantile(0.999).unwrap();
    let pad = 0.2 * (hi - lo);
    rng.random_range(lo - pad..hi + pad)
}

fn random_grid(rng: &mut SeededRng, f: &PredictiveDistribution, y: f64) -> QuadratureGrid {
    let base = QuadratureGrid::for_forecast(f, y, DEFAULT_NODES).unwrap();
    let w = base.width();
    QuadratureGrid::new(
        base.u_min - rng.random_range(0.0..0.5) * w,
        base.u_max + rng.random_range(0.0..0.5) * w,
        rng.random_range(16..257),
    )
    .unwrap()
}

fn properness() -> Outcome {
    let cfg = ExperimentConfig {
        n: 20_000,
        draws: None,
        seed: 1,
        ..ExperimentConfig::default()
    };
    let mut failures = Vec::new();
    let mut rows = 0;
    for exp in [
        Experiment::Normal,
        Experiment::StudentT,
        Experiment::Gamma,
        Experiment::Beta,
    ] {
        let res = run_experiment(exp, &cfg).unwrap();
        let truth = res
            .candidates
            .iter()
            .position(|c| *c == res.target)
            .expect("target among candidates");
        for row in &res.rows {
            rows += 1;
            if row.ranks[truth] != 1 {
                failures.push(format!(
                    "{exp} {} truth rank {}",
                    row.score, row.ranks[truth]
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{rows} rows, truth rank 1 in {}{}",
            rows - failures.len(),
            list(&failures)
        ),
    )
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        String::new()
    } else {
        format!("; failures: {}", items.join("; "))
    }
}

fn affine_identity() -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut max_err: f64 = 0.0;
    for i in 0..1000 {
        let f = random_forecast(&mut rng, i % 2 == 1);
        let y = random_y(&mut rng, &f);
        let grid = random_grid(&mut rng, &f, y);
        let a = score(&f, y, &ScoreKind::acps(0.5).with_grid(grid))
            .unwrap()
            .value;
        let c = score(&f, y, &ScoreKind::crps().with_grid(grid))
            .unwrap()
            .value;
        max_err = max_err.max((a - (grid.width() - 4.0 * c)).abs());
    }
    let mut same = 0;
    let cases = 200;
    for i in 0..cases {
        let k = rng.random_range(2..6);
        let forecasts: Vec<PredictiveDistribution> = (0..k)
            .map(|_| random_forecast(&mut rng, i % 2 == 1))
            .collect();
        let truth = random_analytic(&mut rng);
        let ys = truth.sample(50, rng.random()).unwrap();
        let grid = QuadratureGrid::shared(&forecasts, &ys, DEFAULT_NODES).unwrap();
        let ranks = |kind: ScoreKind| {
            let spec = kind.with_grid(grid);
            let avgs: Vec<(usize, _)> = forecasts
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    (
                        j,
                        average_score(std::slice::from_ref(f), &ys, &spec).unwrap(),
                    )
                })
                .collect();
            rank_models(&avgs).unwrap()
        };
        if ranks(ScoreKind::acps(0.5)) == ranks(ScoreKind::crps()) {
            same += 1;
        }
    }
    outcome(
        max_err < 1e-8 && same == cases,
        format!("max |ACPS(0.5) - (width - 4 CRPS)| = {max_err:.2e} over 1000 cases; identical rankings {same}/{cases}"),
    )
}

fn rank_flips() -> Outcome {
    let cfg = ExperimentConfig {
        n: 20_000,
        draws: None,
        seed: 3,
        ..ExperimentConfig::default()
    };
    let res = run_experiment(Experiment::Normal, &cfg).unwrap();
    let lo = res.row(&ScoreKind::acps(0.05)).unwrap();
    let hi = res.row(&ScoreKind::acps(0.95)).unwrap();
    // candidates: N(0,1), N(-3,1), N(3,1), N(0,16)
    let pass = lo.ranks[1] < lo.ranks[2] && hi.ranks[2] < hi.ranks[1];
    outcome(
        pass,
        format!(
            "ACPS(0.05) ranks {:?}, ACPS(0.95) ranks {:?} for [N(0,1), N(-3,1), N(3,1), N(0,16)]",
            lo.ranks, hi.ranks
        ),
    )
}

fn weighted_collapse() -> Outcome {
    let mut rng = rng_from_seed(4);
    let mut max_rel: f64 = 0.0;
    for i in 0..500 {
        let f = random_forecast(&mut rng, i % 2 == 1);
        let y = random_y(&mut rng, &f);
        let grid = random_grid(&mut rng, &f, y);
        let c = rng.random_range(0.02..0.98);
        let plain = score(&f, y, &ScoreKind::acps(c).with_grid(grid))
            .unwrap()
            .value;
        for w in [
            Weighting::Threshold(WeightScheme::Uniform),
            Weighting::Quantile(WeightScheme::Uniform),
        ] {
            let v = score(&f, y, &ScoreKind::acps(c).weighted(w).with_grid(grid))
                .unwrap()
                .value;
            max_rel = max_rel.max((v - plain).abs() / plain.abs().max(f64::MIN_POSITIVE));
        }
    }
    let cfg = ExperimentConfig {
        n: 20_000,
        draws: None,
        seed: 5,
        ..ExperimentConfig::default()
    };
    let res = run_experiment(Experiment::ThresholdWeighted, &cfg).unwrap();
    let kind = ScoreKind::acps(0.95).weighted(Weighting::Threshold(WeightScheme::RightTail));
    let row = res.row(&kind).unwrap();
    let spot = row.ranks[2] < row.ranks[0];
    outcome(
        max_rel < 1e-10 && spot,
        format!(
            "max relative gap {max_rel:.2e} over 500 cases; {kind} ranks N(3,1) {} vs N(0,1) {}",
            row.ranks[2], row.ranks[0]
        ),
    )
}

/// Reference CDF built from statrs or from sorted draws.
enum Oracle {
    Analytic(Box<dyn Fn(f64) -> f64>),
    Empirical(Vec<f64>),
}

impl Oracle {
    fn cdf(&self, u: f64) -> f64 {
        match self {
            Oracle::Analytic(f) => f(u),
            Oracle::Empirical(d) => d.partition_point(|&x| x <= u) as f64 / d.len() as f64,
        }
    }
}

fn oracle_for(d: &AnalyticDistribution) -> Oracle {
    let f: Box<dyn Fn(f64) -> f64> = match *d {
        AnalyticDistribution::Normal { mean, variance } => {
            let n = Normal::new(mean, variance.sqrt()).unwrap();
            Box::new(move |u| n.cdf(u))
        }
        AnalyticDistribution::StudentT {
            location,
            scale,
            dof,
        } => {
            let t = StudentsT::new(location, scale, dof).unwrap();
            Box::new(move |u| t.cdf(u))
        }
        AnalyticDistribution::Gamma { shape, rate } => {
            let g = Gamma::new(shape, rate).unwrap();
            Box::new(move |u| if u <= 0.0 { 0.0 } else { g.cdf(u) })
        }
        AnalyticDistribution::Beta { a, b } => {
            let be = Beta::new(a, b).unwrap();
            Box::new(move |u| {
                if u <= 0.0 {
                    0.0
                } else if u >= 1.0 {
                    1.0
                } else {
                    be.cdf(u)
                }
            })
        }
    };
    Oracle::Analytic(f)
}

/// Binary asymmetric score integrated over thresholds with a trapezoid rule on
/// 200,001 points split at y. CRPS uses the squared-error integrand.
fn trapezoid_score(cdf: &Oracle, y: f64, c: Option<f64>, grid: &QuadratureGrid) -> f64 {
    const POINTS: usize = 200_000;
    let integrand = |u: f64, event: bool| {
        let p = cdf.cdf(u);
        match c {
            None => {
                let ind = if event { 1.0 } else { 0.0 };
                (p - ind) * (p - ind)
            }
            Some(c) => {
                let t = if p > c {
                    1.0 / ((1.0 - c) * (1.0 - c))
                } else {
                    1.0 / (c * c)
                };
                if event {
                    ((1.0 - c) * (1.0 - c) - (1.0 - p) * (1.0 - p)) * t
                } else {
                    (c * c - p * p) * t
                }
            }
        }
    };
    let side = |a: f64, b: f64, n: usize, event: bool| {
        if b <= a || n == 0 {
            return 0.0;
        }
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (integrand(a, event) + integrand(b, event));
        for i in 1..n {
            s += integrand(a + i as f64 * h, event);
        }
        s * h
    };
    let yc = y.clamp(grid.u_min, grid.u_max);
    let n_left = ((yc - grid.u_min) / grid.width() * POINTS as f64).round() as usize;
    side(grid.u_min, yc, n_left, false) + side(yc, grid.u_max, POINTS - n_left, true)
}

fn quadrature_oracle() -> Outcome {
    let mut rng = rng_from_seed(6);
    let mut worst_analytic: f64 = 0.0;
    let mut worst_empirical: f64 = 0.0;
    for i in 0..200 {
        let empirical = i >= 100;
        let d = random_analytic(&mut rng);
        let (f, oracle) = if empirical {
            let mut draws = d.sample(500, rng.random()).unwrap();
            let f = PredictiveDistribution::empirical(draws.clone()).unwrap();
            draws.sort_by(f64::total_cmp);
            (f, Oracle::Empirical(draws))
        } else {
            (PredictiveDistribution::from(d), oracle_for(&d))
        };
        let y = random_y(&mut rng, &f);
        let grid = QuadratureGrid::for_forecast(&f, y, DEFAULT_NODES).unwrap();
        let c = rng.random_range(0.02..0.98);
        for (kind, level) in [(ScoreKind::acps(c), Some(c)), (ScoreKind::crps(), None)] {
            let gl = score(&f, y, &kind.with_grid(grid)).unwrap().value;
            let tr = trapezoid_score(&oracle, y, level, &grid);
            let rel = (gl - tr).abs() / tr.abs();
            if empirical {
                worst_empirical = worst_empirical.max(rel);
            } else {
                worst_analytic = worst_analytic.max(rel);
            }
        }
    }
    outcome(
        worst_analytic < 1e-6 && worst_empirical < 1e-3,
        format!("max relative error analytic {worst_analytic:.2e} (100 cases), empirical M=500 {worst_empirical:.2e} (100 cases)"),
    )
}

fn dm_size_power() -> Outcome {
    let reps = 2000u64;
    let t = 500;
    let rate = |shift: f64, stream: u64| {
        let rejections: usize = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_from_seed(mix_seed(7, &[stream, r]));
                let d_star: Vec<f64> = (0..t).map(|_| normal(&mut rng) + shift).collect();
                let res = dm_test_differential(&LossDifferentialSeries { d_star }, Bandwidth::Auto)
                    .unwrap();
                usize::from(res.p_value < 0.05)
            })
            .sum();
        rejections as f64 / reps as f64
    };
    let size = rate(0.0, 0);
    let power = rate(0.2, 1);
    outcome(
        (0.035..=0.065).contains(&size) && power > 0.99,
        format!(
            "size {:.2}%, power at mean 0.2 {:.2}% (2000 reps, T=500)",
            size * 100.0,
            power * 100.0
        ),
    )
}

fn ar_conjugacy() -> (bool, String) {
    let mut rng = rng_from_seed(8);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, k) = (60, 3);
        let x = DMatrix::from_fn(n, k, |_, j| if j == 0 { 1.0 } else { normal(&mut rng) });
        let y = DVector::from_fn(n, |_, _| normal(&mut rng));
        let l = DMatrix::from_fn(k, k, |i, j| {
            if i > j {
                0.3 * normal(&mut rng)
            } else if i == j {
                1.0
            } else {
                0.0
            }
        });
        let prior = NigPrior {
            coeff_mean: DVector::from_fn(k, |_, _| normal(&mut rng)),
            coeff_cov: &l * l.transpose(),
            sigma_shape: 2.0,
            sigma_rate: 1.5,
        };
        let s2 = rng.random_range(0.2..3.0);
        let (mean, cov) = coefficient_conditional(&x, &y, &prior, s2).unwrap();
        // precision form solved through Cholesky factors
        let p0 = prior.coeff_cov.clone().cholesky().unwrap().inverse();
        let prec = &p0 + x.transpose() * &x / s2;
        let chol = prec.cholesky().unwrap();
        let ref_mean = chol.solve(&(&p0 * &prior.coeff_mean + x.transpose() * &y / s2));
        let ref_cov = chol.inverse();
        worst = worst
            .max((mean - ref_mean).amax())
            .max((cov - ref_cov).amax());

        let resid = &y - &x * &prior.coeff_mean;
        let ssr = resid.dot(&resid);
        let (shape, rate) = sigma2_conditional(ssr, n, &prior);
        worst = worst
            .max((shape - (2.0 + n as f64 / 2.0)).abs())
            .max((rate - (1.5 + ssr / 2.0)).abs());
    }
    let xi = transition_posterior_mean(&[[83.0, 9.0], [4.0, 40.0]], &[[8.0, 2.0], [2.0, 8.0]]);
    worst = worst
        .max((xi[0][0] - 91.0 / 102.0).abs())
        .max((xi[1][1] - 48.0 / 54.0).abs());
    (worst < 1e-8, format!("conjugacy max gap {worst:.1e}"))
}

struct MsTruth {
    alpha: [f64; 2],
    beta: [f64; 2],
    sd: [f64; 2],
    stay: f64,
}

/// Returns (y, states) with `y.len() == n + 1` after a burn-in.
fn simulate_ms(truth: &MsTruth, n: usize, rng: &mut SeededRng) -> (Vec<f64>, Vec<usize>) {
    let mut s = 0usize;
    let mut y = 0.0;
    let mut ys = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    for t in 0..n + 101 {
        if rng.random::<f64>() > truth.stay {
            s = 1 - s;
        }
        y = truth.alpha[s] + truth.beta[s] * y + truth.sd[s] * normal(rng);
        if t > 99 {
            ys.push(y);
            states.push(s);
        }
    }
    (ys, states)
}

fn ms_recovery() -> (bool, String) {
    let truth = MsTruth {
        alpha: [0.0, 0.0],
        beta: [0.5, 0.5],
        sd: [0.5, 3.0],
        stay: 0.95,
    };
    let mut rng = rng_from_seed(9);
    let (y, states) = simulate_ms(&truth, 1500, &mut rng);
    let post = fit_msar(
        &y,
        &MsArSpec::default(),
        &MsArPrior::default(),
        &McmcConfig::new(1000, 2000, 10),
    )
    .unwrap();
    let path = post.posterior_mode_path();
    let hits = path
        .iter()
        .zip(&states[1..])
        .filter(|(a, b)| a == b)
        .count();
    let recovery = hits as f64 / path.len() as f64;
    let ordered = post.sigma2.iter().filter(|s| s[0] < s[1]).count();
    let pass = recovery >= 0.9 && ordered == post.sigma2.len();
    (
        pass,
        format!(
            "MS regime recovery {:.1}%, variance ordering {ordered}/{}",
            recovery * 100.0,
            post.sigma2.len()
        ),
    )
}

fn tvp_break() -> (bool, String) {
    let n = 1000;
    let mut lasts = Vec::new();
    let mut pass = true;
    for seed in [23u64, 33, 43] {
        let mut rng = rng_from_seed(mix_seed(seed, &[1]));
        let mut y = vec![0.0];
        for t in 0..n {
            let b = if t < n / 2 { 0.2 } else { 0.8 };
            let prev = *y.last().unwrap();
            y.push(b * prev + normal(&mut rng));
        }
        let post = fit_tvpar(
            &y,
            &TvpArSpec::default(),
            &McmcConfig::new(300, 500, seed + 1),
        )
        .unwrap();
        let last = post.path_mean.last().unwrap()[1];
        pass &= (last - 0.8).abs() < (last - 0.2).abs();
        lasts.push(format!("{last:.2}"));
    }
    (
        pass,
        format!(
            "TVP break slope at T {} (pre 0.2, post 0.8)",
            lasts.join("/")
        ),
    )
}

/// 90% central interval from the predictive draws covers `actual`.
fn covers(post: &PosteriorDraws, y: &[f64], actual: f64, seed: u64) -> bool {
    let draws = predictive_draws(post, y, 1, 500, seed).unwrap().draws;
    let f = PredictiveDistribution::empirical(draws).unwrap();
    let (lo, hi) = (f.quantile(0.05).unwrap(), f.quantile(0.95).unwrap());
    lo <= actual && actual <= hi
}

fn coverage(class: u64) -> f64 {
    let reps = 2000u64;
    let hits: usize = (0..reps)
        .into_par_iter()
        .map(|r| {
            let seed = mix_seed(11, &[class, r]);
            let mut rng = rng_from_seed(seed);
            let (y, actual, post) = match class {
                0 => {
                    let mut v = 0.0;
                    let mut y = Vec::new();
                    for t in 0..301 {
                        v = 0.5 + 0.6 * v + normal(&mut rng);
                        if t >= 100 {
                            y.push(v);
                        }
                    }
                    let actual = 0.5 + 0.6 * v + normal(&mut rng);
                    let spec = ArSpec::order(1).unwrap();
                    let prior =
                        NigPrior::default_for(&y, &spec, &PriorSettings::default()).unwrap();
                    let post = fit_ar(&y, &spec, &prior, &McmcConfig::new(200, 400, seed)).unwrap();
                    (y, actual, PosteriorDraws::Ar(post))
                }
                1 => {
                    let truth = MsTruth {
                        alpha: [0.0, 0.0],
                        beta: [0.5, 0.3],
                        sd: [0.5, 2.0],
                        stay: 0.95,
                    };
                    let (mut y, _) = simulate_ms(&truth, 301, &mut rng);
                    let actual = y.pop().unwrap();
                    let model = ModelSpec::MsAr {
                        spec: MsArSpec::default(),
                        prior: MsArPrior::default(),
                    };
                    let post = fit(&y, &model, &McmcConfig::new(200, 400, seed)).unwrap();
                    (y, actual, post)
                }
                _ => {
                    let (mut a, mut b) = (0.0, 0.5);
                    let mut v = 0.0;
                    let mut y = vec![v];
                    for _ in 0..151 {
                        a += 0.01 * normal(&mut rng);
                        b = (b + 0.01 * normal(&mut rng)).clamp(-0.95, 0.95);
                        v = a + b * v + normal(&mut rng);
                        y.push(v);
                    }
                    let actual = y.pop().unwrap();
                    let post =
                        fit_tvpar(&y, &TvpArSpec::default(), &McmcConfig::new(150, 300, seed))
                            .unwrap();
                    (y, actual, PosteriorDraws::TvpAr(post))
                }
            };
            usize::from(covers(&post, &y, actual, mix_seed(seed, &[1])))
        })
        .sum();
    hits as f64 / reps as f64
}

fn model_suites() -> Outcome {
    let (conj_ok, conj) = ar_conjugacy();
    let (ms_ok, ms) = ms_recovery();
    let (tvp_ok, tvp) = tvp_break();
    let mut cov_ok = true;
    let mut cov = Vec::new();
    for (class, name) in [(0, "AR"), (1, "MS-AR"), (2, "TVP-AR")] {
        let rate = coverage(class);
        cov_ok &= (rate - 0.9).abs() <= 0.03;
        cov.push(format!("{name} {:.1}%", rate * 100.0));
    }
    outcome(
        conj_ok && ms_ok && tvp_ok && cov_ok,
        format!(
            "{conj}; {ms}; {tvp}; 90% interval coverage {}",
            cov.join(", ")
        ),
    )
}

fn backtest_end_to_end() -> Outcome {
    let series = read_series(&repo_path("fixtures/ar1_series.csv")).unwrap();
    let cfg = load_backtest_config(&repo_path("fixtures/backtest_ar1.toml")).unwrap();
    let serialize = || {
        let table = run_backtest(&series, &cfg).unwrap();
        let report = ranking_report(&table, &cfg.benchmark).unwrap();
        let mut bytes = Vec::new();
        write_records(&mut bytes, &table.records(), Format::Csv).unwrap();
        write_records(&mut bytes, &report.records(), Format::Csv).unwrap();
        (table, report, bytes)
    };
    let (table, report, first) = serialize();
    let (_, _, second) = serialize();
    let truth = report.model_ids.iter().position(|m| m == "ar1").unwrap();
    let mut failures = Vec::new();
    for row in &report.rows {
        let m = &row.models[truth];
        if m.rank != 1 {
            failures.push(format!("h={} {} rank {}", row.horizon, row.score, m.rank));
        }
        if row.horizon == 1 && !matches!(m.stars(), "**" | "***") {
            failures.push(format!("h=1 {} stars '{}'", row.score, m.stars()));
        }
    }
    let identical = first == second;
    let h1: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.horizon == 1)
        .map(|r| format!("{}{}", r.score, r.models[truth].stars()))
        .collect();
    outcome(
        failures.is_empty() && identical && table.n_origins() == 100,
        format!(
            "{} vintages, {} score rows, true model rank 1 in {}/{}; h=1 stars {}; reruns byte-identical: {identical}{}",
            table.n_origins(),
            report.rows.len(),
            report.rows.iter().filter(|r| r.models[truth].rank == 1).count(),
            report.rows.len(),
            h1.join(" "),
            list(&failures)
        ),
    )
}

fn pit_uniformity() -> Outcome {
    let mut rng = rng_from_seed(12);
    let pits: Vec<f64> = (0..100_000)
        .map(|_| {
            let mean = rng.random_range(-3.0..3.0);
            let var = rng.random_range(0.5..4.0);
            let f = PredictiveDistribution::from(AnalyticDistribution::normal(mean, var).unwrap());
            let y = mean + var.sqrt() * normal(&mut rng);
            pit(&f, y).unwrap()
        })
        .collect();
    let ks = ks_uniform_distance(&pits);
    outcome(ks < 0.01, format!("KS distance {ks:.4} over 100000 PITs"))
}

/// Name, check and optional runtime budget.
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("properness", properness, Some(Duration::from_secs(60))),
        ("affine identity", affine_identity, None),
        ("asymmetric rank flips", rank_flips, None),
        ("weighted collapse", weighted_collapse, None),
        ("quadrature oracle", quadrature_oracle, None),
        (
            "DM size and power",
            dm_size_power,
            Some(Duration::from_secs(30)),
        ),
        ("model suites", model_suites, Some(Duration::from_secs(600))),
        (
            "end-to-end backtest",
            backtest_end_to_end,
            Some(Duration::from_secs(900)),
        ),
        ("PIT uniformity", pit_uniformity, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
        println!(
            "criterion {} {name}: {} ({}; {:.1}s{budget})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
