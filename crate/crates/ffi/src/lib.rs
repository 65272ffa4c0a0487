//! C ABI over the `acps` library.
//!
//! Conventions:
//! - every fallible function returns an [`AcpsStatus`]; results go through
//!   out-pointers, which are left untouched on failure;
//! - the message of the most recent failure on the calling thread is
//!   available from [`acps_last_error_message`];
//! - forecasts and posteriors are opaque handles created by `acps_forecast_*` /
//!   `acps_fit_*` and released with the matching `*_free` function;
//! - panics never cross the boundary; they are reported as `ACPS_STATUS_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use acps::distributions::{AnalyticDistribution, PredictiveDistribution};
use acps::error::Error;
use acps::inference::{self, Bandwidth};
use acps::models::{
    self, ArSpec, McmcConfig, ModelSpec, MsArPrior, MsArSpec, PosteriorDraws, PriorSettings,
    TvpArSpec,
};
use acps::scoring::{self, Orientation, QuadratureGrid, ScoreKind, WeightScheme, Weighting};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcpsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    ErrNull = 1,
    /// An argument is outside its valid domain.
    ErrDomain = 2,
    /// A numerical routine failed (e.g. a singular matrix).
    ErrNumerical = 3,
    /// The requested model or option is not supported.
    ErrUnsupported = 4,
    /// Invalid input data or configuration.
    ErrInput = 5,
    /// An internal panic was caught.
    ErrPanic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcpsFamily {
    Acps = 0,
    Crps = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcpsWeighting {
    None = 0,
    Threshold = 1,
    Quantile = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcpsScheme {
    Uniform = 0,
    Center = 1,
    Tails = 2,
    RightTail = 3,
    LeftTail = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcpsOrientation {
    /// Larger is better (ACPS).
    Positive = 0,
    /// Smaller is better (CRPS).
    Negative = 1,
}

/// What to compute. `c` is ignored for CRPS and `scheme` when `weighting` is none.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AcpsScoreKind {
    pub family: AcpsFamily,
    pub c: f64,
    pub weighting: AcpsWeighting,
    pub scheme: AcpsScheme,
}

/// Truncation bounds and Gauss-Legendre nodes per side of the observation.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AcpsGrid {
    pub u_min: f64,
    pub u_max: f64,
    pub nodes_per_side: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AcpsScoreValue {
    pub value: f64,
    pub orientation: AcpsOrientation,
    /// Non-zero when the observation fell outside the grid.
    pub truncation_warning: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AcpsDmResult {
    pub t: usize,
    pub mean_diff: f64,
    pub lrv: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub bandwidth: usize,
    /// Non-zero when the long-run variance is zero.
    pub degenerate: i32,
}

/// Opaque probabilistic forecast (analytic or empirical).
pub struct AcpsForecast(PredictiveDistribution);

/// Opaque posterior from one of the Bayesian AR samplers.
pub struct AcpsPosterior(PosteriorDraws);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> AcpsStatus {
    match err {
        Error::Domain(_) => AcpsStatus::ErrDomain,
        Error::Numerical(_) => AcpsStatus::ErrNumerical,
        Error::Unsupported(_) => AcpsStatus::ErrUnsupported,
        Error::Input { .. } | Error::Config(_) | Error::Io(_) => AcpsStatus::ErrInput,
    }
}

struct Failure(AcpsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(AcpsStatus::ErrNull, format!("{name} is null"))
}

fn domain(msg: impl Into<String>) -> Failure {
    Failure(AcpsStatus::ErrDomain, msg.into())
}

/// Runs `f`, records any failure and converts it to a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AcpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AcpsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            AcpsStatus::ErrPanic
        }
    }
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn ref_arg<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T) {
    ptr::write(out, value);
}

fn to_kind(k: &AcpsScoreKind) -> ScoreKind {
    let scheme = match k.scheme {
        AcpsScheme::Uniform => WeightScheme::Uniform,
        AcpsScheme::Center => WeightScheme::Center,
        AcpsScheme::Tails => WeightScheme::Tails,
        AcpsScheme::RightTail => WeightScheme::RightTail,
        AcpsScheme::LeftTail => WeightScheme::LeftTail,
    };
    let weighting = match k.weighting {
        AcpsWeighting::None => Weighting::None,
        AcpsWeighting::Threshold => Weighting::Threshold(scheme),
        AcpsWeighting::Quantile => Weighting::Quantile(scheme),
    };
    let base = match k.family {
        AcpsFamily::Acps => ScoreKind::acps(k.c),
        AcpsFamily::Crps => ScoreKind::crps(),
    };
    base.weighted(weighting)
}

fn to_grid(g: &AcpsGrid) -> Result<QuadratureGrid, Failure> {
    Ok(QuadratureGrid::new(g.u_min, g.u_max, g.nodes_per_side)?)
}

fn from_grid(g: &QuadratureGrid) -> AcpsGrid {
    AcpsGrid {
        u_min: g.u_min,
        u_max: g.u_max,
        nodes_per_side: g.nodes_per_side,
    }
}

fn orientation(o: Orientation) -> AcpsOrientation {
    match o {
        Orientation::PositivelyOriented => AcpsOrientation::Positive,
        Orientation::NegativelyOriented => AcpsOrientation::Negative,
    }
}

fn score_value(v: scoring::ScoreValue) -> AcpsScoreValue {
    AcpsScoreValue {
        value: v.value,
        orientation: orientation(v.orientation),
        truncation_warning: i32::from(v.truncation_warning),
    }
}

/// Message of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn acps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn acps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_forecast(
    out: *mut *mut AcpsForecast,
    make: impl FnOnce() -> Result<PredictiveDistribution, Failure>,
) -> AcpsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let f = make()?;
        unsafe { write_out(out, Box::into_raw(Box::new(AcpsForecast(f)))) };
        Ok(())
    })
}

/// Normal forecast N(mean, variance).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn acps_forecast_normal(
    mean: f64,
    variance: f64,
    out: *mut *mut AcpsForecast,
) -> AcpsStatus {
    new_forecast(out, || {
        Ok(AnalyticDistribution::normal(mean, variance)?.into())
    })
}

/// Location-scale Student-t forecast.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn acps_forecast_student_t(
    location: f64,
    scale: f64,
    dof: f64,
    out: *mut *mut AcpsForecast,
) -> AcpsStatus {
    new_forecast(out, || {
        Ok(AnalyticDistribution::student_t(location, scale, dof)?.into())
    })
}

/// Gamma forecast with shape and rate.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn acps_forecast_gamma(
    shape: f64,
    rate: f64,
    out: *mut *mut AcpsForecast,
) -> AcpsStatus {
    new_forecast(out, || Ok(AnalyticDistribution::gamma(shape, rate)?.into()))
}

/// Beta forecast on [0, 1].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn acps_forecast_beta(
    a: f64,
    b: f64,
    out: *mut *mut AcpsForecast,
) -> AcpsStatus {
    new_forecast(out, || Ok(AnalyticDistribution::beta(a, b)?.into()))
}

/// Empirical forecast from `n` Monte Carlo draws (copied).
///
/// # Safety
/// `draws` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acps_forecast_empirical(
    draws: *const f64,
    n: usize,
    out: *mut *mut AcpsForecast,
) -> AcpsStatus {
    new_forecast(out, || {
        let d = slice_arg(draws, n, "draws")?;
        Ok(PredictiveDistribution::empirical(d.to_vec())?)
    })
}

/// Releases a forecast. Null is ignored.
///
/// # Safety
/// `forecast` must come from an `acps_forecast_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn acps_forecast_free(forecast: *mut AcpsForecast) {
    if !forecast.is_null() {
        drop(Box::from_raw(forecast));
    }
}

/// Forecast CDF at `u`.
///
/// # Safety
/// `forecast` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acps_forecast_cdf(
    forecast: *const AcpsForecast,
    u: f64,
    out: *mut f64,
) -> AcpsStatus {
    guard(|| {
        let f = ref_arg(forecast, "forecast")?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_out(out, f.0.cdf_eval(u)?);
        Ok(())
    })
}

/// Forecast quantile at level `alpha` in (0, 1).
///
/// # Safety
/// `forecast` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acps_forecast_quantile(
    forecast: *const AcpsForecast,
    alpha: f64,
    out: *mut f64,
) -> AcpsStatus {
    guard(|| {
        let f = ref_arg(forecast, "forecast")?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_out(out, f.0.quantile(alpha)?);
        Ok(())
    })
}

/// Probability integral transform `P(y)`.
///
/// # Safety
/// `forecast` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acps_pit(
    forecast: *const AcpsForecast,
    y: f64,
    out: *mut f64,
) -> AcpsStatus {
    guard(|| {
        let f = ref_arg(forecast, "forecast")?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_out(out, inference::pit(&f.0, y)?);
        Ok(())
    })
}

/// Default grid covering every forecast's central 99.8% range and every
/// observation, with half that range added on each side.
///
/// # Safety
/// `forecasts` must point to `n_forecasts` live handles, `ys` to `n_ys`
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acps_default_grid(
    forecasts: *const *const AcpsForecast,
    n_forecasts: usize,
    ys: *const f64,
    n_ys: usize,
    nodes_per_side: usize,
    out: *mut AcpsGrid,
) -> AcpsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fs = forecast_list(forecasts, n_forecasts)?;
        let ys = slice_arg(ys, n_ys, "ys")?;
        let grid = QuadratureGrid::shared_refs(fs.iter().copied(), ys, nodes_per_side)?;
        write_out(out, from_grid(&grid));
        Ok(())
    })
}

unsafe fn forecast_list<'a>(
    forecasts: *const *const AcpsForecast,
    n: usize,
) -> Result<Vec<&'a PredictiveDistribution>, Failure> {
    if n == 0 {
        return Err(domain("at least one forecast is required"));
    }
    if forecasts.is_null() {
        return Err(null("forecasts"));
    }
    slice::from_raw_parts(forecasts, n)
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            f.as_ref()
                .map(|f| &f.0)
                .ok_or_else(|| null(&format!("forecasts[{i}]")))
        })
        .collect()
}

/// Score of one forecast at one observation. A null `grid` selects the
/// default grid for this forecast and observation with 128 nodes per side.
///
/// # Safety
/// `forecast` must be a live handle, `kind` valid, `grid` null or valid and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acps_score(
    forecast: *const AcpsForecast,
    y: f64,
    kind: *const AcpsScoreKind,
    grid: *const AcpsGrid,
    out: *mut AcpsScoreValue,
) -> AcpsStatus {
    guard(|| {
        let f = ref_arg(forecast, "forecast")?;
        let kind = to_kind(ref_arg(kind, "kind")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = match grid.as_ref() {
            Some(g) => to_grid(g)?,
            None => QuadratureGrid::for_forecast(&f.0, y, scoring::DEFAULT_NODES)?,
        };
        write_out(
            out,
            score_value(scoring::score(&f.0, y, &kind.with_grid(grid))?),
        );
        Ok(())
    })
}

/// Mean score over `n_ys` observations. `n_forecasts` is either 1 (one
/// forecast for every observation) or `n_ys` (paired). The grid is required
/// so that averages of competing models are comparable.
///
/// # Safety
/// Pointers must reference `n_forecasts` live handles and `n_ys` doubles;
/// `kind` and `grid` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acps_average_score(
    forecasts: *const *const AcpsForecast,
    n_forecasts: usize,
    ys: *const f64,
    n_ys: usize,
    kind: *const AcpsScoreKind,
    grid: *const AcpsGrid,
    out: *mut AcpsScoreValue,
) -> AcpsStatus {
    guard(|| {
        let fs: Vec<PredictiveDistribution> = forecast_list(forecasts, n_forecasts)?
            .into_iter()
            .cloned()
            .collect();
        let ys = slice_arg(ys, n_ys, "ys")?;
        let kind = to_kind(ref_arg(kind, "kind")?);
        let grid = to_grid(ref_arg(grid, "grid")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_out(
            out,
            score_value(scoring::average_score(&fs, ys, &kind.with_grid(grid))?),
        );
        Ok(())
    })
}

/// Diebold-Mariano test of equal expected scores for two aligned score
/// series. `bandwidth < 0` selects the automatic Bartlett bandwidth.
///
/// # Safety
/// `scores_1` and `scores_2` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn acps_dm_test(
    scores_1: *const f64,
    scores_2: *const f64,
    n: usize,
    orientation: AcpsOrientation,
    bandwidth: i64,
    out: *mut AcpsDmResult,
) -> AcpsStatus {
    guard(|| {
        let s1 = slice_arg(scores_1, n, "scores_1")?;
        let s2 = slice_arg(scores_2, n, "scores_2")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let o = match orientation {
            AcpsOrientation::Positive => Orientation::PositivelyOriented,
            AcpsOrientation::Negative => Orientation::NegativelyOriented,
        };
        let bw = if bandwidth < 0 {
            Bandwidth::Auto
        } else {
            Bandwidth::Fixed(bandwidth as usize)
        };
        let r = inference::dm_test(s1, s2, o, bw)?;
        write_out(
            out,
            AcpsDmResult {
                t: r.t,
                mean_diff: r.mean_diff,
                lrv: r.lrv,
                statistic: r.statistic,
                p_value: r.p_value,
                bandwidth: r.bandwidth,
                degenerate: i32::from(r.degenerate),
            },
        );
        Ok(())
    })
}

/// MCMC budget and seed shared by the `acps_fit_*` functions.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AcpsMcmc {
    pub burn: usize,
    pub keep: usize,
    pub seed: u64,
}

fn fit_model(
    y: *const f64,
    n: usize,
    model: ModelSpec,
    mcmc: *const AcpsMcmc,
    out: *mut *mut AcpsPosterior,
) -> AcpsStatus {
    guard(|| {
        let y = unsafe { slice_arg(y, n, "y")? };
        let m = unsafe { ref_arg(mcmc, "mcmc")? };
        if out.is_null() {
            return Err(null("out"));
        }
        let post = models::fit(y, &model, &McmcConfig::new(m.burn, m.keep, m.seed))?;
        unsafe { write_out(out, Box::into_raw(Box::new(AcpsPosterior(post)))) };
        Ok(())
    })
}

/// Conjugate AR(order) with intercept and default priors; `order == 0` fits white noise.
///
/// # Safety
/// `y` must point to `n` doubles, `mcmc` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acps_fit_ar(
    y: *const f64,
    n: usize,
    order: usize,
    mcmc: *const AcpsMcmc,
    out: *mut *mut AcpsPosterior,
) -> AcpsStatus {
    let spec = match ArSpec::order(order) {
        Ok(s) => s,
        Err(e) => return guard(|| Err(e.into())),
    };
    fit_model(
        y,
        n,
        ModelSpec::Ar {
            spec,
            prior: PriorSettings::default(),
        },
        mcmc,
        out,
    )
}

/// Two-regime Markov-switching AR(1) with default priors.
///
/// # Safety
/// `y` must point to `n` doubles, `mcmc` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acps_fit_msar(
    y: *const f64,
    n: usize,
    mcmc: *const AcpsMcmc,
    out: *mut *mut AcpsPosterior,
) -> AcpsStatus {
    let model = ModelSpec::MsAr {
        spec: MsArSpec::default(),
        prior: MsArPrior::default(),
    };
    fit_model(y, n, model, mcmc, out)
}

/// Time-varying parameter AR with 1 or 2 lags and default priors.
///
/// # Safety
/// `y` must point to `n` doubles, `mcmc` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn acps_fit_tvpar(
    y: *const f64,
    n: usize,
    lags: usize,
    mcmc: *const AcpsMcmc,
    out: *mut *mut AcpsPosterior,
) -> AcpsStatus {
    fit_model(
        y,
        n,
        ModelSpec::TvpAr {
            spec: TvpArSpec::with_lags(lags),
        },
        mcmc,
        out,
    )
}

/// Releases a posterior. Null is ignored.
///
/// # Safety
/// `posterior` must come from an `acps_fit_*` function and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn acps_posterior_free(posterior: *mut AcpsPosterior) {
    if !posterior.is_null() {
        drop(Box::from_raw(posterior));
    }
}

/// Writes `m` predictive draws of `y_{T+h}` into `out`, where `y_hist` ends at `y_T`.
///
/// # Safety
/// `posterior` must be a live handle, `y_hist` must point to `n` doubles and
/// `out` to `m` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn acps_predictive_draws(
    posterior: *const AcpsPosterior,
    y_hist: *const f64,
    n: usize,
    h: usize,
    m: usize,
    seed: u64,
    out: *mut f64,
) -> AcpsStatus {
    guard(|| {
        let p = ref_arg(posterior, "posterior")?;
        let y = slice_arg(y_hist, n, "y_hist")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sample = models::predictive_draws(&p.0, y, h, m, seed)?;
        slice::from_raw_parts_mut(out, m).copy_from_slice(&sample.draws);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use acps::scoring::ScoreFamily;
    use std::ffi::CStr;

    #[test]
    fn score_kind_mapping() {
        let k = AcpsScoreKind {
            family: AcpsFamily::Acps,
            c: 0.95,
            weighting: AcpsWeighting::Threshold,
            scheme: AcpsScheme::RightTail,
        };
        assert_eq!(to_kind(&k).label(), "tACPS(0.95,right-tail)");
        let crps = AcpsScoreKind {
            family: AcpsFamily::Crps,
            ..k
        };
        assert_eq!(to_kind(&crps).family, ScoreFamily::Crps);
    }

    #[test]
    fn panics_are_caught() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, AcpsStatus::ErrPanic);
        let msg = unsafe { CStr::from_ptr(acps_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }
}
