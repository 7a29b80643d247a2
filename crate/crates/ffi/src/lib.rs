//! C ABI over the `schemaevo` simulator.
//!
//! Configs and batches are opaque handles owned by the caller and released
//! with their `_free` function. Fallible calls return an [`SeErrorCode`];
//! the message of the most recent failure on the calling thread is available
//! from [`se_last_error_message`]. Strings returned as `char *` are owned by
//! the caller and must be released with [`se_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use schemaevo::costing::money;
use schemaevo::domain::{validate_config, ScenarioConfig};
use schemaevo::montecarlo::{run_batch, summarize, Batch, Metric, Stats};
use schemaevo::strategies::StrategyKind;
use schemaevo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeErrorCode {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    RunFailed = 4,
    EmptySample = 5,
    NotFound = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeStrategy {
    Eager = 0,
    Incremental = 1,
    Predictive = 2,
    Lazy = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeMetric {
    OnReadCost = 0,
    OnReleaseCost = 1,
    CumulatedCost = 2,
    MeanLatency = 3,
}

/// Box-plot summary. Outlier values are not copied; only their count.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub min: f64,
    pub max: f64,
    pub outlier_count: usize,
}

/// Exact amount in pico-USD split into two 64-bit halves, plus a rounded
/// dollar value.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeMoney {
    pub pico_hi: u64,
    pub pico_lo: u64,
    pub usd: f64,
}

/// Opaque scenario configuration.
pub struct SeConfig {
    inner: ScenarioConfig,
}

/// Opaque batch result.
pub struct SeBatch {
    inner: Batch,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(code: SeErrorCode, msg: impl Into<String>) -> SeErrorCode {
    set_error(msg);
    code
}

fn code_of(e: &Error) -> SeErrorCode {
    match e {
        Error::InvalidConfig(_) | Error::ConfigParse { .. } => SeErrorCode::InvalidConfig,
        Error::EmptySample => SeErrorCode::EmptySample,
        Error::MissingArtifact(_) => SeErrorCode::NotFound,
        _ => SeErrorCode::RunFailed,
    }
}

/// Runs `f`, converting panics into [`SeErrorCode::Panic`].
fn guard(f: impl FnOnce() -> SeErrorCode) -> SeErrorCode {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(SeErrorCode::Panic, "internal panic"),
    }
}

fn into_c_string(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_error("string contains an interior NUL");
            ptr::null_mut()
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SeErrorCode> {
    if p.is_null() {
        return Err(fail(SeErrorCode::NullPointer, format!("`{name}` is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            SeErrorCode::InvalidArgument,
            format!("`{name}` is not UTF-8"),
        )
    })
}

fn stats_to_c(s: &Stats) -> SeStats {
    SeStats {
        n: s.n,
        mean: s.mean,
        median: s.median,
        q1: s.q1,
        q3: s.q3,
        iqr: s.iqr,
        whisker_lo: s.whisker_lo,
        whisker_hi: s.whisker_hi,
        min: s.min,
        max: s.max,
        outlier_count: s.outliers.len(),
    }
}

impl From<SeStrategy> for StrategyKind {
    fn from(s: SeStrategy) -> Self {
        match s {
            SeStrategy::Eager => StrategyKind::Eager,
            SeStrategy::Incremental => StrategyKind::Incremental,
            SeStrategy::Predictive => StrategyKind::Predictive,
            SeStrategy::Lazy => StrategyKind::Lazy,
        }
    }
}

impl From<SeMetric> for Metric {
    fn from(m: SeMetric) -> Self {
        match m {
            SeMetric::OnReadCost => Metric::OnReadCost,
            SeMetric::OnReleaseCost => Metric::OnReleaseCost,
            SeMetric::CumulatedCost => Metric::CumulatedCost,
            SeMetric::MeanLatency => Metric::MeanLatency,
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn se_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn se_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn se_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New config with default values. Never NULL.
#[no_mangle]
pub extern "C" fn se_config_new_default() -> *mut SeConfig {
    Box::into_raw(Box::new(SeConfig {
        inner: ScenarioConfig::default(),
    }))
}

/// # Safety
/// `config` must be NULL or a handle from [`se_config_new_default`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn se_config_free(config: *mut SeConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Sets one config key using the same syntax as config files
/// (`"distribution"`, `"uniform"`).
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn se_config_set(
    config: *mut SeConfig,
    key: *const c_char,
    value: *const c_char,
) -> SeErrorCode {
    guard(|| {
        let Some(cfg) = config.as_mut() else {
            return fail(SeErrorCode::NullPointer, "`config` is NULL");
        };
        let (key, value) = match (str_arg(key, "key"), str_arg(value, "value")) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(c), _) | (_, Err(c)) => return c,
        };
        let mut entries = serde_json::Map::new();
        entries.insert(key.to_string(), schemaevo::cli::config::parse_value(value));
        match schemaevo::cli::config::apply_entries(&cfg.inner, &entries) {
            Ok(c) => {
                cfg.inner = c;
                SeErrorCode::Ok
            }
            Err(e) => fail(code_of(&e), e.to_string()),
        }
    })
}

/// Lints the config. Returns `InvalidConfig` with all violations in the
/// error message when any rule fails.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn se_config_validate(
    config: *const SeConfig,
    strict_grid: bool,
) -> SeErrorCode {
    guard(|| {
        let Some(cfg) = config.as_ref() else {
            return fail(SeErrorCode::NullPointer, "`config` is NULL");
        };
        let v = validate_config(&cfg.inner, strict_grid);
        if v.is_empty() {
            SeErrorCode::Ok
        } else {
            let lines: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            fail(SeErrorCode::InvalidConfig, lines.join("; "))
        }
    })
}

/// The config as JSON, or NULL on failure. Free with [`se_string_free`].
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn se_config_to_json(config: *const SeConfig) -> *mut c_char {
    clear_error();
    let Some(cfg) = config.as_ref() else {
        set_error("`config` is NULL");
        return ptr::null_mut();
    };
    match serde_json::to_string(&cfg.inner) {
        Ok(s) => into_c_string(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Runs a batch of all four strategies. `runs == 0` uses the config's
/// effective run count. On success `*out` receives a new handle.
///
/// # Safety
/// `config` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn se_batch_run(
    config: *const SeConfig,
    runs: u32,
    out: *mut *mut SeBatch,
) -> SeErrorCode {
    guard(|| {
        if out.is_null() {
            return fail(SeErrorCode::NullPointer, "`out` is NULL");
        }
        *out = ptr::null_mut();
        let Some(cfg) = config.as_ref() else {
            return fail(SeErrorCode::NullPointer, "`config` is NULL");
        };
        let c = cfg.inner.resolved();
        let v = validate_config(&c, false);
        if let Some(first) = v.first() {
            return fail(SeErrorCode::InvalidConfig, first.to_string());
        }
        let runs = if runs == 0 {
            c.effective_runs()
        } else {
            runs as usize
        };
        match run_batch(&c, &StrategyKind::ALL, runs, c.master_seed) {
            Ok(batch) => {
                *out = Box::into_raw(Box::new(SeBatch { inner: batch }));
                SeErrorCode::Ok
            }
            Err(e) => fail(code_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `batch` must be NULL or a handle from [`se_batch_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn se_batch_free(batch: *mut SeBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// Cross-run statistics of `metric` for `strategy` at `release_no`.
///
/// # Safety
/// `batch` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn se_batch_stat(
    batch: *const SeBatch,
    strategy: SeStrategy,
    release_no: u32,
    metric: SeMetric,
    out: *mut SeStats,
) -> SeErrorCode {
    guard(|| {
        let (Some(b), Some(out)) = (batch.as_ref(), out.as_mut()) else {
            return fail(SeErrorCode::NullPointer, "`batch` or `out` is NULL");
        };
        match b
            .inner
            .summary
            .stats(strategy.into(), release_no, metric.into())
        {
            Some(s) => {
                *out = stats_to_c(s);
                SeErrorCode::Ok
            }
            None => fail(
                SeErrorCode::NotFound,
                format!("no release {release_no} in batch"),
            ),
        }
    })
}

/// The batch summary as JSON, or NULL. Free with [`se_string_free`].
///
/// # Safety
/// `batch` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn se_batch_summary_json(batch: *const SeBatch) -> *mut c_char {
    clear_error();
    let Some(b) = batch.as_ref() else {
        set_error("`batch` is NULL");
        return ptr::null_mut();
    };
    match serde_json::to_string(&b.inner.summary) {
        Ok(s) => into_c_string(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Box-plot statistics of `len` doubles.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn se_summarize(
    values: *const f64,
    len: usize,
    out: *mut SeStats,
) -> SeErrorCode {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return fail(SeErrorCode::NullPointer, "`out` is NULL");
        };
        if len == 0 {
            return fail(SeErrorCode::EmptySample, "empty sample");
        }
        if values.is_null() {
            return fail(SeErrorCode::NullPointer, "`values` is NULL");
        }
        let slice = std::slice::from_raw_parts(values, len);
        match summarize(slice) {
            Ok(s) => {
                *out = stats_to_c(&s);
                SeErrorCode::Ok
            }
            Err(e) => fail(code_of(&e), e.to_string()),
        }
    })
}

/// Cost of `io_count` simulated operations upscaled by `scale_factor` at
/// `price_per_million_io` USD.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn se_money(
    io_count: u64,
    price_per_million_io: f64,
    scale_factor: u64,
    out: *mut SeMoney,
) -> SeErrorCode {
    guard(|| {
        let Some(out) = out.as_mut() else {
            return fail(SeErrorCode::NullPointer, "`out` is NULL");
        };
        if !(price_per_million_io >= 0.0 && price_per_million_io.is_finite()) {
            return fail(
                SeErrorCode::InvalidArgument,
                "price must be finite and non-negative",
            );
        }
        let m = money(io_count, price_per_million_io, scale_factor);
        *out = SeMoney {
            pico_hi: (m.0 >> 64) as u64,
            pico_lo: m.0 as u64,
            usd: m.usd(),
        };
        SeErrorCode::Ok
    })
}
