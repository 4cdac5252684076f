//! C interface to the simulator.
//!
//! Every function returns an [`EdrStatus`]. On failure a message is kept per
//! thread and can be read with [`edr_last_error`]. Handles are opaque and must
//! be released with the matching `*_free` function. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`edr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use edram_dcr::config::{Resolved, RunConfig};
use edram_dcr::output::to_json;
use edram_dcr::sim::{self, ComparisonReport, RunReport};
use edram_dcr::{CacheGeometry, Error, SchemeKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Trace = 4,
    Simulation = 5,
    NotFound = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdrScheme {
    Baseline = 0,
    Sram = 1,
    Rpv = 2,
    Dcr = 3,
}

impl From<EdrScheme> for SchemeKind {
    fn from(s: EdrScheme) -> Self {
        match s {
            EdrScheme::Baseline => SchemeKind::BaselineEdram,
            EdrScheme::Sram => SchemeKind::Sram,
            EdrScheme::Rpv => SchemeKind::Rpv,
            EdrScheme::Dcr => SchemeKind::Dcr,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdrMetric {
    TotalEnergyJ = 0,
    Cycles = 1,
    Rpki = 2,
    Mpki = 3,
    ActiveRatioPct = 4,
    /// Comparison only.
    EnergySavingPct = 5,
    /// Comparison only.
    PerfImprovementPct = 6,
    /// Comparison only.
    DeltaRpki = 7,
    /// Comparison only.
    DeltaMpki = 8,
}

/// Validated configuration with its trace source.
pub struct EdrConfig {
    resolved: Resolved,
}

pub struct EdrRunReport {
    report: RunReport,
}

pub struct EdrComparison {
    report: ComparisonReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(EdrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } | Error::Format(_) | Error::Corrupt { .. } | Error::Parse { .. } => EdrStatus::Trace,
            Error::InvalidSpec(_) | Error::Geometry(_) | Error::Bounds(_) | Error::Config(_) => EdrStatus::Config,
            Error::InvalidInput(_) | Error::Invariant(_) => EdrStatus::Simulation,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EdrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EdrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(EdrStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(EdrStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn null(name: &str) -> Failure {
    Failure(EdrStatus::NullArgument, format!("{name} is null"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the last failed call on this thread. Empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn edr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads and validates a TOML config file. Relative paths inside it resolve
/// against the file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_config_load(path: *const c_char, out: *mut *mut EdrConfig) -> EdrStatus {
    guard(|| {
        let path = Path::new(str_arg(path, "path")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let config = RunConfig::load(path)?;
        let resolved = config.resolve(path.parent().unwrap_or(Path::new("")))?;
        put(out, EdrConfig { resolved });
        Ok(())
    })
}

/// Parses config text. `base_dir` anchors relative paths and may be null
/// for the current directory.
///
/// # Safety
/// `text` must be a NUL-terminated string, `base_dir` null or one; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_config_parse(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut EdrConfig,
) -> EdrStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let base = if base_dir.is_null() { "" } else { str_arg(base_dir, "base_dir")? };
        if out.is_null() {
            return Err(null("out"));
        }
        let resolved = RunConfig::parse(text)?.resolve(Path::new(base))?;
        put(out, EdrConfig { resolved });
        Ok(())
    })
}

/// # Safety
/// `config` must come from `edr_config_load`/`edr_config_parse` or be null.
#[no_mangle]
pub unsafe extern "C" fn edr_config_free(config: *mut EdrConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs one scheme. The scheme must be listed in the config.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_run(
    config: *const EdrConfig,
    scheme: EdrScheme,
    out: *mut *mut EdrRunReport,
) -> EdrStatus {
    guard(|| {
        let r = &config.as_ref().ok_or_else(|| null("config"))?.resolved;
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = SchemeKind::from(scheme);
        let spec = r
            .schemes
            .iter()
            .find(|s| s.kind == kind)
            .ok_or_else(|| Failure(EdrStatus::NotFound, format!("scheme {kind} is not configured")))?;
        let trace = r.load_trace()?;
        let report = sim::run(&trace, spec, &r.geometry, &r.config.timing, r.energy.for_scheme(kind), &r.options)?;
        put(out, EdrRunReport { report });
        Ok(())
    })
}

/// Runs every configured scheme and compares each with the baseline.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_compare(config: *const EdrConfig, out: *mut *mut EdrComparison) -> EdrStatus {
    guard(|| {
        let r = &config.as_ref().ok_or_else(|| null("config"))?.resolved;
        if out.is_null() {
            return Err(null("out"));
        }
        let trace = r.load_trace()?;
        let report = sim::compare(&trace, &r.schemes, &r.geometry, &r.config.timing, &r.energy, &r.options)?;
        put(out, EdrComparison { report });
        Ok(())
    })
}

fn run_metric(report: &RunReport, metric: EdrMetric) -> Option<f64> {
    let t = &report.totals;
    Some(match metric {
        EdrMetric::TotalEnergyJ => t.total_energy_j,
        EdrMetric::Cycles => t.cycles as f64,
        EdrMetric::Rpki => t.rpki,
        EdrMetric::Mpki => t.mpki,
        EdrMetric::ActiveRatioPct => t.active_ratio_pct,
        _ => return None,
    })
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_run_metric(report: *const EdrRunReport, metric: EdrMetric, out: *mut f64) -> EdrStatus {
    guard(|| {
        let rep = &report.as_ref().ok_or_else(|| null("report"))?.report;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = run_metric(rep, metric)
            .ok_or_else(|| Failure(EdrStatus::NotFound, format!("{metric:?} needs a comparison")))?;
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_comparison_metric(
    report: *const EdrComparison,
    scheme: EdrScheme,
    metric: EdrMetric,
    out: *mut f64,
) -> EdrStatus {
    guard(|| {
        let rep = &report.as_ref().ok_or_else(|| null("report"))?.report;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let kind = SchemeKind::from(scheme);
        let row = rep
            .row(kind)
            .ok_or_else(|| Failure(EdrStatus::NotFound, format!("scheme {kind} was not compared")))?;
        *out = match metric {
            EdrMetric::TotalEnergyJ => row.total_energy_j,
            EdrMetric::Cycles => row.cycles as f64,
            EdrMetric::Rpki => row.rpki,
            EdrMetric::Mpki => row.mpki,
            EdrMetric::ActiveRatioPct => row.active_ratio_pct,
            EdrMetric::EnergySavingPct => row.energy_saving_pct,
            EdrMetric::PerfImprovementPct => row.perf_improvement_pct,
            EdrMetric::DeltaRpki => row.delta_rpki,
            EdrMetric::DeltaMpki => row.delta_mpki,
        };
        Ok(())
    })
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = CString::new(s)
        .map_err(|_| Failure(EdrStatus::Panic, "report contains NUL".into()))?
        .into_raw();
    Ok(())
}

/// Serializes a run report as JSON.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_run_to_json(report: *const EdrRunReport, out: *mut *mut c_char) -> EdrStatus {
    guard(|| {
        let rep = &report.as_ref().ok_or_else(|| null("report"))?.report;
        put_string(out, to_json(rep))
    })
}

/// Serializes the comparison table as JSON.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_comparison_to_json(report: *const EdrComparison, out: *mut *mut c_char) -> EdrStatus {
    guard(|| {
        let rep = &report.as_ref().ok_or_else(|| null("report"))?.report;
        put_string(out, to_json(rep))
    })
}

/// # Safety
/// `report` must come from `edr_run` or be null.
#[no_mangle]
pub unsafe extern "C" fn edr_run_free(report: *mut EdrRunReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must come from `edr_compare` or be null.
#[no_mangle]
pub unsafe extern "C" fn edr_comparison_free(report: *mut EdrComparison) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn edr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of page colors of a cache geometry.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn edr_color_count(
    size_bytes: u64,
    associativity: u32,
    block_bytes: u64,
    page_bytes: u64,
    out: *mut u32,
) -> EdrStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let geometry = CacheGeometry {
            size_bytes,
            associativity,
            block_bytes,
            page_bytes,
            bank_bytes: size_bytes,
        };
        *out = edram_dcr::color_count(&geometry)?;
        Ok(())
    })
}

/// ABI revision of this library.
#[no_mangle]
pub extern "C" fn edr_abi_version() -> u32 {
    1
}
