//! C ABI for `hawkes-trim`.
//!
//! Objects cross the boundary as opaque handles (`HtNetwork`, `HtEvents`,
//! `HtEstimate`) created by `ht_*` constructors and released with the
//! matching `*_free`. Every fallible call returns an [`HtStatus`]; on
//! failure `ht_last_error()` describes the problem. Strings returned by the
//! library are freed with `ht_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hawkes_trim::{
    build_design, check_stationarity, fit_method, make_block_network, make_orthogonal_block_network, simulate,
    BlockParams, Error, EventData, FitOptions, Method, NetworkEstimate, NetworkSpec, PenaltyRule, TransitionKernel,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid argument or configuration.
    InvalidArgument = 2,
    /// Network fails the stationarity condition or the simulation ran away.
    Unstable = 3,
    /// Malformed or inconsistent data, I/O failure.
    Data = 4,
    /// A buffer passed by the caller is too small.
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtMethod {
    HpTrim = 0,
    Naive = 1,
    HiveOracle = 2,
    HiveEmpirical = 3,
}

impl From<HtMethod> for Method {
    fn from(m: HtMethod) -> Method {
        match m {
            HtMethod::HpTrim => Method::HpTrim,
            HtMethod::Naive => Method::Naive,
            HtMethod::HiveOracle => Method::HiveOracle,
            HtMethod::HiveEmpirical => Method::HiveEmpirical,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtPenaltyStrategy {
    RateRule = 0,
    EdgeBudget = 1,
    TimeSplitCv = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HtPenalty {
    pub strategy: HtPenaltyStrategy,
    /// Rate-rule constant.
    pub c: f64,
    /// Edge budget.
    pub budget: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HtFitOptions {
    pub method: HtMethod,
    pub penalty: HtPenalty,
    pub bin_width: f64,
    pub kernel_rate: f64,
    /// Negative or NaN selects the default λ/2.
    pub tau_select: f64,
    /// Latent dimension for hive-oracle; ignored otherwise.
    pub oracle_q: usize,
}

pub struct HtNetwork(NetworkSpec);
pub struct HtEvents(EventData);
pub struct HtEstimate(NetworkEstimate);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HtStatus {
    match e.exit_code() {
        2 => HtStatus::InvalidArgument,
        3 => HtStatus::Unstable,
        _ => HtStatus::Data,
    }
}

fn guard<F: FnOnce() -> Result<(), (HtStatus, String)>>(f: F) -> HtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HtStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (HtStatus, String)>;
}

impl<T> OrStatus<T> for hawkes_trim::Result<T> {
    fn or_status(self) -> Result<T, (HtStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (HtStatus, String) {
    (HtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HtStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (HtStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (HtStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (HtStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn to_c_string(s: String) -> Result<*mut c_char, (HtStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (HtStatus::Data, "string contains NUL".into()))
}

/// Message for the most recent failure on this thread, or NULL. Valid until
/// the next `ht_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ht_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ht_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Block network generator. `orthogonal` selects the topology in which
/// confounded blocks carry no observed edges.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ht_network_block(
    p: usize,
    q: usize,
    block_size: usize,
    beta: f64,
    delta: f64,
    mu: f64,
    confounded_fraction: f64,
    kernel_rate: f64,
    orthogonal: bool,
    out: *mut *mut HtNetwork,
) -> HtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let params = BlockParams {
            p,
            q,
            block_size,
            beta,
            delta,
            mu,
            confounded_fraction,
            kernel_rate,
        };
        let spec = if orthogonal {
            make_orthogonal_block_network(&params)
        } else {
            make_block_network(&params)
        }
        .or_status()?;
        *out = Box::into_raw(Box::new(HtNetwork(spec)));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ht_network_from_json(json: *const c_char, out: *mut *mut HtNetwork) -> HtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let spec = NetworkSpec::from_json(c_str(json, "json")?).or_status()?;
        *out = Box::into_raw(Box::new(HtNetwork(spec)));
        Ok(())
    })
}

/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ht_network_to_json(net: *const HtNetwork, out: *mut *mut c_char) -> HtStatus {
    guard(|| {
        let net = deref(net, "network")?;
        let out = out_ptr(out, "out")?;
        *out = to_c_string(net.0.to_json().or_status()?)?;
        Ok(())
    })
}

/// Number of observed components, 0 for NULL.
///
/// # Safety
/// `net` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_network_p(net: *const HtNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.p)
}

/// Λ_max(ΩᵀΩ) of the network.
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ht_network_lambda_max(net: *const HtNetwork, out: *mut f64) -> HtStatus {
    guard(|| {
        let net = deref(net, "network")?;
        *out_ptr(out, "out")? = check_stationarity(&net.0).lambda_max_omega;
        Ok(())
    })
}

/// # Safety
/// `net` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ht_network_free(net: *mut HtNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Simulates all components; only the observed ones are kept in the result.
///
/// # Safety
/// `net` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ht_simulate(
    net: *const HtNetwork,
    horizon: f64,
    seed: u64,
    floor: f64,
    out: *mut *mut HtEvents,
) -> HtStatus {
    guard(|| {
        let net = deref(net, "network")?;
        let out = out_ptr(out, "out")?;
        let ev = simulate(&net.0, horizon, seed, floor).or_status()?;
        let ev = ev.select(&(0..net.0.p).collect::<Vec<_>>()).or_status()?;
        *out = Box::into_raw(Box::new(HtEvents(ev)));
        Ok(())
    })
}

/// Builds event data from parallel arrays of component ids and times.
///
/// # Safety
/// `ids` and `times` must point to `n` elements each (or be NULL when `n` is 0).
#[no_mangle]
pub unsafe extern "C" fn ht_events_from_arrays(
    n_components: usize,
    horizon: f64,
    ids: *const usize,
    times: *const f64,
    n: usize,
    out: *mut *mut HtEvents,
) -> HtStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (ids, times) = if n == 0 {
            (&[][..], &[][..])
        } else {
            if ids.is_null() || times.is_null() {
                return Err(null("ids or times"));
            }
            (std::slice::from_raw_parts(ids, n), std::slice::from_raw_parts(times, n))
        };
        let mut events = vec![Vec::new(); n_components];
        for (&c, &t) in ids.iter().zip(times) {
            events
                .get_mut(c)
                .ok_or_else(|| (HtStatus::InvalidArgument, format!("component id {c} >= {n_components}")))?
                .push(t);
        }
        for e in &mut events {
            e.sort_by(f64::total_cmp);
        }
        let ev = EventData::new(horizon, events, (0..n_components).collect()).or_status()?;
        *out = Box::into_raw(Box::new(HtEvents(ev)));
        Ok(())
    })
}

/// # Safety
/// `ev` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_events_n_components(ev: *const HtEvents) -> usize {
    ev.as_ref().map_or(0, |e| e.0.n_components)
}

/// # Safety
/// `ev` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_events_total(ev: *const HtEvents) -> usize {
    ev.as_ref().map_or(0, |e| e.0.total_events())
}

/// Writes the events as `component_id,time` CSV to `path`.
///
/// # Safety
/// `ev` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ht_events_write_csv(ev: *const HtEvents, path: *const c_char) -> HtStatus {
    guard(|| {
        let ev = deref(ev, "events")?;
        let path = c_str(path, "path")?;
        let f = std::fs::File::create(path).map_err(|e| (HtStatus::Data, format!("{path}: {e}")))?;
        ev.0.write_csv(std::io::BufWriter::new(f)).or_status()
    })
}

/// # Safety
/// `ev` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ht_events_free(ev: *mut HtEvents) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}

/// Default options: hp-trim, rate rule with c = 0.5, unit bins, unit
/// kernel rate, λ/2 selection threshold.
#[no_mangle]
pub extern "C" fn ht_fit_options_default() -> HtFitOptions {
    HtFitOptions {
        method: HtMethod::HpTrim,
        penalty: HtPenalty {
            strategy: HtPenaltyStrategy::RateRule,
            c: 0.5,
            budget: 30,
        },
        bin_width: 1.0,
        kernel_rate: 1.0,
        tau_select: f64::NAN,
        oracle_q: 0,
    }
}

/// Bins the events and fits the requested estimator.
///
/// # Safety
/// `ev` must be a live handle, `opts` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ht_fit(ev: *const HtEvents, opts: *const HtFitOptions, out: *mut *mut HtEstimate) -> HtStatus {
    guard(|| {
        let ev = deref(ev, "events")?;
        let o = *deref(opts, "options")?;
        let out = out_ptr(out, "out")?;
        let kernels = vec![TransitionKernel::exponential(o.kernel_rate).or_status()?; ev.0.n_components];
        let reg = build_design(&ev.0, &kernels, o.bin_width, false).or_status()?;
        let mut rule = match o.penalty.strategy {
            HtPenaltyStrategy::RateRule => PenaltyRule::rate(o.penalty.c),
            HtPenaltyStrategy::EdgeBudget => PenaltyRule::edge_budget(o.penalty.budget),
            HtPenaltyStrategy::TimeSplitCv => PenaltyRule::time_split(),
        };
        rule.c = o.penalty.c;
        let fit_opts = FitOptions {
            tau_select: (o.tau_select >= 0.0).then_some(o.tau_select),
            ..FitOptions::default()
        };
        let est = fit_method(o.method.into(), &reg, &rule, Some(o.oracle_q), &fit_opts).or_status()?;
        *out = Box::into_raw(Box::new(HtEstimate(est)));
        Ok(())
    })
}

/// # Safety
/// `est` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_estimate_p(est: *const HtEstimate) -> usize {
    est.as_ref().map_or(0, |e| e.0.p())
}

/// # Safety
/// `est` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_estimate_lambda(est: *const HtEstimate) -> f64 {
    est.as_ref().map_or(f64::NAN, |e| e.0.lambda)
}

/// # Safety
/// `est` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_estimate_n_edges(est: *const HtEstimate) -> usize {
    est.as_ref().map_or(0, |e| e.0.edges.len())
}

/// Copies the p×p coefficient matrix in row-major order (row = target).
///
/// # Safety
/// `est` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ht_estimate_beta(est: *const HtEstimate, buf: *mut f64, len: usize) -> HtStatus {
    guard(|| {
        let est = deref(est, "estimate")?;
        let p = est.0.p();
        if len < p * p {
            return Err((HtStatus::BufferTooSmall, format!("need {} doubles, got {len}", p * p)));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let out = std::slice::from_raw_parts_mut(buf, p * p);
        for i in 0..p {
            for j in 0..p {
                out[i * p + j] = est.0.beta_hat[(i, j)];
            }
        }
        Ok(())
    })
}

/// Copies the selected edges as (target, source) pairs, ordered.
///
/// # Safety
/// `est` must be a live handle; `targets` and `sources` must hold `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn ht_estimate_edges(
    est: *const HtEstimate,
    targets: *mut usize,
    sources: *mut usize,
    cap: usize,
) -> HtStatus {
    guard(|| {
        let est = deref(est, "estimate")?;
        let n = est.0.edges.len();
        if cap < n {
            return Err((HtStatus::BufferTooSmall, format!("need {n} slots, got {cap}")));
        }
        if n == 0 {
            return Ok(());
        }
        if targets.is_null() || sources.is_null() {
            return Err(null("targets or sources"));
        }
        let t = std::slice::from_raw_parts_mut(targets, n);
        let s = std::slice::from_raw_parts_mut(sources, n);
        for (k, &(i, j)) in est.0.edges.iter().enumerate() {
            t[k] = i;
            s[k] = j;
        }
        Ok(())
    })
}

/// # Safety
/// `est` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ht_estimate_to_json(est: *const HtEstimate, out: *mut *mut c_char) -> HtStatus {
    guard(|| {
        let est = deref(est, "estimate")?;
        let out = out_ptr(out, "out")?;
        *out = to_c_string(est.0.to_json().or_status()?)?;
        Ok(())
    })
}

/// # Safety
/// `est` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ht_estimate_free(est: *mut HtEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}
