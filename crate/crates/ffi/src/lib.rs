//! C ABI over the `ppde` toolkit.
//!
//! Objects cross the boundary as opaque handles created by `ppde_*_new` and
//! released by the matching `ppde_*_free`. Every call returns a
//! [`PpdeStatus`]; on failure the message is available from
//! [`ppde_last_error`] on the same thread. Panics are caught and reported as
//! `PPDE_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ppde::cli::{self, ExperimentConfig};
use ppde::control_bench::{self, Engine, Resolution};
use ppde::functional::{catalog, SharedFunctional};
use ppde::nonlinear_expectation::{build_lattice, sup_expectation, ControlGrids, LatticeModel, Mode, PayoffOnTree};
use ppde::path_space::{pw_distance, PwPath};
use ppde::regularization::{regularize, Direction, RegParams, SearchConfig};
use ppde::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Precision = 4,
    Configuration = 5,
    Io = 6,
    Parse = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpdePathKind {
    /// continuous, linear between knots
    Linear = 0,
    /// right-continuous, constant between knots
    Step = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpdeDirection {
    /// sup-convolution, approximates from above
    Sub = 0,
    /// inf-convolution, approximates from below
    Super = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpdeMode {
    Sup = 0,
    Inf = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpdeEngine {
    Lattice = 0,
    MonteCarlo = 1,
}

/// Outcome of one regularization search.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpdeRegularization {
    pub value: f64,
    /// certified bound on the distance to the true optimum
    pub gap: f64,
    pub t_hat: f64,
    pub certified: bool,
    pub evaluations: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PpdeValue {
    pub value: f64,
    /// 0 for the lattice engine
    pub std_error: f64,
    /// true when the estimate only bounds the supremum from below
    pub lower_bound: bool,
}

/// Piecewise path.
pub struct PpdePath(PwPath);

/// Path functional from the built-in catalog.
pub struct PpdeFunctional(SharedFunctional);

/// Controlled lattice for sublinear expectations.
pub struct PpdeLattice(LatticeModel);

/// Experiment configuration.
pub struct PpdeConfig(ExperimentConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PpdeStatus {
    match e {
        Error::Domain(_) => PpdeStatus::Domain,
        Error::Precision(_) => PpdeStatus::Precision,
        Error::Configuration(_) | Error::Config { .. } => PpdeStatus::Configuration,
        Error::Io { .. } => PpdeStatus::Io,
        Error::Parse(_) => PpdeStatus::Parse,
    }
}

struct Fail(PpdeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(PpdeStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PpdeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PpdeStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {m}"));
            PpdeStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(PpdeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(PpdeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(PpdeStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(PpdeStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ppde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next `ppde_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ppde_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by the library.
///
/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ppde_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a path in `R^dim` from `n_knots` increasing times and
/// `n_knots * dim` values, row-major by knot.
///
/// # Safety
/// Pointers must be valid for the given lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_path_new(
    kind: PpdePathKind,
    dim: usize,
    knots: *const f64,
    n_knots: usize,
    values: *const f64,
    out_path: *mut *mut PpdePath,
) -> PpdeStatus {
    guard(|| {
        let o = out(out_path, "out_path")?;
        if dim == 0 || n_knots == 0 {
            return Err(invalid("dim and n_knots must be positive"));
        }
        let k = slice(knots, n_knots, "knots")?;
        let v = slice(values, n_knots * dim, "values")?;
        if k.iter().chain(v).any(|x| !x.is_finite()) {
            return Err(invalid("knots and values must be finite"));
        }
        if !k.windows(2).all(|w| w[0] < w[1]) || k[0] < 0.0 {
            return Err(invalid("knots must be nonnegative and strictly increasing"));
        }
        let p = match kind {
            PpdePathKind::Linear => PwPath::linear(dim, k.to_vec(), v.to_vec()),
            PpdePathKind::Step => PwPath::step(dim, k.to_vec(), v.to_vec()),
        };
        *o = boxed(PpdePath(p));
        Ok(())
    })
}

/// # Safety
/// `path` must come from `ppde_path_new` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ppde_path_free(path: *mut PpdePath) {
    free(path)
}

/// # Safety
/// `path` must be a valid handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ppde_path_dim(path: *const PpdePath) -> usize {
    path.as_ref().map_or(0, |p| p.0.dim())
}

/// Writes `ω(t)` into `out`, which holds `len >= dim` doubles.
///
/// # Safety
/// `out` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ppde_path_eval(path: *const PpdePath, t: f64, out_values: *mut f64, len: usize) -> PpdeStatus {
    guard(|| {
        let p = deref(path, "path")?;
        if out_values.is_null() {
            return Err(Fail(PpdeStatus::NullPointer, "out_values is null".into()));
        }
        if len < p.0.dim() {
            return Err(invalid(format!("buffer holds {len} values, path has dimension {}", p.0.dim())));
        }
        let x = p.0.eval(t);
        std::slice::from_raw_parts_mut(out_values, x.len()).copy_from_slice(&x);
        Ok(())
    })
}

/// `d_p((t, a), (s, b))` on `[0, horizon]`.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_distance(
    t: f64,
    a: *const PpdePath,
    s: f64,
    b: *const PpdePath,
    p: f64,
    horizon: f64,
    out_distance: *mut f64,
) -> PpdeStatus {
    guard(|| {
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        let o = out(out_distance, "out_distance")?;
        if a.0.dim() != b.0.dim() {
            return Err(invalid("paths differ in dimension"));
        }
        if !(p >= 1.0) || !(horizon > 0.0) {
            return Err(invalid("need p >= 1 and horizon > 0"));
        }
        if !(0.0..=horizon).contains(&t) || !(0.0..=horizon).contains(&s) {
            return Err(invalid("times must lie in [0, horizon]"));
        }
        *o = pw_distance(t, &a.0, s, &b.0, p, horizon);
        Ok(())
    })
}

/// Looks up `name` in the functional catalog.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_functional_new(
    name: *const c_char,
    horizon: f64,
    dim: usize,
    out_functional: *mut *mut PpdeFunctional,
) -> PpdeStatus {
    guard(|| {
        let o = out(out_functional, "out_functional")?;
        let name = string(name, "name")?;
        *o = boxed(PpdeFunctional(catalog(name, horizon, dim)?));
        Ok(())
    })
}

/// # Safety
/// `f` must come from `ppde_functional_new` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ppde_functional_free(f: *mut PpdeFunctional) {
    free(f)
}

/// `u(t, ω)`.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_functional_eval(
    f: *const PpdeFunctional,
    t: f64,
    path: *const PpdePath,
    out_value: *mut f64,
) -> PpdeStatus {
    guard(|| {
        let (f, p) = (deref(f, "f")?, deref(path, "path")?);
        let o = out(out_value, "out_value")?;
        *o = f.0.eval(t, &p.0.stopped(t));
        Ok(())
    })
}

/// Sup- or inf-convolution of `f` with weight `n` at `(s, eta)`, using the
/// default search settings.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_regularize(
    f: *const PpdeFunctional,
    n: f64,
    s: f64,
    eta: *const PpdePath,
    direction: PpdeDirection,
    p: f64,
    horizon: f64,
    out_result: *mut PpdeRegularization,
) -> PpdeStatus {
    guard(|| {
        let (f, eta) = (deref(f, "f")?, deref(eta, "eta")?);
        let o = out(out_result, "out_result")?;
        let dir = match direction {
            PpdeDirection::Sub => Direction::Sub,
            PpdeDirection::Super => Direction::Super,
        };
        let r = regularize(f.0.as_ref(), n, s, &eta.0, dir, &SearchConfig::default(), RegParams::new(p, horizon))?;
        *o = PpdeRegularization { value: r.value, gap: r.gap, t_hat: r.t_hat, certified: r.certified, evaluations: r.evaluations };
        Ok(())
    })
}

/// Lattice with drifts in `[-bound, bound]` and volatilities in `[0, bound]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_lattice_new(
    bound: f64,
    horizon: f64,
    steps: usize,
    dim: usize,
    drift_points: usize,
    vol_points: usize,
    out_lattice: *mut *mut PpdeLattice,
) -> PpdeStatus {
    guard(|| {
        let o = out(out_lattice, "out_lattice")?;
        let m = build_lattice(bound, horizon, steps, dim, ControlGrids { drift_points, vol_points })?;
        *o = boxed(PpdeLattice(m));
        Ok(())
    })
}

/// # Safety
/// `l` must come from `ppde_lattice_new` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ppde_lattice_free(l: *mut PpdeLattice) {
    free(l)
}

/// `sup_P E^P[u(T, B)]` (or the infimum) over the lattice strategies.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_sup_expectation(
    lattice: *const PpdeLattice,
    f: *const PpdeFunctional,
    mode: PpdeMode,
    out_value: *mut f64,
) -> PpdeStatus {
    guard(|| {
        let (l, f) = (deref(lattice, "lattice")?, deref(f, "f")?);
        let o = out(out_value, "out_value")?;
        let mode = match mode {
            PpdeMode::Sup => Mode::Sup,
            PpdeMode::Inf => Mode::Inf,
        };
        *o = sup_expectation(&l.0, &PayoffOnTree::from_functional(f.0.clone()), mode)?;
        Ok(())
    })
}

/// Value of a benchmark control problem started at `(t, x0)`, with default
/// resolution.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_control_value(
    name: *const c_char,
    horizon: f64,
    t: f64,
    x0: f64,
    engine: PpdeEngine,
    seed: u64,
    out_value: *mut PpdeValue,
) -> PpdeStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        let problem = control_bench::problem(string(name, "name")?, horizon)?;
        let engine = match engine {
            PpdeEngine::Lattice => Engine::Lattice,
            PpdeEngine::MonteCarlo => Engine::MonteCarlo,
        };
        let omega = PwPath::constant(&[x0]);
        let v = control_bench::value(&problem, t, &omega, engine, &Resolution::default(), seed)?;
        *o = PpdeValue { value: v.value, std_error: v.std_error, lower_bound: v.lower_bound };
        Ok(())
    })
}

/// Default experiment configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_config_default(out_config: *mut *mut PpdeConfig) -> PpdeStatus {
    guard(|| {
        *out(out_config, "out_config")? = boxed(PpdeConfig(ExperimentConfig::default()));
        Ok(())
    })
}

/// Parses and validates a TOML configuration. Diagnostics (with line numbers
/// when known) go to `ppde_last_error`, one per line.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_config_parse(toml: *const c_char, out_config: *mut *mut PpdeConfig) -> PpdeStatus {
    guard(|| {
        let o = out(out_config, "out_config")?;
        let text = string(toml, "toml")?;
        let render = |d: &cli::Diagnostic| match d.line {
            Some(l) => format!("line {l}: {}: {}", d.key, d.message),
            None => format!("{}: {}", d.key, d.message),
        };
        let cfg = cli::parse(text).map_err(|d| Fail(PpdeStatus::Configuration, render(&d)))?;
        let diags = cli::validate(&cfg, Some(text));
        if !diags.is_empty() {
            let msg: Vec<String> = diags.iter().map(render).collect();
            return Err(Fail(PpdeStatus::Configuration, msg.join("\n")));
        }
        *o = boxed(PpdeConfig(cfg));
        Ok(())
    })
}

/// # Safety
/// `c` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ppde_config_free(c: *mut PpdeConfig) {
    free(c)
}

/// Runs `suite` (NULL keeps the configured one; `"all"` runs every suite) on
/// `jobs` threads (0 for all cores). The JSON summary is returned through
/// `out_json` and must be released with `ppde_string_free`; `out_passed` may
/// be NULL. A suite that fails its checks still returns `PPDE_STATUS_OK`.
///
/// # Safety
/// `config` must be valid; `suite` NULL or NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn ppde_run(
    config: *const PpdeConfig,
    suite: *const c_char,
    jobs: usize,
    out_json: *mut *mut c_char,
    out_passed: *mut bool,
) -> PpdeStatus {
    guard(|| {
        let mut cfg = deref(config, "config")?.0.clone();
        let o = out(out_json, "out_json")?;
        if !suite.is_null() {
            cfg.suite = string(suite, "suite")?.to_string();
        }
        let summary = cli::run(&cfg, (jobs > 0).then_some(jobs))?;
        let text = serde_json::to_string(&summary).map_err(|e| Fail(PpdeStatus::Io, e.to_string()))?;
        *o = CString::new(text).map_err(|e| invalid(e.to_string()))?.into_raw();
        if let Some(p) = out_passed.as_mut() {
            *p = summary.passed;
        }
        Ok(())
    })
}
