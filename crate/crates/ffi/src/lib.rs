//! C ABI over the `tugwar` engine.
//!
//! Every entry point returns a [`TwStatus`]; results are written through out
//! pointers. Handles are opaque and must be released with the matching
//! `*_free` function. On failure, [`tw_last_error`] returns a message for
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use tugwar::isaacs::{self, DirectionSet, OperatorInput, Side};
use tugwar::linalg::SymMatrix;
use tugwar::market::{MarketParams, Payoff, TerminalPayoff};
use tugwar::pde::{solve_terminal_value, GridSpec, Mode, PriceGrid, SolverConfig};
use tugwar::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Precondition = 3,
    Certification = 4,
    GradientDegenerate = 5,
    OutOfDomain = 6,
    Io = 7,
    Panic = 8,
}

/// Solver mode selector for [`tw_solve`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwMode {
    LimitF = 0,
    BoundedPlus = 1,
    BoundedMinus = 2,
}

/// Side selector for [`tw_hm`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwSide {
    Plus = 0,
    Minus = 1,
}

/// Market coefficients.
pub struct TwMarket(MarketParams);

/// Terminal payoff.
pub struct TwPayoff(Payoff);

/// Solved space-time value surface.
pub struct TwSurface(PriceGrid);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TwStatus {
    match e {
        Error::InvalidInput(_) | Error::Config(_) | Error::Json(_) | Error::StrategyContract { .. } => {
            TwStatus::InvalidInput
        }
        Error::Precondition(_) => TwStatus::Precondition,
        Error::Certification { .. } => TwStatus::Certification,
        Error::GradientDegenerate => TwStatus::GradientDegenerate,
        Error::OutOfDomain(_) => TwStatus::OutOfDomain,
        Error::Io(_) => TwStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TwStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            TwStatus::NullPointer
        }
        Ok(Err(Failure::Engine(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            TwStatus::Panic
        }
    }
}

/// Reads `len` values, rejecting null pointers.
unsafe fn read<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failure on this thread. Valid until the next call
/// into this library from the same thread.
#[no_mangle]
pub extern "C" fn tw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `mu` and `sigma` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_market_new(
    n: usize,
    mu: *const f64,
    sigma: *const f64,
    r: f64,
    horizon: f64,
    out: *mut *mut TwMarket,
) -> TwStatus {
    guard(|| {
        let mu = read(mu, n, "mu")?.to_vec();
        let sigma = read(sigma, n, "sigma")?.to_vec();
        let m = MarketParams::new(mu, sigma, r, horizon)?;
        write(out, Box::into_raw(Box::new(TwMarket(m))), "out")
    })
}

/// # Safety
/// `market` must be null or a handle from [`tw_market_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tw_market_free(market: *mut TwMarket) {
    if !market.is_null() {
        drop(Box::from_raw(market));
    }
}

/// # Safety
/// `weights` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_payoff_basket_put(
    n: usize,
    weights: *const f64,
    strike: f64,
    out: *mut *mut TwPayoff,
) -> TwStatus {
    guard(|| {
        let w = read(weights, n, "weights")?.to_vec();
        let p = Payoff::basket_put(w, strike)?;
        write(out, Box::into_raw(Box::new(TwPayoff(p))), "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_payoff_constant(n: usize, value: f64, out: *mut *mut TwPayoff) -> TwStatus {
    guard(|| {
        let p = Payoff::constant(n, value)?;
        write(out, Box::into_raw(Box::new(TwPayoff(p))), "out")
    })
}

/// # Safety
/// `payoff` must be a live handle, `x` must point to `n` doubles, `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_payoff_value(
    payoff: *const TwPayoff,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> TwStatus {
    guard(|| {
        let p = payoff.as_ref().ok_or(Failure::Null("payoff"))?;
        let x = read(x, n, "x")?;
        if n != p.0.dim() {
            return Err(Error::InvalidInput(format!("payoff has dimension {}, got {n}", p.0.dim())).into());
        }
        write(out, p.0.value(x), "out")
    })
}

/// # Safety
/// `payoff` must be null or a handle from a `tw_payoff_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tw_payoff_free(payoff: *mut TwPayoff) {
    if !payoff.is_null() {
        drop(Box::from_raw(payoff));
    }
}

unsafe fn operator_input(
    xi: f64,
    p: *const f64,
    hessian: *const f64,
    n: usize,
) -> Result<OperatorInput, Failure> {
    let p = read(p, n, "p")?.to_vec();
    let h = read(hessian, n * n, "hessian")?.to_vec();
    Ok(OperatorInput::new(xi, p, SymMatrix::from_row_major(n, h)?)?)
}

/// `H_m^±(ξ, p, M)` with the default direction set; `hessian` is row-major
/// `n × n`.
///
/// # Safety
/// `market` must be live; `p` must hold `n` and `hessian` `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tw_hm(
    market: *const TwMarket,
    xi: f64,
    p: *const f64,
    hessian: *const f64,
    n: usize,
    m: f64,
    side: TwSide,
    out: *mut f64,
) -> TwStatus {
    guard(|| {
        let mk = market.as_ref().ok_or(Failure::Null("market"))?;
        let input = operator_input(xi, p, hessian, n)?;
        let side = match side {
            TwSide::Plus => Side::Plus,
            TwSide::Minus => Side::Minus,
        };
        let dirs = DirectionSet::default_for_dim(n);
        write(out, isaacs::hm_side(&input, m, &mk.0, &dirs, side)?, "out")
    })
}

/// The limit operator `F(ξ, p, M)`; fails with
/// [`TwStatus::GradientDegenerate`] at `p = 0`.
///
/// # Safety
/// As for [`tw_hm`].
#[no_mangle]
pub unsafe extern "C" fn tw_f_limit(
    market: *const TwMarket,
    xi: f64,
    p: *const f64,
    hessian: *const f64,
    n: usize,
    out: *mut f64,
) -> TwStatus {
    guard(|| {
        let mk = market.as_ref().ok_or(Failure::Null("market"))?;
        let input = operator_input(xi, p, hessian, n)?;
        write(out, isaacs::f_limit(&input, &mk.0)?, "out")
    })
}

/// Solves the terminal value problem on the box `[lo, hi]` with `nx`
/// points per axis. `nt = 0` picks the step count from the CFL bound.
///
/// # Safety
/// `market` and `payoff` must be live; `lo`, `hi`, `nx` must hold `n`
/// entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tw_solve(
    market: *const TwMarket,
    payoff: *const TwPayoff,
    mode: TwMode,
    m: f64,
    lo: *const f64,
    hi: *const f64,
    nx: *const usize,
    n: usize,
    nt: usize,
    out: *mut *mut TwSurface,
) -> TwStatus {
    guard(|| {
        let mk = market.as_ref().ok_or(Failure::Null("market"))?;
        let pf = payoff.as_ref().ok_or(Failure::Null("payoff"))?;
        let grid = GridSpec::new(
            read(lo, n, "lo")?.to_vec(),
            read(hi, n, "hi")?.to_vec(),
            read(nx, n, "nx")?.to_vec(),
            (nt > 0).then_some(nt),
        );
        let mode = match mode {
            TwMode::LimitF => Mode::LimitF,
            TwMode::BoundedPlus => Mode::BoundedPlus,
            TwMode::BoundedMinus => Mode::BoundedMinus,
        };
        let cfg = SolverConfig::new(mode, &mk.0).with_m(m);
        let s = solve_terminal_value(&pf.0, &mk.0, &cfg, &grid)?;
        write(out, Box::into_raw(Box::new(TwSurface(s))), "out")
    })
}

/// Interpolated value at `(x, t)` on the slice nearest to `t`; fails with
/// [`TwStatus::OutOfDomain`] outside the box.
///
/// # Safety
/// `surface` must be live, `x` must hold `n` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tw_surface_value(
    surface: *const TwSurface,
    x: *const f64,
    n: usize,
    t: f64,
    out: *mut f64,
) -> TwStatus {
    guard(|| {
        let s = surface.as_ref().ok_or(Failure::Null("surface"))?;
        if n != s.0.lattice().dim() {
            return Err(Error::InvalidInput(format!("surface has dimension {}", s.0.lattice().dim())).into());
        }
        let x = read(x, n, "x")?;
        let v = s.0.value_at(x, t).ok_or(Failure::Engine(Error::OutOfDomain(Vec::new())))?;
        write(out, v, "out")
    })
}

/// Number of time steps of a solved surface, or 0 for a null handle.
///
/// # Safety
/// `surface` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn tw_surface_nt(surface: *const TwSurface) -> usize {
    surface.as_ref().map_or(0, |s| s.0.nt())
}

/// # Safety
/// `surface` must be null or a handle from [`tw_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tw_surface_free(surface: *mut TwSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}
