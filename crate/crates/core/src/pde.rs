//! Explicit backward-in-time solver for the terminal value problems
//!
//! ```text
//! ∂_t u + F(u, Du, D²u) = -h,     u(·, T) = g          (limit_F)
//! ∂_t u - H_m^±(u, Du, D²u) = -h, u(·, T) = g          (bounded_plus / bounded_minus)
//! ```
//!
//! on a truncated box with the discounted payoff imposed on the lateral
//! boundary. Node updates within a step only read the previous slice, so
//! they run in parallel without affecting the result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isaacs::{self, DirectionSet, OperatorInput, Side};
use crate::lattice::Lattice;
use crate::linalg::{dot, SymMatrix};
use crate::market::{MarketParams, TerminalPayoff};

/// Which operator drives the evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "limit_F")]
    LimitF,
    #[serde(rename = "bounded_plus")]
    BoundedPlus,
    #[serde(rename = "bounded_minus")]
    BoundedMinus,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::LimitF, Mode::BoundedPlus, Mode::BoundedMinus];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::LimitF => "limit_F",
            Mode::BoundedPlus => "bounded_plus",
            Mode::BoundedMinus => "bounded_minus",
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            Mode::LimitF => None,
            Mode::BoundedPlus => Some(Side::Plus),
            Mode::BoundedMinus => Some(Side::Minus),
        }
    }
}

/// Lateral boundary condition. Only the discounted payoff is supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    DiscountedPayoff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: Mode,
    /// Control bound, used by the bounded modes.
    pub m: f64,
    /// Below this gradient norm the limit operator uses the mean-eigenvalue rule.
    pub eps_grad: f64,
    pub n_dirs: usize,
    pub cfl: f64,
    pub boundary: Boundary,
}

impl SolverConfig {
    pub const DEFAULT_CFL: f64 = 0.5;
    pub const DEFAULT_M: f64 = 10.0;

    /// Defaults for a market: `eps_grad = 1e-8 · max σ`, the default
    /// direction count for the dimension, `cfl = 0.5`.
    pub fn new(mode: Mode, params: &MarketParams) -> Self {
        Self {
            mode,
            m: Self::DEFAULT_M,
            eps_grad: 1e-8 * params.max_sigma(),
            n_dirs: DirectionSet::default_count(params.dim()),
            cfl: Self::DEFAULT_CFL,
            boundary: Boundary::DiscountedPayoff,
        }
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_n_dirs(mut self, n_dirs: usize) -> Self {
        self.n_dirs = n_dirs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::invalid(format!("m must be positive, got {}", self.m)));
        }
        if !(self.eps_grad.is_finite() && self.eps_grad > 0.0) {
            return Err(Error::invalid(format!(
                "eps_grad must be positive, got {}",
                self.eps_grad
            )));
        }
        if self.n_dirs == 0 {
            return Err(Error::invalid("n_dirs must be positive"));
        }
        Ok(())
    }
}

/// Spatial box, points per axis and (optionally) the number of time steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub nx: Vec<usize>,
    /// Derived from the CFL bound when absent.
    pub nt: Option<usize>,
}

/// Time-step bookkeeping reported alongside a solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CflReport {
    pub nt: usize,
    pub dt: f64,
    pub dt_max: f64,
    pub cfl: f64,
    /// `dt / dt_max`; at most 1 for an accepted run.
    pub ratio: f64,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, nx: Vec<usize>, nt: Option<usize>) -> Self {
        Self { lo, hi, nx, nt }
    }

    /// Half-width per axis of the default truncation box.
    pub fn truncation_half_width(params: &MarketParams) -> Vec<f64> {
        let t = params.horizon();
        params
            .sigma()
            .iter()
            .zip(params.mu())
            .map(|(s, mu)| (4.0 * 5f64.sqrt() * s * t.sqrt()).max(4.0 * (mu.abs() * t + 1.0)))
            .collect()
    }

    /// Default box around the evaluation point `center`.
    pub fn truncated(params: &MarketParams, center: &[f64], nx: Vec<usize>, nt: Option<usize>) -> Self {
        let w = Self::truncation_half_width(params);
        let lo = center.iter().zip(&w).map(|(c, w)| c - w).collect();
        let hi = center.iter().zip(&w).map(|(c, w)| c + w).collect();
        Self { lo, hi, nx, nt }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.lo.clone(), self.hi.clone(), self.nx.clone())
    }

    /// `cfl · min h_i² / (5 n max σ_i²)`.
    pub fn max_stable_dt(&self, params: &MarketParams, cfl: f64) -> Result<f64> {
        let lat = self.lattice()?;
        let hmin = lat.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
        let s = params.max_sigma();
        Ok(cfl * hmin * hmin / (5.0 * self.dim() as f64 * s * s))
    }

    /// Number of steps and step size; errors when an explicit `nt` violates
    /// the CFL bound.
    pub fn resolve_time(&self, params: &MarketParams, cfl: f64) -> Result<CflReport> {
        let dt_max = self.max_stable_dt(params, cfl)?;
        let t = params.horizon();
        let nt = match self.nt {
            Some(0) => return Err(Error::invalid("nt must be positive")),
            Some(nt) => nt,
            None => ((t / dt_max).ceil() as usize).max(1),
        };
        let dt = t / nt as f64;
        let ratio = dt / dt_max;
        if ratio > 1.0 + 1e-12 {
            return Err(Error::Precondition(format!(
                "CFL violated: dt = {dt:e} exceeds cfl·min h²/(5·n·max σ²) = {dt_max:e} (nt = {nt}, need nt >= {})",
                (t / dt_max).ceil()
            )));
        }
        Ok(CflReport {
            nt,
            dt,
            dt_max,
            cfl,
            ratio,
        })
    }
}

/// Space-time surface: one value array per time slice `t_k = k·dt`,
/// `k = 0..=nt`.
#[derive(Clone, Debug)]
pub struct PriceGrid {
    lattice: Lattice,
    nt: usize,
    dt: f64,
    horizon: f64,
    slices: Vec<Vec<f64>>,
}

impl PriceGrid {
    /// Assembles a surface from slices ordered by increasing time.
    pub fn from_slices(lattice: Lattice, horizon: f64, slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.len() < 2 {
            return Err(Error::invalid("a surface needs at least two time slices"));
        }
        if let Some(k) = slices.iter().position(|s| s.len() != lattice.len()) {
            return Err(Error::invalid(format!("slice {k} does not match the lattice size")));
        }
        let nt = slices.len() - 1;
        Ok(Self {
            lattice,
            nt,
            dt: horizon / nt as f64,
            horizon,
            slices,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.nt {
            self.horizon
        } else {
            k as f64 * self.dt
        }
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.slices[k]
    }

    pub fn initial(&self) -> &[f64] {
        &self.slices[0]
    }

    pub fn terminal(&self) -> &[f64] {
        &self.slices[self.nt]
    }

    /// Index of the slice closest to time `t`.
    pub fn slice_index(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.nt)
    }

    /// Multilinear interpolation in space on the slice nearest to `t`.
    pub fn value_at(&self, x: &[f64], t: f64) -> Option<f64> {
        self.lattice.interpolate(&self.slices[self.slice_index(t)], x)
    }

    pub fn derivatives(&self, idx: &[usize], k: usize) -> Result<OperatorInput> {
        discrete_derivatives(&self.lattice, &self.slices[k], idx)
    }
}

/// Central differences at an interior node: `p_i = (u_{+i} - u_{-i})/2h_i`,
/// `M_ii = (u_{+i} - 2u + u_{-i})/h_i²`, four-point corner stencil off the
/// diagonal.
pub fn discrete_derivatives(lattice: &Lattice, values: &[f64], idx: &[usize]) -> Result<OperatorInput> {
    if idx.len() != lattice.dim() || !lattice.is_interior(idx) {
        return Err(Error::OutOfDomain(idx.to_vec()));
    }
    Ok(derivatives_at(lattice, values, lattice.flat_index(idx)))
}

fn derivatives_at(lattice: &Lattice, u: &[f64], c: usize) -> OperatorInput {
    let n = lattice.dim();
    let h = lattice.spacing();
    let st = lattice.strides();
    let mut p = vec![0.0; n];
    let mut hess = SymMatrix::zeros(n);
    let u0 = u[c];
    for i in 0..n {
        let up = u[c + st[i]];
        let dn = u[c - st[i]];
        p[i] = (up - dn) / (2.0 * h[i]);
        hess.set(i, i, (up - 2.0 * u0 + dn) / (h[i] * h[i]));
        for j in (i + 1)..n {
            let pp = u[c + st[i] + st[j]];
            let pm = u[c + st[i] - st[j]];
            let mp = u[c - st[i] + st[j]];
            let mm = u[c - st[i] - st[j]];
            hess.set(i, j, (pp - pm - mp + mm) / (4.0 * h[i] * h[j]));
        }
    }
    OperatorInput {
        xi: u0,
        p,
        hessian: hess,
    }
}

/// Operator evaluation with the direction set built once.
struct Operator<'a> {
    config: &'a SolverConfig,
    params: &'a MarketParams,
    dirs: Option<DirectionSet>,
}

impl<'a> Operator<'a> {
    fn new(config: &'a SolverConfig, params: &'a MarketParams) -> Self {
        let dirs = config
            .mode
            .side()
            .map(|_| DirectionSet::for_dim(params.dim(), config.n_dirs));
        Self {
            config,
            params,
            dirs,
        }
    }

    fn eval(&self, input: &OperatorInput) -> Result<f64> {
        match (self.config.mode.side(), &self.dirs) {
            (Some(side), Some(dirs)) => {
                Ok(-isaacs::hm_side(input, self.config.m, self.params, dirs, side)?)
            }
            _ => Ok(limit_with_fallback(input, self.params, self.config.eps_grad)),
        }
    }
}

fn limit_with_fallback(input: &OperatorInput, params: &MarketParams, eps_grad: f64) -> f64 {
    let p2 = dot(&input.p, &input.p);
    let a = input.hessian.congruence_diag(params.sigma());
    let first = if p2.sqrt() >= eps_grad {
        2.0 * a.quad_form(&input.p) / p2
    } else {
        2.0 * a.trace() / input.dim() as f64
    };
    first + 0.5 * a.trace() + dot(params.mu(), &input.p) - params.rate() * input.xi
}

/// The value `G` such that the evolution reads `∂_t u + G = 0`: `F` in
/// `limit_F` mode (mean-eigenvalue rule when `|p| < eps_grad`), and
/// `-H_m^±` in the bounded modes.
pub fn apply_operator(input: &OperatorInput, config: &SolverConfig, params: &MarketParams) -> Result<f64> {
    if input.dim() != params.dim() {
        return Err(Error::invalid("operator input dimension does not match the market"));
    }
    Operator::new(config, params).eval(input)
}

fn check_cfl(lattice: &Lattice, dt: f64, params: &MarketParams, cfl: f64) -> Result<()> {
    let hmin = lattice.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    let s = params.max_sigma();
    let dt_max = cfl * hmin * hmin / (5.0 * lattice.dim() as f64 * s * s);
    if dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "CFL violated: dt = {dt:e} exceeds {dt_max:e}"
        )));
    }
    Ok(())
}

fn step_with(
    lattice: &Lattice,
    next: &[f64],
    t: f64,
    dt: f64,
    op: &Operator<'_>,
    payoff: &dyn TerminalPayoff,
) -> Result<Vec<f64>> {
    let params = op.params;
    let t_next = t + dt;
    (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            if !lattice.is_interior_flat(k) {
                return Ok(params.frozen_value(payoff, &lattice.coords(k), t));
            }
            let input = derivatives_at(lattice, next, k);
            let mut v = next[k] + dt * op.eval(&input)?;
            if let Some(rc) = params.running_cost() {
                v += dt * rc.eval(&lattice.coords(k), t_next);
            }
            if !v.is_finite() {
                return Err(Error::Precondition(format!(
                    "non-finite value at node {:?}, t = {t}",
                    lattice.multi_index(k)
                )));
            }
            Ok(v)
        })
        .collect()
}

/// One explicit step from the slice at `t + dt` to the slice at `t`.
pub fn step_backward(
    lattice: &Lattice,
    next: &[f64],
    t: f64,
    dt: f64,
    payoff: &dyn TerminalPayoff,
    params: &MarketParams,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if next.len() != lattice.len() {
        return Err(Error::invalid("slice does not match the lattice size"));
    }
    check_cfl(lattice, dt, params, config.cfl)?;
    step_with(lattice, next, t, dt, &Operator::new(config, params), payoff)
}

/// Full backward solve from `u(·, T) = g`.
pub fn solve_terminal_value(
    payoff: &dyn TerminalPayoff,
    params: &MarketParams,
    config: &SolverConfig,
    grid: &GridSpec,
) -> Result<PriceGrid> {
    config.validate()?;
    if grid.dim() != params.dim() || payoff.dim() != params.dim() {
        return Err(Error::invalid("grid, payoff and market dimensions differ"));
    }
    let lattice = grid.lattice()?;
    let cfl = grid.resolve_time(params, config.cfl)?;
    let op = Operator::new(config, params);
    let mut slices = vec![Vec::new(); cfl.nt + 1];
    slices[cfl.nt] = (0..lattice.len())
        .map(|k| payoff.value(&lattice.coords(k)))
        .collect();
    for k in (0..cfl.nt).rev() {
        let t = k as f64 * cfl.dt;
        slices[k] = step_with(&lattice, &slices[k + 1], t, cfl.dt, &op, payoff)?;
    }
    PriceGrid::from_slices(lattice, params.horizon(), slices)
}

/// Anchor and constants of the barrier pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarrierParams {
    pub y: Vec<f64>,
    pub eps: f64,
    pub a: f64,
    pub l: f64,
}

impl BarrierParams {
    pub fn new(y: Vec<f64>, eps: f64, a: f64, l: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::invalid(format!("barrier eps must lie in (0, 1], got {eps}")));
        }
        if !(a > 0.0 && a.is_finite()) || !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid("barrier constants A and L must be positive"));
        }
        Ok(Self { y, eps, a, l })
    }
}

/// `A = 20 · L · n · (max σ² + max|μ| + r + 1)`.
pub fn a_design(params: &MarketParams, l: f64) -> f64 {
    let s = params.max_sigma();
    20.0 * l * params.dim() as f64 * (s * s + params.max_abs_mu() + params.rate() + 1.0)
}

/// `g(y) ∓ (A/ε²)(T - t) ∓ 2L(|x - y|² + ε)^½`.
pub fn barrier_pair(x: &[f64], t: f64, horizon: f64, bp: &BarrierParams, g_y: f64) -> (f64, f64) {
    let d2: f64 = x.iter().zip(&bp.y).map(|(a, b)| (a - b) * (a - b)).sum();
    let spread = bp.a / (bp.eps * bp.eps) * (horizon - t) + 2.0 * bp.l * (d2 + bp.eps).sqrt();
    (g_y - spread, g_y + spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Payoff;

    fn p1() -> MarketParams {
        MarketParams::new(vec![0.0], vec![1.0], 0.0, 1.0).unwrap()
    }

    #[test]
    fn derivatives_exact_on_quadratics() {
        let lat = Lattice::new(vec![-1.0, -2.0], vec![1.0, 2.0], vec![5, 9]).unwrap();
        let q = [[2.0, -0.5], [-0.5, 1.0]];
        let f = |x: &[f64]| {
            0.5 * (q[0][0] * x[0] * x[0] + 2.0 * q[0][1] * x[0] * x[1] + q[1][1] * x[1] * x[1])
        };
        let u: Vec<f64> = (0..lat.len()).map(|k| f(&lat.coords(k))).collect();
        let d = discrete_derivatives(&lat, &u, &[2, 3]).unwrap();
        let x = lat.coords(lat.flat_index(&[2, 3]));
        assert!((d.p[0] - (q[0][0] * x[0] + q[0][1] * x[1])).abs() < 1e-12);
        assert!((d.p[1] - (q[1][0] * x[0] + q[1][1] * x[1])).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                assert!((d.hessian.get(i, j) - q[i][j]).abs() < 1e-12);
            }
        }
        assert!(matches!(
            discrete_derivatives(&lat, &u, &[0, 3]),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn derivatives_of_constants_and_affine() {
        let lat = Lattice::new(vec![0.0], vec![1.0], vec![11]).unwrap();
        let c: Vec<f64> = vec![3.0; 11];
        let d = discrete_derivatives(&lat, &c, &[4]).unwrap();
        assert_eq!((d.xi, d.p[0], d.hessian.get(0, 0)), (3.0, 0.0, 0.0));
        // dyadic slope and spacing keep the stencil exact
        let lat = Lattice::new(vec![0.0], vec![2.0], vec![9]).unwrap();
        let a: Vec<f64> = (0..9).map(|k| 0.5 * lat.coords(k)[0]).collect();
        let d = discrete_derivatives(&lat, &a, &[4]).unwrap();
        assert_eq!((d.p[0], d.hessian.get(0, 0)), (0.5, 0.0));
    }

    #[test]
    fn apply_operator_examples() {
        let p = p1();
        let cfg = SolverConfig::new(Mode::LimitF, &p);
        for pp in [0.0, 1e-12, 1.0, -4.0] {
            let inp = OperatorInput::new(0.0, vec![pp], SymMatrix::diag(&[2.0])).unwrap();
            assert!((apply_operator(&inp, &cfg, &p).unwrap() - 5.0).abs() < 1e-14);
        }
        let p2 = MarketParams::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0, 1.0).unwrap();
        let cfg = SolverConfig::new(Mode::LimitF, &p2);
        let inp = OperatorInput::new(0.0, vec![0.0, 0.0], SymMatrix::diag(&[2.0, -1.0])).unwrap();
        let v = apply_operator(&inp, &cfg, &p2).unwrap();
        let (lo, hi) = isaacs::f_envelopes(&inp, &p2).unwrap();
        assert!((v - 1.5).abs() < 1e-14 && lo <= v && v <= hi);

        let cfg = SolverConfig::new(Mode::BoundedMinus, &p).with_m(10.0);
        let inp = OperatorInput::new(0.0, vec![1.0], SymMatrix::diag(&[1.0])).unwrap();
        assert_eq!(apply_operator(&inp, &cfg, &p).unwrap(), 2.5);
    }

    #[test]
    fn constant_payoff_steps() {
        let g = Payoff::constant(1, 5.0).unwrap();
        let lat = Lattice::new(vec![-1.0], vec![1.0], vec![21]).unwrap();
        let u = vec![5.0; 21];
        for mode in Mode::ALL {
            let p = p1();
            let cfg = SolverConfig::new(mode, &p);
            let s = step_backward(&lat, &u, 0.0, 1e-3, &g, &p, &cfg).unwrap();
            assert!(s.iter().all(|v| *v == 5.0));
            let pr = MarketParams::new(vec![0.0], vec![1.0], 0.1, 1.0).unwrap();
            let s = step_backward(&lat, &u, 0.999, 1e-3, &g, &pr, &cfg).unwrap();
            assert!((s[10] - 5.0 * (1.0 - 1e-4)).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_payoff_step_is_stationary() {
        let lat = Lattice::new(vec![0.0], vec![2.0], vec![9]).unwrap();
        let u: Vec<f64> = (0..9).map(|k| 1.0 + 0.25 * lat.coords(k)[0]).collect();
        let g = Payoff::constant(1, 0.0).unwrap();
        let p = p1();
        let s = step_backward(&lat, &u, 0.0, 1e-3, &g, &p, &SolverConfig::new(Mode::LimitF, &p))
            .unwrap();
        assert_eq!(&s[1..8], &u[1..8]);
    }

    #[test]
    fn cfl_violation_is_a_precondition_error() {
        let p = p1();
        let grid = GridSpec::new(vec![-1.0], vec![1.0], vec![101], Some(10));
        let g = Payoff::constant(1, 1.0).unwrap();
        let err = solve_terminal_value(&g, &p, &SolverConfig::new(Mode::LimitF, &p), &grid);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn constant_solve_discounts() {
        let p = MarketParams::new(vec![0.0], vec![0.2], 0.1, 1.0).unwrap();
        let grid = GridSpec::new(vec![-1.0], vec![1.0], vec![11], Some(1000));
        let g = Payoff::constant(1, 5.0).unwrap();
        let s = solve_terminal_value(&g, &p, &SolverConfig::new(Mode::LimitF, &p), &grid).unwrap();
        assert!((s.initial()[5] - 5.0 * (-0.1f64).exp()).abs() <= 5.0 * 0.01 * 1e-3);
        assert_eq!(s.terminal(), &[5.0; 11][..]);
    }

    #[test]
    fn barrier_examples() {
        let bp = BarrierParams::new(vec![0.0], 0.01, 123.0, 100.0).unwrap();
        let (lo, hi) = barrier_pair(&[0.0], 1.0, 1.0, &bp, 50.0);
        assert!((lo - 30.0).abs() < 1e-12 && (hi - 70.0).abs() < 1e-12);
        let (lo, hi) = barrier_pair(&[0.3], 0.2, 1.0, &bp, 50.0);
        let want = 2.0 * 123.0 / 1e-4 * 0.8 + 4.0 * 100.0 * (0.09f64 + 0.01).sqrt();
        assert!(((hi - lo) - want).abs() < 1e-9 * want);
        assert!(BarrierParams::new(vec![0.0], 2.0, 1.0, 1.0).is_err());
    }
}
