//! Market coefficients and terminal payoffs.
//!
//! Every payoff carries a declared sup bound and Lipschitz constant; the
//! barrier construction in [`crate::pde`] and the value brackets in
//! [`crate::game`] rely on them, and [`certify_payoff`] checks them
//! empirically.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;

/// Weights of a basket must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

type CostFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Per-time running cost `h(x, t)` with a certified bound `h <= -alpha < 0`.
#[derive(Clone)]
pub enum RunningCost {
    Constant(f64),
    Field {
        alpha: f64,
        h: CostFn,
    },
}

impl RunningCost {
    pub fn constant(h: f64) -> Result<Self> {
        if !(h.is_finite() && h < 0.0) {
            return Err(Error::invalid(format!(
                "running cost must be strictly negative, got {h}"
            )));
        }
        Ok(RunningCost::Constant(h))
    }

    pub fn field(alpha: f64, h: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("running cost bound alpha must be positive"));
        }
        Ok(RunningCost::Field {
            alpha,
            h: Arc::new(h),
        })
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            RunningCost::Constant(c) => *c,
            RunningCost::Field { h, .. } => h(x, t),
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            RunningCost::Constant(c) => -c,
            RunningCost::Field { alpha, .. } => *alpha,
        }
    }

    /// `int_t^T e^{-r(s-t)} h(x, s) ds` with `x` frozen.
    pub fn frozen_integral(&self, x: &[f64], t: f64, horizon: f64, r: f64) -> f64 {
        let tau = horizon - t;
        if tau <= 0.0 {
            return 0.0;
        }
        match self {
            RunningCost::Constant(c) => {
                if r == 0.0 {
                    c * tau
                } else {
                    c * (1.0 - (-r * tau).exp()) / r
                }
            }
            RunningCost::Field { h, .. } => {
                const PANELS: usize = 64;
                let ds = tau / PANELS as f64;
                (0..PANELS)
                    .map(|k| {
                        let s = t + (k as f64 + 0.5) * ds;
                        (-r * (s - t)).exp() * h(x, s)
                    })
                    .sum::<f64>()
                    * ds
            }
        }
    }

    /// Checks `h <= -alpha` at the given sample points.
    pub fn certify(&self, samples: &[(Vec<f64>, f64)]) -> Result<()> {
        let alpha = self.alpha();
        for (x, t) in samples {
            let v = self.eval(x, *t);
            if !(v <= -alpha) {
                return Err(Error::Certification {
                    what: "running cost bound h <= -alpha".into(),
                    observed: v,
                    declared: -alpha,
                    witness: vec![x.clone(), vec![*t]],
                });
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RunningCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunningCost::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            RunningCost::Field { alpha, .. } => {
                f.debug_struct("Field").field("alpha", alpha).finish_non_exhaustive()
            }
        }
    }
}

/// Coefficients of the controlled log-return dynamics.
#[derive(Clone, Debug)]
pub struct MarketParams {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    r: f64,
    horizon: f64,
    running_cost: Option<RunningCost>,
}

impl MarketParams {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>, r: f64, horizon: f64) -> Result<Self> {
        if mu.is_empty() || mu.len() != sigma.len() {
            return Err(Error::invalid(format!(
                "mu and sigma must have the same positive length (got {} and {})",
                mu.len(),
                sigma.len()
            )));
        }
        if let Some(i) = mu.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("mu[{i}] is not finite")));
        }
        if let Some(i) = sigma.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(format!(
                "sigma[{i}] must be strictly positive, got {}",
                sigma[i]
            )));
        }
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid(format!("discount rate must be >= 0, got {r}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be > 0, got {horizon}")));
        }
        Ok(Self {
            mu,
            sigma,
            r,
            horizon,
            running_cost: None,
        })
    }

    pub fn with_running_cost(mut self, cost: RunningCost) -> Self {
        self.running_cost = Some(cost);
        self
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn rate(&self) -> f64 {
        self.r
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn running_cost(&self) -> Option<&RunningCost> {
        self.running_cost.as_ref()
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_abs_mu(&self) -> f64 {
        self.mu.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value of the game when the state is frozen at `x` from `t` to the
    /// horizon: `e^{-r(T-t)} g(x)` plus the discounted running cost.
    pub fn frozen_value(&self, payoff: &dyn TerminalPayoff, x: &[f64], t: f64) -> f64 {
        let disc = (-self.r * (self.horizon - t)).exp() * payoff.value(x);
        match &self.running_cost {
            None => disc,
            Some(rc) => disc + rc.frozen_integral(x, t, self.horizon, self.r),
        }
    }
}

/// A terminal reward with declared regularity certificates.
pub trait TerminalPayoff: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn sup_bound(&self) -> f64;
    fn lipschitz_bound(&self) -> f64;
}

/// `max(K - sum_i w_i e^{x_i}, 0)`.
pub fn payoff_basket_put(x: &[f64], weights: &[f64], strike: f64) -> Result<f64> {
    if x.len() != weights.len() {
        return Err(Error::invalid(format!(
            "state has dimension {} but basket has {} weights",
            x.len(),
            weights.len()
        )));
    }
    Ok(basket_put_unchecked(x, weights, strike))
}

#[inline]
fn basket_put_unchecked(x: &[f64], weights: &[f64], strike: f64) -> f64 {
    let index: f64 = x.iter().zip(weights).map(|(xi, w)| w * xi.exp()).sum();
    (strike - index).max(0.0)
}

/// Built-in payoffs.
#[derive(Clone, Debug)]
pub enum Payoff {
    BasketPut { weights: Vec<f64>, strike: f64 },
    Tabulated(PayoffTable),
    Constant { dim: usize, value: f64 },
    /// `base + offset`, with `offset >= 0`.
    Shifted { base: Box<Payoff>, offset: f64 },
}

impl Payoff {
    pub fn basket_put(weights: Vec<f64>, strike: f64) -> Result<Self> {
        validate_weights(&weights)?;
        if !(strike.is_finite() && strike > 0.0) {
            return Err(Error::invalid(format!("strike must be positive, got {strike}")));
        }
        Ok(Payoff::BasketPut { weights, strike })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("payoff dimension must be positive"));
        }
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::invalid(format!(
                "constant payoff must be finite and nonnegative, got {value}"
            )));
        }
        Ok(Payoff::Constant { dim, value })
    }

    pub fn shifted(self, offset: f64) -> Result<Self> {
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(Error::invalid("payoff shift must be finite and nonnegative"));
        }
        Ok(Payoff::Shifted {
            base: Box::new(self),
            offset,
        })
    }
}

/// Validates basket weights: nonnegative, summing to one.
pub fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::invalid("basket needs at least one weight"));
    }
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid(format!(
            "weight {i} must be finite and nonnegative, got {}",
            weights[i]
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::invalid(format!("weights must sum to 1, got {sum}")));
    }
    Ok(())
}

impl TerminalPayoff for Payoff {
    fn dim(&self) -> usize {
        match self {
            Payoff::BasketPut { weights, .. } => weights.len(),
            Payoff::Tabulated(t) => t.dim(),
            Payoff::Constant { dim, .. } => *dim,
            Payoff::Shifted { base, .. } => base.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Payoff::BasketPut { weights, strike } => basket_put_unchecked(x, weights, *strike),
            Payoff::Tabulated(t) => t.interpolate(x),
            Payoff::Constant { value, .. } => *value,
            Payoff::Shifted { base, offset } => base.value(x) + offset,
        }
    }

    fn sup_bound(&self) -> f64 {
        match self {
            Payoff::BasketPut { strike, .. } => *strike,
            Payoff::Tabulated(t) => t.sup_bound(),
            Payoff::Constant { value, .. } => *value,
            Payoff::Shifted { base, offset } => base.sup_bound() + offset,
        }
    }

    /// For the basket put, `|grad g| = |w o e^x| <= sum w_i e^{x_i} <= K` on
    /// the in-the-money set, so `K` bounds the Euclidean Lipschitz constant.
    fn lipschitz_bound(&self) -> f64 {
        match self {
            Payoff::BasketPut { strike, .. } => *strike,
            Payoff::Tabulated(t) => t.lipschitz_bound(),
            Payoff::Constant { .. } => 0.0,
            Payoff::Shifted { base, .. } => base.lipschitz_bound(),
        }
    }
}

/// A user-supplied payoff closure with declared bounds. Used for payoffs
/// outside the built-in set and in certification tests.
pub struct FnPayoff<F> {
    pub dim: usize,
    pub sup_bound: f64,
    pub lipschitz_bound: f64,
    pub f: F,
}

impl<F> TerminalPayoff for FnPayoff<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn sup_bound(&self) -> f64 {
        self.sup_bound
    }
    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }
}

/// Payoff sampled on a tensor grid, read from CSV with header
/// `x_1,...,x_n,g` and rows in lexicographic grid order (first axis slowest).
/// Evaluated by multilinear interpolation with flat extrapolation.
#[derive(Clone, Debug, Serialize)]
pub struct PayoffTable {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
    #[serde(skip)]
    strides: Vec<usize>,
    sup: f64,
    lipschitz: f64,
}

impl PayoffTable {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let n = axes.len();
        if n == 0 {
            return Err(Error::invalid("payoff table needs at least one axis"));
        }
        for (k, ax) in axes.iter().enumerate() {
            if ax.len() < 2 {
                return Err(Error::invalid(format!("payoff table axis {k} needs >= 2 points")));
            }
            if ax.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid(format!(
                    "payoff table axis {k} must be strictly increasing"
                )));
            }
        }
        let len: usize = axes.iter().map(Vec::len).product();
        if values.len() != len {
            return Err(Error::invalid(format!(
                "payoff table has {} values, grid needs {len}",
                values.len()
            )));
        }
        // Sign is left to certification.
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("payoff table value {i} must be finite")));
        }
        let mut strides = vec![1; n];
        for k in (0..n - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].len();
        }
        let sup = values.iter().cloned().fold(0.0, f64::max);
        // Inside each cell the gradient component along axis k is a convex
        // combination of edge slopes along k.
        let mut max_slope = vec![0.0f64; n];
        for flat in 0..len {
            let mut rem = flat;
            for k in 0..n {
                let i = rem / strides[k];
                rem %= strides[k];
                if i + 1 < axes[k].len() {
                    let dv = values[flat + strides[k]] - values[flat];
                    let slope = dv.abs() / (axes[k][i + 1] - axes[k][i]);
                    max_slope[k] = max_slope[k].max(slope);
                }
            }
        }
        let lipschitz = norm(&max_slope);
        Ok(Self {
            axes,
            values,
            strides,
            sup,
            lipschitz,
        })
    }

    pub fn from_csv_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("payoff table CSV is empty"))??;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let n = cols.len().saturating_sub(1);
        let expected: Vec<String> = (1..=n).map(|i| format!("x_{i}")).chain(["g".into()]).collect();
        if n == 0 || cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::invalid(format!(
                "payoff table header must be `{}`, got `{header}`",
                expected.join(",")
            )));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::invalid(format!("payoff table line {}: {e}", lineno + 2)))?;
            if row.len() != n + 1 || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "payoff table line {} must have {} finite fields",
                    lineno + 2,
                    n + 1
                )));
            }
            rows.push(row);
        }
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut ax: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            ax.sort_by(|a, b| a.total_cmp(b));
            ax.dedup();
            axes.push(ax);
        }
        let len: usize = axes.iter().map(Vec::len).product();
        if rows.len() != len {
            return Err(Error::invalid(format!(
                "payoff table has {} rows but its axes span {len} grid points",
                rows.len()
            )));
        }
        let mut strides = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].len();
        }
        for (flat, row) in rows.iter().enumerate() {
            let mut rem = flat;
            for k in 0..n {
                let i = rem / strides[k];
                rem %= strides[k];
                if row[k] != axes[k][i] {
                    return Err(Error::invalid(format!(
                        "payoff table row {} is out of lexicographic grid order",
                        flat + 2
                    )));
                }
            }
        }
        let values = rows.iter().map(|r| r[n]).collect();
        Self::new(axes, values)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(f))
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = 0usize;
        let mut frac = vec![0.0; n];
        for k in 0..n {
            let ax = &self.axes[k];
            let v = x[k].clamp(ax[0], ax[ax.len() - 1]);
            let i = ax.partition_point(|a| *a <= v).saturating_sub(1).min(ax.len() - 2);
            frac[k] = (v - ax[i]) / (ax[i + 1] - ax[i]);
            base += i * self.strides[k];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut off = 0;
            for k in 0..n {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    off += self.strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[base + off];
            }
        }
        acc
    }
}

/// Closed axis-aligned box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid("region bounds must have equal positive length"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
            return Err(Error::invalid("region must be a nonempty finite box"));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Empirical sup and Lipschitz constants observed on a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PayoffCertificate {
    pub observed_sup: f64,
    pub observed_lipschitz: f64,
}

/// Radical inverse of `i` in base `b` (van der Corput).
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut acc = 0.0;
    while i > 0 {
        acc += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    acc
}

pub(crate) const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Point `i` of the Halton sequence in `[0, 1)^dim`.
pub(crate) fn halton(i: u64, dim: usize) -> Vec<f64> {
    (0..dim).map(|k| radical_inverse(i, PRIMES[k % PRIMES.len()])).collect()
}

/// Checks the declared bounds of `payoff` on a Halton sample of `region`.
///
/// The Lipschitz estimate takes difference quotients between consecutive
/// sample points and between each point and small axis-aligned perturbations
/// of it. Values must also be nonnegative.
pub fn certify_payoff(
    payoff: &dyn TerminalPayoff,
    region: &Region,
    samples: usize,
) -> Result<PayoffCertificate> {
    let n = payoff.dim();
    if region.dim() != n {
        return Err(Error::invalid(format!(
            "region has dimension {} but payoff has {n}",
            region.dim()
        )));
    }
    if samples < 2 {
        return Err(Error::invalid("certification needs at least 2 samples"));
    }
    let width: Vec<f64> = region.lo.iter().zip(&region.hi).map(|(l, h)| h - l).collect();
    let point = |i: usize| -> Vec<f64> {
        halton(i as u64 + 1, n)
            .iter()
            .enumerate()
            .map(|(k, u)| region.lo[k] + u * width[k])
            .collect()
    };

    let mut sup = 0.0f64;
    let mut sup_at = Vec::new();
    let mut lip = 0.0f64;
    let mut lip_at = Vec::new();
    let mut prev: Option<(Vec<f64>, f64)> = None;
    for i in 0..samples {
        let x = point(i);
        let gx = payoff.value(&x);
        if !(gx.is_finite() && gx >= 0.0) {
            return Err(Error::Certification {
                what: "payoff nonnegativity".into(),
                observed: gx,
                declared: 0.0,
                witness: vec![x],
            });
        }
        if gx > sup {
            sup = gx;
            sup_at = x.clone();
        }
        let mut quotient = |y: &[f64], gy: f64| {
            let dist = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist > 0.0 {
                let q = (gx - gy).abs() / dist;
                if q > lip {
                    lip = q;
                    lip_at = vec![x.clone(), y.to_vec()];
                }
            }
        };
        for k in 0..n {
            if width[k] > 0.0 {
                let mut y = x.clone();
                let step = 1e-4 * width[k];
                y[k] = if y[k] + step <= region.hi[k] { y[k] + step } else { y[k] - step };
                let gy = payoff.value(&y);
                quotient(&y, gy);
            }
        }
        if let Some((y, gy)) = &prev {
            quotient(y, *gy);
        }
        prev = Some((x, gx));
    }

    let exceeds = |obs: f64, decl: f64| obs > decl * (1.0 + 1e-9) + 1e-12;
    if exceeds(sup, payoff.sup_bound()) {
        return Err(Error::Certification {
            what: "sup bound".into(),
            observed: sup,
            declared: payoff.sup_bound(),
            witness: vec![sup_at],
        });
    }
    if exceeds(lip, payoff.lipschitz_bound()) {
        return Err(Error::Certification {
            what: "Lipschitz bound".into(),
            observed: lip,
            declared: payoff.lipschitz_bound(),
            witness: lip_at,
        });
    }
    Ok(PayoffCertificate {
        observed_sup: sup,
        observed_lipschitz: lip,
    })
}
