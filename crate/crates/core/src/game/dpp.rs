use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::isaacs::{DirectionSet, Side};
use crate::lattice::Lattice;
use crate::market::{MarketParams, TerminalPayoff};
use crate::pde::{GridSpec, PriceGrid};

/// Backward-induction approximations of the lower and upper values.
#[derive(Clone, Debug)]
pub struct GameValueTables {
    pub u_plus: Option<PriceGrid>,
    pub u_minus: Option<PriceGrid>,
    pub m: f64,
}

impl GameValueTables {
    pub fn side(&self, side: Side) -> Option<&PriceGrid> {
        match side {
            Side::Plus => self.u_plus.as_ref(),
            Side::Minus => self.u_minus.as_ref(),
        }
    }
}

/// Largest one-step displacement along each axis,
/// `(|μ_i| + 4m) dt + 3 σ_i √dt`.
pub fn dpp_margin(params: &MarketParams, m: f64, dt: f64) -> Vec<f64> {
    params
        .mu()
        .iter()
        .zip(params.sigma())
        .map(|(mu, s)| (mu.abs() + 4.0 * m) * dt + 3.0 * s * dt.sqrt())
        .collect()
}

fn check_margin(lattice: &Lattice, params: &MarketParams, m: f64, dt: f64) -> Result<()> {
    for (i, d) in dpp_margin(params, m, dt).iter().enumerate() {
        let half = 0.5 * (lattice.hi()[i] - lattice.lo()[i]);
        if *d > half {
            return Err(Error::Precondition(format!(
                "one-step displacement {d:e} on axis {i} exceeds the half-width {half:e} of the grid"
            )));
        }
    }
    Ok(())
}

/// Candidate actions `dirs × {0, m}`.
struct Actions {
    n: usize,
    theta: Vec<f64>,
    d: Vec<f64>,
}

impl Actions {
    fn new(dirs: &DirectionSet, m: f64) -> Self {
        let n = dirs.dim();
        let mut theta = Vec::with_capacity(2 * n * dirs.count());
        let mut d = Vec::with_capacity(2 * dirs.count());
        for dir in dirs.iter() {
            for len in [0.0, m] {
                theta.extend_from_slice(dir);
                d.push(len);
            }
        }
        Self { n, theta, d }
    }

    fn len(&self) -> usize {
        self.d.len()
    }

    fn theta(&self, k: usize) -> &[f64] {
        &self.theta[k * self.n..(k + 1) * self.n]
    }
}

struct StepContext<'a> {
    lattice: &'a Lattice,
    next: &'a [f64],
    t_next: f64,
    dt: f64,
    params: &'a MarketParams,
    payoff: &'a dyn TerminalPayoff,
    actions: Actions,
}

impl StepContext<'_> {
    fn lookup(&self, y: &[f64]) -> f64 {
        match self.lattice.interpolate(self.next, y) {
            Some(v) => v,
            None => self.params.frozen_value(self.payoff, y, self.t_next),
        }
    }

    /// `2^{-(n+1)} Σ_ξ ũ(x + Δx(ξ))` for the action pair `(a, b)` of the
    /// (+) and (-) players.
    fn expectation(&self, x: &[f64], a: usize, b: usize, y: &mut [f64]) -> f64 {
        let n = x.len();
        let (tp, tm) = (self.actions.theta(a), self.actions.theta(b));
        let speed = self.actions.d[a] + self.actions.d[b];
        let sq = self.dt.sqrt();
        let sigma = self.params.sigma();
        let mu = self.params.mu();
        let scenarios = 1usize << (n + 1);
        let mut acc = 0.0;
        for s in 0..scenarios {
            let shared = if s >> n & 1 == 1 { 1.0 } else { -1.0 };
            for i in 0..n {
                let xi = if s >> i & 1 == 1 { 1.0 } else { -1.0 };
                y[i] = x[i]
                    + (mu[i] + speed * (tp[i] + tm[i])) * self.dt
                    + sigma[i] * xi * sq
                    + sigma[i] * (tp[i] - tm[i]) * shared * sq;
            }
            acc += self.lookup(y);
        }
        acc / scenarios as f64
    }

    /// `opt₁ opt₂ E[ũ]`; `Minus`: sup over (+) of inf over (-), `Plus`: inf
    /// over (-) of sup over (+). Ties keep the first candidate.
    fn node_value(&self, x: &[f64], side: Side) -> f64 {
        let k = self.actions.len();
        let mut y = vec![0.0; x.len()];
        let mut best = match side {
            Side::Minus => f64::NEG_INFINITY,
            Side::Plus => f64::INFINITY,
        };
        for outer in 0..k {
            let mut inner_best = match side {
                Side::Minus => f64::INFINITY,
                Side::Plus => f64::NEG_INFINITY,
            };
            let mut pruned = false;
            for inner in 0..k {
                match side {
                    Side::Minus => {
                        let v = self.expectation(x, outer, inner, &mut y);
                        if v < inner_best {
                            inner_best = v;
                            if inner_best <= best {
                                pruned = true;
                                break;
                            }
                        }
                    }
                    Side::Plus => {
                        let v = self.expectation(x, inner, outer, &mut y);
                        if v > inner_best {
                            inner_best = v;
                            if inner_best >= best {
                                pruned = true;
                                break;
                            }
                        }
                    }
                }
            }
            if pruned {
                continue;
            }
            best = match side {
                Side::Minus => best.max(inner_best),
                Side::Plus => best.min(inner_best),
            };
        }
        best
    }
}

/// One backward-induction step from the slice at `t + dt` to `t`:
/// `U(x, t) = e^{-r dt} opt₁ opt₂ E[ũ(x + Δx, t + dt)] + h(x, t) dt`, the
/// expectation over the `2^{n+1}` coin outcomes and `ũ` the multilinear
/// interpolant (discounted payoff outside the box).
#[allow(clippy::too_many_arguments)]
pub fn dpp_step(
    lattice: &Lattice,
    next: &[f64],
    t: f64,
    dt: f64,
    m: f64,
    params: &MarketParams,
    payoff: &dyn TerminalPayoff,
    side: Side,
    dirs: &DirectionSet,
) -> Result<Vec<f64>> {
    if next.len() != lattice.len() || dirs.dim() != lattice.dim() || params.dim() != lattice.dim() {
        return Err(Error::invalid("slice, directions, market and lattice dimensions differ"));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid(format!("m must be positive, got {m}")));
    }
    check_margin(lattice, params, m, dt)?;
    let ctx = StepContext {
        lattice,
        next,
        t_next: t + dt,
        dt,
        params,
        payoff,
        actions: Actions::new(dirs, m),
    };
    let disc = (-params.rate() * dt).exp();
    Ok((0..lattice.len())
        .into_par_iter()
        .map(|k| {
            let x = lattice.coords(k);
            let mut v = disc * ctx.node_value(&x, side);
            if let Some(rc) = params.running_cost() {
                v += rc.eval(&x, t) * dt;
            }
            v
        })
        .collect())
}

/// Backward induction from `U(·, T) = g` over `grid.nt` steps.
pub fn dpp_solve(
    payoff: &dyn TerminalPayoff,
    params: &MarketParams,
    m: f64,
    grid: &GridSpec,
    dirs: &DirectionSet,
    side: Side,
) -> Result<PriceGrid> {
    let nt = grid
        .nt
        .ok_or_else(|| Error::invalid("backward induction needs an explicit number of steps"))?;
    if nt == 0 {
        return Err(Error::invalid("nt must be positive"));
    }
    let lattice = grid.lattice()?;
    let dt = params.horizon() / nt as f64;
    check_margin(&lattice, params, m, dt)?;
    let mut slices = vec![Vec::new(); nt + 1];
    slices[nt] = (0..lattice.len())
        .map(|k| payoff.value(&lattice.coords(k)))
        .collect();
    for k in (0..nt).rev() {
        let t = k as f64 * dt;
        slices[k] = dpp_step(&lattice, &slices[k + 1], t, dt, m, params, payoff, side, dirs)?;
    }
    PriceGrid::from_slices(lattice, params.horizon(), slices)
}
