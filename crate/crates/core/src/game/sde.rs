use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{checked_control, path_rng, FeedbackStrategy, McEstimate};
use crate::error::{Error, Result};
use crate::market::{MarketParams, TerminalPayoff};

/// Euler–Maruyama run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub start: Vec<f64>,
    pub t0: f64,
    pub nt_sim: usize,
    pub seed: u64,
    pub paths: usize,
}

impl SimConfig {
    fn validate(&self, params: &MarketParams) -> Result<()> {
        if self.nt_sim == 0 {
            return Err(Error::invalid("nt_sim must be at least 1"));
        }
        if self.paths == 0 {
            return Err(Error::invalid("paths must be at least 1"));
        }
        if self.start.len() != params.dim() {
            return Err(Error::invalid("start point dimension does not match the market"));
        }
        if !(self.t0 >= 0.0 && self.t0 <= params.horizon()) {
            return Err(Error::invalid(format!(
                "t0 must lie in [0, {}], got {}",
                params.horizon(),
                self.t0
            )));
        }
        Ok(())
    }
}

/// One trajectory: terminal state and the discounted running-cost sum.
fn run_path(
    cfg: &SimConfig,
    path: usize,
    strat_plus: &dyn FeedbackStrategy,
    strat_minus: &dyn FeedbackStrategy,
    params: &MarketParams,
) -> Result<(Vec<f64>, f64)> {
    let n = params.dim();
    let dt = (params.horizon() - cfg.t0) / cfg.nt_sim as f64;
    let sq = dt.sqrt();
    let sigma = params.sigma();
    let mu = params.mu();
    let r = params.rate();
    let mut rng = path_rng(cfg.seed, path);
    let mut x = cfg.start.clone();
    let mut running = 0.0;
    if dt == 0.0 {
        return Ok((x, running));
    }
    let mut z = vec![0.0; n + 1];
    for j in 0..cfg.nt_sim {
        let t = cfg.t0 + j as f64 * dt;
        let cp = checked_control(strat_plus, &x, t)?;
        let cm = checked_control(strat_minus, &x, t)?;
        if let Some(rc) = params.running_cost() {
            running += (-r * (t - cfg.t0)).exp() * rc.eval(&x, t) * dt;
        }
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let speed = cp.d + cm.d;
        for i in 0..n {
            let drift = mu[i] + speed * (cp.theta[i] + cm.theta[i]);
            x[i] += drift * dt
                + sigma[i] * sq * z[i]
                + sigma[i] * (cp.theta[i] - cm.theta[i]) * sq * z[n];
        }
    }
    Ok((x, running))
}

/// Terminal states of `paths` Euler–Maruyama trajectories of
///
/// ```text
/// dX_i = (μ_i + (d⁺+d⁻)(θ⁺_i+θ⁻_i)) dt + σ_i dW_i + σ_i (θ⁺_i-θ⁻_i) dW_{n+1}
/// ```
///
/// with controls evaluated at the pre-step state.
pub fn simulate_sde_paths(
    cfg: &SimConfig,
    strat_plus: &dyn FeedbackStrategy,
    strat_minus: &dyn FeedbackStrategy,
    params: &MarketParams,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate(params)?;
    (0..cfg.paths)
        .into_par_iter()
        .map(|p| run_path(cfg, p, strat_plus, strat_minus, params).map(|(x, _)| x))
        .collect()
}

/// `e^{-r(T-t0)} g(X_T)` plus `Σ_k e^{-r(s_k - t0)} h(X(s_k), s_k) dt` over
/// the left-endpoint samples `(X(s_k), s_k)`.
pub fn discounted_reward(
    terminal: &[f64],
    t0: f64,
    params: &MarketParams,
    payoff: &dyn TerminalPayoff,
    running: &[(Vec<f64>, f64)],
    dt: f64,
) -> f64 {
    let r = params.rate();
    let mut v = (-r * (params.horizon() - t0)).exp() * payoff.value(terminal);
    if let Some(rc) = params.running_cost() {
        for (x, s) in running {
            v += (-r * (s - t0)).exp() * rc.eval(x, *s) * dt;
        }
    }
    v
}

/// Monte Carlo estimate of the discounted reward under a strategy pair.
pub fn mc_value(
    payoff: &dyn TerminalPayoff,
    params: &MarketParams,
    strat_plus: &dyn FeedbackStrategy,
    strat_minus: &dyn FeedbackStrategy,
    cfg: &SimConfig,
) -> Result<McEstimate> {
    cfg.validate(params)?;
    let disc = (-params.rate() * (params.horizon() - cfg.t0)).exp();
    let samples: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|p| {
            let (x, running) = run_path(cfg, p, strat_plus, strat_minus, params)?;
            Ok(disc * payoff.value(&x) + running)
        })
        .collect::<Result<_>>()?;
    McEstimate::from_samples(&samples, cfg.seed)
}
