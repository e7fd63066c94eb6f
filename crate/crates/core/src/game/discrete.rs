use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{checked_control, path_rng, FeedbackStrategy, McEstimate};
use crate::error::{Error, Result};
use crate::market::{MarketParams, TerminalPayoff};

/// Coin-toss game with `steps_per_unit` tosses per unit of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteGameConfig {
    pub steps_per_unit: usize,
    pub start: Vec<f64>,
    pub t0: f64,
    pub seed: u64,
    pub paths: usize,
}

impl DiscreteGameConfig {
    fn validate(&self, params: &MarketParams) -> Result<usize> {
        if self.steps_per_unit == 0 {
            return Err(Error::invalid("steps per unit time must be at least 1"));
        }
        if self.paths == 0 {
            return Err(Error::invalid("paths must be at least 1"));
        }
        if self.start.len() != params.dim() {
            return Err(Error::invalid("start point dimension does not match the market"));
        }
        if !(self.t0 >= 0.0 && self.t0 < params.horizon()) {
            return Err(Error::invalid(format!(
                "t0 must lie in [0, {}), got {}",
                params.horizon(),
                self.t0
            )));
        }
        let steps = ((params.horizon() - self.t0) * self.steps_per_unit as f64).round() as usize;
        Ok(steps.max(1))
    }
}

/// Runs the coin-toss recursion
///
/// ```text
/// X_i += μ_i/N + (2/√N) σ_i ξ_i + 2σ_i [ (θ⁺_i - θ⁻_i)/2 · ξ_{n+1} + (θ⁺_i + θ⁻_i)/2 ]
/// ```
///
/// with `θ^± = (1/√N) · min(d^±/√N, 1) · θ^±_feedback` and reports the
/// discounted terminal payoff (plus the running cost, if configured).
pub fn simulate_discrete_game(
    cfg: &DiscreteGameConfig,
    strat_plus: &dyn FeedbackStrategy,
    strat_minus: &dyn FeedbackStrategy,
    params: &MarketParams,
    payoff: &dyn TerminalPayoff,
) -> Result<McEstimate> {
    let steps = cfg.validate(params)?;
    let n = params.dim();
    let big_n = cfg.steps_per_unit as f64;
    let sqrt_n = big_n.sqrt();
    let dt = (params.horizon() - cfg.t0) / steps as f64;
    let sigma = params.sigma();
    let mu = params.mu();
    let r = params.rate();
    let horizon_disc = (-r * (params.horizon() - cfg.t0)).exp();

    let samples: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path);
            let mut x = cfg.start.clone();
            let mut running = 0.0;
            for j in 0..steps {
                let t = cfg.t0 + j as f64 * dt;
                let cp = checked_control(strat_plus, &x, t)?;
                let cm = checked_control(strat_minus, &x, t)?;
                let sp = (cp.d / sqrt_n).min(1.0) / sqrt_n;
                let sm = (cm.d / sqrt_n).min(1.0) / sqrt_n;
                if let Some(rc) = params.running_cost() {
                    running += (-r * (t - cfg.t0)).exp() * rc.eval(&x, t) * dt;
                }
                let shared = if rng.random::<bool>() { 1.0 } else { -1.0 };
                for i in 0..n {
                    let xi = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let tp = sp * cp.theta[i];
                    let tm = sm * cm.theta[i];
                    x[i] += mu[i] / big_n
                        + 2.0 / sqrt_n * sigma[i] * xi
                        + 2.0 * sigma[i] * (0.5 * (tp - tm) * shared + 0.5 * (tp + tm));
                }
            }
            Ok(horizon_disc * payoff.value(&x) + running)
        })
        .collect::<Result<_>>()?;
    McEstimate::from_samples(&samples, cfg.seed)
}
