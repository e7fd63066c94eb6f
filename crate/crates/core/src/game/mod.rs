//! The stochastic game: coin-toss and SDE simulation under feedback
//! strategies, Monte Carlo estimation, and backward induction of the
//! bounded-control value functions.

mod discrete;
mod dpp;
mod sde;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::isaacs::{greedy_controls, ControlPoint, DirectionSet, Side};
use crate::market::MarketParams;
use crate::pde::PriceGrid;

pub use discrete::{simulate_discrete_game, DiscreteGameConfig};
pub use dpp::{dpp_margin, dpp_solve, dpp_step, GameValueTables};
pub use sde::{discounted_reward, mc_value, simulate_sde_paths, SimConfig};

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub seed: u64,
}

impl McEstimate {
    /// `stderr` is the (n-1)-normalized sample deviation over `√paths`.
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::invalid("a Monte Carlo estimate needs at least one path"));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Ok(Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            paths: n,
            seed,
        })
    }
}

/// Independent random stream for one path. Streams depend only on
/// `(seed, path)`, never on scheduling.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// A Markov strategy `(x, t) -> (θ, d)` with declared bound `m`.
pub trait FeedbackStrategy: Send + Sync {
    fn bound(&self) -> f64;
    fn control(&self, x: &[f64], t: f64) -> ControlPoint;
}

pub(crate) fn checked_control(
    strat: &dyn FeedbackStrategy,
    x: &[f64],
    t: f64,
) -> Result<ControlPoint> {
    let c = strat.control(x, t);
    c.check(x.len(), strat.bound())
        .map_err(|reason| Error::StrategyContract {
            x: x.to_vec(),
            t,
            reason,
        })?;
    Ok(c)
}

/// Plays the same action at every state.
#[derive(Clone, Debug)]
pub struct ConstantStrategy {
    action: ControlPoint,
    m: f64,
}

impl ConstantStrategy {
    pub fn new(action: ControlPoint, m: f64) -> Self {
        Self { action, m }
    }

    /// `d = 0` along `theta`: the strategy has no effect on the drift.
    pub fn passive(theta: Vec<f64>) -> Self {
        Self {
            action: ControlPoint { theta, d: 0.0 },
            m: 0.0,
        }
    }
}

impl FeedbackStrategy for ConstantStrategy {
    fn bound(&self) -> f64 {
        self.m
    }

    fn control(&self, _x: &[f64], _t: f64) -> ControlPoint {
        self.action.clone()
    }
}

/// Which player a greedy strategy controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Player {
    Maximizer,
    Minimizer,
}

/// Greedy feedback extracted from a solved surface: at `(x, t)` take the
/// central-difference derivatives at the nearest interior node of the
/// nearest slice and play this player's optimizing action.
#[derive(Clone, Debug)]
pub struct GreedyFeedback {
    surface: Arc<PriceGrid>,
    params: MarketParams,
    dirs: DirectionSet,
    m: f64,
    side: Side,
    player: Player,
}

impl GreedyFeedback {
    pub fn new(
        surface: Arc<PriceGrid>,
        params: MarketParams,
        dirs: DirectionSet,
        m: f64,
        side: Side,
        player: Player,
    ) -> Result<Self> {
        if surface.lattice().dim() != params.dim() || dirs.dim() != params.dim() {
            return Err(Error::invalid("surface, market and directions must share a dimension"));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::invalid(format!("m must be positive, got {m}")));
        }
        Ok(Self {
            surface,
            params,
            dirs,
            m,
            side,
            player,
        })
    }
}

impl FeedbackStrategy for GreedyFeedback {
    fn bound(&self) -> f64 {
        self.m
    }

    fn control(&self, x: &[f64], t: f64) -> ControlPoint {
        let lat = self.surface.lattice();
        let idx = lat.nearest_interior(x);
        let k = self.surface.slice_index(t);
        let input = self
            .surface
            .derivatives(&idx, k)
            .expect("nearest_interior returns an interior node");
        let g = greedy_controls(&input, self.m, &self.params, &self.dirs, self.side)
            .expect("dimensions checked at construction");
        match self.player {
            Player::Maximizer => g.maximizer,
            Player::Minimizer => g.minimizer,
        }
    }
}
