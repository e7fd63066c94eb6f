//! JSON run configuration: parsing, defaulting and validation.
//!
//! Every omitted field is filled in and listed in [`RunConfig::defaulted`];
//! the resolved tree is what gets echoed into output metadata and hashed
//! into the config digest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::isaacs::DirectionSet;
use crate::lattice::MAX_DIM;
use crate::market::{
    certify_payoff, MarketParams, Payoff, PayoffTable, Region, RunningCost, TerminalPayoff,
    WEIGHT_SUM_TOL,
};
use crate::pde::{Boundary, GridSpec, Mode, SolverConfig};

/// Sample count used to certify the payoff on the grid box at load time.
pub const CERTIFY_SAMPLES: usize = 4096;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    market: RawMarket,
    payoff: RawPayoff,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    game: RawGame,
    #[serde(default)]
    outputs: RawOutputs,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarket {
    mu: Option<Vec<f64>>,
    sigma: Vec<f64>,
    r: Option<f64>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    running_cost: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPayoff {
    kind: PayoffKind,
    weights: Option<Vec<f64>>,
    strike: Option<f64>,
    value: Option<f64>,
    path: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    nx: Option<Vec<usize>>,
    nt: Option<usize>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    mode: Option<Mode>,
    m: Option<f64>,
    eps_grad: Option<f64>,
    n_dirs: Option<usize>,
    cfl: Option<f64>,
    boundary: Option<Boundary>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    m: Option<f64>,
    n_dirs: Option<usize>,
    #[serde(rename = "N")]
    steps_per_unit: Option<usize>,
    paths: Option<usize>,
    seed: Option<u64>,
    nt_dpp: Option<usize>,
    nt_sim: Option<usize>,
    t0: Option<f64>,
    points: Option<Vec<Vec<f64>>>,
    engine: Option<Engine>,
    strategy: Option<StrategyKind>,
    ladder: Option<Vec<f64>>,
    trials: Option<usize>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    surface_path: Option<String>,
    report_path: Option<String>,
    value_table_path: Option<String>,
    operators_path: Option<String>,
    compare_path: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    BasketPut,
    Tabulated,
    Constant,
}

/// Dynamics used by `simulate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Sde,
    Discrete,
}

/// Strategy pair used by `simulate` and `compare`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Greedy feedback from the bounded-minus surface at `game.m`.
    Greedy,
    /// `θ⁺ = e_1`, `θ⁻ = -e_1`, `d = 0`.
    Passive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarketSpec {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub r: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub running_cost: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    BasketPut { weights: Vec<f64>, strike: f64 },
    Tabulated { path: PathBuf },
    Constant { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameSpec {
    pub m: f64,
    pub n_dirs: usize,
    #[serde(rename = "N")]
    pub steps_per_unit: usize,
    pub paths: usize,
    pub seed: u64,
    pub nt_dpp: usize,
    pub nt_sim: usize,
    pub t0: f64,
    pub points: Vec<Vec<f64>>,
    pub engine: Engine,
    pub strategy: StrategyKind,
    pub ladder: Vec<f64>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSpec {
    pub surface_path: String,
    pub report_path: String,
    pub value_table_path: String,
    pub operators_path: String,
    pub compare_path: String,
}

/// The fully resolved configuration tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub market: MarketSpec,
    pub payoff: PayoffSpec,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub game: GameSpec,
    pub outputs: OutputSpec,
}

/// A validated configuration with its built domain objects.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub resolved: ResolvedConfig,
    /// Dotted paths of every field filled in by a default.
    pub defaulted: Vec<String>,
    pub params: MarketParams,
    pub payoff: Payoff,
}

fn field(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

struct Defaults(Vec<String>);

impl Defaults {
    fn take<T>(&mut self, v: Option<T>, path: &str, default: impl FnOnce() -> T) -> T {
        match v {
            Some(v) => v,
            None => {
                self.0.push(path.to_string());
                default()
            }
        }
    }
}

fn positive(path: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field(path, format!("must be positive, got {v}")))
    }
}

fn at_least_one(path: &str, v: usize) -> Result<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(field(path, "must be at least 1"))
    }
}

fn check_len<T>(path: &str, v: &[T], n: usize) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(field(path, format!("expected {n} entries, got {}", v.len())))
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_str_in(&text, base)
    }

    /// Parses `text`; relative table paths resolve against `base_dir`.
    pub fn from_str_in(text: &str, base_dir: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("{path}: {inner}"))
            }
        })?;
        resolve(raw, base_dir)
    }

    /// Replaces the game seed (the `--seed` flag).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.resolved.game.seed = seed;
        self.defaulted.retain(|p| p != "game.seed");
        self
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// SHA-256 over the canonical JSON of the resolved tree.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.resolved).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.resolved.grid
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.resolved.solver
    }

    pub fn game(&self) -> &GameSpec {
        &self.resolved.game
    }

    /// Grid spec for backward induction: spatial box as configured,
    /// `game.nt_dpp` steps.
    pub fn dpp_grid(&self) -> GridSpec {
        GridSpec {
            nt: Some(self.resolved.game.nt_dpp),
            ..self.resolved.grid.clone()
        }
    }
}

fn default_nx(n: usize) -> usize {
    match n {
        1 => 401,
        2 => 101,
        3 => 41,
        _ => 21,
    }
}

fn resolve(raw: RawConfig, base_dir: &Path) -> Result<RunConfig> {
    let mut d = Defaults(Vec::new());

    // market
    let m = raw.market;
    let n = m.sigma.len();
    if n == 0 {
        return Err(field("market.sigma", "must be nonempty"));
    }
    if n > MAX_DIM {
        return Err(field("market.sigma", format!("at most {MAX_DIM} assets are supported")));
    }
    for (i, s) in m.sigma.iter().enumerate() {
        if !(s.is_finite() && *s > 0.0) {
            return Err(field(&format!("market.sigma[{i}]"), format!("must be strictly positive, got {s}")));
        }
    }
    let mu = d.take(m.mu, "market.mu", || vec![0.0; n]);
    check_len("market.mu", &mu, n)?;
    for (i, v) in mu.iter().enumerate() {
        if !v.is_finite() {
            return Err(field(&format!("market.mu[{i}]"), "must be finite"));
        }
    }
    let r = d.take(m.r, "market.r", || 0.0);
    if !(r.is_finite() && r >= 0.0) {
        return Err(field("market.r", format!("must be >= 0, got {r}")));
    }
    let horizon = positive("market.T", d.take(m.horizon, "market.T", || 1.0))?;
    let mut params = MarketParams::new(mu.clone(), m.sigma.clone(), r, horizon)
        .map_err(|e| field("market", e))?;
    if let Some(h) = m.running_cost {
        let rc = RunningCost::constant(h).map_err(|e| field("market.running_cost", e))?;
        params = params.with_running_cost(rc);
    }
    let market = MarketSpec {
        mu,
        sigma: m.sigma,
        r,
        horizon,
        running_cost: m.running_cost,
    };

    // payoff
    let p = raw.payoff;
    let unexpected = |name: &str, present: bool| -> Result<()> {
        if present {
            Err(field(&format!("payoff.{name}"), "not used by this payoff kind"))
        } else {
            Ok(())
        }
    };
    let (payoff_spec, payoff, center) = match p.kind {
        PayoffKind::BasketPut => {
            unexpected("value", p.value.is_some())?;
            unexpected("path", p.path.is_some())?;
            let weights = d.take(p.weights, "payoff.weights", || vec![1.0 / n as f64; n]);
            check_len("payoff.weights", &weights, n)?;
            for (i, w) in weights.iter().enumerate() {
                if !(w.is_finite() && *w >= 0.0) {
                    return Err(field(&format!("payoff.weights[{i}]"), format!("must be nonnegative, got {w}")));
                }
            }
            let sum: f64 = weights.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(field("payoff.weights", format!("must sum to 1, got {sum}")));
            }
            let strike = p.strike.ok_or_else(|| field("payoff.strike", "is required for basket_put"))?;
            let strike = positive("payoff.strike", strike)?;
            let payoff = Payoff::basket_put(weights.clone(), strike).map_err(|e| field("payoff", e))?;
            (
                PayoffSpec::BasketPut { weights, strike },
                payoff,
                vec![strike.ln(); n],
            )
        }
        PayoffKind::Constant => {
            unexpected("weights", p.weights.is_some())?;
            unexpected("strike", p.strike.is_some())?;
            unexpected("path", p.path.is_some())?;
            let value = p.value.ok_or_else(|| field("payoff.value", "is required for constant"))?;
            let payoff = Payoff::constant(n, value).map_err(|e| field("payoff.value", e))?;
            (PayoffSpec::Constant { value }, payoff, vec![0.0; n])
        }
        PayoffKind::Tabulated => {
            unexpected("weights", p.weights.is_some())?;
            unexpected("strike", p.strike.is_some())?;
            unexpected("value", p.value.is_some())?;
            let rel = p.path.ok_or_else(|| field("payoff.path", "is required for tabulated"))?;
            let full = if rel.is_absolute() { rel.clone() } else { base_dir.join(&rel) };
            let table = PayoffTable::from_path(&full).map_err(|e| field("payoff.path", e))?;
            if table.dim() != n {
                return Err(field(
                    "payoff.path",
                    format!("table has dimension {} but the market has {n}", table.dim()),
                ));
            }
            let center = table
                .axes()
                .iter()
                .map(|ax| 0.5 * (ax[0] + ax[ax.len() - 1]))
                .collect();
            (PayoffSpec::Tabulated { path: rel }, Payoff::Tabulated(table), center)
        }
    };

    // grid
    let g = raw.grid;
    let half = GridSpec::truncation_half_width(&params);
    let lo = d.take(g.lo, "grid.lo", || center.iter().zip(&half).map(|(c, w)| c - w).collect());
    let hi = d.take(g.hi, "grid.hi", || center.iter().zip(&half).map(|(c, w)| c + w).collect());
    let nx = d.take(g.nx, "grid.nx", || vec![default_nx(n); n]);
    check_len("grid.lo", &lo, n)?;
    check_len("grid.hi", &hi, n)?;
    check_len("grid.nx", &nx, n)?;
    for i in 0..n {
        if !(lo[i].is_finite() && hi[i].is_finite() && hi[i] > lo[i]) {
            return Err(field(&format!("grid.hi[{i}]"), format!("must exceed grid.lo[{i}]")));
        }
        if nx[i] < 3 {
            return Err(field(&format!("grid.nx[{i}]"), format!("must be at least 3, got {}", nx[i])));
        }
    }
    if let Some(nt) = g.nt {
        at_least_one("grid.nt", nt)?;
    } else {
        d.0.push("grid.nt".into());
    }
    let grid = GridSpec::new(lo, hi, nx, g.nt);

    // solver
    let s = raw.solver;
    let solver = SolverConfig {
        mode: d.take(s.mode, "solver.mode", || Mode::LimitF),
        m: positive("solver.m", d.take(s.m, "solver.m", || SolverConfig::DEFAULT_M))?,
        eps_grad: positive(
            "solver.eps_grad",
            d.take(s.eps_grad, "solver.eps_grad", || 1e-8 * params.max_sigma()),
        )?,
        n_dirs: at_least_one(
            "solver.n_dirs",
            d.take(s.n_dirs, "solver.n_dirs", || DirectionSet::default_count(n)),
        )?,
        cfl: d.take(s.cfl, "solver.cfl", || SolverConfig::DEFAULT_CFL),
        boundary: d.take(s.boundary, "solver.boundary", Boundary::default),
    };
    if !(solver.cfl > 0.0 && solver.cfl <= 1.0) {
        return Err(field("solver.cfl", format!("must lie in (0, 1], got {}", solver.cfl)));
    }

    // game
    let gm = raw.game;
    let game = GameSpec {
        m: positive("game.m", d.take(gm.m, "game.m", || SolverConfig::DEFAULT_M))?,
        n_dirs: at_least_one(
            "game.n_dirs",
            d.take(gm.n_dirs, "game.n_dirs", || DirectionSet::default_count(n)),
        )?,
        steps_per_unit: at_least_one("game.N", d.take(gm.steps_per_unit, "game.N", || 400))?,
        paths: at_least_one("game.paths", d.take(gm.paths, "game.paths", || 10_000))?,
        seed: d.take(gm.seed, "game.seed", || 0),
        nt_dpp: at_least_one("game.nt_dpp", d.take(gm.nt_dpp, "game.nt_dpp", || 100))?,
        nt_sim: at_least_one("game.nt_sim", d.take(gm.nt_sim, "game.nt_sim", || 200))?,
        t0: d.take(gm.t0, "game.t0", || 0.0),
        points: d.take(gm.points, "game.points", || vec![center.clone()]),
        engine: d.take(gm.engine, "game.engine", || Engine::Sde),
        strategy: d.take(gm.strategy, "game.strategy", || StrategyKind::Greedy),
        ladder: d.take(gm.ladder, "game.ladder", || vec![1.0, 10.0, 100.0, 1000.0]),
        trials: at_least_one("game.trials", d.take(gm.trials, "game.trials", || 100))?,
    };
    if !(game.t0 >= 0.0 && game.t0 < horizon) {
        return Err(field("game.t0", format!("must lie in [0, {horizon}), got {}", game.t0)));
    }
    if game.points.is_empty() {
        return Err(field("game.points", "must list at least one point"));
    }
    for (k, pt) in game.points.iter().enumerate() {
        check_len(&format!("game.points[{k}]"), pt, n)?;
        if pt.iter().any(|v| !v.is_finite()) {
            return Err(field(&format!("game.points[{k}]"), "must be finite"));
        }
    }
    for (k, v) in game.ladder.iter().enumerate() {
        positive(&format!("game.ladder[{k}]"), *v)?;
    }

    // outputs
    let o = raw.outputs;
    let outputs = OutputSpec {
        surface_path: d.take(o.surface_path, "outputs.surface_path", || "surface.csv".into()),
        report_path: d.take(o.report_path, "outputs.report_path", || "report.json".into()),
        value_table_path: d.take(o.value_table_path, "outputs.value_table_path", || {
            "value_table.csv".into()
        }),
        operators_path: d.take(o.operators_path, "outputs.operators_path", || "operators.csv".into()),
        compare_path: d.take(o.compare_path, "outputs.compare_path", || "compare.json".into()),
    };

    let region = Region::new(grid.lo.clone(), grid.hi.clone())?;
    certify_payoff(&payoff, &region, CERTIFY_SAMPLES)?;
    debug_assert_eq!(payoff.dim(), n);

    Ok(RunConfig {
        resolved: ResolvedConfig {
            market,
            payoff: payoff_spec,
            grid,
            solver,
            game,
            outputs,
        },
        defaulted: d.0,
        params,
        payoff,
    })
}
