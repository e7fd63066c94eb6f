//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Engine, RunConfig, StrategyKind};
use crate::error::{Error, Result};
use crate::game::{
    dpp_margin, dpp_solve, mc_value, simulate_discrete_game, ConstantStrategy,
    DiscreteGameConfig, FeedbackStrategy, GreedyFeedback, McEstimate, Player, SimConfig,
};
use crate::io::{self, fmt_num, McReport};
use crate::isaacs::{operator_convergence, sample_normalized_input, DirectionSet, Side};
use crate::market::TerminalPayoff;
use crate::pde::{a_design, solve_terminal_value, Mode, PriceGrid, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "tugwar", version, about = "Tug-of-war option pricing engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides `game.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the terminal value problem and write the surface.
    Price,
    /// Backward induction of the lower and upper game values.
    GameValue,
    /// Monte Carlo value of a strategy pair.
    Simulate,
    /// Table of |H_m^± + F| over an m-ladder.
    CheckOperators,
    /// PDE, backward-induction and Monte Carlo values side by side.
    Compare,
}

/// Loads the configuration and runs the command on a dedicated pool.
pub fn run(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_command(cli.command, &cfg, &cli.out))
}

pub fn run_command(command: Command, cfg: &RunConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    match command {
        Command::Price => price(cfg, out),
        Command::GameValue => game_value(cfg, out),
        Command::Simulate => simulate(cfg, out),
        Command::CheckOperators => check_operators(cfg, out),
        Command::Compare => compare(cfg, out),
    }
}

type StrategyPair = (Box<dyn FeedbackStrategy>, Box<dyn FeedbackStrategy>, Option<Arc<PriceGrid>>);

fn base_meta(cfg: &RunConfig, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("config_digest".into(), json!(cfg.digest()));
    m.insert("config".into(), serde_json::to_value(&cfg.resolved).expect("serializable"));
    m.insert("defaulted".into(), json!(cfg.defaulted));
    m
}

fn write_csv(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = io::create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn solve_mode(cfg: &RunConfig, mode: Mode, m: f64) -> Result<(PriceGrid, Value)> {
    let solver = SolverConfig {
        mode,
        m,
        ..cfg.solver().clone()
    };
    let cfl = cfg.grid().resolve_time(&cfg.params, solver.cfl)?;
    let grid = solve_terminal_value(&cfg.payoff, &cfg.params, &solver, cfg.grid())?;
    Ok((grid, serde_json::to_value(cfl).expect("serializable")))
}

fn values_at(grid: &PriceGrid, points: &[Vec<f64>], t: f64) -> Vec<Option<f64>> {
    points.iter().map(|x| grid.value_at(x, t)).collect()
}

fn price(cfg: &RunConfig, out: &Path) -> Result<()> {
    let solver = cfg.solver();
    let (grid, cfl) = solve_mode(cfg, solver.mode, solver.m)?;
    let path = out.join(&cfg.resolved.outputs.surface_path);
    write_csv(&path, |w| io::write_surface_csv(w, &grid))?;

    let game = cfg.game();
    let vals = values_at(&grid, &game.points, game.t0);
    let mut meta = base_meta(cfg, "price");
    meta.insert("cfl".into(), cfl);
    meta.insert(
        "a_design".into(),
        json!(a_design(&cfg.params, cfg.payoff.lipschitz_bound().max(cfg.payoff.sup_bound()))),
    );
    meta.insert("lipschitz_bound".into(), json!(cfg.payoff.lipschitz_bound()));
    meta.insert("sup_bound".into(), json!(cfg.payoff.sup_bound()));
    meta.insert("points".into(), json!(game.points));
    meta.insert("t0".into(), json!(game.t0));
    meta.insert("values".into(), json!(vals));
    io::write_json(&io::sidecar_path(&path), &meta)?;

    for (x, v) in game.points.iter().zip(&vals) {
        println!("u({x:?}, {}) = {}", game.t0, v.map(fmt_num).unwrap_or_else(|| "outside grid".into()));
    }
    Ok(())
}

fn dpp_tables(cfg: &RunConfig) -> Result<(PriceGrid, PriceGrid)> {
    let n = cfg.dim();
    let game = cfg.game();
    let dirs = DirectionSet::for_dim(n, game.n_dirs);
    let grid = cfg.dpp_grid();
    let minus = dpp_solve(&cfg.payoff, &cfg.params, game.m, &grid, &dirs, Side::Minus)?;
    let plus = dpp_solve(&cfg.payoff, &cfg.params, game.m, &grid, &dirs, Side::Plus)?;
    Ok((minus, plus))
}

fn ordering_violation(minus: &PriceGrid, plus: &PriceGrid) -> f64 {
    (0..=minus.nt())
        .flat_map(|k| minus.slice(k).iter().zip(plus.slice(k)).map(|(a, b)| a - b))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn game_value(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (minus, plus) = dpp_tables(cfg)?;
    let path = out.join(&cfg.resolved.outputs.value_table_path);
    write_csv(&path, |w| {
        io::write_value_table_csv(w, &[(Side::Minus, &minus), (Side::Plus, &plus)])
    })?;
    let game = cfg.game();
    let mut meta = base_meta(cfg, "game-value");
    meta.insert("m".into(), json!(game.m));
    meta.insert("nt".into(), json!(game.nt_dpp));
    meta.insert("dt".into(), json!(minus.dt()));
    meta.insert("margin".into(), json!(dpp_margin(&cfg.params, game.m, minus.dt())));
    meta.insert("points".into(), json!(game.points));
    meta.insert("u_minus".into(), json!(values_at(&minus, &game.points, game.t0)));
    meta.insert("u_plus".into(), json!(values_at(&plus, &game.points, game.t0)));
    meta.insert("max_ordering_violation".into(), json!(ordering_violation(&minus, &plus)));
    io::write_json(&io::sidecar_path(&path), &meta)?;
    println!(
        "u_minus <= u_plus violation: {}",
        fmt_num(ordering_violation(&minus, &plus))
    );
    Ok(())
}

/// Strategy pair for `simulate` and `compare`, with the surface the greedy
/// pair was extracted from.
fn strategies(
    cfg: &RunConfig,
) -> Result<StrategyPair> {
    let n = cfg.dim();
    match cfg.game().strategy {
        StrategyKind::Passive => {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            let neg: Vec<f64> = e.iter().map(|v| -v).collect();
            Ok((
                Box::new(ConstantStrategy::passive(e)),
                Box::new(ConstantStrategy::passive(neg)),
                None,
            ))
        }
        StrategyKind::Greedy => {
            let m = cfg.game().m;
            let (grid, _) = solve_mode(cfg, Mode::BoundedMinus, m)?;
            let surface = Arc::new(grid);
            let dirs = DirectionSet::for_dim(n, cfg.solver().n_dirs);
            let mk = |player| {
                GreedyFeedback::new(
                    surface.clone(),
                    cfg.params.clone(),
                    dirs.clone(),
                    m,
                    Side::Minus,
                    player,
                )
            };
            Ok((
                Box::new(mk(Player::Maximizer)?),
                Box::new(mk(Player::Minimizer)?),
                Some(surface),
            ))
        }
    }
}

fn run_mc(
    cfg: &RunConfig,
    start: &[f64],
    plus: &dyn FeedbackStrategy,
    minus: &dyn FeedbackStrategy,
) -> Result<McEstimate> {
    let game = cfg.game();
    match game.engine {
        Engine::Sde => mc_value(
            &cfg.payoff,
            &cfg.params,
            plus,
            minus,
            &SimConfig {
                start: start.to_vec(),
                t0: game.t0,
                nt_sim: game.nt_sim,
                seed: game.seed,
                paths: game.paths,
            },
        ),
        Engine::Discrete => simulate_discrete_game(
            &DiscreteGameConfig {
                steps_per_unit: game.steps_per_unit,
                start: start.to_vec(),
                t0: game.t0,
                seed: game.seed,
                paths: game.paths,
            },
            plus,
            minus,
            &cfg.params,
            &cfg.payoff,
        ),
    }
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let game = cfg.game();
    let (plus, minus, surface) = strategies(cfg)?;
    let start = &game.points[0];
    let est = run_mc(cfg, start, plus.as_ref(), minus.as_ref())?;
    let digest = cfg.digest();
    let pde_value = surface.as_ref().and_then(|s| s.value_at(start, game.t0));
    let report = McReport::new(
        &est,
        &digest,
        json!({
            "engine": game.engine,
            "strategy": game.strategy,
            "start": start,
            "t0": game.t0,
            "pde_value": pde_value,
        }),
    );
    io::write_json(&out.join(&cfg.resolved.outputs.report_path), &report)?;
    println!("mean = {} (stderr {})", fmt_num(est.mean), fmt_num(est.stderr));
    Ok(())
}

fn check_operators(cfg: &RunConfig, out: &Path) -> Result<()> {
    let n = cfg.dim();
    let game = cfg.game();
    let mut rng = ChaCha8Rng::seed_from_u64(game.seed);
    let inputs: Vec<_> = (0..game.trials).map(|_| sample_normalized_input(n, &mut rng)).collect();
    let dirs = DirectionSet::for_dim(n, game.n_dirs);
    let rows = operator_convergence(&inputs, &game.ladder, &cfg.params, &dirs)?;
    let path = out.join(&cfg.resolved.outputs.operators_path);
    write_csv(&path, |w| io::write_convergence_csv(w, &rows))?;

    let summary: Vec<Value> = game
        .ladder
        .iter()
        .map(|&m| {
            let (mut ep, mut em) = (0.0f64, 0.0f64);
            for r in rows.iter().filter(|r| r.m == m) {
                ep = ep.max(r.err_plus);
                em = em.max(r.err_minus);
            }
            println!("m = {m}: max |H+ + F| = {}, max |H- + F| = {}", fmt_num(ep), fmt_num(em));
            json!({"m": m, "max_err_plus": ep, "max_err_minus": em})
        })
        .collect();
    let mut meta = base_meta(cfg, "check-operators");
    meta.insert("n_dirs".into(), json!(dirs.count()));
    meta.insert("summary".into(), json!(summary));
    io::write_json(&io::sidecar_path(&path), &meta)
}

fn compare(cfg: &RunConfig, out: &Path) -> Result<()> {
    let game = cfg.game();
    let m = game.m;
    let (limit, _) = solve_mode(cfg, Mode::LimitF, m)?;
    let (pde_minus, _) = solve_mode(cfg, Mode::BoundedMinus, m)?;
    let (pde_plus, _) = solve_mode(cfg, Mode::BoundedPlus, m)?;
    let (dpp_minus, dpp_plus) = dpp_tables(cfg)?;
    let (plus, minus, _) = strategies(cfg)?;

    let mut points = Vec::new();
    for x in &game.points {
        let at = |g: &PriceGrid| g.value_at(x, game.t0);
        let (lf, pm, pp, dm, dp) = (at(&limit), at(&pde_minus), at(&pde_plus), at(&dpp_minus), at(&dpp_plus));
        let est = run_mc(cfg, x, plus.as_ref(), minus.as_ref())?;
        let gap = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| (a - b).abs());
        points.push(json!({
            "x": x,
            "pde_limit": lf,
            "pde_minus": pm,
            "pde_plus": pp,
            "dpp_minus": dm,
            "dpp_plus": dp,
            "mc": {"mean": est.mean, "stderr": est.stderr, "paths": est.paths},
            "gaps": {
                "pde_plus_minus": gap(pp, pm),
                "dpp_plus_minus": gap(dp, dm),
                "dpp_vs_pde_minus": gap(dm, pm),
                "dpp_vs_pde_plus": gap(dp, pp),
                "pde_minus_vs_limit": gap(pm, lf),
                "mc_vs_pde_minus": pm.map(|v| (est.mean - v).abs()),
            },
        }));
    }
    let pde_violation = ordering_violation(&pde_minus, &pde_plus);
    let dpp_violation = ordering_violation(&dpp_minus, &dpp_plus);
    let mut meta = base_meta(cfg, "compare");
    meta.insert("t0".into(), json!(game.t0));
    meta.insert("points".into(), json!(points));
    meta.insert("pde_ordering_violation".into(), json!(pde_violation));
    meta.insert("dpp_ordering_violation".into(), json!(dpp_violation));
    meta.insert(
        "ordering_ok".into(),
        json!(pde_violation <= 1e-9 && dpp_violation <= 1e-9),
    );
    io::write_json(&out.join(&cfg.resolved.outputs.compare_path), &meta)?;
    println!(
        "ordering violations: pde {}, dpp {}",
        fmt_num(pde_violation),
        fmt_num(dpp_violation)
    );
    Ok(())
}
