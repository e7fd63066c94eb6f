//! Pricing engine for the tug-of-war option model: Bellman–Isaacs
//! operators of the bounded-control game, an explicit solver for the
//! terminal value problem, and backward-induction and Monte Carlo
//! evaluation of the game itself.

// `!(a <= b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod game;
pub mod io;
pub mod isaacs;
pub mod lattice;
pub mod linalg;
pub mod market;
pub mod pde;

pub use error::{Error, Result};
pub use isaacs::{ControlPoint, DirectionSet, OperatorInput, Side};
pub use market::{MarketParams, Payoff, RunningCost, TerminalPayoff};
pub use pde::{GridSpec, Mode, PriceGrid, SolverConfig};
