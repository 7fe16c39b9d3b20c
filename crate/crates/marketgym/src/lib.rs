//! Market MDP environments with realistic trading frictions, deep RL agents
//! written from scratch, conventional baseline strategies, and a backtesting
//! harness that reports the standard five performance metrics.
//!
//! The crate is layered bottom-up:
//!
//! - [`data`]: bar ingestion, alignment, indicators, resampling and splits.
//! - [`env`]: the time-driven trading MDP (single-stock, multi-stock and
//!   portfolio-allocation tasks) with costs, spread and a turbulence gate.
//! - [`agents`]: MLPs with analytic gradients, replay, DQN, DDPG, TD3 and PPO.
//! - [`baselines`]: buy-and-hold, equal-weight, momentum, mean-variance and
//!   min-variance strategies executed through the same fill engine.
//! - [`backtest`]: equity curves, metrics and comparison tables.
//! - [`cli`]: config-driven pipeline behind the `marketgym` binary.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example <name>`.

pub mod data;
pub mod env;
pub mod agents;
pub mod backtest;
pub mod baselines;
pub mod cli;
mod linalg;
