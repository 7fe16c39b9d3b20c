//! The three bundled end-to-end use cases.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::commands::{
    backtest_prepared, cmd_compare, cmd_ingest, json_bytes, prepare, train_prepared, IngestSummary, PreparedData,
    Session, TrainSummary,
};
use super::config::{RunConfig, DATA_DIR_ENV};
use super::io::write_atomic;
use super::CliError;
use crate::agents::{ActionSpace, AgentAction, Environment, Policy};
use crate::backtest::{sharpe_ratio, Actor, ComparisonTable, EquityCurve};
use crate::env::EnvConfig;

/// Seeds of the random-policy reference runs.
pub const RANDOM_POLICY_SEEDS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum UseCase {
    SingleStock,
    MultiStock,
    Portfolio,
}

impl UseCase {
    pub const ALL: [UseCase; 3] = [UseCase::SingleStock, UseCase::MultiStock, UseCase::Portfolio];

    pub fn name(self) -> &'static str {
        match self {
            UseCase::SingleStock => "single_stock",
            UseCase::MultiStock => "multi_stock",
            UseCase::Portfolio => "portfolio",
        }
    }

    /// The bundled config, identical to `configs/<name>.toml`.
    pub fn config_text(self) -> &'static str {
        match self {
            UseCase::SingleStock => include_str!("../../configs/single_stock.toml"),
            UseCase::MultiStock => include_str!("../../configs/multi_stock.toml"),
            UseCase::Portfolio => include_str!("../../configs/portfolio.toml"),
        }
    }

    pub fn config(self) -> Result<RunConfig, CliError> {
        RunConfig::from_toml(self.config_text())
    }
}

/// Directory holding the bundled synthetic dataset.
pub fn bundled_data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// Session for a bundled use case. Data comes from `MARKETGYM_DATA_DIR` when
/// set, else the bundled directory; output defaults to `out/demo/<name>`.
pub fn demo_session(case: UseCase, out: Option<PathBuf>, seed: Option<u64>) -> Result<Session, CliError> {
    let data_root = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(bundled_data_dir);
    let out = out.unwrap_or_else(|| PathBuf::from("out").join("demo").join(case.name()));
    Session::new(case.config()?, data_root, Some(out), seed)
}

/// Training-split Sharpe of a trained agent against uniformly random
/// actions on the same split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SanityCheck {
    pub agent: String,
    pub agent_sharpe: f64,
    pub random_sharpes: Vec<f64>,
    pub random_median: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSummary {
    pub use_case: UseCase,
    pub out_dir: String,
    pub ingest: IngestSummary,
    pub trained: Vec<TrainSummary>,
    #[serde(skip)]
    pub table: ComparisonTable,
    pub sanity: Vec<SanityCheck>,
}

/// Sharpe of a curve, with an undefined ratio (flat curve) counted as zero.
fn sharpe_or_zero(curve: &EquityCurve) -> f64 {
    sharpe_ratio(curve, 0.0).unwrap_or(0.0)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 0 {
        0.5 * (values[m - 1] + values[m])
    } else {
        values[m]
    }
}

fn random_action(space: ActionSpace, rng: &mut ChaCha8Rng) -> AgentAction {
    match space {
        ActionSpace::Discrete { branches, choices } => {
            AgentAction::Discrete((0..branches).map(|_| rng.random_range(0..choices)).collect())
        }
        ActionSpace::Continuous { dim } => {
            AgentAction::Continuous((0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        }
    }
}

/// Training-split Sharpe of a policy taking uniformly random actions.
pub fn random_policy_sharpe(data: &PreparedData, config: &EnvConfig, seed: u64) -> Result<f64, CliError> {
    let mut env = data.train_env(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = Environment::action_space(&env);
    Environment::reset(&mut env);
    loop {
        let tr = Environment::step(&mut env, &random_action(space, &mut rng))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        if tr.done {
            break;
        }
    }
    let curve = EquityCurve::from_trace(env.trace(), data.frame.granularity().periods_per_year())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(sharpe_or_zero(&curve))
}

/// Compares each trained policy's training-split Sharpe with the median over
/// [`RANDOM_POLICY_SEEDS`] random-policy runs.
pub fn sanity_checks(session: &Session, data: &PreparedData) -> Result<Vec<SanityCheck>, CliError> {
    let env = &session.config.env;
    let random_sharpes = (0..RANDOM_POLICY_SEEDS)
        .map(|seed| random_policy_sharpe(data, env, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let random_median = median(&mut random_sharpes.clone());
    let mut checks = Vec::new();
    for agent in &session.config.agents {
        let path = session.artifact(&super::commands::policy_file(agent.algorithm));
        let policy = Policy::load(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let run = data.run(Actor::Policy(&policy), &data.train, env)?;
        let agent_sharpe = sharpe_or_zero(&run.curve);
        checks.push(SanityCheck {
            agent: agent.algorithm.to_string(),
            agent_sharpe,
            random_sharpes: random_sharpes.clone(),
            random_median,
            passed: agent_sharpe >= random_median,
        });
    }
    Ok(checks)
}

/// Runs ingest, train, backtest and compare for one use case, then the
/// random-policy sanity check, written to `sanity.json`.
pub fn cmd_demo(case: UseCase, out: Option<PathBuf>, seed: Option<u64>) -> Result<DemoSummary, CliError> {
    let session = demo_session(case, out, seed)?;
    run_demo(case, &session)
}

pub fn run_demo(case: UseCase, session: &Session) -> Result<DemoSummary, CliError> {
    let ingest = cmd_ingest(session)?;
    let data = prepare(session)?;
    let trained = train_prepared(session, &data)?;
    backtest_prepared(session, &data, &[])?;
    let table = cmd_compare(session, &[])?;
    let sanity = sanity_checks(session, &data)?;
    write_atomic(&session.artifact("sanity.json"), &json_bytes(&sanity)?)?;
    Ok(DemoSummary {
        use_case: case,
        out_dir: session.out_dir.display().to_string(),
        ingest,
        trained,
        table,
        sanity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse_and_validate() {
        for case in UseCase::ALL {
            let cfg = case.config().unwrap();
            cfg.validate(&bundled_data_dir()).unwrap();
            assert!(!cfg.agents.is_empty() && !cfg.baselines.is_empty(), "{}", case.name());
        }
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
