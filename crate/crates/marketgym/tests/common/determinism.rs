//! Identical config and seed must give byte-identical artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use marketgym::cli::{bundled_data_dir, cmd_backtest, cmd_compare, cmd_train, RunConfig, Session};

use super::{ensure, Outcome};

/// A small multi-stock run on five bundled tickers: TD3 and PPO with short
/// budgets, the turbulence gate on, and two baselines.
pub fn small_config(out_dir: &Path) -> String {
    format!(
        r#"
[data]
csv = "{csv}"
tickers = ["T03", "T01", "T07", "T12", "T20"]

[split.train]
start = "2018-10-25T00:00:00Z"
end = "2020-02-27T00:00:00Z"

[split.validation]
start = "2020-02-27T00:00:00Z"
end = "2020-05-07T00:00:00Z"

[split.test]
start = "2020-05-07T00:00:00Z"
end = "2020-09-24T00:00:00Z"

[env]
task = "multi_stock"
initial_capital = 100000.0
action = {{ kind = "continuous_shares", max_shares = 50 }}
reward = {{ kind = "delta_value", scaling = 0.0001 }}
costs = {{ flat_fee = 1.0, per_share_rate = 0.001, half_spread = 0.01 }}
gate = {{ enabled = true, lookback = 20, threshold = 30.0 }}

[[agent]]
algorithm = "td3"
hidden = [16, 16]
total_steps = 600
learning_starts = 100
checkpoint_interval = 150
seed = 3

[[agent]]
algorithm = "ppo"
hidden = [16, 16]
total_steps = 1024
rollout_len = 256
checkpoint_interval = 256
seed = 3

[[baseline]]
kind = "min_variance"
window = 40
rebalance_every = 10

[[baseline]]
kind = "buy_and_hold"

[output]
dir = "{out}"
"#,
        csv = bundled_data_dir().join("synthetic_30x500.csv").display(),
        out = out_dir.display(),
    )
}

pub fn session(out_dir: &Path, seed: Option<u64>) -> Result<Session, String> {
    let config = RunConfig::from_toml(&small_config(out_dir)).map_err(|e| e.to_string())?;
    Session::new(config, bundled_data_dir(), None, seed).map_err(|e| e.to_string())
}

/// Trains, backtests and compares into `out_dir`.
pub fn run_pipeline(out_dir: &Path, seed: Option<u64>) -> Result<(), String> {
    let session = session(out_dir, seed)?;
    cmd_train(&session).map_err(|e| e.to_string())?;
    cmd_backtest(&session, &[]).map_err(|e| e.to_string())?;
    cmd_compare(&session, &[]).map_err(|e| e.to_string())?;
    Ok(())
}

pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

pub fn criterion() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&a, None)?;
    run_pipeline(&b, None)?;
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    ensure(sa.keys().eq(sb.keys()), || format!("artifact sets differ: {:?} vs {:?}", sa.keys(), sb.keys()))?;
    for (name, bytes) in &sa {
        ensure(sb[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    for required in ["policy_td3.json", "policy_ppo.json", "training_log_td3.csv", "report_td3.json", "equity_ppo.csv", "comparison.txt"] {
        ensure(sa.contains_key(required), || format!("missing artifact {required}; have {:?}", sa.keys()))?;
    }
    Ok(format!("{} artifacts byte-identical across two runs", sa.len()))
}
