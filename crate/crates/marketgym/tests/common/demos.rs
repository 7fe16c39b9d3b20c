//! The three bundled use cases end to end.

use std::time::{Duration, Instant};

use marketgym::backtest::ROW_LABELS;
use marketgym::cli::{cmd_demo, UseCase};

use super::{ensure, Outcome};

pub const TIME_LIMIT: Duration = Duration::from_secs(300);

pub fn run_case(case: UseCase) -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let summary = cmd_demo(case, Some(tmp.path().to_path_buf()), None).map_err(|e| format!("{}: {e}", case.name()))?;
    let elapsed = start.elapsed();
    ensure(elapsed < TIME_LIMIT, || format!("{} took {elapsed:?}", case.name()))?;

    let cells = summary.table.cells();
    let expected_cols = summary.trained.len() + case.config().map_err(|e| e.to_string())?.baselines.len();
    ensure(cells.len() == 1 + ROW_LABELS.len(), || format!("{}: {} table rows", case.name(), cells.len()))?;
    ensure(cells.iter().all(|row| row.len() == 1 + expected_cols), || format!("{}: ragged table", case.name()))?;
    for (row, label) in cells[1..].iter().zip(ROW_LABELS) {
        ensure(row[0] == label, || format!("{}: row label {}", case.name(), row[0]))?;
    }
    for file in ["comparison.txt", "comparison.csv", "comparison.json", "sanity.json"] {
        ensure(tmp.path().join(file).is_file(), || format!("{}: missing {file}", case.name()))?;
    }
    let mut notes = Vec::new();
    for check in &summary.sanity {
        ensure(check.passed, || {
            format!("{}: {} Sharpe {} below random median {}", case.name(), check.agent, check.agent_sharpe, check.random_median)
        })?;
        notes.push(format!("{} {:.2} vs {:.2}", check.agent, check.agent_sharpe, check.random_median));
    }
    Ok(format!("{} in {:.1}s, {} columns, {}", case.name(), elapsed.as_secs_f64(), expected_cols, notes.join(", ")))
}

pub fn criterion() -> Outcome {
    let parts = UseCase::ALL.into_iter().map(run_case).collect::<Result<Vec<_>, _>>()?;
    Ok(parts.join("; "))
}
