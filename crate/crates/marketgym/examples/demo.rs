//! Runs one bundled use case end to end: ingest, train, backtest, compare
//! and the random-policy sanity check.
//!
//! ```text
//! cargo run --example demo [-- single-stock|multi-stock|portfolio]
//! ```
//!
//! The same pipeline is available as `marketgym demo <use-case>`.

use clap::ValueEnum;
use marketgym::cli::{cmd_demo, UseCase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "single-stock".into());
    let case = UseCase::from_str(&arg, true)?;
    let summary = cmd_demo(case, None, None)?;
    print!("{}", summary.table.render_text());
    for check in &summary.sanity {
        println!(
            "{}: training-split Sharpe {:.3}, random-policy median {:.3} -> {}",
            check.agent,
            check.agent_sharpe,
            check.random_median,
            if check.passed { "ok" } else { "below" }
        );
    }
    println!("artifacts in {}", summary.out_dir);
    Ok(())
}
