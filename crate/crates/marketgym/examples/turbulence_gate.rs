//! Computes the turbulence index over the bundled data and shows the gate
//! liquidating a position when it trips.
//!
//! ```text
//! cargo run --example turbulence_gate
//! ```

use marketgym::cli::bundled_data_dir;
use marketgym::data::synthetic::FIXTURE_FILE;
use marketgym::data::{ingest_csv, CsvSchema};
use marketgym::env::{apply_turbulence_gate, compute_turbulence, TurbulenceGate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frame = ingest_csv(bundled_data_dir().join(FIXTURE_FILE), &CsvSchema::default())?;
    let close = frame.close();
    let returns: Vec<Vec<f64>> = (1..frame.len())
        .map(|t| close.row(t).iter().zip(close.row(t - 1)).map(|(p, q)| p / q - 1.0).collect())
        .collect();

    let lookback = 252;
    let series: Vec<f64> = (lookback..returns.len())
        .map(|r| compute_turbulence(&returns[r - lookback..r], &returns[r], None))
        .collect::<Result<_, _>>()?;
    let mut sorted = series.clone();
    sorted.sort_by(f64::total_cmp);
    let pct = |q: f64| sorted[((sorted.len() - 1) as f64 * q) as usize];
    println!("{} turbulence values for {} assets", series.len(), frame.n_assets());
    println!("median {:.1}, 90th pct {:.1}, max {:.1}", pct(0.5), pct(0.9), pct(1.0));

    let gate = TurbulenceGate { enabled: true, lookback, threshold: pct(0.9), ridge: None };
    let holdings = [7, 0, 12];
    let orders = [5, -3, 0];
    println!("calm:      orders {:?} -> {:?}", orders, apply_turbulence_gate(&orders, pct(0.5), &gate, &holdings));
    println!("turbulent: orders {:?} -> {:?}", orders, apply_turbulence_gate(&orders, pct(1.0), &gate, &holdings));
    Ok(())
}
