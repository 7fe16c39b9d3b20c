//! Regenerates the bundled dataset `data/synthetic_30x500.csv`.
//!
//! ```text
//! cargo run --example generate_synthetic            # writes the bundled file
//! cargo run --example generate_synthetic -- out.csv # writes elsewhere
//! ```

use std::path::PathBuf;

use marketgym::data::synthetic::{generate, SyntheticParams, FIXTURE_FILE};
use marketgym::data::write_canonical_csv;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(FIXTURE_FILE));
    let params = SyntheticParams::default();
    let frame = generate(&params)?;
    let mut bytes = Vec::new();
    write_canonical_csv(&frame, &mut bytes)?;
    marketgym::cli::write_atomic(&path, &bytes)?;
    println!(
        "wrote {} tickers x {} days ({} .. {}) to {}",
        frame.n_assets(),
        frame.len(),
        frame.timestamps()[0].date_naive(),
        frame.timestamps()[frame.len() - 1].date_naive(),
        path.display()
    );
    Ok(())
}
