//! Central finite differences on every head, for both hidden activations.

use marketgym::agents::gradcheck::{check_heads, HeadKind, TOLERANCE, TRIALS};
use marketgym::agents::Activation;

use super::{ensure, Outcome};

/// Seed distinct from the training loops' construction-time self-test.
const SEED: u64 = 0x0fd;

pub fn criterion() -> Outcome {
    let mut lines = Vec::new();
    for act in [Activation::Relu, Activation::Tanh] {
        let results = check_heads(act, &HeadKind::ALL, TRIALS, SEED).map_err(|e| e.to_string())?;
        ensure(results.len() == HeadKind::ALL.len(), || "missing heads".to_string())?;
        for (head, error) in results {
            ensure(error < TOLERANCE, || format!("{head} head with {act:?}: relative error {error:e}"))?;
            lines.push(format!("{head}/{act:?} {error:.0e}"));
        }
    }
    Ok(format!("{TRIALS} trials per head: {}", lines.join(", ")))
}
