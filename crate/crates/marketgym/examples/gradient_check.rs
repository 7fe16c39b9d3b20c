//! Finite-difference validation of every network head.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use marketgym::agents::gradcheck::{check_heads, HeadKind, TOLERANCE};
use marketgym::agents::Activation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for act in [Activation::Relu, Activation::Tanh] {
        for (head, error) in check_heads(act, &HeadKind::ALL, 20, 7)? {
            let verdict = if error < TOLERANCE { "ok" } else { "FAIL" };
            println!("{act:?} hidden, {:<20} worst relative error {error:.2e} {verdict}", head.to_string());
        }
    }
    Ok(())
}
