//! The four published leak figures, each confirmed by a Monte Carlo session.
//!
//! ```text
//! cargo run --release --example reproduce_published [pulses]
//! ```

use pns_core::report::{reproduce_published, reproduction_table};

fn main() -> pns_core::Result<()> {
    let pulses = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000);
    print!("{}", reproduction_table(&reproduce_published(pulses, 0)?));
    Ok(())
}
