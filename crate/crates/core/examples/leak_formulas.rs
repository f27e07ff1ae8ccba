//! Closed-form leak fractions against loss for a source with 60% vacuum.
//!
//! ```text
//! cargo run --example leak_formulas
//! ```

use pns_core::analytics::{compromise_threshold, LeakAnalytics};
use pns_core::photon_stats::{PhotonPmf, Transmittance, DEFAULT_TAIL_TOLERANCE};

fn main() -> pns_core::Result<()> {
    let pmf = PhotonPmf::poisson(-(0.6f64).ln(), DEFAULT_TAIL_TOLERANCE)?;
    let lossless = LeakAnalytics::evaluate(&pmf, Transmittance::lossless())?;
    println!("naive splitting leak {:.4}", lossless.naive_leak);
    println!("high-loss limit      {:.4}", lossless.asymptotic_leak);
    let c = compromise_threshold(&pmf);
    println!("full compromise for eta < {:.4} ({:.2} dB)\n", c.eta, c.loss_db());

    println!("{:>6} {:>10} {:>10} {:>10}", "dB", "detected", "threshold", "PNR");
    for db in [0.0, 2.0, 4.0, 6.0, 10.0, 20.0, 30.0] {
        let a = LeakAnalytics::evaluate(&pmf, Transmittance::from_db(db)?)?;
        println!(
            "{db:>6} {:>10.5} {:>10.4} {:>10.4}",
            a.detected_fraction, a.spns_leak_threshold, a.spns_leak_pnr
        );
    }
    Ok(())
}
