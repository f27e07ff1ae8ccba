//! Intercept-resend on the pulses the attacker holds nothing from, trading
//! QBER for extra knowledge.
//!
//! ```text
//! cargo run --release --example intercept_resend
//! ```

use pns_core::analytics::{DecoyScheme, Detector};
use pns_core::photon_stats::{PhotonPmf, Transmittance, DEFAULT_TAIL_TOLERANCE};
use pns_core::{run_session, AttackStrategy, SessionConfig};

fn main() -> pns_core::Result<()> {
    let pmf = PhotonPmf::poisson(-(0.6f64).ln(), DEFAULT_TAIL_TOLERANCE)?;
    let eta = Transmittance::new(0.1)?;
    println!(
        "{:>9} {:>9} {:>9} {:>9} {:>9}",
        "fraction", "qber", "expected", "leak", "expected"
    );
    for f in [0.0, 0.1, 0.2, 0.5, 1.0] {
        let attack = AttackStrategy::spns(Detector::Threshold).with_intercept(f);
        let config = SessionConfig::new(DecoyScheme::single(pmf.clone()), eta, attack)
            .pulses(1_000_000)
            .seed(4);
        let r = run_session(&config)?;
        println!(
            "{f:>9} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            r.qber.unwrap_or(0.0),
            r.analytic_qber.unwrap_or(0.0),
            r.leak_fraction.unwrap_or(0.0),
            r.analytic_mixture_leak.unwrap_or(0.0)
        );
    }
    Ok(())
}
