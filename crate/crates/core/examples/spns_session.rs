//! A full session under the stealthy splitting attack: no errors, honest
//! yields, and a large share of the sifted key in the attacker's hands.
//!
//! ```text
//! cargo run --release --example spns_session [pulses]
//! ```

use pns_core::analytics::{DecoyScheme, Detector};
use pns_core::photon_stats::{PhotonPmf, Transmittance, DEFAULT_TAIL_TOLERANCE};
use pns_core::report::session_table;
use pns_core::session::leak_accounting;
use pns_core::{run_session, AttackStrategy, SessionConfig};

fn main() -> pns_core::Result<()> {
    let pulses = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000);
    let pmf = PhotonPmf::poisson(-(0.6f64).ln(), DEFAULT_TAIL_TOLERANCE)?;
    let config = SessionConfig::new(
        DecoyScheme::single(pmf),
        Transmittance::from_db(10.0)?,
        AttackStrategy::spns(Detector::Threshold),
    )
    .pulses(pulses)
    .seed(1);
    let report = run_session(&config)?;
    print!("{}", session_table(&report));
    let acc = leak_accounting(&report)?;
    println!(
        "\nempirical leak {:.4}, analytic {:.4}",
        acc.leak_fraction, acc.analytic
    );
    Ok(())
}
