//! Decoy-state consistency test against the original and the stealthy
//! splitting attacks on a three-intensity scheme.
//!
//! ```text
//! cargo run --release --example decoy_evasion [runs]
//! ```

use pns_core::analytics::{DecoyScheme, Detector};
use pns_core::photon_stats::{Transmittance, DEFAULT_TAIL_TOLERANCE};
use pns_core::{run_session, AttackStrategy, SessionConfig};

fn main() -> pns_core::Result<()> {
    let runs: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let scheme = DecoyScheme::poisson(&[(0.5, 0.7), (0.1, 0.2), (0.002, 0.1)], DEFAULT_TAIL_TOLERANCE)?;
    let eta = Transmittance::new(0.1)?;
    for (name, attack) in [
        ("none", AttackStrategy::none()),
        ("spns", AttackStrategy::spns(Detector::Threshold)),
        ("original_pns", AttackStrategy::original_pns()),
    ] {
        let mut passed = 0;
        let mut last = vec![];
        for seed in 0..runs {
            let config = SessionConfig::new(scheme.clone(), eta, attack.clone())
                .pulses(10_000_000)
                .seed(seed);
            let report = run_session(&config)?;
            passed += report.decoy_test_passed as u64;
            last = report
                .decoy_test
                .z_scores
                .iter()
                .map(|z| z.map_or("-".into(), |z| format!("{z:.1}")))
                .collect();
        }
        println!(
            "{name:>13}: passed {passed}/{runs}, last z-scores [{}]",
            last.join(", ")
        );
    }
    Ok(())
}
