//! Posterior over intensities given the photon number, and a deletion policy
//! that restores honest yields when multi-photon pulses are forwarded
//! losslessly.
//!
//! ```text
//! cargo run --release --example bayes_deletion
//! ```

use pns_core::analytics::{decoy_posterior, solve_deletion_policy, DecoyScheme, Detector};
use pns_core::photon_stats::{Transmittance, DEFAULT_TAIL_TOLERANCE};
use pns_core::session::honest_yield;
use pns_core::{run_session, AttackStrategy, SessionConfig};

fn main() -> pns_core::Result<()> {
    let scheme = DecoyScheme::poisson(&[(0.5, 0.7), (0.1, 0.2), (0.002, 0.1)], DEFAULT_TAIL_TOLERANCE)?;
    println!("posterior P(intensity | n):");
    for n in 0..=4 {
        let post: Vec<String> = decoy_posterior(&scheme, n)?.iter().map(|p| format!("{p:.4}")).collect();
        println!("  n = {n}: [{}]", post.join(", "));
    }

    let eta = Transmittance::new(0.1)?;
    let targets: Vec<f64> = scheme.intensities().iter().map(|x| honest_yield(&x.pmf, eta)).collect();
    let policy = solve_deletion_policy(&scheme, Transmittance::lossless(), &targets)?;
    println!("\ndeletion probabilities d(1..8+): {:.4?}", policy.delete_prob);
    println!("max yield residual {:.1e}", policy.residual);

    let attack = AttackStrategy::bayes_delete(policy, Detector::Threshold);
    let report = run_session(&SessionConfig::new(scheme, eta, attack).pulses(2_000_000).seed(5))?;
    for r in &report.intensities {
        println!(
            "  mean {:<6} yield {:.5} honest {:.5}",
            r.mean, r.observed_yield, r.expected_yield
        );
    }
    println!(
        "decoy test passed: {}, leak {:.4}",
        report.decoy_test_passed,
        report.leak_fraction.unwrap_or(0.0)
    );
    Ok(())
}
