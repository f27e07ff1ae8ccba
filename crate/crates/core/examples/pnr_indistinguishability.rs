//! Photon-number-resolving receivers see the honest count distribution
//! under the stealthy attack.
//!
//! ```text
//! cargo run --release --example pnr_indistinguishability
//! ```

use pns_core::analytics::{spns_leak, DecoyScheme, Detector};
use pns_core::photon_stats::{binomial_thin_pmf, PhotonPmf, Transmittance, DEFAULT_TAIL_TOLERANCE};
use pns_core::stats::chi_square_gof;
use pns_core::{run_session, AttackStrategy, SessionConfig};

fn main() -> pns_core::Result<()> {
    let pmf = PhotonPmf::poisson(0.5, DEFAULT_TAIL_TOLERANCE)?;
    let eta = Transmittance::from_db(4.0)?;
    let config = SessionConfig::new(
        DecoyScheme::single(pmf.clone()),
        eta,
        AttackStrategy::spns(Detector::Pnr),
    )
    .detector(Detector::Pnr)
    .pulses(1_000_000)
    .seed(3);
    let report = run_session(&config)?;
    let observed = &report.intensities[0].count_histogram;
    let honest: Vec<f64> = (0..observed.len())
        .map(|l| {
            pmf.weights()
                .filter(|(n, _)| *n >= l)
                .map(|(n, p)| p * binomial_thin_pmf(n, eta)[l])
                .sum()
        })
        .collect();
    println!("{:>3} {:>10} {:>12}", "l", "observed", "honest");
    for l in 0..4 {
        println!("{l:>3} {:>10} {:>12.1}", observed[l], honest[l] * report.pulses as f64);
    }
    let test = chi_square_gof(observed, &honest, 5.0)?;
    println!(
        "chi-square {:.2} on {} dof, p = {:.3}",
        test.statistic, test.dof, test.p_value
    );
    println!(
        "leak {:.4} (analytic {:.4})",
        report.leak_fraction.unwrap_or(0.0),
        spns_leak(&pmf, eta, Detector::Pnr)?
    );
    Ok(())
}
