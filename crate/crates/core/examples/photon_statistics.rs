//! Truncated Poisson photon-number distributions, channel thinning and the
//! counter-based sampler.
//!
//! ```text
//! cargo run --example photon_statistics
//! ```

use pns_core::photon_stats::{binomial_thin_pmf, PhotonPmf, RandomStream, Transmittance, DEFAULT_TAIL_TOLERANCE};

fn main() -> pns_core::Result<()> {
    let mu = -(0.6f64).ln();
    let pmf = PhotonPmf::poisson(mu, DEFAULT_TAIL_TOLERANCE)?;
    let s = pmf.summarize();
    println!(
        "Poisson mean {mu:.4}: n_max {}, tail bound {:.1e}",
        pmf.n_max(),
        pmf.tail_mass()
    );
    println!("p0 {:.6}  p1 {:.6}  pm {:.6}", s.p0, s.p1, s.pm);

    let eta = Transmittance::from_db(4.0)?;
    println!("\n4 dB channel, eta = {:.6}", eta.value());
    for n in 0..=3 {
        let row: Vec<String> = binomial_thin_pmf(n, eta).iter().map(|p| format!("{p:.5}")).collect();
        println!("  B({n}, eta) = [{}]", row.join(", "));
    }

    let draws = 200_000u64;
    let mut counts = vec![0u64; pmf.probs().len()];
    for t in 0..draws {
        counts[pmf.sample(&mut RandomStream::new(1, t).rng())] += 1;
    }
    println!("\n{draws} draws (seed 1):");
    for (n, c) in counts.iter().enumerate().take(5) {
        println!("  n = {n}: {:.5} (exact {:.5})", *c as f64 / draws as f64, pmf.p(n));
    }
    Ok(())
}
