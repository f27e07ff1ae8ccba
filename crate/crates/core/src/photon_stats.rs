//! Photon-number distributions, binomial loss thinning and the seeded
//! sampling primitives shared by the analytics and the simulator.
//!
//! A [`PhotonPmf`] is a truncated probability mass function over the number
//! of photons a source emits in one pulse. Truncation is explicit: the mass
//! beyond `n_max` is carried in `tail_mass` (an upper bound) so that
//! summaries stay normalized and the truncation error is visible.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default bound on the probability mass dropped by truncation.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Allowed slack on `Σ probs + tail_mass = 1`.
const NORMALIZATION_SLACK: f64 = 1e-9;

/// Truncated photon-number distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonPmf {
    probs: Vec<f64>,
    tail_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    poisson_mean: Option<f64>,
    #[serde(skip)]
    cdf: Vec<f64>,
}

/// Vacuum, single-photon and multi-photon probabilities of a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonSummary {
    pub p0: f64,
    pub p1: f64,
    pub pm: f64,
}

impl PhotonPmf {
    /// Poisson distribution of mean `mean`, truncated at the smallest `n_max`
    /// whose tail bound falls below `tail_tolerance`. For means below one the
    /// bound is scaled by the mean, so ratios such as leak fractions (which
    /// divide by quantities of order `mean`) keep the same relative accuracy.
    pub fn poisson(mean: f64, tail_tolerance: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(invalid(format!("poisson mean must be positive, got {mean}")));
        }
        if !(tail_tolerance > 0.0 && tail_tolerance < 1e-6) {
            return Err(invalid(format!(
                "tail tolerance must lie in (0, 1e-6), got {tail_tolerance}"
            )));
        }
        let cutoff = tail_tolerance * mean.min(1.0);
        let mut probs = vec![(-mean).exp()];
        loop {
            let n = probs.len();
            let next = probs[n - 1] * mean / n as f64;
            // Terms past `n` shrink at least geometrically with ratio mean/(n+1)
            // once n+1 > mean, which bounds the remaining tail.
            let ratio = mean / (n + 1) as f64;
            if ratio < 1.0 {
                let bound = next / (1.0 - ratio);
                if bound < cutoff {
                    return Ok(Self::build(probs, bound, Some(mean)));
                }
            }
            probs.push(next);
        }
    }

    /// Explicit distribution; `probs[n]` is the probability of `n` photons.
    /// Any deficit from unity is recorded as tail mass.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("photon pmf needs at least one entry"));
        }
        if let Some((n, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(invalid(format!("probability for n = {n} is {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(invalid(format!("photon pmf sums to {total}, expected 1")));
        }
        let tail = (1.0 - total).max(0.0);
        Ok(Self::build(probs, tail, None))
    }

    /// Source that always emits exactly `n` photons.
    pub fn point_mass(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        Self::build(probs, 0.0, None)
    }

    fn build(probs: Vec<f64>, tail_mass: f64, poisson_mean: Option<f64>) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self {
            probs,
            tail_mass,
            poisson_mean,
            cdf,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Probability of exactly `n` photons (zero past the truncation point).
    pub fn p(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Probability of `n` photons under the untruncated law: the exact
    /// Poisson term for Poisson sources, `p(n)` otherwise. Ratios of
    /// likelihoods stay meaningful past the truncation point.
    pub fn likelihood(&self, n: usize) -> f64 {
        match self.poisson_mean {
            Some(mu) if n > self.n_max() => {
                let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
                (n as f64 * mu.ln() - mu - ln_fact).exp()
            }
            _ => self.p(n),
        }
    }

    /// Mean of the Poisson law this pmf was built from, if any.
    pub fn poisson_mean(&self) -> Option<f64> {
        self.poisson_mean
    }

    pub fn is_poisson(&self) -> bool {
        self.poisson_mean.is_some()
    }

    /// Mean photon number of the truncated distribution.
    pub fn mean(&self) -> f64 {
        self.weights().map(|(n, p)| n as f64 * p).sum()
    }

    /// `(n, p_n)` pairs with the tail mass collapsed onto `n_max`, the same
    /// law the sampler draws from.
    pub fn weights(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let last = self.n_max();
        self.probs
            .iter()
            .enumerate()
            .map(move |(n, &p)| if n == last { (n, p + self.tail_mass) } else { (n, p) })
    }

    pub fn summarize(&self) -> PhotonSummary {
        summarize(self)
    }

    /// Draws a photon number by inversion; the tail lands on `n_max`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.probs.len() - 1)
    }
}

/// Splits a pmf into vacuum, single and multi-photon probabilities.
pub fn summarize(pmf: &PhotonPmf) -> PhotonSummary {
    let pm = pmf.probs.iter().skip(2).sum::<f64>() + pmf.tail_mass;
    PhotonSummary {
        p0: pmf.p(0),
        p1: pmf.p(1),
        pm,
    }
}

/// Poisson pmf with the default truncation tolerance.
pub fn poisson_pmf(mean: f64, tail_tolerance: f64) -> Result<PhotonPmf> {
    PhotonPmf::poisson(mean, tail_tolerance)
}

/// Per-photon channel transmission probability, `0 < eta <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Transmittance(f64);

impl Transmittance {
    pub fn new(eta: f64) -> Result<Self> {
        if eta.is_finite() && eta > 0.0 && eta <= 1.0 {
            Ok(Self(eta))
        } else {
            Err(invalid(format!("transmittance must lie in (0, 1], got {eta}")))
        }
    }

    pub fn lossless() -> Self {
        Self(1.0)
    }

    /// Converts a channel loss in dB to a transmittance, `10^(-dB/10)`.
    pub fn from_db(loss_db: f64) -> Result<Self> {
        if !(loss_db.is_finite() && loss_db >= 0.0) {
            return Err(invalid(format!("loss must be a non-negative dB value, got {loss_db}")));
        }
        Self::new(10f64.powf(-loss_db / 10.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn loss_db(self) -> f64 {
        -10.0 * self.0.log10()
    }
}

impl TryFrom<f64> for Transmittance {
    type Error = crate::PnsError;

    fn try_from(eta: f64) -> Result<Self> {
        Self::new(eta)
    }
}

impl From<Transmittance> for f64 {
    fn from(t: Transmittance) -> f64 {
        t.0
    }
}

pub fn transmittance_from_db(loss_db: f64) -> Result<Transmittance> {
    Transmittance::from_db(loss_db)
}

/// Binomial survival law `B(n, l) = C(n, l) η^l (1-η)^(n-l)` for `l = 0..=n`.
pub fn binomial_thin_pmf(n: usize, eta: Transmittance) -> Vec<f64> {
    let eta = eta.value();
    let mut coeff = 1.0;
    (0..=n)
        .map(|l| {
            if l > 0 {
                coeff = coeff * (n + 1 - l) as f64 / l as f64;
            }
            coeff * eta.powi(l as i32) * (1.0 - eta).powi((n - l) as i32)
        })
        .collect()
}

/// Generator behind every [`RandomStream`].
pub type StreamRng = Pcg64Mcg;

const STREAM_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Counter-addressed random substream: trial `t` of a run seeded with `seed`
/// always draws from `RandomStream { seed, stream_index: t }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Fresh generator positioned at the start of this substream.
    pub fn rng(&self) -> StreamRng {
        StreamRng::seed_from_u64(self.seed ^ self.stream_index.wrapping_mul(STREAM_MIX))
    }
}

pub fn sample_photon_number<R: Rng + ?Sized>(pmf: &PhotonPmf, rng: &mut R) -> usize {
    pmf.sample(rng)
}

/// Number of survivors among `n` photons, by `n` Bernoulli(η) trials.
pub fn sample_binomial<R: Rng + ?Sized>(n: usize, eta: Transmittance, rng: &mut R) -> usize {
    let eta = eta.value();
    (0..n).filter(|_| rng.random::<f64>() < eta).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eta(v: f64) -> Transmittance {
        Transmittance::new(v).unwrap()
    }

    #[test]
    fn poisson_matches_deployed_source() {
        let pmf = PhotonPmf::poisson(-(0.6f64).ln(), DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_abs_diff_eq!(pmf.p(0), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(pmf.p(1), 0.306_495_374_259_594, epsilon = 1e-12);
        let s = pmf.summarize();
        assert_abs_diff_eq!(s.pm, 0.093_504_625_740_405_6, epsilon = 1e-11);
    }

    #[test]
    fn poisson_half() {
        let pmf = poisson_pmf(0.5, DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_abs_diff_eq!(pmf.p(1), 0.5 * (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(pmf.p(1), 0.30327, epsilon = 1e-5);
        assert_abs_diff_eq!(pmf.summarize().pm, 0.090_204_010_431_05, epsilon = 1e-11);
        assert!(pmf.tail_mass() < DEFAULT_TAIL_TOLERANCE);
    }

    #[test]
    fn vacuum_limit() {
        let pmf = poisson_pmf(1e-9, DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_abs_diff_eq!(pmf.p(0), 1.0, epsilon = 1e-8);
        assert!(pmf.n_max() >= 1);
    }

    #[test]
    fn poisson_rejects_bad_input() {
        assert!(poisson_pmf(0.0, 1e-12).is_err());
        assert!(poisson_pmf(-1.0, 1e-12).is_err());
        assert!(poisson_pmf(f64::NAN, 1e-12).is_err());
        assert!(poisson_pmf(0.5, 1e-3).is_err());
        assert!(poisson_pmf(0.5, 0.0).is_err());
    }

    #[test]
    fn point_mass_summary() {
        let s = PhotonPmf::point_mass(0).summarize();
        assert_eq!((s.p0, s.p1, s.pm), (1.0, 0.0, 0.0));
        let s = PhotonPmf::from_probs(vec![1.0, 0.0, 0.0]).unwrap().summarize();
        assert_eq!((s.p0, s.p1, s.pm), (1.0, 0.0, 0.0));
    }

    #[test]
    fn from_probs_validation() {
        assert!(PhotonPmf::from_probs(vec![]).is_err());
        assert!(PhotonPmf::from_probs(vec![0.5, 0.6]).is_err());
        assert!(PhotonPmf::from_probs(vec![1.2, -0.2]).is_err());
        let pmf = PhotonPmf::from_probs(vec![0.5, 0.5 - 1e-10]).unwrap();
        assert_abs_diff_eq!(pmf.tail_mass(), 1e-10, epsilon = 1e-16);
    }

    #[test]
    fn binomial_examples() {
        assert_abs_diff_eq!(binomial_thin_pmf(2, eta(0.5))[1], 0.5, epsilon = 1e-15);
        for v in [0.01, 0.3, 1.0] {
            assert_abs_diff_eq!(binomial_thin_pmf(1, eta(v))[1], v, epsilon = 1e-15);
        }
        let e = 10f64.powf(-0.4);
        assert_abs_diff_eq!(
            binomial_thin_pmf(3, eta(e))[2],
            3.0 * e * e * (1.0 - e),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(binomial_thin_pmf(3, eta(0.39811))[2], 0.28618, epsilon = 1e-5);
        assert_eq!(binomial_thin_pmf(0, eta(0.3)), vec![1.0]);
    }

    #[test]
    fn db_conversion() {
        assert_eq!(Transmittance::from_db(0.0).unwrap().value(), 1.0);
        assert_abs_diff_eq!(Transmittance::from_db(10.0).unwrap().value(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(
            Transmittance::from_db(4.0).unwrap().value(),
            0.398_107_170_553_497,
            epsilon = 1e-14
        );
        assert!(Transmittance::from_db(-1.0).is_err());
        assert_abs_diff_eq!(Transmittance::from_db(4.0).unwrap().loss_db(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn transmittance_bounds() {
        assert!(Transmittance::new(0.0).is_err());
        assert!(Transmittance::new(1.0 + 1e-12).is_err());
        assert!(Transmittance::new(1.0).is_ok());
    }

    #[test]
    fn point_mass_sampling() {
        let pmf = PhotonPmf::point_mass(1);
        let mut rng = RandomStream::new(3, 0).rng();
        assert!((0..1000).all(|_| pmf.sample(&mut rng) == 1));
    }

    #[test]
    fn binomial_edges() {
        let mut rng = RandomStream::new(1, 1).rng();
        for _ in 0..100 {
            assert_eq!(sample_binomial(0, eta(0.4), &mut rng), 0);
            assert_eq!(sample_binomial(7, eta(1.0), &mut rng), 7);
        }
    }

    #[test]
    fn stream_is_reproducible() {
        let pmf = poisson_pmf(0.5, DEFAULT_TAIL_TOLERANCE).unwrap();
        let draw = |s: RandomStream| {
            let mut rng = s.rng();
            (0..64).map(|_| pmf.sample(&mut rng)).collect::<Vec<_>>()
        };
        let a = RandomStream::new(42, 7);
        assert_eq!(draw(a), draw(a));
        let u = |s: RandomStream| s.rng().random::<u64>();
        assert_ne!(u(a), u(RandomStream::new(42, 8)));
    }
}
