//! Decoy-state BB84 sessions: intensity scheduling, sifting, per-intensity
//! yield estimation, the decoy consistency test and the attacker's knowledge
//! ledger.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::analytics::{DecoyScheme, Detector, LeakAnalytics};
use crate::engine::{AttackStrategy, AttackVariant, PulseOutcome, TrialEngine};
use crate::error::{PnsError, Result};
use crate::photon_stats::{PhotonPmf, Transmittance};
use crate::stats::{bonferroni_critical, proportion_z, standard_error};

pub const DEFAULT_Z_CRITICAL: f64 = 4.0;

/// Largest registered photon count tracked individually; larger counts share
/// the last histogram bin.
pub const HISTOGRAM_BINS: usize = 16;

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub scheme: DecoyScheme,
    pub channel: Transmittance,
    pub detector: Detector,
    pub attack: AttackStrategy,
    pub pulses: u64,
    pub seed: u64,
    pub z_critical: f64,
    /// Split the consistency test's tail probability across intensities.
    pub bonferroni: bool,
}

impl SessionConfig {
    pub fn new(scheme: DecoyScheme, channel: Transmittance, attack: AttackStrategy) -> Self {
        Self {
            scheme,
            channel,
            detector: Detector::Threshold,
            attack,
            pulses: 1_000_000,
            seed: 0,
            z_critical: DEFAULT_Z_CRITICAL,
            bonferroni: false,
        }
    }

    pub fn detector(mut self, detector: Detector) -> Self {
        self.detector = detector;
        self
    }

    pub fn pulses(mut self, pulses: u64) -> Self {
        self.pulses = pulses;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.pulses == 0 {
            return Err(PnsError::InvalidConfiguration("pulses must be at least 1".into()));
        }
        if self.z_critical.is_nan() || self.z_critical <= 0.0 {
            return Err(PnsError::InvalidConfiguration(format!(
                "z_critical must be positive, got {}",
                self.z_critical
            )));
        }
        self.attack.validate()
    }
}

/// Per-pulse probabilities implied by an attack, from which expected yields,
/// leak fractions and error rates follow.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttackRates {
    /// Receiver registers at least one photon.
    pub detection: f64,
    /// Detected, and the attacker holds a photon of the pulse.
    pub held_detection: f64,
    /// Detected, attacker holds nothing: open to intercept-resend.
    pub open_detection: f64,
    pub intercept_fraction: f64,
}

impl AttackRates {
    /// Share of sifted bits the attacker knows.
    pub fn leak(&self) -> Option<f64> {
        (self.detection > 0.0).then(|| self.known() / self.detection)
    }

    /// Per-pulse probability of a detection whose bit the attacker will know.
    pub fn known(&self) -> f64 {
        self.held_detection + 0.5 * self.intercept_fraction * self.open_detection
    }

    /// Expected QBER: an intercepted sifted bit is wrong with probability 1/4.
    pub fn qber(&self) -> Option<f64> {
        (self.detection > 0.0).then(|| 0.25 * self.intercept_fraction * self.open_detection / self.detection)
    }
}

/// Closed-form [`AttackRates`] for one source under `attack`.
pub fn attack_rates(pmf: &PhotonPmf, channel: Transmittance, attack: &AttackStrategy) -> AttackRates {
    let eta = channel.value();
    let forward = attack.forward_eta(channel).value();
    let arrives = |e: f64, n: usize| 1.0 - (1.0 - e).powi(n as i32);
    let assumed = attack.detector_assumption.unwrap_or_default();

    let mut rates = AttackRates {
        intercept_fraction: attack.intercept_fraction,
        ..Default::default()
    };
    for (n, p) in pmf.weights().skip(1) {
        let (det, held, open) = match attack.variant {
            AttackVariant::None => {
                let d = arrives(eta, n);
                (d, 0.0, d)
            }
            AttackVariant::OriginalPns if n >= 2 => {
                let d = if attack.lossless_forwarding {
                    1.0
                } else {
                    arrives(eta, n - 1)
                };
                (d, d, 0.0)
            }
            AttackVariant::OriginalPns => (0.0, 0.0, 0.0),
            AttackVariant::Spns => {
                let d = arrives(eta, n);
                match (assumed, n) {
                    (_, 1) => (d, 0.0, d),
                    (Detector::Threshold, _) => (d, d, 0.0),
                    (Detector::Pnr, _) => {
                        let all = eta.powi(n as i32);
                        (d, d - all, all)
                    }
                }
            }
            AttackVariant::BayesDelete => {
                let keep = attack
                    .deletion_policy
                    .as_ref()
                    .map_or(1.0, |policy| 1.0 - policy.delete_prob(n));
                let d = keep * arrives(forward, n);
                if n >= 2 {
                    (d, d, 0.0)
                } else {
                    (d, 0.0, d)
                }
            }
        };
        rates.detection += p * det;
        rates.held_detection += p * held;
        rates.open_detection += p * open;
    }
    rates
}

/// Honest yield `Σ_n p_n (1 - (1-η)^n)`, which is `1 - e^{-μη}` for Poisson.
pub fn honest_yield(pmf: &PhotonPmf, channel: Transmittance) -> f64 {
    let eta = channel.value();
    pmf.weights()
        .skip(1)
        .map(|(n, p)| p * (1.0 - (1.0 - eta).powi(n as i32)))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityReport {
    pub mean: f64,
    pub weight: f64,
    pub pulses_sent: u64,
    pub detections: u64,
    #[serde(rename = "yield")]
    pub observed_yield: f64,
    pub expected_yield: f64,
    pub z_score: Option<f64>,
    pub sifted_bits: u64,
    pub bit_errors: u64,
    pub qber: Option<f64>,
    pub eve_known_bits: u64,
    pub leak_fraction: Option<f64>,
    pub analytic_leak: Option<f64>,
    /// `count_histogram[k]` pulses registered `k` photons at the receiver.
    pub count_histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoyTest {
    pub passed: bool,
    /// Critical value actually applied (after any multiple-comparison split).
    pub z_critical: f64,
    pub z_scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub intensities: Vec<IntensityReport>,
    pub pulses: u64,
    pub detections: u64,
    pub sifted_total: u64,
    pub bit_errors: u64,
    pub qber: Option<f64>,
    pub eve_known_bits: u64,
    pub leak_fraction: Option<f64>,
    pub decoy_test: DecoyTest,
    pub decoy_test_passed: bool,
    /// Closed-form analytics for the signal (most frequent) intensity.
    pub analytic_leak: Option<LeakAnalytics>,
    /// Expected leak of this attack over the whole intensity mixture.
    pub analytic_mixture_leak: Option<f64>,
    pub analytic_qber: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Tally {
    pulses: u64,
    detections: u64,
    sifted: u64,
    errors: u64,
    known: u64,
    histogram: Vec<u64>,
}

impl Tally {
    fn new() -> Self {
        Self {
            histogram: vec![0; HISTOGRAM_BINS],
            ..Default::default()
        }
    }

    fn add(&mut self, o: &PulseOutcome) {
        self.pulses += 1;
        self.detections += o.detected() as u64;
        self.sifted += o.sifted as u64;
        self.errors += o.bit_error as u64;
        self.known += o.eve_knows_bit() as u64;
        self.histogram[o.bob_registered.min(HISTOGRAM_BINS - 1)] += 1;
    }

    fn merge(&mut self, other: &Tally) {
        self.pulses += other.pulses;
        self.detections += other.detections;
        self.sifted += other.sifted;
        self.errors += other.errors;
        self.known += other.known;
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Runs a full session and aggregates per-intensity statistics.
pub fn run_session(config: &SessionConfig) -> Result<SessionReport> {
    config.validate()?;
    let engine = TrialEngine::new(
        &config.scheme,
        config.channel,
        config.detector,
        &config.attack,
        config.seed,
    )?;
    let buckets = config.scheme.len();
    let tallies = engine.fold(
        config.pulses,
        || vec![Tally::new(); buckets],
        |mut acc, o| {
            acc[o.intensity_index].add(&o);
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
            a
        },
    );

    let mut mixture_known = 0.0;
    let mut mixture_detection = 0.0;
    let mut mixture_errors = 0.0;
    let intensities: Vec<IntensityReport> = config
        .scheme
        .intensities()
        .iter()
        .zip(&tallies)
        .map(|(x, t)| {
            let rates = attack_rates(&x.pmf, config.channel, &config.attack);
            mixture_known += x.weight * rates.known();
            mixture_detection += x.weight * rates.detection;
            mixture_errors += x.weight * rates.qber().unwrap_or(0.0) * rates.detection;
            IntensityReport {
                mean: x.mean,
                weight: x.weight,
                pulses_sent: t.pulses,
                detections: t.detections,
                observed_yield: ratio(t.detections, t.pulses).unwrap_or(0.0),
                expected_yield: honest_yield(&x.pmf, config.channel),
                z_score: None,
                sifted_bits: t.sifted,
                bit_errors: t.errors,
                qber: ratio(t.errors, t.sifted),
                eve_known_bits: t.known,
                leak_fraction: ratio(t.known, t.sifted),
                analytic_leak: rates.leak(),
                count_histogram: t.histogram.clone(),
            }
        })
        .collect();

    let sum = |f: fn(&IntensityReport) -> u64| intensities.iter().map(f).sum::<u64>();
    let sifted_total = sum(|r| r.sifted_bits);
    let bit_errors = sum(|r| r.bit_errors);
    let eve_known_bits = sum(|r| r.eve_known_bits);
    let signal = &config.scheme.intensities()[config.scheme.signal_index()];

    let mut report = SessionReport {
        pulses: config.pulses,
        detections: sum(|r| r.detections),
        sifted_total,
        bit_errors,
        qber: ratio(bit_errors, sifted_total),
        eve_known_bits,
        leak_fraction: ratio(eve_known_bits, sifted_total),
        decoy_test: DecoyTest {
            passed: true,
            z_critical: config.z_critical,
            z_scores: vec![],
        },
        decoy_test_passed: true,
        analytic_leak: LeakAnalytics::evaluate(&signal.pmf, config.channel).ok(),
        analytic_mixture_leak: (mixture_detection > 0.0).then(|| mixture_known / mixture_detection),
        analytic_qber: (mixture_detection > 0.0).then(|| mixture_errors / mixture_detection),
        intensities,
    };
    if sifted_total == 0 {
        warn!("session produced no sifted bits; qber and leak fraction are undefined");
    }
    let test = decoy_consistency_test(&report, config.z_critical, config.bonferroni);
    for (r, z) in report.intensities.iter_mut().zip(&test.z_scores) {
        r.z_score = *z;
    }
    report.decoy_test_passed = test.passed;
    report.decoy_test = test;
    Ok(report)
}

/// Per-intensity two-sided z-test of observed against expected yields.
/// Intensities that received no pulses are skipped.
pub fn decoy_consistency_test(report: &SessionReport, z_critical: f64, bonferroni: bool) -> DecoyTest {
    let tested = report.intensities.iter().filter(|r| r.pulses_sent > 0).count();
    let critical = if bonferroni {
        bonferroni_critical(z_critical, tested)
    } else {
        z_critical
    };
    let z_scores: Vec<Option<f64>> = report
        .intensities
        .iter()
        .map(|r| {
            if r.pulses_sent == 0 {
                warn!("intensity {} received no pulses; skipped in consistency test", r.mean);
                None
            } else {
                Some(proportion_z(r.detections, r.pulses_sent, r.expected_yield))
            }
        })
        .collect();
    let passed = z_scores.iter().flatten().all(|z| z.abs() < critical);
    DecoyTest {
        passed,
        z_critical: critical,
        z_scores,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakAccounting {
    pub leak_fraction: f64,
    pub analytic: f64,
    /// Deviation of the empirical leak from the analytic one in standard errors.
    pub agreement_sigma: f64,
}

/// Compares the empirical leak with the analytic mixture value.
pub fn leak_accounting(report: &SessionReport) -> Result<LeakAccounting> {
    let leak_fraction = report
        .leak_fraction
        .ok_or_else(|| PnsError::InvalidParameter("no sifted bits to account for".into()))?;
    let analytic = report.analytic_mixture_leak.unwrap_or(0.0);
    let se = standard_error(analytic, report.sifted_total);
    let diff = leak_fraction - analytic;
    let agreement_sigma = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    Ok(LeakAccounting {
        leak_fraction,
        analytic,
        agreement_sigma,
    })
}
