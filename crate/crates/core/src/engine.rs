//! Pulse-by-pulse Monte Carlo of source, attacker, channel and detector.
//!
//! Trial `t` of a run draws every random number it needs from
//! `RandomStream { seed, stream_index: t }`, so a trial's outcome depends on
//! nothing but `(configuration, seed, t)`. Parallel execution therefore
//! cannot change any result, only the order in which trials are computed.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{DecoyScheme, DeletionPolicy, Detector};
use crate::error::{PnsError, Result};
use crate::photon_stats::{sample_binomial, RandomStream, StreamRng, Transmittance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackVariant {
    None,
    OriginalPns,
    Spns,
    BayesDelete,
}

/// Adversary configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackStrategy {
    pub variant: AttackVariant,
    /// Receiver detector the attacker tailors her forwarding to.
    pub detector_assumption: Option<Detector>,
    /// Probability of intercept-resend on pulses the attacker holds no photon from.
    pub intercept_fraction: f64,
    pub deletion_policy: Option<DeletionPolicy>,
    /// Forward kept multi-photon pulses over a lossless line instead of the channel.
    pub lossless_forwarding: bool,
}

impl AttackStrategy {
    pub fn none() -> Self {
        Self {
            variant: AttackVariant::None,
            detector_assumption: None,
            intercept_fraction: 0.0,
            deletion_policy: None,
            lossless_forwarding: false,
        }
    }

    pub fn original_pns() -> Self {
        Self {
            variant: AttackVariant::OriginalPns,
            lossless_forwarding: true,
            ..Self::none()
        }
    }

    pub fn spns(detector_assumption: Detector) -> Self {
        Self {
            variant: AttackVariant::Spns,
            detector_assumption: Some(detector_assumption),
            ..Self::none()
        }
    }

    pub fn bayes_delete(policy: DeletionPolicy, detector_assumption: Detector) -> Self {
        Self {
            variant: AttackVariant::BayesDelete,
            detector_assumption: Some(detector_assumption),
            deletion_policy: Some(policy),
            lossless_forwarding: true,
            ..Self::none()
        }
    }

    pub fn with_intercept(mut self, fraction: f64) -> Self {
        self.intercept_fraction = fraction;
        self
    }

    pub fn with_lossless_forwarding(mut self, lossless: bool) -> Self {
        self.lossless_forwarding = lossless;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.intercept_fraction) {
            return Err(PnsError::InvalidConfiguration(format!(
                "intercept fraction {} outside [0, 1]",
                self.intercept_fraction
            )));
        }
        match self.variant {
            AttackVariant::Spns | AttackVariant::BayesDelete if self.detector_assumption.is_none() => Err(
                PnsError::InvalidConfiguration("attack needs a declared detector assumption".into()),
            ),
            AttackVariant::BayesDelete if self.deletion_policy.is_none() => Err(PnsError::InvalidConfiguration(
                "bayes_delete requires a deletion policy".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Transmittance of the line the attacker forwards kept pulses over.
    pub fn forward_eta(&self, channel: Transmittance) -> Transmittance {
        if self.lossless_forwarding {
            Transmittance::lossless()
        } else {
            channel
        }
    }
}

/// What the attacker does to one pulse before it reaches the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackAction {
    pub forwarded_l: usize,
    pub eve_holds_photon: bool,
    pub deleted: bool,
}

/// Honest lossy channel.
pub fn apply_none<R: Rng + ?Sized>(n: usize, eta: Transmittance, rng: &mut R) -> usize {
    sample_binomial(n, eta, rng)
}

/// Split one photon off every multi-photon pulse, block single photons.
/// Returns `(forwarded_l, eve_holds_photon)`; the remaining photons travel
/// losslessly.
pub fn apply_original_pns(n: usize) -> (usize, bool) {
    if n >= 2 {
        (n - 1, true)
    } else {
        (0, false)
    }
}

/// Binomial regeneration: draw `l ~ B(n, η)` and reproduce the honest
/// channel output for the assumed detector, keeping a photon whenever that
/// leaves the detector's view unchanged.
pub fn apply_spns<R: Rng + ?Sized>(
    n: usize,
    eta: Transmittance,
    detector_assumption: Detector,
    rng: &mut R,
) -> (usize, bool) {
    let l = sample_binomial(n, eta, rng);
    match detector_assumption {
        Detector::Pnr => (l, n >= 2 && l < n),
        Detector::Threshold => (l.min(1), n >= 2),
    }
}

/// Deletes with probability `d(n)`, otherwise regenerates over the policy's
/// forwarding line and keeps a photon from every multi-photon pulse.
pub fn apply_bayes_delete<R: Rng + ?Sized>(
    n: usize,
    policy: &DeletionPolicy,
    detector_assumption: Detector,
    rng: &mut R,
) -> AttackAction {
    let d = policy.delete_prob(n);
    if d > 0.0 && rng.random::<f64>() < d {
        return AttackAction {
            forwarded_l: 0,
            eve_holds_photon: false,
            deleted: true,
        };
    }
    let forward = Transmittance::new(policy.forward_eta).unwrap_or_else(|_| Transmittance::lossless());
    let l = sample_binomial(n, forward, rng);
    let keeps = n >= 2;
    let forwarded_l = match detector_assumption {
        Detector::Threshold => l.min(1),
        Detector::Pnr if keeps => l.min(n - 1),
        Detector::Pnr => l,
    };
    AttackAction {
        forwarded_l,
        eve_holds_photon: keeps,
        deleted: false,
    }
}

/// One pulse from emission to sifting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseOutcome {
    pub intensity_index: usize,
    pub emitted_n: usize,
    pub forwarded_l: usize,
    pub bob_registered: usize,
    pub eve_holds_photon: bool,
    pub eve_intercepted: bool,
    /// Basis the attacker measured in; meaningful only when intercepted.
    pub eve_basis: bool,
    pub deleted: bool,
    pub alice_basis: bool,
    pub bob_basis: bool,
    pub alice_bit: bool,
    pub bob_bit: Option<bool>,
    pub sifted: bool,
    pub bit_error: bool,
}

impl PulseOutcome {
    /// Sifted bit the attacker knows with certainty after basis announcement.
    pub fn eve_knows_bit(&self) -> bool {
        self.sifted && (self.eve_holds_photon || (self.eve_intercepted && self.eve_basis == self.alice_basis))
    }

    pub fn detected(&self) -> bool {
        self.bob_registered > 0
    }
}

/// Random bits a pulse needs beyond the photon-number draws.
#[derive(Debug, Clone, Copy)]
struct PulseCoins(u64);

impl PulseCoins {
    fn alice_basis(self) -> bool {
        self.0 & 1 != 0
    }
    fn alice_bit(self) -> bool {
        self.0 & 2 != 0
    }
    fn bob_basis(self) -> bool {
        self.0 & 4 != 0
    }
    fn eve_basis(self) -> bool {
        self.0 & 8 != 0
    }
    fn eve_guess(self) -> bool {
        self.0 & 16 != 0
    }
    fn bob_guess(self) -> bool {
        self.0 & 32 != 0
    }
}

/// Intercept-resend overlay. With probability `fraction`, the attacker
/// measures a forwarded pulse she holds no photon from in a random basis and
/// resends her result; otherwise the outcome is returned unchanged.
///
/// The caller is expected to have filled in Alice's and Bob's choices; Bob's
/// bit, sifting and error flags are recomputed.
pub fn apply_intercept_resend<R: Rng + ?Sized>(outcome: PulseOutcome, fraction: f64, rng: &mut R) -> PulseOutcome {
    if fraction <= 0.0 || outcome.eve_holds_photon || outcome.forwarded_l == 0 {
        return outcome;
    }
    if rng.random::<f64>() >= fraction {
        return outcome;
    }
    let coins = PulseCoins(rng.random());
    let mut out = outcome;
    out.eve_intercepted = true;
    out.eve_basis = coins.eve_basis();
    let eve_bit = if out.eve_basis == out.alice_basis {
        out.alice_bit
    } else {
        coins.eve_guess()
    };
    let basis = out.eve_basis;
    measure(&mut out, basis, eve_bit, coins.bob_guess());
    out
}

/// Bob measures a state prepared as `(basis, bit)`.
fn measure(out: &mut PulseOutcome, basis: bool, bit: bool, guess: bool) {
    if out.bob_registered == 0 {
        out.bob_bit = None;
        out.sifted = false;
        out.bit_error = false;
        return;
    }
    let bob_bit = if out.bob_basis == basis { bit } else { guess };
    out.bob_bit = Some(bob_bit);
    out.sifted = out.alice_basis == out.bob_basis;
    out.bit_error = out.sifted && bob_bit != out.alice_bit;
}

/// Deterministic trial executor for one configuration.
#[derive(Debug, Clone)]
pub struct TrialEngine<'a> {
    scheme: &'a DecoyScheme,
    channel: Transmittance,
    detector: Detector,
    attack: &'a AttackStrategy,
    seed: u64,
    cumulative_weights: Vec<f64>,
}

impl<'a> TrialEngine<'a> {
    pub fn new(
        scheme: &'a DecoyScheme,
        channel: Transmittance,
        detector: Detector,
        attack: &'a AttackStrategy,
        seed: u64,
    ) -> Result<Self> {
        attack.validate()?;
        if let Some(policy) = attack.deletion_policy.as_ref() {
            if attack.variant == AttackVariant::BayesDelete {
                let expected = attack.forward_eta(channel).value();
                if (policy.forward_eta - expected).abs() > 1e-12 {
                    return Err(PnsError::InvalidConfiguration(format!(
                        "deletion policy was solved for forwarding transmittance {} but the attack forwards at {}",
                        policy.forward_eta, expected
                    )));
                }
            }
        }
        let mut acc = 0.0;
        let cumulative_weights = scheme
            .intensities()
            .iter()
            .map(|x| {
                acc += x.weight;
                acc
            })
            .collect();
        Ok(Self {
            scheme,
            channel,
            detector,
            attack,
            seed,
            cumulative_weights,
        })
    }

    pub fn scheme(&self) -> &DecoyScheme {
        self.scheme
    }

    /// Outcome of trial `t`.
    pub fn trial(&self, t: u64) -> PulseOutcome {
        let mut rng = RandomStream::new(self.seed, t).rng();
        self.run_pulse(&mut rng)
    }

    fn run_pulse(&self, rng: &mut StreamRng) -> PulseOutcome {
        let intensity_index = if self.cumulative_weights.len() == 1 {
            0
        } else {
            let u: f64 = rng.random();
            self.cumulative_weights
                .iter()
                .position(|&c| u < c)
                .unwrap_or(self.cumulative_weights.len() - 1)
        };
        let pmf = &self.scheme.intensities()[intensity_index].pmf;
        let n = pmf.sample(rng);

        let action = self.attack_pulse(n, rng);
        let bob_registered = match self.detector {
            Detector::Threshold => action.forwarded_l.min(1),
            Detector::Pnr => action.forwarded_l,
        };

        let coins = PulseCoins(rng.random());
        let mut out = PulseOutcome {
            intensity_index,
            emitted_n: n,
            forwarded_l: action.forwarded_l,
            bob_registered,
            eve_holds_photon: action.eve_holds_photon,
            eve_intercepted: false,
            eve_basis: false,
            deleted: action.deleted,
            alice_basis: coins.alice_basis(),
            bob_basis: coins.bob_basis(),
            alice_bit: coins.alice_bit(),
            bob_bit: None,
            sifted: false,
            bit_error: false,
        };
        let (basis, bit) = (out.alice_basis, out.alice_bit);
        measure(&mut out, basis, bit, coins.bob_guess());
        apply_intercept_resend(out, self.attack.intercept_fraction, rng)
    }

    fn attack_pulse(&self, n: usize, rng: &mut StreamRng) -> AttackAction {
        let attack = self.attack;
        match attack.variant {
            AttackVariant::None => AttackAction {
                forwarded_l: apply_none(n, self.channel, rng),
                eve_holds_photon: false,
                deleted: false,
            },
            AttackVariant::OriginalPns => {
                let (rest, holds) = apply_original_pns(n);
                let forwarded_l = if attack.lossless_forwarding {
                    rest
                } else {
                    sample_binomial(rest, self.channel, rng)
                };
                AttackAction {
                    forwarded_l,
                    eve_holds_photon: holds,
                    deleted: n == 1,
                }
            }
            AttackVariant::Spns => {
                let assumed = attack.detector_assumption.unwrap_or(self.detector);
                let (forwarded_l, eve_holds_photon) = apply_spns(n, self.channel, assumed, rng);
                AttackAction {
                    forwarded_l,
                    eve_holds_photon,
                    deleted: false,
                }
            }
            AttackVariant::BayesDelete => {
                let assumed = attack.detector_assumption.unwrap_or(self.detector);
                // validated at construction
                let policy = attack.deletion_policy.as_ref().expect("policy checked in validate");
                apply_bayes_delete(n, policy, assumed, rng)
            }
        }
    }

    /// Lazily evaluated outcomes for trials `0..trials`, in trial order.
    pub fn outcomes(&self, trials: u64) -> impl ExactSizeIterator<Item = PulseOutcome> + '_ {
        (0..trials as usize).map(move |t| self.trial(t as u64))
    }

    /// Outcomes for `0..trials` computed in parallel and returned in trial order.
    pub fn collect_parallel(&self, trials: u64) -> Vec<PulseOutcome> {
        (0..trials).into_par_iter().map(|t| self.trial(t)).collect()
    }

    /// Parallel fold over all trials. `fold` must not depend on visiting
    /// order and `merge` must be associative and commutative, which is the
    /// case for any counting aggregate.
    pub fn fold<A, F, M>(&self, trials: u64, init: impl Fn() -> A + Sync + Send, fold: F, merge: M) -> A
    where
        A: Send,
        F: Fn(A, PulseOutcome) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        const CHUNK: u64 = 1 << 14;
        let chunks = trials.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let end = ((c + 1) * CHUNK).min(trials);
                (c * CHUNK..end).fold(init(), |acc, t| fold(acc, self.trial(t)))
            })
            .reduce(&init, &merge)
    }
}

/// Runs `trials` pulses and returns their outcomes in trial order.
pub fn run_trials(
    source: &DecoyScheme,
    channel: Transmittance,
    detector: Detector,
    attack: &AttackStrategy,
    trials: u64,
    seed: u64,
) -> Result<Vec<PulseOutcome>> {
    if trials == 0 {
        return Err(PnsError::InvalidConfiguration("trials must be at least 1".into()));
    }
    let engine = TrialEngine::new(source, channel, detector, attack, seed)?;
    Ok(engine.collect_parallel(trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon_stats::PhotonPmf;

    fn eta(v: f64) -> Transmittance {
        Transmittance::new(v).unwrap()
    }

    #[test]
    fn original_pns_rule() {
        assert_eq!(apply_original_pns(0), (0, false));
        assert_eq!(apply_original_pns(1), (0, false));
        assert_eq!(apply_original_pns(3), (2, true));
    }

    #[test]
    fn honest_channel_edges() {
        let mut rng = RandomStream::new(9, 0).rng();
        for _ in 0..200 {
            assert_eq!(apply_none(0, eta(0.5), &mut rng), 0);
            assert_eq!(apply_none(4, eta(1.0), &mut rng), 4);
        }
    }

    #[test]
    fn spns_single_photons_never_kept() {
        let mut rng = RandomStream::new(5, 0).rng();
        for _ in 0..1000 {
            let (l, holds) = apply_spns(1, eta(0.3), Detector::Threshold, &mut rng);
            assert!(l <= 1 && !holds);
            let (l, holds) = apply_spns(1, eta(0.3), Detector::Pnr, &mut rng);
            assert!(l <= 1 && !holds);
        }
    }

    #[test]
    fn spns_pnr_full_arrival_leaves_nothing() {
        let mut rng = RandomStream::new(5, 1).rng();
        assert_eq!(apply_spns(2, eta(1.0), Detector::Pnr, &mut rng), (2, false));
        assert_eq!(apply_spns(2, eta(1.0), Detector::Threshold, &mut rng), (1, true));
    }

    #[test]
    fn spns_threshold_collapses_counts() {
        let mut rng = RandomStream::new(5, 2).rng();
        for _ in 0..1000 {
            let (l, holds) = apply_spns(2, eta(0.5), Detector::Threshold, &mut rng);
            assert!(holds);
            assert!(l <= 1);
        }
    }

    #[test]
    fn bayes_delete_extremes() {
        let mut rng = RandomStream::new(2, 0).rng();
        let all = DeletionPolicy::uniform(1.0, Transmittance::lossless()).unwrap();
        for n in 1..6 {
            let a = apply_bayes_delete(n, &all, Detector::Threshold, &mut rng);
            assert!(a.deleted && a.forwarded_l == 0 && !a.eve_holds_photon);
        }
        let none = DeletionPolicy::uniform(0.0, Transmittance::lossless()).unwrap();
        let a = apply_bayes_delete(3, &none, Detector::Pnr, &mut rng);
        assert_eq!(
            a,
            AttackAction {
                forwarded_l: 2,
                eve_holds_photon: true,
                deleted: false
            }
        );
    }

    #[test]
    fn intercept_zero_fraction_is_identity() {
        let scheme = DecoyScheme::single(PhotonPmf::point_mass(1));
        let attack = AttackStrategy::spns(Detector::Threshold);
        let engine = TrialEngine::new(&scheme, eta(1.0), Detector::Threshold, &attack, 1).unwrap();
        let out = engine.trial(0);
        let mut rng = RandomStream::new(0, 0).rng();
        assert_eq!(apply_intercept_resend(out, 0.0, &mut rng), out);
    }

    #[test]
    fn intercept_skips_held_pulses() {
        let scheme = DecoyScheme::single(PhotonPmf::point_mass(3));
        let attack = AttackStrategy::spns(Detector::Threshold).with_intercept(1.0);
        let out = run_trials(&scheme, eta(1.0), Detector::Threshold, &attack, 500, 4).unwrap();
        assert!(out.iter().all(|o| !o.eve_intercepted && o.eve_holds_photon));
    }

    #[test]
    fn invalid_configurations() {
        let scheme = DecoyScheme::single(PhotonPmf::point_mass(1));
        let mut attack = AttackStrategy::bayes_delete(
            DeletionPolicy::uniform(0.0, Transmittance::lossless()).unwrap(),
            Detector::Threshold,
        );
        attack.deletion_policy = None;
        assert!(run_trials(&scheme, eta(0.5), Detector::Threshold, &attack, 10, 0).is_err());
        let mut spns = AttackStrategy::spns(Detector::Pnr);
        spns.detector_assumption = None;
        assert!(spns.validate().is_err());
        assert!(AttackStrategy::spns(Detector::Pnr)
            .with_intercept(1.5)
            .validate()
            .is_err());
        assert!(run_trials(&scheme, eta(0.5), Detector::Threshold, &AttackStrategy::none(), 0, 0).is_err());
        let mismatched =
            AttackStrategy::bayes_delete(DeletionPolicy::uniform(0.0, eta(0.5)).unwrap(), Detector::Threshold);
        assert!(run_trials(&scheme, eta(0.5), Detector::Threshold, &mismatched, 10, 0).is_err());
    }

    #[test]
    fn single_trial_is_deterministic() {
        let scheme = DecoyScheme::single(PhotonPmf::poisson(0.5, 1e-12).unwrap());
        let attack = AttackStrategy::spns(Detector::Threshold);
        let a = run_trials(&scheme, eta(0.1), Detector::Threshold, &attack, 1, 77).unwrap();
        let b = run_trials(&scheme, eta(0.1), Detector::Threshold, &attack, 1, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn outcome_invariants_hold() {
        let scheme = DecoyScheme::poisson(&[(0.8, 0.5), (0.2, 0.5)], 1e-12).unwrap();
        for attack in [
            AttackStrategy::none().with_intercept(0.3),
            AttackStrategy::original_pns(),
            AttackStrategy::spns(Detector::Pnr).with_intercept(0.5),
            AttackStrategy::spns(Detector::Threshold),
        ] {
            for o in run_trials(&scheme, eta(0.4), Detector::Pnr, &attack, 20_000, 3).unwrap() {
                assert!(o.forwarded_l <= o.emitted_n);
                if o.eve_holds_photon {
                    assert!(o.emitted_n >= 2);
                }
                if o.sifted {
                    assert!(o.bob_registered >= 1 && o.alice_basis == o.bob_basis);
                }
                assert!(!(o.eve_holds_photon && o.eve_intercepted));
            }
        }
    }
}
