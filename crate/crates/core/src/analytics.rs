//! Closed-form leak analytics for photon-number-splitting attacks.
//!
//! Every quantity here is a finite series over a truncated [`PhotonPmf`].
//! Notation follows the usual decoy-state conventions: `p_n` is the source
//! n-photon probability, `η` the channel transmittance and `q_m^B` the
//! probability that the receiver registers a count from a multi-photon pulse
//! when the attacker regenerates the honest binomial output law.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, PnsError, Result};
use crate::photon_stats::{PhotonPmf, Transmittance};

/// What the receiver's detector reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    /// Click / no-click only.
    #[default]
    Threshold,
    /// Photon-number resolving.
    Pnr,
}

/// Fraction of detected pulses an attacker learns when she splits every
/// multi-photon pulse and passes single photons untouched on a lossless line.
pub fn naive_pns_leak(p1: f64, pm: f64) -> Result<f64> {
    let emitted = p1 + pm;
    if emitted <= 0.0 {
        return Err(PnsError::DegenerateSource("source never emits a photon".into()));
    }
    Ok(pm / emitted)
}

/// Receiver detection probability per pulse under binomial regeneration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedFraction {
    /// `p_1 η + q_m^B`
    pub total: f64,
    /// `Σ_{n≥2} p_n (1 - (1-η)^n)`
    pub q_m_b: f64,
}

pub fn detected_fraction(pmf: &PhotonPmf, eta: Transmittance) -> DetectedFraction {
    let eta = eta.value();
    let q_m_b = pmf
        .weights()
        .skip(2)
        .map(|(n, p)| p * (1.0 - (1.0 - eta).powi(n as i32)))
        .sum::<f64>();
    DetectedFraction {
        total: pmf.p(1) * eta + q_m_b,
        q_m_b,
    }
}

/// Attacker's share of multi-photon detections against a photon-number
/// resolving receiver: `q_m^B - Σ_{n≥2} p_n η^n`.
pub fn pnr_eve_numerator(pmf: &PhotonPmf, eta: Transmittance) -> f64 {
    let e = eta.value();
    let all_arrive: f64 = pmf.weights().skip(2).map(|(n, p)| p * e.powi(n as i32)).sum();
    (detected_fraction(pmf, eta).q_m_b - all_arrive).max(0.0)
}

/// Leak fraction of the binomial-regeneration attack among detected pulses.
pub fn spns_leak(pmf: &PhotonPmf, eta: Transmittance, detector: Detector) -> Result<f64> {
    let detected = detected_fraction(pmf, eta);
    if detected.total <= 0.0 {
        return Err(PnsError::DegenerateSource("no pulse is ever detected".into()));
    }
    let known = match detector {
        Detector::Threshold => detected.q_m_b,
        Detector::Pnr => pnr_eve_numerator(pmf, eta),
    };
    Ok(known / detected.total)
}

/// High-loss limit of the threshold leak,
/// `Σ_{n≥2} n p_n / (p_1 + Σ_{n≥2} n p_n)`, valid for any source.
pub fn asymptotic_leak(pmf: &PhotonPmf) -> Result<f64> {
    let multi: f64 = pmf.weights().skip(2).map(|(n, p)| n as f64 * p).sum();
    let denom = pmf.p(1) + multi;
    if denom <= 0.0 {
        return Err(PnsError::DegenerateSource("all-vacuum source".into()));
    }
    Ok(multi / denom)
}

/// For Poisson sources the high-loss limit collapses to `p_1 + p_m = 1 - p_0`.
/// Returns `None` for non-Poisson sources, where that identity does not hold.
pub fn poisson_asymptotic_leak(pmf: &PhotonPmf) -> Option<f64> {
    pmf.is_poisson().then(|| {
        let s = pmf.summarize();
        s.p1 + s.pm
    })
}

/// Largest transmittance at which the original splitting attack can keep the
/// receiver's count rate while holding a copy of every delivered bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompromiseThreshold {
    pub eta: f64,
    /// Set when the source has no single-photon component.
    pub unconditional: bool,
}

impl CompromiseThreshold {
    pub fn loss_db(&self) -> f64 {
        -10.0 * self.eta.log10()
    }
}

pub fn compromise_threshold(pmf: &PhotonPmf) -> CompromiseThreshold {
    let s = pmf.summarize();
    if s.p1 <= 0.0 {
        return CompromiseThreshold {
            eta: 1.0,
            unconditional: true,
        };
    }
    CompromiseThreshold {
        eta: (s.pm / s.p1).min(1.0),
        unconditional: false,
    }
}

/// All closed-form leak quantities for one source at one transmittance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakAnalytics {
    pub naive_leak: f64,
    pub detected_fraction: f64,
    pub q_m_b: f64,
    pub pnr_numerator: f64,
    pub spns_leak_threshold: f64,
    pub spns_leak_pnr: f64,
    pub asymptotic_leak: f64,
    pub compromise_eta: f64,
}

impl LeakAnalytics {
    pub fn evaluate(pmf: &PhotonPmf, eta: Transmittance) -> Result<Self> {
        let s = pmf.summarize();
        let detected = detected_fraction(pmf, eta);
        Ok(Self {
            naive_leak: naive_pns_leak(s.p1, s.pm)?,
            detected_fraction: detected.total,
            q_m_b: detected.q_m_b,
            pnr_numerator: pnr_eve_numerator(pmf, eta),
            spns_leak_threshold: spns_leak(pmf, eta, Detector::Threshold)?,
            spns_leak_pnr: spns_leak(pmf, eta, Detector::Pnr)?,
            asymptotic_leak: asymptotic_leak(pmf)?,
            compromise_eta: compromise_threshold(pmf).eta,
        })
    }
}

/// One source setting of a decoy scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Intensity {
    pub mean: f64,
    pub weight: f64,
    #[serde(skip)]
    pub pmf: PhotonPmf,
}

/// Alice's randomized source: intensity `i` is used with probability `α_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoyScheme {
    intensities: Vec<Intensity>,
}

const WEIGHT_SLACK: f64 = 1e-12;

impl DecoyScheme {
    /// Poisson intensities given as `(mean, weight)` pairs.
    pub fn poisson(settings: &[(f64, f64)], tail_tolerance: f64) -> Result<Self> {
        let pmfs = settings
            .iter()
            .map(|&(mean, weight)| Ok((PhotonPmf::poisson(mean, tail_tolerance)?, weight)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_pmfs(pmfs)
    }

    pub fn from_pmfs(entries: Vec<(PhotonPmf, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("decoy scheme needs at least one intensity"));
        }
        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_SLACK {
            return Err(invalid(format!("intensity weights sum to {total}, expected 1")));
        }
        let intensities: Vec<Intensity> = entries
            .into_iter()
            .map(|(pmf, weight)| {
                if !(weight > 0.0 && weight.is_finite()) {
                    return Err(invalid(format!("intensity weight must be positive, got {weight}")));
                }
                let mean = pmf.poisson_mean().unwrap_or_else(|| pmf.mean());
                Ok(Intensity { mean, weight, pmf })
            })
            .collect::<Result<_>>()?;
        for (i, a) in intensities.iter().enumerate() {
            if intensities[..i].iter().any(|b| b.mean == a.mean) {
                return Err(invalid(format!("duplicate intensity mean {}", a.mean)));
            }
        }
        Ok(Self { intensities })
    }

    pub fn single(pmf: PhotonPmf) -> Self {
        let mean = pmf.poisson_mean().unwrap_or_else(|| pmf.mean());
        Self {
            intensities: vec![Intensity { mean, weight: 1.0, pmf }],
        }
    }

    pub fn intensities(&self) -> &[Intensity] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    /// Index of the most frequently used intensity (the signal state).
    pub fn signal_index(&self) -> usize {
        self.intensities.iter().enumerate().fold(0, |best, (i, x)| {
            if x.weight > self.intensities[best].weight {
                i
            } else {
                best
            }
        })
    }
}

/// Posterior `λ_i(n)` that a pulse found to carry `n` photons came from
/// intensity `i`.
pub fn decoy_posterior(scheme: &DecoyScheme, n: usize) -> Result<Vec<f64>> {
    let joint: Vec<f64> = scheme
        .intensities()
        .iter()
        .map(|x| x.weight * x.pmf.likelihood(n))
        .collect();
    let evidence: f64 = joint.iter().sum();
    if evidence <= 0.0 {
        return Err(PnsError::UndefinedPosterior { n });
    }
    Ok(joint.into_iter().map(|j| j / evidence).collect())
}

/// Size of the deletion table; the last entry applies to every `n >= 8`.
pub const MAX_POLICY_PHOTONS: usize = 8;

/// Residual at or below which a deletion policy counts as feasible.
pub const POLICY_TOLERANCE: f64 = 1e-9;

/// Photon-number-dependent deletion probabilities for the Bayes-deletion
/// attack, with the yields they achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletionPolicy {
    /// `delete_prob[k]` is `d(k + 1)`; the last entry also covers all larger `n`.
    pub delete_prob: Vec<f64>,
    pub forward_eta: f64,
    pub achieved_yields: Vec<f64>,
    pub target_yields: Vec<f64>,
    pub residual: f64,
}

impl DeletionPolicy {
    /// Policy that deletes a fixed fraction of every non-vacuum pulse.
    pub fn uniform(delete: f64, forward_eta: Transmittance) -> Result<Self> {
        if !(0.0..=1.0).contains(&delete) {
            return Err(invalid(format!("deletion probability {delete} outside [0, 1]")));
        }
        Ok(Self {
            delete_prob: vec![delete; MAX_POLICY_PHOTONS],
            forward_eta: forward_eta.value(),
            achieved_yields: Vec::new(),
            target_yields: Vec::new(),
            residual: 0.0,
        })
    }

    /// `d(n)`; vacuum pulses are never deleted.
    pub fn delete_prob(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let last = self.delete_prob.len().saturating_sub(1);
        self.delete_prob.get((n - 1).min(last)).copied().unwrap_or(0.0)
    }

    pub fn is_feasible(&self) -> bool {
        self.residual <= POLICY_TOLERANCE
    }
}

/// Yield of one intensity when photon number `n` survives deletion with
/// probability `keep(n)` and then passes a line of transmittance `forward_eta`.
pub fn deletion_yield(pmf: &PhotonPmf, forward_eta: f64, keep: impl Fn(usize) -> f64) -> f64 {
    pmf.weights()
        .skip(1)
        .map(|(n, p)| p * keep(n) * (1.0 - (1.0 - forward_eta).powi(n as i32)))
        .sum()
}

/// Chooses `d(1), ..., d(7)` and a shared `d(n >= 8)` so each intensity's
/// yield matches its target as closely as possible in the max-norm.
///
/// Yields are linear in the keep probabilities `1 - d(n)`, but the columns
/// (one per photon number) are nearly collinear, which stalls plain
/// coordinate descent. The solver first runs a bounded-variable least-squares
/// active-set iteration whose free-set steps are minimum-norm SVD solves, so
/// the feasible set is reached exactly when it is non-empty. Coordinate passes
/// with exact one-dimensional minimax steps then tighten the max deviation.
/// Iteration starts from `d = 0` and moves by minimum-norm steps, so among
/// equally good policies one with little deletion is returned.
pub fn solve_deletion_policy(
    scheme: &DecoyScheme,
    forward_eta: Transmittance,
    target_yields: &[f64],
) -> Result<DeletionPolicy> {
    if target_yields.len() != scheme.len() {
        return Err(invalid(format!(
            "{} target yields for {} intensities",
            target_yields.len(),
            scheme.len()
        )));
    }
    if let Some(t) = target_yields.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(invalid(format!("target yield {t} outside [0, 1]")));
    }
    let f = forward_eta.value();
    let survive = |n: usize| 1.0 - (1.0 - f).powi(n as i32);

    // Y_i = Σ_n coef[i][n] keep_n
    let mut coef = vec![vec![0.0; MAX_POLICY_PHOTONS]; scheme.len()];
    for (i, x) in scheme.intensities().iter().enumerate() {
        for (n, p) in x.pmf.weights().skip(1) {
            coef[i][n.min(MAX_POLICY_PHOTONS) - 1] += p * survive(n);
        }
    }

    let mut keep = bounded_least_squares(&coef, target_yields);
    let mut resid: Vec<f64> = (0..scheme.len())
        .map(|i| dot(&coef[i], &keep) - target_yields[i])
        .collect();

    // Minimax refinement.
    for _ in 0..1_000 {
        let before = max_abs(&resid);
        for n in 0..MAX_POLICY_PHOTONS {
            let best = minimax_coordinate(&coef, &resid, n, keep[n]);
            let step = best - keep[n];
            if step != 0.0 {
                for (r, c) in resid.iter_mut().zip(&coef) {
                    *r += c[n] * step;
                }
                keep[n] = best;
            }
        }
        if before - max_abs(&resid) < 1e-16 {
            break;
        }
    }

    let achieved: Vec<f64> = resid.iter().zip(target_yields).map(|(r, t)| r + t).collect();
    Ok(DeletionPolicy {
        delete_prob: keep.iter().map(|k| 1.0 - k).collect(),
        forward_eta: f,
        achieved_yields: achieved,
        target_yields: target_yields.to_vec(),
        residual: max_abs(&resid),
    })
}

/// Active-set solver for `min ‖A k - t‖²` over `k ∈ [0, 1]^p`, started at
/// `k = 1`. Variables leave a bound when the gradient pulls them inward; the
/// free set is solved by a minimum-norm step and walked back to the box when
/// the step overshoots.
fn bounded_least_squares(coef: &[Vec<f64>], targets: &[f64]) -> Vec<f64> {
    let (m, p) = (coef.len(), MAX_POLICY_PHOTONS);
    let a = DMatrix::from_fn(m, p, |i, j| coef[i][j]);
    let t = DVector::from_column_slice(targets);
    let mut k = DVector::from_element(p, 1.0);
    let mut free = vec![false; p];
    let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);

    for _ in 0..64 {
        let r = &t - &a * &k;
        let grad = a.transpose() * &r;
        let entering = (0..p)
            .filter(|&j| !free[j])
            .filter(|&j| (k[j] >= 1.0 && grad[j] < 0.0) || (k[j] <= 0.0 && grad[j] > 0.0))
            .filter(|&j| grad[j].abs() > 1e-15 * scale * scale)
            .max_by(|&x, &y| grad[x].abs().total_cmp(&grad[y].abs()));
        let Some(j) = entering else { break };
        free[j] = true;

        for _ in 0..=p {
            let idx: Vec<usize> = (0..p).filter(|&j| free[j]).collect();
            if idx.is_empty() {
                break;
            }
            let a_free = a.select_columns(&idx);
            let r = &t - &a * &k;
            let svd = a_free.svd(true, true);
            let cutoff = svd.singular_values.max() * 1e-14;
            let Ok(step) = svd.solve(&r, cutoff) else { break };

            let mut alpha = 1.0f64;
            for (s, &j) in idx.iter().enumerate() {
                let z = k[j] + step[s];
                if z < 0.0 {
                    alpha = alpha.min(k[j] / (k[j] - z));
                } else if z > 1.0 {
                    alpha = alpha.min((1.0 - k[j]) / (z - k[j]));
                }
            }
            for (s, &j) in idx.iter().enumerate() {
                k[j] = (k[j] + alpha * step[s]).clamp(0.0, 1.0);
            }
            if alpha >= 1.0 {
                break;
            }
            for (s, &j) in idx.iter().enumerate() {
                let target = k[j] + (1.0 - alpha) * step[s];
                if (target < 0.0 && k[j] <= 1e-15) || (target > 1.0 && k[j] >= 1.0 - 1e-15) {
                    k[j] = k[j].round();
                    free[j] = false;
                }
            }
        }
    }
    k.iter().copied().collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Exact minimizer over `x ∈ [0, 1]` of `max_i |r_i + c_i[n] (x - current)|`.
/// The objective is convex piecewise-linear, so its minimum sits at an
/// endpoint, a root of one line, or a crossing of two lines.
fn minimax_coordinate(coef: &[Vec<f64>], resid: &[f64], n: usize, current: f64) -> f64 {
    // line i: a_i + b_i x
    let lines: Vec<(f64, f64)> = coef
        .iter()
        .zip(resid)
        .map(|(c, r)| (r - c[n] * current, c[n]))
        .collect();
    let objective = |x: f64| lines.iter().fold(0.0f64, |m, (a, b)| m.max((a + b * x).abs()));

    let mut candidates = vec![0.0, 1.0, current];
    for (i, &(a, b)) in lines.iter().enumerate() {
        if b != 0.0 {
            candidates.push(-a / b);
        }
        for &(a2, b2) in &lines[i + 1..] {
            // a + b x = ±(a2 + b2 x)
            if b != b2 {
                candidates.push((a2 - a) / (b - b2));
            }
            if b != -b2 {
                candidates.push(-(a + a2) / (b + b2));
            }
        }
    }
    let mut best = current;
    let mut best_val = objective(current);
    for x in candidates
        .into_iter()
        .filter(|x| x.is_finite())
        .map(|x| x.clamp(0.0, 1.0))
    {
        let v = objective(x);
        // ties go to more keeping, i.e. less deletion
        if v < best_val - 1e-18 || (v <= best_val && x > best) {
            best = x;
            best_val = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photon_stats::DEFAULT_TAIL_TOLERANCE;
    use approx::assert_abs_diff_eq;

    fn poisson(mu: f64) -> PhotonPmf {
        PhotonPmf::poisson(mu, DEFAULT_TAIL_TOLERANCE).unwrap()
    }

    fn deployed() -> PhotonPmf {
        poisson(-(0.6f64).ln())
    }

    fn eta(v: f64) -> Transmittance {
        Transmittance::new(v).unwrap()
    }

    #[test]
    fn naive_leak_values() {
        let s = poisson(0.5).summarize();
        assert_abs_diff_eq!(naive_pns_leak(s.p1, s.pm).unwrap(), 0.2292, epsilon = 1e-4);
        let s = deployed().summarize();
        assert_abs_diff_eq!(naive_pns_leak(s.p1, s.pm).unwrap(), 0.2338, epsilon = 1e-4);
        assert_eq!(naive_pns_leak(0.4, 0.0).unwrap(), 0.0);
        assert!(matches!(naive_pns_leak(0.0, 0.0), Err(PnsError::DegenerateSource(_))));
    }

    #[test]
    fn detected_fraction_limits() {
        let pmf = deployed();
        let d = detected_fraction(&pmf, eta(1.0));
        assert_abs_diff_eq!(d.q_m_b, pmf.summarize().pm, epsilon = 1e-12);
        let d = detected_fraction(&pmf, eta(1e-12));
        assert!(d.total < 1e-11);
    }

    #[test]
    fn pnr_numerator_edges() {
        assert_abs_diff_eq!(pnr_eve_numerator(&deployed(), eta(1.0)), 0.0, epsilon = 1e-15);
        let singles = PhotonPmf::from_probs(vec![0.5, 0.5]).unwrap();
        assert_eq!(pnr_eve_numerator(&singles, eta(0.3)), 0.0);
    }

    #[test]
    fn deployed_system_leaks() {
        let pmf = deployed();
        let nec = spns_leak(&pmf, Transmittance::from_db(4.0).unwrap(), Detector::Threshold).unwrap();
        assert_abs_diff_eq!(nec, 0.336_924_588_312_723, epsilon = 1e-10);
        let toshiba = spns_leak(&pmf, eta(0.1), Detector::Threshold).unwrap();
        assert_abs_diff_eq!(toshiba, 0.384_544_765_551_983, epsilon = 1e-10);
        let pnr = spns_leak(&pmf, eta(0.1), Detector::Pnr).unwrap();
        assert_abs_diff_eq!(pnr, 0.368_554_132_510_645, epsilon = 1e-10);
    }

    #[test]
    fn spns_degenerate() {
        let vacuum = PhotonPmf::point_mass(0);
        assert!(spns_leak(&vacuum, eta(0.5), Detector::Threshold).is_err());
        assert!(asymptotic_leak(&vacuum).is_err());
    }

    #[test]
    fn asymptotic_values() {
        assert_abs_diff_eq!(asymptotic_leak(&deployed()).unwrap(), 0.4, epsilon = 1e-11);
        let half = poisson(0.5);
        assert_abs_diff_eq!(asymptotic_leak(&half).unwrap(), 1.0 - (-0.5f64).exp(), epsilon = 1e-11);
        assert_abs_diff_eq!(poisson_asymptotic_leak(&half).unwrap(), 0.3935, epsilon = 1e-4);
        let singles = PhotonPmf::from_probs(vec![0.2, 0.8]).unwrap();
        assert_eq!(asymptotic_leak(&singles).unwrap(), 0.0);
        assert_eq!(poisson_asymptotic_leak(&singles), None);
    }

    #[test]
    fn compromise_values() {
        let c = compromise_threshold(&deployed());
        assert_abs_diff_eq!(c.eta, 0.305_076_792_647_478, epsilon = 1e-10);
        assert_abs_diff_eq!(c.loss_db(), 5.1559, epsilon = 1e-4);
        let singles = PhotonPmf::from_probs(vec![0.5, 0.5]).unwrap();
        assert_eq!(compromise_threshold(&singles).eta, 0.0);
        let even = PhotonPmf::from_probs(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(compromise_threshold(&even).eta, 1.0);
        let multi_only = PhotonPmf::from_probs(vec![0.5, 0.0, 0.5]).unwrap();
        assert!(compromise_threshold(&multi_only).unconditional);
    }

    #[test]
    fn posterior_examples() {
        let single = DecoyScheme::single(poisson(0.5));
        for n in 0..6 {
            assert_eq!(decoy_posterior(&single, n).unwrap(), vec![1.0]);
        }
        let scheme = DecoyScheme::poisson(&[(0.5, 0.5), (0.1, 0.5)], DEFAULT_TAIL_TOLERANCE).unwrap();
        assert_abs_diff_eq!(
            decoy_posterior(&scheme, 2).unwrap()[0],
            0.943_687_355_828_906,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            decoy_posterior(&scheme, 0).unwrap()[0],
            0.401_312_339_887_548,
            epsilon = 1e-12
        );
        let ones = DecoyScheme::single(PhotonPmf::point_mass(1));
        assert_eq!(decoy_posterior(&ones, 3), Err(PnsError::UndefinedPosterior { n: 3 }));
    }

    #[test]
    fn scheme_validation() {
        assert!(DecoyScheme::poisson(&[(0.5, 0.7), (0.1, 0.4)], 1e-12).is_err());
        assert!(DecoyScheme::poisson(&[(0.5, 0.5), (0.5, 0.5)], 1e-12).is_err());
        assert!(DecoyScheme::poisson(&[(0.5, 1.0), (0.1, 0.0)], 1e-12).is_err());
        assert!(DecoyScheme::poisson(&[], 1e-12).is_err());
        let s = DecoyScheme::poisson(&[(0.1, 0.2), (0.5, 0.7), (0.002, 0.1)], 1e-12).unwrap();
        assert_eq!(s.signal_index(), 1);
    }

    #[test]
    fn policy_no_attack_fixed_point() {
        let scheme = DecoyScheme::single(poisson(0.5));
        let honest = 1.0 - (-0.05f64).exp();
        let p = solve_deletion_policy(&scheme, eta(0.1), &[honest]).unwrap();
        assert!(p.residual < 1e-12);
        assert!(p.delete_prob.iter().all(|&d| d == 0.0));
        assert!(p.is_feasible());
    }

    #[test]
    fn policy_delete_everything() {
        let scheme = DecoyScheme::poisson(&[(0.5, 0.5), (0.1, 0.5)], DEFAULT_TAIL_TOLERANCE).unwrap();
        let p = solve_deletion_policy(&scheme, eta(1.0), &[0.0, 0.0]).unwrap();
        assert!(p.is_feasible(), "residual {}", p.residual);
        for d in &p.delete_prob {
            assert_abs_diff_eq!(*d, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn policy_rejects_bad_targets() {
        let scheme = DecoyScheme::single(poisson(0.5));
        assert!(solve_deletion_policy(&scheme, eta(1.0), &[0.1, 0.2]).is_err());
        assert!(solve_deletion_policy(&scheme, eta(1.0), &[1.5]).is_err());
    }

    #[test]
    fn policy_reports_infeasibility() {
        // Lossless forwarding cannot raise a yield above 1 - p0.
        let scheme = DecoyScheme::single(poisson(0.1));
        let p = solve_deletion_policy(&scheme, eta(1.0), &[0.5]).unwrap();
        assert!(!p.is_feasible());
        assert_abs_diff_eq!(p.residual, 0.5 - (1.0 - (-0.1f64).exp()), epsilon = 1e-9);
    }

    #[test]
    fn analytics_bundle_at_unit_transmittance() {
        let a = LeakAnalytics::evaluate(&poisson(0.5), eta(1.0)).unwrap();
        assert_abs_diff_eq!(a.spns_leak_threshold, a.naive_leak, epsilon = 1e-10);
        assert!(a.spns_leak_pnr <= a.spns_leak_threshold);
    }
}
