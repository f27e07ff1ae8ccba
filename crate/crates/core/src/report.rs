//! Rendering of analytics and session reports as JSON, CSV and text tables,
//! plus the reproduction of the published leak figures.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::analytics::{asymptotic_leak, naive_pns_leak, spns_leak, DecoyScheme, Detector, LeakAnalytics};
use crate::engine::AttackStrategy;
use crate::error::Result;
use crate::photon_stats::{PhotonPmf, PhotonSummary, Transmittance, DEFAULT_TAIL_TOLERANCE};
use crate::session::{leak_accounting, run_session, SessionConfig, SessionReport};

/// Fixed CSV schema of the per-intensity table.
pub const CSV_COLUMNS: [&str; 11] = [
    "intensity",
    "pulses",
    "detections",
    "yield",
    "expected_yield",
    "z",
    "sifted",
    "errors",
    "qber",
    "eve_known",
    "leak_fraction",
];

const SIGNIFICANT_DIGITS: i32 = 6;

/// Formats `x` with at most six significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT_DIGITS - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn round_sig(x: f64) -> f64 {
    sig6(x).parse().unwrap_or(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// Serializes `value` to pretty JSON with floats rounded to six significant digits.
pub fn to_rounded_json<T: Serialize>(value: &T) -> String {
    fn walk(v: Value) -> Value {
        match v {
            Value::Number(n) if !n.is_u64() && !n.is_i64() => n
                .as_f64()
                .and_then(|f| serde_json::Number::from_f64(round_sig(f)))
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Value::Array(a) => Value::Array(a.into_iter().map(walk).collect()),
            Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, walk(v))).collect()),
            other => other,
        }
    }
    let v = serde_json::to_value(value).expect("report serializes");
    serde_json::to_string_pretty(&walk(v)).expect("json renders")
}

pub fn session_json(report: &SessionReport) -> String {
    #[derive(Serialize)]
    struct Summary<'a> {
        #[serde(flatten)]
        report: &'a SessionReport,
        leak_accounting: Option<crate::session::LeakAccounting>,
    }
    to_rounded_json(&Summary {
        report,
        leak_accounting: leak_accounting(report).ok(),
    })
}

pub fn session_csv(report: &SessionReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in &report.intensities {
        w.write_record([
            sig6(r.mean),
            r.pulses_sent.to_string(),
            r.detections.to_string(),
            sig6(r.observed_yield),
            sig6(r.expected_yield),
            opt(r.z_score),
            r.sifted_bits.to_string(),
            r.bit_errors.to_string(),
            opt(r.qber),
            r.eve_known_bits.to_string(),
            opt(r.leak_fraction),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn session_table(report: &SessionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>10} {:>10} {:>10} {:>12} {:>12} {:>7} {:>9} {:>7} {:>9} {:>9} {:>9}",
        "mean", "pulses", "detected", "yield", "expected", "z", "sifted", "errors", "qber", "eve", "leak"
    );
    for r in &report.intensities {
        let _ = writeln!(
            s,
            "{:>10} {:>10} {:>10} {:>12} {:>12} {:>7} {:>9} {:>7} {:>9} {:>9} {:>9}",
            sig6(r.mean),
            r.pulses_sent,
            r.detections,
            sig6(r.observed_yield),
            sig6(r.expected_yield),
            opt(r.z_score.map(|z| (z * 100.0).round() / 100.0)),
            r.sifted_bits,
            r.bit_errors,
            opt(r.qber),
            r.eve_known_bits,
            opt(r.leak_fraction),
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "sifted bits        {}", report.sifted_total);
    let _ = writeln!(s, "bit errors         {}", report.bit_errors);
    let _ = writeln!(s, "qber               {}", opt(report.qber));
    let _ = writeln!(s, "eve known bits     {}", report.eve_known_bits);
    let _ = writeln!(s, "leak fraction      {}", opt(report.leak_fraction));
    let _ = writeln!(s, "analytic leak      {}", opt(report.analytic_mixture_leak));
    if let Ok(acc) = leak_accounting(report) {
        let _ = writeln!(s, "deviation (sigma)  {:.2}", acc.agreement_sigma);
    }
    let _ = writeln!(
        s,
        "decoy test         {} (|z| < {})",
        if report.decoy_test_passed { "passed" } else { "FAILED" },
        sig6(report.decoy_test.z_critical)
    );
    s
}

/// Closed-form analytics for one intensity of a scheme.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticRow {
    pub mean: f64,
    pub weight: f64,
    pub transmittance: f64,
    pub loss_db: f64,
    #[serde(flatten)]
    pub summary: PhotonSummary,
    #[serde(flatten)]
    pub leaks: LeakAnalytics,
    /// Loss at or above which the original splitting attack is undetectable by count rate.
    pub compromise_loss_db: f64,
    /// `1 - p_0`, present for Poisson sources only.
    pub poisson_asymptotic_leak: Option<f64>,
}

pub fn analytic_rows(scheme: &DecoyScheme, eta: Transmittance) -> Result<Vec<AnalyticRow>> {
    scheme
        .intensities()
        .iter()
        .map(|x| {
            let leaks = LeakAnalytics::evaluate(&x.pmf, eta)?;
            Ok(AnalyticRow {
                mean: x.mean,
                weight: x.weight,
                transmittance: eta.value(),
                loss_db: eta.loss_db(),
                summary: x.pmf.summarize(),
                compromise_loss_db: -10.0 * leaks.compromise_eta.log10(),
                poisson_asymptotic_leak: crate::analytics::poisson_asymptotic_leak(&x.pmf),
                leaks,
            })
        })
        .collect()
}

pub fn analytic_csv(rows: &[AnalyticRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "mean",
        "weight",
        "loss_db",
        "p0",
        "p1",
        "pm",
        "naive_leak",
        "q_m_b",
        "detected_fraction",
        "pnr_numerator",
        "spns_leak_threshold",
        "spns_leak_pnr",
        "asymptotic_leak",
        "compromise_eta",
    ])
    .expect("in-memory write");
    for r in rows {
        let l = &r.leaks;
        w.write_record(
            [
                r.mean,
                r.weight,
                r.loss_db,
                r.summary.p0,
                r.summary.p1,
                r.summary.pm,
                l.naive_leak,
                l.q_m_b,
                l.detected_fraction,
                l.pnr_numerator,
                l.spns_leak_threshold,
                l.spns_leak_pnr,
                l.asymptotic_leak,
                l.compromise_eta,
            ]
            .map(sig6),
        )
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn analytic_table(rows: &[AnalyticRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let l = &r.leaks;
        let _ = writeln!(
            s,
            "source mean {}  weight {}  loss {} dB (eta {})",
            sig6(r.mean),
            sig6(r.weight),
            sig6(r.loss_db),
            sig6(r.transmittance)
        );
        let _ = writeln!(
            s,
            "  p0, p1, pm                 {}, {}, {}",
            sig6(r.summary.p0),
            sig6(r.summary.p1),
            sig6(r.summary.pm)
        );
        let _ = writeln!(s, "  naive split leak           {}", sig6(l.naive_leak));
        let _ = writeln!(
            s,
            "  detected fraction          {}  (q_m_B {})",
            sig6(l.detected_fraction),
            sig6(l.q_m_b)
        );
        let _ = writeln!(s, "  PNR attacker numerator     {}", sig6(l.pnr_numerator));
        let _ = writeln!(s, "  SPNS leak, threshold       {}", sig6(l.spns_leak_threshold));
        let _ = writeln!(s, "  SPNS leak, PNR             {}", sig6(l.spns_leak_pnr));
        let _ = writeln!(s, "  high-loss limit            {}", sig6(l.asymptotic_leak));
        let _ = writeln!(
            s,
            "  full compromise below eta  {} ({} dB)",
            sig6(l.compromise_eta),
            sig6(r.compromise_loss_db)
        );
    }
    s
}

/// Monte Carlo check attached to a reproduced figure.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonteCarloCheck {
    pub transmittance: f64,
    pub pulses: u64,
    pub sifted: u64,
    pub empirical: f64,
    /// Analytic leak at the simulated transmittance.
    pub expected: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproductionRow {
    pub quantity: &'static str,
    pub setting: &'static str,
    pub analytic: f64,
    pub published: f64,
    pub monte_carlo: MonteCarloCheck,
}

/// Transmittance used to confirm the high-loss limit by simulation.
pub const HIGH_LOSS_CHECK_ETA: f64 = 0.01;

/// Re-derives the four published leak figures and confirms each with a
/// binomial-regeneration session of `pulses` pulses against threshold detectors.
pub fn reproduce_published(pulses: u64, seed: u64) -> Result<Vec<ReproductionRow>> {
    let half = PhotonPmf::poisson(0.5, DEFAULT_TAIL_TOLERANCE)?;
    let deployed = PhotonPmf::poisson(-(0.6f64).ln(), DEFAULT_TAIL_TOLERANCE)?;
    let s = half.summarize();
    let nec = Transmittance::from_db(4.0)?;
    let toshiba = Transmittance::from_db(10.0)?;
    let far = Transmittance::new(HIGH_LOSS_CHECK_ETA)?;

    let check = |pmf: &PhotonPmf, eta: Transmittance, salt: u64| -> Result<MonteCarloCheck> {
        let cfg = SessionConfig::new(
            DecoyScheme::single(pmf.clone()),
            eta,
            AttackStrategy::spns(Detector::Threshold),
        )
        .pulses(pulses)
        .seed(seed.wrapping_add(salt));
        let report = run_session(&cfg)?;
        let acc = leak_accounting(&report)?;
        Ok(MonteCarloCheck {
            transmittance: eta.value(),
            pulses,
            sifted: report.sifted_total,
            empirical: acc.leak_fraction,
            expected: acc.analytic,
            sigma: acc.agreement_sigma,
        })
    };

    Ok(vec![
        ReproductionRow {
            quantity: "naive split leak",
            setting: "Poisson <n> = 0.5, lossless",
            analytic: naive_pns_leak(s.p1, s.pm)?,
            published: 0.23,
            monte_carlo: check(&half, Transmittance::lossless(), 1)?,
        },
        ReproductionRow {
            quantity: "SPNS leak",
            setting: "p0 = 0.6, 4 dB (NEC)",
            analytic: spns_leak(&deployed, nec, Detector::Threshold)?,
            published: 0.33,
            monte_carlo: check(&deployed, nec, 2)?,
        },
        ReproductionRow {
            quantity: "SPNS leak",
            setting: "p0 = 0.6, 10 dB (Toshiba)",
            analytic: spns_leak(&deployed, toshiba, Detector::Threshold)?,
            published: 0.38,
            monte_carlo: check(&deployed, toshiba, 3)?,
        },
        ReproductionRow {
            quantity: "high-loss limit",
            setting: "p0 = 0.6, eta -> 0",
            analytic: asymptotic_leak(&deployed)?,
            published: 0.40,
            monte_carlo: check(&deployed, far, 4)?,
        },
    ])
}

pub fn reproduction_table(rows: &[ReproductionRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18} {:<28} {:>9} {:>9} {:>9} {:>12} {:>8} {:>8}",
        "quantity", "setting", "analytic", "published", "MC leak", "MC expected", "MC eta", "sigma"
    );
    for r in rows {
        let mc = &r.monte_carlo;
        let _ = writeln!(
            s,
            "{:<18} {:<28} {:>8.1}% {:>8.0}% {:>8.1}% {:>11.1}% {:>8} {:>8.2}",
            r.quantity,
            r.setting,
            100.0 * r.analytic,
            100.0 * r.published,
            100.0 * mc.empirical,
            100.0 * mc.expected,
            sig6(mc.transmittance),
            mc.sigma
        );
    }
    s
}

pub fn reproduction_csv(rows: &[ReproductionRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "quantity",
        "setting",
        "analytic",
        "published",
        "mc_eta",
        "mc_pulses",
        "mc_sifted",
        "mc_leak",
        "mc_expected",
        "mc_sigma",
    ])
    .expect("in-memory write");
    for r in rows {
        let mc = &r.monte_carlo;
        w.write_record([
            r.quantity.to_string(),
            r.setting.to_string(),
            sig6(r.analytic),
            sig6(r.published),
            sig6(mc.transmittance),
            mc.pulses.to_string(),
            mc.sifted.to_string(),
            sig6(mc.empirical),
            sig6(mc.expected),
            sig6(mc.sigma),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
