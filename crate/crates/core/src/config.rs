//! Run configuration documents.
//!
//! A configuration is a single JSON object. The minimal form is
//!
//! ```json
//! { "source": { "poisson": 0.5 }, "loss_db": 10, "attack": "spns" }
//! ```
//!
//! Channel loss is given as exactly one of `loss_db` or `transmittance`.
//! Unknown fields are rejected and every error names the offending field.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{solve_deletion_policy, DecoyScheme, Detector};
use crate::engine::{AttackStrategy, AttackVariant};
use crate::photon_stats::{PhotonPmf, Transmittance, DEFAULT_TAIL_TOLERANCE};
use crate::session::{honest_yield, SessionConfig, DEFAULT_Z_CRITICAL};
use crate::PnsError;

pub const DEFAULT_TRIALS: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] PnsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SourceSpec {
    /// Single Poisson source of the given mean.
    Poisson(f64),
    /// Poisson decoy scheme.
    Decoy(Vec<IntensitySpec>),
    /// Explicit photon-number probabilities `p_0, p_1, ...`.
    Pmf(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitySpec {
    pub mean: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "AttackRepr")]
pub struct AttackSpec {
    pub kind: AttackVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_assumption: Option<Detector>,
    #[serde(default)]
    pub intercept_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lossless_forwarding: Option<bool>,
    /// Yields the Bayes-deletion attacker aims for; honest yields if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_yields: Option<Vec<f64>>,
}

impl Default for AttackSpec {
    fn default() -> Self {
        AttackVariant::None.into()
    }
}

impl From<AttackVariant> for AttackSpec {
    fn from(kind: AttackVariant) -> Self {
        Self {
            kind,
            detector_assumption: None,
            intercept_fraction: 0.0,
            lossless_forwarding: None,
            target_yields: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AttackRepr {
    Kind(AttackVariant),
    Full(AttackFields),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackFields {
    kind: AttackVariant,
    #[serde(default)]
    detector_assumption: Option<Detector>,
    #[serde(default)]
    intercept_fraction: f64,
    #[serde(default)]
    lossless_forwarding: Option<bool>,
    #[serde(default)]
    target_yields: Option<Vec<f64>>,
}

impl From<AttackRepr> for AttackSpec {
    fn from(repr: AttackRepr) -> Self {
        match repr {
            AttackRepr::Kind(kind) => kind.into(),
            AttackRepr::Full(f) => Self {
                kind: f.kind,
                detector_assumption: f.detector_assumption,
                intercept_fraction: f.intercept_fraction,
                lossless_forwarding: f.lossless_forwarding,
                target_yields: f.target_yields,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Table,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl OutputSpec {
    fn is_empty(&self) -> bool {
        self.json.is_none() && self.csv.is_none()
    }
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS
}

fn default_z() -> f64 {
    DEFAULT_Z_CRITICAL
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmittance: Option<f64>,
    #[serde(default)]
    pub detector: Detector,
    #[serde(default)]
    pub attack: AttackSpec,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_z")]
    pub z_critical: f64,
    #[serde(default)]
    pub bonferroni: bool,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
    #[serde(default, skip_serializing_if = "OutputSpec::is_empty")]
    pub output: OutputSpec,
}

/// Parses and validates a configuration document, applying defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

/// Canonical JSON form; `parse_config(&to_json(c))` reproduces `c`.
pub fn to_json(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

impl RunConfig {
    /// Configuration with every default applied.
    pub fn new(source: SourceSpec, loss_db: f64) -> Self {
        Self {
            source,
            loss_db: Some(loss_db),
            transmittance: None,
            detector: Detector::Threshold,
            attack: AttackSpec::default(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            z_critical: DEFAULT_Z_CRITICAL,
            bonferroni: false,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            output: OutputSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let schema = |path: &str, message: String| ConfigError::Schema {
            path: path.into(),
            message,
        };
        self.channel()?;
        self.scheme()?;
        if self.trials == 0 {
            return Err(schema("trials", "must be at least 1".into()));
        }
        if self.z_critical.is_nan() || self.z_critical <= 0.0 {
            return Err(schema(
                "z_critical",
                format!("must be positive, got {}", self.z_critical),
            ));
        }
        let a = &self.attack;
        if !(0.0..=1.0).contains(&a.intercept_fraction) {
            return Err(schema(
                "attack.intercept_fraction",
                format!("must lie in [0, 1], got {}", a.intercept_fraction),
            ));
        }
        if let Some(targets) = &a.target_yields {
            if a.kind != AttackVariant::BayesDelete {
                return Err(schema("attack.target_yields", "only used by bayes_delete".into()));
            }
            if targets.len() != self.scheme()?.len() {
                return Err(schema(
                    "attack.target_yields",
                    format!("expected one target per intensity ({})", self.scheme()?.len()),
                ));
            }
        }
        Ok(())
    }

    /// Channel transmittance from whichever loss field is present.
    pub fn channel(&self) -> Result<Transmittance, ConfigError> {
        match (self.loss_db, self.transmittance) {
            (Some(_), Some(_)) => Err(ConfigError::Invalid(
                "loss given both as loss_db and transmittance; use exactly one".into(),
            )),
            (None, None) => Err(ConfigError::Invalid(
                "channel loss missing; set loss_db or transmittance".into(),
            )),
            (Some(db), None) => Transmittance::from_db(db).map_err(|e| ConfigError::Schema {
                path: "loss_db".into(),
                message: e.to_string(),
            }),
            (None, Some(eta)) => Transmittance::new(eta).map_err(|e| ConfigError::Schema {
                path: "transmittance".into(),
                message: e.to_string(),
            }),
        }
    }

    pub fn scheme(&self) -> Result<DecoyScheme, ConfigError> {
        let at = |path: &str| {
            let path = path.to_string();
            move |e: PnsError| ConfigError::Schema {
                path: path.clone(),
                message: e.to_string(),
            }
        };
        match &self.source {
            SourceSpec::Poisson(mean) => Ok(DecoyScheme::single(
                PhotonPmf::poisson(*mean, self.tail_tolerance).map_err(at("source.poisson"))?,
            )),
            SourceSpec::Decoy(list) => {
                let settings: Vec<(f64, f64)> = list.iter().map(|x| (x.mean, x.weight)).collect();
                DecoyScheme::poisson(&settings, self.tail_tolerance).map_err(at("source.decoy"))
            }
            SourceSpec::Pmf(probs) => Ok(DecoyScheme::single(
                PhotonPmf::from_probs(probs.clone()).map_err(at("source.pmf"))?,
            )),
        }
    }

    /// Builds the attack, solving a deletion policy when one is needed.
    pub fn attack_strategy(&self) -> Result<AttackStrategy, ConfigError> {
        let requested = &self.attack;
        let assumed = requested.detector_assumption.unwrap_or(self.detector);
        let mut attack = match requested.kind {
            AttackVariant::None => AttackStrategy::none(),
            AttackVariant::OriginalPns => AttackStrategy::original_pns(),
            AttackVariant::Spns => AttackStrategy::spns(assumed),
            AttackVariant::BayesDelete => {
                let channel = self.channel()?;
                let scheme = self.scheme()?;
                let lossless = requested.lossless_forwarding.unwrap_or(true);
                let forward = if lossless { Transmittance::lossless() } else { channel };
                let targets = match &requested.target_yields {
                    Some(t) => t.clone(),
                    None => scheme
                        .intensities()
                        .iter()
                        .map(|x| honest_yield(&x.pmf, channel))
                        .collect(),
                };
                let policy = solve_deletion_policy(&scheme, forward, &targets)?;
                AttackStrategy::bayes_delete(policy, assumed)
            }
        };
        if let Some(lossless) = requested.lossless_forwarding {
            attack = attack.with_lossless_forwarding(lossless);
        }
        attack = attack.with_intercept(requested.intercept_fraction);
        attack.validate()?;
        Ok(attack)
    }

    pub fn session_config(&self) -> Result<SessionConfig, ConfigError> {
        Ok(SessionConfig {
            scheme: self.scheme()?,
            channel: self.channel()?,
            detector: self.detector,
            attack: self.attack_strategy()?,
            pulses: self.trials,
            seed: self.seed,
            z_critical: self.z_critical,
            bonferroni: self.bonferroni,
        })
    }
}
