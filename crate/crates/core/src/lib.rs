//! Photon-number-splitting attacks on decoy-state BB84.
//!
//! The crate has two halves that check each other:
//!
//! * [`analytics`] evaluates the leak formulas in closed form: the naive
//!   split-and-pass leak, the detected fraction and attacker share under
//!   binomial regeneration (SPNS), the high-loss limit, the full-compromise
//!   transmittance, the Bayesian decoy posterior and a deletion-policy solver.
//! * [`engine`] and [`session`] simulate the protocol pulse by pulse, with
//!   per-trial random substreams so that results are reproducible regardless
//!   of thread count, and report yields, QBER, the decoy consistency test and
//!   the attacker's knowledge ledger.
//!
//! ```
//! use pns_core::{analytics, Detector, PhotonPmf, Transmittance};
//!
//! let source = PhotonPmf::poisson(-(0.6f64).ln(), 1e-12).unwrap();
//! let leak = analytics::spns_leak(&source, Transmittance::from_db(10.0).unwrap(), Detector::Threshold).unwrap();
//! assert!((leak - 0.3845).abs() < 1e-4);
//! ```

pub mod analytics;
pub mod config;
pub mod engine;
mod error;
pub mod photon_stats;
pub mod report;
pub mod session;
pub mod stats;

pub use analytics::{DecoyScheme, DeletionPolicy, Detector, LeakAnalytics};
pub use engine::{run_trials, AttackStrategy, AttackVariant, PulseOutcome, TrialEngine};
pub use error::{PnsError, Result};
pub use photon_stats::{PhotonPmf, RandomStream, Transmittance};
pub use session::{run_session, SessionConfig, SessionReport};
