//! N-modular redundant input voter.
//!
//! The voter receives one reading per redundant unit every cycle, identifies
//! deviation faults by mutual comparison, isolates units whose faults persist
//! for `persistence_lmt` consecutive cycles, and selects a prime unit whose
//! reading is forwarded together with a validity grade and an output age.
//!
//! Alongside the voter itself the crate ships a seeded fault-injection
//! simulator ([`scenario`]) and an independent requirements checker
//! ([`oracle`]) that validates traces and exhaustively enumerated inputs.

pub mod config;
pub mod domain;
pub mod error;
pub mod fault_id;
pub mod oracle;
pub mod scenario;
pub mod unit_update;
pub mod voter;

pub use config::{validate_config, VoterConfig};
pub use domain::{
    adiff, is_healthy_data, miscompares, IsolationStatus, MiscompStatus, Reading, SignalHealth,
    UnitData, UnitId, UnitOutput, UnitStatus, ValidityStatus,
};
pub use error::{ConfigError, DomainError, VoterError};
pub use fault_id::{classify_cycle, CycleClassification};
pub use oracle::{Finding, Verdict};
pub use scenario::{Scenario, TraceRecord};
pub use unit_update::build_updated_list;
pub use voter::{AbstractState, VoterState};
