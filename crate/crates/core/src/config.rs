//! Designer-tunable voter parameters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::UnitId;
use crate::error::ConfigError;

/// Parameters fixed for the lifetime of a voter.
///
/// Construction goes through [`VoterConfig::new`] or [`validate_config`], so
/// every value of this type satisfies:
///
/// * `persistence_lmt >= 2`
/// * `min_required >= max_simul_fault + 1`
/// * `num_units >= 2 * max_simul_fault + 1`
/// * `num_units >= min_required`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct VoterConfig {
    num_units: usize,
    delta: u64,
    persistence_lmt: u32,
    max_simul_fault: usize,
    min_required: usize,
}

impl VoterConfig {
    /// Builds a config; `min_required` defaults to `max_simul_fault + 1`.
    pub fn new(
        num_units: usize,
        delta: u64,
        persistence_lmt: u32,
        max_simul_fault: usize,
        min_required: Option<usize>,
    ) -> Result<Self, ConfigError> {
        if persistence_lmt < 2 {
            return Err(bound(
                "persistence_lmt",
                format!("must be at least 2 to tolerate transient faults (got {persistence_lmt})"),
            ));
        }
        if max_simul_fault == 0 {
            return Err(bound("max_simul_fault", "must be positive".to_string()));
        }
        if num_units == 0 {
            return Err(bound("num_units", "must be positive".to_string()));
        }
        if num_units > u32::MAX as usize {
            return Err(bound("num_units", format!("too large ({num_units})")));
        }
        let needed = 2 * max_simul_fault + 1;
        if num_units < needed {
            return Err(bound(
                "num_units",
                format!(
                    "must be at least 2*max_simul_fault+1 = {needed} (got {num_units})"
                ),
            ));
        }
        let min_required = min_required.unwrap_or(max_simul_fault + 1);
        if min_required < max_simul_fault + 1 {
            return Err(bound(
                "min_required",
                format!(
                    "must be at least max_simul_fault+1 = {} (got {min_required})",
                    max_simul_fault + 1
                ),
            ));
        }
        if min_required > num_units {
            return Err(bound(
                "min_required",
                format!("must not exceed num_units = {num_units} (got {min_required})"),
            ));
        }
        Ok(VoterConfig {
            num_units,
            delta,
            persistence_lmt,
            max_simul_fault,
            min_required,
        })
    }

    pub fn num_units(&self) -> usize {
        self.num_units
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn persistence_lmt(&self) -> u32 {
        self.persistence_lmt
    }

    pub fn max_simul_fault(&self) -> usize {
        self.max_simul_fault
    }

    pub fn min_required(&self) -> usize {
        self.min_required
    }

    /// Configured unit ids, `1..=num_units`, in port order.
    pub fn unit_ids(&self) -> impl Iterator<Item = UnitId> + Clone {
        (1..=self.num_units as u32).map(UnitId)
    }

    /// Age reported while the voter is `not_valid`.
    pub fn not_valid_age(&self) -> u32 {
        2 * self.persistence_lmt
    }
}

fn bound(field: &'static str, reason: String) -> ConfigError {
    ConfigError::Bound { field, reason }
}

const FIELDS: [&str; 5] = [
    "num_units",
    "delta",
    "persistence_lmt",
    "max_simul_fault",
    "min_required",
];

/// Validates a name → integer map into a [`VoterConfig`].
///
/// `min_required` is optional. Every other field is required, negative or
/// oversized values are rejected, and unknown keys are an error.
pub fn validate_config(raw: &BTreeMap<String, i64>) -> Result<VoterConfig, ConfigError> {
    if let Some(unknown) = raw.keys().find(|k| !FIELDS.contains(&k.as_str())) {
        return Err(ConfigError::Unknown(unknown.clone()));
    }
    fn get(raw: &BTreeMap<String, i64>, field: &'static str) -> Result<Option<u64>, ConfigError> {
        match raw.get(field) {
            None => Ok(None),
            Some(&v) if v < 0 => Err(bound(field, format!("must be non-negative (got {v})"))),
            Some(&v) => Ok(Some(v as u64)),
        }
    }
    let req = |field: &'static str| get(raw, field)?.ok_or(ConfigError::Missing(field));
    let to_u32 = |field: &'static str, v: u64| {
        u32::try_from(v).map_err(|_| bound(field, format!("too large ({v})")))
    };
    let to_usize = |field: &'static str, v: u64| {
        usize::try_from(v).map_err(|_| bound(field, format!("too large ({v})")))
    };

    let num_units = to_usize("num_units", req("num_units")?)?;
    let delta = req("delta")?;
    let persistence_lmt = to_u32("persistence_lmt", req("persistence_lmt")?)?;
    let max_simul_fault = to_usize("max_simul_fault", req("max_simul_fault")?)?;
    let min_required = get(raw, "min_required")?
        .map(|v| to_usize("min_required", v))
        .transpose()?;
    VoterConfig::new(num_units, delta, persistence_lmt, max_simul_fault, min_required)
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    num_units: i64,
    delta: i64,
    persistence_lmt: i64,
    max_simul_fault: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min_required: Option<i64>,
}

impl TryFrom<RawConfig> for VoterConfig {
    type Error = ConfigError;

    fn try_from(raw: RawConfig) -> Result<Self, Self::Error> {
        let mut map = BTreeMap::new();
        map.insert("num_units".to_string(), raw.num_units);
        map.insert("delta".to_string(), raw.delta);
        map.insert("persistence_lmt".to_string(), raw.persistence_lmt);
        map.insert("max_simul_fault".to_string(), raw.max_simul_fault);
        if let Some(m) = raw.min_required {
            map.insert("min_required".to_string(), m);
        }
        validate_config(&map)
    }
}

impl From<VoterConfig> for RawConfig {
    fn from(c: VoterConfig) -> Self {
        RawConfig {
            num_units: c.num_units as i64,
            delta: c.delta as i64,
            persistence_lmt: c.persistence_lmt as i64,
            max_simul_fault: c.max_simul_fault as i64,
            min_required: Some(c.min_required as i64),
        }
    }
}
