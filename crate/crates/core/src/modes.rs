//! Transport modes and the default calibrated dataset.
//!
//! A mode's operational cost is expressed in USD per tonne-km. The classic
//! performance metric `distance * weight / cost` is simply the reciprocal,
//! see [`ModeSpec::performance`].

use std::collections::HashSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prefix applied to the id of a derived autonomous mode.
pub const AUTONOMOUS_PREFIX: &str = "auto_";

const BUILTIN_JSON: &str = include_str!("../data/modes.json");

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(Arc<str>);

impl ModeId {
    pub fn new(name: &str) -> Self {
        ModeId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Id of the autonomous counterpart, e.g. `ocean` -> `auto_ocean`.
    pub fn autonomous(&self) -> ModeId {
        ModeId::new(&format!("{AUTONOMOUS_PREFIX}{}", self.0))
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for ModeId {
    fn from(s: &str) -> Self {
        ModeId::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub id: ModeId,
    /// USD per tonne-km at `base_year`.
    pub base_cost_mean: f64,
    pub base_year: i32,
    pub cost_stdev_fraction: f64,
    /// Mean annual fractional cost decrease.
    pub improvement_rate_mean: f64,
    pub rate_stdev_fraction: f64,
    pub autonomous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl ModeSpec {
    /// Tonne-km moved per dollar.
    pub fn performance(&self) -> f64 {
        1.0 / self.base_cost_mean
    }
}

/// Ordered collection of modes keyed by id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRegistry {
    pub modes: Vec<ModeSpec>,
}

impl ModeRegistry {
    pub fn new(modes: Vec<ModeSpec>) -> Self {
        ModeRegistry { modes }
    }

    pub fn get(&self, id: &ModeId) -> Option<&ModeSpec> {
        self.modes.iter().find(|m| &m.id == id)
    }

    pub fn get_mut(&mut self, id: &ModeId) -> Option<&mut ModeSpec> {
        self.modes.iter_mut().find(|m| &m.id == id)
    }

    pub fn require(&self, id: &ModeId) -> Result<&ModeSpec> {
        self.get(id)
            .ok_or_else(|| Error::UnknownMode(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &ModeId> {
        self.modes.iter().map(|m| &m.id)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The ten default modes (five conventional, five autonomous), costs stated
/// for 2018 trips. Parsed once from the bundled `data/modes.json`.
pub fn builtin_modes() -> ModeRegistry {
    static BUILTIN: OnceLock<ModeRegistry> = OnceLock::new();
    BUILTIN
        .get_or_init(|| serde_json::from_str(BUILTIN_JSON).expect("bundled modes.json is valid"))
        .clone()
}

/// Compounds `value` forward at `rate` per year: `value * (1 - rate)^(to - from)`.
pub fn adjust_reference_cost(value: f64, rate: f64, from_year: i32, to_year: i32) -> Result<f64> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::invalid(
            "value",
            format!("must be positive, got {value}"),
        ));
    }
    check_rate("rate", rate)?;
    if to_year < from_year {
        return Err(Error::invalid(
            "to_year",
            format!("{to_year} is before {from_year}; only forward adjustment is supported"),
        ));
    }
    Ok(value * (1.0 - rate).powi(to_year - from_year))
}

/// Builds the autonomous variant of a conventional mode.
pub fn derive_autonomous(base: &ModeSpec, cost_multiple: f64, rate_delta: f64) -> Result<ModeSpec> {
    if base.autonomous {
        return Err(Error::invalid(
            "base",
            format!("`{}` is already autonomous", base.id),
        ));
    }
    if !(cost_multiple.is_finite() && cost_multiple > 0.0) {
        return Err(Error::invalid(
            "cost_multiple",
            format!("must be positive, got {cost_multiple}"),
        ));
    }
    let rate = base.improvement_rate_mean + rate_delta;
    check_rate("rate_delta", rate)?;
    Ok(ModeSpec {
        id: base.id.autonomous(),
        base_cost_mean: base.base_cost_mean * cost_multiple,
        improvement_rate_mean: rate,
        autonomous: true,
        provenance: Some(format!(
            "derived from `{}`: cost x{cost_multiple}, rate {:+}",
            base.id, rate_delta
        )),
        ..base.clone()
    })
}

fn check_rate(field: &str, rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(field, format!("rate {rate} outside [0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    EmptyRegistry,
    EmptyId,
    DuplicateId,
    NonPositiveCost,
    RateOutOfRange,
    NegativeCostStdev,
    NegativeRateStdev,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub mode: Option<ModeId>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::EmptyRegistry => "registry is empty",
            ViolationKind::EmptyId => "empty id",
            ViolationKind::DuplicateId => "duplicate id",
            ViolationKind::NonPositiveCost => "base cost must be positive",
            ViolationKind::RateOutOfRange => "improvement rate outside [0, 1)",
            ViolationKind::NegativeCostStdev => "negative cost stdev fraction",
            ViolationKind::NegativeRateStdev => "negative rate stdev fraction",
        };
        match &self.mode {
            Some(id) => write!(f, "{id}: {what}"),
            None => f.write_str(what),
        }
    }
}

/// Collects every invariant violation in the registry. An empty vector means valid.
pub fn validate_registry(reg: &ModeRegistry) -> Vec<Violation> {
    let mut out = Vec::new();
    if reg.is_empty() {
        out.push(Violation {
            mode: None,
            kind: ViolationKind::EmptyRegistry,
        });
    }
    let mut seen = HashSet::new();
    for m in &reg.modes {
        let mut push = |kind| {
            out.push(Violation {
                mode: Some(m.id.clone()),
                kind,
            })
        };
        if m.id.as_str().is_empty() {
            push(ViolationKind::EmptyId);
        }
        if !seen.insert(&m.id) {
            push(ViolationKind::DuplicateId);
        }
        if !(m.base_cost_mean.is_finite() && m.base_cost_mean > 0.0) {
            push(ViolationKind::NonPositiveCost);
        }
        if !(0.0..1.0).contains(&m.improvement_rate_mean) {
            push(ViolationKind::RateOutOfRange);
        }
        if !(m.cost_stdev_fraction.is_finite() && m.cost_stdev_fraction >= 0.0) {
            push(ViolationKind::NegativeCostStdev);
        }
        if !(m.rate_stdev_fraction.is_finite() && m.rate_stdev_fraction >= 0.0) {
            push(ViolationKind::NegativeRateStdev);
        }
    }
    out
}
