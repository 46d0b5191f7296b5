//! Scenario configuration: JSON ingestion, defaults, validation and mode resolution.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionPolicy;
use crate::modes::{
    adjust_reference_cost, builtin_modes, validate_registry, ModeId, ModeRegistry, ModeSpec,
    AUTONOMOUS_PREFIX,
};
use crate::stochastics::{lognormal_from_moments, LogNormalParams};
use crate::tripsim::TripSetup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub start_year: i32,
    pub end_year: i32,
    pub iterations: u32,
    pub trip_distance_km: f64,
    pub freight_tonnes: f64,
    pub min_leg_km: f64,
    pub handling_mean_usd_per_tonne: f64,
    pub handling_stdev_fraction: f64,
    /// Applied to every enabled mode unless its override sets one.
    pub cost_stdev_fraction: f64,
    /// Applied to every enabled mode unless its override sets one.
    pub rate_stdev_fraction: f64,
    pub evolution_policy: EvolutionPolicy,
    pub enabled_modes: Vec<ModeId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeOverride>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".to_string(),
            seed: 0,
            start_year: 2018,
            end_year: 2050,
            iterations: 1000,
            trip_distance_km: 10_000.0,
            freight_tonnes: 50_000.0,
            min_leg_km: 100.0,
            handling_mean_usd_per_tonne: 4.59,
            handling_stdev_fraction: 0.25,
            cost_stdev_fraction: 0.25,
            rate_stdev_fraction: 0.5,
            evolution_policy: EvolutionPolicy::PerReplicate,
            enabled_modes: Vec::new(),
            modes: Vec::new(),
        }
    }
}

/// Partial mode definition. Patches a registry mode with the same id, or
/// defines a new one when `base_cost_mean` and `improvement_rate_mean` are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeOverride {
    pub id: ModeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_cost_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_stdev_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improvement_rate_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_stdev_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub autonomous: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// Parses and validates a JSON config against the builtin registry.
pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    config.validate(&builtin_modes())?;
    Ok(config)
}

impl ScenarioConfig {
    pub fn with_modes<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.enabled_modes = ids.into_iter().map(|s| ModeId::new(s.as_ref())).collect();
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn n_years(&self) -> usize {
        (self.end_year - self.start_year + 1).max(0) as usize
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start_year..=self.end_year
    }

    pub fn validate(&self, registry: &ModeRegistry) -> Result<()> {
        if self.end_year < self.start_year {
            return Err(Error::config(
                "end_year",
                format!("{} is before start_year {}", self.end_year, self.start_year),
            ));
        }
        if self.iterations < 1 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        positive("trip_distance_km", self.trip_distance_km)?;
        positive("freight_tonnes", self.freight_tonnes)?;
        positive("min_leg_km", self.min_leg_km)?;
        positive(
            "handling_mean_usd_per_tonne",
            self.handling_mean_usd_per_tonne,
        )?;
        non_negative("handling_stdev_fraction", self.handling_stdev_fraction)?;
        non_negative("cost_stdev_fraction", self.cost_stdev_fraction)?;
        non_negative("rate_stdev_fraction", self.rate_stdev_fraction)?;
        self.resolve_modes(registry).map(|_| ())
    }

    /// Registry with this config's overrides applied.
    pub fn registry(&self, base: &ModeRegistry) -> Result<ModeRegistry> {
        let mut reg = base.clone();
        for (i, o) in self.modes.iter().enumerate() {
            match reg.get_mut(&o.id) {
                Some(spec) => apply_override(spec, o),
                None => {
                    let (Some(cost), Some(rate)) = (o.base_cost_mean, o.improvement_rate_mean)
                    else {
                        return Err(Error::config(
                            format!("modes[{i}]"),
                            format!(
                                "`{}` is not a known mode; new modes need base_cost_mean and improvement_rate_mean",
                                o.id
                            ),
                        ));
                    };
                    let mut spec = ModeSpec {
                        id: o.id.clone(),
                        base_cost_mean: cost,
                        base_year: self.start_year,
                        cost_stdev_fraction: self.cost_stdev_fraction,
                        improvement_rate_mean: rate,
                        rate_stdev_fraction: self.rate_stdev_fraction,
                        autonomous: o.id.as_str().starts_with(AUTONOMOUS_PREFIX),
                        provenance: None,
                    };
                    apply_override(&mut spec, o);
                    reg.modes.push(spec);
                }
            }
        }
        let violations = validate_registry(&reg);
        if !violations.is_empty() {
            return Err(Error::Registry(violations));
        }
        Ok(reg)
    }

    /// Enabled modes, in config order, with overrides and scenario-level
    /// uncertainty fractions applied.
    pub fn resolve_modes(&self, base: &ModeRegistry) -> Result<Vec<ModeSpec>> {
        if self.enabled_modes.is_empty() {
            return Err(Error::config(
                "enabled_modes",
                "at least one mode must be enabled",
            ));
        }
        let reg = self.registry(base)?;
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(self.enabled_modes.len());
        for (i, id) in self.enabled_modes.iter().enumerate() {
            let path = format!("enabled_modes[{i}]");
            if !seen.insert(id) {
                return Err(Error::config(path, format!("`{id}` listed twice")));
            }
            let Some(spec) = reg.get(id) else {
                return Err(Error::config(path, format!("unknown mode `{id}`")));
            };
            if spec.base_year > self.start_year {
                return Err(Error::config(
                    "start_year",
                    format!(
                        "{} precedes the base year {} of `{id}`",
                        self.start_year, spec.base_year
                    ),
                ));
            }
            let explicit = self.modes.iter().find(|o| &o.id == id);
            let mut spec = spec.clone();
            spec.cost_stdev_fraction = explicit
                .and_then(|o| o.cost_stdev_fraction)
                .unwrap_or(self.cost_stdev_fraction);
            spec.rate_stdev_fraction = explicit
                .and_then(|o| o.rate_stdev_fraction)
                .unwrap_or(self.rate_stdev_fraction);
            out.push(spec);
        }
        Ok(out)
    }

    /// Cost mean of each resolved mode at `start_year`.
    pub fn start_costs(&self, specs: &[ModeSpec]) -> Result<Vec<f64>> {
        specs
            .iter()
            .map(|s| {
                adjust_reference_cost(
                    s.base_cost_mean,
                    s.improvement_rate_mean,
                    s.base_year,
                    self.start_year,
                )
            })
            .collect()
    }

    pub fn handling_params(&self) -> Result<LogNormalParams> {
        lognormal_from_moments(
            self.handling_mean_usd_per_tonne,
            self.handling_stdev_fraction * self.handling_mean_usd_per_tonne,
        )
    }

    pub fn trip_setup(&self) -> Result<TripSetup> {
        Ok(TripSetup {
            trip_distance_km: self.trip_distance_km,
            freight_tonnes: self.freight_tonnes,
            min_leg_km: self.min_leg_km,
            handling: self.handling_params()?,
        })
    }
}

fn apply_override(spec: &mut ModeSpec, o: &ModeOverride) {
    if let Some(v) = o.base_cost_mean {
        spec.base_cost_mean = v;
    }
    if let Some(v) = o.base_year {
        spec.base_year = v;
    }
    if let Some(v) = o.cost_stdev_fraction {
        spec.cost_stdev_fraction = v;
    }
    if let Some(v) = o.improvement_rate_mean {
        spec.improvement_rate_mean = v;
    }
    if let Some(v) = o.rate_stdev_fraction {
        spec.rate_stdev_fraction = v;
    }
    if let Some(v) = o.autonomous {
        spec.autonomous = v;
    }
    if let Some(v) = &o.provenance {
        spec.provenance = Some(v.clone());
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be >= 0, got {v}")))
    }
}
