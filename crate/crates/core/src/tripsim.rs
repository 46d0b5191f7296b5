//! Random-walk trip generation and per-leg costing.
//!
//! A trip is cut into legs by repeatedly drawing a leg length uniformly from
//! `[min_leg, remaining]`. A tail shorter than `min_leg` is folded into the
//! previous leg. Each leg gets a mode drawn uniformly from the enabled set,
//! and costs
//!
//! ```text
//! leg_cost = distance * weight * op_cost + weight * handling
//! ```
//!
//! with `op_cost` and `handling` both drawn from log-normals. Handling is
//! charged on every leg, including the first.

use crate::error::{Error, Result};
use crate::modes::ModeId;
use crate::stochastics::{lognormal_from_moments, sample_lognormal, LogNormalParams, RngStream};

/// Source of uniform draws on a closed interval.
pub trait IntervalSampler {
    fn sample_between(&mut self, lo: f64, hi: f64) -> f64;
}

impl IntervalSampler for RngStream {
    fn sample_between(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform_between(lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub distance_km: f64,
    pub mode: ModeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripPlan {
    pub legs: Vec<Leg>,
}

impl TripPlan {
    pub fn total_km(&self) -> f64 {
        self.legs.iter().map(|l| l.distance_km).sum()
    }
}

/// A costed leg. `op_cost` is the sampled USD/t-km, `handling` the sampled USD/tonne.
#[derive(Debug, Clone, PartialEq)]
pub struct LegOutcome {
    pub mode: ModeId,
    pub distance_km: f64,
    pub op_cost: f64,
    pub handling: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub year: i32,
    pub replicate: u32,
    pub trip_cost: f64,
    pub n_legs: usize,
    pub legs: Vec<LegOutcome>,
    /// One entry per enabled mode, in enabled order; zero when unused.
    pub mode_distance_fraction: Vec<(ModeId, f64)>,
}

impl TripRecord {
    pub fn fraction(&self, mode: &ModeId) -> f64 {
        self.mode_distance_fraction
            .iter()
            .find(|(m, _)| m == mode)
            .map_or(0.0, |&(_, f)| f)
    }
}

/// Current cost distribution of one enabled mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCost {
    pub id: ModeId,
    pub mean: f64,
    pub stdev_fraction: f64,
}

/// Trip-level inputs shared by every replicate of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TripSetup {
    pub trip_distance_km: f64,
    pub freight_tonnes: f64,
    pub min_leg_km: f64,
    pub handling: LogNormalParams,
}

pub fn generate_leg_distances(
    trip_distance: f64,
    min_leg: f64,
    sampler: &mut impl IntervalSampler,
) -> Result<Vec<f64>> {
    if !(trip_distance.is_finite() && trip_distance > 0.0) {
        return Err(Error::invalid(
            "trip_distance",
            format!("must be positive, got {trip_distance}"),
        ));
    }
    if !(min_leg.is_finite() && min_leg > 0.0) {
        return Err(Error::invalid(
            "min_leg",
            format!("must be positive, got {min_leg}"),
        ));
    }
    let mut legs: Vec<f64> = Vec::new();
    let mut remaining = trip_distance;
    while remaining >= min_leg {
        let d = sampler.sample_between(min_leg, remaining);
        legs.push(d);
        remaining -= d;
    }
    match legs.last_mut() {
        Some(last) => *last += remaining,
        None => legs.push(trip_distance),
    }
    Ok(legs)
}

pub fn assign_modes(
    n_legs: usize,
    enabled: &[ModeId],
    stream: &mut RngStream,
) -> Result<Vec<ModeId>> {
    if enabled.is_empty() {
        return Err(Error::NoModes);
    }
    Ok((0..n_legs)
        .map(|_| enabled[stream.index(enabled.len())].clone())
        .collect())
}

#[inline]
pub fn leg_cost(distance_km: f64, tonnes: f64, op_cost: f64, handling: f64) -> f64 {
    distance_km * tonnes * op_cost + tonnes * handling
}

/// Costs a fixed plan. Legs are visited in order; each draws its
/// operational cost then its handling cost from `stream`.
pub fn cost_plan(
    plan: &TripPlan,
    setup: &TripSetup,
    modes: &[ModeCost],
    year: i32,
    replicate: u32,
    stream: &mut RngStream,
) -> Result<TripRecord> {
    if plan.legs.is_empty() {
        return Err(Error::invalid("plan", "trip plan has no legs"));
    }
    let params = modes
        .iter()
        .map(|m| lognormal_from_moments(m.mean, m.stdev_fraction * m.mean))
        .collect::<Result<Vec<_>>>()?;

    let mut legs = Vec::with_capacity(plan.legs.len());
    let mut per_mode_km = vec![0.0; modes.len()];
    for leg in &plan.legs {
        let idx = modes
            .iter()
            .position(|m| m.id == leg.mode)
            .ok_or_else(|| Error::UnknownMode(leg.mode.to_string()))?;
        let op_cost = sample_lognormal(params[idx], stream);
        let handling = sample_lognormal(setup.handling, stream);
        per_mode_km[idx] += leg.distance_km;
        legs.push(LegOutcome {
            mode: leg.mode.clone(),
            distance_km: leg.distance_km,
            op_cost,
            handling,
            cost: leg_cost(leg.distance_km, setup.freight_tonnes, op_cost, handling),
        });
    }

    let total_km: f64 = per_mode_km.iter().sum();
    let mode_distance_fraction = modes
        .iter()
        .zip(&per_mode_km)
        .map(|(m, km)| (m.id.clone(), km / total_km))
        .collect();
    Ok(TripRecord {
        year,
        replicate,
        trip_cost: legs.iter().map(|l| l.cost).sum(),
        n_legs: legs.len(),
        legs,
        mode_distance_fraction,
    })
}

/// Generates, assigns and costs one trip.
pub fn simulate_trip(
    setup: &TripSetup,
    modes: &[ModeCost],
    year: i32,
    replicate: u32,
    stream: &mut RngStream,
) -> Result<TripRecord> {
    if modes.is_empty() {
        return Err(Error::NoModes);
    }
    let distances = generate_leg_distances(setup.trip_distance_km, setup.min_leg_km, stream)?;
    let ids: Vec<ModeId> = modes.iter().map(|m| m.id.clone()).collect();
    let assigned = assign_modes(distances.len(), &ids, stream)?;
    let plan = TripPlan {
        legs: distances
            .into_iter()
            .zip(assigned)
            .map(|(distance_km, mode)| Leg { distance_km, mode })
            .collect(),
    };
    cost_plan(&plan, setup, modes, year, replicate, stream)
}
