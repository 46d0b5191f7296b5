//! Annual cost evolution and the Monte-Carlo scenario engine.
//!
//! Each year every replicate simulates one trip with the current mode cost
//! means, then each mode's mean shrinks by a log-normally drawn improvement
//! rate: `cost <- cost * (1 - r)`. Trips in `start_year` therefore see the
//! unmodified base costs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::modes::{ModeId, ModeRegistry, ModeSpec};
use crate::stochastics::{
    derive_stream, lognormal_from_moments, sample_lognormal, Label, RngStream,
};
use crate::tripsim::{simulate_trip, ModeCost, TripRecord};

const MAX_RATE_DRAWS: usize = 100;
const RATE_CLAMP: f64 = 0.99;

/// How improvement-rate draws are shared between replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionPolicy {
    /// Every replicate follows its own cost trajectory.
    #[default]
    PerReplicate,
    /// One rate per mode per year, common to all replicates.
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub spec: ModeSpec,
    pub current_cost_mean: f64,
    pub year: i32,
}

impl ModeState {
    pub fn new(spec: ModeSpec, current_cost_mean: f64, year: i32) -> Result<Self> {
        if !(current_cost_mean.is_finite() && current_cost_mean > 0.0) {
            return Err(Error::invalid(
                "current_cost_mean",
                format!("must be positive, got {current_cost_mean}"),
            ));
        }
        if year < spec.base_year {
            return Err(Error::invalid(
                "year",
                format!("{year} precedes base year {}", spec.base_year),
            ));
        }
        Ok(ModeState {
            spec,
            current_cost_mean,
            year,
        })
    }
}

/// Draws one improvement rate for `spec`. Draws at or above 1 are retried,
/// then clamped.
pub fn draw_rate(spec: &ModeSpec, stream: &mut RngStream) -> f64 {
    let mean = spec.improvement_rate_mean;
    if mean <= 0.0 {
        return 0.0;
    }
    let params = lognormal_from_moments(mean, spec.rate_stdev_fraction * mean)
        .expect("validated rate mean is positive and finite");
    for _ in 0..MAX_RATE_DRAWS {
        let r = sample_lognormal(params, stream);
        if r < 1.0 {
            return r;
        }
    }
    RATE_CLAMP
}

pub fn evolve_mode_state(state: &ModeState, stream: &mut RngStream) -> ModeState {
    let r = draw_rate(&state.spec, stream);
    ModeState {
        spec: state.spec.clone(),
        current_cost_mean: state.current_cost_mean * (1.0 - r),
        year: state.year + 1,
    }
}

/// Mode cost means per simulated year, `[year_index][mode_index]`.
pub type Trajectory = Vec<Vec<f64>>;

/// Cost trajectory of the resolved modes. `replicate = None` gives the
/// shared trajectory.
pub fn mode_trajectory(
    config: &ScenarioConfig,
    specs: &[ModeSpec],
    replicate: Option<u32>,
) -> Result<Trajectory> {
    let starts = config.start_costs(specs)?;
    let mut states = specs
        .iter()
        .zip(starts)
        .map(|(s, c)| ModeState::new(s.clone(), c, config.start_year))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(config.n_years());
    for year in config.years() {
        out.push(states.iter().map(|s| s.current_cost_mean).collect());
        if year == config.end_year {
            break;
        }
        let mut stream = match replicate {
            Some(rep) => derive_stream(
                config.seed,
                &[
                    Label::Str(&config.name),
                    year.into(),
                    rep.into(),
                    "rates".into(),
                ],
            ),
            None => derive_stream(
                config.seed,
                &[Label::Str(&config.name), year.into(), "shared-rates".into()],
            ),
        };
        for s in &mut states {
            *s = evolve_mode_state(s, &mut stream);
        }
    }
    Ok(out)
}

fn trip_stream(config: &ScenarioConfig, year: i32, replicate: u32) -> RngStream {
    derive_stream(
        config.seed,
        &[
            Label::Str(&config.name),
            year.into(),
            replicate.into(),
            "trip".into(),
        ],
    )
}

fn simulate_path(
    config: &ScenarioConfig,
    specs: &[ModeSpec],
    trajectory: &Trajectory,
    replicate: u32,
) -> Result<Vec<TripRecord>> {
    let setup = config.trip_setup()?;
    config
        .years()
        .zip(trajectory)
        .map(|(year, means)| {
            let modes: Vec<ModeCost> = specs
                .iter()
                .zip(means)
                .map(|(s, &mean)| ModeCost {
                    id: s.id.clone(),
                    mean,
                    stdev_fraction: s.cost_stdev_fraction,
                })
                .collect();
            simulate_trip(
                &setup,
                &modes,
                year,
                replicate,
                &mut trip_stream(config, year, replicate),
            )
        })
        .collect()
}

/// One Monte-Carlo path: one trip record per year.
pub fn run_replicate(
    config: &ScenarioConfig,
    registry: &ModeRegistry,
    replicate: u32,
) -> Result<Vec<TripRecord>> {
    config.validate(registry)?;
    let specs = config.resolve_modes(registry)?;
    let trajectory = mode_trajectory(config, &specs, policy_replicate(config, replicate))?;
    simulate_path(config, &specs, &trajectory, replicate)
}

fn policy_replicate(config: &ScenarioConfig, replicate: u32) -> Option<u32> {
    match config.evolution_policy {
        EvolutionPolicy::PerReplicate => Some(replicate),
        EvolutionPolicy::Shared => None,
    }
}

/// Complete output of a scenario run, sorted by `(year, replicate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub config: ScenarioConfig,
    pub fingerprint: String,
    /// Resolved enabled modes, in config order.
    pub modes: Vec<ModeSpec>,
    pub records: Vec<TripRecord>,
}

impl ResultSet {
    pub fn mode_ids(&self) -> impl Iterator<Item = &ModeId> {
        self.modes.iter().map(|m| &m.id)
    }

    pub fn has_mode(&self, id: &ModeId) -> bool {
        self.modes.iter().any(|m| &m.id == id)
    }

    pub fn year(&self, year: i32) -> impl Iterator<Item = &TripRecord> {
        self.records.iter().filter(move |r| r.year == year)
    }

    /// Trip cost per tonne-km, handling included.
    pub fn unit_cost(&self, record: &TripRecord) -> f64 {
        record.trip_cost / (self.config.trip_distance_km * self.config.freight_tonnes)
    }
}

/// First 16 hex digits of the SHA-256 of the config's JSON form.
pub fn config_fingerprint(config: &ScenarioConfig) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

/// Runs every replicate on rayon's global pool.
pub fn run_scenario(config: &ScenarioConfig, registry: &ModeRegistry) -> Result<ResultSet> {
    execute(config, registry)
}

/// Runs on a dedicated pool of `workers` threads. Output is identical for
/// any worker count.
pub fn run_scenario_with_workers(
    config: &ScenarioConfig,
    registry: &ModeRegistry,
    workers: usize,
) -> Result<ResultSet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    pool.install(|| execute(config, registry))
}

fn execute(config: &ScenarioConfig, registry: &ModeRegistry) -> Result<ResultSet> {
    config.validate(registry)?;
    let specs = config.resolve_modes(registry)?;
    let shared = match config.evolution_policy {
        EvolutionPolicy::Shared => Some(mode_trajectory(config, &specs, None)?),
        EvolutionPolicy::PerReplicate => None,
    };
    let paths = (0..config.iterations)
        .into_par_iter()
        .map(|rep| match &shared {
            Some(t) => simulate_path(config, &specs, t, rep),
            None => {
                let t = mode_trajectory(config, &specs, Some(rep))?;
                simulate_path(config, &specs, &t, rep)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<TripRecord> = paths.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.year, r.replicate));
    Ok(ResultSet {
        config: config.clone(),
        fingerprint: config_fingerprint(config)?,
        modes: specs,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::builtin_modes;

    fn spec(id: &str) -> ModeSpec {
        builtin_modes().get(&ModeId::new(id)).unwrap().clone()
    }

    fn deterministic(config: ScenarioConfig) -> ScenarioConfig {
        ScenarioConfig {
            cost_stdev_fraction: 0.0,
            rate_stdev_fraction: 0.0,
            handling_stdev_fraction: 0.0,
            ..config
        }
    }

    #[test]
    fn evolve_with_zero_stdev_matches_reference_adjustment() {
        let mut air = spec("air");
        air.rate_stdev_fraction = 0.0;
        let state = ModeState::new(air, 1.766, 2018).unwrap();
        let next = evolve_mode_state(&state, &mut derive_stream(0, &[]));
        assert!((next.current_cost_mean - 1.669).abs() <= 5e-4);
        assert_eq!(next.year, 2019);
    }

    #[test]
    fn zero_rate_leaves_cost_unchanged() {
        let mut m = spec("rail");
        m.improvement_rate_mean = 0.0;
        let state = ModeState::new(m, 0.05, 2018).unwrap();
        let next = evolve_mode_state(&state, &mut derive_stream(0, &[]));
        assert_eq!(next.current_cost_mean, 0.05);
    }

    #[test]
    fn evolved_mean_matches_expected_rate() {
        // E[c(1 - r)] = c(1 - E r)
        let m = spec("auto_air");
        let state = ModeState::new(m, 2.0, 2018).unwrap();
        let mut s = derive_stream(77, &["evolve-mean".into()]);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| evolve_mode_state(&state, &mut s).current_cost_mean)
            .sum::<f64>()
            / n as f64;
        let expected = 2.0 * (1.0 - 0.098);
        assert!(((mean - expected) / expected).abs() < 0.01, "{mean}");
    }

    #[test]
    fn huge_rates_are_redrawn_or_clamped() {
        let mut m = spec("air");
        m.improvement_rate_mean = 0.9;
        m.rate_stdev_fraction = 5.0;
        let mut s = derive_stream(1, &[]);
        for _ in 0..10_000 {
            let r = draw_rate(&m, &mut s);
            assert!(r > 0.0 && r < 1.0);
        }
    }

    #[test]
    fn mode_state_invariants() {
        assert!(ModeState::new(spec("air"), 0.0, 2018).is_err());
        assert!(ModeState::new(spec("air"), 1.0, 2017).is_err());
    }

    #[test]
    fn single_ocean_closed_form() {
        let config = deterministic(
            ScenarioConfig {
                iterations: 1,
                ..Default::default()
            }
            .with_modes(["ocean"]),
        );
        let recs = run_replicate(&config, &builtin_modes(), 0).unwrap();
        assert_eq!(recs.len(), 33);
        for r in &recs {
            let op = 10_000.0 * 50_000.0 * 0.0196 * 0.979f64.powi(r.year - 2018);
            let expected = op + r.n_legs as f64 * 50_000.0 * 4.59;
            assert!(
                ((r.trip_cost - expected) / expected).abs() < 1e-12,
                "{}",
                r.year
            );
        }
    }

    #[test]
    fn replicate_is_deterministic() {
        let config = ScenarioConfig {
            seed: 9,
            ..Default::default()
        }
        .with_modes(["ocean", "truck", "auto_truck"]);
        let a = run_replicate(&config, &builtin_modes(), 3).unwrap();
        let b = run_replicate(&config, &builtin_modes(), 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, run_replicate(&config, &builtin_modes(), 4).unwrap());
    }

    #[test]
    fn one_year_gives_one_record() {
        let config = ScenarioConfig {
            end_year: 2018,
            iterations: 1,
            ..Default::default()
        }
        .with_modes(["rail"]);
        assert_eq!(
            run_replicate(&config, &builtin_modes(), 0).unwrap().len(),
            1
        );
        assert_eq!(
            run_scenario(&config, &builtin_modes())
                .unwrap()
                .records
                .len(),
            1
        );
    }

    #[test]
    fn scenario_matches_replicates_and_is_sorted() {
        let config = ScenarioConfig {
            iterations: 6,
            end_year: 2025,
            seed: 5,
            ..Default::default()
        }
        .with_modes(["ocean", "air", "auto_iwt"]);
        let rs = run_scenario_with_workers(&config, &builtin_modes(), 3).unwrap();
        assert_eq!(rs.records.len(), 6 * 8);
        assert!(rs
            .records
            .windows(2)
            .all(|w| (w[0].year, w[0].replicate) < (w[1].year, w[1].replicate)));
        let rep2 = run_replicate(&config, &builtin_modes(), 2).unwrap();
        let from_set: Vec<_> = rs
            .records
            .iter()
            .filter(|r| r.replicate == 2)
            .cloned()
            .collect();
        assert_eq!(rep2, from_set);
    }

    #[test]
    fn zero_rate_stdev_trajectory_is_geometric() {
        let config = ScenarioConfig {
            rate_stdev_fraction: 0.0,
            ..Default::default()
        }
        .with_modes(["air", "ocean", "auto_truck"]);
        let specs = config.resolve_modes(&builtin_modes()).unwrap();
        for rep in [0, 17] {
            let t = mode_trajectory(&config, &specs, Some(rep)).unwrap();
            for (k, year) in config.years().enumerate() {
                for (j, s) in specs.iter().enumerate() {
                    let expected =
                        s.base_cost_mean * (1.0 - s.improvement_rate_mean).powi(year - 2018);
                    assert!(((t[k][j] - expected) / expected).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn trajectories_strictly_decrease() {
        let config = ScenarioConfig::default()
            .with_modes(builtin_modes().ids().map(|m| m.as_str().to_owned()));
        let specs = config.resolve_modes(&builtin_modes()).unwrap();
        for rep in 0..50 {
            let t = mode_trajectory(&config, &specs, Some(rep)).unwrap();
            for w in t.windows(2) {
                assert!(w[0].iter().zip(&w[1]).all(|(a, b)| b < a && *b > 0.0));
            }
        }
    }

    #[test]
    fn shared_policy_uses_one_trajectory() {
        let config = ScenarioConfig {
            evolution_policy: EvolutionPolicy::Shared,
            iterations: 20,
            end_year: 2030,
            ..Default::default()
        }
        .with_modes(["truck", "auto_truck"]);
        let specs = config.resolve_modes(&builtin_modes()).unwrap();
        let shared = mode_trajectory(&config, &specs, None).unwrap();
        // with zero cost noise, shared means make every leg of a mode cost the same
        let quiet = ScenarioConfig {
            cost_stdev_fraction: 0.0,
            ..config.clone()
        };
        let rs = run_scenario(&quiet, &builtin_modes()).unwrap();
        for r in &rs.records {
            let k = (r.year - 2018) as usize;
            for leg in &r.legs {
                let j = specs.iter().position(|s| s.id == leg.mode).unwrap();
                assert!(((leg.op_cost - shared[k][j]) / shared[k][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn per_replicate_log_spread_grows() {
        let config = ScenarioConfig::default().with_modes(["ocean", "auto_air"]);
        let specs = config.resolve_modes(&builtin_modes()).unwrap();
        let paths: Vec<Trajectory> = (0..300)
            .map(|r| mode_trajectory(&config, &specs, Some(r)).unwrap())
            .collect();
        for j in 0..specs.len() {
            let var_at = |k: usize| {
                let logs: Vec<f64> = paths.iter().map(|p| p[k][j].ln()).collect();
                let m = logs.iter().sum::<f64>() / logs.len() as f64;
                logs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (logs.len() - 1) as f64
            };
            assert!(var_at(0) < 1e-20);
            let vars: Vec<f64> = (0..config.n_years()).map(var_at).collect();
            // adjacent years share most of each path, so allow sampling wobble
            assert!(vars.windows(2).all(|w| w[1] >= 0.95 * w[0]), "{vars:?}");
            assert!(vars.windows(5).all(|w| w[4] > w[0]), "{vars:?}");
        }
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = ScenarioConfig::default().with_modes(["ocean"]);
        let b = ScenarioConfig {
            seed: 1,
            ..a.clone()
        };
        assert_eq!(config_fingerprint(&a).unwrap().len(), 16);
        assert_eq!(
            config_fingerprint(&a).unwrap(),
            config_fingerprint(&a.clone()).unwrap()
        );
        assert_ne!(
            config_fingerprint(&a).unwrap(),
            config_fingerprint(&b).unwrap()
        );
    }
}
