//! Cross-over dates, the multiple-vs-rate sensitivity grid and per-year summaries.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::ResultSet;
use crate::modes::ModeId;

// ceil() slack so an exact integer crossing is not pushed a year later by rounding
const CEIL_SLACK: f64 = 1e-9;

/// First calendar year in which an option costing `cost_multiple` times the
/// conventional mode today, improving at `r_auto` instead of `r_non`, is no
/// more expensive. Solves `M (1 - r_auto)^t = (1 - r_non)^t` and reports
/// `base_year + ceil(t)`. `None` means the two never cross.
pub fn deterministic_crossover_year(
    cost_multiple: f64,
    r_non: f64,
    r_auto: f64,
    base_year: i32,
) -> Result<Option<i32>> {
    if !(cost_multiple.is_finite() && cost_multiple > 0.0) {
        return Err(Error::invalid(
            "cost_multiple",
            format!("must be positive, got {cost_multiple}"),
        ));
    }
    for (field, r) in [("r_non", r_non), ("r_auto", r_auto)] {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::invalid(field, format!("rate {r} outside [0, 1)")));
        }
    }
    if cost_multiple <= 1.0 {
        return Ok(Some(base_year));
    }
    if r_auto <= r_non {
        return Ok(None);
    }
    let t = cost_multiple.ln() / ((1.0 - r_non) / (1.0 - r_auto)).ln();
    let years = (t - CEIL_SLACK).ceil();
    if years > f64::from(i32::MAX - base_year) {
        return Ok(None);
    }
    Ok(Some(base_year + years as i32))
}

/// Crossover years for every `(delta, multiple)` pair. Rows are rate
/// deltas, columns are cost multiples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityGrid {
    pub multiples: Vec<f64>,
    pub deltas: Vec<f64>,
    pub base_rate: f64,
    pub base_year: i32,
    pub cells: Vec<Vec<Option<i32>>>,
}

pub const DEFAULT_MULTIPLES: [f64; 4] = [1.5, 2.5, 3.5, 4.5];
pub const DEFAULT_DELTAS: [f64; 4] = [0.02, 0.04, 0.06, 0.08];
pub const DEFAULT_BASE_RATE: f64 = 0.021;
pub const DEFAULT_BASE_YEAR: i32 = 2018;

pub fn sensitivity_grid(
    multiples: &[f64],
    deltas: &[f64],
    base_rate: f64,
    base_year: i32,
) -> Result<SensitivityGrid> {
    if multiples.is_empty() {
        return Err(Error::invalid("multiples", "empty list"));
    }
    if deltas.is_empty() {
        return Err(Error::invalid("deltas", "empty list"));
    }
    let cells = deltas
        .iter()
        .map(|&d| {
            multiples
                .iter()
                .map(|&m| deterministic_crossover_year(m, base_rate, base_rate + d, base_year))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityGrid {
        multiples: multiples.to_vec(),
        deltas: deltas.to_vec(),
        base_rate,
        base_year,
        cells,
    })
}

impl SensitivityGrid {
    pub fn cell(&self, delta: f64, multiple: f64) -> Option<Option<i32>> {
        let i = self.deltas.iter().position(|&d| d == delta)?;
        let j = self.multiples.iter().position(|&m| m == multiple)?;
        Some(self.cells[i][j])
    }

    /// Years never decrease along a row (as the multiple grows) and never
    /// increase down a column (as the delta grows), assuming sorted axes.
    /// A `None` cell counts as later than any year.
    pub fn is_monotone(&self) -> bool {
        let key = |c: Option<i32>| c.unwrap_or(i32::MAX);
        let rows_ok = self
            .cells
            .iter()
            .all(|row| row.windows(2).all(|w| key(w[0]) <= key(w[1])));
        let cols_ok = (0..self.multiples.len())
            .all(|j| self.cells.windows(2).all(|w| key(w[0][j]) >= key(w[1][j])));
        rows_ok && cols_ok
    }
}

impl fmt::Display for SensitivityGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>8}", "delta")?;
        for m in &self.multiples {
            write!(f, "{:>8}", format!("{m}X"))?;
        }
        writeln!(f)?;
        for (d, row) in self.deltas.iter().zip(&self.cells) {
            write!(f, "{:>8}", format!("{}%", d * 100.0))?;
            for c in row {
                match c {
                    Some(y) => write!(f, "{y:>8}")?,
                    None => write!(f, "{:>8}", "never")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearSummary {
    pub year: i32,
    pub count: usize,
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub mode_fraction_mean: Vec<(ModeId, f64)>,
}

/// Nearest-rank percentile of an ascending slice: the element at rank
/// `ceil(p/100 * n)`, with rank at least 1.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

pub fn summarize(results: &ResultSet) -> Result<Vec<YearSummary>> {
    if results.records.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut out: Vec<YearSummary> = Vec::new();
    for group in results.records.chunk_by(|a, b| a.year == b.year) {
        let mut costs: Vec<f64> = group.iter().map(|r| r.trip_cost).collect();
        costs.sort_by(f64::total_cmp);
        let n = group.len() as f64;
        let mode_fraction_mean = results
            .mode_ids()
            .map(|id| {
                (
                    id.clone(),
                    group.iter().map(|r| r.fraction(id)).sum::<f64>() / n,
                )
            })
            .collect();
        out.push(YearSummary {
            year: group[0].year,
            count: group.len(),
            p5: nearest_rank(&costs, 5.0),
            p25: nearest_rank(&costs, 25.0),
            p50: nearest_rank(&costs, 50.0),
            p75: nearest_rank(&costs, 75.0),
            p95: nearest_rank(&costs, 95.0),
            min: costs[0],
            max: costs[costs.len() - 1],
            mean: costs.iter().sum::<f64>() / n,
            mode_fraction_mean,
        });
    }
    Ok(out)
}

/// Weighted median: the smallest value whose cumulative weight reaches
/// half the total. `None` for empty or zero-weight input.
pub fn weighted_median(mut pairs: Vec<(f64, f64)>) -> Option<f64> {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if pairs.is_empty() || total <= 0.0 {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * total;
    let mut acc = 0.0;
    for (v, w) in &pairs {
        acc += w;
        if acc >= half {
            return Some(*v);
        }
    }
    pairs.last().map(|p| p.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearMedians {
    pub year: i32,
    /// Weighted median USD/t-km over trips dominated by the conventional mode.
    pub mode_median: Option<f64>,
    pub auto_median: Option<f64>,
    /// `auto_median / mode_median` when both exist.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverReport {
    pub mode: ModeId,
    pub auto_mode: ModeId,
    pub cost_multiple: f64,
    pub mode_rate: f64,
    pub auto_rate: f64,
    pub deterministic_year: Option<i32>,
    pub empirical_year: Option<i32>,
    pub basis: Vec<YearMedians>,
}

impl fmt::Display for CrossoverReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let year = |y: Option<i32>| y.map_or_else(|| "never".to_string(), |y| y.to_string());
        writeln!(f, "{} vs {}", self.mode, self.auto_mode)?;
        writeln!(
            f,
            "  cost multiple {:.4}, rates {:.2}% -> {:.2}%",
            self.cost_multiple,
            self.mode_rate * 100.0,
            self.auto_rate * 100.0
        )?;
        writeln!(
            f,
            "  deterministic crossover: {}",
            year(self.deterministic_year)
        )?;
        writeln!(
            f,
            "  empirical crossover:     {}",
            year(self.empirical_year)
        )?;
        writeln!(
            f,
            "  {:>6} {:>14} {:>14} {:>8}",
            "year",
            self.mode.as_str(),
            self.auto_mode.as_str(),
            "ratio"
        )?;
        for b in &self.basis {
            let cell = |v: Option<f64>, p: usize| {
                v.map_or_else(|| "-".to_string(), |v| format!("{v:.p$}"))
            };
            writeln!(
                f,
                "  {:>6} {:>14} {:>14} {:>8}",
                b.year,
                cell(b.mode_median, 6),
                cell(b.auto_median, 6),
                cell(b.ratio, 3)
            )?;
        }
        Ok(())
    }
}

fn dominated_median(results: &ResultSet, year: i32, mode: &ModeId) -> Option<f64> {
    let pairs = results
        .year(year)
        .filter_map(|r| {
            let f = r.fraction(mode);
            (f > 0.5).then(|| (results.unit_cost(r), f))
        })
        .collect();
    weighted_median(pairs)
}

/// Compares, year by year, the per-tonne-km cost of trips dominated (more
/// than half the distance) by each mode. The empirical crossover is the
/// first year the autonomous median is at or below the conventional one.
pub fn empirical_crossover(
    results: &ResultSet,
    mode: &ModeId,
    auto_mode: &ModeId,
) -> Result<CrossoverReport> {
    let find = |id: &ModeId| {
        results
            .modes
            .iter()
            .find(|m| &m.id == id)
            .ok_or_else(|| Error::UnknownMode(id.to_string()))
    };
    let base = find(mode)?;
    let auto = find(auto_mode)?;
    let starts = results.config.start_costs(&[base.clone(), auto.clone()])?;
    let cost_multiple = starts[1] / starts[0];
    let deterministic_year = deterministic_crossover_year(
        cost_multiple,
        base.improvement_rate_mean,
        auto.improvement_rate_mean,
        results.config.start_year,
    )?;

    let basis: Vec<YearMedians> = results
        .config
        .years()
        .map(|year| {
            let mode_median = dominated_median(results, year, mode);
            let auto_median = dominated_median(results, year, auto_mode);
            let ratio = match (mode_median, auto_median) {
                (Some(m), Some(a)) => Some(a / m),
                _ => None,
            };
            YearMedians {
                year,
                mode_median,
                auto_median,
                ratio,
            }
        })
        .collect();
    let empirical_year = basis
        .iter()
        .find(|b| matches!((b.auto_median, b.mode_median), (Some(a), Some(m)) if a <= m))
        .map(|b| b.year);

    Ok(CrossoverReport {
        mode: mode.clone(),
        auto_mode: auto_mode.clone(),
        cost_multiple,
        mode_rate: base.improvement_rate_mean,
        auto_rate: auto.improvement_rate_mean,
        deterministic_year,
        empirical_year,
        basis,
    })
}

/// Median sampled operating cost (USD/t-km) of every leg flown, sailed or
/// driven by each mode, per year. `None` where a mode carried no legs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCostMedians {
    pub year: i32,
    pub medians: Vec<(ModeId, Option<f64>)>,
}

pub fn sampled_cost_medians(results: &ResultSet) -> Vec<ModeCostMedians> {
    results
        .config
        .years()
        .map(|year| {
            let medians = results
                .mode_ids()
                .map(|id| {
                    let mut costs: Vec<f64> = results
                        .year(year)
                        .flat_map(|r| r.legs.iter())
                        .filter(|l| &l.mode == id)
                        .map(|l| l.op_cost)
                        .collect();
                    costs.sort_by(f64::total_cmp);
                    (
                        id.clone(),
                        (!costs.is_empty()).then(|| nearest_rank(&costs, 50.0)),
                    )
                })
                .collect();
            ModeCostMedians { year, medians }
        })
        .collect()
}
