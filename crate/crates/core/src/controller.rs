//! Interval-driven cache resizing.
//!
//! At the end of each interval the controller enumerates the candidate color
//! counts near the current allocation, estimates each candidate's run time
//! and energy for the next interval from the profiling units, discards those
//! whose slowdown against a full-size cache exceeds `beta_pct`, and picks the
//! cheapest survivor.

use serde::{Deserialize, Serialize};

use crate::cache::{CacheGeometry, CacheState, ReconfigReport};
use crate::energy::{EnergyModel, Prediction};
use crate::error::{Error, Result};
use crate::profiler::{
    estimate_misses, estimate_refreshes, estimate_time, IntervalStats, SizeEstimate,
    DEFAULT_SAMPLING_RATIO,
};
use crate::refresh::RefreshConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Minimum colors kept allocated; `None` means `M / 16`.
    pub c_min: Option<u32>,
    pub granularity: u32,
    pub delta: u32,
    pub beta_pct: f64,
    pub interval_instructions: u64,
    pub sampling_ratio: u32,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            c_min: None,
            granularity: 2,
            delta: 16,
            beta_pct: 3.0,
            interval_instructions: 10_000_000,
            sampling_ratio: DEFAULT_SAMPLING_RATIO,
        }
    }
}

impl ControllerConfig {
    pub fn min_colors(&self, total_colors: u32) -> u32 {
        self.c_min.unwrap_or(total_colors / 16).max(1)
    }

    pub fn validate(&self, total_colors: u32) -> Result<()> {
        let c_min = self.min_colors(total_colors);
        if c_min > total_colors {
            return Err(Error::Config(format!("c_min {c_min} exceeds {total_colors} colors")));
        }
        if self.granularity == 0 {
            return Err(Error::Config("granularity must be at least 1".into()));
        }
        if self.delta < self.granularity {
            return Err(Error::Config(format!(
                "delta {} is smaller than granularity {}",
                self.delta, self.granularity
            )));
        }
        if !(self.beta_pct.is_finite() && self.beta_pct > 0.0) {
            return Err(Error::Config(format!("beta {} must be positive", self.beta_pct)));
        }
        if self.interval_instructions == 0 {
            return Err(Error::Config("interval_instructions must be positive".into()));
        }
        if !total_colors.is_multiple_of(self.granularity) {
            return Err(Error::Config(format!(
                "{total_colors} colors is not a multiple of granularity {}",
                self.granularity
            )));
        }
        Ok(())
    }
}

/// Color counts within `delta` of `current`, inside `[c_min, total]`, and a
/// multiple of the granularity. Ascending.
pub fn candidate_space(current: u32, total_colors: u32, cfg: &ControllerConfig) -> Vec<u32> {
    let g = cfg.granularity.max(1);
    let lo = cfg.min_colors(total_colors).max(current.saturating_sub(cfg.delta));
    let hi = total_colors.min(current.saturating_add(cfg.delta));
    let first = lo.div_ceil(g) * g;
    (first..=hi).step_by(g as usize).collect()
}

/// Percentage extra time of a candidate over the full-size cache.
pub fn delta_pct(t_i: f64, t_0: f64) -> Result<f64> {
    if t_0 == 0.0 || !t_0.is_finite() {
        return Err(Error::InvalidInput(format!("full-size time estimate {t_0} is not usable")));
    }
    Ok((t_i - t_0) / t_0 * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub colors: u32,
    pub est_misses: f64,
    pub est_load_misses: f64,
    pub est_time: f64,
    pub delta_pct: f64,
    pub est_refreshes: u64,
    pub est_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub current: u32,
    pub chosen: u32,
    pub full_size_time: f64,
    pub candidates: Vec<Candidate>,
    pub rejected_by_beta: Vec<u32>,
    /// Every candidate exceeded beta; the least-slowed one was kept.
    pub fail_safe: bool,
}

pub struct SelectionInputs<'a> {
    pub stats: &'a IntervalStats,
    pub estimate: &'a SizeEstimate,
    pub n_valid: u64,
    pub current_colors: u32,
    pub geometry: &'a CacheGeometry,
    pub refresh: &'a RefreshConfig,
    pub model: &'a EnergyModel,
}

/// Filters by `beta` and returns `(chosen, rejected, fail_safe)`. Energy and
/// slowdown ties go to fewer colors.
pub fn choose(candidates: &[Candidate], beta_pct: f64) -> (u32, Vec<u32>, bool) {
    let mut sorted: Vec<&Candidate> = candidates.iter().collect();
    sorted.sort_by_key(|c| c.colors);
    let rejected: Vec<u32> = sorted
        .iter()
        .filter(|c| c.delta_pct > beta_pct)
        .map(|c| c.colors)
        .collect();
    let mut best: Option<&Candidate> = None;
    for c in sorted.iter().filter(|c| c.delta_pct <= beta_pct) {
        if best.is_none_or(|b| c.est_energy < b.est_energy) {
            best = Some(c);
        }
    }
    if let Some(b) = best {
        return (b.colors, rejected, false);
    }
    let mut safest = sorted[0];
    for c in &sorted[1..] {
        if c.delta_pct < safest.delta_pct {
            safest = c;
        }
    }
    (safest.colors, rejected, true)
}

pub fn select(inputs: &SelectionInputs<'_>, cfg: &ControllerConfig) -> Decision {
    let geometry = inputs.geometry;
    let total = geometry.colors();
    let stats = inputs.stats;
    let current = inputs.current_colors;

    let (_, full_lm) = estimate_misses(inputs.estimate, total, geometry);
    let t_0 = estimate_time(stats, full_lm);
    let writeback_ratio = if stats.l2_misses == 0 {
        0.0
    } else {
        stats.writebacks as f64 / stats.l2_misses as f64
    };
    let accesses = stats.accesses() as f64;

    let candidates: Vec<Candidate> = candidate_space(current, total, cfg)
        .into_iter()
        .map(|colors| {
            let (est_misses, est_load_misses) = estimate_misses(inputs.estimate, colors, geometry);
            let est_time = estimate_time(stats, est_load_misses);
            let delta = delta_pct(est_time, t_0).unwrap_or(0.0);
            let est_refreshes =
                estimate_refreshes(inputs.n_valid, colors, geometry, est_time, inputs.refresh);
            let prediction = Prediction {
                colors,
                total_colors: total,
                est_misses,
                est_hits: (accesses - est_misses).max(0.0),
                est_refreshes,
                est_cycles: est_time,
                est_dram_accesses: est_misses * (1.0 + writeback_ratio),
                switched_blocks: u64::from(colors.abs_diff(current)) * geometry.lines_per_color(),
                profiler_accesses: stats.profiler_accesses,
            };
            Candidate {
                colors,
                est_misses,
                est_load_misses,
                est_time,
                delta_pct: delta,
                est_refreshes,
                est_energy: inputs.model.predict_energy(&prediction).total,
            }
        })
        .collect();

    let (chosen, rejected_by_beta, fail_safe) = choose(&candidates, cfg.beta_pct);
    Decision {
        current,
        chosen,
        full_size_time: t_0,
        candidates,
        rejected_by_beta,
        fail_safe,
    }
}

/// Resizes the cache to the chosen color count.
pub fn apply(decision: &Decision, cache: &mut CacheState) -> Result<ReconfigReport> {
    cache.resize(decision.chosen)
}
