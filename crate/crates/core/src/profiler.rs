//! Set-sampled auxiliary tag directories and the interval estimators built
//! on them.
//!
//! Five profiling units emulate conventional LRU caches of the full L2 size
//! and of 1/2, 1/4, 1/8 and 1/16 of it. Each stores tags only, for one set in
//! every `sampling_ratio`. Every unit samples sets whose index is a multiple
//! of the ratio, so all units watch the same blocks and LRU inclusion makes
//! the smaller units miss at least as often as the larger ones.

use serde::{Deserialize, Serialize};

use crate::cache::{lines_at, CacheGeometry};
use crate::error::{Error, Result};
use crate::refresh::RefreshConfig;
use crate::trace::Op;

/// Divisors of the L2 size that get a profiling unit.
pub const PROFILED_DIVISORS: [u64; 5] = [1, 2, 4, 8, 16];
pub const DEFAULT_SAMPLING_RATIO: u32 = 64;

/// Per-interval counters collected by the simulator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub index: u64,
    pub instructions: u64,
    pub l2_hits: u64,
    pub l2_misses: u64,
    pub load_misses: u64,
    pub memory_stall_cycles: u64,
    pub refresh_stall_cycles: u64,
    pub refreshed_lines: u64,
    pub refresh_events: u64,
    pub dram_accesses: u64,
    pub writebacks: u64,
    pub active_colors: u32,
    pub active_fraction: f64,
    pub elapsed_cycles: u64,
    pub switched_blocks: u64,
    pub profiler_accesses: u64,
}

impl IntervalStats {
    pub fn accesses(&self) -> u64 {
        self.l2_hits + self.l2_misses
    }
}

#[derive(Debug, Clone)]
pub struct ProfilingUnit {
    emulated_size: u64,
    sets: u64,
    ways: usize,
    block_bytes: u64,
    sampling_ratio: u32,
    /// Tags of each sampled set, most recent first.
    tags: Vec<Vec<u64>>,
    pub misses: u64,
    pub load_misses: u64,
    pub accesses: u64,
}

impl ProfilingUnit {
    pub fn new(emulated_size: u64, ways: u32, block_bytes: u64, sampling_ratio: u32) -> Result<Self> {
        let sets = emulated_size / (block_bytes * u64::from(ways));
        if sets == 0 || !sets.is_power_of_two() {
            return Err(Error::Geometry(format!(
                "profiling unit of {emulated_size} bytes has {sets} sets"
            )));
        }
        if sampling_ratio == 0 || !sampling_ratio.is_power_of_two() {
            return Err(Error::Config(format!(
                "sampling ratio 1/{sampling_ratio} must be a power of two"
            )));
        }
        if u64::from(sampling_ratio) > sets {
            return Err(Error::Config(format!(
                "sampling ratio 1/{sampling_ratio} leaves no sampled set in a {sets}-set unit"
            )));
        }
        let sampled = (sets / u64::from(sampling_ratio)) as usize;
        Ok(Self {
            emulated_size,
            sets,
            ways: ways as usize,
            block_bytes,
            sampling_ratio,
            tags: vec![Vec::with_capacity(ways as usize); sampled],
            misses: 0,
            load_misses: 0,
            accesses: 0,
        })
    }

    pub fn emulated_size(&self) -> u64 {
        self.emulated_size
    }

    pub fn sampling_ratio(&self) -> u32 {
        self.sampling_ratio
    }

    pub fn sampled_sets(&self) -> usize {
        self.tags.len()
    }

    pub fn ways(&self) -> usize {
        self.ways
    }

    pub fn observe(&mut self, op: Op, address: u64) {
        let block = address / self.block_bytes;
        let set = block % self.sets;
        let ratio = u64::from(self.sampling_ratio);
        if !set.is_multiple_of(ratio) {
            return;
        }
        self.accesses += 1;
        let entries = &mut self.tags[(set / ratio) as usize];
        match entries.iter().position(|&t| t == block) {
            Some(pos) => {
                entries[..=pos].rotate_right(1);
            }
            None => {
                self.misses += 1;
                if op == Op::Read {
                    self.load_misses += 1;
                }
                if entries.len() == self.ways {
                    entries.pop();
                }
                entries.insert(0, block);
            }
        }
    }

    pub fn reset_counters(&mut self) {
        self.misses = 0;
        self.load_misses = 0;
        self.accesses = 0;
    }

    pub fn tag_entries(&self) -> u64 {
        self.tags.len() as u64 * self.ways as u64
    }
}

/// Estimated misses and load misses for one emulated size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizePoint {
    pub size_bytes: u64,
    pub est_misses: f64,
    pub est_load_misses: f64,
}

/// Profiled points sorted by increasing size; counts already scaled by the
/// sampling ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeEstimate {
    pub points: Vec<SizePoint>,
}

impl SizeEstimate {
    pub fn new(mut points: Vec<SizePoint>) -> Self {
        points.sort_by_key(|p| p.size_bytes);
        Self { points }
    }

    /// Log-linear interpolation in size. Sizes outside the profiled range
    /// clamp to the nearest end point.
    pub fn at_size(&self, size_bytes: f64) -> (f64, f64) {
        let first = self.points.first().expect("at least one profiled size");
        let last = self.points.last().unwrap();
        if size_bytes <= first.size_bytes as f64 {
            return (first.est_misses, first.est_load_misses);
        }
        if size_bytes >= last.size_bytes as f64 {
            return (last.est_misses, last.est_load_misses);
        }
        for pair in self.points.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if size_bytes == lo.size_bytes as f64 {
                return (lo.est_misses, lo.est_load_misses);
            }
            if size_bytes < hi.size_bytes as f64 {
                let t = (size_bytes.log2() - (lo.size_bytes as f64).log2())
                    / ((hi.size_bytes as f64).log2() - (lo.size_bytes as f64).log2());
                return (
                    lo.est_misses + t * (hi.est_misses - lo.est_misses),
                    lo.est_load_misses + t * (hi.est_load_misses - lo.est_load_misses),
                );
            }
        }
        (last.est_misses, last.est_load_misses)
    }
}

/// The five profiling units of one simulated cache.
#[derive(Debug, Clone)]
pub struct Profiler {
    units: Vec<ProfilingUnit>,
    l2_size: u64,
}

impl Profiler {
    pub fn new(geometry: &CacheGeometry, sampling_ratio: u32) -> Result<Self> {
        let units = PROFILED_DIVISORS
            .iter()
            .map(|d| {
                ProfilingUnit::new(
                    geometry.size_bytes / d,
                    geometry.associativity,
                    geometry.block_bytes,
                    sampling_ratio,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            units,
            l2_size: geometry.size_bytes,
        })
    }

    pub fn units(&self) -> &[ProfilingUnit] {
        &self.units
    }

    pub fn observe(&mut self, op: Op, address: u64) {
        for unit in &mut self.units {
            unit.observe(op, address);
        }
    }

    /// Sampled probes across all units in the current interval.
    pub fn accesses(&self) -> u64 {
        self.units.iter().map(|u| u.accesses).sum()
    }

    pub fn estimates(&self) -> SizeEstimate {
        SizeEstimate::new(
            self.units
                .iter()
                .map(|u| {
                    let r = f64::from(u.sampling_ratio);
                    SizePoint {
                        size_bytes: u.emulated_size,
                        est_misses: u.misses as f64 * r,
                        est_load_misses: u.load_misses as f64 * r,
                    }
                })
                .collect(),
        )
    }

    /// Zeroes interval counters. Tag arrays stay warm.
    pub fn reset_interval(&mut self) {
        for unit in &mut self.units {
            unit.reset_counters();
        }
    }

    /// Tag storage of all units as a fraction of the L2 data capacity.
    pub fn storage_overhead(&self, tag_bits: u32) -> f64 {
        let entries: u64 = self.units.iter().map(ProfilingUnit::tag_entries).sum();
        (entries * u64::from(tag_bits)) as f64 / (self.l2_size * 8) as f64
    }
}

/// Miss and load-miss estimates for a cache of `colors` of the `M` colors.
pub fn estimate_misses(estimate: &SizeEstimate, colors: u32, geometry: &CacheGeometry) -> (f64, f64) {
    let size = f64::from(colors) / f64::from(geometry.colors()) * geometry.size_bytes as f64;
    estimate.at_size(size)
}

/// Interval time if the interval had seen `est_load_misses` load misses,
/// holding stall cycles per load miss at the measured value.
pub fn estimate_time(stats: &IntervalStats, est_load_misses: f64) -> f64 {
    let stall_per_miss = if stats.load_misses == 0 {
        0.0
    } else {
        stats.memory_stall_cycles as f64 / stats.load_misses as f64
    };
    (stats.elapsed_cycles - stats.memory_stall_cycles) as f64 + stall_per_miss * est_load_misses
}

/// Lines refreshed in an interval of `est_cycles` at `colors` colors.
pub fn estimate_refreshes(
    n_valid: u64,
    colors: u32,
    geometry: &CacheGeometry,
    est_cycles: f64,
    config: &RefreshConfig,
) -> u64 {
    let per_event = n_valid.min(lines_at(geometry, colors));
    if est_cycles <= 0.0 {
        return 0;
    }
    let periods = (est_cycles / config.retention_cycles() as f64).floor() as u64;
    per_event * periods
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(size: u64, m: f64, lm: f64) -> SizePoint {
        SizePoint {
            size_bytes: size,
            est_misses: m,
            est_load_misses: lm,
        }
    }

    fn sample_estimate() -> SizeEstimate {
        let s = 2u64 << 20;
        SizeEstimate::new(vec![
            point(s, 100.0, 80.0),
            point(s / 2, 400.0, 300.0),
            point(s / 4, 1600.0, 1000.0),
            point(s / 8, 3000.0, 2500.0),
            point(s / 16, 5000.0, 4000.0),
        ])
    }

    #[test]
    fn exact_points_and_interpolation() {
        let g = CacheGeometry::default();
        let est = sample_estimate();
        assert_eq!(estimate_misses(&est, 64, &g), (100.0, 80.0));
        assert_eq!(estimate_misses(&est, 32, &g), (400.0, 300.0));
        // 3M/8 sits between X/4 and X/2 at log2(1.5) of the way.
        let t = 1.5f64.log2();
        let (m, lm) = estimate_misses(&est, 24, &g);
        assert!((m - (1600.0 + t * (400.0 - 1600.0))).abs() < 1e-9);
        assert!((lm - (1000.0 + t * (300.0 - 1000.0))).abs() < 1e-9);
        // Below X/16 clamps.
        assert_eq!(estimate_misses(&est, 2, &g), (5000.0, 4000.0));
    }

    fn stats(elapsed: u64, stall: u64, load_misses: u64) -> IntervalStats {
        IntervalStats {
            elapsed_cycles: elapsed,
            memory_stall_cycles: stall,
            load_misses,
            ..Default::default()
        }
    }

    #[test]
    fn estimate_time_examples() {
        let s = stats(10_000_000, 4_000_000, 20_000);
        assert_eq!(estimate_time(&s, 20_000.0), 10_000_000.0);
        assert_eq!(estimate_time(&s, 0.0), 6_000_000.0);
        assert_eq!(estimate_time(&s, 30_000.0), 12_000_000.0);
        assert_eq!(estimate_time(&stats(500, 0, 0), 1e6), 500.0);
    }

    #[test]
    fn estimate_time_is_linear() {
        let s = stats(7_777_777, 1_234_567, 4321);
        let a = estimate_time(&s, 1000.0);
        let b = estimate_time(&s, 3000.0);
        let c = estimate_time(&s, 5000.0);
        assert!(((c - b) - (b - a)).abs() < 1e-6);
    }

    #[test]
    fn estimate_refreshes_examples() {
        let g = CacheGeometry::default();
        let cfg = RefreshConfig::new(40.0, 2.2, 4);
        assert_eq!(estimate_refreshes(20_000, 64, &g, 880_000.0, &cfg), 200_000);
        assert_eq!(estimate_refreshes(0, 64, &g, 880_000.0, &cfg), 0);
        // 512 lines at one color: the count clamps to capacity.
        assert_eq!(estimate_refreshes(1000, 1, &g, 88_000.0, &cfg), 512);
    }

    #[test]
    fn unsampled_set_is_ignored() {
        let g = CacheGeometry::default();
        let mut p = Profiler::new(&g, 64).unwrap();
        // Block 1 lands in set 1 of every unit, which is never sampled.
        p.observe(Op::Read, 64);
        assert_eq!(p.accesses(), 0);
        assert!(p.units().iter().all(|u| u.misses == 0));
        p.observe(Op::Read, 0);
        assert_eq!(p.accesses(), 5);
    }

    #[test]
    fn overhead_under_bound() {
        let p = Profiler::new(&CacheGeometry::default(), 64).unwrap();
        let o = p.storage_overhead(30);
        assert!(o <= 0.002, "overhead {o}");
    }

    #[test]
    fn ratio_larger_than_smallest_unit_rejected() {
        let g = CacheGeometry {
            size_bytes: 64 << 10,
            associativity: 4,
            block_bytes: 64,
            page_bytes: 1024,
            bank_bytes: 64 << 10,
        };
        assert!(Profiler::new(&g, 64).is_err());
        assert!(Profiler::new(&g, 8).is_ok());
    }
}
