//! eDRAM refresh policies.
//!
//! * `RefreshAll` refreshes every line of the cache once per retention period.
//! * `PolyphaseValid` splits the period into `k` phases and, at each phase
//!   boundary, refreshes the valid lines last touched in that phase. An access
//!   recharges a line, so it is not due again until the same phase comes
//!   round one period later.
//! * `ValidOnlyActive` refreshes the valid lines of the powered colors once
//!   per period.
//!
//! A line takes one cycle to refresh. Banks refresh in parallel.

use serde::{Deserialize, Serialize};

use crate::cache::{CacheState, PhaseClock};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefreshConfig {
    pub retention_period_us: f64,
    pub clock_ghz: f64,
    /// Phase count, used by the polyphase policy only.
    pub phases: u8,
}

impl RefreshConfig {
    pub fn new(retention_period_us: f64, clock_ghz: f64, phases: u8) -> Self {
        Self {
            retention_period_us,
            clock_ghz,
            phases,
        }
    }

    pub fn retention_cycles(&self) -> u64 {
        (self.retention_period_us * self.clock_ghz * 1000.0).round() as u64
    }

    pub fn phase_cycles(&self) -> u64 {
        self.retention_cycles() / u64::from(self.phases.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.retention_period_us.is_finite() && self.retention_period_us > 0.0) {
            return Err(Error::Config(format!(
                "retention_period_us must be positive, got {}",
                self.retention_period_us
            )));
        }
        if !(self.clock_ghz.is_finite() && self.clock_ghz > 0.0) {
            return Err(Error::Config(format!("clock_ghz must be positive, got {}", self.clock_ghz)));
        }
        if self.phases == 0 {
            return Err(Error::Config("phase count must be at least 1".into()));
        }
        let cycles = self.retention_cycles();
        if cycles == 0 {
            return Err(Error::Config("retention period rounds to zero cycles".into()));
        }
        if !cycles.is_multiple_of(u64::from(self.phases)) {
            return Err(Error::Config(format!(
                "retention period of {cycles} cycles is not divisible by {} phases",
                self.phases
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RefreshPolicy {
    RefreshAll,
    PolyphaseValid,
    ValidOnlyActive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefreshEvent {
    pub at_cycle: u64,
    pub lines_refreshed: u64,
    pub per_bank_lines: Vec<u64>,
}

/// Refresh every line in every color, valid or not.
pub fn refresh_all(state: &CacheState, _config: &RefreshConfig, at_cycle: u64) -> RefreshEvent {
    let g = state.geometry();
    let per_bank = g.sets_per_bank() * u64::from(g.associativity);
    let per_bank_lines = vec![per_bank; g.banks()];
    RefreshEvent {
        at_cycle,
        lines_refreshed: per_bank * g.banks() as u64,
        per_bank_lines,
    }
}

/// Refresh the valid lines stamped with `phase_index`.
pub fn rpv_refresh(
    state: &CacheState,
    config: &RefreshConfig,
    phase_index: u8,
    at_cycle: u64,
) -> RefreshEvent {
    rpv_refresh_visit(state, config, phase_index, at_cycle, &mut |_, _| {})
}

pub fn rpv_refresh_visit(
    state: &CacheState,
    _config: &RefreshConfig,
    phase_index: u8,
    at_cycle: u64,
    visit: &mut dyn FnMut(u64, usize),
) -> RefreshEvent {
    let g = state.geometry();
    let mut per_bank_lines = vec![0; g.banks()];
    let ways = state.ways();
    for (i, line) in state.lines().iter().enumerate() {
        if line.valid && line.last_update_phase == Some(phase_index) {
            let set = (i / ways) as u64;
            per_bank_lines[g.bank_of_set(set)] += 1;
            visit(set, i % ways);
        }
    }
    RefreshEvent {
        at_cycle,
        lines_refreshed: per_bank_lines.iter().sum(),
        per_bank_lines,
    }
}

/// Refresh every valid line. Uses the cache's per-bank valid counters.
pub fn valid_only_refresh(state: &CacheState, _config: &RefreshConfig, at_cycle: u64) -> RefreshEvent {
    let banks = state.geometry().banks();
    let per_bank_lines: Vec<u64> = (0..banks).map(|b| state.valid_in_bank(b)).collect();
    RefreshEvent {
        at_cycle,
        lines_refreshed: state.n_valid(),
        per_bank_lines,
    }
}

impl RefreshPolicy {
    /// Cycles between consecutive refresh events.
    pub fn event_stride(self, config: &RefreshConfig) -> u64 {
        match self {
            RefreshPolicy::PolyphaseValid => config.phase_cycles(),
            RefreshPolicy::RefreshAll | RefreshPolicy::ValidOnlyActive => config.retention_cycles(),
        }
    }

    /// Installs whatever per-line bookkeeping the policy needs.
    pub fn prepare(self, state: &mut CacheState, config: &RefreshConfig) {
        let clock = match self {
            RefreshPolicy::PolyphaseValid => Some(PhaseClock {
                phase_cycles: config.phase_cycles(),
                phases: config.phases,
            }),
            _ => None,
        };
        state.set_phase_clock(clock);
    }

    /// Phase whose boundary falls at `at_cycle`.
    pub fn phase_index(config: &RefreshConfig, at_cycle: u64) -> u8 {
        ((at_cycle / config.phase_cycles()) % u64::from(config.phases)) as u8
    }

    pub fn fire(self, state: &CacheState, config: &RefreshConfig, at_cycle: u64) -> RefreshEvent {
        debug_assert_eq!(at_cycle % self.event_stride(config), 0);
        match self {
            RefreshPolicy::RefreshAll => refresh_all(state, config, at_cycle),
            RefreshPolicy::PolyphaseValid => {
                rpv_refresh(state, config, Self::phase_index(config, at_cycle), at_cycle)
            }
            RefreshPolicy::ValidOnlyActive => valid_only_refresh(state, config, at_cycle),
        }
    }

    /// Same as [`RefreshPolicy::fire`] but scans the array and reports each
    /// refreshed `(set, way)`.
    pub fn fire_visit(
        self,
        state: &CacheState,
        config: &RefreshConfig,
        at_cycle: u64,
        visit: &mut dyn FnMut(u64, usize),
    ) -> RefreshEvent {
        let g = state.geometry();
        let ways = state.ways();
        match self {
            RefreshPolicy::PolyphaseValid => rpv_refresh_visit(
                state,
                config,
                Self::phase_index(config, at_cycle),
                at_cycle,
                visit,
            ),
            RefreshPolicy::RefreshAll | RefreshPolicy::ValidOnlyActive => {
                let all = self == RefreshPolicy::RefreshAll;
                let mut per_bank_lines = vec![0; g.banks()];
                for (i, line) in state.lines().iter().enumerate() {
                    if all || line.valid {
                        let set = (i / ways) as u64;
                        per_bank_lines[g.bank_of_set(set)] += 1;
                        visit(set, i % ways);
                    }
                }
                RefreshEvent {
                    at_cycle,
                    lines_refreshed: per_bank_lines.iter().sum(),
                    per_bank_lines,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::CacheGeometry;
    use crate::trace::Op;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg40() -> RefreshConfig {
        RefreshConfig::new(40.0, 2.2, 4)
    }

    #[test]
    fn retention_cycles_arithmetic() {
        assert_eq!(RefreshConfig::new(40.0, 1.0, 4).retention_cycles(), 40_000);
        assert_eq!(cfg40().retention_cycles(), 88_000);
        assert_eq!(cfg40().phase_cycles(), 22_000);
        assert!(RefreshConfig::new(40.0, 2.2, 3).validate().is_err());
        assert!(RefreshConfig::new(0.0, 2.2, 4).validate().is_err());
    }

    #[test]
    fn refresh_all_counts_every_line() {
        let mut c = CacheState::new(CacheGeometry::default()).unwrap();
        let a = refresh_all(&c, &cfg40(), 88_000);
        assert_eq!(a.lines_refreshed, 32768);
        assert_eq!(a.per_bank_lines, vec![16384, 16384]);
        c.access(Op::Write, 0x1000, 5).unwrap();
        let b = refresh_all(&c, &cfg40(), 176_000);
        assert_eq!(a.lines_refreshed, b.lines_refreshed);
    }

    #[test]
    fn empty_cache_refreshes_nothing_under_valid_policies() {
        let c = CacheState::new(CacheGeometry::default()).unwrap();
        assert_eq!(valid_only_refresh(&c, &cfg40(), 0).lines_refreshed, 0);
        for p in 0..4 {
            assert_eq!(rpv_refresh(&c, &cfg40(), p, 0).lines_refreshed, 0);
        }
    }

    #[test]
    fn valid_only_matches_n_valid() {
        let mut c = CacheState::new(CacheGeometry::default()).unwrap();
        for i in 0..512u64 {
            c.access(Op::Read, i * 64, i).unwrap();
        }
        let e = valid_only_refresh(&c, &cfg40(), 88_000);
        assert_eq!(e.lines_refreshed, 512);
        assert_eq!(e.per_bank_lines.iter().sum::<u64>(), 512);
    }

    #[test]
    fn valid_only_drops_by_flushed_count() {
        let mut c = CacheState::new(CacheGeometry::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..20_000u64 {
            c.access(Op::Read, rng.gen_range(0..(4u64 << 20)) & !63, i).unwrap();
        }
        let before = valid_only_refresh(&c, &cfg40(), 0).lines_refreshed;
        let report = c.resize(32).unwrap();
        let after = valid_only_refresh(&c, &cfg40(), 88_000).lines_refreshed;
        assert!(report.flushed_lines > 0);
        assert_eq!(before - after, report.flushed_lines);
    }

    #[test]
    fn rpv_refreshes_line_at_its_own_phase_next_period() {
        let cfg = cfg40();
        let mut c = CacheState::new(CacheGeometry::default()).unwrap();
        RefreshPolicy::PolyphaseValid.prepare(&mut c, &cfg);
        let phase = cfg.phase_cycles();
        let period = cfg.retention_cycles();
        // Written during phase 2 of period 0.
        c.access(Op::Write, 0x8000, 2 * phase + 17).unwrap();
        for p in 0..4u64 {
            let at = period + p * phase;
            let e = RefreshPolicy::PolyphaseValid.fire(&c, &cfg, at);
            assert_eq!(e.lines_refreshed, u64::from(p == 2), "boundary {p}");
        }
    }

    #[test]
    fn rpv_partitions_valid_lines_over_one_idle_period() {
        let cfg = cfg40();
        let mut c = CacheState::new(CacheGeometry::default()).unwrap();
        RefreshPolicy::PolyphaseValid.prepare(&mut c, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut now = 0;
        for _ in 0..30_000 {
            now += rng.gen_range(0..20);
            let op = if rng.gen_bool(0.3) { Op::Write } else { Op::Read };
            c.access(op, rng.gen_range(0..(3u64 << 20)), now).unwrap();
        }
        let start = (now / cfg.retention_cycles() + 1) * cfg.retention_cycles();
        let total: u64 = (0..4)
            .map(|p| {
                RefreshPolicy::PolyphaseValid
                    .fire(&c, &cfg, start + p * cfg.phase_cycles())
                    .lines_refreshed
            })
            .sum();
        assert_eq!(total, c.n_valid());
        assert!(total <= refresh_all(&c, &cfg, start).lines_refreshed);
    }

    #[test]
    fn counted_and_scanned_routes_agree() {
        let cfg = cfg40();
        let mut c = CacheState::new(CacheGeometry::default()).unwrap();
        RefreshPolicy::PolyphaseValid.prepare(&mut c, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for i in 0..5000u64 {
            c.access(Op::Read, rng.gen_range(0..(1u64 << 22)), i * 13).unwrap();
        }
        c.resize(40).unwrap();
        for policy in [
            RefreshPolicy::RefreshAll,
            RefreshPolicy::PolyphaseValid,
            RefreshPolicy::ValidOnlyActive,
        ] {
            for k in 0..4u64 {
                let at = k * cfg.phase_cycles() * if policy == RefreshPolicy::PolyphaseValid { 1 } else { 4 };
                let mut n = 0;
                let a = policy.fire(&c, &cfg, at);
                let b = policy.fire_visit(&c, &cfg, at, &mut |_, _| n += 1);
                assert_eq!(a, b);
                assert_eq!(n, a.lines_refreshed);
            }
        }
    }
}
