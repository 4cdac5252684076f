//! Trace replay with cycle accounting.
//!
//! The core is in-order: each record first spends `instr_gap * base_cpi`
//! cycles of compute, then performs its L2 access. Hits cost the L2 latency;
//! misses add the DRAM latency, and load misses count as memory stall.
//! Refresh bursts occupy their bank for one cycle per refreshed line, and an
//! access that finds its bank busy waits for the burst to finish.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{CacheGeometry, CacheState, ReconfigReport};
use crate::controller::{self, ControllerConfig, Decision, SelectionInputs};
use crate::energy::{EnergyBreakdown, EnergyModel, EnergyParams, SchemeKind};
use crate::error::{Error, Result};
use crate::profiler::{IntervalStats, Profiler};
use crate::refresh::{RefreshConfig, RefreshPolicy};
use crate::trace::{total_instructions, Op, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingParams {
    pub l2_hit_cycles: u64,
    pub dram_latency_cycles: u64,
    pub base_cpi: f64,
    pub clock_ghz: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            l2_hit_cycles: 12,
            dram_latency_cycles: 154,
            base_cpi: 1.0,
            clock_ghz: 2.2,
        }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<()> {
        if self.l2_hit_cycles == 0 || self.dram_latency_cycles == 0 {
            return Err(Error::Config("latencies must be positive".into()));
        }
        if !(self.base_cpi.is_finite() && self.base_cpi > 0.0) {
            return Err(Error::Config(format!("base_cpi {} must be positive", self.base_cpi)));
        }
        if !(self.clock_ghz.is_finite() && self.clock_ghz > 0.0) {
            return Err(Error::Config(format!("clock_ghz {} must be positive", self.clock_ghz)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub refresh: Option<RefreshConfig>,
    pub controller: Option<ControllerConfig>,
}

impl SchemeSpec {
    pub fn baseline(refresh: RefreshConfig) -> Self {
        Self {
            kind: SchemeKind::BaselineEdram,
            refresh: Some(refresh),
            controller: None,
        }
    }

    pub fn sram() -> Self {
        Self {
            kind: SchemeKind::Sram,
            refresh: None,
            controller: None,
        }
    }

    pub fn rpv(refresh: RefreshConfig) -> Self {
        Self {
            kind: SchemeKind::Rpv,
            refresh: Some(refresh),
            controller: None,
        }
    }

    pub fn dcr(refresh: RefreshConfig, controller: ControllerConfig) -> Self {
        Self {
            kind: SchemeKind::Dcr,
            refresh: Some(refresh),
            controller: Some(controller),
        }
    }

    /// Builds the spec for `kind` from shared refresh and controller settings.
    pub fn for_kind(kind: SchemeKind, refresh: RefreshConfig, controller: ControllerConfig) -> Self {
        match kind {
            SchemeKind::BaselineEdram => Self::baseline(refresh),
            SchemeKind::Sram => Self::sram(),
            SchemeKind::Rpv => Self::rpv(refresh),
            SchemeKind::Dcr => Self::dcr(refresh, controller),
        }
    }

    pub fn policy(&self) -> Option<RefreshPolicy> {
        match self.kind {
            SchemeKind::BaselineEdram => Some(RefreshPolicy::RefreshAll),
            SchemeKind::Sram => None,
            SchemeKind::Rpv => Some(RefreshPolicy::PolyphaseValid),
            SchemeKind::Dcr => Some(RefreshPolicy::ValidOnlyActive),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.refresh.is_some(), self.controller.is_some()) {
            (SchemeKind::Sram, false, false) => Ok(()),
            (SchemeKind::Sram, _, _) => Err(Error::Config(
                "the SRAM scheme takes neither refresh nor controller settings".into(),
            )),
            (SchemeKind::Dcr, true, true) => Ok(()),
            (SchemeKind::Dcr, _, _) => Err(Error::Config(
                "the dcr scheme needs refresh and controller settings".into(),
            )),
            (_, true, false) => Ok(()),
            (kind, _, _) => Err(Error::Config(format!(
                "scheme {kind} needs refresh settings and no controller"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Instructions excluded from metrics; `None` means 10% of the trace.
    pub warmup_instructions: Option<u64>,
    /// Statistics interval for schemes without a controller.
    pub interval_instructions: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            warmup_instructions: None,
            interval_instructions: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRecord {
    pub stats: IntervalStats,
    pub energy: EnergyBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRecord {
    /// Index of the interval that just ended, counted from the start of the trace.
    pub interval: u64,
    pub warmup: bool,
    pub decision: Decision,
    pub reconfig: ReconfigReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTotals {
    pub instructions: u64,
    pub warmup_instructions: u64,
    pub cycles: u64,
    pub total_cycles: u64,
    pub refresh_events: u64,
    pub l2_hits: u64,
    pub l2_misses: u64,
    pub load_misses: u64,
    pub dram_accesses: u64,
    pub writebacks: u64,
    pub refreshed_lines: u64,
    pub memory_stall_cycles: u64,
    pub refresh_stall_cycles: u64,
    pub switched_blocks: u64,
    pub energy: EnergyBreakdown,
    pub total_energy_j: f64,
    pub rpki: f64,
    pub mpki: f64,
    pub active_ratio_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scheme: SchemeKind,
    pub totals: RunTotals,
    pub intervals: Vec<IntervalRecord>,
    pub decisions: Vec<DecisionRecord>,
}

struct Engine<'a> {
    kind: SchemeKind,
    timing: TimingParams,
    model: EnergyModel,
    cache: CacheState,
    refresh: Option<(RefreshPolicy, RefreshConfig)>,
    stride: u64,
    next_refresh: u64,
    bank_busy: Vec<u64>,
    profiler: Option<Profiler>,
    controller: Option<ControllerConfig>,
    now: u64,
    carry: f64,
    instructions: u64,
    interval_len: u64,
    next_boundary: u64,
    warmup: u64,
    measuring: bool,
    interval_index: u64,
    start_cycle: u64,
    start_instr: u64,
    measure_start_cycle: u64,
    refresh_events: u64,
    cur: IntervalStats,
    intervals: Vec<IntervalRecord>,
    decisions: Vec<DecisionRecord>,
    geometry: &'a CacheGeometry,
}

impl Engine<'_> {
    fn fire_refreshes(&mut self) {
        let Some((policy, cfg)) = self.refresh else {
            return;
        };
        while self.next_refresh <= self.now {
            let event = policy.fire(&self.cache, &cfg, self.next_refresh);
            for (busy, &lines) in self.bank_busy.iter_mut().zip(&event.per_bank_lines) {
                *busy = (*busy).max(event.at_cycle) + lines;
            }
            self.cur.refreshed_lines += event.lines_refreshed;
            self.cur.refresh_events += 1;
            self.refresh_events += 1;
            self.next_refresh += self.stride;
        }
    }

    fn step(&mut self, record: &TraceRecord) -> Result<()> {
        self.instructions += u64::from(record.instr_gap);
        self.carry += f64::from(record.instr_gap) * self.timing.base_cpi;
        let whole = self.carry.floor();
        self.carry -= whole;
        self.now += whole as u64;
        self.fire_refreshes();

        if self.refresh.is_some() {
            let bank = self.geometry.bank_of_set(self.cache.locate(record.address).set);
            while self.bank_busy[bank] > self.now {
                self.cur.refresh_stall_cycles += self.bank_busy[bank] - self.now;
                self.now = self.bank_busy[bank];
                self.fire_refreshes();
            }
        }

        let result = self.cache.access(record.op, record.address, self.now)?;
        if let Some(p) = self.profiler.as_mut() {
            p.observe(record.op, record.address);
        }
        if result.hit {
            self.cur.l2_hits += 1;
            self.now += self.timing.l2_hit_cycles;
        } else {
            let latency = self.timing.l2_hit_cycles + self.timing.dram_latency_cycles;
            self.cur.l2_misses += 1;
            self.cur.dram_accesses += 1;
            self.now += latency;
            if record.op == Op::Read {
                self.cur.load_misses += 1;
                self.cur.memory_stall_cycles += latency;
            }
        }
        if result.evicted_dirty {
            self.cur.writebacks += 1;
            self.cur.dram_accesses += 1;
        }

        if !self.measuring && self.instructions >= self.warmup {
            self.close_interval(false)?;
            self.measuring = true;
            self.measure_start_cycle = self.now;
        } else if self.instructions >= self.next_boundary {
            self.close_interval(false)?;
        }
        self.next_boundary = (self.instructions / self.interval_len + 1) * self.interval_len;
        Ok(())
    }

    fn close_interval(&mut self, last: bool) -> Result<()> {
        let mut stats = std::mem::take(&mut self.cur);
        stats.index = self.interval_index;
        stats.instructions = self.instructions - self.start_instr;
        stats.elapsed_cycles = self.now - self.start_cycle;
        stats.active_colors = self.cache.active_count();
        stats.active_fraction = f64::from(stats.active_colors) / f64::from(self.cache.colors());
        stats.profiler_accesses = self.profiler.as_ref().map_or(0, Profiler::accesses);

        if self.measuring {
            let energy = self.model.interval_energy(&stats, self.kind);
            self.intervals.push(IntervalRecord {
                stats: stats.clone(),
                energy,
            });
        }

        if let (false, Some(cfg), Some(profiler), Some((_, refresh))) =
            (last, self.controller, self.profiler.as_ref(), self.refresh)
        {
            if stats.elapsed_cycles > 0 && stats.accesses() > 0 {
                let estimate = profiler.estimates();
                let decision = controller::select(
                    &SelectionInputs {
                        stats: &stats,
                        estimate: &estimate,
                        n_valid: self.cache.n_valid(),
                        current_colors: self.cache.active_count(),
                        geometry: self.geometry,
                        refresh: &refresh,
                        model: &self.model,
                    },
                    &cfg,
                );
                let reconfig = controller::apply(&decision, &mut self.cache)?;
                self.cur.switched_blocks = reconfig.switched_blocks;
                self.cur.writebacks = reconfig.writebacks;
                self.cur.dram_accesses = reconfig.writebacks;
                self.decisions.push(DecisionRecord {
                    interval: self.interval_index,
                    warmup: !self.measuring,
                    decision,
                    reconfig,
                });
            }
        }
        if let Some(p) = self.profiler.as_mut() {
            p.reset_interval();
        }
        self.interval_index += 1;
        self.start_cycle = self.now;
        self.start_instr = self.instructions;
        Ok(())
    }
}

fn check_clock(what: &str, ghz: f64, timing: &TimingParams) -> Result<()> {
    if ghz != timing.clock_ghz {
        return Err(Error::Config(format!(
            "{what} clock {ghz} GHz conflicts with core clock {} GHz",
            timing.clock_ghz
        )));
    }
    Ok(())
}

/// Replays `trace` under one scheme.
pub fn run(
    trace: &[TraceRecord],
    scheme: &SchemeSpec,
    geometry: &CacheGeometry,
    timing: &TimingParams,
    params: &EnergyParams,
    options: &RunOptions,
) -> Result<RunReport> {
    scheme.validate()?;
    timing.validate()?;
    let mut cache = CacheState::new(*geometry)?;
    let model = EnergyModel::new(*params)?;
    check_clock("energy parameter", params.clock_ghz, timing)?;
    if trace.is_empty() {
        return Err(Error::InvalidInput("trace is empty".into()));
    }
    let total_instr = total_instructions(trace);
    let warmup = options.warmup_instructions.unwrap_or(total_instr / 10);
    if warmup >= total_instr {
        return Err(Error::InvalidInput(format!(
            "warm-up of {warmup} instructions covers the whole {total_instr}-instruction trace"
        )));
    }

    let refresh = match (scheme.policy(), scheme.refresh) {
        (Some(policy), Some(cfg)) => {
            cfg.validate()?;
            check_clock("refresh", cfg.clock_ghz, timing)?;
            policy.prepare(&mut cache, &cfg);
            Some((policy, cfg))
        }
        _ => None,
    };
    let stride = refresh.map_or(u64::MAX, |(p, cfg)| p.event_stride(&cfg));

    let mut interval_len = options.interval_instructions;
    let mut profiler = None;
    if let Some(cfg) = scheme.controller {
        cfg.validate(geometry.colors())?;
        cache.set_min_colors(cfg.min_colors(geometry.colors()))?;
        profiler = Some(Profiler::new(geometry, cfg.sampling_ratio)?);
        interval_len = cfg.interval_instructions;
    }
    if interval_len == 0 {
        return Err(Error::Config("interval_instructions must be positive".into()));
    }

    let mut engine = Engine {
        kind: scheme.kind,
        timing: *timing,
        model,
        cache,
        refresh,
        stride,
        next_refresh: stride,
        bank_busy: vec![0; geometry.banks()],
        profiler,
        controller: scheme.controller,
        now: 0,
        carry: 0.0,
        instructions: 0,
        interval_len,
        next_boundary: interval_len,
        warmup,
        measuring: warmup == 0,
        interval_index: 0,
        start_cycle: 0,
        start_instr: 0,
        measure_start_cycle: 0,
        refresh_events: 0,
        cur: IntervalStats::default(),
        intervals: Vec::new(),
        decisions: Vec::new(),
        geometry,
    };
    for record in trace {
        engine.step(record)?;
    }
    engine.fire_refreshes();
    if engine.instructions > engine.start_instr || engine.now > engine.start_cycle {
        engine.close_interval(true)?;
    }

    let warmup_effective = if warmup == 0 {
        0
    } else {
        engine.intervals.first().map_or(total_instr, |_| {
            total_instr - engine.intervals.iter().map(|i| i.stats.instructions).sum::<u64>()
        })
    };
    let totals = summarize(
        &engine.intervals,
        warmup_effective,
        engine.now,
        engine.refresh_events,
    );
    debug_assert_eq!(totals.cycles, engine.now - engine.measure_start_cycle);
    Ok(RunReport {
        scheme: scheme.kind,
        totals,
        intervals: engine.intervals,
        decisions: engine.decisions,
    })
}

fn summarize(
    intervals: &[IntervalRecord],
    warmup_instructions: u64,
    total_cycles: u64,
    refresh_events: u64,
) -> RunTotals {
    let mut t = RunTotals {
        instructions: 0,
        warmup_instructions,
        cycles: 0,
        total_cycles,
        refresh_events,
        l2_hits: 0,
        l2_misses: 0,
        load_misses: 0,
        dram_accesses: 0,
        writebacks: 0,
        refreshed_lines: 0,
        memory_stall_cycles: 0,
        refresh_stall_cycles: 0,
        switched_blocks: 0,
        energy: EnergyBreakdown::default(),
        total_energy_j: 0.0,
        rpki: 0.0,
        mpki: 0.0,
        active_ratio_pct: 0.0,
    };
    let mut weighted_active = 0.0;
    for rec in intervals {
        let s = &rec.stats;
        t.instructions += s.instructions;
        t.cycles += s.elapsed_cycles;
        t.l2_hits += s.l2_hits;
        t.l2_misses += s.l2_misses;
        t.load_misses += s.load_misses;
        t.dram_accesses += s.dram_accesses;
        t.writebacks += s.writebacks;
        t.refreshed_lines += s.refreshed_lines;
        t.memory_stall_cycles += s.memory_stall_cycles;
        t.refresh_stall_cycles += s.refresh_stall_cycles;
        t.switched_blocks += s.switched_blocks;
        t.energy += rec.energy;
        weighted_active += s.active_fraction * s.elapsed_cycles as f64;
    }
    t.total_energy_j = t.energy.total;
    let kilo = t.instructions as f64 / 1000.0;
    if kilo > 0.0 {
        t.rpki = t.refreshed_lines as f64 / kilo;
        t.mpki = t.l2_misses as f64 / kilo;
    }
    t.active_ratio_pct = if t.cycles > 0 {
        weighted_active / t.cycles as f64 * 100.0
    } else {
        100.0
    };
    t
}

/// Energy parameters for the two technologies a comparison needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCatalog {
    pub sram: EnergyParams,
    pub edram: EnergyParams,
}

impl EnergyCatalog {
    pub fn builtin() -> Self {
        use crate::energy::{builtin_params, Technology};
        Self {
            sram: builtin_params(Technology::Sram2Mb),
            edram: builtin_params(Technology::Edram2Mb),
        }
    }

    pub fn for_scheme(&self, kind: SchemeKind) -> &EnergyParams {
        match kind {
            SchemeKind::Sram => &self.sram,
            _ => &self.edram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeComparison {
    pub scheme: SchemeKind,
    pub total_energy_j: f64,
    pub cycles: u64,
    pub rpki: f64,
    pub mpki: f64,
    pub active_ratio_pct: f64,
    pub energy_saving_pct: f64,
    pub perf_improvement_pct: f64,
    pub delta_rpki: f64,
    pub delta_mpki: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<SchemeComparison>,
    #[serde(skip)]
    pub runs: Vec<RunReport>,
}

impl ComparisonReport {
    pub fn row(&self, kind: SchemeKind) -> Option<&SchemeComparison> {
        self.rows.iter().find(|r| r.scheme == kind)
    }

    pub fn run(&self, kind: SchemeKind) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.scheme == kind)
    }
}

/// Metrics of `run` relative to `base`.
pub fn relative(run: &RunReport, base: &RunReport) -> SchemeComparison {
    let (s, b) = (&run.totals, &base.totals);
    SchemeComparison {
        scheme: run.scheme,
        total_energy_j: s.total_energy_j,
        cycles: s.cycles,
        rpki: s.rpki,
        mpki: s.mpki,
        active_ratio_pct: s.active_ratio_pct,
        energy_saving_pct: (b.total_energy_j - s.total_energy_j) / b.total_energy_j * 100.0,
        perf_improvement_pct: (b.cycles as f64 - s.cycles as f64) / b.cycles as f64 * 100.0,
        delta_rpki: b.rpki - s.rpki,
        delta_mpki: s.mpki - b.mpki,
    }
}

/// Runs every scheme on the same trace and reports each against the eDRAM
/// baseline. Runs are independent and execute in parallel.
pub fn compare(
    trace: &[TraceRecord],
    schemes: &[SchemeSpec],
    geometry: &CacheGeometry,
    timing: &TimingParams,
    energy: &EnergyCatalog,
    options: &RunOptions,
) -> Result<ComparisonReport> {
    if schemes.len() < 2 {
        return Err(Error::Config("a comparison needs at least two schemes".into()));
    }
    if !schemes.iter().any(|s| s.kind == SchemeKind::BaselineEdram) {
        return Err(Error::Config("a comparison needs the baseline scheme".into()));
    }
    for s in schemes {
        s.validate()?;
    }
    let runs = schemes
        .par_iter()
        .map(|s| run(trace, s, geometry, timing, energy.for_scheme(s.kind), options))
        .collect::<Result<Vec<_>>>()?;
    let base = runs
        .iter()
        .find(|r| r.scheme == SchemeKind::BaselineEdram)
        .expect("baseline present");
    let rows = runs.iter().map(|r| relative(r, base)).collect();
    Ok(ComparisonReport { rows, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{builtin_params, Technology};
    use crate::trace::{generate_synthetic, PhaseSpec, SyntheticTraceSpec};

    fn trace(ws: u64, instrs: u64, apki: f64, seed: u64) -> Vec<TraceRecord> {
        generate_synthetic(&SyntheticTraceSpec {
            phases: vec![PhaseSpec {
                instruction_count: instrs,
                working_set_bytes: ws,
                write_fraction: 0.2,
                reuse_locality: 0.5,
            }],
            rng_seed: seed,
            accesses_per_kilo_instr: apki,
            description: String::new(),
        })
        .unwrap()
    }

    fn refresh40() -> RefreshConfig {
        RefreshConfig::new(40.0, 2.2, 4)
    }

    fn opts(interval: u64) -> RunOptions {
        RunOptions {
            warmup_instructions: None,
            interval_instructions: interval,
        }
    }

    #[test]
    fn sram_has_no_refresh() {
        let t = trace(256 << 10, 2_000_000, 20.0, 1);
        let r = run(
            &t,
            &SchemeSpec::sram(),
            &CacheGeometry::default(),
            &TimingParams::default(),
            &builtin_params(Technology::Sram2Mb),
            &opts(500_000),
        )
        .unwrap();
        assert_eq!(r.totals.refresh_events, 0);
        assert_eq!(r.totals.refreshed_lines, 0);
        assert_eq!(r.totals.energy.re_l2, 0.0);
        assert_eq!(r.totals.refresh_stall_cycles, 0);
        assert_eq!(r.totals.active_ratio_pct, 100.0);
    }

    #[test]
    fn baseline_event_count_follows_clock() {
        let t = trace(512 << 10, 3_000_000, 20.0, 2);
        let r = run(
            &t,
            &SchemeSpec::baseline(refresh40()),
            &CacheGeometry::default(),
            &TimingParams::default(),
            &builtin_params(Technology::Edram2Mb),
            &opts(1_000_000),
        )
        .unwrap();
        assert_eq!(r.totals.refresh_events, r.totals.total_cycles / 88_000);
        assert!(r.totals.refresh_stall_cycles > 0);
    }

    #[test]
    fn conservation_and_determinism() {
        let t = trace(1 << 20, 4_000_000, 25.0, 3);
        let go = || {
            run(
                &t,
                &SchemeSpec::dcr(
                    refresh40(),
                    ControllerConfig {
                        interval_instructions: 500_000,
                        ..Default::default()
                    },
                ),
                &CacheGeometry::default(),
                &TimingParams::default(),
                &builtin_params(Technology::Edram2Mb),
                &RunOptions::default(),
            )
            .unwrap()
        };
        let a = go();
        let b = go();
        assert_eq!(a, b);
        let total = total_instructions(&t);
        assert_eq!(a.totals.instructions + a.totals.warmup_instructions, total);
        let summed: f64 = a.intervals.iter().map(|i| i.energy.total).sum();
        assert!((summed - a.totals.total_energy_j).abs() <= 1e-15 * a.intervals.len() as f64);
        let c_min_pct = 4.0 / 64.0 * 100.0;
        assert!((c_min_pct..=100.0).contains(&a.totals.active_ratio_pct));
    }

    #[test]
    fn conflicting_configs_rejected() {
        let t = trace(64 << 10, 100_000, 20.0, 4);
        let g = CacheGeometry::default();
        let p = builtin_params(Technology::Edram2Mb);
        let bad_sram = SchemeSpec {
            refresh: Some(refresh40()),
            ..SchemeSpec::sram()
        };
        assert!(run(&t, &bad_sram, &g, &TimingParams::default(), &p, &opts(10_000)).is_err());
        let slow = TimingParams {
            clock_ghz: 1.0,
            ..Default::default()
        };
        assert!(run(&t, &SchemeSpec::rpv(refresh40()), &g, &slow, &p, &opts(10_000)).is_err());
        assert!(run(&[], &SchemeSpec::rpv(refresh40()), &g, &TimingParams::default(), &p, &opts(10)).is_err());
    }

    #[test]
    fn compare_requires_baseline() {
        let t = trace(64 << 10, 100_000, 20.0, 5);
        let err = compare(
            &t,
            &[SchemeSpec::sram(), SchemeSpec::rpv(refresh40())],
            &CacheGeometry::default(),
            &TimingParams::default(),
            &EnergyCatalog::builtin(),
            &opts(50_000),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn baseline_against_itself_is_zero() {
        let t = trace(256 << 10, 1_000_000, 20.0, 6);
        let c = compare(
            &t,
            &[SchemeSpec::baseline(refresh40()), SchemeSpec::rpv(refresh40())],
            &CacheGeometry::default(),
            &TimingParams::default(),
            &EnergyCatalog::builtin(),
            &opts(250_000),
        )
        .unwrap();
        let b = c.row(SchemeKind::BaselineEdram).unwrap();
        assert_eq!((b.energy_saving_pct, b.perf_improvement_pct, b.delta_rpki), (0.0, 0.0, 0.0));
        let rpv = c.row(SchemeKind::Rpv).unwrap();
        assert!(rpv.delta_rpki >= 0.0);
        assert_eq!(rpv.delta_mpki, 0.0);
        assert_eq!(rpv.active_ratio_pct, 100.0);
    }
}
