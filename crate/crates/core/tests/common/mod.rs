//! Brute-force references used by the integration tests. Nothing here is
//! clever on purpose: each oracle is a plain scan or a direct evaluation.
#![allow(dead_code)]

use edram_dcr::cache::{CacheGeometry, CacheState};
use edram_dcr::energy::{EnergyBreakdown, EnergyParams, SchemeKind};
use edram_dcr::profiler::IntervalStats;
use edram_dcr::refresh::{RefreshConfig, RefreshPolicy};
use edram_dcr::trace::{Op, TraceRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub ok: bool,
    pub first_divergence: Option<String>,
}

impl Verdict {
    fn ok() -> Self {
        Self {
            ok: true,
            first_divergence: None,
        }
    }

    fn fail(msg: String) -> Self {
        Self {
            ok: false,
            first_divergence: Some(msg),
        }
    }
}

/// 16 KB, 4-way, 1 KB pages: 64 sets, 4 colors, two 8 KB banks.
pub fn small_geometry() -> CacheGeometry {
    CacheGeometry {
        size_bytes: 16 << 10,
        associativity: 4,
        block_bytes: 64,
        page_bytes: 1 << 10,
        bank_bytes: 8 << 10,
    }
}

/// 2 us at 2 GHz: 4000-cycle retention, 1000-cycle phases.
pub fn small_refresh() -> RefreshConfig {
    RefreshConfig::new(2.0, 2.0, 4)
}

/// Random accesses over `span` bytes with gaps up to `max_gap`, long enough
/// to cover at least `min_cycles` when each instruction costs one cycle.
pub fn random_fragment(seed: u64, span: u64, max_gap: u32, min_cycles: u64) -> Vec<TraceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut t = 0u64;
    while t < min_cycles {
        let gap = rng.gen_range(0..=max_gap);
        t += u64::from(gap);
        let addr = rng.gen_range(0..span / 64) * 64;
        let op = if rng.gen_bool(0.3) { Op::Write } else { Op::Read };
        out.push(TraceRecord::new(gap, op, addr));
    }
    out
}

pub type FireFn<'a> = dyn FnMut(&CacheState, u64, &mut dyn FnMut(u64, usize)) + 'a;

/// Fires `policy` through the scanning route and cross-checks the count
/// against the counter route.
pub fn policy_fire(policy: RefreshPolicy, cfg: RefreshConfig) -> impl FnMut(&CacheState, u64, &mut dyn FnMut(u64, usize)) {
    move |state, at, visit| {
        let scanned = policy.fire_visit(state, &cfg, at, visit);
        let counted = policy.fire(state, &cfg, at);
        assert_eq!(scanned, counted, "scan and counter routes disagree at cycle {at}");
    }
}

/// Replays `fragment` with one cycle per instruction, tracking the time each
/// line was last charged. A line is charged when installed, read, written or
/// refreshed. Any valid line whose age exceeds the retention period before
/// it is recharged, evicted, flushed, or the run ends is a violation. The
/// run ends two retention periods after the last access.
///
/// `resize_every` forces a color-count change every that many records,
/// cycling through the even counts.
pub fn timeline_oracle(
    fragment: &[TraceRecord],
    geometry: CacheGeometry,
    policy: RefreshPolicy,
    cfg: RefreshConfig,
    fire: &mut FireFn<'_>,
    resize_every: Option<usize>,
) -> Verdict {
    let mut state = CacheState::new(geometry).expect("geometry");
    policy.prepare(&mut state, &cfg);
    let retention = cfg.retention_cycles();
    let stride = policy.event_stride(&cfg);
    let ways = state.ways();
    let mut charged: Vec<Option<u64>> = vec![None; state.lines().len()];
    let mut now = 0u64;
    let mut next_event = stride;
    let mut failure: Option<String> = None;

    let check = |charged: &[Option<u64>], idx: usize, at: u64, what: &str| -> Option<String> {
        match charged[idx] {
            Some(t) if at - t > retention => Some(format!(
                "line {idx} (set {}, way {}) {what} at cycle {at} after {} cycles without charge",
                idx / ways,
                idx % ways,
                at - t
            )),
            _ => None,
        }
    };

    let mut run_events = |state: &CacheState, charged: &mut Vec<Option<u64>>, until: u64, next_event: &mut u64, failure: &mut Option<String>| {
        while *next_event <= until {
            let at = *next_event;
            let mut visited = Vec::new();
            fire(state, at, &mut |set, way| visited.push(set as usize * ways + way));
            for idx in visited {
                if failure.is_none() && state.lines()[idx].valid {
                    *failure = check(charged, idx, at, "refreshed");
                }
                if state.lines()[idx].valid {
                    charged[idx] = Some(at);
                }
            }
            *next_event += stride;
        }
    };

    let mut colors_cycle = {
        let total = state.colors();
        let evens: Vec<u32> = (2..=total).step_by(2).collect();
        let mut order = evens.clone();
        order.reverse();
        order.extend(evens.into_iter().skip(1));
        order.into_iter().cycle()
    };

    for (i, rec) in fragment.iter().enumerate() {
        now += u64::from(rec.instr_gap);
        run_events(&state, &mut charged, now, &mut next_event, &mut failure);
        if failure.is_some() {
            break;
        }
        let loc = state.locate(rec.address);
        let before: Vec<(bool, u64)> = state
            .set_lines(loc.set)
            .iter()
            .map(|l| (l.valid, l.tag))
            .collect();
        let res = state.access(rec.op, rec.address, now).expect("access");
        let idx = res.set as usize * ways + res.way as usize;
        let (was_valid, _) = before[res.way as usize];
        if was_valid {
            let what = if res.hit { "touched" } else { "evicted" };
            if let Some(msg) = check(&charged, idx, now, what) {
                failure = Some(msg);
                break;
            }
        }
        charged[idx] = Some(now);
        now += 1;

        if let Some(every) = resize_every {
            if (i + 1) % every == 0 {
                let target = colors_cycle.next().unwrap();
                state.resize(target).expect("resize");
                for (j, line) in state.lines().iter().enumerate() {
                    if !line.valid && charged[j].is_some() {
                        if let Some(msg) = check(&charged, j, now, "flushed") {
                            failure.get_or_insert(msg);
                        }
                        charged[j] = None;
                    }
                }
            }
        }
    }

    if failure.is_none() {
        let end = now + 2 * retention;
        run_events(&state, &mut charged, end, &mut next_event, &mut failure);
        if failure.is_none() {
            for (j, line) in state.lines().iter().enumerate() {
                if line.valid {
                    if let Some(msg) = check(&charged, j, end, "still holds data") {
                        failure = Some(msg);
                        break;
                    }
                }
            }
        }
    }
    match failure {
        None => Verdict::ok(),
        Some(msg) => Verdict::fail(msg),
    }
}

/// Full scan of every structural invariant of the cache.
pub fn validate_state(state: &CacheState) -> Verdict {
    let g = *state.geometry();
    let ways = state.ways();
    let spc = g.sets_per_color();
    let mut valid = 0u64;
    let mut per_bank = vec![0u64; g.banks()];
    let active = state.active_colors();
    if active.len() as u32 != state.active_count() {
        return Verdict::fail(format!(
            "active_count {} but {} active colors",
            state.active_count(),
            active.len()
        ));
    }

    let entries = state.mapping().entries();
    if entries.len() as u32 != state.colors() {
        return Verdict::fail(format!("mapping has {} entries", entries.len()));
    }
    for (region, &color) in entries.iter().enumerate() {
        if !state.is_active(color) {
            return Verdict::fail(format!("region {region} maps to inactive color {color}"));
        }
    }
    for &c in &active {
        if !entries.contains(&c) {
            return Verdict::fail(format!("active color {c} has no region"));
        }
    }

    for set in 0..g.total_sets() {
        let lines = state.set_lines(set);
        let mut ranks: Vec<u16> = lines.iter().map(|l| l.recency).collect();
        ranks.sort_unstable();
        if ranks != (0..ways as u16).collect::<Vec<_>>() {
            return Verdict::fail(format!("set {set}: recency ranks {ranks:?}"));
        }
        let color = (set / spc) as u32;
        for (way, line) in lines.iter().enumerate() {
            if line.dirty && !line.valid {
                return Verdict::fail(format!("set {set} way {way}: dirty but invalid"));
            }
            if !line.valid {
                continue;
            }
            valid += 1;
            per_bank[(set / g.sets_per_bank()) as usize] += 1;
            if !state.is_active(color) {
                return Verdict::fail(format!("set {set} way {way}: valid line in inactive color {color}"));
            }
            let block = line.tag;
            let region = ((block * g.block_bytes / g.page_bytes) % u64::from(state.colors())) as usize;
            let want_set = u64::from(entries[region]) * spc + block % spc;
            if want_set != set {
                return Verdict::fail(format!(
                    "set {set} way {way}: block {block} belongs in set {want_set}"
                ));
            }
        }
    }
    if valid != state.n_valid() {
        return Verdict::fail(format!("n_valid {} but scan found {valid}", state.n_valid()));
    }
    for (b, &n) in per_bank.iter().enumerate() {
        if n != state.valid_in_bank(b) {
            return Verdict::fail(format!(
                "bank {b}: counter {} but scan found {n}",
                state.valid_in_bank(b)
            ));
        }
    }
    Verdict::ok()
}

/// Unsampled LRU tag array of `size_bytes`, conventional set indexing.
/// Returns (misses, load misses).
pub fn full_profile(trace: &[TraceRecord], size_bytes: u64, ways: usize, block_bytes: u64) -> (u64, u64) {
    let sets = size_bytes / (block_bytes * ways as u64);
    // (tag, last use)
    let mut array: Vec<Vec<(u64, u64)>> = vec![Vec::new(); sets as usize];
    let (mut misses, mut load_misses) = (0, 0);
    for (t, rec) in trace.iter().enumerate() {
        let block = rec.address / block_bytes;
        let set = &mut array[(block % sets) as usize];
        if let Some(e) = set.iter_mut().find(|e| e.0 == block) {
            e.1 = t as u64;
            continue;
        }
        misses += 1;
        if rec.op == Op::Read {
            load_misses += 1;
        }
        if set.len() < ways {
            set.push((block, t as u64));
        } else {
            let victim = (0..set.len()).min_by_key(|&i| set[i].1).unwrap();
            set[victim] = (block, t as u64);
        }
    }
    (misses, load_misses)
}

/// Direct evaluation of the interval energy equations from raw counters.
pub fn recompute_energy(stats: &IntervalStats, params: &EnergyParams, scheme: SchemeKind) -> EnergyBreakdown {
    let dcr = scheme == SchemeKind::Dcr;
    // Seconds.
    let t = stats.elapsed_cycles as f64 / (params.clock_ghz * 1e9);
    let f_a = if dcr { stats.active_fraction } else { 1.0 };
    let h = stats.l2_hits as f64;
    let m = stats.l2_misses as f64;
    let n_r = if scheme == SchemeKind::Sram { 0.0 } else { stats.refreshed_lines as f64 };
    let a_dram = stats.dram_accesses as f64;
    let b = stats.switched_blocks as f64;
    let a_prof = stats.profiler_accesses as f64;

    let e_dyn_l2 = params.e_dyn_l2 * 1e-9;
    let e_dyn_dram = params.e_dyn_dram * 1e-9;
    let e_chi = params.e_transition * 1e-12;
    let e_dyn_prof = params.e_dyn_prof * 1e-9;

    let le = params.p_leak_l2 * f_a * t;
    let de = e_dyn_l2 * (2.0 * m + h);
    let re = n_r * e_dyn_l2;
    let e_dram = params.p_leak_dram * t + e_dyn_dram * a_dram;
    let e_tran = if dcr { e_chi * b } else { 0.0 };
    let e_prof = if dcr { params.p_leak_prof * t + e_dyn_prof * a_prof } else { 0.0 };
    let e_algo = e_tran + e_prof;
    EnergyBreakdown {
        le_l2: le,
        de_l2: de,
        re_l2: re,
        e_dram,
        e_tran,
        e_prof,
        e_algo,
        total: le + de + re + e_dram + e_algo,
    }
}

/// Field-by-field bit comparison.
pub fn bits_equal(a: &EnergyBreakdown, b: &EnergyBreakdown) -> bool {
    let fa = [a.le_l2, a.de_l2, a.re_l2, a.e_dram, a.e_tran, a.e_prof, a.e_algo, a.total];
    let fb = [b.le_l2, b.de_l2, b.re_l2, b.e_dram, b.e_tran, b.e_prof, b.e_algo, b.total];
    fa.iter().zip(fb.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
}
