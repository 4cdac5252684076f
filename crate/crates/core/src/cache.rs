//! Set-associative last-level cache with page coloring.
//!
//! Physical pages fall into `M` memory regions by the low bits of their page
//! number. A mapping table sends each region to one active color, and each
//! color owns a contiguous run of `page_bytes / block_bytes` sets. Shrinking
//! or growing the active color set flushes affected lines and rewrites the
//! mapping table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Op;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheGeometry {
    pub size_bytes: u64,
    pub associativity: u32,
    pub block_bytes: u64,
    pub page_bytes: u64,
    pub bank_bytes: u64,
}

impl Default for CacheGeometry {
    /// 2 MB, 8-way, 64 B blocks, 4 KB pages, 1 MB banks.
    fn default() -> Self {
        Self {
            size_bytes: 2 << 20,
            associativity: 8,
            block_bytes: 64,
            page_bytes: 4096,
            bank_bytes: 1 << 20,
        }
    }
}

impl CacheGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("size_bytes", self.size_bytes),
            ("associativity", u64::from(self.associativity)),
            ("block_bytes", self.block_bytes),
            ("page_bytes", self.page_bytes),
            ("bank_bytes", self.bank_bytes),
        ];
        for (name, v) in fields {
            if !v.is_power_of_two() {
                return Err(Error::Geometry(format!("{name} = {v} is not a power of two")));
            }
        }
        if self.associativity > u32::from(u16::MAX) {
            return Err(Error::Geometry("associativity too large".into()));
        }
        if !(self.size_bytes >= self.bank_bytes && self.bank_bytes >= self.block_bytes) {
            return Err(Error::Geometry(
                "require size_bytes >= bank_bytes >= block_bytes".into(),
            ));
        }
        if self.page_bytes < self.block_bytes {
            return Err(Error::Geometry("page_bytes smaller than block_bytes".into()));
        }
        if self.bank_bytes < self.block_bytes * u64::from(self.associativity) {
            return Err(Error::Geometry("bank holds less than one set".into()));
        }
        color_count(self).map(|_| ())
    }

    pub fn colors(&self) -> u32 {
        (self.size_bytes / (self.page_bytes * u64::from(self.associativity))) as u32
    }

    pub fn total_lines(&self) -> u64 {
        self.size_bytes / self.block_bytes
    }

    pub fn total_sets(&self) -> u64 {
        self.total_lines() / u64::from(self.associativity)
    }

    pub fn sets_per_color(&self) -> u64 {
        self.page_bytes / self.block_bytes
    }

    pub fn lines_per_color(&self) -> u64 {
        self.sets_per_color() * u64::from(self.associativity)
    }

    pub fn sets_per_bank(&self) -> u64 {
        self.bank_bytes / (self.block_bytes * u64::from(self.associativity))
    }

    pub fn banks(&self) -> usize {
        (self.total_sets() / self.sets_per_bank()) as usize
    }

    pub fn bank_of_set(&self, set: u64) -> usize {
        (set / self.sets_per_bank()) as usize
    }

    /// Region index of a block number (block = address / block_bytes).
    pub fn region_of_block(&self, block: u64) -> u32 {
        let page = block * self.block_bytes / self.page_bytes;
        (page % u64::from(self.colors())) as u32
    }
}

/// Number of colors `M = S / (P * W)`. Must be an integer of at least 2.
pub fn color_count(geometry: &CacheGeometry) -> Result<u32> {
    let denom = geometry.page_bytes * u64::from(geometry.associativity);
    if denom == 0 || !geometry.size_bytes.is_multiple_of(denom) {
        return Err(Error::Geometry(format!(
            "size {} is not a multiple of page x ways = {}",
            geometry.size_bytes, denom
        )));
    }
    let m = geometry.size_bytes / denom;
    if m < 2 {
        return Err(Error::Geometry(format!("color count {m} is below 2")));
    }
    u32::try_from(m).map_err(|_| Error::Geometry("color count overflows u32".into()))
}

/// Total line count of a cache restricted to `colors` colors.
pub fn lines_at(geometry: &CacheGeometry, colors: u32) -> u64 {
    u64::from(colors) * (geometry.total_lines() / u64::from(geometry.colors()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheLine {
    pub valid: bool,
    pub dirty: bool,
    pub tag: u64,
    /// LRU rank within the set, 0 = most recent.
    pub recency: u16,
    pub last_update_phase: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    region_to_color: Vec<u32>,
}

impl MappingTable {
    fn identity(colors: u32) -> Self {
        Self {
            region_to_color: (0..colors).collect(),
        }
    }

    /// Round-robin layout of every region over the sorted active colors.
    fn round_robin(regions: u32, active_sorted: &[u32]) -> Self {
        let m = active_sorted.len();
        Self {
            region_to_color: (0..regions as usize).map(|r| active_sorted[r % m]).collect(),
        }
    }

    pub fn color_of(&self, region: u32) -> u32 {
        self.region_to_color[region as usize]
    }

    pub fn entries(&self) -> &[u32] {
        &self.region_to_color
    }
}

/// Splits the retention period into `phases` equal phases. Lines touched
/// while a clock is installed get stamped with the current phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseClock {
    pub phase_cycles: u64,
    pub phases: u8,
}

impl PhaseClock {
    pub fn phase_at(&self, cycle: u64) -> u8 {
        ((cycle / self.phase_cycles) % u64::from(self.phases)) as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub region: u32,
    pub color: u32,
    pub set: u64,
    pub tag: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessResult {
    pub hit: bool,
    pub evicted_valid: bool,
    pub evicted_dirty: bool,
    pub is_load_miss: bool,
    pub set: u64,
    pub way: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReconfigReport {
    pub colors_before: u32,
    pub colors_after: u32,
    pub flushed_lines: u64,
    pub writebacks: u64,
    pub switched_blocks: u64,
}

#[derive(Debug, Clone)]
pub struct CacheState {
    geometry: CacheGeometry,
    colors: u32,
    ways: usize,
    lines: Vec<CacheLine>,
    active: Vec<bool>,
    active_count: u32,
    min_colors: u32,
    mapping: MappingTable,
    n_valid: u64,
    valid_per_bank: Vec<u64>,
    phase_clock: Option<PhaseClock>,
}

impl CacheState {
    /// Empty cache with every color active and the identity mapping.
    pub fn new(geometry: CacheGeometry) -> Result<Self> {
        geometry.validate()?;
        let colors = geometry.colors();
        let ways = geometry.associativity as usize;
        let sets = geometry.total_sets() as usize;
        let mut lines = vec![CacheLine::default(); sets * ways];
        for set in lines.chunks_mut(ways) {
            for (way, line) in set.iter_mut().enumerate() {
                line.recency = way as u16;
            }
        }
        Ok(Self {
            geometry,
            colors,
            ways,
            lines,
            active: vec![true; colors as usize],
            active_count: colors,
            min_colors: 1,
            mapping: MappingTable::identity(colors),
            n_valid: 0,
            valid_per_bank: vec![0; geometry.banks()],
            phase_clock: None,
        })
    }

    pub fn geometry(&self) -> &CacheGeometry {
        &self.geometry
    }

    pub fn colors(&self) -> u32 {
        self.colors
    }

    pub fn ways(&self) -> usize {
        self.ways
    }

    pub fn n_valid(&self) -> u64 {
        self.n_valid
    }

    pub fn valid_in_bank(&self, bank: usize) -> u64 {
        self.valid_per_bank[bank]
    }

    pub fn active_count(&self) -> u32 {
        self.active_count
    }

    pub fn is_active(&self, color: u32) -> bool {
        self.active[color as usize]
    }

    pub fn active_colors(&self) -> Vec<u32> {
        (0..self.colors).filter(|&c| self.active[c as usize]).collect()
    }

    pub fn mapping(&self) -> &MappingTable {
        &self.mapping
    }

    pub fn lines(&self) -> &[CacheLine] {
        &self.lines
    }

    pub fn line(&self, set: u64, way: usize) -> &CacheLine {
        &self.lines[set as usize * self.ways + way]
    }

    pub fn set_lines(&self, set: u64) -> &[CacheLine] {
        let base = set as usize * self.ways;
        &self.lines[base..base + self.ways]
    }

    pub fn color_of_set(&self, set: u64) -> u32 {
        (set / self.geometry.sets_per_color()) as u32
    }

    pub fn min_colors(&self) -> u32 {
        self.min_colors
    }

    /// Lower bound enforced by [`CacheState::reconfigure`].
    pub fn set_min_colors(&mut self, min_colors: u32) -> Result<()> {
        if min_colors == 0 || min_colors > self.colors {
            return Err(Error::Bounds(format!(
                "minimum color count {min_colors} outside [1, {}]",
                self.colors
            )));
        }
        self.min_colors = min_colors;
        Ok(())
    }

    pub fn phase_clock(&self) -> Option<PhaseClock> {
        self.phase_clock
    }

    pub fn set_phase_clock(&mut self, clock: Option<PhaseClock>) {
        self.phase_clock = clock;
    }

    pub fn locate(&self, address: u64) -> Location {
        let g = &self.geometry;
        let block = address / g.block_bytes;
        let page = address / g.page_bytes;
        let region = (page % u64::from(self.colors)) as u32;
        let color = self.mapping.color_of(region);
        let set_in_color = block % g.sets_per_color();
        Location {
            region,
            color,
            set: u64::from(color) * g.sets_per_color() + set_in_color,
            tag: block,
        }
    }

    fn touch(&mut self, base: usize, way: usize) {
        let rank = self.lines[base + way].recency;
        for line in &mut self.lines[base..base + self.ways] {
            if line.recency < rank {
                line.recency += 1;
            }
        }
        self.lines[base + way].recency = 0;
    }

    pub fn access(&mut self, op: Op, address: u64, now_cycle: u64) -> Result<AccessResult> {
        let loc = self.locate(address);
        if !self.active[loc.color as usize] {
            return Err(Error::Invariant(format!(
                "address {address:#x} maps to inactive color {}",
                loc.color
            )));
        }
        let stamp = self.phase_clock.map(|c| c.phase_at(now_cycle));
        let base = loc.set as usize * self.ways;
        let set = &self.lines[base..base + self.ways];

        if let Some(way) = set.iter().position(|l| l.valid && l.tag == loc.tag) {
            self.touch(base, way);
            let line = &mut self.lines[base + way];
            if op == Op::Write {
                line.dirty = true;
            }
            line.last_update_phase = stamp;
            return Ok(AccessResult {
                hit: true,
                evicted_valid: false,
                evicted_dirty: false,
                is_load_miss: false,
                set: loc.set,
                way: way as u32,
            });
        }

        let way = set
            .iter()
            .position(|l| !l.valid)
            .or_else(|| set.iter().position(|l| usize::from(l.recency) == self.ways - 1))
            .expect("recency ranks form a permutation");
        let victim = self.lines[base + way];
        if !victim.valid {
            self.n_valid += 1;
            self.valid_per_bank[self.geometry.bank_of_set(loc.set)] += 1;
        }
        self.lines[base + way] = CacheLine {
            valid: true,
            dirty: op == Op::Write,
            tag: loc.tag,
            recency: victim.recency,
            last_update_phase: stamp,
        };
        self.touch(base, way);
        Ok(AccessResult {
            hit: false,
            evicted_valid: victim.valid,
            evicted_dirty: victim.valid && victim.dirty,
            is_load_miss: op == Op::Read,
            set: loc.set,
            way: way as u32,
        })
    }

    /// Switches the active color set to `new_colors`.
    ///
    /// Deactivated colors are flushed. The mapping table is rebuilt so region
    /// `r` maps to the `(r mod m)`-th smallest active color; any valid line
    /// whose region no longer maps to its color is flushed too. Dirty flushed
    /// lines count as writebacks.
    pub fn reconfigure(&mut self, new_colors: &[u32]) -> Result<ReconfigReport> {
        let mut sorted = new_colors.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != new_colors.len() {
            return Err(Error::InvalidInput("duplicate color in new color set".into()));
        }
        if let Some(&c) = sorted.iter().find(|&&c| c >= self.colors) {
            return Err(Error::Bounds(format!("color {c} out of range [0, {})", self.colors)));
        }
        let m = sorted.len() as u32;
        if m < self.min_colors || m > self.colors {
            return Err(Error::Bounds(format!(
                "{m} colors requested, allowed range [{}, {}]",
                self.min_colors, self.colors
            )));
        }

        let mut next_active = vec![false; self.colors as usize];
        for &c in &sorted {
            next_active[c as usize] = true;
        }
        let toggled = next_active
            .iter()
            .zip(&self.active)
            .filter(|(a, b)| a != b)
            .count() as u64;
        let mapping = MappingTable::round_robin(self.colors, &sorted);

        let mut report = ReconfigReport {
            colors_before: self.active_count,
            colors_after: m,
            switched_blocks: toggled * self.geometry.lines_per_color(),
            ..Default::default()
        };
        let sets_per_color = self.geometry.sets_per_color();
        for set in 0..self.geometry.total_sets() {
            let color = (set / sets_per_color) as u32;
            let bank = self.geometry.bank_of_set(set);
            let base = set as usize * self.ways;
            for way in 0..self.ways {
                let line = self.lines[base + way];
                if !line.valid {
                    continue;
                }
                let region = self.geometry.region_of_block(line.tag);
                if next_active[color as usize] && mapping.color_of(region) == color {
                    continue;
                }
                report.flushed_lines += 1;
                if line.dirty {
                    report.writebacks += 1;
                }
                let slot = &mut self.lines[base + way];
                slot.valid = false;
                slot.dirty = false;
                slot.last_update_phase = None;
                self.n_valid -= 1;
                self.valid_per_bank[bank] -= 1;
            }
        }
        self.active = next_active;
        self.active_count = m;
        self.mapping = mapping;
        Ok(report)
    }

    /// Active color set of size `m` that keeps the lowest-indexed colors:
    /// shrinking drops the highest active colors, growing re-enables the
    /// lowest inactive ones.
    pub fn colors_for_count(&self, m: u32) -> Vec<u32> {
        let mut active = self.active_colors();
        if m as usize <= active.len() {
            active.truncate(m as usize);
        } else {
            let need = m as usize - active.len();
            let extra: Vec<u32> = (0..self.colors)
                .filter(|&c| !self.active[c as usize])
                .take(need)
                .collect();
            active.extend(extra);
            active.sort_unstable();
        }
        active
    }

    pub fn resize(&mut self, m: u32) -> Result<ReconfigReport> {
        let target = self.colors_for_count(m);
        self.reconfigure(&target)
    }
}
