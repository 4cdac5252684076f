//! Memory-subsystem energy: L2 leakage, dynamic and refresh energy, DRAM
//! energy, and the reconfiguration overhead (block transitions plus the
//! profiling units).
//!
//! ```text
//! E      = E_L2 + E_DRAM + E_Algo
//! E_L2   = P_leak_L2 * F_A * T  +  E_dyn_L2 * (2 M_L2 + H_L2)  +  N_R * E_dyn_L2
//! E_DRAM = P_leak_DRAM * T  +  E_dyn_DRAM * A_DRAM
//! E_Algo = E_chi * B  +  P_leak_prof * T  +  E_dyn_prof * A_prof
//! ```

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiler::IntervalStats;

/// Technology constants in their customary units: nJ per access, W, pJ per
/// block transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub e_dyn_l2: f64,
    pub p_leak_l2: f64,
    pub e_dyn_dram: f64,
    pub p_leak_dram: f64,
    pub e_transition: f64,
    pub e_dyn_prof: f64,
    pub p_leak_prof: f64,
    pub clock_ghz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Technology {
    #[serde(rename = "SRAM_2MB")]
    Sram2Mb,
    #[serde(rename = "EDRAM_2MB")]
    Edram2Mb,
}

impl FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SRAM_2MB" => Ok(Technology::Sram2Mb),
            "EDRAM_2MB" => Ok(Technology::Edram2Mb),
            other => Err(Error::Config(format!(
                "unknown builtin energy parameters {other:?} (expected SRAM_2MB or EDRAM_2MB)"
            ))),
        }
    }
}

const SRAM_2MB_E_DYN_NJ: f64 = 0.648;
const SRAM_2MB_P_LEAK_W: f64 = 1.296;

/// CACTI-derived constants for a 2 MB L2 at 45 nm. eDRAM shares the SRAM
/// access energy and leaks one eighth as much.
pub fn builtin_params(technology: Technology) -> EnergyParams {
    let p_leak_l2 = match technology {
        Technology::Sram2Mb => SRAM_2MB_P_LEAK_W,
        Technology::Edram2Mb => SRAM_2MB_P_LEAK_W / 8.0,
    };
    EnergyParams {
        e_dyn_l2: SRAM_2MB_E_DYN_NJ,
        p_leak_l2,
        e_dyn_dram: 70.0,
        p_leak_dram: 0.18,
        e_transition: 2.0,
        e_dyn_prof: 0.0031,
        p_leak_prof: 0.0050,
        clock_ghz: 2.2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "baseline")]
    BaselineEdram,
    #[serde(rename = "sram")]
    Sram,
    #[serde(rename = "rpv")]
    Rpv,
    #[serde(rename = "dcr")]
    Dcr,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::BaselineEdram => "baseline",
            SchemeKind::Sram => "sram",
            SchemeKind::Rpv => "rpv",
            SchemeKind::Dcr => "dcr",
        }
    }

    pub fn reconfigures(self) -> bool {
        self == SchemeKind::Dcr
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(SchemeKind::BaselineEdram),
            "sram" => Ok(SchemeKind::Sram),
            "rpv" => Ok(SchemeKind::Rpv),
            "dcr" => Ok(SchemeKind::Dcr),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Energy components in joules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub le_l2: f64,
    pub de_l2: f64,
    pub re_l2: f64,
    pub e_dram: f64,
    pub e_tran: f64,
    pub e_prof: f64,
    pub e_algo: f64,
    pub total: f64,
}

impl AddAssign for EnergyBreakdown {
    fn add_assign(&mut self, rhs: Self) {
        self.le_l2 += rhs.le_l2;
        self.de_l2 += rhs.de_l2;
        self.re_l2 += rhs.re_l2;
        self.e_dram += rhs.e_dram;
        self.e_tran += rhs.e_tran;
        self.e_prof += rhs.e_prof;
        self.e_algo += rhs.e_algo;
        self.total += rhs.total;
    }
}

/// Inputs for predicting the energy of a candidate configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub colors: u32,
    pub total_colors: u32,
    pub est_misses: f64,
    pub est_hits: f64,
    pub est_refreshes: u64,
    pub est_cycles: f64,
    pub est_dram_accesses: f64,
    pub switched_blocks: u64,
    pub profiler_accesses: u64,
}

/// Energy parameters converted to SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    params: EnergyParams,
    e_dyn_l2: f64,
    p_leak_l2: f64,
    e_dyn_dram: f64,
    p_leak_dram: f64,
    e_transition: f64,
    e_dyn_prof: f64,
    p_leak_prof: f64,
    clock_hz: f64,
}

const NANO: f64 = 1e-9;
const PICO: f64 = 1e-12;

struct Counts {
    seconds: f64,
    active_fraction: f64,
    misses: f64,
    hits: f64,
    refreshed: f64,
    dram_accesses: f64,
    switched_blocks: f64,
    profiler_accesses: f64,
    with_algo: bool,
}

impl EnergyModel {
    pub fn new(params: EnergyParams) -> Result<Self> {
        let fields = [
            ("e_dyn_l2", params.e_dyn_l2),
            ("p_leak_l2", params.p_leak_l2),
            ("e_dyn_dram", params.e_dyn_dram),
            ("p_leak_dram", params.p_leak_dram),
            ("e_transition", params.e_transition),
            ("e_dyn_prof", params.e_dyn_prof),
            ("p_leak_prof", params.p_leak_prof),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("energy parameter {name} = {v} must be >= 0")));
            }
        }
        if !(params.clock_ghz.is_finite() && params.clock_ghz > 0.0) {
            return Err(Error::Config(format!("clock_ghz = {} must be > 0", params.clock_ghz)));
        }
        Ok(Self {
            params,
            e_dyn_l2: params.e_dyn_l2 * NANO,
            p_leak_l2: params.p_leak_l2,
            e_dyn_dram: params.e_dyn_dram * NANO,
            p_leak_dram: params.p_leak_dram,
            e_transition: params.e_transition * PICO,
            e_dyn_prof: params.e_dyn_prof * NANO,
            p_leak_prof: params.p_leak_prof,
            clock_hz: params.clock_ghz * 1e9,
        })
    }

    pub fn params(&self) -> &EnergyParams {
        &self.params
    }

    pub fn seconds(&self, cycles: f64) -> f64 {
        cycles / self.clock_hz
    }

    fn evaluate(&self, c: &Counts) -> EnergyBreakdown {
        let le_l2 = self.p_leak_l2 * c.active_fraction * c.seconds;
        let de_l2 = self.e_dyn_l2 * (2.0 * c.misses + c.hits);
        let re_l2 = c.refreshed * self.e_dyn_l2;
        let e_dram = self.p_leak_dram * c.seconds + self.e_dyn_dram * c.dram_accesses;
        let (e_tran, e_prof) = if c.with_algo {
            (
                self.e_transition * c.switched_blocks,
                self.p_leak_prof * c.seconds + self.e_dyn_prof * c.profiler_accesses,
            )
        } else {
            (0.0, 0.0)
        };
        let e_algo = e_tran + e_prof;
        EnergyBreakdown {
            le_l2,
            de_l2,
            re_l2,
            e_dram,
            e_tran,
            e_prof,
            e_algo,
            total: le_l2 + de_l2 + re_l2 + e_dram + e_algo,
        }
    }

    /// Energy of a finished interval. Only the reconfiguring scheme runs at a
    /// partial active fraction and pays for transitions and profiling; SRAM
    /// never refreshes.
    pub fn interval_energy(&self, stats: &IntervalStats, scheme: SchemeKind) -> EnergyBreakdown {
        let dcr = scheme.reconfigures();
        self.evaluate(&Counts {
            seconds: self.seconds(stats.elapsed_cycles as f64),
            active_fraction: if dcr { stats.active_fraction } else { 1.0 },
            misses: stats.l2_misses as f64,
            hits: stats.l2_hits as f64,
            refreshed: if scheme == SchemeKind::Sram {
                0.0
            } else {
                stats.refreshed_lines as f64
            },
            dram_accesses: stats.dram_accesses as f64,
            switched_blocks: stats.switched_blocks as f64,
            profiler_accesses: stats.profiler_accesses as f64,
            with_algo: dcr,
        })
    }

    /// Energy a candidate configuration would spend over the next interval.
    pub fn predict_energy(&self, p: &Prediction) -> EnergyBreakdown {
        self.evaluate(&Counts {
            seconds: self.seconds(p.est_cycles),
            active_fraction: f64::from(p.colors) / f64::from(p.total_colors),
            misses: p.est_misses,
            hits: p.est_hits,
            refreshed: p.est_refreshes as f64,
            dram_accesses: p.est_dram_accesses,
            switched_blocks: p.switched_blocks as f64,
            profiler_accesses: p.profiler_accesses as f64,
            with_algo: true,
        })
    }
}
