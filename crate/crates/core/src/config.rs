//! Run configuration files.
//!
//! Configs are TOML with unknown keys rejected. Relative paths resolve
//! against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cache::CacheGeometry;
use crate::controller::ControllerConfig;
use crate::energy::{builtin_params, EnergyParams, SchemeKind, Technology};
use crate::error::{Error, Result};
use crate::refresh::RefreshConfig;
use crate::sim::{EnergyCatalog, RunOptions, SchemeSpec, TimingParams};
use crate::trace::{generate_synthetic, load_trace_file, SyntheticTraceSpec, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub l2_size_kb: u64,
    pub associativity: u32,
    pub block_bytes: u64,
    pub page_bytes: u64,
    pub bank_kb: u64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            l2_size_kb: 2048,
            associativity: 8,
            block_bytes: 64,
            page_bytes: 4096,
            bank_kb: 1024,
        }
    }
}

impl GeometrySection {
    pub fn geometry(&self) -> CacheGeometry {
        CacheGeometry {
            size_bytes: self.l2_size_kb * 1024,
            associativity: self.associativity,
            block_bytes: self.block_bytes,
            page_bytes: self.page_bytes,
            bank_bytes: self.bank_kb * 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefreshSection {
    pub retention_period_us: f64,
    pub rpv_phases: u8,
}

impl Default for RefreshSection {
    fn default() -> Self {
        Self {
            retention_period_us: 40.0,
            rpv_phases: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySection {
    pub edram: Technology,
    pub sram: Technology,
    pub edram_override: Option<EnergyParams>,
    pub sram_override: Option<EnergyParams>,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self {
            edram: Technology::Edram2Mb,
            sram: Technology::Sram2Mb,
            edram_override: None,
            sram_override: None,
        }
    }
}

impl EnergySection {
    pub fn catalog(&self) -> EnergyCatalog {
        EnergyCatalog {
            edram: self.edram_override.unwrap_or_else(|| builtin_params(self.edram)),
            sram: self.sram_override.unwrap_or_else(|| builtin_params(self.sram)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticTraceSpec>,
    /// Defaults to 10% of the trace.
    pub warmup_instructions: Option<u64>,
    /// Statistics interval for schemes without a controller.
    #[serde(default = "default_interval")]
    pub interval_instructions: u64,
}

fn default_interval() -> u64 {
    10_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub interval_csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            interval_csv: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    RetentionPeriodUs,
    L2SizeKb,
    BetaPct,
    Delta,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::RetentionPeriodUs => "retention_period_us",
            SweepParameter::L2SizeKb => "l2_size_kb",
            SweepParameter::BetaPct => "beta_pct",
            SweepParameter::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schemes: Vec<SchemeKind>,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub timing: TimingParams,
    #[serde(default)]
    pub refresh: RefreshSection,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub energy: EnergySection,
    pub trace: TraceSection,
    #[serde(default)]
    pub output: OutputSection,
    pub sweep: Option<SweepSection>,
}

/// Everything a simulation needs, checked and with paths resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: RunConfig,
    pub geometry: CacheGeometry,
    pub schemes: Vec<SchemeSpec>,
    pub energy: EnergyCatalog,
    pub options: RunOptions,
    pub trace_path: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn refresh_config(&self) -> RefreshConfig {
        RefreshConfig::new(
            self.refresh.retention_period_us,
            self.timing.clock_ghz,
            self.refresh.rpv_phases,
        )
    }

    /// Returns a copy with one sweep parameter replaced.
    pub fn with_parameter(&self, param: SweepParameter, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let whole = || {
            if value.fract() != 0.0 || value < 0.0 {
                Err(Error::Config(format!("{} needs a whole number, got {value}", param.name())))
            } else {
                Ok(value as u64)
            }
        };
        match param {
            SweepParameter::RetentionPeriodUs => c.refresh.retention_period_us = value,
            SweepParameter::L2SizeKb => c.geometry.l2_size_kb = whole()?,
            SweepParameter::BetaPct => c.controller.beta_pct = value,
            SweepParameter::Delta => c.controller.delta = whole()? as u32,
        }
        Ok(c)
    }

    /// Validates the whole config. `base_dir` anchors relative paths.
    pub fn resolve(&self, base_dir: &Path) -> Result<Resolved> {
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes listed".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(Error::Config(format!("scheme {s} listed twice")));
            }
        }
        let geometry = self.geometry.geometry();
        geometry.validate()?;
        self.timing.validate()?;
        let refresh = self.refresh_config();
        let needs_refresh = self.schemes.iter().any(|&s| s != SchemeKind::Sram);
        if needs_refresh {
            refresh.validate()?;
        }
        if self.schemes.contains(&SchemeKind::Dcr) {
            self.controller.validate(geometry.colors())?;
            crate::profiler::Profiler::new(&geometry, self.controller.sampling_ratio)?;
        }
        let energy = self.energy.catalog();
        for kind in &self.schemes {
            let p = energy.for_scheme(*kind);
            crate::energy::EnergyModel::new(*p)?;
            if p.clock_ghz != self.timing.clock_ghz {
                return Err(Error::Config(format!(
                    "energy clock {} GHz for {kind} conflicts with timing clock {} GHz",
                    p.clock_ghz, self.timing.clock_ghz
                )));
            }
        }
        if self.trace.interval_instructions == 0 {
            return Err(Error::Config("trace.interval_instructions must be positive".into()));
        }
        let trace_path = match (&self.trace.path, &self.trace.synthetic) {
            (Some(p), None) => Some(base_dir.join(p)),
            (None, Some(spec)) => {
                spec.validate()?;
                None
            }
            _ => {
                return Err(Error::Config(
                    "trace needs exactly one of `path` or `synthetic`".into(),
                ))
            }
        };
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep.values is empty".into()));
            }
            for &v in &sweep.values {
                let varied = self.with_parameter(sweep.parameter, v)?;
                let mut check = varied.clone();
                check.sweep = None;
                check.resolve(base_dir)?;
            }
        }
        let schemes = self
            .schemes
            .iter()
            .map(|&k| SchemeSpec::for_kind(k, refresh, self.controller))
            .collect();
        Ok(Resolved {
            config: self.clone(),
            geometry,
            schemes,
            energy,
            options: RunOptions {
                warmup_instructions: self.trace.warmup_instructions,
                interval_instructions: self.trace.interval_instructions,
            },
            trace_path,
            output_dir: base_dir.join(&self.output.dir),
        })
    }
}

impl Resolved {
    /// Reads or generates the trace.
    pub fn load_trace(&self) -> Result<Vec<TraceRecord>> {
        match (&self.trace_path, &self.config.trace.synthetic) {
            (Some(path), _) => Ok(load_trace_file(path)?.1),
            (None, Some(spec)) => generate_synthetic(spec),
            (None, None) => Err(Error::Config("no trace configured".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schemes = ["baseline", "sram", "rpv", "dcr"]

[trace.synthetic]
accesses_per_kilo_instr = 20.0
rng_seed = 3

[[trace.synthetic.phase]]
instruction_count = 1000000
working_set_bytes = 65536
"#;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        let r = c.resolve(Path::new("/tmp")).unwrap();
        assert_eq!(r.geometry, CacheGeometry::default());
        assert_eq!(r.schemes.len(), 4);
        assert_eq!(r.schemes[0].refresh.unwrap().retention_cycles(), 88_000);
        assert_eq!(r.output_dir, Path::new("/tmp/out"));
        assert_eq!(r.load_trace().unwrap().len(), 20_000);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{MINIMAL}\n[geometry]\nl2_size_kbytes = 4096\n");
        assert!(matches!(RunConfig::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn both_trace_sources_rejected() {
        let text = MINIMAL.replace("[trace.synthetic]", "[trace]\npath = \"a.bin\"\n[trace.synthetic]");
        let c = RunConfig::parse(&text).unwrap();
        assert!(c.resolve(Path::new(".")).is_err());
    }

    #[test]
    fn energy_clock_conflict_rejected() {
        let text = format!("{MINIMAL}\n[timing]\nclock_ghz = 3.0\n");
        let c = RunConfig::parse(&text).unwrap();
        assert!(matches!(c.resolve(Path::new(".")), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_values_checked() {
        let text = format!("{MINIMAL}\n[sweep]\nparameter = \"l2_size_kb\"\nvalues = [2048, 3000]\n");
        let c = RunConfig::parse(&text).unwrap();
        assert!(c.resolve(Path::new(".")).is_err());
        let ok = text.replace("3000", "1024");
        RunConfig::parse(&ok).unwrap().resolve(Path::new(".")).unwrap();
    }

    #[test]
    fn override_table_replaces_builtin() {
        let text = format!(
            "{MINIMAL}\n[energy.edram_override]\ne_dyn_l2 = 1.0\np_leak_l2 = 0.1\ne_dyn_dram = 70.0\np_leak_dram = 0.18\ne_transition = 2.0\ne_dyn_prof = 0.0031\np_leak_prof = 0.005\nclock_ghz = 2.2\n"
        );
        let r = RunConfig::parse(&text).unwrap().resolve(Path::new(".")).unwrap();
        assert_eq!(r.energy.edram.e_dyn_l2, 1.0);
        assert_eq!(r.energy.sram, builtin_params(Technology::Sram2Mb));
    }
}
