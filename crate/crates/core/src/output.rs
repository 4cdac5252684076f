//! Report serialization: JSON documents and CSV tables.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{ComparisonReport, RunReport, SchemeComparison};

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |source| Error::Io { offset: 0, source };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn interval_csv(report: &RunReport) -> String {
    let mut out = String::from(
        "interval,instructions,cycles,colors,active_fraction,l2_hits,l2_misses,load_misses,\
         refreshed_lines,refresh_stall_cycles,dram_accesses,switched_blocks,\
         le_l2,de_l2,re_l2,e_dram,e_tran,e_prof,e_algo,total\n",
    );
    for rec in &report.intervals {
        let (s, e) = (&rec.stats, &rec.energy);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.index,
            s.instructions,
            s.elapsed_cycles,
            s.active_colors,
            s.active_fraction,
            s.l2_hits,
            s.l2_misses,
            s.load_misses,
            s.refreshed_lines,
            s.refresh_stall_cycles,
            s.dram_accesses,
            s.switched_blocks,
            e.le_l2,
            e.de_l2,
            e.re_l2,
            e.e_dram,
            e.e_tran,
            e.e_prof,
            e.e_algo,
            e.total
        )
        .unwrap();
    }
    out
}

const METRICS: [&str; 5] = [
    "energy_saving_pct",
    "perf_improvement_pct",
    "delta_rpki",
    "delta_mpki",
    "active_ratio_pct",
];

fn metric_values(row: &SchemeComparison) -> [f64; 5] {
    [
        row.energy_saving_pct,
        row.perf_improvement_pct,
        row.delta_rpki,
        row.delta_mpki,
        row.active_ratio_pct,
    ]
}

/// Human-readable table, one row per non-baseline scheme.
pub fn comparison_table(report: &ComparisonReport) -> String {
    let mut out = format!(
        "{:<9} {:>14} {:>14} {:>12} {:>12} {:>14}\n",
        "scheme", "energy_saved%", "perf_improv%", "dRPKI", "dMPKI", "active_ratio%"
    );
    for row in report.rows.iter().filter(|r| r.scheme != crate::SchemeKind::BaselineEdram) {
        let v = metric_values(row);
        writeln!(
            out,
            "{:<9} {:>14.3} {:>14.3} {:>12.3} {:>12.3} {:>14.2}",
            row.scheme.name(),
            v[0],
            v[1],
            v[2],
            v[3],
            v[4]
        )
        .unwrap();
    }
    out
}

/// Long-form `scheme,metric,value` rows for bar charts.
pub fn plot_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("scheme,metric,value\n");
    for row in &report.rows {
        for (name, v) in METRICS.iter().zip(metric_values(row)) {
            writeln!(out, "{},{name},{v}", row.scheme.name()).unwrap();
        }
        writeln!(out, "{},total_energy_j,{}", row.scheme.name(), row.total_energy_j).unwrap();
    }
    out
}

pub fn sweep_csv(parameter: &str, points: &[(f64, ComparisonReport)]) -> String {
    let mut out = String::from("param,value,scheme,metric,metric_value\n");
    for (value, report) in points {
        for row in &report.rows {
            for (name, v) in METRICS.iter().zip(metric_values(row)) {
                writeln!(out, "{parameter},{value},{},{name},{v}", row.scheme.name()).unwrap();
            }
            writeln!(
                out,
                "{parameter},{value},{},total_energy_j,{}",
                row.scheme.name(),
                row.total_energy_j
            )
            .unwrap();
        }
    }
    out
}
