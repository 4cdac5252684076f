use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use edram_dcr::config::{Resolved, RunConfig, SweepParameter, SweepSection};
use edram_dcr::output::{comparison_table, interval_csv, plot_csv, sweep_csv, to_json, write_atomic};
use edram_dcr::sim::{self, ComparisonReport};
use edram_dcr::trace::{generate_synthetic, write_trace, SyntheticTraceSpec};
use edram_dcr::SchemeKind;

#[derive(Parser)]
#[command(name = "edram-dcr", version, about = "eDRAM last-level cache refresh and reconfiguration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's output.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for a synthetic trace; overrides trace.synthetic.rng_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent runs
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a binary trace from a synthetic trace spec
    GenTrace {
        /// Synthetic trace spec (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Trace file to write
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run each configured scheme and write its report
    Run(Common),
    /// Run all schemes and compare them against the eDRAM baseline
    Compare(Common),
    /// Repeat the comparison over a list of parameter values
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary; overrides the config's sweep.parameter
        #[arg(long, value_enum)]
        param: Option<ParamArg>,
        /// Comma-separated values; overrides the config's sweep.values
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ParamArg {
    RetentionPeriodUs,
    L2SizeKb,
    BetaPct,
    Delta,
}

impl From<ParamArg> for SweepParameter {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::RetentionPeriodUs => SweepParameter::RetentionPeriodUs,
            ParamArg::L2SizeKb => SweepParameter::L2SizeKb,
            ParamArg::BetaPct => SweepParameter::BetaPct,
            ParamArg::Delta => SweepParameter::Delta,
        }
    }
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::GenTrace { config, out, seed } => gen_trace(&config, &out, seed),
        Command::Run(common) => run(&common),
        Command::Compare(common) => compare(&common),
        Command::Sweep { common, param, values } => sweep(&common, param, values),
    }
}

fn gen_trace(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec: SyntheticTraceSpec =
        toml::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    if let Some(seed) = seed {
        spec.rng_seed = seed;
    }
    let records = generate_synthetic(&spec).with_context(|| spec_path.display().to_string())?;
    let mut bytes = Vec::new();
    write_trace(&records, &spec.header(records.len() as u64), &mut bytes)?;
    write_atomic(out, &bytes)?;
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let path = &common.config;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = common.seed {
        match config.trace.synthetic.as_mut() {
            Some(spec) => spec.rng_seed = seed,
            None => bail!("{}: --seed applies only to synthetic traces", path.display()),
        }
    }
    Ok(config)
}

fn base_dir(common: &Common) -> &Path {
    common.config.parent().unwrap_or(Path::new(""))
}

/// Validates everything and loads the trace before any output is written.
fn prepare(config: &RunConfig, common: &Common) -> Result<(Resolved, Vec<edram_dcr::TraceRecord>)> {
    let path = &common.config;
    let mut resolved = config
        .resolve(base_dir(common))
        .with_context(|| format!("invalid config {}", path.display()))?;
    if let Some(out) = &common.out {
        resolved.output_dir = out.clone();
    }
    if let Some(n) = common.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let trace = resolved
        .load_trace()
        .with_context(|| format!("loading trace for {}", path.display()))?;
    Ok((resolved, trace))
}

fn load(common: &Common) -> Result<(Resolved, Vec<edram_dcr::TraceRecord>)> {
    prepare(&load_config(common)?, common)
}

fn run(common: &Common) -> Result<()> {
    let (r, trace) = load(common)?;
    let reports = r
        .schemes
        .par_iter()
        .map(|s| {
            sim::run(&trace, s, &r.geometry, &r.config.timing, r.energy.for_scheme(s.kind), &r.options)
                .with_context(|| format!("running {}", s.kind))
        })
        .collect::<Result<Vec<_>>>()?;
    for report in &reports {
        let name = report.scheme.name();
        write_atomic(&r.output_dir.join(format!("{name}.report.json")), to_json(report).as_bytes())?;
        if r.config.output.interval_csv {
            write_atomic(
                &r.output_dir.join(format!("{name}.intervals.csv")),
                interval_csv(report).as_bytes(),
            )?;
        }
        let t = &report.totals;
        println!(
            "{name}: energy {:.6} J, cycles {}, RPKI {:.3}, MPKI {:.3}, active {:.2}%",
            t.total_energy_j, t.cycles, t.rpki, t.mpki, t.active_ratio_pct
        );
    }
    Ok(())
}

fn check_comparable(r: &Resolved) -> Result<()> {
    if !r.config.schemes.contains(&SchemeKind::BaselineEdram) {
        bail!("configuration error: comparison needs the baseline scheme");
    }
    if r.config.schemes.len() < 2 {
        bail!("configuration error: comparison needs at least two schemes");
    }
    Ok(())
}

fn compare_resolved(r: &Resolved, trace: &[edram_dcr::TraceRecord]) -> Result<ComparisonReport> {
    Ok(sim::compare(trace, &r.schemes, &r.geometry, &r.config.timing, &r.energy, &r.options)?)
}

fn compare(common: &Common) -> Result<()> {
    let (r, trace) = load(common)?;
    check_comparable(&r)?;
    let report = compare_resolved(&r, &trace)?;
    let table = comparison_table(&report);
    write_atomic(&r.output_dir.join("comparison.json"), to_json(&report).as_bytes())?;
    write_atomic(&r.output_dir.join("comparison.txt"), table.as_bytes())?;
    write_atomic(&r.output_dir.join("plot.csv"), plot_csv(&report).as_bytes())?;
    for run in &report.runs {
        let name = run.scheme.name();
        write_atomic(&r.output_dir.join(format!("{name}.report.json")), to_json(run).as_bytes())?;
    }
    print!("{table}");
    Ok(())
}

fn sweep(common: &Common, param: Option<ParamArg>, values: Option<Vec<f64>>) -> Result<()> {
    let mut config = load_config(common)?;
    let configured = config.sweep.take();
    let parameter = param
        .map(SweepParameter::from)
        .or(configured.as_ref().map(|s| s.parameter))
        .context("no sweep parameter: pass --param or add a [sweep] section")?;
    let values = values
        .or(configured.map(|s| s.values))
        .context("no sweep values: pass --values or add a [sweep] section")?;
    config.sweep = Some(SweepSection { parameter, values: values.clone() });
    let (base, trace) = prepare(&config, common)?;
    check_comparable(&base)?;
    config.sweep = None;

    let mut resolved = Vec::with_capacity(values.len());
    for &v in &values {
        let r = config
            .with_parameter(parameter, v)?
            .resolve(base_dir(common))
            .with_context(|| format!("{} = {v}", parameter.name()))?;
        resolved.push((v, r));
    }
    let mut points = Vec::with_capacity(values.len());
    for (v, r) in &resolved {
        let report =
            compare_resolved(r, &trace).with_context(|| format!("{} = {v}", parameter.name()))?;
        println!("{} = {v}", parameter.name());
        print!("{}", comparison_table(&report));
        points.push((*v, report));
    }
    write_atomic(
        &base.output_dir.join("sweep.csv"),
        sweep_csv(parameter.name(), &points).as_bytes(),
    )?;
    Ok(())
}
