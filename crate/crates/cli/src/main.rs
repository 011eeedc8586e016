//! Stage-file pipeline for two-mode homodyne tomography experiments.
//!
//! Each subcommand reads the artifacts of the previous stage (state JSON,
//! dataset JSONL, moment tables) and writes its own, so a real lab dataset
//! in the same JSONL shape drops into `moments`/`check` unchanged. All
//! randomness is seeded; identical configs produce byte-identical outputs.
//!
//! Exit codes: 0 all checks pass, 2 violation or cross-check discrepancy,
//! 3 inconclusive within error, 1 operational error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use optomo_core::homodyne::{sample_state, NoiseModel, PhaseSchedule};
use optomo_core::moment_engine::{
    cross_validate, mean_validate, solve_cross_moments, solve_ordered_moments,
};
use optomo_core::photon::photon_moments;
use optomo_core::quantum_state::{make_state, StateDescriptor};
use optomo_core::reconstruction::{
    charfn_grid, invert_to_tomogram, tomogram_charfn_series, TRUNCATION_EPS,
};
use optomo_core::tomography::Density2D;
use optomo_core::uncertainty::{full_report, InequalityReport, Verdict, CONFIDENCE_Z};
use optomo_core::{
    AnalyticSource, EmpiricalSource, GaussianState, HomodyneDataset, Mode, MomentSource,
    SCHEMA_VERSION,
};

const EXIT_PASS: i32 = 0;
const EXIT_ERROR: i32 = 1;
const EXIT_VIOLATION: i32 = 2;
const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Parser)]
#[command(name = "optomo", version, about = "two-mode optical tomography pipeline")]
struct Cli {
    /// JSON run configuration; explicit flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// cap on rayon worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// output path (stage-specific default otherwise)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Everything a full run needs, serializable for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct RunConfig {
    schedule: String,
    shots: usize,
    seed: u64,
    noise_sigma: f64,
    /// confidence multiplier for verdicts
    z: f64,
    /// charfn truncation order
    order: u32,
    /// F(theta) grid
    f_thetas: Vec<f64>,
    /// frames for the third-order inequality
    cubic_thetas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedule: "full".into(),
            shots: 100_000,
            seed: 1,
            noise_sigma: 0.0,
            z: CONFIDENCE_Z,
            order: 8,
            f_thetas: vec![0.0],
            cubic_thetas: vec![0.0],
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a state JSON from a named descriptor
    State(StateArgs),
    /// Sample a synthetic homodyne dataset from a state
    Sample(SampleArgs),
    /// Solve ordered and cross moment tables
    Moments(MomentsArgs),
    /// Evaluate every uncertainty inequality and cross-check
    Check(SourceArgs),
    /// Reconstruct a joint tomogram through its characteristic function
    Reconstruct(ReconstructArgs),
    /// Aggregate checks, photon statistics and diagnostics into one report
    Report(SourceArgs),
}

#[derive(Args)]
struct StateArgs {
    /// vacuum | coherent | squeezed | tmsv | thermal
    #[arg(long)]
    kind: String,
    /// coherent amplitudes as re,im
    #[arg(long, value_parser = parse_pair)]
    alpha1: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair)]
    alpha2: Option<(f64, f64)>,
    /// squeezing (mode 1) / tmsv parameter
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 0.0)]
    r2: f64,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, default_value_t = 0.0)]
    phi2: f64,
    /// thermal occupations
    #[arg(long, default_value_t = 0.0)]
    nbar1: f64,
    #[arg(long, default_value_t = 0.0)]
    nbar2: f64,
}

#[derive(Args)]
struct SampleArgs {
    /// state JSON from the `state` stage
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    schedule: Option<String>,
    /// shots per schedule entry
    #[arg(long)]
    n: Option<usize>,
    /// additive Gaussian detector noise
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Args)]
struct SourceArgs {
    /// dataset stem from the `sample` stage (expects .jsonl + .meta.json)
    #[arg(long)]
    data: Option<PathBuf>,
    /// state JSON for the analytic (noise-free) pipeline
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    analytic: bool,
    #[arg(long)]
    z: Option<f64>,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 4)]
    max_degree: u32,
    /// mode labels to tabulate
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u8, 2u8])]
    modes: Vec<u8>,
    /// also solve the cross-mode table (degree 2 x 2)
    #[arg(long)]
    cross: bool,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long, default_value_t = 0.0)]
    theta1: f64,
    #[arg(long, default_value_t = 0.0)]
    theta2: f64,
    /// charfn grid points per axis (odd keeps k = 0 on the grid)
    #[arg(long, default_value_t = 49)]
    k_len: usize,
    /// output tomogram half-width and points per axis
    #[arg(long, default_value_t = 5.0)]
    x_max: f64,
    #[arg(long, default_value_t = 81)]
    x_len: usize,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected re,im".into());
    }
    let re = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let im = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((re, im))
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(EXIT_ERROR);
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let cfg = load_config(&cli)?;
    match &cli.cmd {
        Cmd::State(args) => cmd_state(args, cli.out.as_deref()),
        Cmd::Sample(args) => cmd_sample(args, &cfg, cli.out.as_deref()),
        Cmd::Moments(args) => cmd_moments(args, cli.out.as_deref()),
        Cmd::Check(args) => cmd_check(args, &cfg, cli.out.as_deref()),
        Cmd::Reconstruct(args) => cmd_reconstruct(args, &cfg, cli.out.as_deref()),
        Cmd::Report(args) => cmd_report(args, &cfg, cli.out.as_deref()),
    }
}

fn write_out(out: Option<&Path>, default_name: &str, content: &str) -> anyhow::Result<()> {
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(default_name));
    let mut f = fs::File::create(&path)?;
    f.write_all(content.as_bytes())?;
    f.write_all(b"\n")?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn descriptor_from_args(args: &StateArgs) -> anyhow::Result<StateDescriptor> {
    Ok(match args.kind.as_str() {
        "vacuum" => StateDescriptor::Vacuum,
        "coherent" => StateDescriptor::Coherent {
            alpha1: args.alpha1.unwrap_or((0.0, 0.0)),
            alpha2: args.alpha2.unwrap_or((0.0, 0.0)),
        },
        "squeezed" => StateDescriptor::Squeezed {
            r1: args.r,
            phi1: args.phi,
            r2: args.r2,
            phi2: args.phi2,
        },
        "tmsv" => StateDescriptor::TwoModeSqueezed { r: args.r },
        "thermal" => StateDescriptor::Thermal { nbar1: args.nbar1, nbar2: args.nbar2 },
        other => anyhow::bail!("unknown state kind '{other}'"),
    })
}

fn cmd_state(args: &StateArgs, out: Option<&Path>) -> anyhow::Result<i32> {
    let desc = descriptor_from_args(args)?;
    let state: GaussianState<f64> = make_state(&desc)?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "descriptor": desc,
        "mean": state.mean,
        "cov": state.cov,
    });
    write_out(out, "state.json", &serde_json::to_string_pretty(&doc)?)?;
    Ok(EXIT_PASS)
}

fn load_state(path: &Path) -> anyhow::Result<(StateDescriptor, GaussianState<f64>)> {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let schema = doc["schema_version"].as_u64().unwrap_or(0) as u32;
    anyhow::ensure!(schema == SCHEMA_VERSION, "state schema {schema}, expected {SCHEMA_VERSION}");
    let desc: StateDescriptor = serde_json::from_value(doc["descriptor"].clone())?;
    Ok((desc.clone(), make_state(&desc)?))
}

fn cmd_sample(args: &SampleArgs, cfg: &RunConfig, out: Option<&Path>) -> anyhow::Result<i32> {
    let (desc, state) = load_state(&args.state)?;
    let schedule =
        PhaseSchedule::by_name(args.schedule.as_deref().unwrap_or(&cfg.schedule), args.n.unwrap_or(cfg.shots))?;
    let noise = NoiseModel { sigma: args.noise_sigma.unwrap_or(cfg.noise_sigma) };
    let ds = sample_state(&state, Some(desc), &schedule, cfg.seed, &noise)?;
    let stem = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("dataset"));
    ds.save(&stem)?;
    eprintln!(
        "wrote {}.jsonl ({} records) and {}.meta.json",
        stem.display(),
        ds.record_count(),
        stem.display()
    );
    Ok(EXIT_PASS)
}

/// Dataset (if any) that a source argument set points at.
fn load_dataset(args: &SourceArgs) -> anyhow::Result<Option<HomodyneDataset>> {
    match (&args.data, args.analytic || args.state.is_some()) {
        (Some(stem), _) => Ok(Some(HomodyneDataset::load(stem)?)),
        (None, true) => Ok(None),
        (None, false) => anyhow::bail!("need --data STEM or --analytic --state FILE"),
    }
}

fn analytic_source(args: &SourceArgs) -> anyhow::Result<AnalyticSource> {
    let path = args
        .state
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("--analytic requires --state FILE"))?;
    let (_, state) = load_state(path)?;
    Ok(AnalyticSource::new(state))
}

fn cmd_moments(args: &MomentsArgs, out: Option<&Path>) -> anyhow::Result<i32> {
    let dataset = load_dataset(&args.source)?;
    let doc = match &dataset {
        Some(ds) => moments_doc(&EmpiricalSource::new(ds), args)?,
        None => moments_doc(&analytic_source(&args.source)?, args)?,
    };
    write_out(out, "moments.json", &serde_json::to_string_pretty(&doc)?)?;
    Ok(EXIT_PASS)
}

fn moments_doc<S: MomentSource>(src: &S, args: &MomentsArgs) -> anyhow::Result<Value> {
    let mut tables = Vec::new();
    for &label in &args.modes {
        let mode = Mode::from_label(label)?;
        tables.push(solve_ordered_moments(src, mode, args.max_degree, 0.0, None)?.to_json());
    }
    let cross = if args.cross {
        Some(solve_cross_moments(src, 2, 2)?.to_json())
    } else {
        None
    };
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "tables": tables,
        "cross": cross,
    }))
}

fn worst_exit(reports: &[InequalityReport], consistent: bool) -> i32 {
    if !consistent || reports.iter().any(|r| r.verdict == Verdict::Violation) {
        EXIT_VIOLATION
    } else if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_PASS
    }
}

fn check_doc<S: MomentSource>(src: &S, cfg: &RunConfig, z: f64) -> anyhow::Result<(Value, i32)> {
    let reports = full_report(src, z, &cfg.f_thetas, &cfg.cubic_thetas)?;
    let cross = cross_validate(src)?;
    let means = mean_validate(src)?;
    let code = worst_exit(&reports, cross.consistent && means.consistent);
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "confidence_z": z,
        "inequalities": reports,
        "cross_validation": cross,
        "mean_validation": means,
        "summary": {
            "pass": code == EXIT_PASS,
            "exit_code": code,
            "violations": reports.iter().filter(|r| r.verdict == Verdict::Violation).count(),
            "inconclusive": reports.iter().filter(|r| r.verdict == Verdict::Inconclusive).count(),
        },
    });
    Ok((doc, code))
}

fn cmd_check(args: &SourceArgs, cfg: &RunConfig, out: Option<&Path>) -> anyhow::Result<i32> {
    let z = args.z.unwrap_or(cfg.z);
    let dataset = load_dataset(args)?;
    let (doc, code) = match &dataset {
        Some(ds) => check_doc(&EmpiricalSource::new(ds), cfg, z)?,
        None => {
            // analytic sources have exact slices at any phase: widen the
            // F(theta) grid unless the config pinned one
            let mut cfg = cfg.clone();
            if cfg.f_thetas == RunConfig::default().f_thetas {
                cfg.f_thetas = (0..8).map(|k| k as f64 * std::f64::consts::PI / 8.0).collect();
            }
            check_doc(&analytic_source(args)?, &cfg, z)?
        }
    };
    write_out(out, "report.json", &serde_json::to_string_pretty(&doc)?)?;
    Ok(code)
}

fn reconstruct_doc<S: MomentSource>(
    src: &S,
    args: &ReconstructArgs,
    order: u32,
) -> anyhow::Result<(Value, String)> {
    let series = tomogram_charfn_series(src, args.theta1, args.theta2, order)?;
    let window = series.admitted_window(TRUNCATION_EPS);
    let field = charfn_grid(&series, window, args.k_len)?;
    let origin = field.data[(args.k_len / 2) * args.k_len + args.k_len / 2];
    let tomo = invert_to_tomogram(&field, args.theta1, args.theta2, args.x_max, args.x_len)?;

    // plot-ready CSV: x1, x2, density
    let mut csv = String::from("x1,x2,w\n");
    if let Density2D::Grid { axes, values, .. } = &tomo.density {
        for i in 0..axes[0].len {
            for j in 0..axes[1].len {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    axes[0].at(i),
                    axes[1].at(j),
                    values[i * axes[1].len + j]
                ));
            }
        }
    }
    let quality = match &tomo.density {
        Density2D::Grid { quality, .. } => json!({
            "raw_mass": quality.raw_mass,
            "min_value": quality.min_value,
        }),
        _ => Value::Null,
    };
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "order": order,
        "theta1": args.theta1,
        "theta2": args.theta2,
        "admitted_window": window,
        "charfn_origin": { "re": origin.re, "im": origin.im },
        "tomogram_quality": quality,
    });
    Ok((doc, csv))
}

fn cmd_reconstruct(
    args: &ReconstructArgs,
    cfg: &RunConfig,
    out: Option<&Path>,
) -> anyhow::Result<i32> {
    let order = args.order.unwrap_or(cfg.order);
    let dataset = load_dataset(&args.source)?;
    let (doc, csv) = match &dataset {
        Some(ds) => reconstruct_doc(&EmpiricalSource::new(ds), args, order)?,
        None => reconstruct_doc(&analytic_source(&args.source)?, args, order)?,
    };
    let stem = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("reconstruction"));
    fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    fs::write(stem.with_extension("csv"), csv)?;
    eprintln!("wrote {}.json and {}.csv", stem.display(), stem.display());
    Ok(EXIT_PASS)
}

fn report_doc<S: MomentSource>(src: &S, cfg: &RunConfig, z: f64) -> anyhow::Result<(Value, i32)> {
    let (check, code) = check_doc(src, cfg, z)?;
    let photons = photon_moments(src)?;
    let series = tomogram_charfn_series(src, 0.0, 0.0, cfg.order.min(optomo_core::MAX_ORDER))?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "checks": check,
        "photon_stats": photons,
        "reconstruction": {
            "order": series.order,
            "admitted_window": series.admitted_window(TRUNCATION_EPS),
        },
        "summary": check["summary"],
    });
    Ok((doc, code))
}

fn cmd_report(args: &SourceArgs, cfg: &RunConfig, out: Option<&Path>) -> anyhow::Result<i32> {
    let z = args.z.unwrap_or(cfg.z);
    let dataset = load_dataset(args)?;
    let (doc, code) = match &dataset {
        Some(ds) => report_doc(&EmpiricalSource::new(ds), cfg, z)?,
        None => report_doc(&analytic_source(args)?, cfg, z)?,
    };
    write_out(out, "full_report.json", &serde_json::to_string_pretty(&doc)?)?;
    Ok(code)
}
