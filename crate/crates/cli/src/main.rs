use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sglst::config::FeatureChoice;
use sglst::instance::SolverInstance;
use sglst::io::read_boxes;
use sglst::{
    ope_run, precompute, solve, load_sequence, synth_sequence, write_results, RunConfig,
    SglstTracker, SynthConfig, TrackRun,
};

#[derive(Parser)]
#[command(name = "sglst", version, about = "Structured group-local sparse tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a sequence in OTB layout (img/ + groundtruth_rect.txt).
    Track {
        seq_dir: PathBuf,
        /// Flat key = value run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_features)]
        features: Option<FeatureChoice>,
        /// Output directory (default: results/<sequence name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a results file against ground truth.
    Eval { results: PathBuf, gt: PathBuf },
    /// Solve one serialized coding instance (JSON) and print the code.
    Solve { instance: PathBuf },
    /// Render a synthetic moving-square sequence.
    Synth {
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic")]
        out: PathBuf,
    },
}

fn parse_features(s: &str) -> std::result::Result<FeatureChoice, String> {
    s.parse().map_err(|e: sglst::Error| e.to_string())
}

fn track(
    seq_dir: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    features: Option<FeatureChoice>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(f) = features {
        cfg.features = f;
    }
    cfg.input = Some(seq_dir.to_path_buf());

    let seq = load_sequence(seq_dir)?;
    let out = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("results").join(&seq.name));
    cfg.output = Some(out.clone());

    log::info!("tracking {} ({} frames)", seq.name, seq.len());
    let mut tracker = SglstTracker::new(cfg.tracker_config());
    let (run, summary) = ope_run(&seq, &mut tracker)?;
    write_results(&run.results, &summary, Some(cfg.seed), &cfg, &out)?;
    println!(
        "{}: mean overlap {:.4}, AUC {:.4} over {} frames -> {}",
        summary.sequence,
        summary.mean_overlap,
        summary.auc,
        summary.frames_scored,
        out.display()
    );
    Ok(())
}

fn eval(results: &Path, gt: &Path) -> Result<()> {
    let boxes = read_boxes(results)?;
    let results: Vec<_> = boxes
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.with_context(|| format!("{}: row {} has no box", results.display(), i + 1)))
        .collect::<Result<_>>()?;
    let ground_truth = read_boxes(gt)?;
    if results.len() != ground_truth.len() {
        log::warn!(
            "{} result rows vs {} ground-truth rows; scoring the common prefix",
            results.len(),
            ground_truth.len()
        );
    }
    let n = results.len().min(ground_truth.len());
    let run = TrackRun {
        sequence: gt
            .parent()
            .and_then(|p| p.file_name())
            .map_or_else(|| "sequence".into(), |n| n.to_string_lossy().into_owned()),
        results: results[..n].to_vec(),
        ground_truth: ground_truth[..n].to_vec(),
    };
    let summary = run.summarize()?;
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({
        "sequence": summary.sequence,
        "frames_scored": summary.frames_scored,
        "mean_overlap": summary.mean_overlap,
        "auc": summary.auc,
        "curve": summary.curve,
    }))?);
    Ok(())
}

fn solve_instance(path: &Path) -> Result<()> {
    let inst = SolverInstance::load(path)?;
    let dict = inst.dictionary()?;
    let x = inst.features()?;
    let cfg = inst.solver_config();
    let pre = precompute(&dict, &cfg)?;
    let (code, diag) = solve(&x, &dict, &pre, &cfg)?;
    let rows: Vec<Vec<f64>> = code.row_iter().map(|r| r.iter().copied().collect()).collect();
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({
        "iterations": diag.iterations,
        "converged": diag.converged,
        "objective": diag.final_objective,
        "residuals": [diag.final_residuals.0, diag.final_residuals.1],
        "objective_trace": diag.objective_trace,
        "levels": diag.levels.as_slice(),
        "code": rows,
    }))?);
    Ok(())
}

fn synth(frames: usize, sigma: f64, seed: u64, out: &Path) -> Result<()> {
    if frames == 0 {
        bail!("--frames must be at least 1");
    }
    let cfg = SynthConfig { frames, sigma, seed, ..SynthConfig::default() };
    let seq = synth_sequence(&cfg, out)?;
    println!("wrote {} frames to {}", seq.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track { seq_dir, config, seed, features, out } => {
            track(&seq_dir, config.as_deref(), seed, features, out)
        }
        Command::Eval { results, gt } => eval(&results, &gt),
        Command::Solve { instance } => solve_instance(&instance),
        Command::Synth { frames, sigma, seed, out } => synth(frames, sigma, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
