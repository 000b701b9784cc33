//! `spatialid` command-line front end.
//!
//! Every subcommand shares `--seed`, `--config` and `--out-dir`. Output bytes
//! depend only on the config, the flags and the seed; wall-time columns are
//! the one exception and are zeroed by `simulate --no-timing`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use spatialid_core::harness::{
    compare_uniform_vs_spatial, run_trajectories, run_trajectory, trajectory_masks,
};
use spatialid_core::io::{
    ablation_csv, comparison_csv, encode_pgm, format_sig6, metrics_csv, read_tensor, write_tensor,
    AblationRow, RunConfig, Tensor,
};
use spatialid_core::schedule::schedule_mask_with_phase;
use spatialid_core::{
    extract_mask, l2_relevance, normalized_timestep, AttentionOutput, PatchGrid, Phase,
    SpatialMask,
};

#[derive(Debug, Parser)]
#[command(name = "spatialid", version, about = "Spatially-adaptive identity injection toolkit")]
struct Cli {
    /// Overrides the config file's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// `key = value` run configuration; omitted keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for all outputs (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract a spatial mask from a dumped attention-output tensor.
    MaskExtract {
        /// SIDT tensor shaped `[h, w, D]`, or `[N, D]` with `--grid`.
        #[arg(long)]
        input: PathBuf,
        /// Patch grid as `HxW` for rank-2 inputs.
        #[arg(long)]
        grid: Option<String>,
        /// Also write the mask as `mask.sidt`.
        #[arg(long)]
        mask_tensor: bool,
        #[arg(long, default_value_t = 1)]
        upscale: usize,
    },
    /// Write the scheduled mask of every step as PGM.
    Schedule {
        /// SIDT attention outputs `[T, h, w, D]` (one per step), or a single
        /// `[h, w, D]` reused at every step. Synthetic when omitted.
        #[arg(long)]
        attention: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        upscale: usize,
    },
    /// Run a synthetic trajectory; write metrics CSV, summary JSON and mask PGMs.
    Simulate {
        /// Write zeros in the timing columns.
        #[arg(long)]
        no_timing: bool,
        /// Skip per-step mask images.
        #[arg(long)]
        no_masks: bool,
        #[arg(long, default_value_t = 1)]
        upscale: usize,
    },
    /// Compare scheduled injection with the uniform baseline.
    Compare,
    /// Sweep parameters; one CSV row per configuration.
    Ablate {
        /// `key=v1,v2,...`; repeat for a cartesian product, first flag outermost.
        #[arg(long = "sweep", required = true)]
        sweeps: Vec<String>,
    },
}

/// Parses `argv` (including the program name) and runs it. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn parse_grid(s: &str) -> Result<PatchGrid> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("grid must look like HxW, got {s:?}"))?;
    Ok(PatchGrid::new(h.trim().parse()?, w.trim().parse()?)?)
}

fn write_step_masks(dir: &Path, masks: &[(Phase, SpatialMask)], upscale: usize) -> Result<()> {
    let dir = dir.join("masks");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (k, (phase, mask)) in masks.iter().enumerate() {
        let path = dir.join(format!("step_{k:03}_{phase}.pgm"));
        write(&path, &encode_pgm(mask, upscale)?)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let out = cli.out_dir.as_path();

    match &cli.command {
        Command::MaskExtract {
            input,
            grid,
            mask_tensor,
            upscale,
        } => {
            let grid = grid.as_deref().map(parse_grid).transpose()?;
            let tensor = read_tensor(input)?;
            let o = tensor.to_attention(grid)?;
            let relevance = l2_relevance(&o)?;
            let mask = extract_mask(&o, &cfg.schedule)?;
            write(&out.join("mask.pgm"), &encode_pgm(&mask, *upscale)?)?;
            if *mask_tensor {
                write_tensor(out.join("mask.sidt"), &Tensor::from_mask(&mask))?;
            }
            println!(
                "grid {} degenerate {} mask min {} max {}",
                mask.grid(),
                relevance.is_degenerate(),
                format_sig6(mask.min()),
                format_sig6(mask.max())
            );
        }
        Command::Schedule { attention, upscale } => {
            let masks = match attention {
                None => trajectory_masks(&cfg.scenario()?, &cfg.schedule)?,
                Some(path) => schedule_from_tensor(&read_tensor(path)?, &cfg)?,
            };
            write_step_masks(out, &masks, *upscale)?;
            for (k, (phase, mask)) in masks.iter().enumerate() {
                println!("step {k} {phase} min {} max {}", format_sig6(mask.min()), format_sig6(mask.max()));
            }
        }
        Command::Simulate {
            no_timing,
            no_masks,
            upscale,
        } => {
            let scn = cfg.scenario()?;
            let report = run_trajectory(&scn, &cfg.schedule)?;
            write(&out.join("metrics.csv"), metrics_csv(&report, !no_timing).as_bytes())?;
            let summary = serde_json::to_string_pretty(&report.summary)?;
            write(&out.join("summary.json"), format!("{summary}\n").as_bytes())?;
            if !no_masks {
                write_step_masks(out, &trajectory_masks(&scn, &cfg.schedule)?, *upscale)?;
            }
            let o = &report.summary.overall;
            println!(
                "{} steps: mean iou {} contamination {} face energy {}",
                o.steps,
                format_sig6(o.mean_mask_iou),
                format_sig6(o.mean_contamination_ratio),
                format_sig6(o.mean_face_energy_ratio)
            );
        }
        Command::Compare => {
            let cmp = compare_uniform_vs_spatial(&cfg.scenario()?, &cfg.schedule)?;
            write(&out.join("compare.csv"), comparison_csv(&cmp).as_bytes())?;
            let opt = |v: Option<f64>| v.map(format_sig6).unwrap_or_else(|| "n/a".into());
            println!(
                "mid contamination {} mid face energy {} mean contamination {} mean face energy {}",
                opt(cmp.mean_mid_contamination_ratio),
                opt(cmp.mean_mid_face_energy_ratio),
                format_sig6(cmp.mean_contamination_ratio),
                format_sig6(cmp.mean_face_energy_ratio)
            );
        }
        Command::Ablate { sweeps } => {
            let rows = ablate(&cfg, sweeps)?;
            write(&out.join("ablation.csv"), ablation_csv(&rows).as_bytes())?;
            println!("{} configurations", rows.len());
        }
    }
    Ok(())
}

fn schedule_from_tensor(tensor: &Tensor, cfg: &RunConfig) -> Result<Vec<(Phase, SpatialMask)>> {
    let per_step: Vec<AttentionOutput> = match tensor.dims.as_slice() {
        &[steps, h, w, d] => {
            let grid = PatchGrid::new(h, w)?;
            let stride = grid.patch_count() * d;
            (0..steps)
                .map(|k| {
                    let slice = Tensor::new(
                        vec![h, w, d],
                        tensor.data[k * stride..(k + 1) * stride].to_vec(),
                    )?;
                    slice.to_attention(None)
                })
                .collect::<spatialid_core::Result<_>>()?
        }
        &[_, _, _] => vec![tensor.to_attention(None)?; cfg.schedule.total_steps],
        &[_, _] => vec![tensor.to_attention(Some(cfg.grid()?))?; cfg.schedule.total_steps],
        dims => bail!("attention tensor must have rank 2, 3 or 4, got {dims:?}"),
    };
    if per_step.is_empty() {
        bail!("attention tensor holds no steps");
    }
    let total = per_step.len();
    per_step
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let t = normalized_timestep(k, total)?;
            Ok(schedule_mask_with_phase(t, o, &cfg.schedule)?)
        })
        .collect()
}

/// Expands `key=v1,v2` sweeps into a cartesian product (first sweep outermost)
/// and runs one trajectory per configuration.
fn ablate(base: &RunConfig, sweeps: &[String]) -> Result<Vec<AblationRow>> {
    let mut axes = Vec::with_capacity(sweeps.len());
    for spec in sweeps {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("sweep must look like key=v1,v2, got {spec:?}"))?;
        let key = key.trim().to_string();
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            bail!("sweep {key:?} has no values");
        }
        axes.push((key, values));
    }

    let mut settings: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &axes {
        settings = settings
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut s = prefix.clone();
                    s.push((key.clone(), v.clone()));
                    s
                })
            })
            .collect();
    }

    let mut jobs = Vec::with_capacity(settings.len());
    for combo in &settings {
        let mut cfg = base.clone();
        for (k, v) in combo {
            cfg.set(k, v).map_err(|e| anyhow!("sweep: {e}"))?;
        }
        cfg.validate()
            .with_context(|| format!("sweep configuration {combo:?}"))?;
        jobs.push((cfg.scenario()?, cfg.schedule.clone()));
    }
    let reports = run_trajectories(&jobs)?;
    Ok(settings
        .into_iter()
        .zip(reports)
        .map(|(settings, report)| AblationRow { settings, report })
        .collect())
}
