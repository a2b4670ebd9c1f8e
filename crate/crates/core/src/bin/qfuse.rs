use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use qfuse::focus::label_raster;
use qfuse::fusion::{fuse_with_dictionary, write_wq_csv, FuseConfig};
use qfuse::patch::{build_dictionary, Dictionary};
use qfuse::pipeline::io::{write_atomic, write_gray_png};
use qfuse::pipeline::{
    evaluate_split, from_quaternion, metric_qg, metric_qmi, psnr, read_image, to_quaternion,
    write_layer, write_png, Preset, RunConfig, Split,
};
use qfuse::qfed::{decompose, write_trace_csv};
use qfuse::quat::{Quaternion, QuaternionMatrix, ShrinkMode};
use qfuse::{Error, Result};

#[derive(Parser)]
#[command(
    name = "qfuse",
    version,
    about = "Quaternion multi-focus color image fusion"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse two or more registered images into one all-in-focus image.
    Fuse {
        #[arg(long, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write focus-map label images and per-patch similarity scores here.
        #[arg(long)]
        maps_dir: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Fuse every entry of a JSON manifest `[{"inputs": [..], "output": ".."}]`.
    Batch {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Split one image into base, detail and noise layers.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print fusion quality metrics.
    Metrics {
        #[arg(long)]
        fused: PathBuf,
        #[arg(long, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// All-in-focus reference for PSNR.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Blur regions of a sharp image, fuse the result and score it.
    SynthEval {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_enum, default_value = "left-right")]
        split: Split,
        #[arg(long, default_value_t = 3.0)]
        sigma: f64,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the fused image.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args, Clone, Default)]
struct SolverArgs {
    /// Flat JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    shrink_mode: Option<ShrinkMode>,
    /// Binary dictionary file instead of the built-in DCT dictionary.
    #[arg(long)]
    dictionary: Option<PathBuf>,
}

impl SolverArgs {
    fn run_config(&self) -> Result<RunConfig> {
        let mut run = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        run.merge(RunConfig {
            preset: self.preset,
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            mu0: self.mu0,
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            groups: self.groups,
            shrink_mode: self.shrink_mode,
            dictionary: self.dictionary.clone(),
            ..Default::default()
        });
        Ok(run)
    }
}

fn dictionary(run: &RunConfig, cfg: &FuseConfig) -> Result<Dictionary> {
    match &run.dictionary {
        Some(path) => Dictionary::read(path),
        None => build_dictionary(cfg.qfed.patch_side.pow(2), cfg.qfed.atom_count),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run_fuse(
    inputs: &[PathBuf],
    output: &Path,
    maps_dir: Option<&Path>,
    cfg: &FuseConfig,
    dict: &Dictionary,
) -> Result<()> {
    if inputs.len() < 2 {
        return Err(Error::TooFewInputs {
            required: 2,
            actual: inputs.len(),
        });
    }
    let images = inputs
        .iter()
        .map(|p| read_image(p).map(|i| to_quaternion(&i)))
        .collect::<Result<Vec<_>>>()?;
    let out = fuse_with_dictionary(&images, cfg, dict)?;
    write_png(&from_quaternion(&out.fused), output)?;
    if let Some(dir) = maps_dir {
        create_dir(dir)?;
        let (m, n) = out.fused.shape();
        let n_in = out.maps.inputs;
        write_gray_png(
            &label_raster(&out.maps.base, &out.base_grid, n_in),
            n,
            m,
            &dir.join("focus_base.png"),
        )?;
        write_gray_png(
            &label_raster(&out.maps.detail, &out.detail_grid, n_in),
            n,
            m,
            &dir.join("focus_detail.png"),
        )?;
        let csv = dir.join("wq.csv");
        write_atomic(&csv, |f| {
            write_wq_csv(&out.qssr, std::io::BufWriter::new(f))
        })?;
    }
    log::info!("wrote {}", output.display());
    Ok(())
}

/// Layers may be negative; they are shown around mid-gray.
fn offset_view(q: &QuaternionMatrix) -> QuaternionMatrix {
    q.map(|p| p + Quaternion::pure(0.5, 0.5, 0.5))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchEntry {
    inputs: Vec<PathBuf>,
    output: PathBuf,
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Fuse {
            inputs,
            output,
            maps_dir,
            solver,
        } => {
            let mut run = solver.run_config()?;
            run.merge(RunConfig {
                inputs,
                output,
                maps_dir,
                ..Default::default()
            });
            let cfg = run.fuse_config()?;
            let output = run
                .output
                .clone()
                .ok_or_else(|| Error::Config("no output path given".into()))?;
            run_fuse(
                &run.inputs,
                &output,
                run.maps_dir.as_deref(),
                &cfg,
                &dictionary(&run, &cfg)?,
            )
        }
        Command::Batch { manifest, solver } => {
            let run = solver.run_config()?;
            let cfg = run.fuse_config()?;
            let dict = dictionary(&run, &cfg)?;
            let text = std::fs::read_to_string(&manifest).map_err(|e| Error::Io {
                path: manifest.clone(),
                source: e,
            })?;
            let entries: Vec<BatchEntry> = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", manifest.display())))?;
            entries
                .par_iter()
                .map(|e| run_fuse(&e.inputs, &e.output, None, &cfg, &dict))
                .collect::<Result<Vec<_>>>()?;
            Ok(())
        }
        Command::Decompose {
            input,
            output_dir,
            solver,
        } => {
            let run = solver.run_config()?;
            let cfg = run.fuse_config()?;
            let image = to_quaternion(&read_image(&input)?);
            let res = decompose(&image, &cfg.qfed, &dictionary(&run, &cfg)?)?;
            if !res.converged {
                log::warn!(
                    "decomposition stopped after {} iterations (rel diff {:.3e})",
                    res.iterations,
                    res.rel_diff
                );
            }
            create_dir(&output_dir)?;
            for (name, layer, view) in [
                ("base", &res.b, res.b.clone()),
                ("detail", &res.d, offset_view(&res.d)),
                ("noise", &res.e, offset_view(&res.e)),
            ] {
                write_layer(layer, &output_dir.join(format!("{name}.qlayer")))?;
                write_png(
                    &from_quaternion(&view),
                    &output_dir.join(format!("{name}.png")),
                )?;
            }
            let trace = output_dir.join("trace.csv");
            write_atomic(&trace, |f| {
                write_trace_csv(&res.history, std::io::BufWriter::new(f))
            })?;
            println!(
                "{}",
                serde_json::json!({
                    "iterations": res.iterations,
                    "converged": res.converged,
                    "rel_diff": res.rel_diff,
                    "constraint_residual": res.constraint_residual,
                })
            );
            Ok(())
        }
        Command::Metrics {
            fused,
            inputs,
            reference,
            json,
        } => {
            let f = read_image(&fused)?;
            let ins = inputs
                .iter()
                .map(|p| read_image(p))
                .collect::<Result<Vec<_>>>()?;
            let mut rows = vec![
                ("Q_MI", metric_qmi(&f, &ins)?),
                ("Q_G", metric_qg(&f, &ins)?),
            ];
            if let Some(r) = reference {
                rows.push(("PSNR", psnr(&f, &read_image(&r)?)?));
            }
            if json {
                let map: serde_json::Map<String, serde_json::Value> = rows
                    .iter()
                    .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                    .collect();
                println!("{}", serde_json::Value::Object(map));
            } else {
                println!("{:<6} {:>10}", "metric", "value");
                for (k, v) in rows {
                    println!("{k:<6} {v:>10.4}");
                }
            }
            Ok(())
        }
        Command::SynthEval {
            image,
            split,
            sigma,
            report,
            output,
            solver,
        } => {
            let run = solver.run_config()?;
            let cfg = run.fuse_config()?;
            let gt = read_image(&image)?;
            let (rep, out) = evaluate_split(&gt, split, sigma, &cfg)?;
            if let Some(path) = output {
                write_png(&from_quaternion(&out.fused), &path)?;
            }
            let text = serde_json::to_string_pretty(&rep).expect("report serializes");
            match report {
                Some(path) => {
                    write_atomic(&path, |f| std::io::Write::write_all(f, text.as_bytes()))?
                }
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Ok(v) = std::env::var("QFUSE_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    log::warn!("could not cap worker threads: {e}");
                }
            }
            _ => {
                eprintln!("error: QFUSE_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(1);
            }
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
