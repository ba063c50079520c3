//! Command-line interface for the correlation-filter tracking toolkit.
//!
//! Subcommands: `track`, `eval`, `train-head`, `crm-inspect`, `synth`,
//! `bench`. On failure the process exits nonzero and prints a
//! machine-readable error JSON to stderr.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use msctrack::cftrain::{make_triplets, train_head, TrainConfig, TripletGeometry};
use msctrack::crm::{reliability_scores, TargetRegion};
use msctrack::dcf::TrackerConfig;
use msctrack::error::{Error, Result};
use msctrack::eval::{
    default_synth_suite, emit_outputs, load_sequence, run_ope, write_synth_sequence, SequenceSpec,
    TrackerKind,
};
use msctrack::features::{checkpoint, CompressionHead, LrnParams};
use msctrack::tensor::io::read_tensor;

#[derive(Parser)]
#[command(
    name = "msctrack",
    about = "Correlation-filter visual tracking toolkit",
    version
)]
struct Cli {
    /// Tracker configuration JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Random seed (overrides the config's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for evaluation.
    #[arg(long, global = true, default_value_t = 4)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TrackerArg {
    Dcf,
    Cco,
}

impl From<TrackerArg> for TrackerKind {
    fn from(t: TrackerArg) -> Self {
        match t {
            TrackerArg::Dcf => TrackerKind::Dcf,
            TrackerArg::Cco => TrackerKind::Cco,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Track a single OTB-layout sequence and write its trajectory.
    Track {
        /// Sequence directory (contains img/ and groundtruth_rect.txt).
        sequence: PathBuf,
        #[arg(long, value_enum, default_value_t = TrackerArg::Dcf)]
        tracker: TrackerArg,
    },
    /// One-pass evaluation over every sequence in a dataset directory.
    Eval {
        /// Dataset directory whose subdirectories are sequences.
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = TrackerArg::Dcf)]
        tracker: TrackerArg,
    },
    /// Train the feature-compression head on synthetic triplets and save a
    /// checkpoint.
    TrainHead {
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 24)]
        triplets: usize,
        /// Learning rate override (default from the training config).
        #[arg(long)]
        lr: Option<f64>,
        /// Mini-batch size override.
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Print per-channel reliability scores (R, A, C) of a tensor file as
    /// CSV.
    CrmInspect {
        /// Tensor file in the toolkit's binary format.
        tensor: PathBuf,
        /// Target region as top,left,height,width in cells (defaults to a
        /// centered box of half the map extent).
        #[arg(long)]
        region: Option<String>,
        #[arg(long, default_value_t = 3.0)]
        eta: f64,
        #[arg(long, default_value_t = 1e-5)]
        zeta: f64,
    },
    /// Generate the synthetic sequence suite in the output directory.
    Synth {
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Time the core operations and print a JSON report.
    Bench,
}

fn load_config(cli: &Cli) -> Result<TrackerConfig> {
    let mut cfg = match &cli.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => TrackerConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn discover_sequences(dataset: &Path) -> Result<Vec<SequenceSpec>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(dataset)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.join("groundtruth_rect.txt").exists())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no sequences found under {}",
            dataset.display()
        )));
    }
    dirs.iter().map(|d| load_sequence(d)).collect()
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Track { sequence, tracker } => {
            let cfg = load_config(cli)?;
            let seq = load_sequence(sequence)?;
            let report = run_ope(&cfg, (*tracker).into(), std::slice::from_ref(&seq), 1)?;
            if let Some(err) = &report.sequences[0].error {
                return Err(Error::InvalidArgument(format!(
                    "sequence {} failed: {err}",
                    seq.name
                )));
            }
            emit_outputs(&report, &cli.out)?;
            println!(
                "tracked {} ({} frames); outputs in {}",
                seq.name,
                seq.frames.len(),
                cli.out.display()
            );
        }
        Command::Eval { dataset, tracker } => {
            let cfg = load_config(cli)?;
            let seqs = discover_sequences(dataset)?;
            let report = run_ope(&cfg, (*tracker).into(), &seqs, cli.threads)?;
            emit_outputs(&report, &cli.out)?;
            let failed: Vec<&str> = report
                .sequences
                .iter()
                .filter(|s| s.error.is_some())
                .map(|s| s.name.as_str())
                .collect();
            println!(
                "evaluated {} sequences ({} failed); outputs in {}",
                seqs.len(),
                failed.len(),
                cli.out.display()
            );
            if !failed.is_empty() {
                eprintln!("failed sequences: {}", failed.join(", "));
            }
        }
        Command::TrainHead {
            epochs,
            triplets,
            lr,
            batch,
        } => {
            let cfg = load_config(cli)?;
            // synthetic training footage at desk-scale geometry
            let mut suite = default_synth_suite(12, cfg.seed);
            suite.truncate(2);
            let geometry = TripletGeometry::default();
            let mut frames = Vec::new();
            let mut boxes = Vec::new();
            for spec in &suite {
                for t in 0..spec.frames {
                    let (frame, bb) = msctrack::eval::synth_frame(spec, t);
                    frames.push(frame);
                    boxes.push((bb.x, bb.y, bb.w, bb.h));
                }
            }
            let prepared = make_triplets(&frames, &boxes, *triplets, &geometry, cfg.seed)?;
            let head = CompressionHead::random(4, 4, LrnParams::default(), cfg.seed);
            let mut train_cfg = TrainConfig::default();
            train_cfg.epochs = *epochs;
            if let Some(lr) = lr {
                train_cfg.lr = *lr;
            }
            if let Some(batch) = batch {
                train_cfg.batch = *batch;
            }
            let (trained, history) = train_head(head, &prepared, &train_cfg)?;
            std::fs::create_dir_all(&cli.out)?;
            let prefix = cli.out.join("head");
            checkpoint::save_head(&prefix, &trained)?;
            std::fs::write(
                cli.out.join("train_history.json"),
                serde_json::to_string_pretty(&history)?,
            )?;
            println!(
                "trained {} epochs on {} triplets; first-epoch loss {:.6}, last {:.6}; checkpoint at {}",
                history.len(),
                prepared.len(),
                history.first().copied().unwrap_or(f64::NAN),
                history.last().copied().unwrap_or(f64::NAN),
                prefix.display()
            );
        }
        Command::CrmInspect {
            tensor,
            region,
            eta,
            zeta,
        } => {
            let map = read_tensor(tensor)?;
            let region = match region {
                Some(spec) => {
                    let parts: Vec<usize> = spec
                        .split(',')
                        .map(|p| {
                            p.trim().parse::<usize>().map_err(|e| Error::Parse {
                                line: 1,
                                msg: format!("bad region component {p:?}: {e}"),
                            })
                        })
                        .collect::<Result<_>>()?;
                    if parts.len() != 4 {
                        return Err(Error::InvalidArgument(
                            "--region expects top,left,height,width".into(),
                        ));
                    }
                    TargetRegion {
                        top: parts[0],
                        left: parts[1],
                        height: parts[2],
                        width: parts[3],
                    }
                }
                None => TargetRegion::centered(
                    map.height,
                    map.width,
                    (map.height / 2).max(1),
                    (map.width / 2).max(1),
                ),
            };
            let scores = reliability_scores(&map, &region, *eta, *zeta)?;
            println!("channel,ratio,indicator,score");
            for s in &scores {
                println!("{},{:.9},{},{:.9}", s.channel, s.ratio, s.indicator, s.score);
            }
        }
        Command::Synth { frames, count } => {
            let cfg = load_config(cli)?;
            let mut suite = default_synth_suite(*frames, cfg.seed);
            suite.truncate(*count);
            std::fs::create_dir_all(&cli.out)?;
            for spec in &suite {
                let dir = write_synth_sequence(spec, &cli.out)?;
                println!("wrote {} ({} frames)", dir.display(), spec.frames);
            }
        }
        Command::Bench => {
            use msctrack::tensor::{fft2, gaussian_label, FeatureMap};
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
            let map = FeatureMap::from_values(
                52,
                52,
                96,
                (0..52 * 52 * 96).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )?;
            let time = |f: &mut dyn FnMut()| {
                let start = Instant::now();
                let mut n = 0u32;
                while start.elapsed().as_secs_f64() < 0.25 {
                    f();
                    n += 1;
                }
                start.elapsed().as_secs_f64() / n as f64
            };
            let fft_s = time(&mut || {
                fft2(&map).unwrap();
            });
            let g = gaussian_label(52, 52, (26.0, 26.0), 2.0)?;
            let train_s = time(&mut || {
                msctrack::dcf::train_filter(&map, &g, 1e-4).unwrap();
            });
            let model = msctrack::dcf::train_filter(&map, &g, 1e-4)?;
            let detect_s = time(&mut || {
                msctrack::dcf::detect(&model, &map).unwrap();
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "shape": "52x52x96",
                    "fft2_seconds": fft_s,
                    "train_filter_seconds": train_s,
                    "detect_seconds": detect_s,
                }))?
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        let payload = json!({ "error": e.to_string() });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}
