use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mifs::harness::{
    build_solver, load_data, parse_report_csv, plan_qubo, run_methods, select_mask,
    ExperimentConfig, Method, MiTables,
};
use mifs::ingest::write_idx;
use mifs::qubo::{assemble, ConstraintKind, QuboModel};
use mifs::recon::{
    eval_mse, load_checkpoint, save_checkpoint, tile_row, train_decoder, write_pgm, TrainConfig,
};
use mifs::solve::{repair_weight, tune_linear_penalty, TuneOptions};
use mifs::sparsify::{degree_report, restrict, subsample_2x2, threshold_couplings, SelectionMask};
use mifs::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mifs",
    version,
    about = "Mutual-information QUBO pixel selection and reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: ConfigArgs,
}

/// Experiment settings: an optional `key = value` file, then per-key flag overrides.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    train_images: Option<String>,
    #[arg(long, global = true)]
    train_labels: Option<String>,
    #[arg(long, global = true)]
    test_images: Option<String>,
    #[arg(long, global = true)]
    test_labels: Option<String>,
    #[arg(long, global = true)]
    train_limit: Option<String>,
    #[arg(long, global = true)]
    test_limit: Option<String>,
    #[arg(long, global = true)]
    synth_train: Option<String>,
    #[arg(long, global = true)]
    synth_test: Option<String>,
    #[arg(long, global = true)]
    synth_width: Option<String>,
    #[arg(long, global = true)]
    synth_classes: Option<String>,
    /// Comma-separated planted pixel indices.
    #[arg(long, global = true)]
    synth_informative: Option<String>,
    #[arg(long, global = true)]
    synth_noise: Option<String>,
    #[arg(long, global = true)]
    synth_seed: Option<String>,
    /// Quantile bins per pixel.
    #[arg(long, global = true)]
    bins: Option<String>,
    /// Number of pixels to select.
    #[arg(short, long, global = true)]
    k: Option<String>,
    /// random, grid, full-qubo or reduced-qubo.
    #[arg(long, global = true)]
    method: Option<String>,
    /// quadratic or linear.
    #[arg(long, global = true)]
    constraint: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    alpha_max: Option<String>,
    #[arg(long, global = true)]
    tune_steps: Option<String>,
    /// Couplings kept by thresholding.
    #[arg(long, global = true)]
    keep: Option<String>,
    /// exhaustive, anneal, tabu, partitioned or auto.
    #[arg(long, global = true)]
    solver: Option<String>,
    #[arg(long, global = true)]
    reads: Option<String>,
    #[arg(long, global = true)]
    sweeps: Option<String>,
    #[arg(long, global = true)]
    subproblem_size: Option<String>,
    #[arg(long, global = true)]
    max_passes: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<String>,
    #[arg(long, global = true)]
    batch_size: Option<String>,
    #[arg(long, global = true)]
    learning_rate: Option<String>,
    #[arg(long, global = true)]
    repeats: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("train_images", &self.train_images),
            ("train_labels", &self.train_labels),
            ("test_images", &self.test_images),
            ("test_labels", &self.test_labels),
            ("train_limit", &self.train_limit),
            ("test_limit", &self.test_limit),
            ("synth_train", &self.synth_train),
            ("synth_test", &self.synth_test),
            ("synth_width", &self.synth_width),
            ("synth_classes", &self.synth_classes),
            ("synth_informative", &self.synth_informative),
            ("synth_noise", &self.synth_noise),
            ("synth_seed", &self.synth_seed),
            ("bins", &self.bins),
            ("k", &self.k),
            ("method", &self.method),
            ("constraint", &self.constraint),
            ("alpha", &self.alpha),
            ("alpha_max", &self.alpha_max),
            ("tune_steps", &self.tune_steps),
            ("keep", &self.keep),
            ("solver", &self.solver),
            ("reads", &self.reads),
            ("sweeps", &self.sweeps),
            ("subproblem_size", &self.subproblem_size),
            ("max_passes", &self.max_passes),
            ("epochs", &self.epochs),
            ("batch_size", &self.batch_size),
            ("learning_rate", &self.learning_rate),
            ("repeats", &self.repeats),
            ("seed", &self.seed),
            ("out_dir", &self.out_dir),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load the configured data and print its shape; optionally export it as IDX files.
    Ingest {
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Estimate importance and redundancy on the training split.
    Mi {
        #[arg(long)]
        out: PathBuf,
        /// Also write `feature,importance` rows.
        #[arg(long)]
        importance_csv: Option<PathBuf>,
    },
    /// Assemble the full QUBO from an MI file.
    BuildQubo {
        #[arg(long)]
        mi: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Leave the k-of-n constraint out.
        #[arg(long)]
        unconstrained: bool,
    },
    /// 2×2 subsampling, restriction and coupling thresholding.
    Sparsify {
        #[arg(long)]
        mi: PathBuf,
        /// Image width; inferred from the variable count when omitted.
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        out_qubo: PathBuf,
        #[arg(long)]
        out_mask: PathBuf,
    },
    /// Sample a QUBO file.
    Solve {
        #[arg(long)]
        qubo: PathBuf,
        /// Sample-set CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bisect the linear penalty on an unconstrained QUBO file.
    Tune {
        #[arg(long)]
        qubo: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mask over the QUBO's variables (e.g. from `sparsify`) to map the
        /// repaired selection back to pixels.
        #[arg(long)]
        positions: Option<PathBuf>,
        /// Where to write the repaired selection.
        #[arg(long)]
        out_mask: Option<PathBuf>,
    },
    /// Choose a mask with the configured method and seed.
    Select {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a decoder for a mask.
    Train {
        #[arg(long)]
        mask: PathBuf,
        /// Checkpoint base path (`.bin` and `.manifest` are appended).
        #[arg(long)]
        out: PathBuf,
    },
    /// Test MSE of a trained decoder.
    Eval {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Write originals and reconstructions of the first test images.
        #[arg(long)]
        preview: Option<PathBuf>,
    },
    /// Full pipeline, repeated with seeds seed, seed+1, ...
    Run {
        /// Comma-separated methods to compare on shared data; defaults to the configured method.
        #[arg(long)]
        methods: Option<String>,
    },
    /// Summarize report CSVs.
    Report { files: Vec<PathBuf> },
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Mi { .. } => "mi",
            Command::BuildQubo { .. } => "build-qubo",
            Command::Sparsify { .. } => "sparsify",
            Command::Solve { .. } => "solve",
            Command::Tune { .. } => "tune",
            Command::Select { .. } => "select",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Run { .. } => "run",
            Command::Report { .. } => "report",
        }
    }
}

fn load_mi(path: &Path) -> Result<MiTables> {
    MiTables::parse(&fs::read_to_string(path)?)
}

fn run(command: Command, args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve().map_err(|e| e.at("config"))?;
    match command {
        Command::Ingest { export } => {
            let splits = load_data(&cfg)?;
            for (name, ds) in [("train", &splits.train), ("test", &splits.test)] {
                println!(
                    "{name}: {} images of {}x{}, {} classes",
                    ds.num_samples, ds.width, ds.width, ds.num_classes
                );
            }
            if let Some(dir) = export {
                fs::create_dir_all(&dir)?;
                write_idx(
                    &splits.train,
                    dir.join("train-images-idx3-ubyte"),
                    dir.join("train-labels-idx1-ubyte"),
                )?;
                write_idx(
                    &splits.test,
                    dir.join("t10k-images-idx3-ubyte"),
                    dir.join("t10k-labels-idx1-ubyte"),
                )?;
                println!("wrote IDX files to {}", dir.display());
            }
        }
        Command::Mi {
            out,
            importance_csv,
        } => {
            let splits = load_data(&cfg)?;
            let mi = MiTables::compute(&splits.train, cfg.bins)?;
            fs::write(&out, mi.to_text())?;
            if let Some(p) = importance_csv {
                fs::write(p, mi.importance_csv())?;
            }
            let mut ranked: Vec<(usize, f64)> =
                mi.importance.values.iter().copied().enumerate().collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            println!("{} features; most informative:", mi.importance.len());
            for (i, v) in ranked.iter().take(5) {
                println!("  pixel {i}: {v:.4} nats");
            }
        }
        Command::BuildQubo {
            mi,
            out,
            unconstrained,
        } => {
            let mi = load_mi(&mi)?;
            let q =
                if unconstrained {
                    assemble(&mi.importance, &mi.redundancy, ConstraintKind::None)?
                } else {
                    let width = (mi.importance.len() as f64).sqrt() as usize;
                    let plan = plan_qubo(&cfg, Method::FullQubo, &mi, width)?;
                    match (plan.constrained, plan.alpha) {
                        (Some(q), Some(alpha)) => {
                            println!("quadratic penalty alpha = {alpha}");
                            q
                        }
                        _ => return Err(Error::Invalid(
                            "a linear penalty is tuned, not fixed: use --unconstrained and `tune`"
                                .into(),
                        )),
                    }
                };
            q.save(&out)?;
            print!("{}", degree_report(&q));
        }
        Command::Sparsify {
            mi,
            width,
            out_qubo,
            out_mask,
        } => {
            let mi = load_mi(&mi)?;
            let width =
                width.unwrap_or_else(|| (mi.importance.len() as f64).sqrt().round() as usize);
            let positions = subsample_2x2(&mi.importance, width)?;
            let (imp, red) = restrict(&mi.importance, &mi.redundancy, &positions)?;
            let q = threshold_couplings(&assemble(&imp, &red, ConstraintKind::None)?, cfg.keep);
            q.save(&out_qubo)?;
            positions.save(&out_mask)?;
            print!("{}", degree_report(&q));
        }
        Command::Solve { qubo, out } => {
            let q = QuboModel::load(qubo)?;
            let solver = build_solver(&cfg, cfg.method, q.n, cfg.seed);
            let set = solver.solve(&q)?;
            let best = set.best()?;
            println!(
                "{}: best energy {} at weight {} ({} distinct samples)",
                solver.name(),
                best.energy,
                best.weight(),
                set.records.len()
            );
            if let Some(p) = out {
                fs::write(p, set.to_csv())?;
            }
        }
        Command::Tune {
            qubo,
            out,
            positions,
            out_mask,
        } => {
            let base = QuboModel::load(qubo)?;
            let solver = build_solver(&cfg, Method::ReducedQubo, base.n, cfg.seed);
            let opts = TuneOptions {
                max_steps: cfg.tune_steps,
                alpha_max: cfg.alpha_max,
            };
            let tuned = tune_linear_penalty(&base, cfg.k, &solver, &opts)?;
            for (alpha, w) in &tuned.probes {
                println!("  alpha {alpha:.6} -> weight {w}");
            }
            println!(
                "alpha = {} (weight {}, target {})",
                tuned.alpha, tuned.weight, cfg.k
            );
            if let Some(p) = out {
                fs::write(p, tuned.samples.to_csv())?;
            }
            if let Some(p) = out_mask {
                let bits = repair_weight(&base, &tuned.samples.best()?.x, cfg.k)?;
                let positions = match positions {
                    Some(m) => SelectionMask::load(m)?,
                    None => SelectionMask::identity(base.n),
                };
                positions.select(&bits, "tune")?.save(p)?;
            }
        }
        Command::Select { out } => {
            let splits = load_data(&cfg)?;
            let width = splits.train.width;
            let plan = match cfg.method {
                Method::FullQubo | Method::ReducedQubo => {
                    let mi = MiTables::compute(&splits.train, cfg.bins)?;
                    Some(plan_qubo(&cfg, cfg.method, &mi, width)?)
                }
                _ => None,
            };
            let sel = select_mask(&cfg, cfg.method, width, plan.as_ref(), cfg.seed)?;
            sel.mask.save(&out)?;
            println!("{}: {:?}", cfg.method, sel.mask.indices);
        }
        Command::Train { mask, out } => {
            let splits = load_data(&cfg)?;
            let mask = SelectionMask::load(mask)?;
            let tc = TrainConfig {
                learning_rate: cfg.learning_rate,
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                seed: cfg.seed,
                ..Default::default()
            };
            let trained = train_decoder(&splits.train, &mask, &tc)?;
            save_checkpoint(&trained.model, &out)?;
            for (e, l) in trained.epoch_losses.iter().enumerate() {
                println!("epoch {:>3}: train MSE {l:.6}", e + 1);
            }
        }
        Command::Eval {
            mask,
            checkpoint,
            preview,
        } => {
            let splits = load_data(&cfg)?;
            let mask = SelectionMask::load(mask)?;
            let model = load_checkpoint(checkpoint)?;
            println!("test MSE {}", eval_mse(&model, &splits.test, &mask)?);
            if let Some(p) = preview {
                let shown = splits.test.take(8);
                let side = shown.width;
                let recon = model.predict(&shown.gather(&mask.indices), shown.num_samples);
                let originals: Vec<&[f32]> =
                    (0..shown.num_samples).map(|s| shown.sample(s)).collect();
                let rebuilt: Vec<&[f32]> = recon.chunks(side * side).collect();
                let mut pixels = tile_row(&originals, side);
                pixels.extend(tile_row(&rebuilt, side));
                write_pgm(p, side * shown.num_samples, 2 * side, &pixels)?;
            }
        }
        Command::Run { methods } => {
            let methods = match methods {
                Some(list) => list
                    .split(',')
                    .map(|m| m.trim().parse())
                    .collect::<Result<Vec<Method>>>()?,
                None => vec![cfg.method],
            };
            for r in run_methods(&cfg, &methods)? {
                print!("{}", r.summary());
            }
        }
        Command::Report { files } => {
            if files.is_empty() {
                return Err(Error::Invalid("no report files given".into()));
            }
            for f in files {
                for r in parse_report_csv(&fs::read_to_string(&f)?)? {
                    println!("{}", r.summary_line());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let Cli { command, config } = Cli::parse();
    let stage = command.stage();
    match run(command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.at(stage));
            ExitCode::FAILURE
        }
    }
}
