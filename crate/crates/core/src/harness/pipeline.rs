//! End-to-end experiment: load → bin → MI → select → repair → train → evaluate.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{ConstraintChoice, DataSource, ExperimentConfig, Method, SolverChoice};
use super::report::{reports_to_csv, MetricsReport, RunRecord};
use crate::error::{Error, Result, StageExt};
use crate::ingest::{load_idx, quantile_bins, synth, ImageDataset};
use crate::mi::{importance, redundancy, ImportanceVector, RedundancyMatrix};
use crate::qubo::{assemble, ConstraintKind, QuboModel};
use crate::recon::{
    eval_mse, grid_mask, random_mask, save_checkpoint, tile_row, train_decoder, write_pgm,
    TrainConfig,
};
use crate::solve::{
    repair_weight, tune_linear_penalty, AnnealParams, PartitionParams, SampleSet, Solver,
    TabuParams, TuneOptions,
};
use crate::sparsify::{
    degree_report, restrict, subsample_2x2, threshold_couplings, DegreeReport, SelectionMask,
};

/// Train and test splits of an experiment.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: ImageDataset,
    pub test: ImageDataset,
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<Splits> {
    let (train, test) = match cfg.data_source()? {
        DataSource::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => (
            load_idx(train_images, train_labels)?,
            load_idx(test_images, test_labels)?,
        ),
        DataSource::Synth { spec, train } => synth(&spec)?.split(train)?,
    };
    if train.width != test.width {
        return Err(Error::consistency(format!(
            "train images are {0}x{0}, test images {1}x{1}",
            train.width, test.width
        )));
    }
    let train = cfg.train_limit.map_or(train.clone(), |n| train.take(n));
    let test = cfg.test_limit.map_or(test.clone(), |n| test.take(n));
    Ok(Splits { train, test })
}

/// Importance and redundancy of the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct MiTables {
    pub importance: ImportanceVector,
    pub redundancy: RedundancyMatrix,
}

impl MiTables {
    /// Bins with training-split edges and estimates every MI term.
    pub fn compute(train: &ImageDataset, bins: usize) -> Result<Self> {
        let dd = quantile_bins(train, bins).stage("bin")?;
        Ok(Self {
            importance: importance(&dd),
            redundancy: redundancy(&dd),
        })
    }

    /// Plain text: `mi n`, the importance values on one line, then one
    /// redundancy row per line. Values use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let n = self.importance.len();
        let mut out = format!("mi {n}\n{}\n", join(&self.importance.values));
        for i in 0..n {
            out.push_str(&join(self.redundancy.row(i)));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .and_then(|h| h.strip_prefix("mi "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::format("MI file must start with `mi <n>`"))?;
        let mut row = |what: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::format(format!("MI file ends before {what}")))?;
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format(format!("{what}: {e}")))?;
            if vals.len() != n {
                return Err(Error::format(format!(
                    "{what} has {} values, expected {n}",
                    vals.len()
                )));
            }
            Ok(vals)
        };
        let imp = row("importance")?;
        let mut red = RedundancyMatrix::zeros(n);
        for i in 0..n {
            let r = row(&format!("redundancy row {i}"))?;
            red.values[i * n..(i + 1) * n].copy_from_slice(&r);
        }
        Ok(Self {
            importance: ImportanceVector { values: imp },
            redundancy: red,
        })
    }

    pub fn importance_csv(&self) -> String {
        let mut out = String::from("feature,importance\n");
        for (i, v) in self.importance.values.iter().enumerate() {
            out.push_str(&format!("{i},{v:?}\n"));
        }
        out
    }
}

/// Quadratic penalty weight used when none is configured: the largest
/// importance plus the largest redundancy row sum.
pub fn default_alpha(mi: &MiTables) -> f64 {
    let top = mi.importance.values.iter().fold(0.0f64, |m, &v| m.max(v));
    top + mi.redundancy.max_offdiag_row_sum()
}

/// Solver for `method` with the repeat's seed.
pub fn build_solver(cfg: &ExperimentConfig, method: Method, n: usize, seed: u64) -> Solver {
    let choice = cfg.solver.unwrap_or(match method {
        Method::ReducedQubo => SolverChoice::Anneal,
        _ => SolverChoice::Partitioned,
    });
    match choice {
        SolverChoice::Exhaustive => Solver::Exhaustive,
        SolverChoice::Anneal => Solver::Anneal(AnnealParams {
            reads: cfg.reads,
            sweeps: cfg.sweeps,
            seed,
            ..Default::default()
        }),
        SolverChoice::Tabu => Solver::Tabu(TabuParams::for_size(n, seed)),
        SolverChoice::Partitioned => Solver::Partitioned(PartitionParams {
            subproblem_size: cfg.subproblem_size,
            seed,
            max_passes: cfg.max_passes,
            ..Default::default()
        }),
    }
}

/// Seed-independent part of a QUBO selection.
#[derive(Debug, Clone)]
pub struct QuboPlan {
    /// Unconstrained model the repair step scores against.
    pub base: QuboModel,
    /// Model handed to the solver when the penalty is fixed in advance.
    pub constrained: Option<QuboModel>,
    /// Pixels the QUBO variables stand for.
    pub positions: SelectionMask,
    /// Quadratic penalty weight baked into `constrained`.
    pub alpha: Option<f64>,
    pub degrees: DegreeReport,
}

pub fn plan_qubo(
    cfg: &ExperimentConfig,
    method: Method,
    mi: &MiTables,
    width: usize,
) -> Result<QuboPlan> {
    match method {
        Method::FullQubo => {
            let base =
                assemble(&mi.importance, &mi.redundancy, ConstraintKind::None).stage("qubo")?;
            let (constrained, alpha) = match cfg.constraint {
                ConstraintChoice::Quadratic => {
                    let alpha = cfg.alpha.unwrap_or_else(|| default_alpha(mi));
                    let mut q = base.clone();
                    q.apply_constraint(&ConstraintKind::Quadratic { alpha, k: cfg.k })
                        .stage("qubo")?;
                    (Some(q), Some(alpha))
                }
                ConstraintChoice::Linear => (None, None),
            };
            let degrees = degree_report(constrained.as_ref().unwrap_or(&base));
            Ok(QuboPlan {
                positions: SelectionMask::identity(base.n),
                base,
                constrained,
                alpha,
                degrees,
            })
        }
        Method::ReducedQubo => {
            let positions = subsample_2x2(&mi.importance, width).stage("sparsify")?;
            let (imp, red) =
                restrict(&mi.importance, &mi.redundancy, &positions).stage("sparsify")?;
            let full = assemble(&imp, &red, ConstraintKind::None).stage("qubo")?;
            let base = threshold_couplings(&full, cfg.keep);
            let degrees = degree_report(&base);
            Ok(QuboPlan {
                base,
                constrained: None,
                positions,
                alpha: None,
                degrees,
            })
        }
        Method::Random | Method::Grid => {
            Err(Error::invalid(format!("{method} does not build a QUBO")))
        }
    }
}

/// A chosen mask with the details of how it was found.
#[derive(Debug, Clone)]
pub struct Selection {
    pub mask: SelectionMask,
    /// Model whose samples produced the mask (penalty included).
    pub solved_model: Option<QuboModel>,
    pub samples: Option<SampleSet>,
    pub alpha: Option<f64>,
    /// Hamming weight of the best sample before repair.
    pub raw_weight: Option<usize>,
    pub solve_time_s: f64,
}

/// Solves a planned QUBO for one seed and repairs the result to exactly `k` pixels.
pub fn solve_plan(
    cfg: &ExperimentConfig,
    method: Method,
    plan: &QuboPlan,
    seed: u64,
) -> Result<Selection> {
    let solver = build_solver(cfg, method, plan.base.n, seed);
    let start = Instant::now();
    let (model, samples, alpha) = match &plan.constrained {
        Some(q) => {
            let set = solver.solve(q).stage("solve")?;
            (q.clone(), set, plan.alpha)
        }
        None => {
            let opts = TuneOptions {
                max_steps: cfg.tune_steps,
                alpha_max: cfg.alpha_max,
            };
            let tuned = tune_linear_penalty(&plan.base, cfg.k, &solver, &opts).stage("tune")?;
            let mut q = plan.base.clone();
            q.apply_constraint(&ConstraintKind::LinearPenalty {
                alpha: tuned.alpha,
                k: cfg.k,
            })
            .stage("tune")?;
            (q, tuned.samples, Some(tuned.alpha))
        }
    };
    let solve_time_s = start.elapsed().as_secs_f64();
    let best = samples.best().stage("solve")?;
    let raw_weight = best.weight();
    let bits = repair_weight(&plan.base, &best.x, cfg.k).stage("repair")?;
    let mask = plan
        .positions
        .select(&bits, method.as_str())
        .stage("repair")?;
    Ok(Selection {
        mask,
        solved_model: Some(model),
        samples: Some(samples),
        alpha,
        raw_weight: Some(raw_weight),
        solve_time_s,
    })
}

/// Mask for one repeat. `plan` is required for the QUBO methods.
pub fn select_mask(
    cfg: &ExperimentConfig,
    method: Method,
    width: usize,
    plan: Option<&QuboPlan>,
    seed: u64,
) -> Result<Selection> {
    let baseline = |mask: SelectionMask| Selection {
        mask,
        solved_model: None,
        samples: None,
        alpha: None,
        raw_weight: None,
        solve_time_s: 0.0,
    };
    match method {
        Method::Random => Ok(baseline(
            random_mask(width * width, cfg.k, seed).stage("select")?,
        )),
        Method::Grid => Ok(baseline(grid_mask(width, cfg.k).stage("select")?)),
        Method::FullQubo | Method::ReducedQubo => {
            let plan = plan.ok_or_else(|| {
                Error::invalid(format!("{method} needs a QUBO plan")).at("select")
            })?;
            solve_plan(cfg, method, plan, seed)
        }
    }
}

fn train_config(cfg: &ExperimentConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed,
        ..Default::default()
    }
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::from).stage("write")
}

/// Originals on the top row, reconstructions below, for up to 8 test images.
fn write_preview(
    path: &Path,
    model: &crate::recon::DecoderModel<f32>,
    test: &ImageDataset,
    mask: &SelectionMask,
) -> Result<()> {
    let shown = test.take(8);
    let side = shown.width;
    let recon = model.predict(&shown.gather(&mask.indices), shown.num_samples);
    let originals: Vec<&[f32]> = (0..shown.num_samples).map(|s| shown.sample(s)).collect();
    let rebuilt: Vec<&[f32]> = recon.chunks(side * side).collect();
    let mut pixels = tile_row(&originals, side);
    pixels.extend(tile_row(&rebuilt, side));
    write_pgm(path, side * shown.num_samples, 2 * side, &pixels).stage("write")
}

/// Runs every method in `methods` on the same data and MI tables. With an
/// output directory, writes `report.csv`, `summary.txt`, `config.txt`, per-run
/// masks, checkpoints and previews, and one QUBO dump per QUBO method.
pub fn run_methods(cfg: &ExperimentConfig, methods: &[Method]) -> Result<Vec<MetricsReport>> {
    cfg.validate().stage("config")?;
    if methods.is_empty() {
        return Err(Error::invalid("no methods to run").at("config"));
    }
    let out = cfg.out_dir.clone();
    if let Some(dir) = &out {
        fs::create_dir_all(dir)
            .map_err(Error::from)
            .stage("write")?;
        write(dir.join("config.txt"), &cfg.to_text())?;
    }

    let setup = Instant::now();
    let splits = load_data(cfg).stage("ingest")?;
    let width = splits.train.width;
    let needs_mi = methods
        .iter()
        .any(|m| matches!(m, Method::FullQubo | Method::ReducedQubo));
    let mi = if needs_mi {
        Some(MiTables::compute(&splits.train, cfg.bins).stage("mi")?)
    } else {
        None
    };
    let shared_overhead = setup.elapsed().as_secs_f64();

    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let build = Instant::now();
        let plan = match (&mi, method) {
            (Some(mi), Method::FullQubo | Method::ReducedQubo) => {
                Some(plan_qubo(cfg, method, mi, width)?)
            }
            _ => None,
        };
        let overhead_s = shared_overhead + build.elapsed().as_secs_f64();

        let mut runs = Vec::with_capacity(cfg.repeats);
        for r in 0..cfg.repeats {
            let seed = cfg.seed.wrapping_add(r as u64);
            let start = Instant::now();
            let selection = select_mask(cfg, method, width, plan.as_ref(), seed)?;
            if selection.mask.len() != cfg.k {
                return Err(Error::consistency(format!(
                    "{method} selected {} pixels instead of {}",
                    selection.mask.len(),
                    cfg.k
                ))
                .at("select"));
            }
            let trained = train_decoder(&splits.train, &selection.mask, &train_config(cfg, seed))
                .stage("train")?;
            let test_mse = eval_mse(&trained.model, &splits.test, &selection.mask).stage("eval")?;
            let wall_time_s = start.elapsed().as_secs_f64();

            if let Some(dir) = &out {
                let tag = format!("{method}_seed{seed}");
                selection
                    .mask
                    .save(dir.join(format!("mask_{tag}.txt")))
                    .stage("write")?;
                save_checkpoint(&trained.model, dir.join(format!("checkpoint_{tag}")))
                    .stage("write")?;
                write_preview(
                    &dir.join(format!("preview_{tag}.pgm")),
                    &trained.model,
                    &splits.test,
                    &selection.mask,
                )?;
                if r == 0 {
                    if let (Some(q), Some(plan)) = (&selection.solved_model, &plan) {
                        q.save(dir.join(format!("qubo_{method}.txt")))
                            .stage("write")?;
                        write(
                            dir.join(format!("degrees_{method}.txt")),
                            &plan.degrees.to_string(),
                        )?;
                    }
                }
            }
            runs.push(RunRecord {
                seed,
                test_mse,
                wall_time_s,
                solve_time_s: selection.solve_time_s,
            });
        }
        reports.push(MetricsReport {
            method: method.to_string(),
            runs,
            overhead_s,
        });
    }

    if let Some(dir) = &out {
        write(dir.join("report.csv"), &reports_to_csv(&reports))?;
        let summary: String = reports.iter().map(MetricsReport::summary).collect();
        write(dir.join("summary.txt"), &summary)?;
        if let Some(mi) = &mi {
            write(dir.join("importance.csv"), &mi.importance_csv())?;
        }
    }
    Ok(reports)
}

/// Runs the configured method.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    Ok(run_methods(cfg, &[cfg.method])?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth_cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::parse(
            "synth_train = 120\nsynth_test = 40\nsynth_width = 8\nsynth_informative = 9,18,27,36\n\
             k = 4\nbins = 4\nepochs = 2\nbatch_size = 32\nrepeats = 2\nkeep = 30\nreads = 20\nsweeps = 50\n",
        )
        .unwrap();
        c.seed = 7;
        c
    }

    #[test]
    fn mi_text_round_trip() {
        let cfg = synth_cfg();
        let splits = load_data(&cfg).unwrap();
        let mi = MiTables::compute(&splits.train, 4).unwrap();
        assert_eq!(MiTables::parse(&mi.to_text()).unwrap(), mi);
        assert!(MiTables::parse("mi 2\n0.1\n").is_err());
    }

    #[test]
    fn every_method_yields_k_pixels() {
        let cfg = synth_cfg();
        let reports = run_methods(&cfg, &Method::ALL).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert_eq!(r.repeats(), 2);
            assert_eq!(r.runs[1].seed, 8);
            assert!(r.runs.iter().all(|run| run.test_mse.is_finite()));
        }
    }

    #[test]
    fn stage_tag_on_bad_data() {
        let mut cfg = synth_cfg();
        cfg.train_images = Some("/nonexistent/a".into());
        cfg.train_labels = Some("/nonexistent/b".into());
        cfg.test_images = Some("/nonexistent/c".into());
        cfg.test_labels = Some("/nonexistent/d".into());
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.stage(), Some("ingest"));
    }

    #[test]
    fn grid_needs_square_k() {
        let mut cfg = synth_cfg();
        cfg.k = 5;
        cfg.method = Method::Grid;
        assert_eq!(run_pipeline(&cfg).unwrap_err().stage(), Some("select"));
    }
}
