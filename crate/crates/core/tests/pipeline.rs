use std::fs;
use std::path::{Path, PathBuf};

use mifs::harness::{
    load_data, parse_report_csv, plan_qubo, run_methods, run_pipeline, strip_timing,
    ExperimentConfig, Method, MiTables, CSV_HEADER,
};
use mifs::qubo::QuboModel;
use mifs::recon::{load_checkpoint, save_checkpoint};
use mifs::sparsify::SelectionMask;

fn small() -> ExperimentConfig {
    ExperimentConfig::parse(
        "synth_train = 150\n\
         synth_test = 50\n\
         synth_width = 8\n\
         synth_classes = 3\n\
         synth_informative = 10, 27, 45\n\
         k = 4\n\
         bins = 5\n\
         epochs = 2\n\
         batch_size = 25\n\
         keep = 20\n\
         reads = 30\n\
         sweeps = 60\n\
         repeats = 2\n\
         seed = 11\n",
    )
    .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mifs-pipeline-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

#[test]
fn five_repeats_give_five_rows_with_consecutive_seeds() {
    let mut cfg = small();
    cfg.method = Method::Random;
    cfg.repeats = 5;
    let report = run_pipeline(&cfg).unwrap();
    let seeds: Vec<u64> = report.runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![11, 12, 13, 14, 15]);
    let csv = report.to_csv();
    assert!(csv.starts_with(CSV_HEADER));
    assert_eq!(csv.lines().count(), 6);
    let back = parse_report_csv(&csv).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0].mses(), report.mses());
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn identical_config_reproduces_every_artifact() {
    let methods = [Method::Random, Method::FullQubo, Method::ReducedQubo];
    let dirs = [scratch("a"), scratch("b")];
    for dir in &dirs {
        let mut cfg = small();
        cfg.out_dir = Some(dir.clone());
        run_methods(&cfg, &methods).unwrap();
    }
    let [a, b] = &dirs;
    let csv = |d: &Path| String::from_utf8(read(d, "report.csv")).unwrap();
    assert_eq!(strip_timing(&csv(a)), strip_timing(&csv(b)));
    for m in methods {
        for seed in [11, 12] {
            for name in [
                format!("mask_{m}_seed{seed}.txt"),
                format!("checkpoint_{m}_seed{seed}.bin"),
                format!("checkpoint_{m}_seed{seed}.manifest"),
                format!("preview_{m}_seed{seed}.pgm"),
            ] {
                assert_eq!(read(a, &name), read(b, &name), "{name}");
            }
        }
    }
    for name in [
        "qubo_full-qubo.txt",
        "qubo_reduced-qubo.txt",
        "importance.csv",
    ] {
        assert_eq!(read(a, name), read(b, name), "{name}");
    }
    for d in &dirs {
        fs::remove_dir_all(d).unwrap();
    }
}

#[test]
fn written_artifacts_reload_and_resave_unchanged() {
    let dir = scratch("resave");
    let mut cfg = small();
    cfg.out_dir = Some(dir.clone());
    cfg.repeats = 1;
    run_methods(&cfg, &[Method::FullQubo]).unwrap();

    let qubo_path = dir.join("qubo_full-qubo.txt");
    let q = QuboModel::load(&qubo_path).unwrap();
    q.save(dir.join("again.txt")).unwrap();
    assert_eq!(read(&dir, "again.txt"), read(&dir, "qubo_full-qubo.txt"));

    let mask = SelectionMask::load(dir.join("mask_full-qubo_seed11.txt")).unwrap();
    assert_eq!(mask.len(), 4);
    mask.save(dir.join("again_mask.txt")).unwrap();
    assert_eq!(
        read(&dir, "again_mask.txt"),
        read(&dir, "mask_full-qubo_seed11.txt")
    );

    let model = load_checkpoint(dir.join("checkpoint_full-qubo_seed11")).unwrap();
    save_checkpoint(&model, dir.join("again_ckpt")).unwrap();
    assert_eq!(
        read(&dir, "again_ckpt.bin"),
        read(&dir, "checkpoint_full-qubo_seed11.bin")
    );

    let saved = ExperimentConfig::load(dir.join("config.txt")).unwrap();
    assert_eq!(saved, cfg);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn reduced_plan_on_28_pixel_images_has_196_variables_and_keep_couplings() {
    let cfg = ExperimentConfig::parse(
        "synth_train = 200\nsynth_test = 10\nsynth_width = 28\nsynth_informative = 100, 300, 500\nbins = 4\n",
    )
    .unwrap();
    let splits = load_data(&cfg).unwrap();
    let mi = MiTables::compute(&splits.train, cfg.bins).unwrap();
    let plan = plan_qubo(&cfg, Method::ReducedQubo, &mi, 28).unwrap();
    assert_eq!(plan.positions.len(), 196);
    assert_eq!(plan.base.n, 196);
    assert_eq!(plan.base.num_couplings(), 2000);
    assert_eq!(plan.degrees.num_couplings, 2000);
    assert!(plan.constrained.is_none());

    let full = plan_qubo(&cfg, Method::FullQubo, &mi, 28).unwrap();
    assert_eq!(full.base.n, 784);
    assert!(full.alpha.unwrap() > 0.0);
}

#[test]
fn errors_carry_the_stage_they_came_from() {
    let mut cfg = small();
    cfg.synth_train = None;
    assert!(run_pipeline(&cfg).unwrap_err().stage().is_some());

    let mut cfg = small();
    cfg.k = 0;
    assert_eq!(run_pipeline(&cfg).unwrap_err().stage(), Some("config"));

    assert!(run_methods(&small(), &[]).is_err());
}

#[test]
fn config_text_round_trips() {
    let mut cfg = small();
    cfg.alpha = Some(0.1 + 0.2);
    cfg.out_dir = Some("/tmp/somewhere".into());
    let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_text(), cfg.to_text());
    assert!(ExperimentConfig::parse("k = 3\nnot_a_key = 1\n").is_err());
    assert!(ExperimentConfig::parse("k = three\n").is_err());
}
