use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::SynthSpec;

/// Pixel-selection strategy compared by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Random,
    Grid,
    FullQubo,
    ReducedQubo,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Random,
        Method::Grid,
        Method::FullQubo,
        Method::ReducedQubo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Grid => "grid",
            Method::FullQubo => "full-qubo",
            Method::ReducedQubo => "reduced-qubo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method {s:?} (random, grid, full-qubo, reduced-qubo)"
                ))
            })
    }
}

/// How the k-of-n requirement enters a QUBO.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintChoice {
    Quadratic,
    Linear,
}

impl ConstraintChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintChoice::Quadratic => "quadratic",
            ConstraintChoice::Linear => "linear",
        }
    }
}

impl FromStr for ConstraintChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(ConstraintChoice::Quadratic),
            "linear" => Ok(ConstraintChoice::Linear),
            _ => Err(Error::invalid(format!(
                "unknown constraint {s:?} (quadratic, linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Exhaustive,
    Anneal,
    Tabu,
    Partitioned,
}

impl SolverChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverChoice::Exhaustive => "exhaustive",
            SolverChoice::Anneal => "anneal",
            SolverChoice::Tabu => "tabu",
            SolverChoice::Partitioned => "partitioned",
        }
    }
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(SolverChoice::Exhaustive),
            "anneal" => Ok(SolverChoice::Anneal),
            "tabu" => Ok(SolverChoice::Tabu),
            "partitioned" => Ok(SolverChoice::Partitioned),
            _ => Err(Error::invalid(format!(
                "unknown solver {s:?} (exhaustive, anneal, tabu, partitioned)"
            ))),
        }
    }
}

/// Where the images come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    /// One synthetic draw of `train + test` samples; the first `train` form the training split.
    Synth { spec: SynthSpec, train: usize },
}

/// Everything an experiment run needs. Built from defaults, then overridden
/// key by key from a `key = value` file and/or command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// Keep only the first N training / test samples.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,

    pub synth_train: Option<usize>,
    pub synth_test: usize,
    pub synth_width: usize,
    pub synth_classes: usize,
    pub synth_informative: Vec<usize>,
    pub synth_noise: f64,
    pub synth_seed: u64,

    pub bins: usize,
    pub k: usize,
    pub method: Method,
    pub constraint: ConstraintChoice,
    /// Quadratic penalty weight; derived from the model when unset.
    pub alpha: Option<f64>,
    /// Upper end of the linear-penalty bisection; derived from the model when unset.
    pub alpha_max: Option<f64>,
    pub tune_steps: usize,
    pub keep: usize,
    /// Solver for the QUBO methods; `None` picks partitioned for full-qubo and anneal for reduced-qubo.
    pub solver: Option<SolverChoice>,
    pub reads: usize,
    pub sweeps: usize,
    pub subproblem_size: usize,
    pub max_passes: usize,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,

    pub repeats: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            train_limit: None,
            test_limit: None,
            synth_train: None,
            synth_test: 200,
            synth_width: 8,
            synth_classes: 2,
            synth_informative: Vec::new(),
            synth_noise: 0.1,
            synth_seed: 0,
            bins: 20,
            k: 25,
            method: Method::FullQubo,
            constraint: ConstraintChoice::Quadratic,
            alpha: None,
            alpha_max: None,
            tune_steps: 30,
            keep: 2000,
            solver: None,
            reads: 1000,
            sweeps: 1000,
            subproblem_size: 20,
            max_passes: 50,
            epochs: 20,
            batch_size: 128,
            learning_rate: 1e-3,
            repeats: 5,
            seed: 0,
            out_dir: None,
        }
    }
}

/// Every recognized key, in the order [`ExperimentConfig::to_text`] writes them.
pub const CONFIG_KEYS: &[&str] = &[
    "train_images",
    "train_labels",
    "test_images",
    "test_labels",
    "train_limit",
    "test_limit",
    "synth_train",
    "synth_test",
    "synth_width",
    "synth_classes",
    "synth_informative",
    "synth_noise",
    "synth_seed",
    "bins",
    "k",
    "method",
    "constraint",
    "alpha",
    "alpha_max",
    "tune_steps",
    "keep",
    "solver",
    "reads",
    "sweeps",
    "subproblem_size",
    "max_passes",
    "epochs",
    "batch_size",
    "learning_rate",
    "repeats",
    "seed",
    "out_dir",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("{key}: cannot parse {value:?}")))
}

fn list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn path(v: &Option<PathBuf>) -> String {
    v.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl ExperimentConfig {
    /// Overrides one key. An empty value resets optional keys to unset.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let some_path = || (!value.is_empty()).then(|| PathBuf::from(value));
        macro_rules! some_num {
            () => {
                if value.is_empty() {
                    None
                } else {
                    Some(num(key, value)?)
                }
            };
        }
        match key {
            "train_images" => self.train_images = some_path(),
            "train_labels" => self.train_labels = some_path(),
            "test_images" => self.test_images = some_path(),
            "test_labels" => self.test_labels = some_path(),
            "train_limit" => self.train_limit = some_num!(),
            "test_limit" => self.test_limit = some_num!(),
            "synth_train" => self.synth_train = some_num!(),
            "synth_test" => self.synth_test = num(key, value)?,
            "synth_width" => self.synth_width = num(key, value)?,
            "synth_classes" => self.synth_classes = num(key, value)?,
            "synth_informative" => self.synth_informative = list(key, value)?,
            "synth_noise" => self.synth_noise = num(key, value)?,
            "synth_seed" => self.synth_seed = num(key, value)?,
            "bins" => self.bins = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "method" => self.method = value.parse()?,
            "constraint" => self.constraint = value.parse()?,
            "alpha" => self.alpha = some_num!(),
            "alpha_max" => self.alpha_max = some_num!(),
            "tune_steps" => self.tune_steps = num(key, value)?,
            "keep" => self.keep = num(key, value)?,
            "solver" => {
                self.solver = if value.is_empty() || value == "auto" {
                    None
                } else {
                    Some(value.parse()?)
                }
            }
            "reads" => self.reads = num(key, value)?,
            "sweeps" => self.sweeps = num(key, value)?,
            "subproblem_size" => self.subproblem_size = num(key, value)?,
            "max_passes" => self.max_passes = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "repeats" => self.repeats = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out_dir" => self.out_dir = some_path(),
            _ => return Err(Error::invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text on top of `self`. Blank lines and
    /// `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::format(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "train_images" => path(&self.train_images),
            "train_labels" => path(&self.train_labels),
            "test_images" => path(&self.test_images),
            "test_labels" => path(&self.test_labels),
            "train_limit" => opt(&self.train_limit),
            "test_limit" => opt(&self.test_limit),
            "synth_train" => opt(&self.synth_train),
            "synth_test" => self.synth_test.to_string(),
            "synth_width" => self.synth_width.to_string(),
            "synth_classes" => self.synth_classes.to_string(),
            "synth_informative" => self
                .synth_informative
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
            "synth_noise" => self.synth_noise.to_string(),
            "synth_seed" => self.synth_seed.to_string(),
            "bins" => self.bins.to_string(),
            "k" => self.k.to_string(),
            "method" => self.method.to_string(),
            "constraint" => self.constraint.as_str().to_string(),
            "alpha" => opt(&self.alpha),
            "alpha_max" => opt(&self.alpha_max),
            "tune_steps" => self.tune_steps.to_string(),
            "keep" => self.keep.to_string(),
            "solver" => self.solver.map_or("auto", SolverChoice::as_str).to_string(),
            "reads" => self.reads.to_string(),
            "sweeps" => self.sweeps.to_string(),
            "subproblem_size" => self.subproblem_size.to_string(),
            "max_passes" => self.max_passes.to_string(),
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "repeats" => self.repeats.to_string(),
            "seed" => self.seed.to_string(),
            "out_dir" => path(&self.out_dir),
            _ => return None,
        })
    }

    /// Round-trips through [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn data_source(&self) -> Result<DataSource> {
        let idx = [
            &self.train_images,
            &self.train_labels,
            &self.test_images,
            &self.test_labels,
        ];
        if idx.iter().any(|p| p.is_some()) {
            match idx {
                [Some(a), Some(b), Some(c), Some(d)] => {
                    return Ok(DataSource::Idx {
                        train_images: a.clone(),
                        train_labels: b.clone(),
                        test_images: c.clone(),
                        test_labels: d.clone(),
                    })
                }
                _ => {
                    return Err(Error::invalid(
                        "train_images, train_labels, test_images and test_labels must be given together",
                    ))
                }
            }
        }
        let train = self
            .synth_train
            .ok_or_else(|| Error::invalid("no data source: set the IDX paths or synth_train"))?;
        let spec = SynthSpec {
            num_samples: train + self.synth_test,
            width: self.synth_width,
            num_classes: self.synth_classes,
            informative_pixels: self.synth_informative.clone(),
            noise_std: self.synth_noise,
            seed: self.synth_seed,
        };
        spec.validate()?;
        Ok(DataSource::Synth { spec, train })
    }

    pub fn validate(&self) -> Result<()> {
        self.data_source()?;
        if !(2..=256).contains(&self.bins) {
            return Err(Error::invalid(format!(
                "bins must be in 2..=256, got {}",
                self.bins
            )));
        }
        let positive = [
            ("k", self.k),
            ("repeats", self.repeats),
            ("reads", self.reads),
            ("sweeps", self.sweeps),
            ("subproblem_size", self.subproblem_size),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = positive.iter().find(|p| p.1 == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        for (name, v) in [("alpha", self.alpha), ("alpha_max", self.alpha_max)] {
            if v.is_some_and(|a| !(a >= 0.0 && a.is_finite())) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = ExperimentConfig::default();
        assert_eq!(
            (c.bins, c.k, c.keep, c.reads, c.repeats),
            (20, 25, 2000, 1000, 5)
        );
    }

    #[test]
    fn text_round_trip() {
        let mut c = ExperimentConfig::default();
        c.apply_text(
            "# demo\nsynth_train = 300\nsynth_informative = 1, 5,9\nmethod = reduced-qubo\nalpha = 0.25\nout_dir = /tmp/x\n",
        )
        .unwrap();
        assert_eq!(c.synth_informative, vec![1, 5, 9]);
        assert_eq!(c.method, Method::ReducedQubo);
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("method = best").is_err());
        assert!(ExperimentConfig::parse("k = -1").is_err());
        assert!(ExperimentConfig::parse("just text").is_err());
    }

    #[test]
    fn data_source_resolution() {
        let c = ExperimentConfig::default();
        assert!(c.data_source().is_err());
        let c = ExperimentConfig::parse("train_images = a").unwrap();
        assert!(c.data_source().is_err());
        let c = ExperimentConfig::parse("synth_train = 10\nsynth_test = 5").unwrap();
        match c.data_source().unwrap() {
            DataSource::Synth { spec, train } => assert_eq!((spec.num_samples, train), (15, 10)),
            other => panic!("{other:?}"),
        }
    }
}
