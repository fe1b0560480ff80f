//! Minimizers for [`QuboModel`]s and the selection-specific helpers built on them.

mod anneal;
mod exhaustive;
mod partition;
mod repair;
mod tabu;
mod tune;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use anneal::{simulated_anneal, AnnealParams};
pub use exhaustive::{exhaustive, EXHAUSTIVE_MAX_VARS};
pub use partition::{partitioned_solve, PartitionParams};
pub use repair::repair_weight;
pub use tabu::{tabu, TabuParams};
pub use tune::{alpha_max, tune_alpha, tune_linear_penalty, TuneOptions, TuneResult};

use crate::error::{Error, Result};
use crate::qubo::QuboModel;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub x: Vec<bool>,
    pub energy: f64,
    pub occurrences: usize,
}

impl SampleRecord {
    pub fn weight(&self) -> usize {
        hamming_weight(&self.x)
    }
}

/// Solver outcomes, sorted by energy (ties by bit-vector order) with
/// duplicates merged into occurrence counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub records: Vec<SampleRecord>,
    pub solver: String,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

impl SampleSet {
    /// Aggregates raw samples. Energies are evaluated from scratch on `q`.
    pub fn from_samples<I>(q: &QuboModel, samples: I, solver: &str, seed: u64) -> Self
    where
        I: IntoIterator<Item = Vec<bool>>,
    {
        let mut counts: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        for x in samples {
            *counts.entry(x).or_insert(0) += 1;
        }
        let mut records: Vec<SampleRecord> = counts
            .into_iter()
            .map(|(x, occurrences)| SampleRecord {
                energy: q.energy_unchecked(&x),
                x,
                occurrences,
            })
            .collect();
        records.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.x.cmp(&b.x)));
        Self {
            records,
            solver: solver.to_string(),
            seed,
            params: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn total_occurrences(&self) -> usize {
        self.records.iter().map(|r| r.occurrences).sum()
    }

    /// Lowest-energy record.
    pub fn best(&self) -> Result<&SampleRecord> {
        self.records
            .first()
            .ok_or_else(|| Error::Empty("sample set has no records".into()))
    }

    /// `energy,occurrences,bitstring` rows; bit 0 is the first character.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy,occurrences,bitstring\n");
        for r in &self.records {
            let bits: String = r.x.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(out, "{},{},{}", r.energy, r.occurrences, bits).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str, solver: &str, seed: u64) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("energy,occurrences,bitstring") {
            return Err(Error::format("missing sampleset CSV header"));
        }
        let mut records = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let bad = || Error::format(format!("bad sampleset row {line:?}"));
            let mut parts = line.trim().split(',');
            let energy = parts
                .next()
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(bad)?;
            let occurrences = parts
                .next()
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(bad)?;
            let bits = parts.next().ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            let x = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(bad()),
                })
                .collect::<Result<Vec<bool>>>()?;
            records.push(SampleRecord {
                x,
                energy,
                occurrences,
            });
        }
        Ok(Self {
            records,
            solver: solver.to_string(),
            seed,
            params: Vec::new(),
        })
    }
}

/// Lowest-energy solution and its energy.
pub fn best(samples: &SampleSet) -> Result<(&[bool], f64)> {
    samples.best().map(|r| (r.x.as_slice(), r.energy))
}

pub fn hamming_weight(x: &[bool]) -> usize {
    x.iter().filter(|&&b| b).count()
}

/// Solver choice with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Solver {
    Exhaustive,
    Anneal(AnnealParams),
    Tabu(TabuParams),
    Partitioned(PartitionParams),
}

impl Solver {
    pub fn solve(&self, q: &QuboModel) -> Result<SampleSet> {
        match self {
            Solver::Exhaustive => exhaustive(q),
            Solver::Anneal(p) => simulated_anneal(q, p),
            Solver::Tabu(p) => tabu(q, p),
            Solver::Partitioned(p) => partitioned_solve(q, p),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Solver::Exhaustive => "exhaustive",
            Solver::Anneal(_) => "anneal",
            Solver::Tabu(_) => "tabu",
            Solver::Partitioned(_) => "partitioned",
        }
    }

    /// Same solver with a different seed (the exhaustive oracle has none).
    pub fn reseeded(&self, seed: u64) -> Solver {
        let mut s = self.clone();
        match &mut s {
            Solver::Exhaustive => {}
            Solver::Anneal(p) => p.seed = seed,
            Solver::Tabu(p) => p.seed = seed,
            Solver::Partitioned(p) => p.seed = seed,
        }
        s
    }
}

/// Incrementally maintained assignment: bits, local fields and energy.
pub(crate) struct FlipState<'a> {
    pub adj: &'a crate::qubo::Adjacency,
    pub x: Vec<bool>,
    pub fields: Vec<f64>,
    pub energy: f64,
}

impl<'a> FlipState<'a> {
    pub fn new(q: &QuboModel, adj: &'a crate::qubo::Adjacency, x: Vec<bool>) -> Self {
        let fields = q.local_fields(adj, &x);
        let energy = q.energy_unchecked(&x);
        Self {
            adj,
            x,
            fields,
            energy,
        }
    }

    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        if self.x[i] {
            -self.fields[i]
        } else {
            self.fields[i]
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.energy += self.delta(i);
        self.x[i] = !self.x[i];
        let sign = if self.x[i] { 1.0 } else { -1.0 };
        for (j, w) in self.adj.of(i) {
            self.fields[j] += sign * w;
        }
    }
}

/// Magnitude bound on any energy of `q`, used to scale tolerances.
pub(crate) fn energy_scale(q: &QuboModel) -> f64 {
    1.0 + q.offset.abs()
        + q.diag.iter().map(|v| v.abs()).sum::<f64>()
        + q.couplings.values().map(|v| v.abs()).sum::<f64>()
}
