//! QUBO models: assembly from MI terms, energies, Ising form and the text format.
//!
//! Energy convention: `E(x) = offset + Σ_i diag_i x_i + Σ_{i<j} Q_ij x_i x_j`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mi::{ImportanceVector, RedundancyMatrix};

/// Upper-triangular QUBO with a constant offset. Zero couplings are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    pub n: usize,
    pub diag: Vec<f64>,
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

/// Symmetric neighbour lists of the coupling graph (CSR layout).
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub starts: Vec<usize>,
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Adjacency {
    #[inline]
    pub fn of(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.starts[i]..self.starts[i + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.starts[i + 1] - self.starts[i]
    }
}

impl QuboModel {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            diag: vec![0.0; n],
            couplings: BTreeMap::new(),
            offset: 0.0,
        }
    }

    pub fn add_linear(&mut self, i: usize, v: f64) {
        self.diag[i] += v;
    }

    /// Adds `v` to the `(i, j)` coefficient; `(j, i)` is the same entry and
    /// `i == j` goes to the diagonal.
    pub fn add_quadratic(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.diag[i] += v;
            return;
        }
        let key = (i.min(j), i.max(j));
        let entry = self.couplings.entry(key).or_insert(0.0);
        *entry += v;
        if *entry == 0.0 {
            self.couplings.remove(&key);
        }
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn num_couplings(&self) -> usize {
        self.couplings.len()
    }

    pub fn adjacency(&self) -> Adjacency {
        let mut degree = vec![0usize; self.n];
        for &(i, j) in self.couplings.keys() {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut starts = Vec::with_capacity(self.n + 1);
        starts.push(0);
        for d in &degree {
            starts.push(starts.last().unwrap() + d);
        }
        let total = *starts.last().unwrap();
        let mut fill = starts.clone();
        let mut neighbors = vec![0; total];
        let mut weights = vec![0.0; total];
        for (&(i, j), &v) in &self.couplings {
            neighbors[fill[i]] = j;
            weights[fill[i]] = v;
            fill[i] += 1;
            neighbors[fill[j]] = i;
            weights[fill[j]] = v;
            fill[j] += 1;
        }
        Adjacency {
            starts,
            neighbors,
            weights,
        }
    }

    /// Energy of assignment `x`.
    pub fn energy(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::consistency(format!(
                "assignment has {} bits, model has {} variables",
                x.len(),
                self.n
            )));
        }
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[bool]) -> f64 {
        let mut e = self.offset;
        for (i, &d) in self.diag.iter().enumerate() {
            if x[i] {
                e += d;
            }
        }
        for (&(i, j), &v) in &self.couplings {
            if x[i] && x[j] {
                e += v;
            }
        }
        e
    }

    /// `diag_i + Σ_j Q_ij x_j`; flipping bit `i` changes the energy by
    /// `(1 - 2 x_i)` times this value.
    pub fn local_fields(&self, adj: &Adjacency, x: &[bool]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.diag[i]
                    + adj
                        .of(i)
                        .filter(|&(j, _)| x[j])
                        .map(|(_, w)| w)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.offset.is_finite()
            && self.diag.iter().all(|v| v.is_finite())
            && self.couplings.values().all(|v| v.is_finite())
    }

    /// Adds the constraint's coefficients in place.
    pub fn apply_constraint(&mut self, constraint: &ConstraintKind) -> Result<()> {
        constraint.validate(self.n)?;
        match *constraint {
            ConstraintKind::None => {}
            ConstraintKind::Quadratic { alpha, k } => {
                let k = k as f64;
                for d in &mut self.diag {
                    *d += alpha * (1.0 - 2.0 * k);
                }
                for i in 0..self.n {
                    for j in i + 1..self.n {
                        self.add_quadratic(i, j, 2.0 * alpha);
                    }
                }
                self.offset += alpha * k * k;
            }
            ConstraintKind::LinearPenalty { alpha, .. } => {
                for d in &mut self.diag {
                    *d += alpha;
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "qubo {} {}", self.n, self.offset).unwrap();
        for (i, &d) in self.diag.iter().enumerate() {
            if d != 0.0 {
                writeln!(out, "d {i} {d}").unwrap();
            }
        }
        for (&(i, j), &v) in &self.couplings {
            writeln!(out, "c {i} {j} {v}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut model: Option<QuboModel> = None;
        let mut seen_diag = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::format(format!("line {}: {what}: {raw:?}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let Some(m) = model.as_mut() else {
                if fields.len() != 3 || fields[0] != "qubo" {
                    return Err(bad("expected header `qubo <n> <offset>`"));
                }
                let n: usize = fields[1].parse().map_err(|_| bad("bad variable count"))?;
                let offset = parse_float(fields[2]).ok_or_else(|| bad("bad offset"))?;
                let mut q = QuboModel::new(n);
                q.offset = offset;
                seen_diag = vec![false; n];
                model = Some(q);
                continue;
            };
            match (fields[0], fields.len()) {
                ("d", 3) => {
                    let i: usize = fields[1].parse().map_err(|_| bad("bad index"))?;
                    let v = parse_float(fields[2]).ok_or_else(|| bad("bad value"))?;
                    if i >= m.n {
                        return Err(bad("index out of range"));
                    }
                    if std::mem::replace(&mut seen_diag[i], true) {
                        return Err(bad("duplicate diagonal entry"));
                    }
                    m.diag[i] = v;
                }
                ("c", 4) => {
                    let i: usize = fields[1].parse().map_err(|_| bad("bad index"))?;
                    let j: usize = fields[2].parse().map_err(|_| bad("bad index"))?;
                    let v = parse_float(fields[3]).ok_or_else(|| bad("bad value"))?;
                    if i >= j || j >= m.n {
                        return Err(bad("coupling indices must satisfy i < j < n"));
                    }
                    if m.couplings.contains_key(&(i, j)) {
                        return Err(bad("duplicate coupling"));
                    }
                    if v != 0.0 {
                        m.couplings.insert((i, j), v);
                    }
                }
                _ => return Err(bad("unrecognized record")),
            }
        }
        model.ok_or_else(|| Error::format("missing `qubo` header"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

fn parse_float(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// How the k-of-n selection constraint enters the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    /// `alpha (Σx - k)^2`, fully connecting the graph.
    Quadratic {
        alpha: f64,
        k: usize,
    },
    /// `alpha` added to every diagonal entry; tuned so the minimizer has weight `k`.
    LinearPenalty {
        alpha: f64,
        k: usize,
    },
    None,
}

impl ConstraintKind {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            ConstraintKind::None => Ok(()),
            ConstraintKind::Quadratic { alpha, k } | ConstraintKind::LinearPenalty { alpha, k } => {
                if !(alpha >= 0.0 && alpha.is_finite()) {
                    return Err(Error::invalid(format!(
                        "constraint weight {alpha} must be finite and >= 0"
                    )));
                }
                if k > n {
                    return Err(Error::invalid(format!("k = {k} exceeds {n} variables")));
                }
                Ok(())
            }
        }
    }
}

/// `Q = -I + R + constraint`; the redundancy diagonal (entropies) is not used.
pub fn assemble(
    importance: &ImportanceVector,
    redundancy: &RedundancyMatrix,
    constraint: ConstraintKind,
) -> Result<QuboModel> {
    let n = importance.len();
    if redundancy.n != n {
        return Err(Error::consistency(format!(
            "importance has {n} features, redundancy {}",
            redundancy.n
        )));
    }
    let mut q = QuboModel::new(n);
    for (d, &v) in q.diag.iter_mut().zip(&importance.values) {
        *d = -v;
    }
    for i in 0..n {
        for j in i + 1..n {
            let r = redundancy.get(i, j);
            if r != 0.0 {
                q.couplings.insert((i, j), r);
            }
        }
    }
    q.apply_constraint(&constraint)?;
    Ok(q)
}

/// Spin model over `μ_i ∈ {-1/2, +1/2}`:
/// `H(μ) = offset + Σ h_i μ_i + Σ_{i<j} J_ij μ_i μ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub n: usize,
    pub h: Vec<f64>,
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn energy(&self, spins: &[f64]) -> Result<f64> {
        if spins.len() != self.n {
            return Err(Error::consistency(
                "spin vector length differs from model size",
            ));
        }
        let mut e = self.offset;
        for (h, s) in self.h.iter().zip(spins) {
            e += h * s;
        }
        for (&(a, b), &v) in &self.j {
            e += v * spins[a] * spins[b];
        }
        Ok(e)
    }

    /// Energy of the spin configuration matching bits `x` (`μ = x - 1/2`).
    pub fn energy_of_bits(&self, x: &[bool]) -> Result<f64> {
        let spins: Vec<f64> = x.iter().map(|&b| if b { 0.5 } else { -0.5 }).collect();
        self.energy(&spins)
    }
}

/// Substitutes `x_i = μ_i + 1/2`.
pub fn to_ising(q: &QuboModel) -> IsingModel {
    let mut h = q.diag.clone();
    let mut offset = q.offset + 0.5 * q.diag.iter().sum::<f64>();
    for (&(i, j), &v) in &q.couplings {
        h[i] += 0.5 * v;
        h[j] += 0.5 * v;
        offset += 0.25 * v;
    }
    IsingModel {
        n: q.n,
        h,
        j: q.couplings.clone(),
        offset,
    }
}
