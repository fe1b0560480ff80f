//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerics.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use mifs::ingest::{load_idx, DiscretizedDataset, ImageDataset};
use mifs::qubo::QuboModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// MI in nats from a table of probabilities indexed `[a][b]`, via
/// `Σ p(a,b) ln(p(a,b) / (p(a) p(b)))`.
pub fn mi_from_table(p: &[Vec<f64>]) -> f64 {
    let pa: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let cols = p.first().map_or(0, Vec::len);
    let pb: Vec<f64> = (0..cols).map(|b| p.iter().map(|r| r[b]).sum()).collect();
    let mut mi = 0.0;
    for (a, row) in p.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            if v > 0.0 {
                mi += v * (v / (pa[a] * pb[b])).ln();
            }
        }
    }
    mi
}

pub fn entropy_of(column: &[u8]) -> f64 {
    let mut counts: HashMap<u8, usize> = HashMap::new();
    for &v in column {
        *counts.entry(v).or_default() += 1;
    }
    let n = column.len() as f64;
    -counts
        .values()
        .map(|&c| c as f64 / n * (c as f64 / n).ln())
        .sum::<f64>()
}

/// Empirical distribution over whole rows `(b_0, …, b_{n-1}, y)`.
pub struct FullJoint {
    pub n: usize,
    pub rows: HashMap<(Vec<u8>, usize), f64>,
}

impl FullJoint {
    pub fn new(dd: &DiscretizedDataset) -> Self {
        let mut rows: HashMap<(Vec<u8>, usize), f64> = HashMap::new();
        let w = 1.0 / dd.num_samples as f64;
        for s in 0..dd.num_samples {
            let key: Vec<u8> = (0..dd.num_features).map(|f| dd.column(f)[s]).collect();
            *rows.entry((key, dd.labels[s])).or_default() += w;
        }
        Self {
            n: dd.num_features,
            rows,
        }
    }

    /// Marginal `p(b_i, y)` obtained by summing the full joint over the other coordinates.
    pub fn feature_label(&self, i: usize, bins: usize, classes: usize) -> Vec<Vec<f64>> {
        let mut t = vec![vec![0.0; classes]; bins];
        for ((b, y), &p) in &self.rows {
            t[b[i] as usize][*y] += p;
        }
        t
    }

    /// Marginal `p(b_i, b_j)` obtained by summing over every other coordinate and the label.
    pub fn feature_pair(&self, i: usize, j: usize, bins: usize) -> Vec<Vec<f64>> {
        let mut t = vec![vec![0.0; bins]; bins];
        for ((b, _), &p) in &self.rows {
            t[b[i] as usize][b[j] as usize] += p;
        }
        t
    }
}

/// Random discretized dataset with `n` features, `bins` bins, `classes` labels and
/// `samples` rows. Features are correlated with the label and with each other.
pub fn random_discretized(
    seed: u64,
    n: usize,
    bins: usize,
    classes: usize,
    samples: usize,
) -> DiscretizedDataset {
    let mut r = rng(seed);
    let labels: Vec<usize> = (0..samples).map(|_| r.gen_range(0..classes)).collect();
    let mut columns: Vec<Vec<u8>> = Vec::with_capacity(n);
    for f in 0..n {
        let mode = r.gen_range(0..3);
        let col = (0..samples)
            .map(|s| {
                let v = match mode {
                    0 => r.gen_range(0..bins),
                    1 => (labels[s] + r.gen_range(0..2)) % bins,
                    _ if f > 0 => (columns[f - 1][s] as usize + r.gen_range(0..2)) % bins,
                    _ => labels[s] % bins,
                };
                v as u8
            })
            .collect();
        columns.push(col);
    }
    DiscretizedDataset::from_columns(columns, bins, labels, classes).unwrap()
}

/// Type-7 sample quantile (linear interpolation between order statistics).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Dense upper-triangular coefficient matrix of a QUBO.
pub fn dense(q: &QuboModel) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; q.n]; q.n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = q.diag[i];
    }
    for (&(i, j), &v) in &q.couplings {
        m[i][j] = v;
    }
    m
}

/// `xᵀQx + offset` straight from the dense matrix.
pub fn brute_energy(m: &[Vec<f64>], offset: f64, x: &[bool]) -> f64 {
    let mut e = offset;
    for i in 0..m.len() {
        if !x[i] {
            continue;
        }
        for j in i..m.len() {
            if x[j] {
                e += m[i][j];
            }
        }
    }
    e
}

pub fn bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Minimum energy over all `2^n` assignments.
pub fn brute_min(q: &QuboModel) -> f64 {
    let m = dense(q);
    (0..1u64 << q.n)
        .map(|mask| brute_energy(&m, q.offset, &bits(mask, q.n)))
        .fold(f64::INFINITY, f64::min)
}

/// Random QUBO with coefficients in `[-1, 1]` and the given coupling density.
pub fn random_qubo(seed: u64, n: usize, density: f64) -> QuboModel {
    let mut r = rng(seed);
    let mut q = QuboModel::new(n);
    for i in 0..n {
        q.add_linear(i, r.gen_range(-1.0..1.0));
    }
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(density) {
                q.add_quadratic(i, j, r.gen_range(-1.0..1.0));
            }
        }
    }
    q.offset = r.gen_range(-1.0..1.0);
    q
}

/// Workspace-level MNIST directory: `$MIFS_MNIST_DIR` or `<workspace>/data/mnist`.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("MIFS_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

pub fn mnist_paths() -> Option<[PathBuf; 4]> {
    let d = mnist_dir();
    let paths = [
        d.join("train-images-idx3-ubyte"),
        d.join("train-labels-idx1-ubyte"),
        d.join("t10k-images-idx3-ubyte"),
        d.join("t10k-labels-idx1-ubyte"),
    ];
    paths.iter().all(|p| p.exists()).then_some(paths)
}

pub fn load_mnist() -> Option<(ImageDataset, ImageDataset)> {
    let [a, b, c, d] = mnist_paths()?;
    Some((load_idx(a, b).ok()?, load_idx(c, d).ok()?))
}
