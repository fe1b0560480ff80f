//! Plug-in mutual information on discretized data, in nats.
//!
//! Every quantity is computed from integer counts with
//! `MI = (Σ c ln c − Σ a ln a − Σ b ln b + N ln N) / N`, where `c` runs over the
//! joint cells and `a`, `b` over the two marginals. `0 ln 0` is taken as 0.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::DiscretizedDataset;

/// `I(x_i; y)` for every feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    pub values: Vec<f64>,
}

impl ImportanceVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Symmetric `n × n` matrix of feature/feature MI with entropies on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl RedundancyMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn set_symmetric(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Largest off-diagonal row sum.
    pub fn max_offdiag_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Joint counts of two discrete columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PairHistogram {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u32>,
    pub total: usize,
}

impl PairHistogram {
    pub fn from_columns(a: &[u8], rows: usize, b: &[u8], cols: usize) -> Self {
        let mut counts = vec![0u32; rows * cols];
        for (&x, &y) in a.iter().zip(b) {
            counts[x as usize * cols + y as usize] += 1;
        }
        Self {
            rows,
            cols,
            counts,
            total: a.len(),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn row_marginal(&self) -> Vec<u32> {
        self.counts
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_marginal(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.cols];
        for r in self.counts.chunks(self.cols) {
            for (o, &c) in out.iter_mut().zip(r) {
                *o += c;
            }
        }
        out
    }

    /// Plug-in MI of the two columns.
    pub fn mutual_information(&self) -> f64 {
        let table = XlnX::new(self.total);
        let joint: f64 = self.counts.iter().map(|&c| table.get(c)).sum();
        let rows: f64 = self.row_marginal().iter().map(|&c| table.get(c)).sum();
        let cols: f64 = self.col_marginal().iter().map(|&c| table.get(c)).sum();
        ((joint - rows - cols + table.get(self.total as u32)) / self.total as f64).max(0.0)
    }
}

/// Lookup of `c ln c` for counts up to the sample size.
struct XlnX(Vec<f64>);

impl XlnX {
    fn new(max: usize) -> Self {
        Self(
            (0..=max)
                .map(|c| {
                    if c == 0 {
                        0.0
                    } else {
                        c as f64 * (c as f64).ln()
                    }
                })
                .collect(),
        )
    }

    #[inline]
    fn get(&self, c: u32) -> f64 {
        self.0[c as usize]
    }
}

fn entropy_from_counts(counts: &[u32], total: usize, table: &XlnX) -> f64 {
    let sum: f64 = counts.iter().map(|&c| table.get(c)).sum();
    ((table.get(total as u32) - sum) / total as f64).max(0.0)
}

fn column_counts(col: &[u8], bins: usize) -> Vec<u32> {
    let mut counts = vec![0u32; bins];
    for &b in col {
        counts[b as usize] += 1;
    }
    counts
}

fn label_counts(dd: &DiscretizedDataset) -> Vec<u32> {
    let mut counts = vec![0u32; dd.num_classes];
    for &y in &dd.labels {
        counts[y] += 1;
    }
    counts
}

/// Plug-in entropy of feature `i`'s bin column.
pub fn entropy(dd: &DiscretizedDataset, i: usize) -> Result<f64> {
    if i >= dd.num_features {
        return Err(Error::Index {
            index: i,
            len: dd.num_features,
        });
    }
    let table = XlnX::new(dd.num_samples);
    Ok(entropy_from_counts(
        &column_counts(dd.column(i), dd.effective_bins(i)),
        dd.num_samples,
        &table,
    ))
}

/// Plug-in entropy of the labels.
pub fn label_entropy(dd: &DiscretizedDataset) -> f64 {
    let table = XlnX::new(dd.num_samples);
    entropy_from_counts(&label_counts(dd), dd.num_samples, &table)
}

/// Feature/label MI for every feature.
pub fn importance(dd: &DiscretizedDataset) -> ImportanceVector {
    let table = XlnX::new(dd.num_samples);
    let labels = label_counts(dd);
    let label_term: f64 = labels.iter().map(|&c| table.get(c)).sum();
    let classes = dd.num_classes;

    let values = (0..dd.num_features)
        .into_par_iter()
        .map(|i| {
            let bins = dd.effective_bins(i);
            if bins == 1 {
                return 0.0;
            }
            let mut joint = vec![0u32; bins * classes];
            for (&b, &y) in dd.column(i).iter().zip(&dd.labels) {
                joint[b as usize * classes + y] += 1;
            }
            let joint_term: f64 = joint.iter().map(|&c| table.get(c)).sum();
            let feature_term: f64 = joint
                .chunks(classes)
                .map(|r| table.get(r.iter().sum()))
                .sum();
            let mi = (joint_term - feature_term - label_term + table.get(dd.num_samples as u32))
                / dd.num_samples as f64;
            mi.max(0.0)
        })
        .collect();
    ImportanceVector { values }
}

/// Pairwise feature MI from one histogram per unordered pair; entropies on the diagonal.
pub fn redundancy(dd: &DiscretizedDataset) -> RedundancyMatrix {
    let n = dd.num_features;
    let total = dd.num_samples;
    let table = XlnX::new(total);
    let bins: Vec<usize> = (0..n).map(|i| dd.effective_bins(i)).collect();
    let marginal_terms: Vec<f64> = (0..n)
        .map(|i| {
            column_counts(dd.column(i), bins[i])
                .iter()
                .map(|&c| table.get(c))
                .sum()
        })
        .collect();
    let n_ln_n = table.get(total as u32);

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut counts = vec![0u32; bins[i] * dd.num_bins];
            let col_i = dd.column(i);
            (i + 1..n)
                .map(|j| {
                    if bins[i] == 1 || bins[j] == 1 {
                        return 0.0;
                    }
                    let stride = bins[j];
                    let cells = &mut counts[..bins[i] * stride];
                    cells.fill(0);
                    for (&a, &b) in col_i.iter().zip(dd.column(j)) {
                        cells[a as usize * stride + b as usize] += 1;
                    }
                    let joint: f64 = cells
                        .iter()
                        .filter(|&&c| c > 0)
                        .map(|&c| table.get(c))
                        .sum();
                    ((joint - marginal_terms[i] - marginal_terms[j] + n_ln_n) / total as f64)
                        .max(0.0)
                })
                .collect()
        })
        .collect();

    let mut r = RedundancyMatrix::zeros(n);
    for (i, row) in upper.into_iter().enumerate() {
        r.values[i * n + i] = ((n_ln_n - marginal_terms[i]) / total as f64).max(0.0);
        for (off, v) in row.into_iter().enumerate() {
            r.set_symmetric(i, i + 1 + off, v);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(
        columns: Vec<Vec<u8>>,
        bins: usize,
        labels: Vec<usize>,
        classes: usize,
    ) -> DiscretizedDataset {
        DiscretizedDataset::from_columns(columns, bins, labels, classes).unwrap()
    }

    #[test]
    fn feature_equal_to_balanced_label_gives_ln2() {
        let dd = dataset(vec![vec![0, 1, 0, 1, 1, 0]], 2, vec![0, 1, 0, 1, 1, 0], 2);
        let i = importance(&dd);
        assert!((i.values[0] - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn independent_combinations_give_zero() {
        let dd = dataset(vec![vec![0, 0, 1, 1]], 2, vec![0, 1, 0, 1], 2);
        assert_eq!(importance(&dd).values[0], 0.0);
    }

    #[test]
    fn constant_feature_has_zero_importance_and_entropy() {
        let dd = dataset(vec![vec![0; 5]], 2, vec![0, 1, 0, 1, 1], 2);
        assert_eq!(importance(&dd).values[0], 0.0);
        assert_eq!(entropy(&dd, 0).unwrap(), 0.0);
    }

    #[test]
    fn copied_feature_redundancy_is_entropy() {
        let col = vec![0, 1, 2, 2, 1, 0, 0, 3];
        let dd = dataset(vec![col.clone(), col], 4, vec![0; 8], 1);
        let r = redundancy(&dd);
        let h = entropy(&dd, 0).unwrap();
        assert!((r.get(0, 1) - h).abs() < 1e-12);
        assert!((r.get(0, 0) - h).abs() < 1e-12);
    }

    #[test]
    fn independent_columns_have_zero_redundancy() {
        let dd = dataset(vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1]], 2, vec![0; 4], 1);
        assert_eq!(redundancy(&dd).get(0, 1), 0.0);
    }

    #[test]
    fn uniform_over_twenty_cells() {
        let col: Vec<u8> = (0..200).map(|s| (s % 20) as u8).collect();
        let dd = dataset(vec![col], 20, vec![0; 200], 1);
        assert!((redundancy(&dd).get(0, 0) - 20f64.ln()).abs() < 1e-12);
        assert!((entropy(&dd, 0).unwrap() - 2.995732273553991).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_even_split_and_index_error() {
        let dd = dataset(vec![vec![0, 1, 0, 1]], 2, vec![0; 4], 1);
        assert!((entropy(&dd, 0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(matches!(
            entropy(&dd, 1),
            Err(Error::Index { index: 1, len: 1 })
        ));
    }

    #[test]
    fn pair_histogram_probabilities_sum_to_one() {
        let h = PairHistogram::from_columns(&[0, 1, 2, 1, 0], 3, &[1, 1, 0, 0, 1], 2);
        assert_eq!(h.counts.iter().sum::<u32>(), 5);
        assert!((h.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
