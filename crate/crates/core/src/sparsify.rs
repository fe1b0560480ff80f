//! Size and connectivity reduction: 2×2 max-importance subsampling, coupling
//! thresholding and degree statistics of the coupling graph.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mi::{ImportanceVector, RedundancyMatrix};
use crate::qubo::QuboModel;

/// Selected original feature indices plus the steps that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMask {
    pub original_n: usize,
    pub indices: Vec<usize>,
    pub provenance: Vec<String>,
}

impl SelectionMask {
    /// Sorts and validates `indices`; duplicates are an error.
    pub fn new(
        original_n: usize,
        mut indices: Vec<usize>,
        provenance: Vec<String>,
    ) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::consistency("mask contains duplicate indices"));
        }
        if let Some(&last) = indices.last() {
            if last >= original_n {
                return Err(Error::Index {
                    index: last,
                    len: original_n,
                });
            }
        }
        Ok(Self {
            original_n,
            indices,
            provenance,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            original_n: n,
            indices: (0..n).collect(),
            provenance: vec!["all".into()],
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Keeps the positions whose bit is set, recording `step`.
    pub fn select(&self, bits: &[bool], step: impl Into<String>) -> Result<SelectionMask> {
        if bits.len() != self.indices.len() {
            return Err(Error::consistency(format!(
                "{} bits for a mask of {} indices",
                bits.len(),
                self.indices.len()
            )));
        }
        let mut provenance = self.provenance.clone();
        provenance.push(step.into());
        Ok(SelectionMask {
            original_n: self.original_n,
            indices: self
                .indices
                .iter()
                .zip(bits)
                .filter(|(_, &b)| b)
                .map(|(&i, _)| i)
                .collect(),
            provenance,
        })
    }

    /// Composes with a mask over this mask's positions.
    pub fn compose(&self, inner: &SelectionMask) -> Result<SelectionMask> {
        if inner.original_n != self.indices.len() {
            return Err(Error::consistency(
                "inner mask is not over this mask's positions",
            ));
        }
        let mut provenance = self.provenance.clone();
        provenance.extend(inner.provenance.iter().cloned());
        SelectionMask::new(
            self.original_n,
            inner.indices.iter().map(|&p| self.indices[p]).collect(),
            provenance,
        )
    }

    /// `(row, col)` of each index on a `width`-wide grid.
    pub fn coordinates(&self, width: usize) -> Vec<(usize, usize)> {
        self.indices
            .iter()
            .map(|&i| (i / width, i % width))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# original_n {}\n", self.original_n);
        for step in &self.provenance {
            out.push_str(&format!("# step {step}\n"));
        }
        for i in &self.indices {
            out.push_str(&format!("{i}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut original_n = None;
        let mut provenance = Vec::new();
        let mut indices = Vec::new();
        for raw in text.lines() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("original_n ") {
                    original_n = Some(
                        v.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::format(format!("bad original_n: {raw:?}")))?,
                    );
                } else if let Some(step) = comment.strip_prefix("step ") {
                    provenance.push(step.trim().to_string());
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            indices.push(
                line.parse::<usize>()
                    .map_err(|_| Error::format(format!("bad mask index: {raw:?}")))?,
            );
        }
        let original_n = original_n.ok_or_else(|| Error::format("mask lacks `# original_n`"))?;
        let mask = SelectionMask::new(original_n, indices.clone(), provenance)?;
        if mask.indices != indices {
            return Err(Error::format("mask indices must be strictly increasing"));
        }
        Ok(mask)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Keeps the most important pixel of every disjoint 2×2 block (ties go to the
/// lowest index).
pub fn subsample_2x2(importance: &ImportanceVector, width: usize) -> Result<SelectionMask> {
    if !width.is_multiple_of(2) {
        return Err(Error::consistency(format!("width {width} is odd")));
    }
    if importance.len() != width * width {
        return Err(Error::consistency(format!(
            "{} importances for a {width}x{width} grid",
            importance.len()
        )));
    }
    let half = width / 2;
    let mut picks = Vec::with_capacity(half * half);
    for br in 0..half {
        for bc in 0..half {
            let block = [
                (2 * br) * width + 2 * bc,
                (2 * br) * width + 2 * bc + 1,
                (2 * br + 1) * width + 2 * bc,
                (2 * br + 1) * width + 2 * bc + 1,
            ];
            let best = block
                .into_iter()
                .reduce(|a, b| {
                    if importance.values[b] > importance.values[a] {
                        b
                    } else {
                        a
                    }
                })
                .unwrap();
            picks.push(best);
        }
    }
    SelectionMask::new(width * width, picks, vec!["subsample_2x2".into()])
}

/// Sub-vector and sub-matrix over the mask's indices, in mask order.
pub fn restrict(
    importance: &ImportanceVector,
    redundancy: &RedundancyMatrix,
    mask: &SelectionMask,
) -> Result<(ImportanceVector, RedundancyMatrix)> {
    let n = importance.len();
    if redundancy.n != n {
        return Err(Error::consistency("importance and redundancy sizes differ"));
    }
    if let Some(&bad) = mask.indices.iter().find(|&&i| i >= n) {
        return Err(Error::Index { index: bad, len: n });
    }
    let m = mask.len();
    let values = mask.indices.iter().map(|&i| importance.values[i]).collect();
    let mut sub = RedundancyMatrix::zeros(m);
    for (a, &i) in mask.indices.iter().enumerate() {
        for (b, &j) in mask.indices.iter().enumerate() {
            sub.values[a * m + b] = redundancy.get(i, j);
        }
    }
    Ok((ImportanceVector { values }, sub))
}

/// Keeps the `keep` couplings of largest magnitude; ties prefer the
/// lexicographically smaller `(i, j)`.
pub fn threshold_couplings(q: &QuboModel, keep: usize) -> QuboModel {
    if keep >= q.num_couplings() {
        return q.clone();
    }
    let mut ranked: Vec<((usize, usize), f64)> =
        q.couplings.iter().map(|(&k, &v)| (k, v)).collect();
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    ranked.truncate(keep);
    QuboModel {
        n: q.n,
        diag: q.diag.clone(),
        couplings: ranked.into_iter().collect(),
        offset: q.offset,
    }
}

/// Connectivity statistics of the coupling graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeReport {
    pub num_vars: usize,
    pub num_couplings: usize,
    pub max_degree: usize,
    pub mean_degree: f64,
    /// `histogram[d]` = number of variables with degree `d`.
    pub histogram: Vec<usize>,
}

pub fn degree_report(q: &QuboModel) -> DegreeReport {
    let mut degree = vec![0usize; q.n];
    for &(i, j) in q.couplings.keys() {
        degree[i] += 1;
        degree[j] += 1;
    }
    let max_degree = degree.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0usize; max_degree + 1];
    for &d in &degree {
        histogram[d] += 1;
    }
    DegreeReport {
        num_vars: q.n,
        num_couplings: q.num_couplings(),
        max_degree,
        mean_degree: if q.n == 0 {
            0.0
        } else {
            degree.iter().sum::<usize>() as f64 / q.n as f64
        },
        histogram,
    }
}

impl fmt::Display for DegreeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "vars={} couplings={} max_degree={} mean_degree={:.2}",
            self.num_vars, self.num_couplings, self.max_degree, self.mean_degree
        )
    }
}
