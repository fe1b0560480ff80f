use super::{SampleSet, Solver};
use crate::error::Result;
use crate::mi::{ImportanceVector, RedundancyMatrix};
use crate::qubo::{assemble, ConstraintKind, QuboModel};

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOptions {
    pub max_steps: usize,
    /// Upper end of the search interval; [`alpha_max`] of the base model when unset.
    pub alpha_max: Option<f64>,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            max_steps: 30,
            alpha_max: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub alpha: f64,
    pub weight: usize,
    /// Samples of the penalized model at `alpha`.
    pub samples: SampleSet,
    /// Every `(alpha, best weight)` probe in the order evaluated.
    pub probes: Vec<(f64, usize)>,
}

/// Penalty at which the empty selection is optimal: the largest negated
/// diagonal plus the largest off-diagonal absolute row sum.
pub fn alpha_max(base: &QuboModel) -> f64 {
    let mut row = vec![0.0f64; base.n];
    for (&(i, j), &v) in &base.couplings {
        row[i] += v.abs();
        row[j] += v.abs();
    }
    let top_gain = base.diag.iter().fold(0.0f64, |m, &d| m.max(-d));
    top_gain + row.iter().fold(0.0f64, |m, &r| m.max(r))
}

/// Bisects the linear penalty weight on `[0, alpha_max]` until the best
/// solution has weight `k` or the step budget runs out. Returns the probe whose
/// weight is closest to `k` (smaller penalty on ties).
pub fn tune_linear_penalty(
    base: &QuboModel,
    k: usize,
    solver: &Solver,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    let probe = |alpha: f64| -> Result<(usize, SampleSet)> {
        let mut q = base.clone();
        q.apply_constraint(&ConstraintKind::LinearPenalty { alpha, k })?;
        let set = solver.solve(&q)?;
        Ok((set.best()?.weight(), set))
    };

    let mut probes = Vec::new();
    let mut best: Option<(f64, usize, SampleSet)> = None;
    let mut record = |alpha: f64, weight: usize, set: SampleSet, probes: &mut Vec<(f64, usize)>| {
        probes.push((alpha, weight));
        let key = |a: f64, w: usize| (w.abs_diff(k), a);
        let better = match &best {
            None => true,
            Some((ba, bw, _)) => key(alpha, weight) < key(*ba, *bw),
        };
        if better {
            best = Some((alpha, weight, set));
        }
    };

    let (w0, s0) = probe(0.0)?;
    record(0.0, w0, s0, &mut probes);
    let mut lo = 0.0;
    let mut hi = opts.alpha_max.unwrap_or_else(|| alpha_max(base));
    if w0 > k {
        for _ in 0..opts.max_steps {
            let mid = 0.5 * (lo + hi);
            let (w, s) = probe(mid)?;
            record(mid, w, s, &mut probes);
            if w == k {
                break;
            }
            if w > k {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    let (alpha, weight, samples) = best.expect("at least one probe ran");
    Ok(TuneResult {
        alpha,
        weight,
        samples,
        probes,
    })
}

/// [`tune_linear_penalty`] on the unconstrained model `-I + R`.
pub fn tune_alpha(
    importance: &ImportanceVector,
    redundancy: &RedundancyMatrix,
    k: usize,
    solver: &Solver,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    let base = assemble(importance, redundancy, ConstraintKind::None)?;
    tune_linear_penalty(&base, k, solver, opts)
}
