use rand::Rng;

use super::{energy_scale, FlipState, SampleSet};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;
use crate::rng::seeded;

/// Single-flip tabu search settings. Moves start from `start` (all zeros when unset).
#[derive(Debug, Clone, PartialEq)]
pub struct TabuParams {
    pub iters: usize,
    pub tenure: usize,
    pub seed: u64,
    pub start: Option<Vec<bool>>,
}

impl TabuParams {
    /// Iteration and tenure defaults scaled to the model size.
    pub fn for_size(n: usize, seed: u64) -> Self {
        Self {
            iters: (100 * n).max(1000),
            tenure: (n / 4).clamp(1, 20),
            seed,
            start: None,
        }
    }
}

/// Best-improvement tabu search: every iteration flips the non-tabu bit with the
/// lowest energy change (a tabu bit is allowed when it yields a new best).
/// Equal moves are chosen uniformly with the seeded generator. The returned set
/// holds the best state found and the final state.
pub fn tabu(q: &QuboModel, p: &TabuParams) -> Result<SampleSet> {
    if p.iters == 0 {
        return Err(Error::invalid("tabu search needs at least one iteration"));
    }
    let start = match &p.start {
        Some(x) if x.len() != q.n => {
            return Err(Error::consistency("tabu start state has the wrong length"));
        }
        Some(x) => x.clone(),
        None => vec![false; q.n],
    };
    let adj = q.adjacency();
    let mut rng = seeded(p.seed);
    let mut state = FlipState::new(q, &adj, start);
    let tol = 1e-12 * energy_scale(q);

    let mut best_x = state.x.clone();
    let mut best_e = state.energy;
    let mut tabu_until = vec![0usize; q.n];

    for it in 0..p.iters {
        let mut chosen = None;
        let mut chosen_delta = f64::INFINITY;
        let mut ties = 0u32;
        for (i, &until) in tabu_until.iter().enumerate() {
            let d = state.delta(i);
            let allowed = until <= it || state.energy + d < best_e - tol;
            if !allowed {
                continue;
            }
            if d < chosen_delta {
                chosen = Some(i);
                chosen_delta = d;
                ties = 1;
            } else if d == chosen_delta {
                ties += 1;
                if rng.gen_range(0..ties) == 0 {
                    chosen = Some(i);
                }
            }
        }
        let Some(i) = chosen else { break };
        state.flip(i);
        tabu_until[i] = it + 1 + p.tenure;
        if state.energy < best_e - tol {
            best_e = state.energy;
            best_x.copy_from_slice(&state.x);
        }
    }

    let mut samples = vec![best_x.clone()];
    if state.x != best_x {
        samples.push(state.x);
    }
    Ok(SampleSet::from_samples(q, samples, "tabu", p.seed)
        .with_param("iters", p.iters)
        .with_param("tenure", p.tenure))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var() -> QuboModel {
        let mut q = QuboModel::new(2);
        q.diag = vec![-1.0, -2.0];
        q.add_quadratic(0, 1, 3.0);
        q
    }

    #[test]
    fn finds_two_variable_optimum() {
        let s = tabu(&two_var(), &TabuParams::for_size(2, 3)).unwrap();
        assert_eq!(s.records[0].x, vec![false, true]);
        assert_eq!(s.records[0].energy, -2.0);
    }

    #[test]
    fn single_iteration_takes_steepest_flip() {
        let mut q = QuboModel::new(3);
        q.diag = vec![-1.0, -3.0, 0.5];
        q.add_quadratic(0, 1, 0.25);
        let p = TabuParams {
            iters: 1,
            tenure: 3,
            seed: 0,
            start: None,
        };
        let s = tabu(&q, &p).unwrap();
        assert_eq!(s.records[0].x, vec![false, true, false]);
        assert_eq!(s.records[0].energy, -3.0);
    }

    #[test]
    fn deterministic_for_seed() {
        let mut q = QuboModel::new(6);
        q.diag = vec![-1.0; 6];
        for i in 0..5 {
            q.add_quadratic(i, i + 1, 1.5);
        }
        let p = TabuParams::for_size(6, 11);
        assert_eq!(tabu(&q, &p).unwrap(), tabu(&q, &p).unwrap());
    }
}
