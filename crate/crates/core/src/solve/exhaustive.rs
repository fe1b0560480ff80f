use super::{energy_scale, FlipState, SampleSet};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

pub const EXHAUSTIVE_MAX_VARS: usize = 24;

/// Global minimum by Gray-code enumeration. Exact ties resolve to the
/// lexicographically smallest bit-vector.
pub fn exhaustive(q: &QuboModel) -> Result<SampleSet> {
    if q.n > EXHAUSTIVE_MAX_VARS {
        return Err(Error::Capacity(format!(
            "exhaustive search is limited to {EXHAUSTIVE_MAX_VARS} variables, model has {}",
            q.n
        )));
    }
    let adj = q.adjacency();
    let mut state = FlipState::new(q, &adj, vec![false; q.n]);
    // Accumulated rounding in the running energy stays well below this.
    let tol = 1e-8 * energy_scale(q);

    let mut best_x = state.x.clone();
    let mut best_e = q.energy_unchecked(&best_x);
    for step in 1u64..(1u64 << q.n) {
        state.flip(step.trailing_zeros() as usize);
        if state.energy <= best_e + tol {
            let exact = q.energy_unchecked(&state.x);
            if exact < best_e || (exact == best_e && state.x < best_x) {
                best_e = exact;
                best_x.copy_from_slice(&state.x);
            }
        }
    }
    Ok(SampleSet::from_samples(q, [best_x], "exhaustive", 0))
}
