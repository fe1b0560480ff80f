use super::{hamming_weight, FlipState};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

/// Greedily drops or adds bits until exactly `k` are set. Each step takes the
/// flip with the lowest energy change on `base` (lowest index on ties).
pub fn repair_weight(base: &QuboModel, x: &[bool], k: usize) -> Result<Vec<bool>> {
    if x.len() != base.n {
        return Err(Error::consistency(format!(
            "assignment has {} bits, model has {} variables",
            x.len(),
            base.n
        )));
    }
    if k > base.n {
        return Err(Error::invalid(format!(
            "k = {k} exceeds {} variables",
            base.n
        )));
    }
    let adj = base.adjacency();
    let mut state = FlipState::new(base, &adj, x.to_vec());
    let mut weight = hamming_weight(x);
    while weight != k {
        let want_set = weight < k;
        let pick = (0..base.n)
            .filter(|&i| state.x[i] != want_set)
            .min_by(|&a, &b| state.delta(a).total_cmp(&state.delta(b)).then(a.cmp(&b)))
            .expect("a flippable bit exists while weight != k");
        state.flip(pick);
        if want_set {
            weight += 1;
        } else {
            weight -= 1;
        }
    }
    Ok(state.x)
}
