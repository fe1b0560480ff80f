use super::{energy_scale, tabu, FlipState, SampleSet, Solver, TabuParams};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;

/// Large-neighbourhood search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionParams {
    pub subproblem_size: usize,
    /// Solver for the clamped subproblems (must not itself be partitioned).
    pub inner: Box<Solver>,
    pub seed: u64,
    pub max_passes: usize,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            subproblem_size: 20,
            inner: Box::new(Solver::Exhaustive),
            seed: 0,
            max_passes: 50,
        }
    }
}

/// Decomposing solver in the style of qbsolv.
///
/// A full-model tabu run gives the starting point. Each pass ranks variables by
/// the magnitude of their flip energy, cuts the ranking into windows of
/// `subproblem_size`, and solves each window with every other variable clamped
/// at its current value. A window solution is accepted only if it lowers the
/// energy. The search stops after a pass without improvement.
pub fn partitioned_solve(q: &QuboModel, p: &PartitionParams) -> Result<SampleSet> {
    if p.subproblem_size == 0 {
        return Err(Error::invalid("subproblem size must be positive"));
    }
    if matches!(*p.inner, Solver::Partitioned(_)) {
        return Err(Error::invalid("inner solver cannot be partitioned"));
    }
    if matches!(*p.inner, Solver::Exhaustive) && p.subproblem_size > super::EXHAUSTIVE_MAX_VARS {
        return Err(Error::Capacity(format!(
            "exhaustive subproblems are limited to {} variables",
            super::EXHAUSTIVE_MAX_VARS
        )));
    }
    if q.n <= p.subproblem_size {
        let mut set = p.inner.reseeded(p.seed).solve(q)?;
        set.solver = "partitioned".into();
        set.seed = p.seed;
        return Ok(set.with_param("passes", 0));
    }

    let start = tabu(q, &TabuParams::for_size(q.n, p.seed))?
        .records
        .swap_remove(0)
        .x;
    let adj = q.adjacency();
    let mut state = FlipState::new(q, &adj, start);
    let tol = 1e-12 * energy_scale(q);
    let mut position = vec![usize::MAX; q.n];
    let mut passes = 0;

    for pass in 0..p.max_passes {
        passes = pass + 1;
        let mut order: Vec<usize> = (0..q.n).collect();
        order.sort_by(|&a, &b| {
            state.fields[b]
                .abs()
                .total_cmp(&state.fields[a].abs())
                .then(a.cmp(&b))
        });

        let mut improved = false;
        for (window, vars) in order.chunks(p.subproblem_size).enumerate() {
            let mut vars = vars.to_vec();
            vars.sort_unstable();
            for (pos, &v) in vars.iter().enumerate() {
                position[v] = pos;
            }
            let sub = clamped_subproblem(&state, &vars, &position);
            let current: Vec<bool> = vars.iter().map(|&v| state.x[v]).collect();
            let current_e = sub.energy_unchecked(&current);

            let stream = ((pass as u64) << 32) | window as u64;
            let inner = with_start(
                p.inner
                    .reseeded(p.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                &current,
            );
            let candidate = inner.solve(&sub)?.records.swap_remove(0);
            if candidate.energy < current_e - tol {
                for (pos, &v) in vars.iter().enumerate() {
                    if state.x[v] != candidate.x[pos] {
                        state.flip(v);
                    }
                }
                improved = true;
            }
            for &v in &vars {
                position[v] = usize::MAX;
            }
        }
        if !improved {
            break;
        }
    }

    Ok(SampleSet::from_samples(q, [state.x], "partitioned", p.seed)
        .with_param("subproblem_size", p.subproblem_size)
        .with_param("inner", p.inner.name())
        .with_param("passes", passes))
}

/// Inner tabu runs continue from the current assignment of the window.
fn with_start(solver: Solver, current: &[bool]) -> Solver {
    match solver {
        Solver::Tabu(mut t) => {
            t.start = Some(current.to_vec());
            Solver::Tabu(t)
        }
        other => other,
    }
}

/// Model over `vars` with every other variable fixed at its value in `state`.
/// Energies differ from the full model by a constant.
fn clamped_subproblem(state: &FlipState<'_>, vars: &[usize], position: &[usize]) -> QuboModel {
    let mut sub = QuboModel::new(vars.len());
    for (a, &v) in vars.iter().enumerate() {
        // Field from outside the window = full field minus in-window contributions.
        let mut field = state.fields[v];
        for (j, w) in state.adj.of(v) {
            let b = position[j];
            if b == usize::MAX {
                continue;
            }
            if state.x[j] {
                field -= w;
            }
            if b > a {
                sub.couplings.insert((a, b), w);
            }
        }
        sub.diag[a] = field;
    }
    sub
}
