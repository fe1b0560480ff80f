use rand::Rng;
use rayon::prelude::*;

use super::{FlipState, SampleSet};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;
use crate::rng::stream_rng;

/// Simulated-annealing settings. `None` temperatures are derived from the model:
/// `t_hot` = largest single-flip energy change at the all-zeros state, `t_cold` = `1e-3 * t_hot`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealParams {
    pub reads: usize,
    pub sweeps: usize,
    pub t_hot: Option<f64>,
    pub t_cold: Option<f64>,
    pub seed: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            reads: 1000,
            sweeps: 2000,
            t_hot: None,
            t_cold: None,
            seed: 0,
        }
    }
}

impl AnnealParams {
    /// Resolved `(t_hot, t_cold)` for `q`.
    pub fn temperatures(&self, q: &QuboModel) -> Result<(f64, f64)> {
        let hot = self.t_hot.unwrap_or_else(|| {
            let m = q.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if m > 0.0 {
                m
            } else {
                1.0
            }
        });
        let cold = self.t_cold.unwrap_or(1e-3 * hot);
        if !(hot > cold && cold > 0.0 && hot.is_finite()) {
            return Err(Error::invalid(format!(
                "temperatures must satisfy t_hot > t_cold > 0 (got {hot}, {cold})"
            )));
        }
        Ok((hot, cold))
    }

    fn validate(&self) -> Result<()> {
        if self.reads == 0 || self.sweeps == 0 {
            return Err(Error::invalid(
                "anneal needs at least one read and one sweep",
            ));
        }
        Ok(())
    }
}

/// Independent single-flip Metropolis restarts on a geometric temperature
/// schedule. Read `r` draws from stream `r` of the seed, so results do not
/// depend on how reads are scheduled.
pub fn simulated_anneal(q: &QuboModel, p: &AnnealParams) -> Result<SampleSet> {
    p.validate()?;
    let (hot, cold) = p.temperatures(q)?;
    let schedule: Vec<f64> = (0..p.sweeps)
        .map(|s| {
            if p.sweeps == 1 {
                cold
            } else {
                hot * (cold / hot).powf(s as f64 / (p.sweeps - 1) as f64)
            }
        })
        .collect();
    let adj = q.adjacency();

    let finals: Vec<Vec<bool>> = (0..p.reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = stream_rng(p.seed, read as u64);
            let start = (0..q.n).map(|_| rng.gen::<bool>()).collect();
            let mut state = FlipState::new(q, &adj, start);
            for &t in &schedule {
                for i in 0..q.n {
                    let d = state.delta(i);
                    if d <= 0.0 || rng.gen::<f64>() < (-d / t).exp() {
                        state.flip(i);
                    }
                }
            }
            state.x
        })
        .collect();

    Ok(SampleSet::from_samples(q, finals, "anneal", p.seed)
        .with_param("reads", p.reads)
        .with_param("sweeps", p.sweeps)
        .with_param("t_hot", hot)
        .with_param("t_cold", cold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::best;

    fn two_var() -> QuboModel {
        let mut q = QuboModel::new(2);
        q.diag = vec![-1.0, -2.0];
        q.add_quadratic(0, 1, 3.0);
        q
    }

    fn quick(seed: u64) -> AnnealParams {
        AnnealParams {
            reads: 50,
            sweeps: 100,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let q = two_var();
        assert_eq!(
            simulated_anneal(&q, &quick(4)).unwrap(),
            simulated_anneal(&q, &quick(4)).unwrap()
        );
    }

    #[test]
    fn finds_two_variable_optimum() {
        let s = simulated_anneal(&two_var(), &quick(1)).unwrap();
        assert_eq!(best(&s).unwrap(), (&[false, true][..], -2.0));
        assert_eq!(s.total_occurrences(), 50);
    }

    #[test]
    fn rejects_inverted_temperatures() {
        let p = AnnealParams {
            t_hot: Some(0.1),
            t_cold: Some(1.0),
            ..quick(0)
        };
        assert!(simulated_anneal(&two_var(), &p).is_err());
    }

    #[test]
    fn default_hot_temperature_is_largest_diagonal() {
        let (hot, cold) = AnnealParams::default().temperatures(&two_var()).unwrap();
        assert_eq!(hot, 2.0);
        assert!((cold - 2e-3).abs() < 1e-15);
    }
}
