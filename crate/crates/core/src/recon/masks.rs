use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::sparsify::SelectionMask;

/// `k` distinct indices drawn uniformly from `0..n`.
pub fn random_mask(n: usize, k: usize, seed: u64) -> Result<SelectionMask> {
    if k > n {
        return Err(Error::invalid(format!("cannot pick {k} of {n} pixels")));
    }
    let picks = index::sample(&mut seeded(seed), n, k).into_vec();
    SelectionMask::new(n, picks, vec![format!("random:seed={seed}")])
}

/// `r × r` lattice (`k = r²`) at rows and columns `floor((i + 0.5) · width / r)`.
pub fn grid_mask(width: usize, k: usize) -> Result<SelectionMask> {
    let r = (k as f64).sqrt().round() as usize;
    if r * r != k {
        return Err(Error::consistency(format!(
            "grid mask needs a square k, got {k}"
        )));
    }
    if r > width {
        return Err(Error::consistency(format!(
            "{r}x{r} grid does not fit a width of {width}"
        )));
    }
    let lines: Vec<usize> = (0..r).map(|i| ((2 * i + 1) * width) / (2 * r)).collect();
    let picks = lines
        .iter()
        .flat_map(|&row| lines.iter().map(move |&col| row * width + col))
        .collect();
    SelectionMask::new(width * width, picks, vec!["grid".into()])
}
