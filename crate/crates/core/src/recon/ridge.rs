use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::ImageDataset;
use crate::sparsify::SelectionMask;

/// Test MSE of a linear full-image predictor fit on the masked pixels by ridge
/// regression. Inputs and targets are centred on the training means, so the
/// intercept is not penalized.
pub fn ridge_decode(
    train: &ImageDataset,
    test: &ImageDataset,
    mask: &SelectionMask,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("ridge penalty must be positive"));
    }
    if train.num_features != test.num_features || mask.original_n != train.num_features {
        return Err(Error::consistency(
            "train, test and mask disagree on the pixel count",
        ));
    }
    if mask.is_empty() {
        return Err(Error::invalid("mask selects no pixels"));
    }
    let k = mask.len();
    let p = train.num_features;

    let x_train = DMatrix::from_row_iterator(
        train.num_samples,
        k,
        train.gather(&mask.indices).into_iter().map(f64::from),
    );
    let y_train = DMatrix::from_row_iterator(
        train.num_samples,
        p,
        train.features.iter().map(|&v| v as f64),
    );
    let x_mean = x_train.row_mean();
    let y_mean = y_train.row_mean();
    let xc = DMatrix::from_fn(train.num_samples, k, |r, c| x_train[(r, c)] - x_mean[c]);
    let yc = DMatrix::from_fn(train.num_samples, p, |r, c| y_train[(r, c)] - y_mean[c]);

    let mut gram = xc.tr_mul(&xc);
    for d in 0..k {
        gram[(d, d)] += lambda;
    }
    let rhs = xc.tr_mul(&yc);
    let weights = gram
        .cholesky()
        .ok_or_else(|| Error::consistency("ridge system is not positive definite"))?
        .solve(&rhs);

    let x_test = DMatrix::from_row_iterator(
        test.num_samples,
        k,
        test.gather(&mask.indices).into_iter().map(f64::from),
    );
    let xt = DMatrix::from_fn(test.num_samples, k, |r, c| x_test[(r, c)] - x_mean[c]);
    let pred = xt * weights;
    let mut sum = 0.0;
    for r in 0..test.num_samples {
        let row = test.sample(r);
        for c in 0..p {
            let e = pred[(r, c)] + y_mean[c] - row[c] as f64;
            sum += e * e;
        }
    }
    Ok(sum / (test.num_samples * p) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_pixel_reconstructs_label_images() {
        // Pixel 0 carries the label; every image is a fixed function of it.
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for s in 0..40 {
            let y = s % 2;
            labels.push(y);
            features.push(y as f32);
            for c in 1..16 {
                features.push(if y == 1 {
                    (c as f32) / 16.0
                } else {
                    1.0 - (c as f32) / 16.0
                });
            }
        }
        let ds = ImageDataset::new(4, features, labels, 2).unwrap();
        let mask = SelectionMask::new(16, vec![0], vec![]).unwrap();
        assert!(ridge_decode(&ds, &ds, &mask, 1e-9).unwrap() < 1e-12);
    }

    #[test]
    fn requires_positive_penalty() {
        let ds = ImageDataset::new(1, vec![0.5, 0.2], vec![0, 1], 2).unwrap();
        assert!(ridge_decode(&ds, &ds, &SelectionMask::identity(1), 0.0).is_err());
    }
}
