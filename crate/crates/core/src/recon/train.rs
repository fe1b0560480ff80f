use rand::seq::SliceRandom;

use super::decoder::{DecoderModel, DecoderShape};
use super::linalg::Scalar;
use crate::error::{Error, Result};
use crate::ingest::ImageDataset;
use crate::rng::stream_rng;
use crate::sparsify::SelectionMask;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 128,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.epochs > 0
            && self.batch_size > 0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid training configuration {self:?}"
            )))
        }
    }
}

/// Adam state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn update<T: Scalar>(&mut self, params: &mut [T], grad: &[T]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let g = g.to_f64().unwrap();
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let update = self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            *p = T::cast(p.to_f64().unwrap() - update);
        }
    }
}

/// A trained decoder and its mean training loss per epoch.
#[derive(Debug, Clone)]
pub struct TrainedDecoder {
    pub model: DecoderModel<f32>,
    pub epoch_losses: Vec<f64>,
}

fn check_mask(ds: &ImageDataset, mask: &SelectionMask) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::invalid("mask selects no pixels"));
    }
    if mask.original_n != ds.num_features || mask.indices.iter().any(|&i| i >= ds.num_features) {
        return Err(Error::consistency(format!(
            "mask over {} features used with {}-pixel images",
            mask.original_n, ds.num_features
        )));
    }
    Ok(())
}

/// Fits a decoder from the masked pixels to the full image with Adam on MSE.
/// Batches follow a per-epoch seeded shuffle, so a seed fixes the result.
pub fn train_decoder(
    train: &ImageDataset,
    mask: &SelectionMask,
    cfg: &TrainConfig,
) -> Result<TrainedDecoder> {
    cfg.validate()?;
    check_mask(train, mask)?;
    let shape = DecoderShape::standard(mask.len(), train.width).ok_or_else(|| {
        Error::consistency(format!(
            "image width {} is not a multiple of 4",
            train.width
        ))
    })?;
    let mut model = DecoderModel::<f32>::init(shape, cfg.seed);
    let mut adam = Adam::new(model.params.len(), cfg);

    let inputs = train.gather(&mask.indices);
    let k = mask.len();
    let pixels = train.num_features;
    let mut order: Vec<usize> = (0..train.num_samples).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut x = Vec::new();
    let mut t = Vec::new();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut stream_rng(cfg.seed, epoch as u64));
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            x.clear();
            t.clear();
            for &s in chunk {
                x.extend_from_slice(&inputs[s * k..(s + 1) * k]);
                t.extend_from_slice(train.sample(s));
            }
            let fwd = model.forward(&x, chunk.len());
            total += DecoderModel::loss(&fwd, &t) * (chunk.len() * pixels) as f64;
            let grad = model.backward(&x, &fwd, &t);
            adam.update(&mut model.params, &grad);
        }
        epoch_losses.push(total / (train.num_samples * pixels) as f64);
    }
    Ok(TrainedDecoder {
        model,
        epoch_losses,
    })
}

/// Mean over samples and pixels of the squared reconstruction error.
pub fn eval_mse(
    model: &DecoderModel<f32>,
    test: &ImageDataset,
    mask: &SelectionMask,
) -> Result<f64> {
    check_mask(test, mask)?;
    if model.shape.inputs != mask.len() || model.shape.output_len() != test.num_features {
        return Err(Error::consistency(format!(
            "decoder maps {} inputs to {} pixels; mask has {} and images {}",
            model.shape.inputs,
            model.shape.output_len(),
            mask.len(),
            test.num_features
        )));
    }
    let inputs = test.gather(&mask.indices);
    let k = mask.len();
    let pixels = test.num_features;
    let mut sum = 0.0;
    for start in (0..test.num_samples).step_by(256) {
        let end = (start + 256).min(test.num_samples);
        let out = model.predict(&inputs[start * k..end * k], end - start);
        let target = &test.features[start * pixels..end * pixels];
        sum += out
            .iter()
            .zip(target)
            .map(|(&y, &t)| ((y - t) as f64).powi(2))
            .sum::<f64>();
    }
    Ok(sum / (test.num_samples * pixels) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset() -> ImageDataset {
        // 8×8 images: two vertical bars keyed by label.
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for s in 0..12 {
            let y = s % 2;
            labels.push(y);
            for r in 0..8 {
                for c in 0..8 {
                    let on = if y == 0 { c < 4 } else { c >= 4 };
                    features.push(if on { 0.9 - 0.01 * r as f32 } else { 0.1 });
                }
            }
        }
        ImageDataset::new(8, features, labels, 2).unwrap()
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let ds = tiny_dataset();
        let mask = SelectionMask::new(64, vec![0, 7, 36], vec![]).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 4,
            learning_rate: 1e-2,
            seed: 9,
            ..Default::default()
        };
        let a = train_decoder(&ds, &mask, &cfg).unwrap();
        let b = train_decoder(&ds, &mask, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert!(a.epoch_losses.last().unwrap() < &a.epoch_losses[0]);
        let mse = eval_mse(&a.model, &ds, &mask).unwrap();
        assert!(mse < a.epoch_losses[0]);
    }

    #[test]
    fn eval_rejects_mismatched_mask() {
        let ds = tiny_dataset();
        let mask = SelectionMask::new(64, vec![0, 7, 36], vec![]).unwrap();
        let model = DecoderModel::<f32>::init(DecoderShape::standard(2, 8).unwrap(), 0);
        assert!(matches!(
            eval_mse(&model, &ds, &mask),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn rejects_empty_mask() {
        let ds = tiny_dataset();
        let mask = SelectionMask::new(64, vec![], vec![]).unwrap();
        assert!(train_decoder(&ds, &mask, &TrainConfig::default()).is_err());
    }
}
