use super::decoder::DecoderModel;
use crate::error::{Error, Result};

/// Largest relative gradient error per parameter tensor.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub per_tensor: Vec<(&'static str, f64)>,
}

impl GradCheckReport {
    pub fn max(&self) -> f64 {
        self.per_tensor.iter().map(|t| t.1).fold(0.0, f64::max)
    }
}

/// Compares the analytic MSE gradient with central differences
/// `(f(θ+ε) − f(θ−ε)) / 2ε` for every parameter. The error of one parameter is
/// `|g_a − g_n| / max(1e-12, |g_a| + |g_n|)`.
pub fn grad_check(
    model: &DecoderModel<f64>,
    input: &[f64],
    target: &[f64],
    eps: f64,
) -> Result<GradCheckReport> {
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(Error::invalid(format!(
            "finite-difference step {eps} outside [1e-7, 1e-4]"
        )));
    }
    let batch = input.len() / model.shape.inputs;
    if batch * model.shape.inputs != input.len() || target.len() != batch * model.shape.output_len()
    {
        return Err(Error::consistency(
            "input/target sizes do not match the decoder",
        ));
    }
    let fwd = model.forward(input, batch);
    let analytic = model.backward(input, &fwd, target);

    let mut probe = model.clone();
    let mut per_tensor = Vec::new();
    for ((name, _), (start, len)) in model.shape.tensors().into_iter().zip(model.shape.ranges()) {
        let mut worst = 0.0f64;
        for (idx, &a) in analytic.iter().enumerate().skip(start).take(len) {
            let orig = probe.params[idx];
            probe.params[idx] = orig + eps;
            let up = DecoderModel::loss(&probe.forward(input, batch), target);
            probe.params[idx] = orig - eps;
            let down = DecoderModel::loss(&probe.forward(input, batch), target);
            probe.params[idx] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
        per_tensor.push((name, worst));
    }
    Ok(GradCheckReport { per_tensor })
}

/// Shifts first-transposed-convolution biases until every pre-activation of
/// `input` is at least `margin` away from the ReLU kink. Returns false if some
/// channel could not be cleared.
pub fn nudge_relu_kinks(model: &mut DecoderModel<f64>, input: &[f64], margin: f64) -> bool {
    let batch = input.len() / model.shape.inputs;
    let fwd = model.forward(input, batch);
    let per_channel = fwd.z1.len() / model.shape.c2;
    let mut all_clear = true;
    for c in 0..model.shape.c2 {
        let z = &fwd.z1[c * per_channel..(c + 1) * per_channel];
        let shift = (0..200)
            .map(|step| {
                let mag = margin * 0.5 * ((step + 1) / 2) as f64;
                if step % 2 == 0 {
                    mag
                } else {
                    -mag
                }
            })
            .find(|&s| z.iter().all(|&v| (v + s).abs() >= margin));
        match shift {
            Some(s) => model.tconv1_bias_mut()[c] += s,
            None => all_clear = false,
        }
    }
    all_clear
}
