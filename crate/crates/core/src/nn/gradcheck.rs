//! Central finite-difference verification of [`Network::backward`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::{Gradients, Mode, Network};
use crate::error::Result;

/// A scalar objective over a batch of network outputs.
pub trait ScalarLoss {
    /// Loss value and its gradient with respect to `output`.
    fn evaluate(&self, output: &[f64], batch: usize) -> Result<(f64, Vec<f64>)>;

    fn value(&self, output: &[f64], batch: usize) -> Result<f64> {
        Ok(self.evaluate(output, batch)?.0)
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub step: f64,
    pub samples_per_tensor: usize,
    pub seed: u64,
    /// Seed for a frozen dropout mask; `None` checks in inference mode.
    pub dropout_seed: Option<u64>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            samples_per_tensor: 16,
            seed: 0,
            dropout_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `(tensor, index)` of the worst entry.
    pub worst: (usize, usize),
    pub checked: usize,
    /// Step reductions forced by a kink inside the difference interval.
    pub kink_retries: usize,
    /// Entries still straddling a kink at the smallest step; not compared.
    pub skipped: usize,
}

const KINK_RETRIES: usize = 2;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn loss_value<L: ScalarLoss>(
    net: &Network,
    input: &[f64],
    batch: usize,
    loss: &L,
    dropout_seed: Option<u64>,
) -> Result<(f64, Vec<bool>)> {
    let (out, kinks) = match dropout_seed {
        Some(seed) => net.infer_with_kinks(input, batch, Some(&mut ChaCha8Rng::seed_from_u64(seed)))?,
        None => net.infer_with_kinks(input, batch, None)?,
    };
    Ok((loss.value(&out, batch)?, kinks))
}

/// Loss and exact gradients under the same dropout convention as the check.
pub fn analytic_gradients<L: ScalarLoss>(
    net: &mut Network,
    input: &[f64],
    batch: usize,
    loss: &L,
    dropout_seed: Option<u64>,
) -> Result<(f64, Gradients)> {
    let out = match dropout_seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            net.forward(input, batch, Mode::Training(&mut rng))?
        }
        None => net.forward(input, batch, Mode::Inference)?,
    };
    let (value, grad) = loss.evaluate(&out, batch)?;
    let grads = net.backward(&grad)?;
    net.clear_trace();
    Ok((value, grads))
}

/// Compares `analytic` against central differences at the given
/// `(tensor, index)` positions.
pub fn check_entries<L: ScalarLoss>(
    net: &mut Network,
    input: &[f64],
    batch: usize,
    loss: &L,
    analytic: &Gradients,
    entries: &[(usize, usize)],
    step: f64,
    dropout_seed: Option<u64>,
) -> Result<GradCheckReport> {
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (0, 0),
        checked: 0,
        kink_retries: 0,
        skipped: 0,
    };
    for &(t, i) in entries {
        let original = net.params()[t][i];
        let mut numeric = None;
        let mut h = step;
        // A difference quotient across a leaky-ReLU kink does not estimate
        // the derivative; shrink the step until both sides share one linear piece.
        for _ in 0..=KINK_RETRIES {
            net.params_mut()[t][i] = original + h;
            let (plus, kinks_plus) = loss_value(net, input, batch, loss, dropout_seed)?;
            net.params_mut()[t][i] = original - h;
            let (minus, kinks_minus) = loss_value(net, input, batch, loss, dropout_seed)?;
            net.params_mut()[t][i] = original;
            if kinks_plus == kinks_minus {
                numeric = Some((plus - minus) / (2.0 * h));
                break;
            }
            report.kink_retries += 1;
            h /= 10.0;
        }
        let Some(numeric) = numeric else {
            report.skipped += 1;
            continue;
        };
        let err = relative_error(analytic.tensors()[t][i], numeric);
        if err > report.max_relative_error || report.checked == 0 {
            report.max_relative_error = err;
            report.worst = (t, i);
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Random sample of up to `per_tensor` entries from every parameter tensor.
pub fn sample_entries(net: &Network, per_tensor: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for (t, p) in net.params().iter().enumerate() {
        if p.len() <= per_tensor {
            entries.extend((0..p.len()).map(|i| (t, i)));
        } else {
            entries.extend((0..per_tensor).map(|_| (t, rng.random_range(0..p.len()))));
        }
    }
    entries
}

/// Max relative error between backprop and central differences over a
/// parameter sample.
pub fn grad_check<L: ScalarLoss>(
    net: &mut Network,
    input: &[f64],
    batch: usize,
    loss: &L,
    config: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let (_, analytic) = analytic_gradients(net, input, batch, loss, config.dropout_seed)?;
    let entries = sample_entries(net, config.samples_per_tensor, config.seed);
    check_entries(net, input, batch, loss, &analytic, &entries, config.step, config.dropout_seed)
}

/// `½·Σ(y − target)²`, used by the engine's own tests.
#[derive(Debug, Clone)]
pub struct HalfSquaredError {
    pub target: Vec<f64>,
}

impl ScalarLoss for HalfSquaredError {
    fn evaluate(&self, output: &[f64], _batch: usize) -> Result<(f64, Vec<f64>)> {
        if output.len() != self.target.len() {
            return Err(crate::error::Error::Dimension(format!(
                "output of {} vs target of {}",
                output.len(),
                self.target.len()
            )));
        }
        let grad: Vec<f64> = output.iter().zip(&self.target).map(|(y, t)| y - t).collect();
        let value = 0.5 * grad.iter().map(|d| d * d).sum::<f64>();
        Ok((value, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};
    use crate::tensor::Tensor;

    #[test]
    fn step_shrinks_when_the_interval_straddles_a_kink() {
        let specs = [
            LayerSpec::Dense { units: 1 },
            LayerSpec::Activation { activation: Activation::LeakyRelu { slope: 0.2 } },
        ];
        // pre-activation 3e-6: a 1e-5 step crosses zero, a 1e-6 step does not
        let params = vec![Tensor::new(vec![1, 1], vec![1.0]).unwrap(), Tensor::from_vec(vec![-1.0 + 3e-6])];
        let mut net = Network::from_parts(vec![1], &specs, params, 0).unwrap();
        let loss = HalfSquaredError { target: vec![0.5] };
        let r = grad_check(&mut net, &[1.0], 1, &loss, &GradCheckConfig::default()).unwrap();
        assert_eq!(r.checked, 2);
        assert_eq!(r.kink_retries, 2);
        assert_eq!(r.skipped, 0);
        assert!(r.max_relative_error < 1e-6, "{r:?}");
    }
}
