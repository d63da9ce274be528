use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::conv::Conv1d;
use super::dense::Dense;
use super::dropout::{check_rate, sample_mask};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One entry of a network architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d { kernels: usize, kernel_size: usize },
    Dense { units: usize },
    Activation { activation: Activation },
    Dropout { rate: f64 },
    Reshape { shape: Vec<usize> },
}

#[derive(Debug, Clone)]
enum Layer {
    Conv1d(Conv1d),
    Dense(Dense),
    Activation(Activation),
    Dropout(f64),
    Reshape,
}

#[derive(Debug, Clone)]
struct Slot {
    spec: LayerSpec,
    layer: Layer,
    in_shape: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Cache {
    Cols(Vec<f64>),
    Input(Vec<f64>),
    Output(Vec<f64>),
    Mask(Option<Vec<f64>>),
    Pass,
}

#[derive(Debug, Clone)]
struct Trace {
    batch: usize,
    caches: Vec<Cache>,
}

/// Whether dropout is active for a forward pass.
pub enum Mode<'a> {
    Inference,
    Training(&'a mut dyn RngCore),
}

/// Gradient buffers aligned with [`Network::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn new(tensors: Vec<Vec<f64>>) -> Self {
        Self { tensors }
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.tensors
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|g| g.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        self.tensors.iter_mut().flatten().for_each(|g| *g *= factor);
    }
}

/// Sequential stack of layers over fixed-shape samples, processed in batches
/// laid out contiguously (`batch × sample`).
#[derive(Debug, Clone)]
pub struct Network {
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    slots: Vec<Slot>,
    seed: u64,
    trace: Option<Trace>,
}

fn glorot(rng: &mut ChaCha8Rng, len: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-limit..limit)).collect()
}

impl Network {
    /// Builds a network with seeded Glorot-uniform weights and zero biases.
    pub fn new(input_shape: Vec<usize>, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(input_shape, specs, seed, |kind, len, fan_in, fan_out| match kind {
            ParamKind::Weight => glorot(&mut rng, len, fan_in, fan_out),
            ParamKind::Bias => vec![0.0; len],
        })
    }

    /// Rebuilds a network from stored parameters, in [`Network::params`] order.
    pub fn from_parts(
        input_shape: Vec<usize>,
        specs: &[LayerSpec],
        params: Vec<Tensor>,
        seed: u64,
    ) -> Result<Self> {
        let mut iter = params.into_iter();
        let mut mismatch = None;
        let net = Self::build(input_shape, specs, seed, |_, len, _, _| match iter.next() {
            Some(t) if t.len() == len => t.into_values(),
            other => {
                mismatch.get_or_insert(format!(
                    "expected parameter tensor of {len} values, got {:?}",
                    other.map(|t| t.len())
                ));
                vec![0.0; len]
            }
        })?;
        if let Some(msg) = mismatch {
            return Err(Error::Dimension(msg));
        }
        if iter.next().is_some() {
            return Err(Error::Dimension("more parameter tensors than layers".into()));
        }
        Ok(net)
    }

    fn build(
        input_shape: Vec<usize>,
        specs: &[LayerSpec],
        seed: u64,
        mut init: impl FnMut(ParamKind, usize, usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let mut shape = input_shape.clone();
        let mut slots = Vec::with_capacity(specs.len());
        for spec in specs {
            let in_shape = shape.clone();
            let layer = match spec {
                &LayerSpec::Conv1d { kernels, kernel_size } => {
                    let &[time, channels] = shape.as_slice() else {
                        return Err(Error::Dimension(format!(
                            "conv1d needs [time, channels] input, got {shape:?}"
                        )));
                    };
                    Conv1d::check_geometry(time, kernel_size)?;
                    if kernels == 0 {
                        return Err(Error::Config("conv1d with zero kernels".into()));
                    }
                    let weight = init(
                        ParamKind::Weight,
                        kernels * kernel_size * channels,
                        kernel_size * channels,
                        kernel_size * kernels,
                    );
                    let bias = init(ParamKind::Bias, kernels, 0, 0);
                    shape = vec![time, kernels];
                    Layer::Conv1d(Conv1d {
                        time,
                        in_channels: channels,
                        kernel_size,
                        kernels,
                        weight,
                        bias,
                    })
                }
                &LayerSpec::Dense { units } => {
                    let &[inputs] = shape.as_slice() else {
                        return Err(Error::Dimension(format!(
                            "dense needs a flat input, got {shape:?}; insert a reshape"
                        )));
                    };
                    if units == 0 {
                        return Err(Error::Config("dense layer with zero units".into()));
                    }
                    let weight = init(ParamKind::Weight, units * inputs, inputs, units);
                    let bias = init(ParamKind::Bias, units, 0, 0);
                    shape = vec![units];
                    Layer::Dense(Dense {
                        inputs,
                        units,
                        weight,
                        bias,
                    })
                }
                &LayerSpec::Activation { activation } => Layer::Activation(activation),
                &LayerSpec::Dropout { rate } => {
                    check_rate(rate)?;
                    Layer::Dropout(rate)
                }
                LayerSpec::Reshape { shape: target } => {
                    let from: usize = shape.iter().product();
                    let to: usize = target.iter().product();
                    if from != to {
                        return Err(Error::Dimension(format!(
                            "cannot reshape {shape:?} into {target:?}"
                        )));
                    }
                    shape = target.clone();
                    Layer::Reshape
                }
            };
            slots.push(Slot {
                spec: spec.clone(),
                layer,
                in_shape,
            });
        }
        Ok(Self {
            input_shape,
            output_shape: shape,
            slots,
            seed,
            trace: None,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn output_len(&self) -> usize {
        self.output_shape.iter().product()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.slots.iter().map(|s| s.spec.clone()).collect()
    }

    /// Parameter tensors: weight then bias for each conv/dense layer.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for slot in &self.slots {
            match &slot.layer {
                Layer::Conv1d(c) => {
                    out.push(c.weight.as_slice());
                    out.push(c.bias.as_slice());
                }
                Layer::Dense(d) => {
                    out.push(d.weight.as_slice());
                    out.push(d.bias.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for slot in &mut self.slots {
            match &mut slot.layer {
                Layer::Conv1d(c) => {
                    out.push(c.weight.as_mut_slice());
                    out.push(c.bias.as_mut_slice());
                }
                Layer::Dense(d) => {
                    out.push(d.weight.as_mut_slice());
                    out.push(d.bias.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    /// Parameters with their natural shapes, for checkpoints.
    pub fn param_tensors(&self) -> Vec<Tensor> {
        let mut out = Vec::new();
        for slot in &self.slots {
            match &slot.layer {
                Layer::Conv1d(c) => {
                    out.push(Tensor::new(vec![c.kernels, c.kernel_size, c.in_channels], c.weight.clone()).unwrap());
                    out.push(Tensor::from_vec(c.bias.clone()));
                }
                Layer::Dense(d) => {
                    out.push(Tensor::new(vec![d.units, d.inputs], d.weight.clone()).unwrap());
                    out.push(Tensor::from_vec(d.bias.clone()));
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_input(&self, input: &[f64], batch: usize) -> Result<()> {
        if batch == 0 || input.len() != batch * self.input_len() {
            return Err(Error::Dimension(format!(
                "batch of {batch} samples of shape {:?} needs {} values, got {}",
                self.input_shape,
                batch * self.input_len(),
                input.len()
            )));
        }
        Ok(())
    }

    fn run(
        &self,
        input: &[f64],
        batch: usize,
        mut rng: Option<&mut dyn RngCore>,
        record: bool,
        mut kinks: Option<&mut Vec<bool>>,
    ) -> (Vec<f64>, Vec<Cache>) {
        let mut x = input.to_vec();
        let mut caches = Vec::with_capacity(if record { self.slots.len() } else { 0 });
        for slot in &self.slots {
            let cache = match &slot.layer {
                Layer::Conv1d(c) => {
                    let (out, cols) = c.forward(&x, batch);
                    x = out;
                    Cache::Cols(cols)
                }
                Layer::Dense(d) => {
                    let out = d.forward(&x, batch);
                    Cache::Input(std::mem::replace(&mut x, out))
                }
                Layer::Activation(a @ Activation::LeakyRelu { .. }) => {
                    if let Some(k) = kinks.as_deref_mut() {
                        k.extend(x.iter().map(|&v| v > 0.0));
                    }
                    let pre = record.then(|| x.clone());
                    a.forward_in_place(&mut x);
                    pre.map_or(Cache::Pass, Cache::Input)
                }
                Layer::Activation(a) => {
                    a.forward_in_place(&mut x);
                    if record {
                        Cache::Output(x.clone())
                    } else {
                        Cache::Pass
                    }
                }
                &Layer::Dropout(rate) => match rng.as_deref_mut() {
                    Some(r) if rate > 0.0 => {
                        let mask = sample_mask(x.len(), rate, r);
                        x.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                        Cache::Mask(Some(mask))
                    }
                    _ => Cache::Mask(None),
                },
                Layer::Reshape => Cache::Pass,
            };
            if record {
                caches.push(cache);
            }
        }
        (x, caches)
    }

    /// Inference-mode forward pass (dropout disabled); leaves no trace.
    pub fn infer(&self, input: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.check_input(input, batch)?;
        Ok(self.run(input, batch, None, false, None).0)
    }

    /// Training-mode forward pass (dropout active) that leaves no trace.
    pub fn infer_with_dropout(&self, input: &[f64], batch: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        self.check_input(input, batch)?;
        Ok(self.run(input, batch, Some(rng), false, None).0)
    }

    /// Untraced forward pass that also returns the sign pattern of every
    /// leaky-ReLU input, to tell whether two evaluations straddle a kink.
    pub fn infer_with_kinks(&self, input: &[f64], batch: usize, rng: Option<&mut dyn RngCore>) -> Result<(Vec<f64>, Vec<bool>)> {
        self.check_input(input, batch)?;
        let mut kinks = Vec::new();
        let out = self.run(input, batch, rng, false, Some(&mut kinks)).0;
        Ok((out, kinks))
    }

    /// Forward pass that records intermediates for [`Network::backward`].
    pub fn forward(&mut self, input: &[f64], batch: usize, mode: Mode<'_>) -> Result<Vec<f64>> {
        self.check_input(input, batch)?;
        let rng = match mode {
            Mode::Inference => None,
            Mode::Training(r) => Some(r),
        };
        let (out, caches) = self.run(input, batch, rng, true, None);
        self.trace = Some(Trace { batch, caches });
        Ok(out)
    }

    pub fn clear_trace(&mut self) {
        self.trace = None;
    }

    /// Reverse pass for the most recent [`Network::forward`]. Dropout
    /// masks are those sampled during that forward pass.
    pub fn backward(&self, grad_output: &[f64]) -> Result<Gradients> {
        let trace = self
            .trace
            .as_ref()
            .ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        let batch = trace.batch;
        if grad_output.len() != batch * self.output_len() {
            return Err(Error::Dimension(format!(
                "output gradient has {} values, expected {}",
                grad_output.len(),
                batch * self.output_len()
            )));
        }
        let mut grads: Vec<Vec<f64>> = Vec::new();
        let mut g = grad_output.to_vec();
        for (i, (slot, cache)) in self.slots.iter().zip(&trace.caches).enumerate().rev() {
            let need_dx = i > 0;
            match (&slot.layer, cache) {
                (Layer::Conv1d(c), Cache::Cols(cols)) => {
                    let (dw, db, dx) = c.backward(cols, &g, batch, need_dx);
                    grads.push(db);
                    grads.push(dw);
                    if let Some(dx) = dx {
                        g = dx;
                    }
                }
                (Layer::Dense(d), Cache::Input(input)) => {
                    let (dw, db, dx) = d.backward(input, &g, batch, need_dx);
                    grads.push(db);
                    grads.push(dw);
                    if let Some(dx) = dx {
                        g = dx;
                    }
                }
                (Layer::Activation(a), Cache::Input(v) | Cache::Output(v)) => {
                    a.backward_in_place(v, &mut g)
                }
                (Layer::Activation(Activation::None), Cache::Pass) => {}
                (Layer::Dropout(_), Cache::Mask(mask)) => {
                    if let Some(mask) = mask {
                        g.iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
                    }
                }
                (Layer::Reshape, Cache::Pass) => {}
                _ => {
                    return Err(Error::State(format!(
                        "trace does not match layer {i} ({:?})",
                        slot.spec
                    )))
                }
            }
            debug_assert!(!need_dx || g.len() == batch * slot.in_shape.iter().product::<usize>());
        }
        grads.reverse();
        Ok(Gradients::new(grads))
    }
}

#[derive(Clone, Copy)]
enum ParamKind {
    Weight,
    Bias,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_specs() -> Vec<LayerSpec> {
        vec![
            LayerSpec::Conv1d { kernels: 4, kernel_size: 3 },
            LayerSpec::Activation { activation: Activation::LeakyRelu { slope: 0.2 } },
            LayerSpec::Dropout { rate: 0.2 },
            LayerSpec::Reshape { shape: vec![40] },
            LayerSpec::Dense { units: 6 },
            LayerSpec::Activation { activation: Activation::Tanh },
        ]
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = Network::new(vec![10, 2], &small_specs(), 5).unwrap();
        let b = Network::new(vec![10, 2], &small_specs(), 5).unwrap();
        assert_eq!(a.param_count(), b.param_count());
        assert_eq!(a.params(), b.params());
        assert_eq!(a.output_shape(), &[6]);
    }

    #[test]
    fn incompatible_shapes_rejected() {
        let specs = vec![LayerSpec::Dense { units: 3 }];
        assert!(matches!(Network::new(vec![10, 2], &specs, 0), Err(Error::Dimension(_))));
        let specs = vec![LayerSpec::Reshape { shape: vec![7] }];
        assert!(Network::new(vec![10, 2], &specs, 0).is_err());
    }

    #[test]
    fn backward_requires_forward() {
        let net = Network::new(vec![10, 2], &small_specs(), 1).unwrap();
        assert!(matches!(net.backward(&[0.0; 6]), Err(Error::State(_))));
    }

    #[test]
    fn inference_is_pure() {
        let net = Network::new(vec![10, 2], &small_specs(), 1).unwrap();
        let x: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        assert_eq!(net.infer(&x, 2).unwrap(), net.infer(&x, 2).unwrap());
    }

    #[test]
    fn gradient_is_linear_in_output_gradient() {
        let mut net = Network::new(vec![10, 2], &small_specs(), 3).unwrap();
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        net.forward(&x, 2, Mode::Training(&mut rng)).unwrap();
        let g: Vec<f64> = (0..12).map(|i| (i as f64 * 0.5).sin()).collect();
        let g2: Vec<f64> = g.iter().map(|v| 2.0 * v).collect();
        let mut one = net.backward(&g).unwrap();
        let two = net.backward(&g2).unwrap();
        one.scale(2.0);
        assert_eq!(one, two);
    }

    #[test]
    fn identity_dense_at_target_has_zero_gradient() {
        let specs = vec![LayerSpec::Dense { units: 3 }];
        let eye = Tensor::new(vec![3, 3], vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        let mut net = Network::from_parts(vec![3], &specs, vec![eye, Tensor::zeros(vec![3])], 0).unwrap();
        let x = [0.3, -1.2, 2.0];
        let y = net.forward(&x, 1, Mode::Inference).unwrap();
        let grad: Vec<f64> = y.iter().zip(&x).map(|(a, b)| 2.0 * (a - b)).collect();
        let grads = net.backward(&grad).unwrap();
        assert!(grads.tensors().iter().flatten().all(|&g| g == 0.0));
    }
}
