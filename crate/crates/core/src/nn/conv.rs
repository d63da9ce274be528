//! Same-padded, stride-1 1-D cross-correlation over `[time × channels]`
//! samples, lowered to GEMM through an im2col buffer.

use super::gemm::{matmul_nn, matmul_nt, matmul_tn};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub(crate) struct Conv1d {
    pub time: usize,
    pub in_channels: usize,
    pub kernel_size: usize,
    pub kernels: usize,
    /// `[kernels × kernel_size × in_channels]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Expands `n` samples of `[time × channels]` into rows of
/// `kernel_size · channels` taps, zero outside the sample. The taps of one
/// row are a contiguous slice of the sample, so interior rows are one copy.
pub(crate) fn im2col(x: &[f64], n: usize, time: usize, channels: usize, kernel_size: usize) -> Vec<f64> {
    let pad = kernel_size / 2;
    let row_len = kernel_size * channels;
    let mut cols = Vec::with_capacity(n * time * row_len);
    for sample in x.chunks_exact(time * channels).take(n) {
        for t in 0..time {
            let lo = t.saturating_sub(pad);
            let hi = (t + pad + 1).min(time);
            let lead = (pad - (t - lo)) * channels;
            let trail = (t + pad + 1 - hi) * channels;
            cols.extend(std::iter::repeat_n(0.0, lead));
            cols.extend_from_slice(&sample[lo * channels..hi * channels]);
            cols.extend(std::iter::repeat_n(0.0, trail));
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-adds tap gradients back onto the input.
pub(crate) fn col2im(cols: &[f64], n: usize, time: usize, channels: usize, kernel_size: usize) -> Vec<f64> {
    let pad = kernel_size / 2;
    let row_len = kernel_size * channels;
    let mut dx = vec![0.0; n * time * channels];
    for (sample, rows) in dx.chunks_exact_mut(time * channels).zip(cols.chunks_exact(time * row_len)) {
        for (t, row) in rows.chunks_exact(row_len).enumerate() {
            let lo = t.saturating_sub(pad);
            let hi = (t + pad + 1).min(time);
            let lead = (pad - (t - lo)) * channels;
            for (d, g) in sample[lo * channels..hi * channels].iter_mut().zip(&row[lead..]) {
                *d += g;
            }
        }
    }
    dx
}

impl Conv1d {
    pub fn check_geometry(time: usize, kernel_size: usize) -> Result<()> {
        if kernel_size % 2 == 0 {
            return Err(Error::Config(format!(
                "conv kernel size {kernel_size} must be odd for same padding"
            )));
        }
        if time < kernel_size {
            return Err(Error::Dimension(format!(
                "input length {time} shorter than kernel size {kernel_size}"
            )));
        }
        Ok(())
    }

    fn row_len(&self) -> usize {
        self.kernel_size * self.in_channels
    }

    /// Returns the `[n·time × kernels]` output and the im2col buffer.
    pub fn forward(&self, x: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
        let rows = n * self.time;
        let cols = im2col(x, n, self.time, self.in_channels, self.kernel_size);
        let mut out = Vec::with_capacity(rows * self.kernels);
        for _ in 0..rows {
            out.extend_from_slice(&self.bias);
        }
        matmul_nt(&cols, &self.weight, rows, self.row_len(), self.kernels, &mut out, 1.0);
        (out, cols)
    }

    /// Gradients for weight, bias and (optionally) the input.
    pub fn backward(
        &self,
        cols: &[f64],
        grad_out: &[f64],
        n: usize,
        need_input_grad: bool,
    ) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
        let rows = n * self.time;
        let mut dw = vec![0.0; self.weight.len()];
        matmul_tn(grad_out, cols, self.kernels, rows, self.row_len(), &mut dw, 0.0);
        let mut db = vec![0.0; self.kernels];
        for row in grad_out.chunks_exact(self.kernels) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let dx = need_input_grad.then(|| {
            let mut dcols = vec![0.0; rows * self.row_len()];
            matmul_nn(grad_out, &self.weight, rows, self.kernels, self.row_len(), &mut dcols, 0.0);
            col2im(&dcols, n, self.time, self.in_channels, self.kernel_size)
        });
        (dw, db, dx)
    }
}

/// Single-sample convolution: `input [time × channels]`,
/// `weights [kernels × kernel_size × channels]`, `bias [kernels]`.
pub fn conv1d_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (&[time, channels], &[kernels, kernel_size, w_channels]) = (input.shape(), weights.shape())
    else {
        return Err(Error::Dimension(format!(
            "conv1d expects 2-D input and 3-D weights, got {:?} and {:?}",
            input.shape(),
            weights.shape()
        )));
    };
    if w_channels != channels {
        return Err(Error::Dimension(format!(
            "weights expect {w_channels} channels, input has {channels}"
        )));
    }
    if bias.len() != kernels {
        return Err(Error::Dimension(format!(
            "bias has {} entries for {kernels} kernels",
            bias.len()
        )));
    }
    Conv1d::check_geometry(time, kernel_size)?;
    let layer = Conv1d {
        time,
        in_channels: channels,
        kernel_size,
        kernels,
        weight: weights.values().to_vec(),
        bias: bias.values().to_vec(),
    };
    let (out, _) = layer.forward(input.values(), 1);
    Tensor::new(vec![time, kernels], out)
}
