use super::gemm::{matmul_nn, matmul_nt, matmul_tn};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub(crate) struct Dense {
    pub inputs: usize,
    pub units: usize,
    /// `[units × inputs]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn forward(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n * self.units);
        for _ in 0..n {
            out.extend_from_slice(&self.bias);
        }
        matmul_nt(x, &self.weight, n, self.inputs, self.units, &mut out, 1.0);
        out
    }

    pub fn backward(
        &self,
        input: &[f64],
        grad_out: &[f64],
        n: usize,
        need_input_grad: bool,
    ) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
        let mut dw = vec![0.0; self.weight.len()];
        matmul_tn(grad_out, input, self.units, n, self.inputs, &mut dw, 0.0);
        let mut db = vec![0.0; self.units];
        for row in grad_out.chunks_exact(self.units) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let dx = need_input_grad.then(|| {
            let mut dx = vec![0.0; n * self.inputs];
            matmul_nn(grad_out, &self.weight, n, self.units, self.inputs, &mut dx, 0.0);
            dx
        });
        (dw, db, dx)
    }
}

/// Affine map `weights · input + bias` for a single vector.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let &[units, inputs] = weights.shape() else {
        return Err(Error::Dimension(format!(
            "dense weights must be 2-D, got {:?}",
            weights.shape()
        )));
    };
    if input.len() != inputs {
        return Err(Error::Dimension(format!(
            "input has {} values, weights expect {inputs}",
            input.len()
        )));
    }
    if bias.len() != units {
        return Err(Error::Dimension(format!(
            "bias has {} values for {units} units",
            bias.len()
        )));
    }
    let layer = Dense {
        inputs,
        units,
        weight: weights.values().to_vec(),
        bias: bias.values().to_vec(),
    };
    Ok(Tensor::from_vec(layer.forward(input.values(), 1)))
}
