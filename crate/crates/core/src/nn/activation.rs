use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Tanh,
    None,
}

impl Activation {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::None => x,
        }
    }

    pub(crate) fn forward_in_place(self, values: &mut [f64]) {
        match self {
            Activation::None => {}
            _ => values.iter_mut().for_each(|v| *v = self.eval(*v)),
        }
    }

    /// Multiplies `grad` by the local derivative. `input` is the
    /// pre-activation for LeakyReLU and the activation output for tanh.
    pub(crate) fn backward_in_place(self, cached: &[f64], grad: &mut [f64]) {
        match self {
            Activation::LeakyRelu { slope } => {
                for (g, &x) in grad.iter_mut().zip(cached) {
                    if x < 0.0 {
                        *g *= slope;
                    }
                }
            }
            Activation::Tanh => {
                for (g, &y) in grad.iter_mut().zip(cached) {
                    *g *= 1.0 - y * y;
                }
            }
            Activation::None => {}
        }
    }
}

pub fn apply_activation(input: &Tensor, kind: Activation) -> Tensor {
    let mut out = input.clone();
    kind.forward_in_place(out.values_mut());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LEAKY: Activation = Activation::LeakyRelu { slope: 0.2 };

    #[test]
    fn leaky_relu_definition() {
        let out = apply_activation(&Tensor::from_vec(vec![-1.0, 0.0, 2.0]), LEAKY);
        assert_eq!(out.values(), &[-0.2, 0.0, 2.0]);
    }

    #[test]
    fn tanh_values() {
        let out = apply_activation(&Tensor::from_vec(vec![0.0, 10.0]), Activation::Tanh);
        assert_eq!(out.values()[0], 0.0);
        assert!(out.values()[1] < 1.0 && out.values()[1] > 0.999);
    }

    proptest! {
        #[test]
        fn leaky_slope_on_negative_inputs(x in -1e6f64..-1e-300) {
            let y = LEAKY.eval(x);
            prop_assert_eq!(y, 0.2 * x);
            prop_assert!((y / x - 0.2).abs() <= 2.0 * f64::EPSILON);
        }
    }
}
