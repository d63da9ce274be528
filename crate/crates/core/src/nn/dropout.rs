use rand::RngCore;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Inverted-dropout mask: 0 for dropped units, `1/(1-rate)` for survivors.
/// A unit is dropped when its 32-bit uniform word falls below `rate·2³²`.
pub(crate) fn sample_mask(len: usize, rate: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    let cut = (rate * 4_294_967_296.0) as u64;
    let mut bytes = vec![0u8; len * 4];
    rng.fill_bytes(&mut bytes);
    bytes
        .chunks_exact(4)
        .map(|w| {
            let u = u32::from_le_bytes([w[0], w[1], w[2], w[3]]);
            if u64::from(u) < cut {
                0.0
            } else {
                keep
            }
        })
        .collect()
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(())
}

pub fn apply_dropout<R: RngCore>(
    input: &Tensor,
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<Tensor> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(input.clone());
    }
    let mask = sample_mask(input.len(), rate, rng);
    let mut out = input.clone();
    for (v, m) in out.values_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok(out)
}
