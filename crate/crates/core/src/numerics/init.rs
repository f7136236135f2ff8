use rand::Rng;

use super::tensor::Tensor;

/// Uniform Glorot initialisation for a `[fan_in x fan_out]` weight.
pub fn glorot_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..=limit))
        .collect();
    Tensor::matrix(fan_in, fan_out, data).expect("glorot shape")
}
