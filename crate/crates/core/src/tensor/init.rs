use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Tensor;
use crate::scalar::Scalar;

/// 64-bit FNV-1a of a parameter name.
pub fn stream_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// ChaCha8 generator keyed by `seed` on the stream named by `name`.
///
/// Every parameter draws from its own stream, so adding or removing modules
/// never shifts the initial values of the others.
pub fn param_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}

/// He/Kaiming uniform init: `U(−b, b)` with `b = sqrt(6 / fan_in)`.
pub fn kaiming_uniform<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Tensor<T> {
    let bound = (6.0 / fan_in as f64).sqrt();
    Tensor::from_fn(shape.to_vec(), |_| {
        T::from_f64_lossy((2.0 * rng.gen::<f64>() - 1.0) * bound)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_of_each_other() {
        let a: Vec<u64> = (0..4).map(|_| param_rng(7, "stem.weight").gen()).collect();
        let mut r1 = param_rng(7, "stem.weight");
        let mut r2 = param_rng(7, "head.weight");
        let x: u64 = r1.gen();
        let y: u64 = r2.gen();
        assert_eq!(a[0], x);
        assert_ne!(x, y);
    }

    #[test]
    fn kaiming_respects_bound() {
        let mut rng = param_rng(1, "w");
        let t: Tensor<f64> = kaiming_uniform(&[16, 8, 3, 3], 72, &mut rng);
        let b = (6.0f64 / 72.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= b));
    }
}
