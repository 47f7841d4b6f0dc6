use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{dwt2, idwt2, WaveletBasisId};
use crate::tensor::{Tape, Tensor};

/// Perfect-reconstruction, DC-gain and energy checks for one basis.
#[derive(Debug, Clone, Serialize)]
pub struct SelftestRow {
    pub basis: WaveletBasisId,
    pub taps: usize,
    pub pr_error_f64: f64,
    pub pr_error_f32: f64,
    pub dc_gain_error: f64,
    /// Relative Parseval defect; `None` for biorthogonal bases.
    pub energy_error: Option<f64>,
    pub pass: bool,
}

pub const PR_TOL_F64: f64 = 1e-8;
pub const PR_TOL_F32: f64 = 1e-4;
pub const DC_TOL: f64 = 1e-6;
pub const ENERGY_TOL: f64 = 1e-5;

fn random_image(rng: &mut ChaCha8Rng, size: usize) -> Tensor<f64> {
    Tensor::from_fn([1, 1, size, size], |_| rng.gen::<f64>() * 2.0 - 1.0)
}

pub fn selftest(seed: u64) -> Vec<SelftestRow> {
    WaveletBasisId::ALL
        .iter()
        .map(|&basis| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tape = Tape::new();
            let x = random_image(&mut rng, 64);
            let back = idwt2(&dwt2(&tape, &x, basis).unwrap(), basis).unwrap();
            let pr_error_f64 = back.max_abs_diff(&x);

            let tape32 = Tape::<f32>::new();
            let x32: Tensor<f32> = x.cast();
            let back32 = idwt2(&dwt2(&tape32, &x32, basis).unwrap(), basis).unwrap();
            let pr_error_f32 = back32.max_abs_diff(&x32);

            let dc_gain_error = (basis.bank().dc_gain() - std::f64::consts::SQRT_2).abs();
            let energy_error = basis.is_orthogonal().then(|| {
                let small = random_image(&mut rng, 8);
                let e_in: f64 = small.data().iter().map(|v| v * v).sum();
                let e_out = dwt2(&tape, &small, basis).unwrap().energy();
                (e_out - e_in).abs() / e_in
            });
            let pass = pr_error_f64 < PR_TOL_F64
                && pr_error_f32 < PR_TOL_F32
                && dc_gain_error < DC_TOL
                && energy_error.is_none_or(|e| e < ENERGY_TOL);
            SelftestRow {
                basis,
                taps: basis.bank().len(),
                pr_error_f64,
                pr_error_f32,
                dc_gain_error,
                energy_error,
                pass,
            }
        })
        .collect()
}
