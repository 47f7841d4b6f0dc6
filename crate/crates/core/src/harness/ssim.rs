use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;
use crate::tensor::{Tape, Tensor};
use crate::wavelet::{wavedec_ll, WaveletBasisId};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Normalised 1-D Gaussian; the 2-D window is its outer product.
pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut g = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    for (i, v) in g.iter_mut().enumerate() {
        *v = (-((i as f64 - mid).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Valid-mode separable filtering of an `h×w` map.
fn filter(x: &[f64], h: usize, w: usize, g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let (ho, wo) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * wo];
    for r in 0..h {
        for c in 0..wo {
            rows[r * wo + c] = g.iter().zip(&x[r * w + c..]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ho * wo];
    for r in 0..ho {
        for c in 0..wo {
            out[r * wo + c] = g.iter().enumerate().map(|(i, a)| a * rows[(r + i) * wo + c]).sum();
        }
    }
    out
}

/// Mean SSIM over all fully-contained 11×11 Gaussian windows (σ = 1.5) of
/// two `h×w` maps, with dynamic range `L = 1`.
pub fn ssim(a: &[f64], b: &[f64], h: usize, w: usize) -> Result<f64> {
    if a.len() != h * w || b.len() != h * w {
        return Err(Error::config(format!(
            "ssim: inputs of {} and {} values for a {h}×{w} map",
            a.len(),
            b.len()
        )));
    }
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::config(format!(
            "ssim: {h}×{w} map is smaller than the {SSIM_WINDOW}×{SSIM_WINDOW} window"
        )));
    }
    let g = gaussian_window();
    let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_a = filter(a, h, w, &g);
    let mu_b = filter(b, h, w, &g);
    let aa = filter(&prod(a, a), h, w, &g);
    let bb = filter(&prod(b, b), h, w, &g);
    let ab = filter(&prod(a, b), h, w, &g);
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

/// `ssim` on two `[H, W]` tensors.
pub fn ssim_tensors<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<f64> {
    if a.rank() != 2 || a.shape() != b.shape() {
        return Err(Error::config(format!(
            "ssim: expected two equal [H, W] maps, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    ssim(&a.to_f64_vec(), &b.to_f64_vec(), a.shape()[0], a.shape()[1])
}

/// Rescales to `[0, 1]`; a constant map becomes all zeros.
pub fn min_max_normalize(x: &mut [f64]) {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in x.iter_mut() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

/// Channel means of an `[N,C,H,W]` tensor, one `H×W` map per sample.
fn channel_means<T: Scalar>(x: &Tensor<T>) -> Result<Vec<Vec<f64>>> {
    let [n, c, h, w] = x.dims4()?;
    let d = x.to_f64_vec();
    let plane = h * w;
    Ok((0..n)
        .map(|s| {
            let mut m = vec![0.0; plane];
            for ch in 0..c {
                let src = &d[(s * c + ch) * plane..][..plane];
                m.iter_mut().zip(src).for_each(|(a, b)| *a += b);
            }
            m.iter_mut().for_each(|v| *v /= c as f64);
            m
        })
        .collect())
}

/// Mean over samples of SSIM between the normalised channel mean of `feat`
/// and the normalised `reference` maps.
fn mean_ssim<T: Scalar>(feat: &Tensor<T>, reference: &[Vec<f64>]) -> Result<f64> {
    let [n, _, h, w] = feat.dims4()?;
    let maps = channel_means(feat)?;
    let mut total = 0.0;
    for (mut m, r) in maps.into_iter().zip(reference) {
        min_max_normalize(&mut m);
        total += ssim(&m, r, h, w)?;
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthProfile {
    /// Mean SSIM of node `k`'s feature against the level-`k` image LL, for
    /// `k = 0..=nodes` (node 0 is the stem).
    pub features: Vec<f64>,
    /// Same for the memory tensor at nodes with a memory unit.
    pub memories: Vec<Option<f64>>,
}

/// Normalised grayscale LL pyramid levels `0..=levels` of `[N,C,H,W]` images.
fn reference_pyramid<T: Scalar>(
    images: &Tensor<T>,
    basis: WaveletBasisId,
    levels: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let [n, _, h, w] = images.dims4()?;
    let gray: Vec<f64> = channel_means(images)?.concat();
    let gray = Tensor::<f64>::new([n, 1, h, w], gray)?;
    let tape = Tape::new();
    let mut out = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let ll = if k == 0 {
            gray.clone()
        } else {
            wavedec_ll(&tape, &gray, basis, k)?
        };
        let mut maps = channel_means(&ll)?;
        maps.iter_mut().for_each(|m| min_max_normalize(m));
        out.push(maps);
    }
    Ok(out)
}

/// Profile from explicit taps: `taps[k]` is the `[N,C,H/2^k,W/2^k]` feature
/// at node `k`, `memories[k]` the optional memory there.
pub fn profile_from_taps<T: Scalar>(
    taps: &[Tensor<T>],
    memories: &[Option<Tensor<T>>],
    images: &Tensor<T>,
    basis: WaveletBasisId,
) -> Result<DepthProfile> {
    if taps.is_empty() {
        return Err(Error::config("ssim profile: graph exposes no taps"));
    }
    let levels = taps.len() - 1;
    let reference = reference_pyramid(images, basis, levels)?;
    let features = taps
        .iter()
        .zip(&reference)
        .map(|(t, r)| mean_ssim(t, r))
        .collect::<Result<Vec<_>>>()?;
    let memories = (0..taps.len())
        .map(|k| match memories.get(k) {
            Some(Some(m)) => mean_ssim(m, &reference[k]).map(Some),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DepthProfile { features, memories })
}

/// Figure-2 style profile: per-node SSIM between features and the image's
/// wavelet LL at the same resolution, averaged over `images`.
///
/// The graph's input resolution must leave every node map at least 11×11.
pub fn ssim_depth_profile<T: Scalar>(g: &Graph<T>, images: &Tensor<T>, basis: WaveletBasisId) -> Result<DepthProfile> {
    let mut taps = Vec::new();
    let mut memories = Vec::new();
    let idx: Vec<usize> = (0..images.dims4()?[0]).collect();
    let [_, c, h, w] = images.dims4()?;
    let plane = c * h * w;
    // Forward in small batches to bound activation memory at large inputs.
    for chunk in idx.chunks(4) {
        let x = Tensor::new(
            [chunk.len(), c, h, w],
            images.data()[chunk[0] * plane..(chunk[0] + chunk.len()) * plane].to_vec(),
        )?;
        let out = g.forward(&x)?;
        taps.push(out.taps);
        memories.push(out.memories);
    }
    let stack = |parts: Vec<&Tensor<T>>| -> Result<Tensor<T>> {
        let mut shape = parts[0].shape().to_vec();
        shape[0] = parts.iter().map(|p| p.shape()[0]).sum();
        Tensor::new(shape, parts.iter().flat_map(|p| p.data().iter().copied()).collect())
    };
    let nodes = taps[0].len();
    let taps = (0..nodes)
        .map(|k| stack(taps.iter().map(|t| &t[k]).collect()))
        .collect::<Result<Vec<_>>>()?;
    let memories = (0..nodes)
        .map(|k| match memories[0][k] {
            Some(_) => stack(memories.iter().map(|m| m[k].as_ref().unwrap()).collect()).map(Some),
            None => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    profile_from_taps(&taps, &memories, images, basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_maps_score_one() {
        let a: Vec<f64> = (0..256).map(|i| ((i * 37) % 17) as f64 / 17.0).collect();
        assert_eq!(ssim(&a, &a, 16, 16).unwrap(), 1.0);
    }

    #[test]
    fn rejects_small_or_mismatched() {
        let a = vec![0.0; 100];
        assert!(ssim(&a, &a, 10, 10).is_err());
        assert!(ssim(&a, &a[..99], 10, 10).is_err());
    }

    #[test]
    fn window_sums_to_one() {
        assert!((gaussian_window().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
