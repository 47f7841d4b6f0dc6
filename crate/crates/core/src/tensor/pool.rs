use serde::{Deserialize, Serialize};

use super::{BackwardOp, Tape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Max,
    Avg,
}

struct MaxPoolBackward {
    input_len: usize,
    argmax: Vec<usize>,
}

impl<T: Scalar> BackwardOp<T> for MaxPoolBackward {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let mut dx = vec![T::zero(); self.input_len];
        for (&src, &g) in self.argmax.iter().zip(grad_out) {
            dx[src] += g;
        }
        vec![Some(dx)]
    }
}

struct AvgPoolBackward {
    dims: [usize; 4],
    k: usize,
    s: usize,
    ho: usize,
    wo: usize,
}

impl<T: Scalar> BackwardOp<T> for AvgPoolBackward {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let [n, c, h, w] = self.dims;
        let inv = T::one() / T::from_usize(self.k * self.k).unwrap();
        let mut dx = vec![T::zero(); n * c * h * w];
        for (dx_plane, g_plane) in dx.chunks_exact_mut(h * w).zip(grad_out.chunks_exact(self.ho * self.wo)) {
            for oy in 0..self.ho {
                for ox in 0..self.wo {
                    let g = g_plane[oy * self.wo + ox] * inv;
                    for ky in 0..self.k {
                        for kx in 0..self.k {
                            dx_plane[(oy * self.s + ky) * w + ox * self.s + kx] += g;
                        }
                    }
                }
            }
        }
        vec![Some(dx)]
    }
}

struct GlobalAvgBackward {
    plane: usize,
}

impl<T: Scalar> BackwardOp<T> for GlobalAvgBackward {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let inv = T::one() / T::from_usize(self.plane).unwrap();
        let dx = grad_out
            .iter()
            .flat_map(|&g| std::iter::repeat_n(g * inv, self.plane))
            .collect();
        vec![Some(dx)]
    }
}

struct UpsampleBackward {
    dims: [usize; 4],
}

impl<T: Scalar> BackwardOp<T> for UpsampleBackward {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let [n, c, h, w] = self.dims;
        let mut dx = vec![T::zero(); n * c * h * w];
        let w2 = 2 * w;
        for (dx_plane, g_plane) in dx.chunks_exact_mut(h * w).zip(grad_out.chunks_exact(4 * h * w)) {
            for y in 0..2 * h {
                for x in 0..w2 {
                    dx_plane[(y / 2) * w + x / 2] += g_plane[y * w2 + x];
                }
            }
        }
        vec![Some(dx)]
    }
}

impl<T: Scalar> Tape<T> {
    /// Window max or mean over `k×k` windows with step `s` (no padding).
    ///
    /// Max routes the gradient to the first maximal element in row-major
    /// window order.
    pub fn pool2d(&self, x: &Tensor<T>, kind: PoolKind, k: usize, s: usize) -> Result<Tensor<T>> {
        let dims @ [n, c, h, w] = x.dims4()?;
        if k == 0 || s == 0 {
            return Err(Error::config("pool2d: window and stride must be positive"));
        }
        for (axis, len) in [("height", h), ("width", w)] {
            if len % s != 0 || len < k {
                return Err(Error::config(format!(
                    "pool2d: input {axis} {len} is not divisible by stride {s}"
                )));
            }
        }
        let ho = (h - k) / s + 1;
        let wo = (w - k) / s + 1;
        let mut out = Vec::with_capacity(n * c * ho * wo);
        let mut argmax = Vec::new();
        let data = x.data();
        match kind {
            PoolKind::Max => {
                argmax.reserve(n * c * ho * wo);
                for p in 0..n * c {
                    let base = p * h * w;
                    for oy in 0..ho {
                        for ox in 0..wo {
                            let mut best = base + oy * s * w + ox * s;
                            for ky in 0..k {
                                for kx in 0..k {
                                    let idx = base + (oy * s + ky) * w + ox * s + kx;
                                    if data[idx] > data[best] {
                                        best = idx;
                                    }
                                }
                            }
                            argmax.push(best);
                            out.push(data[best]);
                        }
                    }
                }
            }
            PoolKind::Avg => {
                let inv = T::one() / T::from_usize(k * k).unwrap();
                for p in 0..n * c {
                    let base = p * h * w;
                    for oy in 0..ho {
                        for ox in 0..wo {
                            // Column sums first, then across columns.
                            let mut acc = T::zero();
                            for kx in 0..k {
                                let mut col = T::zero();
                                for ky in 0..k {
                                    col += data[base + (oy * s + ky) * w + ox * s + kx];
                                }
                                acc += col;
                            }
                            out.push(acc * inv);
                        }
                    }
                }
            }
        }
        let output = Tensor::from_parts(vec![n, c, ho, wo], out);
        self.record(&[x], output, move || match kind {
            PoolKind::Max => Box::new(MaxPoolBackward {
                input_len: n * c * h * w,
                argmax,
            }) as Box<dyn BackwardOp<T>>,
            PoolKind::Avg => Box::new(AvgPoolBackward { dims, k, s, ho, wo }),
        })
    }

    /// `[N,C,H,W] → [N,C]` spatial mean.
    pub fn global_avg_pool(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let [n, c, h, w] = x.dims4()?;
        let plane = h * w;
        let inv = T::one() / T::from_usize(plane).unwrap();
        let out = x
            .data()
            .chunks_exact(plane)
            .map(|p| p.iter().fold(T::zero(), |a, &v| a + v) * inv)
            .collect();
        let output = Tensor::from_parts(vec![n, c], out);
        self.record(&[x], output, || Box::new(GlobalAvgBackward { plane }))
    }

    /// Nearest-neighbour ×2 up-sampling.
    pub fn upsample_nearest2(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let dims @ [n, c, h, w] = x.dims4()?;
        let mut out = Vec::with_capacity(n * c * 4 * h * w);
        for plane in x.data().chunks_exact(h * w) {
            for y in 0..2 * h {
                let row = &plane[(y / 2) * w..][..w];
                for &v in row {
                    out.push(v);
                    out.push(v);
                }
            }
        }
        let output = Tensor::from_parts(vec![n, c, 2 * h, 2 * w], out);
        self.record(&[x], output, || Box::new(UpsampleBackward { dims }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Tensor<f64> {
        Tensor::new([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn max_and_avg_of_two_by_two() {
        let tape = Tape::new();
        assert_eq!(tape.pool2d(&square(), PoolKind::Max, 2, 2).unwrap().data(), &[4.0]);
        assert_eq!(tape.pool2d(&square(), PoolKind::Avg, 2, 2).unwrap().data(), &[2.5]);
    }

    #[test]
    fn constant_image_stays_constant() {
        let tape = Tape::new();
        let x = Tensor::<f64>::full([2, 3, 8, 8], 0.7);
        for kind in [PoolKind::Max, PoolKind::Avg] {
            let y = tape.pool2d(&x, kind, 2, 2).unwrap();
            assert_eq!(y.shape(), &[2, 3, 4, 4]);
            assert!(y.data().iter().all(|&v| v == 0.7));
        }
    }

    #[test]
    fn odd_extent_rejected() {
        let tape = Tape::new();
        let x = Tensor::<f64>::zeros([1, 1, 5, 4]);
        assert!(matches!(tape.pool2d(&x, PoolKind::Max, 2, 2), Err(Error::Config(_))));
    }

    #[test]
    fn max_gradient_goes_to_first_tie() {
        let tape = Tape::new();
        let x = tape.watch(&Tensor::new([1, 1, 2, 2], vec![3.0, 3.0, 1.0, 3.0]).unwrap());
        let y = tape.pool2d(&x, PoolKind::Max, 2, 2).unwrap();
        let g = tape.backward(&tape.sum(&y).unwrap()).unwrap();
        assert_eq!(g.get(&x).unwrap().data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn upsample_repeats_pixels() {
        let tape = Tape::new();
        let y = tape.upsample_nearest2(&square()).unwrap();
        assert_eq!(y.shape(), &[1, 1, 4, 4]);
        assert_eq!(
            y.data(),
            &[1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 3.0, 3.0, 4.0, 4.0]
        );
    }
}
