use super::{BackwardOp, Tape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct SumBackward {
    len: usize,
    scale: f64,
}

impl<T: Scalar> BackwardOp<T> for SumBackward {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        vec![Some(vec![grad_out[0] * T::from_f64_lossy(self.scale); self.len])]
    }
}

struct SoftmaxCeBackward<T> {
    /// softmax(logits) − onehot(label), already divided by the position count.
    grad: Vec<T>,
}

impl<T: Scalar> BackwardOp<T> for SoftmaxCeBackward<T> {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        vec![Some(self.grad.iter().map(|&g| g * grad_out[0]).collect())]
    }
}

impl<T: Scalar> Tape<T> {
    pub fn sum(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let s = x.data().iter().fold(T::zero(), |a, &v| a + v);
        let len = x.numel();
        self.record(&[x], Tensor::scalar(s), || Box::new(SumBackward { len, scale: 1.0 }))
    }

    pub fn mean(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let len = x.numel();
        let s = x.data().iter().fold(T::zero(), |a, &v| a + v) / T::from_usize(len).unwrap();
        self.record(&[x], Tensor::scalar(s), || {
            Box::new(SumBackward {
                len,
                scale: 1.0 / len as f64,
            })
        })
    }

    /// Mean softmax cross-entropy.
    ///
    /// `logits` is `[N,K]` (one label per sample) or `[N,K,H,W]` (one label
    /// per pixel, labels in `n, y, x` order). The softmax is computed after
    /// subtracting the per-position maximum.
    pub fn softmax_cross_entropy(&self, logits: &Tensor<T>, labels: &[usize]) -> Result<Tensor<T>> {
        if logits.rank() < 2 {
            return Err(Error::config(format!(
                "cross-entropy: logits must be N×K×..., got {:?}",
                logits.shape()
            )));
        }
        let (n, k) = (logits.shape()[0], logits.shape()[1]);
        let plane: usize = logits.shape()[2..].iter().product();
        let positions = n * plane;
        if labels.len() != positions {
            return Err(Error::config(format!(
                "cross-entropy: {} labels for {positions} positions",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::config(format!(
                "cross-entropy: label {bad} out of range for {k} classes"
            )));
        }
        let data = logits.data();
        let inv = 1.0 / positions as f64;
        let mut grad = vec![T::zero(); data.len()];
        let mut total = 0.0f64;
        let mut probs = vec![0.0f64; k];
        for b in 0..n {
            for p in 0..plane {
                let at = |c: usize| (b * k + c) * plane + p;
                let max = (0..k)
                    .map(|c| data[at(c)].to_f64_lossy())
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for (c, pr) in probs.iter_mut().enumerate() {
                    *pr = (data[at(c)].to_f64_lossy() - max).exp();
                    z += *pr;
                }
                let label = labels[b * plane + p];
                total += z.ln() - (data[at(label)].to_f64_lossy() - max);
                for (c, &pr) in probs.iter().enumerate() {
                    let target = if c == label { 1.0 } else { 0.0 };
                    grad[at(c)] = T::from_f64_lossy((pr / z - target) * inv);
                }
            }
        }
        let loss = Tensor::scalar(T::from_f64_lossy(total * inv));
        self.record(&[logits], loss, || Box::new(SoftmaxCeBackward { grad }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_two() {
        let tape = Tape::<f64>::new();
        let l = tape.softmax_cross_entropy(&Tensor::zeros([1, 2]), &[0]).unwrap();
        assert!((l.item().unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn saturated_logits_do_not_overflow() {
        let tape = Tape::<f32>::new();
        let logits = Tensor::from_f64([1, 2], &[50.0, -50.0]).unwrap();
        let l = tape.softmax_cross_entropy(&logits, &[0]).unwrap().item().unwrap();
        assert!(l.is_finite() && l.abs() < 1e-6);
        let logits = Tensor::from_f64([1, 2], &[1000.0, -1000.0]).unwrap();
        let l = tape.softmax_cross_entropy(&logits, &[1]).unwrap().item().unwrap();
        assert!(l.is_finite());
    }

    #[test]
    fn gradient_is_softmax_minus_onehot() {
        let tape = Tape::<f64>::new();
        let x = tape.watch(&Tensor::new([1, 3], vec![0.2, -1.0, 0.5]).unwrap());
        let l = tape.softmax_cross_entropy(&x, &[2]).unwrap();
        let g = tape.backward(&l).unwrap();
        let e: Vec<f64> = [0.2f64, -1.0, 0.5].iter().map(|v| v.exp()).collect();
        let z: f64 = e.iter().sum();
        let want = [e[0] / z, e[1] / z, e[2] / z - 1.0];
        for (a, b) in g.get(&x).unwrap().data().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn label_out_of_range() {
        let tape = Tape::<f64>::new();
        assert!(tape.softmax_cross_entropy(&Tensor::zeros([2, 3]), &[0, 3]).is_err());
    }
}
