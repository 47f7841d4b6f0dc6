use super::{BackwardOp, Tape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

struct ConcatBackward {
    n: usize,
    plane: usize,
    channels: Vec<usize>,
}

impl<T: Scalar> BackwardOp<T> for ConcatBackward {
    fn backward(&self, grad_out: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let total: usize = self.channels.iter().sum();
        let mut offset = 0;
        let mut out = Vec::with_capacity(self.channels.len());
        for (&c, &need) in self.channels.iter().zip(needs) {
            out.push(need.then(|| {
                let mut g = Vec::with_capacity(self.n * c * self.plane);
                for n in 0..self.n {
                    g.extend_from_slice(&grad_out[(n * total + offset) * self.plane..][..c * self.plane]);
                }
                g
            }));
            offset += c;
        }
        out
    }
}

struct SliceBackward {
    n: usize,
    plane: usize,
    channels: usize,
    start: usize,
    len: usize,
}

impl<T: Scalar> BackwardOp<T> for SliceBackward {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let mut dx = vec![T::zero(); self.n * self.channels * self.plane];
        for n in 0..self.n {
            dx[(n * self.channels + self.start) * self.plane..][..self.len * self.plane]
                .copy_from_slice(&grad_out[n * self.len * self.plane..][..self.len * self.plane]);
        }
        vec![Some(dx)]
    }
}

impl<T: Scalar> Tape<T> {
    /// Concatenates `[N,Ci,...]` tensors along the channel axis.
    pub fn concat_channels(&self, parts: &[&Tensor<T>]) -> Result<Tensor<T>> {
        let first = parts.first().ok_or_else(|| Error::config("concat: no inputs"))?;
        if first.rank() < 2 {
            return Err(Error::config("concat: inputs must be N×C×..."));
        }
        let n = first.shape()[0];
        let rest = &first.shape()[2..];
        let plane: usize = rest.iter().product();
        for p in parts {
            if p.rank() != first.rank() || p.shape()[0] != n || &p.shape()[2..] != rest {
                return Err(Error::config(format!(
                    "concat: shape {:?} incompatible with {:?}",
                    p.shape(),
                    first.shape()
                )));
            }
        }
        let channels: Vec<usize> = parts.iter().map(|p| p.shape()[1]).collect();
        let total: usize = channels.iter().sum();
        let mut out = Vec::with_capacity(n * total * plane);
        for b in 0..n {
            for (p, &c) in parts.iter().zip(&channels) {
                out.extend_from_slice(&p.data()[b * c * plane..][..c * plane]);
            }
        }
        let mut shape = first.shape().to_vec();
        shape[1] = total;
        let output = Tensor::from_parts(shape, out);
        self.record(parts, output, || Box::new(ConcatBackward { n, plane, channels }))
    }

    /// Channels `start..start+len` of `x[N,C,...]`.
    pub fn slice_channels(&self, x: &Tensor<T>, start: usize, len: usize) -> Result<Tensor<T>> {
        if x.rank() < 2 {
            return Err(Error::config("slice: input must be N×C×..."));
        }
        let (n, channels) = (x.shape()[0], x.shape()[1]);
        if len == 0 || start + len > channels {
            return Err(Error::config(format!(
                "slice: channels {start}..{} out of range for {channels}",
                start + len
            )));
        }
        let plane: usize = x.shape()[2..].iter().product();
        let mut out = Vec::with_capacity(n * len * plane);
        for b in 0..n {
            out.extend_from_slice(&x.data()[(b * channels + start) * plane..][..len * plane]);
        }
        let mut shape = x.shape().to_vec();
        shape[1] = len;
        let output = Tensor::from_parts(shape, out);
        self.record(&[x], output, || {
            Box::new(SliceBackward {
                n,
                plane,
                channels,
                start,
                len,
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_then_slice_round_trips() {
        let tape = Tape::<f64>::new();
        let a = Tensor::from_fn([2, 1, 2, 2], |i| i as f64);
        let b = Tensor::from_fn([2, 3, 2, 2], |i| 100.0 + i as f64);
        let c = tape.concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.shape(), &[2, 4, 2, 2]);
        assert!(tape.slice_channels(&c, 0, 1).unwrap().bitwise_eq(&a));
        assert!(tape.slice_channels(&c, 1, 3).unwrap().bitwise_eq(&b));
        assert!(tape.slice_channels(&c, 2, 3).is_err());
    }
}
