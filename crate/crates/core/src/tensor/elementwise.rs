use super::{check_same_shape, BackwardOp, Tape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Relu,
    Sigmoid,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Mul,
}

impl UnaryOp {
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            // never produces -0.0, so adding a zero injection later is exact
            UnaryOp::Relu => {
                if x > T::zero() {
                    x
                } else {
                    T::zero()
                }
            }
            UnaryOp::Sigmoid => T::one() / (T::one() + (-x).exp()),
            UnaryOp::Tanh => x.tanh(),
        }
    }
}

struct UnaryBackward<T> {
    op: UnaryOp,
    x: Tensor<T>,
    y: Tensor<T>,
}

impl<T: Scalar> BackwardOp<T> for UnaryBackward<T> {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let one = T::one();
        let dx = match self.op {
            UnaryOp::Relu => grad_out
                .iter()
                .zip(self.x.data())
                .map(|(&g, &x)| if x > T::zero() { g } else { T::zero() })
                .collect(),
            UnaryOp::Sigmoid => grad_out
                .iter()
                .zip(self.y.data())
                .map(|(&g, &y)| g * y * (one - y))
                .collect(),
            UnaryOp::Tanh => grad_out
                .iter()
                .zip(self.y.data())
                .map(|(&g, &y)| g * (one - y * y))
                .collect(),
        };
        vec![Some(dx)]
    }
}

struct BinaryBackward<T> {
    op: BinaryOp,
    a: Tensor<T>,
    b: Tensor<T>,
}

impl<T: Scalar> BackwardOp<T> for BinaryBackward<T> {
    fn backward(&self, grad_out: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        match self.op {
            BinaryOp::Add => vec![needs[0].then(|| grad_out.to_vec()), needs[1].then(|| grad_out.to_vec())],
            BinaryOp::Mul => vec![
                needs[0].then(|| grad_out.iter().zip(self.b.data()).map(|(&g, &b)| g * b).collect()),
                needs[1].then(|| grad_out.iter().zip(self.a.data()).map(|(&g, &a)| g * a).collect()),
            ],
        }
    }
}

struct AffineBackward<T> {
    channels: usize,
    plane: usize,
    x: Tensor<T>,
    scale: Tensor<T>,
}

impl<T: Scalar> BackwardOp<T> for AffineBackward<T> {
    fn backward(&self, grad_out: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let c = self.channels;
        let plane = self.plane;
        let dx = needs[0].then(|| {
            let mut dx = grad_out.to_vec();
            for (i, chunk) in dx.chunks_exact_mut(plane).enumerate() {
                let s = self.scale.data()[i % c];
                chunk.iter_mut().for_each(|v| *v *= s);
            }
            dx
        });
        let ds = needs[1].then(|| {
            let mut ds = vec![T::zero(); c];
            for (i, (g, x)) in grad_out
                .chunks_exact(plane)
                .zip(self.x.data().chunks_exact(plane))
                .enumerate()
            {
                ds[i % c] += g.iter().zip(x).fold(T::zero(), |acc, (&g, &x)| acc + g * x);
            }
            ds
        });
        let db = needs[2].then(|| {
            let mut db = vec![T::zero(); c];
            for (i, g) in grad_out.chunks_exact(plane).enumerate() {
                db[i % c] += g.iter().fold(T::zero(), |acc, &v| acc + v);
            }
            db
        });
        vec![dx, ds, db]
    }
}

impl<T: Scalar> Tape<T> {
    pub fn unary(&self, x: &Tensor<T>, op: UnaryOp) -> Result<Tensor<T>> {
        let out = x.data().iter().map(|&v| op.apply(v)).collect();
        let output = Tensor::from_parts(x.shape().to_vec(), out);
        let saved = output.clone();
        self.record(&[x], output, || {
            Box::new(UnaryBackward {
                op,
                x: x.detach(),
                y: saved,
            })
        })
    }

    pub fn relu(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.unary(x, UnaryOp::Relu)
    }

    pub fn sigmoid(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.unary(x, UnaryOp::Sigmoid)
    }

    pub fn tanh(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.unary(x, UnaryOp::Tanh)
    }

    pub fn binary(&self, a: &Tensor<T>, b: &Tensor<T>, op: BinaryOp) -> Result<Tensor<T>> {
        check_same_shape(
            match op {
                BinaryOp::Add => "add",
                BinaryOp::Mul => "mul",
            },
            a,
            b,
        )?;
        let out = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| match op {
                BinaryOp::Add => x + y,
                BinaryOp::Mul => x * y,
            })
            .collect();
        let output = Tensor::from_parts(a.shape().to_vec(), out);
        self.record(&[a, b], output, || {
            Box::new(BinaryBackward {
                op,
                a: a.detach(),
                b: b.detach(),
            })
        })
    }

    pub fn add(&self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary(a, b, BinaryOp::Add)
    }

    pub fn mul(&self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        self.binary(a, b, BinaryOp::Mul)
    }

    /// Per-channel `x·scale[c] + bias[c]` over `x[N,C,...]`.
    pub fn affine(&self, x: &Tensor<T>, scale: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() < 2 {
            return Err(Error::config(format!(
                "affine: input must be N×C×..., got {:?}",
                x.shape()
            )));
        }
        let c = x.shape()[1];
        if scale.shape() != [c] || bias.shape() != [c] {
            return Err(Error::config(format!(
                "affine: scale {:?} / bias {:?} do not match {c} channels",
                scale.shape(),
                bias.shape()
            )));
        }
        let plane: usize = x.shape()[2..].iter().product();
        let mut out = x.data().to_vec();
        for (i, chunk) in out.chunks_exact_mut(plane).enumerate() {
            let (s, b) = (scale.data()[i % c], bias.data()[i % c]);
            chunk.iter_mut().for_each(|v| *v = *v * s + b);
        }
        let output = Tensor::from_parts(x.shape().to_vec(), out);
        self.record(&[x, scale, bias], output, || {
            Box::new(AffineBackward {
                channels: c,
                plane,
                x: x.detach(),
                scale: scale.detach(),
            })
        })
    }
}
