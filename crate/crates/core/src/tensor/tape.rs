use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

/// Handle of a tracked tensor: owning tape plus record index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GradId {
    tape: u64,
    index: usize,
}

/// Backward rule of one recorded operation.
///
/// `needs[i]` is false for inputs that are not tracked; the rule may return
/// `None` for those and skip the work.
pub(crate) trait BackwardOp<T> {
    fn backward(&self, grad_out: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>>;
}

struct Record<T> {
    inputs: Vec<Option<usize>>,
    numel: usize,
    shape: Vec<usize>,
    op: Option<Box<dyn BackwardOp<T>>>,
}

/// Ordered log of differentiable operations executed on one thread.
pub struct Tape<T> {
    id: u64,
    records: RefCell<Vec<Record<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        super::heap::retain_freed_buffers();
        Self {
            id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed),
            records: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.records.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers `t` as a leaf whose gradient will be reported by
    /// [`Tape::backward`].
    pub fn watch(&self, t: &Tensor<T>) -> Tensor<T> {
        let mut records = self.records.borrow_mut();
        let index = records.len();
        records.push(Record {
            inputs: Vec::new(),
            numel: t.numel(),
            shape: t.shape().to_vec(),
            op: None,
        });
        t.detach().with_grad(GradId { tape: self.id, index })
    }

    fn index_of(&self, t: &Tensor<T>) -> Result<Option<usize>> {
        match t.grad_id() {
            None => Ok(None),
            Some(id) if id.tape == self.id => Ok(Some(id.index)),
            Some(_) => Err(Error::Autodiff("tensor belongs to a different tape".into())),
        }
    }

    /// Wraps a freshly computed output; records `make_op` only if any input
    /// is tracked.
    pub(crate) fn record<F>(&self, inputs: &[&Tensor<T>], output: Tensor<T>, make_op: F) -> Result<Tensor<T>>
    where
        F: FnOnce() -> Box<dyn BackwardOp<T>>,
    {
        let mut ids = Vec::with_capacity(inputs.len());
        for t in inputs {
            ids.push(self.index_of(t)?);
        }
        if ids.iter().all(Option::is_none) {
            return Ok(output);
        }
        let op = make_op();
        let mut records = self.records.borrow_mut();
        let index = records.len();
        records.push(Record {
            inputs: ids,
            numel: output.numel(),
            shape: output.shape().to_vec(),
            op: Some(op),
        });
        Ok(output.with_grad(GradId { tape: self.id, index }))
    }

    /// Reverse sweep from a scalar loss. Gradients accumulate additively where
    /// a value fans out; only leaves created by [`Tape::watch`] are returned.
    pub fn backward(&self, loss: &Tensor<T>) -> Result<Gradients<T>> {
        if loss.numel() != 1 {
            return Err(Error::Autodiff(format!(
                "backward needs a scalar loss, got shape {:?}",
                loss.shape()
            )));
        }
        let start = self
            .index_of(loss)?
            .ok_or_else(|| Error::Autodiff("loss is not tracked by this tape".into()))?;
        let records = self.records.borrow();
        let mut grads: Vec<Option<Vec<T>>> = (0..records.len()).map(|_| None).collect();
        grads[start] = Some(vec![T::one()]);
        let mut leaves = HashMap::new();

        for index in (0..=start).rev() {
            let Some(grad) = grads[index].take() else { continue };
            let record = &records[index];
            let Some(op) = &record.op else {
                leaves.insert(index, Tensor::from_parts(record.shape.clone(), grad));
                continue;
            };
            let needs: Vec<bool> = record.inputs.iter().map(Option::is_some).collect();
            let input_grads = op.backward(&grad, &needs);
            debug_assert_eq!(input_grads.len(), record.inputs.len());
            for (slot, g) in record.inputs.iter().zip(input_grads) {
                let (Some(src), Some(g)) = (slot, g) else { continue };
                debug_assert_eq!(g.len(), records[*src].numel);
                match &mut grads[*src] {
                    Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += *b),
                    empty => *empty = Some(g),
                }
            }
        }
        Ok(Gradients { tape: self.id, leaves })
    }
}

/// Leaf gradients produced by one backward sweep.
pub struct Gradients<T> {
    tape: u64,
    leaves: HashMap<usize, Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of a watched leaf. `None` if the leaf did not influence the
    /// loss or the tensor is untracked.
    pub fn get(&self, t: &Tensor<T>) -> Option<&Tensor<T>> {
        let id = t.grad_id()?;
        if id.tape != self.tape {
            return None;
        }
        self.leaves.get(&id.index)
    }

    /// Like [`Gradients::get`] but substitutes zeros for leaves that received
    /// no gradient.
    pub fn get_or_zeros(&self, t: &Tensor<T>) -> Tensor<T> {
        self.get(t)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(t.shape().to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::BinaryOp;

    #[test]
    fn sum_of_squares_gives_twice_x() {
        let tape = Tape::<f64>::new();
        let x = tape.watch(&Tensor::new([3], vec![1.0, -2.0, 0.5]).unwrap());
        let sq = tape.binary(&x, &x, BinaryOp::Mul).unwrap();
        let loss = tape.sum(&sq).unwrap();
        let g = tape.backward(&loss).unwrap();
        assert_eq!(g.get(&x).unwrap().data(), &[2.0, -4.0, 1.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        let tape = Tape::<f64>::new();
        let x = tape.watch(&Tensor::new([2, 2], vec![0.3, 1.0, -4.0, 2.0]).unwrap());
        let y = tape.binary(&x, &x, BinaryOp::Add).unwrap();
        let loss = tape.sum(&y).unwrap();
        let g = tape.backward(&loss).unwrap();
        assert_eq!(g.get(&x).unwrap().data(), &[2.0; 4]);
    }

    #[test]
    fn untracked_inputs_record_nothing() {
        let tape = Tape::<f64>::new();
        let x = Tensor::new([2], vec![1.0, 2.0]).unwrap();
        let y = tape.binary(&x, &x, BinaryOp::Add).unwrap();
        assert!(!y.requires_grad());
        assert!(tape.is_empty());
    }

    #[test]
    fn untracked_tensor_never_gets_gradient() {
        let tape = Tape::<f64>::new();
        let x = tape.watch(&Tensor::new([2], vec![1.0, 2.0]).unwrap());
        let c = Tensor::new([2], vec![3.0, 4.0]).unwrap();
        let loss = tape.sum(&tape.binary(&x, &c, BinaryOp::Mul).unwrap()).unwrap();
        let g = tape.backward(&loss).unwrap();
        assert!(g.get(&c).is_none());
        assert_eq!(g.get(&x).unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn rejects_non_scalar_and_foreign_losses() {
        let tape = Tape::<f64>::new();
        let other = Tape::<f64>::new();
        let x = tape.watch(&Tensor::new([2], vec![1.0, 2.0]).unwrap());
        assert!(matches!(tape.backward(&x), Err(Error::Autodiff(_))));
        let s = tape.sum(&x).unwrap();
        assert!(matches!(other.backward(&s), Err(Error::Autodiff(_))));
        let y = other.watch(&Tensor::new([2], vec![1.0, 2.0]).unwrap());
        assert!(tape.binary(&x, &y, BinaryOp::Add).is_err());
    }
}
