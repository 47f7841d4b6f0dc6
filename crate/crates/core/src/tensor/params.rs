use std::collections::BTreeMap;

use super::{Checkpoint, Tape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Named parameter tensors in sorted (checkpoint) order.
#[derive(Clone, Default)]
pub struct ParamStore<T> {
    tensors: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            tensors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor<T>) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(Error::config(format!("parameter `{name}` declared twice")));
        }
        self.tensors.insert(name, t);
        Ok(())
    }

    pub fn replace(&mut self, name: &str, t: Tensor<T>) -> Result<()> {
        let slot = self
            .tensors
            .get_mut(name)
            .ok_or_else(|| Error::config(format!("unknown parameter `{name}`")))?;
        if slot.shape() != t.shape() {
            return Err(Error::config(format!(
                "parameter `{name}`: shape {:?} does not match {:?}",
                t.shape(),
                slot.shape()
            )));
        }
        *slot = t.detach();
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::config(format!("missing parameter `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.tensors.values().map(Tensor::numel).sum()
    }

    /// Copy in which every tensor is a watched leaf of `tape`.
    pub fn watch(&self, tape: &Tape<T>) -> Self {
        Self {
            tensors: self.tensors.iter().map(|(k, v)| (k.clone(), tape.watch(v))).collect(),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        for (name, t) in &self.tensors {
            ck.insert(name, t);
        }
        ck
    }

    /// Loads values for every parameter already declared in `self`.
    /// Missing entries and shape changes are errors; extra entries are not.
    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        for (name, slot) in self.tensors.iter_mut() {
            let t: Tensor<T> = ck.get(name)?;
            if t.shape() != slot.shape() {
                return Err(Error::Checkpoint(format!(
                    "`{name}` has shape {:?}, expected {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t;
        }
        Ok(())
    }
}
