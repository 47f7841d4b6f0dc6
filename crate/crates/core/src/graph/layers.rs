use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::{kaiming_uniform, param_rng, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// Square `k×k` kernel, optional bias.
    Conv {
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        bias: bool,
    },
    Linear {
        cin: usize,
        cout: usize,
    },
    /// Per-channel scale and bias.
    Affine {
        c: usize,
    },
}

/// One parameterised layer. `level` is the log2 resolution divisor of the
/// layer's output relative to the network input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerDecl {
    pub name: String,
    pub kind: LayerKind,
    pub level: usize,
    /// Zero weights (conv/linear) or zero scale (affine).
    pub zero_init: bool,
}

impl LayerDecl {
    pub fn conv(name: impl Into<String>, cin: usize, cout: usize, k: usize, stride: usize, level: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Conv {
                cin,
                cout,
                k,
                stride,
                pad: k / 2,
                bias: false,
            },
            level,
            zero_init: false,
        }
    }

    pub fn conv1x1_bias(name: impl Into<String>, cin: usize, cout: usize, level: usize, zero_init: bool) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Conv {
                cin,
                cout,
                k: 1,
                stride: 1,
                pad: 0,
                bias: true,
            },
            level,
            zero_init,
        }
    }

    pub fn affine(name: impl Into<String>, c: usize, level: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Affine { c },
            level,
            zero_init: false,
        }
    }

    pub fn linear(name: impl Into<String>, cin: usize, cout: usize) -> Self {
        Self {
            name: name.into(),
            kind: LayerKind::Linear { cin, cout },
            level: 0,
            zero_init: false,
        }
    }

    pub fn zeroed(mut self) -> Self {
        self.zero_init = true;
        self
    }

    /// `(parameter name, shape)` pairs in declaration order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let n = |suffix: &str| format!("{}.{suffix}", self.name);
        match self.kind {
            LayerKind::Conv { cin, cout, k, bias, .. } => {
                let mut v = vec![(n("weight"), vec![cout, cin, k, k])];
                if bias {
                    v.push((n("bias"), vec![cout]));
                }
                v
            }
            LayerKind::Linear { cin, cout } => vec![(n("weight"), vec![cout, cin]), (n("bias"), vec![cout])],
            LayerKind::Affine { c } => vec![(n("scale"), vec![c]), (n("bias"), vec![c])],
        }
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }

    /// Multiply-accumulates for one sample of spatial size `h×w`:
    /// `Cin·Kh·Kw·Cout·Hout·Wout` for convolutions, `Cin·Cout` for linear layers.
    pub fn macs(&self, h: usize, w: usize) -> u64 {
        let (ho, wo) = ((h >> self.level) as u64, (w >> self.level) as u64);
        match self.kind {
            LayerKind::Conv { cin, cout, k, .. } => (cin * k * k * cout) as u64 * ho * wo,
            LayerKind::Linear { cin, cout } => (cin * cout) as u64,
            LayerKind::Affine { .. } => 0,
        }
    }

    pub fn init_params<T: Scalar>(&self, seed: u64, store: &mut ParamStore<T>) -> Result<()> {
        for (name, shape) in self.param_shapes() {
            let is_weight = name.ends_with(".weight");
            let t = match self.kind {
                LayerKind::Conv { cin, k, .. } if is_weight && !self.zero_init => {
                    kaiming_uniform(&shape, cin * k * k, &mut param_rng(seed, &name))
                }
                LayerKind::Linear { cin, .. } if is_weight && !self.zero_init => {
                    kaiming_uniform(&shape, cin, &mut param_rng(seed, &name))
                }
                LayerKind::Affine { .. } if name.ends_with(".scale") && !self.zero_init => {
                    Tensor::full(shape, T::one())
                }
                _ => Tensor::zeros(shape),
            };
            store.insert(name, t)?;
        }
        Ok(())
    }
}
