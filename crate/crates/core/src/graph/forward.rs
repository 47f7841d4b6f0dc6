use super::{Arch, Graph, SegMode};
use crate::error::{Error, Result};
use crate::lfmu::{lfmu_init, lfmu_step, memory_details, LfmuState};
use crate::scalar::Scalar;
use crate::tensor::{ParamStore, Tape, Tensor};

#[derive(Debug, Clone)]
pub struct ForwardOutput<T: Scalar> {
    /// Logits `[N,K]` for classifiers, `[N,K,H,W]` for segmentation.
    pub output: Tensor<T>,
    /// `taps[0]` is the stem output, `taps[k]` the feature leaving node `k`
    /// (after any memory injection).
    pub taps: Vec<Tensor<T>>,
    /// Memory after node `k`, when a unit is attached there.
    pub memories: Vec<Option<Tensor<T>>>,
}

struct Ctx<'a, T: Scalar> {
    tape: &'a Tape<T>,
    params: &'a ParamStore<T>,
}

impl<T: Scalar> Ctx<'_, T> {
    fn p(&self, name: &str) -> Result<&Tensor<T>> {
        self.params.get(name)
    }

    fn conv(&self, x: &Tensor<T>, name: &str, stride: usize) -> Result<Tensor<T>> {
        let w = self.p(&format!("{name}.weight"))?;
        let pad = w.shape()[2] / 2;
        let bias_name = format!("{name}.bias");
        let bias = if self.params.contains(&bias_name) {
            Some(self.p(&bias_name)?)
        } else {
            None
        };
        self.tape.conv2d(x, w, bias, stride, pad)
    }

    fn affine(&self, x: &Tensor<T>, name: &str) -> Result<Tensor<T>> {
        self.tape
            .affine(x, self.p(&format!("{name}.scale"))?, self.p(&format!("{name}.bias"))?)
    }

    fn conv_norm_relu(&self, x: &Tensor<T>, conv: &str, norm: &str, stride: usize) -> Result<Tensor<T>> {
        self.tape.relu(&self.affine(&self.conv(x, conv, stride)?, norm)?)
    }

    fn block(&self, x: &Tensor<T>, p: &str) -> Result<Tensor<T>> {
        let h = self.conv_norm_relu(x, &format!("{p}.conv1"), &format!("{p}.norm1"), 1)?;
        let h = self.affine(&self.conv(&h, &format!("{p}.conv2"), 1)?, &format!("{p}.norm2"))?;
        self.tape.relu(&self.tape.add(x, &h)?)
    }

    fn stage(&self, x: &Tensor<T>, k: usize) -> Result<Tensor<T>> {
        let mut h = self.conv_norm_relu(x, &format!("stage{k}.down.conv"), &format!("stage{k}.down.norm"), 2)?;
        for b in 0..2 {
            h = self.block(&h, &format!("stage{k}.block{b}"))?;
        }
        Ok(h)
    }
}

pub(super) fn run<T: Scalar>(
    g: &Graph<T>,
    tape: &Tape<T>,
    params: &ParamStore<T>,
    x: &Tensor<T>,
) -> Result<ForwardOutput<T>> {
    let spec = &g.spec;
    if spec.arch == Arch::Resnet18Structural {
        return Err(Error::config(
            "resnet18_structural is declared for counting only and has no forward pass",
        ));
    }
    let [_, c, h, w] = x.dims4()?;
    if [c, h, w] != spec.input {
        return Err(Error::config(format!(
            "graph input {:?} does not match declared [N, {c0}, {h0}, {w0}]",
            x.shape(),
            c0 = spec.input[0],
            h0 = spec.input[1],
            w0 = spec.input[2]
        )));
    }
    let cx = Ctx { tape, params };
    let nodes = spec.nodes();
    let attach = g.attachment.as_ref();
    let keep_details = attach.is_some_and(|a| a.seg_mode == SegMode::EncoderDecoder);

    let mut taps = vec![cx.conv_norm_relu(x, "stem.conv", "stem.norm", 1)?];
    let mut memories = vec![None; nodes + 1];
    let mut details: Vec<Option<Tensor<T>>> = vec![None; nodes + 1];
    let mut state: Option<LfmuState<T>> = None;
    for k in 1..=nodes {
        let f_pre = &taps[k - 1];
        let mut feat = cx.stage(f_pre, k)?;
        if let Some(a) = attach.filter(|a| a.contains(k)) {
            let cur = match state.take() {
                Some(s) => s,
                None => lfmu_init(tape, params, &a.lfmu, x, k)?,
            };
            if keep_details {
                details[k] = Some(memory_details(tape, &cur, a.lfmu.basis)?);
            }
            let step = lfmu_step(tape, params, &a.lfmu, &cur, f_pre, x)?;
            feat = tape.add(&feat, &step.injection)?;
            memories[k] = Some(step.state.memory.clone());
            state = Some(step.state);
        }
        taps.push(feat);
    }

    let output = match spec.arch {
        Arch::MicroFcn => {
            let mut y = taps[nodes].clone();
            for k in (1..=nodes).rev() {
                let mut z = cx.conv(&y, &format!("dec{k}.conv"), 1)?;
                if let Some(d) = &details[k] {
                    let p = cx.conv(d, &format!("dec{k}.detail_proj"), 1)?;
                    z = tape.add(&z, &cx.conv(&p, &format!("dec{k}.detail_conv"), 1)?)?;
                }
                let z = tape.relu(&cx.affine(&z, &format!("dec{k}.norm"))?)?;
                y = tape.add(&tape.upsample_nearest2(&z)?, &taps[k - 1])?;
            }
            cx.conv(&y, "head", 1)?
        }
        _ => {
            let pooled = tape.global_avg_pool(&taps[nodes])?;
            tape.linear(&pooled, cx.p("head.weight")?, Some(cx.p("head.bias")?))?
        }
    };
    Ok(ForwardOutput { output, taps, memories })
}
