//! Low-frequency memory unit.
//!
//! The unit keeps a memory tensor `M` whose resolution follows the backbone
//! from one down-sampling node to the next. At node `k`:
//!
//! ```text
//! forget      M~ = down(M)
//! input       I  = in(down(f_pre))
//! supplement  S  = sup(down^k(image))                 (optional)
//! update      u_f, u_i, u_s = split(sigmoid(gate([M~, I, S])))
//!             M' = u_f*M~ + u_i*tanh(I) + u_s*tanh(S)
//! output      injection = out(M')
//! ```
//!
//! `in`, `sup`, `gate` and `out` are 1×1 convolutions with bias, `down` is
//! one of the three [`Downsampler`] modes. The output projection starts at
//! zero, so a freshly attached unit leaves the backbone untouched.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{ParamStore, PoolKind, Tape, Tensor};
use crate::wavelet::{dwt2_band, Band, WaveletBasisId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Downsampler {
    Wavelet,
    Max,
    Avg,
}

impl Downsampler {
    pub const ALL: [Downsampler; 3] = [Downsampler::Wavelet, Downsampler::Max, Downsampler::Avg];

    pub fn name(self) -> &'static str {
        match self {
            Downsampler::Wavelet => "wavelet",
            Downsampler::Max => "max",
            Downsampler::Avg => "avg",
        }
    }
}

impl fmt::Display for Downsampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Downsampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown downsampler `{s}` (expected wavelet, max or avg)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LfmuConfig {
    pub mem_channels: usize,
    pub basis: WaveletBasisId,
    pub downsampler: Downsampler,
    pub supplement: bool,
}

impl Default for LfmuConfig {
    fn default() -> Self {
        Self {
            mem_channels: 32,
            basis: WaveletBasisId::Haar,
            downsampler: Downsampler::Wavelet,
            supplement: true,
        }
    }
}

impl LfmuConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mem_channels == 0 {
            return Err(Error::config("lfmu.mem_channels must be at least 1"));
        }
        Ok(())
    }

    /// Number of memory-sized groups entering the update gate.
    pub fn gate_groups(&self) -> usize {
        if self.supplement {
            3
        } else {
            2
        }
    }
}

/// Memory after node `node` (node 0 is the state before the first
/// down-sampling).
#[derive(Debug, Clone)]
pub struct LfmuState<T: Scalar> {
    pub memory: Tensor<T>,
    pub node: usize,
}

#[derive(Debug, Clone)]
pub struct LfmuStep<T: Scalar> {
    pub state: LfmuState<T>,
    pub injection: Tensor<T>,
}

/// One 1×1 projection owned by a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    /// Parameter prefix; the tensors are `{prefix}.weight` and `{prefix}.bias`.
    pub prefix: String,
    pub cin: usize,
    pub cout: usize,
    /// Resolution divisor (log2) of the map the projection runs on.
    pub level: usize,
    pub zero_init: bool,
}

impl Projection {
    pub fn param_count(&self) -> usize {
        self.cin * self.cout + self.cout
    }
}

pub fn param_prefix(node: usize, part: &str) -> String {
    format!("lfmu.node{node}.{part}")
}

/// Projections of the unit at `node`. `c_pre` is the channel count of the
/// feature entering the node, `c_out` that of the feature leaving it.
pub fn node_projections(
    cfg: &LfmuConfig,
    node: usize,
    c_pre: usize,
    c_out: usize,
    image_channels: usize,
    is_start: bool,
) -> Vec<Projection> {
    let cm = cfg.mem_channels;
    let g = cfg.gate_groups() * cm;
    let proj = |part: &str, cin, cout, level, zero_init| Projection {
        prefix: param_prefix(node, part),
        cin,
        cout,
        level,
        zero_init,
    };
    let mut out = Vec::new();
    if is_start {
        out.push(proj("init", image_channels, cm, node - 1, false));
    }
    out.push(proj("in", c_pre, cm, node, false));
    if cfg.supplement {
        out.push(proj("sup", image_channels, cm, node, false));
    }
    out.push(proj("gate", g, g, node, false));
    out.push(proj("out", cm, c_out, node, true));
    out
}

/// Half-resolution map used by the forget, input and supplement gates.
pub fn gate_downsample<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    mode: Downsampler,
    basis: WaveletBasisId,
) -> Result<Tensor<T>> {
    match mode {
        Downsampler::Wavelet => dwt2_band(tape, x, basis, Band::LL),
        Downsampler::Max => tape.pool2d(x, PoolKind::Max, 2, 2),
        Downsampler::Avg => tape.pool2d(x, PoolKind::Avg, 2, 2),
    }
}

/// `levels` applications of [`gate_downsample`]; for the wavelet mode this is
/// the LL chain of a multi-level decomposition.
pub fn image_pyramid_level<T: Scalar>(
    tape: &Tape<T>,
    image: &Tensor<T>,
    cfg: &LfmuConfig,
    levels: usize,
) -> Result<Tensor<T>> {
    let [_, _, h, w] = image.dims4()?;
    if h % (1 << levels) != 0 || w % (1 << levels) != 0 {
        return Err(Error::config(format!(
            "lfmu: image {h}×{w} is not divisible by 2^{levels}"
        )));
    }
    let mut cur = image.clone();
    for _ in 0..levels {
        cur = gate_downsample(tape, &cur, cfg.downsampler, cfg.basis)?;
    }
    Ok(cur)
}

fn project<T: Scalar>(tape: &Tape<T>, params: &ParamStore<T>, prefix: &str, x: &Tensor<T>) -> Result<Tensor<T>> {
    let w = params.get(&format!("{prefix}.weight"))?;
    let b = params.get(&format!("{prefix}.bias"))?;
    tape.conv2d(x, w, Some(b), 1, 0)
}

/// Initial memory for a unit chain starting at `start_node`: a projection of
/// the image at the resolution entering that node.
pub fn lfmu_init<T: Scalar>(
    tape: &Tape<T>,
    params: &ParamStore<T>,
    cfg: &LfmuConfig,
    image: &Tensor<T>,
    start_node: usize,
) -> Result<LfmuState<T>> {
    if start_node == 0 {
        return Err(Error::config("lfmu: start node must be at least 1"));
    }
    let level = image_pyramid_level(tape, image, cfg, start_node - 1)?;
    let memory = project(tape, params, &param_prefix(start_node, "init"), &level)?;
    Ok(LfmuState {
        memory,
        node: start_node - 1,
    })
}

/// Advances the memory through node `state.node + 1`. `f_pre` is the backbone
/// feature just before that node's down-sampling.
pub fn lfmu_step<T: Scalar>(
    tape: &Tape<T>,
    params: &ParamStore<T>,
    cfg: &LfmuConfig,
    state: &LfmuState<T>,
    f_pre: &Tensor<T>,
    image: &Tensor<T>,
) -> Result<LfmuStep<T>> {
    let node = state.node + 1;
    let [mn, _, mh, mw] = state.memory.dims4()?;
    let [fnb, _, fh, fw] = f_pre.dims4()?;
    if (mn, mh, mw) != (fnb, fh, fw) {
        return Err(Error::config(format!(
            "lfmu node {node}: memory {:?} does not match feature {:?}",
            state.memory.shape(),
            f_pre.shape()
        )));
    }
    let cm = cfg.mem_channels;
    let down = |x: &Tensor<T>| gate_downsample(tape, x, cfg.downsampler, cfg.basis);

    let forget = down(&state.memory)?;
    let input = project(tape, params, &param_prefix(node, "in"), &down(f_pre)?)?;
    let supplement = if cfg.supplement {
        let level = image_pyramid_level(tape, image, cfg, node)?;
        if level.shape()[2..] != forget.shape()[2..] {
            return Err(Error::config(format!(
                "lfmu node {node}: image pyramid {:?} does not match memory {:?}",
                level.shape(),
                forget.shape()
            )));
        }
        Some(project(tape, params, &param_prefix(node, "sup"), &level)?)
    } else {
        None
    };

    let mut parts = vec![&forget, &input];
    parts.extend(supplement.as_ref());
    let gates = tape.sigmoid(&project(
        tape,
        params,
        &param_prefix(node, "gate"),
        &tape.concat_channels(&parts)?,
    )?)?;
    let u_f = tape.slice_channels(&gates, 0, cm)?;
    let u_i = tape.slice_channels(&gates, cm, cm)?;
    let mut memory = tape.add(&tape.mul(&u_f, &forget)?, &tape.mul(&u_i, &tape.tanh(&input)?)?)?;
    if let Some(s) = &supplement {
        let u_s = tape.slice_channels(&gates, 2 * cm, cm)?;
        memory = tape.add(&memory, &tape.mul(&u_s, &tape.tanh(s)?)?)?;
    }
    let injection = project(tape, params, &param_prefix(node, "out"), &memory)?;
    Ok(LfmuStep {
        state: LfmuState { memory, node },
        injection,
    })
}

/// Detail sub-bands (LH, HL, HH) of the memory, concatenated along channels.
pub fn memory_details<T: Scalar>(tape: &Tape<T>, state: &LfmuState<T>, basis: WaveletBasisId) -> Result<Tensor<T>> {
    let bands = [Band::LH, Band::HL, Band::HH]
        .into_iter()
        .map(|b| dwt2_band(tape, &state.memory, basis, b))
        .collect::<Result<Vec<_>>>()?;
    tape.concat_channels(&bands.iter().collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Tensor<f64> {
        Tensor::new([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    fn zero_params(cfg: &LfmuConfig, node: usize, c_pre: usize, c_out: usize, start: bool) -> ParamStore<f64> {
        let mut p = ParamStore::new();
        for proj in node_projections(cfg, node, c_pre, c_out, 3, start) {
            p.insert(
                format!("{}.weight", proj.prefix),
                Tensor::zeros([proj.cout, proj.cin, 1, 1]),
            )
            .unwrap();
            p.insert(format!("{}.bias", proj.prefix), Tensor::zeros([proj.cout]))
                .unwrap();
        }
        p
    }

    #[test]
    fn downsample_modes() {
        let tape = Tape::new();
        let x = square();
        let v = |m| gate_downsample(&tape, &x, m, WaveletBasisId::Haar).unwrap().data()[0];
        assert_eq!(v(Downsampler::Avg), 2.5);
        assert_eq!(v(Downsampler::Max), 4.0);
        assert!((v(Downsampler::Wavelet) - 5.0).abs() < 1e-12);
        assert!(gate_downsample(
            &tape,
            &Tensor::<f64>::zeros([1, 1, 3, 2]),
            Downsampler::Avg,
            WaveletBasisId::Haar
        )
        .is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!("MAX".parse::<Downsampler>().unwrap(), Downsampler::Max);
        assert!("median".parse::<Downsampler>().is_err());
        let bad = LfmuConfig {
            mem_channels: 0,
            ..LfmuConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_weights_halve_forgotten_memory() {
        let cfg = LfmuConfig {
            mem_channels: 2,
            ..LfmuConfig::default()
        };
        let tape = Tape::new();
        let params = zero_params(&cfg, 2, 4, 5, false);
        let memory = Tensor::from_fn([1, 2, 8, 8], |i| (i as f64 * 0.37).sin());
        let state = LfmuState {
            memory: memory.clone(),
            node: 1,
        };
        let f_pre = Tensor::from_fn([1, 4, 8, 8], |i| i as f64);
        let image = Tensor::from_fn([1, 3, 16, 16], |i| (i % 7) as f64);
        let step = lfmu_step(&tape, &params, &cfg, &state, &f_pre, &image).unwrap();
        assert_eq!(step.state.node, 2);
        assert_eq!(step.injection.shape(), &[1, 5, 4, 4]);
        assert!(step.injection.data().iter().all(|&v| v == 0.0));
        let avg = tape.pool2d(&memory, PoolKind::Avg, 2, 2).unwrap();
        for (m, a) in step.state.memory.data().iter().zip(avg.data()) {
            assert!((m - a).abs() < 1e-12);
        }
    }

    #[test]
    fn supplement_off_changes_gate_width() {
        let on = LfmuConfig::default();
        let off = LfmuConfig {
            supplement: false,
            ..on
        };
        let gate = |cfg: &LfmuConfig| {
            node_projections(cfg, 1, 16, 16, 3, false)
                .into_iter()
                .find(|p| p.prefix.ends_with("gate"))
                .unwrap()
                .cin
        };
        assert_eq!(gate(&on), 96);
        assert_eq!(gate(&off), 64);
        assert!(!node_projections(&off, 1, 16, 16, 3, true)
            .iter()
            .any(|p| p.prefix.ends_with("sup")));
    }

    #[test]
    fn init_shapes_and_identity_projection() {
        let cfg = LfmuConfig {
            mem_channels: 3,
            ..LfmuConfig::default()
        };
        let tape = Tape::new();
        let mut params = zero_params(&cfg, 3, 8, 8, true);
        let eye = Tensor::from_fn([3, 3, 1, 1], |i| if i % 4 == 0 { 1.0 } else { 0.0 });
        params.replace("lfmu.node3.init.weight", eye).unwrap();
        let image = Tensor::from_fn([2, 3, 16, 16], |i| ((i * 13) % 11) as f64 / 11.0);
        let state = lfmu_init(&tape, &params, &cfg, &image, 3).unwrap();
        assert_eq!(state.node, 2);
        let ll = crate::wavelet::wavedec_ll(&tape, &image, WaveletBasisId::Haar, 2).unwrap();
        assert!(state.memory.max_abs_diff(&ll) < 1e-12);
        assert!(lfmu_init(&tape, &params, &cfg, &Tensor::zeros([1, 3, 6, 6]), 3).is_err());
    }

    #[test]
    fn mismatched_memory_is_rejected() {
        let cfg = LfmuConfig::default();
        let tape = Tape::new();
        let params = zero_params(&cfg, 1, 4, 4, false);
        let state = LfmuState {
            memory: Tensor::zeros([1, 32, 8, 8]),
            node: 0,
        };
        let r = lfmu_step(
            &tape,
            &params,
            &cfg,
            &state,
            &Tensor::zeros([1, 4, 16, 16]),
            &Tensor::zeros([1, 3, 16, 16]),
        );
        assert!(r.is_err());
    }
}
