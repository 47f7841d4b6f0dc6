//! Backbone declarations, memory-unit attachment and accounting.
//!
//! A [`Graph`] is a list of [`LayerDecl`]s plus the parameters they own.
//! Parameter and MAC counts are derived from the declarations; the forward
//! pass is written out per architecture in `forward.rs`.

mod forward;
mod layers;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfmu::{node_projections, LfmuConfig};
use crate::scalar::Scalar;
use crate::tensor::{ParamStore, Tape, Tensor};

pub use forward::ForwardOutput;
pub use layers::{LayerDecl, LayerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    MicroResnet,
    MicroFcn,
    Resnet18Structural,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::MicroResnet => "micro_resnet",
            Arch::MicroFcn => "micro_fcn",
            Arch::Resnet18Structural => "resnet18_structural",
        }
    }

    pub fn is_segmentation(self) -> bool {
        self == Arch::MicroFcn
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "micro_resnet" => Ok(Arch::MicroResnet),
            "micro_fcn" => Ok(Arch::MicroFcn),
            "resnet18_structural" | "resnet18" => Ok(Arch::Resnet18Structural),
            _ => Err(Error::config(format!(
                "unknown architecture `{s}` (expected micro_resnet, micro_fcn or resnet18_structural)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegMode {
    #[default]
    None,
    Encoder,
    EncoderDecoder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub arch: Arch,
    /// `[C, H, W]` of one input image.
    pub input: [usize; 3],
    pub classes: usize,
    pub stem_channels: usize,
    /// Output channels of the stage behind each down-sampling node.
    pub channels: Vec<usize>,
}

impl GraphSpec {
    pub fn micro_resnet(classes: usize) -> Self {
        Self {
            arch: Arch::MicroResnet,
            input: [3, 64, 64],
            classes,
            stem_channels: 16,
            channels: vec![16, 32, 64, 128, 256],
        }
    }

    pub fn micro_fcn(classes: usize) -> Self {
        Self {
            arch: Arch::MicroFcn,
            ..Self::micro_resnet(classes)
        }
    }

    pub fn resnet18(classes: usize) -> Self {
        Self {
            arch: Arch::Resnet18Structural,
            input: [3, 224, 224],
            classes,
            stem_channels: 64,
            channels: vec![64, 64, 128, 256, 512],
        }
    }

    pub fn for_arch(arch: Arch, classes: usize) -> Self {
        match arch {
            Arch::MicroResnet => Self::micro_resnet(classes),
            Arch::MicroFcn => Self::micro_fcn(classes),
            Arch::Resnet18Structural => Self::resnet18(classes),
        }
    }

    pub fn nodes(&self) -> usize {
        self.channels.len()
    }

    /// `(channels entering, channels leaving)` for each node, 1-based order.
    pub fn node_channels(&self) -> Vec<(usize, usize)> {
        let first_in = match self.arch {
            Arch::Resnet18Structural => self.input[0],
            _ => self.stem_channels,
        };
        std::iter::once(first_in)
            .chain(self.channels.iter().copied())
            .zip(self.channels.iter().copied())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let [c, h, w] = self.input;
        if c == 0 || self.classes == 0 || self.stem_channels == 0 || self.channels.contains(&0) {
            return Err(Error::config(
                "graph: channel, class and input extents must be positive",
            ));
        }
        match self.arch {
            Arch::MicroResnet | Arch::Resnet18Structural if self.nodes() != 5 => {
                return Err(Error::config(format!(
                    "graph: {} needs exactly 5 down-sampling nodes, got {}",
                    self.arch,
                    self.nodes()
                )))
            }
            _ if self.nodes() == 0 => return Err(Error::config("graph: at least one stage is required")),
            _ => {}
        }
        let div = 1usize << self.nodes();
        if h % div != 0 || w % div != 0 {
            return Err(Error::config(format!(
                "graph: input {h}×{w} must be divisible by 2^{} for {} nodes",
                self.nodes(),
                self.nodes()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlfmAttachment {
    pub start: usize,
    pub end: usize,
    pub lfmu: LfmuConfig,
    pub seg_mode: SegMode,
}

impl MlfmAttachment {
    pub fn new(start: usize, end: usize, lfmu: LfmuConfig) -> Self {
        Self {
            start,
            end,
            lfmu,
            seg_mode: SegMode::None,
        }
    }

    pub fn contains(&self, node: usize) -> bool {
        (self.start..=self.end).contains(&node)
    }

    pub fn label(&self) -> String {
        format!("L{}-L{}", self.start, self.end)
    }

    fn validate(&self, spec: &GraphSpec) -> Result<()> {
        self.lfmu.validate()?;
        if !(1 <= self.start && self.start <= self.end && self.end <= spec.nodes()) {
            return Err(Error::config(format!(
                "attachment: invalid node range L{}-L{} for {} nodes",
                self.start,
                self.end,
                spec.nodes()
            )));
        }
        if self.seg_mode != SegMode::None && !spec.arch.is_segmentation() {
            return Err(Error::config(format!(
                "attachment: seg_mode {:?} requires micro_fcn, got {}",
                self.seg_mode, spec.arch
            )));
        }
        Ok(())
    }
}

/// The 15 `(start, end)` placements with `1 ≤ start ≤ end ≤ 5`, in row order.
pub fn placements() -> Vec<(usize, usize)> {
    (1..=5).flat_map(|s| (s..=5).map(move |e| (s, e))).collect()
}

#[derive(Clone)]
pub struct Graph<T: Scalar> {
    spec: GraphSpec,
    attachment: Option<MlfmAttachment>,
    layers: Vec<LayerDecl>,
    params: ParamStore<T>,
    seed: u64,
}

fn backbone_layers(spec: &GraphSpec) -> Vec<LayerDecl> {
    match spec.arch {
        Arch::Resnet18Structural => resnet18_layers(spec),
        Arch::MicroResnet | Arch::MicroFcn => micro_layers(spec),
    }
}

fn micro_layers(spec: &GraphSpec) -> Vec<LayerDecl> {
    let mut v = vec![
        LayerDecl::conv("stem.conv", spec.input[0], spec.stem_channels, 3, 1, 0),
        LayerDecl::affine("stem.norm", spec.stem_channels, 0),
    ];
    for (i, (cin, c)) in spec.node_channels().into_iter().enumerate() {
        let k = i + 1;
        v.push(LayerDecl::conv(format!("stage{k}.down.conv"), cin, c, 3, 2, k));
        v.push(LayerDecl::affine(format!("stage{k}.down.norm"), c, k));
        for b in 0..2 {
            let p = format!("stage{k}.block{b}");
            v.push(LayerDecl::conv(format!("{p}.conv1"), c, c, 3, 1, k));
            v.push(LayerDecl::affine(format!("{p}.norm1"), c, k));
            v.push(LayerDecl::conv(format!("{p}.conv2"), c, c, 3, 1, k));
            v.push(LayerDecl::affine(format!("{p}.norm2"), c, k).zeroed());
        }
    }
    match spec.arch {
        Arch::MicroFcn => {
            for (i, (c_prev, c)) in spec.node_channels().into_iter().enumerate().rev() {
                let k = i + 1;
                v.push(LayerDecl::conv(format!("dec{k}.conv"), c, c_prev, 3, 1, k));
                v.push(LayerDecl::affine(format!("dec{k}.norm"), c_prev, k));
            }
            v.push(LayerDecl::conv1x1_bias(
                "head",
                spec.stem_channels,
                spec.classes,
                0,
                false,
            ));
        }
        _ => v.push(LayerDecl::linear("head", *spec.channels.last().unwrap(), spec.classes)),
    }
    v
}

fn resnet18_layers(spec: &GraphSpec) -> Vec<LayerDecl> {
    let mut v = vec![
        LayerDecl::conv("conv1", spec.input[0], 64, 7, 2, 1),
        LayerDecl::affine("bn1", 64, 1),
    ];
    let mut cin = 64;
    for (i, &c) in [64, 128, 256, 512].iter().enumerate() {
        let level = i + 2;
        for b in 0..2 {
            let p = format!("layer{}.{b}", i + 1);
            let stride = if b == 0 && i > 0 { 2 } else { 1 };
            v.push(LayerDecl::conv(format!("{p}.conv1"), cin, c, 3, stride, level));
            v.push(LayerDecl::affine(format!("{p}.bn1"), c, level));
            v.push(LayerDecl::conv(format!("{p}.conv2"), c, c, 3, 1, level));
            v.push(LayerDecl::affine(format!("{p}.bn2"), c, level));
            if stride == 2 {
                v.push(LayerDecl::conv(format!("{p}.downsample.0"), cin, c, 1, 2, level));
                v.push(LayerDecl::affine(format!("{p}.downsample.1"), c, level));
            }
            cin = c;
        }
    }
    v.push(LayerDecl::linear("fc", 512, spec.classes));
    v
}

fn attachment_layers(spec: &GraphSpec, a: &MlfmAttachment) -> Vec<LayerDecl> {
    let mut v = Vec::new();
    let node_ch = spec.node_channels();
    for k in a.start..=a.end {
        let (c_pre, c_out) = node_ch[k - 1];
        for p in node_projections(&a.lfmu, k, c_pre, c_out, spec.input[0], k == a.start) {
            v.push(LayerDecl::conv1x1_bias(p.prefix, p.cin, p.cout, p.level, p.zero_init));
        }
        if a.seg_mode == SegMode::EncoderDecoder {
            let cm = a.lfmu.mem_channels;
            v.push(LayerDecl::conv1x1_bias(
                format!("dec{k}.detail_proj"),
                3 * cm,
                cm,
                k,
                true,
            ));
            v.push(LayerDecl::conv(format!("dec{k}.detail_conv"), cm, c_pre, 3, 1, k));
        }
    }
    v
}

impl<T: Scalar> Graph<T> {
    /// Backbone with freshly initialised parameters. Every parameter is
    /// drawn from its own stream of `seed`, keyed by name.
    pub fn build_backbone(spec: &GraphSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let layers = backbone_layers(spec);
        let mut params = ParamStore::new();
        for l in &layers {
            l.init_params(seed, &mut params)?;
        }
        Ok(Self {
            spec: spec.clone(),
            attachment: None,
            layers,
            params,
            seed,
        })
    }

    /// Adds memory units at nodes `start..=end`. Existing parameters are kept.
    pub fn attach_mlfm(mut self, a: &MlfmAttachment) -> Result<Self> {
        if self.attachment.is_some() {
            return Err(Error::config("graph already has memory units attached"));
        }
        a.validate(&self.spec)?;
        let extra = attachment_layers(&self.spec, a);
        for l in &extra {
            l.init_params(self.seed, &mut self.params)?;
        }
        self.layers.extend(extra);
        self.attachment = Some(a.clone());
        Ok(self)
    }

    pub fn build(spec: &GraphSpec, attachment: Option<&MlfmAttachment>, seed: u64) -> Result<Self> {
        let g = Self::build_backbone(spec, seed)?;
        match attachment {
            Some(a) => g.attach_mlfm(a),
            None => Ok(g),
        }
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    pub fn attachment(&self) -> Option<&MlfmAttachment> {
        self.attachment.as_ref()
    }

    pub fn layers(&self) -> &[LayerDecl] {
        &self.layers
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    /// Sum of parameter sizes over the layer declarations.
    pub fn count_params(&self) -> usize {
        self.layers.iter().map(LayerDecl::param_count).sum()
    }

    /// Multiply-accumulates of one forward pass on an `[C, H, W]` input
    /// (convolutions and linear layers only).
    pub fn count_macs(&self, input: [usize; 3]) -> u64 {
        self.layers.iter().map(|l| l.macs(input[1], input[2])).sum()
    }

    /// Forward pass on an untracked tape with the graph's own parameters.
    pub fn forward(&self, x: &Tensor<T>) -> Result<ForwardOutput<T>> {
        self.forward_with(&Tape::new(), &self.params, x)
    }

    /// Forward pass with explicit parameters (e.g. watched copies).
    pub fn forward_with(&self, tape: &Tape<T>, params: &ParamStore<T>, x: &Tensor<T>) -> Result<ForwardOutput<T>> {
        forward::run(self, tape, params, x)
    }
}

pub fn build_backbone<T: Scalar>(spec: &GraphSpec, seed: u64) -> Result<Graph<T>> {
    Graph::build_backbone(spec, seed)
}

pub fn attach_mlfm<T: Scalar>(g: Graph<T>, a: &MlfmAttachment) -> Result<Graph<T>> {
    g.attach_mlfm(a)
}

pub fn count_params<T: Scalar>(g: &Graph<T>) -> usize {
    g.count_params()
}

pub fn count_macs<T: Scalar>(g: &Graph<T>, input: [usize; 3]) -> u64 {
    g.count_macs(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_conv_count() {
        let l = LayerDecl {
            name: "c".into(),
            kind: LayerKind::Conv {
                cin: 3,
                cout: 8,
                k: 3,
                stride: 1,
                pad: 1,
                bias: true,
            },
            level: 0,
            zero_init: false,
        };
        assert_eq!(l.param_count(), 224);
        assert_eq!(l.macs(4, 4), 3 * 9 * 8 * 16);
    }

    #[test]
    fn resnet18_count() {
        let spec = GraphSpec::resnet18(1000);
        let layers = resnet18_layers(&spec);
        assert_eq!(layers.iter().map(LayerDecl::param_count).sum::<usize>(), 11_689_512);
        let macs: u64 = layers.iter().map(|l| l.macs(224, 224)).sum();
        assert_eq!(macs, 1_814_073_344);
    }

    #[test]
    fn placements_in_row_order() {
        let p = placements();
        assert_eq!(p.len(), 15);
        assert_eq!(p[0], (1, 1));
        assert_eq!(p[4], (1, 5));
        assert_eq!(p[14], (5, 5));
    }

    #[test]
    fn spec_validation() {
        let mut s = GraphSpec::micro_resnet(2);
        s.channels.pop();
        assert!(s.validate().is_err());
        let mut s = GraphSpec::micro_fcn(3);
        s.input = [3, 48, 48];
        assert!(s.validate().is_err());
        assert!("RESNET18".parse::<Arch>().is_ok());
        assert!("vgg".parse::<Arch>().is_err());
    }

    #[test]
    fn attachment_validation() {
        let g = Graph::<f32>::build_backbone(&GraphSpec::micro_resnet(2), 0).unwrap();
        let bad = MlfmAttachment::new(3, 2, LfmuConfig::default());
        assert!(g.clone().attach_mlfm(&bad).is_err());
        let seg = MlfmAttachment {
            seg_mode: SegMode::Encoder,
            ..MlfmAttachment::new(1, 2, LfmuConfig::default())
        };
        assert!(g.clone().attach_mlfm(&seg).is_err());
        let ok = g
            .attach_mlfm(&MlfmAttachment::new(1, 5, LfmuConfig::default()))
            .unwrap();
        assert!(ok
            .clone()
            .attach_mlfm(&MlfmAttachment::new(1, 5, LfmuConfig::default()))
            .is_err());
    }
}
