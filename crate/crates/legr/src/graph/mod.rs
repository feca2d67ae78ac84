//! Architecture-level view of a ConvNet: layer specs, connectivity,
//! channel-coupling groups and the analytic FLOP model.
//!
//! Channels that must be kept or pruned jointly (the two producers feeding a
//! residual add, a depthwise channel and its preceding channel) are grouped at
//! build time; every mask in this crate is expressed over those groups, so
//! coupling can never be violated by construction.

mod arch_file;
mod flops;
mod mask_file;

pub use arch_file::{graph_from_text, graph_to_text, read_arch_file, write_arch_file};
pub use flops::{full_flops, layer_cost_unit, total_flops, FlopCounter};
pub use mask_file::{mask_from_text, mask_to_text, read_mask_file, write_mask_file};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rng::sha256_hex;

/// Fixed layer vocabulary. Batch normalization is represented by a learnable
/// per-channel scale+shift without running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Input,
    Conv {
        k: usize,
        stride: usize,
        pad: usize,
        depthwise: bool,
    },
    ScaleShift,
    Relu,
    MaxPool2,
    GlobalAvgPool,
    Dense,
    ResidualAdd,
    SoftmaxCrossEntropy,
}

impl LayerKind {
    pub fn is_conv(&self) -> bool {
        matches!(self, LayerKind::Conv { .. })
    }

    pub(crate) fn token(&self) -> &'static str {
        match self {
            LayerKind::Input => "input",
            LayerKind::Conv {
                depthwise: false, ..
            } => "conv",
            LayerKind::Conv {
                depthwise: true, ..
            } => "dwconv",
            LayerKind::ScaleShift => "scale_shift",
            LayerKind::Relu => "relu",
            LayerKind::MaxPool2 => "maxpool",
            LayerKind::GlobalAvgPool => "gap",
            LayerKind::Dense => "dense",
            LayerKind::ResidualAdd => "add",
            LayerKind::SoftmaxCrossEntropy => "softmax_xent",
        }
    }
}

/// One node of the network graph. Spatial sizes are fixed annotations derived
/// from the input size, so FLOP counting needs no forward pass.
#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    /// Predecessor layer ids (always earlier in the layer list).
    pub inputs: Vec<usize>,
    pub in_channels: usize,
    pub out_channels: usize,
    pub in_hw: (usize, usize),
    pub out_hw: (usize, usize),
}

/// Where an output channel of a layer comes from: the network input (never
/// prunable) or a coupling group of conv filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelOrigin {
    Input,
    Group(usize),
}

/// Channels across layers that share one keep/prune decision.
#[derive(Debug, Clone)]
pub struct CouplingGroup {
    pub id: usize,
    /// (layer id, channel index) pairs, sorted.
    pub members: Vec<(usize, usize)>,
    /// False when the group is tied to the network input through a residual
    /// add; such channels can never be pruned.
    pub prunable: bool,
}

/// Builder-level description of one layer, before channel/spatial resolution.
#[derive(Debug, Clone)]
pub struct LayerDesc {
    pub name: String,
    pub kind: DescKind,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DescKind {
    Conv {
        k: usize,
        stride: usize,
        pad: usize,
        out_channels: usize,
    },
    DepthwiseConv {
        k: usize,
        stride: usize,
        pad: usize,
    },
    ScaleShift,
    Relu,
    MaxPool2,
    GlobalAvgPool,
    Dense {
        out_channels: usize,
    },
    ResidualAdd,
    SoftmaxCrossEntropy,
}

/// Directed acyclic graph of layers with derived coupling groups.
///
/// Layer 0 is always the input node; the last layer is always the loss node.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    layers: Vec<LayerSpec>,
    consumers: Vec<Vec<usize>>,
    class_count: usize,
    groups: Vec<CouplingGroup>,
    /// Per layer, per output channel: its origin.
    origins: Vec<Vec<ChannelOrigin>>,
    /// Conv layer ids in declaration order (the prunable layers).
    prunable: Vec<usize>,
    fingerprint: String,
}

impl NetworkGraph {
    /// Build and validate a graph. `input` is (channels, height, width);
    /// coupling groups are derived from residual adds and depthwise convs.
    pub fn build(input: (usize, usize, usize), classes: usize, descs: &[LayerDesc]) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Graph(format!("need at least 2 classes, got {classes}")));
        }
        let (in_c, in_h, in_w) = input;
        if in_c == 0 || in_h == 0 || in_w == 0 {
            return Err(Error::Graph(format!("invalid input shape {input:?}")));
        }

        let mut layers: Vec<LayerSpec> = vec![LayerSpec {
            name: "input".into(),
            kind: LayerKind::Input,
            inputs: vec![],
            in_channels: in_c,
            out_channels: in_c,
            in_hw: (in_h, in_w),
            out_hw: (in_h, in_w),
        }];
        let mut by_name: HashMap<String, usize> = HashMap::new();
        by_name.insert("input".into(), 0);

        for desc in descs {
            let id = layers.len();
            if by_name.contains_key(&desc.name) {
                return Err(Error::Graph(format!("duplicate layer name `{}`", desc.name)));
            }
            let mut inputs = Vec::with_capacity(desc.inputs.len());
            for input_name in &desc.inputs {
                match by_name.get(input_name) {
                    Some(&pid) => inputs.push(pid),
                    None => {
                        return Err(Error::Graph(format!(
                            "layer `{}` references unknown (or later) layer `{}`",
                            desc.name, input_name
                        )))
                    }
                }
            }
            let spec = resolve_layer(&layers, desc, &inputs, classes)?;
            by_name.insert(desc.name.clone(), id);
            layers.push(spec);
        }

        // Exactly one loss node, and it must be the terminal layer.
        let loss_ids: Vec<usize> = layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == LayerKind::SoftmaxCrossEntropy)
            .map(|(i, _)| i)
            .collect();
        if loss_ids.len() != 1 || loss_ids[0] != layers.len() - 1 {
            return Err(Error::Graph(
                "graph must end with exactly one softmax_xent loss layer".into(),
            ));
        }

        let mut consumers = vec![Vec::new(); layers.len()];
        for (id, layer) in layers.iter().enumerate() {
            for &pid in &layer.inputs {
                consumers[pid].push(id);
            }
        }
        for (id, cons) in consumers.iter().enumerate() {
            if id != layers.len() - 1 && cons.is_empty() {
                return Err(Error::Graph(format!(
                    "layer `{}` has no consumer",
                    layers[id].name
                )));
            }
        }

        let (groups, origins, prunable) = derive_coupling(&layers)?;
        let fingerprint = fingerprint_of(&layers, classes);

        Ok(Self {
            layers,
            consumers,
            class_count: classes,
            groups,
            origins,
            prunable,
            fingerprint,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layer(&self, id: usize) -> &LayerSpec {
        &self.layers[id]
    }

    pub fn consumers(&self, id: usize) -> &[usize] {
        &self.consumers[id]
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Coupling groups, ordered by their smallest (layer, channel) member.
    pub fn groups(&self) -> &[CouplingGroup] {
        &self.groups
    }

    /// Per output channel of `layer`, where the channel comes from.
    pub fn origins(&self, layer: usize) -> &[ChannelOrigin] {
        &self.origins[layer]
    }

    /// Conv layer ids (standard and depthwise) in declaration order.
    pub fn prunable_layers(&self) -> &[usize] {
        &self.prunable
    }

    /// Position of a conv layer id within `prunable_layers`, if any.
    pub fn prunable_index(&self, layer: usize) -> Option<usize> {
        self.prunable.iter().position(|&l| l == layer)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn layer_id(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// Output keep-vectors for every layer under `keep_groups` (indexed by
    /// group id). Input-origin channels are always kept.
    pub fn channel_keep(&self, keep_groups: &[bool]) -> Vec<Vec<bool>> {
        self.origins
            .iter()
            .map(|origins| {
                origins
                    .iter()
                    .map(|o| match o {
                        ChannelOrigin::Input => true,
                        ChannelOrigin::Group(g) => keep_groups[*g],
                    })
                    .collect()
            })
            .collect()
    }

    /// Rebuild the graph descriptions with shrunken channel counts under a
    /// mask. Used by model materialization.
    pub fn masked(&self, mask: &FilterMask) -> Result<NetworkGraph> {
        mask.validate(self)?;
        let keep_groups = mask.group_keep(self)?;
        let keep = self.channel_keep(&keep_groups);
        let descs: Vec<LayerDesc> = self
            .layers
            .iter()
            .enumerate()
            .skip(1)
            .map(|(id, layer)| {
                let kept_out = keep[id].iter().filter(|&&b| b).count();
                let kind = match layer.kind {
                    LayerKind::Conv {
                        k,
                        stride,
                        pad,
                        depthwise: false,
                    } => DescKind::Conv {
                        k,
                        stride,
                        pad,
                        out_channels: kept_out,
                    },
                    LayerKind::Conv {
                        k,
                        stride,
                        pad,
                        depthwise: true,
                    } => DescKind::DepthwiseConv { k, stride, pad },
                    LayerKind::ScaleShift => DescKind::ScaleShift,
                    LayerKind::Relu => DescKind::Relu,
                    LayerKind::MaxPool2 => DescKind::MaxPool2,
                    LayerKind::GlobalAvgPool => DescKind::GlobalAvgPool,
                    LayerKind::Dense => DescKind::Dense {
                        out_channels: layer.out_channels,
                    },
                    LayerKind::ResidualAdd => DescKind::ResidualAdd,
                    LayerKind::SoftmaxCrossEntropy => DescKind::SoftmaxCrossEntropy,
                    LayerKind::Input => unreachable!("input is layer 0"),
                };
                LayerDesc {
                    name: layer.name.clone(),
                    kind,
                    inputs: layer.inputs.iter().map(|&p| self.layers[p].name.clone()).collect(),
                }
            })
            .collect();
        let input = self.layers[0];
        NetworkGraph::build(
            (input.out_channels, input.out_hw.0, input.out_hw.1),
            self.class_count,
            &descs,
        )
    }
}

fn resolve_layer(
    layers: &[LayerSpec],
    desc: &LayerDesc,
    inputs: &[usize],
    classes: usize,
) -> Result<LayerSpec> {
    let arity = match desc.kind {
        DescKind::ResidualAdd => 2,
        _ => 1,
    };
    if inputs.len() != arity {
        return Err(Error::Graph(format!(
            "layer `{}` expects {arity} input(s), got {}",
            desc.name,
            inputs.len()
        )));
    }
    let pred = &layers[inputs[0]];
    if pred.kind == LayerKind::SoftmaxCrossEntropy {
        return Err(Error::Graph(format!(
            "layer `{}` consumes the loss node",
            desc.name
        )));
    }
    let (in_c, in_hw) = (pred.out_channels, pred.out_hw);

    let conv_out_hw = |k: usize, stride: usize, pad: usize| -> Result<(usize, usize)> {
        if k == 0 || stride == 0 {
            return Err(Error::Graph(format!(
                "layer `{}`: kernel and stride must be positive",
                desc.name
            )));
        }
        let dim = |d: usize| -> Result<usize> {
            if d + 2 * pad < k {
                return Err(Error::Graph(format!(
                    "layer `{}`: kernel {k} larger than padded input {d}+2*{pad}",
                    desc.name
                )));
            }
            Ok((d + 2 * pad - k) / stride + 1)
        };
        Ok((dim(in_hw.0)?, dim(in_hw.1)?))
    };

    let (kind, out_channels, out_hw) = match desc.kind {
        DescKind::Conv {
            k,
            stride,
            pad,
            out_channels,
        } => {
            if out_channels == 0 {
                return Err(Error::Graph(format!(
                    "layer `{}`: out_channels must be positive",
                    desc.name
                )));
            }
            (
                LayerKind::Conv {
                    k,
                    stride,
                    pad,
                    depthwise: false,
                },
                out_channels,
                conv_out_hw(k, stride, pad)?,
            )
        }
        DescKind::DepthwiseConv { k, stride, pad } => (
            LayerKind::Conv {
                k,
                stride,
                pad,
                depthwise: true,
            },
            in_c,
            conv_out_hw(k, stride, pad)?,
        ),
        DescKind::ScaleShift => (LayerKind::ScaleShift, in_c, in_hw),
        DescKind::Relu => (LayerKind::Relu, in_c, in_hw),
        DescKind::MaxPool2 => {
            let out = (in_hw.0 / 2, in_hw.1 / 2);
            if out.0 == 0 || out.1 == 0 {
                return Err(Error::Graph(format!(
                    "layer `{}`: maxpool on {}x{} input",
                    desc.name, in_hw.0, in_hw.1
                )));
            }
            (LayerKind::MaxPool2, in_c, out)
        }
        DescKind::GlobalAvgPool => (LayerKind::GlobalAvgPool, in_c, (1, 1)),
        DescKind::Dense { out_channels } => {
            if layers[inputs[0]].kind != LayerKind::GlobalAvgPool {
                return Err(Error::Graph(format!(
                    "layer `{}`: dense must consume a gap layer",
                    desc.name
                )));
            }
            (LayerKind::Dense, out_channels, (1, 1))
        }
        DescKind::ResidualAdd => {
            let a = &layers[inputs[0]];
            let b = &layers[inputs[1]];
            if a.out_channels != b.out_channels {
                return Err(Error::Graph(format!(
                    "residual add `{}`: channel mismatch {} vs {}",
                    desc.name, a.out_channels, b.out_channels
                )));
            }
            if a.out_hw != b.out_hw {
                return Err(Error::Graph(format!(
                    "residual add `{}`: spatial mismatch {:?} vs {:?}",
                    desc.name, a.out_hw, b.out_hw
                )));
            }
            (LayerKind::ResidualAdd, a.out_channels, a.out_hw)
        }
        DescKind::SoftmaxCrossEntropy => {
            if pred.kind != LayerKind::Dense || pred.out_channels != classes {
                return Err(Error::Graph(format!(
                    "loss layer `{}` must consume a dense layer with {classes} outputs",
                    desc.name
                )));
            }
            (LayerKind::SoftmaxCrossEntropy, 1, (1, 1))
        }
    };

    Ok(LayerSpec {
        name: desc.name.clone(),
        kind,
        inputs: inputs.to_vec(),
        in_channels: in_c,
        out_channels,
        in_hw,
        out_hw,
    })
}

/// Union-find element per conv output channel; channels sourced from the
/// network input are tracked separately.
struct UnionFind {
    parent: Vec<usize>,
    protected: Vec<bool>,
}

impl UnionFind {
    fn new() -> Self {
        Self {
            parent: Vec::new(),
            protected: Vec::new(),
        }
    }

    fn push(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.protected.push(false);
        self.parent.len() - 1
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let prot = self.protected[ra] || self.protected[rb];
            self.parent[ra] = rb;
            self.protected[rb] = prot;
        }
    }

    fn protect(&mut self, x: usize) {
        let r = self.find(x);
        self.protected[r] = true;
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Src {
    Input,
    Slot(usize),
}

fn derive_coupling(
    layers: &[LayerSpec],
) -> Result<(Vec<CouplingGroup>, Vec<Vec<ChannelOrigin>>, Vec<usize>)> {
    let mut uf = UnionFind::new();
    let mut slot_member: Vec<(usize, usize)> = Vec::new();
    // Per layer, per output channel: source element.
    let mut sources: Vec<Vec<Src>> = Vec::with_capacity(layers.len());
    let mut prunable = Vec::new();

    for (id, layer) in layers.iter().enumerate() {
        let src = match layer.kind {
            LayerKind::Input => vec![Src::Input; layer.out_channels],
            LayerKind::Conv {
                depthwise: false, ..
            } => {
                prunable.push(id);
                (0..layer.out_channels)
                    .map(|c| {
                        let slot = uf.push();
                        slot_member.push((id, c));
                        Src::Slot(slot)
                    })
                    .collect()
            }
            LayerKind::Conv {
                depthwise: true, ..
            } => {
                prunable.push(id);
                let pred = layer.inputs[0];
                (0..layer.out_channels)
                    .map(|c| {
                        let slot = uf.push();
                        slot_member.push((id, c));
                        match sources[pred][c] {
                            Src::Input => uf.protect(slot),
                            Src::Slot(s) => uf.union(slot, s),
                        }
                        Src::Slot(slot)
                    })
                    .collect()
            }
            LayerKind::ScaleShift
            | LayerKind::Relu
            | LayerKind::MaxPool2
            | LayerKind::GlobalAvgPool => sources[layer.inputs[0]].clone(),
            LayerKind::ResidualAdd => {
                let (a, b) = (layer.inputs[0], layer.inputs[1]);
                (0..layer.out_channels)
                    .map(|c| match (sources[a][c], sources[b][c]) {
                        (Src::Input, Src::Input) => Src::Input,
                        (Src::Input, Src::Slot(s)) | (Src::Slot(s), Src::Input) => {
                            uf.protect(s);
                            Src::Slot(s)
                        }
                        (Src::Slot(sa), Src::Slot(sb)) => {
                            uf.union(sa, sb);
                            Src::Slot(sa)
                        }
                    })
                    .collect()
            }
            LayerKind::Dense | LayerKind::SoftmaxCrossEntropy => {
                vec![Src::Input; layer.out_channels]
            }
        };
        sources.push(src);
    }

    // Collect equivalence classes, ordered by smallest member.
    let mut root_members: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (slot, &member) in slot_member.iter().enumerate() {
        let root = uf.find(slot);
        root_members.entry(root).or_default().push(member);
    }
    let mut classes: Vec<(usize, Vec<(usize, usize)>)> = root_members.into_iter().collect();
    for (_, members) in classes.iter_mut() {
        members.sort_unstable();
    }
    classes.sort_unstable_by_key(|(_, members)| members[0]);

    let mut groups = Vec::with_capacity(classes.len());
    let mut slot_group = vec![0usize; slot_member.len()];
    for (gid, (root, members)) in classes.into_iter().enumerate() {
        let prunable_group = !uf.protected[uf.find(root)];
        groups.push(CouplingGroup {
            id: gid,
            members,
            prunable: prunable_group,
        });
    }
    // slot -> group id, via member lookup.
    let member_to_group: HashMap<(usize, usize), usize> = groups
        .iter()
        .flat_map(|g| g.members.iter().map(move |&m| (m, g.id)))
        .collect();
    for (slot, member) in slot_member.iter().enumerate() {
        slot_group[slot] = member_to_group[member];
    }

    // Dense/loss layers carry no prunable channels; their origin vectors are
    // only used for channel bookkeeping of conv-path layers, so mark them Input.
    let origins: Vec<Vec<ChannelOrigin>> = sources
        .iter()
        .map(|layer_src| {
            layer_src
                .iter()
                .map(|s| match s {
                    Src::Input => ChannelOrigin::Input,
                    Src::Slot(slot) => ChannelOrigin::Group(slot_group[*slot]),
                })
                .collect()
        })
        .collect();

    Ok((groups, origins, prunable))
}

fn fingerprint_of(layers: &[LayerSpec], classes: usize) -> String {
    let mut canon = String::new();
    let input = &layers[0];
    canon.push_str(&format!(
        "v1|input {} {} {}|classes {classes}",
        input.out_channels, input.out_hw.0, input.out_hw.1
    ));
    for layer in &layers[1..] {
        let (k, s, p) = match layer.kind {
            LayerKind::Conv { k, stride, pad, .. } => (k, stride, pad),
            _ => (0, 0, 0),
        };
        canon.push_str(&format!(
            "|{} {} k{k} s{s} p{p} out{} in[{}]",
            layer.name,
            layer.kind.token(),
            layer.out_channels,
            layer
                .inputs
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
    }
    sha256_hex(canon.as_bytes())
}

/// Per-layer boolean keep-vectors over conv output channels; the output of
/// every pruning procedure in this crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterMask {
    /// Indexed by layer id; `None` for non-conv layers.
    keep: Vec<Option<Vec<bool>>>,
}

impl FilterMask {
    /// The all-keep mask.
    pub fn full(graph: &NetworkGraph) -> Self {
        let keep = graph
            .layers()
            .iter()
            .map(|l| l.kind.is_conv().then(|| vec![true; l.out_channels]))
            .collect();
        Self { keep }
    }

    /// Build a mask from per-group keep decisions. Coupling holds by
    /// construction.
    pub fn from_group_keep(graph: &NetworkGraph, keep_groups: &[bool]) -> Self {
        let mut mask = FilterMask::full(graph);
        for group in graph.groups() {
            if !keep_groups[group.id] {
                for &(layer, channel) in &group.members {
                    mask.keep[layer].as_mut().expect("conv layer")[channel] = false;
                }
            }
        }
        mask
    }

    /// Per-group keep bits; errors if members of one group disagree.
    pub fn group_keep(&self, graph: &NetworkGraph) -> Result<Vec<bool>> {
        let mut keep_groups = vec![true; graph.groups().len()];
        for group in graph.groups() {
            let bits: Vec<bool> = group
                .members
                .iter()
                .map(|&(layer, channel)| self.keep[layer].as_ref().expect("conv layer")[channel])
                .collect();
            if bits.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::Mask(format!(
                    "coupling group {} has mixed keep bits",
                    group.id
                )));
            }
            keep_groups[group.id] = bits[0];
        }
        Ok(keep_groups)
    }

    pub fn keep(&self, layer: usize) -> Option<&[bool]> {
        self.keep[layer].as_deref()
    }

    pub fn kept_count(&self, layer: usize) -> usize {
        self.keep[layer]
            .as_ref()
            .map(|v| v.iter().filter(|&&b| b).count())
            .unwrap_or(0)
    }

    pub fn set(&mut self, layer: usize, channel: usize, value: bool) -> Result<()> {
        match self.keep.get_mut(layer).and_then(|k| k.as_mut()) {
            Some(bits) if channel < bits.len() => {
                bits[channel] = value;
                Ok(())
            }
            _ => Err(Error::Mask(format!(
                "layer {layer} channel {channel} is not prunable"
            ))),
        }
    }

    /// Structural validation: vector lengths, coupling agreement, at least one
    /// kept channel per conv layer, protected groups kept.
    pub fn validate(&self, graph: &NetworkGraph) -> Result<()> {
        if self.keep.len() != graph.layers().len() {
            return Err(Error::Mask(format!(
                "mask covers {} layers, graph has {}",
                self.keep.len(),
                graph.layers().len()
            )));
        }
        for (id, layer) in graph.layers().iter().enumerate() {
            match (&self.keep[id], layer.kind.is_conv()) {
                (Some(bits), true) => {
                    if bits.len() != layer.out_channels {
                        return Err(Error::Mask(format!(
                            "layer `{}`: keep vector length {} != {} channels",
                            layer.name,
                            bits.len(),
                            layer.out_channels
                        )));
                    }
                    if !bits.iter().any(|&b| b) {
                        return Err(Error::Mask(format!(
                            "layer `{}` would keep no channels",
                            layer.name
                        )));
                    }
                }
                (None, false) => {}
                _ => {
                    return Err(Error::Mask(format!(
                        "mask/layer kind mismatch at `{}`",
                        layer.name
                    )))
                }
            }
        }
        let keep_groups = self.group_keep(graph)?;
        for group in graph.groups() {
            if !group.prunable && !keep_groups[group.id] {
                return Err(Error::Mask(format!(
                    "group {} is tied to the network input and cannot be pruned",
                    group.id
                )));
            }
        }
        Ok(())
    }

    /// Total kept channels across conv layers.
    pub fn total_kept(&self) -> usize {
        self.keep
            .iter()
            .flatten()
            .map(|bits| bits.iter().filter(|&&b| b).count())
            .sum()
    }
}
