//! Analytic multiply-accumulate cost model.
//!
//! "FLOPs" throughout this crate means multiply-accumulate operations of a
//! single inference, counting conv and dense layers only. Each layer's cost is
//! linear in its kept input channels holding kept outputs fixed, and vice
//! versa, which is what makes incremental recomputation during greedy pruning
//! O(1) per removed group.

use super::{ChannelOrigin, FilterMask, LayerKind, NetworkGraph};
use crate::error::Result;

/// Channel-independent cost coefficient of a layer: MACs per (kept_in x
/// kept_out) unit for standard conv and dense, per kept channel for depthwise
/// conv. Zero for layers outside the cost model.
pub fn layer_cost_unit(graph: &NetworkGraph, layer: usize) -> u64 {
    let spec = graph.layer(layer);
    match spec.kind {
        LayerKind::Conv { k, .. } => (spec.out_hw.0 * spec.out_hw.1 * k * k) as u64,
        LayerKind::Dense => 1,
        _ => 0,
    }
}

fn masked_cost(graph: &NetworkGraph, layer: usize, kept_out: &[usize]) -> u64 {
    let spec = graph.layer(layer);
    let unit = layer_cost_unit(graph, layer);
    match spec.kind {
        LayerKind::Conv {
            depthwise: true, ..
        } => unit * kept_out[layer] as u64,
        LayerKind::Conv {
            depthwise: false, ..
        } => unit * kept_out[spec.inputs[0]] as u64 * kept_out[layer] as u64,
        LayerKind::Dense => unit * kept_out[spec.inputs[0]] as u64 * spec.out_channels as u64,
        _ => 0,
    }
}

fn kept_out_per_layer(graph: &NetworkGraph, keep_groups: &[bool]) -> Vec<usize> {
    graph
        .layers()
        .iter()
        .enumerate()
        .map(|(id, _)| {
            graph
                .origins(id)
                .iter()
                .filter(|o| match o {
                    ChannelOrigin::Input => true,
                    ChannelOrigin::Group(g) => keep_groups[*g],
                })
                .count()
        })
        .collect()
}

/// Total multiply-accumulate count of one inference under `mask`.
pub fn total_flops(graph: &NetworkGraph, mask: &FilterMask) -> Result<u64> {
    mask.validate(graph)?;
    let keep_groups = mask.group_keep(graph)?;
    let kept_out = kept_out_per_layer(graph, &keep_groups);
    Ok((0..graph.layers().len())
        .map(|l| masked_cost(graph, l, &kept_out))
        .sum())
}

/// MAC count of the unpruned network (F0).
pub fn full_flops(graph: &NetworkGraph) -> u64 {
    total_flops(graph, &FilterMask::full(graph)).expect("full mask is always valid")
}

/// Incremental FLOP bookkeeping for greedy group removal.
///
/// Maintains kept output-channel counts per layer and the running MAC total;
/// removing a group touches only the group's layers and their consumers.
pub struct FlopCounter<'g> {
    graph: &'g NetworkGraph,
    kept_out: Vec<usize>,
    keep_groups: Vec<bool>,
    total: u64,
    /// Per group: layers whose output contains a channel of this group.
    group_layers: Vec<Vec<usize>>,
}

impl<'g> FlopCounter<'g> {
    pub fn new(graph: &'g NetworkGraph) -> Self {
        let keep_groups = vec![true; graph.groups().len()];
        let kept_out = kept_out_per_layer(graph, &keep_groups);
        let total = (0..graph.layers().len())
            .map(|l| masked_cost(graph, l, &kept_out))
            .sum();
        let mut group_layers = vec![Vec::new(); graph.groups().len()];
        for (id, _) in graph.layers().iter().enumerate() {
            for origin in graph.origins(id) {
                if let ChannelOrigin::Group(g) = origin {
                    if group_layers[*g].last() != Some(&id) {
                        group_layers[*g].push(id);
                    }
                }
            }
        }
        Self {
            graph,
            kept_out,
            keep_groups,
            total,
            group_layers,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn kept_out(&self, layer: usize) -> usize {
        self.kept_out[layer]
    }

    pub fn keep_groups(&self) -> &[bool] {
        &self.keep_groups
    }

    /// Would removing `group` leave some conv layer with zero channels?
    pub fn would_empty_layer(&self, group: usize) -> bool {
        let members = &self.graph.groups()[group].members;
        let mut idx = 0;
        while idx < members.len() {
            let layer = members[idx].0;
            let in_layer = members[idx..].iter().take_while(|m| m.0 == layer).count();
            if self.kept_out[layer] <= in_layer {
                return true;
            }
            idx += in_layer;
        }
        false
    }

    /// Remove a kept group and return the new MAC total.
    pub fn remove_group(&mut self, group: usize) -> u64 {
        assert!(self.keep_groups[group], "group {group} already removed");
        // Cost-relevant layers: the group's own layers plus their consumers
        // (whose kept_in changes).
        let mut affected: Vec<usize> = Vec::new();
        for &layer in &self.group_layers[group] {
            affected.push(layer);
            affected.extend_from_slice(self.graph.consumers(layer));
        }
        affected.sort_unstable();
        affected.dedup();

        let before: u64 = affected
            .iter()
            .map(|&l| masked_cost(self.graph, l, &self.kept_out))
            .sum();
        for &layer in &self.group_layers[group] {
            let lost = self
                .graph
                .origins(layer)
                .iter()
                .filter(|o| **o == ChannelOrigin::Group(group))
                .count();
            self.kept_out[layer] -= lost;
        }
        let after: u64 = affected
            .iter()
            .map(|&l| masked_cost(self.graph, l, &self.kept_out))
            .sum();
        self.keep_groups[group] = false;
        self.total = self.total - before + after;
        self.total
    }

    /// Snapshot the current state as a mask.
    pub fn mask(&self) -> FilterMask {
        FilterMask::from_group_keep(self.graph, &self.keep_groups)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DescKind, LayerDesc};

    fn conv(name: &str, from: &str, out: usize, k: usize, stride: usize, pad: usize) -> LayerDesc {
        LayerDesc {
            name: name.into(),
            kind: DescKind::Conv {
                k,
                stride,
                pad,
                out_channels: out,
            },
            inputs: vec![from.into()],
        }
    }

    fn tail(from: &str, classes: usize) -> Vec<LayerDesc> {
        vec![
            LayerDesc {
                name: "gap".into(),
                kind: DescKind::GlobalAvgPool,
                inputs: vec![from.into()],
            },
            LayerDesc {
                name: "fc".into(),
                kind: DescKind::Dense {
                    out_channels: classes,
                },
                inputs: vec!["gap".into()],
            },
            LayerDesc {
                name: "loss".into(),
                kind: DescKind::SoftmaxCrossEntropy,
                inputs: vec!["fc".into()],
            },
        ]
    }

    #[test]
    fn single_conv_layer_cost_matches_formula() {
        // conv 3x3, 16->32 channels, output 8x8 => 8*8*9*16*32 MACs.
        let mut descs = vec![
            conv("c1", "input", 16, 3, 1, 1),
            conv("c2", "c1", 32, 3, 1, 1),
        ];
        descs.extend(tail("c2", 4));
        let g = NetworkGraph::build((3, 8, 8), 4, &descs).unwrap();
        let c2 = g.layer_id("c2").unwrap();
        let mask = FilterMask::full(&g);
        let keep = mask.group_keep(&g).unwrap();
        let kept_out = kept_out_per_layer(&g, &keep);
        assert_eq!(masked_cost(&g, c2, &kept_out), 8 * 8 * 9 * 16 * 32);
        assert_eq!(masked_cost(&g, c2, &kept_out), 294_912);
    }

    #[test]
    fn all_but_one_channel_masked_matches_formula_with_kept_one() {
        let mut descs = vec![conv("c1", "input", 4, 3, 1, 1), conv("c2", "c1", 6, 3, 1, 1)];
        descs.extend(tail("c2", 4));
        let g = NetworkGraph::build((3, 8, 8), 4, &descs).unwrap();
        let mut keep = vec![false; g.groups().len()];
        // Keep exactly the first group of each conv layer.
        keep[0] = true;
        keep[4] = true;
        let mask = FilterMask::from_group_keep(&g, &keep);
        let got = total_flops(&g, &mask).unwrap();
        let expect = (8 * 8 * 9 * 3 * 1) + (8 * 8 * 9 * 1 * 1) + 4;
        assert_eq!(got, expect as u64);
    }

    #[test]
    fn halving_kept_out_halves_that_layers_cost() {
        let mut descs = vec![conv("c1", "input", 8, 3, 1, 1), conv("c2", "c1", 8, 3, 1, 1)];
        descs.extend(tail("c2", 4));
        let g = NetworkGraph::build((3, 8, 8), 4, &descs).unwrap();
        let c1 = g.layer_id("c1").unwrap();

        let full = FilterMask::full(&g);
        let keep_full = full.group_keep(&g).unwrap();
        let kept_full = kept_out_per_layer(&g, &keep_full);
        let cost_full = masked_cost(&g, c1, &kept_full);

        let mut mask = FilterMask::full(&g);
        for c in 4..8 {
            mask.set(c1, c, false).unwrap();
        }
        let keep_half = mask.group_keep(&g).unwrap();
        let kept_half = kept_out_per_layer(&g, &keep_half);
        assert_eq!(masked_cost(&g, c1, &kept_half) * 2, cost_full);
    }

    #[test]
    fn incremental_counter_matches_direct_recompute() {
        // Chain with a residual block and a depthwise conv; remove groups one
        // by one and compare against total_flops.
        let descs = vec![
            conv("c1", "input", 8, 3, 1, 1),
            LayerDesc {
                name: "a1".into(),
                kind: DescKind::Relu,
                inputs: vec!["c1".into()],
            },
            conv("c2", "a1", 8, 3, 1, 1),
            LayerDesc {
                name: "add".into(),
                kind: DescKind::ResidualAdd,
                inputs: vec!["a1".into(), "c2".into()],
            },
            LayerDesc {
                name: "dw".into(),
                kind: DescKind::DepthwiseConv {
                    k: 3,
                    stride: 1,
                    pad: 1,
                },
                inputs: vec!["add".into()],
            },
            conv("c3", "dw", 6, 1, 1, 0),
            LayerDesc {
                name: "gap".into(),
                kind: DescKind::GlobalAvgPool,
                inputs: vec!["c3".into()],
            },
            LayerDesc {
                name: "fc".into(),
                kind: DescKind::Dense { out_channels: 3 },
                inputs: vec!["gap".into()],
            },
            LayerDesc {
                name: "loss".into(),
                kind: DescKind::SoftmaxCrossEntropy,
                inputs: vec!["fc".into()],
            },
        ];
        let g = NetworkGraph::build((3, 8, 8), 3, &descs).unwrap();
        let mut counter = FlopCounter::new(&g);
        assert_eq!(counter.total(), full_flops(&g));

        let removable: Vec<usize> = g
            .groups()
            .iter()
            .filter(|grp| grp.prunable)
            .map(|grp| grp.id)
            .collect();
        for &gid in removable.iter().take(6) {
            if counter.would_empty_layer(gid) {
                continue;
            }
            let total = counter.remove_group(gid);
            let direct = total_flops(&g, &counter.mask()).unwrap();
            assert_eq!(total, direct, "incremental drift after removing {gid}");
        }
    }
}
