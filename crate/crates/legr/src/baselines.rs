//! Reference pruners: uniform per-layer pruning and global magnitude
//! pruning. Both share the mask/fine-tune machinery of the rest of the crate.
//!
//! `global_norm_prune` is deliberately written as its own greedy loop with
//! direct FLOP recomputation rather than delegating to the ranking module; it
//! doubles as the independent route that the identity-transform equivalence
//! checks compare against.

use crate::engine::Model;
use crate::error::{Error, Result};
use crate::graph::{total_flops, FilterMask, NetworkGraph};
use crate::ranking::{filter_norms, LayerNorms};

/// Which baseline pruner to run. `Uniform` and `LocalNormUniform` are two
/// names for the same construction (a single keep-fraction applied to every
/// layer, selecting each layer's top-norm filters); both tags are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Uniform,
    LocalNormUniform,
    GlobalNorm,
}

impl BaselineKind {
    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "uniform" => Ok(Self::Uniform),
            "local_norm_uniform" => Ok(Self::LocalNormUniform),
            "global_norm" => Ok(Self::GlobalNorm),
            other => Err(Error::Config(format!(
                "unknown baseline `{other}` (expected uniform, local_norm_uniform or global_norm)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::LocalNormUniform => "local_norm_uniform",
            Self::GlobalNorm => "global_norm",
        }
    }
}

/// Dispatch a baseline mask generator.
pub fn baseline_mask(kind: BaselineKind, model: &Model, zeta: f64) -> Result<FilterMask> {
    let norms = filter_norms(model);
    match kind {
        BaselineKind::Uniform | BaselineKind::LocalNormUniform => {
            uniform_prune_from_norms(model.graph(), &norms, zeta)
        }
        BaselineKind::GlobalNorm => global_norm_prune_from_norms(model.graph(), &norms, zeta),
    }
}

/// Summed raw squared norms per coupling group (identity importance).
fn group_norm_sums(graph: &NetworkGraph, norms: &LayerNorms) -> Vec<f64> {
    let mut sums = vec![0.0; graph.groups().len()];
    for group in graph.groups() {
        for &(layer, channel) in &group.members {
            let pos = graph.prunable_index(layer).expect("conv member");
            sums[group.id] += norms[pos][channel];
        }
    }
    sums
}

pub fn uniform_prune(model: &Model, zeta: f64) -> Result<FilterMask> {
    uniform_prune_from_norms(model.graph(), &filter_norms(model), zeta)
}

/// One keep-fraction for every layer, each layer keeping its top-norm groups;
/// the largest feasible fraction on a grid with one-channel granularity of
/// the widest layer.
pub fn uniform_prune_from_norms(
    graph: &NetworkGraph,
    norms: &LayerNorms,
    zeta: f64,
) -> Result<FilterMask> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Config(format!("zeta {zeta} outside (0, 1]")));
    }
    let f0 = crate::graph::full_flops(graph);
    let target = zeta * f0 as f64;
    let max_channels = graph
        .prunable_layers()
        .iter()
        .map(|&l| graph.layer(l).out_channels)
        .max()
        .unwrap_or(1);
    let sums = group_norm_sums(graph, norms);

    let mut last_ratio = 1.0;
    for i in 0..=max_channels {
        let p = 1.0 - i as f64 / max_channels as f64;
        let mask = uniform_mask_for_fraction(graph, &sums, p);
        let flops = total_flops(graph, &mask)?;
        last_ratio = flops as f64 / f0 as f64;
        if flops as f64 <= target {
            return Ok(mask);
        }
    }
    Err(Error::Infeasible {
        zeta,
        min_ratio: last_ratio,
    })
}

/// Mask keeping `max(1, floor(p * C_l))` channels per layer, chosen by group
/// norm sum; a coupled group survives only if it makes the cut in every layer
/// it spans.
pub fn uniform_mask_for_fraction(graph: &NetworkGraph, sums: &[f64], p: f64) -> FilterMask {
    let mut keep_groups = vec![false; graph.groups().len()];
    // Protected groups are always kept.
    for group in graph.groups() {
        if !group.prunable {
            keep_groups[group.id] = true;
        }
    }

    // First pass: per-layer top-k marking; a group must win in all its layers.
    let mut wins: Vec<usize> = vec![0; graph.groups().len()];
    let mut spans: Vec<usize> = vec![0; graph.groups().len()];
    for &layer in graph.prunable_layers() {
        let spec = graph.layer(layer);
        let k_l = ((p * spec.out_channels as f64).floor() as usize)
            .max(1)
            .min(spec.out_channels);
        let mut local: Vec<usize> = graph
            .groups()
            .iter()
            .filter(|g| g.members.iter().any(|m| m.0 == layer))
            .map(|g| g.id)
            .collect();
        local.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
        for (rank, &gid) in local.iter().enumerate() {
            spans[gid] += 1;
            if rank < k_l {
                wins[gid] += 1;
            }
        }
    }
    for group in graph.groups() {
        if group.prunable && spans[group.id] > 0 && wins[group.id] == spans[group.id] {
            keep_groups[group.id] = true;
        }
    }

    // Guard: never leave a layer empty (possible only with cross-layer vetoes).
    for &layer in graph.prunable_layers() {
        let mut local: Vec<usize> = graph
            .groups()
            .iter()
            .filter(|g| g.members.iter().any(|m| m.0 == layer))
            .map(|g| g.id)
            .collect();
        if local.iter().any(|&g| keep_groups[g]) {
            continue;
        }
        local.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
        keep_groups[local[0]] = true;
    }

    FilterMask::from_group_keep(graph, &keep_groups)
}

pub fn global_norm_prune(model: &Model, zeta: f64) -> Result<FilterMask> {
    global_norm_prune_from_norms(model.graph(), &filter_norms(model), zeta)
}

/// Plain global magnitude pruning: remove groups in ascending norm-sum order
/// until the budget is met, skipping removals that would empty a layer.
/// Direct FLOP recomputation every step.
pub fn global_norm_prune_from_norms(
    graph: &NetworkGraph,
    norms: &LayerNorms,
    zeta: f64,
) -> Result<FilterMask> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Config(format!("zeta {zeta} outside (0, 1]")));
    }
    let f0 = crate::graph::full_flops(graph);
    let target = zeta * f0 as f64;
    let sums = group_norm_sums(graph, norms);
    let mut order: Vec<(f64, usize)> = sums.iter().enumerate().map(|(g, &s)| (s, g)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut mask = FilterMask::full(graph);
    let mut kept: Vec<usize> = graph.layers().iter().map(|l| l.out_channels).collect();
    for (_, gid) in order {
        if total_flops(graph, &mask)? as f64 <= target {
            break;
        }
        let group = &graph.groups()[gid];
        if !group.prunable {
            continue;
        }
        let empties = group.members.iter().any(|&(layer, _)| {
            let in_layer = group.members.iter().filter(|m| m.0 == layer).count();
            kept[layer] <= in_layer
        });
        if empties {
            continue;
        }
        for &(layer, channel) in &group.members {
            mask.set(layer, channel, false)?;
            kept[layer] -= 1;
        }
    }
    let final_flops = total_flops(graph, &mask)?;
    if final_flops as f64 > target {
        return Err(Error::Infeasible {
            zeta,
            min_ratio: final_flops as f64 / f0 as f64,
        });
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DescKind, LayerDesc};
    use crate::ranking::{legr_prune_from_norms, AffinePair};

    fn homogeneous_chain(width: usize, depth: usize) -> NetworkGraph {
        let mut descs = Vec::new();
        let mut prev = "input".to_string();
        for i in 0..depth {
            let name = format!("conv{i}");
            descs.push(LayerDesc {
                name: name.clone(),
                kind: DescKind::Conv {
                    k: 3,
                    stride: 1,
                    pad: 1,
                    out_channels: width,
                },
                inputs: vec![prev.clone()],
            });
            prev = name;
        }
        descs.push(LayerDesc {
            name: "gap".into(),
            kind: DescKind::GlobalAvgPool,
            inputs: vec![prev],
        });
        descs.push(LayerDesc {
            name: "fc".into(),
            kind: DescKind::Dense { out_channels: 2 },
            inputs: vec!["gap".into()],
        });
        descs.push(LayerDesc {
            name: "loss".into(),
            kind: DescKind::SoftmaxCrossEntropy,
            inputs: vec!["fc".into()],
        });
        NetworkGraph::build((3, 8, 8), 2, &descs).unwrap()
    }

    fn ramp_norms(graph: &NetworkGraph) -> LayerNorms {
        graph
            .prunable_layers()
            .iter()
            .enumerate()
            .map(|(pos, &l)| {
                (0..graph.layer(l).out_channels)
                    .map(|c| 1.0 + pos as f64 * 0.17 + c as f64 * 0.61)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn zeta_one_keeps_everything() {
        let g = homogeneous_chain(8, 3);
        let norms = ramp_norms(&g);
        assert_eq!(
            uniform_prune_from_norms(&g, &norms, 1.0).unwrap(),
            FilterMask::full(&g)
        );
        assert_eq!(
            global_norm_prune_from_norms(&g, &norms, 1.0).unwrap(),
            FilterMask::full(&g)
        );
    }

    #[test]
    fn homogeneous_chain_quarter_flops_keeps_about_half_per_layer() {
        // Interior layer cost scales with p^2, so zeta = 0.25 lands near
        // p = 0.5. Oracle: scan fractions directly.
        let g = homogeneous_chain(16, 6);
        let norms = ramp_norms(&g);
        let mask = uniform_prune_from_norms(&g, &norms, 0.25).unwrap();
        for &layer in g.prunable_layers() {
            let kept = mask.kept_count(layer);
            assert!(
                (7..=9).contains(&kept),
                "layer {layer} kept {kept}, expected about 8 of 16"
            );
        }
    }

    #[test]
    fn uniform_kept_sets_are_top_norm_filters() {
        let g = homogeneous_chain(10, 3);
        let norms = ramp_norms(&g);
        let mask = uniform_prune_from_norms(&g, &norms, 0.4).unwrap();
        for (pos, &layer) in g.prunable_layers().iter().enumerate() {
            let keep = mask.keep(layer).unwrap();
            let kept_norms: Vec<f64> = keep
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(c, _)| norms[pos][c])
                .collect();
            let dropped_max = keep
                .iter()
                .enumerate()
                .filter(|(_, &b)| !b)
                .map(|(c, _)| norms[pos][c])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(kept_norms.iter().all(|&k| k > dropped_max));
        }
    }

    #[test]
    fn uniform_maximality_one_granule_more_violates() {
        let g = homogeneous_chain(12, 4);
        let norms = ramp_norms(&g);
        let zeta = 0.37;
        let f0 = crate::graph::full_flops(&g);
        let mask = uniform_prune_from_norms(&g, &norms, zeta).unwrap();
        let flops = total_flops(&g, &mask).unwrap();
        assert!(flops as f64 <= zeta * f0 as f64);

        // Reconstruct the chosen fraction, then try one granule higher.
        let sums = group_norm_sums(&g, &norms);
        let max_channels = 12;
        let mut chosen = None;
        for i in 0..=max_channels {
            let p = 1.0 - i as f64 / max_channels as f64;
            if uniform_mask_for_fraction(&g, &sums, p) == mask {
                chosen = Some(p);
                break;
            }
        }
        let p = chosen.expect("mask came from the fraction grid");
        if p < 1.0 {
            let bigger = uniform_mask_for_fraction(&g, &sums, p + 1.0 / max_channels as f64);
            let bigger_flops = total_flops(&g, &bigger).unwrap();
            assert!(bigger_flops as f64 > zeta * f0 as f64);
        }
    }

    #[test]
    fn global_norm_equals_identity_legr_prune() {
        let g = homogeneous_chain(9, 4);
        let norms = ramp_norms(&g);
        let pair = AffinePair::identity(g.prunable_layers().len());
        for zeta in [0.9, 0.6, 0.35] {
            let a = global_norm_prune_from_norms(&g, &norms, zeta).unwrap();
            let b = legr_prune_from_norms(&g, &norms, &pair, zeta).unwrap();
            assert_eq!(a, b, "divergence at zeta {zeta}");
        }
    }

    #[test]
    fn equal_norms_break_ties_by_layer_then_channel() {
        let g = homogeneous_chain(4, 2);
        let norms: LayerNorms = vec![vec![1.0; 4], vec![1.0; 4]];
        let mask = global_norm_prune_from_norms(&g, &norms, 0.7).unwrap();
        // Ties resolve in group-id order, which is (layer, channel) order, so
        // removals consume conv0's low channels first.
        let conv0 = g.layer_id("conv0").unwrap();
        let keep = mask.keep(conv0).unwrap();
        let removed_here: Vec<usize> = keep
            .iter()
            .enumerate()
            .filter(|(_, &b)| !b)
            .map(|(c, _)| c)
            .collect();
        for (i, c) in removed_here.iter().enumerate() {
            assert_eq!(i, *c, "removals are a prefix of channel order");
        }
    }

    #[test]
    fn masks_pass_the_graph_validator() {
        let g = homogeneous_chain(8, 3);
        let norms = ramp_norms(&g);
        for zeta in [0.8, 0.5, 0.3] {
            uniform_prune_from_norms(&g, &norms, zeta)
                .unwrap()
                .validate(&g)
                .unwrap();
            global_norm_prune_from_norms(&g, &norms, zeta)
                .unwrap()
                .validate(&g)
                .unwrap();
        }
    }
}
