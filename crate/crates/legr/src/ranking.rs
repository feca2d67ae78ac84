//! Learned global filter ranking: per-layer affine transforms over squared
//! filter norms, global sorting, and FLOP-targeted mask generation.
//!
//! A filter's importance is `alpha_l * ||theta||^2 + kappa_l` for its layer
//! `l`; coupled channels sum their importances. Pruning removes groups in
//! ascending importance until the MAC budget is met, recomputing the total
//! incrementally after each removal. Because the scan order is fixed by the
//! ranking alone, masks for lower budgets are supersets of the removals for
//! higher budgets: nested families come out by construction.

use std::path::Path;

use crate::engine::Model;
use crate::error::{Error, Result};
use crate::graph::{FilterMask, FlopCounter, LayerKind, NetworkGraph};

/// Per-layer scale/shift over squared filter norms; one entry per prunable
/// (conv) layer in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePair {
    pub alpha: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl AffinePair {
    /// The identity transform `alpha = 1, kappa = 0`: plain global magnitude
    /// ranking.
    pub fn identity(layer_count: usize) -> Self {
        Self {
            alpha: vec![1.0; layer_count],
            kappa: vec![0.0; layer_count],
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn validate(&self, graph: &NetworkGraph) -> Result<()> {
        let want = graph.prunable_layers().len();
        if self.alpha.len() != want || self.kappa.len() != want {
            return Err(Error::Config(format!(
                "affine pair covers {}/{} layers, graph has {want} prunable layers",
                self.alpha.len(),
                self.kappa.len()
            )));
        }
        if self
            .alpha
            .iter()
            .chain(&self.kappa)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("affine pair has non-finite entries".into()));
        }
        Ok(())
    }

    /// (c*alpha, c*kappa); rankings are invariant under c > 0.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            alpha: self.alpha.iter().map(|a| c * a).collect(),
            kappa: self.kappa.iter().map(|k| c * k).collect(),
        }
    }
}

/// Squared L2 norms per filter, indexed by prunable-layer position.
pub type LayerNorms = Vec<Vec<f64>>;

/// Squared L2 norm of each filter's full weight slice, for every prunable
/// layer.
pub fn filter_norms(model: &Model) -> LayerNorms {
    let graph = model.graph();
    graph
        .prunable_layers()
        .iter()
        .map(|&layer| {
            let spec = graph.layer(layer);
            let weight = &model.params()[layer].weight.as_ref().unwrap().value;
            let per_filter = weight.len() / spec.out_channels;
            (0..spec.out_channels)
                .map(|co| {
                    weight.data()[co * per_filter..(co + 1) * per_filter]
                        .iter()
                        .map(|v| v * v)
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Group importances with a stable ascending order: (importance, group id).
#[derive(Debug, Clone)]
pub struct ImportanceTable {
    per_group: Vec<f64>,
    ascending: Vec<(f64, usize)>,
}

impl ImportanceTable {
    pub fn group_importance(&self, group: usize) -> f64 {
        self.per_group[group]
    }

    /// Groups in removal order: ascending importance, ties broken by group id
    /// (which orders by smallest (layer, channel) member).
    pub fn ascending(&self) -> &[(f64, usize)] {
        &self.ascending
    }
}

/// Per-filter affine importances summed within each coupling group.
pub fn importance(
    norms: &LayerNorms,
    pair: &AffinePair,
    graph: &NetworkGraph,
) -> Result<ImportanceTable> {
    pair.validate(graph)?;
    if norms.len() != graph.prunable_layers().len() {
        return Err(Error::Config(format!(
            "norms cover {} layers, graph has {} prunable layers",
            norms.len(),
            graph.prunable_layers().len()
        )));
    }
    let mut per_group = vec![0.0; graph.groups().len()];
    for group in graph.groups() {
        for &(layer, channel) in &group.members {
            let pos = graph
                .prunable_index(layer)
                .expect("group members are conv layers");
            per_group[group.id] += pair.alpha[pos] * norms[pos][channel] + pair.kappa[pos];
        }
    }
    let mut ascending: Vec<(f64, usize)> = per_group
        .iter()
        .enumerate()
        .map(|(g, &imp)| (imp, g))
        .collect();
    ascending.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ImportanceTable {
        per_group,
        ascending,
    })
}

/// What a pruning scan did: removed group ids in removal order, and groups
/// skipped by the one-channel (or protected) guard.
#[derive(Debug, Clone, Default)]
pub struct PruneTrace {
    pub removed: Vec<usize>,
    pub skipped: Vec<usize>,
}

/// Prune bottom-ranked groups until `total MACs <= zeta * F0`.
pub fn legr_prune(model: &Model, pair: &AffinePair, zeta: f64) -> Result<FilterMask> {
    let norms = filter_norms(model);
    legr_prune_from_norms(model.graph(), &norms, pair, zeta)
}

pub fn legr_prune_from_norms(
    graph: &NetworkGraph,
    norms: &LayerNorms,
    pair: &AffinePair,
    zeta: f64,
) -> Result<FilterMask> {
    legr_prune_traced(graph, norms, pair, zeta).map(|(mask, _)| mask)
}

pub fn legr_prune_traced(
    graph: &NetworkGraph,
    norms: &LayerNorms,
    pair: &AffinePair,
    zeta: f64,
) -> Result<(FilterMask, PruneTrace)> {
    let masks = nested_scan(graph, norms, pair, &[zeta])?;
    let (mut masks, trace) = masks;
    Ok((masks.pop().unwrap(), trace))
}

/// Masks for a descending list of FLOP ratios; kept sets are layerwise nested
/// across the list.
pub fn nested_masks(
    graph: &NetworkGraph,
    norms: &LayerNorms,
    pair: &AffinePair,
    zetas: &[f64],
) -> Result<Vec<FilterMask>> {
    nested_scan(graph, norms, pair, zetas).map(|(masks, _)| masks)
}

fn nested_scan(
    graph: &NetworkGraph,
    norms: &LayerNorms,
    pair: &AffinePair,
    zetas: &[f64],
) -> Result<(Vec<FilterMask>, PruneTrace)> {
    if zetas.is_empty() {
        return Err(Error::Config("no FLOP targets given".into()));
    }
    for z in zetas {
        if !(*z > 0.0 && *z <= 1.0) {
            return Err(Error::Config(format!("zeta {z} outside (0, 1]")));
        }
    }
    if zetas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Config("zeta list must be sorted descending".into()));
    }

    let table = importance(norms, pair, graph)?;
    let f0 = crate::graph::full_flops(graph);
    let mut counter = FlopCounter::new(graph);
    let mut trace = PruneTrace::default();
    let mut scan = table.ascending().iter();
    let mut masks = Vec::with_capacity(zetas.len());

    for &zeta in zetas {
        let target = zeta * f0 as f64;
        while counter.total() as f64 > target {
            let Some(&(_, gid)) = scan.next() else {
                return Err(Error::Infeasible {
                    zeta,
                    min_ratio: counter.total() as f64 / f0 as f64,
                });
            };
            let group = &graph.groups()[gid];
            if !group.prunable || counter.would_empty_layer(gid) {
                trace.skipped.push(gid);
                continue;
            }
            counter.remove_group(gid);
            trace.removed.push(gid);
        }
        masks.push(counter.mask());
    }
    Ok((masks, trace))
}

/// Pair files: fingerprint plus one record per prunable layer.
///
/// ```text
/// # legr affine pair v1
/// fingerprint <hex>
/// layer conv1 alpha 1.25 kappa -0.5
/// ```
pub fn pair_to_text(graph: &NetworkGraph, pair: &AffinePair) -> String {
    let mut out = String::from("# legr affine pair v1\n");
    out.push_str(&format!("fingerprint {}\n", graph.fingerprint()));
    for (pos, &layer) in graph.prunable_layers().iter().enumerate() {
        out.push_str(&format!(
            "layer {} alpha {} kappa {}\n",
            graph.layer(layer).name,
            pair.alpha[pos],
            pair.kappa[pos]
        ));
    }
    out
}

pub fn pair_from_text(graph: &NetworkGraph, text: &str, source_name: &str) -> Result<AffinePair> {
    let err = |line: usize, message: String| Error::Parse {
        path: source_name.to_string(),
        line,
        message,
    };
    let mut alpha = Vec::new();
    let mut kappa = Vec::new();
    let mut names = Vec::new();
    let mut fingerprint_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["fingerprint", found] => {
                if *found != graph.fingerprint() {
                    return Err(Error::Fingerprint {
                        expected: graph.fingerprint().to_string(),
                        found: found.to_string(),
                    });
                }
                fingerprint_seen = true;
            }
            ["layer", name, "alpha", a, "kappa", k] => {
                let a: f64 = a
                    .parse()
                    .map_err(|_| err(lineno, format!("invalid alpha `{a}`")))?;
                let k: f64 = k
                    .parse()
                    .map_err(|_| err(lineno, format!("invalid kappa `{k}`")))?;
                names.push(name.to_string());
                alpha.push(a);
                kappa.push(k);
            }
            _ => return Err(err(lineno, format!("unrecognized line `{line}`"))),
        }
    }

    if !fingerprint_seen {
        return Err(err(0, "missing fingerprint line".into()));
    }
    let expected: Vec<String> = graph
        .prunable_layers()
        .iter()
        .map(|&l| graph.layer(l).name.clone())
        .collect();
    if names != expected {
        return Err(err(
            0,
            format!("pair lists layers {names:?}, graph has {expected:?}"),
        ));
    }
    let pair = AffinePair { alpha, kappa };
    pair.validate(graph)?;
    Ok(pair)
}

pub fn write_pair_file(
    graph: &NetworkGraph,
    pair: &AffinePair,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, pair_to_text(graph, pair))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_pair_file(graph: &NetworkGraph, path: impl AsRef<Path>) -> Result<AffinePair> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    pair_from_text(graph, &text, &path.display().to_string())
}

/// Parameter count of the network materialized under `mask` (without building
/// it): conv weights, scale/shift pairs, dense weights and biases.
pub fn masked_param_count(graph: &NetworkGraph, mask: &FilterMask) -> Result<usize> {
    mask.validate(graph)?;
    let keep_groups = mask.group_keep(graph)?;
    let keep = graph.channel_keep(&keep_groups);
    let kept = |layer: usize| keep[layer].iter().filter(|&&b| b).count();
    let mut count = 0usize;
    for (id, layer) in graph.layers().iter().enumerate() {
        match layer.kind {
            LayerKind::Conv { k, depthwise, .. } => {
                let cin = if depthwise { 1 } else { kept(layer.inputs[0]) };
                count += kept(id) * cin * k * k;
            }
            LayerKind::ScaleShift => count += 2 * kept(id),
            LayerKind::Dense => count += layer.out_channels * (kept(layer.inputs[0]) + 1),
            _ => {}
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DescKind, LayerDesc};

    fn two_conv_graph(c1: usize, c2: usize) -> NetworkGraph {
        let descs = vec![
            LayerDesc {
                name: "conv1".into(),
                kind: DescKind::Conv {
                    k: 3,
                    stride: 1,
                    pad: 1,
                    out_channels: c1,
                },
                inputs: vec!["input".into()],
            },
            LayerDesc {
                name: "act1".into(),
                kind: DescKind::Relu,
                inputs: vec!["conv1".into()],
            },
            LayerDesc {
                name: "conv2".into(),
                kind: DescKind::Conv {
                    k: 3,
                    stride: 1,
                    pad: 1,
                    out_channels: c2,
                },
                inputs: vec!["act1".into()],
            },
            LayerDesc {
                name: "gap".into(),
                kind: DescKind::GlobalAvgPool,
                inputs: vec!["conv2".into()],
            },
            LayerDesc {
                name: "fc".into(),
                kind: DescKind::Dense { out_channels: 2 },
                inputs: vec!["gap".into()],
            },
            LayerDesc {
                name: "loss".into(),
                kind: DescKind::SoftmaxCrossEntropy,
                inputs: vec!["fc".into()],
            },
        ];
        NetworkGraph::build((3, 8, 8), 2, &descs).unwrap()
    }

    #[test]
    fn norm_of_explicit_filter_is_sum_of_squares() {
        use crate::engine::Model;
        let graph = two_conv_graph(4, 4);
        let mut model = Model::init(graph, 0);
        let conv1 = model.graph().layer_id("conv1").unwrap();
        let w = model.params_mut()[conv1].weight.as_mut().unwrap();
        w.value.fill(0.0);
        // filter 0: entries 3 and 4 somewhere in the slice -> norm^2 = 25.
        w.value.data_mut()[0] = 3.0;
        w.value.data_mut()[5] = 4.0;
        let norms = filter_norms(&model);
        assert_eq!(norms[0][0], 25.0);
        assert_eq!(norms[0][1], 0.0);
    }

    #[test]
    fn importance_is_affine_in_norms() {
        let graph = two_conv_graph(2, 2);
        // Positions: conv1 -> 0, conv2 -> 1.
        let norms: LayerNorms = vec![vec![25.0, 1.0], vec![4.0, 9.0]];
        let pair = AffinePair {
            alpha: vec![2.0, 1.0],
            kappa: vec![1.0, 0.0],
        };
        let table = importance(&norms, &pair, &graph).unwrap();
        // conv1 channel 0 is group 0: 2*25+1 = 51.
        assert_eq!(table.group_importance(0), 51.0);

        // Identity pair reproduces raw norms.
        let id = AffinePair::identity(2);
        let t = importance(&norms, &id, &graph).unwrap();
        assert_eq!(t.group_importance(0), 25.0);
        assert_eq!(t.group_importance(2), 4.0);
    }

    #[test]
    fn zeta_one_prunes_nothing() {
        let graph = two_conv_graph(4, 4);
        let norms: LayerNorms = vec![vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]];
        let mask =
            legr_prune_from_norms(&graph, &norms, &AffinePair::identity(2), 1.0).unwrap();
        assert_eq!(mask, FilterMask::full(&graph));
    }

    #[test]
    fn kappa_dominance_consumes_other_layer_first() {
        let graph = two_conv_graph(4, 4);
        let norms: LayerNorms = vec![vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]];
        let pair = AffinePair {
            alpha: vec![1.0, 1.0],
            kappa: vec![1000.0, 0.0],
        };
        let (_, trace) =
            legr_prune_traced(&graph, &norms, &pair, 0.5).unwrap();
        let conv2 = graph.layer_id("conv2").unwrap();
        // Every removed group must be a conv2 channel (conv2 can't empty, so
        // the guard keeps one).
        assert!(!trace.removed.is_empty());
        for gid in &trace.removed {
            assert!(graph.groups()[*gid].members.iter().all(|m| m.0 == conv2));
        }
    }

    #[test]
    fn infeasible_zeta_reports_minimal_ratio() {
        let graph = two_conv_graph(2, 2);
        let norms: LayerNorms = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let err = legr_prune_from_norms(&graph, &norms, &AffinePair::identity(2), 1e-6)
            .unwrap_err();
        match err {
            Error::Infeasible { min_ratio, .. } => assert!(min_ratio > 1e-6 && min_ratio < 1.0),
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn nested_masks_singleton_equals_legr_prune() {
        let graph = two_conv_graph(4, 6);
        let norms: LayerNorms = vec![
            vec![0.5, 2.0, 1.5, 0.1],
            vec![1.0, 0.2, 3.0, 0.9, 2.2, 0.4],
        ];
        let pair = AffinePair {
            alpha: vec![1.3, 0.7],
            kappa: vec![0.1, -0.2],
        };
        let single = legr_prune_from_norms(&graph, &norms, &pair, 0.6).unwrap();
        let nested = nested_masks(&graph, &norms, &pair, &[0.6]).unwrap();
        assert_eq!(nested.len(), 1);
        assert_eq!(nested[0], single);
    }

    #[test]
    fn nested_masks_keep_sets_are_subsets() {
        let graph = two_conv_graph(6, 6);
        let norms: LayerNorms = vec![
            vec![0.5, 2.0, 1.5, 0.1, 0.8, 0.3],
            vec![1.0, 0.2, 3.0, 0.9, 2.2, 0.4],
        ];
        let pair = AffinePair {
            alpha: vec![1.0, 1.0],
            kappa: vec![0.0, 0.1],
        };
        let zetas = [1.0, 0.5];
        let masks = nested_masks(&graph, &norms, &pair, &zetas).unwrap();
        assert_eq!(masks[0], FilterMask::full(&graph));
        let direct = legr_prune_from_norms(&graph, &norms, &pair, 0.5).unwrap();
        assert_eq!(masks[1], direct);
        for &layer in graph.prunable_layers() {
            let small = masks[1].keep(layer).unwrap();
            let large = masks[0].keep(layer).unwrap();
            for (s, l) in small.iter().zip(large) {
                assert!(!s | l, "kept(small) must be subset of kept(large)");
            }
        }
    }

    #[test]
    fn pair_file_round_trips_and_checks_fingerprint() {
        let graph = two_conv_graph(3, 3);
        let pair = AffinePair {
            alpha: vec![1.5, -0.25],
            kappa: vec![0.125, 3.0e-7],
        };
        let text = pair_to_text(&graph, &pair);
        let parsed = pair_from_text(&graph, &text, "pair").unwrap();
        assert_eq!(parsed, pair);
        assert_eq!(pair_to_text(&graph, &parsed), text);

        let other = two_conv_graph(3, 4);
        let err = pair_from_text(&other, &text, "pair").unwrap_err();
        assert_eq!(err.category(), "fingerprint");
    }
}
