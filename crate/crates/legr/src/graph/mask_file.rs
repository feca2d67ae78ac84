//! Mask sidecar files: one bitstring per prunable layer.
//!
//! ```text
//! # legr mask v1
//! fingerprint <hex>
//! conv1 110111001101
//! conv2 111111110000
//! ```

use std::path::Path;

use super::{FilterMask, NetworkGraph};
use crate::error::{Error, Result};

pub fn mask_to_text(graph: &NetworkGraph, mask: &FilterMask) -> String {
    let mut out = String::from("# legr mask v1\n");
    out.push_str(&format!("fingerprint {}\n", graph.fingerprint()));
    for &layer in graph.prunable_layers() {
        let bits: String = mask
            .keep(layer)
            .expect("prunable layer has keep bits")
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        out.push_str(&format!("{} {bits}\n", graph.layer(layer).name));
    }
    out
}

pub fn mask_from_text(graph: &NetworkGraph, text: &str, source_name: &str) -> Result<FilterMask> {
    let err = |line: usize, message: String| Error::Parse {
        path: source_name.to_string(),
        line,
        message,
    };
    let mut mask = FilterMask::full(graph);
    let mut fingerprint_seen = false;
    let mut layers_seen = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| err(lineno, "expected `<name> <bits>`".into()))?;
        if head == "fingerprint" {
            let found = rest.trim();
            if found != graph.fingerprint() {
                return Err(Error::Fingerprint {
                    expected: graph.fingerprint().to_string(),
                    found: found.to_string(),
                });
            }
            fingerprint_seen = true;
            continue;
        }
        let layer = graph
            .layer_id(head)
            .ok_or_else(|| err(lineno, format!("unknown layer `{head}`")))?;
        let bits = rest.trim();
        let expected = graph.layer(layer).out_channels;
        if bits.len() != expected {
            return Err(err(
                lineno,
                format!("layer `{head}`: {} bits, expected {expected}", bits.len()),
            ));
        }
        for (channel, ch) in bits.chars().enumerate() {
            let value = match ch {
                '1' => true,
                '0' => false,
                _ => return Err(err(lineno, format!("invalid bit `{ch}`"))),
            };
            mask.set(layer, channel, value)?;
        }
        layers_seen += 1;
    }

    if !fingerprint_seen {
        return Err(err(0, "missing fingerprint line".into()));
    }
    if layers_seen != graph.prunable_layers().len() {
        return Err(err(
            0,
            format!(
                "mask lists {layers_seen} layers, graph has {} prunable layers",
                graph.prunable_layers().len()
            ),
        ));
    }
    mask.validate(graph)?;
    Ok(mask)
}

pub fn write_mask_file(
    graph: &NetworkGraph,
    mask: &FilterMask,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mask_to_text(graph, mask))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_mask_file(graph: &NetworkGraph, path: impl AsRef<Path>) -> Result<FilterMask> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    mask_from_text(graph, &text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DescKind, LayerDesc};

    fn toy_graph() -> NetworkGraph {
        let descs = vec![
            LayerDesc {
                name: "conv1".into(),
                kind: DescKind::Conv {
                    k: 3,
                    stride: 1,
                    pad: 1,
                    out_channels: 4,
                },
                inputs: vec!["input".into()],
            },
            LayerDesc {
                name: "gap".into(),
                kind: DescKind::GlobalAvgPool,
                inputs: vec!["conv1".into()],
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
    fn mask_text_round_trips_byte_identically() {
        let g = toy_graph();
        let mut mask = FilterMask::full(&g);
        mask.set(g.layer_id("conv1").unwrap(), 2, false).unwrap();
        let text = mask_to_text(&g, &mask);
        let parsed = mask_from_text(&g, &text, "mask").unwrap();
        assert_eq!(parsed, mask);
        assert_eq!(mask_to_text(&g, &parsed), text);
    }

    #[test]
    fn wrong_fingerprint_is_rejected() {
        let g = toy_graph();
        let text = mask_to_text(&g, &FilterMask::full(&g)).replace("fingerprint ", "fingerprint 00");
        let err = mask_from_text(&g, &text, "mask").unwrap_err();
        assert_eq!(err.category(), "fingerprint");
    }
}
