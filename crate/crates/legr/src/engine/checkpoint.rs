//! Self-describing checkpoint container.
//!
//! Layout: magic `LEGRCKPT1`, little-endian u32 entry count, then per entry a
//! manifest record (u16 name length, name bytes, u8 dtype tag — 0 = f64,
//! u8 ndim, ndim x u32 dims) followed by all payloads as little-endian f64 in
//! manifest order. Loading validates names and shapes against the graph.

use std::io::{Read, Write};
use std::path::Path;

use super::{LayerParams, Model, ParamTensor};
use crate::error::{Error, Result};
use crate::graph::{LayerKind, NetworkGraph};
use crate::tensor::TensorGrid;

pub const CHECKPOINT_MAGIC: &[u8; 9] = b"LEGRCKPT1";
const DTYPE_F64: u8 = 0;

/// Expected parameter names and shapes for a graph, in serialization order.
pub fn param_inventory(graph: &NetworkGraph) -> Vec<(String, Vec<usize>)> {
    let mut entries = Vec::new();
    for layer in graph.layers() {
        match layer.kind {
            LayerKind::Conv { k, depthwise, .. } => {
                let cin = if depthwise { 1 } else { layer.in_channels };
                entries.push((
                    format!("{}.weight", layer.name),
                    vec![layer.out_channels, cin, k, k],
                ));
            }
            LayerKind::ScaleShift => {
                entries.push((format!("{}.gamma", layer.name), vec![layer.out_channels]));
                entries.push((format!("{}.beta", layer.name), vec![layer.out_channels]));
            }
            LayerKind::Dense => {
                entries.push((
                    format!("{}.weight", layer.name),
                    vec![layer.out_channels, layer.in_channels],
                ));
                entries.push((format!("{}.bias", layer.name), vec![layer.out_channels]));
            }
            _ => {}
        }
    }
    entries
}

fn model_tensors<'m>(model: &'m Model) -> Vec<(String, &'m TensorGrid)> {
    let mut out = Vec::new();
    for (layer, params) in model.graph().layers().iter().zip(model.params()) {
        match layer.kind {
            LayerKind::Conv { .. } => {
                out.push((
                    format!("{}.weight", layer.name),
                    &params.weight.as_ref().unwrap().value,
                ));
            }
            LayerKind::ScaleShift => {
                out.push((
                    format!("{}.gamma", layer.name),
                    &params.weight.as_ref().unwrap().value,
                ));
                out.push((
                    format!("{}.beta", layer.name),
                    &params.bias.as_ref().unwrap().value,
                ));
            }
            LayerKind::Dense => {
                out.push((
                    format!("{}.weight", layer.name),
                    &params.weight.as_ref().unwrap().value,
                ));
                out.push((
                    format!("{}.bias", layer.name),
                    &params.bias.as_ref().unwrap().value,
                ));
            }
            _ => {}
        }
    }
    out
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tensors = model_tensors(model);
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, tensor) in &tensors {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.push(DTYPE_F64);
        buf.push(tensor.shape().len() as u8);
        for &dim in tensor.shape() {
            buf.extend_from_slice(&(dim as u32).to_le_bytes());
        }
    }
    for (_, tensor) in &tensors {
        for v in tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(&buf)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_checkpoint(graph: &NetworkGraph, path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(display.clone(), e))?;

    let mut cursor = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        if cursor + n > bytes.len() {
            return Err(Error::Checkpoint(format!("{display}: truncated payload")));
        }
        let slice = &bytes[cursor..cursor + n];
        cursor += n;
        Ok(slice)
    };

    if take(9)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint(format!("{display}: bad magic")));
    }
    let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let mut manifest: Vec<(String, Vec<usize>)> = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(name_len)?.to_vec())
            .map_err(|_| Error::Checkpoint(format!("{display}: non-utf8 tensor name")))?;
        let dtype = take(1)?[0];
        if dtype != DTYPE_F64 {
            return Err(Error::Checkpoint(format!(
                "{display}: unsupported dtype tag {dtype}"
            )));
        }
        let ndim = take(1)?[0] as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
        }
        manifest.push((name, shape));
    }

    let expected = param_inventory(graph);
    if manifest.len() != expected.len() {
        return Err(Error::Checkpoint(format!(
            "{display}: {} tensors, graph expects {}",
            manifest.len(),
            expected.len()
        )));
    }
    for ((name, shape), (want_name, want_shape)) in manifest.iter().zip(&expected) {
        if name != want_name || shape != want_shape {
            return Err(Error::Shape {
                context: format!("checkpoint entry `{name}`"),
                expected: format!("`{want_name}` {want_shape:?}"),
                actual: format!("`{name}` {shape:?}"),
            });
        }
    }

    let mut tensors = Vec::with_capacity(manifest.len());
    for (_, shape) in &manifest {
        let n: usize = shape.iter().product();
        let raw = take(n * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(TensorGrid::new(shape.clone(), data)?);
    }
    if cursor != bytes.len() {
        return Err(Error::Checkpoint(format!("{display}: trailing bytes")));
    }

    // Reassemble layer params in graph order.
    let mut iter = tensors.into_iter();
    let mut params = Vec::with_capacity(graph.layers().len());
    for layer in graph.layers() {
        let p = match layer.kind {
            LayerKind::Conv { .. } => LayerParams {
                weight: Some(ParamTensor::new(iter.next().unwrap())),
                bias: None,
            },
            LayerKind::ScaleShift | LayerKind::Dense => LayerParams {
                weight: Some(ParamTensor::new(iter.next().unwrap())),
                bias: Some(ParamTensor::new(iter.next().unwrap())),
            },
            _ => LayerParams::default(),
        };
        params.push(p);
    }
    Model::from_parts(graph.clone(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::tests::tiny_graph;

    #[test]
    fn checkpoint_round_trips_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = Model::init(tiny_graph(), 42);
        save_checkpoint(&model, &path).unwrap();
        let loaded = load_checkpoint(model.graph(), &path).unwrap();
        let path2 = dir.path().join("model2.ckpt");
        save_checkpoint(&loaded, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn loading_against_wrong_graph_names_the_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = Model::init(tiny_graph(), 1);
        save_checkpoint(&model, &path).unwrap();

        // Same layer names, different channel count.
        let descs = vec![
            crate::graph::LayerDesc {
                name: "conv1".into(),
                kind: crate::graph::DescKind::Conv {
                    k: 3,
                    stride: 1,
                    pad: 1,
                    out_channels: 5,
                },
                inputs: vec!["input".into()],
            },
            crate::graph::LayerDesc {
                name: "act1".into(),
                kind: crate::graph::DescKind::Relu,
                inputs: vec!["conv1".into()],
            },
            crate::graph::LayerDesc {
                name: "gap".into(),
                kind: crate::graph::DescKind::GlobalAvgPool,
                inputs: vec!["act1".into()],
            },
            crate::graph::LayerDesc {
                name: "fc".into(),
                kind: crate::graph::DescKind::Dense { out_channels: 3 },
                inputs: vec!["gap".into()],
            },
            crate::graph::LayerDesc {
                name: "loss".into(),
                kind: crate::graph::DescKind::SoftmaxCrossEntropy,
                inputs: vec!["fc".into()],
            },
        ];
        let other = NetworkGraph::build((2, 6, 6), 3, &descs).unwrap();
        let err = load_checkpoint(&other, &path).unwrap_err();
        assert_eq!(err.category(), "shape");
        assert!(err.to_string().contains("conv1.weight"));
    }

    #[test]
    fn bad_magic_and_truncation_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = Model::init(tiny_graph(), 1);
        save_checkpoint(&model, &path).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        let bad = dir.path().join("bad.ckpt");
        std::fs::write(&bad, &bytes[1..]).unwrap();
        assert!(load_checkpoint(model.graph(), &bad).is_err());

        let short = dir.path().join("short.ckpt");
        std::fs::write(&short, &bytes[..bytes.len() - 5]).unwrap();
        let err = load_checkpoint(model.graph(), &short).unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }
}
