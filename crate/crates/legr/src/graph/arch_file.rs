//! Human-readable architecture spec files.
//!
//! ```text
//! # comment
//! version 1
//! input 3 16 16
//! classes 5
//! layer conv1 kind=conv k=3 stride=1 pad=1 out_channels=12 inputs=input
//! layer ss1   kind=scale_shift inputs=conv1
//! layer act1  kind=relu inputs=ss1
//! layer add1  kind=add inputs=act1,conv3
//! layer gap   kind=gap inputs=act1
//! layer fc    kind=dense out_channels=5 inputs=gap
//! layer loss  kind=softmax_xent inputs=fc
//! ```
//!
//! `kind` is one of conv, dwconv, scale_shift, relu, maxpool, gap, dense,
//! add, softmax_xent. Unknown keys fail loudly with the offending line number.

use std::collections::HashMap;
use std::path::Path;

use super::{DescKind, LayerDesc, LayerKind, NetworkGraph};
use crate::error::{Error, Result};

pub fn read_arch_file(path: impl AsRef<Path>) -> Result<NetworkGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    graph_from_text(&text, &path.display().to_string())
}

pub fn write_arch_file(graph: &NetworkGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, graph_to_text(graph)).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn graph_from_text(text: &str, source_name: &str) -> Result<NetworkGraph> {
    let err = |line: usize, message: String| Error::Parse {
        path: source_name.to_string(),
        line,
        message,
    };

    let mut version: Option<u32> = None;
    let mut input: Option<(usize, usize, usize)> = None;
    let mut classes: Option<usize> = None;
    let mut descs: Vec<LayerDesc> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next().unwrap() {
            "version" => {
                if version.is_some() {
                    return Err(err(lineno, "duplicate `version`".into()));
                }
                let v: u32 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(lineno, "expected `version <int>`".into()))?;
                if v != 1 {
                    return Err(err(lineno, format!("unsupported version {v}")));
                }
                version = Some(v);
            }
            "input" => {
                if input.is_some() {
                    return Err(err(lineno, "duplicate `input`".into()));
                }
                let dims: Vec<usize> = tokens
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(lineno, "expected `input <C> <H> <W>`".into()))?;
                if dims.len() != 3 {
                    return Err(err(lineno, "expected `input <C> <H> <W>`".into()));
                }
                input = Some((dims[0], dims[1], dims[2]));
            }
            "classes" => {
                if classes.is_some() {
                    return Err(err(lineno, "duplicate `classes`".into()));
                }
                classes = Some(
                    tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(lineno, "expected `classes <int>`".into()))?,
                );
            }
            "layer" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| err(lineno, "expected `layer <name> key=value...`".into()))?
                    .to_string();
                if name == "input" {
                    return Err(err(lineno, "`input` is a reserved layer name".into()));
                }
                let mut fields: HashMap<&str, &str> = HashMap::new();
                for tok in tokens {
                    let (key, value) = tok
                        .split_once('=')
                        .ok_or_else(|| err(lineno, format!("expected key=value, got `{tok}`")))?;
                    if fields.insert(key, value).is_some() {
                        return Err(err(lineno, format!("duplicate key `{key}`")));
                    }
                }
                descs.push(parse_layer(name, &mut fields, lineno, source_name)?);
                if let Some(extra) = fields.keys().next() {
                    return Err(err(lineno, format!("unknown key `{extra}`")));
                }
            }
            other => return Err(err(lineno, format!("unknown directive `{other}`"))),
        }
    }

    if version.is_none() {
        return Err(err(0, "missing `version`".into()));
    }
    let input = input.ok_or_else(|| err(0, "missing `input`".into()))?;
    let classes = classes.ok_or_else(|| err(0, "missing `classes`".into()))?;
    NetworkGraph::build(input, classes, &descs)
}

fn parse_layer(
    name: String,
    fields: &mut HashMap<&str, &str>,
    lineno: usize,
    source_name: &str,
) -> Result<LayerDesc> {
    let err = |message: String| Error::Parse {
        path: source_name.to_string(),
        line: lineno,
        message,
    };
    let kind_token = fields
        .remove("kind")
        .ok_or_else(|| err("missing `kind`".into()))?
        .to_string();
    let inputs: Vec<String> = fields
        .remove("inputs")
        .ok_or_else(|| err("missing `inputs`".into()))?
        .split(',')
        .map(|s| s.to_string())
        .collect();

    let mut take_usize = |key: &str| -> Result<usize> {
        fields
            .remove(key)
            .ok_or_else(|| err(format!("missing `{key}` for kind={kind_token}")))?
            .parse()
            .map_err(|_| err(format!("invalid integer for `{key}`")))
    };

    let kind = match kind_token.as_str() {
        "conv" => DescKind::Conv {
            k: take_usize("k")?,
            stride: take_usize("stride")?,
            pad: take_usize("pad")?,
            out_channels: take_usize("out_channels")?,
        },
        "dwconv" => DescKind::DepthwiseConv {
            k: take_usize("k")?,
            stride: take_usize("stride")?,
            pad: take_usize("pad")?,
        },
        "scale_shift" => DescKind::ScaleShift,
        "relu" => DescKind::Relu,
        "maxpool" => DescKind::MaxPool2,
        "gap" => DescKind::GlobalAvgPool,
        "dense" => DescKind::Dense {
            out_channels: take_usize("out_channels")?,
        },
        "add" => DescKind::ResidualAdd,
        "softmax_xent" => DescKind::SoftmaxCrossEntropy,
        other => return Err(err(format!("unknown kind `{other}`"))),
    };
    Ok(LayerDesc { name, kind, inputs })
}

/// Canonical text form; parses back to an identical graph.
pub fn graph_to_text(graph: &NetworkGraph) -> String {
    let mut out = String::new();
    let input = graph.layer(0);
    out.push_str("version 1\n");
    out.push_str(&format!(
        "input {} {} {}\n",
        input.out_channels, input.out_hw.0, input.out_hw.1
    ));
    out.push_str(&format!("classes {}\n", graph.class_count()));
    for layer in &graph.layers()[1..] {
        let inputs = layer
            .inputs
            .iter()
            .map(|&i| graph.layer(i).name.clone())
            .collect::<Vec<_>>()
            .join(",");
        match layer.kind {
            LayerKind::Conv {
                k,
                stride,
                pad,
                depthwise,
            } => {
                if depthwise {
                    out.push_str(&format!(
                        "layer {} kind=dwconv k={k} stride={stride} pad={pad} inputs={inputs}\n",
                        layer.name
                    ));
                } else {
                    out.push_str(&format!(
                        "layer {} kind=conv k={k} stride={stride} pad={pad} out_channels={} inputs={inputs}\n",
                        layer.name, layer.out_channels
                    ));
                }
            }
            LayerKind::Dense => out.push_str(&format!(
                "layer {} kind=dense out_channels={} inputs={inputs}\n",
                layer.name, layer.out_channels
            )),
            _ => out.push_str(&format!(
                "layer {} kind={} inputs={inputs}\n",
                layer.name,
                layer.kind.token()
            )),
        }
    }
    out
}
