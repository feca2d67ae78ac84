//! Minimal trainable network engine: forward, reverse-mode gradients, SGD
//! with Nesterov momentum. Double precision throughout; desk-scale sizes make
//! speed irrelevant next to test fidelity.
//!
//! Engine objects are single-writer: one training loop owns a model at a
//! time. All computation is sequential with fixed order, so a fixed seed
//! fixes every weight, loss and accuracy bit-exactly.

mod checkpoint;
pub mod ops;

pub use checkpoint::{load_checkpoint, param_inventory, save_checkpoint, CHECKPOINT_MAGIC};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{FilterMask, LayerKind, NetworkGraph};
use crate::rng::substream;
use crate::tensor::TensorGrid;

/// One learnable tensor with its gradient accumulator and momentum buffer.
#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub value: TensorGrid,
    pub grad: TensorGrid,
    pub momentum: TensorGrid,
}

impl ParamTensor {
    fn new(value: TensorGrid) -> Self {
        let shape = value.shape().to_vec();
        Self {
            value,
            grad: TensorGrid::zeros(shape.clone()),
            momentum: TensorGrid::zeros(shape),
        }
    }
}

/// Parameters of one layer. Conv layers carry a weight only (the per-channel
/// scale+shift layer provides the affine freedom); scale-shift uses
/// weight=gamma, bias=beta; dense has weight and bias.
#[derive(Debug, Clone, Default)]
pub struct LayerParams {
    pub weight: Option<ParamTensor>,
    pub bias: Option<ParamTensor>,
}

/// SGD hyperparameters. The LR schedule is a list of (step, multiplier)
/// pairs with strictly increasing steps; the multiplier of the last pair at
/// or before the current step applies (default 1.0).
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub nesterov: bool,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub lr_schedule: Vec<(usize, f64)>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            nesterov: true,
            weight_decay: 5e-4,
            batch_size: 8,
            lr_schedule: Vec::new(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must be in [0, 1)".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be nonnegative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.lr_schedule.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config(
                "lr_schedule steps must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Learning rate in effect at `step_index`.
    pub fn effective_lr(&self, step_index: usize) -> f64 {
        let mult = self
            .lr_schedule
            .iter()
            .take_while(|(s, _)| *s <= step_index)
            .last()
            .map(|(_, m)| *m)
            .unwrap_or(1.0);
        self.learning_rate * mult
    }
}

/// Recorded forward pass: per-layer activations plus what the loss backward
/// needs.
#[derive(Debug, Clone)]
struct Trace {
    acts: Vec<TensorGrid>,
    pool_argmax: Vec<Option<Vec<usize>>>,
    probs: TensorGrid,
    labels: Vec<usize>,
    batch: usize,
}

/// A network graph together with its parameters.
#[derive(Debug, Clone)]
pub struct Model {
    graph: NetworkGraph,
    params: Vec<LayerParams>,
    trace: Option<Trace>,
}

impl Model {
    /// He-style initialization drawn from the `init` substream of `seed`.
    pub fn init(graph: NetworkGraph, seed: u64) -> Model {
        let mut rng = substream(seed, "init");
        let mut params = Vec::with_capacity(graph.layers().len());
        for layer in graph.layers() {
            let p = match layer.kind {
                LayerKind::Conv { k, depthwise, .. } => {
                    let cin = if depthwise { 1 } else { layer.in_channels };
                    let fan_in = (cin * k * k) as f64;
                    let dist = Normal::new(0.0, (2.0 / fan_in).sqrt()).unwrap();
                    let shape = vec![layer.out_channels, cin, k, k];
                    let data = (0..shape.iter().product())
                        .map(|_| dist.sample(&mut rng))
                        .collect();
                    LayerParams {
                        weight: Some(ParamTensor::new(TensorGrid::new(shape, data).unwrap())),
                        bias: None,
                    }
                }
                LayerKind::ScaleShift => LayerParams {
                    weight: Some(ParamTensor::new(TensorGrid::filled(
                        vec![layer.out_channels],
                        1.0,
                    ))),
                    bias: Some(ParamTensor::new(TensorGrid::zeros(vec![layer.out_channels]))),
                },
                LayerKind::Dense => {
                    let fan_in = layer.in_channels as f64;
                    let dist = Normal::new(0.0, (1.0 / fan_in).sqrt()).unwrap();
                    let shape = vec![layer.out_channels, layer.in_channels];
                    let data = (0..shape.iter().product())
                        .map(|_| dist.sample(&mut rng))
                        .collect();
                    LayerParams {
                        weight: Some(ParamTensor::new(TensorGrid::new(shape, data).unwrap())),
                        bias: Some(ParamTensor::new(TensorGrid::zeros(vec![
                            layer.out_channels,
                        ]))),
                    }
                }
                _ => LayerParams::default(),
            };
            params.push(p);
        }
        Model {
            graph,
            params,
            trace: None,
        }
    }

    pub fn from_parts(graph: NetworkGraph, params: Vec<LayerParams>) -> Result<Model> {
        if params.len() != graph.layers().len() {
            return Err(Error::Engine(format!(
                "{} param entries for {} layers",
                params.len(),
                graph.layers().len()
            )));
        }
        Ok(Model {
            graph,
            params,
            trace: None,
        })
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn params(&self) -> &[LayerParams] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [LayerParams] {
        &mut self.params
    }

    /// Total learnable parameter count.
    pub fn param_count(&self) -> usize {
        self.params
            .iter()
            .flat_map(|p| [&p.weight, &p.bias])
            .flatten()
            .map(|t| t.value.len())
            .sum()
    }

    fn check_input(&self, images: &TensorGrid) -> Result<usize> {
        let input = self.graph.layer(0);
        let shape = images.shape();
        let want = [input.out_channels, input.out_hw.0, input.out_hw.1];
        if shape.len() != 4 || shape[1..] != want {
            return Err(Error::Shape {
                context: "model input".into(),
                expected: format!("[N, {}, {}, {}]", want[0], want[1], want[2]),
                actual: format!("{shape:?}"),
            });
        }
        Ok(shape[0])
    }

    /// Run all layers, returning per-layer activations, pool argmax buffers
    /// and the id of the logits layer.
    fn run_layers(&self, images: &TensorGrid) -> Result<(Vec<TensorGrid>, Vec<Option<Vec<usize>>>)> {
        let batch = self.check_input(images)?;
        let layers = self.graph.layers();
        let mut acts: Vec<TensorGrid> = Vec::with_capacity(layers.len());
        let mut argmaxes: Vec<Option<Vec<usize>>> = vec![None; layers.len()];
        acts.push(images.clone());

        for (id, layer) in layers.iter().enumerate().skip(1) {
            let (h, w) = layer.out_hw;
            let act = match layer.kind {
                LayerKind::Input => unreachable!(),
                LayerKind::Conv {
                    k,
                    stride,
                    pad,
                    depthwise,
                } => {
                    let src = &acts[layer.inputs[0]];
                    let (ih, iw) = layer.in_hw;
                    let mut out =
                        TensorGrid::zeros(vec![batch, layer.out_channels, h, w]);
                    ops::conv_forward(
                        src.data(),
                        batch,
                        layer.in_channels,
                        ih,
                        iw,
                        self.params[id].weight.as_ref().unwrap().value.data(),
                        layer.out_channels,
                        k,
                        stride,
                        pad,
                        depthwise,
                        out.data_mut(),
                        h,
                        w,
                    );
                    out
                }
                LayerKind::ScaleShift => {
                    let src = &acts[layer.inputs[0]];
                    let mut out = TensorGrid::zeros(src.shape().to_vec());
                    let plane = layer.out_hw.0 * layer.out_hw.1;
                    ops::scale_shift_forward(
                        src.data(),
                        batch,
                        layer.out_channels,
                        plane,
                        self.params[id].weight.as_ref().unwrap().value.data(),
                        self.params[id].bias.as_ref().unwrap().value.data(),
                        out.data_mut(),
                    );
                    out
                }
                LayerKind::Relu => {
                    let src = &acts[layer.inputs[0]];
                    let mut out = TensorGrid::zeros(src.shape().to_vec());
                    ops::relu_forward(src.data(), out.data_mut());
                    out
                }
                LayerKind::MaxPool2 => {
                    let src = &acts[layer.inputs[0]];
                    let (ih, iw) = layer.in_hw;
                    let mut out = TensorGrid::zeros(vec![batch, layer.out_channels, h, w]);
                    let mut argmax = vec![0usize; batch * layer.out_channels * h * w];
                    ops::maxpool2_forward(
                        src.data(),
                        batch,
                        layer.out_channels,
                        ih,
                        iw,
                        out.data_mut(),
                        &mut argmax,
                    );
                    argmaxes[id] = Some(argmax);
                    out
                }
                LayerKind::GlobalAvgPool => {
                    let src = &acts[layer.inputs[0]];
                    let (ih, iw) = layer.in_hw;
                    let mut out = TensorGrid::zeros(vec![batch, layer.out_channels]);
                    ops::gap_forward(src.data(), batch, layer.out_channels, ih, iw, out.data_mut());
                    out
                }
                LayerKind::Dense => {
                    let src = &acts[layer.inputs[0]];
                    let mut out = TensorGrid::zeros(vec![batch, layer.out_channels]);
                    ops::dense_forward(
                        src.data(),
                        batch,
                        layer.in_channels,
                        self.params[id].weight.as_ref().unwrap().value.data(),
                        self.params[id].bias.as_ref().unwrap().value.data(),
                        layer.out_channels,
                        out.data_mut(),
                    );
                    out
                }
                LayerKind::ResidualAdd => {
                    let a = &acts[layer.inputs[0]];
                    let b = &acts[layer.inputs[1]];
                    let mut out = a.clone();
                    for (o, &bv) in out.data_mut().iter_mut().zip(b.data()) {
                        *o += bv;
                    }
                    out
                }
                // The loss value is computed by the caller; keep a placeholder
                // activation so indices line up.
                LayerKind::SoftmaxCrossEntropy => TensorGrid::zeros(vec![1]),
            };
            acts.push(act);
        }
        Ok((acts, argmaxes))
    }

    fn logits_layer(&self) -> usize {
        let loss_id = self.graph.layers().len() - 1;
        self.graph.layer(loss_id).inputs[0]
    }

    /// Forward pass with trace recording; returns the mean cross-entropy loss.
    pub fn forward(&mut self, images: &TensorGrid, labels: &[usize]) -> Result<f64> {
        let batch = self.check_input(images)?;
        if labels.len() != batch {
            return Err(Error::Data(format!(
                "{} labels for batch of {batch}",
                labels.len()
            )));
        }
        let classes = self.graph.class_count();
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        let (acts, pool_argmax) = self.run_layers(images)?;
        let logits = &acts[self.logits_layer()];
        let mut probs = TensorGrid::zeros(vec![batch, classes]);
        let loss =
            ops::softmax_xent_forward(logits.data(), batch, classes, labels, probs.data_mut());
        self.trace = Some(Trace {
            acts,
            pool_argmax,
            probs,
            labels: labels.to_vec(),
            batch,
        });
        Ok(loss)
    }

    /// Reverse-mode gradients for every parameter, accumulated into the
    /// `grad` buffers. Requires a recorded forward pass.
    pub fn backward(&mut self) -> Result<()> {
        let trace = self
            .trace
            .take()
            .ok_or_else(|| Error::Engine("backward called before forward".into()))?;
        let layers = self.graph.layers();
        let batch = trace.batch;
        let mut grads: Vec<TensorGrid> = trace
            .acts
            .iter()
            .map(|a| TensorGrid::zeros(a.shape().to_vec()))
            .collect();

        // Seed the chain at the logits.
        let logits_id = self.logits_layer();
        let classes = self.graph.class_count();
        ops::softmax_xent_backward(
            trace.probs.data(),
            batch,
            classes,
            &trace.labels,
            grads[logits_id].data_mut(),
        );

        for id in (1..layers.len()).rev() {
            let layer = &layers[id];
            if matches!(
                layer.kind,
                LayerKind::SoftmaxCrossEntropy | LayerKind::Input
            ) {
                continue;
            }
            let d_out = std::mem::replace(&mut grads[id], TensorGrid::zeros(vec![1]));
            match layer.kind {
                LayerKind::Conv {
                    k,
                    stride,
                    pad,
                    depthwise,
                } => {
                    let pred = layer.inputs[0];
                    let (ih, iw) = layer.in_hw;
                    let (oh, ow) = layer.out_hw;
                    let mut wparam = self.params[id].weight.take().unwrap();
                    ops::conv_backward_input(
                        d_out.data(),
                        batch,
                        layer.in_channels,
                        ih,
                        iw,
                        wparam.value.data(),
                        layer.out_channels,
                        k,
                        stride,
                        pad,
                        depthwise,
                        grads[pred].data_mut(),
                        oh,
                        ow,
                    );
                    ops::conv_backward_weight(
                        trace.acts[pred].data(),
                        d_out.data(),
                        batch,
                        layer.in_channels,
                        ih,
                        iw,
                        layer.out_channels,
                        k,
                        stride,
                        pad,
                        depthwise,
                        wparam.grad.data_mut(),
                        oh,
                        ow,
                    );
                    self.params[id].weight = Some(wparam);
                }
                LayerKind::ScaleShift => {
                    let pred = layer.inputs[0];
                    let plane = layer.out_hw.0 * layer.out_hw.1;
                    let mut wparam = self.params[id].weight.take().unwrap();
                    let mut bparam = self.params[id].bias.take().unwrap();
                    ops::scale_shift_backward(
                        trace.acts[pred].data(),
                        d_out.data(),
                        batch,
                        layer.out_channels,
                        plane,
                        wparam.value.data(),
                        grads[pred].data_mut(),
                        wparam.grad.data_mut(),
                        bparam.grad.data_mut(),
                    );
                    self.params[id].weight = Some(wparam);
                    self.params[id].bias = Some(bparam);
                }
                LayerKind::Relu => {
                    let pred = layer.inputs[0];
                    ops::relu_backward(
                        trace.acts[pred].data(),
                        d_out.data(),
                        grads[pred].data_mut(),
                    );
                }
                LayerKind::MaxPool2 => {
                    let pred = layer.inputs[0];
                    ops::maxpool2_backward(
                        d_out.data(),
                        trace.pool_argmax[id].as_ref().unwrap(),
                        grads[pred].data_mut(),
                    );
                }
                LayerKind::GlobalAvgPool => {
                    let pred = layer.inputs[0];
                    let (ih, iw) = layer.in_hw;
                    ops::gap_backward(
                        d_out.data(),
                        batch,
                        layer.out_channels,
                        ih,
                        iw,
                        grads[pred].data_mut(),
                    );
                }
                LayerKind::Dense => {
                    let pred = layer.inputs[0];
                    let mut wparam = self.params[id].weight.take().unwrap();
                    let mut bparam = self.params[id].bias.take().unwrap();
                    ops::dense_backward(
                        trace.acts[pred].data(),
                        d_out.data(),
                        batch,
                        layer.in_channels,
                        wparam.value.data(),
                        layer.out_channels,
                        grads[pred].data_mut(),
                        wparam.grad.data_mut(),
                        bparam.grad.data_mut(),
                    );
                    self.params[id].weight = Some(wparam);
                    self.params[id].bias = Some(bparam);
                }
                LayerKind::ResidualAdd => {
                    for &pred in &layer.inputs {
                        for (g, &d) in grads[pred].data_mut().iter_mut().zip(d_out.data()) {
                            *g += d;
                        }
                    }
                }
                LayerKind::Input | LayerKind::SoftmaxCrossEntropy => unreachable!(),
            }
        }
        Ok(())
    }

    /// One SGD update with Nesterov momentum and weight decay:
    /// `g = grad + wd*w; v = mu*v + g; w -= lr * (g + mu*v)` (or `v` when
    /// nesterov is off). Gradients are zeroed afterwards.
    pub fn sgd_step(&mut self, config: &TrainConfig, step_index: usize) {
        let lr = config.effective_lr(step_index);
        let (mu, wd) = (config.momentum, config.weight_decay);
        for layer in &mut self.params {
            for param in [&mut layer.weight, &mut layer.bias].into_iter().flatten() {
                let value = param.value.data_mut();
                let grad = param.grad.data_mut();
                let mom = param.momentum.data_mut();
                for i in 0..value.len() {
                    let g = grad[i] + wd * value[i];
                    mom[i] = mu * mom[i] + g;
                    let update = if config.nesterov { g + mu * mom[i] } else { mom[i] };
                    value[i] -= lr * update;
                    grad[i] = 0.0;
                }
            }
        }
    }

    /// Materialize the pruned network: pruned output channels removed, the
    /// matching input slices of all consumers removed. Gradients and momentum
    /// start zeroed.
    pub fn apply_mask(&self, mask: &FilterMask) -> Result<Model> {
        mask.validate(&self.graph)?;
        let new_graph = self.graph.masked(mask)?;
        let keep_groups = mask.group_keep(&self.graph)?;
        let keep = self.graph.channel_keep(&keep_groups);

        let mut params = Vec::with_capacity(self.params.len());
        for (id, layer) in self.graph.layers().iter().enumerate() {
            let old = &self.params[id];
            let p = match layer.kind {
                LayerKind::Conv { k, depthwise, .. } => {
                    let out_keep = &keep[id];
                    let in_keep: Vec<bool> = if depthwise {
                        vec![true] // depthwise weight has a single input slot
                    } else {
                        keep[layer.inputs[0]].clone()
                    };
                    let old_w = &old.weight.as_ref().unwrap().value;
                    let cin_old = if depthwise { 1 } else { layer.in_channels };
                    let cout_new = out_keep.iter().filter(|&&b| b).count();
                    let cin_new = in_keep.iter().filter(|&&b| b).count();
                    let mut data = Vec::with_capacity(cout_new * cin_new * k * k);
                    for (co, &keep_o) in out_keep.iter().enumerate() {
                        if !keep_o {
                            continue;
                        }
                        for (ci, &keep_i) in in_keep.iter().enumerate() {
                            if !keep_i {
                                continue;
                            }
                            let base = (co * cin_old + ci) * k * k;
                            data.extend_from_slice(&old_w.data()[base..base + k * k]);
                        }
                    }
                    LayerParams {
                        weight: Some(ParamTensor::new(
                            TensorGrid::new(vec![cout_new, cin_new, k, k], data).unwrap(),
                        )),
                        bias: None,
                    }
                }
                LayerKind::ScaleShift => {
                    let chan_keep = &keep[id];
                    let select = |t: &TensorGrid| {
                        let data: Vec<f64> = t
                            .data()
                            .iter()
                            .zip(chan_keep)
                            .filter(|(_, &b)| b)
                            .map(|(&v, _)| v)
                            .collect();
                        let n = data.len();
                        TensorGrid::new(vec![n], data).unwrap()
                    };
                    LayerParams {
                        weight: Some(ParamTensor::new(select(&old.weight.as_ref().unwrap().value))),
                        bias: Some(ParamTensor::new(select(&old.bias.as_ref().unwrap().value))),
                    }
                }
                LayerKind::Dense => {
                    let in_keep = &keep[layer.inputs[0]];
                    let old_w = &old.weight.as_ref().unwrap().value;
                    let in_old = layer.in_channels;
                    let mut data = Vec::new();
                    for o in 0..layer.out_channels {
                        for (i, &keep_i) in in_keep.iter().enumerate() {
                            if keep_i {
                                data.push(old_w.data()[o * in_old + i]);
                            }
                        }
                    }
                    let in_new = in_keep.iter().filter(|&&b| b).count();
                    LayerParams {
                        weight: Some(ParamTensor::new(
                            TensorGrid::new(vec![layer.out_channels, in_new], data).unwrap(),
                        )),
                        bias: Some(ParamTensor::new(old.bias.as_ref().unwrap().value.clone())),
                    }
                }
                _ => LayerParams::default(),
            };
            params.push(p);
        }
        Model::from_parts(new_graph, params)
    }
}

fn gather_batch(
    images: &TensorGrid,
    labels: &[usize],
    idxs: &[usize],
) -> (TensorGrid, Vec<usize>) {
    let sample = images.len() / images.shape()[0];
    let mut shape = images.shape().to_vec();
    shape[0] = idxs.len();
    let mut data = Vec::with_capacity(idxs.len() * sample);
    let mut batch_labels = Vec::with_capacity(idxs.len());
    for &i in idxs {
        data.extend_from_slice(&images.data()[i * sample..(i + 1) * sample]);
        batch_labels.push(labels[i]);
    }
    (TensorGrid::new(shape, data).unwrap(), batch_labels)
}

/// Exactly `n_steps` SGD updates over seeded-shuffle epochs of the data.
/// Returns the last minibatch loss (for `n_steps == 0`, the loss of the first
/// batch without any update).
pub fn train_steps(
    model: &mut Model,
    images: &TensorGrid,
    labels: &[usize],
    config: &TrainConfig,
    n_steps: usize,
) -> Result<f64> {
    config.validate()?;
    let n = labels.len();
    if n == 0 || images.shape()[0] != n {
        return Err(Error::Data(format!(
            "dataset with {} images / {n} labels",
            images.shape()[0]
        )));
    }
    if n_steps == 0 {
        let idxs: Vec<usize> = (0..n.min(config.batch_size)).collect();
        let (batch, batch_labels) = gather_batch(images, labels, &idxs);
        let mut probe = model.clone();
        return probe.forward(&batch, &batch_labels);
    }

    let mut rng = substream(config.seed, "train-data");
    let mut order: Vec<usize> = (0..n).collect();
    let mut pos = n;
    let mut last_loss = 0.0;
    for step in 0..n_steps {
        let mut idxs = Vec::with_capacity(config.batch_size);
        while idxs.len() < config.batch_size {
            if pos == n {
                // Fisher-Yates via the dedicated data stream.
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    order.swap(i, j);
                }
                pos = 0;
            }
            idxs.push(order[pos]);
            pos += 1;
        }
        let (batch, batch_labels) = gather_batch(images, labels, &idxs);
        last_loss = model.forward(&batch, &batch_labels)?;
        model.backward()?;
        model.sgd_step(config, step);
    }
    Ok(last_loss)
}

/// Fraction of argmax-correct predictions; ties resolve to the lowest class
/// index. Deterministic.
pub fn evaluate(model: &Model, images: &TensorGrid, labels: &[usize]) -> Result<f64> {
    let n = labels.len();
    if n == 0 || images.shape()[0] != n {
        return Err(Error::Data("evaluate on empty dataset".into()));
    }
    let classes = model.graph.class_count();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Data(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    let mut correct = 0usize;
    let chunk = 128;
    let mut start = 0;
    while start < n {
        let idxs: Vec<usize> = (start..(start + chunk).min(n)).collect();
        let (batch, batch_labels) = gather_batch(images, labels, &idxs);
        let (acts, _) = model.run_layers(&batch)?;
        let logits = &acts[model.logits_layer()];
        for (row, &label) in batch_labels.iter().enumerate() {
            let scores = &logits.data()[row * classes..(row + 1) * classes];
            let mut best = 0usize;
            for (c, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = c;
                }
            }
            if best == label {
                correct += 1;
            }
        }
        start += chunk;
    }
    Ok(correct as f64 / n as f64)
}
