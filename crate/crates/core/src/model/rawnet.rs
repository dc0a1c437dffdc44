use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::{ModelError, RawNetConfig, ShapeTrace};
use crate::nn::{
    init, read_checkpoint, softmax, write_checkpoint, BatchNorm1d, Checkpoint, CheckpointTensor, Conv1d, Dense, Gru,
    Layer, LeakyRelu, MaxPool1d, NnError, Padding, Param, Scalar, Tensor,
};

/// Residual block: a stack of `Conv(k, 1) + BN` stages with LeakyReLU
/// between them, added to the (projected, if the width changes) input, then
/// LeakyReLU and max pooling.
#[derive(Debug, Clone)]
pub struct ResBlock<T> {
    convs: Vec<Conv1d<T>>,
    bns: Vec<BatchNorm1d<T>>,
    acts: Vec<LeakyRelu<T>>,
    proj: Option<Conv1d<T>>,
    out_act: LeakyRelu<T>,
    pool: MaxPool1d,
}

impl<T: Scalar> ResBlock<T> {
    pub fn new(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        convs: usize,
        kernel: usize,
        pool: usize,
        slope: f64,
    ) -> Result<Self, NnError> {
        if convs == 0 {
            return Err(NnError::InvalidSpec(format!("residual block {name} needs at least one convolution")));
        }
        let slope = T::from_f64_lossy(slope);
        let mut block = ResBlock {
            convs: Vec::with_capacity(convs),
            bns: Vec::with_capacity(convs),
            acts: Vec::new(),
            proj: None,
            out_act: LeakyRelu::new(slope)?,
            pool: MaxPool1d::new(pool, pool, true)?,
        };
        for i in 0..convs {
            let ci = if i == 0 { in_ch } else { out_ch };
            block.convs.push(Conv1d::new(&format!("{name}.conv{i}"), ci, out_ch, kernel, 1, Padding::Same)?);
            block.bns.push(BatchNorm1d::new(&format!("{name}.bn{i}"), out_ch));
            if i + 1 < convs {
                block.acts.push(LeakyRelu::new(slope)?);
            }
        }
        if in_ch != out_ch {
            block.proj = Some(Conv1d::new(&format!("{name}.proj"), in_ch, out_ch, 1, 1, Padding::Same)?);
        }
        Ok(block)
    }

    fn init<R: Rng>(&mut self, rng: &mut R) {
        for conv in self.convs.iter_mut().chain(self.proj.as_mut()) {
            init_conv(conv, rng);
        }
    }

    fn batch_norms_mut(&mut self) -> impl Iterator<Item = &mut BatchNorm1d<T>> {
        self.bns.iter_mut()
    }

    fn batch_norms(&self) -> impl Iterator<Item = &BatchNorm1d<T>> {
        self.bns.iter()
    }
}

fn init_conv<T: Scalar, R: Rng>(conv: &mut Conv1d<T>, rng: &mut R) {
    let fan_in = conv.in_channels() * conv.kernel();
    init::he_uniform(&mut conv.weight.value, fan_in, rng);
    conv.bias.value.fill(T::zero());
}

impl<T: Scalar> Layer<T> for ResBlock<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let last = self.convs.len() - 1;
        let mut y = x.clone();
        for i in 0..=last {
            y = self.convs[i].forward(&y)?;
            y = self.bns[i].forward(&y)?;
            if i < last {
                y = self.acts[i].forward(&y)?;
            }
        }
        match &mut self.proj {
            Some(p) => y.add_assign(&p.forward(x)?)?,
            None => y.add_assign(x)?,
        }
        let y = self.out_act.forward(&y)?;
        self.pool.forward(&y)
    }

    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let last = self.convs.len() - 1;
        let mut y = x.clone();
        for i in 0..=last {
            y = self.bns[i].infer(&self.convs[i].infer(&y)?)?;
            if i < last {
                y = self.acts[i].infer(&y)?;
            }
        }
        match &self.proj {
            Some(p) => y.add_assign(&p.infer(x)?)?,
            None => y.add_assign(x)?,
        }
        self.pool.infer(&self.out_act.infer(&y)?)
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let d = Layer::<T>::backward(&mut self.pool, dy)?;
        let d = self.out_act.backward(&d)?;
        let mut skip = match &mut self.proj {
            Some(p) => p.backward(&d)?,
            None => d.clone(),
        };
        let last = self.convs.len() - 1;
        let mut g = d;
        for i in (0..=last).rev() {
            if i < last {
                g = self.acts[i].backward(&g)?;
            }
            g = self.bns[i].backward(&g)?;
            g = self.convs[i].backward(&g)?;
        }
        skip.add_assign(&g)?;
        Ok(skip)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let mut s = input.to_vec();
        for (conv, bn) in self.convs.iter().zip(&self.bns) {
            s = bn.output_shape(&conv.output_shape(&s)?)?;
        }
        if let Some(p) = &self.proj {
            p.output_shape(input)?;
        }
        Layer::<T>::output_shape(&self.pool, &s)
    }

    fn params(&self) -> Vec<&Param<T>> {
        let mut out = Vec::new();
        for (conv, bn) in self.convs.iter().zip(&self.bns) {
            out.extend(conv.params());
            out.extend(bn.params());
        }
        if let Some(p) = &self.proj {
            out.extend(p.params());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut out = Vec::new();
        for (conv, bn) in self.convs.iter_mut().zip(self.bns.iter_mut()) {
            out.extend(conv.params_mut());
            out.extend(bn.params_mut());
        }
        if let Some(p) = &mut self.proj {
            out.extend(p.params_mut());
        }
        out
    }
}

/// The shallow RawNet: strided front convolution, two residual blocks, a GRU
/// summarizing the remaining sequence, and two dense layers.
///
/// As a [`Layer`] it maps `[batch, 1, input_len]` to `[batch, classes]`
/// logits; [`RawNet::predict_frame`] adds the softmax.
#[derive(Debug, Clone)]
pub struct RawNet<T> {
    config: RawNetConfig,
    front_conv: Conv1d<T>,
    front_bn: BatchNorm1d<T>,
    front_act: LeakyRelu<T>,
    block1: ResBlock<T>,
    block2: ResBlock<T>,
    gru: Gru<T>,
    dense: Dense<T>,
    dense_act: LeakyRelu<T>,
    head: Dense<T>,
}

/// Builds a zero-weight `f32` RawNet after validating the config. Under
/// `config.strict` the time axis must follow the reference chain.
pub fn build_rawnet(config: &RawNetConfig) -> Result<RawNet<f32>, ModelError> {
    RawNet::new(config)
}

impl<T: Scalar> RawNet<T> {
    pub fn new(config: &RawNetConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let c = config;
        let (b1, b2) = c.block_convs();
        let slope = T::from_f64_lossy(c.leaky_slope);
        let net = RawNet {
            config: c.clone(),
            front_conv: Conv1d::new("front.conv", 1, c.front_filters, c.conv_kernel, c.conv_kernel, Padding::Same)?,
            front_bn: BatchNorm1d::new("front.bn", c.front_filters),
            front_act: LeakyRelu::new(slope)?,
            block1: ResBlock::new("block1", c.front_filters, c.front_filters, b1, c.conv_kernel, c.pool, c.leaky_slope)?,
            block2: ResBlock::new("block2", c.front_filters, c.block2_filters, b2, c.conv_kernel, c.pool, c.leaky_slope)?,
            gru: Gru::new("gru", c.block2_filters, c.gru_units)?,
            dense: Dense::new("dense", c.gru_units, c.dense_units)?,
            dense_act: LeakyRelu::new(slope)?,
            head: Dense::new("head", c.dense_units, c.num_classes)?,
        };
        let trace = net.trace()?;
        if trace != c.shape_trace() {
            return Err(ModelError::ConfigInvalid(format!(
                "built graph traces {trace:?}, config implies {:?}",
                c.shape_trace()
            )));
        }
        Ok(net)
    }

    pub fn config(&self) -> &RawNetConfig {
        &self.config
    }

    /// Stage shapes declared by the built layers for a single input frame.
    pub fn trace(&self) -> Result<ShapeTrace, NnError> {
        let mut s = vec![1, 1, self.config.input_len];
        s = self.front_bn.output_shape(&self.front_conv.output_shape(&s)?)?;
        let mut out = vec![vec![s[2], s[1]]];
        s = self.block1.output_shape(&s)?;
        out.push(vec![s[2], s[1]]);
        s = self.block2.output_shape(&s)?;
        out.push(vec![s[2], s[1]]);
        s = self.gru.output_shape(&s)?;
        out.push(vec![s[1]]);
        s = self.dense.output_shape(&s)?;
        out.push(vec![s[1]]);
        s = self.head.output_shape(&s)?;
        out.push(vec![s[1]]);
        Ok(out)
    }

    /// He-uniform convolution and dense kernels, Glorot-uniform GRU input
    /// kernel, orthogonal recurrent kernel (per gate), zero biases.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        init_conv(&mut self.front_conv, rng);
        self.block1.init(rng);
        self.block2.init(rng);

        let (c, h) = (self.gru.inputs(), self.gru.units());
        init::glorot_uniform(&mut self.gru.w_ih.value, c, 3 * h, rng);
        for gate in 0..3 {
            let q = init::orthogonal(h, h, rng);
            for (dst, v) in self.gru.w_hh.value.data[gate * h * h..(gate + 1) * h * h].iter_mut().zip(q) {
                *dst = T::from_f64_lossy(v);
            }
        }
        self.gru.b_ih.value.fill(T::zero());
        self.gru.b_hh.value.fill(T::zero());

        for dense in [&mut self.dense, &mut self.head] {
            let fan_in = dense.inputs();
            init::he_uniform(&mut dense.weight.value, fan_in, rng);
            dense.bias.value.fill(T::zero());
        }
    }

    pub fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm1d<T>> {
        let mut out = vec![&mut self.front_bn];
        out.extend(self.block1.batch_norms_mut());
        out.extend(self.block2.batch_norms_mut());
        out
    }

    pub fn batch_norms(&self) -> Vec<&BatchNorm1d<T>> {
        let mut out = vec![&self.front_bn];
        out.extend(self.block1.batch_norms());
        out.extend(self.block2.batch_norms());
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    /// Class probabilities for one frame of `input_len` samples.
    pub fn predict_frame(&self, frame: &[f32]) -> Result<Vec<f64>, ModelError> {
        Ok(self.predict_frames(frame)?.pop().expect("one frame in, one row out"))
    }

    /// Class probabilities for consecutive frames packed in `frames`.
    /// Rows are independent: inference-mode batch norm uses frozen statistics.
    pub fn predict_frames(&self, frames: &[f32]) -> Result<Vec<Vec<f64>>, ModelError> {
        let len = self.config.input_len;
        if frames.is_empty() || frames.len() % len != 0 {
            return Err(NnError::ShapeMismatch(format!(
                "{} samples do not split into frames of {len}",
                frames.len()
            ))
            .into());
        }
        const CHUNK: usize = 32;
        let mut out = Vec::with_capacity(frames.len() / len);
        for chunk in frames.chunks(CHUNK * len) {
            let b = chunk.len() / len;
            let x = Tensor::from_vec(chunk.iter().map(|&v| T::from_f64_lossy(v as f64)).collect(), &[b, 1, len])?;
            let logits = self.infer(&x)?.cast::<f64>();
            let probs = softmax(&logits);
            out.extend(probs.data.chunks_exact(self.config.num_classes).map(|r| r.to_vec()));
        }
        Ok(out)
    }

    /// Parameters and batch-norm statistics, tagged with the config hash.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut tensors: Vec<CheckpointTensor> =
            self.params().iter().map(|p| CheckpointTensor::from_tensor(&p.name, &p.value)).collect();
        for bn in self.batch_norms() {
            let prefix = bn_prefix(bn);
            let n = bn.channels();
            let mean = Tensor::from_vec(bn.running_mean.clone(), &[n]).expect("channel-length vector");
            let var = Tensor::from_vec(bn.running_var.clone(), &[n]).expect("channel-length vector");
            tensors.push(CheckpointTensor::from_tensor(&format!("{prefix}.running_mean"), &mean));
            tensors.push(CheckpointTensor::from_tensor(&format!("{prefix}.running_var"), &var));
        }
        Checkpoint { config_hash: self.config.hash(), tensors }
    }

    /// Rebuilds a network from `config` and fills it from a checkpoint
    /// written for the same config.
    pub fn from_checkpoint(config: &RawNetConfig, ckpt: &Checkpoint) -> Result<Self, ModelError> {
        if ckpt.config_hash != config.hash() {
            return Err(ModelError::ConfigHashMismatch { expected: config.hash(), found: ckpt.config_hash });
        }
        let mut net = RawNet::new(config)?;
        let fetch = |name: &str, shape: &[usize]| -> Result<Tensor<T>, ModelError> {
            let t = ckpt.get(name).ok_or_else(|| ModelError::MissingTensor(name.to_string()))?.to_tensor::<T>()?;
            if t.shape != shape {
                return Err(NnError::Checkpoint(format!("{name}: stored {:?}, expected {shape:?}", t.shape)).into());
            }
            Ok(t)
        };
        for p in net.params_mut() {
            p.value = fetch(&p.name, &p.value.shape)?;
        }
        for bn in net.batch_norms_mut() {
            let prefix = bn_prefix(bn).to_string();
            let n = bn.channels();
            bn.running_mean = fetch(&format!("{prefix}.running_mean"), &[n])?.data;
            bn.running_var = fetch(&format!("{prefix}.running_var"), &[n])?.data;
        }
        Ok(net)
    }
}

fn bn_prefix<T>(bn: &BatchNorm1d<T>) -> &str {
    bn.gamma.name.strip_suffix(".gamma").unwrap_or(&bn.gamma.name)
}

impl<T: Scalar> Layer<T> for RawNet<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let y = self.front_conv.forward(x)?;
        let y = self.front_bn.forward(&y)?;
        let y = self.front_act.forward(&y)?;
        let y = self.block1.forward(&y)?;
        let y = self.block2.forward(&y)?;
        let y = self.gru.forward(&y)?;
        let y = self.dense.forward(&y)?;
        let y = self.dense_act.forward(&y)?;
        self.head.forward(&y)
    }

    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let y = self.front_act.infer(&self.front_bn.infer(&self.front_conv.infer(x)?)?)?;
        let y = self.block2.infer(&self.block1.infer(&y)?)?;
        let y = self.dense_act.infer(&self.dense.infer(&self.gru.infer(&y)?)?)?;
        self.head.infer(&y)
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let d = self.head.backward(dy)?;
        let d = self.dense_act.backward(&d)?;
        let d = self.dense.backward(&d)?;
        let d = self.gru.backward(&d)?;
        let d = self.block2.backward(&d)?;
        let d = self.block1.backward(&d)?;
        let d = self.front_act.backward(&d)?;
        let d = self.front_bn.backward(&d)?;
        self.front_conv.backward(&d)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let mut s = self.front_bn.output_shape(&self.front_conv.output_shape(input)?)?;
        s = self.block2.output_shape(&self.block1.output_shape(&s)?)?;
        s = self.dense.output_shape(&self.gru.output_shape(&s)?)?;
        self.head.output_shape(&s)
    }

    fn params(&self) -> Vec<&Param<T>> {
        let mut out = self.front_conv.params();
        out.extend(self.front_bn.params());
        out.extend(self.block1.params());
        out.extend(self.block2.params());
        out.extend(self.gru.params());
        out.extend(self.dense.params());
        out.extend(self.head.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut out = self.front_conv.params_mut();
        out.extend(self.front_bn.params_mut());
        out.extend(self.block1.params_mut());
        out.extend(self.block2.params_mut());
        out.extend(self.gru.params_mut());
        out.extend(self.dense.params_mut());
        out.extend(self.head.params_mut());
        out
    }
}

fn config_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("cfg")
}

/// Writes the checkpoint and its config beside it (same stem, `.cfg`).
pub fn save_model(net: &RawNet<f32>, checkpoint: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = checkpoint.as_ref();
    write_checkpoint(path, &net.to_checkpoint())?;
    let cfg = config_path(path);
    fs::write(&cfg, net.config().to_text()).map_err(|e| ModelError::io(cfg, e))
}

/// Loads a model written by [`save_model`].
pub fn load_model(checkpoint: impl AsRef<Path>) -> Result<RawNet<f32>, ModelError> {
    let path = checkpoint.as_ref();
    let cfg_path = config_path(path);
    let text = fs::read_to_string(&cfg_path).map_err(|e| ModelError::io(&cfg_path, e))?;
    let config = RawNetConfig::from_text(&text)?;
    RawNet::from_checkpoint(&config, &read_checkpoint(path)?)
}
