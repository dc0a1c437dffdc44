use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;

use super::{DataGroupId, ModelError, RawNet, RawNetConfig};
use crate::nn::{adam_step, cross_entropy, softmax_cross_entropy, AdamConfig, AdamState, Layer, Tensor};
use crate::signal::FrameBatch;
use crate::SeedSplitter;

/// Frames packed back to back, each with a class index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledFrames {
    pub frame_len: usize,
    pub frames: Vec<f32>,
    pub labels: Vec<usize>,
}

impl LabeledFrames {
    pub fn new(frame_len: usize) -> Self {
        LabeledFrames { frame_len, frames: Vec::new(), labels: Vec::new() }
    }

    pub fn push(&mut self, frame: &[f32], label: usize) {
        assert_eq!(frame.len(), self.frame_len, "frame length");
        self.frames.extend_from_slice(frame);
        self.labels.push(label);
    }

    /// Appends every frame of `batch` under one label.
    pub fn extend_batch(&mut self, batch: &FrameBatch, label: usize) {
        for f in batch.iter() {
            self.push(f, label);
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        &self.frames[i * self.frame_len..(i + 1) * self.frame_len]
    }

    pub fn class_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for &l in &self.labels {
            if l < classes {
                counts[l] += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Stop after this many epochs without a validation-accuracy gain.
    /// Only used when a validation set is given.
    pub patience: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { seed: 0, epochs: 100, batch_size: 32, patience: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub group: DataGroupId,
    pub epochs: Vec<EpochStats>,
    /// Epoch whose weights were kept (the last one without validation data).
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub wall_time_secs: f64,
    /// Where the caller saved the weights, if it did.
    pub checkpoint: Option<PathBuf>,
}

impl TrainReport {
    pub fn best(&self) -> Option<&EpochStats> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    /// One CSV row per epoch; validation columns are empty when absent.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                e.epoch,
                e.train_loss,
                e.train_accuracy,
                opt(e.val_loss),
                opt(e.val_accuracy)
            );
        }
        s
    }
}

/// Index batches of at most `size`; a trailing singleton joins the previous
/// batch because batch norm needs two samples.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size.max(2)).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let start = order.len() - size.max(2) - 1;
        *out.last_mut().unwrap() = &order[start..];
    }
    out
}

fn gather(data: &LabeledFrames, idx: &[usize]) -> Result<Tensor<f32>, ModelError> {
    let mut x = Vec::with_capacity(idx.len() * data.frame_len);
    for &i in idx {
        x.extend_from_slice(data.frame(i));
    }
    Ok(Tensor::from_vec(x, &[idx.len(), 1, data.frame_len])?)
}

fn check_labels(data: &LabeledFrames, classes: usize) -> Result<(), ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if let Some(&label) = data.labels.iter().find(|&&l| l >= classes) {
        return Err(ModelError::LabelOutOfRange { label, classes });
    }
    Ok(())
}

/// Replaces the running batch-norm statistics with an equal-weight average
/// over training-mode passes across the whole training set.
fn reestimate_batch_norm(net: &mut RawNet<f32>, data: &LabeledFrames, batch_size: usize) -> Result<(), ModelError> {
    net.batch_norms_mut().into_iter().for_each(|bn| bn.begin_reestimate());
    let order: Vec<usize> = (0..data.len()).collect();
    for idx in batches(&order, batch_size) {
        net.forward(&gather(data, idx)?)?;
    }
    net.batch_norms_mut().into_iter().for_each(|bn| bn.end_reestimate());
    Ok(())
}

/// Mean cross-entropy and accuracy in inference mode.
fn evaluate(net: &RawNet<f32>, data: &LabeledFrames) -> Result<(f64, f64), ModelError> {
    let probs = net.predict_frames(&data.frames)?;
    let mut loss = 0.0;
    let mut correct = 0;
    for (p, &l) in probs.iter().zip(&data.labels) {
        loss += cross_entropy(p, l);
        correct += usize::from(argmax(p) == l);
    }
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Trains one group's network with Adam on softmax cross-entropy.
///
/// With a validation set, batch-norm statistics are re-estimated and the
/// network is scored after every epoch; the best-scoring weights are kept
/// and training stops after `patience` epochs without improvement. Without
/// one, the statistics are re-estimated once after the final epoch.
///
/// Deterministic for a fixed `opts.seed`.
pub fn train(
    group: DataGroupId,
    data: &LabeledFrames,
    val: Option<&LabeledFrames>,
    config: &RawNetConfig,
    opts: &TrainOptions,
) -> Result<(RawNet<f32>, TrainReport), ModelError> {
    let classes = config.num_classes;
    if classes != group.num_classes() {
        return Err(ModelError::ConfigInvalid(format!(
            "group {group} has {} classes, config has {classes}",
            group.num_classes()
        )));
    }
    if data.frame_len != config.input_len {
        return Err(ModelError::ConfigInvalid(format!(
            "frames of {} samples, network input {}",
            data.frame_len, config.input_len
        )));
    }
    check_labels(data, classes)?;
    if let Some(empty) = data.class_counts(classes).iter().position(|&c| c == 0) {
        return Err(ModelError::EmptyClass(empty));
    }
    if let Some(v) = val {
        check_labels(v, classes)?;
    }

    let started = Instant::now();
    let seeds = SeedSplitter::new(opts.seed);
    let mut net = RawNet::<f32>::new(config)?;
    net.init(&mut seeds.rng("init"));
    let adam_cfg = AdamConfig::new(config.lr, config.beta1, config.beta2)?;
    let mut adam = AdamState::new(adam_cfg, &net.params())?;
    let mut shuffle_rng = seeds.rng("shuffle");

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, crate::nn::Checkpoint)> = None;
    let mut stale = 0;
    let mut stopped_early = false;

    for epoch in 1..=opts.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for idx in batches(&order, opts.batch_size) {
            let x = gather(data, idx)?;
            let labels: Vec<usize> = idx.iter().map(|&i| data.labels[i]).collect();
            net.params_mut().into_iter().for_each(|p| p.zero_grad());
            let logits = net.forward(&x)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &labels)?;
            net.backward(&grad)?;
            adam_step(&mut net.params_mut(), &mut adam)?;

            loss_sum += loss as f64 * idx.len() as f64;
            for (row, &l) in logits.data.chunks_exact(classes).zip(&labels) {
                let row: Vec<f64> = row.iter().map(|&v| v as f64).collect();
                correct += usize::from(argmax(&row) == l);
            }
        }
        let n = data.len() as f64;
        let train_loss = loss_sum / n;
        if !train_loss.is_finite() {
            return Err(ModelError::Diverged { epoch, loss: train_loss });
        }
        let mut stats =
            EpochStats { epoch, train_loss, train_accuracy: correct as f64 / n, val_loss: None, val_accuracy: None };

        if let Some(v) = val.filter(|v| !v.is_empty()) {
            reestimate_batch_norm(&mut net, data, opts.batch_size)?;
            let (vl, va) = evaluate(&net, v)?;
            stats.val_loss = Some(vl);
            stats.val_accuracy = Some(va);
            if best.as_ref().is_none_or(|(acc, _, _)| va > *acc) {
                best = Some((va, epoch, net.to_checkpoint()));
                stale = 0;
            } else {
                stale += 1;
            }
        }
        log::info!(
            "{group} epoch {epoch}: loss {:.4} acc {:.3}{}",
            stats.train_loss,
            stats.train_accuracy,
            stats.val_accuracy.map(|a| format!(" val acc {a:.3}")).unwrap_or_default()
        );
        history.push(stats);
        if best.is_some() && stale >= opts.patience {
            stopped_early = epoch < opts.epochs;
            break;
        }
    }

    let best_epoch = match best {
        Some((_, epoch, ckpt)) => {
            net = RawNet::from_checkpoint(config, &ckpt)?;
            epoch
        }
        None => {
            reestimate_batch_norm(&mut net, data, opts.batch_size)?;
            history.len()
        }
    };
    let report = TrainReport {
        group,
        epochs: history,
        best_epoch,
        stopped_early,
        wall_time_secs: started.elapsed().as_secs_f64(),
        checkpoint: None,
    };
    Ok((net, report))
}
