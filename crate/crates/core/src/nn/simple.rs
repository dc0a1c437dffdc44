//! Elementwise activation, softmax and cross-entropy.

use super::{shape_err, Layer, NnError, Scalar, Tensor};

/// `x` for `x >= 0`, `slope * x` otherwise.
pub fn leaky_relu<T: Scalar>(x: &Tensor<T>, slope: T) -> Tensor<T> {
    x.map(|v| if v >= T::zero() { v } else { slope * v })
}

#[derive(Debug, Clone)]
pub struct LeakyRelu<T> {
    pub slope: T,
    cache: Option<Tensor<T>>,
}

impl<T: Scalar> LeakyRelu<T> {
    pub fn new(slope: T) -> Result<Self, NnError> {
        if !(slope > T::zero() && slope < T::one()) {
            return Err(NnError::InvalidSpec(format!("leaky relu slope {slope} outside (0, 1)")));
        }
        Ok(LeakyRelu { slope, cache: None })
    }
}

impl<T: Scalar> Layer<T> for LeakyRelu<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.cache = Some(x.clone());
        Ok(leaky_relu(x, self.slope))
    }

    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(leaky_relu(x, self.slope))
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let x = self.cache.take().ok_or(NnError::GraphNotRecorded)?;
        if x.shape != dy.shape {
            return Err(shape_err("leaky relu backward"));
        }
        let data = x.data.iter().zip(&dy.data).map(|(&v, &g)| if v >= T::zero() { g } else { self.slope * g }).collect();
        Ok(Tensor { data, shape: x.shape })
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        Ok(input.to_vec())
    }
}

/// Row-wise softmax over the last axis, stabilized by max subtraction.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let n = *logits.shape.last().unwrap_or(&1);
    let mut out = logits.clone();
    for row in out.data.chunks_exact_mut(n.max(1)) {
        let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v = *v / sum);
    }
    out
}

const PROB_FLOOR: f64 = 1e-12;

/// `-ln p[label]` with `p` clamped below at 1e-12.
pub fn cross_entropy<T: Scalar>(probs: &[T], label: usize) -> T {
    -probs[label].max(T::from_f64_lossy(PROB_FLOOR)).ln()
}

/// Mean cross-entropy of softmax(logits) over a `[batch, classes]` tensor and
/// its gradient with respect to the logits.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>), NnError> {
    logits.expect_rank(2, "softmax cross-entropy")?;
    let (batch, n) = (logits.shape[0], logits.shape[1]);
    if labels.len() != batch {
        return Err(shape_err(format!("{} labels for batch {batch}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n) {
        return Err(shape_err(format!("label {bad} out of range for {n} classes")));
    }
    let probs = softmax(logits);
    let inv_b = T::one() / T::from_f64_lossy(batch as f64);
    let mut loss = T::zero();
    let mut grad = probs.clone();
    for (b, &l) in labels.iter().enumerate() {
        loss += cross_entropy(&probs.data[b * n..(b + 1) * n], l);
        grad.data[b * n + l] -= T::one();
    }
    grad.scale(inv_b);
    Ok((loss * inv_b, grad))
}

/// Output head. Training skips it and feeds logits to [`softmax_cross_entropy`].
#[derive(Debug, Clone, Default)]
pub struct Softmax;

impl Softmax {
    pub fn apply<T: Scalar>(&self, logits: &Tensor<T>) -> Tensor<T> {
        softmax(logits)
    }
}
