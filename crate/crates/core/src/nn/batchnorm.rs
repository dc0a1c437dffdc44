use super::{shape_err, Layer, NnError, Param, Scalar, Tensor};

/// How training-mode passes update the running statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BnStatsMode {
    /// `running = (1 - m) * running + m * batch`.
    Momentum(f64),
    /// Equal-weight average over every batch seen since the last reset.
    Cumulative { batches: usize },
}

/// Per-channel batch normalization over `[batch, channels, time]`.
#[derive(Debug, Clone)]
pub struct BatchNorm1d<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: T,
    pub stats_mode: BnStatsMode,
    cache: Option<(Tensor<T>, Vec<T>)>,
}

impl<T: Scalar> BatchNorm1d<T> {
    pub fn new(name: &str, channels: usize) -> Self {
        let mut gamma = Param::new(format!("{name}.gamma"), Tensor::zeros(&[channels]));
        gamma.value.fill(T::one());
        BatchNorm1d {
            gamma,
            beta: Param::new(format!("{name}.beta"), Tensor::zeros(&[channels])),
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            eps: T::from_f64_lossy(1e-5),
            stats_mode: BnStatsMode::Momentum(0.1),
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.running_mean.len()
    }

    /// Clears the running statistics and switches to cumulative averaging.
    pub fn begin_reestimate(&mut self) {
        self.running_mean.fill(T::zero());
        self.running_var.fill(T::zero());
        self.stats_mode = BnStatsMode::Cumulative { batches: 0 };
    }

    pub fn end_reestimate(&mut self) {
        if let BnStatsMode::Cumulative { batches: 0 } = self.stats_mode {
            self.running_var.fill(T::one());
        }
        self.stats_mode = BnStatsMode::Momentum(0.1);
    }

    fn check(&self, x: &Tensor<T>) -> Result<(usize, usize, usize), NnError> {
        x.expect_rank(3, "batchnorm")?;
        if x.shape[1] != self.channels() {
            return Err(shape_err(format!("batchnorm over {} channels got {:?}", self.channels(), x.shape)));
        }
        Ok((x.shape[0], x.shape[1], x.shape[2]))
    }

    fn update_running(&mut self, mean: &[T], var: &[T]) {
        match &mut self.stats_mode {
            BnStatsMode::Momentum(m) => {
                let m = T::from_f64_lossy(*m);
                for c in 0..mean.len() {
                    self.running_mean[c] = (T::one() - m) * self.running_mean[c] + m * mean[c];
                    self.running_var[c] = (T::one() - m) * self.running_var[c] + m * var[c];
                }
            }
            BnStatsMode::Cumulative { batches } => {
                *batches += 1;
                let k = T::from_f64_lossy(*batches as f64);
                for c in 0..mean.len() {
                    let (rm, rv) = (self.running_mean[c], self.running_var[c]);
                    self.running_mean[c] = rm + (mean[c] - rm) / k;
                    self.running_var[c] = rv + (var[c] - rv) / k;
                }
            }
        }
    }
}

impl<T: Scalar> Layer<T> for BatchNorm1d<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (batch, ch, len) = self.check(x)?;
        if batch < 2 {
            return Err(NnError::DegenerateBatch(batch));
        }
        let n = T::from_f64_lossy((batch * len) as f64);
        let mut mean = vec![T::zero(); ch];
        let mut var = vec![T::zero(); ch];
        for b in 0..batch {
            for c in 0..ch {
                let row = &x.data[(b * ch + c) * len..(b * ch + c + 1) * len];
                mean[c] += row.iter().copied().sum::<T>();
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        for b in 0..batch {
            for c in 0..ch {
                let row = &x.data[(b * ch + c) * len..(b * ch + c + 1) * len];
                var[c] += row.iter().map(|&v| (v - mean[c]) * (v - mean[c])).sum::<T>();
            }
        }
        var.iter_mut().for_each(|v| *v = *v / n);
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + self.eps).sqrt()).collect();

        let mut xhat = Tensor::zeros(&x.shape);
        let mut y = Tensor::zeros(&x.shape);
        for b in 0..batch {
            for c in 0..ch {
                let r = (b * ch + c) * len..(b * ch + c + 1) * len;
                let (g, bt) = (self.gamma.value.data[c], self.beta.value.data[c]);
                for i in r {
                    let h = (x.data[i] - mean[c]) * inv_std[c];
                    xhat.data[i] = h;
                    y.data[i] = g * h + bt;
                }
            }
        }
        self.update_running(&mean, &var);
        self.cache = Some((xhat, inv_std));
        Ok(y)
    }

    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (batch, ch, len) = self.check(x)?;
        let mut y = x.clone();
        for c in 0..ch {
            let scale = self.gamma.value.data[c] / (self.running_var[c] + self.eps).sqrt();
            let shift = self.beta.value.data[c] - self.running_mean[c] * scale;
            for b in 0..batch {
                for v in &mut y.data[(b * ch + c) * len..(b * ch + c + 1) * len] {
                    *v = *v * scale + shift;
                }
            }
        }
        Ok(y)
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (xhat, inv_std) = self.cache.take().ok_or(NnError::GraphNotRecorded)?;
        if dy.shape != xhat.shape {
            return Err(shape_err(format!("batchnorm backward: dy {:?} vs {:?}", dy.shape, xhat.shape)));
        }
        let (batch, ch, len) = (xhat.shape[0], xhat.shape[1], xhat.shape[2]);
        let n = T::from_f64_lossy((batch * len) as f64);
        let mut sum_dy = vec![T::zero(); ch];
        let mut sum_dy_xhat = vec![T::zero(); ch];
        for b in 0..batch {
            for c in 0..ch {
                for i in (b * ch + c) * len..(b * ch + c + 1) * len {
                    sum_dy[c] += dy.data[i];
                    sum_dy_xhat[c] += dy.data[i] * xhat.data[i];
                }
            }
        }
        let mut dx = Tensor::zeros(&xhat.shape);
        for c in 0..ch {
            self.beta.grad.data[c] += sum_dy[c];
            self.gamma.grad.data[c] += sum_dy_xhat[c];
            let k = self.gamma.value.data[c] * inv_std[c] / n;
            for b in 0..batch {
                for i in (b * ch + c) * len..(b * ch + c + 1) * len {
                    dx.data[i] = k * (n * dy.data[i] - sum_dy[c] - xhat.data[i] * sum_dy_xhat[c]);
                }
            }
        }
        Ok(dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 3 || input[1] != self.channels() {
            return Err(shape_err(format!("batchnorm: input shape {input:?}")));
        }
        Ok(input.to_vec())
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.gamma, &mut self.beta]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::fd;
    use rand::SeedableRng;

    fn moments(y: &Tensor<f64>, c: usize) -> (f64, f64) {
        let (b, ch, len) = (y.shape[0], y.shape[1], y.shape[2]);
        let vals: Vec<f64> =
            (0..b).flat_map(|bi| y.data[(bi * ch + c) * len..(bi * ch + c + 1) * len].to_vec()).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
        (m, v.sqrt())
    }

    fn shifted_batch() -> Tensor<f64> {
        // per channel: mean 5, std 2
        let data = (0..2 * 2 * 4).map(|i| if i % 2 == 0 { 3.0 } else { 7.0 }).collect();
        Tensor::from_vec(data, &[2, 2, 4]).unwrap()
    }

    #[test]
    fn normalizes_batch_statistics() {
        let mut bn = BatchNorm1d::<f64>::new("bn", 2);
        bn.eps = 0.0;
        let y = bn.forward(&shifted_batch()).unwrap();
        for c in 0..2 {
            let (m, s) = moments(&y, c);
            assert!(m.abs() < 1e-5 && (s - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn affine_parameters() {
        let mut bn = BatchNorm1d::<f64>::new("bn", 2);
        bn.eps = 0.0;
        bn.gamma.value.fill(2.0);
        bn.beta.value.fill(3.0);
        let y = bn.forward(&shifted_batch()).unwrap();
        let (m, s) = moments(&y, 1);
        assert!((m - 3.0).abs() < 1e-5 && (s - 2.0).abs() < 1e-5);
    }

    #[test]
    fn inference_with_unit_stats_is_affine_identity() {
        let mut bn = BatchNorm1d::<f64>::new("bn", 2);
        bn.eps = 0.0;
        bn.gamma.value.data = vec![1.5, 1.0];
        bn.beta.value.data = vec![0.0, -1.0];
        let x = shifted_batch();
        let y = bn.infer(&x).unwrap();
        for (i, (a, b)) in y.data.iter().zip(&x.data).enumerate() {
            let c = (i / 4) % 2;
            assert_eq!(*a, b * bn.gamma.value.data[c] + bn.beta.value.data[c]);
        }
    }

    #[test]
    fn single_sample_batch_rejected() {
        let mut bn = BatchNorm1d::<f32>::new("bn", 1);
        assert_eq!(bn.forward(&Tensor::zeros(&[1, 1, 8])).unwrap_err(), NnError::DegenerateBatch(1));
        assert!(bn.infer(&Tensor::zeros(&[1, 1, 8])).is_ok());
    }

    #[test]
    fn cumulative_reestimate_averages_batches() {
        let mut bn = BatchNorm1d::<f64>::new("bn", 1);
        bn.begin_reestimate();
        bn.forward(&Tensor::from_vec(vec![0.0, 2.0], &[2, 1, 1]).unwrap()).unwrap();
        bn.forward(&Tensor::from_vec(vec![4.0, 8.0], &[2, 1, 1]).unwrap()).unwrap();
        bn.end_reestimate();
        assert_eq!(bn.running_mean, vec![3.5]);
        assert_eq!(bn.running_var, vec![2.5]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for seed in 0..4 {
            let mut bn = BatchNorm1d::<f64>::new("bn", 3);
            bn.gamma.value = fd::random_tensor(&[3], &mut rng);
            bn.beta.value = fd::random_tensor(&[3], &mut rng);
            let x = fd::random_tensor(&[3, 3, 5], &mut rng);
            let err = fd::check_layer(&mut bn, &x, seed);
            assert!(err < 1e-4, "{err}");
        }
    }
}
