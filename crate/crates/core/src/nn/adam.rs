use super::{NnError, Param, Scalar};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Result<Self, NnError> {
        let cfg = AdamConfig { lr, beta1, beta2, epsilon: 1e-8 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::InvalidOptimizer(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad(format!("betas ({}, {}) must lie in [0, 1)", self.beta1, self.beta2));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        Ok(())
    }
}

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub first_moment: Vec<Vec<T>>,
    pub second_moment: Vec<Vec<T>>,
    pub step_count: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, params: &[&Param<T>]) -> Result<Self, NnError> {
        config.validate()?;
        let zeros = |p: &&Param<T>| vec![T::zero(); p.value.len()];
        Ok(AdamState {
            config,
            first_moment: params.iter().map(zeros).collect(),
            second_moment: params.iter().map(zeros).collect(),
            step_count: 0,
        })
    }
}

/// One bias-corrected Adam update using each parameter's accumulated gradient.
pub fn adam_step<T: Scalar>(params: &mut [&mut Param<T>], state: &mut AdamState<T>) -> Result<(), NnError> {
    if params.len() != state.first_moment.len() {
        return Err(NnError::ShapeMismatch(format!(
            "optimizer tracks {} tensors, got {}",
            state.first_moment.len(),
            params.len()
        )));
    }
    for (p, m) in params.iter().zip(&state.first_moment) {
        if p.value.len() != m.len() || p.grad.len() != m.len() {
            return Err(NnError::ShapeMismatch(format!("optimizer state for {} has {} entries", p.name, m.len())));
        }
    }
    state.step_count += 1;
    let c = state.config;
    let t = state.step_count as i32;
    let bias1 = 1.0 - c.beta1.powi(t);
    let bias2 = 1.0 - c.beta2.powi(t);
    let (b1, b2) = (T::from_f64_lossy(c.beta1), T::from_f64_lossy(c.beta2));
    let (one_b1, one_b2) = (T::from_f64_lossy(1.0 - c.beta1), T::from_f64_lossy(1.0 - c.beta2));
    let step = T::from_f64_lossy(c.lr / bias1);
    let inv_sqrt_bias2 = T::from_f64_lossy(1.0 / bias2.sqrt());
    let eps = T::from_f64_lossy(c.epsilon);
    for ((p, m), v) in params.iter_mut().zip(&mut state.first_moment).zip(&mut state.second_moment) {
        for i in 0..m.len() {
            let g = p.grad.data[i];
            m[i] = b1 * m[i] + one_b1 * g;
            v[i] = b2 * v[i] + one_b2 * g * g;
            p.value.data[i] -= step * m[i] / (v[i].sqrt() * inv_sqrt_bias2 + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn scalar_param(v: f64, g: f64) -> Param<f64> {
        let mut p = Param::new("p", Tensor::from_vec(vec![v], &[1]).unwrap());
        p.grad.data[0] = g;
        p
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = scalar_param(0.0, 1.0);
        let mut st = AdamState::new(AdamConfig::new(0.001, 0.9, 0.999).unwrap(), &[&p]).unwrap();
        adam_step(&mut [&mut p], &mut st).unwrap();
        // m_hat = v_hat = 1, so the step is lr / (1 + eps)
        assert!((p.value.data[0] + 0.001 / (1.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = scalar_param(0.7, 0.0);
        let mut st = AdamState::new(AdamConfig::default(), &[&p]).unwrap();
        adam_step(&mut [&mut p], &mut st).unwrap();
        adam_step(&mut [&mut p], &mut st).unwrap();
        assert_eq!(p.value.data[0], 0.7);
        assert_eq!(st.step_count, 2);
    }

    #[test]
    fn per_group_settings_are_valid() {
        for (lr, b1, b2) in [(6.5e-4, 0.96, 0.998), (7e-4, 0.97, 0.998), (1.1e-3, 0.98, 0.992), (9.7e-4, 0.98, 0.993)] {
            assert!(AdamConfig::new(lr, b1, b2).is_ok());
        }
        assert!(AdamConfig::new(0.0, 0.9, 0.999).is_err());
        assert!(AdamConfig::new(1e-3, 1.0, 0.999).is_err());
    }

    #[test]
    fn mismatched_state_rejected() {
        let mut p = scalar_param(0.0, 1.0);
        let q = Param::new("q", Tensor::<f64>::zeros(&[3]));
        let mut st = AdamState::new(AdamConfig::default(), &[&q]).unwrap();
        assert!(matches!(adam_step(&mut [&mut p], &mut st), Err(NnError::ShapeMismatch(_))));
        assert!(matches!(adam_step::<f64>(&mut [], &mut st), Err(NnError::ShapeMismatch(_))));
    }

    #[test]
    fn matches_textbook_recurrence_over_steps() {
        let grads = [0.5, -1.5, 2.0, 0.1];
        let cfg = AdamConfig::new(0.01, 0.9, 0.99).unwrap();
        let mut p = scalar_param(1.0, 0.0);
        let mut st = AdamState::new(cfg, &[&p]).unwrap();
        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 1.0f64);
        for (t, g) in grads.iter().enumerate() {
            p.grad.data[0] = *g;
            adam_step(&mut [&mut p], &mut st).unwrap();
            m = 0.9 * m + 0.1 * g;
            v = 0.99 * v + 0.01 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t as i32 + 1));
            let vh = v / (1.0 - 0.99f64.powi(t as i32 + 1));
            x -= 0.01 * mh / (vh.sqrt() + 1e-8);
            assert!((p.value.data[0] - x).abs() < 1e-12);
        }
    }
}
