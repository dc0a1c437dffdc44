use super::{shape_err, Layer, NnError, Scalar, Tensor};

/// Max pooling over time. Window `i` covers `[i*stride, i*stride + pool)`,
/// clipped to the input, so ceil mode behaves as if padded with -inf.
#[derive(Debug, Clone)]
pub struct MaxPool1d {
    pub pool: usize,
    pub stride: usize,
    pub ceil_mode: bool,
    // argmax input offset per output cell, plus the input shape
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool1d {
    pub fn new(pool: usize, stride: usize, ceil_mode: bool) -> Result<Self, NnError> {
        if pool == 0 || stride == 0 {
            return Err(NnError::InvalidSpec(format!("maxpool: pool {pool} and stride {stride} must be >= 1")));
        }
        Ok(MaxPool1d { pool, stride, ceil_mode, cache: None })
    }

    pub fn out_len(&self, t_in: usize) -> Result<usize, NnError> {
        if self.ceil_mode {
            if t_in == 0 {
                return Err(shape_err("maxpool over an empty sequence"));
            }
            Ok(t_in.div_ceil(self.stride))
        } else {
            if t_in < self.pool {
                return Err(shape_err(format!("maxpool: length {t_in} < pool {}", self.pool)));
            }
            Ok((t_in - self.pool) / self.stride + 1)
        }
    }

    fn run<T: Scalar>(&self, x: &Tensor<T>, want_idx: bool) -> Result<(Tensor<T>, Vec<usize>), NnError> {
        x.expect_rank(3, "maxpool1d")?;
        let (rows, t_in) = (x.shape[0] * x.shape[1], x.shape[2]);
        let t_out = self.out_len(t_in)?;
        let mut y = Tensor::zeros(&[x.shape[0], x.shape[1], t_out]);
        let mut idx = if want_idx { vec![0; rows * t_out] } else { Vec::new() };
        for r in 0..rows {
            let xrow = &x.data[r * t_in..(r + 1) * t_in];
            for o in 0..t_out {
                let start = o * self.stride;
                let end = (start + self.pool).min(t_in);
                let mut best = start;
                for t in start + 1..end {
                    if xrow[t] > xrow[best] {
                        best = t;
                    }
                }
                y.data[r * t_out + o] = xrow[best];
                if want_idx {
                    idx[r * t_out + o] = r * t_in + best;
                }
            }
        }
        Ok((y, idx))
    }
}

impl<T: Scalar> Layer<T> for MaxPool1d {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (y, idx) = self.run(x, true)?;
        self.cache = Some((idx, x.shape.clone()));
        Ok(y)
    }

    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(self.run(x, false)?.0)
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (idx, in_shape) = self.cache.take().ok_or(NnError::GraphNotRecorded)?;
        if dy.len() != idx.len() {
            return Err(shape_err(format!("maxpool backward: dy {:?}", dy.shape)));
        }
        let mut dx = Tensor::zeros(&in_shape);
        for (g, &i) in dy.data.iter().zip(&idx) {
            dx.data[i] += *g;
        }
        Ok(dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 3 {
            return Err(shape_err(format!("maxpool: input shape {input:?}")));
        }
        Ok(vec![input[0], input[1], self.out_len(input[2])?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::fd;

    #[test]
    fn fig4_pool_chain() {
        let pool = MaxPool1d::new(9, 9, true).unwrap();
        assert_eq!(pool.out_len(5333).unwrap(), 593);
        assert_eq!(pool.out_len(593).unwrap(), 66);
    }

    #[test]
    fn single_window() {
        let pool = MaxPool1d::new(3, 3, true).unwrap();
        let x = Tensor::from_vec(vec![3.0f64, 1.0, 2.0], &[1, 1, 3]).unwrap();
        assert_eq!(pool.infer(&x).unwrap().data, vec![3.0]);
    }

    #[test]
    fn ceil_mode_partial_window() {
        let pool = MaxPool1d::new(2, 2, true).unwrap();
        let x = Tensor::from_vec(vec![1.0f64, 4.0, -2.0, 0.0, -7.0], &[1, 1, 5]).unwrap();
        assert_eq!(pool.infer(&x).unwrap().data, vec![4.0, 0.0, -7.0]);
        let floor = MaxPool1d::new(2, 2, false).unwrap();
        assert_eq!(floor.infer(&x).unwrap().data, vec![4.0, 0.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..4u64 {
            let mut pool = MaxPool1d::new(3, 2, true).unwrap();
            // well separated values so a 1e-3 nudge never changes the argmax
            let perm: Vec<f64> = (0..2 * 2 * 11).map(|i| ((i * 37 + seed as usize * 11) % 44) as f64 * 0.05).collect();
            let x = Tensor::from_vec(perm, &[2, 2, 11]).unwrap();
            let err = fd::check_layer(&mut pool, &x, seed);
            assert!(err < 1e-4, "{err}");
        }
    }
}
