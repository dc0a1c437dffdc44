use super::{shape_err, Layer, NnError, Param, Scalar, Tensor};

/// Fully connected layer over `[batch, features]`.
#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(name: &str, inputs: usize, outputs: usize) -> Result<Self, NnError> {
        if inputs == 0 || outputs == 0 {
            return Err(NnError::InvalidSpec(format!("dense {name}: {inputs} -> {outputs}")));
        }
        Ok(Dense {
            weight: Param::new(format!("{name}.weight"), Tensor::zeros(&[outputs, inputs])),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[outputs])),
            cache: None,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape[0]
    }

    fn run(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        x.expect_rank(2, "dense")?;
        let (batch, n_in, n_out) = (x.shape[0], self.inputs(), self.outputs());
        if x.shape[1] != n_in {
            return Err(shape_err(format!("dense {} expects {n_in} features, got {:?}", self.weight.name, x.shape)));
        }
        let mut y = Tensor::zeros(&[batch, n_out]);
        for b in 0..batch {
            let xr = &x.data[b * n_in..(b + 1) * n_in];
            for o in 0..n_out {
                let wr = &self.weight.value.data[o * n_in..(o + 1) * n_in];
                y.data[b * n_out + o] = self.bias.value.data[o] + wr.iter().zip(xr).map(|(&w, &v)| w * v).sum::<T>();
            }
        }
        Ok(y)
    }
}

impl<T: Scalar> Layer<T> for Dense<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let y = self.run(x)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.run(x)
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let x = self.cache.take().ok_or(NnError::GraphNotRecorded)?;
        let (batch, n_in, n_out) = (x.shape[0], self.inputs(), self.outputs());
        if dy.shape != [batch, n_out] {
            return Err(shape_err(format!("dense backward: dy {:?}", dy.shape)));
        }
        let mut dx = Tensor::zeros(&x.shape);
        for b in 0..batch {
            let xr = &x.data[b * n_in..(b + 1) * n_in];
            let dxr = &mut dx.data[b * n_in..(b + 1) * n_in];
            for o in 0..n_out {
                let g = dy.data[b * n_out + o];
                self.bias.grad.data[o] += g;
                let wr = &self.weight.value.data[o * n_in..(o + 1) * n_in];
                let gw = &mut self.weight.grad.data[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    gw[i] += g * xr[i];
                    dxr[i] += g * wr[i];
                }
            }
        }
        Ok(dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 2 || input[1] != self.inputs() {
            return Err(shape_err(format!("dense: input shape {input:?}")));
        }
        Ok(vec![input[0], self.outputs()])
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
