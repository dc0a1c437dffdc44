use super::{shape_err, Layer, NnError, Param, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output length `ceil(T / stride)`, zero padding split around the input
    /// (the extra sample, if any, goes on the right).
    Same,
    /// Output length `floor((T - K) / stride) + 1`.
    Valid,
}

/// 1-D convolution over `[batch, in_channels, time]`.
#[derive(Debug, Clone)]
pub struct Conv1d<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    pub stride: usize,
    pub padding: Padding,
    cache: Option<Tensor<T>>,
}

struct Geometry {
    t_out: usize,
    pad_left: isize,
}

impl<T: Scalar> Conv1d<T> {
    /// Zero-initialized layer; weights are filled by [`super::init`].
    pub fn new(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    ) -> Result<Self, NnError> {
        if kernel == 0 || stride == 0 || in_ch == 0 || out_ch == 0 {
            return Err(NnError::InvalidSpec(format!(
                "conv {name}: kernel {kernel}, stride {stride}, channels {in_ch}->{out_ch} must all be >= 1"
            )));
        }
        Ok(Conv1d {
            weight: Param::new(format!("{name}.weight"), Tensor::zeros(&[out_ch, in_ch, kernel])),
            bias: Param::new(format!("{name}.bias"), Tensor::zeros(&[out_ch])),
            stride,
            padding,
            cache: None,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.value.shape[2]
    }

    fn geometry(&self, t_in: usize) -> Result<Geometry, NnError> {
        let k = self.kernel();
        match self.padding {
            Padding::Same => {
                let t_out = t_in.div_ceil(self.stride);
                let needed = ((t_out.max(1) - 1) * self.stride + k).saturating_sub(t_in);
                Ok(Geometry { t_out, pad_left: (needed / 2) as isize })
            }
            Padding::Valid => {
                if t_in < k {
                    return Err(shape_err(format!("valid conv: input length {t_in} < kernel {k}")));
                }
                Ok(Geometry { t_out: (t_in - k) / self.stride + 1, pad_left: 0 })
            }
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(usize, usize, Geometry), NnError> {
        x.expect_rank(3, "conv1d")?;
        if x.shape[1] != self.in_channels() {
            return Err(shape_err(format!(
                "conv1d {} expects {} input channels, got {}",
                self.weight.name,
                self.in_channels(),
                x.shape[1]
            )));
        }
        Ok((x.shape[0], x.shape[2], self.geometry(x.shape[2])?))
    }

    /// Output positions `t` for which input index `t*stride + k - pad` is in range.
    fn t_range(&self, k: usize, g: &Geometry, t_in: usize) -> (usize, usize) {
        let off = k as isize - g.pad_left;
        let s = self.stride as isize;
        // smallest t with t*s + off >= 0
        let lo = if off >= 0 { 0 } else { ((-off) + s - 1) / s }.min(g.t_out as isize);
        // largest t with t*s + off <= t_in - 1, exclusive bound
        let hi_num = t_in as isize - 1 - off;
        let hi = if hi_num < 0 { 0 } else { (hi_num / s + 1).min(g.t_out as isize) };
        (lo as usize, hi.max(lo) as usize)
    }

    fn run(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (batch, t_in, g) = self.check_input(x)?;
        let (c_out, c_in, kernel) = (self.out_channels(), self.in_channels(), self.kernel());
        let mut y = Tensor::zeros(&[batch, c_out, g.t_out]);
        let w = &self.weight.value.data;
        for b in 0..batch {
            for o in 0..c_out {
                let yrow = &mut y.data[(b * c_out + o) * g.t_out..(b * c_out + o + 1) * g.t_out];
                yrow.fill(self.bias.value.data[o]);
                for c in 0..c_in {
                    let xrow = &x.data[(b * c_in + c) * t_in..(b * c_in + c + 1) * t_in];
                    for k in 0..kernel {
                        let wk = w[(o * c_in + c) * kernel + k];
                        let (lo, hi) = self.t_range(k, &g, t_in);
                        if lo == hi {
                            continue;
                        }
                        let off = k as isize - g.pad_left;
                        if self.stride == 1 {
                            let start = (lo as isize + off) as usize;
                            let xs = &xrow[start..start + (hi - lo)];
                            for (yv, &xv) in yrow[lo..hi].iter_mut().zip(xs) {
                                *yv += wk * xv;
                            }
                        } else {
                            for t in lo..hi {
                                yrow[t] += wk * xrow[(t as isize * self.stride as isize + off) as usize];
                            }
                        }
                    }
                }
            }
        }
        Ok(y)
    }
}

impl<T: Scalar> Layer<T> for Conv1d<T> {
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
        let (batch, t_in, g) = self.check_input(&x)?;
        let (c_out, c_in, kernel) = (self.out_channels(), self.in_channels(), self.kernel());
        if dy.shape != [batch, c_out, g.t_out] {
            return Err(shape_err(format!("conv1d backward: dy {:?}", dy.shape)));
        }
        let mut dx = Tensor::zeros(&x.shape);
        let stride = self.stride as isize;
        for b in 0..batch {
            for o in 0..c_out {
                let dyrow = &dy.data[(b * c_out + o) * g.t_out..(b * c_out + o + 1) * g.t_out];
                self.bias.grad.data[o] += dyrow.iter().copied().sum();
                for c in 0..c_in {
                    let base = (b * c_in + c) * t_in;
                    for k in 0..kernel {
                        let widx = (o * c_in + c) * kernel + k;
                        let wk = self.weight.value.data[widx];
                        let (lo, hi) = self.t_range(k, &g, t_in);
                        if lo == hi {
                            continue;
                        }
                        let off = k as isize - g.pad_left;
                        let mut acc = T::zero();
                        if stride == 1 {
                            let start = base + (lo as isize + off) as usize;
                            let xs = &x.data[start..start + (hi - lo)];
                            let dxs = &mut dx.data[start..start + (hi - lo)];
                            for ((&d, &xv), dxv) in dyrow[lo..hi].iter().zip(xs).zip(dxs.iter_mut()) {
                                acc += d * xv;
                                *dxv += wk * d;
                            }
                        } else {
                            for t in lo..hi {
                                let xi = base + (t as isize * stride + off) as usize;
                                acc += dyrow[t] * x.data[xi];
                                dx.data[xi] += wk * dyrow[t];
                            }
                        }
                        self.weight.grad.data[widx] += acc;
                    }
                }
            }
        }
        Ok(dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 3 || input[1] != self.in_channels() {
            return Err(shape_err(format!("conv1d {}: input shape {input:?}", self.weight.name)));
        }
        Ok(vec![input[0], self.out_channels(), self.geometry(input[2])?.t_out])
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
