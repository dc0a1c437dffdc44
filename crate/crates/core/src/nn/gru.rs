//! Gated recurrent unit returning only the final hidden state.
//!
//! Gate layout follows the common `[reset, update, candidate]` stacking:
//!
//! ```text
//! r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//! z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//! n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//! h' = (1 - z) * n + z * h
//! ```

use super::{shape_err, Layer, NnError, Param, Scalar, Tensor};

#[derive(Debug, Clone)]
pub struct Gru<T> {
    /// `[3 * units, input]`
    pub w_ih: Param<T>,
    /// `[3 * units, units]`
    pub w_hh: Param<T>,
    pub b_ih: Param<T>,
    pub b_hh: Param<T>,
    cache: Option<GruCache<T>>,
}

#[derive(Debug, Clone)]
struct GruCache<T> {
    x_shape: Vec<usize>,
    // per batch element, per step: x_t, h_prev, r, z, n, hn (W_hn h + b_hn)
    xs: Vec<T>,
    h_prev: Vec<T>,
    r: Vec<T>,
    z: Vec<T>,
    n: Vec<T>,
    hn: Vec<T>,
}

fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

fn matvec<T: Scalar>(w: &[T], cols: usize, x: &[T], bias: &[T], out: &mut [T]) {
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *o = bias[r] + row.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>();
    }
}

impl<T: Scalar> Gru<T> {
    pub fn new(name: &str, inputs: usize, units: usize) -> Result<Self, NnError> {
        if inputs == 0 || units == 0 {
            return Err(NnError::InvalidSpec(format!("gru {name}: {inputs} inputs, {units} units")));
        }
        Ok(Gru {
            w_ih: Param::new(format!("{name}.w_ih"), Tensor::zeros(&[3 * units, inputs])),
            w_hh: Param::new(format!("{name}.w_hh"), Tensor::zeros(&[3 * units, units])),
            b_ih: Param::new(format!("{name}.b_ih"), Tensor::zeros(&[3 * units])),
            b_hh: Param::new(format!("{name}.b_hh"), Tensor::zeros(&[3 * units])),
            cache: None,
        })
    }

    pub fn units(&self) -> usize {
        self.w_hh.value.shape[1]
    }

    pub fn inputs(&self) -> usize {
        self.w_ih.value.shape[1]
    }

    /// Runs one sequence given time-major `[steps, inputs]` values and returns
    /// the last hidden state.
    pub fn run_sequence(&self, seq: &[T], steps: usize, h0: &[T]) -> Result<Vec<T>, NnError> {
        let (c, units) = (self.inputs(), self.units());
        if seq.len() != steps * c || h0.len() != units {
            return Err(shape_err(format!(
                "gru: {} values for {steps} steps x {c} inputs, initial state of {}",
                seq.len(),
                h0.len()
            )));
        }
        let mut h = h0.to_vec();
        let mut gi = vec![T::zero(); 3 * units];
        let mut gh = vec![T::zero(); 3 * units];
        for t in 0..steps {
            self.cell(&seq[t * c..(t + 1) * c], &mut h, &mut gi, &mut gh, None);
        }
        Ok(h)
    }

    /// One recurrence step, updating `h` in place. When `record` is given the
    /// gate values are appended to it.
    fn cell(&self, x: &[T], h: &mut [T], gi: &mut [T], gh: &mut [T], record: Option<&mut GruCache<T>>) {
        let units = self.units();
        matvec(&self.w_ih.value.data, self.inputs(), x, &self.b_ih.value.data, gi);
        matvec(&self.w_hh.value.data, units, h, &self.b_hh.value.data, gh);
        let mut rec = record;
        if let Some(c) = rec.as_deref_mut() {
            c.xs.extend_from_slice(x);
            c.h_prev.extend_from_slice(h);
        }
        for j in 0..units {
            let r = sigmoid(gi[j] + gh[j]);
            let z = sigmoid(gi[units + j] + gh[units + j]);
            let hn = gh[2 * units + j];
            let n = (gi[2 * units + j] + r * hn).tanh();
            if let Some(c) = rec.as_deref_mut() {
                c.r.push(r);
                c.z.push(z);
                c.n.push(n);
                c.hn.push(hn);
            }
            h[j] = (T::one() - z) * n + z * h[j];
        }
    }

    fn check(&self, x: &Tensor<T>) -> Result<(usize, usize, usize), NnError> {
        x.expect_rank(3, "gru")?;
        if x.shape[1] != self.inputs() {
            return Err(shape_err(format!("gru expects {} input channels, got {:?}", self.inputs(), x.shape)));
        }
        Ok((x.shape[0], x.shape[1], x.shape[2]))
    }

    fn run(&self, x: &Tensor<T>, mut record: Option<&mut GruCache<T>>) -> Result<Tensor<T>, NnError> {
        let (batch, c, steps) = self.check(x)?;
        let units = self.units();
        let mut out = Tensor::zeros(&[batch, units]);
        let mut xt = vec![T::zero(); c];
        let mut gi = vec![T::zero(); 3 * units];
        let mut gh = vec![T::zero(); 3 * units];
        for b in 0..batch {
            let mut h = vec![T::zero(); units];
            let base = b * c * steps;
            for t in 0..steps {
                for (ci, v) in xt.iter_mut().enumerate() {
                    *v = x.data[base + ci * steps + t];
                }
                self.cell(&xt, &mut h, &mut gi, &mut gh, record.as_deref_mut());
            }
            out.data[b * units..(b + 1) * units].copy_from_slice(&h);
        }
        Ok(out)
    }
}

impl<T: Scalar> Layer<T> for Gru<T> {
    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mut cache = GruCache {
            x_shape: x.shape.clone(),
            xs: Vec::new(),
            h_prev: Vec::new(),
            r: Vec::new(),
            z: Vec::new(),
            n: Vec::new(),
            hn: Vec::new(),
        };
        let y = self.run(x, Some(&mut cache))?;
        self.cache = Some(cache);
        Ok(y)
    }

    fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.run(x, None)
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let cache = self.cache.take().ok_or(NnError::GraphNotRecorded)?;
        let (batch, c, steps) = (cache.x_shape[0], cache.x_shape[1], cache.x_shape[2]);
        let units = self.units();
        if dy.shape != [batch, units] {
            return Err(shape_err(format!("gru backward: dy {:?}", dy.shape)));
        }
        let mut dx = Tensor::zeros(&cache.x_shape);
        let mut dgi = vec![T::zero(); 3 * units];
        let mut dgh = vec![T::zero(); 3 * units];
        let mut dxt = vec![T::zero(); c];
        for b in 0..batch {
            let mut dh: Vec<T> = dy.data[b * units..(b + 1) * units].to_vec();
            for t in (0..steps).rev() {
                let s = b * steps + t;
                let g = s * units..(s + 1) * units;
                let (r, z, n, hn) = (&cache.r[g.clone()], &cache.z[g.clone()], &cache.n[g.clone()], &cache.hn[g.clone()]);
                let hp = &cache.h_prev[g];
                let xt = &cache.xs[s * c..(s + 1) * c];
                let mut dh_prev = vec![T::zero(); units];
                for j in 0..units {
                    let dn = dh[j] * (T::one() - z[j]);
                    let dz = dh[j] * (hp[j] - n[j]);
                    dh_prev[j] = dh[j] * z[j];
                    let dn_pre = dn * (T::one() - n[j] * n[j]);
                    let dr_pre = dn_pre * hn[j] * r[j] * (T::one() - r[j]);
                    let dz_pre = dz * z[j] * (T::one() - z[j]);
                    dgi[j] = dr_pre;
                    dgi[units + j] = dz_pre;
                    dgi[2 * units + j] = dn_pre;
                    dgh[j] = dr_pre;
                    dgh[units + j] = dz_pre;
                    dgh[2 * units + j] = dn_pre * r[j];
                }
                dxt.fill(T::zero());
                for row in 0..3 * units {
                    let (gi_r, gh_r) = (dgi[row], dgh[row]);
                    self.b_ih.grad.data[row] += gi_r;
                    self.b_hh.grad.data[row] += gh_r;
                    let wi = &self.w_ih.value.data[row * c..(row + 1) * c];
                    let gwi = &mut self.w_ih.grad.data[row * c..(row + 1) * c];
                    for i in 0..c {
                        gwi[i] += gi_r * xt[i];
                        dxt[i] += gi_r * wi[i];
                    }
                    let wh = &self.w_hh.value.data[row * units..(row + 1) * units];
                    let gwh = &mut self.w_hh.grad.data[row * units..(row + 1) * units];
                    for i in 0..units {
                        gwh[i] += gh_r * hp[i];
                        dh_prev[i] += gh_r * wh[i];
                    }
                }
                let base = b * c * steps;
                for (ci, v) in dxt.iter().enumerate() {
                    dx.data[base + ci * steps + t] = *v;
                }
                dh = dh_prev;
            }
        }
        Ok(dx)
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        if input.len() != 3 || input[1] != self.inputs() {
            return Err(shape_err(format!("gru: input shape {input:?}")));
        }
        Ok(vec![input[0], self.units()])
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.w_ih, &self.w_hh, &self.b_ih, &self.b_hh]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.b_ih, &mut self.b_hh]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::fd;
    use rand::SeedableRng;

    #[test]
    fn zero_weights_give_zero_state() {
        let gru = Gru::<f64>::new("g", 3, 4).unwrap();
        let seq: Vec<f64> = (0..15).map(|i| i as f64 * 0.3 - 2.0).collect();
        assert_eq!(gru.run_sequence(&seq, 5, &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn single_step_scalar_cell() {
        let mut gru = Gru::<f64>::new("g", 1, 1).unwrap();
        for p in gru.params_mut().into_iter().take(2) {
            p.value.fill(0.5);
        }
        let h = gru.run_sequence(&[1.0], 1, &[0.0]).unwrap();
        // by hand with h0 = 0, zero biases: r = z = sigmoid(0.5), n = tanh(0.5)
        let s = 1.0 / (1.0 + (-0.5f64).exp());
        let want = (1.0 - s) * 0.5f64.tanh();
        assert!((h[0] - want).abs() < 1e-15);
        assert!((h[0] - 0.17446802061504182).abs() < 1e-12);
    }

    #[test]
    fn output_shape_independent_of_length() {
        let gru = Gru::<f32>::new("g", 2, 5).unwrap();
        for steps in [1, 7, 66] {
            let y = gru.infer(&Tensor::zeros(&[3, 2, steps])).unwrap();
            assert_eq!(y.shape, vec![3, 5]);
        }
        assert!(gru.run_sequence(&[0.0; 5], 3, &[0.0; 5]).is_err());
    }

    #[test]
    fn batch_path_matches_sequence_path() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut gru = Gru::<f64>::new("g", 2, 3).unwrap();
        for p in gru.params_mut() {
            p.value = fd::random_tensor(&p.value.shape.clone(), &mut rng);
        }
        let x = fd::random_tensor(&[1, 2, 4], &mut rng);
        // channel-major to time-major
        let seq: Vec<f64> = (0..4).flat_map(|t| [x.data[t], x.data[4 + t]]).collect();
        let a = gru.infer(&x).unwrap().data;
        let b = gru.run_sequence(&seq, 4, &[0.0; 3]).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for seed in 0..4 {
            let mut gru = Gru::<f64>::new("g", 3, 4).unwrap();
            for p in gru.params_mut() {
                p.value = fd::random_tensor(&p.value.shape.clone(), &mut rng);
            }
            let x = fd::random_tensor(&[2, 3, 5], &mut rng);
            let err = fd::check_layer(&mut gru, &x, seed);
            assert!(err < 1e-4, "{err}");
        }
    }
}
