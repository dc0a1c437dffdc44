//! Central finite-difference oracle used by the layer unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Layer, Tensor};

pub const H: f64 = 1e-3;

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-7)
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), shape).unwrap()
}

fn projected_loss<L: Layer<f64>>(layer: &mut L, x: &Tensor<f64>, r: &Tensor<f64>) -> f64 {
    let y = layer.forward(x).unwrap();
    y.data.iter().zip(&r.data).map(|(a, b)| a * b).sum()
}

/// Largest relative error between analytic and numeric gradients of
/// `sum(r * layer(x))`, over the input and every parameter.
pub fn check_layer<L: Layer<f64>>(layer: &mut L, x: &Tensor<f64>, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out_shape = layer.output_shape(&x.shape).unwrap();
    let r = random_tensor(&out_shape, &mut rng);

    layer.params_mut().into_iter().for_each(|p| p.zero_grad());
    let y = layer.forward(x).unwrap();
    assert_eq!(y.shape, out_shape, "declared vs executed output shape");
    let dx = layer.backward(&r).unwrap();
    let analytic: Vec<Vec<f64>> = layer.params().iter().map(|p| p.grad.data.clone()).collect();

    let mut worst: f64 = 0.0;
    let mut xp = x.clone();
    for i in 0..x.len() {
        let orig = xp.data[i];
        xp.data[i] = orig + H;
        let up = projected_loss(layer, &xp, &r);
        xp.data[i] = orig - H;
        let down = projected_loss(layer, &xp, &r);
        xp.data[i] = orig;
        worst = worst.max(rel_err(dx.data[i], (up - down) / (2.0 * H)));
    }
    let n_params = layer.params().len();
    for pi in 0..n_params {
        let len = layer.params()[pi].value.len();
        for i in 0..len {
            let orig = layer.params()[pi].value.data[i];
            layer.params_mut()[pi].value.data[i] = orig + H;
            let up = projected_loss(layer, x, &r);
            layer.params_mut()[pi].value.data[i] = orig - H;
            let down = projected_loss(layer, x, &r);
            layer.params_mut()[pi].value.data[i] = orig;
            worst = worst.max(rel_err(analytic[pi][i], (up - down) / (2.0 * H)));
        }
    }
    worst
}
