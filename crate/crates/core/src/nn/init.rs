//! Seeded weight initializers.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Scalar, Tensor};

/// He-uniform: `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`.
pub fn he_uniform<T: Scalar, R: Rng>(t: &mut Tensor<T>, fan_in: usize, rng: &mut R) {
    let limit = (6.0 / fan_in as f64).sqrt();
    t.data.iter_mut().for_each(|v| *v = T::from_f64_lossy(rng.gen_range(-limit..limit)));
}

/// Glorot-uniform: `U(-sqrt(6 / (fan_in + fan_out)), ...)`.
pub fn glorot_uniform<T: Scalar, R: Rng>(t: &mut Tensor<T>, fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    t.data.iter_mut().for_each(|v| *v = T::from_f64_lossy(rng.gen_range(-limit..limit)));
}

/// A `rows x cols` matrix with orthonormal rows (or columns, when taller
/// than wide), from modified Gram-Schmidt on a Gaussian draw.
pub fn orthogonal<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    // orthonormalize along the longer side, as vectors of the shorter length
    let (n_vec, dim) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> =
        (0..n_vec).map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect()).collect();
    for i in 0..n_vec {
        for j in 0..i {
            let (done, rest) = vecs.split_at_mut(i);
            let proj: f64 = done[j].iter().zip(&rest[0]).map(|(a, b)| a * b).sum();
            rest[0].iter_mut().zip(&done[j]).for_each(|(v, q)| *v -= proj * q);
        }
        let norm = vecs[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        vecs[i].iter_mut().for_each(|v| *v /= norm);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows <= cols { vecs[r][c] } else { vecs[c][r] };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn orthogonal_rows() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let q = orthogonal(4, 4, &mut rng);
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..4).map(|k| q[i * 4 + k] * q[j * 4 + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn he_bounds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut t = Tensor::<f32>::zeros(&[100]);
        he_uniform(&mut t, 6, &mut rng);
        assert!(t.data.iter().all(|v| v.abs() <= 1.0));
        assert!(t.data.iter().any(|v| *v != 0.0));
    }
}
