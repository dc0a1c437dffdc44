//! Polyphase rational resampling with a Kaiser-windowed sinc lowpass.

use std::f64::consts::PI;

const HALF_LEN_PER_RATE: usize = 10;
const KAISER_BETA: f64 = 5.0;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Lowpass prototype with cutoff `cutoff` (fraction of Nyquist) and unit DC gain.
fn lowpass_taps(len: usize, cutoff: f64) -> Vec<f64> {
    let mid = (len - 1) as f64 / 2.0;
    let norm = bessel_i0(KAISER_BETA);
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 - mid;
            let sinc = if t == 0.0 { cutoff } else { (PI * cutoff * t).sin() / (PI * t) };
            let r = t / mid;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Resamples `x` from `from` Hz to `to` Hz.
///
/// Output length is `ceil(len * to / from)`; the filter is centered so there
/// is no net delay.
pub fn resample(x: &[f64], from: u32, to: u32) -> Vec<f64> {
    assert!(from > 0 && to > 0, "sample rates must be positive");
    if from == to || x.is_empty() {
        return x.to_vec();
    }
    let g = gcd(from as u64, to as u64);
    let up = (to as u64 / g) as usize;
    let down = (from as u64 / g) as usize;
    let max_rate = up.max(down);
    let half = HALF_LEN_PER_RATE * max_rate;
    let mut taps = lowpass_taps(2 * half + 1, 1.0 / max_rate as f64);
    taps.iter_mut().for_each(|t| *t *= up as f64);

    let out_len = (x.len() * up).div_ceil(down);
    let delay = half as i64;
    let n_in = x.len() as i64;
    let (up_i, taps_len) = (up as i64, taps.len() as i64);
    (0..out_len)
        .map(|n| {
            // position in the zero-stuffed stream aligned with the filter center
            let pos = (n * down) as i64 + delay;
            // input j contributes through tap pos - j*up, which must lie in [0, taps_len)
            let j_lo = ((pos - taps_len + 1) as f64 / up_i as f64).ceil().max(0.0) as i64;
            let j_hi = (pos / up_i).min(n_in - 1);
            let mut acc = 0.0;
            let mut j = j_lo;
            while j <= j_hi {
                acc += x[j as usize] * taps[(pos - j * up_i) as usize];
                j += 1;
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, rate: u32, secs: f64) -> Vec<f64> {
        let n = (rate as f64 * secs) as usize;
        (0..n).map(|i| (2.0 * PI * f * i as f64 / rate as f64).sin()).collect()
    }

    #[test]
    fn identity_when_rates_match() {
        let x = tone(50.0, 1000, 0.1);
        assert_eq!(resample(&x, 1000, 1000), x);
    }

    #[test]
    fn downsampled_tone_keeps_frequency_and_amplitude() {
        let x = tone(60.0, 8000, 4.0);
        let y = resample(&x, 8000, 1000);
        assert_eq!(y.len(), 4000);
        let want = tone(60.0, 1000, 4.0);
        // skip edges where the filter runs off the signal
        for i in 200..3800 {
            assert!((y[i] - want[i]).abs() < 2e-3, "sample {i}: {} vs {}", y[i], want[i]);
        }
    }

    #[test]
    fn rational_rate_44100_to_1000() {
        let x = tone(50.0, 44_100, 1.0);
        let y = resample(&x, 44_100, 1000);
        assert_eq!(y.len(), 1000);
        let want = tone(50.0, 1000, 1.0);
        for i in 100..900 {
            assert!((y[i] - want[i]).abs() < 2e-3);
        }
    }

    #[test]
    fn upsampling_interpolates() {
        let x = tone(20.0, 500, 2.0);
        let y = resample(&x, 500, 1000);
        assert_eq!(y.len(), 2000);
        let want = tone(20.0, 1000, 2.0);
        for i in 100..1900 {
            assert!((y[i] - want[i]).abs() < 2e-3);
        }
    }

    #[test]
    fn out_of_band_content_is_removed() {
        // 700 Hz folds to 300 Hz at a 1 kHz rate unless filtered first
        let x = tone(700.0, 8000, 2.0);
        let y = resample(&x, 8000, 1000);
        let rms = (y[200..1800].iter().map(|v| v * v).sum::<f64>() / 1600.0).sqrt();
        assert!(rms < 1e-2, "rms {rms}");
    }
}
