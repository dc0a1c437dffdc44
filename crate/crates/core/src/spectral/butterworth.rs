//! Digital Butterworth bandpass as cascaded biquads, with forward-backward
//! (zero-phase) application.
//!
//! The design follows the usual analog route: lowpass prototype poles,
//! lowpass-to-bandpass mapping at prewarped edges, then the bilinear
//! transform. Forward-backward filtering pads the signal with an odd
//! reflection and starts each pass in the steady state of its first sample.

use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

use super::{Nominal, SpectralError};

/// Prototype order; the bandpass has twice as many poles.
pub const BANDPASS_ORDER: usize = 4;
/// Passband is `nominal ± BANDPASS_HALFWIDTH_HZ`.
pub const BANDPASS_HALFWIDTH_HZ: f64 = 1.0;

/// Second-order section `b0 + b1 z^-1 + b2 z^-2 / 1 + a1 z^-1 + a2 z^-2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct-form II state after an infinitely long unit input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * g;
        [g - self.b[0], z2]
    }

    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
        let z2 = z1 * z1;
        (self.b[0] + z1 * self.b[1] + z2 * self.b[2]) / (1.0 + z1 * self.a[0] + z2 * self.a[1])
    }
}

/// Designs an order-`order` Butterworth bandpass between `lo` and `hi` Hz.
pub fn butter_bandpass(order: usize, lo: f64, hi: f64, fs: f64) -> Result<Vec<Biquad>, SpectralError> {
    let nyquist = fs / 2.0;
    if !(lo > 0.0 && lo < hi) {
        return Err(SpectralError::BandOutOfRange { lo, hi });
    }
    if hi >= nyquist {
        return Err(SpectralError::NyquistViolation { edge_hz: hi, nyquist_hz: nyquist });
    }
    let k = 2.0 * fs;
    let w_lo = k * (PI * lo / fs).tan();
    let w_hi = k * (PI * hi / fs).tan();
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;

    // upper-half-plane prototype poles; conjugates are implied by the sections
    let mut poles = Vec::with_capacity(order);
    for i in 0..order {
        let theta = PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(1.0, theta);
        // each prototype pole maps to the two roots of s^2 - p*bw*s + w0^2
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0_sq).sqrt();
        for s in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
            if s.im >= 0.0 {
                poles.push(s);
            }
        }
    }
    // odd orders leave a real prototype pole that maps to a conjugate pair
    poles.truncate(order);
    poles.sort_by(|a, b| a.im.total_cmp(&b.im));

    let mut sections: Vec<Biquad> = poles
        .iter()
        .map(|&s| {
            let z = (k + s) / (k - s);
            Biquad { b: [1.0, 0.0, -1.0], a: [-2.0 * z.re, z.norm_sqr()] }
        })
        .collect();

    // overall gain: unity at the geometric band center
    let fc = 2.0 * fs / (2.0 * PI) * (w0_sq.sqrt() / k).atan();
    let g: f64 = sections.iter().map(|s| s.response(fc, fs).norm()).product();
    let first = &mut sections[0];
    first.b.iter_mut().for_each(|b| *b /= g);
    Ok(sections)
}

/// Runs the cascade over `x` starting from per-section states `zi`.
fn run_cascade(sos: &[Biquad], x: &mut [f64], zi: &[[f64; 2]]) {
    for (s, z0) in sos.iter().zip(zi) {
        let [b0, b1, b2] = s.b;
        let [a1, a2] = s.a;
        let (mut z1, mut z2) = (z0[0], z0[1]);
        for v in x.iter_mut() {
            let xin = *v;
            let y = b0 * xin + z1;
            z1 = b1 * xin - a1 * y + z2;
            z2 = b2 * xin - a2 * y;
            *v = y;
        }
    }
}

/// Causal filtering from a zero initial state.
pub fn sosfilt(sos: &[Biquad], x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    run_cascade(sos, &mut y, &vec![[0.0; 2]; sos.len()]);
    y
}

/// Steady-state initial conditions for a unit step through the cascade.
fn cascade_step_state(sos: &[Biquad]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sos.iter()
        .map(|s| {
            let st = s.step_state();
            let out = [st[0] * scale, st[1] * scale];
            scale *= s.dc_gain();
            out
        })
        .collect()
}

/// Zero-phase forward-backward filtering; output length equals input length.
pub fn sosfiltfilt(sos: &[Biquad], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let padlen = (3 * (2 * sos.len() + 1)).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * padlen);
    let (first, last) = (x[0], x[n - 1]);
    ext.extend((1..=padlen).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=padlen).map(|i| 2.0 * last - x[n - 1 - i]));

    let zi = cascade_step_state(sos);
    let scaled = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();

    let zi_fwd = scaled(ext[0]);
    run_cascade(sos, &mut ext, &zi_fwd);
    ext.reverse();
    let zi_bwd = scaled(ext[0]);
    run_cascade(sos, &mut ext, &zi_bwd);
    ext.reverse();
    ext[padlen..padlen + n].to_vec()
}

/// Isolates the ENF band `nominal ± 1 Hz` with a zero-phase Butterworth filter.
pub fn bandpass(samples: &[f64], sample_rate: u32, nominal: Nominal) -> Result<Vec<f64>, SpectralError> {
    let f0 = nominal.hz();
    let fs = sample_rate as f64;
    let hi = f0 + BANDPASS_HALFWIDTH_HZ;
    if hi >= fs / 2.0 {
        return Err(SpectralError::NyquistViolation { edge_hz: hi, nyquist_hz: fs / 2.0 });
    }
    let sos = butter_bandpass(BANDPASS_ORDER, f0 - BANDPASS_HALFWIDTH_HZ, hi, fs)?;
    Ok(sosfiltfilt(&sos, samples))
}
