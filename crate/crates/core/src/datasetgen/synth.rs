use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::DatasetError;
use crate::model::grid_nominal;
use crate::signal::{Grid, Recording};
use crate::spectral::Nominal;
use crate::SeedSplitter;

/// Statistical signature of one synthetic grid.
///
/// The instantaneous frequency is `f0 + x(t)` with `x` an Ornstein-Uhlenbeck
/// process of stationary standard deviation `drift_sigma` and mean-reversion
/// time `drift_tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridProfile {
    pub nominal: Nominal,
    pub drift_sigma: f64,
    pub drift_tau: f64,
    /// Amplitudes of harmonics 1, 2 and 3.
    pub harmonic_amps: [f64; 3],
    /// SNR range in dB, drawn uniformly per recording; `None` adds no noise.
    pub snr_db: Option<(f64, f64)>,
}

/// SNR range for audio recordings, where the hum is weak.
pub const AUDIO_SNR_DB: (f64, f64) = (0.0, 10.0);
/// SNR range for power-line recordings.
pub const POWER_SNR_DB: (f64, f64) = (10.0, 25.0);

const MIN_DURATION_S: f64 = 16.0;

/// Drift parameters `(sigma, tau)` of the built-in synthetic grids, indexed
/// by grid letter A..I.
const REFERENCE_DRIFT: [(f64, f64); 9] = [
    (0.05, 1.0),
    (0.05, 1.0),
    (0.3, 1.0),
    (0.3, 1.0),
    (0.6, 1.0),
    (0.45, 0.2),
    (0.45, 5.0),
    (0.8, 1.0),
    (0.6, 1.0),
];

/// Noise-free built-in profile for a grid letter; `None` for N.
pub fn reference_profile(grid: Grid) -> Option<GridProfile> {
    let nominal = grid_nominal(grid)?;
    let (sigma, tau) = REFERENCE_DRIFT[grid.index()];
    Some(GridProfile::new(nominal, sigma, tau))
}

impl GridProfile {
    /// Noise-free profile with harmonic amplitudes 1, 0.5, 0.3.
    pub fn new(nominal: Nominal, drift_sigma: f64, drift_tau: f64) -> Self {
        GridProfile { nominal, drift_sigma, drift_tau, harmonic_amps: [1.0, 0.5, 0.3], snr_db: None }
    }

    pub fn with_snr(mut self, lo: f64, hi: f64) -> Self {
        self.snr_db = Some((lo, hi));
        self
    }

    pub fn audio(self) -> Self {
        self.with_snr(AUDIO_SNR_DB.0, AUDIO_SNR_DB.1)
    }

    pub fn power(self) -> Self {
        self.with_snr(POWER_SNR_DB.0, POWER_SNR_DB.1)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidProfile(m));
        if !(self.drift_sigma >= 0.0 && self.drift_sigma < 1.0) {
            return bad(format!("drift_sigma {} outside [0, 1) Hz", self.drift_sigma));
        }
        if !(self.drift_tau.is_finite() && self.drift_tau > 0.0) {
            return bad(format!("drift_tau {} must be positive", self.drift_tau));
        }
        if self.harmonic_amps.iter().any(|a| !(a.is_finite() && *a >= 0.0))
            || self.harmonic_amps.iter().all(|&a| a == 0.0)
        {
            return bad(format!("harmonic amplitudes {:?}", self.harmonic_amps));
        }
        if let Some((lo, hi)) = self.snr_db {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("snr range ({lo}, {hi})"));
            }
        }
        Ok(())
    }
}

/// Synthesizes `duration_s` seconds of hum: three harmonics of an OU-drifting
/// fundamental with random phases, plus white Gaussian noise at an SNR drawn
/// from the profile's range. Deterministic per seed.
pub fn synth_enf(profile: &GridProfile, duration_s: f64, sample_rate: u32, seed: u64) -> Result<Recording, DatasetError> {
    profile.validate()?;
    if !(duration_s >= MIN_DURATION_S) {
        return Err(DatasetError::InvalidProfile(format!("duration {duration_s} s shorter than {MIN_DURATION_S} s")));
    }
    let fs = sample_rate as f64;
    let top = 3.0 * (profile.nominal.hz() + 1.0);
    if top >= fs / 2.0 {
        return Err(DatasetError::InvalidProfile(format!("third harmonic near {top} Hz needs a rate above {}", 2.0 * top)));
    }
    let n = (duration_s * fs).round() as usize;
    let seeds = SeedSplitter::new(seed);
    let mut drift_rng = seeds.rng("drift");
    let mut phase_rng = seeds.rng("phase");
    let mut noise_rng = seeds.rng("noise");

    let dt = 1.0 / fs;
    let a = (-dt / profile.drift_tau).exp();
    let kick = profile.drift_sigma * (1.0 - a * a).sqrt();
    let f0 = profile.nominal.hz();
    let z0: f64 = StandardNormal.sample(&mut drift_rng);
    let mut x = profile.drift_sigma * z0;
    let phases: [f64; 3] = std::array::from_fn(|_| phase_rng.gen_range(0.0..std::f64::consts::TAU));

    let mut theta = 0.0f64;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let s: f64 = (0..3).map(|h| profile.harmonic_amps[h] * ((h + 1) as f64 * theta + phases[h]).sin()).sum();
        samples.push(s);
        theta += std::f64::consts::TAU * (f0 + x) * dt;
        let z: f64 = StandardNormal.sample(&mut drift_rng);
        x = a * x + kick * z;
    }

    if let Some((lo, hi)) = profile.snr_db {
        let snr = if lo == hi { lo } else { noise_rng.gen_range(lo..hi) };
        let power = samples.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64;
        let noise_std = (power / 10f64.powf(snr / 10.0)).sqrt();
        for v in &mut samples {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            *v += noise_std * z;
        }
    }
    Ok(Recording::new(samples, sample_rate))
}

/// Uniform white noise in [-1, 1], carrying no hum at all.
pub fn synth_noise(duration_s: f64, sample_rate: u32, seed: u64) -> Recording {
    let n = (duration_s * sample_rate as f64).round() as usize;
    let mut rng = SeedSplitter::new(seed).rng("noise");
    Recording::new((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(), sample_rate)
}

/// Power-weighted mean frequency and spread (standard deviation) of the
/// spectrum within `center ± halfwidth`.
pub fn band_moments(samples: &[f64], sample_rate: u32, center: f64, halfwidth: f64) -> (f64, f64) {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = sample_rate as f64 / n as f64;
    let (mut w, mut wf, mut wff) = (0.0, 0.0, 0.0);
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1) {
        let f = k as f64 * df;
        if (f - center).abs() <= halfwidth {
            let p = c.norm_sqr();
            w += p;
            wf += p * f;
            wff += p * f * f;
        }
    }
    if w == 0.0 {
        return (center, 0.0);
    }
    let mean = wf / w;
    (mean, (wff / w - mean * mean).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::detect_nominal;

    #[test]
    fn degenerate_profile_is_a_pure_stack() {
        for nominal in [Nominal::Hz50, Nominal::Hz60] {
            let p = GridProfile::new(nominal, 0.0, 1.0);
            let rec = synth_enf(&p, 20.0, 1000, 3).unwrap();
            assert_eq!(rec.len(), 20_000);
            assert_eq!(detect_nominal(&rec).unwrap().nominal, nominal);
            let (centroid, spread) = band_moments(&rec.samples, 1000, nominal.hz(), 1.0);
            assert!((centroid - nominal.hz()).abs() < 1e-6, "{centroid}");
            assert!(spread < 1e-4, "{spread}");
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let p = GridProfile::new(Nominal::Hz60, 0.1, 2.0).audio();
        let a = synth_enf(&p, 16.0, 1000, 9).unwrap();
        assert_eq!(a, synth_enf(&p, 16.0, 1000, 9).unwrap());
        assert_ne!(a, synth_enf(&p, 16.0, 1000, 10).unwrap());
        assert_eq!(synth_noise(16.0, 1000, 1), synth_noise(16.0, 1000, 1));
    }

    #[test]
    fn noise_matches_requested_snr() {
        let p = GridProfile::new(Nominal::Hz50, 0.0, 1.0).with_snr(6.0, 6.0);
        let clean = synth_enf(&GridProfile { snr_db: None, ..p.clone() }, 60.0, 1000, 4).unwrap();
        let noisy = synth_enf(&p, 60.0, 1000, 4).unwrap();
        let ps: f64 = clean.samples.iter().map(|v| v * v).sum();
        let pn: f64 = noisy.samples.iter().zip(&clean.samples).map(|(a, b)| (a - b) * (a - b)).sum();
        let snr = 10.0 * (ps / pn).log10();
        assert!((snr - 6.0).abs() < 0.1, "{snr}");
    }

    #[test]
    fn invalid_profiles() {
        let ok = GridProfile::new(Nominal::Hz60, 0.1, 1.0);
        let invalid = |p: GridProfile| matches!(synth_enf(&p, 20.0, 1000, 0), Err(DatasetError::InvalidProfile(_)));
        assert!(invalid(GridProfile { drift_sigma: 1.0, ..ok.clone() }));
        assert!(invalid(GridProfile { drift_tau: 0.0, ..ok.clone() }));
        assert!(invalid(GridProfile { harmonic_amps: [0.0; 3], ..ok.clone() }));
        assert!(invalid(ok.clone().with_snr(5.0, 1.0)));
        assert!(matches!(synth_enf(&ok, 15.9, 1000, 0), Err(DatasetError::InvalidProfile(_))));
        assert!(matches!(synth_enf(&ok, 20.0, 300, 0), Err(DatasetError::InvalidProfile(_))));
    }
}
