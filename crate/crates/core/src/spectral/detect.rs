//! Nominal-frequency detection from harmonic energy.
//!
//! For each candidate (50 and 60 Hz) the average spectrogram magnitude is
//! taken in a narrow band around the first three harmonics. The weakest of
//! the three is discarded, since the hum is not always present in every
//! harmonic, and the remaining two are averaged. The larger score wins.

use log::warn;

use super::stft::{harmonic_band_mean, spectrogram};
use super::{Nominal, SpectralError};
use crate::signal::Recording;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub window_secs: f64,
    pub hop_secs: f64,
    pub nfft_secs: f64,
    pub halfwidth_hz: f64,
}

impl Default for DetectConfig {
    /// 4 s Hann windows, 50% hop, FFT padded to 8 s (0.125 Hz bins), ±1 Hz bands.
    fn default() -> Self {
        DetectConfig { window_secs: 4.0, hop_secs: 2.0, nfft_secs: 8.0, halfwidth_hz: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NominalDecision {
    pub nominal: Nominal,
    pub score50: f64,
    pub score60: f64,
    /// Band means at harmonics 1..=3, for 50 Hz then 60 Hz.
    pub per_harmonic: [[f64; 3]; 2],
}

impl NominalDecision {
    /// `score50 - score60` relative to the larger score.
    pub fn margin(&self) -> f64 {
        let top = self.score50.max(self.score60);
        if top == 0.0 {
            0.0
        } else {
            (self.score50 - self.score60) / top
        }
    }
}

fn score(means: &[f64; 3]) -> f64 {
    let mut sorted = *means;
    sorted.sort_by(f64::total_cmp);
    (sorted[1] + sorted[2]) / 2.0
}

pub fn detect_nominal(recording: &Recording) -> Result<NominalDecision, SpectralError> {
    detect_nominal_with(recording, &DetectConfig::default())
}

pub fn detect_nominal_with(recording: &Recording, cfg: &DetectConfig) -> Result<NominalDecision, SpectralError> {
    let rate = recording.sample_rate as f64;
    let secs = |s: f64| (s * rate).round() as usize;
    let spec = spectrogram(
        &recording.samples,
        recording.sample_rate,
        secs(cfg.window_secs),
        secs(cfg.hop_secs).max(1),
        secs(cfg.nfft_secs),
    )?;
    let mut per_harmonic = [[0.0; 3]; 2];
    for (row, f0) in per_harmonic.iter_mut().zip([50.0, 60.0]) {
        for (h, cell) in row.iter_mut().enumerate() {
            *cell = harmonic_band_mean(&spec, f0 * (h + 1) as f64, cfg.halfwidth_hz)?;
        }
    }
    let score50 = score(&per_harmonic[0]);
    let score60 = score(&per_harmonic[1]);
    if score50 == score60 {
        warn!("{}: equal 50/60 Hz harmonic scores ({score50:e}); defaulting to 50 Hz", recording.source_id);
    }
    let nominal = if score50 >= score60 { Nominal::Hz50 } else { Nominal::Hz60 };
    Ok(NominalDecision { nominal, score50, score60, per_harmonic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn stack(f0: f64, amps: [f64; 3], secs: usize) -> Recording {
        let n = secs * 1000;
        let x = (0..n)
            .map(|i| {
                let t = i as f64 / 1000.0;
                (1..=3).map(|h| amps[h - 1] * (2.0 * PI * f0 * h as f64 * t).sin()).sum()
            })
            .collect();
        Recording::new(x, 1000)
    }

    #[test]
    fn pure_stacks() {
        assert_eq!(detect_nominal(&stack(60.0, [1.0, 0.5, 0.3], 20)).unwrap().nominal, Nominal::Hz60);
        assert_eq!(detect_nominal(&stack(50.0, [1.0, 0.5, 0.3], 20)).unwrap().nominal, Nominal::Hz50);
    }

    #[test]
    fn weakest_harmonic_is_ignored() {
        // 50 Hz hum with its 2nd harmonic missing, against a uniform 60 Hz
        // stack that would win if all three harmonics were averaged
        let mut rec = stack(50.0, [1.0, 0.0, 1.0], 20);
        let other = stack(60.0, [0.8, 0.8, 0.8], 20);
        for (v, o) in rec.samples.iter_mut().zip(&other.samples) {
            *v += o;
        }
        let d = detect_nominal(&rec).unwrap();
        let plain_mean = |r: &[f64; 3]| r.iter().sum::<f64>() / 3.0;
        assert!(plain_mean(&d.per_harmonic[0]) < plain_mean(&d.per_harmonic[1]));
        assert_eq!(d.nominal, Nominal::Hz50);
    }

    #[test]
    fn silence_ties_to_50() {
        let d = detect_nominal(&Recording::new(vec![0.0; 20_000], 1000)).unwrap();
        assert_eq!(d.nominal, Nominal::Hz50);
        assert_eq!(d.score50, 0.0);
        assert_eq!(d.margin(), 0.0);
    }

    #[test]
    fn too_short_for_window() {
        assert!(matches!(
            detect_nominal(&Recording::new(vec![0.0; 1000], 1000)),
            Err(SpectralError::InvalidWindow(_))
        ));
    }

    #[test]
    fn scale_invariant() {
        let mut rec = stack(60.0, [0.3, 1.0, 0.2], 20);
        for (i, v) in rec.samples.iter_mut().enumerate() {
            *v += 0.4 * (2.0 * PI * 100.0 * i as f64 / 1000.0).sin();
        }
        let base = detect_nominal(&rec).unwrap();
        for c in [1e-4, 0.5, 3.0, 1e3] {
            let scaled = Recording::new(rec.samples.iter().map(|v| v * c).collect(), 1000);
            assert_eq!(detect_nominal(&scaled).unwrap().nominal, base.nominal);
        }
    }
}
