use std::f64::consts::PI;
use std::io::{self, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::SpectralError;

/// Linear-magnitude STFT, stored time-major (one row per window position).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<f64>,
    pub time_bins: usize,
    pub freq_bins: usize,
    /// Hz per frequency bin (`sample_rate / nfft`).
    pub freq_resolution: f64,
    /// Seconds between consecutive columns.
    pub time_step: f64,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn column(&self, t: usize) -> &[f64] {
        &self.magnitudes[t * self.freq_bins..(t + 1) * self.freq_bins]
    }

    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.freq_resolution
    }

    /// Time-averaged magnitude per frequency bin.
    pub fn mean_spectrum(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.freq_bins];
        for t in 0..self.time_bins {
            for (o, m) in out.iter_mut().zip(self.column(t)) {
                *o += m;
            }
        }
        out.iter_mut().for_each(|o| *o /= self.time_bins as f64);
        out
    }

    /// CSV dump: a header of bin frequencies, then one line per time column.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = (0..self.freq_bins).map(|k| format!("{}", self.bin_freq(k))).collect();
        writeln!(w, "{}", header.join(","))?;
        for t in 0..self.time_bins {
            let row: Vec<String> = self.column(t).iter().map(|m| format!("{m:e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn hann(len: usize) -> Vec<f64> {
    // periodic form: tiles exactly at 50% overlap
    (0..len).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos()).collect()
}

/// Hann-windowed magnitude STFT keeping bins `0..=nfft/2`.
pub fn spectrogram(
    samples: &[f64],
    sample_rate: u32,
    window_len: usize,
    hop: usize,
    nfft: usize,
) -> Result<Spectrogram, SpectralError> {
    if window_len == 0 || hop == 0 || nfft == 0 {
        return Err(SpectralError::InvalidWindow("window, hop and nfft must be positive".into()));
    }
    if window_len > nfft {
        return Err(SpectralError::InvalidWindow(format!("window {window_len} exceeds nfft {nfft}")));
    }
    if samples.len() < window_len {
        return Err(SpectralError::InvalidWindow(format!(
            "signal of {} samples is shorter than the {window_len}-sample window",
            samples.len()
        )));
    }
    let window = hann(window_len);
    let time_bins = (samples.len() - window_len) / hop + 1;
    let freq_bins = nfft / 2 + 1;
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let mut magnitudes = Vec::with_capacity(time_bins * freq_bins);
    for t in 0..time_bins {
        let seg = &samples[t * hop..t * hop + window_len];
        for (b, (x, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new(x * w, 0.0);
        }
        buf[window_len..].iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
        fft.process(&mut buf);
        magnitudes.extend(buf[..freq_bins].iter().map(|c| c.norm()));
    }
    Ok(Spectrogram {
        magnitudes,
        time_bins,
        freq_bins,
        freq_resolution: sample_rate as f64 / nfft as f64,
        time_step: hop as f64 / sample_rate as f64,
        sample_rate,
    })
}

/// Mean magnitude over all cells whose bin center lies in
/// `[center - halfwidth, center + halfwidth]`, across every time column.
pub fn harmonic_band_mean(spec: &Spectrogram, center: f64, halfwidth: f64) -> Result<f64, SpectralError> {
    let (lo, hi) = (center - halfwidth, center + halfwidth);
    let nyquist = spec.sample_rate as f64 / 2.0;
    if lo < 0.0 || hi >= nyquist || halfwidth < 0.0 {
        return Err(SpectralError::BandOutOfRange { lo, hi });
    }
    // small slack so bins sitting exactly on an edge count despite rounding
    let eps = spec.freq_resolution * 1e-9;
    let k_lo = ((lo - eps) / spec.freq_resolution).ceil().max(0.0) as usize;
    let k_hi = ((hi + eps) / spec.freq_resolution).floor() as usize;
    if k_hi < k_lo || k_hi >= spec.freq_bins {
        return Err(SpectralError::BandOutOfRange { lo, hi });
    }
    let mut sum = 0.0;
    for t in 0..spec.time_bins {
        sum += spec.column(t)[k_lo..=k_hi].iter().sum::<f64>();
    }
    Ok(sum / ((k_hi - k_lo + 1) * spec.time_bins) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, rate: u32, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / rate as f64).sin()).collect()
    }

    #[test]
    fn fifty_hz_peak_lands_on_bin_200() {
        let x = tone(50.0, 1000, 16_000);
        let spec = spectrogram(&x, 1000, 4000, 2000, 4000).unwrap();
        assert_eq!(spec.freq_resolution, 0.25);
        let mean = spec.mean_spectrum();
        let peak = (0..mean.len()).max_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap();
        assert_eq!(peak, 200);

        // direct DFT of the first windowed segment at bin 200
        let w = hann(4000);
        let (mut re, mut im) = (0.0, 0.0);
        for n in 0..4000 {
            let ang = -2.0 * PI * 200.0 * n as f64 / 4000.0;
            re += x[n] * w[n] * ang.cos();
            im += x[n] * w[n] * ang.sin();
        }
        assert!((spec.column(0)[200] - (re * re + im * im).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn zero_and_dc_inputs() {
        let spec = spectrogram(&[0.0; 5000], 1000, 1000, 500, 2000).unwrap();
        assert!(spec.magnitudes.iter().all(|&m| m == 0.0));

        let spec = spectrogram(&[1.0; 4000], 1000, 1000, 500, 1000).unwrap();
        for t in 0..spec.time_bins {
            let col = spec.column(t);
            assert!(col[0] > 100.0);
            // periodic Hann leaks only into the neighbouring bin
            assert!(col[2..].iter().all(|&m| m < 1e-9));
        }
    }

    #[test]
    fn column_count_and_errors() {
        let spec = spectrogram(&vec![0.0; 10_000], 1000, 4000, 2000, 8000).unwrap();
        assert_eq!(spec.time_bins, (10_000 - 4000) / 2000 + 1);
        assert!(matches!(spectrogram(&[0.0; 100], 1000, 200, 10, 256), Err(SpectralError::InvalidWindow(_))));
        assert!(matches!(spectrogram(&[0.0; 1000], 1000, 512, 10, 256), Err(SpectralError::InvalidWindow(_))));
    }

    #[test]
    fn band_means() {
        let x = tone(50.0, 1000, 20_000);
        let spec = spectrogram(&x, 1000, 4000, 2000, 8000).unwrap();
        let at50 = harmonic_band_mean(&spec, 50.0, 1.0).unwrap();
        let at60 = harmonic_band_mean(&spec, 60.0, 1.0).unwrap();
        assert!(at50 > at60);

        let zero = spectrogram(&vec![0.0; 20_000], 1000, 4000, 2000, 8000).unwrap();
        assert_eq!(harmonic_band_mean(&zero, 50.0, 1.0).unwrap(), 0.0);

        // 0.01 Hz wide band between two 0.125 Hz bins
        assert!(matches!(
            harmonic_band_mean(&spec, 50.06, 0.005),
            Err(SpectralError::BandOutOfRange { .. })
        ));
        assert!(harmonic_band_mean(&spec, 499.5, 1.0).is_err());
    }

    #[test]
    fn csv_shape() {
        let spec = spectrogram(&vec![0.5; 64], 1000, 16, 16, 16).unwrap();
        let mut out = Vec::new();
        spec.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + spec.time_bins);
        assert_eq!(lines[0].split(',').count(), 9);
        assert!(lines[0].starts_with("0,62.5,"));
    }
}
