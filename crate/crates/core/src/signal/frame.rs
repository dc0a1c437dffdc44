use super::{Recording, SignalError, WORKING_RATE};

/// Nominal frame duration in seconds.
pub const FRAME_SECONDS: u32 = 16;

/// Scales `samples` so the largest magnitude is exactly 1.
///
/// An all-zero input is returned unchanged.
pub fn normalize(samples: &[f64]) -> Vec<f64> {
    let mut out = samples.to_vec();
    normalize_in_place(&mut out);
    out
}

pub fn normalize_in_place<T: num_traits::Float>(samples: &mut [T]) {
    let peak = samples.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if peak > T::zero() {
        for x in samples.iter_mut() {
            *x = *x / peak;
        }
    }
}

/// Frame geometry.
///
/// `frame_len` is the number of samples fed to the network while `nominal_len`
/// is the frame duration the hop is derived from. The defaults give a
/// 15,999-sample input and an 8,000-sample hop at 1 kHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    pub frame_len: usize,
    pub nominal_len: usize,
    pub overlap: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec::for_rate(WORKING_RATE)
    }
}

impl FrameSpec {
    pub fn new(frame_len: usize, overlap: f64) -> Self {
        FrameSpec { frame_len, nominal_len: frame_len, overlap }
    }

    pub fn for_rate(rate: u32) -> Self {
        let nominal = (FRAME_SECONDS * rate) as usize;
        FrameSpec { frame_len: nominal - 1, nominal_len: nominal, overlap: 0.5 }
    }

    pub fn with_nominal(mut self, nominal_len: usize) -> Self {
        self.nominal_len = nominal_len;
        self
    }

    pub fn hop(&self) -> usize {
        ((1.0 - self.overlap) * self.nominal_len as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if self.frame_len == 0 {
            return Err(SignalError::InvalidFraming("frame length must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(SignalError::InvalidFraming(format!("overlap {} outside [0, 1)", self.overlap)));
        }
        if self.hop() == 0 {
            return Err(SignalError::InvalidFraming("hop rounds to zero".into()));
        }
        Ok(())
    }

    /// Number of whole frames in a signal of `len` samples.
    pub fn count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop() + 1
        }
    }
}

/// Peak-normalized frames cut from one recording, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBatch {
    pub frames: Vec<f32>,
    pub frame_len: usize,
    pub hop: usize,
    pub source_id: String,
}

impl FrameBatch {
    pub fn empty(frame_len: usize, hop: usize) -> Self {
        FrameBatch { frames: Vec::new(), frame_len, hop, source_id: String::new() }
    }

    pub fn num_frames(&self) -> usize {
        if self.frame_len == 0 {
            0
        } else {
            self.frames.len() / self.frame_len
        }
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        &self.frames[i * self.frame_len..(i + 1) * self.frame_len]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> + '_ {
        self.frames.chunks_exact(self.frame_len.max(1))
    }
}

/// Cuts `recording` into overlapping frames, normalizing each one on its own.
///
/// Trailing samples that do not fill a whole frame are dropped.
pub fn frame(recording: &Recording, spec: &FrameSpec) -> Result<FrameBatch, SignalError> {
    spec.validate()?;
    let n = recording.samples.len();
    if n < spec.frame_len {
        return Err(SignalError::RecordingTooShort { len: n, needed: spec.frame_len });
    }
    let hop = spec.hop();
    let count = spec.count(n);
    let mut frames = Vec::with_capacity(count * spec.frame_len);
    for i in 0..count {
        let start = i * hop;
        let mut f: Vec<f32> = recording.samples[start..start + spec.frame_len].iter().map(|&x| x as f32).collect();
        normalize_in_place(&mut f);
        frames.extend_from_slice(&f);
    }
    Ok(FrameBatch { frames, frame_len: spec.frame_len, hop, source_id: recording.source_id.clone() })
}
