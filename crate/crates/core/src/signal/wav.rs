//! Minimal RIFF/WAVE reader and 16-bit PCM writer.
//!
//! Reads PCM integer (8/16/24/32-bit) and IEEE float (32/64-bit) data,
//! including `WAVE_FORMAT_EXTENSIBLE` headers. Channels are averaged to mono.

use std::fs;
use std::path::Path;

use super::{Recording, SignalError};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Reads a WAV file into a mono [`Recording`] whose source id is the path.
pub fn decode_wav(path: impl AsRef<Path>) -> Result<Recording, SignalError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| SignalError::io(path, e))?;
    let rec = parse_wav(&bytes)?;
    Ok(rec.with_source(path.to_string_lossy()))
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses an in-memory WAV image.
pub fn parse_wav(bytes: &[u8]) -> Result<Recording, SignalError> {
    let malformed = |m: &str| SignalError::MalformedWav(m.to_string());
    if bytes.len() < 12 {
        return Err(malformed("file shorter than the RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE signature"));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).ok_or_else(|| malformed("chunk size overflow"))?;
        match id {
            b"fmt " => {
                if size < 16 || body_end > bytes.len() {
                    return Err(malformed("truncated fmt chunk"));
                }
                let b = &bytes[body_start..body_end];
                let mut format = u16_at(b, 0);
                if format == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(malformed("truncated extensible fmt chunk"));
                    }
                    // first two bytes of the subformat GUID carry the real tag
                    format = u16_at(b, 24);
                }
                fmt = Some(FmtChunk {
                    format,
                    channels: u16_at(b, 2),
                    sample_rate: u32_at(b, 4),
                    bits: u16_at(b, 14),
                });
            }
            b"data" => {
                // tolerate a data chunk whose declared size runs past EOF
                let end = body_end.min(bytes.len());
                data = Some(&bytes[body_start..end]);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| malformed("no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    if fmt.channels == 0 {
        return Err(malformed("zero channels"));
    }
    if fmt.sample_rate == 0 {
        return Err(malformed("zero sample rate"));
    }
    let unsupported = SignalError::UnsupportedEncoding { format: fmt.format, bits: fmt.bits };
    let decode: fn(&[u8]) -> f64 = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 8) => |b| (b[0] as f64 - 128.0) / 128.0,
        (FORMAT_PCM, 16) => |b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        (FORMAT_PCM, 24) => |b| {
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        },
        (FORMAT_PCM, 32) => |b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0,
        (FORMAT_FLOAT, 32) => |b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (FORMAT_FLOAT, 64) => |b| f64::from_le_bytes(b[..8].try_into().unwrap()),
        _ => return Err(unsupported),
    };

    let width = fmt.bits as usize / 8;
    let block = width * fmt.channels as usize;
    let frames = data.len() / block;
    if frames == 0 {
        return Err(SignalError::EmptyPayload);
    }
    let ch = fmt.channels as f64;
    let samples = data
        .chunks_exact(block)
        .map(|frame| frame.chunks_exact(width).map(decode).sum::<f64>() / ch)
        .collect();
    Ok(Recording::new(samples, fmt.sample_rate))
}

/// Encodes mono samples as 16-bit PCM. Values are clipped to [-1, 1].
pub fn encode_wav_pcm16(samples: &[f64], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_wav_pcm16(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<(), SignalError> {
    let path = path.as_ref();
    fs::write(path, encode_wav_pcm16(samples, sample_rate)).map_err(|e| SignalError::io(path, e))
}
