//! Flat binary frame archive: `"EGN1"`, frame length (u32), frame count (u32),
//! then little-endian f32 samples, row-major.

use std::fs;
use std::path::Path;

use super::{FrameBatch, SignalError};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"EGN1";

pub fn encode_frame_archive(batch: &FrameBatch) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + batch.frames.len() * 4);
    out.extend_from_slice(ARCHIVE_MAGIC);
    out.extend_from_slice(&(batch.frame_len as u32).to_le_bytes());
    out.extend_from_slice(&(batch.num_frames() as u32).to_le_bytes());
    for v in &batch.frames {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_frame_archive(bytes: &[u8]) -> Result<FrameBatch, SignalError> {
    let bad = |m: String| SignalError::MalformedArchive(m);
    if bytes.len() < 12 {
        return Err(bad("shorter than header".into()));
    }
    if &bytes[..4] != ARCHIVE_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let frame_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = frame_len
        .checked_mul(count)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("size overflow".into()))?;
    let payload = &bytes[12..];
    if payload.len() != expected {
        return Err(bad(format!("payload is {} bytes, header implies {expected}", payload.len())));
    }
    let frames = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(FrameBatch { frames, frame_len, hop: 0, source_id: String::new() })
}

/// Writes `batch` to `path`. The hop and source id are not stored.
pub fn write_frame_archive(path: impl AsRef<Path>, batch: &FrameBatch) -> Result<(), SignalError> {
    let path = path.as_ref();
    fs::write(path, encode_frame_archive(batch)).map_err(|e| SignalError::io(path, e))
}

pub fn read_frame_archive(path: impl AsRef<Path>) -> Result<FrameBatch, SignalError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| SignalError::io(path, e))?;
    let mut batch = decode_frame_archive(&bytes)?;
    batch.source_id = path.to_string_lossy().into_owned();
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let batch = FrameBatch { frames: vec![1.0, -1.0, 0.5, 0.25], frame_len: 2, hop: 1, source_id: "x".into() };
        let bytes = encode_frame_archive(&batch);
        assert_eq!(&bytes[..4], b"EGN1");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 16);
    }

    #[test]
    fn truncated_payload_rejected() {
        let batch = FrameBatch { frames: vec![0.0; 6], frame_len: 3, hop: 1, source_id: String::new() };
        let bytes = encode_frame_archive(&batch);
        assert!(decode_frame_archive(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_frame_archive(b"EGN2\0\0\0\0\0\0\0\0").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(frame_len in 1usize..16, rows in 0usize..8, seed in any::<u32>()) {
            let frames: Vec<f32> = (0..frame_len * rows).map(|i| ((i as u32 ^ seed) % 2001) as f32 / 1000.0 - 1.0).collect();
            let batch = FrameBatch { frames, frame_len, hop: 0, source_id: String::new() };
            let back = decode_frame_archive(&encode_frame_archive(&batch)).unwrap();
            prop_assert_eq!(back, batch);
        }
    }
}
