use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{synth_enf, synth_noise, CorpusManifest, DatasetError, GridProfile, ManifestEntry, Split};
use crate::model::grid_nominal;
use crate::signal::{decode_wav, write_wav_pcm16, Grid, RecType, WORKING_RATE};
use crate::spectral::Nominal;
use crate::SeedSplitter;

pub const MANIFEST_FILE: &str = "manifest.csv";

/// Peak level written to 16-bit WAV files, leaving headroom below clipping.
const WAV_PEAK: f64 = 0.9;

/// What a group of synthetic recordings contains.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Enf(GridProfile),
    /// Uniform white noise with no hum.
    Noise,
}

/// `count` recordings of one kind, placed under `split/rec_type/grid/`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub split: Split,
    pub rec_type: RecType,
    pub grid: Grid,
    pub source: Source,
    pub count: usize,
    pub duration_s: f64,
}

/// Nominal recorded in a manifest: known from the grid letter outside the
/// test split, left for detection inside it.
fn manifest_nominal(split: Split, grid: Grid) -> Option<Nominal> {
    if split == Split::Test {
        None
    } else {
        grid_nominal(grid)
    }
}

/// Writes every requested recording as a 16-bit WAV at the working rate, plus
/// `manifest.csv`, under `out_dir`. Each file's generator seed is derived from
/// `seed` and its relative path, so output is a pure function of the inputs.
pub fn make_corpus(items: &[CorpusItem], out_dir: impl AsRef<Path>, seed: u64) -> Result<CorpusManifest, DatasetError> {
    let root = out_dir.as_ref();
    let seeds = SeedSplitter::new(seed);
    let mut next_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut entries = Vec::new();

    for item in items {
        if item.rec_type == RecType::Unknown {
            return Err(DatasetError::InvalidProfile("corpus recordings need a known type".into()));
        }
        if let Source::Enf(p) = &item.source {
            if item.grid != Grid::N && grid_nominal(item.grid) != Some(p.nominal) {
                return Err(DatasetError::InvalidProfile(format!(
                    "grid {} is not a {} Hz grid",
                    item.grid,
                    p.nominal
                )));
            }
        }
        let dir = format!("{}/{}/{}", item.split, item.rec_type, item.grid);
        fs::create_dir_all(root.join(&dir)).map_err(|e| DatasetError::io(root.join(&dir), e))?;
        for _ in 0..item.count {
            let idx = next_index.entry(dir.clone()).or_insert(0);
            let rel = format!("{dir}/{}-{}-{:04}.wav", item.grid, item.rec_type, *idx);
            *idx += 1;
            let file_seed = seeds.derive(&rel);
            let rec = match &item.source {
                Source::Enf(p) => synth_enf(p, item.duration_s, WORKING_RATE, file_seed)?,
                Source::Noise => synth_noise(item.duration_s, WORKING_RATE, file_seed),
            };
            let peak = rec.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = if peak > 0.0 { WAV_PEAK / peak } else { 1.0 };
            let samples: Vec<f64> = rec.samples.iter().map(|v| v * scale).collect();
            write_wav_pcm16(root.join(&rel), &samples, WORKING_RATE)?;
            entries.push(ManifestEntry {
                path: rel,
                grid: item.grid,
                rec_type: item.rec_type,
                nominal: manifest_nominal(item.split, item.grid),
                duration_s: rec.duration_secs(),
                seed: Some(file_seed),
            });
        }
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = CorpusManifest { entries };
    fs::create_dir_all(root).map_err(|e| DatasetError::io(root, e))?;
    let mpath = root.join(MANIFEST_FILE);
    fs::write(&mpath, manifest.to_csv()).map_err(|e| DatasetError::io(mpath, e))?;
    Ok(manifest)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), DatasetError> {
    let listing = fs::read_dir(dir).map_err(|e| DatasetError::io(dir, e))?;
    for entry in listing {
        let path = entry.map_err(|e| DatasetError::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Scans a corpus directory. Recording type and grid come from the path; the
/// nominal is set from the grid letter except in the test split and for N.
/// Any file other than a root-level `manifest.csv` must sit at
/// `split/type/grid/name.wav`.
pub fn load_layout(root: impl AsRef<Path>) -> Result<CorpusManifest, DatasetError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(DatasetError::Layout { path: root.to_path_buf(), reason: "not a directory".into() });
    }
    let mut files = Vec::new();
    collect_files(root, &mut files)?;
    let mut entries = Vec::new();
    for path in files {
        let rel = path.strip_prefix(root).expect("scanned below root");
        let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        if parts.len() == 1 && parts[0] == MANIFEST_FILE {
            continue;
        }
        let layout_err = |reason: String| DatasetError::Layout { path: path.clone(), reason };
        if parts.len() != 4 {
            return Err(layout_err("expected split/type/grid/file.wav".into()));
        }
        let split: Split = parts[0].parse().map_err(layout_err)?;
        let rec_type = match parts[1].parse() {
            Ok(t @ (RecType::Audio | RecType::Power)) => t,
            _ => return Err(layout_err(format!("recording type {:?} is not audio or power", parts[1]))),
        };
        let grid: Grid = parts[2].parse().map_err(layout_err)?;
        if !parts[3].to_ascii_lowercase().ends_with(".wav") {
            return Err(layout_err("not a .wav file".into()));
        }
        let rec = decode_wav(&path)?;
        entries.push(ManifestEntry {
            path: parts.join("/"),
            grid,
            rec_type,
            nominal: manifest_nominal(split, grid),
            duration_s: rec.duration_secs(),
            seed: None,
        });
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(CorpusManifest { entries })
}
