//! Run configuration shared by all subcommands.
//!
//! Values resolve in three layers: built-in defaults, then a `key = value`
//! file given with `--config`, then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gridloc_core::decision::Thresholds;
use gridloc_core::model::DataGroupId;
use gridloc_core::signal::WORKING_RATE;
use gridloc_core::FrameSpec;
use thiserror::Error;

/// Bad flags or configuration; reported with exit status 2.
#[derive(Debug, Error)]
pub enum UsageError {
    #[error("{path}: line {line}: {msg}")]
    ConfigLine { path: String, line: usize, msg: String },
    #[error("{path}: {source}")]
    ConfigRead { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Rate every recording is resampled to; fixed by the network input.
    pub sample_rate: u32,
    pub frame_len: usize,
    pub seed: u64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Bandpass around the nominal before framing.
    pub filter: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    /// Train and search the small network instead of the full-size one.
    pub reduced: bool,
    pub budget: usize,
    /// Epoch cap per search trial.
    pub max_epochs: usize,
    /// Network configuration files by group, set with `model_config.<group>`.
    pub model_configs: BTreeMap<DataGroupId, PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = Thresholds::default();
        RunConfig {
            sample_rate: WORKING_RATE,
            frame_len: FrameSpec::default().frame_len,
            seed: 0,
            alpha1: t.alpha1,
            alpha2: t.alpha2,
            filter: true,
            epochs: 100,
            batch_size: 32,
            patience: 10,
            reduced: false,
            budget: 8,
            max_epochs: 20,
            model_configs: BTreeMap::new(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad value {value:?} for {key}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        if let Some(group) = key.strip_prefix("model_config.") {
            let group: DataGroupId = group.parse().map_err(|e| format!("{key}: {e}"))?;
            self.model_configs.insert(group, PathBuf::from(v));
            return Ok(());
        }
        match key {
            "sample_rate" => self.sample_rate = parse(key, v)?,
            "frame_len" => self.frame_len = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "alpha1" => self.alpha1 = parse(key, v)?,
            "alpha2" => self.alpha2 = parse(key, v)?,
            "filter" => self.filter = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "patience" => self.patience = parse(key, v)?,
            "reduced" => self.reduced = parse(key, v)?,
            "budget" => self.budget = parse(key, v)?,
            "max_epochs" => self.max_epochs = parse(key, v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), UsageError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| UsageError::ConfigLine { path: origin.to_string(), line: i + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            self.set(k.trim(), v).map_err(err)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| UsageError::ConfigRead { path: path.display().to_string(), source })?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sample_rate = {}", self.sample_rate);
        let _ = writeln!(s, "frame_len = {}", self.frame_len);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "alpha1 = {}", self.alpha1);
        let _ = writeln!(s, "alpha2 = {}", self.alpha2);
        let _ = writeln!(s, "filter = {}", self.filter);
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "patience = {}", self.patience);
        let _ = writeln!(s, "reduced = {}", self.reduced);
        let _ = writeln!(s, "budget = {}", self.budget);
        let _ = writeln!(s, "max_epochs = {}", self.max_epochs);
        for (group, path) in &self.model_configs {
            let _ = writeln!(s, "model_config.{group} = {}", path.display());
        }
        s
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds { alpha1: self.alpha1, alpha2: self.alpha2 }
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        if self.sample_rate != WORKING_RATE {
            return Err(UsageError::Invalid(format!("sample_rate must be {WORKING_RATE} Hz")));
        }
        let frame_len = FrameSpec::default().frame_len;
        if self.frame_len != frame_len {
            return Err(UsageError::Invalid(format!("frame_len must be {frame_len} samples")));
        }
        for (group, path) in &self.model_configs {
            if !path.is_file() {
                return Err(UsageError::Invalid(format!("model_config.{group}: {} not found", path.display())));
            }
        }
        self.thresholds().validate().map_err(|e| UsageError::Invalid(e.to_string()))?;
        for (name, v) in [("epochs", self.epochs), ("batch_size", self.batch_size), ("max_epochs", self.max_epochs)] {
            if v == 0 {
                return Err(UsageError::Invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig { seed: 9, alpha1: 0.7, filter: false, ..RunConfig::default() };
        c.reduced = true;
        c.model_configs.insert("power50".parse().unwrap(), PathBuf::from("p50.cfg"));
        let mut back = RunConfig::default();
        back.apply_text(&c.to_text(), "x").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut c = RunConfig::default();
        let err = c.apply_text("# comment\nseed = 3\nalpha9 = 1\n", "run.cfg").unwrap_err();
        assert!(matches!(err, UsageError::ConfigLine { line: 3, .. }), "{err}");
        assert_eq!(c.seed, 3);
        assert!(c.apply_text("epochs\n", "f").is_err());
        assert!(c.apply_text("epochs = many\n", "f").is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        assert!(RunConfig { alpha2: 0.5, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { alpha1: -1.0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { epochs: 0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { sample_rate: 8000, ..RunConfig::default() }.validate().is_err());
        let mut c = RunConfig::default();
        c.set("model_config.audio60", "/nonexistent/a.cfg").unwrap();
        assert!(c.validate().is_err());
        assert!(c.set("model_config.audio70", "x").is_err());
    }
}
