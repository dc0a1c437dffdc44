use std::collections::BTreeMap;
use std::path::Path;

use super::{aggregate, DecisionError, FramePrediction, RecordingVerdict, Thresholds};
use crate::model::{load_model, DataGroupId, RawNet};
use crate::nn::NnError;
use crate::signal::{frame, FrameBatch, FrameSpec, RecType, Recording, SignalError, WORKING_RATE};
use crate::spectral::{bandpass, detect_nominal_with, DetectConfig, Nominal};

/// Trained networks keyed by data group.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    models: BTreeMap<DataGroupId, RawNet<f32>>,
}

impl ModelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, group: DataGroupId, net: RawNet<f32>) {
        self.models.insert(group, net);
    }

    pub fn get(&self, group: DataGroupId) -> Option<&RawNet<f32>> {
        self.models.get(&group)
    }

    pub fn groups(&self) -> impl Iterator<Item = DataGroupId> + '_ {
        self.models.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Checkpoint file name for a group inside a model directory.
    pub fn checkpoint_name(group: DataGroupId) -> String {
        format!("{group}.egnw")
    }

    /// Loads every `<group>.egnw` present in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> crate::Result<Self> {
        let mut set = ModelSet::new();
        for group in DataGroupId::ALL {
            let path = dir.as_ref().join(Self::checkpoint_name(group));
            if path.exists() {
                set.insert(group, load_model(&path)?);
            }
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub thresholds: Thresholds,
    /// Recording type to use instead of the recording's own metadata.
    pub rec_type: Option<RecType>,
    /// Bandpass around the detected nominal before framing.
    pub filter: bool,
    pub detect: DetectConfig,
    pub frames: FrameSpec,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            thresholds: Thresholds::default(),
            rec_type: None,
            filter: true,
            detect: DetectConfig::default(),
            frames: FrameSpec::for_rate(WORKING_RATE),
        }
    }
}

/// Resamples to the working rate, optionally bandpasses around `nominal`,
/// then cuts normalized frames.
pub fn prepare_frames(
    recording: &Recording,
    nominal: Nominal,
    filter: bool,
    spec: &FrameSpec,
) -> crate::Result<FrameBatch> {
    let mut rec = recording.clone().at_rate(WORKING_RATE);
    if rec.len() < spec.frame_len {
        return Err(SignalError::RecordingTooShort { len: rec.len(), needed: spec.frame_len }.into());
    }
    if filter {
        rec.samples = bandpass(&rec.samples, rec.sample_rate, nominal)?;
    }
    Ok(frame(&rec, spec)?)
}

/// Full pipeline for one recording: nominal detection, group routing,
/// bandpass, framing, per-frame inference, entropy rejection and voting.
///
/// The verdict can only name a grid from the routed group's class table, or N.
pub fn classify_recording(
    recording: &Recording,
    models: &ModelSet,
    opts: &ClassifyOptions,
) -> crate::Result<RecordingVerdict> {
    opts.thresholds.validate()?;
    let rec_type = opts
        .rec_type
        .filter(|t| *t != RecType::Unknown)
        .or(Some(recording.rec_type).filter(|t| *t != RecType::Unknown))
        .ok_or_else(|| DecisionError::UnknownRecType(recording.source_id.clone()))?;

    let working = recording.clone().at_rate(WORKING_RATE);
    if working.len() < opts.frames.frame_len {
        return Err(SignalError::RecordingTooShort { len: working.len(), needed: opts.frames.frame_len }.into());
    }
    let detected = detect_nominal_with(&working, &opts.detect)?;
    let group = DataGroupId { rec_type, nominal: detected.nominal };
    let net = models.get(group).ok_or(DecisionError::MissingModel(group))?;
    if net.config().input_len != opts.frames.frame_len {
        return Err(NnError::ShapeMismatch(format!(
            "{group} model takes {} samples, frames are {}",
            net.config().input_len,
            opts.frames.frame_len
        ))
        .into());
    }

    let batch = prepare_frames(&working, detected.nominal, opts.filter, &opts.frames)?;
    let probs = net.predict_frames(&batch.frames)?;
    let frames = probs
        .into_iter()
        .map(|p| FramePrediction::from_probs(p, opts.thresholds.alpha1))
        .collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<Option<usize>> = frames.iter().map(|f| f.label).collect();
    let votes = aggregate(&labels, opts.thresholds.alpha2, group.num_classes())?;
    log::debug!(
        "{}: {group}, {} frames, top fraction {:.3}",
        recording.source_id,
        labels.len(),
        votes.top_fraction
    );
    Ok(RecordingVerdict::new(recording.source_id.clone(), group, votes, opts.thresholds, frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawNetConfig;
    use crate::signal::Grid;
    use crate::Error;

    fn tone(f: f64, secs: usize) -> Recording {
        let s = (0..secs * 1000).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / 1000.0).sin()).collect();
        Recording::new(s, 1000).with_source("t.wav")
    }

    fn small_models(groups: &[&str]) -> (ModelSet, ClassifyOptions) {
        let cfg = RawNetConfig { input_len: 4000, strict: false, gru_units: 4, front_filters: 2, block2_filters: 2, ..RawNetConfig::reduced(3) };
        let mut set = ModelSet::new();
        for g in groups {
            let group: DataGroupId = g.parse().unwrap();
            let cfg = RawNetConfig { num_classes: group.num_classes(), ..cfg.clone() };
            set.insert(group, RawNet::new(&cfg).unwrap());
        }
        let opts = ClassifyOptions { frames: FrameSpec::new(4000, 0.5), ..ClassifyOptions::default() };
        (set, opts)
    }

    #[test]
    fn unknown_type_needs_override() {
        let (models, opts) = small_models(&["audio60"]);
        let rec = tone(60.0, 20);
        let err = classify_recording(&rec, &models, &opts).unwrap_err();
        assert!(matches!(err, Error::Decision(DecisionError::UnknownRecType(ref s)) if s == "t.wav"));
        let opts = ClassifyOptions { rec_type: Some(RecType::Audio), ..opts };
        let v = classify_recording(&rec, &models, &opts).unwrap();
        assert_eq!(v.group.to_string(), "audio60");
        // zero weights give a uniform distribution: every frame rejected
        assert_eq!(v.final_grid, Grid::N);
        assert_eq!(v.votes.none_count, v.frames.len());
    }

    #[test]
    fn routing_and_missing_models() {
        let (models, opts) = small_models(&["power60"]);
        let rec = tone(50.0, 20).with_type(RecType::Power);
        let err = classify_recording(&rec, &models, &opts).unwrap_err();
        assert!(matches!(err, Error::Decision(DecisionError::MissingModel(g)) if g.to_string() == "power50"));
    }

    #[test]
    fn short_recording() {
        let (models, opts) = small_models(&["audio60"]);
        let rec = tone(60.0, 3).with_type(RecType::Audio);
        let err = classify_recording(&rec, &models, &opts).unwrap_err();
        assert!(matches!(err, Error::Signal(SignalError::RecordingTooShort { len: 3000, needed: 4000 })));
        let err = classify_recording(&rec, &models, &ClassifyOptions { rec_type: Some(RecType::Audio), ..ClassifyOptions::default() })
            .unwrap_err();
        assert!(matches!(err, Error::Signal(SignalError::RecordingTooShort { .. })));
    }

    #[test]
    fn prepare_resamples_filters_and_frames() {
        let rec = Recording::new(
            (0..20 * 2000).map(|i| (2.0 * std::f64::consts::PI * 60.0 * i as f64 / 2000.0).sin()).collect(),
            2000,
        );
        let spec = FrameSpec::new(4000, 0.5);
        let b = prepare_frames(&rec, Nominal::Hz60, true, &spec).unwrap();
        assert_eq!(b.num_frames(), spec.count(20_000));
        assert!(b.frames.iter().all(|v| v.abs() <= 1.0));
    }
}
