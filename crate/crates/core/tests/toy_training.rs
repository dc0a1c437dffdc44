use std::sync::OnceLock;

use gridloc_core::datasetgen::{reference_profile, synth_enf, GridProfile};
use gridloc_core::decision::{classify_recording, prepare_frames, ClassifyOptions, ModelSet};
use gridloc_core::model::{
    build_rawnet, grid_nominal, nas_search, train, DataGroupId, LabeledFrames, RawNet, RawNetConfig, SearchSpace,
    TrainOptions,
};
use gridloc_core::{FrameSpec, Grid, RecType};

const RATE: u32 = 1000;

fn group(name: &str) -> DataGroupId {
    name.parse().unwrap()
}

fn profile(grid: Grid, rec_type: RecType) -> GridProfile {
    let p = reference_profile(grid).unwrap();
    if rec_type == RecType::Power {
        p.power()
    } else {
        p.audio()
    }
}

/// `per_class` bandpassed frames of every class in `group`, cut from 64 s
/// recordings whose seeds start at `seed`.
fn toy_frames(group: DataGroupId, per_class: usize, seed: u64) -> LabeledFrames {
    let spec = FrameSpec::for_rate(RATE);
    let mut data = LabeledFrames::new(spec.frame_len);
    for (label, &grid) in group.classes().iter().enumerate() {
        let p = profile(grid, group.rec_type);
        let nominal = grid_nominal(grid).unwrap();
        let mut taken = 0;
        let mut k = 0;
        while taken < per_class {
            let rec = synth_enf(&p, 64.0, RATE, seed + 1000 * label as u64 + k).unwrap();
            let batch = prepare_frames(&rec, nominal, true, &spec).unwrap();
            for f in batch.frames.chunks_exact(batch.frame_len).take(per_class - taken) {
                data.push(f, label);
                taken += 1;
            }
            k += 1;
        }
    }
    data
}

fn toy_config(group: DataGroupId) -> RawNetConfig {
    let (lr, beta1, beta2) = group.default_optimizer();
    RawNetConfig { lr, beta1, beta2, ..RawNetConfig::reduced(group.num_classes()) }
}

fn argmax_accuracy(net: &RawNet<f32>, data: &LabeledFrames) -> f64 {
    let probs = net.predict_frames(&data.frames).unwrap();
    let hits = probs
        .iter()
        .zip(&data.labels)
        .filter(|(p, &y)| p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 == y)
        .count();
    hits as f64 / data.len() as f64
}

/// The audio-60 toy run: three classes, 60 frames each, reduced network,
/// 30 epochs. Shared by the tests below.
fn toy_audio60() -> &'static (RawNet<f32>, f64, f64) {
    static RUN: OnceLock<(RawNet<f32>, f64, f64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let g = group("audio60");
        let data = toy_frames(g, 60, 1);
        let opts = TrainOptions { seed: 1, epochs: 30, batch_size: 32, patience: 10 };
        let (net, report) = train(g, &data, None, &toy_config(g), &opts).unwrap();
        let train_acc = report.epochs.iter().map(|e| e.train_accuracy).fold(0.0, f64::max);
        let argmax = argmax_accuracy(&net, &data);
        (net, train_acc, argmax)
    })
}

#[test]
fn toy_run_fits_its_training_set() {
    let (_, train_acc, argmax) = toy_audio60();
    assert!(
        *train_acc >= 0.95 && *argmax >= 0.95,
        "best epoch training accuracy {train_acc}, argmax accuracy on training frames {argmax}"
    );
}

#[test]
fn loss_falls_for_every_group() {
    for name in ["audio60", "audio50", "power60", "power50"] {
        let g = group(name);
        let data = toy_frames(g, 20, 7);
        let opts = TrainOptions { seed: 2, epochs: 10, batch_size: 32, patience: 10 };
        let (_, report) = train(g, &data, None, &toy_config(g), &opts).unwrap();
        let (first, tenth) = (report.epochs[0].train_loss, report.epochs[9].train_loss);
        assert!(tenth < first, "{name}: epoch 10 loss {tenth} not below epoch 1 loss {first}");
    }
}

#[test]
fn sixty_hz_recordings_never_get_fifty_hz_letters() {
    let (net, _, _) = toy_audio60();
    let mut models = ModelSet::new();
    models.insert(group("audio60"), net.clone());
    let mut other = build_rawnet(&RawNetConfig::reduced(6)).unwrap();
    other.init(&mut gridloc_core::SeedSplitter::new(3).rng("init"));
    models.insert(group("audio50"), other);
    let opts = ClassifyOptions::default();
    let p = profile(Grid::A, RecType::Audio);
    for seed in 0..50 {
        let rec = synth_enf(&p, 32.0, RATE, 90_000 + seed).unwrap().with_type(RecType::Audio);
        let v = classify_recording(&rec, &models, &opts).unwrap();
        assert_eq!(v.group, group("audio60"), "seed {seed}");
        assert!(matches!(v.final_grid, Grid::A | Grid::N), "seed {seed}: verdict {:?}", v.final_grid);
    }
}

#[test]
fn search_winner_holds_up_against_the_default() {
    let g = group("audio60");
    let data = toy_frames(g, 20, 300);
    let val = toy_frames(g, 10, 600);
    let opts = TrainOptions { seed: 5, epochs: 10, batch_size: 32, patience: 10 };
    let base = toy_config(g);
    let (default_net, _) = train(g, &data, None, &base, &opts).unwrap();
    let default_acc = argmax_accuracy(&default_net, &val);

    let space =
        SearchSpace { filters: (4, 16), gru_units: (16, 64), dense_units: (16, 128), max_epochs: 10, ..SearchSpace::default() };
    let result = nas_search(g, &space, &base, 8, 5, &data, &val, &opts).unwrap();
    assert_eq!(result.trials.len(), 8);
    let best = result.trials[result.best_trial].val_accuracy.unwrap();
    assert!(best >= default_acc - 0.02, "search winner {best}, default {default_acc}");
}
