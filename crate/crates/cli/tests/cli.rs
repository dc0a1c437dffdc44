use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gridloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridloc")).args(args).env("RUST_LOG", "info").output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Three 60 Hz grids, four 24 s recordings each (three train, one test).
fn small_corpus(dir: &Path, seed: &str) -> Output {
    gridloc(&[
        "synth", "--grids", "3", "--per-grid", "4", "--test-fraction", "0.25", "--duration", "24", "--seed", seed,
        "--out", p(dir),
    ])
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(gridloc(&["--help"]).status.code(), Some(0));
    assert_eq!(gridloc(&["synth", "--grids", "3"]).status.code(), Some(2));
    assert_eq!(gridloc(&["train", "--data", "d", "--group", "audio70", "--out", "m"]).status.code(), Some(2));
    let bad_alpha = gridloc(&["classify", "--models", "m", "--alpha2", "0.3", "x.wav"]);
    assert_eq!(bad_alpha.status.code(), Some(2));
    assert!(stderr(&bad_alpha).contains("alpha2"));
    assert_eq!(gridloc(&["--config", "/nonexistent/run.cfg", "--print-config"]).status.code(), Some(2));
    assert_eq!(gridloc(&[]).status.code(), Some(2));
}

#[test]
fn print_config_resolves_flags_over_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    fs::write(&file, "alpha1 = 0.6\nseed = 4\nepochs = 7 # short\n").unwrap();
    let o = gridloc(&["--config", p(&file), "--print-config", "classify", "--models", "m", "--alpha1", "0.7", "x.wav"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for line in ["alpha1 = 0.7", "alpha2 = 0.75", "seed = 4", "epochs = 7", "sample_rate = 1000", "frame_len = 15999"] {
        assert!(out.lines().any(|l| l == line), "missing {line:?} in\n{out}");
    }

    fs::write(&file, "alpha1 = 0.6\nbogus = 1\n").unwrap();
    let o = gridloc(&["--config", p(&file), "--print-config"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn synth_is_deterministic_and_prepare_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let (c1, c2) = (dir.path().join("c1"), dir.path().join("c2"));
    let o = small_corpus(&c1, "7");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("seed 7"));
    assert_eq!(small_corpus(&c2, "7").status.code(), Some(0));
    let manifest = fs::read_to_string(c1.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 13);
    assert_eq!(manifest, fs::read_to_string(c2.join("manifest.csv")).unwrap());
    for line in manifest.lines().skip(1) {
        let rel = line.split(',').next().unwrap();
        assert_eq!(fs::read(c1.join(rel)).unwrap(), fs::read(c2.join(rel)).unwrap(), "{rel}");
    }

    let prep = dir.path().join("prep");
    let o = gridloc(&["prepare", "--corpus", p(&c1), "--out", p(&prep)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("train/audio50: no recordings"), "{}", stderr(&o));
    let summary = fs::read_to_string(prep.join("summary.csv")).unwrap();
    assert!(summary.starts_with("split,group,rec_type,nominal,grid,recordings,frames,filter\n"));
    // a 24 s recording holds (24000 - 15999) / 8000 + 1 = 2 frames
    for grid in ["A", "C", "I"] {
        assert!(summary.contains(&format!("train,audio60,audio,60,{grid},3,6,true\n")), "{summary}");
        assert!(summary.contains(&format!("test,audio60,audio,60,{grid},1,2,true\n")), "{summary}");
    }
    assert!(summary.contains("train,audio50,audio,50,B,0,0,true\n"));
    assert!(prep.join("train/audio60/A.egnf").exists());
    assert!(!prep.join("train/audio50").exists());

    let raw = dir.path().join("raw");
    assert_eq!(gridloc(&["prepare", "--corpus", p(&c1), "--out", p(&raw), "--no-filter"]).status.code(), Some(0));
    assert!(fs::read_to_string(raw.join("summary.csv")).unwrap().contains("train,audio60,audio,60,A,3,6,false\n"));
    assert!(fs::read_to_string(raw.join("prepare.cfg")).unwrap().contains("filter = false"));
}

#[test]
fn train_classify_evaluate_round() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert_eq!(small_corpus(&corpus, "3").status.code(), Some(0));
    let prep = dir.path().join("prep");
    assert_eq!(gridloc(&["prepare", "--corpus", p(&corpus), "--out", p(&prep)]).status.code(), Some(0));
    let models = dir.path().join("models");
    let o = gridloc(&[
        "train", "--data", p(&prep), "--group", "audio60", "--out", p(&models), "--reduced", "--epochs", "1", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["audio60.egnw", "audio60.cfg", "audio60.train.csv", "audio60.prep"] {
        assert!(models.join(f).exists(), "{f}");
    }

    let verdicts = dir.path().join("v.csv");
    let o = gridloc(&["classify", "--corpus", p(&corpus), "--models", p(&models), "--out", p(&verdicts)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&verdicts).unwrap();
    let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids.len(), 3);
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
    assert!(ids.iter().all(|id| id.starts_with("test/audio/")));

    let o = gridloc(&["evaluate", "--verdicts", p(&verdicts), "--corpus", p(&corpus)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.starts_with("# alpha1=0.8 alpha2=0.75\ntruth,A,B,C,D,E,F,G,H,I,N\n"), "{report}");
    for subset in ["overall,", "audio,", "power,0,0,n/a"] {
        assert!(report.contains(subset), "{report}");
    }

    // a lone WAV carries no recording type
    let wav = corpus.join(ids[0]);
    let o = gridloc(&["classify", "--models", p(&models), p(&wav)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(p(&wav)) && stderr(&o).contains("recording type unknown"), "{}", stderr(&o));
    let o = gridloc(&["classify", "--models", p(&models), "--rec-type", "audio", "--alpha1", "0.9", p(&wav)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.lines().nth(1).unwrap().ends_with(",0.9,0.75"), "{csv}");
}

#[test]
fn tune_writes_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert_eq!(small_corpus(&corpus, "5").status.code(), Some(0));
    let prep = dir.path().join("prep");
    assert_eq!(gridloc(&["prepare", "--corpus", p(&corpus), "--out", p(&prep)]).status.code(), Some(0));
    let out = dir.path().join("tune");

    let o = gridloc(&["tune", "--data", p(&prep), "--group", "audio60", "--out", p(&out), "--budget", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("budget"));

    let o = gridloc(&[
        "tune", "--data", p(&prep), "--group", "audio60", "--out", p(&out), "--budget", "8", "--reduced", "--max-epochs",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trials = fs::read_to_string(out.join("audio60.trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 9, "{trials}");
    assert!(fs::read_to_string(out.join("audio60.best.cfg")).unwrap().contains("num_classes=3"));
}
