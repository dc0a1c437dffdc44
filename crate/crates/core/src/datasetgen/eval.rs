use std::collections::HashMap;
use std::fmt::Write as _;

use super::{CorpusManifest, DatasetError};
use crate::decision::VerdictRecord;
use crate::signal::{Grid, RecType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    fn add(&mut self, hit: bool) {
        self.total += 1;
        self.correct += usize::from(hit);
    }
}

/// Confusion matrix over A..I and N (rows truth, columns prediction) with
/// accuracy overall and per recording type.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub confusion: [[usize; 10]; 10],
    pub overall: Accuracy,
    pub audio: Accuracy,
    pub power: Accuracy,
}

impl Evaluation {
    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("truth");
        for g in Grid::ALL {
            let _ = write!(s, ",{g}");
        }
        s.push('\n');
        for (g, row) in Grid::ALL.iter().zip(&self.confusion) {
            let _ = write!(s, "{g}");
            for c in row {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
        s
    }

    /// Accuracy lines: overall, audio only, power only.
    pub fn accuracy_csv(&self) -> String {
        let mut s = String::from("subset,correct,total,accuracy\n");
        for (name, acc) in [("overall", self.overall), ("audio", self.audio), ("power", self.power)] {
            let pct = acc.fraction().map(|f| format!("{:.2}%", 100.0 * f)).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(s, "{name},{},{},{pct}", acc.correct, acc.total);
        }
        s
    }
}

/// Scores verdicts against the manifest's ground truth. Manifest entries
/// without a verdict are ignored.
pub fn evaluate(verdicts: &[VerdictRecord], manifest: &CorpusManifest) -> Result<Evaluation, DatasetError> {
    let truth: HashMap<&str, (Grid, RecType)> =
        manifest.entries.iter().map(|e| (e.path.as_str(), (e.grid, e.rec_type))).collect();
    let mut ev = Evaluation::default();
    for v in verdicts {
        let &(grid, rec_type) =
            truth.get(v.source_id.as_str()).ok_or_else(|| DatasetError::UnknownSource(v.source_id.clone()))?;
        ev.confusion[grid.index()][v.final_grid.index()] += 1;
        let hit = grid == v.final_grid;
        ev.overall.add(hit);
        match rec_type {
            RecType::Audio => ev.audio.add(hit),
            RecType::Power => ev.power.add(hit),
            RecType::Unknown => {}
        }
    }
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasetgen::ManifestEntry;

    fn entry(path: &str, grid: Grid, rec_type: RecType) -> ManifestEntry {
        ManifestEntry { path: path.into(), grid, rec_type, nominal: None, duration_s: 16.0, seed: None }
    }

    fn verdict(source: &str, final_grid: Grid) -> VerdictRecord {
        VerdictRecord {
            source_id: source.into(),
            rec_type: RecType::Audio,
            nominal: None,
            final_grid,
            top_fraction: 1.0,
            grid_counts: [0; 9],
            none_count: 0,
            thresholds: Default::default(),
        }
    }

    #[test]
    fn all_correct_is_diagonal() {
        let m = CorpusManifest {
            entries: vec![entry("a", Grid::A, RecType::Audio), entry("b", Grid::H, RecType::Power), entry("n", Grid::N, RecType::Power)],
        };
        let ev = evaluate(&[verdict("a", Grid::A), verdict("b", Grid::H), verdict("n", Grid::N)], &m).unwrap();
        for (i, row) in ev.confusion.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let expect = usize::from(i == j && [0, 7, 9].contains(&i));
                assert_eq!(c, expect);
            }
        }
        assert_eq!(ev.overall.fraction(), Some(1.0));
        assert_eq!(ev.audio, Accuracy { correct: 1, total: 1 });
        assert_eq!(ev.power, Accuracy { correct: 2, total: 2 });
        assert!(ev.accuracy_csv().contains("overall,3,3,100.00%"));
    }

    #[test]
    fn n_only_and_errors() {
        let m = CorpusManifest { entries: vec![entry("n", Grid::N, RecType::Audio)] };
        let ev = evaluate(&[verdict("n", Grid::N)], &m).unwrap();
        let total: usize = ev.confusion.iter().flatten().sum();
        assert_eq!((total, ev.confusion[9][9]), (1, 1));
        assert_eq!(ev.power.fraction(), None);
        assert!(ev.accuracy_csv().contains("power,0,0,n/a"));
        assert!(ev.confusion_csv().starts_with("truth,A,B,C,D,E,F,G,H,I,N\n"));
        assert!(matches!(evaluate(&[verdict("x", Grid::A)], &m), Err(DatasetError::UnknownSource(s)) if s == "x"));
    }
}
