use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;

use super::{train, DataGroupId, LabeledFrames, ModelError, RawNetConfig, TrainOptions};
use crate::SeedSplitter;

/// Ranges sampled by [`nas_search`]. Integer ranges are inclusive; the
/// learning rate is drawn log-uniformly, everything else uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub conv_layers: (usize, usize),
    pub filters: (usize, usize),
    pub gru_units: (usize, usize),
    pub dense_units: (usize, usize),
    pub lr: (f64, f64),
    pub beta1: (f64, f64),
    pub beta2: (f64, f64),
    /// Epoch cap per trial.
    pub max_epochs: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            conv_layers: (3, 5),
            filters: (128, 256),
            gru_units: (512, 1024),
            dense_units: (64, 512),
            lr: (1e-4, 1e-2),
            beta1: (0.9, 0.999),
            beta2: (0.99, 0.999),
            max_epochs: 20,
        }
    }
}

impl SearchSpace {
    fn validate(&self) -> Result<(), ModelError> {
        let int_ok = |(lo, hi): (usize, usize)| lo >= 1 && lo <= hi;
        let ok = int_ok(self.conv_layers)
            && int_ok(self.filters)
            && int_ok(self.gru_units)
            && int_ok(self.dense_units)
            && self.lr.0 > 0.0
            && self.lr.0 <= self.lr.1
            && self.beta1.0 <= self.beta1.1
            && self.beta2.0 <= self.beta2.1
            && self.max_epochs >= 1;
        if ok {
            Ok(())
        } else {
            Err(ModelError::ConfigInvalid(format!("malformed search space {self:?}")))
        }
    }

    /// Draws one config; fields outside the space come from `base`.
    pub fn sample<R: Rng>(&self, base: &RawNetConfig, rng: &mut R) -> RawNetConfig {
        let int = |rng: &mut R, (lo, hi): (usize, usize)| rng.gen_range(lo..=hi);
        let real = |rng: &mut R, (lo, hi): (f64, f64)| if lo == hi { lo } else { rng.gen_range(lo..hi) };
        RawNetConfig {
            conv_layers: int(rng, self.conv_layers),
            front_filters: int(rng, self.filters),
            block2_filters: int(rng, self.filters),
            gru_units: int(rng, self.gru_units),
            dense_units: int(rng, self.dense_units),
            lr: real(rng, (self.lr.0.ln(), self.lr.1.ln())).exp(),
            beta1: real(rng, self.beta1),
            beta2: real(rng, self.beta2),
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub config: RawNetConfig,
    pub params: usize,
    /// Best validation accuracy reached, or `None` if training failed.
    pub val_accuracy: Option<f64>,
    pub wall_time_secs: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: RawNetConfig,
    pub best_trial: usize,
    pub trials: Vec<TrialRecord>,
}

impl SearchResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "trial_id,conv_layers,front_filters,block2_filters,gru_units,dense_units,lr,beta1,beta2,params,val_accuracy,wall_time_s,error\n",
        );
        for t in &self.trials {
            let c = &t.config;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{:.3},{}",
                t.trial_id,
                c.conv_layers,
                c.front_filters,
                c.block2_filters,
                c.gru_units,
                c.dense_units,
                c.lr,
                c.beta1,
                c.beta2,
                t.params,
                t.val_accuracy.map(|a| a.to_string()).unwrap_or_default(),
                t.wall_time_secs,
                t.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
        }
        s
    }
}

/// Random search: `budget` configs sampled from `space`, each trained for at
/// most `space.max_epochs` epochs and scored on `val`. The winner has the
/// highest validation accuracy, then the fewest parameters, then the lowest
/// trial id. A failing trial is logged and skipped.
pub fn nas_search(
    group: DataGroupId,
    space: &SearchSpace,
    base: &RawNetConfig,
    budget: usize,
    seed: u64,
    data: &LabeledFrames,
    val: &LabeledFrames,
    opts: &TrainOptions,
) -> Result<SearchResult, ModelError> {
    if budget == 0 {
        return Err(ModelError::EmptyBudget);
    }
    space.validate()?;
    if val.is_empty() {
        return Err(ModelError::ConfigInvalid("search needs a non-empty validation set".into()));
    }
    let seeds = SeedSplitter::new(seed);
    let mut sampler = seeds.rng("sampler");
    let mut trials = Vec::with_capacity(budget);
    for trial_id in 0..budget {
        let config = space.sample(base, &mut sampler);
        let trial_opts = TrainOptions {
            seed: seeds.derive(&format!("trial{trial_id}")),
            epochs: opts.epochs.min(space.max_epochs),
            ..opts.clone()
        };
        let started = Instant::now();
        let outcome = train(group, data, Some(val), &config, &trial_opts);
        let wall_time_secs = started.elapsed().as_secs_f64();
        let params = config.param_count();
        let record = match outcome {
            Ok((_, report)) => TrialRecord {
                trial_id,
                params,
                val_accuracy: report.best().and_then(|e| e.val_accuracy),
                wall_time_secs,
                error: None,
                config,
            },
            Err(e) => {
                log::warn!("{group} trial {trial_id} failed: {e}");
                TrialRecord { trial_id, params, val_accuracy: None, wall_time_secs, error: Some(e.to_string()), config }
            }
        };
        log::info!("{group} trial {trial_id}: val acc {:?}, {} params", record.val_accuracy, record.params);
        trials.push(record);
    }

    let winner = trials
        .iter()
        .filter_map(|t| t.val_accuracy.map(|a| (a, t)))
        .reduce(|best, cand| {
            let better = cand.0 > best.0 || (cand.0 == best.0 && cand.1.params < best.1.params);
            if better {
                cand
            } else {
                best
            }
        })
        .map(|(_, t)| t)
        .ok_or(ModelError::NoSuccessfulTrial)?;
    Ok(SearchResult { best: winner.config.clone(), best_trial: winner.trial_id, trials })
}
