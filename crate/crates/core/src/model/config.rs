use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::ModelError;

/// Time lengths after the front convolution and after each residual block
/// for the standard 15,999-sample input.
pub const REFERENCE_TIME_CHAIN: [usize; 3] = [5333, 593, 66];

/// Output shape of each stage: `[time, channels]` for the convolutional
/// stages, then `[features]` for the GRU, dense and output layers.
pub type ShapeTrace = Vec<Vec<usize>>;

/// Architecture and optimizer hyperparameters for one RawNet.
#[derive(Debug, Clone, PartialEq)]
pub struct RawNetConfig {
    pub input_len: usize,
    pub front_filters: usize,
    pub block2_filters: usize,
    /// Total convolution count on the main path: the front convolution plus
    /// those inside the two residual blocks (3 to 5).
    pub conv_layers: usize,
    pub gru_units: usize,
    pub dense_units: usize,
    pub num_classes: usize,
    pub leaky_slope: f64,
    /// Kernel of every convolution; also the front convolution's stride.
    pub conv_kernel: usize,
    pub pool: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Reject configs whose time axis does not reduce 15,999 -> 5333 -> 593 -> 66.
    pub strict: bool,
}

impl Default for RawNetConfig {
    fn default() -> Self {
        RawNetConfig {
            input_len: 15_999,
            front_filters: 128,
            block2_filters: 256,
            conv_layers: 5,
            gru_units: 1024,
            dense_units: 128,
            num_classes: 3,
            leaky_slope: 0.01,
            conv_kernel: 3,
            pool: 9,
            lr: 7e-4,
            beta1: 0.97,
            beta2: 0.998,
            strict: true,
        }
    }
}

const KEYS: [&str; 14] = [
    "input_len",
    "front_filters",
    "block2_filters",
    "conv_layers",
    "gru_units",
    "dense_units",
    "num_classes",
    "leaky_slope",
    "conv_kernel",
    "pool",
    "lr",
    "beta1",
    "beta2",
    "strict",
];

impl RawNetConfig {
    /// Small network used for desk-scale experiments and tests.
    pub fn reduced(num_classes: usize) -> Self {
        RawNetConfig { front_filters: 8, block2_filters: 16, gru_units: 32, num_classes, ..Default::default() }
    }

    /// Convolutions inside residual blocks 1 and 2.
    pub fn block_convs(&self) -> (usize, usize) {
        let inner = self.conv_layers.saturating_sub(1);
        (inner.div_ceil(2), inner / 2)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::ConfigInvalid(msg));
        for (name, v) in [
            ("input_len", self.input_len),
            ("front_filters", self.front_filters),
            ("block2_filters", self.block2_filters),
            ("gru_units", self.gru_units),
            ("dense_units", self.dense_units),
            ("conv_kernel", self.conv_kernel),
            ("pool", self.pool),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(3..=5).contains(&self.conv_layers) {
            return bad(format!("conv_layers {} outside 3..=5", self.conv_layers));
        }
        if self.num_classes < 2 {
            return bad(format!("num_classes {} < 2", self.num_classes));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return bad(format!("leaky_slope {} outside (0, 1)", self.leaky_slope));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr {} must be positive", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} {b} outside [0, 1)"));
            }
        }
        if self.input_len < self.conv_kernel {
            return bad(format!("input_len {} shorter than kernel {}", self.input_len, self.conv_kernel));
        }
        if self.strict {
            let times = self.time_chain();
            if self.input_len != 15_999 || times != REFERENCE_TIME_CHAIN {
                return bad(format!(
                    "strict shape check: input {} reduces along {:?}, expected 15999 -> {:?}",
                    self.input_len, times, REFERENCE_TIME_CHAIN
                ));
            }
        }
        Ok(())
    }

    fn time_chain(&self) -> [usize; 3] {
        let t1 = self.input_len.div_ceil(self.conv_kernel);
        let t2 = t1.div_ceil(self.pool);
        [t1, t2, t2.div_ceil(self.pool)]
    }

    /// Expected stage shapes, computed from the config alone.
    pub fn shape_trace(&self) -> ShapeTrace {
        let [t1, t2, t3] = self.time_chain();
        vec![
            vec![t1, self.front_filters],
            vec![t2, self.front_filters],
            vec![t3, self.block2_filters],
            vec![self.gru_units],
            vec![self.dense_units],
            vec![self.num_classes],
        ]
    }

    /// Trainable parameter count.
    pub fn param_count(&self) -> usize {
        let k = self.conv_kernel;
        let (f1, f2) = (self.front_filters, self.block2_filters);
        let block = |ci: usize, co: usize, convs: usize| {
            let first = ci * co * k + co + 2 * co;
            let rest = (convs - 1) * (co * co * k + co + 2 * co);
            let proj = if ci != co { ci * co + co } else { 0 };
            first + rest + proj
        };
        let (b1, b2) = self.block_convs();
        let h = self.gru_units;
        f1 * k + f1 + 2 * f1
            + block(f1, f1, b1)
            + block(f1, f2, b2)
            + 3 * h * f2 + 3 * h * h + 6 * h
            + h * self.dense_units + self.dense_units
            + self.dense_units * self.num_classes + self.num_classes
    }

    /// Flat `key=value` text, one key per line in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key}={}", self.value_of(key));
        }
        s
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "input_len" => self.input_len.to_string(),
            "front_filters" => self.front_filters.to_string(),
            "block2_filters" => self.block2_filters.to_string(),
            "conv_layers" => self.conv_layers.to_string(),
            "gru_units" => self.gru_units.to_string(),
            "dense_units" => self.dense_units.to_string(),
            "num_classes" => self.num_classes.to_string(),
            "leaky_slope" => self.leaky_slope.to_string(),
            "conv_kernel" => self.conv_kernel.to_string(),
            "pool" => self.pool.to_string(),
            "lr" => self.lr.to_string(),
            "beta1" => self.beta1.to_string(),
            "beta2" => self.beta2.to_string(),
            "strict" => self.strict.to_string(),
            _ => unreachable!("unknown config key {key}"),
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn p<T: FromStr>(v: &str) -> Result<T, String> {
            v.trim().parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        match key.trim() {
            "input_len" => self.input_len = p(value)?,
            "front_filters" => self.front_filters = p(value)?,
            "block2_filters" => self.block2_filters = p(value)?,
            "conv_layers" => self.conv_layers = p(value)?,
            "gru_units" => self.gru_units = p(value)?,
            "dense_units" => self.dense_units = p(value)?,
            "num_classes" => self.num_classes = p(value)?,
            "leaky_slope" => self.leaky_slope = p(value)?,
            "conv_kernel" => self.conv_kernel = p(value)?,
            "pool" => self.pool = p(value)?,
            "lr" => self.lr = p(value)?,
            "beta1" => self.beta1 = p(value)?,
            "beta2" => self.beta2 = p(value)?,
            "strict" => self.strict = p(value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Parses `key=value` lines over the defaults. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut cfg = RawNetConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::ConfigParse { line: i + 1, msg: format!("expected key=value, got {line:?}") })?;
            cfg.set(k, v).map_err(|msg| ModelError::ConfigParse { line: i + 1, msg })?;
        }
        Ok(cfg)
    }

    /// First eight bytes of the SHA-256 of [`Self::to_text`].
    pub fn hash(&self) -> u64 {
        let d = Sha256::digest(self.to_text().as_bytes());
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }
}
