//! Flat `key=value` configuration.
//!
//! Blank lines and lines starting with `#` are skipped. Later assignments
//! of a key override earlier ones, so command-line `--set key=value` pairs
//! applied after a file win.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agglo::Linkage;
use crate::distance::{Normalization, NullPolicy};
use crate::error::{Error, Result};
use crate::recagglo::RecAggloParams;
use crate::schema::AttributeCategory;
use crate::synthgen::{AttributeProfile, GeneratorConfig};

/// Parses `key=value` lines.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(split_pair(line).map_err(|m| Error::parse(i as u64 + 1, m))?);
    }
    Ok(out)
}

/// Splits one `key=value` assignment.
pub fn split_pair(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    Ok((k.to_owned(), v.trim().to_owned()))
}

pub fn load_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_pairs(&text)
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(key, s))
        .collect()
}

fn bool_value(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{v}` for `{key}`"))),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum WeightStrategy {
    #[default]
    Unit,
    /// Cardinality-driven weights computed on the clustered data.
    Cardinality,
    /// Label-driven weights trained on `train_input`.
    Label,
    /// Weights read from `weights_file`.
    File,
}

impl WeightStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightStrategy::Unit => "unit",
            WeightStrategy::Cardinality => "cardinality",
            WeightStrategy::Label => "label",
            WeightStrategy::File => "file",
        }
    }
}

impl FromStr for WeightStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(WeightStrategy::Unit),
            "cardinality" => Ok(WeightStrategy::Cardinality),
            "label" => Ok(WeightStrategy::Label),
            "file" => Ok(WeightStrategy::File),
            _ => Err(Error::Config(format!(
                "unknown weight strategy `{s}` (expected unit, cardinality, label or file)"
            ))),
        }
    }
}

/// Unlabelled window and labelled background, in days relative to
/// `start` (epoch seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    /// Start of the unlabelled window.
    pub start: i64,
    /// Length of the unlabelled window.
    pub span_days: f64,
    /// Length of the labelled fraud background.
    pub background_days: f64,
    /// Age at which labels become known; the background ends this long
    /// before the unlabelled window ends.
    pub label_delay_days: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            start: 0,
            span_days: 1.0,
            background_days: 60.0,
            label_delay_days: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    /// Attribute schema file; the built-in order layout when absent.
    pub schema: Option<PathBuf>,
    pub null_marker: String,
    pub weights: WeightStrategy,
    pub weights_file: Option<PathBuf>,
    pub train_input: Option<PathBuf>,
    pub null_policy: NullPolicy,
    pub normalization: Normalization,
    pub params: RecAggloParams,
    pub window: Option<WindowSpec>,
    pub detect: bool,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub grid_rho_s: Vec<f64>,
    pub grid_rho_mc: Vec<f64>,
    pub bench_sizes: Vec<usize>,
    pub bench_repeats: usize,
    /// Records of the synthetic benchmark source when no input is given.
    pub bench_synthetic_records: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: Vec::new(),
            schema: None,
            null_marker: String::new(),
            weights: WeightStrategy::Unit,
            weights_file: None,
            train_input: None,
            null_policy: NullPolicy::Mismatch,
            normalization: Normalization::AttributeCount,
            params: RecAggloParams::default(),
            window: None,
            detect: true,
            output_dir: None,
            workers: 0,
            grid_rho_s: vec![0.25, 0.5, 1.0, 2.0],
            grid_rho_mc: vec![1.01, 1.5, 2.0, 3.0, 4.0, 6.0, 10.0],
            bench_sizes: vec![10_000, 20_000, 40_000],
            bench_repeats: 5,
            bench_synthetic_records: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        PipelineConfig::from_pairs(&load_pairs(path)?)
    }

    fn window_mut(&mut self) -> &mut WindowSpec {
        self.window.get_or_insert_with(WindowSpec::default)
    }

    /// Applies one assignment.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let path = || (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "input" => {
                self.inputs = v
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "schema" => self.schema = path(),
            "null_marker" => self.null_marker = v.to_owned(),
            "weights" => self.weights = v.parse()?,
            "weights_file" => self.weights_file = path(),
            "train_input" => self.train_input = path(),
            "null_policy" => {
                self.null_policy = match v {
                    "mismatch" => NullPolicy::Mismatch,
                    "ignore" => NullPolicy::Ignore,
                    _ => return Err(Error::Config(format!("unknown null policy `{v}`"))),
                }
            }
            "normalization" => {
                self.normalization = match v {
                    "attribute_count" => Normalization::AttributeCount,
                    "weight_sum" => Normalization::WeightSum,
                    _ => return Err(Error::Config(format!("unknown normalization `{v}`"))),
                }
            }
            "delta_a" => self.params.delta_a = value(key, v)?,
            "d_max" => self.params.d_max = value(key, v)?,
            "rho_s" => self.params.rho_s = value(key, v)?,
            "rho_mc" => self.params.rho_mc = value(key, v)?,
            "seed" => self.params.seed = value(key, v)?,
            "max_recursion_guard" => self.params.max_recursion_guard = value(key, v)?,
            "linkage" => self.params.linkage = v.parse::<Linkage>()?,
            "window_start" => self.window_mut().start = value(key, v)?,
            "window_days" => self.window_mut().span_days = value(key, v)?,
            "background_days" => self.window_mut().background_days = value(key, v)?,
            "label_delay_days" => self.window_mut().label_delay_days = value(key, v)?,
            "window" => match v {
                "off" | "none" => self.window = None,
                _ => {
                    return Err(Error::Config(format!(
                        "`window` only accepts `off`, got `{v}`"
                    )))
                }
            },
            "detect" => self.detect = bool_value(key, v)?,
            "output_dir" => self.output_dir = path(),
            "workers" => self.workers = value(key, v)?,
            "grid_rho_s" => self.grid_rho_s = list(key, v)?,
            "grid_rho_mc" => self.grid_rho_mc = list(key, v)?,
            "bench_sizes" => self.bench_sizes = list(key, v)?,
            "bench_repeats" => self.bench_repeats = value(key, v)?,
            "bench_synthetic_records" => self.bench_synthetic_records = value(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Checks cross-key constraints.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        match self.weights {
            WeightStrategy::File if self.weights_file.is_none() => {
                return Err(Error::Config("weights=file needs weights_file".into()));
            }
            WeightStrategy::Label if self.train_input.is_none() => {
                return Err(Error::Config("weights=label needs train_input".into()));
            }
            _ => {}
        }
        if let Some(w) = &self.window {
            let ok = w.span_days > 0.0 && w.background_days > 0.0 && w.label_delay_days >= 0.0;
            if !ok {
                return Err(Error::Config("window lengths must be positive".into()));
            }
            if w.label_delay_days < w.span_days {
                return Err(Error::Config(format!(
                    "label_delay_days ({}) shorter than window_days ({}) would overlap the labelled \
                     background with the unlabelled window",
                    w.label_delay_days, w.span_days
                )));
            }
        }
        Ok(())
    }

    /// Effective configuration as `key=value` lines.
    pub fn to_text(&self) -> String {
        let p = |o: &Option<PathBuf>| {
            o.as_ref()
                .map_or(String::new(), |p| p.display().to_string())
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv(
            "input",
            join(&self.inputs.iter().map(|p| p.display()).collect::<Vec<_>>()),
        );
        kv("schema", p(&self.schema));
        kv("null_marker", self.null_marker.clone());
        kv("weights", self.weights.as_str().into());
        kv("weights_file", p(&self.weights_file));
        kv("train_input", p(&self.train_input));
        kv(
            "null_policy",
            match self.null_policy {
                NullPolicy::Mismatch => "mismatch",
                NullPolicy::Ignore => "ignore",
            }
            .into(),
        );
        kv(
            "normalization",
            match self.normalization {
                Normalization::AttributeCount => "attribute_count",
                Normalization::WeightSum => "weight_sum",
            }
            .into(),
        );
        kv("delta_a", self.params.delta_a.to_string());
        kv("d_max", self.params.d_max.to_string());
        kv("rho_s", self.params.rho_s.to_string());
        kv("rho_mc", self.params.rho_mc.to_string());
        kv("seed", self.params.seed.to_string());
        kv(
            "max_recursion_guard",
            self.params.max_recursion_guard.to_string(),
        );
        kv("linkage", self.params.linkage.as_str().into());
        match &self.window {
            None => kv("window", "off".into()),
            Some(w) => {
                kv("window_start", w.start.to_string());
                kv("window_days", w.span_days.to_string());
                kv("background_days", w.background_days.to_string());
                kv("label_delay_days", w.label_delay_days.to_string());
            }
        }
        kv("detect", self.detect.to_string());
        kv("output_dir", p(&self.output_dir));
        kv("workers", self.workers.to_string());
        kv("grid_rho_s", join(&self.grid_rho_s));
        kv("grid_rho_mc", join(&self.grid_rho_mc));
        kv("bench_sizes", join(&self.bench_sizes));
        kv("bench_repeats", self.bench_repeats.to_string());
        kv(
            "bench_synthetic_records",
            self.bench_synthetic_records.to_string(),
        );
        s
    }
}

/// Applies one generator assignment. Overlaps are set per category with
/// `overlap_<category>` and `repeat_overlap_<category>`; attribute pools
/// with `cardinality_<attribute>` (`unbounded` for fresh values) and
/// `null_<attribute>`.
pub fn set_generator_key(cfg: &mut GeneratorConfig, key: &str, v: &str) -> Result<()> {
    match key {
        "seed" => cfg.seed = value(key, v)?,
        "n_legit" => cfg.n_legit = value(key, v)?,
        "n_fraud" => cfg.n_fraud = value(key, v)?,
        "n_campaigns" => cfg.n_campaigns = value(key, v)?,
        "campaign_min" => cfg.campaign_size_range.0 = value(key, v)?,
        "campaign_max" => cfg.campaign_size_range.1 = value(key, v)?,
        "legit_repeat_prob" => cfg.legit_repeat_prob = value(key, v)?,
        "repeat_customer_prob" => cfg.repeat_customer_prob = value(key, v)?,
        "takeover_prob" => cfg.takeover_prob = value(key, v)?,
        "start" => cfg.start = value(key, v)?,
        "span_days" => cfg.span_days = value(key, v)?,
        "campaign_days" => cfg.campaign_days = value(key, v)?,
        _ => {
            if let Some(cat) = key.strip_prefix("repeat_overlap_") {
                let cat: AttributeCategory = cat.parse()?;
                cfg.repeat_customer_overlap[cat as usize] = value(key, v)?;
            } else if let Some(cat) = key.strip_prefix("overlap_") {
                let cat: AttributeCategory = cat.parse()?;
                cfg.set_overlap(cat, value(key, v)?);
            } else if let Some(id) = key.strip_prefix("cardinality_") {
                let mut prof = cfg.profile(id);
                prof.cardinality = match v {
                    "unbounded" => None,
                    _ => Some(value(key, v)?),
                };
                cfg.profiles.insert(id.to_owned(), prof);
            } else if let Some(id) = key.strip_prefix("null_") {
                let prof = AttributeProfile {
                    null_prob: value(key, v)?,
                    ..cfg.profile(id)
                };
                cfg.profiles.insert(id.to_owned(), prof);
            } else {
                return Err(Error::Config(format!("unknown generator key `{key}`")));
            }
        }
    }
    Ok(())
}
