//! Resolved run configuration: built-in defaults, then a `key = value` file,
//! then command-line overrides.

use std::fmt::Write as _;
use std::path::Path;

use crate::coexpan::{CrossPenalty, ExpandConfig};
use crate::context_index::IndexConfig;
use crate::embedding::TrainConfig;
use crate::error::{Error, Result};
use crate::evalkit::RecallBase;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub threads: usize,
    pub train: TrainConfig,
    pub index: IndexConfig,
    pub expand: ExpandConfig,
    pub ks: Vec<usize>,
    pub recall_base: RecallBase,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            threads: 1,
            train: TrainConfig::default(),
            index: IndexConfig::default(),
            expand: ExpandConfig::default(),
            ks: vec![10, 20, 50],
            recall_base: RecallBase::Full,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value for {key}: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value for {key}: {value:?}"))),
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Apply one `key=value` override.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => {
                self.seed = parse(key, value)?;
                self.train.seed = self.seed;
                self.expand.seed = self.seed;
            }
            "threads" => self.threads = parse(key, value)?,
            "dim" => self.train.dim = parse(key, value)?,
            "window" => self.train.window = parse(key, value)?,
            "negatives" => self.train.negatives = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "lambda" => self.train.lambda = parse(key, value)?,
            "min_count" => self.train.min_count = parse(key, value)?,
            "W" => self.index.radius = parse(key, value)?,
            "gamma" => self.index.flex.gamma = parse(key, value)?,
            "k_gen" => self.index.flex.k_gen = parse(key, value)?,
            "flex" => self.index.apply_flex = parse_bool(key, value)?,
            "t" => self.expand.t = parse(key, value)?,
            "T" => self.expand.iterations = parse(key, value)?,
            "Q" => self.expand.q = parse(key, value)?,
            "no_aux" => self.expand.no_aux = parse_bool(key, value)?,
            "freeze_aux" => self.expand.freeze_aux = parse_bool(key, value)?,
            "penalty" => {
                self.expand.penalty = match value {
                    "all-pairs" => CrossPenalty::AllPairs,
                    "auxiliary-only" => CrossPenalty::AuxiliaryOnly,
                    _ => return Err(Error::Config(format!("invalid value for penalty: {value:?}"))),
                }
            }
            "k_related" => self.expand.aux.k_related = parse(key, value)?,
            "nn" => self.expand.aux.neighbors = parse(key, value)?,
            "aux_cap" => self.expand.aux.max_sets = parse(key, value)?,
            "k" => {
                self.ks = value
                    .split(',')
                    .map(|v| parse(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "recall_base" => {
                self.recall_base = match value {
                    "full" => RecallBase::Full,
                    "capped" => RecallBase::CappedAtK,
                    _ => return Err(Error::Config(format!("invalid value for recall_base: {value:?}"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.expand.validate()?;
        if self.index.radius == 0 {
            return Err(Error::Config("W must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("cutoffs must be at least 1".into()));
        }
        Ok(())
    }

    /// Every key with its resolved value, in a form [`Config::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let x = &self.expand;
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("seed", self.seed.to_string());
        line("threads", self.threads.to_string());
        line("dim", t.dim.to_string());
        line("window", t.window.to_string());
        line("negatives", t.negatives.to_string());
        line("epochs", t.epochs.to_string());
        line("learning_rate", t.learning_rate.to_string());
        line("lambda", t.lambda.to_string());
        line("min_count", t.min_count.to_string());
        line("W", self.index.radius.to_string());
        line("gamma", self.index.flex.gamma.to_string());
        line("k_gen", self.index.flex.k_gen.to_string());
        line("flex", self.index.apply_flex.to_string());
        line("t", x.t.to_string());
        line("T", x.iterations.to_string());
        line("Q", x.q.to_string());
        line("no_aux", x.no_aux.to_string());
        line("freeze_aux", x.freeze_aux.to_string());
        line(
            "penalty",
            match x.penalty {
                CrossPenalty::AllPairs => "all-pairs",
                CrossPenalty::AuxiliaryOnly => "auxiliary-only",
            }
            .into(),
        );
        line("k_related", x.aux.k_related.to_string());
        line("nn", x.aux.neighbors.to_string());
        line("aux_cap", x.aux.max_sets.to_string());
        line(
            "k",
            self.ks.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        );
        line(
            "recall_base",
            match self.recall_base {
                RecallBase::Full => "full",
                RecallBase::CappedAtK => "capped",
            }
            .into(),
        );
        s
    }
}
