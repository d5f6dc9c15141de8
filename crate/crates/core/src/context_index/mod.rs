//! Skip-gram context features around entity mentions.
//!
//! Building an index extracts one fixed-radius skip-gram per mention,
//! optionally rewrites each distinct skip-gram into flexgrams, aggregates the
//! per-entity counts Φ and derives TF-IDF weights. The feature dictionary is
//! frozen once built.

mod flex;
mod matrix;
mod skipgram;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use flex::{breakdowns, flex_transform, pmi_split, FlexOutcome, FlexParams, SkipGramCounts};
pub use matrix::{tfidf, CooccurrenceMatrix, FeatureId, FeatureWeights};
pub use skipgram::{extract_skipgrams, SkipGram, Sym, SymbolTable, BOUNDARY, WILDCARD};

use crate::corpus::{Corpus, EntityId};
use crate::error::{Error, Result};

pub const INDEX_FORMAT: &str = "coexpand-index";
pub const INDEX_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub radius: usize,
    pub flex: FlexParams,
    /// `false` keeps the raw fixed-radius skip-grams.
    pub apply_flex: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            radius: 3,
            flex: FlexParams::default(),
            apply_flex: true,
        }
    }
}

impl Serialize for FlexParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.gamma, self.k_gen).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FlexParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (gamma, k_gen) = <(f64, f64)>::deserialize(d)?;
        Ok(FlexParams { gamma, k_gen })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexStats {
    pub mentions: usize,
    pub distinct_skipgrams: usize,
    pub split_skipgrams: usize,
}

#[derive(Clone, Debug)]
pub struct ContextIndex {
    config: IndexConfig,
    symbols: SymbolTable,
    features: Vec<SkipGram>,
    matrix: CooccurrenceMatrix,
    weights: FeatureWeights,
    stats: IndexStats,
}

impl ContextIndex {
    pub fn build(corpus: &Corpus, config: &IndexConfig) -> Result<Self> {
        if config.radius == 0 {
            return Err(Error::Config("skip-gram radius must be at least 1".into()));
        }
        let n_entities = corpus.catalog().len();
        let mut symbols = SymbolTable::default();
        let occurrences = extract_skipgrams(corpus, &mut symbols, config.radius);
        let counts =
            SkipGramCounts::from_occurrences(config.radius, occurrences.iter().map(|(_, s)| s));

        let mut decided: HashMap<&SkipGram, Vec<FeatureId>> = HashMap::new();
        let mut dictionary: HashMap<SkipGram, FeatureId> = HashMap::new();
        let mut features: Vec<SkipGram> = Vec::new();
        let mut cells = Vec::with_capacity(occurrences.len());
        let mut split_skipgrams = 0;
        for (entity, sg) in &occurrences {
            let ids = decided.entry(sg).or_insert_with(|| {
                let mapped = if config.apply_flex {
                    let outcome = flex_transform(&counts, sg, config.flex);
                    if matches!(outcome, FlexOutcome::Split { .. }) {
                        split_skipgrams += 1;
                    }
                    outcome.features(sg)
                } else {
                    vec![sg.clone()]
                };
                mapped
                    .into_iter()
                    .map(|f| {
                        *dictionary.entry(f.clone()).or_insert_with(|| {
                            features.push(f);
                            (features.len() - 1) as FeatureId
                        })
                    })
                    .collect()
            });
            for &c in ids.iter() {
                cells.push((*entity, c, 1));
            }
        }
        let stats = IndexStats {
            mentions: occurrences.len(),
            distinct_skipgrams: decided.len(),
            split_skipgrams,
        };

        let matrix = CooccurrenceMatrix::from_cells(n_entities, features.len(), cells);
        if n_entities == 1 {
            return Err(Error::Config(
                "TF-IDF weighting needs at least two entities in the corpus".into(),
            ));
        }
        let weights = tfidf(&matrix);
        Ok(ContextIndex {
            config: config.clone(),
            symbols,
            features,
            matrix,
            weights,
            stats,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn stats(&self) -> &IndexStats {
        &self.stats
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn features(&self) -> &[SkipGram] {
        &self.features
    }

    pub fn feature(&self, c: FeatureId) -> &SkipGram {
        &self.features[c as usize]
    }

    pub fn feature_text(&self, c: FeatureId) -> String {
        self.feature(c).display(&self.symbols)
    }

    /// Look up a feature by its tokens (`"*"` for a wildcard, `"⟨B⟩"` for the boundary).
    pub fn find_feature(&self, left: &[&str], right: &[&str]) -> Option<FeatureId> {
        let lookup = |t: &&str| -> Option<Sym> {
            match *t {
                "*" => Some(WILDCARD),
                "⟨B⟩" => Some(BOUNDARY),
                other => self.symbols.get(other),
            }
        };
        let l: Option<Vec<Sym>> = left.iter().map(lookup).collect();
        let r: Option<Vec<Sym>> = right.iter().map(lookup).collect();
        let target = SkipGram::new(&l?, &r?);
        self.features
            .iter()
            .position(|f| *f == target)
            .map(|i| i as FeatureId)
    }

    pub fn matrix(&self) -> &CooccurrenceMatrix {
        &self.matrix
    }

    pub fn weights(&self) -> &FeatureWeights {
        &self.weights
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let cells: Vec<(u32, u32, u32)> = self.matrix.cells().map(|(e, c, n)| (e.0, c, n)).collect();
        let weights = self
            .matrix
            .cells()
            .map(|(e, c, _)| self.weights.get(e, c))
            .collect();
        let file = IndexFile {
            format: INDEX_FORMAT.to_owned(),
            version: INDEX_VERSION,
            config: self.config.clone(),
            stats: self.stats.clone(),
            n_entities: self.matrix.n_entities(),
            symbols: self.symbols.names().to_vec(),
            features: self.features.iter().map(|f| f.syms().to_vec()).collect(),
            cells,
            weights,
        };
        serde_json::to_writer(out, &file)
            .map_err(|e| Error::Invariant(format!("index serialization failed: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(f);
        self.write_json(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let file: IndexFile =
            serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Parse {
                source_name: path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
        if file.format != INDEX_FORMAT || file.version != INDEX_VERSION {
            return Err(Error::Parse {
                source_name: path.display().to_string(),
                line: 1,
                message: format!(
                    "unsupported index format {} v{} (expected {INDEX_FORMAT} v{INDEX_VERSION})",
                    file.format, file.version
                ),
            });
        }
        Self::from_file(file).map_err(|message| Error::Parse {
            source_name: path.display().to_string(),
            line: 1,
            message,
        })
    }

    fn from_file(file: IndexFile) -> std::result::Result<Self, String> {
        if file.cells.len() != file.weights.len() {
            return Err("cell and weight counts differ".into());
        }
        let n_features = file.features.len();
        if file
            .cells
            .iter()
            .any(|&(e, c, _)| e as usize >= file.n_entities || c as usize >= n_features)
        {
            return Err("cell out of range".into());
        }
        let matrix = CooccurrenceMatrix::from_cells(
            file.n_entities,
            n_features,
            file.cells.iter().map(|&(e, c, n)| (EntityId(e), c, n)),
        );
        let mut rows: Vec<Vec<(FeatureId, f64)>> = vec![Vec::new(); file.n_entities];
        for (&(e, c, _), &w) in file.cells.iter().zip(&file.weights) {
            rows[e as usize].push((c, w));
        }
        let weights = FeatureWeights::from_rows(rows, n_features);
        Ok(ContextIndex {
            config: file.config,
            symbols: SymbolTable::from_names(file.symbols),
            features: file.features.into_iter().map(SkipGram::from_flat).collect(),
            matrix,
            weights,
            stats: file.stats,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    config: IndexConfig,
    stats: IndexStats,
    n_entities: usize,
    symbols: Vec<String>,
    features: Vec<Vec<Sym>>,
    cells: Vec<(u32, u32, u32)>,
    weights: Vec<f64>,
}
