//! Static word/entity embeddings trained on local (window) and global
//! (document) contexts, plus the retrieval helpers built on them.

mod centroid;
pub mod sgns;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use centroid::{CentroidMode, CentroidProvider};

use crate::corpus::{joined_name, Corpus, EntityCatalog, EntityId, TokenId};
use crate::error::{Error, Result};
use crate::rng::fork_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    /// Local context radius `h`.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight λ of the global (document) loss.
    pub lambda: f64,
    /// Words rarer than this are dropped; entities are always kept.
    pub min_count: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            lambda: 1.5,
            min_count: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dim must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Entity(EntityId),
    Word(TokenId),
}

/// Row-major embedding table. Rows `0..n_entities` are the catalog entities in
/// id order; word rows follow.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    names: Vec<String>,
    terms: Vec<Term>,
    n_entities: usize,
    input: Vec<f64>,
    output: Vec<f64>,
    docs: Vec<f64>,
}

/// Which rows take part in a nearest-neighbour scan.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Scope {
    All,
    Entities,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn n_entities(&self) -> usize {
        self.n_entities
    }

    pub fn name(&self, row: usize) -> &str {
        &self.names[row]
    }

    pub fn term(&self, row: usize) -> Term {
        self.terms[row]
    }

    pub fn input(&self, row: usize) -> &[f64] {
        &self.input[row * self.dim..(row + 1) * self.dim]
    }

    /// Output (context) vectors; empty rows when the table was read from a file.
    pub fn output(&self, row: usize) -> Option<&[f64]> {
        self.output.get(row * self.dim..(row + 1) * self.dim)
    }

    pub fn doc_vector(&self, doc: usize) -> Option<&[f64]> {
        self.docs.get(doc * self.dim..(doc + 1) * self.dim)
    }

    pub fn entity_vector(&self, entity: EntityId) -> Result<&[f64]> {
        if entity.index() < self.n_entities {
            Ok(self.input(entity.index()))
        } else {
            Err(Error::NotFound(format!("no vector for entity {entity}")))
        }
    }

    /// Build a table directly from entity vectors (row i = entity i).
    pub fn from_entity_vectors(names: Vec<String>, vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors.first().map_or(1, Vec::len);
        let mut input = Vec::with_capacity(dim * vectors.len());
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            input.extend_from_slice(v);
        }
        let n = vectors.len();
        Ok(EmbeddingTable {
            dim,
            terms: (0..n as u32).map(|i| Term::Entity(EntityId(i))).collect(),
            names,
            n_entities: n,
            input,
            output: Vec::new(),
            docs: Vec::new(),
        })
    }

    /// Top-`k` rows by cosine to the entity's input vector, excluding the
    /// entity itself and `exclude`. Ties go to the lower row.
    pub fn related_terms(
        &self,
        entity: EntityId,
        k: usize,
        exclude: &HashSet<EntityId>,
        scope: Scope,
    ) -> Result<Vec<(Term, f64)>> {
        let query = self.entity_vector(entity)?;
        let rows = match scope {
            Scope::All => self.len(),
            Scope::Entities => self.n_entities,
        };
        let mut scored: Vec<(usize, f64)> = (0..rows)
            .filter(|&r| match self.terms[r] {
                Term::Entity(e) => e != entity && !exclude.contains(&e),
                Term::Word(_) => true,
            })
            .map(|r| (r, cosine_unchecked(query, self.input(r))))
            .collect();
        sort_by_score(&mut scored);
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(r, c)| (self.terms[r], c))
            .collect())
    }

    /// The `n` entities nearest to an arbitrary point by cosine.
    pub fn nearest_entities(
        &self,
        point: &[f64],
        n: usize,
        exclude: &HashSet<EntityId>,
    ) -> Vec<(EntityId, f64)> {
        let mut scored: Vec<(usize, f64)> = (0..self.n_entities)
            .filter(|&r| !exclude.contains(&EntityId(r as u32)))
            .map(|r| (r, cosine_unchecked(point, self.input(r))))
            .collect();
        sort_by_score(&mut scored);
        scored.truncate(n);
        scored
            .into_iter()
            .map(|(r, c)| (EntityId(r as u32), c))
            .collect()
    }

    /// Text format: header `count dim`, then `name v1 .. vdim` per row.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for row in 0..self.len() {
            write!(out, "{}", self.names[row])?;
            for x in self.input(row) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_text(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Read a table written by [`EmbeddingTable::save`]. Every catalog entity
    /// must be present (matched by its joined name, first row wins).
    pub fn load(path: impl AsRef<Path>, catalog: &EntityCatalog) -> Result<Self> {
        let path = path.as_ref();
        let rows = read_vector_file(path)?;
        let dim = rows.dim;
        let mut by_name = std::collections::HashMap::new();
        for (i, (name, _)) in rows.rows.iter().enumerate() {
            by_name.entry(name.as_str()).or_insert(i);
        }
        let mut missing = Vec::new();
        let mut used = vec![false; rows.rows.len()];
        let mut names = Vec::with_capacity(rows.rows.len());
        let mut terms = Vec::with_capacity(rows.rows.len());
        let mut input = Vec::with_capacity(rows.rows.len() * dim);
        for e in catalog.ids() {
            let key = joined_name(catalog.name(e));
            match by_name.get(key.as_str()) {
                Some(&i) => {
                    used[i] = true;
                    names.push(key);
                    terms.push(Term::Entity(e));
                    input.extend_from_slice(&rows.rows[i].1);
                }
                None => missing.push(catalog.name(e).to_owned()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::NotFound(format!(
                "{}: no vectors for entities: {}",
                path.display(),
                missing.join(", ")
            )));
        }
        let mut word_id = 0u32;
        for (i, (name, v)) in rows.rows.into_iter().enumerate() {
            if used[i] {
                continue;
            }
            names.push(name);
            terms.push(Term::Word(TokenId(word_id)));
            word_id += 1;
            input.extend_from_slice(&v);
        }
        Ok(EmbeddingTable {
            dim,
            names,
            terms,
            n_entities: catalog.len(),
            input,
            output: Vec::new(),
            docs: Vec::new(),
        })
    }
}

pub(crate) struct VectorFile {
    pub dim: usize,
    pub rows: Vec<(String, Vec<f64>)>,
}

pub(crate) fn read_vector_file(path: &Path) -> Result<VectorFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let source_name = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.clone(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| parse_err(1, "missing `count dim` header".into()))?;
    let mut parts = header.split_whitespace();
    let (count, dim) = match (
        parts.next().and_then(|s| s.parse::<usize>().ok()),
        parts.next().and_then(|s| s.parse::<usize>().ok()),
    ) {
        (Some(c), Some(d)) if d > 0 => (c, d),
        _ => return Err(parse_err(1, format!("bad header `{header}`"))),
    };
    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let name = fields.next().unwrap_or_default().to_owned();
        let v = fields
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(i + 2, e.to_string()))?;
        if v.len() != dim {
            return Err(parse_err(
                i + 2,
                format!("expected {dim} components, found {}", v.len()),
            ));
        }
        rows.push((name, v));
    }
    if rows.len() != count {
        return Err(parse_err(
            1,
            format!("header announces {count} rows, file has {}", rows.len()),
        ));
    }
    Ok(VectorFile { dim, rows })
}

fn sort_by_score(scored: &mut [(usize, f64)]) {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(cosine_unchecked(x, y))
}

pub(crate) fn cosine_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        return 0.0;
    }
    (xy / (xx.sqrt() * yy.sqrt())).clamp(-1.0, 1.0)
}

/// Training sequences: each document with mention spans collapsed into a
/// single entity row and rare words dropped.
struct TrainingData {
    names: Vec<String>,
    terms: Vec<Term>,
    n_entities: usize,
    sequences: Vec<Vec<usize>>,
    counts: Vec<u64>,
}

fn prepare(corpus: &Corpus, min_count: u64) -> TrainingData {
    let catalog = corpus.catalog();
    let vocab = corpus.vocab();
    let n_entities = catalog.len();
    let mut names: Vec<String> = catalog.ids().map(|e| joined_name(catalog.name(e))).collect();
    let mut terms: Vec<Term> = catalog.ids().map(Term::Entity).collect();
    // Only tokens outside mention spans reach the training sequences.
    let mut outside = vec![0u64; vocab.len()];
    for doc in corpus.documents() {
        let mut mentions = doc.mentions.iter().peekable();
        let mut i = 0;
        while i < doc.tokens.len() {
            if let Some(m) = mentions.next_if(|m| m.start == i) {
                i = m.end;
                continue;
            }
            if let Some(id) = vocab.id(&doc.tokens[i]) {
                outside[id.index()] += 1;
            }
            i += 1;
        }
    }
    let mut word_row = vec![usize::MAX; vocab.len()];
    for (id, token, _) in vocab.iter() {
        if outside[id.index()] >= min_count.max(1) {
            word_row[id.index()] = names.len();
            names.push(token.to_owned());
            terms.push(Term::Word(id));
        }
    }

    let mut counts = vec![0u64; names.len()];
    let mut sequences = Vec::with_capacity(corpus.documents().len());
    for doc in corpus.documents() {
        let mut seq = Vec::with_capacity(doc.tokens.len());
        let mut mentions = doc.mentions.iter().peekable();
        let mut i = 0;
        while i < doc.tokens.len() {
            if let Some(m) = mentions.next_if(|m| m.start == i) {
                seq.push(m.entity.index());
                i = m.end;
                continue;
            }
            if let Some(id) = vocab.id(&doc.tokens[i]) {
                let row = word_row[id.index()];
                if row != usize::MAX {
                    seq.push(row);
                }
            }
            i += 1;
        }
        for &r in &seq {
            counts[r] += 1;
        }
        sequences.push(seq);
    }
    TrainingData {
        names,
        terms,
        n_entities,
        sequences,
        counts,
    }
}

/// Train embeddings on the joint objective `L = L_local + λ·L_global`.
///
/// Single-threaded and fully deterministic for a given seed.
pub fn train_joint(corpus: &Corpus, cfg: &TrainConfig) -> Result<EmbeddingTable> {
    train_with(corpus, cfg, true)
}

pub(crate) fn train_with(
    corpus: &Corpus,
    cfg: &TrainConfig,
    global_context: bool,
) -> Result<EmbeddingTable> {
    cfg.validate()?;
    if corpus.documents().is_empty() {
        return Err(Error::Config("cannot train embeddings on an empty corpus".into()));
    }
    let data = prepare(corpus, cfg.min_count);
    if data.names.is_empty() {
        return Err(Error::Config("training vocabulary is empty".into()));
    }
    let dim = cfg.dim;
    let n_rows = data.names.len();
    let n_docs = data.sequences.len();

    let mut init_rng = fork_rng(cfg.seed, "embedding/init");
    let half = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..n_rows * dim)
        .map(|_| init_rng.gen_range(-half..half))
        .collect();
    let mut output = vec![0.0; n_rows * dim];
    let mut docs = vec![0.0; n_docs * dim];

    let noise = WeightedIndex::new(data.counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::Config(format!("no trainable tokens: {e}")))?;
    let mut word_rng = fork_rng(cfg.seed, "embedding/words");
    let mut doc_rng = fork_rng(cfg.seed, "embedding/docs");

    let total_positions: usize = data.sequences.iter().map(Vec::len).sum::<usize>() * cfg.epochs;
    let mut processed = 0usize;
    let h = cfg.window;
    let mut center = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut negs = Vec::with_capacity(cfg.negatives);

    for _epoch in 0..cfg.epochs {
        for (d, seq) in data.sequences.iter().enumerate() {
            for i in 0..seq.len() {
                let progress = processed as f64 / total_positions.max(1) as f64;
                let lr = cfg.learning_rate * (1.0 - progress).max(1e-4);
                processed += 1;

                let c = seq[i];
                center.copy_from_slice(&input[c * dim..(c + 1) * dim]);
                grad.iter_mut().for_each(|g| *g = 0.0);

                let lo = i.saturating_sub(h);
                let hi = (i + h + 1).min(seq.len());
                for (j, &ctx) in seq.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    negs.clear();
                    for _ in 0..cfg.negatives {
                        let n = noise.sample(&mut word_rng);
                        if n != ctx {
                            negs.push(n);
                        }
                    }
                    sgns::sgd_tuple(&center, &mut grad, &mut output, ctx, &negs, 1.0, lr);
                }

                if global_context && n_docs > 1 {
                    negs.clear();
                    for _ in 0..cfg.negatives {
                        let n = doc_rng.gen_range(0..n_docs);
                        if n != d {
                            negs.push(n);
                        }
                    }
                    sgns::sgd_tuple(&center, &mut grad, &mut docs, d, &negs, cfg.lambda, lr);
                }

                for (x, g) in input[c * dim..(c + 1) * dim].iter_mut().zip(&grad) {
                    *x -= lr * g;
                }
            }
        }
    }

    if input.iter().chain(&output).chain(&docs).any(|x| !x.is_finite()) {
        return Err(Error::Invariant("embedding training diverged".into()));
    }

    Ok(EmbeddingTable {
        dim,
        names: data.names,
        terms: data.terms,
        n_entities: data.n_entities,
        input,
        output,
        docs,
    })
}
