//! Mention-annotated corpus, vocabulary and entity catalog.
//!
//! The input is one JSON document record per line:
//!
//! ```text
//! {"doc_id": "d1", "tokens": ["a", "b", "c"], "mentions": [{"entity": "b", "start": 1, "end": 2}]}
//! ```
//!
//! Entity and token ids are dense and assigned in first-seen order while the
//! file is scanned, so reloading a serialized corpus reproduces every id.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Wire form of a mention in the corpus file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub entity: String,
    pub start: usize,
    pub end: usize,
}

/// Wire form of one corpus line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<MentionRecord>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Mention {
    pub entity: EntityId,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub mentions: Vec<Mention>,
}

#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
    freq: Vec<u64>,
}

impl Vocabulary {
    fn observe(&mut self, token: &str) {
        match self.ids.get(token) {
            Some(id) => self.freq[id.index()] += 1,
            None => {
                let id = TokenId(self.tokens.len() as u32);
                self.tokens.push(token.to_owned());
                self.ids.insert(token.to_owned(), id);
                self.freq.push(1);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id.index()]
    }

    pub fn frequency(&self, id: TokenId) -> u64 {
        self.freq[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, &str, u64)> + '_ {
        self.tokens
            .iter()
            .zip(&self.freq)
            .enumerate()
            .map(|(i, (t, &f))| (TokenId(i as u32), t.as_str(), f))
    }
}

/// Where an entity was mentioned. `doc` is the document's position in load order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occurrence {
    pub doc: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, Default)]
pub struct EntityCatalog {
    names: Vec<String>,
    ids: HashMap<String, EntityId>,
    occurrences: Vec<Vec<Occurrence>>,
    total: usize,
}

impl EntityCatalog {
    fn intern(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = EntityId(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        self.occurrences.push(Vec::new());
        id
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<EntityId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: EntityId) -> &str {
        &self.names[id.index()]
    }

    pub fn contains(&self, id: EntityId) -> bool {
        id.index() < self.names.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = EntityId> {
        (0..self.names.len() as u32).map(EntityId)
    }

    /// All mentions of `entity`, grouped by document in load order and
    /// sorted by position within each document.
    pub fn occurrences(&self, entity: EntityId) -> Result<&[Occurrence]> {
        self.occurrences
            .get(entity.index())
            .map(Vec::as_slice)
            .ok_or_else(|| Error::NotFound(format!("entity {entity}")))
    }

    pub fn count(&self, entity: EntityId) -> usize {
        self.occurrences.get(entity.index()).map_or(0, Vec::len)
    }

    pub fn total_occurrences(&self) -> usize {
        self.total
    }

    /// Resolve entity strings, failing with every unknown name at once.
    pub fn resolve_all<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<EntityId>> {
        let mut missing = Vec::new();
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            match self.id(name.as_ref()) {
                Some(id) => out.push(id),
                None => missing.push(name.as_ref().to_owned()),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(Error::NotFound(format!(
                "entities not in corpus: {}",
                missing.join(", ")
            )))
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    vocab: Vocabulary,
    catalog: EntityCatalog,
}

impl Corpus {
    /// Load a line-delimited corpus file.
    pub fn load(path: impl AsRef<Path>) -> Result<Corpus> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Corpus::from_reader(BufReader::new(file), &path.display().to_string())
    }

    pub fn from_reader<R: BufRead>(reader: R, source_name: &str) -> Result<Corpus> {
        let mut builder = Corpus::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: DocumentRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse {
                    source_name: source_name.to_owned(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            builder.push(record)?;
        }
        Ok(builder)
    }

    pub fn from_records<I: IntoIterator<Item = DocumentRecord>>(records: I) -> Result<Corpus> {
        let mut corpus = Corpus::default();
        for record in records {
            corpus.push(record)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, record: DocumentRecord) -> Result<()> {
        let DocumentRecord {
            doc_id,
            tokens,
            mut mentions,
        } = record;
        mentions.sort_by_key(|m| (m.start, m.end));
        let invalid = |message: String| Error::Validation {
            doc_id: doc_id.clone(),
            message,
        };
        let mut prev_end = 0;
        for (i, m) in mentions.iter().enumerate() {
            if m.start >= m.end {
                return Err(invalid(format!(
                    "mention `{}` has empty span [{}, {})",
                    m.entity, m.start, m.end
                )));
            }
            if m.end > tokens.len() {
                return Err(invalid(format!(
                    "mention `{}` ends at {} but the document has {} tokens",
                    m.entity,
                    m.end,
                    tokens.len()
                )));
            }
            if i > 0 && m.start < prev_end {
                return Err(invalid(format!(
                    "mention `{}` at [{}, {}) overlaps the previous mention",
                    m.entity, m.start, m.end
                )));
            }
            if m.entity.is_empty() {
                return Err(invalid("mention with empty entity name".into()));
            }
            prev_end = m.end;
        }

        let doc_index = self.documents.len();
        for t in &tokens {
            self.vocab.observe(t);
        }
        let mentions = mentions
            .into_iter()
            .map(|m| {
                let entity = self.catalog.intern(&m.entity);
                self.catalog.occurrences[entity.index()].push(Occurrence {
                    doc: doc_index,
                    start: m.start,
                    end: m.end,
                });
                self.catalog.total += 1;
                Mention {
                    entity,
                    start: m.start,
                    end: m.end,
                }
            })
            .collect();
        self.documents.push(Document {
            doc_id,
            tokens,
            mentions,
        });
        Ok(())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn catalog(&self) -> &EntityCatalog {
        &self.catalog
    }

    pub fn total_mentions(&self) -> usize {
        self.documents.iter().map(|d| d.mentions.len()).sum()
    }

    pub fn to_records(&self) -> impl Iterator<Item = DocumentRecord> + '_ {
        self.documents.iter().map(|d| DocumentRecord {
            doc_id: d.doc_id.clone(),
            tokens: d.tokens.clone(),
            mentions: d
                .mentions
                .iter()
                .map(|m| MentionRecord {
                    entity: self.catalog.name(m.entity).to_owned(),
                    start: m.start,
                    end: m.end,
                })
                .collect(),
        })
    }

    /// Serialize back to the line-delimited input format.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for record in self.to_records() {
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Entity name as a single training token: spaces become underscores.
pub fn joined_name(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join("_")
}
