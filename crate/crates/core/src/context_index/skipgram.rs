use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EntityId};

/// Interned context token.
pub type Sym = u32;

/// Position outside the document.
pub const BOUNDARY: Sym = 0;
/// Matches any token.
pub const WILDCARD: Sym = u32::MAX;

const BOUNDARY_TEXT: &str = "⟨B⟩";

/// Interner for context tokens. Id 0 is reserved for the boundary marker.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTable {
    names: Vec<String>,
    #[serde(skip)]
    ids: HashMap<String, Sym>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable {
            names: vec![BOUNDARY_TEXT.to_owned()],
            ids: HashMap::new(),
        }
    }
}

impl SymbolTable {
    pub fn intern(&mut self, token: &str) -> Sym {
        if let Some(&s) = self.ids.get(token) {
            return s;
        }
        let s = self.names.len() as Sym;
        self.names.push(token.to_owned());
        self.ids.insert(token.to_owned(), s);
        s
    }

    pub fn get(&self, token: &str) -> Option<Sym> {
        self.ids.get(token).copied()
    }

    pub fn name(&self, sym: Sym) -> &str {
        match sym {
            WILDCARD => "*",
            s => &self.names[s as usize],
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.len() <= 1
    }

    pub(crate) fn names(&self) -> &[String] {
        &self.names
    }

    pub(crate) fn from_names(names: Vec<String>) -> Self {
        let ids = names
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, n)| (n.clone(), i as Sym))
            .collect();
        SymbolTable { names, ids }
    }
}

/// A context pattern around an entity slot: `radius` tokens on each side.
///
/// Stored flat as `[left_far .. left_near, right_near .. right_far]`; the slot
/// sits between index `radius - 1` and `radius`. A pattern containing
/// [`WILDCARD`] is a flexgram.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkipGram(Vec<Sym>);

impl SkipGram {
    pub fn new(left: &[Sym], right: &[Sym]) -> Self {
        assert_eq!(left.len(), right.len(), "skip-gram sides must have equal radius");
        let mut v = left.to_vec();
        v.extend_from_slice(right);
        SkipGram(v)
    }

    pub(crate) fn from_flat(syms: Vec<Sym>) -> Self {
        debug_assert!(syms.len() % 2 == 0);
        SkipGram(syms)
    }

    pub fn radius(&self) -> usize {
        self.0.len() / 2
    }

    pub fn syms(&self) -> &[Sym] {
        &self.0
    }

    pub fn left(&self) -> &[Sym] {
        &self.0[..self.radius()]
    }

    pub fn right(&self) -> &[Sym] {
        &self.0[self.radius()..]
    }

    pub fn is_flexgram(&self) -> bool {
        self.0.contains(&WILDCARD)
    }

    /// Keep positions `[0, split)`, wildcard the rest.
    pub fn left_half(&self, split: usize) -> SkipGram {
        SkipGram(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &s)| if i < split { s } else { WILDCARD })
                .collect(),
        )
    }

    /// Keep positions `[split, 2W)`, wildcard the rest.
    pub fn right_half(&self, split: usize) -> SkipGram {
        SkipGram(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &s)| if i >= split { s } else { WILDCARD })
                .collect(),
        )
    }

    /// A half is usable as a flexgram when a real token touches the slot.
    pub fn touches_slot(&self) -> bool {
        let w = self.radius();
        self.0[w - 1] != WILDCARD || self.0[w] != WILDCARD
    }

    pub fn display(&self, symbols: &SymbolTable) -> String {
        let mut out = String::new();
        for (i, &s) in self.0.iter().enumerate() {
            if i == self.radius() {
                out.push_str("__ ");
            }
            let _ = write!(out, "{} ", symbols.name(s));
        }
        out.pop();
        out
    }
}

/// One skip-gram per mention, the whole span acting as the slot. Positions
/// outside the document hold [`BOUNDARY`]. Output is in corpus order.
pub fn extract_skipgrams(
    corpus: &Corpus,
    symbols: &mut SymbolTable,
    radius: usize,
) -> Vec<(EntityId, SkipGram)> {
    assert!(radius >= 1, "skip-gram radius must be at least 1");
    let mut out = Vec::with_capacity(corpus.total_mentions());
    for doc in corpus.documents() {
        let syms: Vec<Sym> = doc.tokens.iter().map(|t| symbols.intern(t)).collect();
        for m in &doc.mentions {
            let mut flat = Vec::with_capacity(2 * radius);
            for k in (1..=radius).rev() {
                flat.push(if m.start >= k { syms[m.start - k] } else { BOUNDARY });
            }
            for k in 0..radius {
                flat.push(syms.get(m.end + k).copied().unwrap_or(BOUNDARY));
            }
            out.push((m.entity, SkipGram(flat)));
        }
    }
    out
}
