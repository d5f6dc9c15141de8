//! Flexgram normalisation: break a skip-gram into its most independent
//! halves (lowest PMI) and keep the halves that do not over-generalise.

use std::collections::HashMap;

use super::skipgram::{SkipGram, Sym, WILDCARD};

/// Occurrence statistics over all extracted skip-grams (token counts, not
/// types), with prefix/suffix tables so half patterns can be counted by
/// wildcard matching in O(1).
#[derive(Clone, Debug, Default)]
pub struct SkipGramCounts {
    radius: usize,
    total: u64,
    full: HashMap<SkipGram, u64>,
    prefix: Vec<HashMap<Vec<Sym>, u64>>,
    suffix: Vec<HashMap<Vec<Sym>, u64>>,
}

impl SkipGramCounts {
    pub fn new(radius: usize) -> Self {
        SkipGramCounts {
            radius,
            total: 0,
            full: HashMap::new(),
            prefix: vec![HashMap::new(); 2 * radius + 1],
            suffix: vec![HashMap::new(); 2 * radius + 1],
        }
    }

    pub fn from_occurrences<'a, I>(radius: usize, occurrences: I) -> Self
    where
        I: IntoIterator<Item = &'a SkipGram>,
    {
        let mut counts = SkipGramCounts::new(radius);
        for sg in occurrences {
            counts.add(sg, 1);
        }
        counts
    }

    pub fn add(&mut self, sg: &SkipGram, n: u64) {
        assert_eq!(sg.radius(), self.radius, "mixed skip-gram radii");
        self.total += n;
        *self.full.entry(sg.clone()).or_default() += n;
        let syms = sg.syms();
        for i in 1..2 * self.radius {
            *self.prefix[i].entry(syms[..i].to_vec()).or_default() += n;
            *self.suffix[i].entry(syms[i..].to_vec()).or_default() += n;
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Number of skip-gram occurrences matching `pattern`, wildcards
    /// matching any token.
    pub fn count(&self, pattern: &SkipGram) -> u64 {
        let syms = pattern.syms();
        let n = syms.len();
        let first_wild = syms.iter().position(|&s| s == WILDCARD);
        let last_wild = syms.iter().rposition(|&s| s == WILDCARD);
        match (first_wild, last_wild) {
            (None, _) => self.full.get(pattern).copied().unwrap_or(0),
            (Some(0), Some(l)) if l == n - 1 && syms.iter().all(|&s| s == WILDCARD) => self.total,
            (Some(f), Some(l)) if l == n - 1 && syms[f..].iter().all(|&s| s == WILDCARD) => {
                self.prefix[f].get(&syms[..f]).copied().unwrap_or(0)
            }
            (Some(0), Some(l)) if syms[..=l].iter().all(|&s| s == WILDCARD) => {
                self.suffix[l + 1].get(&syms[l + 1..]).copied().unwrap_or(0)
            }
            _ => self
                .full
                .iter()
                .filter(|(sg, _)| {
                    sg.syms()
                        .iter()
                        .zip(syms)
                        .all(|(&a, &p)| p == WILDCARD || a == p)
                })
                .map(|(_, &c)| c)
                .sum(),
        }
    }
}

/// The `2W - 1` ways of cutting a skip-gram between adjacent positions.
/// Cutting on either side of the slot gives the same pair, so it is listed once.
pub fn breakdowns(l: &SkipGram) -> Vec<(usize, SkipGram, SkipGram)> {
    (1..2 * l.radius())
        .map(|i| (i, l.left_half(i), l.right_half(i)))
        .collect()
}

/// `log P(l) / (P(left) P(right))` for the cut at `split`, probabilities
/// being occurrence counts over all skip-gram occurrences. Zero counts give
/// `+∞`, so such a cut is never the most independent one.
pub fn pmi_split(counts: &SkipGramCounts, l: &SkipGram, split: usize) -> f64 {
    let whole = counts.count(l);
    let left = counts.count(&l.left_half(split));
    let right = counts.count(&l.right_half(split));
    if whole == 0 || left == 0 || right == 0 {
        return f64::INFINITY;
    }
    let total = counts.total() as f64;
    ((whole as f64 * total) / (left as f64 * right as f64)).ln()
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FlexParams {
    /// Break when the minimum PMI is below this.
    pub gamma: f64,
    /// Suppress a half whose occurrence count exceeds this multiple of the original's.
    pub k_gen: f64,
}

impl Default for FlexParams {
    fn default() -> Self {
        FlexParams {
            gamma: 1.0,
            k_gen: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlexOutcome {
    Unchanged,
    Split {
        split: usize,
        pmi: f64,
        emitted: Vec<SkipGram>,
    },
}

impl FlexOutcome {
    /// Features a mention with skip-gram `l` contributes to.
    pub fn features(&self, l: &SkipGram) -> Vec<SkipGram> {
        match self {
            FlexOutcome::Unchanged => vec![l.clone()],
            FlexOutcome::Split { emitted, .. } => emitted.clone(),
        }
    }
}

/// Decide how one skip-gram maps to features.
///
/// Picks the cut with the lowest PMI (earliest cut on ties). If it is below
/// `gamma`, every half that touches the slot and whose count ratio against
/// `l` is at most `k_gen` is emitted. When nothing survives, or `l` already
/// is a flexgram, `l` is kept.
pub fn flex_transform(counts: &SkipGramCounts, l: &SkipGram, params: FlexParams) -> FlexOutcome {
    if l.is_flexgram() {
        return FlexOutcome::Unchanged;
    }
    let best = (1..2 * l.radius())
        .map(|i| (i, pmi_split(counts, l, i)))
        .fold(None::<(usize, f64)>, |acc, (i, p)| match acc {
            Some((_, bp)) if bp <= p => acc,
            _ => Some((i, p)),
        });
    let Some((split, pmi)) = best else {
        return FlexOutcome::Unchanged;
    };
    if !(pmi < params.gamma) {
        return FlexOutcome::Unchanged;
    }
    let base = counts.count(l) as f64;
    let emitted: Vec<SkipGram> = [l.left_half(split), l.right_half(split)]
        .into_iter()
        .filter(|half| half.touches_slot())
        .filter(|half| counts.count(half) as f64 / base <= params.k_gen)
        .collect();
    if emitted.is_empty() {
        FlexOutcome::Unchanged
    } else {
        FlexOutcome::Split {
            split,
            pmi,
            emitted,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context_index::skipgram::SymbolTable;

    fn sg(st: &mut SymbolTable, left: &[&str], right: &[&str]) -> SkipGram {
        let l: Vec<Sym> = left.iter().map(|t| st.intern(t)).collect();
        let r: Vec<Sym> = right.iter().map(|t| st.intern(t)).collect();
        SkipGram::new(&l, &r)
    }

    #[test]
    fn hospital_breakdowns() {
        let mut st = SymbolTable::default();
        let l = sg(&mut st, &["hospital", "in"], &["has", "been"]);
        let cuts = breakdowns(&l);
        assert_eq!(cuts.len(), 3);
        let shown: Vec<(String, bool, String, bool)> = cuts
            .iter()
            .map(|(_, a, b)| (a.display(&st), a.touches_slot(), b.display(&st), b.touches_slot()))
            .collect();
        assert_eq!(
            shown,
            vec![
                ("hospital * __ * *".into(), false, "* in __ has been".into(), true),
                ("hospital in __ * *".into(), true, "* * __ has been".into(), true),
                ("hospital in __ has *".into(), true, "* * __ * been".into(), false),
            ]
        );
    }

    #[test]
    fn pmi_hand_values() {
        // P(l)=0.001, P(left)=0.01, P(right)=0.1 with 1000 occurrences.
        let mut st = SymbolTable::default();
        let l = sg(&mut st, &["x"], &["y"]);
        let mut counts = SkipGramCounts::new(1);
        counts.add(&l, 1);
        counts.add(&sg(&mut st, &["x"], &["q"]), 9);
        counts.add(&sg(&mut st, &["p"], &["y"]), 99);
        counts.add(&sg(&mut st, &["p"], &["q"]), 891);
        assert_eq!(counts.total(), 1000);
        assert!(pmi_split(&counts, &l, 1).abs() < 1e-12);

        // Halves only ever occur together: P(l) = P(left) = P(right) = p.
        let mut counts = SkipGramCounts::new(1);
        counts.add(&l, 4);
        counts.add(&sg(&mut st, &["p"], &["q"]), 16);
        let p: f64 = 4.0 / 20.0;
        assert!((pmi_split(&counts, &l, 1) - (-p.ln())).abs() < 1e-12);
    }

    #[test]
    fn unseen_half_is_infinite() {
        let mut st = SymbolTable::default();
        let l = sg(&mut st, &["x"], &["y"]);
        let counts = SkipGramCounts::new(1);
        assert_eq!(pmi_split(&counts, &l, 1), f64::INFINITY);
    }

    #[test]
    fn isolated_skipgram_unchanged() {
        let mut st = SymbolTable::default();
        let l = sg(&mut st, &["a", "b"], &["c", "d"]);
        let mut counts = SkipGramCounts::new(2);
        counts.add(&l, 3);
        counts.add(&sg(&mut st, &["e", "f"], &["g", "h"]), 50);
        assert_eq!(
            flex_transform(&counts, &l, FlexParams::default()),
            FlexOutcome::Unchanged
        );
    }

    #[test]
    fn generalisation_guard_keeps_president_side() {
        let mut st = SymbolTable::default();
        let l = sg(&mut st, &["President"], &["and"]);
        let mut counts = SkipGramCounts::new(1);
        counts.add(&l, 10);
        counts.add(&sg(&mut st, &["President"], &["said"]), 30);
        // "* __ and" is everywhere: ratio (10 + 2000) / 10 > 100.
        counts.add(&sg(&mut st, &["war"], &["and"]), 2000);
        let outcome = flex_transform(&counts, &l, FlexParams::default());
        match outcome {
            FlexOutcome::Split { emitted, .. } => {
                let shown: Vec<_> = emitted.iter().map(|f| f.display(&st)).collect();
                assert_eq!(shown, vec!["President __ *"]);
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn hospital_guard_suppresses_right_half() {
        let mut st = SymbolTable::default();
        let l = sg(&mut st, &["hospital", "in"], &["has", "been"]);
        let mut counts = SkipGramCounts::new(2);
        counts.add(&l, 2);
        counts.add(&sg(&mut st, &["hospital", "in"], &["was", "built"]), 6);
        for i in 0..300 {
            let w = format!("w{i}");
            counts.add(&sg(&mut st, &[&w, "it"], &["has", "been"]), 1);
        }
        let outcome = flex_transform(&counts, &l, FlexParams::default());
        let FlexOutcome::Split { split, emitted, .. } = outcome else {
            panic!("expected a split");
        };
        assert_eq!(split, 2);
        let shown: Vec<_> = emitted.iter().map(|f| f.display(&st)).collect();
        assert_eq!(shown, vec!["hospital in __ * *"]);
    }

    #[test]
    fn flexgrams_are_fixed_points() {
        let mut st = SymbolTable::default();
        let l = sg(&mut st, &["President"], &["and"]);
        let mut counts = SkipGramCounts::new(1);
        counts.add(&l, 1);
        let flex = l.left_half(1);
        assert_eq!(
            flex_transform(&counts, &flex, FlexParams::default()),
            FlexOutcome::Unchanged
        );
    }

    #[test]
    fn wildcard_counting_matches_scan() {
        let mut st = SymbolTable::default();
        let a = sg(&mut st, &["a", "b"], &["c", "d"]);
        let b = sg(&mut st, &["x", "b"], &["c", "y"]);
        let c = sg(&mut st, &["a", "b"], &["z", "d"]);
        let counts = SkipGramCounts::from_occurrences(2, [&a, &b, &b, &c]);
        assert_eq!(counts.count(&a.left_half(2)), 2);
        assert_eq!(counts.count(&b.right_half(1)), 2);
        assert_eq!(counts.count(&a.right_half(3)), 2);
        // middle-only pattern goes through the scan fallback
        let mid = SkipGram::from_flat(vec![WILDCARD, st.get("b").unwrap(), st.get("c").unwrap(), WILDCARD]);
        assert_eq!(counts.count(&mid), 3);
    }
}
