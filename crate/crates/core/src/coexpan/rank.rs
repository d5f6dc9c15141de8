//! Per-channel candidate scoring, rival filtering and rank fusion.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context_index::{FeatureId, FeatureWeights};
use crate::corpus::EntityId;
use crate::embedding::{cosine, CentroidProvider};
use crate::error::Result;

use super::select::{project, weighted_jaccard};

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct ChannelScores {
    pub sg: f64,
    pub emb: f64,
}

/// Scores candidates against sets on the skip-gram channel (mean weighted
/// Jaccard over the selected features) and the embedding channel (mean
/// centroid cosine). A candidate is never compared with itself.
pub struct Scorer<'a> {
    weights: &'a FeatureWeights,
    centroids: &'a CentroidProvider,
    features: Vec<FeatureId>,
    cache: HashMap<EntityId, Vec<(FeatureId, f64)>>,
}

impl<'a> Scorer<'a> {
    pub fn new(weights: &'a FeatureWeights, centroids: &'a CentroidProvider, features: &[FeatureId]) -> Self {
        let mut features = features.to_vec();
        features.sort_unstable();
        features.dedup();
        Scorer {
            weights,
            centroids,
            features,
            cache: HashMap::new(),
        }
    }

    /// Precompute projected vectors of set members.
    pub fn prepare(&mut self, members: impl IntoIterator<Item = EntityId>) {
        for e in members {
            if !self.cache.contains_key(&e) {
                let p = project(self.weights.row(e), &self.features);
                self.cache.insert(e, p);
            }
        }
    }

    fn projected(&self, e: EntityId) -> std::borrow::Cow<'_, [(FeatureId, f64)]> {
        match self.cache.get(&e) {
            Some(p) => p.as_slice().into(),
            None => project(self.weights.row(e), &self.features).into(),
        }
    }

    pub fn score(&self, e: EntityId, set: &[EntityId]) -> Result<ChannelScores> {
        let pe = self.projected(e);
        let ve = self.centroids.centroid(e)?;
        let (mut sg, mut emb, mut n) = (0.0, 0.0, 0usize);
        for &other in set {
            if other == e {
                continue;
            }
            sg += weighted_jaccard(&pe, &self.projected(other));
            emb += cosine(ve, self.centroids.centroid(other)?)?;
            n += 1;
        }
        if n == 0 {
            return Ok(ChannelScores::default());
        }
        Ok(ChannelScores {
            sg: sg / n as f64,
            emb: emb / n as f64,
        })
    }

    /// `scores[c][k]`: candidate `c` against set `k`.
    pub fn score_all(&self, candidates: &[EntityId], sets: &[Vec<EntityId>]) -> Result<Vec<Vec<ChannelScores>>> {
        candidates
            .par_iter()
            .map(|&e| sets.iter().map(|s| self.score(e, s)).collect())
            .collect()
    }
}

/// Skip-gram and embedding scores of `e` against `set`, projected on `features`.
pub fn score_channels(
    e: EntityId,
    set: &[EntityId],
    features: &[FeatureId],
    weights: &FeatureWeights,
    centroids: &CentroidProvider,
) -> Result<ChannelScores> {
    Scorer::new(weights, centroids, features).score(e, set)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Survivors {
    /// Candidates kept on each channel, with their score against the set.
    pub sg: Vec<(EntityId, f64)>,
    pub emb: Vec<(EntityId, f64)>,
}

/// Drop a candidate from a channel of set `set` when some other set scores
/// it strictly higher on that channel.
pub fn filter_dominated(candidates: &[EntityId], scores: &[Vec<ChannelScores>], set: usize) -> Survivors {
    let mut out = Survivors::default();
    for (&e, row) in candidates.iter().zip(scores) {
        let own = row[set];
        let (mut rival_sg, mut rival_emb) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (k, s) in row.iter().enumerate() {
            if k != set {
                rival_sg = rival_sg.max(s.sg);
                rival_emb = rival_emb.max(s.emb);
            }
        }
        if own.sg >= rival_sg {
            out.sg.push((e, own.sg));
        }
        if own.emb >= rival_emb {
            out.emb.push((e, own.emb));
        }
    }
    out
}

/// Strict order by descending score, ties to the smaller entity id.
pub fn channel_ranking(mut scored: Vec<(EntityId, f64)>) -> Vec<EntityId> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(e, _)| e).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub entity: EntityId,
    pub mrr: f64,
    pub r_sg: Option<usize>,
    pub r_emb: Option<usize>,
}

/// Sum of reciprocal ranks over the channels a candidate appears in.
pub fn mrr_rank(sg: &[EntityId], emb: &[EntityId]) -> Vec<RankedEntry> {
    let mut entries: HashMap<EntityId, RankedEntry> = HashMap::new();
    for (r, &e) in sg.iter().enumerate() {
        let entry = entries.entry(e).or_insert(RankedEntry {
            entity: e,
            mrr: 0.0,
            r_sg: None,
            r_emb: None,
        });
        entry.r_sg = Some(r + 1);
    }
    for (r, &e) in emb.iter().enumerate() {
        let entry = entries.entry(e).or_insert(RankedEntry {
            entity: e,
            mrr: 0.0,
            r_sg: None,
            r_emb: None,
        });
        entry.r_emb = Some(r + 1);
    }
    let mut out: Vec<RankedEntry> = entries
        .into_values()
        .map(|mut x| {
            // fixed summation order keeps scores reproducible
            x.mrr = x.r_sg.map_or(0.0, |r| 1.0 / r as f64) + x.r_emb.map_or(0.0, |r| 1.0 / r as f64);
            x
        })
        .collect();
    out.sort_by(|a, b| b.mrr.total_cmp(&a.mrr).then(a.entity.cmp(&b.entity)));
    out
}
