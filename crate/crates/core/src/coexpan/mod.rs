//! Iterative co-expansion of the target set together with its rival sets.

mod rank;
mod select;

use std::collections::HashSet;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

pub use rank::{
    channel_ranking, filter_dominated, mrr_rank, score_channels, ChannelScores, RankedEntry, Scorer,
    Survivors,
};
pub use select::{
    objective, project, select_features, sim_context, weighted_jaccard, CrossPenalty,
};

use crate::auxgen::{AuxConfig, AuxGenerator, AuxiliarySets, GroupExpander};
use crate::context_index::{FeatureId, FeatureWeights};
use crate::corpus::EntityId;
use crate::embedding::{CentroidProvider, EmbeddingTable};
use crate::error::{Error, Result};
use crate::rng::fork_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandConfig {
    /// Entities admitted per set per iteration.
    pub t: usize,
    /// Maximum number of iterations.
    pub iterations: usize,
    /// Feature pool size.
    pub q: usize,
    /// Seed for auxiliary-set balancing.
    pub seed: u64,
    pub no_aux: bool,
    /// Generate auxiliary sets once and keep expanding them.
    pub freeze_aux: bool,
    pub penalty: CrossPenalty,
    pub aux: AuxConfig,
}

impl Default for ExpandConfig {
    fn default() -> Self {
        ExpandConfig {
            t: 5,
            iterations: 10,
            q: 200,
            seed: 0,
            no_aux: false,
            freeze_aux: false,
            penalty: CrossPenalty::AllPairs,
            aux: AuxConfig::default(),
        }
    }
}

impl ExpandConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Config("feature pool size must be at least 1".into()));
        }
        if self.aux.neighbors == 0 {
            return Err(Error::Config("neighbor count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    pub entity: EntityId,
    pub iteration: usize,
    pub mrr: f64,
    pub r_sg: Option<usize>,
    pub r_emb: Option<usize>,
}

impl Admission {
    fn new(entry: &RankedEntry, iteration: usize) -> Self {
        Admission {
            entity: entry.entity,
            iteration,
            mrr: entry.mrr,
            r_sg: entry.r_sg,
            r_emb: entry.r_emb,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Auxiliary sets generated at the start of the iteration; `None` when
    /// they were carried over or disabled.
    pub generated: Option<AuxiliarySets>,
    pub features: Vec<FeatureId>,
    pub pool_size: usize,
    /// Admissions per set, target first.
    pub admitted: Vec<Vec<Admission>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    IterationLimit,
    NoFeatures,
    EmptyPool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub seeds: Vec<EntityId>,
    /// Every entity added to the target set, in admission order.
    pub admissions: Vec<Admission>,
    /// Final sets, target first.
    pub sets: Vec<Vec<EntityId>>,
    pub trace: Vec<IterationTrace>,
    pub stop: StopReason,
}

impl Expansion {
    pub fn ranking(&self) -> Vec<EntityId> {
        self.admissions.iter().map(|a| a.entity).collect()
    }
}

/// Read-only resources an expansion runs against.
#[derive(Copy, Clone)]
pub struct Engine<'a> {
    pub weights: &'a FeatureWeights,
    pub table: &'a EmbeddingTable,
    pub centroids: &'a CentroidProvider,
}

impl<'a> Engine<'a> {
    pub fn new(weights: &'a FeatureWeights, table: &'a EmbeddingTable, centroids: &'a CentroidProvider) -> Self {
        Engine {
            weights,
            table,
            centroids,
        }
    }

    fn check_seeds(&self, seeds: &[EntityId]) -> Result<()> {
        let limit = self
            .weights
            .n_entities()
            .min(self.table.n_entities())
            .min(self.centroids.len());
        let missing: Vec<String> = seeds
            .iter()
            .filter(|e| e.index() >= limit)
            .map(ToString::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(Error::NotFound(format!("seeds not in catalog: {}", missing.join(", "))));
        }
        let distinct: HashSet<EntityId> = seeds.iter().copied().collect();
        if distinct.len() != seeds.len() {
            return Err(Error::Config("duplicate seeds".into()));
        }
        Ok(())
    }

    /// Entities carrying some selected feature, minus `members`, sorted.
    fn candidate_pool(&self, features: &[FeatureId], members: &HashSet<EntityId>) -> Vec<EntityId> {
        let mut pool: Vec<EntityId> = features
            .iter()
            .flat_map(|&c| self.weights.column(c).iter().map(|&(e, _)| e))
            .filter(|e| !members.contains(e))
            .collect();
        pool.sort_unstable();
        pool.dedup();
        pool
    }

    /// Expand `seeds` alongside auxiliary rival sets.
    pub fn co_expand(&self, seeds: &[EntityId], cfg: &ExpandConfig) -> Result<Expansion> {
        cfg.validate()?;
        self.check_seeds(seeds)?;
        if seeds.is_empty() || (seeds.len() < 2 && !cfg.no_aux) {
            return Err(Error::Config(
                "co-expansion needs at least two seeds (one with auxiliary sets disabled)".into(),
            ));
        }
        let expander = SingleSetExpander {
            engine: *self,
            t: 5,
            q: cfg.q,
        };
        let generator = AuxGenerator {
            table: self.table,
            centroids: self.centroids,
            expander: &expander,
            config: cfg.aux.clone(),
        };
        let mut rng = fork_rng(cfg.seed, "balance");

        let mut target = seeds.to_vec();
        let mut aux: Vec<Vec<EntityId>> = Vec::new();
        let mut admissions = Vec::new();
        let mut trace = Vec::new();
        let mut stop = StopReason::IterationLimit;

        for iteration in 1..=cfg.iterations {
            let mut generated = None;
            if !cfg.no_aux && !(cfg.freeze_aux && iteration > 1) {
                let sets = generator.generate(&target)?;
                aux = sets.member_sets();
                generated = Some(sets);
            }

            let mut balanced = vec![target.clone()];
            for s in &aux {
                if s.len() > target.len() {
                    let mut idx = sample(&mut rng, s.len(), target.len()).into_vec();
                    idx.sort_unstable();
                    balanced.push(idx.into_iter().map(|i| s[i]).collect());
                } else {
                    balanced.push(s.clone());
                }
            }
            let features = select_features(&balanced, cfg.q, self.weights, cfg.penalty);

            let mut sets = Vec::with_capacity(aux.len() + 1);
            sets.push(target.clone());
            sets.extend(aux.iter().cloned());
            let members: HashSet<EntityId> = sets.iter().flatten().copied().collect();
            let pool = self.candidate_pool(&features, &members);
            let mut record = IterationTrace {
                iteration,
                generated,
                features: features.clone(),
                pool_size: pool.len(),
                admitted: vec![Vec::new(); sets.len()],
            };
            if features.is_empty() {
                trace.push(record);
                stop = StopReason::NoFeatures;
                break;
            }

            let mut scorer = Scorer::new(self.weights, self.centroids, &features);
            scorer.prepare(members.iter().copied());
            let scores = scorer.score_all(&pool, &sets)?;

            let mut taken: HashSet<EntityId> = HashSet::new();
            for k in 0..sets.len() {
                let surv = filter_dominated(&pool, &scores, k);
                let ranked = mrr_rank(&channel_ranking(surv.sg), &channel_ranking(surv.emb));
                if k == 0 && ranked.is_empty() {
                    break;
                }
                let picks: Vec<&RankedEntry> =
                    ranked.iter().filter(|x| !taken.contains(&x.entity)).take(cfg.t).collect();
                for entry in picks {
                    taken.insert(entry.entity);
                    record.admitted[k].push(Admission::new(entry, iteration));
                }
            }
            if record.admitted[0].is_empty() {
                trace.push(record);
                stop = StopReason::EmptyPool;
                break;
            }
            for a in &record.admitted[0] {
                target.push(a.entity);
                admissions.push(a.clone());
            }
            for (k, s) in aux.iter_mut().enumerate() {
                s.extend(record.admitted[k + 1].iter().map(|a| a.entity));
            }
            trace.push(record);
        }

        let mut sets = vec![target];
        sets.extend(aux);
        Ok(Expansion {
            seeds: seeds.to_vec(),
            admissions,
            sets,
            trace,
            stop,
        })
    }

    /// Plain iterative expansion of one set with no rivals.
    pub fn single_expand(&self, seeds: &[EntityId], cfg: &ExpandConfig) -> Result<Expansion> {
        cfg.validate()?;
        self.check_seeds(seeds)?;
        if seeds.is_empty() {
            return Err(Error::Config("expansion needs at least one seed".into()));
        }
        let mut target = seeds.to_vec();
        let mut admissions = Vec::new();
        let mut trace = Vec::new();
        let mut stop = StopReason::IterationLimit;
        for iteration in 1..=cfg.iterations {
            let features = select_features(std::slice::from_ref(&target), cfg.q, self.weights, cfg.penalty);
            let members: HashSet<EntityId> = target.iter().copied().collect();
            let pool = self.candidate_pool(&features, &members);
            let mut record = IterationTrace {
                iteration,
                generated: None,
                features: features.clone(),
                pool_size: pool.len(),
                admitted: vec![Vec::new()],
            };
            if features.is_empty() {
                trace.push(record);
                stop = StopReason::NoFeatures;
                break;
            }
            let scorer = Scorer::new(self.weights, self.centroids, &features);
            let mut sg = Vec::with_capacity(pool.len());
            let mut emb = Vec::with_capacity(pool.len());
            for &e in &pool {
                let s = scorer.score(e, &target)?;
                sg.push((e, s.sg));
                emb.push((e, s.emb));
            }
            let ranked = mrr_rank(&channel_ranking(sg), &channel_ranking(emb));
            record.admitted[0] = ranked.iter().take(cfg.t).map(|x| Admission::new(x, iteration)).collect();
            if record.admitted[0].is_empty() {
                trace.push(record);
                stop = StopReason::EmptyPool;
                break;
            }
            for a in &record.admitted[0] {
                target.push(a.entity);
                admissions.push(a.clone());
            }
            trace.push(record);
        }
        Ok(Expansion {
            seeds: seeds.to_vec(),
            admissions,
            sets: vec![target],
            trace,
            stop,
        })
    }
}

/// One round of single-set expansion, used to grow initial groups.
pub struct SingleSetExpander<'a> {
    pub engine: Engine<'a>,
    pub t: usize,
    pub q: usize,
}

impl GroupExpander for SingleSetExpander<'_> {
    fn expand(&self, group: &[EntityId]) -> Result<Vec<EntityId>> {
        let cfg = ExpandConfig {
            t: self.t,
            iterations: 1,
            q: self.q,
            no_aux: true,
            ..ExpandConfig::default()
        };
        Ok(self.engine.single_expand(group, &cfg)?.sets.swap_remove(0))
    }
}
