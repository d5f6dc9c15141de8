//! Weighted Jaccard over skip-gram features and contrastive feature selection.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context_index::{FeatureId, FeatureWeights};
use crate::corpus::EntityId;

/// Which cross-set pairs the selection objective penalizes.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossPenalty {
    /// Every unordered pair of distinct sets, target included.
    #[default]
    AllPairs,
    /// Only pairs of auxiliary sets.
    AuxiliaryOnly,
}

/// Restrict a sorted sparse row to the sorted feature list `features`.
pub fn project(row: &[(FeatureId, f64)], features: &[FeatureId]) -> Vec<(FeatureId, f64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < row.len() && j < features.len() {
        match row[i].0.cmp(&features[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(row[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// `Σ min / Σ max` over two sorted sparse vectors; 0 when both are empty.
pub fn weighted_jaccard(a: &[(FeatureId, f64)], b: &[(FeatureId, f64)]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ka = a.get(i).map_or(FeatureId::MAX, |x| x.0);
        let kb = b.get(j).map_or(FeatureId::MAX, |x| x.0);
        if ka < kb {
            den += a[i].1;
            i += 1;
        } else if kb < ka {
            den += b[j].1;
            j += 1;
        } else {
            num += a[i].1.min(b[j].1);
            den += a[i].1.max(b[j].1);
            i += 1;
            j += 1;
        }
    }
    ratio(num, den)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Context similarity of two entities restricted to `features` (sorted).
pub fn sim_context(e1: EntityId, e2: EntityId, features: &[FeatureId], weights: &FeatureWeights) -> f64 {
    weighted_jaccard(
        &project(weights.row(e1), features),
        &project(weights.row(e2), features),
    )
}

/// Every unordered pair of members across `sets` with its objective
/// coefficient: `2/(n(n-1))` inside a set, `-1/(|A||B|)` across sets.
fn pair_coefficients(sets: &[Vec<EntityId>], penalty: CrossPenalty) -> Vec<(usize, usize, f64)> {
    let mut offsets = Vec::with_capacity(sets.len());
    let mut m = 0;
    for s in sets {
        offsets.push(m);
        m += s.len();
    }
    let mut pairs = Vec::new();
    for (a, sa) in sets.iter().enumerate() {
        let n = sa.len() as f64;
        if sa.len() >= 2 {
            let w = 2.0 / (n * (n - 1.0));
            for i in 0..sa.len() {
                for j in i + 1..sa.len() {
                    pairs.push((offsets[a] + i, offsets[a] + j, w));
                }
            }
        }
        for (b, sb) in sets.iter().enumerate().skip(a + 1) {
            if penalty == CrossPenalty::AuxiliaryOnly && a == 0 {
                continue;
            }
            let w = -1.0 / (n * sb.len() as f64);
            for i in 0..sa.len() {
                for j in 0..sb.len() {
                    pairs.push((offsets[a] + i, offsets[b] + j, w));
                }
            }
        }
    }
    pairs
}

/// The selection objective of a feature set, evaluated directly.
pub fn objective(
    sets: &[Vec<EntityId>],
    features: &[FeatureId],
    weights: &FeatureWeights,
    penalty: CrossPenalty,
) -> f64 {
    let mut sorted = features.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let members: Vec<EntityId> = sets.iter().flatten().copied().collect();
    let projected: Vec<_> = members
        .iter()
        .map(|&e| project(weights.row(e), &sorted))
        .collect();
    pair_coefficients(sets, penalty)
        .into_iter()
        .map(|(i, j, w)| w * weighted_jaccard(&projected[i], &projected[j]))
        .sum()
}

/// Greedy contrastive feature selection. `sets[0]` is the target set, the
/// rest are auxiliary sets; sets must be disjoint. Each step adds the feature
/// with the largest strictly positive gain (ties to the smaller id); stops
/// early when nothing improves. The result is sorted by feature id.
///
/// With a single one-member set there are no pairs to score; the `q`
/// heaviest features of that member are returned instead.
pub fn select_features(
    sets: &[Vec<EntityId>],
    q: usize,
    weights: &FeatureWeights,
    penalty: CrossPenalty,
) -> Vec<FeatureId> {
    let members: Vec<EntityId> = sets.iter().flatten().copied().collect();
    let m = members.len();
    let local: HashMap<EntityId, usize> = members.iter().enumerate().map(|(i, &e)| (e, i)).collect();

    let mut candidates: Vec<FeatureId> = members
        .iter()
        .flat_map(|&e| weights.row(e).iter().map(|&(c, _)| c))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    let pairs = pair_coefficients(sets, penalty);
    if pairs.is_empty() {
        return heaviest(&members, q, weights);
    }
    let mut coef = vec![0.0; m * m];
    for &(i, j, w) in &pairs {
        coef[i * m + j] = w;
        coef[j * m + i] = w;
    }
    let mut num = vec![0.0; m * m];
    let mut den = vec![0.0; m * m];

    // member-restricted columns
    let columns: Vec<Vec<(usize, f64)>> = candidates
        .iter()
        .map(|&c| {
            weights
                .column(c)
                .iter()
                .filter_map(|&(e, w)| local.get(&e).map(|&i| (i, w)))
                .collect()
        })
        .collect();

    let mut chosen = vec![false; candidates.len()];
    let mut selected = Vec::new();
    for _ in 0..q {
        let gains: Vec<f64> = (0..candidates.len())
            .into_par_iter()
            .map(|k| {
                if chosen[k] {
                    f64::NEG_INFINITY
                } else {
                    gain(&columns[k], m, &coef, &num, &den)
                }
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (k, &g) in gains.iter().enumerate() {
            if g > 0.0 && best.map_or(true, |(_, b)| g > b) {
                best = Some((k, g));
            }
        }
        let Some((k, _)) = best else { break };
        chosen[k] = true;
        selected.push(candidates[k]);
        apply(&columns[k], m, &mut num, &mut den);
    }
    selected.sort_unstable();
    selected
}

fn heaviest(members: &[EntityId], q: usize, weights: &FeatureWeights) -> Vec<FeatureId> {
    let mut totals: HashMap<FeatureId, f64> = HashMap::new();
    for &e in members {
        for &(c, w) in weights.row(e) {
            *totals.entry(c).or_insert(0.0) += w;
        }
    }
    let mut ranked: Vec<(FeatureId, f64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<FeatureId> = ranked.into_iter().take(q).map(|(c, _)| c).collect();
    out.sort_unstable();
    out
}

fn dense(column: &[(usize, f64)], m: usize) -> Vec<f64> {
    let mut w = vec![0.0; m];
    for &(i, x) in column {
        w[i] = x;
    }
    w
}

/// Objective change from adding one feature, touching only pairs with at
/// least one member that carries it.
fn gain(column: &[(usize, f64)], m: usize, coef: &[f64], num: &[f64], den: &[f64]) -> f64 {
    let w = dense(column, m);
    let mut delta = 0.0;
    for &(i, wi) in column {
        for j in 0..m {
            // pairs with both ends in the column are visited once
            if j == i || (w[j] > 0.0 && j < i) {
                continue;
            }
            let p = i * m + j;
            if coef[p] == 0.0 {
                continue;
            }
            let wj = w[j];
            let before = ratio(num[p], den[p]);
            let after = ratio(num[p] + wi.min(wj), den[p] + wi.max(wj));
            delta += coef[p] * (after - before);
        }
    }
    delta
}

fn apply(column: &[(usize, f64)], m: usize, num: &mut [f64], den: &mut [f64]) {
    let w = dense(column, m);
    for &(i, wi) in column {
        for j in 0..m {
            if j == i || (w[j] > 0.0 && j < i) {
                continue;
            }
            let (lo, hi) = (wi.min(w[j]), wi.max(w[j]));
            for p in [i * m + j, j * m + i] {
                num[p] += lo;
                den[p] += hi;
            }
        }
    }
}
