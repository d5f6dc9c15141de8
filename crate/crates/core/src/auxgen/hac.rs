//! Complete-linkage agglomerative clustering that halts before the first
//! merge joining a seed with a non-seed point.

/// One executed (or refused) merge. Clusters are named by their smallest
/// member index.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HacOutcome {
    pub merges: Vec<Merge>,
    /// The merge that was refused because it would mix seeds and non-seeds.
    pub halted: Option<Merge>,
    /// Clusters alive when merging stopped, members ascending, ordered by
    /// smallest member.
    pub clusters: Vec<Vec<usize>>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Cluster `points` bottom-up. At each step the closest pair of clusters
/// (maximum pairwise distance) is merged; ties go to the lexicographically
/// smallest `(left, right)`. Cluster distances are maintained with the
/// complete-linkage update `d(a ∪ b, k) = max(d(a, k), d(b, k))`.
pub fn complete_linkage_with_seed_stop(points: &[Vec<f64>], is_seed: &[bool]) -> HacOutcome {
    let n = points.len();
    assert_eq!(n, is_seed.len());
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(&points[i], &points[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut active = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut has_seed: Vec<bool> = is_seed.to_vec();
    let mut has_other: Vec<bool> = is_seed.iter().map(|s| !s).collect();
    let mut merges = Vec::new();
    let mut halted = None;

    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in a + 1..n {
                if !active[b] {
                    continue;
                }
                let d = dist[a * n + b];
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((a, b, d));
                }
            }
        }
        let Some((a, b, d)) = best else { break };
        let merge = Merge {
            left: a,
            right: b,
            distance: d,
        };
        let seed = has_seed[a] || has_seed[b];
        let other = has_other[a] || has_other[b];
        if seed && other {
            halted = Some(merge);
            break;
        }
        merges.push(merge);
        for k in 0..n {
            if active[k] && k != a && k != b {
                let m = dist[a * n + k].max(dist[b * n + k]);
                dist[a * n + k] = m;
                dist[k * n + a] = m;
            }
        }
        active[b] = false;
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        members[a].sort_unstable();
        has_seed[a] = seed;
        has_other[a] = other;
    }

    let clusters = (0..n).filter(|&i| active[i]).map(|i| members[i].clone()).collect();
    HacOutcome {
        merges,
        halted,
        clusters,
    }
}
