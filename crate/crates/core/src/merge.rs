//! Greedy merging of proximal clusters.
//!
//! Two clusters are proximal when the Manhattan distance between their
//! centroids is below `epsilon`. The globally closest pair is merged first,
//! one pair at a time, until no proximal pair remains.

use crate::{Cluster, Error, Feature, Result};

pub fn manhattan(a: Feature, b: Feature) -> f64 {
    a.manhattan(b)
}

/// Merges two disjoint clusters. The centroid is the size-weighted mean of
/// the two centroids; members of `b` are appended after those of `a`.
pub fn merge_pair(a: Cluster, b: Cluster) -> Cluster {
    let (na, nb) = (a.size() as f64, b.size() as f64);
    let total = na + nb;
    let centroid = Feature([
        (na * a.centroid[0] + nb * b.centroid[0]) / total,
        (na * a.centroid[1] + nb * b.centroid[1]) / total,
        (na * a.centroid[2] + nb * b.centroid[2]) / total,
    ]);
    let mut members = a.members;
    members.extend(b.members);
    Cluster { centroid, members }
}

/// One merge step. Indices are positions in the cluster list as it stood
/// just before the merge (`index_a < index_b`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeRecord {
    pub index_a: usize,
    pub index_b: usize,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeResult {
    pub clusters: Vec<Cluster>,
    pub k: usize,
    pub centroids: Vec<Feature>,
    pub merge_log: Vec<MergeRecord>,
}

/// Repeatedly merges the closest centroid pair while its distance is below
/// `epsilon`.
///
/// Ties between equally close pairs go to the lexicographically smallest
/// `(index_a, index_b)`. The merged cluster takes the lower position and the
/// list is compacted. The result is the same as rescanning every pair after
/// each merge; each slot caches its nearest higher-indexed partner so that
/// only rows touched by a merge are rescanned.
pub fn merge_proximal_clusters(clusters: Vec<Cluster>, epsilon: f64) -> Result<MergeResult> {
    if clusters.is_empty() {
        return Err(Error::EmptyInput);
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::Config(format!("epsilon {epsilon} must be >= 0")));
    }

    let n = clusters.len();
    let mut slots: Vec<Option<Cluster>> = clusters.into_iter().map(Some).collect();
    let centroid = |slots: &[Option<Cluster>], i: usize| slots[i].as_ref().map(|c| c.centroid);

    // best[i]: closest active partner j > i as (distance, j).
    let row_best = |slots: &[Option<Cluster>], i: usize| -> Option<(f64, usize)> {
        let ci = centroid(slots, i)?;
        let mut best: Option<(f64, usize)> = None;
        for (j, s) in slots.iter().enumerate().skip(i + 1) {
            if let Some(c) = s {
                let d = ci.manhattan(c.centroid);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
        }
        best
    };
    let mut best: Vec<Option<(f64, usize)>> = (0..n).map(|i| row_best(&slots, i)).collect();

    let mut merge_log = Vec::new();
    loop {
        let mut pick: Option<(f64, usize, usize)> = None;
        for (i, b) in best.iter().enumerate() {
            if let Some((d, j)) = *b {
                if pick.is_none_or(|(pd, _, _)| d < pd) {
                    pick = Some((d, i, j));
                }
            }
        }
        let Some((distance, a, b)) = pick else { break };
        if distance >= epsilon {
            break;
        }

        let index_a = slots[..a].iter().filter(|s| s.is_some()).count();
        let index_b = index_a + 1 + slots[a + 1..b].iter().filter(|s| s.is_some()).count();
        merge_log.push(MergeRecord { index_a, index_b, distance });

        let ca = slots[a].take().expect("active slot");
        let cb = slots[b].take().expect("active slot");
        slots[a] = Some(merge_pair(ca, cb));
        best[b] = None;
        best[a] = row_best(&slots, a);

        let merged = slots[a].as_ref().map(|c| c.centroid).expect("merged slot");
        for r in 0..b {
            if r == a || slots[r].is_none() {
                continue;
            }
            match best[r] {
                Some((_, p)) if p == a || p == b => best[r] = row_best(&slots, r),
                Some((bd, p)) if r < a => {
                    let d = centroid(&slots, r).expect("active slot").manhattan(merged);
                    if d < bd || (d == bd && a < p) {
                        best[r] = Some((d, a));
                    }
                }
                _ => {}
            }
        }
    }

    let clusters: Vec<Cluster> = slots.into_iter().flatten().collect();
    let centroids = clusters.iter().map(|c| c.centroid).collect();
    Ok(MergeResult { k: clusters.len(), centroids, clusters, merge_log })
}
