//! Seeded synthetic truth/predicted clusterings.
//!
//! Truth cluster sizes follow a power law `w_k = (k + 1)^-skew`, rescaled
//! to hit `n_instances` exactly with largest-remainder rounding. The
//! predicted clustering is derived from truth by splitting clusters at a
//! random cut point, then merging random pairs of the resulting clusters.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, so a config and seed reproduce the same partitions on
//! every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{validate, Clustering, CoverageMode, EvalPair, InstanceId, Role};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_instances: usize,
    pub n_truth_clusters: usize,
    /// 0 gives equal sizes; larger values concentrate instances in few clusters.
    pub size_skew: f64,
    /// Probability that a truth cluster of size ≥ 2 is split in two.
    pub split_rate: f64,
    /// Probability, per predicted cluster, of merging it with another one.
    pub merge_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_instances: 1000,
            n_truth_clusters: 100,
            size_skew: 1.0,
            split_rate: 0.1,
            merge_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("cannot place {n_instances} instances into {n_truth_clusters} non-empty clusters")]
    InfeasibleConfig {
        n_instances: usize,
        n_truth_clusters: usize,
    },
    #[error("{name} must lie in [0, 1], got {value}")]
    RateOutOfRange { name: &'static str, value: f64 },
    #[error("size skew must be finite and non-negative, got {0}")]
    InvalidSkew(f64),
}

impl SynthConfig {
    pub fn check(&self) -> Result<(), SynthError> {
        if self.n_truth_clusters == 0
            || self.n_truth_clusters > self.n_instances
            || self.n_instances > u32::MAX as usize
        {
            return Err(SynthError::InfeasibleConfig {
                n_instances: self.n_instances,
                n_truth_clusters: self.n_truth_clusters,
            });
        }
        for (name, value) in [
            ("split rate", self.split_rate),
            ("merge rate", self.merge_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::RateOutOfRange { name, value });
            }
        }
        if !(self.size_skew.is_finite() && self.size_skew >= 0.0) {
            return Err(SynthError::InvalidSkew(self.size_skew));
        }
        Ok(())
    }
}

/// Cluster sizes summing to `n`, each at least 1, decreasing with skew.
pub fn cluster_sizes(n: usize, k: usize, skew: f64) -> Vec<usize> {
    assert!(k >= 1 && k <= n);
    let rest = (n - k) as f64;
    let weights: Vec<f64> = (0..k).map(|i| ((i + 1) as f64).powf(-skew)).collect();
    let total: f64 = weights.iter().sum();
    let mut sizes = Vec::with_capacity(k);
    let mut remainders = Vec::with_capacity(k);
    let mut assigned = 0usize;
    for (i, w) in weights.iter().enumerate() {
        let quota = rest * w / total;
        let whole = quota.floor() as usize;
        sizes.push(1 + whole);
        remainders.push((quota - whole as f64, i));
        assigned += whole;
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(n - k - assigned) {
        sizes[i] += 1;
    }
    sizes
}

/// Clustering over ids `0..sum(sizes)` with consecutive ids per cluster.
pub fn clustering_from_sizes(role: Role, sizes: &[usize]) -> Clustering {
    let mut next = 0 as InstanceId;
    let clusters = sizes
        .iter()
        .map(|&s| {
            let c: Vec<InstanceId> = (next..next + s as InstanceId).collect();
            next += s as InstanceId;
            c
        })
        .collect();
    Clustering::new(role, clusters).expect("sizes describe a partition")
}

/// Copy of `clustering` with cluster `b` folded into cluster `a`.
pub fn merge_clusters(clustering: &Clustering, a: usize, b: usize) -> Clustering {
    assert_ne!(a, b);
    let mut clusters = clustering.clusters().to_vec();
    let moved = clusters[b].clone();
    clusters[a].extend(moved);
    clusters.remove(b);
    Clustering::new(clustering.role(), clusters).expect("merge keeps a partition")
}

/// Copy of `clustering` with cluster `index` cut into `[..at]` and `[at..]`.
pub fn split_cluster(clustering: &Clustering, index: usize, at: usize) -> Clustering {
    let mut clusters = clustering.clusters().to_vec();
    let tail = clusters[index].split_off(at);
    clusters.insert(index + 1, tail);
    Clustering::new(clustering.role(), clusters).expect("split keeps a partition")
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn generate(config: &SynthConfig) -> Result<EvalPair, SynthError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut ids: Vec<InstanceId> = (0..config.n_instances as InstanceId).collect();
    ids.shuffle(&mut rng);
    let sizes = cluster_sizes(
        config.n_instances,
        config.n_truth_clusters,
        config.size_skew,
    );
    let mut truth = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for s in sizes {
        truth.push(ids[offset..offset + s].to_vec());
        offset += s;
    }

    let mut parts: Vec<Vec<InstanceId>> = Vec::with_capacity(truth.len());
    for cluster in &truth {
        if cluster.len() >= 2 && rng.random_bool(config.split_rate) {
            let cut = rng.random_range(1..cluster.len());
            parts.push(cluster[..cut].to_vec());
            parts.push(cluster[cut..].to_vec());
        } else {
            parts.push(cluster.clone());
        }
    }

    let m = parts.len();
    let mut sets = DisjointSets::new(m);
    if m > 1 {
        for i in 0..m {
            if rng.random_bool(config.merge_rate) {
                let mut j = rng.random_range(0..m - 1);
                if j >= i {
                    j += 1;
                }
                sets.union(i, j);
            }
        }
    }
    let mut slot_of_root = vec![usize::MAX; m];
    let mut predicted: Vec<Vec<InstanceId>> = Vec::new();
    for (i, part) in parts.into_iter().enumerate() {
        let root = sets.find(i);
        if slot_of_root[root] == usize::MAX {
            slot_of_root[root] = predicted.len();
            predicted.push(Vec::new());
        }
        predicted[slot_of_root[root]].extend(part);
    }
    predicted.shuffle(&mut rng);

    let truth = Clustering::new(Role::Truth, truth).expect("generated truth is a partition");
    let predicted =
        Clustering::new(Role::Predicted, predicted).expect("generated prediction is a partition");
    Ok(validate(truth, predicted, CoverageMode::Strict).expect("generated pair covers truth"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::single_pass::eval_all;

    #[test]
    fn sizes_hit_total_exactly() {
        for (n, k, skew) in [
            (8, 3, 0.0),
            (1000, 7, 1.5),
            (10, 10, 3.0),
            (1_200_000, 15_000, 1.0),
        ] {
            let sizes = cluster_sizes(n, k, skew);
            assert_eq!(sizes.len(), k);
            assert_eq!(sizes.iter().sum::<usize>(), n);
            assert!(sizes.iter().all(|&s| s >= 1));
        }
        assert_eq!(cluster_sizes(8, 3, 0.0), vec![3, 3, 2]);
        let skewed = cluster_sizes(1000, 10, 2.0);
        assert!(skewed.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reproduces_table3_shapes() {
        let truth = clustering_from_sizes(Role::Truth, &[3, 2, 3]);
        let predicted = merge_clusters(&truth, 1, 2).with_role(Role::Predicted);
        let shape: Vec<usize> = predicted.clusters().iter().map(Vec::len).collect();
        assert_eq!(shape, vec![3, 5]);
        let pair = validate(truth, predicted, CoverageMode::Strict).unwrap();
        let r = eval_all(&pair);
        assert_eq!(r.cluster_f.recall, 1.0 / 3.0);
        assert_eq!(r.pairwise.precision, 7.0 / 13.0);
    }

    #[test]
    fn split_then_merge_helpers() {
        let truth = clustering_from_sizes(Role::Truth, &[4]);
        let split = split_cluster(&truth, 0, 1);
        assert_eq!(split.clusters(), &[vec![0], vec![1, 2, 3]]);
        assert!(merge_clusters(&split, 0, 1).same_partition(&truth));
    }

    #[test]
    fn no_perturbation_is_identity() {
        let pair = generate(&SynthConfig {
            split_rate: 0.0,
            merge_rate: 0.0,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(pair.truth().same_partition(pair.predicted()));
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig {
            split_rate: 0.4,
            merge_rate: 0.3,
            seed: 99,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.truth(), b.truth());
        assert_eq!(a.predicted(), b.predicted());
        let c = generate(&SynthConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.truth(), c.truth());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = SynthConfig {
            n_instances: 3,
            n_truth_clusters: 4,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate(&bad),
            Err(SynthError::InfeasibleConfig { .. })
        ));
        let bad = SynthConfig {
            split_rate: 1.5,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate(&bad),
            Err(SynthError::RateOutOfRange { .. })
        ));
        let bad = SynthConfig {
            size_skew: -1.0,
            ..SynthConfig::default()
        };
        assert!(matches!(generate(&bad), Err(SynthError::InvalidSkew(_))));
    }

    #[test]
    fn full_split_and_merge_rates() {
        let pair = generate(&SynthConfig {
            n_instances: 200,
            n_truth_clusters: 20,
            split_rate: 1.0,
            merge_rate: 1.0,
            seed: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_eq!(pair.predicted().n_instances(), 200);
    }
}
