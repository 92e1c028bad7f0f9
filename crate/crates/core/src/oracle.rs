//! Naive reference implementations of the five measures.
//!
//! Each function follows the textbook definition directly: clusters are
//! compared as sets, intersections are counted explicitly, B-cubed walks
//! every instance and Pairwise-F materialises the pair sets. They are slow
//! on purpose and serve as ground truth for the single-pass engine.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::model::{
    prefer_lump_candidate, EvalPair, Flag, FullReport, InstanceId, Measure, MeasureOutcome,
    MetricTriple, SeLe, Stats,
};

/// Default cap on the number of materialised pairs.
pub const DEFAULT_PAIR_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("pairwise oracle needs {needed} pairs, over the budget of {budget}")]
    PairBudgetExceeded { needed: u64, budget: u64 },
}

/// Unordered instance pairs, stored with the lower id first.
#[derive(Debug, Clone, Default)]
pub struct PairSet {
    pairs: HashSet<(InstanceId, InstanceId)>,
}

impl PairSet {
    pub fn from_clusters<'a>(clusters: impl IntoIterator<Item = &'a Vec<InstanceId>>) -> Self {
        let mut pairs = HashSet::new();
        for cluster in clusters {
            for (a_pos, &a) in cluster.iter().enumerate() {
                for &b in &cluster[a_pos + 1..] {
                    pairs.insert(if a < b { (a, b) } else { (b, a) });
                }
            }
        }
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: InstanceId, b: InstanceId) -> bool {
        self.pairs.contains(&if a < b { (a, b) } else { (b, a) })
    }

    pub fn intersection_len(&self, other: &PairSet) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .pairs
            .iter()
            .filter(|p| large.pairs.contains(p))
            .count()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(InstanceId, InstanceId)> {
        self.pairs.iter()
    }
}

fn as_sets(clusters: &[Vec<InstanceId>]) -> Vec<HashSet<InstanceId>> {
    clusters
        .iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn intersection_size(a: &HashSet<InstanceId>, b: &HashSet<InstanceId>) -> usize {
    a.iter().filter(|x| b.contains(x)).count()
}

/// Counts predicted clusters equal, as sets, to some truth cluster.
pub fn oracle_cluster_f(pair: &EvalPair) -> MetricTriple {
    let truth = as_sets(pair.truth().clusters());
    let predicted = as_sets(pair.predicted().clusters());
    let mut matches = 0usize;
    for p in &predicted {
        for t in &truth {
            if p == t {
                matches += 1;
            }
        }
    }
    MetricTriple::harmonic(
        matches as f64 / truth.len() as f64,
        matches as f64 / predicted.len() as f64,
    )
}

/// AAP and ACP in their original summation orders: truth then predicted for
/// AAP, predicted then truth for ACP.
fn average_purities(pair: &EvalPair) -> (f64, f64) {
    let truth = as_sets(pair.truth().clusters());
    let predicted = as_sets(pair.predicted().clusters());
    let n = pair.n_instances() as f64;

    let mut aap = 0.0;
    for t in &truth {
        for p in &predicted {
            let n_ij = intersection_size(p, t) as f64;
            aap += n_ij * n_ij / t.len() as f64;
        }
    }
    let mut acp = 0.0;
    for p in &predicted {
        for t in &truth {
            let n_ij = intersection_size(p, t) as f64;
            acp += n_ij * n_ij / p.len() as f64;
        }
    }
    (aap / n, acp / n)
}

pub fn oracle_k_metric(pair: &EvalPair) -> MetricTriple {
    let (aap, acp) = average_purities(pair);
    MetricTriple::geometric(aap, acp)
}

/// Per-instance B-cubed: for every truth instance, intersect the truth and
/// predicted clusters that contain it.
pub fn oracle_b_cubed(pair: &EvalPair) -> MetricTriple {
    let truth = as_sets(pair.truth().clusters());
    let predicted = as_sets(pair.predicted().clusters());
    let truth_of: HashMap<InstanceId, usize> = pair
        .truth()
        .clusters()
        .iter()
        .enumerate()
        .flat_map(|(j, c)| c.iter().map(move |&x| (x, j)))
        .collect();
    let predicted_of: HashMap<InstanceId, usize> = pair
        .predicted()
        .clusters()
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&x| (x, i)))
        .collect();

    let mut recall_sum = 0.0;
    let mut precision_sum = 0.0;
    for cluster in pair.truth().clusters() {
        for t in cluster {
            let tt = &truth[truth_of[t]];
            let pt = &predicted[predicted_of[t]];
            let overlap = intersection_size(pt, tt) as f64;
            recall_sum += overlap / tt.len() as f64;
            precision_sum += overlap / pt.len() as f64;
        }
    }
    let n = pair.n_instances() as f64;
    MetricTriple::harmonic(recall_sum / n, precision_sum / n)
}

/// SE and LE from explicit set differences against the best-overlapping
/// predicted cluster of each truth cluster.
pub fn oracle_se_le(pair: &EvalPair) -> SeLe {
    let predicted = as_sets(pair.predicted().clusters());
    let mut split = 0usize;
    let mut split_den = 0usize;
    let mut lumped = 0usize;
    let mut lumped_den = 0usize;
    for ta in as_sets(pair.truth().clusters()) {
        let mut best: Option<(u64, u64, usize)> = None;
        for (i, p) in predicted.iter().enumerate() {
            let overlap = intersection_size(p, &ta) as u64;
            if overlap == 0 {
                continue;
            }
            let candidate = (overlap, p.len() as u64, i);
            if prefer_lump_candidate(candidate, best) {
                best = Some(candidate);
            }
        }
        let (_, _, a) = best.expect("every truth instance has a predicted cluster");
        let pa = &predicted[a];
        split += ta.iter().filter(|x| !pa.contains(x)).count();
        lumped += pa.iter().filter(|x| !ta.contains(x)).count();
        split_den += ta.len();
        lumped_den += pa.len();
    }
    SeLe::from_errors(
        split as f64 / split_den as f64,
        lumped as f64 / lumped_den as f64,
    )
}

/// Pairs that enumerating both clusterings would materialise.
pub fn pair_demand(pair: &EvalPair) -> u64 {
    let count = |k: usize| {
        let k = k as u64;
        k * k.saturating_sub(1) / 2
    };
    pair.truth()
        .clusters()
        .iter()
        .chain(pair.predicted().clusters())
        .map(|c| count(c.len()))
        .sum()
}

struct PairwiseCounts {
    truth: u64,
    predicted: u64,
    shared: u64,
}

fn pairwise_counts(pair: &EvalPair, budget: u64) -> Result<PairwiseCounts, OracleError> {
    let needed = pair_demand(pair);
    if needed > budget {
        return Err(OracleError::PairBudgetExceeded { needed, budget });
    }
    let truth = PairSet::from_clusters(pair.truth().clusters());
    let predicted = PairSet::from_clusters(pair.predicted().clusters());
    Ok(PairwiseCounts {
        truth: truth.len() as u64,
        predicted: predicted.len() as u64,
        shared: truth.intersection_len(&predicted) as u64,
    })
}

fn pairwise_from(c: &PairwiseCounts, flags: &mut Vec<Flag>) -> MetricTriple {
    let recall = if c.truth == 0 {
        flags.push(Flag::PairwiseRecallVacuous);
        1.0
    } else {
        c.shared as f64 / c.truth as f64
    };
    let precision = if c.predicted == 0 {
        flags.push(Flag::PairwisePrecisionVacuous);
        1.0
    } else {
        c.shared as f64 / c.predicted as f64
    };
    MetricTriple::harmonic(recall, precision)
}

pub fn oracle_pairwise_flagged(
    pair: &EvalPair,
    budget: u64,
) -> Result<(MetricTriple, Vec<Flag>), OracleError> {
    let counts = pairwise_counts(pair, budget)?;
    let mut flags = Vec::new();
    let triple = pairwise_from(&counts, &mut flags);
    Ok((triple, flags))
}

pub fn oracle_pairwise(pair: &EvalPair, budget: u64) -> Result<MetricTriple, OracleError> {
    oracle_pairwise_flagged(pair, budget).map(|(t, _)| t)
}

/// All five oracles, run one after another.
pub fn oracle_all(pair: &EvalPair, budget: u64) -> Result<FullReport, OracleError> {
    let counts = pairwise_counts(pair, budget)?;
    let mut flags = Vec::new();
    let pairwise = pairwise_from(&counts, &mut flags);
    if !pair.extra_in_predicted().is_empty() {
        flags.push(Flag::ExtraPredictedInstances(
            pair.extra_in_predicted().len(),
        ));
    }
    Ok(FullReport {
        cluster_f: oracle_cluster_f(pair),
        k_metric: oracle_k_metric(pair),
        b_cubed: oracle_b_cubed(pair),
        se_le: oracle_se_le(pair),
        pairwise,
        stats: Stats {
            truth_clusters: pair.truth().n_clusters() as u64,
            predicted_clusters: pair.predicted().n_clusters() as u64,
            instances: pair.n_instances() as u64,
            pair_tr_sum: counts.truth,
            pair_pr_sum: counts.predicted,
            pair_int_sum: counts.shared,
        },
        flags,
    })
}

pub fn oracle_one(
    pair: &EvalPair,
    measure: Measure,
    budget: u64,
) -> Result<(MeasureOutcome, Vec<Flag>), OracleError> {
    let mut flags = Vec::new();
    let outcome = match measure {
        Measure::ClusterF => MeasureOutcome::Triple(oracle_cluster_f(pair)),
        Measure::KMetric => MeasureOutcome::Triple(oracle_k_metric(pair)),
        Measure::BCubed => MeasureOutcome::Triple(oracle_b_cubed(pair)),
        Measure::SeLe => MeasureOutcome::SeLe(oracle_se_le(pair)),
        Measure::Pairwise => {
            let (t, f) = oracle_pairwise_flagged(pair, budget)?;
            flags = f;
            MeasureOutcome::Triple(t)
        }
    };
    if !pair.extra_in_predicted().is_empty() {
        flags.push(Flag::ExtraPredictedInstances(
            pair.extra_in_predicted().len(),
        ));
    }
    Ok((outcome, flags))
}
