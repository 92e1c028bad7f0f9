//! Linear-time evaluation through two hash tables.
//!
//! Predicted clusters are indexed once (`instance -> cluster index`, plus
//! cluster sizes). Each truth cluster is then tallied into a small map of
//! `predicted index -> overlap count`; every measure is a fold over those
//! tallies. The per-measure evaluators and [`eval_all`] share the same fold
//! so their results agree bit for bit.

use indexmap::IndexMap;
use thiserror::Error;

use crate::model::{
    prefer_lump_candidate, Clustering, EvalPair, Flag, FullReport, InstanceId, Measure,
    MeasureOutcome, MetricTriple, SeLe, Stats,
};

const UNINDEXED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SinglePassError {
    #[error("instance {0} is not indexed in the predicted clustering")]
    UnindexedInstance(InstanceId),
}

/// Number of unordered pairs in a `k`-element set.
#[inline]
pub fn pair_count(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

/// Lookup tables built from the predicted clustering.
#[derive(Debug, Clone)]
pub struct PredictedIndex {
    p_index: Vec<u32>,
    c_size: Vec<u64>,
    pair_pr_sum: u64,
}

impl PredictedIndex {
    /// Predicted cluster index of `instance`, if it is indexed.
    pub fn cluster_of(&self, instance: InstanceId) -> Option<usize> {
        match self.p_index.get(instance as usize) {
            Some(&i) if i != UNINDEXED => Some(i as usize),
            _ => None,
        }
    }

    pub fn c_size(&self) -> &[u64] {
        &self.c_size
    }

    pub fn pair_pr_sum(&self) -> u64 {
        self.pair_pr_sum
    }
}

pub fn index_predicted(predicted: &Clustering) -> PredictedIndex {
    let mut p_index = vec![UNINDEXED; predicted.id_bound()];
    let mut c_size = Vec::with_capacity(predicted.n_clusters());
    let mut pair_pr_sum = 0u64;
    for (i, cluster) in predicted.clusters().iter().enumerate() {
        for &p in cluster {
            p_index[p as usize] = i as u32;
        }
        let size = cluster.len() as u64;
        c_size.push(size);
        pair_pr_sum += pair_count(size);
    }
    PredictedIndex {
        p_index,
        c_size,
        pair_pr_sum,
    }
}

/// Overlap counts of one truth cluster against the predicted clusters.
///
/// `t_map` iterates in first-seen order. `max_key`/`max_val` pick the
/// largest overlap using [`prefer_lump_candidate`].
#[derive(Debug, Clone)]
pub struct TruthTally {
    pub t_map: IndexMap<usize, u64>,
    pub max_key: usize,
    pub max_val: u64,
}

pub fn tally_truth(
    truth_cluster: &[InstanceId],
    idx: &PredictedIndex,
) -> Result<TruthTally, SinglePassError> {
    let mut t_map: IndexMap<usize, u64> = IndexMap::new();
    for &t in truth_cluster {
        let i = idx
            .cluster_of(t)
            .ok_or(SinglePassError::UnindexedInstance(t))?;
        *t_map.entry(i).or_insert(0) += 1;
    }
    let mut best: Option<(u64, u64, usize)> = None;
    for (&key, &value) in &t_map {
        let candidate = (value, idx.c_size[key], key);
        if prefer_lump_candidate(candidate, best) {
            best = Some(candidate);
        }
    }
    let (max_val, _, max_key) = best.unwrap_or((0, 0, 0));
    Ok(TruthTally {
        t_map,
        max_key,
        max_val,
    })
}

#[derive(Debug, Clone, Copy)]
struct Parts {
    cluster_f: bool,
    purity: bool,
    se_le: bool,
    pairwise: bool,
}

impl Parts {
    const ALL: Parts = Parts {
        cluster_f: true,
        purity: true,
        se_le: true,
        pairwise: true,
    };
    const NONE: Parts = Parts {
        cluster_f: false,
        purity: false,
        se_le: false,
        pairwise: false,
    };
}

/// Running totals for every measure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Accumulators {
    pub c_match: u64,
    pub inst_sum: u64,
    pub aap_sum: f64,
    pub acp_sum: f64,
    pub sp_sum: u64,
    pub lm_sum: u64,
    pub inst_tr_sum: u64,
    pub inst_pr_sum: u64,
    pub pair_tr_sum: u64,
    pub pair_pr_sum: u64,
    pub pair_int_sum: u64,
}

impl Accumulators {
    fn absorb(&mut self, parts: Parts, tj: u64, tally: &TruthTally, idx: &PredictedIndex) {
        self.inst_sum += tj;
        if parts.pairwise {
            self.pair_tr_sum += pair_count(tj);
        }
        let tj_f = tj as f64;
        for (&key, &value) in &tally.t_map {
            if parts.cluster_f && value == tj && idx.c_size[key] == tj {
                self.c_match += 1;
            }
            if parts.purity {
                let sq = (value * value) as f64;
                self.aap_sum += sq / tj_f;
                self.acp_sum += sq / idx.c_size[key] as f64;
            }
            if parts.pairwise {
                self.pair_int_sum += pair_count(value);
            }
        }
        if parts.se_le {
            let lumped_into = idx.c_size[tally.max_key];
            self.sp_sum += tj - tally.max_val;
            self.lm_sum += lumped_into - tally.max_val;
            self.inst_tr_sum += tj;
            self.inst_pr_sum += lumped_into;
        }
    }
}

fn accumulate(pair: &EvalPair, parts: Parts) -> Accumulators {
    let idx = index_predicted(pair.predicted());
    let mut acc = Accumulators {
        pair_pr_sum: idx.pair_pr_sum,
        ..Accumulators::default()
    };
    for tj in pair.truth().clusters() {
        let tally = tally_truth(tj, &idx).expect("validated pair covers every truth instance");
        acc.absorb(parts, tj.len() as u64, &tally, &idx);
    }
    acc
}

/// One pass populating every accumulator.
pub fn accumulate_all(pair: &EvalPair) -> Accumulators {
    accumulate(pair, Parts::ALL)
}

fn ratio(num: u64, den: u64) -> f64 {
    num as f64 / den as f64
}

fn cluster_f_from(acc: &Accumulators, pair: &EvalPair) -> MetricTriple {
    MetricTriple::harmonic(
        ratio(acc.c_match, pair.truth().n_clusters() as u64),
        ratio(acc.c_match, pair.predicted().n_clusters() as u64),
    )
}

fn purity_from(acc: &Accumulators) -> (f64, f64) {
    let n = acc.inst_sum as f64;
    (acc.aap_sum / n, acc.acp_sum / n)
}

fn se_le_from(acc: &Accumulators) -> SeLe {
    SeLe::from_errors(
        ratio(acc.sp_sum, acc.inst_tr_sum),
        ratio(acc.lm_sum, acc.inst_pr_sum),
    )
}

fn pairwise_from(acc: &Accumulators, flags: &mut Vec<Flag>) -> MetricTriple {
    let recall = if acc.pair_tr_sum == 0 {
        flags.push(Flag::PairwiseRecallVacuous);
        1.0
    } else {
        ratio(acc.pair_int_sum, acc.pair_tr_sum)
    };
    let precision = if acc.pair_pr_sum == 0 {
        flags.push(Flag::PairwisePrecisionVacuous);
        1.0
    } else {
        ratio(acc.pair_int_sum, acc.pair_pr_sum)
    };
    MetricTriple::harmonic(recall, precision)
}

pub fn eval_cluster_f(pair: &EvalPair) -> MetricTriple {
    let acc = accumulate(
        pair,
        Parts {
            cluster_f: true,
            ..Parts::NONE
        },
    );
    cluster_f_from(&acc, pair)
}

fn eval_purity(pair: &EvalPair) -> (f64, f64) {
    let acc = accumulate(
        pair,
        Parts {
            purity: true,
            ..Parts::NONE
        },
    );
    purity_from(&acc)
}

/// AAP as recall, ACP as precision, geometric mean.
pub fn eval_k_metric(pair: &EvalPair) -> MetricTriple {
    let (aap, acp) = eval_purity(pair);
    MetricTriple::geometric(aap, acp)
}

/// B-cubed recall and precision reduce to AAP and ACP; only the mean differs.
pub fn eval_b_cubed(pair: &EvalPair) -> MetricTriple {
    let (aap, acp) = eval_purity(pair);
    MetricTriple::harmonic(aap, acp)
}

pub fn eval_se_le(pair: &EvalPair) -> SeLe {
    let acc = accumulate(
        pair,
        Parts {
            se_le: true,
            ..Parts::NONE
        },
    );
    se_le_from(&acc)
}

/// Pairwise-F with the degenerate-denominator flags it raised.
pub fn eval_pairwise_flagged(pair: &EvalPair) -> (MetricTriple, Vec<Flag>) {
    let acc = accumulate(
        pair,
        Parts {
            pairwise: true,
            ..Parts::NONE
        },
    );
    let mut flags = Vec::new();
    let triple = pairwise_from(&acc, &mut flags);
    (triple, flags)
}

pub fn eval_pairwise(pair: &EvalPair) -> MetricTriple {
    eval_pairwise_flagged(pair).0
}

pub fn eval_all(pair: &EvalPair) -> FullReport {
    let acc = accumulate_all(pair);
    let mut flags = Vec::new();
    let cluster_f = cluster_f_from(&acc, pair);
    let (aap, acp) = purity_from(&acc);
    let se_le = se_le_from(&acc);
    let pairwise = pairwise_from(&acc, &mut flags);
    if !pair.extra_in_predicted().is_empty() {
        flags.push(Flag::ExtraPredictedInstances(
            pair.extra_in_predicted().len(),
        ));
    }
    FullReport {
        cluster_f,
        k_metric: MetricTriple::geometric(aap, acp),
        b_cubed: MetricTriple::harmonic(aap, acp),
        se_le,
        pairwise,
        stats: Stats {
            truth_clusters: pair.truth().n_clusters() as u64,
            predicted_clusters: pair.predicted().n_clusters() as u64,
            instances: acc.inst_sum,
            pair_tr_sum: acc.pair_tr_sum,
            pair_pr_sum: acc.pair_pr_sum,
            pair_int_sum: acc.pair_int_sum,
        },
        flags,
    }
}

/// Evaluates one measure, returning any flags it raised.
pub fn eval_one(pair: &EvalPair, measure: Measure) -> (MeasureOutcome, Vec<Flag>) {
    let mut flags = Vec::new();
    let outcome = match measure {
        Measure::ClusterF => MeasureOutcome::Triple(eval_cluster_f(pair)),
        Measure::KMetric => MeasureOutcome::Triple(eval_k_metric(pair)),
        Measure::BCubed => MeasureOutcome::Triple(eval_b_cubed(pair)),
        Measure::SeLe => MeasureOutcome::SeLe(eval_se_le(pair)),
        Measure::Pairwise => {
            let (t, f) = eval_pairwise_flagged(pair);
            flags = f;
            MeasureOutcome::Triple(t)
        }
    };
    if !pair.extra_in_predicted().is_empty() {
        flags.push(Flag::ExtraPredictedInstances(
            pair.extra_in_predicted().len(),
        ));
    }
    (outcome, flags)
}
