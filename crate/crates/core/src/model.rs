//! Clustering data model shared by every evaluator.
//!
//! Instance identifiers arrive as opaque text and are interned into dense
//! `u32` indices (`0..n`) so the evaluators can use array-backed lookups.
//! A [`Clustering`] is a partition of such indices; an [`EvalPair`] is a
//! truth/predicted pair that has passed coverage validation.

use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense instance index produced by an [`Interner`].
pub type InstanceId = u32;

/// Bijection between raw instance labels and dense indices.
#[derive(Debug, Default, Clone)]
pub struct Interner {
    labels: IndexSet<String>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interner whose labels are the decimal renderings of `0..n`.
    pub fn numeric(n: usize) -> Self {
        let mut interner = Self::new();
        for i in 0..n {
            interner.intern(&i.to_string());
        }
        interner
    }

    pub fn intern(&mut self, raw: &str) -> InstanceId {
        if let Some(idx) = self.labels.get_index_of(raw) {
            return idx as InstanceId;
        }
        let (idx, _) = self.labels.insert_full(raw.to_owned());
        idx as InstanceId
    }

    pub fn get(&self, raw: &str) -> Option<InstanceId> {
        self.labels.get_index_of(raw).map(|i| i as InstanceId)
    }

    /// Raw label of a dense id. Unknown ids render as `#<id>`.
    pub fn label(&self, id: InstanceId) -> String {
        match self.labels.get_index(id as usize) {
            Some(s) => s.clone(),
            None => format!("#{id}"),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Truth,
    Predicted,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Truth => f.write_str("truth"),
            Role::Predicted => f.write_str("predicted"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    /// Truth and predicted must cover exactly the same instances.
    #[default]
    Strict,
    /// Predicted may contain instances absent from truth.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{role} clustering has no clusters")]
    EmptyClustering { role: Role },
    #[error("{role} cluster {index} is empty")]
    EmptyCluster { role: Role, index: usize },
    #[error("instance {instance} appears in two {role} clusters ({first} and {second})")]
    DuplicateInstance {
        role: Role,
        instance: InstanceId,
        first: usize,
        second: usize,
    },
    #[error("truth instance {instance} is missing from the predicted clustering")]
    MissingFromPredicted { instance: InstanceId },
    #[error("predicted instance {instance} does not appear in the truth clustering")]
    ExtraInPredicted { instance: InstanceId },
}

impl ModelError {
    /// Same message as `Display`, with dense ids replaced by their raw labels.
    pub fn describe(&self, interner: &Interner) -> String {
        match self {
            ModelError::DuplicateInstance {
                role,
                instance,
                first,
                second,
            } => format!(
                "instance {:?} appears in two {role} clusters ({first} and {second})",
                interner.label(*instance)
            ),
            ModelError::MissingFromPredicted { instance } => format!(
                "truth instance {:?} is missing from the predicted clustering",
                interner.label(*instance)
            ),
            ModelError::ExtraInPredicted { instance } => format!(
                "predicted instance {:?} does not appear in the truth clustering",
                interner.label(*instance)
            ),
            other => other.to_string(),
        }
    }
}

/// A partition of dense instance ids into disjoint, non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    role: Role,
    clusters: Vec<Vec<InstanceId>>,
    n_instances: usize,
    /// One past the largest id present.
    id_bound: usize,
}

impl Clustering {
    pub fn new(role: Role, clusters: Vec<Vec<InstanceId>>) -> Result<Self, ModelError> {
        let id_bound = clusters
            .iter()
            .flatten()
            .map(|&id| id as usize + 1)
            .max()
            .unwrap_or(0);
        let mut owner = vec![usize::MAX; id_bound];
        let mut n_instances = 0;
        for (index, cluster) in clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(ModelError::EmptyCluster { role, index });
            }
            for &id in cluster {
                let slot = &mut owner[id as usize];
                if *slot != usize::MAX {
                    return Err(ModelError::DuplicateInstance {
                        role,
                        instance: id,
                        first: *slot,
                        second: index,
                    });
                }
                *slot = index;
            }
            n_instances += cluster.len();
        }
        Ok(Self {
            role,
            clusters,
            n_instances,
            id_bound,
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn clusters(&self) -> &[Vec<InstanceId>] {
        &self.clusters
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn id_bound(&self) -> usize {
        self.id_bound
    }

    /// Same clustering with a different role tag.
    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Canonical form for order-insensitive comparison: members sorted,
    /// clusters sorted.
    pub fn canonical(&self) -> Vec<Vec<InstanceId>> {
        let mut out: Vec<Vec<InstanceId>> = self
            .clusters
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// True when both clusterings describe the same partition.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        self.n_instances == other.n_instances && self.canonical() == other.canonical()
    }
}

/// A validated truth/predicted pair.
#[derive(Debug, Clone)]
pub struct EvalPair {
    truth: Clustering,
    predicted: Clustering,
    mode: CoverageMode,
    universe: usize,
    extra_in_predicted: Vec<InstanceId>,
}

impl EvalPair {
    pub fn truth(&self) -> &Clustering {
        &self.truth
    }

    pub fn predicted(&self) -> &Clustering {
        &self.predicted
    }

    pub fn mode(&self) -> CoverageMode {
        self.mode
    }

    /// One past the largest dense id in either clustering.
    pub fn universe(&self) -> usize {
        self.universe
    }

    /// N: the number of truth instances.
    pub fn n_instances(&self) -> usize {
        self.truth.n_instances()
    }

    /// Predicted-only instances tolerated in lenient mode, in predicted order.
    pub fn extra_in_predicted(&self) -> &[InstanceId] {
        &self.extra_in_predicted
    }

    /// Pair with roles exchanged, validated under the same mode.
    pub fn swapped(&self) -> Result<EvalPair, ModelError> {
        validate(
            self.predicted.clone().with_role(Role::Truth),
            self.truth.clone().with_role(Role::Predicted),
            self.mode,
        )
    }
}

/// Checks coverage between truth and predicted.
///
/// Missing truth instances are always fatal. Predicted-only instances are
/// fatal in strict mode and recorded on the pair in lenient mode.
pub fn validate(
    truth: Clustering,
    predicted: Clustering,
    mode: CoverageMode,
) -> Result<EvalPair, ModelError> {
    for c in [&truth, &predicted] {
        if c.n_clusters() == 0 {
            return Err(ModelError::EmptyClustering { role: c.role() });
        }
    }
    let universe = truth.id_bound().max(predicted.id_bound());
    let mut in_predicted = vec![false; universe];
    for &id in predicted.clusters().iter().flatten() {
        in_predicted[id as usize] = true;
    }
    let mut in_truth = vec![false; universe];
    for &id in truth.clusters().iter().flatten() {
        if !in_predicted[id as usize] {
            return Err(ModelError::MissingFromPredicted { instance: id });
        }
        in_truth[id as usize] = true;
    }
    let mut extra_in_predicted = Vec::new();
    if predicted.n_instances() != truth.n_instances() {
        for &id in predicted.clusters().iter().flatten() {
            if !in_truth[id as usize] {
                if mode == CoverageMode::Strict {
                    return Err(ModelError::ExtraInPredicted { instance: id });
                }
                extra_in_predicted.push(id);
            }
        }
    }
    Ok(EvalPair {
        truth,
        predicted,
        mode,
        universe,
        extra_in_predicted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    Harmonic,
    Geometric,
}

/// `2rp/(r+p)`, taken as 0 when `r + p = 0`.
pub fn mean_harmonic(recall: f64, precision: f64) -> f64 {
    let denom = recall + precision;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / denom
    }
}

pub fn mean_geometric(recall: f64, precision: f64) -> f64 {
    (recall * precision).sqrt()
}

/// Recall, precision and their combined score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTriple {
    pub recall: f64,
    pub precision: f64,
    pub combined: f64,
    pub mean_kind: MeanKind,
}

impl MetricTriple {
    pub fn harmonic(recall: f64, precision: f64) -> Self {
        Self {
            recall,
            precision,
            combined: mean_harmonic(recall, precision),
            mean_kind: MeanKind::Harmonic,
        }
    }

    pub fn geometric(recall: f64, precision: f64) -> Self {
        Self {
            recall,
            precision,
            combined: mean_geometric(recall, precision),
            mean_kind: MeanKind::Geometric,
        }
    }

    /// Largest absolute difference across the three scores.
    pub fn max_abs_diff(&self, other: &MetricTriple) -> f64 {
        (self.recall - other.recall)
            .abs()
            .max((self.precision - other.precision).abs())
            .max((self.combined - other.combined).abs())
    }
}

/// Splitting and lumping errors with their recall/precision conversion
/// (`eR = 1 - SE`, `eP = 1 - LE`, harmonic `eF`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeLe {
    pub splitting_error: f64,
    pub lumping_error: f64,
    pub converted: MetricTriple,
}

impl SeLe {
    pub fn from_errors(splitting_error: f64, lumping_error: f64) -> Self {
        Self {
            splitting_error,
            lumping_error,
            converted: MetricTriple::harmonic(1.0 - splitting_error, 1.0 - lumping_error),
        }
    }

    pub fn max_abs_diff(&self, other: &SeLe) -> f64 {
        (self.splitting_error - other.splitting_error)
            .abs()
            .max((self.lumping_error - other.lumping_error).abs())
            .max(self.converted.max_abs_diff(&other.converted))
    }
}

/// Which of the SE & LE candidates to keep as the best-matching predicted
/// cluster of a truth cluster.
///
/// Largest overlap wins. Ties go to the smaller predicted cluster, then to
/// the smaller predicted-cluster index. Both engines use this rule so their
/// lumping errors agree.
pub fn prefer_lump_candidate(
    candidate: (u64, u64, usize),
    incumbent: Option<(u64, u64, usize)>,
) -> bool {
    let Some((best_count, best_size, best_index)) = incumbent else {
        return true;
    };
    let (count, size, index) = candidate;
    if count != best_count {
        return count > best_count;
    }
    if size != best_size {
        return size < best_size;
    }
    index < best_index
}

/// Degenerate or noteworthy conditions met during an evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Flag {
    /// Every truth cluster is a singleton; pairwise recall taken as 1.
    PairwiseRecallVacuous,
    /// Every predicted cluster is a singleton; pairwise precision taken as 1.
    PairwisePrecisionVacuous,
    /// Lenient mode admitted this many predicted-only instances.
    ExtraPredictedInstances(usize),
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::PairwiseRecallVacuous => {
                f.write_str("pairwise_recall_vacuous: no truth pairs, recall set to 1")
            }
            Flag::PairwisePrecisionVacuous => {
                f.write_str("pairwise_precision_vacuous: no predicted pairs, precision set to 1")
            }
            Flag::ExtraPredictedInstances(n) => {
                write!(f, "extra_predicted_instances: {n} predicted-only instances")
            }
        }
    }
}

/// Input counts gathered during an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub truth_clusters: u64,
    pub predicted_clusters: u64,
    pub instances: u64,
    pub pair_tr_sum: u64,
    pub pair_pr_sum: u64,
    pub pair_int_sum: u64,
}

/// All five measures from one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FullReport {
    pub cluster_f: MetricTriple,
    pub k_metric: MetricTriple,
    pub b_cubed: MetricTriple,
    pub se_le: SeLe,
    pub pairwise: MetricTriple,
    pub stats: Stats,
    pub flags: Vec<Flag>,
}

impl FullReport {
    /// Largest absolute difference over every score in the two reports.
    pub fn max_abs_diff(&self, other: &FullReport) -> f64 {
        self.cluster_f
            .max_abs_diff(&other.cluster_f)
            .max(self.k_metric.max_abs_diff(&other.k_metric))
            .max(self.b_cubed.max_abs_diff(&other.b_cubed))
            .max(self.se_le.max_abs_diff(&other.se_le))
            .max(self.pairwise.max_abs_diff(&other.pairwise))
    }
}

/// The five measures, by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    ClusterF,
    KMetric,
    SeLe,
    Pairwise,
    BCubed,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::ClusterF,
        Measure::KMetric,
        Measure::SeLe,
        Measure::Pairwise,
        Measure::BCubed,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Measure::ClusterF => "Cluster-F",
            Measure::KMetric => "K-metric",
            Measure::SeLe => "SE & LE",
            Measure::Pairwise => "Pairwise-F",
            Measure::BCubed => "B-cubed",
        }
    }
}

/// Result of evaluating a single measure.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureOutcome {
    Triple(MetricTriple),
    SeLe(SeLe),
}

impl MeasureOutcome {
    pub fn triple(&self) -> MetricTriple {
        match self {
            MeasureOutcome::Triple(t) => *t,
            MeasureOutcome::SeLe(s) => s.converted,
        }
    }
}
