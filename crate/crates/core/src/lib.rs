//! Clustering evaluation for author name disambiguation.
//!
//! Compares a predicted clustering against a truth clustering with five
//! measures: Cluster-F, K-metric, Splitting & Lumping Error, Pairwise-F and
//! B-cubed. The [`single_pass`] engine computes all of them in one linear
//! pass over two hash tables; the [`oracle`] engine evaluates the textbook
//! definitions directly and exists for cross-checking and benchmarking.
//!
//! ```
//! use clustereval::io::{parse_clustering, Format};
//! use clustereval::model::{validate, CoverageMode, Interner, Role};
//! use clustereval::single_pass::eval_all;
//!
//! let mut ids = Interner::new();
//! let truth = parse_clustering("1 2 3\n4 5\n6 7 8\n".as_bytes(), Format::Auto, Role::Truth, &mut ids).unwrap();
//! let pred = parse_clustering("1 2 3\n4 5 6 7 8\n".as_bytes(), Format::Auto, Role::Predicted, &mut ids).unwrap();
//! let report = eval_all(&validate(truth, pred, CoverageMode::Strict).unwrap());
//! assert_eq!(report.pairwise.precision, 7.0 / 13.0);
//! ```

pub mod cli;
pub mod io;
pub mod model;
pub mod oracle;
pub mod single_pass;
pub mod synth;

use serde::{Deserialize, Serialize};

pub use model::{
    validate, Clustering, CoverageMode, EvalPair, Flag, FullReport, Interner, Measure,
    MeasureOutcome, MetricTriple, SeLe,
};
pub use oracle::OracleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    SinglePass,
    Oracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::SinglePass => "single_pass",
            Engine::Oracle => "oracle",
        }
    }
}

/// All five measures with the chosen engine. `pair_budget` only limits the
/// oracle's pair enumeration.
pub fn evaluate_all(
    pair: &EvalPair,
    engine: Engine,
    pair_budget: u64,
) -> Result<FullReport, OracleError> {
    match engine {
        Engine::SinglePass => Ok(single_pass::eval_all(pair)),
        Engine::Oracle => oracle::oracle_all(pair, pair_budget),
    }
}

pub fn evaluate_one(
    pair: &EvalPair,
    measure: Measure,
    engine: Engine,
    pair_budget: u64,
) -> Result<(MeasureOutcome, Vec<Flag>), OracleError> {
    match engine {
        Engine::SinglePass => Ok(single_pass::eval_one(pair, measure)),
        Engine::Oracle => oracle::oracle_one(pair, measure, pair_budget),
    }
}
