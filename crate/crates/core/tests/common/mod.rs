#![allow(dead_code)]

use clustereval::model::{validate, Clustering, CoverageMode, EvalPair, Role};
use proptest::prelude::*;

/// Groups instance indices by label; labels order clusters by first use.
pub fn group(labels: &[u32], offset: u32) -> Vec<Vec<u32>> {
    let mut slot = std::collections::HashMap::new();
    let mut clusters: Vec<Vec<u32>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        let s = *slot.entry(l).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[s].push(i as u32 + offset);
    }
    clusters
}

pub fn pair_from(truth: Vec<Vec<u32>>, predicted: Vec<Vec<u32>>, mode: CoverageMode) -> EvalPair {
    validate(
        Clustering::new(Role::Truth, truth).unwrap(),
        Clustering::new(Role::Predicted, predicted).unwrap(),
        mode,
    )
    .unwrap()
}

/// Strict pairs with up to `max_n` instances; predicted labels copy the
/// truth label with probability `keep` and are random otherwise.
pub fn strict_pair(max_n: usize) -> impl Strategy<Value = EvalPair> {
    (1..=max_n, 1u32..=20, 1u32..=20, 0.0f64..=1.0)
        .prop_flat_map(|(n, kt, kp, keep)| {
            (
                prop::collection::vec(0..kt, n),
                prop::collection::vec((0..kp, 0.0f64..1.0), n),
                Just(keep),
            )
        })
        .prop_map(|(truth_labels, noise, keep)| {
            let predicted_labels: Vec<u32> = truth_labels
                .iter()
                .zip(&noise)
                .map(|(&t, &(r, u))| if u < keep { t } else { 1000 + r })
                .collect();
            pair_from(
                group(&truth_labels, 0),
                group(&predicted_labels, 0),
                CoverageMode::Strict,
            )
        })
}

/// Lenient pairs: a strict pair plus predicted-only instances.
pub fn lenient_pair(max_n: usize) -> impl Strategy<Value = EvalPair> {
    (strict_pair(max_n), prop::collection::vec(0u32..5, 1..10)).prop_map(|(base, extra_labels)| {
        let offset = base.universe() as u32;
        let mut predicted = base.predicted().clusters().to_vec();
        for (k, &l) in extra_labels.iter().enumerate() {
            let id = offset + k as u32;
            match predicted.get_mut(l as usize) {
                Some(c) if l % 2 == 0 => c.push(id),
                _ => predicted.push(vec![id]),
            }
        }
        pair_from(
            base.truth().clusters().to_vec(),
            predicted,
            CoverageMode::Lenient,
        )
    })
}
