//! Acceptance criteria. Each criterion runs in order inside one test so the
//! timing checks do not compete with each other, and prints one PASS/FAIL
//! line. The test fails if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use clustereval::cli::random_check_config;
use clustereval::model::{validate, Clustering, CoverageMode, EvalPair, Flag, Role};
use clustereval::oracle::{self, PairSet, DEFAULT_PAIR_BUDGET};
use clustereval::single_pass::{self, eval_all, pair_count};
use clustereval::synth::{generate, SynthConfig};

const EXACT: f64 = 1e-12;
const ROUNDED: f64 = 1e-4;
const CORPUS_SIZE: u64 = 1000;
const CORPUS_MAX_N: usize = 200;
const CORPUS_SEED: u64 = 20_190_501;

type Criterion = fn() -> Result<String, String>;

fn table3() -> EvalPair {
    let mk = |role, cs: &[&[u32]]| {
        Clustering::new(role, cs.iter().map(|c| c.to_vec()).collect()).unwrap()
    };
    validate(
        mk(Role::Truth, &[&[1, 2, 3], &[4, 5], &[6, 7, 8]]),
        mk(Role::Predicted, &[&[1, 2, 3], &[4, 5, 6, 7, 8]]),
        CoverageMode::Strict,
    )
    .unwrap()
}

fn corpus() -> impl Iterator<Item = EvalPair> {
    (0..CORPUS_SIZE).map(|k| generate(&random_check_config(CORPUS_SEED, k, CORPUS_MAX_N)).unwrap())
}

fn check(label: &str, value: f64, exact: f64, rounded: f64) -> Result<(), String> {
    if (value - exact).abs() > EXACT {
        return Err(format!("{label} = {value}, exact {exact}"));
    }
    if (value - rounded).abs() > ROUNDED {
        return Err(format!("{label} = {value}, reported {rounded}"));
    }
    Ok(())
}

fn criterion_1() -> Result<String, String> {
    let pair = table3();
    let fast = eval_all(&pair);
    let slow = oracle::oracle_all(&pair, DEFAULT_PAIR_BUDGET).map_err(|e| e.to_string())?;
    for r in [&fast, &slow] {
        check("cR", r.cluster_f.recall, 1.0 / 3.0, 0.3333)?;
        check("cP", r.cluster_f.precision, 0.5, 0.5)?;
        check("cF", r.cluster_f.combined, 0.4, 0.4)?;
        check("AAP", r.k_metric.recall, 1.0, 1.0)?;
        check("ACP", r.k_metric.precision, 0.7, 0.7)?;
        check("K", r.k_metric.combined, 0.7f64.sqrt(), 0.8367)?;
        check("SE", r.se_le.splitting_error, 0.0, 0.0)?;
        check("LE", r.se_le.lumping_error, 5.0 / 13.0, 0.3846)?;
        check("eR", r.se_le.converted.recall, 1.0, 1.0)?;
        check("eP", r.se_le.converted.precision, 8.0 / 13.0, 0.6154)?;
        check("eF", r.se_le.converted.combined, 16.0 / 21.0, 0.7619)?;
        check("pR", r.pairwise.recall, 1.0, 1.0)?;
        check("pP", r.pairwise.precision, 7.0 / 13.0, 0.5385)?;
        check("pF", r.pairwise.combined, 0.7, 0.7)?;
        check("bR", r.b_cubed.recall, 1.0, 1.0)?;
        check("bP", r.b_cubed.precision, 0.7, 0.7)?;
        check("bF", r.b_cubed.combined, 14.0 / 17.0, 0.8235)?;
    }
    Ok("all 17 values match on both engines".into())
}

fn criterion_2() -> Result<String, String> {
    let mut worst = 0.0f64;
    for (k, pair) in corpus().enumerate() {
        let ob = oracle::oracle_b_cubed(&pair);
        let ok = oracle::oracle_k_metric(&pair);
        let d = (ob.recall - ok.recall)
            .abs()
            .max((ob.precision - ok.precision).abs());
        worst = worst.max(d);
        if d > EXACT {
            return Err(format!("pair {k}: oracle B3 vs K differ by {d:e}"));
        }
        let b = single_pass::eval_b_cubed(&pair);
        let km = single_pass::eval_k_metric(&pair);
        if b.recall.to_bits() != km.recall.to_bits()
            || b.precision.to_bits() != km.precision.to_bits()
        {
            return Err(format!("pair {k}: single-pass B3 and K components differ"));
        }
    }
    Ok(format!("{CORPUS_SIZE} pairs, max oracle gap {worst:e}"))
}

fn criterion_3() -> Result<String, String> {
    let mut worst = 0.0f64;
    for (k, pair) in corpus().enumerate() {
        let fast = eval_all(&pair);
        let slow = oracle::oracle_all(&pair, DEFAULT_PAIR_BUDGET).map_err(|e| e.to_string())?;
        let d = fast.max_abs_diff(&slow);
        worst = worst.max(d);
        if d > EXACT || fast.stats != slow.stats {
            return Err(format!("pair {k}: engines differ by {d:e}"));
        }
    }
    Ok(format!("{CORPUS_SIZE} pairs, max difference {worst:e}"))
}

fn criterion_4() -> Result<String, String> {
    for (k, pair) in corpus().enumerate() {
        let r = eval_all(&pair);
        let same = r.cluster_f == single_pass::eval_cluster_f(&pair)
            && r.k_metric == single_pass::eval_k_metric(&pair)
            && r.b_cubed == single_pass::eval_b_cubed(&pair)
            && r.se_le == single_pass::eval_se_le(&pair)
            && r.pairwise == single_pass::eval_pairwise(&pair);
        if !same {
            return Err(format!("pair {k}: fused and separate results differ"));
        }
    }
    Ok(format!("{CORPUS_SIZE} pairs bit-identical"))
}

fn criterion_5() -> Result<String, String> {
    for k in 0..=1000u64 {
        let closed = pair_count(k);
        let counted = if k <= 200 {
            let cluster: Vec<u32> = (0..k as u32).collect();
            PairSet::from_clusters([&cluster]).len() as u64
        } else if k % 50 == 0 {
            let mut n = 0u64;
            for a in 0..k {
                for _ in a + 1..k {
                    n += 1;
                }
            }
            n
        } else {
            // k(k-1)/2 = (k-1)(k-2)/2 + (k-1)
            pair_count(k - 1) + (k - 1)
        };
        if closed != counted {
            return Err(format!("k = {k}: closed form {closed}, counted {counted}"));
        }
    }
    Ok("k = 0..=1000".into())
}

fn criterion_6() -> Result<String, String> {
    let config = SynthConfig {
        n_instances: 1_200_000,
        n_truth_clusters: 15_000,
        size_skew: 1.0,
        split_rate: 0.1,
        merge_rate: 0.1,
        seed: 1,
    };
    let pair = generate(&config).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let report = eval_all(&pair);
    let secs = start.elapsed().as_secs_f64();
    if report.stats.instances != 1_200_000 {
        return Err(format!("N = {}", report.stats.instances));
    }
    if secs > 10.0 {
        return Err(format!("eval_all took {secs:.3} s"));
    }
    Ok(format!(
        "N = 1,200,000, |T| = {}, |P| = {}, eval_all {secs:.3} s",
        report.stats.truth_clusters, report.stats.predicted_clusters
    ))
}

fn criterion_7() -> Result<String, String> {
    let config = SynthConfig {
        n_instances: 41_358,
        n_truth_clusters: 1_000,
        size_skew: 0.5,
        split_rate: 0.1,
        merge_rate: 0.1,
        seed: 2,
    };
    let pair = generate(&config).map_err(|e| e.to_string())?;
    let pairs = oracle::pair_demand(&pair);
    if pairs <= 100_000 {
        return Err(format!("only {pairs} pairs to enumerate"));
    }
    let fast = (0..5)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(eval_all(&pair));
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min);
    let start = Instant::now();
    std::hint::black_box(
        oracle::oracle_pairwise(&pair, DEFAULT_PAIR_BUDGET).map_err(|e| e.to_string())?,
    );
    let slow = start.elapsed().as_secs_f64();
    let speedup = slow / fast;
    if speedup < 100.0 {
        return Err(format!(
            "speedup {speedup:.1}x (all-in-one {fast:.6} s, oracle pairwise {slow:.6} s)"
        ));
    }
    Ok(format!(
        "{pairs} pairs; all-in-one {fast:.6} s, oracle pairwise {slow:.3} s, {speedup:.0}x"
    ))
}

fn criterion_8() -> Result<String, String> {
    let singles: Vec<Vec<u32>> = (0..50).map(|i| vec![i]).collect();
    let mut reversed = singles.clone();
    reversed.reverse();
    let pair = validate(
        Clustering::new(Role::Truth, singles).unwrap(),
        Clustering::new(Role::Predicted, reversed).unwrap(),
        CoverageMode::Strict,
    )
    .map_err(|e| e.to_string())?;
    for r in [
        eval_all(&pair),
        oracle::oracle_all(&pair, DEFAULT_PAIR_BUDGET).unwrap(),
    ] {
        let p = r.pairwise;
        if (p.recall, p.precision, p.combined) != (1.0, 1.0, 1.0) {
            return Err(format!("pairwise {p:?}"));
        }
        if r.flags != [Flag::PairwiseRecallVacuous, Flag::PairwisePrecisionVacuous] {
            return Err(format!("flags {:?}", r.flags));
        }
        for t in [r.cluster_f, r.k_metric, r.b_cubed, r.se_le.converted] {
            if (t.recall, t.precision, t.combined) != (1.0, 1.0, 1.0) {
                return Err(format!("non-pairwise measure {t:?}"));
            }
        }
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let empty = dir.path().join("empty.txt");
    let some = dir.path().join("some.txt");
    std::fs::write(&empty, "").map_err(|e| e.to_string())?;
    std::fs::write(&some, "a b\n").map_err(|e| e.to_string())?;
    for (t, p) in [(&empty, &some), (&some, &empty), (&empty, &empty)] {
        let out = Command::new(env!("CARGO_BIN_EXE_clustereval"))
            .args(["evaluate", "--truth"])
            .arg(t)
            .arg("--pred")
            .arg(p)
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.code() != Some(3) {
            return Err(format!("empty input exited with {:?}", out.status.code()));
        }
    }
    Ok("vacuous pairwise flagged, empty inputs exit 3".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 8] = [
        ("1 worked example", criterion_1),
        ("2 B-cubed/K-metric identity", criterion_2),
        ("3 oracle equivalence", criterion_3),
        ("4 fusion identity", criterion_4),
        ("5 pair-count closed form", criterion_5),
        ("6 1.2M-instance scalability", criterion_6),
        ("7 runtime contrast", criterion_7),
        ("8 degenerate inputs", criterion_8),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let outcome =
            panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail}");
                failed.push(name);
            }
        }
    }
    println!(
        "INFO criterion 9: labelled-dataset comparison not reproducible; covered by criteria 1-4"
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
