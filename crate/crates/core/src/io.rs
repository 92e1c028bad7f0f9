//! Clustering file formats and report rendering.
//!
//! Two UTF-8, newline-delimited clustering formats are supported:
//!
//! * **cluster lines**: one cluster per line, ids separated by whitespace.
//! * **membership pairs**: `instance_id<TAB>cluster_label` per line; equal
//!   labels form a cluster, clusters ordered by first appearance.
//!
//! Blank lines and lines starting with `#` are skipped in both. CRLF line
//! endings are accepted. With [`Format::Auto`] the first data line decides:
//! a TAB selects membership pairs, anything else cluster lines.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, BufRead};

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::model::{
    Clustering, CoverageMode, Flag, FullReport, InstanceId, Interner, MeanKind, Measure,
    MeasureOutcome, MetricTriple, ModelError, Role, SeLe, Stats,
};
use crate::Engine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Auto,
    ClusterLines,
    MembershipPairs,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: invalid UTF-8")]
    InvalidUtf8 { line: usize },
    #[error("line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("instance {id:?} on line {second_line} already appeared on line {first_line}")]
    DuplicateInstance {
        id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn is_data(line: &str) -> bool {
    let t = line.trim_start();
    !t.is_empty() && !t.starts_with('#')
}

/// Reads a clustering, interning ids into `interner`.
pub fn parse_clustering<R: BufRead>(
    mut source: R,
    format: Format,
    role: Role,
    interner: &mut Interner,
) -> Result<Clustering, ParseError> {
    let mut format = format;
    let mut clusters: Vec<Vec<InstanceId>> = Vec::new();
    let mut cluster_of_label: IndexMap<String, usize> = IndexMap::new();
    let mut seen_on: HashMap<InstanceId, usize> = HashMap::new();
    let mut buf = Vec::new();
    let mut line_no = 0;

    loop {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let mut bytes = buf.as_slice();
        if let Some(rest) = bytes.strip_suffix(b"\n") {
            bytes = rest;
        }
        if let Some(rest) = bytes.strip_suffix(b"\r") {
            bytes = rest;
        }
        let line =
            std::str::from_utf8(bytes).map_err(|_| ParseError::InvalidUtf8 { line: line_no })?;
        if !is_data(line) {
            continue;
        }
        if format == Format::Auto {
            format = if line.contains('\t') {
                Format::MembershipPairs
            } else {
                Format::ClusterLines
            };
        }

        let mut record = |id: &str| -> Result<InstanceId, ParseError> {
            let dense = interner.intern(id);
            if let Some(&first_line) = seen_on.get(&dense) {
                return Err(ParseError::DuplicateInstance {
                    id: id.to_owned(),
                    first_line,
                    second_line: line_no,
                });
            }
            seen_on.insert(dense, line_no);
            Ok(dense)
        };

        match format {
            Format::ClusterLines | Format::Auto => {
                let mut cluster = Vec::new();
                for token in line.split_whitespace() {
                    cluster.push(record(token)?);
                }
                clusters.push(cluster);
            }
            Format::MembershipPairs => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 2 {
                    return Err(ParseError::Malformed {
                        line: line_no,
                        column: 1,
                        message: format!(
                            "expected `instance<TAB>cluster`, found {} tab-separated fields",
                            fields.len()
                        ),
                    });
                }
                let lead = fields[0].len() - fields[0].trim_start().len();
                let id = fields[0].trim();
                let label = fields[1].trim();
                let label_column = fields[0].chars().count() + 2;
                if id.is_empty() {
                    return Err(ParseError::Malformed {
                        line: line_no,
                        column: 1,
                        message: "empty instance id".into(),
                    });
                }
                if let Some(pos) = id.find(char::is_whitespace) {
                    return Err(ParseError::Malformed {
                        line: line_no,
                        column: line[..lead + pos].chars().count() + 1,
                        message: format!("instance id {id:?} contains whitespace"),
                    });
                }
                if label.is_empty() {
                    return Err(ParseError::Malformed {
                        line: line_no,
                        column: label_column,
                        message: "empty cluster label".into(),
                    });
                }
                let dense = record(id)?;
                let next = clusters.len();
                let slot = *cluster_of_label.entry(label.to_owned()).or_insert(next);
                if slot == next {
                    clusters.push(Vec::new());
                }
                clusters[slot].push(dense);
            }
        }
    }
    Ok(Clustering::new(role, clusters)?)
}

/// Renders a clustering in either file format. `Auto` writes cluster lines.
pub fn write_clustering(clustering: &Clustering, interner: &Interner, format: Format) -> String {
    let mut out = String::new();
    for (i, cluster) in clustering.clusters().iter().enumerate() {
        match format {
            Format::MembershipPairs => {
                for &id in cluster {
                    let _ = writeln!(out, "{}\tc{i}", interner.label(id));
                }
            }
            Format::ClusterLines | Format::Auto => {
                let labels: Vec<String> = cluster.iter().map(|&id| interner.label(id)).collect();
                out.push_str(&labels.join(" "));
                out.push('\n');
            }
        }
    }
    out
}

/// Current machine-report schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Score rendered as a fixed-point JSON number with twelve decimals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed(pub f64);

impl Fixed {
    const DECIMALS: usize = 12;
}

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let text = format!("{:.*}", Self::DECIMALS, self.0);
        let raw = RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Fixed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleDoc {
    pub recall: Fixed,
    pub precision: Fixed,
    pub combined: Fixed,
    pub mean: MeanKind,
}

impl From<&MetricTriple> for TripleDoc {
    fn from(t: &MetricTriple) -> Self {
        Self {
            recall: Fixed(t.recall),
            precision: Fixed(t.precision),
            combined: Fixed(t.combined),
            mean: t.mean_kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeLeDoc {
    pub se: Fixed,
    pub le: Fixed,
    pub recall: Fixed,
    pub precision: Fixed,
    pub combined: Fixed,
    pub mean: MeanKind,
}

impl From<&SeLe> for SeLeDoc {
    fn from(s: &SeLe) -> Self {
        Self {
            se: Fixed(s.splitting_error),
            le: Fixed(s.lumping_error),
            recall: Fixed(s.converted.recall),
            precision: Fixed(s.converted.precision),
            combined: Fixed(s.converted.combined),
            mean: s.converted.mean_kind,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasuresDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_f: Option<TripleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_metric: Option<TripleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_cubed: Option<TripleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se_le: Option<SeLeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise: Option<TripleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub eval_seconds: Fixed,
}

/// Stable structured rendering of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub engine: Engine,
    pub coverage: CoverageMode,
    pub measures: MeasuresDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<Stats>,
    pub flags: Vec<String>,
    pub tool: ToolInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ReportDocument {
    fn empty(engine: Engine, coverage: CoverageMode, flags: &[Flag]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            engine,
            coverage,
            measures: MeasuresDoc::default(),
            stats: None,
            flags: flags.iter().map(Flag::to_string).collect(),
            tool: ToolInfo::default(),
            timing: None,
        }
    }

    pub fn from_full(report: &FullReport, engine: Engine, coverage: CoverageMode) -> Self {
        let mut doc = Self::empty(engine, coverage, &report.flags);
        doc.measures = MeasuresDoc {
            cluster_f: Some((&report.cluster_f).into()),
            k_metric: Some((&report.k_metric).into()),
            b_cubed: Some((&report.b_cubed).into()),
            se_le: Some((&report.se_le).into()),
            pairwise: Some((&report.pairwise).into()),
        };
        doc.stats = Some(report.stats);
        doc
    }

    pub fn from_single(
        measure: Measure,
        outcome: &MeasureOutcome,
        flags: &[Flag],
        engine: Engine,
        coverage: CoverageMode,
    ) -> Self {
        let mut doc = Self::empty(engine, coverage, flags);
        let m = &mut doc.measures;
        match (measure, outcome) {
            (_, MeasureOutcome::SeLe(s)) => m.se_le = Some(s.into()),
            (Measure::ClusterF, MeasureOutcome::Triple(t)) => m.cluster_f = Some(t.into()),
            (Measure::KMetric, MeasureOutcome::Triple(t)) => m.k_metric = Some(t.into()),
            (Measure::BCubed, MeasureOutcome::Triple(t)) => m.b_cubed = Some(t.into()),
            (Measure::Pairwise, MeasureOutcome::Triple(t)) => m.pairwise = Some(t.into()),
            (Measure::SeLe, MeasureOutcome::Triple(t)) => {
                m.se_le = Some((&SeLe::from_errors(1.0 - t.recall, 1.0 - t.precision)).into())
            }
        }
        doc
    }

    pub fn with_timing(mut self, seconds: f64) -> Self {
        self.timing = Some(Timing {
            eval_seconds: Fixed(seconds),
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportStyle {
    #[default]
    Machine,
    Table,
}

pub fn write_report(doc: &ReportDocument, style: ReportStyle) -> String {
    match style {
        ReportStyle::Machine => {
            let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
            s.push('\n');
            s
        }
        ReportStyle::Table => render_table(doc),
    }
}

pub fn parse_report(text: &str) -> serde_json::Result<ReportDocument> {
    serde_json::from_str(text)
}

fn render_table(doc: &ReportDocument) -> String {
    let m = &doc.measures;
    let mut rows: Vec<(&str, f64, f64, f64, &str)> = Vec::new();
    let mean = |k: MeanKind| match k {
        MeanKind::Harmonic => "harmonic",
        MeanKind::Geometric => "geometric",
    };
    let mut push = |name, t: &Option<TripleDoc>| {
        if let Some(t) = t {
            rows.push((name, t.recall.0, t.precision.0, t.combined.0, mean(t.mean)));
        }
    };
    push(Measure::ClusterF.display_name(), &m.cluster_f);
    push(Measure::KMetric.display_name(), &m.k_metric);
    if let Some(s) = &m.se_le {
        rows.push((
            Measure::SeLe.display_name(),
            s.recall.0,
            s.precision.0,
            s.combined.0,
            mean(s.mean),
        ));
    }
    let mut push = |name, t: &Option<TripleDoc>| {
        if let Some(t) = t {
            rows.push((name, t.recall.0, t.precision.0, t.combined.0, mean(t.mean)));
        }
    };
    push(Measure::Pairwise.display_name(), &m.pairwise);
    push(Measure::BCubed.display_name(), &m.b_cubed);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>10} {:>10}  Mean",
        "Measure", "Recall", "Precision", "F"
    );
    for (name, r, p, f, kind) in rows {
        let _ = writeln!(out, "{name:<12} {r:>10.6} {p:>10.6} {f:>10.6}  {kind}");
    }
    if let Some(s) = &m.se_le {
        let _ = writeln!(
            out,
            "\nSplitting error {:.6}, lumping error {:.6}",
            s.se.0, s.le.0
        );
    }
    if let Some(st) = &doc.stats {
        let _ = writeln!(
            out,
            "\ninstances {}  truth clusters {}  predicted clusters {}",
            st.instances, st.truth_clusters, st.predicted_clusters
        );
        let _ = writeln!(
            out,
            "truth pairs {}  predicted pairs {}  shared pairs {}",
            st.pair_tr_sum, st.pair_pr_sum, st.pair_int_sum
        );
    }
    for flag in &doc.flags {
        let _ = writeln!(out, "flag: {flag}");
    }
    if let Some(t) = &doc.timing {
        let _ = writeln!(out, "evaluation time {:.6} s", t.eval_seconds.0);
    }
    out
}
