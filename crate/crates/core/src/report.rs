//! Text artifacts (CSV, JSON) and the hashed output manifest.
//!
//! Every floating-point number is written with a point decimal and 17
//! significant digits, which round-trips `f64` exactly.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::biplot::{BiplotModel, RankingResult};
use crate::cluster::{ClusterAssignment, ClusterProfile};
use crate::composition::{named_ratio, ClrMatrix, CompositionError, IndicatorTable, RatioDefinition};
use crate::scalar::Scalar;
use crate::stats::{describe, DescriptiveSummary, StatsError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o failure on {path}: {source}")]
    IoFailure { path: String, source: io::Error },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
}

impl ReportError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::IoFailure { .. } => "IoFailure",
            Self::Stats(e) => e.kind(),
            Self::Composition(e) => e.kind(),
        }
    }
}

/// Positional notation for moderate exponents, scientific otherwise.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exp < 0 {
        format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        let split = exp as usize + 1;
        if split >= digits.len() {
            format!("{sign}{digits}")
        } else {
            format!("{sign}{}.{}", &digits[..split], &digits[split..])
        }
    }
}

/// Pretty JSON with 17-significant-digit floats.
struct Sig17Formatter<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17Formatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17Formatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializable report");
    out.push(b'\n');
    String::from_utf8(out).expect("json is utf-8")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

pub const DESCRIBE_HEADER: [&str; 9] = ["name", "n", "mean", "sd", "min", "q1", "median", "q3", "max"];

fn summary_record<T: Scalar>(name: &str, s: &DescriptiveSummary<T>) -> Vec<String> {
    let f = |v: T| format_sig17(v.to_f64_lossy());
    vec![name.to_string(), s.n.to_string(), f(s.mean), f(s.sd), f(s.min), f(s.q1), f(s.median), f(s.q3), f(s.max)]
}

/// One summary row per part, then one per raw ratio.
pub fn describe_csv<T: Scalar>(table: &IndicatorTable<T>, ratios: &[RatioDefinition]) -> Result<String, ReportError> {
    let mut w = csv_writer();
    w.write_record(DESCRIBE_HEADER).expect("write to memory");
    for (c, part) in table.parts().iter().enumerate() {
        let col: Vec<T> = table.values().column(c).to_vec();
        w.write_record(summary_record(&part.name, &describe(&col)?)).expect("write to memory");
    }
    for def in ratios {
        let values = named_ratio(table, def)?;
        w.write_record(summary_record(&def.name, &describe(&values)?)).expect("write to memory");
    }
    Ok(finish(w))
}

pub fn clr_csv<T: Scalar>(clr: &ClrMatrix<T>) -> String {
    let mut w = csv_writer();
    let mut header = vec!["entity_id".to_string()];
    header.extend(clr.parts().iter().map(|p| p.name.clone()));
    w.write_record(&header).expect("write to memory");
    for (e, row) in clr.entities().iter().zip(clr.values().rows()) {
        let mut rec = vec![e.id.clone()];
        rec.extend(row.iter().map(|v| format_sig17(v.to_f64_lossy())));
        w.write_record(&rec).expect("write to memory");
    }
    finish(w)
}

pub fn model_json<T: Scalar>(model: &BiplotModel<T>) -> String {
    to_json(&model.document())
}

/// Rows in rank order: `entity_id,score,exact_log_ratio,rank`.
pub fn ranking_csv<T: Scalar>(ranking: &RankingResult<T>) -> String {
    let mut w = csv_writer();
    w.write_record(["entity_id", "score", "exact_log_ratio", "rank"]).expect("write to memory");
    for (pos, &r) in ranking.order.iter().enumerate() {
        w.write_record([
            ranking.entity_ids[r].clone(),
            format_sig17(ranking.scores[r].to_f64_lossy()),
            format_sig17(ranking.exact_log_ratios[r].to_f64_lossy()),
            (pos + 1).to_string(),
        ])
        .expect("write to memory");
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingSummary {
    pub ratio: String,
    pub numerator: String,
    pub denominator: String,
    pub alpha: f64,
    pub k: usize,
    pub fidelity: Option<f64>,
    pub rank_agreement: Option<f64>,
    pub order: Vec<String>,
}

impl RankingSummary {
    pub fn new<T: Scalar>(def: &RatioDefinition, model: &BiplotModel<T>, ranking: &RankingResult<T>) -> Self {
        Self {
            ratio: def.name.clone(),
            numerator: def.numerator.clone(),
            denominator: def.denominator.clone(),
            alpha: model.alpha().to_f64_lossy(),
            k: model.k(),
            fidelity: ranking.fidelity.map(Scalar::to_f64_lossy),
            rank_agreement: ranking.rank_agreement.map(Scalar::to_f64_lossy),
            order: ranking.ordered_ids().into_iter().map(String::from).collect(),
        }
    }
}

pub fn clusters_csv(assignment: &ClusterAssignment) -> String {
    let mut w = csv_writer();
    w.write_record(["entity_id", "cluster_label"]).expect("write to memory");
    for (id, label) in &assignment.labels {
        w.write_record([id.clone(), label.to_string()]).expect("write to memory");
    }
    finish(w)
}

pub fn clusters_json<T: Scalar>(assignment: &ClusterAssignment, profiles: &[ClusterProfile<T>]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        linkage: crate::cluster::Linkage,
        cut: crate::cluster::Cut,
        threshold: Option<f64>,
        cluster_count: usize,
        merge_history: &'a [crate::cluster::Merge],
        profiles: Vec<crate::cluster::ProfileDocument>,
    }
    to_json(&Doc {
        linkage: assignment.linkage,
        cut: assignment.cut,
        threshold: assignment.threshold,
        cluster_count: assignment.cluster_count,
        merge_history: &assignment.merge_history,
        profiles: profiles.iter().map(ClusterProfile::document).collect(),
    })
}

/// Named artifacts to be written together, kept sorted by file name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl ReportSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), contents.into());
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every artifact into `directory` (created if missing).
pub fn write_reports(outputs: &ReportSet, directory: &Path) -> Result<Manifest, ReportError> {
    let io_err = |path: &Path, source| ReportError::IoFailure { path: path.display().to_string(), source };
    let mut manifest = Manifest::default();
    if outputs.is_empty() {
        return Ok(manifest);
    }
    std::fs::create_dir_all(directory).map_err(|e| io_err(directory, e))?;
    for (name, contents) in &outputs.files {
        let path = directory.join(name);
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        manifest.files.push(ManifestEntry { file: name.clone(), bytes: contents.len(), sha256: sha256_hex(contents) });
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig17_formatting() {
        assert_eq!(format_sig17(0.0), "0");
        assert_eq!(format_sig17(-0.0), "0");
        assert_eq!(format_sig17(1.0), "1.0000000000000000");
        assert_eq!(format_sig17(-2.5), "-2.5000000000000000");
        assert_eq!(format_sig17(1035.0), "1035.0000000000000");
        assert_eq!(format_sig17(0.001), "0.0010000000000000000");
        assert_eq!(format_sig17(1e20), "1.0000000000000000e20");
        assert_eq!(format_sig17(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_sig17(2.384185791015625e-7), "2.3841857910156250e-7");
        assert_eq!(format_sig17(1e16), "10000000000000000");
    }

    #[test]
    fn json_uses_sig17() {
        let text = to_json(&serde_json::json!({"x": 0.1, "y": [1.5], "n": 3}));
        assert!(text.contains("\"x\": 0.10000000000000001"), "{text}");
        assert!(text.contains("1.5000000000000000"));
        assert!(text.contains("\"n\": 3"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn empty_set_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("never");
        let m = write_reports(&ReportSet::new(), &target).unwrap();
        assert!(m.files.is_empty());
        assert!(!target.exists());
    }

    #[test]
    fn manifest_lists_written_files_with_stable_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = ReportSet::new();
        set.insert("b.csv", "x\n");
        set.insert("a.json", "{}\n");
        let m1 = write_reports(&set, dir.path()).unwrap();
        let m2 = write_reports(&set, dir.path()).unwrap();
        assert_eq!(m1, m2);
        let names: Vec<&str> = m1.files.iter().map(|f| f.file.as_str()).collect();
        assert_eq!(names, vec!["a.json", "b.csv"]);
        let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        on_disk.sort();
        assert_eq!(on_disk, vec!["a.json", "b.csv"]);
        assert_eq!(m1.files[1].sha256, sha256_hex(b"x\n"));
    }

    #[test]
    fn unwritable_destination_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "").unwrap();
        let mut set = ReportSet::new();
        set.insert("a.txt", "a");
        let err = write_reports(&set, &file.join("sub")).unwrap_err();
        assert_eq!(err.kind(), "IoFailure");
    }

    proptest! {
        #[test]
        fn sig17_round_trips(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let text = format_sig17(x);
            prop_assert_eq!(text.parse::<f64>().unwrap(), if x == 0.0 { 0.0 } else { x });
        }
    }
}
