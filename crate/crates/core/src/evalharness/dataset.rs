use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::{AnswerType, GroundTruth, Percentage};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    #[default]
    Unassigned,
}

/// The on-disk line layout.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    category: String,
    prompt: String,
    #[serde(default)]
    image_refs: Vec<PathBuf>,
    answer_type: AnswerType,
    answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rel_tol: Option<f64>,
    #[serde(default)]
    split: Split,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub category: String,
    pub prompt: String,
    /// Carried through untouched; images are never opened.
    pub image_refs: Vec<PathBuf>,
    pub truth: GroundTruth,
    /// The answer as written in the dataset, kept for lossless re-export.
    pub answer: String,
    pub rel_tol: Option<f64>,
    pub split: Split,
}

impl DatasetRecord {
    pub fn new(
        id: impl Into<String>,
        category: impl Into<String>,
        prompt: impl Into<String>,
        truth: GroundTruth,
    ) -> Self {
        let answer = match &truth {
            GroundTruth::OptionLetter(c) => c.to_string(),
            GroundTruth::ExactNumber(q) => q.to_string(),
            GroundTruth::ApproxNumber { value, .. } => value.to_string(),
            GroundTruth::Text(t) => t.clone(),
        };
        let rel_tol = match truth {
            GroundTruth::ApproxNumber { rel_tol, .. } => Some(rel_tol),
            _ => None,
        };
        Self {
            id: id.into(),
            category: category.into(),
            prompt: prompt.into(),
            image_refs: Vec::new(),
            truth,
            answer,
            rel_tol,
            split: Split::Unassigned,
        }
    }

    fn from_line(line: RecordLine) -> Result<Self, String> {
        if line.id.is_empty() {
            return Err("empty id".into());
        }
        if line.category.trim().is_empty() {
            return Err("empty category".into());
        }
        let truth = GroundTruth::parse(line.answer_type, &line.answer, line.rel_tol).map_err(|e| e.to_string())?;
        Ok(Self {
            id: line.id,
            category: line.category,
            prompt: line.prompt,
            image_refs: line.image_refs,
            truth,
            answer: line.answer,
            rel_tol: line.rel_tol,
            split: line.split,
        })
    }

    /// One dataset line, without the trailing newline.
    pub fn to_json_line(&self) -> String {
        let line = RecordLine {
            id: self.id.clone(),
            category: self.category.clone(),
            prompt: self.prompt.clone(),
            image_refs: self.image_refs.clone(),
            answer_type: self.truth.answer_type(),
            answer: self.answer.clone(),
            rel_tol: self.rel_tol,
            split: self.split,
        };
        serde_json::to_string(&line).expect("record serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestReport {
    pub records: Vec<DatasetRecord>,
    pub errors: Vec<LineError>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Parses dataset lines. Blank lines are skipped; every other line yields
/// either a record or a [`LineError`].
pub fn ingest_str(text: &str) -> IngestReport {
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        push_line(&mut report, &mut seen, i + 1, raw);
    }
    report
}

pub fn ingest(path: &Path) -> Result<IngestReport, IngestError> {
    let io = |source| IngestError::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    for (i, raw) in std::io::BufReader::new(file).lines().enumerate() {
        match raw {
            Ok(raw) => push_line(&mut report, &mut seen, i + 1, &raw),
            Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                report.errors.push(LineError { line: i + 1, message: "not valid UTF-8".into() })
            }
            Err(e) => return Err(io(e)),
        }
    }
    Ok(report)
}

fn push_line(report: &mut IngestReport, seen: &mut HashSet<String>, line: usize, raw: &str) {
    if raw.trim().is_empty() {
        return;
    }
    let parsed = serde_json::from_str::<RecordLine>(raw)
        .map_err(|e| e.to_string())
        .and_then(DatasetRecord::from_line)
        .and_then(|r| if seen.insert(r.id.clone()) { Ok(r) } else { Err(format!("duplicate id `{}`", r.id)) });
    match parsed {
        Ok(r) => report.records.push(r),
        Err(message) => report.errors.push(LineError { line, message }),
    }
}

/// Trimmed, whitespace-collapsed, lowercased prompt text.
pub fn normalize_prompt(prompt: &str) -> String {
    prompt.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DedupResult {
    pub kept: Vec<DatasetRecord>,
    pub removed: usize,
    pub removed_pct: Percentage,
}

/// Drops records whose normalized prompt was already seen, keeping the first.
pub fn dedup(records: Vec<DatasetRecord>) -> DedupResult {
    let total = records.len();
    let mut seen = HashSet::new();
    let kept: Vec<_> = records.into_iter().filter(|r| seen.insert(normalize_prompt(&r.prompt))).collect();
    let removed = total - kept.len();
    DedupResult {
        removed,
        removed_pct: if total == 0 { Percentage::ZERO } else { Percentage::of_counts(removed, total) },
        kept,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("split ratio parts must be positive, got {train}:{test}")]
    NonPositive { train: u64, test: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult {
    pub records: Vec<DatasetRecord>,
    pub train: usize,
    pub test: usize,
    /// Set when the dataset was too small to split and went entirely to train.
    pub warning: Option<String>,
}

/// Assigns `round(N * test / (train + test))` records to test, allocated to
/// categories by largest remainder so each category's test share is within
/// one record of proportional. Record order is preserved.
pub fn split(mut records: Vec<DatasetRecord>, ratio: (u64, u64), seed: u64) -> Result<SplitResult, SplitError> {
    let (train_part, test_part) = ratio;
    if train_part == 0 || test_part == 0 {
        return Err(SplitError::NonPositive { train: train_part, test: test_part });
    }
    let n = records.len();
    let parts = u128::from(train_part) + u128::from(test_part);
    if (n as u128) < parts {
        for r in &mut records {
            r.split = Split::Train;
        }
        return Ok(SplitResult {
            train: n,
            test: 0,
            warning: Some(format!("{n} records is fewer than {train_part}:{test_part} needs; all assigned to train")),
            records,
        });
    }
    let test_total = ((n as u128 * u128::from(test_part) * 2 + parts) / (parts * 2)) as usize;

    let mut by_category: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_category.entry(r.category.as_str()).or_default().push(i);
    }
    // Quota numerators are n_c * test_total over n; floors first, then the
    // largest remainders, ties broken by category name.
    let mut quotas: Vec<(usize, usize, &str)> = by_category
        .iter()
        .map(|(c, idx)| {
            let num = idx.len() * test_total;
            (num / n, num % n, *c)
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.0).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].1.cmp(&quotas[a].1).then(quotas[a].2.cmp(quotas[b].2)));
    for &k in order.iter().take(test_total - assigned) {
        quotas[k].0 += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; n];
    for ((_, idx), (quota, _, _)) in by_category.into_iter().zip(&quotas) {
        let mut idx = idx;
        idx.shuffle(&mut rng);
        for &i in &idx[..*quota] {
            is_test[i] = true;
        }
    }
    for (r, t) in records.iter_mut().zip(&is_test) {
        r.split = if *t { Split::Test } else { Split::Train };
    }
    Ok(SplitResult { train: n - test_total, test: test_total, warning: None, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: usize, category: &str, prompt: &str) -> DatasetRecord {
        DatasetRecord::new(id.to_string(), category, prompt, GroundTruth::option("A").unwrap())
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_prompt("  What IS\t2 +  2?\n"), "what is 2 + 2?");
    }

    #[test]
    fn line_round_trip() {
        let text = r#"{"id":"a","category":"math","prompt":"p","image_refs":["i.png"],"answer_type":"approx","answer":"0.5","rel_tol":0.01}"#;
        let report = ingest_str(text);
        assert!(report.errors.is_empty(), "{:?}", report.errors);
        let again = ingest_str(&report.records[0].to_json_line());
        assert_eq!(again.records, report.records);
    }

    #[test]
    fn small_split_falls_back_to_train() {
        let records: Vec<_> = (0..10).map(|i| rec(i, "c", "p")).collect();
        let out = split(records, (500, 1), 0).unwrap();
        assert_eq!((out.train, out.test), (10, 0));
        assert!(out.warning.is_some());
        assert!(out.records.iter().all(|r| r.split == Split::Train));
        assert!(split(vec![], (0, 1), 0).is_err());
    }
}
