use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::num::NonZeroUsize;

use serde::Serialize;

use super::dataset::DatasetRecord;
use crate::engine::Limits;
use crate::extraction::{classify_completion, CompletionRecord};
use crate::scoring::{compute_reward, is_correct, Percentage, RewardConfig};

pub const CSV_HEADER: [&str; 7] =
    ["Category", "Count", "Code(%)", "NoErr(%)", "Accuracy(%)", "PromptTokLen mean±std", "OutputTokLen mean±std"];

/// Population mean and standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> MeanStd {
        if xs.is_empty() {
            return MeanStd::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}±{:.2}", self.mean, self.std)
    }
}

/// One row of the metrics table. Raw counts are kept so that aggregate rows
/// are recomputed from counts, never averaged from percentages.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryReport {
    pub category: String,
    pub count: usize,
    pub with_code: usize,
    pub error_free: usize,
    pub correct: usize,
    pub code_pct: Percentage,
    pub noerr_pct: Percentage,
    pub accuracy_pct: Percentage,
    pub prompt_tok: MeanStd,
    pub output_tok: MeanStd,
    pub mean_reward: f64,
}

impl CategoryReport {
    fn cells(&self) -> [String; 7] {
        [
            self.category.clone(),
            self.count.to_string(),
            self.code_pct.to_string(),
            self.noerr_pct.to_string(),
            self.accuracy_pct.to_string(),
            self.prompt_tok.to_string(),
            self.output_tok.to_string(),
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<CategoryReport>,
    /// Absent when no record had a completion.
    pub overall: Option<CategoryReport>,
    /// Ids of records that had no completion; excluded from every row.
    pub missing: Vec<String>,
}

struct Scored {
    has_code: bool,
    error_free: bool,
    correct: bool,
    reward: f64,
    prompt_tok: f64,
    output_tok: f64,
}

fn summarize(category: &str, items: &[&Scored]) -> CategoryReport {
    let count = items.len();
    let with_code = items.iter().filter(|s| s.has_code).count();
    let error_free = items.iter().filter(|s| s.error_free).count();
    let correct = items.iter().filter(|s| s.correct).count();
    let pct = |k| if count == 0 { Percentage::ZERO } else { Percentage::of_counts(k, count) };
    let column = |f: fn(&Scored) -> f64| items.iter().map(|s| f(s)).collect::<Vec<_>>();
    CategoryReport {
        category: category.to_string(),
        count,
        with_code,
        error_free,
        correct,
        code_pct: pct(with_code),
        noerr_pct: pct(error_free),
        accuracy_pct: pct(correct),
        prompt_tok: MeanStd::of(&column(|s| s.prompt_tok)),
        output_tok: MeanStd::of(&column(|s| s.output_tok)),
        mean_reward: if count == 0 { 0.0 } else { column(|s| s.reward).iter().sum::<f64>() / count as f64 },
    }
}

/// Scores one completion per record, matching `CompletionRecord::prompt_id`
/// to `DatasetRecord::id`; the first completion for an id is used. Rows are
/// ordered by category name.
pub fn evaluate_corpus(
    records: &[DatasetRecord],
    completions: &[CompletionRecord],
    limits: &Limits,
    reward: &RewardConfig,
) -> EvalReport {
    let mut by_prompt: HashMap<&str, &CompletionRecord> = HashMap::new();
    for c in completions {
        by_prompt.entry(c.prompt_id.as_str()).or_insert(c);
    }
    let mut missing = Vec::new();
    let mut jobs = Vec::new();
    for r in records {
        match by_prompt.get(r.id.as_str()) {
            Some(c) => jobs.push((r, *c)),
            None => missing.push(r.id.clone()),
        }
    }

    let score = |(r, c): &(&DatasetRecord, &CompletionRecord)| {
        let outcome = classify_completion(c, limits);
        Scored {
            has_code: outcome.has_code(),
            error_free: outcome.error_free(),
            correct: is_correct(&outcome, &r.truth),
            reward: compute_reward(&outcome, &r.truth, reward),
            prompt_tok: c.prompt_token_len as f64,
            output_tok: c.output_token_len as f64,
        }
    };
    let workers = std::thread::available_parallelism().map_or(1, NonZeroUsize::get);
    let chunk = jobs.len().div_ceil(workers).max(1);
    let scored: Vec<Scored> = std::thread::scope(|s| {
        let handles: Vec<_> =
            jobs.chunks(chunk).map(|part| s.spawn(move || part.iter().map(score).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("scoring worker panicked")).collect()
    });

    let mut groups: BTreeMap<&str, Vec<&Scored>> = BTreeMap::new();
    for ((r, _), s) in jobs.iter().zip(&scored) {
        groups.entry(r.category.as_str()).or_default().push(s);
    }
    let rows = groups.iter().map(|(c, items)| summarize(c, items)).collect();
    let overall = (!scored.is_empty()).then(|| summarize("Overall", &scored.iter().collect::<Vec<_>>()));
    EvalReport { rows, overall, missing }
}

impl EvalReport {
    fn all_rows(&self) -> impl Iterator<Item = &CategoryReport> {
        self.rows.iter().chain(&self.overall)
    }

    pub fn footer(&self) -> String {
        let scored = self.overall.as_ref().map_or(0, |o| o.count);
        format!("{scored} records scored, {} without a completion", self.missing.len())
    }

    /// Aligned plain-text table; text columns left-aligned, numbers right.
    pub fn to_table(&self) -> String {
        let rows: Vec<[String; 7]> = self.all_rows().map(CategoryReport::cells).collect();
        let mut widths = CSV_HEADER.map(|h| h.chars().count());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let mut parts = Vec::new();
            for (k, (cell, w)) in cells.iter().zip(widths).enumerate() {
                parts.push(if k == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") });
            }
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&CSV_HEADER.map(String::from));
        line(&widths.map(|w| "-".repeat(w)));
        for row in &rows {
            line(row);
        }
        let _ = writeln!(out, "{}", self.footer());
        out
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER).expect("writing to memory");
        for row in self.all_rows() {
            writer.write_record(row.cells()).expect("writing to memory");
        }
        String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("csv output is UTF-8")
    }
}
