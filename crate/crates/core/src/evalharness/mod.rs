//! Evaluation harness: datasets go in, per-category metric tables come out.
//! The token-count comparator lives here too.

mod dataset;
mod report;
mod tokens;

pub use dataset::{
    dedup, ingest, ingest_str, normalize_prompt, split, DatasetRecord, DedupResult, IngestError, IngestReport,
    LineError, Split, SplitError, SplitResult,
};
pub use report::{evaluate_corpus, CategoryReport, EvalReport, MeanStd, CSV_HEADER};
pub use tokens::{
    load_corpus, load_token_counts, token_reduction, total_tokens, Corpus, CorpusError, CountFileTokenizer, Tokenizer,
    WordPunctTokenizer,
};
