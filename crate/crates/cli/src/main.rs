use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use neurosym::engine::{evaluate, Environment, Limits};
use neurosym::evalharness::{
    dedup, evaluate_corpus, ingest, load_corpus, load_token_counts, split, token_reduction, total_tokens,
    DatasetRecord, Split, WordPunctTokenizer,
};
use neurosym::extraction::CompletionRecord;
use neurosym::grpo::{default_toy_tasks, train_toy, TrainConfig};
use neurosym::lang::parse_program;
use neurosym::scoring::RewardConfig;
use neurosym::service::{serve_lines, serve_tcp, ServiceConfig};

#[derive(Parser)]
#[command(name = "neurosym", version, about = "Run, score and evaluate neuro-symbolic mini-programs")]
struct Cli {
    /// Evaluation step budget per program.
    #[arg(long, global = true)]
    limits_steps: Option<u64>,
    /// Wall-clock budget per program, in milliseconds.
    #[arg(long, global = true)]
    limits_ms: Option<u64>,
    /// TOML file with reward weights.
    #[arg(long, global = true)]
    reward_config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scoring threads; defaults to the number of processing units.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate lines interactively; definitions persist between lines.
    Repl,
    /// Evaluate a program file and print its value.
    Run { file: PathBuf },
    /// Score request lines from stdin until end of input.
    Score,
    /// Serve scoring requests until end of input or a termination signal.
    Serve {
        /// Listen on this TCP address instead of stdio.
        #[arg(long)]
        tcp: Option<String>,
        /// Include each parsed request in its response.
        #[arg(long)]
        echo: bool,
    },
    /// Score completions against a dataset and print the category table.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        completions: PathBuf,
        /// Also write the table as CSV to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Score every record instead of only the test split.
        #[arg(long)]
        all: bool,
    },
    /// Train the tabular toy policy and print one JSON line per epoch.
    TrainToy {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare total token counts of two program directories.
    CompareTokens {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// JSON object of program name to token count for `a`.
        #[arg(long)]
        counts_a: Option<PathBuf>,
        #[arg(long)]
        counts_b: Option<PathBuf>,
    },
    /// Deduplicate and split a dataset, writing it back with splits assigned.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "500:1", value_parser = parse_ratio)]
        ratio: (u64, u64),
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        no_dedup: bool,
    },
}

fn parse_ratio(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once(':').ok_or("expected TRAIN:TEST, e.g. 500:1")?;
    let part =
        |p: &str| p.trim().parse::<u64>().ok().filter(|n| *n > 0).ok_or(format!("`{p}` is not a positive integer"));
    Ok((part(a)?, part(b)?))
}

enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))
}

fn limits(cli: &Cli) -> Result<Limits, Failure> {
    let mut l = Limits::default();
    if let Some(s) = cli.limits_steps {
        l.max_steps = s;
    }
    if let Some(ms) = cli.limits_ms {
        l.wall_clock_ms = ms;
    }
    l.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(l)
}

fn reward(cli: &Cli) -> Result<RewardConfig, Failure> {
    match &cli.reward_config {
        Some(path) => RewardConfig::load(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
        None => Ok(RewardConfig::default()),
    }
}

fn service_config(cli: &Cli, echo: bool) -> Result<ServiceConfig, Failure> {
    let mut config = ServiceConfig { reward: reward(cli)?, limits: limits(cli)?, echo, ..ServiceConfig::default() };
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::Usage("--workers must be positive".into()));
        }
        config.workers = w;
    }
    Ok(config)
}

fn repl(cli: &Cli) -> Result<(), Failure> {
    let limits = limits(cli)?;
    let mut env = Environment::new();
    let interactive = io::stdin().is_terminal();
    let mut out = io::stdout().lock();
    let prompt = |out: &mut io::StdoutLock| -> io::Result<()> {
        if interactive {
            write!(out, "> ")?;
            out.flush()?;
        }
        Ok(())
    };
    prompt(&mut out).map_err(internal)?;
    for line in io::stdin().lock().lines() {
        let line = line.map_err(data)?;
        if !line.trim().is_empty() {
            let reply = match parse_program(&line) {
                Err(e) => format!("syntax error: {e}"),
                Ok(program) => match evaluate(&program, &mut env, &limits) {
                    Ok(v) => v.to_string(),
                    Err(e) => format!("error: {e}"),
                },
            };
            writeln!(out, "{reply}").map_err(internal)?;
        }
        prompt(&mut out).map_err(internal)?;
    }
    Ok(())
}

fn run(cli: &Cli, file: &Path) -> Result<(), Failure> {
    let limits = limits(cli)?;
    let program = parse_program(&read_text(file)?).map_err(|e| Failure::Data(format!("{}: {e}", file.display())))?;
    let value = evaluate(&program, &mut Environment::new(), &limits).map_err(data)?;
    println!("{value}");
    Ok(())
}

fn serve(cli: &Cli, tcp: Option<&str>, echo: bool, persistent: bool) -> Result<(), Failure> {
    let config = service_config(cli, echo)?;
    let shutdown = Arc::new(AtomicBool::new(false));
    if persistent {
        for signal in [signal_hook::consts::SIGTERM, signal_hook::consts::SIGINT] {
            signal_hook::flag::register(signal, Arc::clone(&shutdown)).map_err(internal)?;
        }
    }
    let stats = match tcp {
        Some(addr) => {
            return serve_tcp(addr, &config, shutdown, |bound| eprintln!("listening on {bound}")).map_err(internal);
        }
        None => {
            serve_lines(io::BufReader::new(io::stdin()), io::stdout().lock(), &config, shutdown).map_err(internal)?
        }
    };
    if persistent {
        eprintln!("served {} requests ({} errors)", stats.requests, stats.errors);
    }
    Ok(())
}

fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, Failure> {
    let report = ingest(path).map_err(data)?;
    for e in &report.errors {
        eprintln!("{}: {e}", path.display());
    }
    if !report.errors.is_empty() {
        eprintln!("{}: {} malformed lines skipped", path.display(), report.errors.len());
    }
    Ok(report.records)
}

fn read_completions(path: &Path) -> Result<Vec<CompletionRecord>, Failure> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let record = serde_json::from_str(line)
            .map_err(|e| Failure::Data(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        out.push(record);
    }
    Ok(out)
}

fn eval(cli: &Cli, dataset: &Path, completions: &Path, csv: Option<&Path>, all: bool) -> Result<(), Failure> {
    let mut records = read_dataset(dataset)?;
    if !all {
        if records.iter().any(|r| r.split == Split::Test) {
            records.retain(|r| r.split == Split::Test);
        } else {
            eprintln!("no records are marked test; scoring all {}", records.len());
        }
    }
    let completions = read_completions(completions)?;
    let report = evaluate_corpus(&records, &completions, &limits(cli)?, &reward(cli)?);
    print!("{}", report.to_table());
    if let Some(path) = csv {
        fs::write(path, report.to_csv()).map_err(|e| internal(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn train(cli: &Cli, config: Option<&Path>) -> Result<(), Failure> {
    let mut train = match config {
        Some(path) => TrainConfig::load(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = cli.seed {
        train.seed = seed;
    }
    let history = train_toy(&default_toy_tasks(), &train, &reward(cli)?).map_err(internal)?;
    print!("{}", history.to_jsonl());
    eprintln!(
        "mean reward {:.4} -> {:.4} (max {:.4}) over {} epochs",
        history.initial_mean_reward,
        history.final_mean_reward(),
        history.max_mean_reward,
        history.epochs.len()
    );
    Ok(())
}

fn compare(a: &Path, b: &Path, counts_a: Option<&Path>, counts_b: Option<&Path>) -> Result<(), Failure> {
    let total = |dir: &Path, counts: Option<&Path>| -> Result<u64, Failure> {
        let corpus = load_corpus(dir).map_err(data)?;
        match counts {
            Some(file) => load_token_counts(file).and_then(|c| c.total(&corpus)).map_err(data),
            None => Ok(total_tokens(&corpus, &WordPunctTokenizer)),
        }
    };
    let (ta, tb) = (total(a, counts_a)?, total(b, counts_b)?);
    let reduction = token_reduction(ta, tb).map_err(data)?;
    println!("a: {ta} tokens\nb: {tb} tokens\nreduction: {reduction}%");
    Ok(())
}

fn split_cmd(
    cli: &Cli,
    dataset: &Path,
    ratio: (u64, u64),
    output: Option<&Path>,
    no_dedup: bool,
) -> Result<(), Failure> {
    let mut records = read_dataset(dataset)?;
    if !no_dedup {
        let d = dedup(records);
        eprintln!("dedup removed {} records ({}%)", d.removed, d.removed_pct);
        records = d.kept;
    }
    let result = split(records, ratio, cli.seed.unwrap_or(0)).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(w) = &result.warning {
        eprintln!("warning: {w}");
    }
    eprintln!("train {}, test {}", result.train, result.test);
    let text: String = result.records.iter().map(|r| r.to_json_line() + "\n").collect();
    match output {
        Some(path) => fs::write(path, text).map_err(|e| internal(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(internal),
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Repl => repl(cli),
        Command::Run { file } => run(cli, file),
        Command::Score => serve(cli, None, false, false),
        Command::Serve { tcp, echo } => serve(cli, tcp.as_deref(), *echo, true),
        Command::Eval { dataset, completions, csv, all } => eval(cli, dataset, completions, csv.as_deref(), *all),
        Command::TrainToy { config } => train(cli, config.as_deref()),
        Command::CompareTokens { a, b, counts_a, counts_b } => compare(a, b, counts_a.as_deref(), counts_b.as_deref()),
        Command::Split { dataset, ratio, output, no_dedup } => {
            split_cmd(cli, dataset, *ratio, output.as_deref(), *no_dedup)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| dispatch(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(failure)) => {
            eprintln!("neurosym: {}", failure.message());
            ExitCode::from(failure.code())
        }
        Err(_) => ExitCode::from(3),
    }
}
