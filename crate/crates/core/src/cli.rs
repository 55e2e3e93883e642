//! Command-line front end. Everything runs against an in-process engine, so
//! no server is needed for anything but `serve`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::agent::{AgentTrace, Route};
use crate::clock::{Clock, LogicalClock, SystemClock};
use crate::engine::{read_source, Engine, EngineConfig};
use crate::eval::{self, EvalDeps, Mode, ReportFormat};
use crate::kg::{self, Triple};
use crate::llm::RemoteConfig;
use crate::queue::{AdminAction, PendingRecord, Status, DEFAULT_ACTOR};
use crate::retrieval::{self, DEFAULT_CHUNK_TOKENS};
use crate::service::{self, ServiceConfig, TraceBody};

#[derive(Debug, Parser)]
#[command(name = "cogmg", version, about = "Knowledge graph question answering that grows the graph from what it cannot answer")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "COGMG_CONFIG")]
    config: Option<PathBuf>,
    /// Knowledge graph file, or the alias "fixture".
    #[arg(long, global = true, env = "COGMG_KG")]
    kg: Option<String>,
    /// Corpus file, or the alias "corpus".
    #[arg(long, global = true, env = "COGMG_CORPUS")]
    corpus: Option<String>,
    /// Scripted model responses, or the aliases "demo" and "eval-script".
    #[arg(long, global = true, env = "COGMG_SCRIPT", conflicts_with = "remote")]
    script: Option<String>,
    /// Chat-completions endpoint URL.
    #[arg(long, global = true, env = "COGMG_REMOTE")]
    remote: Option<String>,
    /// Queue event log. Without it the queue only lives for one command.
    #[arg(long, global = true, env = "COGMG_LOG")]
    log: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text, env = "COGMG_FORMAT")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Records,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "COGMG_BIND")]
        bind: Option<String>,
        /// Per-request timeout in seconds.
        #[arg(long, env = "COGMG_ASK_TIMEOUT")]
        ask_timeout: Option<u64>,
    },
    /// Answer one question.
    Ask {
        question: String,
        /// Print the full Thought/Action/Observation trace.
        #[arg(long)]
        trace: bool,
        /// Ask the model alone, bypassing the graph.
        #[arg(long)]
        direct: bool,
    },
    /// Inspect and edit the knowledge graph.
    #[command(subcommand)]
    Kg(KgCommand),
    /// Validate and index the retrieval corpus.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Review pending knowledge completions.
    #[command(subcommand)]
    Queue(QueueCommand),
    /// Run the three-scenario evaluation.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Subcommand)]
enum KgCommand {
    /// Validate a graph file and print its counts.
    Load { path: PathBuf },
    /// Counts of the graph of record (base graph plus accepted knowledge).
    Stats,
    /// Add a complete triple to the base graph file.
    Add {
        triple: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Remove everything matching a pattern from the base graph file.
    Remove {
        pattern: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// List triples matching a pattern such as "(France; ?; ?)".
    Match { pattern: String },
    /// Write a snapshot of the graph of record.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct OutArg {
    /// Write the result here instead of back to --kg.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    /// Validate a corpus file and print document and chunk counts.
    Ingest { path: String },
    /// Build the retrieval index, reusing the cache when the corpus is unchanged.
    Index {
        #[arg(long)]
        cache: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum QueueCommand {
    /// List records, newest first.
    List {
        /// pending, verified, edited, accepted, rejected or all.
        #[arg(long)]
        status: Option<String>,
    },
    /// Print one record with its evidence and history.
    Show { id: String },
    /// Integrate the record's triples into the graph.
    Accept {
        id: String,
        #[arg(long, default_value = DEFAULT_ACTOR)]
        actor: String,
    },
    /// Check the completions against retrieved evidence.
    Verify {
        id: String,
        #[arg(long, default_value = DEFAULT_ACTOR)]
        actor: String,
    },
    /// Replace the completions with the given complete triples.
    Edit {
        id: String,
        #[arg(required = true)]
        triples: Vec<String>,
        #[arg(long, default_value = DEFAULT_ACTOR)]
        actor: String,
    },
    /// Discard the record.
    Reject {
        id: String,
        #[arg(long, default_value = DEFAULT_ACTOR)]
        actor: String,
    },
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Run the evaluation scenarios and print the comparison.
    Run {
        #[arg(long, value_enum, default_value_t = EvalMode::All)]
        mode: EvalMode,
        /// Eval items file, or the alias "synthetic20".
        #[arg(long, default_value = "synthetic20")]
        fixture: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalMode {
    Direct,
    WithoutKnowledge,
    Updated,
    All,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn service_config(cli: &Cli) -> Result<ServiceConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    let e = &mut cfg.engine;
    if cli.kg.is_some() {
        e.kg = cli.kg.clone();
    }
    if cli.corpus.is_some() {
        e.corpus = cli.corpus.clone();
    }
    if cli.log.is_some() {
        e.log = cli.log.clone();
    }
    if let Some(script) = &cli.script {
        e.script = Some(script.clone());
        e.remote = None;
    }
    if let Some(url) = &cli.remote {
        let base = e.remote.take().map(|r| RemoteConfig { endpoint: url.clone(), ..r });
        e.remote = Some(base.unwrap_or_else(|| RemoteConfig::new(url.clone())).with_env_overrides());
    }
    Ok(cfg)
}

fn json_line(out: &mut dyn Write, value: &impl Serialize) -> Outcome {
    writeln!(out, "{}", serde_json::to_string(value).expect("value serializes"))?;
    Ok(())
}

fn parse_triple(text: &str) -> Result<Triple, Failure> {
    Triple::parse(text).map_err(|e| Failure::Usage(format!("{text:?} is not a triple: {e}")))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let cfg = service_config(cli)?;
    match &cli.command {
        Command::Serve { bind, ask_timeout } => {
            let mut cfg = cfg;
            if let Some(b) = bind {
                cfg.bind = b.clone();
            }
            if let Some(t) = ask_timeout {
                cfg.ask_timeout_secs = *t;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(cfg))?;
            Ok(())
        }
        Command::Ask { question, trace, direct } => {
            let engine = Engine::open(&cfg.engine)?;
            let result = if *direct { engine.direct_answer(question) } else { engine.ask(question) };
            match result {
                Ok(t) => print_trace(out, &t, *trace, cli.format),
                Err(e) => {
                    if let (Some(t), true) = (e.partial_trace(), *trace) {
                        print_trace(out, t, true, cli.format)?;
                    }
                    Err(e.into())
                }
            }
        }
        Command::Kg(cmd) => kg_command(cmd, &cfg.engine, cli.format, out),
        Command::Corpus(cmd) => corpus_command(cmd, &cfg.engine, cli.format, out),
        Command::Queue(cmd) => queue_command(cmd, &cfg.engine, cli.format, out),
        Command::Eval(EvalCommand::Run { mode, fixture }) => eval_command(*mode, fixture, &cfg.engine, cli.format, out),
    }
}

fn print_trace(out: &mut dyn Write, t: &AgentTrace, full: bool, format: Format) -> Outcome {
    match format {
        Format::Records => json_line(out, &TraceBody::from(t)),
        Format::Text if full => {
            let route = t.route.map_or("none", Route::as_str);
            write!(out, "Trace: {} ({route})\n{}", t.id, t.render_text())?;
            for id in &t.pending_ids {
                writeln!(out, "Queued: {id}")?;
            }
            Ok(())
        }
        Format::Text => {
            writeln!(out, "{}", t.final_answer)?;
            Ok(())
        }
    }
}

fn kg_command(cmd: &KgCommand, cfg: &EngineConfig, format: Format, out: &mut dyn Write) -> Outcome {
    let print_stats = |out: &mut dyn Write, s: kg::KgStats| -> Outcome {
        match format {
            Format::Records => json_line(out, &s),
            Format::Text => {
                writeln!(out, "entities: {}\nedges: {}\nattributes: {}", s.entities, s.edges, s.attributes)?;
                Ok(())
            }
        }
    };
    match cmd {
        KgCommand::Load { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
            print_stats(out, kg::load_kg_str(&text)?.stats())
        }
        KgCommand::Stats => print_stats(out, Engine::open(cfg)?.kg_stats()),
        KgCommand::Add { triple, out: dest } => {
            let triple = parse_triple(triple)?;
            let target = edit_target(cfg, dest)?;
            let mut graph = cfg.load_kg()?;
            let outcome = graph.add_triple(&triple)?;
            write_graph(&target, &graph)?;
            match format {
                Format::Records => json_line(out, &serde_json::json!({ "outcome": outcome })),
                Format::Text => {
                    let word = serde_json::to_value(outcome).expect("outcome serializes");
                    writeln!(out, "{}", word.as_str().unwrap_or_default())?;
                    Ok(())
                }
            }
        }
        KgCommand::Remove { pattern, out: dest } => {
            let pattern = parse_triple(pattern)?;
            let target = edit_target(cfg, dest)?;
            let mut graph = cfg.load_kg()?;
            let removed = graph.remove_matching(&pattern);
            write_graph(&target, &graph)?;
            match format {
                Format::Records => json_line(out, &serde_json::json!({ "removed": removed })),
                Format::Text => {
                    writeln!(out, "removed {removed}")?;
                    Ok(())
                }
            }
        }
        KgCommand::Match { pattern } => {
            let pattern = parse_triple(pattern)?;
            for t in Engine::open(cfg)?.kg_match(&pattern) {
                match format {
                    Format::Records => json_line(out, &t)?,
                    Format::Text => writeln!(out, "{t}")?,
                }
            }
            Ok(())
        }
        KgCommand::Export { out: dest } => {
            let bytes = Engine::open(cfg)?.kg_snapshot();
            match dest {
                Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::Domain(format!("{}: {e}", p.display()))),
                None => {
                    out.write_all(&bytes)?;
                    Ok(())
                }
            }
        }
    }
}

/// Where a base-graph edit is written: `--out`, else the `--kg` file itself.
fn edit_target(cfg: &EngineConfig, dest: &OutArg) -> Result<PathBuf, Failure> {
    if let Some(p) = &dest.out {
        return Ok(p.clone());
    }
    match &cfg.kg {
        Some(spec) if Path::new(spec).is_file() => Ok(PathBuf::from(spec)),
        _ => Err(Failure::Usage("the built-in fixture is read only; pass --kg <file> or --out <file>".into())),
    }
}

fn write_graph(path: &Path, graph: &kg::KnowledgeGraph) -> Outcome {
    std::fs::write(path, kg::snapshot(graph)).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn corpus_command(cmd: &CorpusCommand, cfg: &EngineConfig, format: Format, out: &mut dyn Write) -> Outcome {
    let (docs, chunks, rebuilt) = match cmd {
        CorpusCommand::Ingest { path } => {
            let docs = retrieval::load_corpus_str(&read_source(path)?)?;
            let chunks = retrieval::chunk_corpus(&docs, DEFAULT_CHUNK_TOKENS).len();
            (docs.len(), chunks, None)
        }
        CorpusCommand::Index { cache } => {
            let text = match &cfg.corpus {
                Some(spec) => read_source(spec)?.into_owned(),
                None => crate::fixtures::FIXTURE_CORPUS.to_string(),
            };
            let (index, rebuilt) = retrieval::load_or_build_cache(text.as_bytes(), cache)?;
            let docs: std::collections::BTreeSet<&str> = index.chunks().iter().map(|c| c.doc_id.as_str()).collect();
            (docs.len(), index.n_chunks(), Some(rebuilt))
        }
    };
    match format {
        Format::Records => json_line(out, &serde_json::json!({ "documents": docs, "chunks": chunks, "rebuilt": rebuilt })),
        Format::Text => {
            let mut line = format!("documents: {docs}\nchunks: {chunks}");
            if let Some(r) = rebuilt {
                let _ = write!(line, "\nindex: {}", if r { "rebuilt" } else { "reused from cache" });
            }
            writeln!(out, "{line}")?;
            Ok(())
        }
    }
}

fn print_record(out: &mut dyn Write, rec: &PendingRecord, format: Format) -> Outcome {
    if format == Format::Records {
        return json_line(out, rec);
    }
    let triples = |ts: &[Triple]| ts.iter().map(Triple::to_string).collect::<Vec<_>>().join("; ");
    let mut s = format!(
        "id: {}\nstatus: {}\nquestion: {}\nincomplete: {}\ncompleted: {}\n",
        rec.id,
        rec.status,
        rec.question,
        triples(&rec.incomplete),
        triples(&rec.completed)
    );
    if let Some(c) = &rec.corrected {
        let _ = writeln!(s, "corrected: {}", triples(c));
    }
    if let Some(e) = &rec.edited {
        let _ = writeln!(s, "edited: {}", triples(e));
    }
    if !rec.evidence.is_empty() {
        s.push_str("evidence:\n");
        for (i, ev) in rec.evidence.iter().enumerate() {
            let _ = writeln!(s, "  [{}] {}#{} score {:.4}: {}", i + 1, ev.doc_id, ev.chunk_index, ev.score, ev.text);
        }
    }
    s.push_str("history:\n");
    for h in &rec.history {
        let _ = writeln!(s, "  {} by {} at {}", h.action, h.actor, h.ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn queue_command(cmd: &QueueCommand, cfg: &EngineConfig, format: Format, out: &mut dyn Write) -> Outcome {
    let engine = Engine::open(cfg)?;
    let (id, action, actor) = match cmd {
        QueueCommand::List { status } => {
            let status = match status.as_deref() {
                None | Some("all") => None,
                Some(s) => Some(s.parse::<Status>().map_err(Failure::Usage)?),
            };
            for rec in engine.pending(status) {
                match format {
                    Format::Records => json_line(out, &rec)?,
                    Format::Text => {
                        let inc: Vec<String> = rec.incomplete.iter().map(Triple::to_string).collect();
                        writeln!(out, "{}\t{}\t{}\t{}", rec.id, rec.status, rec.question, inc.join("; "))?
                    }
                }
            }
            return Ok(());
        }
        QueueCommand::Show { id } => return print_record(out, &engine.pending_record(id)?, format),
        QueueCommand::Accept { id, actor } => (id, AdminAction::AcceptDirect, actor),
        QueueCommand::Verify { id, actor } => (id, AdminAction::Verify, actor),
        QueueCommand::Reject { id, actor } => (id, AdminAction::Reject, actor),
        QueueCommand::Edit { id, triples, actor } => {
            let triples = triples.iter().map(|t| parse_triple(t)).collect::<Result<Vec<_>, _>>()?;
            (id, AdminAction::Edit(triples), actor)
        }
    };
    let rec = engine.pending_action(id, action, actor)?;
    print_record(out, &rec, format)
}

fn eval_command(mode: EvalMode, fixture: &str, cfg: &EngineConfig, format: Format, out: &mut dyn Write) -> Outcome {
    let items = eval::load_items(&read_source(fixture)?)?;
    let graph = cfg.load_kg()?;
    let gateway = cfg.gateway()?;
    let clock: Box<dyn Clock> = if cfg.remote.is_some() { Box::new(SystemClock) } else { Box::new(LogicalClock::new()) };
    let deps = EvalDeps { kg: &graph, gateway: &gateway, clock: clock.as_ref() };
    let modes: Vec<Mode> = match mode {
        EvalMode::Direct => vec![Mode::Direct],
        EvalMode::WithoutKnowledge => vec![Mode::WithoutKnowledge],
        EvalMode::Updated => vec![Mode::Updated],
        EvalMode::All => Mode::ALL.to_vec(),
    };
    let reports: Vec<_> = modes.into_iter().map(|m| eval::run_scenario(&items, m, &deps)).collect();
    let fmt = match format {
        Format::Text => ReportFormat::Table,
        Format::Records => ReportFormat::Records,
    };
    out.write_all(eval::emit_report(&reports, fmt).as_bytes())?;
    Ok(())
}
