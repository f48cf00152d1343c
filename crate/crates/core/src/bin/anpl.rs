use anpl::arc::{self, ArcTask, TaskStore};
use anpl::harness::{Harness, SubprocessHarness};
use anpl::llm::{ChatModel, HttpConfig, HttpModel, ReplayModel};
use anpl::resynth::IoConstraint;
use anpl::session::{self, EditOp, Session};
use anpl::value::Value;
use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

/// ANPL sketches compiled with a language model. State lives in a DARC log
/// that every command replays and extends.
#[derive(Parser)]
#[command(name = "anpl", version)]
struct Cli {
    /// Session log read and rewritten by each command.
    #[arg(long, global = true, default_value = "anpl-session.csv")]
    session: PathBuf,
    /// Answer model requests from recorded JSON-lines exchanges.
    #[arg(long, global = true)]
    llm_replay: Option<PathBuf>,
    /// Harness command, e.g. "python3 -m anpl_harness".
    #[arg(long, global = true, env = "ANPL_HARNESS")]
    harness: Option<String>,
    /// Directory of <task_id>.json files.
    #[arg(long, global = true, env = "ANPL_TASKS_DIR")]
    tasks: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Start a session: parse, check and compile a sketch for a task.
    Compile {
        file: PathBuf,
        /// Task id in the task directory, or a task JSON path.
        #[arg(long)]
        task: String,
    },
    /// Run main on an input, recording calls of the given functions.
    Trace {
        functions: Vec<String>,
        #[arg(long)]
        input: String,
    },
    /// Apply an edit given as JSON, e.g. {"op":"edit_description",...}.
    Edit {
        #[arg(long)]
        op: String,
    },
    /// Store constraints for a hole and regenerate it.
    Resynth {
        hole: String,
        /// {"input": [..], "output": ..}; repeatable.
        #[arg(long = "constraint")]
        constraints: Vec<String>,
    },
    /// Check the current program against the task's pairs.
    Check,
    /// Replay a log and print the final program.
    Replay { log: PathBuf },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Deserialize)]
struct ConstraintArg {
    input: Vec<Value>,
    output: Value,
}

type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("{}", json!({"ok": false, "error": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}

fn model(cli: &Cli) -> Fallible<Arc<dyn ChatModel>> {
    Ok(match &cli.llm_replay {
        Some(p) => Arc::new(ReplayModel::from_jsonl(std::io::BufReader::new(std::fs::File::open(p)?))?),
        None => Arc::new(HttpModel::new(HttpConfig::from_env())?),
    })
}

fn harness(cli: &Cli) -> Fallible<Arc<dyn Harness>> {
    let cmd = cli.harness.as_deref().ok_or("no harness configured (--harness or ANPL_HARNESS)")?;
    Ok(Arc::new(SubprocessHarness::new(cmd.split_whitespace())))
}

fn task(cli: &Cli, spec: &str) -> Fallible<ArcTask> {
    if Path::new(spec).is_file() {
        return Ok(arc::load_task(spec)?);
    }
    let dir = cli.tasks.as_ref().ok_or("task is not a file and no task directory is configured")?;
    Ok(TaskStore::new(dir).get(spec)?)
}

fn load(cli: &Cli, harness: &dyn Harness) -> Fallible<Session> {
    let csv = std::fs::read_to_string(&cli.session)?;
    Ok(session::replay(&csv, harness)?)
}

fn save(cli: &Cli, s: &Session) -> Fallible<()> {
    std::fs::write(&cli.session, s.export_log())?;
    Ok(())
}

fn no_harness() -> Arc<dyn Harness> {
    Arc::new(anpl::harness::FnHarness(|_: &anpl::harness::ExecRequest| {
        Err(anpl::harness::HarnessError::Unavailable("no harness configured".into()))
    }))
}

fn run(cli: Cli) -> Fallible<serde_json::Value> {
    match &cli.command {
        Cmd::Compile { file, task: spec } => {
            let text = std::fs::read_to_string(file)?;
            let t = task(&cli, spec)?;
            let llm = model(&cli)?;
            let (s, compiled) = Session::create(t, &text, llm.as_ref(), session::system_clock())?;
            save(&cli, &s)?;
            compiled?;
            let p = s.compiled()?;
            eprintln!("compiled {} hole(s) into {} function(s)", p.fill_map.len(), p.graph.len());
            Ok(serde_json::to_value(p)?)
        }
        Cmd::Trace { functions, input } => {
            let h = harness(&cli)?;
            let mut s = load(&cli, h.as_ref())?;
            let input: Value = input.parse()?;
            let r = s.trace(functions, &input, h.as_ref());
            save(&cli, &s)?;
            let r = r?;
            eprintln!("{} event(s)", r.events.len());
            Ok(serde_json::to_value(r)?)
        }
        Cmd::Edit { op } => {
            let op: EditOp = serde_json::from_str(op)?;
            let h = cli.harness.as_ref().map(|_| harness(&cli)).transpose()?.unwrap_or_else(no_harness);
            let mut s = load(&cli, h.as_ref())?;
            let llm = model(&cli)?;
            let r = s.apply_edit(&op, llm.as_ref());
            save(&cli, &s)?;
            let delta = r?;
            eprintln!(
                "{} changed, {} new, {} removed",
                delta.changed_holes.len(),
                delta.new_holes.len(),
                delta.removed_holes.len()
            );
            Ok(json!({"delta": delta, "compiled": s.compiled}))
        }
        Cmd::Resynth { hole, constraints } => {
            let h = harness(&cli)?;
            let mut s = load(&cli, h.as_ref())?;
            for c in constraints {
                let c: ConstraintArg = serde_json::from_str(c)?;
                s.add_constraint(IoConstraint {
                    hole_id: hole.clone(),
                    input: c.input,
                    expected_output: c.output,
                })?;
            }
            let llm = model(&cli)?;
            let r = s.resynthesize(hole, llm.as_ref(), h.as_ref());
            save(&cli, &s)?;
            let r = r?;
            eprintln!("candidate {} selected", r.selected);
            Ok(serde_json::to_value(r)?)
        }
        Cmd::Check => {
            let h = harness(&cli)?;
            let mut s = load(&cli, h.as_ref())?;
            let v = s.check(h.as_ref());
            save(&cli, &s)?;
            let v = v?;
            eprintln!("train {} / test {}", pass(v.train_pass), pass(v.test_pass));
            Ok(serde_json::to_value(v)?)
        }
        Cmd::Replay { log } => {
            let h = cli.harness.as_ref().map(|_| harness(&cli)).transpose()?.unwrap_or_else(no_harness);
            let csv = std::fs::read_to_string(log)?;
            let s = session::replay(&csv, h.as_ref())?;
            eprintln!("replayed {} log entries", s.log().len());
            Ok(json!({"ok": true, "entries": s.log().len(), "compiled": s.compiled}))
        }
        Cmd::Serve { port, host } => {
            let llm = model(&cli)?;
            let h = cli.harness.as_ref().map(|_| harness(&cli)).transpose()?.unwrap_or_else(no_harness);
            let mut state = anpl::server::AppState::new(llm, h);
            if let Some(dir) = &cli.tasks {
                state = state.with_tasks(TaskStore::new(dir));
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), *port)).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                anpl::server::serve(listener, state).await
            })?;
            Ok(json!({"ok": true}))
        }
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}
