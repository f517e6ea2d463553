use std::collections::BTreeSet;
use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use serde_json::{json, Value};

use statebuddy_core::engine::{log_path, read_log, FireOrigin, JsonlSink, Session};
use statebuddy_core::transcript::{self, Transcript};
use statebuddy_core::workflow::{export_diagram, load_workflow_with, LoadOptions, Severity, WorkflowCatalog};
use statebuddy_core::{Config, Deployment, ManualClock, SessionEnv, SystemClock};
use statebuddy_service::{Service, ServiceOptions};

use crate::describe;
use crate::{EXIT_FAILED, EXIT_OK};

pub struct Context {
    pub config: Option<PathBuf>,
    pub json: bool,
}

fn config(ctx: &Context) -> Result<Config> {
    Ok(Config::load_or_default(ctx.config.as_deref())?)
}

fn deployment(ctx: &Context) -> Result<Deployment> {
    Ok(Deployment::from_config(config(ctx)?)?)
}

fn load_options(d: &Deployment, known: BTreeSet<String>) -> LoadOptions {
    LoadOptions {
        lenient: d.config.lenient,
        known_workflows: Some(known),
        gui_elements: Some(d.scenarios.iter().flat_map(|s| s.elements()).collect()),
        helper_docs: Some(d.helper.keys()),
        globals: Some(d.globals.clone()),
    }
}

/// A catalog id, or a workflow file added to the catalog for this run.
fn resolve_workflow(d: &mut Deployment, arg: &str) -> Result<String> {
    if d.catalog.contains(arg) {
        return Ok(arg.to_string());
    }
    let path = Path::new(arg);
    if !path.is_file() {
        bail!("`{arg}` is neither a workflow in the catalog nor a file");
    }
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
    let opts = load_options(d, d.catalog.ids().map(str::to_string).collect());
    let w = load_workflow_with(&src, &opts).with_context(|| format!("{arg} is not a valid workflow"))?.definition;
    let id = w.id.clone();
    let mut catalog = WorkflowCatalog::clone(&d.catalog);
    catalog.insert(w);
    d.catalog = Arc::new(catalog);
    Ok(id)
}

fn session_env(d: &Deployment, virtual_clock: bool, zero_delay: bool) -> SessionEnv {
    let mut env = if virtual_clock {
        d.env(Arc::new(ManualClock::new(0)))
    } else {
        d.env(Arc::new(SystemClock))
    };
    if zero_delay {
        env.cursor_speed_ms = 0;
    }
    env
}

/// Opens a fresh log, replacing an earlier run with the same id.
fn fresh_log(dir: &Path, id: &str) -> Result<(PathBuf, JsonlSink)> {
    let path = log_path(dir, id);
    if path.exists() {
        std::fs::remove_file(&path).with_context(|| format!("removing {}", path.display()))?;
    }
    let sink = JsonlSink::open(&path).with_context(|| format!("opening {}", path.display()))?;
    Ok((path, sink))
}

// ---- validate ----

fn json_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        Ok(files)
    } else if path.is_file() {
        Ok(vec![path.to_path_buf()])
    } else {
        bail!("{} does not exist", path.display())
    }
}

pub fn validate(ctx: &Context, paths: &[PathBuf]) -> Result<u8> {
    let d = deployment(ctx)?;
    let (count, diagnostics) = if paths.is_empty() {
        (d.catalog.len(), d.diagnostics.clone())
    } else {
        let mut docs = Vec::new();
        for p in paths {
            for f in json_files(p)? {
                let src = std::fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
                docs.push((f.display().to_string(), src));
            }
        }
        let opts = load_options(&d, d.catalog.ids().map(str::to_string).collect());
        let (catalog, diags) = WorkflowCatalog::from_sources(docs.iter().map(|(n, s)| (n.clone(), s.as_str())), &opts);
        (catalog.len(), diags)
    };
    let mut failed = 0;
    for diag in &diagnostics {
        let severity = match diag.severity {
            Severity::Error => {
                failed += 1;
                "error"
            }
            Severity::Warning => "warning",
        };
        for issue in &diag.issues {
            if ctx.json {
                let finding = json!({"source": diag.source, "severity": severity, "path": issue.path, "message": issue.message});
                println!("{finding}");
            } else {
                eprintln!("{}: {severity}: {}: {}", diag.source, issue.path, issue.message);
            }
        }
    }
    if !ctx.json {
        eprintln!("{count} workflow(s) valid, {failed} file(s) with errors");
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILED })
}

// ---- run ----

fn state_json(s: &Session) -> Value {
    let st = s.state();
    let top = st.top();
    json!({
        "workflow": top.map(|f| f.workflow.as_str()),
        "state": top.map(|f| f.state.as_str()),
        "depth": st.depth(),
        "autopilot_enabled": st.autopilot_enabled,
        "complete": s.is_complete(),
        "ended": st.ended,
        "admissible": if st.ended { Vec::new() } else { s.admissible().unwrap_or_default() },
    })
}

struct Printer {
    json: bool,
    shown: u64,
}

impl Printer {
    fn new_events(&mut self, s: &Session) -> Vec<Value> {
        let new = s.events_after(self.shown);
        self.shown = s.state().seq;
        if self.json {
            new.iter().map(|e| serde_json::to_value(e).expect("events serialize")).collect()
        } else {
            for e in new {
                println!("{}", describe::event(e));
            }
            Vec::new()
        }
    }

    fn turn(&mut self, s: &Session, mut record: serde_json::Map<String, Value>) {
        let events = self.new_events(s);
        if self.json {
            record.insert("events".into(), Value::Array(events));
            record.insert("state".into(), state_json(s));
            println!("{}", Value::Object(record));
        } else {
            println!("{}", describe::state(s));
        }
    }
}

pub fn run(ctx: &Context, workflow: &str, direct: bool, seed: Option<u64>, zero_delay: bool) -> Result<u8> {
    let mut d = deployment(ctx)?;
    let id = resolve_workflow(&mut d, workflow)?;
    let session_id = match seed {
        Some(n) => format!("run-{n}"),
        None => uuid::Uuid::new_v4().simple().to_string(),
    };
    let (path, sink) = fresh_log(d.log_dir(), &session_id)?;
    let env = session_env(&d, zero_delay, zero_delay);
    let mut s = Session::start(env, &session_id, &id, vec![Box::new(sink)])
        .with_context(|| format!("starting {id}"))?;
    let mut out = Printer { json: ctx.json, shown: 0 };
    out.turn(&s, Default::default());

    let interactive = std::io::stdin().is_terminal();
    let mut lines = std::io::stdin().lock().lines();
    loop {
        if interactive && !ctx.json {
            print!("> ");
            std::io::stdout().flush()?;
        }
        let Some(line) = lines.next() else { break };
        let line = line.context("reading stdin")?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let mut record = serde_json::Map::new();
        record.insert("input".into(), json!(text));
        let error = if direct {
            s.dispatch(text, FireOrigin::Direct).err()
        } else {
            match s.submit_utterance(text, &d.matcher) {
                Ok(o) => {
                    if !ctx.json {
                        println!("{}", describe::decision(&o.decision));
                    }
                    record.insert("decision".into(), serde_json::to_value(&o.decision)?);
                    o.dispatch.and_then(Result::err)
                }
                Err(e) => Some(e),
            }
        };
        if let Some(e) = error {
            if !ctx.json {
                println!("error: {e}");
            }
            record.insert("error".into(), json!({"error": e.code(), "message": e.to_string()}));
        }
        out.turn(&s, record);
        if s.state().ended {
            break;
        }
    }
    s.end("input closed")?;
    out.turn(&s, Default::default());
    if !ctx.json {
        println!("log: {}", path.display());
    }
    Ok(EXIT_OK)
}

// ---- replay ----

pub fn replay(ctx: &Context, workflow: &str, transcript_path: &Path) -> Result<u8> {
    let mut d = deployment(ctx)?;
    let id = resolve_workflow(&mut d, workflow)?;
    let text = std::fs::read_to_string(transcript_path)
        .with_context(|| format!("reading {}", transcript_path.display()))?;
    let stem: String = transcript_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("transcript")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    let session_id = format!("replay-{stem}");
    let (path, sink) = fresh_log(d.log_dir(), &session_id)?;
    let env = session_env(&d, true, false);
    let mut s = Session::start(env, &session_id, &id, vec![Box::new(sink)])
        .with_context(|| format!("starting {id}"))?;
    let t = Transcript::parse(&text);
    let report = transcript::replay(&mut s, &t, &d.matcher)?;
    if ctx.json {
        let mut v = serde_json::to_value(&report)?;
        v["log"] = json!(path.display().to_string());
        v["expect"] = json!(t.expect);
        println!("{v}");
    } else {
        for l in &report.lines {
            let outcome = match (&l.matched, &l.error) {
                (_, Some(e)) => format!("error: {e}"),
                (Some(m), None) => m.clone(),
                (None, None) => "rejected".into(),
            };
            println!("{:>4}  {:<32} {:<24} {}:{}", l.line, l.utterance, outcome, l.workflow, l.state);
        }
        let expect = if t.expect.is_empty() { "any".to_string() } else { t.expect.join(", ") };
        println!(
            "final: {}:{} (expected {expect}) {}",
            report.workflow,
            report.state,
            if report.accepted { "ok" } else { "FAILED" }
        );
        println!("log: {}", path.display());
    }
    Ok(if report.accepted { EXIT_OK } else { EXIT_FAILED })
}

// ---- export ----

pub fn export(ctx: &Context, workflow: &str) -> Result<u8> {
    let mut d = deployment(ctx)?;
    let id = resolve_workflow(&mut d, workflow)?;
    let w = d.catalog.get(&id).expect("resolved workflow is in the catalog");
    print!("{}", export_diagram(w));
    Ok(EXIT_OK)
}

// ---- serve ----

pub fn serve(ctx: &Context, bind: Option<String>) -> Result<u8> {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let mut config = config(ctx)?;
    if let Some(b) = bind {
        config.bind = b;
    }
    let d = Deployment::from_config(config)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let bind = d.config.bind.clone();
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .with_context(|| format!("binding {bind}"))?;
        let service = Service::new(d, ServiceOptions::default());
        for issue in service.recovery_issues() {
            eprintln!("warning: could not restore {}: {}", issue.path, issue.message);
        }
        eprintln!(
            "listening on http://{} ({} workflows, {} restored sessions)",
            listener.local_addr()?,
            service.deployment().catalog.len(),
            service.session_ids().len()
        );
        statebuddy_service::serve(listener, service, shutdown_signal()).await?;
        eprintln!("stopped");
        Ok(EXIT_OK)
    })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("install SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    let _ = tokio::signal::ctrl_c().await;
}

// ---- events ----

pub fn events(ctx: &Context, session_id: &str, from_seq: u64) -> Result<u8> {
    let config = config(ctx)?;
    let path = log_path(&config.log_dir, session_id);
    let events = read_log(&path)?;
    for e in events.iter().filter(|e| e.seq > from_seq) {
        if ctx.json {
            println!("{}", e.to_line());
        } else {
            println!("{}", describe::event(e));
        }
    }
    Ok(EXIT_OK)
}
