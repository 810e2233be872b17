//! Batch front end for the litmus-test engine: input loading, outcome
//! predicates, report builders and command dispatch.
//!
//! Everything an invocation produces funnels through [`run`], which returns
//! the rendered report plus the process exit code. Exit codes follow one
//! contract everywhere: 0 success, 1 usage or I/O problem, 2 a property or
//! claim violation, 3 search budget exhausted. All JSON reports carry
//! `"schema": 1` and identical invocations render byte-identical output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use portcheck_core::dot::{execution_dot, pretrace_dot};
use portcheck_core::effects::{
    check_atr_shape, classify_effect, detect_triangular_race, diff_effect, is_safe_effect,
};
use portcheck_core::execution::{
    count_candidates, enumerate_candidates, execution_to_doc, load_execution, Execution,
    DEFAULT_CAP,
};
use portcheck_core::lang::{extract_pretraces, parse_program, ExtractedPreTrace};
use portcheck_core::models::{check_consistency, classify_min_cycles, is_consistent, ModelId};
use portcheck_core::portability::{port_check, theorem_search, weakness_audit, SearchBounds};
use portcheck_core::pretrace::{pretrace_from_json, pretrace_to_doc, PreTrace};
use portcheck_core::{Error as CoreError, Result as CoreResult};

pub const SCHEMA: u32 = 1;

// ===== errors and exit codes =====

/// Failures surfaced before a report could be produced.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed inputs, unsupported format: exit 1.
    Usage(String),
    /// Filesystem or decoding problem: exit 1.
    Io(String),
    /// A property the engine treats as a theorem failed: exit 2.
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Violation(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Violation(m) => write!(f, "property violation: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        match e {
            CoreError::PropertyFailure(_) => CliError::Violation(e.to_string()),
            CoreError::Io(_) | CoreError::Json(_) => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A finished invocation: the rendered report and the exit code.
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

fn ok(stdout: String) -> CliResult<Outcome> {
    Ok(Outcome { stdout, exit_code: 0 })
}

// ===== output formats =====

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Dot,
    Text,
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Format> {
        match s {
            "json" => Ok(Format::Json),
            "dot" => Ok(Format::Dot),
            "text" => Ok(Format::Text),
            other => Err(CliError::Usage(format!(
                "unknown format {other:?}, expected json, dot or text"
            ))),
        }
    }
}

fn render_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

// ===== configuration =====

/// JSON mirror of the command-line flags. Explicit flags win over the
/// config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: Option<String>,
    pub target: Option<String>,
    pub outcome: Option<String>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub cap: Option<usize>,
    pub bounds: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Flag values after merging command line and config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub format: Format,
    pub cap: usize,
    pub model: Option<String>,
    pub target: Option<String>,
    pub outcome: Option<String>,
    pub bounds: Option<PathBuf>,
}

impl Settings {
    pub fn model(&self) -> CliResult<ModelId> {
        let name = self
            .model
            .as_deref()
            .ok_or_else(|| CliError::Usage("--model is required (sc, tso or sra)".into()))?;
        name.parse::<ModelId>().map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn target(&self) -> CliResult<ModelId> {
        let name = self
            .target
            .as_deref()
            .ok_or_else(|| CliError::Usage("--target is required (tso or sra)".into()))?;
        name.parse::<ModelId>().map_err(|e| CliError::Usage(e.to_string()))
    }
}

// ===== input loading =====

/// A named pre-trace with the local-variable map (empty for documents that
/// never bind locals).
pub struct NamedPreTrace {
    pub name: String,
    pub pt: Arc<PreTrace>,
    pub label_map: BTreeMap<String, Vec<String>>,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

fn named(stem: &str, ex: Vec<ExtractedPreTrace>) -> Vec<NamedPreTrace> {
    let many = ex.len() > 1;
    ex.into_iter()
        .map(|e| {
            let choices: String = e
                .choices
                .iter()
                .filter(|(_, c)| !c.is_empty())
                .map(|(tid, c)| format!("T{tid}={c}"))
                .collect::<Vec<_>>()
                .join(",");
            let name = if many { format!("{stem}#{choices}") } else { stem.to_string() };
            NamedPreTrace { name, pt: Arc::new(e.pt), label_map: e.label_map }
        })
        .collect()
}

/// Load a `.litmus` program (one entry per extracted pre-trace) or a
/// `.pretrace` document (one entry, no locals). The extension decides.
pub fn load_pretraces(path: &Path) -> CliResult<Vec<NamedPreTrace>> {
    let text = read(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("litmus") => {
            let prog = parse_program(&text).map_err(CliError::from)?;
            Ok(named(&stem(path), extract_pretraces(&prog)?))
        }
        Some("pretrace") => {
            let pt = pretrace_from_json(&text)?;
            Ok(vec![NamedPreTrace {
                name: stem(path),
                pt: Arc::new(pt),
                label_map: BTreeMap::new(),
            }])
        }
        other => Err(CliError::Usage(format!(
            "cannot load {}: expected a .litmus or .pretrace file, got {:?}",
            path.display(),
            other.unwrap_or("no extension")
        ))),
    }
}

/// Load exactly one pre-trace; `.litmus` inputs must flatten to a single
/// pre-trace for pairwise commands.
pub fn load_single_pretrace(path: &Path) -> CliResult<NamedPreTrace> {
    let mut all = load_pretraces(path)?;
    if all.len() != 1 {
        return Err(CliError::Usage(format!(
            "{} flattens to {} pre-traces; pairwise commands need exactly one",
            path.display(),
            all.len()
        )));
    }
    Ok(all.remove(0))
}

pub fn load_exec(path: &Path) -> CliResult<Execution> {
    if path.extension().and_then(|e| e.to_str()) != Some("exec") {
        return Err(CliError::Usage(format!(
            "cannot load {}: expected a .exec execution document",
            path.display()
        )));
    }
    load_execution(path).map_err(CliError::from)
}

/// All `.litmus` files under the given paths (files pass through,
/// directories are scanned one level deep), sorted for determinism.
pub fn collect_litmus(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let it = std::fs::read_dir(p)
                .map_err(|e| CliError::Io(format!("cannot list {}: {e}", p.display())))?;
            for entry in it {
                let path = entry
                    .map_err(|e| CliError::Io(format!("cannot list {}: {e}", p.display())))?
                    .path();
                if path.extension().and_then(|e| e.to_str()) == Some("litmus") {
                    out.push(path);
                }
            }
        } else {
            out.push(p.clone());
        }
    }
    out.sort();
    Ok(out)
}

// ===== outcome predicates =====

/// An outcome predicate `k=v,...` over read labels (preferred) or local
/// variable names that bind exactly one read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomePredicate {
    pub terms: Vec<(String, i64)>,
}

impl OutcomePredicate {
    pub fn parse(text: &str) -> CliResult<OutcomePredicate> {
        let mut terms = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            let Some((k, v)) = part.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "bad outcome term {part:?}, expected name=integer"
                )));
            };
            let val: i64 = v.trim().parse().map_err(|_| {
                CliError::Usage(format!("bad outcome value {v:?} for {k:?}, expected an integer"))
            })?;
            if k.trim().is_empty() {
                return Err(CliError::Usage(format!("bad outcome term {part:?}: empty name")));
            }
            terms.push((k.trim().to_string(), val));
        }
        if terms.is_empty() {
            return Err(CliError::Usage("empty outcome predicate".into()));
        }
        Ok(OutcomePredicate { terms })
    }

    /// Resolve every term to a read event of `pt`. A key is first tried as
    /// an event label; otherwise it must name a local bound by exactly one
    /// read. `Ok(None)` means some key does not exist in this pre-trace
    /// (possible when branching produced several pre-traces); such a
    /// pre-trace cannot realize the outcome.
    pub fn resolve(
        &self,
        pt: &PreTrace,
        label_map: &BTreeMap<String, Vec<String>>,
    ) -> CliResult<Option<Vec<(u32, i64)>>> {
        let mut resolved = Vec::with_capacity(self.terms.len());
        for (key, val) in &self.terms {
            let label = if pt.index_of(key).is_some() {
                key.clone()
            } else {
                match label_map.get(key).map(Vec::as_slice) {
                    Some([one]) => one.clone(),
                    Some(many) if many.len() > 1 => {
                        return Err(CliError::Usage(format!(
                            "local {key:?} is bound by {} reads ({}); address one by label",
                            many.len(),
                            many.join(", ")
                        )));
                    }
                    _ => return Ok(None),
                }
            };
            let i = pt.index_of(&label).expect("resolved labels exist");
            if !pt.event(i).is_read() {
                return Err(CliError::Usage(format!(
                    "outcome key {key:?} names {label}, which reads nothing"
                )));
            }
            resolved.push((i, *val));
        }
        Ok(Some(resolved))
    }

    pub fn holds(e: &Execution, resolved: &[(u32, i64)]) -> bool {
        resolved.iter().all(|&(r, v)| e.read_value(r) == Some(v))
    }
}

// ===== commands =====

/// One fully resolved invocation.
pub enum Command {
    Parse { input: PathBuf },
    Pretraces { input: PathBuf },
    Enumerate { input: PathBuf },
    Check { input: PathBuf },
    ClassifyCycles { input: PathBuf },
    Diff { p: PathBuf, p2: PathBuf },
    ClassifyEffect { p: PathBuf, p2: PathBuf },
    Safety { p: PathBuf, p2: PathBuf },
    Race { input: PathBuf },
    Port { p: PathBuf, p2: PathBuf },
    Search,
    Audit { inputs: Vec<PathBuf> },
}

/// Dispatch a command under the given settings.
pub fn run(cmd: &Command, s: &Settings) -> CliResult<Outcome> {
    match cmd {
        Command::Parse { input } => cmd_parse(input, s),
        Command::Pretraces { input } => cmd_pretraces(input, s),
        Command::Enumerate { input } => cmd_enumerate(input, s),
        Command::Check { input } => cmd_check(input, s),
        Command::ClassifyCycles { input } => cmd_classify_cycles(input, s),
        Command::Diff { p, p2 } => cmd_diff(p, p2, s),
        Command::ClassifyEffect { p, p2 } => cmd_classify_effect(p, p2, s),
        Command::Safety { p, p2 } => cmd_safety(p, p2, s),
        Command::Race { input } => cmd_race(input, s),
        Command::Port { p, p2 } => cmd_port(p, p2, s),
        Command::Search => cmd_search(s),
        Command::Audit { inputs } => cmd_audit(inputs, s),
    }
}

fn no_dot(cmd: &str) -> CliError {
    CliError::Usage(format!("--format dot is not supported by {cmd}; it renders pre-traces and executions"))
}

fn choices_text(choices: &BTreeMap<u32, String>) -> String {
    let parts: Vec<String> = choices
        .iter()
        .filter(|(_, c)| !c.is_empty())
        .map(|(tid, c)| format!("T{tid}={c}"))
        .collect();
    if parts.is_empty() { "-".into() } else { parts.join(",") }
}

fn cmd_parse(input: &Path, s: &Settings) -> CliResult<Outcome> {
    let text = read(input)?;
    let prog = parse_program(&text)?;
    let extracted = extract_pretraces(&prog)?;
    match s.format {
        Format::Dot => Err(no_dot("parse")),
        Format::Json => {
            let pretraces: Vec<serde_json::Value> = extracted
                .iter()
                .map(|e| {
                    json!({
                        "choices": choices_text(&e.choices),
                        "events": e.pt.len(),
                        "label_map": e.label_map,
                    })
                })
                .collect();
            ok(render_json(&json!({
                "schema": SCHEMA,
                "file": stem(input),
                "threads": prog.threads.len(),
                "pretraces": pretraces,
            })))
        }
        Format::Text => {
            let mut out = format!("{}: {} threads, {} pre-traces\n", stem(input), prog.threads.len(), extracted.len());
            for e in &extracted {
                out.push_str(&format!("pre-trace [{}]: {} events\n", choices_text(&e.choices), e.pt.len()));
                for (local, labels) in &e.label_map {
                    out.push_str(&format!("  {local} <- {}\n", labels.join(", ")));
                }
            }
            ok(out)
        }
    }
}

fn cmd_pretraces(input: &Path, s: &Settings) -> CliResult<Outcome> {
    let all = load_pretraces(input)?;
    match s.format {
        Format::Dot => {
            let mut out = String::new();
            for n in &all {
                out.push_str(&pretrace_dot(&n.pt));
            }
            ok(out)
        }
        Format::Json => {
            let docs: Vec<serde_json::Value> = all
                .iter()
                .map(|n| {
                    json!({
                        "name": n.name,
                        "pretrace": pretrace_to_doc(&n.pt),
                    })
                })
                .collect();
            ok(render_json(&json!({ "schema": SCHEMA, "pretraces": docs })))
        }
        Format::Text => {
            let mut out = String::new();
            for n in &all {
                out.push_str(&format!("{}: {} events\n", n.name, n.pt.len()));
                for ev in n.pt.events() {
                    let val = ev.wval.map(|v| format!("={v}")).unwrap_or_default();
                    out.push_str(&format!(
                        "  {} T{} {} {}{}\n",
                        ev.label,
                        ev.tid,
                        ev.kind.code(),
                        ev.loc,
                        val
                    ));
                }
            }
            ok(out)
        }
    }
}

fn cmd_enumerate(input: &Path, s: &Settings) -> CliResult<Outcome> {
    let all = load_pretraces(input)?;
    let mut items = Vec::new();
    let mut total: u128 = 0;
    for n in &all {
        let count = count_candidates(&n.pt);
        total += count;
        items.push((n.name.clone(), n.pt.len(), count));
    }
    match s.format {
        Format::Dot => Err(no_dot("enumerate")),
        Format::Json => {
            let rows: Vec<serde_json::Value> = items
                .iter()
                .map(|(name, events, count)| {
                    json!({ "name": name, "events": events, "candidates": count.to_string() })
                })
                .collect();
            ok(render_json(&json!({
                "schema": SCHEMA,
                "pretraces": rows,
                "total_candidates": total.to_string(),
            })))
        }
        Format::Text => {
            let mut out = String::new();
            for (name, events, count) in &items {
                out.push_str(&format!("{name}: {events} events, {count} candidate executions\n"));
            }
            out.push_str(&format!("total: {total}\n"));
            ok(out)
        }
    }
}

fn cmd_check(input: &Path, s: &Settings) -> CliResult<Outcome> {
    let model = s.model()?;
    let all = load_pretraces(input)?;
    let outcome = s.outcome.as_deref().map(OutcomePredicate::parse).transpose()?;

    let mut rows = Vec::new();
    let mut witness: Option<(String, Execution)> = None;
    let mut any_key_resolved = false;
    for n in &all {
        let mut candidates = 0u64;
        let mut consistent = 0u64;
        let resolved = match &outcome {
            Some(p) => {
                let r = p.resolve(&n.pt, &n.label_map)?;
                any_key_resolved |= r.is_some();
                r
            }
            None => None,
        };
        let mut realized = false;
        for e in enumerate_candidates(&n.pt, s.cap)? {
            candidates += 1;
            if !is_consistent(&e, model)? {
                continue;
            }
            consistent += 1;
            if let Some(resolved) = &resolved {
                if !realized && OutcomePredicate::holds(&e, resolved) {
                    realized = true;
                    if witness.is_none() {
                        witness = Some((n.name.clone(), e.clone()));
                    }
                }
            }
        }
        rows.push((n.name.clone(), candidates, consistent, outcome.as_ref().map(|_| realized)));
    }
    if outcome.is_some() && !any_key_resolved {
        return Err(CliError::Usage(
            "outcome references reads that exist in no pre-trace of the input".into(),
        ));
    }
    let reachable = outcome.as_ref().map(|_| witness.is_some());

    match s.format {
        Format::Dot => Err(no_dot("check")),
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|(name, cand, cons, realized)| {
                    json!({
                        "name": name,
                        "candidates": cand,
                        "consistent": cons,
                        "realizes_outcome": realized,
                    })
                })
                .collect();
            ok(render_json(&json!({
                "schema": SCHEMA,
                "model": model.to_string(),
                "outcome": s.outcome,
                "pretraces": rows,
                "reachable": reachable,
                "witness": witness.as_ref().map(|(name, e)| json!({
                    "pretrace": name,
                    "execution": execution_to_doc(e),
                })),
            })))
        }
        Format::Text => {
            let mut out = String::new();
            for (name, cand, cons, _) in &rows {
                out.push_str(&format!("{name}: {cons}/{cand} candidates {model}-consistent\n"));
            }
            match reachable {
                Some(true) => {
                    let (name, e) = witness.as_ref().expect("reachable implies witness");
                    out.push_str(&format!(
                        "outcome {} reachable under {model} in {name} (mo: {})\n",
                        s.outcome.as_deref().unwrap_or(""),
                        e.mo_order_labels().join(" ")
                    ));
                }
                Some(false) => {
                    out.push_str(&format!(
                        "outcome {} unreachable under {model}\n",
                        s.outcome.as_deref().unwrap_or("")
                    ));
                }
                None => {}
            }
            ok(out)
        }
    }
}

fn cmd_classify_cycles(input: &Path, s: &Settings) -> CliResult<Outcome> {
    let model = s.model()?;
    let e = load_exec(input)?;
    let verdict = check_consistency(&e, model)?;
    // The classifier's precondition is an inconsistent execution; a
    // consistent one simply has no cycles to tag.
    let tags = if verdict.consistent() {
        Default::default()
    } else {
        classify_min_cycles(&e, model)?
    };
    match s.format {
        Format::Dot => ok(execution_dot(&e)),
        Format::Json => ok(render_json(&json!({
            "schema": SCHEMA,
            "model": model.to_string(),
            "consistent": verdict.consistent(),
            "violated_rules": verdict.violated,
            "cycle_tags": tags,
        }))),
        Format::Text => {
            let mut out = format!(
                "{model}: {}\n",
                if verdict.consistent() { "consistent" } else { "inconsistent" }
            );
            for (rule, path) in &verdict.violated {
                out.push_str(&format!("  {rule}: {}\n", path.join(" -> ")));
            }
            for (tag, path) in &tags {
                out.push_str(&format!("  tag {tag}: {}\n", path.join(" -> ")));
            }
            ok(out)
        }
    }
}

fn load_pair(p: &Path, p2: &Path) -> CliResult<(NamedPreTrace, NamedPreTrace)> {
    Ok((load_single_pretrace(p)?, load_single_pretrace(p2)?))
}

fn cmd_diff(p: &Path, p2: &Path, s: &Settings) -> CliResult<Outcome> {
    let (a, b) = load_pair(p, p2)?;
    let eff = diff_effect(&a.pt, &b.pt)?;
    match s.format {
        Format::Dot => Err(no_dot("diff")),
        Format::Json => ok(render_json(&json!({ "schema": SCHEMA, "effect": eff }))),
        Format::Text => {
            let pairs = |set: &std::collections::BTreeSet<(String, String)>| {
                set.iter().map(|(a, b)| format!("({a},{b})")).collect::<Vec<_>>().join(" ")
            };
            ok(format!(
                "st-: {}\nst+: {}\npo-: {}\npo+: {}\n",
                eff.st_minus.iter().cloned().collect::<Vec<_>>().join(" "),
                eff.st_plus.iter().cloned().collect::<Vec<_>>().join(" "),
                pairs(&eff.po_minus),
                pairs(&eff.po_plus),
            ))
        }
    }
}

fn cmd_classify_effect(p: &Path, p2: &Path, s: &Settings) -> CliResult<Outcome> {
    let (a, b) = load_pair(p, p2)?;
    let eff = diff_effect(&a.pt, &b.pt)?;
    let class = classify_effect(&a.pt, &b.pt, &eff);
    match s.format {
        Format::Dot => Err(no_dot("classify-effect")),
        Format::Json => {
            ok(render_json(&json!({ "schema": SCHEMA, "effect": eff, "class": class })))
        }
        Format::Text => {
            let mut flags = Vec::new();
            for (name, on) in [
                ("wi", class.wi),
                ("we", class.we),
                ("tuwri", class.tuwri),
                ("same_loc_wr_deord", class.same_loc_wr_deord),
                ("same_loc_rw_deord", class.same_loc_rw_deord),
                ("same_loc_rr_deord", class.same_loc_rr_deord),
                ("ww_deord", class.ww_deord),
            ] {
                if on {
                    flags.push(name);
                }
            }
            let mut out = format!(
                "flags: {}\n",
                if flags.is_empty() { "none".into() } else { flags.join(" ") }
            );
            for w in &class.tuwri_witnesses {
                out.push_str(&format!(
                    "  tuwri: w_y={} r_y={} r_x={} w_x={}\n",
                    w.w_y,
                    w.r_y.as_deref().unwrap_or("-"),
                    w.r_x,
                    w.w_x
                ));
            }
            ok(out)
        }
    }
}

fn cmd_safety(p: &Path, p2: &Path, s: &Settings) -> CliResult<Outcome> {
    let model = s.model()?;
    let (a, b) = load_pair(p, p2)?;
    let verdict = is_safe_effect(&a.pt, &b.pt, model, s.cap)?;
    match s.format {
        Format::Dot => Err(no_dot("safety")),
        Format::Json => ok(render_json(&json!({
            "schema": SCHEMA,
            "model": model.to_string(),
            "safe": verdict.safe,
            "counterexample": verdict.counterexample.as_ref().map(execution_to_doc),
        }))),
        Format::Text => {
            let mut out = format!(
                "{model}: {}\n",
                if verdict.safe { "safe" } else { "unsafe" }
            );
            if let Some(e) = &verdict.counterexample {
                out.push_str(&format!(
                    "counterexample rf: {:?} mo: {}\n",
                    e.rf().label_pairs(),
                    e.mo_order_labels().join(" ")
                ));
            }
            ok(out)
        }
    }
}

fn cmd_race(input: &Path, s: &Settings) -> CliResult<Outcome> {
    let e = load_exec(input)?;
    let tso_consistent = is_consistent(&e, ModelId::Tso)?;
    let witnesses = detect_triangular_race(&e);
    let mut rows = Vec::new();
    let mut shape_broken = false;
    for w in &witnesses {
        let shape = if tso_consistent {
            let holds = check_atr_shape(&e, w)?;
            shape_broken |= !holds;
            Some(holds)
        } else {
            None
        };
        rows.push((w.clone(), shape));
    }
    let exit = if shape_broken { 2 } else { 0 };
    let rendered = match s.format {
        Format::Dot => execution_dot(&e),
        Format::Json => render_json(&json!({
            "schema": SCHEMA,
            "tso_consistent": tso_consistent,
            "witnesses": rows
                .iter()
                .map(|(w, shape)| json!({
                    "w_x": w.w_x, "r_x": w.r_x, "w_y": w.w_y, "shape_holds": shape,
                }))
                .collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut out = format!(
                "tso: {}\n",
                if tso_consistent { "consistent" } else { "inconsistent" }
            );
            if rows.is_empty() {
                out.push_str("no triangular race\n");
            }
            for (w, shape) in &rows {
                let shape = match shape {
                    Some(true) => "shape holds",
                    Some(false) => "SHAPE VIOLATED",
                    None => "shape not applicable",
                };
                out.push_str(&format!(
                    "race: w_x={} r_x={} w_y={} ({shape})\n",
                    w.w_x, w.r_x, w.w_y
                ));
            }
            out
        }
    };
    Ok(Outcome { stdout: rendered, exit_code: exit })
}

fn cmd_port(p: &Path, p2: &Path, s: &Settings) -> CliResult<Outcome> {
    let target = s.target()?;
    let (a, b) = load_pair(p, p2)?;
    let verdict = port_check(&a.pt, &b.pt, target, s.cap)?;
    let exit = if verdict.theorem_violation { 2 } else { 0 };
    let rendered = match s.format {
        Format::Dot => return Err(no_dot("port")),
        Format::Json => {
            let mut v = serde_json::to_value(&verdict).expect("verdict serializes");
            v.as_object_mut()
                .expect("verdict is an object")
                .insert("schema".into(), json!(SCHEMA));
            render_json(&v)
        }
        Format::Text => {
            let mut out = format!(
                "guard: {}\n",
                if verdict.guard_passes {
                    "pass".into()
                } else {
                    format!("fail ({})", verdict.guard_failures.join(", "))
                }
            );
            out.push_str(&format!(
                "sc: {} | {}: {} | portable: {}\n",
                if verdict.sc_safe { "safe" } else { "unsafe" },
                target,
                if verdict.target_safe { "safe" } else { "unsafe" },
                verdict.portable
            ));
            if verdict.theorem_violation {
                out.push_str("THEOREM VIOLATION: guard passed on a non-portable pair\n");
            }
            out
        }
    };
    Ok(Outcome { stdout: rendered, exit_code: exit })
}

fn cmd_search(s: &Settings) -> CliResult<Outcome> {
    let bounds = match &s.bounds {
        Some(path) => {
            let text = read(path)?;
            serde_json::from_str::<SearchBounds>(&text)
                .map_err(|e| CliError::Usage(format!("bad bounds {}: {e}", path.display())))?
        }
        None => SearchBounds::default(),
    };
    let report = theorem_search(&bounds)?;
    let exit = if !report.violations.is_empty() {
        2
    } else if report.budget_exhausted {
        3
    } else {
        0
    };
    let rendered = match s.format {
        Format::Dot => return Err(no_dot("search")),
        Format::Json => {
            render_json(&serde_json::to_value(&report).expect("report serializes"))
        }
        Format::Text => {
            let mut out = format!(
                "programs: {} pairs: {} executions: {} complete: {}\n",
                report.programs, report.pairs, report.executions, report.complete
            );
            for (claim, stats) in &report.claims {
                out.push_str(&format!(
                    "  {claim}: checked={} passed={} violated={}\n",
                    stats.checked, stats.passed, stats.violated
                ));
            }
            for v in &report.violations {
                out.push_str(&format!("violation [{}]: {}\n", v.claim, v.detail));
            }
            out
        }
    };
    Ok(Outcome { stdout: rendered, exit_code: exit })
}

fn cmd_audit(inputs: &[PathBuf], s: &Settings) -> CliResult<Outcome> {
    let files = collect_litmus(inputs)?;
    if files.is_empty() {
        return Err(CliError::Usage("audit needs at least one .litmus file or directory".into()));
    }
    let mut corpus = Vec::new();
    for f in &files {
        for n in load_pretraces(f)? {
            corpus.push((n.name, n.pt));
        }
    }
    let report = weakness_audit(&corpus, s.cap)?;
    let exit = if report.violations.is_empty() { 0 } else { 2 };
    let rendered = match s.format {
        Format::Dot => return Err(no_dot("audit")),
        Format::Json => render_json(&serde_json::to_value(&report).expect("report serializes")),
        Format::Text => {
            let mut out = String::new();
            for row in &report.rows {
                out.push_str(&format!(
                    "{}: {} candidates, sc={} tso={} sra={} chain={}\n",
                    row.name,
                    row.candidates,
                    row.sc_consistent,
                    row.tso_consistent,
                    row.sra_consistent,
                    if row.chain_holds { "ok" } else { "BROKEN" }
                ));
            }
            out.push_str(&format!("total: {} candidates\n", report.total_candidates));
            for v in &report.violations {
                out.push_str(&format!("violation: {v}\n"));
            }
            out
        }
    };
    Ok(Outcome { stdout: rendered, exit_code: exit })
}

// ===== shared helpers for tests =====

/// `consistent_set` shortcut used by the test suites.
pub fn consistent_executions(
    pt: &Arc<PreTrace>,
    m: ModelId,
    cap: usize,
) -> CoreResult<Vec<Execution>> {
    portcheck_core::execution::consistent_set(pt, m, cap)
}

pub use portcheck_core::execution::observable_behavior;

/// Default cap re-exported so test suites share the binary's default.
pub const CAP: usize = DEFAULT_CAP;
