//! The toy concurrent language and its flattening into pre-traces.
//!
//! Syntax (one thread per line, `#` starts a comment):
//!
//! ```text
//! 1: x=1; y=1
//! 2: a=y; if(a==1){b=x}else{c=x}; rmw(z,d,1)
//! ```
//!
//! * `loc=INT` writes a constant to a shared location.
//! * `local=loc` reads a shared location into a thread-local variable.
//! * `rmw(loc,local,INT)` is an atomic update: it reads `loc` into `local`
//!   and writes `INT` to `loc` in one event.
//! * `if(cond){...}else{...}` with `cond` one of `true`, `false`,
//!   `local==INT`, `local!=INT`. Both arms may be empty.
//!
//! Shared locations and locals are inferred by position: an identifier on
//! the left of `=` with an integer right-hand side is a shared location,
//! with an identifier right-hand side it is a local reading that (shared)
//! identifier, and so on. One identifier may not play both roles.
//!
//! Extraction over-approximates control flow: branch conditions are
//! recorded but never evaluated, and every combination of branch choices
//! yields one pre-trace. Loops are not part of the language; loop examples
//! are encoded as pre-made pre-trace documents with one unrolled exit path.
//! Event labels are `T<tid>.<path>.<index>` where `<path>` is the thread's
//! branch-choice string (`0` = then, `1` = else, empty when the thread has
//! no conditionals) and `<index>` numbers the thread's events along the
//! chosen path.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pretrace::{Event, EventKind, PreTrace};

// ===== AST =====

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub threads: Vec<Thread>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub tid: u32,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Write { loc: String, val: i64 },
    Read { local: String, loc: String },
    Update { loc: String, local: String, val: i64 },
    If { cond: Cond, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    True,
    False,
    Eq(String, i64),
    Neq(String, i64),
}

impl std::fmt::Display for Cond {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cond::True => write!(f, "true"),
            Cond::False => write!(f, "false"),
            Cond::Eq(v, n) => write!(f, "{v}=={n}"),
            Cond::Neq(v, n) => write!(f, "{v}!={n}"),
        }
    }
}

fn fmt_stmts(stmts: &[Stmt], f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
    for (i, s) in stmts.iter().enumerate() {
        if i > 0 {
            write!(f, "; ")?;
        }
        match s {
            Stmt::Write { loc, val } => write!(f, "{loc}={val}")?,
            Stmt::Read { local, loc } => write!(f, "{local}={loc}")?,
            Stmt::Update { loc, local, val } => write!(f, "rmw({loc},{local},{val})")?,
            Stmt::If { cond, then_branch, else_branch } => {
                write!(f, "if({cond}){{")?;
                fmt_stmts(then_branch, f)?;
                write!(f, "}}else{{")?;
                fmt_stmts(else_branch, f)?;
                write!(f, "}}")?;
            }
        }
    }
    Ok(())
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for t in &self.threads {
            write!(f, "{}: ", t.tid)?;
            fmt_stmts(&t.body, f)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

// ===== lexer =====

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    Colon,
    Semi,
    Comma,
    Assign,
    EqEq,
    Neq,
    LParen,
    RParen,
    LBrace,
    RBrace,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex_line(text: &str, line_no: usize) -> Result<Vec<Spanned>> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let err = |msg: String| Error::Parse { line: line_no, col, msg };
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
            }
            ':' => {
                toks.push(Spanned { tok: Tok::Colon, line: line_no, col });
                i += 1;
            }
            ';' => {
                toks.push(Spanned { tok: Tok::Semi, line: line_no, col });
                i += 1;
            }
            ',' => {
                toks.push(Spanned { tok: Tok::Comma, line: line_no, col });
                i += 1;
            }
            '(' => {
                toks.push(Spanned { tok: Tok::LParen, line: line_no, col });
                i += 1;
            }
            ')' => {
                toks.push(Spanned { tok: Tok::RParen, line: line_no, col });
                i += 1;
            }
            '{' => {
                toks.push(Spanned { tok: Tok::LBrace, line: line_no, col });
                i += 1;
            }
            '}' => {
                toks.push(Spanned { tok: Tok::RBrace, line: line_no, col });
                i += 1;
            }
            '=' => {
                if chars.get(i + 1) == Some(&'=') {
                    toks.push(Spanned { tok: Tok::EqEq, line: line_no, col });
                    i += 2;
                } else {
                    toks.push(Spanned { tok: Tok::Assign, line: line_no, col });
                    i += 1;
                }
            }
            '!' => {
                if chars.get(i + 1) == Some(&'=') {
                    toks.push(Spanned { tok: Tok::Neq, line: line_no, col });
                    i += 2;
                } else {
                    return Err(err("expected `!=`".into()));
                }
            }
            c if c.is_ascii_digit() || c == '-' => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n = s
                    .parse::<i64>()
                    .map_err(|_| err(format!("bad integer literal {s:?}")))?;
                toks.push(Spanned { tok: Tok::Int(n), line: line_no, col });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                toks.push(Spanned { tok: Tok::Ident(s), line: line_no, col });
            }
            other => return Err(err(format!("unexpected character {other:?}"))),
        }
    }
    Ok(toks)
}

// ===== parser =====

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or((self.line, self.toks.last().map(|s| s.col + 1).unwrap_or(1)))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::Parse { line, col, msg: msg.into() }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn int(&mut self, what: &str) -> Result<i64> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    /// Statements until end of input or a closing brace.
    fn stmts(&mut self) -> Result<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None | Some(Tok::RBrace) => break,
                _ => {}
            }
            out.push(self.stmt()?);
            match self.peek() {
                Some(Tok::Semi) => {
                    self.pos += 1;
                }
                None | Some(Tok::RBrace) => break,
                _ => return Err(self.err("expected `;` between statements")),
            }
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "if" => self.if_stmt(),
            Some(Tok::Ident(s)) if s == "rmw" => self.rmw_stmt(),
            Some(Tok::Ident(_)) => {
                let lhs = self.ident("identifier")?;
                self.expect(Tok::Assign, "`=`")?;
                match self.bump() {
                    Some(Tok::Int(v)) => Ok(Stmt::Write { loc: lhs, val: v }),
                    Some(Tok::Ident(rhs)) => Ok(Stmt::Read { local: lhs, loc: rhs }),
                    _ => {
                        self.pos = self.pos.saturating_sub(1);
                        Err(self.err("expected integer or shared location after `=`"))
                    }
                }
            }
            _ => Err(self.err("expected statement")),
        }
    }

    fn rmw_stmt(&mut self) -> Result<Stmt> {
        self.ident("rmw")?;
        self.expect(Tok::LParen, "`(`")?;
        let loc = self.ident("shared location")?;
        self.expect(Tok::Comma, "`,`")?;
        let local = self.ident("local")?;
        self.expect(Tok::Comma, "`,`")?;
        let val = self.int("written value")?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Stmt::Update { loc, local, val })
    }

    fn if_stmt(&mut self) -> Result<Stmt> {
        self.ident("if")?;
        self.expect(Tok::LParen, "`(`")?;
        let cond = self.cond()?;
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::LBrace, "`{`")?;
        let then_branch = self.stmts()?;
        self.expect(Tok::RBrace, "`}`")?;
        match self.peek() {
            Some(Tok::Ident(s)) if s == "else" => {
                self.pos += 1;
            }
            _ => return Err(self.err("expected `else` (both arms are required)")),
        }
        self.expect(Tok::LBrace, "`{`")?;
        let else_branch = self.stmts()?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(Stmt::If { cond, then_branch, else_branch })
    }

    fn cond(&mut self) -> Result<Cond> {
        let id = self.ident("condition")?;
        match id.as_str() {
            "true" => Ok(Cond::True),
            "false" => Ok(Cond::False),
            _ => match self.bump() {
                Some(Tok::EqEq) => Ok(Cond::Eq(id, self.int("integer")?)),
                Some(Tok::Neq) => Ok(Cond::Neq(id, self.int("integer")?)),
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    Err(self.err("expected `==` or `!=` in condition"))
                }
            },
        }
    }
}

/// Role an identifier plays, for the shared/local consistency check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Shared,
    Local,
}

fn collect_roles(
    stmts: &[Stmt],
    line: usize,
    roles: &mut BTreeMap<String, (Role, usize)>,
) -> Result<()> {
    let record = |name: &str, role: Role, roles: &mut BTreeMap<String, (Role, usize)>| {
        match roles.get(name) {
            Some((prev, first_line)) if *prev != role => Err(Error::Parse {
                line,
                col: 1,
                msg: format!(
                    "identifier {name:?} is used as both a shared location and a local \
                     (first use at line {first_line})"
                ),
            }),
            Some(_) => Ok(()),
            None => {
                roles.insert(name.to_string(), (role, line));
                Ok(())
            }
        }
    };
    for s in stmts {
        match s {
            Stmt::Write { loc, .. } => record(loc, Role::Shared, roles)?,
            Stmt::Read { local, loc } => {
                record(local, Role::Local, roles)?;
                record(loc, Role::Shared, roles)?;
            }
            Stmt::Update { loc, local, .. } => {
                record(loc, Role::Shared, roles)?;
                record(local, Role::Local, roles)?;
            }
            Stmt::If { cond, then_branch, else_branch } => {
                match cond {
                    Cond::Eq(v, _) | Cond::Neq(v, _) => record(v, Role::Local, roles)?,
                    Cond::True | Cond::False => {}
                }
                collect_roles(then_branch, line, roles)?;
                collect_roles(else_branch, line, roles)?;
            }
        }
    }
    Ok(())
}

/// Parse a litmus program. Errors carry 1-based line/column positions.
pub fn parse_program(text: &str) -> Result<Program> {
    let mut threads: Vec<Thread> = Vec::new();
    let mut seen_tids: BTreeMap<u32, usize> = BTreeMap::new();
    let mut roles: BTreeMap<String, (Role, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex_line(raw, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser { toks, pos: 0, line: line_no };
        let tid = match p.bump() {
            Some(Tok::Int(n)) if n > 0 && n <= u32::MAX as i64 => n as u32,
            Some(Tok::Int(0)) => {
                return Err(Error::Parse {
                    line: line_no,
                    col: 1,
                    msg: "thread id 0 is reserved for initialization writes".into(),
                })
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    col: 1,
                    msg: "expected a positive thread id".into(),
                })
            }
        };
        p.expect(Tok::Colon, "`:` after thread id")?;
        let body = p.stmts()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input after statements"));
        }
        if body.is_empty() {
            return Err(Error::Parse { line: line_no, col: 1, msg: "empty thread".into() });
        }
        if let Some(first) = seen_tids.insert(tid, line_no) {
            return Err(Error::Parse {
                line: line_no,
                col: 1,
                msg: format!("duplicate thread id {tid} (first declared at line {first})"),
            });
        }
        collect_roles(&body, line_no, &mut roles)?;
        threads.push(Thread { tid, body });
    }
    if threads.is_empty() {
        return Err(Error::Parse { line: 1, col: 1, msg: "program has no threads".into() });
    }
    Ok(Program { threads })
}

// ===== pre-trace extraction =====

/// One memory operation along a chosen path.
#[derive(Debug, Clone)]
struct MemOp {
    kind: EventKind,
    loc: String,
    wval: Option<i64>,
    local: Option<String>,
}

/// All root-to-leaf paths of a statement sequence: branch-choice string
/// (then = `0`, else = `1`, in encounter order) plus the memory operations
/// along the path.
fn body_paths(stmts: &[Stmt]) -> Vec<(String, Vec<MemOp>)> {
    let mut acc: Vec<(String, Vec<MemOp>)> = vec![(String::new(), Vec::new())];
    for s in stmts {
        match s {
            Stmt::Write { loc, val } => {
                for (_, ops) in acc.iter_mut() {
                    ops.push(MemOp {
                        kind: EventKind::Write,
                        loc: loc.clone(),
                        wval: Some(*val),
                        local: None,
                    });
                }
            }
            Stmt::Read { local, loc } => {
                for (_, ops) in acc.iter_mut() {
                    ops.push(MemOp {
                        kind: EventKind::Read,
                        loc: loc.clone(),
                        wval: None,
                        local: Some(local.clone()),
                    });
                }
            }
            Stmt::Update { loc, local, val } => {
                for (_, ops) in acc.iter_mut() {
                    ops.push(MemOp {
                        kind: EventKind::Update,
                        loc: loc.clone(),
                        wval: Some(*val),
                        local: Some(local.clone()),
                    });
                }
            }
            Stmt::If { then_branch, else_branch, .. } => {
                let arms = [("0", body_paths(then_branch)), ("1", body_paths(else_branch))];
                let mut next = Vec::new();
                for (choices, ops) in &acc {
                    for (bit, arm_paths) in &arms {
                        for (arm_choices, arm_ops) in arm_paths {
                            let mut c = choices.clone();
                            c.push_str(bit);
                            c.push_str(arm_choices);
                            let mut o = ops.clone();
                            o.extend(arm_ops.iter().cloned());
                            next.push((c, o));
                        }
                    }
                }
                acc = next;
            }
        }
    }
    acc
}

/// A pre-trace extracted from a program, with provenance: the branch-choice
/// string per thread and the map from local variables to the labels of the
/// read events binding them.
#[derive(Debug, Clone)]
pub struct ExtractedPreTrace {
    pub pt: PreTrace,
    /// Branch choices per thread id (empty string = no conditionals).
    pub choices: BTreeMap<u32, String>,
    /// Local variable -> labels of the reads/updates that bind it, in
    /// program order. Used to resolve outcome predicates by local name.
    pub label_map: BTreeMap<String, Vec<String>>,
}

/// Flatten a program into pre-traces, one per combination of branch
/// choices across all threads (both arms of every conditional are explored
/// regardless of feasibility). The result count is the product over threads
/// of per-thread path counts; enumeration order fixes the first thread as
/// the slowest-varying index.
pub fn extract_pretraces(p: &Program) -> Result<Vec<ExtractedPreTrace>> {
    let per_thread: Vec<(u32, Vec<(String, Vec<MemOp>)>)> =
        p.threads.iter().map(|t| (t.tid, body_paths(&t.body))).collect();

    let mut out = Vec::new();
    let mut idx = vec![0usize; per_thread.len()];
    loop {
        let mut events = Vec::new();
        let mut po_edges = Vec::new();
        let mut choices = BTreeMap::new();
        let mut label_map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (t, (tid, paths)) in per_thread.iter().enumerate() {
            let (choice, ops) = &paths[idx[t]];
            choices.insert(*tid, choice.clone());
            let mut prev: Option<String> = None;
            for (i, op) in ops.iter().enumerate() {
                let label = format!("T{tid}.{choice}.{i}");
                events.push(Event {
                    label: label.clone(),
                    tid: *tid,
                    kind: op.kind,
                    loc: op.loc.clone(),
                    wval: op.wval,
                });
                if let Some(local) = &op.local {
                    label_map.entry(local.clone()).or_default().push(label.clone());
                }
                if let Some(prev) = prev {
                    po_edges.push((prev, label.clone()));
                }
                prev = Some(label);
            }
        }
        out.push(ExtractedPreTrace { pt: PreTrace::new(events, &po_edges)?, choices, label_map });

        // Odometer over per-thread path indices, last thread fastest.
        let mut t = per_thread.len();
        loop {
            if t == 0 {
                return Ok(out);
            }
            t -= 1;
            idx[t] += 1;
            if idx[t] < per_thread[t].1.len() {
                break;
            }
            idx[t] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_three_thread_litmus() {
        let p = parse_program(
            "# triangular race shape\n1: x=1\n2: y=1; a=x\n3: b=x; c=y\n",
        )
        .unwrap();
        assert_eq!(p.threads.len(), 3);
        assert_eq!(p.threads[1].body.len(), 2);
        let e = extract_pretraces(&p).unwrap();
        assert_eq!(e.len(), 1, "no conditionals, one pre-trace");
        let pt = &e[0].pt;
        // 5 program events + 2 initialization writes.
        assert_eq!(pt.len(), 7);
        assert!(pt.po().contains_labels("T2..0", "T2..1"));
        assert!(!pt.po().contains_labels("T1..0", "T2..0"), "no cross-thread po");
        assert_eq!(e[0].label_map["a"], vec!["T2..1"]);
    }

    #[test]
    fn one_conditional_yields_two_pretraces() {
        let p = parse_program("1: x=1; y=1\n2: a=y; if(a==1){b=x}else{c=x}\n").unwrap();
        let e = extract_pretraces(&p).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].choices[&2], "0");
        assert_eq!(e[1].choices[&2], "1");
        // The then-arm path reads x into b, the else-arm into c.
        assert_eq!(e[0].label_map["b"], vec!["T2.0.1"]);
        assert_eq!(e[1].label_map["c"], vec!["T2.1.1"]);
    }

    #[test]
    fn two_independent_conditionals_yield_four_pretraces() {
        let p = parse_program(
            "1: a=x; if(a==0){y=1}else{}; b=x; if(b==0){z=1}else{}\n",
        )
        .unwrap();
        let e = extract_pretraces(&p).unwrap();
        assert_eq!(e.len(), 4);
        let choices: Vec<&str> = e.iter().map(|x| x.choices[&1].as_str()).collect();
        assert_eq!(choices, vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn nested_conditionals_multiply_along_paths_only() {
        // Paths: then/then, then/else, else -> 3 pre-traces, not 4.
        let p = parse_program(
            "1: a=x; if(a==0){if(a==1){y=1}else{y=2}}else{z=1}\n",
        )
        .unwrap();
        let e = extract_pretraces(&p).unwrap();
        assert_eq!(e.len(), 3);
        let choices: Vec<&str> = e.iter().map(|x| x.choices[&1].as_str()).collect();
        assert_eq!(choices, vec!["00", "01", "1"]);
    }

    #[test]
    fn labels_are_stable_across_parses() {
        let text = "1: x=1\n2: a=x; if(a==1){b=x}else{}\n";
        let l1: Vec<Vec<String>> = extract_pretraces(&parse_program(text).unwrap())
            .unwrap()
            .iter()
            .map(|e| e.pt.events().iter().map(|ev| ev.label.clone()).collect())
            .collect();
        let l2: Vec<Vec<String>> = extract_pretraces(&parse_program(text).unwrap())
            .unwrap()
            .iter()
            .map(|e| e.pt.events().iter().map(|ev| ev.label.clone()).collect())
            .collect();
        assert_eq!(l1, l2);
    }

    #[test]
    fn rmw_becomes_a_single_update_event() {
        let p = parse_program("1: rmw(x,a,5)\n").unwrap();
        let e = extract_pretraces(&p).unwrap();
        let pt = &e[0].pt;
        let u = pt.event(pt.index_of("T1..0").unwrap());
        assert_eq!((u.kind, u.loc.as_str(), u.wval), (EventKind::Update, "x", Some(5)));
        assert_eq!(e[0].label_map["a"], vec!["T1..0"]);
    }

    #[test]
    fn rejects_identifier_in_both_roles() {
        let err = parse_program("1: x=1; a=x\n2: x=a\n").unwrap_err();
        assert!(
            err.to_string().contains("both a shared location and a local"),
            "got: {err}"
        );
    }

    #[test]
    fn rejects_duplicate_and_reserved_tids() {
        assert!(parse_program("1: x=1\n1: y=1\n").is_err());
        assert!(parse_program("0: x=1\n").is_err());
    }

    #[test]
    fn rejects_conditional_without_else() {
        let err = parse_program("1: a=x; if(a==1){b=x}\n").unwrap_err();
        assert!(err.to_string().contains("else"), "got: {err}");
    }

    #[test]
    fn reports_line_and_column() {
        match parse_program("1: x=1\n2: y]=2\n") {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!(line, 2);
                assert!(col > 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn display_round_trips_through_the_parser() {
        let text = "1: x=1; rmw(z,d,3)\n2: a=y; if(a==1){b=x}else{c=x}\n";
        let p = parse_program(text).unwrap();
        let p2 = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, p2);
    }
}
