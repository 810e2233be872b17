//! Optimization portability: the guarded `port_check` for a single
//! source/transformed pre-trace pair, the corpus-level `weakness_audit`
//! over the SC ⊆ TSO ⊆ SRA chain, and the bounded `theorem_search` that
//! sweeps every program and transformation pair inside [`SearchBounds`]
//! looking for a counterexample to the checked portability claims.
//!
//! The search is exhaustive over a canonical program space: straight-line
//! programs are generated up to the bounds, deduplicated up to thread
//! permutation and location renaming by a lexicographically minimal byte
//! encoding, and every candidate execution of every canonical program is
//! checked once (pass A). Transformation pairs are then checked against
//! stored per-execution behavior signatures (pass B) instead of
//! re-enumerating the source program for every pair; any would-be
//! violation found through the signature path is re-verified with the
//! direct enumeration engines before it is reported, and a disagreement
//! between the two paths aborts the search with a property failure.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::effects::{
    check_atr_shape, classify_effect, detect_triangular_race, diff_effect, introduces_tr,
    is_safe_effect, EffectClass, TriangularRaceWitness,
};
use crate::error::{Error, Result};
use crate::execution::{
    enumerate_candidates, execution_to_doc, Execution, ExecutionDoc,
};
use crate::models::{empty_rf_consistent, flip_moext_witness, ModelId, RelView};
use crate::pretrace::{pretrace_to_doc, Event, EventKind, PreTrace, PreTraceDoc};
use crate::relations::Rel;

use itertools::Itertools;

// ===== single-pair portability =====

/// Verdict of [`port_check`]: the syntactic guard outcome side by side
/// with the empirical safety comparison, plus the divergence flag that
/// marks a theorem violation (guard passed yet the pair is not portable).
#[derive(Debug, Clone, Serialize)]
pub struct PortVerdict {
    pub target: ModelId,
    /// True iff no guard flag was raised for the target.
    pub guard_passes: bool,
    /// Raised guard flags: `wi` / `we` always, `tuwri` for TSO only.
    pub guard_failures: Vec<String>,
    /// The pair preserves behaviors under SC.
    pub sc_safe: bool,
    /// The pair preserves behaviors under the target model.
    pub target_safe: bool,
    /// SC-safety implies target-safety for this pair.
    pub portable: bool,
    /// A target-consistent execution of the transformed pre-trace matching
    /// no source behavior; present iff `portable` is false.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<ExecutionDoc>,
    /// Guard passed but the pair is not portable. Never expected; such a
    /// verdict is a finding against the guard theorem itself.
    pub theorem_violation: bool,
}

/// Check whether the transformation `p ↦ p2` ports from SC to `target`.
///
/// The guard is purely syntactic: `wi` (introduced write), `we`
/// (eliminated write), and — for TSO only — `tuwri` (thread-unordered
/// write/read pair gaining order to an independent write). The empirical
/// part enumerates both pre-traces under SC and the target and compares
/// behavior sets. `target` must be weaker than SC.
pub fn port_check(
    p: &Arc<PreTrace>,
    p2: &Arc<PreTrace>,
    target: ModelId,
    cap: usize,
) -> Result<PortVerdict> {
    if target == ModelId::Sc {
        return Err(Error::Precondition(
            "portability target must be weaker than SC (tso or sra)".into(),
        ));
    }
    let eff = diff_effect(p, p2)?;
    let class = classify_effect(p, p2, &eff);
    let mut guard_failures = Vec::new();
    if class.wi {
        guard_failures.push("wi".to_string());
    }
    if class.we {
        guard_failures.push("we".to_string());
    }
    if target == ModelId::Tso && class.tuwri {
        guard_failures.push("tuwri".to_string());
    }
    let guard_passes = guard_failures.is_empty();
    let sc = is_safe_effect(p, p2, ModelId::Sc, cap)?;
    let tgt = is_safe_effect(p, p2, target, cap)?;
    let portable = !sc.safe || tgt.safe;
    let counterexample =
        if portable { None } else { tgt.counterexample.as_ref().map(execution_to_doc) };
    Ok(PortVerdict {
        target,
        guard_passes,
        guard_failures,
        sc_safe: sc.safe,
        target_safe: tgt.safe,
        portable,
        counterexample,
        theorem_violation: guard_passes && !portable,
    })
}

// ===== corpus weakness audit =====

/// Per-pre-trace consistency counts under the three models.
#[derive(Debug, Clone, Serialize)]
pub struct WeaknessRow {
    pub name: String,
    pub candidates: u64,
    pub sc_consistent: u64,
    pub tso_consistent: u64,
    pub sra_consistent: u64,
    /// Every single execution satisfied SC ⇒ TSO ⇒ SRA.
    pub chain_holds: bool,
}

/// Report of [`weakness_audit`].
#[derive(Debug, Clone, Serialize)]
pub struct WeaknessReport {
    pub schema: u32,
    pub rows: Vec<WeaknessRow>,
    pub total_candidates: u64,
    /// One message per execution violating the chain (never expected).
    pub violations: Vec<String>,
}

/// Verify the model-weakness chain SC ⇒ TSO ⇒ SRA on every candidate
/// execution of every named pre-trace, reporting per-model counts.
pub fn weakness_audit(corpus: &[(String, Arc<PreTrace>)], cap: usize) -> Result<WeaknessReport> {
    let mut rows = Vec::with_capacity(corpus.len());
    let mut violations = Vec::new();
    let mut total = 0u64;
    for (name, pt) in corpus {
        let mut row = WeaknessRow {
            name: name.clone(),
            candidates: 0,
            sc_consistent: 0,
            tso_consistent: 0,
            sra_consistent: 0,
            chain_holds: true,
        };
        for e in enumerate_candidates(pt, cap)? {
            let v = RelView::build(pt, e.rf(), e.mo())?;
            let (sc, tso, sra) = crate::models::consistency_trio(&v)?;
            row.candidates += 1;
            row.sc_consistent += sc as u64;
            row.tso_consistent += tso as u64;
            row.sra_consistent += sra as u64;
            if (sc && !tso) || (tso && !sra) {
                row.chain_holds = false;
                violations.push(format!(
                    "{name}: execution with mo {:?} breaks the weakness chain \
                     (sc={sc}, tso={tso}, sra={sra})",
                    e.mo_order_labels()
                ));
            }
        }
        total += row.candidates;
        rows.push(row);
    }
    Ok(WeaknessReport { schema: 1, rows, total_candidates: total, violations })
}

// ===== search bounds =====

/// Transformation templates the bounded search applies to every program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    /// Swap two adjacent events of one thread.
    AdjacentSwap,
    /// Remove one event (dropping its thread if it empties).
    EventElimination,
    /// Insert one fresh event at any position or as a new thread.
    EventIntroduction,
    /// Move the single event of a one-event thread to the head of
    /// another thread.
    PrologueInlining,
}

impl Template {
    pub const ALL: [Template; 4] = [
        Template::AdjacentSwap,
        Template::EventElimination,
        Template::EventIntroduction,
        Template::PrologueInlining,
    ];
}

/// Names used for generated locations, in index order.
const LOC_NAMES: [&str; 4] = ["x", "y", "z", "w"];

/// Bounds of the exhaustive search space.
///
/// `values` exists to pin the value alphabet of generated programs: all
/// initialization writes hold 0 and every generated write stores the
/// smallest nonzero value. Consistency of a candidate execution never
/// depends on the concrete values, so one nonzero value realizes every
/// behavior distinction the bounded space can exhibit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBounds {
    pub max_threads: u32,
    pub max_events: u32,
    pub locations: u32,
    pub values: Vec<i64>,
    pub max_updates: u32,
    pub templates: Vec<Template>,
    /// Wall-clock budget per transformation pair, in milliseconds. A pair
    /// at or above the budget aborts the sweep and marks the report as
    /// partial.
    pub pair_budget_ms: u64,
}

impl Default for SearchBounds {
    fn default() -> SearchBounds {
        SearchBounds {
            max_threads: 3,
            max_events: 6,
            locations: 2,
            values: vec![0, 1],
            max_updates: 1,
            templates: Template::ALL.to_vec(),
            pair_budget_ms: 10_000,
        }
    }
}

impl SearchBounds {
    pub fn validate(&self) -> Result<()> {
        if self.max_threads == 0 || self.max_events == 0 {
            return Err(Error::Schema("search bounds must allow at least one event".into()));
        }
        if self.max_events > 8 {
            return Err(Error::Schema("search bounds cap program events at 8".into()));
        }
        if self.locations == 0 || self.locations as usize > LOC_NAMES.len() {
            return Err(Error::Schema(format!(
                "search bounds support 1..={} locations",
                LOC_NAMES.len()
            )));
        }
        if !self.values.contains(&0) || !self.values.iter().any(|&v| v != 0) {
            return Err(Error::Schema(
                "search values must contain 0 and at least one nonzero value".into(),
            ));
        }
        Ok(())
    }

    /// The value every generated (non-initialization) write stores.
    pub fn write_value(&self) -> i64 {
        *self.values.iter().filter(|&&v| v != 0).min().expect("validated nonzero value")
    }
}

// ===== search report =====

/// Pass/fail counters for one claim.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ClaimStats {
    /// Instances whose hypotheses held.
    pub checked: u64,
    pub passed: u64,
    pub violated: u64,
}

/// One verbatim violating instance.
#[derive(Debug, Clone, Serialize)]
pub struct SearchViolation {
    pub claim: String,
    pub detail: String,
    pub base: PreTraceDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transformed: Option<PreTraceDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub execution: Option<ExecutionDoc>,
}

/// Report of [`theorem_search`].
#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub schema: u32,
    pub bounds: SearchBounds,
    /// Canonical programs generated.
    pub programs: u64,
    /// Transformation pairs checked.
    pub pairs: u64,
    /// Candidate executions checked.
    pub executions: u64,
    pub claims: BTreeMap<String, ClaimStats>,
    pub violations: Vec<SearchViolation>,
    /// More violations occurred than the report retains.
    pub violations_truncated: bool,
    /// A pair hit the per-pair budget; coverage is partial.
    pub budget_exhausted: bool,
    /// True iff the whole bounded space was covered.
    pub complete: bool,
}

const MAX_VIOLATIONS: usize = 200;

#[derive(Default)]
struct Tally {
    map: BTreeMap<&'static str, ClaimStats>,
    violations: Vec<SearchViolation>,
    truncated: bool,
}

impl Tally {
    fn pass(&mut self, claim: &'static str) {
        let s = self.map.entry(claim).or_default();
        s.checked += 1;
        s.passed += 1;
    }

    fn fail(&mut self, claim: &'static str, v: SearchViolation) {
        let s = self.map.entry(claim).or_default();
        s.checked += 1;
        s.violated += 1;
        if self.violations.len() < MAX_VIOLATIONS {
            self.violations.push(v);
        } else {
            self.truncated = true;
        }
    }

    fn record(&mut self, claim: &'static str, ok: bool, mk: impl FnOnce() -> SearchViolation) {
        if ok {
            self.pass(claim);
        } else {
            self.fail(claim, mk());
        }
    }
}

fn exec_violation(
    claim: &'static str,
    detail: String,
    pt: &PreTrace,
    e: &Execution,
) -> SearchViolation {
    SearchViolation {
        claim: claim.to_string(),
        detail,
        base: pretrace_to_doc(pt),
        transformed: None,
        execution: Some(execution_to_doc(e)),
    }
}

fn pair_violation(
    claim: &'static str,
    detail: String,
    p: &PreTrace,
    p2: &PreTrace,
    execution: Option<ExecutionDoc>,
) -> SearchViolation {
    SearchViolation {
        claim: claim.to_string(),
        detail,
        base: pretrace_to_doc(p),
        transformed: Some(pretrace_to_doc(p2)),
        execution,
    }
}

// ===== program generation =====

/// One straight-line operation: kind plus location index.
type Op = (EventKind, u8);
/// A program as per-thread operation lists.
type Prog = Vec<Vec<Op>>;
/// A program with one stable label per operation.
type LabeledProg = Vec<Vec<(String, Op)>>;

fn is_writish_op(k: EventKind) -> bool {
    matches!(k, EventKind::Write | EventKind::Update)
}

fn is_readish_op(k: EventKind) -> bool {
    matches!(k, EventKind::Read | EventKind::Update)
}

/// Byte encoding of one operation; 0 is reserved as a thread separator.
fn op_byte(k: EventKind, loc: u8) -> u8 {
    let kind = match k {
        EventKind::Read => 0u8,
        EventKind::Write => 1,
        EventKind::Update => 2,
    };
    1 + kind * 4 + loc
}

fn thread_bytes(t: &[Op], perm: &[u8]) -> Vec<u8> {
    t.iter().map(|&(k, l)| op_byte(k, perm[l as usize])).collect()
}

/// Canonicalize a program up to thread permutation and location renaming.
///
/// Returns the lexicographically minimal byte key together with the
/// witnessing isomorphism: `order[ct]` is the original index of canonical
/// thread `ct`, and `perm[orig_loc]` is the canonical location index.
fn canonicalize(prog: &[Vec<Op>], nlocs: u8) -> (Vec<u8>, Vec<usize>, Vec<u8>) {
    let mut best: Option<(Vec<u8>, Vec<usize>, Vec<u8>)> = None;
    for perm in (0..nlocs).permutations(nlocs as usize) {
        let mut tagged: Vec<(Vec<u8>, usize)> =
            prog.iter().enumerate().map(|(i, t)| (thread_bytes(t, &perm), i)).collect();
        tagged.sort();
        let mut key = Vec::with_capacity(prog.iter().map(|t| t.len() + 1).sum());
        for (bytes, _) in &tagged {
            key.extend_from_slice(bytes);
            key.push(0);
        }
        if best.as_ref().map_or(true, |(k, _, _)| key < *k) {
            best = Some((key, tagged.into_iter().map(|(_, i)| i).collect(), perm));
        }
    }
    best.expect("at least one location permutation")
}

fn canonical_program(prog: &[Vec<Op>], nlocs: u8) -> (Vec<u8>, Prog) {
    let (key, order, perm) = canonicalize(prog, nlocs);
    let canon: Prog = order
        .iter()
        .map(|&t| prog[t].iter().map(|&(k, l)| (k, perm[l as usize])).collect())
        .collect();
    (key, canon)
}

/// All canonical programs within the bounds, keyed and sorted by their
/// canonical byte encoding.
fn generate_programs(b: &SearchBounds) -> Vec<(Vec<u8>, Prog)> {
    let mut out: BTreeMap<Vec<u8>, Prog> = BTreeMap::new();
    let nlocs = b.locations as u8;
    for n in 1..=b.max_events {
        compose_threads(n, b.max_threads, &mut Vec::new(), &mut |comp| {
            fill_threads(comp, 0, b.max_updates, nlocs, &mut Vec::new(), &mut out);
        });
    }
    out.into_iter().collect()
}

/// Ordered compositions of `left` events into at most `parts` nonempty
/// threads (thread order is erased later by canonicalization).
fn compose_threads(left: u32, parts: u32, comp: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if left == 0 {
        f(comp);
        return;
    }
    if parts == 0 {
        return;
    }
    for first in 1..=left {
        comp.push(first);
        compose_threads(left - first, parts - 1, comp, f);
        comp.pop();
    }
}

fn fill_threads(
    comp: &[u32],
    ti: usize,
    ups: u32,
    nlocs: u8,
    acc: &mut Prog,
    out: &mut BTreeMap<Vec<u8>, Prog>,
) {
    if ti == comp.len() {
        let (key, canon) = canonical_program(acc, nlocs);
        out.entry(key).or_insert(canon);
        return;
    }
    fill_slots(comp, ti, comp[ti], ups, nlocs, &mut Vec::new(), acc, out);
}

#[allow(clippy::too_many_arguments)]
fn fill_slots(
    comp: &[u32],
    ti: usize,
    left: u32,
    ups: u32,
    nlocs: u8,
    cur: &mut Vec<Op>,
    acc: &mut Prog,
    out: &mut BTreeMap<Vec<u8>, Prog>,
) {
    if left == 0 {
        acc.push(cur.clone());
        fill_threads(comp, ti + 1, ups, nlocs, acc, out);
        acc.pop();
        return;
    }
    for loc in 0..nlocs {
        for kind in [EventKind::Read, EventKind::Write] {
            cur.push((kind, loc));
            fill_slots(comp, ti, left - 1, ups, nlocs, cur, acc, out);
            cur.pop();
        }
        if ups > 0 {
            cur.push((EventKind::Update, loc));
            fill_slots(comp, ti, left - 1, ups - 1, nlocs, cur, acc, out);
            cur.pop();
        }
    }
}

/// Attach stable labels: thread `t` slot `i` becomes `T{t+1}.{i}`.
fn labeled(prog: &Prog) -> LabeledProg {
    prog.iter()
        .enumerate()
        .map(|(t, th)| {
            th.iter().enumerate().map(|(i, &op)| (format!("T{}.{i}", t + 1), op)).collect()
        })
        .collect()
}

/// Build the pre-trace of a labeled program: thread `t` gets tid `t+1`,
/// per-thread program order is the slot order, and every write stores
/// `wv`.
fn lp_pretrace(lp: &LabeledProg, wv: i64) -> Result<Arc<PreTrace>> {
    let mut events = Vec::new();
    let mut po = Vec::new();
    for (t, th) in lp.iter().enumerate() {
        for (i, (label, (kind, loc))) in th.iter().enumerate() {
            events.push(Event {
                label: label.clone(),
                tid: (t + 1) as u32,
                kind: *kind,
                loc: LOC_NAMES[*loc as usize].to_string(),
                wval: if is_writish_op(*kind) { Some(wv) } else { None },
            });
            if i + 1 < th.len() {
                po.push((label.clone(), th[i + 1].0.clone()));
            }
        }
    }
    Ok(Arc::new(PreTrace::new(events, &po)?))
}

// ===== per-class execution store =====

/// Where a canonical event came from: thread/slot of the canonical
/// program, or an initialization write of a canonical location.
#[derive(Debug, Clone, Copy)]
enum EvMeta {
    Prog(u8, u8),
    Init(u8),
}

/// Everything pass B needs about one canonical program class: its
/// program, the event layout of its pre-trace, and the behavior
/// signatures of all consistent candidate executions, stored as deltas
/// (`sc`, then TSO-only, then SRA-only) of fixed-width records. One
/// record is the rf source index per readish event (ascending event
/// order) followed by the non-initialization modification order.
struct ClassEntry {
    prog: Prog,
    reads: Vec<u32>,
    n_init: usize,
    mo_count: usize,
    meta: Vec<EvMeta>,
    sc: Vec<u8>,
    tso_extra: Vec<u8>,
    sra_extra: Vec<u8>,
    candidates: u64,
}

impl ClassEntry {
    fn rec_len(&self) -> usize {
        self.reads.len() + self.mo_count
    }
}

fn section(entry: &ClassEntry, i: usize) -> &Vec<u8> {
    match i {
        0 => &entry.sc,
        1 => &entry.tso_extra,
        _ => &entry.sra_extra,
    }
}

fn model_depth(m: ModelId) -> usize {
    match m {
        ModelId::Sc => 1,
        ModelId::Tso => 2,
        ModelId::Sra => 3,
    }
}

/// Iterate the set bits of a row mask.
fn bits(mut m: u64) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros();
            m &= m - 1;
            Some(i)
        }
    })
}

/// Pass A over one canonical program: enumerate every candidate
/// execution once, run the per-execution claims, and store behavior
/// signatures of the consistent ones.
fn process_base(prog: &Prog, wv: i64, cap: usize, tally: &mut Tally) -> Result<ClassEntry> {
    let lp = labeled(prog);
    let pt = lp_pretrace(&lp, wv)?;
    let n = pt.len() as u32;
    let reads: Vec<u32> = (0..n).filter(|&i| pt.event(i).is_read()).collect();
    let n_init = (0..n).filter(|&i| pt.event(i).is_init()).count();
    let mo_count = (0..n).filter(|&i| pt.event(i).is_write() && !pt.event(i).is_init()).count();
    let mut counts = vec![0u8; prog.len()];
    let mut meta = Vec::with_capacity(n as usize);
    for i in 0..n {
        let ev = pt.event(i);
        if ev.is_init() {
            let l = LOC_NAMES.iter().position(|nm| *nm == ev.loc).expect("generated location") as u8;
            meta.push(EvMeta::Init(l));
        } else {
            let ct = (ev.tid - 1) as usize;
            meta.push(EvMeta::Prog(ct as u8, counts[ct]));
            counts[ct] += 1;
        }
    }
    let mut entry = ClassEntry {
        prog: prog.clone(),
        reads,
        n_init,
        mo_count,
        meta,
        sc: Vec::new(),
        tso_extra: Vec::new(),
        sra_extra: Vec::new(),
        candidates: 0,
    };
    for e in enumerate_candidates(&pt, cap)? {
        entry.candidates += 1;
        let v = RelView::build(&pt, e.rf(), e.mo())?;
        let (sc, tso, sra) = exec_claims(&pt, &e, &v, tally)?;
        if sra {
            let dst = if sc {
                &mut entry.sc
            } else if tso {
                &mut entry.tso_extra
            } else {
                &mut entry.sra_extra
            };
            for &r in &entry.reads {
                dst.push(e.rf_source(r).expect("readish event has an rf source") as u8);
            }
            for &w in &e.mo_order()[entry.n_init..] {
                dst.push(w as u8);
            }
        }
    }
    Ok(entry)
}

/// Per-execution claims. Returns the (sc, tso, sra) consistency trio.
///
/// The trio is computed inline (it matches `models::consistency_trio`,
/// which assumes rule (a) holds, as it does for enumerator-produced
/// candidates) so the compositions can be shared with the claim checks.
fn exec_claims(
    pt: &Arc<PreTrace>,
    e: &Execution,
    v: &RelView,
    tally: &mut Tally,
) -> Result<(bool, bool, bool)> {
    let rb_mo = v.rb.compose(&v.mo)?;
    let mo_hb = v.mo.compose(&v.hb)?;
    let shared = v.hb.is_irreflexive()
        && mo_hb.is_irreflexive()
        && v.rb.compose(&v.hb)?.is_irreflexive()
        && rb_mo.is_irreflexive();
    let sc = shared && rb_mo.compose(&v.hb)?.is_irreflexive();
    let tso = shared
        && rb_mo.compose(&v.rfe)?.compose(&v.po)?.is_irreflexive()
        && rb_mo.compose(&v.u_id)?.compose(&v.po)?.is_irreflexive();
    let sra = shared;

    // Model weakness: SC ⇒ TSO ⇒ SRA, execution by execution.
    tally.record("model-weakness-chain", !(sc && !tso) && !(tso && !sra), || {
        exec_violation(
            "model-weakness-chain",
            format!("consistency chain broken: sc={sc}, tso={tso}, sra={sra}"),
            pt,
            e,
        )
    });

    // SC rule set against the linearization oracle: SC-consistency is
    // equivalent to acyclicity of po ∪ rf ∪ mo ∪ rb (minus update
    // identities).
    let oracle =
        !v.po.union(&v.rf)?.union(&v.mo)?.union(&v.rb.without_identity())?.has_cycle();
    tally.record("sc-oracle-agreement", oracle == sc, || {
        exec_violation(
            "sc-oracle-agreement",
            format!("rule verdict sc={sc} but union-acyclicity oracle says {oracle}"),
            pt,
            e,
        )
    });

    // Every TSO-consistent, SC-inconsistent execution carries an
    // rb;mo_ext;po cycle.
    if tso && !sc {
        let cyc = !v.rb.compose(&v.mo_ext)?.compose(&v.po)?.is_irreflexive();
        tally.record("moext-cycle", cyc, || {
            exec_violation(
                "moext-cycle",
                "TSO-only execution lacks an rb;mo_ext;po cycle".into(),
                pt,
                e,
            )
        });
    }

    // Every triangular race of a TSO-consistent execution has the
    // axiomatic shape.
    if tso {
        for w in detect_triangular_race(e) {
            let ok = check_atr_shape(e, &w)?;
            tally.record("race-shape", ok, || {
                exec_violation(
                    "race-shape",
                    format!("race ({}, {}, {}) fails the shape check", w.w_x, w.r_x, w.w_y),
                    pt,
                    e,
                )
            });
        }
    }

    // An SC-inconsistent execution whose mo;po is irreflexive has a
    // crucial set; by rf-monotonicity of the rules that is equivalent to
    // the empty-rf execution being consistent.
    if !sc && v.mo.compose(&v.po)?.is_irreflexive() {
        let exists = empty_rf_consistent(pt, e.mo(), ModelId::Sc)?;
        tally.record("crucial-set-exists", exists, || {
            exec_violation(
                "crucial-set-exists",
                "SC-inconsistent execution with irreflexive mo;po has no crucial set".into(),
                pt,
                e,
            )
        });
    }

    flip_claim(pt, e, v, &mo_hb, tally)?;

    Ok((sc, tso, sra))
}

/// For every read whose flip hypotheses hold, a witness execution with
/// the read's external-order predecessors flipped must exist.
///
/// The hypothesis gate mirrors `flip_moext_witness` exactly so the
/// expensive search only runs where the claim applies and a cycle is
/// present; a disagreement between the gate and the search's own
/// precondition checks is an internal error.
fn flip_claim(
    pt: &Arc<PreTrace>,
    e: &Execution,
    v: &RelView,
    mo_hb: &Rel,
    tally: &mut Tally,
) -> Result<()> {
    if mo_hb.union(&v.hb)?.has_cycle() {
        return Ok(()); // hypothesis (a) fails for every read
    }
    let n = pt.len() as u32;
    for r in 0..n {
        if !pt.event(r).is_read() {
            continue;
        }
        // hypothesis (b): [r];rb;hb irreflexive — hb is independent of mo,
        // so a cycle closed through hb is beyond any mo reversal
        let rb_r = v.rb.row(r);
        if bits(rb_r).any(|w| v.hb.contains(w, r)) {
            continue;
        }
        // hypothesis (c): [r];rb irreflexive — an update reading before
        // itself pins its source's mo-predecessors against any fix
        if rb_r >> r & 1 == 1 {
            continue;
        }
        // presence of an [r];rb;mo_ext?;hb? cycle (reflexive closures via
        // seeding each stage with the previous one)
        let s1 = rb_r;
        let mut s2 = s1;
        for w in bits(s1) {
            s2 |= v.mo_ext.row(w);
        }
        let mut s3 = s2;
        for w in bits(s2) {
            s3 |= v.hb.row(w);
        }
        if s3 >> r & 1 == 0 {
            tally.pass("flip-witness-exists"); // identity assignment already witnesses
            continue;
        }
        let label = pt.universe().labels()[r as usize].clone();
        match flip_moext_witness(e, &label) {
            Ok(_) => tally.pass("flip-witness-exists"),
            Err(Error::PropertyFailure(msg)) => {
                let v = exec_violation(
                    "flip-witness-exists",
                    format!("no flip witness for read {label}: {msg}"),
                    pt,
                    e,
                );
                tally.fail("flip-witness-exists", v);
            }
            Err(Error::Precondition(msg)) => {
                return Err(Error::PropertyFailure(format!(
                    "flip hypothesis gate diverged on read {label}: {msg}"
                )))
            }
            Err(err) => return Err(err),
        }
    }
    Ok(())
}

// ===== pass B: transformation pairs =====

/// One generated transformation pair: the transformed program (with
/// labels carried over from the source) and the effect-class flags the
/// template is meant to produce.
struct PairSpec {
    template: Template,
    lp2: LabeledProg,
    intended: Vec<&'static str>,
}

fn flag_raised(class: &EffectClass, flag: &str) -> bool {
    match flag {
        "wi" => class.wi,
        "we" => class.we,
        "ww_deord" => class.ww_deord,
        "same_loc_wr_deord" => class.same_loc_wr_deord,
        "same_loc_rw_deord" => class.same_loc_rw_deord,
        "same_loc_rr_deord" => class.same_loc_rr_deord,
        _ => false,
    }
}

/// All transformation pairs of one labeled program under the bounds, in
/// a fixed deterministic order.
fn enumerate_pairs(lp: &LabeledProg, b: &SearchBounds) -> Vec<PairSpec> {
    let mut out = Vec::new();
    let total: u32 = lp.iter().map(|t| t.len() as u32).sum();
    let updates_used =
        lp.iter().flatten().filter(|(_, (k, _))| *k == EventKind::Update).count() as u32;
    let nlocs = b.locations as u8;
    for &template in &b.templates {
        match template {
            Template::AdjacentSwap => {
                for t in 0..lp.len() {
                    for i in 0..lp[t].len().saturating_sub(1) {
                        let (ka, la) = lp[t][i].1;
                        let (kb, lb) = lp[t][i + 1].1;
                        let mut lp2 = lp.clone();
                        lp2[t].swap(i, i + 1);
                        let mut intended = Vec::new();
                        if is_writish_op(ka) && is_writish_op(kb) {
                            intended.push("ww_deord");
                        }
                        if la == lb {
                            if is_writish_op(ka) && is_readish_op(kb) {
                                intended.push("same_loc_wr_deord");
                            }
                            if is_readish_op(ka) && is_writish_op(kb) {
                                intended.push("same_loc_rw_deord");
                            }
                            if is_readish_op(ka) && is_readish_op(kb) {
                                intended.push("same_loc_rr_deord");
                            }
                        }
                        out.push(PairSpec { template, lp2, intended });
                    }
                }
            }
            Template::EventElimination => {
                for t in 0..lp.len() {
                    for i in 0..lp[t].len() {
                        let (k, _) = lp[t][i].1;
                        let mut lp2 = lp.clone();
                        lp2[t].remove(i);
                        if lp2[t].is_empty() {
                            lp2.remove(t);
                        }
                        let intended = if is_writish_op(k) { vec!["we"] } else { vec![] };
                        out.push(PairSpec { template, lp2, intended });
                    }
                }
            }
            Template::EventIntroduction => {
                if total < b.max_events {
                    let mut ops: Vec<Op> = Vec::new();
                    for loc in 0..nlocs {
                        ops.push((EventKind::Read, loc));
                        ops.push((EventKind::Write, loc));
                        if updates_used < b.max_updates {
                            ops.push((EventKind::Update, loc));
                        }
                    }
                    for &op in &ops {
                        let intended: Vec<&'static str> =
                            if is_writish_op(op.0) { vec!["wi"] } else { vec![] };
                        for t in 0..lp.len() {
                            for i in 0..=lp[t].len() {
                                let mut lp2 = lp.clone();
                                lp2[t].insert(i, ("n0".to_string(), op));
                                out.push(PairSpec { template, lp2, intended: intended.clone() });
                            }
                        }
                        if (lp.len() as u32) < b.max_threads {
                            let mut lp2 = lp.clone();
                            lp2.push(vec![("n0".to_string(), op)]);
                            out.push(PairSpec { template, lp2, intended: intended.clone() });
                        }
                    }
                }
            }
            Template::PrologueInlining => {
                for s in 0..lp.len() {
                    if lp[s].len() != 1 || lp.len() < 2 {
                        continue;
                    }
                    for t in 0..lp.len() {
                        if t == s {
                            continue;
                        }
                        let mut lp2 = lp.clone();
                        let moved = lp2[s][0].clone();
                        lp2.remove(s);
                        let t2 = if t > s { t - 1 } else { t };
                        lp2[t2].insert(0, moved);
                        out.push(PairSpec { template, lp2, intended: vec![] });
                    }
                }
            }
        }
    }
    out
}

/// Marker for "not a common event" in the per-pair code tables, and for
/// "source projects away" in encoded signatures.
const FF: u8 = 0xFF;

/// Per-pair projection context onto the common (shared-label) events.
///
/// A source and a transformed execution are behavior-equivalent exactly
/// when their encoded signatures agree: the encoding lists, per common
/// readish event in a fixed order, the code of its rf source (`FF` when
/// the source is not common, matching the restriction semantics of
/// behavior equivalence), followed by the modification order projected
/// onto common non-initialization writes. Initialization order is
/// constant on both sides (initialization writes precede all program
/// writes, ordered by location) so omitting it loses nothing.
struct PairCtx<'a> {
    p_entry: &'a ClassEntry,
    q_entry: Option<&'a ClassEntry>,
    p_code: Vec<u8>,
    p_emit: Vec<usize>,
    q_code: Vec<u8>,
    q_emit: Vec<usize>,
    p_sigs: [Option<HashSet<Vec<u8>>>; 3],
    q_pt: Option<Arc<PreTrace>>,
}

impl<'a> PairCtx<'a> {
    fn build(
        p: &Arc<PreTrace>,
        p_entry: &'a ClassEntry,
        lp2: &LabeledProg,
        store: &'a HashMap<Vec<u8>, ClassEntry>,
        b: &SearchBounds,
    ) -> Result<PairCtx<'a>> {
        if lp2.is_empty() {
            // An empty transformed program has one (empty) behavior; any
            // sequential execution of the source matches it.
            return Ok(PairCtx {
                p_entry,
                q_entry: None,
                p_code: vec![FF; p.len()],
                p_emit: Vec::new(),
                q_code: Vec::new(),
                q_emit: Vec::new(),
                p_sigs: [None, None, None],
                q_pt: None,
            });
        }
        let ops: Prog =
            lp2.iter().map(|th| th.iter().map(|(_, op)| *op).collect()).collect();
        let nlocs = b.locations as u8;
        let (qkey, order, perm) = canonicalize(&ops, nlocs);
        let q_entry = store.get(&qkey).ok_or_else(|| {
            Error::PropertyFailure("transformed program class missing from the store".into())
        })?;
        let mut inv = vec![0u8; nlocs as usize];
        for (orig, &canon) in perm.iter().enumerate() {
            inv[canon as usize] = orig as u8;
        }
        // label of each canonical event, in the transformed program's naming
        let q_labels: Vec<String> = q_entry
            .meta
            .iter()
            .map(|m| match *m {
                EvMeta::Prog(ct, ci) => lp2[order[ct as usize]][ci as usize].0.clone(),
                EvMeta::Init(l) => format!("init_{}", LOC_NAMES[inv[l as usize] as usize]),
            })
            .collect();
        let p_labels = p.universe().labels();
        let pset: BTreeSet<&str> = p_labels.iter().map(String::as_str).collect();
        let common: Vec<&str> = q_labels
            .iter()
            .map(String::as_str)
            .filter(|l| pset.contains(l))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let code_of: HashMap<&str, u8> =
            common.iter().enumerate().map(|(i, l)| (*l, i as u8)).collect();
        let p_code: Vec<u8> =
            p_labels.iter().map(|l| *code_of.get(l.as_str()).unwrap_or(&FF)).collect();
        let q_code: Vec<u8> =
            q_labels.iter().map(|l| *code_of.get(l.as_str()).unwrap_or(&FF)).collect();
        let mut p_emit: Vec<usize> = (0..p_entry.reads.len())
            .filter(|&k| p_code[p_entry.reads[k] as usize] != FF)
            .collect();
        p_emit.sort_by_key(|&k| p_code[p_entry.reads[k] as usize]);
        let mut q_emit: Vec<usize> = (0..q_entry.reads.len())
            .filter(|&k| q_code[q_entry.reads[k] as usize] != FF)
            .collect();
        q_emit.sort_by_key(|&k| q_code[q_entry.reads[k] as usize]);
        let pcodes: Vec<u8> = p_emit.iter().map(|&k| p_code[p_entry.reads[k] as usize]).collect();
        let qcodes: Vec<u8> = q_emit.iter().map(|&k| q_code[q_entry.reads[k] as usize]).collect();
        if pcodes != qcodes {
            return Err(Error::PropertyFailure(
                "pair read projections disagree between source and transformed classes".into(),
            ));
        }
        Ok(PairCtx {
            p_entry,
            q_entry: Some(q_entry),
            p_code,
            p_emit,
            q_code,
            q_emit,
            p_sigs: [None, None, None],
            q_pt: None,
        })
    }

    /// Signature-level safety of the pair under `m`: every consistent
    /// transformed execution must project onto a signature some
    /// consistent source execution also projects onto.
    fn safe(&mut self, m: ModelId) -> Result<bool> {
        let Some(q) = self.q_entry else {
            return Ok(true);
        };
        let depth = model_depth(m);
        for s in 0..depth {
            if self.p_sigs[s].is_none() {
                let entry = self.p_entry;
                let rl = entry.rec_len();
                let mut set = HashSet::new();
                for rec in section(entry, s).chunks_exact(rl.max(1)) {
                    set.insert(encode_rec(entry, rec, &self.p_code, &self.p_emit));
                }
                self.p_sigs[s] = Some(set);
            }
        }
        let rl = q.rec_len();
        for s in 0..depth {
            for rec in section(q, s).chunks_exact(rl.max(1)) {
                let sig = encode_rec(q, rec, &self.q_code, &self.q_emit);
                if !(0..depth)
                    .any(|i| self.p_sigs[i].as_ref().expect("built above").contains(&sig))
                {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn q_pretrace(&mut self, wv: i64) -> Result<Arc<PreTrace>> {
        if self.q_pt.is_none() {
            let q = self.q_entry.expect("nonempty transformed program");
            self.q_pt = Some(lp_pretrace(&labeled(&q.prog), wv)?);
        }
        Ok(self.q_pt.clone().expect("just built"))
    }
}

/// Project one stored record onto the common codes.
fn encode_rec(entry: &ClassEntry, rec: &[u8], code: &[u8], emit: &[usize]) -> Vec<u8> {
    let nr = entry.reads.len();
    let mut out = Vec::with_capacity(emit.len() + entry.mo_count);
    for &k in emit {
        out.push(code[rec[k] as usize]);
    }
    for &w in &rec[nr..] {
        let c = code[w as usize];
        if c != FF {
            out.push(c);
        }
    }
    out
}

/// Rebuild the execution a stored record denotes, on the class pre-trace.
fn rebuild_execution(entry: &ClassEntry, pt: &Arc<PreTrace>, rec: &[u8]) -> Result<Execution> {
    let mut rf = Rel::empty(pt.universe());
    for (k, &r) in entry.reads.iter().enumerate() {
        rf.insert(rec[k] as u32, r);
    }
    // initialization writes come first, ordered by location, exactly as
    // the candidate enumerator produces them
    let mut inits: Vec<u32> = (0..pt.len() as u32).filter(|&i| pt.event(i).is_init()).collect();
    inits.sort_by(|&a, &b| pt.event(a).loc.cmp(&pt.event(b).loc));
    let mut mo_order = inits;
    mo_order.extend(rec[entry.reads.len()..].iter().map(|&w| w as u32));
    Execution::new(pt.clone(), rf, mo_order)
}

/// Triangular races per projected behavior signature: the union of race
/// triples over all TSO-consistent executions sharing a signature.
type RaceMap = HashMap<Vec<u8>, BTreeSet<(u8, u8, u8)>>;

fn race_codes(pt: &PreTrace, code: &[u8], w: &TriangularRaceWitness) -> Result<(u8, u8, u8)> {
    Ok((
        code[pt.require(&w.w_x)? as usize],
        code[pt.require(&w.r_x)? as usize],
        code[pt.require(&w.w_y)? as usize],
    ))
}

fn race_map(
    entry: &ClassEntry,
    pt: &Arc<PreTrace>,
    code: &[u8],
    emit: &[usize],
) -> Result<RaceMap> {
    let mut map = RaceMap::new();
    let rl = entry.rec_len();
    for s in 0..2 {
        for rec in section(entry, s).chunks_exact(rl.max(1)) {
            let e = rebuild_execution(entry, pt, rec)?;
            let races = detect_triangular_race(&e);
            if races.is_empty() {
                continue;
            }
            let key = encode_rec(entry, rec, code, emit);
            let set = map.entry(key).or_default();
            for w in races {
                set.insert(race_codes(pt, code, &w)?);
            }
        }
    }
    Ok(map)
}

/// Signature-level equivalent of the race-introduction check: some
/// TSO-consistent transformed execution carries a race that no
/// behavior-equivalent source execution carries.
fn atr_found(ctx: &mut PairCtx, p_races: &RaceMap, wv: i64) -> Result<bool> {
    let q_pt = ctx.q_pretrace(wv)?;
    let q = ctx.q_entry.expect("nonempty transformed program");
    let rl = q.rec_len();
    for s in 0..2 {
        for rec in section(q, s).chunks_exact(rl.max(1)) {
            let e2 = rebuild_execution(q, &q_pt, rec)?;
            let races = detect_triangular_race(&e2);
            if races.is_empty() {
                continue;
            }
            let key = encode_rec(q, rec, &ctx.q_code, &ctx.q_emit);
            let carried = p_races.get(&key);
            for w in races {
                let t = race_codes(&q_pt, &ctx.q_code, &w)?;
                if t.0 == FF || t.1 == FF || t.2 == FF {
                    // the race touches an event the source does not have
                    return Ok(true);
                }
                if carried.map_or(true, |set| !set.contains(&t)) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// A de-ordering claim: the signature path must find the pair SC-unsafe;
/// a safe verdict is confirmed against direct enumeration before being
/// reported as a violation.
fn check_unsafety_claim(
    claim: &'static str,
    sig_sc_safe: bool,
    p: &Arc<PreTrace>,
    p2: &Arc<PreTrace>,
    cap: usize,
    tally: &mut Tally,
) -> Result<()> {
    if !sig_sc_safe {
        tally.pass(claim);
        return Ok(());
    }
    let exact = is_safe_effect(p, p2, ModelId::Sc, cap)?;
    if !exact.safe {
        return Err(Error::PropertyFailure(format!(
            "signature safety diverged from enumeration on claim {claim}"
        )));
    }
    let v = pair_violation(
        claim,
        "de-ordered pair is behavior-preserving under SC".into(),
        p,
        p2,
        None,
    );
    tally.fail(claim, v);
    Ok(())
}

/// A guard-portability claim: SC-safety must imply target-safety. A
/// failing signature verdict is confirmed against direct enumeration;
/// only a confirmed failure is reported (with its counterexample).
fn check_portability_claim(
    claim: &'static str,
    target: ModelId,
    sig_pass: bool,
    p: &Arc<PreTrace>,
    p2: &Arc<PreTrace>,
    cap: usize,
    tally: &mut Tally,
) -> Result<()> {
    if sig_pass {
        tally.pass(claim);
        return Ok(());
    }
    let sc = is_safe_effect(p, p2, ModelId::Sc, cap)?;
    let tgt = is_safe_effect(p, p2, target, cap)?;
    if !(sc.safe && !tgt.safe) {
        return Err(Error::PropertyFailure(format!(
            "signature safety diverged from enumeration on claim {claim}"
        )));
    }
    let v = pair_violation(
        claim,
        format!("guarded pair is SC-safe but unsafe under {target}"),
        p,
        p2,
        tgt.counterexample.as_ref().map(execution_to_doc),
    );
    tally.fail(claim, v);
    Ok(())
}

/// Pass B over one canonical program: generate every transformation pair,
/// classify its effect, and check the pair claims. Returns false when a
/// pair hits the per-pair budget (the sweep then stops).
#[allow(clippy::too_many_arguments)]
fn process_pairs(
    prog: &Prog,
    p_entry: &ClassEntry,
    store: &HashMap<Vec<u8>, ClassEntry>,
    b: &SearchBounds,
    wv: i64,
    cap: usize,
    tally: &mut Tally,
    pairs: &mut u64,
) -> Result<bool> {
    let lp = labeled(prog);
    let p = lp_pretrace(&lp, wv)?;
    let mut base_races: Option<RaceMap> = None;
    for spec in enumerate_pairs(&lp, b) {
        let t0 = Instant::now();
        *pairs += 1;
        let p2 = lp_pretrace(&spec.lp2, wv)?;
        let eff = diff_effect(&p, &p2)?;
        let class = classify_effect(&p, &p2, &eff);

        // The template's intended effect class must be recognized.
        for flag in &spec.intended {
            tally.record("template-classification", flag_raised(&class, flag), || {
                pair_violation(
                    "template-classification",
                    format!("{:?} pair did not raise flag {flag}", spec.template),
                    &p,
                    &p2,
                    None,
                )
            });
        }

        let guard_sra = !class.wi && !class.we;
        let guard_tso = guard_sra && !class.tuwri;
        let c2 = class.ww_deord;
        let c4 = class.same_loc_wr_deord || class.same_loc_rw_deord;
        let identity_labels = eff.st_minus.is_empty() && eff.st_plus.is_empty();
        let need_ctx = guard_sra || c2 || c4 || (class.tuwri && identity_labels);
        let mut ctx = if need_ctx {
            Some(PairCtx::build(&p, p_entry, &spec.lp2, store, b)?)
        } else {
            None
        };

        if c2 || c4 || guard_sra {
            let ctx = ctx.as_mut().expect("context built above");
            let sc_safe = ctx.safe(ModelId::Sc)?;
            if c2 {
                check_unsafety_claim("ww-deordering-unsafe", sc_safe, &p, &p2, cap, tally)?;
            }
            if c4 {
                check_unsafety_claim("same-loc-deordering-unsafe", sc_safe, &p, &p2, cap, tally)?;
            }
            if guard_sra {
                let pass = !sc_safe || ctx.safe(ModelId::Sra)?;
                check_portability_claim(
                    "guard-sra-portable",
                    ModelId::Sra,
                    pass,
                    &p,
                    &p2,
                    cap,
                    tally,
                )?;
            }
            if guard_tso {
                let pass = !sc_safe || ctx.safe(ModelId::Tso)?;
                check_portability_claim(
                    "guard-tso-portable",
                    ModelId::Tso,
                    pass,
                    &p,
                    &p2,
                    cap,
                    tally,
                )?;
            }
        }

        // Every tuwri pair must introduce a triangular race.
        if class.tuwri {
            let found = if identity_labels {
                let ctx = ctx.as_mut().expect("context built above");
                if base_races.is_none() {
                    base_races = Some(race_map(p_entry, &p, &ctx.p_code, &ctx.p_emit)?);
                }
                let fast = atr_found(ctx, base_races.as_ref().expect("just built"), wv)?;
                if !fast {
                    // confirm before reporting; the paths must agree
                    if introduces_tr(&p, &p2, cap)?.is_some() {
                        return Err(Error::PropertyFailure(
                            "race-introduction signature path diverged from enumeration".into(),
                        ));
                    }
                }
                fast
            } else {
                introduces_tr(&p, &p2, cap)?.is_some()
            };
            tally.record("tuwri-introduces-race", found, || {
                pair_violation(
                    "tuwri-introduces-race",
                    format!(
                        "tuwri pair (witness {:?}) introduces no triangular race",
                        class.tuwri_witnesses.first()
                    ),
                    &p,
                    &p2,
                    None,
                )
            });
        }

        if t0.elapsed().as_millis() as u64 >= b.pair_budget_ms {
            return Ok(false);
        }
    }
    Ok(true)
}

// ===== the search =====

/// Exhaustively check every portability claim over the bounded space.
///
/// Pass A enumerates each canonical program's candidate executions once,
/// running the per-execution claims (weakness chain, SC oracle
/// agreement, external-order cycle presence, race shape, crucial-set
/// existence, flip-witness existence) and storing consistent behavior
/// signatures. Pass B generates every transformation pair per template,
/// checks the syntactic classification, and decides the pair claims
/// (guard portability to TSO and SRA, de-ordering unsafety, race
/// introduction) against the signature store, confirming any would-be
/// violation with the direct engines before reporting it.
pub fn theorem_search(b: &SearchBounds) -> Result<SearchReport> {
    b.validate()?;
    let wv = b.write_value();
    let cap = crate::execution::DEFAULT_CAP;
    let progs = generate_programs(b);
    let mut tally = Tally::default();
    let mut store: HashMap<Vec<u8>, ClassEntry> = HashMap::with_capacity(progs.len());
    let mut executions = 0u64;
    for (key, prog) in &progs {
        let entry = process_base(prog, wv, cap, &mut tally)?;
        executions += entry.candidates;
        store.insert(key.clone(), entry);
    }
    let mut pairs = 0u64;
    let mut budget_ok = true;
    for (key, prog) in &progs {
        let p_entry = store.get(key).expect("stored in pass A");
        if !process_pairs(prog, p_entry, &store, b, wv, cap, &mut tally, &mut pairs)? {
            budget_ok = false;
            break;
        }
    }
    let claims: BTreeMap<String, ClaimStats> =
        tally.map.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok(SearchReport {
        schema: 1,
        bounds: b.clone(),
        programs: progs.len() as u64,
        pairs,
        executions,
        claims,
        violations: tally.violations,
        violations_truncated: tally.truncated,
        budget_exhausted: !budget_ok,
        complete: budget_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::DEFAULT_CAP;
    use crate::lang::{extract_pretraces, parse_program};

    fn ev(label: &str, tid: u32, kind: EventKind, loc: &str, wval: Option<i64>) -> Event {
        Event { label: label.into(), tid, kind, loc: loc.into(), wval }
    }

    fn pt(events: Vec<Event>, po: &[(&str, &str)]) -> Arc<PreTrace> {
        let po: Vec<(String, String)> =
            po.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        Arc::new(PreTrace::new(events, &po).unwrap())
    }

    /// The four-thread inlining example: P has an independent write wy;
    /// P′ runs the same write at the head of the last thread.
    fn inlining_pair() -> (Arc<PreTrace>, Arc<PreTrace>) {
        let base = |wy_tid: u32| {
            vec![
                ev("wx", 1, EventKind::Write, "x", Some(1)),
                ev("wy", wy_tid, EventKind::Write, "y", Some(1)),
                ev("a", 3, EventKind::Read, "x", None),
                ev("b", 3, EventKind::Read, "y", None),
                ev("c", 4, EventKind::Read, "y", None),
                ev("d", 4, EventKind::Read, "x", None),
            ]
        };
        let p = pt(base(2), &[("a", "b"), ("c", "d")]);
        let p2 = pt(base(4), &[("a", "b"), ("wy", "c"), ("c", "d")]);
        (p, p2)
    }

    fn litmus(src: &str) -> Arc<PreTrace> {
        let prog = parse_program(src).unwrap();
        let mut ex = extract_pretraces(&prog).unwrap();
        assert_eq!(ex.len(), 1);
        Arc::new(ex.remove(0).pt)
    }

    #[test]
    fn port_check_rejects_an_sc_target() {
        let (p, p2) = inlining_pair();
        assert!(matches!(
            port_check(&p, &p2, ModelId::Sc, DEFAULT_CAP),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn inlining_fails_the_tso_guard_and_is_not_portable() {
        let (p, p2) = inlining_pair();
        let v = port_check(&p, &p2, ModelId::Tso, DEFAULT_CAP).unwrap();
        assert!(!v.guard_passes);
        assert_eq!(v.guard_failures, vec!["tuwri".to_string()]);
        assert!(v.sc_safe);
        assert!(!v.target_safe);
        assert!(!v.portable);
        assert!(v.counterexample.is_some());
        assert!(!v.theorem_violation, "guard failed, so no divergence");
    }

    #[test]
    fn inlining_passes_the_sra_guard_and_ports() {
        let (p, p2) = inlining_pair();
        let v = port_check(&p, &p2, ModelId::Sra, DEFAULT_CAP).unwrap();
        assert!(v.guard_passes, "tuwri is not part of the SRA guard");
        assert!(v.sc_safe && v.target_safe && v.portable);
        assert!(v.counterexample.is_none());
        assert!(!v.theorem_violation);
    }

    #[test]
    fn a_write_read_swap_on_distinct_locations_is_portable() {
        let p = pt(
            vec![
                ev("w", 1, EventKind::Write, "x", Some(1)),
                ev("r", 1, EventKind::Read, "y", None),
            ],
            &[("w", "r")],
        );
        let p2 = pt(
            vec![
                ev("w", 1, EventKind::Write, "x", Some(1)),
                ev("r", 1, EventKind::Read, "y", None),
            ],
            &[("r", "w")],
        );
        let v = port_check(&p, &p2, ModelId::Tso, DEFAULT_CAP).unwrap();
        assert!(v.guard_passes);
        assert!(v.portable);
        assert!(!v.theorem_violation);
    }

    #[test]
    fn the_identity_pair_is_portable_to_both_targets() {
        let (p, _) = inlining_pair();
        for m in [ModelId::Tso, ModelId::Sra] {
            let v = port_check(&p, &p, m, DEFAULT_CAP).unwrap();
            assert!(v.guard_passes && v.portable && !v.theorem_violation);
        }
    }

    #[test]
    fn weakness_audit_separates_the_models_as_expected() {
        let fig9 = litmus("1: x=1\n2: y=1; a=x\n3: b=x; c=y\n");
        let sb = litmus("1: x=1; a=y\n2: y=1; b=x\n");
        let single = litmus("1: x=1; a=x; y=1\n");
        let corpus = vec![
            ("triangular".to_string(), fig9),
            ("store-buffer".to_string(), sb),
            ("sequential".to_string(), single),
        ];
        let rep = weakness_audit(&corpus, DEFAULT_CAP).unwrap();
        assert!(rep.violations.is_empty());
        assert!(rep.rows.iter().all(|r| r.chain_holds));
        // the triangular-race program separates SC from TSO
        assert!(rep.rows[0].sc_consistent < rep.rows[0].tso_consistent);
        // a two-thread update-free program cannot separate TSO from SRA
        assert_eq!(rep.rows[1].tso_consistent, rep.rows[1].sra_consistent);
        // a single-threaded program is equally constrained everywhere
        assert_eq!(rep.rows[2].sc_consistent, rep.rows[2].tso_consistent);
        assert_eq!(rep.rows[2].tso_consistent, rep.rows[2].sra_consistent);
        assert_eq!(
            rep.total_candidates,
            rep.rows.iter().map(|r| r.candidates).sum::<u64>()
        );
    }

    #[test]
    fn generation_counts_single_thread_single_location() {
        let b = SearchBounds {
            max_threads: 1,
            max_events: 2,
            locations: 1,
            max_updates: 0,
            ..SearchBounds::default()
        };
        // one thread, one location, no updates: R, W, RR, RW, WR, WW
        assert_eq!(generate_programs(&b).len(), 6);
    }

    #[test]
    fn generation_dedups_thread_order_and_location_renaming() {
        let b = SearchBounds {
            max_threads: 2,
            max_events: 2,
            locations: 2,
            max_updates: 0,
            ..SearchBounds::default()
        };
        // n=1: R, W (location renaming collapses x/y).
        // n=2 one thread: 2 classes per ordered kind pair (same/different
        // location): 8.
        // n=2 two threads: unordered op pairs up to renaming: RR in
        // {same, diff}, RW in {same, diff}, WW in {same, diff}: 6.
        assert_eq!(generate_programs(&b).len(), 16);
    }

    #[test]
    fn canonicalization_is_invariant_under_thread_and_location_permutation() {
        let prog: Prog = vec![
            vec![(EventKind::Write, 0), (EventKind::Read, 1)],
            vec![(EventKind::Update, 1)],
        ];
        let swapped: Prog = vec![
            vec![(EventKind::Update, 0)],
            vec![(EventKind::Write, 1), (EventKind::Read, 0)],
        ];
        let (k1, _) = canonical_program(&prog, 2);
        let (k2, _) = canonical_program(&swapped, 2);
        assert_eq!(k1, k2);
    }

    fn tiny_bounds() -> SearchBounds {
        SearchBounds {
            max_threads: 2,
            max_events: 3,
            locations: 2,
            max_updates: 1,
            ..SearchBounds::default()
        }
    }

    #[test]
    fn tiny_search_is_clean_and_deterministic() {
        let b = tiny_bounds();
        let r1 = theorem_search(&b).unwrap();
        assert!(r1.complete && !r1.budget_exhausted);
        assert!(
            r1.violations.is_empty(),
            "unexpected violations: {:?}",
            r1.violations.iter().map(|v| &v.claim).collect::<Vec<_>>()
        );
        for key in [
            "guard-tso-portable",
            "guard-sra-portable",
            "tuwri-introduces-race",
            "ww-deordering-unsafe",
            "same-loc-deordering-unsafe",
            "crucial-set-exists",
            "flip-witness-exists",
            "model-weakness-chain",
            "sc-oracle-agreement",
            "template-classification",
        ] {
            let s = r1.claims.get(key).unwrap_or_else(|| panic!("claim {key} missing"));
            assert!(s.checked > 0, "claim {key} never applied");
            assert_eq!(s.violated, 0, "claim {key} violated");
            assert_eq!(s.checked, s.passed, "claim {key} counters disagree");
        }
        let r2 = theorem_search(&b).unwrap();
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap(),
            "search reports must be byte-identical across runs"
        );
    }

    #[test]
    fn signature_safety_matches_direct_enumeration_on_tiny_bounds() {
        let b = SearchBounds { max_threads: 2, max_events: 3, ..tiny_bounds() };
        let wv = b.write_value();
        let mut tally = Tally::default();
        let progs = generate_programs(&b);
        let mut store = HashMap::new();
        for (key, prog) in &progs {
            store.insert(key.clone(), process_base(prog, wv, DEFAULT_CAP, &mut tally).unwrap());
        }
        let mut checked = 0u64;
        for (key, prog) in &progs {
            let lp = labeled(prog);
            let p = lp_pretrace(&lp, wv).unwrap();
            let p_entry = &store[key];
            for spec in enumerate_pairs(&lp, &b) {
                let p2 = lp_pretrace(&spec.lp2, wv).unwrap();
                let mut ctx = PairCtx::build(&p, p_entry, &spec.lp2, &store, &b).unwrap();
                for m in ModelId::ALL {
                    let sig = ctx.safe(m).unwrap();
                    let exact = is_safe_effect(&p, &p2, m, DEFAULT_CAP).unwrap().safe;
                    assert_eq!(
                        sig, exact,
                        "signature safety diverged under {m} for pair {:?} -> {:?}",
                        prog, spec.lp2
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 100, "expected a substantive pair population, got {checked}");
    }

    #[test]
    fn search_marks_partial_coverage_under_a_zero_budget() {
        let b = SearchBounds { pair_budget_ms: 0, ..tiny_bounds() };
        let r = theorem_search(&b).unwrap();
        assert!(r.budget_exhausted);
        assert!(!r.complete);
        assert_eq!(r.pairs, 1, "the sweep stops at the first over-budget pair");
    }

    #[test]
    fn bounds_validation_rejects_bad_alphabets() {
        let mut b = SearchBounds::default();
        b.values = vec![0];
        assert!(b.validate().is_err());
        b.values = vec![1, 2];
        assert!(b.validate().is_err());
        b.values = vec![0, 2];
        assert!(b.validate().is_ok());
        assert_eq!(b.write_value(), 2);
        b.locations = 9;
        assert!(b.validate().is_err());
    }

    #[test]
    fn bounds_round_trip_through_json_with_defaults() {
        let b: SearchBounds = serde_json::from_str("{}").unwrap();
        assert_eq!(b, SearchBounds::default());
        let b: SearchBounds =
            serde_json::from_str(r#"{"max_events": 4, "templates": ["adjacent-swap"]}"#).unwrap();
        assert_eq!(b.max_events, 4);
        assert_eq!(b.templates, vec![Template::AdjacentSwap]);
        assert!(serde_json::from_str::<SearchBounds>(r#"{"unknown": 1}"#).is_err());
    }
}
