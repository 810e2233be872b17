//! Candidate executions: a pre-trace annotated with `rf` and a total `mo`.
//!
//! A candidate execution fixes, on top of a pre-trace, which write each read
//! observes (`rf`) and the total order in which writes propagate to memory
//! (`mo`). Candidates are well-formed but not yet filtered by any memory
//! model; consistency is the business of [`crate::models`].
//!
//! Well-formedness conditions:
//! * every read (including the read half of an update) has exactly one
//!   rf-source, and that source is a write to the same location;
//! * `mo` is a strict total order over all writes (stored as an ordered
//!   list of write labels; the relation view is derived from the list).
//!
//! Enumeration normalizes initialization writes (thread 0) to a fixed
//! `mo`-prefix, ordered by location name. Candidates that place an
//! initialization write `mo`-after a program write are excluded by
//! construction: the machine executed those writes before the program
//! started, and admitting them would let a location's final value revert
//! to its initial one, which no operational model reproduces. The
//! cross-location part of this normalization (where the prefix merely
//! picks one of several orderings of the initialization writes themselves)
//! is behavior- and verdict-preserving, which is property-tested rather
//! than assumed.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{self, ModelId};
use crate::pretrace::{load_pretrace, pretrace_to_doc, EventDoc, PreTrace, PreTraceDoc};
use crate::relations::{DerivedRelations, Rel};

/// Default cap on event count for exhaustive enumeration.
pub const DEFAULT_CAP: usize = 12;

/// A pre-trace plus `rf` and a strict total `mo` over all writes.
#[derive(Debug, Clone)]
pub struct Execution {
    pt: Arc<PreTrace>,
    rf: Rel,
    mo_order: Vec<u32>,
    mo: Rel,
}

impl Execution {
    /// Validates the candidate-execution conditions and builds the
    /// relation view of `mo` from the order list.
    pub fn new(pt: Arc<PreTrace>, rf: Rel, mo_order: Vec<u32>) -> Result<Execution> {
        // rf: write -> read, same location, exactly one source per read.
        let mut sources = vec![0usize; pt.len() as usize];
        for (w, r) in rf.pairs() {
            let we = pt.event(w);
            let re = pt.event(r);
            if !we.is_write() {
                return Err(Error::Precondition(format!(
                    "rf source {} is not a write",
                    we.label
                )));
            }
            if !re.is_read() {
                return Err(Error::Precondition(format!(
                    "rf target {} is not a read",
                    re.label
                )));
            }
            if we.loc != re.loc {
                return Err(Error::Precondition(format!(
                    "rf pair ({}, {}) mixes locations {} and {}",
                    we.label, re.label, we.loc, re.loc
                )));
            }
            sources[r as usize] += 1;
        }
        for i in 0..pt.len() as u32 {
            let e = pt.event(i);
            let n = sources[i as usize];
            if e.is_read() && n != 1 {
                return Err(Error::Precondition(format!(
                    "read {} has {n} rf sources, expected exactly one",
                    e.label
                )));
            }
            if !e.is_read() && n != 0 {
                return Err(Error::Precondition(format!(
                    "non-read {} appears as an rf target",
                    e.label
                )));
            }
        }
        // mo: permutation of exactly the writes.
        let mut seen = vec![false; pt.len() as usize];
        for &w in &mo_order {
            if w as usize >= pt.len() || !pt.event(w).is_write() {
                return Err(Error::Precondition(format!(
                    "mo entry {w} is not a write event"
                )));
            }
            if std::mem::replace(&mut seen[w as usize], true) {
                return Err(Error::Precondition(format!(
                    "mo lists {} twice",
                    pt.event(w).label
                )));
            }
        }
        for i in 0..pt.len() as u32 {
            if pt.event(i).is_write() && !seen[i as usize] {
                return Err(Error::Precondition(format!(
                    "mo omits write {}",
                    pt.event(i).label
                )));
            }
        }
        let mo = mo_rel_from_order(&pt, &mo_order);
        Ok(Execution { pt, rf, mo_order, mo })
    }

    pub fn pretrace(&self) -> &Arc<PreTrace> {
        &self.pt
    }

    pub fn rf(&self) -> &Rel {
        &self.rf
    }

    /// Relation view of `mo` (all ordered pairs).
    pub fn mo(&self) -> &Rel {
        &self.mo
    }

    /// `mo` as the underlying total order (event indices, first = oldest).
    pub fn mo_order(&self) -> &[u32] {
        &self.mo_order
    }

    pub fn mo_order_labels(&self) -> Vec<&str> {
        self.mo_order.iter().map(|&w| self.pt.event(w).label.as_str()).collect()
    }

    /// The write feeding read `r`, if `r` is a read.
    pub fn rf_source(&self, r: u32) -> Option<u32> {
        (0..self.pt.len() as u32).find(|&w| self.rf.contains(w, r))
    }

    /// The value observed by read `r`: its rf-source's written value.
    pub fn read_value(&self, r: u32) -> Option<i64> {
        self.rf_source(r).and_then(|w| self.pt.event(w).wval)
    }

    /// Observed value per read label, resolved through rf.
    pub fn observed_values(&self) -> BTreeMap<String, i64> {
        let mut out = BTreeMap::new();
        for i in 0..self.pt.len() as u32 {
            let e = self.pt.event(i);
            if e.is_read() {
                if let Some(v) = self.read_value(i) {
                    out.insert(e.label.clone(), v);
                }
            }
        }
        out
    }

    /// The standard derived relations (rfi/rfe, hb, rb, mo splits).
    pub fn derived(&self) -> Result<DerivedRelations> {
        crate::relations::derive_parts(
            self.pt.po(),
            &self.rf,
            &self.mo,
            &self.pt.same_tid_rel(),
            &self.pt.same_loc_rel(),
        )
    }
}

/// Builds the strict-total-order relation from an ordered write list.
pub fn mo_rel_from_order(pt: &Arc<PreTrace>, order: &[u32]) -> Rel {
    let mut mo = Rel::empty(pt.universe());
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            mo.insert(a, b);
        }
    }
    mo
}

fn factorial_saturating(n: u64) -> u128 {
    let mut acc: u128 = 1;
    for k in 2..=u128::from(n) {
        acc = acc.saturating_mul(k);
    }
    acc
}

/// Lexicographically `n`-th permutation of `base` (Lehmer decoding).
fn nth_permutation(base: &[u32], mut n: u128) -> Vec<u32> {
    let mut pool = base.to_vec();
    let mut out = Vec::with_capacity(pool.len());
    for i in (0..pool.len()).rev() {
        let f = factorial_saturating(i as u64);
        let idx = (n / f) as usize;
        n %= f;
        out.push(pool.remove(idx));
    }
    out
}

/// Closed-form candidate count: ∏ over reads of |same-location writes|,
/// times (number of non-initialization writes)!. Saturates at `u128::MAX`.
pub fn count_candidates(pt: &PreTrace) -> u128 {
    let mut count: u128 = 1;
    for r in 0..pt.len() as u32 {
        if pt.event(r).is_read() {
            let w = pt.writes_to_loc_mask(&pt.event(r).loc).count_ones();
            count = count.saturating_mul(u128::from(w));
        }
    }
    let non_init =
        (0..pt.len() as u32).filter(|&i| pt.event(i).is_write() && !pt.event(i).is_init()).count();
    count.saturating_mul(factorial_saturating(non_init as u64))
}

/// Deterministic stream over all candidate executions of a pre-trace.
///
/// Initialization writes form a fixed `mo`-prefix sorted by location; the
/// non-initialization writes run through all permutations (fastest-varying
/// axis), and each read cycles through its same-location writes, the last
/// read fastest.
pub struct CandidateIter {
    pt: Arc<PreTrace>,
    reads: Vec<u32>,
    choices: Vec<Vec<u32>>,
    prefix: Vec<u32>,
    perm_base: Vec<u32>,
    rf_idx: Vec<usize>,
    perm_i: u128,
    perm_total: u128,
    done: bool,
}

/// Starts candidate enumeration, refusing pre-traces above `cap` events.
pub fn enumerate_candidates(pt: &Arc<PreTrace>, cap: usize) -> Result<CandidateIter> {
    if pt.len() as usize > cap {
        return Err(Error::CapExceeded { events: pt.len() as usize, cap });
    }
    let mut reads = Vec::new();
    let mut choices = Vec::new();
    for r in 0..pt.len() as u32 {
        if pt.event(r).is_read() {
            reads.push(r);
            let ws: Vec<u32> = (0..pt.len() as u32)
                .filter(|&w| pt.event(w).is_write() && pt.event(w).loc == pt.event(r).loc)
                .collect();
            debug_assert!(!ws.is_empty(), "pre-trace loader guarantees an init write");
            choices.push(ws);
        }
    }
    let mut prefix: Vec<u32> =
        (0..pt.len() as u32).filter(|&i| pt.event(i).is_init() && pt.event(i).is_write()).collect();
    prefix.sort_by(|&a, &b| pt.event(a).loc.cmp(&pt.event(b).loc));
    let perm_base: Vec<u32> =
        (0..pt.len() as u32).filter(|&i| pt.event(i).is_write() && !pt.event(i).is_init()).collect();
    let perm_total = factorial_saturating(perm_base.len() as u64);
    let rf_idx = vec![0usize; reads.len()];
    Ok(CandidateIter {
        pt: pt.clone(),
        reads,
        choices,
        prefix,
        perm_base,
        rf_idx,
        perm_i: 0,
        perm_total,
        done: false,
    })
}

impl Iterator for CandidateIter {
    type Item = Execution;

    fn next(&mut self) -> Option<Execution> {
        if self.done {
            return None;
        }
        let mut rf = Rel::empty(self.pt.universe());
        for (k, &r) in self.reads.iter().enumerate() {
            rf.insert(self.choices[k][self.rf_idx[k]], r);
        }
        let mut mo_order = self.prefix.clone();
        mo_order.extend(nth_permutation(&self.perm_base, self.perm_i));
        let e = Execution::new(self.pt.clone(), rf, mo_order)
            .expect("enumerator builds well-formed candidates");

        self.perm_i += 1;
        if self.perm_i == self.perm_total {
            self.perm_i = 0;
            let mut k = self.reads.len();
            loop {
                if k == 0 {
                    self.done = true;
                    break;
                }
                k -= 1;
                self.rf_idx[k] += 1;
                if self.rf_idx[k] < self.choices[k].len() {
                    break;
                }
                self.rf_idx[k] = 0;
            }
        }
        Some(e)
    }
}

/// Extends `partial_mo` to a strict total order over all writes whose
/// composition with `po` is irreflexive.
///
/// The constraint graph is `partial_mo` united with po restricted to
/// write pairs; it must be acyclic (a cyclic `partial_mo`, or one
/// ordering two writes against po, admits no extension). Ties are broken
/// by lexicographically smallest label, so a total `partial_mo` is
/// returned unchanged. No initialization prefix is imposed here — only
/// the stated constraints; callers wanting enumeration-normal candidates
/// seed init edges into `partial_mo` themselves.
pub fn complete_mo(pt: &Arc<PreTrace>, partial_mo: &Rel) -> Result<Vec<u32>> {
    for (a, b) in partial_mo.pairs() {
        if !pt.event(a).is_write() || !pt.event(b).is_write() {
            return Err(Error::Precondition(format!(
                "partial mo relates non-writes ({}, {})",
                pt.event(a).label,
                pt.event(b).label
            )));
        }
    }
    let writes_mask = pt.writes_mask();
    let constraint = partial_mo.union(&pt.po().restrict(writes_mask))?;
    if constraint.has_cycle() {
        return Err(Error::Precondition(
            "partial mo conflicts program order or is cyclic".into(),
        ));
    }
    // Kahn's algorithm, always emitting the lex-smallest ready label.
    let writes: Vec<u32> = (0..pt.len() as u32).filter(|&i| pt.event(i).is_write()).collect();
    let mut emitted = vec![false; pt.len() as usize];
    let mut order = Vec::with_capacity(writes.len());
    while order.len() < writes.len() {
        let next = writes
            .iter()
            .copied()
            .filter(|&w| {
                !emitted[w as usize]
                    && writes
                        .iter()
                        .all(|&p| emitted[p as usize] || !constraint.contains(p, w))
            })
            .min_by(|&a, &b| pt.event(a).label.cmp(&pt.event(b).label))
            .expect("acyclic constraint graph always has a ready node");
        emitted[next as usize] = true;
        order.push(next);
    }
    Ok(order)
}

/// Observable behavior: rf plus the mo-maximal write per location.
#[derive(Debug, Clone)]
pub struct Behavior {
    pub rf: Rel,
    pub final_writes: BTreeMap<String, String>,
}

impl Behavior {
    fn key(&self) -> (Vec<(String, String)>, &BTreeMap<String, String>) {
        (self.rf.label_pairs(), &self.final_writes)
    }
}

impl PartialEq for Behavior {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Behavior {}

impl PartialOrd for Behavior {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Behavior {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (ra, fa) = self.key();
        let (rb, fb) = other.key();
        ra.cmp(&rb).then_with(|| fa.cmp(fb))
    }
}

/// Reads off rf and the per-location mo-maxima.
pub fn observable_behavior(e: &Execution) -> Behavior {
    let pt = e.pretrace();
    let mut final_writes = BTreeMap::new();
    for &w in e.mo_order() {
        final_writes.insert(pt.event(w).loc.clone(), pt.event(w).label.clone());
    }
    Behavior { rf: e.rf().clone(), final_writes }
}

/// Same observable behavior: rf and the *entire* mo agree when both are
/// restricted to the labels common to the two executions' universes.
///
/// The restricted pair lists are compared as sets (sorted first): the two
/// universes may enumerate shared labels in different orders, so the raw
/// `label_pairs` sequences are not directly comparable.
pub fn behavior_equiv(e1: &Execution, e2: &Execution) -> bool {
    let u1 = e1.pretrace().universe();
    let u2 = e2.pretrace().universe();
    let common = |a: &str, b: &str| {
        u2.index_of(a).is_some() && u2.index_of(b).is_some() && u1.index_of(a).is_some()
            && u1.index_of(b).is_some()
    };
    let restrict = |pairs: Vec<(String, String)>| -> Vec<(String, String)> {
        let mut kept: Vec<(String, String)> =
            pairs.into_iter().filter(|(a, b)| common(a, b)).collect();
        kept.sort();
        kept
    };
    restrict(e1.rf().label_pairs()) == restrict(e2.rf().label_pairs())
        && restrict(e1.mo().label_pairs()) == restrict(e2.mo().label_pairs())
}

/// ⟦P⟧_m: the candidates surviving model `m`'s consistency rules.
pub fn consistent_set(pt: &Arc<PreTrace>, m: ModelId, cap: usize) -> Result<Vec<Execution>> {
    let mut out = Vec::new();
    for e in enumerate_candidates(pt, cap)? {
        if models::check_consistency(&e, m)?.consistent() {
            out.push(e);
        }
    }
    Ok(out)
}

// ===== documents =====

/// On-disk form of an execution: the pre-trace document plus rf pairs and
/// the mo total order as a label list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub events: Vec<EventDoc>,
    pub po: Vec<(String, String)>,
    pub rf: Vec<(String, String)>,
    pub mo: Vec<String>,
}

/// Behavior document: rf pairs plus the final write per location.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorDoc {
    pub rf: Vec<(String, String)>,
    #[serde(rename = "final")]
    pub finals: BTreeMap<String, String>,
}

pub fn behavior_to_doc(b: &Behavior) -> BehaviorDoc {
    BehaviorDoc { rf: b.rf.label_pairs(), finals: b.final_writes.clone() }
}

pub fn execution_to_doc(e: &Execution) -> ExecutionDoc {
    let ptd = pretrace_to_doc(e.pretrace());
    ExecutionDoc {
        note: ptd.note,
        events: ptd.events,
        po: ptd.po,
        rf: e.rf().label_pairs(),
        mo: e.mo_order_labels().into_iter().map(str::to_owned).collect(),
    }
}

pub fn execution_from_doc(doc: &ExecutionDoc) -> Result<Execution> {
    let pt = Arc::new(load_pretrace(&PreTraceDoc {
        note: doc.note.clone(),
        events: doc.events.clone(),
        po: doc.po.clone(),
    })?);
    let mut rf = Rel::empty(pt.universe());
    for (w, r) in &doc.rf {
        rf.insert(pt.require(w)?, pt.require(r)?);
    }
    let mut mo_order = Vec::with_capacity(doc.mo.len());
    for w in &doc.mo {
        mo_order.push(pt.require(w)?);
    }
    Execution::new(pt, rf, mo_order)
}

pub fn execution_from_json(text: &str) -> Result<Execution> {
    execution_from_doc(&serde_json::from_str(text)?)
}

pub fn load_execution(path: &std::path::Path) -> Result<Execution> {
    execution_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{extract_pretraces, parse_program};

    fn pt_of(src: &str) -> Arc<PreTrace> {
        let prog = parse_program(src).unwrap();
        let mut ex = extract_pretraces(&prog).unwrap();
        assert_eq!(ex.len(), 1, "test programs here are conditional-free");
        Arc::new(ex.remove(0).pt)
    }

    #[test]
    fn closed_form_count_matches_enumeration_on_the_triangular_litmus() {
        let pt = pt_of("1: x=1\n2: y=1; a=x\n3: b=x; c=y\n");
        assert_eq!(count_candidates(&pt), 16, "2^3 rf choices x 2! write orders");
        let all: Vec<_> = enumerate_candidates(&pt, DEFAULT_CAP).unwrap().collect();
        assert_eq!(all.len(), 16);
    }

    #[test]
    fn write_only_pretrace_has_exactly_one_candidate() {
        let pt = pt_of("1: x=1\n");
        assert_eq!(count_candidates(&pt), 1);
        let all: Vec<_> = enumerate_candidates(&pt, DEFAULT_CAP).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].mo_order_labels(), vec!["init_x", "T1..0"]);
    }

    #[test]
    fn candidates_are_distinct_and_deterministic() {
        let pt = pt_of("1: x=1; a=y\n2: y=1; b=x\n");
        let run = || -> Vec<(Vec<(String, String)>, Vec<String>)> {
            enumerate_candidates(&pt, DEFAULT_CAP)
                .unwrap()
                .map(|e| {
                    (
                        e.rf().label_pairs(),
                        e.mo_order_labels().into_iter().map(str::to_owned).collect(),
                    )
                })
                .collect()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b, "enumeration order must be reproducible");
        let mut dedup = a.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), a.len(), "no candidate appears twice");
        assert_eq!(a.len() as u128, count_candidates(&pt));
    }

    #[test]
    fn init_writes_form_the_mo_prefix() {
        let pt = pt_of("1: x=1\n2: y=1; a=x\n3: b=x; c=y\n");
        for e in enumerate_candidates(&pt, DEFAULT_CAP).unwrap() {
            let labels = e.mo_order_labels();
            assert_eq!(&labels[..2], &["init_x", "init_y"], "inits first, sorted by location");
        }
    }

    #[test]
    fn update_may_read_from_itself_as_a_candidate() {
        let pt = pt_of("1: rmw(x,a,1)\n");
        // Sources for the update's read half: init_x and the update itself.
        assert_eq!(count_candidates(&pt), 2);
        let all: Vec<_> = enumerate_candidates(&pt, DEFAULT_CAP).unwrap().collect();
        assert!(all
            .iter()
            .any(|e| e.rf().contains_labels("T1..0", "T1..0")));
    }

    #[test]
    fn cap_is_enforced() {
        let pt = pt_of("1: x=1\n2: y=1; a=x\n3: b=x; c=y\n");
        match enumerate_candidates(&pt, 3) {
            Err(Error::CapExceeded { events, cap }) => {
                assert_eq!((events, cap), (7, 3));
            }
            other => panic!("expected cap error, got {:?}", other.map(|_| "iter")),
        }
    }

    #[test]
    fn observed_values_resolve_through_rf() {
        let pt = pt_of("1: x=1\n2: a=x\n");
        let values: Vec<BTreeMap<String, i64>> = enumerate_candidates(&pt, DEFAULT_CAP)
            .unwrap()
            .map(|e| e.observed_values())
            .collect();
        let a_vals: Vec<i64> = values.iter().map(|m| m["T2..0"]).collect();
        let mut sorted = a_vals.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1], "a=x observes 0 from init or 1 from the write");
    }

    #[test]
    fn final_writes_are_mo_maxima() {
        let pt = pt_of("1: x=1\n2: x=2\n");
        let finals: Vec<String> = enumerate_candidates(&pt, DEFAULT_CAP)
            .unwrap()
            .map(|e| observable_behavior(&e).final_writes["x"].clone())
            .collect();
        let mut sorted = finals.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, vec!["T1..0", "T2..0"], "each program write is final in some order");
    }

    #[test]
    fn behavior_equiv_compares_entire_mo_not_just_maxima() {
        let pt = pt_of("1: x=1\n2: x=2\n3: x=3\n");
        let all: Vec<_> = enumerate_candidates(&pt, DEFAULT_CAP).unwrap().collect();
        // Find two candidates agreeing on the final write but differing in
        // the order of the two non-maximal writes.
        let same_final: Vec<&Execution> = all
            .iter()
            .filter(|e| observable_behavior(e).final_writes["x"] == "T3..0")
            .collect();
        assert_eq!(same_final.len(), 2);
        assert!(
            !behavior_equiv(same_final[0], same_final[1]),
            "same maxima but different mo must not be equivalent"
        );
        for e in &all {
            assert!(behavior_equiv(e, e), "equivalence is reflexive");
        }
    }

    #[test]
    fn complete_mo_extends_and_respects_po() {
        let pt = pt_of("1: x=1; y=1\n2: y=2\n");
        let empty = Rel::empty(pt.universe());
        let order = complete_mo(&pt, &empty).unwrap();
        let mo = mo_rel_from_order(&pt, &order);
        assert!(
            !mo.compose(pt.po()).unwrap().has_cycle(),
            "mo;po must be irreflexive: {:?}",
            order
        );
        assert!(mo.contains_labels("T1..0", "T1..1"), "po-ordered writes keep order");

        // A total partial_mo comes back unchanged.
        let total = mo_rel_from_order(&pt, &order);
        assert_eq!(complete_mo(&pt, &total).unwrap(), order);

        // Conflicting with po is a precondition error.
        let mut conflict = Rel::empty(pt.universe());
        conflict.insert(pt.index_of("T1..1").unwrap(), pt.index_of("T1..0").unwrap());
        assert!(matches!(complete_mo(&pt, &conflict), Err(Error::Precondition(_))));
    }

    #[test]
    fn execution_documents_round_trip() {
        let pt = pt_of("1: x=1\n2: a=x\n");
        let e = enumerate_candidates(&pt, DEFAULT_CAP).unwrap().next().unwrap();
        let doc = execution_to_doc(&e);
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let back = execution_from_json(&text).unwrap();
        assert_eq!(back.rf().label_pairs(), e.rf().label_pairs());
        assert_eq!(back.mo_order_labels(), e.mo_order_labels());
        assert_eq!(
            serde_json::to_string_pretty(&execution_to_doc(&back)).unwrap(),
            text,
            "document serialization is stable"
        );
    }

    #[test]
    fn malformed_candidates_are_rejected() {
        let pt = pt_of("1: x=1\n2: a=x\n");
        let w = pt.index_of("T1..0").unwrap();
        let r = pt.index_of("T2..0").unwrap();
        let init = pt.index_of("init_x").unwrap();

        // Read with no source.
        let rf = Rel::empty(pt.universe());
        assert!(Execution::new(pt.clone(), rf, vec![init, w]).is_err());

        // Read with two sources.
        let mut rf = Rel::empty(pt.universe());
        rf.insert(w, r);
        rf.insert(init, r);
        assert!(Execution::new(pt.clone(), rf, vec![init, w]).is_err());

        // mo omitting a write.
        let mut rf = Rel::empty(pt.universe());
        rf.insert(w, r);
        assert!(Execution::new(pt.clone(), rf, vec![w]).is_err());
    }

    #[test]
    fn behavior_equiv_is_insensitive_to_universe_label_order() {
        use crate::pretrace::{Event, EventKind};
        // The same two writes to x, listed in opposite orders, so the two
        // universes index the shared labels differently.
        let ev = |label: &str| Event {
            label: label.into(),
            tid: 1,
            kind: EventKind::Write,
            loc: "x".into(),
            wval: Some(1),
        };
        let p1 = Arc::new(
            PreTrace::new(vec![ev("w1"), ev("w2")], &[("w1".into(), "w2".into())]).unwrap(),
        );
        let p2 = Arc::new(
            PreTrace::new(vec![ev("w2"), ev("w1")], &[("w1".into(), "w2".into())]).unwrap(),
        );
        let mo1 = vec![p1.require("init_x").unwrap(), p1.require("w1").unwrap(), p1.require("w2").unwrap()];
        let mo2 = vec![p2.require("init_x").unwrap(), p2.require("w1").unwrap(), p2.require("w2").unwrap()];
        let e1 = Execution::new(p1.clone(), Rel::empty(p1.universe()), mo1).unwrap();
        let e2 = Execution::new(p2.clone(), Rel::empty(p2.universe()), mo2).unwrap();
        assert!(
            behavior_equiv(&e1, &e2),
            "identical rf/mo must compare equal regardless of universe order"
        );
    }
}
