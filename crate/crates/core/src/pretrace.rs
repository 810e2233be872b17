//! Events and pre-traces.
//!
//! A pre-trace is the branch-free skeleton a consistency model judges: a set
//! of memory events plus a strict partial program order (po). Events are
//! reads, writes or updates (atomic read-modify-writes, which count as both)
//! over named shared locations. Every referenced location carries exactly
//! one implicit initialization write (thread id 0, value 0) that is
//! po-unordered with all program events.
//!
//! Pre-traces arrive either from the litmus frontend ([`crate::lang`]) or
//! from a JSON document (see [`PreTraceDoc`]); the loader normalizes both:
//! missing initialization writes are added and po is transitively closed.
//! Hand-written documents may contain cross-thread po edges (the litmus
//! frontend never produces them), which is how inlined prologue writes are
//! encoded.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relations::{Rel, Universe};

/// Thread id reserved for initialization writes.
pub const INIT_TID: u32 = 0;

// ===== events =====

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Read,
    Write,
    Update,
}

impl EventKind {
    pub fn code(self) -> &'static str {
        match self {
            EventKind::Read => "R",
            EventKind::Write => "W",
            EventKind::Update => "U",
        }
    }

    pub fn from_code(s: &str) -> Result<EventKind> {
        match s {
            "R" => Ok(EventKind::Read),
            "W" => Ok(EventKind::Write),
            "U" => Ok(EventKind::Update),
            other => Err(Error::Schema(format!("unknown event kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub label: String,
    pub tid: u32,
    pub kind: EventKind,
    pub loc: String,
    /// Written value; present iff the event writes.
    pub wval: Option<i64>,
}

impl Event {
    /// Reads observe a value: reads and updates.
    pub fn is_read(&self) -> bool {
        matches!(self.kind, EventKind::Read | EventKind::Update)
    }

    /// Writes produce a value: writes and updates.
    pub fn is_write(&self) -> bool {
        matches!(self.kind, EventKind::Write | EventKind::Update)
    }

    pub fn is_init(&self) -> bool {
        self.tid == INIT_TID
    }
}

// ===== pre-trace =====

/// A set of events plus a strict, transitively closed program order.
#[derive(Debug, Clone)]
pub struct PreTrace {
    events: Vec<Event>,
    uni: Arc<Universe>,
    po: Rel,
}

impl PreTrace {
    /// Build a pre-trace from events and po edges (labels). Normalizes:
    /// adds one initialization write per referenced location if absent and
    /// closes po transitively. Rejects duplicate labels, dangling po labels,
    /// po cycles, po edges touching initialization events, and malformed
    /// events (wrong value arity, non-init events on thread id 0).
    pub fn new(mut events: Vec<Event>, po_edges: &[(String, String)]) -> Result<PreTrace> {
        for e in &events {
            match e.kind {
                EventKind::Read => {
                    if e.wval.is_some() {
                        return Err(Error::Schema(format!("read {:?} carries a value", e.label)));
                    }
                }
                EventKind::Write | EventKind::Update => {
                    if e.wval.is_none() {
                        return Err(Error::Schema(format!("write {:?} lacks a value", e.label)));
                    }
                }
            }
            if e.tid == INIT_TID
                && !(e.kind == EventKind::Write && e.wval == Some(0))
            {
                return Err(Error::Schema(format!(
                    "thread id 0 is reserved for initialization writes of value 0, got {:?}",
                    e.label
                )));
            }
        }

        // One initialization write per referenced location.
        let locs: BTreeSet<String> = events.iter().map(|e| e.loc.clone()).collect();
        let mut init_by_loc: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            if e.is_init() {
                if init_by_loc.insert(e.loc.as_str(), i).is_some() {
                    return Err(Error::Schema(format!(
                        "location {:?} has more than one initialization write",
                        e.loc
                    )));
                }
            }
        }
        let missing: Vec<String> =
            locs.iter().filter(|l| !init_by_loc.contains_key(l.as_str())).cloned().collect();
        for loc in missing {
            events.push(Event {
                label: format!("init_{loc}"),
                tid: INIT_TID,
                kind: EventKind::Write,
                loc,
                wval: Some(0),
            });
        }

        let uni = Universe::new(events.iter().map(|e| e.label.clone()).collect())?;

        let mut po = Rel::empty(&uni);
        for (a, b) in po_edges {
            let ia = uni.require(a)?;
            let ib = uni.require(b)?;
            if events[ia as usize].is_init() || events[ib as usize].is_init() {
                return Err(Error::Schema(format!(
                    "po edge ({a}, {b}) touches an initialization event; these are po-unordered"
                )));
            }
            po.insert(ia, ib);
        }
        let po = po.tclosure();
        if let Some(cycle) = po.find_cycle() {
            return Err(Error::PoCycle(cycle[0].clone()));
        }

        Ok(PreTrace { events, uni, po })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.uni
    }

    pub fn po(&self) -> &Rel {
        &self.po
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, i: u32) -> &Event {
        &self.events[i as usize]
    }

    pub fn index_of(&self, label: &str) -> Option<u32> {
        self.uni.index_of(label)
    }

    pub fn require(&self, label: &str) -> Result<u32> {
        self.uni.require(label)
    }

    /// Referenced locations, sorted.
    pub fn locations(&self) -> BTreeSet<String> {
        self.events.iter().map(|e| e.loc.clone()).collect()
    }

    /// Program thread ids (initialization tid excluded), sorted.
    pub fn tids(&self) -> BTreeSet<u32> {
        self.events.iter().filter(|e| !e.is_init()).map(|e| e.tid).collect()
    }

    // ----- index masks (bit i set iff event i qualifies) -----

    fn mask_of(&self, pred: impl Fn(&Event) -> bool) -> u64 {
        let mut m = 0u64;
        for (i, e) in self.events.iter().enumerate() {
            if pred(e) {
                m |= 1u64 << i;
            }
        }
        m
    }

    pub fn reads_mask(&self) -> u64 {
        self.mask_of(|e| e.is_read())
    }

    pub fn writes_mask(&self) -> u64 {
        self.mask_of(|e| e.is_write())
    }

    pub fn updates_mask(&self) -> u64 {
        self.mask_of(|e| e.kind == EventKind::Update)
    }

    pub fn init_mask(&self) -> u64 {
        self.mask_of(|e| e.is_init())
    }

    pub fn writes_to_loc_mask(&self, loc: &str) -> u64 {
        self.mask_of(|e| e.is_write() && e.loc == loc)
    }

    pub fn reads_of_loc_mask(&self, loc: &str) -> u64 {
        self.mask_of(|e| e.is_read() && e.loc == loc)
    }

    /// Same-thread relation (reflexive, symmetric) used to split rf into
    /// internal/external.
    pub fn same_tid_rel(&self) -> Rel {
        let pairs = (0..self.len() as u32).flat_map(|i| {
            (0..self.len() as u32)
                .filter(move |&j| self.events[i as usize].tid == self.events[j as usize].tid)
                .map(move |j| (i, j))
        });
        Rel::from_index_pairs(&self.uni, pairs)
    }

    /// Same-location relation (reflexive, symmetric).
    pub fn same_loc_rel(&self) -> Rel {
        let pairs = (0..self.len() as u32).flat_map(|i| {
            (0..self.len() as u32)
                .filter(move |&j| self.events[i as usize].loc == self.events[j as usize].loc)
                .map(move |j| (i, j))
        });
        Rel::from_index_pairs(&self.uni, pairs)
    }
}

// ===== event set queries =====

/// The four event sets of a pre-trace, optionally restricted to one
/// location: all events, writes, reads, updates (updates appear in all of
/// the last three).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventSets {
    pub st: BTreeSet<String>,
    pub w: BTreeSet<String>,
    pub r: BTreeSet<String>,
    pub u: BTreeSet<String>,
}

pub fn event_sets(pt: &PreTrace, loc: Option<&str>) -> Result<EventSets> {
    if let Some(l) = loc {
        if !pt.locations().contains(l) {
            return Err(Error::UnknownLocation(l.to_string()));
        }
    }
    let mut sets = EventSets {
        st: BTreeSet::new(),
        w: BTreeSet::new(),
        r: BTreeSet::new(),
        u: BTreeSet::new(),
    };
    for e in pt.events() {
        if loc.is_some_and(|l| l != e.loc) {
            continue;
        }
        sets.st.insert(e.label.clone());
        if e.is_write() {
            sets.w.insert(e.label.clone());
        }
        if e.is_read() {
            sets.r.insert(e.label.clone());
        }
        if e.kind == EventKind::Update {
            sets.u.insert(e.label.clone());
        }
    }
    Ok(sets)
}

// ===== validation report =====

/// A machine-checkable validation finding; an empty report means the
/// pre-trace satisfies every structural invariant the loaders tolerate
/// deviations from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub code: String,
    pub detail: String,
}

/// Report structural oddities the constructor tolerates: per-thread po that
/// is not total, cross-thread po edges (legal, but only the prologue shape
/// is supported by the operational TSO oracle), and initialization writes
/// for locations no program event references.
pub fn validate(pt: &PreTrace) -> Vec<Finding> {
    let mut findings = Vec::new();
    let n = pt.len() as u32;
    for tid in pt.tids() {
        let idx: Vec<u32> = (0..n)
            .filter(|&i| pt.event(i).tid == tid && !pt.event(i).is_init())
            .collect();
        for (k, &a) in idx.iter().enumerate() {
            for &b in &idx[k + 1..] {
                if !pt.po().contains(a, b) && !pt.po().contains(b, a) {
                    findings.push(Finding {
                        code: "po.thread_partial".into(),
                        detail: format!(
                            "thread {tid}: events {:?} and {:?} are po-unordered",
                            pt.event(a).label,
                            pt.event(b).label
                        ),
                    });
                }
            }
        }
    }
    for (a, b) in pt.po().pairs() {
        if pt.event(a).tid != pt.event(b).tid {
            findings.push(Finding {
                code: "po.cross_thread".into(),
                detail: format!(
                    "po edge ({}, {}) crosses threads {} and {}",
                    pt.event(a).label,
                    pt.event(b).label,
                    pt.event(a).tid,
                    pt.event(b).tid
                ),
            });
        }
    }
    let referenced: BTreeSet<&str> =
        pt.events().iter().filter(|e| !e.is_init()).map(|e| e.loc.as_str()).collect();
    for e in pt.events() {
        if e.is_init() && !referenced.contains(e.loc.as_str()) {
            findings.push(Finding {
                code: "init.unreferenced".into(),
                detail: format!("initialization write {:?} for unreferenced location", e.label),
            });
        }
    }
    findings
}

// ===== JSON wire format =====

/// One event in the JSON document format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDoc {
    pub label: String,
    pub tid: i64,
    pub kind: String,
    pub loc: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val: Option<i64>,
}

/// The pre-trace document: events plus po edges. The loader adds
/// initialization events if absent and closes po transitively, so documents
/// may list a sparse po. An optional free-form note is tolerated.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreTraceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub events: Vec<EventDoc>,
    pub po: Vec<(String, String)>,
}

pub fn load_pretrace(doc: &PreTraceDoc) -> Result<PreTrace> {
    let mut events = Vec::with_capacity(doc.events.len());
    for e in &doc.events {
        if e.tid < 0 {
            return Err(Error::Schema(format!("event {:?} has negative tid", e.label)));
        }
        events.push(Event {
            label: e.label.clone(),
            tid: e.tid as u32,
            kind: EventKind::from_code(&e.kind)?,
            loc: e.loc.clone(),
            wval: e.val,
        });
    }
    PreTrace::new(events, &doc.po)
}

pub fn pretrace_from_json(s: &str) -> Result<PreTrace> {
    let doc: PreTraceDoc = serde_json::from_str(s)?;
    load_pretrace(&doc)
}

/// Emit the document form: events in pre-trace order, po as the full
/// transitive closure sorted lexicographically (deterministic).
pub fn pretrace_to_doc(pt: &PreTrace) -> PreTraceDoc {
    let events = pt
        .events()
        .iter()
        .map(|e| EventDoc {
            label: e.label.clone(),
            tid: e.tid as i64,
            kind: e.kind.code().to_string(),
            loc: e.loc.clone(),
            val: e.wval,
        })
        .collect();
    let mut po: Vec<(String, String)> = pt
        .po()
        .pairs()
        .map(|(a, b)| (pt.event(a).label.clone(), pt.event(b).label.clone()))
        .collect();
    po.sort();
    PreTraceDoc { note: None, events, po }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(label: &str, tid: u32, kind: EventKind, loc: &str, wval: Option<i64>) -> Event {
        Event { label: label.into(), tid, kind, loc: loc.into(), wval }
    }

    #[test]
    fn loader_adds_one_init_per_referenced_location() {
        let pt = PreTrace::new(
            vec![
                ev("w1", 1, EventKind::Write, "x", Some(1)),
                ev("r1", 2, EventKind::Read, "y", None),
            ],
            &[],
        )
        .unwrap();
        let labels: Vec<&str> = pt.events().iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, vec!["w1", "r1", "init_x", "init_y"]);
        let init_x = pt.event(pt.index_of("init_x").unwrap());
        assert_eq!((init_x.tid, init_x.kind, init_x.wval), (0, EventKind::Write, Some(0)));
    }

    #[test]
    fn po_is_closed_transitively() {
        let pt = PreTrace::new(
            vec![
                ev("a", 1, EventKind::Write, "x", Some(1)),
                ev("b", 1, EventKind::Write, "x", Some(2)),
                ev("c", 1, EventKind::Read, "x", None),
            ],
            &[("a".into(), "b".into()), ("b".into(), "c".into())],
        )
        .unwrap();
        assert!(pt.po().contains_labels("a", "c"), "closure edge must be present");
    }

    #[test]
    fn po_cycle_is_a_load_error() {
        let err = PreTrace::new(
            vec![
                ev("a", 1, EventKind::Write, "x", Some(1)),
                ev("b", 1, EventKind::Write, "x", Some(2)),
            ],
            &[("a".into(), "b".into()), ("b".into(), "a".into())],
        )
        .unwrap_err();
        assert!(matches!(err, Error::PoCycle(_)), "got {err}");
    }

    #[test]
    fn init_events_must_stay_po_unordered() {
        let err = PreTrace::new(
            vec![
                ev("init_x", 0, EventKind::Write, "x", Some(0)),
                ev("r", 1, EventKind::Read, "x", None),
            ],
            &[("init_x".into(), "r".into())],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "got {err}");
    }

    #[test]
    fn value_arity_is_enforced() {
        assert!(PreTrace::new(vec![ev("r", 1, EventKind::Read, "x", Some(3))], &[]).is_err());
        assert!(PreTrace::new(vec![ev("w", 1, EventKind::Write, "x", None)], &[]).is_err());
        assert!(PreTrace::new(vec![ev("u", 1, EventKind::Update, "x", Some(1))], &[]).is_ok());
    }

    #[test]
    fn tid_zero_is_reserved() {
        let err =
            PreTrace::new(vec![ev("r", 0, EventKind::Read, "x", None)], &[]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn event_sets_split_updates_into_reads_and_writes() {
        let pt = PreTrace::new(
            vec![
                ev("w", 1, EventKind::Write, "x", Some(1)),
                ev("u", 2, EventKind::Update, "x", Some(2)),
                ev("r", 2, EventKind::Read, "y", None),
            ],
            &[],
        )
        .unwrap();
        let sets = event_sets(&pt, Some("x")).unwrap();
        assert!(sets.w.contains("u") && sets.r.contains("u") && sets.u.contains("u"));
        assert!(!sets.st.contains("r"), "location filter applies");
        assert!(sets.st.contains("init_x") && !sets.st.contains("init_y"));
        assert!(matches!(event_sets(&pt, Some("z")), Err(Error::UnknownLocation(_))));
    }

    #[test]
    fn validate_flags_partial_thread_order_and_cross_thread_edges() {
        let pt = PreTrace::new(
            vec![
                ev("a", 1, EventKind::Write, "x", Some(1)),
                ev("b", 1, EventKind::Write, "x", Some(2)),
                ev("c", 2, EventKind::Read, "x", None),
            ],
            &[("a".into(), "c".into())],
        )
        .unwrap();
        let findings = validate(&pt);
        let codes: BTreeSet<&str> = findings.iter().map(|f| f.code.as_str()).collect();
        assert!(codes.contains("po.thread_partial"), "a and b are unordered");
        assert!(codes.contains("po.cross_thread"), "(a, c) crosses threads");
    }

    #[test]
    fn document_round_trip_is_stable() {
        let json = r#"{
            "events": [
                {"label": "w", "tid": 1, "kind": "W", "loc": "x", "val": 1},
                {"label": "r", "tid": 2, "kind": "R", "loc": "x"}
            ],
            "po": []
        }"#;
        let pt = pretrace_from_json(json).unwrap();
        let doc = pretrace_to_doc(&pt);
        let pt2 = load_pretrace(&doc).unwrap();
        assert_eq!(pt.events(), pt2.events());
        assert_eq!(
            serde_json::to_string(&doc).unwrap(),
            serde_json::to_string(&pretrace_to_doc(&pt2)).unwrap()
        );
    }
}
