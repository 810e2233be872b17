//! Finite binary relations over a fixed universe of event labels.
//!
//! Every consistency rule, cycle-catalogue entry and race condition in this
//! crate is a composition of a handful of primitive relations (program
//! order, reads-from, memory order and their derivatives), so the algebra is
//! deliberately small: a [`Rel`] is a bit matrix over a shared [`Universe`],
//! and all operations are pure and return fresh relations over the same
//! universe. Universes are capped at 64 labels, which keeps every row a
//! single machine word; pre-traces in this crate are far below that.
//!
//! "R1;R2 forms a cycle" is normalized throughout to: the composed relation
//! has a reflexive point in its transitive closure ([`Rel::has_cycle`]).
//! For well-formed executions (total memory order) this coincides with the
//! per-rule irreflexivity reading, and it makes every rule one primitive
//! check.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Hard cap on universe size so a relation row fits in a `u64`.
pub const MAX_UNIVERSE: usize = 64;

// ===== Universe =====

/// An ordered set of event labels; the index of a label is its node id in
/// every relation over this universe.
#[derive(Debug, PartialEq, Eq)]
pub struct Universe {
    labels: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Universe {
    pub fn new(labels: Vec<String>) -> Result<Arc<Universe>> {
        if labels.len() > MAX_UNIVERSE {
            return Err(Error::Schema(format!(
                "universe has {} labels, engine maximum is {MAX_UNIVERSE}",
                labels.len()
            )));
        }
        let mut index = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i as u32).is_some() {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(Arc::new(Universe { labels, index }))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: u32) -> &str {
        &self.labels[i as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<u32> {
        self.index_of(label)
            .ok_or_else(|| Error::DanglingLabel(label.to_string()))
    }
}

// ===== Rel =====

/// A binary relation over a [`Universe`], stored as one bit row per source.
#[derive(Clone, PartialEq, Eq)]
pub struct Rel {
    uni: Arc<Universe>,
    rows: Vec<u64>,
}

impl std::fmt::Debug for Rel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pairs: Vec<String> = self
            .pairs()
            .map(|(a, b)| format!("({},{})", self.uni.label(a), self.uni.label(b)))
            .collect();
        write!(f, "Rel{{{}}}", pairs.join(", "))
    }
}

impl Rel {
    pub fn empty(uni: &Arc<Universe>) -> Rel {
        Rel { uni: uni.clone(), rows: vec![0; uni.len()] }
    }

    pub fn from_index_pairs(uni: &Arc<Universe>, pairs: impl IntoIterator<Item = (u32, u32)>) -> Rel {
        let mut r = Rel::empty(uni);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// Build from label pairs; unknown labels are an error.
    pub fn from_label_pairs<'a>(
        uni: &Arc<Universe>,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Rel> {
        let mut r = Rel::empty(uni);
        for (a, b) in pairs {
            r.insert(uni.require(a)?, uni.require(b)?);
        }
        Ok(r)
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.uni
    }

    /// Successor bitmask of one event (bit `j` set ⟺ `(i, j)` present).
    pub(crate) fn row(&self, i: u32) -> u64 {
        self.rows[i as usize]
    }

    pub fn insert(&mut self, a: u32, b: u32) {
        self.rows[a as usize] |= 1u64 << b;
    }

    pub fn remove(&mut self, a: u32, b: u32) {
        self.rows[a as usize] &= !(1u64 << b);
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        self.rows[a as usize] & (1u64 << b) != 0
    }

    pub fn contains_labels(&self, a: &str, b: &str) -> bool {
        match (self.uni.index_of(a), self.uni.index_of(b)) {
            (Some(a), Some(b)) => self.contains(a, b),
            _ => false,
        }
    }

    pub fn is_empty_rel(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// Deterministic pair iteration: by source index, then target index.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, &row)| {
            let mut row = row;
            std::iter::from_fn(move || {
                if row == 0 {
                    return None;
                }
                let j = row.trailing_zeros();
                row &= row - 1;
                Some((i as u32, j))
            })
        })
    }

    pub fn label_pairs(&self) -> Vec<(String, String)> {
        self.pairs()
            .map(|(a, b)| (self.uni.label(a).to_string(), self.uni.label(b).to_string()))
            .collect()
    }

    fn check_same(&self, other: &Rel, op: &str) -> Result<()> {
        if Arc::ptr_eq(&self.uni, &other.uni) || self.uni == other.uni {
            Ok(())
        } else {
            Err(Error::UniverseMismatch(format!("{op} over different universes")))
        }
    }

    // ===== algebra =====

    pub fn union(&self, other: &Rel) -> Result<Rel> {
        self.check_same(other, "union")?;
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect();
        Ok(Rel { uni: self.uni.clone(), rows })
    }

    pub fn intersect(&self, other: &Rel) -> Result<Rel> {
        self.check_same(other, "intersect")?;
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a & b).collect();
        Ok(Rel { uni: self.uni.clone(), rows })
    }

    pub fn minus(&self, other: &Rel) -> Result<Rel> {
        self.check_same(other, "minus")?;
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a & !b).collect();
        Ok(Rel { uni: self.uni.clone(), rows })
    }

    pub fn inverse(&self) -> Rel {
        let n = self.uni.len();
        let mut rows = vec![0u64; n];
        for (a, b) in self.pairs() {
            rows[b as usize] |= 1u64 << a;
        }
        Rel { uni: self.uni.clone(), rows }
    }

    /// Sequential composition `self ; other`.
    pub fn compose(&self, other: &Rel) -> Result<Rel> {
        self.check_same(other, "compose")?;
        let n = self.uni.len();
        let mut rows = vec![0u64; n];
        for i in 0..n {
            let mut mid = self.rows[i];
            while mid != 0 {
                let j = mid.trailing_zeros() as usize;
                mid &= mid - 1;
                rows[i] |= other.rows[j];
            }
        }
        Ok(Rel { uni: self.uni.clone(), rows })
    }

    /// Transitive closure (Warshall, one word per row).
    pub fn tclosure(&self) -> Rel {
        let n = self.uni.len();
        let mut rows = self.rows.clone();
        for k in 0..n {
            let row_k = rows[k];
            let bit = 1u64 << k;
            for row in rows.iter_mut() {
                if *row & bit != 0 {
                    *row |= row_k;
                }
            }
        }
        Rel { uni: self.uni.clone(), rows }
    }

    /// Reflexive closure `R ∪ id` (id over the full universe).
    pub fn reflexive(&self) -> Rel {
        let mut rows = self.rows.clone();
        for (i, row) in rows.iter_mut().enumerate() {
            *row |= 1u64 << i;
        }
        Rel { uni: self.uni.clone(), rows }
    }

    /// Identity relation on the labels whose indices are set in `mask`.
    pub fn identity_on(uni: &Arc<Universe>, mask: u64) -> Rel {
        let mut r = Rel::empty(uni);
        for i in 0..uni.len() {
            if mask & (1u64 << i) != 0 {
                r.insert(i as u32, i as u32);
            }
        }
        r
    }

    /// Restriction to pairs with both endpoints inside `mask`.
    pub fn restrict(&self, mask: u64) -> Rel {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, &row)| if mask & (1u64 << i) != 0 { row & mask } else { 0 })
            .collect();
        Rel { uni: self.uni.clone(), rows }
    }

    /// Drop any reflexive pairs.
    pub fn without_identity(&self) -> Rel {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, &row)| row & !(1u64 << i))
            .collect();
        Rel { uni: self.uni.clone(), rows }
    }

    // ===== cycles =====

    pub fn is_irreflexive(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, &row)| row & (1u64 << i) == 0)
    }

    /// True iff the transitive closure has a reflexive point.
    pub fn has_cycle(&self) -> bool {
        !self.tclosure().is_irreflexive()
    }

    /// Shortest cycle as a label path `[e0, e1, ..., e0]`, if any.
    /// Deterministic: starts are tried in index order, BFS visits targets in
    /// index order, and the first (hence shortest for that start) hit wins.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        let uni = self.universe();
        let n = uni.len();
        let tc = self.tclosure();
        let start = (0..n as u32).find(|&x| tc.contains(x, x))?;
        let mut prev: Vec<Option<u32>> = vec![None; n];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        while let Some(e) = queue.pop_front() {
            let mut row = self.rows[e as usize];
            while row != 0 {
                let t = row.trailing_zeros();
                row &= row - 1;
                if t == start {
                    let mut back = Vec::new();
                    let mut cur = e;
                    loop {
                        back.push(cur);
                        if cur == start {
                            break;
                        }
                        cur = prev[cur as usize].expect("BFS predecessor");
                    }
                    back.reverse();
                    back.push(start);
                    return Some(back.into_iter().map(|i| uni.label(i).to_string()).collect());
                }
                if prev[t as usize].is_none() && t != start {
                    prev[t as usize] = Some(e);
                    queue.push_back(t);
                }
            }
        }
        unreachable!("a reflexive point of the closure implies a closed path")
    }
}

/// Search for a cycle of the *composed* relation `stages[0];...;stages[k-1]`
/// and report it hop by hop: a closed path `[e0];stages[0];[e1];...;
/// stages[k-1];[e0]` passing through the stage sequence exactly once —
/// equivalently, a reflexive point of the composition. Returns labels
/// `[e0, e1, ..., e0]`, or `None` if the composition is irreflexive.
///
/// A path that only closes after winding through the stages several times
/// is *not* a cycle of the composition: consistency rules like "rb;hb
/// irreflexive" tolerate such windings (e.g. rb;hb may relate two events
/// in both directions), and treating them as violations misclassifies
/// executions that the models accept.
pub fn find_composed_cycle(stages: &[&Rel]) -> Option<Vec<String>> {
    let k = stages.len();
    assert!(k > 0, "find_composed_cycle needs at least one stage");
    let uni = stages[0].universe();
    let n = uni.len();
    // suffix[i] = stages[i];...;stages[k-1], so suffix[0] is the whole
    // composition and membership of (y, start) in suffix[i+1] certifies
    // that a partial path can still close.
    let mut suffix: Vec<Rel> = Vec::with_capacity(k);
    let mut acc = stages[k - 1].clone();
    suffix.push(acc.clone());
    for i in (0..k - 1).rev() {
        acc = stages[i].compose(&acc).expect("stages share a universe");
        suffix.push(acc.clone());
    }
    suffix.reverse();
    let start = (0..n as u32).find(|&x| suffix[0].contains(x, x))?;
    let mut path = vec![uni.label(start).to_string()];
    let mut cur = start;
    for i in 0..k {
        let next = (0..n as u32)
            .find(|&y| {
                stages[i].contains(cur, y)
                    && if i + 1 == k {
                        y == start
                    } else {
                        suffix[i + 1].contains(y, start)
                    }
            })
            .expect("a reflexive point of the composition admits a stage path");
        path.push(uni.label(next).to_string());
        cur = next;
    }
    Some(path)
}

/// `true` iff the composed relation `stages[0];...;stages[k-1]` has a
/// reflexive point (a single-pass cycle; see [`find_composed_cycle`]).
pub fn composed_has_cycle(stages: &[&Rel]) -> bool {
    let mut acc = stages[0].clone();
    for s in &stages[1..] {
        acc = acc.compose(s).expect("stages share a universe");
    }
    !acc.is_irreflexive()
}

// ===== derived relations =====

/// The seven relations derived from an execution's po, rf and mo.
#[derive(Debug, Clone)]
pub struct DerivedRelations {
    /// rf pairs within one thread.
    pub rfi: Rel,
    /// rf pairs across threads.
    pub rfe: Rel,
    /// Happens-before: transitive closure of po ∪ rf.
    pub hb: Rel,
    /// Reads-before: rf⁻¹ ; mo_loc.
    pub rb: Rel,
    /// mo restricted to same-location pairs.
    pub mo_loc: Rel,
    /// mo restricted to different-location pairs.
    pub mo_nonloc: Rel,
    /// mo pairs not ordered by hb.
    pub mo_ext: Rel,
}

/// Derive everything from the primitive relations. `same_tid` / `same_loc`
/// are the (reflexive, symmetric) "same thread" / "same location" relations
/// of the underlying pre-trace.
pub fn derive_parts(
    po: &Rel,
    rf: &Rel,
    mo: &Rel,
    same_tid: &Rel,
    same_loc: &Rel,
) -> Result<DerivedRelations> {
    let rfi = rf.intersect(same_tid)?;
    let rfe = rf.minus(same_tid)?;
    let hb = po.union(rf)?.tclosure();
    let mo_loc = mo.intersect(same_loc)?;
    let mo_nonloc = mo.minus(same_loc)?;
    let rb = rf.inverse().compose(&mo_loc)?;
    let mo_ext = mo.minus(&mo.intersect(&hb)?)?;
    Ok(DerivedRelations { rfi, rfe, hb, rb, mo_loc, mo_nonloc, mo_ext })
}
