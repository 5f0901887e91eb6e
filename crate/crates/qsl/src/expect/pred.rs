//! Recursive heap predicates as least fixed points, solved per query over subheaps.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::num::ExtQ;
use crate::state::{heap_partitions, Heap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredKind {
    Ls,
    Len,
    Tree,
    /// Longest path through records of the given size.
    Path(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Call {
    kind: PredKind,
    a: i64,
    b: i64,
    heap: Heap,
}

impl Call {
    fn new(kind: PredKind, a: i64, b: i64, heap: Heap) -> Call {
        Call { kind, a, b, heap }
    }

    /// The entries this call's unfolding reads.
    fn deps(&self) -> Vec<Call> {
        let h = &self.heap;
        match self.kind {
            PredKind::Ls | PredKind::Len => {
                if self.a == self.b {
                    return vec![];
                }
                let Some(next) = h.get(self.a) else { return vec![] };
                let rest = h.without(self.a);
                let mut out = vec![Call::new(PredKind::Ls, next, self.b, rest.clone())];
                if self.kind == PredKind::Len {
                    out.push(Call::new(PredKind::Len, next, self.b, rest));
                }
                out
            }
            PredKind::Tree => match tree_children(self.a, h) {
                None => vec![],
                Some((left, right, rest)) => heap_partitions(&rest)
                    .into_iter()
                    .flat_map(|(h1, h2)| [Call::new(PredKind::Tree, left, 0, h1), Call::new(PredKind::Tree, right, 0, h2)])
                    .collect(),
            },
            PredKind::Path(k) => path_steps(k, self.a, h)
                .into_iter()
                .map(|(target, rest)| Call::new(self.kind, target, 0, rest))
                .collect(),
        }
    }

    /// One application of the defining functional, reading other entries through `get`.
    fn unfold(&self, get: &dyn Fn(&Call) -> u64) -> u64 {
        let h = &self.heap;
        match self.kind {
            PredKind::Ls => {
                if self.a == self.b {
                    return h.is_empty() as u64;
                }
                match h.get(self.a) {
                    Some(next) => get(&Call::new(PredKind::Ls, next, self.b, h.without(self.a))),
                    None => 0,
                }
            }
            PredKind::Len => {
                if self.a == self.b {
                    return 0;
                }
                match h.get(self.a) {
                    Some(next) => {
                        let rest = h.without(self.a);
                        get(&Call::new(PredKind::Ls, next, self.b, rest.clone()))
                            + get(&Call::new(PredKind::Len, next, self.b, rest))
                    }
                    None => 0,
                }
            }
            PredKind::Tree => {
                let base = (self.a == 0 && h.is_empty()) as u64;
                let step = match tree_children(self.a, h) {
                    None => 0,
                    Some((left, right, rest)) => heap_partitions(&rest)
                        .into_iter()
                        .map(|(h1, h2)| {
                            get(&Call::new(PredKind::Tree, left, 0, h1)) * get(&Call::new(PredKind::Tree, right, 0, h2))
                        })
                        .max()
                        .unwrap_or(0),
                };
                base + step
            }
            PredKind::Path(k) => path_steps(k, self.a, h)
                .into_iter()
                .map(|(target, rest)| 1 + get(&Call::new(self.kind, target, 0, rest)))
                .max()
                .unwrap_or(0),
        }
    }
}

// `a |-> left, right` as the first two cells, children restricted to naturals.
fn tree_children(a: i64, h: &Heap) -> Option<(i64, i64, Heap)> {
    let left = h.get(a)?;
    let right = h.get(a + 1)?;
    if left < 0 || right < 0 {
        return None;
    }
    Some((left, right, h.without(a).without(a + 1)))
}

fn path_steps(k: usize, a: i64, h: &Heap) -> Vec<(i64, Heap)> {
    (0..k as i64)
        .filter_map(|j| h.get(a + j).filter(|t| *t >= 0).map(|t| (t, h.without(a + j))))
        .collect()
}

/// Memoizing Kleene solver shared across queries.
#[derive(Debug, Default)]
pub struct PredSolver {
    memo: HashMap<Call, u64>,
}

impl PredSolver {
    pub fn new() -> PredSolver {
        PredSolver::default()
    }

    pub fn eval(&mut self, kind: PredKind, args: &[i64], heap: &Heap) -> u64 {
        let query = Call::new(kind, args[0], args.get(1).copied().unwrap_or(0), heap.clone());
        if let Some(v) = self.memo.get(&query) {
            return *v;
        }
        // dependency closure of unsolved entries
        let mut family: HashMap<Call, u64> = HashMap::new();
        let mut queue = VecDeque::from([query.clone()]);
        family.insert(query.clone(), 0);
        while let Some(call) = queue.pop_front() {
            for dep in call.deps() {
                if !self.memo.contains_key(&dep) && !family.contains_key(&dep) {
                    family.insert(dep.clone(), 0);
                    queue.push_back(dep);
                }
            }
        }
        let keys: Vec<Call> = family.keys().cloned().collect();
        let mut rounds = 0;
        loop {
            rounds += 1;
            let current = &family;
            let memo = &self.memo;
            let get = |c: &Call| memo.get(c).or_else(|| current.get(c)).copied().unwrap_or(0);
            let next: Vec<u64> = keys.iter().map(|k| k.unfold(&get)).collect();
            let mut changed = false;
            for (k, v) in keys.iter().zip(next) {
                let slot = family.get_mut(k).expect("family key");
                if *slot != v {
                    assert!(v > *slot, "Kleene iterates must increase");
                    *slot = v;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // each unfolding consumes at least one cell, plus one confirming round
        assert!(rounds <= heap.len() + 2, "fixpoint took {rounds} rounds on {} cells", heap.len());
        let value = family[&query];
        self.memo.extend(family);
        value
    }
}

/// Value of `ls`, `len`, `tree` or `path` at the given argument values and heap.
pub fn eval_fixpoint_predicate(kind: PredKind, args: &[i64], heap: &Heap) -> ExtQ {
    ExtQ::int(PredSolver::new().eval(kind, args, heap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heap(cells: &[(i64, i64)]) -> Heap {
        Heap::from_cells(cells)
    }

    #[test]
    fn singleton_list() {
        let h = heap(&[(1, 0)]);
        assert_eq!(eval_fixpoint_predicate(PredKind::Ls, &[1, 0], &h), ExtQ::one());
        assert_eq!(eval_fixpoint_predicate(PredKind::Len, &[1, 0], &h), ExtQ::one());
        assert_eq!(eval_fixpoint_predicate(PredKind::Ls, &[1, 1], &Heap::empty()), ExtQ::one());
    }

    #[test]
    fn cyclic_heap_is_not_a_segment() {
        let h = heap(&[(1, 2), (2, 3), (3, 2)]);
        assert_eq!(eval_fixpoint_predicate(PredKind::Ls, &[1, 2], &h), ExtQ::zero());
        assert_eq!(eval_fixpoint_predicate(PredKind::Ls, &[1, 0], &h), ExtQ::zero());
    }

    #[test]
    fn list_length_counts_cells() {
        let h = heap(&[(1, 3), (3, 2), (2, 0)]);
        assert_eq!(eval_fixpoint_predicate(PredKind::Len, &[1, 0], &h), ExtQ::int(3));
        assert_eq!(eval_fixpoint_predicate(PredKind::Len, &[3, 0], &h), ExtQ::zero());
    }

    #[test]
    fn figure_graphs() {
        // root at 2 so that the null record 0,1 is unallocated
        let right = heap(&[(2, 4), (3, 0), (4, 0), (5, 0)]);
        assert_eq!(eval_fixpoint_predicate(PredKind::Tree, &[2], &right), ExtQ::one());
        assert_eq!(eval_fixpoint_predicate(PredKind::Path(2), &[2], &right), ExtQ::int(2));
        let left = heap(&[(1, 3), (2, 7), (3, 5), (5, 1), (7, 9)]);
        assert_eq!(eval_fixpoint_predicate(PredKind::Tree, &[1], &left), ExtQ::zero());
        assert_eq!(eval_fixpoint_predicate(PredKind::Path(2), &[1], &left), ExtQ::int(5));
    }
}
