//! Pointwise evaluation of expectations at a single state.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use super::pred::{PredKind, PredSolver};
use super::Expectation as E;
use crate::error::ModelError;
use crate::num::ExtQ;
use crate::state::{enumerate_heaps, enumerate_stacks, enumerate_states, heap_partitions, DomainConfig, Heap, ProgState, Stack};
use crate::syntax::Arith;

/// Variable environment: the stack plus quantifier-bound variables (innermost last).
#[derive(Debug, Clone)]
struct Env<'s> {
    stack: &'s Stack,
    bound: Vec<(String, i64)>,
}

impl Env<'_> {
    fn lookup(&self, name: &str) -> Option<i64> {
        self.bound.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v).or_else(|| self.stack.get(name))
    }

    fn arith(&self, e: &Arith) -> Result<i64, ModelError> {
        e.eval_with(&|n| self.lookup(n))
    }

    fn describe(&self, heap: &Heap) -> String {
        let mut s = self.stack.clone();
        for (n, v) in &self.bound {
            s.set(n, *v);
        }
        ProgState::new(s, heap.clone()).to_string()
    }
}

/// Evaluates expectations over one bounded model, caching recursive-predicate fixpoints.
pub struct Evaluator<'c> {
    cfg: &'c DomainConfig,
    preds: RefCell<PredSolver>,
}

impl<'c> Evaluator<'c> {
    pub fn new(cfg: &'c DomainConfig) -> Evaluator<'c> {
        Evaluator { cfg, preds: RefCell::new(PredSolver::new()) }
    }

    pub fn config(&self) -> &DomainConfig {
        self.cfg
    }

    pub fn eval(&self, e: &E, state: &ProgState) -> Result<ExtQ, ModelError> {
        state.validate(self.cfg)?;
        let mut env = Env { stack: &state.stack, bound: Vec::new() };
        self.go(e, &mut env, &state.heap)
    }

    fn one_bounded(&self, v: ExtQ, env: &Env, heap: &Heap) -> Result<ExtQ, ModelError> {
        if v > ExtQ::one() {
            Err(ModelError::NotOneBounded { value: v, state: env.describe(heap) })
        } else {
            Ok(v)
        }
    }

    fn pred(&self, kind: PredKind, args: &[i64], heap: &Heap) -> ExtQ {
        ExtQ::int(self.preds.borrow_mut().eval(kind, args, heap))
    }

    /// All heaps over free addresses of `heap`, i.e. candidate extensions.
    fn extensions(&self, heap: &Heap) -> Vec<Heap> {
        let free: Vec<i64> = (1..=self.cfg.addrs as i64).filter(|a| !heap.contains(*a)).collect();
        let values: Vec<i64> = self.cfg.values().collect();
        let mut out = vec![Heap::empty()];
        for a in free {
            let mut next = Vec::with_capacity(out.len() * (values.len() + 1));
            for h in &out {
                next.push(h.clone());
                for v in &values {
                    next.push(h.with(a, *v));
                }
            }
            out = next;
        }
        out
    }

    /// Extensions `h'` of `heap` on which the predicate holds, using closed forms for simple predicates.
    fn satisfying_extensions(&self, pred: &E, env: &mut Env, heap: &Heap) -> Result<Vec<Heap>, ModelError> {
        let cfg = self.cfg;
        match pred {
            E::Emp => Ok(vec![Heap::empty()]),
            E::PointsTo(a, vals) => {
                let base = env.arith(a)?;
                let mut block = Heap::empty();
                for (i, v) in vals.iter().enumerate() {
                    let addr = base + i as i64;
                    let v = env.arith(v)?;
                    if !cfg.is_address(addr) || heap.contains(addr) || !cfg.in_domain(v) {
                        return Ok(vec![]);
                    }
                    block = block.with(addr, v);
                }
                Ok(vec![block])
            }
            E::ValidPointer(a) => {
                let addr = env.arith(a)?;
                if !cfg.is_address(addr) || heap.contains(addr) {
                    return Ok(vec![]);
                }
                Ok(cfg.values().map(|v| Heap::from_cells(&[(addr, v)])).collect())
            }
            _ => {
                let mut out = Vec::new();
                for ext in self.extensions(heap) {
                    if self.go(pred, env, &ext)?.is_one() {
                        out.push(ext);
                    }
                }
                Ok(out)
            }
        }
    }

    fn go(&self, e: &E, env: &mut Env, heap: &Heap) -> Result<ExtQ, ModelError> {
        let cfg = self.cfg;
        Ok(match e {
            E::Const(c) => c.clone(),
            E::Iverson(g) => ExtQ::bool(g.eval_with(&|n| env.lookup(n))?),
            E::Emp => ExtQ::bool(heap.is_empty()),
            E::PointsTo(a, vals) => {
                let base = env.arith(a)?;
                let mut ok = heap.len() == vals.len();
                for (i, v) in vals.iter().enumerate() {
                    let v = env.arith(v)?;
                    ok = ok && heap.get(base + i as i64) == Some(v);
                }
                ExtQ::bool(ok)
            }
            E::ValidPointer(a) => {
                let addr = env.arith(a)?;
                ExtQ::bool(heap.len() == 1 && heap.contains(addr))
            }
            E::Contains(a, b) => {
                let addr = env.arith(a)?;
                let v = env.arith(b)?;
                ExtQ::bool(heap.get(addr) == Some(v))
            }
            E::ContainsAny(a) => ExtQ::bool(heap.contains(env.arith(a)?)),
            E::Size => ExtQ::int(heap.len() as u64),
            E::Ls(a, b) => self.pred(PredKind::Ls, &[env.arith(a)?, env.arith(b)?], heap),
            E::Len(a, b) => self.pred(PredKind::Len, &[env.arith(a)?, env.arith(b)?], heap),
            E::Tree(a) => self.pred(PredKind::Tree, &[env.arith(a)?], heap),
            E::Path(k, a) => self.pred(PredKind::Path(*k), &[env.arith(a)?], heap),
            E::Add(a, b) => self.go(a, env, heap)?.add(&self.go(b, env, heap)?),
            E::Mul(a, b) => {
                let x = self.go(a, env, heap)?;
                if x.is_zero() {
                    return Ok(x);
                }
                x.mul(&self.go(b, env, heap)?)
            }
            E::Monus(a, b) => self.go(a, env, heap)?.monus(&self.go(b, env, heap)?),
            E::Max(a, b) => self.go(a, env, heap)?.max_of(&self.go(b, env, heap)?),
            E::Min(a, b) => self.go(a, env, heap)?.min_of(&self.go(b, env, heap)?),
            E::Sum(items) => {
                let mut acc = ExtQ::zero();
                for it in items {
                    acc = acc.add(&self.go(it, env, heap)?);
                }
                acc
            }
            E::Sep(items) => match items.split_first() {
                None => ExtQ::bool(heap.is_empty()),
                Some((first, [])) => self.go(first, env, heap)?,
                Some((first, rest)) => self.sepcon(first, &E::Sep(rest.to_vec()), env, heap)?,
            },
            E::Sup(v, body) | E::Inf(v, body) => {
                let is_sup = matches!(e, E::Sup(..));
                let mut acc: Option<ExtQ> = None;
                for value in cfg.values() {
                    env.bound.push((v.clone(), value));
                    let r = self.go(body, env, heap);
                    env.bound.pop();
                    let r = r?;
                    acc = Some(match acc {
                        None => r,
                        Some(prev) if is_sup => prev.max_of(&r),
                        Some(prev) => prev.min_of(&r),
                    });
                }
                acc.expect("value interval is nonempty")
            }
            E::SepCon(a, b) => self.sepcon(a, b, env, heap)?,
            E::SepImp(p, b) => {
                let mut acc = ExtQ::Inf;
                for ext in self.satisfying_extensions(p, env, heap)? {
                    let joined = join(heap, &ext);
                    acc = acc.min_of(&self.go(b, env, &joined)?);
                }
                acc
            }
            E::ErrSepCon(a, b) => {
                let mut acc: Option<ExtQ> = None;
                for (h1, h2) in heap_partitions(heap) {
                    let x = self.one_bounded(self.go(a, env, &h1)?, env, &h1)?;
                    let term = if x.is_zero() {
                        ExtQ::one()
                    } else {
                        let y = self.one_bounded(self.go(b, env, &h2)?, env, &h2)?;
                        x.one_minus().expect("one-bounded").add(&x.mul(&y))
                    };
                    acc = Some(acc.map_or(term.clone(), |p| p.min_of(&term)));
                }
                acc.expect("at least one partition")
            }
            E::ErrSepImp(p, b) => {
                let mut acc = ExtQ::zero();
                for ext in self.satisfying_extensions(p, env, heap)? {
                    let joined = join(heap, &ext);
                    let y = self.one_bounded(self.go(b, env, &joined)?, env, &joined)?;
                    acc = acc.max_of(&y);
                }
                acc
            }
            E::OneMinus(a) => {
                let x = self.go(a, env, heap)?;
                self.one_bounded(x, env, heap)?.one_minus().expect("one-bounded")
            }
        })
    }

    fn sepcon(&self, a: &E, b: &E, env: &mut Env, heap: &Heap) -> Result<ExtQ, ModelError> {
        let mut acc = ExtQ::zero();
        for (h1, h2) in heap_partitions(heap) {
            let x = self.go(a, env, &h1)?;
            if x.is_zero() {
                continue;
            }
            acc = acc.max_of(&x.mul(&self.go(b, env, &h2)?));
        }
        Ok(acc)
    }
}

fn join(h: &Heap, ext: &Heap) -> Heap {
    let mut out = h.clone();
    out.0.extend(ext.cells());
    out
}

/// `E(σ)` over the bounded model.
pub fn eval_expectation(e: &E, state: &ProgState, cfg: &DomainConfig) -> Result<ExtQ, ModelError> {
    Evaluator::new(cfg).eval(e, state)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entailment {
    Holds,
    /// First enumerated state where `E1 > E2`, with both values.
    Counterexample { state: ProgState, lhs: ExtQ, rhs: ExtQ },
}

impl Entailment {
    pub fn holds(&self) -> bool {
        matches!(self, Entailment::Holds)
    }
}

/// `E1 ⪯ E2` checked at every state with at most `max_cells` cells.
pub fn entails(lhs: &E, rhs: &E, cfg: &DomainConfig, max_cells: usize) -> Result<Entailment, ModelError> {
    let ev = Evaluator::new(cfg);
    for state in enumerate_states(cfg, max_cells) {
        let l = ev.eval(lhs, &state)?;
        let r = ev.eval(rhs, &state)?;
        if l > r {
            return Ok(Entailment::Counterexample { state, lhs: l, rhs: r });
        }
    }
    Ok(Entailment::Holds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub pure: bool,
    pub domain_exact: bool,
    pub intuitionistic: bool,
}

/// Decides purity, domain-exactness and intuitionism by exhaustive checking.
pub fn classify_expectation(e: &E, cfg: &DomainConfig, max_cells: usize) -> Result<Classification, ModelError> {
    let ev = Evaluator::new(cfg);
    let heaps = enumerate_heaps(cfg, max_cells);
    let mut class = Classification { pure: true, domain_exact: true, intuitionistic: true };
    for stack in enumerate_stacks(cfg) {
        let values: Vec<ExtQ> = heaps
            .iter()
            .map(|h| ev.eval(e, &ProgState::new(stack.clone(), h.clone())))
            .collect::<Result<_, _>>()?;
        let table: std::collections::HashMap<&Heap, &ExtQ> = heaps.iter().zip(&values).collect();
        if values.iter().any(|v| v != &values[0]) {
            class.pure = false;
        }
        let mut domain: Option<Vec<i64>> = None;
        for (h, v) in heaps.iter().zip(&values) {
            if v.is_zero() {
                continue;
            }
            match &domain {
                None => domain = Some(h.addresses()),
                Some(d) if *d != h.addresses() => class.domain_exact = false,
                _ => {}
            }
            // single-cell extensions suffice by transitivity
            for a in 1..=cfg.addrs as i64 {
                if h.contains(a) {
                    continue;
                }
                for val in cfg.values() {
                    if let Some(w) = table.get(&h.with(a, val)) {
                        if *w < v {
                            class.intuitionistic = false;
                        }
                    }
                }
            }
        }
    }
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expectation;

    fn worked_state() -> (ProgState, DomainConfig) {
        let cfg = DomainConfig::new(&["x"], 0, 5, 5).unwrap();
        let state = ProgState::new(Stack::from_pairs(&[("x", 0)]), Heap::from_cells(&[(1, 2), (2, 3), (4, 5)]));
        (state, cfg)
    }

    fn at(text: &str) -> ExtQ {
        let (state, cfg) = worked_state();
        eval_expectation(&parse_expectation(text).unwrap(), &state, &cfg).unwrap()
    }

    #[test]
    fn worked_example() {
        assert_eq!(at("1 |-> 2 ** size"), ExtQ::int(2));
        assert_eq!(at("3 |-> 4 -* size"), ExtQ::int(4));
        assert_eq!(at("3 |-> 4 ** size"), ExtQ::zero());
        assert_eq!(at("1 |-> 2 -* size"), ExtQ::Inf);
        assert_eq!(at("1 |-> 2 ** (1 |-> 2 -* size)"), ExtQ::int(3));
    }

    #[test]
    fn general_wand_matches_closed_form() {
        let cfg = DomainConfig::new(&["x"], 0, 3, 2).unwrap();
        let fast = parse_expectation("x |-> 1 -* size").unwrap();
        // same predicate, but not recognized by the closed form
        let slow = parse_expectation("max((x |-> 1), 0) -* size").unwrap();
        for st in enumerate_states(&cfg, 2) {
            assert_eq!(eval_expectation(&fast, &st, &cfg).unwrap(), eval_expectation(&slow, &st, &cfg).unwrap(), "{st}");
        }
    }

    #[test]
    fn one_minus_rejects_large_operand() {
        let (state, cfg) = worked_state();
        let e = parse_expectation("1 - size").unwrap();
        assert!(matches!(eval_expectation(&e, &state, &cfg), Err(ModelError::NotOneBounded { .. })));
    }

    #[test]
    fn classification_examples() {
        let cfg = DomainConfig::new(&["x"], 0, 2, 2).unwrap();
        let c = |t: &str| classify_expectation(&parse_expectation(t).unwrap(), &cfg, 2).unwrap();
        // every heap is nonzero once x = 1, so the domains differ
        assert_eq!(c("[x = 1]"), Classification { pure: true, domain_exact: false, intuitionistic: true });
        assert!(c("[x = 1] * [emp]").domain_exact);
        assert_eq!(c("size"), Classification { pure: false, domain_exact: false, intuitionistic: true });
        let pt = c("x |-> 2");
        assert!(pt.domain_exact && !pt.intuitionistic && !pt.pure);
    }
}
