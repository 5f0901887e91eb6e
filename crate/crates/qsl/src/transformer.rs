//! Weakest-preexpectation transformers over state tables.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::expect::table::{tabulate, CArith, CGuard, Entry, Space, Table};
use crate::expect::{free_vars_expectation, Expectation};
use crate::num::{ExtQ, Q};
use crate::operational::{check_triple, TripleVerdict};
use crate::sl::{embed_sl, SlFormula};
use crate::state::{DomainConfig, ExhaustionPolicy, ProgState};
use crate::syntax::{Arith, Guard, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Nondet {
    Demonic,
    Angelic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    Total,
    Liberal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Faults {
    Intrinsic,
    Extrinsic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransformerMode {
    pub nondet: Nondet,
    pub termination: Termination,
    pub faults: Faults,
}

impl TransformerMode {
    pub const fn new(nondet: Nondet, termination: Termination, faults: Faults) -> TransformerMode {
        TransformerMode { nondet, termination, faults }
    }

    pub const WP: TransformerMode = TransformerMode::new(Nondet::Demonic, Termination::Total, Faults::Intrinsic);
    pub const AWP: TransformerMode = TransformerMode::new(Nondet::Angelic, Termination::Total, Faults::Intrinsic);
    pub const WLP: TransformerMode = TransformerMode::new(Nondet::Demonic, Termination::Liberal, Faults::Intrinsic);
    pub const AWLP: TransformerMode = TransformerMode::new(Nondet::Angelic, Termination::Liberal, Faults::Intrinsic);
    pub const WEP: TransformerMode = TransformerMode::new(Nondet::Demonic, Termination::Total, Faults::Extrinsic);
    pub const AWEP: TransformerMode = TransformerMode::new(Nondet::Angelic, Termination::Total, Faults::Extrinsic);
    pub const WLEP: TransformerMode = TransformerMode::new(Nondet::Demonic, Termination::Liberal, Faults::Extrinsic);
    pub const AWLEP: TransformerMode = TransformerMode::new(Nondet::Angelic, Termination::Liberal, Faults::Extrinsic);

    pub const ALL: [TransformerMode; 8] = [
        TransformerMode::WP,
        TransformerMode::AWP,
        TransformerMode::WLP,
        TransformerMode::AWLP,
        TransformerMode::WEP,
        TransformerMode::AWEP,
        TransformerMode::WLEP,
        TransformerMode::AWLEP,
    ];

    pub fn name(&self) -> &'static str {
        use Faults::*;
        use Nondet::*;
        use Termination::*;
        match (self.nondet, self.termination, self.faults) {
            (Demonic, Total, Intrinsic) => "wp",
            (Angelic, Total, Intrinsic) => "awp",
            (Demonic, Liberal, Intrinsic) => "wlp",
            (Angelic, Liberal, Intrinsic) => "awlp",
            (Demonic, Total, Extrinsic) => "wep",
            (Angelic, Total, Extrinsic) => "awep",
            (Demonic, Liberal, Extrinsic) => "wlep",
            (Angelic, Liberal, Extrinsic) => "awlep",
        }
    }

    /// The transformer paired with this one by the duality principle.
    pub fn dual(&self) -> TransformerMode {
        let flip_n = match self.nondet {
            Nondet::Demonic => Nondet::Angelic,
            Nondet::Angelic => Nondet::Demonic,
        };
        let flip_t = match self.termination {
            Termination::Total => Termination::Liberal,
            Termination::Liberal => Termination::Total,
        };
        let flip_f = match self.faults {
            Faults::Intrinsic => Faults::Extrinsic,
            Faults::Extrinsic => Faults::Intrinsic,
        };
        TransformerMode::new(flip_n, flip_t, flip_f)
    }

    pub fn liberal(&self) -> bool {
        self.termination == Termination::Liberal
    }

    pub fn extrinsic(&self) -> bool {
        self.faults == Faults::Extrinsic
    }

    /// Whether postexpectations must lie in `[0, 1]`.
    pub fn needs_one_bounded(&self) -> bool {
        self.liberal() || self.extrinsic()
    }

    /// Value contributed by a memory fault.
    pub fn fault_value(&self) -> ExtQ {
        ExtQ::bool(self.extrinsic())
    }
}

impl fmt::Display for TransformerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformerMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<TransformerMode, ModelError> {
        TransformerMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ModelError::InvalidConfig(format!("unknown transformer mode `{s}`")))
    }
}

/// Side on which an approximate fixpoint errs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApproxDirection {
    /// Iterated from below towards a least fixed point.
    Below,
    /// Iterated from above towards a greatest fixed point.
    Above,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Approximation {
    pub residual: ExtQ,
    pub direction: ApproxDirection,
    pub iterations: usize,
}

/// A transformer result: one value per state of the bounded universe.
#[derive(Debug, Clone)]
pub struct SemExpectation {
    pub mode: TransformerMode,
    pub table: Table,
    pub max_cells: usize,
    pub approx: Option<Approximation>,
}

impl SemExpectation {
    pub fn config(&self) -> &DomainConfig {
        &self.table.space.cfg
    }

    pub fn value(&self, state: &ProgState) -> Result<ExtQ, ModelError> {
        state.validate(self.config())?;
        match self.table.get(state) {
            Some(entry) => entry.clone().map_err(|e| (*e).clone()),
            None => Err(ModelError::InvalidConfig(format!("state {state} is outside the model"))),
        }
    }

    /// States with at most `max_cells` cells paired with their entries.
    pub fn entries(&self) -> impl Iterator<Item = (ProgState, &Entry)> + '_ {
        self.table.indices_within(self.max_cells).map(|i| (self.table.space.state_of(i), &self.table.data[i]))
    }

    pub fn is_exact(&self) -> bool {
        self.approx.is_none()
    }
}

/// Loop iteration ran out of budget; carries the last iterate.
#[derive(Debug, Clone)]
pub struct LoopBudgetExhausted {
    pub last: Table,
    pub iterations: usize,
    pub residual: ExtQ,
}

impl From<LoopBudgetExhausted> for ModelError {
    fn from(b: LoopBudgetExhausted) -> ModelError {
        ModelError::BudgetExhausted { iterations: b.iterations, residual: b.residual }
    }
}

enum Halt {
    Error(ModelError),
    Budget(LoopBudgetExhausted),
}

impl From<ModelError> for Halt {
    fn from(e: ModelError) -> Halt {
        Halt::Error(e)
    }
}

impl From<Halt> for ModelError {
    fn from(h: Halt) -> ModelError {
        match h {
            Halt::Error(e) => e,
            Halt::Budget(b) => b.into(),
        }
    }
}

type Step<T> = Result<T, Halt>;

const BOUND_SLOT: &str = "%v";

fn domain_error(cfg: &DomainConfig, value: i64, context: &str) -> Arc<ModelError> {
    Arc::new(ModelError::ValueDomainExceeded { value, vmin: cfg.vmin, vmax: cfg.vmax, context: context.to_string() })
}

/// Table-based transformer for one mode over one bounded universe.
pub struct Transformer {
    mode: TransformerMode,
    space: Arc<Space>,
    literal_heap_rules: bool,
    approx: RefCell<Option<Approximation>>,
}

impl Transformer {
    pub fn new(mode: TransformerMode, cfg: &DomainConfig) -> Result<Transformer, ModelError> {
        Ok(Transformer::on_space(mode, Space::new(cfg)?))
    }

    pub fn on_space(mode: TransformerMode, space: Arc<Space>) -> Transformer {
        Transformer { mode, space, literal_heap_rules: false, approx: RefCell::new(None) }
    }

    /// Evaluate heap statements through the connective forms instead of direct table updates.
    pub fn with_literal_heap_rules(mut self, on: bool) -> Transformer {
        self.literal_heap_rules = on;
        self
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn mode(&self) -> TransformerMode {
        self.mode
    }

    pub fn tabulate(&self, e: &Expectation) -> Result<Table, ModelError> {
        tabulate(e, &self.space)
    }

    /// Applies the transformer of `c` to a postexpectation table.
    pub fn apply(&self, c: &Program, post: &Table) -> Result<Table, ModelError> {
        self.check_post(post)?;
        Ok(self.run(c, post)?)
    }

    /// Approximation introduced by loops since the last call, if any.
    pub fn take_approximation(&self) -> Option<Approximation> {
        self.approx.borrow_mut().take()
    }

    fn check_post(&self, post: &Table) -> Result<(), ModelError> {
        if self.mode.needs_one_bounded() {
            if let Some((i, v)) = post.first_above_one(usize::MAX) {
                return Err(ModelError::NotOneBounded { value: v, state: self.space.state_of(i).to_string() });
            }
        }
        Ok(())
    }

    fn fault(&self) -> Entry {
        Ok(self.mode.fault_value())
    }

    fn slot(&self, x: &str) -> Result<usize, ModelError> {
        self.space.slot_of(x).ok_or_else(|| ModelError::UnknownVariable(x.to_string()))
    }

    fn arith(&self, e: &Arith) -> Result<CArith, ModelError> {
        CArith::compile(e, &self.space)
    }

    fn select(&self, guard: &CGuard, then: &Table, other: &Table) -> Table {
        let sp = &self.space;
        Table::from_fn(sp, |s, h| if guard.eval(sp.stack(s)) { then.at(s, h).clone() } else { other.at(s, h).clone() })
    }

    fn run(&self, c: &Program, post: &Table) -> Step<Table> {
        let sp = self.space.clone();
        let cfg = &sp.cfg;
        Ok(match c {
            Program::Skip => post.clone(),
            Program::Assign(x, e) => {
                let slot = self.slot(x)?;
                let e = self.arith(e)?;
                Table::from_fn(&sp, |s, h| {
                    let v = e.eval(sp.stack(s));
                    match sp.stack_with(s, slot, v) {
                        Some(t) => post.at(t, h).clone(),
                        None => Err(domain_error(cfg, v, "assignment")),
                    }
                })
            }
            Program::Seq(c1, c2) => {
                let mid = self.run(c2, post)?;
                self.run(c1, &mid)?
            }
            Program::Ite(b, c1, c2) => {
                let g = CGuard::compile(b, &sp)?;
                self.select(&g, &self.run(c1, post)?, &self.run(c2, post)?)
            }
            Program::PChoice(c1, p, c2) => {
                let left = self.run(c1, post)?;
                let right = self.run(c2, post)?;
                let q = Q::one().sub(p);
                if p.is_zero() {
                    right
                } else if q.is_zero() {
                    left
                } else {
                    left.zip(&right, |a, b| Ok(a.clone()?.scale(p).add(&b.clone()?.scale(&q))))
                }
            }
            Program::While(b, body) => self.fixpoint(b, body, post)?,
            Program::Uniform(x, lo, hi) => {
                let slot = self.slot(x)?;
                let (lo, hi) = (self.arith(lo)?, self.arith(hi)?);
                Table::from_fn(&sp, |s, h| {
                    let st = sp.stack(s);
                    let (l, u) = (lo.eval(st), hi.eval(st));
                    if l > u {
                        return Err(Arc::new(ModelError::EmptyUniformRange { lo: l, hi: u }));
                    }
                    let weight = Q::new(1, u - l + 1);
                    let mut acc = ExtQ::zero();
                    for v in l..=u {
                        let t = sp.stack_with(s, slot, v).ok_or_else(|| domain_error(cfg, v, "uniform assignment"))?;
                        acc = acc.add(&post.at(t, h).clone()?.scale(&weight));
                    }
                    Ok(acc)
                })
            }
            Program::Alloc(x, es) if self.literal_heap_rules => self.alloc_literal(x, es, post)?,
            Program::Alloc(x, es) => {
                let slot = self.slot(x)?;
                let es: Vec<CArith> = es.iter().map(|e| self.arith(e)).collect::<Result<_, _>>()?;
                Table::from_fn(&sp, |s, h| {
                    let blocks = free_blocks(&sp, h, es.len());
                    if blocks.is_empty() {
                        return self.exhausted(es.len());
                    }
                    let st = sp.stack(s);
                    let vals: Vec<i64> = es.iter().map(|e| e.eval(st)).collect();
                    if let Some(bad) = vals.iter().find(|v| !cfg.in_domain(**v)) {
                        return Err(domain_error(cfg, *bad, "allocation"));
                    }
                    let mut acc: Option<ExtQ> = None;
                    for u in blocks {
                        let mut h2 = h;
                        for (i, v) in vals.iter().enumerate() {
                            h2 = sp.heap_with(h2, u + i as i64, *v).expect("checked value");
                        }
                        let t = sp.stack_with(s, slot, u).expect("addresses lie in V");
                        let y = post.at(t, h2).clone()?;
                        acc = Some(match (acc, self.mode.nondet) {
                            (None, _) => y,
                            (Some(a), Nondet::Demonic) => a.min_of(&y),
                            (Some(a), Nondet::Angelic) => a.max_of(&y),
                        });
                    }
                    Ok(acc.expect("nonempty block set"))
                })
            }
            Program::Lookup(x, e) if self.literal_heap_rules => self.lookup_literal(x, e, post)?,
            Program::Lookup(x, e) => {
                let slot = self.slot(x)?;
                let e = self.arith(e)?;
                Table::from_fn(&sp, |s, h| match sp.cell(h, e.eval(sp.stack(s))) {
                    Some(w) => post.at(sp.stack_with(s, slot, w).expect("heap values lie in V"), h).clone(),
                    None => self.fault(),
                })
            }
            Program::Mutate(e, e2) => {
                let table = if self.literal_heap_rules {
                    let target = self.pointer_atom(e)?;
                    let inner = tabulate(&Expectation::pt(e.clone(), e2.clone()), &sp)?;
                    let wand = if self.mode.extrinsic() { inner.err_sepimp(post) } else { inner.sepimp(post) };
                    self.star(&target, &wand)
                } else {
                    Table::constant(&sp, ExtQ::zero())
                };
                let (ca, cv) = (self.arith(e)?, self.arith(e2)?);
                Table::from_fn(&sp, |s, h| {
                    let st = sp.stack(s);
                    let a = ca.eval(st);
                    if sp.cell(h, a).is_none() {
                        return if self.literal_heap_rules { table.at(s, h).clone() } else { self.fault() };
                    }
                    let v = cv.eval(st);
                    match sp.heap_with(h, a, v) {
                        None => Err(domain_error(cfg, v, "heap mutation")),
                        Some(_) if self.literal_heap_rules => table.at(s, h).clone(),
                        Some(h2) => post.at(s, h2).clone(),
                    }
                })
            }
            Program::Free(e) if self.literal_heap_rules => self.star(&self.pointer_atom(e)?, post),
            Program::Free(e) => {
                let e = self.arith(e)?;
                Table::from_fn(&sp, |s, h| {
                    let a = e.eval(sp.stack(s));
                    match sp.cell(h, a) {
                        Some(_) => post.at(s, sp.heap_without(h, a)).clone(),
                        None => self.fault(),
                    }
                })
            }
        })
    }

    fn exhausted(&self, cells: usize) -> Entry {
        match self.space.cfg.exhaustion {
            ExhaustionPolicy::Error => Err(Arc::new(ModelError::AddressExhausted { cells, addrs: self.space.addrs() })),
            ExhaustionPolicy::Fault => self.fault(),
        }
    }

    fn pointer_atom(&self, e: &Arith) -> Result<Table, ModelError> {
        tabulate(&Expectation::ValidPointer(e.clone()), &self.space)
    }

    fn star(&self, a: &Table, b: &Table) -> Table {
        if self.mode.extrinsic() {
            a.err_sepcon(b)
        } else {
            a.sepcon(b)
        }
    }

    /// `post[x/v]` over the space extended by the bound slot `v`.
    fn substituted(&self, post: &Table, ext: &Arc<Space>, slot: usize) -> Table {
        let sp = &self.space;
        let last = ext.slots.len() - 1;
        Table::from_fn(ext, |s2, h| {
            let s = s2 % sp.n_stacks;
            let v = ext.stack(s2)[last];
            post.at(sp.stack_with(s, slot, v).expect("bound values lie in V"), h).clone()
        })
    }

    // sup_v (e |-> v) * ((e |-> v) -* post[x/v]), with inf and the fault-tolerant connectives when extrinsic
    fn lookup_literal(&self, x: &str, e: &Arith, post: &Table) -> Step<Table> {
        let slot = self.slot(x)?;
        let ext = self.space.extend(BOUND_SLOT)?;
        let atom = tabulate(&Expectation::pt(e.clone(), Arith::var(BOUND_SLOT)), &ext)?;
        let shifted = self.substituted(post, &ext, slot);
        let body = if self.mode.extrinsic() {
            atom.err_sepcon(&atom.err_sepimp(&shifted))
        } else {
            atom.sepcon(&atom.sepimp(&shifted))
        };
        Ok(body.project(&self.space, !self.mode.extrinsic()))
    }

    // inf (or sup) over free v of (v |-> es) -* post[x/v]
    fn alloc_literal(&self, x: &str, es: &[Arith], post: &Table) -> Step<Table> {
        let sp = self.space.clone();
        let slot = self.slot(x)?;
        let ext = sp.extend(BOUND_SLOT)?;
        let atom = tabulate(&Expectation::PointsTo(Arith::var(BOUND_SLOT), es.to_vec()), &ext)?;
        let shifted = self.substituted(post, &ext, slot);
        let wand = if self.mode.extrinsic() { atom.err_sepimp(&shifted) } else { atom.sepimp(&shifted) };
        let ces: Vec<CArith> = es.iter().map(|e| self.arith(e)).collect::<Result<_, _>>()?;
        Ok(Table::from_fn(&sp, |s, h| {
            let blocks = free_blocks(&sp, h, es.len());
            if blocks.is_empty() {
                return self.exhausted(es.len());
            }
            let st = sp.stack(s);
            if let Some(bad) = ces.iter().map(|e| e.eval(st)).find(|v| !sp.cfg.in_domain(*v)) {
                return Err(domain_error(&sp.cfg, bad, "allocation"));
            }
            let mut acc: Option<ExtQ> = None;
            for u in blocks {
                let k = sp.value_index(u).expect("addresses lie in V");
                let y = wand.data[(s + k * sp.n_stacks) * sp.n_heaps + h].clone()?;
                acc = Some(match (acc, self.mode.nondet) {
                    (None, _) => y,
                    (Some(a), Nondet::Demonic) => a.min_of(&y),
                    (Some(a), Nondet::Angelic) => a.max_of(&y),
                });
            }
            Ok(acc.expect("nonempty block set"))
        }))
    }

    fn fixpoint(&self, b: &Guard, body: &Program, post: &Table) -> Step<Table> {
        let sp = &self.space;
        let guard = CGuard::compile(b, sp)?;
        let liberal = self.mode.liberal();
        let start = if liberal { ExtQ::one() } else { ExtQ::zero() };
        let mut current = Table::constant(sp, start);
        let mut prev_change: Option<ExtQ> = None;
        let tol = ExtQ::fin(sp.cfg.loop_tol.clone());
        for iteration in 1..=sp.cfg.loop_max_iters {
            let inner = self.run(body, &current)?;
            let next = self.select(&guard, &inner, post);
            let mut change = ExtQ::zero();
            let mut poison_changed = false;
            for (old, new) in current.data.iter().zip(&next.data) {
                match (old, new) {
                    (Ok(a), Ok(b)) => {
                        let grew = if liberal { b <= a } else { b >= a };
                        assert!(grew, "loop iterates must be monotone: {a} then {b}");
                        change = change.max_of(&a.distance(b));
                    }
                    (Err(_), Err(_)) => {}
                    (Ok(_), Err(_)) => poison_changed = true,
                    (Err(_), Ok(_)) => panic!("loop iterate recovered from an undefined entry"),
                }
            }
            current = next;
            if change.is_zero() && !poison_changed {
                return Ok(current);
            }
            if !poison_changed && change <= tol {
                if let Some(estimate) = prev_change.as_ref().and_then(|p| tail_estimate(&change, p)) {
                    if estimate <= tol {
                        self.note_approx(Approximation {
                            residual: estimate.max_of(&change),
                            direction: if liberal { ApproxDirection::Above } else { ApproxDirection::Below },
                            iterations: iteration,
                        });
                        return Ok(current);
                    }
                }
            }
            prev_change = Some(change);
            if iteration == sp.cfg.loop_max_iters {
                let residual = prev_change.clone().unwrap_or(ExtQ::Inf);
                return Err(Halt::Budget(LoopBudgetExhausted { last: current, iterations: iteration, residual }));
            }
        }
        unreachable!("loop_max_iters is positive")
    }

    fn note_approx(&self, a: Approximation) {
        let mut slot = self.approx.borrow_mut();
        match slot.as_mut() {
            Some(prev) => {
                prev.residual = prev.residual.max_of(&a.residual);
                prev.iterations = prev.iterations.max(a.iterations);
            }
            None => *slot = Some(a),
        }
    }
}

/// Geometric tail `change * r / (1 - r)` with `r = change / previous`, if the changes contract.
fn tail_estimate(change: &ExtQ, previous: &ExtQ) -> Option<ExtQ> {
    let (c, p) = (change.finite()?, previous.finite()?);
    if p.is_zero() || c >= p {
        return None;
    }
    let ratio = c.div(p);
    Some(ExtQ::fin(c.mul(&ratio).div(&Q::one().sub(&ratio))))
}

/// Start addresses `u` with `u..u+n` free and inside `1..=A`.
fn free_blocks(sp: &Space, h: usize, n: usize) -> Vec<i64> {
    let a = sp.addrs() as i64;
    (1..=a - n as i64 + 1).filter(|u| (0..n as i64).all(|i| sp.cell(h, u + i).is_none())).collect()
}

/// Transformer of `c` in the given mode applied to `post`.
pub fn transform(
    mode: TransformerMode,
    c: &Program,
    post: &Expectation,
    cfg: &DomainConfig,
    max_cells: usize,
) -> Result<SemExpectation, ModelError> {
    let t = Transformer::new(mode, cfg)?;
    let post = t.tabulate(post)?;
    let table = t.apply(c, &post)?;
    Ok(SemExpectation { mode, table, max_cells, approx: t.take_approximation() })
}

/// Fixed point of the loop's characteristic functional.
pub fn loop_fixpoint(
    mode: TransformerMode,
    b: &Guard,
    body: &Program,
    post: &Expectation,
    cfg: &DomainConfig,
    max_cells: usize,
) -> Result<SemExpectation, LoopFailure> {
    let t = Transformer::new(mode, cfg)?;
    let post = t.tabulate(post)?;
    t.check_post(&post)?;
    match t.fixpoint(b, body, &post) {
        Ok(table) => Ok(SemExpectation { mode, table, max_cells, approx: t.take_approximation() }),
        Err(Halt::Error(e)) => Err(LoopFailure::Model(e)),
        Err(Halt::Budget(b)) => Err(LoopFailure::Budget(Box::new(b))),
    }
}

#[derive(Debug, Clone)]
pub enum LoopFailure {
    Model(ModelError),
    Budget(Box<LoopBudgetExhausted>),
}

impl From<ModelError> for LoopFailure {
    fn from(e: ModelError) -> LoopFailure {
        LoopFailure::Model(e)
    }
}

impl From<LoopFailure> for ModelError {
    fn from(f: LoopFailure) -> ModelError {
        match f {
            LoopFailure::Model(e) => e,
            LoopFailure::Budget(b) => (*b).into(),
        }
    }
}

/// Outcome of a pointwise comparison `lhs ⪯ rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Counterexample { state: String, lhs: ExtQ, rhs: ExtQ },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Checks `lhs ⪯ rhs` at all states with at most `max_cells` cells.
pub fn compare_tables(lhs: &Table, rhs: &Table, max_cells: usize) -> Result<Verdict, ModelError> {
    for i in lhs.indices_within(max_cells) {
        let a = lhs.data[i].clone().map_err(|e| (*e).clone())?;
        let b = rhs.data[i].clone().map_err(|e| (*e).clone())?;
        if a > b {
            return Ok(Verdict::Counterexample { state: lhs.space.state_of(i).to_string(), lhs: a, rhs: b });
        }
    }
    Ok(Verdict::Holds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantDirection {
    /// `Φ(I) ⪯ I`, bounding the least fixed point from above.
    Upper,
    /// `I ⪯ Φ(I)`, bounding the liberal greatest fixed point from below.
    Lower,
}

/// Checks an invariant for `while (b) { body }` against `post`.
pub fn check_invariant(
    direction: InvariantDirection,
    b: &Guard,
    body: &Program,
    post: &Expectation,
    inv: &Expectation,
    cfg: &DomainConfig,
    max_cells: usize,
) -> Result<Verdict, ModelError> {
    let mode = match direction {
        InvariantDirection::Upper => TransformerMode::WP,
        InvariantDirection::Lower => TransformerMode::WLP,
    };
    let t = Transformer::new(mode, cfg)?;
    let post_t = t.tabulate(post)?;
    let inv_t = t.tabulate(inv)?;
    if direction == InvariantDirection::Lower {
        t.check_post(&post_t)?;
        t.check_post(&inv_t)?;
    }
    let guard = CGuard::compile(b, t.space())?;
    let inner = t.apply(body, &inv_t)?;
    let phi = t.select(&guard, &inner, &post_t);
    match direction {
        InvariantDirection::Upper => compare_tables(&phi, &inv_t, max_cells),
        InvariantDirection::Lower => compare_tables(&inv_t, &phi, max_cells),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameDirection {
    /// `T(X) ⋆ Y ⪯ T(X ⋆ Y)`.
    Sound,
    /// `T(X) ⋆ Y ⪰ T(X ⋆ Y)`, which does not hold in general.
    Converse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FrameVerdict {
    Checked(Verdict),
    SideConditionViolated { shared: Vec<String> },
}

impl FrameVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, FrameVerdict::Checked(Verdict::Holds))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameReport {
    pub wp: FrameVerdict,
    /// Present when both operands are one-bounded.
    pub wlp: Option<FrameVerdict>,
}

impl FrameReport {
    pub fn holds(&self) -> bool {
        self.wp.holds() && self.wlp.as_ref().is_none_or(FrameVerdict::holds)
    }
}

/// Checks the frame inequality for `c` with frame `y`.
pub fn check_frame(
    c: &Program,
    x: &Expectation,
    y: &Expectation,
    direction: FrameDirection,
    cfg: &DomainConfig,
    max_cells: usize,
) -> Result<FrameReport, ModelError> {
    let modified = c.modified_vars();
    let shared: Vec<String> = free_vars_expectation(y).intersection(&modified).cloned().collect();
    if !shared.is_empty() {
        let v = FrameVerdict::SideConditionViolated { shared };
        return Ok(FrameReport { wp: v.clone(), wlp: Some(v) });
    }
    let space = Space::new(cfg)?;
    let xt = tabulate(x, &space)?;
    let yt = tabulate(y, &space)?;
    let one_bounded = xt.first_above_one(usize::MAX).is_none() && yt.first_above_one(usize::MAX).is_none();
    let check = |mode: TransformerMode| -> Result<FrameVerdict, ModelError> {
        let t = Transformer::on_space(mode, space.clone());
        let left = t.apply(c, &xt)?.sepcon(&yt);
        let right = t.apply(c, &xt.sepcon(&yt))?;
        Ok(FrameVerdict::Checked(match direction {
            FrameDirection::Sound => compare_tables(&left, &right, max_cells)?,
            FrameDirection::Converse => compare_tables(&right, &left, max_cells)?,
        }))
    };
    let wp = check(TransformerMode::WP)?;
    let wlp = if one_bounded { Some(check(TransformerMode::WLP)?) } else { None };
    Ok(FrameReport { wp, wlp })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualityLine {
    pub id: String,
    pub holds: bool,
    pub max_difference: ExtQ,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualityReport {
    pub exact: bool,
    pub tolerance: ExtQ,
    pub residual: Option<ExtQ>,
    pub lines: Vec<DualityLine>,
}

impl DualityReport {
    pub fn holds(&self) -> bool {
        self.lines.iter().all(|l| l.holds)
    }
}

/// Checks `T(f) = 1 - T*(1 - f)` for the four dual pairs.
pub fn check_duality(c: &Program, f: &Expectation, cfg: &DomainConfig, max_cells: usize) -> Result<DualityReport, ModelError> {
    let space = Space::new(cfg)?;
    let ft = tabulate(f, &space)?;
    let negated = ft.one_minus();
    let exact = !c.has_loops();
    let tolerance = if exact { ExtQ::zero() } else { ExtQ::fin(cfg.loop_tol.mul(&Q::from_int(2))) };
    let mut residual: Option<ExtQ> = None;
    let mut lines = Vec::new();
    for mode in [TransformerMode::WP, TransformerMode::WLP, TransformerMode::WEP, TransformerMode::WLEP] {
        let dual = mode.dual();
        let t = Transformer::on_space(mode, space.clone());
        let lhs = t.apply(c, &ft)?;
        let td = Transformer::on_space(dual, space.clone());
        let rhs = td.apply(c, &negated)?.one_minus();
        for a in [t.take_approximation(), td.take_approximation()].into_iter().flatten() {
            residual = Some(residual.map_or(a.residual.clone(), |r| r.max_of(&a.residual)));
        }
        let mut max_difference = ExtQ::zero();
        let mut witness = None;
        for i in lhs.indices_within(max_cells) {
            let diff = match (&lhs.data[i], &rhs.data[i]) {
                (Ok(a), Ok(b)) => a.distance(b),
                (Err(_), Err(_)) => ExtQ::zero(),
                _ => ExtQ::Inf,
            };
            if diff > max_difference {
                if diff > tolerance && witness.is_none() {
                    witness = Some(space.state_of(i).to_string());
                }
                max_difference = diff;
            }
        }
        lines.push(DualityLine {
            id: format!("duality.{}_{}", mode.name(), dual.name()),
            holds: max_difference <= tolerance,
            max_difference,
            witness,
        });
    }
    Ok(DualityReport { exact, tolerance, residual, lines })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConservativityReport {
    pub quantitative: bool,
    pub operational: bool,
    pub zero_one: bool,
    /// A pre-state where the two verdicts are explained differently, or a non-0/1 value.
    pub witness: Option<String>,
}

impl ConservativityReport {
    pub fn agree(&self) -> bool {
        self.quantitative == self.operational && self.zero_one
    }
}

/// Compares the embedded wp verdict for `{pre} c {post}` with the operational triple checker.
pub fn check_conservativity(
    c: &Program,
    pre: &SlFormula,
    post: &SlFormula,
    cfg: &DomainConfig,
    max_cells: usize,
) -> Result<ConservativityReport, ModelError> {
    if c.is_probabilistic() {
        return Err(ModelError::Unsupported("conservativity needs a non-probabilistic program".into()));
    }
    let space = Space::new(cfg)?;
    let pre_t = tabulate(&embed_sl(pre), &space)?;
    let t = Transformer::on_space(TransformerMode::WP, space.clone());
    let wp = t.apply(c, &tabulate(&embed_sl(post), &space)?)?;
    let mut zero_one = true;
    let mut witness = None;
    for i in wp.indices_within(max_cells) {
        let v = wp.data[i].clone().map_err(|e| (*e).clone())?;
        if !v.is_zero() && !v.is_one() {
            zero_one = false;
            witness = Some(space.state_of(i).to_string());
            break;
        }
    }
    let quantitative = compare_tables(&pre_t, &wp, max_cells)?.holds();
    let operational = match check_triple(c, pre, post, cfg, max_cells)? {
        TripleVerdict::Valid => true,
        TripleVerdict::Invalid { state, .. } => {
            if witness.is_none() {
                witness = Some(state);
            }
            false
        }
    };
    Ok(ConservativityReport { quantitative, operational, zero_one, witness })
}

/// Variables read or written by a program and an expectation, for sizing configurations.
pub fn variables_of(c: &Program, e: &Expectation) -> BTreeSet<String> {
    let mut out = c.vars();
    out.extend(free_vars_expectation(e));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_expectation, parse_program};

    fn cfg() -> DomainConfig {
        DomainConfig::new(&["x", "y"], -1, 3, 2).unwrap()
    }

    fn wp_at(mode: TransformerMode, prog: &str, post: &str, state: &str, cfg: &DomainConfig) -> ExtQ {
        let r = transform(mode, &parse_program(prog).unwrap(), &parse_expectation(post).unwrap(), cfg, cfg.addrs).unwrap();
        r.value(&state.parse().unwrap()).unwrap()
    }

    #[test]
    fn basic_rules() {
        let c = cfg();
        assert_eq!(wp_at(TransformerMode::WP, "free(x)", "[emp]", "x=1,y=0; heap=1:3", &c), ExtQ::one());
        assert_eq!(wp_at(TransformerMode::WP, "{ skip } [1/2] { x := 1 }", "[x = 1]", "x=0,y=0; heap=", &c), ExtQ::ratio(1, 2));
        assert_eq!(wp_at(TransformerMode::WP, "free(x)", "1", "x=2,y=0; heap=1:3", &c), ExtQ::zero());
        assert_eq!(wp_at(TransformerMode::WEP, "free(x)", "[emp]", "x=2,y=0; heap=1:3", &c), ExtQ::one());
        assert_eq!(wp_at(TransformerMode::WP, "y := <x>", "[y = 3]", "x=1,y=0; heap=1:3", &c), ExtQ::one());
    }

    #[test]
    fn diverging_loop() {
        let c = cfg();
        let prog = "while (true) { skip }";
        assert_eq!(wp_at(TransformerMode::WP, prog, "1", "x=0,y=0; heap=", &c), ExtQ::zero());
        assert_eq!(wp_at(TransformerMode::WLP, prog, "1", "x=0,y=0; heap=", &c), ExtQ::one());
    }

    #[test]
    fn literal_heap_rules_agree() {
        let c = cfg();
        let posts = ["[x = 1] * (y ~> 0)", "1 - [emp]", "[y = 2]"];
        let progs = ["y := <x>", "<x> := y", "free(y)", "x := new(y)", "x := new(0, y)"];
        for mode in TransformerMode::ALL {
            for p in progs {
                for q in posts {
                    let prog = parse_program(p).unwrap();
                    let fast = Transformer::new(mode, &c).unwrap();
                    let slow = Transformer::new(mode, &c).unwrap().with_literal_heap_rules(true);
                    let post = fast.tabulate(&parse_expectation(q).unwrap()).unwrap();
                    let a = fast.apply(&prog, &post).unwrap();
                    let b = slow.apply(&prog, &post).unwrap();
                    for i in 0..a.data.len() {
                        assert_eq!(a.data[i].clone().ok(), b.data[i].clone().ok(), "{mode} {p} {q} at {}", a.space.state_of(i));
                    }
                }
            }
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in TransformerMode::ALL {
            assert_eq!(m.name().parse::<TransformerMode>().unwrap(), m);
            assert_eq!(m.dual().dual(), m);
        }
        assert_eq!(TransformerMode::WP.dual(), TransformerMode::AWLEP);
    }
}
