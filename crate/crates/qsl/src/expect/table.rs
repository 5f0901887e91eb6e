//! Dense tables of expectation values over the full bounded universe.
//!
//! A table stores one entry per (stack, heap) pair, where heaps range over every
//! partial map from `1..=A` into V. Entries may hold a deferred error, which only
//! surfaces if a later computation actually needs that entry.

use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::pred::{PredKind, PredSolver};
use super::Expectation as E;
use crate::error::ModelError;
use crate::num::ExtQ;
use crate::state::{DomainConfig, Heap, ProgState, Stack};
use crate::syntax::{Arith, CmpOp, Guard, VarName};

pub type Entry = Result<ExtQ, Arc<ModelError>>;

/// Largest table we are willing to allocate.
pub const MAX_ENTRIES: usize = 40_000_000;

type ColumnKey = (PredKind, i64, i64);

#[derive(Debug)]
struct HeapIndex {
    addrs: usize,
    base: usize,
    pow: Vec<usize>,
    dom: Vec<u32>,
    by_dom: Vec<Vec<u32>>,
    /// Predicate values over all heaps, per predicate and argument values.
    columns: Mutex<HashMap<ColumnKey, Arc<Vec<u64>>>>,
    /// Sub-heaps of every heap, flattened: those of `h` are `subs[offsets[h]..offsets[h + 1]]`.
    splits: OnceLock<Option<(Vec<usize>, Vec<u32>)>>,
}

/// Largest number of (heap, sub-heap) pairs worth precomputing.
const MAX_SPLITS: u128 = 30_000_000;

impl HeapIndex {
    fn new(addrs: usize, nv: usize) -> HeapIndex {
        let base = nv + 1;
        let pow: Vec<usize> = (0..addrs).map(|i| base.pow(i as u32)).collect();
        let n = base.pow(addrs as u32);
        let mut dom = vec![0u32; n];
        let mut by_dom = vec![Vec::new(); 1 << addrs];
        for (h, d) in dom.iter_mut().enumerate() {
            let mut mask = 0u32;
            let mut rest = h;
            for i in 0..addrs {
                if rest % base != 0 {
                    mask |= 1 << i;
                }
                rest /= base;
            }
            *d = mask;
            by_dom[mask as usize].push(h as u32);
        }
        HeapIndex { addrs, base, pow, dom, by_dom, columns: Mutex::default(), splits: OnceLock::new() }
    }
}

/// Indexing of the universe of states for a list of variable slots.
#[derive(Debug)]
pub struct Space {
    pub cfg: DomainConfig,
    pub slots: Vec<VarName>,
    nv: usize,
    pub n_stacks: usize,
    pub n_heaps: usize,
    stack_pow: Vec<usize>,
    stack_vals: Vec<i64>,
    heaps: Arc<HeapIndex>,
}

impl Space {
    pub fn new(cfg: &DomainConfig) -> Result<Arc<Space>, ModelError> {
        cfg.validate()?;
        if cfg.addrs > 16 {
            return Err(ModelError::Unsupported(format!("tabulation supports at most 16 addresses, got {}", cfg.addrs)));
        }
        let nv = cfg.value_count();
        let heaps = Arc::new(HeapIndex::new(cfg.addrs, nv));
        Space::build(cfg.clone(), cfg.vars.clone(), heaps)
    }

    fn build(cfg: DomainConfig, slots: Vec<VarName>, heaps: Arc<HeapIndex>) -> Result<Arc<Space>, ModelError> {
        let nv = cfg.value_count();
        let n_stacks = (nv as u128).pow(slots.len() as u32);
        let n_heaps = heaps.dom.len();
        if n_stacks * n_heaps as u128 > MAX_ENTRIES as u128 {
            return Err(ModelError::Unsupported(format!(
                "state universe of {n_stacks} stacks x {n_heaps} heaps is too large for tabulation"
            )));
        }
        let n_stacks = n_stacks as usize;
        let stack_pow: Vec<usize> = (0..slots.len()).map(|i| nv.pow(i as u32)).collect();
        let mut stack_vals = Vec::with_capacity(n_stacks * slots.len());
        for s in 0..n_stacks {
            let mut rest = s;
            for _ in 0..slots.len() {
                stack_vals.push((rest % nv) as i64 + cfg.vmin);
                rest /= nv;
            }
        }
        Ok(Arc::new(Space { cfg, slots, nv, n_stacks, n_heaps, stack_pow, stack_vals, heaps }))
    }

    /// The same universe with one more (innermost) variable slot.
    pub fn extend(&self, var: &str) -> Result<Arc<Space>, ModelError> {
        let mut slots = self.slots.clone();
        slots.push(var.to_string());
        Space::build(self.cfg.clone(), slots, self.heaps.clone())
    }

    pub fn len(&self) -> usize {
        self.n_stacks * self.n_heaps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn addrs(&self) -> usize {
        self.heaps.addrs
    }

    pub fn slot_of(&self, name: &str) -> Option<usize> {
        self.slots.iter().rposition(|s| s == name)
    }

    pub fn stack(&self, s: usize) -> &[i64] {
        let n = self.slots.len();
        &self.stack_vals[s * n..(s + 1) * n]
    }

    pub fn value_index(&self, v: i64) -> Option<usize> {
        self.cfg.in_domain(v).then(|| (v - self.cfg.vmin) as usize)
    }

    /// Stack index with `slot` set to `v`, if `v` is in V.
    pub fn stack_with(&self, s: usize, slot: usize, v: i64) -> Option<usize> {
        let new = self.value_index(v)?;
        let old = (self.stack(s)[slot] - self.cfg.vmin) as usize;
        Some(s + new * self.stack_pow[slot] - old * self.stack_pow[slot])
    }

    pub fn dom(&self, h: usize) -> u32 {
        self.heaps.dom[h]
    }

    pub fn cell_count(&self, h: usize) -> usize {
        self.dom(h).count_ones() as usize
    }

    fn digit(&self, h: usize, addr_bit: usize) -> usize {
        (h / self.heaps.pow[addr_bit]) % self.heaps.base
    }

    /// Value stored at address `a`, if allocated.
    pub fn cell(&self, h: usize, a: i64) -> Option<i64> {
        if a < 1 || a > self.addrs() as i64 {
            return None;
        }
        let d = self.digit(h, (a - 1) as usize);
        (d != 0).then(|| (d - 1) as i64 + self.cfg.vmin)
    }

    /// The sub-heap of `h` restricted to the addresses in `mask`.
    pub fn restrict(&self, h: usize, mask: u32) -> usize {
        let mut out = 0;
        let mut m = mask;
        while m != 0 {
            let bit = m.trailing_zeros() as usize;
            out += self.digit(h, bit) * self.heaps.pow[bit];
            m &= m - 1;
        }
        out
    }

    fn restrict_all(&self, h: usize) -> impl Iterator<Item = u32> + '_ {
        Space::submasks(self.dom(h)).map(move |m| self.restrict(h, m) as u32)
    }

    /// Every sub-heap of `h`, including `h` itself and the empty heap.
    pub fn subheaps(&self, h: usize) -> Cow<'_, [u32]> {
        let splits = self.heaps.splits.get_or_init(|| {
            let total = (2 * self.nv as u128 + 1).pow(self.addrs() as u32);
            (total <= MAX_SPLITS).then(|| {
                let mut offsets = Vec::with_capacity(self.n_heaps + 1);
                let mut subs = Vec::with_capacity(total as usize);
                for heap in 0..self.n_heaps {
                    offsets.push(subs.len());
                    subs.extend(self.restrict_all(heap));
                }
                offsets.push(subs.len());
                (offsets, subs)
            })
        });
        match splits {
            Some((offsets, subs)) => Cow::Borrowed(&subs[offsets[h]..offsets[h + 1]]),
            None => Cow::Owned(self.restrict_all(h).collect()),
        }
    }

    /// `h` with address `a` set to `v` (allocating it if needed), if `v` is in V.
    pub fn heap_with(&self, h: usize, a: i64, v: i64) -> Option<usize> {
        let bit = (a - 1) as usize;
        let new = self.value_index(v)? + 1;
        Some(h - self.digit(h, bit) * self.heaps.pow[bit] + new * self.heaps.pow[bit])
    }

    pub fn heap_without(&self, h: usize, a: i64) -> usize {
        let bit = (a - 1) as usize;
        h - self.digit(h, bit) * self.heaps.pow[bit]
    }

    pub fn full_mask(&self) -> u32 {
        ((1u64 << self.addrs()) - 1) as u32
    }

    pub fn heaps_with_dom(&self, mask: u32) -> &[u32] {
        &self.heaps.by_dom[mask as usize]
    }

    pub fn index(&self, s: usize, h: usize) -> usize {
        s * self.n_heaps + h
    }

    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.n_heaps, i % self.n_heaps)
    }

    pub fn heap_of(&self, h: usize) -> Heap {
        Heap((1..=self.addrs() as i64).filter_map(|a| self.cell(h, a).map(|v| (a, v))).collect())
    }

    pub fn heap_index(&self, heap: &Heap) -> Option<usize> {
        let mut out = 0;
        for (a, v) in heap.cells() {
            if a < 1 || a > self.addrs() as i64 {
                return None;
            }
            out += (self.value_index(v)? + 1) * self.heaps.pow[(a - 1) as usize];
        }
        Some(out)
    }

    pub fn stack_of(&self, s: usize) -> Stack {
        Stack(self.slots.iter().cloned().zip(self.stack(s).iter().copied()).collect())
    }

    pub fn stack_index(&self, stack: &Stack) -> Option<usize> {
        let mut out = 0;
        for (i, name) in self.slots.iter().enumerate() {
            out += self.value_index(stack.get(name)?)? * self.stack_pow[i];
        }
        Some(out)
    }

    pub fn state_of(&self, i: usize) -> ProgState {
        let (s, h) = self.split(i);
        ProgState::new(self.stack_of(s), self.heap_of(h))
    }

    pub fn state_index(&self, state: &ProgState) -> Option<usize> {
        Some(self.index(self.stack_index(&state.stack)?, self.heap_index(&state.heap)?))
    }

    /// Iterates over all sub-masks of `mask`, including 0 and `mask` itself.
    pub fn submasks(mask: u32) -> impl Iterator<Item = u32> {
        let mut next = Some(mask);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 { None } else { Some((cur - 1) & mask) };
            Some(cur)
        })
    }
}

/// Expression with variables resolved to slots.
#[derive(Debug, Clone)]
pub enum CArith {
    Const(i64),
    Slot(usize),
    Add(Box<CArith>, Box<CArith>),
    Sub(Box<CArith>, Box<CArith>),
    Mul(Box<CArith>, Box<CArith>),
}

impl CArith {
    pub fn compile(e: &Arith, space: &Space) -> Result<CArith, ModelError> {
        CArith::compile_in(e, &space.slots)
    }

    /// Resolves variables against `slots`, the last occurrence winning.
    pub fn compile_in(e: &Arith, slots: &[VarName]) -> Result<CArith, ModelError> {
        let rec = |a: &Arith| CArith::compile_in(a, slots).map(Box::new);
        Ok(match e {
            Arith::Const(c) => CArith::Const(*c),
            Arith::Var(v) => CArith::Slot(
                slots.iter().rposition(|s| s == v).ok_or_else(|| ModelError::UnknownVariable(v.clone()))?,
            ),
            Arith::Add(a, b) => CArith::Add(rec(a)?, rec(b)?),
            Arith::Sub(a, b) => CArith::Sub(rec(a)?, rec(b)?),
            Arith::Mul(a, b) => CArith::Mul(rec(a)?, rec(b)?),
        })
    }

    fn wide(&self, vals: &[i64]) -> i128 {
        match self {
            CArith::Const(c) => *c as i128,
            CArith::Slot(i) => vals[*i] as i128,
            CArith::Add(a, b) => a.wide(vals).saturating_add(b.wide(vals)),
            CArith::Sub(a, b) => a.wide(vals).saturating_sub(b.wide(vals)),
            CArith::Mul(a, b) => a.wide(vals).saturating_mul(b.wide(vals)),
        }
    }

    pub fn eval(&self, vals: &[i64]) -> i64 {
        self.wide(vals).clamp(i64::MIN as i128, i64::MAX as i128) as i64
    }
}

#[derive(Debug, Clone)]
pub enum CGuard {
    Const(bool),
    Cmp(CmpOp, CArith, CArith),
    And(Box<CGuard>, Box<CGuard>),
    Or(Box<CGuard>, Box<CGuard>),
    Not(Box<CGuard>),
}

impl CGuard {
    pub fn compile(g: &Guard, space: &Space) -> Result<CGuard, ModelError> {
        CGuard::compile_in(g, &space.slots)
    }

    pub fn compile_in(g: &Guard, slots: &[VarName]) -> Result<CGuard, ModelError> {
        let rec = |a: &Guard| CGuard::compile_in(a, slots).map(Box::new);
        Ok(match g {
            Guard::True => CGuard::Const(true),
            Guard::False => CGuard::Const(false),
            Guard::Cmp(op, a, b) => CGuard::Cmp(*op, CArith::compile_in(a, slots)?, CArith::compile_in(b, slots)?),
            Guard::And(a, b) => CGuard::And(rec(a)?, rec(b)?),
            Guard::Or(a, b) => CGuard::Or(rec(a)?, rec(b)?),
            Guard::Not(a) => CGuard::Not(rec(a)?),
        })
    }

    pub fn eval(&self, vals: &[i64]) -> bool {
        match self {
            CGuard::Const(b) => *b,
            CGuard::Cmp(op, a, b) => op.apply(a.eval(vals), b.eval(vals)),
            CGuard::And(a, b) => a.eval(vals) && b.eval(vals),
            CGuard::Or(a, b) => a.eval(vals) || b.eval(vals),
            CGuard::Not(a) => !a.eval(vals),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub space: Arc<Space>,
    pub data: Vec<Entry>,
}

fn not_one_bounded(space: &Space, i: usize, v: &ExtQ) -> Arc<ModelError> {
    Arc::new(ModelError::NotOneBounded { value: v.clone(), state: space.state_of(i).to_string() })
}

pub fn e_add(a: &Entry, b: &Entry) -> Entry {
    Ok(a.clone()?.add(&b.clone()?))
}

/// Product where a zero left factor makes the right one irrelevant.
pub fn e_mul(a: &Entry, b: &Entry) -> Entry {
    match a {
        Ok(x) if x.is_zero() => Ok(ExtQ::zero()),
        Ok(x) => Ok(x.mul(b.as_ref().map_err(Arc::clone)?)),
        Err(e) => Err(e.clone()),
    }
}

pub fn e_min(a: &Entry, b: &Entry) -> Entry {
    Ok(a.clone()?.min_of(b.as_ref().map_err(Arc::clone)?))
}

pub fn e_max(a: &Entry, b: &Entry) -> Entry {
    Ok(a.clone()?.max_of(b.as_ref().map_err(Arc::clone)?))
}

impl Table {
    pub fn constant(space: &Arc<Space>, v: ExtQ) -> Table {
        Table { space: space.clone(), data: vec![Ok(v); space.len()] }
    }

    pub fn from_fn(space: &Arc<Space>, f: impl Fn(usize, usize) -> Entry) -> Table {
        let mut data = Vec::with_capacity(space.len());
        for s in 0..space.n_stacks {
            for h in 0..space.n_heaps {
                data.push(f(s, h));
            }
        }
        Table { space: space.clone(), data }
    }

    pub fn at(&self, s: usize, h: usize) -> &Entry {
        &self.data[self.space.index(s, h)]
    }

    pub fn get(&self, state: &ProgState) -> Option<&Entry> {
        self.space.state_index(state).map(|i| &self.data[i])
    }

    pub fn zip(&self, other: &Table, f: impl Fn(&Entry, &Entry) -> Entry) -> Table {
        Table { space: self.space.clone(), data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn map(&self, f: impl Fn(&Entry) -> Entry) -> Table {
        Table { space: self.space.clone(), data: self.data.iter().map(f).collect() }
    }

    /// `1 - X`, failing at entries above one.
    pub fn one_minus(&self) -> Table {
        let space = &self.space;
        Table {
            space: space.clone(),
            data: self
                .data
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let v = e.clone()?;
                    v.one_minus().ok_or_else(|| not_one_bounded(space, i, &v))
                })
                .collect(),
        }
    }

    /// Indices of states with at most `max_cells` cells.
    pub fn indices_within(&self, max_cells: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.data.len()).filter(move |i| self.space.cell_count(i % self.space.n_heaps) <= max_cells)
    }

    /// First entry above one among states with at most `max_cells` cells.
    pub fn first_above_one(&self, max_cells: usize) -> Option<(usize, ExtQ)> {
        self.indices_within(max_cells).find_map(|i| match &self.data[i] {
            Ok(v) if *v > ExtQ::one() => Some((i, v.clone())),
            _ => None,
        })
    }

    /// `X ⋆ Y`: maximum over partitions of the product.
    pub fn sepcon(&self, other: &Table) -> Table {
        let sp = self.space.clone();
        Table::from_fn(&sp, |s, h| {
            let mut acc = ExtQ::zero();
            for &h1 in sp.subheaps(h).iter() {
                let h1 = h1 as usize;
                let x = self.at(s, h1).as_ref().map_err(Arc::clone)?;
                if x.is_zero() {
                    continue;
                }
                let y = other.at(s, h - h1).as_ref().map_err(Arc::clone)?;
                if y.is_zero() {
                    continue;
                }
                let product = if x.is_one() { y.clone() } else { x.mul(y) };
                if product > acc {
                    acc = product;
                }
            }
            Ok(acc)
        })
    }

    fn sepcon_min(&self, other: &Table) -> Table {
        let sp = self.space.clone();
        Table::from_fn(&sp, |s, h| {
            let mut acc: Option<ExtQ> = None;
            for &h1 in sp.subheaps(h).iter() {
                let h1 = h1 as usize;
                let v = self.at(s, h1).clone()?.mul(&other.at(s, h - h1).clone()?);
                acc = Some(acc.map_or(v.clone(), |a| a.min_of(&v)));
            }
            Ok(acc.unwrap_or_else(ExtQ::zero))
        })
    }

    /// `P -* Y` for a 0/1 table `P`: infimum over satisfying extensions, `inf ∅ = ∞`.
    pub fn sepimp(&self, other: &Table) -> Table {
        self.over_extensions(other, ExtQ::Inf, false, |a, b| a.min_of(b))
    }

    /// `P -@ Y`: supremum over satisfying extensions, `sup ∅ = 0`, with `Y` one-bounded.
    pub fn err_sepimp(&self, other: &Table) -> Table {
        self.over_extensions(other, ExtQ::zero(), true, |a, b| a.max_of(b))
    }

    fn over_extensions(&self, other: &Table, unit: ExtQ, bounded: bool, combine: impl Fn(&ExtQ, &ExtQ) -> ExtQ) -> Table {
        let sp = self.space.clone();
        let full = sp.full_mask();
        Table::from_fn(&sp, |s, h| {
            let free = full & !sp.dom(h);
            let mut acc = unit.clone();
            for m in Space::submasks(free) {
                for &ext in sp.heaps_with_dom(m) {
                    let p = self.at(s, ext as usize).clone()?;
                    if !p.is_one() {
                        continue;
                    }
                    let joined = h + ext as usize;
                    let y = other.at(s, joined).clone()?;
                    if bounded && y > ExtQ::one() {
                        return Err(not_one_bounded(&sp, sp.index(s, joined), &y));
                    }
                    acc = combine(&acc, &y);
                }
            }
            Ok(acc)
        })
    }

    /// `X ● Y`: minimum over partitions of `1 - X + X·Y`, both one-bounded.
    pub fn err_sepcon(&self, other: &Table) -> Table {
        let sp = self.space.clone();
        Table::from_fn(&sp, |s, h| {
            let mut acc = ExtQ::one();
            for &h1 in sp.subheaps(h).iter() {
                let h1 = h1 as usize;
                let x = self.at(s, h1).clone()?;
                if x > ExtQ::one() {
                    return Err(not_one_bounded(&sp, sp.index(s, h1), &x));
                }
                if x.is_zero() {
                    continue;
                }
                let y = other.at(s, h - h1).clone()?;
                if y > ExtQ::one() {
                    return Err(not_one_bounded(&sp, sp.index(s, h - h1), &y));
                }
                let term = x.one_minus().expect("checked").add(&x.mul(&y));
                acc = acc.min_of(&term);
            }
            Ok(acc)
        })
    }

    /// Collapses the innermost slot of an extended space by maximum (`sup`) or minimum (`inf`).
    pub fn project(&self, outer: &Arc<Space>, sup: bool) -> Table {
        let block = outer.len();
        let nv = self.space.nv;
        let data = (0..block)
            .map(|i| {
                let mut acc: Option<&ExtQ> = None;
                for k in 0..nv {
                    let v = self.data[i + k * block].as_ref().map_err(Arc::clone)?;
                    acc = Some(match acc {
                        Some(p) if (sup && p >= v) || (!sup && p <= v) => p,
                        _ => v,
                    });
                }
                Ok(acc.expect("nonempty value interval").clone())
            })
            .collect();
        Table { space: outer.clone(), data }
    }
}

/// Tabulates an expectation over every state of `space`.
pub fn tabulate(e: &E, space: &Arc<Space>) -> Result<Table, ModelError> {
    tabulate_with(e, space, TabulateOptions::default())
}

/// Debug switches for [`tabulate_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TabulateOptions {
    /// Replaces the maximum in `⋆` by a minimum. Used to mutation-test the law harness.
    pub broken_sepcon: bool,
}

pub fn tabulate_with(e: &E, space: &Arc<Space>, options: TabulateOptions) -> Result<Table, ModelError> {
    let mut tabulator = Tabulator::new(space.clone(), options);
    let table = tabulator.table(e)?;
    drop(tabulator);
    Ok(Arc::try_unwrap(table).unwrap_or_else(|shared| (*shared).clone()))
}

/// Tabulates several expectations over one space, sharing common subexpressions.
pub struct Tabulator {
    space: Arc<Space>,
    cx: TabCx,
}

impl Tabulator {
    pub fn new(space: Arc<Space>, options: TabulateOptions) -> Tabulator {
        Tabulator { space, cx: TabCx { preds: PredSolver::new(), options, memo: HashMap::new() } }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn table(&mut self, e: &E) -> Result<Arc<Table>, ModelError> {
        tab(e, &self.space, &mut self.cx)
    }
}

struct TabCx {
    preds: PredSolver,
    options: TabulateOptions,
    memo: HashMap<(Vec<VarName>, E), Arc<Table>>,
}

/// Builds a table row by row: `row` sees the stack once and returns the per-heap function.
fn per_state<G: Fn(usize) -> Entry>(space: &Arc<Space>, row: impl Fn(&[i64]) -> G) -> Table {
    let mut data = Vec::with_capacity(space.len());
    for s in 0..space.n_stacks {
        let at_heap = row(space.stack(s));
        data.extend((0..space.n_heaps).map(&at_heap));
    }
    Table { space: space.clone(), data }
}

fn per_stack(space: &Arc<Space>, f: impl Fn(&[i64]) -> Entry) -> Table {
    let mut data = Vec::with_capacity(space.len());
    for s in 0..space.n_stacks {
        let v = f(space.stack(s));
        data.extend(std::iter::repeat_n(v, space.n_heaps));
    }
    Table { space: space.clone(), data }
}

fn tab(e: &E, space: &Arc<Space>, cx: &mut TabCx) -> Result<Arc<Table>, ModelError> {
    let key = (space.slots.clone(), e.clone());
    if let Some(t) = cx.memo.get(&key) {
        return Ok(t.clone());
    }
    let t = Arc::new(compute(e, space, cx)?);
    cx.memo.insert(key, t.clone());
    Ok(t)
}

fn compute(e: &E, space: &Arc<Space>, cx: &mut TabCx) -> Result<Table, ModelError> {
    let sp = space.clone();
    let ca = |a: &Arith| CArith::compile(a, space);
    Ok(match e {
        E::Const(c) => Table::constant(space, c.clone()),
        E::Iverson(g) => {
            let g = CGuard::compile(g, space)?;
            per_stack(space, |st| Ok(ExtQ::bool(g.eval(st))))
        }
        E::Emp => per_state(space, |_| |h| Ok(ExtQ::bool(h == 0))),
        E::Size => per_state(space, |_| |h| Ok(ExtQ::int(sp.cell_count(h) as u64))),
        E::PointsTo(a, vals) => {
            let a = ca(a)?;
            let vals: Vec<CArith> = vals.iter().map(ca).collect::<Result<_, _>>()?;
            per_state(space, |st| {
                let base = a.eval(st);
                let want: Vec<i64> = vals.iter().map(|v| v.eval(st)).collect();
                let sp = &sp;
                move |h| {
                    let ok = sp.cell_count(h) == want.len()
                        && want.iter().enumerate().all(|(i, v)| sp.cell(h, base + i as i64) == Some(*v));
                    Ok(ExtQ::bool(ok))
                }
            })
        }
        E::ValidPointer(a) => {
            let a = ca(a)?;
            per_state(space, |st| {
                let addr = a.eval(st);
                let sp = &sp;
                move |h| Ok(ExtQ::bool(sp.cell_count(h) == 1 && sp.cell(h, addr).is_some()))
            })
        }
        E::Contains(a, b) => {
            let (a, b) = (ca(a)?, ca(b)?);
            per_state(space, |st| {
                let (addr, val) = (a.eval(st), b.eval(st));
                let sp = &sp;
                move |h| Ok(ExtQ::bool(sp.cell(h, addr) == Some(val)))
            })
        }
        E::ContainsAny(a) => {
            let a = ca(a)?;
            per_state(space, |st| {
                let addr = a.eval(st);
                let sp = &sp;
                move |h| Ok(ExtQ::bool(sp.cell(h, addr).is_some()))
            })
        }
        E::Ls(a, b) | E::Len(a, b) => {
            let kind = if matches!(e, E::Ls(..)) { PredKind::Ls } else { PredKind::Len };
            pred_table(space, &mut cx.preds, kind, &[ca(a)?, ca(b)?])
        }
        E::Tree(a) => pred_table(space, &mut cx.preds, PredKind::Tree, &[ca(a)?]),
        E::Path(k, a) => pred_table(space, &mut cx.preds, PredKind::Path(*k), &[ca(a)?]),
        E::Add(a, b) => tab(a, space, cx)?.zip(&*tab(b, space, cx)?, e_add),
        E::Mul(a, b) => tab(a, space, cx)?.zip(&*tab(b, space, cx)?, e_mul),
        E::Monus(a, b) => tab(a, space, cx)?.zip(&*tab(b, space, cx)?, |x, y| Ok(x.clone()?.monus(&y.clone()?))),
        E::Max(a, b) => tab(a, space, cx)?.zip(&*tab(b, space, cx)?, e_max),
        E::Min(a, b) => tab(a, space, cx)?.zip(&*tab(b, space, cx)?, e_min),
        E::Sum(items) => {
            let mut acc = Table::constant(space, ExtQ::zero());
            for it in items {
                acc = acc.zip(&*tab(it, space, cx)?, e_add);
            }
            acc
        }
        E::Sep(items) => match items.split_first() {
            None => compute(&E::Emp, space, cx)?,
            Some((first, [])) => compute(first, space, cx)?,
            Some((first, rest)) => tab(first, space, cx)?.sepcon(&*tab(&E::Sep(rest.to_vec()), space, cx)?),
        },
        E::Sup(v, body) | E::Inf(v, body) => {
            let inner = space.extend(v)?;
            tab(body, &inner, cx)?.project(space, matches!(e, E::Sup(..)))
        }
        E::SepCon(a, b) if cx.options.broken_sepcon => tab(a, space, cx)?.sepcon_min(&*tab(b, space, cx)?),
        E::SepCon(a, b) => tab(a, space, cx)?.sepcon(&*tab(b, space, cx)?),
        E::SepImp(a, b) => tab(a, space, cx)?.sepimp(&*tab(b, space, cx)?),
        E::ErrSepCon(a, b) => tab(a, space, cx)?.err_sepcon(&*tab(b, space, cx)?),
        E::ErrSepImp(a, b) => tab(a, space, cx)?.err_sepimp(&*tab(b, space, cx)?),
        E::OneMinus(a) => tab(a, space, cx)?.one_minus(),
    })
}

fn pred_table(space: &Arc<Space>, preds: &mut PredSolver, kind: PredKind, args: &[CArith]) -> Table {
    let mut local: HashMap<(i64, i64), Arc<Vec<u64>>> = HashMap::new();
    let mut data = Vec::with_capacity(space.len());
    for s in 0..space.n_stacks {
        let st = space.stack(s);
        let first = args[0].eval(st);
        let second = args.get(1).map_or(0, |a| a.eval(st));
        let column = local.entry((first, second)).or_insert_with(|| space.pred_column(preds, kind, first, second));
        data.extend(column.iter().map(|v| Ok(ExtQ::int(*v))));
    }
    Table { space: space.clone(), data }
}

impl Space {
    fn pred_column(&self, preds: &mut PredSolver, kind: PredKind, first: i64, second: i64) -> Arc<Vec<u64>> {
        let key = (kind, first, second);
        if let Some(col) = self.heaps.columns.lock().expect("column cache").get(&key) {
            return col.clone();
        }
        let col: Arc<Vec<u64>> = Arc::new((0..self.n_heaps).map(|h| preds.eval(kind, &[first, second], &self.heap_of(h))).collect());
        self.heaps.columns.lock().expect("column cache").insert(key, col.clone());
        col
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expect::eval_expectation;
    use crate::parse::parse_expectation;

    #[test]
    fn index_round_trip() {
        let cfg = DomainConfig::tiny();
        let sp = Space::new(&cfg).unwrap();
        for i in (0..sp.len()).step_by(97) {
            let st = sp.state_of(i);
            assert_eq!(sp.state_index(&st), Some(i));
        }
    }

    #[test]
    fn table_agrees_with_pointwise() {
        let cfg = DomainConfig::new(&["x", "y"], -1, 3, 2).unwrap();
        let sp = Space::new(&cfg).unwrap();
        for text in [
            "x |-> y ** size",
            "x |-> - -* (size + [x = y])",
            "sup v. (x ~> v) * [v = y]",
            "min(ls(x, 0), 1) @* (1 - [emp])",
            "[x != 0] -@ (x |-> y)",
            "inf v. len(v, y) + tree(x)",
        ] {
            let e = parse_expectation(text).unwrap();
            let t = tabulate(&e, &sp).unwrap();
            for i in (0..sp.len()).step_by(7) {
                let st = sp.state_of(i);
                let direct = eval_expectation(&e, &st, &cfg);
                assert_eq!(t.data[i].clone().ok(), direct.ok(), "{text} at {st}");
            }
        }
    }
}
