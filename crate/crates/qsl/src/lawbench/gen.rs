//! Seeded generators for heaps, expectations, programs and separation logic formulas.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::QslError;
use crate::expect::Expectation as E;
use crate::num::{ExtQ, Q};
use crate::sl::SlFormula;
use crate::state::{DomainConfig, Heap};
use crate::syntax::{Arith, CmpOp, Guard, Program, VarName};

/// Budgets and toggles for random generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub expr_depth: usize,
    pub heap_cells: usize,
    pub program_len: usize,
    pub allow_inf: bool,
    pub allow_loops: bool,
    pub allow_alloc: bool,
    /// Maximum nesting of `sup`/`inf` binders in generated expectations.
    pub binder_depth: usize,
    pub cfg: DomainConfig,
    /// States with more cells are not compared.
    pub max_cells: usize,
}

impl Default for GenSpec {
    fn default() -> GenSpec {
        GenSpec {
            seed: 0,
            expr_depth: 3,
            heap_cells: 2,
            program_len: 4,
            allow_inf: true,
            allow_loops: false,
            allow_alloc: true,
            binder_depth: 1,
            cfg: DomainConfig::tiny(),
            max_cells: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Heap,
    Expectation,
    Predicate,
    Program,
}

impl FromStr for ArtifactKind {
    type Err = QslError;

    fn from_str(s: &str) -> Result<ArtifactKind, QslError> {
        match s {
            "heap" => Ok(ArtifactKind::Heap),
            "expectation" => Ok(ArtifactKind::Expectation),
            "predicate" => Ok(ArtifactKind::Predicate),
            "program" => Ok(ArtifactKind::Program),
            _ => Err(QslError::Usage(format!("unknown artifact kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Artifact {
    Heap(Heap),
    Expectation(E),
    Predicate(E),
    Program(Program),
}

impl fmt::Display for Artifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Artifact::Heap(h) => write!(f, "{h}"),
            Artifact::Expectation(e) | Artifact::Predicate(e) => write!(f, "{e}"),
            Artifact::Program(c) => write!(f, "{c}"),
        }
    }
}

/// One artifact drawn from `spec.seed`.
pub fn generate(kind: ArtifactKind, spec: &GenSpec) -> Artifact {
    let mut g = Gen::new(spec, spec.seed);
    match kind {
        ArtifactKind::Heap => Artifact::Heap(g.heap()),
        ArtifactKind::Expectation => Artifact::Expectation(g.expectation(spec.expr_depth)),
        ArtifactKind::Predicate => Artifact::Predicate(g.predicate(spec.expr_depth)),
        ArtifactKind::Program => Artifact::Program(g.program(spec.program_len)),
    }
}

/// Which statement forms a generated program may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProgramFeatures {
    pub probabilistic: bool,
    pub alloc: bool,
    pub loops: bool,
}

pub struct Gen<'s> {
    spec: &'s GenSpec,
    rng: ChaCha8Rng,
    /// Variables arithmetic may read.
    vars: Vec<VarName>,
    fresh: usize,
    open_binders: usize,
}

impl<'s> Gen<'s> {
    pub fn new(spec: &'s GenSpec, seed: u64) -> Gen<'s> {
        Gen { spec, rng: ChaCha8Rng::seed_from_u64(seed), vars: spec.cfg.vars.clone(), fresh: 0, open_binders: 0 }
    }

    pub fn spec(&self) -> &GenSpec {
        self.spec
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Runs `f` with arithmetic restricted to `vars` (bound variables stay visible).
    pub fn restricted<T>(&mut self, vars: Vec<VarName>, f: impl FnOnce(&mut Gen<'s>) -> T) -> T {
        let saved = std::mem::replace(&mut self.vars, vars);
        let out = f(self);
        self.vars = saved;
        out
    }

    fn fresh_var(&mut self) -> VarName {
        loop {
            let name = format!("q{}", self.fresh);
            self.fresh += 1;
            if !self.spec.cfg.vars.contains(&name) {
                return name;
            }
        }
    }

    fn bound<T>(&mut self, f: impl FnOnce(&mut Gen<'s>, &VarName) -> T) -> (VarName, T) {
        let v = self.fresh_var();
        self.vars.push(v.clone());
        self.open_binders += 1;
        let out = f(self, &v);
        self.open_binders -= 1;
        self.vars.pop();
        (v, out)
    }

    fn can_bind(&self) -> bool {
        self.open_binders < self.spec.binder_depth
    }

    pub fn value(&mut self) -> i64 {
        let cfg = &self.spec.cfg;
        self.rng.gen_range(cfg.vmin..=cfg.vmax)
    }

    /// Mostly addresses, sometimes 0 or just outside the address range.
    pub fn pointer_value(&mut self) -> i64 {
        let addrs = self.spec.cfg.addrs as i64;
        let v = if self.chance(0.8) { self.rng.gen_range(1..=addrs) } else { self.rng.gen_range(0..=addrs + 1) };
        v.clamp(self.spec.cfg.vmin, self.spec.cfg.vmax)
    }

    pub fn heap(&mut self) -> Heap {
        let addrs = self.spec.cfg.addrs;
        let cells = self.rng.gen_range(0..=self.spec.heap_cells.min(addrs));
        let mut pool: Vec<i64> = (1..=addrs as i64).collect();
        pool.shuffle(&mut self.rng);
        let mut heap = Heap::empty();
        for &a in &pool[..cells] {
            let v = self.value();
            heap = heap.with(a, v);
        }
        heap
    }

    pub fn var(&mut self) -> Option<VarName> {
        self.vars.choose(&mut self.rng).cloned()
    }

    pub fn arith(&mut self) -> Arith {
        match (self.rng.gen_range(0..10), self.var()) {
            (0..=5, Some(v)) => Arith::Var(v),
            (6, Some(v)) => Arith::add(Arith::Var(v), Arith::Const(1)),
            _ => Arith::Const(self.value()),
        }
    }

    pub fn pointer(&mut self) -> Arith {
        match (self.rng.gen_range(0..10), self.var()) {
            (0..=5, Some(v)) => Arith::Var(v),
            _ => Arith::Const(self.pointer_value()),
        }
    }

    pub fn guard(&mut self, depth: usize) -> Guard {
        if depth == 0 || self.chance(0.6) {
            let op = *[CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le].choose(&mut self.rng).expect("nonempty");
            return Guard::cmp(op, self.arith(), self.arith());
        }
        match self.rng.gen_range(0..3) {
            0 => Guard::and(self.guard(depth - 1), self.guard(depth - 1)),
            1 => Guard::or(self.guard(depth - 1), self.guard(depth - 1)),
            _ => Guard::not(self.guard(depth - 1)),
        }
    }

    pub fn constant(&mut self) -> ExtQ {
        let choices = [ExtQ::zero(), ExtQ::one(), ExtQ::ratio(1, 2), ExtQ::int(2), ExtQ::ratio(1, 3), ExtQ::int(3)];
        if self.spec.allow_inf && self.chance(0.1) {
            return ExtQ::Inf;
        }
        choices.choose(&mut self.rng).expect("nonempty").clone()
    }

    pub fn probability(&mut self) -> Q {
        [Q::new(1, 2), Q::new(1, 3), Q::new(2, 3), Q::new(1, 4)].choose(&mut self.rng).expect("nonempty").clone()
    }

    /// A positive scalar for linearity checks.
    pub fn scalar(&mut self) -> Q {
        [Q::new(1, 2), Q::new(1, 3), Q::from_int(2), Q::new(5, 2), Q::from_int(0), Q::from_int(1)].choose(&mut self.rng).expect("nonempty").clone()
    }

    fn heap_atom(&mut self, zero_one: bool) -> E {
        match self.rng.gen_range(0..if zero_one { 7 } else { 10 }) {
            0 => E::Emp,
            1 => E::pt(self.pointer(), self.arith()),
            2 => E::PointsTo(self.pointer(), vec![self.arith(), self.arith()]),
            3 => E::ValidPointer(self.pointer()),
            4 => E::Contains(self.pointer(), self.arith()),
            5 => E::ContainsAny(self.pointer()),
            6 => {
                if self.chance(0.8) {
                    E::Ls(self.pointer(), self.pointer())
                } else {
                    E::Tree(self.pointer())
                }
            }
            7 => E::Size,
            8 => E::Len(self.pointer(), self.pointer()),
            _ => E::Path(self.rng.gen_range(1..=2), self.pointer()),
        }
    }

    pub fn expectation(&mut self, depth: usize) -> E {
        if depth == 0 || self.chance(0.3) {
            return match self.rng.gen_range(0..4) {
                0 => E::Const(self.constant()),
                1 => E::iverson(self.guard(1)),
                _ => self.heap_atom(false),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..12) {
            0 => E::add(self.expectation(d), self.expectation(d)),
            1 => E::mul(self.expectation(d), self.expectation(d)),
            2 => E::monus(self.expectation(d), self.expectation(d)),
            3 => E::max(self.expectation(d), self.expectation(d)),
            4 => E::min(self.expectation(d), self.expectation(d)),
            5 | 6 => E::sepcon(self.expectation(d), self.expectation(d)),
            7 => E::sepimp(self.predicate(d), self.expectation(d)),
            8 | 9 if !self.can_bind() => E::sepcon(self.expectation(d), self.expectation(d)),
            8 => {
                let (v, body) = self.bound(|g, _| g.expectation(d));
                E::Sup(v, Box::new(body))
            }
            9 => {
                let (v, body) = self.bound(|g, _| g.expectation(d));
                E::Inf(v, Box::new(body))
            }
            10 => E::one_minus(self.predicate(d)),
            _ => E::mul(E::Const(self.constant()), self.expectation(d)),
        }
    }

    /// Syntactically 0/1-valued expectations, legal left operands of `-*`.
    pub fn predicate(&mut self, depth: usize) -> E {
        if depth == 0 || self.chance(0.35) {
            return match self.rng.gen_range(0..4) {
                0 => E::Const(if self.chance(0.5) { ExtQ::zero() } else { ExtQ::one() }),
                1 => E::iverson(self.guard(1)),
                _ => self.heap_atom(true),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 => E::mul(self.predicate(d), self.predicate(d)),
            1 => E::max(self.predicate(d), self.predicate(d)),
            2 => E::min(self.predicate(d), self.predicate(d)),
            3 | 4 => E::sepcon(self.predicate(d), self.predicate(d)),
            5 | 6 if !self.can_bind() => E::sepcon(self.predicate(d), self.predicate(d)),
            5 => {
                let (v, body) = self.bound(|g, _| g.predicate(d));
                E::Sup(v, Box::new(body))
            }
            6 => {
                let (v, body) = self.bound(|g, _| g.predicate(d));
                E::Inf(v, Box::new(body))
            }
            7 => E::one_minus(self.predicate(d)),
            _ => E::min(E::one(), E::sepimp(self.predicate(d), self.predicate(d))),
        }
    }

    /// Expectations bounded by one, including the landscape connectives.
    pub fn one_bounded(&mut self, depth: usize) -> E {
        if depth == 0 || self.chance(0.3) {
            return if self.chance(0.3) {
                E::mul(E::Const(ExtQ::fin(self.probability())), self.predicate(1))
            } else {
                self.predicate(1)
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 => E::mul(self.one_bounded(d), self.one_bounded(d)),
            1 => E::max(self.one_bounded(d), self.one_bounded(d)),
            2 => E::min(self.one_bounded(d), self.one_bounded(d)),
            3 => E::sepcon(self.one_bounded(d), self.one_bounded(d)),
            4 => E::err_sepcon(self.one_bounded(d), self.one_bounded(d)),
            5 => E::err_sepimp(self.predicate(d), self.one_bounded(d)),
            6 => {
                let p = self.probability();
                let rest = Q::one().sub(&p);
                E::add(E::mul(E::Const(ExtQ::fin(p)), self.one_bounded(d)), E::mul(E::Const(ExtQ::fin(rest)), self.one_bounded(d)))
            }
            7 => E::one_minus(self.one_bounded(d)),
            _ => E::min(E::one(), self.expectation(d)),
        }
    }

    /// Heap-independent expectations over the current variables.
    pub fn pure(&mut self, depth: usize) -> E {
        if depth == 0 || self.chance(0.35) {
            return if self.chance(0.4) { E::Const(self.constant()) } else { E::iverson(self.guard(1)) };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..5) {
            0 => E::add(self.pure(d), self.pure(d)),
            1 => E::mul(self.pure(d), self.pure(d)),
            2 => E::max(self.pure(d), self.pure(d)),
            3 => E::min(self.pure(d), self.pure(d)),
            _ if !self.can_bind() => E::add(self.pure(d), self.pure(d)),
            _ => {
                let (v, body) = self.bound(|g, _| g.pure(d));
                E::Sup(v, Box::new(body))
            }
        }
    }

    /// Expectations that can only grow under heap extension.
    pub fn intuitionistic(&mut self, depth: usize) -> E {
        if depth == 0 || self.chance(0.3) {
            return match self.rng.gen_range(0..6) {
                0 => E::Contains(self.pointer(), self.arith()),
                1 => E::ContainsAny(self.pointer()),
                2 => E::Size,
                3 => E::Const(self.constant()),
                4 => E::iverson(self.guard(1)),
                _ => E::sepcon(self.expectation(depth.saturating_sub(1)), E::one()),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..6) {
            0 => E::add(self.intuitionistic(d), self.intuitionistic(d)),
            1 => E::mul(self.intuitionistic(d), self.intuitionistic(d)),
            2 => E::max(self.intuitionistic(d), self.intuitionistic(d)),
            3 => E::min(self.intuitionistic(d), self.intuitionistic(d)),
            4 => E::sepcon(self.intuitionistic(d), self.intuitionistic(d)),
            _ => E::sepcon(self.expectation(d), E::one()),
        }
    }

    pub fn program(&mut self, len: usize) -> Program {
        let features = ProgramFeatures { probabilistic: true, alloc: self.spec.allow_alloc, loops: self.spec.allow_loops };
        self.program_with(len, features)
    }

    pub fn program_with(&mut self, len: usize, features: ProgramFeatures) -> Program {
        let targets = self.spec.cfg.vars.clone();
        let mut loop_used = !features.loops;
        self.block(len.max(1), features, &targets, &mut loop_used)
    }

    fn block(&mut self, len: usize, features: ProgramFeatures, targets: &[VarName], loop_used: &mut bool) -> Program {
        let n = self.rng.gen_range(1..=len);
        let stmts = (0..n).map(|_| self.statement(len / 2, features, targets, loop_used)).collect();
        Program::seq_all(stmts)
    }

    fn target(&mut self, targets: &[VarName]) -> Option<VarName> {
        targets.choose(&mut self.rng).cloned()
    }

    fn statement(&mut self, budget: usize, features: ProgramFeatures, targets: &[VarName], loop_used: &mut bool) -> Program {
        loop {
            let pick = self.rng.gen_range(0..20);
            let target = self.target(targets);
            let stmt = match (pick, target) {
                (0, _) => Program::Skip,
                (1..=3, Some(x)) => Program::Assign(x, self.arith()),
                (4..=5, Some(x)) => Program::Lookup(x, self.pointer()),
                (6..=7, _) => Program::Mutate(self.pointer(), self.arith()),
                (8..=9, _) => Program::Free(self.pointer()),
                (10..=11, Some(x)) if features.alloc => {
                    let n = if self.chance(0.8) { 1 } else { 2 };
                    Program::Alloc(x, (0..n).map(|_| self.arith()).collect())
                }
                (12..=13, _) if budget > 0 => Program::ite(
                    self.guard(1),
                    self.block(budget, features, targets, loop_used),
                    self.block(budget, features, targets, loop_used),
                ),
                (14..=16, _) if features.probabilistic && budget > 0 => Program::pchoice(
                    self.block(budget, features, targets, loop_used),
                    self.probability(),
                    self.block(budget, features, targets, loop_used),
                ),
                (14..=16, _) if features.probabilistic => {
                    Program::pchoice(Program::Skip, self.probability(), self.statement(0, features, targets, loop_used))
                }
                (17, Some(x)) if features.probabilistic => {
                    let lo = self.rng.gen_range(self.spec.cfg.vmin..=self.spec.cfg.vmax);
                    let hi = self.rng.gen_range(lo..=self.spec.cfg.vmax.min(lo + 2));
                    Program::Uniform(x, Arith::Const(lo), Arith::Const(hi))
                }
                (18..=19, Some(x)) if !*loop_used => {
                    *loop_used = true;
                    self.bounded_loop(x, budget, features, targets)
                }
                _ => continue,
            };
            return stmt;
        }
    }

    /// A loop whose counter `x` is not written by the body: either a counting loop or
    /// a loop left with some probability in every round.
    fn bounded_loop(&mut self, x: VarName, budget: usize, features: ProgramFeatures, targets: &[VarName]) -> Program {
        let others: Vec<VarName> = targets.iter().filter(|v| **v != x).cloned().collect();
        let mut no_nested = true;
        let body = if others.is_empty() { Program::Skip } else { self.block(budget.max(1), features, &others, &mut no_nested) };
        let (vmin, vmax) = (self.spec.cfg.vmin, self.spec.cfg.vmax);
        if features.probabilistic && self.chance(0.5) {
            let stay = self.rng.gen_range(vmin..=vmax);
            let leave = if stay == vmax { vmin } else { stay + 1 };
            let exit = Program::pchoice(Program::Assign(x.clone(), Arith::Const(leave)), self.probability(), Program::Skip);
            Program::while_loop(Guard::cmp(CmpOp::Eq, Arith::var(&x), Arith::Const(stay)), Program::seq(body, exit))
        } else {
            let bound = self.rng.gen_range(vmin..=vmax);
            let step = Program::Assign(x.clone(), Arith::add(Arith::var(&x), Arith::Const(1)));
            Program::while_loop(Guard::cmp(CmpOp::Lt, Arith::var(&x), Arith::Const(bound)), Program::seq(body, step))
        }
    }

    pub fn formula(&mut self, depth: usize) -> SlFormula {
        if depth == 0 || self.chance(0.3) {
            return match self.rng.gen_range(0..5) {
                0 => SlFormula::Pure(self.guard(1)),
                1 => SlFormula::Emp,
                2 => SlFormula::Pure(Guard::True),
                _ => SlFormula::PointsTo(self.pointer(), self.arith()),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..6) {
            0 => SlFormula::and(self.formula(d), self.formula(d)),
            1 => SlFormula::not(self.formula(d)),
            2 => {
                let (v, body) = self.bound(|g, _| g.formula(d));
                SlFormula::Exists(v, Box::new(body))
            }
            3 | 4 => SlFormula::star(self.formula(d), self.formula(d)),
            _ => SlFormula::wand(self.formula(d), self.formula(d)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heaps_respect_budget() {
        let spec = GenSpec { heap_cells: 2, ..GenSpec::default() };
        for seed in 0..200 {
            let Artifact::Heap(h) = generate(ArtifactKind::Heap, &GenSpec { seed, ..spec.clone() }) else { panic!() };
            assert!(h.len() <= 2);
            assert!(h.addresses().iter().all(|a| (1..=3).contains(a)));
        }
    }

    #[test]
    fn same_seed_same_artifact() {
        for kind in [ArtifactKind::Heap, ArtifactKind::Expectation, ArtifactKind::Predicate, ArtifactKind::Program] {
            let spec = GenSpec { seed: 42, ..GenSpec::default() };
            assert_eq!(generate(kind, &spec), generate(kind, &spec));
        }
    }
}
