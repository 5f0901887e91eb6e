//! Small-step MDP semantics, reachable fragments, and the expected-reward oracle.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::ModelError;
use crate::expect::table::{CArith, CGuard, Entry};
use crate::expect::{Evaluator, Expectation};
use crate::num::{ExtQ, Q};
use crate::sl::{satisfies, SlFormula};
use crate::state::{enumerate_states, DomainConfig, ExhaustionPolicy, Heap, ProgState, Stack};
use crate::syntax::{CmpOp, Guard, Program};
use crate::transformer::{transform, TransformerMode};

pub type NodeId = u32;

#[derive(Debug, Clone)]
enum Node {
    Skip,
    Assign(usize, CArith),
    Seq(NodeId, NodeId),
    Ite(CGuard, NodeId, NodeId),
    While(CGuard, NodeId),
    PChoice(NodeId, Q, NodeId),
    Alloc(usize, Vec<CArith>),
    Mutate(CArith, CArith),
    Lookup(usize, CArith),
    Free(CArith),
    Uniform(usize, CArith, CArith),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Control {
    /// Remaining statements, innermost last.
    Running(Vec<NodeId>),
    Terminated,
    Fault,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub control: Control,
    /// Values in the order of the configuration's variables.
    pub stack: Vec<i64>,
    pub heap: Heap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub action: u64,
    pub prob: Q,
    pub target: Configuration,
}

/// A program flattened into an arena, ready to execute over a bounded model.
#[derive(Debug, Clone)]
pub struct Machine {
    cfg: DomainConfig,
    nodes: Vec<Node>,
    sources: Vec<Program>,
    shared: HashMap<Program, NodeId>,
    root: NodeId,
}

impl Machine {
    pub fn new(c: &Program, cfg: &DomainConfig) -> Result<Machine, ModelError> {
        cfg.validate()?;
        let mut m = Machine { cfg: cfg.clone(), nodes: Vec::new(), sources: Vec::new(), shared: HashMap::new(), root: 0 };
        m.root = m.add(c)?;
        Ok(m)
    }

    pub fn config(&self) -> &DomainConfig {
        &self.cfg
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn slot(&self, x: &str) -> Result<usize, ModelError> {
        self.cfg.vars.iter().position(|v| v == x).ok_or_else(|| ModelError::UnknownVariable(x.to_string()))
    }

    // identical subprograms share one node, so their continuations coincide
    fn add(&mut self, c: &Program) -> Result<NodeId, ModelError> {
        if let Some(id) = self.shared.get(c) {
            return Ok(*id);
        }
        let vars = self.cfg.vars.clone();
        let ar = |e| CArith::compile_in(e, &vars);
        let node = match c {
            Program::Skip => Node::Skip,
            Program::Assign(x, e) => Node::Assign(self.slot(x)?, ar(e)?),
            Program::Seq(a, b) => Node::Seq(self.add(a)?, self.add(b)?),
            Program::Ite(g, a, b) => Node::Ite(CGuard::compile_in(g, &vars)?, self.add(a)?, self.add(b)?),
            Program::While(g, body) => Node::While(CGuard::compile_in(g, &vars)?, self.add(body)?),
            Program::PChoice(a, p, b) => Node::PChoice(self.add(a)?, p.clone(), self.add(b)?),
            Program::Alloc(x, es) => Node::Alloc(self.slot(x)?, es.iter().map(ar).collect::<Result<_, _>>()?),
            Program::Mutate(a, v) => Node::Mutate(ar(a)?, ar(v)?),
            Program::Lookup(x, e) => Node::Lookup(self.slot(x)?, ar(e)?),
            Program::Free(e) => Node::Free(ar(e)?),
            Program::Uniform(x, lo, hi) => Node::Uniform(self.slot(x)?, ar(lo)?, ar(hi)?),
        };
        self.nodes.push(node);
        self.sources.push(c.clone());
        let id = (self.nodes.len() - 1) as NodeId;
        self.shared.insert(c.clone(), id);
        Ok(id)
    }

    fn normalize(&self, mut cont: Vec<NodeId>, stack: Vec<i64>, heap: Heap) -> Configuration {
        while let Some(&top) = cont.last() {
            match &self.nodes[top as usize] {
                Node::Seq(a, b) => {
                    cont.pop();
                    cont.push(*b);
                    cont.push(*a);
                }
                _ => break,
            }
        }
        let control = if cont.is_empty() { Control::Terminated } else { Control::Running(cont) };
        Configuration { control, stack, heap }
    }

    /// The initial configuration for `state`.
    pub fn initial(&self, state: &ProgState) -> Result<Configuration, ModelError> {
        state.validate(&self.cfg)?;
        let stack = self
            .cfg
            .vars
            .iter()
            .map(|x| state.stack.get(x).ok_or_else(|| ModelError::UnknownVariable(x.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.normalize(vec![self.root], stack, state.heap.clone()))
    }

    pub fn state_of(&self, conf: &Configuration) -> ProgState {
        let stack = Stack(self.cfg.vars.iter().cloned().zip(conf.stack.iter().copied()).collect());
        ProgState::new(stack, conf.heap.clone())
    }

    /// Remaining program of a running configuration, rendered as source.
    pub fn render_control(&self, control: &Control) -> String {
        match control {
            Control::Terminated => "TERMINATED".into(),
            Control::Fault => "FAULT".into(),
            Control::Running(cont) => {
                cont.iter().rev().map(|n| self.sources[*n as usize].to_string()).collect::<Vec<_>>().join(" ; ")
            }
        }
    }

    fn checked(&self, v: i64, context: &str) -> Result<i64, ModelError> {
        self.cfg.check_value(v, context)
    }

    fn address(&self, heap: &Heap, a: i64) -> Option<i64> {
        if self.cfg.is_address(a) {
            heap.get(a)
        } else {
            None
        }
    }

    /// Successors of a running configuration; terminal ones have none.
    pub fn step(&self, conf: &Configuration) -> Result<Vec<Transition>, ModelError> {
        let Control::Running(cont) = &conf.control else { return Ok(vec![]) };
        let mut rest = cont.clone();
        let top = rest.pop().expect("running configurations are nonempty");
        let s = &conf.stack;
        let h = &conf.heap;
        let det = |cont: Vec<NodeId>, stack: Vec<i64>, heap: Heap| {
            vec![Transition { action: 0, prob: Q::one(), target: self.normalize(cont, stack, heap) }]
        };
        let fault = || {
            vec![Transition {
                action: 0,
                prob: Q::one(),
                target: Configuration { control: Control::Fault, stack: s.clone(), heap: h.clone() },
            }]
        };
        let with = |slot: usize, v: i64| {
            let mut out = s.clone();
            out[slot] = v;
            out
        };
        let mut out = match &self.nodes[top as usize] {
            Node::Skip => det(rest, s.clone(), h.clone()),
            Node::Seq(..) => unreachable!("sequences are expanded eagerly"),
            Node::Assign(x, e) => det(rest, with(*x, self.checked(e.eval(s), "assignment")?), h.clone()),
            Node::Ite(g, a, b) => {
                rest.push(if g.eval(s) { *a } else { *b });
                det(rest, s.clone(), h.clone())
            }
            Node::While(g, body) => {
                if g.eval(s) {
                    rest.push(top);
                    rest.push(*body);
                }
                det(rest, s.clone(), h.clone())
            }
            Node::PChoice(a, p, b) => {
                let mut out = Vec::new();
                for (branch, prob) in [(*a, p.clone()), (*b, Q::one().sub(p))] {
                    if !prob.is_zero() {
                        let mut cont = rest.clone();
                        cont.push(branch);
                        out.push(Transition { action: 0, prob, target: self.normalize(cont, s.clone(), h.clone()) });
                    }
                }
                out
            }
            Node::Uniform(x, lo, hi) => {
                let (l, u) = (lo.eval(s), hi.eval(s));
                if l > u {
                    return Err(ModelError::EmptyUniformRange { lo: l, hi: u });
                }
                let prob = Q::new(1, u - l + 1);
                let mut out = Vec::new();
                for v in l..=u {
                    let stack = with(*x, self.checked(v, "uniform assignment")?);
                    out.push(Transition { action: 0, prob: prob.clone(), target: self.normalize(rest.clone(), stack, h.clone()) });
                }
                out
            }
            Node::Alloc(x, es) => {
                let n = es.len() as i64;
                let blocks: Vec<i64> =
                    (1..=self.cfg.addrs as i64 - n + 1).filter(|u| (0..n).all(|i| !h.contains(u + i))).collect();
                if blocks.is_empty() {
                    return match self.cfg.exhaustion {
                        ExhaustionPolicy::Error => {
                            Err(ModelError::AddressExhausted { cells: es.len(), addrs: self.cfg.addrs })
                        }
                        ExhaustionPolicy::Fault => Ok(fault()),
                    };
                }
                let vals = es.iter().map(|e| self.checked(e.eval(s), "allocation")).collect::<Result<Vec<_>, _>>()?;
                blocks
                    .into_iter()
                    .map(|u| {
                        let mut heap = h.clone();
                        for (i, v) in vals.iter().enumerate() {
                            heap = heap.with(u + i as i64, *v);
                        }
                        Transition { action: u as u64, prob: Q::one(), target: self.normalize(rest.clone(), with(*x, u), heap) }
                    })
                    .collect()
            }
            Node::Mutate(a, v) => {
                let a = a.eval(s);
                match self.address(h, a) {
                    None => fault(),
                    Some(_) => det(rest, s.clone(), h.with(a, self.checked(v.eval(s), "heap mutation")?)),
                }
            }
            Node::Lookup(x, e) => match self.address(h, e.eval(s)) {
                None => fault(),
                Some(w) => det(rest, with(*x, w), h.clone()),
            },
            Node::Free(e) => {
                let a = e.eval(s);
                match self.address(h, a) {
                    None => fault(),
                    Some(_) => det(rest, s.clone(), h.without(a)),
                }
            }
        };
        merge_parallel(&mut out);
        Ok(out)
    }
}

fn merge_parallel(out: &mut Vec<Transition>) {
    let mut merged: Vec<Transition> = Vec::with_capacity(out.len());
    for t in out.drain(..) {
        match merged.iter_mut().find(|m| m.action == t.action && m.target == t.target) {
            Some(m) => m.prob = m.prob.add(&t.prob),
            None => merged.push(t),
        }
    }
    *out = merged;
}

/// Address renaming that preserves the semantics of programs which only compare,
/// copy and dereference addresses. Addresses named by constants stay fixed.
#[derive(Debug, Clone)]
pub struct Symmetry {
    fixed: BTreeSet<i64>,
    pool: Vec<i64>,
}

impl Symmetry {
    /// The reduction if `c` and `f` pass the syntactic check.
    pub fn detect(c: &Program, f: &Expectation, cfg: &DomainConfig) -> Option<Symmetry> {
        let mut consts = BTreeSet::new();
        if !program_equivariant(c, &mut consts) || !expectation_equivariant(f, &mut consts) {
            return None;
        }
        let fixed: BTreeSet<i64> = consts.into_iter().filter(|v| cfg.is_address(*v)).collect();
        let pool = (1..=cfg.addrs as i64).filter(|a| !fixed.contains(a)).collect();
        Some(Symmetry { fixed, pool })
    }

    fn movable(&self, v: i64) -> bool {
        v >= 1 && v <= (self.fixed.len() + self.pool.len()) as i64 && !self.fixed.contains(&v)
    }

    pub fn canonical(&self, conf: &Configuration) -> Configuration {
        let mut names: HashMap<i64, i64> = HashMap::new();
        let mut queue: VecDeque<i64> = VecDeque::new();
        let visit = |v: i64, names: &mut HashMap<i64, i64>, queue: &mut VecDeque<i64>| {
            if self.movable(v) && !names.contains_key(&v) {
                let fresh = self.pool[names.len()];
                names.insert(v, fresh);
                queue.push_back(v);
            }
        };
        let drain = |names: &mut HashMap<i64, i64>, queue: &mut VecDeque<i64>| {
            while let Some(a) = queue.pop_front() {
                if let Some(w) = conf.heap.get(a) {
                    visit(w, names, queue);
                }
            }
        };
        for v in &conf.stack {
            visit(*v, &mut names, &mut queue);
        }
        drain(&mut names, &mut queue);
        for a in &self.fixed {
            if let Some(w) = conf.heap.get(*a) {
                visit(w, &mut names, &mut queue);
            }
        }
        drain(&mut names, &mut queue);
        for a in conf.heap.addresses() {
            visit(a, &mut names, &mut queue);
            drain(&mut names, &mut queue);
        }
        let rename = |v: i64| names.get(&v).copied().unwrap_or(v);
        Configuration {
            control: conf.control.clone(),
            stack: conf.stack.iter().map(|v| rename(*v)).collect(),
            heap: Heap(conf.heap.cells().map(|(a, v)| (rename(a), rename(v))).collect()),
        }
    }
}

fn guard_equivariant(g: &Guard, consts: &mut BTreeSet<i64>) -> bool {
    match g {
        Guard::True | Guard::False => true,
        Guard::Cmp(op, a, b) => {
            a.constants_into(consts);
            b.constants_into(consts);
            matches!(op, CmpOp::Eq | CmpOp::Ne) && a.is_simple() && b.is_simple()
        }
        Guard::And(a, b) | Guard::Or(a, b) => guard_equivariant(a, consts) && guard_equivariant(b, consts),
        Guard::Not(a) => guard_equivariant(a, consts),
    }
}

fn simple(e: &crate::syntax::Arith, consts: &mut BTreeSet<i64>) -> bool {
    e.constants_into(consts);
    e.is_simple()
}

fn program_equivariant(c: &Program, consts: &mut BTreeSet<i64>) -> bool {
    match c {
        Program::Skip => true,
        Program::Assign(_, e) | Program::Lookup(_, e) | Program::Free(e) => simple(e, consts),
        Program::Mutate(a, b) => simple(a, consts) & simple(b, consts),
        Program::Seq(a, b) | Program::PChoice(a, _, b) => program_equivariant(a, consts) & program_equivariant(b, consts),
        Program::Ite(g, a, b) => {
            guard_equivariant(g, consts) & program_equivariant(a, consts) & program_equivariant(b, consts)
        }
        Program::While(g, body) => guard_equivariant(g, consts) & program_equivariant(body, consts),
        Program::Alloc(_, es) => es.len() == 1 && simple(&es[0], consts),
        Program::Uniform(..) => false,
    }
}

fn expectation_equivariant(e: &Expectation, consts: &mut BTreeSet<i64>) -> bool {
    use Expectation as E;
    let own = match e {
        E::Iverson(g) => guard_equivariant(g, consts),
        E::PointsTo(a, vs) => vs.len() == 1 && simple(a, consts) & simple(&vs[0], consts),
        E::ValidPointer(a) | E::ContainsAny(a) => simple(a, consts),
        E::Contains(a, b) | E::Ls(a, b) | E::Len(a, b) => simple(a, consts) & simple(b, consts),
        E::Tree(_) | E::Path(..) => false,
        _ => true,
    };
    own && e.children().into_iter().all(|c| expectation_equivariant(c, consts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Opt {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub cap: usize,
    pub symmetry: bool,
    pub max_iters: usize,
    pub tol: Q,
}

impl OracleOptions {
    pub fn for_config(cfg: &DomainConfig) -> OracleOptions {
        OracleOptions { cap: 2_000_000, symmetry: false, max_iters: cfg.loop_max_iters.max(100_000), tol: cfg.loop_tol.clone() }
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Running,
    Terminated,
    Fault,
    Error(Arc<ModelError>),
}

#[derive(Debug, Clone)]
pub struct FragmentNode {
    pub conf: Configuration,
    pub kind: NodeKind,
    /// Sorted by action.
    pub edges: Vec<(u64, Q, usize)>,
}

/// Reachable configurations from a set of initial states.
#[derive(Debug, Clone)]
pub struct Fragment {
    pub nodes: Vec<FragmentNode>,
    pub inits: Vec<usize>,
    pub symmetric: bool,
}

pub fn build_fragment(
    machine: &Machine,
    inits: &[ProgState],
    cap: usize,
    symmetry: Option<&Symmetry>,
) -> Result<Fragment, ModelError> {
    let canon = |c: Configuration| match symmetry {
        Some(sym) => sym.canonical(&c),
        None => c,
    };
    let mut index: HashMap<Configuration, usize> = HashMap::new();
    let mut nodes: Vec<FragmentNode> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |conf: Configuration, nodes: &mut Vec<FragmentNode>, queue: &mut VecDeque<usize>| -> Result<usize, ModelError> {
        if let Some(i) = index.get(&conf) {
            return Ok(*i);
        }
        if nodes.len() >= cap {
            return Err(ModelError::FragmentCap { cap, frontier: queue.len() });
        }
        let kind = match conf.control {
            Control::Running(_) => NodeKind::Running,
            Control::Terminated => NodeKind::Terminated,
            Control::Fault => NodeKind::Fault,
        };
        let i = nodes.len();
        index.insert(conf.clone(), i);
        nodes.push(FragmentNode { conf, kind, edges: Vec::new() });
        queue.push_back(i);
        Ok(i)
    };
    let mut init_ids = Vec::with_capacity(inits.len());
    for st in inits {
        let id = intern(canon(machine.initial(st)?), &mut nodes, &mut queue)?;
        init_ids.push(id);
    }
    while let Some(i) = queue.pop_front() {
        if !matches!(nodes[i].kind, NodeKind::Running) {
            continue;
        }
        match machine.step(&nodes[i].conf) {
            Err(e) => nodes[i].kind = NodeKind::Error(Arc::new(e)),
            Ok(ts) => {
                let mut edges = Vec::with_capacity(ts.len());
                for t in ts {
                    let j = intern(canon(t.target), &mut nodes, &mut queue)?;
                    edges.push((t.action, t.prob, j));
                }
                // renaming can make distinct targets coincide
                edges.sort_by_key(|edge| (edge.0, edge.2));
                edges.dedup_by(|later, earlier| {
                    if later.0 == earlier.0 && later.2 == earlier.2 {
                        earlier.1 = earlier.1.add(&later.1);
                        true
                    } else {
                        false
                    }
                });
                nodes[i].edges = edges;
            }
        }
    }
    Ok(Fragment { nodes, inits: init_ids, symmetric: symmetry.is_some() })
}

impl Fragment {
    /// Debug export of configurations and transitions.
    pub fn to_json(&self, machine: &Machine) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let control = match &n.kind {
                    NodeKind::Error(e) => format!("ERROR: {e}"),
                    _ => machine.render_control(&n.conf.control),
                };
                json!({
                    "id": i,
                    "control": control,
                    "state": machine.state_of(&n.conf).to_string(),
                    "transitions": n.edges.iter().map(|(a, p, t)| json!({"action": a, "prob": p, "target": t})).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "configurations": nodes, "inits": self.inits })
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// One entry per requested initial state.
    pub values: Vec<Entry>,
    pub residual: Option<ExtQ>,
    pub iterations: usize,
    pub configurations: usize,
}

/// Jacobi value iteration of the optimal expected terminal reward.
pub fn value_iteration(
    machine: &Machine,
    frag: &Fragment,
    f: &Expectation,
    opt: Opt,
    options: &OracleOptions,
) -> Result<(Vec<Entry>, Option<ExtQ>, usize), ModelError> {
    let eval = Evaluator::new(machine.config());
    let n = frag.nodes.len();
    let mut values: Vec<Entry> = Vec::with_capacity(n);
    for node in &frag.nodes {
        values.push(match &node.kind {
            NodeKind::Terminated => eval.eval(f, &machine.state_of(&node.conf)).map_err(Arc::new),
            NodeKind::Error(e) => Err(e.clone()),
            NodeKind::Running | NodeKind::Fault => Ok(ExtQ::zero()),
        });
    }
    let window = machine.node_count().max(1);
    let tol = ExtQ::fin(options.tol.clone());
    let mut snapshot = values.clone();
    let mut prev_delta: Option<ExtQ> = None;
    for iteration in 1..=options.max_iters {
        let mut next = values.clone();
        let mut changed = false;
        for (i, node) in frag.nodes.iter().enumerate() {
            if !matches!(node.kind, NodeKind::Running) || values[i].is_err() {
                continue;
            }
            let v = backup(&node.edges, &values, opt);
            match (&values[i], &v) {
                (Ok(old), Ok(new)) => {
                    assert!(new >= old, "value iterates must not decrease");
                    changed |= new != old;
                }
                _ => changed = true,
            }
            next[i] = v;
        }
        values = next;
        if !changed {
            return Ok((frag.inits.iter().map(|i| values[*i].clone()).collect(), None, iteration));
        }
        if iteration % window == 0 {
            let mut delta = ExtQ::zero();
            let mut poison = false;
            for (a, b) in snapshot.iter().zip(&values) {
                match (a, b) {
                    (Ok(a), Ok(b)) => delta = delta.max_of(&a.distance(b)),
                    (Err(_), Err(_)) => {}
                    _ => poison = true,
                }
            }
            if !poison && delta <= tol {
                if let Some(prev) = &prev_delta {
                    if let (Some(d), Some(p)) = (delta.finite(), prev.finite()) {
                        if !p.is_zero() && d < p {
                            let ratio = d.div(p);
                            let tail = ExtQ::fin(d.mul(&ratio).div(&Q::one().sub(&ratio)));
                            if tail <= tol {
                                let vals = frag.inits.iter().map(|i| values[*i].clone()).collect();
                                return Ok((vals, Some(tail.max_of(&delta)), iteration));
                            }
                        }
                    }
                }
            }
            prev_delta = Some(delta);
            snapshot = values.clone();
        }
    }
    Err(ModelError::BudgetExhausted { iterations: options.max_iters, residual: prev_delta.unwrap_or(ExtQ::Inf) })
}

fn backup(edges: &[(u64, Q, usize)], values: &[Entry], opt: Opt) -> Entry {
    let mut best: Option<ExtQ> = None;
    let mut i = 0;
    while i < edges.len() {
        let action = edges[i].0;
        let mut sum = ExtQ::zero();
        while i < edges.len() && edges[i].0 == action {
            let (_, p, t) = &edges[i];
            sum = sum.add(&values[*t].clone()?.scale(p));
            i += 1;
        }
        best = Some(match (best, opt) {
            (None, _) => sum,
            (Some(b), Opt::Min) => b.min_of(&sum),
            (Some(b), Opt::Max) => b.max_of(&sum),
        });
    }
    Ok(best.unwrap_or_else(ExtQ::zero))
}

/// Optimal expected reward of `f` on successful termination, per initial state.
pub fn expected_reward(
    opt: Opt,
    c: &Program,
    f: &Expectation,
    inits: &[ProgState],
    cfg: &DomainConfig,
    options: &OracleOptions,
) -> Result<OracleResult, ModelError> {
    let machine = Machine::new(c, cfg)?;
    let sym = if options.symmetry { Symmetry::detect(c, f, cfg) } else { None };
    if options.symmetry && sym.is_none() {
        return Err(ModelError::Unsupported("program or reward is not invariant under address renaming".into()));
    }
    let frag = build_fragment(&machine, inits, options.cap, sym.as_ref())?;
    let (values, residual, iterations) = value_iteration(&machine, &frag, f, opt, options)?;
    Ok(OracleResult { values, residual, iterations, configurations: frag.nodes.len() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    pub states: usize,
    pub exact: bool,
    pub agree: bool,
    pub max_difference: ExtQ,
    pub witness: Option<String>,
    pub wp_residual: Option<ExtQ>,
    pub oracle_residual: Option<ExtQ>,
}

/// Compares `wp` with the minimal expected reward at every enumerated state.
pub fn soundness_check(c: &Program, f: &Expectation, cfg: &DomainConfig, max_cells: usize, tol: &Q) -> Result<SoundnessReport, ModelError> {
    let mut cfg = cfg.clone();
    cfg.loop_tol = tol.clone();
    let wp = transform(TransformerMode::WP, c, f, &cfg, max_cells)?;
    let inits = enumerate_states(&cfg, max_cells);
    let oracle = expected_reward(Opt::Min, c, f, &inits, &cfg, &OracleOptions::for_config(&cfg))?;
    let exact = !c.has_loops();
    let bound = if exact { ExtQ::zero() } else { ExtQ::fin(tol.mul(&Q::from_int(2))) };
    let mut max_difference = ExtQ::zero();
    let mut witness = None;
    for (st, o) in inits.iter().zip(&oracle.values) {
        let w = wp.table.get(st).expect("enumerated states lie in the universe");
        let diff = match (w, o) {
            (Ok(a), Ok(b)) => a.distance(b),
            (Err(_), Err(_)) => ExtQ::zero(),
            _ => ExtQ::Inf,
        };
        if diff > max_difference {
            if diff > bound && witness.is_none() {
                witness = Some(st.to_string());
            }
            max_difference = diff;
        }
    }
    Ok(SoundnessReport {
        states: inits.len(),
        exact,
        agree: max_difference <= bound,
        max_difference,
        witness,
        wp_residual: wp.approx.map(|a| a.residual),
        oracle_residual: oracle.residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AllocPolicy {
    Lowest,
    Highest,
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub mean: f64,
    pub samples: usize,
    pub terminated: usize,
    pub faults: usize,
    pub timeouts: usize,
    pub errors: usize,
}

pub const SAMPLE_STEP_LIMIT: usize = 100_000;

/// Monte Carlo estimate of the expected reward under a fixed allocation policy.
pub fn sample_run(
    c: &Program,
    init: &ProgState,
    f: &Expectation,
    cfg: &DomainConfig,
    policy: AllocPolicy,
    samples: usize,
    seed: u64,
) -> Result<SampleReport, ModelError> {
    let machine = Machine::new(c, cfg)?;
    let eval = Evaluator::new(cfg);
    let start = machine.initial(init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SampleReport { mean: 0.0, samples, terminated: 0, faults: 0, timeouts: 0, errors: 0 };
    let mut total = 0.0;
    'runs: for _ in 0..samples.max(1) {
        let mut conf = start.clone();
        for _ in 0..SAMPLE_STEP_LIMIT {
            match conf.control {
                Control::Terminated => {
                    match eval.eval(f, &machine.state_of(&conf)) {
                        Ok(v) => {
                            report.terminated += 1;
                            total += v.to_f64();
                        }
                        Err(_) => report.errors += 1,
                    }
                    continue 'runs;
                }
                Control::Fault => {
                    report.faults += 1;
                    continue 'runs;
                }
                Control::Running(_) => {}
            }
            let ts = match machine.step(&conf) {
                Ok(ts) => ts,
                Err(_) => {
                    report.errors += 1;
                    continue 'runs;
                }
            };
            let chosen = if ts.iter().any(|t| t.action != 0) {
                match policy {
                    AllocPolicy::Lowest => ts.iter().min_by_key(|t| t.action),
                    AllocPolicy::Highest => ts.iter().max_by_key(|t| t.action),
                    AllocPolicy::SeededRandom => ts.get(rng.gen_range(0..ts.len())),
                }
                .expect("alloc has a successor")
            } else {
                let mut roll = Q::new(rng.gen_range(0..1_000_000_000), 1_000_000_000);
                let mut pick = ts.last().expect("running configuration has a successor");
                for t in &ts {
                    if roll < t.prob {
                        pick = t;
                        break;
                    }
                    roll = roll.sub(&t.prob);
                }
                pick
            };
            conf = chosen.target.clone();
        }
        report.timeouts += 1;
    }
    report.mean = total / samples.max(1) as f64;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TripleVerdict {
    Valid,
    Invalid { state: String, reason: String },
}

/// Total-correctness triple `{pre} c {post}` decided on the reachable fragment.
pub fn check_triple(
    c: &Program,
    pre: &SlFormula,
    post: &SlFormula,
    cfg: &DomainConfig,
    max_cells: usize,
) -> Result<TripleVerdict, ModelError> {
    let machine = Machine::new(c, cfg)?;
    let mut inits = Vec::new();
    for st in enumerate_states(cfg, max_cells) {
        if satisfies(pre, &st.stack, &st.heap, cfg)? {
            inits.push(st);
        }
    }
    let frag = build_fragment(&machine, &inits, OracleOptions::for_config(cfg).cap, None)?;
    let n = frag.nodes.len();
    // good: every path terminates without fault in a post-state
    let mut good = vec![false; n];
    let mut pending = vec![0usize; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut queue = VecDeque::new();
    for (i, node) in frag.nodes.iter().enumerate() {
        match &node.kind {
            NodeKind::Terminated => {
                let st = machine.state_of(&node.conf);
                if satisfies(post, &st.stack, &st.heap, cfg)? {
                    good[i] = true;
                    queue.push_back(i);
                }
            }
            NodeKind::Error(e) => return Err((**e).clone()),
            NodeKind::Fault => {}
            NodeKind::Running => {
                let mut targets: Vec<usize> = node.edges.iter().map(|e| e.2).collect();
                targets.sort_unstable();
                targets.dedup();
                pending[i] = targets.len();
                for t in targets {
                    preds[t].push(i);
                }
            }
        }
    }
    while let Some(j) = queue.pop_front() {
        for &p in &preds[j] {
            pending[p] -= 1;
            if pending[p] == 0 && !good[p] {
                good[p] = true;
                queue.push_back(p);
            }
        }
    }
    for (st, id) in inits.iter().zip(&frag.inits) {
        if !good[*id] {
            let reason = explain_failure(&frag, *id);
            return Ok(TripleVerdict::Invalid { state: st.to_string(), reason });
        }
    }
    Ok(TripleVerdict::Valid)
}

fn explain_failure(frag: &Fragment, start: usize) -> String {
    let mut seen = vec![false; frag.nodes.len()];
    let mut stack = vec![start];
    let mut fault = false;
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut seen[i], true) {
            continue;
        }
        if matches!(frag.nodes[i].kind, NodeKind::Fault) {
            fault = true;
        }
        stack.extend(frag.nodes[i].edges.iter().map(|e| e.2));
    }
    if fault {
        "a memory fault is reachable".into()
    } else {
        "nontermination or a terminal state violating the postcondition is reachable".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_expectation, parse_program};

    fn st(text: &str) -> ProgState {
        text.parse().unwrap()
    }

    #[test]
    fn free_of_dangling_pointer_faults() {
        let cfg = DomainConfig::new(&["x"], 0, 3, 3).unwrap();
        let m = Machine::new(&parse_program("free(x)").unwrap(), &cfg).unwrap();
        let ts = m.step(&m.initial(&st("x=2; heap=1:0")).unwrap()).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].target.control, Control::Fault);
        assert_eq!(ts[0].prob, Q::one());
    }

    #[test]
    fn alloc_branches_over_free_addresses() {
        let cfg = DomainConfig::new(&["x"], 0, 3, 3).unwrap();
        let m = Machine::new(&parse_program("x := new(0)").unwrap(), &cfg).unwrap();
        let ts = m.step(&m.initial(&st("x=0; heap=")).unwrap()).unwrap();
        let actions: Vec<u64> = ts.iter().map(|t| t.action).collect();
        assert_eq!(actions, vec![1, 2, 3]);
        for t in &ts {
            assert_eq!(t.target.stack, vec![t.action as i64]);
            assert_eq!(t.target.heap, Heap::from_cells(&[(t.action as i64, 0)]));
        }
    }

    #[test]
    fn probabilistic_choice_and_merging() {
        let cfg = DomainConfig::new(&["x"], 0, 3, 1).unwrap();
        let m = Machine::new(&parse_program("{ x := 1 } [1/3] { x := 2 }").unwrap(), &cfg).unwrap();
        let ts = m.step(&m.initial(&st("x=0; heap=")).unwrap()).unwrap();
        assert_eq!(ts.iter().map(|t| t.prob.clone()).collect::<Vec<_>>(), vec![Q::new(1, 3), Q::new(2, 3)]);
        let m = Machine::new(&parse_program("{ skip } [1/2] { skip }").unwrap(), &cfg).unwrap();
        let ts = m.step(&m.initial(&st("x=0; heap=")).unwrap()).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].prob, Q::one());
    }

    #[test]
    fn diverging_loop_has_zero_reward() {
        let cfg = DomainConfig::new(&["x"], 0, 1, 1).unwrap();
        let r = expected_reward(
            Opt::Min,
            &parse_program("while (true) { skip }").unwrap(),
            &parse_expectation("1").unwrap(),
            &[st("x=0; heap=")],
            &cfg,
            &OracleOptions::for_config(&cfg),
        )
        .unwrap();
        assert_eq!(r.values[0].clone().unwrap(), ExtQ::zero());
    }

    #[test]
    fn symmetry_preserves_values() {
        let cfg = DomainConfig::new(&["x", "c"], 0, 4, 4).unwrap();
        let prog = parse_program("c := 1 ; while (c = 1) { { c := 0 } [1/2] { x := new(x) } }").unwrap();
        let f = parse_expectation("len(x, 0)").unwrap();
        let mut cfg = cfg;
        cfg.exhaustion = ExhaustionPolicy::Fault;
        let inits = enumerate_states(&cfg, 2);
        let mut plain = OracleOptions::for_config(&cfg);
        let a = expected_reward(Opt::Min, &prog, &f, &inits, &cfg, &plain).unwrap();
        plain.symmetry = true;
        let b = expected_reward(Opt::Min, &prog, &f, &inits, &cfg, &plain).unwrap();
        assert!(b.configurations < a.configurations);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.clone().ok(), y.clone().ok());
        }
    }
}
