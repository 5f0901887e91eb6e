//! Bounded instantiations of the four worked case studies: randomized array shuffle,
//! faulty tree deletion, lossy list reversal and probabilistic list extension.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{ModelError, QslError};
use crate::expect::{eval_fixpoint_predicate, Expectation, PredKind};
use crate::num::{ExtQ, Q};
use crate::operational::{expected_reward, OracleOptions, Opt};
use crate::parse::{parse_expectation, parse_program};
use crate::state::{enumerate_heaps, DomainConfig, ExhaustionPolicy, Heap, ProgState, Stack};
use crate::syntax::Program;
use crate::transformer::{check_invariant, transform, InvariantDirection, TransformerMode, Verdict};

pub const RANDOMIZE: &str = include_str!("../programs/randomize.hp");
pub const LOSSY_REVERSAL: &str = include_str!("../programs/lossy_reversal.hp");
pub const LIST_EXTENSION: &str = include_str!("../programs/list_extension.hp");
pub const FAULTY_GC: &str = include_str!("../programs/faulty_gc.hp");

/// Lossy reversal invariant for the loop with postexpectation `len(r, 0)`.
pub const LOSSY_INVARIANT: &str = "(len(r, 0) ** ls(hd, 0)) + 1/2 * [hd != 0] * (len(hd, 0) ** ls(r, 0))";
/// List extension invariant for the loop with postexpectation `len(x, 0)`.
pub const LIST_INVARIANT: &str = "len(x, 0) + [c = 1]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseStudy {
    Randomize,
    Gc,
    LossyReversal,
    ListExtension,
}

impl CaseStudy {
    pub const ALL: [CaseStudy; 4] = [CaseStudy::Randomize, CaseStudy::Gc, CaseStudy::LossyReversal, CaseStudy::ListExtension];

    pub fn name(self) -> &'static str {
        match self {
            CaseStudy::Randomize => "randomize",
            CaseStudy::Gc => "gc",
            CaseStudy::LossyReversal => "lossy-reversal",
            CaseStudy::ListExtension => "list-extension",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            CaseStudy::Randomize => RANDOMIZE,
            CaseStudy::Gc => FAULTY_GC,
            CaseStudy::LossyReversal => LOSSY_REVERSAL,
            CaseStudy::ListExtension => LIST_EXTENSION,
        }
    }
}

impl fmt::Display for CaseStudy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseStudy {
    type Err = QslError;

    fn from_str(s: &str) -> Result<CaseStudy, QslError> {
        CaseStudy::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| QslError::Usage(format!("unknown case study `{s}` (expected randomize, gc, lossy-reversal or list-extension)")))
    }
}

/// How a computed number is compared with its reference value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    AtMost,
    AtLeast,
    Within(Q),
}

impl Relation {
    pub fn check(&self, computed: &ExtQ, reference: &ExtQ) -> bool {
        match self {
            Relation::Equal => computed == reference,
            Relation::AtMost => computed <= reference,
            Relation::AtLeast => computed >= reference,
            Relation::Within(tol) => computed.distance(reference) <= ExtQ::fin(tol.clone()),
        }
    }

    fn symbol(&self) -> String {
        match self {
            Relation::Equal => "=".into(),
            Relation::AtMost => "<=".into(),
            Relation::AtLeast => ">=".into(),
            Relation::Within(tol) => format!("~(±{tol})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseLine {
    pub label: String,
    pub computed: ExtQ,
    pub relation: Relation,
    pub reference: ExtQ,
    pub holds: bool,
}

impl CaseLine {
    fn new(label: impl Into<String>, computed: ExtQ, relation: Relation, reference: ExtQ) -> CaseLine {
        let holds = relation.check(&computed, &reference);
        CaseLine { label: label.into(), computed, relation, reference, holds }
    }
}

/// A named yes/no check such as an invariant verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseCheck {
    pub label: String,
    pub holds: bool,
    pub witness: Option<String>,
}

impl CaseCheck {
    fn from_verdict(label: impl Into<String>, verdict: Verdict) -> CaseCheck {
        let witness = match verdict {
            Verdict::Holds => None,
            Verdict::Counterexample { state, lhs, rhs } => Some(format!("{state}: {lhs} > {rhs}")),
        };
        CaseCheck { label: label.into(), holds: witness.is_none(), witness }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseReport {
    pub study: CaseStudy,
    pub claim: String,
    pub parameters: serde_json::Value,
    pub lines: Vec<CaseLine>,
    pub checks: Vec<CaseCheck>,
    pub residual: Option<ExtQ>,
}

impl CaseReport {
    pub fn holds(&self) -> bool {
        self.lines.iter().all(|l| l.holds) && self.checks.iter().all(|c| c.holds)
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{} ({})\nparameters: {}\n", self.study, self.claim, self.parameters);
        for l in &self.lines {
            let mark = if l.holds { "ok" } else { "FAIL" };
            out.push_str(&format!("  [{mark}] {}: computed {} {} reference {}\n", l.label, l.computed, l.relation.symbol(), l.reference));
        }
        for c in &self.checks {
            let mark = if c.holds { "ok" } else { "FAIL" };
            out.push_str(&format!("  [{mark}] {}", c.label));
            if let Some(w) = &c.witness {
                out.push_str(&format!(" (counterexample {w})"));
            }
            out.push('\n');
        }
        if let Some(r) = &self.residual {
            out.push_str(&format!("  residual: {r}\n"));
        }
        out
    }
}

fn program(text: &str) -> Program {
    parse_program(text).expect("bundled program parses")
}

fn expectation(text: &str) -> Expectation {
    parse_expectation(text).expect("bundled expectation parses")
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

fn permutations(items: &[i64]) -> Vec<Vec<i64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

fn unwrap_entry(entry: &Result<ExtQ, std::sync::Arc<ModelError>>) -> Result<ExtQ, ModelError> {
    entry.clone().map_err(|e| (*e).clone())
}

/// Splits `init; while (b) { body }` into its loop.
fn loop_of(c: &Program) -> (crate::syntax::Guard, Program) {
    match c {
        Program::Seq(_, rest) => loop_of(rest),
        Program::While(b, body) => (b.clone(), (**body).clone()),
        _ => panic!("bundled program has no trailing loop"),
    }
}

/// Shuffle of `n` distinct values: the probability of each target permutation.
pub fn randomize(n: usize) -> Result<CaseReport, QslError> {
    if !(1..=4).contains(&n) {
        return Err(QslError::Usage(format!("randomize supports 1 <= n <= 4, got {n}")));
    }
    let alphas: Vec<String> = (0..n).map(|k| format!("al{k}")).collect();
    let mut vars = vec!["a", "n", "i", "j", "u", "w"];
    vars.extend(alphas.iter().map(String::as_str));
    let cfg = DomainConfig::new(&vars, 0, n as i64, n)?;
    let c = program(RANDOMIZE);
    let post = expectation(&format!("a |-> {}", alphas.join(", ")));
    let contents: Vec<i64> = (1..=n as i64).collect();
    let heap = Heap::from_cells(&contents.iter().map(|&v| (v, v)).collect::<Vec<_>>());
    let targets = permutations(&contents);
    let inits: Vec<ProgState> = targets
        .iter()
        .map(|perm| {
            let mut stack = Stack::from_pairs(&[("a", 1), ("n", n as i64), ("i", 0), ("j", 0), ("u", 0), ("w", 0)]);
            for (name, v) in alphas.iter().zip(perm) {
                stack.set(name, *v);
            }
            ProgState::new(stack, heap.clone())
        })
        .collect();
    let oracle = expected_reward(Opt::Min, &c, &post, &inits, &cfg, &OracleOptions::for_config(&cfg))?;
    let bound = ExtQ::ratio(1, factorial(n));
    let mut lines = Vec::new();
    for (perm, value) in targets.iter().zip(&oracle.values) {
        lines.push(CaseLine::new(format!("P(array = {perm:?})"), unwrap_entry(value)?, Relation::Equal, bound.clone()));
    }
    let mut checks = Vec::new();
    if n == 2 {
        checks.push(randomize_invariant_check()?);
    }
    Ok(CaseReport {
        study: CaseStudy::Randomize,
        claim: format!("each permutation has probability at most 1/{}", factorial(n)),
        parameters: serde_json::json!({ "n": n, "addrs": n, "vmin": cfg.vmin, "vmax": cfg.vmax }),
        lines,
        checks,
        residual: oracle.residual,
    })
}

/// The shuffle invariant expanded by hand for `n = 2`; states with another `n` get ∞.
pub const RANDOMIZE_INVARIANT_2: &str = "[n != 2] * inf + [n = 2] * ( \
     [i = 0] * 1/2 * (((a |-> al0) ** ((a + 1) |-> al1)) + ((a |-> al1) ** ((a + 1) |-> al0))) \
   + [i = 1] * ((a |-> al0) ** ((a + 1) |-> al1)) \
   + [i != 0 && i != 1] * (a |-> al0, al1))";

fn randomize_invariant_check() -> Result<CaseCheck, QslError> {
    let cfg = DomainConfig::new(&["a", "n", "i", "j", "u", "w", "al0", "al1"], 0, 2, 2)?;
    let (b, body) = loop_of(&program(RANDOMIZE));
    let verdict = check_invariant(
        InvariantDirection::Upper,
        &b,
        &body,
        &expectation("a |-> al0, al1"),
        &expectation(RANDOMIZE_INVARIANT_2),
        &cfg,
        2,
    )?;
    Ok(CaseCheck::from_verdict("upper invariant for n = 2 (iterated separating conjunction, expanded)", verdict))
}

fn list_heap(len: usize) -> Heap {
    let cells: Vec<(i64, i64)> = (1..=len as i64).map(|a| (a, if a == len as i64 { 0 } else { a + 1 })).collect();
    Heap::from_cells(&cells)
}

/// Lossy reversal of the list `1 -> 2 -> ... -> len`.
pub fn lossy_reversal(len: usize) -> Result<CaseReport, QslError> {
    if !(0..=4).contains(&len) {
        return Err(QslError::Usage(format!("lossy-reversal supports 0 <= len <= 4, got {len}")));
    }
    let addrs = len.max(1);
    let cfg = DomainConfig::new(&["hd", "r", "t"], 0, addrs as i64, addrs)?;
    let c = program(LOSSY_REVERSAL);
    let post = expectation("len(r, 0)");
    let head = if len == 0 { 0 } else { 1 };
    let init = ProgState::new(Stack::from_pairs(&[("hd", head), ("r", 0), ("t", 0)]), list_heap(len));
    let oracle = expected_reward(Opt::Min, &c, &post, std::slice::from_ref(&init), &cfg, &OracleOptions::for_config(&cfg))?;
    let half = ExtQ::ratio(len as i64, 2);
    let computed = unwrap_entry(&oracle.values[0])?;
    let mut lines = vec![
        CaseLine::new("oracle expected reversed length", computed.clone(), Relation::Equal, half.clone()),
        CaseLine::new("bound: at most half the input length", computed, Relation::AtMost, half.clone()),
    ];
    let sem = transform(TransformerMode::WP, &c, &post, &cfg, addrs).map_err(QslError::Model)?;
    let relation = if sem.is_exact() { Relation::Equal } else { Relation::Within(cfg.loop_tol.mul(&Q::from_int(2))) };
    lines.push(CaseLine::new("wp at the initial state", sem.value(&init)?, relation, half));
    let (b, body) = loop_of(&c);
    let verdict = check_invariant(InvariantDirection::Upper, &b, &body, &post, &expectation(LOSSY_INVARIANT), &cfg, addrs)?;
    Ok(CaseReport {
        study: CaseStudy::LossyReversal,
        claim: "expected length of the reversed list is at most half the input length".into(),
        parameters: serde_json::json!({ "len": len, "addrs": addrs, "vmin": cfg.vmin, "vmax": cfg.vmax }),
        lines,
        checks: vec![CaseCheck::from_verdict(format!("upper invariant {LOSSY_INVARIANT}"), verdict)],
        residual: sem.approx.map(|a| a.residual),
    })
}

/// Exact expected length increase when `start` of `addrs` cells are in use and a
/// failed allocation is a fault: `1 - (addrs + 2) / 2^(addrs - start + 1)`.
pub fn list_extension_exact(start: usize, addrs: usize) -> ExtQ {
    let denominator = Q::from_int(2).pow((addrs - start + 1) as u32);
    let deficit = Q::from_int(addrs as i64 + 2).div(&denominator);
    ExtQ::fin(Q::one().sub(&deficit))
}

/// List extension starting from a list of `start` cells inside `1..=addrs`.
pub fn list_extension(start: usize, addrs: usize) -> Result<CaseReport, QslError> {
    if start > 3 || addrs < 4 || start >= addrs || addrs > 30 {
        return Err(QslError::Usage(format!("list-extension needs start <= 3 and start < addrs <= 30 with addrs >= 4, got start {start}, addrs {addrs}")));
    }
    let mut cfg = DomainConfig::new(&["x", "c"], 0, addrs as i64, addrs)?;
    cfg.exhaustion = ExhaustionPolicy::Fault;
    let c = program(LIST_EXTENSION);
    let post = expectation("len(x, 0)");
    let head = if start == 0 { 0 } else { 1 };
    let init = ProgState::new(Stack::from_pairs(&[("x", head), ("c", 0)]), list_heap(start));
    let options = OracleOptions { symmetry: true, tol: Q::zero(), ..OracleOptions::for_config(&cfg) };
    let oracle = expected_reward(Opt::Min, &c, &post, std::slice::from_ref(&init), &cfg, &options)?;
    let total = unwrap_entry(&oracle.values[0])?;
    let increase = total.monus(&ExtQ::int(start as u64));
    let lines = vec![
        CaseLine::new("expected length increase", increase.clone(), Relation::Within(Q::new(1, 1_000_000)), ExtQ::one()),
        CaseLine::new("bound: increase at most one", increase.clone(), Relation::AtMost, ExtQ::one()),
        CaseLine::new("closed form with a faulting allocator", increase, Relation::Equal, list_extension_exact(start, addrs)),
    ];
    let small = DomainConfig::new(&["x", "c"], 0, 4, 4)?;
    let (b, body) = loop_of(&c);
    let verdict = check_invariant(InvariantDirection::Upper, &b, &body, &post, &expectation(LIST_INVARIANT), &small, small.addrs - 1)?;
    Ok(CaseReport {
        study: CaseStudy::ListExtension,
        claim: "expected length increase is at most one".into(),
        parameters: serde_json::json!({
            "start": start,
            "addrs": addrs,
            "exhaustion": "fault",
            "symmetry_reduced_configurations": oracle.configurations,
            "invariant_model": { "addrs": small.addrs, "max_cells": small.addrs - 1 },
        }),
        lines,
        checks: vec![CaseCheck::from_verdict(format!("upper invariant {LIST_INVARIANT} (A = 4, at most 3 cells)"), verdict)],
        residual: oracle.residual,
    })
}

/// Faulty tree deletion on every tree with at most two nodes inside four cells.
pub fn faulty_gc() -> Result<CaseReport, QslError> {
    let addrs = 4;
    let cfg = DomainConfig::new(&["x0", "l0", "r0", "x1", "l1", "r1", "x2"], 0, addrs as i64 + 1, addrs)?;
    let c = program(FAULTY_GC);
    let post = expectation("[emp]");
    let shape = DomainConfig::new(&["x0"], 0, addrs as i64, addrs)?;
    let mut inits = Vec::new();
    for heap in enumerate_heaps(&shape, addrs) {
        for root in 0..=addrs as i64 {
            if eval_fixpoint_predicate(PredKind::Tree, &[root], &heap).is_one() {
                let stack = Stack::from_pairs(&[("x0", root), ("l0", 0), ("r0", 0), ("x1", 0), ("l1", 0), ("r1", 0), ("x2", 0)]);
                inits.push(ProgState::new(stack, heap.clone()));
            }
        }
    }
    let oracle = expected_reward(Opt::Min, &c, &post, &inits, &cfg, &OracleOptions::for_config(&cfg))?;
    let keep = Q::new(1, 2);
    let mut lines = Vec::new();
    for (state, value) in inits.iter().zip(&oracle.values) {
        let bound = ExtQ::fin(keep.pow(state.heap.len() as u32));
        lines.push(CaseLine::new(format!("wlp at {state}"), unwrap_entry(value)?, Relation::AtLeast, bound));
    }
    Ok(CaseReport {
        study: CaseStudy::Gc,
        claim: "wlp(delete(x))([emp]) >= [tree(x)] * (1 - p)^size with p = 1/2".into(),
        parameters: serde_json::json!({ "p": "1/2", "addrs": addrs, "max_nodes": 2, "tree_states": inits.len() }),
        lines,
        checks: Vec::new(),
        residual: oracle.residual,
    })
}

/// Runs a case study; `size` is `n`, `len` or the start length depending on the study.
pub fn run_case_study(study: CaseStudy, size: Option<usize>, addrs: Option<usize>) -> Result<CaseReport, QslError> {
    match study {
        CaseStudy::Randomize => randomize(size.unwrap_or(3)),
        CaseStudy::Gc => faulty_gc(),
        CaseStudy::LossyReversal => lossy_reversal(size.unwrap_or(2)),
        CaseStudy::ListExtension => list_extension(size.unwrap_or(1), addrs.unwrap_or(28)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_guard;

    #[test]
    fn bundled_programs_parse() {
        for study in CaseStudy::ALL {
            parse_program(study.source()).unwrap();
        }
        parse_guard("0 <= i && i < n").unwrap();
        for text in [LOSSY_INVARIANT, LIST_INVARIANT, RANDOMIZE_INVARIANT_2] {
            parse_expectation(text).unwrap();
        }
    }

    #[test]
    fn names_round_trip() {
        for study in CaseStudy::ALL {
            assert_eq!(study.name().parse::<CaseStudy>().unwrap(), study);
        }
    }

    #[test]
    fn closed_form_is_close_to_one_for_large_models() {
        let v = list_extension_exact(1, 28);
        assert!(v.distance(&ExtQ::one()) <= ExtQ::ratio(1, 1_000_000));
        assert_eq!(list_extension_exact(0, 1), ExtQ::fin(Q::one().sub(&Q::new(3, 4))));
    }
}
