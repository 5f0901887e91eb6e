//! Abstract syntax of heap-manipulating probabilistic guarded commands.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::num::Q;
use crate::state::Stack;

pub type VarName = String;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arith {
    Const(i64),
    Var(VarName),
    Add(Box<Arith>, Box<Arith>),
    Sub(Box<Arith>, Box<Arith>),
    Mul(Box<Arith>, Box<Arith>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Guard {
    True,
    False,
    Cmp(CmpOp, Arith, Arith),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Not(Box<Guard>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Program {
    Skip,
    Assign(VarName, Arith),
    Seq(Box<Program>, Box<Program>),
    Ite(Guard, Box<Program>, Box<Program>),
    While(Guard, Box<Program>),
    PChoice(Box<Program>, Q, Box<Program>),
    Alloc(VarName, Vec<Arith>),
    Mutate(Arith, Arith),
    Lookup(VarName, Arith),
    Free(Arith),
    Uniform(VarName, Arith, Arith),
}

fn clamp(v: i128) -> i64 {
    v.clamp(i64::MIN as i128, i64::MAX as i128) as i64
}

impl Arith {
    pub fn var(name: &str) -> Arith {
        Arith::Var(name.to_string())
    }

    pub fn add(a: Arith, b: Arith) -> Arith {
        Arith::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Arith, b: Arith) -> Arith {
        Arith::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Arith, b: Arith) -> Arith {
        Arith::Mul(Box::new(a), Box::new(b))
    }

    /// Evaluates under a variable lookup. Intermediate results saturate at the `i64` range,
    /// which lies far outside any bounded value domain.
    pub fn eval_with<F: Fn(&str) -> Option<i64>>(&self, lookup: &F) -> Result<i64, ModelError> {
        Ok(match self {
            Arith::Const(n) => *n,
            Arith::Var(x) => lookup(x).ok_or_else(|| ModelError::UnknownVariable(x.clone()))?,
            Arith::Add(a, b) => clamp(a.eval_with(lookup)? as i128 + b.eval_with(lookup)? as i128),
            Arith::Sub(a, b) => clamp(a.eval_with(lookup)? as i128 - b.eval_with(lookup)? as i128),
            Arith::Mul(a, b) => clamp(a.eval_with(lookup)? as i128 * b.eval_with(lookup)? as i128),
        })
    }

    pub fn eval(&self, stack: &Stack) -> Result<i64, ModelError> {
        self.eval_with(&|x| stack.get(x))
    }

    pub fn vars_into(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Arith::Const(_) => {}
            Arith::Var(x) => {
                out.insert(x.clone());
            }
            Arith::Add(a, b) | Arith::Sub(a, b) | Arith::Mul(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    /// Replaces every occurrence of `x` by `e`.
    pub fn substitute(&self, x: &str, e: &Arith) -> Arith {
        match self {
            Arith::Var(y) if y == x => e.clone(),
            Arith::Const(_) | Arith::Var(_) => self.clone(),
            Arith::Add(a, b) => Arith::add(a.substitute(x, e), b.substitute(x, e)),
            Arith::Sub(a, b) => Arith::sub(a.substitute(x, e), b.substitute(x, e)),
            Arith::Mul(a, b) => Arith::mul(a.substitute(x, e), b.substitute(x, e)),
        }
    }

    pub fn constants_into(&self, out: &mut BTreeSet<i64>) {
        match self {
            Arith::Const(n) => {
                out.insert(*n);
            }
            Arith::Var(_) => {}
            Arith::Add(a, b) | Arith::Sub(a, b) | Arith::Mul(a, b) => {
                a.constants_into(out);
                b.constants_into(out);
            }
        }
    }

    pub fn is_simple(&self) -> bool {
        matches!(self, Arith::Const(_) | Arith::Var(_))
    }
}

impl CmpOp {
    pub fn apply(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }
}

impl Guard {
    pub fn cmp(op: CmpOp, a: Arith, b: Arith) -> Guard {
        Guard::Cmp(op, a, b)
    }

    pub fn and(a: Guard, b: Guard) -> Guard {
        Guard::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Guard, b: Guard) -> Guard {
        Guard::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: Guard) -> Guard {
        Guard::Not(Box::new(a))
    }

    pub fn eval_with<F: Fn(&str) -> Option<i64>>(&self, lookup: &F) -> Result<bool, ModelError> {
        Ok(match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Cmp(op, a, b) => op.apply(a.eval_with(lookup)?, b.eval_with(lookup)?),
            Guard::And(a, b) => a.eval_with(lookup)? && b.eval_with(lookup)?,
            Guard::Or(a, b) => a.eval_with(lookup)? || b.eval_with(lookup)?,
            Guard::Not(a) => !a.eval_with(lookup)?,
        })
    }

    pub fn eval(&self, stack: &Stack) -> Result<bool, ModelError> {
        self.eval_with(&|x| stack.get(x))
    }

    pub fn vars_into(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Cmp(_, a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Guard::Not(a) => a.vars_into(out),
        }
    }

    pub fn substitute(&self, x: &str, e: &Arith) -> Guard {
        match self {
            Guard::True | Guard::False => self.clone(),
            Guard::Cmp(op, a, b) => Guard::Cmp(*op, a.substitute(x, e), b.substitute(x, e)),
            Guard::And(a, b) => Guard::and(a.substitute(x, e), b.substitute(x, e)),
            Guard::Or(a, b) => Guard::or(a.substitute(x, e), b.substitute(x, e)),
            Guard::Not(a) => Guard::not(a.substitute(x, e)),
        }
    }

    pub fn constants_into(&self, out: &mut BTreeSet<i64>) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Cmp(_, a, b) => {
                a.constants_into(out);
                b.constants_into(out);
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                a.constants_into(out);
                b.constants_into(out);
            }
            Guard::Not(a) => a.constants_into(out),
        }
    }
}

impl Program {
    pub fn seq(a: Program, b: Program) -> Program {
        Program::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of the given statements; `skip` when empty.
    pub fn seq_all(mut items: Vec<Program>) -> Program {
        let mut acc = match items.pop() {
            Some(last) => last,
            None => return Program::Skip,
        };
        while let Some(prev) = items.pop() {
            acc = Program::seq(prev, acc);
        }
        acc
    }

    pub fn ite(b: Guard, c1: Program, c2: Program) -> Program {
        Program::Ite(b, Box::new(c1), Box::new(c2))
    }

    pub fn while_loop(b: Guard, body: Program) -> Program {
        Program::While(b, Box::new(body))
    }

    pub fn pchoice(c1: Program, p: Q, c2: Program) -> Program {
        Program::PChoice(Box::new(c1), p, Box::new(c2))
    }

    /// Variables that the program may update.
    pub fn modified_vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.modified_into(&mut out);
        out
    }

    fn modified_into(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Program::Skip | Program::Free(_) | Program::Mutate(..) => {}
            Program::Assign(x, _) | Program::Alloc(x, _) | Program::Lookup(x, _) | Program::Uniform(x, ..) => {
                out.insert(x.clone());
            }
            Program::Seq(a, b) | Program::Ite(_, a, b) | Program::PChoice(a, _, b) => {
                a.modified_into(out);
                b.modified_into(out);
            }
            Program::While(_, body) => body.modified_into(out),
        }
    }

    /// All variables occurring anywhere in the program.
    pub fn vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    fn vars_into(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Program::Skip => {}
            Program::Assign(x, e) | Program::Lookup(x, e) => {
                out.insert(x.clone());
                e.vars_into(out);
            }
            Program::Alloc(x, es) => {
                out.insert(x.clone());
                es.iter().for_each(|e| e.vars_into(out));
            }
            Program::Uniform(x, lo, hi) => {
                out.insert(x.clone());
                lo.vars_into(out);
                hi.vars_into(out);
            }
            Program::Mutate(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Program::Free(e) => e.vars_into(out),
            Program::Seq(a, b) | Program::PChoice(a, _, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Program::Ite(g, a, b) => {
                g.vars_into(out);
                a.vars_into(out);
                b.vars_into(out);
            }
            Program::While(g, body) => {
                g.vars_into(out);
                body.vars_into(out);
            }
        }
    }

    pub fn has_loops(&self) -> bool {
        self.any(&|p| matches!(p, Program::While(..)))
    }

    pub fn has_alloc(&self) -> bool {
        self.any(&|p| matches!(p, Program::Alloc(..)))
    }

    pub fn is_probabilistic(&self) -> bool {
        self.any(&|p| matches!(p, Program::PChoice(..) | Program::Uniform(..)))
    }

    pub fn any(&self, pred: &dyn Fn(&Program) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Program::Seq(a, b) | Program::Ite(_, a, b) | Program::PChoice(a, _, b) => a.any(pred) || b.any(pred),
            Program::While(_, body) => body.any(pred),
            _ => false,
        }
    }

    /// Number of statement nodes.
    pub fn size(&self) -> usize {
        match self {
            Program::Seq(a, b) | Program::Ite(_, a, b) | Program::PChoice(a, _, b) => 1 + a.size() + b.size(),
            Program::While(_, body) => 1 + body.size(),
            _ => 1,
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

// Rendering. Precedence levels for arithmetic: 1 additive, 2 multiplicative, 3 atoms.
fn arith_level(e: &Arith) -> u8 {
    match e {
        Arith::Add(..) | Arith::Sub(..) => 1,
        Arith::Mul(..) => 2,
        Arith::Const(n) if *n < 0 => 2,
        _ => 3,
    }
}

fn write_arith(f: &mut fmt::Formatter<'_>, e: &Arith, min_level: u8) -> fmt::Result {
    if arith_level(e) < min_level {
        write!(f, "(")?;
        write_arith(f, e, 0)?;
        return write!(f, ")");
    }
    match e {
        Arith::Const(n) => write!(f, "{n}"),
        Arith::Var(x) => write!(f, "{x}"),
        Arith::Add(a, b) => {
            write_arith(f, a, 1)?;
            write!(f, " + ")?;
            write_arith(f, b, 2)
        }
        Arith::Sub(a, b) => {
            write_arith(f, a, 1)?;
            write!(f, " - ")?;
            write_arith(f, b, 2)
        }
        Arith::Mul(a, b) => {
            write_arith(f, a, 2)?;
            write!(f, " * ")?;
            write_arith(f, b, 3)
        }
    }
}

impl fmt::Display for Arith {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_arith(f, self, 0)
    }
}

// Guard levels: 1 or, 2 and, 3 not / atoms.
fn guard_level(g: &Guard) -> u8 {
    match g {
        Guard::Or(..) => 1,
        Guard::And(..) => 2,
        _ => 3,
    }
}

fn write_guard(f: &mut fmt::Formatter<'_>, g: &Guard, min_level: u8) -> fmt::Result {
    if guard_level(g) < min_level {
        write!(f, "(")?;
        write_guard(f, g, 0)?;
        return write!(f, ")");
    }
    match g {
        Guard::True => write!(f, "true"),
        Guard::False => write!(f, "false"),
        Guard::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
        Guard::Or(a, b) => {
            write_guard(f, a, 1)?;
            write!(f, " || ")?;
            write_guard(f, b, 2)
        }
        Guard::And(a, b) => {
            write_guard(f, a, 2)?;
            write!(f, " && ")?;
            write_guard(f, b, 3)
        }
        Guard::Not(a) => {
            write!(f, "!")?;
            match **a {
                Guard::Cmp(..) => {
                    write!(f, "(")?;
                    write_guard(f, a, 0)?;
                    write!(f, ")")
                }
                _ => write_guard(f, a, 3),
            }
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_guard(f, self, 0)
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, es: &[Arith]) -> fmt::Result {
    for (i, e) in es.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Program::Skip => write!(f, "skip"),
            Program::Assign(x, e) => write!(f, "{x} := {e}"),
            Program::Seq(a, b) => {
                if matches!(**a, Program::Seq(..)) {
                    write!(f, "{{ {a} }} ; {b}")
                } else {
                    write!(f, "{a} ; {b}")
                }
            }
            Program::Ite(g, a, b) => write!(f, "if ({g}) {{ {a} }} else {{ {b} }}"),
            Program::While(g, body) => write!(f, "while ({g}) {{ {body} }}"),
            Program::PChoice(a, p, b) => write!(f, "{{ {a} }} [{p}] {{ {b} }}"),
            Program::Alloc(x, es) => {
                write!(f, "{x} := new(")?;
                write_args(f, es)?;
                write!(f, ")")
            }
            Program::Mutate(a, b) => write!(f, "<{a}> := {b}"),
            Program::Lookup(x, e) => write!(f, "{x} := <{e}>"),
            Program::Free(e) => write!(f, "free({e})"),
            Program::Uniform(x, lo, hi) => write!(f, "{x} := uniform({lo}, {hi})"),
        }
    }
}

/// Evaluates an arithmetic expression over a stack.
pub fn eval_arith(e: &Arith, stack: &Stack) -> Result<i64, ModelError> {
    e.eval(stack)
}

/// Evaluates a guard over a stack.
pub fn eval_guard(b: &Guard, stack: &Stack) -> Result<bool, ModelError> {
    b.eval(stack)
}

/// Variables a program may update.
pub fn modified_vars(p: &Program) -> BTreeSet<VarName> {
    p.modified_vars()
}

/// Canonical concrete syntax.
pub fn render_program(p: &Program) -> String {
    p.render()
}
