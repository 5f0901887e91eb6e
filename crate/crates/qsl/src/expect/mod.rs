//! Quantitative expectations: syntax, substitution and rendering.

mod eval;
pub mod pred;
pub mod table;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::num::ExtQ;
use crate::syntax::{Arith, Guard, VarName};

pub use eval::{classify_expectation, entails, eval_expectation, Classification, Entailment, Evaluator};
pub use pred::{eval_fixpoint_predicate, PredKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expectation {
    Const(ExtQ),
    Iverson(Guard),
    Emp,
    /// `e |-> e1,...,en`: the heap is exactly the block starting at `e`.
    PointsTo(Arith, Vec<Arith>),
    /// `e |-> -`: the heap is exactly one cell at `e`.
    ValidPointer(Arith),
    /// `e ~> e'`, i.e. `(e |-> e') ** 1`.
    Contains(Arith, Arith),
    /// `e ~> -`.
    ContainsAny(Arith),
    Size,
    Ls(Arith, Arith),
    Len(Arith, Arith),
    Tree(Arith),
    Path(usize, Arith),
    Add(Box<Expectation>, Box<Expectation>),
    Mul(Box<Expectation>, Box<Expectation>),
    Monus(Box<Expectation>, Box<Expectation>),
    Max(Box<Expectation>, Box<Expectation>),
    Min(Box<Expectation>, Box<Expectation>),
    Sum(Vec<Expectation>),
    Sep(Vec<Expectation>),
    Sup(VarName, Box<Expectation>),
    Inf(VarName, Box<Expectation>),
    SepCon(Box<Expectation>, Box<Expectation>),
    SepImp(Box<Expectation>, Box<Expectation>),
    ErrSepCon(Box<Expectation>, Box<Expectation>),
    ErrSepImp(Box<Expectation>, Box<Expectation>),
    OneMinus(Box<Expectation>),
}

use Expectation as E;

impl Expectation {
    pub fn constant(v: ExtQ) -> E {
        E::Const(v)
    }

    pub fn zero() -> E {
        E::Const(ExtQ::zero())
    }

    pub fn one() -> E {
        E::Const(ExtQ::one())
    }

    pub fn add(a: E, b: E) -> E {
        E::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: E, b: E) -> E {
        E::Mul(Box::new(a), Box::new(b))
    }

    pub fn monus(a: E, b: E) -> E {
        E::Monus(Box::new(a), Box::new(b))
    }

    pub fn max(a: E, b: E) -> E {
        E::Max(Box::new(a), Box::new(b))
    }

    pub fn min(a: E, b: E) -> E {
        E::Min(Box::new(a), Box::new(b))
    }

    pub fn sup(v: &str, body: E) -> E {
        E::Sup(v.to_string(), Box::new(body))
    }

    pub fn inf(v: &str, body: E) -> E {
        E::Inf(v.to_string(), Box::new(body))
    }

    pub fn sepcon(a: E, b: E) -> E {
        E::SepCon(Box::new(a), Box::new(b))
    }

    pub fn sepimp(a: E, b: E) -> E {
        E::SepImp(Box::new(a), Box::new(b))
    }

    pub fn err_sepcon(a: E, b: E) -> E {
        E::ErrSepCon(Box::new(a), Box::new(b))
    }

    pub fn err_sepimp(a: E, b: E) -> E {
        E::ErrSepImp(Box::new(a), Box::new(b))
    }

    pub fn one_minus(a: E) -> E {
        E::OneMinus(Box::new(a))
    }

    pub fn pt(a: Arith, b: Arith) -> E {
        E::PointsTo(a, vec![b])
    }

    pub fn iverson(g: Guard) -> E {
        E::Iverson(g)
    }

    pub fn children(&self) -> Vec<&E> {
        match self {
            E::Add(a, b)
            | E::Mul(a, b)
            | E::Monus(a, b)
            | E::Max(a, b)
            | E::Min(a, b)
            | E::SepCon(a, b)
            | E::SepImp(a, b)
            | E::ErrSepCon(a, b)
            | E::ErrSepImp(a, b) => vec![a, b],
            E::Sum(items) | E::Sep(items) => items.iter().collect(),
            E::Sup(_, body) | E::Inf(_, body) | E::OneMinus(body) => vec![body],
            _ => vec![],
        }
    }

    /// True if any subterm satisfies `pred`.
    pub fn any(&self, pred: &dyn Fn(&E) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    /// Syntactically free variables.
    pub fn free_vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out, &mut Vec::new());
        out
    }

    fn free_vars_into(&self, out: &mut BTreeSet<VarName>, bound: &mut Vec<VarName>) {
        let add_arith = |e: &Arith, out: &mut BTreeSet<VarName>| {
            for v in e.vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            E::Const(_) | E::Emp | E::Size => {}
            E::Iverson(g) => {
                let mut vs = BTreeSet::new();
                g.vars_into(&mut vs);
                out.extend(vs.into_iter().filter(|v| !bound.contains(v)));
            }
            E::PointsTo(e, es) => {
                add_arith(e, out);
                es.iter().for_each(|x| add_arith(x, out));
            }
            E::ValidPointer(e) | E::ContainsAny(e) | E::Tree(e) | E::Path(_, e) => add_arith(e, out),
            E::Contains(a, b) | E::Ls(a, b) | E::Len(a, b) => {
                add_arith(a, out);
                add_arith(b, out);
            }
            E::Sup(v, body) | E::Inf(v, body) => {
                bound.push(v.clone());
                body.free_vars_into(out, bound);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.free_vars_into(out, bound);
                }
            }
        }
    }

    /// All variable names occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<VarName> {
        let mut out = self.free_vars();
        self.collect_binders(&mut out);
        out
    }

    fn collect_binders(&self, out: &mut BTreeSet<VarName>) {
        if let E::Sup(v, _) | E::Inf(v, _) = self {
            out.insert(v.clone());
        }
        for c in self.children() {
            c.collect_binders(out);
        }
    }

    /// Capture-avoiding substitution of `x` by `e`.
    pub fn substitute(&self, x: &str, e: &Arith) -> E {
        let s = |a: &Arith| a.substitute(x, e);
        let rec = |c: &E| Box::new(c.substitute(x, e));
        match self {
            E::Const(_) | E::Emp | E::Size => self.clone(),
            E::Iverson(g) => E::Iverson(g.substitute(x, e)),
            E::PointsTo(a, es) => E::PointsTo(s(a), es.iter().map(s).collect()),
            E::ValidPointer(a) => E::ValidPointer(s(a)),
            E::Contains(a, b) => E::Contains(s(a), s(b)),
            E::ContainsAny(a) => E::ContainsAny(s(a)),
            E::Ls(a, b) => E::Ls(s(a), s(b)),
            E::Len(a, b) => E::Len(s(a), s(b)),
            E::Tree(a) => E::Tree(s(a)),
            E::Path(k, a) => E::Path(*k, s(a)),
            E::Add(a, b) => E::Add(rec(a), rec(b)),
            E::Mul(a, b) => E::Mul(rec(a), rec(b)),
            E::Monus(a, b) => E::Monus(rec(a), rec(b)),
            E::Max(a, b) => E::Max(rec(a), rec(b)),
            E::Min(a, b) => E::Min(rec(a), rec(b)),
            E::SepCon(a, b) => E::SepCon(rec(a), rec(b)),
            E::SepImp(a, b) => E::SepImp(rec(a), rec(b)),
            E::ErrSepCon(a, b) => E::ErrSepCon(rec(a), rec(b)),
            E::ErrSepImp(a, b) => E::ErrSepImp(rec(a), rec(b)),
            E::OneMinus(a) => E::OneMinus(rec(a)),
            E::Sum(items) => E::Sum(items.iter().map(|c| c.substitute(x, e)).collect()),
            E::Sep(items) => E::Sep(items.iter().map(|c| c.substitute(x, e)).collect()),
            E::Sup(v, body) | E::Inf(v, body) => {
                let is_sup = matches!(self, E::Sup(..));
                let rebuild = |v: VarName, b: E| if is_sup { E::Sup(v, Box::new(b)) } else { E::Inf(v, Box::new(b)) };
                if v == x {
                    return self.clone();
                }
                if e.vars().contains(v) {
                    let mut taken = body.all_vars();
                    taken.extend(e.vars());
                    taken.insert(x.to_string());
                    let fresh = fresh_name(v, &taken);
                    let renamed = body.substitute(v, &Arith::Var(fresh.clone()));
                    return rebuild(fresh, renamed.substitute(x, e));
                }
                rebuild(v.clone(), body.substitute(x, e))
            }
        }
    }

    /// Syntactically 0/1-valued: legal left operand of `-*` and `-@`.
    pub fn is_predicate(&self) -> bool {
        match self {
            E::Const(c) => c.is_zero() || c.is_one(),
            E::Iverson(_)
            | E::Emp
            | E::PointsTo(..)
            | E::ValidPointer(_)
            | E::Contains(..)
            | E::ContainsAny(_)
            | E::Ls(..)
            | E::Tree(_) => true,
            // min(1, P -* Q) with 0/1-valued Q only takes the values 0 and 1
            E::Min(a, b) if matches!((&**a, &**b), (E::Const(c), E::SepImp(_, q)) if c.is_one() && q.is_predicate()) => true,
            E::Mul(a, b)
            | E::Max(a, b)
            | E::Min(a, b)
            | E::Monus(a, b)
            | E::SepCon(a, b)
            | E::ErrSepCon(a, b)
            | E::ErrSepImp(a, b) => a.is_predicate() && b.is_predicate(),
            E::Sep(items) => items.iter().all(E::is_predicate),
            E::Sup(_, b) | E::Inf(_, b) => b.is_predicate(),
            E::OneMinus(a) => a.is_predicate(),
            E::Size | E::Len(..) | E::Path(..) | E::Add(..) | E::Sum(_) | E::SepImp(..) => false,
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

fn fresh_name(base: &str, taken: &BTreeSet<VarName>) -> VarName {
    (1..).map(|i| format!("{base}_{i}")).find(|n| !taken.contains(n)).expect("infinite supply")
}

// Rendering. Levels: 1 implications (right assoc), 2 additive, 3 multiplicative, 4 closed forms.
fn level(e: &E) -> u8 {
    match e {
        E::SepImp(..) | E::ErrSepImp(..) => 1,
        E::Add(..) | E::Monus(..) => 2,
        E::Mul(..) | E::SepCon(..) | E::ErrSepCon(..) => 3,
        E::Sup(..) | E::Inf(..) | E::OneMinus(..) => 0,
        E::PointsTo(..) | E::ValidPointer(_) | E::Contains(..) | E::ContainsAny(_) => 0,
        _ => 4,
    }
}

fn write_e(f: &mut fmt::Formatter<'_>, e: &E, min_level: u8) -> fmt::Result {
    if level(e) < min_level {
        write!(f, "(")?;
        write_e(f, e, 0)?;
        return write!(f, ")");
    }
    let bin = |f: &mut fmt::Formatter<'_>, a: &E, op: &str, b: &E, lv: u8, right_assoc: bool| -> fmt::Result {
        let (la, lb) = if right_assoc { (lv + 1, lv) } else { (lv, lv + 1) };
        write_e(f, a, la)?;
        write!(f, " {op} ")?;
        write_e(f, b, lb)
    };
    let list = |f: &mut fmt::Formatter<'_>, name: &str, items: &[E]| -> fmt::Result {
        write!(f, "{name}(")?;
        for (i, it) in items.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write_e(f, it, 1)?;
        }
        write!(f, ")")
    };
    match e {
        E::Const(c) => write!(f, "{c}"),
        E::Iverson(g) => write!(f, "[{g}]"),
        E::Emp => write!(f, "[emp]"),
        E::Size => write!(f, "size"),
        E::PointsTo(a, es) => {
            write!(f, "{a} |-> ")?;
            for (i, x) in es.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        }
        E::ValidPointer(a) => write!(f, "{a} |-> -"),
        E::Contains(a, b) => write!(f, "{a} ~> {b}"),
        E::ContainsAny(a) => write!(f, "{a} ~> -"),
        E::Ls(a, b) => write!(f, "ls({a}, {b})"),
        E::Len(a, b) => write!(f, "len({a}, {b})"),
        E::Tree(a) => write!(f, "tree({a})"),
        E::Path(k, a) => write!(f, "path({k}, {a})"),
        E::Add(a, b) => bin(f, a, "+", b, 2, false),
        E::Monus(a, b) => bin(f, a, ".-", b, 2, false),
        E::Mul(a, b) => bin(f, a, "*", b, 3, false),
        E::SepCon(a, b) => bin(f, a, "**", b, 3, false),
        E::ErrSepCon(a, b) => bin(f, a, "@*", b, 3, false),
        E::SepImp(a, b) => bin(f, a, "-*", b, 1, true),
        E::ErrSepImp(a, b) => bin(f, a, "-@", b, 1, true),
        E::Max(a, b) => {
            write!(f, "max(")?;
            write_e(f, a, 1)?;
            write!(f, ", ")?;
            write_e(f, b, 1)?;
            write!(f, ")")
        }
        E::Min(a, b) => {
            write!(f, "min(")?;
            write_e(f, a, 1)?;
            write!(f, ", ")?;
            write_e(f, b, 1)?;
            write!(f, ")")
        }
        E::Sum(items) => list(f, "sum", items),
        E::Sep(items) => list(f, "sep", items),
        E::Sup(v, body) => {
            write!(f, "sup {v}. ")?;
            write_e(f, body, 1)
        }
        E::Inf(v, body) => {
            write!(f, "inf {v}. ")?;
            write_e(f, body, 1)
        }
        E::OneMinus(a) => {
            write!(f, "1 - ")?;
            write_e(f, a, 4)
        }
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_e(f, self, 0)
    }
}

/// Free variables of an expectation (by syntactic occurrence).
pub fn free_vars_expectation(e: &Expectation) -> BTreeSet<VarName> {
    e.free_vars()
}

/// Capture-avoiding substitution `E[x/e]`.
pub fn substitute(e: &Expectation, x: &str, by: &Arith) -> Expectation {
    e.substitute(x, by)
}
