//! Classical separation logic formulas, a direct satisfaction checker, and their
//! embedding into expectations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::expect::Expectation;
use crate::num::ExtQ;
use crate::state::{heap_partitions, DomainConfig, Heap, Stack};
use crate::syntax::{Arith, Guard, VarName};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlFormula {
    Pure(Guard),
    Emp,
    PointsTo(Arith, Arith),
    And(Box<SlFormula>, Box<SlFormula>),
    Not(Box<SlFormula>),
    Exists(VarName, Box<SlFormula>),
    Star(Box<SlFormula>, Box<SlFormula>),
    Wand(Box<SlFormula>, Box<SlFormula>),
}

impl SlFormula {
    pub fn and(a: SlFormula, b: SlFormula) -> SlFormula {
        SlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn not(a: SlFormula) -> SlFormula {
        SlFormula::Not(Box::new(a))
    }

    pub fn exists(v: &str, body: SlFormula) -> SlFormula {
        SlFormula::Exists(v.to_string(), Box::new(body))
    }

    pub fn star(a: SlFormula, b: SlFormula) -> SlFormula {
        SlFormula::Star(Box::new(a), Box::new(b))
    }

    pub fn wand(a: SlFormula, b: SlFormula) -> SlFormula {
        SlFormula::Wand(Box::new(a), Box::new(b))
    }

    pub fn points_to_any(e: Arith) -> SlFormula {
        SlFormula::exists("v_pt", SlFormula::PointsTo(e, Arith::var("v_pt")))
    }

    fn level(&self) -> u8 {
        match self {
            SlFormula::Wand(..) => 1,
            SlFormula::And(..) => 2,
            SlFormula::Star(..) => 3,
            SlFormula::Exists(..) => 0,
            _ => 4,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.level() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            SlFormula::Pure(Guard::True) => write!(f, "true"),
            SlFormula::Pure(Guard::False) => write!(f, "false"),
            SlFormula::Pure(g @ Guard::Cmp(..)) => write!(f, "({g})"),
            SlFormula::Pure(g) => write!(f, "[{g}]"),
            SlFormula::Emp => write!(f, "emp"),
            SlFormula::PointsTo(a, b) => write!(f, "{a} |-> {b}"),
            SlFormula::Not(a) => {
                write!(f, "!")?;
                a.fmt_at(f, 4)
            }
            SlFormula::Exists(v, body) => {
                write!(f, "exists {v}. ")?;
                body.fmt_at(f, 0)
            }
            SlFormula::And(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " && ")?;
                b.fmt_at(f, 3)
            }
            SlFormula::Star(a, b) => {
                a.fmt_at(f, 3)?;
                write!(f, " ** ")?;
                b.fmt_at(f, 4)
            }
            SlFormula::Wand(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " -* ")?;
                b.fmt_at(f, 1)
            }
        }
    }
}

impl fmt::Display for SlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Translation into the quantitative setting. The wand is capped at one so that an
/// unsatisfiable left side yields 1 rather than ∞.
pub fn embed_sl(phi: &SlFormula) -> Expectation {
    match phi {
        SlFormula::Pure(g) => Expectation::iverson(g.clone()),
        SlFormula::Emp => Expectation::Emp,
        SlFormula::PointsTo(a, b) => Expectation::pt(a.clone(), b.clone()),
        SlFormula::And(a, b) => Expectation::mul(embed_sl(a), embed_sl(b)),
        SlFormula::Not(a) => Expectation::one_minus(embed_sl(a)),
        SlFormula::Exists(v, body) => Expectation::sup(v, embed_sl(body)),
        SlFormula::Star(a, b) => Expectation::sepcon(embed_sl(a), embed_sl(b)),
        SlFormula::Wand(a, b) => Expectation::min(Expectation::one(), Expectation::sepimp(embed_sl(a), embed_sl(b))),
    }
}

/// Direct satisfaction check `(s, h) |= phi` over the bounded model.
pub fn satisfies(phi: &SlFormula, stack: &Stack, heap: &Heap, cfg: &DomainConfig) -> Result<bool, ModelError> {
    let lookup = |x: &str| stack.get(x);
    Ok(match phi {
        SlFormula::Pure(g) => g.eval_with(&lookup)?,
        SlFormula::Emp => heap.is_empty(),
        SlFormula::PointsTo(a, b) => {
            let a = a.eval_with(&lookup)?;
            let b = b.eval_with(&lookup)?;
            heap.len() == 1 && heap.get(a) == Some(b)
        }
        SlFormula::And(a, b) => satisfies(a, stack, heap, cfg)? && satisfies(b, stack, heap, cfg)?,
        SlFormula::Not(a) => !satisfies(a, stack, heap, cfg)?,
        SlFormula::Exists(v, body) => {
            for val in cfg.values() {
                if satisfies(body, &stack.with(v, val), heap, cfg)? {
                    return Ok(true);
                }
            }
            false
        }
        SlFormula::Star(a, b) => {
            for (h1, h2) in heap_partitions(heap) {
                if satisfies(a, stack, &h1, cfg)? && satisfies(b, stack, &h2, cfg)? {
                    return Ok(true);
                }
            }
            false
        }
        SlFormula::Wand(a, b) => {
            for ext in extensions(heap, cfg) {
                if satisfies(a, stack, &ext, cfg)? {
                    let mut joined = heap.clone();
                    joined.0.extend(ext.cells());
                    if !satisfies(b, stack, &joined, cfg)? {
                        return Ok(false);
                    }
                }
            }
            true
        }
    })
}

fn extensions(heap: &Heap, cfg: &DomainConfig) -> Vec<Heap> {
    let mut out = vec![Heap::empty()];
    for a in (1..=cfg.addrs as i64).filter(|a| !heap.contains(*a)) {
        let mut next = Vec::new();
        for h in &out {
            next.push(h.clone());
            next.extend(cfg.values().map(|v| h.with(a, v)));
        }
        out = next;
    }
    out
}

/// Value of the embedding as a boolean, for comparisons with [`satisfies`].
pub fn embedded_truth(v: &ExtQ) -> Option<bool> {
    if v.is_zero() {
        Some(false)
    } else if v.is_one() {
        Some(true)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expect::eval_expectation;
    use crate::parse::parse_sl;
    use crate::state::{enumerate_states, ProgState};

    #[test]
    fn display_round_trips() {
        for text in ["x |-> 1 ** emp -* (x = 0) && !emp", "exists v. x |-> v ** true", "!(emp -* emp)"] {
            let phi = parse_sl(text).unwrap();
            assert_eq!(parse_sl(&phi.to_string()).unwrap(), phi, "{text}");
        }
    }

    #[test]
    fn embedding_agrees_with_direct_checker() {
        let cfg = DomainConfig::new(&["x"], 0, 2, 2).unwrap();
        for text in ["x |-> 1 -* false", "(exists v. x |-> v) -* emp", "!(x |-> 0) ** true", "emp && x = 1"] {
            let phi = parse_sl(text).unwrap();
            let e = embed_sl(&phi);
            for ProgState { stack, heap } in enumerate_states(&cfg, 2) {
                let direct = satisfies(&phi, &stack, &heap, &cfg).unwrap();
                let v = eval_expectation(&e, &ProgState::new(stack.clone(), heap.clone()), &cfg).unwrap();
                assert_eq!(embedded_truth(&v), Some(direct), "{text} at {stack} {heap}");
            }
        }
    }
}
