//! The law catalog: each law draws operands and checks an identity or inequality at
//! every enumerated state.

use std::cell::RefCell;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gen::{Gen, GenSpec, ProgramFeatures};
use crate::error::{ModelError, QslError};
use crate::expect::table::{e_add, e_max, CArith, Space, Table, TabulateOptions, Tabulator};
use crate::expect::Expectation as E;
use crate::num::{ExtQ, Q};
use crate::parse::{parse_arith, parse_expectation, parse_program, parse_sl};
use crate::sl::{embed_sl, embedded_truth, satisfies, SlFormula};
use crate::state::DomainConfig;
use crate::syntax::{Arith, CmpOp, Guard, Program, VarName};
use crate::transformer::{Transformer, TransformerMode};

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Exp(E),
    Prog(Program),
    Arith(Arith),
    Rational(Q),
    Mode(TransformerMode),
    Var(VarName),
    Formula(SlFormula),
}

impl Operand {
    pub fn kind(&self) -> &'static str {
        match self {
            Operand::Exp(_) => "expectation",
            Operand::Prog(_) => "program",
            Operand::Arith(_) => "arith",
            Operand::Rational(_) => "rational",
            Operand::Mode(_) => "mode",
            Operand::Var(_) => "var",
            Operand::Formula(_) => "formula",
        }
    }

    pub fn text(&self) -> String {
        match self {
            Operand::Exp(e) => e.to_string(),
            Operand::Prog(c) => c.to_string(),
            Operand::Arith(a) => a.to_string(),
            Operand::Rational(q) => q.to_string(),
            Operand::Mode(m) => m.to_string(),
            Operand::Var(v) => v.clone(),
            Operand::Formula(f) => f.to_string(),
        }
    }

    pub fn parse(kind: &str, text: &str) -> Result<Operand, QslError> {
        Ok(match kind {
            "expectation" => Operand::Exp(parse_expectation(text)?),
            "program" => Operand::Prog(parse_program(text)?),
            "arith" => Operand::Arith(parse_arith(text)?),
            "rational" => Operand::Rational(text.parse().map_err(|_| QslError::Usage(format!("bad rational `{text}`")))?),
            "mode" => Operand::Mode(text.parse()?),
            "var" => Operand::Var(text.to_string()),
            "formula" => Operand::Formula(parse_sl(text)?),
            _ => return Err(QslError::Usage(format!("unknown operand kind `{kind}`"))),
        })
    }
}

/// Operand in its textual form, as stored in witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperandText {
    pub name: String,
    pub kind: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Operands(pub Vec<(String, Operand)>);

fn missing(name: &str) -> ModelError {
    ModelError::InvalidConfig(format!("operand `{name}` is missing"))
}

impl Operands {
    fn with(mut self, name: &str, op: Operand) -> Operands {
        self.0.push((name.to_string(), op));
        self
    }

    fn get(&self, name: &str) -> Option<&Operand> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, op)| op)
    }

    pub fn exp(&self, name: &str) -> Result<&E, ModelError> {
        match self.get(name) {
            Some(Operand::Exp(e)) => Ok(e),
            _ => Err(missing(name)),
        }
    }

    pub fn prog(&self, name: &str) -> Result<&Program, ModelError> {
        match self.get(name) {
            Some(Operand::Prog(c)) => Ok(c),
            _ => Err(missing(name)),
        }
    }

    pub fn arith(&self, name: &str) -> Result<&Arith, ModelError> {
        match self.get(name) {
            Some(Operand::Arith(a)) => Ok(a),
            _ => Err(missing(name)),
        }
    }

    pub fn rational(&self, name: &str) -> Result<&Q, ModelError> {
        match self.get(name) {
            Some(Operand::Rational(q)) => Ok(q),
            _ => Err(missing(name)),
        }
    }

    pub fn mode(&self, name: &str) -> Result<TransformerMode, ModelError> {
        match self.get(name) {
            Some(Operand::Mode(m)) => Ok(*m),
            _ => Err(missing(name)),
        }
    }

    pub fn var(&self, name: &str) -> Result<&VarName, ModelError> {
        match self.get(name) {
            Some(Operand::Var(v)) => Ok(v),
            _ => Err(missing(name)),
        }
    }

    pub fn formula(&self, name: &str) -> Result<&SlFormula, ModelError> {
        match self.get(name) {
            Some(Operand::Formula(f)) => Ok(f),
            _ => Err(missing(name)),
        }
    }

    pub fn to_text(&self) -> Vec<OperandText> {
        self.0
            .iter()
            .map(|(name, op)| OperandText { name: name.clone(), kind: op.kind().to_string(), text: op.text() })
            .collect()
    }

    pub fn from_text(items: &[OperandText]) -> Result<Operands, QslError> {
        let ops = items
            .iter()
            .map(|t| Ok((t.name.clone(), Operand::parse(&t.kind, &t.text)?)))
            .collect::<Result<Vec<_>, QslError>>()?;
        Ok(Operands(ops))
    }
}

/// A failed comparison at one state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub state: String,
    pub lhs: ExtQ,
    pub rhs: ExtQ,
    pub relation: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub violation: Option<Violation>,
    /// States skipped because an operand raised a model error there.
    pub error_states: usize,
    /// The trial's precondition did not hold, so nothing was checked.
    pub vacuous: bool,
}

impl Outcome {
    fn vacuous() -> Outcome {
        Outcome { vacuous: true, ..Outcome::default() }
    }

    fn and(mut self, other: Outcome) -> Outcome {
        if self.violation.is_none() {
            self.violation = other.violation;
        }
        self.error_states += other.error_states;
        self.vacuous &= other.vacuous;
        self
    }
}

/// Switches that deliberately break parts of the engine to test the harness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebugHooks {
    pub broken_sepcon: bool,
}

/// Evaluation context of one trial; tables of repeated subexpressions are shared.
pub struct LawCtx {
    pub cfg: DomainConfig,
    pub space: Arc<Space>,
    pub max_cells: usize,
    pub hooks: DebugHooks,
    tabulator: RefCell<Tabulator>,
}

impl LawCtx {
    pub fn new(spec: &GenSpec, hooks: DebugHooks) -> Result<LawCtx, ModelError> {
        Ok(LawCtx::on_space(spec, Space::new(&spec.cfg)?, hooks))
    }

    pub fn on_space(spec: &GenSpec, space: Arc<Space>, hooks: DebugHooks) -> LawCtx {
        let tabulator = Tabulator::new(space.clone(), TabulateOptions { broken_sepcon: hooks.broken_sepcon });
        LawCtx { cfg: spec.cfg.clone(), space, max_cells: spec.max_cells, hooks, tabulator: RefCell::new(tabulator) }
    }

    pub fn table(&self, e: &E) -> Result<Arc<Table>, ModelError> {
        self.tabulator.borrow_mut().table(e)
    }

    /// Transformer of `c` applied to `post`, with the loop residual (zero when exact).
    pub fn run(&self, mode: TransformerMode, c: &Program, post: &Table) -> Result<(Table, ExtQ), ModelError> {
        self.run_with(mode, c, post, false)
    }

    fn run_with(&self, mode: TransformerMode, c: &Program, post: &Table, literal: bool) -> Result<(Table, ExtQ), ModelError> {
        let t = Transformer::on_space(mode, self.space.clone()).with_literal_heap_rules(literal);
        let out = t.apply(c, post)?;
        let residual = t.take_approximation().map_or_else(ExtQ::zero, |a| a.residual);
        Ok((out, residual))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rel {
    Eq,
    Le,
}

fn compare(ctx: &LawCtx, lhs: &Table, rhs: &Table, rel: Rel, tol: &ExtQ, detail: &str) -> Outcome {
    let mut out = Outcome::default();
    for i in lhs.indices_within(ctx.max_cells) {
        match (&lhs.data[i], &rhs.data[i]) {
            (Ok(a), Ok(b)) => {
                let bad = match rel {
                    Rel::Eq => a.distance(b) > *tol,
                    Rel::Le => *a > b.add(tol),
                };
                if bad {
                    out.violation = Some(Violation {
                        state: ctx.space.state_of(i).to_string(),
                        lhs: a.clone(),
                        rhs: b.clone(),
                        relation: if rel == Rel::Eq { "=".into() } else { "<=".into() },
                        detail: detail.to_string(),
                    });
                    return out;
                }
            }
            _ => out.error_states += 1,
        }
    }
    out
}

fn exact(ctx: &LawCtx, lhs: &E, rhs: &E, rel: Rel) -> Result<Outcome, ModelError> {
    Ok(compare(ctx, &*ctx.table(lhs)?, &*ctx.table(rhs)?, rel, &ExtQ::zero(), ""))
}

/// For each stack, all heaps with a nonzero value share one domain.
pub fn table_domain_exact(t: &Table) -> bool {
    let sp = &t.space;
    (0..sp.n_stacks).all(|s| {
        let mut dom = None;
        (0..sp.n_heaps).all(|h| match t.at(s, h) {
            Ok(v) if !v.is_zero() => *dom.get_or_insert(sp.dom(h)) == sp.dom(h),
            _ => true,
        })
    })
}

/// First state where adding one cell lowers the value.
fn intuitionistic_violation(ctx: &LawCtx, t: &Table, detail: &str) -> Outcome {
    let sp = &ctx.space;
    let mut out = Outcome::default();
    for i in t.indices_within(ctx.max_cells.saturating_sub(1)) {
        let (s, h) = sp.split(i);
        let Ok(small) = t.at(s, h) else {
            out.error_states += 1;
            continue;
        };
        for a in 1..=sp.addrs() as i64 {
            if sp.cell(h, a).is_some() {
                continue;
            }
            for v in ctx.cfg.values() {
                let big_h = sp.heap_with(h, a, v).expect("value in range");
                if let Ok(big) = t.at(s, big_h) {
                    if big < small {
                        out.violation = Some(Violation {
                            state: sp.state_of(i).to_string(),
                            lhs: small.clone(),
                            rhs: big.clone(),
                            relation: "<=".into(),
                            detail: format!("{detail}; extended by {a}:{v}"),
                        });
                        return out;
                    }
                }
            }
        }
    }
    out
}

fn is_intuitionistic(ctx: &LawCtx, t: &Table) -> bool {
    intuitionistic_violation(ctx, t, "").violation.is_none()
}

fn pointer_guard(cfg: &DomainConfig, a: &Arith, e: &Arith) -> E {
    let le = |lo: Arith, hi: Arith| Guard::cmp(CmpOp::Le, lo, hi);
    E::iverson(Guard::and(
        Guard::and(le(Arith::Const(1), a.clone()), le(a.clone(), Arith::Const(cfg.addrs as i64))),
        Guard::and(le(Arith::Const(cfg.vmin), e.clone()), le(e.clone(), Arith::Const(cfg.vmax))),
    ))
}

fn scale(t: &Table, k: &Q) -> Table {
    t.map(|e| e.clone().map(|v| v.scale(k)))
}

fn program_features(g: &Gen, probabilistic: bool, alloc: bool) -> ProgramFeatures {
    let spec = g.spec();
    ProgramFeatures { probabilistic, alloc: alloc && spec.allow_alloc, loops: spec.allow_loops }
}

/// Posts legal for `mode`: one-bounded when the mode requires it.
fn post_for(g: &mut Gen, mode: TransformerMode, depth: usize) -> E {
    if mode.needs_one_bounded() {
        g.one_bounded(depth)
    } else {
        g.expectation(depth)
    }
}

fn random_mode(g: &mut Gen) -> TransformerMode {
    use rand::seq::SliceRandom;
    *TransformerMode::ALL.choose(g.rng()).expect("nonempty")
}

fn domain_exact_expr(g: &mut Gen, depth: usize) -> E {
    if depth == 0 || g.chance(0.4) {
        return match g.rng().gen_range(0..4) {
            0 => E::Emp,
            1 => E::pt(g.pointer(), g.arith()),
            2 => E::ValidPointer(g.pointer()),
            _ => E::PointsTo(g.pointer(), vec![g.arith(), g.arith()]),
        };
    }
    match g.rng().gen_range(0..3) {
        0 => E::sepcon(domain_exact_expr(g, depth - 1), domain_exact_expr(g, depth - 1)),
        1 => E::mul(g.pure(1), domain_exact_expr(g, depth - 1)),
        _ => E::mul(domain_exact_expr(g, depth - 1), g.expectation(depth - 1)),
    }
}

fn maybe_exact(g: &mut Gen, depth: usize) -> E {
    if g.chance(0.5) {
        domain_exact_expr(g, depth)
    } else {
        g.expectation(depth)
    }
}

fn unmodified_vars(g: &Gen, c: &Program) -> Vec<VarName> {
    let modified = c.modified_vars();
    g.spec().cfg.vars.iter().filter(|v| !modified.contains(*v)).cloned().collect()
}

fn loop_tol(ctx: &LawCtx, residuals: &[&ExtQ]) -> ExtQ {
    if residuals.iter().all(|r| r.is_zero()) {
        ExtQ::zero()
    } else {
        ExtQ::fin(ctx.cfg.loop_tol.mul(&Q::from_int(2)))
    }
}

/// Largest finite value of a table, or `None` if some entry is ∞.
fn finite_max(t: &Table) -> Option<ExtQ> {
    let mut m = ExtQ::zero();
    for v in t.data.iter().flatten() {
        if v.is_inf() {
            return None;
        }
        m = m.max_of(v);
    }
    Some(m)
}

type GenFn = fn(&mut Gen) -> Operands;
type CheckFn = fn(&LawCtx, &Operands) -> Result<Outcome, ModelError>;

pub struct Law {
    pub id: &'static str,
    pub statement: &'static str,
    /// Set when the stated identity is known to fail; the harness still reports violations.
    pub known_refutation: Option<&'static str>,
    pub generate: GenFn,
    pub check: CheckFn,
}

fn ops() -> Operands {
    Operands::default()
}

fn depth(g: &Gen) -> usize {
    g.spec().expr_depth
}

macro_rules! law {
    ($id:expr, $statement:expr, $gen:expr, $check:expr) => {
        Law { id: $id, statement: $statement, known_refutation: None, generate: $gen, check: $check }
    };
}

pub fn catalog() -> Vec<Law> {
    let mut laws = expectation_laws();
    laws.extend(transformer_laws());
    laws
}

fn expectation_laws() -> Vec<Law> {
    vec![
        law!(
            "sepcon.assoc",
            "X ** (Y ** Z) = (X ** Y) ** Z",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.expectation(d))).with("Y", Operand::Exp(g.expectation(d))).with("Z", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (x, y, z) = (o.exp("X")?, o.exp("Y")?, o.exp("Z")?);
                exact(ctx, &E::sepcon(x.clone(), E::sepcon(y.clone(), z.clone())), &E::sepcon(E::sepcon(x.clone(), y.clone()), z.clone()), Rel::Eq)
            }
        ),
        law!(
            "sepcon.unit",
            "X ** emp = X",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let x = o.exp("X")?;
                exact(ctx, &E::sepcon(x.clone(), E::Emp), x, Rel::Eq)
            }
        ),
        law!(
            "sepcon.comm",
            "X ** Y = Y ** X",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.expectation(d))).with("Y", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (x, y) = (o.exp("X")?, o.exp("Y")?);
                exact(ctx, &E::sepcon(x.clone(), y.clone()), &E::sepcon(y.clone(), x.clone()), Rel::Eq)
            }
        ),
        law!(
            "sepcon.distrib_max",
            "X ** max(Y, Z) = max(X ** Y, X ** Z)",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.expectation(d))).with("Y", Operand::Exp(g.expectation(d))).with("Z", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (x, y, z) = (o.exp("X")?, o.exp("Y")?, o.exp("Z")?);
                exact(
                    ctx,
                    &E::sepcon(x.clone(), E::max(y.clone(), z.clone())),
                    &E::max(E::sepcon(x.clone(), y.clone()), E::sepcon(x.clone(), z.clone())),
                    Rel::Eq,
                )
            }
        ),
        law!(
            "sepcon.subdistrib_add",
            "X ** (Y + Z) <= X ** Y + X ** Z, with equality for domain-exact X",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(maybe_exact(g, d))).with("Y", Operand::Exp(g.expectation(d))).with("Z", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (x, y, z) = (o.exp("X")?, o.exp("Y")?, o.exp("Z")?);
                let rel = if table_domain_exact(&*ctx.table(x)?) { Rel::Eq } else { Rel::Le };
                exact(ctx, &E::sepcon(x.clone(), E::add(y.clone(), z.clone())), &E::add(E::sepcon(x.clone(), y.clone()), E::sepcon(x.clone(), z.clone())), rel)
            }
        ),
        law!(
            "sepcon.subdistrib_mul",
            "P ** (Y * Z) <= (P ** Y) * (P ** Z) for predicates P, with equality for domain-exact P",
            |g| {
                let d = depth(g);
                let p = if g.chance(0.5) { domain_exact_pred(g, d) } else { g.predicate(d) };
                ops().with("P", Operand::Exp(p)).with("Y", Operand::Exp(g.expectation(d))).with("Z", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (p, y, z) = (o.exp("P")?, o.exp("Y")?, o.exp("Z")?);
                let rel = if table_domain_exact(&*ctx.table(p)?) { Rel::Eq } else { Rel::Le };
                exact(ctx, &E::sepcon(p.clone(), E::mul(y.clone(), z.clone())), &E::mul(E::sepcon(p.clone(), y.clone()), E::sepcon(p.clone(), z.clone())), rel)
            }
        ),
        law!(
            "sepcon.monotone",
            "X <= X' and Y <= Y' imply X ** Y <= X' ** Y'",
            |g| {
                let d = depth(g);
                let (x, y) = (g.expectation(d), g.expectation(d));
                let x2 = if g.chance(0.5) { E::add(x.clone(), g.expectation(d)) } else { E::max(x.clone(), g.expectation(d)) };
                let y2 = E::max(y.clone(), g.expectation(d));
                ops().with("X", Operand::Exp(x)).with("Y", Operand::Exp(y)).with("X'", Operand::Exp(x2)).with("Y'", Operand::Exp(y2))
            },
            |ctx, o| {
                let (x, y, x2, y2) = (o.exp("X")?, o.exp("Y")?, o.exp("X'")?, o.exp("Y'")?);
                let pre = exact(ctx, x, x2, Rel::Le)?.and(exact(ctx, y, y2, Rel::Le)?);
                if pre.violation.is_some() {
                    return Ok(Outcome::vacuous());
                }
                exact(ctx, &E::sepcon(x.clone(), y.clone()), &E::sepcon(x2.clone(), y2.clone()), Rel::Le)
            }
        ),
        law!(
            "sepimp.modus_ponens",
            "P ** (P -* X) <= X",
            |g| {
                let d = depth(g);
                ops().with("P", Operand::Exp(g.predicate(d))).with("X", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (p, x) = (o.exp("P")?, o.exp("X")?);
                exact(ctx, &E::sepcon(p.clone(), E::sepimp(p.clone(), x.clone())), x, Rel::Le)
            }
        ),
        law!(
            "sepimp.adjoint",
            "X ** P <= Y iff X <= P -* Y",
            |g| {
                let d = depth(g);
                let p = g.predicate(d);
                let (x, y) = match g.rng().gen_range(0..3) {
                    0 => {
                        let y = g.expectation(d);
                        (E::sepimp(p.clone(), y.clone()), y)
                    }
                    1 => {
                        let x = g.expectation(d);
                        (x.clone(), E::sepcon(x, p.clone()))
                    }
                    _ => (g.expectation(d), g.expectation(d)),
                };
                ops().with("X", Operand::Exp(x)).with("P", Operand::Exp(p)).with("Y", Operand::Exp(y))
            },
            |ctx, o| {
                let (x, p, y) = (o.exp("X")?, o.exp("P")?, o.exp("Y")?);
                let left = exact(ctx, &E::sepcon(x.clone(), p.clone()), y, Rel::Le)?;
                let right = exact(ctx, x, &E::sepimp(p.clone(), y.clone()), Rel::Le)?;
                let errors = left.error_states + right.error_states;
                let violation = match (left.violation, right.violation) {
                    (Some(v), None) => Some(Violation { detail: "X ** P <= Y fails while X <= P -* Y holds".into(), ..v }),
                    (None, Some(v)) => Some(Violation { detail: "X <= P -* Y fails while X ** P <= Y holds".into(), ..v }),
                    _ => None,
                };
                Ok(Outcome { violation, error_states: errors, vacuous: false })
            }
        ),
        law!(
            "sepimp.single_modus_ponens",
            "(a |-> e) ** ((a |-> e) -* X) = (a ~> e) * X",
            |g| {
                let d = depth(g);
                ops().with("a", Operand::Arith(g.pointer())).with("e", Operand::Arith(g.arith())).with("X", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (a, e, x) = (o.arith("a")?, o.arith("e")?, o.exp("X")?);
                let pt = E::pt(a.clone(), e.clone());
                exact(ctx, &E::sepcon(pt.clone(), E::sepimp(pt, x.clone())), &E::mul(E::Contains(a.clone(), e.clone()), x.clone()), Rel::Eq)
            }
        ),
        law!(
            "pure.mul_below_sepcon",
            "pure X implies X * Y <= X ** Y",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.pure(d))).with("Y", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (x, y) = (o.exp("X")?, o.exp("Y")?);
                exact(ctx, &E::mul(x.clone(), y.clone()), &E::sepcon(x.clone(), y.clone()), Rel::Le)
            }
        ),
        law!(
            "pure.mul_eq_sepcon",
            "pure X and Y imply X * Y = X ** Y",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.pure(d))).with("Y", Operand::Exp(g.pure(d)))
            },
            |ctx, o| {
                let (x, y) = (o.exp("X")?, o.exp("Y")?);
                exact(ctx, &E::mul(x.clone(), y.clone()), &E::sepcon(x.clone(), y.clone()), Rel::Eq)
            }
        ),
        law!(
            "pure.mul_assoc",
            "pure X implies (X * Y) ** Z = X * (Y ** Z)",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.pure(d))).with("Y", Operand::Exp(g.expectation(d))).with("Z", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (x, y, z) = (o.exp("X")?, o.exp("Y")?, o.exp("Z")?);
                exact(ctx, &E::sepcon(E::mul(x.clone(), y.clone()), z.clone()), &E::mul(x.clone(), E::sepcon(y.clone(), z.clone())), Rel::Eq)
            }
        ),
        law!(
            "intuit.sepcon_true_intuitionistic",
            "X ** 1 is intuitionistic",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let t = ctx.table(&E::sepcon(o.exp("X")?.clone(), E::one()))?;
                Ok(intuitionistic_violation(ctx, &t, "X ** 1 decreases under extension"))
            }
        ),
        law!(
            "intuit.sepcon_true_above",
            "X <= X ** 1",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let x = o.exp("X")?;
                exact(ctx, x, &E::sepcon(x.clone(), E::one()), Rel::Le)
            }
        ),
        law!(
            "intuit.sepcon_true_tightest",
            "X <= X' with X' intuitionistic implies X ** 1 <= X'",
            |g| {
                let d = depth(g);
                let upper = g.intuitionistic(d);
                let x = E::min(upper.clone(), g.expectation(d));
                ops().with("X", Operand::Exp(x)).with("X'", Operand::Exp(upper))
            },
            |ctx, o| {
                let (x, upper) = (o.exp("X")?, o.exp("X'")?);
                let ut = ctx.table(upper)?;
                if !is_intuitionistic(ctx, &ut) || exact(ctx, x, upper, Rel::Le)?.violation.is_some() {
                    return Ok(Outcome::vacuous());
                }
                Ok(compare(ctx, &*ctx.table(&E::sepcon(x.clone(), E::one()))?, &ut, Rel::Le, &ExtQ::zero(), ""))
            }
        ),
        law!(
            "intuit.wand_true_intuitionistic",
            "1 -* X is intuitionistic",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let t = ctx.table(&E::sepimp(E::one(), o.exp("X")?.clone()))?;
                Ok(intuitionistic_violation(ctx, &t, "1 -* X decreases under extension"))
            }
        ),
        law!(
            "intuit.wand_true_below",
            "1 -* X <= X",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let x = o.exp("X")?;
                exact(ctx, &E::sepimp(E::one(), x.clone()), x, Rel::Le)
            }
        ),
        law!(
            "intuit.wand_true_tightest",
            "X' <= X with X' intuitionistic implies X' <= 1 -* X",
            |g| {
                let d = depth(g);
                let lower = g.intuitionistic(d);
                let x = E::max(lower.clone(), g.expectation(d));
                ops().with("X", Operand::Exp(x)).with("X'", Operand::Exp(lower))
            },
            |ctx, o| {
                let (x, lower) = (o.exp("X")?, o.exp("X'")?);
                let lt = ctx.table(lower)?;
                if !is_intuitionistic(ctx, &lt) || exact(ctx, lower, x, Rel::Le)?.violation.is_some() {
                    return Ok(Outcome::vacuous());
                }
                Ok(compare(ctx, &lt, &*ctx.table(&E::sepimp(E::one(), x.clone()))?, Rel::Le, &ExtQ::zero(), ""))
            }
        ),
        law!(
            "size.sepcon_points_to",
            "(a |-> e) ** size = (a ~> e) * (size .- 1)",
            |g| ops().with("a", Operand::Arith(g.pointer())).with("e", Operand::Arith(g.arith())),
            |ctx, o| {
                let (a, e) = (o.arith("a")?, o.arith("e")?);
                exact(
                    ctx,
                    &E::sepcon(E::pt(a.clone(), e.clone()), E::Size),
                    &E::mul(E::Contains(a.clone(), e.clone()), E::monus(E::Size, E::one())),
                    Rel::Eq,
                )
            }
        ),
        law!(
            "size.sepimp_points_to",
            "(a |-> e) -* size = 1 + size + (a ~> -) * inf where a is an address and e a value",
            |g| ops().with("a", Operand::Arith(g.pointer())).with("e", Operand::Arith(g.arith())),
            |ctx, o| {
                let (a, e) = (o.arith("a")?, o.arith("e")?);
                let guard = pointer_guard(&ctx.cfg, a, e);
                let lhs = E::mul(guard.clone(), E::sepimp(E::pt(a.clone(), e.clone()), E::Size));
                let rhs = E::mul(guard, E::add(E::add(E::one(), E::Size), E::mul(E::ContainsAny(a.clone()), E::Const(ExtQ::Inf))));
                exact(ctx, &lhs, &rhs, Rel::Eq)
            }
        ),
        law!(
            "size.sepcon_mul",
            "(X ** Y) * size <= (X * size) ** Y + X ** (Y * size), with equality if X or Y is domain-exact",
            |g| {
                let d = depth(g);
                ops().with("X", Operand::Exp(maybe_exact(g, d))).with("Y", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (x, y) = (o.exp("X")?, o.exp("Y")?);
                let rel = if table_domain_exact(&*ctx.table(x)?) || table_domain_exact(&*ctx.table(y)?) { Rel::Eq } else { Rel::Le };
                exact(
                    ctx,
                    &E::mul(E::sepcon(x.clone(), y.clone()), E::Size),
                    &E::add(E::sepcon(E::mul(x.clone(), E::Size), y.clone()), E::sepcon(x.clone(), E::mul(y.clone(), E::Size))),
                    rel,
                )
            }
        ),
        law!(
            "list.len_is_ls_size",
            "len(a, b) = ls(a, b) * size",
            |g| ops().with("a", Operand::Arith(g.pointer())).with("b", Operand::Arith(g.pointer())),
            |ctx, o| {
                let (a, b) = (o.arith("a")?, o.arith("b")?);
                exact(ctx, &E::Len(a.clone(), b.clone()), &E::mul(E::Ls(a.clone(), b.clone()), E::Size), Rel::Eq)
            }
        ),
        law!(
            "list.ls_split_lower",
            "ls(a, b) <= sup g. ls(a, g) ** ls(g, b)",
            |g| ops().with("a", Operand::Arith(g.pointer())).with("b", Operand::Arith(g.pointer())),
            |ctx, o| {
                let (a, b) = (o.arith("a")?, o.arith("b")?);
                exact(ctx, &E::Ls(a.clone(), b.clone()), &ls_split(a, b), Rel::Le)
            }
        ),
        Law {
            known_refutation: Some(
                "fails on cyclic heaps: with a = b = 1 and h = {1:2, 2:1}, ls(1,1) is 0 because the heap is not empty, \
                 while ls(1,2) ** ls(2,1) is 1",
            ),
            ..law!(
                "list.ls_split_upper",
                "sup g. ls(a, g) ** ls(g, b) <= ls(a, b)",
                |g| ops().with("a", Operand::Arith(g.pointer())).with("b", Operand::Arith(g.pointer())),
                |ctx, o| {
                    let (a, b) = (o.arith("a")?, o.arith("b")?);
                    exact(ctx, &ls_split(a, b), &E::Ls(a.clone(), b.clone()), Rel::Le)
                }
            )
        },
        law!(
            "appg.sepimp_mul",
            "(a |-> e) -* (X * Y) = ((a |-> e) -* X) * ((a |-> e) -* Y)",
            |g| {
                let d = depth(g);
                ops()
                    .with("a", Operand::Arith(g.pointer()))
                    .with("e", Operand::Arith(g.arith()))
                    .with("X", Operand::Exp(g.expectation(d)))
                    .with("Y", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (a, e, x, y) = (o.arith("a")?, o.arith("e")?, o.exp("X")?, o.exp("Y")?);
                let pt = E::pt(a.clone(), e.clone());
                exact(
                    ctx,
                    &E::sepimp(pt.clone(), E::mul(x.clone(), y.clone())),
                    &E::mul(E::sepimp(pt.clone(), x.clone()), E::sepimp(pt, y.clone())),
                    Rel::Eq,
                )
            }
        ),
        law!(
            "appg.sepimp_sepcon",
            "(a |-> e) -* ((a |-> e) ** X) = (a ~> -) * inf + (1 .- (a ~> -)) * X where a is an address and e a value",
            |g| {
                let d = depth(g);
                ops().with("a", Operand::Arith(g.pointer())).with("e", Operand::Arith(g.arith())).with("X", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                let (a, e, x) = (o.arith("a")?, o.arith("e")?, o.exp("X")?);
                let guard = pointer_guard(&ctx.cfg, a, e);
                let pt = E::pt(a.clone(), e.clone());
                let lhs = E::mul(guard.clone(), E::sepimp(pt.clone(), E::sepcon(pt, x.clone())));
                let owned = E::ContainsAny(a.clone());
                let rhs = E::mul(guard, E::add(E::mul(owned.clone(), E::Const(ExtQ::Inf)), E::mul(E::monus(E::one(), owned), x.clone())));
                exact(ctx, &lhs, &rhs, Rel::Eq)
            }
        ),
        law!(
            "appg.disjoint_sum",
            "P * Q = 0 implies P + Q = max(P, Q)",
            |g| {
                let d = depth(g);
                let p = g.predicate(d);
                let q = E::mul(g.predicate(d), E::one_minus(p.clone()));
                ops().with("P", Operand::Exp(p)).with("Q", Operand::Exp(q))
            },
            |ctx, o| {
                let (p, q) = (o.exp("P")?, o.exp("Q")?);
                if exact(ctx, &E::mul(p.clone(), q.clone()), &E::zero(), Rel::Eq)?.violation.is_some() {
                    return Ok(Outcome::vacuous());
                }
                exact(ctx, &E::add(p.clone(), q.clone()), &E::max(p.clone(), q.clone()), Rel::Eq)
            }
        ),
        law!(
            "subst.semantic",
            "X[x/e](s, h) = X(s[x/s(e)], h) whenever s(e) is a value",
            |g| {
                let d = depth(g);
                let x = g.var().expect("at least one variable");
                ops().with("X", Operand::Exp(g.expectation(d))).with("x", Operand::Var(x)).with("e", Operand::Arith(g.arith()))
            },
            |ctx, o| {
                let (x, var, e) = (o.exp("X")?, o.var("x")?, o.arith("e")?);
                let substituted = ctx.table(&x.substitute(var, e))?;
                let original = ctx.table(x)?;
                let sp = &ctx.space;
                let slot = sp.slot_of(var).ok_or_else(|| ModelError::UnknownVariable(var.clone()))?;
                let ce = CArith::compile(e, sp)?;
                let mut out = Outcome::default();
                for i in substituted.indices_within(ctx.max_cells) {
                    let (s, h) = sp.split(i);
                    let Some(s2) = sp.stack_with(s, slot, ce.eval(sp.stack(s))) else { continue };
                    match (&substituted.data[i], original.at(s2, h)) {
                        (Ok(a), Ok(b)) if a != b => {
                            out.violation = Some(Violation {
                                state: sp.state_of(i).to_string(),
                                lhs: a.clone(),
                                rhs: b.clone(),
                                relation: "=".into(),
                                detail: format!("X evaluated at {}", sp.state_of(sp.index(s2, h))),
                            });
                            return Ok(out);
                        }
                        (Ok(_), Ok(_)) => {}
                        _ => out.error_states += 1,
                    }
                }
                Ok(out)
            }
        ),
        law!(
            "embed.zero_one",
            "the embedding of an SL formula is 0/1-valued",
            |g| {
                let d = depth(g).min(3);
                ops().with("phi", Operand::Formula(g.formula(d)))
            },
            |ctx, o| {
                let t = ctx.table(&embed_sl(o.formula("phi")?))?;
                let mut out = Outcome::default();
                for i in t.indices_within(ctx.max_cells) {
                    match &t.data[i] {
                        Ok(v) if embedded_truth(v).is_none() => {
                            out.violation = Some(Violation {
                                state: ctx.space.state_of(i).to_string(),
                                lhs: v.clone(),
                                rhs: ExtQ::one(),
                                relation: "in {0,1}".into(),
                                detail: String::new(),
                            });
                            return Ok(out);
                        }
                        Ok(_) => {}
                        Err(_) => out.error_states += 1,
                    }
                }
                Ok(out)
            }
        ),
        law!(
            "embed.agrees_direct",
            "the embedding of an SL formula is 1 exactly where the formula is satisfied",
            |g| {
                let d = depth(g).min(2);
                ops().with("phi", Operand::Formula(g.formula(d)))
            },
            |ctx, o| {
                let phi = o.formula("phi")?;
                let t = ctx.table(&embed_sl(phi))?;
                let mut out = Outcome::default();
                for i in t.indices_within(ctx.max_cells) {
                    let Ok(v) = &t.data[i] else {
                        out.error_states += 1;
                        continue;
                    };
                    let state = ctx.space.state_of(i);
                    let direct = satisfies(phi, &state.stack, &state.heap, &ctx.cfg)?;
                    if embedded_truth(v) != Some(direct) {
                        out.violation = Some(Violation {
                            state: state.to_string(),
                            lhs: v.clone(),
                            rhs: ExtQ::bool(direct),
                            relation: "=".into(),
                            detail: "embedding versus direct satisfaction".into(),
                        });
                        return Ok(out);
                    }
                }
                Ok(out)
            }
        ),
    ]
}

fn domain_exact_pred(g: &mut Gen, depth: usize) -> E {
    if depth == 0 || g.chance(0.5) {
        return match g.rng().gen_range(0..3) {
            0 => E::Emp,
            1 => E::pt(g.pointer(), g.arith()),
            _ => E::ValidPointer(g.pointer()),
        };
    }
    E::sepcon(domain_exact_pred(g, depth - 1), domain_exact_pred(g, depth - 1))
}

fn ls_split(a: &Arith, b: &Arith) -> E {
    let mid = "q_mid";
    E::sup(mid, E::sepcon(E::Ls(a.clone(), Arith::var(mid)), E::Ls(Arith::var(mid), b.clone())))
}

fn transformer_laws() -> Vec<Law> {
    let mut laws = vec![
        law!(
            "wp.monotone",
            "X <= X' implies T(c)(X) <= T(c)(X') in every mode",
            |g| {
                let (d, len) = (depth(g), g.spec().program_len);
                let mode = random_mode(g);
                let features = program_features(g, true, true);
                let c = g.program_with(len, features);
                let x = post_for(g, mode, d);
                let x2 = E::max(x.clone(), post_for(g, mode, d));
                ops().with("mode", Operand::Mode(mode)).with("c", Operand::Prog(c)).with("X", Operand::Exp(x)).with("X'", Operand::Exp(x2))
            },
            |ctx, o| {
                let (mode, c, x, x2) = (o.mode("mode")?, o.prog("c")?, o.exp("X")?, o.exp("X'")?);
                let (lo, r1) = ctx.run(mode, c, &*ctx.table(x)?)?;
                let (hi, r2) = ctx.run(mode, c, &*ctx.table(x2)?)?;
                Ok(compare(ctx, &lo, &hi, Rel::Le, &loop_tol(ctx, &[&r1, &r2]), mode.name()))
            }
        ),
        law!(
            "wp.strict",
            "wp(c)(0) = 0",
            |g| {
                let len = g.spec().program_len;
                let mode = if g.chance(0.5) { TransformerMode::WP } else { TransformerMode::AWP };
                let features = program_features(g, true, true);
                ops().with("mode", Operand::Mode(mode)).with("c", Operand::Prog(g.program_with(len, features)))
            },
            |ctx, o| {
                let (mode, c) = (o.mode("mode")?, o.prog("c")?);
                let zero = ctx.table(&E::zero())?;
                let (out, r) = ctx.run(mode, c, &zero)?;
                Ok(compare(ctx, &out, &zero, Rel::Eq, &loop_tol(ctx, &[&r]), mode.name()))
            }
        ),
        law!(
            "wp.one_bounded",
            "T(c)(P) <= 1 for predicates P in every mode",
            |g| {
                let (d, len) = (depth(g), g.spec().program_len);
                let mode = random_mode(g);
                let features = program_features(g, true, true);
                ops().with("mode", Operand::Mode(mode)).with("c", Operand::Prog(g.program_with(len, features))).with("P", Operand::Exp(g.predicate(d)))
            },
            |ctx, o| {
                let (mode, c, p) = (o.mode("mode")?, o.prog("c")?, o.exp("P")?);
                let (out, r) = ctx.run(mode, c, &*ctx.table(p)?)?;
                Ok(compare(ctx, &out, &*ctx.table(&E::one())?, Rel::Le, &loop_tol(ctx, &[&r]), mode.name()))
            }
        ),
        law!(
            "wp.superlinear",
            "k * wp(c)(X) + wp(c)(Y) <= wp(c)(k * X + Y)",
            |g| {
                let (d, len) = (depth(g), g.spec().program_len);
                let features = program_features(g, true, true);
                ops()
                    .with("c", Operand::Prog(g.program_with(len, features)))
                    .with("k", Operand::Rational(g.scalar()))
                    .with("X", Operand::Exp(g.expectation(d)))
                    .with("Y", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| linearity(ctx, o, Rel::Le)
        ),
        law!(
            "wp.linear",
            "wp(c)(k * X + Y) = k * wp(c)(X) + wp(c)(Y) for allocation-free c",
            |g| {
                let (d, len) = (depth(g), g.spec().program_len);
                let features = program_features(g, true, false);
                ops()
                    .with("c", Operand::Prog(g.program_with(len, features)))
                    .with("k", Operand::Rational(g.scalar()))
                    .with("X", Operand::Exp(g.expectation(d)))
                    .with("Y", Operand::Exp(g.expectation(d)))
            },
            |ctx, o| {
                if o.prog("c")?.has_alloc() {
                    return Ok(Outcome::vacuous());
                }
                linearity(ctx, o, Rel::Eq)
            }
        ),
        law!(
            "wp.continuity",
            "wp(c)(max of a chain) = max of wp(c) over the chain for allocation-free c",
            |g| {
                let (d, len) = (depth(g), g.spec().program_len);
                let features = program_features(g, true, false);
                let x1 = g.expectation(d);
                let x2 = E::max(x1.clone(), g.expectation(d));
                let x3 = E::max(x2.clone(), g.expectation(d));
                ops()
                    .with("c", Operand::Prog(g.program_with(len, features)))
                    .with("X1", Operand::Exp(x1))
                    .with("X2", Operand::Exp(x2))
                    .with("X3", Operand::Exp(x3))
            },
            |ctx, o| {
                let c = o.prog("c")?;
                if c.has_alloc() {
                    return Ok(Outcome::vacuous());
                }
                let chain = [o.exp("X1")?, o.exp("X2")?, o.exp("X3")?];
                let mut tables = Vec::new();
                let mut residuals = Vec::new();
                for x in chain {
                    let (t, r) = ctx.run(TransformerMode::WP, c, &*ctx.table(x)?)?;
                    tables.push(t);
                    residuals.push(r);
                }
                let sup = ctx.table(&E::max(E::max(chain[0].clone(), chain[1].clone()), chain[2].clone()))?;
                let (of_sup, r) = ctx.run(TransformerMode::WP, c, &sup)?;
                residuals.push(r);
                let max = tables[0].zip(&tables[1], e_max).zip(&tables[2], e_max);
                Ok(compare(ctx, &of_sup, &max, Rel::Eq, &loop_tol(ctx, &residuals.iter().collect::<Vec<_>>()), ""))
            }
        ),
        law!(
            "wp.pure_frame",
            "wp(c)(Y * X) = Y * wp(c)(X) for pure Y not mentioning variables modified by c",
            |g| {
                let (d, len) = (depth(g), g.spec().program_len);
                let features = program_features(g, true, true);
                let c = g.program_with(len, features);
                let frame_vars = unmodified_vars(g, &c);
                let y = g.restricted(frame_vars, |g| g.pure(d));
                ops().with("c", Operand::Prog(c)).with("X", Operand::Exp(g.expectation(d))).with("Y", Operand::Exp(y))
            },
            |ctx, o| {
                let (c, x, y) = (o.prog("c")?, o.exp("X")?, o.exp("Y")?);
                if y.free_vars().iter().any(|v| c.modified_vars().contains(v)) {
                    return Ok(Outcome::vacuous());
                }
                let yt = ctx.table(y)?;
                let (framed, r1) = ctx.run(TransformerMode::WP, c, &*ctx.table(&E::mul(y.clone(), x.clone()))?)?;
                let (plain, r2) = ctx.run(TransformerMode::WP, c, &*ctx.table(x)?)?;
                let tol = frame_tol(ctx, &[&r1, &r2], &yt);
                let Some(tol) = tol else { return Ok(Outcome::vacuous()) };
                Ok(compare(ctx, &framed, &yt.zip(&plain, crate::expect::table::e_mul), Rel::Eq, &tol, ""))
            }
        ),
        law!(
            "frame.wp",
            "wp(c)(X) ** Y <= wp(c)(X ** Y) when c modifies no variable of Y",
            |g| frame_operands(g, false),
            |ctx, o| frame_check(ctx, o, TransformerMode::WP)
        ),
        law!(
            "frame.wlp",
            "wlp(c)(X) ** Y <= wlp(c)(X ** Y) for one-bounded X, Y when c modifies no variable of Y",
            |g| frame_operands(g, true),
            |ctx, o| frame_check(ctx, o, TransformerMode::WLP)
        ),
        law!(
            "wp.literal_rules",
            "the heap rules in connective form agree with their direct evaluation in every mode",
            |g| {
                let (d, len) = (depth(g), g.spec().program_len);
                let mode = random_mode(g);
                let features = program_features(g, true, true);
                let c = g.program_with(len, features);
                ops().with("mode", Operand::Mode(mode)).with("c", Operand::Prog(c)).with("X", Operand::Exp(post_for(g, mode, d)))
            },
            |ctx, o| {
                let (mode, c, x) = (o.mode("mode")?, o.prog("c")?, o.exp("X")?);
                let post = ctx.table(x)?;
                let (direct, r1) = ctx.run_with(mode, c, &post, false)?;
                let (literal, r2) = ctx.run_with(mode, c, &post, true)?;
                Ok(compare(ctx, &literal, &direct, Rel::Eq, &loop_tol(ctx, &[&r1, &r2]), mode.name()))
            }
        ),
    ];
    let duals: [(&'static str, CheckFn); 4] = [
        ("duality.wp_awlep", |ctx, o| duality(ctx, o, TransformerMode::WP)),
        ("duality.wlp_awep", |ctx, o| duality(ctx, o, TransformerMode::WLP)),
        ("duality.wep_awlp", |ctx, o| duality(ctx, o, TransformerMode::WEP)),
        ("duality.wlep_awp", |ctx, o| duality(ctx, o, TransformerMode::WLEP)),
    ];
    for (id, check) in duals {
        laws.push(law!(
            id,
            "T(c)(f) = 1 - T*(c)(1 - f) for the dual transformer T* and one-bounded f",
            |g| {
                let (d, len) = (depth(g), g.spec().program_len);
                let features = program_features(g, true, true);
                ops().with("c", Operand::Prog(g.program_with(len, features))).with("f", Operand::Exp(g.one_bounded(d)))
            },
            check
        ));
    }
    laws
}

fn linearity(ctx: &LawCtx, o: &Operands, rel: Rel) -> Result<Outcome, ModelError> {
    let (c, k, x, y) = (o.prog("c")?, o.rational("k")?, o.exp("X")?, o.exp("Y")?);
    let combined = E::add(E::mul(E::Const(ExtQ::fin(k.clone())), x.clone()), y.clone());
    let (whole, r1) = ctx.run(TransformerMode::WP, c, &*ctx.table(&combined)?)?;
    let (tx, r2) = ctx.run(TransformerMode::WP, c, &*ctx.table(x)?)?;
    let (ty, r3) = ctx.run(TransformerMode::WP, c, &*ctx.table(y)?)?;
    let parts = scale(&tx, k).zip(&ty, e_add);
    if !(r1.is_zero() && r2.is_zero() && r3.is_zero()) && finite_max(&parts).is_none() {
        return Ok(Outcome::vacuous());
    }
    let tol = loop_tol(ctx, &[&r1, &r2, &r3]).scale(&Q::one().add(k));
    Ok(compare(ctx, &parts, &whole, rel, &tol, ""))
}

fn frame_tol(ctx: &LawCtx, residuals: &[&ExtQ], frame: &Table) -> Option<ExtQ> {
    let tol = loop_tol(ctx, residuals);
    if tol.is_zero() {
        return Some(tol);
    }
    finite_max(frame).map(|m| tol.mul(&m.max_of(&ExtQ::one())))
}

fn frame_operands(g: &mut Gen, one_bounded: bool) -> Operands {
    let (d, len) = (depth(g), g.spec().program_len);
    let features = program_features(g, true, true);
    let c = g.program_with(len, features);
    let frame_vars = unmodified_vars(g, &c);
    let x = if one_bounded { g.one_bounded(d) } else { g.expectation(d) };
    let y = g.restricted(frame_vars, |g| if one_bounded { g.one_bounded(d) } else { g.expectation(d) });
    ops().with("c", Operand::Prog(c)).with("X", Operand::Exp(x)).with("Y", Operand::Exp(y))
}

fn frame_check(ctx: &LawCtx, o: &Operands, mode: TransformerMode) -> Result<Outcome, ModelError> {
    let (c, x, y) = (o.prog("c")?, o.exp("X")?, o.exp("Y")?);
    if y.free_vars().iter().any(|v| c.modified_vars().contains(v)) {
        return Ok(Outcome::vacuous());
    }
    let yt = ctx.table(y)?;
    let (tx, r1) = ctx.run(mode, c, &*ctx.table(x)?)?;
    let (txy, r2) = ctx.run(mode, c, &*ctx.table(&E::sepcon(x.clone(), y.clone()))?)?;
    let Some(tol) = frame_tol(ctx, &[&r1, &r2], &yt) else { return Ok(Outcome::vacuous()) };
    Ok(compare(ctx, &tx.sepcon(&yt), &txy, Rel::Le, &tol, mode.name()))
}

fn duality(ctx: &LawCtx, o: &Operands, mode: TransformerMode) -> Result<Outcome, ModelError> {
    let (c, f) = (o.prog("c")?, o.exp("f")?);
    let ft = ctx.table(f)?;
    let (lhs, r1) = ctx.run(mode, c, &ft)?;
    let (dual, r2) = ctx.run(mode.dual(), c, &ft.one_minus())?;
    Ok(compare(ctx, &lhs, &dual.one_minus(), Rel::Eq, &loop_tol(ctx, &[&r1, &r2]), &format!("{} against 1 - {}(1 - f)", mode, mode.dual())))
}
