//! Lexer and recursive-descent parsers for programs, guards, expectations and SL formulas.

use crate::error::ParseError;
use crate::expect::Expectation;
use crate::num::{ExtQ, Q};
use crate::sl::SlFormula;
use crate::syntax::{Arith, CmpOp, Guard, Program};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Decimal(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

// Longest symbols first so that greedy matching works.
const SYMBOLS: &[&str] = &[
    "|->", ":=", "<=", ">=", "!=", "==", "&&", "||", "**", "-*", "-@", "@*", ".-", "~>", ";", "{", "}", "(", ")", "[",
    "]", "<", ">", "=", "!", "+", "-", "*", "/", ",", ".",
];

const KEYWORDS: &[&str] = &[
    "skip", "if", "else", "while", "new", "free", "uniform", "true", "false", "emp", "size", "ls", "len", "tree",
    "path", "sup", "inf", "max", "min", "sum", "sep", "exists",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let mut tok = Tok::Int(chars[i..j].iter().collect());
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                let mut k = j + 1;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                tok = Tok::Decimal(chars[i..k].iter().collect());
                j = k;
            }
            col += j - i;
            i = j;
            out.push(Token { tok, line: start_line, col: start_col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            out.push(Token { tok: Tok::Ident(word), line: start_line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                out.push(Token { tok: Tok::Sym(sym), line: start_line, col: start_col });
            }
            None => {
                return Err(ParseError {
                    line,
                    column: col,
                    message: format!("unexpected character `{c}`"),
                    expected: vec![],
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Parser> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            column: t.col,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) | Tok::Int(s) | Tok::Decimal(s) => format!("unexpected `{s}`"),
            Tok::Sym(s) => format!("unexpected `{s}`"),
            Tok::Eof => "unexpected end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(self.describe(), &[s]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(self.describe(), &["identifier"])),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            Err(self.error(self.describe(), &["end of input"]))
        }
    }

    fn int_literal(&mut self) -> PResult<i64> {
        match self.peek().clone() {
            Tok::Int(s) => {
                self.advance();
                s.parse().map_err(|_| self.error(format!("integer literal `{s}` out of range"), &[]))
            }
            _ => Err(self.error(self.describe(), &["integer"])),
        }
    }

    // ---- arithmetic ----

    fn arith(&mut self) -> PResult<Arith> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym("+") {
                lhs = Arith::add(lhs, self.term()?);
            } else if self.eat_sym("-") {
                lhs = Arith::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> PResult<Arith> {
        let mut lhs = self.factor()?;
        while self.eat_sym("*") {
            lhs = Arith::mul(lhs, self.factor()?);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> PResult<Arith> {
        match self.peek().clone() {
            Tok::Int(_) => Ok(Arith::Const(self.int_literal()?)),
            Tok::Sym("-") => {
                self.advance();
                if let Tok::Int(s) = self.peek().clone() {
                    self.advance();
                    let n: i64 = format!("-{s}").parse().map_err(|_| self.error("integer literal out of range", &[]))?;
                    Ok(Arith::Const(n))
                } else {
                    let inner = self.factor()?;
                    Ok(Arith::sub(Arith::Const(0), inner))
                }
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.arith()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(_) => Ok(Arith::Var(self.ident()?)),
            _ => Err(self.error(self.describe(), &["integer", "identifier", "("])),
        }
    }

    // ---- guards ----

    fn guard(&mut self) -> PResult<Guard> {
        let mut lhs = self.guard_conj()?;
        while self.eat_sym("||") {
            lhs = Guard::or(lhs, self.guard_conj()?);
        }
        Ok(lhs)
    }

    fn guard_conj(&mut self) -> PResult<Guard> {
        let mut lhs = self.guard_unary()?;
        while self.eat_sym("&&") {
            lhs = Guard::and(lhs, self.guard_unary()?);
        }
        Ok(lhs)
    }

    fn guard_unary(&mut self) -> PResult<Guard> {
        if self.eat_sym("!") {
            return Ok(Guard::not(self.guard_unary()?));
        }
        if self.eat_kw("true") {
            return Ok(Guard::True);
        }
        if self.eat_kw("false") {
            return Ok(Guard::False);
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.advance();
            if let Ok(g) = self.guard() {
                if self.eat_sym(")") && !self.at_cmp_op() {
                    return Ok(g);
                }
            }
            self.pos = save;
        }
        self.comparison_chain()
    }

    fn at_cmp_op(&self) -> bool {
        ["=", "==", "!=", "<", "<=", ">", ">="].iter().any(|s| self.is_sym(s))
    }

    fn cmp_op(&mut self) -> Option<(CmpOp, bool)> {
        let r = match self.peek() {
            Tok::Sym("=") | Tok::Sym("==") => (CmpOp::Eq, false),
            Tok::Sym("!=") => (CmpOp::Ne, false),
            Tok::Sym("<") => (CmpOp::Lt, false),
            Tok::Sym("<=") => (CmpOp::Le, false),
            Tok::Sym(">") => (CmpOp::Lt, true),
            Tok::Sym(">=") => (CmpOp::Le, true),
            _ => return None,
        };
        self.advance();
        Some(r)
    }

    fn comparison_chain(&mut self) -> PResult<Guard> {
        let mut lhs = self.arith()?;
        let mut acc: Option<Guard> = None;
        while let Some((op, swap)) = self.cmp_op() {
            let rhs = self.arith()?;
            let cmp = if swap { Guard::cmp(op, rhs.clone(), lhs) } else { Guard::cmp(op, lhs, rhs.clone()) };
            acc = Some(match acc {
                None => cmp,
                Some(prev) => Guard::and(prev, cmp),
            });
            lhs = rhs;
        }
        acc.ok_or_else(|| self.error(self.describe(), &["=", "!=", "<", "<=", ">", ">="]))
    }

    // ---- programs ----

    fn program(&mut self) -> PResult<Program> {
        let mut items = vec![self.statement()?];
        while self.eat_sym(";") {
            if self.is_sym("}") || matches!(self.peek(), Tok::Eof) {
                break;
            }
            items.push(self.statement()?);
        }
        Ok(Program::seq_all(items))
    }

    fn block(&mut self) -> PResult<Program> {
        self.expect_sym("{")?;
        let p = self.program()?;
        self.expect_sym("}")?;
        Ok(p)
    }

    fn probability(&mut self) -> PResult<Q> {
        let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
        let q = self.rational_literal()?;
        if q.is_negative() || q > Q::one() {
            return Err(ParseError {
                line,
                column: col,
                message: format!("probability {q} outside [0,1]"),
                expected: vec![],
            });
        }
        Ok(q)
    }

    fn rational_literal(&mut self) -> PResult<Q> {
        match self.peek().clone() {
            Tok::Decimal(s) => {
                self.advance();
                s.parse()
            }
            Tok::Int(s) => {
                self.advance();
                if self.is_sym("/") && matches!(self.peek_at(1), Tok::Int(_)) {
                    self.advance();
                    let Tok::Int(d) = self.advance() else { unreachable!() };
                    format!("{s}/{d}").parse().map_err(|e: ParseError| self.error(e.message, &[]))
                } else {
                    s.parse()
                }
            }
            _ => Err(self.error(self.describe(), &["rational literal"])),
        }
    }

    fn statement(&mut self) -> PResult<Program> {
        if self.eat_kw("skip") {
            return Ok(Program::Skip);
        }
        if self.eat_kw("free") {
            self.expect_sym("(")?;
            let e = self.arith()?;
            self.expect_sym(")")?;
            return Ok(Program::Free(e));
        }
        if self.eat_kw("if") {
            self.expect_sym("(")?;
            let g = self.guard()?;
            self.expect_sym(")")?;
            let then = self.block()?;
            let other = if self.eat_kw("else") { self.block()? } else { Program::Skip };
            return Ok(Program::ite(g, then, other));
        }
        if self.eat_kw("while") {
            self.expect_sym("(")?;
            let g = self.guard()?;
            self.expect_sym(")")?;
            let body = self.block()?;
            return Ok(Program::while_loop(g, body));
        }
        if self.is_sym("{") {
            let left = self.block()?;
            if self.eat_sym("[") {
                let p = self.probability()?;
                self.expect_sym("]")?;
                let right = self.block()?;
                return Ok(Program::pchoice(left, p, right));
            }
            return Ok(left);
        }
        if self.eat_sym("<") {
            let target = self.arith()?;
            self.expect_sym(">")?;
            self.expect_sym(":=")?;
            let value = self.arith()?;
            return Ok(Program::Mutate(target, value));
        }
        if let Tok::Ident(_) = self.peek() {
            let x = self.ident()?;
            self.expect_sym(":=")?;
            if self.eat_kw("new") {
                self.expect_sym("(")?;
                let mut args = vec![self.arith()?];
                while self.eat_sym(",") {
                    args.push(self.arith()?);
                }
                self.expect_sym(")")?;
                return Ok(Program::Alloc(x, args));
            }
            if self.eat_kw("uniform") {
                self.expect_sym("(")?;
                let lo = self.arith()?;
                self.expect_sym(",")?;
                let hi = self.arith()?;
                self.expect_sym(")")?;
                return Ok(Program::Uniform(x, lo, hi));
            }
            if self.eat_sym("<") {
                let e = self.arith()?;
                self.expect_sym(">")?;
                return Ok(Program::Lookup(x, e));
            }
            return Ok(Program::Assign(x, self.arith()?));
        }
        Err(self.error(self.describe(), &["skip", "free", "if", "while", "{", "<", "identifier"]))
    }

    // ---- expectations ----

    fn expectation(&mut self) -> PResult<Expectation> {
        let start = self.pos;
        let lhs = self.exp_additive()?;
        let wand = if self.eat_sym("-*") {
            Some(true)
        } else if self.eat_sym("-@") {
            Some(false)
        } else {
            None
        };
        match wand {
            None => Ok(lhs),
            Some(intrinsic) => {
                if !lhs.is_predicate() {
                    let t = &self.toks[start];
                    return Err(ParseError {
                        line: t.line,
                        column: t.col,
                        message: "left operand of a separating implication must be a 0/1-valued predicate".into(),
                        expected: vec![],
                    });
                }
                let rhs = self.expectation()?;
                Ok(if intrinsic { Expectation::sepimp(lhs, rhs) } else { Expectation::err_sepimp(lhs, rhs) })
            }
        }
    }

    fn exp_additive(&mut self) -> PResult<Expectation> {
        let mut lhs = self.exp_multiplicative()?;
        loop {
            if self.eat_sym("+") {
                lhs = Expectation::add(lhs, self.exp_multiplicative()?);
            } else if self.eat_sym(".-") {
                lhs = Expectation::monus(lhs, self.exp_multiplicative()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn exp_multiplicative(&mut self) -> PResult<Expectation> {
        let mut lhs = self.exp_primary()?;
        loop {
            if self.eat_sym("*") {
                lhs = Expectation::mul(lhs, self.exp_primary()?);
            } else if self.eat_sym("**") {
                lhs = Expectation::sepcon(lhs, self.exp_primary()?);
            } else if self.eat_sym("@*") {
                lhs = Expectation::err_sepcon(lhs, self.exp_primary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    /// Tries `arith |-> ...` or `arith ~> ...`; restores the position on failure.
    fn try_heap_atom(&mut self) -> PResult<Option<Expectation>> {
        let save = self.pos;
        let Ok(lhs) = self.arith() else {
            self.pos = save;
            return Ok(None);
        };
        if self.eat_sym("|->") {
            if self.eat_sym("-") {
                if !self.starts_arith_operand() {
                    return Ok(Some(Expectation::ValidPointer(lhs)));
                }
                // a negative first value such as `x |-> -1`
                self.pos -= 1;
            }
            let mut args = vec![self.arith()?];
            while self.eat_sym(",") {
                args.push(self.arith()?);
            }
            return Ok(Some(Expectation::PointsTo(lhs, args)));
        }
        if self.eat_sym("~>") {
            if self.eat_sym("-") {
                if !self.starts_arith_operand() {
                    return Ok(Some(Expectation::ContainsAny(lhs)));
                }
                self.pos -= 1;
            }
            return Ok(Some(Expectation::Contains(lhs, self.arith()?)));
        }
        self.pos = save;
        Ok(None)
    }

    fn starts_arith_operand(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Sym("(") => true,
            Tok::Ident(s) => !KEYWORDS.contains(&s.as_str()),
            _ => false,
        }
    }

    fn arith_args(&mut self, n: usize) -> PResult<Vec<Arith>> {
        self.expect_sym("(")?;
        let mut out = vec![self.arith()?];
        for _ in 1..n {
            self.expect_sym(",")?;
            out.push(self.arith()?);
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn exp_primary(&mut self) -> PResult<Expectation> {
        if let Some(atom) = self.try_heap_atom()? {
            return Ok(atom);
        }
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.advance();
                let e = self.expectation()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.advance();
                if self.eat_kw("emp") {
                    self.expect_sym("]")?;
                    return Ok(Expectation::Emp);
                }
                let g = self.guard()?;
                self.expect_sym("]")?;
                Ok(Expectation::Iverson(g))
            }
            Tok::Ident(word) => match word.as_str() {
                "size" => {
                    self.advance();
                    Ok(Expectation::Size)
                }
                "ls" | "len" => {
                    self.advance();
                    let mut a = self.arith_args(2)?;
                    let (x, y) = (a.remove(0), a.remove(0));
                    Ok(if word == "ls" { Expectation::Ls(x, y) } else { Expectation::Len(x, y) })
                }
                "tree" => {
                    self.advance();
                    let mut a = self.arith_args(1)?;
                    Ok(Expectation::Tree(a.remove(0)))
                }
                "path" => {
                    self.advance();
                    self.expect_sym("(")?;
                    let k = self.int_literal()?;
                    if k < 1 {
                        return Err(self.error("record size of path must be at least 1", &[]));
                    }
                    self.expect_sym(",")?;
                    let e = self.arith()?;
                    self.expect_sym(")")?;
                    Ok(Expectation::Path(k as usize, e))
                }
                "max" | "min" => {
                    self.advance();
                    self.expect_sym("(")?;
                    let a = self.expectation()?;
                    self.expect_sym(",")?;
                    let b = self.expectation()?;
                    self.expect_sym(")")?;
                    Ok(if word == "max" { Expectation::max(a, b) } else { Expectation::min(a, b) })
                }
                "sum" | "sep" => {
                    self.advance();
                    self.expect_sym("(")?;
                    let mut items = vec![self.expectation()?];
                    while self.eat_sym(";") {
                        items.push(self.expectation()?);
                    }
                    self.expect_sym(")")?;
                    Ok(if word == "sum" { Expectation::Sum(items) } else { Expectation::Sep(items) })
                }
                "sup" | "inf" => {
                    let binder = matches!(self.peek_at(1), Tok::Ident(v) if !KEYWORDS.contains(&v.as_str()))
                        && matches!(self.peek_at(2), Tok::Sym("."));
                    self.advance();
                    if !binder {
                        if word == "inf" {
                            return Ok(Expectation::Const(ExtQ::Inf));
                        }
                        return Err(self.error(self.describe(), &["bound variable"]));
                    }
                    let v = self.ident()?;
                    self.expect_sym(".")?;
                    let body = self.expectation()?;
                    Ok(if word == "sup" { Expectation::sup(&v, body) } else { Expectation::inf(&v, body) })
                }
                _ => Err(self.error(self.describe(), &["expectation"])),
            },
            Tok::Int(_) | Tok::Decimal(_) => {
                let is_one = matches!(self.peek(), Tok::Int(s) if s == "1")
                    && matches!(self.peek_at(1), Tok::Sym("-"));
                if is_one {
                    self.advance();
                    self.advance();
                    return Ok(Expectation::one_minus(self.exp_primary()?));
                }
                let q = self.rational_literal()?;
                if q.is_negative() {
                    return Err(self.error("expectation constants are nonnegative", &[]));
                }
                Ok(Expectation::Const(ExtQ::Fin(q)))
            }
            _ => Err(self.error(self.describe(), &["expectation"])),
        }
    }

    // ---- separation logic formulas ----

    fn sl(&mut self) -> PResult<SlFormula> {
        let lhs = self.sl_and()?;
        if self.eat_sym("-*") {
            return Ok(SlFormula::wand(lhs, self.sl()?));
        }
        Ok(lhs)
    }

    fn sl_and(&mut self) -> PResult<SlFormula> {
        let mut lhs = self.sl_star()?;
        while self.eat_sym("&&") {
            lhs = SlFormula::and(lhs, self.sl_star()?);
        }
        Ok(lhs)
    }

    fn sl_star(&mut self) -> PResult<SlFormula> {
        let mut lhs = self.sl_unary()?;
        while self.eat_sym("**") {
            lhs = SlFormula::star(lhs, self.sl_unary()?);
        }
        Ok(lhs)
    }

    fn sl_unary(&mut self) -> PResult<SlFormula> {
        if self.eat_sym("!") {
            return Ok(SlFormula::not(self.sl_unary()?));
        }
        if self.eat_kw("emp") {
            return Ok(SlFormula::Emp);
        }
        if self.eat_kw("true") {
            return Ok(SlFormula::Pure(Guard::True));
        }
        if self.eat_kw("false") {
            return Ok(SlFormula::Pure(Guard::False));
        }
        if self.eat_kw("exists") {
            let v = self.ident()?;
            self.expect_sym(".")?;
            return Ok(SlFormula::exists(&v, self.sl()?));
        }
        if self.eat_sym("[") {
            let g = self.guard()?;
            self.expect_sym("]")?;
            return Ok(SlFormula::Pure(g));
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.advance();
            if let Ok(f) = self.sl() {
                if self.eat_sym(")") && !self.at_cmp_op() && !self.is_sym("|->") {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        let save = self.pos;
        if let Ok(lhs) = self.arith() {
            if self.eat_sym("|->") {
                let rhs = self.arith()?;
                return Ok(SlFormula::PointsTo(lhs, rhs));
            }
        }
        self.pos = save;
        Ok(SlFormula::Pure(self.comparison_chain()?))
    }
}

fn whole<T>(text: &str, f: impl FnOnce(&mut Parser) -> PResult<T>) -> PResult<T> {
    let mut p = Parser::new(text)?;
    let out = f(&mut p)?;
    p.expect_eof()?;
    Ok(out)
}

/// Parses a program in the concrete syntax.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    whole(text, |p| p.program())
}

pub fn parse_guard(text: &str) -> Result<Guard, ParseError> {
    whole(text, |p| p.guard())
}

pub fn parse_arith(text: &str) -> Result<Arith, ParseError> {
    whole(text, |p| p.arith())
}

pub fn parse_expectation(text: &str) -> Result<Expectation, ParseError> {
    whole(text, |p| p.expectation())
}

pub fn parse_sl(text: &str) -> Result<SlFormula, ParseError> {
    whole(text, |p| p.sl())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_position_and_expected_tokens() {
        let err = parse_program("x := 1 ;\n y := ").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(!err.expected.is_empty());
    }

    #[test]
    fn rejects_probability_above_one() {
        assert!(parse_program("{ skip } [3/2] { skip }").is_err());
        assert!(parse_program("{ skip } [0.25] { skip }").is_ok());
    }

    #[test]
    fn negative_points_to_values() {
        let e = parse_expectation("x |-> -1").unwrap();
        assert_eq!(e, Expectation::PointsTo(Arith::var("x"), vec![Arith::Const(-1)]));
        assert_eq!(parse_expectation("x |-> -").unwrap(), Expectation::ValidPointer(Arith::var("x")));
    }

    #[test]
    fn wand_requires_predicate() {
        assert!(parse_expectation("size -* [emp]").is_err());
        assert!(parse_expectation("[emp] -* size").is_ok());
    }

    #[test]
    fn chained_comparison() {
        let g = parse_guard("0 <= i < n").unwrap();
        assert!(matches!(g, Guard::And(..)));
    }
}
