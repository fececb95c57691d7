//! Expression grammar: parsing to a raw syntax tree and normalization into
//! canonical `Expr` form.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' exponent)?      exponent := ['-'] INT | '(' ['-'] INT ')'
//! atom   := INT | 'i' | IDENT | 'log' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `[a-zA-Z][a-zA-Z0-9]*` and must be declared in the
//! variable context; `i` is the imaginary unit and `log` the only function.

use crate::expr::{Expr, ExprError, VarCtx};
use crate::gaussian::GaussianRational;
use crate::poly::{Atom, VarId};
use num::bigint::BigInt;
use num::{BigRational, Zero};
use std::fmt;
use std::sync::Arc;

/// Largest accepted exponent magnitude; anything bigger is almost certainly
/// an input mistake and would only burn memory.
const MAX_EXPONENT: i64 = 4096;

/// A parse failure with the byte offset where it happened.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl ParseError {
    fn new(pos: usize, msg: impl Into<String>) -> Self {
        ParseError {
            pos,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

/// Pre-normalization syntax tree. Every node keeps its source position so
/// that algebraic errors during normalization can still point at the input.
#[derive(Clone, Debug)]
pub enum RawExpr {
    Int(BigInt, usize),
    Imag(usize),
    Var(VarId, Arc<str>, usize),
    Neg(Box<RawExpr>, usize),
    Add(Box<RawExpr>, Box<RawExpr>, usize),
    Sub(Box<RawExpr>, Box<RawExpr>, usize),
    Mul(Box<RawExpr>, Box<RawExpr>, usize),
    Div(Box<RawExpr>, Box<RawExpr>, usize),
    Pow(Box<RawExpr>, i32, usize),
    Log(Box<RawExpr>, usize),
}

impl RawExpr {
    pub fn pos(&self) -> usize {
        match self {
            RawExpr::Int(_, p)
            | RawExpr::Imag(p)
            | RawExpr::Var(_, _, p)
            | RawExpr::Neg(_, p)
            | RawExpr::Add(_, _, p)
            | RawExpr::Sub(_, _, p)
            | RawExpr::Mul(_, _, p)
            | RawExpr::Div(_, _, p)
            | RawExpr::Pow(_, _, p)
            | RawExpr::Log(_, p) => *p,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        if c.is_ascii_whitespace() {
            k += 1;
            continue;
        }
        let start = k;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '0'..='9' => {
                while k + 1 < bytes.len() && bytes[k + 1].is_ascii_digit() {
                    k += 1;
                }
                let text = &src[start..=k];
                Tok::Int(BigInt::parse_bytes(text.as_bytes(), 10).expect("digits"))
            }
            'a'..='z' | 'A'..='Z' => {
                while k + 1 < bytes.len() && bytes[k + 1].is_ascii_alphanumeric() {
                    k += 1;
                }
                Tok::Ident(src[start..=k].to_string())
            }
            other => {
                return Err(ParseError::new(
                    start,
                    format!("unexpected character `{}`", other),
                ))
            }
        };
        out.push((tok, start));
        k += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    ctx: &'a VarCtx,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, ParseError> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            Err(ParseError::new(self.pos(), format!("expected {}", what)))
        }
    }

    fn expr(&mut self) -> Result<RawExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    let p = self.bump().1;
                    let rhs = self.term()?;
                    lhs = RawExpr::Add(Box::new(lhs), Box::new(rhs), p);
                }
                Tok::Minus => {
                    let p = self.bump().1;
                    let rhs = self.term()?;
                    lhs = RawExpr::Sub(Box::new(lhs), Box::new(rhs), p);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<RawExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    let p = self.bump().1;
                    let rhs = self.factor()?;
                    lhs = RawExpr::Mul(Box::new(lhs), Box::new(rhs), p);
                }
                Tok::Slash => {
                    let p = self.bump().1;
                    let rhs = self.factor()?;
                    lhs = RawExpr::Div(Box::new(lhs), Box::new(rhs), p);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<RawExpr, ParseError> {
        if *self.peek() == Tok::Minus {
            let p = self.bump().1;
            let inner = self.factor()?;
            return Ok(RawExpr::Neg(Box::new(inner), p));
        }
        self.power()
    }

    fn power(&mut self) -> Result<RawExpr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let p = self.bump().1;
        let exp = self.exponent()?;
        Ok(RawExpr::Pow(Box::new(base), exp, p))
    }

    /// Integer exponent, optionally negative, optionally parenthesized.
    fn exponent(&mut self) -> Result<i32, ParseError> {
        let parens = if *self.peek() == Tok::LParen {
            self.bump();
            true
        } else {
            false
        };
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let (tok, pos) = self.bump();
        let n = match tok {
            Tok::Int(n) => n,
            _ => return Err(ParseError::new(pos, "expected integer exponent")),
        };
        if parens {
            self.expect(Tok::RParen, "`)` after exponent")?;
        }
        let mag: i64 = match n.try_into() {
            Ok(v) if v <= MAX_EXPONENT => v,
            _ => {
                return Err(ParseError::new(
                    pos,
                    format!("exponent exceeds the supported bound {}", MAX_EXPONENT),
                ))
            }
        };
        Ok(if neg { -mag as i32 } else { mag as i32 })
    }

    fn atom(&mut self) -> Result<RawExpr, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Int(n) => Ok(RawExpr::Int(n, pos)),
            Tok::Ident(name) => {
                if name == "i" {
                    return Ok(RawExpr::Imag(pos));
                }
                if name == "log" {
                    self.expect(Tok::LParen, "`(` after log")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)` closing log")?;
                    return Ok(RawExpr::Log(Box::new(arg), pos));
                }
                match self.ctx.lookup(&name) {
                    Some(id) => Ok(RawExpr::Var(id, Arc::from(name.as_str()), pos)),
                    None => Err(ParseError::new(
                        pos,
                        format!("unknown variable `{}`", name),
                    )),
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(ParseError::new(pos, "expected a value")),
        }
    }
}

/// Parses source text against the declared variables, without normalizing.
pub fn parse(src: &str, ctx: &VarCtx) -> Result<RawExpr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0, ctx };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ParseError::new(p.pos(), "unexpected trailing input"));
    }
    Ok(e)
}

/// Folds a raw tree into canonical form. Algebraic failures (division by an
/// identically zero expression, `log` of zero, `0^-n`) are reported at the
/// offending node's source position.
pub fn normalize(raw: &RawExpr) -> Result<Expr, ParseError> {
    let lift = |err: ExprError, pos: usize| ParseError::new(pos, err.to_string());
    match raw {
        RawExpr::Int(n, _) => Ok(Expr::constant(GaussianRational::new(
            BigRational::from_integer(n.clone()),
            BigRational::zero(),
        ))),
        RawExpr::Imag(_) => Ok(Expr::imag()),
        RawExpr::Var(id, name, _) => Ok(Expr::from_atom(Atom::var(*id, name.clone()))),
        RawExpr::Neg(inner, _) => Ok(-&normalize(inner)?),
        RawExpr::Add(a, b, _) => Ok(&normalize(a)? + &normalize(b)?),
        RawExpr::Sub(a, b, _) => Ok(&normalize(a)? - &normalize(b)?),
        RawExpr::Mul(a, b, _) => Ok(&normalize(a)? * &normalize(b)?),
        RawExpr::Div(a, b, p) => normalize(a)?
            .checked_div(&normalize(b)?)
            .map_err(|e| lift(e, *p)),
        RawExpr::Pow(base, exp, p) => normalize(base)?.pow(*exp).map_err(|e| lift(e, *p)),
        RawExpr::Log(arg, p) => Expr::log(&normalize(arg)?).map_err(|e| lift(e, *p)),
    }
}

/// Parse and normalize in one step.
pub fn parse_expr(src: &str, ctx: &VarCtx) -> Result<Expr, ParseError> {
    normalize(&parse(src, ctx)?)
}

/// Reference evaluator on the raw tree, used to cross-check that
/// normalization preserves meaning. Log atoms take their value from `logv`
/// applied to the exact argument value, so any value-respecting assignment
/// can be tested.
pub fn eval_raw(
    raw: &RawExpr,
    vars: &dyn Fn(VarId) -> GaussianRational,
    logv: &mut dyn FnMut(&GaussianRational) -> GaussianRational,
) -> Result<GaussianRational, ExprError> {
    match raw {
        RawExpr::Int(n, _) => Ok(GaussianRational::new(
            BigRational::from_integer(n.clone()),
            BigRational::zero(),
        )),
        RawExpr::Imag(_) => Ok(GaussianRational::i()),
        RawExpr::Var(id, _, _) => Ok(vars(*id)),
        RawExpr::Neg(inner, _) => Ok(-&eval_raw(inner, vars, logv)?),
        RawExpr::Add(a, b, _) => Ok(&eval_raw(a, vars, logv)? + &eval_raw(b, vars, logv)?),
        RawExpr::Sub(a, b, _) => Ok(&eval_raw(a, vars, logv)? - &eval_raw(b, vars, logv)?),
        RawExpr::Mul(a, b, _) => Ok(&eval_raw(a, vars, logv)? * &eval_raw(b, vars, logv)?),
        RawExpr::Div(a, b, _) => {
            let d = eval_raw(b, vars, logv)?;
            if d.is_zero() {
                return Err(ExprError::PoleAtPoint);
            }
            Ok(&eval_raw(a, vars, logv)? / &d)
        }
        RawExpr::Pow(base, exp, _) => {
            let b = eval_raw(base, vars, logv)?;
            if b.is_zero() && *exp < 0 {
                return Err(ExprError::ZeroToNegativePower);
            }
            Ok(b.pow(*exp))
        }
        RawExpr::Log(arg, _) => {
            let v = eval_raw(arg, vars, logv)?;
            if v.is_zero() {
                return Err(ExprError::LogOfZero);
            }
            Ok(logv(&v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarRole;

    fn ctx() -> VarCtx {
        let mut c = VarCtx::new();
        c.declare("t", VarRole::Independent).unwrap();
        c.declare("q", VarRole::Dependent).unwrap();
        c.declare("qd", VarRole::Jet).unwrap();
        c
    }

    #[test]
    fn parses_the_core_grammar() {
        let ctx = ctx();
        // The denominator is normalized monic, so the 1/2 folds into the
        // numerator coefficients.
        let e = parse_expr("(t*qd - q)^2 / (2*t)", &ctx).unwrap();
        assert_eq!(e.to_string(), "(1/2*t^2*qd^2 - t*q*qd + 1/2*q^2)/t");
        // Whitespace is insignificant.
        let e2 = parse_expr("(t*qd-q)^2/(2*t)", &ctx).unwrap();
        assert_eq!(e, e2);
    }

    #[test]
    fn exponent_forms() {
        let ctx = ctx();
        assert_eq!(
            parse_expr("t^-2", &ctx).unwrap(),
            parse_expr("1/t^2", &ctx).unwrap()
        );
        assert_eq!(
            parse_expr("t^(-2)", &ctx).unwrap(),
            parse_expr("t^-2", &ctx).unwrap()
        );
        // Unary minus binds under the power: -t^2 == -(t^2).
        assert_eq!(
            parse_expr("-t^2", &ctx).unwrap(),
            -&parse_expr("t^2", &ctx).unwrap()
        );
        assert!(parse_expr("t^99999", &ctx).is_err());
    }

    #[test]
    fn imaginary_unit_and_log() {
        let ctx = ctx();
        let e = parse_expr("i^2", &ctx).unwrap();
        assert_eq!(e, Expr::int(-1));
        let l = parse_expr("log(t*qd - q)", &ctx).unwrap();
        assert!(l.contains_log());
        // Round trip through Display.
        let back = parse_expr(&l.to_string(), &ctx).unwrap();
        assert_eq!(l, back);
    }

    #[test]
    fn errors_carry_positions() {
        let ctx = ctx();
        let err = parse_expr("t + y", &ctx).unwrap_err();
        assert_eq!(err.pos, 4);
        assert!(err.msg.contains("unknown variable"));
        let err = parse_expr("t + ", &ctx).unwrap_err();
        assert_eq!(err.pos, 4);
        let err = parse_expr("t $ q", &ctx).unwrap_err();
        assert_eq!(err.pos, 2);
        // Algebraic failures point at the offending operator.
        let err = parse_expr("1/(t - t)", &ctx).unwrap_err();
        assert_eq!(err.pos, 1);
        assert!(err.msg.contains("division by zero"));
        let err = parse_expr("log(q - q)", &ctx).unwrap_err();
        assert!(err.msg.contains("log of zero"));
    }

    #[test]
    fn display_round_trips() {
        let ctx = ctx();
        for src in [
            "(t*qd - q)^3/(t*qd - q)",
            "1/2/(t*qd - q)",
            "(1 + 2*i)*t - qd/7",
            "log(qd)^2*t - log(t*qd - q)",
            "-3*t^2*q + qd - 1/3",
            "t^2/(t*qd - q)^2",
        ] {
            let e = parse_expr(src, &ctx).unwrap();
            let back = parse_expr(&e.to_string(), &ctx).unwrap();
            assert_eq!(e, back, "round trip failed for {}", src);
        }
    }
}
