//! Recursive-descent parser for expressions and for the coefficient side of
//! form literals.
//!
//! ```text
//! sum     := ['+'|'-'] product (('+'|'-') product)*
//! product := factor (('*'|'/') factor)*
//! factor  := atom ['^' exponent]
//! exponent:= int | '(' ['-'] int ['/' int] ')'
//! atom    := number | var | func '(' var ')' | '(' sum ')'
//! ```
//!
//! When a set of chart variables is supplied, an identifier `d<var>` is a
//! differential and `dx^dy^...` a wedge chain; each product may hold at most
//! one chain.

use num::{BigInt, One, Zero};

use super::{ExprError, Expression, Func, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Decimal(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let lit = &text[start..i];
            if lit.contains('.') {
                if lit.matches('.').count() > 1 {
                    return Err(ExprError::Syntax {
                        pos: start,
                        msg: format!("malformed number `{lit}`"),
                    });
                }
                out.push((start, Tok::Decimal(lit.to_string())));
            } else {
                out.push((start, Tok::Int(lit.parse().expect("digits"))));
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < bytes.len() {
                let ch = text[i..].chars().next().expect("in bounds");
                if ch.is_alphanumeric() || ch == '_' {
                    i += ch.len_utf8();
                } else {
                    break;
                }
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(ExprError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((start, tok));
        i += c.len_utf8();
    }
    Ok(out)
}

fn decimal_to_rational(lit: &str) -> Rational {
    let (int, frac) = lit.split_once('.').unwrap_or((lit, ""));
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().expect("digits") };
    let den = num::pow::pow(BigInt::from(10), frac.len());
    Rational::new(num, den)
}

/// One summand of a parsed literal: scalar coefficient times an optional
/// wedge of differentials (variable names, in written order).
#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub scalar: Expression,
    pub wedge: Vec<String>,
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    diff_vars: Option<&'a [String]>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { pos: self.here(), msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn differential(&self, name: &str) -> Option<String> {
        let vars = self.diff_vars?;
        if vars.iter().any(|v| v == name) {
            return None;
        }
        let rest = name.strip_prefix('d')?;
        vars.iter().any(|v| v == rest).then(|| rest.to_string())
    }

    fn sum(&mut self) -> Result<Vec<Piece>, ExprError> {
        let mut pieces = Vec::new();
        let mut negate = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                true
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        loop {
            let mut p = self.product()?;
            if negate {
                p.scalar = -p.scalar;
            }
            pieces.push(p);
            match self.peek() {
                Some(Tok::Plus) => negate = false,
                Some(Tok::Minus) => negate = true,
                _ => break,
            }
            self.pos += 1;
        }
        Ok(pieces)
    }

    fn product(&mut self) -> Result<Piece, ExprError> {
        let first = self.factor()?;
        let mut scalar = first.scalar;
        let mut wedge = first.wedge;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let at = self.here();
                    let f = self.factor()?;
                    if !f.wedge.is_empty() {
                        if !wedge.is_empty() {
                            return Err(ExprError::Syntax {
                                pos: at,
                                msg: "a term may contain only one wedge chain (join with `^`)".into(),
                            });
                        }
                        wedge = f.wedge;
                    }
                    scalar = &scalar * &f.scalar;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.here();
                    let f = self.factor()?;
                    if !f.wedge.is_empty() {
                        return Err(ExprError::Syntax { pos: at, msg: "cannot divide by a differential".into() });
                    }
                    let inv = f.scalar.reciprocal().map_err(|e| match e {
                        ExprError::DivisionByZero => ExprError::DivisionByZero,
                        _ => ExprError::Syntax { pos: at, msg: "division by a multi-term expression".into() },
                    })?;
                    scalar = &scalar * &inv;
                }
                _ => break,
            }
        }
        Ok(Piece { scalar, wedge })
    }

    fn factor(&mut self) -> Result<Piece, ExprError> {
        let atom = self.atom()?;
        if !atom.wedge.is_empty() {
            let mut wedge = atom.wedge;
            while self.peek() == Some(&Tok::Caret) {
                self.pos += 1;
                match self.bump() {
                    Some(Tok::Ident(name)) => match self.differential(&name) {
                        Some(v) => wedge.push(v),
                        None => {
                            self.pos -= 1;
                            return self.err(format!("`{name}` is not a differential of a chart variable"));
                        }
                    },
                    _ => {
                        self.pos -= 1;
                        return self.err("expected a differential after `^`");
                    }
                }
            }
            return Ok(Piece { scalar: atom.scalar, wedge });
        }
        if self.peek() != Some(&Tok::Caret) {
            return Ok(atom);
        }
        self.pos += 1;
        let q = self.exponent()?;
        Ok(Piece { scalar: atom.scalar.pow(&q)?, wedge: Vec::new() })
    }

    fn exponent(&mut self) -> Result<Rational, ExprError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Rational::from_integer(n)),
            Some(Tok::Decimal(_)) => Err(ExprError::NonRationalExponent { pos: at }),
            Some(Tok::LParen) => {
                let negative = match self.peek() {
                    Some(Tok::Minus) => {
                        self.pos += 1;
                        true
                    }
                    Some(Tok::Plus) => {
                        self.pos += 1;
                        false
                    }
                    _ => false,
                };
                let num = match self.bump() {
                    Some(Tok::Int(n)) => n,
                    Some(Tok::Decimal(_)) => return Err(ExprError::NonRationalExponent { pos: at }),
                    _ => return Err(ExprError::NonRationalExponent { pos: at }),
                };
                let den = if self.peek() == Some(&Tok::Slash) {
                    self.pos += 1;
                    match self.bump() {
                        Some(Tok::Int(d)) => d,
                        _ => return Err(ExprError::NonRationalExponent { pos: at }),
                    }
                } else {
                    BigInt::one()
                };
                if self.peek() != Some(&Tok::RParen) {
                    return Err(ExprError::NonRationalExponent { pos: at });
                }
                self.pos += 1;
                if den.is_zero() {
                    return Err(ExprError::DivisionByZero);
                }
                let q = Rational::new(num, den);
                Ok(if negative { -q } else { q })
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.err("expected an exponent")
            }
        }
    }

    fn atom(&mut self) -> Result<Piece, ExprError> {
        let at = self.here();
        let scalar = |e: Expression| Piece { scalar: e, wedge: Vec::new() };
        match self.bump() {
            Some(Tok::Int(n)) => Ok(scalar(Expression::constant(Rational::from_integer(n)))),
            Some(Tok::Decimal(lit)) => Ok(scalar(Expression::constant(decimal_to_rational(&lit)))),
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let f = Func::from_name(&name)
                        .ok_or(ExprError::UnknownFunction { name: name.clone(), pos: at })?;
                    self.pos += 1;
                    let arg = match self.bump() {
                        Some(Tok::Ident(v)) if Func::from_name(&v).is_none() => v,
                        _ => {
                            self.pos -= 1;
                            return self.err("elementary function arguments must be bare variables");
                        }
                    };
                    self.expect(Tok::RParen, "`)` closing the function argument")?;
                    return Ok(scalar(Expression::func(f, &arg)));
                }
                if Func::from_name(&name).is_some() {
                    return Err(ExprError::Syntax { pos: at, msg: format!("`{name}` needs an argument") });
                }
                if let Some(v) = self.differential(&name) {
                    return Ok(Piece { scalar: Expression::one(), wedge: vec![v] });
                }
                Ok(scalar(Expression::var(&name)))
            }
            Some(Tok::LParen) => {
                let inner = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                if inner.iter().any(|p| !p.wedge.is_empty()) {
                    return Err(ExprError::Syntax {
                        pos: at,
                        msg: "differentials are not allowed inside parentheses".into(),
                    });
                }
                Ok(scalar(inner.into_iter().map(|p| p.scalar).sum()))
            }
            Some(_) => {
                self.pos -= 1;
                self.err("expected a number, variable, function or `(`")
            }
            None => self.err("unexpected end of input"),
        }
    }
}

pub(crate) fn parse_pieces(text: &str, diff_vars: Option<&[String]>) -> Result<Vec<Piece>, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), diff_vars };
    if p.toks.is_empty() {
        return p.err("empty input");
    }
    let pieces = p.sum()?;
    if p.pos < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(pieces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{rat, Func};

    #[test]
    fn parses_paper_shaped_coefficients() {
        let e = Expression::parse("cosh(l)*cos(n)").unwrap();
        assert_eq!(e.len(), 1);
        let t = e.terms().next().unwrap();
        let elems: Vec<_> = t.monomial.elems().iter().map(|((f, v), n)| (*f, v.clone(), *n)).collect();
        assert_eq!(elems, vec![(Func::Cos, "n".into(), 1), (Func::Cosh, "l".into(), 1)]);
        assert!(Expression::parse("0").unwrap().is_zero());
        assert!(Expression::parse("r^(-3/2)*w - r^(-3/2)*w").unwrap().is_zero());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Expression::parse("x + * y"), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(matches!(
            Expression::parse("tan(x)"),
            Err(ExprError::UnknownFunction { .. })
        ));
        assert!(matches!(
            Expression::parse("x^(0.5)"),
            Err(ExprError::NonRationalExponent { .. })
        ));
        assert!(matches!(Expression::parse("x^1.5"), Err(ExprError::NonRationalExponent { .. })));
        assert!(Expression::parse("sin(x+y)").is_err());
        assert!(Expression::parse("(x").is_err());
        assert!(Expression::parse("").is_err());
        assert!(Expression::parse("x/(a+b)").is_err());
        assert!(Expression::parse("dx^dy").is_err());
    }

    #[test]
    fn division_decimals_and_powers() {
        assert_eq!(Expression::parse("x/2").unwrap(), Expression::parse("1/2*x").unwrap());
        assert_eq!(Expression::parse("0.25*x").unwrap(), Expression::parse("1/4*x").unwrap());
        assert_eq!(
            Expression::parse("(a+b)^2").unwrap(),
            Expression::parse("a^2 + 2*a*b + b^2").unwrap()
        );
        assert_eq!(Expression::parse("x^(+3/6)").unwrap(), Expression::var_pow("x", rat(1, 2)));
        assert!(Expression::parse("- x - -1").is_err());
    }

    #[test]
    fn differentials_in_form_mode() {
        let vars: Vec<String> = ["x", "alpha", "Pr", "Palpha"].iter().map(|s| s.to_string()).collect();
        let pieces = parse_pieces("4*x^(-3) * dx^dPr + dalpha^dPalpha", Some(&vars)).unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0].wedge, vec!["x", "Pr"]);
        assert_eq!(pieces[0].scalar, Expression::parse("4*x^(-3)").unwrap());
        assert_eq!(pieces[1].wedge, vec!["alpha", "Palpha"]);
        let pieces = parse_pieces("x1*dz/z", Some(&["z".to_string(), "x1".to_string()])).unwrap();
        assert_eq!(pieces[0].wedge, vec!["z"]);
        assert_eq!(pieces[0].scalar, Expression::parse("x1*z^(-1)").unwrap());
        assert!(parse_pieces("dx*dy", Some(&["x".to_string(), "y".to_string()])).is_err());
        assert!(parse_pieces("(dx)", Some(&["x".to_string()])).is_err());
    }
}
