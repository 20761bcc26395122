//! Text form for polynomials and words.
//!
//! Grammar (whitespace-insensitive except where noted):
//!
//! * letters: `X1`, `X2`, ... with an optional attached `*` for the adjoint
//!   and `^k` for powers; lowercase `x` abbreviates `X1`, and `x4` abbreviates
//!   `X1^4` (a lowercase `x` directly followed by digits is a power).
//! * numbers: decimal literals, optionally with an attached `i` for imaginary
//!   parts (`2i`, `0.5i`); a bare `i` is the imaginary unit.
//! * operators: `+ - * ( ) ^`. Multiplication may be written by juxtaposition
//!   (`X1X2`, `2 X1`). A `*` directly attached to a letter, a power or a
//!   closing parenthesis denotes the adjoint (`X1*`, `(X1X2)*`); a `*`
//!   preceded by whitespace or following a number multiplies (`2 * X1`).
//!
//! Printing always emits the canonical form (terms in degree-then-lex order,
//! adjoints attached, juxtaposition for products), which re-parses to the
//! identical polynomial.

use std::fmt;

use crate::C64;

use super::{NCPoly, PolyError, TensorPoly, Word};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Plus,
    Minus,
    Mul,
    Caret,
    LParen,
    RParen,
    Adjoint,
    Num(f64),
    ImagNum(f64),
    /// `X<i>` or bare `x`
    Letter(usize),
    /// compact `x<k>` power of `X1`
    LetterPow(usize),
    Uint(usize),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, PolyError> {
    let b = src.as_bytes();
    let mut toks: Vec<(Tok, usize)> = Vec::new();
    let mut i = 0;
    // true when the previous token can take a postfix adjoint and no
    // whitespace has intervened
    let mut adjoint_ok = false;
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                adjoint_ok = false;
            }
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
                adjoint_ok = false;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
                adjoint_ok = false;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
                adjoint_ok = false;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
                adjoint_ok = true;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
                adjoint_ok = false;
            }
            b'*' => {
                if adjoint_ok {
                    toks.push((Tok::Adjoint, i));
                    // `X1**` is the adjoint applied twice
                } else {
                    toks.push((Tok::Mul, i));
                }
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| PolyError::Parse {
                    pos: start,
                    msg: format!("bad number `{text}`"),
                })?;
                if i < b.len() && b[i] == b'i' {
                    i += 1;
                    toks.push((Tok::ImagNum(v), start));
                } else if text.contains('.') || text.contains('e') || text.contains('E') {
                    toks.push((Tok::Num(v), start));
                } else {
                    // integer literal: usable both as number and as exponent
                    toks.push((Tok::Uint(text.parse().map_err(|_| PolyError::Parse {
                        pos: start,
                        msg: format!("integer `{text}` too large"),
                    })?), start));
                }
                adjoint_ok = false;
            }
            b'i' => {
                toks.push((Tok::ImagNum(1.0), i));
                i += 1;
                adjoint_ok = false;
            }
            b'X' => {
                let start = i;
                i += 1;
                let ds = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if i == ds {
                    return Err(PolyError::Parse {
                        pos: start,
                        msg: "`X` must be followed by a letter index".into(),
                    });
                }
                let idx: usize = src[ds..i].parse().map_err(|_| PolyError::Parse {
                    pos: start,
                    msg: "letter index too large".into(),
                })?;
                toks.push((Tok::Letter(idx), start));
                adjoint_ok = true;
            }
            b'x' => {
                let start = i;
                i += 1;
                let ds = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                if i > ds {
                    let k: usize = src[ds..i].parse().map_err(|_| PolyError::Parse {
                        pos: start,
                        msg: "power too large".into(),
                    })?;
                    toks.push((Tok::LetterPow(k), start));
                } else {
                    toks.push((Tok::Letter(1), start));
                }
                adjoint_ok = true;
            }
            _ => {
                return Err(PolyError::Parse {
                    pos: i,
                    msg: format!("unexpected character `{}`", &src[i..i + 1]),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    m: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Parse { pos: self.here(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<NCPoly, PolyError> {
        let mut neg = false;
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            neg = true;
        } else if matches!(self.peek(), Some(Tok::Plus)) {
            self.bump();
        }
        let mut acc = self.term()?;
        if neg {
            acc = acc.scale(-C64::ONE);
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.add(&t)?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.sub(&t)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<NCPoly, PolyError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Mul) => {
                    self.bump();
                    let f = self.factor()?;
                    acc = acc.mul(&f)?;
                }
                Some(Tok::Num(_))
                | Some(Tok::Uint(_))
                | Some(Tok::ImagNum(_))
                | Some(Tok::Letter(_))
                | Some(Tok::LetterPow(_))
                | Some(Tok::LParen) => {
                    let f = self.factor()?;
                    acc = acc.mul(&f)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<NCPoly, PolyError> {
        let mut base = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::Caret) => {
                    self.bump();
                    let k = match self.bump() {
                        Some(Tok::Uint(k)) => k,
                        _ => return self.err("expected integer exponent after `^`"),
                    };
                    let mut acc = NCPoly::unit(self.m);
                    for _ in 0..k {
                        acc = acc.mul(&base)?;
                    }
                    base = acc;
                }
                Some(Tok::Adjoint) => {
                    self.bump();
                    base = base.involution();
                }
                _ => break,
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<NCPoly, PolyError> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(NCPoly::monomial(self.m, Word::unit(), C64::new(v, 0.0))?),
            Some(Tok::Uint(v)) => {
                Ok(NCPoly::monomial(self.m, Word::unit(), C64::new(v as f64, 0.0))?)
            }
            Some(Tok::ImagNum(v)) => Ok(NCPoly::monomial(self.m, Word::unit(), C64::new(0.0, v))?),
            Some(Tok::Letter(idx)) => {
                if idx < 1 || idx > self.m {
                    return Err(PolyError::LetterOutOfRange { index: idx, m: self.m });
                }
                Ok(NCPoly::letter(self.m, idx)?)
            }
            Some(Tok::LetterPow(k)) => {
                if self.m < 1 {
                    return Err(PolyError::LetterOutOfRange { index: 1, m: self.m });
                }
                Ok(NCPoly::monomial(self.m, Word::power(1, k), C64::ONE)?)
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => self.err("expected `)`"),
                }
            }
            _ => self.err("expected a number, letter or `(`"),
        }
    }
}

/// Parse a polynomial over `m` ambient letters.
pub fn parse_poly(src: &str, m: usize) -> Result<NCPoly, PolyError> {
    let toks = lex(src)?;
    let mut p = Parser { toks: &toks, pos: 0, m, end: src.len() };
    let poly = p.expr()?;
    if p.pos != toks.len() {
        return p.err("trailing input");
    }
    Ok(poly)
}

/// Parse a polynomial, inferring the ambient letter count from the largest
/// index used (at least 1).
pub fn parse_poly_auto(src: &str) -> Result<NCPoly, PolyError> {
    let toks = lex(src)?;
    let m = toks
        .iter()
        .map(|(t, _)| match t {
            Tok::Letter(i) => *i,
            Tok::LetterPow(_) => 1,
            _ => 0,
        })
        .max()
        .unwrap_or(0)
        .max(1);
    parse_poly(src, m)
}

/// Parse a single monomial word (coefficient must be exactly 1).
pub fn parse_word(src: &str, m: usize) -> Result<Word, PolyError> {
    let p = parse_poly(src, m)?;
    word_of(&p, src)
}

/// Parse a single monomial word, inferring the ambient letter count.
pub fn parse_word_auto(src: &str) -> Result<Word, PolyError> {
    let p = parse_poly_auto(src)?;
    word_of(&p, src)
}

fn word_of(p: &NCPoly, src: &str) -> Result<Word, PolyError> {
    let mut it = p.terms();
    match (it.next(), it.next()) {
        (Some((w, c)), None) if *c == C64::ONE => Ok(w.clone()),
        _ => Err(PolyError::Parse { pos: 0, msg: format!("`{src}` is not a plain monomial") }),
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Coefficient in a form that re-parses: `a`, `bi` or `(a+bi)`.
fn fmt_coeff(c: C64) -> String {
    if c.im == 0.0 {
        fmt_f64(c.re)
    } else if c.re == 0.0 {
        format!("{}i", fmt_f64(c.im))
    } else if c.im < 0.0 {
        format!("({}-{}i)", fmt_f64(c.re), fmt_f64(-c.im))
    } else {
        format!("({}+{}i)", fmt_f64(c.re), fmt_f64(c.im))
    }
}

pub(crate) fn format_poly(p: &NCPoly, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    for (n, (w, c)) in p.terms().enumerate() {
        // fold a real negative sign into the separator
        let (sep, c) = if c.im == 0.0 && c.re < 0.0 {
            (if n == 0 { "-" } else { " - " }, -c)
        } else {
            (if n == 0 { "" } else { " + " }, *c)
        };
        write!(f, "{sep}")?;
        if w.is_unit() {
            write!(f, "{}", fmt_coeff(c))?;
        } else if c == C64::ONE {
            write!(f, "{w}")?;
        } else {
            write!(f, "{} {w}", fmt_coeff(c))?;
        }
    }
    Ok(())
}

/// Text form for a tensor polynomial, e.g. `1 (x) X1 + X1 (x) 1`.
pub fn format_tensor(t: &TensorPoly) -> String {
    if t.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (n, ((l, r), c)) in t.terms().enumerate() {
        let (sep, c) = if c.im == 0.0 && c.re < 0.0 {
            (if n == 0 { "-" } else { " - " }, -c)
        } else {
            (if n == 0 { "" } else { " + " }, *c)
        };
        out.push_str(sep);
        if c != C64::ONE {
            out.push_str(&fmt_coeff(c));
            out.push(' ');
        }
        out.push_str(&format!("{l} (x) {r}"));
    }
    out
}
