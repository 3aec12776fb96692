//! Functional descriptors: complex-linear combinations of words over tuple
//! symbols, their adjoints, the unit symbol and range-power tokens `[x^m]`.
//!
//! Text syntax (used by the CLI `--functional` flag):
//!
//! ```text
//! expr    := ['+' | '-'] term (('+' | '-') term)*
//! term    := postfix ('*' postfix)*
//! postfix := primary '\''*
//! primary := number | symbol | '[' symbol ['^' integer] ']' | '(' expr ')'
//! number  := decimal float with optional exponent, optional 'j' suffix
//! ```
//!
//! `'` is the adjoint, `*` multiplication. A number `c` denotes `c` times the
//! unit symbol, so `1` is the unit and `1 - x'*x` is the isometry defect.
//! Symbols name tuple slots in order.

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::C64;

/// One letter of a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    Var(usize),
    Adj(usize),
    Unit,
    /// `[x_slot^power]`, the range projection of a power.
    RangePower { slot: usize, power: usize },
}

impl Factor {
    fn adjoint(self) -> Factor {
        match self {
            Factor::Var(s) => Factor::Adj(s),
            Factor::Adj(s) => Factor::Var(s),
            other => other,
        }
    }

    fn slot(self) -> Option<usize> {
        match self {
            Factor::Var(s) | Factor::Adj(s) | Factor::RangePower { slot: s, .. } => Some(s),
            Factor::Unit => None,
        }
    }

    fn map_slot(self, f: &impl Fn(usize) -> usize) -> Factor {
        match self {
            Factor::Var(s) => Factor::Var(f(s)),
            Factor::Adj(s) => Factor::Adj(f(s)),
            Factor::RangePower { slot, power } => Factor::RangePower {
                slot: f(slot),
                power,
            },
            Factor::Unit => Factor::Unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub word: Vec<Factor>,
}

/// A single functional `F(x_1, …, x_k, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    terms: Vec<Term>,
}

impl Functional {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.iter().any(|t| t.word.is_empty()) {
            return Err(Error::Input("functional term with an empty word".into()));
        }
        if terms.is_empty() {
            return Err(Error::Input("functional has no terms".into()));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Number of tuple slots referenced (highest slot + 1).
    pub fn arity(&self) -> usize {
        self.factors()
            .filter_map(Factor::slot)
            .map(|s| s + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn uses_unit(&self) -> bool {
        self.factors().any(|f| f == Factor::Unit)
    }

    pub fn has_range_tokens(&self) -> bool {
        self.factors()
            .any(|f| matches!(f, Factor::RangePower { .. }))
    }

    /// Largest number of tuple letters (plain or adjoint) in a word; unit and
    /// range tokens have norm at most one per unit of dimension and do not count.
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|t| {
                t.word
                    .iter()
                    .filter(|f| matches!(f, Factor::Var(_) | Factor::Adj(_)))
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// Renumbers tuple slots, e.g. to lift `F(x)` to `F(x, y) := F(y)`.
    pub fn remap_slots(&self, f: impl Fn(usize) -> usize) -> Functional {
        Functional {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff,
                    word: t.word.iter().map(|x| x.map_slot(&f)).collect(),
                })
                .collect(),
        }
    }

    /// `F*`: conjugated coefficients, reversed words with adjoint letters.
    pub fn adjoint(&self) -> Functional {
        Functional {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    word: t.word.iter().rev().map(|f| f.adjoint()).collect(),
                })
                .collect(),
        }
    }

    fn factors(&self) -> impl Iterator<Item = Factor> + '_ {
        self.terms.iter().flat_map(|t| t.word.iter().copied())
    }

    /// Renders in the text syntax using `symbols` as slot names.
    pub fn display<'a>(&'a self, symbols: &'a [String]) -> impl fmt::Display + 'a {
        Rendered {
            functional: self,
            symbols,
        }
    }
}

struct Rendered<'a> {
    functional: &'a Functional,
    symbols: &'a [String],
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |s: usize| -> String {
            self.symbols
                .get(s)
                .cloned()
                .unwrap_or_else(|| format!("x{s}"))
        };
        for (i, term) in self.functional.terms.iter().enumerate() {
            let c = term.coeff;
            let word: Vec<String> = term
                .word
                .iter()
                .map(|fac| match *fac {
                    Factor::Var(s) => name(s),
                    Factor::Adj(s) => format!("{}'", name(s)),
                    Factor::Unit => "1".to_string(),
                    Factor::RangePower { slot, power: 1 } => format!("[{}]", name(slot)),
                    Factor::RangePower { slot, power } => format!("[{}^{power}]", name(slot)),
                })
                .collect();
            let word = word.join("*");
            let (sign, mag) = if c.re < 0.0 || (c.re == 0.0 && c.im < 0.0) {
                ("-", -c)
            } else {
                ("+", c)
            };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let scalar_only = term.word == [Factor::Unit];
            let coeff = if mag.im == 0.0 {
                format!("{}", mag.re)
            } else if mag.re == 0.0 {
                format!("{}j", mag.im)
            } else {
                format!("({}{:+}j)", mag.re, mag.im)
            };
            match (mag == C64::new(1.0, 0.0), scalar_only) {
                (true, _) => write!(f, "{word}")?,
                (false, true) => write!(f, "{coeff}")?,
                (false, false) => write!(f, "{coeff}*{word}")?,
            }
        }
        Ok(())
    }
}

type Poly = Vec<Term>;

/// Drops unit letters from longer words (`1·w = w`), merges equal words and
/// removes vanishing terms.
fn normalize(poly: Poly) -> Poly {
    let mut out: Poly = Vec::new();
    for mut t in poly {
        if t.word.len() > 1 {
            t.word.retain(|f| *f != Factor::Unit);
            if t.word.is_empty() {
                t.word.push(Factor::Unit);
            }
        }
        match out.iter_mut().find(|o| o.word == t.word) {
            Some(o) => o.coeff += t.coeff,
            None => out.push(t),
        }
    }
    out.retain(|t| t.coeff != C64::new(0.0, 0.0));
    out
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for s in a {
        for t in b {
            let mut word = s.word.clone();
            word.extend_from_slice(&t.word);
            out.push(Term {
                coeff: s.coeff * t.coeff,
                word,
            });
        }
    }
    out
}

fn poly_adjoint(p: &Poly) -> Poly {
    p.iter()
        .map(|t| Term {
            coeff: t.coeff.conj(),
            word: t.word.iter().rev().map(|f| f.adjoint()).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(C64),
    Ident(String),
    Int(usize),
    Plus,
    Minus,
    Star,
    Prime,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
                continue;
            }
            '+' => out.push((Tok::Plus, col)),
            '-' => out.push((Tok::Minus, col)),
            '*' => out.push((Tok::Star, col)),
            '\'' => out.push((Tok::Prime, col)),
            '^' => out.push((Tok::Caret, col)),
            '(' => out.push((Tok::LParen, col)),
            ')' => out.push((Tok::RParen, col)),
            '[' => out.push((Tok::LBracket, col)),
            ']' => out.push((Tok::RBracket, col)),
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut k = i + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        i = k;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit: String = chars[start..i].iter().collect();
                let imaginary = i < chars.len() && chars[i] == 'j';
                if imaginary {
                    i += 1;
                }
                let v: f64 = lit.parse().map_err(|_| Error::Parse {
                    column: col,
                    message: format!("bad number `{lit}`"),
                })?;
                let is_int = !imaginary && lit.chars().all(|c| c.is_ascii_digit());
                let tok = match (imaginary, is_int) {
                    (true, _) => Tok::Num(C64::new(0.0, v)),
                    (false, true) => match lit.parse::<usize>() {
                        Ok(n) => Tok::Int(n),
                        Err(_) => Tok::Num(C64::new(v, 0.0)),
                    },
                    (false, false) => Tok::Num(C64::new(v, 0.0)),
                };
                out.push((tok, col));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
                continue;
            }
            other => {
                return Err(Error::Parse {
                    column: col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    symbols: &'a [String],
    end_col: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|&(_, c)| c)
            .unwrap_or(self.end_col)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            column: self.col(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn slot(&self, name: &str) -> Result<usize> {
        match self.symbols.iter().position(|s| s == name) {
            Some(s) => Ok(s),
            None => self.err(format!(
                "unknown symbol `{name}` (tuple symbols: {})",
                self.symbols.join(",")
            )),
        }
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        let mut acc = Vec::new();
        let mut first = self.term()?;
        if negate {
            first.iter_mut().for_each(|t| t.coeff = -t.coeff);
        }
        acc.extend(first);
        loop {
            let sign = match self.peek() {
                Some(Tok::Plus) => 1.0,
                Some(Tok::Minus) => -1.0,
                _ => break,
            };
            self.pos += 1;
            let mut t = self.term()?;
            t.iter_mut().for_each(|t| t.coeff *= sign);
            acc.extend(t);
        }
        Ok(normalize(acc))
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.postfix()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            let rhs = self.postfix()?;
            acc = normalize(poly_mul(&acc, &rhs));
        }
        Ok(acc)
    }

    fn postfix(&mut self) -> Result<Poly> {
        let mut p = self.primary()?;
        while self.peek() == Some(&Tok::Prime) {
            self.pos += 1;
            p = normalize(poly_adjoint(&p));
        }
        Ok(p)
    }

    fn primary(&mut self) -> Result<Poly> {
        let unit_term = |c: C64| {
            vec![Term {
                coeff: c,
                word: vec![Factor::Unit],
            }]
        };
        match self.peek().cloned() {
            Some(Tok::Num(c)) => {
                self.pos += 1;
                Ok(unit_term(c))
            }
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(unit_term(C64::new(n as f64, 0.0)))
            }
            Some(Tok::Ident(name)) => {
                let slot = self.slot(&name)?;
                self.pos += 1;
                Ok(vec![Term {
                    coeff: C64::new(1.0, 0.0),
                    word: vec![Factor::Var(slot)],
                }])
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                let slot = match self.bump() {
                    Some(Tok::Ident(name)) => {
                        self.pos -= 1;
                        let s = self.slot(&name)?;
                        self.pos += 1;
                        s
                    }
                    _ => {
                        self.pos -= 1;
                        return self.err("expected a symbol inside `[...]`");
                    }
                };
                let mut power = 1;
                if self.peek() == Some(&Tok::Caret) {
                    self.pos += 1;
                    match self.peek().cloned() {
                        Some(Tok::Int(n)) if n >= 1 => {
                            self.pos += 1;
                            power = n;
                        }
                        _ => return self.err("expected a positive integer exponent"),
                    }
                }
                self.expect(Tok::RBracket, "`]`")?;
                Ok(vec![Term {
                    coeff: C64::new(1.0, 0.0),
                    word: vec![Factor::RangePower { slot, power }],
                }])
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let p = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Some(_) => self.err("expected a number, symbol, `[` or `(`"),
            None => self.err("unexpected end of expression"),
        }
    }
}

/// Parses a functional over the given tuple symbols.
pub fn parse_functional(text: &str, symbols: &[String]) -> Result<Functional> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(Error::Parse {
            column: 1,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        symbols,
        end_col: text.chars().count() + 1,
    };
    let poly = p.expr()?;
    if p.pos < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    if poly.is_empty() {
        return Err(Error::Parse {
            column: 1,
            message: "expression is identically zero".into(),
        });
    }
    Functional::new(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms(s: &[&str]) -> Vec<String> {
        s.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn commutator_parses() {
        let f = parse_functional("x*y - y*x", &syms(&["x", "y"])).unwrap();
        assert_eq!(f.terms().len(), 2);
        assert_eq!(f.terms()[0].word, vec![Factor::Var(0), Factor::Var(1)]);
        assert_eq!(f.terms()[1].coeff, C64::new(-1.0, 0.0));
        assert_eq!(f.arity(), 2);
        assert_eq!(f.degree(), 2);
        assert!(!f.uses_unit());
    }

    #[test]
    fn unit_and_adjoint() {
        let f = parse_functional("1 - x'*x", &syms(&["x"])).unwrap();
        assert!(f.uses_unit());
        assert_eq!(f.terms()[1].word, vec![Factor::Adj(0), Factor::Var(0)]);
    }

    #[test]
    fn adjoint_of_group_reverses() {
        let f = parse_functional("(2j*x*y)'", &syms(&["x", "y"])).unwrap();
        let t = &f.terms()[0];
        assert_eq!(t.coeff, C64::new(0.0, -2.0));
        assert_eq!(t.word, vec![Factor::Adj(1), Factor::Adj(0)]);
    }

    #[test]
    fn range_tokens() {
        let f = parse_functional("[x^2]*[y] - [y]*[x^2]", &syms(&["x", "y"])).unwrap();
        assert!(f.has_range_tokens());
        assert_eq!(f.degree(), 0);
        assert_eq!(
            f.terms()[0].word[0],
            Factor::RangePower { slot: 0, power: 2 }
        );
    }

    #[test]
    fn errors_carry_columns() {
        let s = syms(&["x"]);
        match parse_functional("x*z", &s) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_functional("x +", &s),
            Err(Error::Parse { column: 4, .. })
        ));
        assert!(parse_functional("[x^0]", &s).is_err());
        assert!(parse_functional("x # y", &s).is_err());
        assert!(parse_functional("", &s).is_err());
        assert!(parse_functional("(x", &s).is_err());
        assert!(parse_functional("x - x", &s).is_err());
    }

    #[test]
    fn display_round_trips() {
        let s = syms(&["x", "y"]);
        for text in [
            "x*y - y*x",
            "1 - x'*x",
            "[x^2]*[y] - [y]*[x^2]",
            "-x + 0.5*y'",
            "(1+2j)*x - 3j + (x*y)'",
        ] {
            let f = parse_functional(text, &s).unwrap();
            let shown = f.display(&s).to_string();
            let again = parse_functional(&shown, &s).unwrap();
            assert_eq!(f, again, "{text} -> {shown}");
        }
    }

    #[test]
    fn lifting_renumbers_slots() {
        let f = parse_functional("x*x' - x'*x", &syms(&["x"])).unwrap();
        let lifted = f.remap_slots(|_| 1);
        assert_eq!(lifted.arity(), 2);
    }
}
