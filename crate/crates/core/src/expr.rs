//! Tokenizer and parser for sums of monomials such as `3/2*c1^2*c2 - i*c3 + 7`.
//!
//! Used by the Gaussian-rational parser (symbol set `{i}`) and by the
//! correspondence-matrix loader (symbols `{i, c1, c2, c3}`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::ParseError;

/// One monomial: rational coefficient times a product of symbol powers.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Term {
    pub coeff: BigRational,
    pub powers: Vec<(String, u32)>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Sym(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let c = chars[pos];
        match c {
            ' ' | '\t' | '\n' => pos += 1,
            '+' => {
                out.push(Tok::Plus);
                pos += 1;
            }
            '-' | '\u{2212}' => {
                out.push(Tok::Minus);
                pos += 1;
            }
            '*' => {
                out.push(Tok::Star);
                pos += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                pos += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                pos += 1;
            }
            d if d.is_ascii_digit() => {
                let start = pos;
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                }
                let digits: String = chars[start..pos].iter().collect();
                out.push(Tok::Num(digits.parse().expect("digits")));
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let start = pos;
                while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_')
                {
                    pos += 1;
                }
                out.push(Tok::Sym(chars[start..pos].iter().collect()));
            }
            other => {
                return Err(ParseError::new(format!(
                    "unexpected character {other:?} in {src:?}"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    symbols: &'a [&'a str],
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn err(&self, what: &str) -> ParseError {
        ParseError::new(format!("{what} in {:?}", self.src))
    }

    fn sum(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut terms = Vec::new();
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        loop {
            let mut t = self.product()?;
            if negate {
                t.coeff = -t.coeff;
            }
            terms.push(t);
            match self.bump() {
                None => break,
                Some(Tok::Plus) => negate = false,
                Some(Tok::Minus) => negate = true,
                Some(_) => return Err(self.err("expected '+' or '-'")),
            }
        }
        Ok(terms)
    }

    fn product(&mut self) -> Result<Term, ParseError> {
        let mut coeff = BigRational::one();
        let mut powers: Vec<(String, u32)> = Vec::new();
        let mut first = true;
        loop {
            match self.peek() {
                Some(Tok::Num(_)) => {
                    let Some(Tok::Num(n)) = self.bump() else { unreachable!() };
                    let mut value = BigRational::from_integer(n);
                    if let Some(Tok::Slash) = self.peek() {
                        self.pos += 1;
                        match self.bump() {
                            Some(Tok::Num(d)) if !d.is_zero() => {
                                value /= BigRational::from_integer(d);
                            }
                            Some(Tok::Num(_)) => return Err(self.err("zero denominator")),
                            _ => return Err(self.err("expected denominator")),
                        }
                    }
                    coeff *= value;
                }
                Some(Tok::Sym(_)) => {
                    let Some(Tok::Sym(name)) = self.bump() else { unreachable!() };
                    if !self.symbols.contains(&name.as_str()) {
                        return Err(self.err(&format!("unknown symbol {name:?}")));
                    }
                    let mut exp = 1u32;
                    if let Some(Tok::Caret) = self.peek() {
                        self.pos += 1;
                        match self.bump() {
                            Some(Tok::Num(e)) => {
                                exp = u32::try_from(e).map_err(|_| self.err("exponent too large"))?
                            }
                            _ => return Err(self.err("expected exponent")),
                        }
                    }
                    match powers.iter_mut().find(|(s, _)| *s == name) {
                        Some(entry) => entry.1 += exp,
                        None => powers.push((name, exp)),
                    }
                }
                _ if first => return Err(self.err("expected a number or symbol")),
                _ => return Err(self.err("dangling '*'")),
            }
            first = false;
            match self.peek() {
                Some(Tok::Star) => self.pos += 1,
                // implicit multiplication: "3i", "2c1"
                Some(Tok::Sym(_)) => {}
                _ => break,
            }
        }
        powers.sort();
        Ok(Term { coeff, powers })
    }
}

/// Parses `src` into monomials over the given symbol alphabet.
pub(crate) fn parse_terms(src: &str, symbols: &[&str]) -> Result<Vec<Term>, ParseError> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(ParseError::new(format!("empty expression {src:?}")));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        symbols,
        src,
    };
    p.sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_polynomial_terms() {
        let t = parse_terms("3/2*c1^2*c2 - i*c3 + 7", &["i", "c1", "c2", "c3"]).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[0].coeff, q(3, 2));
        assert_eq!(t[0].powers, vec![("c1".into(), 2), ("c2".into(), 1)]);
        assert_eq!(t[1].coeff, q(-1, 1));
        assert_eq!(t[2].powers, vec![]);
    }

    #[test]
    fn implicit_product_and_repeats() {
        let t = parse_terms("-2i*i", &["i"]).unwrap();
        assert_eq!(t[0].coeff, q(-2, 1));
        assert_eq!(t[0].powers, vec![("i".into(), 2)]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_terms("", &["i"]).is_err());
        assert!(parse_terms("1/0", &["i"]).is_err());
        assert!(parse_terms("x", &["i"]).is_err());
        assert!(parse_terms("1 +", &["i"]).is_err());
        assert!(parse_terms("2 $", &["i"]).is_err());
    }
}
