use num_bigint::BigInt;

use super::{ParseError, ParseErrorKind, Pos};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(Rational),
    Sym(char),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: &str = "{}:;,=+-*/^()";

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, column: 1 };
    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() {
            chars.next();
            advance(c, &mut pos);
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                advance(c, &mut pos);
            }
        } else if c.is_ascii_alphabetic() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    chars.next();
                    advance(c, &mut pos);
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Ident(s), pos: start });
        } else if c.is_ascii_digit() || c == '.' {
            let mut int = String::new();
            let mut frac = String::new();
            let mut seen_dot = false;
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    if seen_dot { frac.push(c) } else { int.push(c) }
                } else if c == '.' && !seen_dot {
                    seen_dot = true;
                } else {
                    break;
                }
                chars.next();
                advance(c, &mut pos);
            }
            if int.is_empty() && frac.is_empty() {
                return Err(ParseError::new(start, ParseErrorKind::Syntax("malformed number".into())));
            }
            let digits: BigInt = format!("{int}{frac}").parse().expect("digits");
            let den = num_traits::pow(BigInt::from(10), frac.len());
            out.push(Token { tok: Tok::Number(Rational::new(digits, den)), pos: start });
        } else if SYMBOLS.contains(c) {
            chars.next();
            advance(c, &mut pos);
            out.push(Token { tok: Tok::Sym(c), pos: start });
        } else {
            return Err(ParseError::new(start, ParseErrorKind::Syntax(format!("unexpected character '{c}'"))));
        }
    }
    out.push(Token { tok: Tok::Eof, pos });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        let t = tokenize("0.3 12").unwrap();
        assert_eq!(t[0].tok, Tok::Number(Rational::new(3.into(), 10.into())));
        assert_eq!(t[1].tok, Tok::Number(Rational::from_integer(12.into())));
        assert_eq!(t[1].pos, Pos { line: 1, column: 5 });
    }

    #[test]
    fn positions_and_comments() {
        let t = tokenize("# note\n  u_xx;").unwrap();
        assert_eq!(t[0].tok, Tok::Ident("u_xx".into()));
        assert_eq!(t[0].pos, Pos { line: 2, column: 3 });
        assert_eq!(t[1].tok, Tok::Sym(';'));
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("u $").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, column: 3 });
    }
}
