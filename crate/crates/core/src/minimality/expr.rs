//! Coefficient expression mini-language for diffusion descriptors.
//!
//! Grammar (documented in the repository README):
//!
//! ```text
//! expr    := term { ("+" | "-") term }
//! term    := unary { ("*" | "/") unary }
//! unary   := "-" unary | power
//! power   := primary [ "^" unary ]
//! primary := NUMBER | "x" | "(" expr ")" | FUNC "(" expr ")"
//!          | "pow" "(" expr "," expr ")" | "piecewise" "(" branches ")"
//! branch  := "x" CMP NUMBER ":" expr | "else" ":" expr
//! FUNC    := "exp" | "log" | "sqrt" | "abs"
//! CMP     := "<" | "<=" | ">" | ">="
//! ```
//!
//! Numbers are decimal floats. `^` binds tighter than unary minus applied to
//! a product, and right-associates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    Piecewise(Vec<Branch>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub cmp: Cmp,
    pub bound: f64,
    pub body: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input at {:?} in {src:?}",
                p.peek()
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Log(a) => a.eval(x).ln(),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
            Expr::Abs(a) => a.eval(x).abs(),
            Expr::Piecewise(branches, otherwise) => {
                for br in branches {
                    let hit = match br.cmp {
                        Cmp::Lt => x < br.bound,
                        Cmp::Le => x <= br.bound,
                        Cmp::Gt => x > br.bound,
                        Cmp::Ge => x >= br.bound,
                    };
                    if hit {
                        return br.body.eval(x);
                    }
                }
                otherwise.eval(x)
            }
        }
    }

    /// Substitute `x := a + e` (used to study behaviour near a finite point).
    pub fn shift(&self, a: f64) -> Expr {
        self.substitute(&Expr::Add(Box::new(Expr::Const(a)), Box::new(Expr::Var)))
    }

    /// Substitute `x := -e` (used to study behaviour toward minus infinity).
    pub fn reflect(&self) -> Expr {
        self.substitute(&Expr::Neg(Box::new(Expr::Var)))
    }

    fn substitute(&self, with: &Expr) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var => with.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(with))),
            Expr::Add(a, b) => {
                Expr::Add(Box::new(a.substitute(with)), Box::new(b.substitute(with)))
            }
            Expr::Sub(a, b) => {
                Expr::Sub(Box::new(a.substitute(with)), Box::new(b.substitute(with)))
            }
            Expr::Mul(a, b) => {
                Expr::Mul(Box::new(a.substitute(with)), Box::new(b.substitute(with)))
            }
            Expr::Div(a, b) => {
                Expr::Div(Box::new(a.substitute(with)), Box::new(b.substitute(with)))
            }
            Expr::Pow(a, b) => {
                Expr::Pow(Box::new(a.substitute(with)), Box::new(b.substitute(with)))
            }
            Expr::Exp(a) => Expr::Exp(Box::new(a.substitute(with))),
            Expr::Log(a) => Expr::Log(Box::new(a.substitute(with))),
            Expr::Sqrt(a) => Expr::Sqrt(Box::new(a.substitute(with))),
            Expr::Abs(a) => Expr::Abs(Box::new(a.substitute(with))),
            // Piecewise conditions are on the original variable; shifting
            // under them is only used for tail analysis, which selects the
            // active branch before substituting. Keep them opaque here.
            Expr::Piecewise(branches, otherwise) => Expr::Piecewise(
                branches
                    .iter()
                    .map(|b| Branch { cmp: b.cmp, bound: b.bound, body: b.body.clone() })
                    .collect(),
                otherwise.clone(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Colon,
    Cmp(Cmp),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            ':' => {
                out.push(Tok::Colon);
                i += 1;
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(Tok::Cmp(Cmp::Le));
                    i += 2;
                } else {
                    out.push(Tok::Cmp(Cmp::Lt));
                    i += 1;
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(Tok::Cmp(Cmp::Ge));
                    i += 2;
                } else {
                    out.push(Tok::Cmp(Cmp::Gt));
                    i += 1;
                }
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == b'.'
                        || bytes[i] == b'e'
                        || bytes[i] == b'E'
                        || ((bytes[i] == b'+' || bytes[i] == b'-')
                            && i > start
                            && (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')))
                {
                    i += 1;
                }
                let text = &src[start..i];
                let num: f64 = text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number literal {text:?}")))?;
                out.push(Tok::Num(num));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: &Tok) -> Result<()> {
        match self.bump() {
            Some(ref got) if got == t => Ok(()),
            got => Err(Error::Parse(format!("expected {t:?}, got {got:?} in {:?}", self.src))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::Var),
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "exp" | "log" | "sqrt" | "abs" => {
                    self.expect(&Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    Ok(match name.as_str() {
                        "exp" => Expr::Exp(Box::new(arg)),
                        "log" => Expr::Log(Box::new(arg)),
                        "sqrt" => Expr::Sqrt(Box::new(arg)),
                        _ => Expr::Abs(Box::new(arg)),
                    })
                }
                "pow" => {
                    self.expect(&Tok::LParen)?;
                    let base = self.expr()?;
                    self.expect(&Tok::Comma)?;
                    let exponent = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
                }
                "piecewise" => self.piecewise(),
                other => Err(Error::Parse(format!("unknown identifier {other:?}"))),
            },
            got => Err(Error::Parse(format!("unexpected token {got:?} in {:?}", self.src))),
        }
    }

    fn piecewise(&mut self) -> Result<Expr> {
        self.expect(&Tok::LParen)?;
        let mut branches = Vec::new();
        let mut otherwise = None;
        loop {
            match self.bump() {
                Some(Tok::Ident(w)) if w == "x" => {
                    let cmp = match self.bump() {
                        Some(Tok::Cmp(c)) => c,
                        got => {
                            return Err(Error::Parse(format!(
                                "piecewise: expected comparison after x, got {got:?}"
                            )))
                        }
                    };
                    let bound = match self.bump() {
                        Some(Tok::Num(v)) => v,
                        Some(Tok::Minus) => match self.bump() {
                            Some(Tok::Num(v)) => -v,
                            got => {
                                return Err(Error::Parse(format!(
                                    "piecewise: expected bound, got {got:?}"
                                )))
                            }
                        },
                        got => {
                            return Err(Error::Parse(format!(
                                "piecewise: expected numeric bound, got {got:?}"
                            )))
                        }
                    };
                    self.expect(&Tok::Colon)?;
                    let body = self.expr()?;
                    branches.push(Branch { cmp, bound, body });
                }
                Some(Tok::Ident(w)) if w == "else" => {
                    self.expect(&Tok::Colon)?;
                    otherwise = Some(self.expr()?);
                }
                got => {
                    return Err(Error::Parse(format!(
                        "piecewise: expected branch, got {got:?}"
                    )))
                }
            }
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                got => {
                    return Err(Error::Parse(format!(
                        "piecewise: expected ',' or ')', got {got:?}"
                    )))
                }
            }
        }
        let otherwise = otherwise
            .ok_or_else(|| Error::Parse("piecewise: missing 'else' branch".into()))?;
        Ok(Expr::Piecewise(branches, Box::new(otherwise)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: f64) -> f64 {
        Expr::parse(src).unwrap().eval(x)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(eval("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(eval("2 ^ 3 ^ 2", 0.0), 512.0); // right-assoc
        assert_eq!(eval("-x", 2.0), -2.0);
        assert_eq!(eval("-0.5", 0.0), -0.5);
        assert_eq!(eval("1 - 2 - 3", 0.0), -4.0);
    }

    #[test]
    fn functions() {
        assert!((eval("exp(-x)", 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((eval("sqrt(1 + x^2)", 2.0) - 5.0f64.sqrt()).abs() < 1e-15);
        assert!((eval("log(x)", std::f64::consts::E) - 1.0).abs() < 1e-15);
        assert_eq!(eval("abs(x)", -3.0), 3.0);
        assert_eq!(eval("pow(x, 3)", 2.0), 8.0);
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(eval("1e-3", 0.0), 1e-3);
        assert_eq!(eval("2.5e2 + 1", 0.0), 251.0);
    }

    #[test]
    fn piecewise_first_match() {
        let e = Expr::parse("piecewise(x < 0: -x, x < 1: x^2, else: 1)").unwrap();
        assert_eq!(e.eval(-2.0), 2.0);
        assert_eq!(e.eval(0.5), 0.25);
        assert_eq!(e.eval(3.0), 1.0);
    }

    #[test]
    fn piecewise_negative_bound() {
        let e = Expr::parse("piecewise(x <= -1: 0, else: x)").unwrap();
        assert_eq!(e.eval(-2.0), 0.0);
        assert_eq!(e.eval(2.0), 2.0);
    }

    #[test]
    fn parse_errors() {
        assert!(Expr::parse("2 +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("piecewise(x < 0: 1)").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    #[test]
    fn shift_and_reflect() {
        let e = Expr::parse("x^2").unwrap();
        assert_eq!(e.shift(1.0).eval(2.0), 9.0); // (1 + 2)^2
        assert_eq!(e.reflect().eval(2.0), 4.0); // (-2)^2
        let lin = Expr::parse("x").unwrap();
        assert_eq!(lin.reflect().eval(3.0), -3.0);
    }
}
