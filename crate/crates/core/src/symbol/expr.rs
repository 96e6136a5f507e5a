//! Coefficient expressions over ξ: `+ - * / ^`, parentheses, `xi1..xi4`,
//! `abs2(xi)`, `norm(xi)`, `sqrt`, `exp`, `cos`, `sin`, and the constants
//! `i`, `pi`.

use crate::error::{Error, Result};
use crate::geom::Vecd;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(C64),
    Xi(usize),
    Abs2,
    Norm,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Func {
    Sqrt,
    Exp,
    Cos,
    Sin,
}

impl Expr {
    pub fn parse(src: &str, d: usize) -> Result<Expr> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0, d };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expr(format!(
                "unexpected trailing input at token {} in '{src}'",
                p.pos
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, xi: &Vecd) -> C64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Xi(i) => C64::new(xi.0[*i], 0.0),
            Expr::Abs2 => C64::new(xi.norm2(), 0.0),
            Expr::Norm => C64::new(xi.norm(), 0.0),
            Expr::Neg(a) => -a.eval(xi),
            Expr::Add(a, b) => a.eval(xi) + b.eval(xi),
            Expr::Sub(a, b) => a.eval(xi) - b.eval(xi),
            Expr::Mul(a, b) => a.eval(xi) * b.eval(xi),
            Expr::Div(a, b) => a.eval(xi) / b.eval(xi),
            Expr::Pow(a, b) => {
                let base = a.eval(xi);
                let ex = b.eval(xi);
                if ex.im == 0.0 && ex.re.fract() == 0.0 && ex.re.abs() < 64.0 {
                    base.powi(ex.re as i32)
                } else if base.im == 0.0 && base.re >= 0.0 && ex.im == 0.0 {
                    C64::new(base.re.powf(ex.re), 0.0)
                } else {
                    base.powc(ex)
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(xi);
                match f {
                    Func::Sqrt => v.sqrt(),
                    Func::Exp => v.exp(),
                    Func::Cos => v.cos(),
                    Func::Sin => v.sin(),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.') {
                i += 1;
            }
            // exponent part
            if i < cs.len() && (cs[i] == 'e' || cs[i] == 'E') {
                let save = i;
                i += 1;
                if i < cs.len() && (cs[i] == '+' || cs[i] == '-') {
                    i += 1;
                }
                if i < cs.len() && cs[i].is_ascii_digit() {
                    while i < cs.len() && cs[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let t: String = cs[st..i].iter().collect();
            let v = t
                .parse::<f64>()
                .map_err(|_| Error::Expr(format!("bad number '{t}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character '{c}' in '{s}'")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    d: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expr(format!("expected '{c}' at token {}", self.pos)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek_op() {
            if c != '+' && c != '-' {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek_op() {
            if c != '*' && c != '/' {
                break;
            }
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let ex = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(ex)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Expr("unexpected end of expression".into()))?;
        self.pos += 1;
        match t {
            Tok::Num(v) => Ok(Expr::Num(C64::new(v, 0.0))),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => Err(Error::Expr(format!("unexpected '{c}'"))),
            Tok::Ident(name) => self.ident(&name),
        }
    }

    fn ident(&mut self, name: &str) -> Result<Expr> {
        match name {
            "i" | "I" => return Ok(Expr::Num(C64::new(0.0, 1.0))),
            "pi" => return Ok(Expr::Num(C64::new(std::f64::consts::PI, 0.0))),
            _ => {}
        }
        if let Some(idx) = name.strip_prefix("xi") {
            if let Ok(k) = idx.parse::<usize>() {
                if k >= 1 && k <= self.d {
                    return Ok(Expr::Xi(k - 1));
                }
                return Err(Error::Expr(format!("{name} out of range for d = {}", self.d)));
            }
        }
        let func = match name {
            "abs2" | "norm" => {
                self.expect('(')?;
                match self.toks.get(self.pos) {
                    Some(Tok::Ident(a)) if a == "xi" => self.pos += 1,
                    _ => return Err(Error::Expr(format!("{name} takes the argument 'xi'"))),
                }
                self.expect(')')?;
                return Ok(if name == "abs2" { Expr::Abs2 } else { Expr::Norm });
            }
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "cos" => Func::Cos,
            "sin" => Func::Sin,
            _ => return Err(Error::Expr(format!("unknown identifier '{name}'"))),
        };
        self.expect('(')?;
        let a = self.expr()?;
        self.expect(')')?;
        Ok(Expr::Call(func, Box::new(a)))
    }
}
