//! Restricted arithmetic grammar for user-supplied fields and cone functions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | primary
//! primary := number | var | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Variables are a fixed letter followed by a 1-based index (`l1..ln` for eigenvalues,
//! `x1..xn` for coordinates). Functions: `min`, `max`, `pow`, `exp`, `log`, `sqrt`, `abs`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Min,
    Max,
    Pow,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn arity_ok(self, k: usize) -> bool {
        match self {
            Func::Min | Func::Max => k >= 1,
            Func::Pow => k == 2,
            _ => k == 1,
        }
    }
}

/// A parsed expression in `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    n: usize,
    source: String,
}

impl Expr {
    pub fn parse(source: &str, var: char, n: usize) -> Result<Self> {
        let mut p = Parser {
            s: source.as_bytes(),
            pos: 0,
            var,
            n,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Self {
            root,
            n,
            source: source.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        eval(&self.root, x)
    }
}

fn eval(node: &Node, x: &[f64]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval(a, x),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
            }
        }
        Node::Call(f, args) => {
            let mut vals = args.iter().map(|a| eval(a, x));
            match f {
                Func::Min => vals.fold(f64::INFINITY, f64::min),
                Func::Max => vals.fold(f64::NEG_INFINITY, f64::max),
                Func::Pow => {
                    let b = vals.next().unwrap_or(f64::NAN);
                    let e = vals.next().unwrap_or(f64::NAN);
                    b.powf(e)
                }
                Func::Exp => vals.next().unwrap_or(f64::NAN).exp(),
                Func::Log => vals.next().unwrap_or(f64::NAN).ln(),
                Func::Sqrt => vals.next().unwrap_or(f64::NAN).sqrt(),
                Func::Abs => vals.next().unwrap_or(f64::NAN).abs(),
            }
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    var: char,
    n: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => Op::Add,
                Some(b'-') => Op::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => Op::Mul,
                Some(b'/') => Op::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.')
        {
            self.pos += 1;
        }
        if self.pos < self.s.len() && matches!(self.s[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && matches!(self.s[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| Error::Parse(format!("bad number '{text}' at offset {start}")))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        if let Some(f) = Func::lookup(name) {
            if !self.eat(b'(') {
                return Err(self.err("expected '(' after function name"));
            }
            let mut args = vec![self.expr()?];
            while self.eat(b',') {
                args.push(self.expr()?);
            }
            if !self.eat(b')') {
                return Err(self.err("expected ')'"));
            }
            if !f.arity_ok(args.len()) {
                return Err(Error::Parse(format!("wrong argument count for '{name}'")));
            }
            return Ok(Node::Call(f, args));
        }
        let mut chars = name.chars();
        if chars.next() == Some(self.var) {
            if let Ok(i) = chars.as_str().parse::<usize>() {
                if (1..=self.n).contains(&i) {
                    return Ok(Node::Var(i - 1));
                }
                return Err(Error::Parse(format!(
                    "variable '{name}' out of range 1..={}",
                    self.n
                )));
            }
        }
        Err(Error::Parse(format!("unknown identifier '{name}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let e = Expr::parse("1 + 2*3 - 4/2", 'l', 1).unwrap();
        assert_eq!(e.eval(&[0.0]), 5.0);
        let e = Expr::parse("-(1+2)*-2", 'l', 1).unwrap();
        assert_eq!(e.eval(&[0.0]), 6.0);
    }

    #[test]
    fn variables_and_calls() {
        let e = Expr::parse("min(l1, l2, l3) + 0.5*max(l1,l3) + pow(l2, 2)", 'l', 3).unwrap();
        assert_eq!(e.eval(&[1.0, 3.0, -2.0]), -2.0 + 0.5 + 9.0);
        let e = Expr::parse("log(x1) + exp(0) + sqrt(x2)", 'x', 2).unwrap();
        assert!((e.eval(&[1.0, 4.0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn scientific_literals() {
        let e = Expr::parse("1e-3 + 2.5E2", 'l', 1).unwrap();
        assert_eq!(e.eval(&[0.0]), 250.001);
    }

    #[test]
    fn rejects() {
        assert!(Expr::parse("l4", 'l', 3).is_err());
        assert!(Expr::parse("x1", 'l', 3).is_err());
        assert!(Expr::parse("pow(l1)", 'l', 3).is_err());
        assert!(Expr::parse("l1 +", 'l', 3).is_err());
        assert!(Expr::parse("(l1", 'l', 3).is_err());
        assert!(Expr::parse("l1 l2", 'l', 3).is_err());
        assert!(Expr::parse("foo(1)", 'l', 3).is_err());
    }
}
