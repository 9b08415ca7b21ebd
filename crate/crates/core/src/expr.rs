//! Small arithmetic expression language used for exponent fields,
//! nonlinearities and manufactured fields in config files.
//!
//! Grammar (precedence low to high):
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := ("-" | "+") unary | power
//! power := atom ("^" unary)?
//! atom  := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Variables are `x`, `y` and `t`; constants `pi` and `e`. Functions:
//! `sin cos exp log sqrt abs sign pow max min`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
    Pow,
    Max,
    Min,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "pow" => Func::Pow,
            "max" => Func::Max,
            "min" => Func::Min,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Max | Func::Min => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Variable bindings for evaluation. Unused variables are ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vars {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Vars {
    pub fn at(point: [f64; 2]) -> Self {
        Vars {
            x: point[0],
            y: point[1],
            t: 0.0,
        }
    }

    pub fn with_t(point: [f64; 2], t: f64) -> Self {
        Vars {
            x: point[0],
            y: point[1],
            t,
        }
    }
}

/// A parsed expression. Keeps its source text for echoing back into configs.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    /// Parses `source`, rejecting any variable not listed in `allowed`.
    pub fn parse(source: &str, allowed: &[Var]) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            allowed,
            len: source.len(),
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.tokens.get(parser.pos) {
            return Err(Error::Expression {
                offset: tok.offset,
                message: "unexpected trailing input".into(),
            });
        }
        Ok(Expr {
            source: source.trim().to_string(),
            root,
        })
    }

    /// Expression in `x`, `y` only.
    pub fn spatial(source: &str) -> Result<Expr> {
        Expr::parse(source, &[Var::X, Var::Y])
    }

    pub fn constant(value: f64) -> Expr {
        Expr {
            source: format!("{value:?}"),
            root: Node::Const(value),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, vars: Vars) -> f64 {
        eval(&self.root, &vars)
    }

    pub fn eval_at(&self, point: [f64; 2]) -> f64 {
        self.eval(Vars::at(point))
    }

    pub fn uses(&self, var: Var) -> bool {
        uses(&self.root, var)
    }

    /// Pointwise `max(self, other)` or `min(self, other)`.
    pub fn combine(&self, other: &Expr, take_max: bool) -> Expr {
        let (name, func) = if take_max {
            ("max", Func::Max)
        } else {
            ("min", Func::Min)
        };
        Expr {
            source: format!("{name}({}, {})", self.source, other.source),
            root: Node::Call(func, vec![self.root.clone(), other.root.clone()]),
        }
    }
}

fn uses(node: &Node, var: Var) -> bool {
    match node {
        Node::Const(_) => false,
        Node::Var(v) => *v == var,
        Node::Neg(a) => uses(a, var),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            uses(a, var) || uses(b, var)
        }
        Node::Call(_, args) => args.iter().any(|a| uses(a, var)),
    }
}

fn eval(node: &Node, vars: &Vars) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Var(Var::X) => vars.x,
        Node::Var(Var::Y) => vars.y,
        Node::Var(Var::T) => vars.t,
        Node::Neg(a) => -eval(a, vars),
        Node::Add(a, b) => eval(a, vars) + eval(b, vars),
        Node::Sub(a, b) => eval(a, vars) - eval(b, vars),
        Node::Mul(a, b) => eval(a, vars) * eval(b, vars),
        Node::Div(a, b) => eval(a, vars) / eval(b, vars),
        Node::Pow(a, b) => eval(a, vars).powf(eval(b, vars)),
        Node::Call(func, args) => {
            let a = eval(&args[0], vars);
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Sign => {
                    if a > 0.0 {
                        1.0
                    } else if a < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Func::Pow => a.powf(eval(&args[1], vars)),
                Func::Max => a.max(eval(&args[1], vars)),
                Func::Min => a.min(eval(&args[1], vars)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| Error::Expression {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token {
                tok: Tok::Num(value),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Name(src[start..i].to_string()),
                offset: start,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                tok: Tok::Op(c),
                offset: i,
            });
            i += 1;
        } else {
            return Err(Error::Expression {
                offset: i,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    allowed: &'a [Var],
    len: usize,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token { tok: Tok::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |t| t.offset)
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expression {
                offset: self.offset(),
                message: format!("expected '{op}'"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let offset = self.offset();
        let Some(token) = self.tokens.get(self.pos) else {
            return Err(Error::Expression {
                offset,
                message: "unexpected end of expression".into(),
            });
        };
        self.pos += 1;
        match &token.tok {
            Tok::Num(v) => Ok(Node::Const(*v)),
            Tok::Op('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Op(c) => Err(Error::Expression {
                offset,
                message: format!("unexpected '{c}'"),
            }),
            Tok::Name(name) => {
                if self.peek_op() == Some('(') {
                    let func = Func::lookup(name).ok_or_else(|| Error::Expression {
                        offset,
                        message: format!("unknown function '{name}'"),
                    })?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_op() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != func.arity() {
                        return Err(Error::Expression {
                            offset,
                            message: format!(
                                "'{name}' takes {} argument(s), got {}",
                                func.arity(),
                                args.len()
                            ),
                        });
                    }
                    return Ok(Node::Call(func, args));
                }
                let var = match name.as_str() {
                    "pi" => return Ok(Node::Const(std::f64::consts::PI)),
                    "e" => return Ok(Node::Const(std::f64::consts::E)),
                    "x" => Var::X,
                    "y" => Var::Y,
                    "t" => Var::T,
                    _ => {
                        return Err(Error::Expression {
                            offset,
                            message: format!("unknown name '{name}'"),
                        })
                    }
                };
                if !self.allowed.contains(&var) {
                    return Err(Error::Expression {
                        offset,
                        message: format!("variable '{name}' not allowed here"),
                    });
                }
                Ok(Node::Var(var))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: &[Var] = &[Var::X, Var::Y, Var::T];

    fn ev(src: &str, x: f64, y: f64, t: f64) -> f64 {
        Expr::parse(src, ALL).unwrap().eval(Vars { x, y, t })
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2 + 3*4", 0., 0., 0.), 14.0);
        assert_eq!(ev("2^3^2", 0., 0., 0.), 512.0);
        assert_eq!(ev("-2^2", 0., 0., 0.), -4.0);
        assert_eq!(ev("10 - 4 - 3", 0., 0., 0.), 3.0);
        assert_eq!(ev("8/4/2", 0., 0., 0.), 1.0);
        assert_eq!(ev("2*(x + y)", 1.5, 0.5, 0.), 4.0);
    }

    #[test]
    fn functions_and_constants() {
        assert!((ev("sin(pi/2)", 0., 0., 0.) - 1.0).abs() < 1e-15);
        assert_eq!(ev("abs(t)*sign(t)", 0., 0., -3.0), -3.0);
        assert_eq!(ev("pow(abs(t), 2) * t", 0., 0., -2.0), -8.0);
        assert_eq!(ev("max(x, 1 - x)", 0.3, 0., 0.), 0.7);
        assert_eq!(ev("1.5e-1 + 2E1", 0., 0., 0.), 20.15);
        assert!((ev("exp(log(3))", 0., 0., 0.) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::spatial("2 + t").is_err());
        assert!(Expr::spatial("foo(x)").is_err());
        assert!(Expr::spatial("sin(x, y)").is_err());
        assert!(Expr::spatial("2 +").is_err());
        assert!(Expr::spatial("(x").is_err());
        assert!(Expr::spatial("x $ 2").is_err());
        assert!(Expr::spatial("x y").is_err());
    }

    #[test]
    fn combine_builds_pointwise_extremum() {
        let a = Expr::spatial("2 + x").unwrap();
        let b = Expr::spatial("3 - x").unwrap();
        let m = a.combine(&b, true);
        assert_eq!(m.eval_at([0.5, 0.0]), 2.5);
        assert_eq!(m.eval_at([0.9, 0.0]), 2.9);
        assert_eq!(m.source(), "max(2 + x, 3 - x)");
        assert!(m.uses(Var::X) && !m.uses(Var::T));
    }
}
