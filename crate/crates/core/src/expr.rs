//! A small arithmetic expression language.
//!
//! Expressions are parsed once against a fixed list of free variables and a
//! set of declared constant names, then evaluated over any [`Scalar`]: plain
//! reals, [`Jet2`](crate::jets::Jet2) or [`Poly`](crate::jets::Poly).
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | name | func '(' expr ')' | '(' expr ')'
//! func    := sqrt | exp | log | ln | arctan | atan
//! ```
//!
//! `pi` and `e` are builtin constants. A non-integer exponent needs a
//! positive base; integer exponents accept any base.

use crate::error::{Error, Result};
use crate::jets::Scalar;
use std::collections::BTreeMap;
use std::fmt;

/// Values for named constants.
pub type Consts = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Arctan,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "arctan" | "atan" => Func::Arctan,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Arctan => "arctan",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Const(String),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn depends_on_vars(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Num(_) | Node::Const(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on_vars(),
            Node::Bin(_, a, b) => a.depends_on_vars() || b.depends_on_vars(),
        }
    }
}

/// A parsed expression together with its variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    vars: Vec<String>,
    root: Node,
}

impl Expr {
    /// Parse an expression in the single variable `t`.
    pub fn parse(src: &str) -> Result<Expr> {
        Self::parse_with(src, &["t"], &[])
    }

    /// Parse with explicit variable names and declared constant names.
    pub fn parse_with(src: &str, vars: &[&str], consts: &[&str]) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            vars,
            consts,
        };
        let root = p.expr()?;
        let tok = p.peek();
        if tok.kind != Tok::End {
            return Err(Error::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Expr {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Names of constants referenced by the expression.
    pub fn constant_names(&self) -> Vec<String> {
        fn walk(n: &Node, out: &mut Vec<String>) {
            match n {
                Node::Const(c) if !out.contains(c) => out.push(c.clone()),
                Node::Neg(a) | Node::Call(_, a) => walk(a, out),
                Node::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Evaluate with one value per declared variable.
    pub fn eval<S: Scalar>(&self, vars: &[S], consts: &Consts) -> Result<S> {
        if vars.len() != self.vars.len() || vars.is_empty() {
            return Err(Error::Dimension {
                expected: self.vars.len(),
                got: vars.len(),
            });
        }
        eval_node(&self.root, vars, consts)
    }

    /// Evaluate a single-variable expression at a real point.
    pub fn eval_real(&self, t: f64, consts: &Consts) -> Result<f64> {
        self.eval(&[t], consts)
    }
}

fn const_value(name: &str, consts: &Consts) -> Result<f64> {
    consts
        .get(name)
        .copied()
        .ok_or_else(|| Error::UnboundConstant(name.to_string()))
}

fn eval_node<S: Scalar>(node: &Node, vars: &[S], consts: &Consts) -> Result<S> {
    let proto = &vars[0];
    Ok(match node {
        Node::Num(x) => proto.constant_like(*x),
        Node::Var(i) => vars[*i].clone(),
        Node::Const(name) => proto.constant_like(const_value(name, consts)?),
        Node::Neg(a) => -eval_node(a, vars, consts)?,
        Node::Call(f, a) => {
            let x = eval_node(a, vars, consts)?;
            match f {
                Func::Sqrt => x.sqrt()?,
                Func::Exp => x.exp()?,
                Func::Log => x.ln()?,
                Func::Arctan => x.atan()?,
            }
        }
        Node::Bin(op, a, b) => {
            let x = eval_node(a, vars, consts)?;
            match op {
                BinOp::Pow if !b.depends_on_vars() => {
                    let r = eval_node::<f64>(b, &[0.0], consts)?;
                    x.powf(r)?
                }
                _ => {
                    let y = eval_node(b, vars, consts)?;
                    match op {
                        BinOp::Add => x + y,
                        BinOp::Sub => x - y,
                        BinOp::Mul => x * y,
                        BinOp::Div => x.div(&y)?,
                        BinOp::Pow => (y * x.ln()?).exp()?,
                    }
                }
            }
        }
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(n: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match n {
                Node::Num(x) => write!(f, "{x}"),
                Node::Var(i) => write!(f, "{}", vars[*i]),
                Node::Const(c) => write!(f, "{c}"),
                Node::Neg(a) => {
                    write!(f, "(-")?;
                    go(a, vars, f)?;
                    write!(f, ")")
                }
                Node::Call(func, a) => {
                    write!(f, "{}(", func.name())?;
                    go(a, vars, f)?;
                    write!(f, ")")
                }
                Node::Bin(op, a, b) => {
                    write!(f, "(")?;
                    go(a, vars, f)?;
                    write!(f, " {} ", op.symbol())?;
                    go(b, vars, f)?;
                    write!(f, ")")
                }
            }
        }
        go(&self.root, &self.vars, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only when followed by digits
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let x: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            Tok::Num(x)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else {
            i += 1;
            match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                _ => {
                    return Err(Error::Syntax {
                        offset: start,
                        message: format!("unexpected character `{}`", c as char),
                    })
                }
            }
        };
        out.push(Token {
            kind,
            offset: start,
        });
    }
    out.push(Token {
        kind: Tok::End,
        offset: src.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
    consts: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek().kind {
            Tok::Op(c) if ops.contains(&c) => {
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let tok = self.bump();
        match tok.kind {
            Tok::Num(x) => Ok(Node::Num(x)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    let next = self.bump();
                    if next.kind != Tok::LParen {
                        return Err(Error::Syntax {
                            offset: next.offset,
                            message: format!("expected `(` after `{name}`"),
                        });
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                if self.consts.contains(&name.as_str()) {
                    return Ok(Node::Const(name));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => Err(Error::UnknownIdentifier {
                        name,
                        offset: tok.offset,
                    }),
                }
            }
            other => Err(Error::Syntax {
                offset: tok.offset,
                message: format!("expected an operand, found {}", other.describe()),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        let t = self.bump();
        if t.kind != Tok::RParen {
            return Err(Error::Syntax {
                offset: t.offset,
                message: format!("expected `)`, found {}", t.kind.describe()),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Jet2;

    fn num(x: f64) -> Box<Node> {
        Box::new(Node::Num(x))
    }

    #[test]
    fn precedence_of_power() {
        let e = Expr::parse("1 + t^2").unwrap();
        assert_eq!(
            e.root,
            Node::Bin(
                BinOp::Add,
                num(1.0),
                Box::new(Node::Bin(BinOp::Pow, Box::new(Node::Var(0)), num(2.0)))
            )
        );
    }

    #[test]
    fn function_call() {
        let e = Expr::parse("sqrt(1 - t)").unwrap();
        assert_eq!(
            e.root,
            Node::Call(
                Func::Sqrt,
                Box::new(Node::Bin(BinOp::Sub, num(1.0), Box::new(Node::Var(0))))
            )
        );
    }

    #[test]
    fn dangling_operator_reports_offset() {
        match Expr::parse("2 *") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(
            Expr::parse("t + q"),
            Err(Error::UnknownIdentifier { offset: 4, .. })
        ));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = Expr::parse("-t^2").unwrap();
        assert_eq!(e.eval_real(3.0, &Consts::new()).unwrap(), -9.0);
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval_real(0.0, &Consts::new()).unwrap(), 512.0);
        let e = Expr::parse("8 - 3 - 2").unwrap();
        assert_eq!(e.eval_real(0.0, &Consts::new()).unwrap(), 3.0);
    }

    #[test]
    fn evaluates_square() {
        let e = Expr::parse("t^2").unwrap();
        assert_eq!(e.eval_real(3.0, &Consts::new()).unwrap(), 9.0);
    }

    #[test]
    fn exp_of_zero_jet_is_constant_one() {
        let e = Expr::parse("exp(0*t)").unwrap();
        let j = e.eval(&[Jet2::var_u(0.7, 1, 6)], &Consts::new()).unwrap();
        assert_eq!(j, Jet2::constant(1.0, 1, 6));
    }

    #[test]
    fn funk_coefficient_at_origin() {
        let consts: Consts = [("mu", 1.0), ("eps", 1.0), ("xi", -1.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let e = Expr::parse_with(
            "(mu^2+eps*xi)/(eps+(mu^2+eps*xi)*t)",
            &["t"],
            &["mu", "eps", "xi"],
        )
        .unwrap();
        assert_eq!(e.eval_real(0.0, &consts).unwrap(), 0.0);
    }

    #[test]
    fn fractional_power_needs_positive_base() {
        let e = Expr::parse("t^0.5").unwrap();
        assert!(matches!(
            e.eval_real(-1.0, &Consts::new()),
            Err(Error::Domain { .. })
        ));
        let e = Expr::parse("t^3").unwrap();
        assert_eq!(e.eval_real(-2.0, &Consts::new()).unwrap(), -8.0);
    }

    #[test]
    fn domain_errors_propagate() {
        let e = Expr::parse("log(t)").unwrap();
        assert!(matches!(
            e.eval_real(0.0, &Consts::new()),
            Err(Error::Domain { op: "log", .. })
        ));
        let e = Expr::parse("1/t").unwrap();
        assert_eq!(
            e.eval(&[Jet2::var_u(0.0, 1, 1)], &Consts::new()),
            Err(Error::SingularJet)
        );
    }

    #[test]
    fn unbound_constant() {
        let e = Expr::parse_with("a*t", &["t"], &["a"]).unwrap();
        assert_eq!(
            e.eval_real(1.0, &Consts::new()),
            Err(Error::UnboundConstant("a".into()))
        );
    }

    #[test]
    fn two_variable_expression() {
        let e = Expr::parse_with("1 + b2 + s^2", &["b2", "s"], &[]).unwrap();
        assert_eq!(e.eval(&[0.25, 0.5], &Consts::new()).unwrap(), 1.5);
        assert_eq!(e.to_string(), "((1 + b2) + (s ^ 2))");
    }

    #[test]
    fn scientific_literals() {
        let e = Expr::parse("1.5e-3*t + 2E2").unwrap();
        assert_eq!(e.eval_real(1000.0, &Consts::new()).unwrap(), 201.5);
    }
}
