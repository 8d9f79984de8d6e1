//! Tiny arithmetic expression language for force profiles.
//!
//! Supports `+ - * / ^` (with the usual precedence, `^` right-associative),
//! parentheses, unary minus, the constants `pi` and `e`, a fixed set of
//! elementary functions, and a caller-supplied variable list (`x1,x2` for
//! plate profiles, `x3` for rod profiles).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "tan" => Some(Func::Tan),
            "exp" => Some(Func::Exp),
            "ln" | "log" => Some(Func::Ln),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            "sinh" => Some(Func::Sinh),
            "cosh" => Some(Func::Cosh),
            "tanh" => Some(Func::Tanh),
            _ => None,
        }
    }
}

impl Expr {
    /// Parse `src` with the given variable names (checked case-sensitively).
    pub fn parse(src: &str, variables: &[&str]) -> Result<Expr> {
        let mut p = Parser {
            chars: src.char_indices().peekable(),
            src,
            variables,
        };
        let e = p.expr()?;
        p.skip_ws();
        if let Some((i, c)) = p.chars.peek().copied() {
            return Err(p.err(i, &format!("unexpected character '{c}'")));
        }
        Ok(e)
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => vars[*i],
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Pow(a, b) => a.eval(vars).powf(b.eval(vars)),
            Expr::Call(f, a) => f.apply(a.eval(vars)),
        }
    }
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    variables: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn err(&self, pos: usize, msg: &str) -> Error {
        Error::Config(format!("expression '{}': {} at byte {}", self.src, msg, pos))
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if matches!(self.chars.peek(), Some((_, x)) if *x == c) {
            self.chars.next();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            // Right-associative; exponent may itself carry a unary minus.
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let (pos, c) = match self.chars.peek().copied() {
            Some(p) => p,
            None => return Err(self.err(self.src.len(), "unexpected end of expression")),
        };
        if c == '(' {
            self.chars.next();
            let e = self.expr()?;
            if !self.eat(')') {
                return Err(self.err(pos, "unbalanced parenthesis"));
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number(pos);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            return self.ident(pos);
        }
        Err(self.err(pos, &format!("unexpected character '{c}'")))
    }

    fn number(&mut self, start: usize) -> Result<Expr> {
        let mut end = start;
        let mut seen_exp = false;
        while let Some((i, c)) = self.chars.peek().copied() {
            let take = c.is_ascii_digit()
                || c == '.'
                || c == 'e'
                || c == 'E'
                || (seen_exp && (c == '+' || c == '-') && end == i - 1);
            if c == 'e' || c == 'E' {
                seen_exp = true;
            }
            if take {
                end = i;
                self.chars.next();
            } else {
                break;
            }
        }
        let text = &self.src[start..=end];
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| self.err(start, &format!("bad number literal '{text}'")))
    }

    fn ident(&mut self, start: usize) -> Result<Expr> {
        let mut end = start;
        while let Some((i, c)) = self.chars.peek().copied() {
            if c.is_ascii_alphanumeric() || c == '_' {
                end = i;
                self.chars.next();
            } else {
                break;
            }
        }
        let name = &self.src[start..=end];
        if let Some(i) = self.variables.iter().position(|v| *v == name) {
            return Ok(Expr::Var(i));
        }
        match name {
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "e" => return Ok(Expr::Const(std::f64::consts::E)),
            _ => {}
        }
        if let Some(f) = Func::from_name(name) {
            if !self.eat('(') {
                return Err(self.err(start, &format!("function '{name}' needs parentheses")));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return Err(self.err(start, "unbalanced parenthesis in function call"));
            }
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        Err(self.err(
            start,
            &format!(
                "unknown identifier '{}' (variables here: {})",
                name,
                self.variables.join(", ")
            ),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ev(src: &str, vars: &[(&str, f64)]) -> f64 {
        let names: Vec<&str> = vars.iter().map(|v| v.0).collect();
        let vals: Vec<f64> = vars.iter().map(|v| v.1).collect();
        Expr::parse(src, &names).unwrap().eval(&vals)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_relative_eq!(ev("1+2*3", &[]), 7.0);
        assert_relative_eq!(ev("(1+2)*3", &[]), 9.0);
        assert_relative_eq!(ev("2^3^2", &[]), 512.0); // right associative
        assert_relative_eq!(ev("-2^2", &[]), -4.0); // unary minus applies after the power
        assert_relative_eq!(ev("8/4/2", &[]), 1.0);
        assert_relative_eq!(ev("1 - 2 - 3", &[]), -4.0);
    }

    #[test]
    fn variables_functions_constants() {
        assert_relative_eq!(
            ev("sin(pi*x1)*x2", &[("x1", 0.5), ("x2", 3.0)]),
            3.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(ev("exp(0) + sqrt(9)", &[]), 4.0);
        assert_relative_eq!(ev("2.5e-1*4", &[]), 1.0);
        assert_relative_eq!(ev("abs(-3) + tanh(0)", &[]), 3.0);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Expr::parse("x9 + 1", &["x1", "x2"]).is_err());
        assert!(Expr::parse("1 +", &[]).is_err());
        assert!(Expr::parse("sin 3", &[]).is_err());
        assert!(Expr::parse("(1+2", &[]).is_err());
        assert!(Expr::parse("1 $ 2", &[]).is_err());
    }
}
