//! Arithmetic expressions over named variables.
//!
//! Expressions are the definition language for structure functions,
//! Lagrangians, Hamiltonians and monitors. They are parsed from text,
//! printed back in a canonical fully parenthesized form, and evaluated
//! either to a plain `f64` or to a second-order [`Jet2`] carrying the exact
//! gradient and Hessian with respect to a chosen set of variables.
//!
//! # Grammar
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := primary ('^' unary)?          // right associative
//! primary  := number | ident | ident '(' expr ')' | '(' expr ')'
//! number   := digits ('.' digits?)? exponent? | '.' digits exponent?
//! exponent := ('e' | 'E') ('+' | '-')? digits
//! ident    := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! Precedence from tightest to loosest: `^`, unary `-`, `*` `/`, `+` `-`.
//! So `-x^2` is `-(x^2)` and `-a/b` is `(-a)/b`. Whitespace is ignored.
//! Functions: `sin cos tan exp log sqrt abs`. Grammar version 1.

mod eval;
mod jet;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use eval::{evaluate, evaluate_jet2, EvalError, Scope};
pub use jet::Jet2;
pub use parse::{parse, ParseError};

/// Version of the textual expression grammar.
pub const GRAMMAR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryOp {
    /// Looks up a function name from the function table.
    pub fn function(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Constant(f64),
    Variable(String),
    Unary(UnaryOp, Box<Expression>),
    Binary(BinaryOp, Box<Expression>, Box<Expression>),
}

/// True when `name` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Expression {
    pub fn constant(value: f64) -> Self {
        Expression::Constant(value)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expression::Variable(name.into())
    }

    pub fn zero() -> Self {
        Expression::Constant(0.0)
    }

    pub fn unary(op: UnaryOp, child: Expression) -> Self {
        Expression::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, left: Expression, right: Expression) -> Self {
        Expression::Binary(op, Box::new(left), Box::new(right))
    }

    pub fn pow(self, exponent: Expression) -> Self {
        Expression::binary(BinaryOp::Pow, self, exponent)
    }

    /// `Some(v)` for a constant node.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expression::Constant(v) => Some(*v),
            _ => None,
        }
    }

    /// True for the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, Expression::Constant(v) if *v == 0.0)
    }

    /// Names of all variables referenced by the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Expression::Constant(_) => {}
            Expression::Variable(name) => {
                out.insert(name.clone());
            }
            Expression::Unary(_, child) => child.collect_variables(out),
            Expression::Binary(_, l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
        }
    }

    /// Replaces every variable found in `values` by a constant.
    pub fn bind(&self, values: &BTreeMap<String, f64>) -> Expression {
        self.map_variables(&|name| values.get(name).map(|v| Expression::Constant(*v)))
    }

    /// Renames variables according to `names`; unlisted variables are kept.
    pub fn rename(&self, names: &BTreeMap<String, String>) -> Expression {
        self.map_variables(&|name| names.get(name).map(|n| Expression::Variable(n.clone())))
    }

    fn map_variables(&self, f: &dyn Fn(&str) -> Option<Expression>) -> Expression {
        match self {
            Expression::Constant(v) => Expression::Constant(*v),
            Expression::Variable(name) => f(name).unwrap_or_else(|| self.clone()),
            Expression::Unary(op, child) => Expression::unary(*op, child.map_variables(f)),
            Expression::Binary(op, l, r) => {
                Expression::binary(*op, l.map_variables(f), r.map_variables(f))
            }
        }
    }

    /// True when no variable occurs in the tree.
    pub fn is_constant_tree(&self) -> bool {
        match self {
            Expression::Constant(_) => true,
            Expression::Variable(_) => false,
            Expression::Unary(_, c) => c.is_constant_tree(),
            Expression::Binary(_, l, r) => l.is_constant_tree() && r.is_constant_tree(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expression::Constant(_) | Expression::Variable(_) => 1,
            Expression::Unary(_, c) => 1 + c.size(),
            Expression::Binary(_, l, r) => 1 + l.size() + r.size(),
        }
    }
}

/// Canonical fully parenthesized text; `parse(format(e)) == e` for every
/// tree the parser can produce.
pub fn format(e: &Expression) -> String {
    e.to_string()
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Negative literals are not part of the grammar; they print as a
            // negation, which evaluates identically.
            Expression::Constant(v) if v.is_sign_negative() => write!(f, "(-({}))", -v),
            Expression::Constant(v) => write!(f, "{v}"),
            Expression::Variable(name) => f.write_str(name),
            Expression::Unary(UnaryOp::Neg, c) => write!(f, "(-({c}))"),
            Expression::Unary(op, c) => write!(f, "{}({c})", op.name()),
            Expression::Binary(op, l, r) => write!(f, "({l}{}{r})", op.symbol()),
        }
    }
}

impl std::ops::Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        Expression::binary(BinaryOp::Add, self, rhs)
    }
}

impl std::ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        Expression::binary(BinaryOp::Sub, self, rhs)
    }
}

impl std::ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        Expression::binary(BinaryOp::Mul, self, rhs)
    }
}

impl std::ops::Div for Expression {
    type Output = Expression;
    fn div(self, rhs: Expression) -> Expression {
        Expression::binary(BinaryOp::Div, self, rhs)
    }
}

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::unary(UnaryOp::Neg, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_constant() {
        assert_eq!(format(&Expression::Constant(7.0)), "7");
    }

    #[test]
    fn format_negation() {
        assert_eq!(format(&-Expression::var("a")), "(-(a))");
    }

    #[test]
    fn format_functions_and_binaries() {
        let e = parse("sin(x) + 2*y^3").unwrap();
        assert_eq!(format(&e), "(sin(x)+(2*(y^3)))");
    }

    #[test]
    fn negative_constant_prints_as_negation() {
        let e = Expression::Constant(-2.5);
        let back = parse(&format(&e)).unwrap();
        assert_eq!(back, -Expression::Constant(2.5));
    }

    #[test]
    fn identifier_rule() {
        assert!(is_identifier("x1"));
        assert!(is_identifier("_a9"));
        assert!(!is_identifier("1x"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("a-b"));
    }

    #[test]
    fn bind_and_rename() {
        let e = parse("k*q1^2 + t").unwrap();
        let mut vals = BTreeMap::new();
        vals.insert("k".to_string(), 3.0);
        let mut names = BTreeMap::new();
        names.insert("q1".to_string(), "x2".to_string());
        names.insert("t".to_string(), "x1".to_string());
        let out = e.bind(&vals).rename(&names);
        assert_eq!(out, parse("3*x2^2 + x1").unwrap());
        let vars: Vec<_> = out.variables().into_iter().collect();
        assert_eq!(vars, vec!["x1", "x2"]);
    }
}
