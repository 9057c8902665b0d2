use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{BinaryOp, Expression, Jet2, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {op} of {argument}")]
    Domain { op: &'static str, argument: f64 },
    #[error("seed `{0}` listed twice")]
    DuplicateSeed(String),
}

/// Variable bindings.
pub trait Scope {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Scope for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Scope for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Scope for [(String, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

impl Scope for Vec<(String, f64)> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

/// Arithmetic carrier shared by the plain and the jet evaluators, so both
/// produce identical values.
trait Carrier: Sized {
    const DERIVATIVES: bool;
    fn value(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self;
}

impl Carrier for f64 {
    const DERIVATIVES: bool = false;
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn chain(&self, f0: f64, _: f64, _: f64) -> Self {
        f0
    }
}

impl Carrier for Jet2 {
    const DERIVATIVES: bool = true;
    fn value(&self) -> f64 {
        Jet2::value(self)
    }
    fn add(&self, o: &Self) -> Self {
        Jet2::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Jet2::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Jet2::mul(self, o)
    }
    fn div(&self, o: &Self) -> Self {
        Jet2::div(self, o)
    }
    fn neg(&self) -> Self {
        Jet2::neg(self)
    }
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2::chain(self, f0, f1, f2)
    }
}

/// b^n by binary exponentiation; exact for negative bases.
fn int_pow(base: f64, n: i64) -> f64 {
    let mut e = n.unsigned_abs();
    let mut acc = 1.0;
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= sq;
        }
        e >>= 1;
        if e > 0 {
            sq *= sq;
        }
    }
    if n < 0 {
        1.0 / acc
    } else {
        acc
    }
}

const MAX_INT_EXPONENT: f64 = 9.007_199_254_740_992e15;

struct Walker<'a, C> {
    leaf: &'a dyn Fn(&str) -> Result<C, EvalError>,
    constant: &'a dyn Fn(f64) -> C,
}

impl<C: Carrier> Walker<'_, C> {
    fn eval(&self, e: &Expression) -> Result<C, EvalError> {
        match e {
            Expression::Constant(v) => Ok((self.constant)(*v)),
            Expression::Variable(name) => (self.leaf)(name),
            Expression::Unary(op, child) => {
                let u = self.eval(child)?;
                unary(*op, &u)
            }
            Expression::Binary(op, l, r) => {
                if *op == BinaryOp::Pow && r.is_constant_tree() {
                    let k = evaluate(r, &[] as &[(String, f64)])?;
                    let b = self.eval(l)?;
                    return const_pow(&b, k);
                }
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                Ok(match op {
                    BinaryOp::Add => a.add(&b),
                    BinaryOp::Sub => a.sub(&b),
                    BinaryOp::Mul => a.mul(&b),
                    BinaryOp::Div => a.div(&b),
                    BinaryOp::Pow => {
                        if a.value() <= 0.0 {
                            return Err(EvalError::Domain { op: "pow", argument: a.value() });
                        }
                        let lg = unary(UnaryOp::Log, &a)?;
                        unary(UnaryOp::Exp, &b.mul(&lg))?
                    }
                })
            }
        }
    }
}

fn unary<C: Carrier>(op: UnaryOp, u: &C) -> Result<C, EvalError> {
    let x = u.value();
    let d = C::DERIVATIVES;
    Ok(match op {
        UnaryOp::Neg => u.neg(),
        UnaryOp::Sin => {
            let (s, c) = x.sin_cos();
            u.chain(s, c, -s)
        }
        UnaryOp::Cos => {
            let (s, c) = x.sin_cos();
            u.chain(c, -s, -c)
        }
        UnaryOp::Tan => {
            let t = x.tan();
            let sec2 = 1.0 + t * t;
            u.chain(t, sec2, 2.0 * t * sec2)
        }
        UnaryOp::Exp => {
            let e = x.exp();
            u.chain(e, e, e)
        }
        UnaryOp::Log => {
            if x <= 0.0 {
                return Err(EvalError::Domain { op: "log", argument: x });
            }
            if d {
                u.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
            } else {
                u.chain(x.ln(), 0.0, 0.0)
            }
        }
        UnaryOp::Sqrt => {
            if x < 0.0 {
                return Err(EvalError::Domain { op: "sqrt", argument: x });
            }
            let s = x.sqrt();
            if d {
                u.chain(s, 0.5 / s, -0.25 / (s * x))
            } else {
                u.chain(s, 0.0, 0.0)
            }
        }
        UnaryOp::Abs => {
            let sign = if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            };
            u.chain(x.abs(), sign, 0.0)
        }
    })
}

fn const_pow<C: Carrier>(b: &C, k: f64) -> Result<C, EvalError> {
    let x = b.value();
    if k.fract() == 0.0 && k.abs() <= MAX_INT_EXPONENT {
        let n = k as i64;
        return Ok(match n {
            0 => b.chain(1.0, 0.0, 0.0),
            1 => b.chain(x, 1.0, 0.0),
            _ if !C::DERIVATIVES => b.chain(int_pow(x, n), 0.0, 0.0),
            _ => b.chain(
                int_pow(x, n),
                k * int_pow(x, n - 1),
                k * (k - 1.0) * int_pow(x, n - 2),
            ),
        });
    }
    if x <= 0.0 || !k.is_finite() {
        return Err(EvalError::Domain { op: "pow", argument: x });
    }
    Ok(b.chain(x.powf(k), k * x.powf(k - 1.0), k * (k - 1.0) * x.powf(k - 2.0)))
}

/// Evaluates `e` with IEEE double arithmetic.
pub fn evaluate<S: Scope + ?Sized>(e: &Expression, env: &S) -> Result<f64, EvalError> {
    let leaf = |name: &str| env.lookup(name).ok_or_else(|| EvalError::UnboundVariable(name.into()));
    let constant = |v: f64| v;
    Walker { leaf: &leaf, constant: &constant }.eval(e)
}

/// Evaluates `e` together with its exact gradient and Hessian with respect
/// to `seeds` (in the given order). Seed values are read from `env`.
pub fn evaluate_jet2<S, N>(e: &Expression, env: &S, seeds: &[N]) -> Result<Jet2, EvalError>
where
    S: Scope + ?Sized,
    N: AsRef<str>,
{
    let dim = seeds.len();
    for (i, s) in seeds.iter().enumerate() {
        if seeds[..i].iter().any(|t| t.as_ref() == s.as_ref()) {
            return Err(EvalError::DuplicateSeed(s.as_ref().to_string()));
        }
    }
    let leaf = |name: &str| {
        let v = env.lookup(name).ok_or_else(|| EvalError::UnboundVariable(name.into()))?;
        Ok(match seeds.iter().position(|s| s.as_ref() == name) {
            Some(i) => Jet2::variable(dim, v, i),
            None => Jet2::constant(dim, v),
        })
    };
    let constant = |v: f64| Jet2::constant(dim, v);
    Walker { leaf: &leaf, constant: &constant }.eval(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn env(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn plain_arithmetic() {
        assert_eq!(evaluate(&parse("2*3+1").unwrap(), &env(&[])).unwrap(), 7.0);
        assert_eq!(evaluate(&parse("sin(x)").unwrap(), &env(&[("x", 0.0)])).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let e = evaluate(&parse("log(x)").unwrap(), &env(&[("x", -1.0)]));
        assert_eq!(e, Err(EvalError::Domain { op: "log", argument: -1.0 }));
        let e = evaluate(&parse("sqrt(x)").unwrap(), &env(&[("x", -4.0)]));
        assert!(matches!(e, Err(EvalError::Domain { op: "sqrt", .. })));
        let e = evaluate(&parse("x^0.5").unwrap(), &env(&[("x", -4.0)]));
        assert!(matches!(e, Err(EvalError::Domain { op: "pow", .. })));
        let e = evaluate(&parse("x^y").unwrap(), &env(&[("x", -4.0), ("y", 2.0)]));
        assert!(matches!(e, Err(EvalError::Domain { op: "pow", .. })));
    }

    #[test]
    fn unbound_variable() {
        let e = evaluate(&parse("a+b").unwrap(), &env(&[("a", 1.0)]));
        assert_eq!(e, Err(EvalError::UnboundVariable("b".into())));
    }

    #[test]
    fn integer_powers_of_negative_bases() {
        let e = env(&[("x", -2.0)]);
        assert_eq!(evaluate(&parse("x^3").unwrap(), &e).unwrap(), -8.0);
        assert_eq!(evaluate(&parse("x^-2").unwrap(), &e).unwrap(), 0.25);
        assert_eq!(evaluate(&parse("x^0").unwrap(), &e).unwrap(), 1.0);
        let j = evaluate_jet2(&parse("x^3").unwrap(), &e, &["x"]).unwrap();
        assert_eq!(j.grad(), &[12.0]);
        assert_eq!(j.hess(0, 0), -12.0);
    }

    #[test]
    fn polynomial_jet() {
        let j = evaluate_jet2(&parse("y1^2").unwrap(), &env(&[("y1", 3.0)]), &["y1"]).unwrap();
        assert_eq!(j.value(), 9.0);
        assert_eq!(j.grad(), &[6.0]);
        assert_eq!(j.hess(0, 0), 2.0);
    }

    #[test]
    fn bilinear_jet() {
        let j = evaluate_jet2(&parse("x1*y1").unwrap(), &env(&[("x1", 2.0), ("y1", 5.0)]), &[
            "x1", "y1",
        ])
        .unwrap();
        assert_eq!(j.grad(), &[5.0, 2.0]);
        assert_eq!(j.hessian(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn constant_expression_has_zero_derivatives() {
        let j = evaluate_jet2(&parse("3*sin(2)").unwrap(), &env(&[("a", 1.0)]), &["a"]).unwrap();
        assert_eq!(j.grad(), &[0.0]);
        assert_eq!(j.hess(0, 0), 0.0);
    }

    #[test]
    fn jet_value_matches_plain_value() {
        let e = parse("exp(sin(y1))/(1+y1^2) - y1^y1").unwrap();
        let b = env(&[("y1", 0.7)]);
        let v = evaluate(&e, &b).unwrap();
        let j = evaluate_jet2(&e, &b, &["y1"]).unwrap();
        assert_eq!(v.to_bits(), j.value().to_bits());
    }

    #[test]
    fn exp_sin_against_finite_differences() {
        // oracle: central differences with h = 1e-5
        let e = parse("exp(sin(y1))").unwrap();
        let f = |y: f64| evaluate(&e, &env(&[("y1", y)])).unwrap();
        let g = |y: f64| evaluate_jet2(&e, &env(&[("y1", y)]), &["y1"]).unwrap().grad()[0];
        let (y, h) = (0.7, 1e-5);
        let fd1 = (f(y + h) - f(y - h)) / (2.0 * h);
        // second derivative: central difference of the gradient, which is
        // itself checked against values above
        let fd2 = (g(y + h) - g(y - h)) / (2.0 * h);
        let j = evaluate_jet2(&e, &env(&[("y1", y)]), &["y1"]).unwrap();
        assert!(((j.grad()[0] - fd1) / fd1).abs() < 1e-6);
        assert!(((j.hess(0, 0) - fd2) / fd2).abs() < 1e-6);
    }

    #[test]
    fn duplicate_seed_rejected() {
        let r = evaluate_jet2(&parse("a").unwrap(), &env(&[("a", 1.0)]), &["a", "a"]);
        assert_eq!(r, Err(EvalError::DuplicateSeed("a".into())));
    }

    #[test]
    fn abs_and_tan() {
        let j = evaluate_jet2(&parse("abs(x)+tan(x)").unwrap(), &env(&[("x", -0.3)]), &["x"])
            .unwrap();
        let sec2 = 1.0 + 0.3f64.tan().powi(2);
        assert!((j.grad()[0] - (-1.0 + sec2)).abs() < 1e-15);
    }
}
