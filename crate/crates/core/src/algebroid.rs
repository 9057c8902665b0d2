//! General algebroids given by local structure functions.
//!
//! An algebroid on a rank `m` bundle over an `n`-dimensional base is fixed by
//! the left anchor `ρ^b_k(x)`, the right anchor `σ^a_j(x)` and the bracket
//! coefficients `c^k_{ij}(x)`. From these we build the double vector bundle
//! map `ε: T*E → TE*`, the linear tensor `Λ_ε` on `E*`, the bracket of
//! sections, and a sampled Lie/Poisson classification.
//!
//! Coordinates on `E*` are ordered `(ξ_1..ξ_m, x^1..x^n)` everywhere; in
//! expressions they are named `p1..pm, x1..xn`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{evaluate, evaluate_jet2, Expression};
use crate::sampling;
use crate::structure::PointStructure;
use crate::tensor::{check_len, TensorField};
use crate::vars;

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebroidStructure {
    n: usize,
    m: usize,
    /// `rho[b][k] = ρ^b_k`
    rho: Vec<Vec<Expression>>,
    /// `sigma[a][j] = σ^a_j`
    sigma: Vec<Vec<Expression>>,
    /// `c[k][i][j] = c^k_{ij}`
    c: Vec<Vec<Vec<Expression>>>,
}

pub(crate) fn check_matrix(
    what: &str,
    rows: usize,
    cols: usize,
    mat: &[Vec<Expression>],
) -> Result<()> {
    check_len(what, rows, mat.len())?;
    mat.iter().try_for_each(|r| check_len(what, cols, r.len()))
}

pub(crate) fn check_cube(what: &str, m: usize, cube: &[Vec<Vec<Expression>>]) -> Result<()> {
    check_len(what, m, cube.len())?;
    cube.iter().try_for_each(|mat| check_matrix(what, m, m, mat))
}

/// Fails if `e` uses a variable outside `allowed`.
pub(crate) fn check_variables(what: &str, e: &Expression, allowed: &[String]) -> Result<()> {
    match e.variables().into_iter().find(|v| !allowed.contains(v)) {
        Some(name) => Err(Error::UndeclaredVariable { what: what.to_string(), name }),
        None => Ok(()),
    }
}

pub(crate) fn x_scope(x: &[f64]) -> Vec<(String, f64)> {
    let mut env = Vec::with_capacity(x.len());
    vars::bind_into(&mut env, &vars::bases(x.len()), x);
    env
}

pub(crate) fn eval_matrix(mat: &[Vec<Expression>], env: &[(String, f64)]) -> Result<Vec<Vec<f64>>> {
    mat.iter()
        .map(|r| r.iter().map(|e| evaluate(e, env).map_err(Error::from)).collect())
        .collect()
}

impl AlgebroidStructure {
    /// Builds a structure, checking shapes and that every expression uses
    /// only `x1..xn`. Bind parameters with [`Expression::bind`] first.
    pub fn new(
        n: usize,
        m: usize,
        rho: Vec<Vec<Expression>>,
        sigma: Vec<Vec<Expression>>,
        c: Vec<Vec<Vec<Expression>>>,
    ) -> Result<Self> {
        check_matrix("rho", n, m, &rho)?;
        check_matrix("sigma", n, m, &sigma)?;
        check_cube("c", m, &c)?;
        let xs = vars::bases(n);
        for e in rho.iter().chain(&sigma).flatten() {
            check_variables("algebroid structure function", e, &xs)?;
        }
        for e in c.iter().flatten().flatten() {
            check_variables("algebroid structure function", e, &xs)?;
        }
        Ok(AlgebroidStructure { n, m, rho, sigma, c })
    }

    /// All structure functions zero.
    pub fn zero(n: usize, m: usize) -> Self {
        AlgebroidStructure {
            n,
            m,
            rho: vec![vec![Expression::zero(); m]; n],
            sigma: vec![vec![Expression::zero(); m]; n],
            c: vec![vec![vec![Expression::zero(); m]; m]; m],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rho(&self) -> &[Vec<Expression>] {
        &self.rho
    }

    pub fn sigma(&self) -> &[Vec<Expression>] {
        &self.sigma
    }

    pub fn c(&self) -> &[Vec<Vec<Expression>>] {
        &self.c
    }

    /// Replaces `c^k_{ij}`.
    pub fn set_c(&mut self, k: usize, i: usize, j: usize, e: Expression) -> Result<()> {
        check_variables("c", &e, &vars::bases(self.n))?;
        self.c[k][i][j] = e;
        Ok(())
    }

    /// Structure functions at `x`, with the affine parts zero.
    pub fn values_at(&self, x: &[f64]) -> Result<PointStructure> {
        check_len("x", self.n, x.len())?;
        let env = x_scope(x);
        let m = self.m;
        Ok(PointStructure {
            rho0: vec![0.0; self.n],
            rho: eval_matrix(&self.rho, &env)?,
            sigma: eval_matrix(&self.sigma, &env)?,
            cm0: vec![0.0; m],
            ck0: vec![vec![0.0; m]; m],
            cm: vec![vec![0.0; m]; m],
            ck: self.c.iter().map(|mat| eval_matrix(mat, &env)).collect::<Result<_>>()?,
        })
    }

    /// `Λ_ε` as a tensor field in the coordinates `(p1..pm, x1..xn)`.
    pub(crate) fn lambda_field(&self) -> TensorField {
        let (n, m) = (self.n, self.m);
        let mut coords = vars::duals(m);
        coords.extend(vars::bases(n));
        let mut entries = vec![vec![Expression::zero(); n + m]; n + m];
        for i in 0..m {
            for j in 0..m {
                entries[i][j] = linear_in_xi((0..m).map(|k| (&self.c[k][i][j], k)));
            }
            for b in 0..n {
                entries[i][m + b] = self.rho[b][i].clone();
            }
        }
        for a in 0..n {
            for j in 0..m {
                entries[m + a][j] = negate(&self.sigma[a][j]);
            }
        }
        TensorField { coords, entries }
    }
}

pub(crate) fn negate(e: &Expression) -> Expression {
    match e {
        Expression::Constant(v) => Expression::Constant(-v),
        other => -other.clone(),
    }
}

/// `Σ_k coeff_k · p_k`, skipping literal zeros.
pub(crate) fn linear_in_xi<'a>(terms: impl Iterator<Item = (&'a Expression, usize)>) -> Expression {
    let mut acc: Option<Expression> = None;
    for (coeff, k) in terms {
        if coeff.is_zero() {
            continue;
        }
        let term = coeff.clone() * Expression::var(vars::dual(k));
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    acc.unwrap_or_else(Expression::zero)
}

/// A section `X = Σ f_i(x) e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionExpr(Vec<Expression>);

impl SectionExpr {
    pub fn new(components: Vec<Expression>) -> Self {
        SectionExpr(components)
    }

    pub fn constant(values: &[f64]) -> Self {
        SectionExpr(values.iter().map(|v| Expression::constant(*v)).collect())
    }

    pub fn components(&self) -> &[Expression] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The fiberwise linear function `ι(X) = Σ X^i p_i` on the dual bundle.
    pub fn iota(&self) -> Expression {
        let mut acc = Expression::zero();
        for (i, f) in self.0.iter().enumerate() {
            acc = acc + f.clone() * Expression::var(vars::dual(i));
        }
        acc
    }

    /// Values and x-gradients at `x`.
    pub(crate) fn jets_at(&self, x: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
        let env = x_scope(x);
        let seeds = vars::bases(x.len());
        self.0
            .iter()
            .map(|e| {
                let j = evaluate_jet2(e, &env, &seeds)?;
                Ok((j.value(), j.grad().to_vec()))
            })
            .collect()
    }
}

/// Image of `ε` in coordinates `(x, ξ, ẋ, ξ̇)` of `TE*`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub xdot: Vec<f64>,
    pub xidot: Vec<f64>,
}

/// The structure map `ε(x, y, p, π)`.
pub fn epsilon_map(
    a: &AlgebroidStructure,
    x: &[f64],
    y: &[f64],
    p: &[f64],
    pi: &[f64],
) -> Result<TangentPoint> {
    check_len("y", a.m, y.len())?;
    check_len("p", a.n, p.len())?;
    check_len("pi", a.m, pi.len())?;
    let v = a.values_at(x)?;
    let xdot = v.anchor(y);
    let xidot = v.fiber_map(y, pi, p);
    Ok(TangentPoint { x: x.to_vec(), xi: pi.to_vec(), xdot, xidot })
}

/// Components of `Λ_ε` at `(x, ξ)`, ordered `(ξ_1..ξ_m, x^1..x^n)`.
pub fn lambda_components(a: &AlgebroidStructure, x: &[f64], xi: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_len("x", a.n, x.len())?;
    check_len("xi", a.m, xi.len())?;
    a.lambda_field().components(&[xi, x].concat())
}

/// `{f, g}_Λ` at `(x, ξ)`; `f` and `g` are expressions in `p1..pm, x1..xn`.
pub fn poisson_bracket(
    a: &AlgebroidStructure,
    f: &Expression,
    g: &Expression,
    x: &[f64],
    xi: &[f64],
) -> Result<f64> {
    check_len("x", a.n, x.len())?;
    check_len("xi", a.m, xi.len())?;
    a.lambda_field().bracket(f, g, &[xi, x].concat())
}

/// The bracket `[X, Y]_ε`, evaluated pointwise.
#[derive(Debug, Clone, Copy)]
pub struct SectionBracket<'a> {
    structure: &'a AlgebroidStructure,
    x_sec: &'a SectionExpr,
    y_sec: &'a SectionExpr,
}

pub fn bracket<'a>(
    a: &'a AlgebroidStructure,
    x_sec: &'a SectionExpr,
    y_sec: &'a SectionExpr,
) -> Result<SectionBracket<'a>> {
    check_len("section X", a.m, x_sec.len())?;
    check_len("section Y", a.m, y_sec.len())?;
    Ok(SectionBracket { structure: a, x_sec, y_sec })
}

impl SectionBracket<'_> {
    /// `[X,Y]^k = Σ c^k_{ij} X^i Y^j + Σ ρ^a_i X^i ∂_a Y^k − Σ σ^a_j Y^j ∂_a X^k`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.structure;
        let v = s.values_at(x)?;
        let xs = self.x_sec.jets_at(x)?;
        let ys = self.y_sec.jets_at(x)?;
        let (n, m) = (s.n, s.m);
        Ok((0..m)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        acc += v.ck[k][i][j] * xs[i].0 * ys[j].0;
                    }
                }
                for a in 0..n {
                    for i in 0..m {
                        acc += v.rho[a][i] * xs[i].0 * ys[k].1[a];
                    }
                    for j in 0..m {
                        acc -= v.sigma[a][j] * ys[j].0 * xs[k].1[a];
                    }
                }
                acc
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// `"skew"` or `"jacobi"`.
    pub kind: String,
    pub sample: usize,
    /// Sample point in tensor coordinate order.
    pub point: Vec<f64>,
    pub indices: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub is_skew: bool,
    pub skew_defect_max: f64,
    pub jacobiator_max: f64,
    pub is_lie: bool,
    pub witnesses: Vec<Witness>,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Set when the check ran on the vector hull of an affgebroid.
    pub hull_based: bool,
}

/// Samples `(ξ, x)` uniformly in `[-1,1]^{m+n}` from ChaCha8 seeded with
/// `seed`; checks `σ ≡ ρ` and `c^k_{ij} = -c^k_{ji}` and the Jacobi identity
/// of `Λ_ε` at each sample.
pub fn classify(
    a: &AlgebroidStructure,
    sample_count: usize,
    seed: u64,
    tol: f64,
) -> Result<Classification> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
    }
    let field = a.lambda_field();
    let (n, m) = (a.n, a.m);
    let mut rng = sampling::rng(seed);
    let mut skew = (0.0f64, None::<Witness>);
    let mut jac = (0.0f64, None::<Witness>);
    for s in 0..sample_count {
        let point = sampling::unit_cube(&mut rng, m + n);
        let at_sample = |e: Error| Error::AtSample { index: s, point: point.clone(), source: Box::new(e) };
        let v = a.values_at(&point[m..]).map_err(at_sample)?;
        for b in 0..n {
            for k in 0..m {
                let d = (v.sigma[b][k] - v.rho[b][k]).abs();
                if d > skew.0 {
                    skew = (d, Some(witness("skew", s, &point, format!("sigma[{b}][{k}] - rho[{b}][{k}]"), d)));
                }
            }
        }
        for k in 0..m {
            for i in 0..m {
                for j in i..m {
                    let d = (v.ck[k][i][j] + v.ck[k][j][i]).abs();
                    if d > skew.0 {
                        skew = (d, Some(witness("skew", s, &point, format!("c[{k}][{i}][{j}] + c[{k}][{j}][{i}]"), d)));
                    }
                }
            }
        }
        let (j, [p, q, r]) = field.jacobiator_max(&point).map_err(at_sample)?;
        if j > jac.0 {
            let label = format!("({},{},{})", field.coords[p], field.coords[q], field.coords[r]);
            jac = (j, Some(witness("jacobi", s, &point, label, j)));
        }
    }
    let is_skew = skew.0 <= tol;
    let mut witnesses = Vec::new();
    if !is_skew {
        witnesses.extend(skew.1);
    }
    if jac.0 > tol {
        witnesses.extend(jac.1);
    }
    Ok(Classification {
        is_skew,
        skew_defect_max: skew.0,
        jacobiator_max: jac.0,
        is_lie: is_skew && jac.0 <= tol,
        witnesses,
        samples: sample_count,
        seed,
        tol,
        hull_based: false,
    })
}

/// Largest `|ι([X,Y]) - {ι(X), ι(Y)}|` over `pairs` random quadratic section
/// pairs, each checked at `points` samples of `(ξ, x)` in `[-1,1]^{m+n}`.
pub fn bracket_tensor_residual(
    a: &AlgebroidStructure,
    pairs: usize,
    points: usize,
    seed: u64,
) -> Result<f64> {
    let (n, m) = (a.n, a.m);
    let xs = vars::bases(n);
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let xsec = SectionExpr::new(sampling::random_section(&mut rng, &xs, m, 2));
        let ysec = SectionExpr::new(sampling::random_section(&mut rng, &xs, m, 2));
        let br = bracket(a, &xsec, &ysec)?;
        let (ix, iy) = (xsec.iota(), ysec.iota());
        for _ in 0..points {
            let pt = sampling::unit_cube(&mut rng, m + n);
            let (xi, x) = pt.split_at(m);
            let lhs: f64 = br.eval(x)?.iter().zip(xi).map(|(b, p)| b * p).sum();
            let rhs = poisson_bracket(a, &ix, &iy, x, xi)?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

fn witness(kind: &str, sample: usize, point: &[f64], indices: String, value: f64) -> Witness {
    Witness { kind: kind.into(), sample, point: point.to_vec(), indices, value }
}
