//! Special affgebroids in adapted affine coordinates.
//!
//! `m` is the special rank. Fiber coordinates `y^1..y^{m-1}` and dual
//! coordinates `ξ_1..ξ_{m-1}` are the runtime coordinates; `ξ_0` is the AV
//! direction and the special index `m` appears only in the names of the
//! structure functions `c^m_{0j}` (`cm0`) and `c^m_{ij}` (`cm`). In code the
//! fiber indices are 0-based, so `d = m - 1` arrays hold them.
//!
//! Affine differentials carry coefficient `+1` on the `ξ_0` slot.

use crate::algebroid::{
    self, check_cube, check_matrix, check_variables, eval_matrix, negate, x_scope,
    AlgebroidStructure, Classification, SectionExpr, TangentPoint,
};
use crate::error::{Error, Result};
use crate::expr::{evaluate, evaluate_jet2, Expression};
use crate::structure::PointStructure;
use crate::tensor::check_len;
use crate::vars;

#[derive(Debug, Clone, PartialEq)]
pub struct AffgebroidStructure {
    n: usize,
    m: usize,
    rho0: Vec<Expression>,
    rho: Vec<Vec<Expression>>,
    cm0: Vec<Expression>,
    ck0: Vec<Vec<Expression>>,
    cm: Vec<Vec<Expression>>,
    ck: Vec<Vec<Vec<Expression>>>,
    sigma: Vec<Vec<Expression>>,
}

/// Raw structure functions, validated by [`AffgebroidStructure::new`].
/// Index layouts follow [`PointStructure`].
#[derive(Debug, Clone, PartialEq)]
pub struct AffgebroidParts {
    pub n: usize,
    pub m: usize,
    pub rho0: Vec<Expression>,
    pub rho: Vec<Vec<Expression>>,
    pub cm0: Vec<Expression>,
    pub ck0: Vec<Vec<Expression>>,
    pub cm: Vec<Vec<Expression>>,
    pub ck: Vec<Vec<Vec<Expression>>>,
    pub sigma: Vec<Vec<Expression>>,
}

impl AffgebroidParts {
    /// All structure functions zero.
    pub fn zero(n: usize, m: usize) -> Self {
        let d = m.saturating_sub(1);
        let z = Expression::zero;
        AffgebroidParts {
            n,
            m,
            rho0: vec![z(); n],
            rho: vec![vec![z(); d]; n],
            cm0: vec![z(); d],
            ck0: vec![vec![z(); d]; d],
            cm: vec![vec![z(); d]; d],
            ck: vec![vec![vec![z(); d]; d]; d],
            sigma: vec![vec![z(); d]; n],
        }
    }
}

impl AffgebroidStructure {
    pub fn new(parts: AffgebroidParts) -> Result<Self> {
        let AffgebroidParts { n, m, rho0, rho, cm0, ck0, cm, ck, sigma } = parts;
        if m == 0 {
            return Err(Error::InvalidArgument("affgebroid rank m must be at least 1".into()));
        }
        let d = m - 1;
        check_len("rho0", n, rho0.len())?;
        check_matrix("rho", n, d, &rho)?;
        check_len("cm0", d, cm0.len())?;
        check_matrix("ck0", d, d, &ck0)?;
        check_matrix("cm", d, d, &cm)?;
        check_cube("ck", d, &ck)?;
        check_matrix("sigma", n, d, &sigma)?;
        let xs = vars::bases(n);
        let all = rho0
            .iter()
            .chain(&cm0)
            .chain(rho.iter().chain(&ck0).chain(&cm).chain(&sigma).flatten())
            .chain(ck.iter().flatten().flatten());
        for e in all {
            check_variables("affgebroid structure function", e, &xs)?;
        }
        Ok(AffgebroidStructure { n, m, rho0, rho, cm0, ck0, cm, ck, sigma })
    }

    pub fn zero(n: usize, m: usize) -> Result<Self> {
        Self::new(AffgebroidParts::zero(n, m))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of runtime fiber coordinates, `m - 1`.
    pub fn d(&self) -> usize {
        self.m - 1
    }

    pub fn parts(&self) -> AffgebroidParts {
        AffgebroidParts {
            n: self.n,
            m: self.m,
            rho0: self.rho0.clone(),
            rho: self.rho.clone(),
            cm0: self.cm0.clone(),
            ck0: self.ck0.clone(),
            cm: self.cm.clone(),
            ck: self.ck.clone(),
            sigma: self.sigma.clone(),
        }
    }

    pub fn values_at(&self, x: &[f64]) -> Result<PointStructure> {
        check_len("x", self.n, x.len())?;
        let env = x_scope(x);
        let row = |v: &[Expression]| -> Result<Vec<f64>> {
            v.iter().map(|e| evaluate(e, &env).map_err(Error::from)).collect()
        };
        Ok(PointStructure {
            rho0: row(&self.rho0)?,
            rho: eval_matrix(&self.rho, &env)?,
            sigma: eval_matrix(&self.sigma, &env)?,
            cm0: row(&self.cm0)?,
            ck0: eval_matrix(&self.ck0, &env)?,
            cm: eval_matrix(&self.cm, &env)?,
            ck: self.ck.iter().map(|mat| eval_matrix(mat, &env)).collect::<Result<_>>()?,
        })
    }
}

/// The affine structure map `𝓔(x, y, p, ξ)`.
pub fn cal_e_map(
    s: &AffgebroidStructure,
    x: &[f64],
    y: &[f64],
    p: &[f64],
    xi: &[f64],
) -> Result<TangentPoint> {
    let d = s.d();
    check_len("y", d, y.len())?;
    check_len("p", s.n, p.len())?;
    check_len("xi", d, xi.len())?;
    let v = s.values_at(x)?;
    Ok(TangentPoint { x: x.to_vec(), xi: xi.to_vec(), xdot: v.anchor(y), xidot: v.fiber_map(y, xi, p) })
}

/// Components of `Γ`. Rows range over `(ξ_0, ξ_1..ξ_{m-1}, x^1..x^n)`,
/// columns over `(ξ_1..ξ_{m-1}, x^1..x^n)`.
pub fn gamma_components(s: &AffgebroidStructure, x: &[f64], xi: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = s.d();
    check_len("xi", d, xi.len())?;
    let v = s.values_at(x)?;
    Ok(gamma_from_values(&v, xi))
}

fn gamma_from_values(v: &PointStructure, xi: &[f64]) -> Vec<Vec<f64>> {
    let (n, d) = (v.n(), v.d());
    let mut g = vec![vec![0.0; d + n]; d + 1 + n];
    for j in 0..d {
        let mut s = v.cm0[j];
        for k in 0..d {
            s += v.ck0[k][j] * xi[k];
        }
        g[0][j] = s;
        for i in 0..d {
            let mut s = v.cm[i][j];
            for k in 0..d {
                s += v.ck[k][i][j] * xi[k];
            }
            g[1 + i][j] = s;
        }
    }
    for b in 0..n {
        g[0][d + b] = v.rho0[b];
        for i in 0..d {
            g[1 + i][d + b] = v.rho[b][i];
        }
        for j in 0..d {
            g[d + 1 + b][j] = -v.sigma[b][j];
        }
    }
    g
}

/// `⟨Γ, dh ⊗ dg⟩` at `(x, ξ)`, where `dh` is the affine differential of `h`
/// (coefficient `+1` on `ξ_0`). `h` and `g` are expressions in
/// `p1..p{m-1}, x1..xn`.
pub fn gamma_pairing(
    s: &AffgebroidStructure,
    h: &Expression,
    g: &Expression,
    x: &[f64],
    xi: &[f64],
) -> Result<f64> {
    let (n, d) = (s.n, s.d());
    check_len("x", n, x.len())?;
    check_len("xi", d, xi.len())?;
    let mut coords = vars::duals(d);
    coords.extend(vars::bases(n));
    let mut env: Vec<(String, f64)> = Vec::new();
    vars::bind_into(&mut env, &coords, &[xi, x].concat());
    let dh = evaluate_jet2(h, &env, &coords)?;
    let dg = evaluate_jet2(g, &env, &coords)?;
    let first: Vec<f64> = std::iter::once(1.0).chain(dh.grad().iter().copied()).collect();
    let gam = gamma_components(s, x, xi)?;
    let mut acc = 0.0;
    for (r, row) in gam.iter().enumerate() {
        for (c, val) in row.iter().enumerate() {
            acc += first[r] * val * dg.grad()[c];
        }
    }
    Ok(acc)
}

/// `[a, Y]` for an affine section `a` (components `f_1..f_m`, implicit
/// `f_0 = 1`) and a vector section `Y` (`g_1..g_m`), evaluated pointwise.
#[derive(Debug, Clone, Copy)]
pub struct AffBracket<'a> {
    structure: &'a AffgebroidStructure,
    a: &'a SectionExpr,
    y: &'a SectionExpr,
}

pub fn aff_bracket<'a>(
    s: &'a AffgebroidStructure,
    a: &'a SectionExpr,
    y: &'a SectionExpr,
) -> Result<AffBracket<'a>> {
    check_len("affine section", s.m, a.len())?;
    check_len("section", s.m, y.len())?;
    Ok(AffBracket { structure: s, a, y })
}

impl AffBracket<'_> {
    /// The `m` components; the last one is the special direction.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.structure;
        let (n, d) = (s.n, s.d());
        let v = s.values_at(x)?;
        let fs = self.a.jets_at(x)?;
        let gs = self.y.jets_at(x)?;
        // f_i for i = 0..d with f_0 = 1
        let f = |i: usize| if i == 0 { 1.0 } else { fs[i - 1].0 };
        let rho = |a: usize, i: usize| if i == 0 { v.rho0[a] } else { v.rho[a][i - 1] };
        Ok((0..s.m)
            .map(|k| {
                let special = k == d;
                let c = |i: usize, j: usize| match (special, i) {
                    (true, 0) => v.cm0[j],
                    (true, _) => v.cm[i - 1][j],
                    (false, 0) => v.ck0[k][j],
                    (false, _) => v.ck[k][i - 1][j],
                };
                let mut acc = 0.0;
                for i in 0..=d {
                    for j in 0..d {
                        acc += f(i) * gs[j].0 * c(i, j);
                    }
                }
                for a in 0..n {
                    for i in 0..=d {
                        acc += rho(a, i) * f(i) * gs[k].1[a];
                    }
                    for j in 0..d {
                        acc -= v.sigma[a][j] * gs[j].0 * fs[k].1[a];
                    }
                }
                acc
            })
            .collect())
    }
}

/// The rank `m + 1` vector hull, with basis indices `0..=m`: index 0 is the
/// affine generator, `1..m-1` the fibers and `m` the central special
/// direction. Brackets `[e_j, e_0]` are set to `-[e_0, e_j]`.
pub fn vector_hull(s: &AffgebroidStructure) -> AlgebroidStructure {
    let (n, m, d) = (s.n, s.m, s.d());
    let z = Expression::zero;
    let rank = m + 1;
    let mut rho = vec![vec![z(); rank]; n];
    let mut sigma = vec![vec![z(); rank]; n];
    for b in 0..n {
        rho[b][0] = s.rho0[b].clone();
        sigma[b][0] = s.rho0[b].clone();
        for k in 0..d {
            rho[b][1 + k] = s.rho[b][k].clone();
            sigma[b][1 + k] = s.sigma[b][k].clone();
        }
    }
    let mut c = vec![vec![vec![z(); rank]; rank]; rank];
    for j in 0..d {
        for k in 0..d {
            c[1 + k][0][1 + j] = s.ck0[k][j].clone();
            c[1 + k][1 + j][0] = negate(&s.ck0[k][j]);
        }
        c[m][0][1 + j] = s.cm0[j].clone();
        c[m][1 + j][0] = negate(&s.cm0[j]);
        for i in 0..d {
            for k in 0..d {
                c[1 + k][1 + i][1 + j] = s.ck[k][i][j].clone();
            }
            c[m][1 + i][1 + j] = s.cm[i][j].clone();
        }
    }
    AlgebroidStructure::new(n, rank, rho, sigma, c).expect("hull of a valid affgebroid is valid")
}

/// Lie classification of the vector hull.
pub fn classify_aff(
    s: &AffgebroidStructure,
    sample_count: usize,
    seed: u64,
    tol: f64,
) -> Result<Classification> {
    let mut report = algebroid::classify(&vector_hull(s), sample_count, seed, tol)?;
    report.hull_based = true;
    Ok(report)
}

/// `Σ_{i=1}^{m-1} y^i ξ_i - y^m - ξ_0`; `y` holds `(y^1..y^m)` and `xi`
/// holds `(ξ_0, ξ_1..ξ_{m-1})`.
pub fn sa_pairing(y: &[f64], xi: &[f64]) -> Result<f64> {
    check_len("xi", y.len(), xi.len())?;
    let Some((ym, yv)) = y.split_last() else {
        return Err(Error::InvalidArgument("pairing needs m >= 1".into()));
    };
    let mut s = 0.0;
    for (a, b) in yv.iter().zip(&xi[1..]) {
        s += a * b;
    }
    Ok(s - ym - xi[0])
}

/// `ι^#_a = Σ f_i ξ_i + f_m` for an affine section, or `ι_Y` for a vector
/// section, both as expressions in `p1..`, `x1..`.
pub fn section_function(sec: &SectionExpr) -> Result<Expression> {
    let Some((last, fiber)) = sec.components().split_last() else {
        return Err(Error::InvalidArgument("empty section".into()));
    };
    let mut acc = last.clone();
    for (i, f) in fiber.iter().enumerate() {
        acc = acc + f.clone() * Expression::var(vars::dual(i));
    }
    Ok(acc)
}

/// Largest `|⟨Γ, dι^#_a ⊗ dι_Y⟩ - ι^#_{[a,Y]}|` over `pairs` random
/// quadratic section pairs, each checked at `points` samples.
pub fn bracket_tensor_residual(
    s: &AffgebroidStructure,
    pairs: usize,
    points: usize,
    seed: u64,
) -> Result<f64> {
    let (n, m, d) = (s.n, s.m, s.d());
    let xs = vars::bases(n);
    let mut rng = crate::sampling::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let a = SectionExpr::new(crate::sampling::random_section(&mut rng, &xs, m, 2));
        let y = SectionExpr::new(crate::sampling::random_section(&mut rng, &xs, m, 2));
        let br = aff_bracket(s, &a, &y)?;
        let (ia, iy) = (section_function(&a)?, section_function(&y)?);
        for _ in 0..points {
            let pt = crate::sampling::unit_cube(&mut rng, d + n);
            let (xi, x) = pt.split_at(d);
            let b = br.eval(x)?;
            let mut lhs = b[d];
            for k in 0..d {
                lhs += b[k] * xi[k];
            }
            let rhs = gamma_pairing(s, &ia, &iy, x, xi)?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// The product of an algebroid with the trivial special direction: rank
/// `A.m + 1`, all affine parts zero.
pub fn embed_trivial(a: &AlgebroidStructure) -> AffgebroidStructure {
    let mut parts = AffgebroidParts::zero(a.n(), a.m() + 1);
    parts.rho = a.rho().to_vec();
    parts.sigma = a.sigma().to_vec();
    parts.ck = a.c().to_vec();
    AffgebroidStructure::new(parts).expect("embedding of a valid algebroid is valid")
}
