//! Lagrangian dynamics on algebroids and affgebroids.
//!
//! [`dynamics_lift`] is the image of the differential of `L` under the
//! structure map and needs no regularity. [`solve_ydot`] turns the implicit
//! system into an explicit ODE by solving with the fiber Hessian of `L`, and
//! [`integrate`] steps that ODE on a uniform grid.

use indexmap::IndexMap;

use crate::algebroid::{check_variables, epsilon_map, TangentPoint};
use crate::affgebroid::cal_e_map;
use crate::error::{Error, Result};
use crate::expr::{evaluate, evaluate_jet2, Expression};
use crate::linalg::Lu;
use crate::ode::{self, Method, Span};
use crate::structure::Structure;
use crate::tensor::check_len;
use crate::vars;

/// Fiber Hessians with a 1-norm condition number above this are singular.
pub const DEFAULT_MAX_COND: f64 = 1e12;

/// A Lagrangian `L(x, y)` in the variables `x1..xn, y1..yd`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrangian {
    expr: Expression,
    n: usize,
    d: usize,
    seeds: Vec<String>,
}

/// Value and derivatives of `L` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianJet {
    pub value: f64,
    pub ly: Vec<f64>,
    pub lx: Vec<f64>,
    /// `∂²L/∂y^j∂y^k`
    pub lyy: Vec<Vec<f64>>,
    /// `∂²L/∂y^j∂x^a`
    pub lyx: Vec<Vec<f64>>,
}

impl Lagrangian {
    pub fn new(expr: Expression, n: usize, d: usize) -> Result<Self> {
        let mut seeds = vars::fibers(d);
        seeds.extend(vars::bases(n));
        check_variables("lagrangian", &expr, &seeds)?;
        Ok(Lagrangian { expr, n, d, seeds })
    }

    /// A Lagrangian on the fiber coordinates of `s`.
    pub fn for_structure(expr: Expression, s: &Structure) -> Result<Self> {
        Self::new(expr, s.n(), s.fiber_dim())
    }

    pub fn expr(&self) -> &Expression {
        &self.expr
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn check_shapes(&self, s: &Structure) -> Result<()> {
        check_len("lagrangian base dimension", s.n(), self.n)?;
        check_len("lagrangian fiber dimension", s.fiber_dim(), self.d)
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(evaluate(&self.expr, &self.scope(x, y)?)?)
    }

    fn scope(&self, x: &[f64], y: &[f64]) -> Result<Vec<(String, f64)>> {
        check_len("x", self.n, x.len())?;
        check_len("y", self.d, y.len())?;
        let mut env = Vec::with_capacity(self.n + self.d);
        vars::bind_into(&mut env, &self.seeds, &[y, x].concat());
        Ok(env)
    }

    pub fn jet(&self, x: &[f64], y: &[f64]) -> Result<LagrangianJet> {
        let j = evaluate_jet2(&self.expr, &self.scope(x, y)?, &self.seeds)?;
        let d = self.d;
        let g = j.grad();
        Ok(LagrangianJet {
            value: j.value(),
            ly: g[..d].to_vec(),
            lx: g[d..].to_vec(),
            lyy: (0..d).map(|i| (0..d).map(|k| j.hess(i, k)).collect()).collect(),
            lyx: (0..d).map(|i| (0..self.n).map(|a| j.hess(i, d + a)).collect()).collect(),
        })
    }
}

/// Momenta `∂L/∂y` at `(x, y)`.
pub fn legendre(s: &Structure, l: &Lagrangian, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    l.check_shapes(s)?;
    Ok(l.jet(x, y)?.ly)
}

/// The point `(x, ∂L/∂y, ẋ, d/dt ∂L/∂y)` of the dynamics over `(x, y)`.
pub fn dynamics_lift(s: &Structure, l: &Lagrangian, x: &[f64], y: &[f64]) -> Result<TangentPoint> {
    l.check_shapes(s)?;
    let j = l.jet(x, y)?;
    lift_from_jet(s, x, y, &j)
}

fn lift_from_jet(s: &Structure, x: &[f64], y: &[f64], j: &LagrangianJet) -> Result<TangentPoint> {
    let v = s.values_at(x)?;
    Ok(TangentPoint {
        x: x.to_vec(),
        xdot: v.anchor(y),
        xidot: v.fiber_map(y, &j.ly, &j.lx),
        xi: j.ly.clone(),
    })
}

/// The structure map applied to `(x, y, p, ξ)`, dispatched on the kind.
pub fn structure_map(s: &Structure, x: &[f64], y: &[f64], p: &[f64], xi: &[f64]) -> Result<TangentPoint> {
    match s {
        Structure::Algebroid(a) => epsilon_map(a, x, y, p, xi),
        Structure::Affgebroid(a) => cal_e_map(a, x, y, p, xi),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    pub xdot: Vec<f64>,
    pub ydot: Vec<f64>,
    /// 1-norm condition number of the fiber Hessian.
    pub cond: f64,
}

pub fn solve_ydot(s: &Structure, l: &Lagrangian, x: &[f64], y: &[f64]) -> Result<Velocity> {
    solve_ydot_with(s, l, x, y, DEFAULT_MAX_COND)
}

/// Solves `L_yy ẏ = d/dt(∂L/∂y) - L_yx ẋ`.
pub fn solve_ydot_with(
    s: &Structure,
    l: &Lagrangian,
    x: &[f64],
    y: &[f64],
    max_cond: f64,
) -> Result<Velocity> {
    l.check_shapes(s)?;
    let j = l.jet(x, y)?;
    let lift = lift_from_jet(s, x, y, &j)?;
    let lu = Lu::factor(&j.lyy).ok_or(Error::SingularHessian { cond: f64::INFINITY, step: None })?;
    let cond = lu.condition();
    if cond.is_nan() || cond > max_cond {
        return Err(Error::SingularHessian { cond, step: None });
    }
    let rhs: Vec<f64> = (0..l.d)
        .map(|i| {
            let mut r = lift.xidot[i];
            for (a, xd) in lift.xdot.iter().enumerate() {
                r -= j.lyx[i][a] * xd;
            }
            r
        })
        .collect();
    Ok(Velocity { ydot: lu.solve(&rhs), xdot: lift.xdot, cond })
}

/// States and diagnostics on a uniform grid.
///
/// For Lagrangian runs `y` are the velocities and `momenta = ∂L/∂y`; for
/// Hamiltonian runs `momenta` are the integrated `ξ` and `y = ∂H/∂ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub dt: f64,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub momenta: Vec<Vec<f64>>,
    /// `|ẋ - anchor(y)|_∞` per node.
    pub adm_res: Vec<f64>,
    /// `|d/dt momenta - momdot|_∞` per node, by finite differences.
    pub el_res: Vec<f64>,
    pub monitors: IndexMap<String, Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Evaluates `expr` in `t, x.., y.., p..` at every node and stores it.
    pub fn add_monitor(&mut self, name: &str, expr: &Expression) -> Result<()> {
        let values = self.evaluate(expr)?;
        self.monitors.insert(name.to_string(), values);
        Ok(())
    }

    pub fn evaluate(&self, expr: &Expression) -> Result<Vec<f64>> {
        let (n, d) = (self.x[0].len(), self.y[0].len());
        let mut names = vec![vars::TIME.to_string()];
        names.extend(vars::bases(n));
        names.extend(vars::fibers(d));
        names.extend(vars::duals(d));
        check_variables("monitor", expr, &names)?;
        (0..self.len())
            .map(|k| {
                let mut env = Vec::with_capacity(names.len());
                let vals = [&[self.t[k]][..], &self.x[k], &self.y[k], &self.momenta[k]].concat();
                vars::bind_into(&mut env, &names, &vals);
                Ok(evaluate(expr, &env)?)
            })
            .collect()
    }

    /// `max_k |m_k - m_0|` for a stored monitor.
    pub fn drift(&self, name: &str) -> Option<f64> {
        let m = self.monitors.get(name)?;
        Some(m.iter().map(|v| (v - m[0]).abs()).fold(0.0, f64::max))
    }
}

/// What the assembly needs from a node: `(y, momenta, flow ẋ, anchor ẋ, momdot)`.
pub(crate) struct NodeData {
    pub y: Vec<f64>,
    pub momenta: Vec<f64>,
    pub xdot_flow: Vec<f64>,
    pub xdot_anchor: Vec<f64>,
    pub momdot: Vec<f64>,
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// Runs the integrator over the grid of `span` and fills diagnostics.
pub(crate) fn run<F, G>(
    span: Span,
    method: Method,
    n: usize,
    z0: Vec<f64>,
    mut field: F,
    mut node: G,
) -> Result<Trajectory>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    G: FnMut(&[f64]) -> Result<NodeData>,
{
    let t = span.grid()?;
    let steps = t.len() - 1;
    let h = (span.t1 - span.t0) / steps as f64;
    let mut states = Vec::with_capacity(t.len());
    states.push(z0);
    for k in 0..steps {
        let next = ode::step(method, &mut field, &states[k], h, k).map_err(|e| at_step(e, k))?;
        states.push(next);
    }
    let mut traj = Trajectory {
        dt: h,
        x: Vec::with_capacity(t.len()),
        y: Vec::with_capacity(t.len()),
        momenta: Vec::with_capacity(t.len()),
        adm_res: Vec::with_capacity(t.len()),
        el_res: Vec::new(),
        monitors: IndexMap::new(),
        t,
    };
    let mut momdot = Vec::with_capacity(states.len());
    for (k, z) in states.iter().enumerate() {
        let nd = node(z).map_err(|e| at_step(e, k))?;
        traj.x.push(z[..n].to_vec());
        traj.y.push(nd.y);
        traj.momenta.push(nd.momenta);
        traj.adm_res.push(max_abs_diff(&nd.xdot_flow, &nd.xdot_anchor));
        momdot.push(nd.momdot);
    }
    traj.el_res = el_residuals(&traj.momenta, &momdot, h);
    Ok(traj)
}

fn at_step(e: Error, k: usize) -> Error {
    match e {
        Error::SingularHessian { cond, step: None } => Error::SingularHessian { cond, step: Some(k) },
        other => other,
    }
}

/// Central differences inside, one-sided second order at both ends.
fn el_residuals(p: &[Vec<f64>], momdot: &[Vec<f64>], h: f64) -> Vec<f64> {
    let len = p.len();
    let d = p[0].len();
    (0..len)
        .map(|k| {
            (0..d)
                .map(|j| {
                    let deriv = if len < 3 {
                        (p[len - 1][j] - p[0][j]) / (h * (len - 1) as f64)
                    } else if k == 0 {
                        (-3.0 * p[0][j] + 4.0 * p[1][j] - p[2][j]) / (2.0 * h)
                    } else if k == len - 1 {
                        (3.0 * p[k][j] - 4.0 * p[k - 1][j] + p[k - 2][j]) / (2.0 * h)
                    } else {
                        (p[k + 1][j] - p[k - 1][j]) / (2.0 * h)
                    };
                    (deriv - momdot[k][j]).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub method: Method,
    pub max_cond: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { method: Method::Rk4, max_cond: DEFAULT_MAX_COND }
    }
}

pub fn integrate(
    s: &Structure,
    l: &Lagrangian,
    x0: &[f64],
    y0: &[f64],
    span: Span,
    method: Method,
) -> Result<Trajectory> {
    integrate_with(s, l, x0, y0, span, Options { method, ..Options::default() })
}

pub fn integrate_with(
    s: &Structure,
    l: &Lagrangian,
    x0: &[f64],
    y0: &[f64],
    span: Span,
    opts: Options,
) -> Result<Trajectory> {
    l.check_shapes(s)?;
    let (n, d) = (s.n(), s.fiber_dim());
    check_len("x0", n, x0.len())?;
    check_len("y0", d, y0.len())?;
    let field = |z: &[f64]| {
        let v = solve_ydot_with(s, l, &z[..n], &z[n..], opts.max_cond)?;
        Ok([v.xdot, v.ydot].concat())
    };
    let node = |z: &[f64]| {
        let (x, y) = (&z[..n], &z[n..]);
        let vel = solve_ydot_with(s, l, x, y, opts.max_cond)?;
        let j = l.jet(x, y)?;
        let image = structure_map(s, x, y, &j.lx, &j.ly)?;
        Ok(NodeData {
            y: y.to_vec(),
            momenta: image.xi,
            xdot_flow: vel.xdot,
            xdot_anchor: image.xdot,
            momdot: image.xidot,
        })
    };
    run(span, opts.method, n, [x0, y0].concat(), field, node)
}
