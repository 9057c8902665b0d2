//! Hamiltonian side: Legendre transform by Newton inversion, Hamiltonian
//! vector fields, and Lagrangian/Hamiltonian comparison.
//!
//! In both the linear and the affine case the Hamiltonian vector field is
//! `ẋ = ρ_0 + ρ ∂H/∂ξ` and `ξ̇ = 𝓔(x, ∂H/∂ξ, -∂H/∂x, ξ)` fiber part, i.e.
//! the contraction of the structure tensor with the (affine) differential
//! of `H`. For an algebroid the affine parts vanish.

use std::cell::RefCell;

use crate::algebroid::check_variables;
use crate::dynamics::{self, legendre, max_abs_diff, Lagrangian, NodeData, Trajectory};
use crate::error::{Error, Result};
use crate::expr::{evaluate_jet2, Expression};
use crate::linalg::Lu;
use crate::ode::{Method, Span};
use crate::structure::Structure;
use crate::tensor::check_len;
use crate::vars;

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 10;

/// `H(x, ξ)` given either as an expression in `x1..xn, p1..pd` or through
/// the Legendre transform of a Lagrangian.
///
/// The implicit form keeps the last Newton solution as a warm start, so an
/// instance must not be shared between concurrent integrations; clone one
/// per trajectory.
#[derive(Debug, Clone)]
pub enum HamiltonianSection {
    Explicit { expr: Expression, n: usize, d: usize, seeds: Vec<String> },
    Implicit { lagrangian: Lagrangian, warm: RefCell<Vec<f64>> },
}

/// `H` and its first derivatives at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianJet {
    pub value: f64,
    /// `∂H/∂ξ`, which equals the velocity `y`.
    pub dxi: Vec<f64>,
    pub dx: Vec<f64>,
}

impl HamiltonianSection {
    pub fn explicit(expr: Expression, n: usize, d: usize) -> Result<Self> {
        let mut seeds = vars::duals(d);
        seeds.extend(vars::bases(n));
        check_variables("hamiltonian", &expr, &seeds)?;
        Ok(HamiltonianSection::Explicit { expr, n, d, seeds })
    }

    pub fn implicit(lagrangian: Lagrangian, y_guess: &[f64]) -> Result<Self> {
        check_len("y_guess", lagrangian.d(), y_guess.len())?;
        Ok(HamiltonianSection::Implicit { lagrangian, warm: RefCell::new(y_guess.to_vec()) })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HamiltonianSection::Explicit { .. } => "explicit",
            HamiltonianSection::Implicit { .. } => "implicit",
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            HamiltonianSection::Explicit { n, d, .. } => (*n, *d),
            HamiltonianSection::Implicit { lagrangian, .. } => (lagrangian.n(), lagrangian.d()),
        }
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<HamiltonianJet> {
        let (n, d) = self.dims();
        check_len("x", n, x.len())?;
        check_len("xi", d, xi.len())?;
        match self {
            HamiltonianSection::Explicit { expr, seeds, .. } => {
                let mut env = Vec::with_capacity(n + d);
                vars::bind_into(&mut env, seeds, &[xi, x].concat());
                let j = evaluate_jet2(expr, &env, seeds)?;
                Ok(HamiltonianJet { value: j.value(), dxi: j.grad()[..d].to_vec(), dx: j.grad()[d..].to_vec() })
            }
            HamiltonianSection::Implicit { lagrangian, warm } => {
                let guess = warm.borrow().clone();
                let (y, jet) = invert_legendre(lagrangian, x, xi, &guess)?;
                *warm.borrow_mut() = y.clone();
                let mut value = -jet.value;
                for (a, b) in y.iter().zip(xi) {
                    value += a * b;
                }
                Ok(HamiltonianJet { value, dxi: y, dx: jet.lx.iter().map(|v| -v).collect() })
            }
        }
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Newton iteration for `∂L/∂y(x, y) = ξ` with step halving.
fn invert_legendre(
    l: &Lagrangian,
    x: &[f64],
    xi: &[f64],
    guess: &[f64],
) -> Result<(Vec<f64>, dynamics::LagrangianJet)> {
    let residual = |jet: &dynamics::LagrangianJet| -> Vec<f64> {
        jet.ly.iter().zip(xi).map(|(a, b)| a - b).collect()
    };
    let mut y = guess.to_vec();
    let mut jet = l.jet(x, &y)?;
    let mut r = residual(&jet);
    let mut norm = max_norm(&r);
    for _ in 0..NEWTON_MAX_ITER {
        if norm <= NEWTON_TOL {
            return Ok((y, jet));
        }
        let lu = Lu::factor(&jet.lyy).ok_or(Error::SingularHessian { cond: f64::INFINITY, step: None })?;
        let cond = lu.condition();
        if cond.is_nan() || cond > dynamics::DEFAULT_MAX_COND {
            return Err(Error::SingularHessian { cond, step: None });
        }
        let delta = lu.solve(&r);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = y.iter().zip(&delta).map(|(a, b)| a - alpha * b).collect();
            if let Ok(tj) = l.jet(x, &trial) {
                let tr = residual(&tj);
                let tn = max_norm(&tr);
                if tn < norm || tn <= NEWTON_TOL {
                    accepted = Some((trial, tj, tr, tn));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((ny, nj, nr, nn)) => {
                y = ny;
                jet = nj;
                r = nr;
                norm = nn;
            }
            None => break,
        }
    }
    if norm <= NEWTON_TOL {
        return Ok((y, jet));
    }
    Err(Error::NewtonDivergence { residual: norm, iterations: NEWTON_MAX_ITER })
}

/// Returns `(h, y*)` with `∂L/∂y(x, y*) = ξ` and `h = ⟨y*, ξ⟩ - L(x, y*)`.
pub fn legendre_transform(
    s: &Structure,
    l: &Lagrangian,
    x: &[f64],
    xi: &[f64],
    y_guess: &[f64],
) -> Result<(f64, Vec<f64>)> {
    check_len("lagrangian base dimension", s.n(), l.n())?;
    check_len("lagrangian fiber dimension", s.fiber_dim(), l.d())?;
    check_len("xi", l.d(), xi.len())?;
    check_len("y_guess", l.d(), y_guess.len())?;
    let (y, jet) = invert_legendre(l, x, xi, y_guess)?;
    let mut h = -jet.value;
    for (a, b) in y.iter().zip(xi) {
        h += a * b;
    }
    Ok((h, y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianVelocity {
    pub xdot: Vec<f64>,
    pub xidot: Vec<f64>,
}

/// `{H, ·}` at `(x, ξ)`.
pub fn ham_vector_field(
    s: &Structure,
    h: &HamiltonianSection,
    x: &[f64],
    xi: &[f64],
) -> Result<HamiltonianVelocity> {
    Ok(field_with_jet(s, h, x, xi)?.0)
}

fn field_with_jet(
    s: &Structure,
    h: &HamiltonianSection,
    x: &[f64],
    xi: &[f64],
) -> Result<(HamiltonianVelocity, HamiltonianJet)> {
    let (n, d) = h.dims();
    check_len("hamiltonian base dimension", s.n(), n)?;
    check_len("hamiltonian fiber dimension", s.fiber_dim(), d)?;
    let j = h.eval(x, xi)?;
    let v = s.values_at(x)?;
    let p: Vec<f64> = j.dx.iter().map(|a| -a).collect();
    let vel = HamiltonianVelocity { xdot: v.anchor(&j.dxi), xidot: v.fiber_map(&j.dxi, xi, &p) };
    Ok((vel, j))
}

/// Integrates Hamilton's equations. The returned trajectory has
/// `momenta = ξ` and `y = ∂H/∂ξ`.
pub fn integrate_ham(
    s: &Structure,
    h: &HamiltonianSection,
    x0: &[f64],
    xi0: &[f64],
    span: Span,
    method: Method,
) -> Result<Trajectory> {
    let (n, d) = (s.n(), s.fiber_dim());
    check_len("x0", n, x0.len())?;
    check_len("xi0", d, xi0.len())?;
    let field = |z: &[f64]| {
        let v = ham_vector_field(s, h, &z[..n], &z[n..])?;
        Ok([v.xdot, v.xidot].concat())
    };
    let node = |z: &[f64]| {
        let (x, xi) = (&z[..n], &z[n..]);
        let (vel, jet) = field_with_jet(s, h, x, xi)?;
        let image = dynamics::structure_map(s, x, &jet.dxi, &vec![0.0; n], xi)?;
        Ok(NodeData {
            y: jet.dxi,
            momenta: xi.to_vec(),
            xdot_flow: vel.xdot,
            xdot_anchor: image.xdot,
            momdot: vel.xidot,
        })
    };
    dynamics::run(span, method, n, [x0, xi0].concat(), field, node)
}

/// Integrates the Lagrangian system and the Hamiltonian system of the
/// implicit Legendre transform from corresponding initial states with RK4;
/// returns the largest max-norm deviation of `(x, momenta)` over the grid.
pub fn equivalence_check(
    s: &Structure,
    l: &Lagrangian,
    x0: &[f64],
    y0: &[f64],
    span: Span,
) -> Result<f64> {
    let lag = dynamics::integrate(s, l, x0, y0, span, Method::Rk4)?;
    let xi0 = legendre(s, l, x0, y0)?;
    let h = HamiltonianSection::implicit(l.clone(), y0)?;
    let ham = integrate_ham(s, &h, x0, &xi0, span, Method::Rk4)?;
    let mut dev = 0.0f64;
    for k in 0..lag.len() {
        dev = dev
            .max(max_abs_diff(&lag.x[k], &ham.x[k]))
            .max(max_abs_diff(&lag.momenta[k], &ham.momenta[k]));
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affgebroid::AffgebroidStructure;
    use crate::algebroid::AlgebroidStructure;
    use crate::dynamics::dynamics_lift;
    use crate::expr::parse;
    use crate::models;

    fn e(s: &str) -> Expression {
        parse(s).unwrap()
    }

    #[test]
    fn transform_examples() {
        let s: Structure = models::tangent_bundle_structure(1).into();
        let l = Lagrangian::new(e("0.5*y1^2"), 1, 1).unwrap();
        let (h, y) = legendre_transform(&s, &l, &[0.0], &[3.0], &[0.0]).unwrap();
        assert_eq!((h, y), (4.5, vec![3.0]));
        let (h, y) = legendre_transform(&s, &l, &[0.0], &[0.0], &[1.0]).unwrap();
        assert_eq!((h, y), (0.0, vec![0.0]));

        let r: Structure = models::so3_structure().into();
        let l = Lagrangian::new(e("0.5*(1*y1^2+2*y2^2+3*y3^2)"), 0, 3).unwrap();
        let (h, y) = legendre_transform(&r, &l, &[], &[1.0, 1.0, 1.0], &[0.0; 3]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 0.5).abs() < 1e-15 && (y[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!((h - 0.5 * (1.0 + 0.5 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn newton_handles_nonquadratic_lagrangians() {
        let s: Structure = models::tangent_bundle_structure(1).into();
        // L = y^4/4 + y^2/2, L_y = y^3 + y
        let l = Lagrangian::new(e("0.25*y1^4 + 0.5*y1^2"), 1, 1).unwrap();
        let (_, y) = legendre_transform(&s, &l, &[0.0], &[10.0], &[0.0]).unwrap();
        assert!((y[0].powi(3) + y[0] - 10.0).abs() <= NEWTON_TOL);
    }

    #[test]
    fn newton_reports_singular_and_divergent_cases() {
        let s: Structure = models::tangent_bundle_structure(1).into();
        let l = Lagrangian::new(e("y1"), 1, 1).unwrap();
        assert!(matches!(legendre_transform(&s, &l, &[0.0], &[3.0], &[0.0]), Err(Error::SingularHessian { .. })));
        // L_y = sin(y) cannot reach 2
        let l = Lagrangian::new(e("-cos(y1)"), 1, 1).unwrap();
        let r = legendre_transform(&s, &l, &[0.0], &[2.0], &[0.3]);
        assert!(matches!(r, Err(Error::NewtonDivergence { .. }) | Err(Error::SingularHessian { .. })), "{r:?}");
    }

    #[test]
    fn lie_poisson_field() {
        let r: Structure = models::so3_structure().into();
        let h = HamiltonianSection::explicit(e("0.5*(p1^2/1+p2^2/2+p3^2/3)"), 0, 3).unwrap();
        let v = ham_vector_field(&r, &h, &[], &[1.0, 1.0, 1.0]).unwrap();
        let want = [-1.0 / 6.0, 2.0 / 3.0, -0.5];
        for (a, b) in v.xidot.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn classical_hamilton_equations() {
        let s: Structure = models::tangent_bundle_structure(1).into();
        let h = HamiltonianSection::explicit(e("0.5*p1^2+0.5*x1^2"), 1, 1).unwrap();
        let v = ham_vector_field(&s, &h, &[0.3], &[-0.8]).unwrap();
        assert_eq!((v.xdot, v.xidot), (vec![-0.8], vec![-0.3]));
    }

    #[test]
    fn zero_structure_field_vanishes() {
        let s: Structure = AlgebroidStructure::zero(2, 2).into();
        let h = HamiltonianSection::explicit(e("p1*x2 + sin(p2)*x1^2"), 2, 2).unwrap();
        let v = ham_vector_field(&s, &h, &[0.3, 0.2], &[0.1, -0.4]).unwrap();
        assert!(v.xdot.iter().chain(&v.xidot).all(|a| *a == 0.0));
        let tr = integrate_ham(&s, &h, &[0.3, 0.2], &[0.1, -0.4], Span::new(0.0, 1.0, 0.1), Method::Rk4).unwrap();
        assert!(tr.x.iter().all(|x| x == &tr.x[0]) && tr.momenta.iter().all(|p| p == &tr.momenta[0]));
    }

    #[test]
    fn field_is_contraction_with_the_tensors() {
        use crate::affgebroid::{gamma_components, AffgebroidParts};
        use crate::algebroid::lambda_components;
        let mut parts = AffgebroidParts::zero(2, 3);
        parts.rho0 = vec![e("1"), e("x1")];
        parts.rho = vec![vec![e("1"), e("x2")], vec![e("0"), e("2")]];
        parts.sigma = vec![vec![e("1"), e("0")], vec![e("x1"), e("1")]];
        parts.cm0 = vec![e("x2"), e("-1")];
        parts.ck0 = vec![vec![e("0.5"), e("x1")], vec![e("0"), e("2")]];
        parts.cm = vec![vec![e("0"), e("1")], vec![e("-1"), e("x2")]];
        parts.ck[0][0][1] = e("1");
        parts.ck[1][1][0] = e("x1");
        let aff = AffgebroidStructure::new(parts).unwrap();
        let s: Structure = aff.clone().into();
        let h = HamiltonianSection::explicit(e("p1^2 + x1*p2 + sin(x2)*p1*p2"), 2, 2).unwrap();
        let (x, xi) = ([0.4, -0.7], [0.3, 0.9]);
        let v = ham_vector_field(&s, &h, &x, &xi).unwrap();
        let j = h.eval(&x, &xi).unwrap();
        let g = gamma_components(&aff, &x, &xi).unwrap();
        let cov: Vec<f64> = [&[1.0][..], &j.dxi, &j.dx].concat();
        let out: Vec<f64> = (0..4).map(|c| (0..5).map(|r| cov[r] * g[r][c]).sum()).collect();
        let got = [v.xidot.clone(), v.xdot.clone()].concat();
        for (a, b) in got.iter().zip(&out) {
            assert!((a - b).abs() < 1e-14, "{got:?} {out:?}");
        }

        let a = models::so3_structure();
        let r: Structure = a.clone().into();
        let h = HamiltonianSection::explicit(e("p1*p2 + p3^3"), 0, 3).unwrap();
        let xi = [0.2, -0.1, 0.6];
        let v = ham_vector_field(&r, &h, &[], &xi).unwrap();
        let j = h.eval(&[], &xi).unwrap();
        let l = lambda_components(&a, &[], &xi).unwrap();
        for c in 0..3 {
            let want: f64 = (0..3).map(|r| j.dxi[r] * l[r][c]).sum();
            assert!((v.xidot[c] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn implicit_matches_explicit() {
        let l = Lagrangian::new(e("0.5*y1^2 - 0.5*x1^2"), 1, 1).unwrap();
        let hi = HamiltonianSection::implicit(l, &[0.0]).unwrap();
        let he = HamiltonianSection::explicit(e("0.5*p1^2 + 0.5*x1^2"), 1, 1).unwrap();
        let (a, b) = (hi.eval(&[0.3], &[1.7]).unwrap(), he.eval(&[0.3], &[1.7]).unwrap());
        assert!((a.value - b.value).abs() < 1e-14);
        assert!(max_abs_diff(&a.dxi, &b.dxi) < 1e-14 && max_abs_diff(&a.dx, &b.dx) < 1e-14);
        assert_eq!(hi.kind(), "implicit");
    }

    #[test]
    fn newtonian_lift_satisfies_hamilton_equations() {
        let spec = models::builtin("newtonian", &Default::default()).unwrap();
        let s = spec.structure;
        let l = spec.lagrangian;
        let (x, y) = ([0.2, 0.5, -0.3, 0.8], [0.1, -0.6, 0.4]);
        let lift = dynamics_lift(&s, &l, &x, &y).unwrap();
        let h = HamiltonianSection::implicit(l, &[0.0; 3]).unwrap();
        let v = ham_vector_field(&s, &h, &x, &lift.xi).unwrap();
        assert!(max_abs_diff(&v.xdot, &lift.xdot) < 1e-12);
        assert!(max_abs_diff(&v.xidot, &lift.xidot) < 1e-12);
    }

    #[test]
    fn equivalence_of_free_particle() {
        let spec = models::newtonian(1.0, e("0")).unwrap();
        let dev = equivalence_check(&spec.structure, &spec.lagrangian, &[0.0, 1.0, 2.0, 3.0], &[0.5, -0.5, 1.0], Span::new(0.0, 1.0, 1e-2)).unwrap();
        assert!(dev <= 1e-12, "{dev}");
    }
}
