//! Built-in structures with default Lagrangians, initial states and
//! monitors.
//!
//! | name             | kind        | parameters                        |
//! |------------------|-------------|-----------------------------------|
//! | `tangent_bundle` | algebroid   | `n`, `potential` in `q1..qn`      |
//! | `so3_rigid_body` | algebroid   | `I1`, `I2`, `I3`                  |
//! | `newtonian`      | affgebroid  | `mass`, `potential` in `t, q1..q3` |
//! | `time_dependent` | affgebroid  | `n`, `mass`, `potential` in `t, q1..q{n-1}` |
//!
//! Any other numeric parameter is bound as a constant inside the potential,
//! so `{"k": 2, "potential": "0.5*k*q1^2"}` works. Potentials may also use
//! the raw coordinate names `x1..xn`.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::affgebroid::{AffgebroidParts, AffgebroidStructure};
use crate::algebroid::AlgebroidStructure;
use crate::dynamics::Lagrangian;
use crate::error::{Error, Result};
use crate::expr::{parse, Expression};
use crate::structure::Structure;
use crate::vars;

/// A parameter is a number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Expr(String),
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub structure: Structure,
    pub lagrangian: Lagrangian,
    pub initial: InitialState,
    pub monitors: IndexMap<String, Expression>,
}

/// `(name, description)` of every built-in model.
pub const MODELS: &[(&str, &str)] = &[
    ("tangent_bundle", "TR^n with L = 1/2 |y|^2 - V(q)"),
    ("so3_rigid_body", "free rigid body on so(3) with inertias I1, I2, I3"),
    ("newtonian", "particle in Newtonian space-time R x R^3 with L = m/2 |v|^2 - phi(t, q)"),
    ("time_dependent", "time-dependent mechanics on R x R^(n-1) with L = m/2 |v|^2 - V(t, q)"),
];

fn c(v: f64) -> Expression {
    Expression::constant(v)
}

fn identity(n: usize) -> Vec<Vec<Expression>> {
    (0..n).map(|i| (0..n).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect()).collect()
}

/// `ρ = σ = I`, `c = 0` on `n` coordinates.
pub fn tangent_bundle_structure(n: usize) -> AlgebroidStructure {
    let zero = vec![vec![vec![Expression::zero(); n]; n]; n];
    AlgebroidStructure::new(n, n, identity(n), identity(n), zero).expect("valid shapes")
}

/// `so(3)` with `c^k_{ij} = ε_{ijk}`.
pub fn so3_structure() -> AlgebroidStructure {
    let mut a = AlgebroidStructure::zero(0, 3);
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        a.set_c(k, i, j, c(1.0)).expect("constant");
        a.set_c(k, j, i, c(-1.0)).expect("constant");
    }
    a
}

/// Time plus `spatial` coordinates: `ρ_0 = ∂_t`, `ρ = σ` the spatial
/// identity, all brackets zero.
pub fn time_dependent_structure(spatial: usize) -> AffgebroidStructure {
    let n = spatial + 1;
    let mut parts = AffgebroidParts::zero(n, spatial + 1);
    parts.rho0[0] = c(1.0);
    for k in 0..spatial {
        parts.rho[1 + k][k] = c(1.0);
        parts.sigma[1 + k][k] = c(1.0);
    }
    AffgebroidStructure::new(parts).expect("valid shapes")
}

/// Newtonian space-time `ℝ × ℝ^3` in an inertial chart.
pub fn newtonian_structure() -> AffgebroidStructure {
    time_dependent_structure(3)
}

fn sum_squares(prefix: &str, count: usize, offset: usize) -> String {
    let terms: Vec<String> = (0..count).map(|i| format!("{prefix}{}^2", i + 1 + offset)).collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

/// Parses a potential and maps `q1..`, `t` to coordinate names.
fn potential(text: &str, time: bool, spatial: usize, constants: &BTreeMap<String, f64>) -> Result<Expression> {
    let shift = usize::from(time);
    let mut names = BTreeMap::new();
    if time {
        names.insert(vars::TIME.to_string(), vars::base(0));
    }
    for i in 0..spatial {
        names.insert(format!("q{}", i + 1), vars::base(i + shift));
    }
    let e = parse(text)?.bind(constants).rename(&names);
    let allowed = vars::bases(spatial + shift);
    match e.variables().into_iter().find(|v| !allowed.contains(v)) {
        Some(name) => Err(Error::UndeclaredVariable { what: "potential".into(), name }),
        None => Ok(e),
    }
}

pub fn tangent_bundle(n: usize, v: Expression) -> Result<ModelSpec> {
    if n == 0 {
        return Err(Error::InvalidArgument("tangent_bundle needs n >= 1".into()));
    }
    let structure: Structure = tangent_bundle_structure(n).into();
    let kinetic = parse(&format!("0.5*({})", sum_squares("y", n, 0)))?;
    let lagrangian = Lagrangian::for_structure(kinetic.clone() - v.clone(), &structure)?;
    let mut monitors = IndexMap::new();
    monitors.insert("energy".to_string(), kinetic + v);
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    Ok(ModelSpec {
        name: "tangent_bundle".into(),
        structure,
        lagrangian,
        initial: InitialState { x, y: vec![0.0; n] },
        monitors,
    })
}

pub fn so3_rigid_body(inertia: [f64; 3]) -> Result<ModelSpec> {
    if inertia.iter().any(|i| !(*i > 0.0 && i.is_finite())) {
        return Err(Error::InvalidArgument(format!("inertias must be positive, got {inertia:?}")));
    }
    let structure: Structure = so3_structure().into();
    let [i1, i2, i3] = inertia;
    let energy = parse(&format!("0.5*({i1:?}*y1^2+{i2:?}*y2^2+{i3:?}*y3^2)"))?;
    let casimir = parse(&format!("({i1:?}*y1)^2+({i2:?}*y2)^2+({i3:?}*y3)^2"))?;
    let lagrangian = Lagrangian::for_structure(energy.clone(), &structure)?;
    let mut monitors = IndexMap::new();
    monitors.insert("energy".to_string(), energy);
    monitors.insert("casimir".to_string(), casimir);
    Ok(ModelSpec {
        name: "so3_rigid_body".into(),
        structure,
        lagrangian,
        initial: InitialState { x: vec![], y: vec![1.0, 0.5, 0.2] },
        monitors,
    })
}

/// Time-dependent model with `n - 1` spatial coordinates; `v` is in the
/// coordinate names `x1` (time) and `x2..xn`.
pub fn time_dependent(n: usize, mass: f64, v: Expression) -> Result<ModelSpec> {
    if n < 2 {
        return Err(Error::InvalidArgument("time_dependent needs n >= 2".into()));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    let spatial = n - 1;
    let structure: Structure = time_dependent_structure(spatial).into();
    let kinetic = parse(&format!("0.5*{mass:?}*({})", sum_squares("y", spatial, 0)))?;
    let lagrangian = Lagrangian::for_structure(kinetic.clone() - v.clone(), &structure)?;
    let mut monitors = IndexMap::new();
    monitors.insert("energy".to_string(), kinetic + v);
    let mut x = vec![0.0; n];
    x[1] = 1.0;
    Ok(ModelSpec {
        name: "time_dependent".into(),
        structure,
        lagrangian,
        initial: InitialState { x, y: vec![0.0; spatial] },
        monitors,
    })
}

/// Newtonian particle; `phi` is in `x1` (time) and `x2..x4`.
pub fn newtonian(mass: f64, phi: Expression) -> Result<ModelSpec> {
    let mut spec = time_dependent(4, mass, phi)?;
    spec.name = "newtonian".into();
    Ok(spec)
}

struct ParamReader<'a> {
    model: &'a str,
    params: &'a Params,
    reserved: &'a [&'a str],
}

impl ParamReader<'_> {
    fn number(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(ParamValue::Number(v)) => Ok(*v),
            Some(ParamValue::Expr(_)) => {
                Err(Error::InvalidArgument(format!("{}: parameter `{key}` must be a number", self.model)))
            }
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.number(key, default as f64)?;
        if v.fract() != 0.0 || !(1.0..=1000.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("{}: `{key}` must be a positive integer", self.model)));
        }
        Ok(v as usize)
    }

    fn text(&self, key: &str, default: &str) -> Result<String> {
        match self.params.get(key) {
            None => Ok(default.to_string()),
            Some(ParamValue::Expr(s)) => Ok(s.clone()),
            Some(ParamValue::Number(v)) => Ok(format!("{v:?}")),
        }
    }

    /// Numeric parameters that are not model keys, for binding.
    fn constants(&self) -> BTreeMap<String, f64> {
        self.params
            .iter()
            .filter(|(k, _)| !self.reserved.contains(&k.as_str()))
            .filter_map(|(k, v)| match v {
                ParamValue::Number(x) => Some((k.clone(), *x)),
                ParamValue::Expr(_) => None,
            })
            .collect()
    }
}

/// Instantiates a built-in model by name.
pub fn builtin(name: &str, params: &Params) -> Result<ModelSpec> {
    let reserved: &[&str] = match name {
        "tangent_bundle" => &["n", "potential"],
        "so3_rigid_body" => &["I1", "I2", "I3"],
        "newtonian" => &["mass", "potential"],
        "time_dependent" => &["n", "mass", "potential"],
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    let r = ParamReader { model: name, params, reserved };
    if name == "so3_rigid_body" {
        if let Some(k) = params.keys().find(|k| !reserved.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("so3_rigid_body: unknown parameter `{k}`")));
        }
    }
    match name {
        "tangent_bundle" => {
            let n = r.count("n", 1)?;
            let text = r.text("potential", &format!("0.5*({})", sum_squares("q", n, 0)))?;
            tangent_bundle(n, potential(&text, false, n, &r.constants())?)
        }
        "so3_rigid_body" => so3_rigid_body([r.number("I1", 1.0)?, r.number("I2", 2.0)?, r.number("I3", 3.0)?]),
        "newtonian" => {
            let text = r.text("potential", "0.5*(q1^2+q2^2+q3^2)")?;
            newtonian(r.number("mass", 1.0)?, potential(&text, true, 3, &r.constants())?)
        }
        _ => {
            let n = r.count("n", 2)?;
            if n < 2 {
                return Err(Error::InvalidArgument("time_dependent: `n` must be at least 2".into()));
            }
            let text = r.text("potential", &format!("0.5*({})", sum_squares("q", n - 1, 0)))?;
            time_dependent(n, r.number("mass", 1.0)?, potential(&text, true, n - 1, &r.constants())?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, solve_ydot};
    use crate::ode::{Method, Span};

    fn params(pairs: &[(&str, ParamValue)]) -> Params {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn every_builtin_is_lie() {
        for (name, _) in MODELS {
            let spec = builtin(name, &Params::new()).unwrap();
            let r = spec.structure.classify(100, 11, 1e-8).unwrap();
            assert!(r.is_lie, "{name}");
        }
    }

    #[test]
    fn unknown_model() {
        assert!(matches!(builtin("pendulum", &Params::new()), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn parameter_validation() {
        assert!(builtin("so3_rigid_body", &params(&[("I1", ParamValue::Number(-1.0))])).is_err());
        assert!(builtin("so3_rigid_body", &params(&[("I4", ParamValue::Number(1.0))])).is_err());
        assert!(builtin("tangent_bundle", &params(&[("n", ParamValue::Number(1.5))])).is_err());
        assert!(builtin("newtonian", &params(&[("potential", ParamValue::Expr("q4".into()))])).is_err());
        assert!(builtin("newtonian", &params(&[("mass", ParamValue::Expr("m".into()))])).is_err());
    }

    #[test]
    fn potentials_bind_constants() {
        let p = params(&[("k", ParamValue::Number(4.0)), ("potential", ParamValue::Expr("0.5*k*q1^2".into()))]);
        let spec = builtin("tangent_bundle", &p).unwrap();
        let v = solve_ydot(&spec.structure, &spec.lagrangian, &[0.5], &[0.0]).unwrap();
        assert_eq!(v.ydot, vec![-2.0]);
    }

    #[test]
    fn newtonian_harmonic_dynamics() {
        let spec = builtin("newtonian", &Params::new()).unwrap();
        let v = solve_ydot(&spec.structure, &spec.lagrangian, &[0.3, 1.0, -2.0, 0.5], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(v.xdot, vec![1.0, 0.1, 0.2, 0.3]);
        assert_eq!(v.ydot, vec![-1.0, 2.0, -0.5]);
    }

    #[test]
    fn time_enters_through_t() {
        let p = params(&[("potential", ParamValue::Expr("t*q1".into()))]);
        let spec = builtin("newtonian", &p).unwrap();
        let v = solve_ydot(&spec.structure, &spec.lagrangian, &[2.0, 0.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert_eq!(v.ydot, vec![-2.0, 0.0, 0.0]);
    }

    #[test]
    fn isotropic_body_is_stationary() {
        let spec = so3_rigid_body([1.0, 1.0, 1.0]).unwrap();
        let v = solve_ydot(&spec.structure, &spec.lagrangian, &[], &[0.3, -0.7, 0.9]).unwrap();
        assert_eq!(v.ydot, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn harmonic_period() {
        let spec = builtin("tangent_bundle", &Params::new()).unwrap();
        let tr = integrate(&spec.structure, &spec.lagrangian, &[1.0], &[0.0], Span::new(0.0, 20.0, 1e-3), Method::Rk4).unwrap();
        // upward zero crossings of x, located by linear interpolation
        let mut crossings = Vec::new();
        for k in 1..tr.len() {
            let (a, b) = (tr.x[k - 1][0], tr.x[k][0]);
            if a < 0.0 && b >= 0.0 {
                crossings.push(tr.t[k - 1] + tr.dt * a / (a - b));
            }
        }
        assert!(crossings.len() >= 3);
        for w in crossings.windows(2) {
            assert!((w[1] - w[0] - 2.0 * std::f64::consts::PI).abs() < 1e-4);
        }
    }

    #[test]
    fn time_dependent_matches_tangent_bundle() {
        let td = builtin("time_dependent", &params(&[("n", ParamValue::Number(3.0))])).unwrap();
        let tb = builtin("tangent_bundle", &params(&[("n", ParamValue::Number(2.0))])).unwrap();
        let span = Span::new(0.0, 5.0, 1e-2);
        let a = integrate(&td.structure, &td.lagrangian, &[0.0, 0.7, -0.2], &[0.1, 0.4], span, Method::Rk4).unwrap();
        let b = integrate(&tb.structure, &tb.lagrangian, &[0.7, -0.2], &[0.1, 0.4], span, Method::Rk4).unwrap();
        for k in 0..a.len() {
            for j in 0..2 {
                assert!((a.x[k][1 + j] - b.x[k][j]).abs() <= 1e-10);
                assert!((a.y[k][j] - b.y[k][j]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn newtonian_galilean_boost() {
        // uniform gravity: boosting the initial velocity by u shifts q by u t
        let p = params(&[("potential", ParamValue::Expr("9.81*q3".into()))]);
        let spec = builtin("newtonian", &p).unwrap();
        let span = Span::new(0.0, 2.0, 1e-2);
        let x0 = [0.0, 0.0, 0.0, 1.0];
        let (v0, u) = ([0.5, 0.0, 2.0], [1.0, -3.0, 0.25]);
        let boosted: Vec<f64> = v0.iter().zip(&u).map(|(a, b)| a + b).collect();
        let a = integrate(&spec.structure, &spec.lagrangian, &x0, &v0, span, Method::Rk4).unwrap();
        let b = integrate(&spec.structure, &spec.lagrangian, &x0, &boosted, span, Method::Rk4).unwrap();
        for k in 0..a.len() {
            for j in 0..3 {
                assert!((b.x[k][1 + j] - (a.x[k][1 + j] + u[j] * a.t[k])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn newtonian_trajectories_satisfy_the_equations() {
        let spec = builtin("newtonian", &params(&[("mass", ParamValue::Number(2.0))])).unwrap();
        let tr = integrate(&spec.structure, &spec.lagrangian, &[0.0, 1.0, 0.5, -0.5], &[0.0, 0.3, 0.1], Span::new(0.0, 10.0, 1e-3), Method::Rk4).unwrap();
        assert!(tr.adm_res.iter().all(|r| *r <= 1e-13));
        assert!(tr.el_res.iter().all(|r| *r <= 1e-6), "{:?}", tr.el_res.iter().cloned().fold(0.0, f64::max));
    }
}
