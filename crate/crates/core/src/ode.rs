//! Fixed-step one-step integrators on flat state vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    /// Implicit midpoint rule solved by fixed-point iteration.
    Midpoint,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "midpoint" => Ok(Method::Midpoint),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::Midpoint => "midpoint",
        })
    }
}

/// Largest number of steps a single integration may take.
pub const MAX_STEPS: u64 = 100_000_000;

const MIDPOINT_TOL: f64 = 1e-14;
const MIDPOINT_MAX_ITER: usize = 100;

/// Uniform time grid request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl Span {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Self {
        Span { t0, t1, dt }
    }

    /// Number of steps `N`: the interval is split into `N` equal steps no
    /// longer than `dt` (up to a relative slack of 1e-9), so the grid ends
    /// exactly at `t1`.
    pub fn steps(&self) -> Result<usize> {
        let Span { t0, t1, dt } = *self;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !(t1 > t0 && t0.is_finite() && t1.is_finite()) {
            return Err(Error::InvalidArgument(format!("need t0 < t1, got [{t0}, {t1}]")));
        }
        let ratio = (t1 - t0) / dt;
        let steps = (ratio * (1.0 - 1e-9)).ceil().max(1.0);
        if steps > MAX_STEPS as f64 {
            return Err(Error::StepCount { steps, limit: MAX_STEPS });
        }
        Ok(steps as usize)
    }

    /// Grid nodes `t_0..t_N`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let n = self.steps()?;
        let h = (self.t1 - self.t0) / n as f64;
        let mut t: Vec<f64> = (0..=n).map(|k| self.t0 + k as f64 * h).collect();
        t[n] = self.t1;
        Ok(t)
    }
}

/// Advances `z` by one step of size `h` under `f`.
pub fn step<F>(method: Method, f: &mut F, z: &[f64], h: f64, index: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    match method {
        Method::Rk4 => rk4(f, z, h),
        Method::Midpoint => midpoint(f, z, h, index),
    }
}

fn axpy(z: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    z.iter().zip(k).map(|(zi, ki)| zi + a * ki).collect()
}

fn rk4<F>(f: &mut F, z: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(z)?;
    let k2 = f(&axpy(z, 0.5 * h, &k1))?;
    let k3 = f(&axpy(z, 0.5 * h, &k2))?;
    let k4 = f(&axpy(z, h, &k3))?;
    Ok((0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn midpoint<F>(f: &mut F, z: &[f64], h: f64, index: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut next = axpy(z, h, &f(z)?);
    for _ in 0..MIDPOINT_MAX_ITER {
        let mid: Vec<f64> = z.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
        let cand = axpy(z, h, &f(&mid)?);
        if cand.iter().any(|v| !v.is_finite()) {
            break;
        }
        let scale = cand.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let change = cand.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        next = cand;
        if change <= MIDPOINT_TOL * scale {
            return Ok(next);
        }
    }
    Err(Error::MidpointDivergence { step: index })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ends_at_t1() {
        let g = Span::new(0.0, std::f64::consts::FRAC_PI_2, 1e-3).grid().unwrap();
        assert_eq!(g.len(), 1572);
        assert_eq!(*g.last().unwrap(), std::f64::consts::FRAC_PI_2);
        let g = Span::new(0.0, 10.0, 1e-3).grid().unwrap();
        assert_eq!(g.len(), 10001);
        assert_eq!(g[1], 1e-3);
    }

    #[test]
    fn bad_spans() {
        assert!(Span::new(0.0, 1.0, 0.0).steps().is_err());
        assert!(Span::new(1.0, 0.0, 0.1).steps().is_err());
        assert!(matches!(Span::new(0.0, 1.0, 1e-9).steps(), Err(Error::StepCount { .. })));
    }

    #[test]
    fn rk4_exact_on_cubic_time() {
        // z' = 3t^2 written autonomously
        let mut f = |z: &[f64]| Ok(vec![1.0, 3.0 * z[0] * z[0]]);
        let mut z = vec![0.0, 0.0];
        for k in 0..10 {
            z = step(Method::Rk4, &mut f, &z, 0.1, k).unwrap();
        }
        assert!((z[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn midpoint_preserves_circle() {
        let mut f = |z: &[f64]| Ok(vec![z[1], -z[0]]);
        let mut z = vec![1.0, 0.0];
        for k in 0..1000 {
            z = step(Method::Midpoint, &mut f, &z, 0.05, k).unwrap();
        }
        assert!((z[0] * z[0] + z[1] * z[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn midpoint_reports_divergence() {
        let mut f = |z: &[f64]| Ok(vec![z[0] * z[0]]);
        let r = step(Method::Midpoint, &mut f, &[10.0], 1.0, 7);
        assert_eq!(r, Err(Error::MidpointDivergence { step: 7 }));
    }

    #[test]
    fn method_names() {
        assert_eq!("midpoint".parse::<Method>().unwrap(), Method::Midpoint);
        assert_eq!(Method::Rk4.to_string(), "rk4");
        assert!("euler".parse::<Method>().is_err());
    }
}
