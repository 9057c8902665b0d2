//! Oracles shared by the integration tests. Nothing here calls the
//! library's derivative or bracket code; structure functions are only
//! evaluated pointwise and differentiated by finite differences.

#![allow(dead_code)]

use std::collections::BTreeMap;

use algmech::algebroid::AlgebroidStructure;
use algmech::expr::{evaluate, Expression};

/// Parser round-trip corpus.
pub const CORPUS: [&str; 30] = [
    "1",
    "x",
    "x1 + x2",
    "x1 - x2 - x3",
    "x1 - (x2 - x3)",
    "x1 / x2 / x3",
    "x1 / (x2 * x3)",
    "2^3^2",
    "(2^3)^2",
    "-x^2",
    "(-x)^2",
    "--x",
    "-x * y",
    "a * -b",
    "1e-3 * x",
    "2.5E+4 - y",
    "0.1 + 0.2",
    "sin(x)",
    "cos(-x) * sin(x)^2",
    "tan(x / 2)",
    "exp(log(x))",
    "sqrt(abs(x - 1))",
    "x^-1",
    "x ^ 0.5 + y ^ 1.5",
    "(x1 + x2) * (x1 - x2)",
    "0.5 * (y1^2 + y2^2) - 0.5 * x1^2",
    "m * g * (1 - cos(theta))",
    "exp(-t) * sin(3 * t + phi)",
    "((((x))))",
    "a + b * c ^ d / e - f",
];

/// Differentiation corpus in `x1, x2, x3`, smooth on `[0.3, 1.3]^3`.
pub const AD_CORPUS: [&str; 20] = [
    "x1 * x2 + x3^2",
    "sin(x1) * cos(x2)",
    "exp(x1 - x2) * x3",
    "log(x1 + x2^2)",
    "sqrt(x1 * x2 + 1)",
    "tan(0.5 * x1) / x2",
    "abs(x1 - 2) * x3",
    "x1^x2",
    "(x1 + x2)^3 - x3^-2",
    "-x1^2 + 3 * x2 * x3",
    "x1 / (x2 + x3)",
    "exp(sin(x1 * x2))",
    "log(1 + exp(x3))",
    "sqrt(x1^2 + x2^2 + x3^2)",
    "(x1 - x2)^2 / (1 + x3^2)",
    "cos(x1 + 2 * x2 - x3)^2",
    "x2^0.5 * x1^1.5",
    "exp(-x1) * sin(3 * x2) + x3",
    "2^x1 * x3",
    "abs(sin(x1)) * log(x2 + x3)",
];

pub fn env(names: &[String], values: &[f64]) -> BTreeMap<String, f64> {
    names.iter().cloned().zip(values.iter().copied()).collect()
}

pub fn value(e: &Expression, names: &[String], point: &[f64]) -> f64 {
    evaluate(e, &env(names, point)).expect("oracle evaluation")
}

fn fd_step(v: f64) -> f64 {
    1e-5 * (v.abs() + 1.0)
}

/// Central differences of `f` at `point`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, point: &[f64]) -> Vec<f64> {
    (0..point.len())
        .map(|i| {
            let h = fd_step(point[i]);
            let mut p = point.to_vec();
            p[i] = point[i] + h;
            let up = f(&p);
            p[i] = point[i] - h;
            let down = f(&p);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central differences of a vector-valued `g`: `out[i][j] = ∂_j g_i`.
pub fn fd_jacobian(g: impl Fn(&[f64]) -> Vec<f64>, point: &[f64]) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<f64>> = (0..point.len())
        .map(|j| {
            let h = fd_step(point[j]);
            let mut p = point.to_vec();
            p[j] = point[j] + h;
            let up = g(&p);
            p[j] = point[j] - h;
            let down = g(&p);
            up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let rows = cols.first().map_or(0, Vec::len);
    (0..rows).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

pub fn names(prefix: char, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// The Poisson tensor of `a` at `(ξ, x)`, assembled from pointwise values of
/// ρ, σ and c; coordinates are ordered `(ξ_1..ξ_m, x^1..x^n)`.
pub fn lambda_oracle(a: &AlgebroidStructure, x: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let (n, m) = (a.n(), a.m());
    let xs = names('x', n);
    let at = |e: &Expression| value(e, &xs, x);
    let mut l = vec![vec![0.0; m + n]; m + n];
    for i in 0..m {
        for j in 0..m {
            l[i][j] = (0..m).map(|k| at(&a.c()[k][i][j]) * xi[k]).sum();
        }
        for b in 0..n {
            l[i][m + b] = at(&a.rho()[b][i]);
            l[m + b][i] = -at(&a.sigma()[b][i]);
        }
    }
    l
}

/// `{f, g}` at `(ξ, x)` with finite-difference differentials; `f` and `g`
/// are expressions in `p1..pm, x1..xn`.
pub fn poisson_oracle(a: &AlgebroidStructure, f: &Expression, g: &Expression, x: &[f64], xi: &[f64]) -> f64 {
    let (n, m) = (a.n(), a.m());
    let mut coords = names('p', m);
    coords.extend(names('x', n));
    let point = [xi, x].concat();
    let df = fd_gradient(|p| value(f, &coords, p), &point);
    let dg = fd_gradient(|p| value(g, &coords, p), &point);
    let l = lambda_oracle(a, x, xi);
    let mut acc = 0.0;
    for r in 0..m + n {
        for c in 0..m + n {
            acc += l[r][c] * df[r] * dg[c];
        }
    }
    acc
}
