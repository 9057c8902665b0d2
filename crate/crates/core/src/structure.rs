//! Pointwise structure data shared by algebroids and affgebroids.
//!
//! An algebroid is treated as an affgebroid whose affine parts (`ρ_0`,
//! `c^m_{0j}`, `c^k_{0j}`, `c^m_{ij}`) vanish. Both evaluate into the same
//! [`PointStructure`] and every dynamical formula runs on that, so the two
//! routes perform identical floating point operations.

use crate::affgebroid::AffgebroidStructure;
use crate::algebroid::{AlgebroidStructure, Classification};
use crate::error::Result;

/// Structure functions evaluated at one base point. `d` is the number of
/// fiber coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStructure {
    /// `ρ^b_0`, length `n`
    pub rho0: Vec<f64>,
    /// `ρ^b_k`, `n × d`
    pub rho: Vec<Vec<f64>>,
    /// `σ^a_j`, `n × d`
    pub sigma: Vec<Vec<f64>>,
    /// `c^m_{0j}`, length `d`
    pub cm0: Vec<f64>,
    /// `c^k_{0j}` indexed `[k][j]`
    pub ck0: Vec<Vec<f64>>,
    /// `c^m_{ij}` indexed `[i][j]`
    pub cm: Vec<Vec<f64>>,
    /// `c^k_{ij}` indexed `[k][i][j]`
    pub ck: Vec<Vec<Vec<f64>>>,
}

impl PointStructure {
    pub fn n(&self) -> usize {
        self.rho0.len()
    }

    pub fn d(&self) -> usize {
        self.cm0.len()
    }

    /// `ẋ^b = ρ^b_0 + Σ_k ρ^b_k y^k`.
    pub fn anchor(&self, y: &[f64]) -> Vec<f64> {
        self.rho
            .iter()
            .zip(&self.rho0)
            .map(|(row, r0)| {
                let mut s = *r0;
                for (r, v) in row.iter().zip(y) {
                    s += r * v;
                }
                s
            })
            .collect()
    }

    /// `ξ̇_j = c^m_{0j} + Σ_i c^m_{ij} y^i + Σ_k ξ_k (c^k_{0j} + Σ_i c^k_{ij} y^i) + Σ_a σ^a_j p_a`.
    pub fn fiber_map(&self, y: &[f64], xi: &[f64], p: &[f64]) -> Vec<f64> {
        let d = self.d();
        (0..d)
            .map(|j| {
                let mut s = self.cm0[j];
                for i in 0..d {
                    s += self.cm[i][j] * y[i];
                }
                for k in 0..d {
                    let mut coeff = self.ck0[k][j];
                    for i in 0..d {
                        coeff += self.ck[k][i][j] * y[i];
                    }
                    s += xi[k] * coeff;
                }
                for (a, pa) in p.iter().enumerate() {
                    s += self.sigma[a][j] * pa;
                }
                s
            })
            .collect()
    }
}

/// Either kind of structure, as consumed by the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Algebroid(AlgebroidStructure),
    Affgebroid(AffgebroidStructure),
}

impl Structure {
    pub fn n(&self) -> usize {
        match self {
            Structure::Algebroid(a) => a.n(),
            Structure::Affgebroid(s) => s.n(),
        }
    }

    /// Number of fiber coordinates: `m` for an algebroid, `m - 1` for an
    /// affgebroid.
    pub fn fiber_dim(&self) -> usize {
        match self {
            Structure::Algebroid(a) => a.m(),
            Structure::Affgebroid(s) => s.m() - 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Structure::Algebroid(_) => "algebroid",
            Structure::Affgebroid(_) => "affgebroid",
        }
    }

    pub fn values_at(&self, x: &[f64]) -> Result<PointStructure> {
        match self {
            Structure::Algebroid(a) => a.values_at(x),
            Structure::Affgebroid(s) => s.values_at(x),
        }
    }

    /// Lie classification; affgebroids go through their vector hull.
    pub fn classify(&self, samples: usize, seed: u64, tol: f64) -> Result<Classification> {
        match self {
            Structure::Algebroid(a) => crate::algebroid::classify(a, samples, seed, tol),
            Structure::Affgebroid(s) => crate::affgebroid::classify_aff(s, samples, seed, tol),
        }
    }
}

impl From<AlgebroidStructure> for Structure {
    fn from(a: AlgebroidStructure) -> Self {
        Structure::Algebroid(a)
    }
}

impl From<AffgebroidStructure> for Structure {
    fn from(s: AffgebroidStructure) -> Self {
        Structure::Affgebroid(s)
    }
}
