//! Small dense LU factorization with partial pivoting.
//!
//! The systems solved here are Hessians of Lagrangians in the fiber
//! variables, so `d` is small and everything is kept in row-major `Vec`s.

/// LU factors `P A = L U`, with `L` unit lower triangular stored below the
/// diagonal of `lu`.
#[derive(Debug, Clone)]
pub struct Lu {
    d: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    norm1: f64,
}

/// 1-norm of a square matrix given as rows.
pub fn norm1(rows: &[Vec<f64>]) -> f64 {
    let d = rows.len();
    (0..d).map(|j| rows.iter().map(|r| r[j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

impl Lu {
    /// Factors `a`. Returns `None` when a pivot is exactly zero or not finite.
    pub fn factor(a: &[Vec<f64>]) -> Option<Lu> {
        let d = a.len();
        let mut lu: Vec<f64> = a.iter().flat_map(|r| r.iter().copied()).collect();
        debug_assert_eq!(lu.len(), d * d);
        let mut perm: Vec<usize> = (0..d).collect();
        for col in 0..d {
            let pivot_row = (col..d)
                .max_by(|&r, &s| lu[r * d + col].abs().total_cmp(&lu[s * d + col].abs()))?;
            let pivot = lu[pivot_row * d + col];
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            if pivot_row != col {
                for j in 0..d {
                    lu.swap(col * d + j, pivot_row * d + j);
                }
                perm.swap(col, pivot_row);
            }
            for r in col + 1..d {
                let factor = lu[r * d + col] / pivot;
                lu[r * d + col] = factor;
                for j in col + 1..d {
                    lu[r * d + j] -= factor * lu[col * d + j];
                }
            }
        }
        Some(Lu { d, lu, perm, norm1: norm1(a) })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..d {
            for j in 0..i {
                x[i] -= self.lu[i * d + j] * x[j];
            }
        }
        for i in (0..d).rev() {
            for j in i + 1..d {
                x[i] -= self.lu[i * d + j] * x[j];
            }
            x[i] /= self.lu[i * d + i];
        }
        x
    }

    /// The inverse, column by column from the factors.
    pub fn inverse(&self) -> Vec<Vec<f64>> {
        let d = self.d;
        let mut inv = vec![vec![0.0; d]; d];
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..d {
                inv[i][j] = col[i];
            }
        }
        inv
    }

    /// 1-norm condition number ‖A‖₁‖A⁻¹‖₁. Computed exactly from the
    /// factors, which is affordable at these sizes.
    pub fn condition(&self) -> f64 {
        if self.d == 0 {
            return 1.0;
        }
        self.norm1 * norm1(&self.inverse())
    }
}
