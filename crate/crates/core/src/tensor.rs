//! Contravariant 2-tensors whose components are expressions.

use crate::error::{Error, Result};
use crate::expr::{evaluate, evaluate_jet2, Expression};

pub(crate) fn check_len(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape { what: what.to_string(), expected, found })
    }
}

/// A square tensor field `Λ^{AB}` in the coordinates `coords`.
#[derive(Debug, Clone)]
pub(crate) struct TensorField {
    pub coords: Vec<String>,
    pub entries: Vec<Vec<Expression>>,
}

fn scope(coords: &[String], point: &[f64]) -> Vec<(String, f64)> {
    coords.iter().cloned().zip(point.iter().copied()).collect()
}

impl TensorField {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn components(&self, point: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len("tensor point", self.dim(), point.len())?;
        let env = scope(&self.coords, point);
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| evaluate(e, &env).map_err(Error::from)).collect())
            .collect()
    }

    /// `Σ Λ^{AB} ∂_A f ∂_B g`, the first function in the first slot.
    pub fn bracket(&self, f: &Expression, g: &Expression, point: &[f64]) -> Result<f64> {
        check_len("tensor point", self.dim(), point.len())?;
        let env = scope(&self.coords, point);
        let df = evaluate_jet2(f, &env, &self.coords)?;
        let dg = evaluate_jet2(g, &env, &self.coords)?;
        let lam = self.components(point)?;
        let mut acc = 0.0;
        for (a, row) in lam.iter().enumerate() {
            for (b, l) in row.iter().enumerate() {
                acc += l * df.grad()[a] * dg.grad()[b];
            }
        }
        Ok(acc)
    }

    /// Largest `|Σ_D Λ^{DA}∂_D Λ^{BC} + Λ^{DB}∂_D Λ^{CA} + Λ^{DC}∂_D Λ^{AB}|`
    /// over all index triples, with the maximizing triple.
    pub fn jacobiator_max(&self, point: &[f64]) -> Result<(f64, [usize; 3])> {
        check_len("tensor point", self.dim(), point.len())?;
        let n = self.dim();
        let env = scope(&self.coords, point);
        let mut lam = vec![vec![0.0; n]; n];
        // dlam[a][b][d] = ∂_d Λ^{ab}
        let mut dlam = vec![vec![Vec::new(); n]; n];
        for a in 0..n {
            for b in 0..n {
                let e = &self.entries[a][b];
                if e.is_constant_tree() {
                    lam[a][b] = evaluate(e, &env)?;
                    dlam[a][b] = vec![0.0; n];
                } else {
                    let j = evaluate_jet2(e, &env, &self.coords)?;
                    lam[a][b] = j.value();
                    dlam[a][b] = j.grad().to_vec();
                }
            }
        }
        let mut best = (0.0, [0, 0, 0]);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut s = 0.0;
                    for d in 0..n {
                        s += lam[d][a] * dlam[b][c][d]
                            + lam[d][b] * dlam[c][a][d]
                            + lam[d][c] * dlam[a][b][d];
                    }
                    if s.abs() > best.0 {
                        best = (s.abs(), [a, b, c]);
                    }
                }
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn field(coords: &[&str], rows: &[&[&str]]) -> TensorField {
        TensorField {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            entries: rows.iter().map(|r| r.iter().map(|s| parse(s).unwrap()).collect()).collect(),
        }
    }

    #[test]
    fn canonical_symplectic_is_poisson() {
        let t = field(&["q", "p"], &[&["0", "1"], &["-1", "0"]]);
        assert_eq!(t.jacobiator_max(&[0.3, -0.2]).unwrap().0, 0.0);
        let b = t.bracket(&parse("q").unwrap(), &parse("p").unwrap(), &[0.3, 0.1]).unwrap();
        assert_eq!(b, 1.0);
    }

    #[test]
    fn non_poisson_bivector_detected() {
        // Λ = ∂x∧∂y + y ∂y∧∂z: the cyclic sum is Λ^{yx}∂_yΛ^{yz} = -1
        let t = field(&["x", "y", "z"], &[&["0", "1", "0"], &["-1", "0", "y"], &["0", "-y", "0"]]);
        let (j, _) = t.jacobiator_max(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(j, 1.0);
    }
}
