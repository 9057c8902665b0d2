/// Second-order truncated Taylor value: value, gradient and Hessian with
/// respect to `dim()` seeded variables.
///
/// The Hessian is stored as the packed upper triangle, so it is symmetric by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

impl Jet2 {
    pub fn constant(dim: usize, value: f64) -> Self {
        Jet2 { value, grad: vec![0.0; dim], hess: vec![0.0; packed_len(dim)] }
    }

    /// The seeded variable with index `index`.
    pub fn variable(dim: usize, value: f64, index: usize) -> Self {
        let mut j = Jet2::constant(dim, value);
        j.grad[index] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// Second derivative with respect to seeds `i` and `j`.
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[Self::index(self.dim(), i, j)]
    }

    /// The full symmetric Hessian as rows.
    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.hess(i, j)).collect()).collect()
    }

    #[inline]
    fn index(d: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // rows 0..i hold d, d-1, ..., d-i+1 entries
        i * d - (i * i - i) / 2 + (j - i)
    }

    pub(crate) fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a + b).collect(),
        }
    }

    pub(crate) fn sub(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a - b).collect(),
        }
    }

    pub(crate) fn neg(&self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|a| -a).collect(),
            hess: self.hess.iter().map(|a| -a).collect(),
        }
    }

    pub(crate) fn mul(&self, o: &Jet2) -> Jet2 {
        let d = self.dim();
        let (a, b) = (self.value, o.value);
        let grad = self.grad.iter().zip(&o.grad).map(|(ga, gb)| a * gb + b * ga).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..d {
            for j in i..d {
                let k = hess.len();
                hess.push(
                    a * o.hess[k]
                        + b * self.hess[k]
                        + self.grad[i] * o.grad[j]
                        + o.grad[i] * self.grad[j],
                );
            }
        }
        Jet2 { value: a * b, grad, hess }
    }

    pub(crate) fn div(&self, o: &Jet2) -> Jet2 {
        // q = a / b  =>  a = q b, solved for the derivatives of q
        let d = self.dim();
        let b = o.value;
        let q = self.value / b;
        let grad: Vec<f64> =
            self.grad.iter().zip(&o.grad).map(|(ga, gb)| (ga - q * gb) / b).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..d {
            for j in i..d {
                let k = hess.len();
                hess.push(
                    (self.hess[k] - q * o.hess[k] - grad[i] * o.grad[j] - o.grad[i] * grad[j]) / b,
                );
            }
        }
        Jet2 { value: q, grad, hess }
    }

    /// Composition f(self) given f(u), f'(u), f''(u) at u = self.value().
    pub(crate) fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let d = self.dim();
        let grad = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..d {
            for j in i..d {
                let k = hess.len();
                hess.push(f1 * self.hess[k] + f2 * self.grad[i] * self.grad[j]);
            }
        }
        Jet2 { value: f0, grad, hess }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_indices_cover_upper_triangle() {
        for d in 0..6 {
            let mut seen = vec![false; packed_len(d)];
            let mut expect = 0;
            for i in 0..d {
                for j in i..d {
                    let k = Jet2::index(d, i, j);
                    assert_eq!(k, expect);
                    assert_eq!(k, Jet2::index(d, j, i));
                    seen[k] = true;
                    expect += 1;
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn product_rule() {
        let x = Jet2::variable(2, 2.0, 0);
        let y = Jet2::variable(2, 5.0, 1);
        let p = x.mul(&y);
        assert_eq!(p.value(), 10.0);
        assert_eq!(p.grad(), &[5.0, 2.0]);
        assert_eq!(p.hessian(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn quotient_rule() {
        let x = Jet2::variable(1, 2.0, 0);
        let one = Jet2::constant(1, 1.0);
        let r = one.div(&x);
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.grad(), &[-0.25]);
        assert_eq!(r.hess(0, 0), 0.25);
    }
}
