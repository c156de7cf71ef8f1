use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Mat, Vector};

/// One monomial `coeff * prod z_j^{exponents_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

impl Term {
    fn eval(&self, z: &Vector) -> f64 {
        self.exponents.iter().zip(z.iter()).fold(self.coeff, |acc, (&e, &x)| acc * x.powi(e as i32))
    }

    /// `d/dz_j` of the monomial.
    fn derivative(&self, j: usize) -> Option<Term> {
        let e = self.exponents[j];
        if e == 0 || self.coeff == 0.0 {
            return None;
        }
        let mut exponents = self.exponents.clone();
        exponents[j] -= 1;
        Some(Term { coeff: self.coeff * e as f64, exponents })
    }
}

/// A polynomial vector map `R^in -> R^out`, one list of terms per output.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMap {
    in_dim: usize,
    components: Vec<Vec<Term>>,
}

impl PolynomialMap {
    pub fn new(in_dim: usize, components: Vec<Vec<Term>>) -> Result<Self> {
        for (i, comp) in components.iter().enumerate() {
            for t in comp {
                if t.exponents.len() != in_dim {
                    return Err(Error::InvalidInput(format!(
                        "component {i}: term has {} exponents, expected {in_dim}",
                        t.exponents.len()
                    )));
                }
                if !t.coeff.is_finite() {
                    return Err(Error::InvalidInput(format!("component {i}: non-finite coefficient")));
                }
            }
        }
        Ok(Self { in_dim, components })
    }

    /// The affine map `z -> a z + c`.
    pub fn affine(a: &Mat, c: &Vector) -> Self {
        let n = a.ncols();
        let components = (0..a.nrows())
            .map(|i| {
                let mut terms: Vec<Term> = (0..n)
                    .filter(|&j| a[(i, j)] != 0.0)
                    .map(|j| {
                        let mut exponents = vec![0; n];
                        exponents[j] = 1;
                        Term { coeff: a[(i, j)], exponents }
                    })
                    .collect();
                if c[i] != 0.0 {
                    terms.push(Term { coeff: c[i], exponents: vec![0; n] });
                }
                terms
            })
            .collect();
        Self { in_dim: n, components }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<Term>] {
        &self.components
    }

    pub fn eval(&self, z: &Vector) -> Result<Vector> {
        check_dim(self.in_dim, z.len())?;
        Ok(Vector::from_iterator(self.out_dim(), self.components.iter().map(|c| c.iter().map(|t| t.eval(z)).sum())))
    }

    pub fn jacobian(&self, z: &Vector) -> Result<Mat> {
        check_dim(self.in_dim, z.len())?;
        let mut jac = Mat::zeros(self.out_dim(), self.in_dim);
        for (i, comp) in self.components.iter().enumerate() {
            for t in comp {
                for j in 0..self.in_dim {
                    if let Some(d) = t.derivative(j) {
                        jac[(i, j)] += d.eval(z);
                    }
                }
            }
        }
        Ok(jac)
    }

    /// Hessian of output `i`.
    pub fn hessian(&self, i: usize, z: &Vector) -> Result<Mat> {
        check_dim(self.in_dim, z.len())?;
        let n = self.in_dim;
        let mut h = Mat::zeros(n, n);
        for t in &self.components[i] {
            for j in 0..n {
                let Some(dj) = t.derivative(j) else { continue };
                for k in j..n {
                    if let Some(djk) = dj.derivative(k) {
                        let v = djk.eval(z);
                        h[(j, k)] += v;
                        if k != j {
                            h[(k, j)] += v;
                        }
                    }
                }
            }
        }
        Ok(h)
    }

    /// `sum_i w_i hess_i(z)`.
    pub fn weighted_hessian(&self, w: &Vector, z: &Vector) -> Result<Mat> {
        check_dim(self.out_dim(), w.len())?;
        let mut h = Mat::zeros(self.in_dim, self.in_dim);
        for i in 0..self.out_dim() {
            if w[i] != 0.0 {
                h += self.hessian(i, z)? * w[i];
            }
        }
        Ok(h)
    }

    /// True when every term has total degree at most one.
    pub fn is_affine(&self) -> bool {
        self.components.iter().flatten().all(|t| t.exponents.iter().sum::<u32>() <= 1)
    }
}

impl Serialize for PolynomialMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.components.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn quad() -> PolynomialMap {
        // (y1, y2, y3 + 0.2 (y1^2 + y2^2))
        let t = |c: f64, e: [u32; 3]| Term { coeff: c, exponents: e.to_vec() };
        PolynomialMap::new(
            3,
            vec![
                vec![t(1.0, [1, 0, 0])],
                vec![t(1.0, [0, 1, 0])],
                vec![t(1.0, [0, 0, 1]), t(0.2, [2, 0, 0]), t(0.2, [0, 2, 0])],
            ],
        )
        .unwrap()
    }

    #[test]
    fn evaluates_and_differentiates() {
        let g = quad();
        let y = vector(&[1.0, -2.0, 0.5]);
        assert_eq!(g.eval(&y).unwrap(), vector(&[1.0, -2.0, 0.5 + 0.2 * 5.0]));
        let j = g.jacobian(&y).unwrap();
        assert_eq!(j.row(2).transpose(), vector(&[0.4, -0.8, 1.0]));
        let h = g.hessian(2, &y).unwrap();
        assert_eq!(h, Mat::from_diagonal(&vector(&[0.4, 0.4, 0.0])));
        let wh = g.weighted_hessian(&vector(&[1.0, 0.0, -1.0]), &y).unwrap();
        assert_eq!(wh, Mat::from_diagonal(&vector(&[-0.4, -0.4, 0.0])));
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let t = |c: f64, e: [u32; 2]| Term { coeff: c, exponents: e.to_vec() };
        let p = PolynomialMap::new(2, vec![vec![t(1.5, [3, 1]), t(-2.0, [0, 2])], vec![t(0.7, [1, 4])]]).unwrap();
        let z = vector(&[0.3, -1.2]);
        let j = p.jacobian(&z).unwrap();
        let eps = 1e-6;
        for c in 0..2 {
            let mut e = Vector::zeros(2);
            e[c] = eps;
            let fd = (p.eval(&(&z + &e)).unwrap() - p.eval(&(&z - &e)).unwrap()) / (2.0 * eps);
            assert!((j.column(c) - fd).norm() < 1e-8);
        }
        for i in 0..2 {
            let h = p.hessian(i, &z).unwrap();
            assert_eq!(h, h.transpose());
        }
    }

    #[test]
    fn rejects_wrong_arity() {
        let bad = vec![vec![Term { coeff: 1.0, exponents: vec![1] }]];
        assert!(PolynomialMap::new(2, bad).is_err());
    }

    #[test]
    fn affine_roundtrip() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -1.0]);
        let c = vector(&[0.5, 0.0]);
        let p = PolynomialMap::affine(&a, &c);
        assert!(p.is_affine());
        assert_eq!(p.eval(&vector(&[1.0, 1.0])).unwrap(), vector(&[3.5, -1.0]));
        assert_eq!(p.jacobian(&Vector::zeros(2)).unwrap(), a);
    }
}
