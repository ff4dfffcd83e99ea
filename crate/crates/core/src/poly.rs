//! Dense real polynomials, coefficients in ascending order.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `(x - root)`
    pub fn linear_factor(root: f64) -> Self {
        Poly(vec![-root, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// Synthetic division by `(x - root)`: returns (quotient, remainder).
    pub fn deflate(&self, root: f64) -> (Poly, f64) {
        let n = self.0.len();
        if n <= 1 {
            return (Poly(vec![0.0]), self.0.first().copied().unwrap_or(0.0));
        }
        let mut q = vec![0.0; n - 1];
        let mut carry = self.0[n - 1];
        for j in (0..n - 1).rev() {
            q[j] = carry;
            carry = self.0[j] + carry * root;
        }
        (Poly(q), carry)
    }

    /// Division by `x`, discarding the constant term (returned separately).
    pub fn div_x(&self) -> (Poly, f64) {
        if self.0.len() <= 1 {
            return (Poly(vec![0.0]), self.0.first().copied().unwrap_or(0.0));
        }
        (Poly(self.0[1..].to_vec()), self.0[0])
    }

    /// `(1 + x)^m`
    pub fn one_plus_x_pow(m: u32) -> Poly {
        let mut out = Poly(vec![1.0]);
        for _ in 0..m {
            out = &out * &Poly(vec![1.0, 1.0]);
        }
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly(
            (0..n)
                .map(|j| self.0.get(j).copied().unwrap_or(0.0) + rhs.0.get(j).copied().unwrap_or(0.0))
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deflation_recovers_factor() {
        // (x-2)(x-3)(x+1) = x^3 - 4x^2 + x + 6
        let p = Poly(vec![6.0, 1.0, -4.0, 1.0]);
        let (q, r) = p.deflate(2.0);
        assert!(r.abs() < 1e-14);
        assert_eq!(q, Poly(vec![-3.0, -2.0, 1.0]));
        let (_, r) = p.deflate(5.0);
        assert!((r - p.eval(5.0)).abs() < 1e-12);
    }

    #[test]
    fn binomial_and_derivative() {
        let p = Poly::one_plus_x_pow(3);
        assert_eq!(p, Poly(vec![1.0, 3.0, 3.0, 1.0]));
        assert_eq!(p.derivative(), Poly(vec![3.0, 6.0, 3.0]));
        assert_eq!((&p - &p).eval(1.7), 0.0);
    }
}
