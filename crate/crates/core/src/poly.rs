//! Dense real polynomials in the moment coordinate.

use serde::{Deserialize, Serialize};

/// Polynomial with coefficients stored constant term first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64)
            .collect();
        Polynomial { coeffs }
    }

    /// Coefficient-wise `(1 - t) * a + t * b`, zero-padding the shorter input.
    pub fn lerp(a: &Polynomial, b: &Polynomial, t: f64) -> Polynomial {
        let len = a.coeffs.len().max(b.coeffs.len());
        let coeffs = (0..len)
            .map(|i| {
                let ca = a.coeffs.get(i).copied().unwrap_or(0.0);
                let cb = b.coeffs.get(i).copied().unwrap_or(0.0);
                (1.0 - t) * ca + t * cb
            })
            .collect();
        Polynomial { coeffs }
    }

    /// `a - b`, zero-padded.
    pub fn sub(a: &Polynomial, b: &Polynomial) -> Polynomial {
        let len = a.coeffs.len().max(b.coeffs.len());
        let coeffs = (0..len)
            .map(|i| a.coeffs.get(i).copied().unwrap_or(0.0) - b.coeffs.get(i).copied().unwrap_or(0.0))
            .collect();
        Polynomial { coeffs }
    }

    /// Upper bound for `|p(x)|` on `[0, 1]`.
    pub fn abs_bound_unit(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}
