//! Dense polynomials in the sinusoidal coordinate.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::{Field, RealField};

/// Polynomial in η with ascending coefficients. The trailing coefficient of
/// a nonzero polynomial is never an exact zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyEta<F> {
    coeffs: Vec<F>,
}

impl<F: Field> PolyEta<F> {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(F::one())
    }

    pub fn constant(c: F) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// η^n
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![F::zero(); n + 1];
        coeffs[n] = F::one();
        Self { coeffs }
    }

    pub fn from_coeffs(mut coeffs: Vec<F>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<F> {
        self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> F {
        self.coeffs.get(k).cloned().unwrap_or_else(F::zero)
    }

    pub fn scale(&self, c: &F) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    /// Multiplies by η^k.
    pub fn shift_up(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![F::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    /// Leading coefficient is scaled to one.
    pub fn monic(&self) -> Self {
        match self.coeffs.last() {
            Some(lead) => {
                let inv = F::one() / lead.clone();
                self.scale(&inv)
            }
            None => Self::zero(),
        }
    }

    /// Horner evaluation in the coefficient field.
    pub fn eval(&self, eta: &F) -> F {
        self.coeffs
            .iter()
            .rev()
            .fold(F::zero(), |acc, c| acc * eta.clone() + c.clone())
    }
}

impl<R: RealField> PolyEta<R> {
    /// Evaluates at a value of η in another field (typically complex).
    pub fn eval_in<C: Field>(&self, eta: &C) -> C {
        self.coeffs
            .iter()
            .rev()
            .fold(C::zero(), |acc, c| acc * eta.clone() + c.lift::<C>())
    }

    pub fn to_f64(&self) -> PolyEta<f64> {
        PolyEta::from_coeffs(self.coeffs.iter().map(|c| c.to_f64()).collect())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }
}

impl<F: Field> Add for &PolyEta<F> {
    type Output = PolyEta<F>;
    fn add(self, rhs: Self) -> PolyEta<F> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        PolyEta::from_coeffs((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<F: Field> Sub for &PolyEta<F> {
    type Output = PolyEta<F>;
    fn sub(self, rhs: Self) -> PolyEta<F> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        PolyEta::from_coeffs((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<F: Field> Mul for &PolyEta<F> {
    type Output = PolyEta<F>;
    fn mul(self, rhs: Self) -> PolyEta<F> {
        if self.is_zero() || rhs.is_zero() {
            return PolyEta::zero();
        }
        let mut out = vec![F::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        PolyEta::from_coeffs(out)
    }
}

impl<F: Field> Neg for &PolyEta<F> {
    type Output = PolyEta<F>;
    fn neg(self) -> PolyEta<F> {
        PolyEta::from_coeffs(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> PolyEta<Rational> {
        PolyEta::from_coeffs(c.iter().map(|&x| <Rational as Field>::from_i64(x)).collect())
    }

    #[test]
    fn zero_polynomial_has_no_degree() {
        assert_eq!(PolyEta::<f64>::zero().degree(), None);
        assert_eq!(p(&[1, 0, 0]).degree(), Some(0));
    }

    #[test]
    fn product_of_linears() {
        // (1 + η)(1 - η) = 1 - η²
        assert_eq!(&p(&[1, 1]) * &p(&[1, -1]), p(&[1, 0, -1]));
    }

    proptest! {
        #[test]
        fn evaluation_is_a_ring_homomorphism(
            a in prop::collection::vec(-5i64..5, 0..5),
            b in prop::collection::vec(-5i64..5, 0..5),
            x in -4i64..4,
        ) {
            let (pa, pb) = (p(&a), p(&b));
            let xr = <Rational as Field>::from_i64(x);
            prop_assert_eq!((&pa * &pb).eval(&xr), pa.eval(&xr) * pb.eval(&xr));
            prop_assert_eq!((&pa - &pb).eval(&xr), pa.eval(&xr) - pb.eval(&xr));
        }
    }
}
