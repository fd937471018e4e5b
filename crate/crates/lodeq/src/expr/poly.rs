//! Exact univariate rational polynomials, used for structural detection
//! (affine and fractional-linear maps, polynomial integrands) and exact
//! antiderivatives.

use super::{Expression, Node};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Dense polynomial over the rationals; `coeffs[k]` multiplies `t^k`.
/// The representation keeps no trailing zeros (zero polynomial is empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RatPoly {
    pub coeffs: Vec<BigRational>,
}

impl RatPoly {
    pub fn zero() -> Self {
        RatPoly { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = RatPoly { coeffs: vec![c] };
        p.trim();
        p
    }

    pub fn one() -> Self {
        RatPoly::constant(BigRational::one())
    }

    pub fn var() -> Self {
        RatPoly {
            coeffs: vec![BigRational::zero(), BigRational::one()],
        }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            coeffs.push(self.coeff(k) + other.coeff(k));
        }
        let mut p = RatPoly { coeffs };
        p.trim();
        p
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let mut p = RatPoly { coeffs };
        p.trim();
        p
    }

    pub fn scale(&self, c: &BigRational) -> RatPoly {
        let mut p = RatPoly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        };
        p.trim();
        p
    }

    pub fn powi(&self, k: usize) -> RatPoly {
        let mut acc = RatPoly::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact term-by-term antiderivative with zero constant term.
    pub fn antiderivative(&self) -> RatPoly {
        let mut coeffs = vec![BigRational::zero()];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / BigRational::from_integer(BigInt::from(k as i64 + 1)));
        }
        let mut p = RatPoly { coeffs };
        p.trim();
        p
    }

    pub fn to_expression(&self) -> Expression {
        let t = Expression::var();
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| Expression::constant(c.clone()) * Expression::powi(t.clone(), k as i64))
            .collect();
        Expression::sum(terms)
    }
}

/// A quotient of rational polynomials (denominator nonzero).
#[derive(Debug, Clone)]
pub(crate) struct RatFraction {
    pub num: RatPoly,
    pub den: RatPoly,
}

impl RatFraction {
    fn poly(p: RatPoly) -> Self {
        RatFraction {
            num: p,
            den: RatPoly::one(),
        }
    }

    fn add(&self, o: &RatFraction) -> RatFraction {
        RatFraction {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
    }

    fn mul(&self, o: &RatFraction) -> RatFraction {
        RatFraction {
            num: self.num.mul(&o.num),
            den: self.den.mul(&o.den),
        }
    }

    fn powi(&self, k: i64) -> Option<RatFraction> {
        let (num, den, k) = if k < 0 {
            if self.num.is_zero() {
                return None;
            }
            (self.den.clone(), self.num.clone(), (-k) as usize)
        } else {
            (self.num.clone(), self.den.clone(), k as usize)
        };
        Some(RatFraction {
            num: num.powi(k),
            den: den.powi(k),
        })
    }
}

/// Interpret an expression as an exact rational function of `t`, if it is one
/// (no elementary functions, no leaves, integer powers only).
pub(crate) fn as_rational_function(e: &Expression) -> Option<RatFraction> {
    match e.node() {
        Node::Const(c) => Some(RatFraction::poly(RatPoly::constant(c.clone()))),
        Node::Var => Some(RatFraction::poly(RatPoly::var())),
        Node::Sum(ts) => {
            let mut acc = RatFraction::poly(RatPoly::zero());
            for t in ts {
                acc = acc.add(&as_rational_function(t)?);
            }
            Some(acc)
        }
        Node::Prod(fs) => {
            let mut acc = RatFraction::poly(RatPoly::one());
            for f in fs {
                acc = acc.mul(&as_rational_function(f)?);
            }
            Some(acc)
        }
        Node::Pow(b, p) => {
            let k = if p.is_integer() {
                p.numer().to_i64()?
            } else {
                return None;
            };
            as_rational_function(b)?.powi(k)
        }
        Node::Div(a, b) => {
            let fa = as_rational_function(a)?;
            let fb = as_rational_function(b)?;
            Some(fa.mul(&fb.powi(-1)?))
        }
        Node::Func(..) | Node::Leaf(_) => None,
    }
}

/// The expression as an exact polynomial, if it is one.
pub(crate) fn as_polynomial(e: &Expression) -> Option<RatPoly> {
    let f = as_rational_function(e)?;
    // division by a constant still counts
    let d = f.den.degree()?;
    if d == 0 {
        let c = f.den.coeff(0);
        Some(f.num.scale(&c.recip()))
    } else {
        None
    }
}

/// The expression as a fractional-linear map `(a t + b) / (c t + d)` with
/// nonzero "determinant" `a d - b c`, if it is one. Returns `(a, b, c, d)`.
pub(crate) fn as_fractional_linear(
    e: &Expression,
) -> Option<(BigRational, BigRational, BigRational, BigRational)> {
    let f = as_rational_function(e)?;
    if f.num.degree().unwrap_or(0) > 1 || f.den.degree()? > 1 {
        return None;
    }
    let a = f.num.coeff(1);
    let b = f.num.coeff(0);
    let c = f.den.coeff(1);
    let d = f.den.coeff(0);
    if (&a * &d - &b * &c).is_zero() {
        return None;
    }
    Some((a, b, c, d))
}

/// Exact rational square root, if the argument is a perfect square.
pub(crate) fn rational_sqrt(c: &BigRational) -> Option<BigRational> {
    if c.is_negative() {
        return None;
    }
    if c.is_zero() {
        return Some(BigRational::zero());
    }
    let ns = c.numer().sqrt();
    let ds = c.denom().sqrt();
    if &(&ns * &ns) == c.numer() && &(&ds * &ds) == c.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Expression {
        Expression::var()
    }

    #[test]
    fn polynomial_extraction() {
        let e = (t() + Expression::one()) * (t() - Expression::one());
        let p = as_polynomial(&e).unwrap();
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.coeff(0), crate::expr::rat_i64(-1, 1));
        assert_eq!(p.coeff(1), BigRational::zero());
        assert_eq!(p.coeff(2), BigRational::one());
        assert!(as_polynomial(&Expression::sin(t())).is_none());
    }

    #[test]
    fn fractional_linear_extraction() {
        // (2t + 1)/(t + 1)
        let e = (Expression::integer(2) * t() + Expression::one()) / (t() + Expression::one());
        let (a, b, c, d) = as_fractional_linear(&e).unwrap();
        // defined up to scaling: cross-check the determinant and a sample value
        assert!(!(&a * &d - &b * &c).is_zero());
        let at = |x: f64| (2.0 * x + 1.0) / (x + 1.0);
        let a_f = a.to_f64().unwrap();
        let b_f = b.to_f64().unwrap();
        let c_f = c.to_f64().unwrap();
        let d_f = d.to_f64().unwrap();
        for x in [0.0, 1.0, 3.0] {
            let v = (a_f * x + b_f) / (c_f * x + d_f);
            assert!((v - at(x)).abs() < 1e-12);
        }
        // t^2 is not fractional linear, and t/t is degenerate
        assert!(as_fractional_linear(&Expression::powi(t(), 2)).is_none());
    }

    #[test]
    fn rational_sqrt_detects_perfect_squares() {
        assert_eq!(
            rational_sqrt(&crate::expr::rat_i64(9, 4)),
            Some(crate::expr::rat_i64(3, 2))
        );
        assert_eq!(rational_sqrt(&crate::expr::rat_i64(2, 1)), None);
    }
}
