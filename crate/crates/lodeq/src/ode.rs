//! Monic linear ODEs `x^(r) + a_{r-1} x^(r-1) + ... + a_0 x = b` and their
//! canonical-form predicates.

use crate::error::{Error, ErrorCode, Result};
use crate::expr::{equiv_numeric, Expression};
use crate::interval::Interval;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Canonical-form tags. `L` is the whole class; `L1` requires
/// `a_{r-1} = 0` (rational form); `L2` additionally `a_{r-2} = 0`
/// (Laguerre-Forsyth form); `A1` requires `a_0 = 0` (first Arnold form);
/// `A2` additionally `a_1 = 0` (second Arnold form, order >= 3 only, since
/// at order 2 it coincides with `L2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClassTag {
    L,
    L1,
    L2,
    A1,
    A2,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassTag::L => "L",
            ClassTag::L1 => "L1",
            ClassTag::L2 => "L2",
            ClassTag::A1 => "A1",
            ClassTag::A2 => "A2",
        };
        f.write_str(s)
    }
}

impl FromStr for ClassTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" => Ok(ClassTag::L),
            "L1" => Ok(ClassTag::L1),
            "L2" => Ok(ClassTag::L2),
            "A1" => Ok(ClassTag::A1),
            "A2" => Ok(ClassTag::A2),
            _ => Err(Error::new(
                ErrorCode::Usage,
                format!("unknown class tag '{s}' (expected L, L1, L2, A1 or A2)"),
            )),
        }
    }
}

/// The set of canonical forms an equation belongs to, plus homogeneity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormSet {
    pub tags: BTreeSet<ClassTag>,
    pub homogeneous: bool,
}

impl fmt::Display for FormSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for tag in &self.tags {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{tag}")?;
            first = false;
        }
        if self.homogeneous {
            write!(f, ",homogeneous")?;
        }
        Ok(())
    }
}

/// A monic linear ODE of order `r >= 2` with smooth coefficients on a
/// validity interval. Coefficients are stored lowest order first:
/// `coeffs[m]` multiplies `x^(m)`.
#[derive(Debug, Clone)]
pub struct LinearOde {
    order: usize,
    coeffs: Vec<Expression>,
    rhs: Expression,
    interval: Interval,
}

impl LinearOde {
    pub fn new(
        order: usize,
        coeffs: Vec<Expression>,
        rhs: Expression,
        interval: Interval,
    ) -> Result<Self> {
        if order < 2 {
            return Err(Error::new(
                ErrorCode::OrderTooLow,
                format!("order must be at least 2, got {order}"),
            ));
        }
        if coeffs.len() != order {
            return Err(Error::new(
                ErrorCode::CoefficientCount,
                format!(
                    "expected {} coefficients a0..a{}, got {}",
                    order,
                    order - 1,
                    coeffs.len()
                ),
            ));
        }
        let mid = interval.midpoint();
        for (m, c) in coeffs.iter().enumerate() {
            c.evaluate(mid).map_err(|e| {
                Error::new(
                    ErrorCode::Unevaluable,
                    format!("coefficient a{m} not evaluable at interval midpoint: {e}"),
                )
            })?;
        }
        rhs.evaluate(mid).map_err(|e| {
            Error::new(
                ErrorCode::Unevaluable,
                format!("right-hand side not evaluable at interval midpoint: {e}"),
            )
        })?;
        Ok(LinearOde {
            order,
            coeffs,
            rhs,
            interval,
        })
    }

    /// The elementary equation `x^(r) = 0`.
    pub fn elementary(order: usize, interval: Interval) -> Result<Self> {
        LinearOde::new(
            order,
            vec![Expression::zero(); order],
            Expression::zero(),
            interval,
        )
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `x^(m)`, `m < r`.
    pub fn coeff(&self, m: usize) -> &Expression {
        &self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[Expression] {
        &self.coeffs
    }

    pub fn rhs(&self) -> &Expression {
        &self.rhs
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    /// Same equation restricted to a subinterval.
    pub fn restricted(&self, interval: Interval) -> Result<LinearOde> {
        LinearOde::new(self.order, self.coeffs.clone(), self.rhs.clone(), interval)
    }

    /// The associated homogeneous equation (right-hand side zero).
    pub fn homogeneous_part(&self) -> LinearOde {
        LinearOde {
            order: self.order,
            coeffs: self.coeffs.clone(),
            rhs: Expression::zero(),
            interval: self.interval,
        }
    }

    pub fn is_homogeneous(&self, tol: f64) -> bool {
        coeff_is_zero(&self.rhs, &self.interval, tol)
    }

    /// `x^(r) + sum a_m(t0) x^(m) - b(t0)` for a jet `(x, x', ..., x^(r))`.
    pub fn residual(&self, jet: &[f64], t0: f64) -> Result<f64> {
        if jet.len() != self.order + 1 {
            return Err(Error::new(
                ErrorCode::Usage,
                format!(
                    "residual needs a jet of length r + 1 = {}, got {}",
                    self.order + 1,
                    jet.len()
                ),
            ));
        }
        let mut acc = jet[self.order];
        for (m, c) in self.coeffs.iter().enumerate() {
            acc += c.evaluate(t0)? * jet[m];
        }
        Ok(acc - self.rhs.evaluate(t0)?)
    }

    /// Every canonical-form tag whose defining coefficient constraints hold
    /// numerically at tolerance `tol`, plus the homogeneous flag.
    pub fn form_of(&self, tol: f64) -> FormSet {
        let r = self.order;
        let zero = |m: usize| coeff_is_zero(&self.coeffs[m], &self.interval, tol);
        let mut tags = BTreeSet::new();
        tags.insert(ClassTag::L);
        let l1 = zero(r - 1);
        if l1 {
            tags.insert(ClassTag::L1);
            if zero(r - 2) {
                tags.insert(ClassTag::L2);
            }
        }
        let a1 = zero(0);
        if a1 {
            tags.insert(ClassTag::A1);
            if r >= 3 && zero(1) {
                tags.insert(ClassTag::A2);
            }
        }
        FormSet {
            tags,
            homogeneous: self.is_homogeneous(tol),
        }
    }
}

/// Structural zero when available, numeric zero test otherwise. Evaluation
/// failures count as "not zero".
pub(crate) fn coeff_is_zero(e: &Expression, interval: &Interval, tol: f64) -> bool {
    if e.is_zero() {
        return true;
    }
    equiv_numeric(e, &Expression::zero(), interval, 50, tol).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Expression {
        Expression::var()
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn validates_shape() {
        assert!(LinearOde::new(
            1,
            vec![Expression::zero()],
            Expression::zero(),
            iv(0.0, 1.0)
        )
        .is_err());
        assert!(LinearOde::new(
            3,
            vec![Expression::zero(); 2],
            Expression::zero(),
            iv(0.0, 1.0)
        )
        .is_err());
        // coefficient singular at the midpoint is rejected
        assert!(LinearOde::new(
            2,
            vec![Expression::powi(t(), -1), Expression::zero()],
            Expression::zero(),
            iv(-1.0, 1.0),
        )
        .is_err());
    }

    #[test]
    fn residual_values() {
        let e3 = LinearOde::elementary(3, iv(-1.0, 1.0)).unwrap();
        assert_eq!(e3.residual(&[1.0, 0.0, 0.0, 0.0], 0.2).unwrap(), 0.0);

        // x'' + x = 0 at the sin jet
        let sho = LinearOde::new(
            2,
            vec![Expression::one(), Expression::zero()],
            Expression::zero(),
            iv(-1.0, 1.0),
        )
        .unwrap();
        assert_eq!(sho.residual(&[0.0, 1.0, 0.0], 0.0).unwrap(), 0.0);

        // x'' + x = 1 at the zero jet
        let inhom = LinearOde::new(
            2,
            vec![Expression::one(), Expression::zero()],
            Expression::one(),
            iv(-1.0, 1.0),
        )
        .unwrap();
        assert_eq!(inhom.residual(&[0.0, 0.0, 0.0], 0.0).unwrap(), -1.0);
    }

    #[test]
    fn form_tags() {
        let e3 = LinearOde::elementary(3, iv(-1.0, 1.0)).unwrap();
        let f = e3.form_of(1e-9);
        assert!(f.homogeneous);
        assert_eq!(
            f.tags.iter().copied().collect::<Vec<_>>(),
            vec![
                ClassTag::L,
                ClassTag::L1,
                ClassTag::L2,
                ClassTag::A1,
                ClassTag::A2
            ]
        );

        // Euler-family member x''' + t^-3 x = 0 on [1, 2]
        let euler = LinearOde::new(
            3,
            vec![
                Expression::powi(t(), -3),
                Expression::zero(),
                Expression::zero(),
            ],
            Expression::zero(),
            iv(1.0, 2.0),
        )
        .unwrap();
        let f = euler.form_of(1e-9);
        assert!(f.homogeneous);
        assert_eq!(
            f.tags.iter().copied().collect::<Vec<_>>(),
            vec![ClassTag::L, ClassTag::L1, ClassTag::L2]
        );

        // x''' + x'' = 0
        let drift = LinearOde::new(
            3,
            vec![Expression::zero(), Expression::zero(), Expression::one()],
            Expression::zero(),
            iv(-1.0, 1.0),
        )
        .unwrap();
        let f = drift.form_of(1e-9);
        assert_eq!(
            f.tags.iter().copied().collect::<Vec<_>>(),
            vec![ClassTag::L, ClassTag::A1, ClassTag::A2]
        );
    }

    #[test]
    fn tag_lattice_is_monotone() {
        let cases = vec![
            LinearOde::elementary(4, iv(0.0, 1.0)).unwrap(),
            LinearOde::new(
                3,
                vec![t(), Expression::zero(), Expression::one()],
                Expression::zero(),
                iv(0.0, 1.0),
            )
            .unwrap(),
        ];
        for ode in cases {
            let f = ode.form_of(1e-9);
            if f.tags.contains(&ClassTag::L2) {
                assert!(f.tags.contains(&ClassTag::L1));
            }
            if f.tags.contains(&ClassTag::A2) {
                assert!(f.tags.contains(&ClassTag::A1));
            }
            assert!(f.tags.contains(&ClassTag::L));
        }
    }
}
