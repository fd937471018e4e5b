//! Floating-point evaluation and the numeric equivalence oracle.

use super::{Expression, Func, Node};
use crate::error::{Error, ErrorCode, Result};
use crate::interval::Interval;
use num_traits::ToPrimitive;

fn singular(msg: impl Into<String>) -> Error {
    Error::new(ErrorCode::SingularEvaluation, msg)
}

fn finite(v: f64, what: &str, t: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(singular(format!("{what} is not finite at t = {t}")))
    }
}

pub(crate) fn evaluate(e: &Expression, t: f64) -> Result<f64> {
    match e.node() {
        Node::Const(c) => c
            .to_f64()
            .ok_or_else(|| singular("rational constant overflows f64")),
        Node::Var => Ok(t),
        Node::Sum(ts) => {
            let mut acc = 0.0;
            for x in ts {
                acc += evaluate(x, t)?;
            }
            finite(acc, "sum", t)
        }
        Node::Prod(fs) => {
            let mut acc = 1.0;
            for x in fs {
                acc *= evaluate(x, t)?;
            }
            finite(acc, "product", t)
        }
        Node::Div(a, b) => {
            let vb = evaluate(b, t)?;
            if vb == 0.0 {
                return Err(singular(format!("division by zero at t = {t}")));
            }
            finite(evaluate(a, t)? / vb, "quotient", t)
        }
        Node::Pow(b, p) => {
            let vb = evaluate(b, t)?;
            let v = if p.is_integer() {
                let k = p
                    .numer()
                    .to_i32()
                    .ok_or_else(|| singular("power exponent overflows i32"))?;
                if vb == 0.0 && k < 0 {
                    return Err(singular(format!(
                        "zero base with negative power at t = {t}"
                    )));
                }
                vb.powi(k)
            } else {
                let pf = p
                    .to_f64()
                    .ok_or_else(|| singular("power exponent overflows f64"))?;
                if vb < 0.0 {
                    return Err(singular(format!(
                        "negative base {vb} with non-integer power at t = {t}"
                    )));
                }
                if vb == 0.0 && pf < 0.0 {
                    return Err(singular(format!(
                        "zero base with negative power at t = {t}"
                    )));
                }
                vb.powf(pf)
            };
            finite(v, "power", t)
        }
        Node::Func(f, a) => {
            let v = evaluate(a, t)?;
            let w = match f {
                Func::Exp => v.exp(),
                Func::Ln => {
                    if v <= 0.0 {
                        return Err(singular(format!("ln of nonpositive value {v} at t = {t}")));
                    }
                    v.ln()
                }
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Tan => v.tan(),
                Func::Atan => v.atan(),
                Func::Abs => v.abs(),
            };
            finite(w, f.name(), t)
        }
        Node::Leaf(l) => l.leaf.eval(t, l.deriv),
    }
}

/// Deterministic numeric equivalence on `n >= 8` Chebyshev samples:
/// `|e1(ti) - e2(ti)| <= tol * (1 + |e1(ti)|)` at every sample. Samples where
/// evaluation fails are perturbed toward the interval center by up to three
/// steps of `1e-6 * length`; a sample that still fails propagates the error.
pub fn equiv_numeric(
    e1: &Expression,
    e2: &Expression,
    interval: &Interval,
    n: usize,
    tol: f64,
) -> Result<bool> {
    if n < 8 {
        return Err(Error::new(
            ErrorCode::Usage,
            "equiv_numeric requires at least 8 samples",
        ));
    }
    let center = interval.midpoint();
    for t in interval.chebyshev_samples(n) {
        let (v1, v2) = eval_pair_with_jitter(e1, e2, t, center, interval.length())?;
        if (v1 - v2).abs() > tol * (1.0 + v1.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn eval_pair_with_jitter(
    e1: &Expression,
    e2: &Expression,
    t: f64,
    center: f64,
    length: f64,
) -> Result<(f64, f64)> {
    let step = 1e-6 * length * if center >= t { 1.0 } else { -1.0 };
    let mut last_err = None;
    for j in 0..4 {
        let tj = t + j as f64 * step;
        match (evaluate(e1, tj), evaluate(e2, tj)) {
            (Ok(a), Ok(b)) => return Ok((a, b)),
            (Err(e), _) | (_, Err(e)) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

/// Sup of `|e|` over `n` Chebyshev samples, with the same jitter rule.
pub fn sup_norm(e: &Expression, interval: &Interval, n: usize) -> Result<f64> {
    let zero = Expression::zero();
    let center = interval.midpoint();
    let mut sup: f64 = 0.0;
    for t in interval.chebyshev_samples(n.max(8)) {
        let (v, _) = eval_pair_with_jitter(e, &zero, t, center, interval.length())?;
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Expression {
        Expression::var()
    }

    #[test]
    fn simple_values() {
        assert_eq!(Expression::exp(t()).evaluate(0.0).unwrap(), 1.0);
        let e = Expression::powi(Expression::one() + Expression::powi(t(), 2), -1);
        assert_eq!(e.evaluate(1.0).unwrap(), 0.5);
        assert_eq!(Expression::powi(t(), -3).evaluate(2.0).unwrap(), 0.125);
    }

    #[test]
    fn singular_points_error() {
        let e = Expression::powi(t(), -1);
        assert!(e.evaluate(0.0).is_err());
        assert!(Expression::ln(t()).evaluate(-1.0).is_err());
        assert!(Expression::sqrt(t()).evaluate(-4.0).is_err());
    }

    #[test]
    fn pythagorean_identity_is_equiv_to_one() {
        let e =
            Expression::powi(Expression::sin(t()), 2) + Expression::powi(Expression::cos(t()), 2);
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(equiv_numeric(&e, &Expression::one(), &iv, 16, 1e-12).unwrap());
    }

    #[test]
    fn distinguishes_small_offsets() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let shifted = t() + Expression::ratio(1, 1000);
        assert!(!equiv_numeric(&t(), &shifted, &iv, 16, 1e-6).unwrap());
    }

    #[test]
    fn derivative_of_atan_is_equiv_to_rational() {
        let d = Expression::atan(t()).differentiate(1).unwrap();
        let r = Expression::powi(Expression::one() + Expression::powi(t(), 2), -1);
        let iv = Interval::new(-2.0, 2.0).unwrap();
        assert!(equiv_numeric(&d, &r, &iv, 32, 1e-12).unwrap());
    }

    #[test]
    fn jitter_skips_isolated_singularity() {
        // a sample landing exactly on the pole of 1/t is nudged toward the center
        let e = Expression::powi(t(), -1);
        let (a, b) = eval_pair_with_jitter(&e, &e, 0.0, 0.5, 2.0).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
        // and a genuinely unevaluable pair still propagates the failure
        let bad = Expression::ln(-Expression::one() - Expression::powi(t(), 2));
        assert!(eval_pair_with_jitter(&bad, &bad, 0.0, 0.5, 2.0).is_err());
    }
}
