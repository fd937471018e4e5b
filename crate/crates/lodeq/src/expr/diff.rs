//! Exact differentiation with respect to `t`.

use super::{Expression, Func, LeafRef, Node};
use crate::error::{Error, ErrorCode, Result};
use num_rational::BigRational;
use num_traits::One;

pub(crate) fn differentiate(e: &Expression, k: usize) -> Result<Expression> {
    let mut cur = e.normalized();
    for _ in 0..k {
        cur = d1(&cur)?;
    }
    Ok(cur)
}

fn d1(e: &Expression) -> Result<Expression> {
    Ok(match e.node() {
        Node::Const(_) => Expression::zero(),
        Node::Var => Expression::one(),
        Node::Sum(ts) => {
            let mut parts = Vec::with_capacity(ts.len());
            for t in ts {
                parts.push(d1(t)?);
            }
            Expression::sum(parts)
        }
        Node::Prod(fs) => {
            let mut parts = Vec::with_capacity(fs.len());
            for (i, fi) in fs.iter().enumerate() {
                let dfi = d1(fi)?;
                if dfi.is_zero() {
                    continue;
                }
                let mut factors = Vec::with_capacity(fs.len());
                for (j, fj) in fs.iter().enumerate() {
                    factors.push(if i == j { dfi.clone() } else { fj.clone() });
                }
                parts.push(Expression::product(factors));
            }
            Expression::sum(parts)
        }
        Node::Pow(b, p) => {
            let db = d1(b)?;
            let pm1 = p - BigRational::one();
            Expression::product(vec![
                Expression::constant(p.clone()),
                Expression::pow(b.clone(), pm1),
                db,
            ])
        }
        Node::Div(a, b) => {
            // normalize() removes quotients, but stay total anyway
            let da = d1(a)?;
            let db = d1(b)?;
            (da * b.clone() - a.clone() * db) / Expression::powi(b.clone(), 2)
        }
        Node::Func(f, u) => {
            let du = d1(u)?;
            let outer = match f {
                Func::Exp => Expression::exp(u.clone()),
                Func::Ln => Expression::powi(u.clone(), -1),
                Func::Sin => Expression::cos(u.clone()),
                Func::Cos => -Expression::sin(u.clone()),
                Func::Tan => Expression::one() + Expression::powi(Expression::tan(u.clone()), 2),
                Func::Atan => {
                    Expression::powi(Expression::one() + Expression::powi(u.clone(), 2), -1)
                }
                // d|u|/dt = u u' / |u|
                Func::Abs => u.clone() * Expression::powi(Expression::abs(u.clone()), -1),
            };
            outer * du
        }
        Node::Leaf(l) => {
            if l.deriv + 1 > l.leaf.deriv_order() {
                return Err(Error::new(
                    ErrorCode::DerivativeOrderExceeded,
                    format!(
                        "numeric leaf '{}' carries derivatives up to order {}, requested {}",
                        l.leaf.id(),
                        l.leaf.deriv_order(),
                        l.deriv + 1
                    ),
                ));
            }
            Expression::raw(Node::Leaf(LeafRef {
                leaf: l.leaf.clone(),
                deriv: l.deriv + 1,
            }))
        }
    })
}
