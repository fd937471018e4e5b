//! Truncated Taylor series arithmetic in f64.
//!
//! A [`Taylor`] holds coefficients `c[k] = f^(k)(t0) / k!` of a local
//! expansion, truncated at a fixed order. This is the jet engine behind
//! derivative recursions for ODE solutions, composition of functions with
//! numeric leaves, and local inversion of monotone maps.

use crate::error::{Error, ErrorCode, Result};
use crate::expr::NumericLeaf;
use crate::expr::{Expression, Func};
use num_traits::ToPrimitive;

#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    c: Vec<f64>,
}

fn singular(msg: impl Into<String>) -> Error {
    Error::new(ErrorCode::SingularEvaluation, msg)
}

impl Taylor {
    pub fn zero(order: usize) -> Taylor {
        Taylor {
            c: vec![0.0; order + 1],
        }
    }

    pub fn constant(v: f64, order: usize) -> Taylor {
        let mut s = Taylor::zero(order);
        s.c[0] = v;
        s
    }

    /// Series of the identity map `t` expanded at `t0`.
    pub fn variable(t0: f64, order: usize) -> Taylor {
        let mut s = Taylor::constant(t0, order);
        if order >= 1 {
            s.c[1] = 1.0;
        }
        s
    }

    /// From a jet of plain derivatives `f, f', f'', ...`.
    pub fn from_jet(jet: &[f64]) -> Taylor {
        let mut c = Vec::with_capacity(jet.len());
        let mut fact = 1.0;
        for (k, &d) in jet.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            c.push(d / fact);
        }
        Taylor { c }
    }

    /// Back to plain derivatives.
    pub fn to_jet(&self) -> Vec<f64> {
        let mut jet = Vec::with_capacity(self.c.len());
        let mut fact = 1.0;
        for (k, &c) in self.c.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            jet.push(c * fact);
        }
        jet
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn truncate(&self, order: usize) -> Taylor {
        let mut c = self.c.clone();
        c.truncate(order + 1);
        c.resize(order + 1, 0.0);
        Taylor { c }
    }

    pub fn add(&self, o: &Taylor) -> Taylor {
        let n = self.c.len().max(o.c.len());
        Taylor {
            c: (0..n).map(|k| self.coeff(k) + o.coeff(k)).collect(),
        }
    }

    pub fn sub(&self, o: &Taylor) -> Taylor {
        let n = self.c.len().max(o.c.len());
        Taylor {
            c: (0..n).map(|k| self.coeff(k) - o.coeff(k)).collect(),
        }
    }

    pub fn scale(&self, v: f64) -> Taylor {
        Taylor {
            c: self.c.iter().map(|x| x * v).collect(),
        }
    }

    pub fn mul(&self, o: &Taylor) -> Taylor {
        let n = self.c.len().max(o.c.len());
        let mut c = vec![0.0; n];
        for k in 0..n {
            let mut acc = 0.0;
            for i in 0..=k {
                acc += self.coeff(i) * o.coeff(k - i);
            }
            c[k] = acc;
        }
        Taylor { c }
    }

    pub fn div(&self, o: &Taylor) -> Result<Taylor> {
        if o.c[0] == 0.0 {
            return Err(singular(
                "series division by a series vanishing at the point",
            ));
        }
        let n = self.c.len().max(o.c.len());
        let mut c = vec![0.0; n];
        for k in 0..n {
            let mut acc = self.coeff(k);
            for i in 0..k {
                acc -= c[i] * o.coeff(k - i);
            }
            c[k] = acc / o.c[0];
        }
        Ok(Taylor { c })
    }

    /// `u^p` for real `p`; for non-integer `p` the constant term must be
    /// positive, for negative `p` nonzero.
    pub fn powf(&self, p: f64) -> Result<Taylor> {
        let n = self.order();
        let u0 = self.c[0];
        let is_int = p.fract() == 0.0 && p.abs() < 1e9;
        if u0 == 0.0 {
            if is_int && p >= 0.0 {
                // repeated multiplication handles zero constant terms
                let k = p as u64;
                let mut acc = Taylor::constant(1.0, n);
                for _ in 0..k {
                    acc = acc.mul(self).truncate(n);
                }
                return Ok(acc);
            }
            return Err(singular("series power at a zero of the base"));
        }
        if !is_int && u0 < 0.0 {
            return Err(singular(
                "series power of a negative base with non-integer exponent",
            ));
        }
        let mut c = vec![0.0; n + 1];
        c[0] = u0.powf(p);
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += (p * j as f64 - (k - j) as f64) * self.coeff(j) * c[k - j];
            }
            c[k] = acc / (k as f64 * u0);
        }
        Ok(Taylor { c })
    }

    pub fn exp(&self) -> Taylor {
        let n = self.order();
        let mut c = vec![0.0; n + 1];
        c[0] = self.c[0].exp();
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.coeff(j) * c[k - j];
            }
            c[k] = acc / k as f64;
        }
        Taylor { c }
    }

    pub fn ln(&self) -> Result<Taylor> {
        if self.c[0] <= 0.0 {
            return Err(singular("series ln of a nonpositive value"));
        }
        let n = self.order();
        let du = self.derivative_series();
        let w = du.div(self)?; // (ln u)' = u'/u
        let mut c = vec![0.0; n + 1];
        c[0] = self.c[0].ln();
        for k in 1..=n {
            c[k] = w.coeff(k - 1) / k as f64;
        }
        Ok(Taylor { c })
    }

    pub fn sin_cos(&self) -> (Taylor, Taylor) {
        let n = self.order();
        let mut s = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..=n {
            let mut sa = 0.0;
            let mut ca = 0.0;
            for j in 1..=k {
                sa += j as f64 * self.coeff(j) * c[k - j];
                ca += j as f64 * self.coeff(j) * s[k - j];
            }
            s[k] = sa / k as f64;
            c[k] = -ca / k as f64;
        }
        (Taylor { c: s }, Taylor { c })
    }

    pub fn tan(&self) -> Result<Taylor> {
        let (s, c) = self.sin_cos();
        if c.c[0] == 0.0 {
            return Err(singular("series tan at a pole"));
        }
        s.div(&c)
    }

    pub fn atan(&self) -> Result<Taylor> {
        let n = self.order();
        let one_plus_u2 = Taylor::constant(1.0, n).add(&self.mul(self).truncate(n));
        let w = self.derivative_series().div(&one_plus_u2)?;
        let mut c = vec![0.0; n + 1];
        c[0] = self.c[0].atan();
        for k in 1..=n {
            c[k] = w.coeff(k - 1) / k as f64;
        }
        Ok(Taylor { c })
    }

    pub fn abs(&self) -> Result<Taylor> {
        if self.c[0] > 0.0 {
            Ok(self.clone())
        } else if self.c[0] < 0.0 {
            Ok(self.scale(-1.0))
        } else {
            Err(singular("series abs at a zero of the argument"))
        }
    }

    /// Series of `f'` (one order shorter, padded with zero).
    pub fn derivative_series(&self) -> Taylor {
        let n = self.order();
        let mut c = vec![0.0; n + 1];
        for k in 1..=n {
            c[k - 1] = k as f64 * self.c[k];
        }
        Taylor { c }
    }

    /// Composition `self(g)` where `g` has zero constant term.
    pub fn compose(&self, g: &Taylor) -> Taylor {
        assert_eq!(
            g.c[0], 0.0,
            "composition needs a zero-increment inner series"
        );
        let n = self.order().max(g.order());
        let mut acc = Taylor::constant(self.coeff(self.order()), n);
        for k in (0..self.order()).rev() {
            acc = acc.mul(g).truncate(n);
            acc.c[0] += self.coeff(k);
        }
        acc
    }

    /// Compositional inverse: for `g` with `g(0) = 0`, `g'(0) != 0`, returns
    /// `h` with `h(g(x)) = x` up to the truncation order.
    pub fn invert(&self) -> Result<Taylor> {
        let n = self.order();
        if self.c[0] != 0.0 {
            return Err(singular("inversion needs a zero-increment series"));
        }
        let g1 = self.coeff(1);
        if g1 == 0.0 {
            return Err(Error::new(
                ErrorCode::InverseConstruction,
                "cannot invert a map with vanishing derivative",
            ));
        }
        let mut h = vec![0.0; n + 1];
        h[1] = 1.0 / g1;
        // powers[k] = g^k, maintained incrementally
        let mut g_pow = self.clone();
        let mut powers: Vec<Taylor> = vec![g_pow.clone()];
        for _ in 2..=n {
            g_pow = g_pow.mul(self).truncate(n);
            powers.push(g_pow.clone());
        }
        for m in 2..=n {
            // [x^m] sum_{k=1}^{m} h_k g^k = 0
            let mut acc = 0.0;
            for k in 1..m {
                acc += h[k] * powers[k - 1].coeff(m);
            }
            h[m] = -acc / powers[m - 1].coeff(m); // g^m has leading coeff g1^m at x^m
        }
        Ok(Taylor { c: h })
    }
}

/// Local Taylor expansion of an expression at `t0`, up to `order`.
///
/// This avoids symbolic differentiation entirely: every node combines the
/// series of its children, and numeric leaves contribute their stored jets.
pub fn taylor_of_expr(e: &Expression, t0: f64, order: usize) -> Result<Taylor> {
    use crate::expr::Node;
    Ok(match e.node() {
        Node::Const(c) => Taylor::constant(
            c.to_f64()
                .ok_or_else(|| singular("rational constant overflows f64"))?,
            order,
        ),
        Node::Var => Taylor::variable(t0, order),
        Node::Sum(ts) => {
            let mut acc = Taylor::zero(order);
            for t in ts {
                acc = acc.add(&taylor_of_expr(t, t0, order)?);
            }
            acc
        }
        Node::Prod(fs) => {
            let mut acc = Taylor::constant(1.0, order);
            for f in fs {
                acc = acc.mul(&taylor_of_expr(f, t0, order)?).truncate(order);
            }
            acc
        }
        Node::Div(a, b) => taylor_of_expr(a, t0, order)?.div(&taylor_of_expr(b, t0, order)?)?,
        Node::Pow(b, p) => {
            let base = taylor_of_expr(b, t0, order)?;
            let pf = p
                .to_f64()
                .ok_or_else(|| singular("power exponent overflows f64"))?;
            base.powf(pf)?
        }
        Node::Func(f, a) => {
            let u = taylor_of_expr(a, t0, order)?;
            match f {
                Func::Exp => u.exp(),
                Func::Ln => u.ln()?,
                Func::Sin => u.sin_cos().0,
                Func::Cos => u.sin_cos().1,
                Func::Tan => u.tan()?,
                Func::Atan => u.atan()?,
                Func::Abs => u.abs()?,
            }
        }
        Node::Leaf(l) => taylor_of_leaf(&l.leaf, l.deriv, t0, order)?,
    })
}

fn taylor_of_leaf(leaf: &NumericLeaf, base_deriv: usize, t0: f64, order: usize) -> Result<Taylor> {
    let mut jet = Vec::with_capacity(order + 1);
    for k in 0..=order {
        jet.push(leaf.eval(t0, base_deriv + k)?);
    }
    Ok(Taylor::from_jet(&jet))
}

/// Jet of plain derivatives `e, e', ..., e^(order)` at `t0`.
pub fn jet_of_expr(e: &Expression, t0: f64, order: usize) -> Result<Vec<f64>> {
    Ok(taylor_of_expr(e, t0, order)?.to_jet())
}
