//! The normalization rewrite system.
//!
//! One pass: normalize children, eliminate quotients, flatten nested sums and
//! products, fold rational constants, combine powers of structurally equal
//! bases, collect like sum terms with rational coefficients, split `exp` of
//! sums into products and `exp(q*ln u)` into powers, drop `abs` around
//! manifestly nonnegative arguments, and sort operands canonically.
//! `normalize` iterates the pass to a fixed point, so it is idempotent. No
//! completeness of simplification is claimed; structural equality of
//! normalized forms is backstopped by numeric equivalence checks elsewhere.

use super::{Expression, Func, Node};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

pub(crate) fn normalize(e: &Expression) -> Expression {
    let mut cur = pass(e);
    // The pass almost always reaches a fixed point immediately; the loop
    // guards the few rewrites that cascade (pow-of-product, exp-splitting).
    for _ in 0..8 {
        let next = pass(&cur);
        if next == cur {
            return next;
        }
        cur = next;
    }
    debug_assert!(pass(&cur) == cur, "normalization did not converge");
    cur
}

fn pass(e: &Expression) -> Expression {
    match e.node() {
        Node::Const(_) | Node::Var | Node::Leaf(_) => e.clone(),
        Node::Div(a, b) => {
            let na = pass(a);
            let nb = pass(b);
            pass(&Expression::raw(Node::Prod(vec![
                na,
                Expression::raw(Node::Pow(nb, irat(-1))),
            ])))
        }
        Node::Pow(b, p) => norm_pow(pass(b), p.clone()),
        Node::Func(f, a) => norm_func(*f, pass(a)),
        Node::Sum(ts) => norm_sum(ts.iter().map(pass).collect()),
        Node::Prod(fs) => norm_prod(fs.iter().map(pass).collect()),
    }
}

fn irat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn is_even_integer(p: &BigRational) -> bool {
    p.is_integer() && p.numer().is_even()
}

fn rational_pow(c: &BigRational, p: &BigRational) -> Option<BigRational> {
    if !p.is_integer() {
        return None;
    }
    let n = p.numer();
    let exp = n.abs().to_u32_digits().1;
    if exp.len() > 1 || (!exp.is_empty() && exp[0] > 64) {
        return None; // keep astronomically large powers symbolic
    }
    let k = if exp.is_empty() { 0 } else { exp[0] };
    if c.is_zero() {
        if n.is_negative() {
            return None; // 0^(-k): leave symbolic, evaluation reports it
        }
        return Some(if k == 0 {
            BigRational::one()
        } else {
            c.clone()
        });
    }
    let mut acc = BigRational::one();
    for _ in 0..k {
        acc *= c;
    }
    if n.is_negative() {
        acc = acc.recip();
    }
    Some(acc)
}

/// Base is positive on its whole domain, so power laws apply unconditionally.
fn base_manifestly_positive(b: &Expression) -> bool {
    match b.node() {
        Node::Const(c) => c.is_positive(),
        Node::Func(Func::Exp, _) | Node::Func(Func::Abs, _) => true,
        _ => false,
    }
}

fn norm_pow(base: Expression, p: BigRational) -> Expression {
    if p.is_zero() {
        return Expression::raw(Node::Const(BigRational::one()));
    }
    if p.is_one() {
        return base;
    }
    match base.node() {
        Node::Const(c) => {
            if let Some(v) = rational_pow(c, &p) {
                return Expression::raw(Node::Const(v));
            }
            Expression::raw(Node::Pow(base, p))
        }
        // (b^q)^p = b^(q p) for integer p, or for any p when b stays positive.
        Node::Pow(inner, q) => {
            if p.is_integer() || base_manifestly_positive(inner) {
                norm_pow(inner.clone(), q * &p)
            } else {
                Expression::raw(Node::Pow(base.clone(), p))
            }
        }
        // (f1 f2)^n distributes for integer n.
        Node::Prod(fs) if p.is_integer() => {
            norm_prod(fs.iter().map(|f| norm_pow(f.clone(), p.clone())).collect())
        }
        // |u|^(2k) = u^(2k)
        Node::Func(Func::Abs, u) if is_even_integer(&p) => norm_pow(u.clone(), p),
        _ => Expression::raw(Node::Pow(base, p)),
    }
}

fn norm_func(f: Func, arg: Expression) -> Expression {
    if let Node::Const(c) = arg.node() {
        match f {
            Func::Abs => return Expression::raw(Node::Const(c.abs())),
            Func::Exp | Func::Sin | Func::Tan | Func::Atan if c.is_zero() => {
                return if f == Func::Exp {
                    Expression::raw(Node::Const(BigRational::one()))
                } else {
                    Expression::raw(Node::Const(BigRational::zero()))
                };
            }
            Func::Cos if c.is_zero() => {
                return Expression::raw(Node::Const(BigRational::one()));
            }
            Func::Ln if c.is_one() => {
                return Expression::raw(Node::Const(BigRational::zero()));
            }
            _ => {}
        }
    }
    match f {
        Func::Exp => norm_exp(arg),
        Func::Ln => match arg.node() {
            Node::Func(Func::Exp, u) => u.clone(),
            _ => Expression::raw(Node::Func(f, arg)),
        },
        Func::Abs => match arg.node() {
            Node::Func(Func::Abs, _) | Node::Func(Func::Exp, _) => arg.clone(),
            Node::Pow(u, p) if is_even_integer(p) => norm_pow(u.clone(), p.clone()),
            // |c * u| = |c| * |u|
            Node::Prod(fs) => {
                if let Node::Const(c) = fs[0].node() {
                    let mut v = vec![Expression::raw(Node::Const(c.abs()))];
                    let rest = if fs.len() == 2 {
                        fs[1].clone()
                    } else {
                        Expression::raw(Node::Prod(fs[1..].to_vec()))
                    };
                    v.push(Expression::raw(Node::Func(Func::Abs, rest)));
                    norm_prod(v)
                } else {
                    Expression::raw(Node::Func(f, arg))
                }
            }
            _ => Expression::raw(Node::Func(f, arg)),
        },
        _ => Expression::raw(Node::Func(f, arg)),
    }
}

/// `exp(a + b) -> exp(a) exp(b)`, `exp(q ln u) -> u^q`, `exp(ln u) -> u`.
fn norm_exp(arg: Expression) -> Expression {
    let split_term = |term: &Expression| -> Expression {
        match term.node() {
            Node::Func(Func::Ln, u) => u.clone(),
            Node::Prod(fs) if fs.len() == 2 => match (fs[0].node(), fs[1].node()) {
                (Node::Const(q), Node::Func(Func::Ln, u)) => norm_pow(u.clone(), q.clone()),
                _ => Expression::raw(Node::Func(Func::Exp, term.clone())),
            },
            _ => Expression::raw(Node::Func(Func::Exp, term.clone())),
        }
    };
    match arg.node() {
        Node::Sum(ts) => norm_prod(ts.iter().map(split_term).collect()),
        _ => split_term(&arg),
    }
}

/// Decompose a normalized term as (rational coefficient, core factor).
fn coeff_core(term: &Expression) -> (BigRational, Expression) {
    match term.node() {
        Node::Const(c) => (c.clone(), Expression::raw(Node::Const(BigRational::one()))),
        Node::Prod(fs) => {
            if let Node::Const(c) = fs[0].node() {
                let rest = if fs.len() == 2 {
                    fs[1].clone()
                } else {
                    Expression::raw(Node::Prod(fs[1..].to_vec()))
                };
                (c.clone(), rest)
            } else {
                (BigRational::one(), term.clone())
            }
        }
        _ => (BigRational::one(), term.clone()),
    }
}

fn norm_sum(ts: Vec<Expression>) -> Expression {
    let mut flat = Vec::new();
    for t in ts {
        match t.node() {
            Node::Sum(inner) => flat.extend(inner.iter().cloned()),
            _ => flat.push(t),
        }
    }
    let mut constant = BigRational::zero();
    let mut cores: BTreeMap<Expression, BigRational> = BTreeMap::new();
    for t in &flat {
        let (c, core) = coeff_core(t);
        if core.is_one() {
            constant += c;
        } else {
            let entry = cores.entry(core).or_insert_with(BigRational::zero);
            *entry += c;
        }
    }
    let mut out = Vec::new();
    if !constant.is_zero() {
        out.push(Expression::raw(Node::Const(constant)));
    }
    for (core, c) in cores {
        if c.is_zero() {
            continue;
        }
        if c.is_one() {
            out.push(core);
        } else {
            out.push(norm_prod(vec![Expression::raw(Node::Const(c)), core]));
        }
    }
    match out.len() {
        0 => Expression::raw(Node::Const(BigRational::zero())),
        1 => out.pop().unwrap(),
        _ => Expression::raw(Node::Sum(out)),
    }
}

/// Decompose a normalized factor as (base, exponent).
fn base_exp(factor: &Expression) -> (Expression, BigRational) {
    match factor.node() {
        Node::Pow(b, p) => (b.clone(), p.clone()),
        _ => (factor.clone(), BigRational::one()),
    }
}

fn norm_prod(fs: Vec<Expression>) -> Expression {
    let mut flat = Vec::new();
    for f in fs {
        match f.node() {
            Node::Prod(inner) => flat.extend(inner.iter().cloned()),
            _ => flat.push(f),
        }
    }
    let mut constant = BigRational::one();
    let mut bases: BTreeMap<Expression, BigRational> = BTreeMap::new();
    for f in &flat {
        match f.node() {
            Node::Const(c) => {
                if c.is_zero() {
                    return Expression::raw(Node::Const(BigRational::zero()));
                }
                constant *= c;
            }
            _ => {
                let (b, p) = base_exp(f);
                let entry = bases.entry(b).or_insert_with(BigRational::zero);
                *entry += p;
            }
        }
    }
    let mut out = Vec::new();
    for (b, p) in bases {
        if p.is_zero() {
            continue;
        }
        let rebuilt = norm_pow(b, p);
        match rebuilt.node() {
            Node::Const(c) => {
                if c.is_zero() {
                    return Expression::raw(Node::Const(BigRational::zero()));
                }
                constant *= c;
            }
            Node::Prod(inner) => out.extend(inner.iter().cloned()),
            _ => out.push(rebuilt),
        }
    }
    out.sort();
    if !constant.is_one() || out.is_empty() {
        let mut v = vec![Expression::raw(Node::Const(constant))];
        v.extend(out);
        out = v;
    }
    match out.len() {
        0 => Expression::raw(Node::Const(BigRational::one())),
        1 => out.pop().unwrap(),
        _ => Expression::raw(Node::Prod(out)),
    }
}
