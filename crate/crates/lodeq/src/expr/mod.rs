//! Immutable symbolic expressions of the single variable `t`.
//!
//! An [`Expression`] is a shared tree of nodes: exact rational constants, the
//! variable, sums, products, rational powers, quotients, the elementary
//! functions `exp`, `ln`, `sin`, `cos`, `tan`, `atan`, `abs`, and references
//! to [`NumericLeaf`] values carrying functions that exist only as solver
//! output. Rational-constant arithmetic is exact; transcendental evaluation
//! is floating point.

mod diff;
mod eval;
mod leaf;
mod normalize;
pub(crate) mod poly;

pub use eval::{equiv_numeric, sup_norm};
pub use leaf::{LeafBuilder, NumericLeaf};

use crate::error::{Error, ErrorCode, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::sync::Arc;

/// The elementary function tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Atan,
    Abs,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Abs => "abs",
        }
    }
}

/// Reference to a numeric leaf, possibly differentiated `deriv` times.
#[derive(Debug, Clone)]
pub struct LeafRef {
    pub(crate) leaf: Arc<NumericLeaf>,
    pub(crate) deriv: usize,
}

impl PartialEq for LeafRef {
    fn eq(&self, other: &Self) -> bool {
        self.leaf.id() == other.leaf.id() && self.deriv == other.deriv
    }
}
impl Eq for LeafRef {}

impl PartialOrd for LeafRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for LeafRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.leaf
            .id()
            .cmp(other.leaf.id())
            .then(self.deriv.cmp(&other.deriv))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Node {
    Const(BigRational),
    Var,
    Func(Func, Expression),
    Pow(Expression, BigRational),
    Prod(Vec<Expression>),
    Sum(Vec<Expression>),
    Div(Expression, Expression),
    Leaf(LeafRef),
}

impl Node {
    fn rank(&self) -> u8 {
        match self {
            Node::Const(_) => 0,
            Node::Var => 1,
            Node::Func(..) => 2,
            Node::Pow(..) => 3,
            Node::Prod(_) => 4,
            Node::Sum(_) => 5,
            Node::Div(..) => 6,
            Node::Leaf(_) => 7,
        }
    }
}

/// An immutable symbolic expression. Cloning is cheap (shared tree).
///
/// All public constructors return normalized expressions; normalization is a
/// fixed rewrite system (flatten sums and products, fold rational constants,
/// combine powers of structurally equal bases, sort operands canonically) and
/// every normalized expression is a fixed point of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expression(Arc<Node>);

impl PartialOrd for Expression {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expression {
    fn cmp(&self, other: &Self) -> Ordering {
        let ra = self.0.rank();
        let rb = other.0.rank();
        ra.cmp(&rb).then_with(|| self.0.cmp(&other.0))
    }
}

pub(crate) fn rat_i64(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Expression {
    pub(crate) fn raw(node: Node) -> Expression {
        Expression(Arc::new(node))
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    // ---- constructors ----

    pub fn var() -> Expression {
        Expression::raw(Node::Var)
    }

    pub fn integer(n: i64) -> Expression {
        Expression::raw(Node::Const(BigRational::from_integer(BigInt::from(n))))
    }

    pub fn constant(c: BigRational) -> Expression {
        Expression::raw(Node::Const(c))
    }

    pub fn ratio(n: i64, d: i64) -> Expression {
        Expression::constant(rat_i64(n, d))
    }

    pub fn zero() -> Expression {
        Expression::integer(0)
    }

    pub fn one() -> Expression {
        Expression::integer(1)
    }

    pub fn sum(terms: Vec<Expression>) -> Expression {
        Expression::raw(Node::Sum(terms)).normalized()
    }

    pub fn product(factors: Vec<Expression>) -> Expression {
        Expression::raw(Node::Prod(factors)).normalized()
    }

    pub fn pow(base: Expression, exponent: BigRational) -> Expression {
        Expression::raw(Node::Pow(base, exponent)).normalized()
    }

    pub fn powi(base: Expression, exponent: i64) -> Expression {
        Expression::pow(base, rat_i64(exponent, 1))
    }

    pub fn quotient(num: Expression, den: Expression) -> Expression {
        Expression::raw(Node::Div(num, den)).normalized()
    }

    pub fn func(f: Func, arg: Expression) -> Expression {
        Expression::raw(Node::Func(f, arg)).normalized()
    }

    pub fn exp(arg: Expression) -> Expression {
        Expression::func(Func::Exp, arg)
    }
    pub fn ln(arg: Expression) -> Expression {
        Expression::func(Func::Ln, arg)
    }
    pub fn sin(arg: Expression) -> Expression {
        Expression::func(Func::Sin, arg)
    }
    pub fn cos(arg: Expression) -> Expression {
        Expression::func(Func::Cos, arg)
    }
    pub fn tan(arg: Expression) -> Expression {
        Expression::func(Func::Tan, arg)
    }
    pub fn atan(arg: Expression) -> Expression {
        Expression::func(Func::Atan, arg)
    }
    pub fn abs(arg: Expression) -> Expression {
        Expression::func(Func::Abs, arg)
    }
    pub fn sqrt(arg: Expression) -> Expression {
        Expression::pow(arg, rat_i64(1, 2))
    }

    pub fn leaf(leaf: Arc<NumericLeaf>) -> Expression {
        Expression::raw(Node::Leaf(LeafRef { leaf, deriv: 0 }))
    }

    // ---- inspection ----

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_one())
    }

    pub fn is_var(&self) -> bool {
        matches!(self.node(), Node::Var)
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// True when the tree contains no numeric leaf.
    pub fn is_closed_form(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Var => true,
            Node::Leaf(_) => false,
            Node::Func(_, a) => a.is_closed_form(),
            Node::Pow(b, _) => b.is_closed_form(),
            Node::Div(a, b) => a.is_closed_form() && b.is_closed_form(),
            Node::Sum(v) | Node::Prod(v) => v.iter().all(Expression::is_closed_form),
        }
    }

    /// Largest `k` such that `differentiate(self, k)` is defined, limited by
    /// the declared derivative order of embedded numeric leaves. `None` means
    /// unbounded (closed form).
    pub fn jet_capacity(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) | Node::Var => None,
            Node::Leaf(l) => Some(l.leaf.deriv_order().saturating_sub(l.deriv)),
            Node::Func(_, a) => a.jet_capacity(),
            Node::Pow(b, _) => b.jet_capacity(),
            Node::Div(a, b) => opt_min(a.jet_capacity(), b.jet_capacity()),
            Node::Sum(v) | Node::Prod(v) => {
                v.iter().map(Expression::jet_capacity).fold(None, opt_min)
            }
        }
    }

    /// Intersection of validity intervals of all embedded leaves.
    pub fn leaf_domain(&self) -> Option<crate::interval::Interval> {
        let mut dom: Option<crate::interval::Interval> = None;
        self.visit_leaves(&mut |l: &LeafRef| {
            dom = match dom {
                None => Some(*l.leaf.interval()),
                Some(d) => d.intersect(l.leaf.interval()),
            };
        });
        dom
    }

    fn visit_leaves(&self, f: &mut impl FnMut(&LeafRef)) {
        match self.node() {
            Node::Const(_) | Node::Var => {}
            Node::Leaf(l) => f(l),
            Node::Func(_, a) => a.visit_leaves(f),
            Node::Pow(b, _) => b.visit_leaves(f),
            Node::Div(a, b) => {
                a.visit_leaves(f);
                b.visit_leaves(f);
            }
            Node::Sum(v) | Node::Prod(v) => v.iter().for_each(|e| e.visit_leaves(f)),
        }
    }

    /// Replace the variable by `g` everywhere. Only valid for closed-form
    /// trees: a numeric leaf is itself a function of `t` and cannot be
    /// re-based by substitution.
    pub fn substitute_var(&self, g: &Expression) -> Result<Expression> {
        if !self.is_closed_form() {
            return Err(Error::new(
                ErrorCode::Unsupported,
                "cannot substitute into an expression containing numeric leaves",
            ));
        }
        Ok(self.substitute_var_unchecked(g))
    }

    fn substitute_var_unchecked(&self, g: &Expression) -> Expression {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var => g.clone(),
            Node::Leaf(_) => self.clone(),
            Node::Func(f, a) => Expression::func(*f, a.substitute_var_unchecked(g)),
            Node::Pow(b, p) => Expression::pow(b.substitute_var_unchecked(g), p.clone()),
            Node::Div(a, b) => {
                Expression::quotient(a.substitute_var_unchecked(g), b.substitute_var_unchecked(g))
            }
            Node::Sum(v) => {
                Expression::sum(v.iter().map(|e| e.substitute_var_unchecked(g)).collect())
            }
            Node::Prod(v) => {
                Expression::product(v.iter().map(|e| e.substitute_var_unchecked(g)).collect())
            }
        }
    }

    /// Number of nodes, used by tests and diagnostics.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var | Node::Leaf(_) => 1,
            Node::Func(_, a) => 1 + a.size(),
            Node::Pow(b, _) => 1 + b.size(),
            Node::Div(a, b) => 1 + a.size() + b.size(),
            Node::Sum(v) | Node::Prod(v) => 1 + v.iter().map(Expression::size).sum::<usize>(),
        }
    }

    // ---- the core operations, implemented in the submodules ----

    /// Normalized form of this expression (idempotent).
    pub fn normalized(&self) -> Expression {
        normalize::normalize(self)
    }

    /// `k`-th derivative with respect to `t`, in normalized form.
    pub fn differentiate(&self, k: usize) -> Result<Expression> {
        diff::differentiate(self, k)
    }

    /// Value at `t`; errors on singular points and out-of-interval leaves.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        eval::evaluate(self, t)
    }
}

fn opt_min(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (None, x) => x,
        (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

// ---- operator sugar (results are normalized) ----

impl std::ops::Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        Expression::sum(vec![self, rhs])
    }
}
impl std::ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        Expression::sum(vec![self, -rhs])
    }
}
impl std::ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        Expression::product(vec![self, rhs])
    }
}
impl std::ops::Div for Expression {
    type Output = Expression;
    fn div(self, rhs: Expression) -> Expression {
        Expression::quotient(self, rhs)
    }
}
impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::product(vec![Expression::integer(-1), self])
    }
}

// ---- canonical textual form (the grammar `parse` reads) ----

fn fmt_rational(c: &BigRational, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

// Precedence levels: sum 1, product 2, power 3, atom 4.
fn prec(e: &Expression) -> u8 {
    match e.node() {
        Node::Sum(_) => 1,
        Node::Prod(_) | Node::Div(..) => 2,
        Node::Pow(..) => 3,
        Node::Const(c) if c.is_negative() || !c.is_integer() => 2,
        _ => 4,
    }
}

fn fmt_with_parens(
    e: &Expression,
    min_prec: u8,
    f: &mut std::fmt::Formatter<'_>,
) -> std::fmt::Result {
    if prec(e) < min_prec {
        write!(f, "(")?;
        write!(f, "{e}")?;
        write!(f, ")")
    } else {
        write!(f, "{e}")
    }
}

/// Split a term into (negative?, magnitude) for pretty sum printing.
fn term_magnitude(e: &Expression) -> Option<Expression> {
    match e.node() {
        Node::Const(c) if c.is_negative() => Some(Expression::constant(-c.clone())),
        Node::Prod(fs) => match fs[0].node() {
            Node::Const(c) if c.is_negative() => {
                let mut v = vec![Expression::constant(-c.clone())];
                v.extend_from_slice(&fs[1..]);
                Some(Expression::product(v))
            }
            _ => None,
        },
        _ => None,
    }
}

impl std::fmt::Display for Expression {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.node() {
            Node::Const(c) => fmt_rational(c, f),
            Node::Var => write!(f, "t"),
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
            Node::Pow(b, p) => {
                fmt_with_parens(b, 4, f)?;
                if p.is_integer() && !p.is_negative() {
                    write!(f, "^{}", p.numer())
                } else if p.is_integer() {
                    write!(f, "^({})", p.numer())
                } else {
                    write!(f, "^({}/{})", p.numer(), p.denom())
                }
            }
            Node::Prod(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    fmt_with_parens(x, 3, f)?;
                }
                Ok(())
            }
            Node::Div(a, b) => {
                fmt_with_parens(a, 2, f)?;
                write!(f, "/")?;
                fmt_with_parens(b, 3, f)?;
                Ok(())
            }
            Node::Sum(ts) => {
                for (i, x) in ts.iter().enumerate() {
                    if i == 0 {
                        fmt_with_parens(x, 1, f)?;
                    } else if let Some(mag) = term_magnitude(x) {
                        write!(f, " - ")?;
                        fmt_with_parens(&mag, 2, f)?;
                    } else {
                        write!(f, " + ")?;
                        fmt_with_parens(x, 2, f)?;
                    }
                }
                Ok(())
            }
            Node::Leaf(l) => write!(f, "{{numeric:{}#{}}}", l.leaf.id(), l.deriv),
        }
    }
}
