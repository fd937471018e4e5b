//! High-accuracy initial-value integration of linear ODEs, quadrature, and
//! construction of dense numeric leaves.
//!
//! Dense output works from derivative jets: at every accepted mesh node the
//! full jet of the solution is recovered from the equation itself (the r-th
//! and higher derivatives follow from the differentiated ODE relation), and
//! the leaf interpolates those jets with two-point Hermite segments. High
//! derivatives therefore inherit the integrator accuracy instead of the
//! accuracy of a fixed-degree interpolation polynomial.

pub mod rk;

pub use rk::{integrate, Rhs, Trajectory};

use crate::error::{Error, ErrorCode, Result};
use crate::expr::{Expression, LeafBuilder, NumericLeaf};
use crate::interval::Interval;
use crate::ode::LinearOde;
use crate::taylor::{jet_of_expr, taylor_of_expr};
use num_rational::BigRational;
use num_traits::One;
use std::sync::Arc;

/// Dense solution of a linear initial-value problem: leaf `k` carries the
/// `k`-th derivative of the solution, each differentiable a further
/// `deriv_order` times.
#[derive(Debug, Clone)]
pub struct IvpSolution {
    order: usize,
    interval: Interval,
    leaves: Vec<Arc<NumericLeaf>>,
    achieved_tol: f64,
}

impl IvpSolution {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn achieved_tol(&self) -> f64 {
        self.achieved_tol
    }

    pub fn leaf(&self, k: usize) -> &Arc<NumericLeaf> {
        &self.leaves[k]
    }

    /// The solution as an expression.
    pub fn solution(&self) -> Expression {
        Expression::leaf(self.leaves[0].clone())
    }

    /// The `k`-th derivative as an expression, `k < r`.
    pub fn derivative(&self, k: usize) -> Expression {
        Expression::leaf(self.leaves[k].clone())
    }
}

struct CompanionRhs<'a> {
    ode: &'a LinearOde,
}

impl Rhs for CompanionRhs<'_> {
    fn dim(&self) -> usize {
        self.ode.order()
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let r = self.ode.order();
        dy[..r - 1].copy_from_slice(&y[1..r]);
        let mut top = self.ode.rhs().evaluate(t)?;
        for (m, c) in self.ode.coeffs().iter().enumerate() {
            top -= c.evaluate(t)? * y[m];
        }
        dy[r - 1] = top;
        Ok(())
    }
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1.0;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + if j <= i - 1 { c[i - 1][j] } else { 0.0 };
        }
    }
    c
}

/// Full derivative jet `x, x', ..., x^(upto)` of a solution at `t`, given the
/// state `(x, ..., x^(r-1))`: orders `>= r` come from the differentiated ODE
/// relation with exact local expansions of the coefficients.
pub fn linear_solution_jet(
    ode: &LinearOde,
    t: f64,
    state: &[f64],
    upto: usize,
) -> Result<Vec<f64>> {
    let r = ode.order();
    assert_eq!(state.len(), r);
    let mut jet: Vec<f64> = state.to_vec();
    if upto < r {
        jet.truncate(upto + 1);
        return Ok(jet);
    }
    let depth = upto - r;
    let coeff_jets: Vec<Vec<f64>> = ode
        .coeffs()
        .iter()
        .map(|c| jet_of_expr(c, t, depth))
        .collect::<Result<_>>()?;
    let rhs_jet = jet_of_expr(ode.rhs(), t, depth)?;
    let binom = binomials(depth);
    for j in 0..=depth {
        // x^(r+j) = b^(j) - sum_m sum_i C(j,i) a_m^(i) x^(m+j-i)
        let mut acc = rhs_jet[j];
        for (m, aj) in coeff_jets.iter().enumerate() {
            for i in 0..=j {
                acc -= binom[j][i] * aj[i] * jet[m + j - i];
            }
        }
        jet.push(acc);
    }
    Ok(jet)
}

fn merge_two_sided(
    left: Option<Trajectory>,
    right: Option<Trajectory>,
    t0: f64,
    y0: &[f64],
) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    let mut err = 0.0f64;
    if let Some(l) = left {
        err = err.max(l.max_err);
        for (t, y) in l.ts.iter().zip(l.ys.iter()).skip(1).rev() {
            ts.push(*t);
            ys.push(y.clone());
        }
    }
    ts.push(t0);
    ys.push(y0.to_vec());
    if let Some(r) = right {
        err = err.max(r.max_err);
        for (t, y) in r.ts.iter().zip(r.ys.iter()).skip(1) {
            ts.push(*t);
            ys.push(y.clone());
        }
    }
    (ts, ys, err)
}

/// Solve the linear IVP with initial jet `init = (x, x', ..., x^(r-1))` at
/// `t0`, producing dense output on the whole interval of the equation.
pub fn solve_linear_ivp(ode: &LinearOde, t0: f64, init: &[f64], tol: f64) -> Result<IvpSolution> {
    let r = ode.order();
    if init.len() != r {
        return Err(Error::new(
            ErrorCode::Usage,
            format!("initial jet must have length r = {r}"),
        ));
    }
    let interval = *ode.interval();
    if !interval.contains(t0) {
        return Err(Error::new(
            ErrorCode::OutOfInterval,
            format!("t0 = {t0} outside equation interval {interval}"),
        ));
    }
    let rhs = CompanionRhs { ode };
    let h_max = interval.length() / 64.0;
    let guard = |_: f64, _: &[f64]| true;
    // The per-step tolerance carries a safety factor so that the accumulated
    // global error stays near the requested tolerance.
    let tol_step = tol / 100.0;
    let right = if t0 < interval.hi() {
        Some(integrate(
            &rhs,
            t0,
            init,
            interval.hi(),
            tol_step,
            h_max,
            &guard,
        )?)
    } else {
        None
    };
    let left = if t0 > interval.lo() {
        Some(integrate(
            &rhs,
            t0,
            init,
            interval.lo(),
            tol_step,
            h_max,
            &guard,
        )?)
    } else {
        None
    };
    let (ts, states, max_err) = merge_two_sided(left, right, t0, init);

    // Leaf k keeps the k-th derivative; every leaf is differentiable another
    // `extra` times, capped by the smoothness of leaf-backed coefficients.
    // Two jet orders beyond the declared capacity are stored so that even the
    // top declared derivatives interpolate accurately.
    let extra = 2 * r + 4;
    let coeff_cap = ode
        .coeffs()
        .iter()
        .chain(std::iter::once(ode.rhs()))
        .filter_map(|c| c.jet_capacity())
        .min();
    let top = match coeff_cap {
        Some(cap) => (r + cap).min(r + 1 + extra),
        None => r + 1 + extra,
    };
    let mut jets_full = Vec::with_capacity(ts.len());
    for (t, y) in ts.iter().zip(states.iter()) {
        jets_full.push(linear_solution_jet(ode, *t, y, top)?);
    }
    let mut leaves = Vec::with_capacity(r);
    for k in 0..r {
        let d = (top - k).saturating_sub(2);
        let jets: Vec<Vec<f64>> = jets_full.iter().map(|j| j[k..].to_vec()).collect();
        let leaf = LeafBuilder::new(
            "ivp",
            &format!("solution derivative {k} of order-{r} linear IVP at t0 = {t0}"),
            d,
            tol,
        )
        .build(ts.clone(), jets)?;
        leaves.push(Arc::new(leaf));
    }
    Ok(IvpSolution {
        order: r,
        interval,
        leaves,
        achieved_tol: (max_err * tol / 100.0).max(f64::MIN_POSITIVE),
    })
}

// ---- antiderivatives ----

/// Exact antiderivative of a single normalized term, without anchoring.
fn term_antiderivative(term: &Expression) -> Option<Expression> {
    use crate::expr::poly;
    // polynomial terms (includes constants and positive integer powers)
    if let Some(p) = poly::as_polynomial(term) {
        return Some(p.antiderivative().to_expression());
    }
    // c * (alpha t + beta)^p and c / quadratic
    let (coeff, core) = split_rational_coeff(term);
    if let crate::expr::Node::Pow(base, p) = core.node() {
        let bp = poly::as_polynomial(base)?;
        match bp.degree() {
            Some(1) => {
                let alpha = bp.coeff(1);
                if p == &-BigRational::one() {
                    // c/alpha * ln|base|
                    let factor = coeff / alpha;
                    return Some(
                        Expression::constant(factor)
                            * Expression::ln(Expression::abs(base.clone())),
                    );
                }
                let p1 = p + BigRational::one();
                let factor = coeff / (alpha * p1.clone());
                return Some(Expression::constant(factor) * Expression::pow(base.clone(), p1));
            }
            Some(2) if p == &-BigRational::one() => {
                // c / (a t^2 + b t + c2) with negative discriminant and a
                // rational square root s of 4 a c2 - b^2:
                // (2c/s) atan((2 a t + b)/s)
                let a = bp.coeff(2);
                let b = bp.coeff(1);
                let c2 = bp.coeff(0);
                let disc = BigRational::from_integer(4.into()) * &a * &c2 - &b * &b;
                let s = poly::rational_sqrt(&disc)?;
                if s == BigRational::from_integer(0.into()) {
                    return None;
                }
                let arg = Expression::constant(BigRational::from_integer(2.into()) * &a / &s)
                    * Expression::var()
                    + Expression::constant(&b / &s);
                let factor = BigRational::from_integer(2.into()) * coeff / s;
                return Some(Expression::constant(factor) * Expression::atan(arg));
            }
            _ => return None,
        }
    }
    None
}

fn split_rational_coeff(term: &Expression) -> (BigRational, Expression) {
    use crate::expr::Node;
    match term.node() {
        Node::Prod(fs) => {
            if let Node::Const(c) = fs[0].node() {
                let rest: Vec<Expression> = fs[1..].to_vec();
                let core = if rest.len() == 1 {
                    rest[0].clone()
                } else {
                    Expression::product(rest)
                };
                (c.clone(), core)
            } else {
                (BigRational::one(), term.clone())
            }
        }
        _ => (BigRational::one(), term.clone()),
    }
}

fn symbolic_antiderivative(e: &Expression) -> Option<Expression> {
    use crate::expr::Node;
    let terms: Vec<Expression> = match e.node() {
        Node::Sum(ts) => ts.clone(),
        _ => vec![e.clone()],
    };
    let mut parts = Vec::with_capacity(terms.len());
    for t in &terms {
        parts.push(term_antiderivative(t)?);
    }
    Some(Expression::sum(parts))
}

/// Antiderivative `F` with `F(t0) = 0` and `F' = e`: exact for polynomials,
/// powers of affine factors and tabulated quadratic-denominator forms,
/// otherwise a numeric leaf built by quadrature at tolerance 1e-12.
pub fn antiderivative(e: &Expression, t0: f64, interval: &Interval) -> Result<Expression> {
    antiderivative_with_order(e, t0, interval, 12)
}

/// Same, with a chosen derivative order for the numeric fallback leaf.
pub fn antiderivative_with_order(
    e: &Expression,
    t0: f64,
    interval: &Interval,
    order: usize,
) -> Result<Expression> {
    if !interval.contains(t0) {
        return Err(Error::new(
            ErrorCode::OutOfInterval,
            format!("anchor t0 = {t0} outside interval {interval}"),
        ));
    }
    let en = e.normalized();
    if let Some(raw) = symbolic_antiderivative(&en) {
        // anchor exactly: F - F(t0), with t0 as an exact dyadic rational
        let t0_expr = Expression::constant(
            BigRational::from_float(t0)
                .ok_or_else(|| Error::new(ErrorCode::Usage, "non-finite anchor"))?,
        );
        let at_t0 = raw.substitute_var(&t0_expr)?;
        return Ok(raw - at_t0);
    }

    struct QuadRhs<'a> {
        e: &'a Expression,
    }
    impl Rhs for QuadRhs<'_> {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, t: f64, _y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = self.e.evaluate(t)?;
            Ok(())
        }
    }
    let tol = 1e-12;
    let rhs = QuadRhs { e: &en };
    let h_max = interval.length() / 64.0;
    let guard = |_: f64, _: &[f64]| true;
    let wrap = |err: Error| {
        Error::new(
            ErrorCode::NonIntegrableSingularity,
            format!("quadrature failed: {err}"),
        )
    };
    let right = if t0 < interval.hi() {
        Some(integrate(&rhs, t0, &[0.0], interval.hi(), tol, h_max, &guard).map_err(wrap)?)
    } else {
        None
    };
    let left = if t0 > interval.lo() {
        Some(integrate(&rhs, t0, &[0.0], interval.lo(), tol, h_max, &guard).map_err(wrap)?)
    } else {
        None
    };
    let (ts, vals, _) = merge_two_sided(left, right, t0, &[0.0]);
    let stored = match en.jet_capacity() {
        Some(cap) => order.min(cap + 1),
        None => order,
    };
    let mut jets = Vec::with_capacity(ts.len());
    for (t, v) in ts.iter().zip(vals.iter()) {
        let mut jet = vec![v[0]];
        jet.extend(jet_of_expr(&en, *t, stored - 1)?);
        jets.push(jet);
    }
    let leaf = LeafBuilder::new(
        "quad",
        &format!("antiderivative of {en} anchored at t0 = {t0}"),
        stored.saturating_sub(2).max(1),
        tol,
    )
    .build(ts, jets)?;
    Ok(Expression::leaf(Arc::new(leaf)))
}

/// Numeric Wronskian of expressions at a point (row `i` holds `i`-th
/// derivatives), via in-place Gaussian elimination.
pub fn wronskian_value(fns: &[Expression], t: f64) -> Result<f64> {
    let n = fns.len();
    let mut m = vec![vec![0.0; n]; n];
    for (j, f) in fns.iter().enumerate() {
        let series = taylor_of_expr(f, t, n - 1)?;
        let jet = series.to_jet();
        for i in 0..n {
            m[i][j] = jet[i];
        }
    }
    Ok(det_in_place(&mut m))
}

pub(crate) fn det_in_place(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let (pivot, _) = m
            .iter()
            .enumerate()
            .skip(col)
            .map(|(i, row)| (i, row[col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            for j in col..n {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    det
}
