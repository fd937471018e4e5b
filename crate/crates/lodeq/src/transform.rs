//! Point transformations `t~ = T(t)`, `x~ = X1(t) x + X0(t)` acting on
//! equations and solutions, with groupoid algebra (composition, inversion).
//!
//! The action on an equation maintains the affine representation
//! `x~^(k) = sum_m alpha_{k,m}(t) x^(m) + beta_k(t)`, pushed up one order at
//! a time by the total-derivative recurrence divided by `T_t`; the r-th
//! derivative of the source equation is eliminated and the triangular system
//! for the target coefficients is solved from order r-1 downward, dividing
//! only by the nonvanishing diagonal `X1 / T_t^k`. Target coefficients are
//! expressed in the target variable by composing with the inverse of `T`:
//! closed-form substitution when `T` is affine or fractional linear and the
//! coefficient is leaf-free, a dense leaf built by local series inversion
//! otherwise.

use crate::error::{Error, ErrorCode, Result};
use crate::expr::{poly, Expression, LeafBuilder};
use crate::interval::Interval;
use crate::ode::LinearOde;
use crate::taylor::taylor_of_expr;
use num_rational::BigRational;
use std::sync::Arc;

const COMPOSE_SEGMENTS: usize = 64;
const COMPOSE_ORDER_DEFAULT: usize = 16;
const VALIDITY_SAMPLES: usize = 50;

/// An invertible point transformation with affine action on `x`.
#[derive(Debug, Clone)]
pub struct PointTransformation {
    t_map: Expression,
    x1: Expression,
    x0: Expression,
    source: Interval,
    target: Interval,
    increasing: bool,
}

impl PointTransformation {
    /// Validates `T_t != 0` and `X1 != 0` on the source interval by a
    /// sampled sign-consistency check.
    pub fn new(
        t_map: Expression,
        x1: Expression,
        x0: Expression,
        source: Interval,
    ) -> Result<Self> {
        let t_map = t_map.normalized();
        let x1 = x1.normalized();
        let x0 = x0.normalized();
        let tt = t_map.differentiate(1).map_err(|e| {
            Error::new(
                ErrorCode::VanishingTt,
                format!("cannot differentiate T: {e}"),
            )
        })?;
        check_nonvanishing(&tt, &source, "T_t", ErrorCode::VanishingTt)?;
        check_nonvanishing(&x1, &source, "X1", ErrorCode::VanishingX1)?;
        let lo_img = t_map.evaluate(source.lo())?;
        let hi_img = t_map.evaluate(source.hi())?;
        let target = Interval::from_endpoints(lo_img, hi_img).map_err(|_| {
            Error::new(
                ErrorCode::VanishingTt,
                "T maps the source interval to a degenerate target",
            )
        })?;
        Ok(PointTransformation {
            t_map,
            x1,
            x0,
            source,
            target,
            increasing: hi_img > lo_img,
        })
    }

    pub fn identity(interval: Interval) -> Self {
        PointTransformation {
            t_map: Expression::var(),
            x1: Expression::one(),
            x0: Expression::zero(),
            source: interval,
            target: interval,
            increasing: true,
        }
    }

    pub fn t_map(&self) -> &Expression {
        &self.t_map
    }

    pub fn x1(&self) -> &Expression {
        &self.x1
    }

    pub fn x0(&self) -> &Expression {
        &self.x0
    }

    pub fn source(&self) -> &Interval {
        &self.source
    }

    pub fn target(&self) -> &Interval {
        &self.target
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    /// Same transformation restricted to a subinterval of its source.
    pub fn restricted(&self, source: Interval) -> Result<PointTransformation> {
        PointTransformation::new(self.t_map.clone(), self.x1.clone(), self.x0.clone(), source)
    }

    /// The unique monic linear ODE in the target variables satisfied by
    /// transported solutions.
    pub fn apply_to_ode(&self, ode: &LinearOde) -> Result<LinearOde> {
        if !self.source.contains_interval(ode.interval()) {
            return Err(Error::new(
                ErrorCode::IntervalMismatch,
                format!(
                    "equation interval {} not contained in transformation source {}",
                    ode.interval(),
                    self.source
                ),
            ));
        }
        let r = ode.order();
        let span = *ode.interval();
        let tt = self.t_map.differentiate(1)?;
        let tt_inv = Expression::powi(tt.clone(), -1);

        // x~^(k) = sum_m alpha[k][m] x^(m) + beta[k]
        let mut alpha: Vec<Vec<Expression>> = vec![vec![self.x1.clone()]];
        let mut beta: Vec<Expression> = vec![self.x0.clone()];
        for k in 0..r {
            let prev = &alpha[k];
            let mut next = Vec::with_capacity(k + 2);
            for m in 0..=k + 1 {
                let da = if m <= k {
                    prev[m].differentiate(1)?
                } else {
                    Expression::zero()
                };
                let shift = if m >= 1 && m - 1 <= k {
                    prev[m - 1].clone()
                } else {
                    Expression::zero()
                };
                next.push((da + shift) * tt_inv.clone());
            }
            alpha.push(next);
            beta.push(beta[k].differentiate(1)? * tt_inv.clone());
        }

        // eliminate x^(r) via the source equation
        let lead = alpha[r][r].clone();
        let mut hat: Vec<Expression> = (0..r)
            .map(|m| alpha[r][m].clone() - lead.clone() * ode.coeff(m).clone())
            .collect();
        let beta_hat = beta[r].clone() + lead * ode.rhs().clone();

        // triangular solve from order r-1 downward; the diagonal is
        // alpha[m][m] = X1 / T_t^m
        let x1_inv = Expression::powi(self.x1.clone(), -1);
        let mut target_in_t: Vec<Option<Expression>> = vec![None; r];
        for m in (0..r).rev() {
            let mut acc = hat[m].clone();
            for k in m + 1..r {
                acc = acc + target_in_t[k].clone().unwrap() * alpha[k][m].clone();
            }
            let value = -acc * Expression::powi(tt.clone(), m as i64) * x1_inv.clone();
            target_in_t[m] = Some(value);
        }
        hat.clear();
        let mut rhs_in_t = beta_hat;
        for (k, a) in target_in_t.iter().enumerate() {
            rhs_in_t = rhs_in_t + a.clone().unwrap() * beta[k].clone();
        }

        let hint = r + 8;
        let mut coeffs = Vec::with_capacity(r);
        for a in target_in_t.into_iter() {
            coeffs.push(compose_with_inverse(&a.unwrap(), &self.t_map, &span, hint)?);
        }
        let rhs = compose_with_inverse(&rhs_in_t, &self.t_map, &span, hint)?;
        let target = Interval::from_endpoints(
            self.t_map.evaluate(span.lo())?,
            self.t_map.evaluate(span.hi())?,
        )?;
        LinearOde::new(r, coeffs, rhs, target)
    }

    /// Transported solution `x~(t~) = X1(T^-1) x(T^-1) + X0(T^-1)`.
    pub fn transport_solution(&self, x: &Expression) -> Result<Expression> {
        let u = self.x1.clone() * x.clone() + self.x0.clone();
        compose_with_inverse(&u, &self.t_map, &self.source, 10)
    }

    /// `after` composed with `before` (apply `before` first).
    pub fn compose(
        after: &PointTransformation,
        before: &PointTransformation,
    ) -> Result<PointTransformation> {
        if !after.source.contains_interval(&before.target) {
            return Err(Error::new(
                ErrorCode::IntervalMismatch,
                format!(
                    "target {} of the first map not contained in source {} of the second",
                    before.target, after.source
                ),
            ));
        }
        let t_map = compose_forward(&after.t_map, &before.t_map, &before.source)?;
        let w = compose_forward(&after.x1, &before.t_map, &before.source)?;
        let x1 = w.clone() * before.x1.clone();
        let x0 = w * before.x0.clone() + compose_forward(&after.x0, &before.t_map, &before.source)?;
        PointTransformation::new(t_map, x1, x0, before.source)
    }

    /// Groupoid inverse: `T^-1`, `1/(X1 o T^-1)`, `-(X0/X1) o T^-1`.
    pub fn invert(&self) -> Result<PointTransformation> {
        let t_inv = compose_with_inverse(
            &Expression::var(),
            &self.t_map,
            &self.source,
            COMPOSE_ORDER_DEFAULT,
        )?;
        let x1_inv = compose_with_inverse(
            &Expression::powi(self.x1.clone(), -1),
            &self.t_map,
            &self.source,
            COMPOSE_ORDER_DEFAULT,
        )?;
        let x0_inv = compose_with_inverse(
            &(-(self.x0.clone()) * Expression::powi(self.x1.clone(), -1)),
            &self.t_map,
            &self.source,
            COMPOSE_ORDER_DEFAULT,
        )?;
        PointTransformation::new(t_inv, x1_inv, x0_inv, self.target)
    }
}

fn check_nonvanishing(
    e: &Expression,
    interval: &Interval,
    what: &str,
    code: ErrorCode,
) -> Result<()> {
    let scale = 1e-9;
    let mut sign = 0.0f64;
    let mut samples = interval.chebyshev_samples(VALIDITY_SAMPLES);
    samples.push(interval.lo() + 1e-9 * interval.length());
    samples.push(interval.hi() - 1e-9 * interval.length());
    for s in samples {
        let v = e
            .evaluate(s)
            .map_err(|err| Error::new(code, format!("{what} not evaluable: {err}")))?;
        if v.abs() <= scale {
            return Err(Error::new(
                code,
                format!("{what} vanishes near t = {s} (value {v:e})"),
            ));
        }
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            return Err(Error::new(
                code,
                format!("{what} changes sign on the interval, so it vanishes inside"),
            ));
        }
    }
    Ok(())
}

/// `(a t + b)/(c t + d)` as an expression.
fn linear_fraction_expr(
    a: &BigRational,
    b: &BigRational,
    c: &BigRational,
    d: &BigRational,
) -> Expression {
    let t = Expression::var();
    let num = Expression::constant(a.clone()) * t.clone() + Expression::constant(b.clone());
    let den = Expression::constant(c.clone()) * t + Expression::constant(d.clone());
    num / den
}

/// Closed-form inverse when `T` is affine or fractional linear.
fn structural_inverse(t_map: &Expression) -> Option<Expression> {
    let (a, b, c, d) = poly::as_fractional_linear(t_map)?;
    // inverse of (a t + b)/(c t + d) is (d s - b)/(-c s + a)
    Some(linear_fraction_expr(&d, &(-b), &(-c), &a))
}

/// `h` with `h(T(t)) = f(t)` on `T(source)`.
pub(crate) fn compose_with_inverse(
    f: &Expression,
    t_map: &Expression,
    source: &Interval,
    hint: usize,
) -> Result<Expression> {
    if t_map.is_var() {
        return Ok(f.clone());
    }
    if f.is_closed_form() {
        if let Some(inv) = structural_inverse(t_map) {
            return f.substitute_var(&inv);
        }
    }
    if matches!(f.substitute_var(&Expression::zero()), Ok(c) if c == *f) {
        // constants need no re-expression
        return Ok(f.clone());
    }
    // store two extra series orders beyond the declared leaf capacity, so
    // every declared derivative interpolates with a full-degree table
    let stored = effective_order(hint + 2, &[f, t_map], 1)?;
    let declared = stored.saturating_sub(2);
    let nodes = source.uniform_nodes(COMPOSE_SEGMENTS);
    let mut pairs = Vec::with_capacity(nodes.len());
    for &t in &nodes {
        let series_t = taylor_of_expr(t_map, t, stored)?;
        let s = series_t.value();
        let mut incr = series_t.clone();
        incr = incr.sub(&Taylorish::constant_like(&incr));
        let inv = incr.invert().map_err(|e| {
            Error::new(
                ErrorCode::InverseConstruction,
                format!("local inversion of T failed at t = {t}: {e}"),
            )
        })?;
        let series_f = taylor_of_expr(f, t, stored)?;
        let jets = series_f.compose(&inv).to_jet();
        pairs.push((s, jets));
    }
    if !pairs.windows(2).all(|w| w[0].0 < w[1].0) {
        pairs.reverse();
        if !pairs.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::new(
                ErrorCode::InverseConstruction,
                "T is not strictly monotone on the composition mesh",
            ));
        }
    }
    let (s_nodes, jets): (Vec<f64>, Vec<Vec<f64>>) = pairs.into_iter().unzip();
    let leaf = LeafBuilder::new(
        "comp",
        &format!("composition with the inverse of {t_map}"),
        declared,
        1e-12,
    )
    .build(s_nodes, jets)?;
    Ok(Expression::leaf(Arc::new(leaf)))
}

/// `f(g(t))` on `domain` (in `g`'s variable).
pub(crate) fn compose_forward(
    f: &Expression,
    g: &Expression,
    domain: &Interval,
) -> Result<Expression> {
    if g.is_var() {
        return Ok(f.clone());
    }
    if f.is_closed_form() {
        return f.substitute_var(g);
    }
    let stored = effective_order(COMPOSE_ORDER_DEFAULT + 2, &[f, g], 1)?;
    let declared = stored.saturating_sub(2);
    let nodes = domain.uniform_nodes(COMPOSE_SEGMENTS);
    let mut jets = Vec::with_capacity(nodes.len());
    for &t in &nodes {
        let series_g = taylor_of_expr(g, t, stored)?;
        let series_f = taylor_of_expr(f, series_g.value(), stored)?;
        let incr = series_g.sub(&Taylorish::constant_like(&series_g));
        jets.push(series_f.compose(&incr).to_jet());
    }
    let leaf = LeafBuilder::new(
        "comp",
        &format!("composition of {f} after a map"),
        declared,
        1e-12,
    )
    .build(nodes, jets)?;
    Ok(Expression::leaf(Arc::new(leaf)))
}

fn effective_order(hint: usize, exprs: &[&Expression], min_needed: usize) -> Result<usize> {
    let mut order = hint;
    for e in exprs {
        if let Some(cap) = e.jet_capacity() {
            order = order.min(cap);
        }
    }
    if order < min_needed {
        return Err(Error::new(
            ErrorCode::DerivativeOrderExceeded,
            "numeric leaves do not carry enough derivatives for this composition",
        ));
    }
    Ok(order)
}

// small helper to zero out the constant coefficient of a series
struct Taylorish;
impl Taylorish {
    fn constant_like(s: &crate::taylor::Taylor) -> crate::taylor::Taylor {
        crate::taylor::Taylor::constant(s.value(), s.order())
    }
}

/// Schwarzian derivative `S(T) = T'''/T' - (3/2)(T''/T')^2`.
pub fn schwarzian(t_map: &Expression) -> Result<Expression> {
    let t1 = t_map.differentiate(1)?;
    let t2 = t_map.differentiate(2)?;
    let t3 = t_map.differentiate(3)?;
    let ratio1 = t3 * Expression::powi(t1.clone(), -1);
    let ratio2 = t2 * Expression::powi(t1, -1);
    Ok(ratio1 - Expression::ratio(3, 2) * Expression::powi(ratio2, 2))
}

/// Fractional-linear parameters of `T`, recovered by sampling: solve
/// `alpha t + beta - T(t) (gamma t + delta) = 0` at four points, normalize
/// `alpha delta - beta gamma = +-1` with a sign tie-break, then verify
/// globally. Returns `(alpha, beta, gamma, delta)`.
pub fn fit_mobius(t_map: &Expression, interval: &Interval) -> Result<Option<[f64; 4]>> {
    // exact structural detection first
    if let Some((a, b, c, d)) = poly::as_fractional_linear(t_map) {
        use num_traits::ToPrimitive;
        let mut v = [
            a.to_f64().unwrap_or(f64::NAN),
            b.to_f64().unwrap_or(f64::NAN),
            c.to_f64().unwrap_or(f64::NAN),
            d.to_f64().unwrap_or(f64::NAN),
        ];
        if v.iter().all(|x| x.is_finite()) {
            normalize_mobius(&mut v);
            return Ok(Some(v));
        }
    }
    let pts = interval.chebyshev_samples(4);
    let mut m = vec![vec![0.0f64; 4]; 4];
    for (row, &t) in pts.iter().enumerate() {
        let v = match t_map.evaluate(t) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        m[row] = vec![t, 1.0, -v * t, -v];
    }
    let sol = match null_vector(&mut m) {
        Some(s) => s,
        None => return Ok(None),
    };
    let mut params = [sol[0], sol[1], sol[2], sol[3]];
    let det = params[0] * params[3] - params[1] * params[2];
    if det.abs() < 1e-12 {
        return Ok(None);
    }
    normalize_mobius(&mut params);
    // verify globally
    let [a, b, c, d] = params;
    for t in interval.chebyshev_samples(VALIDITY_SAMPLES) {
        let den = c * t + d;
        if den.abs() < 1e-12 {
            return Ok(None);
        }
        let v = match t_map.evaluate(t) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        if (v - (a * t + b) / den).abs() > 1e-7 * (1.0 + v.abs()) {
            return Ok(None);
        }
    }
    Ok(Some(params))
}

/// Scale so that `|alpha delta - beta gamma| = 1`, tie-breaking the overall
/// sign with `alpha >= 0` (then `gamma >= 0` when `alpha = 0`).
fn normalize_mobius(p: &mut [f64; 4]) {
    let det = p[0] * p[3] - p[1] * p[2];
    let s = det.abs().sqrt();
    for v in p.iter_mut() {
        *v /= s;
    }
    let flip = if p[0] != 0.0 {
        p[0] < 0.0
    } else if p[2] != 0.0 {
        p[2] < 0.0
    } else {
        p[1] < 0.0
    };
    if flip {
        for v in p.iter_mut() {
            *v = -*v;
        }
    }
}

/// Unit-norm null vector of a 4x4 system via elimination with full pivoting
/// on rows; returns None when the matrix has full rank.
fn null_vector(m: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = 4usize;
    let mut pivot_cols = Vec::new();
    let mut row = 0usize;
    for col in 0..n {
        let (best, mag) = (row..n)
            .map(|i| (i, m[i][col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
        if mag < 1e-10 {
            continue;
        }
        m.swap(row, best);
        let p = m[row][col];
        for j in 0..n {
            m[row][j] /= p;
        }
        for i in 0..n {
            if i != row {
                let f = m[i][col];
                for j in 0..n {
                    m[i][j] -= f * m[row][j];
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == n {
            break;
        }
    }
    if pivot_cols.len() == n {
        return None; // full rank, only the trivial solution
    }
    let free = (0..n).find(|c| !pivot_cols.contains(c))?;
    let mut sol = vec![0.0; n];
    sol[free] = 1.0;
    for (r, &pc) in pivot_cols.iter().enumerate() {
        sol[pc] = -m[r][free];
    }
    let norm = sol.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in sol.iter_mut() {
        *v /= norm;
    }
    Some(sol)
}

/// True when the transformation is decreasing-compatible with an expression
/// claim `X1 = C * T_t^((r-1)/2)` (absolute value for even r): checks that
/// the quotient has vanishing derivative and nonzero value.
pub(crate) fn quotient_is_constant(
    num: &Expression,
    den: &Expression,
    interval: &Interval,
    tol: f64,
) -> Result<bool> {
    let q = num.clone() * Expression::powi(den.clone(), -1);
    let dq = q.differentiate(1)?;
    let scale = crate::expr::sup_norm(&q, interval, 32)?;
    if scale == 0.0 {
        return Ok(false);
    }
    let dev = crate::expr::sup_norm(&dq, interval, 32)?;
    Ok(dev <= tol * (1.0 + scale) * (1.0 + 1.0 / interval.length()))
}

pub(crate) fn half_power_of(e: Expression, r: usize) -> Expression {
    // T_t^((r-1)/2), with |T_t| under half-integer powers (even r)
    if r % 2 == 1 {
        Expression::powi(e, ((r - 1) / 2) as i64)
    } else {
        Expression::pow(
            Expression::abs(e),
            BigRational::new(((r - 1) as i64).into(), 2.into()),
        )
    }
}
