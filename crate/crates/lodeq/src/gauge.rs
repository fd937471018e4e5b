//! Constructive reductions to the rational, Laguerre-Forsyth and Arnold
//! canonical forms.
//!
//! Each gauge produces the transformation together with the gauged equation
//! and diagnostics (sup-norms of the coefficients required to vanish, and
//! the kept subinterval when nonvanishing conditions force shrinking; the
//! reductions are local, so shrinking to the largest admissible subinterval
//! around the anchor is part of the contract).

use crate::error::{Error, ErrorCode, Result};
use crate::expr::{sup_norm, Expression, LeafBuilder};
use crate::interval::Interval;
use crate::numeric::{antiderivative_with_order, integrate, solve_linear_ivp, Rhs};
use crate::ode::{coeff_is_zero, LinearOde};
use crate::taylor::jet_of_expr;
use crate::transform::{half_power_of, PointTransformation};
use std::sync::Arc;

/// A gauge outcome: the transformation, the gauged equation and residual
/// diagnostics.
#[derive(Debug, Clone)]
pub struct GaugeResult {
    pub transformation: PointTransformation,
    pub gauged: LinearOde,
    pub diagnostics: GaugeDiagnostics,
}

#[derive(Debug, Clone, Default)]
pub struct GaugeDiagnostics {
    /// `(coefficient index, sup-norm over 50 samples)` for every coefficient
    /// the gauge is required to annihilate.
    pub vanish_sup: Vec<(usize, f64)>,
    /// Set when nonvanishing conditions shrank the working interval.
    pub shrunk_from: Option<Interval>,
}

impl GaugeDiagnostics {
    pub fn worst(&self) -> f64 {
        self.vanish_sup.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

fn vanish_diagnostics(ode: &LinearOde, targets: &[usize]) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(targets.len());
    for &m in targets {
        out.push((m, sup_norm(ode.coeff(m), ode.interval(), 50)?));
    }
    Ok(out)
}

/// Annihilate `a_{r-1}` with `T = t`, `X1 = exp((1/r) int a_{r-1})`
/// (antiderivative anchored at the interval midpoint).
pub fn to_rational(ode: &LinearOde) -> Result<GaugeResult> {
    let r = ode.order();
    let interval = *ode.interval();
    if ode.coeff(r - 1).is_zero() {
        return Ok(GaugeResult {
            transformation: PointTransformation::identity(interval),
            gauged: ode.clone(),
            diagnostics: GaugeDiagnostics {
                vanish_sup: vanish_diagnostics(ode, &[r - 1])?,
                shrunk_from: None,
            },
        });
    }
    let primitive =
        antiderivative_with_order(ode.coeff(r - 1), interval.midpoint(), &interval, 2 * r + 12)?;
    let x1 = Expression::exp(Expression::ratio(1, r as i64) * primitive);
    let tau = PointTransformation::new(Expression::var(), x1, Expression::zero(), interval)?;
    let gauged = tau.apply_to_ode(ode)?;
    let diagnostics = GaugeDiagnostics {
        vanish_sup: vanish_diagnostics(&gauged, &[r - 1])?,
        shrunk_from: None,
    };
    Ok(GaugeResult {
        transformation: tau,
        gauged,
        diagnostics,
    })
}

/// Right-hand side of the reparameterization equation
/// `T''' = (3/2) T''^2 / T' + K a_{r-2}(t) T'` with
/// `K = 12 / (r (r^2 - 1))`: the Schwarzian of `T` then equals
/// `K a_{r-2}`, which annihilates the transformed `a_{r-2}`.
struct SchwarzianRhs<'a> {
    a: &'a Expression,
    k: f64,
}

impl Rhs for SchwarzianRhs<'_> {
    fn dim(&self) -> usize {
        3
    }
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let p = y[1];
        if p == 0.0 {
            return Err(Error::new(
                ErrorCode::SingularEvaluation,
                "T_t vanished during gauge integration",
            ));
        }
        dy[0] = y[1];
        dy[1] = y[2];
        dy[2] = 1.5 * y[2] * y[2] / p + self.k * self.a.evaluate(t)? * p;
        Ok(())
    }
}

/// Taylor jet of `T` at a trajectory point, from the relation
/// `T''' T' = (3/2) T''^2 + K a T'^2` solved order by order.
fn schwarzian_jet(
    a: &Expression,
    k_const: f64,
    t: f64,
    state: &[f64],
    upto: usize,
) -> Result<Vec<f64>> {
    // series coefficients u[n] = T^(n)/n!
    let mut u = vec![0.0; upto + 1];
    let mut fact = 1.0;
    for (n, s) in state.iter().enumerate().take(3.min(upto + 1)) {
        if n > 0 {
            fact *= n as f64;
        }
        u[n] = s / fact;
    }
    if upto >= 3 {
        let a_series = crate::taylor::taylor_of_expr(a, t, upto - 3)?;
        for n in 3..=upto {
            let m = n - 3; // coefficient order of the relation
            let p = |j: usize| (j as f64 + 1.0) * u[j + 1]; // T' series
            let q = |j: usize| (j as f64 + 1.0) * (j as f64 + 2.0) * u[j + 2]; // T''
            let w = |j: usize| (j as f64 + 1.0) * (j as f64 + 2.0) * (j as f64 + 3.0) * u[j + 3]; // T'''
            let mut rhs = 0.0;
            for i in 0..=m {
                rhs += 1.5 * q(i) * q(m - i);
                let mut p2 = 0.0;
                for l in 0..=(m - i) {
                    p2 += p(l) * p(m - i - l);
                }
                rhs += k_const * a_series.coeff(i) * p2;
            }
            let mut lhs_known = 0.0;
            for i in 0..m {
                lhs_known += w(i) * p(m - i);
            }
            let denom = (n as f64) * (n as f64 - 1.0) * (n as f64 - 2.0) * p(0);
            u[n] = (rhs - lhs_known) / denom;
        }
    }
    let mut jet = Vec::with_capacity(upto + 1);
    let mut f = 1.0;
    for (n, c) in u.iter().enumerate() {
        if n > 0 {
            f *= n as f64;
        }
        jet.push(c * f);
    }
    Ok(jet)
}

/// Annihilate `a_{r-1}` and `a_{r-2}` (order >= 3): the reparameterization
/// `T` solves the Schwarzian equation above with canonical initial data
/// `T(t0) = t0`, `T_t(t0) = 1`, `T_tt(t0) = 0`, and `X1 = T_t^((r-1)/2)`.
/// If `T_t` leaves `[1e-6, 1e6]` the gauge is reported on the kept
/// subinterval.
pub fn to_laguerre_forsyth(ode: &LinearOde, t0: f64) -> Result<GaugeResult> {
    let r = ode.order();
    if r < 3 {
        return Err(Error::new(
            ErrorCode::Unsupported,
            "the Laguerre-Forsyth reduction needs order at least 3",
        ));
    }
    // reach rational form first when needed
    let rational_step = if coeff_is_zero(ode.coeff(r - 1), ode.interval(), 1e-11) {
        None
    } else {
        Some(to_rational(ode)?)
    };
    let work = rational_step
        .as_ref()
        .map(|g| g.gauged.clone())
        .unwrap_or_else(|| ode.clone());
    let interval = *work.interval();
    if !interval.contains(t0) {
        return Err(Error::new(
            ErrorCode::OutOfInterval,
            format!("anchor t0 = {t0} outside interval {interval}"),
        ));
    }

    let a = work.coeff(r - 2).clone();
    let lf_tau = if a.is_zero() {
        PointTransformation::identity(interval)
    } else {
        let rf = r as f64;
        let k_const = 12.0 / (rf * (rf * rf - 1.0));
        let rhs = SchwarzianRhs { a: &a, k: k_const };
        let guard = |_: f64, y: &[f64]| y[1] > 1e-6 && y[1] < 1e6 && y[2].abs() < 1e9;
        let tol = 1e-11;
        let h_max = interval.length() / 64.0;
        let init = [t0, 1.0, 0.0];
        let right = if t0 < interval.hi() {
            Some(integrate(
                &rhs,
                t0,
                &init,
                interval.hi(),
                tol,
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
                &init,
                interval.lo(),
                tol,
                h_max,
                &guard,
            )?)
        } else {
            None
        };
        let mut ts = Vec::new();
        let mut states = Vec::new();
        if let Some(l) = &left {
            for (t, y) in l.ts.iter().zip(l.ys.iter()).skip(1).rev() {
                ts.push(*t);
                states.push(y.clone());
            }
        }
        ts.push(t0);
        states.push(init.to_vec());
        if let Some(rt) = &right {
            for (t, y) in rt.ts.iter().zip(rt.ys.iter()).skip(1) {
                ts.push(*t);
                states.push(y.clone());
            }
        }
        if ts.len() < 2 {
            return Err(Error::new(
                ErrorCode::SubintervalCollapse,
                "T_t left its admissible range immediately around t0",
            ));
        }
        let stored = (2 * r + 6).min(match a.jet_capacity() {
            Some(cap) => cap + 3,
            None => usize::MAX,
        });
        let declared = stored.saturating_sub(2);
        if declared < r + 1 {
            return Err(Error::new(
                ErrorCode::DerivativeOrderExceeded,
                "coefficient a_{r-2} is not smooth enough for the reparameterization",
            ));
        }
        let mut jets = Vec::with_capacity(ts.len());
        for (t, y) in ts.iter().zip(states.iter()) {
            jets.push(schwarzian_jet(&a, k_const, *t, y, stored)?);
        }
        let leaf = LeafBuilder::new(
            "lf_t",
            &format!(
                "time reparameterization with Schwarzian 12/(r(r^2-1)) a_{} ",
                r - 2
            ),
            declared,
            tol,
        )
        .build(ts, jets)?;
        let t_expr = Expression::leaf(Arc::new(leaf));
        let tt = t_expr.differentiate(1)?;
        let x1 = half_power_of(tt, r);
        let kept = *t_expr.leaf_domain().as_ref().unwrap_or(&interval);
        PointTransformation::new(t_expr, x1, Expression::zero(), kept)?
    };

    let kept = *lf_tau.source();
    let shrunk_from = if kept == interval {
        None
    } else {
        Some(interval)
    };
    let work_kept = if shrunk_from.is_some() {
        work.restricted(kept)?
    } else {
        work.clone()
    };
    let gauged = lf_tau.apply_to_ode(&work_kept)?;
    let transformation = match rational_step {
        Some(g1) => {
            let first = g1.transformation.restricted(kept)?;
            PointTransformation::compose(&lf_tau, &first)?
        }
        None => lf_tau,
    };
    let diagnostics = GaugeDiagnostics {
        vanish_sup: vanish_diagnostics(&gauged, &[r - 1, r - 2])?,
        shrunk_from,
    };
    Ok(GaugeResult {
        transformation,
        gauged,
        diagnostics,
    })
}

/// Largest subinterval of `interval` around `t0` on which the expression
/// keeps one sign, with a safety margin before the bracketing zero.
fn nonvanishing_subinterval(e: &Expression, interval: &Interval, t0: f64) -> Result<Interval> {
    let n = 400;
    let nodes = interval.uniform_nodes(n);
    let value = |t: f64| e.evaluate(t);
    let v0 = value(t0)?;
    if v0 == 0.0 {
        return Err(Error::new(
            ErrorCode::SubintervalCollapse,
            format!("expression vanishes at the anchor t0 = {t0}"),
        ));
    }
    let sign = v0.signum();
    let mut lo = interval.lo();
    let mut hi = interval.hi();
    let bisect = |mut inside: f64, mut outside: f64| -> f64 {
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            match value(mid) {
                Ok(v) if v.signum() == sign && v != 0.0 => inside = mid,
                _ => outside = mid,
            }
        }
        inside
    };
    // scan right of t0
    let mut prev = t0;
    for &s in nodes.iter().filter(|&&s| s > t0) {
        match value(s) {
            Ok(v) if v.signum() == sign && v != 0.0 => prev = s,
            _ => {
                hi = bisect(prev, s);
                break;
            }
        }
    }
    // scan left of t0
    let mut prev = t0;
    for &s in nodes.iter().rev().filter(|&&s| s < t0) {
        match value(s) {
            Ok(v) if v.signum() == sign && v != 0.0 => prev = s,
            _ => {
                lo = bisect(prev, s);
                break;
            }
        }
    }
    // safety margin toward the anchor
    let lo_margin = if lo > interval.lo() {
        lo + 0.05 * (t0 - lo)
    } else {
        lo
    };
    let hi_margin = if hi < interval.hi() {
        hi - 0.05 * (hi - t0)
    } else {
        hi
    };
    Interval::new(lo_margin, hi_margin).map_err(|_| {
        Error::new(
            ErrorCode::SubintervalCollapse,
            "no nonvanishing subinterval of usable size around t0",
        )
    })
}

fn build_arnold(
    ode: &LinearOde,
    t0: f64,
    t_map: Expression,
    x1: Expression,
    nonvanishing: &[Expression],
    vanish_targets: &[usize],
) -> Result<GaugeResult> {
    let interval = *ode.interval();
    let mut kept = interval;
    for e in nonvanishing {
        kept = nonvanishing_subinterval(e, &kept, t0)?;
    }
    // retry with a further shrink if the sampled validity check still
    // sees a near-zero at the margin
    let mut attempt = kept;
    let mut tau = None;
    for _ in 0..6 {
        match PointTransformation::new(t_map.clone(), x1.clone(), Expression::zero(), attempt) {
            Ok(t) => {
                tau = Some(t);
                break;
            }
            Err(_) => {
                let lo = t0 - 0.9 * (t0 - attempt.lo());
                let hi = t0 + 0.9 * (attempt.hi() - t0);
                attempt = Interval::new(lo, hi).map_err(|_| {
                    Error::new(
                        ErrorCode::SubintervalCollapse,
                        "gauge interval collapsed while enforcing nonvanishing",
                    )
                })?;
            }
        }
    }
    let tau = tau.ok_or_else(|| {
        Error::new(
            ErrorCode::SubintervalCollapse,
            "gauge interval collapsed while enforcing nonvanishing",
        )
    })?;
    let kept = *tau.source();
    let gauged = tau.apply_to_ode(&ode.restricted(kept)?)?;
    let diagnostics = GaugeDiagnostics {
        vanish_sup: vanish_diagnostics(&gauged, vanish_targets)?,
        shrunk_from: if kept == interval {
            None
        } else {
            Some(interval)
        },
    };
    Ok(GaugeResult {
        transformation: tau,
        gauged,
        diagnostics,
    })
}

/// Annihilate `a_0`: `T = t`, `X1 = 1/phi_1` with `phi_1` the homogeneous
/// solution with initial jet `(1, 0, ..., 0)` at `t0`, on the maximal
/// subinterval where `phi_1 != 0`.
pub fn to_arnold1(ode: &LinearOde, t0: f64) -> Result<GaugeResult> {
    if ode.coeff(0).is_zero() {
        return Ok(GaugeResult {
            transformation: PointTransformation::identity(*ode.interval()),
            gauged: ode.clone(),
            diagnostics: GaugeDiagnostics {
                vanish_sup: vanish_diagnostics(ode, &[0])?,
                shrunk_from: None,
            },
        });
    }
    let r = ode.order();
    let hom = ode.homogeneous_part();
    let mut init = vec![0.0; r];
    init[0] = 1.0;
    let phi1 = solve_linear_ivp(&hom, t0, &init, 1e-10)?.solution();
    let x1 = Expression::powi(phi1.clone(), -1);
    build_arnold(ode, t0, Expression::var(), x1, &[phi1], &[0])
}

/// Annihilate `a_0` and `a_1`: `T = psi_2/psi_1`, `X1 = 1/psi_1` with the
/// two canonical homogeneous solutions, on the maximal subinterval where
/// `psi_1 != 0` and `T_t != 0`. For order 2 the result is `x'' = 0`.
pub fn to_arnold2(ode: &LinearOde, t0: f64) -> Result<GaugeResult> {
    let r = ode.order();
    let hom = ode.homogeneous_part();
    let mut e1 = vec![0.0; r];
    e1[0] = 1.0;
    let mut e2 = vec![0.0; r];
    e2[1] = 1.0;
    let psi1 = solve_linear_ivp(&hom, t0, &e1, 1e-10)?.solution();
    let psi2 = solve_linear_ivp(&hom, t0, &e2, 1e-10)?.solution();
    let t_map = psi2.clone() * Expression::powi(psi1.clone(), -1);
    let x1 = Expression::powi(psi1.clone(), -1);
    // T_t = W(psi1, psi2)/psi1^2; its zeros are those of the 2x2 Wronskian
    let w2 = psi2.differentiate(1)? * psi1.clone() - psi2.clone() * psi1.differentiate(1)?;
    build_arnold(ode, t0, t_map, x1, &[psi1, w2], &[0, 1])
}

/// Sup-norm of the coefficient residual at the points the acceptance checks
/// use; small convenience shared by tests.
pub fn residual_sup(ode: &LinearOde, jets: &Expression, samples: usize) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for s in ode.interval().chebyshev_samples(samples) {
        let jet = jet_of_expr(jets, s, ode.order())?;
        sup = sup.max(ode.residual(&jet, s)?.abs());
    }
    Ok(sup)
}
