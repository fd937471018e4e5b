//! Shared corpus generators for the integration suites: seeded random
//! rational polynomials, equations and transformations.

#![allow(dead_code)]

use lodeq::expr::Expression;
use lodeq::interval::Interval;
use lodeq::ode::LinearOde;
use lodeq::transform::PointTransformation;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

/// Exact rational in `[-scale, scale]` with denominator 16.
pub fn random_rational(rng: &mut ChaCha8Rng, scale: i64) -> BigRational {
    let n = rng.gen_range(-16 * scale..=16 * scale);
    BigRational::new(BigInt::from(n), BigInt::from(16))
}

/// Random polynomial of degree at most `deg` with coefficients in
/// `[-scale, scale]`.
pub fn random_poly(rng: &mut ChaCha8Rng, deg: usize, scale: i64) -> Expression {
    let t = Expression::var();
    let terms = (0..=deg)
        .map(|k| {
            Expression::constant(random_rational(rng, scale))
                * Expression::powi(t.clone(), k as i64)
        })
        .collect();
    Expression::sum(terms)
}

/// Random homogeneous-or-not linear ODE with polynomial coefficients of
/// degree at most 3 and values in roughly `[-2, 2]`.
pub fn random_ode(
    rng: &mut ChaCha8Rng,
    order: usize,
    interval: Interval,
    homogeneous: bool,
) -> LinearOde {
    let coeffs = (0..order).map(|_| random_poly(rng, 3, 2)).collect();
    let rhs = if homogeneous {
        Expression::zero()
    } else {
        random_poly(rng, 2, 1)
    };
    LinearOde::new(order, coeffs, rhs, interval).unwrap()
}

/// Random point transformation of the general class shape: monotone
/// polynomial time map `T = b + a t + c t^3` (occasionally decreasing),
/// exponential-of-polynomial `X1`, polynomial `X0`.
pub fn random_trans1(rng: &mut ChaCha8Rng, interval: Interval) -> PointTransformation {
    let t = Expression::var();
    let a = Expression::constant(BigRational::new(
        BigInt::from(rng.gen_range(8i64..=24)),
        BigInt::from(16),
    ));
    let b = Expression::constant(random_rational(rng, 1));
    let c = Expression::constant(BigRational::new(
        BigInt::from(rng.gen_range(0i64..=4)),
        BigInt::from(16),
    ));
    let mut t_map = b + a * t.clone() + c * Expression::powi(t.clone(), 3);
    if rng.gen_bool(0.25) {
        t_map = -t_map;
    }
    let q = random_poly(rng, 2, 1);
    let mut x1 = Expression::exp(Expression::ratio(1, 4) * q);
    if rng.gen_bool(0.25) {
        x1 = -x1;
    }
    let x0 = random_poly(rng, 3, 1);
    PointTransformation::new(t_map, x1, x0, interval).unwrap()
}

/// True when the two equations agree coefficientwise (and in the right-hand
/// side) on the intersection of their intervals.
pub fn odes_equiv(a: &LinearOde, b: &LinearOde, tol: f64) -> bool {
    let dom = match a.interval().intersect(b.interval()) {
        Some(d) => d,
        None => return false,
    };
    for m in 0..a.order() {
        match lodeq::expr::equiv_numeric(a.coeff(m), b.coeff(m), &dom, 32, tol) {
            Ok(true) => {}
            _ => return false,
        }
    }
    matches!(
        lodeq::expr::equiv_numeric(a.rhs(), b.rhs(), &dom, 32, tol),
        Ok(true)
    )
}
