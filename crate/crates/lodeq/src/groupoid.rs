//! Admissible transformations as first-class triples, admissibility
//! verification, and membership predicates for the equivalence group of each
//! canonical class (with the homogeneous-subclass variants).

use crate::error::Result;
use crate::expr::{sup_norm, Expression};
use crate::ode::{ClassTag, LinearOde};
use crate::taylor::jet_of_expr;
use crate::transform::{
    fit_mobius, half_power_of, quotient_is_constant, schwarzian, PointTransformation,
};

/// A triple (source, target, transformation) claimed to satisfy
/// `transformation(source) = target`.
#[derive(Debug, Clone)]
pub struct AdmissibleTransformation {
    pub source: LinearOde,
    pub target: LinearOde,
    pub tau: PointTransformation,
}

/// Worst coefficient deviation seen by `verify_admissible`.
#[derive(Debug, Clone, Default)]
pub struct AdmissibilityDiagnostics {
    /// Index of the worst coefficient (`order` means the right-hand side).
    pub worst_coefficient: usize,
    pub worst_deviation: f64,
    pub worst_location: f64,
}

const SAMPLES: usize = 50;
const SCHWARZIAN_TOL: f64 = 1e-7;

/// True when applying the transformation to the source reproduces the target
/// coefficientwise (relative tolerance `tol` at Chebyshev samples).
pub fn verify_admissible(
    cand: &AdmissibleTransformation,
    tol: f64,
) -> Result<(bool, AdmissibilityDiagnostics)> {
    let image = cand.tau.apply_to_ode(&cand.source)?;
    let r = image.order();
    let dom = match image.interval().intersect(cand.target.interval()) {
        Some(d) => d,
        None => {
            return Ok((
                false,
                AdmissibilityDiagnostics {
                    worst_coefficient: 0,
                    worst_deviation: f64::INFINITY,
                    worst_location: f64::NAN,
                },
            ))
        }
    };
    let mut diag = AdmissibilityDiagnostics::default();
    let mut ok = true;
    for m in 0..=r {
        let (left, right) = if m < r {
            (image.coeff(m), cand.target.coeff(m))
        } else {
            (image.rhs(), cand.target.rhs())
        };
        for s in dom.chebyshev_samples(SAMPLES) {
            let (a, b) = match (left.evaluate(s), right.evaluate(s)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            let dev = (a - b).abs() / (1.0 + a.abs());
            if dev > diag.worst_deviation {
                diag.worst_deviation = dev;
                diag.worst_coefficient = m;
                diag.worst_location = s;
            }
            if dev > tol {
                ok = false;
            }
        }
    }
    Ok((ok, diag))
}

/// Structural membership test for the equivalence group of a class:
///
/// * `L`  - any valid point transformation;
/// * `L1` - `X1 = C T_t^((r-1)/2)` (absolute value for even order);
/// * `L2` - additionally `S(T) = 0` (fractional-linear `T`);
/// * `A1` - constant `X1`;
/// * `A2` - fractional-linear `T` with `X1 (gamma t + delta)` constant.
///
/// Homogeneous variants additionally require `X0 = 0`.
pub fn in_equivalence_group(
    tau: &PointTransformation,
    class: ClassTag,
    order: usize,
    homogeneous: bool,
    tol: f64,
) -> Result<(bool, String)> {
    let iv = tau.source();
    if homogeneous && !crate::ode::coeff_is_zero(tau.x0(), iv, tol) {
        return Ok((false, "homogeneous variant requires X0 = 0".to_string()));
    }
    let tt = tau.t_map().differentiate(1)?;
    match class {
        ClassTag::L => Ok((true, "general point transformation".to_string())),
        ClassTag::L1 => {
            let den = half_power_of(tt, order);
            if quotient_is_constant(tau.x1(), &den, iv, tol)? {
                Ok((
                    true,
                    "X1 is a constant multiple of T_t^((r-1)/2)".to_string(),
                ))
            } else {
                Ok((false, "X1 / T_t^((r-1)/2) is not constant".to_string()))
            }
        }
        ClassTag::L2 => {
            let den = half_power_of(tt, order);
            if !quotient_is_constant(tau.x1(), &den, iv, tol)? {
                return Ok((false, "X1 / T_t^((r-1)/2) is not constant".to_string()));
            }
            let s = schwarzian(tau.t_map())?;
            if sup_norm(&s, iv, SAMPLES)? <= SCHWARZIAN_TOL {
                Ok((
                    true,
                    "T is fractional linear and X1 has the required power shape".to_string(),
                ))
            } else {
                Ok((false, "Schwarzian of T is nonzero".to_string()))
            }
        }
        ClassTag::A1 => {
            let d = tau.x1().differentiate(1)?;
            if crate::ode::coeff_is_zero(&d, iv, tol) {
                Ok((true, "X1 is constant".to_string()))
            } else {
                Ok((false, "X1 is not constant".to_string()))
            }
        }
        ClassTag::A2 => {
            let params = match fit_mobius(tau.t_map(), iv)? {
                Some(p) => p,
                None => return Ok((false, "T is not fractional linear".to_string())),
            };
            let [_, _, c, d] = params;
            let den =
                Expression::constant(num_rational::BigRational::from_float(c).unwrap_or_default())
                    * Expression::var()
                    + Expression::constant(
                        num_rational::BigRational::from_float(d).unwrap_or_default(),
                    );
            let product = tau.x1().clone() * den;
            let dp = product.differentiate(1)?;
            let val = product.evaluate(iv.midpoint())?;
            if crate::ode::coeff_is_zero(&dp, iv, tol) && val.abs() > tol {
                Ok((
                    true,
                    "T fractional linear and X1 (gamma t + delta) constant".to_string(),
                ))
            } else {
                Ok((
                    false,
                    "X1 does not match 1/(gamma t + delta) up to a constant".to_string(),
                ))
            }
        }
    }
}

fn solves_homogeneous(candidate: &Expression, source: &LinearOde, tol: f64) -> Result<bool> {
    if candidate.is_zero() {
        return Ok(true);
    }
    let hom = source.homogeneous_part();
    let r = hom.order();
    let dom = match candidate.leaf_domain().map(|d| d.intersect(hom.interval())) {
        Some(Some(d)) => d,
        Some(None) => return Ok(false),
        None => *hom.interval(),
    };
    let mut scale: f64 = 1.0;
    for m in 0..r {
        scale = scale.max(sup_norm(hom.coeff(m), &dom, 20)?);
    }
    scale = scale.max(sup_norm(candidate, &dom, 20)?);
    for s in dom.chebyshev_samples(20) {
        let jet = match jet_of_expr(candidate, s, r) {
            Ok(j) => j,
            Err(_) => return Ok(false),
        };
        if hom.residual(&jet, s)?.abs() > tol * (1.0 + scale) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shape test for admissibility from a given source, per canonical class:
/// the transformation implies candidate solutions of the source's
/// homogeneous part, which are verified by residual sampling.
///
/// * `A1`: `psi_1 = 1/X1` solves the source;
/// * `A2`: `psi_1 = 1/X1` and `psi_2 = T/X1` both solve it;
/// * homogeneous `L`/`A1`/`A2`: additionally `X0/X1` solves it;
/// * homogeneous `L1`: `T_t^-((r-1)/2) X0` solves it;
/// * homogeneous `L2`: `(gamma t + delta)^(r-1) X0` solves it;
/// * inhomogeneous `L`/`L1`/`L2`: the classes are normalized, so the shape
///   condition coincides with equivalence-group membership.
pub fn admissible_shape(
    tau: &PointTransformation,
    source: &LinearOde,
    class: ClassTag,
    homogeneous: bool,
    tol: f64,
) -> Result<(bool, String)> {
    let r = source.order();
    let x1_inv = Expression::powi(tau.x1().clone(), -1);
    match class {
        ClassTag::L | ClassTag::L1 | ClassTag::L2 => {
            if !homogeneous {
                return in_equivalence_group(tau, class, r, false, tol);
            }
            let candidate = match class {
                ClassTag::L => tau.x0().clone() * x1_inv,
                ClassTag::L1 => {
                    let tt = tau.t_map().differentiate(1)?;
                    Expression::powi(half_power_of(tt, r), -1) * tau.x0().clone()
                }
                _ => {
                    let params = match fit_mobius(tau.t_map(), tau.source())? {
                        Some(p) => p,
                        None => return Ok((false, "T is not fractional linear".to_string())),
                    };
                    let den = Expression::constant(
                        num_rational::BigRational::from_float(params[2]).unwrap_or_default(),
                    ) * Expression::var()
                        + Expression::constant(
                            num_rational::BigRational::from_float(params[3]).unwrap_or_default(),
                        );
                    Expression::powi(den, (r - 1) as i64) * tau.x0().clone()
                }
            };
            if solves_homogeneous(&candidate, source, tol)? {
                Ok((true, "shift candidate solves the source".to_string()))
            } else {
                Ok((
                    false,
                    "shift candidate does not solve the source".to_string(),
                ))
            }
        }
        ClassTag::A1 | ClassTag::A2 => {
            let psi1 = x1_inv.clone();
            if !solves_homogeneous(&psi1, source, tol)? {
                return Ok((false, "1/X1 does not solve the source".to_string()));
            }
            if class == ClassTag::A2 {
                let psi2 = tau.t_map().clone() * x1_inv.clone();
                if !solves_homogeneous(&psi2, source, tol)? {
                    return Ok((false, "T/X1 does not solve the source".to_string()));
                }
            }
            if homogeneous {
                let shift = tau.x0().clone() * x1_inv;
                if !solves_homogeneous(&shift, source, tol)? {
                    return Ok((false, "X0/X1 does not solve the source".to_string()));
                }
            }
            Ok((true, "implied solutions verified".to_string()))
        }
    }
}
