//! Fundamental solution systems, Wronskians, recovery of an equation from
//! its solution basis, and the gauge action of constant matrices on bases.

use crate::error::{Error, ErrorCode, Result};
use crate::expr::{equiv_numeric, Expression};
use crate::interval::Interval;
use crate::numeric::{solve_linear_ivp, wronskian_value};
use crate::ode::{ClassTag, LinearOde};
use num_rational::BigRational;
use num_traits::Zero;

/// An ordered solution tuple with nonvanishing Wronskian on its interval.
#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    order: usize,
    solutions: Vec<Expression>,
    interval: Interval,
}

impl FundamentalSystem {
    pub fn new(order: usize, solutions: Vec<Expression>, interval: Interval) -> Result<Self> {
        if solutions.len() != order || order < 2 {
            return Err(Error::new(
                ErrorCode::CoefficientCount,
                format!("a fundamental system of order {order} needs exactly {order} solutions"),
            ));
        }
        let fs = FundamentalSystem {
            order,
            solutions,
            interval,
        };
        // nonvanishing Wronskian, sampled
        for t in interval.chebyshev_samples(20) {
            let w = wronskian_value(&fs.solutions, t)?;
            if w.abs() < 1e-12 {
                return Err(Error::new(
                    ErrorCode::WronskianVanishes,
                    format!("Wronskian vanishes near t = {t} (value {w:e})"),
                ));
            }
        }
        Ok(fs)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn solutions(&self) -> &[Expression] {
        &self.solutions
    }

    pub fn solution(&self, i: usize) -> &Expression {
        &self.solutions[i]
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }
}

/// Constant gauge matrix acting on solution tuples, with an optional shift
/// vector used by the generalized transformation formulas of homogeneous
/// classes.
#[derive(Debug, Clone)]
pub struct GaugeMatrix {
    mu: Vec<Vec<BigRational>>,
    nu: Option<Vec<BigRational>>,
}

impl GaugeMatrix {
    pub fn new(mu: Vec<Vec<BigRational>>, nu: Option<Vec<BigRational>>) -> Result<Self> {
        let n = mu.len();
        if n == 0 || mu.iter().any(|row| row.len() != n) {
            return Err(Error::new(
                ErrorCode::SingularGaugeMatrix,
                "gauge matrix must be square",
            ));
        }
        if let Some(nu) = &nu {
            if nu.len() != n {
                return Err(Error::new(
                    ErrorCode::SingularGaugeMatrix,
                    "shift vector length must match the matrix dimension",
                ));
            }
        }
        if rational_det(&mu).is_zero() {
            return Err(Error::new(
                ErrorCode::SingularGaugeMatrix,
                "gauge matrix is singular",
            ));
        }
        Ok(GaugeMatrix { mu, nu })
    }

    pub fn identity(n: usize) -> Self {
        let mut mu = vec![vec![BigRational::zero(); n]; n];
        for (i, row) in mu.iter_mut().enumerate() {
            row[i] = BigRational::from_integer(1.into());
        }
        GaugeMatrix { mu, nu: None }
    }

    pub fn mu(&self) -> &[Vec<BigRational>] {
        &self.mu
    }

    pub fn nu(&self) -> Option<&[BigRational]> {
        self.nu.as_deref()
    }
}

fn rational_det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = BigRational::zero();
    let mut sign = BigRational::from_integer(1.into());
    for col in 0..n {
        let minor: Vec<Vec<BigRational>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        det += &sign * &m[0][col] * rational_det(&minor);
        sign = -sign;
    }
    det
}

/// Exact cofactor-expansion determinant over the expression algebra.
fn expression_det(m: &[Vec<Expression>]) -> Expression {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut terms = Vec::with_capacity(n);
    for col in 0..n {
        if m[0][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Expression>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let sign = if col % 2 == 0 { 1 } else { -1 };
        terms.push(Expression::integer(sign) * m[0][col].clone() * expression_det(&minor));
    }
    Expression::sum(terms)
}

/// Matrix of derivatives: rows are the derivative orders in `rows`, columns
/// the given functions.
fn derivative_matrix(fns: &[Expression], rows: &[usize]) -> Result<Vec<Vec<Expression>>> {
    let mut m = Vec::with_capacity(rows.len());
    for &k in rows {
        let mut row = Vec::with_capacity(fns.len());
        for f in fns {
            row.push(f.differentiate(k)?);
        }
        m.push(row);
    }
    Ok(m)
}

/// The Wronskian determinant `det(d^(i-1) chi_j / dt^(i-1))` as an
/// expression (exact cofactor expansion).
pub fn wronskian(fs: &FundamentalSystem) -> Result<Expression> {
    let rows: Vec<usize> = (0..fs.order).collect();
    Ok(expression_det(&derivative_matrix(&fs.solutions, &rows)?))
}

/// Minor of the extended derivative matrix: all derivative orders `0..=r`
/// except `skip`.
pub(crate) fn wronskian_minor(fs: &FundamentalSystem, skip: usize) -> Result<Expression> {
    let rows: Vec<usize> = (0..=fs.order).filter(|m| *m != skip).collect();
    Ok(expression_det(&derivative_matrix(&fs.solutions, &rows)?))
}

/// The unique monic homogeneous equation with the given solution basis:
/// `a_{i-1} = (-1)^(r+i-1) / W * det(minor skipping row i-1)`.
pub fn coefficients_from_fundamental_system(fs: &FundamentalSystem) -> Result<LinearOde> {
    let r = fs.order;
    let w = wronskian(fs)?;
    let w_inv = Expression::powi(w, -1);
    let mut coeffs = Vec::with_capacity(r);
    for i in 1..=r {
        let minor = wronskian_minor(fs, i - 1)?;
        let sign = if (r + i - 1) % 2 == 0 { 1 } else { -1 };
        coeffs.push(Expression::integer(sign) * w_inv.clone() * minor);
    }
    LinearOde::new(r, coeffs, Expression::zero(), fs.interval)
}

/// Fundamental system from identity initial jets at `t0` (the Wronskian at
/// `t0` is exactly 1 and stays nonzero by the Abel formula).
pub fn fundamental_system(ode: &LinearOde, t0: f64) -> Result<FundamentalSystem> {
    let r = ode.order();
    let hom = ode.homogeneous_part();
    let mut solutions = Vec::with_capacity(r);
    for i in 0..r {
        let mut init = vec![0.0; r];
        init[i] = 1.0;
        solutions.push(solve_linear_ivp(&hom, t0, &init, 1e-10)?.solution());
    }
    FundamentalSystem::new(r, solutions, *ode.interval())
}

/// Act with a gauge matrix: `chi~_i = sum_j mu_ij chi_j`. The recovered
/// equation is unchanged.
pub fn apply_gauge(fs: &FundamentalSystem, g: &GaugeMatrix) -> Result<FundamentalSystem> {
    if g.mu.len() != fs.order {
        return Err(Error::new(
            ErrorCode::SingularGaugeMatrix,
            "gauge matrix dimension does not match the system order",
        ));
    }
    let mut out = Vec::with_capacity(fs.order);
    for row in &g.mu {
        let terms = row
            .iter()
            .zip(fs.solutions.iter())
            .map(|(c, chi)| Expression::constant(c.clone()) * chi.clone())
            .collect();
        out.push(Expression::sum(terms));
    }
    FundamentalSystem::new(fs.order, out, fs.interval)
}

/// Constraints singling out the reparameterized subclasses: vanishing minors
/// for the rational and Laguerre-Forsyth forms, pinned first solutions for
/// the Arnold forms.
pub fn satisfies_class_constraints(
    fs: &FundamentalSystem,
    tag: ClassTag,
    tol: f64,
) -> Result<bool> {
    let iv = fs.interval;
    let zero = Expression::zero();
    let minor_vanishes = |skip: usize| -> Result<bool> {
        let m = wronskian_minor(fs, skip)?;
        equiv_numeric(&m, &zero, &iv, 50, tol)
    };
    Ok(match tag {
        ClassTag::L => true,
        ClassTag::L1 => minor_vanishes(fs.order - 1)?,
        ClassTag::L2 => minor_vanishes(fs.order - 1)? && minor_vanishes(fs.order - 2)?,
        ClassTag::A1 => equiv_numeric(&fs.solutions[0], &Expression::one(), &iv, 50, tol)?,
        ClassTag::A2 => {
            equiv_numeric(&fs.solutions[0], &Expression::one(), &iv, 50, tol)?
                && equiv_numeric(&fs.solutions[1], &Expression::var(), &iv, 50, tol)?
        }
    })
}

/// Right-hand-side component of the generalized extended transformation for
/// the whole class, expressed in the source variable:
/// `b~(T(t)) = X1 / T_t^r * (b + W(chi_1, ..., chi_r, X0~) / W(chi))`.
pub fn generalized_rhs(
    fs: &FundamentalSystem,
    b: &Expression,
    t_map: &Expression,
    x1: &Expression,
    x0_tilde: &Expression,
) -> Result<Expression> {
    let r = fs.order;
    let mut fns = fs.solutions.to_vec();
    fns.push(x0_tilde.clone());
    let rows: Vec<usize> = (0..=r).collect();
    let extended = expression_det(&derivative_matrix(&fns, &rows)?);
    let w = wronskian(fs)?;
    let tt = t_map.differentiate(1)?;
    Ok(x1.clone()
        * Expression::powi(tt, -(r as i64))
        * (b.clone() + extended * Expression::powi(w, -1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::rat_i64;

    fn t() -> Expression {
        Expression::var()
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn wronskian_basics() {
        let fs = FundamentalSystem::new(2, vec![Expression::one(), t()], iv(-1.0, 1.0)).unwrap();
        assert!(wronskian(&fs).unwrap().is_one());

        let trig = FundamentalSystem::new(
            2,
            vec![Expression::cos(t()), Expression::sin(t())],
            iv(-1.0, 1.0),
        )
        .unwrap();
        let w = wronskian(&trig).unwrap();
        assert!(equiv_numeric(&w, &Expression::one(), &iv(-1.0, 1.0), 16, 1e-12).unwrap());

        // dependent columns violate the invariant
        let dep = FundamentalSystem::new(2, vec![t(), Expression::integer(2) * t()], iv(1.0, 2.0));
        assert_eq!(dep.unwrap_err().code, ErrorCode::WronskianVanishes);
    }

    #[test]
    fn recovery_from_bases() {
        let fs = FundamentalSystem::new(2, vec![Expression::one(), t()], iv(-1.0, 1.0)).unwrap();
        let ode = coefficients_from_fundamental_system(&fs).unwrap();
        assert!(ode.coeff(0).is_zero());
        assert!(ode.coeff(1).is_zero());

        let trig = FundamentalSystem::new(
            2,
            vec![Expression::cos(t()), Expression::sin(t())],
            iv(-1.0, 1.0),
        )
        .unwrap();
        let sho = coefficients_from_fundamental_system(&trig).unwrap();
        let dom = iv(-1.0, 1.0);
        assert!(equiv_numeric(sho.coeff(0), &Expression::one(), &dom, 16, 1e-12).unwrap());
        assert!(equiv_numeric(sho.coeff(1), &Expression::zero(), &dom, 16, 1e-12).unwrap());

        let cubic = FundamentalSystem::new(
            3,
            vec![Expression::one(), t(), Expression::powi(t(), 2)],
            iv(-1.0, 1.0),
        )
        .unwrap();
        let free = coefficients_from_fundamental_system(&cubic).unwrap();
        for m in 0..3 {
            assert!(free.coeff(m).is_zero(), "a{m} = {}", free.coeff(m));
        }
    }

    #[test]
    fn numeric_fundamental_system() {
        let free2 = LinearOde::elementary(2, iv(-1.0, 1.0)).unwrap();
        let fs = fundamental_system(&free2, 0.0).unwrap();
        assert!(
            equiv_numeric(fs.solution(0), &Expression::one(), &iv(-1.0, 1.0), 16, 1e-9).unwrap()
        );
        assert!(equiv_numeric(fs.solution(1), &t(), &iv(-1.0, 1.0), 16, 1e-9).unwrap());

        let sho = LinearOde::new(
            2,
            vec![Expression::one(), Expression::zero()],
            Expression::zero(),
            iv(-1.0, 1.0),
        )
        .unwrap();
        let fs = fundamental_system(&sho, 0.0).unwrap();
        assert!(equiv_numeric(
            fs.solution(0),
            &Expression::cos(t()),
            &iv(-1.0, 1.0),
            16,
            1e-9
        )
        .unwrap());
        assert!(equiv_numeric(
            fs.solution(1),
            &Expression::sin(t()),
            &iv(-1.0, 1.0),
            16,
            1e-9
        )
        .unwrap());

        let free3 = LinearOde::elementary(3, iv(-1.0, 1.0)).unwrap();
        let fs = fundamental_system(&free3, 0.0).unwrap();
        let half_t2 = Expression::ratio(1, 2) * Expression::powi(t(), 2);
        assert!(equiv_numeric(fs.solution(2), &half_t2, &iv(-1.0, 1.0), 16, 1e-9).unwrap());
    }

    #[test]
    fn gauge_action_preserves_recovered_equation() {
        let fs = FundamentalSystem::new(2, vec![Expression::one(), t()], iv(-1.0, 1.0)).unwrap();
        let g = GaugeMatrix::new(
            vec![
                vec![rat_i64(1, 1), rat_i64(1, 1)],
                vec![rat_i64(0, 1), rat_i64(1, 1)],
            ],
            None,
        )
        .unwrap();
        let gauged = apply_gauge(&fs, &g).unwrap();
        assert_eq!(gauged.solution(0), &(Expression::one() + t()));
        let ode = coefficients_from_fundamental_system(&gauged).unwrap();
        assert!(ode.coeff(0).is_zero());
        assert!(ode.coeff(1).is_zero());

        let singular = GaugeMatrix::new(
            vec![
                vec![rat_i64(1, 1), rat_i64(2, 1)],
                vec![rat_i64(2, 1), rat_i64(4, 1)],
            ],
            None,
        );
        assert_eq!(singular.unwrap_err().code, ErrorCode::SingularGaugeMatrix);
    }

    #[test]
    fn class_constraints_on_bases() {
        // x''' = 0 basis (1, t, t^2): first Arnold constraints hold
        let fs = FundamentalSystem::new(
            3,
            vec![Expression::one(), t(), Expression::powi(t(), 2)],
            iv(-1.0, 1.0),
        )
        .unwrap();
        assert!(satisfies_class_constraints(&fs, ClassTag::A1, 1e-9).unwrap());
        assert!(satisfies_class_constraints(&fs, ClassTag::A2, 1e-9).unwrap());
        assert!(satisfies_class_constraints(&fs, ClassTag::L1, 1e-9).unwrap());
        assert!(satisfies_class_constraints(&fs, ClassTag::L2, 1e-9).unwrap());

        // cosh/sinh basis of x'' - x = 0: rational form (a1 = 0) but not Arnold
        let hyp = FundamentalSystem::new(
            2,
            vec![
                Expression::ratio(1, 2) * (Expression::exp(t()) + Expression::exp(-t())),
                Expression::ratio(1, 2) * (Expression::exp(t()) - Expression::exp(-t())),
            ],
            iv(-1.0, 1.0),
        )
        .unwrap();
        assert!(satisfies_class_constraints(&hyp, ClassTag::L1, 1e-9).unwrap());
        assert!(!satisfies_class_constraints(&hyp, ClassTag::A1, 1e-9).unwrap());
    }
}
