//! Lie point symmetries of linear ODEs: prolongation residuals, brackets,
//! the sl(2) realization, the canonical one-parameter extension families
//! (constant, Euler and projective coefficients), and the symmetry-dimension
//! classifier with values r+1, r+2 and r+4.

use crate::error::{Error, ErrorCode, Result};
use crate::expr::{equiv_numeric, sup_norm, Expression};
use crate::gauge::{self};
use crate::interval::Interval;
use crate::numeric::{antiderivative, solve_linear_ivp};
use crate::ode::{coeff_is_zero, LinearOde};
use crate::transform::{half_power_of, PointTransformation};
use num_rational::BigRational;

/// `Q = tau(t) d_t + (xi1(t) x + xi0(t)) d_x`, the general shape of Lie
/// symmetries of linear ODEs.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    tau: Expression,
    xi1: Expression,
    xi0: Expression,
}

impl VectorField {
    pub fn new(tau: Expression, xi1: Expression, xi0: Expression) -> Self {
        VectorField {
            tau: tau.normalized(),
            xi1: xi1.normalized(),
            xi0: xi0.normalized(),
        }
    }

    pub fn tau(&self) -> &Expression {
        &self.tau
    }

    pub fn xi1(&self) -> &Expression {
        &self.xi1
    }

    pub fn xi0(&self) -> &Expression {
        &self.xi0
    }

    /// The scaling field `x d_x`.
    pub fn scaling() -> Self {
        VectorField::new(Expression::zero(), Expression::one(), Expression::zero())
    }

    /// A superposition field `phi(t) d_x`.
    pub fn superposition(phi: Expression) -> Self {
        VectorField::new(Expression::zero(), Expression::zero(), phi)
    }

    /// `R(tau) = tau d_t + ((r-1)/2) tau_t x d_x`, the lifted reparameterization
    /// family of the rational form.
    pub fn lifted(tau: Expression, order: usize) -> Result<Self> {
        let xi1 = Expression::ratio(order as i64 - 1, 2) * tau.differentiate(1)?;
        Ok(VectorField::new(tau, xi1, Expression::zero()))
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({}) d_t + (({}) x + ({})) d_x",
            self.tau, self.xi1, self.xi0
        )
    }
}

/// Commutator of two fields affine in `x`; the class is closed under it.
pub fn lie_bracket(q1: &VectorField, q2: &VectorField) -> Result<VectorField> {
    let tau =
        q1.tau.clone() * q2.tau.differentiate(1)? - q2.tau.clone() * q1.tau.differentiate(1)?;
    let xi1 =
        q1.tau.clone() * q2.xi1.differentiate(1)? - q2.tau.clone() * q1.xi1.differentiate(1)?;
    let xi0 = q1.tau.clone() * q2.xi0.differentiate(1)?
        - q2.tau.clone() * q1.xi0.differentiate(1)?
        + q2.xi1.clone() * q1.xi0.clone()
        - q1.xi1.clone() * q2.xi0.clone();
    Ok(VectorField::new(tau, xi1, xi0))
}

/// The realization of sl(2) acting on order-`r` equations:
/// `P = d_t`, `D = t d_t + ((r-1)/2) x d_x`, `K = t^2 d_t + (r-1) t x d_x`,
/// with brackets `[P,D] = P`, `[P,K] = 2D`, `[D,K] = K`.
#[derive(Debug, Clone)]
pub struct Sl2Realization {
    pub p: VectorField,
    pub d: VectorField,
    pub k: VectorField,
    pub order: usize,
}

impl Sl2Realization {
    pub fn new(order: usize) -> Result<Self> {
        let t = Expression::var();
        Ok(Sl2Realization {
            p: VectorField::lifted(Expression::one(), order)?,
            d: VectorField::lifted(t.clone(), order)?,
            k: VectorField::lifted(Expression::powi(t, 2), order)?,
            order,
        })
    }
}

/// Coefficient functions of the on-solution prolongation residual: applying
/// the r-th prolongation of `Q` to the defining function of the equation and
/// substituting `x^(r)` from the equation leaves an expression affine in the
/// jet `(x, x', ..., x^(r-1))`. Returns `(coefficients, constant part)`.
pub fn prolongation_residual_functions(
    q: &VectorField,
    ode: &LinearOde,
) -> Result<(Vec<Expression>, Expression)> {
    let r = ode.order();
    let tau_t = q.tau.differentiate(1)?;
    // eta^(k) = sum_j c[k][j] x^(j) + d[k]
    let mut c: Vec<Vec<Expression>> = vec![vec![q.xi1.clone()]];
    let mut d: Vec<Expression> = vec![q.xi0.clone()];
    for k in 0..r {
        let mut next = Vec::with_capacity(k + 2);
        for j in 0..=k + 1 {
            let da = if j <= k {
                c[k][j].differentiate(1)?
            } else {
                Expression::zero()
            };
            let shift = if j >= 1 {
                c[k][j - 1].clone()
            } else {
                Expression::zero()
            };
            let mut v = da + shift;
            if j == k + 1 {
                v = v - tau_t.clone();
            }
            next.push(v);
        }
        c.push(next);
        d.push(d[k].differentiate(1)?);
    }

    let mut coeff: Vec<Expression> = Vec::with_capacity(r);
    for m in 0..r {
        coeff.push(q.tau.clone() * ode.coeff(m).differentiate(1)?);
    }
    let mut konst = -(q.tau.clone() * ode.rhs().differentiate(1)?);
    for m in 0..r {
        // a_m eta^(m)
        let am = ode.coeff(m).clone();
        for (j, cm) in c[m].iter().enumerate() {
            coeff[j] = coeff[j].clone() + am.clone() * cm.clone();
        }
        konst = konst + am * d[m].clone();
    }
    // eta^(r), substituting x^(r) = b - sum a_m x^(m)
    for (j, cr) in c[r].iter().enumerate().take(r) {
        coeff[j] = coeff[j].clone() + cr.clone();
    }
    let lead = c[r][r].clone();
    for (j, item) in coeff.iter_mut().enumerate().take(r) {
        *item = item.clone() - lead.clone() * ode.coeff(j).clone();
    }
    konst = konst + d[r].clone() + lead * ode.rhs().clone();
    Ok((coeff, konst))
}

/// Sup of the on-solution residual at `t0` over the canonical jet sample set
/// (the zero jet and the jets with a single coordinate set to +-1; the
/// residual is affine in the jet, so these determine it).
pub fn prolong_residual(q: &VectorField, ode: &LinearOde, t0: f64) -> Result<f64> {
    let (coeff, konst) = prolongation_residual_functions(q, ode)?;
    let kv = konst.evaluate(t0)?;
    let mut sup = kv.abs();
    for cf in &coeff {
        let cv = cf.evaluate(t0)?;
        sup = sup.max((cv + kv).abs()).max((-cv + kv).abs());
    }
    Ok(sup)
}

/// True when `Q` is an infinitesimal symmetry: residual at most `tol` at 20
/// sample times.
pub fn is_symmetry(q: &VectorField, ode: &LinearOde, tol: f64) -> Result<bool> {
    for s in ode.interval().chebyshev_samples(20) {
        if prolong_residual(q, ode, s)? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The canonical one-parameter extension families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Constant,
    Euler,
    Projective,
}

/// Member of the canonical family with constants `c = (c_0, ..., c_{r-3})`:
/// constant coefficients `a_m = c_m`; Euler coefficients `a_m = c_m t^{m-r}`;
/// projective coefficients `q_m` defined by the downward recursion
/// `q_{r-3} = c_{r-3}/(1+t^2)^3`,
/// `q_m = c_m/(1+t^2)^{r-m} - (m+1)(r-m-1)/(1+t^2)^{r-m} int (1+t^2)^{r-m-1} q_{m+1}`,
/// antiderivatives anchored at 0.
pub fn canonical_family(
    kind: FamilyKind,
    order: usize,
    constants: &[BigRational],
    interval: Interval,
) -> Result<LinearOde> {
    if order < 3 {
        return Err(Error::new(
            ErrorCode::OrderTooLow,
            "extension families start at order 3",
        ));
    }
    if constants.len() != order - 2 {
        return Err(Error::new(
            ErrorCode::CoefficientCount,
            format!("expected {} constants c0..c{}", order - 2, order - 3),
        ));
    }
    let t = Expression::var();
    let mut coeffs = vec![Expression::zero(); order];
    match kind {
        FamilyKind::Constant => {
            for m in 0..=order - 3 {
                coeffs[m] = Expression::constant(constants[m].clone());
            }
        }
        FamilyKind::Euler => {
            for m in 0..=order - 3 {
                coeffs[m] = Expression::constant(constants[m].clone())
                    * Expression::powi(t.clone(), m as i64 - order as i64);
            }
        }
        FamilyKind::Projective => {
            let base = Expression::one() + Expression::powi(t.clone(), 2);
            // antiderivatives are anchored at 0, which must lie in the
            // integration range even when the member lives elsewhere
            let hull = Interval::new(interval.lo().min(-0.5), interval.hi().max(0.5))?;
            let mut q_next: Option<Expression> = None;
            for m in (0..=order - 3).rev() {
                let power = (order - m) as i64;
                let mut q = Expression::constant(constants[m].clone())
                    * Expression::powi(base.clone(), -power);
                if let Some(prev) = &q_next {
                    let integrand = Expression::powi(base.clone(), power - 1) * prev.clone();
                    let primitive = antiderivative(&integrand, 0.0, &hull)?;
                    let factor = ((m + 1) * (order - m - 1)) as i64;
                    q = q - Expression::integer(factor)
                        * Expression::powi(base.clone(), -power)
                        * primitive;
                }
                coeffs[m] = q.clone();
                q_next = Some(q);
            }
        }
    }
    LinearOde::new(order, coeffs, Expression::zero(), interval)
}

/// Extension case of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionCase {
    Generic,
    ConstantEquivalent,
    Elementary,
}

impl std::fmt::Display for ExtensionCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExtensionCase::Generic => "generic",
            ExtensionCase::ConstantEquivalent => "constant-equivalent",
            ExtensionCase::Elementary => "elementary",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    Exact,
    Pattern,
    Numeric,
}

impl std::fmt::Display for Confidence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Confidence::Exact => "exact",
            Confidence::Pattern => "pattern",
            Confidence::Numeric => "numeric",
        };
        f.write_str(s)
    }
}

/// Outcome of the symmetry-dimension classification.
#[derive(Debug, Clone)]
pub struct SymmetryClassification {
    pub dimension: usize,
    pub case: ExtensionCase,
    /// Transformation to the canonical representative, when one was built.
    pub witness: Option<PointTransformation>,
    pub confidence: Confidence,
}

const CLASSIFY_TOL: f64 = 1e-6;

/// Dimension of the maximal Lie invariance algebra: 8 for order 2, otherwise
/// r+1, r+2 or r+4.
///
/// Pipeline: reduce to a homogeneous equation, gauge to rational then
/// Laguerre-Forsyth form; the elementary orbit is exactly the equation with
/// all gauged coefficients zero. The one-parameter extension cases are first
/// matched against the constant/Euler/projective coefficient patterns of the
/// rational form (which yields an explicit witness map); when no pattern
/// matches, the determining system for lifted fields `R(c0 + c1 t + c2 t^2)`
/// on the Laguerre-Forsyth form decides the dimension, since every residual
/// symmetry there has a quadratic-polynomial time component.
pub fn classify_dimension(ode: &LinearOde) -> Result<SymmetryClassification> {
    let r = ode.order();
    if r == 2 {
        return Ok(SymmetryClassification {
            dimension: 8,
            case: ExtensionCase::Elementary,
            witness: None,
            confidence: Confidence::Exact,
        });
    }
    let interval = *ode.interval();
    let t0 = interval.midpoint();

    // reduce to the homogeneous subclass by subtracting a particular solution
    let (hom, pre): (LinearOde, PointTransformation) = if ode.is_homogeneous(1e-11) {
        (
            ode.homogeneous_part(),
            PointTransformation::identity(interval),
        )
    } else {
        let zero_init = vec![0.0; r];
        let particular = solve_linear_ivp(ode, t0, &zero_init, 1e-10)?.solution();
        let tau =
            PointTransformation::new(Expression::var(), Expression::one(), -particular, interval)?;
        (tau.apply_to_ode(ode)?, tau)
    };

    let g1 = gauge::to_rational(&hom)?;
    let rational = &g1.gauged;
    let compose_pre = |next: &PointTransformation| -> Result<PointTransformation> {
        let first = pre.restricted(*next.source())?;
        PointTransformation::compose(next, &first)
    };

    // the elementary orbit first: in Laguerre-Forsyth form it is exactly the
    // zero-coefficient equation
    let g2 = gauge::to_laguerre_forsyth(rational, rational.interval().midpoint())?;
    let lf = g2.gauged.clone();
    let all_zero = (0..r).all(|m| coeff_is_zero(lf.coeff(m), lf.interval(), CLASSIFY_TOL));
    if all_zero {
        let tau = compose_pre(&PointTransformation::compose(
            &g2.transformation,
            &g1.transformation.restricted(*g2.transformation.source())?,
        )?)?;
        let structural = (0..r).all(|m| hom.coeff(m).is_zero());
        return Ok(SymmetryClassification {
            dimension: r + 4,
            case: ExtensionCase::Elementary,
            witness: Some(tau),
            confidence: if structural {
                Confidence::Exact
            } else {
                Confidence::Numeric
            },
        });
    }

    // pattern: constant coefficients in the presented rational form
    if let Some(witness) = detect_constant(rational)? {
        let tau = compose_pre(&PointTransformation::compose(&witness, &g1.transformation)?)?;
        return Ok(SymmetryClassification {
            dimension: r + 2,
            case: ExtensionCase::ConstantEquivalent,
            witness: Some(tau),
            confidence: Confidence::Pattern,
        });
    }
    // pattern: Euler coefficients
    if let Some(witness) = detect_euler(rational)? {
        let tau = compose_pre(&PointTransformation::compose(&witness, &g1.transformation)?)?;
        return Ok(SymmetryClassification {
            dimension: r + 2,
            case: ExtensionCase::ConstantEquivalent,
            witness: Some(tau),
            confidence: Confidence::Pattern,
        });
    }
    // pattern: projective coefficients
    if let Some(witness) = detect_projective(rational)? {
        let tau = compose_pre(&PointTransformation::compose(&witness, &g1.transformation)?)?;
        return Ok(SymmetryClassification {
            dimension: r + 2,
            case: ExtensionCase::ConstantEquivalent,
            witness: Some(tau),
            confidence: Confidence::Pattern,
        });
    }

    // determining system for R(c0 + c1 t + c2 t^2) on the Laguerre-Forsyth
    // form
    match quadratic_symmetry_dimension(&lf)? {
        0 => Ok(SymmetryClassification {
            dimension: r + 1,
            case: ExtensionCase::Generic,
            witness: None,
            confidence: Confidence::Pattern,
        }),
        1 => Ok(SymmetryClassification {
            dimension: r + 2,
            case: ExtensionCase::ConstantEquivalent,
            witness: None,
            confidence: Confidence::Numeric,
        }),
        _ => {
            // three independent symmetries would mean the elementary orbit,
            // already excluded; report it anyway
            let tau = compose_pre(&PointTransformation::compose(
                &g2.transformation,
                &g1.transformation.restricted(*g2.transformation.source())?,
            )?)?;
            Ok(SymmetryClassification {
                dimension: r + 4,
                case: ExtensionCase::Elementary,
                witness: Some(tau),
                confidence: Confidence::Numeric,
            })
        }
    }
}

fn detect_constant(rational: &LinearOde) -> Result<Option<PointTransformation>> {
    let iv = rational.interval();
    for m in 0..rational.order() {
        let d = rational.coeff(m).differentiate(1)?;
        if !coeff_is_zero(&d, iv, CLASSIFY_TOL) {
            return Ok(None);
        }
    }
    Ok(Some(PointTransformation::identity(*iv)))
}

fn detect_euler(rational: &LinearOde) -> Result<Option<PointTransformation>> {
    let iv = rational.interval();
    if iv.contains(0.0) {
        return Ok(None); // Euler members live on one side of the pole
    }
    let r = rational.order();
    let t = Expression::var();
    for m in 0..r {
        let scaled = Expression::powi(t.clone(), (r - m) as i64) * rational.coeff(m).clone();
        let d = scaled.differentiate(1)?;
        if !coeff_is_zero(&d, iv, CLASSIFY_TOL) {
            return Ok(None);
        }
    }
    // witness: T = ln|t|, X1 = |t|^-(r-1)/2 maps the member to constant
    // coefficients
    let t_map = Expression::ln(Expression::abs(t.clone()));
    let x1 = Expression::powi(half_power_of(t, r), -1);
    Ok(Some(PointTransformation::new(
        t_map,
        x1,
        Expression::zero(),
        *iv,
    )?))
}

fn detect_projective(rational: &LinearOde) -> Result<Option<PointTransformation>> {
    let iv = rational.interval();
    let r = rational.order();
    // anchor constants at t = 0: the recursion's antiderivatives vanish
    // there, so c_m = a_m(0)
    let mut constants = Vec::with_capacity(r - 2);
    for m in 0..=r - 3 {
        match rational.coeff(m).evaluate(0.0) {
            Ok(v) => match BigRational::from_float(v) {
                Some(c) => constants.push(c),
                None => return Ok(None),
            },
            Err(_) => return Ok(None),
        }
    }
    let family = match canonical_family(FamilyKind::Projective, r, &constants, *iv) {
        Ok(f) => f,
        Err(_) => return Ok(None),
    };
    for m in 0..r {
        if !equiv_numeric(rational.coeff(m), family.coeff(m), iv, 50, CLASSIFY_TOL)? {
            return Ok(None);
        }
    }
    let t = Expression::var();
    let base = Expression::one() + Expression::powi(t.clone(), 2);
    let t_map = Expression::atan(t);
    let x1 = Expression::powi(half_power_of(base, r), -1);
    Ok(Some(PointTransformation::new(
        t_map,
        x1,
        Expression::zero(),
        *iv,
    )?))
}

/// Number of independent quadratic polynomials `tau` with `R(tau)` an
/// infinitesimal symmetry of the (Laguerre-Forsyth form) equation: builds
/// the residual Gram matrix over the basis `1, t, t^2` and counts its
/// near-null eigenvalues, then verifies each claimed symmetry directly.
pub fn quadratic_symmetry_dimension(lf: &LinearOde) -> Result<usize> {
    let r = lf.order();
    let t = Expression::var();
    let basis = [Expression::one(), t.clone(), Expression::powi(t, 2)];
    let fields: Vec<VectorField> = basis
        .iter()
        .map(|tau| VectorField::lifted(tau.clone(), r))
        .collect::<Result<_>>()?;

    let samples = lf.interval().chebyshev_samples(24);
    // rows: residual components (coefficients and constant) per sample;
    // columns: basis fields
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut scale: f64 = 0.0;
    for (col, q) in fields.iter().enumerate() {
        let (coeffs, konst) = prolongation_residual_functions(q, lf)?;
        for (si, s) in samples.iter().enumerate() {
            for (ci, c) in coeffs.iter().chain(std::iter::once(&konst)).enumerate() {
                let v = c.evaluate(*s)?;
                let idx = si * (r + 2) + ci;
                if rows.len() <= idx {
                    rows.resize(idx + 1, [0.0; 3]);
                }
                rows[idx][col] = v;
                scale = scale.max(v.abs());
            }
        }
    }
    if scale == 0.0 {
        return Ok(3);
    }
    let mut gram = [[0.0f64; 3]; 3];
    for row in &rows {
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] += row[i] * row[j] / (scale * scale);
            }
        }
    }
    let (eigvals, eigvecs) = jacobi_eigen_3x3(gram);
    let lam_max = eigvals.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let mut count = 0usize;
    for (i, lam) in eigvals.iter().enumerate() {
        // genuine symmetry directions sit many orders below the generic
        // eigenvalues; each candidate is verified directly afterwards
        if lam / lam_max > 1e-9 && *lam > 1e-14 {
            continue;
        }
        // verify: the candidate really is a symmetry
        let tau = Expression::sum(
            basis
                .iter()
                .zip(eigvecs[i].iter())
                .filter(|(_, c)| c.abs() > 1e-9)
                .map(|(b, c)| {
                    Expression::constant(BigRational::from_float(*c).unwrap()) * b.clone()
                })
                .collect(),
        );
        if tau.is_zero() {
            continue;
        }
        let q = VectorField::lifted(tau, r)?;
        if is_symmetry(&q, lf, 1e-4 * (1.0 + coefficient_scale(lf)?))? {
            count += 1;
        }
    }
    Ok(count)
}

fn coefficient_scale(ode: &LinearOde) -> Result<f64> {
    let mut s: f64 = 0.0;
    for m in 0..ode.order() {
        s = s.max(sup_norm(ode.coeff(m), ode.interval(), 20)?);
    }
    Ok(s)
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations;
/// returns (eigenvalues, row eigenvectors).
fn jacobi_eigen_3x3(mut a: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut v = [[0.0; 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..64 {
        // largest off-diagonal element
        let mut p = 0;
        let mut q = 1;
        let mut big = 0.0f64;
        for i in 0..3 {
            for j in i + 1..3 {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big < 1e-300 {
            break;
        }
        let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        let app = a[p][p];
        let aqq = a[q][q];
        let apq = a[p][q];
        a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        a[p][q] = 0.0;
        a[q][p] = 0.0;
        for i in 0..3 {
            if i != p && i != q {
                let aip = a[i][p];
                let aiq = a[i][q];
                a[i][p] = c * aip - s * aiq;
                a[p][i] = a[i][p];
                a[i][q] = s * aip + c * aiq;
                a[q][i] = a[i][q];
            }
        }
        for row in v.iter_mut() {
            let vip = row[p];
            let viq = row[q];
            row[p] = c * vip - s * viq;
            row[q] = s * vip + c * viq;
        }
    }
    let vals = [a[0][0], a[1][1], a[2][2]];
    // eigenvectors are the columns of v; return as rows
    let vecs = [
        [v[0][0], v[1][0], v[2][0]],
        [v[0][1], v[1][1], v[2][1]],
        [v[0][2], v[1][2], v[2][2]],
    ];
    (vals, vecs)
}
