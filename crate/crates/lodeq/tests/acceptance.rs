//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Tolerances are pinned in the assertions.

mod common;

use common::*;
use lodeq::expr::{equiv_numeric, Expression};
use lodeq::gauge;
use lodeq::groupoid::{
    admissible_shape, in_equivalence_group, verify_admissible, AdmissibleTransformation,
};
use lodeq::numeric::solve_linear_ivp;
use lodeq::ode::{ClassTag, LinearOde};
use lodeq::reparam;
use lodeq::symmetry::{
    self, canonical_family, classify_dimension, lie_bracket, ExtensionCase, FamilyKind,
    Sl2Realization, VectorField,
};
use lodeq::taylor::jet_of_expr;
use lodeq::transform::{schwarzian, PointTransformation};
use num_rational::BigRational;
use rand::Rng;

fn report(name: &str, failures: &[String]) {
    let ok = failures.is_empty();
    println!("[acceptance] {name}: {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}:\n{}", failures.join("\n"));
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// X1 of the rational-form group: `C * T_t^((r-1)/2)` with `|T_t|` under
/// half-integer powers.
fn rational_form_x1(t_map: &Expression, r: usize, c: BigRational) -> Expression {
    let tt = t_map.differentiate(1).unwrap();
    let shaped = if r % 2 == 1 {
        Expression::powi(tt, ((r - 1) / 2) as i64)
    } else {
        Expression::pow(
            Expression::abs(tt),
            BigRational::new(((r - 1) as i64).into(), 2.into()),
        )
    };
    Expression::constant(c) * shaped
}

#[test]
fn criterion_01_gauge_correctness() {
    let mut failures = Vec::new();
    let mut rng = rng(101);
    let cases: Vec<usize> = [3usize, 4, 5]
        .iter()
        .flat_map(|r| std::iter::repeat_n(*r, 10))
        .collect();
    for (i, &r) in cases.iter().enumerate() {
        let ode = random_ode(&mut rng, r, iv(1.0, 2.0), true);
        let started = std::time::Instant::now();
        let g1 = match gauge::to_rational(&ode) {
            Ok(g) => g,
            Err(e) => {
                failures.push(format!("case {i} (r={r}): to_rational failed: {e}"));
                continue;
            }
        };
        let sup1 = g1.diagnostics.worst();
        if sup1 > 1e-7 {
            failures.push(format!("case {i} (r={r}): |a~_(r-1)| = {sup1:e} > 1e-7"));
        }
        let g2 = match gauge::to_laguerre_forsyth(&g1.gauged, g1.gauged.interval().midpoint()) {
            Ok(g) => g,
            Err(e) => {
                failures.push(format!("case {i} (r={r}): to_laguerre_forsyth failed: {e}"));
                continue;
            }
        };
        for (m, sup) in &g2.diagnostics.vanish_sup {
            if *sup > 1e-6 {
                failures.push(format!(
                    "case {i} (r={r}): Laguerre-Forsyth |a~_{m}| = {sup:e} > 1e-6"
                ));
            }
        }
        let elapsed = started.elapsed();
        if elapsed.as_secs_f64() > 2.0 {
            failures.push(format!(
                "case {i} (r={r}): gauges took {:.2} s > 2 s",
                elapsed.as_secs_f64()
            ));
        }
    }
    report("gauge correctness (rational + Laguerre-Forsyth)", &failures);
}

#[test]
fn criterion_02_arnold_gauges() {
    let mut failures = Vec::new();
    let mut rng = rng(202);
    let orders = [2usize, 2, 3, 3, 3, 4, 4, 5];
    for case in 0..30 {
        let r = orders[case % orders.len()];
        let ode = random_ode(&mut rng, r, iv(1.0, 2.0), true);
        match gauge::to_arnold1(&ode, 1.5) {
            Ok(g) => {
                let sup = g.diagnostics.worst();
                if sup > 1e-6 {
                    failures.push(format!("case {case} (r={r}): arnold1 |a~_0| = {sup:e}"));
                }
            }
            Err(e) => failures.push(format!("case {case} (r={r}): arnold1 failed: {e}")),
        }
        match gauge::to_arnold2(&ode, 1.5) {
            Ok(g) => {
                let sup = g.diagnostics.worst();
                if sup > 1e-6 {
                    failures.push(format!(
                        "case {case} (r={r}): arnold2 |a~_0|,|a~_1| = {sup:e}"
                    ));
                }
                if r == 2 {
                    // the single-orbit fact: every second-order equation
                    // reduces to the free particle equation
                    for m in 0..2 {
                        match lodeq::expr::sup_norm(g.gauged.coeff(m), g.gauged.interval(), 50) {
                            Ok(s) if s <= 1e-6 => {}
                            Ok(s) => failures.push(format!(
                                "case {case}: r=2 arnold2 coefficient a{m} sup {s:e}"
                            )),
                            Err(e) => failures.push(format!("case {case}: {e}")),
                        }
                    }
                }
            }
            Err(e) => failures.push(format!("case {case} (r={r}): arnold2 failed: {e}")),
        }
    }
    report("Arnold gauges (first and second form)", &failures);
}

#[test]
fn criterion_03_master_transport_oracle() {
    let mut failures = Vec::new();
    let mut rng = rng(303);
    for case in 0..50 {
        let r = 2 + case % 4;
        let homogeneous = case % 2 == 0;
        let ode = random_ode(&mut rng, r, iv(1.0, 2.0), homogeneous);
        let tau = random_trans1(&mut rng, iv(1.0, 2.0));
        let target = match tau.apply_to_ode(&ode) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("case {case}: apply_to_ode failed: {e}"));
                continue;
            }
        };
        let init: Vec<f64> = (0..r)
            .map(|k| if k == 0 { 1.0 } else { 0.25 * (k as f64) - 0.5 })
            .collect();
        let x = solve_linear_ivp(&ode, 1.5, &init, 1e-10)
            .unwrap()
            .solution();
        let y = match tau.transport_solution(&x) {
            Ok(y) => y,
            Err(e) => {
                failures.push(format!("case {case}: transport failed: {e}"));
                continue;
            }
        };
        let mut sup = 0.0f64;
        for s in target.interval().chebyshev_samples(20) {
            let jet = jet_of_expr(&y, s, r).unwrap();
            sup = sup.max(target.residual(&jet, s).unwrap().abs());
        }
        if sup > 1e-7 {
            failures.push(format!("case {case} (r={r}): transported residual {sup:e}"));
        }
    }
    report("master transport oracle", &failures);
}

#[test]
fn criterion_04_schwarzian_law() {
    let mut failures = Vec::new();
    let mut rng = rng(404);

    // the invariant a~_{r-2}(T(t)) T_t^2 = a_{r-2}(t) - (r(r^2-1)/12) S(T)(t)
    for case in 0..20 {
        let r = 3 + case % 3;
        let mut coeffs: Vec<Expression> = (0..r).map(|_| random_poly(&mut rng, 3, 2)).collect();
        coeffs[r - 1] = Expression::zero(); // rational form
        let ode = LinearOde::new(r, coeffs, Expression::zero(), iv(1.0, 2.0)).unwrap();
        let t = Expression::var();
        let t_map = Expression::constant(random_rational(&mut rng, 1))
            + t.clone()
            + Expression::constant(BigRational::new(rng.gen_range(0i64..=3).into(), 16.into()))
                * Expression::powi(t.clone(), 3);
        let c = BigRational::new(rng.gen_range(1i64..=8).into(), 4.into());
        let x1 = rational_form_x1(&t_map, r, c);
        let tau =
            PointTransformation::new(t_map.clone(), x1, random_poly(&mut rng, 2, 1), iv(1.0, 2.0))
                .unwrap();
        let target = tau.apply_to_ode(&ode).unwrap();
        let s_expr = schwarzian(&t_map).unwrap();
        let tt = t_map.differentiate(1).unwrap();
        let rf = r as f64;
        let factor = rf * (rf * rf - 1.0) / 12.0;
        for s in iv(1.0, 2.0).chebyshev_samples(20) {
            let lhs = target
                .coeff(r - 2)
                .evaluate(t_map.evaluate(s).unwrap())
                .unwrap()
                * tt.evaluate(s).unwrap().powi(2);
            let rhs = ode.coeff(r - 2).evaluate(s).unwrap() - factor * s_expr.evaluate(s).unwrap();
            if (lhs - rhs).abs() > 1e-6 * (1.0 + lhs.abs()) {
                failures.push(format!(
                    "case {case} (r={r}): law violated at t={s}: {lhs} vs {rhs}"
                ));
                break;
            }
        }
    }

    // specializations on x''' = 0 pin the constants -r(r^2-1)/24 and
    // +r(r^2-1)/6 for r = 3
    let free = LinearOde::elementary(3, iv(1.0, std::f64::consts::E)).unwrap();
    let t = Expression::var();
    let log_tau = PointTransformation::new(
        Expression::ln(t.clone()),
        Expression::powi(t.clone(), -1),
        Expression::zero(),
        iv(1.0, std::f64::consts::E),
    )
    .unwrap();
    let out = log_tau.apply_to_ode(&free).unwrap();
    for s in out.interval().chebyshev_samples(20) {
        let v = out.coeff(1).evaluate(s).unwrap();
        if (v + 1.0).abs() > 1e-8 {
            failures.push(format!("ln map: a~_1({s}) = {v}, expected -1"));
            break;
        }
    }
    let free2 = LinearOde::elementary(3, iv(-1.0, 1.0)).unwrap();
    let base = Expression::one() + Expression::powi(t.clone(), 2);
    let atan_tau = PointTransformation::new(
        Expression::atan(t.clone()),
        Expression::powi(base, -1),
        Expression::zero(),
        iv(-1.0, 1.0),
    )
    .unwrap();
    let out = atan_tau.apply_to_ode(&free2).unwrap();
    for s in out.interval().chebyshev_samples(20) {
        let v = out.coeff(1).evaluate(s).unwrap();
        if (v - 4.0).abs() > 1e-8 {
            failures.push(format!("arctan map: a~_1({s}) = {v}, expected +4"));
            break;
        }
    }
    report("Schwarzian transformation law", &failures);
}

fn fixtures() -> Vec<(String, LinearOde, usize)> {
    let t = Expression::var();
    vec![
        (
            "elementary".into(),
            LinearOde::elementary(3, iv(-1.0, 1.0)).unwrap(),
            7,
        ),
        (
            "constant".into(),
            LinearOde::new(
                3,
                vec![Expression::one(), Expression::zero(), Expression::zero()],
                Expression::zero(),
                iv(-1.0, 1.0),
            )
            .unwrap(),
            5,
        ),
        (
            "euler".into(),
            canonical_family(FamilyKind::Euler, 3, &[rat(5)], iv(1.0, 2.0)).unwrap(),
            5,
        ),
        (
            "projective".into(),
            canonical_family(FamilyKind::Projective, 3, &[rat(2)], iv(-1.0, 1.0)).unwrap(),
            5,
        ),
        (
            "generic".into(),
            LinearOde::new(
                3,
                vec![t, Expression::zero(), Expression::zero()],
                Expression::zero(),
                iv(-1.0, 1.0),
            )
            .unwrap(),
            4,
        ),
    ]
}

#[test]
fn criterion_05_classification_trichotomy() {
    let mut failures = Vec::new();
    let mut rng = rng(505);
    for (name, ode, expected) in fixtures() {
        let c = match classify_dimension(&ode) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("{name}: classification failed: {e}"));
                continue;
            }
        };
        if c.dimension != expected {
            failures.push(format!(
                "{name}: dimension {} (case {}), expected {expected}",
                c.dimension, c.case
            ));
            continue;
        }
        // witness checks for the two canonical one-parameter families
        if name == "euler" {
            let w = c.witness.as_ref().expect("euler witness");
            let lnabs = Expression::ln(Expression::abs(Expression::var()));
            if !equiv_numeric(w.t_map(), &lnabs, ode.interval(), 16, 1e-9).unwrap() {
                failures.push(format!("euler witness T = {} is not ln|t|", w.t_map()));
            }
        }
        if name == "projective" {
            let w = c.witness.as_ref().expect("projective witness");
            let at = Expression::atan(Expression::var());
            if !equiv_numeric(w.t_map(), &at, ode.interval(), 16, 1e-9).unwrap() {
                failures.push(format!(
                    "projective witness T = {} is not arctan",
                    w.t_map()
                ));
            }
        }
        // invariance under random equivalence transformations
        for k in 0..10 {
            let tau = random_trans1(&mut rng, *ode.interval());
            let moved = match tau.apply_to_ode(&ode) {
                Ok(m) => m,
                Err(e) => {
                    failures.push(format!("{name} #{k}: transport failed: {e}"));
                    continue;
                }
            };
            match classify_dimension(&moved) {
                Ok(cm) => {
                    if cm.dimension != expected {
                        failures.push(format!(
                            "{name} #{k}: transformed dimension {} != {expected}",
                            cm.dimension
                        ));
                    }
                }
                Err(e) => failures.push(format!("{name} #{k}: classification failed: {e}")),
            }
        }
    }
    report("classification trichotomy and invariance", &failures);
}

#[test]
fn criterion_06_superposition_algebra_realized() {
    let mut failures = Vec::new();
    for (name, ode, _) in fixtures() {
        let t0s: Vec<f64> = ode.interval().chebyshev_samples(8);
        let mut check = |q: &VectorField, label: &str| {
            for s in &t0s {
                match symmetry::prolong_residual(q, &ode, *s) {
                    Ok(res) => {
                        if res > 1e-7 {
                            failures.push(format!("{name}: {label} residual {res:e} at t={s}"));
                            break;
                        }
                    }
                    Err(e) => {
                        failures.push(format!("{name}: {label} failed: {e}"));
                        break;
                    }
                }
            }
        };
        check(&VectorField::scaling(), "x d_x");
        let fs = reparam::fundamental_system(&ode, ode.interval().midpoint()).unwrap();
        for (i, phi) in fs.solutions().iter().enumerate() {
            check(
                &VectorField::superposition(phi.clone()),
                &format!("phi_{} d_x", i + 1),
            );
        }
        if name == "elementary" {
            let sl2 = Sl2Realization::new(3).unwrap();
            check(&sl2.p, "P");
            check(&sl2.d, "D");
            check(&sl2.k, "K");
        }
    }
    report("superposition algebra realized numerically", &failures);
}

#[test]
fn criterion_07_sl2_and_commutator_law() {
    let mut failures = Vec::new();
    // exact bracket relations
    for r in [3usize, 4, 5] {
        let sl2 = Sl2Realization::new(r).unwrap();
        if lie_bracket(&sl2.p, &sl2.d).unwrap() != sl2.p {
            failures.push(format!("r={r}: [P,D] != P"));
        }
        let two_d = VectorField::new(
            Expression::integer(2) * sl2.d.tau().clone(),
            Expression::integer(2) * sl2.d.xi1().clone(),
            Expression::zero(),
        );
        if lie_bracket(&sl2.p, &sl2.k).unwrap() != two_d {
            failures.push(format!("r={r}: [P,K] != 2D"));
        }
        if lie_bracket(&sl2.d, &sl2.k).unwrap() != sl2.k {
            failures.push(format!("r={r}: [D,K] != K"));
        }
    }
    // commutator law for lifted fields over random polynomial pairs
    let mut rng = rng(707);
    let dom = iv(-1.0, 1.0);
    for case in 0..10 {
        let r = 3 + case % 3;
        let tau1 = random_poly(&mut rng, 3, 2);
        let tau2 = random_poly(&mut rng, 3, 2);
        let lhs = lie_bracket(
            &VectorField::lifted(tau1.clone(), r).unwrap(),
            &VectorField::lifted(tau2.clone(), r).unwrap(),
        )
        .unwrap();
        let combo =
            tau1.clone() * tau2.differentiate(1).unwrap() - tau2 * tau1.differentiate(1).unwrap();
        let rhs = VectorField::lifted(combo, r).unwrap();
        for (a, b, what) in [
            (lhs.tau(), rhs.tau(), "tau"),
            (lhs.xi1(), rhs.xi1(), "xi1"),
            (lhs.xi0(), rhs.xi0(), "xi0"),
        ] {
            if !equiv_numeric(a, b, &dom, 20, 1e-9).unwrap() {
                failures.push(format!("case {case} (r={r}): {what} mismatch"));
            }
        }
    }
    report("sl(2) brackets and lifted commutator law", &failures);
}

#[test]
fn criterion_08_groupoid_structure() {
    let mut failures = Vec::new();
    let mut rng = rng(808);
    let base = iv(0.0, 1.0);

    let exprs_equiv = |a: &Expression, b: &Expression, dom: &lodeq::interval::Interval| {
        equiv_numeric(a, b, dom, 24, 1e-8).unwrap_or(false)
    };

    for case in 0..20 {
        let tau1 = random_trans1(&mut rng, base);
        let tau2 = random_trans1(&mut rng, *tau1.target());
        let tau3 = random_trans1(&mut rng, *tau2.target());
        let left = PointTransformation::compose(
            &tau3,
            &PointTransformation::compose(&tau2, &tau1).unwrap(),
        )
        .unwrap();
        let right = PointTransformation::compose(
            &PointTransformation::compose(&tau3, &tau2).unwrap(),
            &tau1,
        )
        .unwrap();
        if !exprs_equiv(left.t_map(), right.t_map(), &base)
            || !exprs_equiv(left.x1(), right.x1(), &base)
            || !exprs_equiv(left.x0(), right.x0(), &base)
        {
            failures.push(format!("case {case}: associativity violated"));
        }
        let inv = tau1.invert().unwrap();
        let idt = PointTransformation::compose(&inv, &tau1).unwrap();
        if !exprs_equiv(idt.t_map(), &Expression::var(), &base)
            || !exprs_equiv(idt.x1(), &Expression::one(), &base)
            || !exprs_equiv(idt.x0(), &Expression::zero(), &base)
        {
            failures.push(format!("case {case}: inverse law violated"));
        }
    }

    // composition closure of the class-wise membership predicates
    let r = 3usize;
    let t = Expression::var();
    for class in [
        ClassTag::L,
        ClassTag::L1,
        ClassTag::L2,
        ClassTag::A1,
        ClassTag::A2,
    ] {
        for case in 0..5 {
            let make = |rng: &mut rand_chacha::ChaCha8Rng, dom: lodeq::interval::Interval| {
                let x0 = random_poly(rng, 2, 1);
                match class {
                    ClassTag::L => random_trans1(rng, dom),
                    ClassTag::L1 => {
                        let t_map = Expression::constant(random_rational(rng, 1))
                            + t.clone()
                            + Expression::constant(BigRational::new(
                                rng.gen_range(0i64..=4).into(),
                                16.into(),
                            )) * Expression::powi(t.clone(), 3);
                        let c = BigRational::new(rng.gen_range(1i64..=8).into(), 4.into());
                        let x1 = rational_form_x1(&t_map, r, c);
                        PointTransformation::new(t_map, x1, x0, dom).unwrap()
                    }
                    ClassTag::L2 | ClassTag::A2 => {
                        // Mobius with pole left of the domain
                        let alpha = rat(rng.gen_range(1i64..=3));
                        let beta = rat(rng.gen_range(-2i64..=2));
                        let gamma = rat(1);
                        let delta = rat(rng.gen_range(2i64..=4))
                            - BigRational::from_float(dom.lo()).unwrap();
                        let num = Expression::constant(alpha.clone()) * t.clone()
                            + Expression::constant(beta.clone());
                        let den = Expression::constant(gamma.clone()) * t.clone()
                            + Expression::constant(delta.clone());
                        let det = &alpha * &delta - &beta * &gamma;
                        let t_map =
                            if det.is_integer() && det == BigRational::from_integer(0.into()) {
                                (num + Expression::one()) / den.clone()
                            } else {
                                num / den.clone()
                            };
                        let power = if class == ClassTag::L2 {
                            (r - 1) as i64
                        } else {
                            1
                        };
                        let x1 = Expression::integer(rng.gen_range(1i64..=3))
                            * Expression::powi(den, -power);
                        PointTransformation::new(t_map, x1, x0, dom).unwrap()
                    }
                    ClassTag::A1 => {
                        let t_map = Expression::constant(random_rational(rng, 1))
                            + t.clone()
                            + Expression::constant(BigRational::new(
                                rng.gen_range(0i64..=4).into(),
                                16.into(),
                            )) * Expression::powi(t.clone(), 3);
                        PointTransformation::new(
                            t_map,
                            Expression::integer(rng.gen_range(1i64..=4)),
                            x0,
                            dom,
                        )
                        .unwrap()
                    }
                }
            };
            let first = make(&mut rng, base);
            let second = make(&mut rng, *first.target());
            let composed = PointTransformation::compose(&second, &first).unwrap();
            for (label, tau) in [
                ("first", &first),
                ("second", &second),
                ("composed", &composed),
            ] {
                let (ok, reason) = in_equivalence_group(tau, class, r, false, 1e-7).unwrap();
                if !ok {
                    failures.push(format!(
                        "{class} case {case}: {label} member rejected: {reason}"
                    ));
                }
            }
        }
    }
    report("groupoid composition, inverses and closure", &failures);
}

#[test]
fn criterion_09_non_semi_normalization_witnesses() {
    let mut failures = Vec::new();
    let t = Expression::var();

    // first Arnold form: psi_1 = cosh t is a nonconstant solution of
    // x''' - x' = 0
    let e1 = LinearOde::new(
        3,
        vec![
            Expression::zero(),
            Expression::integer(-1),
            Expression::zero(),
        ],
        Expression::zero(),
        iv(-1.0, 1.0),
    )
    .unwrap();
    let cosh = Expression::ratio(1, 2) * (Expression::exp(t.clone()) + Expression::exp(-t.clone()));
    let tau = PointTransformation::new(
        t.clone(),
        Expression::powi(cosh, -1),
        Expression::zero(),
        iv(-1.0, 1.0),
    )
    .unwrap();
    let target = tau.apply_to_ode(&e1).unwrap();
    let cand = AdmissibleTransformation {
        source: e1.clone(),
        target,
        tau: tau.clone(),
    };
    let (ok, diag) = verify_admissible(&cand, 1e-7).unwrap();
    if !ok {
        failures.push(format!("A1 witness: triple not admissible: {diag:?}"));
    }
    match admissible_shape(&tau, &e1, ClassTag::A1, true, 1e-7) {
        Ok((true, _)) => {}
        Ok((false, reason)) => failures.push(format!("A1 witness: shape rejected: {reason}")),
        Err(e) => failures.push(format!("A1 witness: shape check failed: {e}")),
    }
    match in_equivalence_group(&tau, ClassTag::A1, 3, true, 1e-7) {
        Ok((false, _)) => {}
        Ok((true, _)) => {
            failures.push("A1 witness: wrongly accepted into the equivalence group".into())
        }
        Err(e) => failures.push(format!("A1 witness: membership check failed: {e}")),
    }

    // second Arnold form: psi_1 = 1 + t^2 is a nonaffine solution of x''' = 0
    let e2 = LinearOde::elementary(3, iv(-0.5, 0.5)).unwrap();
    let psi1 = Expression::one() + Expression::powi(t.clone(), 2);
    let tau2 = PointTransformation::new(
        t.clone() * Expression::powi(psi1.clone(), -1),
        Expression::powi(psi1, -1),
        Expression::zero(),
        iv(-0.5, 0.5),
    )
    .unwrap();
    let target2 = tau2.apply_to_ode(&e2).unwrap();
    let cand2 = AdmissibleTransformation {
        source: e2.clone(),
        target: target2,
        tau: tau2.clone(),
    };
    let (ok, diag) = verify_admissible(&cand2, 1e-7).unwrap();
    if !ok {
        failures.push(format!("A2 witness: triple not admissible: {diag:?}"));
    }
    match admissible_shape(&tau2, &e2, ClassTag::A2, true, 1e-7) {
        Ok((true, _)) => {}
        Ok((false, reason)) => failures.push(format!("A2 witness: shape rejected: {reason}")),
        Err(e) => failures.push(format!("A2 witness: shape check failed: {e}")),
    }
    match in_equivalence_group(&tau2, ClassTag::A2, 3, true, 1e-7) {
        Ok((false, _)) => {}
        Ok((true, _)) => {
            failures.push("A2 witness: wrongly accepted into the equivalence group".into())
        }
        Err(e) => failures.push(format!("A2 witness: membership check failed: {e}")),
    }
    report("Arnold non-semi-normalization witnesses", &failures);
}

#[test]
fn criterion_10_reparameterization_round_trip() {
    let mut failures = Vec::new();
    let mut rng = rng(1010);
    for case in 0..20 {
        let r = 2 + case % 4;
        let ode = random_ode(&mut rng, r, iv(1.0, 2.0), true);
        let fs = match reparam::fundamental_system(&ode, 1.5) {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!(
                    "case {case} (r={r}): fundamental system failed: {e}"
                ));
                continue;
            }
        };
        let back = match reparam::coefficients_from_fundamental_system(&fs) {
            Ok(b) => b,
            Err(e) => {
                failures.push(format!("case {case} (r={r}): recovery failed: {e}"));
                continue;
            }
        };
        if !odes_equiv(&ode.homogeneous_part(), &back, 1e-7) {
            failures.push(format!("case {case} (r={r}): recovered equation differs"));
            continue;
        }
        for g_case in 0..10 {
            let mu: Vec<Vec<BigRational>> = loop {
                let m: Vec<Vec<BigRational>> = (0..r)
                    .map(|_| (0..r).map(|_| rat(rng.gen_range(-3i64..=3))).collect())
                    .collect();
                if reparam::GaugeMatrix::new(m.clone(), None).is_ok() {
                    break m;
                }
            };
            let g = reparam::GaugeMatrix::new(mu, None).unwrap();
            let gauged = match reparam::apply_gauge(&fs, &g) {
                Ok(x) => x,
                Err(e) => {
                    failures.push(format!("case {case}.{g_case}: gauge action failed: {e}"));
                    continue;
                }
            };
            match reparam::coefficients_from_fundamental_system(&gauged) {
                Ok(again) => {
                    if !odes_equiv(&back, &again, 1e-7) {
                        failures.push(format!(
                            "case {case}.{g_case}: gauge action changed the recovered equation"
                        ));
                    }
                }
                Err(e) => failures.push(format!("case {case}.{g_case}: recovery failed: {e}")),
            }
        }
    }
    report(
        "reparameterization round trip and gauge invariance",
        &failures,
    );
}

#[test]
fn classification_uses_elementary_before_patterns() {
    // regression guard: the elementary orbit must win over the constant
    // pattern, both presented directly and through transformations
    let free = LinearOde::elementary(4, iv(-1.0, 1.0)).unwrap();
    let c = classify_dimension(&free).unwrap();
    assert_eq!(c.dimension, 8);
    assert_eq!(c.case, ExtensionCase::Elementary);
}
