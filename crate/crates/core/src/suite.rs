//! The ten-point acceptance sweep. Each criterion exercises one headline
//! guarantee end to end on seeded inputs and reports a single pass/fail
//! verdict with the measured extremes behind it. Criteria run in parallel
//! on per-criterion seeds; assembly order is fixed, so a report is a pure
//! function of the seed.

use std::thread;

use serde::Serialize;

use crate::atoms::{
    counterexample_decomposition, counterexample_h1_upper, counterexample_log_moment,
    distance_to_ha, h1_upper, haar_expand, partial_basel, split_atom, validate_atom, Flavor,
};
use crate::bmo::{a_functional, bmo_norm, kappa_ln, lambda_norm, Family};
use crate::error::Result;
use crate::haar2d::{b1, b2, b3, psi, quadrant_integrals, random_psi_combo};
use crate::num::{exp2i, DEFAULT_TOL};
use crate::operators::{lp_norm, maximal_dyadic, tau_apply, tau_lp_norm};
use crate::sampling::{
    random_atom, random_bmo_function, random_half_zero, random_step, rng_from_seed, AtomKind,
};
use crate::step::{HalfLine, StepFunction};
use crate::t1::KernelOperator;

/// One acceptance check: a verdict plus the measured extremes behind it.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub index: usize,
    pub name: String,
    pub pass: bool,
    pub details: String,
}

/// All ten criteria in order, with the overall verdict.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub pass: bool,
    pub criteria: Vec<CriterionReport>,
}

const NAMES: [&str; 10] = [
    "three-atom split reconstruction",
    "haar expansion residuals",
    "single-atom correction to the haar span",
    "lambda norm sandwich",
    "pairing functional under the shifted norm",
    "tau operator norm bound",
    "dyadic maximal dichotomy",
    "spike-train cost and log moments",
    "kernel bracket identity",
    "two-dimensional generators",
];

fn criterion_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn report(index: usize, pass: bool, details: String) -> CriterionReport {
    CriterionReport {
        index,
        name: NAMES[index - 1].to_string(),
        pass,
        details,
    }
}

/// 1000 random atoms split into two zone atoms plus a special atom:
/// reconstruction within 2^-30 of sup, coefficients (4, 4, |c3| <= 4),
/// both parts valid atoms on dyadic zones with sup <= 2^-n.
pub fn criterion_1(seed: u64) -> Result<CriterionReport> {
    let mut rng = rng_from_seed(criterion_seed(seed, 1));
    let mut pass = true;
    let mut max_rel = 0.0f64;
    let mut max_c3 = 0.0f64;
    for _ in 0..1000 {
        let a = random_atom(&mut rng, AtomKind::General);
        let s = split_atom(&a)?;
        let sup = a.shape.max_abs();
        let err = s.reconstruct()?.max_abs_diff(&a.shape)?;
        pass &= err <= exp2i(-30) * sup;
        if sup > 0.0 {
            max_rel = max_rel.max(err / sup);
        }
        pass &= s.c1.abs() == 4.0 && s.c2.abs() == 4.0 && s.c3.abs() <= 4.0;
        max_c3 = max_c3.max(s.c3.abs());
        for part in [&s.a_l, &s.a_r] {
            pass &= validate_atom(&part.shape, &part.defining)?.ok;
            let zone = part.defining.normalize();
            pass &= zone.hi - zone.lo == 1;
            pass &= part.shape.max_abs() <= exp2i(-s.n);
        }
    }
    Ok(report(
        1,
        pass,
        format!(
            "1000 atoms; max reconstruction error {max_rel:.3e} of sup (bound {:.3e}); max |c3| {max_c3:.3}",
            exp2i(-30)
        ),
    ))
}

/// Residual of the half-line Haar expansion: identically zero on 500
/// inputs with zero integral on each half-line, and of L1 mass at least
/// |integral over [0, inf)| minus tol on 500 unconstrained inputs.
pub fn criterion_2(seed: u64) -> Result<CriterionReport> {
    let mut rng = rng_from_seed(criterion_seed(seed, 2));
    let mut pass = true;
    let mut max_resid = 0.0f64;
    for _ in 0..500 {
        let f = random_half_zero(&mut rng, -2, 32, 8);
        let ex = haar_expand(&f, 4)?;
        max_resid = max_resid.max(ex.residual.max_abs());
    }
    pass &= max_resid == 0.0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..500 {
        let f = random_step(&mut rng, -2, -20, 40, 8);
        let a = f.restrict(HalfLine::Positive).integral();
        let mass = lp_norm(&haar_expand(&f, 4)?.residual, 1.0)?;
        min_slack = min_slack.min(mass - (a.abs() - DEFAULT_TOL));
        pass &= mass >= a.abs() - DEFAULT_TOL;
    }
    Ok(report(
        2,
        pass,
        format!(
            "max residual sup on half-zero inputs {max_resid:.1e}; min residual-mass slack {min_slack:.3e}"
        ),
    ))
}

/// The corrected function g = f + 2A b has exactly zero integral on
/// [0, inf), and the correction costs at most 2|A| + tol in the
/// one-atom upper bound, on 500 random inputs.
pub fn criterion_3(seed: u64) -> Result<CriterionReport> {
    let mut rng = rng_from_seed(criterion_seed(seed, 3));
    let mut pass = true;
    let mut max_residual_integral = 0.0f64;
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..500 {
        let f = random_step(&mut rng, -2, -16, 32, 8);
        let a = f.restrict(HalfLine::Positive).integral();
        let (dist, g) = distance_to_ha(&f)?;
        let left = g.restrict(HalfLine::Positive).integral();
        max_residual_integral = max_residual_integral.max(left.abs());
        pass &= left == 0.0;
        pass &= (dist - a.abs()).abs() <= DEFAULT_TOL;
        let up = h1_upper(&f.sub(&g)?, Flavor::General)?;
        max_excess = max_excess.max(up - 2.0 * a.abs());
        pass &= up <= 2.0 * a.abs() + DEFAULT_TOL;
    }
    Ok(report(
        3,
        pass,
        format!(
            "500 inputs; max |integral of g over [0,inf)| {max_residual_integral:.1e}; max cost excess over 2|A| {max_excess:.3e}"
        ),
    ))
}

/// Forward: lambda norm <= all-interval norm + 1e-12 on 1000 samples.
/// Reverse: all-interval norm <= 24 times the lambda norm.
pub fn criterion_4(seed: u64) -> Result<CriterionReport> {
    let mut rng = rng_from_seed(criterion_seed(seed, 4));
    let mut pass = true;
    let mut max_forward = f64::NEG_INFINITY;
    let mut max_reverse = 0.0f64;
    for _ in 0..1000 {
        let phi = random_bmo_function(&mut rng);
        let lam = lambda_norm(&phi)?.value;
        let all = bmo_norm(&phi, Family::All)?.value;
        pass &= lam <= all + 1e-12;
        pass &= all <= 24.0 * lam;
        max_forward = max_forward.max(lam - all);
        if lam > 0.0 {
            max_reverse = max_reverse.max(all / lam);
        }
    }
    Ok(report(
        4,
        pass,
        format!(
            "1000 samples; max (lambda - all) {max_forward:.3e}; max all/lambda ratio {max_reverse:.3} of 24"
        ),
    ))
}

/// The special-atom pairing functional sits under the shifted-interval
/// norm with zero tolerance, and the all-interval norm is at most 24
/// times max(dyadic, shifted), on 1000 samples.
pub fn criterion_5(seed: u64) -> Result<CriterionReport> {
    let mut rng = rng_from_seed(criterion_seed(seed, 5));
    let mut pass = true;
    let mut max_pairing_gap = f64::NEG_INFINITY;
    let mut max_ratio = 0.0f64;
    for _ in 0..1000 {
        let phi = random_bmo_function(&mut rng);
        let a = a_functional(&phi)?.value;
        let shifted = bmo_norm(&phi, Family::Shifted)?.value;
        pass &= a <= shifted;
        max_pairing_gap = max_pairing_gap.max(a - shifted);
        let dyadic = bmo_norm(&phi, Family::Dyadic)?.value;
        let all = bmo_norm(&phi, Family::All)?.value;
        let floor = dyadic.max(shifted);
        pass &= all <= 24.0 * floor;
        if floor > 0.0 {
            max_ratio = max_ratio.max(all / floor);
        }
    }
    Ok(report(
        5,
        pass,
        format!(
            "1000 samples; max (pairing - shifted norm) {max_pairing_gap:.3e}; max all/max(dyadic,shifted) {max_ratio:.3} of 24"
        ),
    ))
}

/// Lp norms of tau applied to 200 one-sided atoms stay under
/// (2 kappa)^(1/p) with a 5% quadrature band at eps in {1/4, 1/2, 3/4},
/// p = 1/(1 - eps); tau annihilates b_{n,0} identically for 20 scales.
pub fn criterion_6(seed: u64) -> Result<CriterionReport> {
    let mut rng = rng_from_seed(criterion_seed(seed, 6));
    let mut pass = true;
    let kappa = kappa_ln();
    let mut max_ratio = 0.0f64;
    let mut failures = 0usize;
    for eps in [0.25, 0.5, 0.75] {
        let p = 1.0 / (1.0 - eps);
        let bound = (2.0 * kappa).powf(1.0 / p) * 1.05;
        for _ in 0..200 {
            let a = random_atom(&mut rng, AtomKind::TwoSided);
            match tau_lp_norm(&a.shape, eps, p) {
                Ok(norm) => {
                    pass &= norm <= bound;
                    max_ratio = max_ratio.max(norm / bound);
                }
                Err(_) => {
                    pass = false;
                    failures += 1;
                }
            }
        }
    }
    let mut max_image = 0.0f64;
    for n in -10..10 {
        let b = StepFunction::special_atom(n, 0, n)?;
        for eps in [0.25, 0.5, 0.75] {
            let image = tau_apply(&b, eps, 8)?;
            max_image = max_image.max(image.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }
    pass &= max_image == 0.0;
    Ok(report(
        6,
        pass,
        format!(
            "600 atom norms; max norm/bound ratio {max_ratio:.3}; {failures} quadrature failures; max |tau b_n| {max_image:.1e} over 20 scales"
        ),
    ))
}

/// Pointwise bound |I|^(eps-1) chi_I on 200 dyadic atoms (exact, with
/// exact vanishing outside I); the maximal function of b stays within a
/// factor 4 of min(1, |x|^(eps-1)); its p-th power mass grows by at
/// least 0.2 ln 2 per window doubling at eps in {1/4, 1/2}; truncation
/// freezes the norm once the window clears the truncation scale.
pub fn criterion_7(seed: u64) -> Result<CriterionReport> {
    let mut rng = rng_from_seed(criterion_seed(seed, 7));
    let mut pass = true;
    for _ in 0..200 {
        let a = random_atom(&mut rng, AtomKind::Dyadic);
        let g = a.defining.normalize().scale;
        let domain = (a.shape.enclosing_scale() + 2).min(crate::interval::SCALE_MAX);
        for eps in [0.25, 0.5, 0.75] {
            let m = maximal_dyadic(&a.shape, eps, domain, None)?;
            let bound = f64::exp2((eps - 1.0) * g as f64);
            for (i, v) in m.values.iter().enumerate() {
                let c = m.cell_start + i as i64;
                if c >= a.defining.lo && c < a.defining.hi {
                    pass &= *v <= bound;
                } else {
                    pass &= *v == 0.0;
                }
            }
        }
    }

    let b = StepFunction::special_atom(0, 0, -4)?;
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = 0.0f64;
    for eps in [0.25, 0.5, 0.75] {
        let m = maximal_dyadic(&b, eps, 6, None)?;
        for (i, v) in m.values.iter().enumerate() {
            let x = (m.cell_start + i as i64) as f64 * m.cell_width() + 0.5 * m.cell_width();
            let profile = x.abs().powf(eps - 1.0).min(1.0);
            let r = v / profile;
            ratio_lo = ratio_lo.min(r);
            ratio_hi = ratio_hi.max(r);
        }
    }
    pass &= ratio_lo >= 0.25 && ratio_hi <= 4.0;

    let mut min_gain = f64::INFINITY;
    for eps in [0.25, 0.5] {
        let p = 1.0 / (1.0 - eps);
        let mut prev = None;
        for domain in 4..=10 {
            let mass = lp_norm(&maximal_dyadic(&b, eps, domain, None)?, p)?.powf(p);
            if let Some(last) = prev {
                let gain: f64 = mass - last;
                min_gain = min_gain.min(gain);
                pass &= gain >= 0.2 * std::f64::consts::LN_2;
            }
            prev = Some(mass);
        }
    }

    let p = 2.0;
    let truncated: Vec<f64> = [5, 7, 10]
        .into_iter()
        .map(|domain| lp_norm(&maximal_dyadic(&b, 0.5, domain, Some(4))?, p))
        .collect::<Result<_>>()?;
    pass &= truncated[0].is_finite() && truncated[0] > 0.0;
    pass &= truncated[0] == truncated[1] && truncated[1] == truncated[2];

    Ok(report(
        7,
        pass,
        format!(
            "pointwise bound exact on 200 atoms; profile ratio in [{ratio_lo:.3}, {ratio_hi:.3}]; min mass gain per doubling {min_gain:.3} vs 0.139; truncated norm {:.6} frozen",
            truncated[0]
        ),
    ))
}

/// Spike-train cost stays under 6 L_N <= pi^2 for N in {4,...,64}, the
/// log moment grows monotonically with M(64)/M(8) >= 1.8, and the
/// materialized decomposition at N = 8 matches the closed-form cost.
pub fn criterion_8(_seed: u64) -> Result<CriterionReport> {
    let mut pass = true;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let mut max_cost = 0.0f64;
    for n in [4u32, 8, 16, 32, 64] {
        let up = counterexample_h1_upper(n);
        let bound = 6.0 * partial_basel(n);
        pass &= up <= bound + 1e-12 && bound <= pi2 + 1e-12;
        max_cost = max_cost.max(up);
    }
    let mut last = 0.0f64;
    for n in [4u32, 8, 16, 32, 64] {
        let m = counterexample_log_moment(n);
        pass &= m > last;
        last = m;
    }
    let ratio = counterexample_log_moment(64) / counterexample_log_moment(8);
    pass &= ratio >= 1.8;
    let dec = counterexample_decomposition(8)?;
    let closed = 6.0 * partial_basel(8);
    pass &= (dec.cost() - closed).abs() <= 1e-9 * closed;
    Ok(report(
        8,
        pass,
        format!(
            "max cost {max_cost:.4} under pi^2 {pi2:.4}; moment ratio M(64)/M(8) {ratio:.3}; N=8 cost matches {closed:.6}"
        ),
    ))
}

/// On a seeded block-diagonal kernel the bracket identity for special
/// atoms at the origin holds to 2^-30 relative error across the window,
/// and the two-sided condition constant sits under twice the weak
/// boundedness constant.
pub fn criterion_9(seed: u64) -> Result<CriterionReport> {
    let k = KernelOperator::blockdiag(3, -4, criterion_seed(seed, 9))?;
    let mut pass = true;
    let mut max_rel = 0.0f64;
    for level in -4..=3 {
        let bc = k.special_bracket(level)?;
        pass &= bc.rel_err <= exp2i(-30);
        max_rel = max_rel.max(bc.rel_err);
    }
    let wbp = k.wbp(Family::All).value;
    let c_2s = k.bmo_conditions()?.c_2s;
    pass &= c_2s <= 2.0 * wbp + 1e-9 * (1.0 + wbp);
    Ok(report(
        9,
        pass,
        format!(
            "max bracket relative error {max_rel:.1e} of {:.1e}; c_2s {c_2s:.4} vs 2 x WBP {:.4}",
            exp2i(-30),
            2.0 * wbp
        ),
    ))
}

/// Generator orthogonality is exact across a three-scale window, the
/// quadrant tables of b1, b2, b3 are exact, and the quadrant functional
/// vanishes bitwise on 200 random generator combinations.
pub fn criterion_10(seed: u64) -> Result<CriterionReport> {
    let mut pass = true;
    let mut family = Vec::new();
    for j in 1..=3u8 {
        for n in [-1i32, 0, 1] {
            for k in [-1i64, 0, 1] {
                for l in [-1i64, 0, 1] {
                    family.push(psi(j, n, k, l, -n - 1)?);
                }
            }
        }
    }
    let mut pairs = 0usize;
    for (i, a) in family.iter().enumerate() {
        pass &= a.integral() == 0.0;
        for b in &family[i + 1..] {
            pass &= a.inner_product(b)? == 0.0;
            pairs += 1;
        }
    }
    pass &= quadrant_integrals(&b1(-2)?) == [-0.5, 0.5, 0.0, 0.0];
    pass &= quadrant_integrals(&b2(-2)?) == [-0.5, 0.0, 0.0, 0.5];
    pass &= quadrant_integrals(&b3(-2)?) == [0.0, 0.0, 0.5, -0.5];
    let mut rng = rng_from_seed(criterion_seed(seed, 10));
    let mut combos_ok = 0usize;
    for _ in 0..200 {
        let f = random_psi_combo(&mut rng, 6)?;
        if quadrant_integrals(&f) == [0.0; 4] {
            combos_ok += 1;
        }
    }
    pass &= combos_ok == 200;
    Ok(report(
        10,
        pass,
        format!(
            "{} generators, {pairs} pairs orthogonal exactly; b-tables exact; {combos_ok}/200 combos with vanishing quadrant integrals",
            family.len()
        ),
    ))
}

/// Run one criterion by index, folding an evaluation error into a failed
/// report rather than dropping the line.
pub fn run_criterion(index: usize, seed: u64) -> CriterionReport {
    let result = match index {
        1 => criterion_1(seed),
        2 => criterion_2(seed),
        3 => criterion_3(seed),
        4 => criterion_4(seed),
        5 => criterion_5(seed),
        6 => criterion_6(seed),
        7 => criterion_7(seed),
        8 => criterion_8(seed),
        9 => criterion_9(seed),
        _ => criterion_10(seed),
    };
    result.unwrap_or_else(|e| report(index, false, format!("errored: {e}")))
}

/// All ten criteria, evaluated in parallel and assembled in index order.
pub fn run_all(seed: u64) -> SuiteReport {
    let mut criteria = Vec::with_capacity(10);
    thread::scope(|s| {
        let handles: Vec<_> = (1..=10)
            .map(|i| s.spawn(move || run_criterion(i, seed)))
            .collect();
        for h in handles {
            criteria.push(h.join().expect("criterion evaluation panicked"));
        }
    });
    let pass = criteria.iter().all(|c| c.pass);
    SuiteReport {
        seed,
        pass,
        criteria,
    }
}
