//! Hardy-type operators on step functions: the oriented fractional
//! integral tau_eps sampled on refined grids, Lp and weak-Lp functionals,
//! the dyadic fractional maximal function of signed averages (computed
//! exactly, truncations included), and empirical operator-norm estimates
//! over the atom families.

use crate::atoms::Flavor;
use crate::error::{Error, Result};
use crate::num::{self, exp2i, Accumulator};
use crate::sampling::{random_mean_zero, sample_part};
use crate::step::StepFunction;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A function sampled at the midpoints of `refine` equal subcells of each
/// grid cell; the step-function geometry plus a subdivision count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub cell_scale: i32,
    pub cell_start: i64,
    pub refine: u32,
    pub values: Vec<f64>,
}

impl SampledFunction {
    /// Width of one subcell.
    pub fn sample_width(&self) -> f64 {
        exp2i(self.cell_scale) / self.refine as f64
    }

    /// Value at the r-th subcell of cell c; zero outside the domain.
    pub fn value_at_subcell(&self, c: i64, r: u32) -> f64 {
        let idx = (c - self.cell_start) * self.refine as i64 + r as i64;
        if idx < 0 || idx >= self.values.len() as i64 {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    pub fn cells(&self) -> i64 {
        self.values.len() as i64 / self.refine as i64
    }
}

impl From<StepFunction> for SampledFunction {
    fn from(f: StepFunction) -> Self {
        SampledFunction {
            cell_scale: f.cell_scale,
            cell_start: f.cell_start,
            refine: 1,
            values: f.values,
        }
    }
}

/// Anything with equal-weight samples: a step function (cells) or a
/// refined sampling (subcells).
pub trait Sampled {
    /// Quadrature weight of one sample, and the samples.
    fn weights_and_values(&self) -> (f64, &[f64]);
}

impl Sampled for StepFunction {
    fn weights_and_values(&self) -> (f64, &[f64]) {
        (self.cell_width(), &self.values)
    }
}

impl Sampled for SampledFunction {
    fn weights_and_values(&self) -> (f64, &[f64]) {
        (self.sample_width(), &self.values)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain { what: "p", value: p });
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
        });
    }
    Ok(())
}

/// Lp norm by the midpoint rule; p may be infinite.
pub fn lp_norm(g: &impl Sampled, p: f64) -> Result<f64> {
    check_p(p)?;
    let (w, values) = g.weights_and_values();
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let total = num::sum(values.iter().map(|v| v.abs().powf(p)));
    Ok((w * total).powf(1.0 / p))
}

/// Weak Lp norm: sup over levels v of v·(measure of {|g| >= v})^{1/p}.
pub fn weak_lp_norm(g: &impl Sampled, p: f64) -> Result<f64> {
    check_p(p)?;
    let (w, values) = g.weights_and_values();
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    if p.is_infinite() {
        return Ok(mags.first().copied().unwrap_or(0.0));
    }
    let mut best = 0.0f64;
    for (i, v) in mags.iter().enumerate() {
        best = best.max(v * (w * (i + 1) as f64).powf(1.0 / p));
    }
    Ok(best)
}

/// The oriented fractional integral
/// `tau_eps f(x) = |x|^{eps-1} * (integral of f from -x to x)`,
/// sampled at `refine` points per cell over the symmetrized support hull.
///
/// The integrand pairs each positive cell with its mirror, so an odd input
/// yields the exact zero output; a zero-integral input makes the output
/// vanish identically outside the hull, which is why the domain suffices.
pub fn tau_apply(f: &StepFunction, epsilon: f64, refine: u32) -> Result<SampledFunction> {
    check_epsilon(epsilon)?;
    if refine == 0 || refine > 4096 {
        return Err(Error::Range {
            what: "refine",
            value: refine as i64,
            min: 1,
            max: 4096,
        });
    }
    let extent = f
        .support_hull()
        .map(|h| h.hi.max(-h.lo))
        .unwrap_or(1)
        .max(1);
    if extent.saturating_mul(refine as i64) > crate::interval::MAX_CELLS {
        return Err(Error::Range {
            what: "tau sample count",
            value: extent.saturating_mul(refine as i64),
            min: 1,
            max: crate::interval::MAX_CELLS,
        });
    }
    let m = f.cell_scale;
    let h = f.cell_width();
    let r = refine as i64;
    let rf = refine as f64;

    // Pair sums: cell j against its mirror cell -1-j.
    let pair: Vec<f64> = (0..extent)
        .map(|j| f.value_at_cell(j) + f.value_at_cell(-1 - j))
        .collect();
    let mut prefix = Vec::with_capacity(extent as usize + 1);
    let mut acc = Accumulator::new();
    prefix.push(0.0);
    for g in &pair {
        acc.add(*g);
        prefix.push(acc.total());
    }

    // tau at positive sample points of cell c, then odd reflection.
    let mut pos = vec![0.0f64; (extent * r) as usize];
    for c in 0..extent {
        for sub in 0..r {
            let frac = (sub as f64 + 0.5) / rf;
            let x = (c as f64 + frac) * h;
            let integral = h * (prefix[c as usize] + frac * pair[c as usize]);
            pos[(c * r + sub) as usize] = x.powf(epsilon - 1.0) * integral;
        }
    }
    let mut values = vec![0.0f64; 2 * pos.len()];
    for (i, v) in pos.iter().enumerate() {
        values[pos.len() + i] = *v;
        values[pos.len() - 1 - i] = -v;
    }
    Ok(SampledFunction {
        cell_scale: m,
        cell_start: -extent,
        refine,
        values,
    })
}

/// Lp norm of tau_eps f, accepted once doubling the sampling refinement
/// moves it by at most 1% (or below an absolute floor).
pub fn tau_lp_norm(f: &StepFunction, epsilon: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    let mut prev = lp_norm(&tau_apply(f, epsilon, 4)?, p)?;
    for refine in [8u32, 16, 32] {
        let next = lp_norm(&tau_apply(f, epsilon, refine)?, p)?;
        if (next - prev).abs() <= 0.01 * next.abs() || (next - prev).abs() <= 1e-12 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Contract(format!(
        "tau lp norm does not stabilize under refinement (last value {prev:e})"
    )))
}

/// The dyadic fractional maximal function
/// `M f(x) = sup over dyadic I containing x of |I|^{eps-1} |integral_I f|`,
/// evaluated exactly on every cell of [-2^domain_scale, 2^domain_scale).
///
/// Scales above the support window contribute closed-form terms (every such
/// interval contains a whole half of the support), so no uncertainty is
/// left; `trunc = Some(N)` restricts to scales |n| <= N and is monotone
/// in N by construction.
pub fn maximal_dyadic(
    f: &StepFunction,
    epsilon: f64,
    domain_scale: i32,
    trunc: Option<i32>,
) -> Result<StepFunction> {
    check_epsilon(epsilon)?;
    let m = f.cell_scale;
    let top = f.enclosing_scale();
    if domain_scale < top {
        return Err(Error::Range {
            what: "domain scale",
            value: domain_scale as i64,
            min: top as i64,
            max: crate::interval::SCALE_MAX as i64,
        });
    }
    let gap = domain_scale - m;
    if !(0..=26).contains(&gap) {
        return Err(Error::Range {
            what: "maximal domain depth",
            value: gap as i64,
            min: 0,
            max: 26,
        });
    }
    let factor = |n: i32| f64::exp2((epsilon - 1.0) * n as f64);
    let admissible = |n: i32| trunc.map_or(true, |t| n.abs() <= t);

    // Signed cell integrals over the support window [-2^top, 2^top).
    let half_win = 1i64 << (top - m);
    let mut level: Vec<f64> = (-half_win..half_win)
        .map(|c| f.value_at_cell(c) * exp2i(m))
        .collect();
    let win_cells = (2 * half_win) as usize;
    let mut sup = vec![0.0f64; win_cells];
    let mut n = m;
    loop {
        if admissible(n) {
            let width = 1usize << (n - m);
            let fac = factor(n);
            for (c, s) in sup.iter_mut().enumerate() {
                let v = fac * level[c / width].abs();
                if v > *s {
                    *s = v;
                }
            }
        }
        if n == top {
            break;
        }
        level = level.chunks_exact(2).map(|p| p[0] + p[1]).collect();
        n += 1;
    }
    let half_mass = (level[0].abs(), level[1].abs());

    // Cells beyond the support window: the smallest dyadic interval that
    // reaches back to the support is [0, 2^{j+1}) (or its mirror), and
    // larger ones only shrink the factor.
    let half_dom = 1i64 << gap;
    let mut values = vec![0.0f64; (2 * half_dom) as usize];
    values[(half_dom - half_win) as usize..(half_dom + half_win) as usize]
        .copy_from_slice(&sup);
    for c in half_win..half_dom {
        let j = m + 63 - c.leading_zeros() as i32;
        let n = j + 1;
        if admissible(n) {
            values[(half_dom + c) as usize] = factor(n) * half_mass.1;
            values[(half_dom - 1 - c) as usize] = factor(n) * half_mass.0;
        }
    }
    StepFunction::from_cells(m, -half_dom, values)
}

/// An operator under empirical norm probing.
pub trait Operator {
    fn apply(&self, f: &StepFunction) -> Result<SampledFunction>;
    fn is_linear(&self) -> bool;
    fn name(&self) -> &'static str;
}

/// tau_eps at a fixed sampling refinement.
pub struct TauOperator {
    pub epsilon: f64,
    pub refine: u32,
}

impl Operator for TauOperator {
    fn apply(&self, f: &StepFunction) -> Result<SampledFunction> {
        tau_apply(f, self.epsilon, self.refine)
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "tau"
    }
}

/// The maximal function, optionally truncated, on a domain two doublings
/// past the support.
pub struct MaximalOperator {
    pub epsilon: f64,
    pub trunc: Option<i32>,
}

impl Operator for MaximalOperator {
    fn apply(&self, f: &StepFunction) -> Result<SampledFunction> {
        let domain = (f.enclosing_scale() + 2).min(crate::interval::SCALE_MAX);
        maximal_dyadic(f, self.epsilon, domain, self.trunc).map(SampledFunction::from)
    }

    fn is_linear(&self) -> bool {
        false
    }

    fn name(&self) -> &'static str {
        "maximal"
    }
}

/// Largest pointwise deviation between two samplings of the same geometry.
fn sampled_max_diff(a: &SampledFunction, b: &SampledFunction) -> Result<f64> {
    if a.cell_scale != b.cell_scale || a.refine != b.refine {
        return Err(Error::Contract(
            "sampled functions live on different grids".into(),
        ));
    }
    let lo = a.cell_start.min(b.cell_start);
    let hi = (a.cell_start + a.cells()).max(b.cell_start + b.cells());
    let mut worst = 0.0f64;
    for c in lo..hi {
        for r in 0..a.refine {
            worst = worst.max((a.value_at_subcell(c, r) - b.value_at_subcell(c, r)).abs());
        }
    }
    Ok(worst)
}

fn linearity_spot_check(op: &dyn Operator, rng: &mut impl Rng) -> Result<()> {
    for _ in 0..5 {
        // Mean-zero probes: the image then vanishes outside the support
        // hull, so the hull-restricted outputs still add exactly.
        let f = random_mean_zero(rng, -2, -6, 12, 8);
        let g = random_mean_zero(rng, -2, -4, 10, 8);
        let alpha = rng.random_range(-8..=8i64) as f64 / 4.0;
        let combined = op.apply(&f.scale_by(alpha).add(&g)?)?;
        let of = op.apply(&f)?;
        let og = op.apply(&g)?;
        let mut rebuilt = of.clone();
        rebuilt.values.iter_mut().for_each(|v| *v *= alpha);
        // Same scale and refinement, so subcell indices line up.
        let lo = rebuilt.cell_start.min(og.cell_start);
        let hi = (rebuilt.cell_start + rebuilt.cells()).max(og.cell_start + og.cells());
        let mut sum = SampledFunction {
            cell_scale: rebuilt.cell_scale,
            cell_start: lo,
            refine: rebuilt.refine,
            values: vec![0.0; ((hi - lo) * rebuilt.refine as i64) as usize],
        };
        for c in lo..hi {
            for r in 0..sum.refine {
                let idx = ((c - lo) * sum.refine as i64 + r as i64) as usize;
                sum.values[idx] = rebuilt.value_at_subcell(c, r) + og.value_at_subcell(c, r);
            }
        }
        let scale = 1.0 + lp_norm(&combined, f64::INFINITY)?;
        if sampled_max_diff(&combined, &sum)? > 1e-9 * scale {
            return Err(Error::Contract(format!(
                "{} failed the linearity spot check",
                op.name()
            )));
        }
    }
    Ok(())
}

/// Largest output/input Lp ratio seen over one atom family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartReport {
    pub part: Flavor,
    pub sup_ratio: f64,
    pub samples: usize,
}

/// Empirical norm estimate, part by part.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OpNormReport {
    pub p: f64,
    pub parts: Vec<PartReport>,
    pub overall: f64,
}

/// Probe the operator with atoms from every family and report the largest
/// Lp ratios. Linear operators get a five-pair linearity spot check first.
pub fn op_norm_estimate(
    op: &dyn Operator,
    p: f64,
    samples_per_part: usize,
    seed: u64,
) -> Result<OpNormReport> {
    check_p(p)?;
    let mut rng = crate::sampling::rng_from_seed(seed);
    if op.is_linear() {
        linearity_spot_check(op, &mut rng)?;
    }
    let mut parts = Vec::new();
    for part in [
        Flavor::General,
        Flavor::Dyadic,
        Flavor::TwoSided,
        Flavor::Special,
        Flavor::SpecialOrigin,
    ] {
        let mut sup_ratio = 0.0f64;
        let mut used = 0;
        for _ in 0..samples_per_part {
            let atom = sample_part(&mut rng, part);
            let denom = lp_norm(&atom.shape, p)?;
            if denom == 0.0 {
                continue;
            }
            let image = op.apply(&atom.shape)?;
            sup_ratio = sup_ratio.max(lp_norm(&image, p)? / denom);
            used += 1;
        }
        parts.push(PartReport {
            part,
            sup_ratio,
            samples: used,
        });
    }
    let overall = parts.iter().fold(0.0f64, |m, r| m.max(r.sup_ratio));
    Ok(OpNormReport { p, parts, overall })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::GridInterval;
    use crate::sampling::{random_atom, random_mean_zero, rng_from_seed, AtomKind};

    #[test]
    fn tau_kills_odd_inputs_identically() {
        for n in [-2i32, 0, 3] {
            let b = StepFunction::special_atom(n, 0, n - 2).unwrap();
            for eps in [0.0, 0.25, 1.0] {
                let out = tau_apply(&b, eps, 8).unwrap();
                assert!(out.values.iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn tau_of_a_unit_indicator_matches_the_closed_form() {
        let chi = StepFunction::indicator(&GridInterval::new(0, 0, 1).unwrap(), -2).unwrap();
        let eps = 0.5;
        let out = tau_apply(&chi, eps, 8).unwrap();
        assert_eq!(out.cells(), 8);
        for c in 0..4i64 {
            for r in 0..8u32 {
                let x = (c as f64 + (r as f64 + 0.5) / 8.0) * 0.25;
                let expected = x.powf(eps);
                let got = out.value_at_subcell(c, r);
                assert!((got - expected).abs() <= 1e-12 * expected.abs());
                assert_eq!(out.value_at_subcell(-1 - c, 8 - 1 - r), -got);
            }
        }
    }

    #[test]
    fn tau_dilation_covariance() {
        let mut rng = rng_from_seed(31);
        for eps in [0.25, 0.5, 0.75] {
            let f = random_mean_zero(&mut rng, -1, -4, 9, 8);
            let squeezed = StepFunction::from_cells(-2, f.cell_start, f.values.clone()).unwrap();
            let of = tau_apply(&f, eps, 4).unwrap();
            let osq = tau_apply(&squeezed, eps, 4).unwrap();
            let ratio = f64::exp2(-eps);
            assert_eq!(of.values.len(), osq.values.len());
            for (a, b) in osq.values.iter().zip(of.values.iter()) {
                assert!((a - ratio * b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn tau_lp_norm_stabilizes_on_smooth_cases() {
        let a = random_atom(&mut rng_from_seed(32), AtomKind::TwoSided);
        let eps = 0.5;
        let p = 2.0;
        let n = tau_lp_norm(&a.shape, eps, p).unwrap();
        assert!(n.is_finite() && n >= 0.0);
    }

    #[test]
    fn lp_and_weak_lp_basics() {
        let chi = StepFunction::indicator(&GridInterval::new(0, 0, 4).unwrap(), 0).unwrap();
        assert_eq!(lp_norm(&chi, 2.0).unwrap(), 2.0);
        assert_eq!(lp_norm(&chi, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(weak_lp_norm(&chi, f64::INFINITY).unwrap(), 1.0);
        assert!(lp_norm(&chi, 0.5).is_err());

        let mut rng = rng_from_seed(33);
        for _ in 0..20 {
            let f = random_mean_zero(&mut rng, -1, -6, 14, 8);
            for p in [1.0, 1.5, 2.0, 4.0] {
                assert!(weak_lp_norm(&f, p).unwrap() <= lp_norm(&f, p).unwrap() + 1e-15);
            }
        }
    }

    #[test]
    fn maximal_of_b_matches_the_closed_form() {
        let b = StepFunction::special_atom(0, 0, 0).unwrap();
        for eps in [0.25, 0.5, 0.75] {
            let m = maximal_dyadic(&b, eps, 5, None).unwrap();
            assert_eq!(m.value_at(0.5), 0.5);
            assert_eq!(m.value_at(-0.5), 0.5);
            for j in 0..5i32 {
                let expected = f64::exp2((eps - 1.0) * (j + 1) as f64) * 0.5;
                let x = 1.5 * f64::exp2(j as f64);
                assert_eq!(m.value_at(x), expected);
                assert_eq!(m.value_at(-x), expected);
            }
        }
    }

    #[test]
    fn maximal_is_bounded_by_the_atom_profile_exactly() {
        let mut rng = rng_from_seed(34);
        for eps in [0.25, 0.5, 0.75] {
            for _ in 0..25 {
                let a = random_atom(&mut rng, AtomKind::Dyadic);
                let i = a.defining.normalize();
                let g = i.scale;
                let bound = f64::exp2((eps - 1.0) * g as f64);
                let m = maximal_dyadic(&a.shape, eps, a.shape.enclosing_scale() + 1, None)
                    .unwrap();
                for (j, v) in m.values.iter().enumerate() {
                    let c = m.cell_start + j as i64;
                    let inside = {
                        let fine = i.to_scale(m.cell_scale).unwrap();
                        c >= fine.lo && c < fine.hi
                    };
                    if inside {
                        assert!(*v <= bound);
                    } else {
                        assert_eq!(*v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn truncation_is_monotone_and_capped_by_the_full_function() {
        let mut rng = rng_from_seed(35);
        for _ in 0..10 {
            let a = random_atom(&mut rng, AtomKind::General);
            let domain = a.shape.enclosing_scale() + 2;
            let full = maximal_dyadic(&a.shape, 0.5, domain, None).unwrap();
            let mut prev = StepFunction::zero(a.shape.cell_scale);
            for n in 0..=8 {
                let t = maximal_dyadic(&a.shape, 0.5, domain, Some(n)).unwrap();
                for (j, v) in t.values.iter().enumerate() {
                    let c = t.cell_start + j as i64;
                    assert!(prev.value_at_cell(c) <= *v);
                    assert!(*v <= full.value_at_cell(c));
                }
                prev = t;
            }
        }
    }

    #[test]
    fn op_norm_reports_cover_every_part() {
        let tau = TauOperator {
            epsilon: 0.5,
            refine: 4,
        };
        let r = op_norm_estimate(&tau, 2.0, 5, 40).unwrap();
        assert_eq!(r.parts.len(), 5);
        assert!(r.overall > 0.0);
        assert!(r.parts.iter().all(|p| p.sup_ratio <= r.overall));

        let max_op = MaximalOperator {
            epsilon: 0.5,
            trunc: None,
        };
        let r = op_norm_estimate(&max_op, 2.0, 5, 41).unwrap();
        assert!(r.overall > 0.0);
    }

    #[test]
    fn domain_errors_are_reported() {
        let b = StepFunction::special_atom(0, 0, 0).unwrap();
        assert!(matches!(
            tau_apply(&b, 1.5, 4),
            Err(Error::Domain { what: "epsilon", .. })
        ));
        assert!(matches!(
            maximal_dyadic(&b, -0.1, 4, None),
            Err(Error::Domain { .. })
        ));
        assert!(maximal_dyadic(&b, 0.5, -1, None).is_err());
    }
}
