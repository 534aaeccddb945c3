//! Atoms, atomic decompositions, and the constructive machinery around
//! them: validation, the three-atom split, Haar expansion, per-flavor
//! decomposition with cost bounds, the half-line obstruction, two-sided
//! symmetrization, and the log-moment counterexample family.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::interval::{check_scale, DyadicInterval, GridInterval, MAX_CELLS};
use crate::num::{self, exp2i, Accumulator, DEFAULT_TOL};
use crate::step::{HalfLine, StepFunction};
use serde::{Deserialize, Serialize};

/// A step function together with the interval that certifies it as an atom:
/// support inside `defining`, values bounded by `1/|defining|`, zero integral.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Atom {
    pub shape: StepFunction,
    pub defining: GridInterval,
}

impl Atom {
    /// Validate and wrap; rejects shapes that break the atom conditions.
    pub fn new(shape: StepFunction, defining: GridInterval) -> Result<Self> {
        let report = validate_atom(&shape, &defining)?;
        if !report.ok {
            return Err(Error::Contract(format!(
                "not an atom: support violation {:e}, size violation {:e}, cancellation violation {:e}",
                report.support_violation, report.size_violation, report.cancellation_violation
            )));
        }
        Ok(Self { shape, defining })
    }
}

/// Outcome of checking the three atom conditions.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AtomReport {
    /// Largest |value| on a cell outside the defining interval.
    pub support_violation: f64,
    /// Excess of sup|a| over 1/|I| (zero when within the bound).
    pub size_violation: f64,
    /// |integral of the shape|.
    pub cancellation_violation: f64,
    /// Largest of the three, for one-number reporting.
    pub max_violation: f64,
    pub ok: bool,
}

pub fn validate_atom(shape: &StepFunction, defining: &GridInterval) -> Result<AtomReport> {
    validate_atom_with(shape, defining, DEFAULT_TOL)
}

/// Check the atom conditions with an explicit tolerance. Support and size
/// are compared against `tol / |I|` (the natural value scale of an atom on
/// I), cancellation against `tol` itself (the integral scale).
pub fn validate_atom_with(
    shape: &StepFunction,
    defining: &GridInterval,
    tol: f64,
) -> Result<AtomReport> {
    let scale = shape.cell_scale.min(defining.scale);
    let f = shape.refine_to(scale)?;
    let d = defining.to_scale(scale)?;
    let mut outside = 0.0f64;
    let mut inside = 0.0f64;
    for (j, v) in f.values.iter().enumerate() {
        let c = f.cell_start + j as i64;
        if c >= d.lo && c < d.hi {
            inside = inside.max(v.abs());
        } else {
            outside = outside.max(v.abs());
        }
    }
    let bound = 1.0 / defining.length();
    let size_violation = (inside - bound).max(0.0);
    let cancellation_violation = f.integral().abs();
    let ok = outside <= tol * bound
        && size_violation <= tol * bound
        && cancellation_violation <= tol;
    Ok(AtomReport {
        support_violation: outside,
        size_violation,
        cancellation_violation,
        max_violation: outside.max(size_violation).max(cancellation_violation),
        ok,
    })
}

/// Which atom family a decomposition draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    General,
    Dyadic,
    TwoSided,
    Special,
    SpecialOrigin,
}

/// A weighted list of atoms representing `sum lambda_j a_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomicDecomposition {
    pub terms: Vec<(f64, Atom)>,
    pub flavor: Flavor,
}

impl AtomicDecomposition {
    /// `sum |lambda_j|`; an upper bound for the flavor's atomic norm.
    pub fn cost(&self) -> f64 {
        num::sum(self.terms.iter().map(|(l, _)| l.abs()))
    }

    pub fn reconstruct(&self) -> Result<StepFunction> {
        let mut acc = StepFunction::zero(
            self.terms
                .iter()
                .map(|(_, a)| a.shape.cell_scale)
                .min()
                .unwrap_or(0),
        );
        for (lambda, atom) in &self.terms {
            acc = acc.add(&atom.shape.scale_by(*lambda))?;
        }
        Ok(acc)
    }

    /// Check every defining interval against the flavor's constraint.
    pub fn validate_flavor(&self) -> Result<()> {
        for (j, (_, atom)) in self.terms.iter().enumerate() {
            let ok = match self.flavor {
                Flavor::General => true,
                Flavor::Dyadic => atom.defining.as_dyadic().is_some(),
                Flavor::TwoSided => atom.defining.lo >= 0 || atom.defining.hi <= 0,
                Flavor::Special => special_atom_index(atom).is_some(),
                Flavor::SpecialOrigin => matches!(special_atom_index(atom), Some((_, 0))),
            };
            if !ok {
                return Err(Error::Contract(format!(
                    "term {j} violates flavor {:?}: defining interval [{}, {})",
                    self.flavor,
                    atom.defining.lo_f64(),
                    atom.defining.hi_f64()
                )));
            }
        }
        Ok(())
    }
}

/// If the atom is exactly some b_{n,k}, return (n, k).
pub fn special_atom_index(atom: &Atom) -> Option<(i32, i64)> {
    let d = atom.defining.normalize();
    if d.hi - d.lo != 2 {
        return None;
    }
    let (n, k) = (d.scale, d.lo + 1);
    let b = StepFunction::special_atom(n, k, atom.shape.cell_scale).ok()?;
    atom.shape.eq_as_functions(&b).then_some((n, k))
}

/// The three-atom split of `a`: two dyadic-interval atoms and one special
/// atom rebuilding `a = c1·a_L + c2·a_R + c3·b_{n,k}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitResult {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub n: i32,
    pub k: i64,
    pub a_l: Atom,
    pub a_r: Atom,
}

impl SplitResult {
    pub fn reconstruct(&self) -> Result<StepFunction> {
        let scale = self.a_l.shape.cell_scale.min(self.a_r.shape.cell_scale);
        let b = StepFunction::special_atom(self.n, self.k, scale.min(self.n))?;
        self.a_l
            .shape
            .scale_by(self.c1)
            .add(&self.a_r.shape.scale_by(self.c2))?
            .add(&b.scale_by(self.c3))
    }
}

/// Split an atom on I into two atoms on the adjacent dyadic intervals
/// [(k-1)2^n, k·2^n) and [k·2^n, (k+1)2^n) plus a multiple of b_{n,k},
/// where 2^{n-1} <= |I| < 2^n and k·2^n is the multiple of 2^n interior
/// to I when one exists. When none exists, I sits inside a single length-2^n
/// block [k·2^n, (k+1)2^n); then a_L = 0, c3 = 0 and a = 4·a_R.
pub fn split_atom(a: &Atom) -> Result<SplitResult> {
    let i = a.defining;
    let w = i.hi - i.lo;
    let n = i.scale + (64 - (w as u64).leading_zeros() as i32);
    check_scale("split scale", n)?;
    let gap = (n - i.scale) as u32;
    let step = 1i64 << gap;

    let q = (i.hi - 1).div_euclid(step);
    let k_pos = if q * step > i.lo { q } else { i.lo.div_euclid(step) };

    let m = a.shape.cell_scale;
    let make_zone = |k: i64| -> Result<GridInterval> {
        let lo = k.checked_mul(step).ok_or(Error::Range {
            what: "split zone position",
            value: k,
            min: i64::MIN,
            max: i64::MAX,
        })?;
        GridInterval::new(i.scale, lo, lo + step)
    };
    let left = make_zone(k_pos - 1)?;
    let right = make_zone(k_pos)?;

    let il = a.shape.integrate(&left)?;
    let ir = a.shape.integrate(&right)?;
    let c3 = 2.0 * il;

    let zone_atom = |zone: GridInterval, mean_src: f64| -> Result<Atom> {
        let mu = exp2i(-n) * mean_src;
        let z = zone.to_scale(m)?;
        if z.hi - z.lo > MAX_CELLS {
            return Err(Error::Range {
                what: "cell count",
                value: z.hi - z.lo,
                min: 0,
                max: MAX_CELLS,
            });
        }
        let values = (z.lo..z.hi)
            .map(|c| 0.25 * (a.shape.value_at_cell(c) - mu))
            .collect();
        Ok(Atom {
            shape: StepFunction::from_cells(m, z.lo, values)?,
            defining: zone,
        })
    };

    Ok(SplitResult {
        c1: 4.0,
        c2: 4.0,
        c3,
        n,
        k: k_pos,
        a_l: zone_atom(left, il)?,
        a_r: zone_atom(right, ir)?,
    })
}

/// Haar coefficients of `f` over dyadic intervals inside [-2^L, 0) and
/// [0, 2^L), plus the two half-line means the system cannot reach.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HaarExpansion {
    pub coefficients: BTreeMap<DyadicInterval, f64>,
    pub residual: StepFunction,
    pub max_scale: i32,
}

impl HaarExpansion {
    /// `sum |c_I|`; by `||H_I||_{H^1} <= 1` an atomic-cost upper bound.
    pub fn coefficient_cost(&self) -> f64 {
        num::sum(self.coefficients.values().map(|c| c.abs()))
    }

    pub fn reconstruct(&self, cell_scale: i32) -> Result<StepFunction> {
        let gap = self.max_scale - cell_scale;
        if !(0..=26).contains(&gap) {
            return Err(Error::Range {
                what: "scale gap",
                value: gap as i64,
                min: 0,
                max: 26,
            });
        }
        let half = 1i64 << gap;
        let mut out = vec![0.0f64; (2 * half) as usize];
        let at = |c: i64| (c + half) as usize;
        for (i, c) in &self.coefficients {
            let g = i.as_grid(cell_scale)?;
            let v = c * exp2i(-i.n);
            let mid = (g.lo + g.hi) / 2;
            for cell in g.lo..mid {
                out[at(cell)] += v;
            }
            for cell in mid..g.hi {
                out[at(cell)] -= v;
            }
        }
        let res = self.residual.refine_to(cell_scale)?;
        let f = StepFunction::from_cells(cell_scale, -half, out)?;
        f.add(&res)
    }
}

/// Expand `f` (supported in [-2^L, 2^L)) over the Haar system per half-line:
/// `c_I` is the integral over the left half of I minus the integral over the
/// right half; the residual holds the two half-line means, and vanishes
/// exactly when both half-line integrals do.
pub fn haar_expand(f: &StepFunction, max_scale: i32) -> Result<HaarExpansion> {
    check_scale("haar window scale", max_scale)?;
    let m = f.cell_scale;
    let gap = max_scale - m;
    if !(0..=26).contains(&gap) {
        return Err(Error::Range {
            what: "haar window depth",
            value: gap as i64,
            min: 0,
            max: 26,
        });
    }
    let half = 1i64 << gap;
    if let Some(hull) = f.support_hull() {
        if hull.lo < -half || hull.hi > half {
            return Err(Error::Range {
                what: "support cell",
                value: if hull.lo < -half { hull.lo } else { hull.hi },
                min: -half,
                max: half,
            });
        }
    }

    let mut coefficients = BTreeMap::new();
    let mut residual_values = Vec::with_capacity(2);
    for side_lo in [-half, 0] {
        // Integrals over scale-m cells of this half-line, folded upward.
        let mut level: Vec<f64> = (0..half)
            .map(|j| f.value_at_cell(side_lo + j) * exp2i(m))
            .collect();
        for d in 1..=gap {
            let n = m + d;
            let coarse: Vec<f64> = level
                .chunks_exact(2)
                .map(|pair| pair[0] + pair[1])
                .collect();
            let base_k = side_lo >> d;
            for (j, pair) in level.chunks_exact(2).enumerate() {
                let c = pair[0] - pair[1];
                if c != 0.0 {
                    coefficients.insert(DyadicInterval::new(n, base_k + j as i64), c);
                }
            }
            level = coarse;
        }
        residual_values.push(level[0] * exp2i(-max_scale));
    }

    Ok(HaarExpansion {
        coefficients,
        residual: StepFunction::from_cells(max_scale, -1, residual_values)?,
        max_scale,
    })
}

/// The function b: +1/2 on [-1, 0), -1/2 on [0, 1), at a scale compatible
/// with `f`.
fn b_for(f: &StepFunction) -> Result<StepFunction> {
    StepFunction::special_atom(0, 0, f.cell_scale.min(0))
}

fn haar_terms(f: &StepFunction, flavor: Flavor) -> Result<AtomicDecomposition> {
    let expansion = haar_expand(f, f.enclosing_scale())?;
    if expansion.residual.max_abs() * expansion.residual.cell_width() > 16.0 * DEFAULT_TOL {
        return Err(Error::Contract(format!(
            "haar residual mass {:e} not attributable to rounding",
            expansion.residual.max_abs() * expansion.residual.cell_width()
        )));
    }
    let m = f.cell_scale;
    let terms = expansion
        .coefficients
        .iter()
        .map(|(i, c)| {
            Ok((
                *c,
                Atom {
                    shape: StepFunction::haar(*i, m)?,
                    defining: GridInterval::new(i.n, i.k, i.k + 1)?,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AtomicDecomposition { terms, flavor })
}

/// Decompose `f` into atoms of the requested flavor.
///
/// Two-sided and dyadic flavors exist only when the positive half-line
/// integral vanishes; otherwise the infeasibility carries that obstruction.
/// The general flavor corrects by `2A·b` first and appends `(-2A, b)`.
pub fn decompose(f: &StepFunction, flavor: Flavor) -> Result<AtomicDecomposition> {
    let total = f.integral();
    if total.abs() > DEFAULT_TOL {
        return Err(Error::NonzeroIntegral { value: total });
    }
    let a_pos = f.restrict(HalfLine::Positive).integral();
    match flavor {
        Flavor::Dyadic | Flavor::TwoSided => {
            if a_pos.abs() > DEFAULT_TOL {
                return Err(Error::Infeasible { obstruction: a_pos });
            }
            haar_terms(f, flavor)
        }
        Flavor::General => {
            if a_pos == 0.0 {
                return haar_terms(f, Flavor::General);
            }
            let b = b_for(f)?;
            let g = f.add(&b.scale_by(2.0 * a_pos))?;
            let mut dec = haar_terms(&g, Flavor::General)?;
            dec.terms.push((
                -2.0 * a_pos,
                Atom {
                    shape: b,
                    defining: GridInterval::new(0, -1, 1)?,
                },
            ));
            Ok(dec)
        }
        Flavor::Special | Flavor::SpecialOrigin => Err(Error::Contract(
            "decompose supports the general, dyadic, and two_sided flavors".into(),
        )),
    }
}

/// Smallest dyadic interval containing `j`, if any (none straddles 0).
fn dyadic_hull(j: &GridInterval) -> Option<GridInterval> {
    let w = j.hi - j.lo;
    for n in (j.scale + num::ceil_log2(w))..=crate::interval::SCALE_MAX {
        let gap = (n - j.scale) as u32;
        if gap >= 63 {
            return None;
        }
        let step = 1i64 << gap;
        let k = j.lo.div_euclid(step);
        if (k + 1) * step >= j.hi {
            return GridInterval::new(j.scale, k * step, (k + 1) * step).ok();
        }
    }
    None
}

/// Upper bound for the flavor's atomic norm: the cheapest of the feasible
/// strategies (Haar expansion, b-corrected Haar expansion, and writing `f`
/// itself as one atom on a flavor-admissible hull).
pub fn h1_upper(f: &StepFunction, flavor: Flavor) -> Result<f64> {
    if f.is_zero() {
        return Ok(0.0);
    }
    let mut best = decompose(f, flavor)?.cost();

    let hull = f.support_hull().expect("nonzero function has a hull");
    let single = match flavor {
        Flavor::General => Some(hull),
        Flavor::TwoSided => (hull.lo >= 0 || hull.hi <= 0).then_some(hull),
        Flavor::Dyadic => dyadic_hull(&hull),
        _ => None,
    };
    if let Some(i) = single {
        best = best.min(f.max_abs() * i.length());
    }
    Ok(best)
}

/// Proposition-style distance to the zero-half-line-integral class: the
/// obstruction `|int_0^inf f|` and the corrected `g = f + 2(int_0^inf f)·b`,
/// which has exact zero positive-half integral.
pub fn distance_to_ha(f: &StepFunction) -> Result<(f64, StepFunction)> {
    let total = f.integral();
    if total.abs() > DEFAULT_TOL {
        return Err(Error::NonzeroIntegral { value: total });
    }
    let a_pos = f.restrict(HalfLine::Positive).integral();
    if a_pos == 0.0 {
        return Ok((0.0, f.clone()));
    }
    let g = f.add(&b_for(f)?.scale_by(2.0 * a_pos))?;
    Ok((a_pos.abs(), g))
}

/// Fold a decomposition of a one-sided `g` into two-sided-flavor atoms
/// `(1/4)[a(x) + a(-x)]·chi_{[0,inf)}` with coefficients `4·lambda`.
///
/// `dec` must reconstruct `g` itself (a function vanishing on the negative
/// axis); its atoms may still be supported on both sides.
pub fn symmetrize(g: &StepFunction, dec: &AtomicDecomposition) -> Result<AtomicDecomposition> {
    let neg = g.restrict(HalfLine::Negative);
    if !neg.is_zero() {
        return Err(Error::NegativeSupport {
            mass: neg.cell_width() * num::sum(neg.values.iter().map(|v| v.abs())),
        });
    }
    let rebuilt = dec.reconstruct()?;
    let err = rebuilt.max_abs_diff(g)?;
    if err > DEFAULT_TOL * (1.0 + g.max_abs()) {
        return Err(Error::Contract(format!(
            "decomposition reconstructs the target only to {err:e}"
        )));
    }

    let mut terms = Vec::new();
    for (lambda, atom) in &dec.terms {
        let sh = &atom.shape;
        let ext = sh.cell_end().max(-sh.cell_start).max(0);
        let values: Vec<f64> = (0..ext)
            .map(|c| 0.25 * (sh.value_at_cell(c) + sh.value_at_cell(-1 - c)))
            .collect();
        let folded = StepFunction::from_cells(sh.cell_scale, 0, values)?.trimmed();
        let Some(hull) = folded.support_hull() else {
            continue;
        };
        terms.push((4.0 * lambda, Atom::new(folded, hull)?));
    }
    Ok(AtomicDecomposition {
        terms,
        flavor: Flavor::TwoSided,
    })
}

/// Partial sum `L_N = sum_{n=1}^{N} n^{-2}`.
pub fn partial_basel(n_terms: u32) -> f64 {
    num::sum((1..=n_terms).map(|n| 1.0 / (n as f64 * n as f64)))
}

/// The spike `f_n = 2^n · chi_{[2^{-n}, 2^{-n+1})}`.
pub fn spike(n: u32, cell_scale: i32) -> Result<StepFunction> {
    let scale = -(n as i32);
    check_scale("spike scale", scale)?;
    if cell_scale > scale {
        return Err(Error::Resolution {
            required: scale,
            cell_scale,
        });
    }
    StepFunction::indicator(&GridInterval::new(scale, 1, 2)?, cell_scale)
        .map(|f| f.scale_by(exp2i(n as i32)))
}

/// The odd extension of `L_N·chi_{[0,1)} - sum_{n<=N} n^{-2} f_n`, at cell
/// scale `-N`: a function whose Haar cost stays bounded while its spike
/// log-moment grows like `ln N`.
pub fn counterexample(n_spikes: u32) -> Result<StepFunction> {
    if n_spikes == 0 {
        return Err(Error::Range {
            what: "spike count",
            value: 0,
            min: 1,
            max: -(crate::interval::SCALE_MIN as i64),
        });
    }
    let m = -(n_spikes as i32);
    check_scale("counterexample scale", m)?;
    let half = 1usize << n_spikes;
    let l_n = partial_basel(n_spikes);
    let mut pos = vec![l_n; half];
    for n in 1..=n_spikes {
        let height = exp2i(n as i32) / (n as f64 * n as f64);
        for v in &mut pos[(half >> n)..(half >> (n - 1))] {
            *v -= height;
        }
    }
    let mut values = vec![0.0; 2 * half];
    for (j, v) in pos.iter().enumerate() {
        values[half + j] = *v;
        values[half - 1 - j] = -v;
    }
    StepFunction::from_cells(m, -(half as i64), values)
}

/// The explicit cost-6·L_N decomposition of `counterexample(N)`: one merged
/// `-2·L_N·b` term plus one spike-pair atom per n, each costing 4·n^{-2}.
pub fn counterexample_decomposition(n_spikes: u32) -> Result<AtomicDecomposition> {
    if n_spikes == 0 || -(n_spikes as i32) < crate::interval::SCALE_MIN {
        return Err(Error::Range {
            what: "spike count",
            value: n_spikes as i64,
            min: 1,
            max: -(crate::interval::SCALE_MIN as i64),
        });
    }
    let l_n = partial_basel(n_spikes);
    let mut terms = vec![(
        -2.0 * l_n,
        Atom {
            shape: StepFunction::special_atom(0, 0, 0)?,
            defining: GridInterval::new(0, -1, 1)?,
        },
    )];
    for n in 1..=n_spikes {
        let scale = -(n as i32);
        let v = exp2i(n as i32 - 2);
        terms.push((
            -4.0 / (n as f64 * n as f64),
            Atom {
                shape: StepFunction::from_cells(scale, -2, vec![-v, 0.0, 0.0, v])?,
                defining: GridInterval::new(scale, -2, 2)?,
            },
        ));
    }
    Ok(AtomicDecomposition {
        terms,
        flavor: Flavor::General,
    })
}

/// Haar-strategy cost of `counterexample(N)` in closed form: twice the sum
/// of the positive-half spine coefficients `|c_j|`, where
/// `c_j = (j+1)^{-2} - sum_{n=j+2}^{N} n^{-2}`. Valid for any N, including
/// far beyond materializable cell scales.
pub fn counterexample_h1_upper(n_spikes: u32) -> f64 {
    let x = |n: u32| 1.0 / (n as f64 * n as f64);
    let mut tail = 0.0;
    let mut acc = Accumulator::new();
    for j in (0..n_spikes).rev() {
        // tail = sum_{n=j+2}^{N} x_n
        acc.add((x(j + 1) - tail).abs());
        tail += x(j + 1);
    }
    2.0 * acc.total()
}

/// Log moment of the spike part in closed form:
/// `M(N) = sum n^{-2} |int f_n ln x dx| = sum n^{-2} (n ln2 - (2 ln2 - 1))`.
pub fn counterexample_log_moment(n_spikes: u32) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    num::sum((1..=n_spikes).map(|n| (n as f64 * ln2 - (2.0 * ln2 - 1.0)) / (n as f64 * n as f64)))
}

/// `int_0^inf f(x) ln x dx`, exactly per cell via `x ln x - x`.
pub fn log_moment(f: &StepFunction) -> Result<f64> {
    let neg = f.restrict(HalfLine::Negative);
    if !neg.is_zero() {
        return Err(Error::NegativeSupport {
            mass: neg.cell_width() * num::sum(neg.values.iter().map(|v| v.abs())),
        });
    }
    let h = f.cell_width();
    let antider = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() - x };
    let mut acc = Accumulator::new();
    for (j, v) in f.values.iter().enumerate() {
        let c = f.cell_start + j as i64;
        if c < 0 || *v == 0.0 {
            continue;
        }
        let a = c as f64 * h;
        acc.add(v * (antider(a + h) - antider(a)));
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::SCALE_MIN;

    fn grid(scale: i32, lo: i64, hi: i64) -> GridInterval {
        GridInterval::new(scale, lo, hi).unwrap()
    }

    fn b_atom() -> Atom {
        Atom::new(
            StepFunction::special_atom(0, 0, -1).unwrap(),
            grid(0, -1, 1),
        )
        .unwrap()
    }

    #[test]
    fn validate_flags_each_condition() {
        let haar = StepFunction::haar(DyadicInterval::new(0, 0), -1).unwrap();
        assert!(validate_atom(&haar, &grid(0, 0, 1)).unwrap().ok);

        let chi = StepFunction::indicator(&grid(0, 0, 1), 0).unwrap();
        let r = validate_atom(&chi, &grid(0, 0, 1)).unwrap();
        assert!(!r.ok);
        assert_eq!(r.cancellation_violation, 1.0);
        assert_eq!(r.max_violation, 1.0);

        let double_b = StepFunction::special_atom(0, 0, 0).unwrap().scale_by(2.0);
        let r = validate_atom(&double_b, &grid(0, -1, 1)).unwrap();
        assert!(!r.ok);
        assert_eq!(r.size_violation, 0.5);

        let off = StepFunction::haar(DyadicInterval::new(0, 3), -1).unwrap();
        let r = validate_atom(&off, &grid(0, 0, 1)).unwrap();
        assert!(r.support_violation > 0.0);
    }

    #[test]
    fn split_of_b_matches_hand_evaluation() {
        let s = split_atom(&b_atom()).unwrap();
        assert_eq!((s.n, s.k), (2, 0));
        assert_eq!((s.c1, s.c2, s.c3), (4.0, 4.0, 1.0));
        assert_eq!(s.a_l.defining, grid(2, -1, 0));
        assert_eq!(s.a_r.defining, grid(2, 0, 1));
        // a_L: -1/32 on [-4,-1), 3/32 on [-1,0); a_R mirrored with signs flipped.
        for x in [-3.5, -2.5, -1.5] {
            assert_eq!(s.a_l.shape.value_at(x), -1.0 / 32.0);
        }
        assert_eq!(s.a_l.shape.value_at(-0.5), 3.0 / 32.0);
        assert_eq!(s.a_r.shape.value_at(0.5), -3.0 / 32.0);
        for x in [1.5, 2.5, 3.5] {
            assert_eq!(s.a_r.shape.value_at(x), 1.0 / 32.0);
        }
        assert!(validate_atom(&s.a_l.shape, &s.a_l.defining).unwrap().ok);
        assert!(validate_atom(&s.a_r.shape, &s.a_r.defining).unwrap().ok);
        let back = s.reconstruct().unwrap();
        assert_eq!(back.max_abs_diff(&b_atom().shape).unwrap(), 0.0);
    }

    #[test]
    fn split_degenerate_case_keeps_everything_in_one_zone() {
        let a = Atom::new(
            StepFunction::haar(DyadicInterval::new(0, 5), -1).unwrap(),
            grid(0, 5, 6),
        )
        .unwrap();
        let s = split_atom(&a).unwrap();
        assert_eq!(s.c3, 0.0);
        assert!(s.a_l.shape.is_zero());
        assert_eq!(
            s.a_r.shape.max_abs_diff(&a.shape.scale_by(0.25)).unwrap(),
            0.0
        );
        assert_eq!(s.reconstruct().unwrap().max_abs_diff(&a.shape).unwrap(), 0.0);
    }

    #[test]
    fn split_bounds_hold_for_structured_atoms() {
        for (scale, lo, hi) in [(-2, -5, 7), (0, 3, 11), (-1, -9, -2), (1, -3, 1)] {
            let i = grid(scale, lo, hi);
            let w = (hi - lo) as usize;
            let mut values: Vec<f64> = (0..w)
                .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * exp2i(-scale) / w as f64)
                .collect();
            let sum: f64 = values.iter().sum();
            values[0] -= sum;
            let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let shape = StepFunction::from_cells(scale, lo, values).unwrap();
            let shape = shape.scale_by(1.0 / (sup.max(1.0) * i.length()));
            let a = Atom::new(shape, i).unwrap();
            let s = split_atom(&a).unwrap();
            assert!(s.c3.abs() <= 4.0);
            assert!(s.a_l.shape.max_abs() <= exp2i(-s.n) * (1.0 + 1e-12));
            assert!(s.a_r.shape.max_abs() <= exp2i(-s.n) * (1.0 + 1e-12));
            assert!(s.a_l.defining.as_dyadic().is_some());
            let err = s.reconstruct().unwrap().max_abs_diff(&a.shape).unwrap();
            assert!(err <= exp2i(-30) * a.shape.max_abs());
        }
    }

    #[test]
    fn haar_expansion_of_basic_generators() {
        let h = StepFunction::haar(DyadicInterval::new(0, 0), -1).unwrap();
        let e = haar_expand(&h, 2).unwrap();
        assert!(e.residual.is_zero());
        assert_eq!(e.coefficients.len(), 1);
        assert_eq!(e.coefficients[&DyadicInterval::new(0, 0)], 1.0);

        // b_{0,1} is the Haar function of [0, 2).
        let b01 = StepFunction::special_atom(0, 1, -1).unwrap();
        let e = haar_expand(&b01, 2).unwrap();
        assert!(e.residual.is_zero());
        assert_eq!(e.coefficients.len(), 1);
        assert_eq!(e.coefficients[&DyadicInterval::new(1, 0)], 1.0);
    }

    #[test]
    fn haar_coefficients_match_inner_product_oracle() {
        // Support [1, 3) straddles the dyadic point 2: several scales appear.
        let f = StepFunction::special_atom(0, 2, -1).unwrap();
        let e = haar_expand(&f, 2).unwrap();
        assert!(e.residual.is_zero());
        assert!(e.coefficients.len() > 1);
        for (i, c) in &e.coefficients {
            let h = StepFunction::haar(*i, -1).unwrap();
            let oracle = f.inner_product(&h).unwrap() * i.length();
            assert!((c - oracle).abs() <= 1e-15);
        }
        let back = e.reconstruct(-1).unwrap();
        assert_eq!(back.max_abs_diff(&f).unwrap(), 0.0);
    }

    #[test]
    fn residual_carries_exactly_the_halfline_means() {
        let f = StepFunction::from_cells(-1, -3, vec![1.0, -2.0, 0.5, 3.0, 0.25, 0.25]).unwrap();
        let e = haar_expand(&f, 2).unwrap();
        let pos = f.restrict(HalfLine::Positive).integral();
        let neg = f.restrict(HalfLine::Negative).integral();
        assert_eq!(e.residual.value_at(1.0), pos / 4.0);
        assert_eq!(e.residual.value_at(-1.0), neg / 4.0);
        assert!(e.reconstruct(-1).unwrap().max_abs_diff(&f).unwrap() < 1e-15);
    }

    #[test]
    fn decompose_examples() {
        let b = b_atom().shape;
        let dec = decompose(&b, Flavor::General).unwrap();
        assert_eq!(dec.terms.len(), 1);
        assert_eq!(dec.cost(), 1.0);
        assert_eq!(special_atom_index(&dec.terms[0].1), Some((0, 0)));

        match decompose(&b, Flavor::TwoSided) {
            Err(Error::Infeasible { obstruction }) => assert_eq!(obstruction, -0.5),
            other => panic!("expected infeasible, got {other:?}"),
        }

        let h = StepFunction::haar(DyadicInterval::new(1, -1), -1).unwrap();
        let dec = decompose(&h, Flavor::Dyadic).unwrap();
        assert_eq!(dec.terms.len(), 1);
        assert_eq!(dec.cost(), 1.0);
        dec.validate_flavor().unwrap();
        assert_eq!(
            dec.reconstruct().unwrap().max_abs_diff(&h).unwrap(),
            0.0
        );
    }

    #[test]
    fn h1_upper_examples() {
        let b = b_atom().shape;
        let u = h1_upper(&b, Flavor::General).unwrap();
        assert!(u <= 1.0 && u >= 0.5);

        let h = StepFunction::haar(DyadicInterval::new(2, 1), 0).unwrap();
        assert_eq!(h1_upper(&h, Flavor::Dyadic).unwrap(), 1.0);

        // Flavor ordering where all flavors are feasible.
        let f = StepFunction::from_cells(0, 2, vec![0.5, -1.0, 0.5]).unwrap();
        let g = h1_upper(&f, Flavor::General).unwrap();
        let ts = h1_upper(&f, Flavor::TwoSided).unwrap();
        let dy = h1_upper(&f, Flavor::Dyadic).unwrap();
        assert!(g <= ts + 1e-15 && ts <= dy + 1e-15);
    }

    #[test]
    fn distance_examples() {
        let b = b_atom().shape;
        let (obstruction, g) = distance_to_ha(&b).unwrap();
        assert_eq!(obstruction, 0.5);
        assert!(g.is_zero());

        let f = StepFunction::haar(DyadicInterval::new(0, 0), -1).unwrap();
        let (obstruction, g) = distance_to_ha(&f).unwrap();
        assert_eq!(obstruction, 0.0);
        assert!(g.eq_as_functions(&f));

        let fb = f.add(&b).unwrap();
        let (obstruction, g) = distance_to_ha(&fb).unwrap();
        assert_eq!(obstruction, 0.5);
        assert_eq!(g.max_abs_diff(&f).unwrap(), 0.0);
        let diff = fb.sub(&g).unwrap();
        assert!(h1_upper(&diff, Flavor::General).unwrap() <= 2.0 * obstruction);
    }

    #[test]
    fn symmetrize_folds_a_two_sided_decomposition() {
        // g = (1/2)chi_[0,1) - (1/2)chi_[1,2), written with atoms that live
        // on both sides of the origin.
        let g = StepFunction::from_cells(0, 0, vec![0.5, -0.5]).unwrap();
        let a_sym = Atom::new(
            StepFunction::from_cells(0, -2, vec![0.25, -0.25, 0.25, -0.25]).unwrap(),
            grid(0, -2, 2),
        )
        .unwrap();
        let a_anti = Atom::new(
            StepFunction::from_cells(0, -2, vec![-0.25, 0.25, 0.25, -0.25]).unwrap(),
            grid(0, -2, 2),
        )
        .unwrap();
        let dec = AtomicDecomposition {
            terms: vec![(1.0, a_sym), (1.0, a_anti)],
            flavor: Flavor::General,
        };
        let out = symmetrize(&g, &dec).unwrap();
        out.validate_flavor().unwrap();
        // The even atom folds to zero and is dropped.
        assert_eq!(out.terms.len(), 1);
        assert_eq!(out.terms[0].0, 4.0);
        assert!(out.cost() <= 4.0 * dec.cost());
        assert_eq!(out.reconstruct().unwrap().max_abs_diff(&g).unwrap(), 0.0);

        let bad = symmetrize(&b_atom().shape, &dec);
        assert!(matches!(bad, Err(Error::NegativeSupport { .. })));
    }

    #[test]
    fn symmetrize_of_a_one_sided_haar_piece() {
        // Odd reflection of haar((1,-1)) restricted to the positive axis.
        let h = StepFunction::haar(DyadicInterval::new(1, 0), 0).unwrap();
        let dec = AtomicDecomposition {
            terms: vec![(
                1.0,
                Atom::new(h.clone(), grid(1, 0, 1)).unwrap(),
            )],
            flavor: Flavor::General,
        };
        let out = symmetrize(&h, &dec).unwrap();
        for (_, atom) in &out.terms {
            assert!(atom.defining.lo >= 0);
        }
        assert_eq!(out.reconstruct().unwrap().max_abs_diff(&h).unwrap(), 0.0);
    }

    #[test]
    fn counterexample_lies_in_the_zero_halfline_class() {
        for n in [1u32, 3, 6, 10] {
            let f = counterexample(n).unwrap();
            assert!(f.restrict(HalfLine::Positive).integral().abs() < 1e-13);
            assert!(f.integral().abs() < 1e-13);
            let l_n = partial_basel(n);
            assert_eq!(f.value_at(0.75), l_n - 2.0);
            assert_eq!(f.value_at(-0.75), 2.0 - l_n);
        }
        assert!(counterexample(0).is_err());
        assert!(counterexample((-(SCALE_MIN) + 1) as u32).is_err());
    }

    #[test]
    fn explicit_decomposition_costs_six_l_n_and_reconstructs() {
        for n in [2u32, 5, 9] {
            let dec = counterexample_decomposition(n).unwrap();
            dec.validate_flavor().unwrap();
            for (_, atom) in &dec.terms {
                assert!(validate_atom(&atom.shape, &atom.defining).unwrap().ok);
            }
            assert!((dec.cost() - 6.0 * partial_basel(n)).abs() < 1e-12);
            let back = dec.reconstruct().unwrap();
            assert!(back.max_abs_diff(&counterexample(n).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn analytic_haar_cost_matches_materialized_expansion() {
        for n in [4u32, 8] {
            let f = counterexample(n).unwrap();
            let direct = h1_upper(&f, Flavor::General).unwrap();
            let analytic = counterexample_h1_upper(n);
            assert!((direct - analytic).abs() <= 1e-9 * analytic);
            assert!(analytic <= 6.0 * partial_basel(n));
        }
    }

    #[test]
    fn spike_log_moments_match_the_closed_form() {
        let ln2 = std::f64::consts::LN_2;
        for n in 1..=8u32 {
            let f = spike(n, -(n as i32)).unwrap();
            let analytic = -(n as f64) * ln2 + 2.0 * ln2 - 1.0;
            assert!((log_moment(&f).unwrap() - analytic).abs() < 1e-12);
        }
        assert!((log_moment(&spike(1, -1).unwrap()).unwrap() + 0.306853).abs() < 1e-6);

        // Materialized spike sum against the closed-form moment.
        let n = 7u32;
        let mut spikes = StepFunction::zero(-(n as i32));
        for j in 1..=n {
            spikes = spikes
                .add(&spike(j, -(n as i32)).unwrap().scale_by(1.0 / (j as f64 * j as f64)))
                .unwrap();
        }
        let m = log_moment(&spikes).unwrap().abs();
        assert!((m - counterexample_log_moment(n)).abs() < 1e-12);
    }

    #[test]
    fn log_moment_growth_is_monotone() {
        let mut prev = 0.0;
        for n in 1..=64u32 {
            let m = counterexample_log_moment(n);
            assert!(m > prev);
            prev = m;
            if n >= 8 {
                assert!(m >= 0.3 * (n as f64).ln());
            }
        }
        assert!(counterexample_log_moment(64) / counterexample_log_moment(8) >= 1.8);
    }

    #[test]
    fn haar_cost_stays_below_six_l_n_for_all_required_sizes() {
        for n in [4u32, 8, 16, 32, 64] {
            let bound = 6.0 * partial_basel(n);
            assert!(counterexample_h1_upper(n) <= bound);
            assert!(bound <= std::f64::consts::PI.powi(2));
        }
    }
}
