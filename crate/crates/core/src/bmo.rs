//! Mean-oscillation norms over interval families inside a shared ambient
//! window, the special-atom pairing functionals, and the even/odd extension
//! diagnostics, all evaluated canonically (compensated mean, compensated
//! absolute deviation) so family inclusions hold verbatim for the reported
//! suprema.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::interval::{check_scale, GridInterval};
use crate::num::{self, exp2i, Accumulator};
use crate::step::StepFunction;
use serde::{Deserialize, Serialize};

/// Largest number of ambient cells a window may materialize.
const MAX_WINDOW_CELLS: i64 = 1 << 13;

/// Slice length beyond which the all-intervals sweep switches from the
/// direct cubic scan to the Fenwick scan with canonical re-evaluation.
const DIRECT_SWEEP_LIMIT: usize = 256;

/// Interval family a norm ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Every cell-aligned interval inside the window.
    All,
    /// Every such interval avoiding the origin's interior.
    TwoSided,
    /// Dyadic intervals inside the window.
    Dyadic,
    /// Supports of special atoms: [(k-1)2^n, (k+1)2^n) inside the window.
    Shifted,
}

/// A supremum, where it is attained, and over what family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub witness: Option<GridInterval>,
    pub family: Family,
}

/// Supremum of a special-atom pairing sweep with its (n, k) witness.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PairingReport {
    pub value: f64,
    pub witness: Option<(i32, i64)>,
}

/// The dyadic-plus-pairing norm with both ingredients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaReport {
    pub value: f64,
    pub dyadic: NormReport,
    pub pairing: PairingReport,
}

/// Shared ambient window [-2^top_scale, 2^top_scale) at a fixed cell scale:
/// every family is swept inside it, so subfamily suprema are comparable.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Window {
    pub cell_scale: i32,
    pub top_scale: i32,
}

impl Window {
    /// Smallest symmetric window holding supp(phi), widened by
    /// `margin_doublings` doublings.
    pub fn for_function(phi: &StepFunction, margin_doublings: u32) -> Result<Self> {
        let m = phi.cell_scale;
        let ext = phi
            .support_hull()
            .map(|h| h.hi.max(-h.lo))
            .unwrap_or(1)
            .max(1);
        let top = m + num::ceil_log2(ext) + margin_doublings as i32;
        check_scale("window scale", top)?;
        let w = Window {
            cell_scale: m,
            top_scale: top,
        };
        if 2 * w.half_cells() > MAX_WINDOW_CELLS {
            return Err(Error::Range {
                what: "window cell count",
                value: 2 * w.half_cells(),
                min: 1,
                max: MAX_WINDOW_CELLS,
            });
        }
        Ok(w)
    }

    /// Cells per half-line.
    pub fn half_cells(&self) -> i64 {
        1 << (self.top_scale - self.cell_scale)
    }

    pub fn grid(&self) -> GridInterval {
        GridInterval::new(self.cell_scale, -self.half_cells(), self.half_cells())
            .expect("window construction already checked the scale")
    }
}


/// phi's values on every window cell.
fn materialize(phi: &StepFunction, w: &Window) -> Vec<f64> {
    let half = w.half_cells();
    (-half..half).map(|c| phi.value_at_cell(c)).collect()
}

/// Canonical mean oscillation of a block of cell values: compensated mean,
/// then compensated mean absolute deviation. Cell width cancels.
fn osc_cells(values: &[f64]) -> f64 {
    if values.len() <= 1 {
        return 0.0;
    }
    let len = values.len() as f64;
    let mu = num::sum(values.iter().copied()) / len;
    num::sum(values.iter().map(|v| (v - mu).abs())) / len
}

/// Mean oscillation of phi over j, canonically evaluated.
pub fn mean_oscillation(phi: &StepFunction, j: &GridInterval) -> Result<f64> {
    let scale = phi.cell_scale.min(j.scale);
    let f = phi.refine_to(scale)?;
    let d = j.to_scale(scale)?;
    let values: Vec<f64> = (d.lo..d.hi).map(|c| f.value_at_cell(c)).collect();
    Ok(osc_cells(&values))
}

/// Best value with its slice range, compared with a deterministic
/// tie-break: higher value, then shorter interval, then smaller start.
struct Best {
    value: f64,
    range: Option<(usize, usize)>,
}

impl Best {
    fn new() -> Self {
        Best {
            value: 0.0,
            range: None,
        }
    }

    fn offer(&mut self, value: f64, a: usize, b: usize) {
        let better = match self.range {
            None => value > 0.0,
            Some((pa, pb)) => {
                value > self.value
                    || (value == self.value && (b - a, a) < (pb - pa, pa))
            }
        };
        if better {
            self.value = value;
            self.range = Some((a, b));
        }
    }
}

/// All cell-aligned subintervals of `values`, scanned directly.
fn sweep_direct(values: &[f64], best: &mut Best, offset: usize) {
    let n = values.len();
    for a in 0..n {
        // Running plain mean as a cheap filter would change results; the
        // canonical evaluator runs on every range instead.
        for b in (a + 2)..=n {
            best.offer(osc_cells(&values[a..b]), offset + a, offset + b);
        }
    }
}

/// Fenwick tree over value ranks carrying counts and sums.
struct RankTree {
    cnt: Vec<i64>,
    sum: Vec<f64>,
}

impl RankTree {
    fn new(n: usize) -> Self {
        RankTree {
            cnt: vec![0; n + 1],
            sum: vec![0.0; n + 1],
        }
    }

    fn add(&mut self, mut idx: usize, value: f64) {
        idx += 1;
        while idx < self.cnt.len() {
            self.cnt[idx] += 1;
            self.sum[idx] += value;
            idx += idx & idx.wrapping_neg();
        }
    }

    /// Count and sum of inserted values with rank < idx.
    fn prefix(&self, mut idx: usize) -> (i64, f64) {
        let (mut c, mut s) = (0, 0.0);
        while idx > 0 {
            c += self.cnt[idx];
            s += self.sum[idx];
            idx -= idx & idx.wrapping_neg();
        }
        (c, s)
    }
}

/// All subintervals via one Fenwick pass per start, keeping every candidate
/// within `slack` of the running best, then re-evaluating the candidates
/// canonically so the reported value matches `osc_cells` exactly.
fn sweep_fenwick(values: &[f64], best: &mut Best, offset: usize) {
    let n = values.len();
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let rank = |v: f64| sorted.partition_point(|s| s.total_cmp(&v).is_lt());
    let ranks: Vec<usize> = values.iter().map(|v| rank(*v)).collect();

    let mut prefix = vec![0.0f64; n + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }

    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = 1e-9 * (1.0 + max_abs);
    const CANDIDATE_CAP: usize = 4096;

    let mut running = 0.0f64;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..n {
        let mut tree = RankTree::new(sorted.len());
        for b_edge in a..n {
            tree.add(ranks[b_edge], values[b_edge]);
            let b = b_edge + 1;
            let len = (b - a) as f64;
            let total = prefix[b] - prefix[a];
            let mu = total / len;
            let upto = sorted.partition_point(|s| *s <= mu);
            let (c_le, s_le) = tree.prefix(upto);
            let dev = (c_le as f64 * mu - s_le) + ((total - s_le) - (len - c_le as f64) * mu);
            let osc = dev / len;
            if osc >= running - slack {
                if osc > running {
                    running = osc;
                    candidates.retain(|(v, _, _)| *v >= running - slack);
                }
                candidates.push((osc, a, b));
                if candidates.len() > CANDIDATE_CAP {
                    candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
                    candidates.truncate(CANDIDATE_CAP / 2);
                }
            }
        }
    }

    candidates.sort_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then((x.2 - x.1).cmp(&(y.2 - y.1)))
            .then(x.1.cmp(&y.1))
    });
    for (_, a, b) in candidates {
        best.offer(osc_cells(&values[a..b]), offset + a, offset + b);
    }
}

fn sweep_all_ranges(values: &[f64], best: &mut Best, offset: usize) {
    if values.len() <= DIRECT_SWEEP_LIMIT {
        sweep_direct(values, best, offset);
    } else {
        sweep_fenwick(values, best, offset);
    }
}

/// Norm over the requested family within phi's default window (one extra
/// doubling beyond the support).
pub fn bmo_norm(phi: &StepFunction, family: Family) -> Result<NormReport> {
    bmo_norm_windowed(phi, family, &Window::for_function(phi, 1)?)
}

/// Norm over the requested family within an explicit shared window.
pub fn bmo_norm_windowed(
    phi: &StepFunction,
    family: Family,
    w: &Window,
) -> Result<NormReport> {
    let amb = materialize(phi, w);
    let half = w.half_cells();
    let m = w.cell_scale;
    let mut best = Best::new();
    match family {
        Family::All => sweep_all_ranges(&amb, &mut best, 0),
        Family::TwoSided => {
            let h = half as usize;
            sweep_all_ranges(&amb[..h], &mut best, 0);
            sweep_all_ranges(&amb[h..], &mut best, h);
        }
        Family::Dyadic => {
            for n in m..=w.top_scale {
                let step = 1i64 << (n - m);
                let mut k = -half / step;
                while k * step < half {
                    let a = ((k * step) + half) as usize;
                    let b = a + step as usize;
                    best.offer(osc_cells(&amb[a..b]), a, b);
                    k += 1;
                }
            }
        }
        Family::Shifted => {
            for n in m..=w.top_scale {
                let step = 1i64 << (n - m);
                let mut j = -half / step;
                while (j + 2) * step <= half {
                    let a = ((j * step) + half) as usize;
                    let b = a + 2 * step as usize;
                    best.offer(osc_cells(&amb[a..b]), a, b);
                    j += 1;
                }
            }
        }
    }
    let witness = best
        .range
        .map(|(a, b)| GridInterval::new(m, a as i64 - half, b as i64 - half))
        .transpose()?;
    Ok(NormReport {
        value: best.value,
        witness,
        family,
    })
}

/// Signed pairing of the values of one shifted block against the
/// mean-centered sign pattern of b_{n,k}: +1 on the left half, -1 on the
/// right, divided by the block length. Termwise dominated by the block's
/// canonical oscillation.
fn pairing_of_block(values: &[f64]) -> f64 {
    let len = values.len() as f64;
    let mu = num::sum(values.iter().copied()) / len;
    let mid = values.len() / 2;
    let signed = num::sum(
        values
            .iter()
            .enumerate()
            .map(|(i, v)| if i < mid { v - mu } else { mu - v }),
    );
    signed.abs() / len
}

fn pairing_sweep(phi: &StepFunction, w: &Window, origin_only: bool) -> PairingReport {
    let amb = materialize(phi, w);
    let half = w.half_cells();
    let mut value = 0.0f64;
    let mut witness = None;
    for n in w.cell_scale..=w.top_scale {
        let step = 1i64 << (n - w.cell_scale);
        let k_extent = half / step;
        let ks = if origin_only {
            0..=0
        } else {
            (-k_extent + 1)..=(k_extent - 1)
        };
        for k in ks {
            let a = ((k - 1) * step + half) as usize;
            let b = ((k + 1) * step + half) as usize;
            let p = pairing_of_block(&amb[a..b]);
            if p > value {
                value = p;
                witness = Some((n, k));
            }
        }
    }
    PairingReport { value, witness }
}

/// sup over (n, k) in the window of |integral of phi · b_{n,k}|.
pub fn a_functional(phi: &StepFunction) -> Result<PairingReport> {
    Ok(pairing_sweep(phi, &Window::for_function(phi, 1)?, false))
}

/// The k = 0 slice of the pairing sweep.
pub fn a0_functional(phi: &StepFunction) -> Result<PairingReport> {
    Ok(pairing_sweep(phi, &Window::for_function(phi, 1)?, true))
}

/// |integral of phi · b| for the single atom b = b_{0,0}.
pub fn ab_pairing(phi: &StepFunction) -> Result<f64> {
    let b = StepFunction::special_atom(0, 0, phi.cell_scale.min(0))?;
    Ok(phi.inner_product(&b)?.abs())
}

/// max(dyadic-family norm, pairing sweep), with both parts reported.
pub fn lambda_norm(phi: &StepFunction) -> Result<LambdaReport> {
    let w = Window::for_function(phi, 1)?;
    let dyadic = bmo_norm_windowed(phi, Family::Dyadic, &w)?;
    let pairing = pairing_sweep(phi, &w, false);
    Ok(LambdaReport {
        value: dyadic.value.max(pairing.value),
        dyadic,
        pairing,
    })
}

/// Diagnostics for extending a function on [0, inf) to the line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtensionReport {
    /// All-family norm of the even extension.
    pub even_norm: f64,
    /// Two-sided-family norm of the function itself.
    pub two_sided_norm: f64,
    /// even_norm / two_sided_norm, with 0/0 read as 1.
    pub even_ratio: f64,
    /// Set when the ratio leaves [1, 1 + 1e-9]; reported, not asserted.
    pub ratio_flagged: bool,
    /// All-family norm of the odd extension.
    pub odd_norm: f64,
    /// sup over window scales n of 2^{-n} |integral of phi over [0, 2^n)|.
    pub g_functional: f64,
    pub g_witness_n: Option<i32>,
    /// The sup sat at the outermost scale that still sees new support, i.e.
    /// the means were still growing when the support ran out.
    pub g_at_boundary: bool,
    pub odd_bound_constant: f64,
    /// odd_norm <= C (two_sided_norm + g_functional).
    pub odd_within_bound: bool,
}

/// Evaluate the even- and odd-extension criteria for a function supported
/// on [0, inf).
pub fn extension_criteria(phi: &StepFunction) -> Result<ExtensionReport> {
    let even = phi.reflect_even()?;
    let odd = phi.reflect_odd()?;
    let even_norm = bmo_norm(&even, Family::All)?.value;
    let two_sided_norm = bmo_norm(phi, Family::TwoSided)?.value;
    let odd_norm = bmo_norm(&odd, Family::All)?.value;
    let even_ratio = if even_norm == 0.0 && two_sided_norm == 0.0 {
        1.0
    } else {
        even_norm / two_sided_norm
    };

    let w = Window::for_function(phi, 1)?;
    let support_top = phi
        .support_hull()
        .map(|h| phi.cell_scale + num::ceil_log2(h.hi.max(1)))
        .unwrap_or(w.cell_scale);
    let mut g = 0.0f64;
    let mut g_witness_n = None;
    let mut acc = Accumulator::new();
    let mut cell = 0i64;
    for n in w.cell_scale..=w.top_scale {
        let hi = 1i64 << (n - w.cell_scale);
        while cell < hi {
            acc.add(phi.value_at_cell(cell));
            cell += 1;
        }
        let v = exp2i(-n) * (acc.total() * phi.cell_width()).abs();
        if v > g {
            g = v;
            g_witness_n = Some(n);
        }
    }

    let c = 16.0;
    Ok(ExtensionReport {
        even_norm,
        two_sided_norm,
        even_ratio,
        ratio_flagged: !(1.0 - 1e-9..=1.0 + 1e-9).contains(&even_ratio),
        odd_norm,
        g_functional: g,
        g_witness_n,
        g_at_boundary: support_top > w.cell_scale && g_witness_n == Some(support_top),
        odd_bound_constant: c,
        odd_within_bound: odd_norm <= c * (two_sided_norm + g),
    })
}

/// Cell averages of ln|x| over [-2^log_radius, 2^log_radius).
pub fn ln_abs_step(log_radius: i32, cell_scale: i32) -> Result<StepFunction> {
    check_scale("window scale", log_radius)?;
    let gap = log_radius - cell_scale;
    if !(0..=13).contains(&gap) {
        return Err(Error::Range {
            what: "ln window depth",
            value: gap as i64,
            min: 0,
            max: 13,
        });
    }
    let half = 1i64 << gap;
    let h = exp2i(cell_scale);
    // Antiderivative of ln|x| on the positive axis, continuous at zero.
    let f = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() - x };
    let avg = |c: i64| {
        let a = c as f64 * h;
        (f(a + h) - f(a)) / h
    };
    let values = (-half..half)
        .map(|c| if c < 0 { avg(-1 - c) } else { avg(c) })
        .collect();
    StepFunction::from_cells(cell_scale, -half, values)
}

/// Two-sided-family norm of the sampled ln|x|, the constant calibrating the
/// fractional-integral norm bounds. Computed once and cached.
///
/// The sweep window is pinned to the sampling radius: widening it would pad
/// the samples with zeros and measure oscillation against the pad instead
/// of the function.
pub fn kappa_ln() -> f64 {
    static KAPPA: OnceLock<f64> = OnceLock::new();
    *KAPPA.get_or_init(|| {
        let phi = ln_abs_step(4, -6).expect("fixed parameters are in range");
        let w = Window {
            cell_scale: -6,
            top_scale: 4,
        };
        bmo_norm_windowed(&phi, Family::TwoSided, &w)
            .expect("fixed parameters are in range")
            .value
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::DyadicInterval;
    use crate::sampling::{random_bmo_function, rng_from_seed};
    use crate::step::HalfLine;

    fn grid(scale: i32, lo: i64, hi: i64) -> GridInterval {
        GridInterval::new(scale, lo, hi).unwrap()
    }

    #[test]
    fn oscillation_of_an_indicator() {
        let chi = StepFunction::indicator(&grid(0, 0, 1), 0).unwrap();
        assert_eq!(mean_oscillation(&chi, &grid(0, 0, 2)).unwrap(), 0.5);
        assert_eq!(mean_oscillation(&chi, &grid(0, 0, 1)).unwrap(), 0.0);
        assert_eq!(mean_oscillation(&chi, &grid(1, 0, 1)).unwrap(), 0.5);
        // Refinement does not change the oscillation.
        assert_eq!(mean_oscillation(&chi, &grid(-3, 0, 16)).unwrap(), 0.5);
    }

    #[test]
    fn haar_norms_across_families() {
        let h = StepFunction::haar(DyadicInterval::new(0, 0), -1).unwrap();
        for family in [Family::All, Family::TwoSided, Family::Dyadic, Family::Shifted] {
            let r = bmo_norm(&h, family).unwrap();
            assert_eq!(r.value, 1.0, "family {family:?}");
        }
        let r = bmo_norm(&h, Family::Dyadic).unwrap();
        assert_eq!(r.witness.unwrap().normalize(), grid(0, 0, 1));

        let a = a_functional(&h).unwrap();
        assert_eq!(a.value, 1.0);
        assert_eq!(a.witness, Some((-1, 1)));
        assert_eq!(lambda_norm(&h).unwrap().value, 1.0);
    }

    #[test]
    fn family_inclusions_hold_verbatim_on_random_functions() {
        let mut rng = rng_from_seed(20);
        for _ in 0..60 {
            let phi = random_bmo_function(&mut rng);
            let w = Window::for_function(&phi, 1).unwrap();
            let all = bmo_norm_windowed(&phi, Family::All, &w).unwrap().value;
            let two = bmo_norm_windowed(&phi, Family::TwoSided, &w).unwrap().value;
            let dy = bmo_norm_windowed(&phi, Family::Dyadic, &w).unwrap().value;
            let sh = bmo_norm_windowed(&phi, Family::Shifted, &w).unwrap().value;
            assert!(dy <= two && two <= all);
            assert!(sh <= all);

            let a = pairing_sweep(&phi, &w, false);
            let a0 = pairing_sweep(&phi, &w, true);
            assert!(a0.value <= a.value);
            assert!(a.value <= sh, "pairing {} vs shifted {}", a.value, sh);
            assert!(ab_pairing(&phi).unwrap() <= a.value + 1e-12);
        }
    }

    #[test]
    fn witnesses_reproduce_their_reported_value() {
        let mut rng = rng_from_seed(21);
        for _ in 0..40 {
            let phi = random_bmo_function(&mut rng);
            for family in [Family::All, Family::TwoSided, Family::Dyadic, Family::Shifted] {
                let r = bmo_norm(&phi, family).unwrap();
                if let Some(wit) = r.witness {
                    assert_eq!(mean_oscillation(&phi, &wit).unwrap(), r.value);
                }
            }
        }
    }

    #[test]
    fn fenwick_sweep_agrees_with_the_direct_scan() {
        let mut rng = rng_from_seed(22);
        for round in 0..10 {
            let n = 40 + 30 * round;
            let values: Vec<f64> = (0..n)
                .map(|_| rand::Rng::random_range(&mut rng, -512..=512) as f64 / 64.0)
                .collect();
            let mut direct = Best::new();
            sweep_direct(&values, &mut direct, 0);
            let mut fen = Best::new();
            sweep_fenwick(&values, &mut fen, 0);
            assert_eq!(direct.value, fen.value);
            assert_eq!(direct.range, fen.range);
        }
    }

    #[test]
    fn extension_criteria_for_an_indicator() {
        let chi = StepFunction::indicator(&grid(0, 0, 1), 0).unwrap();
        let r = extension_criteria(&chi).unwrap();
        assert_eq!(r.g_functional, 1.0);
        assert_eq!(r.g_witness_n, Some(0));
        assert!(!r.g_at_boundary);
        assert!((r.even_ratio - 1.0).abs() <= 1e-9);
        assert!(!r.ratio_flagged);
        assert!(r.odd_within_bound);
        assert!(r.odd_norm > r.even_norm);
    }

    #[test]
    fn growing_means_push_g_to_the_window_boundary() {
        // A ramp keeps the half-line means growing until the support runs
        // out, so the sup lands exactly at the outermost support scale.
        let ramp =
            StepFunction::from_cells(-3, 0, (0..64).map(|c| c as f64).collect()).unwrap();
        let r = extension_criteria(&ramp).unwrap();
        assert_eq!(r.g_witness_n, Some(3));
        assert!(r.g_at_boundary);
    }

    #[test]
    fn kappa_ln_sits_below_the_continuum_constant() {
        let k = kappa_ln();
        assert!(k > 0.70 && k <= 2.0 / std::f64::consts::E + 1e-9, "kappa {k}");
    }
}
