//! Seeded generators of quantized step functions and atoms.
//!
//! Every generator draws integers and scales them by powers of two, so the
//! algebraic identities the suite checks (zero integrals, atom bounds,
//! reconstruction) hold exactly in f64 rather than up to sampling noise.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::atoms::{Atom, Flavor};
use crate::interval::GridInterval;
use crate::num::{ceil_log2, exp2i};
use crate::step::StepFunction;

/// The deterministic RNG used across the suite and CLI.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}


/// Random step function with values on the grid 2^-bits · [-2^bits, 2^bits].
pub fn random_step(
    rng: &mut impl Rng,
    cell_scale: i32,
    cell_start: i64,
    cells: usize,
    bits: u32,
) -> StepFunction {
    let q = 1i64 << bits;
    let values = (0..cells)
        .map(|_| rng.random_range(-q..=q) as f64 * exp2i(-(bits as i32)))
        .collect();
    StepFunction::from_cells(cell_scale, cell_start, values).expect("generator stays in range")
}

/// Integer draws recentered to an exactly zero sum: m_c -> m_c·n - sum(m).
fn zero_sum_integers(rng: &mut impl Rng, cells: usize, bits: u32) -> Vec<i64> {
    let q = 1i64 << bits;
    let m: Vec<i64> = (0..cells).map(|_| rng.random_range(-q..=q)).collect();
    let total: i64 = m.iter().sum();
    m.iter().map(|v| v * cells as i64 - total).collect()
}

fn scaled(values: Vec<i64>, e: i32) -> Vec<f64> {
    values.iter().map(|v| *v as f64 * exp2i(e)).collect()
}

/// Random step function whose integral is exactly zero.
pub fn random_mean_zero(
    rng: &mut impl Rng,
    cell_scale: i32,
    cell_start: i64,
    cells: usize,
    bits: u32,
) -> StepFunction {
    let m = zero_sum_integers(rng, cells, bits);
    let e = -(bits as i32) - ceil_log2(2 * cells as i64);
    StepFunction::from_cells(cell_scale, cell_start, scaled(m, e))
        .expect("generator stays in range")
}

/// Random step function over [-2^L, 2^L) whose integral over each half-line
/// is exactly zero.
pub fn random_half_zero(rng: &mut impl Rng, cell_scale: i32, half_cells: usize, bits: u32) -> StepFunction {
    let e = -(bits as i32) - ceil_log2(2 * half_cells as i64);
    let mut values = scaled(zero_sum_integers(rng, half_cells, bits), e);
    values.extend(scaled(zero_sum_integers(rng, half_cells, bits), e));
    StepFunction::from_cells(cell_scale, -(half_cells as i64), values)
        .expect("generator stays in range")
}

/// Which atom family `random_atom` draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomKind {
    General,
    Dyadic,
    TwoSided,
}

/// Mean-zero values over `defining` with sup bounded by 1/|defining|, both
/// exactly; one value cell per grid cell of the defining interval.
fn atom_on(rng: &mut impl Rng, defining: GridInterval, bits: u32) -> Atom {
    let cells = (defining.hi - defining.lo) as usize;
    let m = zero_sum_integers(rng, cells, bits);
    let max = m.iter().map(|v| v.abs()).max().unwrap_or(0).max(1);
    let e = -ceil_log2(max) - defining.scale - ceil_log2(cells as i64);
    let shape = StepFunction::from_cells(defining.scale, defining.lo, scaled(m, e))
        .expect("generator stays in range");
    Atom::new(shape, defining).expect("construction satisfies the atom bounds")
}

/// Random atom of the requested kind, with exactly zero integral and the
/// size bound holding exactly.
pub fn random_atom(rng: &mut impl Rng, kind: AtomKind) -> Atom {
    match kind {
        AtomKind::General => {
            let scale = rng.random_range(-4..=2);
            let lo = rng.random_range(-40..40);
            let w = rng.random_range(1..=48);
            atom_on(rng, GridInterval::new(scale, lo, lo + w).unwrap(), 10)
        }
        AtomKind::Dyadic => {
            let n = rng.random_range(-4..=4);
            let k = rng.random_range(-16..=16);
            let g: i32 = rng.random_range(0..=4);
            let defining = GridInterval::new(n, k, k + 1).unwrap();
            let fine = defining.to_scale(n - g).unwrap();
            atom_on(rng, fine, 10)
        }
        AtomKind::TwoSided => {
            let scale = rng.random_range(-3..=2);
            let w = rng.random_range(1..32);
            let lo = rng.random_range(0..40);
            let (lo, hi) = if rng.random_range(0..2) == 0 {
                (lo, lo + w)
            } else {
                (-lo - w, -lo)
            };
            atom_on(rng, GridInterval::new(scale, lo, hi).unwrap(), 10)
        }
    }
}

/// Random atom drawn from the family a decomposition flavor allows; used to
/// probe operators part by part.
pub fn sample_part(rng: &mut impl Rng, part: Flavor) -> Atom {
    match part {
        Flavor::General => random_atom(rng, AtomKind::General),
        Flavor::Dyadic => random_atom(rng, AtomKind::Dyadic),
        Flavor::TwoSided => random_atom(rng, AtomKind::TwoSided),
        Flavor::Special => {
            let n = rng.random_range(-4..=3);
            let k = rng.random_range(-8..=8);
            Atom {
                shape: StepFunction::special_atom(n, k, n).unwrap(),
                defining: GridInterval::new(n, k - 1, k + 1).unwrap(),
            }
        }
        Flavor::SpecialOrigin => {
            let n = rng.random_range(-6..=6);
            Atom {
                shape: StepFunction::special_atom(n, 0, n).unwrap(),
                defining: GridInterval::new(n, -1, 1).unwrap(),
            }
        }
    }
}

/// Small-support test function for oscillation-norm checks: up to 16 cells
/// inside [-16, 16) at unit scale.
pub fn random_bmo_function(rng: &mut impl Rng) -> StepFunction {
    let lo = rng.random_range(-16..=0);
    let len = rng.random_range(1..=(16 - lo).min(16)) as usize;
    random_step(rng, 0, lo, len, 10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::validate_atom;
    use crate::step::HalfLine;

    #[test]
    fn mean_zero_generators_are_exact() {
        let mut rng = rng_from_seed(7);
        for _ in 0..50 {
            let f = random_mean_zero(&mut rng, -2, -5, 12, 10);
            assert_eq!(f.integral(), 0.0);
            let g = random_half_zero(&mut rng, -1, 8, 10);
            assert_eq!(g.restrict(HalfLine::Positive).integral(), 0.0);
            assert_eq!(g.restrict(HalfLine::Negative).integral(), 0.0);
        }
    }

    #[test]
    fn random_atoms_validate_exactly() {
        let mut rng = rng_from_seed(11);
        for kind in [AtomKind::General, AtomKind::Dyadic, AtomKind::TwoSided] {
            for _ in 0..50 {
                let a = random_atom(&mut rng, kind);
                let r = validate_atom(&a.shape, &a.defining).unwrap();
                assert!(r.ok);
                assert_eq!(r.cancellation_violation, 0.0);
                assert_eq!(r.support_violation, 0.0);
            }
        }
        for part in [
            Flavor::General,
            Flavor::Dyadic,
            Flavor::TwoSided,
            Flavor::Special,
            Flavor::SpecialOrigin,
        ] {
            for _ in 0..20 {
                let a = sample_part(&mut rng, part);
                assert!(validate_atom(&a.shape, &a.defining).unwrap().ok);
            }
        }
    }

    #[test]
    fn two_sided_atoms_stay_on_one_side() {
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            let a = random_atom(&mut rng, AtomKind::TwoSided);
            assert!(a.defining.lo >= 0 || a.defining.hi <= 0);
        }
    }

    #[test]
    fn bmo_functions_stay_inside_the_window() {
        let mut rng = rng_from_seed(5);
        for _ in 0..100 {
            let f = random_bmo_function(&mut rng);
            assert!(f.cell_start >= -16 && f.cell_end() <= 16);
        }
    }
}
