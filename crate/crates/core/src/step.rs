//! Piecewise-constant functions on a uniform dyadic cell grid.
//!
//! A `StepFunction` is the finite list of values it takes on consecutive
//! cells `[(k0+j)*2^m, (k0+j+1)*2^m)` and is zero elsewhere. All endpoint
//! arithmetic is integer, so refinement, restriction and reflection are
//! exact; only value arithmetic rounds, and sums are compensated.

use crate::error::{Error, Result};
use crate::interval::{check_scale, DyadicInterval, GridInterval, MAX_CELLS};
use crate::num::{self, exp2i};
use serde::{Deserialize, Serialize};

/// Which closed half-line of the origin to keep or extend from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfLine {
    Negative,
    Positive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub cell_scale: i32,
    pub cell_start: i64,
    pub values: Vec<f64>,
}

impl StepFunction {
    /// The identically-zero function.
    pub fn zero(cell_scale: i32) -> Self {
        Self {
            cell_scale,
            cell_start: 0,
            values: Vec::new(),
        }
    }

    pub fn from_cells(cell_scale: i32, cell_start: i64, values: Vec<f64>) -> Result<Self> {
        check_scale("cell scale", cell_scale)?;
        if values.len() as i64 > MAX_CELLS {
            return Err(Error::Range {
                what: "cell count",
                value: values.len() as i64,
                min: 0,
                max: MAX_CELLS,
            });
        }
        cell_start
            .checked_add(values.len() as i64)
            .ok_or(Error::Range {
                what: "cell position",
                value: cell_start,
                min: i64::MIN,
                max: i64::MAX,
            })?;
        Ok(Self {
            cell_scale,
            cell_start,
            values,
        })
    }

    /// `chi_J`, materialized at `cell_scale`.
    pub fn indicator(j: &GridInterval, cell_scale: i32) -> Result<Self> {
        let g = j.to_scale(cell_scale)?;
        Self::from_cells(cell_scale, g.lo, vec![1.0; (g.hi - g.lo) as usize])
    }

    /// Haar function `H_I`: `+1/|I|` on the left half, `-1/|I|` on the right.
    pub fn haar(i: DyadicInterval, cell_scale: i32) -> Result<Self> {
        check_scale("haar scale", i.n)?;
        if cell_scale > i.n - 1 {
            return Err(Error::Resolution {
                required: i.n - 1,
                cell_scale,
            });
        }
        let half = cells_for_gap(i.n - 1 - cell_scale)?;
        let v = exp2i(-i.n);
        let mut values = vec![v; 2 * half];
        values[half..].fill(-v);
        Self::from_cells(cell_scale, i.k << (i.n - cell_scale), values)
    }

    /// Special atom `b_{n,k}`: `+2^-(n+1)` on `[(k-1)2^n, k*2^n)`,
    /// `-2^-(n+1)` on `[k*2^n, (k+1)2^n)`.
    pub fn special_atom(n: i32, k: i64, cell_scale: i32) -> Result<Self> {
        check_scale("special atom scale", n)?;
        if cell_scale > n {
            return Err(Error::Resolution {
                required: n,
                cell_scale,
            });
        }
        let half = cells_for_gap(n - cell_scale)?;
        let v = exp2i(-(n + 1));
        let mut values = vec![v; 2 * half];
        values[half..].fill(-v);
        let start = (k - 1)
            .checked_shl((n - cell_scale) as u32)
            .filter(|_| (k - 1).unsigned_abs() < (i64::MAX >> (n - cell_scale)) as u64)
            .ok_or(Error::Range {
                what: "special atom position",
                value: k,
                min: i64::MIN,
                max: i64::MAX,
            })?;
        Self::from_cells(cell_scale, start, values)
    }

    pub fn cell_width(&self) -> f64 {
        exp2i(self.cell_scale)
    }

    /// One-past-the-end cell index.
    pub fn cell_end(&self) -> i64 {
        self.cell_start + self.values.len() as i64
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Value on the cell with absolute index `c` (at the function's scale).
    pub fn value_at_cell(&self, c: i64) -> f64 {
        if c < self.cell_start || c >= self.cell_end() {
            0.0
        } else {
            self.values[(c - self.cell_start) as usize]
        }
    }

    /// Value at a point, for spot checks; cells are half-open.
    pub fn value_at(&self, x: f64) -> f64 {
        let c = (x / self.cell_width()).floor() as i64;
        self.value_at_cell(c)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Smallest grid interval containing all cells with nonzero value.
    pub fn support_hull(&self) -> Option<GridInterval> {
        let first = self.values.iter().position(|v| *v != 0.0)?;
        let last = self.values.iter().rposition(|v| *v != 0.0).unwrap();
        Some(GridInterval {
            scale: self.cell_scale,
            lo: self.cell_start + first as i64,
            hi: self.cell_start + last as i64 + 1,
        })
    }

    /// Smallest L with the support inside [-2^L, 2^L), never below the cell
    /// scale.
    pub fn enclosing_scale(&self) -> i32 {
        match self.support_hull() {
            None => self.cell_scale,
            Some(h) => self.cell_scale + crate::num::ceil_log2(h.hi.max(-h.lo).max(1)),
        }
    }

    /// Drop exact-zero cells at either end.
    pub fn trimmed(&self) -> Self {
        match self.support_hull() {
            None => Self::zero(self.cell_scale),
            Some(h) => Self {
                cell_scale: self.cell_scale,
                cell_start: h.lo,
                values: self.values
                    [(h.lo - self.cell_start) as usize..(h.hi - self.cell_start) as usize]
                    .to_vec(),
            },
        }
    }

    /// Re-express on a finer grid; values are unchanged, cells duplicated.
    pub fn refine_to(&self, cell_scale: i32) -> Result<Self> {
        check_scale("cell scale", cell_scale)?;
        if cell_scale > self.cell_scale {
            return Err(Error::Resolution {
                required: self.cell_scale,
                cell_scale,
            });
        }
        let gap = self.cell_scale - cell_scale;
        if gap == 0 {
            return Ok(self.clone());
        }
        let f = cells_for_gap(gap)?;
        if self.values.len() as i64 * f as i64 > MAX_CELLS {
            return Err(Error::Range {
                what: "cell count",
                value: self.values.len() as i64 * f as i64,
                min: 0,
                max: MAX_CELLS,
            });
        }
        let mut values = Vec::with_capacity(self.values.len() * f);
        for v in &self.values {
            values.extend(std::iter::repeat(*v).take(f));
        }
        Ok(Self {
            cell_scale,
            cell_start: self.cell_start << gap,
            values,
        })
    }

    /// Bring two functions onto one grid covering both supports.
    pub fn align(&self, other: &Self) -> Result<(Self, Self)> {
        let scale = self.cell_scale.min(other.cell_scale);
        let a = self.refine_to(scale)?;
        let b = other.refine_to(scale)?;
        let start = a.cell_start.min(b.cell_start);
        let end = a.cell_end().max(b.cell_end());
        if end - start > MAX_CELLS {
            return Err(Error::Range {
                what: "cell count",
                value: end - start,
                min: 0,
                max: MAX_CELLS,
            });
        }
        let pad = |f: &Self| {
            let mut values = vec![0.0; (end - start) as usize];
            for (j, v) in f.values.iter().enumerate() {
                values[(f.cell_start - start) as usize + j] = *v;
            }
            Self {
                cell_scale: scale,
                cell_start: start,
                values,
            }
        };
        Ok((pad(&a), pad(&b)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.align(other)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x += *y;
        }
        Ok(a)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.align(other)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x -= *y;
        }
        Ok(a)
    }

    pub fn scale_by(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    /// Largest pointwise difference after aligning grids.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let (a, b) = self.align(other)?;
        Ok(a.values
            .iter()
            .zip(&b.values)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
    }

    /// Equal as functions: same values on the common refinement.
    pub fn eq_as_functions(&self, other: &Self) -> bool {
        match self.align(other) {
            Ok((a, b)) => a.values == b.values,
            Err(_) => false,
        }
    }

    /// Integral over the whole line. The cell width is a power of two, so
    /// the final scaling is exact; the sum is compensated.
    pub fn integral(&self) -> f64 {
        self.cell_width() * num::sum(self.values.iter().copied())
    }

    /// `∫ f·g`, exact up to one rounding per cell product.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        let (a, b) = self.align(other)?;
        Ok(a.cell_width()
            * num::sum(a.values.iter().zip(&b.values).map(|(x, y)| x * y)))
    }

    /// Integral over a grid-aligned interval.
    pub fn integrate(&self, j: &GridInterval) -> Result<f64> {
        let g = j.to_scale(self.cell_scale)?;
        let lo = g.lo.max(self.cell_start);
        let hi = g.hi.min(self.cell_end());
        if lo >= hi {
            return Ok(0.0);
        }
        let a = (lo - self.cell_start) as usize;
        let b = (hi - self.cell_start) as usize;
        Ok(self.cell_width() * num::sum(self.values[a..b].iter().copied()))
    }

    /// Keep cells on one side of the origin, zero the rest.
    /// `restrict(Positive) + restrict(Negative)` rebuilds the function.
    pub fn restrict(&self, side: HalfLine) -> Self {
        let mut out = self.clone();
        for (j, v) in out.values.iter_mut().enumerate() {
            let c = out.cell_start + j as i64;
            let keep = match side {
                HalfLine::Positive => c >= 0,
                HalfLine::Negative => c < 0,
            };
            if !keep {
                *v = 0.0;
            }
        }
        out
    }

    fn reflect(&self, sign: f64) -> Result<Self> {
        let f = self.trimmed();
        if f.cell_start < 0 {
            let neg: f64 = f
                .values
                .iter()
                .enumerate()
                .filter(|(j, _)| f.cell_start + (*j as i64) < 0)
                .map(|(_, v)| v.abs())
                .sum::<f64>()
                * f.cell_width();
            if neg > 0.0 {
                return Err(Error::NegativeSupport { mass: neg });
            }
        }
        let end = f.cell_end().max(0);
        let mut values = vec![0.0; (2 * end) as usize];
        for c in 0..end {
            let v = f.value_at_cell(c);
            values[(end + c) as usize] = v;
            values[(end - 1 - c) as usize] = sign * v;
        }
        Self::from_cells(f.cell_scale, -end, values)
    }

    /// Even extension of a function supported in `[0, inf)`.
    pub fn reflect_even(&self) -> Result<Self> {
        self.reflect(1.0)
    }

    /// Odd extension of a function supported in `[0, inf)`.
    pub fn reflect_odd(&self) -> Result<Self> {
        self.reflect(-1.0)
    }
}

fn cells_for_gap(gap: i32) -> Result<usize> {
    if !(0..=26).contains(&gap) {
        return Err(Error::Range {
            what: "scale gap",
            value: gap as i64,
            min: 0,
            max: 26,
        });
    }
    Ok(1usize << gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(scale: i32, lo: i64, hi: i64) -> GridInterval {
        GridInterval::new(scale, lo, hi).unwrap()
    }

    #[test]
    fn haar_unit_interval_at_half_cells() {
        let h = StepFunction::haar(DyadicInterval::new(0, 0), -1).unwrap();
        assert_eq!(h.cell_start, 0);
        assert_eq!(h.values, vec![1.0, -1.0]);
        assert_eq!(h.integral(), 0.0);
    }

    #[test]
    fn haar_negative_position() {
        // I = [-2, 0): +1/2 on [-2, -1), -1/2 on [-1, 0).
        let h = StepFunction::haar(DyadicInterval::new(1, -1), 0).unwrap();
        assert_eq!(h.cell_start, -2);
        assert_eq!(h.values, vec![0.5, -0.5]);
        assert_eq!(h.value_at(-1.5), 0.5);
        assert_eq!(h.value_at(-0.5), -0.5);
    }

    #[test]
    fn haar_too_coarse_is_resolution_error() {
        let e = StepFunction::haar(DyadicInterval::new(0, 0), 0).unwrap_err();
        assert!(matches!(e, Error::Resolution { required: -1, .. }));
    }

    #[test]
    fn special_atom_matches_its_definition() {
        // b_{1,2}: +1/4 on [2, 4), -1/4 on [4, 6).
        let b = StepFunction::special_atom(1, 2, 0).unwrap();
        assert_eq!(b.cell_start, 2);
        assert_eq!(b.values, vec![0.25, 0.25, -0.25, -0.25]);
    }

    #[test]
    fn special_atom_with_odd_k_is_a_haar_function() {
        let b = StepFunction::special_atom(0, 1, -1).unwrap();
        let h = StepFunction::haar(DyadicInterval::new(1, 0), -1).unwrap();
        assert!(b.eq_as_functions(&h));
    }

    #[test]
    fn integrate_respects_alignment() {
        let b = StepFunction::special_atom(0, 0, -2).unwrap();
        assert_eq!(b.integrate(&grid(0, -1, 0)).unwrap(), 0.5);
        assert_eq!(b.integrate(&grid(0, -1, 1)).unwrap(), 0.0);
        assert_eq!(b.integrate(&grid(-2, -1, 1)).unwrap(), 0.0);
        assert_eq!(b.integral(), 0.0);
        // Endpoints off the cell grid must be rejected, not rounded.
        assert!(matches!(
            b.integrate(&GridInterval::new(-3, 1, 3).unwrap()),
            Err(Error::Alignment { .. })
        ));
    }

    #[test]
    fn refinement_preserves_values_and_integrals() {
        let b = StepFunction::special_atom(2, 0, 0).unwrap();
        let fine = b.refine_to(-3).unwrap();
        assert!(b.eq_as_functions(&fine));
        assert_eq!(b.integral(), fine.integral());
        assert_eq!(
            b.integrate(&grid(0, -4, 0)).unwrap(),
            fine.integrate(&grid(0, -4, 0)).unwrap()
        );
    }

    #[test]
    fn restrict_partitions() {
        let b = StepFunction::special_atom(0, 0, -1).unwrap();
        let pos = b.restrict(HalfLine::Positive);
        let neg = b.restrict(HalfLine::Negative);
        assert_eq!(pos.integral(), -0.5);
        assert_eq!(neg.integral(), 0.5);
        assert!(pos.add(&neg).unwrap().eq_as_functions(&b));
    }

    #[test]
    fn reflections() {
        let chi = StepFunction::indicator(&grid(0, 0, 1), 0).unwrap();
        let even = chi.reflect_even().unwrap();
        assert!(even.eq_as_functions(&StepFunction::indicator(&grid(0, -1, 1), 0).unwrap()));
        let odd = chi.reflect_odd().unwrap();
        assert_eq!(odd.value_at(-0.5), -1.0);
        assert_eq!(odd.integral(), 0.0);

        let bad = StepFunction::indicator(&grid(0, -2, 1), 0).unwrap();
        assert!(matches!(
            bad.reflect_even(),
            Err(Error::NegativeSupport { .. })
        ));
    }

    #[test]
    fn support_hull_ignores_zero_padding() {
        let f = StepFunction::from_cells(-1, -3, vec![0.0, 2.0, 0.0, -1.0, 0.0]).unwrap();
        assert_eq!(f.support_hull().unwrap(), grid(-1, -2, 1));
        assert_eq!(f.trimmed().values, vec![2.0, 0.0, -1.0]);
    }
}
