//! Dyadic and grid-aligned intervals with exact integer endpoints.
//!
//! Everything here is half-open: `[lo, hi)`. A `DyadicInterval` is the
//! standard `[k*2^n, (k+1)*2^n)`; a `GridInterval` has both endpoints on a
//! common grid `2^scale` but arbitrary integer positions, so it can describe
//! supports, windows and atom hulls that are not themselves dyadic.

use crate::error::{Error, Result};
use crate::num::exp2i;
use serde::{Deserialize, Serialize};

/// Coarsest cell scale the library admits by default.
pub const SCALE_MIN: i32 = -20;
/// Finest cell scale the library admits by default.
pub const SCALE_MAX: i32 = 20;
/// Hard cap on materialized cells in one function.
pub const MAX_CELLS: i64 = 1 << 26;

pub(crate) fn check_scale(what: &'static str, n: i32) -> Result<()> {
    if !(SCALE_MIN..=SCALE_MAX).contains(&n) {
        return Err(Error::Range {
            what,
            value: n as i64,
            min: SCALE_MIN as i64,
            max: SCALE_MAX as i64,
        });
    }
    Ok(())
}

/// `[k*2^n, (k+1)*2^n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub n: i32,
    pub k: i64,
}

impl DyadicInterval {
    pub fn new(n: i32, k: i64) -> Self {
        Self { n, k }
    }

    pub fn length(&self) -> f64 {
        exp2i(self.n)
    }

    pub fn lo(&self) -> f64 {
        self.k as f64 * exp2i(self.n)
    }

    pub fn hi(&self) -> f64 {
        (self.k + 1) as f64 * exp2i(self.n)
    }

    /// Left dyadic child.
    pub fn left_half(&self) -> Self {
        Self::new(self.n - 1, 2 * self.k)
    }

    /// Right dyadic child.
    pub fn right_half(&self) -> Self {
        Self::new(self.n - 1, 2 * self.k + 1)
    }

    pub fn parent(&self) -> Self {
        Self::new(self.n + 1, self.k.div_euclid(2))
    }

    /// Express the interval on a finer grid.
    pub fn as_grid(&self, scale: i32) -> Result<GridInterval> {
        GridInterval::new(self.n, self.k, self.k + 1)?.to_scale(scale)
    }

    /// Two dyadic intervals are either nested or disjoint.
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        if other.n > self.n {
            return false;
        }
        let shift = (self.n - other.n) as u32;
        if shift >= 63 {
            return false;
        }
        other.k >> shift == self.k
    }

    pub fn is_disjoint(&self, other: &DyadicInterval) -> bool {
        !self.contains(other) && !other.contains(self)
    }
}

/// `[lo*2^scale, hi*2^scale)` with integer `lo < hi`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridInterval {
    pub scale: i32,
    pub lo: i64,
    pub hi: i64,
}

impl GridInterval {
    pub fn new(scale: i32, lo: i64, hi: i64) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Range {
                what: "interval width",
                value: hi - lo,
                min: 1,
                max: i64::MAX,
            });
        }
        Ok(Self { scale, lo, hi })
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo as f64 * exp2i(self.scale)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi as f64 * exp2i(self.scale)
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo) as f64 * exp2i(self.scale)
    }

    /// Cell count at the interval's own scale.
    pub fn width(&self) -> i64 {
        self.hi - self.lo
    }

    /// Re-express on grid `2^scale`; fails if the endpoints fall off it.
    pub fn to_scale(&self, scale: i32) -> Result<Self> {
        if scale == self.scale {
            return Ok(*self);
        }
        if scale < self.scale {
            let shift = self.scale - scale;
            if shift > 62 {
                return Err(Error::Range {
                    what: "scale gap",
                    value: shift as i64,
                    min: 0,
                    max: 62,
                });
            }
            let f = 1i64 << shift;
            let lo = self.lo.checked_mul(f);
            let hi = self.hi.checked_mul(f);
            match (lo, hi) {
                (Some(lo), Some(hi)) => Ok(Self { scale, lo, hi }),
                _ => Err(Error::Range {
                    what: "interval position",
                    value: self.lo,
                    min: i64::MIN >> shift,
                    max: i64::MAX >> shift,
                }),
            }
        } else {
            let shift = scale - self.scale;
            if shift > 62 {
                return Err(Error::Range {
                    what: "scale gap",
                    value: shift as i64,
                    min: 0,
                    max: 62,
                });
            }
            let f = 1i64 << shift;
            if self.lo % f != 0 || self.hi % f != 0 {
                return Err(Error::Alignment {
                    lo: self.lo_f64(),
                    hi: self.hi_f64(),
                    cell_scale: scale,
                });
            }
            Ok(Self {
                scale,
                lo: self.lo / f,
                hi: self.hi / f,
            })
        }
    }

    /// Canonical form: coarsest scale representing the same endpoints.
    pub fn normalize(&self) -> Self {
        let mut g = *self;
        while g.lo % 2 == 0 && g.hi % 2 == 0 && g.scale < SCALE_MAX {
            g.lo /= 2;
            g.hi /= 2;
            g.scale += 1;
        }
        g
    }

    /// The dyadic interval with the same endpoints, when there is one.
    pub fn as_dyadic(&self) -> Option<DyadicInterval> {
        let g = self.normalize();
        let w = g.hi - g.lo;
        if w.count_ones() != 1 {
            return None;
        }
        let extra = w.trailing_zeros() as i32;
        if g.lo % w != 0 {
            return None;
        }
        Some(DyadicInterval::new(g.scale + extra, g.lo / w))
    }

    pub fn contains(&self, other: &GridInterval) -> bool {
        let s = self.scale.min(other.scale);
        match (self.to_scale(s), other.to_scale(s)) {
            (Ok(a), Ok(b)) => a.lo <= b.lo && b.hi <= a.hi,
            _ => false,
        }
    }

    pub fn intersects(&self, other: &GridInterval) -> bool {
        let s = self.scale.min(other.scale);
        match (self.to_scale(s), other.to_scale(s)) {
            (Ok(a), Ok(b)) => a.lo < b.hi && b.lo < a.hi,
            _ => false,
        }
    }
}

impl PartialEq for GridInterval {
    fn eq(&self, other: &Self) -> bool {
        let a = self.normalize();
        let b = other.normalize();
        (a.scale, a.lo, a.hi) == (b.scale, b.lo, b.hi)
    }
}

impl Eq for GridInterval {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_children_partition() {
        let i = DyadicInterval::new(3, -2); // [-16, -8)
        assert_eq!(i.lo(), -16.0);
        assert_eq!(i.hi(), -8.0);
        let l = i.left_half();
        let r = i.right_half();
        assert_eq!((l.lo(), l.hi()), (-16.0, -12.0));
        assert_eq!((r.lo(), r.hi()), (-12.0, -8.0));
        assert!(i.contains(&l) && i.contains(&r));
        assert!(l.is_disjoint(&r));
    }

    #[test]
    fn nested_or_disjoint() {
        // Dyadic intervals at mixed scales never partially overlap.
        let coarse = DyadicInterval::new(2, 1); // [4, 8)
        for k in -8..8 {
            let fine = DyadicInterval::new(0, k); // [k, k+1)
            let inside = (4..8).contains(&k);
            assert_eq!(coarse.contains(&fine), inside);
            assert_eq!(coarse.is_disjoint(&fine), !inside);
        }
    }

    #[test]
    fn grid_round_trip_and_dyadic_detection() {
        let g = GridInterval::new(-2, -4, 12).unwrap(); // [-1, 3)
        let f = g.to_scale(-5).unwrap();
        assert_eq!(f.to_scale(-2).unwrap(), g);
        assert_eq!(g.as_dyadic(), None);

        let d = GridInterval::new(-3, 8, 16).unwrap(); // [1, 2)
        assert_eq!(d.as_dyadic(), Some(DyadicInterval::new(0, 1)));
    }

    #[test]
    fn misaligned_coarsening_fails() {
        let g = GridInterval::new(-2, 1, 5).unwrap();
        assert!(matches!(g.to_scale(0), Err(Error::Alignment { .. })));
    }
}
