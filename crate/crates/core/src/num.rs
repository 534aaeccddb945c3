//! Small numeric helpers: compensated summation and exact powers of two.

/// Neumaier-compensated sum. One rounding of the final fold; immune to
/// cancellation ordering for the magnitudes this library produces.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Running compensated accumulator for streaming sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    s: f64,
    c: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    pub fn total(&self) -> f64 {
        self.s + self.c
    }
}

/// 2^n as f64, exact for every scale this library admits.
pub fn exp2i(n: i32) -> f64 {
    debug_assert!((-1000..=1000).contains(&n));
    f64::powi(2.0, n)
}

/// Smallest e with x <= 2^e, for x >= 1.
pub(crate) fn ceil_log2(x: i64) -> i32 {
    debug_assert!(x >= 1);
    64 - (x - 1).leading_zeros() as i32
}

/// Default absolute/relative tolerance used by atom checks: 2^-40.
pub const DEFAULT_TOL: f64 = 9.094947017729282e-13;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_cancels_exactly_representable_pairs() {
        let v = vec![1.0, 1e-20, -1.0, -1e-20];
        assert_eq!(sum(v), 0.0);
    }

    #[test]
    fn sum_recovers_low_order_bits() {
        // Naive summation loses the small terms entirely.
        let v = vec![1e16, 1.0, 1.0, 1.0, 1.0, -1e16];
        assert_eq!(sum(v), 4.0);
    }

    #[test]
    fn exp2i_matches_default_tol() {
        assert_eq!(exp2i(-40), DEFAULT_TOL);
    }
}
