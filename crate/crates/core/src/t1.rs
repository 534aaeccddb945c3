//! Finite-window kernel operators and the audit of T(1)-type hypotheses:
//! the weak boundedness property over interval families, the dyadic and
//! two-sided surrogate conditions c_1d, c_2d, c_1s, c_2s on T(1) and
//! T*(1), and the bracket identity that reduces special-atom pairings of
//! support-preserving operators to indicator brackets.
//!
//! An operator is an N x N matrix of kernel samples at cell-midpoint
//! pairs over a symmetric window [-2^L, 2^L) at cell scale m, with the
//! diagonal zeroed (principal-value skip). Everything downstream is
//! exact matrix arithmetic; the neglected kernel tail outside the window
//! is carried as an explicit per-cell band, never dropped silently.

use crate::bmo::{self, ExtensionReport, Family, LambdaReport, NormReport};
use crate::error::{Error, Result};
use crate::interval::{check_scale, GridInterval};
use crate::num::{exp2i, Accumulator, DEFAULT_TOL};
use crate::sampling::rng_from_seed;
use crate::step::{HalfLine, StepFunction};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Hard cap on window cells, keeping the dense matrix near 8 MB.
pub const MAX_KERNEL_CELLS: usize = 1024;

/// A kernel sampled over a symmetric window, acting by exact
/// matrix-vector products; the diagonal is zero by convention.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    /// Cell scale m of the sampling grid.
    pub cell_scale: i32,
    /// Window exponent L; the window is [-2^L, 2^L).
    pub window_scale: i32,
    /// Bound on the magnitude each row or column sum may be missing
    /// because the kernel was cut off at the window edge.
    pub tail_bound: f64,
    matrix: Vec<f64>,
    n: usize,
}

fn window_cells(window_scale: i32, cell_scale: i32) -> Result<usize> {
    check_scale("kernel window scale", window_scale)?;
    check_scale("kernel cell scale", cell_scale)?;
    let gap = window_scale - cell_scale;
    let n = if (0..=20).contains(&gap) { 1usize << (gap + 1) } else { usize::MAX };
    if n > MAX_KERNEL_CELLS {
        return Err(Error::Range {
            what: "kernel window cells",
            value: gap as i64,
            min: 0,
            max: MAX_KERNEL_CELLS.trailing_zeros() as i64 - 1,
        });
    }
    Ok(n)
}

impl KernelOperator {
    /// Sample a pointwise kernel at all cell-midpoint pairs.
    pub fn from_fn(
        window_scale: i32,
        cell_scale: i32,
        tail_bound: f64,
        kernel: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let n = window_cells(window_scale, cell_scale)?;
        let half = (n / 2) as i64;
        let h = exp2i(cell_scale);
        let mid = |i: usize| (i as i64 - half) as f64 * h + 0.5 * h;
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    matrix[i * n + j] = kernel(mid(i), mid(j));
                }
            }
        }
        Ok(KernelOperator {
            cell_scale,
            window_scale,
            tail_bound,
            matrix,
            n,
        })
    }

    /// K(x, y) = 1/(x - y), the prototypical antisymmetric kernel. The
    /// tail band is the symmetric principal-value tail at the edge cell.
    pub fn hilbert(window_scale: i32, cell_scale: i32) -> Result<Self> {
        let gap = window_scale - cell_scale;
        let tail = ((f64::exp2((gap + 2) as f64)) - 1.0).ln();
        Self::from_fn(window_scale, cell_scale, tail, |x, y| 1.0 / (x - y))
    }

    /// K(x, y) = exp(-(x-y)^2); total mass sqrt(pi) bounds the tail.
    pub fn gauss(window_scale: i32, cell_scale: i32) -> Result<Self> {
        let tail = std::f64::consts::PI.sqrt();
        Self::from_fn(window_scale, cell_scale, tail, |x, y| {
            (-(x - y) * (x - y)).exp()
        })
    }

    /// K(x, y) = exp(-(x-y)^2) + exp(-(x+y)^2), even under (x, y) ->
    /// (-x, -y), so T(1) comes out even cell by cell.
    pub fn gauss_even(window_scale: i32, cell_scale: i32) -> Result<Self> {
        let tail = 2.0 * std::f64::consts::PI.sqrt();
        Self::from_fn(window_scale, cell_scale, tail, |x, y| {
            (-(x - y) * (x - y)).exp() + (-(x + y) * (x + y)).exp()
        })
    }

    /// Seeded random kernel supported on the dyadic annuli
    /// [2^{j-1}, 2^j) and their mirrors, each annulus paired only with
    /// itself. Such an operator preserves the supports [0, 2^j) and
    /// [-2^j, 0) for every j, which is what the bracket identity needs.
    pub fn blockdiag(window_scale: i32, cell_scale: i32, seed: u64) -> Result<Self> {
        let n = window_cells(window_scale, cell_scale)?;
        let half = n / 2;
        let mut rng = rng_from_seed(seed);
        let mut matrix = vec![0.0; n * n];
        let mut fill = |lo: usize, hi: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            for i in lo..hi {
                for j in lo..hi {
                    if i != j {
                        matrix[i * n + j] = rng.random_range(-256..=256i64) as f64 / 256.0;
                    }
                }
            }
        };
        let mut width = 1usize;
        while width * 2 <= half {
            fill(half + width, half + 2 * width, &mut rng);
            fill(half - 2 * width, half - width, &mut rng);
            width *= 2;
        }
        Ok(KernelOperator {
            cell_scale,
            window_scale,
            tail_bound: 0.0,
            matrix,
            n,
        })
    }

    /// Wrap an externally sampled square matrix; the diagonal is zeroed
    /// to honor the principal-value convention.
    pub fn from_samples(
        window_scale: i32,
        cell_scale: i32,
        rows: Vec<Vec<f64>>,
        tail_bound: f64,
    ) -> Result<Self> {
        let n = window_cells(window_scale, cell_scale)?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Range {
                what: "kernel sample rows",
                value: rows.len() as i64,
                min: n as i64,
                max: n as i64,
            });
        }
        let mut matrix = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Domain {
                        what: "kernel sample",
                        value: *v,
                    });
                }
                if i != j {
                    matrix[i * n + j] = *v;
                }
            }
        }
        Ok(KernelOperator {
            cell_scale,
            window_scale,
            tail_bound,
            matrix,
            n,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n
    }

    fn half(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// The window as a grid interval in cells of the sampling scale.
    pub fn window(&self) -> GridInterval {
        GridInterval::new(self.cell_scale, -self.half(), self.half())
            .expect("constructor already validated the window")
    }

    /// f's values on every window cell; rejects functions that live on a
    /// different grid or stick out of the window.
    fn window_values(&self, f: &StepFunction) -> Result<Vec<f64>> {
        let half = self.half();
        let fits = f.cell_scale == self.cell_scale
            && f
                .support_hull()
                .map(|h| h.lo >= -half && h.hi <= half)
                .unwrap_or(true);
        if !fits {
            return Err(Error::GridMismatch {
                expected_scale: self.cell_scale,
                expected_lo: -half,
                expected_hi: half,
                found_scale: f.cell_scale,
            });
        }
        Ok((-half..half).map(|c| f.value_at_cell(c)).collect())
    }

    /// (Tf)(cell i) = 2^m sum over j != i of K(x_i, y_j) f(y_j).
    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        let vals = self.window_values(f)?;
        let h = exp2i(self.cell_scale);
        let out = (0..self.n)
            .map(|i| {
                let mut acc = Accumulator::new();
                for (j, v) in vals.iter().enumerate() {
                    if *v != 0.0 {
                        acc.add(self.matrix[i * self.n + j] * v);
                    }
                }
                acc.total() * h
            })
            .collect();
        StepFunction::from_cells(self.cell_scale, -self.half(), out)
    }

    /// The transpose operator, acting by the swapped samples K(y, x).
    pub fn transpose(&self) -> Self {
        let mut matrix = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                matrix[j * self.n + i] = self.matrix[i * self.n + j];
            }
        }
        KernelOperator {
            matrix,
            ..self.clone()
        }
    }

    /// T(1) over the window: row sums times the cell width.
    pub fn t_one(&self) -> StepFunction {
        let h = exp2i(self.cell_scale);
        let values = (0..self.n)
            .map(|i| {
                let mut acc = Accumulator::new();
                for j in 0..self.n {
                    acc.add(self.matrix[i * self.n + j]);
                }
                acc.total() * h
            })
            .collect();
        StepFunction::from_cells(self.cell_scale, -self.half(), values)
            .expect("window geometry is already validated")
    }

    /// T*(1) over the window: column sums times the cell width.
    pub fn t_star_one(&self) -> StepFunction {
        self.transpose().t_one()
    }

    /// The indicator bracket over signed cells [lo, hi) at the sampling
    /// scale. Summed in the symmetrized form
    /// sum over i < j of (K_ij + K_ji), so an antisymmetric kernel gives
    /// a bitwise zero, making the principal-value cancellation exact.
    pub fn chi_bracket(&self, lo: i64, hi: i64) -> Result<f64> {
        let half = self.half();
        if lo < -half || hi > half || lo >= hi {
            return Err(Error::Range {
                what: "bracket cells",
                value: lo,
                min: -half,
                max: half,
            });
        }
        let a = (lo + half) as usize;
        let b = (hi + half) as usize;
        let mut acc = Accumulator::new();
        for i in a..b {
            for j in (i + 1)..b {
                acc.add(self.matrix[i * self.n + j] + self.matrix[j * self.n + i]);
            }
        }
        Ok(acc.total() * exp2i(self.cell_scale) * exp2i(self.cell_scale))
    }

    /// The quadratic form <Tf, f> in the same symmetrized order, so the
    /// antisymmetric part drops out term by term.
    pub fn quadratic_form(&self, f: &StepFunction) -> Result<f64> {
        let vals = self.window_values(f)?;
        let mut acc = Accumulator::new();
        for i in 0..self.n {
            if vals[i] == 0.0 {
                continue;
            }
            for j in (i + 1)..self.n {
                if vals[j] != 0.0 {
                    let sym = self.matrix[i * self.n + j] + self.matrix[j * self.n + i];
                    acc.add(sym * vals[i] * vals[j]);
                }
            }
        }
        Ok(acc.total() * exp2i(self.cell_scale) * exp2i(self.cell_scale))
    }

    /// Weak boundedness constant over an interval family: the supremum
    /// of |<T chi_I, chi_I>| / |I| with its witness.
    pub fn wbp(&self, family: Family) -> NormReport {
        let n = self.n;
        let half = self.half();
        let stride = n + 1;
        // Inclusion-exclusion table over the symmetrized upper triangle.
        let mut p = vec![0.0f64; stride * stride];
        for i in 0..n {
            for j in 0..n {
                let u = if j > i {
                    self.matrix[i * n + j] + self.matrix[j * n + i]
                } else {
                    0.0
                };
                p[(i + 1) * stride + (j + 1)] =
                    u + p[i * stride + (j + 1)] + p[(i + 1) * stride + j] - p[i * stride + j];
            }
        }
        let block = |a: usize, b: usize| {
            p[b * stride + b] - p[a * stride + b] - p[b * stride + a] + p[a * stride + a]
        };
        let h = exp2i(self.cell_scale);
        let mut best: Option<(f64, usize, usize)> = None;
        let mut offer = |a: usize, b: usize| {
            let value = h * block(a, b).abs() / (b - a) as f64;
            let better = match best {
                None => true,
                Some((v, pa, pb)) => {
                    value > v || (value == v && (b - a, a) < (pb - pa, pa))
                }
            };
            if better {
                best = Some((value, a, b));
            }
        };
        match family {
            Family::All => {
                for a in 0..n {
                    for b in (a + 2)..=n {
                        offer(a, b);
                    }
                }
            }
            Family::TwoSided => {
                let mid = n / 2;
                for a in 0..n {
                    for b in (a + 2)..=n {
                        if b <= mid || a >= mid {
                            offer(a, b);
                        }
                    }
                }
            }
            Family::Dyadic => {
                let mut w = 1usize;
                while w <= n / 2 {
                    let mut a = 0;
                    while a + w <= n {
                        offer(a, a + w);
                        a += w;
                    }
                    w *= 2;
                }
            }
            Family::Shifted => {
                let mut w = 1usize;
                while 2 * w <= n {
                    for a in (0..=(n - 2 * w)).step_by(w) {
                        offer(a, a + 2 * w);
                    }
                    w *= 2;
                }
            }
        }
        let (value, a, b) = best.unwrap_or((0.0, 0, n));
        NormReport {
            value,
            witness: Some(
                GridInterval::new(self.cell_scale, a as i64 - half, b as i64 - half)
                    .expect("window cells are in range"),
            ),
            family,
        }
    }

    /// Whether supp(T chi_I) stays inside I for every half block
    /// I = [0, 2^j) and [-2^j, 0) in the window.
    pub fn support_preserving(&self) -> bool {
        let n = self.n;
        let half = n / 2;
        let peak = self.matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut w = 1usize;
        while w <= half {
            for (lo, hi) in [(half, half + w), (half - w, half)] {
                for i in (0..lo).chain(hi..n) {
                    let mut acc = Accumulator::new();
                    for j in lo..hi {
                        acc.add(self.matrix[i * n + j]);
                    }
                    if acc.total().abs() > DEFAULT_TOL * (1.0 + peak * w as f64) {
                        return false;
                    }
                }
            }
            w *= 2;
        }
        true
    }

    /// Both sides of the bracket identity at level j: the pairing
    /// <T(b_j), 1> against its telescoped form
    /// 2^{-(j+1)} [ <T chi_{[-2^j, 0)}, chi> - <T chi_{[0, 2^j)}, chi> ].
    pub fn special_bracket(&self, level: i32) -> Result<BracketCheck> {
        let m = self.cell_scale;
        if level < m || level > self.window_scale {
            return Err(Error::Range {
                what: "bracket level",
                value: level as i64,
                min: m as i64,
                max: self.window_scale as i64,
            });
        }
        let w = 1i64 << (level - m);
        let b = StepFunction::special_atom(level, 0, m)?;
        let lhs = self.apply(&b)?.integral();
        let rhs = exp2i(-(level + 1)) * (self.chi_bracket(-w, 0)? - self.chi_bracket(0, w)?);
        let rel_err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        Ok(BracketCheck {
            level,
            lhs,
            rhs,
            rel_err,
        })
    }

    /// Observational matrix 2-norm of the operator by power iteration
    /// on K^T K, scaled to the L2(R) normalization.
    pub fn l2_norm_estimate(&self, iterations: usize) -> f64 {
        let n = self.n;
        let mut rng = rng_from_seed(0x5eed);
        let mut v: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-128..=128i64) as f64 / 128.0)
            .collect();
        let mat = |row_major: bool, x: &[f64], out: &mut Vec<f64>| {
            out.clear();
            out.extend((0..n).map(|i| {
                let mut acc = Accumulator::new();
                for (j, xj) in x.iter().enumerate() {
                    let k = if row_major {
                        self.matrix[i * n + j]
                    } else {
                        self.matrix[j * n + i]
                    };
                    acc.add(k * xj);
                }
                acc.total()
            }));
        };
        let mut u = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for _ in 0..iterations {
            mat(true, &v, &mut u);
            mat(false, &u, &mut w);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            v = w.iter().map(|x| x / norm).collect();
        }
        mat(true, &v, &mut u);
        exp2i(self.cell_scale) * u.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// The full audit: T(1) and T*(1) with their tail band, the four
    /// surrogate constants, the lambda-norm propagation check, and the
    /// evenness route when the kernel produces an even T(1).
    pub fn bmo_conditions(&self) -> Result<T1Report> {
        let t1 = self.t_one();
        let t1_star = self.t_star_one();

        let c_1d = bmo::bmo_norm(&t1, Family::Dyadic)?.value
            + bmo::bmo_norm(&t1_star, Family::Dyadic)?.value;
        let c_1s = bmo::bmo_norm(&t1, Family::TwoSided)?.value
            + bmo::bmo_norm(&t1_star, Family::TwoSided)?.value;

        // The pairings <T(b_{n,k}), 1> = <t1_star, b_{n,k}> and the
        // transposed twins, swept jointly. The sweep runs one doubling
        // past the kernel window (where both T(1)s vanish), the same
        // ambient the lambda norm uses, so every pairing term inside the
        // lambda norm is dominated by a term of this sweep.
        let m = self.cell_scale;
        let sweep_top = (self.window_scale + 1).min(crate::interval::SCALE_MAX);
        let mut c_2d = 0.0f64;
        let mut c_2d_witness = None;
        let mut c_2s = 0.0f64;
        let mut c_2s_witness = None;
        for n in m..=sweep_top {
            let reach = 1i64 << (sweep_top - n);
            for k in (1 - reach)..reach {
                let b = StepFunction::special_atom(n, k, m)?;
                let value =
                    t1_star.inner_product(&b)?.abs() + t1.inner_product(&b)?.abs();
                if value > c_2d {
                    c_2d = value;
                    c_2d_witness = Some((n, k));
                }
                if k == 0 && value > c_2s {
                    c_2s = value;
                    c_2s_witness = Some(n);
                }
            }
        }

        let lambda_t1 = bmo::lambda_norm(&t1)?;
        let lambda_t1_star = bmo::lambda_norm(&t1_star)?;
        let budget = c_1d + c_2d;
        let slack = 1e-9 * (1.0 + budget);
        let lambda_within_sum =
            lambda_t1.value <= budget + slack && lambda_t1_star.value <= budget + slack;

        let peak = t1.max_abs();
        let even_t1 = {
            let end = t1.cell_end().max(-t1.cell_start);
            (0..end).all(|c| {
                (t1.value_at_cell(c) - t1.value_at_cell(-1 - c)).abs()
                    <= 1e-9 * (1.0 + peak)
            })
        };
        let even_extension = if even_t1 {
            Some(bmo::extension_criteria(&t1.restrict(HalfLine::Positive).trimmed())?)
        } else {
            None
        };

        Ok(T1Report {
            bmo_all_t1: bmo::bmo_norm(&t1, Family::All)?.value,
            bmo_all_t1_star: bmo::bmo_norm(&t1_star, Family::All)?.value,
            tail_band: self.tail_bound,
            c_1d,
            c_2d,
            c_1s,
            c_2s,
            c_2d_witness,
            c_2s_witness,
            lambda_t1,
            lambda_t1_star,
            lambda_within_sum,
            even_t1,
            even_extension,
            support_preserving: self.support_preserving(),
            l2_estimate: self.l2_norm_estimate(60),
            t1,
            t1_star,
        })
    }
}

/// One level of the bracket identity with both sides evaluated.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BracketCheck {
    pub level: i32,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Everything the T(1)-type audit measures on one operator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct T1Report {
    pub t1: StepFunction,
    pub t1_star: StepFunction,
    /// Uncertainty carried by every T(1) and T*(1) value due to the
    /// window truncation of the kernel.
    pub tail_band: f64,
    /// Dyadic norms of T(1) plus T*(1).
    pub c_1d: f64,
    /// Supremum over window (n, k) of the paired special-atom brackets.
    pub c_2d: f64,
    /// Two-sided analogue of c_1d.
    pub c_1s: f64,
    /// k = 0 slice of c_2d.
    pub c_2s: f64,
    pub c_2d_witness: Option<(i32, i64)>,
    pub c_2s_witness: Option<i32>,
    pub lambda_t1: LambdaReport,
    pub lambda_t1_star: LambdaReport,
    /// lambda-norm of both T(1) and T*(1) stays below c_1d + c_2d.
    pub lambda_within_sum: bool,
    pub bmo_all_t1: f64,
    pub bmo_all_t1_star: f64,
    pub even_t1: bool,
    /// Present when T(1) is even: the even-extension criteria of its
    /// positive half.
    pub even_extension: Option<ExtensionReport>,
    pub support_preserving: bool,
    pub l2_estimate: f64,
}
