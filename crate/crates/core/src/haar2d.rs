//! The two-dimensional extension at generator level: the three basic
//! orthogonal Haar generators, exact quadrant integrals, the special
//! functions b1, b2, b3, four-rectangle special functions in three sign
//! patterns, and a pairing sweep reported next to a dyadic-square
//! oscillation norm.
//!
//! Everything is materialized on square dyadic grids and integrated
//! exactly, so the span identities below (zero quadrant integrals,
//! generator orthogonality) hold bitwise, not approximately.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bmo::Window;
use crate::error::{Error, Result};
use crate::interval::{check_scale, GridInterval};
use crate::num::{self, exp2i, Accumulator};
use crate::step::StepFunction;

/// Hard cap on materialized 2D grids, well under the 1D cap because
/// storage is quadratic in the side length.
pub const MAX_CELLS_2D: i64 = 1 << 20;

/// Half-side cap (in cells) for pairing windows; a 256 x 256 grid keeps
/// the four-index special-function sweep near a quarter million tuples.
const MAX_WINDOW_HALF_2D: i64 = 1 << 7;

/// A function constant on dyadic squares of side 2^cell_scale. Row jy,
/// column ix holds the value on the cell with corner
/// ((cell_start.0 + ix) 2^m, (cell_start.1 + jy) 2^m); rows run upward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFunction2D {
    pub cell_scale: i32,
    pub cell_start: (i64, i64),
    pub values: Vec<Vec<f64>>,
}

impl StepFunction2D {
    /// The identically-zero function.
    pub fn zero(cell_scale: i32) -> Self {
        Self {
            cell_scale,
            cell_start: (0, 0),
            values: Vec::new(),
        }
    }

    pub fn from_rows(
        cell_scale: i32,
        cell_start: (i64, i64),
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_scale("cell scale", cell_scale)?;
        let ny = values.len() as i64;
        let nx = values.first().map_or(0, Vec::len) as i64;
        if values.iter().any(|row| row.len() as i64 != nx) {
            return Err(Error::Contract("ragged 2D value grid".into()));
        }
        if nx * ny > MAX_CELLS_2D {
            return Err(Error::Range {
                what: "2D cell count",
                value: nx * ny,
                min: 0,
                max: MAX_CELLS_2D,
            });
        }
        for (start, extent) in [(cell_start.0, nx), (cell_start.1, ny)] {
            start.checked_add(extent).ok_or(Error::Range {
                what: "2D cell position",
                value: start,
                min: i64::MIN,
                max: i64::MAX,
            })?;
        }
        if nx == 0 || ny == 0 {
            return Ok(Self::zero(cell_scale));
        }
        Ok(Self {
            cell_scale,
            cell_start,
            values,
        })
    }

    /// Cells along x.
    pub fn nx(&self) -> i64 {
        self.values.first().map_or(0, Vec::len) as i64
    }

    /// Cells along y.
    pub fn ny(&self) -> i64 {
        self.values.len() as i64
    }

    pub fn cell_width(&self) -> f64 {
        exp2i(self.cell_scale)
    }

    pub fn cell_area(&self) -> f64 {
        exp2i(2 * self.cell_scale)
    }

    pub fn value_at_cell(&self, cx: i64, cy: i64) -> f64 {
        let ix = cx - self.cell_start.0;
        let jy = cy - self.cell_start.1;
        if ix < 0 || ix >= self.nx() || jy < 0 || jy >= self.ny() {
            return 0.0;
        }
        self.values[jy as usize][ix as usize]
    }

    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let w = self.cell_width();
        self.value_at_cell((x / w).floor() as i64, (y / w).floor() as i64)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Bounding box of the nonzero cells as one grid interval per axis,
    /// or None for the zero function.
    pub fn support_box(&self) -> Option<(GridInterval, GridInterval)> {
        let mut x = (i64::MAX, i64::MIN);
        let mut y = (i64::MAX, i64::MIN);
        for (jy, row) in self.values.iter().enumerate() {
            for (ix, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    let cx = self.cell_start.0 + ix as i64;
                    let cy = self.cell_start.1 + jy as i64;
                    x = (x.0.min(cx), x.1.max(cx + 1));
                    y = (y.0.min(cy), y.1.max(cy + 1));
                }
            }
        }
        if x.0 >= x.1 {
            return None;
        }
        let gx = GridInterval::new(self.cell_scale, x.0, x.1)
            .expect("nonempty bounding box is a valid interval");
        let gy = GridInterval::new(self.cell_scale, y.0, y.1)
            .expect("nonempty bounding box is a valid interval");
        Some((gx, gy))
    }

    pub fn integral(&self) -> f64 {
        num::sum(self.values.iter().flatten().copied()) * self.cell_area()
    }

    /// The same function on a finer grid; values are copied, not rescaled.
    pub fn refine_to(&self, cell_scale: i32) -> Result<Self> {
        if cell_scale > self.cell_scale {
            return Err(Error::Resolution {
                required: self.cell_scale,
                cell_scale,
            });
        }
        let gap = self.cell_scale - cell_scale;
        if gap > 13 {
            return Err(Error::Range {
                what: "2D scale gap",
                value: gap as i64,
                min: 0,
                max: 13,
            });
        }
        if gap == 0 {
            return Ok(self.clone());
        }
        if self.ny() == 0 {
            return Ok(Self::zero(cell_scale));
        }
        let r = 1i64 << gap;
        let start = (
            self.cell_start.0.checked_mul(r).ok_or(Error::Range {
                what: "2D cell position",
                value: self.cell_start.0,
                min: i64::MIN,
                max: i64::MAX,
            })?,
            self.cell_start.1.checked_mul(r).ok_or(Error::Range {
                what: "2D cell position",
                value: self.cell_start.1,
                min: i64::MIN,
                max: i64::MAX,
            })?,
        );
        let mut rows = Vec::with_capacity((self.ny() * r) as usize);
        for row in &self.values {
            let fine: Vec<f64> = row
                .iter()
                .flat_map(|v| std::iter::repeat(*v).take(r as usize))
                .collect();
            for _ in 0..r {
                rows.push(fine.clone());
            }
        }
        Self::from_rows(cell_scale, start, rows)
    }

    pub fn scale_by(&self, c: f64) -> Self {
        Self {
            cell_scale: self.cell_scale,
            cell_start: self.cell_start,
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| c * v).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let scale = self.cell_scale.min(other.cell_scale);
        let a = self.refine_to(scale)?;
        let b = other.refine_to(scale)?;
        if a.ny() == 0 {
            return Ok(b);
        }
        if b.ny() == 0 {
            return Ok(a);
        }
        let x0 = a.cell_start.0.min(b.cell_start.0);
        let y0 = a.cell_start.1.min(b.cell_start.1);
        let x1 = (a.cell_start.0 + a.nx()).max(b.cell_start.0 + b.nx());
        let y1 = (a.cell_start.1 + a.ny()).max(b.cell_start.1 + b.ny());
        let mut rows = Vec::with_capacity((y1 - y0) as usize);
        for cy in y0..y1 {
            rows.push(
                (x0..x1)
                    .map(|cx| a.value_at_cell(cx, cy) + b.value_at_cell(cx, cy))
                    .collect(),
            );
        }
        Self::from_rows(scale, (x0, y0), rows)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_by(-1.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        let scale = self.cell_scale.min(other.cell_scale);
        let a = self.refine_to(scale)?;
        let b = other.refine_to(scale)?;
        if a.ny() == 0 || b.ny() == 0 {
            return Ok(0.0);
        }
        let x0 = a.cell_start.0.max(b.cell_start.0);
        let y0 = a.cell_start.1.max(b.cell_start.1);
        let x1 = (a.cell_start.0 + a.nx()).min(b.cell_start.0 + b.nx());
        let y1 = (a.cell_start.1 + a.ny()).min(b.cell_start.1 + b.ny());
        if x0 >= x1 || y0 >= y1 {
            return Ok(0.0);
        }
        let mut acc = Accumulator::new();
        for cy in y0..y1 {
            for cx in x0..x1 {
                acc.add(a.value_at_cell(cx, cy) * b.value_at_cell(cx, cy));
            }
        }
        Ok(acc.total() * exp2i(2 * scale))
    }

    /// f(x, y) = fx(x) fy(y), materialized at the finer of the two scales.
    pub fn tensor(fx: &StepFunction, fy: &StepFunction) -> Result<Self> {
        let scale = fx.cell_scale.min(fy.cell_scale);
        let gx = fx.refine_to(scale)?;
        let gy = fy.refine_to(scale)?;
        let rows = gy
            .values
            .iter()
            .map(|vy| gx.values.iter().map(|vx| vx * vy).collect())
            .collect();
        Self::from_rows(scale, (gx.cell_start, gy.cell_start), rows)
    }
}

/// The L2-normalized generator: values +-2^n on the dyadic square
/// [k 2^-n, (k+1) 2^-n) x [l 2^-n, (l+1) 2^-n), with the sign split by
/// the left/right half in x (j = 1), in y (j = 2), or both (j = 3).
pub fn psi(j: u8, n: i32, k: i64, l: i64, cell_scale: i32) -> Result<StepFunction2D> {
    if !(1..=3).contains(&j) {
        return Err(Error::Range {
            what: "generator index",
            value: j as i64,
            min: 1,
            max: 3,
        });
    }
    let side_scale = -n;
    check_scale("generator scale", side_scale)?;
    if cell_scale > side_scale - 1 {
        return Err(Error::Resolution {
            required: side_scale - 1,
            cell_scale,
        });
    }
    let gap = side_scale - cell_scale;
    if gap > 10 {
        return Err(Error::Range {
            what: "generator cell depth",
            value: gap as i64,
            min: 1,
            max: 10,
        });
    }
    let s = 1i64 << gap;
    let start = (
        k.checked_mul(s).ok_or(Error::Range {
            what: "generator position",
            value: k,
            min: i64::MIN,
            max: i64::MAX,
        })?,
        l.checked_mul(s).ok_or(Error::Range {
            what: "generator position",
            value: l,
            min: i64::MIN,
            max: i64::MAX,
        })?,
    );
    let half = (s / 2) as usize;
    let amp = exp2i(n);
    let mut rows = Vec::with_capacity(s as usize);
    for jy in 0..s as usize {
        let sy = if jy < half { 1.0 } else { -1.0 };
        rows.push(
            (0..s as usize)
                .map(|ix| {
                    let sx = if ix < half { 1.0 } else { -1.0 };
                    match j {
                        1 => amp * sx,
                        2 => amp * sy,
                        _ => amp * sx * sy,
                    }
                })
                .collect(),
        );
    }
    StepFunction2D::from_rows(cell_scale, start, rows)
}

/// Exact integrals over the four coordinate quadrants, ordered
/// (x >= 0, y >= 0), (x < 0, y >= 0), (x < 0, y < 0), (x >= 0, y < 0).
/// All four vanish exactly on the closed span of the generators.
pub fn quadrant_integrals(f: &StepFunction2D) -> [f64; 4] {
    let mut acc = [
        Accumulator::new(),
        Accumulator::new(),
        Accumulator::new(),
        Accumulator::new(),
    ];
    for (jy, row) in f.values.iter().enumerate() {
        let cy = f.cell_start.1 + jy as i64;
        for (ix, v) in row.iter().enumerate() {
            let cx = f.cell_start.0 + ix as i64;
            let q = match (cx >= 0, cy >= 0) {
                (true, true) => 0,
                (false, true) => 1,
                (false, false) => 2,
                (true, false) => 3,
            };
            acc[q].add(*v);
        }
    }
    let area = f.cell_area();
    [
        acc[0].total() * area,
        acc[1].total() * area,
        acc[2].total() * area,
        acc[3].total() * area,
    ]
}

/// b1(x, y) = b(x) chi_[0,1)(y).
pub fn b1(cell_scale: i32) -> Result<StepFunction2D> {
    let b = StepFunction::special_atom(0, 0, cell_scale)?;
    let chi = StepFunction::indicator(&GridInterval::new(0, 0, 1)?, cell_scale)?;
    StepFunction2D::tensor(&b, &chi)
}

/// b2(x, y) = chi_[0,1)(x) b(y).
pub fn b2(cell_scale: i32) -> Result<StepFunction2D> {
    let b = StepFunction::special_atom(0, 0, cell_scale)?;
    let chi = StepFunction::indicator(&GridInterval::new(0, 0, 1)?, cell_scale)?;
    StepFunction2D::tensor(&chi, &b)
}

/// b3(x, y) = b(x) chi_[-1,0)(y).
pub fn b3(cell_scale: i32) -> Result<StepFunction2D> {
    let b = StepFunction::special_atom(0, 0, cell_scale)?;
    let chi = StepFunction::indicator(&GridInterval::new(0, -1, 0)?, cell_scale)?;
    StepFunction2D::tensor(&b, &chi)
}

/// Zero-sum sign pattern on a 2 x 2 block of rectangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern2d {
    /// Signs split left/right: (+1, -1, +1, -1).
    Vert,
    /// Signs split top/bottom: (+1, +1, -1, -1).
    Horiz,
    /// Signs alternate: (+1, -1, -1, +1).
    Checker,
}

impl Pattern2d {
    pub const ALL: [Pattern2d; 3] = [Pattern2d::Vert, Pattern2d::Horiz, Pattern2d::Checker];

    /// (k1, k2, k3, k4) on (right-top, left-top, right-bottom, left-bottom).
    pub fn signs(self) -> [f64; 4] {
        match self {
            Pattern2d::Vert => [1.0, -1.0, 1.0, -1.0],
            Pattern2d::Horiz => [1.0, 1.0, -1.0, -1.0],
            Pattern2d::Checker => [1.0, -1.0, -1.0, 1.0],
        }
    }
}

/// Four-rectangle special function 2^-(n+m+2) sum of k_i chi over the
/// 2 x 2 block [(k-1) 2^n, (k+1) 2^n) x [(l-1) 2^m, (l+1) 2^m),
/// materialized at cell scale min(n, m).
pub fn special2d(pattern: Pattern2d, n: i32, k: i64, m: i32, l: i64) -> Result<StepFunction2D> {
    check_scale("special x scale", n)?;
    check_scale("special y scale", m)?;
    let cs = n.min(m);
    let gap = (n - m).unsigned_abs();
    if gap > 10 {
        return Err(Error::Range {
            what: "special2d scale gap",
            value: gap as i64,
            min: 0,
            max: 10,
        });
    }
    let wx = 1i64 << (n - cs);
    let wy = 1i64 << (m - cs);
    let start = (
        (k - 1).checked_mul(wx).ok_or(Error::Range {
            what: "special2d position",
            value: k,
            min: i64::MIN,
            max: i64::MAX,
        })?,
        (l - 1).checked_mul(wy).ok_or(Error::Range {
            what: "special2d position",
            value: l,
            min: i64::MIN,
            max: i64::MAX,
        })?,
    );
    let amp = exp2i(-(n + m + 2));
    let signs = pattern.signs();
    let mut rows = Vec::with_capacity((2 * wy) as usize);
    for jy in 0..2 * wy {
        let top = jy >= wy;
        rows.push(
            (0..2 * wx)
                .map(|ix| {
                    let right = ix >= wx;
                    let sign = match (right, top) {
                        (true, true) => signs[0],
                        (false, true) => signs[1],
                        (true, false) => signs[2],
                        (false, false) => signs[3],
                    };
                    amp * sign
                })
                .collect(),
        );
    }
    StepFunction2D::from_rows(cs, start, rows)
}

/// Maximizing index tuple of the special-function pairing sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing2dWitness {
    pub pattern: Pattern2d,
    pub n: i32,
    pub k: i64,
    pub m: i32,
    pub l: i64,
}

/// Maximizing dyadic square I_{scale,k} x I_{scale,l}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareWitness {
    pub scale: i32,
    pub k: i64,
    pub l: i64,
}

/// The special-function pairing supremum next to the dyadic-square
/// oscillation norm. No inequality between the two is asserted; they are
/// reported side by side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bmo2dReport {
    pub pairing: f64,
    pub pairing_witness: Option<Pairing2dWitness>,
    pub dyadic_square: f64,
    pub square_witness: Option<SquareWitness>,
}

/// Smallest symmetric square window holding supp(phi), widened by
/// `margin_doublings` doublings.
pub fn window2d_for(phi: &StepFunction2D, margin_doublings: u32) -> Result<Window> {
    let cs = phi.cell_scale;
    let ext = phi
        .support_box()
        .map(|(x, y)| x.hi.max(-x.lo).max(y.hi).max(-y.lo))
        .unwrap_or(1)
        .max(1);
    let top = cs + num::ceil_log2(ext) + margin_doublings as i32;
    check_scale("window scale", top)?;
    let w = Window {
        cell_scale: cs,
        top_scale: top,
    };
    if w.half_cells() > MAX_WINDOW_HALF_2D {
        return Err(Error::Range {
            what: "2D window half side",
            value: w.half_cells(),
            min: 1,
            max: MAX_WINDOW_HALF_2D,
        });
    }
    Ok(w)
}

/// Pairing and oscillation sweep inside the automatic window.
pub fn bmo2d_pairing(phi: &StepFunction2D) -> Result<Bmo2dReport> {
    bmo2d_pairing_windowed(phi, &window2d_for(phi, 1)?)
}

/// Sweeps |<phi, b_{n,k,m,l}>| over all three sign patterns and every
/// index tuple whose 2 x 2 block sits inside the window square, and the
/// mean oscillation of phi over every dyadic square in the window. Both
/// suprema keep the first maximizer in scan order as witness.
pub fn bmo2d_pairing_windowed(phi: &StepFunction2D, window: &Window) -> Result<Bmo2dReport> {
    let f = phi.refine_to(window.cell_scale)?;
    let half = window.half_cells();
    if half > MAX_WINDOW_HALF_2D {
        return Err(Error::Range {
            what: "2D window half side",
            value: half,
            min: 1,
            max: MAX_WINDOW_HALF_2D,
        });
    }
    if let Some((bx, by)) = f.support_box() {
        let reach = bx.hi.max(-bx.lo).max(by.hi).max(-by.lo);
        if reach > half {
            return Err(Error::Range {
                what: "window coverage",
                value: reach,
                min: 0,
                max: half,
            });
        }
    }
    let w = (2 * half) as usize;
    let stride = w + 1;
    let mut grid = vec![0.0f64; w * w];
    for jy in 0..w {
        for ix in 0..w {
            grid[jy * w + ix] = f.value_at_cell(ix as i64 - half, jy as i64 - half);
        }
    }
    // Inclusion-exclusion table: prefix[(jy+1) stride + ix+1] sums the
    // sub-grid [0, ix] x [0, jy].
    let mut prefix = vec![0.0f64; stride * stride];
    for jy in 0..w {
        for ix in 0..w {
            prefix[(jy + 1) * stride + ix + 1] = grid[jy * w + ix]
                + prefix[jy * stride + ix + 1]
                + prefix[(jy + 1) * stride + ix]
                - prefix[jy * stride + ix];
        }
    }
    let rect = |x0: usize, x1: usize, y0: usize, y1: usize| -> f64 {
        prefix[y1 * stride + x1] - prefix[y0 * stride + x1] - prefix[y1 * stride + x0]
            + prefix[y0 * stride + x0]
    };

    let cs = window.cell_scale;
    let top = window.top_scale;
    let area = exp2i(2 * cs);
    let mut pairing = 0.0f64;
    let mut pairing_witness = None;
    for n in cs..=top {
        let wx = 1i64 << (n - cs);
        let kmax = half / wx;
        for m in cs..=top {
            let wy = 1i64 << (m - cs);
            let lmax = half / wy;
            let amp = exp2i(-(n + m + 2)) * area;
            for k in (1 - kmax)..=(kmax - 1) {
                let x0 = (half + (k - 1) * wx) as usize;
                let xm = x0 + wx as usize;
                let x1 = xm + wx as usize;
                for l in (1 - lmax)..=(lmax - 1) {
                    let y0 = (half + (l - 1) * wy) as usize;
                    let ym = y0 + wy as usize;
                    let y1 = ym + wy as usize;
                    let s1 = rect(xm, x1, ym, y1);
                    let s2 = rect(x0, xm, ym, y1);
                    let s3 = rect(xm, x1, y0, ym);
                    let s4 = rect(x0, xm, y0, ym);
                    for pattern in Pattern2d::ALL {
                        let s = pattern.signs();
                        let value =
                            amp * (s[0] * s1 + s[1] * s2 + s[2] * s3 + s[3] * s4).abs();
                        if value > pairing {
                            pairing = value;
                            pairing_witness = Some(Pairing2dWitness { pattern, n, k, m, l });
                        }
                    }
                }
            }
        }
    }

    let mut dyadic_square = 0.0f64;
    let mut square_witness = None;
    for scale in cs..=top {
        let side = 1usize << (scale - cs);
        let per_side = w / side;
        for sy in 0..per_side {
            for sx in 0..per_side {
                let cells = (side * side) as f64;
                let mu = rect(sx * side, (sx + 1) * side, sy * side, (sy + 1) * side) / cells;
                let mut dev = Accumulator::new();
                for jy in sy * side..(sy + 1) * side {
                    for ix in sx * side..(sx + 1) * side {
                        dev.add((grid[jy * w + ix] - mu).abs());
                    }
                }
                let osc = dev.total() / cells;
                if osc > dyadic_square {
                    dyadic_square = osc;
                    square_witness = Some(SquareWitness {
                        scale,
                        k: sx as i64 - half / side as i64,
                        l: sy as i64 - half / side as i64,
                    });
                }
            }
        }
    }

    Ok(Bmo2dReport {
        pairing,
        pairing_witness,
        dyadic_square,
        square_witness,
    })
}

/// Random finite combination of generators with coefficients quantized
/// to sixteenths; it lies in the closed span of the generator family, so
/// all four quadrant integrals vanish bitwise.
pub fn random_psi_combo(rng: &mut impl Rng, terms: usize) -> Result<StepFunction2D> {
    let mut f = StepFunction2D::zero(0);
    for _ in 0..terms {
        let j = rng.random_range(1..=3u8);
        let n = rng.random_range(-2..=2i32);
        let k = rng.random_range(-4..=4i64);
        let l = rng.random_range(-4..=4i64);
        let c = rng.random_range(-16..=16i64) as f64 / 16.0;
        f = f.add(&psi(j, n, k, l, -n - 1)?.scale_by(c))?;
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::DyadicInterval;
    use crate::sampling::rng_from_seed;

    fn tuples() -> Vec<(u8, i32, i64, i64)> {
        let mut out = Vec::new();
        for j in 1..=3u8 {
            for (n, k, l) in [
                (0, 0, 0),
                (0, 1, 0),
                (0, 0, 1),
                (0, -1, 2),
                (1, 0, 0),
                (-1, 0, 0),
                (-1, 1, 1),
                (1, -1, -1),
            ] {
                out.push((j, n, k, l));
            }
        }
        out
    }

    #[test]
    fn psi3_matches_the_quadrant_sign_table() {
        let p = psi(3, 0, 0, 0, -1).unwrap();
        assert_eq!(p.cell_start, (0, 0));
        assert_eq!(p.values, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert_eq!(p.value_at(0.25, 0.25), 1.0);
        assert_eq!(p.value_at(0.75, 0.25), -1.0);
        assert_eq!(p.value_at(0.25, 0.75), -1.0);
        assert_eq!(p.value_at(0.75, 0.75), 1.0);
        assert_eq!(p.value_at(-0.25, 0.25), 0.0);
    }

    #[test]
    fn generators_have_zero_integral_and_unit_norm() {
        for (j, n, k, l) in tuples() {
            let p = psi(j, n, k, l, -n - 2).unwrap();
            assert_eq!(p.integral(), 0.0);
            assert_eq!(p.inner_product(&p).unwrap(), 1.0);
            assert_eq!(p.max_abs(), exp2i(n));
        }
    }

    #[test]
    fn distinct_generators_are_orthogonal_exactly() {
        let fam: Vec<_> = tuples()
            .into_iter()
            .map(|(j, n, k, l)| (j, n, k, l, psi(j, n, k, l, -n - 1).unwrap()))
            .collect();
        for (i, a) in fam.iter().enumerate() {
            for b in &fam[i + 1..] {
                assert_eq!(
                    a.4.inner_product(&b.4).unwrap(),
                    0.0,
                    "tuples {:?} and {:?}",
                    (a.0, a.1, a.2, a.3),
                    (b.0, b.1, b.2, b.3)
                );
            }
        }
    }

    #[test]
    fn generators_are_tensors_of_the_1d_pieces() {
        for (n, k, l) in [(0i32, 0i64, 0i64), (1, -1, 2), (-2, 3, -3)] {
            let cs = -n - 2;
            let hx = StepFunction::haar(DyadicInterval::new(-n, k), cs).unwrap();
            let hy = StepFunction::haar(DyadicInterval::new(-n, l), cs).unwrap();
            let ix = StepFunction::indicator(&GridInterval::new(-n, k, k + 1).unwrap(), cs).unwrap();
            let iy = StepFunction::indicator(&GridInterval::new(-n, l, l + 1).unwrap(), cs).unwrap();
            assert_eq!(psi(1, n, k, l, cs).unwrap(), StepFunction2D::tensor(&hx, &iy).unwrap());
            assert_eq!(psi(2, n, k, l, cs).unwrap(), StepFunction2D::tensor(&ix, &hy).unwrap());
            assert_eq!(
                psi(3, n, k, l, cs).unwrap(),
                StepFunction2D::tensor(&hx, &hy).unwrap().scale_by(exp2i(-n))
            );
        }
    }

    #[test]
    fn resolution_and_index_errors_are_reported() {
        assert!(psi(0, 0, 0, 0, -1).is_err());
        assert!(psi(4, 0, 0, 0, -1).is_err());
        assert!(psi(1, 0, 0, 0, 0).is_err());
        assert!(psi(1, -5, 0, 0, -20).is_err());
        assert!(special2d(Pattern2d::Vert, 0, 0, 12, 0).is_err());
        assert!(StepFunction2D::from_rows(0, (0, 0), vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn quadrant_integrals_partition_the_plane() {
        for (j, n, k, l) in [(1u8, 0i32, 1i64, 2i64), (2, 1, -2, 0), (3, -1, 0, -4)] {
            assert_eq!(quadrant_integrals(&psi(j, n, k, l, -n - 1).unwrap()), [0.0; 4]);
        }
        let f = StepFunction2D::from_rows(
            -1,
            (-3, -2),
            (0..5)
                .map(|jy| (0..6).map(|ix| (ix * 5 + jy * 7) as f64 / 8.0 - 1.5).collect())
                .collect(),
        )
        .unwrap();
        let q = quadrant_integrals(&f);
        assert_eq!(num::sum(q.iter().copied()), f.integral());
        assert!(q.iter().all(|v| *v != 0.0));
    }

    #[test]
    fn special_quadrant_tables_for_the_three_b_functions() {
        assert_eq!(quadrant_integrals(&b1(-2).unwrap()), [-0.5, 0.5, 0.0, 0.0]);
        assert_eq!(quadrant_integrals(&b2(-2).unwrap()), [-0.5, 0.0, 0.0, 0.5]);
        assert_eq!(quadrant_integrals(&b3(-2).unwrap()), [0.0, 0.0, 0.5, -0.5]);
        assert_eq!(b1(-2).unwrap().integral(), 0.0);
    }

    #[test]
    fn special2d_patterns_have_zero_sums_and_lines() {
        for pattern in Pattern2d::ALL {
            assert_eq!(num::sum(pattern.signs().iter().copied()), 0.0);
            let f = special2d(pattern, 1, 2, -1, -3).unwrap();
            assert_eq!(f.integral(), 0.0);
            assert_eq!(f.max_abs(), exp2i(-2));
        }
        let vert = special2d(Pattern2d::Vert, 0, 0, 0, 0).unwrap();
        for row in &vert.values {
            assert_eq!(num::sum(row.iter().copied()), 0.0);
        }
        let horiz = special2d(Pattern2d::Horiz, 0, 0, 0, 0).unwrap();
        for ix in 0..horiz.nx() {
            let col: Vec<f64> = horiz.values.iter().map(|r| r[ix as usize]).collect();
            assert_eq!(num::sum(col.into_iter()), 0.0);
        }
    }

    #[test]
    fn checker_matches_the_translated_generator() {
        let c = special2d(Pattern2d::Checker, 0, 0, 0, 0).unwrap();
        let p = psi(3, -1, 0, 0, 0).unwrap().scale_by(0.5);
        let translated = StepFunction2D::from_rows(0, (-1, -1), p.values).unwrap();
        assert_eq!(c, translated);
    }

    #[test]
    fn pairing_of_the_half_plane_indicator() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4).map(|ix| if ix >= 2 { 1.0 } else { 0.0 }).collect())
            .collect();
        let phi = StepFunction2D::from_rows(0, (-2, -2), rows).unwrap();
        assert_eq!(phi.inner_product(&special2d(Pattern2d::Horiz, 0, 0, 0, 0).unwrap()).unwrap(), 0.0);
        assert_eq!(phi.inner_product(&special2d(Pattern2d::Checker, 0, 0, 0, 0).unwrap()).unwrap(), 0.0);
        assert_eq!(phi.inner_product(&special2d(Pattern2d::Vert, 0, 0, 0, 0).unwrap()).unwrap(), 0.5);
        let report = bmo2d_pairing(&phi).unwrap();
        assert_eq!(report.pairing, 0.5);
        let w = report.pairing_witness.unwrap();
        assert_eq!(w.pattern, Pattern2d::Vert);
        assert_eq!(w.k, 0);
        // The margin-1 window sees the truncation edge of the materialized
        // half-plane, so the square norm picks up the corner square: mean
        // 1/4 over a quarter-full 4 x 4 square, oscillation 6/16.
        assert_eq!(report.dyadic_square, 0.375);
        assert_eq!(
            report.square_witness,
            Some(SquareWitness {
                scale: 2,
                k: 0,
                l: -1
            })
        );
    }

    #[test]
    fn constant_functions_pair_to_zero() {
        // A materialized constant is only constant inside its own support,
        // so the window is pinned to the support square.
        let phi = StepFunction2D::from_rows(0, (-2, -2), vec![vec![1.0; 4]; 4]).unwrap();
        let window = Window {
            cell_scale: 0,
            top_scale: 1,
        };
        let report = bmo2d_pairing_windowed(&phi, &window).unwrap();
        assert_eq!(report.pairing, 0.0);
        assert!(report.pairing_witness.is_none());
        assert_eq!(report.dyadic_square, 0.0);
        assert!(report.square_witness.is_none());
    }

    #[test]
    fn random_combinations_have_vanishing_quadrant_functionals() {
        let mut rng = rng_from_seed(0x2d);
        for _ in 0..20 {
            let f = random_psi_combo(&mut rng, 6).unwrap();
            assert_eq!(quadrant_integrals(&f), [0.0; 4]);
        }
    }

    #[test]
    fn refinement_preserves_integrals_and_products() {
        let f = b1(-1).unwrap();
        let g = f.refine_to(-4).unwrap();
        assert_eq!(g.integral(), f.integral());
        assert_eq!(g.inner_product(&g).unwrap(), f.inner_product(&f).unwrap());
        assert_eq!(g.value_at(-0.7, 0.3), 0.5);
        assert_eq!(f.max_abs_diff(&g).unwrap(), 0.0);
        let doubled = f.add(&g).unwrap();
        assert_eq!(doubled.max_abs_diff(&f.scale_by(2.0)).unwrap(), 0.0);
    }

    #[test]
    fn two_dimensional_json_round_trips() {
        let f = special2d(Pattern2d::Checker, 1, 0, 0, -1).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: StepFunction2D = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
