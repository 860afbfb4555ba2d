//! Black-and-white images on the torus, their r-boundary, and the resulting
//! bounds on how far one ReLU layer moves their geometry.

use rayon::prelude::*;

use crate::error::{degenerate, shape, Result};
use crate::geometry::{expected_inner, expected_sq_norm, LayerSpec};
use crate::tensor::Tensor3;

/// An `n×n` image with pixels in `{0, 1}`, equivalently a subset of `Z_n×Z_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    n: usize,
    pixels: Vec<bool>,
}

impl BinaryImage {
    pub fn new(n: usize, pixels: Vec<bool>) -> Result<Self> {
        if n == 0 {
            return Err(shape("image side must be positive"));
        }
        if pixels.len() != n * n {
            return Err(shape(format!(
                "expected {} pixels, got {}",
                n * n,
                pixels.len()
            )));
        }
        Ok(Self { n, pixels })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            pixels: vec![false; n * n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            pixels: vec![true; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let pixels = (0..n * n).map(|p| f(p / n, p % n)).collect();
        Self { n, pixels }
    }

    /// Threshold a single-channel square tensor at `0.5`.
    pub fn from_tensor(t: &Tensor3) -> Result<Self> {
        let n = t
            .side()
            .ok_or_else(|| shape("binary images must be square"))?;
        if t.channels() != 1 {
            return Err(shape(format!(
                "binary images have one channel, got {}",
                t.channels()
            )));
        }
        Ok(Self {
            n,
            pixels: t.as_slice().iter().map(|&v| v >= 0.5).collect(),
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.pixels[i * self.n + j]
    }

    fn get_wrapped(&self, i: isize, j: isize) -> bool {
        let n = self.n as isize;
        self.pixels[(i.rem_euclid(n) * n + j.rem_euclid(n)) as usize]
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    /// `|A|`, which is also `‖A‖²`.
    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn to_tensor(&self) -> Tensor3 {
        let data = self
            .pixels
            .iter()
            .map(|&p| if p { 1.0 } else { 0.0 })
            .collect();
        Tensor3::new(self.n, self.n, 1, data).expect("pixel count matches side")
    }

    /// Replace every pixel by a `factor×factor` block.
    pub fn upscale(&self, factor: usize) -> Self {
        let m = self.n * factor;
        Self::from_fn(m, |i, j| self.get(i / factor, j / factor))
    }

    /// `|A ∩ B|`
    pub fn intersection_count(&self, other: &Self) -> usize {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    /// `|A Δ B|`, which is `‖A − B‖²`.
    pub fn symmetric_difference_count(&self, other: &Self) -> usize {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .filter(|(&a, &b)| a != b)
            .count()
    }
}

/// The r-boundary, listed in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryResult {
    pub pixels: Vec<(usize, usize)>,
    pub count: usize,
}

impl BoundaryResult {
    pub fn contains(&self, p: (usize, usize)) -> bool {
        self.pixels.binary_search(&p).is_ok()
    }
}

fn check_pair(a: &BinaryImage, b: &BinaryImage, r: usize) -> Result<()> {
    if a.n != b.n {
        return Err(shape(format!("image sides differ: {} vs {}", a.n, b.n)));
    }
    if 2 * r + 1 > a.n {
        return Err(shape(format!(
            "window side {} exceeds image side {}",
            2 * r + 1,
            a.n
        )));
    }
    Ok(())
}

/// Pixels whose `(2r+1)`-square window (cyclic) hits both `A` and `B` and is
/// not contained in both.
pub fn boundary(a: &BinaryImage, b: &BinaryImage, r: usize) -> Result<BoundaryResult> {
    check_pair(a, b, r)?;
    let n = a.n;
    let rr = r as isize;
    let rows: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut hits = Vec::new();
            for j in 0..n {
                let (mut hit_a, mut hit_b, mut miss_a, mut miss_b) = (false, false, false, false);
                for di in -rr..=rr {
                    for dj in -rr..=rr {
                        let (pi, pj) = (i as isize + di, j as isize + dj);
                        let (in_a, in_b) = (a.get_wrapped(pi, pj), b.get_wrapped(pi, pj));
                        hit_a |= in_a;
                        hit_b |= in_b;
                        miss_a |= !in_a;
                        miss_b |= !in_b;
                    }
                }
                if hit_a && hit_b && (miss_a || miss_b) {
                    hits.push((i, j));
                }
            }
            hits
        })
        .collect();
    let pixels: Vec<(usize, usize)> = rows.into_iter().flatten().collect();
    Ok(BoundaryResult {
        count: pixels.len(),
        pixels,
    })
}

/// `⟨A,B⟩ ∓ |∂_r(A,B)|`, which brackets `E⟨ReLU(F∗A), ReLU(F∗B)⟩` for
/// centred filters of side `2r+1` and variance `2/(2r+1)²`.
pub fn boundary_inner_bounds(a: &BinaryImage, b: &BinaryImage, r: usize) -> Result<(f64, f64)> {
    let d = boundary(a, b, r)?.count as f64;
    let inner = a.intersection_count(b) as f64;
    Ok((inner - d, inner + d))
}

/// `‖A−B‖² ∓ 2|∂_r(A,B)|`, the matching bracket for the expected squared
/// output distance.
pub fn boundary_distance_bounds(a: &BinaryImage, b: &BinaryImage, r: usize) -> Result<(f64, f64)> {
    let d = boundary(a, b, r)?.count as f64;
    let dist = a.symmetric_difference_count(b) as f64;
    Ok((dist - 2.0 * d, dist + 2.0 * d))
}

/// `|∂_r(A,B)| / (‖A‖‖B‖)`
pub fn isometry_defect(a: &BinaryImage, b: &BinaryImage, r: usize) -> Result<f64> {
    let (ca, cb) = (a.count(), b.count());
    if ca == 0 || cb == 0 {
        return Err(degenerate("isometry defect of an empty image"));
    }
    let d = boundary(a, b, r)?.count as f64;
    Ok(d / ((ca as f64).sqrt() * (cb as f64).sqrt()))
}

/// Exact expectations for one image pair next to its boundary brackets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryAudit {
    pub inner: f64,
    pub boundary_count: usize,
    pub exact_expected_inner: f64,
    pub inner_bounds: (f64, f64),
    pub exact_expected_sq_distance: f64,
    pub distance_bounds: (f64, f64),
}

impl BoundaryAudit {
    pub fn in_bounds(&self, slack: f64) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo - slack && v <= hi + slack;
        inside(self.exact_expected_inner, self.inner_bounds)
            && inside(self.exact_expected_sq_distance, self.distance_bounds)
    }
}

pub fn audit_pair(a: &BinaryImage, b: &BinaryImage, r: usize) -> Result<BoundaryAudit> {
    check_pair(a, b, r)?;
    let spec = LayerSpec::boundary_model(r);
    let (ta, tb) = (a.to_tensor(), b.to_tensor());
    let exact_expected_inner = expected_inner(&ta, &tb, &spec)?;
    let exact_expected_sq_distance = expected_sq_norm(&ta, &spec)?.value
        + expected_sq_norm(&tb, &spec)?.value
        - 2.0 * exact_expected_inner;
    let boundary_count = boundary(a, b, r)?.count;
    let d = boundary_count as f64;
    let inner = a.intersection_count(b) as f64;
    let dist = a.symmetric_difference_count(b) as f64;
    Ok(BoundaryAudit {
        inner,
        boundary_count,
        exact_expected_inner,
        inner_bounds: (inner - d, inner + d),
        exact_expected_sq_distance,
        distance_bounds: (dist - 2.0 * d, dist + 2.0 * d),
    })
}

/// Axis-aligned rectangle: top-left corner and extent, placed cyclically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    /// Planar (non-wrapping) overlap extents `(e, f)`, if the rectangles meet.
    pub fn overlap(&self, other: &Rect) -> Option<(usize, usize)> {
        let span = |a0: usize, al: usize, b0: usize, bl: usize| {
            let lo = a0.max(b0);
            let hi = (a0 + al).min(b0 + bl);
            (hi > lo).then(|| hi - lo)
        };
        Some((
            span(self.row, self.height, other.row, other.height)?,
            span(self.col, self.width, other.col, other.width)?,
        ))
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectScene {
    n: usize,
    rects: Vec<Rect>,
}

impl RectScene {
    pub fn new(n: usize, rects: Vec<Rect>) -> Result<Self> {
        if n == 0 {
            return Err(shape("scene side must be positive"));
        }
        for r in &rects {
            if r.height == 0 || r.width == 0 || r.height > n || r.width > n {
                return Err(shape(format!(
                    "rectangle {r:?} does not fit a {n}×{n} scene"
                )));
            }
        }
        let rects = rects
            .into_iter()
            .map(|r| Rect {
                row: r.row % n,
                col: r.col % n,
                ..r
            })
            .collect();
        Ok(Self { n, rects })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    /// Union of all rectangles.
    pub fn render(&self) -> BinaryImage {
        render_rects(self.n, self.rects.iter())
    }

    /// `A` is the union of the even-indexed rectangles, `B` of the odd ones.
    pub fn split_pair(&self) -> (BinaryImage, BinaryImage) {
        let a = render_rects(self.n, self.rects.iter().step_by(2));
        let b = render_rects(self.n, self.rects.iter().skip(1).step_by(2));
        (a, b)
    }
}

fn render_rects<'a>(n: usize, rects: impl Iterator<Item = &'a Rect>) -> BinaryImage {
    let mut img = BinaryImage::empty(n);
    for r in rects {
        for di in 0..r.height {
            for dj in 0..r.width {
                img.pixels[((r.row + di) % n) * n + (r.col + dj) % n] = true;
            }
        }
    }
    img
}
