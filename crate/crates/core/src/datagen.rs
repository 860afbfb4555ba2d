//! Synthetic inputs: correlated Gaussian pairs, extremal witness pairs,
//! monochromatic colour pairs, rectangle scenes, and netpbm ingestion.

use std::path::Path;

use crate::error::{domain, shape, Result};
use crate::image::{BinaryImage, Rect, RectScene};
use crate::netpbm;
use crate::rng::{stream_id, Domain, Stream};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPairSpec {
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
}

/// `Y = ρX + √(1−ρ²)Z` with `X`, `Z` independent and entries `N(0, 1/n²)`,
/// so that corresponding entries have correlation `ρ`.
pub fn gaussian_pair(spec: &GaussianPairSpec) -> Result<(Tensor3, Tensor3)> {
    let GaussianPairSpec { n, rho, seed } = *spec;
    if !(rho.abs() <= 1.0) {
        return Err(domain(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    if n == 0 {
        return Err(shape("image side must be positive"));
    }
    let sd = 1.0 / n as f64;
    let mut sx = Stream::new(seed, stream_id(Domain::DataX, 0));
    let mut sz = Stream::new(seed, stream_id(Domain::DataZ, 0));
    let x: Vec<f64> = (0..n * n).map(|_| sd * sx.next_gaussian()).collect();
    let c = (1.0 - rho * rho).sqrt();
    let y = if rho == 1.0 {
        x.clone()
    } else {
        x.iter()
            .map(|&xi| rho * xi + c * sd * sz.next_gaussian())
            .collect()
    };
    Ok((Tensor3::square(n, 1, x)?, Tensor3::square(n, 1, y)?))
}

/// The three flat constructions that make the ReLU contraction bounds tight
/// (filter side 1, `ν² = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    /// Expected output inner product `(1+ρ)/2`.
    UpperBound,
    /// `⟨x,y⟩ = −ρ` and expected output inner product `0`.
    ZeroProduct,
    /// `⟨x,y⟩ = ρ` equal to the expected output inner product.
    ExactEquality,
}

/// Unit-norm witness pair shaped `1×k×1`.
pub fn witness_pair(kind: WitnessKind, rho: f64) -> Result<(Tensor3, Tensor3)> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(domain(format!(
            "witness parameter must lie in [0, 1], got {rho}"
        )));
    }
    let (x, y) = match kind {
        WitnessKind::UpperBound => {
            let (a, b) = (((1.0 + rho) / 2.0).sqrt(), ((1.0 - rho) / 2.0).sqrt());
            (vec![a, b], vec![a, -b])
        }
        WitnessKind::ZeroProduct | WitnessKind::ExactEquality => {
            let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt());
            let sign = if kind == WitnessKind::ZeroProduct {
                -1.0
            } else {
                1.0
            };
            (vec![a, b, 0.0], vec![0.0, sign * b, a])
        }
    };
    Ok((Tensor3::flat(&x)?, Tensor3::flat(&y)?))
}

/// Constant red and constant green `n×n×3` images, each of unit norm.
pub fn red_green_pair(n: usize) -> Result<(Tensor3, Tensor3)> {
    if n == 0 {
        return Err(shape("image side must be positive"));
    }
    let v = 1.0 / n as f64;
    let red = Tensor3::from_fn(n, n, 3, |_, _, k| if k == 0 { v } else { 0.0 })?;
    let green = Tensor3::from_fn(n, n, 3, |_, _, k| if k == 1 { v } else { 0.0 })?;
    Ok((red, green))
}

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// `count` rectangles with sides uniform in `[min_side, max(min_side, n/2)]`,
/// placed without crossing the torus seam. Any two rectangles that overlap
/// do so by at least `⌈min_side/2⌉` along each axis.
pub fn random_rect_scene(n: usize, count: usize, min_side: usize, seed: u64) -> Result<RectScene> {
    if min_side == 0 || min_side > n {
        return Err(domain(format!(
            "minimum side {min_side} must lie in 1..={n}"
        )));
    }
    let max_side = min_side.max(n / 2);
    let min_overlap = min_side.div_ceil(2);
    let mut s = Stream::new(seed, stream_id(Domain::Scene, 0));
    let mut rects: Vec<Rect> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let height = s.next_in(min_side as u64, max_side as u64) as usize;
            let width = s.next_in(min_side as u64, max_side as u64) as usize;
            let row = s.next_in(0, (n - height) as u64) as usize;
            let col = s.next_in(0, (n - width) as u64) as usize;
            let cand = Rect {
                row,
                col,
                height,
                width,
            };
            let compatible = rects.iter().all(|r| {
                r.overlap(&cand)
                    .map_or(true, |(e, f)| e >= min_overlap && f >= min_overlap)
            });
            if compatible {
                placed = Some(cand);
                break;
            }
        }
        rects
            .push(placed.ok_or_else(|| {
                domain("could not place rectangles under the overlap constraint")
            })?);
    }
    RectScene::new(n, rects)
}

/// Two overlapping rectangles whose overlap is at least `2r` along each axis
/// and whose r-dilations stay clear of the torus seam.
pub fn overlapping_rect_pair(n: usize, r: usize, seed: u64) -> Result<RectScene> {
    let lo = (2 * r).max(1);
    if n < 4 * r + 2 * lo {
        return Err(domain(format!(
            "side {n} too small for a wrap-free pair at r = {r}"
        )));
    }
    let hi = n - 2 * r;
    let mut s = Stream::new(seed, stream_id(Domain::Scene, 1));
    let draw = |s: &mut Stream| {
        let height = s.next_in(lo as u64, hi as u64) as usize;
        let width = s.next_in(lo as u64, hi as u64) as usize;
        let row = s.next_in(r as u64, (n - r - height) as u64) as usize;
        let col = s.next_in(r as u64, (n - r - width) as u64) as usize;
        Rect {
            row,
            col,
            height,
            width,
        }
    };
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let (a, b) = (draw(&mut s), draw(&mut s));
        if let Some((e, f)) = a.overlap(&b) {
            if e >= lo && f >= lo {
                return RectScene::new(n, vec![a, b]);
            }
        }
    }
    Err(domain("could not draw an overlapping rectangle pair"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageMode {
    Binary,
    Gray,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedImage {
    Binary(BinaryImage),
    /// Samples scaled to `[0, 1]`; one channel for graymaps, three for pixmaps.
    Gray(Tensor3),
}

/// Read a square netpbm image. Binary mode accepts graymaps only and
/// thresholds the scaled samples at `0.5`.
pub fn load_image(path: impl AsRef<Path>, mode: ImageMode) -> Result<LoadedImage> {
    let pnm = netpbm::read(path)?;
    if pnm.width != pnm.height {
        return Err(shape(format!(
            "images must be square, got {}×{}",
            pnm.height, pnm.width
        )));
    }
    let t = pnm.to_tensor();
    match mode {
        ImageMode::Gray => Ok(LoadedImage::Gray(t)),
        ImageMode::Binary => BinaryImage::from_tensor(&t).map(LoadedImage::Binary),
    }
}

/// Write a binary image as a P5 graymap with `maxval = 1`.
pub fn save_binary(path: impl AsRef<Path>, img: &BinaryImage) -> Result<()> {
    let pnm = netpbm::Pnm::gray_from_tensor(&img.to_tensor(), 1)?;
    netpbm::write_p5(path, &pnm)
}
