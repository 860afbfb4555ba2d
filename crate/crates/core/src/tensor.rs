//! Dense tensors on the discrete torus, cyclic patches and cyclic convolution.
//!
//! Storage order is fixed as (row, column, channel): entry `(i, j, k)` lives
//! at `(i * cols + j) * channels + k`. All spatial indexing wraps modulo the
//! image side, so every patch and every convolution output is defined at
//! every pixel.

use crate::activation::Activation;
use crate::error::{degenerate, shape, Error, Result};

/// A real `rows × cols × channels` tensor.
///
/// Images in this crate are usually square (`rows == cols == n`); the
/// rectangular form exists for flat vectors such as `1 × k × 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || channels == 0 {
            return Err(shape(format!(
                "tensor dimensions must be positive, got {rows}x{cols}x{channels}"
            )));
        }
        if data.len() != rows * cols * channels {
            return Err(shape(format!(
                "expected {} entries for a {rows}x{cols}x{channels} tensor, got {}",
                rows * cols * channels,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite tensor entry at flat index {pos}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            channels,
            data,
        })
    }

    /// Square `n × n × d` tensor.
    pub fn square(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(n, n, d, data)
    }

    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        assert!(
            rows > 0 && cols > 0 && channels > 0,
            "tensor dimensions must be positive"
        );
        Self {
            rows,
            cols,
            channels,
            data: vec![0.0; rows * cols * channels],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols * channels);
        for i in 0..rows {
            for j in 0..cols {
                for k in 0..channels {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::new(rows, cols, channels, data)
    }

    /// A `1 × k × 1` tensor holding a flat vector.
    pub fn flat(values: &[f64]) -> Result<Self> {
        Self::new(1, values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Side length of a square tensor.
    pub fn side(&self) -> Option<usize> {
        (self.rows == self.cols).then_some(self.rows)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.channels)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.cols + j) * self.channels + k]
    }

    /// Entry at a possibly out-of-range position, wrapped onto the torus.
    #[inline]
    pub fn get_wrapped(&self, i: isize, j: isize, k: usize) -> f64 {
        let i = i.rem_euclid(self.rows as isize) as usize;
        let j = j.rem_euclid(self.cols as isize) as usize;
        self.get(i, j, k)
    }

    /// The channel vector at pixel `(i, j)`.
    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.cols + j) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_same_shape(self, other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            data,
            ..self.clone()
        })
    }

    /// Stack `maps` along the channel axis (map `k` becomes channel `k`).
    pub fn stack_channels(maps: &[FeatureMap]) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| shape("cannot stack zero feature maps"))?;
        let (rows, cols) = (first.rows, first.cols);
        if maps.iter().any(|m| m.rows != rows || m.cols != cols) {
            return Err(shape("feature maps to stack must share spatial dimensions"));
        }
        let c = maps.len();
        let mut data = vec![0.0; rows * cols * c];
        for (k, m) in maps.iter().enumerate() {
            for (p, v) in m.values.iter().enumerate() {
                data[p * c + k] = *v;
            }
        }
        Ok(Self {
            rows,
            cols,
            channels: c,
            data,
        })
    }
}

fn check_same_shape(x: &Tensor3, y: &Tensor3) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(shape(format!(
            "tensor shapes differ: {:?} vs {:?}",
            x.dims(),
            y.dims()
        )));
    }
    Ok(())
}

/// Single-channel output of one filter, `rows × cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(shape(format!(
                "expected {} values for a {rows}x{cols} feature map, got {}",
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite feature map value".into()));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.cols + v]
    }

    pub fn dot(&self, other: &FeatureMap) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn sq_norm(&self) -> f64 {
        dot(&self.values, &self.values)
    }
}

/// A convolution kernel of side `r` with `d` channels, together with the
/// variance of the Gaussian it was (or is modelled as being) drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    r: usize,
    channels: usize,
    weights: Vec<f64>,
    variance: f64,
}

impl Filter {
    pub fn new(r: usize, channels: usize, weights: Vec<f64>, variance: f64) -> Result<Self> {
        if r == 0 || channels == 0 {
            return Err(shape("filter side and channel count must be positive"));
        }
        if weights.len() != r * r * channels {
            return Err(shape(format!(
                "expected {} weights for a {r}x{r}x{channels} filter, got {}",
                r * r * channels,
                weights.len()
            )));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::Domain(format!(
                "filter variance must be positive, got {variance}"
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("non-finite filter weight".into()));
        }
        Ok(Self {
            r,
            channels,
            weights,
            variance,
        })
    }

    pub fn side(&self) -> usize {
        self.r
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.weights[(i * self.r + j) * self.channels + k]
    }

    /// The filter with both spatial axes reversed.
    pub fn flipped(&self) -> Filter {
        let r = self.r;
        let mut weights = Vec::with_capacity(self.weights.len());
        for i in 0..r {
            for j in 0..r {
                for k in 0..self.channels {
                    weights.push(self.get(r - 1 - i, r - 1 - j, k));
                }
            }
        }
        Filter {
            weights,
            ..self.clone()
        }
    }

    /// The weights viewed as an `r × r × d` tensor.
    pub fn as_tensor(&self) -> Tensor3 {
        Tensor3 {
            rows: self.r,
            cols: self.r,
            channels: self.channels,
            data: self.weights.clone(),
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum with a fixed binary-tree shape, so the result depends only on the
/// order of `values` and never on how the caller produced them.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `⟨x, y⟩ = Σ x_ijk · y_ijk`.
pub fn inner_product(x: &Tensor3, y: &Tensor3) -> Result<f64> {
    check_same_shape(x, y)?;
    Ok(dot(&x.data, &y.data))
}

pub fn norm(x: &Tensor3) -> f64 {
    dot(&x.data, &x.data).sqrt()
}

/// Cosine similarity `⟨x, y⟩ / (‖x‖‖y‖)`, clamped into `[-1, 1]`.
pub fn cosine_similarity(x: &Tensor3, y: &Tensor3) -> Result<f64> {
    let xy = inner_product(x, y)?;
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(degenerate("cosine similarity of a zero-norm tensor"));
    }
    Ok((xy / (nx * ny)).clamp(-1.0, 1.0))
}

/// The `r × r × d` cyclic patch with top-left corner `(i, j)`, covering rows
/// `i..i+r` and columns `j..j+r` modulo the image size.
pub fn patch(x: &Tensor3, i: usize, j: usize, r: usize) -> Result<Tensor3> {
    if r == 0 || r > x.rows || r > x.cols {
        return Err(shape(format!(
            "patch side {r} does not fit a {}x{} image",
            x.rows, x.cols
        )));
    }
    if i >= x.rows || j >= x.cols {
        return Err(shape(format!("patch origin ({i}, {j}) outside the image")));
    }
    Ok(patch_unchecked(x, i as isize, j as isize, r))
}

/// The `(2r+1) × (2r+1) × d` cyclic patch centred on `(i, j)`.
pub fn patch_centered(x: &Tensor3, i: usize, j: usize, r: usize) -> Result<Tensor3> {
    let side = 2 * r + 1;
    if side > x.rows || side > x.cols {
        return Err(shape(format!(
            "centred patch of side {side} does not fit a {}x{} image",
            x.rows, x.cols
        )));
    }
    if i >= x.rows || j >= x.cols {
        return Err(shape(format!("patch centre ({i}, {j}) outside the image")));
    }
    Ok(patch_unchecked(
        x,
        i as isize - r as isize,
        j as isize - r as isize,
        side,
    ))
}

pub(crate) fn patch_unchecked(x: &Tensor3, i: isize, j: isize, r: usize) -> Tensor3 {
    let d = x.channels;
    let mut data = Vec::with_capacity(r * r * d);
    for a in 0..r as isize {
        let row = (i + a).rem_euclid(x.rows as isize) as usize;
        for b in 0..r as isize {
            let col = (j + b).rem_euclid(x.cols as isize) as usize;
            data.extend_from_slice(x.pixel(row, col));
        }
    }
    Tensor3 {
        rows: r,
        cols: r,
        channels: d,
        data,
    }
}

/// Cyclic convolution `(F∗x)_uv = Σ_{i,j∈Z_r, k∈Z_d} F_ijk · x_{u−i, v−j, k}`
/// with index subtraction modulo the image size.
pub fn cyclic_convolve(filter: &Filter, x: &Tensor3) -> Result<FeatureMap> {
    if filter.channels != x.channels {
        return Err(shape(format!(
            "filter has {} channels but input has {}",
            filter.channels, x.channels
        )));
    }
    let r = filter.r;
    if r > x.rows || r > x.cols {
        return Err(shape(format!(
            "filter side {r} exceeds input size {}x{}",
            x.rows, x.cols
        )));
    }
    let (rows, cols, d) = (x.rows, x.cols, x.channels);
    let mut out = vec![0.0; rows * cols];
    for u in 0..rows {
        for v in 0..cols {
            let mut acc = 0.0;
            for i in 0..r {
                let row = (u + rows - i) % rows;
                for j in 0..r {
                    let col = (v + cols - j) % cols;
                    let f = &filter.weights[(i * r + j) * d..(i * r + j + 1) * d];
                    acc += dot(f, x.pixel(row, col));
                }
            }
            out[u * cols + v] = acc;
        }
    }
    Ok(FeatureMap {
        rows,
        cols,
        values: out,
    })
}

/// Entrywise activation.
pub fn apply_activation(sigma: &Activation, z: &FeatureMap) -> FeatureMap {
    FeatureMap {
        rows: z.rows,
        cols: z.cols,
        values: z.values.iter().map(|&v| sigma.apply(v)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(n: usize, v: &[f64]) -> Tensor3 {
        Tensor3::square(n, 1, v.to_vec()).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let ones = mat(2, &[1.0; 4]);
        assert_eq!(inner_product(&ones, &ones).unwrap(), 4.0);
        let x = mat(2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(inner_product(&x, &Tensor3::zeros(2, 2, 1)).unwrap(), 0.0);
        assert_eq!(
            inner_product(&x, &mat(2, &[1.0, 0.0, 0.0, 1.0])).unwrap(),
            5.0
        );
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        let a = Tensor3::zeros(2, 2, 1);
        let b = Tensor3::zeros(2, 2, 2);
        assert!(matches!(inner_product(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&Tensor3::zeros(3, 3, 2)), 0.0);
        let mut one_hot = vec![0.0; 18];
        one_hot[7] = 1.0;
        assert_eq!(norm(&Tensor3::square(3, 2, one_hot).unwrap()), 1.0);
        assert_eq!(norm(&mat(2, &[1.0; 4])), 2.0);
    }

    #[test]
    fn cosine_examples() {
        let x = mat(2, &[1.0, -2.0, 0.5, 3.0]);
        assert_relative_eq!(cosine_similarity(&x, &x).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            cosine_similarity(&x, &x.scaled(-1.0)).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        let a = Tensor3::flat(&[1.0, 0.0]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = Tensor3::flat(&[s, s]).unwrap();
        assert_relative_eq!(cosine_similarity(&a, &b).unwrap(), s, epsilon = 1e-15);
        assert!(matches!(
            cosine_similarity(&a, &Tensor3::zeros(1, 2, 1)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn construction_validates() {
        assert!(Tensor3::square(2, 1, vec![0.0; 3]).is_err());
        assert!(Tensor3::square(1, 1, vec![f64::NAN]).is_err());
        assert!(Filter::new(2, 1, vec![0.0; 4], 0.0).is_err());
        assert!(Filter::new(2, 1, vec![0.0; 3], 1.0).is_err());
    }

    #[test]
    fn full_and_unit_patches() {
        let x = Tensor3::from_fn(3, 3, 2, |i, j, k| (i * 6 + j * 2 + k) as f64).unwrap();
        let full = patch(&x, 0, 0, 3).unwrap();
        assert_eq!(full, x);
        let p = patch(&x, 1, 2, 1).unwrap();
        assert_eq!(p.as_slice(), x.pixel(1, 2));
        assert!(patch(&x, 0, 0, 4).is_err());
    }

    #[test]
    fn patch_wraps_rows_and_columns() {
        // n = 3, r = 2 at (2, 2) covers rows {2, 0} and columns {2, 0}.
        let x = mat(3, &[0., 1., 2., 3., 4., 5., 6., 7., 8.]);
        let p = patch(&x, 2, 2, 2).unwrap();
        assert_eq!(p.as_slice(), &[8., 6., 2., 0.]);
    }

    #[test]
    fn centered_patch_wraps() {
        let x = Tensor3::from_fn(5, 5, 1, |i, j, _| (10 * i + j) as f64).unwrap();
        let p = patch_centered(&x, 0, 0, 1).unwrap();
        // rows {4, 0, 1}, cols {4, 0, 1}
        assert_eq!(p.as_slice(), &[44., 40., 41., 4., 0., 1., 14., 10., 11.]);
        assert_eq!(patch_centered(&x, 3, 2, 0).unwrap().as_slice(), &[32.]);
        let c = Tensor3::square(5, 1, vec![2.5; 25]).unwrap();
        assert!(patch_centered(&c, 1, 4, 2)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 2.5));
        assert!(patch_centered(&x, 0, 0, 3).is_err());
    }

    #[test]
    fn convolution_examples() {
        let x = mat(2, &[1., 2., 3., 4.]);
        let id = Filter::new(1, 1, vec![1.0], 1.0).unwrap();
        assert_eq!(cyclic_convolve(&id, &x).unwrap().values(), x.as_slice());

        let f = Filter::new(2, 1, vec![0.3, -1.0, 2.0, 0.5], 1.0).unwrap();
        let z = cyclic_convolve(&f, &Tensor3::zeros(2, 2, 1)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));

        // one-hot at (i, j) = (1, 0) shifts rows: out_uv = x_{u-1, v}
        let shift = Filter::new(2, 1, vec![0., 0., 1., 0.], 1.0).unwrap();
        assert_eq!(
            cyclic_convolve(&shift, &x).unwrap().values(),
            &[3., 4., 1., 2.]
        );

        let two = Filter::new(1, 2, vec![1.0, 1.0], 1.0).unwrap();
        assert!(matches!(cyclic_convolve(&two, &x), Err(Error::Shape(_))));
    }

    #[test]
    fn activation_examples() {
        let z = FeatureMap::new(2, 2, vec![-1., 2., 0., 3.]).unwrap();
        assert_eq!(apply_activation(&Activation::Identity, &z), z);
        assert_eq!(
            apply_activation(&Activation::Relu, &z).values(),
            &[0., 2., 0., 3.]
        );
        let neg = FeatureMap::new(1, 3, vec![-1., -0.5, -7.]).unwrap();
        assert!(apply_activation(&Activation::Relu, &neg)
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn stack_channels_interleaves() {
        let a = FeatureMap::new(1, 2, vec![1., 2.]).unwrap();
        let b = FeatureMap::new(1, 2, vec![3., 4.]).unwrap();
        let t = Tensor3::stack_channels(&[a, b]).unwrap();
        assert_eq!(t.dims(), (1, 2, 2));
        assert_eq!(t.as_slice(), &[1., 3., 2., 4.]);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
