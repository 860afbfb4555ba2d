//! Exact expectations under one random convolutional layer.
//!
//! For a filter with i.i.d. `N(0, ν²)` entries the expected output inner
//! product is a sum over pixels of the dual activation evaluated on the two
//! inputs' cyclic patches at that pixel. Everything in this module is
//! deterministic; sampling lives in [`crate::simulate`].

use rayon::prelude::*;

use crate::activation::Activation;
use crate::dual::{dual_from_moments, homogeneous_dual, nu_sigma_sq, DualMethod};
use crate::error::{degenerate, domain, shape, Error, Result};
use crate::tensor::{dot, inner_product, norm, pairwise_sum, Tensor3};

/// Which patch is attached to pixel `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PatchGeometry {
    /// Rows `i..i+r`, columns `j..j+r`.
    #[default]
    Standard,
    /// Rows `i−h..=i+h`, columns `j−h..=j+h` for a side `r = 2h+1`.
    Centered,
}

/// One random convolutional layer: filter side, entry variance `ν²`,
/// activation and patch convention.
#[derive(Debug, Clone)]
pub struct LayerSpec {
    side: usize,
    variance: f64,
    activation: Activation,
    geometry: PatchGeometry,
}

impl LayerSpec {
    pub fn new(
        side: usize,
        variance: f64,
        activation: Activation,
        geometry: PatchGeometry,
    ) -> Result<Self> {
        if side == 0 {
            return Err(shape("filter side must be at least 1"));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(domain(format!(
                "filter variance must be positive, got {variance}"
            )));
        }
        if geometry == PatchGeometry::Centered && side % 2 == 0 {
            return Err(shape(format!(
                "centred geometry needs an odd filter side, got {side}"
            )));
        }
        Ok(Self {
            side,
            variance,
            activation,
            geometry,
        })
    }

    /// The variance `1/(ν²_σ r²)` that preserves squared norms in expectation
    /// (`2/r²` for ReLU, `1/r²` for the identity).
    pub fn normalizing(
        side: usize,
        activation: Activation,
        geometry: PatchGeometry,
    ) -> Result<Self> {
        let ns = nu_sigma_sq(&activation)?;
        if ns == 0.0 {
            return Err(degenerate("activation has ν²_σ = 0"));
        }
        let r = side as f64;
        Self::new(side, 1.0 / (ns * r * r), activation, geometry)
    }

    /// The black-and-white image model: ReLU, side `2h+1`, centred patches,
    /// variance `2/(2h+1)²`.
    pub fn boundary_model(half: usize) -> Self {
        let side = 2 * half + 1;
        Self::new(
            side,
            2.0 / (side * side) as f64,
            Activation::Relu,
            PatchGeometry::Centered,
        )
        .expect("boundary model parameters are valid")
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn nu(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn geometry(&self) -> PatchGeometry {
        self.geometry
    }

    pub fn with_variance(&self, variance: f64) -> Result<Self> {
        Self::new(self.side, variance, self.activation.clone(), self.geometry)
    }

    fn origin_offset(&self) -> isize {
        match self.geometry {
            PatchGeometry::Standard => 0,
            PatchGeometry::Centered => (self.side / 2) as isize,
        }
    }
}

/// `(‖p‖², ‖q‖², ⟨p,q⟩)` for the patches `p`, `q` of `x`, `y` at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchMoments {
    pub sq_x: f64,
    pub sq_y: f64,
    pub cross: f64,
}

impl PatchMoments {
    pub fn correlation(&self) -> Option<f64> {
        (self.sq_x > 0.0 && self.sq_y > 0.0)
            .then(|| (self.cross / (self.sq_x.sqrt() * self.sq_y.sqrt())).clamp(-1.0, 1.0))
    }
}

fn check_layer_fits(x: &Tensor3, spec: &LayerSpec) -> Result<()> {
    if spec.side > x.rows() || spec.side > x.cols() {
        return Err(shape(format!(
            "filter side {} exceeds input size {}x{}",
            spec.side,
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

/// Patch moments at every pixel, row-major.
pub fn patch_moments(x: &Tensor3, y: &Tensor3, spec: &LayerSpec) -> Result<Vec<PatchMoments>> {
    if x.dims() != y.dims() {
        return Err(shape(format!(
            "tensor shapes differ: {:?} vs {:?}",
            x.dims(),
            y.dims()
        )));
    }
    check_layer_fits(x, spec)?;
    let (rows, cols, _) = x.dims();
    let (r, off) = (spec.side as isize, spec.origin_offset());
    let moments = (0..rows)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..cols).map(move |j| {
                let mut m = PatchMoments {
                    sq_x: 0.0,
                    sq_y: 0.0,
                    cross: 0.0,
                };
                for a in 0..r {
                    let row = (i as isize - off + a).rem_euclid(rows as isize) as usize;
                    for b in 0..r {
                        let col = (j as isize - off + b).rem_euclid(cols as isize) as usize;
                        let (px, py) = (x.pixel(row, col), y.pixel(row, col));
                        m.sq_x += dot(px, px);
                        m.sq_y += dot(py, py);
                        m.cross += dot(px, py);
                    }
                }
                m
            })
        })
        .collect();
    Ok(moments)
}

/// An expectation together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub method: DualMethod,
    /// Sum of the per-pixel quadrature error estimates (0 when exact).
    pub est_error: f64,
}

/// `E⟨σ(F∗x), σ(F∗y)⟩ = Σ_ij σ̂([x]_ij, [y]_ij, ν)`.
pub fn expected_inner(x: &Tensor3, y: &Tensor3, spec: &LayerSpec) -> Result<f64> {
    expected_inner_detailed(x, y, spec).map(|e| e.value)
}

pub fn expected_inner_detailed(x: &Tensor3, y: &Tensor3, spec: &LayerSpec) -> Result<Expectation> {
    let moments = patch_moments(x, y, spec)?;
    let nu = spec.nu();
    let sigma = &spec.activation;
    if sigma.is_homogeneous() {
        // ν²ν²_σ Σ ‖p‖‖q‖ σ̂(ρ_ij); zero-norm patches contribute nothing.
        let scale = spec.variance * nu_sigma_sq(sigma)?;
        let terms = moments
            .iter()
            .map(|m| match m.correlation() {
                Some(rho) => Ok(m.sq_x.sqrt() * m.sq_y.sqrt() * homogeneous_dual(sigma, rho)?),
                None => Ok(0.0),
            })
            .collect::<Result<Vec<_>>>()?;
        let method = match sigma {
            Activation::Custom(_) => DualMethod::Quadrature,
            _ => DualMethod::ClosedForm,
        };
        return Ok(Expectation {
            value: scale * pairwise_sum(&terms),
            method,
            est_error: 0.0,
        });
    }
    let evals = moments
        .par_iter()
        .map(|m| dual_from_moments(m.sq_x, m.sq_y, m.cross, nu, sigma))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = evals.iter().map(|e| e.value).collect();
    let errors: Vec<f64> = evals.iter().map(|e| e.est_error).collect();
    Ok(Expectation {
        value: pairwise_sum(&values),
        method: DualMethod::Quadrature,
        est_error: pairwise_sum(&errors),
    })
}

/// Expected squared output norm; closed form `ν²ν²_σ r²‖x‖²` for homogeneous
/// activations, otherwise `expected_inner(x, x)` by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedSqNorm {
    pub value: f64,
    pub closed_form: bool,
}

pub fn expected_sq_norm(x: &Tensor3, spec: &LayerSpec) -> Result<ExpectedSqNorm> {
    check_layer_fits(x, spec)?;
    if spec.activation.is_homogeneous() {
        let r = spec.side as f64;
        let sq = inner_product(x, x)?;
        return Ok(ExpectedSqNorm {
            value: spec.variance * nu_sigma_sq(&spec.activation)? * r * r * sq,
            closed_form: true,
        });
    }
    Ok(ExpectedSqNorm {
        value: expected_inner(x, x, spec)?,
        closed_form: false,
    })
}

fn require_homogeneous(sigma: &Activation) -> Result<()> {
    if !sigma.is_homogeneous() {
        return Err(Error::Contract(format!(
            "{} is not homogeneous",
            sigma.name()
        )));
    }
    Ok(())
}

/// Mean output similarity `ρ̄_out = Σ ‖p‖‖q‖σ̂(ρ_ij) / (r²‖x‖‖y‖)`.
///
/// Independent of `ν` and of positive rescaling of either input.
pub fn mean_similarity(x: &Tensor3, y: &Tensor3, spec: &LayerSpec) -> Result<f64> {
    require_homogeneous(&spec.activation)?;
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(degenerate("mean similarity of a zero-norm input"));
    }
    let moments = patch_moments(x, y, spec)?;
    let terms = moments
        .iter()
        .map(|m| match m.correlation() {
            Some(rho) => {
                Ok(m.sq_x.sqrt() * m.sq_y.sqrt() * homogeneous_dual(&spec.activation, rho)?)
            }
            None => Ok(0.0),
        })
        .collect::<Result<Vec<_>>>()?;
    let r = spec.side as f64;
    Ok((pairwise_sum(&terms) / (r * r * nx * ny)).clamp(-1.0, 1.0))
}

/// ReLU contraction bounds under the normalising variance `2/r²`:
/// `max{⟨x,y⟩, 0} ≤ E⟨ReLU(F∗x), ReLU(F∗y)⟩ ≤ ‖x‖‖y‖(1+ρ)/2`.
pub fn relu_bounds(x: &Tensor3, y: &Tensor3) -> Result<(f64, f64)> {
    let xy = inner_product(x, y)?;
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(degenerate("bounds need nonzero inputs"));
    }
    let upper = 0.5 * (nx * ny + xy);
    Ok((xy.max(0.0), upper.max(xy.max(0.0))))
}

/// Exact expectation, mean similarity and (for ReLU) bounds for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryReport {
    pub exact_inner: f64,
    pub exact_sq_norm_x: f64,
    pub exact_sq_norm_y: f64,
    pub mean_similarity: f64,
    /// The contraction bounds rescaled to the spec's variance
    /// (`κ = ν²r²/2` times the normalised bounds). `None` unless ReLU.
    pub bounds: Option<(f64, f64)>,
}

pub fn geometry_report(x: &Tensor3, y: &Tensor3, spec: &LayerSpec) -> Result<GeometryReport> {
    let exact_inner = expected_inner(x, y, spec)?;
    let exact_sq_norm_x = expected_sq_norm(x, spec)?.value;
    let exact_sq_norm_y = expected_sq_norm(y, spec)?.value;
    let mean_similarity = if spec.activation.is_homogeneous() {
        mean_similarity(x, y, spec)?
    } else {
        (exact_inner / (exact_sq_norm_x * exact_sq_norm_y).sqrt()).clamp(-1.0, 1.0)
    };
    let bounds = match spec.activation {
        Activation::Relu => {
            let r = spec.side as f64;
            let kappa = spec.variance * r * r / 2.0;
            let (lo, hi) = relu_bounds(x, y)?;
            Some((kappa * lo, kappa * hi))
        }
        _ => None,
    };
    Ok(GeometryReport {
        exact_inner,
        exact_sq_norm_x,
        exact_sq_norm_y,
        mean_similarity,
        bounds,
    })
}

/// Which concentration statement a sample-size bound refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComplexityMode {
    /// Averaged output inner product; `K = Dν²L²R²n²/ε`, log factor `2n²/δ`.
    InnerProduct { nu: f64 },
    /// Output cosine similarity for a homogeneous activation;
    /// `K = DL²R²n²/(εν²_σ r²)`, log factor `6n²/δ`, `ε ≤ 1/10`. Here `R`
    /// bounds the patch norm relative to the full norm.
    Similarity { nu_sigma_sq: f64, side: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleComplexity {
    pub k: f64,
    /// Smallest integer `N > max(K, K²)·log(c·n²/δ)`.
    pub n_min: u64,
    pub constant_d: f64,
    pub epsilon: f64,
    pub delta: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(domain(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// Number of filters sufficient for an `(ε, δ)` concentration guarantee.
#[allow(clippy::too_many_arguments)]
pub fn sample_complexity(
    n: usize,
    radius: f64,
    lipschitz: f64,
    epsilon: f64,
    delta: f64,
    constant_d: f64,
    mode: ComplexityMode,
) -> Result<SampleComplexity> {
    if n == 0 {
        return Err(domain("image side must be positive"));
    }
    positive("R", radius)?;
    positive("L", lipschitz)?;
    positive("ε", epsilon)?;
    positive("δ", delta)?;
    positive("D", constant_d)?;
    let nf = n as f64;
    let base = constant_d * lipschitz * lipschitz * radius * radius * nf * nf / epsilon;
    let (k, log_arg) = match mode {
        ComplexityMode::InnerProduct { nu } => {
            positive("ν", nu)?;
            (base * nu * nu, 2.0 * nf * nf / delta)
        }
        ComplexityMode::Similarity { nu_sigma_sq, side } => {
            positive("ν²_σ", nu_sigma_sq)?;
            if side == 0 {
                return Err(domain("filter side must be positive"));
            }
            if epsilon > 0.1 {
                return Err(domain(format!(
                    "similarity bound needs ε ≤ 1/10, got {epsilon}"
                )));
            }
            let r = side as f64;
            (base / (nu_sigma_sq * r * r), 6.0 * nf * nf / delta)
        }
    };
    let threshold = k.max(k * k) * log_arg.ln();
    let n_min = if threshold < 0.0 {
        1.0
    } else {
        threshold.floor() + 1.0
    };
    if !n_min.is_finite() || n_min >= u64::MAX as f64 {
        return Err(domain(format!(
            "sample complexity {threshold:e} overflows u64"
        )));
    }
    Ok(SampleComplexity {
        k,
        n_min: n_min as u64,
        constant_d,
        epsilon,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn relu(side: usize) -> LayerSpec {
        LayerSpec::normalizing(side, Activation::Relu, PatchGeometry::Standard).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(LayerSpec::new(0, 1.0, Activation::Relu, PatchGeometry::Standard).is_err());
        assert!(LayerSpec::new(3, 0.0, Activation::Relu, PatchGeometry::Standard).is_err());
        assert!(LayerSpec::new(2, 1.0, Activation::Relu, PatchGeometry::Centered).is_err());
        assert_abs_diff_eq!(relu(3).variance(), 2.0 / 9.0, epsilon = 1e-16);
        let lin = LayerSpec::normalizing(4, Activation::Identity, PatchGeometry::Standard).unwrap();
        assert_abs_diff_eq!(lin.variance(), 1.0 / 16.0, epsilon = 1e-16);
    }

    #[test]
    fn linear_layer_preserves_inner_product() {
        let x =
            Tensor3::from_fn(4, 4, 2, |i, j, k| ((i * 7 + j * 3 + k) % 5) as f64 - 2.0).unwrap();
        let y =
            Tensor3::from_fn(4, 4, 2, |i, j, k| ((i + 2 * j + 3 * k) % 4) as f64 - 1.5).unwrap();
        let spec =
            LayerSpec::normalizing(3, Activation::Identity, PatchGeometry::Standard).unwrap();
        let e = expected_inner(&x, &y, &spec).unwrap();
        assert_abs_diff_eq!(e, inner_product(&x, &y).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn relu_norm_preserved() {
        let x = Tensor3::flat(&[0.6, 0.0, 0.8]).unwrap();
        assert_abs_diff_eq!(
            expected_inner(&x, &x, &relu(1)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let n = expected_sq_norm(&x, &relu(1)).unwrap();
        assert!(n.closed_form);
        assert_abs_diff_eq!(n.value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sq_norm_example_unnormalized() {
        // ν = 1, r = 3, ‖x‖² = 4: 1 · ½ · 9 · 4 = 18
        let x = Tensor3::from_fn(4, 4, 1, |i, j, _| if i == j { 1.0 } else { 0.0 }).unwrap();
        let spec = LayerSpec::new(3, 1.0, Activation::Relu, PatchGeometry::Standard).unwrap();
        assert_abs_diff_eq!(
            expected_sq_norm(&x, &spec).unwrap().value,
            18.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            expected_inner(&x, &x, &spec).unwrap(),
            18.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sq_norm_falls_back_for_tanh() {
        let x = Tensor3::flat(&[0.3, -0.2, 0.5]).unwrap();
        let spec = LayerSpec::new(1, 1.0, Activation::tanh(), PatchGeometry::Standard).unwrap();
        let n = expected_sq_norm(&x, &spec).unwrap();
        assert!(!n.closed_form);
        assert!(n.value > 0.0);
    }

    #[test]
    fn upper_witness_hits_upper_bound() {
        let rho: f64 = 0.4;
        let a = ((1.0 + rho) / 2.0).sqrt();
        let b = ((1.0 - rho) / 2.0).sqrt();
        let x = Tensor3::flat(&[a, b]).unwrap();
        let y = Tensor3::flat(&[a, -b]).unwrap();
        assert_abs_diff_eq!(
            expected_inner(&x, &y, &relu(1)).unwrap(),
            0.7,
            epsilon = 1e-15
        );
    }

    #[test]
    fn mean_similarity_examples() {
        let x = Tensor3::from_fn(5, 5, 2, |i, j, k| ((3 * i + j + k) % 4) as f64 - 1.0).unwrap();
        let y =
            Tensor3::from_fn(5, 5, 2, |i, j, k| ((i + 2 * j + 5 * k) % 3) as f64 - 0.8).unwrap();
        let lin = LayerSpec::normalizing(2, Activation::Identity, PatchGeometry::Standard).unwrap();
        assert_abs_diff_eq!(
            mean_similarity(&x, &y, &lin).unwrap(),
            crate::tensor::cosine_similarity(&x, &y).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            mean_similarity(&x, &x, &relu(3)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            mean_similarity(&x, &Tensor3::zeros(5, 5, 2), &relu(3)),
            Err(Error::Degenerate(_))
        ));
        let tanh = LayerSpec::new(2, 1.0, Activation::tanh(), PatchGeometry::Standard).unwrap();
        assert!(matches!(
            mean_similarity(&x, &y, &tanh),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn relu_bounds_examples() {
        let x = Tensor3::flat(&[1.0, 0.0]).unwrap();
        let y = Tensor3::flat(&[0.0, 1.0]).unwrap();
        assert_eq!(relu_bounds(&x, &x).unwrap(), (1.0, 1.0));
        assert_eq!(relu_bounds(&x, &y).unwrap(), (0.0, 0.5));
        let rho: f64 = 0.36;
        let zx = Tensor3::flat(&[(1.0 - rho).sqrt(), rho.sqrt(), 0.0]).unwrap();
        let zy = Tensor3::flat(&[0.0, -rho.sqrt(), (1.0 - rho).sqrt()]).unwrap();
        assert_eq!(relu_bounds(&zx, &zy).unwrap().0, 0.0);
        assert_abs_diff_eq!(
            expected_inner(&zx, &zy, &relu(1)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(relu_bounds(&x, &Tensor3::zeros(1, 2, 1)).is_err());
    }

    #[test]
    fn report_scales_bounds_with_variance() {
        let x = Tensor3::flat(&[0.6, 0.8]).unwrap();
        let y = Tensor3::flat(&[0.8, -0.6]).unwrap();
        let spec = LayerSpec::new(1, 4.0, Activation::Relu, PatchGeometry::Standard).unwrap();
        let rep = geometry_report(&x, &y, &spec).unwrap();
        let (lo, hi) = rep.bounds.unwrap();
        assert!(lo <= rep.exact_inner && rep.exact_inner <= hi);
        assert_abs_diff_eq!(rep.exact_sq_norm_x, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn red_green_is_far_from_isometric() {
        let n = 6;
        let red =
            Tensor3::from_fn(n, n, 3, |_, _, k| if k == 0 { 1.0 / n as f64 } else { 0.0 }).unwrap();
        let green =
            Tensor3::from_fn(n, n, 3, |_, _, k| if k == 1 { 1.0 / n as f64 } else { 0.0 }).unwrap();
        let s = mean_similarity(&red, &green, &relu(3)).unwrap();
        assert_abs_diff_eq!(s, 1.0 / PI, epsilon = 1e-12);
    }

    #[test]
    fn sample_complexity_examples() {
        // K = 1, n = 1, log(2/δ) = 1 → N > 1 → N_min = 2
        let delta = 2.0 / std::f64::consts::E;
        let sc = sample_complexity(
            1,
            1.0,
            1.0,
            1.0,
            delta,
            1.0,
            ComplexityMode::InnerProduct { nu: 1.0 },
        )
        .unwrap();
        assert_abs_diff_eq!(sc.k, 1.0, epsilon = 1e-15);
        assert_eq!(sc.n_min, 2);

        let run = |eps| {
            sample_complexity(
                8,
                1.0,
                1.0,
                eps,
                0.01,
                1.0,
                ComplexityMode::InnerProduct { nu: 1.0 },
            )
            .unwrap()
            .k
        };
        assert_abs_diff_eq!(run(0.5) / run(1.0), 2.0, epsilon = 1e-12);

        // ±1 inputs: R = r/n relative, K = DL²/(εν²_σ) for any n and side
        for (n, side) in [(8usize, 3usize), (32, 5)] {
            let sc = sample_complexity(
                n,
                side as f64 / n as f64,
                1.0,
                0.1,
                0.05,
                1.0,
                ComplexityMode::Similarity {
                    nu_sigma_sq: 0.5,
                    side,
                },
            )
            .unwrap();
            assert_abs_diff_eq!(sc.k, 1.0 / (0.1 * 0.5), epsilon = 1e-9);
        }
        assert!(sample_complexity(
            8,
            1.0,
            1.0,
            0.2,
            0.05,
            1.0,
            ComplexityMode::Similarity {
                nu_sigma_sq: 0.5,
                side: 3
            }
        )
        .is_err());
        assert!(sample_complexity(
            8,
            -1.0,
            1.0,
            0.1,
            0.05,
            1.0,
            ComplexityMode::InnerProduct { nu: 1.0 }
        )
        .is_err());
    }
}
