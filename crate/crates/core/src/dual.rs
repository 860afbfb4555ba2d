//! Dual activations.
//!
//! For an activation `σ` and a pair of inputs `u, v`, the dual is
//! `σ̂(u, v, ν) = E[σ(νX)σ(νY)]` where `(X, Y)` is a centred Gaussian pair
//! with covariance `[[‖u‖², ⟨u,v⟩], [⟨u,v⟩, ‖v‖²]]`. Homogeneous activations
//! additionally have the scalar form `σ̂(ρ) = E[σ(X)σ(Y)] / ν²_σ` over a
//! standard pair with correlation `ρ`, normalised by `ν²_σ = E[σ(X)²]`.
//!
//! Evaluation strategy:
//! * identity: exact, `ν²⟨u,v⟩`;
//! * ReLU: the arc-cosine closed form [`relu_dual`];
//! * other homogeneous activations: the expectation reduces to an angular
//!   integral which is smooth between the four kink angles, integrated by
//!   Gauss–Legendre on each arc;
//! * everything else: tensorised Gauss–Hermite over the Cholesky-whitened
//!   pair, with the rank-deficient cases done in one dimension.

use std::f64::consts::{PI, TAU};

use crate::activation::Activation;
use crate::error::{degenerate, domain, Error, Result};
use crate::quadrature::{legendre_unit_cached, normal_expectation, normal_expectation_2d};
use crate::tensor::{inner_product, Tensor3};

/// Inputs whose correlation lands this far outside `[-1, 1]` are clamped.
pub const CORRELATION_CLAMP: f64 = 1e-12;

/// Default Hermite node count per axis; error estimates use twice this.
pub const DEFAULT_HERMITE_NODES: usize = 64;

const ARC_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEvaluation {
    pub value: f64,
    pub method: DualMethod,
    /// Zero for closed forms; `|Q(n) − Q(2n)|` for quadrature.
    pub est_error: f64,
}

impl DualEvaluation {
    fn exact(value: f64) -> Self {
        Self {
            value,
            method: DualMethod::ClosedForm,
            est_error: 0.0,
        }
    }
}

pub(crate) fn clamp_correlation(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() > 1.0 + CORRELATION_CLAMP {
        return Err(domain(format!("correlation {rho} outside [-1, 1]")));
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// `R̂(ρ) = (√(1−ρ²) + (π − arccos ρ)·ρ) / π`, the normalised ReLU dual.
pub fn relu_dual(rho: f64) -> Result<f64> {
    let rho = clamp_correlation(rho)?;
    Ok(relu_dual_unchecked(rho))
}

#[inline]
pub(crate) fn relu_dual_unchecked(rho: f64) -> f64 {
    ((1.0 - rho * rho).sqrt() + (PI - rho.acos()) * rho) / PI
}

/// `ν²_σ = E[σ(X)²]` for a standard normal `X`.
pub fn nu_sigma_sq(sigma: &Activation) -> Result<f64> {
    match sigma {
        Activation::Identity => Ok(1.0),
        Activation::Relu => Ok(0.5),
        Activation::Custom(_) if sigma.is_homogeneous() => {
            // An even node count puts no node at the kink, and σ(x)² is
            // c·x² on each half-line, so the rule is exact here.
            Ok(normal_expectation(DEFAULT_HERMITE_NODES, |z| {
                sigma.apply(z).powi(2)
            }))
        }
        Activation::Custom(_) => Err(Error::Contract(format!(
            "ν²_σ is only defined for homogeneous activations; {} is not",
            sigma.name()
        ))),
    }
}

/// `σ̂(ρ)` for a homogeneous activation.
pub fn homogeneous_dual(sigma: &Activation, rho: f64) -> Result<f64> {
    let rho = clamp_correlation(rho)?;
    match sigma {
        Activation::Identity => Ok(rho),
        Activation::Relu => Ok(relu_dual_unchecked(rho)),
        Activation::Custom(_) => homogeneous_dual_quadrature(sigma, rho).map(|e| e.value),
    }
}

/// `σ̂(ρ)` through the angular quadrature, regardless of whether a closed
/// form exists.
pub fn homogeneous_dual_quadrature(sigma: &Activation, rho: f64) -> Result<DualEvaluation> {
    let (pos, neg) = sigma
        .half_line_gains()
        .ok_or_else(|| Error::Contract(format!("{} is not homogeneous", sigma.name())))?;
    let rho = clamp_correlation(rho)?;
    let norm = 0.5 * (pos * pos + neg * neg);
    if norm == 0.0 {
        return Err(degenerate(format!(
            "activation {} vanishes identically",
            sigma.name()
        )));
    }
    let coarse = standard_pair_moment(sigma, rho, ARC_NODES);
    let fine = standard_pair_moment(sigma, rho, 2 * ARC_NODES);
    Ok(DualEvaluation {
        value: fine / norm,
        method: DualMethod::Quadrature,
        est_error: (fine - coarse).abs() / norm,
    })
}

/// `E[σ(X)σ(Y)]` for a standard pair with correlation `ρ`, `σ` homogeneous.
///
/// In polar coordinates the radial part integrates to `E[R²] = 2`, leaving
/// `(1/π)∫₀^{2π} σ(cos θ)σ(cos(θ − φ)) dθ` with `φ = arccos ρ`. The
/// integrand is a trigonometric polynomial between the kinks at
/// `θ ∈ {π/2, 3π/2, φ + π/2, φ + 3π/2}`.
fn standard_pair_moment(sigma: &Activation, rho: f64, nodes: usize) -> f64 {
    let phi = rho.acos();
    let mut cuts = vec![
        0.0,
        PI / 2.0,
        3.0 * PI / 2.0,
        (phi + PI / 2.0).rem_euclid(TAU),
        (phi + 3.0 * PI / 2.0).rem_euclid(TAU),
        TAU,
    ];
    cuts.sort_by(f64::total_cmp);
    let unit = legendre_unit_cached(nodes);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let arc: f64 = unit
            .nodes
            .iter()
            .zip(&unit.weights)
            .map(|(t, wt)| {
                let th = mid + half * t;
                wt * sigma.apply(th.cos()) * sigma.apply((th - phi).cos())
            })
            .sum();
        total += half * arc;
    }
    total / PI
}

/// `σ̂(u, v, ν) = E[σ(νX)σ(νY)]`.
pub fn dual_general(
    u: &Tensor3,
    v: &Tensor3,
    nu: f64,
    sigma: &Activation,
) -> Result<DualEvaluation> {
    let c = inner_product(u, v)?;
    let a = inner_product(u, u)?;
    let b = inner_product(v, v)?;
    dual_from_moments(a, b, c, nu, sigma)
}

/// [`dual_general`] from the second moments `‖u‖²`, `‖v‖²`, `⟨u,v⟩`.
pub fn dual_from_moments(
    sq_u: f64,
    sq_v: f64,
    cross: f64,
    nu: f64,
    sigma: &Activation,
) -> Result<DualEvaluation> {
    dual_from_moments_with(sq_u, sq_v, cross, nu, sigma, DEFAULT_HERMITE_NODES)
}

/// [`dual_from_moments`] with an explicit Hermite node count for the
/// general (non-homogeneous) path.
pub fn dual_from_moments_with(
    sq_u: f64,
    sq_v: f64,
    cross: f64,
    nu: f64,
    sigma: &Activation,
    nodes: usize,
) -> Result<DualEvaluation> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(domain(format!("ν must be positive and finite, got {nu}")));
    }
    if !(sq_u.is_finite() && sq_v.is_finite() && cross.is_finite()) || sq_u < 0.0 || sq_v < 0.0 {
        return Err(domain("non-finite or invalid covariance"));
    }
    let nu2 = nu * nu;
    if let Activation::Identity = sigma {
        return Ok(DualEvaluation::exact(nu2 * cross));
    }
    if sigma.is_homogeneous() {
        if sq_u == 0.0 || sq_v == 0.0 {
            return Ok(DualEvaluation::exact(0.0));
        }
        let (nx, ny) = (sq_u.sqrt(), sq_v.sqrt());
        let rho = (cross / (nx * ny)).clamp(-1.0, 1.0);
        let scale = nu2 * nx * ny;
        return match sigma {
            Activation::Relu => Ok(DualEvaluation::exact(
                scale * 0.5 * relu_dual_unchecked(rho),
            )),
            _ => {
                let norm = nu_sigma_sq(sigma)?;
                let e = homogeneous_dual_quadrature(sigma, rho)?;
                Ok(DualEvaluation {
                    value: scale * norm * e.value,
                    method: DualMethod::Quadrature,
                    est_error: scale * norm * e.est_error,
                })
            }
        };
    }
    let coarse = general_moment(sq_u, sq_v, cross, nu, sigma, nodes);
    let fine = general_moment(sq_u, sq_v, cross, nu, sigma, 2 * nodes);
    Ok(DualEvaluation {
        value: coarse,
        method: DualMethod::Quadrature,
        est_error: (fine - coarse).abs(),
    })
}

fn general_moment(
    sq_u: f64,
    sq_v: f64,
    cross: f64,
    nu: f64,
    sigma: &Activation,
    nodes: usize,
) -> f64 {
    let s0 = sigma.value_at_zero();
    match (sq_u == 0.0, sq_v == 0.0) {
        (true, true) => return s0 * s0,
        (true, false) => {
            let sv = nu * sq_v.sqrt();
            return s0 * normal_expectation(nodes, |z| sigma.apply(sv * z));
        }
        (false, true) => {
            let su = nu * sq_u.sqrt();
            return s0 * normal_expectation(nodes, |z| sigma.apply(su * z));
        }
        _ => {}
    }
    let su = sq_u.sqrt();
    // Cholesky: X = su·Z₁, Y = l21·Z₁ + l22·Z₂.
    let l21 = cross / su;
    let resid = sq_v - l21 * l21;
    if resid <= CORRELATION_CLAMP * sq_v {
        return normal_expectation(nodes, |z| {
            sigma.apply(nu * su * z) * sigma.apply(nu * l21 * z)
        });
    }
    let l22 = resid.sqrt();
    normal_expectation_2d(nodes, |z1, z2| {
        sigma.apply(nu * su * z1) * sigma.apply(nu * (l21 * z1 + l22 * z2))
    })
}

/// `(ρ₀, R̂(ρ₀), R̂(R̂(ρ₀)), …)` of length `depth + 1`.
pub fn iterate_relu_dual(rho0: f64, depth: usize) -> Result<Vec<f64>> {
    let mut rho = clamp_correlation(rho0)?;
    let mut out = Vec::with_capacity(depth + 1);
    out.push(rho);
    for _ in 0..depth {
        rho = relu_dual_unchecked(rho);
        out.push(rho);
    }
    Ok(out)
}
