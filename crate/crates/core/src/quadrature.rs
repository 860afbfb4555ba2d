//! Gauss–Hermite and Gauss–Legendre rules, computed by Newton iteration on
//! the three-term recurrences.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of an `n`-point quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const NEWTON_EPS: f64 = 3e-14;
const NEWTON_MAXIT: usize = 100;

/// Gauss–Hermite rule for the weight `exp(-x²)` on the real line.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1, "quadrature needs at least one node");
    // π^{-1/4}
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..NEWTON_MAXIT {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Rule {
        nodes: x,
        weights: w,
    }
}

/// Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
    let unit = gauss_legendre_unit(n);
    let (xm, xl) = (0.5 * (b + a), 0.5 * (b - a));
    Rule {
        nodes: unit.nodes.iter().map(|t| xm + xl * t).collect(),
        weights: unit.weights.iter().map(|w| xl * w).collect(),
    }
}

fn gauss_legendre_unit(n: usize) -> Rule {
    assert!(n >= 1, "quadrature needs at least one node");
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..NEWTON_MAXIT {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    Rule {
        nodes: x,
        weights: w,
    }
}

/// Cached Gauss–Hermite rules for the node counts used by default.
pub(crate) fn hermite_cached(n: usize) -> std::borrow::Cow<'static, Rule> {
    static H64: OnceLock<Rule> = OnceLock::new();
    static H128: OnceLock<Rule> = OnceLock::new();
    match n {
        64 => std::borrow::Cow::Borrowed(H64.get_or_init(|| gauss_hermite(64))),
        128 => std::borrow::Cow::Borrowed(H128.get_or_init(|| gauss_hermite(128))),
        _ => std::borrow::Cow::Owned(gauss_hermite(n)),
    }
}

pub(crate) fn legendre_unit_cached(n: usize) -> std::borrow::Cow<'static, Rule> {
    static L16: OnceLock<Rule> = OnceLock::new();
    static L32: OnceLock<Rule> = OnceLock::new();
    match n {
        16 => std::borrow::Cow::Borrowed(L16.get_or_init(|| gauss_legendre_unit(16))),
        32 => std::borrow::Cow::Borrowed(L32.get_or_init(|| gauss_legendre_unit(32))),
        _ => std::borrow::Cow::Owned(gauss_legendre_unit(n)),
    }
}

/// `E[f(Z)]` for a standard normal `Z` with an `n`-point Hermite rule.
pub fn normal_expectation(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = hermite_cached(n);
    let s: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| w * f(std::f64::consts::SQRT_2 * t))
        .sum();
    s / PI.sqrt()
}

/// `E[f(Z₁, Z₂)]` for independent standard normals with a tensorised rule.
pub fn normal_expectation_2d(n: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let rule = hermite_cached(n);
    let mut s = 0.0;
    for (ti, wi) in rule.nodes.iter().zip(&rule.weights) {
        let z1 = std::f64::consts::SQRT_2 * ti;
        let mut inner = 0.0;
        for (tj, wj) in rule.nodes.iter().zip(&rule.weights) {
            inner += wj * f(z1, std::f64::consts::SQRT_2 * tj);
        }
        s += wi * inner;
    }
    s / PI
}
