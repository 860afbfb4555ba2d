//! Scalar activation functions with the metadata the dual-activation and
//! concentration machinery needs (Lipschitz constant, positive homogeneity).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomActivation {
    name: String,
    f: ScalarFn,
    lipschitz: f64,
    homogeneous: bool,
}

impl fmt::Debug for CustomActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomActivation")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum Activation {
    Identity,
    Relu,
    Custom(CustomActivation),
}

// Spot-check grid for declared properties of custom activations.
const PROBE: [f64; 15] = [
    -25.0, -7.3, -3.0, -1.0, -0.61, -0.2, -1e-3, 0.0, 1e-3, 0.17, 0.5, 1.0, 2.4, 6.0, 31.0,
];

impl Activation {
    /// Wrap a user-supplied scalar function.
    ///
    /// The declared Lipschitz constant and homogeneity flag are spot-checked
    /// on a fixed probe grid; a violation is reported as a contract error.
    pub fn custom<F>(
        name: impl Into<String>,
        f: F,
        lipschitz: f64,
        homogeneous: bool,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::Contract(format!(
                "activation {name}: Lipschitz constant must be finite and non-negative"
            )));
        }
        for &a in &PROBE {
            let fa = f(a);
            if !fa.is_finite() {
                return Err(Error::Contract(format!(
                    "activation {name} is not finite at {a}"
                )));
            }
            for &b in &PROBE {
                let gap = (fa - f(b)).abs();
                if gap > lipschitz * (a - b).abs() * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::Contract(format!(
                        "activation {name} violates Lipschitz constant {lipschitz} between {a} and {b}"
                    )));
                }
            }
        }
        if homogeneous {
            for &x in &PROBE {
                for c in [0.0, 0.5, 2.0, 3.7] {
                    let (lhs, rhs) = (f(c * x), c * f(x));
                    if (lhs - rhs).abs() > 1e-9 * (1.0 + rhs.abs()) {
                        return Err(Error::Contract(format!(
                            "activation {name} is declared homogeneous but f({c}·{x}) ≠ {c}·f({x})"
                        )));
                    }
                }
            }
        }
        Ok(Activation::Custom(CustomActivation {
            name,
            f: Arc::new(f),
            lipschitz,
            homogeneous,
        }))
    }

    /// `x ↦ max(x, αx)`; homogeneous with Lipschitz constant `max(1, |α|)`.
    pub fn leaky_relu(alpha: f64) -> Result<Self> {
        Self::custom(
            format!("leaky_relu({alpha})"),
            move |x| if x >= 0.0 { x } else { alpha * x },
            alpha.abs().max(1.0),
            true,
        )
    }

    /// Hyperbolic tangent: 1-Lipschitz, not homogeneous.
    pub fn tanh() -> Self {
        Self::custom("tanh", f64::tanh, 1.0, false).expect("tanh satisfies its declared contract")
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Custom(c) => (c.f)(x),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Custom(c) => &c.name,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Activation::Identity | Activation::Relu => 1.0,
            Activation::Custom(c) => c.lipschitz,
        }
    }

    /// `σ(cx) = cσ(x)` for every `c ≥ 0`.
    pub fn is_homogeneous(&self) -> bool {
        match self {
            Activation::Identity | Activation::Relu => true,
            Activation::Custom(c) => c.homogeneous,
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        self.apply(0.0)
    }

    /// For a homogeneous activation, `(σ(1), σ(-1))`: the function equals
    /// `x·σ(1)` on `x ≥ 0` and `|x|·σ(-1)` on `x < 0`.
    pub fn half_line_gains(&self) -> Option<(f64, f64)> {
        self.is_homogeneous()
            .then(|| (self.apply(1.0), self.apply(-1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_metadata() {
        for s in [Activation::Identity, Activation::Relu] {
            assert_eq!(s.lipschitz(), 1.0);
            assert!(s.is_homogeneous());
            assert_eq!(s.value_at_zero(), 0.0);
        }
        assert_eq!(Activation::Relu.half_line_gains(), Some((1.0, 0.0)));
        assert_eq!(Activation::tanh().half_line_gains(), None);
    }

    #[test]
    fn custom_lipschitz_is_checked() {
        assert!(Activation::custom("double", |x| 2.0 * x, 2.0, true).is_ok());
        let err = Activation::custom("double", |x| 2.0 * x, 1.5, true).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn custom_homogeneity_is_checked() {
        let err = Activation::custom("shifted", |x: f64| x.max(0.0) + 0.1, 1.0, true).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert!(Activation::custom("shifted", |x: f64| x.max(0.0) + 0.1, 1.0, false).is_ok());
    }

    #[test]
    fn leaky_relu_gains() {
        let s = Activation::leaky_relu(0.2).unwrap();
        assert_eq!(s.half_line_gains(), Some((1.0, -0.2)));
        assert_eq!(s.apply(-5.0), -1.0);
    }
}
