//! Geometry of random convolutional layers.
//!
//! A layer with i.i.d. Gaussian filters maps a pair of images to a pair of
//! feature stacks. This crate computes the exact expectation of the output
//! inner product (via the dual activation), samples finite filter banks to
//! measure the same quantities empirically, and provides the binary-image
//! boundary bounds, input generators and netpbm I/O that experiments need.
//!
//! ```
//! use convgeom_core::{expected_inner, Activation, LayerSpec, PatchGeometry, Tensor3};
//!
//! // one pixel, two orthogonal channels
//! let x = Tensor3::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
//! let y = Tensor3::new(1, 1, 2, vec![0.0, 1.0]).unwrap();
//! let spec = LayerSpec::new(1, 2.0, Activation::Relu, PatchGeometry::Standard).unwrap();
//! let e = expected_inner(&x, &y, &spec).unwrap();
//! assert!((e - 1.0 / std::f64::consts::PI).abs() < 1e-12);
//! ```

pub mod activation;
pub mod datagen;
pub mod dual;
pub mod error;
pub mod geometry;
pub mod image;
pub mod netpbm;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod tensor;

pub use activation::{Activation, CustomActivation};
pub use datagen::{
    gaussian_pair, load_image, overlapping_rect_pair, random_rect_scene, red_green_pair,
    save_binary, witness_pair, GaussianPairSpec, ImageMode, LoadedImage, WitnessKind,
};
pub use dual::{
    dual_from_moments, dual_general, homogeneous_dual, iterate_relu_dual, nu_sigma_sq, relu_dual,
    DualEvaluation, DualMethod,
};
pub use error::{Error, Result};
pub use geometry::{
    expected_inner, expected_inner_detailed, expected_sq_norm, geometry_report, mean_similarity,
    patch_moments, relu_bounds, sample_complexity, ComplexityMode, Expectation, ExpectedSqNorm,
    GeometryReport, LayerSpec, PatchGeometry, PatchMoments, SampleComplexity,
};
pub use image::{
    audit_pair, boundary, boundary_distance_bounds, boundary_inner_bounds, isometry_defect,
    BinaryImage, BoundaryAudit, BoundaryResult, Rect, RectScene,
};
pub use simulate::{
    concentration_sweep, deep_forward, deep_pair_trajectory, empirical_geometry, sample_filter,
    sample_filter_bank, ConcentrationCurve, ConcentrationRow, DeepLayer, EmpiricalGeometry,
    FilterBank, DEFAULT_MEMORY_CAP,
};
pub use tensor::{
    apply_activation, cosine_similarity, cyclic_convolve, inner_product, norm, pairwise_sum, patch,
    patch_centered, FeatureMap, Filter, Tensor3,
};
