//! Seeded Monte-Carlo simulation of random convolutional layers.
//!
//! Per-filter statistics are computed independently (in parallel) and then
//! reduced with [`pairwise_sum`] over the filter index, so a result depends
//! only on the inputs and the seed.

use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{degenerate, domain, shape, Result};
use crate::geometry::{expected_inner, LayerSpec};
use crate::rng::{derive_seed, stream_id, Domain, Stream};
use crate::tensor::{apply_activation, cyclic_convolve, pairwise_sum, Filter, Tensor3};

/// Output-size guard for [`deep_forward`], in bytes (1 GiB of `f64`s).
pub const DEFAULT_MEMORY_CAP: usize = 1 << 30;

/// `N` filters of i.i.d. `N(0, ν²)` entries sharing side and channel count.
#[derive(Debug, Clone)]
pub struct FilterBank {
    filters: Vec<Filter>,
    seed: u64,
    stream_ids: Vec<u64>,
}

impl FilterBank {
    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_ids(&self) -> &[u64] {
        &self.stream_ids
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

/// Filter `index` of the bank with the given seed; independent of bank size.
pub fn sample_filter(
    side: usize,
    channels: usize,
    variance: f64,
    seed: u64,
    index: u64,
) -> Result<Filter> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(domain(format!(
            "filter variance must be positive, got {variance}"
        )));
    }
    if side == 0 || channels == 0 {
        return Err(shape("filter side and channel count must be positive"));
    }
    let nu = variance.sqrt();
    let mut s = Stream::new(seed, stream_id(Domain::Filter, index));
    let weights = (0..side * side * channels)
        .map(|_| nu * s.next_gaussian())
        .collect();
    Filter::new(side, channels, weights, variance)
}

pub fn sample_filter_bank(
    side: usize,
    channels: usize,
    variance: f64,
    count: usize,
    seed: u64,
) -> Result<FilterBank> {
    if count == 0 {
        return Err(domain("a filter bank needs at least one filter"));
    }
    let stream_ids: Vec<u64> = (0..count as u64).collect();
    let filters = stream_ids
        .par_iter()
        .map(|&l| sample_filter(side, channels, variance, seed, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterBank {
        filters,
        seed,
        stream_ids,
    })
}

/// Filter-bank averages for one input pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalGeometry {
    /// `(1/N) Σ_ℓ ⟨σ(F_ℓ∗x), σ(F_ℓ∗y)⟩`
    pub inner_mean: f64,
    /// `ϱ_out`, the cosine similarity of the stacked outputs.
    pub similarity: f64,
    pub sq_norm_x_mean: f64,
    pub sq_norm_y_mean: f64,
    pub n_filters: usize,
}

fn filter_response(f: &Filter, x: &Tensor3, y: &Tensor3, sigma: &Activation) -> Result<[f64; 3]> {
    let a = apply_activation(sigma, &cyclic_convolve(f, x)?);
    let b = apply_activation(sigma, &cyclic_convolve(f, y)?);
    Ok([a.dot(&b), a.sq_norm(), b.sq_norm()])
}

pub fn empirical_geometry(
    x: &Tensor3,
    y: &Tensor3,
    bank: &FilterBank,
    sigma: &Activation,
) -> Result<EmpiricalGeometry> {
    if x.dims() != y.dims() {
        return Err(shape(format!(
            "tensor shapes differ: {:?} vs {:?}",
            x.dims(),
            y.dims()
        )));
    }
    let per_filter = bank
        .filters
        .par_iter()
        .map(|f| filter_response(f, x, y, sigma))
        .collect::<Result<Vec<_>>>()?;
    let column = |c: usize| pairwise_sum(&per_filter.iter().map(|r| r[c]).collect::<Vec<_>>());
    let (inner, sqx, sqy) = (column(0), column(1), column(2));
    if sqx == 0.0 || sqy == 0.0 {
        return Err(degenerate(
            "all post-activation outputs vanish for one input",
        ));
    }
    let n = bank.len() as f64;
    Ok(EmpiricalGeometry {
        inner_mean: inner / n,
        similarity: (inner / (sqx.sqrt() * sqy.sqrt())).clamp(-1.0, 1.0),
        sq_norm_x_mean: sqx / n,
        sq_norm_y_mean: sqy / n,
        n_filters: bank.len(),
    })
}

/// One layer of a deep random network: `filters` output channels of side
/// `side` and entry variance `variance`. Layer `k` draws its bank from
/// `derive_seed(seed, k)`.
#[derive(Debug, Clone)]
pub struct DeepLayer {
    pub side: usize,
    pub variance: f64,
    pub activation: Activation,
    pub filters: usize,
    pub seed: u64,
}

impl DeepLayer {
    fn bank(&self, layer: usize, channels: usize) -> Result<FilterBank> {
        sample_filter_bank(
            self.side,
            channels,
            self.variance,
            self.filters,
            derive_seed(self.seed, layer as u64),
        )
    }

    fn check(&self, x: &Tensor3, depth: usize, copies: usize, memory_cap: usize) -> Result<()> {
        if depth == 0 {
            return Err(domain("depth must be at least 1"));
        }
        let bytes = x.rows() * x.cols() * self.filters * std::mem::size_of::<f64>() * copies;
        if bytes > memory_cap {
            return Err(domain(format!(
                "layer output of {bytes} bytes exceeds the memory cap of {memory_cap}"
            )));
        }
        Ok(())
    }
}

fn layer_forward(x: &Tensor3, bank: &FilterBank, sigma: &Activation) -> Result<Tensor3> {
    let maps = bank
        .filters
        .par_iter()
        .map(|f| Ok(apply_activation(sigma, &cyclic_convolve(f, x)?)))
        .collect::<Result<Vec<_>>>()?;
    Tensor3::stack_channels(&maps)
}

/// Push `x` through `depth` random layers; output `k` has `layer.filters`
/// channels and feeds layer `k + 1`. No renormalisation between layers.
pub fn deep_forward(
    x: &Tensor3,
    depth: usize,
    layer: &DeepLayer,
    memory_cap: usize,
) -> Result<Vec<Tensor3>> {
    layer.check(x, depth, 1, memory_cap)?;
    let mut outputs: Vec<Tensor3> = Vec::with_capacity(depth);
    for k in 0..depth {
        let input = outputs.last().unwrap_or(x);
        let bank = layer.bank(k, input.channels())?;
        let out = layer_forward(input, &bank, &layer.activation)?;
        outputs.push(out);
    }
    Ok(outputs)
}

/// Cosine similarity of a pair at depths `0..=depth`, with both inputs
/// passing through the same banks.
pub fn deep_pair_trajectory(
    x: &Tensor3,
    y: &Tensor3,
    depth: usize,
    layer: &DeepLayer,
    memory_cap: usize,
) -> Result<Vec<f64>> {
    if x.dims() != y.dims() {
        return Err(shape(format!(
            "tensor shapes differ: {:?} vs {:?}",
            x.dims(),
            y.dims()
        )));
    }
    layer.check(x, depth, 2, memory_cap)?;
    let mut sims = vec![crate::tensor::cosine_similarity(x, y)?];
    let (mut cx, mut cy) = (x.clone(), y.clone());
    for k in 0..depth {
        let bank = layer.bank(k, cx.channels())?;
        cx = layer_forward(&cx, &bank, &layer.activation)?;
        cy = layer_forward(&cy, &bank, &layer.activation)?;
        sims.push(
            crate::tensor::cosine_similarity(&cx, &cy)
                .map_err(|_| degenerate(format!("outputs vanish at depth {}", k + 1)))?,
        );
    }
    Ok(sims)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationRow {
    pub n_filters: usize,
    pub trials: usize,
    pub mean_abs_deviation: f64,
    pub max_abs_deviation: f64,
    pub quantile_95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationCurve {
    pub expected_inner: f64,
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationCurve {
    /// Least-squares slope of `ln(mean_abs_deviation)` against `ln N`.
    pub fn loglog_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| ((r.n_filters as f64).ln(), r.mean_abs_deviation.ln()))
            .collect();
        let m = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / m,
            pts.iter().map(|p| p.1).sum::<f64>() / m,
        );
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// Minimum number of trials per row.
pub const MIN_TRIALS: usize = 30;

/// Linear-interpolation quantile of an ascending-sorted sample.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Absolute deviation of the `N`-filter average inner product from its
/// exact expectation, over `trials` independent banks per `N`.
pub fn concentration_sweep(
    x: &Tensor3,
    y: &Tensor3,
    spec: &LayerSpec,
    ns: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ConcentrationCurve> {
    if trials < MIN_TRIALS {
        return Err(domain(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(
            "filter counts must be positive and strictly increasing",
        ));
    }
    let expected = expected_inner(x, y, spec)?;
    let channels = x.channels();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let row_seed = derive_seed(seed, n as u64);
        let mut devs = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let bank = sample_filter_bank(
                    spec.side(),
                    channels,
                    spec.variance(),
                    n,
                    derive_seed(row_seed, t),
                )?;
                let g = empirical_geometry(x, y, &bank, spec.activation())?;
                Ok((g.inner_mean - expected).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean_abs_deviation = pairwise_sum(&devs) / trials as f64;
        devs.sort_by(f64::total_cmp);
        rows.push(ConcentrationRow {
            n_filters: n,
            trials,
            mean_abs_deviation,
            max_abs_deviation: *devs.last().expect("trials > 0"),
            quantile_95: quantile_sorted(&devs, 0.95),
        });
    }
    Ok(ConcentrationCurve {
        expected_inner: expected,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PatchGeometry;
    use crate::tensor::inner_product;

    fn pair() -> (Tensor3, Tensor3) {
        let mut s = Stream::new(99, 0);
        let x = Tensor3::from_fn(6, 6, 1, |_, _, _| s.next_gaussian()).unwrap();
        let y = Tensor3::from_fn(6, 6, 1, |_, _, _| s.next_gaussian()).unwrap();
        (x, y)
    }

    #[test]
    fn bank_is_deterministic_and_extends() {
        let a = sample_filter_bank(3, 2, 0.5, 5, 42).unwrap();
        let b = sample_filter_bank(3, 2, 0.5, 5, 42).unwrap();
        assert_eq!(a.filters(), b.filters());
        let longer = sample_filter_bank(3, 2, 0.5, 8, 42).unwrap();
        assert_eq!(&longer.filters()[..5], a.filters());
        let other = sample_filter_bank(3, 2, 0.5, 5, 43).unwrap();
        assert_ne!(a.filters(), other.filters());
        assert!(sample_filter_bank(3, 2, 0.5, 0, 1).is_err());
        assert!(sample_filter_bank(3, 2, -1.0, 3, 1).is_err());
    }

    #[test]
    fn self_similarity_is_one() {
        let (x, _) = pair();
        let bank = sample_filter_bank(3, 1, 2.0 / 9.0, 20, 3).unwrap();
        let g = empirical_geometry(&x, &x, &bank, &Activation::Relu).unwrap();
        assert!((g.similarity - 1.0).abs() < 1e-14);
        let g = empirical_geometry(&x, &x, &bank, &Activation::Identity).unwrap();
        assert_eq!(g.similarity, 1.0);
    }

    #[test]
    fn relu_outputs_are_nonnegative() {
        let (x, y) = pair();
        let bank = sample_filter_bank(2, 1, 0.5, 50, 8).unwrap();
        for f in bank.filters() {
            let z = apply_activation(&Activation::Relu, &cyclic_convolve(f, &x).unwrap());
            assert!(z.values().iter().all(|&v| v >= 0.0));
        }
        let g = empirical_geometry(&x, &y, &bank, &Activation::Relu).unwrap();
        assert!(g.inner_mean >= 0.0);
        assert!((-1.0..=1.0).contains(&g.similarity));
    }

    #[test]
    fn degenerate_output_is_reported() {
        let (x, _) = pair();
        let zero = Tensor3::zeros(6, 6, 1);
        let bank = sample_filter_bank(3, 1, 1.0, 4, 1).unwrap();
        assert!(matches!(
            empirical_geometry(&x, &zero, &bank, &Activation::Relu),
            Err(crate::Error::Degenerate(_))
        ));
    }

    #[test]
    fn depth_one_matches_single_layer() {
        let (x, y) = pair();
        let layer = DeepLayer {
            side: 3,
            variance: 2.0 / 9.0,
            activation: Activation::Relu,
            filters: 16,
            seed: 5,
        };
        let traj = deep_pair_trajectory(&x, &y, 1, &layer, DEFAULT_MEMORY_CAP).unwrap();
        let bank = sample_filter_bank(3, 1, 2.0 / 9.0, 16, derive_seed(5, 0)).unwrap();
        let g = empirical_geometry(&x, &y, &bank, &Activation::Relu).unwrap();
        assert!((traj[1] - g.similarity).abs() < 1e-12);
        assert_eq!(traj[0], crate::tensor::cosine_similarity(&x, &y).unwrap());
        let outs = deep_forward(&x, 2, &layer, DEFAULT_MEMORY_CAP).unwrap();
        assert_eq!(outs[1].dims(), (6, 6, 16));
    }

    #[test]
    fn memory_cap_and_depth_are_enforced() {
        let (x, y) = pair();
        let layer = DeepLayer {
            side: 3,
            variance: 1.0,
            activation: Activation::Relu,
            filters: 10,
            seed: 0,
        };
        assert!(deep_forward(&x, 1, &layer, 100).is_err());
        assert!(deep_pair_trajectory(&x, &y, 0, &layer, DEFAULT_MEMORY_CAP).is_err());
    }

    #[test]
    fn sweep_validates_inputs() {
        let (x, y) = pair();
        let spec = LayerSpec::normalizing(3, Activation::Relu, PatchGeometry::Standard).unwrap();
        assert!(concentration_sweep(&x, &y, &spec, &[10, 20], 1, 0).is_err());
        assert!(concentration_sweep(&x, &y, &spec, &[20, 10], 30, 0).is_err());
        assert!(concentration_sweep(&x, &y, &spec, &[], 30, 0).is_err());
    }

    #[test]
    fn sweep_deviation_shrinks() {
        let (x, y) = pair();
        let spec = LayerSpec::normalizing(3, Activation::Relu, PatchGeometry::Standard).unwrap();
        let c = concentration_sweep(&x, &y, &spec, &[25, 400], 40, 17).unwrap();
        assert!(c.rows[1].mean_abs_deviation < c.rows[0].mean_abs_deviation);
        assert!(c.rows.iter().all(|r| r.quantile_95 <= r.max_abs_deviation));
        assert!((c.expected_inner - expected_inner(&x, &y, &spec).unwrap()).abs() == 0.0);
        let _ = inner_product(&x, &y).unwrap();
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.0);
        assert!((quantile_sorted(&v, 0.95) - 3.8).abs() < 1e-12);
    }
}
