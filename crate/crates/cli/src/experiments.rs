//! One function per command, each turning a config into a [`Table`].
//!
//! Pair `i` reads its data from `derive_seed(derive_seed(seed, 0), i)` and
//! its filter bank from `derive_seed(derive_seed(seed, 1), i)`, so rows do
//! not depend on how many pairs are run or on thread scheduling.

use convgeom_core::rng::{derive_seed, Stream};
use convgeom_core::*;
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig, ImageModeConfig, InputConfig, WitnessKindConfig};
use crate::error::CliError;
use crate::table::{Cell, Table};

const DATA: u64 = 0;
const BANK: u64 = 1;
const SWEEP: u64 = 2;
const DEEP: u64 = 3;

fn seed_for(cfg: &ExperimentConfig, purpose: u64, id: usize) -> u64 {
    derive_seed(derive_seed(cfg.seed, purpose), id as u64)
}

/// One input pair; binary images are kept when the source has them.
#[derive(Debug, Clone)]
pub struct InputPair {
    pub id: usize,
    pub x: Tensor3,
    pub y: Tensor3,
    pub images: Option<(BinaryImage, BinaryImage)>,
    /// Requested correlation for generated Gaussian pairs.
    pub target_rho: Option<f64>,
}

impl InputPair {
    fn tensors(id: usize, (x, y): (Tensor3, Tensor3)) -> Self {
        Self {
            id,
            x,
            y,
            images: None,
            target_rho: None,
        }
    }

    fn binary(id: usize, a: BinaryImage, b: BinaryImage) -> Self {
        Self {
            id,
            x: a.to_tensor(),
            y: b.to_tensor(),
            images: Some((a, b)),
            target_rho: None,
        }
    }
}

fn need_pairs(cfg: &ExperimentConfig) -> Result<usize, CliError> {
    if cfg.pairs == 0 {
        return Err(CliError::Validation("`pairs` must be at least 1".into()));
    }
    Ok(cfg.pairs)
}

pub fn input_pairs(cfg: &ExperimentConfig) -> Result<Vec<InputPair>, CliError> {
    match &cfg.input {
        InputConfig::Gaussian { n, rho } => {
            let per = need_pairs(cfg)?;
            if rho.is_empty() {
                return Err(CliError::Validation(
                    "`rho` must list at least one correlation".into(),
                ));
            }
            (0..per * rho.len())
                .into_par_iter()
                .map(|id| {
                    let spec = GaussianPairSpec {
                        n: *n,
                        rho: rho[id / per],
                        seed: seed_for(cfg, DATA, id),
                    };
                    let mut p = InputPair::tensors(id, gaussian_pair(&spec)?);
                    p.target_rho = Some(spec.rho);
                    Ok(p)
                })
                .collect()
        }
        InputConfig::Rects { n, count, min_side } => (0..need_pairs(cfg)?)
            .into_par_iter()
            .map(|id| {
                let (a, b) =
                    random_rect_scene(*n, *count, *min_side, seed_for(cfg, DATA, id))?.split_pair();
                Ok(InputPair::binary(id, a, b))
            })
            .collect(),
        InputConfig::Scene { n, rects } => {
            let rects = rects
                .iter()
                .map(|&[row, col, height, width]| Rect {
                    row,
                    col,
                    height,
                    width,
                })
                .collect();
            let (a, b) = RectScene::new(*n, rects)?.split_pair();
            Ok(vec![InputPair::binary(0, a, b)])
        }
        InputConfig::Images { paths, mode } => {
            if paths.is_empty() {
                return Err(CliError::Validation(
                    "`paths` must list at least one image".into(),
                ));
            }
            let core_mode = match mode {
                ImageModeConfig::Binary => ImageMode::Binary,
                ImageModeConfig::Gray => ImageMode::Gray,
            };
            let images = paths
                .iter()
                .map(|p| load_image(p, core_mode).map_err(|e| CliError::reading(p, e)))
                .collect::<Result<Vec<_>, _>>()?;
            (0..need_pairs(cfg)?)
                .map(|id| {
                    // with replacement, uniformly over the list
                    let mut s = Stream::new(seed_for(cfg, DATA, id), 0);
                    let last = images.len() as u64 - 1;
                    let (i, j) = (s.next_in(0, last) as usize, s.next_in(0, last) as usize);
                    Ok(match (&images[i], &images[j]) {
                        (LoadedImage::Binary(a), LoadedImage::Binary(b)) => {
                            if a.side() != b.side() {
                                return Err(CliError::Validation(format!(
                                    "images {} and {} differ in size",
                                    paths[i].display(),
                                    paths[j].display()
                                )));
                            }
                            InputPair::binary(id, a.clone(), b.clone())
                        }
                        (LoadedImage::Gray(a), LoadedImage::Gray(b)) => {
                            InputPair::tensors(id, (a.clone(), b.clone()))
                        }
                        _ => unreachable!("all images share one mode"),
                    })
                })
                .collect()
        }
        InputConfig::Witness { kinds, rho } => {
            let mut out = Vec::new();
            for k in kinds {
                for &r in rho {
                    out.push(InputPair::tensors(out.len(), witness_pair(k.kind(), r)?));
                }
            }
            Ok(out)
        }
        InputConfig::RedGreen { n } => Ok(vec![InputPair::tensors(0, red_green_pair(*n)?)]),
    }
}

fn first_pair(cfg: &ExperimentConfig) -> Result<InputPair, CliError> {
    let mut cfg = cfg.clone();
    cfg.pairs = 1;
    input_pairs(&cfg)?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Validation("input produced no pairs".into()))
}

fn new_table(cfg: &ExperimentConfig, cmd: Command, header: &[&'static str]) -> Table {
    let mut t = Table::new(header);
    t.comment("command", cmd.name());
    t.comment("config-sha256", cfg.hash());
    t
}

fn note_layer(t: &mut Table, spec: &LayerSpec) {
    t.comment("filter-side", spec.side().to_string());
    t.comment(
        "filter-variance",
        crate::table::format_real(spec.variance()),
    );
    t.comment("activation", spec.activation().name());
}

fn simulate_pair(
    cfg: &ExperimentConfig,
    spec: &LayerSpec,
    p: &InputPair,
) -> Result<EmpiricalGeometry, CliError> {
    let bank = sample_filter_bank(
        spec.side(),
        p.x.channels(),
        spec.variance(),
        cfg.filters,
        seed_for(cfg, BANK, p.id),
    )?;
    Ok(empirical_geometry(&p.x, &p.y, &bank, spec.activation())?)
}

/// Bounds on the mean output similarity implied by the activation, if known.
fn similarity_bounds(sigma: &Activation, rho: f64) -> (Option<f64>, Option<f64>) {
    match sigma {
        Activation::Relu => (Some(rho.max(0.0)), Some((1.0 + rho) / 2.0)),
        Activation::Identity => (Some(rho), Some(rho)),
        _ => (None, None),
    }
}

fn mean_output_similarity(x: &Tensor3, y: &Tensor3, spec: &LayerSpec) -> Result<f64, CliError> {
    Ok(geometry_report(x, y, spec)?.mean_similarity)
}

pub fn run_exact(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let spec = cfg.layer.build()?;
    let mut t = new_table(
        cfg,
        Command::Exact,
        &[
            "pair_id",
            "rho_in",
            "exact_inner",
            "exact_sq_norm_x",
            "exact_sq_norm_y",
            "rho_out_mean",
            "lower_bound",
            "upper_bound",
        ],
    );
    note_layer(&mut t, &spec);
    let rows = input_pairs(cfg)?
        .par_iter()
        .map(|p| {
            let rep = geometry_report(&p.x, &p.y, &spec)?;
            let (lo, hi) = rep.bounds.unzip();
            Ok(vec![
                p.id.into(),
                cosine_similarity(&p.x, &p.y)?.into(),
                rep.exact_inner.into(),
                rep.exact_sq_norm_x.into(),
                rep.exact_sq_norm_y.into(),
                rep.mean_similarity.into(),
                lo.into(),
                hi.into(),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let spec = cfg.layer.build()?;
    let mut t = new_table(
        cfg,
        Command::Simulate,
        &[
            "pair_id",
            "rho_in",
            "inner_mean",
            "rho_out_empirical",
            "sq_norm_x_mean",
            "sq_norm_y_mean",
            "exact_inner",
        ],
    );
    note_layer(&mut t, &spec);
    t.comment("filters", cfg.filters.to_string());
    let rows = input_pairs(cfg)?
        .par_iter()
        .map(|p| {
            let g = simulate_pair(cfg, &spec, p)?;
            Ok(vec![
                p.id.into(),
                cosine_similarity(&p.x, &p.y)?.into(),
                g.inner_mean.into(),
                g.similarity.into(),
                g.sq_norm_x_mean.into(),
                g.sq_norm_y_mean.into(),
                expected_inner(&p.x, &p.y, &spec)?.into(),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

pub const SCATTER_HEADER: [&str; 7] = [
    "pair_id",
    "rho_in",
    "rho_out_empirical",
    "rho_out_mean",
    "lower_bound",
    "upper_bound",
    "relu_dual_of_rho_in",
];

pub fn run_scatter(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let spec = cfg.layer.build()?;
    let mut t = new_table(cfg, Command::Scatter, &SCATTER_HEADER);
    note_layer(&mut t, &spec);
    t.comment("filters", cfg.filters.to_string());
    let rows = input_pairs(cfg)?
        .par_iter()
        .map(|p| {
            let rho_in = cosine_similarity(&p.x, &p.y)?;
            let g = simulate_pair(cfg, &spec, p)?;
            let (lo, hi) = similarity_bounds(spec.activation(), rho_in);
            Ok(vec![
                p.id.into(),
                rho_in.into(),
                g.similarity.into(),
                mean_output_similarity(&p.x, &p.y, &spec)?.into(),
                lo.into(),
                hi.into(),
                relu_dual(rho_in)?.into(),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

pub fn run_gaussian_curve(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let InputConfig::Gaussian { rho, .. } = &cfg.input else {
        return Err(CliError::Validation(
            "`gaussian-curve` needs a gaussian input".into(),
        ));
    };
    let spec = cfg.layer.build()?;
    let mut t = new_table(
        cfg,
        Command::GaussianCurve,
        &[
            "rho",
            "pairs",
            "mean_inner",
            "stderr_inner",
            "relu_dual",
            "mean_rho_out_empirical",
        ],
    );
    note_layer(&mut t, &spec);
    t.comment("filters", cfg.filters.to_string());
    let sims = input_pairs(cfg)?
        .par_iter()
        .map(|p| simulate_pair(cfg, &spec, p))
        .collect::<Result<Vec<_>, CliError>>()?;
    let per = cfg.pairs;
    for (ri, &r) in rho.iter().enumerate() {
        let chunk = &sims[ri * per..(ri + 1) * per];
        let inner: Vec<f64> = chunk.iter().map(|g| g.inner_mean).collect();
        let sim: Vec<f64> = chunk.iter().map(|g| g.similarity).collect();
        let m = per as f64;
        let mean = pairwise_sum(&inner) / m;
        let var = if per > 1 {
            pairwise_sum(&inner.iter().map(|v| (v - mean).powi(2)).collect::<Vec<_>>()) / (m - 1.0)
        } else {
            0.0
        };
        t.push(vec![
            r.into(),
            per.into(),
            mean.into(),
            (var / m).sqrt().into(),
            relu_dual(r)?.into(),
            (pairwise_sum(&sim) / m).into(),
        ]);
    }
    Ok(t)
}

pub fn run_boundary_audit(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let side = cfg.layer.side;
    if side % 2 == 0 {
        return Err(CliError::Validation(format!(
            "`boundary` needs an odd filter side, got {side}"
        )));
    }
    let r = side / 2;
    let mut t = new_table(
        cfg,
        Command::Boundary,
        &[
            "scene_id",
            "inner",
            "boundary_count",
            "exact_expected_inner",
            "in_bounds",
        ],
    );
    let spec = LayerSpec::boundary_model(r);
    note_layer(&mut t, &spec);
    t.comment("radius", r.to_string());
    let pairs = input_pairs(cfg)?;
    let rows = pairs
        .par_iter()
        .map(|p| {
            let Some((a, b)) = &p.images else {
                return Err(CliError::Validation(
                    "`boundary` needs binary images (rects, scene or binary files)".into(),
                ));
            };
            let audit = audit_pair(a, b, r)?;
            Ok(vec![
                p.id.into(),
                audit.inner.into(),
                audit.boundary_count.into(),
                audit.exact_expected_inner.into(),
                audit.in_bounds(1e-9).into(),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

pub fn run_concentration(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let spec = cfg.layer.build()?;
    let p = first_pair(cfg)?;
    let curve = concentration_sweep(
        &p.x,
        &p.y,
        &spec,
        &cfg.ns,
        cfg.trials,
        derive_seed(cfg.seed, SWEEP),
    )?;
    let mut t = new_table(
        cfg,
        Command::Concentration,
        &["N", "trials", "mean_abs_dev", "max_abs_dev", "q95"],
    );
    note_layer(&mut t, &spec);
    t.comment(
        "expected-inner",
        crate::table::format_real(curve.expected_inner),
    );
    for row in &curve.rows {
        t.push(vec![
            row.n_filters.into(),
            row.trials.into(),
            row.mean_abs_deviation.into(),
            row.max_abs_deviation.into(),
            row.quantile_95.into(),
        ]);
    }
    Ok(t)
}

pub fn run_collapse(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let spec = cfg.layer.build()?;
    let p = first_pair(cfg)?;
    let layer = DeepLayer {
        side: spec.side(),
        variance: spec.variance(),
        activation: spec.activation().clone(),
        filters: cfg.filters,
        seed: derive_seed(cfg.seed, DEEP),
    };
    let traj = deep_pair_trajectory(&p.x, &p.y, cfg.depth, &layer, cfg.memory_cap_bytes)?;
    // generated pairs are predicted from their population correlation
    let start = p.target_rho.unwrap_or(traj[0]);
    let prediction: Option<Vec<f64>> = match spec.activation() {
        Activation::Relu => Some(iterate_relu_dual(start, cfg.depth)?),
        s if s.is_homogeneous() => {
            let mut v = vec![start];
            for _ in 0..cfg.depth {
                v.push(homogeneous_dual(s, *v.last().unwrap())?);
            }
            Some(v)
        }
        _ => None,
    };
    let mut t = new_table(
        cfg,
        Command::Collapse,
        &["depth", "similarity", "dual_prediction"],
    );
    note_layer(&mut t, &spec);
    t.comment("filters", cfg.filters.to_string());
    for (k, s) in traj.iter().enumerate() {
        let pred = prediction.as_ref().map(|v| v[k]);
        t.push(vec![k.into(), (*s).into(), pred.into()]);
    }
    Ok(t)
}

pub fn run_witness(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (kinds, rho) = match &cfg.input {
        InputConfig::Witness { kinds, rho } => (kinds.clone(), rho.clone()),
        _ => {
            return Err(CliError::Validation(
                "`witness` needs a witness input".into(),
            ));
        }
    };
    // the constructions are stated for filter side 1 and variance 2
    let spec = LayerSpec::new(1, 2.0, Activation::Relu, PatchGeometry::Standard)?;
    let mut t = new_table(
        cfg,
        Command::Witness,
        &["kind", "rho", "inner_in", "exact_inner", "target"],
    );
    note_layer(&mut t, &spec);
    for k in kinds {
        for &r in &rho {
            let (x, y) = witness_pair(k.kind(), r)?;
            let target = match k {
                WitnessKindConfig::UpperBound => (1.0 + r) / 2.0,
                WitnessKindConfig::ZeroProduct => 0.0,
                WitnessKindConfig::ExactEquality => r,
            };
            t.push(vec![
                Cell::Text(k.name()),
                r.into(),
                inner_product(&x, &y)?.into(),
                expected_inner(&x, &y, &spec)?.into(),
                target.into(),
            ]);
        }
    }
    Ok(t)
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Table, CliError> {
    cfg.check_command(cmd)?;
    if cfg.filters == 0 {
        return Err(CliError::Validation("`filters` must be at least 1".into()));
    }
    match cmd {
        Command::Exact => run_exact(cfg),
        Command::Simulate => run_simulate(cfg),
        Command::Scatter => run_scatter(cfg),
        Command::GaussianCurve => run_gaussian_curve(cfg),
        Command::Boundary => run_boundary_audit(cfg),
        Command::Concentration => run_concentration(cfg),
        Command::Collapse => run_collapse(cfg),
        Command::Witness => run_witness(cfg),
    }
}
