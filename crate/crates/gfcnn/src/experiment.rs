//! Experiment harness: sweeps over architecture or noise settings, averaged
//! across independent realizations.
//!
//! One realization draws a fresh graph, dataset, and weight initialization
//! from seeds derived off the master seed, trains the model, and scores it
//! on the frozen test split. A sweep repeats that across a list of values on
//! one axis — node-group count, filter order, or test-noise variance — and
//! reports mean accuracy, an unbiased variance estimate across realizations,
//! and the model's parameter count per point. Results serialize to CSV with
//! the variance quartered, matching the error-bar convention the accuracy
//! plots use.
//!
//! Realizations are independent, so everything runs sequentially and joins
//! deterministically: the same config (master seed included) always yields
//! byte-identical CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::arch::parse_architecture;
use crate::dataset::{generate_source_localization, Normalization};
use crate::error::{Error, Result};
use crate::graph::{generate_connected_er, read_graph, Graph, ShiftKind};
use crate::model::{LayerKind, LayerSpec, Model};
use crate::seeds::{self, Purpose};
use crate::training::{evaluate, train, TrainConfig};

/// Where the experiment's graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    /// A fresh connected Erdős–Rényi draw per realization.
    Generated { num_nodes: usize, edge_prob: f64 },
    /// A fixed graph loaded from a file and shared by all realizations.
    File(PathBuf),
}

/// The axis a sweep varies, with its value list.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Single point: train and evaluate the configured setup as-is.
    None,
    /// Vary the node-group count of every node-varying filter layer.
    NumGroups(Vec<usize>),
    /// Vary the filter order of every graph filter layer.
    FilterOrder(Vec<usize>),
    /// Vary the test-noise variance of the generated dataset.
    NoiseVariance(Vec<f64>),
}

/// Default group-count grid: every count from 1 to the node count.
pub fn default_group_values(num_nodes: usize) -> Vec<usize> {
    (1..=num_nodes).collect()
}

/// Default filter-order grid.
pub fn default_order_values() -> Vec<usize> {
    (2..=12).collect()
}

/// Default noise grid: five log-spaced decades of variance, spanning the
/// range where accuracy degrades gracefully rather than collapsing.
pub fn default_noise_values() -> Vec<f64> {
    vec![1e-9, 1e-8, 1e-7, 1e-6, 1e-5]
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub shift: ShiftKind,
    /// Architecture string, e.g. `GL[10,15]-GL[10,15]`.
    pub architecture: String,
    /// Training hyperparameters. The `seed` field is ignored: each
    /// realization trains with a seed derived from `master_seed`.
    pub train: TrainConfig,
    pub train_size: usize,
    pub test_size: usize,
    /// Test-noise variance; a [`SweepAxis::NoiseVariance`] sweep overrides it.
    pub noise_variance: f64,
    pub normalization: Normalization,
    /// Independent repetitions per sweep point.
    pub realizations: usize,
    pub sweep: SweepAxis,
    pub master_seed: u64,
}

/// Aggregate outcome at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// The swept value (group count and filter order as exact floats; 0 for
    /// a no-sweep run).
    pub sweep_value: f64,
    /// Test accuracy of each realization, in realization order.
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Unbiased sample variance across realizations (0 when there is one).
    pub variance: f64,
    pub param_count: usize,
}

/// All sweep points of one experiment, in sweep order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

/// Streaming mean and unbiased sample variance (Welford's recurrence).
fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let variance = if xs.len() > 1 {
        m2 / (xs.len() - 1) as f64
    } else {
        0.0
    };
    (mean, variance)
}

/// The value list of a sweep axis, as CSV-ready floats.
fn sweep_values(axis: &SweepAxis) -> Vec<f64> {
    match axis {
        SweepAxis::None => vec![0.0],
        SweepAxis::NumGroups(vs) => vs.iter().map(|&v| v as f64).collect(),
        SweepAxis::FilterOrder(vs) => vs.iter().map(|&v| v as f64).collect(),
        SweepAxis::NoiseVariance(vs) => vs.clone(),
    }
}

/// Rewrite the base specs for the sweep point at `index`.
fn specs_at_point(base: &[LayerSpec], axis: &SweepAxis, index: usize) -> Result<Vec<LayerSpec>> {
    match axis {
        SweepAxis::None | SweepAxis::NoiseVariance(_) => Ok(base.to_vec()),
        SweepAxis::NumGroups(vs) => {
            let b = vs[index];
            if !base
                .iter()
                .any(|s| matches!(s.kind, LayerKind::HybridGf { .. }))
            {
                return Err(Error::Config(
                    "group-count sweep needs a node-varying filter layer".into(),
                ));
            }
            Ok(base
                .iter()
                .map(|s| match s.kind {
                    LayerKind::HybridGf { order, .. } => LayerSpec::relu(LayerKind::HybridGf {
                        order,
                        num_groups: b,
                    }),
                    kind => LayerSpec::relu(kind),
                })
                .collect())
        }
        SweepAxis::FilterOrder(vs) => {
            let t = vs[index];
            if !base.iter().any(|s| {
                matches!(
                    s.kind,
                    LayerKind::HybridGf { .. } | LayerKind::GfBank { .. }
                )
            }) {
                return Err(Error::Config(
                    "filter-order sweep needs a graph filter layer".into(),
                ));
            }
            Ok(base
                .iter()
                .map(|s| match s.kind {
                    LayerKind::HybridGf { num_groups, .. } => {
                        LayerSpec::relu(LayerKind::HybridGf {
                            order: t,
                            num_groups,
                        })
                    }
                    LayerKind::GfBank { features_out, .. } => LayerSpec::relu(LayerKind::GfBank {
                        order: t,
                        features_out,
                    }),
                    kind => LayerSpec::relu(kind),
                })
                .collect())
        }
    }
}

/// Run every sweep point for every realization and aggregate.
///
/// Each (sweep point, realization) pair derives its own graph, data, init,
/// and training seeds from the master seed, so results are reproducible and
/// all random streams are pairwise independent. Errors are tagged with the
/// sweep value and realization that hit them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.train.validate()?;
    if cfg.realizations == 0 {
        return Err(Error::Config("experiment needs at least one realization".into()));
    }
    if cfg.train_size == 0 || cfg.test_size == 0 {
        return Err(Error::Config(
            "experiment needs non-empty train and test splits".into(),
        ));
    }
    if !(cfg.noise_variance.is_finite() && cfg.noise_variance >= 0.0) {
        return Err(Error::Config(format!(
            "noise variance must be finite and non-negative, got {}",
            cfg.noise_variance
        )));
    }
    let empty = match &cfg.sweep {
        SweepAxis::None => false,
        SweepAxis::NumGroups(vs) => vs.is_empty(),
        SweepAxis::FilterOrder(vs) => vs.is_empty(),
        SweepAxis::NoiseVariance(vs) => vs.is_empty(),
    };
    if empty {
        return Err(Error::Config("sweep value list must be non-empty".into()));
    }
    let base_specs = parse_architecture(&cfg.architecture)?;
    let file_graph = match &cfg.graph {
        GraphSource::File(path) => Some(read_graph(path)?),
        GraphSource::Generated { num_nodes, .. } => {
            if *num_nodes < 2 {
                return Err(Error::Config("generated graphs need at least 2 nodes".into()));
            }
            None
        }
    };

    let values = sweep_values(&cfg.sweep);
    let mut points = Vec::with_capacity(values.len());
    for (si, &value) in values.iter().enumerate() {
        let specs = specs_at_point(&base_specs, &cfg.sweep, si)?;
        let sigma2 = match &cfg.sweep {
            SweepAxis::NoiseVariance(vs) => vs[si],
            _ => cfg.noise_variance,
        };
        let tag = |r: usize, e: Error| {
            Error::Config(format!("sweep value {value}, realization {r}: {e}"))
        };
        let mut accuracies = Vec::with_capacity(cfg.realizations);
        let mut param_count = 0;
        for r in 0..cfg.realizations {
            let sweep_idx = si as u64;
            let real_idx = r as u64;
            let graph: Graph = match (&file_graph, &cfg.graph) {
                (Some(g), _) => g.clone(),
                (None, GraphSource::Generated { num_nodes, edge_prob }) => generate_connected_er(
                    *num_nodes,
                    *edge_prob,
                    seeds::child(cfg.master_seed, sweep_idx, real_idx, Purpose::Graph),
                )
                .map_err(|e| tag(r, e))?,
                (None, GraphSource::File(_)) => unreachable!("file graph loaded above"),
            };
            let data = generate_source_localization(
                &graph,
                cfg.train_size,
                cfg.test_size,
                sigma2,
                cfg.normalization,
                seeds::child(cfg.master_seed, sweep_idx, real_idx, Purpose::Data),
            )
            .map_err(|e| tag(r, e))?;
            let model = Model::init(
                graph,
                cfg.shift,
                &specs,
                data.num_classes(),
                seeds::child(cfg.master_seed, sweep_idx, real_idx, Purpose::Init),
            )
            .map_err(|e| tag(r, e))?;
            param_count = model.count_parameters();
            let mut train_cfg = cfg.train.clone();
            train_cfg.seed = seeds::child(cfg.master_seed, sweep_idx, real_idx, Purpose::Train);
            let (trained, _) = train(model, &data, &train_cfg).map_err(|e| tag(r, e))?;
            let metrics = evaluate(&trained, &data).map_err(|e| tag(r, e))?;
            let stats = metrics
                .accuracy
                .expect("evaluation always fills accuracy stats");
            accuracies.push(stats.fraction());
        }
        let (mean_accuracy, variance) = mean_variance(&accuracies);
        points.push(SweepPoint {
            sweep_value: value,
            accuracies,
            mean_accuracy,
            variance,
            param_count,
        });
    }
    Ok(SweepResult { points })
}

/// Render sweep results as CSV. The variance column is quartered, matching
/// the error-bar convention of the accuracy plots this data feeds.
pub fn format_sweep_csv(res: &SweepResult) -> String {
    let mut out = String::from("sweep_value,mean_accuracy,quarter_variance,param_count\n");
    for p in &res.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.sweep_value,
            p.mean_accuracy,
            p.variance / 4.0,
            p.param_count
        );
    }
    out
}

/// Write [`format_sweep_csv`] output to a file.
pub fn write_sweep_csv(res: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, format_sweep_csv(res)).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })
}
