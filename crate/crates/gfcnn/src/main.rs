//! Command-line harness: generate graphs and datasets, train and evaluate
//! models, and run accuracy sweeps that land in CSV files.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use gfcnn::arch::parse_architecture;
use gfcnn::dataset::{
    generate_source_localization, read_dataset, write_dataset, Dataset, Normalization,
};
use gfcnn::error::{Error, Result};
use gfcnn::experiment::{
    default_group_values, default_noise_values, default_order_values, run_experiment,
    ExperimentConfig, GraphSource, SweepAxis,
};
use gfcnn::graph::{generate_connected_er, graph_hash, read_graph, write_graph, Graph, ShiftKind};
use gfcnn::model::{load_model, save_model, Model};
use gfcnn::seeds::{self, Purpose};
use gfcnn::training::{evaluate, train, write_metrics_csv, TrainConfig};

#[derive(Parser)]
#[command(
    name = "gfcnn",
    version,
    about = "Train and evaluate CNNs built from graph filters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a connected Erdős–Rényi graph and write it to a file.
    GraphGen(GraphGenArgs),
    /// Generate a source-localization dataset on an existing graph.
    DataGen(DataGenArgs),
    /// Train a model on a dataset and save it.
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset.
    Eval(EvalArgs),
    /// Sweep one axis across realizations and write a CSV of accuracies.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GraphGenArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 15)]
    nodes: usize,
    /// Edge probability of the Erdős–Rényi draw.
    #[arg(long, default_value_t = 0.4)]
    edge_prob: f64,
    /// Seed of the graph draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output graph file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataGenArgs {
    /// Graph file the signals live on.
    #[arg(long)]
    graph: PathBuf,
    /// Number of training samples.
    #[arg(long, default_value_t = 30000)]
    train_size: usize,
    /// Number of test samples.
    #[arg(long, default_value_t = 200)]
    test_size: usize,
    /// Gaussian noise variance added to test signals.
    #[arg(long, default_value_t = 1e-6)]
    sigma2: f64,
    /// Per-sample normalization: none or unit-l2.
    #[arg(long, default_value = "none")]
    normalization: Normalization,
    /// Seed of the sample draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Graph file the model is built on.
    #[arg(long)]
    graph: PathBuf,
    /// Dataset file to train on.
    #[arg(long)]
    dataset: PathBuf,
    /// Architecture string, e.g. GL[10,15]-GL[10,15].
    #[arg(long)]
    arch: String,
    /// Graph shift operator: adjacency, laplacian, or normalized-laplacian.
    #[arg(long, default_value = "adjacency")]
    gso: ShiftKind,
    /// Training epochs.
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    /// ADAM learning rate.
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    /// Mini-batch size.
    #[arg(long, default_value_t = 100)]
    batch_size: usize,
    /// Dropout probability on dense hidden layers (0 disables).
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    /// Master seed; initialization and training streams derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file.
    #[arg(long)]
    model: PathBuf,
    /// Optional metrics CSV (per-epoch loss and test accuracy).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Saved model file.
    #[arg(long)]
    model: PathBuf,
    /// Dataset file to evaluate on.
    #[arg(long)]
    dataset: PathBuf,
    /// Optional metrics CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Number of nodes of the per-realization graphs.
    #[arg(long, default_value_t = 15)]
    nodes: usize,
    /// Edge probability of the per-realization graphs.
    #[arg(long, default_value_t = 0.4)]
    edge_prob: f64,
    /// Fixed graph file; overrides --nodes/--edge-prob when given.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Graph shift operator: adjacency, laplacian, or normalized-laplacian.
    #[arg(long, default_value = "adjacency")]
    gso: ShiftKind,
    /// Architecture string, e.g. GL[10,15]-GL[10,15].
    #[arg(long)]
    arch: String,
    /// Training epochs.
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    /// ADAM learning rate.
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    /// Mini-batch size.
    #[arg(long, default_value_t = 100)]
    batch_size: usize,
    /// Dropout probability on dense hidden layers (0 disables).
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    /// Training samples per realization.
    #[arg(long, default_value_t = 30000)]
    train_size: usize,
    /// Test samples per realization.
    #[arg(long, default_value_t = 200)]
    test_size: usize,
    /// Test-noise variance (a sigma2 sweep overrides it).
    #[arg(long, default_value_t = 1e-6)]
    sigma2: f64,
    /// Per-sample normalization: none or unit-l2.
    #[arg(long, default_value = "none")]
    normalization: Normalization,
    /// Independent realizations per sweep point.
    #[arg(long, default_value_t = 10)]
    realizations: usize,
    /// Sweep axis: none, or one of num-groups, filter-order, sigma2 —
    /// bare for the default grid or with =v1,v2,… for explicit values.
    #[arg(long, default_value = "none")]
    sweep: String,
    /// Master seed; all per-realization streams derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

/// Parse a `--sweep` argument: an axis name, optionally with `=v1,v2,…`.
fn parse_sweep(s: &str, num_nodes: usize) -> Result<SweepAxis> {
    let (axis, values) = match s.split_once('=') {
        Some((a, v)) => (a, Some(v)),
        None => (s, None),
    };
    fn list<T: std::str::FromStr>(axis: &str, values: &str) -> Result<Vec<T>> {
        values
            .split(',')
            .map(|v| {
                v.trim().parse().map_err(|_| {
                    Error::Config(format!("bad {axis} sweep value {v:?}"))
                })
            })
            .collect()
    }
    match (axis, values) {
        ("none", None) => Ok(SweepAxis::None),
        ("none", Some(_)) => Err(Error::Config("sweep axis none takes no values".into())),
        ("num-groups", None) => Ok(SweepAxis::NumGroups(default_group_values(num_nodes))),
        ("num-groups", Some(v)) => Ok(SweepAxis::NumGroups(list("num-groups", v)?)),
        ("filter-order", None) => Ok(SweepAxis::FilterOrder(default_order_values())),
        ("filter-order", Some(v)) => Ok(SweepAxis::FilterOrder(list("filter-order", v)?)),
        ("sigma2", None) => Ok(SweepAxis::NoiseVariance(default_noise_values())),
        ("sigma2", Some(v)) => Ok(SweepAxis::NoiseVariance(list("sigma2", v)?)),
        _ => Err(Error::Config(format!(
            "unknown sweep axis {axis:?}; expected none, num-groups, filter-order, or sigma2"
        ))),
    }
}

/// Refuse graph/dataset pairs that don't belong together.
fn check_dataset_graph(data: &Dataset, g: &Graph) -> Result<()> {
    if data.num_nodes() != g.num_nodes() {
        return Err(Error::Dimension(format!(
            "dataset signals have {} entries but the graph has {} nodes",
            data.num_nodes(),
            g.num_nodes()
        )));
    }
    if let Some(h) = data.graph_hash() {
        if h != graph_hash(g) {
            return Err(Error::Config(
                "dataset was generated on a different graph (digest mismatch)".into(),
            ));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GraphGen(a) => {
            let g = generate_connected_er(a.nodes, a.edge_prob, a.seed)?;
            write_graph(&g, &a.out)?;
            println!(
                "wrote {}-node graph with {} edges to {}",
                g.num_nodes(),
                g.num_edges(),
                a.out.display()
            );
        }
        Command::DataGen(a) => {
            let g = read_graph(&a.graph)?;
            let data = generate_source_localization(
                &g,
                a.train_size,
                a.test_size,
                a.sigma2,
                a.normalization,
                a.seed,
            )?;
            write_dataset(&data, &a.out)?;
            println!(
                "wrote {} train and {} test samples to {}",
                data.train().len(),
                data.test().len(),
                a.out.display()
            );
        }
        Command::Train(a) => {
            let g = read_graph(&a.graph)?;
            let data = read_dataset(&a.dataset)?;
            check_dataset_graph(&data, &g)?;
            let specs = parse_architecture(&a.arch)?;
            let model = Model::init(
                g,
                a.gso,
                &specs,
                data.num_classes(),
                seeds::child(a.seed, 0, 0, Purpose::Init),
            )?;
            let cfg = TrainConfig {
                learning_rate: a.lr,
                epochs: a.epochs,
                batch_size: a.batch_size,
                dropout_p: a.dropout,
                seed: seeds::child(a.seed, 0, 0, Purpose::Train),
                ..TrainConfig::default()
            };
            let (trained, mut metrics) = train(model, &data, &cfg)?;
            let eval_metrics = evaluate(&trained, &data)?;
            metrics.accuracy = eval_metrics.accuracy;
            save_model(&trained, &a.model)?;
            let acc = metrics.accuracy.as_ref().map(|s| s.fraction());
            match (metrics.epoch_loss.last(), acc) {
                (Some(loss), Some(acc)) => {
                    println!("final epoch loss {loss:.6}, test accuracy {acc:.4}")
                }
                (None, Some(acc)) => println!("test accuracy {acc:.4} (untrained)"),
                _ => {}
            }
            println!("model written to {}", a.model.display());
            if let Some(out) = &a.out {
                write_csv(&metrics, out)?;
            }
        }
        Command::Eval(a) => {
            let model = load_model(&a.model)?;
            let data = read_dataset(&a.dataset)?;
            check_dataset_graph(&data, model.graph())?;
            let metrics = evaluate(&model, &data)?;
            let stats = metrics.accuracy.as_ref().expect("evaluation fills accuracy");
            println!(
                "test accuracy {:.4} ({}/{} correct)",
                stats.fraction(),
                stats.correct,
                stats.total
            );
            if let Some(out) = &a.out {
                write_csv(&metrics, out)?;
            }
        }
        Command::Sweep(a) => {
            let sweep = parse_sweep(&a.sweep, a.nodes)?;
            let graph = match &a.graph {
                Some(path) => GraphSource::File(path.clone()),
                None => GraphSource::Generated {
                    num_nodes: a.nodes,
                    edge_prob: a.edge_prob,
                },
            };
            let cfg = ExperimentConfig {
                graph,
                shift: a.gso,
                architecture: a.arch.clone(),
                train: TrainConfig {
                    learning_rate: a.lr,
                    epochs: a.epochs,
                    batch_size: a.batch_size,
                    dropout_p: a.dropout,
                    ..TrainConfig::default()
                },
                train_size: a.train_size,
                test_size: a.test_size,
                noise_variance: a.sigma2,
                normalization: a.normalization,
                realizations: a.realizations,
                sweep,
                master_seed: a.seed,
            };
            let res = run_experiment(&cfg)?;
            gfcnn::experiment::write_sweep_csv(&res, &a.out)?;
            for p in &res.points {
                println!(
                    "sweep value {}: mean accuracy {:.4} over {} realizations ({} parameters)",
                    p.sweep_value,
                    p.mean_accuracy,
                    p.accuracies.len(),
                    p.param_count
                );
            }
            println!("csv written to {}", a.out.display());
        }
    }
    Ok(())
}

/// Write metrics to a CSV file.
fn write_csv(metrics: &gfcnn::training::Metrics, path: &PathBuf) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })?;
    write_metrics_csv(metrics, &mut file)?;
    println!("metrics written to {}", path.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
