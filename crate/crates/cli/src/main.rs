//! Command-line front end: graph generation, spectra, regularized estimation,
//! partitioning, and the replicated experiment sweeps.

mod output;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use lapreg::experiments::{
    self, eta_log_grid, optimal_eta_from_records, run_error_sweep, run_prior_order_stats,
    run_theta_spectrum, ErrorNorm, ExperimentConfig,
};
use lapreg::graph::Graph;
use lapreg::spectral::DEFAULT_RANK_TOL;
use lapreg::stream::rng_for;
use lapreg::{
    best_sweep_cut, conductance, eig_sym, generate_lattice, normalized_laplacian, pseudoinverse,
    solve_entropy, solve_logdet, solve_unregularized, sweep_cut, theta_of, RegSolution,
};

use output::{write_atomic, write_json_atomic, Manifest};

#[derive(Parser)]
#[command(
    name = "lapreg",
    version,
    about = "Regularized graph Laplacian estimation and diffusion experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a small-world population graph (lattice plus edge swaps).
    Generate(GenerateArgs),
    /// Eigenvalues of a graph's normalized Laplacian and its Θ spectrum.
    Spectrum(SpectrumArgs),
    /// Solve the regularized estimation problem for a graph file.
    Estimate(EstimateArgs),
    /// Sweep cuts, conductance, and pseudoinverse-based local partitions.
    Partition(PartitionArgs),
    /// Error sweep over an explicit (s, m/mu, eta/tau) grid.
    Sweep(SweepArgs),
    /// Reproduce one panel of the paper-style figures.
    Figure(FigureArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    swaps: usize,
    /// Seed for the swap stream (required: no silent nondeterminism).
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    Logdet,
    Entropy,
    None,
}

impl PenaltyArg {
    fn name(self) -> &'static str {
        match self {
            PenaltyArg::Logdet => "logdet",
            PenaltyArg::Entropy => "entropy",
            PenaltyArg::None => "none",
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    penalty: PenaltyArg,
    /// Regularization scale; required for logdet and entropy.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Sweep threshold on the second eigenvector (default 0).
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Scan all thresholds of the second eigenvector for the best conductance.
    #[arg(long, conflicts_with = "local_node")]
    best: bool,
    /// Local partition around this node from the Laplacian pseudoinverse.
    #[arg(long)]
    local_node: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 6)]
    width: usize,
    #[arg(long, default_value_t = 7)]
    height: usize,
    /// Comma-separated swap counts.
    #[arg(long, value_delimiter = ',', default_value = "0,4,32")]
    swaps: Vec<usize>,
    /// Comma-separated sampling ratios m/mu.
    #[arg(long = "m-over-mu", value_delimiter = ',', default_value = "0.2,1.0,2.0")]
    m_over_mu: Vec<f64>,
    #[arg(long, default_value_t = 1e-2)]
    eta_min: f64,
    #[arg(long, default_value_t = 1e2)]
    eta_max: f64,
    #[arg(long, default_value_t = 50)]
    eta_points: usize,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value = "frobenius")]
    norm: String,
    #[arg(long)]
    seed: u64,
    /// Worker threads (default: LAPREG_WORKERS or the available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FigureArgs {
    /// Panel id: 1a, 1b, 2a-2f, 3a-3f.
    #[arg(long)]
    which: String,
    /// Override the panel's default replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Partition(args) => cmd_partition(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Figure(args) => cmd_figure(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = json!({ "error": err.to_string() });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

type CmdResult = Result<(), Box<dyn std::error::Error>>;

fn read_graph(path: &Path) -> Result<Graph, Box<dyn std::error::Error>> {
    let file = File::open(path)?;
    Ok(Graph::read_edge_list(BufReader::new(file))?)
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("LAPREG_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
    .max(1)
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let lattice = generate_lattice(args.width, args.height)?;
    let mut rng = rng_for(args.seed, &[0x6e67]);
    let graph = lapreg::edge_swap(&lattice, args.swaps, &mut rng)?;
    let mut bytes = Vec::new();
    graph.write_edge_list(&mut bytes)?;
    write_atomic(&args.out, &bytes)?;
    Manifest::new(
        Some(args.seed),
        json!({
            "width": args.width,
            "height": args.height,
            "swaps": args.swaps,
        }),
        vec![args.out.clone()],
    )
    .write(&args.out)?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumOutput {
    n: usize,
    tau: f64,
    laplacian_eigenvalues: Vec<f64>,
    theta_eigenvalues: Vec<f64>,
}

fn cmd_spectrum(args: SpectrumArgs) -> CmdResult {
    let graph = read_graph(&args.graph)?;
    let laplacian = normalized_laplacian(&graph)?;
    let spec = eig_sym(&laplacian)?;
    let decomp = theta_of(&laplacian)?;
    let theta_spec = eig_sym(&decomp.theta)?;
    let mut theta_eigs: Vec<f64> = theta_spec
        .eigenvalues
        .iter()
        .copied()
        .filter(|&x| x > DEFAULT_RANK_TOL)
        .collect();
    theta_eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let out = SpectrumOutput {
        n: graph.node_count(),
        tau: decomp.tau,
        laplacian_eigenvalues: spec.eigenvalues,
        theta_eigenvalues: theta_eigs,
    };
    write_json_atomic(&args.out, &out)?;
    Manifest::new(None, json!({ "graph": args.graph }), vec![args.out.clone()])
        .write(&args.out)?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateOutput {
    penalty: String,
    eta: Option<f64>,
    nu: Option<f64>,
    trace: f64,
    disconnected: bool,
    n: usize,
    theta: Vec<Vec<f64>>,
}

fn cmd_estimate(args: EstimateArgs) -> CmdResult {
    let graph = read_graph(&args.graph)?;
    let laplacian = normalized_laplacian(&graph)?;
    let degrees = graph.degrees();
    let solution: RegSolution = match args.penalty {
        PenaltyArg::Logdet | PenaltyArg::Entropy => {
            let eta = args
                .eta
                .ok_or("--eta is required for the logdet and entropy penalties")?;
            match args.penalty {
                PenaltyArg::Logdet => solve_logdet(&laplacian, &degrees, eta)?,
                _ => solve_entropy(&laplacian, &degrees, eta)?,
            }
        }
        PenaltyArg::None => solve_unregularized(&laplacian, &degrees)?,
    };
    let out = EstimateOutput {
        penalty: solution.penalty.to_string(),
        eta: solution.eta.is_finite().then_some(solution.eta),
        nu: solution.nu,
        trace: solution.theta_hat.trace(),
        disconnected: solution.disconnected,
        n: graph.node_count(),
        theta: solution.theta_hat.to_rows(),
    };
    write_json_atomic(&args.out, &out)?;
    Manifest::new(
        None,
        json!({
            "graph": args.graph,
            "penalty": args.penalty.name(),
            "eta": args.eta,
        }),
        vec![args.out.clone()],
    )
    .write(&args.out)?;
    Ok(())
}

#[derive(Serialize)]
struct PartitionOutput {
    mode: String,
    threshold: Option<f64>,
    node: Option<usize>,
    side: Vec<usize>,
    complement: Vec<usize>,
    conductance: Option<f64>,
}

fn cmd_partition(args: PartitionArgs) -> CmdResult {
    let graph = read_graph(&args.graph)?;
    let laplacian = normalized_laplacian(&graph)?;
    let out = if let Some(node) = args.local_node {
        if node >= graph.node_count() {
            return Err(format!("node {node} out of range").into());
        }
        let l_plus = pseudoinverse(&laplacian, DEFAULT_RANK_TOL)?;
        let members = lapreg::local_partition(&l_plus, node, args.threshold);
        let complement: Vec<usize> = (0..graph.node_count())
            .filter(|v| !members.contains(v))
            .collect();
        let conductance_value = conductance(&graph, &members).ok();
        PartitionOutput {
            mode: "local".into(),
            threshold: Some(args.threshold),
            node: Some(node),
            side: members.into_iter().collect(),
            complement,
            conductance: conductance_value,
        }
    } else {
        let spec = eig_sym(&laplacian)?;
        let fiedler: Vec<f64> = spec.eigenvectors.column(1).iter().copied().collect();
        let cut = if args.best {
            best_sweep_cut(&graph, &fiedler)?
        } else {
            let mut cut = sweep_cut(&fiedler, args.threshold);
            cut.conductance = conductance(&graph, &cut.side_c).ok();
            cut
        };
        PartitionOutput {
            mode: if args.best {
                "best-sweep".into()
            } else {
                "sweep".into()
            },
            threshold: (!args.best).then_some(args.threshold),
            node: None,
            side: cut.side_c.iter().copied().collect(),
            complement: cut.side_complement.iter().copied().collect(),
            conductance: cut.conductance,
        }
    };
    write_json_atomic(&args.out, &out)?;
    Manifest::new(None, json!({ "graph": args.graph }), vec![args.out.clone()])
        .write(&args.out)?;
    Ok(())
}

fn sweep_to_files(config: &ExperimentConfig, out: &Path, seed: u64) -> CmdResult {
    let result = run_error_sweep(config)?;
    let mut csv = Vec::new();
    experiments::csv::write_sweep(&result.records, &mut csv)?;
    write_atomic(out, &csv)?;
    let mirror = out.with_extension("json");
    write_json_atomic(
        &mirror,
        &json!({
            "tool": "lapreg",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": config,
            "records": result.records,
            "cells": result.cells,
        }),
    )?;
    Manifest::new(Some(seed), config, vec![out.to_path_buf(), mirror]).write(out)?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let config = ExperimentConfig {
        width: args.width,
        height: args.height,
        swap_counts: args.swaps.clone(),
        m_over_mu: args.m_over_mu.clone(),
        eta_grid: eta_log_grid(args.eta_min, args.eta_max, args.eta_points),
        replicates: args.replicates,
        base_seed: args.seed,
        norm: args.norm.parse::<ErrorNorm>()?,
        workers: resolve_workers(args.workers),
    };
    sweep_to_files(&config, &args.out, args.seed)
}

enum PanelKind {
    ErrorSweep(ExperimentConfig),
    OptimalEta(ExperimentConfig),
    OrderStats {
        shapes: Vec<f64>,
        k: usize,
        replicates: usize,
    },
    ThetaSpectrum {
        swap_counts: Vec<usize>,
        replicates: usize,
    },
}

/// Panel presets. Error panels follow the published parameter sets on the
/// 6×7 grid; the optimal-eta panel uses a grid wide enough to keep every
/// cell's minimum interior.
fn panel_config(
    which: &str,
    seed: u64,
    replicates: Option<usize>,
    workers: usize,
) -> Result<PanelKind, Box<dyn std::error::Error>> {
    let error_panel = |s: usize, m_ratio: f64, norm: ErrorNorm, reps: usize| {
        PanelKind::ErrorSweep(ExperimentConfig {
            width: 6,
            height: 7,
            swap_counts: vec![s],
            m_over_mu: vec![m_ratio],
            eta_grid: eta_log_grid(1e-2, 1e2, 50),
            replicates: reps,
            base_seed: seed,
            norm,
            workers,
        })
    };
    let reps = |default: usize| replicates.unwrap_or(default);
    Ok(match which {
        "1a" => PanelKind::OrderStats {
            shapes: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            k: 41,
            replicates: reps(500),
        },
        "1b" => PanelKind::ThetaSpectrum {
            swap_counts: vec![0, 1, 2, 4, 8, 16, 32, 64, 128, 256],
            replicates: reps(1000),
        },
        "2a" => error_panel(4, 0.2, ErrorNorm::Frobenius, reps(100)),
        "2b" => error_panel(4, 1.0, ErrorNorm::Frobenius, reps(100)),
        "2c" => error_panel(4, 2.0, ErrorNorm::Frobenius, reps(100)),
        "2d" => error_panel(0, 2.0, ErrorNorm::Frobenius, reps(100)),
        "2e" => error_panel(32, 2.0, ErrorNorm::Frobenius, reps(100)),
        "2f" => PanelKind::OptimalEta(ExperimentConfig {
            width: 6,
            height: 7,
            swap_counts: vec![0, 4, 32],
            m_over_mu: vec![0.2, 0.5, 1.0, 2.0, 4.0],
            eta_grid: eta_log_grid(3e-3, 3.0, 60),
            replicates: reps(100),
            base_seed: seed,
            norm: ErrorNorm::Frobenius,
            workers,
        }),
        "3a" => error_panel(0, 0.2, ErrorNorm::Spectral, reps(100)),
        "3b" => error_panel(4, 0.2, ErrorNorm::Spectral, reps(100)),
        "3c" => error_panel(32, 0.2, ErrorNorm::Spectral, reps(100)),
        "3d" => error_panel(0, 2.0, ErrorNorm::Spectral, reps(100)),
        "3e" => error_panel(4, 2.0, ErrorNorm::Spectral, reps(100)),
        "3f" => error_panel(32, 2.0, ErrorNorm::Spectral, reps(100)),
        other => {
            return Err(format!(
                "unknown figure id '{other}' (expected one of 1a, 1b, 2a-2f, 3a-3f)"
            )
            .into())
        }
    })
}

fn cmd_figure(args: FigureArgs) -> CmdResult {
    let workers = resolve_workers(args.workers);
    let panel = panel_config(&args.which, args.seed, args.replicates, workers)?;
    match panel {
        PanelKind::ErrorSweep(config) => sweep_to_files(&config, &args.out, args.seed)?,
        PanelKind::OptimalEta(config) => {
            let sweep = run_error_sweep(&config)?;
            let records = optimal_eta_from_records(&config, &sweep.records)?;
            let mut csv = Vec::new();
            experiments::csv::write_optimal_eta(&records, &mut csv)?;
            write_atomic(&args.out, &csv)?;
            let mirror = args.out.with_extension("json");
            write_json_atomic(
                &mirror,
                &json!({
                    "tool": "lapreg",
                    "version": env!("CARGO_PKG_VERSION"),
                    "seed": args.seed,
                    "config": &config,
                    "records": records,
                    "cells": sweep.cells,
                }),
            )?;
            Manifest::new(Some(args.seed), &config, vec![args.out.clone(), mirror])
                .write(&args.out)?;
        }
        PanelKind::OrderStats {
            shapes,
            k,
            replicates,
        } => {
            let stats = run_prior_order_stats(&shapes, k, replicates, args.seed, workers)?;
            let mut csv = Vec::new();
            experiments::csv::write_order_stats(&stats, &mut csv)?;
            write_atomic(&args.out, &csv)?;
            let mirror = args.out.with_extension("json");
            write_json_atomic(
                &mirror,
                &json!({
                    "tool": "lapreg",
                    "version": env!("CARGO_PKG_VERSION"),
                    "seed": args.seed,
                    "stats": stats,
                }),
            )?;
            Manifest::new(
                Some(args.seed),
                json!({ "shapes": stats.shapes, "k": k, "replicates": replicates }),
                vec![args.out.clone(), mirror],
            )
            .write(&args.out)?;
        }
        PanelKind::ThetaSpectrum {
            swap_counts,
            replicates,
        } => {
            let table = run_theta_spectrum(6, 7, &swap_counts, replicates, args.seed, workers)?;
            let mut csv = Vec::new();
            experiments::csv::write_theta_spectrum(&table, &mut csv)?;
            write_atomic(&args.out, &csv)?;
            let mirror = args.out.with_extension("json");
            write_json_atomic(
                &mirror,
                &json!({
                    "tool": "lapreg",
                    "version": env!("CARGO_PKG_VERSION"),
                    "seed": args.seed,
                    "table": table,
                }),
            )?;
            Manifest::new(
                Some(args.seed),
                json!({ "swap_counts": swap_counts, "replicates": replicates }),
                vec![args.out.clone(), mirror],
            )
            .write(&args.out)?;
        }
    }
    Ok(())
}
