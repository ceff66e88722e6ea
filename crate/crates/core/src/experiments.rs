//! Replicated experiment drivers: Dirichlet order statistics, the spectrum of
//! the normalized-pseudoinverse ensemble, and the error sweeps measuring how
//! regularization improves estimation from sampled edges.

use serde::Serialize;

use crate::bayes::theta_of;
use crate::error::{Error, Result};
use crate::graph::{edge_swap, generate_lattice, normalized_laplacian};
use crate::matrix::SymMatrix;
use crate::sampling::{sample_edges, sample_laplacian};
use crate::sdp::{solve_logdet_prepared, FeasibleEigen};
use crate::spectral::{eig_sym, frobenius_norm, spectral_norm, DEFAULT_RANK_TOL};
use crate::stream::{parallel_map_indexed, rng_for};

const TAG_ERROR_SWEEP: u64 = 1;
const TAG_THETA_SPECTRUM: u64 = 2;
const TAG_PRIOR_ORDER_STATS: u64 = 3;

/// Norm used by the relative error criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorNorm {
    Frobenius,
    Spectral,
}

impl std::str::FromStr for ErrorNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(ErrorNorm::Frobenius),
            "spectral" => Ok(ErrorNorm::Spectral),
            other => Err(Error::Parse(format!(
                "unknown norm '{other}' (expected frobenius or spectral)"
            ))),
        }
    }
}

fn matrix_norm(a: &SymMatrix, norm: ErrorNorm) -> Result<f64> {
    match norm {
        ErrorNorm::Frobenius => Ok(frobenius_norm(a)),
        ErrorNorm::Spectral => spectral_norm(a),
    }
}

/// Relative error ‖Θ − Θ̂_η‖ / ‖Θ − Θ̂‖ in the chosen norm. Values below 1
/// mean the regularized estimate beats the raw one.
pub fn relative_error(
    theta_pop: &SymMatrix,
    theta_reg: &SymMatrix,
    theta_unreg: &SymMatrix,
    norm: ErrorNorm,
) -> Result<f64> {
    let denom = matrix_norm(&theta_pop.sub(theta_unreg), norm)?;
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "unregularized estimate equals the population matrix".into(),
        ));
    }
    let num = matrix_norm(&theta_pop.sub(theta_reg), norm)?;
    Ok(num / denom)
}

/// Grid and replication parameters for the error sweeps.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub width: usize,
    pub height: usize,
    pub swap_counts: Vec<usize>,
    pub m_over_mu: Vec<f64>,
    /// Normalized regularization grid η/τ̄, ascending and positive.
    pub eta_grid: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
    pub norm: ErrorNorm,
    #[serde(skip)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::InvalidParameter(
                "grid dimensions must be at least 2".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("need at least one replicate".into()));
        }
        if self.swap_counts.is_empty() || self.m_over_mu.is_empty() || self.eta_grid.is_empty() {
            return Err(Error::InvalidParameter("empty experiment grid".into()));
        }
        if self.m_over_mu.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::InvalidParameter(
                "sampling ratios must be positive".into(),
            ));
        }
        let ascending = self
            .eta_grid
            .windows(2)
            .all(|w| w[0] < w[1]);
        if !ascending || self.eta_grid.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::InvalidParameter(
                "eta grid must be strictly positive and ascending".into(),
            ));
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        2 * self.width * self.height - self.width - self.height
    }
}

/// Logarithmically spaced grid between two positive ratios.
pub fn eta_log_grid(min_ratio: f64, max_ratio: f64, points: usize) -> Vec<f64> {
    assert!(min_ratio > 0.0 && max_ratio > min_ratio && points >= 2);
    let ratio = max_ratio / min_ratio;
    (0..points)
        .map(|i| min_ratio * ratio.powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// One cell of the sweep grid: statistics of the relative error over the
/// accepted replicates at a single η/τ̄.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub s: usize,
    pub m_over_mu: f64,
    pub eta_over_tau: f64,
    pub mean_rel_err: f64,
    pub std_rel_err: f64,
    pub n_reps: usize,
    pub n_rejected: usize,
}

/// Per-cell diagnostics for the JSON mirror.
#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub s: usize,
    pub m_over_mu: f64,
    pub m: usize,
    pub tau_bar: f64,
    pub n_rejected_draws: usize,
    pub n_degenerate_replicates: usize,
    pub n_disconnected_samples: usize,
    pub n_isolated_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub cells: Vec<CellSummary>,
}

struct Replicate {
    tau_pop: f64,
    theta_pop: SymMatrix,
    theta_unreg: SymMatrix,
    denom: f64,
    feasible: FeasibleEigen,
    rejected: usize,
    disconnected: bool,
    isolated: bool,
}

fn compute_replicate(
    config: &ExperimentConfig,
    s: usize,
    m: usize,
    tags: &[u64],
) -> Result<Replicate> {
    let mut rng = rng_for(config.base_seed, tags);
    let lattice = generate_lattice(config.width, config.height)?;
    let population = edge_swap(&lattice, s, &mut rng)?;
    let l_pop = normalized_laplacian(&population)?;
    let pop_decomp = theta_of(&l_pop)?;

    let draw = sample_edges(&population, m, &mut rng)?;
    let l_sample = sample_laplacian(&draw)?;
    let sample_decomp = theta_of(&l_sample)?;
    let degrees = draw.graph.degrees();
    let feasible = FeasibleEigen::new(&l_sample, &degrees)?;
    let denom = matrix_norm(
        &pop_decomp.theta.sub(&sample_decomp.theta),
        config.norm,
    )?;
    Ok(Replicate {
        tau_pop: pop_decomp.tau,
        theta_pop: pop_decomp.theta,
        theta_unreg: sample_decomp.theta,
        denom,
        disconnected: feasible.is_disconnected(),
        feasible,
        rejected: draw.rejected,
        isolated: draw.has_isolated,
    })
}

/// Replicates for one (s, m/μ) cell, with degenerate replicates (zero error
/// denominator) replaced by extra draws so that exactly `replicates` accepted
/// ones remain.
fn cell_replicates(
    config: &ExperimentConfig,
    s_idx: usize,
    m_idx: usize,
) -> Result<(Vec<Replicate>, usize)> {
    let s = config.swap_counts[s_idx];
    let m = ((config.m_over_mu[m_idx] * config.edge_count() as f64).round() as usize).max(1);
    let reps = config.replicates;
    let mut computed: Vec<Replicate> = parallel_map_indexed(config.workers, reps, |r| {
        compute_replicate(
            config,
            s,
            m,
            &[TAG_ERROR_SWEEP, s_idx as u64, m_idx as u64, r as u64],
        )
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut degenerate = 0usize;
    let mut next_index = reps as u64;
    for slot in 0..reps {
        while computed[slot].denom == 0.0 {
            degenerate += 1;
            if degenerate > 1000 {
                return Err(Error::Degenerate(
                    "too many degenerate replicates in one cell".into(),
                ));
            }
            computed[slot] = compute_replicate(
                config,
                s,
                m,
                &[TAG_ERROR_SWEEP, s_idx as u64, m_idx as u64, next_index],
            )?;
            next_index += 1;
        }
    }
    Ok((computed, degenerate))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Full error sweep over (s, m/μ, η/τ̄).
///
/// Two passes per cell: the population pseudoinverse traces of the accepted
/// replicates fix τ̄, then each replicate is solved at η = (η/τ̄)·τ̄ for every
/// grid point, reusing one eigendecomposition per replicate.
pub fn run_error_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for s_idx in 0..config.swap_counts.len() {
        for m_idx in 0..config.m_over_mu.len() {
            let (replicates, degenerate) = cell_replicates(config, s_idx, m_idx)?;
            let tau_bar =
                replicates.iter().map(|r| r.tau_pop).sum::<f64>() / replicates.len() as f64;
            let per_rep: Vec<Vec<f64>> =
                parallel_map_indexed(config.workers, replicates.len(), |r| {
                    let rep = &replicates[r];
                    config
                        .eta_grid
                        .iter()
                        .map(|&ratio| {
                            let sol = solve_logdet_prepared(&rep.feasible, ratio * tau_bar)?;
                            relative_error(
                                &rep.theta_pop,
                                &sol.theta_hat,
                                &rep.theta_unreg,
                                config.norm,
                            )
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .into_iter()
                .collect::<Result<_>>()?;

            let rejected_draws: usize = replicates.iter().map(|r| r.rejected).sum();
            let n_rejected = rejected_draws + degenerate;
            for (k, &ratio) in config.eta_grid.iter().enumerate() {
                let column: Vec<f64> = per_rep.iter().map(|row| row[k]).collect();
                let (mean, std) = mean_std(&column);
                records.push(SweepRecord {
                    s: config.swap_counts[s_idx],
                    m_over_mu: config.m_over_mu[m_idx],
                    eta_over_tau: ratio,
                    mean_rel_err: mean,
                    std_rel_err: std,
                    n_reps: replicates.len(),
                    n_rejected,
                });
            }
            cells.push(CellSummary {
                s: config.swap_counts[s_idx],
                m_over_mu: config.m_over_mu[m_idx],
                m: ((config.m_over_mu[m_idx] * config.edge_count() as f64).round() as usize)
                    .max(1),
                tau_bar,
                n_rejected_draws: rejected_draws,
                n_degenerate_replicates: degenerate,
                n_disconnected_samples: replicates.iter().filter(|r| r.disconnected).count(),
                n_isolated_samples: replicates.iter().filter(|r| r.isolated).count(),
            });
        }
    }
    Ok(SweepOutput { records, cells })
}

/// Error-minimizing η/τ̄ per (m/μ, s/μ) cell.
#[derive(Clone, Debug, Serialize)]
pub struct OptimalEtaRecord {
    pub m_over_mu: f64,
    pub s_over_mu: f64,
    pub eta_star_over_tau: f64,
}

/// Locate the argmin of the mean relative error on the η grid per cell.
/// A minimum on the grid boundary is an error: widen the grid and rerun.
pub fn run_optimal_eta(config: &ExperimentConfig) -> Result<Vec<OptimalEtaRecord>> {
    let sweep = run_error_sweep(config)?;
    optimal_eta_from_records(config, &sweep.records)
}

pub fn optimal_eta_from_records(
    config: &ExperimentConfig,
    records: &[SweepRecord],
) -> Result<Vec<OptimalEtaRecord>> {
    let mu = config.edge_count() as f64;
    let grid_len = config.eta_grid.len();
    let mut out = Vec::new();
    for &s in &config.swap_counts {
        for &m_ratio in &config.m_over_mu {
            let cell: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.s == s && r.m_over_mu == m_ratio)
                .collect();
            if cell.len() != grid_len {
                return Err(Error::InvalidParameter(format!(
                    "sweep records missing cells for s={s}, m/mu={m_ratio}"
                )));
            }
            let argmin = cell
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.mean_rel_err.partial_cmp(&b.1.mean_rel_err).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            if argmin == 0 || argmin == grid_len - 1 {
                return Err(Error::BoundaryMinimum {
                    index: argmin,
                    len: grid_len,
                });
            }
            out.push(OptimalEtaRecord {
                m_over_mu: m_ratio,
                s_over_mu: s as f64 / mu,
                eta_star_over_tau: cell[argmin].eta_over_tau,
            });
        }
    }
    Ok(out)
}

/// Mean sorted Dirichlet order statistics per shape value, sorted descending.
#[derive(Clone, Debug, Serialize)]
pub struct PriorOrderStats {
    pub shapes: Vec<f64>,
    pub k: usize,
    pub replicates: usize,
    /// One row per shape: mean of the sorted components (largest first).
    pub means: Vec<Vec<f64>>,
}

pub fn run_prior_order_stats(
    shapes: &[f64],
    k: usize,
    replicates: usize,
    base_seed: u64,
    workers: usize,
) -> Result<PriorOrderStats> {
    if shapes.is_empty() || k == 0 || replicates == 0 {
        return Err(Error::InvalidParameter(
            "need at least one shape, positive dimension, and replicates".into(),
        ));
    }
    let mut means = Vec::with_capacity(shapes.len());
    for (a_idx, &alpha) in shapes.iter().enumerate() {
        let sorted_draws: Vec<Vec<f64>> = parallel_map_indexed(workers, replicates, |r| {
            let mut rng = rng_for(base_seed, &[TAG_PRIOR_ORDER_STATS, a_idx as u64, r as u64]);
            let mut v = crate::bayes::sample_dirichlet(alpha, k, &mut rng)?;
            v.sort_by(|x, y| y.partial_cmp(x).unwrap());
            Ok(v)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let mut mean = vec![0.0; k];
        for draw in &sorted_draws {
            for (i, &x) in draw.iter().enumerate() {
                mean[i] += x;
            }
        }
        for x in mean.iter_mut() {
            *x /= replicates as f64;
        }
        means.push(mean);
    }
    Ok(PriorOrderStats {
        shapes: shapes.to_vec(),
        k,
        replicates,
        means,
    })
}

/// Mean sorted spectrum of Θ(𝓛) for the edge-swapped grid ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct ThetaSpectrum {
    pub swap_counts: Vec<usize>,
    pub mu: usize,
    pub replicates: usize,
    /// One row per swap count: mean nonzero eigenvalues of Θ, largest first.
    pub mean_eigenvalues: Vec<Vec<f64>>,
    /// Mean and standard deviation of the top gap statistic λ₍₁₎ − λ₍₃₎.
    pub gap_mean: Vec<f64>,
    pub gap_std: Vec<f64>,
}

pub fn run_theta_spectrum(
    width: usize,
    height: usize,
    swap_counts: &[usize],
    replicates: usize,
    base_seed: u64,
    workers: usize,
) -> Result<ThetaSpectrum> {
    if swap_counts.is_empty() || replicates == 0 {
        return Err(Error::InvalidParameter(
            "need at least one swap count and replicate".into(),
        ));
    }
    let n = width * height;
    let k = n - 1;
    let mut mean_eigenvalues = Vec::new();
    let mut gap_mean = Vec::new();
    let mut gap_std = Vec::new();
    for (s_idx, &s) in swap_counts.iter().enumerate() {
        let spectra: Vec<Vec<f64>> = parallel_map_indexed(workers, replicates, |r| {
            let mut rng = rng_for(base_seed, &[TAG_THETA_SPECTRUM, s_idx as u64, r as u64]);
            let lattice = generate_lattice(width, height)?;
            let g = edge_swap(&lattice, s, &mut rng)?;
            let l = normalized_laplacian(&g)?;
            let decomp = theta_of(&l)?;
            let spec = eig_sym(&decomp.theta)?;
            let lmax = spec.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            let mut nonzero: Vec<f64> = spec
                .eigenvalues
                .iter()
                .copied()
                .filter(|&x| x > DEFAULT_RANK_TOL * lmax)
                .collect();
            nonzero.sort_by(|x, y| y.partial_cmp(x).unwrap());
            // disconnected populations have fewer nonzero modes; pad with zeros
            nonzero.resize(k, 0.0);
            Ok(nonzero)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let mut mean = vec![0.0; k];
        let mut gaps = Vec::with_capacity(replicates);
        for row in &spectra {
            for (i, &x) in row.iter().enumerate() {
                mean[i] += x;
            }
            gaps.push(row[0] - row[2]);
        }
        for x in mean.iter_mut() {
            *x /= replicates as f64;
        }
        let (gm, gs) = mean_std(&gaps);
        mean_eigenvalues.push(mean);
        gap_mean.push(gm);
        gap_std.push(gs);
    }
    Ok(ThetaSpectrum {
        swap_counts: swap_counts.to_vec(),
        mu: 2 * width * height - width - height,
        replicates,
        mean_eigenvalues,
        gap_mean,
        gap_std,
    })
}

/// CSV writers. Floats are written with the shortest round-trip
/// representation, so identical runs produce identical bytes.
pub mod csv {
    use std::io::Write;

    use super::{OptimalEtaRecord, PriorOrderStats, SweepRecord, ThetaSpectrum};
    use crate::error::Result;

    pub fn write_sweep<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
        writeln!(
            out,
            "s,m_over_mu,eta_over_tau,mean_rel_err,std_rel_err,n_reps,n_rejected"
        )?;
        for r in records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.s, r.m_over_mu, r.eta_over_tau, r.mean_rel_err, r.std_rel_err, r.n_reps,
                r.n_rejected
            )?;
        }
        Ok(())
    }

    pub fn write_optimal_eta<W: Write>(records: &[OptimalEtaRecord], mut out: W) -> Result<()> {
        writeln!(out, "m_over_mu,s_over_mu,eta_star_over_tau")?;
        for r in records {
            writeln!(out, "{},{},{}", r.m_over_mu, r.s_over_mu, r.eta_star_over_tau)?;
        }
        Ok(())
    }

    pub fn write_order_stats<W: Write>(stats: &PriorOrderStats, mut out: W) -> Result<()> {
        writeln!(out, "alpha,order_index,mean_value")?;
        for (row, &alpha) in stats.shapes.iter().enumerate() {
            for (i, &v) in stats.means[row].iter().enumerate() {
                writeln!(out, "{},{},{}", alpha, i + 1, v)?;
            }
        }
        Ok(())
    }

    pub fn write_theta_spectrum<W: Write>(table: &ThetaSpectrum, mut out: W) -> Result<()> {
        writeln!(out, "s,s_over_mu,eig_index,mean_value")?;
        for (row, &s) in table.swap_counts.iter().enumerate() {
            let s_over_mu = s as f64 / table.mu as f64;
            for (i, &v) in table.mean_eigenvalues[row].iter().enumerate() {
                writeln!(out, "{},{},{},{}", s, s_over_mu, i + 1, v)?;
            }
        }
        Ok(())
    }
}
