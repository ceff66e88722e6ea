//! Wishart likelihood, Dirichlet spectral prior, posterior density, the
//! MAP↔regularized-solver mapping, and the edge-incidence sampling model that
//! motivates the Wishart approximation.
//!
//! All densities are unnormalized log-densities unless stated otherwise;
//! constants that do not depend on the free argument are dropped.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::spectral::{eig_sym, pseudodeterminant, pseudoinverse, DEFAULT_RANK_TOL};

const SUPPORT_TOL: f64 = 1e-8;

/// Bundle defining the observation model: Wishart scale `m`, symmetric
/// Dirichlet shape `alpha_shape`, and the degree vector of the observed
/// graph (which fixes the support of the prior and likelihood).
#[derive(Clone, Debug)]
pub struct BayesModel {
    pub m: f64,
    pub alpha_shape: f64,
    pub d: Vec<f64>,
}

impl BayesModel {
    pub fn new(m: f64, alpha_shape: f64, d: Vec<f64>) -> Result<Self> {
        let n = d.len();
        if !(m.is_finite() && m >= (n as f64) - 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Wishart scale must satisfy m ≥ n−1 = {}, got {m}",
                n - 1
            )));
        }
        if !(alpha_shape.is_finite() && alpha_shape > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet shape must be positive, got {alpha_shape}"
            )));
        }
        Ok(BayesModel { m, alpha_shape, d })
    }

    /// D^{1/2}1 for the observed degrees.
    pub fn sqrt_degrees(&self) -> Vec<f64> {
        self.d.iter().map(|&x| x.max(0.0).sqrt()).collect()
    }
}

/// Trace-normalized pseudoinverse of a Laplacian: τ = Tr(𝓛⁺), Θ = 𝓛⁺/τ.
#[derive(Clone, Debug)]
pub struct ThetaDecomp {
    pub tau: f64,
    pub theta: SymMatrix,
}

pub fn theta_of(lap: &SymMatrix) -> Result<ThetaDecomp> {
    let pinv = pseudoinverse(lap, DEFAULT_RANK_TOL)?;
    let tau = pinv.trace();
    if tau <= 0.0 {
        return Err(Error::Degenerate(
            "Laplacian has rank zero; no normalized pseudoinverse".into(),
        ));
    }
    Ok(ThetaDecomp {
        tau,
        theta: pinv.scale(1.0 / tau),
    })
}

/// Dominant nullspace direction of a PSD matrix (unit eigenvector of the
/// smallest eigenvalue).
fn null_direction(a: &SymMatrix) -> Result<Vec<f64>> {
    let spec = eig_sym(a)?;
    Ok(spec.eigenvectors.column(0).iter().copied().collect())
}

/// Unnormalized log of the scaled-Wishart conditional density,
/// log p(L | 𝓛) = −(m/2)·Tr(L 𝓛⁺) − (m/2)·log|𝓛|, with |·| the
/// pseudodeterminant. The L- and dimension-dependent constant is dropped.
pub fn wishart_log_density(l_obs: &SymMatrix, l_pop: &SymMatrix, m: f64) -> Result<f64> {
    if l_obs.order() != l_pop.order() {
        return Err(Error::DimensionMismatch {
            expected: l_pop.order(),
            got: l_obs.order(),
        });
    }
    // both matrices must annihilate the same direction
    let null = null_direction(l_pop)?;
    let movement = l_obs.matvec(&null);
    let defect = movement.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if defect > SUPPORT_TOL * l_obs.max_abs().max(1.0) {
        return Err(Error::SupportViolation(format!(
            "observed and population Laplacians have different nullspaces (defect {defect:.3e})"
        )));
    }
    let pinv = pseudoinverse(l_pop, DEFAULT_RANK_TOL)?;
    let pd = pseudodeterminant(l_pop, DEFAULT_RANK_TOL)?;
    Ok(-0.5 * m * l_obs.trace_product(&pinv) - 0.5 * m * pd.log)
}

/// Draw from (1/m)·Wishart(𝓛, m): the average of `m` outer products of
/// zero-mean Gaussian vectors with covariance 𝓛, factored through the
/// eigendecomposition (the covariance is rank-deficient, so a Cholesky
/// factorization would not apply).
pub fn sample_wishart(l_pop: &SymMatrix, m: usize, rng: &mut impl Rng) -> Result<SymMatrix> {
    let n = l_pop.order();
    if m + 1 < n {
        return Err(Error::InvalidParameter(format!(
            "Wishart scale m = {m} below n−1 = {}; density undefined",
            n - 1
        )));
    }
    gaussian_outer_average(l_pop, m, rng)
}

/// Symmetric Dirichlet log-density on the open simplex, including the
/// normalizer log Γ(kα) − k log Γ(α).
pub fn dirichlet_log_density(lam: &[f64], alpha_shape: f64) -> Result<f64> {
    if !(alpha_shape.is_finite() && alpha_shape > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet shape must be positive, got {alpha_shape}"
        )));
    }
    let k = lam.len();
    if k == 0 {
        return Err(Error::InvalidParameter("empty simplex vector".into()));
    }
    let sum: f64 = lam.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || lam.iter().any(|&x| x <= 0.0) {
        return Err(Error::SupportViolation(format!(
            "vector is not in the open simplex (sum {sum})"
        )));
    }
    let kf = k as f64;
    let normalizer = ln_gamma(kf * alpha_shape) - kf * ln_gamma(alpha_shape);
    Ok(normalizer + (alpha_shape - 1.0) * lam.iter().map(|x| x.ln()).sum::<f64>())
}

/// Sample a symmetric Dirichlet vector by the gamma-ratio construction.
pub fn sample_dirichlet(alpha_shape: f64, k: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(alpha_shape.is_finite() && alpha_shape > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet shape must be positive, got {alpha_shape}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if k == 1 {
        return Ok(vec![1.0]);
    }
    let gamma = Gamma::new(alpha_shape, 1.0)
        .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        // underflow to an all-zero draw is possible for tiny shapes; redraw
        if total > 0.0 {
            return Ok(draws.into_iter().map(|x| x / total).collect());
        }
    }
}

/// Unnormalized log-posterior of a population Laplacian given an observed
/// one: Wishart likelihood plus the Dirichlet spectral prior
/// U(𝓛) = −(α−1)·log|Θ|, with a flat prior on the scale τ.
pub fn posterior_log_density(
    l_pop: &SymMatrix,
    l_obs: &SymMatrix,
    model: &BayesModel,
) -> Result<f64> {
    let n = l_pop.order();
    if model.d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: model.d.len(),
            got: n,
        });
    }
    // support checks: PSD, rank n−1, and 𝓛 D^{1/2}1 = 0 for the observed degrees
    let spec = eig_sym(l_pop)?;
    let lmax = spec.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if spec.eigenvalues[0] < -SUPPORT_TOL * lmax.max(1.0) {
        return Err(Error::SupportViolation(
            "population Laplacian is not positive semidefinite".into(),
        ));
    }
    let rank = spec
        .eigenvalues
        .iter()
        .filter(|&&x| x > DEFAULT_RANK_TOL * lmax)
        .count();
    if rank != n - 1 {
        return Err(Error::SupportViolation(format!(
            "population Laplacian has rank {rank}, expected {}",
            n - 1
        )));
    }
    let q = model.sqrt_degrees();
    let lq = l_pop.matvec(&q);
    let q_norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let defect = lq.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if defect > SUPPORT_TOL * lmax.max(1.0) * q_norm.max(1.0) {
        return Err(Error::SupportViolation(format!(
            "population Laplacian does not annihilate D^{{1/2}}1 (defect {defect:.3e})"
        )));
    }

    let likelihood = wishart_log_density(l_obs, l_pop, model.m)?;
    let decomp = theta_of(l_pop)?;
    let theta_logdet = pseudodeterminant(&decomp.theta, DEFAULT_RANK_TOL)?.log;
    Ok(likelihood + (model.alpha_shape - 1.0) * theta_logdet)
}

/// Regularization scale matching the MAP estimate: η = m·τ̂ / (m + 2(α−1)).
pub fn eta_map(m: f64, alpha_shape: f64, tau_hat: f64) -> Result<f64> {
    let denom = m + 2.0 * (alpha_shape - 1.0);
    if denom <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "m + 2(α−1) = {denom} must be positive; prior too sharp for this scale"
        )));
    }
    if !(tau_hat.is_finite() && tau_hat > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau_hat}"
        )));
    }
    Ok(m * tau_hat / denom)
}

/// Generalized mapping for priors of the form exp{−q(τ)·G(Θ)}:
/// η = m·τ̂ / (2·q(τ̂)).
pub fn eta_map_general(m: f64, tau_hat: f64, q: impl Fn(f64) -> f64) -> Result<f64> {
    let q_val = q(tau_hat);
    if !(q_val.is_finite() && q_val > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "q(τ) must be positive over the support, got {q_val}"
        )));
    }
    if !(tau_hat.is_finite() && tau_hat > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau_hat}"
        )));
    }
    Ok(m * tau_hat / (2.0 * q_val))
}

/// One edge-incidence draw and its aggregate: sample `m` edges i.i.d. with
/// probabilities `omega`, build signed incidence vectors x_i = ±(e_u − e_v),
/// and return (1/m)·Σ x_i x_i' along with the x_i themselves.
pub fn sample_edge_incidence(
    edges: &[(usize, usize)],
    omega: &[f64],
    n: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Result<(SymMatrix, Vec<Vec<f64>>)> {
    if edges.is_empty() {
        return Err(Error::InvalidParameter("empty edge set".into()));
    }
    if edges.len() != omega.len() {
        return Err(Error::DimensionMismatch {
            expected: edges.len(),
            got: omega.len(),
        });
    }
    let total: f64 = omega.iter().sum();
    if (total - 1.0).abs() > 1e-9 || omega.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidParameter(
            "edge probabilities must be nonnegative and sum to 1".into(),
        ));
    }
    // cumulative table for inverse-CDF sampling
    let mut cdf = Vec::with_capacity(omega.len());
    let mut acc = 0.0;
    for &w in omega {
        acc += w;
        cdf.push(acc);
    }
    let mut l0_hat = SymMatrix::zeros(n);
    let mut samples = Vec::with_capacity(m);
    let scale = 1.0 / m as f64;
    for _ in 0..m {
        let u: f64 = rng.gen();
        let idx = cdf.partition_point(|&c| c < u).min(edges.len() - 1);
        let (a, b) = edges[idx];
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let mut x = vec![0.0; n];
        x[a] = sign;
        x[b] = -sign;
        // outer product update: only four entries are affected
        l0_hat.set(a, a, l0_hat.get(a, a) + scale);
        l0_hat.set(b, b, l0_hat.get(b, b) + scale);
        l0_hat.set(a, b, l0_hat.get(a, b) - scale);
        samples.push(x);
    }
    Ok((l0_hat, samples))
}

/// Gaussian surrogate for the edge-incidence model: (1/m)·Σ x̃_i x̃_i' with
/// x̃_i ~ Normal(0, 𝓛₀), i.e. a (1/m)·Wishart(𝓛₀, m) draw.
pub fn gaussian_surrogate(
    l0_pop: &SymMatrix,
    m: usize,
    rng: &mut impl Rng,
) -> Result<SymMatrix> {
    let pd = pseudodeterminant(l0_pop, DEFAULT_RANK_TOL)?;
    if m < pd.rank {
        return Err(Error::InvalidParameter(format!(
            "need m ≥ rank = {}, got {m}",
            pd.rank
        )));
    }
    gaussian_outer_average(l0_pop, m, rng)
}

fn gaussian_outer_average(
    cov: &SymMatrix,
    m: usize,
    rng: &mut impl Rng,
) -> Result<SymMatrix> {
    let n = cov.order();
    let spec = eig_sym(cov)?;
    let lmax = spec.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let cut = DEFAULT_RANK_TOL * lmax;
    // factor F = V Λ^{1/2} on the retained modes
    let cols: Vec<(usize, f64)> = spec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l > cut)
        .map(|(i, &l)| (i, l.sqrt()))
        .collect();
    let mut out = SymMatrix::zeros(n);
    let mut x = vec![0.0; n];
    for _ in 0..m {
        for xi in x.iter_mut() {
            *xi = 0.0;
        }
        for &(col, root) in &cols {
            let z: f64 = StandardNormal.sample(rng);
            let zr = z * root;
            for r in 0..n {
                x[r] += zr * spec.eigenvectors[(r, col)];
            }
        }
        for i in 0..n {
            for j in 0..=i {
                out.set(i, j, out.get(i, j) + x[i] * x[j]);
            }
        }
    }
    Ok(out.scale(1.0 / m as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::graph::{combinatorial_laplacian, generate_lattice, normalized_laplacian, Graph};
    use crate::spectral::frobenius_norm;

    fn complete_graph(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v, 1.0).unwrap();
            }
        }
        g
    }

    #[test]
    fn theta_of_examples() {
        let k4 = complete_graph(4);
        let l = normalized_laplacian(&k4).unwrap();
        let decomp = theta_of(&l).unwrap();
        assert!((decomp.tau - 9.0 / 4.0).abs() < 1e-10);
        let expected = SymMatrix::from_fn(4, |i, j| {
            if i == j {
                0.75 / 3.0
            } else {
                -0.25 / 3.0
            }
        });
        assert!(frobenius_norm(&decomp.theta.sub(&expected)) < 1e-10);

        let mut diag = SymMatrix::zeros(2);
        diag.set(0, 0, 2.0);
        let decomp = theta_of(&diag).unwrap();
        assert!((decomp.tau - 0.5).abs() < 1e-12);
        assert!((decomp.theta.get(0, 0) - 1.0).abs() < 1e-12);

        assert!(theta_of(&SymMatrix::zeros(3)).is_err());
    }

    #[test]
    fn theta_eigenvalues_sum_to_one() {
        let g = generate_lattice(4, 3).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let decomp = theta_of(&l).unwrap();
        assert!((decomp.theta.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn wishart_density_at_mode() {
        let g = generate_lattice(3, 2).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let m = 20.0;
        let at_mode = wishart_log_density(&l, &l, m).unwrap();
        let pd = pseudodeterminant(&l, DEFAULT_RANK_TOL).unwrap();
        let expected = -0.5 * m * (pd.rank as f64 + pd.log);
        assert!((at_mode - expected).abs() < 1e-8);
    }

    #[test]
    fn wishart_density_monotone_in_trace_term() {
        let g = generate_lattice(3, 2).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        // scaling the observation up increases Tr(L_obs 𝓛⁺) and lowers the density
        let denser = l.scale(2.0);
        let base = wishart_log_density(&l, &l, 10.0).unwrap();
        let scaled = wishart_log_density(&denser, &l, 10.0).unwrap();
        assert!(scaled < base);
    }

    #[test]
    fn wishart_density_rejects_nullspace_mismatch() {
        let g = complete_graph(4);
        let l = normalized_laplacian(&g).unwrap();
        let mut shifted = l.clone();
        // perturb so that D^{1/2}1 is no longer annihilated
        shifted.set(0, 0, shifted.get(0, 0) + 0.5);
        assert!(matches!(
            wishart_log_density(&shifted, &l, 10.0),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn wishart_draws_live_on_the_support() {
        let g = complete_graph(4);
        let l = normalized_laplacian(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = crate::graph::sqrt_degree_vector(&g);
        for _ in 0..20 {
            let draw = sample_wishart(&l, 6, &mut rng).unwrap();
            let defect = draw
                .matvec(&q)
                .iter()
                .fold(0.0f64, |a, &x| a.max(x.abs()));
            assert!(defect < 1e-8, "defect {defect}");
        }
        // minimal scale has full complement rank
        let draw = sample_wishart(&l, 3, &mut rng).unwrap();
        let spec = eig_sym(&draw).unwrap();
        let rank = spec
            .eigenvalues
            .iter()
            .filter(|&&x| x > 1e-10 * spec.eigenvalues[3].abs())
            .count();
        assert_eq!(rank, 3);
        assert!(sample_wishart(&l, 2, &mut rng).is_err());
    }

    #[test]
    fn wishart_mean_matches_population() {
        let g = complete_graph(4);
        let l = normalized_laplacian(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let reps = 10_000usize;
        let m = 8;
        let mut mean = SymMatrix::zeros(4);
        let mut sq = SymMatrix::zeros(4);
        for _ in 0..reps {
            let draw = sample_wishart(&l, m, &mut rng).unwrap();
            for i in 0..4 {
                for j in 0..=i {
                    mean.set(i, j, mean.get(i, j) + draw.get(i, j));
                    sq.set(i, j, sq.get(i, j) + draw.get(i, j) * draw.get(i, j));
                }
            }
        }
        let inv = 1.0 / reps as f64;
        for i in 0..4 {
            for j in 0..=i {
                let mu = mean.get(i, j) * inv;
                let var = (sq.get(i, j) * inv - mu * mu).max(0.0);
                let se = (var * inv).sqrt();
                let dev = (mu - l.get(i, j)).abs();
                assert!(
                    dev <= 3.0 * se + 1e-12,
                    "entry ({i},{j}): dev {dev:.2e} vs 3se {:.2e}",
                    3.0 * se
                );
            }
        }
    }

    #[test]
    fn dirichlet_density_examples() {
        // flat case: constant in lam
        let a = dirichlet_log_density(&[0.2, 0.3, 0.5], 1.0).unwrap();
        let b = dirichlet_log_density(&[0.1, 0.1, 0.8], 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);

        // α = 2, two components: density ∝ λ₁λ₂ maximized at (1/2, 1/2)
        let mid = dirichlet_log_density(&[0.5, 0.5], 2.0).unwrap();
        let off = dirichlet_log_density(&[0.3, 0.7], 2.0).unwrap();
        assert!(mid > off);

        assert!(dirichlet_log_density(&[0.5, 0.6], 2.0).is_err());
        assert!(dirichlet_log_density(&[1.0, 0.0], 2.0).is_err());
        assert!(dirichlet_log_density(&[0.5, 0.5], 0.0).is_err());
    }

    #[test]
    fn dirichlet_sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(sample_dirichlet(0.7, 1, &mut rng).unwrap(), vec![1.0]);

        let k = 5usize;
        let alpha = 0.8;
        let reps = 100_000usize;
        let mut mean = vec![0.0; k];
        let mut sq = vec![0.0; k];
        for _ in 0..reps {
            let v = sample_dirichlet(alpha, k, &mut rng).unwrap();
            let sum: f64 = v.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            for (i, &x) in v.iter().enumerate() {
                mean[i] += x;
                sq[i] += x * x;
            }
        }
        let inv = 1.0 / reps as f64;
        let exact_mean = 1.0 / k as f64;
        let exact_var = exact_mean * (1.0 - exact_mean) / (k as f64 * alpha + 1.0);
        for i in 0..k {
            let mu = mean[i] * inv;
            let var = sq[i] * inv - mu * mu;
            let se = (exact_var * inv).sqrt();
            assert!((mu - exact_mean).abs() <= 3.0 * se, "component {i} mean {mu}");
            let rel = (var - exact_var).abs() / exact_var;
            assert!(rel < 0.05, "component {i} variance off by {rel}");
        }
    }

    #[test]
    fn posterior_is_additive_and_collapses_for_flat_prior() {
        let g = complete_graph(4);
        let l_pop = normalized_laplacian(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l_obs = sample_wishart(&l_pop, 12, &mut rng).unwrap();
        let model = BayesModel::new(12.0, 2.5, g.degrees()).unwrap();

        let posterior = posterior_log_density(&l_pop, &l_obs, &model).unwrap();
        let likelihood = wishart_log_density(&l_obs, &l_pop, model.m).unwrap();
        let theta = theta_of(&l_pop).unwrap();
        let prior = (model.alpha_shape - 1.0)
            * pseudodeterminant(&theta.theta, DEFAULT_RANK_TOL).unwrap().log;
        assert!((posterior - (likelihood + prior)).abs() < 1e-9);

        // α = 1: posterior equals likelihood up to the same constant for all 𝓛
        let flat = BayesModel::new(12.0, 1.0, g.degrees()).unwrap();
        let scaled_pop = {
            // another member of the support: scale the spectrum (keeps nullspace)
            let spec = eig_sym(&l_pop).unwrap();
            spec.apply(|lam| if lam > 1e-9 { 1.7 * lam } else { 0.0 })
        };
        let d1 = posterior_log_density(&l_pop, &l_obs, &flat).unwrap()
            - wishart_log_density(&l_obs, &l_pop, flat.m).unwrap();
        let d2 = posterior_log_density(&scaled_pop, &l_obs, &flat).unwrap()
            - wishart_log_density(&l_obs, &scaled_pop, flat.m).unwrap();
        assert!((d1 - d2).abs() < 1e-9);
    }

    #[test]
    fn posterior_rejects_support_violations() {
        let g = complete_graph(4);
        let l = normalized_laplacian(&g).unwrap();
        let model = BayesModel::new(10.0, 1.0, g.degrees()).unwrap();
        // rank-deficient candidate
        assert!(matches!(
            posterior_log_density(&SymMatrix::zeros(4), &l, &model),
            Err(Error::SupportViolation(_) | Error::Degenerate(_))
        ));
    }

    #[test]
    fn eta_map_examples() {
        assert!((eta_map(50.0, 1.0, 2.5).unwrap() - 2.5).abs() < 1e-12);
        assert!((eta_map(1e9, 4.0, 2.5).unwrap() - 2.5).abs() < 1e-6);
        assert!((eta_map(100.0, 11.0, 1.0).unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert!(eta_map(10.0, -5.0, 1.0).is_err());
        assert!(eta_map(10.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn eta_map_monotonicity_in_m() {
        let tau = 3.0;
        // increasing in m for α > 1, decreasing for α < 1
        let alpha_hi = 4.0;
        let alpha_lo = 0.5;
        let ms = [5.0, 10.0, 50.0, 500.0];
        let mut prev_hi = 0.0;
        let mut prev_lo = f64::INFINITY;
        for &m in &ms {
            let hi = eta_map(m, alpha_hi, tau).unwrap();
            let lo = eta_map(m, alpha_lo, tau).unwrap();
            assert!(hi > prev_hi);
            assert!(lo < prev_lo);
            prev_hi = hi;
            prev_lo = lo;
        }
    }

    #[test]
    fn eta_map_general_recovers_special_case() {
        let (m, alpha, tau) = (40.0, 3.0, 1.7);
        let special = eta_map(m, alpha, tau).unwrap();
        let general = eta_map_general(m, tau, |_| 0.5 * m + alpha - 1.0).unwrap();
        assert!((special - general).abs() < 1e-12);
        assert!((eta_map_general(m, tau, |_| 0.5 * m).unwrap() - tau).abs() < 1e-12);
        assert!((eta_map_general(m, tau, |_| m).unwrap() - 0.5 * tau).abs() < 1e-12);
        assert!(eta_map_general(m, tau, |_| -1.0).is_err());
    }

    #[test]
    fn edge_incidence_draws_have_zero_row_sums() {
        let g = generate_lattice(3, 2).unwrap();
        let edges: Vec<(usize, usize)> =
            g.edges().iter().map(|&(u, v, _)| (u, v)).collect();
        let omega = vec![1.0 / edges.len() as f64; edges.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (l0_hat, samples) =
            sample_edge_incidence(&edges, &omega, g.node_count(), 50, &mut rng).unwrap();
        assert_eq!(samples.len(), 50);
        for i in 0..g.node_count() {
            let row: f64 = (0..g.node_count()).map(|j| l0_hat.get(i, j)).sum();
            assert!(row.abs() < 1e-12);
        }
        assert!(sample_edge_incidence(&[], &[], 2, 5, &mut rng).is_err());
    }

    #[test]
    fn edge_incidence_first_moment_vanishes() {
        let g = generate_lattice(3, 2).unwrap();
        let edges: Vec<(usize, usize)> =
            g.edges().iter().map(|&(u, v, _)| (u, v)).collect();
        let omega = vec![1.0 / edges.len() as f64; edges.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (_, samples) =
            sample_edge_incidence(&edges, &omega, g.node_count(), 20_000, &mut rng).unwrap();
        let n = g.node_count();
        let mut mean = vec![0.0; n];
        for x in &samples {
            for (i, &xi) in x.iter().enumerate() {
                mean[i] += xi;
            }
        }
        for mu in mean.iter_mut() {
            *mu /= samples.len() as f64;
        }
        // each coordinate is ±1 with probability d_ω(u); se ≲ sqrt(1/m)
        for (i, &mu) in mean.iter().enumerate() {
            assert!(mu.abs() < 0.02, "coordinate {i}: mean {mu}");
        }
    }

    #[test]
    fn gaussian_surrogate_nullspace_and_guard() {
        let g = complete_graph(4);
        let l0 = combinatorial_laplacian(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draw = gaussian_surrogate(&l0, 5, &mut rng).unwrap();
        let ones = vec![1.0; 4];
        let defect = draw
            .matvec(&ones)
            .iter()
            .fold(0.0f64, |a, &x| a.max(x.abs()));
        assert!(defect < 1e-8);
        assert!(gaussian_surrogate(&l0, 2, &mut rng).is_err());
    }

    #[test]
    fn second_moments_of_the_two_models_differ() {
        // On K₃ with uniform weights the diagonal second moments differ:
        // edge model Var((xx')_{uu}) = p(1−p) with p = 2/3, Gaussian model
        // Var(x̃_u²) = 2·(2/3)². The documented discrepancy check.
        let g = complete_graph(3);
        let edges: Vec<(usize, usize)> =
            g.edges().iter().map(|&(u, v, _)| (u, v)).collect();
        let omega = vec![1.0 / 3.0; 3];
        // population Laplacian of the ω-weighted graph
        let mut weighted = Graph::new(3);
        for &(u, v) in &edges {
            weighted.add_edge(u, v, 1.0 / 3.0).unwrap();
        }
        let l0 = combinatorial_laplacian(&weighted);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let reps = 40_000usize;
        let (mut inc_sq, mut gauss_sq) = (0.0f64, 0.0f64);
        for _ in 0..reps {
            let (_, samples) = sample_edge_incidence(&edges, &omega, 3, 1, &mut rng).unwrap();
            let x0 = samples[0][0];
            inc_sq += (x0 * x0 - l0.get(0, 0)).powi(2);
        }
        let spec = eig_sym(&l0).unwrap();
        for _ in 0..reps {
            // single Gaussian vector with covariance l0
            let mut x0 = 0.0;
            for (k, &lam) in spec.eigenvalues.iter().enumerate() {
                if lam > 1e-12 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x0 += z * lam.sqrt() * spec.eigenvectors[(0, k)];
                }
            }
            gauss_sq += (x0 * x0 - l0.get(0, 0)).powi(2);
        }
        let inc_var = inc_sq / reps as f64;
        let gauss_var = gauss_sq / reps as f64;
        // 2/9 vs 8/9: they must differ by far more than Monte Carlo noise
        assert!((inc_var - 2.0 / 9.0).abs() < 0.02, "incidence var {inc_var}");
        assert!((gauss_var - 8.0 / 9.0).abs() < 0.06, "gaussian var {gauss_var}");
        assert!(gauss_var > 2.0 * inc_var);
    }

    #[test]
    fn model_construction_guards() {
        assert!(BayesModel::new(2.0, 1.0, vec![1.0; 4]).is_err()); // m < n−1
        assert!(BayesModel::new(5.0, 0.0, vec![1.0; 4]).is_err());
        assert!(BayesModel::new(5.0, 1.0, vec![1.0; 4]).is_ok());
    }
}
