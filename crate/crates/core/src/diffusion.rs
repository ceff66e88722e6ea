//! Diffusion operators on a graph: heat kernel, PageRank resolvent, and the
//! lazy random walk, as explicit dense matrices and seed-vector maps.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{normalized_laplacian, sqrt_degree_vector, Graph};
use crate::matrix::SymMatrix;
use crate::spectral::{eig_sym, matrix_exp_sym, Spectrum};

/// Validated diffusion parameters.
///
/// The Dirichlet shape parameter elsewhere in this crate is `alpha_shape`;
/// the lazy-walk holding probability here is `alpha_hold` to keep the two
/// distinct.
#[derive(Clone, Copy, Debug)]
pub struct DiffusionParams {
    pub gamma: f64,
    pub t: f64,
    pub alpha_hold: f64,
    pub steps: usize,
}

impl DiffusionParams {
    pub fn new(gamma: f64, t: f64, alpha_hold: f64, steps: usize) -> Result<Self> {
        check_gamma(gamma)?;
        check_time(t)?;
        check_hold(alpha_hold)?;
        Ok(DiffusionParams {
            gamma,
            t,
            alpha_hold,
            steps,
        })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "teleportation parameter must lie in (0,1), got {gamma}"
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heat time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

fn check_hold(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holding probability must lie in (0,1), got {alpha}"
        )));
    }
    Ok(())
}

/// Natural random walk transition matrix M = D^{−1} A. Row-stochastic, not
/// symmetric in general.
pub fn random_walk_matrix(g: &Graph) -> Result<DMatrix<f64>> {
    let d = g.degrees();
    if let Some(node) = d.iter().position(|&x| x <= 0.0) {
        return Err(Error::ZeroDegree { node });
    }
    let n = g.node_count();
    let a = g.adjacency();
    Ok(DMatrix::from_fn(n, n, |i, j| a.get(i, j) / d[i]))
}

/// Shared spectral machinery: all three operators are functions of the
/// normalized Laplacian conjugated by D^{±1/2}, so one eigendecomposition of
/// L serves a whole parameter sweep.
struct SimilarityBasis {
    spectrum: Spectrum,
    sqrt_d: Vec<f64>,
}

impl SimilarityBasis {
    fn new(g: &Graph) -> Result<Self> {
        let d = g.degrees();
        if let Some(node) = d.iter().position(|&x| x <= 0.0) {
            return Err(Error::ZeroDegree { node });
        }
        let l = normalized_laplacian(g)?;
        Ok(SimilarityBasis {
            spectrum: eig_sym(&l)?,
            sqrt_d: sqrt_degree_vector(g),
        })
    }

    /// D^{−1/2} · V f(Λ) V' · D^{1/2}
    fn conjugated(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let sym = self.spectrum.apply(f);
        let n = sym.order();
        DMatrix::from_fn(n, n, |i, j| sym.get(i, j) * self.sqrt_d[j] / self.sqrt_d[i])
    }
}

/// PageRank operator R_γ = γ (I − (1−γ) M)^{−1}.
///
/// Computed through the spectrum of the normalized Laplacian via the
/// similarity M = D^{−1/2} (I − L) D^{1/2}, which gives
/// D^{1/2} R_γ D^{−1/2} = γ (γI + (1−γ)L)^{−1}.
pub fn pagerank_operator(g: &Graph, gamma: f64) -> Result<DMatrix<f64>> {
    check_gamma(gamma)?;
    let basis = SimilarityBasis::new(g)?;
    Ok(basis.conjugated(|lam| gamma / (gamma + (1.0 - gamma) * lam)))
}

/// Symmetrized PageRank D^{1/2} R_γ D^{−1/2} = γ (γI + (1−γ)L)^{−1}.
pub fn symmetrized_pagerank(g: &Graph, gamma: f64) -> Result<SymMatrix> {
    check_gamma(gamma)?;
    let l = normalized_laplacian(g)?;
    let spec = eig_sym(&l)?;
    Ok(spec.apply(|lam| gamma / (gamma + (1.0 - gamma) * lam)))
}

/// Heat kernel H_t = exp(−tL); symmetric PSD with eigenvalues in (0, 1].
pub fn heat_kernel(g: &Graph, t: f64) -> Result<SymMatrix> {
    check_time(t)?;
    let l = normalized_laplacian(g)?;
    matrix_exp_sym(&l, -t)
}

/// Lazy random walk power (αI + (1−α)M)^steps; rows sum to 1.
pub fn lazy_walk(g: &Graph, alpha_hold: f64, steps: usize) -> Result<DMatrix<f64>> {
    check_hold(alpha_hold)?;
    let basis = SimilarityBasis::new(g)?;
    // D^{1/2} W_α D^{−1/2} = I − (1−α)L, so the k-step walk applies
    // (1 − (1−α)λ)^k on the spectrum.
    let k = steps as i32;
    Ok(basis.conjugated(|lam| (1.0 - (1.0 - alpha_hold) * lam).powi(k)))
}

/// Apply a diffusion operator to a seed vector.
pub fn apply_seed(op: &DMatrix<f64>, seed: &[f64]) -> Result<Vec<f64>> {
    if op.ncols() != seed.len() {
        return Err(Error::DimensionMismatch {
            expected: op.ncols(),
            got: seed.len(),
        });
    }
    let mut out = vec![0.0; op.nrows()];
    for i in 0..op.nrows() {
        let mut acc = 0.0;
        for j in 0..op.ncols() {
            acc += op[(i, j)] * seed[j];
        }
        out[i] = acc;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_lattice;

    fn complete_graph(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v, 1.0).unwrap();
            }
        }
        g
    }

    fn single_edge() -> Graph {
        let mut g = Graph::new(2);
        g.add_edge(0, 1, 1.0).unwrap();
        g
    }

    #[test]
    fn walk_matrix_examples() {
        let m = random_walk_matrix(&single_edge()).unwrap();
        assert!((m[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((m[(1, 0)] - 1.0).abs() < 1e-15);
        assert!(m[(0, 0)].abs() < 1e-15);

        let k4 = complete_graph(4);
        let m = random_walk_matrix(&k4).unwrap();
        for i in 0..4 {
            let row: f64 = (0..4).map(|j| m[(i, j)]).sum();
            assert!((row - 1.0).abs() < 1e-12);
            assert!(m[(i, i)].abs() < 1e-15);
        }

        let mut isolated = Graph::new(2);
        isolated.add_edge(0, 0, 1.0).unwrap();
        assert!(random_walk_matrix(&isolated).is_err());
    }

    #[test]
    fn walk_matrix_similarity_identity() {
        // D^{1/2} M D^{−1/2} = I − L
        let g = generate_lattice(3, 3).unwrap();
        let m = random_walk_matrix(&g).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let sd = sqrt_degree_vector(&g);
        let n = g.node_count();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let lhs = sd[i] * m[(i, j)] / sd[j];
                let rhs = (if i == j { 1.0 } else { 0.0 }) - l.get(i, j);
                worst = worst.max((lhs - rhs).abs());
            }
        }
        assert!(worst < 1e-10, "worst {worst}");
    }

    #[test]
    fn pagerank_near_one_is_identity() {
        let g = generate_lattice(3, 2).unwrap();
        let r = pagerank_operator(&g, 1.0 - 1e-8).unwrap();
        let mut worst = 0.0f64;
        for i in 0..r.nrows() {
            for j in 0..r.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((r[(i, j)] - target).abs());
            }
        }
        assert!(worst <= 1e-6, "worst {worst}");
    }

    #[test]
    fn pagerank_resolvent_identity_and_column_sums() {
        let k4 = complete_graph(4);
        let gamma = 0.5;
        let r = pagerank_operator(&k4, gamma).unwrap();
        // column sums are 1 on a regular graph
        for j in 0..4 {
            let col: f64 = (0..4).map(|i| r[(i, j)]).sum();
            assert!((col - 1.0).abs() < 1e-10);
        }
        // multiply-back check R_γ (I − (1−γ)M) = γI on an irregular graph
        let g = generate_lattice(4, 3).unwrap();
        let gamma = 0.3;
        let r = pagerank_operator(&g, gamma).unwrap();
        let m = random_walk_matrix(&g).unwrap();
        let n = g.node_count();
        let resolvent = &r * (DMatrix::identity(n, n) - m.scale(1.0 - gamma));
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { gamma } else { 0.0 };
                worst = worst.max((resolvent[(i, j)] - target).abs());
            }
        }
        assert!(worst < 1e-9, "worst {worst}");
        assert!(pagerank_operator(&g, 0.0).is_err());
        assert!(pagerank_operator(&g, 1.0).is_err());
    }

    #[test]
    fn symmetrized_pagerank_identity() {
        // D^{1/2} R_γ D^{−1/2} (γI + (1−γ)L) = γI
        let g = generate_lattice(4, 3).unwrap();
        let gamma = 0.3;
        let s = symmetrized_pagerank(&g, gamma).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        let n = g.node_count();
        let shifted = l.scale(1.0 - gamma).add(&SymMatrix::identity(n).scale(gamma));
        let prod = s.to_dense() * shifted.to_dense();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { gamma } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).abs());
            }
        }
        assert!(worst < 1e-8, "worst {worst}");

        // agree with the conjugated pagerank_operator
        let r = pagerank_operator(&g, gamma).unwrap();
        let sd = sqrt_degree_vector(&g);
        let mut diff = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                diff = diff.max((sd[i] * r[(i, j)] / sd[j] - s.get(i, j)).abs());
            }
        }
        assert!(diff < 1e-9, "diff {diff}");
    }

    #[test]
    fn heat_kernel_semigroup_and_fixed_vector() {
        let g = generate_lattice(3, 3).unwrap();
        let h0 = heat_kernel(&g, 0.0).unwrap();
        let eye = SymMatrix::identity(g.node_count());
        assert!(crate::spectral::frobenius_norm(&h0.sub(&eye)) < 1e-12);

        let hs = heat_kernel(&g, 0.4).unwrap();
        let ht = heat_kernel(&g, 1.1).unwrap();
        let hst = heat_kernel(&g, 1.5).unwrap();
        let prod = hs.to_dense() * ht.to_dense();
        let prod = SymMatrix::from_dense_averaged(&prod);
        assert!(crate::spectral::frobenius_norm(&prod.sub(&hst)) < 1e-8);

        let q = sqrt_degree_vector(&g);
        let hq = ht.matvec(&q);
        let worst = hq
            .iter()
            .zip(&q)
            .fold(0.0f64, |a, (&x, &y)| a.max((x - y).abs()));
        assert!(worst < 1e-10);
        assert!(heat_kernel(&g, -1.0).is_err());
    }

    #[test]
    fn heat_trace_nonincreasing() {
        let g = generate_lattice(4, 3).unwrap();
        let mut prev = f64::INFINITY;
        for &t in &[0.0, 0.2, 0.5, 1.0, 3.0] {
            let tr = heat_kernel(&g, t).unwrap().trace();
            assert!(tr <= prev + 1e-12);
            prev = tr;
        }
    }

    #[test]
    fn lazy_walk_examples() {
        let g = single_edge();
        let w0 = lazy_walk(&g, 0.5, 0).unwrap();
        assert!((w0[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(w0[(0, 1)].abs() < 1e-12);

        let w1 = lazy_walk(&g, 0.5, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((w1[(i, j)] - 0.5).abs() < 1e-12);
            }
        }

        let g = generate_lattice(4, 3).unwrap();
        for &(alpha, steps) in &[(0.3, 1), (0.5, 4), (0.9, 17)] {
            let w = lazy_walk(&g, alpha, steps).unwrap();
            for i in 0..w.nrows() {
                let row: f64 = (0..w.ncols()).map(|j| w[(i, j)]).sum();
                assert!((row - 1.0).abs() < 1e-9);
            }
        }
        assert!(lazy_walk(&g, 0.0, 1).is_err());
    }

    #[test]
    fn lazy_walk_matches_explicit_power() {
        let g = generate_lattice(3, 3).unwrap();
        let alpha = 0.4;
        let m = random_walk_matrix(&g).unwrap();
        let n = g.node_count();
        let one_step = DMatrix::identity(n, n).scale(alpha) + m.scale(1.0 - alpha);
        let explicit = &one_step * &one_step * &one_step;
        let spectral = lazy_walk(&g, alpha, 3).unwrap();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((explicit[(i, j)] - spectral[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-10, "worst {worst}");
    }

    #[test]
    fn apply_seed_examples() {
        let g = complete_graph(4);
        let r = pagerank_operator(&g, 0.5).unwrap();
        let uniform = vec![0.25; 4];
        let out = apply_seed(&r, &uniform).unwrap();
        for &x in &out {
            assert!((x - 0.25).abs() < 1e-12);
        }
        let eye = DMatrix::<f64>::identity(4, 4);
        let s = vec![0.1, 0.2, 0.3, 0.4];
        assert_eq!(apply_seed(&eye, &s).unwrap(), s);
        assert!(apply_seed(&eye, &[1.0]).is_err());
    }

    #[test]
    fn degree_weighted_mass_is_conserved() {
        // column sums of D^{1/2} H_t D^{−1/2} are 1
        let g = generate_lattice(4, 3).unwrap();
        let h = heat_kernel(&g, 0.7).unwrap();
        let sd = sqrt_degree_vector(&g);
        let n = g.node_count();
        let mut seed = vec![0.0; n];
        seed[5] = 1.0;
        let weighted = DMatrix::from_fn(n, n, |i, j| sd[i] * h.get(i, j) / sd[j]);
        let spread = apply_seed(&weighted, &seed).unwrap();
        let total: f64 = spread.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn params_are_validated() {
        assert!(DiffusionParams::new(0.5, 1.0, 0.5, 3).is_ok());
        assert!(DiffusionParams::new(1.5, 1.0, 0.5, 3).is_err());
        assert!(DiffusionParams::new(0.5, -1.0, 0.5, 3).is_err());
        assert!(DiffusionParams::new(0.5, 1.0, 1.0, 3).is_err());
    }
}
