//! Dense symmetric linear algebra: eigendecomposition, pseudoinverse,
//! pseudodeterminant, projectors, matrix exponential, norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Relative eigenvalue threshold below which a mode counts as part of the
/// nullspace. Chosen for the well-conditioned spectra of graphs with at most
/// a few hundred nodes.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Full eigendecomposition of a symmetric matrix.
///
/// Eigenvalues are ascending; column `i` of `eigenvectors` pairs with
/// `eigenvalues[i]` and the columns are orthonormal.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// Apply a scalar function to the spectrum: `V f(Λ) V'`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.apply_weights(&weights)
    }

    /// `V diag(w) V'` for explicit per-mode weights.
    pub fn apply_weights(&self, weights: &[f64]) -> SymMatrix {
        assert_eq!(weights.len(), self.eigenvalues.len());
        let n = self.eigenvectors.nrows();
        let mut scaled = self.eigenvectors.clone();
        for (k, &w) in weights.iter().enumerate() {
            for r in 0..n {
                scaled[(r, k)] *= w;
            }
        }
        let dense = &scaled * self.eigenvectors.transpose();
        SymMatrix::from_dense_averaged(&dense)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.apply(|x| x)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0f64, |a, &x| a.max(x.abs()))
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub fn eig_sym(a: &SymMatrix) -> Result<Spectrum> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    // A bounded iteration count with graduated convergence thresholds: the
    // unlimited default can cycle on nearly degenerate inputs, and a slightly
    // coarser threshold still sits far below every tolerance used here.
    let dense = a.to_dense();
    let se = [f64::EPSILON, 1e-14, 1e-12]
        .iter()
        .find_map(|&eps| SymmetricEigen::try_new(dense.clone(), eps, 100_000))
        .ok_or(Error::NonConvergence {
            iterations: 100_000,
            residual: f64::NAN,
        })?;
    let mut order: Vec<usize> = (0..a.order()).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(a.order(), a.order());
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
///
/// Eigenvalues at or below `tol * λ_max` are treated as zero. The all-zero
/// matrix maps to the all-zero matrix.
pub fn pseudoinverse(a: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let spec = eig_sym(a)?;
    let cut = rank_cutoff(&spec, tol)?;
    Ok(spec.apply(|lam| if lam > cut { 1.0 / lam } else { 0.0 }))
}

/// Log-pseudodeterminant of a symmetric PSD matrix along with the retained rank.
#[derive(Clone, Copy, Debug)]
pub struct PseudoDet {
    pub log: f64,
    pub rank: usize,
}

impl PseudoDet {
    /// Exponentiated value; may overflow to infinity for large spectra.
    pub fn value(&self) -> f64 {
        self.log.exp()
    }
}

/// Product of the eigenvalues above `tol * λ_max`, returned in log form.
/// An all-zero matrix has rank 0 and log-pseudodeterminant 0 (empty product).
pub fn pseudodeterminant(a: &SymMatrix, tol: f64) -> Result<PseudoDet> {
    let spec = eig_sym(a)?;
    let cut = rank_cutoff(&spec, tol)?;
    let mut log = 0.0;
    let mut rank = 0;
    for &lam in &spec.eigenvalues {
        if lam > cut {
            log += lam.ln();
            rank += 1;
        }
    }
    Ok(PseudoDet { log, rank })
}

fn rank_cutoff(spec: &Spectrum, tol: f64) -> Result<f64> {
    let max = spec.max_abs_eigenvalue();
    // Guard against clearly non-PSD input; tiny negative roundoff is fine.
    if let Some(&min) = spec.eigenvalues.first() {
        if min < -10.0 * tol * max.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "matrix is not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
    }
    Ok(tol * max)
}

/// Orthogonal projector onto the complement of `v`: `P = I − vv'/‖v‖²`.
pub fn projector_complement(v: &[f64]) -> Result<SymMatrix> {
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if norm_sq == 0.0 {
        return Err(Error::InvalidParameter(
            "cannot project out the zero vector".into(),
        ));
    }
    let n = v.len();
    Ok(SymMatrix::from_fn(n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - v[i] * v[j] / norm_sq
    }))
}

/// Orthonormal basis of the subspace orthogonal to `v`, as the columns of an
/// n × (n−1) matrix (Householder construction).
pub fn complement_basis(v: &[f64]) -> Result<DMatrix<f64>> {
    let n = v.len();
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParameter(
            "cannot build complement of the zero vector".into(),
        ));
    }
    if n == 1 {
        return Ok(DMatrix::zeros(1, 0));
    }
    let w: Vec<f64> = v.iter().map(|x| x / norm).collect();
    // Householder vector u = w − s e₁ with s = −sign(w₀) avoids cancellation.
    let s = if w[0] >= 0.0 { -1.0 } else { 1.0 };
    let mut u = w.clone();
    u[0] -= s;
    let u_norm_sq: f64 = u.iter().map(|x| x * x).sum();
    // H = I − 2uu'/(u'u) maps w to s·e₁; its trailing n−1 columns span w⊥.
    let mut basis = DMatrix::zeros(n, n - 1);
    for col in 1..n {
        for row in 0..n {
            let delta = if row == col { 1.0 } else { 0.0 };
            basis[(row, col - 1)] = delta - 2.0 * u[row] * u[col] / u_norm_sq;
        }
    }
    Ok(basis)
}

/// Matrix exponential of `t·A` for symmetric `A`, via the eigendecomposition.
pub fn matrix_exp_sym(a: &SymMatrix, t: f64) -> Result<SymMatrix> {
    let spec = eig_sym(a)?;
    Ok(spec.apply(|lam| (t * lam).exp()))
}

/// Frobenius and spectral norms of a symmetric matrix.
pub fn norms(a: &SymMatrix) -> Result<(f64, f64)> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let frob = frobenius_norm(a);
    let spec = eig_sym(a)?;
    Ok((frob, spec.max_abs_eigenvalue()))
}

pub fn frobenius_norm(a: &SymMatrix) -> f64 {
    let n = a.order();
    let mut acc = 0.0;
    for i in 0..n {
        let d = a.get(i, i);
        acc += d * d;
        for j in 0..i {
            let x = a.get(i, j);
            acc += 2.0 * x * x;
        }
    }
    acc.sqrt()
}

pub fn spectral_norm(a: &SymMatrix) -> Result<f64> {
    Ok(eig_sym(a)?.max_abs_eigenvalue())
}

/// Spectral decomposition restricted to a subspace.
///
/// `basis` has orthonormal columns; the eigensystem is that of `B' A B`,
/// with `vectors` expressed back in the ambient space (columns `B·w_i`).
#[derive(Clone, Debug)]
pub struct SubspaceEigen {
    pub eigenvalues: Vec<f64>,
    /// n × k matrix whose columns are orthonormal eigenvectors in ambient coordinates.
    pub vectors: DMatrix<f64>,
}

impl SubspaceEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Σ f(λ_i) v_i v_i'` over the subspace modes.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.apply_weights(&weights)
    }

    /// `Σ w_i v_i v_i'` for explicit per-mode weights.
    pub fn apply_weights(&self, weights: &[f64]) -> SymMatrix {
        assert_eq!(weights.len(), self.eigenvalues.len());
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (k, &w) in weights.iter().enumerate() {
            for r in 0..n {
                scaled[(r, k)] *= w;
            }
        }
        let dense = &scaled * self.vectors.transpose();
        SymMatrix::from_dense_averaged(&dense)
    }
}

/// Eigendecomposition of `A` restricted to the column span of `basis`.
pub fn eig_in_subspace(a: &SymMatrix, basis: &DMatrix<f64>) -> Result<SubspaceEigen> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let k = basis.ncols();
    let dense = a.to_dense();
    let reduced = basis.transpose() * &dense * basis;
    // Symmetrize roundoff before factoring.
    let reduced = SymMatrix::from_dense_averaged(&reduced);
    let spec = eig_sym(&reduced)?;
    let vectors = basis * &spec.eigenvectors;
    debug_assert_eq!(vectors.ncols(), k);
    Ok(SubspaceEigen {
        eigenvalues: spec.eigenvalues,
        vectors,
    })
}

/// Max-norm deviation of `V'V` from the identity; used by invariant tests.
pub fn orthonormality_defect(v: &DMatrix<f64>) -> f64 {
    let g = v.transpose() * v;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

#[allow(dead_code)]
fn dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
