//! Global and local spectral partitioning: sweep cuts, conductance, and
//! pseudoinverse-based local partitions.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::SymMatrix;

/// A two-sided partition of the node set.
///
/// `side_c` collects the nodes at or above the sweep threshold. The
/// conductance is populated by `conductance`-aware constructors and is `None`
/// when either side is empty.
#[derive(Clone, Debug)]
pub struct Cut {
    pub side_c: BTreeSet<usize>,
    pub side_complement: BTreeSet<usize>,
    pub conductance: Option<f64>,
}

/// Threshold cut of a node vector: C = {i : x_i ≥ K} (ties go to C).
pub fn sweep_cut(x: &[f64], threshold: f64) -> Cut {
    let mut side_c = BTreeSet::new();
    let mut side_complement = BTreeSet::new();
    for (i, &v) in x.iter().enumerate() {
        if v >= threshold {
            side_c.insert(i);
        } else {
            side_complement.insert(i);
        }
    }
    Cut {
        side_c,
        side_complement,
        conductance: None,
    }
}

/// Cut weight divided by the smaller side's volume (sum of degrees).
pub fn conductance(g: &Graph, side: &BTreeSet<usize>) -> Result<f64> {
    let n = g.node_count();
    if side.is_empty() || side.len() >= n {
        return Err(Error::EmptySide);
    }
    let mut cut_weight = 0.0;
    for &(u, v, w) in g.edges() {
        if side.contains(&u) != side.contains(&v) {
            cut_weight += w;
        }
    }
    let degrees = g.degrees();
    let vol_side: f64 = side.iter().map(|&u| degrees[u]).sum();
    let vol_total: f64 = degrees.iter().sum();
    let denom = vol_side.min(vol_total - vol_side);
    if denom <= 0.0 {
        return Err(Error::EmptySide);
    }
    Ok(cut_weight / denom)
}

/// Sweep cut with its conductance evaluated on `g`.
pub fn sweep_cut_on(g: &Graph, x: &[f64], threshold: f64) -> Result<Cut> {
    if x.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: x.len(),
        });
    }
    let mut cut = sweep_cut(x, threshold);
    cut.conductance = conductance(g, &cut.side_c).ok();
    Ok(cut)
}

/// Best-conductance cut over all thresholds of the sweep vector.
pub fn best_sweep_cut(g: &Graph, x: &[f64]) -> Result<Cut> {
    if x.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: x.len(),
        });
    }
    let mut values: Vec<f64> = x.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let mut best: Option<Cut> = None;
    for &k in &values {
        let cut = sweep_cut_on(g, x, k)?;
        if let Some(phi) = cut.conductance {
            let better = match &best {
                Some(b) => phi < b.conductance.unwrap_or(f64::INFINITY),
                None => true,
            };
            if better {
                best = Some(cut);
            }
        }
    }
    best.ok_or(Error::EmptySide)
}

/// Local partition around `u` from the Laplacian pseudoinverse:
/// P_K(u) = {v : L⁺(u,v) > K}.
pub fn local_partition(l_plus: &SymMatrix, u: usize, threshold: f64) -> BTreeSet<usize> {
    let n = l_plus.order();
    (0..n).filter(|&v| l_plus.get(u, v) > threshold).collect()
}
