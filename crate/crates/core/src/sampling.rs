//! Observation model: sample a graph from a population graph by drawing
//! edges uniformly with replacement, weighting by multiplicity.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{normalized_laplacian, normalized_laplacian_on_support, Graph};
use crate::matrix::SymMatrix;

const DRAW_REJECTION_LIMIT: usize = 1_000_000;

/// One accepted multiplicity-weighted sample.
#[derive(Clone, Debug)]
pub struct SampleDraw {
    pub graph: Graph,
    pub m: usize,
    /// Draws discarded because a node ended up with zero sampled degree.
    pub rejected: usize,
    /// True when the draw was accepted with isolated nodes because covering
    /// every node is impossible (2m < n); see `sample_edges`.
    pub has_isolated: bool,
}

/// Draw `m` edges i.i.d. uniformly from the population edge set and build the
/// multiplicity-weighted sample graph.
///
/// Draws that leave some node with zero sampled degree are rejected and
/// redrawn (counted in `rejected`), since the normalized Laplacian needs
/// positive degrees. When `2m < n` no draw can cover every node, so the first
/// draw is accepted as-is with `has_isolated` set and the Laplacian is later
/// built on the positive-degree support.
pub fn sample_edges(pop: &Graph, m: usize, rng: &mut impl Rng) -> Result<SampleDraw> {
    let mu = pop.edge_count();
    if mu == 0 || m == 0 {
        return Err(Error::InvalidParameter(
            "need a nonempty population edge set and m ≥ 1".into(),
        ));
    }
    let n = pop.node_count();
    let coverable = 2 * m >= n;
    let mut rejected = 0usize;
    loop {
        let mut multiplicity = vec![0usize; mu];
        for _ in 0..m {
            multiplicity[rng.gen_range(0..mu)] += 1;
        }
        let mut g = Graph::new(n);
        let mut covered = vec![false; n];
        for (k, &count) in multiplicity.iter().enumerate() {
            if count > 0 {
                let (u, v, _) = pop.edges()[k];
                g.add_edge(u, v, count as f64)?;
                covered[u] = true;
                covered[v] = true;
            }
        }
        let isolated = covered.iter().any(|&c| !c);
        if !isolated || !coverable {
            return Ok(SampleDraw {
                graph: g,
                m,
                rejected,
                has_isolated: isolated,
            });
        }
        rejected += 1;
        if rejected >= DRAW_REJECTION_LIMIT {
            return Err(Error::RejectionLimit {
                attempts: rejected,
                context: format!("no isolated-node-free draw of {m} edges over {n} nodes"),
            });
        }
    }
}

/// Normalized Laplacian of a sample draw.
///
/// For draws flagged `has_isolated` the Laplacian is built on the
/// positive-degree support, with zero rows and columns at isolated nodes;
/// otherwise a zero degree is a policy violation and an error.
pub fn sample_laplacian(draw: &SampleDraw) -> Result<SymMatrix> {
    if draw.has_isolated {
        Ok(normalized_laplacian_on_support(&draw.graph))
    } else {
        normalized_laplacian(&draw.graph)
    }
}
