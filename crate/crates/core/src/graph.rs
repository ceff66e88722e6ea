//! Weighted symmetric graphs, small-world generation, and their Laplacians.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Weighted undirected graph with nonnegative edge weights.
///
/// Edges are stored once per unordered pair with canonical `u < v` (self-loops
/// allowed as `u == v`), which makes the weight function symmetric by
/// construction.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    index: HashMap<(usize, usize), usize>,
}

fn canon(u: usize, v: usize) -> (usize, usize) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidParameter(format!(
                "edge ({u},{v}) out of range for {} nodes",
                self.n
            )));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "edge weight must be finite and nonnegative, got {w}"
            )));
        }
        let key = canon(u, v);
        if self.index.contains_key(&key) {
            return Err(Error::InvalidParameter(format!(
                "duplicate edge ({u},{v})"
            )));
        }
        self.index.insert(key, self.edges.len());
        self.edges.push((key.0, key.1, w));
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.index.contains_key(&canon(u, v))
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.index
            .get(&canon(u, v))
            .map(|&k| self.edges[k].2)
            .unwrap_or(0.0)
    }

    /// Degree d(u) = Σ_v w(u,v); a self-loop contributes its weight once.
    pub fn degree(&self, u: usize) -> f64 {
        let mut d = 0.0;
        for &(a, b, w) in &self.edges {
            if a == u || b == u {
                d += w;
            }
        }
        d
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(a, b, w) in &self.edges {
            d[a] += w;
            if b != a {
                d[b] += w;
            }
        }
        d
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|&(_, _, w)| w).sum()
    }

    pub fn is_simple_unit(&self) -> bool {
        self.edges.iter().all(|&(u, v, w)| u != v && w == 1.0)
    }

    /// Weighted adjacency matrix.
    pub fn adjacency(&self) -> SymMatrix {
        let mut a = SymMatrix::zeros(self.n);
        for &(u, v, w) in &self.edges {
            a.set(u, v, w);
        }
        a
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            if w > 0.0 && u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Write the edge-list text format: one `u v weight` triple per line,
    /// 0-based node ids. Lines starting with `#` are comments.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        let mut sorted = self.edges.clone();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (u, v, w) in sorted {
            writeln!(out, "{} {} {}", u, v, w)?;
        }
        Ok(())
    }

    /// Parse the edge-list format. The node count is the largest id seen plus
    /// one, or the value of a `# nodes: N` comment if present (whichever is
    /// larger, so isolated trailing nodes survive a round trip).
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph> {
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        let mut n = 0usize;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(count) = rest.trim().strip_prefix("nodes:") {
                    if let Ok(k) = count.trim().parse::<usize>() {
                        n = n.max(k);
                    }
                }
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let parse = |tok: Option<&str>, what: &str| -> Result<String> {
                tok.map(str::to_owned).ok_or_else(|| {
                    Error::Parse(format!("line {}: missing {what}", lineno + 1))
                })
            };
            let u: usize = parse(parts.next(), "source id")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let v: usize = parse(parts.next(), "target id")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let w: f64 = parse(parts.next(), "weight")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            n = n.max(u.max(v) + 1);
            triples.push((u, v, w));
        }
        let mut g = Graph::new(n);
        for (u, v, w) in triples {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }
}

/// Two-dimensional lattice of width `w` and height `h`: `w·h` nodes with
/// unit-weight edges to the four nearest neighbors, truncated at the boundary.
/// The edge count is `2wh − w − h`.
pub fn generate_lattice(w: usize, h: usize) -> Result<Graph> {
    if w < 2 || h < 2 {
        return Err(Error::InvalidParameter(format!(
            "lattice needs width and height at least 2, got {w}x{h}"
        )));
    }
    let mut g = Graph::new(w * h);
    let node = |r: usize, c: usize| r * w + c;
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                g.add_edge(node(r, c), node(r, c + 1), 1.0)?;
            }
            if r + 1 < h {
                g.add_edge(node(r, c), node(r + 1, c), 1.0)?;
            }
        }
    }
    Ok(g)
}

const SWAP_REJECTION_LIMIT: usize = 1_000_000;

/// Perform `s` degree-preserving edge swaps.
///
/// Each swap draws two distinct edges (i₁∼j₁), (i₂∼j₂) uniformly and proposes
/// (i₁∼j₂), (i₂∼j₁), pairing first-listed with second-listed endpoints. A
/// proposal that would create a self-loop or duplicate edge is rejected and
/// redrawn; only accepted swaps count toward `s`.
pub fn edge_swap(g: &Graph, s: usize, rng: &mut impl Rng) -> Result<Graph> {
    if !g.is_simple_unit() {
        return Err(Error::InvalidParameter(
            "edge_swap requires a simple unit-weight graph".into(),
        ));
    }
    if g.edge_count() < 2 && s > 0 {
        return Err(Error::InvalidParameter(
            "edge_swap needs at least two edges".into(),
        ));
    }
    let mut g = g.clone();
    let mu = g.edge_count();
    let mut accepted = 0usize;
    let mut rejections = 0usize;
    while accepted < s {
        let e1 = rng.gen_range(0..mu);
        let e2 = rng.gen_range(0..mu);
        if e1 == e2 {
            continue;
        }
        let (i1, j1, _) = g.edges[e1];
        let (i2, j2, _) = g.edges[e2];
        // proposed replacements
        let a = (i1, j2);
        let b = (i2, j1);
        let self_loop = a.0 == a.1 || b.0 == b.1;
        let duplicate = {
            let ca = canon(a.0, a.1);
            let cb = canon(b.0, b.1);
            let existing = |key: (usize, usize)| {
                g.index
                    .get(&key)
                    .map(|&k| k != e1 && k != e2)
                    .unwrap_or(false)
            };
            existing(ca) || existing(cb) || ca == cb
        };
        if self_loop || duplicate {
            rejections += 1;
            if rejections >= SWAP_REJECTION_LIMIT {
                return Err(Error::RejectionLimit {
                    attempts: rejections,
                    context: "no admissible edge swap found".into(),
                });
            }
            continue;
        }
        // commit: replace e1 and e2 in place, keep the index consistent
        g.index.remove(&canon(i1, j1));
        g.index.remove(&canon(i2, j2));
        let ca = canon(a.0, a.1);
        let cb = canon(b.0, b.1);
        g.edges[e1] = (ca.0, ca.1, 1.0);
        g.edges[e2] = (cb.0, cb.1, 1.0);
        g.index.insert(ca, e1);
        g.index.insert(cb, e2);
        accepted += 1;
    }
    Ok(g)
}

/// Combinatorial Laplacian L₀: −w(u,v) off the diagonal, d(u) − w(u,u) on it.
pub fn combinatorial_laplacian(g: &Graph) -> SymMatrix {
    let d = g.degrees();
    let mut l = SymMatrix::zeros(g.node_count());
    for i in 0..g.node_count() {
        l.set(i, i, d[i] - g.weight(i, i));
    }
    for &(u, v, w) in g.edges() {
        if u != v {
            l.set(u, v, -w);
        }
    }
    l
}

/// Normalized Laplacian L = D^{−1/2} L₀ D^{−1/2}; requires strictly positive
/// degrees.
pub fn normalized_laplacian(g: &Graph) -> Result<SymMatrix> {
    let d = g.degrees();
    if let Some(node) = d.iter().position(|&x| x <= 0.0) {
        return Err(Error::ZeroDegree { node });
    }
    Ok(normalized_from_degrees(g, &d))
}

/// Normalized Laplacian on the positive-degree support: rows and columns of
/// zero-degree nodes are left identically zero (pseudoinverse scaling of D).
pub fn normalized_laplacian_on_support(g: &Graph) -> SymMatrix {
    let d = g.degrees();
    normalized_from_degrees(g, &d)
}

fn normalized_from_degrees(g: &Graph, d: &[f64]) -> SymMatrix {
    let inv_sqrt: Vec<f64> = d
        .iter()
        .map(|&x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 })
        .collect();
    let l0 = combinatorial_laplacian(g);
    let n = g.node_count();
    SymMatrix::from_fn(n, |i, j| l0.get(i, j) * inv_sqrt[i] * inv_sqrt[j])
}

/// `D^{1/2} 1`, the trivial eigenvector of the normalized Laplacian.
pub fn sqrt_degree_vector(g: &Graph) -> Vec<f64> {
    g.degrees().iter().map(|&x| x.max(0.0).sqrt()).collect()
}
