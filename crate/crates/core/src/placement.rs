//! Inner repetition code: coded symbols are the edges of the complete graph
//! `K_n`, and storage node `v` holds the `n - 1` edges incident to vertex `v`.
//!
//! Vertices and symbol indices are 1-based. Edges are ranked
//! lexicographically: `(1,2) -> 1, (1,3) -> 2, ..., (n-1,n) -> n(n-1)/2`.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlacementError {
    #[error("invalid edge ({i}, {j}) for n = {n}")]
    InvalidEdge { i: usize, j: usize, n: usize },
    #[error("vertex {v} out of range 1..={n}")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("symbol index {index} out of range 1..={theta}")]
    IndexOutOfRange { index: usize, theta: usize },
    #[error("no shared symbol with self (vertex {0})")]
    SelfPair(usize),
    #[error("complete-graph placement needs n >= 2, got {0}")]
    TooFewNodes(usize),
}

/// Number of edges of `K_n`.
pub fn theta(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Lexicographic rank of the edge `(i, j)`, `1 <= i < j <= n`.
pub fn edge_index(i: usize, j: usize, n: usize) -> Result<usize, PlacementError> {
    if i == 0 || i >= j || j > n {
        return Err(PlacementError::InvalidEdge { i, j, n });
    }
    Ok((i - 1) * n - i * (i - 1) / 2 + (j - i))
}

/// Symbols stored on vertex `v`, ascending.
pub fn node_symbols(v: usize, n: usize) -> Result<Vec<usize>, PlacementError> {
    if v == 0 || v > n {
        return Err(PlacementError::VertexOutOfRange { v, n });
    }
    (1..=n)
        .filter(|&u| u != v)
        .map(|u| edge_index(u.min(v), u.max(v), n))
        .collect::<Result<BTreeSet<_>, _>>()
        .map(|s| s.into_iter().collect())
}

/// The unique symbol held by both `u` and `v`.
pub fn shared_symbol(u: usize, v: usize, n: usize) -> Result<usize, PlacementError> {
    if u == v {
        return Err(PlacementError::SelfPair(u));
    }
    for w in [u, v] {
        if w == 0 || w > n {
            return Err(PlacementError::VertexOutOfRange { v: w, n });
        }
    }
    edge_index(u.min(v), u.max(v), n)
}

/// Precomputed bijection between symbol indices and edges of `K_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementMap {
    n: usize,
    // edge_of_index[idx - 1] = (i, j)
    edge_of_index: Vec<(usize, usize)>,
    // index_of_edge[(i - 1) * n + (j - 1)] = idx, symmetric, 0 on the diagonal
    index_of_edge: Vec<usize>,
}

impl PlacementMap {
    pub fn new(n: usize) -> Result<Self, PlacementError> {
        if n < 2 {
            return Err(PlacementError::TooFewNodes(n));
        }
        let mut edge_of_index = Vec::with_capacity(theta(n));
        let mut index_of_edge = vec![0; n * n];
        for i in 1..=n {
            for j in i + 1..=n {
                let idx = edge_index(i, j, n)?;
                debug_assert_eq!(idx, edge_of_index.len() + 1);
                edge_of_index.push((i, j));
                index_of_edge[(i - 1) * n + (j - 1)] = idx;
                index_of_edge[(j - 1) * n + (i - 1)] = idx;
            }
        }
        Ok(PlacementMap {
            n,
            edge_of_index,
            index_of_edge,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> usize {
        self.edge_of_index.len()
    }

    pub fn edge(&self, index: usize) -> Result<(usize, usize), PlacementError> {
        self.edge_of_index
            .get(index.wrapping_sub(1))
            .copied()
            .ok_or(PlacementError::IndexOutOfRange {
                index,
                theta: self.theta(),
            })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edge_of_index
    }

    pub fn index(&self, i: usize, j: usize) -> Result<usize, PlacementError> {
        if i == 0 || i >= j || j > self.n {
            return Err(PlacementError::InvalidEdge { i, j, n: self.n });
        }
        Ok(self.index_of_edge[(i - 1) * self.n + (j - 1)])
    }

    pub fn shared(&self, u: usize, v: usize) -> Result<usize, PlacementError> {
        if u == v {
            return Err(PlacementError::SelfPair(u));
        }
        self.vertex_check(u)?;
        self.vertex_check(v)?;
        Ok(self.index_of_edge[(u - 1) * self.n + (v - 1)])
    }

    pub fn node_symbols(&self, v: usize) -> Result<Vec<usize>, PlacementError> {
        self.vertex_check(v)?;
        let mut out: Vec<usize> = (1..=self.n)
            .filter(|&u| u != v)
            .map(|u| self.index_of_edge[(v - 1) * self.n + (u - 1)])
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Union of the symbols held by a set of vertices.
    pub fn union(&self, vertices: &[usize]) -> Result<BTreeSet<usize>, PlacementError> {
        let mut out = BTreeSet::new();
        for &v in vertices {
            out.extend(self.node_symbols(v)?);
        }
        Ok(out)
    }

    fn vertex_check(&self, v: usize) -> Result<(), PlacementError> {
        if v == 0 || v > self.n {
            Err(PlacementError::VertexOutOfRange { v, n: self.n })
        } else {
            Ok(())
        }
    }
}
