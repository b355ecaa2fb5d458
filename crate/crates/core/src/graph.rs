//! Minimal graph abstraction shared by the lattices and the small ad-hoc
//! graphs used by the exhaustive oracles.

use std::collections::VecDeque;

use thiserror::Error;

use crate::lattice::Parity;

/// A finite simple graph on vertices `0..vertex_count()`.
pub trait ColorGraph: Sync {
    fn vertex_count(&self) -> usize;

    fn neighbors(&self, v: usize) -> &[usize];

    fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    /// Every undirected edge once, as `(u, v)` with `u < v`, sorted.
    fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.vertex_count() {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("graph is not bipartite (odd cycle through vertex {0})")]
    NotBipartite(usize),
}

/// Adjacency-list graph. Duplicate edges are collapsed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::VertexOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adj })
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path edges are valid")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, &edges).expect("cycle edges are valid")
    }

    /// Two-colors each component by BFS, putting the smallest vertex of every
    /// component on the even side.
    pub fn bipartition(&self) -> Result<Vec<Parity>, GraphError> {
        let n = self.adj.len();
        let mut side: Vec<Option<Parity>> = vec![None; n];
        let mut queue = VecDeque::new();
        for start in 0..n {
            if side[start].is_some() {
                continue;
            }
            side[start] = Some(Parity::Even);
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                let pu = side[u].unwrap();
                for &v in &self.adj[u] {
                    match side[v] {
                        None => {
                            side[v] = Some(pu.flip());
                            queue.push_back(v);
                        }
                        Some(pv) if pv == pu => return Err(GraphError::NotBipartite(v)),
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(side.into_iter().map(Option::unwrap).collect())
    }
}

impl ColorGraph for SimpleGraph {
    fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_edges_collapse() {
        let g = SimpleGraph::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn odd_cycle_is_not_bipartite() {
        assert!(SimpleGraph::cycle(5).bipartition().is_err());
        let sides = SimpleGraph::cycle(4).bipartition().unwrap();
        assert_eq!(sides, vec![Parity::Even, Parity::Odd, Parity::Even, Parity::Odd]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(SimpleGraph::from_edges(2, &[(0, 2)]), Err(GraphError::VertexOutOfRange(0, 2, 2)));
        assert_eq!(SimpleGraph::from_edges(2, &[(1, 1)]), Err(GraphError::SelfLoop(1)));
    }
}
