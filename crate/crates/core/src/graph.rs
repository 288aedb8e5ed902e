//! Directed graphs over `0..n` with an explicit edge list.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A directed graph on vertices `0..n`, stored as a sorted, duplicate-free
/// edge list. Self-loops are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Digraph {
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateEdge(w[0].0, w[0].1));
            }
        }
        for &(i, j) in &edges {
            if i >= n || j >= n {
                return Err(Error::EdgeOutOfBounds(i, j, n));
            }
        }
        Ok(Self { n, edges })
    }

    /// The complete graph on `n` vertices, self-loops included.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .collect();
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i, j)).is_ok()
    }

    /// Index of edge `(i, j)` in the sorted edge list.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i, j)).ok()
    }

    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let lo = self.edges.partition_point(|&(a, _)| a < i);
        let hi = self.edges.partition_point(|&(a, _)| a <= i);
        self.edges[lo..hi].iter().map(|&(_, b)| b)
    }

    /// Adjacency lists, one per vertex.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
        }
        adj
    }

    /// Strong connectivity via Tarjan's algorithm: a single SCC covering all
    /// vertices.
    pub fn is_strongly_connected(&self) -> bool {
        tarjan_scc(&self.adjacency()).len() == 1
    }
}

struct TarjanState {
    index: usize,
    indices: Vec<Option<usize>>,
    lowlinks: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    sccs: Vec<Vec<usize>>,
}

/// Strongly connected components in reverse topological order (sinks first).
///
/// Iterative formulation so deep graphs cannot overflow the call stack.
pub fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut state = TarjanState {
        index: 0,
        indices: vec![None; n],
        lowlinks: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        sccs: Vec::new(),
    };
    for v in 0..n {
        if state.indices[v].is_none() {
            strongconnect(adj, &mut state, v);
        }
    }
    state.sccs
}

fn strongconnect(adj: &[Vec<usize>], state: &mut TarjanState, root: usize) {
    // Explicit work stack of (vertex, next-neighbor cursor).
    let mut work: Vec<(usize, usize)> = vec![(root, 0)];
    while let Some(&(v, cursor)) = work.last() {
        if cursor == 0 {
            state.indices[v] = Some(state.index);
            state.lowlinks[v] = state.index;
            state.index += 1;
            state.stack.push(v);
            state.on_stack[v] = true;
        }
        if let Some(&w) = adj[v].get(cursor) {
            work.last_mut().unwrap().1 += 1;
            match state.indices[w] {
                None => work.push((w, 0)),
                Some(iw) => {
                    if state.on_stack[w] {
                        state.lowlinks[v] = state.lowlinks[v].min(iw);
                    }
                }
            }
        } else {
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                state.lowlinks[parent] = state.lowlinks[parent].min(state.lowlinks[v]);
            }
            if state.lowlinks[v] == state.indices[v].unwrap() {
                let mut scc = Vec::new();
                loop {
                    let w = state.stack.pop().unwrap();
                    state.on_stack[w] = false;
                    scc.push(w);
                    if w == v {
                        break;
                    }
                }
                state.sccs.push(scc);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycle_is_strongly_connected() {
        let g = Digraph::new(2, vec![(0, 1), (1, 0)]).unwrap();
        assert!(g.is_strongly_connected());
    }

    #[test]
    fn unreachable_vertex_is_not_strongly_connected() {
        // support of [[1,0],[1,0]]
        let g = Digraph::new(2, vec![(0, 0), (1, 0)]).unwrap();
        assert!(!g.is_strongly_connected());
    }

    #[test]
    fn complete_graph() {
        let g = Digraph::complete(3);
        assert_eq!(g.edge_count(), 9);
        assert!(g.is_strongly_connected());
        assert_eq!(g.edge_index(1, 2), Some(5));
    }

    #[test]
    fn duplicate_edges_rejected() {
        assert!(matches!(
            Digraph::new(2, vec![(0, 1), (0, 1)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
    }

    #[test]
    fn out_of_bounds_rejected() {
        assert!(Digraph::new(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn long_cycle_does_not_overflow() {
        let n = 200_000;
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let g = Digraph::new(n, edges).unwrap();
        assert!(g.is_strongly_connected());
    }

    #[test]
    fn out_neighbors_sorted() {
        let g = Digraph::new(3, vec![(1, 2), (1, 0), (0, 1), (2, 1)]).unwrap();
        assert_eq!(g.out_neighbors(1).collect::<Vec<_>>(), vec![0, 2]);
    }
}
