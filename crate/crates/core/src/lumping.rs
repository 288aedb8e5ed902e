//! Lumping of Markov kernels and the vector space of lumpable matrices.
//!
//! A lumping is a surjective map `κ : 𝒴 → 𝒳`, equivalently the partition
//! `S_x = κ⁻¹({x})`. A kernel `P` is κ-lumpable exactly when block row sums
//! are constant within blocks: `P(y₁, S_{x'}) = P(y₂, S_{x'})` for all
//! `y₁, y₂ ∈ S_x`, and then the pushforward is `κ⋆P(x,x') = P(y, S_{x'})`.
//! The lumped kernel lives on the lumped edge set `𝒟 = κ₂(ℰ)`, its stationary
//! distribution is `κ⋆π(x) = π(S_x)` and its edge measure sums blockwise.
//!
//! The same block-sum condition applied to arbitrary signed matrices carves
//! out the subspace `F_κ(𝒴, ℰ)` of lumpable matrices, which has the explicit
//! basis `B(κ) = {C^{x,x'}} ∪ {F^{y,y'}}` built from single-edge indicators
//! `E^{y,y'}`:
//!
//! ```text
//! C^{x,x'} = Σ_{y ∈ S_x} E^{y, y̌},      F^{y,y'} = E^{y,y'} − E^{y, y̌},
//! ```
//!
//! where `y̌ = max { y' ∈ S_{x'} : (y,y') ∈ ℰ }` is the largest admissible
//! destination, and the `F` elements range over `R_{x,x'}`, the block edges
//! that are not such maxima. Lumping the basis gives `κ⋆C^{x,x'} = E^{x,x'}`
//! and `κ⋆F^{y,y'} = 0`, whence
//! `dim F_κ = |ℰ| − Σ_{(x,x') ∈ 𝒟} |S_x| + |𝒟|`.

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::kernel::{EdgeFn, EdgeMeasure, StochasticKernel};
use crate::numeric::rank_of;
use crate::{LUMPABILITY_TOL, RANK_TOL};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// A surjective state map `κ : [m] → [n]` with its partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lumping {
    m: usize,
    n: usize,
    map: Vec<usize>,
    #[serde(skip)]
    blocks: Vec<Vec<usize>>,
}

impl Lumping {
    pub fn new(map: Vec<usize>, range_size: usize) -> Result<Self> {
        if map.is_empty() || range_size == 0 {
            return Err(Error::Empty);
        }
        let mut blocks = vec![Vec::new(); range_size];
        for (y, &x) in map.iter().enumerate() {
            if x >= range_size {
                return Err(Error::InvalidInput(format!(
                    "state {y} maps to {x}, outside the {range_size} classes"
                )));
            }
            blocks[x].push(y);
        }
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::NotSurjective(range_size));
        }
        Ok(Self {
            m: map.len(),
            n: range_size,
            map,
            blocks,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect(), n).expect("identity lumping")
    }

    pub fn domain_size(&self) -> usize {
        self.m
    }

    pub fn range_size(&self) -> usize {
        self.n
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, y: usize) -> usize {
        self.map[y]
    }

    /// The block `S_x`, in increasing state order.
    pub fn block(&self, x: usize) -> &[usize] {
        &self.blocks[x]
    }

    /// Rebuilds the derived partition after deserialization.
    pub fn revalidate(self) -> Result<Self> {
        Self::new(self.map, self.n)
    }

    /// The lumped edge set `𝒟 = κ₂(ℰ)`.
    pub fn lumped_edge_set(&self, e: &Digraph) -> Result<Digraph> {
        if e.n() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "graph has {} vertices, lumping domain has {}",
                e.n(),
                self.m
            )));
        }
        let mut edges: Vec<(usize, usize)> = e
            .edges()
            .iter()
            .map(|&(y, y2)| (self.map[y], self.map[y2]))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Digraph::new(self.n, edges)
    }

    /// Compatibility in the sense that `W_κ(𝒴, ℰ)` is nonempty: every state of
    /// a block with an outgoing lumped edge can realize that edge.
    pub fn is_compatible(&self, e: &Digraph) -> Result<bool> {
        let lumped = self.lumped_edge_set(e)?;
        for &(x, x_prime) in lumped.edges() {
            for &y in self.block(x) {
                let ok = self
                    .block(x_prime)
                    .iter()
                    .any(|&y2| e.contains(y, y2));
                if !ok {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn first_incompatibility(&self, e: &Digraph) -> Result<Option<(usize, usize)>> {
        let lumped = self.lumped_edge_set(e)?;
        for &(x, x_prime) in lumped.edges() {
            for &y in self.block(x) {
                if !self.block(x_prime).iter().any(|&y2| e.contains(y, y2)) {
                    return Ok(Some((y, x_prime)));
                }
            }
        }
        Ok(None)
    }
}

/// Largest and location of the block-row-sum disagreement, over all blocks.
fn worst_violation(values: &Array2<f64>, graph: &Digraph, kappa: &Lumping) -> (f64, (usize, usize, usize, usize)) {
    let lumped_edges: Vec<(usize, usize)> = {
        let mut v: Vec<(usize, usize)> = graph
            .edges()
            .iter()
            .map(|&(y, y2)| (kappa.apply(y), kappa.apply(y2)))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut worst = (0.0_f64, (0, 0, 0, 0));
    for &(x, x_prime) in &lumped_edges {
        let block = kappa.block(x);
        let sums: Vec<f64> = block
            .iter()
            .map(|&y| {
                kappa
                    .block(x_prime)
                    .iter()
                    .map(|&y2| values[[y, y2]])
                    .sum()
            })
            .collect();
        for (a, &ya) in block.iter().enumerate() {
            for (b, &yb) in block.iter().enumerate().skip(a + 1) {
                let gap = (sums[a] - sums[b]).abs();
                if gap > worst.0 {
                    worst = (gap, (x, x_prime, ya, yb));
                }
            }
        }
    }
    worst
}

/// Lumpability test: block row sums agree within `tol` inside every block.
pub fn is_lumpable(p: &StochasticKernel, kappa: &Lumping, tol: f64) -> Result<bool> {
    if p.n() != kappa.domain_size() {
        return Err(Error::DimensionMismatch(format!(
            "kernel on {} states, lumping domain {}",
            p.n(),
            kappa.domain_size()
        )));
    }
    Ok(worst_violation(p.rows(), p.graph(), kappa).0 <= tol)
}

/// The worst block-sum disagreement and where it occurs, for diagnostics.
pub fn lumpability_violation(
    p: &StochasticKernel,
    kappa: &Lumping,
) -> Result<(f64, (usize, usize, usize, usize))> {
    if p.n() != kappa.domain_size() {
        return Err(Error::DimensionMismatch(format!(
            "kernel on {} states, lumping domain {}",
            p.n(),
            kappa.domain_size()
        )));
    }
    Ok(worst_violation(p.rows(), p.graph(), kappa))
}

/// The pushforward `κ⋆P`, using the first state of each block.
pub fn lump(p: &StochasticKernel, kappa: &Lumping) -> Result<StochasticKernel> {
    let (violation, (x, x_prime, y1, y2)) = lumpability_violation(p, kappa)?;
    if violation > LUMPABILITY_TOL {
        return Err(Error::NotLumpable {
            x,
            x_prime,
            y1,
            y2,
            violation,
        });
    }
    let lumped_graph = kappa.lumped_edge_set(p.graph())?;
    let n = kappa.range_size();
    let mut rows = Array2::zeros((n, n));
    for &(x, x_prime) in lumped_graph.edges() {
        let y = kappa.block(x)[0];
        rows[[x, x_prime]] = kappa
            .block(x_prime)
            .iter()
            .map(|&y2| p.get(y, y2))
            .sum();
    }
    StochasticKernel::new(lumped_graph, rows)
}

/// Lumped stationary distribution `κ⋆π(x) = π(S_x)`.
pub fn lump_distribution(pi: &[f64], kappa: &Lumping) -> Vec<f64> {
    (0..kappa.range_size())
        .map(|x| kappa.block(x).iter().map(|&y| pi[y]).sum())
        .collect()
}

/// Lumped edge measure `κ⋆Q(x,x') = Q(S_x, S_{x'})`.
pub fn lump_edge_measure(q: &EdgeMeasure, kappa: &Lumping) -> Result<EdgeMeasure> {
    let lumped_graph = kappa.lumped_edge_set(q.graph())?;
    let n = kappa.range_size();
    let mut sums = Array2::zeros((n, n));
    for &(y, y2) in q.graph().edges() {
        sums[[kappa.apply(y), kappa.apply(y2)]] += q.get(y, y2);
    }
    EdgeMeasure::new(lumped_graph, sums)
}

/// Signed-matrix lumpability per the block-sum definition.
pub fn is_lumpable_matrix(a: &EdgeFn, kappa: &Lumping, tol: f64) -> Result<bool> {
    if a.graph().n() != kappa.domain_size() {
        return Err(Error::DimensionMismatch(format!(
            "matrix on {} states, lumping domain {}",
            a.graph().n(),
            kappa.domain_size()
        )));
    }
    Ok(worst_violation(a.values(), a.graph(), kappa).0 <= tol)
}

/// Matrix-level pushforward `κ⋆A` on `(𝒳, 𝒟)`; linear and surjective.
pub fn lump_linear(a: &EdgeFn, kappa: &Lumping) -> Result<EdgeFn> {
    let (violation, (x, x_prime, y1, y2)) = {
        if a.graph().n() != kappa.domain_size() {
            return Err(Error::DimensionMismatch(format!(
                "matrix on {} states, lumping domain {}",
                a.graph().n(),
                kappa.domain_size()
            )));
        }
        worst_violation(a.values(), a.graph(), kappa)
    };
    let scale = a
        .values()
        .iter()
        .fold(1.0_f64, |acc, &v| acc.max(v.abs()));
    if violation > LUMPABILITY_TOL * scale {
        return Err(Error::NotLumpable {
            x,
            x_prime,
            y1,
            y2,
            violation,
        });
    }
    let lumped_graph = kappa.lumped_edge_set(a.graph())?;
    let n = kappa.range_size();
    let mut values = Array2::zeros((n, n));
    for &(x, x_prime) in lumped_graph.edges() {
        let y = kappa.block(x)[0];
        values[[x, x_prime]] = kappa
            .block(x_prime)
            .iter()
            .map(|&y2| a.get(y, y2))
            .sum();
    }
    EdgeFn::new(lumped_graph, values)
}

/// The explicit basis `B(κ)` of the lumpable-matrix subspace.
#[derive(Debug, Clone)]
pub struct LumpableBasis {
    kappa: Lumping,
    graph: Digraph,
    /// `C^{x,x'}`, indexed by lumped edges in lexicographic order.
    c_elements: Vec<((usize, usize), EdgeFn)>,
    /// `F^{y,y'}`, indexed lexicographically within each lumped edge.
    f_elements: Vec<((usize, usize), EdgeFn)>,
}

impl LumpableBasis {
    pub fn kappa(&self) -> &Lumping {
        &self.kappa
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn c_elements(&self) -> &[((usize, usize), EdgeFn)] {
        &self.c_elements
    }

    pub fn f_elements(&self) -> &[((usize, usize), EdgeFn)] {
        &self.f_elements
    }

    pub fn len(&self) -> usize {
        self.c_elements.len() + self.f_elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &EdgeFn> {
        self.c_elements
            .iter()
            .map(|(_, f)| f)
            .chain(self.f_elements.iter().map(|(_, f)| f))
    }

    /// Numerical rank of the vectorized basis; equals `len()` when healthy.
    pub fn numerical_rank(&self) -> usize {
        let rows: Vec<Vec<f64>> = self.iter().map(|f| f.to_edge_vector()).collect();
        rank_of(&rows, RANK_TOL)
    }
}

/// Largest admissible destination `y̌(S_{x'}, y)` under the natural order.
fn max_destination(e: &Digraph, kappa: &Lumping, y: usize, x_prime: usize) -> Option<usize> {
    kappa
        .block(x_prime)
        .iter()
        .rev()
        .copied()
        .find(|&y2| e.contains(y, y2))
}

/// Constructs `B(κ)` on `(𝒴, ℰ)`.
pub fn lumpable_basis(kappa: &Lumping, e: &Digraph) -> Result<LumpableBasis> {
    if let Some((y, x_prime)) = kappa.first_incompatibility(e)? {
        return Err(Error::Incompatible { y, x_prime });
    }
    let lumped = kappa.lumped_edge_set(e)?;
    let mut c_elements = Vec::new();
    let mut f_elements = Vec::new();
    for &(x, x_prime) in lumped.edges() {
        let mut c = EdgeFn::zero(e);
        for &y in kappa.block(x) {
            let check = max_destination(e, kappa, y, x_prime)
                .expect("compatibility guarantees an admissible destination");
            c.scaled_add(1.0, &EdgeFn::unit(e, y, check)?);
            for &y2 in kappa.block(x_prime) {
                if y2 != check && e.contains(y, y2) {
                    let mut f = EdgeFn::unit(e, y, y2)?;
                    f.scaled_add(-1.0, &EdgeFn::unit(e, y, check)?);
                    f_elements.push(((y, y2), f));
                }
            }
        }
        c_elements.push(((x, x_prime), c));
    }
    let basis = LumpableBasis {
        kappa: kappa.clone(),
        graph: e.clone(),
        c_elements,
        f_elements,
    };
    debug_assert_eq!(basis.len(), dim_lumpable_matrices(kappa, e)?);
    Ok(basis)
}

/// `dim F_κ(𝒴, ℰ) = |ℰ| − Σ_{(x,x') ∈ 𝒟} |S_x| + |𝒟|`.
pub fn dim_lumpable_matrices(kappa: &Lumping, e: &Digraph) -> Result<usize> {
    let lumped = kappa.lumped_edge_set(e)?;
    let block_sum: usize = lumped
        .edges()
        .iter()
        .map(|&(x, _)| kappa.block(x).len())
        .sum();
    Ok(e.edge_count() + lumped.edge_count() - block_sum)
}

/// Manifold dimension of the lumpable kernels,
/// `dim W_κ(𝒴, ℰ) = |ℰ| − Σ |S_x| + |𝒟| − |𝒳|`.
pub fn dim_lumpable_kernels(kappa: &Lumping, e: &Digraph) -> Result<usize> {
    Ok(dim_lumpable_matrices(kappa, e)? - kappa.range_size())
}
