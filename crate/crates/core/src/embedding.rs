//! Kernel embeddings: the right inverses of lumping.
//!
//! A Markov embedding is determined by a lumping `κ : 𝒴 → 𝒳` and a positive
//! weight function `Λ` on `(𝒴, ℰ)` whose block rows are channels:
//!
//! ```text
//! Λ⋆P(y,y') = P(κ(y), κ(y')) Λ(y,y'),
//! Σ_{y' ∈ S_{x'}} Λ(y,y') = 1  whenever (κ(y), x') ∈ 𝒟.
//! ```
//!
//! Embedded kernels are κ-lumpable with `κ⋆Λ⋆P = P` (congruency), and Markov
//! embeddings preserve the divergence rate, the Fisher metric and both dual
//! connections. Notable sub-classes implemented here:
//!
//! - the *canonical* embedding `Λ^{(P)}(y,y') = P(y,y')/κ⋆P(κ(y),κ(y'))` of a
//!   lumpable kernel, which reproduces `P` from its lump;
//! - *memoryless* embeddings `Λ(y,y') = L(y')`, which are additionally
//!   m-geodesic affine, preserve reversibility, and embed rational-stationary
//!   kernels into doubly stochastic (or symmetric) ones;
//! - *exponential* embeddings `Φ⋆P̄ = 𝔰(P_⊙ ∘ (P̄ ∘ κ₂))` with a lumpable
//!   origin `P_⊙`, which are e-geodesic affine and recover the congruent
//!   Markov embeddings exactly when the origin lumps into the maxentropic
//!   kernel of the base graph;
//! - *Hudson* embeddings of any order `k ≥ 2`, lifting a kernel to its
//!   length-`k` path space, where sliding windows of observations of the base
//!   chain produce trajectories of the embedded chain. The order-2 embedded
//!   chain has the base edge measure as its stationary distribution, and its
//!   m-geodesic midpoints witness that Markov embeddings are not m-geodesic
//!   affine.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::kernel::{
    check_distribution, draw_categorical, normalize_rows, EdgeFn, NonnegMatrix, StochasticKernel,
    Trajectory,
};
use crate::lumping::{is_lumpable, lump, lumpability_violation, Lumping};
use crate::perron::{pf_pair, stochastic_rescale};
use crate::LUMPABILITY_TOL;

/// Default cap on the path-space size of a higher-order Hudson embedding.
pub const PATH_BUDGET: usize = 10_000;

/// A Markov embedding `(κ, Λ)` from `W(𝒳, 𝒟)` into `W(𝒴, ℰ)`.
#[derive(Debug, Clone)]
pub struct MarkovEmbedding {
    kappa: Lumping,
    lambda: NonnegMatrix,
    base_graph: Digraph,
}

impl MarkovEmbedding {
    pub fn new(kappa: Lumping, lambda: NonnegMatrix) -> Result<Self> {
        if lambda.n() != kappa.domain_size() {
            return Err(Error::DimensionMismatch(format!(
                "weights on {} states, lumping domain {}",
                lambda.n(),
                kappa.domain_size()
            )));
        }
        let base_graph = kappa.lumped_edge_set(lambda.graph())?;
        // Channel condition (iii): each admissible block row sums to one.
        for y in 0..kappa.domain_size() {
            let x = kappa.apply(y);
            for x_prime in 0..kappa.range_size() {
                if !base_graph.contains(x, x_prime) {
                    continue;
                }
                let mut sum = 0.0;
                let mut nonempty = false;
                for &y2 in kappa.block(x_prime) {
                    let v = lambda.entries()[[y, y2]];
                    if v > 0.0 {
                        nonempty = true;
                    }
                    sum += v;
                }
                if !nonempty {
                    return Err(Error::Incompatible { y, x_prime });
                }
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "channel row of state {y} into block {x_prime} sums to {sum:.17}"
                    )));
                }
            }
        }
        Ok(Self {
            kappa,
            lambda,
            base_graph,
        })
    }

    pub fn kappa(&self) -> &Lumping {
        &self.kappa
    }

    pub fn lambda(&self) -> &NonnegMatrix {
        &self.lambda
    }

    /// The base graph `(𝒳, 𝒟) = κ₂(𝒴, ℰ)`.
    pub fn base_graph(&self) -> &Digraph {
        &self.base_graph
    }

    pub fn target_graph(&self) -> &Digraph {
        self.lambda.graph()
    }

    /// `Λ⋆P`: embeds a kernel with support exactly `𝒟`.
    pub fn embed(&self, p: &StochasticKernel) -> Result<StochasticKernel> {
        if p.graph() != &self.base_graph {
            return Err(Error::DimensionMismatch(
                "kernel support differs from the embedding's base graph".into(),
            ));
        }
        let m = self.kappa.domain_size();
        let mut rows = Array2::zeros((m, m));
        for &(y, y2) in self.target_graph().edges() {
            rows[[y, y2]] =
                p.get(self.kappa.apply(y), self.kappa.apply(y2)) * self.lambda.entries()[[y, y2]];
        }
        StochasticKernel::new(self.target_graph().clone(), rows)
    }

    /// The linear extension of `Λ⋆` to arbitrary matrices on `(𝒳, 𝒟)`; the
    /// congruent-embedding conditions (linearity, monotonicity, right
    /// inverse of `κ⋆`) are exercised through this map.
    pub fn embed_linear(&self, a: &EdgeFn) -> Result<EdgeFn> {
        if a.graph().n() != self.base_graph.n() {
            return Err(Error::DimensionMismatch(
                "matrix size differs from the embedding's base space".into(),
            ));
        }
        let m = self.kappa.domain_size();
        let mut values = Array2::zeros((m, m));
        for &(y, y2) in self.target_graph().edges() {
            values[[y, y2]] =
                a.get(self.kappa.apply(y), self.kappa.apply(y2)) * self.lambda.entries()[[y, y2]];
        }
        EdgeFn::new(self.target_graph().clone(), values)
    }
}

/// The canonical embedding of a κ-lumpable kernel: block-row normalization
/// `Λ^{(P)}(y,y') = P(y,y')/P(y, S_{κ(y')})`, which agrees with
/// `P(y,y')/κ⋆P(κ(y),κ(y'))` and satisfies `Λ^{(P)}⋆ κ⋆P = P`.
pub fn canonical_embedding(p: &StochasticKernel, kappa: &Lumping) -> Result<MarkovEmbedding> {
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
    let m = kappa.domain_size();
    let mut lambda = Array2::zeros((m, m));
    for &(y, y2) in p.graph().edges() {
        let block_sum: f64 = kappa
            .block(kappa.apply(y2))
            .iter()
            .map(|&z| p.get(y, z))
            .sum();
        lambda[[y, y2]] = p.get(y, y2) / block_sum;
    }
    MarkovEmbedding::new(
        kappa.clone(),
        NonnegMatrix::new(p.graph().clone(), lambda)?,
    )
}

/// A memoryless Markov embedding: weights depend on the destination only.
#[derive(Debug, Clone)]
pub struct MemorylessEmbedding {
    kappa: Lumping,
    weights: Vec<f64>,
    base_graph: Digraph,
    target_graph: Digraph,
}

impl MemorylessEmbedding {
    /// The target edge set is the full preimage
    /// `ℰ = {(y,y') : (κ(y), κ(y')) ∈ 𝒟}`.
    pub fn new(kappa: Lumping, weights: Vec<f64>, base_graph: &Digraph) -> Result<Self> {
        if base_graph.n() != kappa.range_size() {
            return Err(Error::DimensionMismatch(format!(
                "base graph on {} vertices, lumping range {}",
                base_graph.n(),
                kappa.range_size()
            )));
        }
        if weights.len() != kappa.domain_size() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} states",
                weights.len(),
                kappa.domain_size()
            )));
        }
        if weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        for x in 0..kappa.range_size() {
            let sum: f64 = kappa.block(x).iter().map(|&y| weights[y]).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "weights of block {x} sum to {sum:.17}"
                )));
            }
        }
        let m = kappa.domain_size();
        let mut edges = Vec::new();
        for y in 0..m {
            for y2 in 0..m {
                if base_graph.contains(kappa.apply(y), kappa.apply(y2)) {
                    edges.push((y, y2));
                }
            }
        }
        let target_graph = Digraph::new(m, edges)?;
        Ok(Self {
            kappa,
            weights,
            base_graph: base_graph.clone(),
            target_graph,
        })
    }

    pub fn kappa(&self) -> &Lumping {
        &self.kappa
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target_graph(&self) -> &Digraph {
        &self.target_graph
    }

    /// The equivalent Markov embedding with `λ(y,y') = L(y')`.
    pub fn to_markov(&self) -> Result<MarkovEmbedding> {
        let m = self.kappa.domain_size();
        let mut lambda = Array2::zeros((m, m));
        for &(y, y2) in self.target_graph.edges() {
            lambda[[y, y2]] = self.weights[y2];
        }
        MarkovEmbedding::new(
            self.kappa.clone(),
            NonnegMatrix::new(self.target_graph.clone(), lambda)?,
        )
    }

    pub fn embed(&self, p: &StochasticKernel) -> Result<StochasticKernel> {
        self.to_markov()?.embed(p)
    }

    /// Closed-form stationary distribution `π(y) = π̄(κ(y)) L(y)` of the
    /// embedded kernel; no eigensolve involved beyond the base kernel's.
    pub fn embedded_stationary(&self, p: &StochasticKernel) -> Result<Vec<f64>> {
        if p.graph() != &self.base_graph {
            return Err(Error::DimensionMismatch(
                "kernel support differs from the embedding's base graph".into(),
            ));
        }
        let base_pi = p.stationary()?;
        Ok((0..self.kappa.domain_size())
            .map(|y| base_pi[self.kappa.apply(y)] * self.weights[y])
            .collect())
    }
}

/// Embeds a kernel with rational stationary distribution `(p₁/m, …, p_n/m)`
/// into a doubly stochastic kernel on `m` states. Reversible inputs produce
/// symmetric outputs.
pub fn embed_to_bistochastic(
    p: &StochasticKernel,
    numerators: &[u64],
) -> Result<(Lumping, MemorylessEmbedding, StochasticKernel)> {
    if numerators.len() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} numerators for {} states",
            numerators.len(),
            p.n()
        )));
    }
    if numerators.iter().any(|&x| x == 0) {
        return Err(Error::InvalidInput("numerators must be positive".into()));
    }
    let m: u64 = numerators.iter().sum();
    let pi = p.stationary()?;
    for (i, (&num, &value)) in numerators.iter().zip(&pi).enumerate() {
        let target = num as f64 / m as f64;
        if (value - target).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "stationary mass of state {i} is {value:.12}, not {num}/{m}"
            )));
        }
    }
    let mut map = Vec::with_capacity(m as usize);
    for (i, &num) in numerators.iter().enumerate() {
        map.extend(std::iter::repeat(i).take(num as usize));
    }
    let kappa = Lumping::new(map, p.n())?;
    let weights: Vec<f64> = (0..m as usize)
        .map(|j| 1.0 / numerators[kappa.apply(j)] as f64)
        .collect();
    let embedding = MemorylessEmbedding::new(kappa.clone(), weights, p.graph())?;
    let embedded = embedding.embed(p)?;
    Ok((kappa, embedding, embedded))
}

/// Best single-denominator rational approximation `(p₁/m, …)` of a float
/// stationary vector, with `m` capped. Returns the numerators, denominator
/// and the worst entrywise approximation error.
pub fn rationalize_distribution(pi: &[f64], max_denominator: u64) -> Result<(Vec<u64>, u64, f64)> {
    if pi.is_empty() {
        return Err(Error::Empty);
    }
    let mut best: Option<(Vec<u64>, u64, f64)> = None;
    for m in pi.len() as u64..=max_denominator {
        let nums: Vec<u64> = pi.iter().map(|&x| (x * m as f64).round() as u64).collect();
        if nums.iter().any(|&x| x == 0) || nums.iter().sum::<u64>() != m {
            continue;
        }
        let err = pi
            .iter()
            .zip(&nums)
            .map(|(&x, &n)| (x - n as f64 / m as f64).abs())
            .fold(0.0_f64, f64::max);
        if best.as_ref().is_none_or(|b| err < b.2) {
            best = Some((nums, m, err));
        }
        if err < 1e-12 {
            break;
        }
    }
    best.ok_or_else(|| {
        Error::InvalidInput(format!(
            "no rational approximation with denominator <= {max_denominator}"
        ))
    })
}

/// An exponential embedding `Φ⋆` with κ-lumpable origin `P_⊙`.
#[derive(Debug, Clone)]
pub struct ExponentialEmbedding {
    origin: StochasticKernel,
    kappa: Lumping,
    base_graph: Digraph,
    lumped_origin: StochasticKernel,
}

impl ExponentialEmbedding {
    pub fn new(origin: StochasticKernel, kappa: Lumping) -> Result<Self> {
        let lumped_origin = lump(&origin, &kappa)?;
        let base_graph = kappa.lumped_edge_set(origin.graph())?;
        Ok(Self {
            origin,
            kappa,
            base_graph,
            lumped_origin,
        })
    }

    pub fn origin(&self) -> &StochasticKernel {
        &self.origin
    }

    pub fn kappa(&self) -> &Lumping {
        &self.kappa
    }

    pub fn base_graph(&self) -> &Digraph {
        &self.base_graph
    }

    /// `Φ⋆P̄ = 𝔰(P̃)` with `P̃(y,y') = P_⊙(y,y') P̄(κ(y),κ(y'))`. The PF solve
    /// happens on the base-space Hadamard product `κ⋆P_⊙ ∘ P̄`, which is both
    /// cheaper and better conditioned than rescaling in the embedded space.
    pub fn embed(&self, p: &StochasticKernel) -> Result<StochasticKernel> {
        let hadamard = self.base_hadamard(p)?;
        let pair = pf_pair(&hadamard)?;
        let m = self.kappa.domain_size();
        let mut rows = Array2::zeros((m, m));
        for &(y, y2) in self.origin.graph().edges() {
            rows[[y, y2]] = self.origin.get(y, y2)
                * p.get(self.kappa.apply(y), self.kappa.apply(y2))
                * pair.v[self.kappa.apply(y2)];
        }
        normalize_rows(&mut rows);
        StochasticKernel::new(self.origin.graph().clone(), rows)
    }

    /// The lump of the embedded kernel: `κ⋆Φ⋆P̄ = 𝔰(κ⋆P_⊙ ∘ P̄)`.
    pub fn lumped_image(&self, p: &StochasticKernel) -> Result<StochasticKernel> {
        stochastic_rescale(&self.base_hadamard(p)?)
    }

    fn base_hadamard(&self, p: &StochasticKernel) -> Result<NonnegMatrix> {
        if p.graph() != &self.base_graph {
            return Err(Error::DimensionMismatch(
                "kernel support differs from the embedding's base graph".into(),
            ));
        }
        let n = self.base_graph.n();
        let mut entries = Array2::zeros((n, n));
        for &(x, x2) in self.base_graph.edges() {
            entries[[x, x2]] = self.lumped_origin.get(x, x2) * p.get(x, x2);
        }
        NonnegMatrix::new(self.base_graph.clone(), entries)
    }
}

/// The order-`k` Hudson embedding: lifts kernels on `(𝒳, 𝒟)` to the space of
/// length-`k` paths, lumped back by the last coordinate.
#[derive(Debug, Clone)]
pub struct HudsonEmbedding {
    base_graph: Digraph,
    order: usize,
    paths: Vec<Vec<usize>>,
    path_graph: Digraph,
    lumping: Lumping,
}

impl HudsonEmbedding {
    pub fn new(base_graph: &Digraph, order: usize, budget: Option<usize>) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidInput(
                "Hudson embedding order must be at least 2".into(),
            ));
        }
        if !base_graph.is_strongly_connected() {
            return Err(Error::NotIrreducible);
        }
        let budget = budget.unwrap_or(PATH_BUDGET);
        let paths = enumerate_paths(base_graph, order, budget)?;
        let index_of = |path: &[usize]| -> usize {
            paths
                .binary_search_by(|p| p.as_slice().cmp(path))
                .expect("continuation is a valid path")
        };
        let mut edges = Vec::new();
        for (s, path) in paths.iter().enumerate() {
            let last = path[order - 1];
            for x_next in base_graph.out_neighbors(last) {
                let mut next: Vec<usize> = path[1..].to_vec();
                next.push(x_next);
                edges.push((s, index_of(&next)));
            }
        }
        let path_graph = Digraph::new(paths.len(), edges)?;
        let map: Vec<usize> = paths.iter().map(|p| p[order - 1]).collect();
        let lumping = Lumping::new(map, base_graph.n())?;
        Ok(Self {
            base_graph: base_graph.clone(),
            order,
            paths,
            path_graph,
            lumping,
        })
    }

    pub fn base_graph(&self) -> &Digraph {
        &self.base_graph
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn path_graph(&self) -> &Digraph {
        &self.path_graph
    }

    /// The Hudson lumping `h^{(k)}`: a path maps to its last vertex.
    pub fn lumping(&self) -> &Lumping {
        &self.lumping
    }

    /// `H⋆^{(k)}P(s,s') = 1[(s,s') ∈ H^{(k)}] P(h(s), h(s'))`.
    pub fn embed(&self, p: &StochasticKernel) -> Result<StochasticKernel> {
        if p.graph() != &self.base_graph {
            return Err(Error::DimensionMismatch(
                "kernel support differs from the embedding's base graph".into(),
            ));
        }
        let size = self.paths.len();
        let mut rows = Array2::zeros((size, size));
        for &(s, s2) in self.path_graph.edges() {
            rows[[s, s2]] = p.get(self.lumping.apply(s), self.lumping.apply(s2));
        }
        StochasticKernel::new(self.path_graph.clone(), rows)
    }

    /// Closed-form stationary distribution of the embedded chain: the
    /// stationary path measure `π̄(x₁)P(x₁,x₂)⋯P(x_{k−1},x_k)`. For `k = 2`
    /// this is exactly the base edge measure.
    pub fn embedded_stationary(&self, p: &StochasticKernel) -> Result<Vec<f64>> {
        let base_pi = p.stationary()?;
        Ok(self
            .paths
            .iter()
            .map(|path| {
                let mut mass = base_pi[path[0]];
                for w in path.windows(2) {
                    mass *= p.get(w[0], w[1]);
                }
                mass
            })
            .collect())
    }

    /// Deterministic lift of a base trajectory to the path space by sliding
    /// windows of width `k`.
    pub fn sliding_windows(&self, base: &Trajectory) -> Result<Trajectory> {
        if base.len() < self.order {
            return Err(Error::InvalidInput(format!(
                "trajectory of length {} is shorter than the order {}",
                base.len(),
                self.order
            )));
        }
        let states: Vec<usize> = base
            .states()
            .windows(self.order)
            .map(|w| {
                self.paths
                    .binary_search_by(|p| p.as_slice().cmp(w))
                    .map_err(|_| {
                        Error::InvalidInput("trajectory leaves the base edge set".into())
                    })
            })
            .collect::<Result<_>>()?;
        Trajectory::new(states, &self.path_graph)
    }
}

fn enumerate_paths(graph: &Digraph, order: usize, budget: usize) -> Result<Vec<Vec<usize>>> {
    // Depth-first in lexicographic order; out_neighbors iterates sorted.
    let mut paths = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..graph.n()).rev().map(|x| vec![x]).collect();
    while let Some(path) = stack.pop() {
        if path.len() == order {
            paths.push(path);
            if paths.len() > budget {
                return Err(Error::PathBudgetExceeded {
                    order,
                    budget,
                    size: paths.len(),
                });
            }
            continue;
        }
        let last = *path.last().unwrap();
        let mut nexts: Vec<usize> = graph.out_neighbors(last).collect();
        nexts.reverse();
        for x in nexts {
            let mut extended = path.clone();
            extended.push(x);
            stack.push(extended);
        }
    }
    Ok(paths)
}

/// Outcome of instantiating the order-2 m-geodesic midpoint counterexample.
#[derive(Debug, Clone)]
pub struct HudsonMidpointReport {
    pub p: f64,
    pub midpoint: StochasticKernel,
    pub closed_form: Array2<f64>,
    pub closed_form_deviation: f64,
    pub violation: f64,
    pub witness: (usize, usize, usize, usize),
}

/// Builds the symmetric two-state pair `P̄₀, P̄₁`, Hudson-embeds both, and
/// takes the m-geodesic midpoint of the images, which fails `h`-lumpability
/// for every `p ≠ 1/2`; at `p = 1/4` the violation is exactly `1/4`.
pub fn hudson_midpoint_counterexample(p: f64) -> Result<HudsonMidpointReport> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} outside (0, 1)")));
    }
    if (p - 0.5).abs() < 1e-12 {
        return Err(Error::Domain(
            "p = 1/2 is degenerate: the midpoint becomes lumpable".into(),
        ));
    }
    let base0 = StochasticKernel::from_rows_vec(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])?;
    let base1 = StochasticKernel::from_rows_vec(vec![vec![p, 1.0 - p], vec![1.0 - p, p]])?;
    let hudson = HudsonEmbedding::new(&Digraph::complete(2), 2, None)?;
    let p0 = hudson.embed(&base0)?;
    let p1 = hudson.embed(&base1)?;
    let midpoint = crate::geometry::m_geodesic(&p0, &p1, 0.5)?;

    let a = (1.0 - p) * (1.0 - p) + p * p;
    let b = 2.0 * p * (1.0 - p);
    let closed_form = Array2::from_shape_vec(
        (4, 4),
        vec![
            a, b, 0.0, 0.0, //
            0.0, 0.0, a, b, //
            b, a, 0.0, 0.0, //
            0.0, 0.0, b, a,
        ],
    )
    .expect("4x4 shape");
    let mut deviation = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            deviation = deviation.max((midpoint.get(i, j) - closed_form[[i, j]]).abs());
        }
    }
    let (violation, witness) = lumpability_violation(&midpoint, hudson.lumping())?;
    Ok(HudsonMidpointReport {
        p,
        midpoint,
        closed_form,
        closed_form_deviation: deviation,
        violation,
        witness,
    })
}

/// Simulates a trajectory of the embedded chain `Λ⋆P` from a single base
/// trajectory: `Y₁ ∼ ν_{|X₁}` and `Y_t ∼ (Λ(Y_{t−1}, y'))_{y' ∈ S_{X_t}}`.
pub fn simulate_embedded(
    e: &MarkovEmbedding,
    base: &Trajectory,
    nu: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    check_distribution(nu, e.kappa().domain_size())?;
    for w in base.states().windows(2) {
        if !e.base_graph().contains(w[0], w[1]) {
            return Err(Error::InvalidInput(format!(
                "base pair ({}, {}) is not a base edge",
                w[0], w[1]
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first_block = e.kappa().block(base.states()[0]);
    let first_weights: Vec<f64> = first_block.iter().map(|&y| nu[y]).collect();
    if first_weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidInput(
            "initial distribution puts no mass on the first base state's block".into(),
        ));
    }
    let mut states = Vec::with_capacity(base.len());
    let mut current = first_block[draw_categorical(&first_weights, &mut rng)];
    states.push(current);
    for &x in &base.states()[1..] {
        let block = e.kappa().block(x);
        let weights: Vec<f64> = block
            .iter()
            .map(|&y2| e.lambda().entries()[[current, y2]])
            .collect();
        current = block[draw_categorical(&weights, &mut rng)];
        states.push(current);
    }
    Trajectory::new(states, e.target_graph())
}

/// The `k`-th order composite lumping `κ^{(k)}⋆P = κ'⋆ H⋆^{(k)} P`: Hudson
/// lift of order `k`, then an ordinary lumping on the path space. For
/// `k = 1` this is the ordinary lumping.
pub fn composite_lump(
    p: &StochasticKernel,
    k: usize,
    kappa2: &Lumping,
    budget: Option<usize>,
) -> Result<StochasticKernel> {
    if k == 0 {
        return Err(Error::InvalidInput("order must be at least 1".into()));
    }
    if k == 1 {
        return lump(p, kappa2);
    }
    let hudson = HudsonEmbedding::new(p.graph(), k, budget)?;
    let lifted = hudson.embed(p)?;
    lump(&lifted, kappa2)
}

/// The jump kernel `P(y,y') = μ(y' − y mod m)` on the cyclic group `ℤ/mℤ`;
/// doubly stochastic, hence with uniform stationary distribution.
pub fn make_cyclic_kernel(mu: &[f64]) -> Result<StochasticKernel> {
    let m = mu.len();
    check_distribution(mu, m)?;
    let mut rows = Array2::zeros((m, m));
    for y in 0..m {
        for jump in 0..m {
            rows[[y, (y + jump) % m]] = mu[jump];
        }
    }
    StochasticKernel::from_rows(rows)
}

/// Any of the supported embedding classes, under one dispatchable roof.
#[derive(Debug, Clone)]
pub enum Embedding {
    Markov(MarkovEmbedding),
    Memoryless(MemorylessEmbedding),
    Exponential(ExponentialEmbedding),
    Hudson(HudsonEmbedding),
}

impl Embedding {
    pub fn embed(&self, p: &StochasticKernel) -> Result<StochasticKernel> {
        match self {
            Embedding::Markov(e) => e.embed(p),
            Embedding::Memoryless(e) => e.embed(p),
            Embedding::Exponential(e) => e.embed(p),
            Embedding::Hudson(e) => e.embed(p),
        }
    }

    /// The lumping that recovers the base space, where one exists.
    pub fn kappa(&self) -> &Lumping {
        match self {
            Embedding::Markov(e) => e.kappa(),
            Embedding::Memoryless(e) => e.kappa(),
            Embedding::Exponential(e) => e.kappa(),
            Embedding::Hudson(e) => e.lumping(),
        }
    }
}

/// Checks congruency `κ⋆ E⋆ P = P` and returns the deviation.
pub fn congruency_defect(e: &Embedding, p: &StochasticKernel) -> Result<f64> {
    let embedded = e.embed(p)?;
    if !is_lumpable(&embedded, e.kappa(), LUMPABILITY_TOL)? {
        let (violation, _) = lumpability_violation(&embedded, e.kappa())?;
        return Ok(violation.max(1.0));
    }
    let back = lump(&embedded, e.kappa())?;
    Ok(back.max_abs_diff(p))
}
