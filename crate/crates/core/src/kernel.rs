//! Irreducible Markov kernels over a strongly connected digraph.
//!
//! The central object is [`StochasticKernel`], a row-stochastic matrix `P`
//! whose positive entries coincide exactly with the edges of its support
//! digraph `(𝒴, ℰ)`. Attached to every irreducible kernel are its unique
//! stationary distribution `π` (the positive left fixed point `πP = π`) and
//! its edge measure `Q = diag(π) P`, the stationary pair law with equal row
//! and column marginals.
//!
//! The divergence rate of `P` from `P'`,
//!
//! ```text
//! D(P ‖ P') = Σ_{(y,y') ∈ ℰ} π(y) P(y,y') log ( P(y,y') / P'(y,y') ),
//! ```
//!
//! is nonnegative, zero exactly when the kernels agree, and requires
//! `support(P) ⊆ support(P')`. The entropy rate is `H(P) = −Σ Q log P`, and
//! the time reversal `P*(y,y') = π(y') P(y',y) / π(y)` induces the additive
//! `(P + P*)/2` and multiplicative `P P*` reversiblizations, both reversible.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::perron::{left_pf, pf_pair, stochastic_rescale};
use crate::ROW_SUM_TOL;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A nonnegative matrix that is entrywise positive exactly on the edges of
/// its digraph (the set `F₊(𝒴, ℰ)`).
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    graph: Digraph,
    entries: Array2<f64>,
}

impl NonnegMatrix {
    pub fn new(graph: Digraph, entries: Array2<f64>) -> Result<Self> {
        check_support(&graph, &entries)?;
        Ok(Self { graph, entries })
    }

    /// Builds the matrix and infers the support from the strictly positive
    /// entries.
    pub fn from_entries(entries: Array2<f64>) -> Result<Self> {
        let graph = support_of(&entries)?;
        Ok(Self { graph, entries })
    }

    /// The indicator matrix `δ_ℰ` of an edge set.
    pub fn indicator(graph: &Digraph) -> Self {
        let mut entries = Array2::zeros((graph.n(), graph.n()));
        for &(i, j) in graph.edges() {
            entries[[i, j]] = 1.0;
        }
        Self {
            graph: graph.clone(),
            entries,
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn is_irreducible(&self) -> bool {
        self.graph.is_strongly_connected()
    }
}

/// True when the support digraph of `m` is strongly connected.
pub fn is_irreducible(m: &NonnegMatrix) -> bool {
    m.is_irreducible()
}

/// A real function supported on the edge set: an element of the vector space
/// `F(𝒴, ℰ)`. Entries may take any sign on edges and are zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFn {
    graph: Digraph,
    values: Array2<f64>,
}

impl EdgeFn {
    pub fn new(graph: Digraph, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != graph.n() || values.ncols() != graph.n() {
            return Err(Error::DimensionMismatch(format!(
                "edge function is {}x{}, graph has {} vertices",
                values.nrows(),
                values.ncols(),
                graph.n()
            )));
        }
        for i in 0..graph.n() {
            for j in 0..graph.n() {
                let v = values[[i, j]];
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("edge function entry ({i}, {j})")));
                }
                if v != 0.0 && !graph.contains(i, j) {
                    return Err(Error::SupportMismatch { i, j, value: v });
                }
            }
        }
        Ok(Self { graph, values })
    }

    pub fn zero(graph: &Digraph) -> Self {
        Self {
            graph: graph.clone(),
            values: Array2::zeros((graph.n(), graph.n())),
        }
    }

    /// The basis element `E^{y,y'}`: indicator of a single edge.
    pub fn unit(graph: &Digraph, y: usize, y2: usize) -> Result<Self> {
        if !graph.contains(y, y2) {
            return Err(Error::InvalidInput(format!("({y}, {y2}) is not an edge")));
        }
        let mut values = Array2::zeros((graph.n(), graph.n()));
        values[[y, y2]] = 1.0;
        Ok(Self {
            graph: graph.clone(),
            values,
        })
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Values listed in the graph's edge order, for rank computations.
    pub fn to_edge_vector(&self) -> Vec<f64> {
        self.graph
            .edges()
            .iter()
            .map(|&(i, j)| self.values[[i, j]])
            .collect()
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &EdgeFn) {
        self.values.scaled_add(alpha, &other.values);
    }

    /// Pairing `Σ_{(y,y') ∈ ℰ} w(y,y') f(y,y')` against edge weights `w`.
    pub fn pair_with(&self, weights: &Array2<f64>) -> f64 {
        self.graph
            .edges()
            .iter()
            .map(|&(i, j)| weights[[i, j]] * self.values[[i, j]])
            .sum()
    }
}

/// A row-stochastic irreducible transition kernel `P ∈ W(𝒴, ℰ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticKernel {
    graph: Digraph,
    rows: Array2<f64>,
}

impl StochasticKernel {
    /// Validates support, row sums and irreducibility.
    pub fn new(graph: Digraph, rows: Array2<f64>) -> Result<Self> {
        check_support(&graph, &rows)?;
        for i in 0..graph.n() {
            let sum: f64 = rows.row(i).sum();
            let dev = (sum - 1.0).abs();
            if dev > ROW_SUM_TOL {
                return Err(Error::RowNotStochastic { row: i, sum, dev });
            }
        }
        if !graph.is_strongly_connected() {
            return Err(Error::NotIrreducible);
        }
        Ok(Self { graph, rows })
    }

    /// Infers the support from the strictly positive entries.
    pub fn from_rows(rows: Array2<f64>) -> Result<Self> {
        let graph = support_of(&rows)?;
        Self::new(graph, rows)
    }

    pub fn from_rows_vec(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        if flat.len() != n * n {
            return Err(Error::DimensionMismatch("ragged row matrix".into()));
        }
        let arr = Array2::from_shape_vec((n, n), flat)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::from_rows(arr)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[[i, j]]
    }

    pub fn as_nonneg(&self) -> NonnegMatrix {
        NonnegMatrix {
            graph: self.graph.clone(),
            entries: self.rows.clone(),
        }
    }

    /// Entrywise logarithm on the edge set, as an [`EdgeFn`].
    pub fn log_on_edges(&self) -> EdgeFn {
        let mut values = Array2::zeros((self.n(), self.n()));
        for &(i, j) in self.graph.edges() {
            values[[i, j]] = self.rows[[i, j]].ln();
        }
        EdgeFn {
            graph: self.graph.clone(),
            values,
        }
    }

    /// The unique stationary distribution, computed as the left PF vector of
    /// `P` and normalized to total mass one.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let m = self.as_nonneg();
        let (_, mut pi) = left_pf(&m)?;
        let total: f64 = pi.iter().sum();
        for p in &mut pi {
            *p /= total;
        }
        // πP = π must hold to 1e-12 for an accepted output.
        let mut residual = 0.0_f64;
        for j in 0..self.n() {
            let col: f64 = (0..self.n()).map(|i| pi[i] * self.rows[[i, j]]).sum();
            residual = residual.max((col - pi[j]).abs());
        }
        if residual > 1e-12 {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual,
            });
        }
        Ok(pi)
    }

    pub fn edge_measure(&self) -> Result<EdgeMeasure> {
        let pi = self.stationary()?;
        let mut q = Array2::zeros((self.n(), self.n()));
        for &(i, j) in self.graph.edges() {
            q[[i, j]] = pi[i] * self.rows[[i, j]];
        }
        Ok(EdgeMeasure {
            graph: self.graph.clone(),
            q,
        })
    }

    /// Time reversal `P*(y,y') = π(y') P(y',y) / π(y)`.
    pub fn time_reversal(&self) -> Result<StochasticKernel> {
        let pi = self.stationary()?;
        let n = self.n();
        let mut rows = Array2::zeros((n, n));
        for &(i, j) in self.graph.edges() {
            rows[[j, i]] = pi[i] * self.rows[[i, j]] / pi[j];
        }
        normalize_rows(&mut rows);
        StochasticKernel::from_rows(rows)
    }

    /// Detailed balance up to `tol`: `max |π(y)P(y,y') − π(y')P(y',y)| ≤ tol`.
    pub fn is_reversible(&self, tol: f64) -> Result<bool> {
        let q = self.edge_measure()?;
        let mut worst = 0.0_f64;
        for i in 0..self.n() {
            for j in 0..self.n() {
                worst = worst.max((q.q[[i, j]] - q.q[[j, i]]).abs());
            }
        }
        Ok(worst <= tol)
    }

    pub fn max_abs_diff(&self, other: &StochasticKernel) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n() {
            for j in 0..self.n() {
                worst = worst.max((self.rows[[i, j]] - other.rows[[i, j]]).abs());
            }
        }
        worst
    }
}

/// The edge measure `Q = diag(π) P`: a joint law on edges whose row and
/// column marginals agree and equal the stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMeasure {
    graph: Digraph,
    q: Array2<f64>,
}

impl EdgeMeasure {
    /// Validates support, total mass one and equal marginals (to `1e-10`).
    pub fn new(graph: Digraph, q: Array2<f64>) -> Result<Self> {
        check_support(&graph, &q)?;
        let total: f64 = q.sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "edge measure has total mass {total:.17}"
            )));
        }
        let m = Self { graph, q };
        let (state, gap) = m.worst_marginal_gap();
        if gap > 1e-10 {
            return Err(Error::MarginalMismatch { state, gap });
        }
        Ok(m)
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn q(&self) -> &Array2<f64> {
        &self.q
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[[i, j]]
    }

    /// Row marginal, i.e. the stationary distribution of the pertaining kernel.
    pub fn stationary(&self) -> Vec<f64> {
        (0..self.graph.n()).map(|i| self.q.row(i).sum()).collect()
    }

    pub fn worst_marginal_gap(&self) -> (usize, f64) {
        let n = self.graph.n();
        let mut worst = (0, 0.0_f64);
        for i in 0..n {
            let row: f64 = self.q.row(i).sum();
            let col: f64 = self.q.column(i).sum();
            let gap = (row - col).abs();
            if gap > worst.1 {
                worst = (i, gap);
            }
        }
        worst
    }
}

/// Recovers the kernel pertaining to an edge measure: `P(y,y') = Q(y,y')/π(y)`.
pub fn kernel_from_edge_measure(q: &EdgeMeasure) -> Result<StochasticKernel> {
    let pi = q.stationary();
    let n = q.graph.n();
    let mut rows = Array2::zeros((n, n));
    for &(i, j) in q.graph.edges() {
        rows[[i, j]] = q.q[[i, j]] / pi[i];
    }
    normalize_rows(&mut rows);
    StochasticKernel::new(q.graph.clone(), rows)
}

/// The divergence rate `D(P ‖ P') = Σ Q(y,y') log(P(y,y')/P'(y,y'))`.
///
/// Requires `support(p) ⊆ support(p2)`; the convention `0 · log(0/q) = 0` is
/// implicit since the sum runs over the support of `p` only.
pub fn kl_rate(p: &StochasticKernel, p2: &StochasticKernel) -> Result<f64> {
    if p.n() != p2.n() {
        return Err(Error::DimensionMismatch(format!(
            "kernels on {} and {} states",
            p.n(),
            p2.n()
        )));
    }
    for &(i, j) in p.graph.edges() {
        if !p2.graph.contains(i, j) {
            return Err(Error::AbsoluteContinuity {
                left: format!("P with edge ({i}, {j})"),
                right: "P'".into(),
            });
        }
    }
    let q = p.edge_measure()?;
    let mut d = 0.0;
    for &(i, j) in p.graph.edges() {
        d += q.get(i, j) * (p.get(i, j) / p2.get(i, j)).ln();
    }
    Ok(d)
}

/// The entropy rate `H(P) = −Σ Q(y,y') log P(y,y')`.
pub fn entropy_rate(p: &StochasticKernel) -> Result<f64> {
    let q = p.edge_measure()?;
    let mut h = 0.0;
    for &(i, j) in p.graph.edges() {
        h -= q.get(i, j) * p.get(i, j).ln();
    }
    Ok(h)
}

/// Additive reversiblization `(P + P*)/2`; always reversible, with the same
/// stationary distribution as `P`.
pub fn additive_reversiblization(p: &StochasticKernel) -> Result<StochasticKernel> {
    let rev = p.time_reversal()?;
    let rows = (&p.rows + &rev.rows) / 2.0;
    StochasticKernel::from_rows(rows)
}

/// Multiplicative reversiblization `P P*`; reversible with stationary `π`.
pub fn multiplicative_reversiblization(p: &StochasticKernel) -> Result<StochasticKernel> {
    let rev = p.time_reversal()?;
    let mut rows = p.rows.dot(&rev.rows);
    normalize_rows(&mut rows);
    StochasticKernel::from_rows(rows)
}

/// The maxentropic kernel `U = 𝔰(δ_ℰ)` on a strongly connected digraph. Its
/// entropy rate is `log ρ` where `ρ` is the PF root of the edge indicator.
pub fn max_entropy_kernel(g: &Digraph) -> Result<StochasticKernel> {
    let delta = NonnegMatrix::indicator(g);
    stochastic_rescale(&delta)
}

/// PF root of the edge-set indicator, i.e. `exp` of the maximum entropy rate.
pub fn graph_pf_root(g: &Digraph) -> Result<f64> {
    let delta = NonnegMatrix::indicator(g);
    Ok(pf_pair(&delta)?.rho)
}

/// A finite state trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<usize>,
}

impl Trajectory {
    /// Checks that consecutive pairs lie in the edge set of `graph`.
    pub fn new(states: Vec<usize>, graph: &Digraph) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty);
        }
        for &s in &states {
            if s >= graph.n() {
                return Err(Error::InvalidInput(format!("state {s} out of range")));
            }
        }
        for w in states.windows(2) {
            if !graph.contains(w[0], w[1]) {
                return Err(Error::InvalidInput(format!(
                    "consecutive pair ({}, {}) is not an edge",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { states })
    }

    pub(crate) fn from_states_unchecked(states: Vec<usize>) -> Self {
        Self { states }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Empirical pair frequencies, normalized by the number of transitions.
    pub fn pair_frequencies(&self, n: usize) -> Array2<f64> {
        let mut freq = Array2::zeros((n, n));
        for w in self.states.windows(2) {
            freq[[w[0], w[1]]] += 1.0;
        }
        if self.states.len() > 1 {
            freq /= (self.states.len() - 1) as f64;
        }
        freq
    }
}

/// Draws a length-`k` trajectory from `p` started at `mu`, reproducibly for a
/// given seed.
pub fn sample_trajectory(
    p: &StochasticKernel,
    mu: &[f64],
    k: usize,
    seed: u64,
) -> Result<Trajectory> {
    if k == 0 {
        return Err(Error::InvalidInput("trajectory length must be >= 1".into()));
    }
    check_distribution(mu, p.n())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(k);
    let mut current = draw_categorical(mu, &mut rng);
    states.push(current);
    for _ in 1..k {
        let row = p.rows.row(current);
        current = draw_categorical(row.as_slice().unwrap(), &mut rng);
        states.push(current);
    }
    Ok(Trajectory { states })
}

pub(crate) fn draw_categorical<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

pub(crate) fn check_distribution(mu: &[f64], n: usize) -> Result<()> {
    if mu.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "distribution has {} entries, expected {n}",
            mu.len()
        )));
    }
    if mu.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidInput("negative or non-finite mass".into()));
    }
    let total: f64 = mu.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "distribution sums to {total:.12}"
        )));
    }
    Ok(())
}

/// Rescales each row to sum exactly to one (used after float-level assembly
/// of kernels whose rows are stochastic only up to eigensolve accuracy).
pub(crate) fn normalize_rows(rows: &mut Array2<f64>) {
    for mut row in rows.rows_mut() {
        let s: f64 = row.sum();
        if s > 0.0 {
            row.mapv_inplace(|x| x / s);
        }
    }
}

fn support_of(entries: &Array2<f64>) -> Result<Digraph> {
    let n = entries.nrows();
    if n == 0 || entries.ncols() != n {
        return Err(Error::Empty);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = entries[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) = {v} is negative or non-finite"
                )));
            }
            if v > 0.0 {
                edges.push((i, j));
            }
        }
    }
    Digraph::new(n, edges)
}

fn check_support(graph: &Digraph, entries: &Array2<f64>) -> Result<()> {
    let n = graph.n();
    if entries.nrows() != n || entries.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, graph has {n} vertices",
            entries.nrows(),
            entries.ncols()
        )));
    }
    for i in 0..n {
        for j in 0..n {
            let v = entries[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) = {v} is negative or non-finite"
                )));
            }
            let on_edge = graph.contains(i, j);
            if (v > 0.0) != on_edge {
                return Err(Error::SupportMismatch { i, j, value: v });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    pub(crate) fn weather() -> StochasticKernel {
        StochasticKernel::from_rows(array![[0.8, 0.2], [0.5, 0.5]]).unwrap()
    }

    #[test]
    fn weather_kernel_is_irreducible() {
        let p = weather();
        assert!(is_irreducible(&p.as_nonneg()));
    }

    #[test]
    fn weather_stationary_is_five_sevenths() {
        let pi = weather().stationary().unwrap();
        assert_abs_diff_eq!(pi[0], 5.0 / 7.0, epsilon = 1e-13);
        assert_abs_diff_eq!(pi[1], 2.0 / 7.0, epsilon = 1e-13);
    }

    #[test]
    fn weather_edge_measure() {
        let q = weather().edge_measure().unwrap();
        assert_abs_diff_eq!(q.get(0, 0), 4.0 / 7.0, epsilon = 1e-13);
        assert_abs_diff_eq!(q.get(0, 1), 1.0 / 7.0, epsilon = 1e-13);
        assert_abs_diff_eq!(q.get(1, 0), 1.0 / 7.0, epsilon = 1e-13);
        assert_abs_diff_eq!(q.get(1, 1), 1.0 / 7.0, epsilon = 1e-13);
    }

    #[test]
    fn uniform_kernel_stationary_and_entropy() {
        for n in [2, 3, 5] {
            let u = max_entropy_kernel(&Digraph::complete(n)).unwrap();
            let pi = u.stationary().unwrap();
            for &p in &pi {
                assert_abs_diff_eq!(p, 1.0 / n as f64, epsilon = 1e-13);
            }
            assert_abs_diff_eq!(entropy_rate(&u).unwrap(), (n as f64).ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn edge_measure_round_trip() {
        let p = weather();
        let back = kernel_from_edge_measure(&p.edge_measure().unwrap()).unwrap();
        assert!(p.max_abs_diff(&back) <= 1e-12);
    }

    #[test]
    fn kl_zero_on_self_and_positive_otherwise() {
        let p = weather();
        assert_abs_diff_eq!(kl_rate(&p, &p).unwrap(), 0.0, epsilon = 1e-15);
        let p2 = StochasticKernel::from_rows(array![[0.7, 0.3], [0.4, 0.6]]).unwrap();
        assert!(kl_rate(&p, &p2).unwrap() > 0.0);
    }

    #[test]
    fn kl_requires_absolute_continuity() {
        let p = StochasticKernel::from_rows(array![[0.5, 0.5], [1.0, 0.0]]).unwrap();
        let full = weather();
        // support(full) ⊄ support(p): edge (1,1) missing in p.
        assert!(matches!(
            kl_rate(&full, &p),
            Err(Error::AbsoluteContinuity { .. })
        ));
        // The other direction is fine.
        assert!(kl_rate(&p, &full).is_ok());
    }

    #[test]
    fn deterministic_cycle_entropy_is_zero() {
        let p = StochasticKernel::from_rows(array![
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0]
        ])
        .unwrap();
        assert_abs_diff_eq!(entropy_rate(&p).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn three_cycle_time_reversal_is_reverse_cycle() {
        let p = StochasticKernel::from_rows(array![
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0]
        ])
        .unwrap();
        let rev = p.time_reversal().unwrap();
        assert_abs_diff_eq!(rev.get(1, 0), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rev.get(0, 2), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rev.get(2, 1), 1.0, epsilon = 1e-13);
        assert!(!p.is_reversible(1e-10).unwrap());
    }

    #[test]
    fn time_reversal_is_involution() {
        let p = StochasticKernel::from_rows(array![
            [0.1, 0.6, 0.3],
            [0.5, 0.2, 0.3],
            [0.3, 0.3, 0.4]
        ])
        .unwrap();
        let back = p.time_reversal().unwrap().time_reversal().unwrap();
        assert!(p.max_abs_diff(&back) <= 1e-12);
    }

    #[test]
    fn two_state_kernels_are_reversible() {
        let p = weather();
        assert!(p.is_reversible(1e-10).unwrap());
        assert!(p.time_reversal().unwrap().max_abs_diff(&p) <= 1e-12);
    }

    #[test]
    fn reversiblizations_are_reversible() {
        let p = StochasticKernel::from_rows(array![
            [0.1, 0.6, 0.3],
            [0.5, 0.2, 0.3],
            [0.3, 0.3, 0.4]
        ])
        .unwrap();
        let add = additive_reversiblization(&p).unwrap();
        let mul = multiplicative_reversiblization(&p).unwrap();
        assert!(add.is_reversible(1e-10).unwrap());
        assert!(mul.is_reversible(1e-10).unwrap());
        // Additive reversiblization keeps the stationary distribution.
        let pi = p.stationary().unwrap();
        let pi_add = add.stationary().unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(pi[i], pi_add[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn fibonacci_graph_maxent_is_golden_ratio() {
        let g = Digraph::new(2, vec![(0, 0), (0, 1), (1, 0)]).unwrap();
        let u = max_entropy_kernel(&g).unwrap();
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(entropy_rate(&u).unwrap(), phi.ln(), epsilon = 1e-12);
    }

    #[test]
    fn sample_trajectory_single_draw() {
        let p = weather();
        let t = sample_trajectory(&p, &[1.0, 0.0], 1, 7).unwrap();
        assert_eq!(t.states(), &[0]);
    }

    #[test]
    fn sample_trajectory_deterministic_cycle() {
        let p = StochasticKernel::from_rows(array![
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0]
        ])
        .unwrap();
        let t = sample_trajectory(&p, &[1.0, 0.0, 0.0], 7, 3).unwrap();
        assert_eq!(t.states(), &[0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn sample_trajectory_reproducible() {
        let p = weather();
        let a = sample_trajectory(&p, &[0.5, 0.5], 100, 42).unwrap();
        let b = sample_trajectory(&p, &[0.5, 0.5], 100, 42).unwrap();
        assert_eq!(a.states(), b.states());
    }

    #[test]
    fn trajectory_pair_frequencies_approach_edge_measure() {
        let p = weather();
        let pi = p.stationary().unwrap();
        let q = p.edge_measure().unwrap();
        let t = sample_trajectory(&p, &pi, 100_000, 11).unwrap();
        let freq = t.pair_frequencies(2);
        for &(i, j) in p.graph().edges() {
            assert!((freq[[i, j]] - q.get(i, j)).abs() < 0.02);
        }
    }

    #[test]
    fn invalid_distribution_rejected() {
        let p = weather();
        assert!(sample_trajectory(&p, &[0.7, 0.7], 5, 0).is_err());
        assert!(sample_trajectory(&p, &[1.0], 5, 0).is_err());
    }

    #[test]
    fn support_mismatch_detected() {
        let g = Digraph::complete(2);
        let rows = array![[1.0, 0.0], [0.5, 0.5]];
        assert!(matches!(
            StochasticKernel::new(g, rows),
            Err(Error::SupportMismatch { .. })
        ));
    }

    #[test]
    fn reducible_kernel_rejected() {
        let rows = array![[1.0, 0.0], [0.5, 0.5]];
        assert!(matches!(
            StochasticKernel::from_rows(rows),
            Err(Error::NotIrreducible)
        ));
    }

    #[test]
    fn bad_row_sum_rejected() {
        let rows = array![[0.8, 0.1], [0.5, 0.5]];
        assert!(matches!(
            StochasticKernel::from_rows(rows),
            Err(Error::RowNotStochastic { row: 0, .. })
        ));
    }
}
