//! Exponential and mixture families, geodesics, and the Fisher geometry.
//!
//! The manifold `W(𝒴, ℰ)` of irreducible kernels has dimension `|ℰ| − |𝒴|`.
//! Log-coordinates live in the quotient `G(𝒴, ℰ) = F(𝒴, ℰ)/N(𝒴, ℰ)` where the
//! shift subspace
//!
//! ```text
//! N(𝒴, ℰ) = { h : h(y,y') = f(y') − f(y) + c }
//! ```
//!
//! has dimension `|𝒴|`. An e-family with carrier `K` and generators
//! `g₁, …, g_d` (independent in `G`) evaluates as `P_θ = 𝔰(exp(K + Σ θⁱgᵢ))`;
//! an m-family is affine in edge-measure coordinates, `Q_ξ = C + Σ ξⁱFᵢ`.
//! The two geodesics through a pair of kernels are
//!
//! ```text
//! γ^(e)(t) = 𝔰(P₀^{∘1−t} ∘ P₁^{∘t})   (all t ∈ ℝ),
//! γ^(m)(t):  Q_t = (1−t) Q₀ + t Q₁.
//! ```
//!
//! In a chart `θ`, the Fisher metric and the dual Christoffel symbols are
//!
//! ```text
//! g_ij  = Σ Q_θ ∂ᵢ log P_θ ∂ⱼ log P_θ,
//! Γ^(e)_{ij,k} = Σ ∂ᵢ∂ⱼ log P_θ · ∂ₖ Q_θ,
//! Γ^(m)_{ij,k} = Σ ∂ᵢ∂ⱼ Q_θ · ∂ₖ log P_θ,
//! ```
//!
//! computed here by central finite differences on user-supplied evaluation
//! maps. Natural parameters of an e-family flatten `Γ^(e)`; mixture
//! parameters of an m-family flatten `Γ^(m)`.

use ndarray::{Array2, Array3};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::kernel::{kernel_from_edge_measure, kl_rate, EdgeFn, EdgeMeasure, NonnegMatrix, StochasticKernel};
use crate::numeric::{independent_indices, GaussBasis};
use crate::perron::{pf_pair, stochastic_rescale};
use crate::RANK_TOL;

/// Relative step for first-order central differences.
pub const FD_STEP: f64 = 1e-5;
/// Relative step for second-order central differences. Wider than the
/// first-order step: the `h²` denominator amplifies roundoff, and `1e-4`
/// balances truncation against it near the `ε^{1/4}` optimum.
pub const FD_STEP_SECOND: f64 = 1e-4;

/// A smooth parametric family of irreducible kernels, given by a pure
/// evaluation map.
pub trait ParametricFamily {
    fn dim(&self) -> usize;
    fn eval(&self, theta: &[f64]) -> Result<StochasticKernel>;
}

/// An exponential family `P_θ = 𝔰(exp(K + Σ θⁱ gᵢ))`.
#[derive(Debug, Clone)]
pub struct EFamily {
    graph: Digraph,
    carrier: EdgeFn,
    generators: Vec<EdgeFn>,
}

impl EFamily {
    pub fn new(graph: Digraph, carrier: EdgeFn, generators: Vec<EdgeFn>) -> Result<Self> {
        if carrier.graph() != &graph || generators.iter().any(|g| g.graph() != &graph) {
            return Err(Error::InvalidFamily(
                "carrier and generators must share the family's support".into(),
            ));
        }
        if !graph.is_strongly_connected() {
            return Err(Error::NotIrreducible);
        }
        if !is_independent_in_quotient(&generators, &graph) {
            return Err(Error::InvalidFamily(
                "generators are dependent modulo the shift subspace".into(),
            ));
        }
        Ok(Self {
            graph,
            carrier,
            generators,
        })
    }

    /// The full-dimensional family through a kernel: carrier `log P`,
    /// generators a spanning independent set of edge indicators.
    pub fn full_through(p: &StochasticKernel) -> Result<Self> {
        let generators = spanning_edge_indicators(p.graph());
        Self::new(p.graph().clone(), p.log_on_edges(), generators)
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn carrier(&self) -> &EdgeFn {
        &self.carrier
    }

    pub fn generators(&self) -> &[EdgeFn] {
        &self.generators
    }
}

impl ParametricFamily for EFamily {
    fn dim(&self) -> usize {
        self.generators.len()
    }

    fn eval(&self, theta: &[f64]) -> Result<StochasticKernel> {
        if theta.len() != self.generators.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a {}-dimensional family",
                theta.len(),
                self.generators.len()
            )));
        }
        let n = self.graph.n();
        let mut entries = Array2::zeros((n, n));
        for &(y, y2) in self.graph.edges() {
            let mut exponent = self.carrier.get(y, y2);
            for (t, g) in theta.iter().zip(&self.generators) {
                exponent += t * g.get(y, y2);
            }
            let value = exponent.exp();
            if !value.is_finite() || value == 0.0 {
                return Err(Error::NonFinite(format!(
                    "e-family evaluation at edge ({y}, {y2})"
                )));
            }
            entries[[y, y2]] = value;
        }
        stochastic_rescale(&NonnegMatrix::new(self.graph.clone(), entries)?)
    }
}

/// A mixture family `Q_ξ = C + Σ ξⁱ Fᵢ` in edge-measure coordinates.
#[derive(Debug, Clone)]
pub struct MFamily {
    graph: Digraph,
    base: EdgeFn,
    directions: Vec<EdgeFn>,
}

impl MFamily {
    pub fn new(graph: Digraph, base: EdgeFn, directions: Vec<EdgeFn>) -> Result<Self> {
        if base.graph() != &graph || directions.iter().any(|f| f.graph() != &graph) {
            return Err(Error::InvalidFamily(
                "base and directions must share the family's support".into(),
            ));
        }
        let total: f64 = base.to_edge_vector().iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidFamily(format!(
                "base edge measure sums to {total:.12}"
            )));
        }
        check_balanced(&base, &graph, "base")?;
        for (i, f) in directions.iter().enumerate() {
            let total: f64 = f.to_edge_vector().iter().sum();
            if total.abs() > 1e-10 {
                return Err(Error::InvalidFamily(format!(
                    "direction {i} sums to {total:.3e}, expected 0"
                )));
            }
            check_balanced(f, &graph, &format!("direction {i}"))?;
        }
        // Affine independence of {C, C+F_1, ...} = linear independence of the F_i.
        let rows: Vec<Vec<f64>> = directions.iter().map(|f| f.to_edge_vector()).collect();
        if crate::numeric::rank_of(&rows, RANK_TOL) != directions.len() {
            return Err(Error::InvalidFamily(
                "mixture directions are linearly dependent".into(),
            ));
        }
        Ok(Self {
            graph,
            base,
            directions,
        })
    }

    /// The two-point family through the edge measures of `p0` and `p1`; its
    /// parameter is the m-geodesic time.
    pub fn segment(p0: &StochasticKernel, p1: &StochasticKernel) -> Result<Self> {
        if p0.graph() != p1.graph() {
            return Err(Error::AbsoluteContinuity {
                left: "P0".into(),
                right: "P1".into(),
            });
        }
        let q0 = p0.edge_measure()?;
        let q1 = p1.edge_measure()?;
        let base = EdgeFn::new(p0.graph().clone(), q0.q().clone())?;
        let direction = EdgeFn::new(p0.graph().clone(), q1.q() - q0.q())?;
        Self::new(p0.graph().clone(), base, vec![direction])
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    /// The edge measure at `ξ`, before positivity filtering.
    pub fn measure_at(&self, xi: &[f64]) -> Result<Array2<f64>> {
        if xi.len() != self.directions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a {}-dimensional family",
                xi.len(),
                self.directions.len()
            )));
        }
        let n = self.graph.n();
        let mut q = Array2::zeros((n, n));
        for &(y, y2) in self.graph.edges() {
            let mut value = self.base.get(y, y2);
            for (x, f) in xi.iter().zip(&self.directions) {
                value += x * f.get(y, y2);
            }
            q[[y, y2]] = value;
        }
        Ok(q)
    }
}

fn check_balanced(f: &EdgeFn, graph: &Digraph, what: &str) -> Result<()> {
    for y in 0..graph.n() {
        let row: f64 = (0..graph.n()).map(|j| f.get(y, j)).sum();
        let col: f64 = (0..graph.n()).map(|i| f.get(i, y)).sum();
        if (row - col).abs() > 1e-10 {
            return Err(Error::InvalidFamily(format!(
                "{what} has unequal marginals at state {y}"
            )));
        }
    }
    Ok(())
}

impl ParametricFamily for MFamily {
    fn dim(&self) -> usize {
        self.directions.len()
    }

    fn eval(&self, xi: &[f64]) -> Result<StochasticKernel> {
        let q = self.measure_at(xi)?;
        for &(y, y2) in self.graph.edges() {
            if q[[y, y2]] <= 0.0 {
                return Err(Error::Domain(format!(
                    "mixture parameter leaves the positivity region at edge ({y}, {y2})"
                )));
            }
        }
        let measure = EdgeMeasure::new(self.graph.clone(), q)?;
        kernel_from_edge_measure(&measure)
    }
}

/// A family evaluated through an arbitrary pure closure.
pub struct FnFamily<F>
where
    F: Fn(&[f64]) -> Result<StochasticKernel>,
{
    dim: usize,
    eval: F,
}

impl<F> FnFamily<F>
where
    F: Fn(&[f64]) -> Result<StochasticKernel>,
{
    pub fn new(dim: usize, eval: F) -> Self {
        Self { dim, eval }
    }
}

impl<F> ParametricFamily for FnFamily<F>
where
    F: Fn(&[f64]) -> Result<StochasticKernel>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, theta: &[f64]) -> Result<StochasticKernel> {
        (self.eval)(theta)
    }
}

/// A family pushed through an embedding.
pub struct EmbeddedFamily<F: ParametricFamily> {
    inner: F,
    embedding: Embedding,
}

impl<F: ParametricFamily> EmbeddedFamily<F> {
    pub fn new(inner: F, embedding: Embedding) -> Self {
        Self { inner, embedding }
    }
}

impl<F: ParametricFamily> ParametricFamily for EmbeddedFamily<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, theta: &[f64]) -> Result<StochasticKernel> {
        self.embedding.embed(&self.inner.eval(theta)?)
    }
}

/// Basis of the shift subspace `N(𝒴, ℰ)`: the functions `e_y(y') − e_y(y)`
/// for `y ≥ 1` together with the constant, restricted to the edge set. The
/// vertex-0 function is dropped to avoid the known one-dimensional overlap
/// with the constant.
pub fn shift_basis(graph: &Digraph) -> Vec<EdgeFn> {
    let n = graph.n();
    let mut basis = Vec::with_capacity(n);
    for y in 1..n {
        let mut values = Array2::zeros((n, n));
        for &(a, b) in graph.edges() {
            let mut v = 0.0;
            if b == y {
                v += 1.0;
            }
            if a == y {
                v -= 1.0;
            }
            values[[a, b]] = v;
        }
        basis.push(EdgeFn::new(graph.clone(), values).expect("supported by construction"));
    }
    let mut ones = Array2::zeros((n, n));
    for &(a, b) in graph.edges() {
        ones[[a, b]] = 1.0;
    }
    basis.push(EdgeFn::new(graph.clone(), ones).expect("supported by construction"));
    basis
}

/// Numerical dimension of the constructed shift basis; `|𝒴|` on strongly
/// connected graphs.
pub fn shift_dimension(graph: &Digraph) -> usize {
    let rows: Vec<Vec<f64>> = shift_basis(graph)
        .iter()
        .map(|f| f.to_edge_vector())
        .collect();
    crate::numeric::rank_of(&rows, RANK_TOL)
}

/// True when the functions are independent in the quotient `G(𝒴, ℰ)`,
/// i.e. modulo the shift subspace.
pub fn is_independent_in_quotient(functions: &[EdgeFn], graph: &Digraph) -> bool {
    let seed: Vec<Vec<f64>> = shift_basis(graph)
        .iter()
        .map(|f| f.to_edge_vector())
        .collect();
    let rows: Vec<Vec<f64>> = functions.iter().map(|f| f.to_edge_vector()).collect();
    independent_indices(&seed, &rows, RANK_TOL).len() == functions.len()
}

/// A spanning independent set of `|ℰ| − |𝒴|` edge indicators in `G(𝒴, ℰ)`:
/// one anchor edge dropped per row, with a greedy fallback should the
/// anchor choice turn out dependent on an unusual support.
pub fn spanning_edge_indicators(graph: &Digraph) -> Vec<EdgeFn> {
    let mut anchors: Vec<(usize, usize)> = Vec::new();
    for y in 0..graph.n() {
        if let Some(y2) = graph.out_neighbors(y).max() {
            anchors.push((y, y2));
        }
    }
    let chosen: Vec<EdgeFn> = graph
        .edges()
        .iter()
        .filter(|e| !anchors.contains(e))
        .map(|&(y, y2)| EdgeFn::unit(graph, y, y2).expect("edge exists"))
        .collect();
    let want = graph.edge_count() - graph.n();
    if chosen.len() == want && is_independent_in_quotient(&chosen, graph) {
        return chosen;
    }
    // Greedy over all edges in lexicographic order.
    let seed: Vec<Vec<f64>> = shift_basis(graph)
        .iter()
        .map(|f| f.to_edge_vector())
        .collect();
    let all: Vec<EdgeFn> = graph
        .edges()
        .iter()
        .map(|&(y, y2)| EdgeFn::unit(graph, y, y2).expect("edge exists"))
        .collect();
    let rows: Vec<Vec<f64>> = all.iter().map(|f| f.to_edge_vector()).collect();
    independent_indices(&seed, &rows, RANK_TOL)
        .into_iter()
        .map(|i| all[i].clone())
        .collect()
}

/// The e-geodesic `γ^(e)(t) = 𝔰(P₀^{∘1−t} ∘ P₁^{∘t})`, defined for all real `t`.
pub fn e_geodesic(p0: &StochasticKernel, p1: &StochasticKernel, t: f64) -> Result<StochasticKernel> {
    Ok(stochastic_rescale(&hadamard_power(p0, p1, t)?)?)
}

/// `log ρ_t` of the Hadamard interpolation `P₀^{∘1−t} ∘ P₁^{∘t}`; zero at
/// `t ∈ {0, 1}` and convex in `t`.
pub fn e_interpolation_log_root(
    p0: &StochasticKernel,
    p1: &StochasticKernel,
    t: f64,
) -> Result<f64> {
    Ok(pf_pair(&hadamard_power(p0, p1, t)?)?.rho.ln())
}

fn hadamard_power(p0: &StochasticKernel, p1: &StochasticKernel, t: f64) -> Result<NonnegMatrix> {
    if p0.graph() != p1.graph() {
        return Err(Error::AbsoluteContinuity {
            left: "P0".into(),
            right: "P1".into(),
        });
    }
    let n = p0.n();
    let mut entries = Array2::zeros((n, n));
    for &(y, y2) in p0.graph().edges() {
        entries[[y, y2]] = p0.get(y, y2).powf(1.0 - t) * p1.get(y, y2).powf(t);
    }
    NonnegMatrix::new(p0.graph().clone(), entries)
}

/// The m-geodesic: the kernel pertaining to `Q_t = (1−t)Q₀ + tQ₁`.
/// Parameters outside `[0, 1]` are admitted as long as `Q_t` stays positive.
pub fn m_geodesic(p0: &StochasticKernel, p1: &StochasticKernel, t: f64) -> Result<StochasticKernel> {
    if p0.graph() != p1.graph() {
        return Err(Error::AbsoluteContinuity {
            left: "P0".into(),
            right: "P1".into(),
        });
    }
    let q0 = p0.edge_measure()?;
    let q1 = p1.edge_measure()?;
    let n = p0.n();
    let mut q = Array2::zeros((n, n));
    for &(y, y2) in p0.graph().edges() {
        let value = (1.0 - t) * q0.get(y, y2) + t * q1.get(y, y2);
        if value <= 0.0 {
            return Err(Error::Domain(format!(
                "mixture time {t} leaves the positivity region at edge ({y}, {y2})"
            )));
        }
        q[[y, y2]] = value;
    }
    kernel_from_edge_measure(&EdgeMeasure::new(p0.graph().clone(), q)?)
}

fn scaled_step(theta: &[f64], i: usize, step: f64) -> f64 {
    step * theta[i].abs().max(1.0)
}

fn log_matrix(fam: &impl ParametricFamily, theta: &[f64]) -> Result<Array2<f64>> {
    Ok(fam.eval(theta)?.log_on_edges().values().clone())
}

fn measure_matrix(fam: &impl ParametricFamily, theta: &[f64]) -> Result<Array2<f64>> {
    Ok(fam.eval(theta)?.edge_measure()?.q().clone())
}

fn shifted(theta: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut out = theta.to_vec();
    for &(i, h) in moves {
        out[i] += h;
    }
    out
}

/// Fisher information matrix by central differences of `log P_θ`.
pub fn fisher_metric(
    fam: &impl ParametricFamily,
    theta: &[f64],
    step: Option<f64>,
) -> Result<Array2<f64>> {
    let d = fam.dim();
    let step = step.unwrap_or(FD_STEP);
    let p = fam.eval(theta)?;
    let q = p.edge_measure()?;
    let mut dlogs = Vec::with_capacity(d);
    for i in 0..d {
        let h = scaled_step(theta, i, step);
        let plus = log_matrix(fam, &shifted(theta, &[(i, h)]))?;
        let minus = log_matrix(fam, &shifted(theta, &[(i, -h)]))?;
        dlogs.push((plus - minus) / (2.0 * h));
    }
    let mut g = Array2::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for &(y, y2) in p.graph().edges() {
                acc += q.get(y, y2) * dlogs[i][[y, y2]] * dlogs[j][[y, y2]];
            }
            g[[i, j]] = acc;
            g[[j, i]] = acc;
        }
    }
    Ok(g)
}

/// Christoffel symbols of the e-connection,
/// `Γ^(e)_{ij,k} = Σ ∂ᵢ∂ⱼ log P · ∂ₖQ`, indexed `[i, j, k]`.
pub fn christoffel_e(
    fam: &impl ParametricFamily,
    theta: &[f64],
    step: Option<f64>,
) -> Result<Array3<f64>> {
    let second = second_derivatives(fam, theta, step, log_matrix_dyn)?;
    let first_q = first_derivatives(fam, theta, measure_matrix_dyn)?;
    contract(fam, theta, &second, &first_q)
}

/// Christoffel symbols of the m-connection,
/// `Γ^(m)_{ij,k} = Σ ∂ᵢ∂ⱼ Q · ∂ₖ log P`, indexed `[i, j, k]`.
pub fn christoffel_m(
    fam: &impl ParametricFamily,
    theta: &[f64],
    step: Option<f64>,
) -> Result<Array3<f64>> {
    let second = second_derivatives(fam, theta, step, measure_matrix_dyn)?;
    let first_log = first_derivatives(fam, theta, log_matrix_dyn)?;
    contract(fam, theta, &second, &first_log)
}

fn first_derivatives(
    fam: &impl ParametricFamily,
    theta: &[f64],
    value: fn(&dyn Evaluator, &[f64]) -> Result<Array2<f64>>,
) -> Result<Vec<Array2<f64>>> {
    let d = fam.dim();
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let h = scaled_step(theta, k, FD_STEP);
        let plus = value(&fam_ref(fam), &shifted(theta, &[(k, h)]))?;
        let minus = value(&fam_ref(fam), &shifted(theta, &[(k, -h)]))?;
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

fn second_derivatives(
    fam: &impl ParametricFamily,
    theta: &[f64],
    step: Option<f64>,
    value: fn(&dyn Evaluator, &[f64]) -> Result<Array2<f64>>,
) -> Result<Vec<Vec<Array2<f64>>>> {
    let d = fam.dim();
    let step = step.unwrap_or(FD_STEP_SECOND);
    let center = value(&fam_ref(fam), theta)?;
    let mut out: Vec<Vec<Array2<f64>>> = vec![Vec::with_capacity(d); d];
    for i in 0..d {
        for j in 0..=i {
            let hi = scaled_step(theta, i, step);
            let hj = scaled_step(theta, j, step);
            let second = if i == j {
                let plus = value(&fam_ref(fam), &shifted(theta, &[(i, hi)]))?;
                let minus = value(&fam_ref(fam), &shifted(theta, &[(i, -hi)]))?;
                (plus + minus - &center - &center) / (hi * hi)
            } else {
                let pp = value(&fam_ref(fam), &shifted(theta, &[(i, hi), (j, hj)]))?;
                let pm = value(&fam_ref(fam), &shifted(theta, &[(i, hi), (j, -hj)]))?;
                let mp = value(&fam_ref(fam), &shifted(theta, &[(i, -hi), (j, hj)]))?;
                let mm = value(&fam_ref(fam), &shifted(theta, &[(i, -hi), (j, -hj)]))?;
                (pp - pm - mp + mm) / (4.0 * hi * hj)
            };
            out[i].push(second);
        }
    }
    Ok(out)
}

// Object-safe shim so the derivative helpers can take plain fn pointers.
trait Evaluator {
    fn eval_kernel(&self, theta: &[f64]) -> Result<StochasticKernel>;
}

struct FamRef<'a, F: ParametricFamily>(&'a F);

impl<F: ParametricFamily> Evaluator for FamRef<'_, F> {
    fn eval_kernel(&self, theta: &[f64]) -> Result<StochasticKernel> {
        self.0.eval(theta)
    }
}

fn fam_ref<F: ParametricFamily>(fam: &F) -> FamRef<'_, F> {
    FamRef(fam)
}

fn log_matrix_dyn(e: &dyn Evaluator, theta: &[f64]) -> Result<Array2<f64>> {
    Ok(e.eval_kernel(theta)?.log_on_edges().values().clone())
}

fn measure_matrix_dyn(e: &dyn Evaluator, theta: &[f64]) -> Result<Array2<f64>> {
    Ok(e.eval_kernel(theta)?.edge_measure()?.q().clone())
}

fn contract(
    fam: &impl ParametricFamily,
    theta: &[f64],
    second: &[Vec<Array2<f64>>],
    first: &[Array2<f64>],
) -> Result<Array3<f64>> {
    let d = fam.dim();
    let p = fam.eval(theta)?;
    let mut gamma = Array3::zeros((d, d, d));
    for i in 0..d {
        for j in 0..=i {
            for (k, fk) in first.iter().enumerate() {
                let mut acc = 0.0;
                for &(y, y2) in p.graph().edges() {
                    acc += second[i][j][[y, y2]] * fk[[y, y2]];
                }
                gamma[[i, j, k]] = acc;
                gamma[[j, i, k]] = acc;
            }
        }
    }
    Ok(gamma)
}

/// Which geodesic structure a check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicKind {
    E,
    M,
}

/// Sup-deviation `‖E⋆γ(t) − γ_{E⋆P₀, E⋆P₁}(t)‖_∞` over the probe times.
pub fn check_geodesic_affine(
    embedding: &Embedding,
    p0: &StochasticKernel,
    p1: &StochasticKernel,
    ts: &[f64],
    kind: GeodesicKind,
) -> Result<f64> {
    let image0 = embedding.embed(p0)?;
    let image1 = embedding.embed(p1)?;
    let mut worst = 0.0_f64;
    for &t in ts {
        let (pushed, direct) = match kind {
            GeodesicKind::E => (
                embedding.embed(&e_geodesic(p0, p1, t)?)?,
                e_geodesic(&image0, &image1, t)?,
            ),
            GeodesicKind::M => (
                embedding.embed(&m_geodesic(p0, p1, t)?)?,
                m_geodesic(&image0, &image1, t)?,
            ),
        };
        worst = worst.max(pushed.max_abs_diff(&direct));
    }
    Ok(worst)
}

/// One row of a convexity probe report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvexityProbe {
    pub t: f64,
    /// `(1−t)D(P₀‖P) + tD(P₁‖P) − D(γ^(m)(t)‖P)`; positive on `(0,1)`.
    pub m_gap: Option<f64>,
    /// `(1−t)D(P‖P₀) + tD(P‖P₁) − D(P‖γ^(e)(t))`; positive on `(0,1)`,
    /// negative outside `[0,1]`.
    pub e_gap: f64,
    /// `log ρ_t`; the e-gap equals `−log ρ_t` identically.
    pub log_rho: f64,
}

/// Probes strict m-convexity in the first argument and e-convexity in the
/// second, including the reversed inequality outside the unit interval.
pub fn kl_convexity_probes(
    p: &StochasticKernel,
    p0: &StochasticKernel,
    p1: &StochasticKernel,
    ts: &[f64],
) -> Result<Vec<ConvexityProbe>> {
    let d0_first = kl_rate(p0, p)?;
    let d1_first = kl_rate(p1, p)?;
    let d0_second = kl_rate(p, p0)?;
    let d1_second = kl_rate(p, p1)?;
    let mut probes = Vec::with_capacity(ts.len());
    for &t in ts {
        let m_gap = if (0.0..=1.0).contains(&t) {
            let mid = m_geodesic(p0, p1, t)?;
            Some((1.0 - t) * d0_first + t * d1_first - kl_rate(&mid, p)?)
        } else {
            None
        };
        let e_mid = e_geodesic(p0, p1, t)?;
        let e_gap = (1.0 - t) * d0_second + t * d1_second - kl_rate(p, &e_mid)?;
        let log_rho = e_interpolation_log_root(p0, p1, t)?;
        probes.push(ConvexityProbe {
            t,
            m_gap,
            e_gap,
            log_rho,
        });
    }
    Ok(probes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::MarkovEmbedding;
    use crate::kernel::StochasticKernel;
    use crate::lumping::Lumping;
    use crate::sample::{random_kernel, random_lumping, random_markov_embedding, random_reversible};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn weather() -> StochasticKernel {
        StochasticKernel::from_rows(array![[0.8, 0.2], [0.5, 0.5]]).unwrap()
    }

    fn other() -> StochasticKernel {
        StochasticKernel::from_rows(array![[0.3, 0.7], [0.6, 0.4]]).unwrap()
    }

    #[test]
    fn shift_subspace_has_dimension_y() {
        for g in [
            Digraph::complete(3),
            Digraph::complete(5),
            Digraph::new(3, vec![(0, 1), (1, 2), (2, 0), (0, 0)]).unwrap(),
        ] {
            assert_eq!(shift_dimension(&g), g.n());
        }
    }

    #[test]
    fn single_shift_function_is_dependent() {
        let g = Digraph::complete(3);
        let shift = shift_basis(&g).into_iter().next().unwrap();
        assert!(!is_independent_in_quotient(&[shift], &g));
    }

    #[test]
    fn spanning_indicators_have_full_quotient_rank() {
        for g in [
            Digraph::complete(3),
            Digraph::complete(4),
            Digraph::new(3, vec![(0, 0), (0, 1), (1, 0), (1, 2), (2, 0)]).unwrap(),
        ] {
            let gens = spanning_edge_indicators(&g);
            assert_eq!(gens.len(), g.edge_count() - g.n());
            assert!(is_independent_in_quotient(&gens, &g));
        }
    }

    #[test]
    fn e_family_at_zero_is_rescaled_carrier() {
        let p = weather();
        let fam = EFamily::full_through(&p).unwrap();
        let at_zero = fam.eval(&vec![0.0; fam.dim()]).unwrap();
        assert!(at_zero.max_abs_diff(&p) <= 1e-13);
    }

    #[test]
    fn e_family_single_edge_tilt_matches_direct_rescale() {
        let p = weather();
        let g = EdgeFn::unit(p.graph(), 0, 1).unwrap();
        let fam = EFamily::new(p.graph().clone(), p.log_on_edges(), vec![g]).unwrap();
        let theta = [0.8];
        let evaluated = fam.eval(&theta).unwrap();
        let mut entries = p.rows().clone();
        entries[[0, 1]] *= theta[0].exp();
        let direct =
            stochastic_rescale(&NonnegMatrix::new(p.graph().clone(), entries).unwrap()).unwrap();
        assert!(evaluated.max_abs_diff(&direct) <= 1e-12);
    }

    #[test]
    fn m_family_two_point_segment() {
        let fam = MFamily::segment(&weather(), &other()).unwrap();
        assert!(fam.eval(&[0.0]).unwrap().max_abs_diff(&weather()) <= 1e-12);
        assert!(fam.eval(&[1.0]).unwrap().max_abs_diff(&other()) <= 1e-12);
    }

    #[test]
    fn m_family_midpoint_of_reversible_pair_is_reversible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p0 = random_reversible(&Digraph::complete(4), &mut rng).unwrap();
        let p1 = random_reversible(&Digraph::complete(4), &mut rng).unwrap();
        let mid = m_geodesic(&p0, &p1, 0.5).unwrap();
        assert!(mid.is_reversible(1e-10).unwrap());
    }

    #[test]
    fn geodesic_endpoints() {
        let p0 = weather();
        let p1 = other();
        assert!(e_geodesic(&p0, &p1, 0.0).unwrap().max_abs_diff(&p0) <= 1e-13);
        assert!(e_geodesic(&p0, &p1, 1.0).unwrap().max_abs_diff(&p1) <= 1e-13);
        assert!(m_geodesic(&p0, &p1, 0.0).unwrap().max_abs_diff(&p0) <= 1e-13);
        assert!(m_geodesic(&p0, &p1, 1.0).unwrap().max_abs_diff(&p1) <= 1e-13);
    }

    #[test]
    fn m_geodesic_midpoint_stationary_is_average() {
        let p0 = weather();
        let p1 = other();
        let mid = m_geodesic(&p0, &p1, 0.5).unwrap();
        let pi0 = p0.stationary().unwrap();
        let pi1 = p1.stationary().unwrap();
        let pim = mid.stationary().unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(pim[i], (pi0[i] + pi1[i]) / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn e_geodesic_triple_is_rank_one_in_quotient() {
        // Three points of an e-geodesic differ from P0's logs by multiples of
        // one direction in G.
        let p0 = weather();
        let p1 = other();
        let base = p0.log_on_edges().to_edge_vector();
        let g = p0.graph();
        let seed: Vec<Vec<f64>> = shift_basis(g).iter().map(|f| f.to_edge_vector()).collect();
        let mut basis = GaussBasis::new(base.len(), 1e-9);
        for s in &seed {
            basis.try_add(s);
        }
        let mut added = 0;
        for &t in &[0.3, 0.7, 1.5] {
            let log_t = e_geodesic(&p0, &p1, t).unwrap().log_on_edges().to_edge_vector();
            let diff: Vec<f64> = log_t.iter().zip(&base).map(|(a, b)| a - b).collect();
            if basis.try_add(&diff) {
                added += 1;
            }
        }
        assert_eq!(added, 1);
    }

    #[test]
    fn e_geodesic_divergence_identity() {
        let p = StochasticKernel::from_rows(array![[0.55, 0.45], [0.25, 0.75]]).unwrap();
        let p0 = weather();
        let p1 = other();
        for t in [-1.0, 0.3, 0.5, 2.0] {
            let gamma = e_geodesic(&p0, &p1, t).unwrap();
            let lhs = kl_rate(&p, &gamma).unwrap();
            let rhs = (1.0 - t) * kl_rate(&p, &p0).unwrap() + t * kl_rate(&p, &p1).unwrap()
                + e_interpolation_log_root(&p0, &p1, t).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn convexity_probes_have_expected_signs() {
        let p = StochasticKernel::from_rows(array![[0.55, 0.45], [0.25, 0.75]]).unwrap();
        let probes = kl_convexity_probes(&p, &weather(), &other(), &[0.25, 0.5, 0.9, 2.0]).unwrap();
        for probe in &probes {
            if let Some(m_gap) = probe.m_gap {
                assert!(m_gap > 0.0, "m-convexity gap at t={}", probe.t);
            }
            if (0.0..=1.0).contains(&probe.t) {
                assert!(probe.e_gap > 0.0);
                assert!(probe.log_rho <= 1e-12);
            } else {
                assert!(probe.e_gap < 0.0, "reversed inequality outside [0,1]");
                assert!(probe.log_rho > 0.0);
            }
            assert_abs_diff_eq!(probe.e_gap, -probe.log_rho, epsilon = 1e-10);
        }
    }

    #[test]
    fn probes_vanish_on_equal_endpoints() {
        let p = other();
        let probes = kl_convexity_probes(&p, &weather(), &weather(), &[0.5]).unwrap();
        assert!(probes[0].m_gap.unwrap().abs() <= 1e-12);
        assert!(probes[0].e_gap.abs() <= 1e-12);
    }

    #[test]
    fn joint_m_convexity_fails() {
        let p0 = StochasticKernel::from_rows(array![[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let p0p = StochasticKernel::from_rows(array![[0.25, 0.75], [0.25, 0.75]]).unwrap();
        let p1 = StochasticKernel::from_rows(array![[0.125, 0.875], [0.875, 0.125]]).unwrap();
        let t = 0.5;
        let lhs = kl_rate(
            &m_geodesic(&p0, &p1, t).unwrap(),
            &m_geodesic(&p0p, &p1, t).unwrap(),
        )
        .unwrap();
        let rhs = (1.0 - t) * kl_rate(&p0, &p0p).unwrap() + t * kl_rate(&p1, &p1).unwrap();
        assert!(lhs > rhs, "joint m-convexity should fail: {lhs} vs {rhs}");
    }

    #[test]
    fn memoryless_binary_family_fisher_matches_bernoulli() {
        let fam = FnFamily::new(1, |theta: &[f64]| {
            let t = theta[0];
            StochasticKernel::from_rows(array![[t, 1.0 - t], [t, 1.0 - t]])
        });
        for theta in [0.3, 0.5, 0.62] {
            let g = fisher_metric(&fam, &[theta], None).unwrap();
            let expected = 1.0 / (theta * (1.0 - theta));
            assert_abs_diff_eq!(g[[0, 0]], expected, epsilon = 1e-7 * expected);
        }
    }

    #[test]
    fn fisher_halving_step_improves_error() {
        let fam = FnFamily::new(1, |theta: &[f64]| {
            let t = theta[0];
            StochasticKernel::from_rows(array![[t, 1.0 - t], [t, 1.0 - t]])
        });
        let theta = [0.37];
        let exact = 1.0 / (theta[0] * (1.0 - theta[0]));
        let coarse = (fisher_metric(&fam, &theta, Some(1e-2)).unwrap()[[0, 0]] - exact).abs();
        let fine = (fisher_metric(&fam, &theta, Some(5e-3)).unwrap()[[0, 0]] - exact).abs();
        assert!(coarse >= 3.0 * fine, "halving: {coarse:.3e} vs {fine:.3e}");
    }

    #[test]
    fn fisher_is_positive_definite_for_independent_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_kernel(&Digraph::complete(3), &mut rng).unwrap();
        let fam = EFamily::full_through(&p).unwrap();
        let theta = vec![0.1; fam.dim()];
        let g = fisher_metric(&fam, &theta, None).unwrap();
        // Symmetric with positive diagonal and positive determinant of the
        // leading blocks (desk-size Cholesky).
        let d = fam.dim();
        let mut chol = g.clone();
        for k in 0..d {
            for j in 0..k {
                let s = chol[[k, j]];
                chol[[k, k]] -= s * s;
            }
            assert!(chol[[k, k]] > 0.0, "pivot {k} nonpositive");
            let pivot = chol[[k, k]].sqrt();
            for i in k + 1..d {
                let mut s = chol[[i, k]];
                for j in 0..k {
                    s -= chol[[i, j]] * chol[[k, j]];
                }
                chol[[i, k]] = s / pivot;
            }
            chol[[k, k]] = pivot;
        }
    }

    #[test]
    fn reparametrization_covariance() {
        // theta -> A theta with A = [[2, 1], [0, 1]]: g'(eta) = A^T g(A eta) A.
        let base = weather();
        let gens = spanning_edge_indicators(base.graph());
        let fam = EFamily::new(base.graph().clone(), base.log_on_edges(), gens).unwrap();
        let a = array![[2.0, 1.0], [0.0, 1.0]];
        let eta = [0.2, -0.3];
        let theta = [a[[0, 0]] * eta[0] + a[[0, 1]] * eta[1], a[[1, 0]] * eta[0] + a[[1, 1]] * eta[1]];
        let fam2 = {
            let inner = fam.clone();
            let a = a.clone();
            FnFamily::new(2, move |eta: &[f64]| {
                inner.eval(&[
                    a[[0, 0]] * eta[0] + a[[0, 1]] * eta[1],
                    a[[1, 0]] * eta[0] + a[[1, 1]] * eta[1],
                ])
            })
        };
        let g_theta = fisher_metric(&fam, &theta, None).unwrap();
        let g_eta = fisher_metric(&fam2, &eta, None).unwrap();
        let expected = a.t().dot(&g_theta).dot(&a);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(g_eta[[i, j]], expected[[i, j]], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn e_family_natural_coordinates_flatten_e_connection() {
        let base = weather();
        let fam = EFamily::full_through(&base).unwrap();
        let theta = vec![0.15, -0.2];
        let gamma = christoffel_e(&fam, &theta, None).unwrap();
        for v in gamma.iter() {
            assert!(v.abs() <= 1e-6, "e-Christoffel entry {v:.3e}");
        }
    }

    #[test]
    fn m_family_mixture_coordinates_flatten_m_connection() {
        let fam = MFamily::segment(&weather(), &other()).unwrap();
        let gamma = christoffel_m(&fam, &[0.4], None).unwrap();
        for v in gamma.iter() {
            assert!(v.abs() <= 1e-6, "m-Christoffel entry {v:.3e}");
        }
    }

    #[test]
    fn christoffels_symmetric_in_first_two_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = random_kernel(&Digraph::complete(3), &mut rng).unwrap();
        let fam = EFamily::full_through(&p).unwrap();
        let d = fam.dim();
        let theta: Vec<f64> = (0..d).map(|i| 0.05 * i as f64).collect();
        // Probe through a curved chart so the symbols are nonzero.
        let curved = {
            let inner = fam.clone();
            FnFamily::new(2, move |u: &[f64]| {
                let mut theta = vec![0.0; inner.dim()];
                theta[0] = u[0] + 0.3 * u[1] * u[1];
                theta[1] = u[1] + 0.2 * u[0] * u[0];
                for (i, t) in theta.iter_mut().enumerate().skip(2) {
                    *t = 0.05 * i as f64;
                }
                inner.eval(&theta)
            })
        };
        let _ = theta;
        let u = [0.1, -0.2];
        for gamma in [
            christoffel_e(&curved, &u, None).unwrap(),
            christoffel_m(&curved, &u, None).unwrap(),
        ] {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert_abs_diff_eq!(
                            gamma[[i, j, k]],
                            gamma[[j, i, k]],
                            epsilon = 1e-8
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn invariance_of_metric_and_connections_under_markov_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let kappa = random_lumping(5, 2, &mut rng).unwrap();
        let embedding = random_markov_embedding(&kappa, &Digraph::complete(5), &mut rng).unwrap();
        let base = random_kernel(embedding.base_graph(), &mut rng).unwrap();
        let fam = EFamily::full_through(&base).unwrap();
        let theta = vec![0.12, -0.07];
        let lifted = EmbeddedFamily::new(fam.clone(), Embedding::Markov(embedding));

        let g0 = fisher_metric(&fam, &theta, None).unwrap();
        let g1 = fisher_metric(&lifted, &theta, None).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(g0[[i, j]], g1[[i, j]], epsilon = 1e-6);
            }
        }
        let ge0 = christoffel_e(&fam, &theta, None).unwrap();
        let ge1 = christoffel_e(&lifted, &theta, None).unwrap();
        let gm0 = christoffel_m(&fam, &theta, None).unwrap();
        let gm1 = christoffel_m(&lifted, &theta, None).unwrap();
        for idx in 0..8 {
            let (i, j, k) = (idx / 4, (idx / 2) % 2, idx % 2);
            assert_abs_diff_eq!(ge0[[i, j, k]], ge1[[i, j, k]], epsilon = 1e-6);
            assert_abs_diff_eq!(gm0[[i, j, k]], gm1[[i, j, k]], epsilon = 1e-6);
        }
    }

    #[test]
    fn markov_embeddings_are_e_geodesic_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let kappa = random_lumping(5, 2, &mut rng).unwrap();
        let embedding = random_markov_embedding(&kappa, &Digraph::complete(5), &mut rng).unwrap();
        let p0 = random_kernel(embedding.base_graph(), &mut rng).unwrap();
        let p1 = random_kernel(embedding.base_graph(), &mut rng).unwrap();
        let dev = check_geodesic_affine(
            &Embedding::Markov(embedding),
            &p0,
            &p1,
            &[-1.0, 0.3, 2.0],
            GeodesicKind::E,
        )
        .unwrap();
        assert!(dev <= 1e-9, "e-affinity deviation {dev:.3e}");
    }

    #[test]
    fn memoryless_embeddings_are_m_geodesic_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let kappa = random_lumping(5, 2, &mut rng).unwrap();
        let weights = {
            let mut w = vec![0.0; 5];
            for x in 0..2 {
                let block = kappa.block(x);
                let d = crate::sample::random_distribution(block.len(), &mut rng);
                for (i, &y) in block.iter().enumerate() {
                    w[y] = d[i];
                }
            }
            w
        };
        let embedding =
            crate::embedding::MemorylessEmbedding::new(kappa, weights, &Digraph::complete(2))
                .unwrap();
        let p0 = random_kernel(&Digraph::complete(2), &mut rng).unwrap();
        let p1 = random_kernel(&Digraph::complete(2), &mut rng).unwrap();
        let dev = check_geodesic_affine(
            &Embedding::Memoryless(embedding),
            &p0,
            &p1,
            &[0.25, 0.5, 0.9],
            GeodesicKind::M,
        )
        .unwrap();
        assert!(dev <= 1e-9, "m-affinity deviation {dev:.3e}");
    }

    #[test]
    fn hudson_embedding_breaks_m_affinity() {
        let p = 0.25;
        let p0 = StochasticKernel::from_rows(array![[1.0 - p, p], [p, 1.0 - p]]).unwrap();
        let p1 = StochasticKernel::from_rows(array![[p, 1.0 - p], [1.0 - p, p]]).unwrap();
        let hudson =
            crate::embedding::HudsonEmbedding::new(&Digraph::complete(2), 2, None).unwrap();
        let dev = check_geodesic_affine(
            &Embedding::Hudson(hudson),
            &p0,
            &p1,
            &[0.5],
            GeodesicKind::M,
        )
        .unwrap();
        assert!(dev >= 0.1, "expected a large m-affinity defect, got {dev:.3e}");
    }

    #[test]
    fn identity_markov_embedding_affine_both_ways() {
        let id = Embedding::Markov(
            MarkovEmbedding::new(
                Lumping::identity(2),
                NonnegMatrix::indicator(&Digraph::complete(2)),
            )
            .unwrap(),
        );
        let dev_e =
            check_geodesic_affine(&id, &weather(), &other(), &[0.3], GeodesicKind::E).unwrap();
        let dev_m =
            check_geodesic_affine(&id, &weather(), &other(), &[0.3], GeodesicKind::M).unwrap();
        assert!(dev_e <= 1e-13);
        assert!(dev_m <= 1e-13);
    }

    use crate::numeric::GaussBasis;
}
