//! Perron-Frobenius pairs and the stochastic rescaling map `𝔰`.
//!
//! For an irreducible nonnegative `A` supported on `(𝒴, ℰ)`, the right PF
//! pair `(ρ_A, v_A)` satisfies `A vᵀ = ρ_A vᵀ` with `v > 0`. The stochastic
//! rescaling
//!
//! ```text
//! 𝔰(A)(y,y') = A(y,y') v_A(y') / (ρ_A v_A(y))
//! ```
//!
//! produces a kernel on the same digraph and is invariant under positive
//! scaling of `A` and under conjugation by positive diagonal matrices.
//!
//! Computation is by power iteration on `A + cI`; the positive diagonal makes
//! the iteration matrix primitive, so convergence holds for every irreducible
//! input, including periodic supports such as pure cycles. The shift leaves
//! eigenvectors untouched and adds `c` to the root.

use crate::error::{Error, Result};
use crate::kernel::{normalize_rows, NonnegMatrix, StochasticKernel};
use ndarray::Array2;

/// Successive-iterate sup-distance at which the power iteration stops.
const ITERATE_TOL: f64 = 1e-15;
/// Required sup-norm residual `‖A vᵀ − ρ vᵀ‖_∞` on accepted outputs.
const RESIDUAL_TOL: f64 = 1e-10;
/// Iteration budget.
const MAX_ITERS: usize = 100_000;

/// A right Perron-Frobenius pair, with `v` normalized so `‖v‖_∞ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfPair {
    pub rho: f64,
    pub v: Vec<f64>,
}

/// Right PF pair of an irreducible nonnegative matrix.
pub fn pf_pair(m: &NonnegMatrix) -> Result<PfPair> {
    if !m.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    power_iteration(m.entries(), false)
}

/// Left PF pair: `u A = ρ u`, with `u` normalized so `‖u‖_∞ = 1`.
pub fn left_pf(m: &NonnegMatrix) -> Result<(f64, Vec<f64>)> {
    if !m.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let pair = power_iteration(m.entries(), true)?;
    Ok((pair.rho, pair.v))
}

/// The stochastic rescaling `𝔰(A)`.
///
/// Rows are renormalized exactly, which at the true PF vector coincides with
/// the defining formula and keeps row sums at one to machine accuracy.
pub fn stochastic_rescale(m: &NonnegMatrix) -> Result<StochasticKernel> {
    let pair = pf_pair(m)?;
    let n = m.n();
    let mut rows = Array2::zeros((n, n));
    for &(i, j) in m.graph().edges() {
        rows[[i, j]] = m.entries()[[i, j]] * pair.v[j];
    }
    normalize_rows(&mut rows);
    StochasticKernel::new(m.graph().clone(), rows)
}

fn power_iteration(a: &Array2<f64>, transpose: bool) -> Result<PfPair> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::Empty);
    }
    // Shift by the worst diagonal deficit plus one; guarantees a positive
    // diagonal, hence primitivity.
    let mut deficit = 0.0_f64;
    for i in 0..n {
        let row_max = (0..n)
            .map(|j| if transpose { a[[j, i]] } else { a[[i, j]] })
            .fold(0.0_f64, f64::max);
        deficit = deficit.max(row_max - a[[i, i]]);
    }
    let shift = deficit + 1.0;

    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut acc = shift * x[i];
            for j in 0..n {
                let entry = if transpose { a[[j, i]] } else { a[[i, j]] };
                acc += entry * x[j];
            }
            out[i] = acc;
        }
    };

    // Uniform start: already the fixed point for stochastic input.
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut iterations = 0;
    loop {
        apply(&v, &mut w);
        let max = w.iter().copied().fold(0.0_f64, f64::max);
        if !(max > 0.0) || !max.is_finite() {
            return Err(Error::NonFinite("power iteration".into()));
        }
        for x in &mut w {
            *x /= max;
        }
        let dist = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        std::mem::swap(&mut v, &mut w);
        iterations += 1;
        if dist <= ITERATE_TOL || iterations >= MAX_ITERS {
            break;
        }
    }

    // Root of the unshifted matrix from the total-mass ratio, then the
    // residual gate.
    let mut av = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            let entry = if transpose { a[[j, i]] } else { a[[i, j]] };
            acc += entry * v[j];
        }
        av[i] = acc;
    }
    let rho = av.iter().sum::<f64>() / v.iter().sum::<f64>();
    let scale = rho.max(1.0);
    let residual = av
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - rho * b).abs())
        .fold(0.0_f64, f64::max);
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(PfPair { rho, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Digraph;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stochastic_matrix_has_unit_root_and_flat_vector() {
        let m = NonnegMatrix::from_entries(array![[0.8, 0.2], [0.5, 0.5]]).unwrap();
        let pair = pf_pair(&m).unwrap();
        assert_abs_diff_eq!(pair.rho, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pair.v[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pair.v[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn periodic_two_cycle_converges() {
        let m = NonnegMatrix::from_entries(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let pair = pf_pair(&m).unwrap();
        assert_abs_diff_eq!(pair.rho, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.v[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.v[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn root_matches_characteristic_polynomial() {
        // Char. poly of [[1,2],[3,4]] gives rho = (5 + sqrt(33)) / 2.
        let m = NonnegMatrix::from_entries(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let pair = pf_pair(&m).unwrap();
        let expected = (5.0 + 33.0_f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(pair.rho, expected, epsilon = 1e-10);
    }

    #[test]
    fn root_matches_matrix_squaring_oracle() {
        // Independent route: repeated squaring drives the matrix to rank one,
        // and the growth rate of the total mass recovers the root.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 2 + (rng.random::<u64>() % 5) as usize;
            let mut entries = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    entries[[i, j]] = 0.05 + rng.random::<f64>();
                }
            }
            let m = NonnegMatrix::from_entries(entries.clone()).unwrap();
            let rho = pf_pair(&m).unwrap().rho;

            let mut b = entries;
            let mut log_scale = 0.0_f64;
            for _ in 0..60 {
                let norm = b.iter().cloned().fold(0.0_f64, f64::max);
                b.mapv_inplace(|x| x / norm);
                log_scale = 2.0 * (log_scale + norm.ln());
                b = b.dot(&b);
            }
            let norm = b.iter().cloned().fold(0.0_f64, f64::max);
            let log_rho = (log_scale + norm.ln()) / 2.0_f64.powi(60);
            assert_abs_diff_eq!(rho.ln(), log_rho, epsilon = 1e-9);
        }
    }

    #[test]
    fn reducible_matrix_rejected() {
        let m = NonnegMatrix::from_entries(array![[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(pf_pair(&m), Err(Error::NotIrreducible)));
    }

    #[test]
    fn rescale_fixes_stochastic_input_exactly() {
        let m = NonnegMatrix::from_entries(array![[0.8, 0.2], [0.5, 0.5]]).unwrap();
        let p = stochastic_rescale(&m).unwrap();
        assert_eq!(p.get(0, 0), 0.8);
        assert_eq!(p.get(1, 0), 0.5);
    }

    #[test]
    fn rescale_invariant_under_scaling_and_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = 2 + (rng.random::<u64>() % 4) as usize;
            let mut entries = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    entries[[i, j]] = 0.1 + rng.random::<f64>();
                }
            }
            let m = NonnegMatrix::from_entries(entries.clone()).unwrap();
            let base = stochastic_rescale(&m).unwrap();

            let alpha = 3.7;
            let scaled = NonnegMatrix::from_entries(entries.mapv(|x| alpha * x)).unwrap();
            assert!(base.max_abs_diff(&stochastic_rescale(&scaled).unwrap()) <= 1e-10);

            let d: Vec<f64> = (0..n).map(|_| 0.2 + 2.0 * rng.random::<f64>()).collect();
            let mut conj = entries.clone();
            for i in 0..n {
                for j in 0..n {
                    conj[[i, j]] = entries[[i, j]] * d[j] / d[i];
                }
            }
            let conj = NonnegMatrix::from_entries(conj).unwrap();
            assert!(base.max_abs_diff(&stochastic_rescale(&conj).unwrap()) <= 1e-10);
        }
    }

    #[test]
    fn rescale_is_idempotent() {
        let m = NonnegMatrix::from_entries(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let once = stochastic_rescale(&m).unwrap();
        let twice = stochastic_rescale(&once.as_nonneg()).unwrap();
        assert!(once.max_abs_diff(&twice) <= 1e-12);
    }

    #[test]
    fn left_pf_of_cycle_is_uniform() {
        let g = Digraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let m = NonnegMatrix::indicator(&g);
        let (rho, u) = left_pf(&m).unwrap();
        assert_abs_diff_eq!(rho, 1.0, epsilon = 1e-12);
        for &x in &u {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-11);
        }
    }
}
