//! Seeded random generators for kernels, lumpings and embeddings.
//!
//! Rows and channel blocks are drawn from flat Dirichlet distributions
//! (exponential draws, normalized). The lumpable-kernel generator composes a
//! random base kernel with a random compatible Markov embedding; the foliated
//! structure of the lumpable kernels guarantees this reaches all of `W_κ`.

use ndarray::Array2;
use rand::Rng;

use crate::embedding::MarkovEmbedding;
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::kernel::{NonnegMatrix, StochasticKernel};
use crate::lumping::Lumping;

fn exp_draw<R: Rng>(rng: &mut R) -> f64 {
    // Exp(1); the clamp keeps the draw strictly positive.
    let u: f64 = rng.random();
    -(1.0 - u).max(f64::MIN_POSITIVE).ln().max(f64::MIN_POSITIVE)
}

/// A distribution on `0..n` drawn from the flat Dirichlet.
pub fn random_distribution<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| exp_draw(rng)).collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// A kernel on `graph` with each row drawn from the flat Dirichlet over its
/// out-neighborhood.
pub fn random_kernel<R: Rng>(graph: &Digraph, rng: &mut R) -> Result<StochasticKernel> {
    let n = graph.n();
    let mut rows = Array2::zeros((n, n));
    for y in 0..n {
        let outs: Vec<usize> = graph.out_neighbors(y).collect();
        if outs.is_empty() {
            return Err(Error::NotIrreducible);
        }
        let weights = random_distribution(outs.len(), rng);
        for (w, &y2) in weights.iter().zip(&outs) {
            rows[[y, y2]] = *w;
        }
    }
    StochasticKernel::new(graph.clone(), rows)
}

/// A reversible kernel on a graph with symmetric support: normalizes a random
/// symmetric conductance matrix.
pub fn random_reversible<R: Rng>(graph: &Digraph, rng: &mut R) -> Result<StochasticKernel> {
    let n = graph.n();
    for &(i, j) in graph.edges() {
        if !graph.contains(j, i) {
            return Err(Error::InvalidInput(format!(
                "support is not symmetric: ({i}, {j}) present, ({j}, {i}) missing"
            )));
        }
    }
    let mut s = Array2::zeros((n, n));
    for &(i, j) in graph.edges() {
        if i <= j {
            let w = 0.1 + rng.random::<f64>();
            s[[i, j]] = w;
            s[[j, i]] = w;
        }
    }
    let mut rows = Array2::zeros((n, n));
    for i in 0..n {
        let total: f64 = s.row(i).sum();
        for j in 0..n {
            rows[[i, j]] = s[[i, j]] / total;
        }
    }
    StochasticKernel::new(graph.clone(), rows)
}

/// A uniformly random surjective lumping from `m` states onto `n` classes.
pub fn random_lumping<R: Rng>(m: usize, n: usize, rng: &mut R) -> Result<Lumping> {
    if n > m || n == 0 {
        return Err(Error::InvalidInput(format!(
            "cannot lump {m} states onto {n} classes"
        )));
    }
    // Guarantee surjectivity: hit each class once, fill the rest uniformly.
    let mut map = vec![usize::MAX; m];
    let mut positions: Vec<usize> = (0..m).collect();
    for x in 0..n {
        let at = rng.random_range(0..positions.len());
        map[positions.swap_remove(at)] = x;
    }
    for slot in map.iter_mut().filter(|v| **v == usize::MAX) {
        *slot = rng.random_range(0..n);
    }
    Lumping::new(map, n)
}

/// A random κ-compatible Markov embedding into `(𝒴, ℰ)`: every admissible
/// channel row is drawn from the flat Dirichlet over its support.
pub fn random_markov_embedding<R: Rng>(
    kappa: &Lumping,
    target_graph: &Digraph,
    rng: &mut R,
) -> Result<MarkovEmbedding> {
    let m = kappa.domain_size();
    let lumped = kappa.lumped_edge_set(target_graph)?;
    let mut lambda = Array2::zeros((m, m));
    for y in 0..m {
        let x = kappa.apply(y);
        for x_prime in 0..kappa.range_size() {
            if !lumped.contains(x, x_prime) {
                continue;
            }
            let dests: Vec<usize> = kappa
                .block(x_prime)
                .iter()
                .copied()
                .filter(|&y2| target_graph.contains(y, y2))
                .collect();
            if dests.is_empty() {
                return Err(Error::Incompatible { y, x_prime });
            }
            let weights = random_distribution(dests.len(), rng);
            for (w, &y2) in weights.iter().zip(&dests) {
                lambda[[y, y2]] = *w;
            }
        }
    }
    MarkovEmbedding::new(kappa.clone(), NonnegMatrix::new(target_graph.clone(), lambda)?)
}

/// A random κ-lumpable kernel on `(𝒴, ℰ)` together with the base kernel and
/// embedding that produced it.
pub fn random_lumpable<R: Rng>(
    kappa: &Lumping,
    target_graph: &Digraph,
    rng: &mut R,
) -> Result<(StochasticKernel, StochasticKernel, MarkovEmbedding)> {
    let lumped = kappa.lumped_edge_set(target_graph)?;
    let base = random_kernel(&lumped, rng)?;
    let embedding = random_markov_embedding(kappa, target_graph, rng)?;
    let embedded = embedding.embed(&base)?;
    Ok((embedded, base, embedding))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lumping::{is_lumpable, lump};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_kernel_respects_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Digraph::new(3, vec![(0, 1), (1, 0), (1, 2), (2, 0)]).unwrap();
        let p = random_kernel(&g, &mut rng).unwrap();
        assert_eq!(p.graph(), &g);
    }

    #[test]
    fn random_reversible_is_reversible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let p = random_reversible(&Digraph::complete(4), &mut rng).unwrap();
            assert!(p.is_reversible(1e-12).unwrap());
        }
    }

    #[test]
    fn random_lumping_is_surjective() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = random_lumping(7, 3, &mut rng).unwrap();
            for x in 0..3 {
                assert!(!k.block(x).is_empty());
            }
        }
    }

    #[test]
    fn random_lumpable_lumps_back_to_base() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let kappa = random_lumping(6, 3, &mut rng).unwrap();
            let (p, base, _) = random_lumpable(&kappa, &Digraph::complete(6), &mut rng).unwrap();
            assert!(is_lumpable(&p, &kappa, 1e-12).unwrap());
            assert!(lump(&p, &kappa).unwrap().max_abs_diff(&base) <= 1e-12);
        }
    }
}
