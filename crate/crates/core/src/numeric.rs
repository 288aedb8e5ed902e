//! Rank computations by incremental Gaussian elimination with column pivoting.

/// Incrementally built row basis. Each accepted row is stored in reduced form
/// together with its pivot column; a candidate row is reduced against all
/// accepted rows and kept only if a pivot above the threshold survives.
#[derive(Debug, Clone)]
pub struct GaussBasis {
    width: usize,
    threshold: f64,
    reduced: Vec<Vec<f64>>,
    pivots: Vec<usize>,
}

impl GaussBasis {
    pub fn new(width: usize, threshold: f64) -> Self {
        Self {
            width,
            threshold,
            reduced: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.reduced.len()
    }

    /// Tries to add `row` to the basis. Returns true when the row was
    /// independent of the rows already present.
    pub fn try_add(&mut self, row: &[f64]) -> bool {
        assert_eq!(row.len(), self.width, "row width mismatch");
        let mut work = row.to_vec();
        for (basis_row, &p) in self.reduced.iter().zip(&self.pivots) {
            let factor = work[p];
            if factor != 0.0 {
                for (w, b) in work.iter_mut().zip(basis_row) {
                    *w -= factor * b;
                }
            }
        }
        // Column pivot: largest surviving magnitude.
        let (pivot, mag) = work
            .iter()
            .enumerate()
            .map(|(i, &x)| (i, x.abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= self.threshold {
            return false;
        }
        let scale = work[pivot];
        for w in &mut work {
            *w /= scale;
        }
        self.reduced.push(work);
        self.pivots.push(pivot);
        true
    }
}

/// Rank of a set of rows at the given pivot threshold.
pub fn rank_of(rows: &[Vec<f64>], threshold: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut basis = GaussBasis::new(rows[0].len(), threshold);
    for row in rows {
        basis.try_add(row);
    }
    basis.rank()
}

/// Indices of a maximal independent subset of `rows`, relative to a basis
/// pre-seeded with `seed` rows (used for independence modulo a subspace).
pub fn independent_indices(seed: &[Vec<f64>], rows: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let width = seed
        .first()
        .map(|r| r.len())
        .or_else(|| rows.first().map(|r| r.len()))
        .unwrap_or(0);
    let mut basis = GaussBasis::new(width, threshold);
    for s in seed {
        basis.try_add(s);
    }
    let mut kept = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if basis.try_add(row) {
            kept.push(i);
        }
    }
    kept
}
