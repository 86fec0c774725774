use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu as SparseLu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::MatMut;
use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::Result;

use super::{DaeSystem, Pattern};

/// Groups of structurally orthogonal columns (no two share a row).
#[derive(Debug, Clone)]
pub(crate) struct Coloring {
    groups: Vec<Vec<usize>>,
    /// Rows touched by each column.
    col_rows: Vec<Vec<usize>>,
}

impl Coloring {
    pub(crate) fn dense(n: usize) -> Self {
        Coloring {
            groups: (0..n).map(|j| vec![j]).collect(),
            col_rows: vec![(0..n).collect(); n],
        }
    }

    /// Greedy coloring of the column intersection graph of a row pattern.
    pub(crate) fn from_rows(n: usize, rows: &[Vec<usize>]) -> Self {
        let mut col_rows = vec![Vec::new(); n];
        for (i, cols) in rows.iter().enumerate() {
            for &j in cols {
                col_rows[j].push(i);
            }
        }
        for r in &mut col_rows {
            r.sort_unstable();
            r.dedup();
        }
        // used_rows[g][i]: group g already touches row i
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut used_rows: Vec<Vec<bool>> = Vec::new();
        for (j, rows_j) in col_rows.iter().enumerate() {
            if rows_j.is_empty() {
                continue;
            }
            let slot = used_rows
                .iter()
                .position(|used| rows_j.iter().all(|&i| !used[i]));
            let g = match slot {
                Some(g) => g,
                None => {
                    groups.push(Vec::new());
                    used_rows.push(vec![false; n]);
                    groups.len() - 1
                }
            };
            groups[g].push(j);
            for &i in rows_j {
                used_rows[g][i] = true;
            }
        }
        Coloring { groups, col_rows }
    }

    pub(crate) fn n_groups(&self) -> usize {
        self.groups.len()
    }
}

/// Column-compressed union of the `y` and `y'` patterns plus the diagonal.
struct SparseStructure {
    symbolic: SymbolicSparseColMat<usize>,
    lu: SymbolicLu<usize>,
    /// `(row, col)` of each stored entry in column-major order.
    entries: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl SparseStructure {
    fn new(n: usize, pattern: &Pattern) -> Option<Self> {
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for rows in [&pattern.y, &pattern.yp] {
            for (i, row) in rows.iter().enumerate() {
                for &j in row {
                    cols[j].push(i);
                }
            }
        }
        let mut col_ptr = vec![0usize];
        let mut row_idx = vec![];
        let mut entries = vec![];
        for (j, col) in cols.iter_mut().enumerate() {
            col.sort_unstable();
            col.dedup();
            for &i in col.iter() {
                row_idx.push(i);
                entries.push((i, j));
            }
            col_ptr.push(row_idx.len());
        }
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let lu = SymbolicLu::try_new(symbolic.as_ref()).ok()?;
        let values = vec![0.0; entries.len()];
        Some(SparseStructure {
            symbolic,
            lu,
            entries,
            values,
        })
    }
}

enum Factor {
    Dense(LU<f64, Dyn, Dyn>),
    Sparse(Box<SparseLu<usize, f64>>),
}

/// Finite-difference Jacobians `dF/dy` and `dF/dy'` with a cached LU of
/// their combination `dF/dy + alpha dF/dy'`.
pub(crate) struct Jacobian {
    n: usize,
    y_color: Coloring,
    yp_color: Coloring,
    fy: DMatrix<f64>,
    fyp: DMatrix<f64>,
    sparse: Option<SparseStructure>,
    lu: Option<(f64, Factor)>,
    scale: Vec<f64>,
    pub(crate) evaluations: usize,
    pub(crate) factorizations: usize,
}

impl Jacobian {
    pub(crate) fn new<S: DaeSystem + ?Sized>(system: &S) -> Self {
        let n = system.dim();
        let (y_color, yp_color) = match system.pattern() {
            Some(Pattern { y, yp }) => (Coloring::from_rows(n, y), Coloring::from_rows(n, yp)),
            None => (Coloring::dense(n), Coloring::dense(n)),
        };
        let scale = system
            .scale()
            .map(|s| s.to_vec())
            .unwrap_or_else(|| vec![1.0; n]);
        let sparse = system.pattern().and_then(|p| SparseStructure::new(n, p));
        Jacobian {
            n,
            sparse,
            y_color,
            yp_color,
            fy: DMatrix::zeros(n, n),
            fyp: DMatrix::zeros(n, n),
            lu: None,
            scale,
            evaluations: 0,
            factorizations: 0,
        }
    }

    pub(crate) fn n_colors(&self) -> (usize, usize) {
        (self.y_color.n_groups(), self.yp_color.n_groups())
    }

    /// Re-evaluates both partial Jacobians at `(t, y, yp)`; `f0` is the
    /// residual there.
    pub(crate) fn update<S: DaeSystem + ?Sized>(
        &mut self,
        system: &S,
        t: f64,
        y: &[f64],
        yp: &[f64],
        f0: &[f64],
    ) -> Result<()> {
        let sqrt_eps = f64::EPSILON.sqrt();
        let mut work = y.to_vec();
        let mut out = vec![0.0; self.n];
        self.fy.fill(0.0);
        for group in &self.y_color.groups {
            let mut deltas = Vec::with_capacity(group.len());
            for &j in group {
                let d = sqrt_eps * y[j].abs().max(self.scale[j]);
                let d = (y[j] + d) - y[j];
                work[j] = y[j] + d;
                deltas.push(d);
            }
            system.residual(t, &work, yp, &mut out)?;
            for (&j, &d) in group.iter().zip(&deltas) {
                for &i in &self.y_color.col_rows[j] {
                    self.fy[(i, j)] = (out[i] - f0[i]) / d;
                }
                work[j] = y[j];
            }
        }
        let mut work = yp.to_vec();
        self.fyp.fill(0.0);
        for group in &self.yp_color.groups {
            let mut deltas = Vec::with_capacity(group.len());
            for &j in group {
                let d = sqrt_eps * yp[j].abs().max(self.scale[j]);
                let d = (yp[j] + d) - yp[j];
                work[j] = yp[j] + d;
                deltas.push(d);
            }
            system.residual(t, y, &work, &mut out)?;
            for (&j, &d) in group.iter().zip(&deltas) {
                for &i in &self.yp_color.col_rows[j] {
                    self.fyp[(i, j)] = (out[i] - f0[i]) / d;
                }
                work[j] = yp[j];
            }
        }
        self.evaluations += 1;
        self.lu = None;
        Ok(())
    }

    pub(crate) fn fy(&self) -> &DMatrix<f64> {
        &self.fy
    }

    pub(crate) fn fyp(&self) -> &DMatrix<f64> {
        &self.fyp
    }

    /// Factors `dF/dy + alpha dF/dy'` unless a factorization at a nearby
    /// `alpha` is cached. Returns false when the matrix is singular.
    pub(crate) fn factor(&mut self, alpha: f64, tolerance: f64) -> bool {
        if let Some((a, _)) = &self.lu {
            let ratio = alpha / a;
            if ratio > 1.0 / (1.0 + tolerance) && ratio < 1.0 + tolerance {
                return true;
            }
        }
        self.factorizations += 1;
        self.lu = None;
        let factor = match &mut self.sparse {
            Some(sp) => {
                for (v, &(i, j)) in sp.values.iter_mut().zip(&sp.entries) {
                    *v = self.fy[(i, j)] + alpha * self.fyp[(i, j)];
                }
                let mat = SparseColMatRef::new(sp.symbolic.as_ref(), &sp.values);
                match SparseLu::try_new_with_symbolic(sp.lu.clone(), mat) {
                    Ok(lu) => Factor::Sparse(Box::new(lu)),
                    Err(_) => return false,
                }
            }
            None => {
                let lu = (&self.fy + &self.fyp * alpha).lu();
                if !lu.is_invertible() {
                    return false;
                }
                Factor::Dense(lu)
            }
        };
        self.lu = Some((alpha, factor));
        true
    }

    /// Solves `J x = b` in place with the cached factorization.
    pub(crate) fn solve(&self, b: &mut [f64]) -> bool {
        let Some((_, lu)) = &self.lu else {
            return false;
        };
        match lu {
            Factor::Dense(lu) => {
                let mut v = DVector::from_column_slice(b);
                if !lu.solve_mut(&mut v) {
                    return false;
                }
                b.copy_from_slice(v.as_slice());
            }
            Factor::Sparse(lu) => {
                let n = b.len();
                lu.solve_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
            }
        }
        b.iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_needs_three_colors() {
        let n = 12;
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i: usize| (i.saturating_sub(1)..=(i + 1).min(n - 1)).collect())
            .collect();
        let c = Coloring::from_rows(n, &rows);
        assert_eq!(c.n_groups(), 3);
        for g in &c.groups {
            for (a, &j) in g.iter().enumerate() {
                for &k in &g[a + 1..] {
                    assert!(c.col_rows[j].iter().all(|r| !c.col_rows[k].contains(r)));
                }
            }
        }
    }
}
