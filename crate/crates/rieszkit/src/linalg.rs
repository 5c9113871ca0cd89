//! Small dense linear algebra kit: symmetric matrices, Cholesky with
//! row/column updates, and order-stable pairwise summation.

/// Pairwise (tree) summation. Fixed association order, so the result is
/// bit-stable for a given input slice regardless of the caller's context.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Dot product with pairwise accumulation.
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prods)
}

/// Dense symmetric matrix, full row-major storage.
#[derive(Clone, Debug)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both (i,j) and (j,i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// y = A x, each row accumulated pairwise in index order.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| pairwise_dot(self.row(i), x)).collect()
    }

    /// Quadratic form x' A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        pairwise_dot(x, &ax)
    }

    /// Bilinear form x' A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        pairwise_dot(x, &ay)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at step {step})")]
    NotPositiveDefinite { step: usize, pivot: f64 },
    #[error("singular linear system")]
    Singular,
}

/// Cholesky factor L (lower, row lengths i+1) of a principal submatrix of a
/// `SymMatrix`, addressed through an index list. Supports appending an index
/// and removing one, each in O(k^2), so active-set pivoting stays cheap.
pub struct UpdatableCholesky {
    rows: Vec<Vec<f64>>,
}

impl UpdatableCholesky {
    pub fn empty() -> Self {
        UpdatableCholesky { rows: Vec::new() }
    }

    /// Factor K[idx, idx] from scratch.
    pub fn factor(k: &SymMatrix, idx: &[usize]) -> Result<Self, LinalgError> {
        let m = idx.len();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        for (i, &gi) in idx.iter().enumerate() {
            let mut row = vec![0.0; i + 1];
            for j in 0..i {
                let mut s = k.get(gi, idx[j]);
                for p in 0..j {
                    s -= row[p] * rows[j][p];
                }
                row[j] = s / rows[j][j];
            }
            let mut s = k.get(gi, gi);
            for p in 0..i {
                s -= row[p] * row[p];
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { step: i, pivot: s });
            }
            row[i] = s.sqrt();
            rows.push(row);
        }
        Ok(UpdatableCholesky { rows })
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    /// Append a variable whose couplings to the current ones are `col`
    /// (length = current order) and whose diagonal entry is `diag`.
    pub fn append(&mut self, col: &[f64], diag: f64) -> Result<(), LinalgError> {
        let m = self.rows.len();
        debug_assert_eq!(col.len(), m);
        let mut row = vec![0.0; m + 1];
        for j in 0..m {
            let mut s = col[j];
            for p in 0..j {
                s -= row[p] * self.rows[j][p];
            }
            row[j] = s / self.rows[j][j];
        }
        let s = diag - row[..m].iter().map(|v| v * v).sum::<f64>();
        if s <= 0.0 || !s.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { step: m, pivot: s });
        }
        row[m] = s.sqrt();
        self.rows.push(row);
        Ok(())
    }

    /// Remove the variable at position `pos` in factor order. The trailing
    /// block becomes lower-Hessenberg; Givens rotations on column pairs
    /// restore triangularity.
    pub fn remove(&mut self, pos: usize) {
        let m = self.rows.len();
        debug_assert!(pos < m);
        self.rows.remove(pos);
        // Rows pos.. (new indexing) now reach one column too far.
        for j in pos..self.rows.len() {
            // Zero entry (j, j+1) by rotating columns j and j+1.
            let a = self.rows[j][j];
            let b = self.rows[j][j + 1];
            let r = a.hypot(b);
            if r == 0.0 {
                self.rows[j].truncate(j + 1);
                continue;
            }
            let (c, s) = (a / r, b / r);
            for row in self.rows[j..].iter_mut() {
                let x = row[j];
                let y = row[j + 1];
                row[j] = c * x + s * y;
                row[j + 1] = -s * x + c * y;
            }
            // Keep the diagonal positive.
            if self.rows[j][j] < 0.0 {
                for row in self.rows[j..].iter_mut() {
                    row[j] = -row[j];
                }
            }
            self.rows[j].truncate(j + 1);
        }
    }

    /// Solve L L' x = rhs (in factor order).
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.rows.len();
        debug_assert_eq!(rhs.len(), m);
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut s = rhs[i];
            for j in 0..i {
                s -= self.rows[i][j] * y[j];
            }
            y[i] = s / self.rows[i][i];
        }
        for i in (0..m).rev() {
            let mut s = y[i];
            for j in i + 1..m {
                s -= self.rows[j][i] * y[j];
            }
            y[i] = s / self.rows[i][i];
        }
        y
    }
}

/// Gaussian elimination with partial pivoting on a dense square system.
/// Used for small saddle-point systems where the matrix is indefinite.
pub fn solve_dense(a: &mut [Vec<f64>], mut rhs: Vec<f64>) -> Result<Vec<f64>, LinalgError> {
    let n = a.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return Err(LinalgError::Singular);
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, seed: u64) -> SymMatrix {
        // Diagonally dominated random symmetric matrix.
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut k = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..i {
                k.set(i, j, next() - 0.5);
            }
        }
        for i in 0..n {
            k.set(i, i, n as f64);
        }
        k
    }

    #[test]
    fn factor_solve_roundtrip() {
        let k = spd(8, 3);
        let idx: Vec<usize> = (0..8).collect();
        let chol = UpdatableCholesky::factor(&k, &idx).unwrap();
        let rhs: Vec<f64> = (0..8).map(|i| i as f64 - 3.0).collect();
        let x = chol.solve(&rhs);
        let kx = k.mul_vec(&x);
        for i in 0..8 {
            assert!((kx[i] - rhs[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn append_matches_full_factor() {
        let k = spd(10, 7);
        let idx: Vec<usize> = (0..6).collect();
        let mut chol = UpdatableCholesky::factor(&k, &idx).unwrap();
        let col: Vec<f64> = idx.iter().map(|&j| k.get(6, j)).collect();
        chol.append(&col, k.get(6, 6)).unwrap();
        let full = UpdatableCholesky::factor(&k, &(0..7).collect::<Vec<_>>()).unwrap();
        for i in 0..7 {
            for j in 0..=i {
                assert!((chol.rows[i][j] - full.rows[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn remove_matches_refactor() {
        let k = spd(9, 11);
        let idx: Vec<usize> = (0..9).collect();
        let mut chol = UpdatableCholesky::factor(&k, &idx).unwrap();
        chol.remove(3);
        let kept: Vec<usize> = (0..9).filter(|&i| i != 3).collect();
        let rhs: Vec<f64> = kept.iter().map(|&i| (i as f64).sin()).collect();
        let x = chol.solve(&rhs);
        let full = UpdatableCholesky::factor(&k, &kept).unwrap();
        let y = full.solve(&rhs);
        for i in 0..8 {
            assert!((x[i] - y[i]).abs() < 1e-9, "{} vs {}", x[i], y[i]);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).cos()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }
}
