//! Dense Cholesky factorization on a flat column-major buffer.

use nalgebra::{DMatrix, DVector};

/// Lower-triangular factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub(crate) struct DenseCholesky {
    n: usize,
    /// Column-major; only the lower triangle is meaningful.
    l: Vec<f64>,
}

impl DenseCholesky {
    /// Factors the lower triangle of a symmetric matrix; `None` if a pivot is
    /// not positive.
    pub(crate) fn new(a: &DMatrix<f64>) -> Option<Self> {
        let n = a.nrows();
        let mut l = a.as_slice().to_vec();
        for j in 0..n {
            let (head, tail) = l.split_at_mut((j + 1) * n);
            let col = &mut head[j * n..];
            let d = col[j];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            col[j] = d;
            for v in &mut col[j + 1..] {
                *v /= d;
            }
            let col = &col[..];
            // Rank-one update of the trailing columns.
            for k in j + 1..n {
                let f = col[k];
                if f == 0.0 {
                    continue;
                }
                let target = &mut tail[(k - j - 1) * n..(k - j) * n];
                for (t, &c) in target[k..].iter_mut().zip(&col[k..]) {
                    *t -= f * c;
                }
            }
        }
        Some(Self { n, l })
    }

    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let col = &self.l[j * n..(j + 1) * n];
            b[j] /= col[j];
            let bj = b[j];
            if bj != 0.0 {
                for (bi, &c) in b[j + 1..].iter_mut().zip(&col[j + 1..]) {
                    *bi -= c * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = &self.l[j * n..(j + 1) * n];
            let dot: f64 = col[j + 1..].iter().zip(&b[j + 1..]).map(|(c, x)| c * x).sum();
            b[j] = (b[j] - dot) / col[j];
        }
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    pub(crate) fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        let n = self.n;
        for c in 0..x.ncols() {
            self.solve_in_place(&mut x.as_mut_slice()[c * n..(c + 1) * n]);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_nalgebra() {
        let n = 7;
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 3 + j * 5) % 11) as f64 - 4.0);
        let a = &b * b.transpose() + DMatrix::identity(n, n);
        let ours = DenseCholesky::new(&a).unwrap();
        let rhs = DVector::from_fn(n, |i, _| i as f64 - 2.0);
        let x = ours.solve(&rhs);
        let y = a.clone().cholesky().unwrap().solve(&rhs);
        assert!((x - y).norm() < 1e-10);
        let m = DMatrix::from_fn(n, 3, |i, j| (i + j) as f64);
        assert!((ours.solve_matrix(&m) - a.cholesky().unwrap().solve(&m)).norm() < 1e-10);
    }

    #[test]
    fn rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(DenseCholesky::new(&a).is_none());
    }
}
