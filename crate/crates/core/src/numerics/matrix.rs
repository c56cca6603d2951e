use super::scalar::Scalar;
use crate::error::{Error, Result};
use std::ops::{Index, IndexMut};

/// Dense row-major matrix over a [`Scalar`].
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<S>]) -> Self {
        let n = cols.first().map_or(0, |c| c.len());
        Self::from_fn(n, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let t = out[(i, j)].clone() + a.clone() * b.clone();
                    out[(i, j)] = t;
                }
            }
        }
        Ok(out)
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("matrix product dimensions")
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimensions");
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() {
                        acc = acc + a.clone() * b.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "matrix sum dimensions");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "matrix difference dimensions");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|a| a.clone() * c.clone())
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    /// Frobenius pairing `sum_ij a_ij b_ij`.
    pub fn frobenius_dot(&self, o: &Self) -> S {
        self.data
            .iter()
            .zip(&o.data)
            .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    /// Largest absolute entry, as `f64`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.magnitude()).fold(0.0, f64::max)
    }

    /// Induced 1-norm, as `f64`.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].magnitude()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| a.is_zero())
    }

    /// Vertical concatenation.
    pub fn vstack(blocks: &[Self]) -> Self {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            data.extend(b.data.iter().cloned());
            rows += b.rows;
        }
        Matrix { rows, cols, data }
    }

    /// Solve `self * x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        let n = self.rows;
        if self.cols != n || b.len() != n {
            return Err(Error::Dimension(format!("solve with {}x{} and rhs {}", n, self.cols, b.len())));
        }
        let mut a = self.data.clone();
        let mut x: Vec<S> = b.to_vec();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].magnitude().total_cmp(&a[j * n + k].magnitude()))
                .unwrap_or(k);
            if a[p * n + k].is_zero() || a[p * n + k].magnitude() == 0.0 && !S::EXACT {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            let piv = a[k * n + k].clone();
            for i in k + 1..n {
                if a[i * n + k].is_zero() {
                    continue;
                }
                let f = a[i * n + k].clone() / piv.clone();
                for j in k..n {
                    let t = a[i * n + j].clone() - f.clone() * a[k * n + j].clone();
                    a[i * n + j] = t;
                }
                let t = x[i].clone() - f * x[k].clone();
                x[i] = t;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k].clone();
            for j in k + 1..n {
                acc = acc - a[k * n + j].clone() * x[j].clone();
            }
            x[k] = acc / a[k * n + k].clone();
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.rows;
        let cols: Result<Vec<Vec<S>>> = (0..n)
            .map(|j| {
                let mut e = vec![S::zero(); n];
                e[j] = S::one();
                self.solve(&e)
            })
            .collect();
        Ok(Self::from_columns(&cols?))
    }

    /// Reduced row echelon form and pivot columns, exact for exact scalars.
    ///
    /// For floats, entries below `tol` times the largest entry count as zero.
    pub fn rref(&self, tol: f64) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let small = |x: &S| if S::EXACT { x.is_zero() } else { x.magnitude() <= tol * scale };
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let p = (r..m.rows)
                .max_by(|&i, &j| m[(i, c)].magnitude().total_cmp(&m[(j, c)].magnitude()))
                .unwrap();
            if small(&m[(p, c)]) {
                continue;
            }
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(r * m.cols + j, p * m.cols + j);
                }
            }
            let piv = m[(r, c)].clone();
            for j in c..m.cols {
                let t = m[(r, j)].clone() / piv.clone();
                m[(r, j)] = t;
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    let t = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                    m[(i, j)] = t;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self, tol: f64) -> usize {
        if S::EXACT {
            self.rref(tol).1.len()
        } else {
            let sv = singular_values(&self.map(|x| x.to_f64()));
            let top = sv.first().copied().unwrap_or(0.0);
            sv.iter().filter(|s| **s > tol * top && top > 0.0).count()
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

fn to_nalgebra(m: &Matrix<f64>) -> nalgebra::DMatrix<f64> {
    // pad wide matrices so the thin SVD exposes the full right singular basis
    let rows = m.rows().max(m.cols());
    nalgebra::DMatrix::from_fn(rows, m.cols(), |i, j| if i < m.rows() { m[(i, j)] } else { 0.0 })
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix<f64>) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = to_nalgebra(m).singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Basis of `{x : m x = 0}`.
///
/// Exact scalars: reduced basis from the RREF, with `m x = 0` exactly.
/// Floats: orthonormal right singular vectors whose singular value is at most
/// `tol` times the largest one.
pub fn nullspace<S: Scalar>(m: &Matrix<S>, tol: f64) -> Vec<Vec<S>> {
    if S::EXACT {
        let (r, pivots) = m.rref(tol);
        let free: Vec<usize> = (0..m.cols()).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); m.cols()];
                v[f] = S::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    } else {
        let n = m.cols();
        if n == 0 {
            return Vec::new();
        }
        if m.rows() == 0 {
            return (0..n)
                .map(|j| (0..n).map(|i| if i == j { S::one() } else { S::zero() }).collect())
                .collect();
        }
        let svd = to_nalgebra(&m.map(|x| x.to_f64())).svd(false, true);
        let vt = svd.v_t.expect("right singular vectors");
        let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
        (0..n)
            .filter(|&k| top == 0.0 || svd.singular_values[k] <= tol * top)
            .map(|k| (0..n).map(|j| S::from_f64(vt[(k, j)])).collect())
            .collect()
    }
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor core.
pub fn mat_exp<S: Scalar>(m: &Matrix<S>) -> Result<Matrix<S>> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::Dimension(format!("mat_exp of {}x{}", n, m.cols())));
    }
    let norm = m.norm1();
    let mut squarings = 0u32;
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
    }
    let a = m.scale(&S::from_f64(0.5f64.powi(squarings as i32)));
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..=18 {
        term = term.mul(&a).scale(&S::from_ratio(1, k));
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    Ok(sum)
}

/// Euclidean norm of an `f64` vector.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Max-abs distance between two vectors.
pub fn max_diff<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.clone() - y.clone()).magnitude()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rational;

    #[test]
    fn identity_has_trivial_kernel() {
        assert!(nullspace(&Matrix::<f64>::identity(3), 1e-10).is_empty());
        assert!(nullspace(&Matrix::<Rational>::identity(3), 0.0).is_empty());
    }

    #[test]
    fn zero_matrix_kernel_is_everything() {
        assert_eq!(nullspace(&Matrix::<f64>::zeros(2, 2), 1e-10).len(), 2);
        assert_eq!(nullspace(&Matrix::<Rational>::zeros(2, 2), 0.0).len(), 2);
    }

    #[test]
    fn wide_float_kernel() {
        let m = Matrix::from_vec(1, 3, vec![1.0, 1.0, 0.0]);
        let k = nullspace(&m, 1e-10);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(m.mul_vec(v)[0].abs() < 1e-14);
        }
    }

    #[test]
    fn exact_kernel_is_exact() {
        let q = |n, d| Rational::from_ratio(n, d);
        let m = Matrix::from_vec(2, 3, vec![q(1, 2), q(1, 3), q(1, 1), q(2, 7), q(0, 1), q(-1, 5)]);
        let k = nullspace(&m, 0.0);
        assert_eq!(k.len(), 1);
        assert!(m.mul_vec(&k[0]).iter().all(|x| x.is_zero()));
    }

    #[test]
    fn exp_of_rotation_generator() {
        let t = 0.9f64;
        let g = Matrix::from_vec(2, 2, vec![0.0, -t, t, 0.0]);
        let r = mat_exp(&g).unwrap();
        let want = [t.cos(), -t.sin(), t.sin(), t.cos()];
        for (a, b) in r.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(mat_exp(&Matrix::<f64>::zeros(3, 3)).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn solve_and_inverse() {
        let m = Matrix::from_vec(3, 3, vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        assert!(id.sub(&Matrix::identity(3)).max_abs() < 1e-15);
        assert!(matches!(Matrix::<f64>::zeros(2, 2).solve(&[1.0, 0.0]), Err(Error::Singular)));
    }
}
