//! Small fixed-capacity vectors and matrices of jets.
//!
//! Components are in the chart's coordinate basis: `JVec` holds `X^i`,
//! `JMat` holds a mixed tensor `S^i_j` with `i` the row.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::jet::{Jet, MAX_DIM};

#[derive(Clone, Copy, Debug)]
pub struct JVec {
    dim: usize,
    c: [Jet; MAX_DIM],
}

impl JVec {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        JVec {
            dim,
            c: [Jet::zero(); MAX_DIM],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize) -> Jet) -> Self {
        let mut v = JVec::zeros(dim);
        for i in 0..dim {
            v.c[i] = f(i);
        }
        v
    }

    /// Constant-coefficient field with the given components.
    pub fn constant(values: &[f64]) -> Self {
        JVec::from_fn(values.len(), |i| Jet::constant(values[i]))
    }

    /// The coordinate basis field `∂_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        JVec::from_fn(dim, |i| Jet::constant(if i == k { 1.0 } else { 0.0 }))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iter(&self) -> impl Iterator<Item = &Jet> {
        self.c[..self.dim].iter()
    }

    pub fn values(&self) -> Vec<f64> {
        self.iter().map(Jet::value).collect()
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim, self.iter().map(Jet::value))
    }

    pub fn scale(&self, s: Jet) -> JVec {
        JVec::from_fn(self.dim, |i| self.c[i] * s)
    }

    /// Euclidean dot product of components (no metric).
    pub fn dot(&self, other: &JVec) -> Jet {
        let mut acc = Jet::zero();
        for i in 0..self.dim {
            acc += self.c[i] * other.c[i];
        }
        acc
    }

    /// True when every component vanishes together with its derivatives.
    pub fn is_exact_zero(&self) -> bool {
        self.iter().all(Jet::is_exact_zero)
    }

    /// Componentwise partial derivative `∂_k X^i`.
    pub fn d(&self, k: usize) -> JVec {
        JVec::from_fn(self.dim, |i| self.c[i].d(k))
    }
}

impl Index<usize> for JVec {
    type Output = Jet;
    #[inline]
    fn index(&self, i: usize) -> &Jet {
        debug_assert!(i < self.dim);
        &self.c[i]
    }
}

impl IndexMut<usize> for JVec {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut Jet {
        debug_assert!(i < self.dim);
        &mut self.c[i]
    }
}

impl Add for JVec {
    type Output = JVec;
    fn add(self, o: JVec) -> JVec {
        JVec::from_fn(self.dim, |i| self.c[i] + o.c[i])
    }
}

impl Sub for JVec {
    type Output = JVec;
    fn sub(self, o: JVec) -> JVec {
        JVec::from_fn(self.dim, |i| self.c[i] - o.c[i])
    }
}

impl Neg for JVec {
    type Output = JVec;
    fn neg(self) -> JVec {
        JVec::from_fn(self.dim, |i| -self.c[i])
    }
}

impl Mul<f64> for JVec {
    type Output = JVec;
    fn mul(self, s: f64) -> JVec {
        JVec::from_fn(self.dim, |i| self.c[i] * s)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct JMat {
    dim: usize,
    c: [[Jet; MAX_DIM]; MAX_DIM],
}

impl JMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        JMat {
            dim,
            c: [[Jet::zero(); MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        JMat::from_fn(dim, |i, j| Jet::constant(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut m = JMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.c[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn diagonal(entries: &[Jet]) -> Self {
        JMat::from_fn(entries.len(), |i, j| {
            if i == j {
                entries[i]
            } else {
                Jet::zero()
            }
        })
    }

    pub fn constant(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        JMat::from_fn(m.nrows(), |i, j| Jet::constant(m[(i, j)]))
    }

    /// `u ⊗ w`, the matrix with entries `u^i w_j`.
    pub fn outer(u: &JVec, w: &JVec) -> Self {
        JMat::from_fn(u.dim(), |i, j| u[i] * w[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Jet {
        self.c[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        self.c[i][j] = v;
    }

    pub fn transpose(&self) -> JMat {
        JMat::from_fn(self.dim, |i, j| self.c[j][i])
    }

    pub fn apply(&self, v: &JVec) -> JVec {
        JVec::from_fn(self.dim, |i| {
            let mut acc = Jet::zero();
            for j in 0..self.dim {
                acc += self.c[i][j] * v[j];
            }
            acc
        })
    }

    pub fn matmul(&self, o: &JMat) -> JMat {
        JMat::from_fn(self.dim, |i, j| {
            let mut acc = Jet::zero();
            for k in 0..self.dim {
                acc += self.c[i][k] * o.c[k][j];
            }
            acc
        })
    }

    pub fn scale(&self, s: Jet) -> JMat {
        JMat::from_fn(self.dim, |i, j| self.c[i][j] * s)
    }

    pub fn trace(&self) -> Jet {
        (0..self.dim).map(|i| self.c[i][i]).sum()
    }

    /// Componentwise partial derivative `∂_k S^i_j`.
    pub fn d(&self, k: usize) -> JMat {
        JMat::from_fn(self.dim, |i, j| self.c[i][j].d(k))
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.c[i][j].value())
    }

    /// Inverse and determinant by Gaussian elimination with partial pivoting.
    /// Returns `None` when a pivot vanishes.
    pub fn inverse_and_det(&self) -> Option<(JMat, Jet)> {
        let n = self.dim;
        let mut a = *self;
        let mut inv = JMat::identity(n);
        let mut det = Jet::constant(1.0);
        for col in 0..n {
            let mut piv = col;
            let mut best = a.c[col][col].value().abs();
            for r in col + 1..n {
                let v = a.c[r][col].value().abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if piv != col {
                a.c.swap(piv, col);
                inv.c.swap(piv, col);
                det = -det;
            }
            let p = a.c[col][col];
            det *= p;
            let rp = p.recip();
            for j in 0..n {
                a.c[col][j] *= rp;
                inv.c[col][j] *= rp;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.c[r][col];
                if f.value() == 0.0 && f.nvar() == 0 {
                    continue;
                }
                for j in 0..n {
                    let t = a.c[col][j];
                    a.c[r][j] -= f * t;
                    let t = inv.c[col][j];
                    inv.c[r][j] -= f * t;
                }
            }
        }
        Some((inv, det))
    }
}

impl Add for JMat {
    type Output = JMat;
    fn add(self, o: JMat) -> JMat {
        JMat::from_fn(self.dim, |i, j| self.c[i][j] + o.c[i][j])
    }
}

impl Sub for JMat {
    type Output = JMat;
    fn sub(self, o: JMat) -> JMat {
        JMat::from_fn(self.dim, |i, j| self.c[i][j] - o.c[i][j])
    }
}

impl Neg for JMat {
    type Output = JMat;
    fn neg(self) -> JMat {
        JMat::from_fn(self.dim, |i, j| -self.c[i][j])
    }
}

impl Mul<f64> for JMat {
    type Output = JMat;
    fn mul(self, s: f64) -> JMat {
        JMat::from_fn(self.dim, |i, j| self.c[i][j] * s)
    }
}

/// Frobenius norm of a plain matrix.
pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_jet_matrix_has_correct_derivative() {
        // M(t) = [[2+t, t^2], [sin t, 3]]; d(M^-1) = -M^-1 dM M^-1
        let t = Jet::variable(0.4, 0, 1, 2);
        let m = JMat::from_fn(2, |i, j| match (i, j) {
            (0, 0) => t + 2.0,
            (0, 1) => t * t,
            (1, 0) => t.sin(),
            _ => Jet::constant(3.0),
        });
        let (inv, det) = m.inverse_and_det().unwrap();
        let mv = m.values();
        let iv = mv.clone().try_inverse().unwrap();
        let dm = m.d(0).values();
        let expected = -&iv * dm * &iv;
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv.at(i, j).value() - iv[(i, j)]).abs() < 1e-14);
                assert!((inv.at(i, j).partial(0) - expected[(i, j)]).abs() < 1e-13);
            }
        }
        assert!((det.value() - mv.determinant()).abs() < 1e-14);
    }

    #[test]
    fn matmul_and_apply_agree() {
        let a = JMat::from_fn(3, |i, j| Jet::constant((i * 3 + j) as f64 + 0.5));
        let b = JMat::from_fn(3, |i, j| Jet::constant(if i == j { 2.0 } else { -1.0 }));
        let v = JVec::constant(&[1.0, -2.0, 0.5]);
        let lhs = a.matmul(&b).apply(&v);
        let rhs = a.apply(&b.apply(&v));
        for i in 0..3 {
            assert!((lhs[i].value() - rhs[i].value()).abs() < 1e-13);
        }
    }
}
