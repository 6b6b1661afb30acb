//! Second-order forward-mode automatic differentiation.
//!
//! A [`Jet`] is a truncated multivariate Taylor expansion: value, gradient and
//! Hessian with respect to up to [`MAX_DIM`] chart coordinates. Every field in
//! the crate (metrics, endomorphisms, vector fields) is written once as a
//! closure over jets, so derivatives of composite fields such as
//! `x -> P(x) * grad(...)` come out exactly instead of by differencing.
//!
//! Jets track how many derivative levels are still valid. Taking a partial
//! derivative with [`Jet::d`] drops one level; binary operations keep the
//! minimum of their inputs. Requesting a derivative that is no longer tracked
//! panics, which turns a mis-ordered nested derivative into a loud failure
//! rather than a silently wrong number.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Largest chart dimension supported by the fixed-size jet storage.
pub const MAX_DIM: usize = 5;

/// Highest derivative order a jet can carry.
pub const MAX_ORDER: u8 = 2;

const HESS_LEN: usize = MAX_DIM * (MAX_DIM + 1) / 2;

#[inline(always)]
const fn hidx(i: usize, j: usize) -> usize {
    // upper-triangular packing, row i starts after sum_{r<i} (MAX_DIM - r)
    i * MAX_DIM + i - i * (i + 1) / 2 + (j - i)
}

const fn build_index() -> [[usize; MAX_DIM]; MAX_DIM] {
    let mut t = [[0usize; MAX_DIM]; MAX_DIM];
    let mut i = 0;
    while i < MAX_DIM {
        let mut j = 0;
        while j < MAX_DIM {
            t[i][j] = if i <= j { hidx(i, j) } else { hidx(j, i) };
            j += 1;
        }
        i += 1;
    }
    t
}

const IDX: [[usize; MAX_DIM]; MAX_DIM] = build_index();

/// Value with gradient and Hessian, see the module docs.
#[derive(Clone, Copy)]
pub struct Jet {
    v: f64,
    g: [f64; MAX_DIM],
    h: [f64; HESS_LEN],
    nvar: u8,
    order: u8,
}

impl Jet {
    /// A constant: every derivative is exactly zero.
    #[inline]
    pub fn constant(v: f64) -> Self {
        Jet {
            v,
            g: [0.0; MAX_DIM],
            h: [0.0; HESS_LEN],
            nvar: 0,
            order: MAX_ORDER,
        }
    }

    /// The coordinate function `x^index` evaluated at `value`, differentiated
    /// with respect to `nvar` coordinates up to `order`.
    pub fn variable(value: f64, index: usize, nvar: usize, order: u8) -> Self {
        assert!(nvar <= MAX_DIM, "at most {MAX_DIM} coordinates are supported");
        assert!(index < nvar);
        assert!(order <= MAX_ORDER);
        let mut j = Jet::constant(value);
        if order > 0 {
            j.g[index] = 1.0;
            j.nvar = nvar as u8;
        }
        j.order = order;
        j
    }

    #[inline]
    pub fn zero() -> Self {
        Jet::constant(0.0)
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.v
    }

    /// Number of derivative levels that are still exact.
    #[inline]
    pub fn order(&self) -> u8 {
        if self.nvar == 0 {
            MAX_ORDER
        } else {
            self.order
        }
    }

    #[inline]
    pub fn nvar(&self) -> usize {
        self.nvar as usize
    }

    /// First partial `∂_k` as a plain number.
    pub fn partial(&self, k: usize) -> f64 {
        if self.nvar == 0 || k >= self.nvar as usize {
            return 0.0;
        }
        assert!(self.order >= 1, "first derivative is not tracked by this jet");
        self.g[k]
    }

    /// Second partial `∂_k ∂_l` as a plain number.
    pub fn second(&self, k: usize, l: usize) -> f64 {
        let n = self.nvar as usize;
        if n == 0 || k >= n || l >= n {
            return 0.0;
        }
        assert!(self.order >= 2, "second derivative is not tracked by this jet");
        self.h[IDX[k][l]]
    }

    /// The partial derivative `∂_k` as a jet one order lower.
    pub fn d(&self, k: usize) -> Jet {
        let n = self.nvar as usize;
        if n == 0 || k >= n {
            let mut z = Jet::zero();
            if n > 0 {
                z.nvar = self.nvar;
                z.order = self.order.saturating_sub(1);
            }
            return z;
        }
        assert!(
            self.order >= 1,
            "derivative requested beyond the tracked order"
        );
        let mut r = Jet::constant(self.g[k]);
        r.nvar = self.nvar;
        r.order = self.order - 1;
        if r.order >= 1 {
            for i in 0..n {
                r.g[i] = self.h[IDX[k][i]];
            }
        }
        r
    }

    /// True when the value and every tracked derivative are exactly zero.
    pub fn is_exact_zero(&self) -> bool {
        if self.v != 0.0 {
            return false;
        }
        let n = self.nvar as usize;
        if self.order >= 1 && self.g[..n].iter().any(|&x| x != 0.0) {
            return false;
        }
        if self.order >= 2 {
            for i in 0..n {
                for j in i..n {
                    if self.h[IDX[i][j]] != 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Apply a scalar function given its value and first two derivatives at
    /// `self.value()`.
    #[inline]
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let n = self.nvar as usize;
        let mut r = *self;
        r.v = f0;
        if n == 0 {
            return r;
        }
        if self.order >= 1 {
            for i in 0..n {
                r.g[i] = f1 * self.g[i];
            }
        }
        if self.order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let p = IDX[i][j];
                    r.h[p] = f1 * self.h[p] + f2 * self.g[i] * self.g[j];
                }
            }
        }
        r
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Jet {
        let x = self.v;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sqrt(self) -> Jet {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn recip(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn powi(self, k: i32) -> Jet {
        let x = self.v;
        let kf = k as f64;
        match k {
            0 => self.chain(1.0, 0.0, 0.0),
            1 => self,
            _ => self.chain(
                x.powi(k),
                kf * x.powi(k - 1),
                kf * (kf - 1.0) * x.powi(k - 2),
            ),
        }
    }

    pub fn powf(self, p: f64) -> Jet {
        let x = self.v;
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    /// `|x|`, differentiated as `sign(x) * x`; not smooth at zero.
    pub fn abs(self) -> Jet {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn merge_meta(a: &Jet, b: &Jet) -> (u8, u8) {
        let nvar = a.nvar.max(b.nvar);
        let order = match (a.nvar, b.nvar) {
            (0, 0) => MAX_ORDER,
            (0, _) => b.order,
            (_, 0) => a.order,
            _ => a.order.min(b.order),
        };
        (nvar, order)
    }
}

impl Default for Jet {
    fn default() -> Self {
        Jet::zero()
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.nvar as usize;
        write!(f, "Jet({}", self.v)?;
        if n > 0 && self.order >= 1 {
            write!(f, "; grad {:?}", &self.g[..n])?;
        }
        write!(f, "; order {})", self.order())
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, b: Jet) -> Jet {
        let (nvar, order) = Jet::merge_meta(&self, &b);
        let n = nvar as usize;
        let mut r = Jet::constant(self.v + b.v);
        r.nvar = nvar;
        r.order = order;
        if n > 0 && order >= 1 {
            for i in 0..n {
                r.g[i] = self.g[i] + b.g[i];
            }
            if order >= 2 {
                for i in 0..n {
                    for j in i..n {
                        let p = IDX[i][j];
                        r.h[p] = self.h[p] + b.h[p];
                    }
                }
            }
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, b: Jet) -> Jet {
        self + (-b)
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        let mut r = self;
        r.v = -r.v;
        let n = r.nvar as usize;
        for i in 0..n {
            r.g[i] = -r.g[i];
        }
        for i in 0..n {
            for j in i..n {
                let p = IDX[i][j];
                r.h[p] = -r.h[p];
            }
        }
        r
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, b: Jet) -> Jet {
        if b.nvar == 0 {
            return self * b.v;
        }
        if self.nvar == 0 {
            return b * self.v;
        }
        let (nvar, order) = Jet::merge_meta(&self, &b);
        let n = nvar as usize;
        let mut r = Jet::constant(self.v * b.v);
        r.nvar = nvar;
        r.order = order;
        if order >= 1 {
            for i in 0..n {
                r.g[i] = self.g[i] * b.v + self.v * b.g[i];
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let p = IDX[i][j];
                    r.h[p] = self.h[p] * b.v
                        + self.v * b.h[p]
                        + self.g[i] * b.g[j]
                        + self.g[j] * b.g[i];
                }
            }
        }
        r
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, b: Jet) -> Jet {
        if b.nvar == 0 {
            return self * (1.0 / b.v);
        }
        self * b.recip()
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, c: f64) -> Jet {
        let mut r = self;
        r.v *= c;
        let n = r.nvar as usize;
        for i in 0..n {
            r.g[i] *= c;
        }
        for i in 0..n {
            for j in i..n {
                r.h[IDX[i][j]] *= c;
            }
        }
        r
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, c: f64) -> Jet {
        self * (1.0 / c)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, c: f64) -> Jet {
        let mut r = self;
        r.v += c;
        r
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn add(self, j: Jet) -> Jet {
        j + self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, c: f64) -> Jet {
        self + (-c)
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn sub(self, j: Jet) -> Jet {
        (-j) + self
    }
}

impl AddAssign for Jet {
    #[inline]
    fn add_assign(&mut self, b: Jet) {
        *self = *self + b;
    }
}

impl SubAssign for Jet {
    #[inline]
    fn sub_assign(&mut self, b: Jet) {
        *self = *self - b;
    }
}

impl MulAssign for Jet {
    #[inline]
    fn mul_assign(&mut self, b: Jet) {
        *self = *self * b;
    }
}

impl MulAssign<f64> for Jet {
    #[inline]
    fn mul_assign(&mut self, c: f64) {
        *self = *self * c;
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::zero(), |a, b| a + b)
    }
}
