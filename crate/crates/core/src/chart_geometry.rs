//! Riemannian primitives on a single coordinate chart.
//!
//! Conventions used throughout the crate:
//!
//! * `Γ^k_{ij} = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`
//! * `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z` and
//!   `R_{ijkl} = ⟨R(∂_i,∂_j)∂_k, ∂_l⟩`, so the sectional curvature of the
//!   plane spanned by orthonormal `u, v` is `R(u,v,v,u)`.
//! * A (1,1) tensor is stored as the matrix `S^i_j`, row index `i`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::endo_fields::EndoField;
use crate::error::{GeometryError, Result};
use crate::jet::{Jet, MAX_DIM, MAX_ORDER};
use crate::linalg::{JMat, JVec};

/// Metric components `g_ij` as a function of the coordinate jets.
pub type MetricFn = Arc<dyn Fn(&[Jet]) -> JMat + Send + Sync>;

/// A measure-zero set excluded from the chart, described by a distance-like
/// function that is zero on the set.
#[derive(Clone)]
pub struct SingularLocus {
    pub description: String,
    pub distance: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for SingularLocus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SingularLocus")
            .field("description", &self.description)
            .finish()
    }
}

/// A coordinate domain carrying a smooth metric.
#[derive(Clone)]
pub struct Chart {
    dim: usize,
    domain: Vec<(f64, f64)>,
    periodic: Vec<bool>,
    metric: MetricFn,
    singular_locus: Option<SingularLocus>,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("periodic", &self.periodic)
            .field("singular_locus", &self.singular_locus)
            .finish()
    }
}

impl Chart {
    pub fn new(
        domain: Vec<(f64, f64)>,
        periodic: Vec<bool>,
        metric: impl Fn(&[Jet]) -> JMat + Send + Sync + 'static,
    ) -> Result<Self> {
        let dim = domain.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(GeometryError::Dimension {
                expected: MAX_DIM,
                got: dim,
            });
        }
        if periodic.len() != dim {
            return Err(GeometryError::Dimension {
                expected: dim,
                got: periodic.len(),
            });
        }
        if domain.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(GeometryError::Scenario(
                "chart interval with lo >= hi".into(),
            ));
        }
        Ok(Chart {
            dim,
            domain,
            periodic,
            metric: Arc::new(metric),
            singular_locus: None,
        })
    }

    pub fn with_singular_locus(
        mut self,
        description: impl Into<String>,
        distance: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.singular_locus = Some(SingularLocus {
            description: description.into(),
            distance: Arc::new(distance),
        });
        self
    }

    /// Same coordinates and metric, periodic in every direction over `[0, 2π)`.
    pub fn torus(
        dim: usize,
        metric: impl Fn(&[Jet]) -> JMat + Send + Sync + 'static,
    ) -> Result<Self> {
        Chart::new(
            vec![(0.0, std::f64::consts::TAU); dim],
            vec![true; dim],
            metric,
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn singular_locus(&self) -> Option<&SingularLocus> {
        self.singular_locus.as_ref()
    }

    pub fn metric_fn(&self) -> &MetricFn {
        &self.metric
    }

    /// Wraps periodic coordinates into their interval.
    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| {
                if self.periodic[k] {
                    let (lo, hi) = self.domain[k];
                    lo + (v - lo).rem_euclid(hi - lo)
                } else {
                    v
                }
            })
            .collect()
    }

    /// Distance to the chart boundary along non-periodic coordinates and to
    /// the singular locus; `f64::INFINITY` for an unbounded, regular chart.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        let mut d = f64::INFINITY;
        for k in 0..self.dim {
            if !self.periodic[k] {
                let (lo, hi) = self.domain[k];
                d = d.min(x[k] - lo).min(hi - x[k]);
            }
        }
        if let Some(s) = &self.singular_locus {
            d = d.min((s.distance)(x));
        }
        d
    }

    /// Validates a point and returns it with periodic coordinates wrapped.
    pub fn check_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(GeometryError::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Domain {
                point: x.to_vec(),
                reason: "non-finite coordinate".into(),
            });
        }
        let x = self.wrap(x);
        for k in 0..self.dim {
            if !self.periodic[k] {
                let (lo, hi) = self.domain[k];
                if !(x[k] > lo && x[k] < hi) {
                    return Err(GeometryError::Domain {
                        point: x,
                        reason: format!("coordinate {k} outside ({lo}, {hi})"),
                    });
                }
            }
        }
        if let Some(s) = &self.singular_locus {
            if (s.distance)(&x) <= 1e-12 {
                return Err(GeometryError::Domain {
                    point: x,
                    reason: s.description.clone(),
                });
            }
        }
        Ok(x)
    }

    /// Metric components at `x` as plain numbers.
    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let x = self.check_point(x)?;
        let jets: Vec<Jet> = x.iter().map(|&v| Jet::constant(v)).collect();
        Ok((self.metric)(&jets).values())
    }

    /// Builds the jet-level geometry at `x`, differentiating the metric up to
    /// `order` (0, 1 or 2).
    pub fn local(&self, x: &[f64], order: u8) -> Result<LocalGeometry> {
        LocalGeometry::new(self, x, order)
    }
}

/// A vector field given by its chart components `X^i`.
#[derive(Clone)]
pub struct VectorField {
    eval: Arc<dyn Fn(&[Jet]) -> JVec + Send + Sync>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorField")
    }
}

impl VectorField {
    pub fn new(eval: impl Fn(&[Jet]) -> JVec + Send + Sync + 'static) -> Self {
        VectorField {
            eval: Arc::new(eval),
        }
    }

    /// Field with constant components.
    pub fn constant(components: Vec<f64>) -> Self {
        VectorField::new(move |_| JVec::constant(&components))
    }

    pub fn eval(&self, x: &[Jet]) -> JVec {
        (self.eval)(x)
    }

    /// Components at a plain point.
    pub fn at(&self, x: &[f64]) -> Vec<f64> {
        let jets: Vec<Jet> = x.iter().map(|&v| Jet::constant(v)).collect();
        self.eval(&jets).values()
    }
}

/// A scalar field, written over jets like every other field.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField")
    }
}

impl ScalarField {
    pub fn new(eval: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        ScalarField {
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        (self.eval)(x)
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        let jets: Vec<Jet> = x.iter().map(|&v| Jet::constant(v)).collect();
        self.eval(&jets).value()
    }
}

/// Metric with exact first and second partials at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    /// `dg[k][(i, j)] = ∂_k g_ij`
    pub dg: Vec<DMatrix<f64>>,
    /// `d2g[l][k][(i, j)] = ∂_l ∂_k g_ij`
    pub d2g: Vec<Vec<DMatrix<f64>>>,
    pub g_inv: DMatrix<f64>,
    pub sqrt_det: f64,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }
}

/// Christoffel symbols, `gamma[k][(i, j)] = Γ^k_{ij}`.
#[derive(Clone, Debug)]
pub struct ConnectionCoeffs {
    pub gamma: Vec<DMatrix<f64>>,
}

impl ConnectionCoeffs {
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][(i, j)]
    }
}

/// Fully covariant curvature tensor `R_{ijkl}`.
#[derive(Clone, Debug)]
pub struct RiemannTensor {
    dim: usize,
    data: Vec<f64>,
}

impl RiemannTensor {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.data[((i * n + j) * n + k) * n + l]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R(a, b, c, d)` for plain component vectors.
    pub fn eval(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if c[k] == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += self.get(i, j, k, l) * a[i] * b[j] * c[k] * d[l];
                    }
                }
            }
        }
        acc
    }
}

/// Jet-level geometry at one point: coordinates, metric, inverse metric,
/// volume density and (for order ≥ 1) the Christoffel symbols.
///
/// All composite-field calculus in the crate runs through this type.
#[derive(Clone)]
pub struct LocalGeometry {
    dim: usize,
    point: Vec<f64>,
    x: Vec<Jet>,
    g: JMat,
    g_inv: JMat,
    sqrt_det: Jet,
    // gamma[k] holds Γ^k_{ij}
    gamma: Option<Vec<JMat>>,
}

impl fmt::Debug for LocalGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalGeometry")
            .field("point", &self.point)
            .finish()
    }
}

impl LocalGeometry {
    pub fn new(chart: &Chart, x: &[f64], order: u8) -> Result<Self> {
        let order = order.min(MAX_ORDER);
        let point = chart.check_point(x)?;
        let n = chart.dim;
        let xj: Vec<Jet> = point
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if order == 0 {
                    Jet::constant(v)
                } else {
                    Jet::variable(v, k, n, order)
                }
            })
            .collect();
        let g = (chart.metric)(&xj);
        if g.dim() != n {
            return Err(GeometryError::Dimension {
                expected: n,
                got: g.dim(),
            });
        }
        validate_metric(&g.values(), &point)?;
        let (g_inv, det) = g.inverse_and_det().ok_or_else(|| GeometryError::Metric {
            point: point.clone(),
            reason: "singular metric".into(),
        })?;
        let sqrt_det = det.sqrt();
        let gamma = if order >= 1 {
            let dg: Vec<JMat> = (0..n).map(|k| g.d(k)).collect();
            let mut gamma = vec![JMat::zeros(n); n];
            // lowered symbols Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let mut low = vec![JMat::zeros(n); n];
            for l in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let v = (dg[i].at(j, l) + dg[j].at(i, l) - dg[l].at(i, j)) * 0.5;
                        low[l].set(i, j, v);
                        low[l].set(j, i, v);
                    }
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut acc = Jet::zero();
                        for l in 0..n {
                            acc += g_inv.at(k, l) * low[l].at(i, j);
                        }
                        gamma[k].set(i, j, acc);
                        gamma[k].set(j, i, acc);
                    }
                }
            }
            Some(gamma)
        } else {
            None
        };
        Ok(LocalGeometry {
            dim: n,
            point,
            x: xj,
            g,
            g_inv,
            sqrt_det,
            gamma,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The (wrapped) point this geometry was built at.
    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// Coordinate jets, the argument every field closure receives.
    pub fn coords(&self) -> &[Jet] {
        &self.x
    }

    pub fn metric(&self) -> &JMat {
        &self.g
    }

    pub fn metric_inv(&self) -> &JMat {
        &self.g_inv
    }

    pub fn sqrt_det(&self) -> Jet {
        self.sqrt_det
    }

    fn gamma_all(&self) -> &[JMat] {
        self.gamma
            .as_deref()
            .expect("connection requested from a zeroth-order LocalGeometry")
    }

    /// `Γ^k_{ij}` as a jet.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> Jet {
        self.gamma_all()[k].at(i, j)
    }

    pub fn vector(&self, field: &VectorField) -> JVec {
        field.eval(&self.x)
    }

    pub fn endo(&self, field: &EndoField) -> JMat {
        field.eval(&self.x)
    }

    pub fn scalar(&self, field: &ScalarField) -> Jet {
        field.eval(&self.x)
    }

    /// `⟨a, b⟩ = g_ij a^i b^j`.
    pub fn inner(&self, a: &JVec, b: &JVec) -> Jet {
        let n = self.dim;
        let mut acc = Jet::zero();
        for i in 0..n {
            let mut row = Jet::zero();
            for j in 0..n {
                row += self.g.at(i, j) * b[j];
            }
            acc += a[i] * row;
        }
        acc
    }

    /// `g`-norm of the value of a vector.
    pub fn norm_value(&self, a: &JVec) -> f64 {
        let v = a.values();
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.g.at(i, j).value() * v[i] * v[j];
            }
        }
        acc.max(0.0).sqrt()
    }

    /// Lowers an index: `a_i = g_ij a^j`.
    pub fn lower(&self, a: &JVec) -> JVec {
        self.g.apply(a)
    }

    /// Derivative of a scalar jet along a vector: `v(f) = v^k ∂_k f`.
    pub fn dir(&self, f: &Jet, v: &JVec) -> Jet {
        let mut acc = Jet::zero();
        for k in 0..self.dim {
            acc += v[k] * f.d(k);
        }
        acc
    }

    /// `∇_v w = (v^k ∂_k w^i + Γ^i_{kj} v^k w^j) ∂_i`.
    pub fn cov(&self, v: &JVec, w: &JVec) -> JVec {
        let n = self.dim;
        let gamma = self.gamma_all();
        let dw: Vec<JVec> = (0..n).map(|k| w.d(k)).collect();
        JVec::from_fn(n, |i| {
            let mut acc = Jet::zero();
            for k in 0..n {
                acc += v[k] * dw[k][i];
                let mut t = Jet::zero();
                for j in 0..n {
                    t += gamma[i].at(k, j) * w[j];
                }
                acc += v[k] * t;
            }
            acc
        })
    }

    /// Lie bracket `[v, w] = v(w) − w(v)`.
    pub fn bracket(&self, v: &JVec, w: &JVec) -> JVec {
        let n = self.dim;
        JVec::from_fn(n, |i| self.dir(&w[i], v) - self.dir(&v[i], w))
    }

    /// Metric adjoint `P* = g⁻¹ Pᵀ g`.
    pub fn adjoint(&self, p: &JMat) -> JMat {
        self.g_inv.matmul(&p.transpose()).matmul(&self.g)
    }

    /// `∇_{∂_k} S` for a (1,1) tensor field given by its component jets.
    pub fn cov_endo(&self, s: &JMat, k: usize) -> JMat {
        let n = self.dim;
        let gamma = self.gamma_all();
        let ds = s.d(k);
        JMat::from_fn(n, |i, j| {
            let mut acc = ds.at(i, j);
            for l in 0..n {
                acc += gamma[i].at(k, l) * s.at(l, j);
                acc -= gamma[l].at(k, j) * s.at(i, l);
            }
            acc
        })
    }

    /// `(∇X)^k_i = ∇_i X^k` as a jet matrix (row `k`, column `i`).
    pub fn cov_deriv(&self, x: &JVec) -> JMat {
        let n = self.dim;
        let mut m = JMat::zeros(n);
        for i in 0..n {
            let col = self.cov(&JVec::basis(n, i), x);
            for k in 0..n {
                m.set(k, i, col[k]);
            }
        }
        m
    }

    /// Divergence of a vector field, trace of its covariant derivative.
    pub fn div_trace(&self, x: &JVec) -> Jet {
        self.cov_deriv(x).trace()
    }

    /// Divergence of a vector field as `(1/√det g) ∂_i(√det g X^i)`.
    pub fn div_density(&self, x: &JVec) -> Jet {
        let mut acc = Jet::zero();
        for i in 0..self.dim {
            acc += (self.sqrt_det * x[i]).d(i);
        }
        acc / self.sqrt_det
    }

    /// Divergence of a vector field as `X^i_{,i} + ½ g^{ij} ∂_k g_ij X^k`.
    pub fn div_log_det(&self, x: &JVec) -> Jet {
        let n = self.dim;
        let mut acc = Jet::zero();
        for i in 0..n {
            acc += x[i].d(i);
        }
        for k in 0..n {
            let dg = self.g.d(k);
            let mut t = Jet::zero();
            for i in 0..n {
                for j in 0..n {
                    t += self.g_inv.at(i, j) * dg.at(i, j);
                }
            }
            acc += t * x[k] * 0.5;
        }
        acc
    }

    /// Divergence of a (1,1) tensor, `(div S)_j = ∇_i S^i_j`, via the
    /// covariant derivative.
    pub fn div_endo_trace(&self, s: &JMat) -> JVec {
        let n = self.dim;
        let mut out = JVec::zeros(n);
        for i in 0..n {
            let ds = self.cov_endo(s, i);
            for j in 0..n {
                out[j] += ds.at(i, j);
            }
        }
        out
    }

    /// `(div S)_j = (1/√det g) ∂_i(√det g S^i_j) − ½ S^{ik} ∂_j g_ik`.
    ///
    /// This coordinate form assumes `S^{ik} = S^i_l g^{lk}` is symmetric,
    /// i.e. `S` is self-adjoint with respect to `g`.
    pub fn div_endo_coordinate(&self, s: &JMat) -> JVec {
        let n = self.dim;
        let s_up = s.matmul(&self.g_inv);
        JVec::from_fn(n, |j| {
            let mut acc = Jet::zero();
            for i in 0..n {
                acc += (self.sqrt_det * s.at(i, j)).d(i);
            }
            acc = acc / self.sqrt_det;
            let dg = self.g.d(j);
            let mut t = Jet::zero();
            for i in 0..n {
                for k in 0..n {
                    t += s_up.at(i, k) * dg.at(i, k);
                }
            }
            acc - t * 0.5
        })
    }

    /// `⟨A, B⟩ = A^i_j B^k_l g_ik g^{jl}` for (1,1) tensors.
    pub fn inner_endo(&self, a: &JMat, b: &JMat) -> Jet {
        // tr(A* B) with A* = g⁻¹ Aᵀ g
        self.adjoint(a).matmul(b).trace()
    }

    /// `g`-orthonormal frame from Gram–Schmidt on the coordinate basis, in
    /// coordinate order. The frame vectors are smooth fields, so they can be
    /// differentiated like any other jet vector.
    pub fn frame(&self) -> Vec<JVec> {
        let n = self.dim;
        let mut frame: Vec<JVec> = Vec::with_capacity(n);
        for s in 0..n {
            let mut v = JVec::basis(n, s);
            for e in &frame {
                let c = self.inner(&v, e);
                v = v - e.scale(c);
            }
            let norm = self.inner(&v, &v).sqrt();
            frame.push(v.scale(norm.recip()));
        }
        frame
    }
}

fn validate_metric(g: &DMatrix<f64>, x: &[f64]) -> Result<()> {
    let n = g.nrows();
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (g[(i, j)] - g[(j, i)]).abs() > 1e-12 * scale {
                return Err(GeometryError::Metric {
                    point: x.to_vec(),
                    reason: format!("not symmetric in ({i}, {j})"),
                });
            }
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::Metric {
            point: x.to_vec(),
            reason: "non-finite component".into(),
        });
    }
    if g.clone().cholesky().is_none() {
        return Err(GeometryError::Metric {
            point: x.to_vec(),
            reason: "not positive definite".into(),
        });
    }
    Ok(())
}

/// Metric, its first and second partials, inverse and volume density at `x`.
pub fn metric_jet(chart: &Chart, x: &[f64]) -> Result<MetricJet> {
    let lg = chart.local(x, 2)?;
    let n = lg.dim();
    let g = lg.metric();
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|k| DMatrix::from_fn(n, n, |i, j| g.at(i, j).partial(k)))
        .collect();
    let d2g: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|k| DMatrix::from_fn(n, n, |i, j| g.at(i, j).second(l, k)))
                .collect()
        })
        .collect();
    Ok(MetricJet {
        g: g.values(),
        dg,
        d2g,
        g_inv: lg.metric_inv().values(),
        sqrt_det: lg.sqrt_det().value(),
    })
}

/// Levi-Civita connection coefficients from a metric jet.
pub fn christoffel(jet: &MetricJet) -> ConnectionCoeffs {
    let n = jet.dim();
    let gamma = (0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += jet.g_inv[(k, l)]
                        * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                }
                0.5 * acc
            })
        })
        .collect();
    ConnectionCoeffs { gamma }
}

/// `∂_m Γ^k_{ij}` from the second-order metric jet.
fn christoffel_derivative(jet: &MetricJet) -> Vec<Vec<DMatrix<f64>>> {
    let n = jet.dim();
    // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
    let dginv: Vec<DMatrix<f64>> = (0..n).map(|m| -(&jet.g_inv * &jet.dg[m] * &jet.g_inv)).collect();
    (0..n)
        .map(|m| {
            (0..n)
                .map(|k| {
                    DMatrix::from_fn(n, n, |i, j| {
                        let mut acc = 0.0;
                        for l in 0..n {
                            let low = jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)];
                            let dlow = jet.d2g[m][i][(j, l)] + jet.d2g[m][j][(i, l)]
                                - jet.d2g[m][l][(i, j)];
                            acc += dginv[m][(k, l)] * low + jet.g_inv[(k, l)] * dlow;
                        }
                        0.5 * acc
                    })
                })
                .collect()
        })
        .collect()
}

/// Curvature tensor `R_{ijkl} = ⟨R(∂_i,∂_j)∂_k, ∂_l⟩` at `x`.
pub fn riemann(chart: &Chart, x: &[f64]) -> Result<RiemannTensor> {
    let jet = metric_jet(chart, x)?;
    Ok(riemann_from_jet(&jet))
}

pub fn riemann_from_jet(jet: &MetricJet) -> RiemannTensor {
    let n = jet.dim();
    let gam = christoffel(jet);
    let dgam = christoffel_derivative(jet);
    // R^m_{ijk} = ∂_i Γ^m_{jk} − ∂_j Γ^m_{ik} + Γ^m_{ia} Γ^a_{jk} − Γ^m_{ja} Γ^a_{ik}
    let mut up = vec![0.0; n * n * n * n];
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = dgam[i][m][(j, k)] - dgam[j][m][(i, k)];
                    for a in 0..n {
                        v += gam.get(m, i, a) * gam.get(a, j, k) - gam.get(m, j, a) * gam.get(a, i, k);
                    }
                    up[((m * n + i) * n + j) * n + k] = v;
                }
            }
        }
    }
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for m in 0..n {
                        v += up[((m * n + i) * n + j) * n + k] * jet.g[(m, l)];
                    }
                    data[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    RiemannTensor { dim: n, data }
}

/// Ricci tensor `Ric_{jk} = R^i_{ijk}` (lower indices).
pub fn ricci(chart: &Chart, x: &[f64]) -> Result<DMatrix<f64>> {
    let jet = metric_jet(chart, x)?;
    Ok(ricci_from_jet(&jet))
}

fn ricci_from_jet(jet: &MetricJet) -> DMatrix<f64> {
    let n = jet.dim();
    let r = riemann_from_jet(jet);
    // R^i_{ijk} = g^{il} R_{ijkl}
    DMatrix::from_fn(n, n, |j, k| {
        let mut acc = 0.0;
        for i in 0..n {
            for l in 0..n {
                acc += jet.g_inv[(i, l)] * r.get(i, j, k, l);
            }
        }
        acc
    })
}

/// Covariant derivative of a vector field, entry `(k, i) = ∇_i X^k`.
pub fn cov_deriv_vector(chart: &Chart, field: &VectorField, x: &[f64]) -> Result<DMatrix<f64>> {
    let lg = chart.local(x, 1)?;
    let v = lg.vector(field);
    Ok(lg.cov_deriv(&v).values())
}

/// The classical divergence of a vector field, evaluated three ways.
#[derive(Clone, Copy, Debug)]
pub struct DivergenceRoutes {
    /// trace of the covariant derivative
    pub trace: f64,
    /// `X^i_{,i} + ½ g^{ij} g_{ij,k} X^k`
    pub log_det: f64,
    /// `(1/√det g) ∂_i(√det g X^i)`
    pub density: f64,
}

pub fn div_vector_routes(chart: &Chart, field: &VectorField, x: &[f64]) -> Result<DivergenceRoutes> {
    let lg = chart.local(x, 1)?;
    let v = lg.vector(field);
    Ok(DivergenceRoutes {
        trace: lg.div_trace(&v).value(),
        log_det: lg.div_log_det(&v).value(),
        density: lg.div_density(&v).value(),
    })
}

/// Divergence of a vector field (the trace route).
pub fn div_vector(chart: &Chart, field: &VectorField, x: &[f64]) -> Result<f64> {
    Ok(div_vector_routes(chart, field, x)?.trace)
}

/// Divergence of a (1,1) tensor by the covariant-derivative trace and by the
/// coordinate formula with the `√det g` term.
#[derive(Clone, Debug)]
pub struct EndoDivergence {
    pub trace: DVector<f64>,
    pub coordinate: DVector<f64>,
}

pub fn div_endo_routes(chart: &Chart, s: &EndoField, x: &[f64]) -> Result<EndoDivergence> {
    let lg = chart.local(x, 1)?;
    let m = lg.endo(s);
    Ok(EndoDivergence {
        trace: lg.div_endo_trace(&m).to_dvector(),
        coordinate: lg.div_endo_coordinate(&m).to_dvector(),
    })
}

/// `(div S)_j = ∇_i S^i_j` as a covector.
pub fn div_endo(chart: &Chart, s: &EndoField, x: &[f64]) -> Result<DVector<f64>> {
    Ok(div_endo_routes(chart, s, x)?.trace)
}

/// Einstein tensor `Ric − ½ Scal g` raised to a (1,1) tensor.
pub fn einstein_tensor(chart: &Chart, x: &[f64]) -> Result<DMatrix<f64>> {
    if chart.dim() < 3 {
        return Err(GeometryError::Dimension {
            expected: 3,
            got: chart.dim(),
        });
    }
    let jet = metric_jet(chart, x)?;
    let ric = ricci_from_jet(&jet);
    let scal = (&jet.g_inv * &ric).trace();
    let e_low = ric - &jet.g * (0.5 * scal);
    Ok(&jet.g_inv * e_low)
}

/// Scalar curvature `g^{jk} Ric_{jk}`.
pub fn scalar_curvature(chart: &Chart, x: &[f64]) -> Result<f64> {
    let jet = metric_jet(chart, x)?;
    Ok((&jet.g_inv * ricci_from_jet(&jet)).trace())
}
