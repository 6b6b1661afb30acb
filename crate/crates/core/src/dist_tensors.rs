//! Distribution-level tensors of a pair `(P₁, P₂)` and the pointwise
//! identities relating them.
//!
//! Slot order follows the usual conventions: `B₁` takes `(Y, X)` and `B₂`
//! takes `(X, Y)`, and the four-argument maps take `(Y, X₁, X₂, Z)`.
//!
//! Arguments are vector fields evaluated as jets, so a covariant derivative of
//! a composite such as `x ↦ P₁*(x) Y(x)` differentiates every factor.

use nalgebra::{DMatrix, DVector};

use crate::chart_geometry::{Chart, LocalGeometry, ScalarField, VectorField};
use crate::endo_fields::{EndoField, EndoPair, PairAt};
use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::linalg::{frobenius, JMat, JVec};

/// The six structural tensors at one point.
#[derive(Clone, Debug)]
pub struct BTensors {
    pub b1: DVector<f64>,
    pub b2: DVector<f64>,
    pub b1_hat: DVector<f64>,
    pub b2_hat: DVector<f64>,
    pub b1_check: DVector<f64>,
    pub b2_check: DVector<f64>,
}

/// `𝒯₁, 𝒯₂, S₁, S₂, R^P` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TsrValues {
    pub t1: f64,
    pub t2: f64,
    pub s1: f64,
    pub s2: f64,
    pub rp: f64,
}

impl TsrValues {
    pub fn sum(&self) -> f64 {
        self.s1 + self.t1 + self.s2 + self.t2 + self.rp
    }

    pub fn abs_sum(&self) -> f64 {
        self.s1.abs() + self.t1.abs() + self.s2.abs() + self.t2.abs() + self.rp.abs()
    }
}

impl<'a> PairAt<'a> {
    /// `B₁(Y,X) = P₁*∇_{P₁X}P₂Y`
    pub fn b1(&self, y: &JVec, x: &JVec) -> JVec {
        self.p1s.apply(&self.cov(&self.p1.apply(x), &self.p2.apply(y)))
    }

    /// `B₂(X,Y) = P₂*∇_{P₂Y}P₁X`
    pub fn b2(&self, x: &JVec, y: &JVec) -> JVec {
        self.p2s.apply(&self.cov(&self.p2.apply(y), &self.p1.apply(x)))
    }

    /// `B̂₁(Y,X) = P₁∇_{P₁*X}P₂*Y`
    pub fn b1_hat(&self, y: &JVec, x: &JVec) -> JVec {
        self.p1.apply(&self.cov(&self.p1s.apply(x), &self.p2s.apply(y)))
    }

    /// `B̂₂(X,Y) = P₂∇_{P₂*Y}P₁*X`
    pub fn b2_hat(&self, x: &JVec, y: &JVec) -> JVec {
        self.p2.apply(&self.cov(&self.p2s.apply(y), &self.p1s.apply(x)))
    }

    /// `B̌₁(Y,X) = P₁∇_{P₁X}P₂*Y`
    pub fn b1_check(&self, y: &JVec, x: &JVec) -> JVec {
        self.p1.apply(&self.cov(&self.p1.apply(x), &self.p2s.apply(y)))
    }

    /// `B̌₂(X,Y) = P₂∇_{P₂Y}P₁*X`
    pub fn b2_check(&self, x: &JVec, y: &JVec) -> JVec {
        self.p2.apply(&self.cov(&self.p2.apply(y), &self.p1s.apply(x)))
    }

    /// The four vectors that vanish for allowed pairs, in the order
    /// `P₂B₂(X,Y) − B̂₂(X,P₂Y)`, `P₂B₂(X,Y) − B̌₂(P₁X,Y)`,
    /// `P₁B₁(Y,X) − B̂₁(Y,P₁X)`, `P₁B₁(Y,X) − B̌₁(P₂Y,X)`, with the summed
    /// size of the terms.
    pub fn lemma1(&self, x: &JVec, y: &JVec) -> ([JVec; 4], f64) {
        let lg = self.lg;
        let pb2 = self.p2.apply(&self.b2(x, y));
        let pb1 = self.p1.apply(&self.b1(y, x));
        let t = [
            self.b2_hat(x, &self.p2.apply(y)),
            self.b2_check(&self.p1.apply(x), y),
            self.b1_hat(y, &self.p1.apply(x)),
            self.b1_check(&self.p2.apply(y), x),
        ];
        let scale = 2.0 * (lg.norm_value(&pb2) + lg.norm_value(&pb1))
            + t.iter().map(|v| lg.norm_value(v)).sum::<f64>();
        ([pb2 - t[0], pb2 - t[1], pb1 - t[2], pb1 - t[3]], scale)
    }

    /// `𝒯₁(Y,X₁,X₂,Z)`
    pub fn t1(&self, y: &JVec, x1: &JVec, x2: &JVec, z: &JVec) -> Jet {
        let p1x1 = self.p1.apply(x1);
        let a = self.p2.apply(&self.cov(&p1x1, &self.b2(x2, y)));
        let w = self.cov(&p1x1, &self.p1.apply(x2));
        let b = self.b2_check(&w, y);
        let v = self.cov(&p1x1, &self.p2.apply(y));
        let c = self.b2_hat(x2, &v);
        self.inner(&(a - b - c), z)
    }

    /// `𝒯₂(Y,X₁,X₂,Z)`
    pub fn t2(&self, y: &JVec, x1: &JVec, x2: &JVec, z: &JVec) -> Jet {
        let p2y = self.p2.apply(y);
        let a = self.p1.apply(&self.cov(&p2y, &self.b1(z, x1)));
        let w = self.cov(&p2y, &self.p2.apply(z));
        let b = self.b1_check(&w, x1);
        let v = self.cov(&p2y, &self.p1.apply(x1));
        let c = self.b1_hat(z, &v);
        self.inner(&(a - b - c), x2)
    }

    /// `S₁(Y,X₁,X₂,Z) = ⟨B̂₂(X₂, ∇_{P₂Y}P₁X₁), Z⟩`
    pub fn s1(&self, y: &JVec, x1: &JVec, x2: &JVec, z: &JVec) -> Jet {
        let v = self.cov(&self.p2.apply(y), &self.p1.apply(x1));
        self.inner(&self.b2_hat(x2, &v), z)
    }

    /// `S₂(Y,X₁,X₂,Z) = ⟨B̂₁(Z, ∇_{P₁X₁}P₂Y), X₂⟩`
    pub fn s2(&self, y: &JVec, x1: &JVec, x2: &JVec, z: &JVec) -> Jet {
        let v = self.cov(&self.p1.apply(x1), &self.p2.apply(y));
        self.inner(&self.b1_hat(z, &v), x2)
    }

    /// `R^P(Y,X₁,X₂,Z)`
    pub fn rp(&self, y: &JVec, x1: &JVec, x2: &JVec, z: &JVec) -> Jet {
        let p2y = self.p2.apply(y);
        let p1x1 = self.p1.apply(x1);
        let p1sx2 = self.p1s.apply(x2);
        let p1x2 = self.p1.apply(x2);
        let a = self.p2s.apply(&self.cov(&p2y, &self.p2.apply(&self.cov(&p1x1, &p1sx2))));
        let b = self.p2.apply(&self.cov(&p2y, &self.p1s.apply(&self.cov(&p1x1, &p1x2))));
        let c = self.p2s.apply(&self.cov(&p1x1, &self.p1.apply(&self.cov(&p2y, &p1sx2))));
        let d = self.p2.apply(&self.cov(&p1x1, &self.p2s.apply(&self.cov(&p2y, &p1x2))));
        let br = self.total_adjoint().apply(&self.lg.bracket(&p2y, &p1x1));
        let e = self.p2.apply(&self.cov(&br, &p1sx2));
        self.inner(&(a + b - c - d - e), z)
    }

    pub fn tsr(&self, y: &JVec, x1: &JVec, x2: &JVec, z: &JVec) -> TsrValues {
        TsrValues {
            t1: self.t1(y, x1, x2, z).value(),
            t2: self.t2(y, x1, x2, z).value(),
            s1: self.s1(y, x1, x2, z).value(),
            s2: self.s2(y, x1, x2, z).value(),
            rp: self.rp(y, x1, x2, z).value(),
        }
    }
}

pub fn b_tensors(pair: &EndoPair, chart: &Chart, x: &[f64], xf: &VectorField, yf: &VectorField) -> Result<BTensors> {
    let lg = chart.local(x, 1)?;
    let pa = PairAt::new(&lg, pair);
    let (xv, yv) = (lg.vector(xf), lg.vector(yf));
    Ok(BTensors {
        b1: pa.b1(&yv, &xv).to_dvector(),
        b2: pa.b2(&xv, &yv).to_dvector(),
        b1_hat: pa.b1_hat(&yv, &xv).to_dvector(),
        b2_hat: pa.b2_hat(&xv, &yv).to_dvector(),
        b1_check: pa.b1_check(&yv, &xv).to_dvector(),
        b2_check: pa.b2_check(&xv, &yv).to_dvector(),
    })
}

/// Residual vectors of the structural-tensor identities that hold for
/// allowed pairs, with their g-norms and the size of the terms.
#[derive(Clone, Debug)]
pub struct Lemma1Residuals {
    pub vectors: [DVector<f64>; 4],
    pub norms: [f64; 4],
    pub scale: f64,
}

impl Lemma1Residuals {
    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }
}

pub fn lemma1_residual(pair: &EndoPair, chart: &Chart, x: &[f64], xf: &VectorField, yf: &VectorField) -> Result<Lemma1Residuals> {
    let lg = chart.local(x, 1)?;
    let pa = PairAt::new(&lg, pair);
    let (r, scale) = pa.lemma1(&lg.vector(xf), &lg.vector(yf));
    Ok(Lemma1Residuals {
        vectors: [0, 1, 2, 3].map(|k| r[k].to_dvector()),
        norms: [0, 1, 2, 3].map(|k| lg.norm_value(&r[k])),
        scale,
    })
}

/// The four fields `Y, X₁, X₂, Z` of a curvature-type evaluation.
#[derive(Clone, Debug)]
pub struct FourFields {
    pub y: VectorField,
    pub x1: VectorField,
    pub x2: VectorField,
    pub z: VectorField,
}

impl FourFields {
    fn eval(&self, lg: &LocalGeometry) -> [JVec; 4] {
        [lg.vector(&self.y), lg.vector(&self.x1), lg.vector(&self.x2), lg.vector(&self.z)]
    }
}

pub fn tsr_tensors(pair: &EndoPair, chart: &Chart, x: &[f64], f: &FourFields) -> Result<TsrValues> {
    let lg = chart.local(x, 2)?;
    let pa = PairAt::new(&lg, pair);
    let [y, x1, x2, z] = f.eval(&lg);
    Ok(pa.tsr(&y, &x1, &x2, &z))
}

/// `S₁ + 𝒯₁ + S₂ + 𝒯₂ + R^P` and the summed magnitude of the five terms.
pub fn codazzi_residual(pair: &EndoPair, chart: &Chart, x: &[f64], f: &FourFields) -> Result<(f64, f64)> {
    let v = tsr_tensors(pair, chart, x, f)?;
    Ok((v.sum(), v.abs_sum()))
}

/// `R^P(Y,X₁,X₂,Z)` next to the classical `R(P₂Y,P₁X₁,P₁X₂,P₂Z)`.
pub fn rp_versus_riemann(pair: &EndoPair, chart: &Chart, x: &[f64], f: &FourFields) -> Result<(f64, f64)> {
    let lg = chart.local(x, 2)?;
    let pa = PairAt::new(&lg, pair);
    let [y, x1, x2, z] = f.eval(&lg);
    let rp = pa.rp(&y, &x1, &x2, &z).value();
    let r = crate::chart_geometry::riemann(chart, x)?;
    let classical = r.eval(
        &pa.p2.apply(&y).values(),
        &pa.p1.apply(&x1).values(),
        &pa.p1.apply(&x2).values(),
        &pa.p2.apply(&z).values(),
    );
    Ok((rp, classical))
}

/// A g-orthonormal frame at a point, as jet vectors.
#[derive(Clone, Debug)]
pub struct FrameData {
    pub frame: Vec<JVec>,
}

impl FrameData {
    pub fn gram_schmidt(lg: &LocalGeometry) -> Self {
        FrameData { frame: lg.frame() }
    }

    /// `e'_s = Σ_t q_{ts} e_t` for an orthogonal matrix `q`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Self {
        let n = self.frame.len();
        let frame = (0..n)
            .map(|s| {
                let mut v = JVec::zeros(self.frame[0].dim());
                for t in 0..n {
                    v = v + self.frame[t] * q[(t, s)];
                }
                v
            })
            .collect();
        FrameData { frame }
    }

    /// Largest deviation of `⟨e_s, e_t⟩` from `δ_st`.
    pub fn orthonormality_defect(&self, lg: &LocalGeometry) -> f64 {
        let n = self.frame.len();
        let mut worst = 0.0f64;
        for s in 0..n {
            for t in 0..n {
                let d = if s == t { 1.0 } else { 0.0 };
                worst = worst.max((lg.inner(&self.frame[s], &self.frame[t]).value() - d).abs());
            }
        }
        worst
    }
}

/// Squared P-norms of the invariants.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PNorms {
    pub h1: f64,
    pub h2: f64,
    pub t1: f64,
    pub t2: f64,
    pub mean1: f64,
    pub mean2: f64,
}

/// Second fundamental forms, integrability tensors and mean curvature
/// vectors of both distributions, on frame slots.
#[derive(Clone, Debug)]
pub struct DistInvariants {
    /// `h1[s][t] = h₁(e_s, e_t)`
    pub h1: Vec<Vec<DVector<f64>>>,
    pub h2: Vec<Vec<DVector<f64>>>,
    pub t1: Vec<Vec<DVector<f64>>>,
    pub t2: Vec<Vec<DVector<f64>>>,
    pub mean1: DVector<f64>,
    pub mean2: DVector<f64>,
    pub norms: PNorms,
    pub smix: f64,
}

impl DistInvariants {
    /// Right-hand side of the pointwise Walczak-type identity.
    pub fn walczak_rhs(&self) -> f64 {
        let n = &self.norms;
        self.smix + n.h1 + n.h2 - n.t1 - n.t2 - n.mean1 - n.mean2
    }

    /// Sum of magnitudes of the right-hand side terms.
    pub fn walczak_scale(&self) -> f64 {
        let n = &self.norms;
        self.smix.abs() + n.h1.abs() + n.h2.abs() + n.t1.abs() + n.t2.abs() + n.mean1.abs() + n.mean2.abs()
    }
}

/// `D[s][t] = ∇_{P e_s} P e_t` for each frame pair, with `None` where either
/// slot vanishes identically.
fn frame_derivatives(lg: &LocalGeometry, pe: &[JVec]) -> Vec<Vec<Option<JVec>>> {
    pe.iter()
        .map(|a| {
            pe.iter()
                .map(|b| {
                    if a.is_exact_zero() || b.is_exact_zero() {
                        None
                    } else {
                        Some(lg.cov(a, b))
                    }
                })
                .collect()
        })
        .collect()
}

/// Pieces shared by the invariants of one distribution, with `(P, Q)` the
/// projecting endomorphism and its partner.
struct Side {
    h: Vec<Vec<JVec>>,
    h_pre: Vec<Vec<JVec>>,
    t: Vec<Vec<JVec>>,
    t_pre: Vec<Vec<JVec>>,
    mean: JVec,
    mean_pre: JVec,
}

fn side(lg: &LocalGeometry, own: &[JVec], other: &JMat) -> Side {
    let n = lg.dim();
    let d = frame_derivatives(lg, own);
    let zero = JVec::zeros(n);
    let get = |s: usize, t: usize| d[s][t].unwrap_or(zero);
    let mut h = vec![vec![zero; n]; n];
    let mut h_pre = vec![vec![zero; n]; n];
    let mut t = vec![vec![zero; n]; n];
    let mut t_pre = vec![vec![zero; n]; n];
    for s in 0..n {
        for u in 0..n {
            let a = get(s, u);
            let b = get(u, s);
            h_pre[s][u] = (a + b) * 0.5;
            t_pre[s][u] = (a - b) * 0.5;
            h[s][u] = other.apply(&h_pre[s][u]);
            t[s][u] = other.apply(&t_pre[s][u]);
        }
    }
    let mut mean_pre = zero;
    for s in 0..n {
        mean_pre = mean_pre + get(s, s);
    }
    Side {
        h,
        h_pre,
        t,
        t_pre,
        mean: other.apply(&mean_pre),
        mean_pre,
    }
}

/// Jet-valued invariants; the mean curvature vectors keep one derivative
/// when the geometry was built at order 2.
pub(crate) struct InvariantJets {
    pub mean1: JVec,
    pub mean2: JVec,
    pub inv: DistInvariants,
}

pub(crate) fn invariants_with_frame(pa: &PairAt<'_>, frame: &FrameData, with_smix: bool) -> InvariantJets {
    let lg = pa.lg;
    let n = lg.dim();
    let e = &frame.frame;
    let p1e: Vec<JVec> = e.iter().map(|v| pa.p1.apply(v)).collect();
    let p2e: Vec<JVec> = e.iter().map(|v| pa.p2.apply(v)).collect();
    let one = side(lg, &p1e, &pa.p2);
    let two = side(lg, &p2e, &pa.p1);
    let sq = |a: &[Vec<JVec>], b: &[Vec<JVec>]| {
        let mut acc = 0.0;
        for s in 0..n {
            for t in 0..n {
                acc += lg.inner(&a[s][t], &b[s][t]).value();
            }
        }
        acc
    };
    let norms = PNorms {
        h1: sq(&one.h, &one.h_pre),
        h2: sq(&two.h, &two.h_pre),
        t1: sq(&one.t, &one.t_pre),
        t2: sq(&two.t, &two.t_pre),
        mean1: lg.inner(&one.mean, &one.mean_pre).value(),
        mean2: lg.inner(&two.mean, &two.mean_pre).value(),
    };
    let smix = if with_smix { smix_with_frame(pa, frame) } else { f64::NAN };
    let vals = |m: &[Vec<JVec>]| -> Vec<Vec<DVector<f64>>> {
        m.iter().map(|row| row.iter().map(JVec::to_dvector).collect()).collect()
    };
    InvariantJets {
        mean1: one.mean,
        mean2: two.mean,
        inv: DistInvariants {
            h1: vals(&one.h),
            h2: vals(&two.h),
            t1: vals(&one.t),
            t2: vals(&two.t),
            mean1: one.mean.to_dvector(),
            mean2: two.mean.to_dvector(),
            norms,
            smix,
        },
    }
}

/// `Σ_{s,t} R^P(e_t, e_s, e_s, e_t)`.
pub(crate) fn smix_with_frame(pa: &PairAt<'_>, frame: &FrameData) -> f64 {
    let e = &frame.frame;
    let mut terms = Vec::new();
    for s in e {
        if pa.p1.apply(s).is_exact_zero() {
            continue;
        }
        for t in e {
            if pa.p2.apply(t).is_exact_zero() {
                continue;
            }
            terms.push(pa.rp(t, s, s, t).value());
        }
    }
    crate::sum::pairwise_sum(&terms)
}

pub fn dist_invariants(pair: &EndoPair, chart: &Chart, x: &[f64]) -> Result<DistInvariants> {
    let lg = chart.local(x, 2)?;
    let pa = PairAt::new(&lg, pair);
    let frame = FrameData::gram_schmidt(&lg);
    Ok(invariants_with_frame(&pa, &frame, true).inv)
}

/// Invariants computed on the Gram–Schmidt frame rotated by `q`.
pub fn dist_invariants_rotated(pair: &EndoPair, chart: &Chart, x: &[f64], q: &DMatrix<f64>) -> Result<DistInvariants> {
    let lg = chart.local(x, 2)?;
    let pa = PairAt::new(&lg, pair);
    let frame = FrameData::gram_schmidt(&lg).rotated(q);
    Ok(invariants_with_frame(&pa, &frame, true).inv)
}

/// `‖v‖²_P = ⟨P v', v'⟩` with `v'` the least-squares preimage of `v` under
/// `P`, using plain matrices and the metric `g`.
pub fn p_norm_sq(p: &DMatrix<f64>, g: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let pre = p.clone().pseudo_inverse(1e-12).expect("SVD converges") * v;
    (p * &pre).dot(&(g * &pre))
}

/// `div_P X = trace(Y ↦ P*∇_{PY}X)`, summed over the coordinate basis.
pub fn div_p_trace(lg: &LocalGeometry, p: &JMat, x: &JVec) -> Jet {
    let n = lg.dim();
    let ps = lg.adjoint(p);
    let mut acc = Jet::zero();
    for i in 0..n {
        let dir = p.apply(&JVec::basis(n, i));
        if dir.is_exact_zero() {
            continue;
        }
        let v = ps.apply(&lg.cov(&dir, x));
        acc += v[i];
    }
    acc
}

/// `div_P X = (PP*)^i_j X^j_{,i} + ½ (PP*)^{ij} g_{ij,k} X^k`.
pub fn div_p_coordinate(lg: &LocalGeometry, p: &JMat, x: &JVec) -> Jet {
    let n = lg.dim();
    let s = p.matmul(&lg.adjoint(p));
    let s_up = s.matmul(lg.metric_inv());
    let mut acc = Jet::zero();
    for i in 0..n {
        let dx = x.d(i);
        for j in 0..n {
            acc += s.at(i, j) * dx[j];
        }
    }
    for k in 0..n {
        let dg = lg.metric().d(k);
        let mut t = Jet::zero();
        for i in 0..n {
            for j in 0..n {
                t += s_up.at(i, j) * dg.at(i, j);
            }
        }
        acc += t * x[k] * 0.5;
    }
    acc
}

/// `div_P X` by the trace definition and by the coordinate formula.
#[derive(Clone, Copy, Debug)]
pub struct DivP {
    pub trace: f64,
    pub coordinate: f64,
}

pub fn div_p(p: &EndoField, chart: &Chart, xf: &VectorField, x: &[f64]) -> Result<DivP> {
    let lg = chart.local(x, 1)?;
    let pm = lg.endo(p);
    let xv = lg.vector(xf);
    Ok(DivP {
        trace: div_p_trace(&lg, &pm, &xv).value(),
        coordinate: div_p_coordinate(&lg, &pm, &xv).value(),
    })
}

/// Residuals of the three equivalent forms of the `P`-divergence when
/// `div(PP*) = 0`.
#[derive(Clone, Copy, Debug)]
pub struct Prop3Residuals {
    /// g-norm of the covector `div(PP*)`
    pub div_pp_star: f64,
    /// `|div_P X − div(PP*X)|`
    pub first: f64,
    /// `|div_P X − ⟨PP*, ∇X⟩|`
    pub second: f64,
    /// `|div_P(fX) − f·div(PP*X) − (PP*X)(f)|`
    pub leibniz: f64,
    /// `⟨X, div(PP*)⟩`
    pub x_div_pp_star: f64,
    /// magnitudes of the terms, for normalization
    pub scale: f64,
}

pub fn prop3_residuals(p: &EndoField, chart: &Chart, xf: &VectorField, f: &ScalarField, x: &[f64]) -> Result<Prop3Residuals> {
    let lg = chart.local(x, 1)?;
    let pm = lg.endo(p);
    let s = pm.matmul(&lg.adjoint(&pm));
    let xv = lg.vector(xf);
    let fj = lg.scalar(f);

    let d_s = lg.div_endo_trace(&s);
    let d_s_up = lg.metric_inv().apply(&d_s);
    let div_pp_star = lg.inner(&d_s_up, &d_s_up).value().max(0.0).sqrt();
    let x_div = d_s.dot(&xv).value();

    let dpx = div_p_trace(&lg, &pm, &xv).value();
    let sx = s.apply(&xv);
    let div_sx = lg.div_density(&sx).value();
    let inner = lg.inner_endo(&s, &lg.cov_deriv(&xv)).value();

    let fx = xv.scale(fj);
    let lhs = div_p_trace(&lg, &pm, &fx).value();
    let fv = fj.value();
    let sx_f = lg.dir(&fj, &sx).value();
    let leibniz = lhs - fv * div_sx - sx_f;

    Ok(Prop3Residuals {
        div_pp_star,
        first: (dpx - div_sx).abs(),
        second: (dpx - inner).abs(),
        leibniz: leibniz.abs(),
        x_div_pp_star: x_div,
        scale: dpx.abs() + div_sx.abs() + inner.abs() + lhs.abs() + (fv * div_sx).abs() + sx_f.abs(),
    })
}

/// Both sides of each frame-trace identity.
#[derive(Clone, Copy, Debug, Default)]
pub struct TraceSides {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl TraceSides {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn normalized(&self) -> f64 {
        self.residual() / (1.0 + self.scale)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TraceLemmaResiduals {
    pub lem1a: TraceSides,
    pub lem2a: TraceSides,
    pub lem3a: TraceSides,
    pub lem4a: TraceSides,
    /// the helper identity, whose right side is zero
    pub lem2: TraceSides,
}

impl TraceLemmaResiduals {
    pub fn all(&self) -> [TraceSides; 5] {
        [self.lem1a, self.lem2a, self.lem3a, self.lem4a, self.lem2]
    }

    pub fn max_normalized(&self) -> f64 {
        self.all().iter().map(TraceSides::normalized).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.all().iter().map(TraceSides::residual).fold(0.0, f64::max)
    }
}

struct Acc {
    terms: Vec<f64>,
    scale: f64,
}

impl Acc {
    fn new() -> Self {
        Acc {
            terms: Vec::new(),
            scale: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        self.terms.push(v);
        self.scale += v.abs();
    }

    fn total(&self) -> f64 {
        crate::sum::pairwise_sum(&self.terms)
    }
}

fn sides(lhs: &Acc, rhs: &Acc) -> TraceSides {
    TraceSides {
        lhs: lhs.total(),
        rhs: rhs.total(),
        scale: lhs.scale + rhs.scale,
    }
}

pub(crate) fn trace_lemmas_with_frame(pa: &PairAt<'_>, frame: &FrameData) -> TraceLemmaResiduals {
    let lg = pa.lg;
    let e = &frame.frame;
    let n = e.len();
    let zero = JVec::zeros(lg.dim());
    let p1e: Vec<JVec> = e.iter().map(|v| pa.p1.apply(v)).collect();
    let p2e: Vec<JVec> = e.iter().map(|v| pa.p2.apply(v)).collect();
    let live1: Vec<bool> = p1e.iter().map(|v| !v.is_exact_zero()).collect();
    let live2: Vec<bool> = p2e.iter().map(|v| !v.is_exact_zero()).collect();
    let cov_or_zero = |a: &JVec, b: &JVec| {
        if a.is_exact_zero() || b.is_exact_zero() {
            zero
        } else {
            lg.cov(a, b)
        }
    };
    // ∇_{P₁e_s}P₁e_t, ∇_{P₂e_s}P₂e_t, ∇_{P₁e_s}P₂e_t, ∇_{P₂e_t}P₁e_s
    let d11: Vec<Vec<JVec>> = (0..n).map(|s| (0..n).map(|t| cov_or_zero(&p1e[s], &p1e[t])).collect()).collect();
    let d22: Vec<Vec<JVec>> = (0..n).map(|s| (0..n).map(|t| cov_or_zero(&p2e[s], &p2e[t])).collect()).collect();
    let d12: Vec<Vec<JVec>> = (0..n).map(|s| (0..n).map(|t| cov_or_zero(&p1e[s], &p2e[t])).collect()).collect();
    let d21: Vec<Vec<JVec>> = (0..n).map(|t| (0..n).map(|s| cov_or_zero(&p2e[t], &p1e[s])).collect()).collect();

    let mut l1 = [Acc::new(), Acc::new()];
    let mut l2 = [Acc::new(), Acc::new()];
    let mut l3 = [Acc::new(), Acc::new()];
    let mut l4 = [Acc::new(), Acc::new()];
    let mut h = Acc::new();
    for s in 0..n {
        for t in 0..n {
            let (es, et) = (&e[s], &e[t]);
            if live1[s] && live2[t] {
                l1[0].push(pa.t1(et, es, es, et).value());
                l2[0].push(pa.t2(et, es, es, et).value());
                l3[0].push(pa.s2(et, es, es, et).value());
                l4[0].push(pa.s1(et, es, es, et).value());
            }
            // right-hand sides
            if live1[s] && live2[t] {
                let a = pa.p1.apply(&d22[t][t]);
                l1[1].push(lg.inner(&d11[s][s], &a).value());
                let f = lg.inner(&a, &p1e[s]);
                l1[1].push(-lg.dir(&f, &p1e[s]).value());

                let f = lg.inner(&d12[s][t], &p1e[s]);
                l2[1].push(lg.dir(&f, &p2e[t]).value());
                l2[1].push(lg.inner(&d22[t][t], &pa.p2.apply(&d11[s][s])).value());
            }
            if live1[s] && live1[t] {
                l3[1].push(lg.inner(&pa.p2.apply(&d11[s][t]), &d11[t][s]).value());
            }
            if live2[s] && live2[t] {
                l4[1].push(lg.inner(&pa.p1.apply(&d22[s][t]), &d22[t][s]).value());
            }
            // Σ ⟨P₁∇_{P₂e_s}P₂e_t, ∇_{P₂e_t}P₂e_s⟩ + ⟨∇_{P₂∇_{P₂e_t}P₁e_s}P₂e_t, P₁e_s⟩
            if live2[s] && live2[t] {
                h.push(lg.inner(&pa.p1.apply(&d22[s][t]), &d22[t][s]).value());
            }
            if live2[t] && live1[s] {
                let dir = pa.p2.apply(&d21[t][s]);
                h.push(lg.inner(&cov_or_zero(&dir, &p2e[t]), &p1e[s]).value());
            }
        }
    }
    TraceLemmaResiduals {
        lem1a: sides(&l1[0], &l1[1]),
        lem2a: sides(&l2[0], &l2[1]),
        lem3a: sides(&l3[0], &l3[1]),
        lem4a: sides(&l4[0], &l4[1]),
        lem2: TraceSides {
            lhs: h.total(),
            rhs: 0.0,
            scale: h.scale,
        },
    }
}

pub fn trace_lemma_residuals(pair: &EndoPair, chart: &Chart, x: &[f64]) -> Result<TraceLemmaResiduals> {
    let lg = chart.local(x, 2)?;
    let pa = PairAt::new(&lg, pair);
    let frame = FrameData::gram_schmidt(&lg);
    Ok(trace_lemmas_with_frame(&pa, &frame))
}

/// Left side of the Walczak-type identity, right side, and the magnitude of
/// the terms.
#[derive(Clone, Copy, Debug)]
pub struct WalczakSides {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl WalczakSides {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn normalized(&self) -> f64 {
        self.residual() / (1.0 + self.scale)
    }
}

/// `H₁ + H₂` at a plain point.
pub fn mean_curvature_sum(pair: &EndoPair, chart: &Chart, x: &[f64]) -> Result<DVector<f64>> {
    let lg = chart.local(x, 1)?;
    let pa = PairAt::new(&lg, pair);
    let frame = FrameData::gram_schmidt(&lg);
    let inv = invariants_with_frame(&pa, &frame, false).inv;
    Ok(inv.mean1 + inv.mean2)
}

/// Finite-difference step for the mean-curvature field.
pub const WALCZAK_FD_STEP: f64 = 1e-4;

/// `∂_k (H₁+H₂)` by central differences at steps `h` and `h/2` combined by
/// Richardson extrapolation.
fn mean_curvature_jacobian(pair: &EndoPair, chart: &Chart, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let n = chart.dim();
    let mut jac = DMatrix::zeros(n, n);
    for k in 0..n {
        let central = |step: f64| -> Result<DVector<f64>> {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += step;
            xm[k] -= step;
            Ok((mean_curvature_sum(pair, chart, &xp)? - mean_curvature_sum(pair, chart, &xm)?) / (2.0 * step))
        };
        let coarse = central(h)?;
        let fine = central(h / 2.0)?;
        let rich = (fine * 4.0 - coarse) / 3.0;
        jac.set_column(k, &rich);
    }
    Ok(jac)
}

/// Pointwise Walczak-type identity with the left side differentiated by
/// finite differences of the mean-curvature field.
pub fn walczak_pointwise_residual(pair: &EndoPair, chart: &Chart, x: &[f64]) -> Result<WalczakSides> {
    let lg = chart.local(x, 2)?;
    let pa = PairAt::new(&lg, pair);
    let frame = FrameData::gram_schmidt(&lg);
    let jets = invariants_with_frame(&pa, &frame, true);
    let hv = (jets.mean1 + jets.mean2).to_dvector();
    // column k of jac is ∂_k H
    let jac = mean_curvature_jacobian(pair, chart, lg.point(), WALCZAK_FD_STEP)?;
    let n = lg.dim();
    let p = pa.total();
    let s = p.matmul(&lg.adjoint(&p)).values();
    // (∇H)^k_l = ∂_l H^k + Γ^k_{ls} H^s, contracted with (PP*)^l_k
    let mut lhs = 0.0;
    for l in 0..n {
        for k in 0..n {
            let mut cov = jac[(k, l)];
            for m in 0..n {
                cov += lg.gamma(k, l, m).value() * hv[m];
            }
            lhs += s[(l, k)] * cov;
        }
    }
    let inv = jets.inv;
    Ok(WalczakSides {
        lhs,
        rhs: inv.walczak_rhs(),
        scale: lhs.abs() + inv.walczak_scale(),
    })
}

/// Same identity with the left side differentiated exactly through the frame
/// construction.
pub fn walczak_pointwise_residual_exact(pair: &EndoPair, chart: &Chart, x: &[f64]) -> Result<WalczakSides> {
    let lg = chart.local(x, 2)?;
    let pa = PairAt::new(&lg, pair);
    let frame = FrameData::gram_schmidt(&lg);
    let jets = invariants_with_frame(&pa, &frame, true);
    let h = jets.mean1 + jets.mean2;
    let lhs = div_p_trace(&lg, &pa.total(), &h).value();
    let inv = jets.inv;
    Ok(WalczakSides {
        lhs,
        rhs: inv.walczak_rhs(),
        scale: lhs.abs() + inv.walczak_scale(),
    })
}

/// Almost-contact data: `φ`, the Reeb field `ξ` and the covector `η`
/// (components `η_i`, carried as a vector field).
#[derive(Clone, Debug)]
pub struct ContactData {
    pub phi: EndoField,
    pub xi: VectorField,
    pub eta: VectorField,
}

/// The two readings of the closed form for `div(φφ*)(X)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContactVariant {
    /// `−⟨∇_ξξ + (div ξ)ξ, X⟩`
    Plus,
    /// `−⟨∇_ξξ − (div ξ)ξ, X⟩`
    Minus,
}

#[derive(Clone, Copy, Debug)]
pub struct ContactResidual {
    /// largest of `‖φ² + id − η⊗ξ‖`, `|η(ξ) − 1|`, `‖φξ‖`, `‖η∘φ‖`
    pub structure: f64,
    /// `‖η − g(ξ,·)‖`
    pub metric_compat: f64,
    /// `‖φφ* − (id − η⊗ξ)‖`
    pub pp_star: f64,
    /// `div(φφ*)(X)`
    pub div_value: f64,
    /// g-norm of the covector `div(φφ*)`
    pub div_norm: f64,
    /// `|div(φφ*)(X) + ⟨∇_ξξ + (div ξ)ξ, X⟩|`
    pub plus: f64,
    /// `|div(φφ*)(X) + ⟨∇_ξξ − (div ξ)ξ, X⟩|`
    pub minus: f64,
    pub scale: f64,
}

/// Structure-equation tolerance of the contact check.
pub const CONTACT_STRUCTURE_TOL: f64 = 1e-9;

pub fn contact_identity_residual(c: &ContactData, chart: &Chart, xf: &VectorField, x: &[f64]) -> Result<ContactResidual> {
    let lg = chart.local(x, 1)?;
    let n = lg.dim();
    let phi = lg.endo(&c.phi);
    let xi = lg.vector(&c.xi);
    let eta = lg.vector(&c.eta);
    let xv = lg.vector(xf);
    let id = JMat::identity(n);
    let eta_xi = JMat::outer(&xi, &eta);

    let phi_v = phi.values();
    let structure = [
        frobenius(&(phi.matmul(&phi) + id - eta_xi).values()),
        (eta.dot(&xi).value() - 1.0).abs(),
        phi.apply(&xi).to_dvector().norm(),
        (phi_v.transpose() * eta.to_dvector()).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if !(structure <= CONTACT_STRUCTURE_TOL * (1.0 + frobenius(&phi_v))) {
        return Err(GeometryError::Structural(format!(
            "almost contact equations fail by {structure:e} at {:?}",
            lg.point()
        )));
    }
    let metric_compat = (lg.lower(&xi) - eta).to_dvector().norm();

    let s = phi.matmul(&lg.adjoint(&phi));
    let pp_star = frobenius(&(s - (id - eta_xi)).values());
    let d = lg.div_endo_trace(&s);
    let div_value = d.dot(&xv).value();
    let d_up = lg.metric_inv().apply(&d);
    let div_norm = lg.inner(&d_up, &d_up).value().max(0.0).sqrt();

    let acc = lg.cov(&xi, &xi);
    let div_xi = lg.div_trace(&xi);
    let a = lg.inner(&acc, &xv).value();
    let b = (div_xi * lg.inner(&xi, &xv)).value();
    Ok(ContactResidual {
        structure,
        metric_compat,
        pp_star,
        div_value,
        div_norm,
        plus: (div_value + a + b).abs(),
        minus: (div_value + a - b).abs(),
        scale: div_value.abs() + a.abs() + b.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_geometry::Chart;
    use crate::endo_fields::EndoField;

    fn trig_field(dim: usize, seed: u64) -> VectorField {
        VectorField::new(move |x| {
            JVec::from_fn(dim, |i| {
                let mut acc = Jet::constant(0.3 * (seed as f64 + i as f64).sin());
                for (k, xk) in x.iter().enumerate() {
                    let w = ((seed as usize + 3 * i + 5 * k) % 3) as f64 + 1.0;
                    let ph = 0.7 * (seed as f64) + 1.3 * i as f64 + 0.4 * k as f64;
                    acc += (*xk * w + ph).sin() * (0.5 + 0.1 * k as f64);
                }
                acc
            })
        })
    }

    fn warped(w: fn(Jet) -> Jet) -> Chart {
        Chart::torus(2, move |x: &[Jet]| JMat::diagonal(&[Jet::constant(1.0), (w(x[0]) * 2.0).exp()])).unwrap()
    }

    fn projectors(dim: usize, first: &[usize]) -> EndoPair {
        let rest: Vec<usize> = (0..dim).filter(|i| !first.contains(i)).collect();
        EndoPair::new(EndoField::coordinate_projector(dim, first), EndoField::coordinate_projector(dim, &rest))
    }

    fn four(dim: usize) -> FourFields {
        FourFields {
            y: trig_field(dim, 1),
            x1: trig_field(dim, 2),
            x2: trig_field(dim, 3),
            z: trig_field(dim, 4),
        }
    }

    #[test]
    fn warped_torus_b2_coefficient() {
        let chart = warped(|u| u.sin());
        let pair = projectors(2, &[0]);
        let b = b_tensors(&pair, &chart, &[0.0, 0.4], &VectorField::constant(vec![1.0, 0.0]), &VectorField::constant(vec![0.0, 1.0])).unwrap();
        assert!((b.b2[1] - 1.0).abs() < 1e-14);
        assert!(b.b2[0].abs() < 1e-14);
        assert!((&b.b2 - &b.b2_hat).norm() < 1e-14);
        assert!((&b.b2 - &b.b2_check).norm() < 1e-14);
    }

    #[test]
    fn scaled_pair_scales_b_by_c_cubed() {
        let chart = warped(|u| u.sin());
        let pair = projectors(2, &[0]);
        let (xf, yf) = (trig_field(2, 7), trig_field(2, 8));
        let x = [0.9, 2.2];
        let b = b_tensors(&pair, &chart, &x, &xf, &yf).unwrap();
        let b3 = b_tensors(&pair.scaled(3.0), &chart, &x, &xf, &yf).unwrap();
        // three P-slots: P₂*, P₂ in the direction, P₁ on the argument
        assert!((&b3.b2 - &b.b2 * 27.0).norm() < 1e-12 * (1.0 + b3.b2.norm()));
        assert!((&b3.b1 - &b.b1 * 27.0).norm() < 1e-12 * (1.0 + b3.b1.norm()));
    }

    #[test]
    fn codazzi_flat_is_exact_zero() {
        let chart = Chart::torus(2, |_| JMat::identity(2)).unwrap();
        let pair = projectors(2, &[0]);
        let v = tsr_tensors(&pair, &chart, &[0.3, 0.1], &four(2)).unwrap();
        assert_eq!(v.sum(), 0.0);
        assert_eq!(v.rp, 0.0);
    }

    #[test]
    fn warped_torus_codazzi_and_regular_curvature() {
        let chart = warped(|u| u.sin());
        let pair = projectors(2, &[0]);
        let f = four(2);
        for x in [[0.2, 0.5], [1.7, 4.0], [4.4, 2.2]] {
            let (r, scale) = codazzi_residual(&pair, &chart, &x, &f).unwrap();
            assert!(r.abs() / (1.0 + scale) < 1e-12, "codazzi {r}");
            let (rp, classical) = rp_versus_riemann(&pair, &chart, &x, &f).unwrap();
            assert!((rp - classical).abs() < 1e-12 * (1.0 + classical.abs()), "{rp} vs {classical}");
        }
    }

    #[test]
    fn warped_torus_invariants_at_origin() {
        let chart = warped(|u| u.sin());
        let pair = projectors(2, &[0]);
        let inv = dist_invariants(&pair, &chart, &[0.0, 1.0]).unwrap();
        assert!((inv.smix + 1.0).abs() < 1e-13);
        assert!((inv.norms.mean2 - 1.0).abs() < 1e-13);
        assert!((inv.norms.h2 - 1.0).abs() < 1e-13);
        assert!(inv.norms.h1.abs() < 1e-14);
        assert!(inv.norms.t1.abs() < 1e-14);
        assert!(inv.norms.t2.abs() < 1e-14);
    }

    #[test]
    fn walczak_routes_agree_on_warped_torus() {
        let chart = warped(|u| u.sin());
        let pair = projectors(2, &[0]);
        for x in [[0.0, 0.0], [1.1, 0.3], [3.9, 5.0]] {
            let fd = walczak_pointwise_residual(&pair, &chart, &x).unwrap();
            let ad = walczak_pointwise_residual_exact(&pair, &chart, &x).unwrap();
            assert!(fd.normalized() < 1e-8, "{fd:?}");
            assert!(ad.normalized() < 1e-12, "{ad:?}");
            assert!((fd.lhs - ad.lhs).abs() < 1e-8);
        }
    }

    #[test]
    fn trace_lemmas_on_warped_torus() {
        let chart = warped(|u| (u * 2.0).cos() * 0.5 + u.sin());
        let pair = projectors(2, &[0]);
        for x in [[0.4, 1.0], [2.5, 3.0]] {
            let r = trace_lemma_residuals(&pair, &chart, &x).unwrap();
            assert!(r.max_normalized() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn div_p_examples() {
        let flat = Chart::torus(2, |_| JMat::identity(2)).unwrap();
        let xf = VectorField::new(|x: &[Jet]| JVec::from_fn(2, |i| if i == 0 { x[0].sin() } else { Jet::zero() }));
        let d = div_p(&EndoField::identity(2), &flat, &xf, &[0.0, 0.0]).unwrap();
        assert!((d.trace - 1.0).abs() < 1e-15 && (d.coordinate - 1.0).abs() < 1e-15);
        let d = div_p(&EndoField::zero(2), &flat, &xf, &[0.3, 0.0]).unwrap();
        assert_eq!(d.trace, 0.0);
        let d = div_p(&EndoField::identity(2).scaled(1.5), &flat, &xf, &[0.3, 0.0]).unwrap();
        assert!((d.trace - 2.25 * 0.3f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn div_p_routes_agree_for_non_self_adjoint_p() {
        let chart = warped(|u| u.sin());
        let p = EndoField::new(|x: &[Jet]| {
            JMat::from_fn(2, |i, j| (x[0] * (i as f64 + 1.0) + x[1] * j as f64).sin() + (i * 2 + j) as f64 * 0.3)
        });
        let xf = trig_field(2, 5);
        for x in [[0.1, 0.2], [2.0, 5.5], [4.0, 1.0]] {
            let d = div_p(&p, &chart, &xf, &x).unwrap();
            assert!((d.trace - d.coordinate).abs() < 1e-12 * (1.0 + d.trace.abs()));
        }
    }

    #[test]
    fn prop3_with_nonconstant_scale() {
        let flat = Chart::torus(2, |_| JMat::identity(2)).unwrap();
        let f = ScalarField::new(|x: &[Jet]| x[0].sin() + 2.0);
        let p = EndoField::identity(2).scaled_by(&f);
        let xf = trig_field(2, 9);
        let g = ScalarField::new(|x: &[Jet]| (x[1] * 2.0).cos());
        let x = [0.7, 1.9];
        let r = prop3_residuals(&p, &flat, &xf, &g, &x).unwrap();
        // ⟨X, div(PP*)⟩ = X(f²)
        let fx = 0.7f64.sin() + 2.0;
        let xv = xf.at(&x);
        let x_f2 = xv[0] * 2.0 * fx * 0.7f64.cos();
        assert!((r.first - x_f2.abs()).abs() < 1e-12);
        assert!((r.x_div_pp_star - x_f2).abs() < 1e-12);
        assert!(r.div_pp_star > 0.1);
        // the inner-product form holds for any P
        assert!(r.second < 1e-12);
    }

    #[test]
    fn p_norm_preimage_is_irrelevant() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let q = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0]);
        // g-self-adjoint rank-one P = g⁻¹ q
        let p = g.clone().try_inverse().unwrap() * q;
        let pre1 = DVector::from_vec(vec![1.0, 2.0]);
        let v = &p * &pre1;
        let natural = (&p * &pre1).dot(&(&g * &pre1));
        assert!((p_norm_sq(&p, &g, &v) - natural).abs() < 1e-12);
    }

    #[test]
    fn frame_is_orthonormal_and_rotation_invariant() {
        let chart = warped(|u| u.sin());
        let pair = projectors(2, &[0]);
        let x = [0.8, 0.1];
        let lg = chart.local(&x, 2).unwrap();
        assert!(FrameData::gram_schmidt(&lg).orthonormality_defect(&lg) < 1e-14);
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let a = dist_invariants(&pair, &chart, &x).unwrap();
        let b = dist_invariants_rotated(&pair, &chart, &x, &q).unwrap();
        assert!((a.smix - b.smix).abs() < 1e-12);
        assert!((a.norms.mean2 - b.norms.mean2).abs() < 1e-12);
        assert!((a.norms.h2 - b.norms.h2).abs() < 1e-12);
        assert!((&a.mean2 - &b.mean2).norm() < 1e-12);
    }
}
