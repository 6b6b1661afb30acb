//! Endomorphism fields `P`, `P₁`, `P₂`: adjoints, the algebraic pair
//! conditions, the allowedness forms `b_j^(i)` and the PSD square root.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart_geometry::{Chart, LocalGeometry, ScalarField, VectorField};
use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::linalg::{frobenius, JMat, JVec};
use crate::report::{ResidualReport, ResidualStats};

/// A (1,1) tensor field given by its components `P^i_j`.
#[derive(Clone)]
pub struct EndoField {
    eval: Arc<dyn Fn(&[Jet]) -> JMat + Send + Sync>,
}

impl fmt::Debug for EndoField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("EndoField")
    }
}

impl EndoField {
    pub fn new(eval: impl Fn(&[Jet]) -> JMat + Send + Sync + 'static) -> Self {
        EndoField {
            eval: Arc::new(eval),
        }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        let j = JMat::constant(&m);
        EndoField::new(move |_| j)
    }

    pub fn identity(dim: usize) -> Self {
        EndoField::new(move |_| JMat::identity(dim))
    }

    pub fn zero(dim: usize) -> Self {
        EndoField::new(move |_| JMat::zeros(dim))
    }

    /// Orthoprojector-style constant diagonal selector: 1 on `indices`.
    pub fn coordinate_projector(dim: usize, indices: &[usize]) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for &i in indices {
            m[(i, i)] = 1.0;
        }
        EndoField::constant(m)
    }

    pub fn eval(&self, x: &[Jet]) -> JMat {
        (self.eval)(x)
    }

    pub fn at(&self, x: &[f64]) -> DMatrix<f64> {
        let jets: Vec<Jet> = x.iter().map(|&v| Jet::constant(v)).collect();
        self.eval(&jets).values()
    }

    pub fn scaled(&self, c: f64) -> EndoField {
        let inner = self.clone();
        EndoField::new(move |x| inner.eval(x) * c)
    }

    /// Pointwise product with a scalar function.
    pub fn scaled_by(&self, f: &ScalarField) -> EndoField {
        let inner = self.clone();
        let f = f.clone();
        EndoField::new(move |x| inner.eval(x).scale(f.eval(x)))
    }

    pub fn sum(&self, other: &EndoField) -> EndoField {
        let (a, b) = (self.clone(), other.clone());
        EndoField::new(move |x| a.eval(x) + b.eval(x))
    }
}

/// Metric adjoint `P* = g⁻¹ Pᵀ g` at `x`.
pub fn adjoint(p: &EndoField, chart: &Chart, x: &[f64]) -> Result<DMatrix<f64>> {
    let lg = chart.local(x, 0)?;
    Ok(lg.adjoint(&lg.endo(p)).values())
}

/// Plain-number version of the adjoint for a given metric matrix.
pub fn adjoint_matrix(p: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let g_inv = g.clone().try_inverse().expect("metric must be invertible");
    g_inv * p.transpose() * g
}

/// Properties a pair may be expected to have.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFlag {
    SelfAdjoint,
    Orthogonal,
    Allowed,
    DivPpStarZero,
    DivPSquaredZero,
}

impl PairFlag {
    pub const ALL: [PairFlag; 5] = [
        PairFlag::SelfAdjoint,
        PairFlag::Orthogonal,
        PairFlag::Allowed,
        PairFlag::DivPpStarZero,
        PairFlag::DivPSquaredZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PairFlag::SelfAdjoint => "self_adjoint",
            PairFlag::Orthogonal => "orthogonal",
            PairFlag::Allowed => "allowed",
            PairFlag::DivPpStarZero => "div_pp_star_zero",
            PairFlag::DivPSquaredZero => "div_p_squared_zero",
        }
    }

    /// Threshold on the normalized residual under which the flag holds.
    pub fn threshold(self) -> f64 {
        match self {
            PairFlag::SelfAdjoint => 1e-10,
            _ => 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairFlags {
    pub self_adjoint: bool,
    pub orthogonal: bool,
    pub allowed: bool,
    pub div_pp_star_zero: bool,
    pub div_p_squared_zero: bool,
}

impl PairFlags {
    pub fn all() -> Self {
        PairFlags {
            self_adjoint: true,
            orthogonal: true,
            allowed: true,
            div_pp_star_zero: true,
            div_p_squared_zero: true,
        }
    }

    pub fn get(&self, flag: PairFlag) -> bool {
        match flag {
            PairFlag::SelfAdjoint => self.self_adjoint,
            PairFlag::Orthogonal => self.orthogonal,
            PairFlag::Allowed => self.allowed,
            PairFlag::DivPpStarZero => self.div_pp_star_zero,
            PairFlag::DivPSquaredZero => self.div_p_squared_zero,
        }
    }

    pub fn set(&mut self, flag: PairFlag, value: bool) {
        match flag {
            PairFlag::SelfAdjoint => self.self_adjoint = value,
            PairFlag::Orthogonal => self.orthogonal = value,
            PairFlag::Allowed => self.allowed = value,
            PairFlag::DivPpStarZero => self.div_pp_star_zero = value,
            PairFlag::DivPSquaredZero => self.div_p_squared_zero = value,
        }
    }
}

/// Measured residual behind one flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagEvidence {
    pub flag: PairFlag,
    pub max_normalized: f64,
    pub samples: usize,
    pub holds: bool,
}

/// A pair of endomorphism fields with the properties it is claimed to have.
#[derive(Clone, Debug)]
pub struct EndoPair {
    pub p1: EndoField,
    pub p2: EndoField,
    pub flags: PairFlags,
    pub evidence: Vec<FlagEvidence>,
}

impl EndoPair {
    pub fn new(p1: EndoField, p2: EndoField) -> Self {
        EndoPair {
            p1,
            p2,
            flags: PairFlags::default(),
            evidence: Vec::new(),
        }
    }

    pub fn with_flags(mut self, flags: PairFlags) -> Self {
        self.flags = flags;
        self
    }

    /// `P = P₁ + P₂`.
    pub fn total(&self) -> EndoField {
        self.p1.sum(&self.p2)
    }

    pub fn scaled(&self, c: f64) -> EndoPair {
        EndoPair {
            p1: self.p1.scaled(c),
            p2: self.p2.scaled(c),
            flags: self.flags,
            evidence: Vec::new(),
        }
    }

    /// Measures every flag at the given points and records the evidence.
    /// The measured values replace the claimed ones in `flags`.
    pub fn verify_flags(&mut self, chart: &Chart, points: &[Vec<f64>], fields: &[(VectorField, VectorField)]) -> Result<()> {
        if points.is_empty() {
            return Err(GeometryError::EmptySamples);
        }
        let mut evidence = Vec::with_capacity(PairFlag::ALL.len());
        for flag in PairFlag::ALL {
            let r = flag_residual(self, flag, chart, points, fields)?;
            let holds = r.max_normalized <= flag.threshold();
            evidence.push(FlagEvidence {
                flag,
                max_normalized: r.max_normalized,
                samples: r.samples,
                holds,
            });
        }
        for e in &evidence {
            self.flags.set(e.flag, e.holds);
        }
        self.evidence = evidence;
        Ok(())
    }
}

fn flag_residual(
    pair: &EndoPair,
    flag: PairFlag,
    chart: &Chart,
    points: &[Vec<f64>],
    fields: &[(VectorField, VectorField)],
) -> Result<ResidualStats> {
    let mut st = ResidualStats::default();
    match flag {
        PairFlag::SelfAdjoint => {
            for x in points {
                let lg = chart.local(x, 0)?;
                let mut worst = 0.0f64;
                let mut scale = 0.0f64;
                for p in [&pair.p1, &pair.p2] {
                    let m = lg.endo(p);
                    worst = worst.max(frobenius(&(lg.adjoint(&m) - m).values()));
                    scale = scale.max(frobenius(&m.values()));
                }
                st.push(worst, scale);
            }
        }
        PairFlag::Orthogonal => {
            for x in points {
                let lg = chart.local(x, 0)?;
                let (abs, scale) = orthogonality_at(&lg, pair);
                st.push(abs, scale);
            }
        }
        PairFlag::Allowed => {
            for (k, x) in points.iter().enumerate() {
                let (xf, yf) = &fields[k % fields.len().max(1)];
                let f = allowed_forms(pair, chart, x, xf, yf)?;
                st.push(f.max_norm(), f.scale);
            }
        }
        PairFlag::DivPpStarZero | PairFlag::DivPSquaredZero => {
            let p = pair.total();
            for x in points {
                let lg = chart.local(x, 1)?;
                let m = lg.endo(&p);
                let s = if flag == PairFlag::DivPpStarZero {
                    m.matmul(&lg.adjoint(&m))
                } else {
                    m.matmul(&m)
                };
                let d = lg.div_endo_trace(&s);
                // covector norm through g⁻¹
                let dv = lg.metric_inv().apply(&d);
                let abs = lg.inner(&dv, &dv).value().max(0.0).sqrt();
                st.push(abs, frobenius(&s.values()));
            }
        }
    }
    Ok(st)
}

fn orthogonality_at(lg: &LocalGeometry, pair: &EndoPair) -> (f64, f64) {
    let p1 = lg.endo(&pair.p1);
    let p2 = lg.endo(&pair.p2);
    let p1s = lg.adjoint(&p1);
    let p2s = lg.adjoint(&p2);
    let prods = [
        p1.matmul(&p2s),
        p1s.matmul(&p2),
        p2.matmul(&p1s),
        p2s.matmul(&p1),
    ];
    let abs = prods
        .iter()
        .map(|m| frobenius(&m.values()))
        .fold(0.0, f64::max);
    let scale = frobenius(&p1.values()) * frobenius(&p2.values());
    (abs, scale)
}

/// Largest Frobenius norm of `P₁P₂*`, `P₁*P₂`, `P₂P₁*`, `P₂*P₁` over the
/// points.
pub fn check_pair(pair: &EndoPair, chart: &Chart, points: &[Vec<f64>], tolerance: f64) -> Result<ResidualReport> {
    if points.is_empty() {
        return Err(GeometryError::EmptySamples);
    }
    let mut st = ResidualStats::default();
    for x in points {
        let lg = chart.local(x, 0)?;
        let (abs, scale) = orthogonality_at(&lg, pair);
        st.push(abs, scale);
    }
    Ok(st.report("pair", tolerance))
}

/// The pair and its adjoints as jet matrices at one point.
#[derive(Clone, Debug)]
pub struct PairAt<'a> {
    pub lg: &'a LocalGeometry,
    pub p1: JMat,
    pub p2: JMat,
    pub p1s: JMat,
    pub p2s: JMat,
}

impl<'a> PairAt<'a> {
    pub fn new(lg: &'a LocalGeometry, pair: &EndoPair) -> Self {
        let p1 = lg.endo(&pair.p1);
        let p2 = lg.endo(&pair.p2);
        PairAt {
            lg,
            p1s: lg.adjoint(&p1),
            p2s: lg.adjoint(&p2),
            p1,
            p2,
        }
    }

    /// Same pair with the roles of `P₁` and `P₂` exchanged.
    pub fn swapped(&self) -> PairAt<'a> {
        PairAt {
            lg: self.lg,
            p1: self.p2,
            p2: self.p1,
            p1s: self.p2s,
            p2s: self.p1s,
        }
    }

    pub fn total(&self) -> JMat {
        self.p1 + self.p2
    }

    pub fn total_adjoint(&self) -> JMat {
        self.p1s + self.p2s
    }

    #[inline]
    pub fn cov(&self, v: &JVec, w: &JVec) -> JVec {
        self.lg.cov(v, w)
    }

    #[inline]
    pub fn inner(&self, a: &JVec, b: &JVec) -> Jet {
        self.lg.inner(a, b)
    }

    /// `b_1^(1)` and `b_1^(2)` on `(X, Y)`; the swapped pair yields the
    /// index-2 forms. Returned together with the size of their terms.
    fn b_forms_first(&self, x: &JVec, y: &JVec) -> ([JVec; 2], f64) {
        let p1x = self.p1.apply(x);
        let p1sy = self.p1s.apply(y);
        let d = self.cov(&p1x, &p1sy);
        let t0 = self.p2s.apply(&self.p2.apply(&d));
        let t1 = self.p2s.apply(&self.cov(&p1x, &self.p1.apply(&p1sy)));
        let t2 = self.p2.apply(&self.cov(&self.p1s.apply(&p1x), &p1sy));
        let lg = self.lg;
        let scale = lg.norm_value(&t0) + lg.norm_value(&t1) + lg.norm_value(&t2);
        ([t0 - t1, t0 - t2], scale)
    }

    pub fn allowed_forms(&self, x: &JVec, y: &JVec) -> ([JVec; 4], f64) {
        let ([b11, b12], s1) = self.b_forms_first(x, y);
        let ([b21, b22], s2) = self.swapped().b_forms_first(x, y);
        ([b11, b12, b21, b22], s1 + s2)
    }
}

/// The four allowedness forms at one point, with the summed size of the terms
/// they are made of.
#[derive(Clone, Debug)]
pub struct AllowedForms {
    pub b1_1: DVector<f64>,
    pub b1_2: DVector<f64>,
    pub b2_1: DVector<f64>,
    pub b2_2: DVector<f64>,
    /// largest g-norm among the four forms
    pub norms: [f64; 4],
    pub scale: f64,
}

impl AllowedForms {
    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }
}

/// `b_1^(1)(X,Y)`, `b_1^(2)(X,Y)`, `b_2^(1)(X,Y)`, `b_2^(2)(X,Y)` at `x`.
pub fn allowed_forms(pair: &EndoPair, chart: &Chart, x: &[f64], xf: &VectorField, yf: &VectorField) -> Result<AllowedForms> {
    let lg = chart.local(x, 1)?;
    let pa = PairAt::new(&lg, pair);
    let (forms, scale) = pa.allowed_forms(&lg.vector(xf), &lg.vector(yf));
    let norms = [0, 1, 2, 3].map(|k| lg.norm_value(&forms[k]));
    Ok(AllowedForms {
        b1_1: forms[0].to_dvector(),
        b1_2: forms[1].to_dvector(),
        b2_1: forms[2].to_dvector(),
        b2_2: forms[3].to_dvector(),
        norms,
        scale,
    })
}

/// Eigenvalues above this (negative) bound are clamped to zero.
const PSD_CLAMP: f64 = -1e-8;

/// The `g`-self-adjoint positive semidefinite square root of a
/// `g`-self-adjoint `S`.
pub fn sqrt_psd(s: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    if s.ncols() != n || g.nrows() != n || g.ncols() != n {
        return Err(GeometryError::Dimension {
            expected: n,
            got: g.nrows(),
        });
    }
    let chol = g.clone().cholesky().ok_or_else(|| GeometryError::Metric {
        point: Vec::new(),
        reason: "not positive definite".into(),
    })?;
    let l = chol.l();
    let l_inv_t = l.transpose().try_inverse().ok_or_else(|| GeometryError::Metric {
        point: Vec::new(),
        reason: "singular Cholesky factor".into(),
    })?;
    // A = Lᵀ S L⁻ᵀ is symmetric exactly when S is g-self-adjoint
    let a = l.transpose() * s * &l_inv_t;
    let a = (&a + a.transpose()) * 0.5;
    let scale = frobenius(&a).max(1.0);
    let eig = a.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < PSD_CLAMP * scale {
        return Err(GeometryError::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root_a = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    Ok(&l_inv_t * root_a * l.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    fn chart_with_metric(g: DMatrix<f64>) -> Chart {
        let n = g.nrows();
        let gj = JMat::constant(&g);
        Chart::torus(n, move |_| gj).unwrap()
    }

    #[test]
    fn adjoint_examples() {
        let sym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]);
        let c = chart_with_metric(DMatrix::identity(2, 2));
        let a = adjoint(&EndoField::constant(sym.clone()), &c, &[0.1, 0.2]).unwrap();
        assert_eq!(a, sym);

        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0]));
        let c = chart_with_metric(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 7.0])));
        let a = adjoint(&EndoField::constant(diag.clone()), &c, &[0.1, 0.2]).unwrap();
        assert!((a - diag).norm() < 1e-15);

        let c = chart_with_metric(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])));
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let a = adjoint(&EndoField::constant(p), &c, &[0.0, 0.0]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.25, 0.0]);
        assert!((a - expected).norm() < 1e-15);
    }

    #[test]
    fn sqrt_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((sqrt_psd(&id, &id).unwrap() - &id).norm() < 1e-14);
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let r = sqrt_psd(&s, &DMatrix::identity(2, 2)).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert!((r - expected).norm() < 1e-14);
    }

    #[test]
    fn sqrt_with_nontrivial_metric() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        // S = g⁻¹ M with M symmetric positive definite is g-self-adjoint
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let s = g.clone().try_inverse().unwrap() * m;
        let r = sqrt_psd(&s, &g).unwrap();
        assert!((&r * &r - &s).norm() < 1e-12);
        assert!((adjoint_matrix(&r, &g) - &r).norm() < 1e-12);
        assert!((&r * &s - &s * &r).norm() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_negative_spectrum() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(matches!(
            sqrt_psd(&s, &DMatrix::identity(2, 2)),
            Err(GeometryError::NotPsd { .. })
        ));
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1e-13]));
        let r = sqrt_psd(&s, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(r[(1, 1)], 0.0);
    }

    #[test]
    fn pair_checks() {
        let c = chart_with_metric(DMatrix::identity(2, 2));
        let pts = vec![vec![0.1, 0.2], vec![1.0, 3.0]];
        let p1 = EndoField::coordinate_projector(2, &[0]);
        let p2 = EndoField::coordinate_projector(2, &[1]);
        let good = EndoPair::new(p1.clone(), p2);
        let r = check_pair(&good, &c, &pts, 1e-10).unwrap();
        assert_eq!(r.max_abs, 0.0);
        assert!(r.pass);

        let bad = EndoPair::new(p1.clone(), p1);
        let r = check_pair(&bad, &c, &pts, 1e-10).unwrap();
        assert!((r.max_abs - 1.0).abs() < 1e-15);
        assert!(!r.pass);

        assert!(matches!(check_pair(&good, &c, &[], 1e-10), Err(GeometryError::EmptySamples)));
    }

    #[test]
    fn product_projectors_are_allowed() {
        // S¹ × S¹ with a non-flat product metric (1+sin²u) du² + (2+cos v) dv²
        let chart = Chart::torus(2, |x: &[Jet]| {
            JMat::diagonal(&[x[0].sin().powi(2) + 1.0, x[1].cos() + 2.0])
        })
        .unwrap();
        let pair = EndoPair::new(EndoField::coordinate_projector(2, &[0]), EndoField::coordinate_projector(2, &[1]));
        let xf = VectorField::new(|x: &[Jet]| JVec::from_fn(2, |i| (x[0] * (i as f64 + 1.0)).sin() + x[1].cos()));
        let yf = VectorField::new(|x: &[Jet]| JVec::from_fn(2, |i| (x[1] * 2.0 - x[0] * i as f64).cos()));
        for x in [[0.3, 1.2], [2.0, 4.0], [5.1, 0.7]] {
            let f = allowed_forms(&pair, &chart, &x, &xf, &yf).unwrap();
            assert!(f.max_norm() < 1e-12, "{:?}", f.norms);
        }
    }
}
