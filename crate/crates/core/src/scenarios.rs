//! Built-in scenario manifolds: a chart, an endomorphism pair and the flags
//! the pair is expected to have. Flags are measured when a scenario is built
//! and a mismatch is a construction error.

use std::f64::consts::{PI, TAU};

use crate::chart_geometry::{einstein_tensor, Chart, ScalarField, VectorField};
use crate::dist_tensors::{dist_invariants, ContactData};
use crate::endo_fields::{sqrt_psd, EndoField, EndoPair, PairFlag, PairFlags};
use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::linalg::{JMat, JVec};
use crate::sampling::{random_vector_field, rng, sample_points};

/// Names accepted by [`by_name`].
pub const SCENARIO_NAMES: [&str; 5] = ["flat-torus", "scaled-identity", "warped-torus", "einstein-s3xt2", "hopf-s3"];

/// Half-width of the stereographic coordinate box used for pointwise checks.
pub const STEREO_BOX: f64 = 3.0;

const VERIFY_SEED: u64 = 0x5eed;
const VERIFY_POINTS: usize = 12;
const DEGENERATE_POINTWISE: f64 = 1e-9;

/// A chart with the pair (and optional contact data) expressed in it.
#[derive(Clone, Debug)]
pub struct ScenarioChart {
    pub chart: Chart,
    pub pair: EndoPair,
    pub contact: Option<ContactData>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExpectedFlags {
    pub pair: PairFlags,
    /// the Walczak integrand vanishes identically
    pub integrand_degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct ScenarioManifold {
    pub name: String,
    /// chart for pointwise sampling
    pub pointwise: ScenarioChart,
    /// compact chart for quadrature; the same as `pointwise` on tori
    pub integration: ScenarioChart,
    pub expected: ExpectedFlags,
    pub provenance: String,
    pub grid_policy: GridPolicy,
    /// periodic axes of the integration chart along which the metric and
    /// the pair are invariant
    pub symmetry_axes: Vec<usize>,
}

/// How a single resolution level `n` maps to node counts per axis of the
/// integration chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridPolicy {
    /// `n` on every axis
    Uniform,
    /// hyperspherical `(χ, θ, φ)`: `n/2, n/2, n/4`
    Sphere,
    /// `(χ, θ, φ, u, v)`: `n/8, n/8, 8, 8, 8`; the test integrands are
    /// trigonometric of low degree in `φ`, `v` and, up to factors that
    /// integrate to zero over the sphere, in `u`
    SphereTorus,
}

impl ScenarioManifold {
    /// Node counts for resolution level `n`, at least 8 per axis.
    pub fn grid_for(&self, n: usize) -> Vec<usize> {
        let counts = match self.grid_policy {
            GridPolicy::Uniform => vec![n; self.integration.chart.dim()],
            GridPolicy::Sphere => vec![n / 2, n / 2, n / 4],
            GridPolicy::SphereTorus => vec![n / 8, n / 8, 8, 8, 8],
        };
        counts.into_iter().map(|c| c.max(8)).collect()
    }

    pub fn dim(&self) -> usize {
        self.pointwise.chart.dim()
    }

    pub fn has_contact(&self) -> bool {
        self.pointwise.contact.is_some()
    }

    /// Measures every expected flag on both charts.
    pub fn verify(mut self) -> Result<Self> {
        verify_chart(&self.name, "pointwise", &mut self.pointwise, &self.expected, &[])?;
        verify_chart(&self.name, "integration", &mut self.integration, &self.expected, &self.symmetry_axes)?;
        Ok(self)
    }
}

fn verify_chart(name: &str, label: &str, sc: &mut ScenarioChart, expected: &ExpectedFlags, symmetric: &[usize]) -> Result<()> {
    let mut r = rng(VERIFY_SEED);
    let dim = sc.chart.dim();
    let points = sample_points(&sc.chart, VERIFY_POINTS, &mut r)?;
    let fields: Vec<(VectorField, VectorField)> = (0..3)
        .map(|_| (random_vector_field(&mut r, dim), random_vector_field(&mut r, dim)))
        .collect();
    sc.pair.verify_flags(&sc.chart, &points, &fields)?;
    for flag in PairFlag::ALL {
        if sc.pair.flags.get(flag) != expected.pair.get(flag) {
            let ev = sc.pair.evidence.iter().find(|e| e.flag == flag).map(|e| e.max_normalized);
            return Err(GeometryError::Scenario(format!(
                "{name} ({label} chart): flag {} expected {} but measured residual is {:e}",
                flag.name(),
                expected.pair.get(flag),
                ev.unwrap_or(f64::NAN)
            )));
        }
    }
    if expected.pair.self_adjoint && expected.pair.allowed {
        let mut worst = 0.0f64;
        for x in &points {
            worst = worst.max(dist_invariants(&sc.pair, &sc.chart, x)?.walczak_rhs().abs());
        }
        let degenerate = worst <= DEGENERATE_POINTWISE;
        if degenerate != expected.integrand_degenerate {
            return Err(GeometryError::Scenario(format!(
                "{name} ({label} chart): integrand degeneracy expected {} but max |integrand| is {worst:e}",
                expected.integrand_degenerate
            )));
        }
    }
    for &k in symmetric {
        if !sc.chart.periodic().get(k).copied().unwrap_or(false) {
            return Err(GeometryError::Scenario(format!("{name}: symmetry axis {k} is not periodic")));
        }
        for x in &points {
            let mut y = x.clone();
            y[k] += 0.731;
            let y = sc.chart.wrap(&y);
            let pairs = [
                (sc.chart.metric_at(x)?, sc.chart.metric_at(&y)?),
                (sc.pair.p1.at(x), sc.pair.p1.at(&y)),
                (sc.pair.p2.at(x), sc.pair.p2.at(&y)),
            ];
            for (a, b) in pairs {
                if (&a - &b).norm() > 1e-12 * (1.0 + a.norm()) {
                    return Err(GeometryError::Scenario(format!("{name}: metric or pair varies along axis {k} at {x:?}")));
                }
            }
        }
    }
    if let Some(c) = &sc.contact {
        for x in &points {
            let res = crate::dist_tensors::contact_identity_residual(c, &sc.chart, &fields[0].0, x)?;
            if res.metric_compat > 1e-9 {
                return Err(GeometryError::Scenario(format!("{name}: η is not g(ξ, ·) at {x:?}")));
            }
        }
    }
    Ok(())
}

fn projector_pair(dim: usize, first: &[usize]) -> EndoPair {
    let rest: Vec<usize> = (0..dim).filter(|i| !first.contains(i)).collect();
    EndoPair::new(EndoField::coordinate_projector(dim, first), EndoField::coordinate_projector(dim, &rest))
}

fn same_chart(chart: Chart, pair: EndoPair) -> (ScenarioChart, ScenarioChart) {
    let sc = ScenarioChart {
        chart,
        pair,
        contact: None,
    };
    (sc.clone(), sc)
}

/// Flat `T^{n1+n2}` with the two coordinate orthoprojectors.
pub fn flat_torus_projectors(n1: usize, n2: usize) -> Result<ScenarioManifold> {
    if n1 == 0 || n2 == 0 {
        return Err(GeometryError::Scenario("both factors need dimension at least 1".into()));
    }
    let n = n1 + n2;
    let chart = Chart::torus(n, move |_| JMat::identity(n))?;
    let first: Vec<usize> = (0..n1).collect();
    let (pointwise, integration) = same_chart(chart, projector_pair(n, &first));
    ScenarioManifold {
        name: "flat-torus".into(),
        pointwise,
        integration,
        expected: ExpectedFlags {
            pair: PairFlags::all(),
            integrand_degenerate: true,
        },
        provenance: format!("flat T^{n} split {n1}+{n2} by constant coordinate projectors"),
        grid_policy: GridPolicy::Uniform,
        symmetry_axes: (0..n).collect(),
    }
    .verify()
}

/// `P_i ← c·P_i` for a nonzero constant `c`.
pub fn scaled_identity(base: &ScenarioManifold, c: f64) -> Result<ScenarioManifold> {
    if c == 0.0 || !c.is_finite() {
        return Err(GeometryError::Scenario(format!("scale factor must be finite and nonzero, got {c}")));
    }
    let scale = |sc: &ScenarioChart| ScenarioChart {
        chart: sc.chart.clone(),
        pair: sc.pair.scaled(c),
        contact: sc.contact.clone(),
    };
    ScenarioManifold {
        name: "scaled-identity".into(),
        pointwise: scale(&base.pointwise),
        integration: scale(&base.integration),
        expected: base.expected,
        provenance: format!("{} with both endomorphisms scaled by {c}", base.provenance),
        grid_policy: base.grid_policy,
        symmetry_axes: base.symmetry_axes.clone(),
    }
    .verify()
}

/// `P_i ← f·P_i` for a scalar function `f`; `div(P²)` fails unless `f` is
/// constant.
pub fn scaled_by_function(base: &ScenarioManifold, f: ScalarField, expected: ExpectedFlags, label: &str) -> Result<ScenarioManifold> {
    let scale = |sc: &ScenarioChart| ScenarioChart {
        chart: sc.chart.clone(),
        pair: EndoPair::new(sc.pair.p1.scaled_by(&f), sc.pair.p2.scaled_by(&f)),
        contact: None,
    };
    ScenarioManifold {
        name: format!("{}-scaled-by-function", base.name),
        pointwise: scale(&base.pointwise),
        integration: scale(&base.integration),
        expected,
        provenance: format!("{} with both endomorphisms multiplied by {label}", base.provenance),
        grid_policy: base.grid_policy,
        symmetry_axes: Vec::new(),
    }
    .verify()
}

/// Warping profile `w(u)` on jets.
pub type Profile = fn(Jet) -> Jet;

fn warped_chart(w: Profile) -> Result<Chart> {
    Chart::torus(2, move |x: &[Jet]| JMat::diagonal(&[Jet::constant(1.0), (w(x[0]) * 2.0).exp()]))
}

/// `g = du² + e^{2w(u)} dv²` on `T²` with the orthoprojectors onto `∂u`
/// and `∂v`.
pub fn warped_torus(w: Profile) -> Result<ScenarioManifold> {
    let (pointwise, integration) = same_chart(warped_chart(w)?, projector_pair(2, &[0]));
    // a constant profile is the flat torus, where every invariant vanishes
    let flat = (0..8).all(|k| {
        let u = Jet::variable(k as f64 * 0.7, 0, 1, 2);
        let wu = w(u);
        wu.partial(0) == 0.0 && wu.second(0, 0) == 0.0
    });
    ScenarioManifold {
        name: "warped-torus".into(),
        pointwise,
        integration,
        expected: ExpectedFlags {
            pair: PairFlags::all(),
            integrand_degenerate: flat,
        },
        provenance: "warped torus du² + e^{2w(u)}dv² with coordinate orthoprojectors".into(),
        grid_policy: GridPolicy::Uniform,
        symmetry_axes: vec![1],
    }
    .verify()
}

pub fn sin_profile(u: Jet) -> Jet {
    u.sin()
}

/// The warped torus `w = sin u` with `P₁` the orthoprojector onto the unit
/// vector at angle `θ(u) = ½ sin u` from `∂u` and `P₂ = 2(id − P₁)`.
/// This pair is self-adjoint and orthogonal but not allowed.
pub fn twisted_warped_torus() -> Result<ScenarioManifold> {
    let line = |x: &[Jet]| -> (JVec, JVec) {
        let th = x[0].sin() * 0.5;
        let ew = x[0].sin().exp();
        // unit vector and its metric dual in coordinates
        let n = JVec::from_fn(2, |i| if i == 0 { th.cos() } else { th.sin() / ew });
        let nl = JVec::from_fn(2, |i| if i == 0 { th.cos() } else { th.sin() * ew });
        (n, nl)
    };
    let p1 = EndoField::new(move |x| {
        let (n, nl) = line(x);
        JMat::outer(&n, &nl)
    });
    let p2 = EndoField::new(move |x| {
        let (n, nl) = line(x);
        (JMat::identity(2) - JMat::outer(&n, &nl)) * 2.0
    });
    let (pointwise, integration) = same_chart(warped_chart(sin_profile)?, EndoPair::new(p1, p2));
    ScenarioManifold {
        name: "twisted-warped-torus".into(),
        pointwise,
        integration,
        expected: ExpectedFlags {
            pair: PairFlags {
                self_adjoint: true,
                orthogonal: true,
                allowed: false,
                div_pp_star_zero: false,
                div_p_squared_zero: false,
            },
            integrand_degenerate: false,
        },
        provenance: "warped torus w = sin u with a rotated line field and unequal scales".into(),
        grid_policy: GridPolicy::Uniform,
        symmetry_axes: vec![1],
    }
    .verify()
}

/// Round metric factor `λ = 2/(1+r²)` of the stereographic chart.
fn stereo_lambda(x: &[Jet]) -> Jet {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    2.0 * (r2 + 1.0).recip()
}

/// Closed-form `E₁`, the Einstein-tensor entry on the sphere factor.
pub fn einstein_e1(u: f64) -> f64 {
    let (s, c) = u.sin_cos();
    let (s2, c2) = (s * s, c * c);
    -s2 * (c2 * c2 - 5.0 * c2 + 10.0) / (1.0 + s2).powi(3)
}

/// Sphere-block coefficient `a₁ = √(−E₁)`.
fn a1_jet(u: Jet) -> Jet {
    let s = u.sin();
    let c2 = u.cos() * u.cos();
    let s2 = s * s;
    s.abs() * (c2 * c2 - c2 * 5.0 + 10.0).sqrt() * (s2 + 1.0).powf(-1.5)
}

fn einstein_pair() -> EndoPair {
    let p1 = EndoField::new(|x| {
        let a = a1_jet(x[3]);
        JMat::diagonal(&[a, a, a, Jet::zero(), Jet::zero()])
    });
    let r3 = Jet::constant(3f64.sqrt());
    let p2 = EndoField::new(move |_| JMat::diagonal(&[Jet::zero(), Jet::zero(), Jet::zero(), r3, r3]));
    EndoPair::new(p1, p2)
}

/// Distance from `u` to the zero set of `sin u`.
fn sin_zero_distance(u: f64) -> f64 {
    let r = u.rem_euclid(PI);
    r.min(PI - r)
}

fn torus_factor(u: Jet) -> Jet {
    let s = u.sin();
    s * s + 1.0
}

pub fn einstein_pointwise_chart() -> Result<Chart> {
    let b = STEREO_BOX;
    Ok(Chart::new(
        vec![(-b, b), (-b, b), (-b, b), (0.0, TAU), (0.0, TAU)],
        vec![false, false, false, true, true],
        |x: &[Jet]| {
            let l = stereo_lambda(x);
            let l2 = l * l;
            let t = torus_factor(x[3]);
            JMat::diagonal(&[l2, l2, l2, t, t])
        },
    )?
    .with_singular_locus("sin u = 0, where √(−E) is not smooth", |x: &[f64]| sin_zero_distance(x[3])))
}

pub fn einstein_integration_chart() -> Result<Chart> {
    Ok(Chart::new(
        vec![(0.0, PI), (0.0, PI), (0.0, TAU), (0.0, TAU), (0.0, TAU)],
        vec![false, false, true, true, true],
        |x: &[Jet]| {
            let s = x[0].sin();
            let t = x[1].sin();
            let f = torus_factor(x[3]);
            JMat::diagonal(&[Jet::constant(1.0), s * s, s * s * t * t, f, f])
        },
    )?
    .with_singular_locus("sin u = 0, where √(−E) is not smooth", |x: &[f64]| sin_zero_distance(x[3])))
}

/// `S³ × T²` with `ds² = 4|dx|²/(1+|x|²)² + (1+sin²u)(du²+dv²)` and
/// `P = √(−E)` split into its sphere and torus blocks.
pub fn einstein_s3xt2() -> Result<ScenarioManifold> {
    let pointwise = ScenarioChart {
        chart: einstein_pointwise_chart()?,
        pair: einstein_pair(),
        contact: None,
    };
    // the closed-form P must be the square root of −E
    for x in [[0.3, -0.5, 0.8, 1.1, 0.2], [-1.2, 0.4, 0.1, 4.0, 5.5]] {
        let e = einstein_tensor(&pointwise.chart, &x)?;
        let g = pointwise.chart.metric_at(&x)?;
        let root = sqrt_psd(&(-e), &g)?;
        let p = pointwise.pair.total().at(&x);
        let defect = crate::linalg::frobenius(&(root - &p)) / (1.0 + crate::linalg::frobenius(&p));
        if defect > 1e-8 {
            return Err(GeometryError::Scenario(format!("einstein-s3xt2: P differs from √(−E) by {defect:e} at {x:?}")));
        }
    }
    let integration = ScenarioChart {
        chart: einstein_integration_chart()?,
        pair: einstein_pair(),
        contact: None,
    };
    ScenarioManifold {
        name: "einstein-s3xt2".into(),
        pointwise,
        integration,
        expected: ExpectedFlags {
            pair: PairFlags::all(),
            integrand_degenerate: true,
        },
        provenance: "round S³ × (T², (1+sin²u)(du²+dv²)); P = √(−E) split into sphere and torus blocks".into(),
        grid_policy: GridPolicy::SphereTorus,
        symmetry_axes: vec![2, 4],
    }
    .verify()
}

/// Embedding data of a chart on the unit sphere `S³ ⊂ ℝ⁴`: the point, the
/// Jacobian `∂p/∂x` and the diagonal of the induced metric.
pub struct SphereEmbedding {
    pub p: [Jet; 4],
    pub jac: [[Jet; 3]; 4],
    pub metric_diag: [Jet; 3],
}

/// Inverse stereographic projection from `(0, 0, 0, 1)`:
/// `p = (λx, 1 − λ)`.
pub fn stereographic_embedding(x: &[Jet]) -> SphereEmbedding {
    let l = stereo_lambda(x);
    let l2 = l * l;
    let mut jac = [[Jet::zero(); 3]; 4];
    for i in 0..3 {
        for j in 0..3 {
            jac[i][j] = -(l2 * x[i] * x[j]);
            if i == j {
                jac[i][j] += l;
            }
        }
        jac[3][i] = l2 * x[i];
    }
    SphereEmbedding {
        p: [l * x[0], l * x[1], l * x[2], 1.0 - l],
        jac,
        metric_diag: [l2, l2, l2],
    }
}

/// Hyperspherical angles `(χ, θ, φ)`.
pub fn hyperspherical_embedding(x: &[Jet]) -> SphereEmbedding {
    let (sc, cc) = (x[0].sin(), x[0].cos());
    let (st, ct) = (x[1].sin(), x[1].cos());
    let (sp, cp) = (x[2].sin(), x[2].cos());
    let z = Jet::zero();
    SphereEmbedding {
        p: [sc * st * cp, sc * st * sp, sc * ct, cc],
        jac: [
            [cc * st * cp, sc * ct * cp, -(sc * st * sp)],
            [cc * st * sp, sc * ct * sp, sc * st * cp],
            [cc * ct, -(sc * st), z],
            [-sc, z, z],
        ],
        metric_diag: [Jet::constant(1.0), sc * sc, sc * sc * st * st],
    }
}

/// Left multiplication by the quaternion `i`: `A p = (−p₁, p₀, −p₃, p₂)`.
fn quat_i(v: &[Jet; 4]) -> [Jet; 4] {
    [-v[1], v[0], -v[3], v[2]]
}

/// Hopf contact structure `(ξ, η, φ)` in chart components:
/// `ξ = g⁻¹JᵀAp`, `η = JᵀAp`, `φ = g⁻¹JᵀAJ(id − ξ⊗η)`.
pub fn hopf_structure(e: &SphereEmbedding) -> (JVec, JVec, JMat) {
    let ap = quat_i(&e.p);
    let eta = JVec::from_fn(3, |b| (0..4).map(|i| e.jac[i][b] * ap[i]).sum());
    let xi = JVec::from_fn(3, |a| eta[a] / e.metric_diag[a]);
    let mut m = JMat::zeros(3);
    for b in 0..3 {
        let col = [e.jac[0][b], e.jac[1][b], e.jac[2][b], e.jac[3][b]];
        let acol = quat_i(&col);
        for a in 0..3 {
            let v: Jet = (0..4).map(|i| e.jac[i][a] * acol[i]).sum();
            m.set(a, b, v / e.metric_diag[a]);
        }
    }
    let phi = m.matmul(&(JMat::identity(3) - JMat::outer(&xi, &eta)));
    (xi, eta, phi)
}

type Embedding = fn(&[Jet]) -> SphereEmbedding;

/// Contact data and the pair `(id − η⊗ξ, η⊗ξ)` for a sphere chart, with the
/// conformal change `g' = e^{2f}g`, `ξ' = e^{−f}ξ`, `η' = e^{f}η`.
fn hopf_chart(chart: Chart, emb: Embedding, f: Option<fn(&SphereEmbedding) -> Jet>) -> ScenarioChart {
    let structure = move |x: &[Jet]| {
        let e = emb(x);
        let (xi, eta, phi) = hopf_structure(&e);
        match f {
            Some(f) => {
                let ef = f(&e).exp();
                (xi.scale(ef.recip()), eta.scale(ef), phi)
            }
            None => (xi, eta, phi),
        }
    };
    let p1 = EndoField::new(move |x| {
        let (xi, eta, _) = structure(x);
        JMat::identity(3) - JMat::outer(&xi, &eta)
    });
    let p2 = EndoField::new(move |x| {
        let (xi, eta, _) = structure(x);
        JMat::outer(&xi, &eta)
    });
    let contact = ContactData {
        phi: EndoField::new(move |x| structure(x).2),
        xi: VectorField::new(move |x| structure(x).0),
        eta: VectorField::new(move |x| structure(x).1),
    };
    ScenarioChart {
        chart,
        pair: EndoPair::new(p1, p2),
        contact: Some(contact),
    }
}

fn sphere_chart(emb: Embedding, stereo: bool, f: Option<fn(&SphereEmbedding) -> Jet>) -> Result<Chart> {
    let metric = move |x: &[Jet]| {
        let e = emb(x);
        let w = f.map(|f| (f(&e) * 2.0).exp()).unwrap_or(Jet::constant(1.0));
        JMat::diagonal(&[e.metric_diag[0] * w, e.metric_diag[1] * w, e.metric_diag[2] * w])
    };
    if stereo {
        let b = STEREO_BOX;
        Chart::new(vec![(-b, b); 3], vec![false; 3], metric)
    } else {
        Chart::new(vec![(0.0, PI), (0.0, PI), (0.0, TAU)], vec![false, false, true], metric)
    }
}

fn hopf_expected() -> ExpectedFlags {
    ExpectedFlags {
        pair: PairFlags::all(),
        integrand_degenerate: true,
    }
}

/// Round `S³` with the Hopf field `ξ = ip`, `η = g(ξ, ·)` and `φ` the
/// quaternionic rotation on `ker η`; the pair is `(φφ*, η⊗ξ)`.
pub fn hopf_contact_s3() -> Result<ScenarioManifold> {
    ScenarioManifold {
        name: "hopf-s3".into(),
        pointwise: hopf_chart(sphere_chart(stereographic_embedding, true, None)?, stereographic_embedding, None),
        integration: hopf_chart(sphere_chart(hyperspherical_embedding, false, None)?, hyperspherical_embedding, None),
        expected: hopf_expected(),
        provenance: "unit S³ ⊂ ℍ, ξ = p·i, stereographic chart for sampling and hyperspherical angles for quadrature".into(),
        grid_policy: GridPolicy::Sphere,
        symmetry_axes: vec![2],
    }
    .verify()
}

const CONFORMAL_EPS: f64 = 0.3;

fn conformal_factor(e: &SphereEmbedding) -> Jet {
    e.p[0] * CONFORMAL_EPS
}

/// The Hopf structure after the conformal change `g' = e^{2f}g` with
/// `f = 0.3 p₀`. Here `ξ'` is still geodesic but `div ξ' = 2e^{−f}ξ(f) ≠ 0`,
/// which separates the two sign readings of the contact identity.
pub fn hopf_conformal_s3() -> Result<ScenarioManifold> {
    let f = Some(conformal_factor as fn(&SphereEmbedding) -> Jet);
    let pointwise = hopf_chart(sphere_chart(stereographic_embedding, true, f)?, stereographic_embedding, f);
    let integration = hopf_chart(sphere_chart(hyperspherical_embedding, false, f)?, hyperspherical_embedding, f);
    ScenarioManifold {
        name: "hopf-conformal-s3".into(),
        pointwise,
        integration,
        expected: ExpectedFlags {
            pair: PairFlags {
                self_adjoint: true,
                orthogonal: true,
                allowed: true,
                div_pp_star_zero: true,
                div_p_squared_zero: true,
            },
            integrand_degenerate: false,
        },
        provenance: "Hopf structure on S³ under the conformal change e^{2f}g, f = 0.3 p₀".into(),
        grid_policy: GridPolicy::Sphere,
        symmetry_axes: Vec::new(),
    }
    .verify()
}

/// Scenario for a CLI name.
pub fn by_name(name: &str) -> Result<ScenarioManifold> {
    match name {
        "flat-torus" => flat_torus_projectors(1, 1),
        "scaled-identity" => scaled_identity(&warped_torus(sin_profile)?, 2.0),
        "warped-torus" => warped_torus(sin_profile),
        "einstein-s3xt2" => einstein_s3xt2(),
        "hopf-s3" => hopf_contact_s3(),
        _ => Err(GeometryError::Unknown {
            kind: "scenario",
            name: name.to_string(),
        }),
    }
}
