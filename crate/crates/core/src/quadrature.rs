//! Tensor-product quadrature over chart domains.
//!
//! Periodic coordinates use the uniform rule with nodes offset by half a
//! spacing; bounded coordinates use Gauss–Legendre. Neither puts a node on
//! the interval ends, which keeps polar-type charts away from their poles.

use rayon::prelude::*;

use crate::chart_geometry::{Chart, VectorField};
use crate::dist_tensors::{div_p_trace, invariants_with_frame, FrameData};
use crate::endo_fields::{EndoField, EndoPair, PairAt};
use crate::error::{GeometryError, Result};
use crate::linalg::JMat;
use crate::report::ResidualReport;
use crate::sum::pairwise_sum;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisRule {
    UniformPeriodic,
    GaussLegendre,
}

#[derive(Clone, Debug)]
pub struct Axis {
    pub rule: AxisRule,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Product grid over a chart; node weights exclude the volume density, which
/// is applied at integration time.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    axes: Vec<Axis>,
    nominal: Vec<usize>,
}

impl QuadratureGrid {
    pub fn new(chart: &Chart, counts: &[usize]) -> Result<Self> {
        if counts.len() != chart.dim() {
            return Err(GeometryError::Grid(format!(
                "{} node counts for a {}-dimensional chart",
                counts.len(),
                chart.dim()
            )));
        }
        let mut axes = Vec::with_capacity(counts.len());
        for (k, &n) in counts.iter().enumerate() {
            if n == 0 {
                return Err(GeometryError::Grid(format!("axis {k} has no nodes")));
            }
            let (lo, hi) = chart.domain()[k];
            let len = hi - lo;
            let axis = if chart.periodic()[k] {
                let h = len / n as f64;
                Axis {
                    rule: AxisRule::UniformPeriodic,
                    nodes: (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect(),
                    weights: vec![h; n],
                }
            } else {
                let (x, w) = gauss_legendre(n);
                Axis {
                    rule: AxisRule::GaussLegendre,
                    nodes: x.iter().map(|t| lo + 0.5 * len * (t + 1.0)).collect(),
                    weights: w.iter().map(|w| 0.5 * len * w).collect(),
                }
            };
            axes.push(axis);
        }
        let grid = QuadratureGrid {
            axes,
            nominal: counts.to_vec(),
        };
        // a node on the singular locus is a construction error
        if let Some(locus) = chart.singular_locus() {
            for i in 0..grid.len() {
                let (x, _) = grid.node(i);
                if (locus.distance)(&x) <= 1e-12 {
                    return Err(GeometryError::Grid(format!(
                        "node {x:?} lies on the singular locus ({})",
                        locus.description
                    )));
                }
            }
        }
        Ok(grid)
    }

    /// Requested node counts per axis.
    pub fn counts(&self) -> Vec<usize> {
        self.nominal.clone()
    }

    /// Replaces each listed periodic axis by a single node carrying the full
    /// period. Exact for integrands that are constant along those axes,
    /// which the caller must guarantee.
    pub fn collapsed(&self, axes: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        for &k in axes {
            let a = out
                .axes
                .get_mut(k)
                .ok_or(GeometryError::Dimension { expected: self.axes.len(), got: k + 1 })?;
            if a.rule != AxisRule::UniformPeriodic {
                return Err(GeometryError::Grid(format!("axis {k} is not periodic and cannot be collapsed")));
            }
            let total: f64 = a.weights.iter().sum();
            a.nodes.truncate(1);
            a.weights = vec![total];
        }
        Ok(out)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Number of nodes actually evaluated.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `i` in row-major order (last axis fastest) and its weight.
    pub fn node(&self, mut i: usize) -> (Vec<f64>, f64) {
        let mut x = vec![0.0; self.axes.len()];
        let mut w = 1.0;
        for (k, a) in self.axes.iter().enumerate().rev() {
            let n = a.nodes.len();
            let j = i % n;
            i /= n;
            x[k] = a.nodes[j];
            w *= a.weights[j];
        }
        (x, w)
    }

    /// Evaluates `f` at every node in parallel, returning values in node
    /// order together with `w·√det g`.
    pub fn map<T: Send>(&self, chart: &Chart, f: impl Fn(&[f64]) -> Result<T> + Sync) -> Result<Vec<(T, f64)>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (x, w) = self.node(i);
                let g = chart.metric_at(&x)?;
                let v = f(&x)?;
                Ok((v, w * g.determinant().sqrt()))
            })
            .collect()
    }
}

/// `Σ w_k f(x_k) √det g(x_k)`.
pub fn integrate(chart: &Chart, f: impl Fn(&[f64]) -> Result<f64> + Sync, grid: &QuadratureGrid) -> Result<f64> {
    let vals = grid.map(chart, f)?;
    let terms: Vec<f64> = vals.iter().map(|(v, w)| v * w).collect();
    Ok(pairwise_sum(&terms))
}

pub fn volume(chart: &Chart, grid: &QuadratureGrid) -> Result<f64> {
    integrate(chart, |_| Ok(1.0), grid)
}

/// Normalized tolerance of the divergence-theorem check, relative to the
/// volume.
pub const STOKES_TOL: f64 = 1e-6;
/// Absolute tolerance of the integral formula, relative to the volume.
pub const FORMULA_ABS_TOL: f64 = 1e-8;
/// Relative tolerance of the integral formula, relative to `∫|integrand|`.
pub const FORMULA_REL_TOL: f64 = 1e-6;
/// `∫|integrand| ≤ DEGENERATE_TOL · Vol` marks a vanishing integrand.
pub const DEGENERATE_TOL: f64 = 1e-9;
/// Largest normalized `div(PP*)` on the nodes for the checks to run.
pub const PRECONDITION_TOL: f64 = 1e-8;

/// Everything measured by one quadrature check.
#[derive(Clone, Debug)]
pub struct IntegralOutcome {
    pub integral: f64,
    pub abs_integral: f64,
    pub volume: f64,
    /// largest |integrand| over the nodes
    pub max_pointwise: f64,
    /// largest normalized precondition residual over the nodes
    pub precondition: f64,
    pub degenerate: bool,
    pub report: ResidualReport,
}

/// `g⁻¹`-norm of `div S` relative to the size of `S`.
fn div_residual(lg: &crate::chart_geometry::LocalGeometry, s: &JMat) -> f64 {
    let d = lg.div_endo_trace(s);
    let up = lg.metric_inv().apply(&d);
    let abs = lg.inner(&up, &up).value().max(0.0).sqrt();
    abs / (1.0 + crate::linalg::frobenius(&s.values()))
}

struct NodeValue {
    f: f64,
    pre: f64,
}

fn summarize(vals: &[(NodeValue, f64)]) -> (f64, f64, f64, f64, f64) {
    let terms: Vec<f64> = vals.iter().map(|(v, w)| v.f * w).collect();
    let abs_terms: Vec<f64> = terms.iter().map(|t| t.abs()).collect();
    let vol_terms: Vec<f64> = vals.iter().map(|(_, w)| *w).collect();
    let max_pointwise = vals.iter().map(|(v, _)| v.f.abs()).fold(0.0, f64::max);
    let pre = vals.iter().map(|(v, _)| v.pre).fold(0.0, f64::max);
    (
        pairwise_sum(&terms),
        pairwise_sum(&abs_terms),
        pairwise_sum(&vol_terms),
        max_pointwise,
        pre,
    )
}

/// `∫ div_P X d vol`, which vanishes on a closed manifold when
/// `div(PP*) = 0`.
pub fn stokes_check(p: &EndoField, chart: &Chart, xf: &VectorField, grid: &QuadratureGrid) -> Result<IntegralOutcome> {
    let vals = grid.map(chart, |x| {
        let lg = chart.local(x, 1)?;
        let pm = lg.endo(p);
        let s = pm.matmul(&lg.adjoint(&pm));
        Ok(NodeValue {
            f: div_p_trace(&lg, &pm, &lg.vector(xf)).value(),
            pre: div_residual(&lg, &s),
        })
    })?;
    let (integral, abs_integral, volume, max_pointwise, precondition) = summarize(&vals);
    let mut report = if precondition <= PRECONDITION_TOL {
        let norm = integral.abs() / volume;
        ResidualReport::pointwise("stokes", grid.len(), integral.abs(), norm, STOKES_TOL)
    } else {
        let mut r = ResidualReport::pointwise("stokes-skipped", grid.len(), precondition, precondition, PRECONDITION_TOL);
        r.pass = false;
        r
    };
    report.grid = Some(grid.counts());
    Ok(IntegralOutcome {
        integral,
        abs_integral,
        volume,
        max_pointwise,
        precondition,
        degenerate: false,
        report,
    })
}

/// `∫ (S_mix + ‖h₁‖² + ‖h₂‖² − ‖T₁‖² − ‖T₂‖² − ‖H₁‖² − ‖H₂‖²) d vol` for a
/// self-adjoint allowed pair with `div(P²) = 0`.
///
/// `symmetric` lists periodic axes along which the metric and the pair are
/// invariant; the integrand is then constant along them and they are
/// collapsed to one node.
pub fn integral_formula_check(pair: &EndoPair, chart: &Chart, grid: &QuadratureGrid, symmetric: &[usize]) -> Result<IntegralOutcome> {
    let eval_grid = grid.collapsed(symmetric)?;
    let vals = eval_grid.map(chart, |x| {
        let lg = chart.local(x, 2)?;
        let pa = PairAt::new(&lg, pair);
        let p = pa.total();
        let frame = FrameData::gram_schmidt(&lg);
        let inv = invariants_with_frame(&pa, &frame, true).inv;
        Ok(NodeValue {
            f: inv.walczak_rhs(),
            pre: div_residual(&lg, &p.matmul(&p)),
        })
    })?;
    let (integral, abs_integral, volume, max_pointwise, precondition) = summarize(&vals);
    let degenerate = abs_integral <= DEGENERATE_TOL * volume;
    let mut report = if precondition <= PRECONDITION_TOL {
        let denom = (FORMULA_ABS_TOL * volume / FORMULA_REL_TOL).max(abs_integral);
        let mut r = ResidualReport::pointwise("formula", eval_grid.len(), integral.abs(), integral.abs() / denom, FORMULA_REL_TOL);
        r.pass = degenerate || integral.abs() <= (FORMULA_ABS_TOL * volume).max(FORMULA_REL_TOL * abs_integral);
        r.degenerate = Some(degenerate);
        r
    } else {
        let mut r = ResidualReport::pointwise("formula-skipped", eval_grid.len(), precondition, precondition, PRECONDITION_TOL);
        r.pass = false;
        r
    };
    report.grid = Some(grid.counts());
    Ok(IntegralOutcome {
        integral,
        abs_integral,
        volume,
        max_pointwise,
        precondition,
        degenerate,
        report,
    })
}

/// Compares a check at two resolutions: passes when the finer integral
/// passes and is no larger than the coarser one, or already below `floor`.
pub fn refinement_report(check: &str, fine: &IntegralOutcome, coarse: &IntegralOutcome, floor: f64) -> ResidualReport {
    let diff = (fine.integral - coarse.integral).abs();
    let mut r = ResidualReport::pointwise(
        format!("{check}-refinement"),
        fine.report.samples + coarse.report.samples,
        diff,
        diff / fine.volume,
        STOKES_TOL,
    );
    r.pass = fine.report.pass && (fine.integral.abs() <= coarse.integral.abs() || fine.integral.abs() <= floor);
    r.degenerate = fine.report.degenerate;
    r.grid = fine.report.grid.clone();
    r
}

/// Observed error reduction `|I(coarse)| / |I(fine)|`.
pub fn reduction_ratio(fine: &IntegralOutcome, coarse: &IntegralOutcome) -> f64 {
    coarse.integral.abs() / fine.integral.abs().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use crate::linalg::JVec;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 8, 13, 32] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn flat_torus_volume_and_periodic_mean() {
        let chart = Chart::torus(2, |_| JMat::identity(2)).unwrap();
        let grid = QuadratureGrid::new(&chart, &[16, 16]).unwrap();
        assert!((volume(&chart, &grid).unwrap() - TAU * TAU).abs() < 1e-11);
        let i = integrate(&chart, |x| Ok(x[0].sin()), &grid).unwrap();
        assert!(i.abs() < 1e-12);
    }

    #[test]
    fn periodic_trapezoid_exact_on_trig_polynomials() {
        let chart = Chart::torus(1, |_| JMat::identity(1)).unwrap();
        let grid = QuadratureGrid::new(&chart, &[12]).unwrap();
        let i = integrate(&chart, |x| Ok((3.0 * x[0]).cos().powi(2) + (5.0 * x[0]).sin()), &grid).unwrap();
        assert!((i - PI).abs() < 1e-12);
    }

    #[test]
    fn hyperspherical_volume() {
        let chart = Chart::new(vec![(0.0, PI), (0.0, PI), (0.0, TAU)], vec![false, false, true], |x: &[Jet]| {
            let s = x[0].sin();
            let t = x[1].sin();
            JMat::diagonal(&[Jet::constant(1.0), s * s, s * s * t * t])
        })
        .unwrap();
        let grid = QuadratureGrid::new(&chart, &[16, 16, 8]).unwrap();
        let v = volume(&chart, &grid).unwrap();
        assert!((v / (2.0 * PI * PI) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn node_on_singular_locus_is_rejected() {
        let chart = Chart::torus(1, |_| JMat::identity(1))
            .unwrap()
            .with_singular_locus("mid", |x: &[f64]| (x[0] - PI).abs());
        assert!(QuadratureGrid::new(&chart, &[3]).is_err());
        assert!(QuadratureGrid::new(&chart, &[4]).is_ok());
    }

    #[test]
    fn collapsing_a_symmetric_axis_keeps_the_integral() {
        let chart = Chart::torus(2, |x: &[Jet]| JMat::diagonal(&[Jet::constant(1.0), (x[0].sin() * 2.0).exp()])).unwrap();
        let grid = QuadratureGrid::new(&chart, &[32, 32]).unwrap();
        let full = integrate(&chart, |x| Ok(x[0].cos().powi(2)), &grid).unwrap();
        let small = grid.collapsed(&[1]).unwrap();
        assert_eq!(small.len(), 32);
        assert_eq!(small.counts(), vec![32, 32]);
        let reduced = integrate(&chart, |x| Ok(x[0].cos().powi(2)), &small).unwrap();
        assert!((full - reduced).abs() < 1e-12 * full.abs());
        let bounded = Chart::new(vec![(0.0, 1.0)], vec![false], |_| JMat::identity(1)).unwrap();
        assert!(QuadratureGrid::new(&bounded, &[8]).unwrap().collapsed(&[0]).is_err());
    }

    #[test]
    fn stokes_identity_on_flat_torus() {
        let chart = Chart::torus(2, |_| JMat::identity(2)).unwrap();
        let xf = VectorField::new(|x: &[Jet]| JVec::from_fn(2, |i| (x[0] * 2.0 + x[1] * (i as f64 + 1.0)).sin() + x[1].cos() * 0.5));
        let grid = QuadratureGrid::new(&chart, &[64, 64]).unwrap();
        let out = stokes_check(&EndoField::identity(2), &chart, &xf, &grid).unwrap();
        assert!(out.integral.abs() < 1e-12);
        assert!(out.report.pass);
        let out = stokes_check(&EndoField::identity(2).scaled(2.0), &chart, &xf, &grid).unwrap();
        assert!(out.integral.abs() < 1e-12);
    }
}
