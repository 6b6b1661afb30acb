//! Seeded sample points and random smooth test fields.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart_geometry::{Chart, ScalarField, VectorField};
use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::linalg::JVec;

/// Points closer than this to a non-periodic boundary or to the singular
/// locus are rejected.
pub const CLEARANCE: f64 = 1e-3;

const MAX_REJECTIONS: usize = 100_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One uniform point in the chart domain at clearance at least [`CLEARANCE`].
pub fn sample_point<R: Rng>(chart: &Chart, rng: &mut R) -> Result<Vec<f64>> {
    for _ in 0..MAX_REJECTIONS {
        let x: Vec<f64> = chart.domain().iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        if chart.clearance(&x) >= CLEARANCE {
            return Ok(x);
        }
    }
    Err(GeometryError::Scenario("sampling rejected every candidate point".into()))
}

pub fn sample_points<R: Rng>(chart: &Chart, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    (0..n).map(|_| sample_point(chart, rng)).collect()
}

/// A sum of plane waves `a sin(k·x + φ)` with integer wave vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries {
    pub offset: f64,
    pub modes: Vec<(f64, Vec<i32>, f64)>,
}

impl TrigSeries {
    pub fn random<R: Rng>(rng: &mut R, dim: usize, modes: usize, max_wave: i32) -> Self {
        TrigSeries {
            offset: rng.gen_range(-0.5..0.5),
            modes: (0..modes)
                .map(|_| {
                    // half the entries vanish so that modes are not all
                    // averaged out along some periodic axis
                    let k: Vec<i32> = (0..dim)
                        .map(|_| {
                            if rng.gen_bool(0.5) {
                                0
                            } else {
                                let m = rng.gen_range(1..=max_wave);
                                if rng.gen_bool(0.5) { m } else { -m }
                            }
                        })
                        .collect();
                    (rng.gen_range(-1.0..1.0), k, rng.gen_range(0.0..std::f64::consts::TAU))
                })
                .collect(),
        }
    }

    pub fn eval(&self, x: &[Jet]) -> Jet {
        let mut acc = Jet::constant(self.offset);
        for (a, k, ph) in &self.modes {
            let mut arg = Jet::constant(*ph);
            for (xi, &ki) in x.iter().zip(k) {
                if ki != 0 {
                    arg += *xi * ki as f64;
                }
            }
            acc += arg.sin() * *a;
        }
        acc
    }
}

/// Random smooth vector field with trigonometric components.
pub fn random_vector_field<R: Rng>(rng: &mut R, dim: usize) -> VectorField {
    let comps: Vec<TrigSeries> = (0..dim).map(|_| TrigSeries::random(rng, dim, 2, 2)).collect();
    VectorField::new(move |x| JVec::from_fn(comps.len(), |i| comps[i].eval(x)))
}

pub fn random_scalar_field<R: Rng>(rng: &mut R, dim: usize) -> ScalarField {
    let s = TrigSeries::random(rng, dim, 2, 2);
    ScalarField::new(move |x| s.eval(x))
}

/// Random orthogonal matrix from the QR factorization of a random matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}
