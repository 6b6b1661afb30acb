//! Verification drivers: seeded pointwise sweeps and quadrature runs over a
//! scenario, each producing [`ResidualReport`]s.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::chart_geometry::ScalarField;
use crate::dist_tensors::{
    codazzi_residual, contact_identity_residual, lemma1_residual, prop3_residuals, trace_lemma_residuals,
    walczak_pointwise_residual, ContactVariant, FourFields,
};
use crate::endo_fields::{allowed_forms, check_pair};
use crate::error::{GeometryError, Result};
use crate::quadrature::{integral_formula_check, refinement_report, stokes_check, QuadratureGrid, IntegralOutcome};
use crate::report::{ResidualReport, ResidualStats};
use crate::sampling::{random_scalar_field, random_vector_field, rng, sample_points};
use crate::scenarios::ScenarioManifold;

/// Smallest accepted node count per axis.
pub const MIN_GRID: usize = 8;
/// Distinct random argument tuples cycled over the sample points.
const FIELD_POOL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    Pair,
    Allowed,
    Lemma1,
    Codazzi,
    Prop3,
    Walczak,
    Traces,
    Contact,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Pair,
        Check::Allowed,
        Check::Lemma1,
        Check::Codazzi,
        Check::Prop3,
        Check::Walczak,
        Check::Traces,
        Check::Contact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Pair => "pair",
            Check::Allowed => "allowed",
            Check::Lemma1 => "lemma1",
            Check::Codazzi => "codazzi",
            Check::Prop3 => "prop3",
            Check::Walczak => "walczak",
            Check::Traces => "traces",
            Check::Contact => "contact",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| GeometryError::Unknown {
            kind: "check",
            name: s.to_string(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Stokes,
    Formula,
}

impl FromStr for Which {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stokes" => Ok(Which::Stokes),
            "formula" => Ok(Which::Formula),
            _ => Err(GeometryError::Unknown {
                kind: "integral",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            points: 200,
            seed: 42,
            tol: 1e-6,
        }
    }
}

/// One random argument tuple.
#[derive(Clone, Debug)]
pub struct SampleArgs {
    pub fields: FourFields,
    pub f: ScalarField,
}

/// Seeded points and argument tuples; the same seed always yields the same
/// sample set.
pub fn samples(s: &ScenarioManifold, points: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<SampleArgs>)> {
    if points == 0 {
        return Err(GeometryError::EmptySamples);
    }
    let chart = &s.pointwise.chart;
    let dim = chart.dim();
    let mut r = rng(seed);
    let pts = sample_points(chart, points, &mut r)?;
    let args = (0..FIELD_POOL)
        .map(|_| SampleArgs {
            fields: FourFields {
                y: random_vector_field(&mut r, dim),
                x1: random_vector_field(&mut r, dim),
                x2: random_vector_field(&mut r, dim),
                z: random_vector_field(&mut r, dim),
            },
            f: random_scalar_field(&mut r, dim),
        })
        .collect();
    Ok((pts, args))
}

/// Parallel map over samples; each worker returns `(abs, normalized)`.
fn sweep(
    points: &[Vec<f64>],
    args: &[SampleArgs],
    f: impl Fn(&[f64], &SampleArgs) -> Result<(f64, f64)> + Sync,
) -> Result<ResidualStats> {
    let vals: Vec<(f64, f64)> = points
        .par_iter()
        .enumerate()
        .map(|(k, x)| f(x, &args[k % args.len()]))
        .collect::<Result<_>>()?;
    let mut st = ResidualStats::default();
    for (abs, norm) in vals {
        st.push_normalized(abs, norm);
    }
    Ok(st)
}

fn normalized(abs: f64, scale: f64) -> (f64, f64) {
    (abs, abs / (1.0 + scale))
}

fn require_contact(s: &ScenarioManifold) -> Result<()> {
    if s.has_contact() {
        Ok(())
    } else {
        Err(GeometryError::Unsupported(format!("scenario `{}` carries no almost contact structure", s.name)))
    }
}

/// Runs one pointwise check over `opts.points` seeded samples.
pub fn verify_check(s: &ScenarioManifold, check: Check, opts: &VerifyOptions) -> Result<ResidualReport> {
    if check == Check::Contact {
        require_contact(s)?;
    }
    let started = Instant::now();
    let (points, args) = samples(s, opts.points, opts.seed)?;
    let sc = &s.pointwise;
    let (chart, pair) = (&sc.chart, &sc.pair);
    let report = match check {
        Check::Pair => check_pair(pair, chart, &points, opts.tol)?,
        Check::Allowed => sweep(&points, &args, |x, a| {
            let f = allowed_forms(pair, chart, x, &a.fields.x1, &a.fields.y)?;
            Ok(normalized(f.max_norm(), f.scale))
        })?
        .report("allowed", opts.tol),
        Check::Lemma1 => sweep(&points, &args, |x, a| {
            let r = lemma1_residual(pair, chart, x, &a.fields.x1, &a.fields.y)?;
            Ok(normalized(r.max_norm(), r.scale))
        })?
        .report("lemma1", opts.tol),
        Check::Codazzi => sweep(&points, &args, |x, a| {
            let (sum, abs_sum) = codazzi_residual(pair, chart, x, &a.fields)?;
            Ok(normalized(sum.abs(), abs_sum))
        })?
        .report("codazzi", opts.tol),
        Check::Prop3 => {
            let p = pair.total();
            let div_free = pair.flags.div_pp_star_zero;
            sweep(&points, &args, |x, a| {
                let r = prop3_residuals(&p, chart, &a.fields.x1, &a.f, x)?;
                let abs = if div_free {
                    r.first.max(r.second).max(r.leibniz)
                } else {
                    // the first form then differs by ⟨X, div(PP*)⟩
                    (r.first - r.x_div_pp_star.abs()).abs().max(r.second)
                };
                Ok(normalized(abs, r.scale + r.x_div_pp_star.abs()))
            })?
            .report("prop3", opts.tol)
        }
        Check::Walczak => sweep(&points, &args, |x, _| {
            let w = walczak_pointwise_residual(pair, chart, x)?;
            Ok((w.residual(), w.normalized()))
        })?
        .report("walczak", opts.tol),
        Check::Traces => sweep(&points, &args, |x, _| {
            let t = trace_lemma_residuals(pair, chart, x)?;
            Ok((t.max_abs(), t.max_normalized()))
        })?
        .report("traces", opts.tol),
        Check::Contact => {
            let c = sc.contact.as_ref().expect("checked above");
            sweep(&points, &args, |x, a| {
                let r = contact_identity_residual(c, chart, &a.fields.x1, x)?;
                let abs = r.structure.max(r.pp_star).max(r.div_norm).max(r.plus.min(r.minus));
                Ok(normalized(abs, r.scale))
            })?
            .report("contact", opts.tol)
        }
    };
    Ok(report.with_scenario(&s.name).with_seed(opts.seed).with_runtime(started))
}

pub fn cmd_verify(s: &ScenarioManifold, checks: &[Check], opts: &VerifyOptions) -> Result<Vec<ResidualReport>> {
    checks.iter().map(|&c| verify_check(s, c, opts)).collect()
}

/// Worst-case residuals of the two sign readings of the contact identity.
#[derive(Clone, Copy, Debug)]
pub struct ContactSign {
    pub plus: f64,
    pub minus: f64,
    /// the single reading below tolerance, if exactly one is
    pub consistent: Option<ContactVariant>,
}

pub fn contact_sign(s: &ScenarioManifold, opts: &VerifyOptions) -> Result<ContactSign> {
    require_contact(s)?;
    let (points, args) = samples(s, opts.points, opts.seed)?;
    let c = s.pointwise.contact.as_ref().expect("checked above");
    let vals: Vec<(f64, f64)> = points
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let r = contact_identity_residual(c, &s.pointwise.chart, &args[k % args.len()].fields.x1, x)?;
            Ok((r.plus / (1.0 + r.scale), r.minus / (1.0 + r.scale)))
        })
        .collect::<Result<_>>()?;
    let plus = vals.iter().map(|v| v.0).fold(0.0, f64::max);
    let minus = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    let consistent = match (plus <= opts.tol, minus <= opts.tol) {
        (true, false) => Some(ContactVariant::Plus),
        (false, true) => Some(ContactVariant::Minus),
        _ => None,
    };
    Ok(ContactSign { plus, minus, consistent })
}

/// Expands a `--grid` value: a single count is a resolution level mapped by
/// the scenario, a full list is taken literally.
pub fn resolve_grid(s: &ScenarioManifold, spec: &[usize]) -> Result<Vec<usize>> {
    let dim = s.integration.chart.dim();
    if let Some(&n) = spec.iter().find(|&&n| n < MIN_GRID) {
        return Err(GeometryError::Grid(format!("{n} nodes per axis is below the minimum of {MIN_GRID}")));
    }
    match spec.len() {
        1 => Ok(s.grid_for(spec[0])),
        l if l == dim => Ok(spec.to_vec()),
        l => Err(GeometryError::Grid(format!("{l} node counts for a {dim}-dimensional chart"))),
    }
}

/// Companion resolution for the refinement pass: the next level for a
/// single count (skipping levels the scenario maps to the same grid), every
/// axis doubled for an explicit list.
pub fn refine_spec(s: &ScenarioManifold, spec: &[usize]) -> Result<Vec<usize>> {
    match spec {
        [n] => {
            let base = resolve_grid(s, spec)?;
            let mut level = 2 * n;
            loop {
                let counts = resolve_grid(s, &[level])?;
                if counts != base || level >= 16 * n {
                    return Ok(counts);
                }
                level *= 2;
            }
        }
        _ => resolve_grid(s, &spec.iter().map(|n| 2 * n).collect::<Vec<_>>()),
    }
}

fn run_integral(s: &ScenarioManifold, which: Which, counts: &[usize], seed: u64) -> Result<IntegralOutcome> {
    let sc = &s.integration;
    let grid = QuadratureGrid::new(&sc.chart, counts)?;
    match which {
        Which::Stokes => {
            let x = random_vector_field(&mut rng(seed), sc.chart.dim());
            stokes_check(&sc.pair.total(), &sc.chart, &x, &grid)
        }
        Which::Formula => integral_formula_check(&sc.pair, &sc.chart, &grid, &s.symmetry_axes),
    }
}

/// Integrals at the requested resolution and at the refined companion
/// resolution, in that order.
pub fn integrate_outcomes(s: &ScenarioManifold, which: Which, grid: &[usize], seed: u64) -> Result<(IntegralOutcome, IntegralOutcome)> {
    let base = run_integral(s, which, &resolve_grid(s, grid)?, seed)?;
    let refined = run_integral(s, which, &refine_spec(s, grid)?, seed)?;
    Ok((base, refined))
}

/// Floor below which a finer integral counts as converged regardless of the
/// coarse value, relative to the volume.
pub const REFINEMENT_FLOOR: f64 = 1e-10;

pub fn cmd_integrate(s: &ScenarioManifold, which: Which, grid: &[usize], seed: u64) -> Result<Vec<ResidualReport>> {
    let started = Instant::now();
    let (base, refined) = integrate_outcomes(s, which, grid, seed)?;
    let name = match which {
        Which::Stokes => "stokes",
        Which::Formula => "formula",
    };
    let refine = refinement_report(name, &refined, &base, REFINEMENT_FLOOR * refined.volume);
    Ok([base.report, refined.report, refine]
        .into_iter()
        .map(|r| r.with_scenario(&s.name).with_seed(seed).with_runtime(started))
        .collect())
}
