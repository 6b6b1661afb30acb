//! Chart-based tensor calculus for pairs of singular distributions.
//!
//! A singular distribution is the image of a smooth endomorphism field `P`
//! of the tangent bundle. Given a pair `(P₁, P₂)` on a Riemannian chart, this
//! crate evaluates the structural tensors, curvature-type tensors and
//! divergence operators built from the pair, and checks the identities they
//! satisfy pointwise and by quadrature.
//!
//! Every field is a closure over [`Jet`]s, so first and second derivatives of
//! composite fields are exact.

pub mod chart_geometry;
pub mod dist_tensors;
pub mod endo_fields;
pub mod error;
pub mod jet;
pub mod linalg;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod scenarios;
pub mod suite;
pub mod sum;

pub use chart_geometry::{
    christoffel, cov_deriv_vector, div_endo, div_vector, einstein_tensor, metric_jet, riemann, Chart,
    ConnectionCoeffs, LocalGeometry, MetricJet, RiemannTensor, ScalarField, VectorField,
};
pub use endo_fields::{adjoint, allowed_forms, check_pair, sqrt_psd, EndoField, EndoPair, PairFlag, PairFlags};
pub use error::{GeometryError, Result};
pub use jet::Jet;
pub use linalg::{JMat, JVec};
pub use report::ResidualReport;
