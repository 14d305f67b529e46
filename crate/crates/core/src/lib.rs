//! Certification, refutation and synthesis of strictly truthful multi-task
//! peer prediction mechanisms.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! bottom fix `f64`.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod mechanisms;
pub mod model;
pub mod scalar;
pub mod synthesis;
pub mod tensor;
pub mod verifier;

pub use error::{Error, Result};
pub use geometry::{cell_boundaries_2simplex, fit_power_diagram, CellAssignment, FitOutcome, Segment};
pub use linalg::Matrix;
pub use mechanisms::{PaymentRule, ScoringMechanism};
pub use model::{JointDistribution, ProblemInstance, ReportFunction, ReportValue};
pub use scalar::{tolerance, Scalar};
pub use synthesis::{synthesize_scoring, synthesize_with_statistic, Statistic, SynthesisResult, SynthesisStatus};
pub use verifier::{verify_strict, Status, Strategy, Verdict, VerificationMode, VerifyOptions};

pub type Distribution = model::JointDistribution<f64>;
pub type Instance = model::ProblemInstance<f64>;
pub type Mechanism = mechanisms::ScoringMechanism<f64>;
pub type Diagram = geometry::PowerDiagram<f64>;
pub type Factorization = model::ConditionalIndependent<f64>;
pub type Params = mechanisms::FactoredParams<f64>;
pub type Mat = linalg::Matrix<f64>;
