//! Distributions, report maps and the probabilistic objects derived from them.

pub mod delta;
pub mod distribution;
pub mod factorization;
pub mod instance;
pub mod posterior_sets;
pub mod report;

pub use delta::{delta_matrix, sign_of, sign_pattern, DeltaMatrix, SignMatrix};
pub use distribution::{two_agent_table, JointDistribution};
pub use factorization::{binary_symmetric, conditional_independent_product, ConditionalIndependent, LikelihoodMatrix};
pub use instance::{AgentReports, ProblemInstance, RealizedSignal, ReportFunction};
pub use posterior_sets::{marginal_buckets, posterior_sets, Grouping, MarginalBucket, PosteriorSet};
pub use report::{ReportRegistry, ReportValue};
