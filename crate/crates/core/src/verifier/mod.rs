//! Expected payments, strict-truthfulness verification and simulation.

mod expectation;
mod simulate;
mod strategy;
mod verify;

pub use expectation::{
    expected_payment, expected_payment_enumerated, report_joints, task_report_joint, DEFAULT_TERM_BUDGET,
};
pub use simulate::{simulate, SimulationReport};
pub use strategy::Strategy;
pub use verify::{
    best_deviation, verify_consistent, verify_strict, Status, Verdict, VerificationMode, VerifyOptions, Witness,
};
