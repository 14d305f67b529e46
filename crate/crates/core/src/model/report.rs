use serde::Serialize;

use crate::scalar::{max_abs_diff, tolerance, Scalar};

/// A report value: a real vector or a symbolic label.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ReportValue<S> {
    Vector(Vec<S>),
    Symbol(String),
}

impl<S: Scalar> ReportValue<S> {
    /// Vectors match when every coordinate differs by less than the dedup tolerance.
    pub fn matches(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Vector(a), Self::Vector(b)) => a.len() == b.len() && max_abs_diff(a, b) < S::tol(tolerance::DEDUP),
            (Self::Symbol(a), Self::Symbol(b)) => a == b,
            _ => false,
        }
    }

    pub fn as_vector(&self) -> Option<&[S]> {
        match self {
            Self::Vector(v) => Some(v),
            Self::Symbol(_) => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Symbol(s) => s.clone(),
            Self::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{:.4}", x.to_f64_lossy())).collect();
                format!("({})", parts.join(", "))
            }
        }
    }
}

/// Interns report values by first match, so that the canonical key of a
/// value is its index in [`ReportRegistry::values`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportRegistry<S> {
    values: Vec<ReportValue<S>>,
}

impl<S: Scalar> ReportRegistry<S> {
    pub fn new() -> Self {
        Self { values: Vec::new() }
    }

    pub fn intern(&mut self, value: ReportValue<S>) -> usize {
        if let Some(k) = self.find(&value) {
            return k;
        }
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn find(&self, value: &ReportValue<S>) -> Option<usize> {
        self.values.iter().position(|v| v.matches(value))
    }

    pub fn values(&self) -> &[ReportValue<S>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<ReportValue<S>> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
