use serde::Serialize;

use super::scoring::ScoringMechanism;
use crate::error::{Error, Result};
use crate::model::SignMatrix;
use crate::scalar::Scalar;
use crate::tensor::MixedRadix;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Applicability {
    Yes,
    No(String),
}

fn check_rectangular(signs: &SignMatrix) -> Result<(usize, usize)> {
    let rows = signs.len();
    let cols = signs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || signs.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("sign matrix must be a nonempty rectangle".into()));
    }
    if signs.iter().flatten().any(|s| !(-1..=1).contains(s)) {
        return Err(Error::Validation("sign entries must be -1, 0 or 1".into()));
    }
    Ok((rows, cols))
}

/// Distinct rows, distinct columns and no zero entry.
pub fn ca_applicable(signs: &SignMatrix) -> Applicability {
    let (rows, cols) = match check_rectangular(signs) {
        Ok(shape) => shape,
        Err(e) => return Applicability::No(e.to_string()),
    };
    for (r, row) in signs.iter().enumerate() {
        if let Some(c) = row.iter().position(|s| *s == 0) {
            return Applicability::No(format!("zero sign at ({r}, {c})"));
        }
    }
    for a in 0..rows {
        for b in a + 1..rows {
            if signs[a] == signs[b] {
                return Applicability::No(format!("rows {a} and {b} are identical"));
            }
        }
    }
    let column = |c: usize| signs.iter().map(move |r| r[c]);
    for a in 0..cols {
        for b in a + 1..cols {
            if column(a).eq(column(b)) {
                return Applicability::No(format!("columns {a} and {b} are identical"));
            }
        }
    }
    Applicability::Yes
}

/// `Sign[my, same] − mean_k Sign[my, other_k]`.
pub fn ca_payment<S: Scalar>(signs: &SignMatrix, my: usize, same: usize, others: &[usize]) -> Result<S> {
    let (rows, cols) = check_rectangular(signs)?;
    if my >= rows {
        return Err(Error::Index(format!("report {my} (sign matrix has {rows} rows)")));
    }
    if let Some(bad) = std::iter::once(&same).chain(others).find(|c| **c >= cols) {
        return Err(Error::Index(format!("peer report {bad} (sign matrix has {cols} columns)")));
    }
    if others.is_empty() {
        return Err(Error::NotApplicable("the off-task term needs at least one other task".into()));
    }
    let row = &signs[my];
    let off: S =
        others.iter().map(|c| S::from(row[*c]).expect("small integer")).sum::<S>() / S::from_usize_lossy(others.len());
    Ok(S::from(row[same]).expect("small integer") - off)
}

/// The CA mechanism for two agents over `T ≥ 2` tasks; agent 2 scores with the transpose.
pub fn ca_mechanism<S: Scalar>(signs: &SignMatrix, task_count: usize) -> Result<ScoringMechanism<S>> {
    let (rows, cols) = check_rectangular(signs)?;
    if task_count < 2 {
        return Err(Error::NotApplicable("CA compares across tasks and needs T ≥ 2".into()));
    }
    if let Some((r, c)) = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).find(|(r, c)| signs[*r][*c] == 0) {
        return Err(Error::NotApplicable(format!("zero sign at ({r}, {c})")));
    }
    let transposed: SignMatrix = (0..cols).map(|c| (0..rows).map(|r| signs[r][c]).collect()).collect();
    let radix = [MixedRadix::uniform(cols, task_count - 1), MixedRadix::uniform(rows, task_count - 1)];
    let tables = [signs, &transposed];
    let mut digits = vec![0; task_count - 1];
    ScoringMechanism::uniform_from_fn(&[rows, cols], &[cols, rows], task_count, |i, y, a, b| {
        radix[i].decode_into(b, &mut digits);
        ca_payment(tables[i], y, a, &digits).expect("indices within the sign matrix")
    })
}
