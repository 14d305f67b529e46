use rayon::prelude::*;
use serde::Serialize;

use super::{CheckKind, CheckReport, CheckWitness};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ProblemInstance;
use crate::scalar::{max_abs_diff, tolerance, Scalar};

pub const DEFAULT_MAX_PERMUTED_REPORTS: usize = 8;

/// `A_{μ̃}[r] = A_μ[π(r)]` for every report `r` of `agent`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PermutationWitness<S> {
    pub mu: usize,
    pub mu_tilde: usize,
    pub agent: usize,
    pub permutation: Vec<usize>,
    pub joint: Matrix<S>,
    pub permuted_joint: Matrix<S>,
}

/// Searches for a permutation of report rows mapping `a` onto `b` that moves
/// at least one realized report.
fn matching_permutation<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Option<Vec<usize>> {
    let n = a.rows();
    let tol = S::tol(tolerance::COLLISION);
    let realized: Vec<bool> = (0..n).map(|r| a.row(r).iter().any(|x| *x > S::zero())).collect();
    // candidates[r] = rows c of `a` with b[r] ≈ a[c]
    let candidates: Vec<Vec<usize>> =
        (0..n).map(|r| (0..n).filter(|c| max_abs_diff(b.row(r), a.row(*c)) <= tol).collect()).collect();
    fn search(
        r: usize,
        candidates: &[Vec<usize>],
        realized: &[bool],
        used: &mut [bool],
        perm: &mut Vec<usize>,
        moved: bool,
    ) -> bool {
        if r == candidates.len() {
            return moved;
        }
        for &c in &candidates[r] {
            if used[c] {
                continue;
            }
            used[c] = true;
            perm.push(c);
            if search(r + 1, candidates, realized, used, perm, moved || (c != r && realized[c])) {
                return true;
            }
            perm.pop();
            used[c] = false;
        }
        false
    }
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    search(0, &candidates, &realized, &mut used, &mut perm, false).then_some(perm)
}

pub fn check_permutation<S: Scalar>(instance: &ProblemInstance<S>) -> Result<CheckReport<S>> {
    check_permutation_with_limit(instance, DEFAULT_MAX_PERMUTED_REPORTS)
}

/// Violated if permuting the report rows of some `A_μ` yields some `A_{μ̃}`,
/// for a permutation that moves a realized report.
pub fn check_permutation_with_limit<S: Scalar>(
    instance: &ProblemInstance<S>,
    max_reports: usize,
) -> Result<CheckReport<S>> {
    for i in 0..instance.agent_count() {
        if instance.report_count(i) > max_reports {
            return Err(Error::ResourceLimit(format!(
                "agent {i} has {} reports, the permutation check allows {max_reports}",
                instance.report_count(i)
            )));
        }
    }
    let joints: Vec<Vec<Matrix<S>>> = (0..instance.agent_count())
        .map(|i| (0..instance.distribution_count()).map(|d| instance.report_joint(d, i)).collect())
        .collect();
    let tasks: Vec<(usize, usize)> =
        (0..instance.distribution_count()).flat_map(|d| (0..instance.agent_count()).map(move |i| (d, i))).collect();
    let found = tasks
        .par_iter()
        .map(|&(d, i)| {
            let a = &joints[i][d];
            joints[i].iter().enumerate().find_map(|(e, b)| {
                matching_permutation(a, b).map(|permutation| PermutationWitness {
                    mu: d,
                    mu_tilde: e,
                    agent: i,
                    permutation,
                    joint: a.clone(),
                    permuted_joint: b.clone(),
                })
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .next();
    Ok(CheckReport::from_witness(CheckKind::Permutation, found.map(CheckWitness::Permutation)))
}
