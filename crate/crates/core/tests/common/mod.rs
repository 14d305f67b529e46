#![allow(dead_code)]

use peerpred_core::model::{
    conditional_independent_product, sign_pattern, two_agent_table, ConditionalIndependent, SignMatrix,
};
use peerpred_core::{Distribution, Mat};
use rand::Rng;

pub const EXAMPLE_SIGNS: [[i8; 3]; 3] = [[1, -1, -1], [-1, 1, -1], [-1, -1, 1]];

pub fn example_signs() -> SignMatrix {
    EXAMPLE_SIGNS.iter().map(|r| r.to_vec()).collect()
}

pub fn normalized(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let total: f64 = rows.iter().flatten().sum();
    rows.into_iter().map(|r| r.into_iter().map(|x| x / total).collect()).collect()
}

/// Rejection sampler for two-agent tables whose Delta signs equal `signs`.
pub fn sample_with_signs(signs: &SignMatrix, rng: &mut impl Rng) -> Distribution {
    let (rows, cols) = (signs.len(), signs[0].len());
    loop {
        let w: Vec<Vec<f64>> = (0..rows)
            .map(|i| (0..cols).map(|j| rng.random_range(0.05..1.0) * if signs[i][j] > 0 { 3.0 } else { 1.0 }).collect())
            .collect();
        let mu = two_agent_table(&normalized(w)).unwrap();
        let pair = mu.pair_joint(0, 1);
        let delta = peerpred_core::model::DeltaMatrix::from_joint(&pair);
        if sign_pattern(&delta.values) == *signs {
            return mu;
        }
    }
}

pub fn random_stochastic_columns(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    let raw: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
    let sums: Vec<f64> = (0..cols).map(|c| raw.iter().map(|r| r[c]).sum()).collect();
    Mat::from_fn(rows, cols, |r, c| raw[r][c] / sums[c])
}

pub fn random_prior(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn random_ci(states: usize, signals: &[usize], rng: &mut impl Rng) -> (Distribution, ConditionalIndependent<f64>) {
    let prior = random_prior(states, rng);
    let likelihoods = signals.iter().map(|s| random_stochastic_columns(*s, states, rng)).collect();
    conditional_independent_product(prior, likelihoods).unwrap()
}

pub fn random_table(rows: usize, cols: usize, rng: &mut impl Rng) -> Distribution {
    let w = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
    two_agent_table(&normalized(w)).unwrap()
}
