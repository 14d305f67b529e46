//! Power diagrams over probability simplices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scalar::{dot, tolerance, Scalar};

/// Sites `v^k ∈ R^m` and weights `w^k`; the cell of `k` is where
/// `⟨u, v^k⟩ − w^k` is strictly smallest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerDiagram<S> {
    sites: Vec<Vec<S>>,
    weights: Vec<S>,
    labels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CellAssignment {
    Winner(usize),
    Tie(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FitOutcome<S> {
    /// A diagram separating every labeled point by at least `margin`.
    Feasible { diagram: PowerDiagram<S>, margin: S },
    /// Best achievable margin was `best_margin`, below what was required.
    Infeasible { best_margin: S },
}

/// A boundary piece between two cells, endpoints in barycentric coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment<S> {
    pub labels: (usize, usize),
    pub start: [S; 3],
    pub end: [S; 3],
}

pub fn power_distance<S: Scalar>(u: &[S], site: &[S], weight: S) -> Result<S> {
    if u.len() != site.len() {
        return Err(Error::Shape(format!("point has dimension {}, site has {}", u.len(), site.len())));
    }
    Ok(dot(u, site) - weight)
}

impl<S: Scalar> PowerDiagram<S> {
    pub fn new(sites: Vec<Vec<S>>, weights: Vec<S>, labels: Vec<usize>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Shape("a power diagram needs at least one site".into()));
        }
        if weights.len() != sites.len() || labels.len() != sites.len() {
            return Err(Error::Shape("sites, weights and labels differ in length".into()));
        }
        let m = sites[0].len();
        if sites.iter().any(|s| s.len() != m) {
            return Err(Error::Shape("sites differ in dimension".into()));
        }
        Ok(Self { sites, weights, labels })
    }

    /// Labels `0..K`.
    pub fn unlabeled(sites: Vec<Vec<S>>, weights: Vec<S>) -> Result<Self> {
        let labels = (0..sites.len()).collect();
        Self::new(sites, weights, labels)
    }

    /// Converts the squared form `‖u − v‖² − w` to inner-product form.
    pub fn from_squared_form(sites: Vec<Vec<S>>, weights: Vec<S>, labels: Vec<usize>) -> Result<Self> {
        let two = S::lit(2.0);
        let converted_weights = sites.iter().zip(&weights).map(|(v, w)| *w - dot(v, v)).collect();
        let converted_sites = sites.into_iter().map(|v| v.into_iter().map(|x| -two * x).collect()).collect();
        Self::new(converted_sites, converted_weights, labels)
    }

    pub fn dimension(&self) -> usize {
        self.sites[0].len()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> &[Vec<S>] {
        &self.sites
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn position(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    pub fn distances(&self, u: &[S]) -> Result<Vec<S>> {
        self.sites.iter().zip(&self.weights).map(|(v, w)| power_distance(u, v, *w)).collect()
    }

    pub fn cell_assign(&self, u: &[S]) -> Result<CellAssignment> {
        let d = self.distances(u)?;
        let min = d.iter().copied().fold(S::infinity(), S::min);
        let tol = S::tol(tolerance::TIE);
        let near: Vec<usize> =
            d.iter().enumerate().filter(|(_, x)| **x - min <= tol).map(|(k, _)| self.labels[k]).collect();
        Ok(if near.len() == 1 { CellAssignment::Winner(near[0]) } else { CellAssignment::Tie(near) })
    }

    /// `min_{k ≠ label} d_k(u) − d_label(u)`; positive when `u` is strictly in the cell of `label`.
    pub fn margin_at(&self, u: &[S], label: usize) -> Result<S> {
        let k = self.position(label).ok_or_else(|| Error::Index(format!("label {label}")))?;
        let d = self.distances(u)?;
        Ok(d.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, x)| *x - d[k]).fold(S::infinity(), S::min))
    }
}

/// Fits sites and weights in `[-1, 1]` maximizing the smallest separation margin.
///
/// Every point of label `ℓ` must satisfy `d_k(u) − d_ℓ(u) ≥ t` for all other
/// labels `k`. The result is feasible when the optimal `t` exceeds both the
/// strictness threshold and `margin`.
pub fn fit_power_diagram<S: Scalar>(labeled: &[(usize, Vec<Vec<S>>)], margin: S) -> Result<FitOutcome<S>> {
    if let Some((label, _)) = labeled.iter().find(|(_, pts)| pts.is_empty()) {
        return Err(Error::DegenerateInput(format!("labeled set {label} is empty")));
    }
    let m = labeled.first().map(|(_, p)| p[0].len()).ok_or_else(|| Error::DegenerateInput("no labeled sets".into()))?;
    for (label, pts) in labeled {
        for p in pts {
            if p.len() != m {
                return Err(Error::Shape(format!("point of label {label} has dimension {}", p.len())));
            }
            let total: S = p.iter().copied().sum();
            if p.iter().any(|x| *x < -S::tol(tolerance::SIMPLEX))
                || (total - S::one()).abs() > S::tol(tolerance::SIMPLEX)
            {
                return Err(Error::Shape(format!("point of label {label} is off the simplex")));
            }
        }
    }
    let labels: Vec<usize> = labeled.iter().map(|(l, _)| *l).collect();
    let k = labeled.len();
    if k == 1 {
        let diagram = PowerDiagram::new(vec![vec![S::zero(); m]], vec![S::zero()], labels)?;
        return Ok(FitOutcome::Feasible { diagram, margin: S::infinity() });
    }

    let block = m + 1;
    let t = k * block;
    let mut lp = LinearProgram::new(t + 1);
    for j in 0..t {
        lp.set_bounds(j, Some(-S::one()), Some(S::one()));
    }
    lp.set_bounds(t, None, None);
    lp.set_objective(t, S::one());
    let mut seen: Vec<Vec<S>> = Vec::new();
    for (own, (_, pts)) in labeled.iter().enumerate() {
        for u in pts {
            for other in (0..k).filter(|o| *o != own) {
                let mut row = vec![S::zero(); t + 1];
                for (j, x) in u.iter().enumerate() {
                    row[other * block + j] += *x;
                    row[own * block + j] -= *x;
                }
                row[other * block + m] = -S::one();
                row[own * block + m] = S::one();
                row[t] = -S::one();
                if !seen.contains(&row) {
                    seen.push(row.clone());
                    lp.add_constraint(row, Relation::Ge, S::zero());
                }
            }
        }
    }
    match lp.maximize()? {
        LpOutcome::Optimal { x, objective, .. } => {
            if objective > S::lit(tolerance::LP_MARGIN) && objective >= margin {
                let sites = (0..k).map(|c| x[c * block..c * block + m].to_vec()).collect();
                let weights = (0..k).map(|c| x[c * block + m]).collect();
                Ok(FitOutcome::Feasible { diagram: PowerDiagram::new(sites, weights, labels)?, margin: objective })
            } else {
                Ok(FitOutcome::Infeasible { best_margin: objective })
            }
        }
        LpOutcome::Infeasible { .. } | LpOutcome::Unbounded => {
            Err(Error::Numerical("separation LP has a bounded feasible optimum but the solver disagreed".into()))
        }
    }
}

/// Cell boundaries of a diagram over the 2-simplex, clipped to the triangle.
pub fn cell_boundaries_2simplex<S: Scalar>(diagram: &PowerDiagram<S>) -> Result<Vec<Segment<S>>> {
    if diagram.dimension() != 3 {
        return Err(Error::Shape(format!("boundaries need m = 3, diagram has m = {}", diagram.dimension())));
    }
    // d_k(x, y) = a x + b y + c with q = (x, y, 1 − x − y)
    let affine: Vec<[S; 3]> =
        diagram.sites.iter().zip(&diagram.weights).map(|(v, w)| [v[0] - v[2], v[1] - v[2], v[2] - *w]).collect();
    let eps = S::tol(1e-12);
    let mut out = Vec::new();
    for k in 0..affine.len() {
        for l in k + 1..affine.len() {
            let g = [affine[k][0] - affine[l][0], affine[k][1] - affine[l][1], affine[k][2] - affine[l][2]];
            let norm2 = g[0] * g[0] + g[1] * g[1];
            if norm2 <= eps {
                continue;
            }
            let base = [-g[2] * g[0] / norm2, -g[2] * g[1] / norm2];
            let dir = [-g[1], g[0]];
            let (mut lo, mut hi) = (S::neg_infinity(), S::infinity());
            // half-planes α x + β y + γ ≤ 0
            let mut planes: Vec<[S; 3]> = vec![
                [-S::one(), S::zero(), S::zero()],
                [S::zero(), -S::one(), S::zero()],
                [S::one(), S::one(), -S::one()],
            ];
            for (j, a) in affine.iter().enumerate() {
                if j != k && j != l {
                    planes.push([affine[k][0] - a[0], affine[k][1] - a[1], affine[k][2] - a[2]]);
                }
            }
            let mut empty = false;
            for p in planes {
                let g0 = p[0] * base[0] + p[1] * base[1] + p[2];
                let g1 = p[0] * dir[0] + p[1] * dir[1];
                if g1.abs() <= eps {
                    if g0 > eps {
                        empty = true;
                    }
                } else if g1 > S::zero() {
                    hi = hi.min(-g0 / g1);
                } else {
                    lo = lo.max(-g0 / g1);
                }
            }
            if empty || !(hi - lo > eps) {
                continue;
            }
            let point = |t: S| {
                let x = base[0] + t * dir[0];
                let y = base[1] + t * dir[1];
                [x, y, S::one() - x - y]
            };
            out.push(Segment { labels: (diagram.labels[k], diagram.labels[l]), start: point(lo), end: point(hi) });
        }
    }
    Ok(out)
}
