//! Dense two-phase simplex for small linear programs.
//!
//! Variables carry optional lower and upper bounds and are mapped to
//! nonnegative columns before solving. Pricing is Dantzig's rule, switching
//! to Bland's rule after a run of degenerate pivots; the ratio test breaks
//! ties by the lowest basic column. The solver is fully deterministic.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal {
        x: Vec<S>,
        objective: S,
        iterations: usize,
    },
    /// Phase one ended with this much artificial mass left.
    Infeasible {
        residual: S,
    },
    Unbounded,
}

/// `maximize cᵀx` subject to linear constraints and per-variable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<S> {
    objective: Vec<S>,
    lower: Vec<Option<S>>,
    upper: Vec<Option<S>>,
    constraints: Vec<Constraint<S>>,
}

const MAX_ITERATIONS: usize = 200_000;
const DEGENERATE_RUN: usize = 50;
const REFRESH_EVERY: usize = 64;
const REFACTOR_EVERY: usize = 256;
const POLISH_ROUNDS: usize = 3;

impl<S: Scalar> LinearProgram<S> {
    /// `n` variables, each `≥ 0` with no upper bound, zero objective.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![S::zero(); n],
            lower: vec![Some(S::zero()); n],
            upper: vec![None; n],
            constraints: Vec::new(),
        }
    }

    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint<S>] {
        &self.constraints
    }

    pub fn set_objective(&mut self, j: usize, c: S) {
        self.objective[j] = c;
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<S>, upper: Option<S>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) {
        assert_eq!(coeffs.len(), self.objective.len(), "constraint width");
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn maximize(&self) -> Result<LpOutcome<S>> {
        let outcome = Solver::build(self)?.run()?;
        if let LpOutcome::Optimal { x, .. } = &outcome {
            self.check_feasible(x)?;
        }
        Ok(outcome)
    }

    fn check_feasible(&self, x: &[S]) -> Result<()> {
        let tol = S::tol(1e-7);
        for (j, v) in x.iter().enumerate() {
            let low = self.lower[j].is_some_and(|lo| *v < lo - tol);
            let high = self.upper[j].is_some_and(|hi| *v > hi + tol);
            if low || high {
                return Err(Error::Numerical(format!("simplex returned variable {j} outside its bounds")));
            }
        }
        for (k, c) in self.constraints.iter().enumerate() {
            let lhs: S = c.coeffs.iter().zip(x).map(|(a, b)| *a * *b).sum();
            let slack = tol * (S::one() + c.rhs.abs());
            let ok = match c.relation {
                Relation::Le => lhs <= c.rhs + slack,
                Relation::Ge => lhs >= c.rhs - slack,
                Relation::Eq => (lhs - c.rhs).abs() <= slack,
            };
            if !ok {
                return Err(Error::Numerical(format!(
                    "simplex returned a point violating constraint {k} (lhs {}, rhs {})",
                    lhs.to_f64_lossy(),
                    c.rhs.to_f64_lossy()
                )));
            }
        }
        Ok(())
    }
}

/// `x_j = offset + Σ coef · y_col`.
struct VarMap<S> {
    offset: S,
    terms: Vec<(usize, S)>,
}

struct Solver<S> {
    vars: Vec<VarMap<S>>,
    objective: Vec<S>,
    /// Tableau rows, each `width + 1` long with the right-hand side last.
    tab: Vec<S>,
    rows: usize,
    width: usize,
    basis: Vec<usize>,
    /// Columns at or past this index are artificial.
    first_artificial: usize,
    structural: usize,
    objective_offset: S,
    /// The initial tableau, used to refactor away accumulated rounding.
    original: Vec<S>,
    /// Original row index of each live tableau row.
    row_ids: Vec<usize>,
}

impl<S: Scalar> Solver<S> {
    fn build(lp: &LinearProgram<S>) -> Result<Self> {
        let n = lp.objective.len();
        let mut vars = Vec::with_capacity(n);
        let mut ncols = 0usize;
        let mut extra_rows: Vec<(usize, S)> = Vec::new();
        for j in 0..n {
            let map = match (lp.lower[j], lp.upper[j]) {
                (Some(lo), Some(hi)) => {
                    if hi < lo {
                        return Err(Error::Validation(format!("variable {j} has empty bounds")));
                    }
                    extra_rows.push((ncols, hi - lo));
                    VarMap { offset: lo, terms: vec![(ncols, S::one())] }
                }
                (Some(lo), None) => VarMap { offset: lo, terms: vec![(ncols, S::one())] },
                (None, Some(hi)) => VarMap { offset: hi, terms: vec![(ncols, -S::one())] },
                (None, None) => {
                    ncols += 1;
                    VarMap { offset: S::zero(), terms: vec![(ncols - 1, S::one()), (ncols, -S::one())] }
                }
            };
            ncols += 1;
            vars.push(map);
        }
        let structural = ncols;

        // rows as (dense coefficients over structural columns, relation, rhs)
        let mut rows: Vec<(Vec<S>, Relation, S)> = Vec::with_capacity(lp.constraints.len() + extra_rows.len());
        for c in &lp.constraints {
            let mut coeffs = vec![S::zero(); structural];
            let mut rhs = c.rhs;
            for (j, a) in c.coeffs.iter().enumerate() {
                if *a == S::zero() {
                    continue;
                }
                rhs -= *a * vars[j].offset;
                for (col, k) in &vars[j].terms {
                    coeffs[*col] += *a * *k;
                }
            }
            rows.push((coeffs, c.relation, rhs));
        }
        for (col, cap) in extra_rows {
            let mut coeffs = vec![S::zero(); structural];
            coeffs[col] = S::one();
            rows.push((coeffs, Relation::Le, cap));
        }
        for row in &mut rows {
            if row.2 < S::zero() {
                row.0.iter_mut().for_each(|x| *x = -*x);
                row.2 = -row.2;
                row.1 = match row.1 {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }

        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let art_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = structural + slack_count;
        let width = first_artificial + art_count;
        let m = rows.len();
        let stride = width + 1;
        let mut tab = vec![S::zero(); m * stride];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (structural, first_artificial);
        for (r, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
            let line = &mut tab[r * stride..(r + 1) * stride];
            line[..structural].copy_from_slice(&coeffs);
            line[width] = rhs;
            match rel {
                Relation::Le => {
                    line[slack] = S::one();
                    basis[r] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    line[slack] = -S::one();
                    slack += 1;
                    line[art] = S::one();
                    basis[r] = art;
                    art += 1;
                }
                Relation::Eq => {
                    line[art] = S::one();
                    basis[r] = art;
                    art += 1;
                }
            }
        }

        let mut objective = vec![S::zero(); structural];
        let mut objective_offset = S::zero();
        for (j, c) in lp.objective.iter().enumerate() {
            objective_offset += *c * vars[j].offset;
            for (col, k) in &vars[j].terms {
                objective[*col] += *c * *k;
            }
        }
        let original = tab.clone();
        Ok(Self {
            vars,
            objective,
            tab,
            rows: m,
            width,
            basis,
            first_artificial,
            structural,
            objective_offset,
            original,
            row_ids: (0..m).collect(),
        })
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, r: usize, c: usize) -> S {
        self.tab[r * self.stride() + c]
    }

    fn pivot(&mut self, obj: &mut [S], pr: usize, pc: usize) {
        let stride = self.stride();
        let p = self.tab[pr * stride + pc];
        for x in &mut self.tab[pr * stride..(pr + 1) * stride] {
            *x /= p;
        }
        let pivot_row: Vec<S> = self.tab[pr * stride..(pr + 1) * stride].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.tab[r * stride + pc];
            if f != S::zero() {
                for (x, y) in self.tab[r * stride..(r + 1) * stride].iter_mut().zip(&pivot_row) {
                    *x -= f * *y;
                }
                self.tab[r * stride + pc] = S::zero();
            }
        }
        let f = obj[pc];
        if f != S::zero() {
            for (x, y) in obj.iter_mut().zip(&pivot_row) {
                *x -= f * *y;
            }
            obj[pc] = S::zero();
        }
        self.basis[pr] = pc;
    }

    /// Reduced-cost row for maximizing `cost` over the current basis.
    fn objective_row(&self, cost: &[S]) -> Vec<S> {
        let stride = self.stride();
        let mut obj: Vec<S> = (0..stride).map(|j| if j < cost.len() { -cost[j] } else { S::zero() }).collect();
        for r in 0..self.rows {
            let cb = cost.get(self.basis[r]).copied().unwrap_or(S::zero());
            if cb != S::zero() {
                for (x, y) in obj.iter_mut().zip(&self.tab[r * stride..(r + 1) * stride]) {
                    *x += cb * *y;
                }
            }
        }
        obj
    }

    /// Runs simplex on `obj` with entering columns `< allowed`. Returns false if unbounded.
    fn iterate(&mut self, cost: &[S], obj: &mut [S], allowed: usize, iterations: &mut usize) -> Result<bool> {
        let cost_eps = S::tol(1e-10);
        let mut bland = false;
        let mut degenerate = 0usize;
        loop {
            let entering = if bland {
                (0..allowed).find(|j| obj[*j] < -cost_eps)
            } else {
                let mut best: Option<(usize, S)> = None;
                for (j, v) in obj.iter().enumerate().take(allowed) {
                    if *v < -cost_eps && best.is_none_or(|(_, b)| *v < b) {
                        best = Some((j, *v));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(pc) = entering else { return Ok(true) };

            let Some((pr, ratio)) = self.ratio_test(pc, bland) else { return Ok(false) };
            if ratio <= S::tol(1e-12) {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(obj, pr, pc);
            *iterations += 1;
            if (*iterations).is_multiple_of(REFRESH_EVERY) {
                if (*iterations).is_multiple_of(REFACTOR_EVERY) {
                    self.refactor();
                }
                obj.copy_from_slice(&self.objective_row(cost));
            }
            if *iterations > MAX_ITERATIONS {
                return Err(Error::Numerical("simplex iteration limit reached".into()));
            }
        }
    }

    /// Two-pass ratio test: bound the step with a small feasibility slack,
    /// then pick the largest pivot among rows within that bound (or the
    /// lowest basic column when anti-cycling).
    fn ratio_test(&self, pc: usize, bland: bool) -> Option<(usize, S)> {
        let pivot_eps = S::tol(1e-9);
        let slack = S::tol(1e-11);
        let mut bound = S::infinity();
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > pivot_eps {
                bound = bound.min((self.at(r, self.width).max(S::zero()) + slack) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, S)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a > pivot_eps && self.at(r, self.width).max(S::zero()) / a <= bound {
                let better = match best {
                    None => true,
                    Some((br, ba)) => {
                        if bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            a > ba
                        }
                    }
                };
                if better {
                    best = Some((r, a));
                }
            }
        }
        best.map(|(r, a)| (r, self.at(r, self.width).max(S::zero()) / a))
    }

    fn run(mut self) -> Result<LpOutcome<S>> {
        let mut iterations = 0;
        if self.first_artificial < self.width {
            let mut cost = vec![S::zero(); self.width];
            cost[self.first_artificial..].iter_mut().for_each(|c| *c = -S::one());
            self.solve_phase(&cost, self.width, &mut iterations)?;
            let mut obj = self.objective_row(&cost);
            let residual = -obj[self.width];
            if residual > S::tol(1e-9) {
                return Ok(LpOutcome::Infeasible { residual });
            }
            self.drive_out_artificials(&mut obj);
        }
        let cost = self.objective.clone();
        if !self.solve_phase(&cost, self.first_artificial, &mut iterations)? {
            return Ok(LpOutcome::Unbounded);
        }
        let obj = self.objective_row(&cost);
        let mut y = vec![S::zero(); self.structural];
        for r in 0..self.rows {
            if self.basis[r] < self.structural {
                y[self.basis[r]] = self.at(r, self.width);
            }
        }
        let x: Vec<S> =
            self.vars.iter().map(|v| v.offset + v.terms.iter().map(|(c, k)| *k * y[*c]).sum::<S>()).collect();
        let objective = obj[self.width] + self.objective_offset;
        Ok(LpOutcome::Optimal { x, objective, iterations })
    }

    /// Iterates to optimality, then refactors and resumes while pricing
    /// still finds an improving column. Returns false if unbounded.
    fn solve_phase(&mut self, cost: &[S], allowed: usize, iterations: &mut usize) -> Result<bool> {
        for _ in 0..POLISH_ROUNDS {
            let mut obj = self.objective_row(cost);
            if !self.iterate(cost, &mut obj, allowed, iterations)? {
                return Ok(false);
            }
            if !self.refactor() {
                break;
            }
            let obj = self.objective_row(cost);
            if obj[..allowed].iter().all(|v| *v >= -S::tol(1e-10)) {
                break;
            }
        }
        Ok(true)
    }

    /// Recomputes the tableau as `B⁻¹ A` from the original rows. Leaves the
    /// tableau untouched and returns false if the basis is numerically singular.
    fn refactor(&mut self) -> bool {
        let (m, stride) = (self.rows, self.stride());
        let bw = m + stride;
        // augmented [B | A] over live rows
        let mut aug = vec![S::zero(); m * bw];
        for (r, id) in self.row_ids.iter().enumerate() {
            let src = &self.original[id * stride..(id + 1) * stride];
            for (k, col) in self.basis.iter().enumerate() {
                aug[r * bw + k] = src[*col];
            }
            aug[r * bw + m..(r + 1) * bw].copy_from_slice(src);
        }
        for k in 0..m {
            let pr = (k..m).max_by(|a, b| aug[a * bw + k].abs().partial_cmp(&aug[b * bw + k].abs()).unwrap());
            let Some(pr) = pr else { return false };
            if aug[pr * bw + k].abs() < S::tol(1e-12) {
                return false;
            }
            if pr != k {
                for j in 0..bw {
                    aug.swap(k * bw + j, pr * bw + j);
                }
            }
            let p = aug[k * bw + k];
            for j in 0..bw {
                aug[k * bw + j] /= p;
            }
            let pivot_row: Vec<S> = aug[k * bw..(k + 1) * bw].to_vec();
            for r in (0..m).filter(|r| *r != k) {
                let f = aug[r * bw + k];
                if f != S::zero() {
                    for (x, y) in aug[r * bw..(r + 1) * bw].iter_mut().zip(&pivot_row) {
                        *x -= f * *y;
                    }
                }
            }
        }
        for r in 0..m {
            self.tab[r * stride..(r + 1) * stride].copy_from_slice(&aug[r * bw + m..(r + 1) * bw]);
            // basic columns are exact unit vectors
            for (k, col) in self.basis.iter().enumerate() {
                self.tab[r * stride + col] = if k == r { S::one() } else { S::zero() };
            }
        }
        true
    }

    fn drive_out_artificials(&mut self, obj: &mut [S]) {
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|j| self.at(r, *j).abs() > S::tol(1e-9));
                match col {
                    Some(c) => {
                        self.pivot(obj, r, c);
                        r += 1;
                    }
                    None => self.remove_row(r),
                }
            } else {
                r += 1;
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let stride = self.stride();
        self.tab.drain(r * stride..(r + 1) * stride);
        self.basis.remove(r);
        self.row_ids.remove(r);
        self.rows -= 1;
    }
}
