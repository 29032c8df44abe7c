//! Spectral flow of Hermitian paths by eigenvalue-branch tracking.
//!
//! Crossing convention: zero counts as nonnegative. A branch contributes +1 when it moves
//! from λ < 0 to λ ≥ 0 between consecutive grid points and −1 for the reverse. The integer
//! is certified by the endpoint count #neg(H(0)) − #neg(H(1)), which is exact for a finite
//! continuous path by eigenvalue ordering; the tracked branches must reproduce it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::par::{self, Exec};

type PathFn = dyn Fn(f64) -> CMat + Send + Sync;

/// A family of Hermitian matrices on [0, 1] sampled on a grid.
#[derive(Clone)]
pub struct OperatorPath {
    pub label: String,
    pub grid: Vec<f64>,
    dim: usize,
    eval: Arc<PathFn>,
}

impl std::fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorPath")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("grid_points", &self.grid.len())
            .finish()
    }
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

impl OperatorPath {
    pub fn from_fn<F>(label: impl Into<String>, grid: Vec<f64>, f: F) -> Self
    where
        F: Fn(f64) -> CMat + Send + Sync + 'static,
    {
        let dim = f(0.0).nrows();
        Self { label: label.into(), grid, dim, eval: Arc::new(f) }
    }

    /// u ↦ h0 + u·h1.
    pub fn affine(label: impl Into<String>, h0: CMat, h1: CMat, points: usize) -> Self {
        Self::from_fn(label, uniform_grid(points), move |u| &h0 + linalg::scale_re(u, &h1))
    }

    pub fn constant(label: impl Into<String>, h: CMat, points: usize) -> Self {
        Self::from_fn(label, uniform_grid(points), move |_| h.clone())
    }

    pub fn at(&self, t: f64) -> CMat {
        (self.eval)(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reversed(&self) -> Self {
        let e = self.eval.clone();
        let grid = self.grid.iter().rev().map(|t| 1.0 - t).collect();
        Self { label: format!("reverse({})", self.label), grid, dim: self.dim, eval: Arc::new(move |t| e(1.0 - t)) }
    }

    /// First `self`, then `next`, each reparametrized onto half of [0, 1].
    pub fn concat(&self, next: &OperatorPath) -> Self {
        let (a, b) = (self.eval.clone(), next.eval.clone());
        let mut grid: Vec<f64> = self.grid.iter().map(|t| t / 2.0).collect();
        grid.extend(next.grid.iter().skip(1).map(|t| 0.5 + t / 2.0));
        Self {
            label: format!("{} * {}", self.label, next.label),
            grid,
            dim: self.dim,
            eval: Arc::new(move |t| if t <= 0.5 { a(2.0 * t) } else { b(2.0 * t - 1.0) }),
        }
    }

    /// t ↦ U·H(t)·U*.
    pub fn conjugated(&self, u: &CMat) -> Self {
        let e = self.eval.clone();
        let u = u.clone();
        Self {
            label: format!("conj({})", self.label),
            grid: self.grid.clone(),
            dim: self.dim,
            eval: Arc::new(move |t| &(&u * e(t)) * u.adjoint()),
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Branches are tracked inside |λ| ≤ window.
    pub window: f64,
    /// |λ| ≤ zero_tol counts as a zero mode (nonnegative side).
    pub zero_tol: f64,
    /// Maximum number of bisections of a single grid step.
    pub max_bisections: usize,
    pub exec: Exec,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { window: 5.0, zero_tol: 1e-9, max_bisections: 8, exec: Exec::Parallel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub t: f64,
    pub branch_id: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub value: i64,
    /// Signed crossing count from branch tracking.
    pub tracked: i64,
    pub neg_start: usize,
    pub neg_end: usize,
    pub grid_points: usize,
    pub bisections: usize,
    /// Smallest |λ| seen at any grid point (distance of the path from a zero-mode sample).
    pub min_abs_lambda: f64,
    pub trajectory: Vec<BranchPoint>,
}

struct Sample {
    t: f64,
    values: Vec<f64>,
    vectors: CMat,
}

fn sample(path: &OperatorPath, t: f64) -> Result<Sample> {
    let (values, vectors) = linalg::eigh(&linalg::symmetrize(&path.at(t)))?;
    Ok(Sample { t, values, vectors })
}

fn neg_count(values: &[f64], tol: f64) -> usize {
    values.iter().filter(|&&l| l < -tol).count()
}

/// Matching of window branches between two samples: pairs of (index in a, index in b).
fn match_branches(a: &Sample, b: &Sample, window: f64) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let ia: Vec<usize> = (0..a.values.len()).filter(|&i| a.values[i].abs() <= window).collect();
    let ib: Vec<usize> = (0..b.values.len()).filter(|&i| b.values[i].abs() <= window * 1.25).collect();
    let va = linalg::select_cols(&a.vectors, &ia);
    let vb = linalg::select_cols(&b.vectors, &ib);
    let ov = va.adjoint() * &vb;
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(ia.len() * ib.len());
    for r in 0..ia.len() {
        for c in 0..ib.len() {
            let o = ov[(r, c)].norm();
            if o >= 0.5 {
                cand.push((o, r, c));
            }
        }
    }
    cand.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let mut used_a = vec![false; ia.len()];
    let mut used_b = vec![false; ib.len()];
    let mut pairs = Vec::new();
    for (_, r, c) in cand {
        if !used_a[r] && !used_b[c] {
            used_a[r] = true;
            used_b[c] = true;
            pairs.push((ia[r], ib[c]));
        }
    }
    // Eigenvalue-proximity fallback: leftover branches in ascending order.
    let rest_a: Vec<usize> = (0..ia.len()).filter(|&r| !used_a[r]).map(|r| ia[r]).collect();
    let rest_b: Vec<usize> = (0..ib.len()).filter(|&c| !used_b[c]).map(|c| ib[c]).collect();
    let mut ua = Vec::new();
    let mut ub = rest_b.clone();
    for &i in &rest_a {
        let best = ub
            .iter()
            .enumerate()
            .min_by(|x, y| {
                let dx = (b.values[*x.1] - a.values[i]).abs();
                let dy = (b.values[*y.1] - a.values[i]).abs();
                dx.partial_cmp(&dy).unwrap()
            })
            .map(|(k, &j)| (k, j));
        match best {
            Some((k, j)) if (b.values[j] - a.values[i]).abs() < 0.25 * window => {
                pairs.push((i, j));
                ub.remove(k);
            }
            _ => ua.push(i),
        }
    }
    (pairs, ua, ub)
}

fn crossing(la: f64, lb: f64, tol: f64) -> i64 {
    match (la < -tol, lb < -tol) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    }
}

pub fn spectral_flow(path: &OperatorPath, opts: &FlowOptions) -> Result<FlowResult> {
    if path.grid.len() < 2 {
        return Err(Error::InvalidInput("path needs at least two grid points".into()));
    }
    let samples: Vec<Result<Sample>> = par::map(opts.exec, &path.grid, |&t| sample(path, t));
    let mut samples: Vec<Sample> = samples.into_iter().collect::<Result<_>>()?;

    let tol = opts.zero_tol;
    let neg_start = neg_count(&samples[0].values, tol);
    let neg_end = neg_count(&samples[samples.len() - 1].values, tol);
    let value = neg_start as i64 - neg_end as i64;

    // Walk the grid, bisecting steps whose matching leaves a branch near zero unresolved.
    let mut tracked = 0i64;
    let mut bisections = 0;
    let mut trajectory = Vec::new();
    let mut next_id = 0usize;
    let first = samples.remove(0);
    let mut ids: Vec<Option<usize>> = vec![None; first.values.len()];
    for (i, &l) in first.values.iter().enumerate() {
        if l.abs() <= opts.window {
            ids[i] = Some(next_id);
            trajectory.push(BranchPoint { t: first.t, branch_id: next_id, lambda: l });
            next_id += 1;
        }
    }
    let mut min_abs = first.values.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let mut queue: std::collections::VecDeque<Sample> = samples.into();
    let mut prev = first;
    let mut depth = 0usize;
    while let Some(next) = queue.pop_front() {
        let (pairs, lost, _) = match_branches(&prev, &next, opts.window);
        let unresolved = lost.iter().any(|&i| prev.values[i].abs() < 0.5 * opts.window);
        if unresolved && depth < opts.max_bisections {
            let mid = sample(path, 0.5 * (prev.t + next.t))?;
            queue.push_front(next);
            queue.push_front(mid);
            bisections += 1;
            depth += 1;
            continue;
        }
        if unresolved {
            return Err(Error::BranchAmbiguity {
                t: next.t,
                detail: format!(
                    "unmatched branches {:?} after {} bisections",
                    lost.iter().map(|&i| prev.values[i]).collect::<Vec<_>>(),
                    depth
                ),
            });
        }
        depth = 0;
        let mut new_ids: Vec<Option<usize>> = vec![None; next.values.len()];
        for &(i, j) in &pairs {
            tracked += crossing(prev.values[i], next.values[j], tol);
            if next.values[j].abs() <= opts.window {
                new_ids[j] = ids[i];
            }
        }
        for (j, &l) in next.values.iter().enumerate() {
            if l.abs() <= opts.window {
                let id = *new_ids[j].get_or_insert_with(|| {
                    next_id += 1;
                    next_id - 1
                });
                trajectory.push(BranchPoint { t: next.t, branch_id: id, lambda: l });
            }
            min_abs = min_abs.min(l.abs());
        }
        ids = new_ids;
        prev = next;
    }

    // Branches entering or leaving through the window edge are far from zero and never
    // cross, so the tracked count must equal the endpoint certificate.
    if tracked != value {
        return Err(Error::Consistency(format!(
            "tracked spectral flow {tracked} disagrees with endpoint count {value} on path {}",
            path.label
        )));
    }
    Ok(FlowResult {
        value,
        tracked,
        neg_start,
        neg_end,
        grid_points: path.grid.len() + bisections,
        bisections,
        min_abs_lambda: min_abs,
        trajectory,
    })
}

/// Spectral flow from the endpoint count alone.
pub fn spectral_flow_count(path: &OperatorPath, zero_tol: f64) -> Result<i64> {
    let a = linalg::eigvalsh(&linalg::symmetrize(&path.at(0.0)))?;
    let b = linalg::eigvalsh(&linalg::symmetrize(&path.at(1.0)))?;
    Ok(neg_count(&a, zero_tol) as i64 - neg_count(&b, zero_tol) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;

    #[test]
    fn scalar_crossing() {
        let p = OperatorPath::from_fn("t-1/2", uniform_grid(11), |t| diag_real(&[t - 0.5]));
        let r = spectral_flow(&p, &FlowOptions::default()).unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(spectral_flow(&p.reversed(), &FlowOptions::default()).unwrap().value, -1);
    }

    #[test]
    fn constant_and_opposite_crossings() {
        let p = OperatorPath::constant("const", diag_real(&[1.0, -2.0]), 5);
        assert_eq!(spectral_flow(&p, &FlowOptions::default()).unwrap().value, 0);
        let p = OperatorPath::from_fn("pair", uniform_grid(11), |t| diag_real(&[t - 0.5, 0.5 - t]));
        let r = spectral_flow(&p, &FlowOptions::default()).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.trajectory.iter().map(|b| b.branch_id).max(), Some(1));
    }

    #[test]
    fn arrival_at_zero_counts_as_nonnegative() {
        let p = OperatorPath::from_fn("to-zero", uniform_grid(5), |t| diag_real(&[t - 1.0]));
        assert_eq!(spectral_flow(&p, &FlowOptions::default()).unwrap().value, 1);
        let p = OperatorPath::from_fn("from-zero", uniform_grid(5), |t| diag_real(&[-t]));
        assert_eq!(spectral_flow(&p, &FlowOptions::default()).unwrap().value, -1);
    }

    #[test]
    fn concatenation_adds() {
        let a = OperatorPath::from_fn("a", uniform_grid(9), |t| diag_real(&[t - 0.5, 1.0]));
        let b = OperatorPath::from_fn("b", uniform_grid(9), |t| diag_real(&[0.5 + t, 1.0 - 2.0 * t]));
        let o = FlowOptions::default();
        let s = spectral_flow(&a.concat(&b), &o).unwrap().value;
        assert_eq!(s, spectral_flow(&a, &o).unwrap().value + spectral_flow(&b, &o).unwrap().value);
    }
}
