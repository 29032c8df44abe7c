//! Hermitian symplectic spaces, Lagrangian projectors, Maslov index and triple index.
//!
//! A Lagrangian subspace is the graph {v + Φv : v ∈ H₊} of a unitary Φ: H₊ → H₋ between the
//! ±i eigenspaces of J. For a pair (P, Q) the unitary W = Φ_P Φ_Q* has eigenvalue −1 exactly
//! on Im P ∩ ker Q, and the Maslov index is the spectral flow of W through −1,
//! counted +1 counterclockwise.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{spectral_flow, FlowOptions, OperatorPath};
use crate::interval::{assemble_matrix, transfer_matrix, GalerkinBasis};
use crate::linalg::{self, CMat, I};

pub const LAGRANGIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HermitianSymplecticSpace {
    pub j: CMat,
    h_plus: CMat,
    h_minus: CMat,
}

impl HermitianSymplecticSpace {
    pub fn new(j: CMat) -> Result<Self> {
        let n = j.nrows();
        if linalg::unitarity_defect(&j) > 1e-12 || linalg::fro_norm(&(&(&j * &j) + linalg::identity(n))) > 1e-12 {
            return Err(Error::InvalidInput("J must be unitary with J² = −I".into()));
        }
        // −iJ is Hermitian with eigenvalue +1 on H₊ (Jv = iv).
        let (vals, vecs) = linalg::eigh(&linalg::symmetrize(&linalg::scale(-I, &j)))?;
        let plus: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.0).collect();
        let minus: Vec<usize> = (0..n).filter(|&i| vals[i] < 0.0).collect();
        if plus.len() != minus.len() {
            return Err(Error::InvalidInput("±i eigenspaces of J have different dimensions".into()));
        }
        Ok(Self { h_plus: linalg::select_cols(&vecs, &plus), h_minus: linalg::select_cols(&vecs, &minus), j })
    }

    /// J = diag(i·I_m, −i·I_m).
    pub fn standard(m: usize) -> Self {
        let d: Vec<_> = (0..2 * m).map(|k| if k < m { I } else { -I }).collect();
        Self::new(linalg::diag(&d)).expect("standard symplectic form")
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn half_dim(&self) -> usize {
        self.h_plus.ncols()
    }

    /// Graph unitary Φ = (H₋*B)(H₊*B)⁻¹ for an orthonormal basis B of Im P.
    pub fn graph_unitary(&self, p: &LagrangianProjector) -> Result<CMat> {
        let b = linalg::range_of_projector(&p.matrix);
        if b.ncols() != self.half_dim() {
            return Err(Error::NotLagrangian { defect: f64::INFINITY });
        }
        let phi = &(self.h_minus.adjoint() * &b) * linalg::inverse(&(self.h_plus.adjoint() * &b));
        let d = linalg::unitarity_defect(&phi);
        if !d.is_finite() || d > 1e-8 {
            return Err(Error::NotLagrangian { defect: d });
        }
        Ok(phi)
    }

    pub fn lagrangian_defect(&self, p: &CMat) -> f64 {
        let n = self.dim();
        linalg::fro_norm(&(&(&(&self.j * p) * self.j.adjoint()) - &(&linalg::identity(n) - p)))
    }
}

#[derive(Debug, Clone)]
pub struct LagrangianProjector {
    pub matrix: CMat,
}

impl LagrangianProjector {
    pub fn new(space: &HermitianSymplecticSpace, p: CMat) -> Result<Self> {
        let p = linalg::symmetrize(&p);
        let idem = linalg::fro_norm(&(&(&p * &p) - &p));
        let d = space.lagrangian_defect(&p);
        if idem > LAGRANGIAN_TOL || d > LAGRANGIAN_TOL {
            return Err(Error::NotLagrangian { defect: d.max(idem) });
        }
        Ok(Self { matrix: p })
    }

    pub fn complement(&self) -> Self {
        let n = self.matrix.nrows();
        Self { matrix: &linalg::identity(n) - &self.matrix }
    }

    pub fn conjugated(&self, u: &CMat) -> Self {
        Self { matrix: linalg::symmetrize(&(&(u * &self.matrix) * u.adjoint())) }
    }
}

/// Projector onto {v + Φv : v ∈ H₊}.
pub fn lagrangian_from_unitary(phi: &CMat, space: &HermitianSymplecticSpace) -> Result<LagrangianProjector> {
    let d = linalg::unitarity_defect(phi);
    if d > 1e-10 || phi.nrows() != space.half_dim() {
        return Err(Error::InvalidInput(format!("Φ is not a unitary H₊ → H₋ (defect {d:.2e})")));
    }
    let b = linalg::scale_re(std::f64::consts::FRAC_1_SQRT_2, &(&space.h_plus + &(&space.h_minus * phi)));
    LagrangianProjector::new(space, linalg::projector(&b))
}

/// Path of Lagrangians stored as graph unitaries on a t-grid.
#[derive(Debug, Clone)]
pub struct LagrangianPath {
    pub grid: Vec<f64>,
    pub unitaries: Vec<CMat>,
}

impl LagrangianPath {
    pub fn new(grid: Vec<f64>, unitaries: Vec<CMat>) -> Result<Self> {
        if grid.len() != unitaries.len() || grid.len() < 2 {
            return Err(Error::InvalidInput("path needs matching grid and ≥ 2 samples".into()));
        }
        Ok(Self { grid, unitaries })
    }

    pub fn from_projectors(space: &HermitianSymplecticSpace, grid: Vec<f64>, ps: &[LagrangianProjector]) -> Result<Self> {
        let us = ps.iter().map(|p| space.graph_unitary(p)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, us)
    }

    pub fn constant(phi: &CMat, points: usize) -> Self {
        let grid = crate::flow::uniform_grid(points);
        Self { unitaries: vec![phi.clone(); grid.len()], grid }
    }

    /// Φ_a exp(t·log(Φ_a*Φ_b)).
    pub fn geodesic(a: &CMat, b: &CMat, points: usize) -> Result<Self> {
        let l = linalg::unitary_log(&(a.adjoint() * b))?;
        let grid = crate::flow::uniform_grid(points);
        let unitaries = grid.iter().map(|&t| a * linalg::expi_hermitian(&l, t)).collect();
        Ok(Self { grid, unitaries })
    }

    pub fn from_fn(points: usize, f: impl Fn(f64) -> CMat) -> Self {
        let grid = crate::flow::uniform_grid(points);
        let unitaries = grid.iter().map(|&t| f(t)).collect();
        Self { grid, unitaries }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn start(&self) -> &CMat {
        &self.unitaries[0]
    }

    pub fn end(&self) -> &CMat {
        &self.unitaries[self.unitaries.len() - 1]
    }

    pub fn reversed(&self) -> Self {
        Self {
            grid: self.grid.iter().rev().map(|t| 1.0 - t).collect(),
            unitaries: self.unitaries.iter().rev().cloned().collect(),
        }
    }

    pub fn concat(&self, next: &Self) -> Self {
        let mut grid: Vec<f64> = self.grid.iter().map(|t| 0.5 * t).collect();
        grid.extend(next.grid.iter().skip(1).map(|t| 0.5 + 0.5 * t));
        let mut unitaries = self.unitaries.clone();
        unitaries.extend(next.unitaries.iter().skip(1).cloned());
        Self { grid, unitaries }
    }

    /// Resamples to match another path's grid length by repeating (for constant partners).
    pub fn constant_like(phi: &CMat, other: &Self) -> Self {
        Self { grid: other.grid.clone(), unitaries: vec![phi.clone(); other.len()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointRule {
    /// Reject an eigenvalue of W resting at −1 on an endpoint.
    #[default]
    Strict,
    /// Endpoint eigenvalues at −1 take argument −π (arguments in [−π, π)).
    HalfOpen,
}

const ENDPOINT_TOL: f64 = 1e-8;
const MAX_STEP_PHASE: f64 = 0.5;

fn phases(w: &CMat) -> Result<Vec<f64>> {
    Ok(linalg::eigvals(w)?.iter().map(|z| z.arg()).collect())
}

fn branch_sum(w: &CMat, rule: EndpointRule, t: f64) -> Result<f64> {
    let mut s = 0.0;
    for a in phases(w)? {
        let near = PI - a.abs() < ENDPOINT_TOL;
        match (near, rule) {
            (true, EndpointRule::Strict) => return Err(Error::EndpointDegenerate { t }),
            (true, EndpointRule::HalfOpen) => s -= PI,
            _ => s += a,
        }
    }
    Ok(s)
}

/// Maslov index of the pair path (P(t), Q(t)): spectral flow of W(t) = Φ_P Φ_Q* through −1.
///
/// Computed as (total continuous phase change − change of the branch-cut argument sum)/2π.
pub fn maslov_index(p: &LagrangianPath, q: &LagrangianPath, rule: EndpointRule) -> Result<i64> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput("paths must share a grid".into()));
    }
    let ws: Vec<CMat> = p.unitaries.iter().zip(&q.unitaries).map(|(a, b)| a * b.adjoint()).collect();
    let mut cont = 0.0;
    for (k, pair) in ws.windows(2).enumerate() {
        for a in phases(&(&pair[1] * pair[0].adjoint()))? {
            if a.abs() > MAX_STEP_PHASE {
                return Err(Error::PathTooCoarse(format!("phase step {a:.3} at t = {:.4}", p.grid[k + 1])));
            }
            cont += a;
        }
    }
    let s0 = branch_sum(&ws[0], rule, p.grid[0])?;
    let s1 = branch_sum(&ws[ws.len() - 1], rule, p.grid[p.len() - 1])?;
    let x = (cont - (s1 - s0)) / TAU;
    let r = x.round();
    if (x - r).abs() > 1e-6 {
        return Err(Error::Numerical(format!("Maslov count {x} is not an integer")));
    }
    Ok(r as i64)
}

/// Geodesic with enough points for the step bound.
pub fn fine_geodesic(a: &CMat, b: &CMat) -> Result<LagrangianPath> {
    let l = linalg::unitary_log(&(a.adjoint() * b))?;
    let norm = linalg::op_norm(&l);
    let points = ((norm * a.nrows() as f64 / 0.2).ceil() as usize).clamp(16, 400);
    LagrangianPath::geodesic(a, b, points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleIndex {
    pub value: i64,
    /// Value along the second, randomized connecting path.
    pub check: i64,
}

/// τ(P, Q, R) = Mas(P(t), Q) − Mas(P(t), R) along a path P(t) from Q to P.
///
/// Normalized by τ(Q, Q, R) = 0; the relation Mas(P,Q) + Mas(Q,R) − Mas(P,R) = Δτ then fixes
/// it on paths. Endpoint intersections use the half-open rule. The value is recomputed along a
/// path through a random unitary and must agree.
pub fn triple_index<R: Rng + ?Sized>(
    space: &HermitianSymplecticSpace,
    p: &LagrangianProjector,
    q: &LagrangianProjector,
    r: &LagrangianProjector,
    rng: &mut R,
) -> Result<TripleIndex> {
    let (fp, fq, fr) = (space.graph_unitary(p)?, space.graph_unitary(q)?, space.graph_unitary(r)?);
    triple_index_unitaries(&fp, &fq, &fr, rng)
}

pub fn triple_index_unitaries<R: Rng + ?Sized>(fp: &CMat, fq: &CMat, fr: &CMat, rng: &mut R) -> Result<TripleIndex> {
    let along = |path: &LagrangianPath| -> Result<i64> {
        let a = maslov_index(path, &LagrangianPath::constant_like(fq, path), EndpointRule::HalfOpen)?;
        let b = maslov_index(path, &LagrangianPath::constant_like(fr, path), EndpointRule::HalfOpen)?;
        Ok(a - b)
    };
    let value = along(&fine_geodesic(fq, fp)?)?;
    let mid = linalg::random_unitary(fp.nrows(), rng);
    let detour = fine_geodesic(fq, &mid)?.concat(&fine_geodesic(&mid, fp)?);
    let check = along(&detour)?;
    if check != value {
        return Err(Error::Consistency(format!("triple index depends on the path: {value} vs {check}")));
    }
    Ok(TripleIndex { value, check })
}

/// Eigenphases of W(t) = Φ_P Φ_Q* along a pair path: (t, index, phase) rows, phases in (−π, π].
pub fn w_trajectory(p: &LagrangianPath, q: &LagrangianPath) -> Result<Vec<(f64, usize, f64)>> {
    let mut rows = Vec::new();
    for ((t, a), b) in p.grid.iter().zip(&p.unitaries).zip(&q.unitaries) {
        let mut ph = phases(&(a * b.adjoint()))?;
        ph.sort_by(|x, y| x.partial_cmp(y).unwrap());
        rows.extend(ph.into_iter().enumerate().map(|(i, f)| (*t, i, f)));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub dim: usize,
    pub tau_start: i64,
    pub tau_end: i64,
    pub mas_pq: i64,
    pub mas_qr: i64,
    pub mas_pr: i64,
}

impl RelationCheck {
    pub fn holds(&self) -> bool {
        self.tau_end - self.tau_start == self.mas_pq + self.mas_qr - self.mas_pr
    }
}

/// τ(ends at 1) − τ(ends at 0) against Mas(P,Q) + Mas(Q,R) − Mas(P,R) for three random
/// geodesic paths of Lagrangians in C^dim ⊕ C^dim.
pub fn random_triple_relation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<RelationCheck> {
    let mut ends = || (linalg::random_unitary(dim, rng), linalg::random_unitary(dim, rng));
    let (p, q, r) = (ends(), ends(), ends());
    let norm = |a: &CMat, b: &CMat| -> Result<f64> { Ok(linalg::op_norm(&linalg::unitary_log(&(a.adjoint() * b))?)) };
    let worst = norm(&p.0, &p.1)?.max(norm(&q.0, &q.1)?).max(norm(&r.0, &r.1)?);
    let points = ((worst * dim as f64 / 0.1).ceil() as usize).clamp(32, 800);
    let pp = LagrangianPath::geodesic(&p.0, &p.1, points)?;
    let qp = LagrangianPath::geodesic(&q.0, &q.1, points)?;
    let rp = LagrangianPath::geodesic(&r.0, &r.1, points)?;
    let tau_start = triple_index_unitaries(&p.0, &q.0, &r.0, rng)?.value;
    let tau_end = triple_index_unitaries(&p.1, &q.1, &r.1, rng)?.value;
    Ok(RelationCheck {
        dim,
        tau_start,
        tau_end,
        mas_pq: maslov_index(&pp, &qp, EndpointRule::Strict)?,
        mas_qr: maslov_index(&qp, &rp, EndpointRule::Strict)?,
        mas_pr: maslov_index(&pp, &rp, EndpointRule::Strict)?,
    })
}

/// A family D(t) = γ d/dx + Q_t(x) on [0, 1] with fixed conditions, split at x*.
#[derive(Clone)]
pub struct SplitFamily {
    pub gamma: CMat,
    pub dom0: CMat,
    pub dom1: CMat,
    pub potential: Arc<dyn Fn(f64, f64) -> CMat + Send + Sync>,
    pub split: f64,
}

impl std::fmt::Debug for SplitFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitFamily").field("split", &self.split).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCheck {
    pub sf: i64,
    pub mas: i64,
}

const ODE_STEPS: usize = 400;

impl SplitFamily {
    pub fn new(
        gamma: CMat,
        dom0: CMat,
        dom1: CMat,
        potential: Arc<dyn Fn(f64, f64) -> CMat + Send + Sync>,
        split: f64,
    ) -> Result<Self> {
        if !(split > 0.0 && split < 1.0) {
            return Err(Error::InvalidInput(format!("split point {split} must lie in (0, 1)")));
        }
        crate::interval::check_gamma(&gamma)?;
        Ok(Self { gamma, dom0, dom1, potential, split })
    }

    /// The Galerkin family t ↦ γ d/dx + Q_t on a fixed basis.
    pub fn operator_path(&self, truncation: usize, points: usize) -> Result<OperatorPath> {
        let basis = GalerkinBasis::new(&self.gamma, &self.dom0, &self.dom1, truncation)?;
        let quad = basis.default_quadrature();
        let q = self.potential.clone();
        Ok(OperatorPath::from_fn("split-family", crate::flow::uniform_grid(points), move |t| {
            let qt = |x: f64| q(t, x);
            assemble_matrix(&basis, Some(&qt), &quad)
        }))
    }

    pub fn spectral_flow(&self, truncation: usize, points: usize, opts: &FlowOptions) -> Result<i64> {
        Ok(spectral_flow(&self.operator_path(truncation, points)?, opts)?.value)
    }

    pub fn check(&self, truncation: usize, points: usize, opts: &FlowOptions) -> Result<SplitCheck> {
        Ok(SplitCheck { sf: self.spectral_flow(truncation, points, opts)?, mas: self.maslov(points)? })
    }

    /// Cauchy data at x* of the left piece (with u(0) ∈ Λ₀) and of the right piece.
    pub fn cauchy_projectors(&self, t: f64) -> (CMat, CMat) {
        let q = self.potential.clone();
        let g = self.gamma.clone();
        // γu′ + Qu = 0 ⇔ u′ = γQu.
        let m = move |x: f64| &g * q(t, x);
        let steps_l = ((ODE_STEPS as f64) * self.split).ceil() as usize + 8;
        let steps_r = ((ODE_STEPS as f64) * (1.0 - self.split)).ceil() as usize + 8;
        let tl = transfer_matrix(&m, 0.0, self.split, steps_l);
        let tr = transfer_matrix(&m, 1.0, self.split, steps_r);
        let cl = linalg::projector(&linalg::orth(&(&tl * &self.dom0), 1e-13));
        let cr = linalg::projector(&linalg::orth(&(&tr * &self.dom1), 1e-13));
        (cl, cr)
    }

    /// Lagrangian paths t ↦ C₊(t) and t ↦ I − C₋(t) in (V, J = γ), J oriented by the outward
    /// normal of the left piece.
    pub fn lagrangian_paths(&self, points: usize) -> Result<(LagrangianPath, LagrangianPath)> {
        let space = HermitianSymplecticSpace::new(self.gamma.clone())?;
        let grid = crate::flow::uniform_grid(points);
        let mut ps = Vec::with_capacity(points);
        let mut qs = Vec::with_capacity(points);
        for &t in &grid {
            let (cl, cr) = self.cauchy_projectors(t);
            ps.push(LagrangianProjector::new(&space, cr)?);
            qs.push(LagrangianProjector::new(&space, &linalg::identity(cl.nrows()) - &cl)?);
        }
        Ok((LagrangianPath::from_projectors(&space, grid.clone(), &ps)?, LagrangianPath::from_projectors(&space, grid, &qs)?))
    }

    /// Mas(C₊(t), I − C₋(t)), refining the grid while steps are too coarse. Returns the index and
    /// the number of grid points used.
    ///
    /// W has eigenvalue −1 exactly on Im C₊ ∩ Im C₋, which is the kernel of D(t).
    pub fn maslov_detailed(&self, points: usize) -> Result<(i64, usize)> {
        let mut n = points;
        loop {
            let (pp, qp) = self.lagrangian_paths(n)?;
            match maslov_index(&pp, &qp, EndpointRule::HalfOpen) {
                Err(Error::PathTooCoarse(_)) if n < 2000 => n *= 2,
                other => return other.map(|m| (m, n)),
            }
        }
    }

    pub fn maslov(&self, points: usize) -> Result<i64> {
        Ok(self.maslov_detailed(points)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, cr};
    use rand::SeedableRng;

    fn space1() -> HermitianSymplecticSpace {
        HermitianSymplecticSpace::standard(1)
    }

    #[test]
    fn graph_projector_examples() {
        let s = space1();
        let p = lagrangian_from_unitary(&linalg::identity(1), &s).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.matrix[(i, j)] - cr(0.5)).norm() < 1e-14);
            }
        }
        let phi = 0.7;
        let p = lagrangian_from_unitary(&linalg::diag(&[c64::cis(phi)]), &s).unwrap();
        assert!((p.matrix[(1, 0)] - c64::cis(phi) * 0.5).norm() < 1e-14);
    }

    #[test]
    fn loop_through_minus_one() {
        let q = LagrangianPath::constant(&linalg::diag(&[c64::cis(PI)]), 65);
        let p = LagrangianPath::from_fn(65, |t| linalg::diag(&[c64::cis(TAU * t + 0.3)]));
        assert_eq!(maslov_index(&p, &q, EndpointRule::Strict).unwrap(), 1);
        assert_eq!(maslov_index(&p.reversed(), &q, EndpointRule::Strict).unwrap(), -1);
    }

    #[test]
    fn strict_rule_rejects_degenerate_endpoint() {
        let q = LagrangianPath::constant(&linalg::identity(1), 9);
        let p = LagrangianPath::from_fn(9, |t| linalg::diag(&[c64::cis(PI * (1.0 - t))]));
        assert!(matches!(maslov_index(&p, &q, EndpointRule::Strict), Err(Error::EndpointDegenerate { .. })));
        // leaving −1 into the upper half plane counts, into the lower half plane does not
        assert_eq!(maslov_index(&p, &q, EndpointRule::HalfOpen).unwrap(), -1);
        let p = LagrangianPath::from_fn(9, |t| linalg::diag(&[c64::cis(PI * (1.0 + t))]));
        assert_eq!(maslov_index(&p, &q, EndpointRule::HalfOpen).unwrap(), 0);
    }

    #[test]
    fn triple_normalizations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s = HermitianSymplecticSpace::standard(2);
        let rand_l = |rng: &mut rand_chacha::ChaCha8Rng| lagrangian_from_unitary(&linalg::random_unitary(2, rng), &s).unwrap();
        let (p, r) = (rand_l(&mut rng), rand_l(&mut rng));
        assert_eq!(triple_index(&s, &p, &p, &r, &mut rng).unwrap().value, 0);
        assert_eq!(triple_index(&s, &r, &p, &p, &mut rng).unwrap().value, 0);
    }
}
