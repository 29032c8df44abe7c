//! One-dimensional Dirac operators γ(d/dx + A) on [0, 1] with Lagrangian boundary conditions.
//!
//! Discretization is a Galerkin projection onto the exact eigenbasis of the free operator γ d/dx
//! carrying the same boundary conditions. Write V = V₊ ⊕ V₋ for the ±i eigenspaces of γ; a
//! Lagrangian subspace Λ ⊂ V is the graph of a unitary U: V₊ → V₋. With domains Λ₀ = graph U₀
//! and Λ₁ = graph U₁, let W = U₁⁻¹U₀ have eigenpairs (e^{iθ_j}, v_j). Then
//!
//!   u_{k,j}(x) = (e^{iκx} v_j, U₁ e^{iκ(2−x)} v_j)/√2,   κ = θ_j/2 + πk,
//!
//! is an orthonormal eigenbasis of γ d/dx with eigenvalue −κ. Zeroth-order terms enter as
//! Galerkin matrices ∫ u_a* Q(x) u_b dx under Gauss–Legendre quadrature, so the truncated
//! operator is exactly Hermitian and has no spurious modes near zero.

use std::f64::consts::PI;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::circle::{symbol_operator, TruncatedCircleOperator, UnitarySymbol};
use crate::error::{Error, Result};
use crate::flow::OperatorPath;
use crate::linalg::{self, c64, CMat, I};
use crate::spectral::{
    intersection_dim, windowed_pair_index, Eigensystem, ExactSpectrum, PairIndex, RankThreshold, SpectralWindow,
};

pub type Potential = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Checks γ*γ = I and γ² = −I.
pub fn check_gamma(gamma: &CMat) -> Result<()> {
    let n = gamma.nrows();
    if n == 0 || n % 2 == 1 || gamma.ncols() != n {
        return Err(Error::InvalidInput("γ must be square of even size".into()));
    }
    let d1 = linalg::unitarity_defect(gamma);
    let d2 = linalg::fro_norm(&(&(gamma * gamma) + linalg::identity(n)));
    if d1 > 1e-12 || d2 > 1e-12 {
        return Err(Error::InvalidInput(format!("γ is not a unitary square root of −I ({d1:.1e}, {d2:.1e})")));
    }
    Ok(())
}

/// Orthonormal bases of V₊ = {γv = iv} and V₋ = {γv = −iv}.
#[derive(Debug, Clone)]
pub struct Chirality {
    pub plus: CMat,
    pub minus: CMat,
}

impl Chirality {
    pub fn of(gamma: &CMat) -> Result<Self> {
        check_gamma(gamma)?;
        // iγ v = −v on V₊.
        let (vals, vecs) = linalg::eigh(&linalg::symmetrize(&linalg::scale(I, gamma)))?;
        let plus: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < 0.0).collect();
        let minus: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.0).collect();
        if plus.len() != minus.len() {
            return Err(Error::InvalidInput("γ has unequal chiral dimensions".into()));
        }
        Ok(Self { plus: linalg::select_cols(&vecs, &plus), minus: linalg::select_cols(&vecs, &minus) })
    }

    pub fn half_dim(&self) -> usize {
        self.plus.ncols()
    }

    /// Graph unitary U: V₊ → V₋ of a Lagrangian subspace with basis `lam`.
    pub fn graph_unitary(&self, lam: &CMat) -> Result<CMat> {
        if lam.ncols() != self.half_dim() {
            return Err(Error::NotLagrangian { defect: f64::INFINITY });
        }
        let xp = self.plus.adjoint() * lam;
        let xm = self.minus.adjoint() * lam;
        let u = &xm * linalg::inverse(&xp);
        let defect = linalg::unitarity_defect(&u);
        if !defect.is_finite() || defect > 1e-8 {
            return Err(Error::NotLagrangian { defect });
        }
        Ok(u)
    }

    /// Π₊ G₊ Π₊* + Π₋ G₋ Π₋* for blocks acting on the chiral halves.
    pub fn assemble(&self, gp: &CMat, gm: &CMat) -> CMat {
        &(&(&self.plus * gp) * self.plus.adjoint()) + &(&(&self.minus * gm) * self.minus.adjoint())
    }
}

/// ‖γPγ* − (I − P)‖ for an orthogonal projector P on V.
pub fn lagrangian_defect(gamma: &CMat, p: &CMat) -> f64 {
    let n = p.nrows();
    linalg::fro_norm(&(&(&(gamma * p) * gamma.adjoint()) - &(&linalg::identity(n) - p)))
}

/// Gauss–Legendre rule on [0, 1].
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn gauss_legendre(m: usize) -> Self {
        let rule = GaussLegendre::new(m.max(1).try_into().unwrap());
        let (nodes, weights) = rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).unzip();
        Self { nodes, weights }
    }

    /// Enough nodes to resolve products of basis functions up to truncation K.
    pub fn for_truncation(k: usize) -> Self {
        Self::gauss_legendre((PI * k as f64).ceil() as usize + 80)
    }
}

#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    pub truncation: usize,
    gamma: CMat,
    chir: Chirality,
    /// Twist phases θ_j.
    pub theta: Vec<f64>,
    kappa: Vec<f64>,
    vidx: Vec<usize>,
    plus_v: CMat,
    minus_u1v: CMat,
}

impl GalerkinBasis {
    /// Eigenbasis of γ d/dx with u(0) ∈ Λ₀, u(1) ∈ Λ₁, modes k ∈ [−K, K].
    pub fn new(gamma: &CMat, dom0: &CMat, dom1: &CMat, truncation: usize) -> Result<Self> {
        let chir = Chirality::of(gamma)?;
        let u0 = chir.graph_unitary(dom0)?;
        let u1 = chir.graph_unitary(dom1)?;
        let w = u1.adjoint() * &u0;
        let (theta, vw) = linalg::unitary_eigen(&w)?;
        let h = theta.len();
        let k = truncation as i64;
        let mut kappa = Vec::with_capacity((2 * truncation + 1) * h);
        let mut vidx = Vec::with_capacity(kappa.capacity());
        for kk in -k..=k {
            for (j, &t) in theta.iter().enumerate() {
                kappa.push(0.5 * t + PI * kk as f64);
                vidx.push(j);
            }
        }
        let plus_v = &chir.plus * &vw;
        let minus_u1v = &(&chir.minus * &u1) * &vw;
        Ok(Self { truncation, gamma: gamma.clone(), chir, theta, kappa, vidx, plus_v, minus_u1v })
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }

    pub fn fibre_dim(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn gamma(&self) -> &CMat {
        &self.gamma
    }

    pub fn chirality(&self) -> &Chirality {
        &self.chir
    }

    pub fn free_eigenvalues(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| -k).collect()
    }

    /// Values of all basis functions at x as an n × dim matrix.
    pub fn eval(&self, x: f64) -> CMat {
        let n = self.fibre_dim();
        CMat::from_fn(n, self.dim(), |r, b| {
            let (kap, j) = (self.kappa[b], self.vidx[b]);
            (c64::cis(kap * x) * self.plus_v[(r, j)] + c64::cis(kap * (2.0 - x)) * self.minus_u1v[(r, j)]) * SQRT_HALF
        })
    }

    /// Coefficients → function values at x.
    pub fn synthesize(&self, coeffs: &CMat, x: f64) -> CMat {
        &self.eval(x) * coeffs
    }

    pub fn default_quadrature(&self) -> Quadrature {
        Quadrature::for_truncation(self.truncation)
    }

    fn stacked(&self, quad: &Quadrature) -> CMat {
        let n = self.fibre_dim();
        let mut s = linalg::zeros(quad.nodes.len() * n, self.dim());
        for (q, (&x, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
            let e = self.eval(x);
            let sw = w.sqrt();
            for b in 0..self.dim() {
                for r in 0..n {
                    s[(q * n + r, b)] = e[(r, b)] * sw;
                }
            }
        }
        s
    }
}

/// Galerkin matrix ∫ u_a^{left}(x)* Q(x) u_b^{right}(x) dx.
pub fn galerkin_matrix(left: &GalerkinBasis, right: &GalerkinBasis, q: &dyn Fn(f64) -> CMat, quad: &Quadrature) -> CMat {
    let n = left.fibre_dim();
    let sl = left.stacked(quad);
    let sr = right.stacked(quad);
    let mut qs = linalg::zeros(sr.nrows(), sr.ncols());
    for (qi, &x) in quad.nodes.iter().enumerate() {
        let qx = q(x);
        let block = sr.subrows(qi * n, n);
        let prod = &qx * block;
        qs.subrows_mut(qi * n, n).copy_from(&prod);
    }
    sl.adjoint() * &qs
}

/// Matrix of γ d/dx + Q(x) in the basis.
pub fn assemble_matrix(basis: &GalerkinBasis, q: Option<&dyn Fn(f64) -> CMat>, quad: &Quadrature) -> CMat {
    let mut h = linalg::diag_real(&basis.free_eigenvalues());
    if let Some(q) = q {
        h += galerkin_matrix(basis, basis, q, quad);
    }
    linalg::symmetrize(&h)
}

/// Smooth step ρ(a, b): 0 for x ≤ a, 1 for x ≥ b, built from e^{−1/t}.
pub fn smooth_step(x: f64, a: f64, b: f64) -> f64 {
    if x <= a {
        return 0.0;
    }
    if x >= b {
        return 1.0;
    }
    let t = (x - a) / (b - a);
    let f = |z: f64| if z > 0.0 { (-1.0 / z).exp() } else { 0.0 };
    f(t) / (f(t) + f(1.0 - t))
}

pub fn smooth_step_derivative(x: f64, a: f64, b: f64) -> f64 {
    if x <= a || x >= b {
        return 0.0;
    }
    let t = (x - a) / (b - a);
    let f = |z: f64| (-1.0 / z).exp();
    let df = |z: f64| f(z) / (z * z);
    let (p, q) = (f(t), f(1.0 - t));
    (df(t) * q + p * df(1.0 - t)) / ((p + q) * (p + q)) / (b - a)
}

/// Cut-off ψ: 1 near the boundary, 0 away from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CutoffProfile {
    /// ψ(x) = 1 − ρ(a, b)(min(x, 1 − x)) on the interval.
    TwoSided { a: f64, b: f64 },
    /// ψ(s) = 1 − ρ(a, b)(s) on a collar [0, 1] with boundary at s = 0.
    Collar { a: f64, b: f64 },
    Constant { value: f64 },
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self::TwoSided { a: 0.25, b: 0.5 }
    }
}

impl CutoffProfile {
    pub fn collar_default() -> Self {
        Self::Collar { a: 0.25, b: 0.5 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::TwoSided { a, b } => 1.0 - smooth_step(x.min(1.0 - x), a, b),
            Self::Collar { a, b } => 1.0 - smooth_step(x, a, b),
            Self::Constant { value } => value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::TwoSided { a, b } if !(0.0 <= a && a < b && b <= 0.5) => {
                Err(Error::InvalidInput(format!("two-sided cut-off needs 0 ≤ a < b ≤ ½, got ({a}, {b})")))
            }
            Self::Collar { a, b } if !(0.0 <= a && a < b && b <= 1.0) => {
                Err(Error::InvalidInput(format!("collar cut-off needs 0 ≤ a < b ≤ 1, got ({a}, {b})")))
            }
            _ => Ok(()),
        }
    }
}

/// A unitary-valued map g: [0, 1] → U(V) commuting with γ.
pub trait IntervalSymbol: Send + Sync + std::fmt::Debug {
    fn value(&self, x: f64) -> CMat;
    fn derivative(&self, x: f64) -> CMat;
    /// True when g is constant near both ends (product structure on the collars).
    fn is_product(&self) -> bool;
}

#[derive(Debug, Clone)]
pub struct ConstantSymbol(pub CMat);

impl IntervalSymbol for ConstantSymbol {
    fn value(&self, _x: f64) -> CMat {
        self.0.clone()
    }
    fn derivative(&self, _x: f64) -> CMat {
        linalg::zeros(self.0.nrows(), self.0.ncols())
    }
    fn is_product(&self) -> bool {
        true
    }
}

/// Profile r(x) of a chiral symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Ramp {
    /// ρ(a, b)(x): flat near both ends.
    Smooth { a: f64, b: f64 },
    /// x²(3 − 2x) + 0.3·x(1 − x): nonzero slope at the ends.
    NonProduct,
}

impl Ramp {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Ramp::Smooth { a, b } => smooth_step(x, a, b),
            Ramp::NonProduct => x * x * (3.0 - 2.0 * x) + 0.3 * x * (1.0 - x),
        }
    }
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Ramp::Smooth { a, b } => smooth_step_derivative(x, a, b),
            Ramp::NonProduct => 6.0 * x * (1.0 - x) + 0.3 * (1.0 - 2.0 * x),
        }
    }
}

/// g(x) = Π₊ U₊ e^{i r(x) H₊} Π₊* + Π₋ U₋ e^{i r(x) H₋} Π₋*. Every γ-commuting unitary path
/// has this block form; the presets pick U±, H± and the ramp.
#[derive(Debug, Clone)]
pub struct ChiralSymbol {
    chir: Chirality,
    pub u_plus: CMat,
    pub h_plus: CMat,
    pub u_minus: CMat,
    pub h_minus: CMat,
    pub ramp: Ramp,
}

impl ChiralSymbol {
    pub fn new(gamma: &CMat, u_plus: CMat, h_plus: CMat, u_minus: CMat, h_minus: CMat, ramp: Ramp) -> Result<Self> {
        let chir = Chirality::of(gamma)?;
        let h = chir.half_dim();
        for m in [&u_plus, &h_plus, &u_minus, &h_minus] {
            if m.nrows() != h || m.ncols() != h {
                return Err(Error::InvalidInput(format!("chiral blocks must be {h}×{h}")));
            }
        }
        if linalg::unitarity_defect(&u_plus) > 1e-10 || linalg::unitarity_defect(&u_minus) > 1e-10 {
            return Err(Error::InvalidInput("chiral block is not unitary".into()));
        }
        if linalg::hermitian_defect(&h_plus) > 1e-12 || linalg::hermitian_defect(&h_minus) > 1e-12 {
            return Err(Error::NotHermitian { defect: linalg::hermitian_defect(&h_plus).max(linalg::hermitian_defect(&h_minus)) });
        }
        Ok(Self { chir, u_plus, h_plus, u_minus, h_minus, ramp })
    }

    /// e^{iφ(x)} on V₊ and identity on V₋, with φ running from φ₀ to φ₁ (needs dim V₊ = 1).
    pub fn phase_ramp(gamma: &CMat, phi0: f64, phi1: f64, ramp: Ramp) -> Result<Self> {
        let one = linalg::identity(1);
        Self::new(
            gamma,
            linalg::scale(c64::cis(phi0), &one),
            linalg::scale_re(phi1 - phi0, &one),
            one.clone(),
            linalg::zeros(1, 1),
            ramp,
        )
    }

    fn blocks(&self, x: f64) -> (CMat, CMat) {
        let r = self.ramp.eval(x);
        (&self.u_plus * linalg::expi_hermitian(&self.h_plus, r), &self.u_minus * linalg::expi_hermitian(&self.h_minus, r))
    }
}

impl IntervalSymbol for ChiralSymbol {
    fn value(&self, x: f64) -> CMat {
        let (p, m) = self.blocks(x);
        self.chir.assemble(&p, &m)
    }

    fn derivative(&self, x: f64) -> CMat {
        let (p, m) = self.blocks(x);
        let dr = self.ramp.derivative(x);
        let dp = linalg::scale(I * dr, &(&p * &self.h_plus));
        let dm = linalg::scale(I * dr, &(&m * &self.h_minus));
        self.chir.assemble(&dp, &dm)
    }

    fn is_product(&self) -> bool {
        matches!(self.ramp, Ramp::Smooth { a, b } if a > 0.0 && b < 1.0)
    }
}

/// γ(d/dx + A) on [0, 1] with constant tangential operator A.
#[derive(Debug, Clone)]
pub struct IntervalDiracModel {
    pub gamma: CMat,
    pub a: CMat,
}

impl IntervalDiracModel {
    pub fn new(gamma: CMat, a: CMat) -> Result<Self> {
        check_gamma(&gamma)?;
        if a.nrows() != gamma.nrows() || a.ncols() != gamma.ncols() {
            return Err(Error::InvalidInput("A and γ have different sizes".into()));
        }
        let hd = linalg::hermitian_defect(&a);
        if hd > 1e-12 {
            return Err(Error::NotHermitian { defect: hd });
        }
        let ac = linalg::fro_norm(&(&(&gamma * &a) + &(&a * &gamma)));
        if ac > 1e-12 {
            return Err(Error::InvalidInput(format!("γA + Aγ ≠ 0 (defect {ac:.2e})")));
        }
        Ok(Self { gamma, a: linalg::symmetrize(&a) })
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// Q = γA, the zeroth-order term of the unperturbed operator.
    pub fn potential(&self) -> CMat {
        &self.gamma * &self.a
    }

    /// Orthonormal eigenbases of A split as (negative, zero, positive) at tolerance 1e-9.
    pub fn split_a(&self) -> Result<(CMat, CMat, CMat)> {
        let (vals, vecs) = linalg::eigh(&self.a)?;
        let pick = |f: &dyn Fn(f64) -> bool| {
            let idx: Vec<usize> = (0..vals.len()).filter(|&i| f(vals[i])).collect();
            linalg::select_cols(&vecs, &idx)
        };
        Ok((pick(&|l| l < -1e-9), pick(&|l| l.abs() <= 1e-9), pick(&|l| l > 1e-9)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum End {
    Start,
    Finish,
}

/// Boundary condition P·u(end) = 0, P an orthogonal projector with γPγ* = I − P.
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub end: End,
    pub projector: CMat,
}

impl BoundaryCondition {
    pub fn from_projector(gamma: &CMat, projector: CMat, end: End) -> Result<Self> {
        let d = lagrangian_defect(gamma, &projector);
        if d > 1e-9 {
            return Err(Error::NotLagrangian { defect: d });
        }
        Ok(Self { end, projector: linalg::symmetrize(&projector) })
    }

    /// Condition with domain span(`domain`).
    pub fn from_domain(gamma: &CMat, domain: &CMat, end: End) -> Result<Self> {
        let n = gamma.nrows();
        let p = &linalg::identity(n) - &linalg::projector(&linalg::orth(domain, 1e-12));
        Self::from_projector(gamma, p, end)
    }

    /// APS-type condition with Lagrangian augmentation L ⊂ ker A.
    ///
    /// At x = 0 the inward normal is +∂ₓ and P = P_{>0}(A) + P_L. At x = 1 the boundary operator
    /// is −A, so P = P_{<0}(A) + P_L.
    pub fn aps(model: &IntervalDiracModel, l: Option<&CMat>, end: End) -> Result<Self> {
        let (neg, zero, pos) = model.split_a()?;
        let n = model.dim();
        let pl = match l {
            Some(l) if l.ncols() > 0 => {
                let lb = linalg::orth(l, 1e-12);
                let pz = linalg::projector(&zero);
                let leak = linalg::fro_norm(&(&(&pz * &lb) - &lb));
                if leak > 1e-9 {
                    return Err(Error::InvalidInput(format!("L is not inside ker A (defect {leak:.2e})")));
                }
                let pl = linalg::projector(&lb);
                let d = linalg::fro_norm(&(&(&(&model.gamma * &pl) * model.gamma.adjoint()) - &(&pz - &pl)));
                if d > 1e-9 {
                    return Err(Error::NotLagrangian { defect: d });
                }
                pl
            }
            _ => {
                if zero.ncols() > 0 {
                    return Err(Error::InvalidInput("ker A ≠ 0 requires a Lagrangian L".into()));
                }
                linalg::zeros(n, n)
            }
        };
        let spectral = match end {
            End::Start => linalg::projector(&pos),
            End::Finish => linalg::projector(&neg),
        };
        Self::from_projector(&model.gamma, &spectral + &pl, end)
    }

    /// Orthonormal basis of the domain ker P.
    pub fn domain(&self) -> CMat {
        let n = self.projector.nrows();
        linalg::range_of_projector(&(&linalg::identity(n) - &self.projector))
    }

    /// g P g⁻¹.
    pub fn conjugated(&self, g: &CMat) -> Self {
        Self { end: self.end, projector: linalg::symmetrize(&(&(g * &self.projector) * g.adjoint())) }
    }
}

/// Real line at angle α in C².
pub fn line(alpha: f64) -> CMat {
    linalg::from_real_rows(&[&[alpha.cos()], &[alpha.sin()]])
}

/// γ = [[0, −1], [1, 0]].
pub fn standard_gamma() -> CMat {
    linalg::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]])
}

/// Spectrum of γ d/dx on C² with u(0) on the line at α₀ and u(1) on the line at α₁.
///
/// γψ′ = λψ rotates ψ(x) to angle α₀ − λx, so λ ∈ {α₀ − α₁ + kπ}.
pub fn rotation_spectrum(alpha0: f64, alpha1: f64, k_range: (i64, i64)) -> ExactSpectrum {
    ExactSpectrum { offsets: vec![alpha0 - alpha1], spacing: PI, k_range }
}

/// Boundary conditions of the rotation model (domains are the lines themselves).
pub fn rotation_conditions(alpha0: f64, alpha1: f64) -> Result<(BoundaryCondition, BoundaryCondition)> {
    let g = standard_gamma();
    Ok((
        BoundaryCondition::from_domain(&g, &line(alpha0), End::Start)?,
        BoundaryCondition::from_domain(&g, &line(alpha1), End::Finish)?,
    ))
}

/// A truncated self-adjoint problem: basis and Hermitian matrix.
#[derive(Debug, Clone)]
pub struct IntervalProblem {
    pub basis: GalerkinBasis,
    pub matrix: CMat,
}

impl IntervalProblem {
    pub fn eigen(&self) -> Result<Eigensystem> {
        let (values, vectors) = linalg::eigh(&self.matrix)?;
        Ok(Eigensystem { values, vectors })
    }

    pub fn hermitian_defect(&self) -> f64 {
        linalg::hermitian_defect(&self.matrix)
    }
}

/// γ d/dx + Q(x) with the given conditions; Q defaults to γA.
pub fn assemble_interval_operator(
    model: &IntervalDiracModel,
    bc0: &BoundaryCondition,
    bc1: &BoundaryCondition,
    potential: Option<&dyn Fn(f64) -> CMat>,
    truncation: usize,
) -> Result<IntervalProblem> {
    if truncation < 4 {
        return Err(Error::TruncationTooSmall(format!("K = {truncation}")));
    }
    let basis = GalerkinBasis::new(&model.gamma, &bc0.domain(), &bc1.domain(), truncation)?;
    let quad = basis.default_quadrature();
    let q0 = model.potential();
    let default = move |_x: f64| q0.clone();
    let q: &dyn Fn(f64) -> CMat = match potential {
        Some(p) => p,
        None => &default,
    };
    let matrix = assemble_matrix(&basis, Some(q), &quad);
    Ok(IntervalProblem { basis, matrix })
}

/// A(x) = ψ(x)A + (1 − ψ(x))g⁻¹Ag for x-independent g commuting with γ.
pub fn perturbed_tangential_profile(
    model: &IntervalDiracModel,
    g: &CMat,
    psi: CutoffProfile,
) -> Result<impl Fn(f64) -> CMat + Send + Sync> {
    let c = linalg::fro_norm(&(&(g * &model.gamma) - &(&model.gamma * g)));
    if c > 1e-10 {
        return Err(Error::InvalidInput(format!("g does not commute with γ (defect {c:.2e})")));
    }
    psi.validate()?;
    let a = model.a.clone();
    let ga = &(g.adjoint() * &a) * g;
    Ok(move |x: f64| {
        let p = psi.eval(x);
        &linalg::scale_re(p, &a) + &linalg::scale_re(1.0 - p, &ga)
    })
}

/// g⁻¹[D, g] = γ g⁻¹g′ + γ(g⁻¹Ag − A), the commutator term as a zeroth-order potential.
pub fn commutator_potential(model: &IntervalDiracModel, g: &dyn IntervalSymbol, x: f64) -> CMat {
    let gx = g.value(x);
    let gi = gx.adjoint();
    let t = gi * (g.derivative(x) + &model.a * &gx) - &model.a;
    linalg::symmetrize(&(&model.gamma * &t))
}

/// Zeroth-order term of (1 − ψ)D + ψ·gDg⁻¹: γ[(1 − ψ)A + ψ(gAg⁻¹ − g′g⁻¹)].
pub fn conjugated_potential(model: &IntervalDiracModel, g: &dyn IntervalSymbol, psi: f64, x: f64) -> CMat {
    let gx = g.value(x);
    let gi = gx.adjoint();
    let conj = (&gx * &model.a - g.derivative(x)) * gi;
    let t = &linalg::scale_re(1.0 - psi, &model.a) + &linalg::scale_re(psi, &conj);
    linalg::symmetrize(&(&model.gamma * &t))
}

/// Calderón projection onto {(u(0), u(1)) : γ(u′ + Au) = 0} ⊂ V ⊕ V.
///
/// Solutions are u(1) = e^{−A}u(0). Each eigenmode of A is parametrized on the side where it
/// is bounded, so the construction stays well conditioned for large ‖A‖.
pub fn calderon_projection(model: &IntervalDiracModel) -> Result<CMat> {
    let (vals, vecs) = linalg::eigh(&model.a)?;
    let n = model.dim();
    let mut cols = linalg::zeros(2 * n, n);
    for (j, &l) in vals.iter().enumerate() {
        let (s0, s1) = if l >= 0.0 { (1.0, (-l).exp()) } else { (l.exp(), 1.0) };
        for r in 0..n {
            cols[(r, j)] = vecs[(r, j)] * s0;
            cols[(n + r, j)] = vecs[(r, j)] * s1;
        }
    }
    Ok(linalg::projector(&linalg::orth(&cols, 1e-14)))
}

/// Solves u′ = M(x)u from x = a to x = b (classical RK4); returns the transfer matrix.
pub fn transfer_matrix(m: &dyn Fn(f64) -> CMat, a: f64, b: f64, steps: usize) -> CMat {
    let n = m(a).nrows();
    let mut t = linalg::identity(n);
    let h = (b - a) / steps as f64;
    for i in 0..steps {
        let x = a + i as f64 * h;
        let k1 = &m(x) * &t;
        let k2 = &m(x + 0.5 * h) * &(&t + linalg::scale_re(0.5 * h, &k1));
        let k3 = &m(x + 0.5 * h) * &(&t + linalg::scale_re(0.5 * h, &k2));
        let k4 = &m(x + h) * &(&t + linalg::scale_re(h, &k3));
        let inc = &(&k1 + &linalg::scale_re(2.0, &k2)) + &(&linalg::scale_re(2.0, &k3) + &k4);
        t += linalg::scale_re(h / 6.0, &inc);
    }
    t
}

/// Everything needed for the boundary Toeplitz operator T_g = P_{gP(L)g⁻¹} g P_{P(L)}.
#[derive(Debug, Clone)]
pub struct BoundaryToeplitz {
    pub model: IntervalDiracModel,
    pub bc0: BoundaryCondition,
    pub bc1: BoundaryCondition,
    pub g: Arc<dyn IntervalSymbol>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryIndex {
    pub index: i64,
    pub converged: bool,
    pub truncations: (usize, usize),
    pub values: (i64, i64),
    pub evidence: PairIndex,
}

/// Extra modes on the conjugated side so that g maps the source window inside it.
const TARGET_MARGIN: usize = 10;
/// Source window radius as a fraction of the truncation energy πK.
const SOURCE_WINDOW: f64 = 0.7;

impl BoundaryToeplitz {
    pub fn new(model: IntervalDiracModel, l0: Option<&CMat>, l1: Option<&CMat>, g: Arc<dyn IntervalSymbol>) -> Result<Self> {
        let bc0 = BoundaryCondition::aps(&model, l0, End::Start)?;
        let bc1 = BoundaryCondition::aps(&model, l1, End::Finish)?;
        Self::with_conditions(model, bc0, bc1, g)
    }

    pub fn with_conditions(
        model: IntervalDiracModel,
        bc0: BoundaryCondition,
        bc1: BoundaryCondition,
        g: Arc<dyn IntervalSymbol>,
    ) -> Result<Self> {
        for x in [0.0, 0.5, 1.0] {
            let gx = g.value(x);
            if gx.nrows() != model.dim() {
                return Err(Error::InvalidInput("g has the wrong size".into()));
            }
            let c = linalg::fro_norm(&(&(&gx * &model.gamma) - &(&model.gamma * &gx)));
            if c > 1e-10 {
                return Err(Error::InvalidInput(format!("g does not commute with γ (defect {c:.2e})")));
            }
        }
        Ok(Self { model, bc0, bc1, g })
    }

    pub fn source_basis(&self, k: usize) -> Result<GalerkinBasis> {
        GalerkinBasis::new(&self.model.gamma, &self.bc0.domain(), &self.bc1.domain(), k)
    }

    /// Basis for the conjugated conditions gP(L)g⁻¹, i.e. domains g(0)Λ₀ and g(1)Λ₁.
    pub fn target_basis(&self, k: usize) -> Result<GalerkinBasis> {
        let d0 = &self.g.value(0.0) * self.bc0.domain();
        let d1 = &self.g.value(1.0) * self.bc1.domain();
        GalerkinBasis::new(&self.model.gamma, &d0, &d1, k + TARGET_MARGIN)
    }

    fn index_at(&self, k: usize, psi: Option<CutoffProfile>, thr: &RankThreshold) -> Result<PairIndex> {
        let b1 = self.source_basis(k)?;
        let b2 = self.target_basis(k)?;
        let quad = b2.default_quadrature();
        let q0 = self.model.potential();
        let h1 = assemble_matrix(&b1, Some(&|_x| q0.clone()), &quad);
        let h2 = match psi {
            None => assemble_matrix(&b2, Some(&|_x| q0.clone()), &quad),
            Some(p) => {
                let g = self.g.clone();
                let m = &self.model;
                assemble_matrix(&b2, Some(&|x| conjugated_potential(m, g.as_ref(), p.eval(x), x)), &quad)
            }
        };
        let g21 = galerkin_matrix(&b2, &b1, &|x| self.g.value(x), &quad);
        let (v1, e1) = linalg::eigh(&h1)?;
        let (v2, e2) = linalg::eigh(&h2)?;
        let es1 = Eigensystem { values: v1, vectors: e1 };
        let es2 = Eigensystem { values: v2, vectors: e2 };
        let source = SpectralWindow::from_eigensystem(&es1, SOURCE_WINDOW * PI * k as f64);
        let target = SpectralWindow::from_eigensystem(&es2, f64::INFINITY);
        windowed_pair_index(&source, &target, &g21, thr)
    }

    /// ind T_g at truncation K, refinement check at 2K.
    pub fn index(&self, k: usize, thr: &RankThreshold) -> Result<BoundaryIndex> {
        self.index_pair(k, None, thr)
    }

    /// ind T_{g,ψ}, with D^ψ = (1 − ψ)D + ψ·gDg⁻¹ on the conjugated side.
    pub fn perturbed_index(&self, k: usize, psi: CutoffProfile, thr: &RankThreshold) -> Result<BoundaryIndex> {
        psi.validate()?;
        self.index_pair(k, Some(psi), thr)
    }

    fn index_pair(&self, k: usize, psi: Option<CutoffProfile>, thr: &RankThreshold) -> Result<BoundaryIndex> {
        let a = self.index_at(k, psi, thr)?;
        let b = self.index_at(2 * k, psi, thr)?;
        Ok(BoundaryIndex {
            index: a.index,
            converged: a.index == b.index,
            truncations: (k, 2 * k),
            values: (a.index, b.index),
            evidence: a,
        })
    }

    /// u ↦ D + u(1 − ψ)g⁻¹[D, g] with conditions P(L); ψ = None means ψ ≡ 0.
    pub fn toeplitz_path(&self, k: usize, psi: Option<CutoffProfile>, points: usize) -> Result<OperatorPath> {
        let b1 = self.source_basis(k)?;
        let quad = b1.default_quadrature();
        let q0 = self.model.potential();
        let h0 = assemble_matrix(&b1, Some(&|_x| q0.clone()), &quad);
        let psi = psi.unwrap_or(CutoffProfile::Constant { value: 0.0 });
        let g = self.g.clone();
        let m = &self.model;
        let z = galerkin_matrix(&b1, &b1, &|x| linalg::scale_re(1.0 - psi.eval(x), &commutator_potential(m, g.as_ref(), x)), &quad);
        Ok(OperatorPath::affine("toeplitz-path", h0, linalg::symmetrize(&z), points))
    }

    /// s ↦ (1 − sψ)D + sψ·gDg⁻¹ with conditions gP(L)g⁻¹.
    pub fn perturbation_path(&self, k: usize, psi: CutoffProfile, points: usize) -> Result<OperatorPath> {
        psi.validate()?;
        let b2 = self.target_basis(k)?;
        let quad = b2.default_quadrature();
        let q0 = self.model.potential();
        let h0 = assemble_matrix(&b2, Some(&|_x| q0.clone()), &quad);
        let g = self.g.clone();
        let m = &self.model;
        let z = galerkin_matrix(
            &b2,
            &b2,
            &|x| &conjugated_potential(m, g.as_ref(), psi.eval(x), x) - &q0,
            &quad,
        );
        Ok(OperatorPath::affine("perturbation-path", h0, linalg::symmetrize(&z), points))
    }

    /// Boundary projector P(L)₀ ⊕ P(L)₁ on V ⊕ V.
    pub fn boundary_projector(&self) -> CMat {
        linalg::block_diag(&self.bc0.projector, &self.bc1.projector)
    }

    /// g(0) ⊕ g(1).
    pub fn boundary_symbol(&self) -> CMat {
        linalg::block_diag(&self.g.value(0.0), &self.g.value(1.0))
    }
}

pub fn boundary_toeplitz_index(bt: &BoundaryToeplitz, k: usize, thr: &RankThreshold) -> Result<BoundaryIndex> {
    bt.index(k, thr)
}

pub fn perturbed_boundary_toeplitz_index(
    bt: &BoundaryToeplitz,
    psi: CutoffProfile,
    k: usize,
    thr: &RankThreshold,
) -> Result<BoundaryIndex> {
    bt.perturbed_index(k, psi, thr)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderIndex {
    pub index: i64,
    pub kernel: usize,
    pub cokernel: usize,
}

/// APS index on [0, 1] × (boundary) for c(∂ₓ + D) with condition P≥0(D) at 0 and
/// Id − gP≥0(D)g⁻¹ at 1, solved through the transfer matrix e^{−xD}.
///
/// Kernel: u(0) ∈ E₋ and u(1) = e^{−D}u(0) ∈ gE≥0. Cokernel (adjoint problem −∂ₓ + D):
/// w(0) ∈ E≥0 and w(1) = e^{D}w(0) ∈ gE₋. `source_radius` limits the modes to which g is
/// applied, so that truncation edges never enter.
pub fn cylinder_aps_index_dense(d: &CMat, g: &CMat, source_radius: f64, thr: &RankThreshold) -> Result<CylinderIndex> {
    let (vals, vecs) = linalg::eigh(&linalg::symmetrize(d))?;
    let pick = |f: &dyn Fn(f64) -> bool| {
        let idx: Vec<usize> = (0..vals.len()).filter(|&i| f(vals[i])).collect();
        (linalg::select_cols(&vecs, &idx), idx)
    };
    let (e_neg, ineg) = pick(&|l| l < 0.0);
    let (e_pos, ipos) = pick(&|l| l >= 0.0);
    let (w_neg, _) = pick(&|l| l < 0.0 && l >= -source_radius);
    let (w_pos, _) = pick(&|l| l >= 0.0 && l <= source_radius);
    // Flow the half-spaces across the cylinder mode by mode, normalizing each column.
    let flow = |basis: &CMat, idx: &[usize], sign: f64| {
        let mut out = basis.clone();
        for (c, &i) in idx.iter().enumerate() {
            let s = (sign * vals[i]).exp();
            for r in 0..out.nrows() {
                out[(r, c)] *= s;
            }
            let norm = (0..out.nrows()).map(|r| out[(r, c)].norm_sqr()).sum::<f64>().sqrt();
            for r in 0..out.nrows() {
                out[(r, c)] /= norm;
            }
        }
        linalg::orth(&out, 1e-13)
    };
    let end_neg = flow(&e_neg, &ineg, -1.0);
    let end_pos = flow(&e_pos, &ipos, 1.0);
    let g_pos = linalg::orth(&(g * &w_pos), 1e-12);
    let g_neg = linalg::orth(&(g * &w_neg), 1e-12);
    let kernel = intersection_dim(&end_neg, &g_pos, thr)?;
    let cokernel = intersection_dim(&end_pos, &g_neg, thr)?;
    Ok(CylinderIndex { index: kernel as i64 - cokernel as i64, kernel, cokernel })
}

/// Cylinder index over the truncated circle with D_∂ eigenvalues k (and twist a).
pub fn cylinder_aps_index(g: &UnitarySymbol, twist: f64, truncation: usize, thr: &RankThreshold) -> Result<CylinderIndex> {
    let d = TruncatedCircleOperator::new(truncation, g.rank(), twist);
    let mg = symbol_operator(g, truncation)?;
    let radius = truncation as f64 - g.band_limit() as f64 - 1.0;
    cylinder_aps_index_dense(&d.matrix, &mg, radius, thr)
}

/// e^{iφ}: helper for scalar phases.
pub fn phase(phi: f64) -> c64 {
    c64::cis(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_basis_is_orthonormal_and_satisfies_conditions() {
        let g = standard_gamma();
        let b = GalerkinBasis::new(&g, &line(0.2), &line(1.3), 6).unwrap();
        let quad = b.default_quadrature();
        let gram = galerkin_matrix(&b, &b, &|_x| linalg::identity(2), &quad);
        assert!(linalg::fro_norm(&(&gram - linalg::identity(b.dim()))) < 1e-11);
        let p0 = &linalg::identity(2) - &linalg::projector(&line(0.2));
        let p1 = &linalg::identity(2) - &linalg::projector(&line(1.3));
        assert!(linalg::max_abs(&(&p0 * b.eval(0.0))) < 1e-12);
        assert!(linalg::max_abs(&(&p1 * b.eval(1.0))) < 1e-12);
    }

    #[test]
    fn free_eigenvalues_follow_the_rotation_rule() {
        let (a0, a1) = (0.2, 1.3);
        let b = GalerkinBasis::new(&standard_gamma(), &line(a0), &line(a1), 5).unwrap();
        let mut got = b.free_eigenvalues();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let exact = rotation_spectrum(a0, a1, (-20, 20)).eigenvalues_within(10.0);
        for l in exact {
            assert!(got.iter().any(|g| (g - l).abs() < 1e-12), "missing {l}");
        }
    }

    #[test]
    fn smooth_step_derivative_matches_difference() {
        for &x in &[0.3, 0.37, 0.41, 0.49] {
            let h = 1e-6;
            let fd = (smooth_step(x + h, 0.25, 0.5) - smooth_step(x - h, 0.25, 0.5)) / (2.0 * h);
            assert!((fd - smooth_step_derivative(x, 0.25, 0.5)).abs() < 1e-6);
        }
    }

    #[test]
    fn calderon_of_free_operator_is_diagonal() {
        let m = IntervalDiracModel::new(standard_gamma(), linalg::zeros(2, 2)).unwrap();
        let c = calderon_projection(&m).unwrap();
        let half = linalg::scale_re(0.5, &linalg::kron(&linalg::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]), &linalg::identity(2)));
        assert!(linalg::fro_norm(&(&c - &half)) < 1e-12);
    }
}
