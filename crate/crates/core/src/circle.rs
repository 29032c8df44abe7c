//! Fourier-truncated Dirac operators and Toeplitz operators on the circle.
//!
//! Basis ordering: mode k ∈ [−K, K] and fibre index α ∈ [0, N) sit at position (k + K)·N + α.

use std::collections::BTreeMap;

use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{uniform_grid, OperatorPath};
use crate::linalg::{self, c64, CMat, I};
use crate::spectral::{windowed_pair_index, PairIndex, RankThreshold, SpectralWindow};

pub const UNITARITY_TOL: f64 = 1e-10;

/// Band-limited unitary loop g(θ) = Σ_j ĝ_j e^{ijθ} in U(N).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitarySymbol {
    n: usize,
    coeffs: BTreeMap<i64, CMat>,
}

impl UnitarySymbol {
    /// Builds a symbol from Fourier blocks and checks unitarity on a sample grid.
    pub fn from_coefficients(n: usize, blocks: Vec<(i64, CMat)>) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (j, b) in blocks {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::InvalidInput(format!("Fourier block {j} is not {n}×{n}")));
            }
            let e = coeffs.entry(j).or_insert_with(|| linalg::zeros(n, n));
            *e = &*e + &b;
        }
        let s = Self { n, coeffs }.pruned();
        let defect = s.unitarity_defect(64.max(4 * s.band_limit() + 8));
        if defect > UNITARITY_TOL {
            return Err(Error::InvalidInput(format!("symbol is not unitary (defect {defect:.3e})")));
        }
        Ok(s)
    }

    fn pruned(mut self) -> Self {
        self.coeffs.retain(|_, b| linalg::max_abs(b) > 1e-14);
        if self.coeffs.is_empty() {
            self.coeffs.insert(0, linalg::zeros(self.n, self.n));
        }
        self
    }

    pub fn constant(u: CMat) -> Result<Self> {
        Self::from_coefficients(u.nrows(), vec![(0, u)])
    }

    pub fn identity(n: usize) -> Self {
        Self { n, coeffs: BTreeMap::from([(0, linalg::identity(n))]) }
    }

    /// e^{ikθ}, N = 1.
    pub fn winding(k: i64) -> Self {
        Self { n: 1, coeffs: BTreeMap::from([(k, linalg::identity(1))]) }
    }

    /// diag(e^{ik₁θ}, …, e^{ik_Nθ}).
    pub fn diagonal_windings(ks: &[i64]) -> Self {
        let n = ks.len();
        let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
        for (a, &k) in ks.iter().enumerate() {
            let e = coeffs.entry(k).or_insert_with(|| linalg::zeros(n, n));
            e[(a, a)] = linalg::ONE;
        }
        Self { n, coeffs }
    }

    /// (I − P) + e^{ikθ}P for an orthogonal projector P; winding k·rank P.
    pub fn elementary(p: &CMat, k: i64) -> Self {
        let n = p.nrows();
        if k == 0 {
            return Self::identity(n);
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, &linalg::identity(n) - p);
        coeffs.insert(k, p.clone());
        Self { n, coeffs }.pruned()
    }

    /// Recovers Fourier blocks from samples on a uniform grid of [0, 2π).
    pub fn from_samples(samples: &[CMat]) -> Result<Self> {
        let m = samples.len();
        if m < 8 {
            return Err(Error::InvalidInput("need at least 8 samples".into()));
        }
        let n = samples[0].nrows();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(m);
        let mut blocks: BTreeMap<i64, CMat> = BTreeMap::new();
        for r in 0..n {
            for c in 0..n {
                let mut buf: Vec<c64> = samples.iter().map(|s| s[(r, c)]).collect();
                fft.process(&mut buf);
                for (idx, v) in buf.into_iter().enumerate() {
                    let j = if idx <= m / 2 { idx as i64 } else { idx as i64 - m as i64 };
                    let b = blocks.entry(j).or_insert_with(|| linalg::zeros(n, n));
                    b[(r, c)] = v / m as f64;
                }
            }
        }
        let s = Self { n, coeffs: blocks }.pruned();
        let recon = samples
            .iter()
            .enumerate()
            .map(|(i, g)| linalg::max_abs(&(&s.eval(2.0 * std::f64::consts::PI * i as f64 / m as f64) - g)))
            .fold(0.0f64, f64::max);
        if recon > 1e-10 {
            return Err(Error::InvalidInput(format!("Fourier reconstruction error {recon:.3e}")));
        }
        if 2 * s.band_limit() >= m {
            return Err(Error::InvalidInput("samples do not resolve the symbol's band".into()));
        }
        let defect = s.unitarity_defect(m);
        if defect > UNITARITY_TOL {
            return Err(Error::InvalidInput(format!("sampled symbol is not unitary (defect {defect:.3e})")));
        }
        Ok(s)
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn band_limit(&self) -> usize {
        self.coeffs.keys().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn coefficient(&self, j: i64) -> CMat {
        self.coeffs.get(&j).cloned().unwrap_or_else(|| linalg::zeros(self.n, self.n))
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&i64, &CMat)> {
        self.coeffs.iter()
    }

    pub fn eval(&self, theta: f64) -> CMat {
        let mut g = linalg::zeros(self.n, self.n);
        for (&j, b) in &self.coeffs {
            g += linalg::scale(c64::cis(j as f64 * theta), b);
        }
        g
    }

    pub fn derivative(&self, theta: f64) -> CMat {
        let mut g = linalg::zeros(self.n, self.n);
        for (&j, b) in &self.coeffs {
            g += linalg::scale(I * j as f64 * c64::cis(j as f64 * theta), b);
        }
        g
    }

    pub fn samples(&self, m: usize) -> Vec<CMat> {
        (0..m).map(|i| self.eval(2.0 * std::f64::consts::PI * i as f64 / m as f64)).collect()
    }

    pub fn unitarity_defect(&self, m: usize) -> f64 {
        self.samples(m).iter().map(linalg::unitarity_defect).fold(0.0, f64::max)
    }

    /// Pointwise product (f·g)(θ) = f(θ)g(θ).
    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
        for (&i, a) in &self.coeffs {
            for (&j, b) in &other.coeffs {
                let e = coeffs.entry(i + j).or_insert_with(|| linalg::zeros(self.n, self.n));
                *e += a * b;
            }
        }
        Self { n: self.n, coeffs }.pruned()
    }

    /// g*(θ) = g(θ)⁻¹.
    pub fn inverse(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|(&j, b)| (-j, linalg::adjoint(b))).collect();
        Self { n: self.n, coeffs }
    }

    /// Left and right multiplication by constant unitaries.
    pub fn sandwich(&self, left: &CMat, right: &CMat) -> Self {
        let coeffs = self.coeffs.iter().map(|(&j, b)| (j, &(left * b) * right)).collect();
        Self { n: self.n, coeffs }.pruned()
    }

    /// Same-winding random perturbation V₁·E(P₁, 1)·g·E(P₂, −1)·V₂ with rank P₁ = rank P₂.
    pub fn random_homotopic<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let n = self.n;
        let r = rng.random_range(1..=n);
        let p1 = linalg::projector(&linalg::select_cols(&linalg::random_unitary(n, rng), &(0..r).collect::<Vec<_>>()));
        let p2 = linalg::projector(&linalg::select_cols(&linalg::random_unitary(n, rng), &(0..r).collect::<Vec<_>>()));
        let v1 = linalg::random_unitary(n, rng);
        let v2 = linalg::random_unitary(n, rng);
        Self::elementary(&p1, 1).mul(self).mul(&Self::elementary(&p2, -1)).sandwich(&v1, &v2)
    }

    /// −i g⁻¹g′ as a Fourier series (Hermitian-valued).
    pub fn log_derivative_potential(&self) -> BTreeMap<i64, CMat> {
        let inv = self.inverse();
        let mut out: BTreeMap<i64, CMat> = BTreeMap::new();
        for (&i, a) in &inv.coeffs {
            for (&j, b) in &self.coeffs {
                if j == 0 {
                    continue;
                }
                let e = out.entry(i + j).or_insert_with(|| linalg::zeros(self.n, self.n));
                *e += linalg::scale_re(j as f64, &(a * b));
            }
        }
        out.retain(|_, b| linalg::max_abs(b) > 1e-14);
        out
    }
}

/// Truncated D = −i d/dθ + a on modes −K..K with values in C^N.
#[derive(Debug, Clone)]
pub struct TruncatedCircleOperator {
    pub truncation: usize,
    pub rank: usize,
    pub twist: f64,
    pub matrix: CMat,
}

impl TruncatedCircleOperator {
    pub fn new(truncation: usize, rank: usize, twist: f64) -> Self {
        let d: Vec<f64> = (0..(2 * truncation + 1) * rank)
            .map(|i| (i / rank) as f64 - truncation as f64 + twist)
            .collect();
        Self { truncation, rank, twist, matrix: linalg::diag_real(&d) }
    }

    pub fn dim(&self) -> usize {
        (2 * self.truncation + 1) * self.rank
    }

    pub fn eigenvalue(&self, pos: usize) -> f64 {
        (pos / self.rank) as f64 - self.truncation as f64 + self.twist
    }

    /// Standard basis vectors with |k + a| ≤ radius, split at the nonnegative cut.
    pub fn window(&self, radius: f64) -> SpectralWindow {
        let pick = |keep: &dyn Fn(f64) -> bool| {
            let idx: Vec<usize> = (0..self.dim()).filter(|&p| keep(self.eigenvalue(p))).collect();
            linalg::select_cols(&linalg::identity(self.dim()), &idx)
        };
        SpectralWindow {
            nonneg: pick(&|l| l >= 0.0 && l <= radius),
            neg: pick(&|l| l < 0.0 && l >= -radius),
        }
    }
}

/// Block-Laurent matrix with (j, k) block ĥ_{j−k} for any finite Fourier series.
pub fn laurent_matrix(n: usize, coeffs: &BTreeMap<i64, CMat>, truncation: usize) -> CMat {
    let modes = 2 * truncation as i64 + 1;
    let dim = modes as usize * n;
    let mut m = linalg::zeros(dim, dim);
    for (&d, b) in coeffs {
        for col in 0..modes {
            let row = col + d;
            if row < 0 || row >= modes {
                continue;
            }
            for r in 0..n {
                for c in 0..n {
                    m[(row as usize * n + r, col as usize * n + c)] = b[(r, c)];
                }
            }
        }
    }
    m
}

/// Multiplication by g in the truncated Fourier basis.
pub fn symbol_operator(g: &UnitarySymbol, truncation: usize) -> Result<CMat> {
    if truncation <= g.band_limit() {
        return Err(Error::TruncationTooSmall(format!(
            "K = {truncation} does not exceed the symbol band limit {}",
            g.band_limit()
        )));
    }
    Ok(laurent_matrix(g.rank(), &g.coeffs, truncation))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzIndex {
    pub index: i64,
    pub converged: bool,
    pub truncations: (usize, usize),
    pub values: (i64, i64),
    pub evidence: PairIndex,
}

/// Index of P≥0·g·P≥0 on one truncation, read through the pair (P≥0, g P≥0 g⁻¹).
pub fn toeplitz_index_at(g: &UnitarySymbol, twist: f64, truncation: usize, thr: &RankThreshold) -> Result<PairIndex> {
    let d = TruncatedCircleOperator::new(truncation, g.rank(), twist);
    let mg = symbol_operator(g, truncation)?;
    let b = g.band_limit() as f64;
    // Source modes are kept far enough from the edge that g maps them inside the truncation.
    let source = d.window(truncation as f64 - b - 1.0);
    let target = d.window(f64::INFINITY);
    windowed_pair_index(&source, &target, &mg, thr)
}

pub fn hardy_toeplitz_index(g: &UnitarySymbol, twist: f64, truncation: usize, thr: &RankThreshold) -> Result<ToeplitzIndex> {
    let a = toeplitz_index_at(g, twist, truncation, thr)?;
    let b = toeplitz_index_at(g, twist, truncation + 5, thr)?;
    Ok(ToeplitzIndex {
        index: a.index,
        converged: a.index == b.index,
        truncations: (truncation, truncation + 5),
        values: (a.index, b.index),
        evidence: a,
    })
}

/// u ↦ D + u·g⁻¹[D, g] = D + u·(−i g⁻¹g′), from D to the compression of g⁻¹Dg.
pub fn conjugated_family(g: &UnitarySymbol, truncation: usize, twist: f64, points: usize) -> Result<OperatorPath> {
    let d = TruncatedCircleOperator::new(truncation, g.rank(), twist);
    let pot = g.log_derivative_potential();
    if truncation <= 2 * g.band_limit() {
        return Err(Error::TruncationTooSmall(format!("K = {truncation} too small for the family")));
    }
    let h1 = linalg::symmetrize(&laurent_matrix(g.rank(), &pot, truncation));
    Ok(OperatorPath::affine("circle-conjugated-family", d.matrix, h1, points).with_grid(uniform_grid(points)))
}

/// Lift of the family to the full conjugation M_g⁻¹ D M_g at u = 1, for the endpoint check.
pub fn conjugated_endpoint(g: &UnitarySymbol, truncation: usize, twist: f64) -> Result<CMat> {
    let d = TruncatedCircleOperator::new(truncation, g.rank(), twist);
    let m = symbol_operator(g, truncation)?;
    Ok(&(m.adjoint() * &d.matrix) * &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;
    use rand::SeedableRng;

    #[test]
    fn constant_symbol_is_block_diagonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = linalg::random_unitary(2, &mut rng);
        let g = UnitarySymbol::constant(u.clone()).unwrap();
        let m = symbol_operator(&g, 3).unwrap();
        let expect = linalg::kron(&linalg::identity(7), &u);
        assert!(linalg::fro_norm(&(&m - &expect)) < 1e-14);
    }

    #[test]
    fn winding_one_is_a_shift() {
        let m = symbol_operator(&UnitarySymbol::winding(1), 3).unwrap();
        for r in 0..7 {
            for c in 0..7 {
                let want = if r == c + 1 { 1.0 } else { 0.0 };
                assert_eq!(m[(r, c)], cr(want));
            }
        }
    }

    #[test]
    fn samples_round_trip() {
        let g = UnitarySymbol::diagonal_windings(&[1, -2]);
        let h = UnitarySymbol::from_samples(&g.samples(32)).unwrap();
        assert_eq!(h.band_limit(), 2);
        assert!(linalg::max_abs(&(&h.eval(0.7) - &g.eval(0.7))) < 1e-12);
    }

    #[test]
    fn winding_indices() {
        let thr = RankThreshold::default();
        for k in -3..=3 {
            let r = hardy_toeplitz_index(&UnitarySymbol::winding(k), 0.0, 12, &thr).unwrap();
            assert_eq!(r.index, -k);
            assert!(r.converged);
        }
    }

    #[test]
    fn log_derivative_of_winding() {
        let pot = UnitarySymbol::winding(3).log_derivative_potential();
        assert_eq!(pot.len(), 1);
        assert!((pot[&0][(0, 0)] - cr(3.0)).norm() < 1e-14);
    }
}
