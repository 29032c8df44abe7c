//! Hermitian operator models, spectral projectors and Fredholm pair indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Relative element-wise tolerance for accepting a dense matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute zero-eigenvalue tolerance, scaled by max(1, ‖H‖).
pub const ZERO_TOL: f64 = 1e-10;

/// Eigenvalue rule λ = offset_j + k·spacing for k in `k_range`, one class per offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSpectrum {
    pub offsets: Vec<f64>,
    pub spacing: f64,
    pub k_range: (i64, i64),
}

impl ExactSpectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for k in self.k_range.0..=self.k_range.1 {
            for &o in &self.offsets {
                v.push(o + k as f64 * self.spacing);
            }
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// Eigenvalues with |λ| ≤ r, regardless of `k_range`.
    pub fn eigenvalues_within(&self, r: f64) -> Vec<f64> {
        let kmax = (r / self.spacing.abs()).ceil() as i64 + 2;
        let mut v: Vec<f64> = (-kmax..=kmax)
            .flat_map(|k| self.offsets.iter().map(move |&o| o + k as f64 * self.spacing))
            .filter(|x| x.abs() <= r)
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

#[derive(Debug, Clone)]
pub enum HermitianOperatorModel {
    Dense(CMat),
    Exact(ExactSpectrum),
}

impl HermitianOperatorModel {
    pub fn dense(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput("matrix is not square".into()));
        }
        let defect = linalg::hermitian_defect(&m);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self::Dense(linalg::symmetrize(&m)))
    }

    pub fn exact(s: ExactSpectrum) -> Result<Self> {
        if !s.spacing.is_finite() || s.offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidInput("eigenvalue rule is not real-valued".into()));
        }
        Ok(Self::Exact(s))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(m) => m.nrows(),
            Self::Exact(s) => s.offsets.len() * (s.k_range.1 - s.k_range.0 + 1).max(0) as usize,
        }
    }

    pub fn matrix(&self) -> Option<&CMat> {
        match self {
            Self::Dense(m) => Some(m),
            Self::Exact(_) => None,
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            Self::Dense(m) => linalg::eigvalsh(m),
            Self::Exact(s) => Ok(s.eigenvalues()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigensystem {
    pub fn zero_tol(&self) -> f64 {
        let norm = self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        ZERO_TOL * norm.max(1.0)
    }

    /// Orthonormal columns for eigenvalues selected by `keep`.
    pub fn columns<F: Fn(f64) -> bool>(&self, keep: F) -> CMat {
        let idx: Vec<usize> = (0..self.values.len()).filter(|&i| keep(self.values[i])).collect();
        linalg::select_cols(&self.vectors, &idx)
    }
}

pub fn eigendecompose(h: &HermitianOperatorModel) -> Result<Eigensystem> {
    match h {
        HermitianOperatorModel::Dense(m) => {
            let defect = linalg::hermitian_defect(m);
            if defect > HERMITIAN_TOL {
                return Err(Error::NotHermitian { defect });
            }
            let (values, vectors) = linalg::eigh(m)?;
            Ok(Eigensystem { values, vectors })
        }
        HermitianOperatorModel::Exact(_) => Err(Error::InvalidInput(
            "eigendecompose requires a dense operator".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cut {
    /// λ ≥ 0, zero modes included.
    Nonneg,
    /// λ > 0.
    Pos,
}

#[derive(Debug, Clone)]
pub struct SpectralProjector {
    pub matrix: CMat,
    pub cut: Cut,
    pub rank: usize,
}

impl SpectralProjector {
    pub fn from_matrix(matrix: CMat, cut: Cut) -> Self {
        let rank = linalg::trace(&matrix).re.round() as usize;
        Self { matrix, cut, rank }
    }

    pub fn range(&self) -> CMat {
        linalg::range_of_projector(&self.matrix)
    }

    pub fn complement(&self) -> CMat {
        let n = self.matrix.nrows();
        linalg::range_of_projector(&(&linalg::identity(n) - &self.matrix))
    }
}

pub fn spectral_projector(h: &HermitianOperatorModel, cut: Cut) -> Result<SpectralProjector> {
    let es = eigendecompose(h)?;
    let tol = es.zero_tol();
    let keep: Box<dyn Fn(f64) -> bool> = match cut {
        Cut::Nonneg => Box::new(move |l| l >= -tol),
        Cut::Pos => {
            if let Some(&l) = es.values.iter().find(|l| l.abs() < tol) {
                return Err(Error::CutAmbiguity { lambda: l });
            }
            Box::new(|l| l > 0.0)
        }
    };
    let b = es.columns(keep);
    let rank = b.ncols();
    Ok(SpectralProjector { matrix: linalg::projector(&b), cut, rank })
}

/// Singular-value cutoff with a mandatory relative-gap check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankThreshold {
    pub cutoff: f64,
    pub gap: f64,
}

impl Default for RankThreshold {
    fn default() -> Self {
        Self { cutoff: 1e-8, gap: 1e3 }
    }
}

impl RankThreshold {
    /// Threshold for kernel defects read off truncated spectral windows.
    pub fn windowed() -> Self {
        Self { cutoff: 1e-5, gap: 1e3 }
    }

    /// Number of values at or below the cutoff; errors if the cutoff is not inside a gap.
    pub fn count_below(&self, values: &[f64]) -> Result<usize> {
        let mut below_max = 0.0f64;
        let mut above_min = f64::INFINITY;
        let mut n = 0;
        for &v in values {
            if v <= self.cutoff {
                n += 1;
                below_max = below_max.max(v);
            } else {
                above_min = above_min.min(v);
            }
        }
        let floor = self.cutoff / self.gap;
        if above_min < self.gap * below_max.max(floor) {
            let mut vals = values.to_vec();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.truncate(12);
            return Err(Error::UnstableRank { cutoff: self.cutoff, gap: self.gap, values: vals });
        }
        Ok(n)
    }
}

/// Index of the pair with per-side evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairIndex {
    pub index: i64,
    pub kernel: usize,
    pub cokernel: usize,
    /// Smallest defects on the kernel side (sorted).
    pub kernel_evidence: Vec<f64>,
    pub cokernel_evidence: Vec<f64>,
}

fn smallest(mut v: Vec<f64>, k: usize) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.truncate(k);
    v
}

/// dim ker(PQ|Im Q) − dim ker(QP|Im P).
pub fn pair_index(p: &SpectralProjector, q: &SpectralProjector, thr: &RankThreshold) -> Result<i64> {
    Ok(pair_index_detailed(&p.matrix, &q.matrix, thr)?.index)
}

pub fn pair_index_detailed(p: &CMat, q: &CMat, thr: &RankThreshold) -> Result<PairIndex> {
    if p.nrows() != q.nrows() {
        return Err(Error::InvalidInput("projectors act on different spaces".into()));
    }
    let uq = linalg::range_of_projector(q);
    let up = linalg::range_of_projector(p);
    let s1 = padded_singular_values(&(p * &uq), uq.ncols());
    let s2 = padded_singular_values(&(q * &up), up.ncols());
    let k = thr.count_below(&s1)?;
    let c = thr.count_below(&s2)?;
    Ok(PairIndex {
        index: k as i64 - c as i64,
        kernel: k,
        cokernel: c,
        kernel_evidence: smallest(s1, k + 2),
        cokernel_evidence: smallest(s2, c + 2),
    })
}

/// Singular values of an r×c matrix as a list of length c (missing ones are zero).
fn padded_singular_values(m: &CMat, c: usize) -> Vec<f64> {
    let mut s = linalg::singular_values(m);
    s.resize(c, 0.0);
    s
}

/// dim(Im P ∩ Im Q), read from the sines of the principal angles.
pub fn subspace_intersection_dim(
    p: &SpectralProjector,
    q: &SpectralProjector,
    thr: &RankThreshold,
) -> Result<usize> {
    intersection_dim(&p.range(), &q.range(), thr)
}

/// Dimension of the intersection of two column spans (orthonormal bases).
pub fn intersection_dim(a: &CMat, b: &CMat, thr: &RankThreshold) -> Result<usize> {
    if b.ncols() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    let n = a.nrows();
    let pa_perp = &linalg::identity(n) - &linalg::projector(a);
    let s = padded_singular_values(&(&pa_perp * b), b.ncols());
    thr.count_below(&s)
}

/// Low-energy window of a truncated self-adjoint problem: orthonormal eigenvector columns
/// split at the nonnegative cut.
#[derive(Debug, Clone)]
pub struct SpectralWindow {
    pub nonneg: CMat,
    pub neg: CMat,
}

impl SpectralWindow {
    /// Columns with |λ| ≤ radius; |λ| ≤ zero tolerance counts as nonnegative.
    pub fn from_eigensystem(es: &Eigensystem, radius: f64) -> Self {
        let tol = es.zero_tol();
        Self {
            nonneg: es.columns(|l| l >= -tol && l <= radius),
            neg: es.columns(|l| l < -tol && l >= -radius),
        }
    }
}

/// Index of P₂ g P₁ between the nonnegative parts of two spectral windows.
///
/// `g` maps coordinates of the source space to coordinates of the target space. A source
/// vector lies in the kernel when g carries it entirely into the negative target window, so the
/// kernel dimension is the multiplicity of singular value 1 of the compression; the defect
/// 1 − σ² is what gets thresholded. The cokernel is handled symmetrically with g*.
pub fn windowed_pair_index(
    source: &SpectralWindow,
    target: &SpectralWindow,
    g: &CMat,
    thr: &RankThreshold,
) -> Result<PairIndex> {
    let defects = |m: CMat, c: usize| -> Vec<f64> {
        padded_singular_values(&m, c)
            .into_iter()
            .map(|s| ((1.0 - s) * (1.0 + s)).max(0.0))
            .collect()
    };
    let m1 = &(target.neg.adjoint() * g) * &source.nonneg;
    let d1 = defects(m1, source.nonneg.ncols());
    let m2 = &(source.neg.adjoint() * g.adjoint()) * &target.nonneg;
    let d2 = defects(m2, target.nonneg.ncols());
    let k = thr.count_below(&d1)?;
    let c = thr.count_below(&d2)?;
    Ok(PairIndex {
        index: k as i64 - c as i64,
        kernel: k,
        cokernel: c,
        kernel_evidence: smallest(d1, k + 2),
        cokernel_evidence: smallest(d2, c + 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, diag_real, from_real_rows};

    fn proj(d: &[f64]) -> SpectralProjector {
        SpectralProjector::from_matrix(diag_real(d), Cut::Nonneg)
    }

    #[test]
    fn eigendecompose_small_cases() {
        let h = HermitianOperatorModel::dense(diag_real(&[3.0, -1.0])).unwrap();
        let es = eigendecompose(&h).unwrap();
        assert_eq!(es.values, vec![-1.0, 3.0]);
        let h = HermitianOperatorModel::dense(from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let es = eigendecompose(&h).unwrap();
        assert!((es.values[0] + 1.0).abs() < 1e-14 && (es.values[1] - 1.0).abs() < 1e-14);
        let v = es.vectors.col(0);
        assert!((v[0] + v[1]).norm() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(HermitianOperatorModel::dense(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn projector_examples() {
        let h = HermitianOperatorModel::dense(diag_real(&[-1.0, 2.0])).unwrap();
        let p = spectral_projector(&h, Cut::Nonneg).unwrap();
        assert!(linalg::fro_norm(&(&p.matrix - diag_real(&[0.0, 1.0]))) < 1e-14);
        let h = HermitianOperatorModel::dense(diag_real(&[0.0, -3.0])).unwrap();
        let p = spectral_projector(&h, Cut::Nonneg).unwrap();
        assert!(linalg::fro_norm(&(&p.matrix - diag_real(&[1.0, 0.0]))) < 1e-14);
        assert!(matches!(spectral_projector(&h, Cut::Pos), Err(Error::CutAmbiguity { .. })));
        let h = HermitianOperatorModel::dense(from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let p = spectral_projector(&h, Cut::Nonneg).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.matrix[(i, j)] - cr(0.5)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pair_index_examples() {
        let thr = RankThreshold::default();
        let p = proj(&[1.0, 0.0]);
        assert_eq!(pair_index(&p, &p, &thr).unwrap(), 0);
        assert_eq!(pair_index(&p, &proj(&[0.0, 1.0]), &thr).unwrap(), 0);
        assert_eq!(pair_index(&proj(&[1.0, 1.0]), &p, &thr).unwrap(), -1);
    }

    #[test]
    fn intersection_examples() {
        let thr = RankThreshold::default();
        let p = proj(&[1.0, 1.0, 0.0]);
        assert_eq!(subspace_intersection_dim(&p, &p, &thr).unwrap(), 2);
        assert_eq!(subspace_intersection_dim(&proj(&[1.0, 0.0]), &proj(&[0.0, 1.0]), &thr).unwrap(), 0);
    }

    #[test]
    fn gap_check_flags_clusters() {
        let thr = RankThreshold::default();
        assert_eq!(thr.count_below(&[1e-14, 0.3, 1.0]).unwrap(), 1);
        assert_eq!(thr.count_below(&[1e-14, 5e-8]).unwrap(), 1);
        assert!(thr.count_below(&[5e-9, 2e-8]).is_err());
        assert!(thr.count_below(&[2e-9, 1e-7]).is_err());
    }
}
