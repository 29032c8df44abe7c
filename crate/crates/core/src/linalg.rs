//! Thin dense complex linear algebra layer over faer.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Scale, Side};

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

pub fn cr(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    Mat::zeros(r, c)
}

pub fn from_rows(rows: &[&[c64]]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    let m = if n == 0 { 0 } else { rows[0].len() };
    Mat::from_fn(n, m, |i, j| cr(rows[i][j]))
}

pub fn diag_real(d: &[f64]) -> CMat {
    Mat::from_fn(d.len(), d.len(), |i, j| if i == j { cr(d[i]) } else { ZERO })
}

pub fn diag(d: &[c64]) -> CMat {
    Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { ZERO })
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn scale(s: c64, a: &CMat) -> CMat {
    Scale(s) * a
}

pub fn scale_re(s: f64, a: &CMat) -> CMat {
    Scale(cr(s)) * a
}

pub fn fro_norm(a: &CMat) -> f64 {
    a.norm_l2()
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    Mat::from_fn(ar + b.nrows(), ac + b.ncols(), |i, j| {
        if i < ar && j < ac {
            a[(i, j)]
        } else if i >= ar && j >= ac {
            b[(i - ar, j - ac)]
        } else {
            ZERO
        }
    })
}

pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows());
    let ac = a.ncols();
    Mat::from_fn(a.nrows(), ac + b.ncols(), |i, j| if j < ac { a[(i, j)] } else { b[(i, j - ac)] })
}

pub fn vstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.ncols());
    let ar = a.nrows();
    Mat::from_fn(ar + b.nrows(), a.ncols(), |i, j| if i < ar { a[(i, j)] } else { b[(i - ar, j)] })
}

pub fn select_cols(a: &CMat, idx: &[usize]) -> CMat {
    Mat::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}

pub fn sub_rows(a: &CMat, start: usize, n: usize) -> CMat {
    a.subrows(start, n).to_owned()
}

/// Largest element-wise deviation from Hermitian symmetry, relative to the largest entry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let scale = max_abs(a).max(1.0);
    let mut d = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            d = d.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    d / scale
}

pub fn symmetrize(a: &CMat) -> CMat {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending, orthonormal eigenvectors.
pub fn eigh(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    if a.nrows() == 0 {
        return Ok((vec![], zeros(0, 0)));
    }
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver failed: {e:?}")))?;
    let vals = e.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn eigvalsh(a: &CMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    let v = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver failed: {e:?}")))?;
    Ok(v.into_iter().collect())
}

/// Thin SVD: (U, s, V) with s nonincreasing.
pub fn svd(a: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let s = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))?;
    let sv = s.S().column_vector().iter().map(|x| x.re).collect();
    Ok((s.U().to_owned(), sv, s.V().to_owned()))
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    a.singular_values()
        .map(|v| v.into_iter().collect())
        .unwrap_or_default()
}

pub fn eigvals(a: &CMat) -> Result<Vec<c64>> {
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    a.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))
}

pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

/// Orthonormal basis of the column span, ranks read at relative tolerance `tol`.
pub fn orth(a: &CMat, tol: f64) -> CMat {
    if a.ncols() == 0 {
        return zeros(a.nrows(), 0);
    }
    let s = a.svd().expect("svd");
    let sv: Vec<f64> = s.S().column_vector().iter().map(|x| x.re).collect();
    let top = sv.first().copied().unwrap_or(0.0);
    let r = sv.iter().filter(|&&x| x > tol * top.max(1e-300)).count();
    s.U().subcols(0, r).to_owned()
}

/// Orthonormal basis of the orthogonal complement of the column span.
pub fn complement(a: &CMat, tol: f64) -> CMat {
    let n = a.nrows();
    if a.ncols() == 0 {
        return identity(n);
    }
    let s = a.svd().expect("svd");
    let sv: Vec<f64> = s.S().column_vector().iter().map(|x| x.re).collect();
    let top = sv.first().copied().unwrap_or(0.0);
    let r = sv.iter().filter(|&&x| x > tol * top.max(1e-300)).count();
    s.U().subcols(r, n - r).to_owned()
}

pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// Basis of the range of an orthogonal projector.
pub fn range_of_projector(p: &CMat) -> CMat {
    let (vals, vecs) = eigh(&symmetrize(p)).expect("eigh");
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
    select_cols(&vecs, &idx)
}

/// exp(i t H) for Hermitian H.
pub fn expi_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, v) = eigh(&symmetrize(h)).expect("eigh");
    let d: Vec<c64> = vals.iter().map(|&l| c64::from_polar(1.0, t * l)).collect();
    &(&v * diag(&d)) * v.adjoint()
}

/// Eigendecomposition of a unitary matrix with orthonormal eigenvectors.
///
/// A Cayley transform centred in the widest gap of the spectrum turns the problem into a
/// Hermitian one, so nearly degenerate eigenvalues still get orthonormal vectors.
pub fn unitary_eigen(u: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = u.nrows();
    if n == 0 {
        return Ok((vec![], zeros(0, 0)));
    }
    let ev = eigvals(u)?;
    let mut args: Vec<f64> = ev.iter().map(|z| z.arg()).collect();
    args.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = (0.0, args[0] + std::f64::consts::TAU - args[n - 1]);
    let mut centre = args[n - 1] + 0.5 * best.1;
    for k in 1..n {
        let gap = args[k] - args[k - 1];
        if gap > best.1 {
            best = (args[k - 1], gap);
            centre = args[k - 1] + 0.5 * gap;
        }
    }
    // rotate so that the gap centre sits at -1
    let theta = centre + std::f64::consts::PI;
    let rot = scale(c64::from_polar(1.0, -theta), u);
    let id = identity(n);
    let num = &id - &rot;
    let den = &id + &rot;
    let k = scale(I, &(&num * inverse(&den)));
    let (kv, vecs) = eigh(&symmetrize(&k))?;
    let phases = kv
        .iter()
        .map(|&x| wrap_angle(theta + 2.0 * x.atan()))
        .collect();
    Ok((phases, vecs))
}

/// Map an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut x = a % tau;
    if x <= -std::f64::consts::PI {
        x += tau;
    } else if x > std::f64::consts::PI {
        x -= tau;
    }
    x
}

/// Principal logarithm of a unitary: returns Hermitian H with U = exp(iH).
pub fn unitary_log(u: &CMat) -> Result<CMat> {
    let (ph, v) = unitary_eigen(u)?;
    let d: Vec<c64> = ph.iter().map(|&p| cr(p)).collect();
    Ok(&(&v * diag(&d)) * v.adjoint())
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.ncols();
    fro_norm(&(&(u.adjoint() * u) - identity(n)))
}

pub fn trace(a: &CMat) -> c64 {
    let mut t = ZERO;
    for i in 0..a.nrows().min(a.ncols()) {
        t += a[(i, i)];
    }
    t
}

/// Haar-like random unitary from a seeded generator (QR of a complex Gaussian matrix).
pub fn random_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = random_gaussian(n, n, rng);
    let qr = g.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R();
    let d: Vec<c64> = (0..n)
        .map(|i| {
            let x = r[(i, i)];
            if x.norm() > 0.0 {
                x / x.norm()
            } else {
                ONE
            }
        })
        .collect();
    &q * diag(&d)
}

pub fn random_gaussian<R: rand::Rng + ?Sized>(r: usize, c: usize, rng: &mut R) -> CMat {
    Mat::from_fn(r, c, |_, _| c64::new(gauss(rng), gauss(rng)))
}

pub fn random_hermitian<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = random_gaussian(n, n, rng);
    symmetrize(&g)
}

/// Standard normal sample by Box–Muller.
pub fn gauss<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn unitary_eigen_reconstructs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 5, 8] {
            let u = random_unitary(n, &mut rng);
            assert!(unitarity_defect(&u) < 1e-12);
            let (ph, v) = unitary_eigen(&u).unwrap();
            let d: Vec<c64> = ph.iter().map(|&p| c64::from_polar(1.0, p)).collect();
            let back = &(&v * diag(&d)) * v.adjoint();
            assert!(fro_norm(&(&back - &u)) < 1e-10);
            assert!(unitarity_defect(&v) < 1e-10);
        }
    }

    #[test]
    fn unitary_eigen_handles_minus_one() {
        let u = diag(&[cr(-1.0), cr(1.0), I]);
        let (mut ph, _) = unitary_eigen(&u).unwrap();
        ph.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ph[2].abs() - std::f64::consts::PI).abs() < 1e-12 || (ph[0].abs() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let a = from_real_rows(&[&[1.0], &[1.0], &[0.0]]);
        let c = complement(&a, 1e-12);
        assert_eq!(c.ncols(), 2);
        assert!(fro_norm(&(a.adjoint() * &c)) < 1e-14);
    }
}
