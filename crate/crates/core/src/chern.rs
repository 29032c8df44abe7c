//! Odd Chern character and transgression forms on one-dimensional bases.
//!
//! On a 1-dimensional base only the lowest terms survive: ch(g) = Tr[g⁻¹dg] and
//! ch̃(g_t) = ∫₀¹ Tr[g_t⁻¹∂_t g_t] dt. Both are paired with 1/(2πi). An optional constant weight
//! matrix W replaces Tr by Tr[W ·], which carries the flat rank factor of the interval models.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::circle::UnitarySymbol;
use crate::error::{Error, Result};
use crate::interval::{IntervalSymbol, Quadrature};
use crate::linalg::{self, c64, CMat, I};

const UNITARY_TOL: f64 = 1e-8;

fn two_pi_i() -> c64 {
    c64::new(0.0, TAU)
}

fn weighted_trace(w: Option<&CMat>, m: &CMat) -> c64 {
    match w {
        Some(w) => linalg::trace(&(w * m)),
        None => linalg::trace(m),
    }
}

/// Samples of the n = 0 density Tr[W g⁻¹g′] on a base grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OddChernForm {
    pub base_dim: usize,
    pub grid: Vec<f64>,
    pub samples: Vec<c64>,
    /// n!/(2n+1)! for n = 0, 1, …; only n = 0 contributes on a 1-dimensional base.
    pub normalization: Vec<f64>,
}

impl OddChernForm {
    pub fn on_circle(g: &UnitarySymbol, m: usize) -> Self {
        let grid: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
        let samples = grid.iter().map(|&t| linalg::trace(&(g.eval(t).adjoint() * g.derivative(t)))).collect();
        Self { base_dim: 1, grid, samples, normalization: vec![1.0] }
    }

    /// Trapezoidal (spectral on periodic grids) value of (1/2πi)∮.
    pub fn circle_integral(&self) -> c64 {
        let m = self.samples.len() as f64;
        self.samples.iter().sum::<c64>() * (TAU / m) / two_pi_i()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernIntegral {
    pub value: f64,
    pub imaginary_part: f64,
    pub distance_to_integer: f64,
    pub points: usize,
}

impl ChernIntegral {
    pub fn rounded(&self) -> i64 {
        self.value.round() as i64
    }
}

/// (1/2πi)∮ Tr[g⁻¹g′] dθ, refined by grid doubling from 64 points.
pub fn odd_chern_integral(g: &UnitarySymbol) -> Result<ChernIntegral> {
    let mut m = 64.max(4 * g.band_limit().next_power_of_two());
    let mut prev = OddChernForm::on_circle(g, m).circle_integral();
    for _ in 0..6 {
        m *= 2;
        let cur = OddChernForm::on_circle(g, m).circle_integral();
        if (cur - prev).norm() < 1e-10 {
            return Ok(ChernIntegral {
                value: cur.re,
                imaginary_part: cur.im,
                distance_to_integer: (cur.re - cur.re.round()).abs(),
                points: m,
            });
        }
        prev = cur;
    }
    Err(Error::NonConvergent { residual: f64::NAN })
}

/// Same integral for a loop given only by equispaced samples, differentiated spectrally.
pub fn odd_chern_integral_samples(samples: &[CMat]) -> Result<ChernIntegral> {
    let m = samples.len();
    if m < 64 {
        return Err(Error::InvalidInput(format!("need ≥ 64 samples, got {m}")));
    }
    for s in samples {
        if linalg::unitarity_defect(s) > UNITARY_TOL {
            return Err(Error::InvalidInput("loop sample is not unitary".into()));
        }
    }
    let d = spectral_derivative(samples);
    let sum: c64 = samples.iter().zip(&d).map(|(g, dg)| linalg::trace(&(g.adjoint() * dg))).sum();
    let v = sum * (TAU / m as f64) / two_pi_i();
    Ok(ChernIntegral { value: v.re, imaginary_part: v.im, distance_to_integer: (v.re - v.re.round()).abs(), points: m })
}

/// Entrywise derivative of periodic samples on [0, 2π).
pub fn spectral_derivative(samples: &[CMat]) -> Vec<CMat> {
    let m = samples.len();
    let (r, c) = (samples[0].nrows(), samples[0].ncols());
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut out = vec![linalg::zeros(r, c); m];
    let mut buf = vec![c64::new(0.0, 0.0); m];
    for i in 0..r {
        for j in 0..c {
            for (k, s) in samples.iter().enumerate() {
                buf[k] = s[(i, j)];
            }
            fwd.process(&mut buf);
            for (k, b) in buf.iter_mut().enumerate() {
                let freq = if 2 * k < m { k as f64 } else if 2 * k == m { 0.0 } else { k as f64 - m as f64 };
                *b *= I * freq / m as f64;
            }
            inv.process(&mut buf);
            for (k, o) in out.iter_mut().enumerate() {
                o[(i, j)] = buf[k];
            }
        }
    }
    out
}

/// (1/2πi)∫₀¹ Tr[W g⁻¹g′] dx for an interval symbol.
pub fn interval_chern_integral(g: &dyn IntervalSymbol, weight: Option<&CMat>) -> f64 {
    let quad = Quadrature::gauss_legendre(400);
    let s: c64 = quad
        .nodes
        .iter()
        .zip(&quad.weights)
        .map(|(&x, &w)| weighted_trace(weight, &(g.value(x).adjoint() * g.derivative(x))) * w)
        .sum();
    (s / two_pi_i()).re
}

/// Local side of the interval index formula: (1/2πi)∫₀¹ tr[(iγ) g⁻¹g′] dx.
pub fn interval_local_term(gamma: &CMat, g: &dyn IntervalSymbol) -> f64 {
    interval_chern_integral(g, Some(&linalg::scale(I, gamma)))
}

/// A homotopy of unitary maps g_t(x), x on the circle [0, 2π) or the interval [0, 1].
#[derive(Clone)]
pub struct UnitaryFamily {
    pub base: Base,
    pub rank: usize,
    f: Arc<dyn Fn(f64, f64) -> CMat + Send + Sync>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Base {
    Circle,
    Interval,
}

impl Base {
    pub fn length(&self) -> f64 {
        match self {
            Base::Circle => TAU,
            Base::Interval => 1.0,
        }
    }
}

impl std::fmt::Debug for UnitaryFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryFamily").field("base", &self.base).field("rank", &self.rank).finish()
    }
}

impl UnitaryFamily {
    pub fn new(base: Base, f: impl Fn(f64, f64) -> CMat + Send + Sync + 'static) -> Result<Self> {
        let rank = f(0.0, 0.0).nrows();
        let fam = Self { base, rank, f: Arc::new(f) };
        for &t in &[0.0, 0.37, 1.0] {
            for &x in &[0.0, 0.29, 0.5 * base.length(), 0.91 * base.length()] {
                let d = linalg::unitarity_defect(&fam.at(t, x));
                if d > UNITARY_TOL {
                    return Err(Error::InvalidInput(format!("g_t(x) is not unitary at ({t}, {x}): {d:.2e}")));
                }
            }
        }
        Ok(fam)
    }

    pub fn at(&self, t: f64, x: f64) -> CMat {
        (self.f)(t, x)
    }

    /// g_t = exp(i·p(t, x)·H) with H Hermitian: unitary for every real profile p.
    pub fn exponential(base: Base, h: CMat, p: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let (vals, vecs) = linalg::eigh(&linalg::symmetrize(&h))?;
        Self::new(base, move |t, x| {
            let s = p(t, x);
            let d: Vec<c64> = vals.iter().map(|&l| c64::cis(s * l)).collect();
            &(&vecs * linalg::diag(&d)) * vecs.adjoint()
        })
    }

    /// Left multiplication by a fixed t-independent loop: g_t ↦ h·g_t.
    pub fn premultiplied(&self, h: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        let f = self.f.clone();
        Self { base: self.base, rank: self.rank, f: Arc::new(move |t, x| &h(x) * f(t, x)) }
    }

    fn central_t(&self, t: f64, x: f64, h: f64) -> CMat {
        let (a, b) = ((t - h).max(0.0), (t + h).min(1.0));
        linalg::scale_re(1.0 / (b - a), &(&self.at(b, x) - &self.at(a, x)))
    }

    fn central_x(&self, t: f64, x: f64, h: f64) -> CMat {
        let (a, b) = match self.base {
            Base::Circle => (x - h, x + h),
            Base::Interval => ((x - h).max(0.0), (x + h).min(1.0)),
        };
        linalg::scale_re(1.0 / (b - a), &(&self.at(t, b) - &self.at(t, a)))
    }
}

/// Samples of the n = 0 transgression density Tr[W g_t⁻¹∂_t g_t] on a (t, x) grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransgressionForm {
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// samples[i][j] at (t_i, x_j).
    pub samples: Vec<Vec<c64>>,
    /// n!/(2n)! for n = 0, 1, …
    pub normalization: Vec<f64>,
}

impl TransgressionForm {
    pub fn sample(fam: &UnitaryFamily, weight: Option<&CMat>, nt: usize, x_grid: Vec<f64>) -> Result<Self> {
        if nt < 32 {
            return Err(Error::InvalidInput(format!("need ≥ 32 t-samples, got {nt}")));
        }
        let t_grid = crate::flow::uniform_grid(nt);
        let h = 1.0 / (nt - 1) as f64;
        let mut samples = Vec::with_capacity(nt);
        for &t in &t_grid {
            let row = x_grid
                .iter()
                .map(|&x| {
                    let g = fam.at(t, x);
                    if linalg::unitarity_defect(&g) > UNITARY_TOL {
                        return Err(Error::InvalidInput(format!("g_t(x) not unitary at ({t}, {x})")));
                    }
                    Ok(weighted_trace(weight, &(g.adjoint() * fam.central_t(t, x, h))))
                })
                .collect::<Result<Vec<_>>>()?;
            samples.push(row);
        }
        Ok(Self { t_grid, x_grid, samples, normalization: vec![1.0] })
    }

    /// (1/2πi)∫₀¹ density dt at each x (trapezoid in t).
    pub fn integrated(&self) -> Vec<f64> {
        let n = self.t_grid.len();
        let h = 1.0 / (n - 1) as f64;
        (0..self.x_grid.len())
            .map(|j| {
                let s: c64 = (0..n).map(|i| self.samples[i][j] * if i == 0 || i == n - 1 { 0.5 * h } else { h }).sum();
                (s / two_pi_i()).re
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransgressionIntegral {
    /// (1/2πi)∫₀¹ Tr[W g_t⁻¹∂_t g_t] dt at the two ends of the base (equal on the circle).
    pub at_start: f64,
    pub at_end: f64,
    /// Boundary contribution at_end − at_start, which equals ∫(ch(g₁) − ch(g₀)) by Stokes.
    pub boundary: f64,
}

/// ch̃ paired with the boundary of the base. Zero on the circle.
pub fn transgression_integral(fam: &UnitaryFamily, weight: Option<&CMat>, nt: usize) -> Result<TransgressionIntegral> {
    let xs = match fam.base {
        Base::Circle => vec![0.0, TAU],
        Base::Interval => vec![0.0, 1.0],
    };
    let form = TransgressionForm::sample(fam, weight, nt, xs)?;
    let v = form.integrated();
    let boundary = match fam.base {
        Base::Circle => 0.0,
        Base::Interval => v[1] - v[0],
    };
    Ok(TransgressionIntegral { at_start: v[0], at_end: v[1], boundary })
}

/// (1/2πi)∫₀¹ Tr[W g_t⁻¹∂_t g_t] dt at a fixed base point through determinant phases.
///
/// Needs [W, g_t] = 0: then the integral is Σ_w w·Δarg det(g_t on the w-eigenspace)/2π, with
/// the argument continued along t. No quadrature error; the t-grid only has to resolve the
/// phase (steps below π/4, halved until they are).
pub fn commuting_transgression(fam: &UnitaryFamily, weight: &CMat, x: f64) -> Result<f64> {
    let (vals, vecs) = linalg::eigh(&linalg::symmetrize(weight))?;
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &w) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some((w0, idx)) if (w - *w0).abs() < 1e-9 => idx.push(i),
            _ => groups.push((w, vec![i])),
        }
    }
    let blocks: Vec<(f64, CMat)> = groups.into_iter().map(|(w, idx)| (w, linalg::select_cols(&vecs, &idx))).collect();
    let dets = |t: f64| -> Result<Vec<c64>> {
        let g = fam.at(t, x);
        if linalg::fro_norm(&(&(&g * weight) - &(weight * &g))) > 1e-9 {
            return Err(Error::InvalidInput(format!("g_t({x}) does not commute with the weight at t = {t}")));
        }
        Ok(blocks.iter().map(|(_, v)| det(&(&(v.adjoint() * &g) * v))).collect())
    };
    // Phase increments summed per block on n steps; Err(step) when some step is too large.
    let unwrap_phases = |n: usize| -> Result<std::result::Result<Vec<f64>, f64>> {
        let mut prev = dets(0.0)?;
        let mut acc = vec![0.0; blocks.len()];
        for i in 1..=n {
            let cur = dets(i as f64 / n as f64)?;
            for (k, (a, b)) in prev.iter().zip(&cur).enumerate() {
                let step = (b / a).arg();
                if step.abs() > std::f64::consts::FRAC_PI_4 {
                    return Ok(Err(step));
                }
                acc[k] += step;
            }
            prev = cur;
        }
        Ok(Ok(acc))
    };
    let mut n = 64;
    loop {
        match unwrap_phases(n)? {
            Ok(acc) => return Ok(blocks.iter().zip(&acc).map(|((w, _), a)| w * a).sum::<f64>() / TAU),
            Err(step) if n >= 1 << 16 => {
                return Err(Error::PathTooCoarse(format!("determinant phase jumps by {step:.3} at x = {x}")))
            }
            Err(_) => n *= 2,
        }
    }
}

fn det(m: &CMat) -> c64 {
    linalg::eigvals(m).map(|v| v.iter().product()).unwrap_or(c64::new(f64::NAN, f64::NAN))
}

/// (1/2πi)∫ Tr[W g⁻¹∂ₓg] dx over the base at fixed t, central differences and trapezoid.
pub fn discrete_chern_integral(fam: &UnitaryFamily, weight: Option<&CMat>, t: f64, n: usize) -> f64 {
    let len = fam.base.length();
    let (xs, ws): (Vec<f64>, Vec<f64>) = match fam.base {
        Base::Circle => (0..n).map(|j| (len * j as f64 / n as f64, len / n as f64)).unzip(),
        Base::Interval => {
            let h = 1.0 / (n - 1) as f64;
            (0..n).map(|j| (j as f64 * h, if j == 0 || j == n - 1 { 0.5 * h } else { h })).unzip()
        }
    };
    let h = match fam.base {
        Base::Circle => len / n as f64,
        Base::Interval => 1.0 / (n - 1) as f64,
    };
    let s: c64 = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &w)| weighted_trace(weight, &(fam.at(t, x).adjoint() * fam.central_x(t, x, h))) * w)
        .sum();
    (s / two_pi_i()).re
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesStudy {
    pub grids: Vec<usize>,
    /// |∫(ch(g₁) − ch(g₀)) − ∂ch̃| per grid.
    pub residuals: Vec<f64>,
    /// log₂ of successive residual ratios.
    pub rates: Vec<f64>,
}

impl StokesStudy {
    pub fn order(&self) -> f64 {
        self.rates.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Discrete form of ch(g₁) − ch(g₀) = d ch̃ integrated over an interval base, under refinement.
///
/// Central differences and trapezoid sums with the same step in t and x.
pub fn stokes_refinement(fam: &UnitaryFamily, weight: Option<&CMat>, grids: &[usize]) -> Result<StokesStudy> {
    if fam.base != Base::Interval {
        return Err(Error::InvalidInput("Stokes study needs an interval base".into()));
    }
    let mut residuals = Vec::with_capacity(grids.len());
    for &n in grids {
        let lhs = discrete_chern_integral(fam, weight, 1.0, n) - discrete_chern_integral(fam, weight, 0.0, n);
        let rhs = transgression_integral(fam, weight, n.max(32))?.boundary;
        residuals.push((lhs - rhs).abs());
    }
    let rates = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(StokesStudy { grids: grids.to_vec(), residuals, rates })
}

/// max over a (t, θ) grid of |∂_t Tr[g⁻¹∂_θ g] − ∂_θ Tr[g⁻¹∂_t g]| on the circle.
///
/// θ-derivatives are spectral on m points; t-derivatives use the five-point stencil with step 1/m.
pub fn transgression_pointwise_check(fam: &UnitaryFamily, m: usize) -> Result<f64> {
    if fam.base != Base::Circle {
        return Err(Error::InvalidInput("the pointwise check runs on the circle".into()));
    }
    let h = 1.0 / m as f64;
    let stencil = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
    let thetas: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
    let theta_density = |t: f64| -> Vec<c64> {
        let s: Vec<CMat> = thetas.iter().map(|&x| fam.at(t, x)).collect();
        let d = spectral_derivative(&s);
        s.iter().zip(&d).map(|(g, dg)| linalg::trace(&(g.adjoint() * dg))).collect()
    };
    let mut worst: f64 = 0.0;
    for k in 1..8 {
        let t = k as f64 / 8.0;
        let mut lhs = vec![c64::new(0.0, 0.0); m];
        for &(o, w) in &stencil {
            for (l, d) in lhs.iter_mut().zip(theta_density(t + o * h)) {
                *l += d * (w / h);
            }
        }
        let tdens: Vec<CMat> = thetas
            .iter()
            .map(|&x| {
                let mut dt = linalg::zeros(fam.rank, fam.rank);
                for &(o, w) in &stencil {
                    dt += linalg::scale_re(w / h, &fam.at(t + o * h, x));
                }
                linalg::diag(&[linalg::trace(&(fam.at(t, x).adjoint() * dt))])
            })
            .collect();
        let rhs = spectral_derivative(&tdens);
        for (l, r) in lhs.iter().zip(&rhs) {
            worst = worst.max((l - r[(0, 0)]).norm());
        }
    }
    Ok(worst)
}

/// e^{i(kθ + t·a·sin θ)}: a scalar phase family with winding k.
pub fn phase_family(k: i64, a: f64) -> UnitaryFamily {
    UnitaryFamily::new(Base::Circle, move |t, x| linalg::diag(&[c64::cis(k as f64 * x + t * a * x.sin())]))
        .expect("phase family is unitary")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winding_integrals() {
        for k in -3..=3 {
            let c = odd_chern_integral(&UnitarySymbol::winding(k)).unwrap();
            assert!((c.value - k as f64).abs() < 1e-12, "{k}: {c:?}");
        }
        let c = odd_chern_integral(&UnitarySymbol::identity(2)).unwrap();
        assert!(c.value.abs() < 1e-14);
    }

    #[test]
    fn sampled_route_matches_symbol_route() {
        let g = UnitarySymbol::diagonal_windings(&[2, -1]);
        let a = odd_chern_integral(&g).unwrap();
        let b = odd_chern_integral_samples(&g.samples(128)).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
        assert!((b.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phase_family_pointwise_residual() {
        let fam = phase_family(1, 0.7);
        assert!(transgression_pointwise_check(&fam, 256).unwrap() < 1e-8);
    }

    #[test]
    fn constant_family_has_no_transgression() {
        let fam = UnitaryFamily::new(Base::Interval, |_, x| linalg::diag(&[c64::cis(3.0 * x)])).unwrap();
        let t = transgression_integral(&fam, None, 33).unwrap();
        assert_eq!(t.boundary, 0.0);
    }
}
