//! Eta invariants: lattice closed forms, finite sign sums, heat-regularized eta of truncated
//! interval problems, and the eta-type invariant η̄(X, g) of a boundary piece.

use serde::{Deserialize, Serialize};

use crate::chern::{commuting_transgression, Base, UnitaryFamily};
use crate::error::{Error, Result};
use crate::flow::{spectral_flow, FlowOptions, OperatorPath};
use crate::interval::{
    assemble_matrix, galerkin_matrix, BoundaryCondition, CutoffProfile, End, GalerkinBasis, IntervalDiracModel,
};
use crate::linalg::{self, CMat};
use crate::par::{self, Exec};
use crate::spectral::{HermitianOperatorModel, RankThreshold};

/// x mod 1 in [0, 1).
pub fn mod_z(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance from x to the nearest integer, in [0, ½].
pub fn dist_z(x: f64) -> f64 {
    (x - x.round()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaMethod {
    Lattice,
    Finite,
    Regularized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaResult {
    pub eta: f64,
    pub dim_ker: usize,
    /// (dim_ker + eta)/2.
    pub reduced: f64,
    pub method: EtaMethod,
    pub t_values: Vec<f64>,
    /// Weighted sums Σ sgn(λ)·erfc(√t|λ|) at each t.
    pub trace: Vec<f64>,
    /// Difference between the last two Richardson levels.
    pub residual: f64,
    pub expansion: Option<Expansion>,
}

impl EtaResult {
    fn new(eta: f64, dim_ker: usize, method: EtaMethod) -> Self {
        Self { eta, dim_ker, reduced: 0.5 * (dim_ker as f64 + eta), method, t_values: vec![], trace: vec![], residual: 0.0, expansion: None }
    }

    pub fn reduced_mod_z(&self) -> f64 {
        mod_z(self.reduced)
    }
}

/// Heat parameters t₀·2⁻ʲ, j = 0..levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatSchedule {
    pub t0: f64,
    pub levels: usize,
}

impl Default for HeatSchedule {
    fn default() -> Self {
        Self { t0: 0.02, levels: 5 }
    }
}

impl HeatSchedule {
    pub fn values(&self) -> Vec<f64> {
        (0..self.levels).map(|j| self.t0 * 0.5f64.powi(j as i32)).collect()
    }

    pub fn t_min(&self) -> f64 {
        self.t0 * 0.5f64.powi(self.levels as i32 - 1)
    }
}

fn weighted_sum(values: &[f64], t: f64) -> f64 {
    let s = t.sqrt();
    values.iter().map(|&l| l.signum() * libm::erfc(s * l.abs())).sum()
}

/// Powers of t assumed in the small-t expansion of the weighted sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    /// t, t², …: spectra whose 1/k corrections are symmetric under λ ↦ −λ.
    Integer,
    /// √t, t, t^{3/2}, …: needed when the boundary condition does not match the operator.
    HalfInteger,
}

impl Expansion {
    fn step(&self) -> f64 {
        match self {
            Expansion::Integer => 1.0,
            Expansion::HalfInteger => 0.5,
        }
    }
}

/// Richardson table with t halving: returns (limit, residual between the last two levels).
fn richardson(trace: &[f64], expansion: Expansion) -> (f64, f64) {
    let mut col = trace.to_vec();
    let mut prev_limit = col[col.len() - 1];
    let mut limit = prev_limit;
    for j in 1..trace.len() {
        let f = 2f64.powf(expansion.step() * j as f64);
        col = col.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        prev_limit = limit;
        limit = col[col.len() - 1];
    }
    (limit, (limit - prev_limit).abs())
}

struct Regularized {
    eta: f64,
    t_values: Vec<f64>,
    trace: Vec<f64>,
    residual: f64,
    expansion: Expansion,
}

/// Extrapolates with both expansions and keeps the one whose table settles better.
fn regularize(nonzero: &[f64], schedule: &HeatSchedule, tol: f64) -> Result<Regularized> {
    if schedule.levels < 2 {
        return Err(Error::InvalidInput("heat schedule needs ≥ 2 levels".into()));
    }
    let t_values = schedule.values();
    let trace: Vec<f64> = t_values.iter().map(|&t| weighted_sum(nonzero, t)).collect();
    let (e1, r1) = richardson(&trace, Expansion::Integer);
    let (e2, r2) = richardson(&trace, Expansion::HalfInteger);
    let (eta, residual, expansion) = if r1 <= r2 { (e1, r1, Expansion::Integer) } else { (e2, r2, Expansion::HalfInteger) };
    if residual > tol {
        return Err(Error::NonConvergent { residual });
    }
    Ok(Regularized { eta, t_values, trace, residual, expansion })
}

impl EtaResult {
    fn regularized(r: Regularized, dim_ker: usize, method: EtaMethod) -> Self {
        Self {
            t_values: r.t_values,
            trace: r.trace,
            residual: r.residual,
            expansion: Some(r.expansion),
            ..EtaResult::new(r.eta, dim_ker, method)
        }
    }
}

/// Eta of the lattice {k + a : k ∈ Z}, continued from the heat-regularized sums.
///
/// The closed form is 1 − 2a for 0 < a < 1 and 0 with one zero mode for a = 0.
pub fn eta_exact_lattice(a: f64) -> Result<EtaResult> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::InvalidInput(format!("lattice offset {a} outside [0, 1)")));
    }
    let schedule = HeatSchedule::default();
    // erfc(√t·x) < 1e-17 beyond x = 6/√t.
    let n = (6.5 / schedule.t_min().sqrt()).ceil() as i64 + 1;
    let nonzero: Vec<f64> = (-n..=n).map(|k| k as f64 + a).filter(|l| *l != 0.0).collect();
    let dim_ker = usize::from(a == 0.0);
    Ok(EtaResult::regularized(regularize(&nonzero, &schedule, 1e-6)?, dim_ker, EtaMethod::Lattice))
}

/// Σ sgn(λ) over a finite spectrum, |λ| ≤ 1e-10 counted as kernel.
pub fn eta_finite(h: &HermitianOperatorModel) -> Result<EtaResult> {
    let vals = h.eigenvalues()?;
    let ker = vals.iter().filter(|l| l.abs() <= 1e-10).count();
    let eta = vals.iter().filter(|l| l.abs() > 1e-10).map(|l| l.signum()).sum();
    Ok(EtaResult::new(eta, ker, EtaMethod::Finite))
}

/// Kernel count with cutoff 1e-10·‖H‖ and a 10³ gap check.
pub fn kernel_dim(values: &[f64]) -> Result<usize> {
    let norm = values.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1.0);
    let abs: Vec<f64> = values.iter().map(|l| l.abs()).collect();
    RankThreshold { cutoff: 1e-10 * norm, gap: 1e3 }.count_below(&abs)
}

/// Heat-regularized eta of a truncated spectrum.
///
/// The erfc weight suppresses the truncation edge; the schedule must keep erfc(√t_min·πK)
/// negligible, which holds for the defaults once πK ≳ 200.
pub fn eta_regularized(values: &[f64], schedule: &HeatSchedule) -> Result<EtaResult> {
    let norm = values.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1.0);
    let dim_ker = kernel_dim(values)?;
    let cut = 1e-10 * norm;
    let nonzero: Vec<f64> = values.iter().cloned().filter(|l| l.abs() > cut).collect();
    Ok(EtaResult::regularized(regularize(&nonzero, schedule, 1e-4)?, dim_ker, EtaMethod::Regularized))
}

/// Regularized eta at truncations K and 2K; the reduced values must agree to 1e-3.
pub fn eta_resolved<F>(spectrum: F, truncation: usize, schedule: &HeatSchedule, exec: Exec) -> Result<EtaResult>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let ks = [truncation, 2 * truncation];
    let mut res = par::map(exec, &ks, |&k| spectrum(k).and_then(|v| eta_regularized(&v, schedule)));
    let fine = res.pop().unwrap()?;
    let coarse = res.pop().unwrap()?;
    let gap = (coarse.reduced - fine.reduced).abs();
    if gap > 1e-3 || coarse.dim_ker != fine.dim_ker {
        return Err(Error::Consistency(format!(
            "reduced eta not resolved: {} at K = {truncation}, {} at 2K",
            coarse.reduced, fine.reduced
        )));
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaOptions {
    pub truncation: usize,
    pub schedule: HeatSchedule,
    pub psi: CutoffProfile,
    pub path_points: usize,
    pub refine: bool,
    pub flow: FlowOptions,
}

impl Default for EtaOptions {
    fn default() -> Self {
        Self {
            truncation: 60,
            schedule: HeatSchedule::default(),
            psi: CutoffProfile::collar_default(),
            path_points: 41,
            refine: true,
            flow: FlowOptions::default(),
        }
    }
}

/// η̄(X, g) = η̄(D^{ψ,g}) − sf(D^E + (1 − sψ)g⁻¹[D^E, g]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTypeInvariant {
    pub value: f64,
    pub reduced: EtaResult,
    pub sf: i64,
    pub psi: CutoffProfile,
    pub truncation: usize,
}

/// Boundary data of one end: Clifford c, tangential operator A, and the domain Λ = ker P.
#[derive(Debug, Clone)]
pub struct CylinderEnd {
    pub clifford: CMat,
    pub a: CMat,
    pub domain: CMat,
}

impl CylinderEnd {
    /// X-model with its APS-type domain ker(P_{>0}(A) + P_L).
    pub fn aps(x: &IntervalDiracModel, l: Option<&CMat>) -> Result<Self> {
        let bc = BoundaryCondition::aps(x, l, End::Start)?;
        Ok(Self { clifford: x.gamma.clone(), a: x.a.clone(), domain: bc.domain() })
    }

    /// End with an arbitrary Lagrangian projector P (domain ker P).
    pub fn with_projector(x: &IntervalDiracModel, p: CMat) -> Result<Self> {
        let bc = BoundaryCondition::from_projector(&x.gamma, p, End::Start)?;
        Ok(Self { clifford: x.gamma.clone(), a: x.a.clone(), domain: bc.domain() })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Im P, the orthogonal complement of the domain.
    pub fn range(&self) -> CMat {
        linalg::complement(&self.domain, 1e-12)
    }

    fn check_g(&self, g: &CMat) -> Result<()> {
        let d = linalg::unitarity_defect(g);
        let c = linalg::fro_norm(&(&(g * &self.clifford) - &(&self.clifford * g)));
        if d > 1e-10 || c > 1e-10 {
            return Err(Error::InvalidInput(format!("g must be unitary and commute with c ({d:.1e}, {c:.1e})")));
        }
        Ok(())
    }

    /// Cylinder basis with Λ at s = 0 and g⁻¹·Im P at s = 1.
    fn cylinder_basis(&self, g: &CMat, k: usize) -> Result<GalerkinBasis> {
        GalerkinBasis::new(&self.clifford, &self.domain, &(g.adjoint() * self.range()), k)
    }
}

fn cylinder_potential(end: &CylinderEnd, g: &CMat, psi: CutoffProfile) -> impl Fn(f64) -> CMat {
    let c = end.clifford.clone();
    let a = end.a.clone();
    let ga = &(g.adjoint() * &end.a) * g;
    move |s| {
        let p = psi.eval(s);
        &c * &(&linalg::scale_re(p, &a) + &linalg::scale_re(1.0 - p, &ga))
    }
}

fn cylinder_spectrum(end: &CylinderEnd, g: &CMat, psi: CutoffProfile, k: usize) -> Result<Vec<f64>> {
    let basis = end.cylinder_basis(g, k)?;
    let quad = basis.default_quadrature();
    let q = cylinder_potential(end, g, psi);
    linalg::eigvalsh(&assemble_matrix(&basis, Some(&q), &quad))
}

/// Path s ↦ c[sψA + (1 − sψ)g⁻¹Ag] on the cylinder basis.
pub fn cylinder_path(end: &CylinderEnd, g: &CMat, opts: &EtaOptions) -> Result<OperatorPath> {
    end.check_g(g)?;
    let basis = end.cylinder_basis(g, opts.truncation)?;
    let quad = basis.default_quadrature();
    let ga = &(g.adjoint() * &end.a) * g;
    let cga = &end.clifford * &ga;
    let h0 = assemble_matrix(&basis, Some(&|_s| cga.clone()), &quad);
    let diff = &end.clifford * &(&end.a - &ga);
    let psi = opts.psi;
    let h1 = galerkin_matrix(&basis, &basis, &|s| linalg::scale_re(psi.eval(s), &diff), &quad);
    Ok(OperatorPath::affine("eta-type-path", h0, linalg::symmetrize(&h1), opts.path_points))
}

/// η̄ of one boundary piece with the cylinder construction.
pub fn cylinder_eta_invariant(end: &CylinderEnd, g: &CMat, opts: &EtaOptions) -> Result<EtaTypeInvariant> {
    end.check_g(g)?;
    opts.psi.validate()?;
    let k = opts.truncation;
    let spec = |kk: usize| cylinder_spectrum(end, g, opts.psi, kk);
    let reduced = if opts.refine {
        eta_resolved(spec, k, &opts.schedule, opts.flow.exec)?
    } else {
        eta_regularized(&spec(k)?, &opts.schedule)?
    };
    let sf = spectral_flow(&cylinder_path(end, g, opts)?, &opts.flow)?.value;
    Ok(EtaTypeInvariant { value: reduced.reduced - sf as f64, reduced, sf, psi: opts.psi, truncation: k })
}

/// η̄(X, g) for the X-model (c, A) with the APS-type condition P_X(L).
pub fn eta_type_invariant(
    x: &IntervalDiracModel,
    g: &CMat,
    l: Option<&CMat>,
    opts: &EtaOptions,
) -> Result<EtaTypeInvariant> {
    cylinder_eta_invariant(&CylinderEnd::aps(x, l)?, g, opts)
}

/// The two ends of [0, 1] as boundary pieces: (γ, A) at x = 0 and (−γ, −A) at x = 1.
pub fn interval_ends(model: &IntervalDiracModel, bc0: &BoundaryCondition, bc1: &BoundaryCondition) -> [CylinderEnd; 2] {
    [
        CylinderEnd { clifford: model.gamma.clone(), a: model.a.clone(), domain: bc0.domain() },
        CylinderEnd { clifford: -&model.gamma, a: -&model.a, domain: bc1.domain() },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEta {
    pub total: f64,
    pub ends: Vec<EtaTypeInvariant>,
}

/// η̄(∂M, g) = η̄(end 0, g(0)) + η̄(end 1, g(1)).
pub fn boundary_eta(ends: &[CylinderEnd; 2], g0: &CMat, g1: &CMat, opts: &EtaOptions) -> Result<BoundaryEta> {
    let (a, b) = par::join(
        opts.flow.exec,
        || cylinder_eta_invariant(&ends[0], g0, opts),
        || cylinder_eta_invariant(&ends[1], g1, opts),
    );
    let (a, b) = (a?, b?);
    Ok(BoundaryEta { total: a.value + b.value, ends: vec![a, b] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatedConditionProbe {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub gap_mod_z: f64,
    pub lhs_detail: EtaTypeInvariant,
    pub rhs_detail: EtaResult,
}

/// Compares η̄(X, g) with the reduced eta of c(∂ₛ + A) with domains gΛ at s = 0 and Im P at s = 1.
pub fn conjugated_condition_probe(end: &CylinderEnd, g: &CMat, opts: &EtaOptions) -> Result<ConjugatedConditionProbe> {
    let lhs = cylinder_eta_invariant(end, g, opts)?;
    let ca = &end.clifford * &end.a;
    let dom0 = g * &end.domain;
    let dom1 = end.range();
    let spec = |k: usize| -> Result<Vec<f64>> {
        let basis = GalerkinBasis::new(&end.clifford, &dom0, &dom1, k)?;
        let quad = basis.default_quadrature();
        linalg::eigvalsh(&assemble_matrix(&basis, Some(&|_s| ca.clone()), &quad))
    };
    let rhs = eta_resolved(spec, opts.truncation, &opts.schedule, opts.flow.exec)?;
    let gap = lhs.value - rhs.reduced;
    Ok(ConjugatedConditionProbe { lhs: lhs.value, rhs: rhs.reduced, gap, gap_mod_z: dist_z(gap), lhs_detail: lhs, rhs_detail: rhs })
}

/// |η̄(fg) − η̄(f) − η̄(g)| mod Z on both ends of the interval.
pub fn additivity_check(ends: &[CylinderEnd; 2], f: [&CMat; 2], g: [&CMat; 2], opts: &EtaOptions) -> Result<f64> {
    let fg = [f[0] * g[0], f[1] * g[1]];
    let a = boundary_eta(ends, &fg[0], &fg[1], opts)?.total;
    let b = boundary_eta(ends, f[0], f[1], opts)?.total;
    let c = boundary_eta(ends, g[0], g[1], opts)?.total;
    Ok(dist_z(a - b - c))
}

/// Projector obtained from P by moving the eigenvectors of A at +μ out of Im P and their
/// images under c (eigenvalue −μ) into it. Stays Lagrangian.
pub fn flip_modes(end: &CylinderEnd, p: &CMat, mus: &[f64]) -> Result<CMat> {
    let (vals, vecs) = linalg::eigh(&end.a)?;
    let mut q = p.clone();
    for &mu in mus {
        let idx: Vec<usize> = (0..vals.len()).filter(|&i| (vals[i] - mu).abs() < 1e-9).collect();
        if idx.is_empty() {
            return Err(Error::InvalidInput(format!("{mu} is not an eigenvalue of A")));
        }
        let v = linalg::select_cols(&vecs, &idx);
        let w = &end.clifford * &v;
        q = &(&q - &linalg::projector(&v)) + &linalg::projector(&w);
    }
    Ok(linalg::symmetrize(&q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionComparison {
    pub reference: EtaTypeInvariant,
    pub modified: EtaTypeInvariant,
    pub difference: f64,
    pub residual: f64,
}

/// η̄ with the condition P versus a finite-rank modification Q: equal mod Z.
pub fn finite_rank_section_check(
    x: &IntervalDiracModel,
    p: &CMat,
    q: &CMat,
    g: &CMat,
    opts: &EtaOptions,
) -> Result<SectionComparison> {
    let ep = CylinderEnd::with_projector(x, p.clone())?;
    let eq = CylinderEnd::with_projector(x, q.clone())?;
    let a = cylinder_eta_invariant(&ep, g, opts)?;
    let b = cylinder_eta_invariant(&eq, g, opts)?;
    let d = b.value - a.value;
    Ok(SectionComparison { reference: a, modified: b, difference: d, residual: dist_z(d) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyVariation {
    pub eta_start: f64,
    pub eta_end: f64,
    /// (1/2πi)∫₀¹ Tr[W g_t⁻¹∂_t g_t] dt at x = 1 minus the same at x = 0.
    pub transgression: f64,
    pub residual: f64,
}

/// η̄(∂M, g₁) − η̄(∂M, g₀) + [transgression over ∂M] ≡ 0 mod Z along a homotopy of symbols
/// on [0, 1]; `weight` is the local weight iγ.
pub fn homotopy_variation_check(
    ends: &[CylinderEnd; 2],
    fam: &UnitaryFamily,
    weight: &CMat,
    opts: &EtaOptions,
) -> Result<HomotopyVariation> {
    if fam.base != Base::Interval {
        return Err(Error::InvalidInput("homotopy variation needs an interval family".into()));
    }
    let e0 = boundary_eta(ends, &fam.at(0.0, 0.0), &fam.at(0.0, 1.0), opts)?.total;
    let e1 = boundary_eta(ends, &fam.at(1.0, 0.0), &fam.at(1.0, 1.0), opts)?.total;
    let tr = commuting_transgression(fam, weight, 1.0)? - commuting_transgression(fam, weight, 0.0)?;
    Ok(HomotopyVariation { eta_start: e0, eta_end: e1, transgression: tr, residual: dist_z(e1 - e0 + tr) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaVariationReport {
    pub sf: i64,
    pub jump_total: f64,
    pub residual: f64,
    pub reduced: Vec<f64>,
}

/// Compares sf with the integer jumps of the reduced eta along the path.
///
/// Steps of η̄ are split into their nearest-integer part (jumps) and a small remainder (the
/// smooth variation, i.e. the finite-difference integral of d/du η̄).
pub fn sf_equals_eta_variation_check(path: &OperatorPath, schedule: &HeatSchedule, opts: &FlowOptions) -> Result<EtaVariationReport> {
    let sf = spectral_flow(path, opts)?.value;
    let reduced: Vec<f64> = par::map(opts.exec, &path.grid, |&t| {
        linalg::eigvalsh(&path.at(t)).and_then(|v| eta_regularized(&v, schedule)).map(|e| e.reduced)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut smooth = 0.0;
    for w in reduced.windows(2) {
        let d = w[1] - w[0];
        smooth += d - d.round();
    }
    let jump_total = reduced[reduced.len() - 1] - reduced[0] - smooth;
    Ok(EtaVariationReport { sf, jump_total, residual: (sf as f64 - jump_total).abs(), reduced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{rotation_spectrum, standard_gamma};

    #[test]
    fn lattice_closed_form() {
        for a in [0.1, 0.25, 0.5, 0.9] {
            let e = eta_exact_lattice(a).unwrap();
            assert!((e.eta - (1.0 - 2.0 * a)).abs() < 1e-8, "{a}: {}", e.eta);
        }
        let z = eta_exact_lattice(0.0).unwrap();
        assert_eq!(z.dim_ker, 1);
        assert!(z.eta.abs() < 1e-12 && (z.reduced - 0.5).abs() < 1e-12);
    }

    #[test]
    fn finite_examples() {
        let m = |d: &[f64]| HermitianOperatorModel::dense(linalg::diag_real(d)).unwrap();
        let e = eta_finite(&m(&[2.0, 3.0, -1.0])).unwrap();
        assert_eq!(e.eta, 1.0);
        let e = eta_finite(&m(&[0.0, 5.0])).unwrap();
        assert_eq!((e.eta, e.dim_ker, e.reduced), (1.0, 1, 1.0));
    }

    #[test]
    fn regularized_rotation_spectrum() {
        let s = rotation_spectrum(0.3, 1.1, (-80, 80)).eigenvalues();
        let e = eta_regularized(&s, &HeatSchedule::default()).unwrap();
        // offset −0.8 ≡ π − 0.8 (mod π)
        let a = (std::f64::consts::PI - 0.8) / std::f64::consts::PI;
        assert!((e.eta - (1.0 - 2.0 * a)).abs() < 1e-8);
    }

    #[test]
    fn trivial_g_has_no_flow() {
        let x = IntervalDiracModel::new(standard_gamma(), linalg::diag_real(&[1.0, -1.0])).unwrap();
        let opts = EtaOptions { truncation: 30, refine: false, ..Default::default() };
        let e = eta_type_invariant(&x, &linalg::identity(2), None, &opts).unwrap();
        assert_eq!(e.sf, 0);
    }
}
