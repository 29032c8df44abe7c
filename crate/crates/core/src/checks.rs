//! Scenario execution: builds the models a scenario describes and runs its checks, collecting
//! one record per check. A failing check never stops its siblings.

// Outcomes are filled in piecemeal as terms are computed.
#![allow(clippy::field_reassign_with_default)]

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::chern::{
    odd_chern_integral, phase_family, stokes_refinement, transgression_pointwise_check, Base, UnitaryFamily,
};
use crate::circle::{conjugated_family, hardy_toeplitz_index, UnitarySymbol};
use crate::error::{Error, Result};
use crate::eta::{
    additivity_check, boundary_eta, conjugated_condition_probe, dist_z, eta_exact_lattice, eta_regularized,
    finite_rank_section_check, flip_modes, homotopy_variation_check, interval_ends, mod_z, CylinderEnd, EtaOptions,
    EtaResult,
};
use crate::flow::{spectral_flow, FlowOptions, FlowResult};
use crate::formula::{index_formula_assemble, FormulaOptions, TermError};
use crate::interval::{
    assemble_matrix, cylinder_aps_index, line, standard_gamma, BoundaryCondition, BoundaryIndex, BoundaryToeplitz,
    ChiralSymbol, Chirality, ConstantSymbol, CutoffProfile, End, GalerkinBasis, IntervalDiracModel, IntervalSymbol, Ramp,
};
use crate::linalg::{self, c64, CMat};
use crate::maslov::{random_triple_relation, w_trajectory, SplitFamily};
use crate::par::{self, Exec};
use crate::report::{
    Artifacts, BranchRow, ChernRow, CheckError, CheckRecord, EigenvalueRow, EtaTraceRow, IntegerVerdict, InvariantReport,
    PhaseRow, Verdict,
};
use crate::scenario::{CheckId, FamilyPreset, ModelSpec, Scenario, SplitPreset, SymbolSpec};
use crate::spectral::RankThreshold;

/// Tolerance of mod-Z identities between eta-type invariants.
pub const MOD_Z_TOL: f64 = 1e-5;
/// Agreement of η̄ across cut-off profiles.
pub const CUTOFF_TOL: f64 = 1e-6;
pub const LATTICE_TOL: f64 = 1e-8;
pub const ROTATION_TOL: f64 = 1e-4;
pub const POINTWISE_TOL: f64 = 1e-8;
/// Observed convergence order required of the discrete Stokes identity (second order).
pub const STOKES_ORDER: f64 = 2.0;

/// Profiles used for the cut-off independence check.
pub const CUTOFF_PROFILES: [CutoffProfile; 3] = [
    CutoffProfile::Collar { a: 0.25, b: 0.5 },
    CutoffProfile::Collar { a: 0.2, b: 0.6 },
    CutoffProfile::Collar { a: 0.3, b: 0.45 },
];

trait Term<T> {
    fn term(self, name: &'static str) -> std::result::Result<T, TermError>;
}

impl<T> Term<T> for Result<T> {
    fn term(self, name: &'static str) -> std::result::Result<T, TermError> {
        self.map_err(|error| TermError { term: name, error })
    }
}

#[derive(Default)]
struct Outcome {
    pass: bool,
    lhs: Option<f64>,
    rhs: Option<f64>,
    residual: Option<f64>,
    tolerance: Option<f64>,
    integers: Vec<IntegerVerdict>,
    terms: BTreeMap<String, f64>,
    diagnostics: serde_json::Map<String, Value>,
    artifacts: Artifacts,
}

impl Outcome {
    fn integer(&mut self, name: impl Into<String>, value: i64, evidence: Value) {
        self.integers.push(IntegerVerdict { name: name.into(), value, evidence });
    }
    fn term(&mut self, name: impl Into<String>, v: f64) {
        self.terms.insert(name.into(), v);
    }
    fn diag(&mut self, name: &str, v: Value) {
        self.diagnostics.insert(name.into(), v);
    }
    fn residual(&mut self, r: f64, tol: f64) {
        self.residual = Some(r);
        self.tolerance = Some(tol);
        self.pass = r <= tol;
    }
}

type CheckResult = std::result::Result<Outcome, TermError>;

/// Result of one scenario: the report plus plot data.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: InvariantReport,
    pub artifacts: Artifacts,
}

/// Interval model, boundary data and symbol built from a scenario.
#[derive(Debug, Clone)]
pub struct IntervalSetup {
    pub model: IntervalDiracModel,
    pub l0: Option<CMat>,
    pub l1: Option<CMat>,
    pub g: Arc<dyn IntervalSymbol>,
    /// Product-type symbol with the same end values, when g is not of product type.
    pub product: Option<Arc<dyn IntervalSymbol>>,
}

impl IntervalSetup {
    pub fn toeplitz(&self) -> Result<BoundaryToeplitz> {
        BoundaryToeplitz::new(self.model.clone(), self.l0.as_ref(), self.l1.as_ref(), self.g.clone())
    }

    pub fn conditions(&self) -> Result<(BoundaryCondition, BoundaryCondition)> {
        Ok((
            BoundaryCondition::aps(&self.model, self.l0.as_ref(), End::Start)?,
            BoundaryCondition::aps(&self.model, self.l1.as_ref(), End::Finish)?,
        ))
    }

    pub fn ends(&self) -> Result<[CylinderEnd; 2]> {
        let (b0, b1) = self.conditions()?;
        Ok(interval_ends(&self.model, &b0, &b1))
    }

    pub fn chirality(&self) -> Result<Chirality> {
        Chirality::of(&self.model.gamma)
    }

    /// Weight iγ of the local term.
    pub fn weight(&self) -> CMat {
        linalg::scale(linalg::I, &self.model.gamma)
    }
}

fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn check_rng(seed: u64, check: CheckId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ stable_hash(check.name()))
}

pub fn circle_symbol(spec: &SymbolSpec, seed: u64) -> Result<UnitarySymbol> {
    Ok(match spec {
        SymbolSpec::Winding { k } => UnitarySymbol::winding(*k),
        SymbolSpec::DiagonalWindings { ks } => UnitarySymbol::diagonal_windings(ks),
        SymbolSpec::Elementary { angle, k } => UnitarySymbol::elementary(&linalg::projector(&line(*angle)), *k),
        SymbolSpec::RotatedWindings { ks, angle } => {
            let (c, s) = (angle.cos(), angle.sin());
            let r = linalg::from_real_rows(&[&[c, -s], &[s, c]]);
            UnitarySymbol::diagonal_windings(ks).sandwich(&r, &r.transpose().to_owned())
        }
        SymbolSpec::RandomHomotopic { ks } => {
            UnitarySymbol::diagonal_windings(ks).random_homotopic(&mut ChaCha8Rng::seed_from_u64(seed))
        }
        other => return Err(Error::InvalidInput(format!("{other:?} is not a circle symbol"))),
    })
}

fn random_hermitian_scaled<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> CMat {
    let h = linalg::random_hermitian(n, rng);
    let norm = linalg::op_norm(&h).max(1e-12);
    linalg::scale_re(scale / norm, &h)
}

type Symbol = Arc<dyn IntervalSymbol>;

pub fn interval_setup(s: &Scenario) -> Result<IntervalSetup> {
    let ModelSpec::Interval { masses, l0, l1 } = &s.model else {
        return Err(Error::InvalidInput(format!("scenario '{}' has no interval model", s.name)));
    };
    let n = masses.len();
    let gamma = linalg::kron(&standard_gamma(), &linalg::identity(n));
    let a = linalg::kron(&linalg::diag_real(&[1.0, -1.0]), &linalg::diag_real(masses));
    let model = IntervalDiracModel::new(gamma.clone(), a)?;
    let zero: Vec<usize> = (0..n).filter(|&j| masses[j] == 0.0).collect();
    let lines_at = |angles: &[f64]| -> Option<CMat> {
        let cols: Vec<CMat> = zero
            .iter()
            .zip(angles)
            .map(|(&j, &al)| {
                let mut e = linalg::zeros(n, 1);
                e[(j, 0)] = c64::new(1.0, 0.0);
                linalg::kron(&line(al), &e)
            })
            .collect();
        cols.into_iter().reduce(|a, b| linalg::hstack(&a, &b))
    };
    let (l0, l1) = (lines_at(l0), lines_at(l1));
    let spec = s.symbol.as_ref().ok_or_else(|| Error::InvalidInput("missing symbol".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.numerics.seed);
    let chiral = |up: CMat, hp: CMat, um: CMat, hm: CMat, ramp: Ramp| -> Result<(Symbol, Option<Symbol>)> {
        let g = ChiralSymbol::new(&gamma, up.clone(), hp.clone(), um.clone(), hm.clone(), ramp)?;
        let product: Option<Arc<dyn IntervalSymbol>> = if g.is_product() {
            None
        } else {
            Some(Arc::new(ChiralSymbol::new(&gamma, up, hp, um, hm, Ramp::Smooth { a: 0.2, b: 0.8 })?))
        };
        Ok((Arc::new(g), product))
    };
    let (g, product) = match spec {
        SymbolSpec::Identity => (Arc::new(ConstantSymbol(linalg::identity(2 * n))) as Arc<dyn IntervalSymbol>, None),
        SymbolSpec::PhaseRamp { phi0, phi1, ramp } => {
            let one = linalg::identity(1);
            chiral(linalg::scale(c64::cis(*phi0), &one), linalg::scale_re(phi1 - phi0, &one), one.clone(), linalg::zeros(1, 1), *ramp)?
        }
        SymbolSpec::ConstantChiral { plus, minus } => {
            let d = |v: &[f64]| linalg::diag(&v.iter().map(|&p| c64::cis(p)).collect::<Vec<_>>());
            let ch = Chirality::of(&gamma)?;
            (Arc::new(ConstantSymbol(ch.assemble(&d(plus), &d(minus)))) as Arc<dyn IntervalSymbol>, None)
        }
        SymbolSpec::RandomChiral { scale, ramp } => {
            let up = linalg::random_unitary(n, &mut rng);
            let um = linalg::random_unitary(n, &mut rng);
            let hp = random_hermitian_scaled(n, *scale, &mut rng);
            let hm = random_hermitian_scaled(n, *scale, &mut rng);
            chiral(up, hp, um, hm, *ramp)?
        }
        other => return Err(Error::InvalidInput(format!("{other:?} is not an interval symbol"))),
    };
    Ok(IntervalSetup { model, l0, l1, g, product })
}

pub fn split_family(s: &Scenario) -> Result<SplitFamily> {
    let ModelSpec::Split { family, alpha0, alpha1, split, .. } = &s.model else {
        return Err(Error::InvalidInput(format!("scenario '{}' has no split model", s.name)));
    };
    let bump = |x: f64, c: f64| {
        let w = 0.08;
        (-((x - c) / w).powi(2)).exp() / (w * PI.sqrt())
    };
    let id = linalg::identity(2);
    let sz = linalg::diag_real(&[1.0, -1.0]);
    let q: Arc<dyn Fn(f64, f64) -> CMat + Send + Sync> = match *family {
        SplitPreset::Mass { c } => Arc::new(move |t, _x| linalg::scale_re(t * c, &id)),
        SplitPreset::Constant { c } => Arc::new(move |_t, _x| linalg::scale_re(c, &id)),
        SplitPreset::ScalarBump { amp, center } => Arc::new(move |t, x| linalg::scale_re(t * amp * bump(x, center), &id)),
        SplitPreset::MatrixBump { amp, center } => Arc::new(move |t, x| linalg::scale_re(t * amp * bump(x, center), &sz)),
    };
    SplitFamily::new(standard_gamma(), line(*alpha0), line(*alpha1), q, *split)
}

pub fn unitary_family(s: &Scenario) -> Result<UnitaryFamily> {
    let ModelSpec::Family { base, family } = &s.model else {
        return Err(Error::InvalidInput(format!("scenario '{}' has no family model", s.name)));
    };
    match *family {
        FamilyPreset::Phase { k, a } => Ok(phase_family(k, a)),
        FamilyPreset::TwoFactor { rank } => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.numerics.seed);
            let h1 = linalg::random_hermitian(rank, &mut rng);
            let h2 = linalg::random_hermitian(rank, &mut rng);
            match base {
                Base::Interval => UnitaryFamily::new(Base::Interval, move |t, x| {
                    &linalg::expi_hermitian(&h1, x + t * x * x) * &linalg::expi_hermitian(&h2, t * (1.0 + x))
                }),
                Base::Circle => UnitaryFamily::new(Base::Circle, move |t, x| {
                    &linalg::expi_hermitian(&h1, x.sin() + t * (2.0 * x).cos()) * &linalg::expi_hermitian(&h2, t * (1.0 + x.sin()))
                }),
            }
        }
    }
}

fn branches(fr: &FlowResult) -> Vec<BranchRow> {
    fr.trajectory.iter().map(|b| BranchRow { t: b.t, branch_id: b.branch_id, lambda: b.lambda }).collect()
}

fn trace_rows(e: &EtaResult) -> Vec<EtaTraceRow> {
    e.t_values.iter().zip(&e.trace).map(|(&t, &w)| EtaTraceRow { t, weighted_sum: w }).collect()
}

fn flow_evidence(fr: &FlowResult) -> Value {
    json!({
        "tracked_crossings": fr.tracked,
        "negative_count": [fr.neg_start, fr.neg_end],
        "min_abs_lambda": fr.min_abs_lambda,
        "grid_points": fr.grid_points,
        "bisections": fr.bisections,
    })
}

fn index_evidence(b: &BoundaryIndex) -> Value {
    json!({
        "truncations": b.truncations,
        "values": b.values,
        "converged": b.converged,
        "kernel_defects": b.evidence.kernel_evidence,
        "cokernel_defects": b.evidence.cokernel_evidence,
    })
}

struct Ctx<'a> {
    s: &'a Scenario,
    exec: Exec,
    interval: OnceCell<Result<IntervalSetup>>,
    index: OnceCell<Result<BoundaryIndex>>,
    perturbed: OnceCell<Result<BoundaryIndex>>,
}

impl<'a> Ctx<'a> {
    fn new(s: &'a Scenario, exec: Exec) -> Self {
        Self { s, exec, interval: OnceCell::new(), index: OnceCell::new(), perturbed: OnceCell::new() }
    }

    fn flow_opts(&self) -> FlowOptions {
        FlowOptions { exec: self.exec, ..FlowOptions::default() }
    }

    fn eta_opts(&self) -> EtaOptions {
        EtaOptions { truncation: self.s.numerics.eta_truncation, flow: self.flow_opts(), ..EtaOptions::default() }
    }

    fn k(&self) -> usize {
        self.s.numerics.truncation
    }

    fn setup(&self) -> Result<&IntervalSetup> {
        self.interval.get_or_init(|| interval_setup(self.s)).as_ref().map_err(Clone::clone)
    }

    fn twist(&self) -> f64 {
        match self.s.model {
            ModelSpec::Circle { twist } | ModelSpec::Cylinder { twist } => twist,
            _ => 0.0,
        }
    }

    fn circle_g(&self) -> Result<UnitarySymbol> {
        circle_symbol(self.s.symbol.as_ref().ok_or_else(|| Error::InvalidInput("missing symbol".into()))?, self.s.numerics.seed)
    }

    fn boundary_index(&self) -> Result<BoundaryIndex> {
        self.index
            .get_or_init(|| self.setup()?.toeplitz()?.index(self.k(), &RankThreshold::windowed()))
            .clone()
    }

    fn perturbed_index(&self) -> Result<BoundaryIndex> {
        self.perturbed
            .get_or_init(|| {
                self.setup()?.toeplitz()?.perturbed_index(self.k(), CutoffProfile::default(), &RankThreshold::windowed())
            })
            .clone()
    }

    fn run(&self, id: CheckId) -> CheckResult {
        match id {
            CheckId::ClosedIndex => self.closed_index(),
            CheckId::ConjugationFlow => self.conjugation_flow(),
            CheckId::CylinderIndex => self.cylinder_index(),
            CheckId::LatticeEta => self.lattice_eta(),
            CheckId::RotationEta => self.rotation_eta(),
            CheckId::TripleRelation => self.triple_relation(),
            CheckId::Splitting => self.splitting(),
            CheckId::ToeplitzFlow => self.toeplitz_flow(),
            CheckId::PerturbedIndexFlow => self.perturbed_index_flow(),
            CheckId::PerturbationFlow => self.perturbation_flow(),
            CheckId::IndexFormula => self.index_formula(),
            CheckId::Integrality => self.integrality(),
            CheckId::CutoffIndependence => self.cutoff_independence(),
            CheckId::Stokes => self.stokes(),
            CheckId::TransgressionPointwise => self.transgression_pointwise(),
            CheckId::SectionChange => self.section_change(),
            CheckId::HomotopyVariation => self.homotopy_variation(),
            CheckId::FlatRescaling => self.flat_rescaling(),
            CheckId::Additivity => self.additivity(),
            CheckId::ConjugatedConditionProbe => self.probe(),
        }
    }

    fn closed_index(&self) -> CheckResult {
        let g = self.circle_g().term("symbol")?;
        let ti = hardy_toeplitz_index(&g, self.twist(), self.k(), &RankThreshold::default()).term("toeplitz-index")?;
        let ch = odd_chern_integral(&g).term("chern")?;
        let mut o = Outcome::default();
        o.lhs = Some(ti.index as f64);
        o.rhs = Some(-ch.value);
        o.term("toeplitz_index", ti.index as f64);
        o.term("chern_integral", ch.value);
        o.integer(
            "toeplitz-index",
            ti.index,
            json!({"truncations": ti.truncations, "values": ti.values, "converged": ti.converged,
                   "kernel_defects": ti.evidence.kernel_evidence, "cokernel_defects": ti.evidence.cokernel_evidence}),
        );
        o.integer("chern", ch.rounded(), json!({"distance_to_integer": ch.distance_to_integer, "imaginary_part": ch.imaginary_part, "points": ch.points}));
        o.residual = Some((ti.index as f64 + ch.value).abs());
        o.pass = ti.converged && ch.distance_to_integer < 1e-8 && ti.index == -ch.rounded();
        let m = 256;
        let rows = (0..m)
            .map(|j| {
                let x = TAU * j as f64 / m as f64;
                let d = linalg::trace(&(g.eval(x).adjoint() * g.derivative(x))) / c64::new(0.0, TAU);
                ChernRow { x, density: d.re }
            })
            .collect();
        o.artifacts.chern.insert("odd-chern".into(), rows);
        Ok(o)
    }

    fn conjugation_flow(&self) -> CheckResult {
        let g = self.circle_g().term("symbol")?;
        let ti = hardy_toeplitz_index(&g, self.twist(), self.k(), &RankThreshold::default()).term("toeplitz-index")?;
        let path = conjugated_family(&g, self.k(), self.twist(), self.s.numerics.grid).term("family")?;
        let fr = spectral_flow(&path, &self.flow_opts()).term("spectral-flow")?;
        let mut o = Outcome::default();
        o.lhs = Some(fr.value as f64);
        o.rhs = Some(-ti.index as f64);
        o.integer("spectral-flow", fr.value, flow_evidence(&fr));
        o.integer("toeplitz-index", ti.index, json!({"values": ti.values, "converged": ti.converged}));
        o.residual = Some((fr.value + ti.index) as f64);
        o.pass = ti.converged && fr.value == -ti.index;
        o.artifacts.branches.insert("conjugated-family".into(), branches(&fr));
        Ok(o)
    }

    fn cylinder_index(&self) -> CheckResult {
        let g = self.circle_g().term("symbol")?;
        let thr = RankThreshold::default();
        let c0 = cylinder_aps_index(&g, self.twist(), self.k(), &thr).term("cylinder-index")?;
        let c1 = cylinder_aps_index(&g, self.twist(), self.k() + 5, &thr).term("cylinder-index")?;
        let ti = hardy_toeplitz_index(&g, self.twist(), self.k(), &thr).term("toeplitz-index")?;
        let mut o = Outcome::default();
        o.lhs = Some(c0.index as f64);
        o.rhs = Some(ti.index as f64);
        o.integer("cylinder-index", c0.index, json!({"kernel": c0.kernel, "cokernel": c0.cokernel, "refined": c1.index}));
        o.integer("toeplitz-index", ti.index, json!({"values": ti.values, "converged": ti.converged}));
        o.residual = Some((c0.index - ti.index) as f64);
        o.pass = ti.converged && c0.index == c1.index && c0.index == ti.index;
        Ok(o)
    }

    fn lattice_eta(&self) -> CheckResult {
        let ModelSpec::Lattice { offsets } = &self.s.model else { unreachable!() };
        let mut o = Outcome::default();
        let mut worst: f64 = 0.0;
        for &a in offsets {
            let r = eta_exact_lattice(a).term("lattice-eta")?;
            let exact = if a == 0.0 { 0.0 } else { 1.0 - 2.0 * a };
            worst = worst.max((r.eta - exact).abs());
            o.term(format!("eta[a={a}]"), r.eta);
            o.artifacts.eta_traces.insert(format!("lattice-a{a}"), trace_rows(&r));
        }
        o.residual(worst, LATTICE_TOL);
        Ok(o)
    }

    fn rotation_eta(&self) -> CheckResult {
        let ModelSpec::Rotation { alpha0, alpha1 } = self.s.model else { unreachable!() };
        let a = mod_z((alpha0 - alpha1) / PI);
        let exact = if a < 1e-12 { 0.0 } else { 1.0 - 2.0 * a };
        let mut o = Outcome::default();
        o.rhs = Some(exact);
        let mut worst: f64 = 0.0;
        for k in [self.k(), 2 * self.k()] {
            let basis = GalerkinBasis::new(&standard_gamma(), &line(alpha0), &line(alpha1), k).term("basis")?;
            let quad = basis.default_quadrature();
            let vals = linalg::eigvalsh(&assemble_matrix(&basis, None, &quad)).term("spectrum")?;
            let r = eta_regularized(&vals, &Default::default()).term("eta")?;
            worst = worst.max((r.eta - exact).abs());
            o.term(format!("eta[K={k}]"), r.eta);
            if k == self.k() {
                o.lhs = Some(r.eta);
            }
            let h = 1.0 / k as f64;
            o.artifacts
                .eigenvalues
                .insert(format!("rotation-K{k}"), vals.iter().enumerate().map(|(i, &l)| EigenvalueRow { index: i, lambda: l, grid_h: h }).collect());
            o.artifacts.eta_traces.insert(format!("rotation-K{k}"), trace_rows(&r));
        }
        o.residual(worst, ROTATION_TOL);
        Ok(o)
    }

    fn triple_relation(&self) -> CheckResult {
        let ModelSpec::Symplectic { dims, triples } = &self.s.model else { unreachable!() };
        let seeds: Vec<u64> = {
            let mut rng = check_rng(self.s.numerics.seed, CheckId::TripleRelation);
            (0..*triples).map(|_| rng.random()).collect()
        };
        let results = par::map_range(self.exec, *triples, |i| {
            let d = dims[i % dims.len()];
            random_triple_relation(d, &mut ChaCha8Rng::seed_from_u64(seeds[i]))
        });
        let mut o = Outcome::default();
        let mut holding = 0usize;
        let mut failures = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(r) if r.holds() => holding += 1,
                Ok(r) => failures.push(json!({"triple": i, "detail": r})),
                Err(e) => failures.push(json!({"triple": i, "error": e.to_string()})),
            }
        }
        o.integer(
            "relations-holding",
            holding as i64,
            json!({"triples": triples, "dims": dims, "note": "each triple index was recomputed along a random detour and agreed"}),
        );
        o.lhs = Some(holding as f64);
        o.rhs = Some(*triples as f64);
        o.residual = Some((*triples - holding) as f64);
        o.diag("failures", Value::Array(failures));
        o.pass = holding == *triples;
        Ok(o)
    }

    fn splitting(&self) -> CheckResult {
        let ModelSpec::Split { expected_flow, .. } = &self.s.model else { unreachable!() };
        let fam = split_family(self.s).term("family")?;
        let path = fam.operator_path(self.k(), self.s.numerics.grid).term("operator-path")?;
        let fr = spectral_flow(&path, &self.flow_opts()).term("spectral-flow")?;
        let (mas, points) = fam.maslov_detailed(self.s.numerics.grid).term("maslov")?;
        let mut o = Outcome::default();
        o.lhs = Some(fr.value as f64);
        o.rhs = Some(mas as f64);
        o.integer("spectral-flow", fr.value, flow_evidence(&fr));
        o.integer("maslov", mas, json!({"grid_points": points, "endpoint_rule": "half-open"}));
        o.residual = Some((fr.value - mas) as f64);
        o.pass = fr.value == mas && expected_flow.map_or(true, |e| e == mas);
        if let Some(e) = expected_flow {
            o.diag("expected_flow", json!(e));
        }
        o.artifacts.branches.insert("split-family".into(), branches(&fr));
        let (pp, qp) = fam.lagrangian_paths(points).term("maslov")?;
        let rows = w_trajectory(&pp, &qp).term("maslov")?;
        o.artifacts.w_phases.insert("cauchy-data".into(), rows.into_iter().map(|(t, index, phase)| PhaseRow { t, index, phase }).collect());
        Ok(o)
    }

    fn toeplitz_flow(&self) -> CheckResult {
        let ind = self.boundary_index().term("index")?;
        let bt = self.setup().and_then(|s| s.toeplitz()).term("setup")?;
        let fr = spectral_flow(&bt.toeplitz_path(self.k(), None, self.s.numerics.grid).term("path")?, &self.flow_opts())
            .term("spectral-flow")?;
        let mut o = Outcome::default();
        o.lhs = Some(ind.index as f64);
        o.rhs = Some(-fr.value as f64);
        o.integer("index", ind.index, index_evidence(&ind));
        o.integer("spectral-flow", fr.value, flow_evidence(&fr));
        o.residual = Some((ind.index + fr.value) as f64);
        o.pass = ind.converged && ind.index == -fr.value;
        o.artifacts.branches.insert("toeplitz-path".into(), branches(&fr));
        Ok(o)
    }

    fn perturbed_index_flow(&self) -> CheckResult {
        let pind = self.perturbed_index().term("perturbed-index")?;
        let bt = self.setup().and_then(|s| s.toeplitz()).term("setup")?;
        let path = bt.toeplitz_path(self.k(), Some(CutoffProfile::default()), self.s.numerics.grid).term("path")?;
        let fr = spectral_flow(&path, &self.flow_opts()).term("spectral-flow")?;
        let mut o = Outcome::default();
        o.lhs = Some(pind.index as f64);
        o.rhs = Some(-fr.value as f64);
        o.integer("perturbed-index", pind.index, index_evidence(&pind));
        o.integer("spectral-flow", fr.value, flow_evidence(&fr));
        o.residual = Some((pind.index + fr.value) as f64);
        o.pass = pind.converged && pind.index == -fr.value;
        o.artifacts.branches.insert("cutoff-toeplitz-path".into(), branches(&fr));
        Ok(o)
    }

    fn perturbation_flow(&self) -> CheckResult {
        let ind = self.boundary_index().term("index")?;
        let pind = self.perturbed_index().term("perturbed-index")?;
        let bt = self.setup().and_then(|s| s.toeplitz()).term("setup")?;
        let path = bt.perturbation_path(self.k(), CutoffProfile::default(), self.s.numerics.grid).term("path")?;
        let fr = spectral_flow(&path, &self.flow_opts()).term("spectral-flow")?;
        let mut o = Outcome::default();
        o.lhs = Some((ind.index - pind.index) as f64);
        o.rhs = Some(fr.value as f64);
        o.integer("index", ind.index, index_evidence(&ind));
        o.integer("perturbed-index", pind.index, index_evidence(&pind));
        o.integer("spectral-flow", fr.value, flow_evidence(&fr));
        o.residual = Some((ind.index - pind.index - fr.value) as f64);
        o.pass = ind.converged && pind.converged && ind.index - pind.index == fr.value;
        o.artifacts.branches.insert("perturbation-path".into(), branches(&fr));
        Ok(o)
    }

    fn local_density(&self, setup: &IntervalSetup) -> Vec<ChernRow> {
        let w = setup.weight();
        (0..=200)
            .map(|j| {
                let x = j as f64 / 200.0;
                let d = linalg::trace(&(&w * &(setup.g.value(x).adjoint() * setup.g.derivative(x)))) / c64::new(0.0, TAU);
                ChernRow { x, density: d.re }
            })
            .collect()
    }

    fn index_formula(&self) -> CheckResult {
        let setup = self.setup().term("setup")?;
        let bt = setup.toeplitz().term("setup")?;
        let opts = FormulaOptions {
            truncation: self.k(),
            eta: self.eta_opts(),
            tolerance: self.s.numerics.tolerance,
            ..FormulaOptions::default()
        };
        let mut rng = check_rng(self.s.numerics.seed, CheckId::IndexFormula);
        let f = index_formula_assemble(&bt, setup.product.clone(), &opts, &mut rng)?;
        let mut o = Outcome::default();
        o.lhs = Some(f.lhs as f64);
        o.rhs = Some(f.rhs);
        o.residual = Some(f.residual);
        o.tolerance = Some(opts.tolerance);
        o.pass = f.holds(opts.tolerance);
        o.term("local", f.local);
        o.term("eta", f.eta.total);
        for (i, e) in f.eta.ends.iter().enumerate() {
            o.term(format!("eta_end{i}"), e.value);
            o.term(format!("eta_end{i}_reduced"), e.reduced.reduced);
            o.term(format!("eta_end{i}_sf"), e.sf as f64);
            o.artifacts.eta_traces.insert(format!("end{i}"), trace_rows(&e.reduced));
        }
        o.term("tau", f.tau.value as f64);
        o.integer("index", f.lhs, index_evidence(&f.lhs_evidence));
        o.integer("tau", f.tau.value, json!({"detour_value": f.tau.check}));
        o.integer("rhs-rounded", f.rhs.round() as i64, json!({"residual": f.residual, "tolerance": opts.tolerance}));
        if let Some(p) = f.product_index {
            o.integer("product-type-index", p, json!({"note": "index of the product-type symbol with the same end values"}));
            o.diag("product_type_replacement", json!(true));
        }
        o.diag("integrality_residual", json!(f.integrality_residual()));
        o.artifacts.chern.insert("local".into(), self.local_density(setup));
        Ok(o)
    }

    fn integrality(&self) -> CheckResult {
        let setup = self.setup().term("setup")?;
        let loc = crate::chern::interval_local_term(&setup.model.gamma, setup.g.as_ref());
        let ends = setup.ends().term("setup")?;
        let eta = boundary_eta(&ends, &setup.g.value(0.0), &setup.g.value(1.0), &self.eta_opts()).term("eta")?;
        let mut o = Outcome::default();
        o.lhs = Some(loc + eta.total);
        o.rhs = Some((loc + eta.total).round());
        o.term("local", loc);
        o.term("eta", eta.total);
        for (i, e) in eta.ends.iter().enumerate() {
            o.term(format!("eta_end{i}"), e.value);
        }
        o.residual(dist_z(loc + eta.total), MOD_Z_TOL);
        o.artifacts.chern.insert("local".into(), self.local_density(setup));
        Ok(o)
    }

    fn g_ends(&self) -> Result<(CMat, CMat)> {
        let s = self.setup()?;
        Ok((s.g.value(0.0), s.g.value(1.0)))
    }

    fn cutoff_independence(&self) -> CheckResult {
        let ends = self.setup().and_then(|s| s.ends()).term("setup")?;
        let (g0, g1) = self.g_ends().term("setup")?;
        let mut o = Outcome::default();
        let mut values = Vec::new();
        for psi in CUTOFF_PROFILES {
            let opts = EtaOptions { psi, ..self.eta_opts() };
            let e = boundary_eta(&ends, &g0, &g1, &opts).term("eta")?;
            if let CutoffProfile::Collar { a, b } = psi {
                o.term(format!("eta[{a},{b}]"), e.total);
            }
            values.push(e.total);
        }
        let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min);
        o.lhs = Some(values[0]);
        o.residual(spread, CUTOFF_TOL);
        Ok(o)
    }

    fn flat_rescaling(&self) -> CheckResult {
        let setup = self.setup().term("setup")?;
        let (g0, g1) = self.g_ends().term("setup")?;
        let base = boundary_eta(&setup.ends().term("setup")?, &g0, &g1, &self.eta_opts()).term("eta")?.total;
        let mut o = Outcome::default();
        o.lhs = Some(base);
        o.term("eta[c=1]", base);
        let mut worst: f64 = 0.0;
        for c in [0.5, 2.0] {
            let mut scaled = setup.clone();
            scaled.model = IntervalDiracModel::new(setup.model.gamma.clone(), linalg::scale_re(c, &setup.model.a)).term("model")?;
            let e = boundary_eta(&scaled.ends().term("setup")?, &g0, &g1, &self.eta_opts()).term("eta")?.total;
            o.term(format!("eta[c={c}]"), e);
            worst = worst.max(dist_z(e - base));
        }
        o.residual(worst, MOD_Z_TOL);
        Ok(o)
    }

    fn additivity(&self) -> CheckResult {
        let setup = self.setup().term("setup")?;
        let ends = setup.ends().term("setup")?;
        let ch = setup.chirality().term("setup")?;
        let n = ch.half_dim();
        let mut rng = check_rng(self.s.numerics.seed, CheckId::Additivity);
        let mut draw = || ch.assemble(&linalg::random_unitary(n, &mut rng), &linalg::random_unitary(n, &mut rng));
        let mut o = Outcome::default();
        let mut worst: f64 = 0.0;
        for i in 0..self.s.numerics.samples {
            let f = [draw(), draw()];
            let g = [draw(), draw()];
            let r = additivity_check(&ends, [&f[0], &f[1]], [&g[0], &g[1]], &self.eta_opts()).term("eta")?;
            o.term(format!("residual[{i}]"), r);
            worst = worst.max(r);
        }
        o.residual(worst, MOD_Z_TOL);
        Ok(o)
    }

    fn homotopy_variation(&self) -> CheckResult {
        let setup = self.setup().term("setup")?;
        let ends = setup.ends().term("setup")?;
        let ch = setup.chirality().term("setup")?;
        let n = ch.half_dim();
        let weight = setup.weight();
        let mut rng = check_rng(self.s.numerics.seed, CheckId::HomotopyVariation);
        let mut o = Outcome::default();
        let mut worst: f64 = 0.0;
        for i in 0..self.s.numerics.samples {
            let hp = random_hermitian_scaled(n, 1.0, &mut rng);
            let hm = random_hermitian_scaled(n, 1.0, &mut rng);
            let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let (g, chc) = (setup.g.clone(), ch.clone());
            let fam = UnitaryFamily::new(Base::Interval, move |t, x| {
                let d = chc.assemble(
                    &linalg::expi_hermitian(&hp, t * (c[0] + c[1] * x) + c[2] * t * t),
                    &linalg::expi_hermitian(&hm, t * (c[3] + c[4] * x * x) + c[5] * t * t),
                );
                &g.value(x) * &d
            })
            .term("family")?;
            let r = homotopy_variation_check(&ends, &fam, &weight, &self.eta_opts()).term("eta")?;
            o.term(format!("transgression[{i}]"), r.transgression);
            o.term(format!("eta_change[{i}]"), r.eta_end - r.eta_start);
            worst = worst.max(r.residual);
        }
        o.residual(worst, MOD_Z_TOL);
        Ok(o)
    }

    fn section_change(&self) -> CheckResult {
        let setup = self.setup().term("setup")?;
        let ends = setup.ends().term("setup")?;
        let end = &ends[0];
        let g0 = setup.g.value(0.0);
        let p = &linalg::identity(end.dim()) - &linalg::projector(&end.domain);
        let mut mus: Vec<f64> = linalg::eigvalsh(&end.a).term("spectrum")?.into_iter().filter(|&l| l > 1e-9).collect();
        mus.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut sets: Vec<Vec<f64>> = mus.iter().map(|&m| vec![m]).collect();
        if mus.len() > 1 {
            sets.push(mus.clone());
        }
        let mut o = Outcome::default();
        let mut worst: f64 = 0.0;
        let mut diffs = Vec::new();
        for set in sets {
            let q = flip_modes(end, &p, &set).term("flip")?;
            let c = finite_rank_section_check(&setup.model, &p, &q, &g0, &self.eta_opts()).term("eta")?;
            let label = set.iter().map(|m| format!("{m}")).collect::<Vec<_>>().join("+");
            o.term(format!("eta[flip {label}]"), c.modified.value);
            o.term("eta[reference]", c.reference.value);
            diffs.push(json!({"flipped": set, "difference": c.difference}));
            worst = worst.max(c.residual);
        }
        o.diag("unreduced_differences", Value::Array(diffs));
        o.residual(worst, MOD_Z_TOL);
        Ok(o)
    }

    fn probe(&self) -> CheckResult {
        let ends = self.setup().and_then(|s| s.ends()).term("setup")?;
        let (g0, g1) = self.g_ends().term("setup")?;
        let mut o = Outcome::default();
        let mut worst: f64 = 0.0;
        for (i, (end, g)) in ends.iter().zip([&g0, &g1]).enumerate() {
            let p = conjugated_condition_probe(end, g, &self.eta_opts()).term("probe")?;
            o.term(format!("end{i}_eta_type"), p.lhs);
            o.term(format!("end{i}_conjugated_condition"), p.rhs);
            o.term(format!("end{i}_gap"), p.gap);
            worst = worst.max(p.gap_mod_z);
        }
        o.residual = Some(worst);
        Ok(o)
    }

    fn stokes(&self) -> CheckResult {
        let fam = unitary_family(self.s).term("family")?;
        let st = stokes_refinement(&fam, None, &[16, 32, 64, 128]).term("stokes")?;
        let mut o = Outcome::default();
        for (n, r) in st.grids.iter().zip(&st.residuals) {
            o.term(format!("residual[n={n}]"), *r);
        }
        o.diag("rates", json!(st.rates));
        o.lhs = Some(st.order());
        o.rhs = Some(STOKES_ORDER);
        o.residual = st.residuals.last().copied();
        o.pass = st.order() >= STOKES_ORDER;
        Ok(o)
    }

    fn transgression_pointwise(&self) -> CheckResult {
        let fam = unitary_family(self.s).term("family")?;
        let r = transgression_pointwise_check(&fam, 256).term("transgression")?;
        let mut o = Outcome::default();
        o.residual(r, POINTWISE_TOL);
        Ok(o)
    }
}

/// Runs every requested check of a scenario. Errors are recorded per check.
pub fn run_scenario(s: &Scenario, exec: Exec) -> ScenarioRun {
    let ctx = Ctx::new(s, exec);
    let mut report = InvariantReport::new(&s.name, &s.hash());
    let mut artifacts = Artifacts::default();
    for &id in &s.checks {
        let start = Instant::now();
        let result = ctx.run(id);
        let wall = start.elapsed().as_secs_f64();
        let record = match result {
            Ok(o) => {
                let verdict = if id.is_exploratory() {
                    Verdict::Recorded
                } else if o.pass {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
                let mut art = o.artifacts;
                prefix_series(&mut art, id);
                artifacts.merge(art);
                CheckRecord {
                    check: id,
                    verdict,
                    lhs: o.lhs,
                    rhs: o.rhs,
                    residual: o.residual,
                    tolerance: o.tolerance,
                    integers: o.integers,
                    terms: o.terms,
                    diagnostics: Value::Object(o.diagnostics),
                    error: None,
                    wall_time_s: wall,
                }
            }
            Err(e) => CheckRecord {
                check: id,
                verdict: if id.is_exploratory() { Verdict::Recorded } else { Verdict::Error },
                lhs: None,
                rhs: None,
                residual: None,
                tolerance: None,
                integers: vec![],
                terms: BTreeMap::new(),
                diagnostics: json!({}),
                error: Some(CheckError { term: Some(e.term.to_string()), message: e.error.to_string() }),
                wall_time_s: wall,
            },
        };
        report.push(record);
    }
    ScenarioRun { report, artifacts }
}

fn prefix_series(a: &mut Artifacts, id: CheckId) {
    fn re<T>(m: &mut BTreeMap<String, Vec<T>>, id: CheckId) {
        *m = std::mem::take(m).into_iter().map(|(k, v)| (format!("{}.{k}", id.name()), v)).collect();
    }
    re(&mut a.branches, id);
    re(&mut a.eigenvalues, id);
    re(&mut a.eta_traces, id);
    re(&mut a.chern, id);
    re(&mut a.w_phases, id);
}

/// Runs scenarios in a work pool; results keep the input order.
pub fn run_scenarios(scenarios: &[Scenario], exec: Exec) -> Vec<ScenarioRun> {
    par::map(exec, scenarios, |s| run_scenario(s, exec))
}
