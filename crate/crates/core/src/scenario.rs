//! Scenario files: model, symbol, numerics and the list of checks, plus the preset library.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chern::Base;
use crate::error::{Error, Result};
use crate::interval::Ramp;

/// Value of the `schema` header key that every scenario file must carry.
pub const SCENARIO_SCHEMA: &str = "indexlab.scenario/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub checks: Vec<CheckId>,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolSpec>,
    #[serde(default)]
    pub numerics: Numerics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// −i d/dθ + a on the circle, acting on C^N with N the rank of the symbol.
    Circle {
        #[serde(default)]
        twist: f64,
    },
    /// [0, 1] × circle with the circle model as boundary operator.
    Cylinder {
        #[serde(default)]
        twist: f64,
    },
    /// γ(d/dx + A) on [0, 1] with γ = [[0, −1], [1, 0]] ⊗ I and A = diag(1, −1) ⊗ diag(masses).
    /// Each zero mass needs a Lagrangian line angle at both ends.
    Interval {
        masses: Vec<f64>,
        #[serde(default)]
        l0: Vec<f64>,
        #[serde(default)]
        l1: Vec<f64>,
    },
    /// Spectra {k + a : k ∈ Z}.
    Lattice { offsets: Vec<f64> },
    /// Free interval operator with Lagrangian lines at angles α₀, α₁.
    Rotation { alpha0: f64, alpha1: f64 },
    /// Random Lagrangian paths in C^d ⊕ C^d.
    Symplectic { dims: Vec<usize>, triples: usize },
    /// γ d/dx + Q_t(x) on [0, 1] with lines α₀, α₁, split at x*.
    Split {
        family: SplitPreset,
        alpha0: f64,
        alpha1: f64,
        split: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_flow: Option<i64>,
    },
    /// A homotopy g_t of unitary maps over a circle or interval base.
    Family { base: Base, family: FamilyPreset },
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Circle { .. } => "circle",
            Self::Cylinder { .. } => "cylinder",
            Self::Interval { .. } => "interval",
            Self::Lattice { .. } => "lattice",
            Self::Rotation { .. } => "rotation",
            Self::Symplectic { .. } => "symplectic",
            Self::Split { .. } => "split",
            Self::Family { .. } => "family",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SplitPreset {
    /// Q_t = t·c·I.
    Mass { c: f64 },
    /// Q_t = c·I for every t.
    Constant { c: f64 },
    /// Q_t = t·amp·b(x)·I with a unit-mass bump b centred at `center`.
    ScalarBump { amp: f64, center: f64 },
    /// Q_t = t·amp·b(x)·diag(1, −1).
    MatrixBump { amp: f64, center: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyPreset {
    /// e^{i(kθ + t·a·sin θ)} (circle base).
    Phase { k: i64, a: f64 },
    /// exp(i(x + t x²)H₁)·exp(i t(1 + x)H₂) with seeded random Hermitian H₁, H₂.
    TwoFactor { rank: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// e^{ikθ}.
    Winding { k: i64 },
    DiagonalWindings { ks: Vec<i64> },
    /// (I − P) + P e^{ikθ} with P the projector onto (cos φ, sin φ).
    Elementary { angle: f64, k: i64 },
    /// R diag(e^{ik₁θ}, e^{ik₂θ}) R* with R the rotation by `angle`.
    RotatedWindings { ks: Vec<i64>, angle: f64 },
    /// Same winding as diag(e^{ikθ}) but randomly deformed (seeded).
    RandomHomotopic { ks: Vec<i64> },
    /// g ≡ I on the interval.
    Identity,
    /// e^{iφ(x)} on V₊ and 1 on V₋, φ from φ₀ to φ₁ along the ramp.
    PhaseRamp { phi0: f64, phi1: f64, ramp: Ramp },
    /// Constant γ-commuting g = diag(e^{i plus}) ⊕ diag(e^{i minus}) on V₊ ⊕ V₋.
    ConstantChiral { plus: Vec<f64>, minus: Vec<f64> },
    /// U± e^{i r(x) H±} with seeded random U±, H± (‖H±‖ ≈ scale).
    RandomChiral { scale: f64, ramp: Ramp },
}

impl SymbolSpec {
    fn on_circle(&self) -> bool {
        matches!(
            self,
            Self::Winding { .. }
                | Self::DiagonalWindings { .. }
                | Self::Elementary { .. }
                | Self::RotatedWindings { .. }
                | Self::RandomHomotopic { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Fourier / Galerkin truncation K.
    pub truncation: usize,
    /// Points on parameter paths (spectral flow, Maslov).
    pub grid: usize,
    pub seed: u64,
    /// Truncation of the cylinder problems behind η̄.
    pub eta_truncation: usize,
    /// Tolerance of the assembled index formula before rounding.
    pub tolerance: f64,
    /// Number of randomized repetitions (additivity pairs, homotopies).
    pub samples: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { truncation: 60, grid: 41, seed: 1, eta_truncation: 60, tolerance: 1e-4, samples: 5 }
    }
}

/// Checks a scenario can request. Each one is an executable form of an identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    /// Hardy Toeplitz index = −(odd Chern integral) on the circle.
    ClosedIndex,
    /// Spectral flow of D → g⁻¹Dg = −(Toeplitz index).
    ConjugationFlow,
    /// Cylinder APS index = circle Toeplitz index.
    CylinderIndex,
    /// Lattice eta = 1 − 2a.
    LatticeEta,
    /// Regularized eta of the discretized rotation model against the closed form at K and 2K.
    RotationEta,
    /// Maslov relation with the triple index on random path triples.
    TripleRelation,
    /// Spectral flow of a split family = Maslov index of its Cauchy data.
    Splitting,
    /// ind T_g = −sf(D + u g⁻¹[D, g]).
    ToeplitzFlow,
    /// ind T_{g,ψ} = −sf(D + u(1 − ψ)g⁻¹[D, g]).
    PerturbedIndexFlow,
    /// ind T_g − ind T_{g,ψ} = sf of the perturbation path.
    PerturbationFlow,
    /// ind T_g = −(local term) − η̄(∂M, g) + τ.
    IndexFormula,
    /// Local term + η̄(∂M, g) is an integer.
    Integrality,
    /// η̄(∂M, g) does not depend on the cut-off.
    CutoffIndependence,
    /// Discrete Stokes identity for the transgression form, second order.
    Stokes,
    /// d ch̃ = ch(g₁) − ch(g₀) pointwise on the circle.
    TransgressionPointwise,
    /// Finite-rank changes of the boundary condition leave η̄ fixed mod Z.
    SectionChange,
    /// η̄(g₁) − η̄(g₀) + transgression ≡ 0 mod Z along homotopies.
    HomotopyVariation,
    /// A → cA leaves η̄ fixed mod Z.
    FlatRescaling,
    /// η̄(fg) ≡ η̄(f) + η̄(g) mod Z.
    Additivity,
    /// η̄(X, g) against the reduced eta with the conjugated condition (exploratory).
    ConjugatedConditionProbe,
}

impl CheckId {
    pub const ALL: [CheckId; 20] = [
        Self::ClosedIndex,
        Self::ConjugationFlow,
        Self::CylinderIndex,
        Self::LatticeEta,
        Self::RotationEta,
        Self::TripleRelation,
        Self::Splitting,
        Self::ToeplitzFlow,
        Self::PerturbedIndexFlow,
        Self::PerturbationFlow,
        Self::IndexFormula,
        Self::Integrality,
        Self::CutoffIndependence,
        Self::Stokes,
        Self::TransgressionPointwise,
        Self::SectionChange,
        Self::HomotopyVariation,
        Self::FlatRescaling,
        Self::Additivity,
        Self::ConjugatedConditionProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ClosedIndex => "closed-index",
            Self::ConjugationFlow => "conjugation-flow",
            Self::CylinderIndex => "cylinder-index",
            Self::LatticeEta => "lattice-eta",
            Self::RotationEta => "rotation-eta",
            Self::TripleRelation => "triple-relation",
            Self::Splitting => "splitting",
            Self::ToeplitzFlow => "toeplitz-flow",
            Self::PerturbedIndexFlow => "perturbed-index-flow",
            Self::PerturbationFlow => "perturbation-flow",
            Self::IndexFormula => "index-formula",
            Self::Integrality => "integrality",
            Self::CutoffIndependence => "cutoff-independence",
            Self::Stokes => "stokes",
            Self::TransgressionPointwise => "transgression-pointwise",
            Self::SectionChange => "section-change",
            Self::HomotopyVariation => "homotopy-variation",
            Self::FlatRescaling => "flat-rescaling",
            Self::Additivity => "additivity",
            Self::ConjugatedConditionProbe => "conjugated-condition-probe",
        }
    }

    /// Exploratory checks are recorded but never decide the exit status.
    pub fn is_exploratory(self) -> bool {
        self == Self::ConjugatedConditionProbe
    }

    pub fn suite(self) -> Suite {
        match self {
            Self::ClosedIndex | Self::ConjugationFlow | Self::CylinderIndex => Suite::Circle,
            Self::TripleRelation | Self::Splitting => Suite::Maslov,
            Self::ToeplitzFlow | Self::PerturbedIndexFlow | Self::PerturbationFlow | Self::IndexFormula | Self::Integrality => {
                Suite::Interval
            }
            _ => Suite::Eta,
        }
    }

    fn models(self) -> &'static [&'static str] {
        match self {
            Self::ClosedIndex | Self::ConjugationFlow => &["circle"],
            Self::CylinderIndex => &["cylinder"],
            Self::LatticeEta => &["lattice"],
            Self::RotationEta => &["rotation"],
            Self::TripleRelation => &["symplectic"],
            Self::Splitting => &["split"],
            Self::Stokes | Self::TransgressionPointwise => &["family"],
            _ => &["interval"],
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Circle,
    Interval,
    Maslov,
    Eta,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Self::Circle),
            "interval" => Ok(Self::Interval),
            "maslov" => Ok(Self::Maslov),
            "eta" => Ok(Self::Eta),
            "all" => Ok(Self::All),
            _ => Err(Error::InvalidInput(format!("unknown suite '{s}' (circle, interval, maslov, eta, all)"))),
        }
    }
}

/// Overrides from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub truncation: Option<usize>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("scenario file: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(format!("cannot serialize scenario: {e}")))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(k) = o.truncation {
            self.numerics.truncation = k;
            self.numerics.eta_truncation = k;
        }
        if let Some(g) = o.grid {
            self.numerics.grid = g;
        }
        if let Some(s) = o.seed {
            self.numerics.seed = s;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn in_suite(&self, suite: Suite) -> bool {
        suite == Suite::All || self.checks.iter().any(|c| c.suite() == suite)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("scenario '{}': {m}", self.name)));
        if self.schema != SCENARIO_SCHEMA {
            return bad(format!("schema '{}' is not supported (expected '{SCENARIO_SCHEMA}')", self.schema));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name must be non-empty and free of path separators".into());
        }
        if self.checks.is_empty() {
            return bad("no checks requested".into());
        }
        let n = &self.numerics;
        if !(8..=400).contains(&n.truncation) || !(8..=400).contains(&n.eta_truncation) {
            return bad(format!("truncations must lie in 8..=400, got {} and {}", n.truncation, n.eta_truncation));
        }
        if !(9..=2001).contains(&n.grid) {
            return bad(format!("grid must lie in 9..=2001, got {}", n.grid));
        }
        if !(n.tolerance > 0.0 && n.tolerance < 0.5) {
            return bad(format!("tolerance must lie in (0, ½), got {}", n.tolerance));
        }
        // TOML integers are signed 64-bit.
        if n.seed > i64::MAX as u64 {
            return bad(format!("seed must be at most {}, got {}", i64::MAX, n.seed));
        }
        if n.samples == 0 || n.samples > 100 {
            return bad(format!("samples must lie in 1..=100, got {}", n.samples));
        }
        let kind = self.model.kind();
        for c in &self.checks {
            if !c.models().contains(&kind) {
                return bad(format!("check '{c}' does not apply to a {kind} model"));
            }
        }
        let needs_symbol = matches!(self.model, ModelSpec::Circle { .. } | ModelSpec::Cylinder { .. } | ModelSpec::Interval { .. });
        match (&self.symbol, needs_symbol) {
            (None, true) => return bad(format!("a {kind} model needs a symbol")),
            (Some(_), false) => return bad(format!("a {kind} model takes no symbol")),
            _ => {}
        }
        match &self.model {
            ModelSpec::Circle { twist } | ModelSpec::Cylinder { twist } => {
                if !twist.is_finite() || twist.abs() >= 1.0 {
                    return bad(format!("twist must lie in (−1, 1), got {twist}"));
                }
                let s = self.symbol.as_ref().unwrap();
                if !s.on_circle() {
                    return bad("circle models need a circle symbol".into());
                }
                match s {
                    SymbolSpec::RotatedWindings { ks, .. } if ks.len() != 2 => return bad("rotated windings need two entries".into()),
                    SymbolSpec::DiagonalWindings { ks } | SymbolSpec::RandomHomotopic { ks } if ks.is_empty() => {
                        return bad("windings must be non-empty".into())
                    }
                    _ => {}
                }
                let band = match s {
                    SymbolSpec::Winding { k } | SymbolSpec::Elementary { k, .. } => k.unsigned_abs() as usize,
                    SymbolSpec::DiagonalWindings { ks } | SymbolSpec::RotatedWindings { ks, .. } => {
                        ks.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
                    }
                    SymbolSpec::RandomHomotopic { ks } => ks.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0) + 2,
                    _ => 0,
                };
                if n.truncation <= 2 * band + 4 {
                    return bad(format!("truncation {} too small for a symbol of band {band}", n.truncation));
                }
            }
            ModelSpec::Interval { masses, l0, l1 } => {
                if masses.is_empty() || masses.len() > 4 {
                    return bad("interval models take 1 to 4 masses".into());
                }
                let zeros = masses.iter().filter(|m| **m == 0.0).count();
                if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
                    return bad("masses must be finite and nonnegative".into());
                }
                if l0.len() != zeros || l1.len() != zeros {
                    return bad(format!("{zeros} zero mass(es) need as many line angles in l0 and l1"));
                }
                let s = self.symbol.as_ref().unwrap();
                if s.on_circle() {
                    return bad("interval models need an interval symbol".into());
                }
                match s {
                    SymbolSpec::PhaseRamp { .. } if masses.len() != 1 => return bad("phase ramps need a single mass".into()),
                    SymbolSpec::ConstantChiral { plus, minus } if plus.len() != masses.len() || minus.len() != masses.len() => {
                        return bad("constant chiral phases need one entry per mass on each side".into())
                    }
                    SymbolSpec::PhaseRamp { ramp, .. } | SymbolSpec::RandomChiral { ramp, .. } => {
                        if let Ramp::Smooth { a, b } = ramp {
                            if !(0.0 <= *a && a < b && *b <= 1.0) {
                                return bad(format!("ramp needs 0 ≤ a < b ≤ 1, got ({a}, {b})"));
                            }
                        }
                    }
                    _ => {}
                }
                if self.checks.contains(&CheckId::SectionChange) && masses.iter().all(|m| *m == 0.0) {
                    return bad("section changes need a nonzero mass".into());
                }
            }
            ModelSpec::Lattice { offsets } => {
                if offsets.is_empty() || offsets.iter().any(|a| !(0.0..1.0).contains(a)) {
                    return bad("lattice offsets must lie in [0, 1)".into());
                }
            }
            ModelSpec::Rotation { alpha0, alpha1 } => {
                if !alpha0.is_finite() || !alpha1.is_finite() {
                    return bad("angles must be finite".into());
                }
            }
            ModelSpec::Symplectic { dims, triples } => {
                if dims.is_empty() || dims.iter().any(|d| *d == 0 || *d > 16) || *triples == 0 || *triples > 1000 {
                    return bad("symplectic model needs dims in 1..=16 and 1..=1000 triples".into());
                }
            }
            ModelSpec::Split { split, .. } => {
                if !(*split > 0.0 && *split < 1.0) {
                    return bad(format!("split point must lie in (0, 1), got {split}"));
                }
            }
            ModelSpec::Family { base, family } => match (base, family) {
                (Base::Interval, FamilyPreset::Phase { .. }) => return bad("phase families live on the circle".into()),
                (_, FamilyPreset::TwoFactor { rank }) if *rank == 0 || *rank > 8 => return bad("rank must lie in 1..=8".into()),
                _ => {
                    if self.checks.contains(&CheckId::Stokes) && *base != Base::Interval {
                        return bad("the Stokes check needs an interval base".into());
                    }
                    if self.checks.contains(&CheckId::TransgressionPointwise) && *base != Base::Circle {
                        return bad("the pointwise check needs a circle base".into());
                    }
                }
            },
        }
        Ok(())
    }
}

fn scenario(name: &str, description: &str, checks: &[CheckId], model: ModelSpec, symbol: Option<SymbolSpec>) -> Scenario {
    Scenario {
        schema: SCENARIO_SCHEMA.into(),
        name: name.into(),
        description: description.into(),
        checks: checks.to_vec(),
        model,
        symbol,
        numerics: Numerics::default(),
    }
}

const SMOOTH: Ramp = Ramp::Smooth { a: 0.2, b: 0.8 };

fn aps() -> ModelSpec {
    ModelSpec::Interval { masses: vec![1.0], l0: vec![], l1: vec![] }
}

fn lines() -> ModelSpec {
    ModelSpec::Interval { masses: vec![0.0], l0: vec![0.3], l1: vec![1.1] }
}

fn ramp(phi0: f64, phi1: f64) -> Option<SymbolSpec> {
    Some(SymbolSpec::PhaseRamp { phi0, phi1, ramp: SMOOTH })
}

/// The built-in scenarios; the default suites run all of them.
pub fn presets() -> Vec<Scenario> {
    use CheckId::*;
    let mut out = Vec::new();

    for k in -3..=3 {
        out.push(scenario(
            &format!("circle-winding-{}", signed(k)),
            "scalar winding symbol on the circle",
            &[ClosedIndex, ConjugationFlow],
            ModelSpec::Circle { twist: 0.0 },
            Some(SymbolSpec::Winding { k }),
        ));
    }
    out.push(scenario(
        "circle-block-elementary",
        "rank-one projector loop (I − P) + P e^{2iθ} on C²",
        &[ClosedIndex, ConjugationFlow],
        ModelSpec::Circle { twist: 0.0 },
        Some(SymbolSpec::Elementary { angle: 0.6, k: 2 }),
    ));
    out.push(scenario(
        "circle-block-rotated",
        "rotated diag(e^{iθ}, e^{−2iθ}) on C²",
        &[ClosedIndex, ConjugationFlow],
        ModelSpec::Circle { twist: 0.0 },
        Some(SymbolSpec::RotatedWindings { ks: vec![1, -2], angle: 0.9 }),
    ));
    out.push(scenario(
        "circle-block-deformed",
        "random deformation of diag(e^{2iθ}, 1), twisted operator",
        &[ClosedIndex, ConjugationFlow],
        ModelSpec::Circle { twist: 0.3 },
        Some(SymbolSpec::RandomHomotopic { ks: vec![2, 0] }),
    ));
    for k in -2..=2 {
        let mut s = scenario(
            &format!("cylinder-winding-{}", signed(k)),
            "APS problem on the cylinder against the boundary Toeplitz index",
            &[CylinderIndex],
            ModelSpec::Cylinder { twist: 0.0 },
            Some(SymbolSpec::Winding { k }),
        );
        s.numerics.truncation = 40;
        out.push(s);
    }

    let interval_checks = [ToeplitzFlow, PerturbedIndexFlow, PerturbationFlow, IndexFormula, Integrality];
    let cases: Vec<(&str, &str, ModelSpec, Option<SymbolSpec>)> = vec![
        ("interval-identity-aps", "g = I, APS condition", aps(), Some(SymbolSpec::Identity)),
        ("interval-identity-lines", "g = I, A = 0 with Lagrangian lines", lines(), Some(SymbolSpec::Identity)),
        (
            "interval-constant-aps",
            "constant γ-commuting g, APS condition",
            aps(),
            Some(SymbolSpec::ConstantChiral { plus: vec![0.7], minus: vec![-0.4] }),
        ),
        (
            "interval-constant-lines",
            "constant γ-commuting g, A = 0",
            lines(),
            Some(SymbolSpec::ConstantChiral { plus: vec![2.1], minus: vec![0.5] }),
        ),
        ("interval-ramp-w1-aps", "phase ramp of winding 1", aps(), ramp(0.0, TAU)),
        ("interval-ramp-w1-lines", "phase ramp of winding 1, A = 0", lines(), ramp(0.0, TAU)),
        ("interval-ramp-wm1-aps", "phase ramp of winding −1", aps(), ramp(0.0, -TAU)),
        ("interval-ramp-w2-aps", "phase ramp of winding 2", aps(), ramp(0.0, 2.0 * TAU)),
        ("interval-ramp-wm2-lines", "phase ramp of winding −2, A = 0", lines(), ramp(0.0, -2.0 * TAU)),
        ("interval-ramp-fractional-lines", "phase ramp 0.8 → 7, A = 0", lines(), ramp(0.8, 7.0)),
        ("interval-ramp-negative-lines", "phase ramp 0 → −2.5, A = 0", lines(), ramp(0.0, -2.5)),
        (
            "interval-nonproduct-aps",
            "phase ramp of winding 1 with nonzero slope at the ends",
            aps(),
            Some(SymbolSpec::PhaseRamp { phi0: 0.0, phi1: TAU, ramp: Ramp::NonProduct }),
        ),
        (
            "interval-random-c4",
            "random chiral symbol on C⁴, masses 1 and 2",
            ModelSpec::Interval { masses: vec![1.0, 2.0], l0: vec![], l1: vec![] },
            Some(SymbolSpec::RandomChiral { scale: 4.0, ramp: SMOOTH }),
        ),
    ];
    for (name, desc, model, symbol) in cases {
        out.push(scenario(name, desc, &interval_checks, model, symbol));
    }
    for seed in 1..=10u64 {
        let model = match seed % 3 {
            0 => aps(),
            1 => lines(),
            _ => ModelSpec::Interval { masses: vec![0.0, 1.5], l0: vec![0.9], l1: vec![-0.4] },
        };
        let mut s = scenario(
            &format!("interval-random-g-{seed}"),
            "random chiral symbol, integrality of local term plus η̄",
            &[Integrality],
            model,
            Some(SymbolSpec::RandomChiral { scale: 5.0, ramp: SMOOTH }),
        );
        s.numerics.seed = 100 + seed;
        out.push(s);
    }

    out.push(scenario(
        "maslov-triple-relation",
        "Maslov relation with the triple index on random path triples",
        &[TripleRelation],
        ModelSpec::Symplectic { dims: vec![2, 4, 6], triples: 100 },
        None,
    ));
    let splits: [(&str, SplitPreset, i64); 6] = [
        ("split-mass-plus", SplitPreset::Mass { c: PI }, 1),
        ("split-mass-minus", SplitPreset::Mass { c: -PI }, -1),
        ("split-mass-double", SplitPreset::Mass { c: TAU }, 2),
        ("split-constant", SplitPreset::Constant { c: 0.4 }, 0),
        ("split-scalar-bump", SplitPreset::ScalarBump { amp: PI, center: 0.45 }, 1),
        ("split-matrix-bump", SplitPreset::MatrixBump { amp: 2.0, center: 0.6 }, 0),
    ];
    for (name, family, flow) in splits {
        out.push(scenario(
            name,
            "spectral flow of a split family against the Maslov index of its Cauchy data",
            &[Splitting],
            ModelSpec::Split { family, alpha0: 0.3, alpha1: 1.1, split: 0.45, expected_flow: Some(flow) },
            None,
        ));
    }

    out.push(scenario(
        "eta-lattice",
        "closed-form eta of shifted integer lattices",
        &[LatticeEta],
        ModelSpec::Lattice { offsets: (1..=9).map(|j| j as f64 / 10.0).collect() },
        None,
    ));
    for (name, a0, a1) in [("eta-rotation", 0.3, 1.1), ("eta-rotation-wide", 2.9, 0.1)] {
        out.push(scenario(name, "heat-regularized eta of the rotation model", &[RotationEta], ModelSpec::Rotation { alpha0: a0, alpha1: a1 }, None));
    }
    out.push(scenario(
        "eta-stokes",
        "discrete Stokes identity for a two-factor homotopy on the interval",
        &[Stokes],
        ModelSpec::Family { base: Base::Interval, family: FamilyPreset::TwoFactor { rank: 2 } },
        None,
    ));
    out.push(scenario(
        "eta-transgression-pointwise",
        "pointwise transgression identity for a phase family",
        &[TransgressionPointwise],
        ModelSpec::Family { base: Base::Circle, family: FamilyPreset::Phase { k: 2, a: 0.7 } },
        None,
    ));
    let laws = [CutoffIndependence, FlatRescaling, Additivity, HomotopyVariation, ConjugatedConditionProbe];
    out.push(scenario(
        "eta-laws-aps",
        "η̄ laws for a constant symbol with the APS condition",
        &laws,
        aps(),
        Some(SymbolSpec::ConstantChiral { plus: vec![0.7], minus: vec![-0.4] }),
    ));
    out.push(scenario("eta-laws-lines", "η̄ laws for a fractional phase ramp, A = 0", &laws, lines(), ramp(0.0, 1.0)));
    out.push(scenario(
        "eta-laws-c4",
        "η̄ laws on C⁴ including finite-rank section changes",
        &[CutoffIndependence, SectionChange, Additivity, ConjugatedConditionProbe],
        ModelSpec::Interval { masses: vec![1.0, 2.0], l0: vec![], l1: vec![] },
        Some(SymbolSpec::RandomChiral { scale: 3.0, ramp: SMOOTH }),
    ));
    out
}

fn signed(k: i64) -> String {
    if k < 0 {
        format!("m{}", -k)
    } else {
        k.to_string()
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    presets().into_iter().find(|s| s.name == name)
}

pub fn suite(s: Suite) -> Vec<Scenario> {
    presets().into_iter().filter(|p| p.in_suite(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_unique() {
        let all = presets();
        let mut names: Vec<&str> = all.iter().map(|s| s.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), all.len());
        for s in &all {
            s.validate().unwrap();
        }
        for c in CheckId::ALL {
            assert!(all.iter().any(|s| s.checks.contains(&c)), "{c} is not exercised by any preset");
        }
    }

    #[test]
    fn toml_round_trip() {
        for s in presets() {
            let text = s.to_toml().unwrap();
            assert!(text.starts_with("schema = "), "{text}");
            assert_eq!(Scenario::from_toml(&text).unwrap(), s);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let good = preset("interval-ramp-w1-aps").unwrap().to_toml().unwrap();
        assert!(Scenario::from_toml(&good.replace(SCENARIO_SCHEMA, "indexlab.scenario/0")).is_err());
        assert!(Scenario::from_toml(&good.replace("phase-ramp", "no-such-preset")).is_err());
        assert!(Scenario::from_toml(&good.replace("\"index-formula\"", "\"stokes\"")).is_err());
        let mut s = preset("circle-winding-3").unwrap();
        s.numerics.truncation = 8;
        assert!(s.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = preset("circle-winding-1").unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.numerics.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
