//! End-to-end acceptance run over the preset suite. Prints one pass/fail line per criterion and
//! fails if any gating criterion fails. The conjectural probe is pinned but never gates.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as c64;

use indexlab::checks::{circle_symbol, run_scenarios};
use indexlab::par::Exec;
use indexlab::report::{CheckRecord, InvariantReport, Verdict};
use indexlab::scenario::{presets, CheckId, ModelSpec, Scenario};

struct Suite {
    scenarios: BTreeMap<String, Scenario>,
    reports: BTreeMap<String, InvariantReport>,
}

impl Suite {
    fn run() -> Self {
        let all = presets();
        let runs = run_scenarios(&all, Exec::Parallel);
        let reports = runs.into_iter().map(|r| (r.report.scenario.clone(), r.report)).collect();
        let scenarios = all.into_iter().map(|s| (s.name.clone(), s)).collect();
        Self { scenarios, reports }
    }

    /// All (scenario, record) pairs for one check.
    fn records(&self, id: CheckId) -> Vec<(&Scenario, &CheckRecord)> {
        self.reports
            .iter()
            .flat_map(|(n, r)| r.records().filter(move |c| c.check == id).map(move |c| (&self.scenarios[n], c)))
            .collect()
    }

    fn record(&self, scenario: &str, id: CheckId) -> &CheckRecord {
        self.reports[scenario].records().find(|c| c.check == id).unwrap_or_else(|| panic!("{scenario} has no {}", id.name()))
    }
}

fn integer(c: &CheckRecord, name: &str) -> i64 {
    c.integers.iter().find(|i| i.name == name).unwrap_or_else(|| panic!("{} has no integer {name}", c.check.name())).value
}

fn passed(c: &CheckRecord) -> bool {
    c.verdict == Verdict::Pass
}

fn describe(s: &Scenario, c: &CheckRecord) -> String {
    format!("{}/{} {:?} res={:?} err={:?}", s.name, c.check.name(), c.verdict, c.residual, c.error.as_ref().map(|e| &e.message))
}

/// Collects failures of one criterion.
#[derive(Default)]
struct Criterion {
    problems: Vec<String>,
}

impl Criterion {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.problems.push(what());
        }
    }
}

fn mod_one(x: f64) -> f64 {
    x - x.floor()
}

// Small complex determinant by partial pivoting, used as an oracle for det windings.
#[allow(clippy::needless_range_loop)]
fn det(m: &indexlab::linalg::CMat) -> c64 {
    let n = m.nrows();
    let mut a: Vec<Vec<c64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    let mut d = c64::new(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        d *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let v = a[k][j];
                a[i][j] -= f * v;
            }
        }
    }
    d
}

/// Winding number of θ ↦ det g(θ), by summing principal phase increments.
fn det_winding(s: &Scenario) -> i64 {
    let g = circle_symbol(s.symbol.as_ref().unwrap(), s.numerics.seed).unwrap();
    let m = 4096;
    let dets: Vec<c64> = (0..=m).map(|j| det(&g.eval(TAU * j as f64 / m as f64))).collect();
    let total: f64 = dets.windows(2).map(|w| (w[1] / w[0]).arg()).sum();
    (total / TAU).round() as i64
}

fn closed_index(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let recs = s.records(CheckId::ClosedIndex);
    c.require(recs.len() >= 9, || format!("only {} circle symbols", recs.len()));
    let windings: Vec<i64> = recs.iter().filter(|(sc, _)| sc.name.starts_with("circle-winding")).map(|(sc, _)| det_winding(sc)).collect();
    for k in -3..=3 {
        c.require(windings.contains(&k), || format!("winding {k} not covered"));
    }
    for (sc, r) in recs {
        c.require(passed(r), || describe(sc, r));
        let ev = &r.integers.iter().find(|i| i.name == "toeplitz-index").unwrap().evidence;
        let k = sc.numerics.truncation as u64;
        c.require(ev["truncations"] == serde_json::json!([k, k + 5]), || format!("{}: truncations {}", sc.name, ev["truncations"]));
        c.require(ev["values"][0] == ev["values"][1], || format!("{}: unstable under K -> K+5", sc.name));
        let w = det_winding(sc);
        c.require(integer(r, "toeplitz-index") == -w, || format!("{}: index vs det winding {w}", sc.name));
        c.require(integer(r, "chern") == w, || format!("{}: chern vs det winding {w}", sc.name));
    }
    c
}

fn conjugation_flow(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let recs = s.records(CheckId::ConjugationFlow);
    c.require(recs.len() == s.records(CheckId::ClosedIndex).len(), || "flow not run on every circle symbol".into());
    for (sc, r) in recs {
        c.require(passed(r), || describe(sc, r));
        c.require(integer(r, "spectral-flow") == -integer(r, "toeplitz-index"), || describe(sc, r));
    }
    c
}

fn exact_eta(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let lattice = s.record("eta-lattice", CheckId::LatticeEta);
    c.require(passed(lattice), || "lattice record failed".into());
    let ModelSpec::Lattice { offsets } = &s.scenarios["eta-lattice"].model else { panic!("lattice model") };
    c.require(offsets.len() >= 9, || "fewer than nine offsets".into());
    for &a in offsets {
        let v = lattice.terms[&format!("eta[a={a}]")];
        c.require((v - (1.0 - 2.0 * a)).abs() <= 1e-8, || format!("lattice a={a}: {v}"));
    }
    for (sc, r) in s.records(CheckId::RotationEta) {
        let ModelSpec::Rotation { alpha0, alpha1 } = sc.model else { panic!("rotation model") };
        let a = mod_one((alpha0 - alpha1) / PI);
        let exact = 1.0 - 2.0 * a;
        let k = sc.numerics.truncation;
        c.require(passed(r), || describe(sc, r));
        for kk in [k, 2 * k] {
            let v = r.terms[&format!("eta[K={kk}]")];
            c.require((v - exact).abs() <= 1e-4, || format!("{} K={kk}: {v} vs {exact}", sc.name));
        }
    }
    c.require(s.records(CheckId::RotationEta).len() >= 2, || "rotation presets missing".into());
    c
}

fn triple_relation(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let r = s.record("maslov-triple-relation", CheckId::TripleRelation);
    let ev = &r.integers[0].evidence;
    c.require(passed(r), || format!("failures: {}", r.diagnostics["failures"]));
    c.require(integer(r, "relations-holding") == 100, || "not 100 of 100".into());
    c.require(ev["dims"] == serde_json::json!([2, 4, 6]), || format!("dims {}", ev["dims"]));
    c
}

fn splitting(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let recs = s.records(CheckId::Splitting);
    c.require(recs.len() >= 5, || format!("only {} splitting scenarios", recs.len()));
    let mut flows = Vec::new();
    for (sc, r) in recs {
        c.require(passed(r), || describe(sc, r));
        let (sf, mas) = (integer(r, "spectral-flow"), integer(r, "maslov"));
        c.require(sf == mas, || format!("{}: sf {sf} mas {mas}", sc.name));
        if let ModelSpec::Split { expected_flow: Some(e), .. } = sc.model {
            c.require(sf == e, || format!("{}: sf {sf} expected {e}", sc.name));
        }
        flows.push(sf);
    }
    for f in [-1, 0, 1] {
        c.require(flows.contains(&f), || format!("flow {f} not covered"));
    }
    c
}

fn interval_flows(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let mut names = Vec::new();
    for id in [CheckId::ToeplitzFlow, CheckId::PerturbedIndexFlow, CheckId::PerturbationFlow] {
        for (sc, r) in s.records(id) {
            c.require(passed(r), || describe(sc, r));
            names.push(sc.name.clone());
        }
    }
    for (sc, r) in s.records(CheckId::PerturbationFlow) {
        let (i, p, f) = (integer(r, "index"), integer(r, "perturbed-index"), integer(r, "spectral-flow"));
        c.require(i - p == f, || format!("{}: {i} - {p} != {f}", sc.name));
    }
    names.sort();
    names.dedup();
    c.require(names.len() >= 6, || format!("only {} interval scenarios", names.len()));
    for tag in ["identity", "constant", "ramp-w1", "ramp-wm1", "ramp-w2", "ramp-wm2"] {
        c.require(names.iter().any(|n| n.contains(&format!("-{tag}-"))), || format!("no {tag} scenario"));
    }
    c
}

fn index_formula(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let recs = s.records(CheckId::IndexFormula);
    c.require(recs.len() >= 6, || "too few formula scenarios".into());
    for (sc, r) in &recs {
        c.require(passed(r), || describe(sc, r));
        c.require(r.residual.is_some_and(|x| x <= 1e-4), || describe(sc, r));
        c.require(integer(r, "rhs-rounded") == integer(r, "index"), || describe(sc, r));
        for t in ["local", "eta", "tau"] {
            c.require(r.terms.contains_key(t), || format!("{}: no {t} term", sc.name));
        }
    }
    // Phase ramp of winding one under APS conditions: the local term is minus the winding, the
    // boundary terms vanish, so the index is one.
    let r = s.record("interval-ramp-w1-aps", CheckId::IndexFormula);
    c.require((r.terms["local"] + 1.0).abs() < 1e-10, || format!("ramp local {}", r.terms["local"]));
    c.require(r.terms["eta"].abs() < 1e-6, || format!("ramp eta {}", r.terms["eta"]));
    c.require(r.terms["tau"] == 0.0 && integer(r, "index") == 1, || "ramp tau/index".into());
    c
}

fn integrality(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let recs = s.records(CheckId::Integrality);
    let formula: Vec<&str> = s.records(CheckId::IndexFormula).iter().map(|(sc, _)| sc.name.as_str()).collect();
    for n in &formula {
        c.require(recs.iter().any(|(sc, _)| &sc.name == n), || format!("{n}: integrality not run"));
    }
    let randomized = recs.iter().filter(|(sc, _)| sc.name.starts_with("interval-random-g-")).count();
    c.require(randomized >= 10, || format!("only {randomized} randomized symbols"));
    for (sc, r) in recs {
        c.require(passed(r) && r.residual.is_some_and(|x| x <= 1e-5), || describe(sc, r));
    }
    c
}

fn eta_laws(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let mut bound = |id: CheckId, tol: f64, min: usize| {
        let recs = s.records(id);
        c.require(recs.len() >= min, || format!("{} ran on {} scenarios", id.name(), recs.len()));
        for (sc, r) in recs {
            c.require(passed(r) && r.residual.is_some_and(|x| x <= tol), || describe(sc, r));
        }
    };
    bound(CheckId::CutoffIndependence, 1e-6, 1);
    bound(CheckId::SectionChange, 1e-5, 1);
    bound(CheckId::HomotopyVariation, 1e-5, 1);
    bound(CheckId::Additivity, 1e-5, 1);
    bound(CheckId::FlatRescaling, 1e-5, 1);
    for (sc, r) in s.records(CheckId::CutoffIndependence) {
        let profiles = r.terms.keys().filter(|k| k.starts_with("eta[")).count();
        c.require(profiles >= 3, || format!("{}: {profiles} cut-off profiles", sc.name));
    }
    for (sc, r) in s.records(CheckId::Additivity) {
        let pairs = r.terms.keys().filter(|k| k.starts_with("residual[")).count();
        c.require(pairs >= 5, || format!("{}: {pairs} pairs", sc.name));
    }
    let stokes = s.records(CheckId::Stokes);
    c.require(!stokes.is_empty(), || "no Stokes run".into());
    for (sc, r) in stokes {
        c.require(passed(r) && r.lhs.is_some_and(|o| o >= 2.0), || format!("{}: order {:?}", sc.name, r.lhs));
    }
    let np = s.record("interval-nonproduct-aps", CheckId::IndexFormula);
    c.require(passed(np) && np.diagnostics["product_type_replacement"] == true, || "non-product formula".into());
    c.require(integer(np, "product-type-index") == integer(np, "index"), || "non-product index".into());
    c
}

fn cylinder(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    let mut ks = Vec::new();
    for (sc, r) in s.records(CheckId::CylinderIndex) {
        c.require(passed(r), || describe(sc, r));
        let w = det_winding(sc);
        c.require(integer(r, "cylinder-index") == integer(r, "toeplitz-index"), || describe(sc, r));
        c.require(integer(r, "cylinder-index") == -w, || format!("{}: vs winding {w}", sc.name));
        ks.push(w);
    }
    for k in -2..=2 {
        c.require(ks.contains(&k), || format!("cylinder winding {k} not covered"));
    }
    c
}

// Per-end values frozen from the reference run; the probe records but never gates.
const PROBE_PINS: [(&str, [f64; 4]); 3] = [
    ("eta-laws-aps", [-0.17507039950999206, -0.17507042015156482, 0.1750703995099868, 0.1750704201515405]),
    ("eta-laws-lines", [-7.4485434177128e-16, -7.4485434177128e-16, 0.1591549430918969, 0.1591549430918969]),
    ("eta-laws-c4", [-0.6947951420165084, -0.6947945867485563, -0.18140332520091845, -0.18140378492603304]),
];

fn probe(s: &Suite) -> Criterion {
    let mut c = Criterion::default();
    for (name, pins) in PROBE_PINS {
        let rep = &s.reports[name];
        c.require(rep.checks.iter().all(|r| r.check != CheckId::ConjugatedConditionProbe), || format!("{name}: probe gates"));
        let r = s.record(name, CheckId::ConjugatedConditionProbe);
        c.require(r.verdict == Verdict::Recorded, || format!("{name}: verdict {:?}", r.verdict));
        let keys = ["end0_eta_type", "end0_conjugated_condition", "end1_eta_type", "end1_conjugated_condition"];
        for (k, want) in keys.iter().zip(pins) {
            let got = r.terms[*k];
            c.require((got - want).abs() <= 1e-9, || format!("{name} {k}: {got} vs pinned {want}"));
        }
        for e in ["end0", "end1"] {
            let gap = r.terms[&format!("{e}_gap")];
            let diff = r.terms[&format!("{e}_eta_type")] - r.terms[&format!("{e}_conjugated_condition")];
            c.require((gap - diff).abs() <= 1e-12, || format!("{name} {e}: gap {gap} vs {diff}"));
            println!("    probe {name} {e}: gap {gap:.3e}");
        }
    }
    c
}

type CriterionFn = fn(&Suite) -> Criterion;

#[test]
fn acceptance() {
    let suite = Suite::run();
    let criteria: [(&str, CriterionFn, bool); 11] = [
        ("closed-manifold index equals minus the odd Chern integral", closed_index, true),
        ("conjugation spectral flow equals minus the Toeplitz index", conjugation_flow, true),
        ("eta closed forms on the lattice and rotation models", exact_eta, true),
        ("Maslov triple-index relation on random path triples", triple_relation, true),
        ("spectral flow equals Maslov index of Cauchy data under splitting", splitting, true),
        ("interval Toeplitz indices against spectral flows", interval_flows, true),
        ("assembled boundary index formula", index_formula, true),
        ("local term plus boundary eta is an integer", integrality, true),
        ("eta-type invariant laws and transgression", eta_laws, true),
        ("cylinder APS index equals circle Toeplitz index", cylinder, true),
        ("conjugated-condition probe (exploratory, pinned)", probe, false),
    ];
    let mut failed = Vec::new();
    for (name, f, gating) in criteria {
        let c = f(&suite);
        let ok = c.problems.is_empty();
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        for p in &c.problems {
            println!("    {p}");
        }
        if !ok && gating {
            failed.push(name);
        }
    }
    let gating_failures: usize = suite.reports.values().filter(|r| !r.passed()).count();
    println!("{} scenarios, {} with a failing verdict", suite.reports.len(), gating_failures);
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
    assert_eq!(gating_failures, 0);
}
