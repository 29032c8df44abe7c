//! Assembly of the boundary index formula
//! ind T_g = −(local term) − η̄(∂M, g) + τ(gPg⁻¹, P, 𝒫_M) on the interval, with per-term
//! attribution of failures.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chern::interval_local_term;
use crate::error::Error;
use crate::eta::{boundary_eta, dist_z, interval_ends, BoundaryEta, EtaOptions};
use crate::interval::{calderon_projection, BoundaryIndex, BoundaryToeplitz, IntervalSymbol};
use crate::linalg::{self, CMat};
use crate::maslov::{triple_index, HermitianSymplecticSpace, LagrangianProjector, TripleIndex};
use crate::spectral::RankThreshold;

/// A failure inside one term of a composite identity.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{term}: {error}")]
pub struct TermError {
    pub term: &'static str,
    pub error: Error,
}

fn term<T>(name: &'static str, r: crate::Result<T>) -> Result<T, TermError> {
    r.map_err(|error| TermError { term: name, error })
}

/// Boundary symplectic space V ⊕ V of the interval (values at 0 and 1), J = diag(−γ, γ).
pub fn boundary_space(gamma: &CMat) -> crate::Result<HermitianSymplecticSpace> {
    HermitianSymplecticSpace::new(linalg::block_diag(&-gamma, gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulaOptions {
    pub truncation: usize,
    pub threshold: RankThreshold,
    pub eta: EtaOptions,
    /// Residual bound on |lhs − rhs| before rounding.
    pub tolerance: f64,
}

impl Default for FormulaOptions {
    fn default() -> Self {
        Self { truncation: 60, threshold: RankThreshold::windowed(), eta: EtaOptions::default(), tolerance: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFormula {
    pub lhs: i64,
    pub lhs_evidence: BoundaryIndex,
    /// Index of the product-type replacement g′, when g itself is not of product type.
    pub product_index: Option<i64>,
    pub local: f64,
    pub eta: BoundaryEta,
    pub tau: TripleIndex,
    pub rhs: f64,
    pub residual: f64,
}

impl IndexFormula {
    pub fn local_plus_eta(&self) -> f64 {
        self.local + self.eta.total
    }

    /// Distance of the local term plus η̄ to the nearest integer.
    pub fn integrality_residual(&self) -> f64 {
        dist_z(self.local_plus_eta())
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol
            && self.rhs.round() as i64 == self.lhs
            && self.lhs_evidence.converged
            && self.product_index.map_or(true, |p| p == self.lhs)
    }
}

/// Assembles both sides. When g is not of product type, `product` must carry a product-type
/// symbol with the same end values; the right-hand side is built from it and its index is
/// compared with ind T_g.
pub fn index_formula_assemble<R: Rng + ?Sized>(
    bt: &BoundaryToeplitz,
    product: Option<Arc<dyn IntervalSymbol>>,
    opts: &FormulaOptions,
    rng: &mut R,
) -> Result<IndexFormula, TermError> {
    let lhs = term("index", bt.index(opts.truncation, &opts.threshold))?;
    let (rhs_bt, product_index) = match (bt.g.is_product(), product) {
        (true, _) => (None, None),
        (false, None) => {
            return Err(TermError {
                term: "symbol",
                error: Error::InvalidInput("g is not of product type and no product-type replacement was given".into()),
            })
        }
        (false, Some(gp)) => {
            for x in [0.0, 1.0] {
                if linalg::fro_norm(&(&gp.value(x) - &bt.g.value(x))) > 1e-12 {
                    return Err(TermError {
                        term: "symbol",
                        error: Error::InvalidInput(format!("replacement differs from g at x = {x}")),
                    });
                }
            }
            let b = BoundaryToeplitz { model: bt.model.clone(), bc0: bt.bc0.clone(), bc1: bt.bc1.clone(), g: gp };
            let ind = term("product-index", b.index(opts.truncation, &opts.threshold))?;
            (Some(b), Some(ind.index))
        }
    };
    let b = rhs_bt.as_ref().unwrap_or(bt);
    let local = interval_local_term(&b.model.gamma, b.g.as_ref());
    let ends = interval_ends(&b.model, &b.bc0, &b.bc1);
    let eta = term("eta", boundary_eta(&ends, &b.g.value(0.0), &b.g.value(1.0), &opts.eta))?;
    let space = term("tau", boundary_space(&b.model.gamma))?;
    let p = b.boundary_projector();
    let gg = b.boundary_symbol();
    let gp = linalg::symmetrize(&(&(&gg * &p) * gg.adjoint()));
    let calderon = term("tau", calderon_projection(&b.model))?;
    let mk = |m: CMat| term("tau", LagrangianProjector::new(&space, m));
    let tau = term("tau", triple_index(&space, &mk(gp)?, &mk(p)?, &mk(calderon)?, rng))?;
    let rhs = -local - eta.total + tau.value as f64;
    let residual = (lhs.index as f64 - rhs).abs();
    Ok(IndexFormula { lhs: lhs.index, lhs_evidence: lhs, product_index, local, eta, tau, rhs, residual })
}
