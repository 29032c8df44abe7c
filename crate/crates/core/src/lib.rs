pub mod checks;
pub mod chern;
pub mod circle;
pub mod error;
pub mod eta;
pub mod flow;
pub mod formula;
pub mod interval;
pub mod linalg;
pub mod maslov;
pub mod par;
pub mod report;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
