//! Exact computation of limiting mixed Hodge structures of simple normal
//! crossing degenerations from strata data.

pub mod exactlin;
pub mod homalg;
pub mod cubical;
pub mod strata;
pub mod limitpage;
pub mod report;

pub use cubical::{IndexSet, Subset};
pub use exactlin::{Matrix, Rational};
pub use homalg::{ChainMap, Complex, FilteredComplex};
pub use limitpage::{analyze, compute_limit, Analysis, LimitMhs};
pub use strata::{validate, Check, StrataDatum, ValidationReport};
