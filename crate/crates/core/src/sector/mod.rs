//! Least-cost utility-scale dispatch and investment: the full-year linear
//! program over dispatchable, variable-renewable and storage technologies,
//! its solution mapping, and the independent solution validator.

mod catalog;
mod model;

pub use catalog::{
    default_catalog, parse_catalog, parse_catalog_from_reader, write_catalog, CatalogEntry,
    SectorError, TechKind, Technology,
};
pub use model::{
    build_lp, run_endogenous, solve_scenario, validate_solution, ResShare, SectorScenario,
    SectorSolution, TechnologyResult, ValidationReport, Violation,
};

/// Constant yearly payment equivalent of an overnight capital cost.
pub fn annuitize<S: crate::scalar::Scalar>(overnight: S, lifetime_years: S, rate: S) -> S {
    crate::finance::annuity(overnight, lifetime_years, rate)
}
