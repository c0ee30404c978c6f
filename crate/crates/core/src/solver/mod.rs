//! LP solver backends behind one interface: primal values, dual values of
//! every row and a status. The bundled dense simplex covers test-size
//! instances exactly; full-year instances go to the Clarabel interior-point
//! backend.

mod clarabel_backend;
mod simplex;

pub use clarabel_backend::ClarabelBackend;
pub use simplex::DenseSimplex;

use thiserror::Error;

use crate::lp::LinearProgram;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("problem is infeasible; first violated row class: {row_class}")]
    Infeasible { row_class: String },
    #[error("problem is unbounded")]
    Unbounded,
    #[error("solver failed numerically: {0}")]
    Numerical(String),
    #[error("instance with {variables} variables exceeds the {backend} limit of {limit}")]
    TooLarge {
        backend: &'static str,
        variables: usize,
        limit: usize,
    },
}

/// Optimal primal/dual pair for a [`LinearProgram`].
///
/// Dual sign convention: the dual objective is
/// `sum(b_eq * eq_duals) + sum(b_ub * ub_duals)` and equals the primal
/// objective at optimality; upper-bound duals are non-positive in this
/// minimisation form, equality duals are free. The dual of an hourly balance
/// row read through this convention is directly the wholesale price.
#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub eq_duals: Vec<S>,
    pub ub_duals: Vec<S>,
    pub objective: S,
}

impl<S: Scalar> LpSolution<S> {
    /// `b'y` over all rows, for strong-duality checks.
    pub fn dual_objective(&self, lp: &LinearProgram<S>) -> S {
        let eq: S = lp
            .eq_rows
            .iter()
            .zip(&self.eq_duals)
            .map(|(row, dual)| row.rhs * *dual)
            .sum();
        let ub: S = lp
            .ub_rows
            .iter()
            .zip(&self.ub_duals)
            .map(|(row, dual)| row.rhs * *dual)
            .sum();
        eq + ub
    }
}

/// A backend that can solve the pipeline's LPs at `f64` precision.
pub trait LpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, lp: &LinearProgram<f64>) -> Result<LpSolution<f64>, SolveError>;
}

/// Backend selection as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendChoice {
    /// Dense simplex for small instances, Clarabel otherwise.
    #[default]
    Auto,
    Simplex,
    Clarabel,
}

impl BackendChoice {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "auto" => Some(BackendChoice::Auto),
            "simplex" => Some(BackendChoice::Simplex),
            "clarabel" => Some(BackendChoice::Clarabel),
            _ => None,
        }
    }

    /// Pick the backend for an instance of the given size.
    pub fn backend_for(&self, n_vars: usize) -> Box<dyn LpBackend> {
        match self {
            BackendChoice::Simplex => Box::new(DenseSimplex::default()),
            BackendChoice::Clarabel => Box::new(ClarabelBackend::default()),
            BackendChoice::Auto => {
                if n_vars <= DenseSimplex::COMFORTABLE_LIMIT {
                    Box::new(DenseSimplex::default())
                } else {
                    Box::new(ClarabelBackend::default())
                }
            }
        }
    }
}

impl std::fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            BackendChoice::Auto => "auto",
            BackendChoice::Simplex => "simplex",
            BackendChoice::Clarabel => "clarabel",
        };
        f.write_str(name)
    }
}
