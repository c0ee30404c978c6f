//! Scenario engine coupling a household PV-battery investment simulation to a
//! full-year least-cost power-sector dispatch-and-investment linear program.
//!
//! The pipeline has three stages:
//!
//! 1. [`household`] simulates economically rational PV-battery adoption for a
//!    cohort of individually metered households under retail-price and
//!    feed-in-tariff trajectories (half-hourly self-consumption dispatch,
//!    NPV/DPP appraisal over an exhaustive configuration grid, sequential
//!    annual investment 2019-2030).
//! 2. [`fleet`] normalises the cohort into a representative household, scales
//!    it to an assumed fleet size and subtracts the resulting net grid
//!    utilisation from network demand, producing the hourly residual demand.
//! 3. [`sector`] builds and solves the least-cost capacity-expansion and
//!    dispatch LP against that residual demand and exposes primal capacities,
//!    hourly dispatch and the duals of the energy balance (wholesale prices).
//!
//! [`analytics`] post-processes solved scenarios (deltas vs. reference,
//! residual load duration curves, segment-weighted prices, CO2, system cost)
//! and [`runner`] orchestrates the scenario matrix from a config file.
//!
//! Numeric kernels are generic over [`scalar::Scalar`]; the pipeline itself
//! runs on [`Real`] (`f64`).

pub mod analytics;
pub mod finance;
pub mod fleet;
pub mod household;
pub mod lp;
pub mod runner;
pub mod scalar;
pub mod sector;
pub mod solver;
pub mod synth;
pub mod timeseries;

/// Scalar type used by the concrete pipeline.
pub type Real = f64;

/// Full-year series as handled by the pipeline.
pub type Series = timeseries::TimeSeries<Real>;
