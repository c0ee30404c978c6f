//! Scenario orchestration: config parsing, input loading, the pipeline
//! stages, the FiT x RES matrix with sensitivity sweeps, and the bundled
//! verification suite.

mod config;
mod oracles;
mod outputs;
mod pipeline;
mod verify;

pub use config::{ConfigError, ResShareChoice, RunConfig};
pub use oracles::{
    brute_force_capacity_search, decisions_match, oracle_invest_decision, oracle_npv_dpp,
    oracle_year_totals, BruteForceTech, OracleDecision,
};
pub use outputs::{digest_file, digest_tree, fnv1a, write_atomic, Csv, OutputLayout};
pub use pipeline::{
    fleet_capacities, fleet_investments, household_stage, load_inputs, plan_matrix,
    reference_residual, residual_stage, run_matrix, sector_stage, write_household_outputs,
    write_residual_outputs, write_sector_outputs, Cell, CellKind, CellOutcome, HouseholdStage,
    MatrixPlan, MatrixReport, RunInputs, RunnerError, SectorStage,
};
pub use verify::{
    forty_eight_hour_instance, synthetic_run_config, verify, Check, TempDir, VerifyReport,
};
