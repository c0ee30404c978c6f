//! Household PV-battery investment simulation: half-hourly self-consumption
//! dispatch, bill computation, NPV/DPP appraisal over an exhaustive
//! configuration grid and the sequential annual investment loop.

mod dispatch;
mod invest;
mod run;
mod spec;
mod state;

pub use dispatch::{simulate_dispatch, DispatchError, DispatchResult, DispatchTotals};
pub use invest::{
    annual_bill, dpp_of_configuration, evaluate_grid, invest_decision, npv_of_configuration,
    CandidateEvaluation, InvestmentDecision,
};
pub use run::{run_household, HouseholdRun};
pub use spec::{
    BatterySpec, CostCurves, EconomicContext, EquipmentSpecs, EvaluationGrid, PvSpec, SpecError,
    TariffSchedule,
};
pub use state::{HouseholdState, UsableCapacities, Vintage};
