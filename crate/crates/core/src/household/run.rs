//! The sequential annual investment loop for one household and the final-year
//! series handed to fleet aggregation.

use std::ops::RangeInclusive;

use crate::scalar::Scalar;
use crate::timeseries::{ProfileSet, TimeSeries};

use super::dispatch::{simulate_dispatch, DispatchError};
use super::invest::{invest_decision, InvestmentDecision};
use super::spec::{EconomicContext, EquipmentSpecs, EvaluationGrid};
use super::state::HouseholdState;

/// Outcome of the investment loop for a single household.
#[derive(Debug, Clone)]
pub struct HouseholdRun<S> {
    pub household_id: String,
    pub final_state: HouseholdState<S>,
    pub decisions: Vec<InvestmentDecision<S>>,
    /// Final-year net grid utilisation, import minus export (kWh/step, signed).
    pub net_grid: TimeSeries<S>,
    /// Final-year grid imports alone (kWh/step).
    pub grid_import: TimeSeries<S>,
    /// Final-year PV generation from the installed, degraded systems.
    pub pv_generation: TimeSeries<S>,
    /// Underlying demand, unchanged from the profile.
    pub demand: TimeSeries<S>,
}

/// Run the yearly loop: degrade and retire vintages, appraise the grid, apply
/// the chosen addition, repeat; then record the final-year net-grid series.
pub fn run_household<S: Scalar>(
    profile: &ProfileSet<S>,
    econ: &EconomicContext<S>,
    specs: &EquipmentSpecs<S>,
    grid: &EvaluationGrid<S>,
    years: RangeInclusive<i32>,
) -> Result<HouseholdRun<S>, DispatchError> {
    let mut state = HouseholdState::new();
    let mut decisions = Vec::new();
    for year in years.clone() {
        if let Some(decision) = invest_decision(profile, &state, econ, specs, grid, year) {
            state.add_pv(year, decision.added_pv_kwp);
            state.add_battery(year, decision.added_battery_kwh);
            decisions.push(decision);
        }
    }

    let final_year = *years.end();
    let dispatch = simulate_dispatch(profile, &state, specs, final_year)?;
    let net: Vec<S> = dispatch
        .grid_import
        .iter()
        .zip(&dispatch.grid_export)
        .map(|(imp, exp)| *imp - *exp)
        .collect();
    let usable_pv = state.usable_pv_kwp(final_year, &specs.pv);
    let generation: Vec<S> = profile
        .pv_yield()
        .values()
        .iter()
        .map(|y| usable_pv * *y)
        .collect();

    let net_grid = profile
        .demand()
        .with_values(net)
        .expect("net series has profile length");
    let grid_import = profile
        .demand()
        .with_values(dispatch.grid_import.clone())
        .expect("import series has profile length");
    let pv_generation = profile
        .demand()
        .with_values(generation)
        .expect("generation series has profile length");

    Ok(HouseholdRun {
        household_id: profile.household_id().to_string(),
        final_state: state,
        decisions,
        net_grid,
        grid_import,
        pv_generation,
        demand: profile.demand().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::household::spec::{CostCurves, TariffSchedule};
    use crate::timeseries::{Resolution, Unit};

    fn daily_profile() -> ProfileSet<f64> {
        let mut demand = vec![0.0; 17_520];
        let mut pv = vec![0.0; 17_520];
        for day in 0..365 {
            for step in 0..48 {
                let idx = day * 48 + step;
                pv[idx] = if (16..32).contains(&step) { 0.28 } else { 0.0 };
                demand[idx] = if (34..44).contains(&step) { 0.8 } else { 0.15 };
            }
        }
        ProfileSet::new(
            "hh".into(),
            TimeSeries::new(
                2019,
                Resolution::HalfHourly,
                Unit::KilowattHoursPerStep,
                demand,
            )
            .unwrap(),
            TimeSeries::new(2019, Resolution::HalfHourly, Unit::KilowattHoursPerStep, pv).unwrap(),
        )
        .unwrap()
    }

    fn econ(fit: f64, pv_cost: f64, battery_cost: f64) -> EconomicContext<f64> {
        EconomicContext {
            discount_rate: 0.05,
            horizon_years: 10,
            dpp_threshold_years: 5.0,
            tariff: TariffSchedule::with_fit_fraction(fit),
            costs: CostCurves::from_raw(2019, &[pv_cost; 25], &[battery_cost; 25], 1.0, 1.0)
                .unwrap(),
        }
    }

    #[test]
    fn prohibitive_costs_leave_demand_untouched() {
        let profile = daily_profile();
        let e = econ(0.25, 129_200.0, 117_200.0); // x100 costs
        let run = run_household(
            &profile,
            &e,
            &EquipmentSpecs::default(),
            &EvaluationGrid::default(),
            2019..=2030,
        )
        .unwrap();
        assert!(run.decisions.is_empty());
        assert_eq!(run.net_grid.values(), profile.demand().values());
        assert!(run.pv_generation.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cheap_pv_triggers_investment_and_reduces_net_grid() {
        let profile = daily_profile();
        let e = econ(0.5, 900.0, 1_172.0);
        let run = run_household(
            &profile,
            &e,
            &EquipmentSpecs::default(),
            &EvaluationGrid::default(),
            2019..=2030,
        )
        .unwrap();
        assert!(!run.decisions.is_empty());
        let total_net = run.net_grid.annual_sum();
        let total_demand = profile.demand().annual_sum();
        assert!(total_net < total_demand);
        // capacity growth is monotone and stays within the grid maxima
        let pv_total: f64 = run
            .final_state
            .pv_vintages()
            .iter()
            .map(|v| v.nominal)
            .sum();
        assert!(pv_total <= 10.0 + 1e-9);
    }

    #[test]
    fn decisions_lie_on_the_grid() {
        let profile = daily_profile();
        let e = econ(0.0, 900.0, 400.0);
        let run = run_household(
            &profile,
            &e,
            &EquipmentSpecs::default(),
            &EvaluationGrid::default(),
            2019..=2030,
        )
        .unwrap();
        for d in &run.decisions {
            let pv_steps = d.added_pv_kwp / 0.5;
            let bat_steps = d.added_battery_kwh / 1.0;
            assert!((pv_steps - pv_steps.round()).abs() < 1e-9);
            assert!((bat_steps - bat_steps.round()).abs() < 1e-9);
            assert!(d.npv > 0.0);
        }
    }
}
