//! Greedy half-hourly self-consumption dispatch.
//!
//! Priority order per step: PV serves load first; surplus charges the battery
//! up to its AC power limit and headroom; remaining surplus exports; deficit
//! discharges the battery up to the same limits; the remainder imports. The
//! one-way efficiency (square root of the round-trip figure) applies on each
//! of charge and discharge, so the state of charge moves by `eta * charge`
//! and `discharge / eta`.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::timeseries::{ProfileSet, Resolution};

use super::spec::EquipmentSpecs;
use super::state::{HouseholdState, UsableCapacities};

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("household dispatch needs {expected} profiles, got {actual}")]
    ResolutionMismatch {
        expected: Resolution,
        actual: Resolution,
    },
}

/// Energy flows of one dispatch step, all in kWh on the AC side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepFlows<S> {
    pub self_consumption: S,
    pub grid_import: S,
    pub grid_export: S,
    pub charge_ac: S,
    pub discharge_ac: S,
    /// State of charge after the step, in kWh stored.
    pub soc: S,
}

/// One dispatch step. `p_step` is the AC energy the battery may move in one
/// step (power limit times step width), `eta` the one-way efficiency and
/// `eta_inv` its reciprocal (hoisted out of the hot loop).
#[inline(always)]
pub(crate) fn dispatch_step<S: Scalar>(
    soc: S,
    generation: S,
    load: S,
    p_step: S,
    eta: S,
    eta_inv: S,
    capacity: S,
) -> StepFlows<S> {
    let self_consumption = generation.min(load);
    let surplus = generation - self_consumption;
    let deficit = load - self_consumption;

    // headroom seen from the AC side
    let headroom_ac = (capacity - soc).max(S::zero()) * eta_inv;
    let charge_ac = surplus.min(p_step).min(headroom_ac);
    let grid_export = surplus - charge_ac;

    let available_ac = soc * eta;
    let discharge_ac = deficit.min(p_step).min(available_ac);
    let grid_import = deficit - discharge_ac;

    let soc = (soc + charge_ac * eta - discharge_ac * eta_inv)
        .max(S::zero())
        .min(capacity);

    StepFlows {
        self_consumption,
        grid_import,
        grid_export,
        charge_ac,
        discharge_ac,
        soc,
    }
}

/// Year totals of the dispatch flows, in kWh.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DispatchTotals<S> {
    pub self_consumption: S,
    pub grid_import: S,
    pub grid_export: S,
    pub charge_ac: S,
    pub discharge_ac: S,
}

/// Per-step series plus year totals for one simulated year.
#[derive(Debug, Clone)]
pub struct DispatchResult<S> {
    pub self_consumption: Vec<S>,
    pub grid_import: Vec<S>,
    pub grid_export: Vec<S>,
    pub battery_charge_ac: Vec<S>,
    pub battery_discharge_ac: Vec<S>,
    /// End-of-step state of charge in kWh.
    pub state_of_charge: Vec<S>,
    pub totals: DispatchTotals<S>,
}

fn run_year<S: Scalar, F: FnMut(usize, &StepFlows<S>)>(
    profile: &ProfileSet<S>,
    caps: &UsableCapacities<S>,
    eta: S,
    mut sink: F,
) -> DispatchTotals<S> {
    let step_hours: S = profile.resolution().step_hours();
    let p_step = caps.battery_kw * step_hours;
    let eta_inv = eta.recip();
    let demand = profile.demand().values();
    let pv_yield = profile.pv_yield().values();
    let mut soc = S::zero(); // each simulated year starts empty
    let mut totals = DispatchTotals::default();
    for (idx, (load, yield_per_kwp)) in demand.iter().zip(pv_yield).enumerate() {
        let generation = caps.pv_kwp * *yield_per_kwp;
        let flows = dispatch_step(
            soc,
            generation,
            *load,
            p_step,
            eta,
            eta_inv,
            caps.battery_kwh,
        );
        soc = flows.soc;
        totals.self_consumption = totals.self_consumption + flows.self_consumption;
        totals.grid_import = totals.grid_import + flows.grid_import;
        totals.grid_export = totals.grid_export + flows.grid_export;
        totals.charge_ac = totals.charge_ac + flows.charge_ac;
        totals.discharge_ac = totals.discharge_ac + flows.discharge_ac;
        sink(idx, &flows);
    }
    totals
}

/// Totals for a battery-less year: no cross-step coupling, so the whole year
/// reduces elementwise (and vectorises).
fn run_year_no_battery<S: Scalar>(profile: &ProfileSet<S>, pv_kwp: S) -> DispatchTotals<S> {
    let demand = profile.demand().values();
    let pv_yield = profile.pv_yield().values();
    let mut totals = DispatchTotals::default();
    for (load, yield_per_kwp) in demand.iter().zip(pv_yield) {
        let generation = pv_kwp * *yield_per_kwp;
        let self_consumption = generation.min(*load);
        totals.self_consumption = totals.self_consumption + self_consumption;
        totals.grid_export = totals.grid_export + (generation - self_consumption);
        totals.grid_import = totals.grid_import + (*load - self_consumption);
    }
    totals
}

/// Simulate one year of self-consumption dispatch, recording per-step series.
pub fn simulate_dispatch<S: Scalar>(
    profile: &ProfileSet<S>,
    state: &HouseholdState<S>,
    specs: &EquipmentSpecs<S>,
    year: i32,
) -> Result<DispatchResult<S>, DispatchError> {
    if profile.resolution() != Resolution::HalfHourly {
        return Err(DispatchError::ResolutionMismatch {
            expected: Resolution::HalfHourly,
            actual: profile.resolution(),
        });
    }
    let caps = state.usable(year, &specs.pv, &specs.battery);
    let n = profile.demand().len();
    let mut result = DispatchResult {
        self_consumption: Vec::with_capacity(n),
        grid_import: Vec::with_capacity(n),
        grid_export: Vec::with_capacity(n),
        battery_charge_ac: Vec::with_capacity(n),
        battery_discharge_ac: Vec::with_capacity(n),
        state_of_charge: Vec::with_capacity(n),
        totals: DispatchTotals::default(),
    };
    let totals = run_year(
        profile,
        &caps,
        specs.battery.one_way_efficiency(),
        |_, flows| {
            result.self_consumption.push(flows.self_consumption);
            result.grid_import.push(flows.grid_import);
            result.grid_export.push(flows.grid_export);
            result.battery_charge_ac.push(flows.charge_ac);
            result.battery_discharge_ac.push(flows.discharge_ac);
            result.state_of_charge.push(flows.soc);
        },
    );
    result.totals = totals;
    Ok(result)
}

/// Totals-only dispatch for the appraisal hot path; identical arithmetic to
/// [`simulate_dispatch`] without recording the series.
pub(crate) fn dispatch_totals<S: Scalar>(
    profile: &ProfileSet<S>,
    state: &HouseholdState<S>,
    specs: &EquipmentSpecs<S>,
    year: i32,
) -> DispatchTotals<S> {
    let caps = state.usable(year, &specs.pv, &specs.battery);
    if caps.battery_kwh.is_zero() {
        return run_year_no_battery(profile, caps.pv_kwp);
    }
    run_year(
        profile,
        &caps,
        specs.battery.one_way_efficiency(),
        |_, _| {},
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::real;
    use crate::timeseries::{TimeSeries, Unit};

    const ETA: f64 = 0.959166; // sqrt(0.92), as quoted in the examples

    #[test]
    fn step_charges_to_power_limit_then_exports() {
        // PV 2.0 kWh, load 0.5 kWh, 6 kWh battery at SoC 3.0, 2.4 kW AC
        let eta = 0.92f64.sqrt();
        let flows = dispatch_step(3.0, 2.0, 0.5, 1.2, eta, eta.recip(), 6.0);
        assert_eq!(flows.self_consumption, 0.5);
        assert_eq!(flows.charge_ac, 1.2);
        assert!((flows.soc - 4.1510).abs() < 1e-4);
        assert!((flows.soc - (3.0 + 1.2 * ETA)).abs() < 1e-6);
        assert!((flows.grid_export - 0.3).abs() < 1e-12);
        assert_eq!(flows.grid_import, 0.0);
    }

    #[test]
    fn step_discharges_available_energy_then_imports() {
        // PV 0, load 1.0 kWh, SoC 0.2 kWh
        let eta = 0.92f64.sqrt();
        let flows = dispatch_step(0.2, 0.0, 1.0, 1.2, eta, eta.recip(), 6.0);
        assert!((flows.discharge_ac - 0.19183).abs() < 1e-5);
        assert!((flows.grid_import - 0.80817).abs() < 1e-5);
        assert!(flows.soc.abs() < 1e-15);
    }

    #[test]
    fn step_balances_are_exact() {
        let cases = [
            (3.0, 2.0, 0.5, 1.2, 6.0),
            (0.2, 0.0, 1.0, 1.2, 6.0),
            (5.9, 3.0, 0.1, 1.2, 6.0),
            (0.0, 0.0, 0.0, 1.2, 6.0),
        ];
        let eta = 0.92f64.sqrt();
        for (soc, gen, load, p, cap) in cases {
            let f = dispatch_step(soc, gen, load, p, eta, eta.recip(), cap);
            assert!((gen - (f.self_consumption + f.charge_ac + f.grid_export)).abs() < 1e-12);
            assert!((load - (f.self_consumption + f.discharge_ac + f.grid_import)).abs() < 1e-12);
        }
    }

    fn flat_profile(demand: f64, pv_yield: f64) -> ProfileSet<f64> {
        let demand = TimeSeries::new(
            2019,
            Resolution::HalfHourly,
            Unit::KilowattHoursPerStep,
            vec![demand; 17_520],
        )
        .unwrap();
        let pv = TimeSeries::new(
            2019,
            Resolution::HalfHourly,
            Unit::KilowattHoursPerStep,
            vec![pv_yield; 17_520],
        )
        .unwrap();
        ProfileSet::new("test".into(), demand, pv).unwrap()
    }

    #[test]
    fn no_equipment_passes_demand_through() {
        let profile = flat_profile(0.7, 0.2);
        let state = HouseholdState::<f64>::new();
        let specs = EquipmentSpecs::default();
        let result = simulate_dispatch(&profile, &state, &specs, 2019).unwrap();
        for (imp, load) in result.grid_import.iter().zip(profile.demand().values()) {
            assert_eq!(imp, load); // bit-exact pass-through
        }
        assert!(result.grid_export.iter().all(|v| *v == 0.0));
        assert!(result.battery_charge_ac.iter().all(|v| *v == 0.0));
        assert!(result.state_of_charge.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn no_battery_fast_path_is_bit_identical() {
        let profile = flat_profile(0.4, 0.3);
        let mut state = HouseholdState::new();
        state.add_pv(2019, 3.5);
        let specs = EquipmentSpecs::<f64>::default();
        let quick = dispatch_totals(&profile, &state, &specs, 2020);
        let caps = state.usable(2020, &specs.pv, &specs.battery);
        let slow = run_year(
            &profile,
            &caps,
            specs.battery.one_way_efficiency(),
            |_, _| {},
        );
        assert_eq!(quick, slow);
    }

    #[test]
    fn totals_path_matches_recorded_path() {
        let mut demand = vec![0.0; 17_520];
        let mut pv = vec![0.0; 17_520];
        let mut x = 42u64;
        for i in 0..17_520 {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            demand[i] = ((x >> 40) as f64) / (1u64 << 24) as f64;
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            pv[i] = ((x >> 40) as f64) / (1u64 << 24) as f64 * 0.4;
        }
        let profile = ProfileSet::new(
            "t".into(),
            TimeSeries::new(
                2019,
                Resolution::HalfHourly,
                Unit::KilowattHoursPerStep,
                demand,
            )
            .unwrap(),
            TimeSeries::new(2019, Resolution::HalfHourly, Unit::KilowattHoursPerStep, pv).unwrap(),
        )
        .unwrap();
        let mut state = HouseholdState::new();
        state.add_pv(2019, 4.0);
        state.add_battery(2019, 8.0);
        let specs = EquipmentSpecs::default();
        let full = simulate_dispatch(&profile, &state, &specs, 2021).unwrap();
        let quick = dispatch_totals(&profile, &state, &specs, 2021);
        assert_eq!(full.totals, quick);
    }

    #[test]
    fn greedy_only_exports_when_battery_cannot_take_more() {
        let profile = flat_profile(0.1, 0.3);
        let mut state = HouseholdState::new();
        state.add_pv(2019, 3.0);
        state.add_battery(2019, 4.0);
        let specs = EquipmentSpecs::<f64>::default();
        let result = simulate_dispatch(&profile, &state, &specs, 2019).unwrap();
        let p_step = state.usable(2019, &specs.pv, &specs.battery).battery_kw * 0.5;
        let cap = state.usable(2019, &specs.pv, &specs.battery).battery_kwh;
        for i in 0..result.grid_export.len() {
            if result.grid_export[i] > 1e-12 {
                let full = (result.state_of_charge[i] - cap).abs() < 1e-9;
                let at_limit = (result.battery_charge_ac[i] - p_step).abs() < 1e-9;
                assert!(full || at_limit, "step {i} exports with battery slack");
            }
        }
    }

    #[test]
    fn roundtrip_losses_match_when_soc_returns_to_zero() {
        // demand exceeds PV late in the day, so every year ends drained
        let mut demand = vec![0.0; 17_520];
        let mut pv = vec![0.0; 17_520];
        for day in 0..365 {
            for step in 0..48 {
                let idx = day * 48 + step;
                pv[idx] = if (16..32).contains(&step) { 0.35 } else { 0.0 };
                demand[idx] = if (34..46).contains(&step) { 0.9 } else { 0.05 };
            }
        }
        let profile = ProfileSet::new(
            "t".into(),
            TimeSeries::new(
                2019,
                Resolution::HalfHourly,
                Unit::KilowattHoursPerStep,
                demand,
            )
            .unwrap(),
            TimeSeries::new(2019, Resolution::HalfHourly, Unit::KilowattHoursPerStep, pv).unwrap(),
        )
        .unwrap();
        let mut state = HouseholdState::new();
        state.add_pv(2019, 2.0);
        state.add_battery(2019, 5.0);
        let specs = EquipmentSpecs::<f64>::default();
        let result = simulate_dispatch(&profile, &state, &specs, 2019).unwrap();
        let final_soc = *result.state_of_charge.last().unwrap();
        assert!(final_soc.abs() < 1e-9, "final SoC {final_soc}");
        let ratio = result.totals.discharge_ac / result.totals.charge_ac;
        assert!(
            (ratio - 0.92).abs() <= 1e-6 * 0.92,
            "round-trip ratio {ratio}"
        );
    }

    #[test]
    fn soc_stays_within_bounds() {
        let profile = flat_profile(0.4, 0.5);
        let mut state = HouseholdState::new();
        state.add_pv(2019, 5.0);
        state.add_battery(2019, 6.0);
        let specs = EquipmentSpecs::<f64>::default();
        let caps = state.usable(2019, &specs.pv, &specs.battery);
        let result = simulate_dispatch(&profile, &state, &specs, 2019).unwrap();
        for soc in &result.state_of_charge {
            assert!(*soc >= 0.0 && *soc <= caps.battery_kwh + 1e-12);
        }
    }

    #[test]
    fn rejects_hourly_profiles() {
        let hourly = TimeSeries::<f64>::new(
            2019,
            Resolution::Hourly,
            Unit::KilowattHoursPerStep,
            vec![real::<f64>(0.5); 8_760],
        )
        .unwrap();
        let profile = ProfileSet::new("t".into(), hourly.clone(), hourly).unwrap();
        let err = simulate_dispatch(
            &profile,
            &HouseholdState::new(),
            &EquipmentSpecs::default(),
            2019,
        );
        assert!(matches!(err, Err(DispatchError::ResolutionMismatch { .. })));
    }
}
