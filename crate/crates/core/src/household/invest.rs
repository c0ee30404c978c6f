//! Bill computation and the yearly investment appraisal: every PV-battery
//! addition on the evaluation grid is simulated over the financial horizon,
//! compared by NPV and gated on a discounted-payback real-options test.

use rayon::prelude::*;

use crate::finance::{discounted_payback, net_present_value, Payback};
use crate::scalar::{real, Scalar};
use crate::timeseries::ProfileSet;

use super::dispatch::{dispatch_totals, DispatchTotals};
use super::spec::{EconomicContext, EquipmentSpecs, EvaluationGrid, TariffSchedule};
use super::state::HouseholdState;

/// Yearly electricity bill in AUD: volumetric import charges minus feed-in
/// revenue plus fixed charges. Households whose installed PV exceeds the
/// eligibility cap forfeit all export revenue, not just the share above it.
pub fn annual_bill<S: Scalar>(
    totals: &DispatchTotals<S>,
    tariff: &TariffSchedule<S>,
    state: &HouseholdState<S>,
    specs: &EquipmentSpecs<S>,
    year: i32,
) -> S {
    let rate = tariff.volumetric_rate(year);
    let eligible = state.nominal_pv_kwp(year, &specs.pv) <= tariff.fit_eligibility_cap_kwp;
    let export_revenue = if eligible {
        tariff.fit_rate(year) * totals.grid_export
    } else {
        S::zero()
    };
    rate * totals.grid_import - export_revenue + tariff.fixed_annual_charge()
}

/// Bills for `year+1 ..= year+horizon`, re-simulating dispatch each year with
/// escalated tariffs and degraded (and eventually retired) capacities.
fn horizon_bills<S: Scalar>(
    profile: &ProfileSet<S>,
    state: &HouseholdState<S>,
    econ: &EconomicContext<S>,
    specs: &EquipmentSpecs<S>,
    year: i32,
) -> Vec<S> {
    (1..=econ.horizon_years)
        .map(|k| {
            let y = year + k as i32;
            let totals = dispatch_totals(profile, state, specs, y);
            annual_bill(&totals, &econ.tariff, state, specs, y)
        })
        .collect()
}

fn capex<S: Scalar>(econ: &EconomicContext<S>, year: i32, pv_kwp: S, battery_kwh: S) -> S {
    econ.costs.pv_cost(year) * pv_kwp + econ.costs.battery_cost(year) * battery_kwh
}

fn savings<S: Scalar>(base_bills: &[S], candidate_bills: &[S]) -> Vec<S> {
    base_bills
        .iter()
        .zip(candidate_bills)
        .map(|(base, cand)| *base - *cand)
        .collect()
}

/// NPV of adding `(pv_kwp, battery_kwh)` in `year`: the capital outlay
/// against discounted bill savings over the horizon. The zero addition has
/// NPV exactly zero.
pub fn npv_of_configuration<S: Scalar>(
    profile: &ProfileSet<S>,
    state: &HouseholdState<S>,
    candidate: (S, S),
    econ: &EconomicContext<S>,
    specs: &EquipmentSpecs<S>,
    year: i32,
) -> S {
    let (pv_kwp, battery_kwh) = candidate;
    let base = horizon_bills(profile, state, econ, specs, year);
    let with = state.with_addition(year, pv_kwp, battery_kwh);
    let cand = horizon_bills(profile, &with, econ, specs, year);
    net_present_value(
        capex(econ, year, pv_kwp, battery_kwh),
        &savings(&base, &cand),
        econ.discount_rate,
    )
}

/// Discounted payback period of a candidate, from the same cashflows as
/// [`npv_of_configuration`].
pub fn dpp_of_configuration<S: Scalar>(
    profile: &ProfileSet<S>,
    state: &HouseholdState<S>,
    candidate: (S, S),
    econ: &EconomicContext<S>,
    specs: &EquipmentSpecs<S>,
    year: i32,
) -> Payback<S> {
    let (pv_kwp, battery_kwh) = candidate;
    let base = horizon_bills(profile, state, econ, specs, year);
    let with = state.with_addition(year, pv_kwp, battery_kwh);
    let cand = horizon_bills(profile, &with, econ, specs, year);
    discounted_payback(
        capex(econ, year, pv_kwp, battery_kwh),
        &savings(&base, &cand),
        econ.discount_rate,
    )
}

/// One appraised grid point.
#[derive(Debug, Clone, Copy)]
pub struct CandidateEvaluation<S> {
    pub added_pv_kwp: S,
    pub added_battery_kwh: S,
    pub capex: S,
    pub npv: S,
    pub dpp: Payback<S>,
}

/// The chosen investment for one year.
#[derive(Debug, Clone, Copy)]
pub struct InvestmentDecision<S> {
    pub year: i32,
    pub added_pv_kwp: S,
    pub added_battery_kwh: S,
    pub npv: S,
    pub dpp: Payback<S>,
}

/// Appraise every feasible addition on the grid, including the zero point.
/// Feasible means cumulative installed (non-retired) capacity stays within
/// the grid maxima.
pub fn evaluate_grid<S: Scalar>(
    profile: &ProfileSet<S>,
    state: &HouseholdState<S>,
    econ: &EconomicContext<S>,
    specs: &EquipmentSpecs<S>,
    grid: &EvaluationGrid<S>,
    year: i32,
) -> Vec<CandidateEvaluation<S>> {
    let base_bills = horizon_bills(profile, state, econ, specs, year);

    let eps = real::<S>(1e-9);
    let pv_room = grid.pv_max_kwp - state.nominal_pv_kwp(year, &specs.pv);
    let battery_room = grid.battery_max_kwh - state.nominal_battery_kwh(year, &specs.battery);
    let pv_steps = ((pv_room + eps) / grid.pv_step_kwp)
        .floor()
        .to_f64()
        .unwrap_or(0.0)
        .max(0.0) as usize;
    let battery_steps = ((battery_room + eps) / grid.battery_step_kwh)
        .floor()
        .to_f64()
        .unwrap_or(0.0)
        .max(0.0) as usize;

    let mut points = Vec::with_capacity((pv_steps + 1) * (battery_steps + 1));
    for i in 0..=pv_steps {
        for j in 0..=battery_steps {
            points.push((
                grid.pv_step_kwp * real::<S>(i as f64),
                grid.battery_step_kwh * real::<S>(j as f64),
            ));
        }
    }
    points
        .par_iter()
        .map(|&(pv_kwp, battery_kwh)| {
            let outlay = capex(econ, year, pv_kwp, battery_kwh);
            let (npv, dpp) = if pv_kwp.is_zero() && battery_kwh.is_zero() {
                (S::zero(), Payback::Years(S::zero()))
            } else {
                let with = state.with_addition(year, pv_kwp, battery_kwh);
                let cand_bills = horizon_bills(profile, &with, econ, specs, year);
                let flows = savings(&base_bills, &cand_bills);
                (
                    net_present_value(outlay, &flows, econ.discount_rate),
                    discounted_payback(outlay, &flows, econ.discount_rate),
                )
            };
            CandidateEvaluation {
                added_pv_kwp: pv_kwp,
                added_battery_kwh: battery_kwh,
                capex: outlay,
                npv,
                dpp,
            }
        })
        .collect()
}

/// True when `a` beats `b`: higher NPV, ties broken by smaller capex, then
/// smaller battery.
pub(crate) fn better_candidate<S: Scalar>(
    a: &CandidateEvaluation<S>,
    b: &CandidateEvaluation<S>,
) -> bool {
    if a.npv != b.npv {
        return a.npv > b.npv;
    }
    if a.capex != b.capex {
        return a.capex < b.capex;
    }
    a.added_battery_kwh < b.added_battery_kwh
}

/// The yearly investment decision: the argmax-NPV candidate, returned only if
/// its NPV is positive and at least one actual investment opportunity on the
/// grid pays back within the DPP threshold.
pub fn invest_decision<S: Scalar>(
    profile: &ProfileSet<S>,
    state: &HouseholdState<S>,
    econ: &EconomicContext<S>,
    specs: &EquipmentSpecs<S>,
    grid: &EvaluationGrid<S>,
    year: i32,
) -> Option<InvestmentDecision<S>> {
    let evaluations = evaluate_grid(profile, state, econ, specs, grid, year);
    decide(&evaluations, econ, year)
}

/// Selection and gating given the appraised grid.
pub(crate) fn decide<S: Scalar>(
    evaluations: &[CandidateEvaluation<S>],
    econ: &EconomicContext<S>,
    year: i32,
) -> Option<InvestmentDecision<S>> {
    let best =
        evaluations
            .iter()
            .fold(None::<&CandidateEvaluation<S>>, |best, cand| match best {
                Some(current) if !better_candidate(cand, current) => Some(current),
                _ => Some(cand),
            })?;
    if !(best.npv > S::zero()) {
        return None;
    }
    // real-options gate: some genuine (non-zero) opportunity must pay back fast
    let gate = evaluations
        .iter()
        .any(|c| c.capex > S::zero() && c.dpp.within(econ.dpp_threshold_years));
    if !gate {
        return None;
    }
    Some(InvestmentDecision {
        year,
        added_pv_kwp: best.added_pv_kwp,
        added_battery_kwh: best.added_battery_kwh,
        npv: best.npv,
        dpp: best.dpp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::household::spec::CostCurves;
    use crate::timeseries::{Resolution, TimeSeries, Unit};

    fn profile(demand: Vec<f64>, pv: Vec<f64>) -> ProfileSet<f64> {
        ProfileSet::new(
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
        .unwrap()
    }

    fn econ(fit_fraction: f64, pv_cost: f64, battery_cost: f64) -> EconomicContext<f64> {
        EconomicContext {
            discount_rate: 0.05,
            horizon_years: 10,
            dpp_threshold_years: 5.0,
            tariff: TariffSchedule::with_fit_fraction(fit_fraction),
            costs: CostCurves::from_raw(2019, &[pv_cost; 22], &[battery_cost; 22], 1.0, 1.0)
                .unwrap(),
        }
    }

    #[test]
    fn bill_arithmetic_matches_tariff_table() {
        // import 4,000 kWh, export 2,000 kWh, 5.0 kWp installed, 2019, FiT 25%
        let totals = DispatchTotals::<f64> {
            self_consumption: 0.0,
            grid_import: 4_000.0,
            grid_export: 2_000.0,
            charge_ac: 0.0,
            discharge_ac: 0.0,
        };
        let tariff = TariffSchedule::with_fit_fraction(0.25);
        let specs = EquipmentSpecs::default();
        let mut state = HouseholdState::new();
        state.add_pv(2019, 5.0);
        let bill = annual_bill(&totals, &tariff, &state, &specs, 2019);
        let fixed = tariff.fixed_annual_charge();
        assert!((bill - (1_160.0 - 145.0 + fixed)).abs() < 1e-9);
    }

    #[test]
    fn oversized_pv_forfeits_all_export_revenue() {
        let totals = DispatchTotals::<f64> {
            self_consumption: 0.0,
            grid_import: 4_000.0,
            grid_export: 2_000.0,
            charge_ac: 0.0,
            discharge_ac: 0.0,
        };
        let tariff = TariffSchedule::with_fit_fraction(0.25);
        let specs = EquipmentSpecs::default();
        let mut state = HouseholdState::new();
        state.add_pv(2019, 5.5);
        let bill = annual_bill(&totals, &tariff, &state, &specs, 2019);
        let fixed = tariff.fixed_annual_charge();
        assert!((bill - (1_160.0 + fixed)).abs() < 1e-9);
    }

    #[test]
    fn zero_flows_leave_fixed_charges_only() {
        let totals = DispatchTotals::<f64>::default();
        let tariff = TariffSchedule::with_fit_fraction(0.5);
        let bill = annual_bill(
            &totals,
            &tariff,
            &HouseholdState::new(),
            &EquipmentSpecs::default(),
            2024,
        );
        assert_eq!(bill, tariff.fixed_annual_charge());
    }

    #[test]
    fn zero_addition_has_exactly_zero_npv() {
        let p = profile(vec![0.3; 17_520], vec![0.1; 17_520]);
        let e = econ(0.25, 1_292.0, 1_172.0);
        let npv = npv_of_configuration(
            &p,
            &HouseholdState::new(),
            (0.0, 0.0),
            &e,
            &EquipmentSpecs::default(),
            2019,
        );
        assert_eq!(npv, 0.0);
    }

    #[test]
    fn grid_has_399_points_from_empty_state() {
        let p = profile(vec![0.0; 17_520], vec![0.0; 17_520]);
        let e = econ(0.25, 1_292.0, 1_172.0);
        let evals = evaluate_grid(
            &p,
            &HouseholdState::new(),
            &e,
            &EquipmentSpecs::default(),
            &EvaluationGrid::default(),
            2019,
        );
        assert_eq!(evals.len(), 21 * 19);
    }

    #[test]
    fn cumulative_cap_shrinks_the_grid() {
        let p = profile(vec![0.0; 17_520], vec![0.0; 17_520]);
        let e = econ(0.25, 1_292.0, 1_172.0);
        let mut state = HouseholdState::new();
        state.add_pv(2019, 9.0);
        state.add_battery(2019, 18.0);
        let evals = evaluate_grid(
            &p,
            &state,
            &e,
            &EquipmentSpecs::default(),
            &EvaluationGrid::default(),
            2020,
        );
        // room for 0, 0.5, 1.0 kWp and only 0 kWh
        assert_eq!(evals.len(), 3);
        assert!(evals.iter().all(|c| c.added_battery_kwh == 0.0));
    }

    #[test]
    fn no_profitable_candidate_means_no_decision() {
        // no sun at all: every non-zero candidate has negative NPV
        let p = profile(vec![0.3; 17_520], vec![0.0; 17_520]);
        let e = econ(0.25, 1_292.0, 1_172.0);
        let decision = invest_decision(
            &p,
            &HouseholdState::new(),
            &e,
            &EquipmentSpecs::default(),
            &EvaluationGrid::default(),
            2019,
        );
        assert!(decision.is_none());
    }

    #[test]
    fn dpp_gate_blocks_slow_payback() {
        // constant high demand, modest PV yield: savings scale linearly with
        // installed kWp, so every PV candidate has the same payback of about
        // 5.6 years. NPV is positive but the 5-year gate blocks.
        let mut pv = vec![0.0f64; 17_520];
        for day in 0..365 {
            for step in 16..32 {
                pv[day * 48 + step] = 1_500.0 / 365.0 / 16.0;
            }
        }
        let p = profile(vec![5.0; 17_520], pv);
        let mut e = econ(0.0, 2_000.0, 50_000.0);
        e.tariff.annual_escalation = 0.0;
        let evals = evaluate_grid(
            &p,
            &HouseholdState::new(),
            &e,
            &EquipmentSpecs::default(),
            &EvaluationGrid::default(),
            2019,
        );
        let best = evals
            .iter()
            .fold(None::<&CandidateEvaluation<f64>>, |best, c| match best {
                Some(b) if !better_candidate(c, b) => Some(b),
                _ => Some(c),
            })
            .unwrap();
        assert!(best.npv > 0.0, "best NPV {}", best.npv);
        assert!(
            !evals.iter().any(|c| c.capex > 0.0 && c.dpp.within(5.0)),
            "no candidate should pay back within 5 years"
        );
        assert!(decide(&evals, &e, 2019).is_none());
    }

    #[test]
    fn fast_payback_unlocks_investment() {
        // cheap PV against high demand pays back almost immediately
        let mut pv = vec![0.0f64; 17_520];
        for day in 0..365 {
            for step in 16..32 {
                pv[day * 48 + step] = 1_500.0 / 365.0 / 16.0;
            }
        }
        let p = profile(vec![5.0; 17_520], pv);
        let e = econ(0.0, 800.0, 50_000.0);
        let decision = invest_decision(
            &p,
            &HouseholdState::new(),
            &e,
            &EquipmentSpecs::default(),
            &EvaluationGrid::default(),
            2019,
        )
        .expect("should invest");
        assert!(decision.added_pv_kwp > 0.0);
        assert_eq!(decision.added_battery_kwh, 0.0);
        assert!(decision.npv > 0.0);
    }

    #[test]
    fn tie_breaks_prefer_cheap_then_small_battery() {
        let mk = |pv, bat, capex, npv| CandidateEvaluation::<f64> {
            added_pv_kwp: pv,
            added_battery_kwh: bat,
            capex,
            npv,
            dpp: Payback::Years(1.0),
        };
        let a = mk(1.0, 0.0, 500.0, 100.0);
        let b = mk(0.5, 1.0, 700.0, 100.0);
        assert!(better_candidate(&a, &b));
        let c = mk(1.0, 2.0, 500.0, 100.0);
        assert!(better_candidate(&a, &c));
        let d = mk(2.0, 0.0, 500.0, 200.0);
        assert!(better_candidate(&d, &a));
    }

    #[test]
    fn higher_fit_never_increases_the_bill_for_fixed_dispatch() {
        let totals = DispatchTotals::<f64> {
            self_consumption: 900.0,
            grid_import: 3_000.0,
            grid_export: 1_500.0,
            charge_ac: 0.0,
            discharge_ac: 0.0,
        };
        let specs = EquipmentSpecs::default();
        let mut state = HouseholdState::new();
        state.add_pv(2019, 4.0);
        let mut previous = f64::INFINITY;
        for fit in [0.0, 0.1, 0.25, 0.4, 0.5] {
            let tariff = TariffSchedule::with_fit_fraction(fit);
            let bill = annual_bill(&totals, &tariff, &state, &specs, 2023);
            assert!(bill <= previous, "fit {fit}: bill {bill} > {previous}");
            previous = bill;
        }
    }

    #[test]
    fn bill_is_strictly_increasing_in_imports() {
        let specs = EquipmentSpecs::default();
        let state = HouseholdState::new();
        let tariff = TariffSchedule::with_fit_fraction(0.25);
        let mut previous = f64::NEG_INFINITY;
        for import in [0.0, 500.0, 2_000.0, 4_000.0, 9_000.0] {
            let totals = DispatchTotals::<f64> {
                self_consumption: 0.0,
                grid_import: import,
                grid_export: 1_000.0,
                charge_ac: 0.0,
                discharge_ac: 0.0,
            };
            let bill = annual_bill(&totals, &tariff, &state, &specs, 2021);
            assert!(bill > previous, "import {import}: bill {bill} <= {previous}");
            previous = bill;
        }
    }
}
