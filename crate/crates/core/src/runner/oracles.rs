//! Independently coded oracles for the verification suite. Everything here
//! re-derives results from first principles without calling the production
//! dispatch, appraisal or LP code paths, so agreement is meaningful.

use crate::household::{
    BatterySpec, EconomicContext, EquipmentSpecs, EvaluationGrid, PvSpec, TariffSchedule,
};
use crate::timeseries::ProfileSet;

/// Straightforward re-implementation of the greedy self-consumption year:
/// explicit if/else control flow instead of the branch-free kernel.
pub fn oracle_year_totals(
    demand: &[f64],
    pv_yield: &[f64],
    pv_kwp: f64,
    battery_kwh: f64,
    battery_kw: f64,
    roundtrip_efficiency: f64,
) -> (f64, f64) {
    let eta = roundtrip_efficiency.sqrt();
    let step_limit = battery_kw * 0.5;
    let mut soc = 0.0f64;
    let mut import = 0.0;
    let mut export = 0.0;
    for (load, yield_per_kwp) in demand.iter().zip(pv_yield) {
        let generation = pv_kwp * yield_per_kwp;
        if generation >= *load {
            let mut surplus = generation - load;
            if soc < battery_kwh && surplus > 0.0 {
                let room_ac = (battery_kwh - soc) / eta;
                let charge = surplus.min(step_limit).min(room_ac);
                soc += charge * eta;
                surplus -= charge;
            }
            export += surplus;
        } else {
            let mut deficit = load - generation;
            if soc > 0.0 && deficit > 0.0 {
                let available = soc * eta;
                let discharge = deficit.min(step_limit).min(available);
                soc -= discharge / eta;
                deficit -= discharge;
            }
            import += deficit;
        }
    }
    (import, export)
}

/// Degraded capacities of a vintage list at `year`, re-derived from the
/// endpoint fractions.
fn oracle_usable(vintages: &[(i32, f64)], year: i32, life: i32, eol_fraction: f64) -> f64 {
    let fade = (1.0 - eol_fraction) / life as f64;
    vintages
        .iter()
        .map(|(installed, nominal)| {
            let age = year - installed;
            if age < 0 || age >= life {
                0.0
            } else {
                nominal * (1.0 - fade * age as f64)
            }
        })
        .sum()
}

fn oracle_nominal(vintages: &[(i32, f64)], year: i32, life: i32) -> f64 {
    vintages
        .iter()
        .filter(|(installed, _)| {
            let age = year - installed;
            (0..life).contains(&age)
        })
        .map(|(_, nominal)| nominal)
        .sum()
}

/// Bill of a vintage set in one year, re-simulated from scratch.
#[allow(clippy::too_many_arguments)]
fn oracle_bill(
    profile: &ProfileSet<f64>,
    pv_vintages: &[(i32, f64)],
    battery_vintages: &[(i32, f64)],
    year: i32,
    tariff: &TariffSchedule<f64>,
    battery: &BatterySpec<f64>,
    pv: &PvSpec<f64>,
) -> f64 {
    let pv_usable = oracle_usable(
        pv_vintages,
        year,
        pv.life_years as i32,
        pv.end_of_life_capacity_fraction,
    );
    let battery_usable = oracle_usable(
        battery_vintages,
        year,
        battery.life_years as i32,
        battery.end_of_life_capacity_fraction,
    );
    let (import, export) = oracle_year_totals(
        profile.demand().values(),
        profile.pv_yield().values(),
        pv_usable,
        battery_usable,
        battery_usable / battery.energy_to_power_ratio,
        battery.roundtrip_efficiency,
    );
    let rate = tariff.base_volumetric_rate
        * (1.0 + tariff.annual_escalation).powi(year - tariff.base_year);
    let eligible =
        oracle_nominal(pv_vintages, year, pv.life_years as i32) <= tariff.fit_eligibility_cap_kwp;
    let export_revenue = if eligible {
        tariff.fit_fraction * rate * export
    } else {
        0.0
    };
    rate * import - export_revenue + tariff.fixed_daily_charge * 365.0
}

/// The decision the exhaustive enumeration oracle reaches for one year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleDecision {
    pub added_pv_kwp: f64,
    pub added_battery_kwh: f64,
    pub npv: f64,
}

/// Exhaustively enumerate the addition grid and apply the NPV argmax plus the
/// payback gate, re-implemented from scratch (plain loops and a running
/// best).
pub fn oracle_invest_decision(
    profile: &ProfileSet<f64>,
    pv_vintages: &[(i32, f64)],
    battery_vintages: &[(i32, f64)],
    econ: &EconomicContext<f64>,
    specs: &EquipmentSpecs<f64>,
    grid: &EvaluationGrid<f64>,
    year: i32,
) -> Option<OracleDecision> {
    let r = econ.discount_rate;
    let horizon = econ.horizon_years as i32;

    let base_bills: Vec<f64> = (1..=horizon)
        .map(|k| {
            oracle_bill(
                profile,
                pv_vintages,
                battery_vintages,
                year + k,
                &econ.tariff,
                &specs.battery,
                &specs.pv,
            )
        })
        .collect();

    let pv_room = grid.pv_max_kwp - oracle_nominal(pv_vintages, year, specs.pv.life_years as i32);
    let battery_room = grid.battery_max_kwh
        - oracle_nominal(battery_vintages, year, specs.battery.life_years as i32);
    let pv_steps = ((pv_room + 1e-9) / grid.pv_step_kwp).floor().max(0.0) as usize;
    let battery_steps = ((battery_room + 1e-9) / grid.battery_step_kwh)
        .floor()
        .max(0.0) as usize;

    let mut best: Option<(f64, f64, f64, f64)> = None; // (npv, capex, bat, pv)
    let mut gate_open = false;
    for i in 0..=pv_steps {
        let add_pv = grid.pv_step_kwp * i as f64;
        for j in 0..=battery_steps {
            let add_battery = grid.battery_step_kwh * j as f64;
            let capex =
                econ.costs.pv_cost(year) * add_pv + econ.costs.battery_cost(year) * add_battery;
            let (npv, dpp) = if i == 0 && j == 0 {
                (0.0, Some(0.0))
            } else {
                let mut pv_with = pv_vintages.to_vec();
                let mut battery_with = battery_vintages.to_vec();
                if add_pv > 0.0 {
                    pv_with.push((year, add_pv));
                }
                if add_battery > 0.0 {
                    battery_with.push((year, add_battery));
                }
                let mut npv = -capex;
                let mut cumulative = 0.0;
                let mut dpp = None;
                for k in 1..=horizon {
                    let bill = oracle_bill(
                        profile,
                        &pv_with,
                        &battery_with,
                        year + k,
                        &econ.tariff,
                        &specs.battery,
                        &specs.pv,
                    );
                    let saving = base_bills[(k - 1) as usize] - bill;
                    let discounted = saving / (1.0 + r).powi(k);
                    npv += discounted;
                    if dpp.is_none() {
                        if cumulative + discounted >= capex {
                            dpp = Some((k - 1) as f64 + (capex - cumulative) / discounted);
                        }
                        cumulative += discounted;
                    }
                }
                (npv, dpp)
            };
            if capex > 0.0 {
                if let Some(years) = dpp {
                    if years <= econ.dpp_threshold_years {
                        gate_open = true;
                    }
                }
            }
            let candidate = (npv, capex, add_battery, add_pv);
            let better = match &best {
                None => true,
                Some((b_npv, b_capex, b_bat, _)) => {
                    npv > *b_npv
                        || (npv == *b_npv && capex < *b_capex)
                        || (npv == *b_npv && capex == *b_capex && add_battery < *b_bat)
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    let (npv, _, add_battery, add_pv) = best?;
    if npv > 0.0 && gate_open {
        Some(OracleDecision {
            added_pv_kwp: add_pv,
            added_battery_kwh: add_battery,
            npv,
        })
    } else {
        None
    }
}

/// Brute-force capacity search for a generation-only system: grid over the
/// two renewable capacities, dispatchable capacity pinned to the residual
/// peak, merit-order dispatch inside. Returns the cheapest total cost found.
pub struct BruteForceTech {
    pub annual_cost_per_mw: f64,
    pub marginal_cost: f64,
    /// None means fully dispatchable.
    pub availability: Option<Vec<f64>>,
}

pub fn brute_force_capacity_search(
    demand: &[f64],
    dispatchable: &BruteForceTech,
    renewable_a: &BruteForceTech,
    renewable_b: &BruteForceTech,
    grid_points: usize,
    max_capacity: f64,
) -> f64 {
    // coarse pass over the full box, then a fine pass around the winner
    let coarse = grid_search(
        demand,
        dispatchable,
        renewable_a,
        renewable_b,
        grid_points,
        (0.0, max_capacity),
        (0.0, max_capacity),
    );
    let step = max_capacity / grid_points as f64;
    let window = |c: f64| ((c - 2.0 * step).max(0.0), c + 2.0 * step);
    let fine = grid_search(
        demand,
        dispatchable,
        renewable_a,
        renewable_b,
        grid_points,
        window(coarse.1),
        window(coarse.2),
    );
    coarse.0.min(fine.0)
}

#[allow(clippy::too_many_arguments)]
fn grid_search(
    demand: &[f64],
    dispatchable: &BruteForceTech,
    renewable_a: &BruteForceTech,
    renewable_b: &BruteForceTech,
    grid_points: usize,
    range_a: (f64, f64),
    range_b: (f64, f64),
) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let avail_a = renewable_a.availability.as_ref().expect("renewable");
    let avail_b = renewable_b.availability.as_ref().expect("renewable");
    for ia in 0..=grid_points {
        let cap_a = range_a.0 + (range_a.1 - range_a.0) * ia as f64 / grid_points as f64;
        for ib in 0..=grid_points {
            let cap_b = range_b.0 + (range_b.1 - range_b.0) * ib as f64 / grid_points as f64;
            // merit order: cheaper renewable first, then the other, then the
            // dispatchable for whatever remains
            let mut cost =
                cap_a * renewable_a.annual_cost_per_mw + cap_b * renewable_b.annual_cost_per_mw;
            let mut dispatchable_peak = 0.0f64;
            let (first, first_avail, second, second_avail) =
                if renewable_a.marginal_cost <= renewable_b.marginal_cost {
                    (renewable_a, avail_a, renewable_b, avail_b)
                } else {
                    (renewable_b, avail_b, renewable_a, avail_a)
                };
            let (first_cap, second_cap) = if std::ptr::eq(first, renewable_a) {
                (cap_a, cap_b)
            } else {
                (cap_b, cap_a)
            };
            for (h, load) in demand.iter().enumerate() {
                let mut remaining = *load;
                let take_first = remaining.min(first_cap * first_avail[h]);
                remaining -= take_first;
                cost += take_first * first.marginal_cost;
                let take_second = remaining.min(second_cap * second_avail[h]);
                remaining -= take_second;
                cost += take_second * second.marginal_cost;
                if remaining > 0.0 {
                    cost += remaining * dispatchable.marginal_cost;
                    dispatchable_peak = dispatchable_peak.max(remaining);
                }
            }
            cost += dispatchable_peak * dispatchable.annual_cost_per_mw;
            if cost < best.0 {
                best = (cost, cap_a, cap_b);
            }
        }
    }
    best
}

/// Independent discounted-cashflow oracle: cumulative table arithmetic.
pub fn oracle_npv_dpp(
    capex: f64,
    yearly_saving: f64,
    rate: f64,
    horizon: u32,
) -> (f64, Option<f64>) {
    let mut npv = -capex;
    let mut cumulative = 0.0;
    let mut dpp = None;
    for k in 1..=horizon {
        let discounted = yearly_saving / (1.0 + rate).powi(k as i32);
        npv += discounted;
        if dpp.is_none() && cumulative + discounted >= capex {
            dpp = Some((k - 1) as f64 + (capex - cumulative) / discounted);
        }
        cumulative += discounted;
    }
    if capex == 0.0 {
        dpp = Some(0.0);
    }
    (npv, dpp)
}

/// Compare an oracle decision against the production evaluation result.
pub fn decisions_match(
    oracle: Option<OracleDecision>,
    production: Option<&crate::household::InvestmentDecision<f64>>,
) -> bool {
    match (oracle, production) {
        (None, None) => true,
        (Some(o), Some(p)) => {
            o.added_pv_kwp == p.added_pv_kwp
                && o.added_battery_kwh == p.added_battery_kwh
                && (o.npv - p.npv).abs() <= 1e-6 * (1.0 + o.npv.abs())
        }
        _ => false,
    }
}
