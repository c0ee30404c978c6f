//! Post-processing of solved scenarios: residual load duration curves and
//! their decomposition, segment-weighted wholesale prices, CO2 reporting,
//! total system costs including household annuities, and deltas against the
//! matching reference scenario.

use thiserror::Error;

use crate::finance::annuity;
use crate::fleet::ResidualDemand;
use crate::scalar::{real, Scalar};
use crate::sector::{ResShare, SectorScenario, SectorSolution, TechKind};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("weighted price needs a profile with positive total energy")]
    ZeroDemandProfile,
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("scenario and reference must share the renewable-share setting")]
    ResShareMismatch,
    #[error("scenario and reference must share the hourly horizon")]
    HorizonMismatch,
}

/// Residual load duration curve: the series sorted descending.
pub fn rldc<S: Scalar>(series: &[S]) -> Vec<S> {
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite load values"));
    sorted
}

/// The four duration curves behind the displacement story.
#[derive(Debug, Clone)]
pub struct RldcCurves<S> {
    /// Reference residual demand net of all utility VRE feed-in.
    pub reference_residual_load: Vec<S>,
    /// Prosumage residual demand net of that scenario's utility VRE.
    pub prosumage_residual_load: Vec<S>,
    /// Reference demand net of utility PV only.
    pub reference_net_of_utility_pv: Vec<S>,
    /// Counterfactual: household PV volume fed in as if it were utility PV,
    /// without any behind-the-meter battery smoothing.
    pub counterfactual_household_as_utility: Vec<S>,
}

fn vre_feed_in<S: Scalar>(
    scenario: &SectorScenario<S>,
    solution: &SectorSolution<S>,
    pv_only: bool,
) -> Vec<S> {
    let mut feed = vec![S::zero(); scenario.hours];
    for (tech, result) in scenario.technologies.iter().zip(&solution.technologies) {
        if tech.kind != TechKind::VariableRenewable {
            continue;
        }
        if pv_only && tech.name != "pv" {
            continue;
        }
        if let Some(avail) = &tech.availability {
            for (f, a) in feed.iter_mut().zip(avail) {
                *f = *f + *a * result.capacity_mw;
            }
        }
    }
    feed
}

/// Decompose the RLDC change into the PV-volume effect and the battery
/// smoothing effect. VRE feed-in uses available (pre-curtailment) energy, so
/// renewable surplus shows up as negative residual load.
pub fn rldc_decomposition<S: Scalar>(
    scenario: &SectorScenario<S>,
    scenario_solution: &SectorSolution<S>,
    reference: &SectorScenario<S>,
    reference_solution: &SectorSolution<S>,
) -> Result<RldcCurves<S>, AnalyticsError> {
    if scenario.hours != reference.hours {
        return Err(AnalyticsError::HorizonMismatch);
    }
    let hours = scenario.hours;

    let ref_vre = vre_feed_in(reference, reference_solution, false);
    let scen_vre = vre_feed_in(scenario, scenario_solution, false);
    let ref_pv = vre_feed_in(reference, reference_solution, true);

    let mut reference_residual_load = Vec::with_capacity(hours);
    let mut prosumage_residual_load = Vec::with_capacity(hours);
    let mut reference_net_of_utility_pv = Vec::with_capacity(hours);
    let mut counterfactual = Vec::with_capacity(hours);
    for h in 0..hours {
        reference_residual_load.push(reference.residual_demand[h] - ref_vre[h]);
        prosumage_residual_load.push(scenario.residual_demand[h] - scen_vre[h]);
        let net_pv = reference.residual_demand[h] - ref_pv[h];
        reference_net_of_utility_pv.push(net_pv);
        counterfactual.push(net_pv - scenario.household_pv[h]);
    }

    Ok(RldcCurves {
        reference_residual_load: rldc(&reference_residual_load),
        prosumage_residual_load: rldc(&prosumage_residual_load),
        reference_net_of_utility_pv: rldc(&reference_net_of_utility_pv),
        counterfactual_household_as_utility: rldc(&counterfactual),
    })
}

/// Energy-weighted average of hourly duals over a grid-utilisation profile.
pub fn weighted_price<S: Scalar>(duals: &[S], profile: &[S]) -> Result<S, AnalyticsError> {
    if duals.len() != profile.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: duals.len(),
            right: profile.len(),
        });
    }
    let total: S = profile.iter().copied().sum();
    if !(total > S::zero()) {
        return Err(AnalyticsError::ZeroDemandProfile);
    }
    let weighted: S = duals.iter().zip(profile).map(|(d, p)| *d * *p).sum();
    Ok(weighted / total)
}

/// The three customer segments and their hourly grid-utilisation profiles
/// (MWh). Prosumage households use their net profile, non-prosumage
/// households the same underlying demand, C&I the remainder.
#[derive(Debug, Clone)]
pub struct CustomerSegments<S> {
    pub prosumage_households: Vec<S>,
    pub non_prosumage_households: Vec<S>,
    pub commercial_industrial: Vec<S>,
    /// Imports-only variant of the prosumage profile.
    pub prosumage_imports_only: Vec<S>,
}

pub fn customer_segments<S: Scalar>(residual: &ResidualDemand<S>) -> CustomerSegments<S> {
    let n = residual.residual.len();
    let mut commercial = Vec::with_capacity(n);
    for h in 0..n {
        commercial.push(
            residual.residual.values()[h]
                - residual.household_net.values()[h]
                - residual.household_demand.values()[h],
        );
    }
    CustomerSegments {
        prosumage_households: residual.household_net.values().to_vec(),
        non_prosumage_households: residual.household_demand.values().to_vec(),
        commercial_industrial: commercial,
        prosumage_imports_only: residual.household_import.values().to_vec(),
    }
}

/// Per-technology and total CO2 from fuel burn.
#[derive(Debug, Clone)]
pub struct Co2Report<S> {
    pub per_technology: Vec<(String, S)>,
    pub total_tonnes: S,
    /// tCO2 per MWh equals kg per kWh.
    pub intensity_kg_per_kwh: S,
}

/// Emissions: fuel burn is generation over thermal efficiency, times the
/// emission factor. Intensity divides by the energy the sector serves
/// (annual residual demand).
pub fn co2_report<S: Scalar>(
    solution: &SectorSolution<S>,
    scenario: &SectorScenario<S>,
) -> Co2Report<S> {
    let mut per_technology = Vec::new();
    let mut total = S::zero();
    for (tech, result) in scenario.technologies.iter().zip(&solution.technologies) {
        let tonnes = match tech.kind {
            TechKind::Dispatchable => {
                let fuel_burn = result.annual_generation_mwh / tech.efficiency;
                fuel_burn * tech.emission_factor
            }
            _ => S::zero(),
        };
        total = total + tonnes;
        per_technology.push((tech.name.clone(), tonnes));
    }
    let served: S = scenario.residual_demand.iter().copied().sum();
    let intensity = if served > S::zero() {
        total / served
    } else {
        S::zero()
    };
    Co2Report {
        per_technology,
        total_tonnes: total,
        intensity_kg_per_kwh: intensity,
    }
}

/// One household investment, cohort scale (one representative household of
/// the cohort), with its capital outlays at the decision year.
#[derive(Debug, Clone, Copy)]
pub struct InvestmentRecord<S> {
    pub year: i32,
    pub pv_kwp: S,
    pub battery_kwh: S,
    pub pv_capex_aud: S,
    pub battery_capex_aud: S,
}

/// Fleet investment log: all cohort decisions, the cohort size they were
/// averaged over and the fleet size they scale to.
#[derive(Debug, Clone)]
pub struct FleetInvestments<S> {
    pub cohort_size: usize,
    pub n_households: u64,
    pub records: Vec<InvestmentRecord<S>>,
    pub pv_lifetime_years: u32,
    pub battery_lifetime_years: u32,
}

impl<S: Scalar> FleetInvestments<S> {
    pub fn empty() -> Self {
        FleetInvestments {
            cohort_size: 1,
            n_households: 0,
            records: Vec::new(),
            pv_lifetime_years: 25,
            battery_lifetime_years: 10,
        }
    }
}

/// Yearly system cost: sector objective plus the annuities of household
/// investments still alive in the target year.
#[derive(Debug, Clone, Copy)]
pub struct SystemCost<S> {
    pub sector_objective_aud: S,
    pub household_pv_annuities_aud: S,
    pub household_battery_annuities_aud: S,
}

impl<S: Scalar> SystemCost<S> {
    pub fn total(&self) -> S {
        self.sector_objective_aud
            + self.household_pv_annuities_aud
            + self.household_battery_annuities_aud
    }
}

/// Sum the annuities of all household vintages alive in `target_year`,
/// scaled from the cohort to the fleet, on top of the sector objective.
pub fn system_cost<S: Scalar>(
    solution: &SectorSolution<S>,
    investments: &FleetInvestments<S>,
    target_year: i32,
    interest_rate: S,
) -> SystemCost<S> {
    let mut pv_annuities = S::zero();
    let mut battery_annuities = S::zero();
    for record in &investments.records {
        let age = target_year - record.year;
        if age >= 0 && age < investments.pv_lifetime_years as i32 && record.pv_capex_aud > S::zero()
        {
            pv_annuities = pv_annuities
                + annuity(
                    record.pv_capex_aud,
                    real(investments.pv_lifetime_years as f64),
                    interest_rate,
                );
        }
        if age >= 0
            && age < investments.battery_lifetime_years as i32
            && record.battery_capex_aud > S::zero()
        {
            battery_annuities = battery_annuities
                + annuity(
                    record.battery_capex_aud,
                    real(investments.battery_lifetime_years as f64),
                    interest_rate,
                );
        }
    }
    let scale = if investments.n_households == 0 {
        S::zero()
    } else {
        real::<S>(investments.n_households as f64) / real::<S>(investments.cohort_size as f64)
    };
    SystemCost {
        sector_objective_aud: solution.objective,
        household_pv_annuities_aud: pv_annuities * scale,
        household_battery_annuities_aud: battery_annuities * scale,
    }
}

/// Fleet-scale installed household capacities in sector units.
#[derive(Debug, Clone, Copy, Default)]
pub struct FleetCapacities<S> {
    pub pv_mw: S,
    pub battery_mw: S,
    pub battery_mwh: S,
}

/// Capacity/generation/cost changes of a prosumage scenario against its
/// equal-share reference, plus the substitution ratios.
#[derive(Debug, Clone)]
pub struct TechDelta<S> {
    pub name: String,
    pub capacity_mw: S,
    pub energy_capacity_mwh: Option<S>,
    pub annual_generation_mwh: S,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SubstitutionRatios<S> {
    /// MW of utility PV displaced per MW of household PV.
    pub utility_pv_per_household_pv: Option<S>,
    /// MW of wind displaced per MW of household PV.
    pub wind_per_household_pv: Option<S>,
    /// MW of utility battery power displaced per MW of household battery.
    pub battery_power_per_household_power: Option<S>,
    /// MWh of utility battery energy displaced per MWh of household battery.
    pub battery_energy_per_household_energy: Option<S>,
}

#[derive(Debug, Clone)]
pub struct ScenarioDelta<S> {
    pub technologies: Vec<TechDelta<S>>,
    pub co2_tonnes: S,
    pub co2_intensity_kg_per_kwh: S,
    pub system_cost_aud: S,
    pub system_cost_percent: S,
    pub ratios: SubstitutionRatios<S>,
}

fn share_matches<S: Scalar>(a: &ResShare<S>, b: &ResShare<S>) -> bool {
    match (a, b) {
        (ResShare::Fixed(x), ResShare::Fixed(y)) => (*x - *y).abs() <= real(1e-12),
        (ResShare::Endogenous, ResShare::Endogenous) => true,
        _ => false,
    }
}

/// All deltas are scenario minus reference; both must be solved on the same
/// renewable-share setting.
#[allow(clippy::too_many_arguments)]
pub fn delta_report<S: Scalar>(
    scenario: &SectorScenario<S>,
    scenario_solution: &SectorSolution<S>,
    scenario_cost: &SystemCost<S>,
    household: &FleetCapacities<S>,
    reference: &SectorScenario<S>,
    reference_solution: &SectorSolution<S>,
    reference_cost: &SystemCost<S>,
) -> Result<ScenarioDelta<S>, AnalyticsError> {
    if !share_matches(&scenario.res_share, &reference.res_share) {
        return Err(AnalyticsError::ResShareMismatch);
    }
    if scenario.hours != reference.hours {
        return Err(AnalyticsError::HorizonMismatch);
    }

    let mut technologies = Vec::new();
    for (scen, refr) in scenario_solution
        .technologies
        .iter()
        .zip(&reference_solution.technologies)
    {
        technologies.push(TechDelta {
            name: scen.name.clone(),
            capacity_mw: scen.capacity_mw - refr.capacity_mw,
            energy_capacity_mwh: match (scen.energy_capacity_mwh, refr.energy_capacity_mwh) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            },
            annual_generation_mwh: scen.annual_generation_mwh - refr.annual_generation_mwh,
        });
    }

    let scen_co2 = co2_report(scenario_solution, scenario);
    let ref_co2 = co2_report(reference_solution, reference);

    let delta_for = |name: &str| {
        technologies
            .iter()
            .find(|t| t.name == name)
            .map(|t| (t.capacity_mw, t.energy_capacity_mwh))
    };
    let ratio = |delta: Option<S>, household_cap: S| -> Option<S> {
        match delta {
            Some(d) if household_cap > S::zero() => Some(-d / household_cap),
            _ => None,
        }
    };
    let ratios = SubstitutionRatios {
        utility_pv_per_household_pv: ratio(delta_for("pv").map(|d| d.0), household.pv_mw),
        wind_per_household_pv: ratio(delta_for("wind").map(|d| d.0), household.pv_mw),
        battery_power_per_household_power: ratio(
            delta_for("li-ion").map(|d| d.0),
            household.battery_mw,
        ),
        battery_energy_per_household_energy: ratio(
            delta_for("li-ion").and_then(|d| d.1),
            household.battery_mwh,
        ),
    };

    let cost_delta = scenario_cost.total() - reference_cost.total();
    let cost_percent = if reference_cost.total() > S::zero() {
        cost_delta / reference_cost.total() * real(100.0)
    } else {
        S::zero()
    };

    Ok(ScenarioDelta {
        technologies,
        co2_tonnes: scen_co2.total_tonnes - ref_co2.total_tonnes,
        co2_intensity_kg_per_kwh: scen_co2.intensity_kg_per_kwh - ref_co2.intensity_kg_per_kwh,
        system_cost_aud: cost_delta,
        system_cost_percent: cost_percent,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector::{solve_scenario, ResShare, SectorScenario, TechKind, Technology};
    use crate::solver::DenseSimplex;

    #[test]
    fn rldc_sorts_descending() {
        assert_eq!(rldc(&[3.0, 1.0, 2.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(rldc(&[5.0, 5.0, 5.0]), vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn rldc_is_a_permutation() {
        let mut x = 99u64;
        let series: Vec<f64> = (0..500)
            .map(|_| {
                x = x
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((x >> 33) as f64) / 1e6
            })
            .collect();
        let sorted = rldc(&series);
        assert!(sorted.windows(2).all(|w| w[0] >= w[1]));
        let mut expect = series.clone();
        expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(sorted, expect);
    }

    #[test]
    fn weighted_price_examples() {
        assert!((weighted_price(&[10.0f64, 20.0], &[1.0, 3.0]).unwrap() - 17.5).abs() < 1e-12);
        let constant = weighted_price(&[42.0f64; 5], &[0.3, 1.0, 2.0, 0.7, 9.0]).unwrap();
        assert!((constant - 42.0).abs() < 1e-12);
        assert!(matches!(
            weighted_price(&[1.0, 2.0], &[0.0, 0.0]),
            Err(AnalyticsError::ZeroDemandProfile)
        ));
    }

    fn dispatchable(
        name: &str,
        fixed_om: f64,
        variable_om: f64,
        efficiency: f64,
        ef: f64,
    ) -> Technology<f64> {
        Technology {
            name: name.into(),
            kind: TechKind::Dispatchable,
            overnight_cost_power: 0.0,
            overnight_cost_energy: 0.0,
            fixed_om,
            variable_om,
            fuel_cost: 0.0,
            efficiency,
            lifetime_years: 25.0,
            capacity_lower_bound: 0.0,
            emission_factor: ef,
            renewable: false,
            availability: None,
        }
    }

    #[test]
    fn co2_arithmetic() {
        let scenario = SectorScenario::new(
            vec![50.0, 50.0],
            vec![0.0, 0.0],
            ResShare::Endogenous,
            vec![dispatchable("coal", 1.0, 1.0, 0.40, 0.34)],
            0.04,
        )
        .unwrap();
        let solution = solve_scenario(&scenario, &DenseSimplex::default()).unwrap();
        // 100 MWh at 40% efficiency and 0.34 t/MWh_th -> 85 t
        let report = co2_report(&solution, &scenario);
        assert!((report.total_tonnes - 85.0).abs() < 1e-9);
        assert!((report.intensity_kg_per_kwh - 0.85).abs() < 1e-9);
    }

    #[test]
    fn renewable_only_dispatch_has_zero_co2() {
        let wind = Technology {
            name: "wind".into(),
            kind: TechKind::VariableRenewable,
            overnight_cost_power: 0.0,
            overnight_cost_energy: 0.0,
            fixed_om: 1.0,
            variable_om: 0.0,
            fuel_cost: 0.0,
            efficiency: 1.0,
            lifetime_years: 25.0,
            capacity_lower_bound: 0.0,
            emission_factor: 0.0,
            renewable: true,
            availability: Some(vec![1.0, 1.0]),
        };
        let scenario = SectorScenario::new(
            vec![5.0, 5.0],
            vec![0.0, 0.0],
            ResShare::Endogenous,
            vec![wind],
            0.04,
        )
        .unwrap();
        let solution = solve_scenario(&scenario, &DenseSimplex::default()).unwrap();
        let report = co2_report(&solution, &scenario);
        assert_eq!(report.total_tonnes, 0.0);
    }

    #[test]
    fn system_cost_reference_identity_and_battery_annuity() {
        let scenario = SectorScenario::new(
            vec![10.0],
            vec![0.0],
            ResShare::Endogenous,
            vec![dispatchable("gas", 7.0, 3.0, 1.0, 0.0)],
            0.04,
        )
        .unwrap();
        let solution = solve_scenario(&scenario, &DenseSimplex::default()).unwrap();
        let none = system_cost(&solution, &FleetInvestments::empty(), 2030, 0.04);
        assert_eq!(none.total(), solution.objective);

        let one_battery = FleetInvestments {
            cohort_size: 1,
            n_households: 1,
            records: vec![InvestmentRecord {
                year: 2025,
                pv_kwp: 0.0,
                battery_kwh: 5.0,
                pv_capex_aud: 0.0,
                battery_capex_aud: 5_000.0,
            }],
            pv_lifetime_years: 25,
            battery_lifetime_years: 10,
        };
        let with = system_cost(&solution, &one_battery, 2030, 0.04);
        assert!((with.household_battery_annuities_aud - 616.45).abs() < 0.01);
        // retired by 2036
        let retired = system_cost(&solution, &one_battery, 2036, 0.04);
        assert_eq!(retired.household_battery_annuities_aud, 0.0);
    }

    fn two_tech_scenario(hh_pv: Vec<f64>, residual: Vec<f64>) -> SectorScenario<f64> {
        let hours = residual.len();
        let pv = Technology {
            name: "pv".into(),
            kind: TechKind::VariableRenewable,
            overnight_cost_power: 0.0,
            overnight_cost_energy: 0.0,
            fixed_om: 20.0,
            variable_om: 0.0,
            fuel_cost: 0.0,
            efficiency: 1.0,
            lifetime_years: 25.0,
            capacity_lower_bound: 0.0,
            emission_factor: 0.0,
            renewable: true,
            availability: Some(
                (0..hours)
                    .map(|h| {
                        if (6..18).contains(&(h % 24)) {
                            0.8
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            ),
        };
        SectorScenario::new(
            residual,
            hh_pv,
            ResShare::Endogenous,
            vec![dispatchable("gas", 10.0, 5.0, 0.5, 0.2), pv],
            0.04,
        )
        .unwrap()
    }

    #[test]
    fn delta_of_identical_scenarios_is_zero() {
        let scenario = two_tech_scenario(vec![0.0; 24], vec![10.0; 24]);
        let solution = solve_scenario(&scenario, &DenseSimplex::default()).unwrap();
        let cost = system_cost(&solution, &FleetInvestments::empty(), 2030, 0.04);
        let delta = delta_report(
            &scenario,
            &solution,
            &cost,
            &FleetCapacities::default(),
            &scenario,
            &solution,
            &cost,
        )
        .unwrap();
        for t in &delta.technologies {
            assert_eq!(t.capacity_mw, 0.0);
            assert_eq!(t.annual_generation_mwh, 0.0);
        }
        assert_eq!(delta.co2_tonnes, 0.0);
        assert_eq!(delta.system_cost_aud, 0.0);
        assert!(delta.ratios.utility_pv_per_household_pv.is_none());
    }

    #[test]
    fn delta_rejects_mismatched_share() {
        let mut a = two_tech_scenario(vec![0.0; 24], vec![10.0; 24]);
        let mut b = a.clone();
        a.res_share = ResShare::Fixed(0.39);
        b.res_share = ResShare::Fixed(0.49);
        let sol_a = solve_scenario(&a, &DenseSimplex::default()).unwrap();
        let sol_b = solve_scenario(&b, &DenseSimplex::default()).unwrap();
        let cost_a = system_cost(&sol_a, &FleetInvestments::empty(), 2030, 0.04);
        let cost_b = system_cost(&sol_b, &FleetInvestments::empty(), 2030, 0.04);
        let err = delta_report(
            &a,
            &sol_a,
            &cost_a,
            &FleetCapacities::default(),
            &b,
            &sol_b,
            &cost_b,
        )
        .unwrap_err();
        assert!(matches!(err, AnalyticsError::ResShareMismatch));
    }

    #[test]
    fn decomposition_degenerates_without_household_pv() {
        let reference = two_tech_scenario(vec![0.0; 24], vec![10.0; 24]);
        let ref_sol = solve_scenario(&reference, &DenseSimplex::default()).unwrap();
        let curves = rldc_decomposition(&reference, &ref_sol, &reference, &ref_sol).unwrap();
        assert_eq!(
            curves.prosumage_residual_load,
            curves.reference_residual_load
        );
        assert_eq!(
            curves.counterfactual_household_as_utility,
            curves.reference_net_of_utility_pv
        );
    }

    #[test]
    fn counterfactual_shifts_by_the_household_profile_before_sorting() {
        // 1 MWh of household PV at noon
        let mut hh_pv = vec![0.0; 24];
        hh_pv[12] = 1.0;
        let mut residual = vec![10.0; 24];
        residual[12] -= 1.0;
        let scenario = two_tech_scenario(hh_pv.clone(), residual);
        let reference = two_tech_scenario(vec![0.0; 24], vec![10.0; 24]);
        let scen_sol = solve_scenario(&scenario, &DenseSimplex::default()).unwrap();
        let ref_sol = solve_scenario(&reference, &DenseSimplex::default()).unwrap();
        let curves = rldc_decomposition(&scenario, &scen_sol, &reference, &ref_sol).unwrap();
        // recompute curve 4 by hand: curve 3's unsorted series minus the
        // household profile, sorted afterwards
        let ref_pv = vre_feed_in(&reference, &ref_sol, true);
        let unsorted: Vec<f64> = (0..24)
            .map(|h| reference.residual_demand[h] - ref_pv[h] - hh_pv[h])
            .collect();
        assert_eq!(curves.counterfactual_household_as_utility, rldc(&unsorted));
    }
}
