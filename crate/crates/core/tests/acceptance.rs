//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `--nocapture`).
//!
//! Tier 1 runs entirely on the bundled synthetic dataset. Tier 2 reproduces
//! published values and needs the fetched public datasets; those tests are
//! ignored unless `PROSUMAGE_REPRODUCTION_DATA` points at a directory with
//! the documented file layout (see the README's reproduction section).

use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use rayon::prelude::*;

use prosumage_core::analytics::{
    delta_report, system_cost, FleetCapacities, FleetInvestments, InvestmentRecord,
};
use prosumage_core::finance::{discounted_payback, net_present_value};
use prosumage_core::household::{
    invest_decision, simulate_dispatch, CostCurves, EconomicContext, EquipmentSpecs,
    EvaluationGrid, HouseholdState, TariffSchedule,
};
use prosumage_core::runner::{
    self, decisions_match, forty_eight_hour_instance, household_stage, load_inputs,
    oracle_invest_decision, plan_matrix, reference_residual, residual_stage, run_matrix,
    sector_stage, synthetic_run_config, CellKind, ResShareChoice, RunConfig,
};
use prosumage_core::sector::{
    build_lp, default_catalog, solve_scenario, validate_solution, ResShare, SectorScenario,
    TechKind, Technology,
};
use prosumage_core::solver::{BackendChoice, ClarabelBackend, DenseSimplex};
use prosumage_core::synth::{generate, SynthConfig};
use prosumage_core::timeseries::{ProfileSet, Resolution, TimeSeries, Unit};

fn pass(criterion: &str, detail: String) {
    println!("PASS {criterion}: {detail}");
}

fn profile_from(demand: Vec<f64>, pv: Vec<f64>) -> ProfileSet<f64> {
    ProfileSet::new(
        "acc".into(),
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

// ---------------------------------------------------------------------------
// Tier 1
// ---------------------------------------------------------------------------

/// Criterion 1: both per-step balance identities hold to 1e-9 kWh over at
/// least 10,000 randomized steps.
#[test]
fn criterion_01_dispatch_balance_property() {
    let mut total_steps = 0usize;
    let mut worst = 0.0f64;

    let mut runner = proptest::test_runner::TestRunner::new(proptest::test_runner::Config {
        cases: 8,
        ..Default::default()
    });
    runner
        .run(
            &(any::<u64>(), 0.0f64..10.0, 0.0f64..18.0),
            |(seed, pv_kwp, battery_kwh)| {
                let mut x = seed | 1;
                let mut demand = vec![0.0f64; 17_520];
                let mut pv = vec![0.0f64; 17_520];
                for i in 0..17_520 {
                    x = x
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    demand[i] = ((x >> 40) as f64) / (1u64 << 24) as f64 * 2.5;
                    x = x
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    pv[i] = ((x >> 40) as f64) / (1u64 << 24) as f64 * 0.5;
                }
                let profile = profile_from(demand, pv);
                let mut state = HouseholdState::new();
                state.add_pv(2019, pv_kwp);
                state.add_battery(2019, battery_kwh);
                let specs = EquipmentSpecs::<f64>::default();
                let result = simulate_dispatch(&profile, &state, &specs, 2019).unwrap();
                let usable_pv = state.usable_pv_kwp(2019, &specs.pv);
                for t in 0..17_520 {
                    let generation = usable_pv * profile.pv_yield().values()[t];
                    let load = profile.demand().values()[t];
                    let gen_residual = (generation
                        - (result.self_consumption[t]
                            + result.battery_charge_ac[t]
                            + result.grid_export[t]))
                        .abs();
                    let load_residual = (load
                        - (result.self_consumption[t]
                            + result.battery_discharge_ac[t]
                            + result.grid_import[t]))
                        .abs();
                    prop_assert!(gen_residual <= 1e-9, "generation balance {gen_residual}");
                    prop_assert!(load_residual <= 1e-9, "load balance {load_residual}");
                }
                Ok(())
            },
        )
        .unwrap();
    // run one deterministic pass to report the numbers
    let profile = profile_from(vec![0.8; 17_520], vec![0.2; 17_520]);
    let mut state = HouseholdState::new();
    state.add_pv(2019, 5.0);
    state.add_battery(2019, 10.0);
    let result = simulate_dispatch(&profile, &state, &EquipmentSpecs::default(), 2019).unwrap();
    for t in 0..17_520 {
        let generation = 5.0 * 0.2;
        worst = worst.max(
            (generation
                - (result.self_consumption[t]
                    + result.battery_charge_ac[t]
                    + result.grid_export[t]))
                .abs(),
        );
        total_steps += 1;
    }
    pass(
        "criterion 1 (dispatch balances)",
        format!("8 random years x 17,520 steps plus {total_steps} deterministic steps, worst residual {worst:.2e} kWh"),
    );
}

/// Criterion 2: annual battery round trip equals the round-trip efficiency
/// when the year starts and ends drained.
#[test]
fn criterion_02_annual_roundtrip() {
    let mut demand = vec![0.0f64; 17_520];
    let mut pv = vec![0.0f64; 17_520];
    for day in 0..365 {
        for step in 0..48 {
            let idx = day * 48 + step;
            pv[idx] = if (16..32).contains(&step) { 0.35 } else { 0.0 };
            demand[idx] = if (34..46).contains(&step) { 0.9 } else { 0.05 };
        }
    }
    let profile = profile_from(demand, pv);
    let mut state = HouseholdState::new();
    state.add_pv(2019, 2.0);
    state.add_battery(2019, 5.0);
    let result = simulate_dispatch(&profile, &state, &EquipmentSpecs::default(), 2019).unwrap();
    let final_soc = *result.state_of_charge.last().unwrap();
    assert!(
        final_soc.abs() < 1e-9,
        "year must end drained, SoC {final_soc}"
    );
    let ratio = result.totals.discharge_ac / result.totals.charge_ac;
    assert!(
        (ratio - 0.92).abs() <= 1e-6 * 0.92,
        "discharge/charge {ratio} should equal the 0.92 round trip"
    );
    pass(
        "criterion 2 (annual round trip)",
        format!("discharge/charge = {ratio:.9} with final SoC {final_soc:.1e}"),
    );
}

/// Criterion 3: the investment decision matches an independently coded
/// exhaustive enumeration exactly, for 20 households x 3 FiT values over the
/// full 399-point grid.
#[test]
fn criterion_03_investment_argmax_against_enumeration() {
    let dataset = generate(&SynthConfig::default());
    let specs = EquipmentSpecs::<f64>::default();
    let grid = EvaluationGrid::default();
    let costs = CostCurves::from_raw(
        dataset.cost_curve_first_year,
        &dataset.pv_cost_raw,
        &dataset.battery_cost_raw,
        0.78,
        0.73,
    )
    .unwrap();

    let cases: Vec<(usize, f64)> = (0..dataset.profiles.len())
        .flat_map(|h| [0.0, 0.25, 0.5].map(|fit| (h, fit)))
        .collect();
    assert_eq!(cases.len(), 60);
    let mismatches: Vec<String> = cases
        .par_iter()
        .filter_map(|(h, fit)| {
            let econ = EconomicContext {
                discount_rate: 0.05,
                horizon_years: 10,
                dpp_threshold_years: 5.0,
                tariff: TariffSchedule::with_fit_fraction(*fit),
                costs: costs.clone(),
            };
            let profile = &dataset.profiles[*h];
            let empty = HouseholdState::new();
            let production = invest_decision(profile, &empty, &econ, &specs, &grid, 2019);
            let oracle = oracle_invest_decision(profile, &[], &[], &econ, &specs, &grid, 2019);
            if decisions_match(oracle, production.as_ref()) {
                None
            } else {
                Some(format!(
                    "{} fit {fit}: oracle {oracle:?} vs production {production:?}",
                    profile.household_id()
                ))
            }
        })
        .collect();
    assert!(mismatches.is_empty(), "{mismatches:?}");
    pass(
        "criterion 3 (investment argmax)",
        "20 households x 3 FiT values match the independent 399-point enumeration exactly".into(),
    );
}

/// Criterion 4: the NPV and DPP worked examples reproduce to 1e-2 absolute.
#[test]
fn criterion_04_npv_dpp_oracles() {
    let npv: f64 = net_present_value(5_000.0, &[1_000.0; 10], 0.05);
    assert!((npv - 2_721.73).abs() <= 1e-2, "npv {npv}");
    let dpp: f64 = discounted_payback(3_000.0, &[1_000.0; 10], 0.05)
        .years()
        .expect("pays back");
    assert!((dpp - 3.336).abs() <= 1e-2, "dpp {dpp}");
    pass(
        "criterion 4 (NPV/DPP oracles)",
        format!("npv {npv:.2} AUD (2,721.73), dpp {dpp:.3} yr (3.336)"),
    );
}

/// Criterion 5: the two-hour toy reproduces objective 35 with duals [5, 15]
/// and zero duality gap; the 48-hour three-technology instance lands within
/// 1% of the brute-force capacity-grid search.
#[test]
fn criterion_05_lp_correctness() {
    let toy: SectorScenario<f64> = SectorScenario::new(
        vec![1.0, 2.0],
        vec![0.0, 0.0],
        ResShare::Endogenous,
        vec![Technology {
            name: "gas".into(),
            kind: TechKind::Dispatchable,
            overnight_cost_power: 0.0,
            overnight_cost_energy: 0.0,
            fixed_om: 10.0,
            variable_om: 5.0,
            fuel_cost: 0.0,
            efficiency: 1.0,
            lifetime_years: 25.0,
            capacity_lower_bound: 0.0,
            emission_factor: 0.0,
            renewable: false,
            availability: None,
        }],
        0.04,
    )
    .unwrap();
    let solution = solve_scenario(&toy, &DenseSimplex::default()).unwrap();
    assert!((solution.objective - 35.0).abs() <= 1e-9);
    assert!((solution.duals[0] - 5.0).abs() <= 1e-9);
    assert!((solution.duals[1] - 15.0).abs() <= 1e-9);
    let lp = build_lp(&toy).unwrap();
    let gap = (solution.raw.dual_objective(&lp) - solution.objective).abs();
    assert!(gap <= 1e-9 * 35.0, "duality gap {gap}");

    let (instance, oracle_cost) = forty_eight_hour_instance();
    let lp_solution = solve_scenario(&instance, &DenseSimplex::default()).unwrap();
    let rel = (lp_solution.objective - oracle_cost).abs() / oracle_cost;
    assert!(rel <= 0.01, "48-hour objective off by {:.3}%", rel * 100.0);
    pass(
        "criterion 5 (LP correctness)",
        format!(
            "toy: objective {:.6}, duals [{:.4}, {:.4}], gap {gap:.1e}; 48-hour within {:.3}% of brute force",
            solution.objective,
            solution.duals[0],
            solution.duals[1],
            rel * 100.0
        ),
    );
}

/// Criterion 6: a synthetic full-year scenario solves with every constraint
/// residual at or below 1e-6 of its row scale, a relative duality gap at or
/// below 1e-6 and balance duals no lower than -1e-6.
#[test]
fn criterion_06_full_year_feasibility() {
    let dataset = generate(&SynthConfig::default());
    let mut technologies: Vec<Technology<f64>> = default_catalog()
        .into_iter()
        .map(|e| e.technology)
        .collect();
    for tech in technologies.iter_mut() {
        if tech.kind == TechKind::VariableRenewable {
            tech.availability = Some(if tech.name == "wind" {
                dataset.wind_availability.values().to_vec()
            } else {
                dataset.pv_availability.values().to_vec()
            });
        }
    }
    let scenario = SectorScenario::new(
        dataset.network_demand.values().to_vec(),
        vec![0.0; dataset.network_demand.len()],
        ResShare::Fixed(0.49),
        technologies,
        0.04,
    )
    .unwrap();
    let solution = solve_scenario(&scenario, &ClarabelBackend::default()).unwrap();
    let lp = build_lp(&scenario).unwrap();
    let report = validate_solution(&lp, &solution.raw, 1e-6);
    assert!(report.is_clean(), "violations: {:?}", report.violations);
    assert!(
        report.duality_gap_relative <= 1e-6,
        "gap {}",
        report.duality_gap_relative
    );
    assert!(
        report.min_balance_dual >= -1e-6,
        "negative price {}",
        report.min_balance_dual
    );
    // catalog lower bounds respected, and the expensive power-to-gas-to-power
    // option stays out of the least-cost portfolio (regression check)
    let cap = |name: &str| solution.technology(name).unwrap().capacity_mw;
    assert!(cap("wind") >= 419.0 - 1e-6, "wind {}", cap("wind"));
    assert!(cap("pv") >= 202.0 - 1e-6, "pv {}", cap("pv"));
    assert!(cap("hydrogen") <= 1.0, "hydrogen entered at {}", cap("hydrogen"));
    pass(
        "criterion 6 (full-year feasibility)",
        format!(
            "8,760 h, 8 technologies: 0 violations, gap {:.2e}, min balance dual {:.3e}",
            report.duality_gap_relative, report.min_balance_dual
        ),
    );
}

/// Criterion 7: reference identities hold exactly: zero-prosumage residual
/// equals network demand bit for bit, system cost of the reference equals the
/// LP objective, and the delta of a scenario against itself is zero.
#[test]
fn criterion_07_reference_identities() {
    let dataset = generate(&SynthConfig {
        n_households: 4,
        ..Default::default()
    });
    let (cfg, _guard) = synthetic_run_config("acceptance-ref", &dataset);
    let inputs = load_inputs(&cfg).unwrap();
    let residual =
        reference_residual(&inputs, prosumage_core::fleet::FleetSpec::default()).unwrap();
    assert_eq!(
        residual.residual.values(),
        inputs.network_demand.values(),
        "zero-prosumage residual must equal network demand exactly"
    );

    // system cost of a reference equals the LP objective exactly
    let sector = sector_stage(
        &cfg,
        &inputs,
        &residual,
        ResShareChoice::Fixed(0.49),
        1.0,
        1.0,
    )
    .unwrap();
    let cost = system_cost(
        &sector.solution,
        &FleetInvestments::empty(),
        cfg.end_year,
        cfg.interest_rate,
    );
    assert_eq!(cost.total(), sector.solution.objective);

    // delta of a scenario against itself is zero in every field
    let delta = delta_report(
        &sector.scenario,
        &sector.solution,
        &cost,
        &FleetCapacities::default(),
        &sector.scenario,
        &sector.solution,
        &cost,
    )
    .unwrap();
    for t in &delta.technologies {
        assert_eq!(t.capacity_mw, 0.0);
        assert_eq!(t.annual_generation_mwh, 0.0);
        assert_eq!(t.energy_capacity_mwh.unwrap_or(0.0), 0.0);
    }
    assert_eq!(delta.co2_tonnes, 0.0);
    assert_eq!(delta.system_cost_aud, 0.0);

    // and a non-trivial single battery annuity lands on the worked value
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
    let with = system_cost(&sector.solution, &one_battery, 2030, 0.04);
    assert!((with.household_battery_annuities_aud - 616.45).abs() < 0.01);

    pass(
        "criterion 7 (reference identities)",
        "residual == network bit-exact; system_cost(ref) == objective; delta(x, x) == 0".into(),
    );
}

/// Criterion 8: two matrix runs over the same config and inputs produce
/// bit-identical output trees.
#[test]
fn criterion_08_matrix_determinism() {
    let dataset = generate(&SynthConfig {
        n_households: 2,
        ..Default::default()
    });
    let (base_cfg, _guard) = synthetic_run_config("acceptance-det", &dataset);
    let mut digests = Vec::new();
    for run in 0..2 {
        let mut cfg = base_cfg.clone();
        cfg.out_dir = base_cfg.out_dir.with_file_name(format!("out{run}"));
        cfg.fit_fractions = vec![0.25];
        cfg.res_shares = vec![ResShareChoice::Fixed(0.49)];
        cfg.backend = BackendChoice::Clarabel;
        let report = run_matrix(&cfg).unwrap();
        assert!(
            report.all_ok(),
            "{:?}",
            report
                .outcomes
                .iter()
                .filter(|o| o.result.is_err())
                .collect::<Vec<_>>()
        );
        digests.push(runner::digest_tree(&cfg.out_dir).unwrap());
    }
    assert_eq!(digests[0], digests[1], "output trees differ between runs");
    pass(
        "criterion 8 (matrix determinism)",
        format!("two runs, identical tree digest {:016x}", digests[0]),
    );
}

/// The matrix planner produces the documented cell counts (the spec's worked
/// example: 12 sector solves and 3 household runs for the default matrix).
#[test]
fn matrix_plan_counts_match_the_design() {
    let dataset = generate(&SynthConfig {
        n_households: 2,
        ..Default::default()
    });
    let (cfg, _guard) = synthetic_run_config("acceptance-plan", &dataset);
    let plan = plan_matrix(&cfg);
    assert_eq!(plan.sector_solves(), 12);
    assert_eq!(plan.household_stages.len(), 3);
    assert_eq!(
        plan.cells
            .iter()
            .filter(|c| c.kind == CellKind::Reference)
            .count(),
        3
    );
    pass(
        "matrix plan counts",
        "default matrix plans 12 sector solves over 3 household stages".into(),
    );
}

// ---------------------------------------------------------------------------
// Tier 2 - reproduction mode
// ---------------------------------------------------------------------------

struct Reproduction {
    cfg: RunConfig,
    inputs: runner::RunInputs,
}

fn reproduction() -> Option<&'static Reproduction> {
    static DATA: OnceLock<Option<Reproduction>> = OnceLock::new();
    DATA.get_or_init(|| {
        let dir = PathBuf::from(std::env::var_os("PROSUMAGE_REPRODUCTION_DATA")?);
        let text = "profiles = households.csv\nnetwork_demand = network_demand.csv\n\
                    availability = availability.csv\ncatalog = catalog.csv\n\
                    cost_curves = cost_curves.csv\nout_dir = out\nreproduction_mode = true\n";
        let cfg = RunConfig::from_str_with_base(text, &dir).ok()?;
        let inputs = load_inputs(&cfg).ok()?;
        Some(Reproduction { cfg, inputs })
    })
    .as_ref()
}

fn reproduction_or_skip() -> &'static Reproduction {
    reproduction().expect(
        "set PROSUMAGE_REPRODUCTION_DATA to a directory holding the fetched public datasets \
         (households.csv, network_demand.csv, availability.csv, catalog.csv, cost_curves.csv)",
    )
}

fn household_means(stage: &runner::HouseholdStage) -> (f64, f64) {
    (stage.mean_final_pv_kwp, stage.mean_final_battery_kwh)
}

/// Criterion 9: under the 50% FiT every household converges to exactly
/// 5.0 kWp of PV and no battery by 2030.
#[test]
#[ignore = "reproduction mode: needs fetched public datasets"]
fn criterion_09_fit50_endpoint() {
    let repro = reproduction_or_skip();
    let stage = household_stage(&repro.cfg, &repro.inputs, 0.5, 1.0, 1.0).unwrap();
    let specs = EquipmentSpecs::<f64>::default();
    for run in &stage.runs {
        let pv = run
            .final_state
            .nominal_pv_kwp(repro.cfg.end_year, &specs.pv);
        let battery = run
            .final_state
            .nominal_battery_kwh(repro.cfg.end_year, &specs.battery);
        assert_eq!(pv, 5.0, "{} ended at {pv} kWp", run.household_id);
        assert_eq!(
            battery, 0.0,
            "{} ended with {battery} kWh",
            run.household_id
        );
    }
    pass(
        "criterion 9 (FiT50 endpoint)",
        format!(
            "{} households all at exactly 5.0 kWp / 0 kWh",
            stage.runs.len()
        ),
    );
}

/// Criterion 10: cohort means under the 25% and 0% FiT land on the published
/// averages within the stated bands.
#[test]
#[ignore = "reproduction mode: needs fetched public datasets"]
fn criterion_10_fit25_fit0_means() {
    let repro = reproduction_or_skip();
    let fit25 = household_stage(&repro.cfg, &repro.inputs, 0.25, 1.0, 1.0).unwrap();
    let (pv25, bat25) = household_means(&fit25);
    assert!((pv25 - 5.3).abs() <= 0.5, "FiT25 mean PV {pv25}");
    assert!((bat25 - 5.9).abs() <= 1.5, "FiT25 mean battery {bat25}");
    let fit0 = household_stage(&repro.cfg, &repro.inputs, 0.0, 1.0, 1.0).unwrap();
    let (pv0, bat0) = household_means(&fit0);
    assert!((pv0 - 4.7).abs() <= 0.5, "FiT0 mean PV {pv0}");
    assert!((bat0 - 8.7).abs() <= 1.5, "FiT0 mean battery {bat0}");
    pass(
        "criterion 10 (FiT25/FiT0 means)",
        format!("FiT25 {pv25:.2} kWp / {bat25:.2} kWh; FiT0 {pv0:.2} kWp / {bat0:.2} kWh"),
    );
}

/// Criterion 11: the reference residual demand is 18.1 TWh within 2% and the
/// prosumage residuals rank FiT25 < FiT50 < FiT0 < reference.
#[test]
#[ignore = "reproduction mode: needs fetched public datasets"]
fn criterion_11_residual_levels_and_ranking() {
    let repro = reproduction_or_skip();
    let fleet = prosumage_core::fleet::FleetSpec::default();
    let reference = reference_residual(&repro.inputs, fleet).unwrap();
    let reference_twh = reference.residual.annual_sum() / 1e6;
    assert!(
        (reference_twh - 18.1).abs() <= 0.02 * 18.1,
        "reference residual {reference_twh} TWh"
    );
    let mut annual = std::collections::BTreeMap::new();
    for fit in [0.0, 0.25, 0.5] {
        let stage = household_stage(&repro.cfg, &repro.inputs, fit, 1.0, 1.0).unwrap();
        let residual = residual_stage(&stage, &repro.inputs, fleet).unwrap();
        annual.insert((fit * 100.0) as i64, residual.residual.annual_sum() / 1e6);
    }
    let (r0, r25, r50) = (annual[&0], annual[&25], annual[&50]);
    assert!(
        r25 < r50 && r50 < r0 && r0 < reference_twh,
        "ranking violated: FiT25 {r25}, FiT50 {r50}, FiT0 {r0}, reference {reference_twh}"
    );
    pass(
        "criterion 11 (residual levels)",
        format!("reference {reference_twh:.2} TWh; FiT25 {r25:.2} < FiT50 {r50:.2} < FiT0 {r0:.2}"),
    );
}

/// Criterion 12: reference capacities at the 39% share match the published
/// optimum within 10%: utility PV 1.16 GWp, wind 1.61 GW, battery 0.21 GW and
/// 0.62 GWh.
#[test]
#[ignore = "reproduction mode: needs fetched public datasets"]
fn criterion_12_reference_39_capacities() {
    let repro = reproduction_or_skip();
    let fleet = prosumage_core::fleet::FleetSpec::default();
    let residual = reference_residual(&repro.inputs, fleet).unwrap();
    let sector = sector_stage(
        &repro.cfg,
        &repro.inputs,
        &residual,
        ResShareChoice::Fixed(0.39),
        1.0,
        1.0,
    )
    .unwrap();
    let cap = |name: &str| sector.solution.technology(name).unwrap().capacity_mw;
    let pv = cap("pv");
    let wind = cap("wind");
    let battery = cap("li-ion");
    let battery_mwh = sector
        .solution
        .technology("li-ion")
        .unwrap()
        .energy_capacity_mwh
        .unwrap();
    assert!((pv - 1_160.0).abs() <= 116.0, "utility PV {pv} MW");
    assert!((wind - 1_610.0).abs() <= 161.0, "wind {wind} MW");
    assert!((battery - 210.0).abs() <= 21.0, "battery {battery} MW");
    assert!(
        (battery_mwh - 620.0).abs() <= 62.0,
        "battery {battery_mwh} MWh"
    );
    pass(
        "criterion 12 (reference 39% capacities)",
        format!("pv {pv:.0} MW, wind {wind:.0} MW, battery {battery:.0} MW / {battery_mwh:.0} MWh"),
    );
}

fn prosumage_cell(
    repro: &Reproduction,
    fit: f64,
    share: f64,
) -> (
    runner::SectorStage,
    runner::SectorStage,
    FleetCapacities<f64>,
    prosumage_core::analytics::SystemCost<f64>,
    prosumage_core::analytics::SystemCost<f64>,
) {
    let fleet = prosumage_core::fleet::FleetSpec::default();
    let stage = household_stage(&repro.cfg, &repro.inputs, fit, 1.0, 1.0).unwrap();
    let residual = residual_stage(&stage, &repro.inputs, fleet).unwrap();
    let scenario = sector_stage(
        &repro.cfg,
        &repro.inputs,
        &residual,
        ResShareChoice::Fixed(share),
        1.0,
        1.0,
    )
    .unwrap();
    let reference = sector_stage(
        &repro.cfg,
        &repro.inputs,
        &reference_residual(&repro.inputs, fleet).unwrap(),
        ResShareChoice::Fixed(share),
        1.0,
        1.0,
    )
    .unwrap();
    let investments = runner::fleet_investments(&stage, fleet);
    let cost = system_cost(
        &scenario.solution,
        &investments,
        repro.cfg.end_year,
        repro.cfg.interest_rate,
    );
    let ref_cost = system_cost(
        &reference.solution,
        &FleetInvestments::empty(),
        repro.cfg.end_year,
        repro.cfg.interest_rate,
    );
    let capacities = runner::fleet_capacities(&stage, fleet);
    (scenario, reference, capacities, cost, ref_cost)
}

/// Criterion 13: FiT50 substitution ratios: 0.38 utility PV and 0.20 wind per
/// household PV at the 39% share; 0.70 and 0.08 at the 59% share, within 0.1.
#[test]
#[ignore = "reproduction mode: needs fetched public datasets"]
fn criterion_13_substitution_ratios() {
    let repro = reproduction_or_skip();
    let mut reported = Vec::new();
    for (share, expect_pv, expect_wind) in [(0.39, 0.38, 0.20), (0.59, 0.70, 0.08)] {
        let (scenario, reference, capacities, cost, ref_cost) = prosumage_cell(repro, 0.5, share);
        let delta = delta_report(
            &scenario.scenario,
            &scenario.solution,
            &cost,
            &capacities,
            &reference.scenario,
            &reference.solution,
            &ref_cost,
        )
        .unwrap();
        let pv_ratio = delta.ratios.utility_pv_per_household_pv.unwrap();
        let wind_ratio = delta.ratios.wind_per_household_pv.unwrap();
        assert!(
            (pv_ratio - expect_pv).abs() <= 0.1,
            "share {share}: pv ratio {pv_ratio}"
        );
        assert!(
            (wind_ratio - expect_wind).abs() <= 0.1,
            "share {share}: wind ratio {wind_ratio}"
        );
        reported.push(format!(
            "{share}: pv {pv_ratio:.2} (target {expect_pv}), wind {wind_ratio:.2} (target {expect_wind})"
        ));
    }
    pass("criterion 13 (substitution ratios)", reported.join("; "));
}

/// Criterion 14: directional claims hold in every prosumage cell: utility PV
/// capacity falls, system cost rises, coal generation weakly rises in the
/// battery scenarios at fixed share, and the endogenous run lands just below
/// a 59% share within 3 points.
#[test]
#[ignore = "reproduction mode: needs fetched public datasets"]
fn criterion_14_directional_claims() {
    let repro = reproduction_or_skip();
    for fit in [0.0, 0.25, 0.5] {
        for share in [0.39, 0.49, 0.59] {
            let (scenario, reference, capacities, cost, ref_cost) =
                prosumage_cell(repro, fit, share);
            let delta = delta_report(
                &scenario.scenario,
                &scenario.solution,
                &cost,
                &capacities,
                &reference.scenario,
                &reference.solution,
                &ref_cost,
            )
            .unwrap();
            let pv_delta = delta
                .technologies
                .iter()
                .find(|t| t.name == "pv")
                .unwrap()
                .capacity_mw;
            assert!(
                pv_delta <= 1e-6,
                "fit {fit} share {share}: utility PV rose {pv_delta}"
            );
            assert!(
                delta.system_cost_aud > 0.0,
                "fit {fit} share {share}: system cost fell"
            );
            if fit <= 0.25 {
                let coal_delta = delta
                    .technologies
                    .iter()
                    .find(|t| t.name == "coal")
                    .unwrap()
                    .annual_generation_mwh;
                assert!(
                    coal_delta >= -1e-6,
                    "fit {fit} share {share}: coal generation fell {coal_delta}"
                );
            }
        }
    }
    // endogenous run realizes a share just below 59%
    let fleet = prosumage_core::fleet::FleetSpec::default();
    let residual = reference_residual(&repro.inputs, fleet).unwrap();
    let sector = sector_stage(
        &repro.cfg,
        &repro.inputs,
        &residual,
        ResShareChoice::Endogenous,
        1.0,
        1.0,
    )
    .unwrap();
    let share = sector.solution.realized_res_share;
    assert!(
        (share - 0.59).abs() <= 0.03,
        "endogenous share {share} not within 59% +/- 3pp"
    );
    pass(
        "criterion 14 (directional claims)",
        format!("all 9 prosumage cells directionally consistent; endogenous share {share:.3}"),
    );
}

/// Criterion 15: system-cost increases land near the published levels:
/// roughly 23% for FiT0 and 6-7% for FiT50, within 5 percentage points.
#[test]
#[ignore = "reproduction mode: needs fetched public datasets"]
fn criterion_15_system_cost_increases() {
    let repro = reproduction_or_skip();
    let mut reported = Vec::new();
    for (fit, target) in [(0.0, 23.0), (0.5, 6.5)] {
        for share in [0.39, 0.49, 0.59] {
            let (scenario, reference, capacities, cost, ref_cost) =
                prosumage_cell(repro, fit, share);
            let delta = delta_report(
                &scenario.scenario,
                &scenario.solution,
                &cost,
                &capacities,
                &reference.scenario,
                &reference.solution,
                &ref_cost,
            )
            .unwrap();
            assert!(
                (delta.system_cost_percent - target).abs() <= 5.0,
                "fit {fit} share {share}: cost increase {:.1}% vs target {target}%",
                delta.system_cost_percent
            );
            reported.push(format!(
                "fit {fit} share {share}: +{:.1}%",
                delta.system_cost_percent
            ));
        }
    }
    pass("criterion 15 (system-cost increases)", reported.join("; "));
}
