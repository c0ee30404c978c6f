//! The `verify` subcommand: property and oracle checks on the bundled
//! synthetic dataset, one pass/fail line each.

use crate::household::{
    evaluate_grid, invest_decision, simulate_dispatch, EconomicContext, EquipmentSpecs,
    EvaluationGrid, HouseholdState, TariffSchedule,
};
use crate::lp::{LinearProgram, Row, RowLabel, VarLabel};
use crate::sector::{
    build_lp, default_catalog, parse_catalog_from_reader, solve_scenario, validate_solution,
    write_catalog, ResShare, SectorScenario, TechKind, Technology,
};
use crate::solver::{BackendChoice, ClarabelBackend, DenseSimplex, LpBackend};
use crate::synth::{generate, SynthConfig};
use crate::timeseries::resample_pairs;

use super::config::{ResShareChoice, RunConfig};
use super::oracles;
use super::outputs::digest_tree;
use super::pipeline::run_matrix;

/// One verification check.
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(checks: &mut Vec<Check>, name: &'static str, passed: bool, detail: String) {
    checks.push(Check {
        name,
        passed,
        detail,
    });
}

/// Run the bundled property suite. Prints nothing; the CLI renders the
/// report.
pub fn verify() -> VerifyReport {
    let mut checks = Vec::new();
    let dataset = generate(&SynthConfig::default());
    let specs = EquipmentSpecs::<f64>::default();

    // 1. resampling conserves energy
    {
        let series = dataset.profiles[3].demand();
        let hourly = series.resample_to_hourly().expect("half-hourly input");
        let delta = (hourly.annual_sum() - series.annual_sum()).abs();
        let bound = 1e-9 * series.annual_sum().abs();
        check(
            &mut checks,
            "resampling conserves energy",
            delta <= bound,
            format!("|sum(out) - sum(in)| = {delta:.3e} <= {bound:.3e}"),
        );
        let pairs = resample_pairs(&[1.0, 2.0, 0.5, 0.5]);
        check(
            &mut checks,
            "pairwise resampling example",
            pairs == vec![3.0, 1.0],
            format!("{pairs:?}"),
        );
    }

    // 2. dispatch balance identities on synthetic data
    {
        let mut state = HouseholdState::new();
        state.add_pv(2019, 4.0);
        state.add_battery(2019, 8.0);
        let mut worst = 0.0f64;
        let mut steps = 0usize;
        for profile in dataset.profiles.iter().take(2) {
            let result = simulate_dispatch(profile, &state, &specs, 2022).expect("dispatch");
            let demand = profile.demand().values();
            let pv_usable = state.usable_pv_kwp(2022, &specs.pv);
            for t in 0..demand.len() {
                let generation = pv_usable * profile.pv_yield().values()[t];
                let lhs_gen = result.self_consumption[t]
                    + result.battery_charge_ac[t]
                    + result.grid_export[t];
                let lhs_load = result.self_consumption[t]
                    + result.battery_discharge_ac[t]
                    + result.grid_import[t];
                worst = worst
                    .max((generation - lhs_gen).abs())
                    .max((demand[t] - lhs_load).abs());
                steps += 1;
            }
        }
        check(
            &mut checks,
            "dispatch balance identities",
            worst <= 1e-9,
            format!("worst residual {worst:.3e} kWh over {steps} steps"),
        );
    }

    // 3. annual round-trip efficiency identity (needs a year that ends
    // drained, so heavy evening demand follows the midday surplus)
    {
        let mut demand = vec![0.0f64; 17_520];
        let mut pv = vec![0.0f64; 17_520];
        for day in 0..365 {
            for step in 0..48 {
                let idx = day * 48 + step;
                pv[idx] = if (16..32).contains(&step) { 0.35 } else { 0.0 };
                demand[idx] = if (34..46).contains(&step) { 0.9 } else { 0.05 };
            }
        }
        let profile = crate::timeseries::ProfileSet::new(
            "drain".into(),
            crate::timeseries::TimeSeries::new(
                2019,
                crate::timeseries::Resolution::HalfHourly,
                crate::timeseries::Unit::KilowattHoursPerStep,
                demand,
            )
            .expect("demand"),
            crate::timeseries::TimeSeries::new(
                2019,
                crate::timeseries::Resolution::HalfHourly,
                crate::timeseries::Unit::KilowattHoursPerStep,
                pv,
            )
            .expect("pv"),
        )
        .expect("profile");
        let mut state = HouseholdState::new();
        state.add_pv(2019, 2.0);
        state.add_battery(2019, 5.0);
        let result = simulate_dispatch(&profile, &state, &specs, 2019).expect("dispatch");
        let final_soc = *result.state_of_charge.last().unwrap();
        let ratio = result.totals.discharge_ac / result.totals.charge_ac;
        let passed = final_soc.abs() < 1e-9 && (ratio - 0.92).abs() <= 1e-6 * 0.92;
        check(
            &mut checks,
            "annual battery round trip",
            passed,
            format!("discharge/charge = {ratio:.9}, final SoC {final_soc:.2e}"),
        );
    }

    // 4. NPV and DPP against the cumulative-table oracle
    {
        let npv: f64 = crate::finance::net_present_value(5_000.0, &[1_000.0; 10], 0.05);
        let (oracle_npv, _) = oracles::oracle_npv_dpp(5_000.0, 1_000.0, 0.05, 10);
        let dpp = crate::finance::discounted_payback(3_000.0, &[1_000.0; 10], 0.05);
        let (_, oracle_dpp) = oracles::oracle_npv_dpp(3_000.0, 1_000.0, 0.05, 10);
        let dpp_years = dpp.years().unwrap_or(f64::NAN);
        let passed = (npv - 2_721.73).abs() < 1e-2
            && (npv - oracle_npv).abs() < 1e-9
            && (dpp_years - 3.336).abs() < 1e-3
            && (dpp_years - oracle_dpp.unwrap()).abs() < 1e-12;
        check(
            &mut checks,
            "NPV and DPP oracles",
            passed,
            format!("npv {npv:.2} (expect 2721.73), dpp {dpp_years:.3} (expect 3.336)"),
        );
    }

    // 5. annuity amortisation values
    {
        let ccgt: f64 = crate::finance::annuity(1_254_000.0, 25.0, 0.04);
        let battery: f64 = crate::finance::annuity(5_000.0, 10.0, 0.04);
        let passed = (ccgt - 80_271.0).abs() < 1.0 && (battery - 616.45).abs() < 0.01;
        check(
            &mut checks,
            "annuity amortisation table",
            passed,
            format!("ccgt {ccgt:.0} AUD/MW/yr, 5k battery {battery:.2} AUD/yr"),
        );
    }

    // 6. the two-hour toy on both backends
    {
        let toy = toy_lp();
        let mut passed = true;
        let mut detail = String::new();
        for backend in [
            Box::new(DenseSimplex::default()) as Box<dyn LpBackend>,
            Box::new(ClarabelBackend::default()),
        ] {
            match backend.solve(&toy) {
                Ok(sol) => {
                    let gap = (sol.dual_objective(&toy) - sol.objective).abs();
                    let ok = (sol.objective - 35.0).abs() < 1e-6
                        && (sol.eq_duals[0] - 5.0).abs() < 1e-6
                        && (sol.eq_duals[1] - 15.0).abs() < 1e-6
                        && gap <= 1e-6 * 35.0;
                    passed &= ok;
                    detail.push_str(&format!(
                        "{}: obj {:.6} duals [{:.4}, {:.4}] gap {:.1e}; ",
                        backend.name(),
                        sol.objective,
                        sol.eq_duals[0],
                        sol.eq_duals[1],
                        gap
                    ));
                }
                Err(e) => {
                    passed = false;
                    detail.push_str(&format!("{}: {e}; ", backend.name()));
                }
            }
        }
        check(&mut checks, "two-hour toy LP", passed, detail);
    }

    // 7. 48-hour three-technology instance against brute force
    {
        let (scenario, oracle_cost) = forty_eight_hour_instance();
        match solve_scenario(&scenario, &DenseSimplex::default()) {
            Ok(sol) => {
                let rel = (sol.objective - oracle_cost).abs() / oracle_cost;
                check(
                    &mut checks,
                    "48-hour brute-force cross-check",
                    rel <= 0.01,
                    format!(
                        "LP {:.2} vs grid search {:.2} ({:.3}% apart)",
                        sol.objective,
                        oracle_cost,
                        rel * 100.0
                    ),
                );
            }
            Err(e) => check(
                &mut checks,
                "48-hour brute-force cross-check",
                false,
                e.to_string(),
            ),
        }
    }

    // 8. full-year synthetic solve: residuals, duality gap, dual signs
    {
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
        .expect("full-year scenario");
        match solve_scenario(&scenario, &ClarabelBackend::default()) {
            Ok(sol) => {
                let lp = build_lp(&scenario).expect("full-year LP");
                let report = validate_solution(&lp, &sol.raw, 1e-6);
                let passed = report.is_clean() && report.min_balance_dual >= -1e-6;
                check(
                    &mut checks,
                    "full-year solve validation",
                    passed,
                    format!(
                        "{} violations, gap {:.2e}, min balance dual {:.2e}, share {:.4}",
                        report.violations.len(),
                        report.duality_gap_relative,
                        report.min_balance_dual,
                        sol.realized_res_share
                    ),
                );
            }
            Err(e) => check(
                &mut checks,
                "full-year solve validation",
                false,
                e.to_string(),
            ),
        }
    }

    // 9. investment argmax equals the independent enumeration
    {
        let econ = EconomicContext {
            discount_rate: 0.05,
            horizon_years: 10,
            dpp_threshold_years: 5.0,
            tariff: TariffSchedule::with_fit_fraction(0.25),
            costs: crate::household::CostCurves::from_raw(
                dataset.cost_curve_first_year,
                &dataset.pv_cost_raw,
                &dataset.battery_cost_raw,
                0.78,
                0.73,
            )
            .expect("curves"),
        };
        let grid = EvaluationGrid::default();
        let empty = HouseholdState::new();
        let mut matched = true;
        let mut grid_size = 0;
        for profile in dataset.profiles.iter().take(2) {
            let evals = evaluate_grid(profile, &empty, &econ, &specs, &grid, 2019);
            grid_size = evals.len();
            let production = invest_decision(profile, &empty, &econ, &specs, &grid, 2019);
            let oracle =
                oracles::oracle_invest_decision(profile, &[], &[], &econ, &specs, &grid, 2019);
            matched &= oracles::decisions_match(oracle, production.as_ref());
        }
        check(
            &mut checks,
            "investment argmax vs enumeration",
            matched && grid_size == 399,
            format!("grid {grid_size} points, decisions match: {matched}"),
        );
    }

    // 10. reference identities
    {
        let (cfg, _guard) = synthetic_run_config("verify-ref", &dataset);
        match super::pipeline::load_inputs(&cfg).and_then(|inputs| {
            let residual =
                super::pipeline::reference_residual(&inputs, crate::fleet::FleetSpec::default())?;
            Ok((inputs, residual))
        }) {
            Ok((inputs, residual)) => {
                let exact = residual.residual.values() == inputs.network_demand.values();
                check(
                    &mut checks,
                    "zero-prosumage residual identity",
                    exact,
                    "residual equals network demand bit for bit".into(),
                );
            }
            Err(e) => check(
                &mut checks,
                "zero-prosumage residual identity",
                false,
                e.to_string(),
            ),
        }
    }

    // 11. catalog validation rejects bad input
    {
        let mut catalog = default_catalog::<f64>();
        catalog[0].technology.overnight_cost_power = -1.0;
        let mut buffer = Vec::new();
        write_catalog(&mut buffer, &catalog).expect("write catalog");
        let rejected = parse_catalog_from_reader::<f64>(buffer.as_slice(), "<verify>").is_err();
        check(
            &mut checks,
            "catalog rejects negative cost",
            rejected,
            "negative overnight cost refused at parse".into(),
        );
    }

    // 12. matrix determinism on a small configuration
    {
        match determinism_check(&dataset) {
            Ok((a, b)) => check(
                &mut checks,
                "matrix determinism",
                a == b,
                format!("tree digests {a:016x} vs {b:016x}"),
            ),
            Err(e) => check(&mut checks, "matrix determinism", false, e),
        }
    }

    VerifyReport { checks }
}

fn toy_lp() -> LinearProgram<f64> {
    LinearProgram {
        n_vars: 3,
        objective: vec![10.0, 5.0, 5.0],
        var_labels: vec![
            VarLabel::Capacity { tech: 0 },
            VarLabel::Generation { tech: 0, hour: 0 },
            VarLabel::Generation { tech: 0, hour: 1 },
        ],
        eq_rows: vec![
            Row {
                label: RowLabel::Balance { hour: 0 },
                coeffs: vec![(1, 1.0)],
                rhs: 1.0,
            },
            Row {
                label: RowLabel::Balance { hour: 1 },
                coeffs: vec![(2, 1.0)],
                rhs: 2.0,
            },
        ],
        ub_rows: vec![
            Row {
                label: RowLabel::DispatchCap { tech: 0, hour: 0 },
                coeffs: vec![(1, 1.0), (0, -1.0)],
                rhs: 0.0,
            },
            Row {
                label: RowLabel::DispatchCap { tech: 0, hour: 1 },
                coeffs: vec![(2, 1.0), (0, -1.0)],
                rhs: 0.0,
            },
        ],
    }
}

/// 48 hours, one dispatchable plus wind and PV; the brute-force oracle
/// searches a capacity grid with merit-order dispatch inside.
pub fn forty_eight_hour_instance() -> (SectorScenario<f64>, f64) {
    let hours = 48usize;
    let demand: Vec<f64> = (0..hours)
        .map(|h| {
            let t = (h % 24) as f64;
            60.0 + 25.0 * (-(t - 18.0) * (t - 18.0) / 16.0).exp()
                + 10.0 * (-(t - 8.0) * (t - 8.0) / 10.0).exp()
        })
        .collect();
    let wind_avail: Vec<f64> = (0..hours)
        .map(|h| 0.25 + 0.2 * ((h as f64) * 0.7).sin().abs())
        .collect();
    let pv_avail: Vec<f64> = (0..hours)
        .map(|h| {
            let t = (h % 24) as f64;
            if (6.0..18.0).contains(&t) {
                (std::f64::consts::PI * (t - 6.0) / 12.0).sin() * 0.85
            } else {
                0.0
            }
        })
        .collect();

    let tech = |name: &str,
                kind: TechKind,
                renewable: bool,
                fixed_om: f64,
                variable_om: f64,
                availability: Option<Vec<f64>>| Technology::<f64> {
        name: name.into(),
        kind,
        overnight_cost_power: 0.0,
        overnight_cost_energy: 0.0,
        fixed_om,
        variable_om,
        fuel_cost: 0.0,
        efficiency: 1.0,
        lifetime_years: 25.0,
        capacity_lower_bound: 0.0,
        emission_factor: 0.0,
        renewable,
        availability,
    };
    // yearly fixed costs scaled so the 48-hour window still trades off
    // capacity against energy
    let gas = tech("gas", TechKind::Dispatchable, false, 40.0, 70.0, None);
    let wind = tech(
        "wind",
        TechKind::VariableRenewable,
        true,
        110.0,
        2.0,
        Some(wind_avail.clone()),
    );
    let pv = tech(
        "pv",
        TechKind::VariableRenewable,
        true,
        45.0,
        1.0,
        Some(pv_avail.clone()),
    );

    let oracle = oracles::brute_force_capacity_search(
        &demand,
        &oracles::BruteForceTech {
            annual_cost_per_mw: 40.0,
            marginal_cost: 70.0,
            availability: None,
        },
        &oracles::BruteForceTech {
            annual_cost_per_mw: 110.0,
            marginal_cost: 2.0,
            availability: Some(wind_avail),
        },
        &oracles::BruteForceTech {
            annual_cost_per_mw: 45.0,
            marginal_cost: 1.0,
            availability: Some(pv_avail),
        },
        220,
        440.0,
    );

    let scenario = SectorScenario::new(
        demand,
        vec![0.0; hours],
        ResShare::Endogenous,
        vec![gas, wind, pv],
        0.04,
    )
    .expect("48-hour scenario");
    (scenario, oracle)
}

/// Temp-dir run config over the bundled synthetic dataset.
pub fn synthetic_run_config(
    tag: &str,
    dataset: &crate::synth::SyntheticDataset,
) -> (RunConfig, TempDir) {
    let dir = std::env::temp_dir().join(format!(
        "prosumage-{tag}-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.subsec_nanos())
            .unwrap_or(0)
    ));
    crate::synth::write_dataset(dataset, &dir).expect("write synthetic dataset");
    let text = "profiles = households.csv\nnetwork_demand = network_demand.csv\n\
                availability = availability.csv\ncatalog = catalog.csv\n\
                cost_curves = cost_curves.csv\nout_dir = out\n";
    let cfg = RunConfig::from_str_with_base(text, &dir).expect("synthetic config");
    (cfg, TempDir(dir))
}

/// Removes the run directory on drop.
pub struct TempDir(pub std::path::PathBuf);

impl Drop for TempDir {
    fn drop(&mut self) {
        std::fs::remove_dir_all(&self.0).ok();
    }
}

fn determinism_check(dataset: &crate::synth::SyntheticDataset) -> Result<(u64, u64), String> {
    let small = crate::synth::SyntheticDataset {
        profiles: dataset.profiles[..2].to_vec(),
        network_demand: dataset.network_demand.clone(),
        wind_availability: dataset.wind_availability.clone(),
        pv_availability: dataset.pv_availability.clone(),
        cost_curve_first_year: dataset.cost_curve_first_year,
        pv_cost_raw: dataset.pv_cost_raw.clone(),
        battery_cost_raw: dataset.battery_cost_raw.clone(),
        catalog: dataset.catalog.clone(),
    };
    // one dataset, one config, two runs into separate out dirs: identical
    // config and inputs must give bit-identical CSV trees
    let (base_cfg, _guard) = synthetic_run_config("verify-det", &small);
    let mut digests = Vec::new();
    for run in 0..2 {
        let mut cfg = base_cfg.clone();
        cfg.out_dir = base_cfg.out_dir.with_file_name(format!("out{run}"));
        cfg.fit_fractions = vec![0.25];
        cfg.res_shares = vec![ResShareChoice::Fixed(0.49)];
        cfg.backend = BackendChoice::Clarabel;
        let report = run_matrix(&cfg).map_err(|e| e.to_string())?;
        if !report.all_ok() {
            let failures: Vec<String> = report
                .outcomes
                .iter()
                .filter_map(|o| o.result.as_ref().err().map(|e| format!("{}: {e}", o.name)))
                .collect();
            return Err(format!("matrix cells failed: {}", failures.join("; ")));
        }
        digests.push(digest_tree(&cfg.out_dir).map_err(|e| e.to_string())?);
    }
    Ok((digests[0], digests[1]))
}
