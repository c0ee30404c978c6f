//! End-to-end pipeline test over a small synthetic cohort: runs one matrix
//! cell and checks the exported file contracts.

use prosumage_core::runner::{run_matrix, synthetic_run_config, ResShareChoice};
use prosumage_core::solver::BackendChoice;
use prosumage_core::synth::{generate, SynthConfig};
use prosumage_core::timeseries::{read_hourly_csv, Unit};

#[test]
fn single_cell_matrix_writes_the_contract_files() {
    let dataset = generate(&SynthConfig {
        n_households: 3,
        ..Default::default()
    });
    let (mut cfg, _guard) = synthetic_run_config("pipeline", &dataset);
    cfg.fit_fractions = vec![0.5];
    cfg.res_shares = vec![ResShareChoice::Fixed(0.49)];
    cfg.backend = BackendChoice::Clarabel;

    let report = run_matrix(&cfg).expect("matrix run");
    assert!(
        report.all_ok(),
        "{:?}",
        report
            .outcomes
            .iter()
            .filter(|o| o.result.is_err())
            .collect::<Vec<_>>()
    );
    assert_eq!(report.outcomes.len(), 2); // the cell and its reference

    let out = &cfg.out_dir;
    assert!(out.join("manifest.txt").exists());
    assert!(out.join("summary.csv").exists());

    // household stage exports
    let household_dir = out.join("households/fit50_pv100_bat100");
    for file in [
        "decisions.csv",
        "net_grid_final_year.csv",
        "fleet_investments.csv",
    ] {
        assert!(household_dir.join(file).exists(), "{file} missing");
    }
    let decisions = std::fs::read_to_string(household_dir.join("decisions.csv")).unwrap();
    assert!(
        decisions.starts_with("household,year,added_pv_kwp,added_battery_kwh,npv_aud,dpp_years")
    );
    assert!(
        decisions.lines().count() > 1,
        "no investment decisions recorded"
    );

    // the residual contract file re-reads as a valid hourly MWh series
    let cell = out.join("cells/fit50_res49_pv100_bat100_n500k");
    let residual =
        read_hourly_csv::<f64>(&cell.join("residual.csv"), Unit::MegawattHoursPerStep).unwrap();
    assert_eq!(residual.len(), 8_760);
    assert!(residual.annual_sum() < dataset.network_demand.annual_sum());

    // sector exports
    for file in [
        "capacities.csv",
        "dispatch.csv",
        "duals.csv",
        "delta.csv",
        "rldc.csv",
        "prices.csv",
        "co2.csv",
        "system_cost.csv",
        "companions.csv",
    ] {
        assert!(cell.join(file).exists(), "{file} missing");
    }
    let duals = std::fs::read_to_string(cell.join("duals.csv")).unwrap();
    assert_eq!(duals.lines().count(), 8_761); // header + one row per hour
    let capacities = std::fs::read_to_string(cell.join("capacities.csv")).unwrap();
    assert!(capacities.contains("wind"));
    assert!(capacities.contains("li-ion"));

    // the reference cell also carries its solution exports
    let reference = out.join("cells/ref_res49_pv100_bat100");
    assert!(reference.join("capacities.csv").exists());
    assert!(reference.join("duals.csv").exists());
    // zero-prosumage residual equals the network demand file content
    let ref_residual =
        read_hourly_csv::<f64>(&reference.join("residual.csv"), Unit::MegawattHoursPerStep)
            .unwrap();
    assert_eq!(ref_residual.values(), dataset.network_demand.values());
}
