//! The pipeline stages behind the CLI: input loading, the household
//! investment stage, residual construction, the sector solve and per-cell
//! analytics, plus the matrix planner/executor.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::{
    co2_report, customer_segments, delta_report, rldc_decomposition, system_cost, weighted_price,
    FleetCapacities, FleetInvestments, InvestmentRecord, SystemCost,
};
use crate::fleet::{
    build_residual, representative_profile, FleetSpec, RepresentativeProfile, ResidualDemand,
};
use crate::household::{
    run_household, CostCurves, EconomicContext, EquipmentSpecs, EvaluationGrid, HouseholdRun,
    TariffSchedule,
};
use crate::sector::{
    build_lp, parse_catalog, solve_scenario, validate_solution, CatalogEntry, ResShare,
    SectorScenario, SectorSolution, TechKind, Technology,
};
use crate::timeseries::{
    ingest_profiles, read_hourly_csv, read_hourly_table, timestamp_of_step, ColumnSchema,
    ProfileSet, RejectedHousehold, Resolution, TimeSeries, Unit,
};

use super::config::{ResShareChoice, RunConfig};
use super::outputs::{digest_file, fnv1a, write_atomic, Csv, OutputLayout};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
    #[error(transparent)]
    Ingest(#[from] crate::timeseries::IngestError),
    #[error(transparent)]
    Series(#[from] crate::timeseries::TimeSeriesError),
    #[error(transparent)]
    Sector(#[from] crate::sector::SectorError),
    #[error(transparent)]
    Fleet(#[from] crate::fleet::FleetError),
    #[error(transparent)]
    Dispatch(#[from] crate::household::DispatchError),
    #[error(transparent)]
    Analytics(#[from] crate::analytics::AnalyticsError),
    #[error(transparent)]
    Spec(#[from] crate::household::SpecError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Stage(String),
}

/// All inputs, loaded and validated before any compute.
pub struct RunInputs {
    pub profiles: Vec<ProfileSet<f64>>,
    pub rejected: Vec<RejectedHousehold>,
    pub network_demand: TimeSeries<f64>,
    pub technologies: Vec<Technology<f64>>,
    pub cost_curves: CostCurves<f64>,
    /// `(label, path, fnv64)` per input file.
    pub digests: Vec<(String, String, u64)>,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<RunInputs, RunnerError> {
    let report = ingest_profiles::<f64>(&cfg.profiles, &ColumnSchema::default())?;
    if report.profiles.is_empty() {
        return Err(RunnerError::Stage(
            "no complete household profiles after gap filtering".into(),
        ));
    }
    let network_demand = read_hourly_csv::<f64>(&cfg.network_demand, Unit::MegawattHoursPerStep)?;
    let availability = read_hourly_table::<f64>(&cfg.availability, Unit::Availability)?;
    let catalog: Vec<CatalogEntry<f64>> = parse_catalog(&cfg.catalog)?;

    let mut technologies = Vec::with_capacity(catalog.len());
    for entry in catalog {
        let mut tech = entry.technology;
        if let Some(column) = entry.availability_column {
            let series = availability
                .iter()
                .find(|(name, _)| *name == column)
                .map(|(_, s)| s)
                .ok_or_else(|| {
                    RunnerError::Stage(format!(
                        "technology {} needs availability column {column:?}, not in {}",
                        tech.name,
                        cfg.availability.display()
                    ))
                })?;
            tech.availability = Some(series.values().to_vec());
        }
        tech.validate(network_demand.len())?;
        technologies.push(tech);
    }

    let cost_curves =
        read_cost_curves(&cfg.cost_curves, cfg.pv_cost_scale, cfg.battery_cost_scale)?;
    cost_curves.ensure_covers(cfg.start_year, cfg.end_year)?;

    let mut digests = Vec::new();
    for (label, path) in [
        ("profiles", &cfg.profiles),
        ("network_demand", &cfg.network_demand),
        ("availability", &cfg.availability),
        ("catalog", &cfg.catalog),
        ("cost_curves", &cfg.cost_curves),
    ] {
        digests.push((
            label.to_string(),
            path.display().to_string(),
            digest_file(path)?,
        ));
    }

    Ok(RunInputs {
        profiles: report.profiles,
        rejected: report.rejected,
        network_demand,
        technologies,
        cost_curves,
        digests,
    })
}

fn read_cost_curves(
    path: &Path,
    pv_scale: f64,
    battery_scale: f64,
) -> Result<CostCurves<f64>, RunnerError> {
    let text = std::fs::read_to_string(path)?;
    let mut first_year = None;
    let mut pv = Vec::new();
    let mut battery = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(RunnerError::Stage(format!(
                "{}: line {} needs year,pv,battery",
                path.display(),
                idx + 1
            )));
        }
        let year: i32 = fields[0].trim().parse().map_err(|_| {
            RunnerError::Stage(format!("{}: bad year on line {}", path.display(), idx + 1))
        })?;
        match first_year {
            None => first_year = Some(year),
            Some(first) => {
                if year != first + pv.len() as i32 {
                    return Err(RunnerError::Stage(format!(
                        "{}: years must be consecutive (line {})",
                        path.display(),
                        idx + 1
                    )));
                }
            }
        }
        let parse = |text: &str| -> Result<f64, RunnerError> {
            text.trim().parse().map_err(|_| {
                RunnerError::Stage(format!(
                    "{}: bad number on line {}",
                    path.display(),
                    idx + 1
                ))
            })
        };
        pv.push(parse(fields[1])?);
        battery.push(parse(fields[2])?);
    }
    let first_year =
        first_year.ok_or_else(|| RunnerError::Stage(format!("{}: empty", path.display())))?;
    Ok(CostCurves::from_raw(
        first_year,
        &pv,
        &battery,
        pv_scale,
        battery_scale,
    )?)
}

fn economic_context(
    cfg: &RunConfig,
    inputs: &RunInputs,
    fit: f64,
    pv_mult: f64,
    battery_mult: f64,
) -> EconomicContext<f64> {
    let mut tariff = TariffSchedule::with_fit_fraction(fit);
    tariff.base_year = cfg.start_year;
    tariff.fixed_daily_charge = cfg.fixed_daily_charge;
    EconomicContext {
        discount_rate: cfg.discount_rate,
        horizon_years: cfg.horizon_years,
        dpp_threshold_years: cfg.dpp_threshold_years,
        tariff,
        costs: inputs.cost_curves.multiplied(pv_mult, battery_mult),
    }
}

/// Cohort outcome for one (FiT, cost-multiplier) setting; reused across all
/// renewable shares and fleet sizes.
pub struct HouseholdStage {
    pub label: String,
    pub fit: f64,
    pub pv_mult: f64,
    pub battery_mult: f64,
    pub runs: Vec<HouseholdRun<f64>>,
    pub records: Vec<InvestmentRecord<f64>>,
    pub mean_final_pv_kwp: f64,
    pub mean_final_battery_kwh: f64,
}

pub fn household_stage(
    cfg: &RunConfig,
    inputs: &RunInputs,
    fit: f64,
    pv_mult: f64,
    battery_mult: f64,
) -> Result<HouseholdStage, RunnerError> {
    let econ = economic_context(cfg, inputs, fit, pv_mult, battery_mult);
    let specs = EquipmentSpecs::<f64>::default();
    let grid = EvaluationGrid::default();
    let years = cfg.start_year..=cfg.end_year;
    let runs: Result<Vec<HouseholdRun<f64>>, RunnerError> = inputs
        .profiles
        .par_iter()
        .map(|profile| {
            run_household(profile, &econ, &specs, &grid, years.clone()).map_err(RunnerError::from)
        })
        .collect();
    let runs = runs?;

    let mut records = Vec::new();
    let mut pv_total = 0.0;
    let mut battery_total = 0.0;
    for run in &runs {
        for decision in &run.decisions {
            records.push(InvestmentRecord {
                year: decision.year,
                pv_kwp: decision.added_pv_kwp,
                battery_kwh: decision.added_battery_kwh,
                pv_capex_aud: econ.costs.pv_cost(decision.year) * decision.added_pv_kwp,
                battery_capex_aud: econ.costs.battery_cost(decision.year)
                    * decision.added_battery_kwh,
            });
        }
        pv_total += run.final_state.nominal_pv_kwp(cfg.end_year, &specs.pv);
        battery_total += run
            .final_state
            .nominal_battery_kwh(cfg.end_year, &specs.battery);
    }
    let n = runs.len() as f64;
    Ok(HouseholdStage {
        label: format!(
            "{}_{}",
            RunConfig::fit_label(fit),
            RunConfig::multiplier_label(pv_mult, battery_mult)
        ),
        fit,
        pv_mult,
        battery_mult,
        runs,
        records,
        mean_final_pv_kwp: pv_total / n,
        mean_final_battery_kwh: battery_total / n,
    })
}

/// Residual demand for a prosumage cell.
pub fn residual_stage(
    stage: &HouseholdStage,
    inputs: &RunInputs,
    fleet: FleetSpec,
) -> Result<ResidualDemand<f64>, RunnerError> {
    let rep = representative_profile(&stage.runs)?.to_hourly()?;
    Ok(build_residual(&inputs.network_demand, &rep, fleet)?)
}

/// Residual demand for the no-prosumage reference: net equals underlying, so
/// the residual is the network demand bit for bit, with the household
/// companion series still populated for segment pricing.
pub fn reference_residual(
    inputs: &RunInputs,
    fleet: FleetSpec,
) -> Result<ResidualDemand<f64>, RunnerError> {
    let mut demand_sum = vec![0.0f64; inputs.profiles[0].demand().len()];
    for profile in &inputs.profiles {
        for (acc, v) in demand_sum.iter_mut().zip(profile.demand().values()) {
            *acc += *v;
        }
    }
    let n = inputs.profiles.len() as f64;
    for v in demand_sum.iter_mut() {
        *v /= n;
    }
    let demand = inputs.profiles[0].demand().with_values(demand_sum)?;
    let zeros = demand.with_values(vec![0.0; demand.len()])?;
    let rep = RepresentativeProfile {
        net_grid: demand.clone(),
        grid_import: demand.clone(),
        demand,
        pv_generation: zeros,
    };
    Ok(build_residual(
        &inputs.network_demand,
        &rep.to_hourly()?,
        fleet,
    )?)
}

fn technologies_with_multipliers(
    inputs: &RunInputs,
    pv_mult: f64,
    battery_mult: f64,
) -> Vec<Technology<f64>> {
    // the cost sensitivities move utility-scale PV and battery investment
    // costs together with the household curves
    inputs
        .technologies
        .iter()
        .cloned()
        .map(|mut tech| {
            if tech.name == "pv" {
                tech.overnight_cost_power *= pv_mult;
            }
            if tech.name == "li-ion" {
                tech.overnight_cost_power *= battery_mult;
                tech.overnight_cost_energy *= battery_mult;
            }
            tech
        })
        .collect()
}

/// One solved sector cell plus its validation report.
pub struct SectorStage {
    pub scenario: SectorScenario<f64>,
    pub solution: SectorSolution<f64>,
    pub validation_clean: bool,
    pub max_violation: f64,
}

pub fn sector_stage(
    cfg: &RunConfig,
    inputs: &RunInputs,
    residual: &ResidualDemand<f64>,
    res: ResShareChoice,
    pv_mult: f64,
    battery_mult: f64,
) -> Result<SectorStage, RunnerError> {
    let share = match res {
        ResShareChoice::Fixed(v) => ResShare::Fixed(v),
        ResShareChoice::Endogenous => ResShare::Endogenous,
    };
    let scenario = SectorScenario::from_residual(
        residual,
        share,
        technologies_with_multipliers(inputs, pv_mult, battery_mult),
        cfg.interest_rate,
    )?;
    let backend = cfg
        .backend
        .backend_for(build_lp(&scenario)?.counts().variables);
    let solution = solve_scenario(&scenario, backend.as_ref())?;
    let lp = build_lp(&scenario)?;
    let report = validate_solution(&lp, &solution.raw, 1e-6);
    let max_violation = report
        .violations
        .iter()
        .map(|v| v.residual / v.scale)
        .fold(0.0f64, f64::max);
    Ok(SectorStage {
        scenario,
        solution,
        validation_clean: report.is_clean(),
        max_violation,
    })
}

pub fn fleet_capacities(stage: &HouseholdStage, fleet: FleetSpec) -> FleetCapacities<f64> {
    let n = fleet.n_households as f64;
    FleetCapacities {
        pv_mw: n * stage.mean_final_pv_kwp / 1_000.0,
        battery_mw: n * stage.mean_final_battery_kwh / 2.5 / 1_000.0,
        battery_mwh: n * stage.mean_final_battery_kwh / 1_000.0,
    }
}

pub fn fleet_investments(stage: &HouseholdStage, fleet: FleetSpec) -> FleetInvestments<f64> {
    FleetInvestments {
        cohort_size: stage.runs.len(),
        n_households: fleet.n_households,
        records: stage.records.clone(),
        pv_lifetime_years: 25,
        battery_lifetime_years: 10,
    }
}

// ---------------------------------------------------------------------------
// Matrix planning and execution.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum CellKind {
    Reference,
    Prosumage { fit: f64, fleet: u64 },
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub name: String,
    pub kind: CellKind,
    pub res: ResShareChoice,
    pub pv_mult: f64,
    pub battery_mult: f64,
}

impl Cell {
    fn new(kind: CellKind, res: ResShareChoice, pv_mult: f64, battery_mult: f64) -> Cell {
        let mult = RunConfig::multiplier_label(pv_mult, battery_mult);
        let name = match kind {
            CellKind::Reference => format!("ref_{}_{}", res.label(), mult),
            CellKind::Prosumage { fit, fleet } => format!(
                "{}_{}_{}_n{}k",
                RunConfig::fit_label(fit),
                res.label(),
                mult,
                fleet / 1_000
            ),
        };
        Cell {
            name,
            kind,
            res,
            pv_mult,
            battery_mult,
        }
    }

    /// The reference cell this prosumage cell is compared against.
    pub fn reference_name(&self) -> String {
        format!(
            "ref_{}_{}",
            self.res.label(),
            RunConfig::multiplier_label(self.pv_mult, self.battery_mult)
        )
    }
}

/// The planned run: all cells plus the distinct household stages they need.
#[derive(Debug, Clone)]
pub struct MatrixPlan {
    pub cells: Vec<Cell>,
    /// Distinct `(fit, pv_mult, battery_mult)` pipelines.
    pub household_stages: Vec<(f64, f64, f64)>,
}

impl MatrixPlan {
    pub fn sector_solves(&self) -> usize {
        self.cells.len()
    }
}

/// Expand the config into cells. Cost multipliers vary one axis at a time
/// around the baseline; extra fleet sizes re-run the prosumage cells at
/// baseline costs, reusing the baseline references (the reference solve does
/// not depend on the fleet).
pub fn plan_matrix(cfg: &RunConfig) -> MatrixPlan {
    let base_fleet = cfg.fleet_sizes[0];
    let mut axes: Vec<(f64, f64)> = vec![(1.0, 1.0)];
    for pm in &cfg.pv_cost_multipliers {
        if (*pm - 1.0).abs() > 1e-12 {
            axes.push((*pm, 1.0));
        }
    }
    for bm in &cfg.battery_cost_multipliers {
        if (*bm - 1.0).abs() > 1e-12 {
            axes.push((1.0, *bm));
        }
    }

    let mut cells = Vec::new();
    let mut stages = Vec::new();
    for (pm, bm) in &axes {
        for res in &cfg.res_shares {
            cells.push(Cell::new(CellKind::Reference, *res, *pm, *bm));
        }
        for fit in &cfg.fit_fractions {
            stages.push((*fit, *pm, *bm));
            for res in &cfg.res_shares {
                cells.push(Cell::new(
                    CellKind::Prosumage {
                        fit: *fit,
                        fleet: base_fleet,
                    },
                    *res,
                    *pm,
                    *bm,
                ));
            }
        }
    }
    for fleet in cfg.fleet_sizes.iter().skip(1) {
        for fit in &cfg.fit_fractions {
            for res in &cfg.res_shares {
                cells.push(Cell::new(
                    CellKind::Prosumage {
                        fit: *fit,
                        fleet: *fleet,
                    },
                    *res,
                    1.0,
                    1.0,
                ));
            }
        }
    }
    MatrixPlan {
        cells,
        household_stages: stages,
    }
}

/// Outcome of one cell in a matrix run.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub name: String,
    pub result: Result<(), String>,
    pub skipped: bool,
}

#[derive(Debug)]
pub struct MatrixReport {
    pub run_digest: u64,
    pub outcomes: Vec<CellOutcome>,
}

impl MatrixReport {
    pub fn all_ok(&self) -> bool {
        self.outcomes.iter().all(|o| o.result.is_ok())
    }
}

#[derive(Debug, Clone)]
struct SummaryRow {
    cell: String,
    kind: String,
    objective: f64,
    system_cost_total: f64,
    co2_tonnes: f64,
    co2_intensity: f64,
    realized_res_share: f64,
    capacities: Vec<(String, f64, Option<f64>)>,
    household_pv_mw: f64,
    household_battery_mwh: f64,
}

/// Run the full matrix: manifest first, household stages next, then the
/// reference cells, then every prosumage cell with its analytics. Cells fail
/// independently; completed cells are skipped when re-run with identical
/// inputs and parameters.
pub fn run_matrix(cfg: &RunConfig) -> Result<MatrixReport, RunnerError> {
    let inputs = load_inputs(cfg)?;
    let plan = plan_matrix(cfg);
    let layout = OutputLayout::new(&cfg.out_dir);
    let run_digest = write_manifest(cfg, &inputs, &plan, &layout)?;

    // household stages, sequential outer loop (each is internally parallel)
    let mut stages: BTreeMap<(u64, u64, u64), HouseholdStage> = BTreeMap::new();
    for (fit, pm, bm) in &plan.household_stages {
        let key = stage_key(*fit, *pm, *bm);
        if stages.contains_key(&key) {
            continue;
        }
        let stage = household_stage(cfg, &inputs, *fit, *pm, *bm)?;
        write_household_outputs(&layout.household_dir(&stage.label), &stage)?;
        stages.insert(key, stage);
    }

    // references first; they are inputs to every prosumage cell
    let references: Mutex<BTreeMap<String, (SectorStage, SystemCost<f64>, ResidualDemand<f64>)>> =
        Mutex::new(BTreeMap::new());
    let reference_cells: Vec<&Cell> = plan
        .cells
        .iter()
        .filter(|c| c.kind == CellKind::Reference)
        .collect();
    let mut outcomes: Vec<CellOutcome> = Vec::new();
    let reference_outcomes: Vec<CellOutcome> = reference_cells
        .par_iter()
        .map(|cell| {
            let dir = layout.cell_dir(&cell.name);
            if cell_complete(&dir, run_digest) {
                // still need the solved reference in memory for the deltas
                match run_reference_cell(cfg, &inputs, cell) {
                    Ok(data) => {
                        references.lock().unwrap().insert(cell.name.clone(), data);
                        return CellOutcome {
                            name: cell.name.clone(),
                            result: Ok(()),
                            skipped: true,
                        };
                    }
                    Err(e) => {
                        return CellOutcome {
                            name: cell.name.clone(),
                            result: Err(e.to_string()),
                            skipped: false,
                        }
                    }
                }
            }
            match run_reference_cell(cfg, &inputs, cell).and_then(|data| {
                write_reference_outputs(&dir, cfg, cell, &data)?;
                mark_complete(&dir, run_digest)?;
                references.lock().unwrap().insert(cell.name.clone(), data);
                Ok(())
            }) {
                Ok(()) => CellOutcome {
                    name: cell.name.clone(),
                    result: Ok(()),
                    skipped: false,
                },
                Err(e) => CellOutcome {
                    name: cell.name.clone(),
                    result: Err(e.to_string()),
                    skipped: false,
                },
            }
        })
        .collect();
    outcomes.extend(reference_outcomes);

    // prosumage cells
    let references = references.into_inner().unwrap();
    let summaries: Mutex<BTreeMap<String, SummaryRow>> = Mutex::new(BTreeMap::new());
    {
        let mut lock = summaries.lock().unwrap();
        for (name, (stage, cost, _)) in &references {
            lock.insert(name.clone(), reference_summary(name, stage, cost));
        }
    }
    let prosumage_cells: Vec<&Cell> = plan
        .cells
        .iter()
        .filter(|c| c.kind != CellKind::Reference)
        .collect();
    let prosumage_outcomes: Vec<CellOutcome> = prosumage_cells
        .par_iter()
        .map(|cell| {
            let dir = layout.cell_dir(&cell.name);
            let CellKind::Prosumage { fit, fleet } = cell.kind else {
                unreachable!()
            };
            let stage = &stages[&stage_key(fit, cell.pv_mult, cell.battery_mult)];
            let reference = references.get(&cell.reference_name());
            let Some(reference) = reference else {
                return CellOutcome {
                    name: cell.name.clone(),
                    result: Err(format!(
                        "reference {} failed; cannot compute deltas",
                        cell.reference_name()
                    )),
                    skipped: false,
                };
            };
            if cell_complete(&dir, run_digest) {
                return match read_summary_row(&dir) {
                    Ok(row) => {
                        summaries.lock().unwrap().insert(cell.name.clone(), row);
                        CellOutcome {
                            name: cell.name.clone(),
                            result: Ok(()),
                            skipped: true,
                        }
                    }
                    Err(e) => CellOutcome {
                        name: cell.name.clone(),
                        result: Err(e.to_string()),
                        skipped: false,
                    },
                };
            }
            match run_prosumage_cell(cfg, &inputs, cell, stage, reference, fleet).and_then(|data| {
                write_prosumage_outputs(&dir, cfg, &data, reference)?;
                write_summary_row(&dir, &data.summary)?;
                mark_complete(&dir, run_digest)?;
                summaries
                    .lock()
                    .unwrap()
                    .insert(cell.name.clone(), data.summary);
                Ok(())
            }) {
                Ok(()) => CellOutcome {
                    name: cell.name.clone(),
                    result: Ok(()),
                    skipped: false,
                },
                Err(e) => CellOutcome {
                    name: cell.name.clone(),
                    result: Err(e.to_string()),
                    skipped: false,
                },
            }
        })
        .collect();
    outcomes.extend(prosumage_outcomes);

    write_summary(&layout, &plan, &summaries.into_inner().unwrap())?;

    Ok(MatrixReport {
        run_digest,
        outcomes,
    })
}

fn stage_key(fit: f64, pm: f64, bm: f64) -> (u64, u64, u64) {
    (
        (fit * 10_000.0).round() as u64,
        (pm * 10_000.0).round() as u64,
        (bm * 10_000.0).round() as u64,
    )
}

fn run_reference_cell(
    cfg: &RunConfig,
    inputs: &RunInputs,
    cell: &Cell,
) -> Result<(SectorStage, SystemCost<f64>, ResidualDemand<f64>), RunnerError> {
    let fleet = FleetSpec {
        n_households: cfg.fleet_sizes[0],
    };
    let residual = reference_residual(inputs, fleet)?;
    let stage = sector_stage(
        cfg,
        inputs,
        &residual,
        cell.res,
        cell.pv_mult,
        cell.battery_mult,
    )?;
    if !stage.validation_clean {
        return Err(RunnerError::Stage(format!(
            "solution validation failed (worst relative violation {:.3e})",
            stage.max_violation
        )));
    }
    let cost = system_cost(
        &stage.solution,
        &FleetInvestments::empty(),
        cfg.end_year,
        cfg.interest_rate,
    );
    Ok((stage, cost, residual))
}

struct ProsumageData {
    residual: ResidualDemand<f64>,
    sector: SectorStage,
    cost: SystemCost<f64>,
    capacities: FleetCapacities<f64>,
    summary: SummaryRow,
}

fn run_prosumage_cell(
    cfg: &RunConfig,
    inputs: &RunInputs,
    cell: &Cell,
    stage: &HouseholdStage,
    reference: &(SectorStage, SystemCost<f64>, ResidualDemand<f64>),
    fleet: u64,
) -> Result<ProsumageData, RunnerError> {
    let fleet = FleetSpec {
        n_households: fleet,
    };
    let residual = residual_stage(stage, inputs, fleet)?;
    let sector = sector_stage(
        cfg,
        inputs,
        &residual,
        cell.res,
        cell.pv_mult,
        cell.battery_mult,
    )?;
    if !sector.validation_clean {
        return Err(RunnerError::Stage(format!(
            "solution validation failed (worst relative violation {:.3e})",
            sector.max_violation
        )));
    }
    let investments = fleet_investments(stage, fleet);
    let cost = system_cost(
        &sector.solution,
        &investments,
        cfg.end_year,
        cfg.interest_rate,
    );
    let capacities = fleet_capacities(stage, fleet);
    // delta validates share compatibility; errors propagate as cell failures
    delta_report(
        &sector.scenario,
        &sector.solution,
        &cost,
        &capacities,
        &reference.0.scenario,
        &reference.0.solution,
        &reference.1,
    )?;
    let co2 = co2_report(&sector.solution, &sector.scenario);
    let summary = SummaryRow {
        cell: cell.name.clone(),
        kind: "prosumage".into(),
        objective: sector.solution.objective,
        system_cost_total: cost.total(),
        co2_tonnes: co2.total_tonnes,
        co2_intensity: co2.intensity_kg_per_kwh,
        realized_res_share: sector.solution.realized_res_share,
        capacities: sector
            .solution
            .technologies
            .iter()
            .map(|t| (t.name.clone(), t.capacity_mw, t.energy_capacity_mwh))
            .collect(),
        household_pv_mw: capacities.pv_mw,
        household_battery_mwh: capacities.battery_mwh,
    };
    Ok(ProsumageData {
        residual,
        sector,
        cost,
        capacities,
        summary,
    })
}

fn reference_summary(name: &str, stage: &SectorStage, cost: &SystemCost<f64>) -> SummaryRow {
    let co2 = co2_report(&stage.solution, &stage.scenario);
    SummaryRow {
        cell: name.to_string(),
        kind: "reference".into(),
        objective: stage.solution.objective,
        system_cost_total: cost.total(),
        co2_tonnes: co2.total_tonnes,
        co2_intensity: co2.intensity_kg_per_kwh,
        realized_res_share: stage.solution.realized_res_share,
        capacities: stage
            .solution
            .technologies
            .iter()
            .map(|t| (t.name.clone(), t.capacity_mw, t.energy_capacity_mwh))
            .collect(),
        household_pv_mw: 0.0,
        household_battery_mwh: 0.0,
    }
}

// ---------------------------------------------------------------------------
// Output writers.
// ---------------------------------------------------------------------------

fn write_manifest(
    cfg: &RunConfig,
    inputs: &RunInputs,
    plan: &MatrixPlan,
    layout: &OutputLayout,
) -> Result<u64, RunnerError> {
    let mut text = String::from("schema = 1\n");
    for (label, path, digest) in &inputs.digests {
        text.push_str(&format!("input {label} = {path} fnv64:{digest:016x}\n"));
    }
    text.push_str(&format!(
        "config fit_fractions = {:?}\nconfig res_shares = {:?}\nconfig fleet_sizes = {:?}\n",
        cfg.fit_fractions,
        cfg.res_shares.iter().map(|r| r.label()).collect::<Vec<_>>(),
        cfg.fleet_sizes
    ));
    text.push_str(&format!(
        "config multipliers pv = {:?} battery = {:?}\n",
        cfg.pv_cost_multipliers, cfg.battery_cost_multipliers
    ));
    text.push_str(&format!(
        "config economics = discount {} horizon {} dpp {} interest {} scales {}/{}\n",
        cfg.discount_rate,
        cfg.horizon_years,
        cfg.dpp_threshold_years,
        cfg.interest_rate,
        cfg.pv_cost_scale,
        cfg.battery_cost_scale
    ));
    text.push_str(&format!(
        "config years = {}..{} backend = {}\n",
        cfg.start_year, cfg.end_year, cfg.backend
    ));
    text.push_str(&format!(
        "households rejected with gaps = {}\n",
        inputs.rejected.len()
    ));
    for cell in &plan.cells {
        text.push_str(&format!("cell {} = planned\n", cell.name));
    }
    let run_digest = fnv1a(text.as_bytes());
    text.push_str(&format!("run_digest = fnv64:{run_digest:016x}\n"));
    write_atomic(&layout.manifest(), text.as_bytes())?;
    Ok(run_digest)
}

fn cell_complete(dir: &Path, run_digest: u64) -> bool {
    std::fs::read_to_string(dir.join("_complete"))
        .map(|text| text.trim() == format!("run:fnv64:{run_digest:016x}"))
        .unwrap_or(false)
}

fn mark_complete(dir: &Path, run_digest: u64) -> Result<(), RunnerError> {
    write_atomic(
        &dir.join("_complete"),
        format!("run:fnv64:{run_digest:016x}\n").as_bytes(),
    )?;
    Ok(())
}

/// Write the per-household decision log, final-year net-grid series and
/// per-year fleet investment aggregates.
pub fn write_household_outputs(dir: &Path, stage: &HouseholdStage) -> Result<(), RunnerError> {
    let mut decisions = Csv::new(&[
        "household",
        "year",
        "added_pv_kwp",
        "added_battery_kwh",
        "npv_aud",
        "dpp_years",
    ]);
    for run in &stage.runs {
        for d in &run.decisions {
            decisions
                .field(&run.household_id)
                .field(&d.year.to_string())
                .value(d.added_pv_kwp)
                .value(d.added_battery_kwh)
                .value(d.npv);
            match d.dpp.years() {
                Some(y) => decisions.value(y),
                None => decisions.field("never"),
            };
            decisions.end_row();
        }
    }
    decisions.write_to(&dir.join("decisions.csv"))?;

    let runs = &stage.runs;
    let year = runs[0].net_grid.start_year();
    let mut header: Vec<String> = vec!["timestamp".into()];
    for run in runs {
        header.push(format!("{}_net_kwh", run.household_id));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut net = Csv::new(&header_refs);
    for step in 0..runs[0].net_grid.len() {
        net.field(&timestamp_of_step(year, Resolution::HalfHourly, step));
        for run in runs {
            net.value(run.net_grid.values()[step]);
        }
        net.end_row();
    }
    net.write_to(&dir.join("net_grid_final_year.csv"))?;

    let mut investments = Csv::new(&[
        "year",
        "pv_kwp_per_cohort_household",
        "battery_kwh_per_cohort_household",
        "pv_capex_aud_per_cohort_household",
        "battery_capex_aud_per_cohort_household",
    ]);
    let mut by_year: BTreeMap<i32, (f64, f64, f64, f64)> = BTreeMap::new();
    for r in &stage.records {
        let entry = by_year.entry(r.year).or_default();
        entry.0 += r.pv_kwp;
        entry.1 += r.battery_kwh;
        entry.2 += r.pv_capex_aud;
        entry.3 += r.battery_capex_aud;
    }
    let n = stage.runs.len() as f64;
    for (year, (pv, bat, pv_capex, bat_capex)) in by_year {
        investments
            .field(&year.to_string())
            .value(pv / n)
            .value(bat / n)
            .value(pv_capex / n)
            .value(bat_capex / n);
        investments.end_row();
    }
    investments.write_to(&dir.join("fleet_investments.csv"))?;
    Ok(())
}

/// Write the residual contract file and its companion series.
pub fn write_residual_outputs(
    dir: &Path,
    residual: &ResidualDemand<f64>,
) -> Result<(), RunnerError> {
    let year = residual.residual.start_year();
    let mut csv = Csv::new(&["timestamp", "residual_mwh"]);
    for (hour, v) in residual.residual.values().iter().enumerate() {
        csv.field(&timestamp_of_step(year, Resolution::Hourly, hour))
            .value(*v);
        csv.end_row();
    }
    csv.write_to(&dir.join("residual.csv"))?;

    let mut companions = Csv::new(&[
        "timestamp",
        "household_pv_mwh",
        "household_net_mwh",
        "household_demand_mwh",
        "household_import_mwh",
    ]);
    for hour in 0..residual.residual.len() {
        companions
            .field(&timestamp_of_step(year, Resolution::Hourly, hour))
            .value(residual.household_pv.values()[hour])
            .value(residual.household_net.values()[hour])
            .value(residual.household_demand.values()[hour])
            .value(residual.household_import.values()[hour]);
        companions.end_row();
    }
    companions.write_to(&dir.join("companions.csv"))?;
    Ok(())
}

/// Write capacities, hourly dispatch and hourly balance duals.
pub fn write_sector_outputs(dir: &Path, sector: &SectorStage) -> Result<(), RunnerError> {
    let mut capacities = Csv::new(&["technology", "kind", "power_mw", "energy_mwh"]);
    for t in &sector.solution.technologies {
        capacities
            .field(&t.name)
            .field(t.kind.as_str())
            .value(t.capacity_mw);
        match t.energy_capacity_mwh {
            Some(e) => capacities.value(e),
            None => capacities.field(""),
        };
        capacities.end_row();
    }
    capacities.write_to(&dir.join("capacities.csv"))?;

    let mut header: Vec<String> = vec!["hour".into()];
    for t in &sector.solution.technologies {
        match t.kind {
            TechKind::Storage => {
                header.push(format!("{}_discharge_mwh", t.name));
                header.push(format!("{}_charge_mwh", t.name));
                header.push(format!("{}_level_mwh", t.name));
            }
            _ => header.push(format!("{}_mwh", t.name)),
        }
    }
    header.push("spill_mwh".into());
    header.push("curtailment_mwh".into());
    header.push("residual_demand_mwh".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut dispatch = Csv::new(&header_refs);
    for hour in 0..sector.scenario.hours {
        dispatch.field(&hour.to_string());
        for t in &sector.solution.technologies {
            dispatch.value(t.generation[hour]);
            if t.kind == TechKind::Storage {
                dispatch.value(t.charge.as_ref().expect("storage charge")[hour]);
                dispatch.value(t.level.as_ref().expect("storage level")[hour]);
            }
        }
        dispatch.value(sector.solution.spill[hour]);
        dispatch.value(sector.solution.curtailment[hour]);
        dispatch.value(sector.scenario.residual_demand[hour]);
        dispatch.end_row();
    }
    dispatch.write_to(&dir.join("dispatch.csv"))?;

    let mut duals = Csv::new(&["hour", "price_aud_per_mwh"]);
    for (hour, price) in sector.solution.duals.iter().enumerate() {
        duals.field(&hour.to_string()).value(*price);
        duals.end_row();
    }
    duals.write_to(&dir.join("duals.csv"))?;
    Ok(())
}

fn write_reference_outputs(
    dir: &Path,
    cfg: &RunConfig,
    _cell: &Cell,
    data: &(SectorStage, SystemCost<f64>, ResidualDemand<f64>),
) -> Result<(), RunnerError> {
    let (stage, cost, residual) = data;
    write_residual_outputs(dir, residual)?;
    write_sector_outputs(dir, stage)?;
    write_system_cost(dir, cfg, cost, None)?;
    let co2 = co2_report(&stage.solution, &stage.scenario);
    write_co2(dir, &co2)?;
    Ok(())
}

fn write_system_cost(
    dir: &Path,
    _cfg: &RunConfig,
    cost: &SystemCost<f64>,
    reference_total: Option<f64>,
) -> Result<(), RunnerError> {
    let mut csv = Csv::new(&["component", "aud_per_year"]);
    csv.field("sector_objective")
        .value(cost.sector_objective_aud);
    csv.end_row();
    csv.field("household_pv_annuities")
        .value(cost.household_pv_annuities_aud);
    csv.end_row();
    csv.field("household_battery_annuities")
        .value(cost.household_battery_annuities_aud);
    csv.end_row();
    csv.field("total").value(cost.total());
    csv.end_row();
    if let Some(reference) = reference_total {
        csv.field("reference_total").value(reference);
        csv.end_row();
        csv.field("increase_percent")
            .value((cost.total() - reference) / reference * 100.0);
        csv.end_row();
    }
    csv.write_to(&dir.join("system_cost.csv"))?;
    Ok(())
}

fn write_co2(dir: &Path, co2: &crate::analytics::Co2Report<f64>) -> Result<(), RunnerError> {
    let mut csv = Csv::new(&["technology", "tonnes_co2"]);
    for (name, tonnes) in &co2.per_technology {
        csv.field(name).value(*tonnes);
        csv.end_row();
    }
    csv.field("total").value(co2.total_tonnes);
    csv.end_row();
    csv.field("intensity_kg_per_kwh")
        .value(co2.intensity_kg_per_kwh);
    csv.end_row();
    csv.write_to(&dir.join("co2.csv"))?;
    Ok(())
}

fn write_prosumage_outputs(
    dir: &Path,
    cfg: &RunConfig,
    data: &ProsumageData,
    reference: &(SectorStage, SystemCost<f64>, ResidualDemand<f64>),
) -> Result<(), RunnerError> {
    let ProsumageData {
        residual,
        sector,
        cost,
        capacities,
        ..
    } = data;

    write_residual_outputs(dir, residual)?;
    write_sector_outputs(dir, sector)?;
    write_system_cost(dir, cfg, cost, Some(reference.1.total()))?;
    let co2 = co2_report(&sector.solution, &sector.scenario);
    write_co2(dir, &co2)?;

    // delta vs the matching reference
    let delta = delta_report(
        &sector.scenario,
        &sector.solution,
        cost,
        capacities,
        &reference.0.scenario,
        &reference.0.solution,
        &reference.1,
    )?;
    let mut csv = Csv::new(&["metric", "value"]);
    for t in &delta.technologies {
        csv.field(&format!("delta_capacity_mw_{}", t.name))
            .value(t.capacity_mw);
        csv.end_row();
        if let Some(e) = t.energy_capacity_mwh {
            csv.field(&format!("delta_energy_capacity_mwh_{}", t.name))
                .value(e);
            csv.end_row();
        }
        csv.field(&format!("delta_annual_generation_mwh_{}", t.name))
            .value(t.annual_generation_mwh);
        csv.end_row();
    }
    csv.field("delta_co2_tonnes").value(delta.co2_tonnes);
    csv.end_row();
    csv.field("delta_co2_intensity_kg_per_kwh")
        .value(delta.co2_intensity_kg_per_kwh);
    csv.end_row();
    csv.field("delta_system_cost_aud")
        .value(delta.system_cost_aud);
    csv.end_row();
    csv.field("delta_system_cost_percent")
        .value(delta.system_cost_percent);
    csv.end_row();
    let mut ratio = |name: &str, value: Option<f64>| {
        if let Some(v) = value {
            csv.field(name).value(v);
            csv.end_row();
        }
    };
    ratio(
        "substitution_utility_pv_per_household_pv",
        delta.ratios.utility_pv_per_household_pv,
    );
    ratio(
        "substitution_wind_per_household_pv",
        delta.ratios.wind_per_household_pv,
    );
    ratio(
        "substitution_battery_power_per_household_power",
        delta.ratios.battery_power_per_household_power,
    );
    ratio(
        "substitution_battery_energy_per_household_energy",
        delta.ratios.battery_energy_per_household_energy,
    );
    csv.write_to(&dir.join("delta.csv"))?;

    // duration curves
    let curves = rldc_decomposition(
        &sector.scenario,
        &sector.solution,
        &reference.0.scenario,
        &reference.0.solution,
    )?;
    let mut rldc_csv = Csv::new(&[
        "rank",
        "reference_residual_load_mwh",
        "prosumage_residual_load_mwh",
        "reference_net_of_utility_pv_mwh",
        "counterfactual_household_as_utility_mwh",
    ]);
    for h in 0..curves.reference_residual_load.len() {
        rldc_csv
            .field(&h.to_string())
            .value(curves.reference_residual_load[h])
            .value(curves.prosumage_residual_load[h])
            .value(curves.reference_net_of_utility_pv[h])
            .value(curves.counterfactual_household_as_utility[h]);
        rldc_csv.end_row();
    }
    rldc_csv.write_to(&dir.join("rldc.csv"))?;

    // segment-weighted wholesale prices, scenario vs reference
    let segments = customer_segments(residual);
    let ref_segments = customer_segments(&reference.2);
    let mut prices = Csv::new(&["segment", "reference_aud_per_mwh", "prosumage_aud_per_mwh"]);
    let rows: [(&str, &[f64], &[f64]); 4] = [
        (
            "prosumage_households",
            &ref_segments.prosumage_households,
            &segments.prosumage_households,
        ),
        (
            "prosumage_households_imports_only",
            &ref_segments.prosumage_imports_only,
            &segments.prosumage_imports_only,
        ),
        (
            "non_prosumage_households",
            &ref_segments.non_prosumage_households,
            &segments.non_prosumage_households,
        ),
        (
            "commercial_industrial",
            &ref_segments.commercial_industrial,
            &segments.commercial_industrial,
        ),
    ];
    for (name, ref_profile, scen_profile) in rows {
        prices.field(name);
        for (duals, profile) in [
            (&reference.0.solution.duals, ref_profile),
            (&sector.solution.duals, scen_profile),
        ] {
            // a cohort with net annual exports has no meaningful
            // energy-weighted price; report n/a instead of failing the cell
            match weighted_price(duals, profile) {
                Ok(price) => prices.value(price),
                Err(crate::analytics::AnalyticsError::ZeroDemandProfile) => prices.field("n/a"),
                Err(e) => return Err(e.into()),
            };
        }
        prices.end_row();
    }
    prices.write_to(&dir.join("prices.csv"))?;
    Ok(())
}

/// Persisted summary row, read back when a completed cell is skipped.
fn write_summary_row(dir: &Path, row: &SummaryRow) -> Result<(), RunnerError> {
    let mut text = String::new();
    text.push_str(&format!("cell = {}\n", row.cell));
    text.push_str(&format!("kind = {}\n", row.kind));
    text.push_str(&format!("objective = {}\n", row.objective));
    text.push_str(&format!("system_cost_total = {}\n", row.system_cost_total));
    text.push_str(&format!("co2_tonnes = {}\n", row.co2_tonnes));
    text.push_str(&format!("co2_intensity = {}\n", row.co2_intensity));
    text.push_str(&format!(
        "realized_res_share = {}\n",
        row.realized_res_share
    ));
    text.push_str(&format!("household_pv_mw = {}\n", row.household_pv_mw));
    text.push_str(&format!(
        "household_battery_mwh = {}\n",
        row.household_battery_mwh
    ));
    for (name, power, energy) in &row.capacities {
        match energy {
            Some(e) => text.push_str(&format!("cap {name} = {power} {e}\n")),
            None => text.push_str(&format!("cap {name} = {power}\n")),
        }
    }
    write_atomic(&dir.join("_summary.txt"), text.as_bytes())?;
    Ok(())
}

fn read_summary_row(dir: &Path) -> Result<SummaryRow, RunnerError> {
    let text = std::fs::read_to_string(dir.join("_summary.txt"))?;
    let mut row = SummaryRow {
        cell: String::new(),
        kind: String::new(),
        objective: 0.0,
        system_cost_total: 0.0,
        co2_tonnes: 0.0,
        co2_intensity: 0.0,
        realized_res_share: 0.0,
        capacities: Vec::new(),
        household_pv_mw: 0.0,
        household_battery_mwh: 0.0,
    };
    for line in text.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let parse = |v: &str| -> Result<f64, RunnerError> {
            v.parse()
                .map_err(|_| RunnerError::Stage(format!("bad summary value {v:?}")))
        };
        match key {
            "cell" => row.cell = value.to_string(),
            "kind" => row.kind = value.to_string(),
            "objective" => row.objective = parse(value)?,
            "system_cost_total" => row.system_cost_total = parse(value)?,
            "co2_tonnes" => row.co2_tonnes = parse(value)?,
            "co2_intensity" => row.co2_intensity = parse(value)?,
            "realized_res_share" => row.realized_res_share = parse(value)?,
            "household_pv_mw" => row.household_pv_mw = parse(value)?,
            "household_battery_mwh" => row.household_battery_mwh = parse(value)?,
            _ if key.starts_with("cap ") => {
                let name = key.trim_start_matches("cap ").to_string();
                let mut parts = value.split_whitespace();
                let power = parse(parts.next().unwrap_or(""))?;
                let energy = match parts.next() {
                    Some(e) => Some(parse(e)?),
                    None => None,
                };
                row.capacities.push((name, power, energy));
            }
            _ => {}
        }
    }
    Ok(row)
}

fn write_summary(
    layout: &OutputLayout,
    plan: &MatrixPlan,
    summaries: &BTreeMap<String, SummaryRow>,
) -> Result<(), RunnerError> {
    let tech_names: Vec<String> = summaries
        .values()
        .next()
        .map(|row| row.capacities.iter().map(|(n, _, _)| n.clone()).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = vec![
        "cell".into(),
        "kind".into(),
        "objective_aud".into(),
        "system_cost_total_aud".into(),
        "co2_tonnes".into(),
        "co2_intensity_kg_per_kwh".into(),
        "realized_res_share".into(),
        "household_pv_mw".into(),
        "household_battery_mwh".into(),
    ];
    for name in &tech_names {
        header.push(format!("{name}_mw"));
    }
    for name in &tech_names {
        header.push(format!("{name}_mwh"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);
    for cell in &plan.cells {
        let Some(row) = summaries.get(&cell.name) else {
            continue;
        };
        csv.field(&row.cell)
            .field(&row.kind)
            .value(row.objective)
            .value(row.system_cost_total)
            .value(row.co2_tonnes)
            .value(row.co2_intensity)
            .value(row.realized_res_share)
            .value(row.household_pv_mw)
            .value(row.household_battery_mwh);
        for name in &tech_names {
            let cap = row
                .capacities
                .iter()
                .find(|(n, _, _)| n == name)
                .map(|(_, p, _)| *p)
                .unwrap_or(0.0);
            csv.value(cap);
        }
        for name in &tech_names {
            match row
                .capacities
                .iter()
                .find(|(n, _, _)| n == name)
                .and_then(|(_, _, e)| *e)
            {
                Some(e) => csv.value(e),
                None => csv.field(""),
            };
        }
        csv.end_row();
    }
    csv.write_to(&layout.summary())?;
    Ok(())
}
