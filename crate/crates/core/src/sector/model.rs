//! LP assembly for the dispatch-and-investment problem, solution mapping and
//! the independent solution validator.
//!
//! Formulation, per hour `h` over the horizon: an energy-balance equality
//! (generation plus storage discharge minus charge minus spilled surplus
//! equals residual demand), dispatch bounded by installed capacity (times the
//! availability factor for variable renewables), cyclic storage level
//! dynamics with the one-way efficiency applied on both charge and discharge,
//! and, when the renewable share is fixed, one yearly constraint requiring
//! renewable generation plus household PV to cover the share of gross demand.
//! Objective: annuitised investment plus fixed O&M on capacities, plus
//! variable and fuel costs on dispatch.

use crate::finance::annuity;
use crate::fleet::ResidualDemand;
use crate::lp::{LinearProgram, Row, RowLabel, VarLabel};
use crate::scalar::Scalar;
use crate::solver::{LpBackend, LpSolution};
use crate::timeseries::Resolution;

use super::catalog::{SectorError, TechKind, Technology};

/// Renewable-share handling: a fixed requirement or fully endogenous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResShare<S> {
    Fixed(S),
    Endogenous,
}

/// One sector-model instance: residual demand, the coupled household PV
/// feed-in (for share accounting), the technology catalog and financing rate.
#[derive(Debug, Clone)]
pub struct SectorScenario<S> {
    pub hours: usize,
    pub residual_demand: Vec<S>,
    pub household_pv: Vec<S>,
    pub res_share: ResShare<S>,
    pub technologies: Vec<Technology<S>>,
    pub interest_rate: S,
}

impl<S: Scalar> SectorScenario<S> {
    /// General-horizon constructor, also used by toy and test instances.
    pub fn new(
        residual_demand: Vec<S>,
        household_pv: Vec<S>,
        res_share: ResShare<S>,
        technologies: Vec<Technology<S>>,
        interest_rate: S,
    ) -> Result<Self, SectorError> {
        let hours = residual_demand.len();
        if hours == 0 {
            return Err(SectorError::BadScenario("empty demand".into()));
        }
        if household_pv.len() != hours {
            return Err(SectorError::BadScenario(format!(
                "household PV series has {} hours, demand {}",
                household_pv.len(),
                hours
            )));
        }
        if let ResShare::Fixed(share) = res_share {
            if !(share > S::zero() && share <= S::one()) {
                return Err(SectorError::BadScenario(format!(
                    "renewable share {share} outside (0, 1]"
                )));
            }
        }
        if !(interest_rate > S::zero()) {
            return Err(SectorError::BadScenario(
                "interest rate must be positive".into(),
            ));
        }
        if technologies.is_empty() {
            return Err(SectorError::BadScenario("no technologies".into()));
        }
        for tech in &technologies {
            tech.validate(hours)?;
        }
        Ok(SectorScenario {
            hours,
            residual_demand,
            household_pv,
            res_share,
            technologies,
            interest_rate,
        })
    }

    /// Full-year scenario from the fleet-aggregation output.
    pub fn from_residual(
        residual: &ResidualDemand<S>,
        res_share: ResShare<S>,
        technologies: Vec<Technology<S>>,
        interest_rate: S,
    ) -> Result<Self, SectorError> {
        if residual.residual.resolution() != Resolution::Hourly {
            return Err(SectorError::BadScenario(
                "residual demand must be hourly".into(),
            ));
        }
        SectorScenario::new(
            residual.residual.values().to_vec(),
            residual.household_pv.values().to_vec(),
            res_share,
            technologies,
            interest_rate,
        )
    }

    /// Yearly gross electricity demand: residual plus household PV feed-in.
    pub fn gross_demand(&self) -> S {
        let residual: S = self.residual_demand.iter().copied().sum();
        let household: S = self.household_pv.iter().copied().sum();
        residual + household
    }
}

/// Variable layout: capacities, storage energy capacities, then hour-major
/// blocks of generation, storage flows and the spill variable.
struct VarMap {
    n_tech: usize,
    n_gen: usize,
    n_storage: usize,
    hours: usize,
    /// tech indices that dispatch energy (dispatchable + renewable)
    gen_techs: Vec<usize>,
    /// tech indices that are storage
    storage_techs: Vec<usize>,
}

impl VarMap {
    fn new<S: Scalar>(technologies: &[Technology<S>], hours: usize) -> Self {
        let gen_techs: Vec<usize> = technologies
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind != TechKind::Storage)
            .map(|(i, _)| i)
            .collect();
        let storage_techs: Vec<usize> = technologies
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind == TechKind::Storage)
            .map(|(i, _)| i)
            .collect();
        VarMap {
            n_tech: technologies.len(),
            n_gen: gen_techs.len(),
            n_storage: storage_techs.len(),
            hours,
            gen_techs,
            storage_techs,
        }
    }

    fn per_hour(&self) -> usize {
        self.n_gen + 3 * self.n_storage + 1
    }

    fn n_vars(&self) -> usize {
        self.n_tech + self.n_storage + self.hours * self.per_hour()
    }

    fn cap(&self, tech: usize) -> usize {
        tech
    }

    fn ecap(&self, storage_ordinal: usize) -> usize {
        self.n_tech + storage_ordinal
    }

    fn hour_base(&self, hour: usize) -> usize {
        self.n_tech + self.n_storage + hour * self.per_hour()
    }

    fn gen(&self, gen_ordinal: usize, hour: usize) -> usize {
        self.hour_base(hour) + gen_ordinal
    }

    fn charge(&self, storage_ordinal: usize, hour: usize) -> usize {
        self.hour_base(hour) + self.n_gen + 3 * storage_ordinal
    }

    fn discharge(&self, storage_ordinal: usize, hour: usize) -> usize {
        self.charge(storage_ordinal, hour) + 1
    }

    fn level(&self, storage_ordinal: usize, hour: usize) -> usize {
        self.charge(storage_ordinal, hour) + 2
    }

    fn spill(&self, hour: usize) -> usize {
        self.hour_base(hour) + self.n_gen + 3 * self.n_storage
    }
}

/// Assemble the LP for a scenario.
pub fn build_lp<S: Scalar>(scenario: &SectorScenario<S>) -> Result<LinearProgram<S>, SectorError> {
    let hours = scenario.hours;
    let techs = &scenario.technologies;
    let vmap = VarMap::new(techs, hours);
    let n_vars = vmap.n_vars();

    // objective and variable labels
    let mut objective = vec![S::zero(); n_vars];
    let mut var_labels = vec![VarLabel::Spill { hour: 0 }; n_vars];
    for (tech, t) in techs.iter().enumerate() {
        objective[vmap.cap(tech)] = annuity(
            t.overnight_cost_power,
            t.lifetime_years,
            scenario.interest_rate,
        ) + t.fixed_om;
        var_labels[vmap.cap(tech)] = VarLabel::Capacity { tech };
    }
    for (ordinal, &tech) in vmap.storage_techs.iter().enumerate() {
        let t = &techs[tech];
        objective[vmap.ecap(ordinal)] = annuity(
            t.overnight_cost_energy,
            t.lifetime_years,
            scenario.interest_rate,
        );
        var_labels[vmap.ecap(ordinal)] = VarLabel::EnergyCapacity { tech };
    }
    for hour in 0..hours {
        for (ordinal, &tech) in vmap.gen_techs.iter().enumerate() {
            let idx = vmap.gen(ordinal, hour);
            objective[idx] = techs[tech].marginal_cost();
            var_labels[idx] = VarLabel::Generation { tech, hour };
        }
        for (ordinal, &tech) in vmap.storage_techs.iter().enumerate() {
            objective[vmap.discharge(ordinal, hour)] = techs[tech].marginal_cost();
            var_labels[vmap.charge(ordinal, hour)] = VarLabel::Charge { tech, hour };
            var_labels[vmap.discharge(ordinal, hour)] = VarLabel::Discharge { tech, hour };
            var_labels[vmap.level(ordinal, hour)] = VarLabel::Level { tech, hour };
        }
        var_labels[vmap.spill(hour)] = VarLabel::Spill { hour };
    }

    // equality rows: balance first (indexed by hour), then level dynamics
    let mut eq_rows = Vec::with_capacity(hours * (1 + vmap.n_storage));
    for hour in 0..hours {
        let mut coeffs = Vec::with_capacity(vmap.per_hour());
        for ordinal in 0..vmap.n_gen {
            coeffs.push((vmap.gen(ordinal, hour), S::one()));
        }
        for ordinal in 0..vmap.n_storage {
            coeffs.push((vmap.discharge(ordinal, hour), S::one()));
            coeffs.push((vmap.charge(ordinal, hour), -S::one()));
        }
        coeffs.push((vmap.spill(hour), -S::one()));
        eq_rows.push(Row {
            label: RowLabel::Balance { hour },
            coeffs,
            rhs: scenario.residual_demand[hour],
        });
    }
    for hour in 0..hours {
        for (ordinal, &tech) in vmap.storage_techs.iter().enumerate() {
            let eta = techs[tech].one_way_efficiency();
            let prev = if hour == 0 { hours - 1 } else { hour - 1 };
            // cyclic boundary: the level before hour 0 is the final level
            eq_rows.push(Row {
                label: RowLabel::StorageLevel { tech, hour },
                coeffs: vec![
                    (vmap.level(ordinal, hour), S::one()),
                    (vmap.level(ordinal, prev), -S::one()),
                    (vmap.charge(ordinal, hour), -eta),
                    (vmap.discharge(ordinal, hour), eta.recip()),
                ],
                rhs: S::zero(),
            });
        }
    }

    // upper-bound rows: hourly capacity bounds, capacity lower bounds,
    // then the renewable-share requirement
    let mut ub_rows = Vec::new();
    for hour in 0..hours {
        for (ordinal, &tech) in vmap.gen_techs.iter().enumerate() {
            let t = &techs[tech];
            let cap_coeff = match (&t.kind, &t.availability) {
                (TechKind::VariableRenewable, Some(profile)) => -profile[hour],
                _ => -S::one(),
            };
            ub_rows.push(Row {
                label: RowLabel::DispatchCap { tech, hour },
                coeffs: vec![
                    (vmap.gen(ordinal, hour), S::one()),
                    (vmap.cap(tech), cap_coeff),
                ],
                rhs: S::zero(),
            });
        }
        for (ordinal, &tech) in vmap.storage_techs.iter().enumerate() {
            ub_rows.push(Row {
                label: RowLabel::ChargeCap { tech, hour },
                coeffs: vec![
                    (vmap.charge(ordinal, hour), S::one()),
                    (vmap.cap(tech), -S::one()),
                ],
                rhs: S::zero(),
            });
            ub_rows.push(Row {
                label: RowLabel::DischargeCap { tech, hour },
                coeffs: vec![
                    (vmap.discharge(ordinal, hour), S::one()),
                    (vmap.cap(tech), -S::one()),
                ],
                rhs: S::zero(),
            });
            ub_rows.push(Row {
                label: RowLabel::LevelCap { tech, hour },
                coeffs: vec![
                    (vmap.level(ordinal, hour), S::one()),
                    (vmap.ecap(ordinal), -S::one()),
                ],
                rhs: S::zero(),
            });
        }
    }
    for (tech, t) in techs.iter().enumerate() {
        if t.capacity_lower_bound > S::zero() {
            ub_rows.push(Row {
                label: RowLabel::CapacityLowerBound { tech },
                coeffs: vec![(vmap.cap(tech), -S::one())],
                rhs: -t.capacity_lower_bound,
            });
        }
    }
    if let ResShare::Fixed(share) = scenario.res_share {
        // sum of renewable generation >= share * gross - household PV
        let household: S = scenario.household_pv.iter().copied().sum();
        let rhs = household - share * scenario.gross_demand();
        let mut coeffs = Vec::new();
        for (ordinal, &tech) in vmap.gen_techs.iter().enumerate() {
            if techs[tech].renewable {
                for hour in 0..hours {
                    coeffs.push((vmap.gen(ordinal, hour), -S::one()));
                }
            }
        }
        if coeffs.is_empty() && rhs < S::zero() {
            return Err(SectorError::BadScenario(
                "fixed renewable share with no renewable technology".into(),
            ));
        }
        ub_rows.push(Row {
            label: RowLabel::RenewableShare,
            coeffs,
            rhs,
        });
    }

    let lp = LinearProgram {
        n_vars,
        objective,
        var_labels,
        eq_rows,
        ub_rows,
    };
    lp.validate_structure().map_err(SectorError::BadScenario)?;
    Ok(lp)
}

/// Per-technology slice of the solution.
#[derive(Debug, Clone)]
pub struct TechnologyResult<S> {
    pub name: String,
    pub kind: TechKind,
    pub renewable: bool,
    pub capacity_mw: S,
    /// Storage only.
    pub energy_capacity_mwh: Option<S>,
    /// Hourly generation; for storage this is the discharge series.
    pub generation: Vec<S>,
    /// Storage only: hourly charging.
    pub charge: Option<Vec<S>>,
    /// Storage only: hourly end-of-hour level.
    pub level: Option<Vec<S>>,
    pub annual_generation_mwh: S,
}

/// Solved scenario: capacities, dispatch, hourly balance duals (wholesale
/// prices), spill/curtailment and the objective.
#[derive(Debug, Clone)]
pub struct SectorSolution<S> {
    pub technologies: Vec<TechnologyResult<S>>,
    /// Hourly duals of the energy balance.
    pub duals: Vec<S>,
    /// Surplus feed-in disposed of by the balance slack.
    pub spill: Vec<S>,
    /// Spill plus implicit renewable curtailment (available minus dispatched).
    pub curtailment: Vec<S>,
    pub objective: S,
    /// Renewable generation (plus household PV) over gross demand.
    pub realized_res_share: S,
    /// The raw primal/dual vectors, kept for validation.
    pub raw: LpSolution<S>,
}

impl<S: Scalar> SectorSolution<S> {
    pub fn technology(&self, name: &str) -> Option<&TechnologyResult<S>> {
        self.technologies.iter().find(|t| t.name == name)
    }
}

/// Build, solve and map one scenario.
pub fn solve_scenario<S: Scalar>(
    scenario: &SectorScenario<S>,
    backend: &dyn LpBackend,
) -> Result<SectorSolution<S>, SectorError>
where
    S: Into<f64>,
    f64: Into<S>,
{
    let lp = build_lp(scenario)?;
    let lp64 = cast_lp_to_f64(&lp);
    let solution = backend.solve(&lp64)?;
    let solution = LpSolution {
        x: solution.x.into_iter().map(Into::into).collect(),
        eq_duals: solution.eq_duals.into_iter().map(Into::into).collect(),
        ub_duals: solution.ub_duals.into_iter().map(Into::into).collect(),
        objective: solution.objective.into(),
    };
    Ok(map_solution(scenario, &solution))
}

fn cast_lp_to_f64<S: Scalar>(lp: &LinearProgram<S>) -> LinearProgram<f64> {
    let cast_rows = |rows: &[Row<S>]| {
        rows.iter()
            .map(|r| Row {
                label: r.label,
                coeffs: r
                    .coeffs
                    .iter()
                    .map(|(j, c)| (*j, c.to_f64().expect("finite coefficient")))
                    .collect(),
                rhs: r.rhs.to_f64().expect("finite rhs"),
            })
            .collect()
    };
    LinearProgram {
        n_vars: lp.n_vars,
        objective: lp
            .objective
            .iter()
            .map(|c| c.to_f64().expect("finite cost"))
            .collect(),
        var_labels: lp.var_labels.clone(),
        eq_rows: cast_rows(&lp.eq_rows),
        ub_rows: cast_rows(&lp.ub_rows),
    }
}

fn map_solution<S: Scalar>(
    scenario: &SectorScenario<S>,
    solution: &LpSolution<S>,
) -> SectorSolution<S> {
    let hours = scenario.hours;
    let techs = &scenario.technologies;
    let vmap = VarMap::new(techs, hours);
    // reported values drop solver noise below 1e-9; the raw vector is kept
    // unchanged for validation
    let tidy = |v: S| {
        if v.abs() < crate::scalar::real(1e-9) {
            S::zero()
        } else {
            v
        }
    };
    let x: Vec<S> = solution.x.iter().map(|v| tidy(*v)).collect();
    let x = &x;

    let mut results = Vec::with_capacity(techs.len());
    let mut renewable_generation = S::zero();
    for (tech, t) in techs.iter().enumerate() {
        let capacity = x[vmap.cap(tech)];
        let result = match t.kind {
            TechKind::Storage => {
                let ordinal = vmap.storage_techs.iter().position(|&i| i == tech).unwrap();
                let discharge: Vec<S> = (0..hours).map(|h| x[vmap.discharge(ordinal, h)]).collect();
                let charge: Vec<S> = (0..hours).map(|h| x[vmap.charge(ordinal, h)]).collect();
                let level: Vec<S> = (0..hours).map(|h| x[vmap.level(ordinal, h)]).collect();
                let annual = discharge.iter().copied().sum();
                TechnologyResult {
                    name: t.name.clone(),
                    kind: t.kind,
                    renewable: t.renewable,
                    capacity_mw: capacity,
                    energy_capacity_mwh: Some(x[vmap.ecap(ordinal)]),
                    generation: discharge,
                    charge: Some(charge),
                    level: Some(level),
                    annual_generation_mwh: annual,
                }
            }
            _ => {
                let ordinal = vmap.gen_techs.iter().position(|&i| i == tech).unwrap();
                let generation: Vec<S> = (0..hours).map(|h| x[vmap.gen(ordinal, h)]).collect();
                let annual: S = generation.iter().copied().sum();
                if t.renewable {
                    renewable_generation = renewable_generation + annual;
                }
                TechnologyResult {
                    name: t.name.clone(),
                    kind: t.kind,
                    renewable: t.renewable,
                    capacity_mw: capacity,
                    energy_capacity_mwh: None,
                    generation,
                    charge: None,
                    level: None,
                    annual_generation_mwh: annual,
                }
            }
        };
        results.push(result);
    }

    let spill: Vec<S> = (0..hours).map(|h| x[vmap.spill(h)]).collect();
    let mut curtailment = spill.clone();
    for (ordinal, &tech) in vmap.gen_techs.iter().enumerate() {
        let t = &techs[tech];
        if let (TechKind::VariableRenewable, Some(profile)) = (&t.kind, &t.availability) {
            let cap = x[vmap.cap(tech)];
            for (hour, c) in curtailment.iter_mut().enumerate() {
                let unused = profile[hour] * cap - x[vmap.gen(ordinal, hour)];
                *c = *c + unused.max(S::zero());
            }
        }
    }

    let household: S = scenario.household_pv.iter().copied().sum();
    let gross = scenario.gross_demand();
    let realized_res_share = if gross > S::zero() {
        (renewable_generation + household) / gross
    } else {
        S::zero()
    };

    SectorSolution {
        technologies: results,
        duals: solution.eq_duals[..hours].to_vec(),
        spill,
        curtailment,
        objective: solution.objective,
        realized_res_share,
        raw: solution.clone(),
    }
}

/// Solve the scenario without the renewable-share constraint, reporting the
/// endogenous cost-optimal share in `realized_res_share`.
pub fn run_endogenous<S: Scalar>(
    scenario: &SectorScenario<S>,
    backend: &dyn LpBackend,
) -> Result<SectorSolution<S>, SectorError>
where
    S: Into<f64>,
    f64: Into<S>,
{
    let mut endogenous = scenario.clone();
    endogenous.res_share = ResShare::Endogenous;
    solve_scenario(&endogenous, backend)
}

/// One violated row (or variable bound) found by validation.
#[derive(Debug, Clone)]
pub struct Violation<S> {
    pub what: String,
    pub class: &'static str,
    pub residual: S,
    pub scale: S,
}

/// Recomputed residuals and duality gap for a solved instance.
#[derive(Debug, Clone)]
pub struct ValidationReport<S> {
    pub violations: Vec<Violation<S>>,
    pub duality_gap_relative: S,
    pub objective_recompute_relative: S,
    /// Smallest hourly balance dual (should not be meaningfully negative
    /// while free spill is available).
    pub min_balance_dual: S,
    pub tolerance: S,
}

impl<S: Scalar> ValidationReport<S> {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
            && self.duality_gap_relative <= self.tolerance
            && self.objective_recompute_relative <= self.tolerance
    }
}

/// Recompute every constraint residual and the primal/dual objective gap.
/// A row fails when its residual exceeds `tolerance` times the row scale.
pub fn validate_solution<S: Scalar>(
    lp: &LinearProgram<S>,
    solution: &LpSolution<S>,
    tolerance: S,
) -> ValidationReport<S> {
    let mut violations = Vec::new();

    let row_scale = |row: &Row<S>, x: &[S]| {
        let mut scale = S::one().max(row.rhs.abs());
        for (j, c) in &row.coeffs {
            scale = scale.max((*c * x[*j]).abs());
        }
        scale
    };

    for row in &lp.eq_rows {
        let activity = LinearProgram::row_activity(row, &solution.x);
        let residual = (activity - row.rhs).abs();
        let scale = row_scale(row, &solution.x);
        if residual > tolerance * scale {
            violations.push(Violation {
                what: row.label.to_string(),
                class: row.label.class(),
                residual,
                scale,
            });
        }
    }
    for row in &lp.ub_rows {
        let activity = LinearProgram::row_activity(row, &solution.x);
        let residual = activity - row.rhs;
        let scale = row_scale(row, &solution.x);
        if residual > tolerance * scale {
            violations.push(Violation {
                what: row.label.to_string(),
                class: row.label.class(),
                residual,
                scale,
            });
        }
    }
    for (j, v) in solution.x.iter().enumerate() {
        if *v < -tolerance {
            violations.push(Violation {
                what: lp.var_labels[j].to_string(),
                class: "variable bound",
                residual: -*v,
                scale: S::one(),
            });
        }
    }

    let primal = lp.objective_value(&solution.x);
    let dual = solution.dual_objective(lp);
    let scale = S::one().max(primal.abs());
    let duality_gap_relative = (primal - dual).abs() / scale;
    let objective_recompute_relative = (primal - solution.objective).abs() / scale;

    let min_balance_dual = lp
        .eq_rows
        .iter()
        .zip(&solution.eq_duals)
        .filter(|(row, _)| matches!(row.label, RowLabel::Balance { .. }))
        .map(|(_, dual)| *dual)
        .fold(S::infinity(), S::min);

    ValidationReport {
        violations,
        duality_gap_relative,
        objective_recompute_relative,
        min_balance_dual,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector::catalog::default_catalog;
    use crate::solver::DenseSimplex;

    fn dispatchable(name: &str, fixed_om: f64, variable_om: f64) -> Technology<f64> {
        Technology {
            name: name.into(),
            kind: TechKind::Dispatchable,
            overnight_cost_power: 0.0,
            overnight_cost_energy: 0.0,
            fixed_om,
            variable_om,
            fuel_cost: 0.0,
            efficiency: 1.0,
            lifetime_years: 25.0,
            capacity_lower_bound: 0.0,
            emission_factor: 0.0,
            renewable: false,
            availability: None,
        }
    }

    fn renewable(
        name: &str,
        fixed_om: f64,
        availability: Vec<f64>,
        lower_bound: f64,
    ) -> Technology<f64> {
        Technology {
            name: name.into(),
            kind: TechKind::VariableRenewable,
            overnight_cost_power: 0.0,
            overnight_cost_energy: 0.0,
            fixed_om,
            variable_om: 0.0,
            fuel_cost: 0.0,
            efficiency: 1.0,
            lifetime_years: 25.0,
            capacity_lower_bound: lower_bound,
            emission_factor: 0.0,
            renewable: true,
            availability: Some(availability),
        }
    }

    fn storage(name: &str, roundtrip: f64) -> Technology<f64> {
        Technology {
            name: name.into(),
            kind: TechKind::Storage,
            overnight_cost_power: 0.0,
            overnight_cost_energy: 0.0,
            fixed_om: 1.0,
            variable_om: 0.0,
            fuel_cost: 0.0,
            efficiency: roundtrip,
            lifetime_years: 15.0,
            capacity_lower_bound: 0.0,
            emission_factor: 0.0,
            renewable: false,
            availability: None,
        }
    }

    fn toy_scenario() -> SectorScenario<f64> {
        SectorScenario::new(
            vec![1.0, 2.0],
            vec![0.0, 0.0],
            ResShare::Endogenous,
            vec![dispatchable("gas", 10.0, 5.0)],
            0.04,
        )
        .unwrap()
    }

    #[test]
    fn toy_counts() {
        let lp = build_lp(&toy_scenario()).unwrap();
        let counts = lp.counts();
        // one capacity variable, two generation, two spill
        assert_eq!(counts.variables, 5);
        assert_eq!(counts.equality_rows, 2);
        assert_eq!(counts.upper_bound_rows, 2);
    }

    #[test]
    fn toy_solution_and_duals() {
        let sol = solve_scenario(&toy_scenario(), &DenseSimplex::default()).unwrap();
        assert!((sol.objective - 35.0).abs() < 1e-9);
        let gas = sol.technology("gas").unwrap();
        assert!((gas.capacity_mw - 2.0).abs() < 1e-9);
        assert!((gas.generation[0] - 1.0).abs() < 1e-9);
        assert!((gas.generation[1] - 2.0).abs() < 1e-9);
        assert!((sol.duals[0] - 5.0).abs() < 1e-9);
        assert!((sol.duals[1] - 15.0).abs() < 1e-9);
        // dual objective equals primal
        let lp = build_lp(&toy_scenario()).unwrap();
        let report = validate_solution(&lp, &sol.raw, 1e-9);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn zero_demand_builds_nothing() {
        let scenario = SectorScenario::new(
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            ResShare::Endogenous,
            vec![dispatchable("gas", 10.0, 5.0)],
            0.04,
        )
        .unwrap();
        let sol = solve_scenario(&scenario, &DenseSimplex::default()).unwrap();
        assert!(sol.objective.abs() < 1e-9);
        assert!(sol.technology("gas").unwrap().capacity_mw.abs() < 1e-9);
    }

    #[test]
    fn full_year_counts_match_closed_form() {
        let hours = 8_760usize;
        let mut techs: Vec<Technology<f64>> = default_catalog()
            .into_iter()
            .map(|e| e.technology)
            .collect();
        for t in techs.iter_mut() {
            if t.kind == TechKind::VariableRenewable {
                t.availability = Some(vec![0.5; hours]);
            }
        }
        let scenario = SectorScenario::new(
            vec![2_000.0; hours],
            vec![0.0; hours],
            ResShare::Fixed(0.49),
            techs,
            0.04,
        )
        .unwrap();
        let lp = build_lp(&scenario).unwrap();
        let counts = lp.counts();
        let (n_tech, n_gen, n_storage) = (8, 6, 2);
        assert_eq!(
            counts.variables,
            n_tech + n_storage + hours * (n_gen + 3 * n_storage + 1)
        );
        assert_eq!(counts.equality_rows, hours + hours * n_storage);
        // hourly bounds + two lower bounds (wind, pv) + the share row
        assert_eq!(
            counts.upper_bound_rows,
            hours * (n_gen + 3 * n_storage) + 2 + 1
        );
        assert_eq!(lp.balance_row_index(4_321), Some(4_321));
    }

    #[test]
    fn share_above_one_rejected_at_build_time() {
        let err = SectorScenario::new(
            vec![1.0],
            vec![0.0],
            ResShare::Fixed(1.2),
            vec![dispatchable("gas", 1.0, 1.0)],
            0.04,
        )
        .unwrap_err();
        assert!(err.to_string().contains("outside"));
    }

    #[test]
    fn storage_shifts_renewable_surplus() {
        // free wind in the first half of the day, demand in the second
        let avail = vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let demand = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let scenario = SectorScenario::new(
            demand,
            vec![0.0; 6],
            ResShare::Endogenous,
            vec![
                dispatchable("gas", 500.0, 50.0),
                renewable("wind", 1.0, avail, 0.0),
                storage("battery", 0.92),
            ],
            0.04,
        )
        .unwrap();
        let sol = solve_scenario(&scenario, &DenseSimplex::default()).unwrap();
        let battery = sol.technology("battery").unwrap();
        let total_charge: f64 = battery.charge.as_ref().unwrap().iter().sum();
        let total_discharge: f64 = battery.annual_generation_mwh;
        assert!(total_discharge > 2.9, "storage should serve the evening");
        // cyclic level balance forces the round-trip identity
        assert!((total_discharge - 0.92 * total_charge).abs() <= 1e-6 * total_charge);
        let lp = build_lp(&scenario).unwrap();
        let report = validate_solution(&lp, &sol.raw, 1e-7);
        assert!(report.is_clean(), "{:?}", report.violations);
        // levels respect the cyclic boundary: dynamics hold at hour 0 too
        let levels = battery.level.as_ref().unwrap();
        let eta = 0.92f64.sqrt();
        let wrap =
            levels[5] + eta * battery.charge.as_ref().unwrap()[0] - battery.generation[0] / eta;
        assert!((levels[0] - wrap).abs() < 1e-7);
    }

    #[test]
    fn negative_residual_is_spilled_and_prices_stay_nonnegative() {
        let scenario = SectorScenario::new(
            vec![1.0, -2.0, 1.0],
            vec![0.0, 2.5, 0.0],
            ResShare::Endogenous,
            vec![dispatchable("gas", 10.0, 5.0)],
            0.04,
        )
        .unwrap();
        let sol = solve_scenario(&scenario, &DenseSimplex::default()).unwrap();
        assert!((sol.spill[1] - 2.0).abs() < 1e-9);
        for dual in &sol.duals {
            assert!(*dual >= -1e-9, "negative price {dual}");
        }
        let lp = build_lp(&scenario).unwrap();
        assert!(validate_solution(&lp, &sol.raw, 1e-7).is_clean());
    }

    #[test]
    fn fixed_share_binds_and_monotonically_raises_cost() {
        let avail = vec![0.5, 0.5, 0.5, 0.5];
        let demand = vec![1.0, 1.0, 1.0, 1.0];
        let techs = |share| {
            SectorScenario::new(
                demand.clone(),
                vec![0.0; 4],
                share,
                vec![
                    dispatchable("gas", 10.0, 5.0),
                    renewable("wind", 40.0, avail.clone(), 0.0),
                ],
                0.04,
            )
            .unwrap()
        };
        let simplex = DenseSimplex::default();
        let loose = solve_scenario(&techs(ResShare::Fixed(0.25)), &simplex).unwrap();
        let tight = solve_scenario(&techs(ResShare::Fixed(0.75)), &simplex).unwrap();
        assert!(tight.objective >= loose.objective - 1e-9);
        assert!(tight.realized_res_share >= 0.75 - 1e-9);
        // share dual is non-negative through the max-b'y convention: the row
        // is -sum(gen) <= -rhs, so a binding requirement prices negatively
        // there, meaning the reported constraint dual must not be positive
        let lp = build_lp(&techs(ResShare::Fixed(0.75))).unwrap();
        let share_dual = tight.raw.ub_duals.last().copied().unwrap();
        assert!(share_dual <= 1e-9);
        assert!(validate_solution(&lp, &tight.raw, 1e-7).is_clean());
    }

    #[test]
    fn endogenous_share_with_dominant_renewables_is_total() {
        let scenario = SectorScenario::new(
            vec![1.0, 1.0, 1.0, 1.0],
            vec![0.0; 4],
            ResShare::Endogenous,
            vec![
                dispatchable("gas", 100.0, 50.0),
                renewable("wind", 1.0, vec![1.0; 4], 0.0),
            ],
            0.04,
        )
        .unwrap();
        let sol = run_endogenous(&scenario, &DenseSimplex::default()).unwrap();
        assert!((sol.realized_res_share - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expensive_renewables_generate_only_their_forced_build() {
        // lower bound forces 1 MW of wind; nothing beyond its availability runs
        let scenario = SectorScenario::new(
            vec![4.0, 4.0],
            vec![0.0, 0.0],
            ResShare::Endogenous,
            vec![
                dispatchable("gas", 5.0, 10.0),
                renewable("wind", 100_000.0, vec![0.5, 0.5], 1.0),
            ],
            0.04,
        )
        .unwrap();
        let sol = run_endogenous(&scenario, &DenseSimplex::default()).unwrap();
        let wind = sol.technology("wind").unwrap();
        assert!((wind.capacity_mw - 1.0).abs() < 1e-9);
        assert!((wind.annual_generation_mwh - 1.0).abs() < 1e-9);
        let expected_share = 1.0 / 8.0;
        assert!((sol.realized_res_share - expected_share).abs() < 1e-9);
    }

    #[test]
    fn perturbed_dispatch_flags_exactly_the_balance_row() {
        // demand [1, 2, 1]: hour 0 generation sits below the 2 MW capacity
        let scenario = SectorScenario::new(
            vec![1.0, 2.0, 1.0],
            vec![0.0; 3],
            ResShare::Endogenous,
            vec![dispatchable("gas", 10.0, 5.0)],
            0.04,
        )
        .unwrap();
        let lp = build_lp(&scenario).unwrap();
        let sol = DenseSimplex::default().solve(&cast_lp_to_f64(&lp)).unwrap();
        assert!(validate_solution(&lp, &sol, 1e-7).is_clean());
        let mut perturbed = sol.clone();
        // +1 MWh on hour-0 generation (first per-hour variable)
        let gen0 = lp
            .var_labels
            .iter()
            .position(|l| matches!(l, VarLabel::Generation { hour: 0, .. }))
            .unwrap();
        perturbed.x[gen0] += 1.0;
        let report = validate_solution(&lp, &perturbed, 1e-7);
        let flagged: Vec<&str> = report.violations.iter().map(|v| v.class).collect();
        assert_eq!(flagged, vec!["energy balance"]);
        assert!(report.violations.iter().all(|v| v.what.contains("h=0")));
    }

    #[test]
    fn scaling_all_costs_scales_duals_but_not_dispatch() {
        let base = SectorScenario::new(
            vec![3.0, 7.0, 4.0, 6.0],
            vec![0.0; 4],
            ResShare::Endogenous,
            vec![
                dispatchable("gas", 10.0, 5.0),
                renewable("wind", 30.0, vec![0.9, 0.1, 0.6, 0.4], 0.0),
            ],
            0.04,
        )
        .unwrap();
        let mut scaled = base.clone();
        for tech in scaled.technologies.iter_mut() {
            tech.fixed_om = tech.fixed_om * 2.0;
            tech.variable_om = tech.variable_om * 2.0;
        }
        let simplex = DenseSimplex::default();
        let a = solve_scenario(&base, &simplex).unwrap();
        let b = solve_scenario(&scaled, &simplex).unwrap();
        for (x, y) in a.raw.x.iter().zip(&b.raw.x) {
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "primal moved: {x} vs {y}");
        }
        assert!((b.objective - 2.0 * a.objective).abs() <= 1e-9 * a.objective.abs());
        for (da, db) in a.duals.iter().zip(&b.duals) {
            assert!((db - 2.0 * da).abs() <= 1e-9 * (1.0 + da.abs()), "dual {da} vs {db}");
        }
    }
}
