//! Technology catalog: parameter records, the default Western-Australian
//! parameterisation, and the CSV interchange format.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum SectorError {
    #[error("technology {name}: {reason}")]
    BadTechnology { name: String, reason: String },
    #[error("scenario: {0}")]
    BadScenario(String),
    #[error("catalog {path}: {reason}")]
    BadCatalog { path: String, reason: String },
    #[error(transparent)]
    Solve(#[from] crate::solver::SolveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TechKind {
    Dispatchable,
    VariableRenewable,
    Storage,
}

impl TechKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TechKind::Dispatchable => "dispatchable",
            TechKind::VariableRenewable => "variable-renewable",
            TechKind::Storage => "storage",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text {
            "dispatchable" => Some(TechKind::Dispatchable),
            "variable-renewable" => Some(TechKind::VariableRenewable),
            "storage" => Some(TechKind::Storage),
            _ => None,
        }
    }
}

/// One utility-scale technology option.
#[derive(Debug, Clone)]
pub struct Technology<S> {
    pub name: String,
    pub kind: TechKind,
    /// AUD per MW of power capacity.
    pub overnight_cost_power: S,
    /// AUD per MWh of energy capacity (storage only, zero otherwise).
    pub overnight_cost_energy: S,
    /// AUD per MW per year, applied to power capacity.
    pub fixed_om: S,
    /// AUD per MWh generated (per MWh discharged for storage).
    pub variable_om: S,
    /// AUD per thermal MWh of fuel.
    pub fuel_cost: S,
    /// Thermal efficiency (dispatchable) or round-trip efficiency (storage);
    /// 1 for variable renewables.
    pub efficiency: S,
    /// May be fractional (e.g. 22.5 years).
    pub lifetime_years: S,
    /// Existing build that investment cannot go below (MW).
    pub capacity_lower_bound: S,
    /// tCO2 per thermal MWh of fuel burned.
    pub emission_factor: S,
    pub renewable: bool,
    /// Hourly availability factors, required for variable renewables.
    pub availability: Option<Vec<S>>,
}

impl<S: Scalar> Technology<S> {
    /// Marginal cost of one MWh of output.
    pub fn marginal_cost(&self) -> S {
        match self.kind {
            TechKind::Dispatchable => self.variable_om + self.fuel_cost / self.efficiency,
            TechKind::VariableRenewable | TechKind::Storage => self.variable_om,
        }
    }

    /// One-way storage efficiency (square root of the round-trip figure).
    pub fn one_way_efficiency(&self) -> S {
        self.efficiency.sqrt()
    }

    pub fn validate(&self, hours: usize) -> Result<(), SectorError> {
        let fail = |reason: &str| {
            Err(SectorError::BadTechnology {
                name: self.name.clone(),
                reason: reason.into(),
            })
        };
        if self.overnight_cost_power < S::zero()
            || self.overnight_cost_energy < S::zero()
            || self.fixed_om < S::zero()
            || self.variable_om < S::zero()
            || self.fuel_cost < S::zero()
        {
            return fail("costs must be non-negative");
        }
        if !(self.efficiency > S::zero() && self.efficiency <= S::one()) {
            return fail("efficiency must be in (0, 1]");
        }
        if self.capacity_lower_bound < S::zero() {
            return fail("capacity lower bound must be non-negative");
        }
        if !(self.lifetime_years > S::zero()) {
            return fail("lifetime must be positive");
        }
        match (self.kind, &self.availability) {
            (TechKind::VariableRenewable, None) => {
                return fail("variable renewables need an availability profile")
            }
            (TechKind::VariableRenewable, Some(profile)) => {
                if profile.len() != hours {
                    return fail("availability profile length does not match the horizon");
                }
                if profile.iter().any(|v| *v < S::zero() || *v > S::one()) {
                    return fail("availability factors must lie in [0, 1]");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Catalog row as parsed from CSV: the technology plus the name of the
/// availability column to join from the availability file.
#[derive(Debug, Clone)]
pub struct CatalogEntry<S> {
    pub technology: Technology<S>,
    pub availability_column: Option<String>,
}

/// The default catalog: hard coal, CCGT, OCGT, bioenergy, wind, utility PV,
/// li-ion batteries and power-to-gas-to-power hydrogen storage, with
/// overnight costs, O&M, efficiencies, fuel costs, lifetimes and investment
/// lower bounds for the 2030 Western-Australian setup. Emission factors are
/// reporting-only defaults (no CO2 price anywhere in the model).
pub fn default_catalog<S: Scalar>() -> Vec<CatalogEntry<S>> {
    let tech = |name: &str,
                kind: TechKind,
                renewable: bool,
                ocp: f64,
                oce: f64,
                fom: f64,
                vom: f64,
                fuel: f64,
                eff: f64,
                life: f64,
                lb: f64,
                ef: f64,
                avail: Option<&str>| CatalogEntry {
        technology: Technology {
            name: name.into(),
            kind,
            overnight_cost_power: real(ocp),
            overnight_cost_energy: real(oce),
            fixed_om: real(fom),
            variable_om: real(vom),
            fuel_cost: real(fuel),
            efficiency: real(eff),
            lifetime_years: real(life),
            capacity_lower_bound: real(lb),
            emission_factor: real(ef),
            renewable,
            availability: None,
        },
        availability_column: avail.map(str::to_string),
    };
    use TechKind::*;
    vec![
        tech(
            "coal",
            Dispatchable,
            false,
            3_195_000.0,
            0.0,
            53_200.0,
            4.2,
            12.06,
            0.40,
            25.0,
            0.0,
            0.34,
            None,
        ),
        tech(
            "ccgt",
            Dispatchable,
            false,
            1_254_000.0,
            0.0,
            10_500.0,
            7.4,
            31.68,
            0.48,
            25.0,
            0.0,
            0.20,
            None,
        ),
        tech(
            "ocgt",
            Dispatchable,
            false,
            877_000.0,
            0.0,
            4_200.0,
            10.5,
            31.68,
            0.31,
            25.0,
            0.0,
            0.20,
            None,
        ),
        tech(
            "bioenergy",
            Dispatchable,
            true,
            12_432_000.0,
            0.0,
            131_600.0,
            8.4,
            4.5,
            0.23,
            25.0,
            0.0,
            0.0,
            None,
        ),
        tech(
            "wind",
            VariableRenewable,
            true,
            1_874_000.0,
            0.0,
            36_000.0,
            2.7,
            0.0,
            1.0,
            25.0,
            419.0,
            0.0,
            Some("wind"),
        ),
        tech(
            "pv",
            VariableRenewable,
            true,
            817_000.0,
            0.0,
            14_400.0,
            0.0,
            0.0,
            1.0,
            25.0,
            202.0,
            0.0,
            Some("pv"),
        ),
        tech(
            "li-ion", Storage, false, 115_848.0, 173_773.0, 2_027.0, 0.5, 0.0, 0.92, 15.0, 0.0,
            0.0, None,
        ),
        tech(
            "hydrogen",
            Storage,
            false,
            2_384_615.0,
            308.0,
            16_694.0,
            0.5,
            0.0,
            0.419,
            22.5,
            0.0,
            0.0,
            None,
        ),
    ]
}

const CATALOG_HEADER: &str = "name,kind,renewable,overnight_cost_power,overnight_cost_energy,fixed_om,variable_om,fuel_cost,efficiency,lifetime,capacity_lower_bound,emission_factor,availability_column";

/// Write a catalog in the CSV interchange format.
pub fn write_catalog<S: Scalar>(
    out: &mut impl Write,
    entries: &[CatalogEntry<S>],
) -> std::io::Result<()> {
    writeln!(out, "{CATALOG_HEADER}")?;
    for entry in entries {
        let t = &entry.technology;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.name,
            t.kind.as_str(),
            t.renewable,
            t.overnight_cost_power,
            t.overnight_cost_energy,
            t.fixed_om,
            t.variable_om,
            t.fuel_cost,
            t.efficiency,
            t.lifetime_years,
            t.capacity_lower_bound,
            t.emission_factor,
            entry.availability_column.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

pub fn parse_catalog<S: Scalar>(path: &Path) -> Result<Vec<CatalogEntry<S>>, SectorError> {
    let file = std::fs::File::open(path).map_err(|e| SectorError::BadCatalog {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_catalog_from_reader(BufReader::new(file), &path.display().to_string())
}

pub fn parse_catalog_from_reader<S: Scalar>(
    reader: impl BufRead,
    path: &str,
) -> Result<Vec<CatalogEntry<S>>, SectorError> {
    let bad = |reason: String| SectorError::BadCatalog {
        path: path.to_string(),
        reason,
    };
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if idx == 0 {
            if line.trim() != CATALOG_HEADER {
                return Err(bad(format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(bad(format!("line {}: expected 13 fields", idx + 1)));
        }
        let num = |pos: usize| -> Result<S, SectorError> {
            let raw = fields[pos].trim();
            raw.parse::<f64>()
                .map(real)
                .map_err(|_| bad(format!("line {}: unparseable number {raw:?}", idx + 1)))
        };
        let kind = TechKind::parse(fields[1].trim())
            .ok_or_else(|| bad(format!("line {}: unknown kind {:?}", idx + 1, fields[1])))?;
        let renewable = match fields[2].trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(bad(format!(
                    "line {}: renewable must be true/false, got {other:?}",
                    idx + 1
                )))
            }
        };
        let availability_column = {
            let c = fields[12].trim();
            (!c.is_empty()).then(|| c.to_string())
        };
        let technology = Technology {
            name: fields[0].trim().to_string(),
            kind,
            renewable,
            overnight_cost_power: num(3)?,
            overnight_cost_energy: num(4)?,
            fixed_om: num(5)?,
            variable_om: num(6)?,
            fuel_cost: num(7)?,
            efficiency: num(8)?,
            lifetime_years: num(9)?,
            capacity_lower_bound: num(10)?,
            emission_factor: num(11)?,
            availability: None,
        };
        // availability is joined later; validate the scalar fields now
        let mut probe = technology.clone();
        if probe.kind == TechKind::VariableRenewable {
            probe.availability = Some(vec![S::zero()]);
        }
        probe.validate(1).map_err(|e| bad(e.to_string()))?;
        entries.push(CatalogEntry {
            technology,
            availability_column,
        });
    }
    if entries.is_empty() {
        return Err(bad("no technologies".into()));
    }
    Ok(entries)
}
