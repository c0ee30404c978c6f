//! Sparse container for the sector linear program: labeled equality and
//! upper-bound rows over non-negative variables, with export in the CPLEX LP
//! text format for cross-checking against independent solvers.

use std::fmt;
use std::io::{self, Write};

use crate::scalar::Scalar;

/// What a variable means in the sector model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarLabel {
    /// Installed power capacity of a technology (MW).
    Capacity { tech: usize },
    /// Installed energy capacity of a storage technology (MWh).
    EnergyCapacity { tech: usize },
    /// Hourly generation (MWh).
    Generation { tech: usize, hour: usize },
    /// Hourly storage charging (MWh).
    Charge { tech: usize, hour: usize },
    /// Hourly storage discharging (MWh).
    Discharge { tech: usize, hour: usize },
    /// Hourly storage level (MWh).
    Level { tech: usize, hour: usize },
    /// Hourly disposal of surplus feed-in (MWh).
    Spill { hour: usize },
}

impl fmt::Display for VarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarLabel::Capacity { tech } => write!(f, "cap_t{tech}"),
            VarLabel::EnergyCapacity { tech } => write!(f, "ecap_t{tech}"),
            VarLabel::Generation { tech, hour } => write!(f, "gen_t{tech}_h{hour}"),
            VarLabel::Charge { tech, hour } => write!(f, "ch_t{tech}_h{hour}"),
            VarLabel::Discharge { tech, hour } => write!(f, "dis_t{tech}_h{hour}"),
            VarLabel::Level { tech, hour } => write!(f, "lev_t{tech}_h{hour}"),
            VarLabel::Spill { hour } => write!(f, "spill_h{hour}"),
        }
    }
}

/// What a constraint row asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLabel {
    /// Hourly energy balance (equality); its dual is the wholesale price.
    Balance { hour: usize },
    /// Storage level dynamics (equality, cyclic over the year).
    StorageLevel { tech: usize, hour: usize },
    /// Generation limited by installed (and for renewables, available) capacity.
    DispatchCap { tech: usize, hour: usize },
    /// Charging power limit.
    ChargeCap { tech: usize, hour: usize },
    /// Discharging power limit.
    DischargeCap { tech: usize, hour: usize },
    /// Storage level limited by energy capacity.
    LevelCap { tech: usize, hour: usize },
    /// Minimum installed capacity (existing build).
    CapacityLowerBound { tech: usize },
    /// Minimum renewable share of yearly gross demand.
    RenewableShare,
}

impl RowLabel {
    /// Coarse name used in infeasibility diagnostics.
    pub fn class(&self) -> &'static str {
        match self {
            RowLabel::Balance { .. } => "energy balance",
            RowLabel::StorageLevel { .. } => "storage level dynamics",
            RowLabel::DispatchCap { .. } => "dispatch capacity bound",
            RowLabel::ChargeCap { .. } => "charge capacity bound",
            RowLabel::DischargeCap { .. } => "discharge capacity bound",
            RowLabel::LevelCap { .. } => "storage energy bound",
            RowLabel::CapacityLowerBound { .. } => "capacity lower bound",
            RowLabel::RenewableShare => "renewable share",
        }
    }
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowLabel::Balance { hour } => write!(f, "balance[h={hour}]"),
            RowLabel::StorageLevel { tech, hour } => write!(f, "level[t={tech},h={hour}]"),
            RowLabel::DispatchCap { tech, hour } => write!(f, "gen_cap[t={tech},h={hour}]"),
            RowLabel::ChargeCap { tech, hour } => write!(f, "charge_cap[t={tech},h={hour}]"),
            RowLabel::DischargeCap { tech, hour } => write!(f, "discharge_cap[t={tech},h={hour}]"),
            RowLabel::LevelCap { tech, hour } => write!(f, "level_cap[t={tech},h={hour}]"),
            RowLabel::CapacityLowerBound { tech } => write!(f, "cap_lb[t={tech}]"),
            RowLabel::RenewableShare => write!(f, "res_share"),
        }
    }
}

/// One sparse constraint row.
#[derive(Debug, Clone)]
pub struct Row<S> {
    pub label: RowLabel,
    pub coeffs: Vec<(usize, S)>,
    pub rhs: S,
}

/// `min c'x` subject to equality rows, upper-bound rows (`a'x <= rhs`) and
/// `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    pub n_vars: usize,
    pub objective: Vec<S>,
    pub var_labels: Vec<VarLabel>,
    pub eq_rows: Vec<Row<S>>,
    pub ub_rows: Vec<Row<S>>,
}

/// Size summary, used by the construction-count checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpCounts {
    pub variables: usize,
    pub equality_rows: usize,
    pub upper_bound_rows: usize,
    pub nonzeros: usize,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn counts(&self) -> LpCounts {
        LpCounts {
            variables: self.n_vars,
            equality_rows: self.eq_rows.len(),
            upper_bound_rows: self.ub_rows.len(),
            nonzeros: self
                .eq_rows
                .iter()
                .chain(&self.ub_rows)
                .map(|r| r.coeffs.len())
                .sum(),
        }
    }

    /// Index of the hourly balance row within `eq_rows`.
    pub fn balance_row_index(&self, hour: usize) -> Option<usize> {
        // the builder puts balance rows first, indexed by hour
        if let Some(row) = self.eq_rows.get(hour) {
            if row.label == (RowLabel::Balance { hour }) {
                return Some(hour);
            }
        }
        self.eq_rows
            .iter()
            .position(|r| r.label == RowLabel::Balance { hour })
    }

    /// Structural sanity: indices in range, finite coefficients, label count.
    pub fn validate_structure(&self) -> Result<(), String> {
        if self.objective.len() != self.n_vars {
            return Err(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.n_vars
            ));
        }
        if self.var_labels.len() != self.n_vars {
            return Err("variable labels out of sync".into());
        }
        for row in self.eq_rows.iter().chain(&self.ub_rows) {
            if !row.rhs.is_finite() {
                return Err(format!("{}: non-finite rhs", row.label));
            }
            for (idx, coeff) in &row.coeffs {
                if *idx >= self.n_vars {
                    return Err(format!("{}: references variable {idx}", row.label));
                }
                if !coeff.is_finite() {
                    return Err(format!("{}: non-finite coefficient", row.label));
                }
            }
        }
        Ok(())
    }

    /// Evaluate `a'x` for a row.
    pub fn row_activity(row: &Row<S>, x: &[S]) -> S {
        row.coeffs.iter().map(|(idx, coeff)| *coeff * x[*idx]).sum()
    }

    /// Objective value at `x`.
    pub fn objective_value(&self, x: &[S]) -> S {
        self.objective.iter().zip(x).map(|(c, v)| *c * *v).sum()
    }

    /// Write the program in CPLEX LP text format.
    pub fn write_lp_format(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(
            out,
            "\\ {} variables, {} rows",
            self.n_vars,
            self.eq_rows.len() + self.ub_rows.len()
        )?;
        writeln!(out, "Minimize")?;
        write!(out, " obj:")?;
        let mut first = true;
        for (idx, c) in self.objective.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            write_term(out, *c, &self.var_labels[idx], &mut first)?;
        }
        if first {
            write!(
                out,
                " 0 {}",
                self.var_labels
                    .first()
                    .map(|v| v.to_string())
                    .unwrap_or_default()
            )?;
        }
        writeln!(out)?;
        writeln!(out, "Subject To")?;
        for (row, op) in self
            .eq_rows
            .iter()
            .map(|r| (r, "="))
            .chain(self.ub_rows.iter().map(|r| (r, "<=")))
        {
            write!(out, " {}:", sanitize(&row.label.to_string()))?;
            let mut first = true;
            for (idx, coeff) in &row.coeffs {
                write_term(out, *coeff, &self.var_labels[*idx], &mut first)?;
            }
            writeln!(out, " {} {}", op, row.rhs)?;
        }
        // x >= 0 is the LP-format default for all variables
        writeln!(out, "End")?;
        Ok(())
    }
}

fn write_term<S: Scalar>(
    out: &mut impl Write,
    coeff: S,
    label: &VarLabel,
    first: &mut bool,
) -> io::Result<()> {
    let sign = if coeff < S::zero() {
        " -"
    } else if *first {
        " "
    } else {
        " +"
    };
    *first = false;
    write!(out, "{sign} {} {label}", coeff.abs())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '[' | ']' | '=' | ',' => '_',
            other => other,
        })
        .collect()
}
