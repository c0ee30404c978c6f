//! Cohort normalisation and residual network demand construction: the cohort
//! is averaged into one representative household, scaled to the assumed fleet
//! size, and its net grid utilisation change is subtracted from network
//! demand.

use thiserror::Error;

use crate::household::HouseholdRun;
use crate::scalar::{real, Scalar};
use crate::timeseries::{TimeSeries, TimeSeriesError, Unit};

#[derive(Debug, Error)]
pub enum FleetError {
    #[error("cannot build a representative profile from an empty cohort")]
    EmptyCohort,
    #[error("network demand must be hourly MWh, got {0}")]
    BadNetworkUnit(crate::timeseries::Unit),
    #[error(transparent)]
    Series(#[from] TimeSeriesError),
}

/// Assumed number of prosumage households the representative is scaled to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetSpec {
    pub n_households: u64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        FleetSpec {
            n_households: 500_000,
        }
    }
}

/// Element-wise cohort means of the final-year household series, still at the
/// household scale (kWh/step).
#[derive(Debug, Clone)]
pub struct RepresentativeProfile<S> {
    pub net_grid: TimeSeries<S>,
    pub demand: TimeSeries<S>,
    pub pv_generation: TimeSeries<S>,
    pub grid_import: TimeSeries<S>,
}

impl<S: Scalar> RepresentativeProfile<S> {
    /// Hourly view of the representative household (energy-conserving
    /// pairwise aggregation).
    pub fn to_hourly(&self) -> Result<RepresentativeProfile<S>, TimeSeriesError> {
        Ok(RepresentativeProfile {
            net_grid: self.net_grid.resample_to_hourly()?,
            demand: self.demand.resample_to_hourly()?,
            pv_generation: self.pv_generation.resample_to_hourly()?,
            grid_import: self.grid_import.resample_to_hourly()?,
        })
    }
}

fn mean_series<S: Scalar, F: Fn(&HouseholdRun<S>) -> &TimeSeries<S>>(
    cohort: &[HouseholdRun<S>],
    select: F,
) -> Result<TimeSeries<S>, FleetError> {
    let first = select(&cohort[0]);
    let mut acc = vec![S::zero(); first.len()];
    for run in cohort {
        let series = select(run);
        if series.len() != first.len() {
            return Err(FleetError::Series(TimeSeriesError::LengthMismatch {
                left: first.len(),
                right: series.len(),
            }));
        }
        for (a, v) in acc.iter_mut().zip(series.values()) {
            *a = *a + *v;
        }
    }
    let n = real::<S>(cohort.len() as f64);
    for a in acc.iter_mut() {
        *a = *a / n;
    }
    Ok(first.with_values(acc)?)
}

/// Element-wise arithmetic mean of the cohort's net-grid, demand and
/// PV-generation series.
pub fn representative_profile<S: Scalar>(
    cohort: &[HouseholdRun<S>],
) -> Result<RepresentativeProfile<S>, FleetError> {
    if cohort.is_empty() {
        return Err(FleetError::EmptyCohort);
    }
    Ok(RepresentativeProfile {
        net_grid: mean_series(cohort, |r| &r.net_grid)?,
        demand: mean_series(cohort, |r| &r.demand)?,
        pv_generation: mean_series(cohort, |r| &r.pv_generation)?,
        grid_import: mean_series(cohort, |r| &r.grid_import)?,
    })
}

/// Residual network demand plus the scaled fleet companion series, all hourly
/// MWh on the sector-model year.
#[derive(Debug, Clone)]
pub struct ResidualDemand<S> {
    /// What the utility sector must serve; negative values are net exports.
    pub residual: TimeSeries<S>,
    /// Total fleet PV generation (for renewable-share accounting).
    pub household_pv: TimeSeries<S>,
    /// Total fleet net grid utilisation.
    pub household_net: TimeSeries<S>,
    /// Total fleet underlying demand.
    pub household_demand: TimeSeries<S>,
    /// Total fleet grid imports (for the imports-only price variant).
    pub household_import: TimeSeries<S>,
    pub fleet: FleetSpec,
}

/// Subtract the fleet's net-grid change from network demand:
/// `reduction_t = n * (underlying_t - net_t)` converted kWh to MWh and
/// `residual_t = network_t - reduction_t`.
pub fn build_residual<S: Scalar>(
    network_demand: &TimeSeries<S>,
    representative_hourly: &RepresentativeProfile<S>,
    fleet: FleetSpec,
) -> Result<ResidualDemand<S>, FleetError> {
    if network_demand.unit() != Unit::MegawattHoursPerStep {
        return Err(FleetError::BadNetworkUnit(network_demand.unit()));
    }
    let rep = representative_hourly;
    if rep.net_grid.resolution() != network_demand.resolution() {
        return Err(FleetError::Series(TimeSeriesError::ResolutionMismatch {
            expected: network_demand.resolution(),
            actual: rep.net_grid.resolution(),
        }));
    }
    if rep.net_grid.len() != network_demand.len() {
        return Err(FleetError::Series(TimeSeriesError::LengthMismatch {
            left: network_demand.len(),
            right: rep.net_grid.len(),
        }));
    }

    let year = network_demand.start_year();
    let n = real::<S>(fleet.n_households as f64);
    let kwh_to_mwh = real::<S>(1e-3);
    let scale = n * kwh_to_mwh;

    let mut residual = Vec::with_capacity(network_demand.len());
    let mut hh_pv = Vec::with_capacity(network_demand.len());
    let mut hh_net = Vec::with_capacity(network_demand.len());
    let mut hh_demand = Vec::with_capacity(network_demand.len());
    let mut hh_import = Vec::with_capacity(network_demand.len());
    for (t, network) in network_demand.values().iter().enumerate() {
        let underlying = rep.demand.values()[t];
        let net = rep.net_grid.values()[t];
        let reduction = scale * (underlying - net);
        residual.push(*network - reduction);
        hh_pv.push(scale * rep.pv_generation.values()[t]);
        hh_net.push(scale * net);
        hh_demand.push(scale * underlying);
        hh_import.push(scale * rep.grid_import.values()[t]);
    }

    let mk = |values: Vec<S>| {
        TimeSeries::new(
            year,
            network_demand.resolution(),
            Unit::MegawattHoursPerStep,
            values,
        )
    };
    Ok(ResidualDemand {
        residual: mk(residual)?,
        household_pv: mk(hh_pv)?,
        household_net: mk(hh_net)?,
        household_demand: mk(hh_demand)?,
        household_import: mk(hh_import)?,
        fleet,
    })
}
