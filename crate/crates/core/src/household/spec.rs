//! Parameter blocks for the household model: equipment, tariffs, installed
//! system costs and the investment-evaluation grid.

use thiserror::Error;

use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{0}")]
    Invalid(String),
    #[error("cost curves cover {covered_from}-{covered_to}, need {needed_from}-{needed_to}")]
    CostCurveCoverage {
        covered_from: i32,
        covered_to: i32,
        needed_from: i32,
        needed_to: i32,
    },
}

/// Residential lithium-ion battery system parameters.
#[derive(Debug, Clone)]
pub struct BatterySpec<S> {
    /// Energy capacity divided by AC power capacity, in hours.
    pub energy_to_power_ratio: S,
    pub roundtrip_efficiency: S,
    pub life_years: u32,
    pub end_of_life_capacity_fraction: S,
}

impl<S: Scalar> Default for BatterySpec<S> {
    fn default() -> Self {
        BatterySpec {
            energy_to_power_ratio: real(2.5),
            roundtrip_efficiency: real(0.92),
            life_years: 10,
            end_of_life_capacity_fraction: real(0.70),
        }
    }
}

impl<S: Scalar> BatterySpec<S> {
    /// One-way efficiency: the round-trip figure split symmetrically between
    /// charge and discharge.
    pub fn one_way_efficiency(&self) -> S {
        self.roundtrip_efficiency.sqrt()
    }

    /// Linear capacity fade per year of age.
    pub fn fade_per_year(&self) -> S {
        (S::one() - self.end_of_life_capacity_fraction) / real::<S>(self.life_years as f64)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.roundtrip_efficiency > S::zero() && self.roundtrip_efficiency <= S::one()) {
            return Err(SpecError::Invalid(
                "battery round-trip efficiency must be in (0, 1]".into(),
            ));
        }
        if !(self.end_of_life_capacity_fraction > S::zero()
            && self.end_of_life_capacity_fraction <= S::one())
        {
            return Err(SpecError::Invalid(
                "battery end-of-life fraction must be in (0, 1]".into(),
            ));
        }
        if self.energy_to_power_ratio <= S::zero() {
            return Err(SpecError::Invalid(
                "battery energy-to-power ratio must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Rooftop PV system parameters.
#[derive(Debug, Clone)]
pub struct PvSpec<S> {
    pub life_years: u32,
    pub end_of_life_capacity_fraction: S,
}

impl<S: Scalar> Default for PvSpec<S> {
    fn default() -> Self {
        PvSpec {
            life_years: 25,
            end_of_life_capacity_fraction: real(0.80),
        }
    }
}

impl<S: Scalar> PvSpec<S> {
    pub fn fade_per_year(&self) -> S {
        (S::one() - self.end_of_life_capacity_fraction) / real::<S>(self.life_years as f64)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.end_of_life_capacity_fraction > S::zero()
            && self.end_of_life_capacity_fraction <= S::one())
        {
            return Err(SpecError::Invalid(
                "PV end-of-life fraction must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Battery and PV specs bundled, as dispatch and appraisal need both.
#[derive(Debug, Clone)]
pub struct EquipmentSpecs<S> {
    pub battery: BatterySpec<S>,
    pub pv: PvSpec<S>,
}

impl<S: Scalar> Default for EquipmentSpecs<S> {
    fn default() -> Self {
        EquipmentSpecs {
            battery: BatterySpec::default(),
            pv: PvSpec::default(),
        }
    }
}

/// Flat volumetric retail tariff with escalation and a feed-in tariff set as
/// a fraction of the volumetric rate. PV systems above the eligibility cap
/// forfeit all export payments.
#[derive(Debug, Clone)]
pub struct TariffSchedule<S> {
    pub base_year: i32,
    /// AUD/kWh in the base year.
    pub base_volumetric_rate: S,
    /// Fractional escalation per year.
    pub annual_escalation: S,
    /// FiT as a fraction of the volumetric rate: 0, 0.25 or 0.50.
    pub fit_fraction: S,
    /// kWp above which all export revenue is forfeited.
    pub fit_eligibility_cap_kwp: S,
    /// AUD/day pass-through constant; cancels out of investment decisions.
    pub fixed_daily_charge: S,
}

impl<S: Scalar> TariffSchedule<S> {
    pub fn with_fit_fraction(fit_fraction: S) -> Self {
        TariffSchedule {
            base_year: 2019,
            base_volumetric_rate: real(0.29),
            annual_escalation: real(0.04),
            fit_fraction,
            fit_eligibility_cap_kwp: real(5.0),
            fixed_daily_charge: real(1.0),
        }
    }

    /// AUD/kWh volumetric rate in `year`.
    pub fn volumetric_rate(&self, year: i32) -> S {
        self.base_volumetric_rate * (S::one() + self.annual_escalation).powi(year - self.base_year)
    }

    /// AUD/kWh paid for exports in `year` (before the eligibility rule).
    pub fn fit_rate(&self, year: i32) -> S {
        self.fit_fraction * self.volumetric_rate(year)
    }

    /// Fixed charges over a non-leap year.
    pub fn fixed_annual_charge(&self) -> S {
        self.fixed_daily_charge * real(365.0)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.base_volumetric_rate < S::zero()
            || self.fit_fraction < S::zero()
            || self.fixed_daily_charge < S::zero()
            || self.fit_eligibility_cap_kwp < S::zero()
        {
            return Err(SpecError::Invalid(
                "tariff components must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Installed-system cost trajectories, already scaled to local price levels.
#[derive(Debug, Clone)]
pub struct CostCurves<S> {
    first_year: i32,
    pv_aud_per_kwp: Vec<S>,
    battery_aud_per_kwh: Vec<S>,
}

impl<S: Scalar> CostCurves<S> {
    /// Build from raw curve values, applying the local price scale factors
    /// once here (0.78 for PV, 0.73 for batteries in the default setup).
    pub fn from_raw(
        first_year: i32,
        raw_pv: &[S],
        raw_battery: &[S],
        pv_scale: S,
        battery_scale: S,
    ) -> Result<Self, SpecError> {
        if raw_pv.len() != raw_battery.len() || raw_pv.is_empty() {
            return Err(SpecError::Invalid(
                "cost curves must be non-empty and equal length".into(),
            ));
        }
        let pv: Vec<S> = raw_pv.iter().map(|v| *v * pv_scale).collect();
        let battery: Vec<S> = raw_battery.iter().map(|v| *v * battery_scale).collect();
        let curves = CostCurves {
            first_year,
            pv_aud_per_kwp: pv,
            battery_aud_per_kwh: battery,
        };
        curves.validate()?;
        Ok(curves)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        for v in self
            .pv_aud_per_kwp
            .iter()
            .chain(self.battery_aud_per_kwh.iter())
        {
            if !(*v > S::zero()) {
                return Err(SpecError::Invalid(
                    "installed system costs must be strictly positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn ensure_covers(&self, from: i32, to: i32) -> Result<(), SpecError> {
        let last = self.first_year + self.pv_aud_per_kwp.len() as i32 - 1;
        if from < self.first_year || to > last {
            return Err(SpecError::CostCurveCoverage {
                covered_from: self.first_year,
                covered_to: last,
                needed_from: from,
                needed_to: to,
            });
        }
        Ok(())
    }

    fn index(&self, year: i32) -> usize {
        let last = self.first_year + self.pv_aud_per_kwp.len() as i32 - 1;
        assert!(
            (self.first_year..=last).contains(&year),
            "cost curves do not cover {year}"
        );
        (year - self.first_year) as usize
    }

    pub fn pv_cost(&self, year: i32) -> S {
        self.pv_aud_per_kwp[self.index(year)]
    }

    pub fn battery_cost(&self, year: i32) -> S {
        self.battery_aud_per_kwh[self.index(year)]
    }

    /// Sensitivity variant with both curves multiplied by constants.
    pub fn multiplied(&self, pv_multiplier: S, battery_multiplier: S) -> Self {
        CostCurves {
            first_year: self.first_year,
            pv_aud_per_kwp: self
                .pv_aud_per_kwp
                .iter()
                .map(|v| *v * pv_multiplier)
                .collect(),
            battery_aud_per_kwh: self
                .battery_aud_per_kwh
                .iter()
                .map(|v| *v * battery_multiplier)
                .collect(),
        }
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }
}

/// Candidate grid for yearly investment additions. Additions are multiples of
/// the step sizes; cumulative installed capacity stays within the maxima.
#[derive(Debug, Clone)]
pub struct EvaluationGrid<S> {
    pub pv_step_kwp: S,
    pub pv_max_kwp: S,
    pub battery_step_kwh: S,
    pub battery_max_kwh: S,
}

impl<S: Scalar> Default for EvaluationGrid<S> {
    fn default() -> Self {
        EvaluationGrid {
            pv_step_kwp: real(0.5),
            pv_max_kwp: real(10.0),
            battery_step_kwh: real(1.0),
            battery_max_kwh: real(18.0),
        }
    }
}

impl<S: Scalar> EvaluationGrid<S> {
    pub fn validate(&self) -> Result<(), SpecError> {
        for (step, max) in [
            (self.pv_step_kwp, self.pv_max_kwp),
            (self.battery_step_kwh, self.battery_max_kwh),
        ] {
            if step <= S::zero() || max < S::zero() {
                return Err(SpecError::Invalid("grid steps must be positive".into()));
            }
            let ratio = max / step;
            if (ratio - ratio.round()).abs() > real(1e-9) {
                return Err(SpecError::Invalid(
                    "grid steps must divide the maxima".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Everything the yearly appraisal needs besides the household itself.
#[derive(Debug, Clone)]
pub struct EconomicContext<S> {
    pub discount_rate: S,
    pub horizon_years: u32,
    pub dpp_threshold_years: S,
    pub tariff: TariffSchedule<S>,
    pub costs: CostCurves<S>,
}

impl<S: Scalar> EconomicContext<S> {
    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.discount_rate > S::zero()) {
            return Err(SpecError::Invalid("discount rate must be positive".into()));
        }
        if real::<S>(self.horizon_years as f64) < self.dpp_threshold_years {
            return Err(SpecError::Invalid(
                "horizon must cover the DPP threshold".into(),
            ));
        }
        self.tariff.validate()?;
        self.costs.validate()
    }
}
