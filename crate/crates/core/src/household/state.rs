//! Installed PV and battery vintages and their usable capacities after
//! linear degradation and end-of-life retirement.

use crate::scalar::Scalar;

use super::spec::{BatterySpec, PvSpec};

/// One installed system: the year it went in and its nameplate size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vintage<S> {
    pub install_year: i32,
    pub nominal: S,
}

impl<S: Scalar> Vintage<S> {
    /// Usable share of nominal capacity at `year`: linear fade between new
    /// and the end-of-life fraction, zero once the lifetime is reached.
    fn usable(&self, year: i32, life_years: u32, fade_per_year: S) -> S {
        let age = year - self.install_year;
        if age < 0 || age >= life_years as i32 {
            return S::zero();
        }
        self.nominal * (S::one() - fade_per_year * crate::scalar::real(age as f64))
    }

    fn active(&self, year: i32, life_years: u32) -> bool {
        let age = year - self.install_year;
        (0..life_years as i32).contains(&age)
    }
}

/// Usable capacities of one household at a given year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsableCapacities<S> {
    pub pv_kwp: S,
    pub battery_kwh: S,
    /// AC power limit; always `battery_kwh / energy_to_power_ratio`.
    pub battery_kw: S,
}

/// The PV and battery systems one household has installed so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HouseholdState<S> {
    pv_vintages: Vec<Vintage<S>>,
    battery_vintages: Vec<Vintage<S>>,
}

impl<S: Scalar> HouseholdState<S> {
    pub fn new() -> Self {
        HouseholdState {
            pv_vintages: Vec::new(),
            battery_vintages: Vec::new(),
        }
    }

    pub fn add_pv(&mut self, install_year: i32, kwp: S) {
        if kwp > S::zero() {
            self.pv_vintages.push(Vintage {
                install_year,
                nominal: kwp,
            });
        }
    }

    pub fn add_battery(&mut self, install_year: i32, kwh: S) {
        if kwh > S::zero() {
            self.battery_vintages.push(Vintage {
                install_year,
                nominal: kwh,
            });
        }
    }

    /// Copy of this state with a candidate addition applied.
    pub fn with_addition(&self, install_year: i32, pv_kwp: S, battery_kwh: S) -> Self {
        let mut next = self.clone();
        next.add_pv(install_year, pv_kwp);
        next.add_battery(install_year, battery_kwh);
        next
    }

    pub fn pv_vintages(&self) -> &[Vintage<S>] {
        &self.pv_vintages
    }

    pub fn battery_vintages(&self) -> &[Vintage<S>] {
        &self.battery_vintages
    }

    /// Degraded usable PV capacity at `year`.
    pub fn usable_pv_kwp(&self, year: i32, pv: &PvSpec<S>) -> S {
        let fade = pv.fade_per_year();
        self.pv_vintages
            .iter()
            .map(|v| v.usable(year, pv.life_years, fade))
            .sum()
    }

    /// Degraded usable battery energy at `year`.
    pub fn usable_battery_kwh(&self, year: i32, battery: &BatterySpec<S>) -> S {
        let fade = battery.fade_per_year();
        self.battery_vintages
            .iter()
            .map(|v| v.usable(year, battery.life_years, fade))
            .sum()
    }

    /// All usable capacities at `year`.
    pub fn usable(
        &self,
        year: i32,
        pv: &PvSpec<S>,
        battery: &BatterySpec<S>,
    ) -> UsableCapacities<S> {
        let battery_kwh = self.usable_battery_kwh(year, battery);
        UsableCapacities {
            pv_kwp: self.usable_pv_kwp(year, pv),
            battery_kwh,
            battery_kw: battery_kwh / battery.energy_to_power_ratio,
        }
    }

    /// Nameplate PV of vintages not yet retired: the FiT eligibility and the
    /// cumulative grid cap both look at installed size, not degraded output.
    pub fn nominal_pv_kwp(&self, year: i32, pv: &PvSpec<S>) -> S {
        self.pv_vintages
            .iter()
            .filter(|v| v.active(year, pv.life_years))
            .map(|v| v.nominal)
            .sum()
    }

    /// Nameplate battery energy of vintages not yet retired.
    pub fn nominal_battery_kwh(&self, year: i32, battery: &BatterySpec<S>) -> S {
        self.battery_vintages
            .iter()
            .filter(|v| v.active(year, battery.life_years))
            .map(|v| v.nominal)
            .sum()
    }
}
