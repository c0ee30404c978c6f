//! Deterministic synthetic dataset: a cohort of generated half-hourly
//! household demand / PV-yield profiles, one hourly network-demand year,
//! wind and PV availability profiles, installed-cost curves and the default
//! technology catalog.
//!
//! Everything is derived from a fixed-seed PCG stream and quantised before
//! use, so regenerating the bundled files is bit-identical. The shapes are
//! stylised (southern-hemisphere seasonality, residential double peak,
//! midday insolation) rather than fitted to any measured year.

use std::io::Write;
use std::path::Path;

use crate::sector::{default_catalog, write_catalog, CatalogEntry};
use crate::timeseries::{timestamp_of_step, ProfileSet, Resolution, TimeSeries, Unit};

/// PCG-XSH-RR 32, enough randomness for profile texture.
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = Pcg32 {
            state: 0,
            inc: (stream << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(6364136223846793005).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.next_u32() as f64 / (u32::MAX as f64 + 1.0)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_households: usize,
    pub seed: u64,
    /// Calendar label of the measured household year.
    pub profile_year: i32,
    /// Sector model year the network demand is labeled with.
    pub network_year: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_households: 20,
            seed: 0x5eed_2019_2030,
            profile_year: 2019,
            network_year: 2030,
        }
    }
}

/// The generated dataset, ready to write or to feed straight into the
/// pipeline.
pub struct SyntheticDataset {
    pub profiles: Vec<ProfileSet<f64>>,
    /// Hourly MWh.
    pub network_demand: TimeSeries<f64>,
    /// Hourly availability factors.
    pub wind_availability: TimeSeries<f64>,
    /// Hourly availability derived from the cohort-mean insolation.
    pub pv_availability: TimeSeries<f64>,
    /// Raw (unscaled) cost curves from `first_year`, AUD/kWp and AUD/kWh.
    pub cost_curve_first_year: i32,
    pub pv_cost_raw: Vec<f64>,
    pub battery_cost_raw: Vec<f64>,
    pub catalog: Vec<CatalogEntry<f64>>,
}

fn quantise(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Southern-hemisphere season factor: +1 at mid-January, -1 at mid-July.
fn season(day: usize) -> f64 {
    (2.0 * std::f64::consts::PI * (day as f64 - 15.0) / 365.0).cos()
}

fn generate_household(rng: &mut Pcg32) -> (Vec<f64>, Vec<f64>) {
    let steps = Resolution::HalfHourly.steps_per_year();
    let mut demand = Vec::with_capacity(steps);
    let mut pv = Vec::with_capacity(steps);

    let base = rng.range(0.05, 0.14); // kWh per half hour overnight
    let morning_amp = rng.range(0.1, 0.4);
    let evening_amp = rng.range(0.4, 1.1);
    let evening_center = rng.range(36.0, 40.0); // half-hour slot of the peak
    let weekend_lift = rng.range(1.0, 1.25);
    let aircon = rng.range(0.1, 0.5); // summer sensitivity
    let orientation = rng.range(0.88, 1.04);
    let mut clearness = rng.range(0.5, 0.9);

    for day in 0..365 {
        let s = season(day);
        let weekend = day % 7 >= 5;
        // daylight window in half-hour slots, longest mid-January
        let daylen = 24.0 + 4.4 * s; // slots
        let sunrise = 24.0 - daylen / 2.0;
        clearness = (0.72 * clearness + 0.28 * rng.range(0.45, 1.05)).clamp(0.15, 1.0);
        for slot in 0..48 {
            let t = slot as f64;
            // demand: overnight base, morning bump, evening peak, summer aircon
            let morning = morning_amp * (-(t - 15.0) * (t - 15.0) / 8.0).exp();
            let evening = evening_amp * (-(t - evening_center) * (t - evening_center) / 18.0).exp();
            let mut load = base + morning + evening * (1.0 + aircon * s.max(0.0));
            if weekend {
                load *= weekend_lift;
            }
            load *= 1.0 + 0.25 * (rng.unit() - 0.5);
            demand.push(quantise(load.max(0.0)));

            // PV yield per kWp
            let x = (t - sunrise) / daylen;
            let yield_kwh = if (0.0..1.0).contains(&x) {
                let shape = (std::f64::consts::PI * x).sin().powf(1.25);
                0.42 * shape * clearness * orientation * (1.0 + 0.04 * s)
            } else {
                0.0
            };
            pv.push(quantise(yield_kwh.max(0.0)));
        }
    }
    (demand, pv)
}

fn generate_network_demand(rng: &mut Pcg32, year: i32) -> TimeSeries<f64> {
    let hours = Resolution::Hourly.steps_per_year();
    let mut values = Vec::with_capacity(hours);
    let mut weather = 0.0f64;
    for day in 0..365 {
        let s = season(day);
        let weekend = day % 7 >= 5;
        weather = 0.85 * weather + 0.15 * rng.range(-1.0, 1.0);
        for hour in 0..24 {
            let t = hour as f64;
            let work = if weekend { 0.82 } else { 1.0 };
            let daily = 0.75
                + 0.2 * (-(t - 18.0) * (t - 18.0) / 16.0).exp()
                + 0.12 * (-(t - 8.5) * (t - 8.5) / 14.0).exp()
                + 0.1 * (std::f64::consts::PI * (t - 4.0) / 24.0).sin().max(0.0);
            let summer = 1.0 + (0.22 + 0.1 * weather) * s.max(0.0) * (0.4 + 0.6 * daily);
            let level = 2_050.0 * daily * work * summer * (1.0 + 0.05 * weather);
            values.push(level.max(600.0));
        }
    }
    // pin the year total to the headline annual consumption
    let target = 18.1e6;
    let total: f64 = values.iter().sum();
    let scale = target / total;
    let values: Vec<f64> = values.into_iter().map(|v| quantise(v * scale)).collect();
    TimeSeries::new(year, Resolution::Hourly, Unit::MegawattHoursPerStep, values).unwrap()
}

fn generate_wind(rng: &mut Pcg32, year: i32) -> TimeSeries<f64> {
    let hours = Resolution::Hourly.steps_per_year();
    let mut values = Vec::with_capacity(hours);
    let mut level = 0.25f64;
    for _ in 0..hours {
        level = 0.96 * level + 0.04 * rng.range(0.0, 0.5) + 0.03 * (rng.unit() - 0.5);
        level = level.clamp(0.0, 1.0);
        values.push(quantise(level));
    }
    TimeSeries::new(year, Resolution::Hourly, Unit::Availability, values).unwrap()
}

/// Generate the full dataset from the seed.
pub fn generate(config: &SynthConfig) -> SyntheticDataset {
    let mut profiles = Vec::with_capacity(config.n_households);
    for i in 0..config.n_households {
        let mut rng = Pcg32::new(config.seed, 0x100 + i as u64);
        let (demand, pv) = generate_household(&mut rng);
        let id = format!("h{:03}", i + 1);
        let demand = TimeSeries::new(
            config.profile_year,
            Resolution::HalfHourly,
            Unit::KilowattHoursPerStep,
            demand,
        )
        .unwrap();
        let pv = TimeSeries::new(
            config.profile_year,
            Resolution::HalfHourly,
            Unit::KilowattHoursPerStep,
            pv,
        )
        .unwrap();
        profiles.push(ProfileSet::new(id, demand, pv).unwrap());
    }

    let mut rng = Pcg32::new(config.seed, 7);
    let network_demand = generate_network_demand(&mut rng, config.network_year);
    let wind_availability = generate_wind(&mut rng, config.network_year);

    // utility PV availability mirrors the cohort-mean insolation, hourly
    let steps = Resolution::HalfHourly.steps_per_year();
    let mut mean_yield = vec![0.0f64; steps];
    for p in &profiles {
        for (acc, v) in mean_yield.iter_mut().zip(p.pv_yield().values()) {
            *acc += v;
        }
    }
    let n = profiles.len() as f64;
    let hourly: Vec<f64> = mean_yield
        .chunks_exact(2)
        .map(|pair| quantise(((pair[0] + pair[1]) / n).min(1.0)))
        .collect();
    let pv_availability = TimeSeries::new(
        config.network_year,
        Resolution::Hourly,
        Unit::Availability,
        hourly,
    )
    .unwrap();

    // raw curves chosen so the local scale factors land on the 2019 price
    // points; PV declines 4 %/yr, batteries 8 %/yr
    let years = 12;
    let pv_cost_raw: Vec<f64> = (0..years)
        .map(|k| quantise(1_292.0 / 0.78 * 0.96f64.powi(k)))
        .collect();
    let battery_cost_raw: Vec<f64> = (0..years)
        .map(|k| quantise(1_172.0 / 0.73 * 0.92f64.powi(k)))
        .collect();

    SyntheticDataset {
        profiles,
        network_demand,
        wind_availability,
        pv_availability,
        cost_curve_first_year: config.profile_year,
        pv_cost_raw,
        battery_cost_raw,
        catalog: default_catalog(),
    }
}

/// Write the dataset as the CSV files the pipeline ingests.
pub fn write_dataset(dataset: &SyntheticDataset, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut households =
        std::io::BufWriter::new(std::fs::File::create(dir.join("households.csv"))?);
    write!(households, "timestamp")?;
    for p in &dataset.profiles {
        write!(households, ",{id}_demand,{id}_pv", id = p.household_id())?;
    }
    writeln!(households)?;
    let steps = Resolution::HalfHourly.steps_per_year();
    let year = dataset.profiles[0].demand().start_year();
    for step in 0..steps {
        write!(
            households,
            "{}",
            timestamp_of_step(year, Resolution::HalfHourly, step)
        )?;
        for p in &dataset.profiles {
            write!(
                households,
                ",{},{}",
                p.demand().values()[step],
                p.pv_yield().values()[step]
            )?;
        }
        writeln!(households)?;
    }
    households.flush()?;

    let mut network =
        std::io::BufWriter::new(std::fs::File::create(dir.join("network_demand.csv"))?);
    writeln!(network, "timestamp,demand_mwh")?;
    for (hour, v) in dataset.network_demand.values().iter().enumerate() {
        writeln!(
            network,
            "{},{v}",
            timestamp_of_step(
                dataset.network_demand.start_year(),
                Resolution::Hourly,
                hour
            )
        )?;
    }
    network.flush()?;

    let mut availability =
        std::io::BufWriter::new(std::fs::File::create(dir.join("availability.csv"))?);
    writeln!(availability, "timestamp,wind,pv")?;
    for hour in 0..Resolution::Hourly.steps_per_year() {
        writeln!(
            availability,
            "{},{},{}",
            timestamp_of_step(
                dataset.wind_availability.start_year(),
                Resolution::Hourly,
                hour
            ),
            dataset.wind_availability.values()[hour],
            dataset.pv_availability.values()[hour]
        )?;
    }
    availability.flush()?;

    let mut costs = std::io::BufWriter::new(std::fs::File::create(dir.join("cost_curves.csv"))?);
    writeln!(costs, "year,pv_aud_per_kwp,battery_aud_per_kwh")?;
    for (k, (pv, battery)) in dataset
        .pv_cost_raw
        .iter()
        .zip(&dataset.battery_cost_raw)
        .enumerate()
    {
        writeln!(
            costs,
            "{},{pv},{battery}",
            dataset.cost_curve_first_year + k as i32
        )?;
    }
    costs.flush()?;

    let mut catalog = std::io::BufWriter::new(std::fs::File::create(dir.join("catalog.csv"))?);
    write_catalog(&mut catalog, &dataset.catalog)?;
    catalog.flush()?;
    Ok(())
}

/// Convenience: all ones/zeros sanity numbers for the generated data.
pub fn dataset_summary(dataset: &SyntheticDataset) -> String {
    let mean_demand: f64 = dataset
        .profiles
        .iter()
        .map(|p| p.demand().annual_sum())
        .sum::<f64>()
        / dataset.profiles.len() as f64;
    let mean_yield: f64 = dataset
        .profiles
        .iter()
        .map(|p| p.pv_yield().annual_sum())
        .sum::<f64>()
        / dataset.profiles.len() as f64;
    format!(
        "{} households, mean demand {:.0} kWh/yr, mean yield {:.0} kWh/kWp/yr, network {:.2} TWh",
        dataset.profiles.len(),
        mean_demand,
        mean_yield,
        dataset.network_demand.annual_sum() / 1e6
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn assert_series_close<S: Scalar>(a: &[S], b: &[S]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_eq!(*x, *y);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&SynthConfig::default());
        let b = generate(&SynthConfig::default());
        assert_series_close(a.network_demand.values(), b.network_demand.values());
        assert_series_close(
            a.profiles[7].demand().values(),
            b.profiles[7].demand().values(),
        );
        assert_series_close(
            a.profiles[19].pv_yield().values(),
            b.profiles[19].pv_yield().values(),
        );
    }

    #[test]
    fn magnitudes_are_plausible() {
        let dataset = generate(&SynthConfig::default());
        assert_eq!(dataset.profiles.len(), 20);
        for p in &dataset.profiles {
            let annual = p.demand().annual_sum();
            assert!(
                (2_000.0..12_000.0).contains(&annual),
                "{}: {annual} kWh/yr",
                p.household_id()
            );
            let yield_kwh = p.pv_yield().annual_sum();
            assert!(
                (1_100.0..2_100.0).contains(&yield_kwh),
                "{}: {yield_kwh} kWh/kWp/yr",
                p.household_id()
            );
        }
        let network = dataset.network_demand.annual_sum();
        assert!((network - 18.1e6).abs() < 0.01e6, "network {network} MWh");
        assert!(dataset
            .wind_availability
            .values()
            .iter()
            .all(|v| (0.0..=1.0).contains(v)));
        assert!(dataset
            .pv_availability
            .values()
            .iter()
            .all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn cost_curves_hit_the_2019_price_points() {
        let dataset = generate(&SynthConfig::default());
        assert!((dataset.pv_cost_raw[0] * 0.78 - 1_292.0).abs() < 0.1);
        assert!((dataset.battery_cost_raw[0] * 0.73 - 1_172.0).abs() < 0.1);
        assert!(dataset.pv_cost_raw.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn bundled_dataset_matches_the_generator() {
        // the files committed under data/synthetic must stay regenerable
        let bundled = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic");
        let fresh = std::env::temp_dir().join(format!("synth-drift-{}", std::process::id()));
        write_dataset(&generate(&SynthConfig::default()), &fresh).unwrap();
        for name in [
            "households.csv",
            "network_demand.csv",
            "availability.csv",
            "catalog.csv",
            "cost_curves.csv",
        ] {
            let committed = std::fs::read(bundled.join(name)).expect("bundled file");
            let generated = std::fs::read(fresh.join(name)).unwrap();
            assert_eq!(committed, generated, "{name} drifted from the generator");
        }
        std::fs::remove_dir_all(&fresh).ok();
    }

    #[test]
    fn written_dataset_round_trips() {
        let dataset = generate(&SynthConfig {
            n_households: 3,
            ..SynthConfig::default()
        });
        let dir = std::env::temp_dir().join(format!("synth-test-{}", std::process::id()));
        write_dataset(&dataset, &dir).unwrap();
        let report: crate::timeseries::IngestReport<f64> = crate::timeseries::ingest_profiles(
            &dir.join("households.csv"),
            &crate::timeseries::ColumnSchema::default(),
        )
        .unwrap();
        assert_eq!(report.profiles.len(), 3);
        assert!(report.rejected.is_empty());
        for (a, b) in report.profiles.iter().zip(&dataset.profiles) {
            assert_series_close(a.demand().values(), b.demand().values());
            assert_series_close(a.pv_yield().values(), b.pv_yield().values());
        }
        let network: TimeSeries<f64> = crate::timeseries::read_hourly_csv(
            &dir.join("network_demand.csv"),
            Unit::MegawattHoursPerStep,
        )
        .unwrap();
        assert_series_close(network.values(), dataset.network_demand.values());
        std::fs::remove_dir_all(&dir).ok();
    }
}
