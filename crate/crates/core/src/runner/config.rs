//! Line-based run configuration: `key = value` pairs, `#` comments, lists
//! comma-separated. The whole file is checked before any compute starts.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::solver::BackendChoice;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("key {key}: {reason}")]
    BadValue { key: String, reason: String },
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("referenced file does not exist: {0}")]
    MissingFile(PathBuf),
}

/// Renewable-share entry in the matrix: a fixed value or the endogenous run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResShareChoice {
    Fixed(f64),
    Endogenous,
}

impl ResShareChoice {
    pub fn label(&self) -> String {
        match self {
            ResShareChoice::Fixed(v) => format!("res{}", (v * 100.0).round() as i64),
            ResShareChoice::Endogenous => "resend".into(),
        }
    }
}

/// Everything a run needs: input paths, the scenario matrix, economics and
/// execution knobs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub profiles: PathBuf,
    pub network_demand: PathBuf,
    pub availability: PathBuf,
    pub catalog: PathBuf,
    pub cost_curves: PathBuf,
    pub out_dir: PathBuf,

    pub fit_fractions: Vec<f64>,
    pub res_shares: Vec<ResShareChoice>,
    pub fleet_sizes: Vec<u64>,
    pub pv_cost_multipliers: Vec<f64>,
    pub battery_cost_multipliers: Vec<f64>,

    pub discount_rate: f64,
    pub horizon_years: u32,
    pub dpp_threshold_years: f64,
    pub interest_rate: f64,
    pub pv_cost_scale: f64,
    pub battery_cost_scale: f64,
    pub start_year: i32,
    pub end_year: i32,
    pub fixed_daily_charge: f64,

    pub backend: BackendChoice,
    pub jobs: usize,
    pub reproduction_mode: bool,
}

impl RunConfig {
    /// Parse a config file; relative paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_str_with_base(&text, base)
    }

    pub fn from_str_with_base(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
        const KEYS: &[&str] = &[
            "profiles",
            "network_demand",
            "availability",
            "catalog",
            "cost_curves",
            "out_dir",
            "fit_fractions",
            "res_shares",
            "fleet_sizes",
            "pv_cost_multipliers",
            "battery_cost_multipliers",
            "discount_rate",
            "horizon_years",
            "dpp_threshold_years",
            "interest_rate",
            "pv_cost_scale",
            "battery_cost_scale",
            "start_year",
            "end_year",
            "fixed_daily_charge",
            "backend",
            "jobs",
            "reproduction_mode",
        ];
        let mut seen = BTreeSet::new();
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(ConfigError::BadLine {
                    line,
                    text: raw.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line, key });
            }
            if !seen.insert(key.clone()) {
                return Err(ConfigError::DuplicateKey { line, key });
            }
            pairs.push((key, value));
        }

        let lookup = |key: &str| {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let required_path = |key: &'static str| -> Result<PathBuf, ConfigError> {
            let value = lookup(key).ok_or(ConfigError::Missing(key))?;
            Ok(base.join(value))
        };
        let parse_f64 = |key: &str, value: &str| -> Result<f64, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                reason: format!("unparseable number {value:?}"),
            })
        };
        let f64_or = |key: &str, default: f64| -> Result<f64, ConfigError> {
            match lookup(key) {
                Some(v) => parse_f64(key, v),
                None => Ok(default),
            }
        };
        let list_f64 = |key: &str, default: &[f64]| -> Result<Vec<f64>, ConfigError> {
            match lookup(key) {
                None => Ok(default.to_vec()),
                Some(v) => v
                    .split(',')
                    .map(|item| parse_f64(key, item.trim()))
                    .collect(),
            }
        };

        let fit_fractions = list_f64("fit_fractions", &[0.0, 0.25, 0.5])?;
        for f in &fit_fractions {
            if !(0.0..=1.0).contains(f) {
                return Err(ConfigError::BadValue {
                    key: "fit_fractions".into(),
                    reason: format!("{f} outside [0, 1]"),
                });
            }
        }

        let res_shares = match lookup("res_shares") {
            None => vec![
                ResShareChoice::Fixed(0.39),
                ResShareChoice::Fixed(0.49),
                ResShareChoice::Fixed(0.59),
            ],
            Some(v) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    if item == "endogenous" {
                        Ok(ResShareChoice::Endogenous)
                    } else {
                        let share = parse_f64("res_shares", item)?;
                        if !(share > 0.0 && share <= 1.0) {
                            return Err(ConfigError::BadValue {
                                key: "res_shares".into(),
                                reason: format!("{share} outside (0, 1]"),
                            });
                        }
                        Ok(ResShareChoice::Fixed(share))
                    }
                })
                .collect::<Result<_, _>>()?,
        };

        let fleet_sizes = match lookup("fleet_sizes") {
            None => vec![500_000],
            Some(v) => v
                .split(',')
                .map(|item| {
                    item.trim()
                        .parse::<u64>()
                        .map_err(|_| ConfigError::BadValue {
                            key: "fleet_sizes".into(),
                            reason: format!("unparseable count {item:?}"),
                        })
                })
                .collect::<Result<_, _>>()?,
        };
        if fleet_sizes.iter().any(|n| *n == 0) {
            return Err(ConfigError::BadValue {
                key: "fleet_sizes".into(),
                reason: "fleet sizes must be positive".into(),
            });
        }

        let backend = match lookup("backend") {
            None => BackendChoice::Auto,
            Some(v) => BackendChoice::parse(v).ok_or_else(|| ConfigError::BadValue {
                key: "backend".into(),
                reason: format!("unknown backend {v:?} (auto|simplex|clarabel)"),
            })?,
        };

        let jobs = match lookup("jobs") {
            None => 0,
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                key: "jobs".into(),
                reason: format!("unparseable count {v:?}"),
            })?,
        };

        let reproduction_mode = match lookup("reproduction_mode") {
            None => false,
            Some("true") => true,
            Some("false") => false,
            Some(v) => {
                return Err(ConfigError::BadValue {
                    key: "reproduction_mode".into(),
                    reason: format!("expected true/false, got {v:?}"),
                })
            }
        };

        let config = RunConfig {
            profiles: required_path("profiles")?,
            network_demand: required_path("network_demand")?,
            availability: required_path("availability")?,
            catalog: required_path("catalog")?,
            cost_curves: required_path("cost_curves")?,
            out_dir: base.join(lookup("out_dir").unwrap_or("out")),
            fit_fractions,
            res_shares,
            fleet_sizes,
            pv_cost_multipliers: list_f64("pv_cost_multipliers", &[1.0])?,
            battery_cost_multipliers: list_f64("battery_cost_multipliers", &[1.0])?,
            discount_rate: f64_or("discount_rate", 0.05)?,
            horizon_years: match lookup("horizon_years") {
                None => 10,
                Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                    key: "horizon_years".into(),
                    reason: format!("unparseable count {v:?}"),
                })?,
            },
            dpp_threshold_years: f64_or("dpp_threshold_years", 5.0)?,
            interest_rate: f64_or("interest_rate", 0.04)?,
            pv_cost_scale: f64_or("pv_cost_scale", 0.78)?,
            battery_cost_scale: f64_or("battery_cost_scale", 0.73)?,
            start_year: match lookup("start_year") {
                None => 2019,
                Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                    key: "start_year".into(),
                    reason: format!("unparseable year {v:?}"),
                })?,
            },
            end_year: match lookup("end_year") {
                None => 2030,
                Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                    key: "end_year".into(),
                    reason: format!("unparseable year {v:?}"),
                })?,
            },
            fixed_daily_charge: f64_or("fixed_daily_charge", 1.0)?,
            backend,
            jobs,
            reproduction_mode,
        };

        if config.start_year >= config.end_year {
            return Err(ConfigError::BadValue {
                key: "start_year".into(),
                reason: "start_year must be before end_year".into(),
            });
        }
        for key_vals in [
            ("pv_cost_multipliers", &config.pv_cost_multipliers),
            ("battery_cost_multipliers", &config.battery_cost_multipliers),
        ] {
            if key_vals.1.iter().any(|m| !(*m > 0.0)) {
                return Err(ConfigError::BadValue {
                    key: key_vals.0.into(),
                    reason: "multipliers must be positive".into(),
                });
            }
        }

        // fail fast on missing inputs
        for path in [
            &config.profiles,
            &config.network_demand,
            &config.availability,
            &config.catalog,
            &config.cost_curves,
        ] {
            if !path.exists() {
                return Err(ConfigError::MissingFile(path.clone()));
            }
        }
        Ok(config)
    }

    /// Label for a feed-in-tariff fraction, e.g. `fit25`.
    pub fn fit_label(fit: f64) -> String {
        format!("fit{}", (fit * 100.0).round() as i64)
    }

    /// Label for a cost-multiplier pair, e.g. `pv100_bat80`.
    pub fn multiplier_label(pv_mult: f64, battery_mult: f64) -> String {
        format!(
            "pv{}_bat{}",
            (pv_mult * 100.0).round() as i64,
            (battery_mult * 100.0).round() as i64
        )
    }
}
