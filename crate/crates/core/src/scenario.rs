//! On-disk scenario format.
//!
//! Scenarios are JSON documents with a `version` field. Powers and gains are given in
//! dB with a `_db`/`_dbm`/`_dbsm` suffix; everything else is SI. Any omitted block falls
//! back to the 77 GHz reference radar and target.
//!
//! ```json
//! {
//!   "version": 1,
//!   "radar": { "tx_power_dbm": 0.0, "noise_figure_db": 15.0 },
//!   "target": { "range_m": 180.0, "velocity_mps": 25.0,
//!               "reflector": { "kind": "active_irs", "gain_db": 30.0 } },
//!   "interferers": [ { "preset": "similar_slope", "range_m": 50.0 } ],
//!   "master_seed": 7
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::DetectionConfig;
use crate::irs::{Geometry, IrsSpec, PhaseProfile};
use crate::params::{derive_waveform_metrics, has_errors, validate_scenario, Diagnostic, FmcwParams};
use crate::propagation::{InterfererSpec, Reflector, SlopeSpec, TargetSpec, TimeOffset};
use crate::synth::Scenario;
use crate::units::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radar: Option<RadarFile>,
    #[serde(default)]
    pub target: TargetFile,
    #[serde(default)]
    pub geometry: GeometryFile,
    #[serde(default)]
    pub interferers: Vec<InterfererFile>,
    #[serde(default = "yes")]
    pub noise_enabled: bool,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub detection: DetectionConfig,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarFile {
    pub carrier_hz: f64,
    pub sweep_bandwidth_hz: f64,
    pub chirp_duration_s: f64,
    pub chirps_per_frame: usize,
    pub lpf_cutoff_hz: f64,
    pub tx_power_dbm: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub noise_figure_db: f64,
    pub system_temperature_k: f64,
}

impl Default for RadarFile {
    fn default() -> Self {
        Self::from(&FmcwParams::reference())
    }
}

impl From<&FmcwParams> for RadarFile {
    fn from(p: &FmcwParams) -> Self {
        Self {
            carrier_hz: p.carrier_hz,
            sweep_bandwidth_hz: p.sweep_bandwidth_hz,
            chirp_duration_s: p.chirp_duration_s,
            chirps_per_frame: p.chirps_per_frame,
            lpf_cutoff_hz: p.lpf_cutoff_hz,
            tx_power_dbm: watts_to_dbm(p.tx_power_w),
            tx_gain_db: linear_to_db(p.tx_gain),
            rx_gain_db: linear_to_db(p.rx_gain),
            noise_figure_db: linear_to_db(p.noise_figure),
            system_temperature_k: p.system_temperature_k,
        }
    }
}

impl From<&RadarFile> for FmcwParams {
    fn from(r: &RadarFile) -> Self {
        Self {
            carrier_hz: r.carrier_hz,
            sweep_bandwidth_hz: r.sweep_bandwidth_hz,
            chirp_duration_s: r.chirp_duration_s,
            chirps_per_frame: r.chirps_per_frame,
            lpf_cutoff_hz: r.lpf_cutoff_hz,
            tx_power_w: dbm_to_watts(r.tx_power_dbm),
            tx_gain: db_to_linear(r.tx_gain_db),
            rx_gain: db_to_linear(r.rx_gain_db),
            noise_figure: db_to_linear(r.noise_figure_db),
            system_temperature_k: r.system_temperature_k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetFile {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub reflector: ReflectorFile,
    /// Surface used by `passive_irs` and `active_irs`; defaults to the 256 x 256 panel.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irs: Option<IrsFile>,
}

impl Default for TargetFile {
    fn default() -> Self {
        let t = TargetSpec::default();
        Self {
            range_m: t.range_m,
            velocity_mps: t.velocity_mps,
            reflector: ReflectorFile::Bare { rcs_dbsm: 10.0 },
            irs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReflectorFile {
    Bare {
        rcs_dbsm: f64,
    },
    PassiveIrs,
    ActiveIrs {
        #[serde(default)]
        gain_db: f64,
    },
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrsFile {
    pub rows: usize,
    pub cols: usize,
    /// Defaults to half a wavelength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_profile: Option<PhaseProfile>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryFile {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfererPreset {
    SimilarSlope,
    SweepingSlope,
}

/// One interfering radar. Fields left out come from `preset`; without a preset the
/// slope must be given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<InterfererPreset>,
    pub range_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_hz_per_s: Option<f64>,
    /// `[lo, hi]` bounds on `S_I / S_V`, drawn uniformly each trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_ratio: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_gain_db: Option<f64>,
    /// Fixed offset in seconds; omitted means redrawn uniformly every trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_offset_s: Option<f64>,
}

impl InterfererFile {
    fn resolve(&self, p: &FmcwParams, index: usize) -> Result<InterfererSpec> {
        let base = match self.preset {
            Some(InterfererPreset::SimilarSlope) => InterfererSpec::similar_slope(self.range_m),
            Some(InterfererPreset::SweepingSlope) => {
                InterfererSpec::sweeping_slope(self.range_m, p.chirp_duration_s)
            }
            None => {
                if self.slope_hz_per_s.is_none() && self.slope_ratio.is_none() {
                    return Err(Error::ScenarioParse {
                        field: format!("interferers[{index}]"),
                        line: 0,
                        column: 0,
                        message: "needs `preset`, `slope_hz_per_s` or `slope_ratio`".into(),
                    });
                }
                InterfererSpec::similar_slope(self.range_m)
            }
        };
        let slope = match (self.slope_hz_per_s, self.slope_ratio) {
            (Some(_), Some(_)) => {
                return Err(Error::ScenarioParse {
                    field: format!("interferers[{index}]"),
                    line: 0,
                    column: 0,
                    message: "`slope_hz_per_s` and `slope_ratio` are mutually exclusive".into(),
                })
            }
            (Some(hz_per_s), None) => SlopeSpec::Fixed { hz_per_s },
            (None, Some([lo, hi])) => SlopeSpec::RelativeUniform { lo, hi },
            (None, None) => base.slope,
        };
        Ok(InterfererSpec {
            slope,
            sweep_bandwidth_hz: self.sweep_bandwidth_hz.unwrap_or(base.sweep_bandwidth_hz),
            tx_power_w: self.tx_power_dbm.map(dbm_to_watts).unwrap_or(base.tx_power_w),
            tx_gain: self.tx_gain_db.map(db_to_linear).unwrap_or(base.tx_gain),
            range_m: self.range_m,
            time_offset: self
                .time_offset_s
                .map(|seconds| TimeOffset::Fixed { seconds })
                .unwrap_or(TimeOffset::Random),
        })
    }
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub detection: DetectionConfig,
    pub name: Option<String>,
    /// Non-fatal diagnostics (warnings) raised during validation.
    pub diagnostics: Vec<Diagnostic>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<(Scenario, DetectionConfig)> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::ScenarioParse {
                field: "version".into(),
                line: 0,
                column: 0,
                message: format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version),
            });
        }
        let radar = self.radar.unwrap_or_else(|| {
            log::warn!("scenario has no `radar` block; using reference radar defaults");
            RadarFile::default()
        });
        let fmcw = FmcwParams::from(&radar);
        let lambda = fmcw.wavelength();
        let irs = match &self.target.irs {
            Some(f) => IrsSpec {
                rows: f.rows,
                cols: f.cols,
                pitch_m: f.pitch_m.unwrap_or(lambda / 2.0),
                element_gain: f.element_gain_db.map(db_to_linear).unwrap_or(crate::irs::DEFAULT_ELEMENT_GAIN),
                phase_profile: f.phase_profile.clone().unwrap_or(PhaseProfile::Optimal),
            },
            None => IrsSpec::rear_panel(lambda),
        };
        let reflector = match self.target.reflector {
            ReflectorFile::Bare { rcs_dbsm } => Reflector::Bare { rcs_m2: db_to_linear(rcs_dbsm) },
            ReflectorFile::PassiveIrs => Reflector::PassiveIrs { irs },
            ReflectorFile::ActiveIrs { gain_db } => Reflector::ActiveIrs { irs, gain: db_to_linear(gain_db) },
            ReflectorFile::Absent => Reflector::Absent,
        };
        let interferers = self
            .interferers
            .iter()
            .enumerate()
            .map(|(k, i)| i.resolve(&fmcw, k))
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario {
            fmcw,
            target: TargetSpec {
                range_m: self.target.range_m,
                velocity_mps: self.target.velocity_mps,
                reflector,
            },
            geometry: Geometry {
                azimuth_rad: self.geometry.azimuth_deg.to_radians(),
                elevation_rad: self.geometry.elevation_deg.to_radians(),
            },
            interferers,
            noise_enabled: self.noise_enabled,
            master_seed: self.master_seed,
        };
        Ok((scenario, self.detection))
    }
}

/// Parses and validates scenario JSON text.
pub fn parse_scenario(text: &str) -> Result<LoadedScenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = match e.path().to_string() {
            p if p == "." => "(document)".to_string(),
            p => p,
        };
        let inner = e.into_inner();
        Error::ScenarioParse { field, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })?;
    let name = file.name.clone();
    let (scenario, detection) = file.into_scenario()?;
    let m = derive_waveform_metrics(&scenario.fmcw)?;
    let diagnostics = validate_scenario(&scenario, &m);
    if has_errors(&diagnostics) {
        return Err(Error::Validation(diagnostics.iter().map(|d| d.to_string()).collect()));
    }
    detection.cfar.validate()?;
    for d in &diagnostics {
        log::warn!("{d}");
    }
    Ok(LoadedScenario { scenario, detection, name, diagnostics })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}
