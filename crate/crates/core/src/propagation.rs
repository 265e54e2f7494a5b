//! Link budgets: target echo, one-way interference, receiver and IRS element noise.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::irs::IrsSpec;
use crate::params::FmcwParams;
use crate::units::{db_to_linear, BOLTZMANN};

/// What reflects the victim's chirps back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reflector {
    /// Plain vehicle body with a fixed radar cross section.
    Bare {
        rcs_m2: f64,
    },
    PassiveIrs {
        irs: IrsSpec,
    },
    /// Active IRS with per-element linear reflection gain (>= 1).
    ActiveIrs {
        irs: IrsSpec,
        gain: f64,
    },
    /// No echo at all. The target position still defines the truth cell.
    Absent,
}

impl Reflector {
    pub fn validate(&self) -> Result<()> {
        match self {
            Reflector::Bare { rcs_m2 } => ensure_positive("rcs_m2", *rcs_m2),
            Reflector::PassiveIrs { irs } => irs.validate(),
            Reflector::ActiveIrs { irs, gain } => {
                irs.validate()?;
                check_active_gain(*gain)
            }
            Reflector::Absent => Ok(()),
        }
    }

    pub fn irs(&self) -> Option<&IrsSpec> {
        match self {
            Reflector::PassiveIrs { irs } | Reflector::ActiveIrs { irs, .. } => Some(irs),
            _ => None,
        }
    }
}

pub(crate) fn check_active_gain(gain: f64) -> Result<()> {
    if gain.is_finite() && gain >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "reflection_gain",
            reason: format!("active IRS gain must be >= 1 (0 dB), got {gain}"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub range_m: f64,
    /// Radial velocity, positive when the Doppler shift is positive.
    pub velocity_mps: f64,
    pub reflector: Reflector,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self { range_m: 180.0, velocity_mps: 25.0, reflector: Reflector::Bare { rcs_m2: 10.0 } }
    }
}

/// Interferer chirp slope, either fixed or redrawn each trial relative to the victim slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeSpec {
    Fixed { hz_per_s: f64 },
    RelativeUniform { lo: f64, hi: f64 },
}

impl SlopeSpec {
    /// Range of `S_I / S_V` this setting can produce.
    pub fn ratio_bounds(&self, victim_slope: f64) -> (f64, f64) {
        match *self {
            SlopeSpec::Fixed { hz_per_s } => (hz_per_s / victim_slope, hz_per_s / victim_slope),
            SlopeSpec::RelativeUniform { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeOffset {
    Fixed {
        seconds: f64,
    },
    /// Uniform in `[0, T_r)` of the victim, redrawn each trial.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfererSpec {
    pub slope: SlopeSpec,
    pub sweep_bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub tx_gain: f64,
    pub range_m: f64,
    pub time_offset: TimeOffset,
}

/// Interfering radar slope used for the sweeping-slope experiments (Hz/s).
pub const SWEEPING_SLOPE_HZ_PER_S: f64 = 40.90e12;

impl InterfererSpec {
    /// Same-OEM style interferer: slope within +/-10% of the victim, random offset.
    pub fn similar_slope(range_m: f64) -> Self {
        Self {
            slope: SlopeSpec::RelativeUniform { lo: 0.9, hi: 1.1 },
            sweep_bandwidth_hz: 150e6,
            tx_power_w: 1e-3,
            tx_gain: db_to_linear(20.0),
            range_m,
            time_offset: TimeOffset::Random,
        }
    }

    /// Interferer at [`SWEEPING_SLOPE_HZ_PER_S`] sharing the victim's chirp duration, so
    /// its bandwidth is `S_I * T_r` and the burst sits at the same place in every chirp.
    pub fn sweeping_slope(range_m: f64, chirp_duration_s: f64) -> Self {
        Self {
            slope: SlopeSpec::Fixed { hz_per_s: SWEEPING_SLOPE_HZ_PER_S },
            sweep_bandwidth_hz: SWEEPING_SLOPE_HZ_PER_S * chirp_duration_s,
            ..Self::similar_slope(range_m)
        }
    }

    pub fn validate(&self, victim_chirp_s: f64) -> Result<()> {
        ensure_positive("interferer.range_m", self.range_m)?;
        ensure_positive("interferer.sweep_bandwidth_hz", self.sweep_bandwidth_hz)?;
        ensure_positive("interferer.tx_power_w", self.tx_power_w)?;
        ensure_positive("interferer.tx_gain", self.tx_gain)?;
        match self.slope {
            SlopeSpec::Fixed { hz_per_s } => ensure_positive("interferer.slope", hz_per_s)?,
            SlopeSpec::RelativeUniform { lo, hi } => {
                ensure_positive("interferer.slope.lo", lo)?;
                if !(hi.is_finite() && hi >= lo) {
                    return Err(Error::InvalidParameter {
                        name: "interferer.slope.hi",
                        reason: format!("upper ratio {hi} must be >= lower ratio {lo}"),
                    });
                }
            }
        }
        if let TimeOffset::Fixed { seconds } = self.time_offset {
            if !(seconds.is_finite() && seconds >= 0.0 && seconds < victim_chirp_s) {
                return Err(Error::InvalidParameter {
                    name: "interferer.time_offset",
                    reason: format!("offset {seconds} s must lie in [0, T_r)"),
                });
            }
        }
        Ok(())
    }

    /// Draws the per-trial slope and time offset.
    pub fn resolve<R: Rng + ?Sized>(
        &self,
        p: &FmcwParams,
        victim_slope: f64,
        rng: &mut R,
    ) -> ResolvedInterferer {
        let slope = match self.slope {
            SlopeSpec::Fixed { hz_per_s } => hz_per_s,
            SlopeSpec::RelativeUniform { lo, hi } => victim_slope * uniform(rng, lo, hi),
        };
        let time_offset_s = match self.time_offset {
            TimeOffset::Fixed { seconds } => seconds,
            TimeOffset::Random => uniform(rng, 0.0, p.chirp_duration_s),
        };
        ResolvedInterferer {
            slope,
            chirp_period_s: self.sweep_bandwidth_hz / slope,
            time_offset_s,
            received_power_w: interference_power(p, self),
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// One interferer with every random quantity fixed for a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedInterferer {
    pub slope: f64,
    /// Interferer chirp repetition period, `B_sI / S_I`.
    pub chirp_period_s: f64,
    pub time_offset_s: f64,
    pub received_power_w: f64,
}

/// Two-way radar equation.
pub fn echo_power(p: &FmcwParams, rcs_m2: f64, range_m: f64) -> Result<f64> {
    ensure_positive("rcs_m2", rcs_m2)?;
    ensure_positive("range_m", range_m)?;
    let lambda = p.wavelength();
    let pr = p.tx_power_w * p.tx_gain * p.rx_gain * rcs_m2 * lambda * lambda
        / ((4.0 * PI).powi(3) * range_m.powi(4));
    finite("echo_power", pr)
}

/// One-way interference power received from another radar.
pub fn interference_power(p: &FmcwParams, i: &InterfererSpec) -> f64 {
    let lambda = p.wavelength();
    i.tx_power_w * i.tx_gain * p.rx_gain * lambda * lambda / (4.0 * PI * i.range_m).powi(2)
}

/// `k T0 B_c F_n`, the per-sample complex noise variance at the victim receiver.
pub fn receiver_noise_power(p: &FmcwParams) -> f64 {
    BOLTZMANN * p.system_temperature_k * p.lpf_cutoff_hz * p.noise_figure
}

/// `k T0 B_s F_n`, noise generated at each active IRS element.
pub fn irs_element_noise_power(p: &FmcwParams) -> f64 {
    BOLTZMANN * p.system_temperature_k * p.sweep_bandwidth_hz * p.noise_figure
}

fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, reason: format!("result {value} is not finite") })
    }
}
