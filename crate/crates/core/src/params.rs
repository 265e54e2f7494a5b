//! Victim waveform and RF front-end configuration, plus the metrics derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::synth::Scenario;
use crate::units::{db_to_linear, SPEED_OF_LIGHT};

/// Victim FMCW radar configuration. All quantities are SI and linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmcwParams {
    /// Carrier (center) frequency, Hz.
    pub carrier_hz: f64,
    /// Sweep bandwidth, Hz.
    pub sweep_bandwidth_hz: f64,
    /// Chirp duration, s.
    pub chirp_duration_s: f64,
    /// Chirps per frame.
    pub chirps_per_frame: usize,
    /// Receiver low-pass cutoff, Hz.
    pub lpf_cutoff_hz: f64,
    /// Transmit power, W.
    pub tx_power_w: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    /// Noise figure (linear).
    pub noise_figure: f64,
    /// System temperature, K.
    pub system_temperature_k: f64,
}

impl FmcwParams {
    /// The 77 GHz victim radar used for every reference experiment.
    pub fn reference() -> Self {
        Self {
            carrier_hz: 77e9,
            sweep_bandwidth_hz: 150e6,
            chirp_duration_s: 7.33e-6,
            chirps_per_frame: 128,
            lpf_cutoff_hz: 27.27e6,
            tx_power_w: 1e-3,
            tx_gain: db_to_linear(20.0),
            rx_gain: db_to_linear(20.0),
            noise_figure: db_to_linear(15.0),
            system_temperature_k: 296.0,
        }
    }

    pub fn slope(&self) -> f64 {
        self.sweep_bandwidth_hz / self.chirp_duration_s
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("carrier_hz", self.carrier_hz)?;
        ensure_positive("sweep_bandwidth_hz", self.sweep_bandwidth_hz)?;
        ensure_positive("chirp_duration_s", self.chirp_duration_s)?;
        ensure_positive("lpf_cutoff_hz", self.lpf_cutoff_hz)?;
        ensure_positive("tx_power_w", self.tx_power_w)?;
        ensure_positive("tx_gain", self.tx_gain)?;
        ensure_positive("rx_gain", self.rx_gain)?;
        ensure_positive("noise_figure", self.noise_figure)?;
        ensure_positive("system_temperature_k", self.system_temperature_k)?;
        if self.chirps_per_frame < 2 {
            return Err(Error::InvalidParameter {
                name: "chirps_per_frame",
                reason: format!("need at least 2 chirps, got {}", self.chirps_per_frame),
            });
        }
        if self.lpf_cutoff_hz > self.sweep_bandwidth_hz {
            return Err(Error::InvalidParameter {
                name: "lpf_cutoff_hz",
                reason: format!(
                    "cutoff {} Hz exceeds sweep bandwidth {} Hz",
                    self.lpf_cutoff_hz, self.sweep_bandwidth_hz
                ),
            });
        }
        let slope = self.slope();
        if !(slope.is_finite() && slope > 0.0) {
            return Err(Error::InvalidParameter {
                name: "slope",
                reason: format!("chirp slope {slope} is not finite and positive"),
            });
        }
        Ok(())
    }
}

impl Default for FmcwParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Quantities derived from [`FmcwParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformMetrics {
    /// Chirp slope, Hz/s.
    pub slope: f64,
    pub wavelength: f64,
    pub max_range: f64,
    pub range_resolution: f64,
    pub max_velocity: f64,
    pub velocity_resolution: f64,
    /// Coherent processing gain `T_r * B_c * N_f` (linear).
    pub processing_gain: f64,
    /// Complex samples per chirp.
    pub samples_per_chirp: usize,
    /// Complex sampling rate, Hz. Equal to the LPF cutoff.
    pub sample_rate: f64,
    pub chirps_per_frame: usize,
}

impl WaveformMetrics {
    /// Range spanned by one fast-time FFT bin.
    pub fn range_bin_width(&self) -> f64 {
        self.max_range / self.samples_per_chirp as f64
    }

    /// Beat frequency produced by a target at `range` metres.
    pub fn beat_frequency(&self, range: f64) -> f64 {
        2.0 * self.slope * range / SPEED_OF_LIGHT
    }

    /// Doppler frequency produced by a radial velocity in m/s.
    pub fn doppler_frequency(&self, velocity: f64) -> f64 {
        2.0 * velocity / self.wavelength
    }

    /// Nearest (range, Doppler) cell for a physical target. Doppler is fft-shifted so
    /// that `chirps_per_frame / 2` is zero velocity.
    pub fn physical_to_bin(&self, range: f64, velocity: f64) -> (usize, usize) {
        let n_s = self.samples_per_chirp as f64;
        let n_f = self.chirps_per_frame as i64;
        let r = (range / self.range_bin_width()).round().clamp(0.0, n_s - 1.0) as usize;
        let d = (velocity / self.velocity_resolution).round() as i64 + n_f / 2;
        (r, d.rem_euclid(n_f) as usize)
    }

    /// Physical coordinates at the center of a (range, Doppler) cell.
    pub fn bin_to_physical(&self, range_bin: usize, doppler_bin: usize) -> (f64, f64) {
        let range = range_bin as f64 * self.range_bin_width();
        let velocity = (doppler_bin as f64 - (self.chirps_per_frame / 2) as f64) * self.velocity_resolution;
        (range, velocity)
    }
}

pub fn derive_waveform_metrics(p: &FmcwParams) -> Result<WaveformMetrics> {
    p.validate()?;
    let slope = p.slope();
    let wavelength = p.wavelength();
    let sample_rate = p.lpf_cutoff_hz;
    let samples_per_chirp = (p.chirp_duration_s * sample_rate).round() as usize;
    if samples_per_chirp < 2 {
        return Err(Error::InvalidParameter {
            name: "chirp_duration_s",
            reason: format!("only {samples_per_chirp} samples per chirp at f_s = B_c"),
        });
    }
    Ok(WaveformMetrics {
        slope,
        wavelength,
        max_range: p.lpf_cutoff_hz * SPEED_OF_LIGHT / (2.0 * slope),
        range_resolution: SPEED_OF_LIGHT / (2.0 * p.sweep_bandwidth_hz),
        max_velocity: wavelength / (4.0 * p.chirp_duration_s),
        velocity_resolution: wavelength / (2.0 * p.chirps_per_frame as f64 * p.chirp_duration_s),
        processing_gain: p.chirp_duration_s * p.lpf_cutoff_hz * p.chirps_per_frame as f64,
        samples_per_chirp,
        sample_rate,
        chirps_per_frame: p.chirps_per_frame,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, field: field.into(), message: message.into() }
    }

    fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, field: field.into(), message: message.into() }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

/// Slope ratios `S_I / S_V` inside this band are treated as similar-slope interference.
pub const SIMILAR_SLOPE_BAND: (f64, f64) = (0.9, 1.1);
/// Interferers whose slope differs by at least this relative amount are sweeping-slope.
pub const SWEEPING_SLOPE_MIN_DEVIATION: f64 = 0.5;

/// Checks a parsed scenario against the victim waveform. Never panics.
pub fn validate_scenario(s: &Scenario, m: &WaveformMetrics) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let t = &s.target;

    if !(t.range_m.is_finite() && t.range_m > 0.0) {
        out.push(Diagnostic::error("target.range_m", format!("range {} must be positive", t.range_m)));
    } else {
        if t.range_m > m.max_range {
            out.push(Diagnostic::error(
                "target.range_m",
                format!("range {:.2} m is beyond R_max = {:.2} m", t.range_m, m.max_range),
            ));
        }
        let fb = m.beat_frequency(t.range_m);
        if fb > m.sample_rate {
            out.push(Diagnostic::error(
                "target.range_m",
                format!(
                    "beat frequency {:.3} MHz exceeds LPF cutoff {:.3} MHz",
                    fb / 1e6,
                    m.sample_rate / 1e6
                ),
            ));
        }
    }
    if !t.velocity_mps.is_finite() || t.velocity_mps.abs() > m.max_velocity {
        out.push(Diagnostic::error(
            "target.velocity_mps",
            format!("|v| = {} m/s exceeds v_max = {:.2} m/s", t.velocity_mps, m.max_velocity),
        ));
    }
    if let Err(e) = t.reflector.validate() {
        out.push(Diagnostic::error("target.reflector", e.to_string()));
    }
    if let Err(e) = s.geometry.validate() {
        out.push(Diagnostic::error("geometry", e.to_string()));
    }

    for (idx, i) in s.interferers.iter().enumerate() {
        let field = |name: &str| format!("interferers[{idx}].{name}");
        if let Err(e) = i.validate(s.fmcw.chirp_duration_s) {
            out.push(Diagnostic::error(format!("interferers[{idx}]"), e.to_string()));
            continue;
        }
        let (lo, hi) = i.slope.ratio_bounds(m.slope);
        let similar = lo >= SIMILAR_SLOPE_BAND.0 - 1e-12 && hi <= SIMILAR_SLOPE_BAND.1 + 1e-12;
        let sweeping = lo >= 1.0 + SWEEPING_SLOPE_MIN_DEVIATION || hi <= 1.0 - SWEEPING_SLOPE_MIN_DEVIATION;
        if !similar && !sweeping {
            out.push(Diagnostic::warning(
                field("slope"),
                format!(
                    "slope ratio S_I/S_V in [{lo:.3}, {hi:.3}] is neither similar-slope \
                     (within 10%) nor sweeping-slope (off by 50% or more)"
                ),
            ));
        }
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}
