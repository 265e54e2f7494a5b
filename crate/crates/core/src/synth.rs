//! De-chirped baseband synthesis of one victim frame.
//!
//! Everything is generated directly after the mixer and low-pass filter. The target
//! is a 2-D complex exponential at its beat and Doppler frequencies; each interferer
//! contributes the residual chirp `exp(j pi (S_V t^2 - S_I tau'^2))` wherever its
//! instantaneous frequency offset from the victim ramp falls inside the LPF passband,
//! and zero elsewhere. Receiver noise is circular complex Gaussian with variance
//! `k T0 B_c F_n` per sample.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::irs::{irs_return, Geometry, IrsMode};
use crate::params::{derive_waveform_metrics, has_errors, validate_scenario, FmcwParams, WaveformMetrics};
use crate::propagation::{
    echo_power, receiver_noise_power, InterfererSpec, Reflector, ResolvedInterferer, TargetSpec,
};
use crate::seed::{stream_seed, Stream};
use crate::units::SPEED_OF_LIGHT;

/// One experiment world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub fmcw: FmcwParams,
    pub target: TargetSpec,
    pub geometry: Geometry,
    pub interferers: Vec<InterfererSpec>,
    pub noise_enabled: bool,
    pub master_seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            fmcw: FmcwParams::reference(),
            target: TargetSpec::default(),
            geometry: Geometry::default(),
            interferers: Vec::new(),
            noise_enabled: true,
            master_seed: 0,
        }
    }
}

impl Scenario {
    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Reflection gain configured on the target, 1 for anything but an active surface.
    pub fn reflection_gain(&self) -> f64 {
        match self.target.reflector {
            Reflector::ActiveIrs { gain, .. } => gain,
            _ => 1.0,
        }
    }

    pub fn metrics(&self) -> Result<WaveformMetrics> {
        derive_waveform_metrics(&self.fmcw)
    }

    /// Derives metrics and fails on any error-level diagnostic.
    pub fn checked_metrics(&self) -> Result<WaveformMetrics> {
        let m = self.metrics()?;
        let diags = validate_scenario(self, &m);
        if has_errors(&diags) {
            return Err(Error::Validation(diags.iter().map(|d| d.to_string()).collect()));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameMeta {
    pub scenario_digest: String,
    pub seed: u64,
    pub reflection_gain: f64,
    pub interferers: Vec<ResolvedInterferer>,
}

/// `chirps x samples` matrix of de-chirped samples, row-major by chirp.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatFrame {
    pub data: Vec<Complex64>,
    pub chirps: usize,
    pub samples: usize,
    pub sample_rate: f64,
    pub chirp_duration_s: f64,
    pub meta: FrameMeta,
}

impl BeatFrame {
    pub fn row(&self, chirp: usize) -> &[Complex64] {
        &self.data[chirp * self.samples..(chirp + 1) * self.samples]
    }

    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }
}

fn frame_len(m: &WaveformMetrics) -> usize {
    m.chirps_per_frame * m.samples_per_chirp
}

/// Target echo after de-chirping: `a exp(j 4 pi f_c R / c) exp(j 2 pi (f_b n / f_s + f_D l T_r))`.
pub fn target_beat_samples(
    p: &FmcwParams,
    m: &WaveformMetrics,
    amplitude: Complex64,
    range_m: f64,
    velocity_mps: f64,
) -> Result<Vec<Complex64>> {
    let fb = m.beat_frequency(range_m);
    if fb > m.sample_rate {
        return Err(Error::InvalidParameter {
            name: "range_m",
            reason: format!("beat frequency {fb} Hz exceeds LPF cutoff {} Hz", m.sample_rate),
        });
    }
    let fd = 2.0 * p.carrier_hz * velocity_mps / SPEED_OF_LIGHT;
    let carrier = Complex64::from_polar(1.0, 4.0 * PI * p.carrier_hz * range_m / SPEED_OF_LIGHT);
    let a = amplitude * carrier;

    let fast: Vec<Complex64> = (0..m.samples_per_chirp)
        .map(|n| Complex64::from_polar(1.0, 2.0 * PI * fb * n as f64 / m.sample_rate))
        .collect();
    let mut out = Vec::with_capacity(frame_len(m));
    for l in 0..m.chirps_per_frame {
        let slow = a * Complex64::from_polar(1.0, 2.0 * PI * fd * l as f64 * p.chirp_duration_s);
        out.extend(fast.iter().map(|f| slow * f));
    }
    Ok(out)
}

/// Instantaneous relation between the victim ramp and the active interferer chirp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSample {
    /// Victim-minus-interferer instantaneous frequency, Hz.
    pub delta_f: f64,
    /// Time since the start of the interferer chirp in progress, s.
    pub tau: f64,
    /// Whether `|delta_f|` lies within the LPF passband.
    pub passed: bool,
}

/// Gate evaluation for victim chirp `chirp` at fast time `t` (seconds into the chirp).
pub fn interference_gate(p: &FmcwParams, i: &ResolvedInterferer, chirp: usize, t: f64) -> GateSample {
    let absolute = chirp as f64 * p.chirp_duration_s + t;
    let mut tau = (absolute - i.time_offset_s).rem_euclid(i.chirp_period_s);
    // rounding can leave a value a hair below the period where 0 is meant
    if i.chirp_period_s - tau < 1e-9 * i.chirp_period_s {
        tau = 0.0;
    }
    let delta_f = p.slope() * t - i.slope * tau;
    GateSample { delta_f, tau, passed: delta_f.abs() <= p.lpf_cutoff_hz }
}

/// Gated interference samples for one resolved interferer.
pub fn interference_beat_samples(
    p: &FmcwParams,
    m: &WaveformMetrics,
    i: &ResolvedInterferer,
) -> Vec<Complex64> {
    let amp = i.received_power_w.sqrt();
    let s_v = p.slope();
    let mut out = vec![Complex64::new(0.0, 0.0); frame_len(m)];
    for l in 0..m.chirps_per_frame {
        let row = &mut out[l * m.samples_per_chirp..(l + 1) * m.samples_per_chirp];
        for (n, z) in row.iter_mut().enumerate() {
            let t = n as f64 / m.sample_rate;
            let g = interference_gate(p, i, l, t);
            if g.passed {
                let phase = PI * (s_v * t * t - i.slope * g.tau * g.tau);
                *z = Complex64::from_polar(amp, phase);
            }
        }
    }
    out
}

fn add_awgn(data: &mut [Complex64], power: f64, rng: &mut ChaCha8Rng) {
    let sigma = (power / 2.0).sqrt();
    for z in data.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += Complex64::new(sigma * re, sigma * im);
    }
}

/// Linear amplitude of the target echo and the active-surface noise referred to the receiver.
pub fn target_return(s: &Scenario, gain: f64) -> Result<(f64, f64)> {
    let t = &s.target;
    let p = &s.fmcw;
    Ok(match &t.reflector {
        Reflector::Bare { rcs_m2 } => (echo_power(p, *rcs_m2, t.range_m)?.sqrt(), 0.0),
        Reflector::PassiveIrs { irs } => {
            let r = irs_return(irs, &s.geometry, IrsMode::Passive, p, t.range_m)?;
            (r.amplitude.norm(), 0.0)
        }
        Reflector::ActiveIrs { irs, .. } => {
            let r = irs_return(irs, &s.geometry, IrsMode::Active { gain }, p, t.range_m)?;
            (r.amplitude.norm(), r.element_noise_power_w)
        }
        Reflector::Absent => (0.0, 0.0),
    })
}

/// Draws every interferer's per-trial parameters from the trial seed.
pub fn resolve_interferers(s: &Scenario, trial_seed: u64) -> Vec<ResolvedInterferer> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(trial_seed, Stream::Interference));
    let s_v = s.fmcw.slope();
    s.interferers.iter().map(|i| i.resolve(&s.fmcw, s_v, &mut rng)).collect()
}

/// Full victim frame: target echo, gated interference and noise. `gain` is the linear
/// reflection gain applied when the target carries an active surface.
pub fn compose_beat_frame(s: &Scenario, gain: f64, trial_seed: u64) -> Result<BeatFrame> {
    let m = s.checked_metrics()?;
    compose_validated(s, &m, s.digest(), gain, trial_seed)
}

/// [`compose_beat_frame`] for a scenario that has already passed validation.
pub(crate) fn compose_validated(
    s: &Scenario,
    m: &WaveformMetrics,
    digest: String,
    gain: f64,
    trial_seed: u64,
) -> Result<BeatFrame> {
    let m = *m;
    let p = &s.fmcw;
    let (amplitude, irs_noise) = target_return(s, gain)?;

    let mut data = if amplitude > 0.0 {
        target_beat_samples(p, &m, Complex64::new(amplitude, 0.0), s.target.range_m, s.target.velocity_mps)?
    } else {
        vec![Complex64::new(0.0, 0.0); frame_len(&m)]
    };

    // Interferers are summed on their own first so that target + interference splits exactly.
    let resolved = resolve_interferers(s, trial_seed);
    if let Some((first, rest)) = resolved.split_first() {
        let mut interference = interference_beat_samples(p, &m, first);
        for i in rest {
            for (z, c) in interference.iter_mut().zip(interference_beat_samples(p, &m, i)) {
                *z += c;
            }
        }
        for (z, c) in data.iter_mut().zip(&interference) {
            *z += c;
        }
    }

    if s.noise_enabled {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(trial_seed, Stream::ReceiverNoise));
        add_awgn(&mut data, receiver_noise_power(p), &mut rng);
        if irs_noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(trial_seed, Stream::IrsNoise));
            add_awgn(&mut data, irs_noise, &mut rng);
        }
    }

    Ok(BeatFrame {
        data,
        chirps: m.chirps_per_frame,
        samples: m.samples_per_chirp,
        sample_rate: m.sample_rate,
        chirp_duration_s: p.chirp_duration_s,
        meta: FrameMeta {
            scenario_digest: digest,
            seed: trial_seed,
            reflection_gain: gain,
            interferers: resolved,
        },
    })
}
