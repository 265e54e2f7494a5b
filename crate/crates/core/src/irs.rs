//! Onboard intelligent reflective surface: geometry, phase control and effective RCS.
//!
//! The surface is a planar `rows x cols` grid with element 0 at the origin. Each
//! element adds a round-trip phase `4 pi f_c tau_k` relative to the reference element,
//! where `tau_k` depends on the direction of the victim radar. The surface applies a
//! per-element phase shift `delta_k`; the coherent sum of the element returns sets the
//! effective RCS.
//!
//! Inside the waveform simulation the per-element sum is never expanded in time. The
//! array factor is evaluated once and the whole surface is folded into a single echo
//! amplitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::FmcwParams;
use crate::propagation::{check_active_gain, echo_power, irs_element_noise_power};
use crate::units::SPEED_OF_LIGHT;

/// Element radiation gain used unless a scenario overrides it.
pub const DEFAULT_ELEMENT_GAIN: f64 = PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseProfile {
    /// Conjugate of the round-trip steering phase, `delta_k = -4 pi f_c tau_k`.
    Optimal,
    /// Same phase on every element.
    Uniform { radians: f64 },
    /// One phase per element, row-major.
    Custom { radians: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrsSpec {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing, m.
    pub pitch_m: f64,
    #[serde(default = "default_element_gain")]
    pub element_gain: f64,
    #[serde(default = "default_profile")]
    pub phase_profile: PhaseProfile,
}

fn default_element_gain() -> f64 {
    DEFAULT_ELEMENT_GAIN
}

fn default_profile() -> PhaseProfile {
    PhaseProfile::Optimal
}

impl IrsSpec {
    /// Half-wavelength square grid with optimal phases.
    pub fn square(side: usize, wavelength: f64) -> Self {
        Self {
            rows: side,
            cols: side,
            pitch_m: wavelength / 2.0,
            element_gain: DEFAULT_ELEMENT_GAIN,
            phase_profile: PhaseProfile::Optimal,
        }
    }

    /// The 256 x 256 rear-panel surface for a 77 GHz radar.
    pub fn rear_panel(wavelength: f64) -> Self {
        Self::square(256, wavelength)
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.element_count() == 0 {
            return Err(Error::InvalidParameter {
                name: "irs.rows/cols",
                reason: "surface needs at least one element".into(),
            });
        }
        if !(self.pitch_m.is_finite() && self.pitch_m > 0.0) {
            return Err(Error::InvalidParameter {
                name: "irs.pitch_m",
                reason: format!("pitch must be positive, got {}", self.pitch_m),
            });
        }
        if !(self.element_gain.is_finite() && self.element_gain > 0.0) {
            return Err(Error::InvalidParameter {
                name: "irs.element_gain",
                reason: format!("element gain must be positive, got {}", self.element_gain),
            });
        }
        match &self.phase_profile {
            PhaseProfile::Optimal => {}
            PhaseProfile::Uniform { radians } if !radians.is_finite() => {
                return Err(Error::InvalidParameter {
                    name: "irs.phase_profile",
                    reason: "uniform phase must be finite".into(),
                });
            }
            PhaseProfile::Uniform { .. } => {}
            PhaseProfile::Custom { radians } => {
                if radians.len() != self.element_count() {
                    return Err(Error::InvalidParameter {
                        name: "irs.phase_profile",
                        reason: format!(
                            "custom profile has {} phases for {} elements",
                            radians.len(),
                            self.element_count()
                        ),
                    });
                }
                if radians.iter().any(|d| !d.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "irs.phase_profile",
                        reason: "custom phases must be finite".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Direction of the victim radar as seen from the surface.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub azimuth_rad: f64,
    pub elevation_rad: f64,
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64| a.is_finite() && a.abs() <= PI / 2.0;
        if ok(self.azimuth_rad) && ok(self.elevation_rad) {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "geometry",
                reason: format!(
                    "angles must lie in [-pi/2, pi/2], got azimuth {} elevation {}",
                    self.azimuth_rad, self.elevation_rad
                ),
            })
        }
    }
}

/// Echo produced by the surface as the victim sees it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrsReturn {
    /// Complex voltage amplitude of the echo, carrier phase included.
    pub amplitude: Complex64,
    pub effective_rcs_m2: f64,
    /// Aggregate noise power of all active elements, referred to the victim receiver.
    pub element_noise_power_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IrsMode {
    Passive,
    /// Linear per-element reflection gain.
    Active {
        gain: f64,
    },
}

pub fn element_positions(spec: &IrsSpec) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(spec.element_count());
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            out.push((c as f64 * spec.pitch_m, r as f64 * spec.pitch_m));
        }
    }
    out
}

/// Propagation delay of an element relative to the reference element.
pub fn element_delay(pos: (f64, f64), g: &Geometry) -> f64 {
    let (x, y) = pos;
    let st = g.azimuth_rad.sin();
    (x * st * g.elevation_rad.cos() + y * st * g.elevation_rad.sin()) / SPEED_OF_LIGHT
}

/// Wraps a phase to `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn steering_phase(pos: (f64, f64), g: &Geometry, carrier_hz: f64) -> f64 {
    4.0 * PI * carrier_hz * element_delay(pos, g)
}

pub fn optimal_phases(spec: &IrsSpec, g: &Geometry, carrier_hz: f64) -> Vec<f64> {
    element_positions(spec).into_iter().map(|pos| wrap_phase(-steering_phase(pos, g, carrier_hz))).collect()
}

/// Concrete per-element phases for the surface's profile.
pub fn resolve_phases(spec: &IrsSpec, g: &Geometry, carrier_hz: f64) -> Vec<f64> {
    match &spec.phase_profile {
        PhaseProfile::Optimal => optimal_phases(spec, g, carrier_hz),
        PhaseProfile::Uniform { radians } => vec![*radians; spec.element_count()],
        PhaseProfile::Custom { radians } => radians.clone(),
    }
}

/// `sum_k exp(j 4 pi f_c tau_k) exp(j delta_k)` for explicit phases.
pub fn array_factor_with(spec: &IrsSpec, g: &Geometry, carrier_hz: f64, phases: &[f64]) -> Complex64 {
    element_positions(spec)
        .into_iter()
        .zip(phases)
        .map(|(pos, &delta)| Complex64::from_polar(1.0, steering_phase(pos, g, carrier_hz) + delta))
        .sum()
}

/// Magnitude of the array factor. Optimal phases give exactly `N`.
pub fn coherent_gain(spec: &IrsSpec, g: &Geometry, carrier_hz: f64) -> f64 {
    match spec.phase_profile {
        PhaseProfile::Optimal => spec.element_count() as f64,
        _ => array_factor_with(spec, g, carrier_hz, &resolve_phases(spec, g, carrier_hz)).norm(),
    }
}

/// RCS of a single element, `lambda^2 G_e^2 / (4 pi)`.
pub fn element_rcs(wavelength: f64, element_gain: f64) -> f64 {
    wavelength * wavelength * element_gain * element_gain / (4.0 * PI)
}

/// Effective RCS of a passive surface, `sigma_e * |array factor|`.
pub fn passive_array_rcs(spec: &IrsSpec, g: &Geometry, carrier_hz: f64) -> f64 {
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    element_rcs(lambda, spec.element_gain) * coherent_gain(spec, g, carrier_hz)
}

/// Effective RCS of an optimally phased active surface, `gain * N * sigma_e`.
pub fn active_array_rcs(spec: &IrsSpec, gain: f64, wavelength: f64) -> f64 {
    gain * spec.element_count() as f64 * element_rcs(wavelength, spec.element_gain)
}

/// Echo amplitude, effective RCS and element noise of the surface at range `range_m`.
pub fn irs_return(
    spec: &IrsSpec,
    g: &Geometry,
    mode: IrsMode,
    p: &FmcwParams,
    range_m: f64,
) -> Result<IrsReturn> {
    spec.validate()?;
    g.validate()?;
    let lambda = p.wavelength();
    let passive_rcs = passive_array_rcs(spec, g, p.carrier_hz);
    let (effective_rcs_m2, element_noise_power_w) = match mode {
        IrsMode::Passive => (passive_rcs, 0.0),
        IrsMode::Active { gain } => {
            check_active_gain(gain)?;
            let path = lambda / (4.0 * PI * range_m);
            let noise = spec.element_count() as f64
                * gain
                * irs_element_noise_power(p)
                * p.rx_gain
                * spec.element_gain
                * path
                * path;
            (gain * passive_rcs, noise)
        }
    };
    let magnitude =
        if effective_rcs_m2 > 0.0 { echo_power(p, effective_rcs_m2, range_m)?.sqrt() } else { 0.0 };
    let carrier_phase = 4.0 * PI * p.carrier_hz * range_m / SPEED_OF_LIGHT;
    Ok(IrsReturn {
        amplitude: Complex64::from_polar(magnitude, carrier_phase),
        effective_rcs_m2,
        element_noise_power_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{db_to_linear, linear_to_db, watts_to_dbm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FC: f64 = 77e9;

    fn lambda() -> f64 {
        SPEED_OF_LIGHT / FC
    }

    fn line(n: usize) -> IrsSpec {
        IrsSpec {
            rows: 1,
            cols: n,
            pitch_m: lambda() / 2.0,
            element_gain: DEFAULT_ELEMENT_GAIN,
            phase_profile: PhaseProfile::Optimal,
        }
    }

    #[test]
    fn positions() {
        assert_eq!(element_positions(&line(1)), vec![(0.0, 0.0)]);
        assert_eq!(element_positions(&line(2)), vec![(0.0, 0.0), (lambda() / 2.0, 0.0)]);
        let panel = IrsSpec::rear_panel(3.89e-3);
        let pos = element_positions(&panel);
        assert_eq!(pos.len(), 65_536);
        let (xmax, ymax) = pos[pos.len() - 1];
        let aperture = 256.0 * panel.pitch_m;
        assert!((aperture - 0.5).abs() < 5e-3, "{aperture}");
        assert!((xmax - 255.0 * panel.pitch_m).abs() < 1e-12 && xmax == ymax);
    }

    #[test]
    fn delays() {
        let boresight = Geometry::default();
        assert_eq!(element_delay((0.3, 0.2), &boresight), 0.0);
        let lam = 3.896e-3;
        let g = Geometry { azimuth_rad: PI / 2.0, elevation_rad: 0.0 };
        let tau = element_delay((lam / 2.0, 0.0), &g);
        assert!((tau - lam / (2.0 * SPEED_OF_LIGHT)).abs() < 1e-24);
        assert!((tau - 6.5e-12).abs() < 0.01e-12);
        let g1 = Geometry { azimuth_rad: 0.4, elevation_rad: 0.0 };
        let g2 = Geometry { azimuth_rad: 0.4, elevation_rad: PI / 2.0 };
        let a = element_delay((0.01, 0.0), &g1);
        let b = element_delay((0.0, 0.01), &g2);
        assert!((a - b).abs() < 1e-24);
    }

    #[test]
    fn optimal_phases_cancel_steering() {
        let spec = IrsSpec { rows: 3, cols: 5, ..line(1) };
        assert!(optimal_phases(&spec, &Geometry::default(), FC).iter().all(|&d| d == 0.0));
        let g = Geometry { azimuth_rad: 0.7, elevation_rad: -0.3 };
        let phases = optimal_phases(&spec, &g, FC);
        for (pos, d) in element_positions(&spec).into_iter().zip(&phases) {
            assert!(*d > -PI && *d <= PI);
            let z = Complex64::from_polar(1.0, steering_phase(pos, &g, FC)) * Complex64::from_polar(1.0, *d);
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn optimal_sum_is_n_for_random_4x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let spec = IrsSpec { rows: 4, cols: 4, pitch_m: rng.random_range(0.5e-3..5e-3), ..line(1) };
            let g = Geometry {
                azimuth_rad: rng.random_range(-PI / 2.0..PI / 2.0),
                elevation_rad: rng.random_range(-PI / 2.0..PI / 2.0),
            };
            let phases = optimal_phases(&spec, &g, FC);
            let brute: Complex64 = element_positions(&spec)
                .iter()
                .zip(&phases)
                .map(|(&(x, y), d)| {
                    let tau = (x * g.azimuth_rad.sin() * g.elevation_rad.cos()
                        + y * g.azimuth_rad.sin() * g.elevation_rad.sin())
                        / SPEED_OF_LIGHT;
                    Complex64::new(0.0, 4.0 * PI * FC * tau + d).exp()
                })
                .sum();
            assert!((brute.norm() - 16.0).abs() < 1e-9);
        }
    }

    #[test]
    fn element_rcs_values() {
        let s = element_rcs(3.896e-3, PI);
        assert!((s - 1.19e-5).abs() < 0.005e-5, "{s}");
        assert!((element_rcs(3.896e-3, 2.0 * PI) / s - 4.0).abs() < 1e-12);
        let total = 65_536.0 * element_rcs(lambda(), PI);
        assert!((total - 0.78).abs() < 0.005);
        assert!((linear_to_db(total) + 1.08).abs() < 0.01);
    }

    #[test]
    fn passive_rcs_cases() {
        let panel = IrsSpec::rear_panel(lambda());
        let sigma = passive_array_rcs(&panel, &Geometry { azimuth_rad: 0.3, elevation_rad: 0.1 }, FC);
        assert!((sigma - 0.78).abs() < 0.005);
        let single = IrsSpec { phase_profile: PhaseProfile::Uniform { radians: 1.3 }, ..line(1) };
        assert!(
            (passive_array_rcs(&single, &Geometry::default(), FC) - element_rcs(lambda(), PI)).abs() < 1e-18
        );
    }

    #[test]
    fn uniform_profile_matches_brute_force() {
        let spec = IrsSpec { phase_profile: PhaseProfile::Uniform { radians: 0.0 }, ..line(16) };
        let g = Geometry { azimuth_rad: 0.2, elevation_rad: 0.0 };
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..16 {
            let x = k as f64 * lambda() / 2.0;
            let tau = x * 0.2f64.sin() / SPEED_OF_LIGHT;
            sum += Complex64::new(0.0, 4.0 * PI * FC * tau).exp();
        }
        let expected = element_rcs(lambda(), PI) * sum.norm();
        let got = passive_array_rcs(&spec, &g, FC);
        assert!((got - expected).abs() / expected < 1e-12);
        assert!(got < 16.0 * element_rcs(lambda(), PI));
    }

    #[test]
    fn active_rcs_values() {
        let panel = IrsSpec::rear_panel(lambda());
        let passive = passive_array_rcs(&panel, &Geometry::default(), FC);
        assert!((active_array_rcs(&panel, 1.0, lambda()) - passive).abs() < 1e-12);
        let a = active_array_rcs(&panel, db_to_linear(20.0), lambda());
        assert!((a - 78.0).abs() < 0.5, "{a}");
        assert!((linear_to_db(a) - 18.92).abs() < 0.01);
        let crossing = linear_to_db(10.0 / passive);
        assert!((crossing - 11.08).abs() < 0.02, "{crossing}");
    }

    #[test]
    fn irs_return_active_30db() {
        let p = FmcwParams::reference();
        let panel = IrsSpec::rear_panel(p.wavelength());
        let ret =
            irs_return(&panel, &Geometry::default(), IrsMode::Active { gain: 1000.0 }, &p, 180.0).unwrap();
        assert!((ret.effective_rcs_m2 - 780.3).abs() < 1.0);
        let power = ret.amplitude.norm_sqr();
        assert!((watts_to_dbm(power) + 102.5).abs() < 0.05, "{}", watts_to_dbm(power));
    }

    #[test]
    fn irs_return_passive_matches_echo_power() {
        let p = FmcwParams::reference();
        let panel = IrsSpec::rear_panel(p.wavelength());
        let ret = irs_return(&panel, &Geometry::default(), IrsMode::Passive, &p, 180.0).unwrap();
        let n_sigma = 65_536.0 * element_rcs(p.wavelength(), PI);
        let expected = echo_power(&p, n_sigma, 180.0).unwrap();
        assert!((ret.amplitude.norm_sqr() / expected - 1.0).abs() < 1e-12);
        assert_eq!(ret.element_noise_power_w, 0.0);
    }

    #[test]
    fn element_noise_is_linear_in_n_and_gain() {
        let p = FmcwParams::reference();
        let g = Geometry::default();
        let small = IrsSpec::square(16, p.wavelength());
        let large = IrsSpec::square(32, p.wavelength());
        let noise = |s: &IrsSpec, gain| {
            irs_return(s, &g, IrsMode::Active { gain }, &p, 180.0).unwrap().element_noise_power_w
        };
        assert!((noise(&large, 10.0) / noise(&small, 10.0) - 4.0).abs() < 1e-12);
        assert!((noise(&small, 40.0) / noise(&small, 10.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_sub_unity_active_gain() {
        let p = FmcwParams::reference();
        let panel = IrsSpec::square(4, p.wavelength());
        assert!(irs_return(&panel, &Geometry::default(), IrsMode::Active { gain: 0.5 }, &p, 180.0).is_err());
    }

    #[test]
    fn custom_profile_length_checked() {
        let spec = IrsSpec { phase_profile: PhaseProfile::Custom { radians: vec![0.0; 3] }, ..line(4) };
        assert!(spec.validate().is_err());
    }
}
