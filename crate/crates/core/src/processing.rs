//! Range-Doppler processing and cell-averaging CFAR.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::WaveformMetrics;
use crate::synth::BeatFrame;
use crate::units::linear_to_db;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rect,
    Hann,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hann => (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect(),
        }
    }
}

/// Power map with range along rows and fft-shifted Doppler along columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    /// Row-major `range_bins x doppler_bins`, linear power.
    pub power: Vec<f64>,
    pub range_bins: usize,
    pub doppler_bins: usize,
    /// Metres per range bin.
    pub range_axis: f64,
    /// m/s per Doppler bin.
    pub doppler_axis: f64,
}

impl RangeDopplerMap {
    pub fn at(&self, range_bin: usize, doppler_bin: usize) -> f64 {
        self.power[range_bin * self.doppler_bins + doppler_bin]
    }

    pub fn argmax(&self) -> (usize, usize) {
        let (idx, _) =
            self.power
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        (idx / self.doppler_bins, idx % self.doppler_bins)
    }

    pub fn total_energy(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn bin_to_physical(&self, range_bin: usize, doppler_bin: usize) -> Result<(f64, f64)> {
        if range_bin >= self.range_bins || doppler_bin >= self.doppler_bins {
            return Err(Error::BinOutOfRange {
                range_bin,
                doppler_bin,
                n_range: self.range_bins,
                n_doppler: self.doppler_bins,
            });
        }
        let range = range_bin as f64 * self.range_axis;
        let velocity = (doppler_bin as f64 - (self.doppler_bins / 2) as f64) * self.doppler_axis;
        Ok((range, velocity))
    }
}

/// Holds FFT plans for one frame size so Monte-Carlo workers can reuse them.
pub struct RangeDopplerProcessor {
    fast: Arc<dyn Fft<f64>>,
    slow: Arc<dyn Fft<f64>>,
    fast_window: Vec<f64>,
    slow_window: Vec<f64>,
    metrics: WaveformMetrics,
}

impl RangeDopplerProcessor {
    pub fn new(m: &WaveformMetrics, window: Window) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fast: planner.plan_fft_forward(m.samples_per_chirp),
            slow: planner.plan_fft_forward(m.chirps_per_frame),
            fast_window: window.coefficients(m.samples_per_chirp),
            slow_window: window.coefficients(m.chirps_per_frame),
            metrics: *m,
        }
    }

    /// Unnormalized 2-D forward transform. With the rectangular window the map energy
    /// is `samples * chirps` times the frame energy.
    pub fn process(&self, frame: &BeatFrame) -> Result<RangeDopplerMap> {
        let (n_s, n_f) = (self.metrics.samples_per_chirp, self.metrics.chirps_per_frame);
        if frame.samples != n_s || frame.chirps != n_f || frame.data.len() != n_s * n_f {
            return Err(Error::Dimension(format!(
                "frame is {} x {} ({} samples), processor expects {} x {}",
                frame.chirps,
                frame.samples,
                frame.data.len(),
                n_f,
                n_s
            )));
        }
        if n_s < 2 || n_f < 2 {
            return Err(Error::Dimension(format!("frame {n_f} x {n_s} is smaller than 2 x 2")));
        }

        let mut rows: Vec<Complex64> = frame
            .data
            .chunks_exact(n_s)
            .zip(&self.slow_window)
            .flat_map(|(row, &ws)| row.iter().zip(&self.fast_window).map(move |(z, &wf)| z * (wf * ws)))
            .collect();
        self.fast.process(&mut rows);

        // transpose to range-major, then Doppler transform along each range bin
        let mut cols = vec![Complex64::new(0.0, 0.0); n_s * n_f];
        for l in 0..n_f {
            for r in 0..n_s {
                cols[r * n_f + l] = rows[l * n_s + r];
            }
        }
        self.slow.process(&mut cols);

        let half = n_f / 2;
        let mut power = vec![0.0; n_s * n_f];
        for r in 0..n_s {
            let src = &cols[r * n_f..(r + 1) * n_f];
            let dst = &mut power[r * n_f..(r + 1) * n_f];
            for (k, z) in src.iter().enumerate() {
                dst[(k + half) % n_f] = z.norm_sqr();
            }
        }
        Ok(RangeDopplerMap {
            power,
            range_bins: n_s,
            doppler_bins: n_f,
            range_axis: self.metrics.range_bin_width(),
            doppler_axis: self.metrics.velocity_resolution,
        })
    }
}

pub fn range_doppler_map(frame: &BeatFrame, m: &WaveformMetrics, window: Window) -> Result<RangeDopplerMap> {
    RangeDopplerProcessor::new(m, window).process(frame)
}

/// Cell-averaging CFAR window, counted in cells per side of the cell under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfarConfig {
    pub train_range: usize,
    pub train_doppler: usize,
    pub guard_range: usize,
    pub guard_doppler: usize,
    pub pfa: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self { train_range: 8, train_doppler: 4, guard_range: 2, guard_doppler: 2, pfa: 1e-5 }
    }
}

impl CfarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_range == 0 && self.train_doppler == 0 {
            return Err(Error::InvalidParameter { name: "cfar", reason: "training window is empty".into() });
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::InvalidParameter {
                name: "cfar.pfa",
                reason: format!("false-alarm probability must lie in (0, 1), got {}", self.pfa),
            });
        }
        Ok(())
    }

    /// Training cells around an interior cell.
    pub fn training_cells(&self) -> usize {
        let outer = (2 * (self.train_range + self.guard_range) + 1)
            * (2 * (self.train_doppler + self.guard_doppler) + 1);
        let inner = (2 * self.guard_range + 1) * (2 * self.guard_doppler + 1);
        outer - inner
    }
}

/// Threshold multiplier giving false-alarm probability `pfa` with `n` exponential
/// training cells: `n (pfa^(-1/n) - 1)`.
pub fn cfar_alpha(n: usize, pfa: f64) -> f64 {
    let n = n as f64;
    n * (pfa.powf(-1.0 / n) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub range_bin: usize,
    pub doppler_bin: usize,
    pub range_m: f64,
    pub velocity_mps: f64,
    pub snr_est_db: f64,
}

/// Reports every cell whose power exceeds `alpha` times the mean of its training cells.
/// Doppler wraps around; in range the window is truncated at the map edges and `alpha`
/// is recomputed for the reduced cell count.
pub fn ca_cfar_detect(map: &RangeDopplerMap, cfg: &CfarConfig) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let (n_r, n_d) = (map.range_bins, map.doppler_bins);
    let span_r = cfg.train_range + cfg.guard_range;
    let span_d = cfg.train_doppler + cfg.guard_doppler;
    if 2 * span_r + 1 > n_r || 2 * span_d + 1 > n_d {
        return Err(Error::Dimension(format!(
            "CFAR window {} x {} does not fit in map {} x {}",
            2 * span_r + 1,
            2 * span_d + 1,
            n_r,
            n_d
        )));
    }

    // Per-row Doppler sums: over the whole window width, and over the ring outside the guard.
    let mut full = vec![0.0; n_r * n_d];
    let mut ring = vec![0.0; n_r * n_d];
    for r in 0..n_r {
        let row = &map.power[r * n_d..(r + 1) * n_d];
        for d in 0..n_d {
            let mut guard_sum = 0.0;
            let mut ring_sum = 0.0;
            for k in -(span_d as isize)..=span_d as isize {
                let v = row[(d as isize + k).rem_euclid(n_d as isize) as usize];
                if k.unsigned_abs() <= cfg.guard_doppler {
                    guard_sum += v;
                } else {
                    ring_sum += v;
                }
            }
            full[r * n_d + d] = ring_sum + guard_sum;
            ring[r * n_d + d] = ring_sum;
        }
    }

    let ring_width = 2 * cfg.train_doppler;
    let full_width = 2 * span_d + 1;
    let mut alpha_cache = vec![f64::NAN; n_r * full_width + 1];
    let mut out = Vec::new();
    for r in 0..n_r {
        let r_lo = r.saturating_sub(span_r);
        let r_hi = (r + span_r).min(n_r - 1);
        for d in 0..n_d {
            let mut sum = 0.0;
            let mut count = 0usize;
            for rr in r_lo..=r_hi {
                if rr.abs_diff(r) <= cfg.guard_range {
                    sum += ring[rr * n_d + d];
                    count += ring_width;
                } else {
                    sum += full[rr * n_d + d];
                    count += full_width;
                }
            }
            if count == 0 {
                continue;
            }
            let alpha = {
                let slot = &mut alpha_cache[count];
                if slot.is_nan() {
                    *slot = cfar_alpha(count, cfg.pfa);
                }
                *slot
            };
            let mean = sum / count as f64;
            let cut = map.power[r * n_d + d];
            if cut > alpha * mean {
                let (range_m, velocity_mps) = map.bin_to_physical(r, d)?;
                out.push(Detection {
                    range_bin: r,
                    doppler_bin: d,
                    range_m,
                    velocity_mps,
                    snr_est_db: linear_to_db(cut / mean),
                });
            }
        }
    }
    Ok(out)
}
