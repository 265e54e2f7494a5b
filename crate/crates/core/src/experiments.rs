//! Monte-Carlo harness for detection probability, plus the analytic SIR and RCS curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::irs::{active_array_rcs, coherent_gain, element_rcs, IrsSpec};
use crate::params::{WaveformMetrics, SIMILAR_SLOPE_BAND};
use crate::processing::{ca_cfar_detect, CfarConfig, RangeDopplerProcessor, Window};
use crate::propagation::{echo_power, interference_power, Reflector};
use crate::seed::trial_seed;
use crate::synth::{compose_validated, Scenario};
use crate::units::{db_to_linear, linear_to_db};

/// RCS of an ordinary sedan, used as the non-IRS baseline (dBsm).
pub const BASELINE_RCS_DBSM: f64 = 10.0;

/// Detector settings shared by every trial of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    #[serde(default)]
    pub cfar: CfarConfig,
    #[serde(default)]
    pub window: Window,
    /// A trial is a hit when a detection lies within this many bins of the true cell
    /// along both axes.
    #[serde(default = "default_hit_tolerance")]
    pub hit_tolerance_bins: usize,
}

fn default_hit_tolerance() -> usize {
    1
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self { cfar: CfarConfig::default(), window: Window::Rect, hit_tolerance_bins: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub hit: bool,
    pub detected_bin: Option<(usize, usize)>,
    pub gain: f64,
    pub seed: u64,
}

/// Per-scenario state reused across trials: metrics, FFT plans and the truth cell.
pub struct TrialRunner<'a> {
    scenario: &'a Scenario,
    metrics: WaveformMetrics,
    digest: String,
    processor: RangeDopplerProcessor,
    config: DetectionConfig,
    truth: (usize, usize),
}

impl<'a> TrialRunner<'a> {
    pub fn new(scenario: &'a Scenario, config: DetectionConfig) -> Result<Self> {
        let metrics = scenario.checked_metrics()?;
        config.cfar.validate()?;
        Ok(Self {
            scenario,
            metrics,
            digest: scenario.digest(),
            processor: RangeDopplerProcessor::new(&metrics, config.window),
            config,
            truth: metrics.physical_to_bin(scenario.target.range_m, scenario.target.velocity_mps),
        })
    }

    pub fn truth(&self) -> (usize, usize) {
        self.truth
    }

    pub fn metrics(&self) -> &WaveformMetrics {
        &self.metrics
    }

    pub fn run(&self, gain: f64, seed: u64) -> Result<TrialOutcome> {
        let frame = compose_validated(self.scenario, &self.metrics, self.digest.clone(), gain, seed)?;
        let map = self.processor.process(&frame)?;
        let detections = ca_cfar_detect(&map, &self.config.cfar)?;
        let tol = self.config.hit_tolerance_bins;
        let n_d = map.doppler_bins;
        let (tr, td) = self.truth;
        let best = detections
            .iter()
            .filter(|d| {
                let dd = d.doppler_bin.abs_diff(td);
                d.range_bin.abs_diff(tr) <= tol && dd.min(n_d - dd) <= tol
            })
            .max_by(|a, b| a.snr_est_db.total_cmp(&b.snr_est_db));
        Ok(TrialOutcome {
            hit: best.is_some(),
            detected_bin: best.map(|d| (d.range_bin, d.doppler_bin)),
            gain,
            seed,
        })
    }
}

/// Synthesizes, processes and scores a single trial.
pub fn run_trial(s: &Scenario, gain: f64, seed: u64, config: &DetectionConfig) -> Result<TrialOutcome> {
    TrialRunner::new(s, *config)?.run(gain, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    PdSimilar,
    PdSweeping,
    PdNoInterference,
    Sir,
    Rcs,
}

impl CurveKind {
    pub fn for_scenario(s: &Scenario) -> Self {
        let s_v = s.fmcw.slope();
        if s.interferers.is_empty() {
            return CurveKind::PdNoInterference;
        }
        let similar = s.interferers.iter().any(|i| {
            let (lo, hi) = i.slope.ratio_bounds(s_v);
            lo >= SIMILAR_SLOPE_BAND.0 - 1e-12 && hi <= SIMILAR_SLOPE_BAND.1 + 1e-12
        });
        if similar {
            CurveKind::PdSimilar
        } else {
            CurveKind::PdSweeping
        }
    }

    pub fn is_detection(self) -> bool {
        matches!(self, CurveKind::PdSimilar | CurveKind::PdSweeping | CurveKind::PdNoInterference)
    }
}

/// One grid point. For detection curves `value` is `P_D` and the interval is the
/// exact (Clopper-Pearson) 95% binomial interval; analytic curves carry zero trials
/// and a degenerate interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gamma_db: f64,
    pub trials: u64,
    pub hits: u64,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: CurveKind,
    pub scenario_digest: String,
    pub points: Vec<SweepPoint>,
    /// Horizontal reference lines drawn with the curve, e.g. the baseline RCS.
    #[serde(default)]
    pub reference_levels: Vec<(String, f64)>,
}

impl SweepResult {
    pub fn gammas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gamma_db).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Smallest grid gain whose value reaches `level`.
    pub fn first_reaching(&self, level: f64) -> Option<f64> {
        self.points.iter().find(|p| p.value >= level).map(|p| p.gamma_db)
    }
}

/// Exact two-sided 95% Clopper-Pearson interval for `hits` out of `trials`.
pub fn clopper_pearson(hits: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (hits as f64, trials as f64);
    let lo = if hits == 0 { 0.0 } else { Beta::new(k, n - k + 1.0).expect("valid shape").inverse_cdf(0.025) };
    let hi =
        if hits == trials { 1.0 } else { Beta::new(k + 1.0, n - k).expect("valid shape").inverse_cdf(0.975) };
    (lo, hi)
}

/// Weighted isotonic (non-decreasing) regression by pool-adjacent-violators.
pub fn isotonic_fit(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // blocks of (weighted mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            let m = if w > 0.0 { (m1 * w1 + m2 * w2) / w } else { (m1 + m2) / 2.0 };
            blocks.push((m, w, n1 + n2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, n)| std::iter::repeat_n(m, n)).collect()
}

fn check_grid(grid_db: &[f64]) -> Result<()> {
    if grid_db.is_empty() {
        return Err(Error::InvalidParameter { name: "gamma_grid", reason: "grid is empty".into() });
    }
    if grid_db.iter().any(|g| !g.is_finite()) || grid_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "gamma_grid",
            reason: "grid must be finite and strictly increasing".into(),
        });
    }
    Ok(())
}

/// `P_D` versus reflection gain. Each (grid index, trial) pair gets its own seed, so
/// the result does not depend on how trials are scheduled across threads.
pub fn detection_probability_sweep(
    s: &Scenario,
    gamma_grid_db: &[f64],
    trials_per_point: u64,
    config: &DetectionConfig,
) -> Result<SweepResult> {
    check_grid(gamma_grid_db)?;
    if trials_per_point == 0 {
        return Err(Error::InvalidParameter { name: "trials", reason: "need at least one trial".into() });
    }
    if let Reflector::ActiveIrs { .. } = s.target.reflector {
        if gamma_grid_db.iter().any(|&g| g < 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma_grid",
                reason: "active IRS gain must be >= 0 dB".into(),
            });
        }
    }
    let runner = TrialRunner::new(s, *config)?;
    let jobs: Vec<(usize, u64)> =
        (0..gamma_grid_db.len()).flat_map(|g| (0..trials_per_point).map(move |t| (g, t))).collect();
    let hits: Vec<bool> = jobs
        .par_iter()
        .map(|&(g, t)| {
            let seed = trial_seed(s.master_seed, g as u64, t);
            runner.run(db_to_linear(gamma_grid_db[g]), seed).map(|o| o.hit)
        })
        .collect::<Result<_>>()?;

    let points = gamma_grid_db
        .iter()
        .enumerate()
        .map(|(g, &gamma_db)| {
            let chunk = &hits[g * trials_per_point as usize..(g + 1) * trials_per_point as usize];
            let h = chunk.iter().filter(|&&b| b).count() as u64;
            let (ci_lo, ci_hi) = clopper_pearson(h, trials_per_point);
            SweepPoint {
                gamma_db,
                trials: trials_per_point,
                hits: h,
                value: h as f64 / trials_per_point as f64,
                ci_lo,
                ci_hi,
            }
        })
        .collect();
    Ok(SweepResult {
        kind: CurveKind::for_scenario(s),
        scenario_digest: s.digest(),
        points,
        reference_levels: Vec::new(),
    })
}

/// Copy of `s` whose target is a plain vehicle of the given RCS.
pub fn baseline_scenario(s: &Scenario, rcs_dbsm: f64) -> Scenario {
    let mut b = s.clone();
    b.target.reflector = Reflector::Bare { rcs_m2: db_to_linear(rcs_dbsm) };
    b
}

/// Signal power entering the SIR.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SirModel {
    /// Radar equation with the surface's effective RCS `gain * N * sigma_e`.
    #[default]
    RcsConsistent,
    /// `N * gain * g^2` with `g = P_t G_t G_r G_e^2 lambda^4 / (4 pi R)^4`. Kept for
    /// curve-shape comparisons only; its range dependence is `R^-8`.
    PrintedProduct,
}

pub fn sir_curve(s: &Scenario, gamma_grid_db: &[f64], model: SirModel) -> Result<SweepResult> {
    check_grid(gamma_grid_db)?;
    let m = s.checked_metrics()?;
    let irs: &IrsSpec = match &s.target.reflector {
        Reflector::ActiveIrs { irs, .. } => irs,
        _ => {
            return Err(Error::InvalidParameter {
                name: "target.reflector",
                reason: "SIR curve needs an active IRS target".into(),
            })
        }
    };
    if s.interferers.is_empty() {
        return Err(Error::InvalidParameter {
            name: "interferers",
            reason: "SIR curve needs at least one interferer".into(),
        });
    }
    let p = &s.fmcw;
    let interference: f64 = s.interferers.iter().map(|i| interference_power(p, i)).sum();
    let passive_rcs =
        element_rcs(p.wavelength(), irs.element_gain) * coherent_gain(irs, &s.geometry, p.carrier_hz);
    let r = s.target.range_m;
    let lambda = p.wavelength();
    let g = p.tx_power_w * p.tx_gain * p.rx_gain * irs.element_gain.powi(2) * lambda.powi(4)
        / (4.0 * std::f64::consts::PI * r).powi(4);

    let points = gamma_grid_db
        .iter()
        .map(|&gamma_db| {
            let gain = db_to_linear(gamma_db);
            let signal = match model {
                SirModel::RcsConsistent => echo_power(p, gain * passive_rcs, r)?,
                SirModel::PrintedProduct => irs.element_count() as f64 * gain * g * g,
            };
            let sir = linear_to_db(m.processing_gain * signal / interference);
            Ok(SweepPoint { gamma_db, trials: 0, hits: 0, value: sir, ci_lo: sir, ci_hi: sir })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        kind: CurveKind::Sir,
        scenario_digest: s.digest(),
        points,
        reference_levels: Vec::new(),
    })
}

/// Effective RCS (dBsm) of an optimally phased active surface against reflection gain.
pub fn rcs_curve(irs: &IrsSpec, gamma_grid_db: &[f64], wavelength: f64) -> Result<SweepResult> {
    check_grid(gamma_grid_db)?;
    irs.validate()?;
    let points = gamma_grid_db
        .iter()
        .map(|&gamma_db| {
            let v = linear_to_db(active_array_rcs(irs, db_to_linear(gamma_db), wavelength));
            SweepPoint { gamma_db, trials: 0, hits: 0, value: v, ci_lo: v, ci_hi: v }
        })
        .collect();
    let passive = linear_to_db(active_array_rcs(irs, 1.0, wavelength));
    Ok(SweepResult {
        kind: CurveKind::Rcs,
        scenario_digest: String::new(),
        points,
        reference_levels: vec![("baseline_dbsm".into(), BASELINE_RCS_DBSM), ("passive_dbsm".into(), passive)],
    })
}

/// Gain (dB) at which the active surface's RCS reaches `target_dbsm`.
pub fn gain_for_rcs(irs: &IrsSpec, target_dbsm: f64, wavelength: f64) -> f64 {
    target_dbsm - linear_to_db(active_array_rcs(irs, 1.0, wavelength))
}

/// `start:stop:step` in dB, inclusive of `stop` when it lies on the grid.
pub fn parse_gamma_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::InvalidParameter { name: "gamma_grid", reason };
    let parts: Vec<&str> = spec.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| bad(format!("`{p}`: {e}"))))
        .collect::<Result<Vec<f64>>>()?;
    let grid = match nums.as_slice() {
        [single] => vec![*single],
        [start, stop] => grid_range(*start, *stop, 1.0),
        [start, stop, step] => {
            if step.is_nan() || *step <= 0.0 {
                return Err(bad(format!("step must be positive, got {step}")));
            }
            grid_range(*start, *stop, *step)
        }
        _ => return Err(bad(format!("expected start:stop[:step], got `{spec}`"))),
    };
    check_grid(&grid)?;
    Ok(grid)
}

fn grid_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor();
    if n < 0.0 {
        return Vec::new();
    }
    (0..=n as usize).map(|k| start + k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{InterfererSpec, TargetSpec};

    fn active_scenario(interferers: Vec<InterfererSpec>) -> Scenario {
        let p = crate::params::FmcwParams::reference();
        Scenario {
            target: TargetSpec {
                reflector: Reflector::ActiveIrs { irs: IrsSpec::rear_panel(p.wavelength()), gain: 1.0 },
                ..TargetSpec::default()
            },
            interferers,
            ..Scenario::default()
        }
    }

    #[test]
    fn isotonic_pools_violators() {
        let fit = isotonic_fit(&[0.1, 0.3, 0.2, 0.5, 0.4, 0.9], &[1.0; 6]);
        assert_eq!(fit, vec![0.1, 0.25, 0.25, 0.45, 0.45, 0.9]);
        assert!(fit.windows(2).all(|w| w[0] <= w[1]));
        let weighted = isotonic_fit(&[1.0, 0.0], &[3.0, 1.0]);
        assert_eq!(weighted, vec![0.75, 0.75]);
    }

    #[test]
    fn clopper_pearson_known_values() {
        let (lo, hi) = clopper_pearson(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.3085).abs() < 1e-3, "{hi}");
        let (lo, hi) = clopper_pearson(5, 10);
        assert!((lo - 0.1871).abs() < 1e-3 && (hi - 0.8129).abs() < 1e-3, "{lo} {hi}");
        assert_eq!(clopper_pearson(10, 10).1, 1.0);
    }

    #[test]
    fn gamma_grid_parsing() {
        assert_eq!(parse_gamma_grid("0:40:1").unwrap().len(), 41);
        assert_eq!(parse_gamma_grid("20:40:5").unwrap(), vec![20.0, 25.0, 30.0, 35.0, 40.0]);
        assert_eq!(parse_gamma_grid("3").unwrap(), vec![3.0]);
        assert!(parse_gamma_grid("5:0:1").is_err());
        assert!(parse_gamma_grid("0:10:0").is_err());
        assert!(parse_gamma_grid("a:b").is_err());
    }

    #[test]
    fn rcs_curve_shape() {
        let lambda = crate::units::SPEED_OF_LIGHT / 77e9;
        let irs = IrsSpec::rear_panel(lambda);
        let c = rcs_curve(&irs, &parse_gamma_grid("0:40:1").unwrap(), lambda).unwrap();
        assert!((c.points[0].value + 1.08).abs() < 0.01);
        for w in c.points.windows(2) {
            assert!((w[1].value - w[0].value - 1.0).abs() < 1e-9);
        }
        let cross = gain_for_rcs(&irs, BASELINE_RCS_DBSM, lambda);
        assert!((cross - 11.08).abs() < 0.02);
        assert_eq!(c.first_reaching(BASELINE_RCS_DBSM), Some(12.0));
    }

    #[test]
    fn sir_curve_values() {
        let grid = [20.0, 30.0, 40.0];
        let near = sir_curve(
            &active_scenario(vec![InterfererSpec::similar_slope(50.0)]),
            &grid,
            SirModel::RcsConsistent,
        )
        .unwrap();
        assert!((near.points[1].value - 5.8).abs() < 0.1, "{}", near.points[1].value);
        assert!((near.points[2].value - near.points[1].value - 10.0).abs() < 1e-9);
        let far = sir_curve(
            &active_scenario(vec![InterfererSpec::similar_slope(100.0)]),
            &grid,
            SirModel::RcsConsistent,
        )
        .unwrap();
        for (a, b) in near.points.iter().zip(&far.points) {
            assert!((b.value - a.value - 6.0206).abs() < 1e-3);
        }
        let printed = sir_curve(
            &active_scenario(vec![InterfererSpec::similar_slope(50.0)]),
            &grid,
            SirModel::PrintedProduct,
        )
        .unwrap();
        assert!((printed.points[2].value - printed.points[1].value - 10.0).abs() < 1e-9);
    }

    #[test]
    fn sir_requires_active_target() {
        let s = Scenario { interferers: vec![InterfererSpec::similar_slope(50.0)], ..Scenario::default() };
        assert!(sir_curve(&s, &[0.0], SirModel::RcsConsistent).is_err());
        assert!(sir_curve(&active_scenario(vec![]), &[0.0], SirModel::RcsConsistent).is_err());
    }

    #[test]
    fn degenerate_sweep() {
        let s = Scenario::default();
        let r = detection_probability_sweep(&s, &[0.0], 1, &DetectionConfig::default()).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.points[0].trials, 1);
        assert!(r.points[0].value == 0.0 || r.points[0].value == 1.0);
        assert_eq!(r.kind, CurveKind::PdNoInterference);
    }

    #[test]
    fn sweep_rejects_bad_grid() {
        let s = Scenario::default();
        assert!(detection_probability_sweep(&s, &[1.0, 1.0], 1, &DetectionConfig::default()).is_err());
        assert!(detection_probability_sweep(&s, &[1.0], 0, &DetectionConfig::default()).is_err());
    }

    #[test]
    fn noise_free_trial_hits() {
        let s = Scenario { noise_enabled: false, ..Scenario::default() };
        let o = run_trial(&s, 1.0, 3, &DetectionConfig::default()).unwrap();
        assert!(o.hit);
        assert_eq!(o.detected_bin, Some((180, 76)));
    }

    #[test]
    fn absent_target_rarely_hits() {
        let mut s = Scenario::default();
        s.target.reflector = Reflector::Absent;
        let r = detection_probability_sweep(&s, &[0.0], 200, &DetectionConfig::default()).unwrap();
        assert!(r.points[0].hits <= 1, "{:?}", r.points[0]);
    }

    #[test]
    fn curve_kinds() {
        assert_eq!(
            CurveKind::for_scenario(&active_scenario(vec![InterfererSpec::similar_slope(50.0)])),
            CurveKind::PdSimilar
        );
        assert_eq!(
            CurveKind::for_scenario(&active_scenario(vec![InterfererSpec::sweeping_slope(50.0, 7.33e-6)])),
            CurveKind::PdSweeping
        );
    }
}
