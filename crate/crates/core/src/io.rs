//! Artifact writers. Every file is written to a temporary sibling and renamed into
//! place, so readers never observe a partial file.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::experiments::{CurveKind, SweepResult};
use crate::processing::RangeDopplerMap;
use crate::synth::{BeatFrame, FrameMeta};

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    std::io::Error::other(e.to_string()).into()
}

/// One row per chirp, columns `re0,im0,re1,im1,...`.
pub fn frame_csv(frame: &BeatFrame) -> Result<Vec<u8>> {
    let header: Vec<String> = (0..frame.samples).flat_map(|n| [format!("re{n}"), format!("im{n}")]).collect();
    csv_bytes(
        &header,
        (0..frame.chirps)
            .map(|l| frame.row(l).iter().flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect()),
    )
}

pub fn write_frame_csv(path: &Path, frame: &BeatFrame) -> Result<()> {
    atomic_write(path, &frame_csv(frame)?)
}

#[derive(Debug, Serialize)]
struct FrameSidecar<'a> {
    format: &'static str,
    chirps: usize,
    samples: usize,
    sample_rate_hz: f64,
    chirp_duration_s: f64,
    meta: &'a FrameMeta,
}

/// Raw little-endian `f32` matrix, `chirps x samples` complex values with real and
/// imaginary parts interleaved, plus `<path>.json` describing it.
pub fn write_frame_raw(path: &Path, frame: &BeatFrame) -> Result<()> {
    let mut bytes = Vec::with_capacity(frame.data.len() * 8);
    for z in &frame.data {
        bytes.extend_from_slice(&(z.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    atomic_write(path, &bytes)?;
    write_json(
        &sidecar_path(path),
        &FrameSidecar {
            format: "f32le, row-major by chirp, interleaved re/im",
            chirps: frame.chirps,
            samples: frame.samples,
            sample_rate_hz: frame.sample_rate,
            chirp_duration_s: frame.chirp_duration_s,
            meta: &frame.meta,
        },
    )
}

/// Path with `.json` appended to the full file name.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// One row per range bin, one column per Doppler bin (zero velocity in the centre).
pub fn map_csv(map: &RangeDopplerMap) -> Result<Vec<u8>> {
    let header: Vec<String> = (0..map.doppler_bins).map(|d| format!("d{d}")).collect();
    csv_bytes(
        &header,
        (0..map.range_bins).map(|r| (0..map.doppler_bins).map(|d| map.at(r, d).to_string()).collect()),
    )
}

#[derive(Debug, Serialize)]
struct MapSidecar {
    range_bins: usize,
    doppler_bins: usize,
    range_m: Vec<f64>,
    velocity_mps: Vec<f64>,
}

/// Map CSV plus `<path>.json` with the physical value of every row and column.
pub fn write_map_csv(path: &Path, map: &RangeDopplerMap) -> Result<()> {
    atomic_write(path, &map_csv(map)?)?;
    let range_m = (0..map.range_bins).map(|r| r as f64 * map.range_axis).collect();
    let velocity_mps = (0..map.doppler_bins)
        .map(|d| (d as f64 - (map.doppler_bins / 2) as f64) * map.doppler_axis)
        .collect();
    write_json(
        &sidecar_path(path),
        &MapSidecar { range_bins: map.range_bins, doppler_bins: map.doppler_bins, range_m, velocity_mps },
    )
}

/// Detection curves: `gamma_db,trials,hits,pd,ci_lo,ci_hi`. SIR: `gamma_db,sir_db`.
/// RCS: `gamma_db,rcs_dbsm`.
pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let s = |x: f64| x.to_string();
    match result.kind {
        k if k.is_detection() => csv_bytes(
            &["gamma_db", "trials", "hits", "pd", "ci_lo", "ci_hi"].map(String::from),
            result.points.iter().map(|p| {
                vec![
                    s(p.gamma_db),
                    p.trials.to_string(),
                    p.hits.to_string(),
                    s(p.value),
                    s(p.ci_lo),
                    s(p.ci_hi),
                ]
            }),
        ),
        CurveKind::Sir => csv_bytes(
            &["gamma_db", "sir_db"].map(String::from),
            result.points.iter().map(|p| vec![s(p.gamma_db), s(p.value)]),
        ),
        _ => csv_bytes(
            &["gamma_db", "rcs_dbsm"].map(String::from),
            result.points.iter().map(|p| vec![s(p.gamma_db), s(p.value)]),
        ),
    }
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    atomic_write(path, &sweep_csv(result)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{parse_gamma_grid, rcs_curve, SweepPoint};
    use crate::irs::IrsSpec;
    use crate::processing::{range_doppler_map, Window};
    use crate::synth::{compose_beat_frame, Scenario};

    fn quiet_frame() -> BeatFrame {
        let s = Scenario { noise_enabled: false, ..Scenario::default() };
        compose_beat_frame(&s, 1.0, 0).unwrap()
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn atomic_write_to_missing_dir_fails_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        assert!(atomic_write(&dir.path().join("nope/a.csv"), b"x").is_err());
    }

    #[test]
    fn frame_csv_shape() {
        let f = quiet_frame();
        let text = String::from_utf8(frame_csv(&f).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), f.chirps + 1);
        assert_eq!(lines[1].split(',').count(), 2 * f.samples);
        let re0: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(re0, f.data[0].re);
    }

    #[test]
    fn raw_frame_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("frame.f32");
        let f = quiet_frame();
        write_frame_raw(&p, &f).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), f.data.len() * 8);
        let k = 137;
        let re = f32::from_le_bytes(bytes[8 * k..8 * k + 4].try_into().unwrap());
        let im = f32::from_le_bytes(bytes[8 * k + 4..8 * k + 8].try_into().unwrap());
        assert_eq!(re, f.data[k].re as f32);
        assert_eq!(im, f.data[k].im as f32);
        let side: serde_json::Value =
            serde_json::from_slice(&std::fs::read(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(side["chirps"], 128);
        assert_eq!(side["samples"], 200);
    }

    #[test]
    fn map_sidecar_axes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("map.csv");
        let f = quiet_frame();
        let m = Scenario::default().metrics().unwrap();
        let map = range_doppler_map(&f, &m, Window::Rect).unwrap();
        write_map_csv(&p, &map).unwrap();
        let side: serde_json::Value =
            serde_json::from_slice(&std::fs::read(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(side["range_m"].as_array().unwrap().len(), 200);
        assert_eq!(side["velocity_mps"][64], 0.0);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 201);
    }

    #[test]
    fn sweep_csv_columns() {
        let lambda = crate::units::SPEED_OF_LIGHT / 77e9;
        let rcs =
            rcs_curve(&IrsSpec::rear_panel(lambda), &parse_gamma_grid("0:2:1").unwrap(), lambda).unwrap();
        let text = String::from_utf8(sweep_csv(&rcs).unwrap()).unwrap();
        assert!(text.starts_with("gamma_db,rcs_dbsm\n"));
        assert_eq!(text.lines().count(), 4);

        let pd = SweepResult {
            kind: CurveKind::PdSimilar,
            scenario_digest: String::new(),
            points: vec![SweepPoint {
                gamma_db: 1.0,
                trials: 10,
                hits: 5,
                value: 0.5,
                ci_lo: 0.2,
                ci_hi: 0.8,
            }],
            reference_levels: vec![],
        };
        let text = String::from_utf8(sweep_csv(&pd).unwrap()).unwrap();
        assert_eq!(text, "gamma_db,trials,hits,pd,ci_lo,ci_hi\n1,10,5,0.5,0.2,0.8\n");
    }
}
