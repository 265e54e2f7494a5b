use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use irs_radar::experiments::{
    baseline_scenario, detection_probability_sweep, gain_for_rcs, parse_gamma_grid, rcs_curve, sir_curve,
    CurveKind, SirModel, SweepResult, BASELINE_RCS_DBSM,
};
use irs_radar::io::{write_frame_csv, write_frame_raw, write_json, write_map_csv, write_sweep_csv};
use irs_radar::irs::IrsSpec;
use irs_radar::processing::{ca_cfar_detect, range_doppler_map, Detection};
use irs_radar::propagation::Reflector;
use irs_radar::scenario::{parse_scenario, LoadedScenario};
use irs_radar::seed::trial_seed;
use irs_radar::synth::compose_beat_frame;
use irs_radar::units::{db_to_linear, linear_to_db, SPEED_OF_LIGHT};
use irs_radar::Error;

use crate::manifest::ManifestBuilder;
use crate::{FrameFormat, RcsArgs, SimulateArgs, SirArgs, SirModelArg, SweepArgs, ValidateArgs};

/// Library error tagged with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError(Error);

impl CliError {
    /// 2 for filesystem failures, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self.0 {
            Error::Io(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self(Error::Io(e))
    }
}

type CliResult = Result<(), CliError>;

fn read_scenario(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| {
        std::io::Error::new(e.kind(), format!("cannot read scenario {}: {e}", path.display())).into()
    })
}

fn load(path: &Path, seed: Option<u64>, manifest: &mut ManifestBuilder) -> Result<LoadedScenario, CliError> {
    let bytes = read_scenario(path)?;
    manifest.scenario_file(path, &bytes);
    let text = String::from_utf8_lossy(&bytes);
    let mut loaded = parse_scenario(&text)?;
    if let Some(seed) = seed {
        loaded.scenario.master_seed = seed;
    }
    let m = &mut manifest.manifest;
    m.scenario_digest = Some(loaded.scenario.digest());
    m.scenario = serde_json::to_value(&loaded.scenario).ok();
    m.master_seed = Some(loaded.scenario.master_seed);
    Ok(loaded)
}

fn prepare_out_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| {
        std::io::Error::new(e.kind(), format!("cannot create output directory {}: {e}", dir.display()))
    })?;
    Ok(())
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    truth_bin: (usize, usize),
    argmax_bin: (usize, usize),
    argmax_range_m: f64,
    argmax_velocity_mps: f64,
    reflection_gain_db: f64,
    detections: &'a [Detection],
}

pub fn simulate(a: &SimulateArgs, argv: &[String]) -> CliResult {
    let mut manifest = ManifestBuilder::new(argv);
    let loaded = load(&a.common.scenario, a.common.seed, &mut manifest)?;
    let s = &loaded.scenario;
    let gain = match a.gamma_db {
        Some(g) => {
            if !matches!(s.target.reflector, Reflector::ActiveIrs { .. }) {
                log::warn!("--gamma-db has no effect on a target without an active surface");
            }
            db_to_linear(g)
        }
        None => s.reflection_gain(),
    };
    if let Some(g) = a.gamma_db {
        manifest.manifest.gamma_grid_db = vec![g];
    }
    let m = s.checked_metrics()?;
    let frame = compose_beat_frame(s, gain, trial_seed(s.master_seed, 0, 0))?;
    let map = range_doppler_map(&frame, &m, loaded.detection.window)?;
    let detections = ca_cfar_detect(&map, &loaded.detection.cfar)?;

    let out = &a.common.out_dir;
    prepare_out_dir(out)?;
    let frame_path = match a.format {
        FrameFormat::Csv => {
            let p = out.join("frame.csv");
            write_frame_csv(&p, &frame)?;
            p
        }
        FrameFormat::Raw => {
            let p = out.join("frame.f32");
            write_frame_raw(&p, &frame)?;
            p
        }
    };
    let map_path = out.join("rd_map.csv");
    write_map_csv(&map_path, &map)?;

    let argmax = map.argmax();
    let (r, v) = map.bin_to_physical(argmax.0, argmax.1)?;
    let summary = SimulationSummary {
        truth_bin: m.physical_to_bin(s.target.range_m, s.target.velocity_mps),
        argmax_bin: argmax,
        argmax_range_m: r,
        argmax_velocity_mps: v,
        reflection_gain_db: linear_to_db(gain),
        detections: &detections,
    };
    let det_path = out.join("detections.json");
    write_json(&det_path, &summary)?;
    println!(
        "peak at range bin {} doppler bin {} ({r:.2} m, {v:.2} m/s); {} CFAR detections",
        argmax.0,
        argmax.1,
        detections.len()
    );
    manifest.manifest.outputs = vec![frame_path, map_path, det_path];
    manifest.finish(out)?;
    Ok(())
}

fn curve_file_name(kind: CurveKind) -> &'static str {
    match kind {
        CurveKind::PdSimilar => "pd_similar.csv",
        CurveKind::PdSweeping => "pd_sweeping.csv",
        CurveKind::PdNoInterference => "pd_clean.csv",
        CurveKind::Sir => "sir.csv",
        CurveKind::Rcs => "rcs.csv",
    }
}

fn report_threshold(label: &str, r: &SweepResult) {
    match r.first_reaching(0.99) {
        Some(g) => println!("{label}: P_D >= 0.99 first reached at {g} dB"),
        None => println!("{label}: P_D never reached 0.99 on this grid"),
    }
}

pub fn sweep(a: &SweepArgs, argv: &[String]) -> CliResult {
    let mut manifest = ManifestBuilder::new(argv);
    let loaded = load(&a.common.scenario, a.common.seed, &mut manifest)?;
    let s = &loaded.scenario;
    let grid = parse_gamma_grid(&a.gamma)?;
    let trials = if a.fast { 200 } else { a.trials };
    manifest.manifest.gamma_grid_db = grid.clone();
    manifest.manifest.trials_per_point = Some(trials);
    let out = &a.common.out_dir;
    prepare_out_dir(out)?;

    let result = detection_probability_sweep(s, &grid, trials, &loaded.detection)?;
    let path = out.join(curve_file_name(result.kind));
    write_sweep_csv(&path, &result)?;
    report_threshold("target", &result);
    let mut outputs = vec![path.clone()];
    let mut curves = vec![("target".to_string(), path)];

    let has_surface = !matches!(s.target.reflector, Reflector::Bare { .. } | Reflector::Absent);
    if has_surface && !a.no_baseline {
        let base = detection_probability_sweep(
            &baseline_scenario(s, BASELINE_RCS_DBSM),
            &grid,
            trials,
            &loaded.detection,
        )?;
        let p = out.join("pd_baseline.csv");
        write_sweep_csv(&p, &base)?;
        report_threshold("baseline", &base);
        outputs.push(p.clone());
        curves.push(("non-IRS baseline".to_string(), p));
    }
    if a.plot_script {
        outputs.push(write_plot_script(out, "plot_pd.py", &curves, "pd", "P_D", &[])?);
    }
    manifest.manifest.outputs = outputs;
    manifest.finish(out)?;
    Ok(())
}

pub fn sir(a: &SirArgs, argv: &[String]) -> CliResult {
    let mut manifest = ManifestBuilder::new(argv);
    let loaded = load(&a.common.scenario, a.common.seed, &mut manifest)?;
    let grid = parse_gamma_grid(&a.gamma)?;
    manifest.manifest.gamma_grid_db = grid.clone();
    let model = match a.model {
        SirModelArg::Rcs => SirModel::RcsConsistent,
        SirModelArg::Printed => SirModel::PrintedProduct,
    };
    let result = sir_curve(&loaded.scenario, &grid, model)?;
    let out = &a.common.out_dir;
    prepare_out_dir(out)?;
    let path = out.join("sir.csv");
    write_sweep_csv(&path, &result)?;
    let mut outputs = vec![path.clone()];
    if a.plot_script {
        outputs.push(write_plot_script(
            out,
            "plot_sir.py",
            &[("SIR".into(), path)],
            "sir_db",
            "SIR (dB)",
            &[],
        )?);
    }
    manifest.manifest.outputs = outputs;
    manifest.finish(out)?;
    Ok(())
}

pub fn rcs(a: &RcsArgs, argv: &[String]) -> CliResult {
    let mut manifest = ManifestBuilder::new(argv);
    let grid = parse_gamma_grid(&a.gamma)?;
    manifest.manifest.gamma_grid_db = grid.clone();
    if !(a.carrier_hz.is_finite() && a.carrier_hz > 0.0) {
        return Err(
            Error::InvalidParameter { name: "carrier_hz", reason: format!("got {}", a.carrier_hz) }.into()
        );
    }
    let lambda = SPEED_OF_LIGHT / a.carrier_hz;
    let side = (a.elements as f64).sqrt().round() as usize;
    let irs = if side * side == a.elements {
        IrsSpec::square(side, lambda)
    } else {
        IrsSpec { rows: 1, cols: a.elements, ..IrsSpec::square(1, lambda) }
    };
    let result = rcs_curve(&irs, &grid, lambda)?;
    let out = &a.out_dir;
    prepare_out_dir(out)?;
    let path = out.join("rcs.csv");
    write_sweep_csv(&path, &result)?;
    for (name, level) in &result.reference_levels {
        println!("{name}: {level:.3} dBsm");
    }
    println!("baseline crossed at {:.2} dB", gain_for_rcs(&irs, BASELINE_RCS_DBSM, lambda));
    let mut outputs = vec![path.clone()];
    if a.plot_script {
        outputs.push(write_plot_script(
            out,
            "plot_rcs.py",
            &[("active IRS".into(), path)],
            "rcs_dbsm",
            "RCS (dBsm)",
            &result.reference_levels,
        )?);
    }
    manifest.manifest.outputs = outputs;
    manifest.finish(out)?;
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> CliResult {
    let bytes = read_scenario(&a.scenario)?;
    let loaded = parse_scenario(&String::from_utf8_lossy(&bytes))?;
    let m = loaded.scenario.checked_metrics()?;
    println!("scenario ok: {}", loaded.name.as_deref().unwrap_or("(unnamed)"));
    println!("  digest            {}", loaded.scenario.digest());
    println!("  slope             {:.4} MHz/us", m.slope / 1e12);
    println!("  max range         {:.2} m", m.max_range);
    println!("  range resolution  {:.4} m", m.range_resolution);
    println!("  max velocity      {:.2} m/s", m.max_velocity);
    println!("  velocity res.     {:.4} m/s", m.velocity_resolution);
    println!("  processing gain   {:.2} dB", linear_to_db(m.processing_gain));
    println!("  frame             {} chirps x {} samples", m.chirps_per_frame, m.samples_per_chirp);
    for d in &loaded.diagnostics {
        println!("  {d}");
    }
    Ok(())
}

fn write_plot_script(
    out: &Path,
    name: &str,
    curves: &[(String, PathBuf)],
    column: &str,
    ylabel: &str,
    levels: &[(String, f64)],
) -> Result<PathBuf, CliError> {
    let mut s = String::from("import csv\nimport os\n\nimport matplotlib.pyplot as plt\n\n");
    s.push_str("here = os.path.dirname(os.path.abspath(__file__))\n\n");
    s.push_str("def load(name, col):\n    with open(os.path.join(here, name)) as f:\n");
    s.push_str("        rows = list(csv.DictReader(f))\n");
    s.push_str("    return [float(r['gamma_db']) for r in rows], [float(r[col]) for r in rows]\n\n");
    for (label, path) in curves {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        s.push_str(&format!(
            "x, y = load({file:?}, {column:?})\nplt.plot(x, y, marker='o', label={label:?})\n"
        ));
    }
    for (label, level) in levels {
        s.push_str(&format!("plt.axhline({level}, linestyle='--', label={label:?})\n"));
    }
    s.push_str(&format!(
        "plt.xlabel('reflection gain (dB)')\nplt.ylabel({ylabel:?})\nplt.grid(True)\nplt.legend()\n\
         plt.savefig(os.path.join(here, {:?}))\n",
        name.replace(".py", ".png")
    ));
    let path = out.join(name);
    irs_radar::io::atomic_write(&path, s.as_bytes())?;
    Ok(path)
}
