//! Configuration-driven runs of the full pipeline, as used by the CLI.
//!
//! Each `cmd_*` function reads an [`ExperimentConfig`], does its work and
//! writes its artefacts into `out_dir`. The `run_*` counterparts do the
//! same work without touching the file system.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::{azimuth_cut, beampattern, measure_beamwidth, measure_null_offset, predicted_resolution, AngleGrid, ArrayLayout};
use crate::calibration::{fit_affine, mae_per_axis, synthetic_calibration_set, AffineTransform, AxisMae, CalibrationSet, SyntheticProtocol};
use crate::imaging::{axis, field_for_layout, find_peaks, matched_filter_reconstruct, reconstruct, ImageVolume, Interpolation, StoltOptions, STANDARD_DEPTH, STANDARD_LATERAL};
use crate::io;
use crate::scene::{
    observations_from_table, read_landmark_csv, simulate_camera_frame, simulate_datacube, CameraModel, CameraObservation, CameraSpec, ClutterSpec, Scene, SceneSpec, SubjectSpec,
};
use crate::vitals::{run_vsd, Combining, SubjectOutcome, VitalsEstimate, VsdOptions};
use crate::waveform::{PointTarget, RadarConfig};
use crate::{Error, Result, Vec3};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

/// Pass/fail tolerances against scene ground truth, BPM.
pub const HR_TOLERANCE_BPM: f64 = 2.0;
pub const RR_TOLERANCE_BPM: f64 = 1.0;

/// Random stream used for the synthetic calibration protocol.
const CALIBRATION_STREAM: u64 = 1 << 41;

pub const PRESETS: [&str; 5] = ["single_subject", "elevation_pair", "four_subjects", "single_reflector", "two_reflectors"];

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayoutSource {
    /// 20 x 20 L with half-wavelength spacing, phase centre at the origin.
    #[default]
    Standard,
    LShape {
        n_tx: usize,
        n_rx: usize,
        /// Element spacings in wavelengths at `f0`.
        tx_spacing_wl: f64,
        rx_spacing_wl: f64,
        #[serde(default = "yes")]
        centered: bool,
    },
    /// Columns `index,x,y,z,role`.
    Csv { path: PathBuf },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    Preset(String),
    File(PathBuf),
    Inline(SceneSpec),
}

impl Default for SceneSource {
    fn default() -> Self {
        SceneSource::Preset("single_subject".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSource {
    /// Simulated corner-reflector pairs, fitted by least squares.
    Synthetic(SyntheticProtocol),
    /// Pairs from a CSV file (`id,x_c,y_c,z_c,x_r,y_r,z_r,split`).
    Csv(PathBuf),
    /// A previously fitted `transform.json`.
    Transform(PathBuf),
    /// The camera's true extrinsic, i.e. ground-truth steering.
    Truth,
}

impl Default for CalibrationSource {
    fn default() -> Self {
        CalibrationSource::Synthetic(SyntheticProtocol::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        axis(self.start, self.step, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImagingMethod {
    #[default]
    Stolt,
    MatchedFilter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImagingOptions {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub z: AxisSpec,
    pub method: ImagingMethod,
    pub interpolation: Interpolation,
    pub fov_margin: f64,
    /// Peaks below this fraction of the maximum are not reported.
    pub peak_threshold: f64,
    /// Image the subjects' chest centres as static points too.
    pub include_subjects: bool,
}

impl Default for ImagingOptions {
    fn default() -> Self {
        let spec = |(start, step, n): (f64, f64, usize)| AxisSpec { start, step, n };
        Self {
            x: spec(STANDARD_LATERAL),
            y: spec(STANDARD_LATERAL),
            z: spec(STANDARD_DEPTH),
            method: ImagingMethod::Stolt,
            interpolation: Interpolation::Linear,
            fov_margin: StoltOptions::default().fov_margin,
            peak_threshold: 0.5,
            include_subjects: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeampatternOptions {
    /// Steering azimuth and elevation from boresight, degrees.
    pub steer_deg: (f64, f64),
    /// Azimuth step of the fine cut used for width measurement.
    pub cut_step_deg: f64,
    /// Step and half-span of the 2-D gain map.
    pub map_step_deg: f64,
    pub map_span_deg: f64,
    /// Steering azimuths at which widths are compared with the prediction.
    pub check_azimuths_deg: Vec<f64>,
}

impl Default for BeampatternOptions {
    fn default() -> Self {
        Self {
            steer_deg: (0.0, 0.0),
            cut_step_deg: 0.01,
            map_step_deg: 1.0,
            map_span_deg: 90.0,
            check_azimuths_deg: vec![0.0, 20.0, 40.0, 60.0],
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub radar: RadarConfig,
    #[serde(default)]
    pub layout: LayoutSource,
    #[serde(default)]
    pub scene: SceneSource,
    /// Overrides the scene's camera block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraSpec>,
    /// External camera landmarks (`frame,subject_id,landmark_id,x,y,z`)
    /// used instead of the simulated camera.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks_csv: Option<PathBuf>,
    #[serde(default)]
    pub calibration: CalibrationSource,
    #[serde(default)]
    pub pipeline: VsdOptions,
    #[serde(default)]
    pub imaging: ImagingOptions,
    #[serde(default)]
    pub beampattern: BeampatternOptions,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_preset(name: &str, seed: u64) -> Result<Self> {
        preset_scene(name)?;
        Ok(Self {
            radar: RadarConfig::standard(),
            layout: LayoutSource::Standard,
            scene: SceneSource::Preset(name.into()),
            camera: None,
            landmarks_csv: None,
            calibration: CalibrationSource::default(),
            pipeline: VsdOptions::default(),
            imaging: ImagingOptions::default(),
            beampattern: BeampatternOptions::default(),
            out_dir: default_out(),
            seed,
            base_dir: PathBuf::new(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("experiment config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn require_file(&self, p: &Path) -> Result<PathBuf> {
        let r = self.resolve(p);
        if !r.is_file() {
            return Err(Error::InvalidConfig(format!("referenced file {} does not exist", r.display())));
        }
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if let LayoutSource::Csv { path } = &self.layout {
            self.require_file(path)?;
        }
        if let SceneSource::File(p) = &self.scene {
            self.require_file(p)?;
        }
        if let SceneSource::Preset(n) = &self.scene {
            preset_scene(n)?;
        }
        if let Some(p) = &self.landmarks_csv {
            self.require_file(p)?;
        }
        match &self.calibration {
            CalibrationSource::Csv(p) | CalibrationSource::Transform(p) => {
                self.require_file(p)?;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build_layout(&self) -> Result<ArrayLayout> {
        let lam = self.radar.wavelength();
        let layout = match &self.layout {
            LayoutSource::Standard => ArrayLayout::standard(&self.radar),
            LayoutSource::LShape {
                n_tx,
                n_rx,
                tx_spacing_wl,
                rx_spacing_wl,
                centered,
            } => {
                let l = crate::array::l_shape_layout(*n_tx, *n_rx, tx_spacing_wl * lam, rx_spacing_wl * lam, 0.0, lam)?;
                if *centered {
                    l.centered()
                } else {
                    l
                }
            }
            LayoutSource::Csv { path } => ArrayLayout::read_csv(fs::File::open(self.require_file(path)?)?, lam)?,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn scene_spec(&self) -> Result<SceneSpec> {
        let mut spec = match &self.scene {
            SceneSource::Preset(n) => preset_scene(n)?,
            SceneSource::File(p) => SceneSpec::from_json(&fs::read_to_string(self.require_file(p)?)?)?,
            SceneSource::Inline(s) => s.clone(),
        };
        spec.seed = self.seed;
        if let Some(c) = &self.camera {
            spec.camera = c.clone();
        }
        Ok(spec)
    }

    pub fn build_scene(&self) -> Result<(Scene, CameraModel)> {
        self.scene_spec()?.build()
    }
}

/// Chest point with radial distance `r`, azimuth and elevation as
/// `arctan(x / r)` and `arctan(y / r)`, degrees.
fn at_perspective(r: f64, az_deg: f64, el_deg: f64) -> [f64; 3] {
    let x = r * az_deg.to_radians().tan();
    let y = r * el_deg.to_radians().tan();
    [x, y, (r * r - x * x - y * y).sqrt()]
}

fn subject(id: &str, position: [f64; 3], rr: f64, hr: f64) -> SubjectSpec {
    SubjectSpec {
        id: id.into(),
        position,
        rr_bpm: rr,
        hr_bpm: hr,
        resp_amplitude_mm: 4.0,
        heart_amplitude_mm: 0.1,
        reflectivity: [1.0, 0.0],
        resp_harmonics: Vec::new(),
        landmarks: None,
    }
}

fn clutter(position: [f64; 3], re: f64, im: f64) -> ClutterSpec {
    ClutterSpec {
        position,
        reflectivity: [re, im],
    }
}

/// Named scenes. Vital-sign presets run 15 s at 10 dB SNR; the reflector
/// presets are static.
pub fn preset_scene(name: &str) -> Result<SceneSpec> {
    let base = |subjects, clutter, dur, snr| SceneSpec {
        subjects,
        clutter,
        camera: CameraSpec::default(),
        snr_db: snr,
        duration_s: dur,
        seed: 0,
        attenuation: Default::default(),
    };
    Ok(match name {
        // broadside subject with a strong off-axis reflector at the same range
        "single_subject" => base(
            vec![subject("s1", [0.0, 0.0, 1.0], 12.0, 78.0)],
            vec![clutter(at_perspective(1.0, 25.0, 20.0), 3.0, 0.0)],
            15.0,
            Some(10.0),
        ),
        // seated and standing subject at the same azimuth
        "elevation_pair" => base(
            vec![
                subject("seated", [0.0, -0.25, 1.0], 12.0, 78.0),
                subject("standing", [0.0, 0.25, 1.4], 17.0, 49.0),
            ],
            Vec::new(),
            15.0,
            Some(10.0),
        ),
        // four subjects in the four quadrants; two strong static reflectors
        // share the range cells of the nearest and farthest subject
        "four_subjects" => base(
            vec![
                subject("s1", at_perspective(1.10, -12.0, -10.0), 14.0, 63.0),
                subject("s2", at_perspective(0.98, 12.0, -12.0), 12.0, 78.0),
                subject("s3", at_perspective(1.47, -10.0, 8.0), 15.0, 50.0),
                subject("s4", at_perspective(1.54, 10.0, 10.0), 10.0, 85.0),
            ],
            vec![
                clutter(at_perspective(0.98, 30.0, 25.0), 3.0, 0.0),
                clutter(at_perspective(1.54, -30.0, -25.0), 0.0, 3.0),
                clutter(at_perspective(1.10, 35.0, 28.0), 2.0, 1.0),
            ],
            15.0,
            Some(10.0),
        ),
        "single_reflector" => base(Vec::new(), vec![clutter([0.03, -0.02, 0.6], 1.0, 0.0)], 1.0, None),
        // 5 cm apart at 0.5 m, in quadrature so the pair is resolvable
        "two_reflectors" => base(
            Vec::new(),
            vec![clutter([-0.025, 0.0, 0.5], 1.0, 0.0), clutter([0.025, 0.0, 0.5], 0.0, 1.0)],
            1.0,
            None,
        ),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset '{other}' (known: {})",
                PRESETS.join(", ")
            )))
        }
    })
}

// ---------------------------------------------------------------- calibrate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeRow {
    pub method: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub average: f64,
}

impl MaeRow {
    fn new(method: &str, m: &AxisMae) -> Self {
        Self {
            method: method.into(),
            x: m.x,
            y: m.y,
            z: m.z,
            average: m.average,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeReport {
    pub units: String,
    pub n_train: usize,
    pub n_test: usize,
    pub rows: Vec<MaeRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub transform: AffineTransform,
    pub set: Option<CalibrationSet>,
    pub report: Option<MaeReport>,
}

/// Obtain the camera-to-radar transform the config asks for.
pub fn run_calibration(cfg: &ExperimentConfig, cam: &CameraModel) -> Result<CalibrationOutcome> {
    let set = match &cfg.calibration {
        CalibrationSource::Truth => {
            return Ok(CalibrationOutcome {
                transform: cam.extrinsic_truth,
                set: None,
                report: None,
            })
        }
        CalibrationSource::Transform(p) => {
            #[derive(Deserialize)]
            struct File {
                matrix: AffineTransform,
            }
            let f: File = io::read_json(&cfg.require_file(p)?)?;
            return Ok(CalibrationOutcome {
                transform: f.matrix,
                set: None,
                report: None,
            });
        }
        CalibrationSource::Synthetic(proto) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(CALIBRATION_STREAM);
            synthetic_calibration_set(cam, proto, &mut rng)?
        }
        CalibrationSource::Csv(p) => CalibrationSet::read_csv(fs::File::open(cfg.require_file(p)?)?)?,
    };
    if set.train.len() < 4 {
        return Err(Error::Precondition(format!(
            "calibration needs at least 4 training pairs, got {}",
            set.train.len()
        )));
    }
    let transform = fit_affine(&set.train)?;
    let mut rows = vec![MaeRow::new("Affine (Train)", &mae_per_axis(&transform, &set.train)?.scaled(100.0))];
    if !set.test.is_empty() {
        rows.push(MaeRow::new("Affine (Test)", &mae_per_axis(&transform, &set.test)?.scaled(100.0)));
    }
    let report = MaeReport {
        units: "cm".into(),
        n_train: set.train.len(),
        n_test: set.test.len(),
        rows,
    };
    Ok(CalibrationOutcome {
        transform,
        set: Some(set),
        report: Some(report),
    })
}

#[derive(Serialize)]
struct TransformFile<'a> {
    description: &'a str,
    matrix: AffineTransform,
    #[serde(skip_serializing_if = "Option::is_none")]
    mae_cm: Option<&'a [MaeRow]>,
}

fn write_transform(dir: &Path, t: &AffineTransform, report: Option<&MaeReport>) -> Result<()> {
    io::write_json(
        &dir.join("transform.json"),
        &TransformFile {
            description: "camera-to-radar affine map, 4x4 row-major, metres",
            matrix: *t,
            mae_cm: report.map(|r| r.rows.as_slice()),
        },
    )
}

/// Writes `transform.json`, `mae_report.json` and, for synthetic or CSV
/// sources, `calibration_pairs.csv`.
pub fn cmd_calibrate(cfg: &ExperimentConfig) -> Result<CalibrationOutcome> {
    cfg.validate()?;
    let (_, cam) = cfg.build_scene()?;
    let out = run_calibration(cfg, &cam)?;
    let dir = cfg.resolve(&cfg.out_dir);
    write_transform(&dir, &out.transform, out.report.as_ref())?;
    if let Some(r) = &out.report {
        io::write_json(&dir.join("mae_report.json"), r)?;
    }
    if let Some(s) = &out.set {
        let mut buf = Vec::new();
        s.write_csv(&mut buf)?;
        io::write_atomic(&dir.join("calibration_pairs.csv"), &buf)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------- vsd

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectMetrics {
    pub subject_id: String,
    pub truth_rr_bpm: f64,
    pub truth_hr_bpm: f64,
    pub rr_bpm: Option<f64>,
    pub hr_bpm: Option<f64>,
    pub rr_error_bpm: Option<f64>,
    pub hr_error_bpm: Option<f64>,
    pub within_tolerance: bool,
    pub low_confidence: Option<bool>,
    pub range_bin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsdMetrics {
    pub combining: Combining,
    pub seed: u64,
    pub hr_tolerance_bpm: f64,
    pub rr_tolerance_bpm: f64,
    pub subjects: Vec<SubjectMetrics>,
    pub n_within_tolerance: usize,
    pub n_failed: usize,
}

impl VsdMetrics {
    pub fn all_within_tolerance(&self) -> bool {
        self.n_within_tolerance == self.subjects.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub coherent: VsdMetrics,
    pub non_coherent: VsdMetrics,
    pub single_channel: VsdMetrics,
}

#[derive(Debug)]
pub struct VsdRun {
    pub outcomes: Vec<SubjectOutcome>,
    pub metrics: VsdMetrics,
    pub comparison: Comparison,
    pub transform: AffineTransform,
    pub calibration_report: Option<MaeReport>,
}

impl VsdRun {
    pub fn n_failed(&self) -> usize {
        self.metrics.n_failed
    }
}

fn metrics_for(scene: &Scene, outcomes: &[SubjectOutcome], combining: Combining, seed: u64) -> VsdMetrics {
    let mut subjects = Vec::new();
    for o in outcomes {
        let truth = scene.subjects.iter().find(|s| s.id == o.subject_id);
        let (trr, thr) = truth.map(|s| (s.resp_rate * 60.0, s.heart_rate * 60.0)).unwrap_or((f64::NAN, f64::NAN));
        let m = match &o.result {
            Ok(v) => {
                let e: &VitalsEstimate = &v.estimate;
                let (er, eh) = (e.rr_bpm - trr, e.hr_bpm - thr);
                SubjectMetrics {
                    subject_id: o.subject_id.clone(),
                    truth_rr_bpm: trr,
                    truth_hr_bpm: thr,
                    rr_bpm: Some(e.rr_bpm),
                    hr_bpm: Some(e.hr_bpm),
                    rr_error_bpm: Some(er),
                    hr_error_bpm: Some(eh),
                    within_tolerance: er.abs() <= RR_TOLERANCE_BPM && eh.abs() <= HR_TOLERANCE_BPM,
                    low_confidence: Some(e.low_confidence()),
                    range_bin: Some(v.steer.range_bin),
                    error: None,
                }
            }
            Err(err) => SubjectMetrics {
                subject_id: o.subject_id.clone(),
                truth_rr_bpm: trr,
                truth_hr_bpm: thr,
                rr_bpm: None,
                hr_bpm: None,
                rr_error_bpm: None,
                hr_error_bpm: None,
                within_tolerance: false,
                low_confidence: None,
                range_bin: None,
                error: Some(err.to_string()),
            },
        };
        subjects.push(m);
    }
    VsdMetrics {
        combining,
        seed,
        hr_tolerance_bpm: HR_TOLERANCE_BPM,
        rr_tolerance_bpm: RR_TOLERANCE_BPM,
        n_within_tolerance: subjects.iter().filter(|s| s.within_tolerance).count(),
        n_failed: outcomes.iter().filter(|o| o.result.is_err()).count(),
        subjects,
    }
}

/// Camera observations for the whole run, simulated or read from the
/// configured landmark file.
pub fn camera_frames(cfg: &ExperimentConfig, scene: &Scene, cam: &CameraModel) -> Result<Vec<Vec<CameraObservation>>> {
    if let Some(p) = &cfg.landmarks_csv {
        let table = read_landmark_csv(fs::File::open(cfg.require_file(p)?)?)?;
        let frames: std::collections::BTreeSet<usize> = table.keys().map(|(f, _)| *f).collect();
        return Ok(frames.into_iter().map(|f| observations_from_table(&table, f)).collect());
    }
    let n = ((scene.duration * cam.frame_rate).round() as usize).max(1);
    (0..n).map(|i| simulate_camera_frame(scene, cam, i as f64 / cam.frame_rate)).collect()
}

/// Full vital-sign run without writing files.
pub fn run_vsd_experiment(cfg: &ExperimentConfig) -> Result<VsdRun> {
    cfg.validate()?;
    let (scene, cam) = cfg.build_scene()?;
    if scene.subjects.is_empty() {
        return Err(Error::InvalidConfig("vital-sign run needs at least one subject".into()));
    }
    let layout = cfg.build_layout()?;
    let cal = run_calibration(cfg, &cam)?;
    let cube = simulate_datacube(&scene, &cfg.radar, &layout)?;
    let frames = camera_frames(cfg, &scene, &cam)?;
    let run = |c: Combining| {
        let opts = VsdOptions { combining: c, ..cfg.pipeline };
        run_vsd(&cube, &frames, &cal.transform, &layout, &cfg.radar, &opts)
    };
    let results: BTreeMap<&str, Vec<SubjectOutcome>> = [
        ("coherent", run(Combining::Coherent)?),
        ("non_coherent", run(Combining::NonCoherent)?),
        ("single_channel", run(Combining::SingleChannel)?),
    ]
    .into_iter()
    .collect();
    let m = |k: &str, c| metrics_for(&scene, &results[k], c, cfg.seed);
    let comparison = Comparison {
        coherent: m("coherent", Combining::Coherent),
        non_coherent: m("non_coherent", Combining::NonCoherent),
        single_channel: m("single_channel", Combining::SingleChannel),
    };
    let key = match cfg.pipeline.combining {
        Combining::Coherent => "coherent",
        Combining::NonCoherent => "non_coherent",
        Combining::SingleChannel => "single_channel",
    };
    let mut results = results;
    let outcomes = results.remove(key).expect("all modes ran");
    let metrics = metrics_for(&scene, &outcomes, cfg.pipeline.combining, cfg.seed);
    Ok(VsdRun {
        outcomes,
        metrics,
        comparison,
        transform: cal.transform,
        calibration_report: cal.report,
    })
}

#[derive(Serialize)]
struct SteerRecord {
    radar_point: [f64; 3],
    theta0_deg: f64,
    phi0_deg: f64,
    r0_m: f64,
    range_bin: usize,
}

#[derive(Serialize)]
struct SubjectRecord<'a> {
    subject_id: &'a str,
    combining: Combining,
    estimate: &'a VitalsEstimate,
    low_confidence: bool,
    steer: SteerRecord,
    sliding: &'a [crate::vitals::SlidingEstimate],
}

fn safe_name(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes per-subject `vitals_<id>.json`, `spectrum_<id>.csv` (from the
/// phase differential), `spectrum_psi_<id>.csv`, `range_time_<id>.csv`,
/// `phase_<id>.csv`, plus `metrics.json`, `comparison.json` and
/// `transform.json`.
pub fn cmd_vsd(cfg: &ExperimentConfig) -> Result<VsdRun> {
    let run = run_vsd_experiment(cfg)?;
    let dir = cfg.resolve(&cfg.out_dir);
    let lam = cfg.radar.center_wavelength();
    for o in &run.outcomes {
        let Ok(v) = &o.result else {
            log::warn!("subject '{}' failed: {}", o.subject_id, o.result.as_ref().err().map(|e| e.to_string()).unwrap_or_default());
            continue;
        };
        let name = safe_name(&o.subject_id);
        let rec = SubjectRecord {
            subject_id: &o.subject_id,
            combining: cfg.pipeline.combining,
            estimate: &v.estimate,
            low_confidence: v.estimate.low_confidence(),
            steer: SteerRecord {
                radar_point: [v.steer.radar_point.x, v.steer.radar_point.y, v.steer.radar_point.z],
                theta0_deg: v.steer.theta0.to_degrees(),
                phi0_deg: v.steer.phi0.to_degrees(),
                r0_m: v.steer.r0,
                range_bin: v.steer.range_bin,
            },
            sliding: &v.sliding,
        };
        io::write_json(&dir.join(format!("vitals_{name}.json")), &rec)?;
        io::write_spectrum_csv(&dir.join(format!("spectrum_{name}.csv")), &v.spectrum_hr)?;
        io::write_spectrum_csv(&dir.join(format!("spectrum_psi_{name}.csv")), &v.spectrum_rr)?;
        io::write_range_time_csv(&dir.join(format!("range_time_{name}.csv")), v)?;
        io::write_phase_csv(&dir.join(format!("phase_{name}.csv")), v, lam)?;
    }
    io::write_json(&dir.join("metrics.json"), &run.metrics)?;
    io::write_json(&dir.join("comparison.json"), &run.comparison)?;
    write_transform(&dir, &run.transform, run.calibration_report.as_ref())?;
    if let Some(r) = &run.calibration_report {
        io::write_json(&dir.join("mae_report.json"), r)?;
    }
    Ok(run)
}

// -------------------------------------------------------------------- image

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub index: [usize; 3],
    pub position: [f64; 3],
    /// Relative to the strongest voxel.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub method: ImagingMethod,
    pub threshold: f64,
    pub targets: Vec<[f64; 3]>,
    pub peaks: Vec<PeakRecord>,
}

/// Static scatterers of the scene: clutter, plus chest centres if asked.
pub fn static_targets(scene: &Scene, include_subjects: bool) -> Vec<PointTarget> {
    let mut t = scene.clutter.clone();
    if include_subjects {
        t.extend(scene.subjects.iter().map(|s| PointTarget::new(s.chest_center, s.reflectivity)));
    }
    t
}

pub fn run_image(cfg: &ExperimentConfig) -> Result<(ImageVolume, PeakReport)> {
    cfg.validate()?;
    let (scene, _) = cfg.build_scene()?;
    let layout = cfg.build_layout()?;
    let o = &cfg.imaging;
    let (x, y, z) = (o.x.values(), o.y.values(), o.z.values());
    let targets = static_targets(&scene, o.include_subjects);
    let vol = if targets.is_empty() {
        let v = ImageVolume::zeros(x, y, z);
        v.validate()?;
        v
    } else {
        let field = field_for_layout(&targets, &layout, &cfg.radar)?;
        match o.method {
            ImagingMethod::Stolt => reconstruct(
                &field,
                &x,
                &y,
                &z,
                &StoltOptions {
                    interpolation: o.interpolation,
                    fov_margin: o.fov_margin,
                },
            )?,
            ImagingMethod::MatchedFilter => matched_filter_reconstruct(&field, &x, &y, &z)?,
        }
    };
    let peaks = find_peaks(&vol, o.peak_threshold);
    let max = peaks.first().map(|p| p.magnitude).unwrap_or(1.0);
    let report = PeakReport {
        method: o.method,
        threshold: o.peak_threshold,
        targets: targets.iter().map(|t| [t.position.x, t.position.y, t.position.z]).collect(),
        peaks: peaks
            .iter()
            .map(|p| PeakRecord {
                index: [p.index.0, p.index.1, p.index.2],
                position: [p.position.x, p.position.y, p.position.z],
                magnitude: p.magnitude / max,
            })
            .collect(),
    };
    Ok((vol, report))
}

/// Writes `volume.bin`, `volume.meta.json` and `peaks.json`.
pub fn cmd_image(cfg: &ExperimentConfig) -> Result<PeakReport> {
    let (vol, report) = run_image(cfg)?;
    let dir = cfg.resolve(&cfg.out_dir);
    let provenance = format!("{:?} reconstruction of {} static scatterer(s), seed {}", report.method, report.targets.len(), cfg.seed);
    io::write_volume(&dir, "volume", &vol, &provenance)?;
    io::write_json(&dir.join("peaks.json"), &report)?;
    Ok(report)
}

// -------------------------------------------------------------- beampattern

/// Measured width, or "unbounded" when the main lobe never falls to the
/// level inside the cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Width {
    Degrees(f64),
    Unbounded(String),
}

impl Width {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(w) => Width::Degrees(w.to_degrees()),
            None => Width::Unbounded("unbounded".into()),
        }
    }

    pub fn degrees(&self) -> Option<f64> {
        match self {
            Width::Degrees(d) => Some(*d),
            Width::Unbounded(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthCheck {
    pub steer_azimuth_deg: f64,
    /// Full width at half power.
    pub half_power_width_deg: Width,
    /// Peak-to-first-null distance.
    pub null_offset_deg: Width,
    /// `lambda / (N d cos(theta))`.
    pub predicted_deg: Width,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeampatternReport {
    pub n_tx: usize,
    pub n_rx: usize,
    pub steer_deg: (f64, f64),
    pub checks: Vec<WidthCheck>,
}

fn tx_line(layout: &ArrayLayout) -> (usize, f64) {
    let n = layout.n_tx();
    let d = if n > 1 { (layout.tx_elements[1] - layout.tx_elements[0]).norm() } else { 0.0 };
    (n, d)
}

pub fn run_beampattern(cfg: &ExperimentConfig) -> Result<(crate::array::GainMap, BeampatternReport)> {
    cfg.validate()?;
    let layout = cfg.build_layout()?;
    let o = &cfg.beampattern;
    if !(o.cut_step_deg > 0.0 && o.map_step_deg > 0.0 && o.map_span_deg > 0.0) {
        return Err(Error::InvalidConfig("beampattern steps and span must be > 0".into()));
    }
    let sopts = cfg.pipeline.steering;
    let el = sopts.elevation.from_boresight_angle(o.steer_deg.1.to_radians());
    let span = o.map_span_deg.min(90.0);
    let n_map = (2.0 * span / o.map_step_deg).round() as usize + 1;
    let grid_deg = AngleGrid::linspace(-span, span, n_map);
    let grid = AngleGrid {
        thetas: grid_deg.iter().map(|d| d.to_radians()).collect(),
        phis: grid_deg.iter().map(|d| sopts.elevation.from_boresight_angle(d.to_radians())).collect(),
    };
    let map = beampattern(&layout, (o.steer_deg.0.to_radians(), el), &grid, &sopts);
    let n_cut = (180.0 / o.cut_step_deg).round() as usize + 1;
    let cut: Vec<f64> = AngleGrid::linspace(-90.0, 90.0, n_cut).iter().map(|d| d.to_radians()).collect();
    let (n, d) = tx_line(&layout);
    let lam = layout.wavelength;
    let checks = o
        .check_azimuths_deg
        .iter()
        .map(|&az| {
            let g = azimuth_cut(&layout, (az.to_radians(), el), &cut, &sopts);
            WidthCheck {
                steer_azimuth_deg: az,
                half_power_width_deg: Width::from(measure_beamwidth(&cut, &g)),
                null_offset_deg: Width::from(if n > 1 { measure_null_offset(&cut, &g) } else { None }),
                predicted_deg: Width::from((n > 1).then(|| predicted_resolution(lam, n, d, az.to_radians()))),
            }
        })
        .collect();
    Ok((
        map,
        BeampatternReport {
            n_tx: layout.n_tx(),
            n_rx: layout.n_rx(),
            steer_deg: o.steer_deg,
            checks,
        },
    ))
}

/// Writes `beampattern.csv` (`azimuth_deg,elevation_deg,gain_db`, elevation
/// from boresight) and `beamwidth_report.json`.
pub fn cmd_beampattern(cfg: &ExperimentConfig) -> Result<BeampatternReport> {
    let (map, report) = run_beampattern(cfg)?;
    let dir = cfg.resolve(&cfg.out_dir);
    let span = cfg.beampattern.map_span_deg.min(90.0);
    let deg = AngleGrid::linspace(-span, span, map.thetas.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["azimuth_deg", "elevation_deg", "gain_db"])?;
    for (ip, el) in deg.iter().enumerate() {
        for (it, az) in deg.iter().enumerate() {
            let g = map.get(it, ip).max(1e-30);
            w.write_record([format!("{az:.4}"), format!("{el:.4}"), format!("{:.4}", 10.0 * g.log10())])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    io::write_atomic(&dir.join("beampattern.csv"), &bytes)?;
    io::write_json(&dir.join("beamwidth_report.json"), &report)?;
    Ok(report)
}

// ----------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SubjectTruth<'a> {
    id: &'a str,
    chest_center: [f64; 3],
    rr_bpm: f64,
    hr_bpm: f64,
    resp_amplitude_m: f64,
    heart_amplitude_m: f64,
}

#[derive(Serialize)]
struct SceneTruth<'a> {
    seed: u64,
    duration_s: f64,
    snr_db: Option<f64>,
    n_frames: usize,
    subjects: Vec<SubjectTruth<'a>>,
    camera_to_radar: AffineTransform,
}

/// Writes `cube.bin` + `cube.meta.json`, `scene_truth.json` and the
/// simulated camera landmarks as `landmarks.csv`.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let (scene, cam) = cfg.build_scene()?;
    let layout = cfg.build_layout()?;
    let cube = simulate_datacube(&scene, &cfg.radar, &layout)?;
    let dir = cfg.resolve(&cfg.out_dir);
    io::write_cube(&dir, "cube", &cube)?;
    let truth = SceneTruth {
        seed: scene.seed,
        duration_s: scene.duration,
        snr_db: scene.snr_db,
        n_frames: cube.n_frames,
        subjects: scene
            .subjects
            .iter()
            .map(|s| SubjectTruth {
                id: &s.id,
                chest_center: [s.chest_center.x, s.chest_center.y, s.chest_center.z],
                rr_bpm: s.resp_rate * 60.0,
                hr_bpm: s.heart_rate * 60.0,
                resp_amplitude_m: s.resp_amplitude,
                heart_amplitude_m: s.heart_amplitude,
            })
            .collect(),
        camera_to_radar: cam.extrinsic_truth,
    };
    io::write_json(&dir.join("scene_truth.json"), &truth)?;
    let frames = camera_frames(cfg, &scene, &cam)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["frame", "subject_id", "landmark_id", "x", "y", "z"])?;
    for (f, obs) in frames.iter().enumerate() {
        for o in obs.iter().filter(|o| o.observed) {
            for (i, p) in o.landmarks.iter().enumerate() {
                w.write_record([f.to_string(), o.subject_id.clone(), i.to_string(), format!("{:.9}", p.x), format!("{:.9}", p.y), format!("{:.9}", p.z)])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    io::write_atomic(&dir.join("landmarks.csv"), &bytes)?;
    Ok(())
}

/// The subject positions of a scene, for reporting.
pub fn subject_positions(scene: &Scene) -> Vec<(String, Vec3)> {
    scene.subjects.iter().map(|s| (s.id.clone(), s.chest_center)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for p in PRESETS {
            let cfg = ExperimentConfig::from_preset(p, 1).unwrap();
            let (scene, _) = cfg.build_scene().unwrap();
            assert_eq!(scene.seed, 1);
        }
        assert!(ExperimentConfig::from_preset("nope", 1).is_err());
    }

    #[test]
    fn four_subject_geometry() {
        let s = preset_scene("four_subjects").unwrap();
        let r: Vec<f64> = s.subjects.iter().map(|s| Vec3::from(s.position).norm()).collect();
        for (a, b) in r.iter().zip([1.10, 0.98, 1.47, 1.54]) {
            assert!((a - b).abs() < 1e-12);
        }
        let hr: Vec<f64> = s.subjects.iter().map(|s| s.hr_bpm).collect();
        assert_eq!(hr, vec![63.0, 78.0, 50.0, 85.0]);
    }

    #[test]
    fn config_json_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"seed": 3, "scene": {"preset": "elevation_pair"}}"#).unwrap();
        assert_eq!(cfg.radar, RadarConfig::standard());
        assert_eq!(cfg.layout, LayoutSource::Standard);
        assert_eq!(cfg.calibration, CalibrationSource::default());
        assert!(ExperimentConfig::from_json(r#"{"scene": {"preset": "x"}}"#).is_err());
        let cfg = ExperimentConfig::from_json(r#"{"seed": 3, "calibration": "truth", "layout": {"kind": "l_shape", "n_tx": 4, "n_rx": 4, "tx_spacing_wl": 0.5, "rx_spacing_wl": 0.5}}"#).unwrap();
        assert_eq!(cfg.calibration, CalibrationSource::Truth);
        assert_eq!(cfg.build_layout().unwrap().n_channels(), 16);
    }

    #[test]
    fn missing_files_are_config_errors() {
        let cfg = ExperimentConfig::from_json(r#"{"seed": 3, "scene": {"file": "/nonexistent/scene.json"}}"#).unwrap();
        let e = cfg.validate().unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
    }
}
