//! Synthetic ground truth: breathing subjects, static clutter, the MIMO data
//! cube they produce and what a depth camera would report about them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Read;

use nalgebra::{Matrix3, Rotation3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::array::{ArrayLayout, DataCube};
use crate::calibration::{gaussian3, AffineTransform};
use crate::waveform::{accumulate_phasors, Attenuation, PointTarget, RadarConfig};
use crate::{Complex64, Error, Result, Vec3};

/// Camera random streams are offset from radar frame streams by this much.
const CAMERA_STREAM_BASE: u64 = 1 << 40;

/// Torso landmark offsets from the chest centre: left/right shoulder,
/// left/right hip.
pub const DEFAULT_TORSO_OFFSETS: [[f64; 3]; 4] = [
    [-0.20, 0.25, 0.0],
    [0.20, 0.25, 0.0],
    [-0.15, -0.25, 0.0],
    [0.15, -0.25, 0.0],
];

#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub id: String,
    pub chest_center: Vec3,
    pub torso_landmarks: [Vec3; 4],
    /// Hz.
    pub resp_rate: f64,
    /// m.
    pub resp_amplitude: f64,
    /// Hz.
    pub heart_rate: f64,
    /// m.
    pub heart_amplitude: f64,
    pub reflectivity: Complex64,
    /// Amplitudes of respiration harmonics 2, 3, ... relative to the
    /// fundamental.
    pub resp_harmonics: Vec<f64>,
}

impl Subject {
    /// Subject with default 4 mm / 0.1 mm chest motion and a standard torso.
    pub fn new(id: &str, chest_center: Vec3, rr_bpm: f64, hr_bpm: f64) -> Self {
        Self {
            id: id.to_string(),
            chest_center,
            torso_landmarks: default_landmarks(&chest_center),
            resp_rate: rr_bpm / 60.0,
            resp_amplitude: 4.0e-3,
            heart_rate: hr_bpm / 60.0,
            heart_amplitude: 0.1e-3,
            reflectivity: Complex64::new(1.0, 0.0),
            resp_harmonics: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("subject '{}': {m}", self.id)));
        if !(0.1..=0.7).contains(&self.resp_rate) {
            return bad(format!("resp_rate {} Hz outside [0.1, 0.7]", self.resp_rate));
        }
        if !(0.7..=3.0).contains(&self.heart_rate) {
            return bad(format!("heart_rate {} Hz outside [0.7, 3.0]", self.heart_rate));
        }
        if !(self.resp_amplitude > 0.0 && self.heart_amplitude > 0.0) {
            return bad("amplitudes must be > 0".into());
        }
        if self.heart_amplitude >= self.resp_amplitude {
            return bad("heart_amplitude must be below resp_amplitude".into());
        }
        if !self.chest_center.iter().all(|v| v.is_finite()) {
            return bad("non-finite chest centre".into());
        }
        Ok(())
    }

    /// The peak displacement magnitude this subject can reach.
    pub fn max_displacement(&self) -> f64 {
        self.resp_amplitude * (1.0 + self.resp_harmonics.iter().map(|h| h.abs()).sum::<f64>())
            + self.heart_amplitude
    }
}

pub fn default_landmarks(center: &Vec3) -> [Vec3; 4] {
    DEFAULT_TORSO_OFFSETS.map(|o| center + Vec3::new(o[0], o[1], o[2]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub subjects: Vec<Subject>,
    pub clutter: Vec<PointTarget>,
    /// s.
    pub duration: f64,
    pub seed: u64,
    /// Per-sample SNR relative to the strongest subject's single-channel
    /// echo. `None` disables noise.
    pub snr_db: Option<f64>,
    pub attenuation: Attenuation,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::InvalidConfig(format!("duration must be > 0, got {}", self.duration)));
        }
        for s in &self.subjects {
            s.validate()?;
        }
        for (i, a) in self.subjects.iter().enumerate() {
            for b in &self.subjects[i + 1..] {
                if (a.chest_center - b.chest_center).norm() < 1e-6 {
                    return Err(Error::InvalidConfig(format!(
                        "subjects '{}' and '{}' share a chest centre",
                        a.id, b.id
                    )));
                }
            }
        }
        let mut ids: Vec<&str> = self.subjects.iter().map(|s| s.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.subjects.len() {
            return Err(Error::InvalidConfig("subject ids must be unique".into()));
        }
        Ok(())
    }

    pub fn n_frames(&self, frame_rate: f64) -> usize {
        ((self.duration * frame_rate).round() as usize).max(1)
    }
}

/// Radial chest displacement at time `t`, m.
pub fn chest_displacement(subject: &Subject, t: f64) -> f64 {
    let w = 2.0 * PI * subject.resp_rate * t;
    let mut d = subject.resp_amplitude * w.sin();
    for (i, h) in subject.resp_harmonics.iter().enumerate() {
        d += subject.resp_amplitude * h * ((i as f64 + 2.0) * w).sin();
    }
    d + subject.heart_amplitude * (2.0 * PI * subject.heart_rate * t).sin()
}

/// Chest scatterer position at time `t`: the centre moved radially away from
/// the radar origin by the displacement.
pub fn displaced_chest(subject: &Subject, t: f64) -> Vec3 {
    let c = subject.chest_center;
    let r = c.norm();
    if r < 1e-12 {
        return c;
    }
    c * (1.0 + chest_displacement(subject, t) / r)
}

fn echo_amplitude(refl: Complex64, dt: f64, dr: f64, att: Attenuation) -> Complex64 {
    match att {
        Attenuation::None => refl,
        Attenuation::InverseSquare => refl / (dt * dr),
    }
}

fn add_target(cube: &mut DataCube, frame: usize, layout: &ArrayLayout, target: &PointTarget, att: Attenuation) -> Result<()> {
    let dtx: Vec<f64> = layout.tx_elements.iter().map(|e| (e - target.position).norm()).collect();
    let drx: Vec<f64> = layout.rx_elements.iter().map(|e| (e - target.position).norm()).collect();
    if dtx.iter().chain(&drx).any(|d| *d < 1e-12) {
        return Err(Error::DegenerateGeometry("scatterer coincides with an antenna".into()));
    }
    let cfg = cube.cfg;
    let mut spec = vec![Complex64::new(0.0, 0.0); cfg.n_steps];
    for (t, dt) in dtx.iter().enumerate() {
        for (r, dr) in drx.iter().enumerate() {
            spec.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            let amp = echo_amplitude(target.reflectivity, *dt, *dr, att);
            accumulate_phasors(&mut spec, amp, (dt + dr) / cfg.c, &cfg);
            for (s, v) in spec.iter().enumerate() {
                let i = cube.index(frame, s, t, r);
                cube.samples[i] += v;
            }
        }
    }
    Ok(())
}

/// Noise variance per complex channel sample for the scene's SNR.
pub fn noise_variance(scene: &Scene, layout: &ArrayLayout) -> Option<f64> {
    let snr = scene.snr_db?;
    let p = scene
        .subjects
        .iter()
        .map(|s| {
            let r = (layout.tx_elements[0] - s.chest_center).norm();
            let q = (layout.rx_elements[0] - s.chest_center).norm();
            echo_amplitude(s.reflectivity, r, q, scene.attenuation).norm_sqr()
        })
        .fold(0.0, f64::max);
    if p > 0.0 {
        Some(p / 10f64.powf(snr / 10.0))
    } else {
        None
    }
}

/// Synthesise the `[frame][step][tx][rx]` cube for the scene. Chest motion
/// is frozen within a frame. Frame `m` draws its noise from stream `m` of a
/// ChaCha8 generator seeded with the scene seed.
pub fn simulate_datacube(scene: &Scene, cfg: &RadarConfig, layout: &ArrayLayout) -> Result<DataCube> {
    cfg.validate()?;
    layout.validate()?;
    scene.validate()?;
    let r_max = cfg.unambiguous_range();
    for s in &scene.subjects {
        let r = s.chest_center.norm() + s.max_displacement();
        if r >= r_max {
            return Err(Error::OutOfRange(format!(
                "subject '{}' at {:.3} m is beyond the unambiguous range {:.3} m",
                s.id, r, r_max
            )));
        }
    }
    let n_frames = scene.n_frames(cfg.frame_rate);
    let mut cube = DataCube::zeros(n_frames, cfg, layout.n_tx(), layout.n_rx());
    for c in &scene.clutter {
        add_target(&mut cube, 0, layout, c, scene.attenuation)?;
    }
    // static clutter is identical in every frame
    let per_frame = cfg.n_steps * layout.n_channels();
    let (first, rest) = cube.samples.split_at_mut(per_frame);
    for chunk in rest.chunks_mut(per_frame) {
        chunk.copy_from_slice(first);
    }
    let sigma2 = noise_variance(scene, layout);
    for m in 0..n_frames {
        let t = m as f64 / cfg.frame_rate;
        for s in &scene.subjects {
            let target = PointTarget::new(displaced_chest(s, t), s.reflectivity);
            add_target(&mut cube, m, layout, &target, scene.attenuation)?;
        }
        if let Some(v) = sigma2 {
            let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
            rng.set_stream(m as u64);
            let nd = Normal::new(0.0, (v / 2.0).sqrt()).expect("finite variance");
            for x in &mut cube.samples[m * per_frame..(m + 1) * per_frame] {
                *x += Complex64::new(nd.sample(&mut rng), nd.sample(&mut rng));
            }
        }
    }
    Ok(cube)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Ground-truth camera-to-radar map. Points are carried into the camera
    /// frame through its inverse.
    pub extrinsic_truth: AffineTransform,
    /// Per-axis Gaussian landmark noise, m.
    pub noise_sigma: Vec3,
    /// Horizontal and vertical field of view, degrees.
    pub fov_deg: (f64, f64),
    /// Depth limits, m.
    pub range_limits: (f64, f64),
    pub frame_rate: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            extrinsic_truth: default_extrinsic(),
            noise_sigma: Vec3::new(0.0275, 0.015, 0.0268),
            fov_deg: (75.0, 65.0),
            range_limits: (0.3, 3.86),
            frame_rate: 30.0,
        }
    }
}

/// Camera mounted 9 cm above and 3 cm beside the radar, tilted slightly.
pub fn default_extrinsic() -> AffineTransform {
    let rot: Matrix3<f64> = *Rotation3::from_euler_angles(2.0f64.to_radians(), -1.5f64.to_radians(), 0.5f64.to_radians()).matrix();
    AffineTransform::from_parts(rot, Vec3::new(0.03, 0.09, -0.01))
}

impl CameraModel {
    pub fn radar_to_camera(&self) -> Result<AffineTransform> {
        self.extrinsic_truth.inverse()
    }

    /// Whether a camera-frame point is inside the FoV and depth limits.
    pub fn observes(&self, p_c: &Vec3) -> bool {
        let z = p_c.z;
        if !(z >= self.range_limits.0 && z <= self.range_limits.1) {
            return false;
        }
        p_c.x.atan2(z).abs() <= self.fov_deg.0.to_radians() / 2.0 && p_c.y.atan2(z).abs() <= self.fov_deg.1.to_radians() / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_sigma.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidConfig("camera noise sigmas must be >= 0".into()));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::InvalidConfig("camera frame rate must be > 0".into()));
        }
        self.radar_to_camera().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraObservation {
    pub subject_id: String,
    /// Camera frame, noisy.
    pub landmarks: [Vec3; 4],
    /// Centroid of the noisy landmarks; `None` when unobserved.
    pub chest_center: Option<Vec3>,
    pub observed: bool,
}

/// What the camera reports at time `t`. Noise for camera frame
/// `round(t * frame_rate)` comes from its own random stream.
pub fn simulate_camera_frame(scene: &Scene, cam: &CameraModel, t: f64) -> Result<Vec<CameraObservation>> {
    let to_cam = cam.radar_to_camera()?;
    let frame = (t * cam.frame_rate).round().max(0.0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    rng.set_stream(CAMERA_STREAM_BASE + frame);
    let mut out = Vec::with_capacity(scene.subjects.len());
    for s in &scene.subjects {
        let lm = s.torso_landmarks.map(|p| to_cam.apply(&p) + gaussian3(&cam.noise_sigma, &mut rng));
        let observed = cam.observes(&to_cam.apply(&s.chest_center));
        let chest_center = if observed { chest_center_from_landmarks(&lm).ok() } else { None };
        out.push(CameraObservation {
            subject_id: s.id.clone(),
            landmarks: lm,
            chest_center,
            observed: observed && chest_center.is_some(),
        });
    }
    Ok(out)
}

/// Centroid of the four torso landmarks.
pub fn chest_center_from_landmarks(landmarks: &[Vec3; 4]) -> Result<Vec3> {
    let spread = landmarks
        .iter()
        .flat_map(|a| landmarks.iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    if !(spread > 1e-6) {
        return Err(Error::DegenerateGeometry("torso landmarks coincide".into()));
    }
    Ok(landmarks.iter().fold(Vec3::zeros(), |a, b| a + b) / 4.0)
}

fn default_resp_mm() -> f64 {
    4.0
}

fn default_heart_mm() -> f64 {
    0.1
}

fn unit_reflectivity() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub id: String,
    /// Chest centre in the radar frame, m.
    pub position: [f64; 3],
    pub rr_bpm: f64,
    pub hr_bpm: f64,
    #[serde(default = "default_resp_mm")]
    pub resp_amplitude_mm: f64,
    #[serde(default = "default_heart_mm")]
    pub heart_amplitude_mm: f64,
    #[serde(default = "unit_reflectivity")]
    pub reflectivity: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resp_harmonics: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmarks: Option<[[f64; 3]; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    pub position: [f64; 3],
    #[serde(default = "unit_reflectivity")]
    pub reflectivity: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    /// Camera-to-radar truth, 12 or 16 row-major values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrinsic: Option<AffineTransform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma_cm: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov_deg: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_limits_m: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<f64>,
}

impl CameraSpec {
    pub fn build(&self) -> CameraModel {
        let d = CameraModel::default();
        CameraModel {
            extrinsic_truth: self.extrinsic.unwrap_or(d.extrinsic_truth),
            noise_sigma: self
                .noise_sigma_cm
                .map(|s| Vec3::new(s[0], s[1], s[2]) / 100.0)
                .unwrap_or(d.noise_sigma),
            fov_deg: self.fov_deg.unwrap_or(d.fov_deg),
            range_limits: self.range_limits_m.unwrap_or(d.range_limits),
            frame_rate: self.frame_rate.unwrap_or(d.frame_rate),
        }
    }
}

/// JSON scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default)]
    pub subjects: Vec<SubjectSpec>,
    #[serde(default)]
    pub clutter: Vec<ClutterSpec>,
    #[serde(default)]
    pub camera: CameraSpec,
    #[serde(default)]
    pub snr_db: Option<f64>,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub attenuation: Attenuation,
}

impl SceneSpec {
    pub fn build(&self) -> Result<(Scene, CameraModel)> {
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                let c = Vec3::new(s.position[0], s.position[1], s.position[2]);
                let mut sub = Subject::new(&s.id, c, s.rr_bpm, s.hr_bpm);
                sub.resp_amplitude = s.resp_amplitude_mm * 1e-3;
                sub.heart_amplitude = s.heart_amplitude_mm * 1e-3;
                sub.reflectivity = Complex64::new(s.reflectivity[0], s.reflectivity[1]);
                sub.resp_harmonics = s.resp_harmonics.clone();
                if let Some(l) = s.landmarks {
                    sub.torso_landmarks = l.map(|p| Vec3::new(p[0], p[1], p[2]));
                }
                sub
            })
            .collect();
        let clutter = self
            .clutter
            .iter()
            .map(|c| {
                PointTarget::new(
                    Vec3::new(c.position[0], c.position[1], c.position[2]),
                    Complex64::new(c.reflectivity[0], c.reflectivity[1]),
                )
            })
            .collect();
        let scene = Scene {
            subjects,
            clutter,
            duration: self.duration_s,
            seed: self.seed,
            snr_db: self.snr_db,
            attenuation: self.attenuation,
        };
        scene.validate()?;
        let cam = self.camera.build();
        cam.validate()?;
        Ok((scene, cam))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("scene JSON: {e}")))
    }
}

/// Externally supplied landmarks keyed by `(frame, subject id)`, camera
/// frame, in landmark-id order.
pub type LandmarkTable = BTreeMap<(usize, String), [Vec3; 4]>;

/// CSV columns `frame, subject_id, landmark_id, x, y, z`; landmark ids 0..3
/// are left/right shoulder and left/right hip.
pub fn read_landmark_csv<R: Read>(r: R) -> Result<LandmarkTable> {
    #[derive(Deserialize)]
    struct Row {
        frame: usize,
        subject_id: String,
        landmark_id: usize,
        x: f64,
        y: f64,
        z: f64,
    }
    let mut partial: BTreeMap<(usize, String), [Option<Vec3>; 4]> = BTreeMap::new();
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    for row in rd.deserialize() {
        let row: Row = row?;
        if row.landmark_id > 3 {
            return Err(Error::Parse(format!("landmark_id {} not in 0..=3", row.landmark_id)));
        }
        partial.entry((row.frame, row.subject_id)).or_default()[row.landmark_id] = Some(Vec3::new(row.x, row.y, row.z));
    }
    let mut out = LandmarkTable::new();
    for (k, v) in partial {
        let mut full = [Vec3::zeros(); 4];
        for (i, p) in v.iter().enumerate() {
            full[i] = p.ok_or_else(|| Error::Parse(format!("frame {} subject '{}' lacks landmark {i}", k.0, k.1)))?;
        }
        out.insert(k, full);
    }
    Ok(out)
}

/// Convert landmark rows into camera observations for one frame.
pub fn observations_from_table(table: &LandmarkTable, frame: usize) -> Vec<CameraObservation> {
    table
        .range((frame, String::new())..)
        .take_while(|((f, _), _)| *f == frame)
        .map(|((_, id), lm)| {
            let c = chest_center_from_landmarks(lm).ok();
            CameraObservation {
                subject_id: id.clone(),
                landmarks: *lm,
                chest_center: c,
                observed: c.is_some(),
            }
        })
        .collect()
}
