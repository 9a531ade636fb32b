//! Vision-guided vital-sign extraction: steer the beam at a camera-supplied
//! chest point, pick its range bin, unwrap the slow-time phase and read the
//! respiration and heartbeat lines off its spectrum.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::array::{beamform, focused_weights, select_channel, steering_weights_with, sum_channels, ArrayLayout, DataCube, SteeringOptions};
use crate::calibration::AffineTransform;
use crate::dsp::{self, WindowKind};
use crate::scene::CameraObservation;
use crate::waveform::{range_profile, slow_time_signal, RadarConfig, RangeProfile, SlowTimeSignal};
use crate::{Complex64, Error, Result, Vec3};

pub const RR_BAND_HZ: (f64, f64) = (0.1, 0.7);
pub const HR_BAND_HZ: (f64, f64) = (0.7, 3.0);

/// Shortest signal `estimate_rates` accepts, s.
pub const MIN_DURATION_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteerTarget {
    pub radar_point: Vec3,
    pub theta0: f64,
    pub phi0: f64,
    pub r0: f64,
    pub range_bin: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSignal {
    pub psi: Vec<f64>,
    pub sample_rate: f64,
}

impl PhaseSignal {
    /// Radial displacement `-lambda (psi - psi_0) / (4 pi)`; range growth
    /// lowers the phase.
    pub fn displacement(&self, wavelength: f64) -> Vec<f64> {
        let p0 = self.psi.first().copied().unwrap_or(0.0);
        self.psi.iter().map(|p| -wavelength * (p - p0) / (4.0 * PI)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalsEstimate {
    pub rr_bpm: f64,
    pub hr_bpm: f64,
    pub rr_peak_snr: f64,
    pub hr_peak_snr: f64,
    pub window_s: f64,
    pub rr_low_confidence: bool,
    pub hr_low_confidence: bool,
}

impl VitalsEstimate {
    pub fn low_confidence(&self) -> bool {
        self.rr_low_confidence || self.hr_low_confidence
    }
}

/// `theta0 = atan(x / R0)`, `phi0 = atan(y / R0)`, `R0 = |p|`.
pub fn perspective_angles(p: &Vec3) -> Result<(f64, f64, f64)> {
    let r0 = p.norm();
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Precondition("steer point must be a finite nonzero vector".into()));
    }
    Ok(((p.x / r0).atan(), (p.y / r0).atan(), r0))
}

/// Bin with the largest mean magnitude within `search_bins` of
/// `round(r0 / spacing)`.
pub fn select_range_bin(profiles: &[RangeProfile], r0: f64, search_bins: usize) -> Result<usize> {
    let first = profiles.first().ok_or(Error::Empty("range profiles"))?;
    let n = first.len();
    let span = n as f64 * first.bin_spacing;
    if !(r0 >= 0.0 && r0 < span) {
        return Err(Error::OutOfRange(format!(
            "radial distance {r0:.3} m is outside the profile span [0, {span:.3}) m"
        )));
    }
    let centre = ((r0 / first.bin_spacing).round() as usize).min(n - 1);
    let lo = centre.saturating_sub(search_bins);
    let hi = (centre + search_bins).min(n - 1);
    let mean_mag = |b: usize| profiles.iter().map(|p| p.bins[b].norm()).sum::<f64>();
    Ok((lo..=hi)
        .max_by(|a, b| mean_mag(*a).total_cmp(&mean_mag(*b)).then(b.cmp(a)))
        .expect("nonempty range"))
}

/// Argument of each sample, unwrapped.
pub fn extract_phase(s: &SlowTimeSignal) -> Result<PhaseSignal> {
    if s.samples.is_empty() {
        return Err(Error::Empty("slow-time signal"));
    }
    if let Some(index) = s.samples.iter().position(|v| v.norm() == 0.0) {
        return Err(Error::UndefinedPhase { index });
    }
    let raw: Vec<f64> = s.samples.iter().map(|v| v.arg()).collect();
    Ok(PhaseSignal {
        psi: dsp::unwrap(&raw),
        sample_rate: s.sample_rate,
    })
}

/// First difference times the sample rate, rad/s.
pub fn phase_differential(psi: &PhaseSignal) -> Result<Vec<f64>> {
    if psi.psi.len() < 2 {
        return Err(Error::Precondition("phase differential needs at least 2 samples".into()));
    }
    Ok(psi.psi.windows(2).map(|w| (w[1] - w[0]) * psi.sample_rate).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    #[serde(default = "default_window")]
    pub window: WindowKind,
    /// Minimum zero-padding factor; the FFT length is the next power of two.
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    #[serde(default = "default_highpass")]
    pub highpass_hz: f64,
    /// Peak-over-median threshold below which a peak is low confidence, dB.
    #[serde(default = "default_low_conf")]
    pub low_confidence_db: f64,
}

fn default_window() -> WindowKind {
    WindowKind::Hann
}
fn default_pad() -> usize {
    4
}
fn default_highpass() -> f64 {
    0.05
}
fn default_low_conf() -> f64 {
    10.0
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            window: default_window(),
            pad_factor: default_pad(),
            highpass_hz: default_highpass(),
            low_confidence_db: default_low_conf(),
        }
    }
}

/// One-sided power spectrum after mean removal, a first-order high-pass,
/// the taper and zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl PowerSpectrum {
    pub fn power_db(&self) -> Vec<f64> {
        let max = self.power.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        self.power.iter().map(|p| 10.0 * (p.max(1e-300) / max).log10()).collect()
    }
}

pub fn highpass(sig: &[f64], fs: f64, cutoff: f64) -> Vec<f64> {
    if sig.is_empty() || !(cutoff > 0.0) {
        return sig.to_vec();
    }
    let rc = 1.0 / (2.0 * PI * cutoff);
    let a = rc / (rc + 1.0 / fs);
    let mut out = Vec::with_capacity(sig.len());
    let mut y = sig[0];
    out.push(y);
    for w in sig.windows(2) {
        y = a * (y + w[1] - w[0]);
        out.push(y);
    }
    out
}

pub fn power_spectrum(sig: &[f64], fs: f64, opts: &RateOptions) -> Result<PowerSpectrum> {
    if sig.len() < 2 {
        return Err(Error::Precondition("spectrum needs at least 2 samples".into()));
    }
    let m = dsp::mean(sig);
    let centred: Vec<f64> = sig.iter().map(|v| v - m).collect();
    let filtered = highpass(&centred, fs, opts.highpass_hz);
    let w = opts.window.coefficients(filtered.len());
    let nfft = (filtered.len() * opts.pad_factor.max(1)).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (i, (v, wi)) in filtered.iter().zip(&w).enumerate() {
        buf[i] = Complex64::new(v * wi, 0.0);
    }
    dsp::fft(&mut buf);
    let half = nfft / 2 + 1;
    Ok(PowerSpectrum {
        freqs: (0..half).map(|i| i as f64 * fs / nfft as f64).collect(),
        power: buf[..half].iter().map(|v| v.norm_sqr()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPeak {
    pub freq_hz: f64,
    pub snr_db: f64,
    pub low_confidence: bool,
}

/// Strongest local maximum inside `band`, refined by a parabola through the
/// log powers. Falls back to the largest in-band bin (flagged low
/// confidence) when the band holds no local maximum.
pub fn band_peak(spec: &PowerSpectrum, band: (f64, f64), low_conf_db: f64) -> Result<BandPeak> {
    let idx: Vec<usize> = (0..spec.freqs.len())
        .filter(|&i| spec.freqs[i] >= band.0 && spec.freqs[i] <= band.1)
        .collect();
    if idx.is_empty() {
        return Err(Error::Precondition(format!(
            "band [{}, {}] Hz holds no spectral bins",
            band.0, band.1
        )));
    }
    let p = &spec.power;
    let is_max = |i: usize| i > 0 && i + 1 < p.len() && p[i] > p[i - 1] && p[i] >= p[i + 1];
    let best_local = idx.iter().copied().filter(|&i| is_max(i)).max_by(|a, b| p[*a].total_cmp(&p[*b]));
    let (i, local) = match best_local {
        Some(i) => (i, true),
        None => (
            idx.iter().copied().max_by(|a, b| p[*a].total_cmp(&p[*b])).expect("nonempty"),
            false,
        ),
    };
    let df = spec.freqs[1] - spec.freqs[0];
    let mut f = spec.freqs[i];
    if local {
        let l = |v: f64| v.max(1e-300).ln();
        f += dsp::parabolic_offset(l(p[i - 1]), l(p[i]), l(p[i + 1])) * df;
    }
    let in_band: Vec<f64> = idx.iter().map(|&j| p[j]).collect();
    let med = dsp::median(&in_band);
    let snr_db = if med > 0.0 { 10.0 * (p[i] / med).log10() } else { f64::INFINITY };
    let snr_db = if p[i] > 0.0 { snr_db } else { 0.0 };
    Ok(BandPeak {
        freq_hz: f,
        snr_db,
        low_confidence: !local || !(snr_db >= low_conf_db),
    })
}

fn check_rate_inputs(n: usize, fs: f64, rr_band: (f64, f64), hr_band: (f64, f64)) -> Result<()> {
    if !(fs > 0.0) {
        return Err(Error::Precondition("sample rate must be > 0".into()));
    }
    let dur = n as f64 / fs;
    if dur < MIN_DURATION_S - 1.0 / fs - 1e-9 {
        return Err(Error::Precondition(format!(
            "rate estimation needs >= {MIN_DURATION_S} s of signal, got {dur:.2} s"
        )));
    }
    if !(rr_band.0 < rr_band.1 && hr_band.0 < hr_band.1) {
        return Err(Error::Precondition("bands must have low < high".into()));
    }
    if rr_band.1 > hr_band.0 && hr_band.1 > rr_band.0 {
        return Err(Error::Precondition("respiration and heart bands overlap".into()));
    }
    Ok(())
}

/// Both rates from one signal.
pub fn estimate_rates(sig: &[f64], fs: f64, rr_band: (f64, f64), hr_band: (f64, f64), opts: &RateOptions) -> Result<VitalsEstimate> {
    check_rate_inputs(sig.len(), fs, rr_band, hr_band)?;
    let spec = power_spectrum(sig, fs, opts)?;
    let rr = band_peak(&spec, rr_band, opts.low_confidence_db)?;
    let hr = band_peak(&spec, hr_band, opts.low_confidence_db)?;
    Ok(assemble(rr, hr, sig.len() as f64 / fs))
}

fn assemble(rr: BandPeak, hr: BandPeak, window_s: f64) -> VitalsEstimate {
    VitalsEstimate {
        rr_bpm: rr.freq_hz * 60.0,
        hr_bpm: hr.freq_hz * 60.0,
        rr_peak_snr: rr.snr_db,
        hr_peak_snr: hr.snr_db,
        window_s,
        rr_low_confidence: rr.low_confidence,
        hr_low_confidence: hr.low_confidence,
    }
}

/// RR from the unwrapped phase, HR from its differential.
pub fn estimate_vitals(psi: &PhaseSignal, rr_band: (f64, f64), hr_band: (f64, f64), opts: &RateOptions) -> Result<(VitalsEstimate, PowerSpectrum, PowerSpectrum)> {
    let fs = psi.sample_rate;
    check_rate_inputs(psi.psi.len(), fs, rr_band, hr_band)?;
    let d = phase_differential(psi)?;
    let s_rr = power_spectrum(&psi.psi, fs, opts)?;
    let s_hr = power_spectrum(&d, fs, opts)?;
    let rr = band_peak(&s_rr, rr_band, opts.low_confidence_db)?;
    let hr = band_peak(&s_hr, hr_band, opts.low_confidence_db)?;
    Ok((assemble(rr, hr, psi.psi.len() as f64 / fs), s_rr, s_hr))
}

/// How channels are combined before range processing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combining {
    /// Steered toward the chest point.
    #[default]
    Coherent,
    /// Plain sum of all channels.
    NonCoherent,
    /// Channel (tx 0, rx 0) only.
    SingleChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamModel {
    /// Plane-wave weights from the perspective angles.
    #[default]
    PlaneWave,
    /// Spherical-wavefront weights focused on the chest point.
    Focused,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VsdOptions {
    pub rr_band: (f64, f64),
    pub hr_band: (f64, f64),
    /// Analysis window, s.
    pub window_s: f64,
    /// Step between sliding windows, s.
    pub stride_s: f64,
    pub search_bins: usize,
    #[serde(default)]
    pub steering: SteeringOptions,
    #[serde(default)]
    pub beam: BeamModel,
    #[serde(default)]
    pub combining: Combining,
    #[serde(default)]
    pub rates: RateOptions,
}

impl Default for VsdOptions {
    fn default() -> Self {
        Self {
            rr_band: RR_BAND_HZ,
            hr_band: HR_BAND_HZ,
            window_s: 15.0,
            stride_s: 1.0,
            search_bins: 1,
            steering: SteeringOptions::default(),
            beam: BeamModel::PlaneWave,
            combining: Combining::Coherent,
            rates: RateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlidingEstimate {
    /// Window centre, s.
    pub t_s: f64,
    pub rr_bpm: f64,
    pub hr_bpm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectVitals {
    pub subject_id: String,
    pub steer: SteerTarget,
    pub estimate: VitalsEstimate,
    pub psi: PhaseSignal,
    pub dpsi: Vec<f64>,
    /// `|profile|` per frame and bin.
    pub range_time: Vec<Vec<f64>>,
    pub bin_spacing: f64,
    pub spectrum_rr: PowerSpectrum,
    pub spectrum_hr: PowerSpectrum,
    pub sliding: Vec<SlidingEstimate>,
}

#[derive(Debug)]
pub struct SubjectOutcome {
    pub subject_id: String,
    pub result: Result<SubjectVitals>,
}

/// Per-subject chest point in the camera frame, averaged over the frames in
/// which the subject was observed.
pub fn mean_chest_points(frames: &[Vec<CameraObservation>]) -> Vec<(String, Option<Vec3>)> {
    let mut ids: Vec<String> = Vec::new();
    for f in frames {
        for o in f {
            if !ids.contains(&o.subject_id) {
                ids.push(o.subject_id.clone());
            }
        }
    }
    ids.into_iter()
        .map(|id| {
            let pts: Vec<Vec3> = frames
                .iter()
                .flatten()
                .filter(|o| o.subject_id == id && o.observed)
                .filter_map(|o| o.chest_center)
                .collect();
            let mean = if pts.is_empty() {
                None
            } else {
                Some(pts.iter().fold(Vec3::zeros(), |a, b| a + b) / pts.len() as f64)
            };
            (id, mean)
        })
        .collect()
}

/// Full pipeline from camera observations: chest point, camera-to-radar
/// map, then [`run_vsd_at_points`].
pub fn run_vsd(
    cube: &DataCube,
    camera_frames: &[Vec<CameraObservation>],
    transform: &AffineTransform,
    layout: &ArrayLayout,
    cfg: &RadarConfig,
    opts: &VsdOptions,
) -> Result<Vec<SubjectOutcome>> {
    let pts = mean_chest_points(camera_frames);
    if !pts.iter().any(|(_, p)| p.is_some()) {
        return Err(Error::Precondition("no subject was observed by the camera".into()));
    }
    let mut targets = Vec::new();
    let mut missing = Vec::new();
    for (id, p) in pts {
        match p {
            Some(p_c) => targets.push((id, transform.apply(&p_c))),
            None => missing.push(id),
        }
    }
    let mut out = run_vsd_at_points(cube, &targets, layout, cfg, opts)?;
    for id in missing {
        out.push(SubjectOutcome {
            result: Err(Error::Precondition(format!("subject '{id}' was never observed by the camera"))),
            subject_id: id,
        });
    }
    Ok(out)
}

/// Pipeline from radar-frame steer points. A failing subject does not stop
/// the others.
pub fn run_vsd_at_points(
    cube: &DataCube,
    targets: &[(String, Vec3)],
    layout: &ArrayLayout,
    cfg: &RadarConfig,
    opts: &VsdOptions,
) -> Result<Vec<SubjectOutcome>> {
    cube.validate()?;
    if cube.n_tx != layout.n_tx() || cube.n_rx != layout.n_rx() {
        return Err(Error::LengthMismatch {
            expected: layout.n_channels(),
            got: cube.n_tx * cube.n_rx,
        });
    }
    Ok(targets
        .iter()
        .map(|(id, p)| SubjectOutcome {
            subject_id: id.clone(),
            result: subject_pipeline(cube, id, p, layout, cfg, opts),
        })
        .collect())
}

fn subject_pipeline(cube: &DataCube, id: &str, p: &Vec3, layout: &ArrayLayout, cfg: &RadarConfig, opts: &VsdOptions) -> Result<SubjectVitals> {
    let (theta0, phi0, r0) = perspective_angles(p)?;
    let spectra = match opts.combining {
        Combining::Coherent => {
            let w = match opts.beam {
                BeamModel::PlaneWave => steering_weights_with(layout, theta0, opts.steering.elevation.from_boresight_angle(phi0), &opts.steering),
                BeamModel::Focused => focused_weights(layout, p)?,
            };
            beamform(cube, &w)?
        }
        Combining::NonCoherent => sum_channels(cube)?,
        Combining::SingleChannel => select_channel(cube, 0, 0)?,
    };
    let profiles: Vec<RangeProfile> = spectra
        .iter()
        .map(|s| range_profile(s, cfg, WindowKind::Rect))
        .collect::<Result<_>>()?;
    let bin = select_range_bin(&profiles, r0, opts.search_bins)?;
    let slow = slow_time_signal(&profiles, bin, cube.frame_rate)?;
    let psi_all = extract_phase(&slow)?;
    let fs = psi_all.sample_rate;
    let win = ((opts.window_s * fs).round() as usize).min(psi_all.psi.len());
    let head = PhaseSignal {
        psi: psi_all.psi[..win].to_vec(),
        sample_rate: fs,
    };
    let (estimate, spectrum_rr, spectrum_hr) = estimate_vitals(&head, opts.rr_band, opts.hr_band, &opts.rates)?;
    let mut sliding = Vec::new();
    let stride = ((opts.stride_s * fs).round() as usize).max(1);
    let mut start = 0;
    while start + win <= psi_all.psi.len() {
        let seg = PhaseSignal {
            psi: psi_all.psi[start..start + win].to_vec(),
            sample_rate: fs,
        };
        if let Ok((e, _, _)) = estimate_vitals(&seg, opts.rr_band, opts.hr_band, &opts.rates) {
            sliding.push(SlidingEstimate {
                t_s: (start as f64 + win as f64 / 2.0) / fs,
                rr_bpm: e.rr_bpm,
                hr_bpm: e.hr_bpm,
            });
        }
        start += stride;
    }
    let dpsi = phase_differential(&psi_all)?;
    Ok(SubjectVitals {
        subject_id: id.to_string(),
        steer: SteerTarget {
            radar_point: *p,
            theta0,
            phi0,
            r0,
            range_bin: bin,
        },
        estimate,
        range_time: profiles.iter().map(|p| p.magnitudes()).collect(),
        bin_spacing: profiles[0].bin_spacing,
        psi: psi_all,
        dpsi,
        spectrum_rr,
        spectrum_hr,
        sliding,
    })
}

/// In-band power of `spec` within `half_width_hz` of `f`.
pub fn line_power(spec: &PowerSpectrum, f: f64, half_width_hz: f64) -> f64 {
    spec.freqs
        .iter()
        .zip(&spec.power)
        .filter(|(q, _)| (*q - f).abs() <= half_width_hz)
        .map(|(_, p)| *p)
        .fold(0.0, f64::max)
}
