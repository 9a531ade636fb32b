//! Browser bindings for three interactive views: an azimuth beam cut, a
//! two-target range profile and a simulated vital-sign spectrum.

use std::f64::consts::PI;

use wasm_bindgen::prelude::*;

use vgradar::array::{azimuth_cut, l_shape_layout, measure_beamwidth, measure_null_offset, predicted_resolution, ArrayLayout, ElevationConvention, SteeringOptions};
use vgradar::dsp::{local_maxima, WindowKind};
use vgradar::scene::{simulate_datacube, Scene, Subject};
use vgradar::vitals::{run_vsd_at_points, Combining, VsdOptions};
use vgradar::waveform::{echo_frequency_response, range_profile_padded, Attenuation, PointTarget, RadarConfig};
use vgradar::{Complex64, Error, Result, Vec3};

fn db(v: f64, max: f64) -> f64 {
    10.0 * (v / max).max(1e-12).log10()
}

fn to_db(p: &[f64]) -> Vec<f64> {
    let m = p.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    p.iter().map(|v| db(*v, m)).collect()
}

#[wasm_bindgen]
pub struct BeamCut {
    angles_deg: Vec<f64>,
    gain_db: Vec<f64>,
    /// NaN when the pattern has no half-power point.
    pub width_deg: f64,
    pub null_deg: f64,
    pub predicted_deg: f64,
}

#[wasm_bindgen]
impl BeamCut {
    #[wasm_bindgen(getter)]
    pub fn angles_deg(&self) -> Vec<f64> {
        self.angles_deg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn gain_db(&self) -> Vec<f64> {
        self.gain_db.clone()
    }
}

pub fn compute_beam_cut(n_tx: usize, n_rx: usize, spacing_wl: f64, steer_az_deg: f64) -> Result<BeamCut> {
    let cfg = RadarConfig::standard();
    let lam = cfg.wavelength();
    let layout = l_shape_layout(n_tx, n_rx, spacing_wl * lam, spacing_wl * lam, 0.0, lam)?.centered();
    let thetas: Vec<f64> = (0..=1800).map(|i| (-90.0 + 0.1 * i as f64).to_radians()).collect();
    let el = ElevationConvention::FromVertical.broadside();
    let g = azimuth_cut(&layout, (steer_az_deg.to_radians(), el), &thetas, &SteeringOptions::default());
    let deg = |v: Option<f64>| v.map(f64::to_degrees).unwrap_or(f64::NAN);
    Ok(BeamCut {
        angles_deg: thetas.iter().map(|t| t.to_degrees()).collect(),
        gain_db: to_db(&g),
        width_deg: deg(measure_beamwidth(&thetas, &g)),
        null_deg: deg(measure_null_offset(&thetas, &g)),
        predicted_deg: if n_tx > 1 {
            predicted_resolution(lam, n_tx, spacing_wl * lam, steer_az_deg.to_radians()).to_degrees()
        } else {
            f64::NAN
        },
    })
}

#[wasm_bindgen]
pub struct RangeCut {
    ranges_m: Vec<f64>,
    coherent_db: Vec<f64>,
    averaged_db: Vec<f64>,
    pub coherent_peaks: usize,
    pub averaged_peaks: usize,
}

#[wasm_bindgen]
impl RangeCut {
    #[wasm_bindgen(getter)]
    pub fn ranges_m(&self) -> Vec<f64> {
        self.ranges_m.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn coherent_db(&self) -> Vec<f64> {
        self.coherent_db.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn averaged_db(&self) -> Vec<f64> {
        self.averaged_db.clone()
    }
}

const RANGE_PAD: usize = 16;

fn pair_power(r1: f64, r2: f64, rel: Complex64, window: WindowKind, cfg: &RadarConfig) -> Result<(Vec<f64>, f64)> {
    let o = Vec3::zeros();
    let t = [PointTarget::unit(Vec3::new(0.0, 0.0, r1)), PointTarget::new(Vec3::new(0.0, 0.0, r2), rel)];
    let s = echo_frequency_response(&t, &o, &o, cfg)?;
    let p = range_profile_padded(&s, cfg, window, RANGE_PAD)?;
    Ok((p.power(), p.bin_spacing))
}

/// Two monostatic point targets; `phase_deg` is the second target's
/// reflectivity phase. The averaged curve is the power mean over four
/// relative phases.
pub fn compute_range_cut(r1: f64, r2: f64, phase_deg: f64, hann: bool) -> Result<RangeCut> {
    let cfg = RadarConfig::standard();
    let w = if hann { WindowKind::Hann } else { WindowKind::Rect };
    let (coh, dr) = pair_power(r1, r2, Complex64::from_polar(1.0, phase_deg.to_radians()), w, &cfg)?;
    let mut avg = vec![0.0; coh.len()];
    for k in 0..4 {
        let (p, _) = pair_power(r1, r2, Complex64::from_polar(1.0, PI * k as f64 / 2.0), w, &cfg)?;
        for (a, v) in avg.iter_mut().zip(p) {
            *a += v / 4.0;
        }
    }
    Ok(RangeCut {
        ranges_m: (0..coh.len()).map(|i| i as f64 * dr).collect(),
        coherent_peaks: local_maxima(&coh, 0.5).len(),
        averaged_peaks: local_maxima(&avg, 0.5).len(),
        coherent_db: to_db(&coh),
        averaged_db: to_db(&avg),
    })
}

#[wasm_bindgen]
pub struct VitalsView {
    freqs_hz: Vec<f64>,
    psi_db: Vec<f64>,
    dpsi_db: Vec<f64>,
    pub rr_bpm: f64,
    pub hr_bpm: f64,
    pub range_bin: usize,
}

#[wasm_bindgen]
impl VitalsView {
    #[wasm_bindgen(getter)]
    pub fn freqs_hz(&self) -> Vec<f64> {
        self.freqs_hz.clone()
    }

    /// Spectrum of the unwrapped phase.
    #[wasm_bindgen(getter)]
    pub fn psi_db(&self) -> Vec<f64> {
        self.psi_db.clone()
    }

    /// Spectrum of the phase differential.
    #[wasm_bindgen(getter)]
    pub fn dpsi_db(&self) -> Vec<f64> {
        self.dpsi_db.clone()
    }
}

fn combining(name: &str) -> Result<Combining> {
    match name {
        "coherent" => Ok(Combining::Coherent),
        "non_coherent" => Ok(Combining::NonCoherent),
        "single_channel" => Ok(Combining::SingleChannel),
        _ => Err(Error::InvalidConfig(format!("unknown combining '{name}'"))),
    }
}

/// One subject in front of the standard array with a static reflector at the
/// same range on the opposite side, 15 s at the default frame rate.
#[allow(clippy::too_many_arguments)]
pub fn compute_vitals(rr_bpm: f64, hr_bpm: f64, range_m: f64, az_deg: f64, clutter_gain: f64, snr_db: f64, mode: &str, seed: u64) -> Result<VitalsView> {
    let cfg = RadarConfig::standard();
    let layout = ArrayLayout::standard(&cfg);
    let dir = |az: f64| Vec3::new(az.to_radians().tan(), 0.0, 1.0).normalize() * range_m;
    let s = Subject::new("s", dir(az_deg), rr_bpm, hr_bpm);
    let mut clutter = Vec::new();
    if clutter_gain > 0.0 {
        clutter.push(PointTarget::new(dir(-az_deg - 25.0), Complex64::new(clutter_gain, 0.0)));
    }
    let scene = Scene {
        subjects: vec![s.clone()],
        clutter,
        duration: 15.0,
        seed,
        snr_db: Some(snr_db),
        attenuation: Attenuation::None,
    };
    let cube = simulate_datacube(&scene, &cfg, &layout)?;
    let opts = VsdOptions {
        combining: combining(mode)?,
        ..VsdOptions::default()
    };
    let out = run_vsd_at_points(&cube, &[("s".into(), s.chest_center)], &layout, &cfg, &opts)?;
    let v = out.into_iter().next().ok_or(Error::Empty("vital-sign outcome"))?.result?;
    let bin = (v.steer.radar_point.norm() / v.bin_spacing).round() as usize;
    Ok(VitalsView {
        freqs_hz: v.spectrum_rr.freqs.clone(),
        psi_db: v.spectrum_rr.power_db(),
        dpsi_db: v.spectrum_hr.power_db(),
        rr_bpm: v.estimate.rr_bpm,
        hr_bpm: v.estimate.hr_bpm,
        range_bin: bin,
    })
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn beam_cut(n_tx: usize, n_rx: usize, spacing_wl: f64, steer_az_deg: f64) -> std::result::Result<BeamCut, JsError> {
    compute_beam_cut(n_tx, n_rx, spacing_wl, steer_az_deg).map_err(js)
}

#[wasm_bindgen]
pub fn range_cut(r1: f64, r2: f64, phase_deg: f64, hann: bool) -> std::result::Result<RangeCut, JsError> {
    compute_range_cut(r1, r2, phase_deg, hann).map_err(js)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn vitals(rr_bpm: f64, hr_bpm: f64, range_m: f64, az_deg: f64, clutter_gain: f64, snr_db: f64, mode: &str, seed: u32) -> std::result::Result<VitalsView, JsError> {
    compute_vitals(rr_bpm, hr_bpm, range_m, az_deg, clutter_gain, snr_db, mode, seed.into()).map_err(js)
}
