//! Stepped-frequency (SFCW) signalling.
//!
//! One frame is modelled directly in the frequency domain as `N` complex
//! phasors, one per pulse frequency `f_n = f0 + n df`. A point scatterer with
//! bistatic path length `L` contributes `a exp(-j 2 pi f_n L / c)` to step
//! `n`, and the range profile is the inverse DFT over steps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dsp::{self, WindowKind};
use crate::{Complex64, Error, Result, Vec3};

/// Propagation speed used throughout, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Operational detecting range quoted for the reference hardware, m. The
/// model does not enforce it; the unambiguous range `c / (2 df)` is the hard
/// limit.
pub const OPERATIONAL_RANGE_M: f64 = 2.34;

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    /// Pulses per SFCW frame.
    pub n_steps: usize,
    /// Frequency of the first pulse, Hz.
    pub f0: f64,
    /// Frequency step, Hz.
    pub delta_f: f64,
    /// Pulse duration, s.
    pub pulse_duration: f64,
    /// Frames per second.
    pub frame_rate: f64,
    #[serde(default = "default_c")]
    pub c: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self::standard()
    }
}

impl RadarConfig {
    /// 64 steps from 62 GHz with 62.5 MHz spacing (4 GHz), 18 frames/s.
    /// Pulse duration follows from the 20 kHz IF bandwidth.
    pub fn standard() -> Self {
        Self {
            n_steps: 64,
            f0: 62.0e9,
            delta_f: 62.5e6,
            pulse_duration: 1.0 / 20.0e3,
            frame_rate: 18.0,
            c: SPEED_OF_LIGHT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_steps must be >= 2, got {}",
                self.n_steps
            )));
        }
        if !(self.delta_f > 0.0) || !self.delta_f.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "delta_f must be > 0, got {}",
                self.delta_f
            )));
        }
        if !(self.f0 > 0.0) || !self.f0.is_finite() {
            return Err(Error::InvalidConfig(format!("f0 must be > 0, got {}", self.f0)));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "frame_rate must be > 0, got {}",
                self.frame_rate
            )));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidConfig("propagation speed must be > 0".into()));
        }
        Ok(())
    }

    /// Effective bandwidth `N df`.
    pub fn bandwidth(&self) -> f64 {
        self.n_steps as f64 * self.delta_f
    }

    /// Range-bin spacing `c / (2 B)`.
    pub fn range_resolution(&self) -> f64 {
        self.c / (2.0 * self.bandwidth())
    }

    /// `c / (2 df)`.
    pub fn unambiguous_range(&self) -> f64 {
        self.c / (2.0 * self.delta_f)
    }

    pub fn frequency(&self, n: usize) -> f64 {
        self.f0 + n as f64 * self.delta_f
    }

    /// Mean of the stepped frequencies. The phase of a fixed range bin
    /// follows this frequency, not `f0`.
    pub fn center_frequency(&self) -> f64 {
        self.f0 + 0.5 * (self.n_steps as f64 - 1.0) * self.delta_f
    }

    /// `c / f0`.
    pub fn wavelength(&self) -> f64 {
        self.c / self.f0
    }

    /// `c / f_center`; converts range-bin phase to displacement.
    pub fn center_wavelength(&self) -> f64 {
        self.c / self.center_frequency()
    }

    /// `2 pi f_n / c` for every step.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_steps)
            .map(|n| 2.0 * PI * self.frequency(n) / self.c)
            .collect()
    }

    /// Range of bin `b` on the un-padded profile.
    pub fn bin_range(&self, bin: usize) -> f64 {
        bin as f64 * self.range_resolution()
    }
}

/// Static point scatterer in the radar frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    pub position: Vec3,
    pub reflectivity: Complex64,
}

impl PointTarget {
    pub fn new(position: Vec3, reflectivity: Complex64) -> Self {
        Self {
            position,
            reflectivity,
        }
    }

    pub fn unit(position: Vec3) -> Self {
        Self::new(position, Complex64::new(1.0, 0.0))
    }
}

/// Amplitude law applied to echoes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attenuation {
    /// Constant amplitude; matches the slow-time phase model.
    #[default]
    None,
    /// `1 / (d_tx d_rx)`, normalised to 1 at 1 m each way.
    InverseSquare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub bins: Vec<Complex64>,
    /// Meters per bin.
    pub bin_spacing: f64,
}

impl RangeProfile {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn range_of(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_spacing
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.norm()).collect()
    }

    pub fn power(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.norm_sqr()).collect()
    }

    pub fn peak_bin(&self) -> Option<usize> {
        self.bins
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| i)
    }
}

/// Time series of one range bin across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowTimeSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

/// Pulse frequencies `f0 + n df`, `n = 0..N`.
pub fn pulse_frequencies(cfg: &RadarConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    Ok((0..cfg.n_steps).map(|n| cfg.frequency(n)).collect())
}

/// Bistatic delay from `tx` to `p` and back to `rx`, with the two path legs.
fn path_legs(tx: &Vec3, rx: &Vec3, p: &Vec3) -> Result<(f64, f64)> {
    let d_tx = (tx - p).norm();
    let d_rx = (rx - p).norm();
    if d_tx < 1e-12 || d_rx < 1e-12 {
        return Err(Error::DegenerateGeometry(format!(
            "target at ({:.4}, {:.4}, {:.4}) coincides with an antenna",
            p.x, p.y, p.z
        )));
    }
    Ok((d_tx, d_rx))
}

/// Add `amp exp(-j 2 pi f_n tau)` to every step of `out`.
pub(crate) fn accumulate_phasors(out: &mut [Complex64], amp: Complex64, tau: f64, cfg: &RadarConfig) {
    let start = Complex64::from_polar(1.0, -2.0 * PI * cfg.f0 * tau);
    let step = Complex64::from_polar(1.0, -2.0 * PI * cfg.delta_f * tau);
    let mut ph = amp * start;
    for (n, o) in out.iter_mut().enumerate() {
        if n > 0 && n % 16 == 0 {
            // re-anchor to keep the recurrence error at the 1e-15 level
            ph = amp * Complex64::from_polar(1.0, -2.0 * PI * cfg.frequency(n) * tau);
        }
        *o += ph;
        ph *= step;
    }
}

/// Frequency response of `targets` seen on the `tx -> rx` channel.
pub fn echo_frequency_response(
    targets: &[PointTarget],
    tx_pos: &Vec3,
    rx_pos: &Vec3,
    cfg: &RadarConfig,
) -> Result<Vec<Complex64>> {
    echo_frequency_response_with(targets, tx_pos, rx_pos, cfg, Attenuation::None)
}

pub fn echo_frequency_response_with(
    targets: &[PointTarget],
    tx_pos: &Vec3,
    rx_pos: &Vec3,
    cfg: &RadarConfig,
    attenuation: Attenuation,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(Error::Empty("target list"));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); cfg.n_steps];
    for t in targets {
        let (d_tx, d_rx) = path_legs(tx_pos, rx_pos, &t.position)?;
        let amp = match attenuation {
            Attenuation::None => t.reflectivity,
            Attenuation::InverseSquare => t.reflectivity / (d_tx * d_rx),
        };
        accumulate_phasors(&mut out, amp, (d_tx + d_rx) / cfg.c, cfg);
    }
    Ok(out)
}

/// Inverse DFT of the (windowed) step samples. Bin `b` sits at range
/// `b c / (2B)`.
pub fn range_profile(
    freq_samples: &[Complex64],
    cfg: &RadarConfig,
    window: WindowKind,
) -> Result<RangeProfile> {
    range_profile_padded(freq_samples, cfg, window, 1)
}

/// Like [`range_profile`] but zero-padded to `pad_factor * N` points, which
/// interpolates the profile without changing its resolution. The `1/N`
/// scaling is kept so peak heights do not depend on the padding.
pub fn range_profile_padded(
    freq_samples: &[Complex64],
    cfg: &RadarConfig,
    window: WindowKind,
    pad_factor: usize,
) -> Result<RangeProfile> {
    if freq_samples.len() != cfg.n_steps {
        return Err(Error::LengthMismatch {
            expected: cfg.n_steps,
            got: freq_samples.len(),
        });
    }
    if pad_factor == 0 {
        return Err(Error::InvalidConfig("pad_factor must be >= 1".into()));
    }
    let n = cfg.n_steps;
    let total = n * pad_factor;
    let w = window.coefficients(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for (i, (s, wi)) in freq_samples.iter().zip(&w).enumerate() {
        buf[i] = s * *wi;
    }
    dsp::ifft(&mut buf);
    let scale = pad_factor as f64;
    for b in buf.iter_mut() {
        *b *= scale;
    }
    Ok(RangeProfile {
        bins: buf,
        bin_spacing: cfg.range_resolution() / pad_factor as f64,
    })
}

/// The complex sample at `bin` in each frame's profile.
pub fn slow_time_signal(
    profiles: &[RangeProfile],
    bin: usize,
    frame_rate: f64,
) -> Result<SlowTimeSignal> {
    if profiles.is_empty() {
        return Err(Error::Empty("frame sequence"));
    }
    let mut samples = Vec::with_capacity(profiles.len());
    for p in profiles {
        match p.bins.get(bin) {
            Some(v) => samples.push(*v),
            None => {
                return Err(Error::IndexOutOfRange {
                    index: bin,
                    len: p.bins.len(),
                })
            }
        }
    }
    Ok(SlowTimeSignal {
        samples,
        sample_rate: frame_rate,
    })
}

/// Power profile of two unit scatterers at `r1` and `r2`, averaged over
/// `phases` equally spaced relative reflectivity phases. With three or more
/// phases the cross term cancels exactly, which is the incoherent setting
/// the Rayleigh resolution criterion refers to.
pub fn phase_averaged_power_profile(
    r1: f64,
    r2: f64,
    cfg: &RadarConfig,
    window: WindowKind,
    pad_factor: usize,
    phases: usize,
) -> Result<Vec<f64>> {
    let origin = Vec3::zeros();
    let mut acc: Vec<f64> = Vec::new();
    for p in 0..phases.max(1) {
        let rel = Complex64::from_polar(1.0, 2.0 * PI * p as f64 / phases.max(1) as f64);
        let targets = [
            PointTarget::unit(Vec3::new(0.0, 0.0, r1)),
            PointTarget::new(Vec3::new(0.0, 0.0, r2), rel),
        ];
        let spec = echo_frequency_response(&targets, &origin, &origin, cfg)?;
        let prof = range_profile_padded(&spec, cfg, window, pad_factor)?;
        let pw = prof.power();
        if acc.is_empty() {
            acc = pw;
        } else {
            for (a, v) in acc.iter_mut().zip(pw) {
                *a += v;
            }
        }
    }
    let k = phases.max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    Ok(acc)
}
