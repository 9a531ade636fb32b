//! TDM-MIMO aperture: element layouts, the virtual array, steering weights
//! and beamforming over a data cube.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::waveform::RadarConfig;
use crate::{Complex64, Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    pub tx_elements: Vec<Vec3>,
    pub rx_elements: Vec<Vec3>,
    pub z_a: f64,
    /// `c / f0`.
    pub wavelength: f64,
}

impl ArrayLayout {
    pub fn n_tx(&self) -> usize {
        self.tx_elements.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx_elements.len()
    }

    pub fn n_channels(&self) -> usize {
        self.n_tx() * self.n_rx()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_elements.is_empty() || self.rx_elements.is_empty() {
            return Err(Error::InvalidConfig("layout needs at least one tx and one rx".into()));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidConfig("layout wavelength must be > 0".into()));
        }
        for e in self.tx_elements.iter().chain(&self.rx_elements) {
            if !e.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidConfig("non-finite element coordinate".into()));
            }
            if (e.z - self.z_a).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "element z = {} is off the aperture plane z = {}",
                    e.z, self.z_a
                )));
            }
        }
        Ok(())
    }

    /// The 20 x 20 L-shaped array with half-wavelength spacing, translated
    /// so the virtual-array phase centre is the radar origin.
    pub fn standard(cfg: &RadarConfig) -> Self {
        let lam = cfg.wavelength();
        l_shape_layout(20, 20, lam / 2.0, lam / 2.0, 0.0, lam)
            .expect("static layout parameters are valid")
            .centered()
    }

    /// Rigid in-plane translation putting the centroid of the virtual
    /// elements at `(0, 0)`. Both sub-arrays move by half the centroid.
    pub fn centered(&self) -> Self {
        let mean = |v: &[Vec3]| v.iter().fold(Vec3::zeros(), |a, b| a + b) / v.len() as f64;
        let c = mean(&self.tx_elements) + mean(&self.rx_elements);
        let shift = Vec3::new(-0.5 * c.x, -0.5 * c.y, 0.0);
        Self {
            tx_elements: self.tx_elements.iter().map(|e| e + shift).collect(),
            rx_elements: self.rx_elements.iter().map(|e| e + shift).collect(),
            z_a: self.z_a,
            wavelength: self.wavelength,
        }
    }

    /// Whether all Tx share one `y` and all Rx share one `x`.
    pub fn is_l_shaped(&self) -> bool {
        let same = |v: &[Vec3], f: fn(&Vec3) -> f64| v.iter().all(|e| (f(e) - f(&v[0])).abs() < 1e-12);
        same(&self.tx_elements, |e| e.y) && same(&self.rx_elements, |e| e.x)
    }

    /// Export as CSV with columns `index, x, y, z, role`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["index", "x", "y", "z", "role"])?;
        for (role, set) in [("tx", &self.tx_elements), ("rx", &self.rx_elements)] {
            for (i, e) in set.iter().enumerate() {
                wr.write_record([
                    i.to_string(),
                    format!("{:.12e}", e.x),
                    format!("{:.12e}", e.y),
                    format!("{:.12e}", e.z),
                    role.to_string(),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Read a layout written by [`ArrayLayout::write_csv`]. Rows are placed by
    /// their index within each role.
    pub fn read_csv<R: Read>(r: R, wavelength: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            index: usize,
            x: f64,
            y: f64,
            z: f64,
            role: String,
        }
        let mut tx: Vec<(usize, Vec3)> = Vec::new();
        let mut rx: Vec<(usize, Vec3)> = Vec::new();
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        for row in rd.deserialize() {
            let row: Row = row?;
            let p = Vec3::new(row.x, row.y, row.z);
            match row.role.as_str() {
                "tx" => tx.push((row.index, p)),
                "rx" => rx.push((row.index, p)),
                other => return Err(Error::Parse(format!("unknown element role '{other}'"))),
            }
        }
        tx.sort_by_key(|e| e.0);
        rx.sort_by_key(|e| e.0);
        let z_a = tx.first().map(|e| e.1.z).unwrap_or(0.0);
        let layout = Self {
            tx_elements: tx.into_iter().map(|e| e.1).collect(),
            rx_elements: rx.into_iter().map(|e| e.1).collect(),
            z_a,
            wavelength,
        };
        layout.validate()?;
        Ok(layout)
    }
}

/// Tx elements on the x axis, Rx on the y axis, both starting at the corner
/// `(0, 0, z_a)`.
pub fn l_shape_layout(
    n_tx: usize,
    n_rx: usize,
    tx_spacing: f64,
    rx_spacing: f64,
    z_a: f64,
    wavelength: f64,
) -> Result<ArrayLayout> {
    if n_tx == 0 || n_rx == 0 {
        return Err(Error::Precondition("element counts must be >= 1".into()));
    }
    if !(tx_spacing > 0.0 && rx_spacing > 0.0) {
        return Err(Error::Precondition("element spacings must be > 0".into()));
    }
    let layout = ArrayLayout {
        tx_elements: (0..n_tx)
            .map(|i| Vec3::new(i as f64 * tx_spacing, 0.0, z_a))
            .collect(),
        rx_elements: (0..n_rx)
            .map(|i| Vec3::new(0.0, i as f64 * rx_spacing, z_a))
            .collect(),
        z_a,
        wavelength,
    };
    layout.validate()?;
    Ok(layout)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualArray {
    /// `(x, y)` sums, Tx index major.
    pub elements: Vec<[f64; 2]>,
    pub n_tx: usize,
    pub n_rx: usize,
}

impl VirtualArray {
    pub fn element(&self, n_tx: usize, n_rx: usize) -> [f64; 2] {
        self.elements[n_tx * self.n_rx + n_rx]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

pub fn virtual_array(layout: &ArrayLayout) -> VirtualArray {
    let mut elements = Vec::with_capacity(layout.n_channels());
    for t in &layout.tx_elements {
        for r in &layout.rx_elements {
            elements.push([t.x + r.x, t.y + r.y]);
        }
    }
    VirtualArray {
        elements,
        n_tx: layout.n_tx(),
        n_rx: layout.n_rx(),
    }
}

/// How the steering phase is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `exp(j 2 pi (sin(theta) D_x + e(phi) D_y) / lambda)` from the virtual
    /// element coordinates.
    #[default]
    Position,
    /// `exp(j 2 pi ((n_T - 1) sin(theta) + (n_R - 1) e(phi)))` with 1-based
    /// element indices. Equals `Position` only for a virtual
    /// sum spacing of one wavelength.
    Index,
}

/// Which reference axis the elevation angle is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElevationConvention {
    /// Direction cosine is `cos(phi)`, broadside at `phi = pi/2`.
    #[default]
    FromVertical,
    /// Direction cosine is `sin(phi)`, broadside at `phi = 0`.
    FromBoresight,
}

impl ElevationConvention {
    pub fn direction_cosine(self, phi: f64) -> f64 {
        match self {
            ElevationConvention::FromVertical => phi.cos(),
            ElevationConvention::FromBoresight => phi.sin(),
        }
    }

    /// Convert an elevation measured up from boresight into this convention.
    pub fn from_boresight_angle(self, phi_boresight: f64) -> f64 {
        match self {
            ElevationConvention::FromVertical => PI / 2.0 - phi_boresight,
            ElevationConvention::FromBoresight => phi_boresight,
        }
    }

    /// Steer angle that points at broadside.
    pub fn broadside(self) -> f64 {
        self.from_boresight_angle(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SteeringOptions {
    #[serde(default)]
    pub mode: WeightMode,
    #[serde(default)]
    pub elevation: ElevationConvention,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringWeights {
    /// `n_tx x n_rx`, Tx major.
    pub weights: Vec<Complex64>,
    pub n_tx: usize,
    pub n_rx: usize,
    pub steer_azimuth: f64,
    pub steer_elevation: f64,
}

impl SteeringWeights {
    pub fn get(&self, n_tx: usize, n_rx: usize) -> Complex64 {
        self.weights[n_tx * self.n_rx + n_rx]
    }

    /// Uniform weights; beamforming with them is the plain channel sum.
    pub fn uniform(n_tx: usize, n_rx: usize) -> Self {
        Self {
            weights: vec![Complex64::new(1.0, 0.0); n_tx * n_rx],
            n_tx,
            n_rx,
            steer_azimuth: 0.0,
            steer_elevation: f64::NAN,
        }
    }
}

/// Plane-wave weights with the default options.
pub fn steering_weights(layout: &ArrayLayout, theta: f64, phi: f64) -> SteeringWeights {
    steering_weights_with(layout, theta, phi, &SteeringOptions::default())
}

pub fn steering_weights_with(
    layout: &ArrayLayout,
    theta: f64,
    phi: f64,
    opts: &SteeringOptions,
) -> SteeringWeights {
    let u = theta.sin();
    let v = opts.elevation.direction_cosine(phi);
    let weights = match opts.mode {
        WeightMode::Position => {
            let k = 2.0 * PI / layout.wavelength;
            virtual_array(layout)
                .elements
                .iter()
                .map(|d| Complex64::from_polar(1.0, k * (u * d[0] + v * d[1])))
                .collect()
        }
        WeightMode::Index => {
            let mut w = Vec::with_capacity(layout.n_channels());
            for t in 0..layout.n_tx() {
                for r in 0..layout.n_rx() {
                    w.push(Complex64::from_polar(1.0, 2.0 * PI * (t as f64 * u + r as f64 * v)));
                }
            }
            w
        }
    };
    SteeringWeights {
        weights,
        n_tx: layout.n_tx(),
        n_rx: layout.n_rx(),
        steer_azimuth: theta,
        steer_elevation: phi,
    }
}

/// Near-field weights `exp(-j k (d_tx + d_rx))` focused on `point`, with
/// `k = 2 pi / wavelength`. Angles recorded are the point's azimuth and
/// boresight elevation.
pub fn focused_weights(layout: &ArrayLayout, point: &Vec3) -> Result<SteeringWeights> {
    let k = 2.0 * PI / layout.wavelength;
    let mut w = Vec::with_capacity(layout.n_channels());
    for t in &layout.tx_elements {
        let dt = (t - point).norm();
        for r in &layout.rx_elements {
            let dr = (r - point).norm();
            if dt < 1e-12 || dr < 1e-12 {
                return Err(Error::DegenerateGeometry("focus point on an element".into()));
            }
            w.push(Complex64::from_polar(1.0, -k * (dt + dr)));
        }
    }
    Ok(SteeringWeights {
        weights: w,
        n_tx: layout.n_tx(),
        n_rx: layout.n_rx(),
        steer_azimuth: point.x.atan2(point.z),
        steer_elevation: point.y.atan2(point.z),
    })
}

/// Complex samples `[frame][step][tx][rx]`, flattened in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    pub samples: Vec<Complex64>,
    pub n_frames: usize,
    pub n_steps: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub frame_rate: f64,
    pub cfg: RadarConfig,
}

impl DataCube {
    pub fn zeros(n_frames: usize, cfg: &RadarConfig, n_tx: usize, n_rx: usize) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); n_frames * cfg.n_steps * n_tx * n_rx],
            n_frames,
            n_steps: cfg.n_steps,
            n_tx,
            n_rx,
            frame_rate: cfg.frame_rate,
            cfg: *cfg,
        }
    }

    pub fn index(&self, frame: usize, step: usize, tx: usize, rx: usize) -> usize {
        ((frame * self.n_steps + step) * self.n_tx + tx) * self.n_rx + rx
    }

    pub fn get(&self, frame: usize, step: usize, tx: usize, rx: usize) -> Complex64 {
        self.samples[self.index(frame, step, tx, rx)]
    }

    /// All channels of one (frame, step), Tx major.
    pub fn channels(&self, frame: usize, step: usize) -> &[Complex64] {
        let n = self.n_tx * self.n_rx;
        let start = (frame * self.n_steps + step) * n;
        &self.samples[start..start + n]
    }

    /// The `n_steps` samples of one channel in one frame.
    pub fn spectrum(&self, frame: usize, tx: usize, rx: usize) -> Vec<Complex64> {
        (0..self.n_steps).map(|s| self.get(frame, s, tx, rx)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let expect = self.n_frames * self.n_steps * self.n_tx * self.n_rx;
        if self.samples.len() != expect {
            return Err(Error::LengthMismatch {
                expected: expect,
                got: self.samples.len(),
            });
        }
        if self.n_steps != self.cfg.n_steps {
            return Err(Error::LengthMismatch {
                expected: self.cfg.n_steps,
                got: self.n_steps,
            });
        }
        Ok(())
    }
}

/// `sum s(n_T, n_R) conj(w(n_T, n_R))` for every frame and step. Returns
/// one spectrum of length `n_steps` per frame.
pub fn beamform(cube: &DataCube, weights: &SteeringWeights) -> Result<Vec<Vec<Complex64>>> {
    cube.validate()?;
    if weights.n_tx != cube.n_tx || weights.n_rx != cube.n_rx {
        return Err(Error::LengthMismatch {
            expected: cube.n_tx * cube.n_rx,
            got: weights.n_tx * weights.n_rx,
        });
    }
    let conj: Vec<Complex64> = weights.weights.iter().map(|w| w.conj()).collect();
    Ok((0..cube.n_frames)
        .map(|f| {
            (0..cube.n_steps)
                .map(|s| {
                    cube.channels(f, s)
                        .iter()
                        .zip(&conj)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect()
        })
        .collect())
}

/// One channel's spectra over all frames.
pub fn select_channel(cube: &DataCube, tx: usize, rx: usize) -> Result<Vec<Vec<Complex64>>> {
    cube.validate()?;
    if tx >= cube.n_tx {
        return Err(Error::IndexOutOfRange { index: tx, len: cube.n_tx });
    }
    if rx >= cube.n_rx {
        return Err(Error::IndexOutOfRange { index: rx, len: cube.n_rx });
    }
    Ok((0..cube.n_frames).map(|f| cube.spectrum(f, tx, rx)).collect())
}

/// Unweighted complex sum of all channels (no steering).
pub fn sum_channels(cube: &DataCube) -> Result<Vec<Vec<Complex64>>> {
    beamform(cube, &SteeringWeights::uniform(cube.n_tx, cube.n_rx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl AngleGrid {
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n < 2 {
            return vec![lo; n];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainMap {
    /// `gains[i_phi * thetas.len() + i_theta]`.
    pub gains: Vec<f64>,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl GainMap {
    pub fn get(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.gains[i_phi * self.thetas.len() + i_theta]
    }
}

/// `|w_steer^H a(theta, phi)|^2 / (N_T N_R)^2` over the grid, where
/// `a` is the plane-wave response in the same conventions as the weights.
pub fn beampattern(layout: &ArrayLayout, steer: (f64, f64), grid: &AngleGrid, opts: &SteeringOptions) -> GainMap {
    let w = steering_weights_with(layout, steer.0, steer.1, opts);
    let n2 = (layout.n_channels() as f64).powi(2);
    let mut gains = Vec::with_capacity(grid.thetas.len() * grid.phis.len());
    for &phi in &grid.phis {
        for &theta in &grid.thetas {
            let a = steering_weights_with(layout, theta, phi, opts);
            let af: Complex64 = a.weights.iter().zip(&w.weights).map(|(x, y)| x * y.conj()).sum();
            gains.push(af.norm_sqr() / n2);
        }
    }
    GainMap {
        gains,
        thetas: grid.thetas.clone(),
        phis: grid.phis.clone(),
    }
}

/// Azimuth cut through the pattern at the steering elevation.
pub fn azimuth_cut(layout: &ArrayLayout, steer: (f64, f64), thetas: &[f64], opts: &SteeringOptions) -> Vec<f64> {
    beampattern(
        layout,
        steer,
        &AngleGrid {
            thetas: thetas.to_vec(),
            phis: vec![steer.1],
        },
        opts,
    )
    .gains
}

fn main_lobe_peak(gains: &[f64]) -> Option<usize> {
    gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

fn crossing(angles: &[f64], gains: &[f64], peak: usize, level: f64, dir: isize) -> Option<f64> {
    let mut i = peak as isize;
    loop {
        let j = i + dir;
        if j < 0 || j as usize >= gains.len() {
            return None;
        }
        let (gi, gj) = (gains[i as usize], gains[j as usize]);
        if gj <= level {
            let t = if (gi - gj).abs() > 0.0 { (gi - level) / (gi - gj) } else { 0.0 };
            let (ai, aj) = (angles[i as usize], angles[j as usize]);
            return Some(ai + t * (aj - ai));
        }
        i = j;
    }
}

/// Full width of the main lobe at half power (`-3.01 dB`), with linear
/// interpolation between samples. `None` when the lobe never drops to half
/// power inside the cut.
pub fn measure_beamwidth(angles: &[f64], gains: &[f64]) -> Option<f64> {
    measure_width_at(angles, gains, 0.5)
}

/// Full main-lobe width where the gain first falls to `rel_level` of the
/// peak.
pub fn measure_width_at(angles: &[f64], gains: &[f64], rel_level: f64) -> Option<f64> {
    if angles.len() != gains.len() || angles.len() < 3 {
        return None;
    }
    let p = main_lobe_peak(gains)?;
    let level = gains[p] * rel_level;
    let lo = crossing(angles, gains, p, level, -1)?;
    let hi = crossing(angles, gains, p, level, 1)?;
    Some(hi - lo)
}

/// Mean distance from the main-lobe peak to the first minimum on each side.
/// For a uniform line this is the Rayleigh resolution.
pub fn measure_null_offset(angles: &[f64], gains: &[f64]) -> Option<f64> {
    if angles.len() != gains.len() || angles.len() < 3 {
        return None;
    }
    let p = main_lobe_peak(gains)?;
    let mut lo = None;
    for i in (1..p).rev() {
        if gains[i] <= gains[i - 1] && gains[i] <= gains[i + 1] {
            lo = Some(i);
            break;
        }
    }
    let mut hi = None;
    for i in p + 1..gains.len() - 1 {
        if gains[i] <= gains[i - 1] && gains[i] <= gains[i + 1] {
            hi = Some(i);
            break;
        }
    }
    let refine = |i: usize| {
        let off = crate::dsp::parabolic_offset(-gains[i - 1], -gains[i], -gains[i + 1]);
        angles[i] + off * (angles[i + 1] - angles[i])
    };
    Some(0.5 * ((refine(hi?) - angles[p]) + (angles[p] - refine(lo?))))
}

/// `lambda / (N d cos(theta))`, radians.
pub fn predicted_resolution(wavelength: f64, n: usize, spacing: f64, theta: f64) -> f64 {
    wavelength / (n as f64 * spacing * theta.cos())
}
