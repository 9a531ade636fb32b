//! Near-field 3-D imaging from multistatic aperture data: a Stolt-style
//! wavenumber-domain reconstruction and a brute-force backprojection used
//! to check it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayLayout, DataCube};
use crate::waveform::{PointTarget, RadarConfig};
use crate::{dsp, Complex64, Error, Result, Vec3};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Sample coordinates of the Tx and Rx apertures. Each axis is uniform; a
/// single-entry axis means the elements share that coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApertureGrid {
    pub tx_x: Vec<f64>,
    pub tx_y: Vec<f64>,
    pub rx_x: Vec<f64>,
    pub rx_y: Vec<f64>,
    pub z_a: f64,
}

impl ApertureGrid {
    /// Grid for an L-shaped layout: Tx varying in x, Rx varying in y.
    pub fn from_layout(layout: &ArrayLayout) -> Result<Self> {
        if !layout.is_l_shaped() {
            return Err(Error::InvalidConfig(
                "imaging needs Tx elements on a line of constant y and Rx on a line of constant x".into(),
            ));
        }
        let g = Self {
            tx_x: layout.tx_elements.iter().map(|e| e.x).collect(),
            tx_y: vec![layout.tx_elements[0].y],
            rx_x: vec![layout.rx_elements[0].x],
            rx_y: layout.rx_elements.iter().map(|e| e.y).collect(),
            z_a: layout.z_a,
        };
        g.validate()?;
        Ok(g)
    }

    fn axes(&self) -> [&Vec<f64>; 4] {
        [&self.tx_x, &self.tx_y, &self.rx_x, &self.rx_y]
    }

    pub fn dims(&self) -> [usize; 4] {
        self.axes().map(|a| a.len())
    }

    pub fn n_channels(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        for a in self.axes() {
            check_uniform(a, "aperture")?;
        }
        Ok(())
    }

    /// Tx and Rx positions of channel `(ixt, iyt, ixr, iyr)`.
    pub fn positions(&self, i: [usize; 4]) -> (Vec3, Vec3) {
        (
            Vec3::new(self.tx_x[i[0]], self.tx_y[i[1]], self.z_a),
            Vec3::new(self.rx_x[i[2]], self.rx_y[i[3]], self.z_a),
        )
    }
}

/// Complex channel samples `[tx_x][tx_y][rx_x][rx_y][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteredField {
    pub samples: Vec<Complex64>,
    pub grid: ApertureGrid,
    /// rad/m, strictly increasing.
    pub k_values: Vec<f64>,
}

impl ScatteredField {
    pub fn zeros(grid: ApertureGrid, k_values: Vec<f64>) -> Self {
        Self {
            samples: vec![ZERO; grid.n_channels() * k_values.len()],
            grid,
            k_values,
        }
    }

    pub fn index(&self, i: [usize; 4], ik: usize) -> usize {
        let d = self.grid.dims();
        (((i[0] * d[1] + i[1]) * d[2] + i[2]) * d[3] + i[3]) * self.k_values.len() + ik
    }

    /// Channel multi-indices in storage order.
    pub fn channel_indices(&self) -> Vec<[usize; 4]> {
        let d = self.grid.dims();
        let mut out = Vec::with_capacity(self.grid.n_channels());
        for a in 0..d[0] {
            for b in 0..d[1] {
                for c in 0..d[2] {
                    for e in 0..d[3] {
                        out.push([a, b, c, e]);
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.k_values.is_empty() {
            return Err(Error::Empty("wavenumber list"));
        }
        if self.k_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("wavenumbers must be strictly increasing".into()));
        }
        let expect = self.grid.n_channels() * self.k_values.len();
        if self.samples.len() != expect {
            return Err(Error::LengthMismatch {
                expected: expect,
                got: self.samples.len(),
            });
        }
        Ok(())
    }

    /// One frame of an L-shaped-layout data cube.
    pub fn from_cube_frame(cube: &DataCube, frame: usize, layout: &ArrayLayout) -> Result<Self> {
        cube.validate()?;
        if frame >= cube.n_frames {
            return Err(Error::IndexOutOfRange {
                index: frame,
                len: cube.n_frames,
            });
        }
        let grid = ApertureGrid::from_layout(layout)?;
        let mut f = Self::zeros(grid, cube.cfg.wavenumbers());
        for t in 0..cube.n_tx {
            for r in 0..cube.n_rx {
                for s in 0..cube.n_steps {
                    let i = f.index([t, 0, 0, r], s);
                    f.samples[i] = cube.get(frame, s, t, r);
                }
            }
        }
        Ok(f)
    }
}

fn check_uniform(a: &[f64], what: &str) -> Result<()> {
    if a.is_empty() {
        return Err(Error::InvalidConfig(format!("{what} axis is empty")));
    }
    if a.len() < 2 {
        return Ok(());
    }
    let d = a[1] - a[0];
    if !(d > 0.0) {
        return Err(Error::InvalidConfig(format!("{what} axis must be strictly increasing")));
    }
    for w in a.windows(2) {
        if ((w[1] - w[0]) - d).abs() > 1e-6 * d.abs().max(1e-12) {
            return Err(Error::InvalidConfig(format!("{what} axis must be uniformly spaced")));
        }
    }
    Ok(())
}

/// Field of point scatterers: `sum a exp(-j k (d_tx + d_rx))` per channel.
pub fn forward_scatter(objects: &[PointTarget], grid: &ApertureGrid, k_values: &[f64]) -> Result<ScatteredField> {
    let mut f = ScatteredField::zeros(grid.clone(), k_values.to_vec());
    f.validate()?;
    let idx = f.channel_indices();
    for o in objects {
        if (o.position.z - grid.z_a).abs() < 1e-9 {
            return Err(Error::DegenerateGeometry(format!(
                "scatterer at z = {} lies on the aperture plane",
                o.position.z
            )));
        }
        for i in &idx {
            let (t, r) = grid.positions(*i);
            let l = (t - o.position).norm() + (r - o.position).norm();
            let base = f.index(*i, 0);
            for (ik, k) in k_values.iter().enumerate() {
                f.samples[base + ik] += o.reflectivity * Complex64::from_polar(1.0, -k * l);
            }
        }
    }
    Ok(f)
}

/// Complex voxels stored `[x][y][z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVolume {
    pub voxels: Vec<Complex64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl ImageVolume {
    pub fn zeros(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Self {
        Self {
            voxels: vec![ZERO; x.len() * y.len() * z.len()],
            x,
            y,
            z,
        }
    }

    pub fn ravel(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.y.len() + iy) * self.z.len() + iz
    }

    pub fn unravel(&self, i: usize) -> (usize, usize, usize) {
        let nz = self.z.len();
        let ny = self.y.len();
        (i / (ny * nz), (i / nz) % ny, i % nz)
    }

    pub fn position(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        Vec3::new(self.x[ix], self.y[iy], self.z[iz])
    }

    pub fn validate(&self) -> Result<()> {
        check_uniform(&self.x, "x")?;
        check_uniform(&self.y, "y")?;
        check_uniform(&self.z, "z")?;
        if self.voxels.len() != self.x.len() * self.y.len() * self.z.len() {
            return Err(Error::LengthMismatch {
                expected: self.x.len() * self.y.len() * self.z.len(),
                got: self.voxels.len(),
            });
        }
        Ok(())
    }

    pub fn peak_index(&self) -> Option<(usize, usize, usize)> {
        self.voxels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .filter(|(_, v)| v.norm_sqr() > 0.0)
            .map(|(i, _)| self.unravel(i))
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.voxels.iter().map(|v| v.norm()).collect()
    }

    /// The sub-volume `[x0, x0 + nx) x ...`.
    pub fn window(&self, start: (usize, usize, usize), size: (usize, usize, usize)) -> Self {
        let x = self.x[start.0..start.0 + size.0].to_vec();
        let y = self.y[start.1..start.1 + size.1].to_vec();
        let z = self.z[start.2..start.2 + size.2].to_vec();
        let mut out = Self::zeros(x, y, z);
        for a in 0..size.0 {
            for b in 0..size.1 {
                for c in 0..size.2 {
                    let i = out.ravel(a, b, c);
                    out.voxels[i] = self.voxels[self.ravel(start.0 + a, start.1 + b, start.2 + c)];
                }
            }
        }
        out
    }
}

/// `n` points from `start` in steps of `step`.
pub fn axis(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + step * i as f64).collect()
}

/// Resampling rule for the Stolt step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoltOptions {
    #[serde(default)]
    pub interpolation: Interpolation,
    /// Extra direction-sine kept beyond the image's angular extent.
    #[serde(default = "default_fov_margin")]
    pub fov_margin: f64,
}

fn default_fov_margin() -> f64 {
    0.15
}

impl Default for StoltOptions {
    fn default() -> Self {
        Self {
            interpolation: Interpolation::Linear,
            fov_margin: default_fov_margin(),
        }
    }
}

/// Limit on the zero-padded spectrum, complex values.
const MAX_SPECTRUM: usize = 1 << 26;

struct DimPlan {
    m: usize,
    p: usize,
    start: f64,
    /// Wavenumber per padded bin; a singleton dimension has the single
    /// value 0.
    kx: Vec<f64>,
    signed: Vec<i64>,
    keep: Vec<usize>,
}

fn plan_dims(grid: &ApertureGrid, axes: (&[f64], &[f64]), k_max: f64, margin: f64, z_min: f64) -> Result<[DimPlan; 4]> {
    let extent = |a: &[f64]| a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let x_ext = extent(axes.0);
    let y_ext = extent(axes.1);
    let mut plans = Vec::with_capacity(4);
    for (d, a) in grid.axes().iter().enumerate() {
        let m = a.len();
        if m == 1 {
            plans.push(DimPlan {
                m,
                p: 1,
                start: a[0],
                kx: vec![0.0],
                signed: vec![0],
                keep: vec![0],
            });
            continue;
        }
        let delta = a[1] - a[0];
        let img_ext = if d == 0 || d == 2 { x_ext } else { y_ext };
        let ap_ext = extent(a);
        let need = (2.0 * (img_ext + ap_ext) / delta).ceil() as usize;
        let p = need.max(m).next_power_of_two();
        let s_lat = img_ext + ap_ext;
        let sin_max = (s_lat / (s_lat * s_lat + z_min * z_min).sqrt() + margin).min(1.0);
        // the kept band must fit inside one spectral period
        if k_max * sin_max > PI / delta * (1.0 + 1e-9) {
            log::warn!(
                "aperture dimension {d} spacing {:.4e} m is too coarse for a {:.0} deg image half-angle; the image will alias",
                delta,
                sin_max.asin().to_degrees()
            );
        }
        let signed: Vec<i64> = (0..p).map(|i| dsp::signed_bin(i, p)).collect();
        let kx: Vec<f64> = signed.iter().map(|s| 2.0 * PI * *s as f64 / (p as f64 * delta)).collect();
        let keep = (0..p).filter(|&i| kx[i].abs() <= k_max * sin_max).collect();
        plans.push(DimPlan {
            m,
            p,
            start: a[0],
            kx,
            signed,
            keep,
        });
    }
    let arr: [DimPlan; 4] = plans.try_into().map_err(|_| Error::InvalidConfig("dims".into()))?;
    for (a, b) in [(0usize, 2usize), (1, 3)] {
        if arr[a].p > 1 && arr[b].p > 1 {
            let da = grid.axes()[a][1] - grid.axes()[a][0];
            let db = grid.axes()[b][1] - grid.axes()[b][0];
            if (da - db).abs() > 1e-9 * da {
                return Err(Error::InvalidConfig(
                    "Tx and Rx sampling along the same axis must share one spacing".into(),
                ));
            }
        }
    }
    Ok(arr)
}

/// In-place FFT along one axis of a row-major tensor.
fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, planner: &mut FftPlanner<f64>) {
    let n = shape[axis];
    if n <= 1 {
        return;
    }
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fft = planner.plan_fft_forward(n);
    let mut line = vec![ZERO; n];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            for (j, l) in line.iter_mut().enumerate() {
                *l = data[base + j * inner];
            }
            fft.process(&mut line);
            for (j, l) in line.iter().enumerate() {
                data[base + j * inner] = *l;
            }
        }
    }
}

/// Wavenumber-domain reconstruction onto the given axes.
///
/// The aperture dimensions are zero-padded and Fourier transformed per `k`.
/// Each spectral column is referenced to the scene-centre depth, mapped
/// through `k_z = sqrt(k^2 - k_xt^2 - k_yt^2) + sqrt(k^2 - k_xr^2 - k_yr^2)`
/// onto a uniform `k_z` grid, and summed back onto the voxel grid. When an
/// aperture dimension is a single sample (the L-shaped case) the depth at
/// which each voxel is evaluated accounts for the unscanned offset of that
/// sub-array.
pub fn reconstruct(field: &ScatteredField, x: &[f64], y: &[f64], z: &[f64], opts: &StoltOptions) -> Result<ImageVolume> {
    field.validate()?;
    let mut vol = ImageVolume::zeros(x.to_vec(), y.to_vec(), z.to_vec());
    vol.validate()?;
    let ks = &field.k_values;
    let nk = ks.len();
    let k_max = ks[nk - 1];
    let z_a = field.grid.z_a;
    let z_min = z.iter().map(|v| (v - z_a).abs()).fold(f64::INFINITY, f64::min).max(1e-3);
    let plans = plan_dims(&field.grid, (x, y), k_max, opts.fov_margin, z_min)?;
    let shape = [plans[0].p, plans[1].p, plans[2].p, plans[3].p, nk];
    let total: usize = shape.iter().product();
    if total > MAX_SPECTRUM {
        return Err(Error::InvalidConfig(format!(
            "zero-padded aperture spectrum would hold {total} values; reduce the grid or image extent"
        )));
    }
    if field.samples.iter().all(|v| *v == ZERO) {
        return Ok(vol);
    }

    // zero-padded copy, then FFT over each aperture dimension
    let mut spec = vec![ZERO; total];
    let sidx = |i: [usize; 4], ik: usize| ((((i[0] * shape[1] + i[1]) * shape[2] + i[2]) * shape[3] + i[3]) * nk) + ik;
    for ch in field.channel_indices() {
        let src = field.index(ch, 0);
        let dst = sidx(ch, 0);
        spec[dst..dst + nk].copy_from_slice(&field.samples[src..src + nk]);
    }
    let mut planner = FftPlanner::new();
    for a in 0..4 {
        fft_axis(&mut spec, &shape, a, &mut planner);
    }

    let dk = if nk > 1 { (ks[nk - 1] - ks[0]) / (nk - 1) as f64 } else { 1.0 };
    let dkz = 2.0 * dk;
    let z_c = 0.5 * (z[0] + z[z.len() - 1]);

    // columns keyed by the summed signed bins along x and y
    let mut cols_x: BTreeMap<i64, f64> = BTreeMap::new();
    let mut cols_y: BTreeMap<i64, f64> = BTreeMap::new();
    struct Group {
        ix: i64,
        iy: i64,
        kz: Vec<f64>,
        s: Vec<Complex64>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut kz_lo = f64::INFINITY;
    for &a in &plans[0].keep {
        for &b in &plans[1].keep {
            for &c in &plans[2].keep {
                for &e in &plans[3].keep {
                    let (kxt, kyt, kxr, kyr) = (plans[0].kx[a], plans[1].kx[b], plans[2].kx[c], plans[3].kx[e]);
                    let shift = Complex64::from_polar(
                        1.0,
                        -(kxt * plans[0].start + kyt * plans[1].start + kxr * plans[2].start + kyr * plans[3].start),
                    );
                    let base = sidx([a, b, c, e], 0);
                    let mut kzv = Vec::with_capacity(nk);
                    let mut sv = Vec::with_capacity(nk);
                    for (ik, k) in ks.iter().enumerate() {
                        let rt = k * k - kxt * kxt - kyt * kyt;
                        let rr = k * k - kxr * kxr - kyr * kyr;
                        if rt < 0.0 || rr < 0.0 {
                            continue;
                        }
                        let kz = rt.sqrt() + rr.sqrt();
                        kzv.push(kz);
                        sv.push(spec[base + ik] * shift * Complex64::from_polar(1.0, kz * (z_c - z_a)));
                    }
                    if kzv.is_empty() {
                        continue;
                    }
                    kz_lo = kz_lo.min(kzv[0]);
                    let ix = plans[0].signed[a] + plans[2].signed[c];
                    let iy = plans[1].signed[b] + plans[3].signed[e];
                    cols_x.insert(ix, kxt + kxr);
                    cols_y.insert(iy, kyt + kyr);
                    groups.push(Group { ix, iy, kz: kzv, s: sv });
                }
            }
        }
    }
    if groups.is_empty() {
        return Ok(vol);
    }
    let kz_hi = 2.0 * k_max;
    let n_kz = ((kz_hi - kz_lo) / dkz).floor() as usize + 1;
    let xi: BTreeMap<i64, usize> = cols_x.keys().enumerate().map(|(i, k)| (*k, i)).collect();
    let yi: BTreeMap<i64, usize> = cols_y.keys().enumerate().map(|(i, k)| (*k, i)).collect();
    let (ncx, ncy) = (xi.len(), yi.len());
    // uniform-kz spectrum per column, [iy][ix][kz]
    let mut grid = vec![ZERO; ncy * ncx * n_kz];
    for g in &groups {
        let col = (yi[&g.iy] * ncx + xi[&g.ix]) * n_kz;
        let out = &mut grid[col..col + n_kz];
        stolt_resample(&g.kz, &g.s, kz_lo, dkz, out, opts.interpolation);
    }

    // lateral sums: x first, then y
    let px: Vec<f64> = cols_x.values().cloned().collect();
    let py: Vec<f64> = cols_y.values().cloned().collect();
    let ex: Vec<Complex64> = x.iter().flat_map(|xv| px.iter().map(move |p| Complex64::from_polar(1.0, p * xv))).collect();
    let ey: Vec<Complex64> = y.iter().flat_map(|yv| py.iter().map(move |p| Complex64::from_polar(1.0, p * yv))).collect();
    let (nx, ny) = (x.len(), y.len());
    // t[iy_c][x][kz]
    let mut t = vec![ZERO; ncy * nx * n_kz];
    // nonzero kz support of each column
    let support: Vec<(usize, usize)> = grid
        .chunks(n_kz)
        .map(|c| match c.iter().position(|v| *v != ZERO) {
            Some(lo) => (lo, n_kz - c.iter().rev().position(|v| *v != ZERO).unwrap_or(0)),
            None => (0, 0),
        })
        .collect();
    for cy in 0..ncy {
        for (ixv, erow) in ex.chunks(ncx).enumerate() {
            let dst = &mut t[(cy * nx + ixv) * n_kz..(cy * nx + ixv + 1) * n_kz];
            for (cx, e) in erow.iter().enumerate() {
                let c = cy * ncx + cx;
                let (lo, hi) = support[c];
                if lo >= hi {
                    continue;
                }
                let src = &grid[c * n_kz + lo..c * n_kz + hi];
                for (o, s) in dst[lo..hi].iter_mut().zip(src) {
                    *o += s * e;
                }
            }
        }
    }
    drop(grid);
    // a[x][y][kz]
    let mut a = vec![ZERO; nx * ny * n_kz];
    for ixv in 0..nx {
        for (iyv, erow) in ey.chunks(ncy).enumerate() {
            let dst = &mut a[(ixv * ny + iyv) * n_kz..(ixv * ny + iyv + 1) * n_kz];
            for (cy, e) in erow.iter().enumerate() {
                let src = &t[(cy * nx + ixv) * n_kz..(cy * nx + ixv + 1) * n_kz];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += s * e;
                }
            }
        }
    }
    drop(t);

    // depth sum at the offset-corrected depth of each voxel
    let tx_fixed: Vec<(usize, f64)> = [(0usize, 0usize), (1, 1)]
        .iter()
        .filter(|(dmn, _)| plans[*dmn].p == 1)
        .map(|(dmn, ax)| (*ax, plans[*dmn].start))
        .collect();
    let rx_fixed: Vec<(usize, f64)> = [(2usize, 0usize), (3, 1)]
        .iter()
        .filter(|(dmn, _)| plans[*dmn].p == 1)
        .map(|(dmn, ax)| (*ax, plans[*dmn].start))
        .collect();
    let scale = plans.iter().map(|p| p.m as f64 / p.p as f64).product::<f64>();
    for ixv in 0..nx {
        for iyv in 0..ny {
            let col = &a[(ixv * ny + iyv) * n_kz..(ixv * ny + iyv + 1) * n_kz];
            let lat = [x[ixv], y[iyv]];
            for (izv, zv) in z.iter().enumerate() {
                let zz = zv - z_a;
                let rho = |fixed: &[(usize, f64)]| (fixed.iter().map(|(ax, s)| (lat[*ax] - s).powi(2)).sum::<f64>() + zz * zz).sqrt();
                let z_w = z_a + 0.5 * (rho(&tx_fixed) + rho(&rx_fixed)) * zz.signum();
                let u = z_w - z_c;
                let mut ph = Complex64::from_polar(1.0, kz_lo * u);
                let step = Complex64::from_polar(1.0, dkz * u);
                let mut acc = ZERO;
                for (j, v) in col.iter().enumerate() {
                    if j > 0 && j % 32 == 0 {
                        ph = Complex64::from_polar(1.0, (kz_lo + j as f64 * dkz) * u);
                    }
                    acc += v * ph;
                    ph *= step;
                }
                let i = vol.ravel(ixv, iyv, izv);
                vol.voxels[i] = acc * scale;
            }
        }
    }
    Ok(vol)
}

/// Resample `(kz, s)` pairs (kz increasing) onto `kz_lo + j dkz`, adding
/// into `out`. Grid points outside the sampled span stay untouched.
fn stolt_resample(kz: &[f64], s: &[Complex64], kz_lo: f64, dkz: f64, out: &mut [Complex64], interp: Interpolation) {
    let n = out.len();
    if kz.len() == 1 {
        let j = ((kz[0] - kz_lo) / dkz).round();
        if j >= 0.0 && (j as usize) < n {
            out[j as usize] += s[0];
        }
        return;
    }
    let j0 = ((kz[0] - kz_lo) / dkz).ceil().max(0.0) as usize;
    let mut seg = 0;
    for (j, o) in out.iter_mut().enumerate().skip(j0) {
        let q = kz_lo + j as f64 * dkz;
        if q > kz[kz.len() - 1] {
            break;
        }
        while seg + 2 < kz.len() && kz[seg + 1] < q {
            seg += 1;
        }
        let (a, b) = (kz[seg], kz[seg + 1]);
        let t = ((q - a) / (b - a)).clamp(0.0, 1.0);
        *o += match interp {
            Interpolation::Linear => s[seg] * (1.0 - t) + s[seg + 1] * t,
            Interpolation::Nearest => {
                if t < 0.5 {
                    s[seg]
                } else {
                    s[seg + 1]
                }
            }
        };
    }
}

/// Backprojection `sum gamma exp(+j k (d_tx + d_rx))` at every voxel.
pub fn matched_filter_reconstruct(field: &ScatteredField, x: &[f64], y: &[f64], z: &[f64]) -> Result<ImageVolume> {
    field.validate()?;
    let mut vol = ImageVolume::zeros(x.to_vec(), y.to_vec(), z.to_vec());
    vol.validate()?;
    let ks = &field.k_values;
    let nk = ks.len();
    let uniform = nk < 3 || {
        let d = ks[1] - ks[0];
        ks.windows(2).all(|w| ((w[1] - w[0]) - d).abs() < 1e-9 * d)
    };
    let dk = if nk > 1 { ks[1] - ks[0] } else { 0.0 };
    let chans: Vec<((Vec3, Vec3), usize)> = field
        .channel_indices()
        .into_iter()
        .map(|i| (field.grid.positions(i), field.index(i, 0)))
        .collect();
    for ix in 0..x.len() {
        for iy in 0..y.len() {
            for iz in 0..z.len() {
                let v = Vec3::new(x[ix], y[iy], z[iz]);
                let mut acc = ZERO;
                for ((t, r), base) in &chans {
                    let l = (t - v).norm() + (r - v).norm();
                    let g = &field.samples[*base..*base + nk];
                    if uniform {
                        let mut ph = Complex64::from_polar(1.0, ks[0] * l);
                        let step = Complex64::from_polar(1.0, dk * l);
                        for s in g {
                            acc += s * ph;
                            ph *= step;
                        }
                    } else {
                        for (s, k) in g.iter().zip(ks) {
                            acc += s * Complex64::from_polar(1.0, k * l);
                        }
                    }
                }
                let i = vol.ravel(ix, iy, iz);
                vol.voxels[i] = acc;
            }
        }
    }
    Ok(vol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: (usize, usize, usize),
    /// Parabolically refined position, m.
    pub position: Vec3,
    pub magnitude: f64,
}

/// Local maxima of `values` (one per voxel, volume layout) over the
/// 26-neighbourhood that reach `rel_threshold` of the global maximum,
/// strongest first.
pub fn local_maxima_3d(vol: &ImageVolume, values: &[f64], rel_threshold: f64) -> Vec<Peak> {
    let (nx, ny, nz) = (vol.x.len(), vol.y.len(), vol.z.len());
    let max = values.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for ix in 0..nx {
        for iy in 0..ny {
            for iz in 0..nz {
                let v = values[vol.ravel(ix, iy, iz)];
                if v < rel_threshold * max {
                    continue;
                }
                let mut is_max = true;
                'n: for dx in -1i64..=1 {
                    for dy in -1i64..=1 {
                        for dz in -1i64..=1 {
                            if dx == 0 && dy == 0 && dz == 0 {
                                continue;
                            }
                            let (a, b, c) = (ix as i64 + dx, iy as i64 + dy, iz as i64 + dz);
                            if a < 0 || b < 0 || c < 0 || a >= nx as i64 || b >= ny as i64 || c >= nz as i64 {
                                continue;
                            }
                            let w = values[vol.ravel(a as usize, b as usize, c as usize)];
                            // ties broken toward the lower flat index
                            let later = (a, b, c) > (ix as i64, iy as i64, iz as i64);
                            if w > v || (w == v && !later) {
                                is_max = false;
                                break 'n;
                            }
                        }
                    }
                }
                if is_max {
                    peaks.push(Peak {
                        index: (ix, iy, iz),
                        position: refine(vol, values, (ix, iy, iz)),
                        magnitude: v,
                    });
                }
            }
        }
    }
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    peaks
}

fn refine(vol: &ImageVolume, values: &[f64], i: (usize, usize, usize)) -> Vec3 {
    let idx = [i.0, i.1, i.2];
    let axes = [&vol.x, &vol.y, &vol.z];
    let c = values[vol.ravel(i.0, i.1, i.2)];
    let mut out = vol.position(i.0, i.1, i.2);
    for d in 0..3 {
        let ax = axes[d];
        if idx[d] == 0 || idx[d] + 1 >= ax.len() {
            continue;
        }
        let mut lo = idx;
        let mut hi = idx;
        lo[d] -= 1;
        hi[d] += 1;
        let l = values[vol.ravel(lo[0], lo[1], lo[2])];
        let r = values[vol.ravel(hi[0], hi[1], hi[2])];
        out[d] += dsp::parabolic_offset(l, c, r) * (ax[1] - ax[0]);
    }
    out
}

/// Magnitude peaks of a volume; see [`local_maxima_3d`].
pub fn find_peaks(vol: &ImageVolume, rel_threshold: f64) -> Vec<Peak> {
    local_maxima_3d(vol, &vol.magnitudes(), rel_threshold)
}

/// `sum |a||b| / sqrt(sum |a|^2 sum |b|^2)` over voxels.
pub fn normalized_cross_correlation(a: &ImageVolume, b: &ImageVolume) -> Result<f64> {
    if a.voxels.len() != b.voxels.len() {
        return Err(Error::LengthMismatch {
            expected: a.voxels.len(),
            got: b.voxels.len(),
        });
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.voxels.iter().zip(&b.voxels) {
        ab += x.norm() * y.norm();
        aa += x.norm_sqr();
        bb += y.norm_sqr();
    }
    if aa == 0.0 || bb == 0.0 {
        return Ok(if aa == bb { 1.0 } else { 0.0 });
    }
    Ok(ab / (aa * bb).sqrt())
}

/// 64-point axes used for checks around the standard geometry: 5 mm lateral
/// voxels over +-16 cm and 15 mm depth voxels from 30.5 cm.
pub fn standard_axes() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (l, d) = (STANDARD_LATERAL, STANDARD_DEPTH);
    (axis(l.0, l.1, l.2), axis(l.0, l.1, l.2), axis(d.0, d.1, d.2))
}

/// `(start, step, n)` of the standard lateral and depth axes.
pub const STANDARD_LATERAL: (f64, f64, usize) = (-0.16, 0.005, 64);
pub const STANDARD_DEPTH: (f64, f64, usize) = (0.305, 0.015, 64);

/// Field of the standard layout for a set of scatterers.
pub fn field_for_layout(objects: &[PointTarget], layout: &ArrayLayout, cfg: &RadarConfig) -> Result<ScatteredField> {
    forward_scatter(objects, &ApertureGrid::from_layout(layout)?, &cfg.wavenumbers())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{simulate_datacube, Scene};
    use crate::waveform::Attenuation;

    fn cfg() -> RadarConfig {
        RadarConfig::standard()
    }

    fn layout() -> ArrayLayout {
        ArrayLayout::standard(&cfg())
    }

    #[test]
    fn monostatic_single_element_closed_form() {
        let g = ApertureGrid {
            tx_x: vec![0.0],
            tx_y: vec![0.0],
            rx_x: vec![0.0],
            rx_y: vec![0.0],
            z_a: 0.0,
        };
        let k = vec![1300.0, 1310.0];
        let f = forward_scatter(&[PointTarget::unit(Vec3::new(0.0, 0.0, 0.8))], &g, &k).unwrap();
        for (i, kv) in k.iter().enumerate() {
            assert!((f.samples[i] - Complex64::from_polar(1.0, -2.0 * kv * 0.8)).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_is_linear() {
        let k = cfg().wavenumbers();
        let g = ApertureGrid::from_layout(&layout()).unwrap();
        let a = PointTarget::unit(Vec3::new(0.05, 0.0, 0.7));
        let b = PointTarget::new(Vec3::new(-0.02, 0.03, 1.1), Complex64::new(0.3, -0.5));
        let fa = forward_scatter(&[a], &g, &k).unwrap();
        let fb = forward_scatter(&[b], &g, &k).unwrap();
        let fab = forward_scatter(&[a, b], &g, &k).unwrap();
        for i in 0..fab.samples.len() {
            assert!((fab.samples[i] - fa.samples[i] - fb.samples[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_slope_over_k_is_twice_range() {
        let k = cfg().wavenumbers();
        let g = ApertureGrid {
            tx_x: vec![0.0],
            tx_y: vec![0.0],
            rx_x: vec![0.0],
            rx_y: vec![0.0],
            z_a: 0.0,
        };
        let f = forward_scatter(&[PointTarget::unit(Vec3::new(0.0, 0.0, 1.0))], &g, &k).unwrap();
        let ph = dsp::unwrap(&f.samples.iter().map(|v| v.arg()).collect::<Vec<_>>());
        let slope = (ph[63] - ph[0]) / (k[63] - k[0]);
        assert!((slope + 2.0).abs() < 1e-9, "{slope}");
    }

    #[test]
    fn scatterer_on_aperture_rejected() {
        let g = ApertureGrid::from_layout(&layout()).unwrap();
        let r = forward_scatter(&[PointTarget::unit(Vec3::new(0.3, 0.0, 0.0))], &g, &cfg().wavenumbers());
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn cube_frame_matches_forward_model() {
        let l = layout();
        let p = PointTarget::unit(Vec3::new(0.04, -0.03, 0.9));
        let sc = Scene {
            subjects: vec![],
            clutter: vec![p],
            duration: 1.0 / 18.0,
            seed: 1,
            snr_db: None,
            attenuation: Attenuation::None,
        };
        let cube = simulate_datacube(&sc, &cfg(), &l).unwrap();
        let a = ScatteredField::from_cube_frame(&cube, 0, &l).unwrap();
        let b = field_for_layout(&[p], &l, &cfg()).unwrap();
        for (u, v) in a.samples.iter().zip(&b.samples) {
            assert!((u - v).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_field_gives_zero_volume() {
        let g = ApertureGrid::from_layout(&layout()).unwrap();
        let f = ScatteredField::zeros(g, cfg().wavenumbers());
        let (x, y, z) = (axis(-0.02, 0.01, 5), axis(-0.02, 0.01, 5), axis(0.5, 0.02, 5));
        let v = reconstruct(&f, &x, &y, &z, &StoltOptions::default()).unwrap();
        assert!(v.voxels.iter().all(|c| c.norm() == 0.0));
        let m = matched_filter_reconstruct(&f, &x, &y, &z).unwrap();
        assert!(m.voxels.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn single_channel_single_k_is_a_shell() {
        let g = ApertureGrid {
            tx_x: vec![0.0],
            tx_y: vec![0.0],
            rx_x: vec![0.0],
            rx_y: vec![0.0],
            z_a: 0.0,
        };
        let f = forward_scatter(&[PointTarget::unit(Vec3::new(0.0, 0.0, 1.0))], &g, &[1300.0]).unwrap();
        let ax = axis(-0.1, 0.05, 5);
        let m = matched_filter_reconstruct(&f, &ax, &ax, &axis(0.8, 0.1, 5)).unwrap();
        assert!(m.voxels.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn broadside_point_round_trip() {
        let f = field_for_layout(&[PointTarget::unit(Vec3::new(0.0, 0.0, 1.0))], &layout(), &cfg()).unwrap();
        let (x, y, z) = (axis(-0.08, 0.01, 17), axis(-0.08, 0.01, 17), axis(0.88, 0.015, 17));
        let v = reconstruct(&f, &x, &y, &z, &StoltOptions::default()).unwrap();
        let (ix, iy, iz) = v.peak_index().unwrap();
        assert_eq!((ix, iy, iz), (8, 8, 8));
        let m = matched_filter_reconstruct(&f, &x, &y, &z).unwrap();
        assert_eq!(m.peak_index().unwrap(), (8, 8, 8));
        let bound = (400 * 64) as f64;
        assert!(v.voxels.iter().all(|c| c.norm() <= bound));
        assert!((m.voxels[m.ravel(8, 8, 8)].norm() - bound).abs() < 1e-6 * bound);
    }

    #[test]
    fn nearest_interpolation_also_focuses() {
        let p = Vec3::new(0.03, -0.02, 0.7);
        let f = field_for_layout(&[PointTarget::unit(p)], &layout(), &cfg()).unwrap();
        let (x, y, z) = (axis(-0.05, 0.01, 17), axis(-0.1, 0.01, 17), axis(0.58, 0.015, 17));
        let opts = StoltOptions {
            interpolation: Interpolation::Nearest,
            ..Default::default()
        };
        let v = reconstruct(&f, &x, &y, &z, &opts).unwrap();
        let (ix, iy, iz) = v.peak_index().unwrap();
        let q = v.position(ix, iy, iz);
        assert!((q.x - p.x).abs() <= 0.01 + 1e-9 && (q.y - p.y).abs() <= 0.01 + 1e-9 && (q.z - p.z).abs() <= 0.015 + 1e-9);
    }

    #[test]
    fn reconstruct_is_linear() {
        let l = layout();
        let a = PointTarget::unit(Vec3::new(0.02, 0.0, 0.6));
        let b = PointTarget::new(Vec3::new(-0.03, 0.04, 0.9), Complex64::new(0.0, 0.7));
        let (x, y, z) = (axis(-0.05, 0.01, 11), axis(-0.05, 0.01, 11), axis(0.5, 0.04, 11));
        let o = StoltOptions::default();
        let va = reconstruct(&field_for_layout(&[a], &l, &cfg()).unwrap(), &x, &y, &z, &o).unwrap();
        let vb = reconstruct(&field_for_layout(&[b], &l, &cfg()).unwrap(), &x, &y, &z, &o).unwrap();
        let vab = reconstruct(&field_for_layout(&[a, b], &l, &cfg()).unwrap(), &x, &y, &z, &o).unwrap();
        let scale = vab.magnitudes().iter().cloned().fold(1.0, f64::max);
        for i in 0..vab.voxels.len() {
            assert!((vab.voxels[i] - va.voxels[i] - vb.voxels[i]).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn full_grid_uses_plain_dispersion() {
        // 8^4 aperture with both sub-arrays scanned in x and y; the target
        // sits close enough for the aperture to resolve its wavefront
        let lam = cfg().wavelength();
        let ax = axis(-3.5 * lam / 2.0, lam / 2.0, 8);
        let g = ApertureGrid {
            tx_x: ax.clone(),
            tx_y: ax.clone(),
            rx_x: ax.clone(),
            rx_y: ax,
            z_a: 0.0,
        };
        let cfg = RadarConfig { n_steps: 8, delta_f: 500e6, ..cfg() };
        let p = Vec3::new(0.0, 0.0, 0.1);
        let f = forward_scatter(&[PointTarget::unit(p)], &g, &cfg.wavenumbers()).unwrap();
        let (x, y, z) = (axis(-0.01, 0.005, 5), axis(-0.01, 0.005, 5), axis(0.07, 0.01, 7));
        let v = reconstruct(&f, &x, &y, &z, &StoltOptions::default()).unwrap();
        let m = matched_filter_reconstruct(&f, &x, &y, &z).unwrap();
        assert_eq!(v.peak_index().unwrap(), (2, 2, 3));
        assert_eq!(m.peak_index().unwrap(), (2, 2, 3));
    }

    #[test]
    fn peaks_and_ncc() {
        let mut v = ImageVolume::zeros(axis(0.0, 1.0, 5), axis(0.0, 1.0, 5), axis(0.0, 1.0, 5));
        let i = v.ravel(1, 1, 1);
        v.voxels[i] = Complex64::new(2.0, 0.0);
        let i = v.ravel(3, 3, 3);
        v.voxels[i] = Complex64::new(0.0, 1.5);
        let p = find_peaks(&v, 0.5);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].index, (1, 1, 1));
        assert!((normalized_cross_correlation(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!(check_uniform(&[0.0, 1.0, 3.0], "t").is_err());
    }
}
