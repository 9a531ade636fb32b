//! Affine camera-to-radar alignment by linear least squares.

use std::io::{Read, Write};

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector4};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::imaging::ImageVolume;
use crate::scene::CameraModel;
use crate::{Error, Result, Vec3};

/// Smallest-to-largest singular value ratio below which the homogeneous
/// camera matrix is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPair {
    pub camera_point: Vec3,
    pub radar_point: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationSet {
    pub train: Vec<MeasurementPair>,
    pub test: Vec<MeasurementPair>,
}

/// Homogeneous 4x4 map whose last row is always `[0, 0, 0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    matrix: Matrix4<f64>,
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix4::identity(),
        }
    }

    /// Build from a 3x3 linear block and a translation.
    pub fn from_parts(linear: Matrix3<f64>, translation: Vec3) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&linear);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self { matrix: m }
    }

    /// From the 12 free entries, row major (`b11 .. b14, b21 .. b34`).
    pub fn from_rows(rows: [f64; 12]) -> Self {
        let mut m = Matrix4::identity();
        for r in 0..3 {
            for c in 0..4 {
                m[(r, c)] = rows[r * 4 + c];
            }
        }
        Self { matrix: m }
    }

    /// From 16 row-major values. The last row must be `[0, 0, 0, 1]`.
    pub fn from_row_major(v: &[f64]) -> Result<Self> {
        if v.len() != 16 {
            return Err(Error::LengthMismatch { expected: 16, got: v.len() });
        }
        if v[12..] != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::InvalidConfig("affine last row must be [0, 0, 0, 1]".into()));
        }
        let mut rows = [0.0; 12];
        rows.copy_from_slice(&v[..12]);
        Ok(Self::from_rows(rows))
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.matrix[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn linear(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vec3 {
        self.matrix.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.linear() * p + self.translation()
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .linear()
            .try_inverse()
            .ok_or_else(|| Error::Singular("affine linear block is not invertible".into()))?;
        Ok(Self::from_parts(inv, -(inv * self.translation())))
    }

    pub fn compose(&self, inner: &Self) -> Self {
        Self {
            matrix: self.matrix * inner.matrix,
        }
    }
}

impl Serialize for AffineTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffineTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        match v.len() {
            12 => {
                let mut rows = [0.0; 12];
                rows.copy_from_slice(&v);
                Ok(Self::from_rows(rows))
            }
            _ => Self::from_row_major(&v).map_err(serde::de::Error::custom),
        }
    }
}

/// Least-squares `B` minimising `||P_r - B P_c||_F` with the last row held
/// at `[0, 0, 0, 1]`. Equivalent to `P_r P_c^T (P_c P_c^T)^-1` on the first
/// three rows, computed through the SVD of `P_c^T` for stability.
pub fn fit_affine(train: &[MeasurementPair]) -> Result<AffineTransform> {
    let k = train.len();
    if k < 4 {
        return Err(Error::Precondition(format!(
            "affine fit needs at least 4 training pairs, got {k}"
        )));
    }
    for p in train {
        if !p.camera_point.iter().chain(p.radar_point.iter()).all(|v| v.is_finite()) {
            return Err(Error::Precondition("non-finite calibration coordinate".into()));
        }
    }
    // A = P_c^T (K x 4), Y = P_r^T (K x 3)
    let a = DMatrix::from_fn(k, 4, |i, j| if j < 3 { train[i].camera_point[j] } else { 1.0 });
    let y = DMatrix::from_fn(k, 3, |i, j| train[i].radar_point[j]);
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let (imin, smin) = s.argmin();
    if !(smin > RANK_TOLERANCE * smax) {
        let vt = svd.v_t.as_ref().expect("requested");
        let n = Vector4::new(vt[(imin, 0)], vt[(imin, 1)], vt[(imin, 2)], vt[(imin, 3)]);
        let nn = n.fixed_rows::<3>(0).norm();
        let msg = if nn > 1e-12 {
            format!(
                "camera points are coplanar or collinear: rank-deficient direction lies in the plane \
                 {:.4} x + {:.4} y + {:.4} z + {:.4} = 0; add points off this plane",
                n[0] / nn,
                n[1] / nn,
                n[2] / nn,
                n[3] / nn
            )
        } else {
            "camera points are all identical; spread the calibration targets out".to_string()
        };
        return Err(Error::Singular(msg));
    }
    let x = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::Singular(e.to_string()))?;
    let mut rows = [0.0; 12];
    for r in 0..3 {
        for c in 0..4 {
            rows[r * 4 + c] = x[(c, r)];
        }
    }
    Ok(AffineTransform::from_rows(rows))
}

/// `||P_r - B P_c||_F^2` over `pairs`.
pub fn residual(b: &AffineTransform, pairs: &[MeasurementPair]) -> f64 {
    pairs
        .iter()
        .map(|p| (b.apply(&p.camera_point) - p.radar_point).norm_squared())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisMae {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub average: f64,
}

impl AxisMae {
    pub fn scaled(&self, f: f64) -> Self {
        Self {
            x: self.x * f,
            y: self.y * f,
            z: self.z * f,
            average: self.average * f,
        }
    }
}

pub fn mae_per_axis(b: &AffineTransform, pairs: &[MeasurementPair]) -> Result<AxisMae> {
    if pairs.is_empty() {
        return Err(Error::Empty("measurement pairs"));
    }
    let mut acc = Vec3::zeros();
    for p in pairs {
        acc += (b.apply(&p.camera_point) - p.radar_point).abs();
    }
    acc /= pairs.len() as f64;
    Ok(AxisMae {
        x: acc.x,
        y: acc.y,
        z: acc.z,
        average: (acc.x + acc.y + acc.z) / 3.0,
    })
}

/// Location of the strongest voxel, refined per axis by a three-point
/// parabola through the magnitudes.
pub fn radar_coordinate_from_volume(vol: &ImageVolume) -> Result<Vec3> {
    if vol.voxels.is_empty() {
        return Err(Error::Empty("image volume"));
    }
    let mags: Vec<f64> = vol.voxels.iter().map(|v| v.norm()).collect();
    let (imax, &peak) = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let ties = mags.iter().filter(|&&m| m >= peak * (1.0 - 1e-9)).count();
    if !(peak > 0.0) || ties > 1 {
        return Err(Error::AmbiguousPeak(format!(
            "no unique magnitude maximum ({ties} voxels at the peak value {peak:.3e})"
        )));
    }
    let (ix, iy, iz) = vol.unravel(imax);
    let idx = [ix, iy, iz];
    let axes = [&vol.x, &vol.y, &vol.z];
    let mut out = Vec3::zeros();
    for d in 0..3 {
        let ax = axes[d];
        let i = idx[d];
        let mut pos = ax[i];
        if i > 0 && i + 1 < ax.len() {
            let mut lo = idx;
            let mut hi = idx;
            lo[d] -= 1;
            hi[d] += 1;
            let l = mags[vol.ravel(lo[0], lo[1], lo[2])];
            let r = mags[vol.ravel(hi[0], hi[1], hi[2])];
            pos += crate::dsp::parabolic_offset(l, peak, r) * (ax[1] - ax[0]);
        }
        out[d] = pos;
    }
    Ok(out)
}

/// Camera-side measurement of a radar-frame point: the true point mapped
/// into the camera frame with per-axis Gaussian noise.
pub fn observe_with_camera<R: Rng>(cam: &CameraModel, p_r: &Vec3, rng: &mut R) -> Result<Vec3> {
    let p_c = cam.radar_to_camera()?.apply(p_r);
    Ok(p_c + gaussian3(&cam.noise_sigma, rng))
}

pub(crate) fn gaussian3<R: Rng>(sigma: &Vec3, rng: &mut R) -> Vec3 {
    let mut v = Vec3::zeros();
    for d in 0..3 {
        if sigma[d] > 0.0 {
            v[d] = Normal::new(0.0, sigma[d]).expect("sigma > 0").sample(rng);
        }
    }
    v
}

/// Settings for the synthetic corner-reflector protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticProtocol {
    pub n_train: usize,
    pub n_test: usize,
    /// Radial placement range of the reflectors, m.
    pub min_range: f64,
    pub max_range: f64,
    /// Per-axis localisation noise on the radar side, m.
    pub radar_noise: Vec3,
}

impl Default for SyntheticProtocol {
    fn default() -> Self {
        Self {
            n_train: 19,
            n_test: 14,
            min_range: 0.6,
            max_range: 2.0,
            radar_noise: Vec3::zeros(),
        }
    }
}

/// Random reflector placements inside the camera field of view. The radar
/// side records the truth (plus `radar_noise`), the camera side records a
/// noisy observation.
pub fn synthetic_calibration_set<R: Rng>(
    cam: &CameraModel,
    proto: &SyntheticProtocol,
    rng: &mut R,
) -> Result<CalibrationSet> {
    if proto.n_train < 4 {
        return Err(Error::Precondition(format!(
            "synthetic protocol needs at least 4 training pairs, got {}",
            proto.n_train
        )));
    }
    if !(proto.min_range > 0.0 && proto.max_range > proto.min_range) {
        return Err(Error::InvalidConfig("protocol range limits must be 0 < min < max".into()));
    }
    let to_cam = cam.radar_to_camera()?;
    let mut pairs = Vec::with_capacity(proto.n_train + proto.n_test);
    let (hx, hy) = (0.8 * cam.fov_deg.0.to_radians() / 2.0, 0.8 * cam.fov_deg.1.to_radians() / 2.0);
    while pairs.len() < proto.n_train + proto.n_test {
        let r = rng.random_range(proto.min_range..proto.max_range);
        let ax = rng.random_range(-hx..hx);
        let ay = rng.random_range(-hy..hy);
        let dir = Vec3::new(ax.tan(), ay.tan(), 1.0).normalize();
        let p_r = dir * r;
        if !cam.observes(&to_cam.apply(&p_r)) {
            continue;
        }
        let camera_point = observe_with_camera(cam, &p_r, rng)?;
        let radar_point = p_r + gaussian3(&proto.radar_noise, rng);
        pairs.push(MeasurementPair {
            camera_point,
            radar_point,
        });
    }
    let test = pairs.split_off(proto.n_train);
    Ok(CalibrationSet { train: pairs, test })
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRow {
    id: String,
    x_c: f64,
    y_c: f64,
    z_c: f64,
    x_r: f64,
    y_r: f64,
    z_r: f64,
    split: String,
}

impl CalibrationSet {
    /// CSV columns `id, x_c, y_c, z_c, x_r, y_r, z_r, split`.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut set = CalibrationSet::default();
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        for row in rd.deserialize() {
            let row: PairRow = row?;
            let p = MeasurementPair {
                camera_point: Vec3::new(row.x_c, row.y_c, row.z_c),
                radar_point: Vec3::new(row.x_r, row.y_r, row.z_r),
            };
            match row.split.as_str() {
                "train" => set.train.push(p),
                "test" => set.test.push(p),
                other => {
                    return Err(Error::Parse(format!(
                        "pair '{}': split must be train or test, got '{other}'",
                        row.id
                    )))
                }
            }
        }
        Ok(set)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let all = self
            .train
            .iter()
            .map(|p| (p, "train"))
            .chain(self.test.iter().map(|p| (p, "test")));
        for (i, (p, split)) in all.enumerate() {
            wr.serialize(PairRow {
                id: format!("p{i:02}"),
                x_c: p.camera_point.x,
                y_c: p.camera_point.y,
                z_c: p.camera_point.z,
                x_r: p.radar_point.x,
                y_r: p.radar_point.y,
                z_r: p.radar_point.z,
                split: split.to_string(),
            })?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_affine(rng: &mut ChaCha8Rng) -> AffineTransform {
        loop {
            let mut rows = [0.0; 12];
            for v in rows.iter_mut() {
                *v = rng.random_range(-2.0..2.0);
            }
            let b = AffineTransform::from_rows(rows);
            if b.linear().determinant().abs() > 0.1 {
                return b;
            }
        }
    }

    fn pairs_from(b: &AffineTransform, pts: &[Vec3]) -> Vec<MeasurementPair> {
        pts.iter()
            .map(|p| MeasurementPair {
                camera_point: *p,
                radar_point: b.apply(p),
            })
            .collect()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0)))
            .collect()
    }

    #[test]
    fn identity_data_fits_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_points(&mut rng, 10);
        let b = fit_affine(&pairs_from(&AffineTransform::identity(), &pts)).unwrap();
        assert!((b.matrix() - Matrix4::identity()).abs().max() < 1e-12);
        assert_eq!(b.to_row_major()[12..], [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn four_point_exact_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b0 = random_affine(&mut rng);
        let pts = random_points(&mut rng, 4);
        let b = fit_affine(&pairs_from(&b0, &pts)).unwrap();
        assert!((b.matrix() - b0.matrix()).abs().max() < 1e-9);
    }

    #[test]
    fn three_pairs_rejected() {
        let pts = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let r = fit_affine(&pairs_from(&AffineTransform::identity(), &pts));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn coplanar_points_named() {
        let pts: Vec<Vec3> = (0..6).map(|i| Vec3::new(i as f64 * 0.1, (i * i) as f64 * 0.05, 1.5)).collect();
        match fit_affine(&pairs_from(&AffineTransform::identity(), &pts)) {
            Err(Error::Singular(msg)) => {
                assert!(msg.contains("coplanar"), "{msg}");
                // plane z = 1.5 -> normal (0, 0, +-1), offset -+1.5
                assert!(msg.contains("1.0000 z") || msg.contains("-1.0000 z"), "{msg}");
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn apply_translation_and_identity() {
        let t = AffineTransform::from_parts(Matrix3::identity(), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(t.apply(&Vec3::zeros()), Vec3::new(1.0, 2.0, 3.0));
        let p = Vec3::new(0.3, -0.1, 1.2);
        assert_eq!(AffineTransform::identity().apply(&p), p);
    }

    #[test]
    fn held_out_point_matches_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b0 = random_affine(&mut rng);
        let pts = random_points(&mut rng, 12);
        let b = fit_affine(&pairs_from(&b0, &pts)).unwrap();
        let q = Vec3::new(0.2, 0.4, 1.7);
        assert!((b.apply(&q) - b0.apply(&q)).norm() < 1e-10);
    }

    #[test]
    fn mae_basic_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = random_points(&mut rng, 8);
        let pairs = pairs_from(&AffineTransform::identity(), &pts);
        let m = mae_per_axis(&AffineTransform::identity(), &pairs).unwrap();
        assert_eq!((m.x, m.y, m.z), (0.0, 0.0, 0.0));
        let off = AffineTransform::from_parts(Matrix3::identity(), Vec3::new(0.01, 0.0, 0.0));
        let m = mae_per_axis(&off, &pairs).unwrap();
        assert!((m.x - 0.01).abs() < 1e-15 && m.y == 0.0 && m.z == 0.0);
        assert!((m.average - 0.01 / 3.0).abs() < 1e-15);
        assert!(matches!(mae_per_axis(&off, &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_affine(&mut rng);
        let p = Vec3::new(0.5, 0.1, -0.3);
        let back = b.inverse().unwrap().apply(&b.apply(&p));
        assert!((back - p).norm() < 1e-10);
    }

    #[test]
    fn json_is_row_major_16() {
        let b = AffineTransform::from_parts(Matrix3::identity() * 2.0, Vec3::new(1.0, 2.0, 3.0));
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, "[2.0,0.0,0.0,1.0,0.0,2.0,0.0,2.0,0.0,0.0,2.0,3.0,0.0,0.0,0.0,1.0]");
        let back: AffineTransform = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<AffineTransform>("[1,0,0,0,0,1,0,0,0,0,1,0,1,0,0,1]").is_err());
    }

    #[test]
    fn volume_peak_single_voxel() {
        let mut vol = ImageVolume::zeros(
            vec![-0.1, 0.0, 0.1],
            vec![-0.1, 0.0, 0.1, 0.2],
            vec![0.9, 1.0, 1.1],
        );
        let i = vol.ravel(2, 1, 0);
        vol.voxels[i] = Complex64::new(0.0, 3.0);
        let p = radar_coordinate_from_volume(&vol).unwrap();
        assert_eq!(p, Vec3::new(0.1, 0.0, 0.9));
    }

    #[test]
    fn flat_volume_is_ambiguous() {
        let vol = ImageVolume::zeros(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!(matches!(radar_coordinate_from_volume(&vol), Err(Error::AmbiguousPeak(_))));
    }

    #[test]
    fn volume_peak_parabolic_refinement() {
        let ax: Vec<f64> = (0..9).map(|i| i as f64 * 0.01).collect();
        let mut vol = ImageVolume::zeros(ax.clone(), ax.clone(), ax.clone());
        let truth = Vec3::new(0.043, 0.031, 0.05);
        for ix in 0..9 {
            for iy in 0..9 {
                for iz in 0..9 {
                    let d = Vec3::new(ax[ix], ax[iy], ax[iz]) - truth;
                    let i = vol.ravel(ix, iy, iz);
                    vol.voxels[i] = Complex64::new(1000.0 - 1e4 * d.norm_squared(), 0.0);
                }
            }
        }
        let p = radar_coordinate_from_volume(&vol).unwrap();
        assert!((p - truth).norm() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts = random_points(&mut rng, 6);
        let pairs = pairs_from(&AffineTransform::identity(), &pts);
        let set = CalibrationSet {
            train: pairs[..4].to_vec(),
            test: pairs[4..].to_vec(),
        };
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let back = CalibrationSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, set);
        let bad = "id,x_c,y_c,z_c,x_r,y_r,z_r,split\na,0,0,0,0,0,0,val\n";
        assert!(matches!(CalibrationSet::read_csv(bad.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn synthetic_protocol_sizes_and_visibility() {
        let cam = CameraModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let set = synthetic_calibration_set(&cam, &SyntheticProtocol::default(), &mut rng).unwrap();
        assert_eq!((set.train.len(), set.test.len()), (19, 14));
        let cam0 = CameraModel {
            noise_sigma: Vec3::zeros(),
            ..cam
        };
        let set = synthetic_calibration_set(&cam0, &SyntheticProtocol::default(), &mut rng).unwrap();
        let b = fit_affine(&set.train).unwrap();
        let truth = cam0.extrinsic_truth;
        assert!((b.matrix() - truth.matrix()).abs().max() < 1e-9);
    }

    proptest! {
        #[test]
        fn exact_recovery_property(seed in any::<u64>(), k in 4usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b0 = random_affine(&mut rng);
            let pts = random_points(&mut rng, k);
            let b = fit_affine(&pairs_from(&b0, &pts)).unwrap();
            prop_assert!((b.matrix() - b0.matrix()).abs().max() < 1e-8);
        }

        #[test]
        fn residual_optimality(seed in any::<u64>(), entry in 0usize..12, sign in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b0 = random_affine(&mut rng);
            let pts = random_points(&mut rng, 15);
            let noise = Normal::new(0.0, 0.02).unwrap();
            let pairs: Vec<MeasurementPair> = pairs_from(&b0, &pts)
                .into_iter()
                .map(|mut p| {
                    p.radar_point += Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                    p
                })
                .collect();
            let b = fit_affine(&pairs).unwrap();
            let mut rows = [0.0; 12];
            rows.copy_from_slice(&b.to_row_major()[..12]);
            rows[entry] += if sign { 1e-4 } else { -1e-4 };
            let perturbed = AffineTransform::from_rows(rows);
            prop_assert!(residual(&perturbed, &pairs) >= residual(&b, &pairs));
        }

        #[test]
        fn translation_equivariance(seed in any::<u64>(), tx in -1.0f64..1.0, ty in -1.0f64..1.0, tz in -1.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b0 = random_affine(&mut rng);
            let pts = random_points(&mut rng, 10);
            let noise = Normal::new(0.0, 0.01).unwrap();
            let pairs: Vec<MeasurementPair> = pairs_from(&b0, &pts)
                .into_iter()
                .map(|mut p| {
                    p.radar_point += Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                    p
                })
                .collect();
            let t = Vec3::new(tx, ty, tz);
            let shifted: Vec<MeasurementPair> = pairs
                .iter()
                .map(|p| MeasurementPair { camera_point: p.camera_point + t, radar_point: p.radar_point })
                .collect();
            let a = fit_affine(&pairs).unwrap();
            let b = fit_affine(&shifted).unwrap();
            prop_assert!((a.linear() - b.linear()).abs().max() < 1e-9);
            // the translation absorbs the shift: t_b = t_a - A t
            prop_assert!((b.translation() - (a.translation() - a.linear() * t)).abs().max() < 1e-9);
        }
    }
}
