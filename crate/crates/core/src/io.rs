//! Output artefacts. Every file is written to a temporary sibling first and
//! renamed into place, so a crash never leaves a half-written result.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::DataCube;
use crate::imaging::ImageVolume;
use crate::vitals::{PowerSpectrum, SubjectVitals};
use crate::waveform::RadarConfig;
use crate::{Complex64, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = tmp_path(path);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a `schema_version` field added at the top level. `T`
/// must serialise to an object.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        body: value,
    })?;
    write_atomic(path, format!("{text}\n").as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_bytes<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        f(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

/// `freq_hz,power_db` rows, relative to the spectrum maximum.
pub fn write_spectrum_csv(path: &Path, spec: &PowerSpectrum) -> Result<()> {
    let db = spec.power_db();
    let bytes = csv_bytes(|w| {
        w.write_record(["freq_hz", "power_db"])?;
        for (f, p) in spec.freqs.iter().zip(&db) {
            w.write_record([format!("{f:.6}"), format!("{p:.4}")])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

/// `frame,t_s,bin,range_m,magnitude` rows.
pub fn write_range_time_csv(path: &Path, v: &SubjectVitals) -> Result<()> {
    let fs_ = v.psi.sample_rate;
    let bytes = csv_bytes(|w| {
        w.write_record(["frame", "t_s", "bin", "range_m", "magnitude"])?;
        for (i, row) in v.range_time.iter().enumerate() {
            for (b, m) in row.iter().enumerate() {
                w.write_record([
                    i.to_string(),
                    format!("{:.6}", i as f64 / fs_),
                    b.to_string(),
                    format!("{:.6}", b as f64 * v.bin_spacing),
                    format!("{m:.9e}"),
                ])?;
            }
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

/// `frame,t_s,psi_rad,dpsi_rad_s,displacement_m`; the differential column
/// is empty on the last row.
pub fn write_phase_csv(path: &Path, v: &SubjectVitals, wavelength: f64) -> Result<()> {
    let disp = v.psi.displacement(wavelength);
    let fs_ = v.psi.sample_rate;
    let bytes = csv_bytes(|w| {
        w.write_record(["frame", "t_s", "psi_rad", "dpsi_rad_s", "displacement_m"])?;
        for (i, p) in v.psi.psi.iter().enumerate() {
            let d = v.dpsi.get(i).map(|d| format!("{d:.9}")).unwrap_or_default();
            w.write_record([
                i.to_string(),
                format!("{:.6}", i as f64 / fs_),
                format!("{p:.9}"),
                d,
                format!("{:.9e}", disp[i]),
            ])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub shape: [usize; 3],
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub layout: String,
    pub dtype: String,
    pub units: String,
    /// How the volume was produced.
    pub provenance: String,
}

fn complex_le(values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 16);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn complex_from_le(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() % 16 != 0 {
        return Err(Error::Parse(format!("binary length {} is not a multiple of 16", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

/// `<stem>.bin` (interleaved little-endian f64 re/im, x slowest) plus
/// `<stem>.meta.json`.
pub fn write_volume(dir: &Path, stem: &str, vol: &ImageVolume, provenance: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.bin")), &complex_le(&vol.voxels))?;
    write_json(
        &dir.join(format!("{stem}.meta.json")),
        &VolumeMeta {
            shape: [vol.x.len(), vol.y.len(), vol.z.len()],
            x: vol.x.clone(),
            y: vol.y.clone(),
            z: vol.z.clone(),
            layout: "x,y,z row-major".into(),
            dtype: "complex128 little-endian (re, im)".into(),
            units: "axes in m, voxels unitless".into(),
            provenance: provenance.into(),
        },
    )
}

pub fn read_volume(dir: &Path, stem: &str) -> Result<ImageVolume> {
    let meta: VolumeMeta = read_json(&dir.join(format!("{stem}.meta.json")))?;
    let voxels = complex_from_le(&fs::read(dir.join(format!("{stem}.bin")))?)?;
    let vol = ImageVolume {
        voxels,
        x: meta.x,
        y: meta.y,
        z: meta.z,
    };
    vol.validate()?;
    Ok(vol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeMeta {
    pub n_frames: usize,
    pub n_steps: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub frame_rate: f64,
    pub radar: RadarConfig,
    pub layout: String,
    pub dtype: String,
}

pub fn write_cube(dir: &Path, stem: &str, cube: &DataCube) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.bin")), &complex_le(&cube.samples))?;
    write_json(
        &dir.join(format!("{stem}.meta.json")),
        &CubeMeta {
            n_frames: cube.n_frames,
            n_steps: cube.n_steps,
            n_tx: cube.n_tx,
            n_rx: cube.n_rx,
            frame_rate: cube.frame_rate,
            radar: cube.cfg,
            layout: "frame,step,tx,rx row-major".into(),
            dtype: "complex128 little-endian (re, im)".into(),
        },
    )
}

pub fn read_cube(dir: &Path, stem: &str) -> Result<DataCube> {
    let meta: CubeMeta = read_json(&dir.join(format!("{stem}.meta.json")))?;
    let samples = complex_from_le(&fs::read(dir.join(format!("{stem}.bin")))?)?;
    let cube = DataCube {
        samples,
        n_frames: meta.n_frames,
        n_steps: meta.n_steps,
        n_tx: meta.n_tx,
        n_rx: meta.n_rx,
        frame_rate: meta.frame_rate,
        cfg: meta.radar,
    };
    cube.validate()?;
    Ok(cube)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_carries_schema_version() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.json");
        write_json(&p, &serde_json::json!({"x": 1})).unwrap();
        let v: serde_json::Value = read_json(&p).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["x"], 1);
        assert!(fs::read_dir(p.parent().unwrap()).unwrap().count() == 1);
    }

    #[test]
    fn volume_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut vol = ImageVolume::zeros(vec![0.0, 1.0], vec![0.0, 1.0, 2.0], vec![5.0]);
        for (i, v) in vol.voxels.iter_mut().enumerate() {
            *v = Complex64::new(i as f64, -(i as f64) * 0.5);
        }
        write_volume(dir.path(), "volume", &vol, "test").unwrap();
        assert_eq!(read_volume(dir.path(), "volume").unwrap(), vol);
    }

    #[test]
    fn cube_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RadarConfig::standard();
        let mut cube = DataCube::zeros(2, &cfg, 2, 3);
        cube.samples[7] = Complex64::new(1.5, 2.5);
        write_cube(dir.path(), "cube", &cube).unwrap();
        assert_eq!(read_cube(dir.path(), "cube").unwrap(), cube);
    }
}
