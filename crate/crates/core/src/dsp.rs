//! Small signal-processing helpers shared by the range, imaging and vitals
//! stages.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::Complex64;

/// Taper applied before a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Rect,
    Hann,
}

impl WindowKind {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Rect => vec![1.0; n],
            WindowKind::Hann if n < 2 => vec![1.0; n],
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
                .collect(),
        }
    }
}

/// Forward DFT, `X[m] = sum x[i] exp(-j 2 pi m i / n)`.
pub fn fft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Inverse DFT with `1/n` normalisation.
pub fn ifft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let n = buf.len();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Signed frequency index of FFT bin `m` for an `n`-point transform.
pub fn signed_bin(m: usize, n: usize) -> i64 {
    if m < n.div_ceil(2) {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Indices of strict local maxima whose value is at least `rel_floor` times
/// the global maximum. End points never count.
pub fn local_maxima(values: &[f64], rel_floor: f64) -> Vec<usize> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if values.len() < 3 || !(max > 0.0) {
        return Vec::new();
    }
    (1..values.len() - 1)
        .filter(|&i| {
            values[i] > values[i - 1] && values[i] > values[i + 1] && values[i] >= rel_floor * max
        })
        .collect()
}

/// Vertex offset of the parabola through three equally spaced samples,
/// in units of the sample spacing, clamped to `[-0.5, 0.5]`.
pub fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    let denom = left - 2.0 * centre + right;
    if denom.abs() < f64::EPSILON * centre.abs().max(1.0) {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Unwrap a phase sequence: whenever a successive difference exceeds pi in
/// magnitude, add the multiple of 2 pi that brings it back into (-pi, pi].
pub fn unwrap(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    let mut prev = match phase.first() {
        Some(&p) => p,
        None => return out,
    };
    out.push(prev);
    for &p in &phase[1..] {
        let mut d = p - prev;
        while d > PI {
            offset -= 2.0 * PI;
            d -= 2.0 * PI;
        }
        while d < -PI {
            offset += 2.0 * PI;
            d += 2.0 * PI;
        }
        out.push(p + offset);
        prev = p;
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn energy(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum()
}
