use nalgebra::Vector3;
use num_complex::Complex64;

use crate::units::CM_TO_RAD_PER_FS;

/// Laser polarization in the molecular frame: (sinθ cosφ, sinθ sinφ, cosθ).
pub fn polarization_vector(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// Rotating-frame envelope on a uniform grid starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    /// Sampling interval, fs.
    pub dt: f64,
    /// Ẽ(j·dt) in V/m.
    pub samples: Vec<Complex64>,
    /// Unit polarization vector.
    pub polarization: Vector3<f64>,
    /// Rotating-frame frequency ω₀, cm⁻¹.
    pub carrier: f64,
    /// The field is treated as zero after this time, fs.
    pub end_time: f64,
}

impl SampledField {
    pub fn new(dt: f64, samples: Vec<Complex64>, polarization: Vector3<f64>, carrier: f64) -> Self {
        let end_time = samples.len().saturating_sub(1) as f64 * dt;
        Self {
            dt,
            samples,
            polarization,
            carrier,
            end_time,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// Index of the last sample not after `end_time`.
    pub fn end_index(&self) -> usize {
        let k = (self.end_time / self.dt + 1e-9).floor().max(0.0) as usize;
        k.min(self.samples.len().saturating_sub(1))
    }

    /// Sample `j`, or zero past `end_time` or outside the grid.
    pub fn value(&self, j: usize) -> Complex64 {
        if j < self.samples.len() && self.time(j) <= self.end_time + 1e-9 * self.dt {
            self.samples[j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Samples up to and including `end_index`.
    pub fn active(&self) -> &[Complex64] {
        if self.samples.is_empty() {
            return &[];
        }
        &self.samples[..=self.end_index()]
    }

    pub fn with_polarization(mut self, polarization: Vector3<f64>) -> Self {
        self.polarization = polarization;
        self
    }

    /// Largest |Ẽ| over the active samples.
    pub fn peak_amplitude(&self) -> f64 {
        self.active().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Σ|Ẽ|² dt over the active samples.
    pub fn energy(&self) -> f64 {
        self.active().iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Multiply every sample by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.samples.iter_mut().for_each(|z| *z *= factor);
        self
    }

    /// Re-express the same physical field in a frame rotating at ω₀ + δ.
    pub fn shift_frame(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.carrier += delta;
        for (j, z) in out.samples.iter_mut().enumerate() {
            let t = j as f64 * self.dt;
            *z *= Complex64::from_polar(1.0, CM_TO_RAD_PER_FS * delta * t);
        }
        out
    }

    /// Rows (t, Re Ẽ, Im Ẽ) for export.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        self.active()
            .iter()
            .enumerate()
            .map(|(j, z)| (self.time(j), z.re, z.im))
            .collect()
    }
}
