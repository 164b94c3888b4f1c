use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{polarization_vector, SampledField};
use super::truncate::{truncate_pulse, TruncationRule};
use super::FIELD_DT;
use crate::error::Result;
use crate::units::CM_TO_RAD_PER_FS;

/// Number of frequency-domain shaper pixels.
pub const CHIRP_POINTS: usize = 600;

/// Phase-only shaped Gaussian pulse,
/// E(ω) = A(ω) exp[i Σ_{k≥2} C_k ((ω − ω₀)/σ)^k].
///
/// Chirp coefficients are dimensionless: the polynomial is in units of the spectral
/// standard deviation σ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpPulse {
    /// Central frequency ω₀ (also the rotating-frame frequency), cm⁻¹.
    pub carrier: f64,
    /// Standard deviation σ of the spectral amplitude profile, cm⁻¹.
    pub sigma: f64,
    /// Peak |Ẽ(t)| of the unchirped pulse, V/m.
    pub amplitude: f64,
    /// C_2, C_3, ...
    pub coefficients: Vec<f64>,
    pub theta: f64,
    pub phi: f64,
    pub n_points: usize,
    /// Half-width of the frequency grid in units of σ.
    pub span_sigmas: f64,
    /// Upper bound on the time-domain sample spacing, fs.
    pub max_dt: f64,
    pub truncation: TruncationRule,
}

impl ChirpPulse {
    /// Transform-limited pulse (all C_k = 0) with `n_terms` chirp coefficients.
    pub fn unchirped(carrier: f64, sigma: f64, amplitude: f64, n_terms: usize) -> Self {
        Self {
            carrier,
            sigma,
            amplitude,
            coefficients: vec![0.0; n_terms],
            theta: 0.0,
            phi: 0.0,
            n_points: CHIRP_POINTS,
            span_sigmas: 3.0,
            max_dt: FIELD_DT,
            truncation: TruncationRule::default(),
        }
    }

    /// Absolute frequencies of the shaper pixels, cm⁻¹.
    pub fn frequencies(&self) -> Vec<f64> {
        let lo = self.carrier - self.span_sigmas * self.sigma;
        let step = self.step();
        (0..self.n_points).map(|j| lo + step * j as f64).collect()
    }

    fn step(&self) -> f64 {
        2.0 * self.span_sigmas * self.sigma / (self.n_points - 1) as f64
    }

    fn phase(&self, omega: f64) -> f64 {
        let x = (omega - self.carrier) / self.sigma;
        let mut p = 0.0;
        let mut xk = x * x;
        for c in &self.coefficients {
            p += c * xk;
            xk *= x;
        }
        p
    }

    /// Shaped spectrum on the pixel grid (arbitrary overall scale).
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.frequencies()
            .iter()
            .map(|w| {
                let x = (w - self.carrier) / self.sigma;
                Complex64::from_polar((-0.5 * x * x).exp(), self.phase(*w))
            })
            .collect()
    }

    /// Time-domain field before truncation, centred in its periodic window.
    pub fn raw_field(&self) -> SampledField {
        let spectrum = self.spectrum();
        let n = self.n_points;
        let period = 2.0 * std::f64::consts::PI / (CM_TO_RAD_PER_FS * self.step());
        let len = smooth_size((period / self.max_dt).ceil() as usize);
        let dt = period / len as f64;
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        buf[..n].copy_from_slice(&spectrum);
        forward_fft(len).process(&mut buf);
        let norm: f64 = spectrum.iter().map(|z| z.norm()).sum();
        let scale = self.amplitude / norm;
        let offset = 0.5 * (n - 1) as f64;
        let half = len / 2;
        let samples = (0..len)
            .map(|i| {
                let m = (i + len - half) % len;
                // Pixel j sits at detuning (j − offset)·Δω, hence the half-bin phase.
                let ph = 2.0 * std::f64::consts::PI * offset * m as f64 / len as f64;
                buf[m] * Complex64::from_polar(scale, ph)
            })
            .collect();
        SampledField::new(
            dt,
            samples,
            polarization_vector(self.theta, self.phi),
            self.carrier,
        )
    }
}

fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    thread_local! {
        static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

/// Smallest integer ≥ n whose prime factors are 2, 3 and 5.
fn smooth_size(n: usize) -> usize {
    (n.max(1)..)
        .find(|&m| {
            let mut k = m;
            for p in [2, 3, 5] {
                while k % p == 0 {
                    k /= p;
                }
            }
            k == 1
        })
        .expect("smooth number exists")
}

/// Synthesize the shaped pulse in the time domain and apply the truncation rule.
pub fn synthesize_chirp(p: &ChirpPulse) -> Result<SampledField> {
    truncate_pulse(&p.raw_field(), &p.truncation)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(31), 32);
        assert_eq!(smooth_size(121), 125);
    }

    #[test]
    fn unchirped_peak_equals_amplitude() {
        let p = ChirpPulse::unchirped(12350.0, 225.0, 5e6, 10);
        let f = p.raw_field();
        assert!(f.dt <= FIELD_DT);
        assert!((f.peak_amplitude() - 5e6).abs() < 1e-6 * 5e6);
    }

    #[test]
    fn phase_only_spectrum_modulus() {
        let a = ChirpPulse::unchirped(12350.0, 225.0, 5e6, 3);
        let mut b = a.clone();
        b.coefficients = vec![1.5, -0.7, 0.3];
        for (x, y) in a.spectrum().iter().zip(b.spectrum()) {
            assert!((x.norm() - y.norm()).abs() < 1e-12);
        }
    }
}
