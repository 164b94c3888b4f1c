use num_complex::Complex64;

use super::field::{polarization_vector, SampledField};
use crate::units::CM_TO_RAD_PER_FS;

/// `n` equally spaced frequencies spanning [lo, hi] (cm⁻¹), endpoints included.
pub fn crab_frequencies(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Uniform sampling grid t_j = j·dt, j = 0..n_samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_samples: usize,
}

impl TimeGrid {
    /// Smallest grid with spacing `dt` whose last sample is at or after `duration`.
    pub fn covering(duration: f64, dt: f64) -> Self {
        let n = (duration / dt - 1e-9).ceil().max(0.0) as usize + 1;
        Self { dt, n_samples: n }
    }
}

/// Sum of fixed-frequency tones with complex coefficients inside a step window.
#[derive(Debug, Clone, PartialEq)]
pub struct CrabPulse {
    /// Tone frequencies ω_k, cm⁻¹.
    pub frequencies: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Window length T, fs.
    pub duration: f64,
    pub theta: f64,
    pub phi: f64,
    /// Rotating-frame frequency ω₀, cm⁻¹.
    pub carrier: f64,
    /// Field amplitude (V/m) represented by a unit coefficient.
    pub unit: f64,
}

impl CrabPulse {
    /// Coefficients A_k = B_k = 1.
    pub fn unit_coefficients(
        frequencies: Vec<f64>,
        duration: f64,
        carrier: f64,
        unit: f64,
    ) -> Self {
        let n = frequencies.len();
        Self {
            frequencies,
            a: vec![1.0; n],
            b: vec![1.0; n],
            duration,
            theta: 0.0,
            phi: 0.0,
            carrier,
            unit,
        }
    }

    /// Envelope value at time t (zero outside [0, T]).
    pub fn envelope(&self, t: f64) -> Complex64 {
        if !(0.0..=self.duration).contains(&t) {
            return Complex64::new(0.0, 0.0);
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for ((w, a), b) in self.frequencies.iter().zip(&self.a).zip(&self.b) {
            let phase = -CM_TO_RAD_PER_FS * (w - self.carrier) * t;
            sum += Complex64::new(*a, *b) * Complex64::from_polar(1.0, phase);
        }
        sum * self.unit
    }
}

/// Sample a CRAB pulse on `grid`; the field ends at the window length T.
pub fn synthesize_crab(p: &CrabPulse, grid: &TimeGrid) -> SampledField {
    const RESYNC: usize = 256;
    let coeffs: Vec<Complex64> =
        p.a.iter()
            .zip(&p.b)
            .map(|(a, b)| Complex64::new(*a, *b) * p.unit)
            .collect();
    let detuning: Vec<f64> = p
        .frequencies
        .iter()
        .map(|w| -CM_TO_RAD_PER_FS * (w - p.carrier))
        .collect();
    let steps: Vec<Complex64> = detuning
        .iter()
        .map(|d| Complex64::from_polar(1.0, d * grid.dt))
        .collect();
    let mut phasors = vec![Complex64::new(1.0, 0.0); coeffs.len()];
    let mut samples = Vec::with_capacity(grid.n_samples);
    for j in 0..grid.n_samples {
        let t = j as f64 * grid.dt;
        if t > p.duration {
            samples.push(Complex64::new(0.0, 0.0));
            continue;
        }
        if j % RESYNC == 0 {
            for (z, d) in phasors.iter_mut().zip(&detuning) {
                *z = Complex64::from_polar(1.0, d * t);
            }
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (c, z) in coeffs.iter().zip(&phasors) {
            sum += c * z;
        }
        samples.push(sum);
        for (z, s) in phasors.iter_mut().zip(&steps) {
            *z *= s;
        }
    }
    let mut f = SampledField::new(
        grid.dt,
        samples,
        polarization_vector(p.theta, p.phi),
        p.carrier,
    );
    f.end_time = f.end_time.min(p.duration);
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(duration: f64) -> CrabPulse {
        CrabPulse::unit_coefficients(
            crab_frequencies(19, 12100.0, 12600.0),
            duration,
            12350.0,
            1e5,
        )
    }

    #[test]
    fn frequency_grid() {
        let w = crab_frequencies(19, 12100.0, 12600.0);
        assert_eq!(w.len(), 19);
        assert_eq!(w[0], 12100.0);
        assert_eq!(w[18], 12600.0);
    }

    #[test]
    fn zero_coefficients_give_zero_field() {
        let mut p = base(200.0);
        p.a.iter_mut().for_each(|x| *x = 0.0);
        p.b.iter_mut().for_each(|x| *x = 0.0);
        let f = synthesize_crab(&p, &TimeGrid::covering(300.0, 0.25));
        assert!(f.samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_tone_has_constant_modulus_inside_window() {
        let mut p = base(100.0);
        p.a.iter_mut().for_each(|x| *x = 0.0);
        p.b.iter_mut().for_each(|x| *x = 0.0);
        p.a[0] = 1.0;
        let f = synthesize_crab(&p, &TimeGrid::covering(150.0, 0.25));
        for (j, z) in f.samples.iter().enumerate() {
            let t = j as f64 * 0.25;
            if t <= 100.0 {
                assert!((z.norm() - 1e5).abs() < 1e-6);
            } else {
                assert_eq!(z.norm(), 0.0);
            }
        }
        assert_eq!(f.end_time, 100.0);
    }

    #[test]
    fn sampled_values_match_envelope() {
        let p = base(500.0);
        let f = synthesize_crab(&p, &TimeGrid::covering(500.0, 0.25));
        for (j, z) in f.samples.iter().enumerate() {
            assert!((z - p.envelope(j as f64 * 0.25)).norm() < 1e-9 * 1e5);
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let p = base(350.0);
        let g = TimeGrid::covering(350.0, 0.25);
        assert_eq!(synthesize_crab(&p, &g), synthesize_crab(&p, &g));
    }
}
