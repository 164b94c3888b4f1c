use num_complex::Complex64;
use rustfft::FftPlanner;

use super::field::SampledField;
use crate::units::CM_TO_RAD_PER_FS;

/// Time-frequency distribution W(t, ω) on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// Row times, fs.
    pub times: Vec<f64>,
    /// Column frequencies (absolute, cm⁻¹), ascending.
    pub frequencies: Vec<f64>,
    /// `values[i][p]` = W(times[i], frequencies[p]).
    pub values: Vec<Vec<f64>>,
    /// Spacing of `times`, fs.
    pub dt: f64,
    /// Column spacing in angular frequency, fs⁻¹.
    pub d_omega: f64,
    /// ∫ W dω/2π over the full band for each row.
    time_marginal: Vec<f64>,
}

impl Spectrogram {
    /// ∫ W dω/2π for each row, over the full band (including cropped columns).
    pub fn time_marginal(&self) -> &[f64] {
        &self.time_marginal
    }

    /// ∫ W dt for each retained column.
    pub fn frequency_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.frequencies.len()];
        for row in &self.values {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * self.dt;
            }
        }
        out
    }

    /// Smallest value over the grid.
    pub fn min(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest value over the grid.
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Discrete Wigner spectrogram of the active part of `field`.
///
/// Rows sit on the sample times t_k = k·dt and
/// W_k(ω) = 2dt Σ_m Ẽ*_{k−m} Ẽ_{k+m} e^{iω·2m·dt}, with samples outside the pulse
/// taken as zero. The lag kernel is transformed over its full band |ω| < π/(2dt) with
/// M ≥ N points, so Σ_p W Δω/2π = |Ẽ_k|² holds exactly. Summing over rows gives
/// |E(ω)|² + |E(ω + π/dt)|², with E(ω) = dt Σ_k Ẽ_k e^{iωk·dt}; the alias term decays
/// with dt², so the field must be sampled finely for the frequency marginal to hold.
///
/// `band` (absolute cm⁻¹) restricts the stored columns; marginals over rows still
/// use the full band.
pub fn wigner_spectrogram(field: &SampledField, band: Option<(f64, f64)>) -> Spectrogram {
    let f = field.active();
    let n = f.len();
    let dt = field.dt;
    let m_len = fft_size(n.max(1));
    let d_omega = std::f64::consts::PI / (dt * m_len as f64);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(m_len);
    let half = m_len / 2;
    let freq_of = |p: usize| {
        let signed = if p >= half {
            p as f64 - m_len as f64
        } else {
            p as f64
        };
        field.carrier + signed * d_omega / CM_TO_RAD_PER_FS
    };
    // Column order: p = M/2.., then 0..M/2, so frequencies ascend.
    let order: Vec<usize> = (half..m_len)
        .chain(0..half)
        .filter(|&p| band.is_none_or(|(lo, hi)| (lo..=hi).contains(&freq_of(p))))
        .collect();
    let mut kernel = vec![Complex64::new(0.0, 0.0); m_len];
    let mut values = Vec::with_capacity(n);
    let mut time_marginal = Vec::with_capacity(n);
    for k in 0..n {
        kernel
            .iter_mut()
            .for_each(|z| *z = Complex64::new(0.0, 0.0));
        let reach = k.min(n - 1 - k);
        for m in 0..=reach {
            kernel[m] = f[k - m].conj() * f[k + m];
            if m > 0 {
                kernel[m_len - m] = f[k + m].conj() * f[k - m];
            }
        }
        fft.process(&mut kernel);
        let total: f64 = kernel.iter().map(|z| 2.0 * dt * z.re).sum();
        time_marginal.push(total * d_omega / (2.0 * std::f64::consts::PI));
        values.push(order.iter().map(|&p| 2.0 * dt * kernel[p].re).collect());
    }
    Spectrogram {
        times: (0..n).map(|k| k as f64 * dt).collect(),
        frequencies: order.iter().map(|&p| freq_of(p)).collect(),
        values,
        dt,
        d_omega,
        time_marginal,
    }
}

fn fft_size(n: usize) -> usize {
    (n..)
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

/// |dt Σ_k Ẽ_k e^{iωk·dt}|² at absolute frequencies `frequencies` (cm⁻¹).
pub fn spectral_intensity(field: &SampledField, frequencies: &[f64]) -> Vec<f64> {
    let f = field.active();
    frequencies
        .iter()
        .map(|w| {
            let step =
                Complex64::from_polar(1.0, (w - field.carrier) * CM_TO_RAD_PER_FS * field.dt);
            let mut ph = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(0.0, 0.0);
            for z in f {
                sum += z * ph;
                ph *= step;
            }
            (sum * field.dt).norm_sqr()
        })
        .collect()
}

/// Direct-summation Wigner function on explicit time and frequency grids
/// (frequencies absolute, cm⁻¹), using lags on the sample grid.
pub fn wigner_on_grid(field: &SampledField, times: &[f64], frequencies: &[f64]) -> Vec<Vec<f64>> {
    let active = field.active();
    let dt = field.dt;
    let n = active.len() as isize;
    let at = |j: isize| {
        if j >= 0 && j < n {
            active[j as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    times
        .iter()
        .map(|t| {
            let k = (t / dt).round() as isize;
            frequencies
                .iter()
                .map(|w| {
                    let omega = (w - field.carrier) * CM_TO_RAD_PER_FS;
                    let mut sum = Complex64::new(0.0, 0.0);
                    for m in -n..=n {
                        let v = at(k - m).conj() * at(k + m);
                        if v.norm_sqr() > 0.0 {
                            sum += v * Complex64::from_polar(1.0, omega * 2.0 * m as f64 * dt);
                        }
                    }
                    2.0 * dt * sum.re
                })
                .collect()
        })
        .collect()
}
