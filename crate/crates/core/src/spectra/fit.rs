use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};

/// A e^{−a t} + B e^{−b t} + C with a ≤ b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleExponential {
    pub a_amplitude: f64,
    pub a_rate: f64,
    pub b_amplitude: f64,
    pub b_rate: f64,
    pub constant: f64,
}

impl DoubleExponential {
    pub fn value(&self, t: f64) -> f64 {
        self.a_amplitude * (-self.a_rate * t).exp()
            + self.b_amplitude * (-self.b_rate * t).exp()
            + self.constant
    }
}

/// Evaluate a double exponential on a grid.
pub fn double_exponential(fit: &DoubleExponential, times: &[f64]) -> Vec<f64> {
    times.iter().map(|&t| fit.value(t)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatAnalysis {
    pub fit: DoubleExponential,
    /// signal − fit.
    pub residual: Vec<f64>,
    /// Peak-to-peak residual.
    pub beat_magnitude: f64,
    pub rms_residual: f64,
}

impl BeatAnalysis {
    /// Amplitude of the sinusoid with the same RMS as the residual.
    pub fn amplitude(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.rms_residual
    }
}

const MIN_SAMPLES: usize = 50;
const MIN_SPAN: f64 = 1000.0;
const MAX_ITERATIONS: usize = 300;

/// Least-squares double-exponential fit (amplitudes by linear projection, log-rates by
/// Levenberg-Marquardt from a grid of starts); the residual carries the beats.
///
/// Rates are confined to [10⁻³/span, 1/Δt_min].
///
/// Requires at least 50 samples spanning at least 1 ps.
pub fn beat_analysis(times: &[f64], values: &[f64]) -> Result<BeatAnalysis> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    let n = times.len();
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: format!("need >= {MIN_SAMPLES} samples, got {n}"),
        });
    }
    let t0 = times[0];
    let span = times[n - 1] - t0;
    if !(span >= MIN_SPAN) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: format!("need ascending delays spanning >= {MIN_SPAN} fs"),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite signal".into()));
    }
    let ts: Vec<f64> = times.iter().map(|t| t - t0).collect();
    let y = DVector::from_column_slice(values);
    let scale = values
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    let min_step = ts
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let bounds = ((1e-3 / span).ln(), (1.0 / min_step).ln());
    let grid: Vec<f64> = (0..8)
        .map(|k| 0.5f64.ln() - span.ln() + k as f64 * 4.0f64.ln())
        .map(|g| g.clamp(bounds.0, bounds.1))
        .collect();
    let mut best: Option<(f64, Vector2<f64>)> = None;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let p = levenberg_marquardt(&ts, &y, Vector2::new(grid[i], grid[j]), bounds);
            let sse = projected(&ts, &y, &p).1.norm_squared();
            if sse.is_finite() && best.is_none_or(|(b, _)| sse < b) {
                best = Some((sse, p));
            }
        }
    }
    let (_, p) =
        best.ok_or_else(|| Error::FitFailed("no start converged to a finite fit".into()))?;
    let (coef, r) = projected(&ts, &y, &p);
    let (ra, rb) = (p[0].exp(), p[1].exp());
    if !(ra.is_finite() && rb.is_finite()) || coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::FitFailed(format!(
            "fit diverged: rates {ra:e}, {rb:e}, coefficients {:?}",
            coef.as_slice()
        )));
    }
    let mut fit = DoubleExponential {
        a_amplitude: coef[0] * (ra * t0).exp(),
        a_rate: ra,
        b_amplitude: coef[1] * (rb * t0).exp(),
        b_rate: rb,
        constant: coef[2],
    };
    if fit.a_rate > fit.b_rate {
        std::mem::swap(&mut fit.a_rate, &mut fit.b_rate);
        std::mem::swap(&mut fit.a_amplitude, &mut fit.b_amplitude);
    }
    let residual: Vec<f64> = (-r).iter().copied().collect();
    let hi = residual.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = residual.iter().copied().fold(f64::INFINITY, f64::min);
    let rms = (residual.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    if !(rms <= scale * 10.0) {
        return Err(Error::FitFailed(format!(
            "residual rms {rms:e} exceeds signal scale {scale:e}"
        )));
    }
    Ok(BeatAnalysis {
        fit,
        residual,
        beat_magnitude: hi - lo,
        rms_residual: rms,
    })
}

/// Linear coefficients for fixed log-rates and the residual fit − y.
fn projected(ts: &[f64], y: &DVector<f64>, p: &Vector2<f64>) -> (DVector<f64>, DVector<f64>) {
    let (a, b) = (p[0].exp(), p[1].exp());
    let x = DMatrix::from_fn(ts.len(), 3, |i, j| match j {
        0 => (-a * ts[i]).exp(),
        1 => (-b * ts[i]).exp(),
        _ => 1.0,
    });
    let svd = x.clone().svd(true, true);
    let eps = 1e-13 * svd.singular_values.max();
    let coef = svd.solve(y, eps).unwrap_or_else(|_| DVector::zeros(3));
    let r = x * &coef - y;
    (coef, r)
}

fn levenberg_marquardt(
    ts: &[f64],
    y: &DVector<f64>,
    mut p: Vector2<f64>,
    bounds: (f64, f64),
) -> Vector2<f64> {
    let mut r = projected(ts, y, &p).1;
    let mut sse = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let h = 1e-6;
        let mut jac = DMatrix::zeros(ts.len(), 2);
        for k in 0..2 {
            let mut q = p;
            q[k] += if p[k] + h > bounds.1 { -h } else { h };
            let rq = projected(ts, y, &q).1;
            jac.set_column(k, &((rq - &r) / (q[k] - p[k])));
        }
        let jtj: Matrix2<f64> = (jac.transpose() * &jac)
            .fixed_view::<2, 2>(0, 0)
            .into_owned();
        let jtr: Vector2<f64> = (jac.transpose() * &r).fixed_view::<2, 1>(0, 0).into_owned();
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj;
            a[(0, 0)] += lambda * jtj[(0, 0)].max(1e-300);
            a[(1, 1)] += lambda * jtj[(1, 1)].max(1e-300);
            let Some(delta) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let q = (p + delta.map(|d| d.clamp(-2.0, 2.0))).map(|v| v.clamp(bounds.0, bounds.1));
            let rq = projected(ts, y, &q).1;
            let s = rq.norm_squared();
            if s.is_finite() && s < sse {
                let rel = (sse - s) / sse.max(f64::MIN_POSITIVE);
                p = q;
                r = rq;
                sse = s;
                lambda = (lambda / 3.0).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    p
}
