use super::field::SampledField;
use crate::error::{Error, Result};

/// Quantity whose running integral sets the final time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationMeasure {
    /// |Ẽ(t)|
    Amplitude,
    /// |Ẽ(t)|²
    Intensity,
}

/// Two-step truncation: drop samples below `threshold`·max|Ẽ|, then end the pulse
/// where the running integral reaches `fraction` of its total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRule {
    pub threshold: f64,
    pub fraction: f64,
    pub measure: TruncationMeasure,
}

impl Default for TruncationRule {
    fn default() -> Self {
        Self {
            threshold: 0.005,
            fraction: 0.99,
            measure: TruncationMeasure::Amplitude,
        }
    }
}

/// Apply `rule` to `field`.
///
/// Samples below threshold are zeroed and leading/trailing zeros removed (the time
/// origin moves to the first retained sample). The final time is located on the
/// piecewise-linear running integral (trapezoid rule); samples after it are kept but
/// masked through `end_time`, which makes the operation idempotent.
pub fn truncate_pulse(field: &SampledField, rule: &TruncationRule) -> Result<SampledField> {
    let max = field.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 || !max.is_finite() {
        return Err(Error::ZeroField);
    }
    let cut = rule.threshold * max;
    let mut samples = field.samples.clone();
    for z in samples.iter_mut() {
        if z.norm() < cut {
            *z = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    let first = samples.iter().position(|z| z.norm() > 0.0).unwrap_or(0);
    let last = samples.iter().rposition(|z| z.norm() > 0.0).unwrap_or(0);
    let samples: Vec<_> = samples[first..=last].to_vec();

    let weight = |z: &num_complex::Complex64| match rule.measure {
        TruncationMeasure::Amplitude => z.norm(),
        TruncationMeasure::Intensity => z.norm_sqr(),
    };
    let w: Vec<f64> = samples.iter().map(weight).collect();
    let mut cumulative = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for pair in w.windows(2) {
        acc += 0.5 * (pair[0] + pair[1]) * field.dt;
        cumulative.push(acc);
    }
    let total = acc;
    let end_time = if total == 0.0 {
        0.0
    } else {
        let goal = rule.fraction * total;
        let k = cumulative
            .iter()
            .position(|c| *c >= goal)
            .unwrap_or(cumulative.len() - 1);
        if k == 0 {
            0.0
        } else {
            let (c0, c1) = (cumulative[k - 1], cumulative[k]);
            let frac = if c1 > c0 {
                (goal - c0) / (c1 - c0)
            } else {
                1.0
            };
            ((k - 1) as f64 + frac) * field.dt
        }
    };
    let mut out = SampledField::new(field.dt, samples, field.polarization, field.carrier);
    out.end_time = end_time;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use num_complex::Complex64;

    fn field(values: Vec<f64>) -> SampledField {
        SampledField::new(
            0.5,
            values.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            Vector3::x(),
            0.0,
        )
    }

    #[test]
    fn rectangle_ends_at_99_percent_of_support() {
        let f = field(vec![2.0; 201]);
        let t = truncate_pulse(&f, &TruncationRule::default()).unwrap();
        assert!((t.end_time - 0.99 * 100.0).abs() < 1e-9);
    }

    #[test]
    fn isolated_small_spike_removed() {
        let mut v = vec![0.0; 400];
        for (j, x) in v.iter_mut().enumerate().take(200).skip(100) {
            *x = 1.0 + 0.1 * (j as f64).sin();
        }
        v[350] = 0.004;
        let t = truncate_pulse(&field(v), &TruncationRule::default()).unwrap();
        assert!(t.samples.iter().all(|z| z.norm() == 0.0 || z.norm() > 0.5));
        assert_eq!(t.samples.len(), 100);
    }

    #[test]
    fn zero_field_rejected() {
        assert!(matches!(
            truncate_pulse(&field(vec![0.0; 10]), &TruncationRule::default()),
            Err(Error::ZeroField)
        ));
    }

    #[test]
    fn idempotent_on_example() {
        let v: Vec<f64> = (0..500)
            .map(|j| (-(j as f64 - 200.0).powi(2) / 800.0).exp())
            .collect();
        let rule = TruncationRule::default();
        let once = truncate_pulse(&field(v), &rule).unwrap();
        let twice = truncate_pulse(&once, &rule).unwrap();
        assert_eq!(once, twice);
    }
}
