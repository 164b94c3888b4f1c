use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::function::erf::{erf, erf_inv};

use exciton_control::optimize::gaussian_pump;
use exciton_control::pulse::*;
use exciton_control::units::{sigma_from_fwhm, CM_TO_RAD_PER_FS};

fn fwhm(field: &SampledField, f: impl Fn(Complex64) -> f64) -> f64 {
    let y: Vec<f64> = field.active().iter().map(|z| f(*z)).collect();
    let peak = y.iter().cloned().fold(0.0, f64::max);
    let half = 0.5 * peak;
    let first = y.iter().position(|&v| v >= half).unwrap();
    let last = y.iter().rposition(|&v| v >= half).unwrap();
    let cross =
        |i: usize, j: usize| i as f64 + (half - y[i]) / (y[j] - y[i]) * (j as f64 - i as f64);
    (cross(last, last + 1) - cross(first - 1, first)) * field.dt
}

#[test]
fn unchirped_pump_is_55_fs_wide() {
    let f = synthesize_chirp(&gaussian_pump(0)).unwrap();
    let amplitude = fwhm(&f, |z| z.norm());
    assert!(
        (amplitude - 55.0).abs() < 0.05 * 55.0,
        "amplitude FWHM {amplitude}"
    );
    // σ_t = 1/σ_ω for a Gaussian amplitude spectrum.
    let expected = 2.0 * (2.0 * 2f64.ln()).sqrt() / (225.0 * CM_TO_RAD_PER_FS);
    assert!((amplitude - expected).abs() < 0.01 * expected);
    let intensity = fwhm(&f, |z| z.norm_sqr());
    assert!((intensity - expected / 2f64.sqrt()).abs() < 0.01 * expected);
}

#[test]
fn chirp_is_phase_only_and_energy_preserving() {
    let a = gaussian_pump(4);
    let mut b = a.clone();
    b.coefficients = vec![3.0, -1.2, 0.4, 0.1];
    for (x, y) in a.spectrum().iter().zip(b.spectrum()) {
        assert!((x.norm() - y.norm()).abs() < 1e-12);
    }
    let energy = |f: &SampledField| f.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * f.dt;
    let (ra, rb) = (a.raw_field(), b.raw_field());
    assert!((energy(&ra) - energy(&rb)).abs() < 1e-10 * energy(&ra));
    let (ta, tb) = (synthesize_chirp(&a).unwrap(), synthesize_chirp(&b).unwrap());
    let active = |f: &SampledField| f.active().iter().map(|z| z.norm_sqr()).sum::<f64>() * f.dt;
    assert!((active(&ta) - active(&tb)).abs() < 0.03 * active(&ta));
    assert!(active(&ta) <= energy(&ra) && active(&ta) > 0.97 * energy(&ra));
    assert!(ta.peak_amplitude() > tb.peak_amplitude());
}

#[test]
fn gaussian_truncation_matches_closed_form_quantile() {
    let dt = 0.05;
    let sigma_t: f64 = 20.0;
    let samples: Vec<Complex64> = (0..8001)
        .map(|j| {
            let t = j as f64 * dt - 200.0;
            Complex64::new((-t * t / (2.0 * sigma_t * sigma_t)).exp(), 0.0)
        })
        .collect();
    let f = SampledField::new(dt, samples, Vector3::x(), 12350.0);
    let rule = TruncationRule::default();
    let out = truncate_pulse(&f, &rule).unwrap();
    // Support after thresholding: |t| ≤ a with e^{−a²/2σ²} = threshold.
    let a = sigma_t * (2.0 * (1.0 / rule.threshold).ln()).sqrt();
    let s = sigma_t * 2f64.sqrt();
    let t99 = s * erf_inv(rule.fraction * 2.0 * erf(a / s) - erf(a / s));
    let supported = out.samples.len() as f64 * dt;
    assert!(
        (supported - 2.0 * a).abs() < 2.0 * dt,
        "support {supported} vs {}",
        2.0 * a
    );
    let first_time = -200.0
        + (f.samples
            .iter()
            .position(|z| z.norm() >= rule.threshold)
            .unwrap() as f64)
            * dt;
    let end = first_time + out.end_time;
    assert!((end - t99).abs() < 2.0 * dt, "final time {end} vs {t99}");
    assert_eq!(truncate_pulse(&out, &rule).unwrap(), out);
}

#[test]
fn analytic_gaussian_wigner() {
    let dt = 0.0625;
    let sigma_t = 15.0;
    let amp = 2.0;
    let n = 3201;
    let t0 = 100.0;
    let samples: Vec<Complex64> = (0..n)
        .map(|j| {
            let t = j as f64 * dt - t0;
            Complex64::new(amp * (-t * t / (2.0 * sigma_t * sigma_t)).exp(), 0.0)
        })
        .collect();
    let f = SampledField::new(dt, samples, Vector3::x(), 12350.0);
    let w = wigner_spectrogram(&f, Some((12000.0, 12700.0)));
    let peak = w.max();
    assert!(w.min() >= -1e-10 * peak, "min {}", w.min() / peak);
    let exact = |t: f64, nu: f64| {
        let omega = (nu - 12350.0) * CM_TO_RAD_PER_FS;
        amp * amp
            * (-t * t / (sigma_t * sigma_t)).exp()
            * 2.0
            * sigma_t
            * PI.sqrt()
            * (-sigma_t * sigma_t * omega * omega).exp()
    };
    let mut worst: f64 = 0.0;
    for (i, t) in w.times.iter().enumerate().step_by(40) {
        for (p, nu) in w.frequencies.iter().enumerate() {
            worst = worst.max((w.values[i][p] - exact(t - t0, *nu)).abs());
        }
    }
    assert!(worst < 1e-6 * peak, "max deviation {}", worst / peak);
}

fn marginal_errors(field: &SampledField) -> (f64, f64) {
    let band = (field.carrier - 2000.0, field.carrier + 2000.0);
    let w = wigner_spectrogram(field, Some(band));
    let intensity: Vec<f64> = field.active().iter().map(|z| z.norm_sqr()).collect();
    let scale_t = intensity.iter().cloned().fold(0.0, f64::max);
    let time = w
        .time_marginal()
        .iter()
        .zip(&intensity)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale_t;
    let spectrum = spectral_intensity(field, &w.frequencies);
    let scale_w = spectrum.iter().cloned().fold(0.0, f64::max);
    let freq = w
        .frequency_marginal()
        .iter()
        .zip(&spectrum)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale_w;
    (time, freq)
}

#[test]
fn wigner_marginals_for_synthesized_pulses() {
    let dt = 0.03125;
    let mut crab =
        CrabPulse::unit_coefficients(crab_frequencies(19, 12100.0, 12600.0), 200.0, 12350.0, 1e5);
    crab.a[3] = -0.4;
    crab.b[11] = 2.5;
    let fields = [
        synthesize_crab(&crab, &TimeGrid::covering(200.0, dt)),
        {
            let mut p = gaussian_pump(3);
            p.coefficients = vec![0.8, -0.3, 0.1];
            p.max_dt = 2.0 * dt;
            synthesize_chirp(&p).unwrap()
        },
        {
            let mut p = gaussian_pump(0);
            p.max_dt = dt;
            synthesize_chirp(&p).unwrap()
        },
    ];
    assert!(
        fields[1].end_time < (fields[1].len() - 1) as f64 * fields[1].dt,
        "chirped pulse is masked by truncation"
    );
    for f in &fields {
        assert!(f.active().len() < 20_000, "{}", f.active().len());
        let (time, freq) = marginal_errors(f);
        assert!(time < 1e-6, "time marginal {time:e}");
        assert!(freq < 1e-6, "frequency marginal {freq:e}");
    }
}

#[test]
fn coarse_sampling_breaks_the_frequency_marginal_only() {
    let crab =
        CrabPulse::unit_coefficients(crab_frequencies(19, 12100.0, 12600.0), 200.0, 12350.0, 1e5);
    let f = synthesize_crab(&crab, &TimeGrid::covering(200.0, 2.0));
    let (time, freq) = marginal_errors(&f);
    assert!(time < 1e-10);
    assert!(freq > 1e-6);
}

#[test]
fn crab_synthesis_is_reproducible() {
    let p =
        CrabPulse::unit_coefficients(crab_frequencies(19, 12100.0, 12600.0), 350.0, 12350.0, 1e5);
    let g = TimeGrid::covering(350.0, FIELD_DT);
    let a = synthesize_crab(&p, &g);
    let b = synthesize_crab(&p.clone(), &g);
    assert_eq!(a, b);
    assert!(a
        .samples
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite()));
    assert!(a.value(a.len() + 3) == Complex64::new(0.0, 0.0));
}

#[test]
fn fwhm_helpers_are_inverse() {
    assert!((sigma_from_fwhm(55.0) * 2.0 * (2.0 * 2f64.ln()).sqrt() - 55.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn polarization_is_unit(theta in -10.0f64..10.0, phi in -10.0f64..10.0) {
        prop_assert!((polarization_vector(theta, phi).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chirp_modulus_is_independent_of_coefficients(c in proptest::collection::vec(-20.0f64..20.0, 1..6)) {
        let a = gaussian_pump(c.len());
        let mut b = a.clone();
        b.coefficients = c;
        for (x, y) in a.spectrum().iter().zip(b.spectrum()) {
            prop_assert!((x.norm() - y.norm()).abs() < 1e-12);
        }
    }
}
