use std::time::Instant;

use approx::assert_abs_diff_eq;
use exciton_control::bath::{apply_lindblad, BathSpec, Dissipator};
use exciton_control::dynamics::{
    interaction_operator, normalized_excited_state, DensityMatrix, Propagator,
};
use exciton_control::linalg::{relative_frobenius, CMatrix, RMatrix};
use exciton_control::model::{ExcitonModel, Manifold};
use exciton_control::pulse::{
    crab_frequencies, synthesize_crab, CrabPulse, SampledField, TimeGrid, FIELD_DT,
};
use exciton_control::units::{CM_TO_RAD_PER_FS, DEBYE_VOLT_PER_METER_TO_CM};
use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn monomer(energy: f64, dipole: f64) -> ExcitonModel {
    ExcitonModel::new(
        vec![energy],
        RMatrix::zeros(1, 1),
        vec![Vector3::new(dipole, 0.0, 0.0)],
    )
    .unwrap()
}

fn gaussian(t: f64, center: f64, width: f64, amp: f64, chirp: f64) -> Complex64 {
    let x = (t - center) / width;
    Complex64::from_polar(amp * (-0.5 * x * x).exp(), chirp * x * x)
}

fn gaussian_field(amp: f64, polarization: Vector3<f64>, carrier: f64) -> SampledField {
    let n = 1201;
    let samples = (0..n)
        .map(|j| gaussian(j as f64 * FIELD_DT, 150.0, 25.0, amp, 0.3))
        .collect();
    SampledField::new(FIELD_DT, samples, polarization, carrier)
}

#[test]
fn zero_field_keeps_ground_state() {
    let p = Propagator::new(&ExcitonModel::fmo(), &BathSpec::fmo_default()).unwrap();
    let f = SampledField::new(FIELD_DT, vec![c(0.0); 2001], Vector3::x(), 12350.0);
    let rec: Vec<f64> = (0..=20).map(|k| 100.0 * k as f64).collect();
    let tr = p.propagate(&f, None, &rec).unwrap();
    let g = DensityMatrix::ground(p.dim());
    for s in &tr.states {
        assert_eq!(s.matrix, g.matrix);
    }
}

#[test]
fn resonant_two_level_rabi() {
    let d = 5.0;
    let model = monomer(12000.0, d);
    let amp = 3.0e7;
    let omega = amp * d * DEBYE_VOLT_PER_METER_TO_CM * CM_TO_RAD_PER_FS;
    let f = SampledField::new(FIELD_DT, vec![c(amp); 2001], Vector3::x(), 12000.0);
    let rec: Vec<f64> = (0..=100).map(|k| 5.0 * k as f64).collect();
    for bath in [BathSpec::uncoupled()] {
        let p = Propagator::new(&model, &bath).unwrap();
        let tr = p.propagate(&f, None, &rec).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.excited_population) {
            let exact = (omega * t).sin().powi(2);
            assert!((x - exact).abs() < 1e-6, "t={t}: {x} vs {exact}");
        }
        let (end, t) = p.pulse_end_state(&f).unwrap();
        assert_abs_diff_eq!(
            end.excited_population(),
            (omega * t).sin().powi(2),
            epsilon = 1e-6
        );
    }
}

#[test]
fn interaction_operator_examples() {
    let m = ExcitonModel::fmo();
    let z = interaction_operator(&m, Manifold::Single, &Vector3::x(), c(0.0));
    assert!(z.iter().all(|v| v.norm() == 0.0));

    let mono = monomer(12000.0, 2.0);
    let v = interaction_operator(
        &mono,
        Manifold::Single,
        &Vector3::y(),
        Complex64::new(1e6, 2e6),
    );
    assert!(v.iter().all(|v| v.norm() == 0.0));
    let e = Complex64::new(3e6, -4e6);
    let v = interaction_operator(&mono, Manifold::Single, &Vector3::x(), e);
    let mag = 2.0 * 5e6 * DEBYE_VOLT_PER_METER_TO_CM;
    assert_abs_diff_eq!(v[(1, 0)].norm(), mag, epsilon = 1e-12 * mag);
    assert_eq!(v[(0, 1)], v[(1, 0)].conj());
    assert_eq!(v[(0, 0)], c(0.0));

    let v2 = interaction_operator(&m, Manifold::SingleDouble, &Vector3::z(), e);
    assert_eq!(v2.nrows(), 29);
    assert!(relative_frobenius(&v2, &v2.adjoint()) < 1e-15);
}

#[test]
fn normalized_state_is_scale_invariant() {
    let p = Propagator::new(&ExcitonModel::fmo(), &BathSpec::fmo_default()).unwrap();
    let f = gaussian_field(3e6, Vector3::new(0.2, 0.5, 0.8).normalize(), 12350.0);
    let (a, _) = p.pulse_end_state(&f).unwrap();
    let (b, _) = p.pulse_end_state(&f.clone().scaled(2.0)).unwrap();
    let ra = normalized_excited_state(&a).unwrap();
    let rb = normalized_excited_state(&b).unwrap();
    assert!(relative_frobenius(&ra.matrix, &rb.matrix) < 1e-3);
    assert!((ra.trace().re - 1.0).abs() < 1e-12);
    let x = b.excited_population() / a.excited_population();
    assert!((x / 4.0 - 1.0).abs() < 0.01, "ratio {x}");
    assert!(normalized_excited_state(&DensityMatrix::ground(8)).is_err());
}

#[test]
fn thermalizes_to_boltzmann() {
    let p = Propagator::new(&ExcitonModel::fmo(), &BathSpec::fmo_default()).unwrap();
    let target = Dissipator::boltzmann(&p.energies()[1..], 77.0);
    let step = p.free_step(20_000.0, 12350.0);
    for a in 1..8 {
        let mut rho: Vec<Complex64> = DensityMatrix::pure_state(8, a)
            .matrix
            .transpose()
            .as_slice()
            .to_vec();
        step.apply_flat(&mut rho, 8);
        for b in 1..8 {
            assert!((rho[b * 8 + b].re - target[b - 1]).abs() < 1e-3);
        }
    }
    let d = p.dissipator();
    let kt = exciton_control::units::thermal_energy(77.0);
    let e = p.energies();
    for a in 1..8 {
        for b in 1..8 {
            if a != b && d.rate(a, b) > 0.0 {
                let ratio = d.rate(a, b) / d.rate(b, a);
                let db = (-(e[b] - e[a]) / kt).exp();
                assert!((ratio / db - 1.0).abs() < 1e-8);
            }
        }
    }
}

/// Fine-step reference integrator built from explicit Lindblad operators and an
/// analytic field.
fn reference_state(
    p: &Propagator,
    model: &ExcitonModel,
    pol: &Vector3<f64>,
    amp: f64,
    carrier: f64,
    t_end: f64,
) -> CMatrix {
    let u = p.transform().map(c);
    let e = p.energies();
    let h0 = CMatrix::from_fn(8, 8, |a, b| {
        if a == b && a > 0 {
            c(e[a] - carrier)
        } else {
            c(0.0)
        }
    });
    let ops = p.dissipator().lindblad_operators();
    let rhs = |t: f64, rho: &CMatrix| -> CMatrix {
        let v_site = interaction_operator(
            model,
            Manifold::Single,
            pol,
            gaussian(t, 150.0, 25.0, amp, 0.3),
        );
        let h = &h0 + u.adjoint() * v_site * &u;
        let comm = &h * rho - rho * &h;
        comm * Complex64::new(0.0, -CM_TO_RAD_PER_FS) + apply_lindblad(&ops, rho)
    };
    let mut rho = DensityMatrix::ground(8).matrix;
    let h = 0.05;
    let n = (t_end / h).round() as usize;
    for k in 0..n {
        let t = k as f64 * h;
        let k1 = rhs(t, &rho);
        let k2 = rhs(t + 0.5 * h, &(&rho + &k1 * c(0.5 * h)));
        let k3 = rhs(t + 0.5 * h, &(&rho + &k2 * c(0.5 * h)));
        let k4 = rhs(t + h, &(&rho + &k3 * c(h)));
        rho += (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0);
    }
    rho
}

#[test]
fn matches_explicit_lindblad_reference() {
    let model = ExcitonModel::fmo();
    let p = Propagator::new(&model, &BathSpec::fmo_default()).unwrap();
    let pol = Vector3::new(0.3, -0.6, 0.74).normalize();
    let f = gaussian_field(4e6, pol, 12350.0);
    let (rho, t_end) = p.pulse_end_state(&f).unwrap();
    let reference = reference_state(&p, &model, &pol, 4e6, 12350.0, t_end);
    let ours = rho.excited_block();
    let theirs = reference.view((1, 1), (7, 7)).into_owned();
    let err = relative_frobenius(&ours, &theirs);
    assert!(err < 1e-6, "relative error {err}");

    let tr = p.propagate(&f, None, &[t_end, t_end + 400.0]).unwrap();
    let reference = {
        let ops = p.dissipator().lindblad_operators();
        let e = p.energies();
        let h0 = CMatrix::from_fn(8, 8, |a, b| {
            if a == b && a > 0 {
                c(e[a] - 12350.0)
            } else {
                c(0.0)
            }
        });
        let mut r = reference;
        let h = 0.5;
        for _ in 0..800 {
            let rhs = |rho: &CMatrix| {
                (&h0 * rho - rho * &h0) * Complex64::new(0.0, -CM_TO_RAD_PER_FS)
                    + apply_lindblad(&ops, rho)
            };
            let k1 = rhs(&r);
            let k2 = rhs(&(&r + &k1 * c(0.5 * h)));
            let k3 = rhs(&(&r + &k2 * c(0.5 * h)));
            let k4 = rhs(&(&r + &k3 * c(h)));
            r += (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0);
        }
        r
    };
    let err = relative_frobenius(
        &tr.states[1].excited_block(),
        &reference.view((1, 1), (7, 7)).into_owned(),
    );
    assert!(err < 1e-6, "free evolution relative error {err}");
}

#[test]
fn rotating_frame_shift_is_invisible() {
    let p = Propagator::new(&ExcitonModel::fmo(), &BathSpec::fmo_default()).unwrap();
    let f = gaussian_field(4e6, Vector3::new(1.0, 1.0, 1.0).normalize(), 12350.0);
    let rec = [300.0, 800.0];
    let a = p.propagate(&f, None, &rec).unwrap().site_populations();
    let b = p
        .propagate(&f.shift_frame(40.0), None, &rec)
        .unwrap()
        .site_populations();
    for (ra, rb) in a.iter().zip(&b) {
        let scale: f64 = ra.iter().skip(1).sum();
        let worst = ra
            .iter()
            .zip(rb)
            .skip(1)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        println!("frame shift: max deviation {worst:e}, excitation {scale:e}");
        assert!(worst < 1e-8 * scale);
    }
}

#[test]
fn fmo_propagation_cost() {
    let p = Propagator::new(&ExcitonModel::fmo(), &BathSpec::fmo_default()).unwrap();
    let mut crab =
        CrabPulse::unit_coefficients(crab_frequencies(19, 12100.0, 12600.0), 500.0, 12350.0, 1e5);
    crab.theta = 0.9;
    crab.phi = 0.7;
    let f = synthesize_crab(&crab, &TimeGrid::covering(500.0, FIELD_DT));
    let rec: Vec<f64> = (0..=100).map(|k| 500.0 + 10.0 * k as f64).collect();
    let t0 = Instant::now();
    let reps = 10;
    for _ in 0..reps {
        p.propagate(&f, None, &rec).unwrap();
    }
    let per = t0.elapsed().as_secs_f64() / reps as f64;
    println!("one propagation: {:.2} ms", per * 1e3);
    assert!(per < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]
    #[test]
    fn random_pulses_stay_physical(seed in 0u64..1000, duration in 100.0f64..500.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let freqs = crab_frequencies(19, 12100.0, 12600.0);
        let mut crab = CrabPulse::unit_coefficients(freqs, duration, 12350.0, 1e5);
        for v in crab.a.iter_mut().chain(crab.b.iter_mut()) {
            *v = rng.random_range(-3.0..3.0);
        }
        crab.theta = rng.random_range(0.0..std::f64::consts::PI);
        crab.phi = rng.random_range(0.0..std::f64::consts::TAU);
        let f = synthesize_crab(&crab, &TimeGrid::covering(duration, FIELD_DT));
        let p = Propagator::new(&ExcitonModel::fmo(), &BathSpec::fmo_default()).unwrap();
        let rec: Vec<f64> = (0..=40).map(|k| 50.0 * k as f64).collect();
        let tr = p.propagate(&f, None, &rec).unwrap();
        for s in &tr.states {
            prop_assert!((s.trace().re - 1.0).abs() < 1e-10);
            prop_assert!(s.min_eigenvalue() > -1e-10);
            prop_assert!(s.hermiticity_error() < 1e-12);
        }
    }
}
