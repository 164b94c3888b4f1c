use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{Algorithm, ObjectiveFn, OptimizationResult, OptimizerConfig, Recorder};
use crate::error::{Error, Result};

/// (μ/μ_w, λ)-CMA-ES with rank-one and rank-μ covariance updates and cumulative
/// step-size adaptation. Generations are evaluated in parallel and ranked in
/// offspring order, so results do not depend on scheduling.
pub fn cma_es(f: &ObjectiveFn, x0: &[f64], config: &OptimizerConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "x0",
            reason: "empty parameter vector".into(),
        });
    }
    let nf = n as f64;
    let lambda = config.population_size;
    let mu = lambda / 2;
    let raw: Vec<f64> = (0..mu)
        .map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln())
        .collect();
    let sw: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / sw).collect();
    let mu_eff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rec = Recorder::new(config.max_evaluations, x0);
    rec.eval(f, x0);

    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = config.initial_step;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut b = DMatrix::<f64>::identity(n, n);
    let mut d = DVector::<f64>::from_element(n, 1.0);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);
    let mut generation = 0usize;

    while !rec.exhausted() {
        let count = lambda.min(rec.remaining());
        let zs: Vec<DVector<f64>> = (0..count)
            .map(|_| DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng))))
            .collect();
        let ys: Vec<DVector<f64>> = zs.iter().map(|z| &b * d.component_mul(z)).collect();
        let xs: Vec<DVector<f64>> = ys.iter().map(|y| &mean + y * sigma).collect();
        let values: Vec<f64> = xs.par_iter().map(|x| f(x.as_slice())).collect();
        let values: Vec<f64> = xs
            .iter()
            .zip(values)
            .map(|(x, v)| rec.record(x.as_slice(), v))
            .collect();
        if count < lambda {
            break;
        }
        generation += 1;

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));

        let mut y_w = DVector::<f64>::zeros(n);
        for (k, &i) in order.iter().take(mu).enumerate() {
            y_w += &ys[i] * w[k];
        }
        mean += &y_w * sigma;

        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|x| 1.0 / x)) * b.transpose();
        p_sigma = &p_sigma * (1.0 - c_sigma)
            + (&inv_sqrt * &y_w) * (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        let ps_norm = p_sigma.norm();
        let denom = (1.0 - (1.0 - c_sigma).powi(2 * generation as i32)).sqrt();
        let h_sigma = if ps_norm / denom < (1.4 + 2.0 / (nf + 1.0)) * chi_n {
            1.0
        } else {
            0.0
        };
        p_c = &p_c * (1.0 - c_c) + &y_w * (h_sigma * (c_c * (2.0 - c_c) * mu_eff).sqrt());

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (k, &i) in order.iter().take(mu).enumerate() {
            rank_mu.ger(w[k], &ys[i], &ys[i], 1.0);
        }
        let delta_h = (1.0 - h_sigma) * c_c * (2.0 - c_c);
        cov = &cov * (1.0 - c1 - c_mu + c1 * delta_h)
            + (&p_c * p_c.transpose()) * c1
            + rank_mu * c_mu;
        cov = (&cov + cov.transpose()) * 0.5;

        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).exp();

        let eig = cov.clone().symmetric_eigen();
        let max_ev = eig.eigenvalues.max();
        let min_ev = eig.eigenvalues.min();
        if !(sigma.is_finite() && max_ev.is_finite()) || max_ev <= 0.0 {
            break;
        }
        if min_ev <= 0.0 || max_ev / min_ev > 1e14 {
            break;
        }
        b = eig.eigenvectors;
        d = eig.eigenvalues.map(f64::sqrt);
        let scale = mean.amax().max(1.0);
        if sigma * d.max() < 1e-15 * scale {
            break;
        }
    }
    Ok(rec.finish(Algorithm::CmaEs))
}
