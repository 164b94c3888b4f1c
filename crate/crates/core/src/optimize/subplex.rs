use super::{Algorithm, ObjectiveFn, OptimizationResult, OptimizerConfig, Recorder};
use crate::error::{Error, Result};

const PSI: f64 = 0.25;
const OMEGA: f64 = 0.1;
const NS_MIN: usize = 2;
const NS_MAX: usize = 5;
const ALPHA: f64 = 1.0;
const BETA: f64 = 0.5;
const GAMMA: f64 = 2.0;
const DELTA: f64 = 0.5;
const TOLERANCE: f64 = 1e-10;
const MAX_IDLE_RESTARTS: usize = 2;

/// Subspace-searching simplex method: Nelder-Mead applied cyclically to
/// low-dimensional coordinate subspaces ordered by recent progress, restarted from
/// the best point with the initial step once the step vector collapses.
pub fn subplex_local(
    f: &ObjectiveFn,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "x0",
            reason: "empty parameter vector".into(),
        });
    }
    let mut rec = Recorder::new(config.max_evaluations, x0);
    let mut x = x0.to_vec();
    let Some(mut fx) = rec.eval(f, &x) else {
        return Ok(rec.finish(Algorithm::SubplexLocal));
    };
    let mut idle = 0usize;
    while !rec.exhausted() && idle <= MAX_IDLE_RESTARTS {
        let start_best = rec.best();
        let mut step = vec![config.initial_step; n];
        let mut progress = step.clone();
        loop {
            let x_old = x.clone();
            let subspaces = partition(&progress);
            for sub in &subspaces {
                let inner_step: Vec<f64> = sub.iter().map(|&i| step[i]).collect();
                match nelder_mead(f, &mut rec, &mut x, &mut fx, sub, &inner_step) {
                    Some(()) => {}
                    None => return Ok(rec.finish(Algorithm::SubplexLocal)),
                }
            }
            let dx: Vec<f64> = x.iter().zip(&x_old).map(|(a, b)| a - b).collect();
            let scale = if subspaces.len() > 1 {
                let num: f64 = dx.iter().map(|v| v.abs()).sum();
                let den: f64 = step.iter().map(|v| v.abs()).sum();
                (num / den).clamp(OMEGA, 1.0 / OMEGA)
            } else {
                PSI
            };
            for i in 0..n {
                let mag = step[i].abs() * scale;
                step[i] = if dx[i] > 0.0 {
                    mag
                } else if dx[i] < 0.0 {
                    -mag
                } else {
                    -step[i].signum() * mag
                };
            }
            let converged = (0..n).all(|i| {
                let size = dx[i].abs().max(step[i].abs() * PSI);
                size <= TOLERANCE * x[i].abs().max(1.0)
            });
            if converged {
                break;
            }
            progress = if dx.iter().any(|v| *v != 0.0) {
                dx
            } else {
                step.clone()
            };
            if rec.exhausted() {
                return Ok(rec.finish(Algorithm::SubplexLocal));
            }
        }
        if rec.best() > start_best {
            idle = 0;
        } else {
            idle += 1;
        }
    }
    Ok(rec.finish(Algorithm::SubplexLocal))
}

/// Split coordinates, sorted by decreasing |v_i|, into consecutive groups of
/// NS_MIN..=NS_MAX maximizing the drop in mean |v| across each cut.
fn partition(v: &[f64]) -> Vec<Vec<usize>> {
    let n = v.len();
    let ns_min = NS_MIN.min(n);
    let ns_max = NS_MAX.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let left = n - start;
        let mut best_k = left.min(ns_max);
        let mut best_score = f64::NEG_INFINITY;
        for k in ns_min..=ns_max.min(left) {
            let rest = left - k;
            if rest != 0 && rest < ns_min {
                continue;
            }
            let head: f64 = order[start..start + k]
                .iter()
                .map(|&i| v[i].abs())
                .sum::<f64>()
                / k as f64;
            let tail = if rest > 0 {
                order[start + k..].iter().map(|&i| v[i].abs()).sum::<f64>() / rest as f64
            } else {
                0.0
            };
            let score = head - tail;
            if score > best_score {
                best_score = score;
                best_k = k;
            }
        }
        if left < ns_min {
            best_k = left;
        }
        out.push(order[start..start + best_k].to_vec());
        start += best_k;
    }
    out
}

/// Nelder-Mead in the coordinates `sub` of `x`, stopping when the simplex has shrunk
/// by PSI. Updates `x`/`fx` with the best vertex; `None` when the budget ran out.
fn nelder_mead(
    f: &ObjectiveFn,
    rec: &mut Recorder,
    x: &mut [f64],
    fx: &mut f64,
    sub: &[usize],
    step: &[f64],
) -> Option<()> {
    let k = sub.len();
    let base: Vec<f64> = sub.iter().map(|&i| x[i]).collect();
    let mut full = x.to_vec();
    let mut cost = |p: &[f64], rec: &mut Recorder| -> Option<f64> {
        for (j, &i) in sub.iter().enumerate() {
            full[i] = p[j];
        }
        rec.eval(f, &full).map(|v| -v)
    };
    let mut simplex: Vec<Vec<f64>> = vec![base.clone()];
    let mut costs = vec![-*fx];
    for j in 0..k {
        let mut p = base.clone();
        p[j] += step[j];
        let c = match cost(&p, rec) {
            Some(c) => c,
            None => {
                commit(x, fx, sub, &simplex, &costs);
                return None;
            }
        };
        simplex.push(p);
        costs.push(c);
    }
    let size0 = simplex_size(&simplex);
    if size0 == 0.0 {
        return Some(());
    }
    loop {
        let mut idx: Vec<usize> = (0..=k).collect();
        idx.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        costs = idx.iter().map(|&i| costs[i]).collect();
        if simplex_size(&simplex) <= PSI * size0 {
            break;
        }
        let centroid: Vec<f64> = (0..k)
            .map(|j| simplex[..k].iter().map(|p| p[j]).sum::<f64>() / k as f64)
            .collect();
        let worst = simplex[k].clone();
        let along = |t: f64| -> Vec<f64> {
            (0..k)
                .map(|j| centroid[j] + t * (centroid[j] - worst[j]))
                .collect()
        };
        let xr = along(ALPHA);
        let Some(fr) = cost(&xr, rec) else { break };
        if fr < costs[0] {
            let xe = along(GAMMA);
            let Some(fe) = cost(&xe, rec) else {
                simplex[k] = xr;
                costs[k] = fr;
                break;
            };
            if fe < fr {
                simplex[k] = xe;
                costs[k] = fe;
            } else {
                simplex[k] = xr;
                costs[k] = fr;
            }
        } else if fr < costs[k - 1] {
            simplex[k] = xr;
            costs[k] = fr;
        } else {
            let (xc, outside) = if fr < costs[k] {
                (along(BETA), true)
            } else {
                (along(-BETA), false)
            };
            let Some(fc) = cost(&xc, rec) else { break };
            let accept = if outside { fc <= fr } else { fc < costs[k] };
            if accept {
                simplex[k] = xc;
                costs[k] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=k {
                    let p: Vec<f64> = (0..k)
                        .map(|j| best[j] + DELTA * (simplex[i][j] - best[j]))
                        .collect();
                    let Some(c) = cost(&p, rec) else {
                        commit(x, fx, sub, &simplex, &costs);
                        return None;
                    };
                    simplex[i] = p;
                    costs[i] = c;
                }
            }
        }
        if rec.exhausted() {
            break;
        }
    }
    commit(x, fx, sub, &simplex, &costs);
    if rec.exhausted() {
        None
    } else {
        Some(())
    }
}

fn commit(x: &mut [f64], fx: &mut f64, sub: &[usize], simplex: &[Vec<f64>], costs: &[f64]) {
    let (best, c) = simplex
        .iter()
        .zip(costs)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty simplex");
    if -c >= *fx {
        for (j, &i) in sub.iter().enumerate() {
            x[i] = best[j];
        }
        *fx = -c;
    }
}

fn simplex_size(simplex: &[Vec<f64>]) -> f64 {
    let v0 = &simplex[0];
    simplex[1..]
        .iter()
        .map(|p| p.iter().zip(v0).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_sizes() {
        let parts = partition(&[5.0, 4.0, 0.1, 0.1, 0.1, 3.0, 0.0]);
        let sizes: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 7);
        assert!(sizes.iter().all(|&s| (2..=5).contains(&s)));
        assert_eq!(parts[0][..2], [0, 1]);
        assert_eq!(partition(&[1.0]), vec![vec![0]]);
    }
}
