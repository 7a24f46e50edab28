//! Joint (beta, h) selection by minimizing the plug-in variance with a
//! derivative-free simplex search in log coordinates.

use crate::error::{Error, Result};
use crate::pilot::PilotDensity;
use crate::variance;
use serde::{Deserialize, Serialize};

/// Search configuration; the default start is the neutral guess of
/// beta = 1 and h = MADN.
#[derive(Debug, Clone)]
pub struct TunerConfig {
    pub beta0: f64,
    /// Starting bandwidth; MADN of the data when absent.
    pub h0: Option<f64>,
    /// Termination tolerance on the simplex value spread.
    pub tol: f64,
    pub max_evals: usize,
    /// Restart from beta in {1/4, 1, 8} and keep the best.
    pub multistart: bool,
    pub quad_nodes: usize,
}

impl Default for TunerConfig {
    fn default() -> Self {
        TunerConfig {
            beta0: 1.0,
            h0: None,
            tol: 1e-6,
            max_evals: 400,
            multistart: false,
            quad_nodes: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TunedParams {
    pub beta: f64,
    pub h: f64,
    pub achieved_variance: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub start_beta: f64,
    pub start_h: f64,
}

/// Median absolute deviation about the median, normalized by the standard
/// normal quartile so it is consistent for sigma.
pub fn madn(data: &[f64]) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::Config(format!(
            "MADN needs at least 2 points, got {}",
            data.len()
        )));
    }
    let m = crate::estimators::sample_median(data)?;
    let dev: Vec<f64> = data.iter().map(|x| (x - m).abs()).collect();
    let mad = crate::estimators::sample_median(&dev)?;
    if !(mad > 0.0) {
        return Err(Error::Config(
            "zero median absolute deviation; data too concentrated for a scale estimate".into(),
        ));
    }
    Ok(mad / 0.6745)
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadResult {
    pub point: (f64, f64),
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Two-dimensional Nelder-Mead with the standard reflection/expansion/
/// contraction/shrink coefficients (1, 2, 0.5, 0.5). Non-finite objective
/// values away from the start are treated as +inf.
pub fn nelder_mead<F: FnMut((f64, f64)) -> f64>(
    mut objective: F,
    start: (f64, f64),
    steps: (f64, f64),
    tol: f64,
    max_evals: usize,
) -> Result<NelderMeadResult> {
    let evals = std::cell::Cell::new(0usize);
    let eval = |p: (f64, f64), objective: &mut F| -> f64 {
        evals.set(evals.get() + 1);
        let v = objective(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let v0 = eval(start, &mut objective);
    if !v0.is_finite() {
        return Err(Error::Numeric(format!(
            "objective is not finite at the starting point ({}, {})",
            start.0, start.1
        )));
    }
    let mut simplex = vec![
        (start, v0),
        ((start.0 + steps.0, start.1), 0.0),
        ((start.0, start.1 + steps.1), 0.0),
    ];
    for v in simplex.iter_mut().skip(1) {
        v.1 = eval(v.0, &mut objective);
    }

    let mut iterations = 0usize;
    let converged = loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let spread = simplex[2].1 - simplex[0].1;
        if spread.is_finite() && spread < tol {
            break true;
        }
        if evals.get() >= max_evals {
            break false;
        }
        iterations += 1;
        let best = simplex[0];
        let worst = simplex[2];
        let centroid = (
            0.5 * (simplex[0].0 .0 + simplex[1].0 .0),
            0.5 * (simplex[0].0 .1 + simplex[1].0 .1),
        );
        let reflect = (
            centroid.0 + (centroid.0 - worst.0 .0),
            centroid.1 + (centroid.1 - worst.0 .1),
        );
        let fr = eval(reflect, &mut objective);
        if fr < best.1 {
            let expand = (
                centroid.0 + 2.0 * (centroid.0 - worst.0 .0),
                centroid.1 + 2.0 * (centroid.1 - worst.0 .1),
            );
            let fe = eval(expand, &mut objective);
            simplex[2] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflect, fr);
        } else {
            let (toward, f_toward) = if fr < worst.1 {
                (reflect, fr)
            } else {
                (worst.0, worst.1)
            };
            let contract = (
                centroid.0 + 0.5 * (toward.0 - centroid.0),
                centroid.1 + 0.5 * (toward.1 - centroid.1),
            );
            let fc = eval(contract, &mut objective);
            if fc < f_toward {
                simplex[2] = (contract, fc);
            } else {
                // Shrink toward the best vertex.
                for v in simplex.iter_mut().skip(1) {
                    v.0 = (
                        best.0 .0 + 0.5 * (v.0 .0 - best.0 .0),
                        best.0 .1 + 0.5 * (v.0 .1 - best.0 .1),
                    );
                    v.1 = eval(v.0, &mut objective);
                }
            }
        }
    };
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    Ok(NelderMeadResult {
        point: simplex[0].0,
        value: simplex[0].1,
        evaluations: evals.get(),
        iterations,
        converged,
    })
}

/// Minimizes the plug-in variance over (log beta, log h); returns the
/// exponentiated best point.
pub fn optimize_params(pilot: &PilotDensity, data: &[f64], cfg: &TunerConfig) -> Result<TunedParams> {
    let start_h = match cfg.h0 {
        Some(h) if h > 0.0 => h,
        Some(h) => {
            return Err(Error::Config(format!(
                "starting bandwidth must be positive, got {h}"
            )))
        }
        None => madn(data)?,
    };
    optimize_with_density(|x| pilot.eval(x), pilot.h_max, start_h, cfg)
}

/// The same search against an arbitrary centered density (e.g. a known
/// truth instead of a pilot estimate), with an explicit bandwidth cap.
pub fn optimize_with_density<F: Fn(f64) -> f64>(
    f0: F,
    h_cap: f64,
    start_h: f64,
    cfg: &TunerConfig,
) -> Result<TunedParams> {
    if !(cfg.beta0.is_finite() && cfg.beta0 > 0.0) {
        return Err(Error::Config(format!(
            "starting beta must be positive, got {}",
            cfg.beta0
        )));
    }
    let objective = |(lb, lh): (f64, f64)| -> f64 {
        let beta = lb.exp();
        let h = lh.exp();
        if !(1e-3..=1e3).contains(&beta) || h > h_cap {
            return f64::INFINITY;
        }
        variance::asymptotic_variance_bump(&f0, beta, h, cfg.quad_nodes).unwrap_or(f64::INFINITY)
    };

    let starts: Vec<f64> = if cfg.multistart {
        vec![0.25, 1.0, 8.0]
    } else {
        vec![cfg.beta0]
    };
    let mut total_evals = 0usize;
    let mut best: Option<NelderMeadResult> = None;
    for beta0 in starts {
        let start = (beta0.ln(), start_h.min(h_cap).ln());
        let r = nelder_mead(objective, start, (0.7, 0.7), cfg.tol, cfg.max_evals)?;
        total_evals += r.evaluations;
        if best.map_or(true, |b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.unwrap();
    Ok(TunedParams {
        beta: best.point.0.exp(),
        h: best.point.1.exp(),
        achieved_variance: best.value,
        evaluations: total_evals,
        converged: best.converged,
        start_beta: if cfg.multistart { 1.0 } else { cfg.beta0 },
        start_h,
    })
}
