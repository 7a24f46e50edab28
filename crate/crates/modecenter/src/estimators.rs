//! All location estimators of the study: mean, median, trimmed and
//! winsorized means (fixed and bootstrap-adaptive trimming level), and the
//! iterative-reweighting fixed-point engine shared by the tuned kernel
//! mode estimator, Tukey's biweight, and Andrew's sine.

use crate::error::{Error, Result};
use crate::kernels;
use crate::pilot::{build_pilot, PilotConfig};
use crate::seeding::derive_seed;
use crate::tuner::{madn, optimize_params, TunedParams, TunerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Starting point for the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IrwInit {
    Median,
    /// Argmax of the weight-kernel density over the sample; O(n^2) but
    /// minimizes the risk of starting in the wrong basin.
    DensestPoint,
}

#[derive(Debug, Clone, Copy)]
pub struct IrwConfig {
    /// Relative tolerance factor: the iteration stops when |delta| <= epsilon * h.
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: IrwInit,
}

impl Default for IrwConfig {
    fn default() -> Self {
        IrwConfig {
            epsilon: 1e-8,
            max_iter: 500,
            init: IrwInit::Median,
        }
    }
}

/// Diagnostics of one fixed-point run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrwTrace {
    /// Iterates starting with the initial guess.
    pub iterates: Vec<f64>,
    /// Normalized weights at the final iterate; all zero when isolated.
    pub weights_final: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when no data point carries weight from the final iterate; the
    /// iterate is then returned unchanged.
    pub isolated: bool,
}

/// Trimming level and flavor for the L-estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimConfig {
    pub alpha: f64,
    pub flavor: TrimFlavor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrimFlavor {
    Trimmed,
    Winsorized,
}

fn require_nonempty(data: &[f64]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data("empty data".into()));
    }
    Ok(())
}

pub fn sample_mean(data: &[f64]) -> Result<f64> {
    require_nonempty(data)?;
    Ok(data.iter().sum::<f64>() / data.len() as f64)
}

/// Median with the midpoint convention for even n.
pub fn sample_median(data: &[f64]) -> Result<f64> {
    require_nonempty(data)?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        Ok(sorted[n / 2])
    } else {
        Ok(0.5 * (sorted[n / 2 - 1] + sorted[n / 2]))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::Config(format!(
            "trimming level must lie in [0, 0.5), got {alpha}"
        )));
    }
    Ok(())
}

/// Mean after deleting the floor(alpha n) smallest and largest points.
pub fn trimmed_mean(data: &[f64], cfg: &TrimConfig) -> Result<f64> {
    require_nonempty(data)?;
    check_alpha(cfg.alpha)?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let k = (cfg.alpha * n as f64).floor() as usize;
    match cfg.flavor {
        TrimFlavor::Trimmed => {
            let kept = &sorted[k..n - k];
            Ok(kept.iter().sum::<f64>() / kept.len() as f64)
        }
        TrimFlavor::Winsorized => {
            let lo = sorted[k];
            let hi = sorted[n - 1 - k];
            Ok(sorted.iter().map(|x| x.clamp(lo, hi)).sum::<f64>() / n as f64)
        }
    }
}

/// Mean after clamping the floor(alpha n) most extreme points on each side
/// to the boundary order statistics.
pub fn winsorized_mean(data: &[f64], cfg: &TrimConfig) -> Result<f64> {
    trimmed_mean(
        data,
        &TrimConfig {
            alpha: cfg.alpha,
            flavor: TrimFlavor::Winsorized,
        },
    )
}

/// Iterative reweighting (mean shift): repeat m <- sum w_i x_i / sum w_i
/// with w_i = weight_fn(x_i - m) until |delta| <= epsilon * h.
pub fn irw<W: Fn(f64) -> f64>(
    data: &[f64],
    weight_fn: W,
    h: f64,
    cfg: &IrwConfig,
) -> Result<(f64, IrwTrace)> {
    require_nonempty(data)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
    }
    let start = match cfg.init {
        IrwInit::Median => sample_median(data)?,
        IrwInit::DensestPoint => densest_point(data, &weight_fn),
    };
    irw_from(data, weight_fn, h, cfg, start)
}

/// The fixed-point iteration from an explicit starting point.
pub fn irw_from<W: Fn(f64) -> f64>(
    data: &[f64],
    weight_fn: W,
    h: f64,
    cfg: &IrwConfig,
    start: f64,
) -> Result<(f64, IrwTrace)> {
    require_nonempty(data)?;
    let mut m = start;
    let mut iterates = vec![m];
    let mut converged = false;
    let mut isolated = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        let mut sum_w = 0.0;
        let mut sum_wx = 0.0;
        for &x in data {
            let w = weight_fn(x - m);
            sum_w += w;
            sum_wx += w * x;
        }
        if !(sum_w > 0.0) {
            // No point in reach: keep the iterate and flag it.
            isolated = true;
            converged = true;
            break;
        }
        let next = sum_wx / sum_w;
        let delta = (next - m).abs();
        m = next;
        iterates.push(m);
        iterations += 1;
        if delta <= cfg.epsilon * h {
            converged = true;
            break;
        }
    }
    let weights_final = final_weights(data, &weight_fn, m);
    Ok((
        m,
        IrwTrace {
            iterates,
            weights_final,
            iterations,
            converged,
            isolated,
        },
    ))
}

fn final_weights<W: Fn(f64) -> f64>(data: &[f64], weight_fn: &W, m: f64) -> Vec<f64> {
    let raw: Vec<f64> = data.iter().map(|&x| weight_fn(x - m)).collect();
    let sum: f64 = raw.iter().sum();
    if sum > 0.0 {
        raw.iter().map(|w| w / sum).collect()
    } else {
        raw
    }
}

fn densest_point<W: Fn(f64) -> f64>(data: &[f64], weight_fn: &W) -> f64 {
    let mut best = data[0];
    let mut best_density = f64::NEG_INFINITY;
    for &xj in data {
        let density: f64 = data.iter().map(|&xi| weight_fn(xj - xi)).sum();
        if density > best_density {
            best_density = density;
            best = xj;
        }
    }
    best
}

/// Bump-family weight as the softmax numerator exp(score((x - m)/h));
/// the iteration normalizes, completing the softmax.
pub fn bump_weight_fn(beta: f64, h: f64) -> impl Fn(f64) -> f64 {
    move |x| kernels::score(beta, x / h).exp()
}

/// The full pipeline: pilot density, (beta, h) tuning, and the bump-weight
/// fixed-point iteration.
pub fn kme_tuned(
    data: &[f64],
    pilot_cfg: &PilotConfig,
    tuner_cfg: &TunerConfig,
    irw_cfg: &IrwConfig,
) -> Result<(f64, TunedParams, IrwTrace)> {
    if data.len() < 3 {
        return Err(Error::Data(format!(
            "kernel mode estimation needs at least 3 points, got {}",
            data.len()
        )));
    }
    let pilot = build_pilot(data, pilot_cfg)?;
    let tuned = optimize_params(&pilot, data, tuner_cfg)?;
    let (estimate, trace) = irw(data, bump_weight_fn(tuned.beta, tuned.h), tuned.h, irw_cfg)?;
    Ok((estimate, tuned, trace))
}

fn redescending<W: Fn(f64) -> f64 + Copy>(
    data: &[f64],
    irw_cfg: &IrwConfig,
    scale_mult: f64,
    weight_of_u: W,
) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 points, got {}",
            data.len()
        )));
    }
    if data.iter().all(|&x| x == data[0]) {
        // Zero spread: the common value is the exact answer.
        return Ok(data[0]);
    }
    let h = scale_mult * madn(data)?;
    let (estimate, _) = irw(data, move |x| weight_of_u(x / h), h, irw_cfg)?;
    Ok(estimate)
}

/// Tukey's biweight: triweight-kernel weights with h = 6 MADN.
pub fn tukey_biweight(data: &[f64], irw_cfg: &IrwConfig) -> Result<f64> {
    redescending(data, irw_cfg, 6.0, |u: f64| {
        if u.abs() < 1.0 {
            let t = 1.0 - u * u;
            t * t
        } else {
            0.0
        }
    })
}

/// Andrew's sine: raised-cosine-kernel weights with h = 2.1 pi MADN.
pub fn andrews_sine(data: &[f64], irw_cfg: &IrwConfig) -> Result<f64> {
    redescending(data, irw_cfg, 2.1 * std::f64::consts::PI, |u: f64| {
        let a = u.abs();
        if a >= 1.0 {
            0.0
        } else if a < 1e-12 {
            1.0
        } else {
            let pu = std::f64::consts::PI * u;
            pu.sin() / pu
        }
    })
}

/// Variance-minimizing trimming level over a grid, estimated by bootstrap
/// resampling from the sample augmented with its reflection about the
/// median.
pub fn bootstrap_alpha(
    data: &[f64],
    flavor: TrimFlavor,
    alpha_grid: &[f64],
    b: usize,
    seed: u64,
) -> Result<TrimConfig> {
    require_nonempty(data)?;
    if b < 50 {
        return Err(Error::Config(format!(
            "bootstrap needs at least 50 resamples, got {b}"
        )));
    }
    if alpha_grid.is_empty() {
        return Err(Error::Config("empty trimming-level grid".into()));
    }
    for &a in alpha_grid {
        check_alpha(a)?;
    }
    let n = data.len();
    let median = sample_median(data)?;
    let mut augmented = data.to_vec();
    augmented.extend(data.iter().map(|x| 2.0 * median - x));

    let mut best = (alpha_grid[0], f64::INFINITY);
    for (ai, &alpha) in alpha_grid.iter().enumerate() {
        let cfg = TrimConfig { alpha, flavor };
        let mut estimates = Vec::with_capacity(b);
        for rep in 0..b {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[ai as u64, rep as u64]));
            let resample: Vec<f64> = (0..n)
                .map(|_| augmented[rng.gen_range(0..augmented.len())])
                .collect();
            estimates.push(trimmed_mean(&resample, &cfg)?);
        }
        let mean = estimates.iter().sum::<f64>() / b as f64;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / b as f64;
        if var < best.1 {
            best = (alpha, var);
        }
    }
    Ok(TrimConfig {
        alpha: best.0,
        flavor,
    })
}

/// The default bootstrap trimming-level grid {0, 0.02, ..., 0.48}.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..25).map(|i| i as f64 * 0.02).collect()
}
