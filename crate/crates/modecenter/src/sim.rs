//! Reproducible Monte Carlo harness: for each (test-bed, n) configuration
//! it runs m matched replications of every configured estimator and
//! reduces them to pairwise comparison tables.

use crate::error::{Error, Result};
use crate::estimators::{
    self, IrwConfig, TrimConfig, TrimFlavor,
};
use crate::pilot::PilotConfig;
use crate::seeding::{derive_seed, fnv1a};
use crate::stats::{self, PairedComparison};
use crate::testbeds::{self, Testbed};
use crate::tuner::TunerConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// One contender in the study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EstimatorSpec {
    Kme,
    Mean,
    Median,
    Trimmed { alpha: f64 },
    Winsorized { alpha: f64 },
    /// Bootstrap variance-minimizing trimming level, chosen per sample.
    AdaptiveTrimmed { b: usize },
    AdaptiveWinsorized { b: usize },
    Tukey,
    Andrews,
}

impl EstimatorSpec {
    pub fn id(&self) -> String {
        match self {
            EstimatorSpec::Kme => "kme".into(),
            EstimatorSpec::Mean => "mean".into(),
            EstimatorSpec::Median => "median".into(),
            EstimatorSpec::Trimmed { alpha } => format!("trimmed_{alpha:.3}"),
            EstimatorSpec::Winsorized { alpha } => format!("winsorized_{alpha:.3}"),
            EstimatorSpec::AdaptiveTrimmed { .. } => "trimmed_adaptive".into(),
            EstimatorSpec::AdaptiveWinsorized { .. } => "winsorized_adaptive".into(),
            EstimatorSpec::Tukey => "tukey".into(),
            EstimatorSpec::Andrews => "andrews".into(),
        }
    }

    /// Parses a CLI token: a bare name, or `trimmed=0.1` / `winsorized=0.1`
    /// for fixed trimming levels (bare `trimmed`/`winsorized` are the
    /// bootstrap-adaptive variants).
    pub fn parse(token: &str, bootstrap_b: usize) -> Result<EstimatorSpec> {
        let spec = match token {
            "kme" => EstimatorSpec::Kme,
            "mean" => EstimatorSpec::Mean,
            "median" => EstimatorSpec::Median,
            "tukey" => EstimatorSpec::Tukey,
            "andrews" => EstimatorSpec::Andrews,
            "trimmed" => EstimatorSpec::AdaptiveTrimmed { b: bootstrap_b },
            "winsorized" => EstimatorSpec::AdaptiveWinsorized { b: bootstrap_b },
            _ => {
                let (name, alpha) = token.split_once('=').ok_or_else(|| {
                    Error::Config(format!(
                        "unknown estimator '{token}'; valid: kme, mean, median, trimmed[=a], winsorized[=a], tukey, andrews"
                    ))
                })?;
                let alpha: f64 = alpha.parse().map_err(|_| {
                    Error::Config(format!("invalid trimming level in '{token}'"))
                })?;
                match name {
                    "trimmed" => EstimatorSpec::Trimmed { alpha },
                    "winsorized" => EstimatorSpec::Winsorized { alpha },
                    _ => {
                        return Err(Error::Config(format!("unknown estimator '{token}'")));
                    }
                }
            }
        };
        Ok(spec)
    }

    fn apply(&self, data: &[f64], seed: u64) -> Result<(f64, Option<(f64, f64)>)> {
        let irw_cfg = IrwConfig::default();
        match self {
            EstimatorSpec::Kme => {
                let (est, tuned, _) = estimators::kme_tuned(
                    data,
                    &PilotConfig::default(),
                    &TunerConfig::default(),
                    &irw_cfg,
                )?;
                Ok((est, Some((tuned.beta, tuned.h))))
            }
            EstimatorSpec::Mean => Ok((estimators::sample_mean(data)?, None)),
            EstimatorSpec::Median => Ok((estimators::sample_median(data)?, None)),
            EstimatorSpec::Trimmed { alpha } => {
                let cfg = TrimConfig {
                    alpha: *alpha,
                    flavor: TrimFlavor::Trimmed,
                };
                Ok((estimators::trimmed_mean(data, &cfg)?, None))
            }
            EstimatorSpec::Winsorized { alpha } => {
                let cfg = TrimConfig {
                    alpha: *alpha,
                    flavor: TrimFlavor::Winsorized,
                };
                Ok((estimators::winsorized_mean(data, &cfg)?, None))
            }
            EstimatorSpec::AdaptiveTrimmed { b } => {
                let cfg = adaptive_trim(data, TrimFlavor::Trimmed, *b, seed)?;
                Ok((estimators::trimmed_mean(data, &cfg)?, None))
            }
            EstimatorSpec::AdaptiveWinsorized { b } => {
                let cfg = adaptive_trim(data, TrimFlavor::Winsorized, *b, seed)?;
                Ok((estimators::winsorized_mean(data, &cfg)?, None))
            }
            EstimatorSpec::Tukey => Ok((estimators::tukey_biweight(data, &irw_cfg)?, None)),
            EstimatorSpec::Andrews => Ok((estimators::andrews_sine(data, &irw_cfg)?, None)),
        }
    }
}

fn adaptive_trim(data: &[f64], flavor: TrimFlavor, b: usize, seed: u64) -> Result<TrimConfig> {
    let grid = estimators::default_alpha_grid();
    let tag = match flavor {
        TrimFlavor::Trimmed => "trimmed",
        TrimFlavor::Winsorized => "winsorized",
    };
    estimators::bootstrap_alpha(data, flavor, &grid, b, derive_seed(seed, &[fnv1a(tag.as_bytes())]))
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub testbeds: Vec<Testbed>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub estimators: Vec<EstimatorSpec>,
    pub master_seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub parallelism: usize,
}

/// One pairwise row: the first configured estimator against another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub pair: String,
    #[serde(flatten)]
    pub comparison: PairedComparison,
}

/// Results for one (test-bed, n) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub testbed: String,
    pub n: usize,
    /// Raw MSE per estimator over its successful replications.
    pub mse: BTreeMap<String, f64>,
    pub pairs: Vec<PairRow>,
    /// Mean tuned parameters over successful KME replications.
    pub mean_beta: Option<f64>,
    pub mean_h: Option<f64>,
    /// Estimator failures, summed over replications.
    pub failures: usize,
    /// XOR of the per-replication sample checksums (matched-pair record).
    pub sample_checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTable {
    pub configs: Vec<ConfigResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

struct RepOutcome {
    estimates: Vec<Option<f64>>,
    beta_h: Option<(f64, f64)>,
    checksum: u64,
}

fn sample_checksum(data: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for x in data {
        h ^= x.to_bits();
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn run(config: &SimConfig) -> Result<SimTable> {
    if config.replications < 2 {
        return Err(Error::Config("need at least 2 replications".into()));
    }
    if config.sample_sizes.iter().any(|&n| n < 10) {
        return Err(Error::Config("sample sizes must be at least 10".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut configs = Vec::new();
    for &tb in &config.testbeds {
        for &n in &config.sample_sizes {
            configs.push(run_one(config, tb, n, &pool)?);
        }
    }
    Ok(SimTable { configs })
}

fn run_one(
    config: &SimConfig,
    tb: Testbed,
    n: usize,
    pool: &rayon::ThreadPool,
) -> Result<ConfigResult> {
    let m = config.replications;
    let tb_key = fnv1a(tb.id().as_bytes());
    let outcomes: Vec<RepOutcome> = pool.install(|| {
        (0..m)
            .into_par_iter()
            .map(|i| {
                let child = derive_seed(config.master_seed, &[tb_key, n as u64, i as u64]);
                let data = testbeds::sample(tb, n, child);
                let mut beta_h = None;
                let estimates: Vec<Option<f64>> = config
                    .estimators
                    .iter()
                    .map(|spec| match spec.apply(&data, child) {
                        Ok((e, bh)) => {
                            if bh.is_some() {
                                beta_h = bh;
                            }
                            Some(e)
                        }
                        Err(_) => None,
                    })
                    .collect();
                RepOutcome {
                    estimates,
                    beta_h,
                    checksum: sample_checksum(&data),
                }
            })
            .collect()
    });

    let n_est = config.estimators.len();
    let failures: usize = outcomes
        .iter()
        .map(|o| o.estimates.iter().filter(|e| e.is_none()).count())
        .sum();
    let slots = m * n_est.max(1);
    if n_est > 0 && failures as f64 > 0.01 * slots as f64 {
        return Err(Error::Numeric(format!(
            "{failures} of {slots} estimator runs failed for {} n={n}",
            tb.id()
        )));
    }

    let theta = tb.theta();
    let mut mse_map = BTreeMap::new();
    for (j, spec) in config.estimators.iter().enumerate() {
        let ok: Vec<f64> = outcomes.iter().filter_map(|o| o.estimates[j]).collect();
        if !ok.is_empty() {
            mse_map.insert(spec.id(), stats::mse(&ok, theta)?);
        }
    }

    let mut pairs = Vec::new();
    if n_est >= 2 {
        let self_id = config.estimators[0].id();
        for j in 1..n_est {
            let mut es = Vec::new();
            let mut eo = Vec::new();
            for o in &outcomes {
                if let (Some(a), Some(b)) = (o.estimates[0], o.estimates[j]) {
                    es.push(a);
                    eo.push(b);
                }
            }
            pairs.push(PairRow {
                pair: format!("{}_vs_{}", self_id, config.estimators[j].id()),
                comparison: stats::compare(&es, &eo, theta)?,
            });
        }
    }

    let tuned: Vec<(f64, f64)> = outcomes.iter().filter_map(|o| o.beta_h).collect();
    let (mean_beta, mean_h) = if tuned.is_empty() {
        (None, None)
    } else {
        let k = tuned.len() as f64;
        (
            Some(tuned.iter().map(|t| t.0).sum::<f64>() / k),
            Some(tuned.iter().map(|t| t.1).sum::<f64>() / k),
        )
    };

    Ok(ConfigResult {
        testbed: tb.id(),
        n,
        mse: mse_map,
        pairs,
        mean_beta,
        mean_h,
        failures,
        sample_checksum: outcomes.iter().fold(0, |acc, o| acc ^ o.checksum),
    })
}

/// Writes the table as CSV (pairwise rows) or JSON (full structure).
pub fn emit(table: &SimTable, format: EmitFormat, path: &Path) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut out = std::fs::File::create(path).map_err(io_err)?;
    match format {
        EmitFormat::Csv => {
            writeln!(out, "testbed,n,pair,mse_ratio,win_prop,p_value,mean_beta,mean_h")
                .map_err(io_err)?;
            for cfg in &table.configs {
                for row in &cfg.pairs {
                    let fmt_opt =
                        |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        cfg.testbed,
                        cfg.n,
                        row.pair,
                        row.comparison.mse_ratio,
                        row.comparison.win_proportion,
                        row.comparison.p_value,
                        fmt_opt(cfg.mean_beta),
                        fmt_opt(cfg.mean_h),
                    )
                    .map_err(io_err)?;
                }
            }
        }
        EmitFormat::Json => {
            serde_json::to_writer_pretty(&mut out, table)
                .map_err(|e| Error::Data(format!("json serialization: {e}")))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    Ok(())
}
