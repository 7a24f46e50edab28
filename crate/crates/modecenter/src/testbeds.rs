//! The nine symmetric unimodal benchmark densities, with exact moments
//! and seedable sampling.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

const PI: f64 = std::f64::consts::PI;
const SQRT_2PI: f64 = 2.506628274631000502;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Testbed {
    Normal,
    Logistic,
    Laplace,
    /// Student's t with 1..=5 degrees of freedom.
    StudentT(u32),
    /// 0.9 N(0,1) + 0.1 N(0,100^2) mixture.
    Outlier,
}

/// Exact distribution summaries used as reference lines and oracles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TestbedInfo {
    /// Variance; infinite for Student's t with 1 or 2 degrees of freedom.
    pub sigma2: f64,
    pub density_at_center: f64,
    /// Tail exponent `-(nu + 1)` for Student's t, absent otherwise.
    pub regular_variation_index: Option<f64>,
}

impl Testbed {
    pub const ALL: [Testbed; 9] = [
        Testbed::Normal,
        Testbed::Logistic,
        Testbed::Laplace,
        Testbed::StudentT(1),
        Testbed::StudentT(2),
        Testbed::StudentT(3),
        Testbed::StudentT(4),
        Testbed::StudentT(5),
        Testbed::Outlier,
    ];

    pub fn id(&self) -> String {
        match self {
            Testbed::Normal => "normal".into(),
            Testbed::Logistic => "logistic".into(),
            Testbed::Laplace => "laplace".into(),
            Testbed::StudentT(nu) => format!("student_t_{nu}"),
            Testbed::Outlier => "outlier".into(),
        }
    }

    pub fn from_id(id: &str) -> Result<Testbed> {
        let tb = Testbed::ALL.iter().find(|tb| tb.id() == id).copied();
        tb.ok_or_else(|| {
            let valid: Vec<String> = Testbed::ALL.iter().map(|t| t.id()).collect();
            Error::Config(format!(
                "unknown testbed '{id}'; valid ids: {}",
                valid.join(", ")
            ))
        })
    }

    /// Center of symmetry; zero for all built-ins.
    pub fn theta(&self) -> f64 {
        0.0
    }
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

fn student_t_norm_const(nu: u32) -> f64 {
    match nu {
        1 => 1.0 / PI,
        2 => 0.5 / 2.0f64.sqrt(),
        3 => 2.0 / (PI * 3.0f64.sqrt()),
        4 => 3.0 / 8.0,
        5 => 8.0 / (3.0 * PI * 5.0f64.sqrt()),
        _ => unreachable!("degrees of freedom restricted to 1..=5"),
    }
}

pub fn pdf(tb: Testbed, x: f64) -> f64 {
    match tb {
        Testbed::Normal => phi(x),
        Testbed::Logistic => {
            let e = (0.5 * x).exp();
            let s = e + 1.0 / e;
            1.0 / (s * s)
        }
        Testbed::Laplace => 0.5 * (-x.abs()).exp(),
        Testbed::StudentT(nu) => {
            let nuf = nu as f64;
            student_t_norm_const(nu) * (1.0 + x * x / nuf).powf(-(nuf + 1.0) / 2.0)
        }
        Testbed::Outlier => 0.9 * phi(x) + 0.1 * phi(x / 100.0) / 100.0,
    }
}

/// The density recentred on the center of symmetry; an even function.
pub fn centered_pdf(tb: Testbed) -> impl Fn(f64) -> f64 + Copy {
    move |x| pdf(tb, tb.theta() + x)
}

pub fn cdf(tb: Testbed, x: f64) -> f64 {
    match tb {
        Testbed::Normal => Normal::standard().cdf(x),
        Testbed::Logistic => 1.0 / (1.0 + (-x).exp()),
        Testbed::Laplace => {
            if x < 0.0 {
                0.5 * x.exp()
            } else {
                1.0 - 0.5 * (-x).exp()
            }
        }
        Testbed::StudentT(nu) => StudentsT::new(0.0, 1.0, nu as f64).unwrap().cdf(x),
        Testbed::Outlier => {
            let n = Normal::standard();
            0.9 * n.cdf(x) + 0.1 * n.cdf(x / 100.0)
        }
    }
}

pub fn info(tb: Testbed) -> TestbedInfo {
    let sigma2 = match tb {
        Testbed::Normal => 1.0,
        Testbed::Logistic => PI * PI / 3.0,
        Testbed::Laplace => 2.0,
        Testbed::StudentT(nu) if nu >= 3 => nu as f64 / (nu as f64 - 2.0),
        Testbed::StudentT(_) => f64::INFINITY,
        Testbed::Outlier => 0.9 + 0.1 * 100.0 * 100.0,
    };
    let regular_variation_index = match tb {
        Testbed::StudentT(nu) => Some(-(nu as f64 + 1.0)),
        _ => None,
    };
    TestbedInfo {
        sigma2,
        density_at_center: pdf(tb, tb.theta()),
        regular_variation_index,
    }
}

/// Deterministic i.i.d. draws for a fixed seed.
pub fn sample(tb: Testbed, n: usize, seed: u64) -> Vec<f64> {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(tb, n, &mut rng)
}

pub fn sample_with<R: Rng>(tb: Testbed, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| draw(tb, rng)).collect()
}

fn draw<R: Rng>(tb: Testbed, rng: &mut R) -> f64 {
    match tb {
        Testbed::Normal => rng.sample(StandardNormal),
        Testbed::Logistic => {
            // Inverse CDF.
            let u: f64 = rng.gen();
            (u / (1.0 - u)).ln()
        }
        Testbed::Laplace => {
            let e: f64 = rng.sample(Exp1);
            if rng.gen::<bool>() {
                e
            } else {
                -e
            }
        }
        Testbed::StudentT(nu) => {
            // Normal over the root of an independent chi-square over nu.
            let z: f64 = rng.sample(StandardNormal);
            let chi2: f64 = (0..nu)
                .map(|_| {
                    let v: f64 = rng.sample(StandardNormal);
                    v * v
                })
                .sum();
            z / (chi2 / nu as f64).sqrt()
        }
        Testbed::Outlier => {
            let component: f64 = rng.gen();
            let z: f64 = rng.sample(StandardNormal);
            if component < 0.9 {
                z
            } else {
                100.0 * z
            }
        }
    }
}
