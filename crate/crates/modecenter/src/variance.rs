//! The asymptotic variance functional of the kernel mode estimator,
//! `V(h) = h^2 E1 / E2^2`, for a given kernel and centered density, plus
//! the diagnostic curve and tail-gap integral used as theory checks.

use crate::error::{Error, Result};
use crate::kernels::{self, KernelProfile, KernelShape};
use crate::quad;
use crate::testbeds::{self, Testbed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Nodes used when the caller does not choose a budget.
pub const DEFAULT_QUAD_NODES: usize = 512;

/// Effective integration radius for the Gaussian kernel, whose support is
/// unbounded; beyond this the integrands are below 1e-30.
const GAUSSIAN_RADIUS: f64 = 12.0;

/// `V(h)` sampled on a bandwidth grid, with the reference levels of the
/// sample mean (sigma^2) and sample median (`[2 f0(0)]^-2`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceCurve {
    pub kernel: KernelShape,
    pub h_grid: Vec<f64>,
    /// `V` at each grid point; `None` where evaluation failed.
    pub values: Vec<Option<f64>>,
    /// Infinite for test-beds without a finite variance.
    pub sigma2_ref: f64,
    pub median_ref: f64,
    pub argmin_h: f64,
    pub min_value: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Plug-in variance for the bump family, computed directly from the
/// unnormalized derivative `psi(x) = -x b(x)` (the normalization constant
/// cancels between numerator and denominator).
pub fn asymptotic_variance_bump<F: Fn(f64) -> f64>(
    f0: F,
    beta: f64,
    h: f64,
    quad_nodes: usize,
) -> Result<f64> {
    check_positive("beta", beta)?;
    check_positive("h", h)?;
    // The g2 integrand has exactly zero total mass (psi vanishes at both
    // endpoints), so when f0 is nearly flat over the kernel support the
    // integral is a ~h^2 residue of a cancellation; subtracting f0(0)
    // performs that cancellation analytically. When f0 decays within the
    // support the subtraction would itself cancel, so it is applied only
    // in the flat regime.
    let f00 = if f0(h) > 0.5 * f0(0.0) { f0(0.0) } else { 0.0 };
    let (i1, i2) = if beta < 1.0 {
        // For small beta the kernel mass concentrates at x ~ exp(-1/beta),
        // far below any fixed quadrature resolution. The substitution
        // s = x^beta turns b(x) into exp(-1/(1-s)), smooth on (0, 1), with
        // the Jacobian absorbed into explicit powers of s.
        let inv = 1.0 / beta;
        let i1 = quad::integrate_unit_graded(
            |s| {
                if s <= 0.0 || s >= 1.0 {
                    return 0.0;
                }
                let ln_s = s.ln();
                // s^{3/beta - 1} carries x^2 * dx/ds.
                inv * ((3.0 * inv - 1.0) * ln_s).exp()
                    * (-2.0 / (1.0 - s)).exp()
                    * f0(h * (ln_s * inv).exp())
            },
            quad_nodes,
        );
        let i2 = quad::integrate_unit_graded(
            |s| {
                if s <= 0.0 || s >= 1.0 {
                    return 0.0;
                }
                let ln_s = s.ln();
                let om = 1.0 - s;
                inv * ((inv - 1.0) * ln_s).exp()
                    * (-1.0 / om).exp()
                    * (beta * s / (om * om) - 1.0)
                    * (f0(h * (ln_s * inv).exp()) - f00)
            },
            quad_nodes,
        );
        (i1, i2)
    } else {
        let i1 = quad::integrate_unit_graded(
            |x| {
                let p = -x * kernels::bump_raw(beta, x);
                p * p * f0(h * x)
            },
            quad_nodes,
        );
        let i2 = quad::integrate_unit_graded(
            |x| kernels::psi_deriv_raw(beta, x) * (f0(h * x) - f00),
            quad_nodes,
        );
        (i1, i2)
    };
    let e1 = 2.0 * h * i1;
    let e2 = 2.0 * h * i2;
    finish(h, e1, e2)
}

fn finish(h: f64, e1: f64, e2: f64) -> Result<f64> {
    if e2.abs() < 1e-30 {
        return Err(Error::Numeric(format!(
            "degenerate density: no mass under the kernel support for h = {h}"
        )));
    }
    let v = h * h * e1 / (e2 * e2);
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Numeric(format!(
            "variance evaluation produced {v} at h = {h}"
        )));
    }
    Ok(v)
}

/// Plug-in variance `∫ K_h'^2 f / (∫ K_h'' f)^2` for any bell-shaped
/// kernel profile, in centered coordinates.
pub fn asymptotic_variance_general<F: Fn(f64) -> f64>(
    f0: F,
    profile: &KernelProfile,
    h: f64,
) -> Result<f64> {
    check_positive("h", h)?;
    let r = if profile.support_radius().is_finite() {
        profile.support_radius()
    } else {
        GAUSSIAN_RADIUS
    };
    // E1 = 2 h^-3 ∫_0^r K'(u)^2 f0(hu) du, E2 = 2 h^-2 ∫_0^r K''(u) f0(hu) du,
    // each mapped onto [0, 1] by u = r x.
    let i1 = quad::integrate_unit_graded(
        |x| {
            let d = profile.deriv(r * x);
            d * d * f0(h * r * x)
        },
        DEFAULT_QUAD_NODES,
    );
    // K'' has zero total mass over [0, r] (K' vanishes at 0 and at the
    // support edge), so subtracting f0(0) avoids cancellation when f0 is
    // nearly flat over the support; see asymptotic_variance_bump.
    let f00 = if f0(h * r) > 0.5 * f0(0.0) {
        f0(0.0)
    } else {
        0.0
    };
    let i2 = quad::integrate_unit_graded(
        |x| profile.second_deriv(r * x) * (f0(h * r * x) - f00),
        DEFAULT_QUAD_NODES,
    );
    let e1 = 2.0 * r * i1 / (h * h * h);
    let e2 = 2.0 * r * i2 / (h * h);
    if e2.abs() < 1e-30 {
        return Err(Error::Numeric(format!(
            "degenerate density: no mass under the kernel support for h = {h}"
        )));
    }
    let v = e1 / (e2 * e2);
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Numeric(format!(
            "variance evaluation produced {v} at h = {h}"
        )));
    }
    Ok(v)
}

/// Evaluates `V` for a registered test-bed over a bandwidth grid.
pub fn variance_curve(
    tb: Testbed,
    shape: KernelShape,
    h_min: f64,
    h_max: f64,
    n_points: usize,
    log_spacing: bool,
) -> Result<VarianceCurve> {
    check_positive("h_min", h_min)?;
    if !(h_max.is_finite() && h_max > h_min) {
        return Err(Error::Domain(format!(
            "h_max must exceed h_min, got [{h_min}, {h_max}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::Config("curve needs at least 2 grid points".into()));
    }
    let profile = kernels::normalize(shape, 4096)?;
    let h_grid: Vec<f64> = (0..n_points)
        .map(|i| {
            let t = i as f64 / (n_points - 1) as f64;
            if log_spacing {
                (h_min.ln() * (1.0 - t) + h_max.ln() * t).exp()
            } else {
                h_min * (1.0 - t) + h_max * t
            }
        })
        .collect();
    let f0 = testbeds::centered_pdf(tb);
    let values: Vec<Option<f64>> = h_grid
        .par_iter()
        .map(|&h| asymptotic_variance_general(f0, &profile, h).ok())
        .collect();
    let (argmin_idx, min_value) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .ok_or_else(|| Error::Numeric("variance failed at every grid point".into()))?;
    let info = testbeds::info(tb);
    Ok(VarianceCurve {
        kernel: shape,
        h_grid: h_grid.clone(),
        values,
        sigma2_ref: info.sigma2,
        median_ref: 1.0 / (2.0 * info.density_at_center).powi(2),
        argmin_h: h_grid[argmin_idx],
        min_value,
    })
}

/// `I = Ī + 1/(alpha+3)` with `Ī = ∫_0^1 x^{alpha+2} (b(x)^2/b(0)^2 − 1) dx`
/// written out as `exp(−2 x^beta / (1 − x^beta)) − 1`; the compact-support
/// correction term in the regular-variation expansion of `V(h) − sigma^2`.
pub fn tail_gap_integral(beta: f64, alpha: f64) -> Result<f64> {
    check_positive("beta", beta)?;
    if !(alpha < -3.0) {
        return Err(Error::Domain(format!(
            "regular-variation index must satisfy alpha < -3, got {alpha}"
        )));
    }
    if !((alpha + 1.0).abs() < beta) {
        return Err(Error::Domain(format!(
            "kernel-family condition |alpha + 1| < beta violated: |{}| >= {beta}",
            alpha + 1.0
        )));
    }
    let integrand = |x: f64| {
        let xb = x.powf(beta);
        let gap = if xb >= 1.0 {
            -1.0
        } else {
            (-2.0 * xb / (1.0 - xb)).exp_m1()
        };
        x.powf(alpha + 2.0) * gap
    };
    let coarse = quad::integrate_unit_graded(integrand, 2048);
    let fine = quad::integrate_unit_graded(integrand, 4096);
    if (fine - coarse).abs() > 1e-8 * fine.abs().max(1e-12) {
        return Err(Error::Numeric(format!(
            "tail-gap integral did not converge under refinement for beta = {beta}, alpha = {alpha}"
        )));
    }
    Ok(fine + 1.0 / (alpha + 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SQRT_2PI: f64 = 2.506628274631000502;

    fn normal_pdf(x: f64) -> f64 {
        (-0.5 * x * x).exp() / SQRT_2PI
    }

    #[test]
    fn large_h_limit_is_sigma2() {
        let v = asymptotic_variance_bump(normal_pdf, 8.0, 100.0, 1024).unwrap();
        assert!((v - 1.0).abs() < 0.01, "V(100) = {v}");
    }

    #[test]
    fn small_h_blowup_matches_closed_form() {
        // V ~ sigma_m^2 h^-3 with sigma_m^2 = f0(0) R(K') / f0''(0)^2.
        let beta = 8.0;
        let profile = kernels::normalize(KernelShape::BumpFamily { beta }, 4096).unwrap();
        let r_kprime = 2.0
            * quad::integrate_unit_graded(
                |x| {
                    let d = profile.deriv(x);
                    d * d
                },
                2048,
            );
        let f00 = 1.0 / SQRT_2PI;
        let f0pp = -1.0 / SQRT_2PI;
        let sigma_m2 = f00 * r_kprime / (f0pp * f0pp);
        let h = 0.05;
        let v = asymptotic_variance_bump(normal_pdf, beta, h, 2048).unwrap();
        assert!(
            (v * h * h * h / sigma_m2 - 1.0).abs() < 0.1,
            "V h^3 = {}, sigma_m^2 = {sigma_m2}",
            v * h * h * h
        );
    }

    #[test]
    fn scale_equivariance() {
        let s = 3.7;
        for h in [0.3, 2.0, 40.0] {
            let v = asymptotic_variance_bump(normal_pdf, 2.0, h, 1024).unwrap();
            let vs =
                asymptotic_variance_bump(|x| normal_pdf(x / s) / s, 2.0, s * h, 1024).unwrap();
            assert_relative_eq!(vs, s * s * v, max_relative = 1e-8);
        }
    }

    #[test]
    fn general_path_agrees_with_bump_path() {
        let profile = kernels::normalize(KernelShape::BumpFamily { beta: 2.0 }, 4096).unwrap();
        for h in [0.5, 1.0, 5.0, 50.0] {
            let a = asymptotic_variance_bump(normal_pdf, 2.0, h, DEFAULT_QUAD_NODES).unwrap();
            let b = asymptotic_variance_general(normal_pdf, &profile, h).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
    }

    #[test]
    fn small_beta_substitution_agrees_with_general_path() {
        // Below beta = 1 the bump path switches to the s = x^beta
        // substitution; the general profile path integrates in x and is
        // an independent oracle at betas it can still resolve.
        for beta in [0.3, 0.5, 0.8, 0.999] {
            let profile = kernels::normalize(KernelShape::BumpFamily { beta }, 4096).unwrap();
            for h in [0.5, 2.0, 20.0] {
                let a = asymptotic_variance_bump(normal_pdf, beta, h, 2048).unwrap();
                let b = asymptotic_variance_general(normal_pdf, &profile, h).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn tiny_beta_blows_up_instead_of_collapsing() {
        // As beta -> 0 the kernel degenerates toward a spike of width
        // ~ h exp(-1/beta) and the variance must diverge; an unresolved
        // quadrature would instead report a spuriously small value.
        let v1 = asymptotic_variance_bump(normal_pdf, 1.0, 1.0, 1024).unwrap();
        for beta in [0.02, 0.005] {
            let v = asymptotic_variance_bump(normal_pdf, beta, 1.0, 1024).unwrap();
            assert!(v > 1e3 * v1, "V({beta}) = {v}");
        }
    }

    #[test]
    fn triweight_large_h_limit() {
        let profile = kernels::normalize(KernelShape::Triweight, 4096).unwrap();
        let v = asymptotic_variance_general(normal_pdf, &profile, 100.0).unwrap();
        assert!((v - 1.0).abs() < 0.01, "V = {v}");
    }

    #[test]
    fn degenerate_density_is_an_error() {
        // A density with no mass inside [0, h] for small h.
        let shifted = |x: f64| {
            if x.abs() > 999.0 {
                normal_pdf(x.abs() - 1000.0)
            } else {
                0.0
            }
        };
        let r = asymptotic_variance_bump(shifted, 2.0, 0.5, 512);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }

    #[test]
    fn quadrature_convergence_on_testbeds() {
        for tb in Testbed::ALL {
            let f0 = testbeds::centered_pdf(tb);
            for h in [0.01, 1.0, 1e3] {
                for beta in [0.25, 1.0, 8.0] {
                    let v1 = asymptotic_variance_bump(f0, beta, h, 1024).unwrap();
                    let v2 = asymptotic_variance_bump(f0, beta, h, 2048).unwrap();
                    assert_relative_eq!(v1, v2, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn curve_normal_monotone_tail() {
        let curve = variance_curve(
            Testbed::Normal,
            KernelShape::BumpFamily { beta: 8.0 },
            0.5,
            1e3,
            60,
            true,
        )
        .unwrap();
        // The true gap V - sigma^2 decays below quadrature noise (~1e-10)
        // once h is large, so monotonicity and the largest-h minimum are
        // asserted up to that noise floor.
        let upper: Vec<f64> = curve.values[30..].iter().map(|v| v.unwrap()).collect();
        assert!(upper.windows(2).all(|w| w[1] < w[0] + 1e-8));
        let last = curve.values.last().unwrap().unwrap();
        assert!(last <= curve.min_value + 1e-8, "last = {last}");
        assert_eq!(curve.sigma2_ref, 1.0);
    }

    #[test]
    fn curve_reference_levels() {
        let curve = variance_curve(
            Testbed::Laplace,
            KernelShape::BumpFamily { beta: 8.0 },
            0.5,
            100.0,
            20,
            true,
        )
        .unwrap();
        assert_relative_eq!(curve.median_ref, 1.0, max_relative = 1e-12);

        let curve = variance_curve(
            Testbed::StudentT(5),
            KernelShape::BumpFamily { beta: 0.25 },
            0.5,
            1e3,
            100,
            true,
        )
        .unwrap();
        assert!(curve.min_value < 5.0 / 3.0, "min {}", curve.min_value);
        assert!(curve.argmin_h < *curve.h_grid.last().unwrap());
    }

    #[test]
    fn small_h_blowup_on_curve() {
        let f0 = testbeds::centered_pdf(Testbed::Normal);
        for beta in [0.25, 1.0, 8.0] {
            let v_small = asymptotic_variance_bump(f0, beta, 1e-2, 1024).unwrap();
            let v_one = asymptotic_variance_bump(f0, beta, 1.0, 1024).unwrap();
            assert!(v_small > 1e3 * v_one);
        }
    }

    #[test]
    fn regular_variation_gap_stabilizes() {
        // For student_t_4 (alpha = -5) the gap h^2 (V - sigma^2) should be
        // negative and roughly constant over large h.
        let f0 = testbeds::centered_pdf(Testbed::StudentT(4));
        let sigma2 = 2.0;
        let gaps: Vec<f64> = [50.0, 100.0, 200.0]
            .iter()
            .map(|&h| {
                let v = asymptotic_variance_bump(f0, 8.0, h, 4096).unwrap();
                h * h * (v - sigma2)
            })
            .collect();
        for &g in &gaps {
            assert!(g < 0.0, "gaps {gaps:?}");
        }
        let min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (max - min).abs() < 0.25 * min.abs(),
            "gap spread too large: {gaps:?}"
        );
    }

    #[test]
    fn tail_gap_integral_checks() {
        let v = tail_gap_integral(8.0, -5.0).unwrap();
        assert!(v.is_finite());
        assert!(v < 0.0, "expected negative, got {v}");
        assert!(matches!(tail_gap_integral(8.0, -3.0), Err(Error::Domain(_))));
        assert!(matches!(tail_gap_integral(2.0, -5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn tail_gap_integral_refinement_oracle() {
        let integrand = |x: f64, beta: f64, alpha: f64| {
            let xb = x.powf(beta);
            x.powf(alpha + 2.0) * (-2.0 * xb / (1.0 - xb)).exp_m1()
        };
        let fine = quad::integrate_unit_graded(|x| integrand(x, 8.0, -5.0), 20_480);
        let v = tail_gap_integral(8.0, -5.0).unwrap();
        assert_relative_eq!(v, fine + 1.0 / (-5.0 + 3.0), max_relative = 1e-6);
    }
}
