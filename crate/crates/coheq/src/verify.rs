//! Independent checks of finished designs: filter paraunitarity,
//! contraction of `H11`, the guaranteed error bound, rank constancy of the
//! completion defect, and the S-procedure certificate for a claimed bound.

use num_complex::Complex64;

use crate::channel::{ChannelKind, ChannelModel, FrequencyGrid};
use crate::synthesis::EqualizerDesign;
use crate::tol;

/// Outcome of [`verify_design`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct VerificationReport {
    pub paraunitarity_residual_max: f64,
    /// `1 - max_w |H11(iw)|`; negative means the contraction is violated.
    pub contraction_margin: f64,
    /// `gamma^2 - max_w P_e(w)`; designs that attain their bound exactly
    /// sit at zero up to rounding.
    pub psd_bound_margin: f64,
    /// `1 - H11 H11^H` keeps the same rank at every grid point.
    pub h3_rank_constant: bool,
    pub grid_used: Vec<f64>,
    pub passed: bool,
}

/// S-procedure multiplier certifying feasibility of a claimed bound.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ThresholdCertificate {
    pub theta: f64,
    pub min_eig_over_grid: f64,
}

/// Dense grid used when the caller does not supply one: logarithmic over
/// four decades on both sides of zero, plus zero and the channel
/// resonances.
pub fn default_verification_grid(channel: &ChannelModel) -> FrequencyGrid {
    let mut grid = FrequencyGrid::log_symmetric(1e-4, 1e3, 1000);
    if let ChannelKind::Cavity { omega_c, .. } = channel.kind {
        grid = grid.with_points(&[omega_c, -omega_c]);
    }
    grid.with_points(&[0.0])
}

/// Checks a finished design against the channel on `grid`.
pub fn verify_design(
    channel: &ChannelModel,
    design: &EqualizerDesign,
    grid: &FrequencyGrid,
) -> VerificationReport {
    let profile = tol::Profile::from_env();
    let paraunitarity_residual_max = design.paraunitarity_residual(grid);

    let mut max_h11 = 0.0_f64;
    let mut max_pe = f64::NEG_INFINITY;
    let mut defect_big = true;
    let mut defect_tiny = true;
    let mut eval_ok = true;
    for &w in grid.points() {
        let s = Complex64::new(0.0, w);
        match design.h11.eval(s) {
            Ok(v) => {
                max_h11 = max_h11.max(v.norm());
                let d = 1.0 - v.norm_sqr();
                if d.abs() <= 1e-10 {
                    defect_big = false;
                }
                if d.abs() >= 1e-12 {
                    defect_tiny = false;
                }
            }
            Err(_) => eval_ok = false,
        }
        match channel.error_psd(&design.h11, w) {
            Ok(p) => max_pe = max_pe.max(p),
            Err(_) => eval_ok = false,
        }
    }
    let contraction_margin = 1.0 - max_h11;
    let psd_bound_margin = design.gamma_sq_bound - max_pe;
    let h3_rank_constant = defect_big || defect_tiny;
    // Designs that attain their bound exactly (the closed-form static
    // optimum) have a margin of zero up to rounding; allow that much.
    let psd_slack = 1e-12 * (1.0 + design.gamma_sq_bound.abs());
    let passed = eval_ok
        && paraunitarity_residual_max <= profile.paraunitarity_tol()
        && contraction_margin >= profile.contraction_margin()
        && psd_bound_margin >= -psd_slack
        && h3_rank_constant
        && design.h11.is_stable()
        && design.h12.is_stable()
        && design.h21.is_stable()
        && design.h22.is_stable();
    VerificationReport {
        paraunitarity_residual_max,
        contraction_margin,
        psd_bound_margin,
        h3_rank_constant,
        grid_used: grid.points().to_vec(),
        passed,
    }
}

/// Smallest eigenvalue over `grid` of the S-procedure matrix at a fixed
/// multiplier `theta`.
fn min_eig_over_samples(samples: &[(f64, f64)], su2: f64, gamma_sq: f64, theta: f64) -> f64 {
    let mut worst = f64::INFINITY;
    for &(p, g_sq) in samples {
        let a = theta * p - 1.0;
        let d = theta * (su2 + 2.0 - gamma_sq) + 1.0;
        let b2 = (theta * (1.0 + su2)).powi(2) * g_sq;
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d).powi(2) + b2).sqrt();
        worst = worst.min(mid - rad);
    }
    worst
}

/// Searches for a multiplier `theta > 0` making the S-procedure matrix
/// positive semidefinite on `grid`, certifying that `gamma_sq` upper
/// bounds the disc-constrained optimum at every grid frequency.
///
/// A coarse logarithmic scan locates the most promising multiplier; a
/// golden-section refinement then maximizes the worst-case eigenvalue.
pub fn certify_threshold(
    channel: &ChannelModel,
    gamma_sq: f64,
    grid: &FrequencyGrid,
) -> Option<ThresholdCertificate> {
    // sample Psi and |G11|^2 once; the theta search reuses the samples
    let su2 = channel.intensities.sigma_u_sq;
    let psi = channel.psi();
    let mut samples = Vec::with_capacity(grid.len());
    for &w in grid.points() {
        let s = Complex64::new(0.0, w);
        let (Ok(p), Ok(g)) = (psi.eval(s), channel.g11.eval(s)) else {
            return None;
        };
        samples.push((p.re, g.norm_sqr()));
    }
    let f = |theta: f64| min_eig_over_samples(&samples, su2, gamma_sq, theta);
    let mut best_theta = 0.0;
    let mut best = f64::NEG_INFINITY;
    let n = 200;
    for i in 0..=n {
        let theta = 1e-6_f64 * (1e10_f64).powf(i as f64 / n as f64);
        let v = f(theta);
        if v > best {
            best = v;
            best_theta = theta;
        }
    }
    // golden-section refinement on a log bracket around the scan winner
    let (mut lo, mut hi) = (best_theta / 10.0, best_theta * 10.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - (hi - lo) * phi;
        let m2 = lo + (hi - lo) * phi;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let theta = 0.5 * (lo + hi);
    let v = f(theta);
    let (theta, v) = if v > best { (theta, v) } else { (best_theta, best) };
    (v >= 0.0).then_some(ThresholdCertificate {
        theta,
        min_eig_over_grid: v,
    })
}
