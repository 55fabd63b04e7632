//! Equalizer synthesis: the Theta-parameterized family of contractive
//! `H11` blocks, completion into a full paraunitary 2x2 filter, the
//! closed-form optimal static design, guaranteed-cost cavity designs with
//! a bisection over the bound, and the hardware realization parameters.

use num_complex::Complex64;

use crate::channel::{ChannelError, ChannelKind, ChannelModel, FrequencyGrid};
use crate::rational::{Polynomial, RationalFunction, TransferMatrix};
use crate::spectral::{
    cavity_constants, j_spectral_factor, spectral_factor, AuxiliaryFactorization, SpectralError,
};
use crate::tol;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, thiserror::Error)]
pub enum SynthesisError {
    #[error("Theta must satisfy ||Theta||_inf < 1; measured {0}")]
    ThetaNotContractive(f64),
    #[error("Theta must be stable with a positive analytic margin")]
    ThetaUnstable,
    #[error("H11 is not contractive on the imaginary axis (max |H11| = {0})")]
    NotContractive(f64),
    #[error("1 - H11 H11^H changes rank on the imaginary axis; completion is not defined")]
    RankDropOnAxis,
    #[error("degenerate static channel: psi = 0 and k = 0")]
    DegenerateChannel,
    #[error("Theta = {0} is outside the admissible interval ({1}, {2})")]
    ThetaOutOfInterval(f64, f64, f64),
    #[error("beta + alpha = {0} does not exceed Upsilon_3/mu = {1}; the constant-Theta interval is empty")]
    ThetaIntervalEmpty(f64, f64),
    #[error("no gamma^2 in (0, sigma_u^2 + 2) admits a guaranteed-cost design")]
    Infeasible,
    #[error("static realization requires the interior branch (psi > (1+sigma_u^2)|k|)")]
    BranchMismatch,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rational(#[from] crate::rational::RationalError),
}

pub type Result<T> = std::result::Result<T, SynthesisError>;

/// The row factors and the resulting `H11` of the Theta parameterization.
#[derive(Debug, Clone)]
pub struct SuboptimalParameterization {
    pub theta: RationalFunction,
    pub s1: RationalFunction,
    pub s2: RationalFunction,
    pub h11: RationalFunction,
}

/// Beam-splitter amplitudes of the cavity equalizer hardware.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CavityRealization {
    pub a: f64,
    pub c: f64,
    pub eta1: f64,
    pub xi1: f64,
    pub eta2: f64,
    pub xi2: f64,
    pub hc_pole: f64,
}

/// Transmittance of the single beam splitter implementing the interior
/// static optimum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StaticRealization {
    pub equalizer_transmittance: f64,
}

/// A full 2x2-block equalizing filter with its guaranteed bound.
#[derive(Debug, Clone)]
pub struct EqualizerDesign {
    pub h11: RationalFunction,
    pub h12: RationalFunction,
    pub h21: RationalFunction,
    pub h22: RationalFunction,
    pub gamma_sq_bound: f64,
    pub theta: RationalFunction,
    pub u_allpass: RationalFunction,
    pub aux: Option<AuxiliaryFactorization>,
    pub cavity_realization: Option<CavityRealization>,
}

impl EqualizerDesign {
    pub fn h_matrix(&self) -> TransferMatrix {
        TransferMatrix::new(
            2,
            2,
            vec![
                self.h11.clone(),
                self.h12.clone(),
                self.h21.clone(),
                self.h22.clone(),
            ],
        )
        .expect("2x2 filter matrix")
    }

    /// Max over the grid of the entrywise deviation of `H(iw) H(iw)^dagger`
    /// from the identity.
    pub fn paraunitarity_residual(&self, grid: &FrequencyGrid) -> f64 {
        let h = self.h_matrix();
        let mut worst = 0.0_f64;
        for &w in grid.points() {
            let Ok(m) = h.eval(Complex64::new(0.0, w)) else {
                return f64::INFINITY;
            };
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = -if i == j { ONE } else { Complex64::new(0.0, 0.0) };
                    for l in 0..2 {
                        acc += m[i][l] * m[j][l].conj();
                    }
                    worst = worst.max(acc.norm());
                }
            }
        }
        worst
    }
}

/// `H11 = -Upsilon_3 (1 - Upsilon_1^{-1} Upsilon_2 Theta)^{-1}
/// Upsilon_1^{-1} M^{-1}` together with the row factors
/// `S1 = Upsilon_2^{-1}` and
/// `S2 = -Upsilon_2^{-1} Upsilon_1 (1 - Upsilon_1^{-1} Upsilon_2 Theta)
/// Upsilon_3^{-1}`.
pub fn parameterize_h11(
    aux: &AuxiliaryFactorization,
    theta: &RationalFunction,
) -> Result<SuboptimalParameterization> {
    if !theta.is_stable() || !(theta.analytic_margin() > 0.0) {
        return Err(SynthesisError::ThetaUnstable);
    }
    let theta_norm = theta.hinf_norm(&crate::rational::default_hinf_grid())?;
    if theta_norm >= 1.0 {
        return Err(SynthesisError::ThetaNotContractive(theta_norm));
    }
    let u1_inv = aux.upsilon1.inverse()?;
    let inner = &RationalFunction::one() - &(&(&u1_inv * &aux.upsilon2) * theta);
    let u3 = RationalFunction::real_constant(aux.upsilon3);
    let s1 = aux.upsilon2.inverse()?;
    let s2 = -&(&(&(&s1 * &aux.upsilon1) * &inner) / &u3);
    let h11 = -&(&(&(&u3 * &inner.inverse()?) * &u1_inv) * &aux.m_factor.inverse()?);
    Ok(SuboptimalParameterization {
        theta: theta.clone(),
        s1,
        s2,
        h11,
    })
}

/// `true` iff `|h11(iw)| <= 1 + 1e-10` at every grid point.
pub fn check_contraction(h11: &RationalFunction, grid: &FrequencyGrid) -> bool {
    grid.points().iter().all(|&w| {
        h11.eval(Complex64::new(0.0, w))
            .map(|v| v.norm() <= 1.0 + 1e-10)
            .unwrap_or(false)
    })
}

fn completion_check_grid() -> FrequencyGrid {
    FrequencyGrid::log_symmetric(1e-4, 1e3, 250)
}

/// Completes a contractive `h11` into a full paraunitary 2x2 filter.
///
/// The off-diagonal blocks are the spectral factors of
/// `X = 1 - h11 h11^H`; an inner (all-pass) factor `U` cancels the
/// right-half-plane poles that the raw `h22` expression inherits from the
/// inverted spectral factor.  When `X` vanishes identically (`h11` inner),
/// no noise channel is needed and the completion is `diag(h11, 1)`.
pub fn complete_equalizer(h11: &RationalFunction) -> Result<EqualizerDesign> {
    if !h11.is_stable() || !(h11.analytic_margin() > 0.0) || !h11.is_proper() {
        return Err(SynthesisError::NotContractive(f64::INFINITY));
    }
    let grid = completion_check_grid();
    let max_mag = grid
        .points()
        .iter()
        .filter_map(|&w| h11.eval(Complex64::new(0.0, w)).ok())
        .map(|v| v.norm())
        .fold(0.0_f64, f64::max);
    if max_mag > 1.0 + 1e-10 {
        return Err(SynthesisError::NotContractive(max_mag));
    }

    let x = &RationalFunction::one() - &(h11 * &h11.para_conjugate());

    // Classify the rank of X on the axis: the completion exists only when
    // it is constant there.
    let mut always_big = true;
    let mut always_tiny = true;
    for &w in grid.points() {
        if let Ok(v) = x.eval(Complex64::new(0.0, w)) {
            if v.norm() <= 1e-10 {
                always_big = false;
            }
            if v.norm() >= 1e-12 {
                always_tiny = false;
            }
        }
    }
    if always_tiny || x.is_zero() {
        // h11 inner: no noise channel required
        return Ok(EqualizerDesign {
            h11: h11.clone(),
            h12: RationalFunction::zero(),
            h21: RationalFunction::zero(),
            h22: RationalFunction::one(),
            gamma_sq_bound: f64::INFINITY,
            theta: RationalFunction::zero(),
            u_allpass: RationalFunction::one(),
            aux: None,
            cavity_realization: None,
        });
    }
    if !always_big {
        return Err(SynthesisError::RankDropOnAxis);
    }

    let h12 = spectral_factor(&x)?;
    let h21_tilde = h12.clone();
    let raw = &(&h21_tilde.inverse()?.para_conjugate() * &h11.para_conjugate()) * &h12;

    // Inner factor cancelling the unstable poles of `raw`.
    let rhp: Vec<Complex64> = raw.poles().into_iter().filter(|p| p.re > 0.0).collect();
    let mut u = RationalFunction::one();
    for p in rhp {
        u = &u
            * &RationalFunction::new(
                Polynomial::new(vec![-p, ONE]),
                Polynomial::new(vec![p.conj(), ONE]),
            );
    }
    let h21 = &u * &h21_tilde;
    let h22 = -&(&u * &raw);
    Ok(EqualizerDesign {
        h11: h11.clone(),
        h12,
        h21,
        h22,
        gamma_sq_bound: f64::INFINITY,
        theta: RationalFunction::zero(),
        u_allpass: u,
        aux: None,
        cavity_realization: None,
    })
}

fn static_params(channel: &ChannelModel) -> Option<(Complex64, f64, f64)> {
    match channel.kind {
        ChannelKind::Static { k, .. } => {
            let psi = channel.psi().as_constant().map(|v| v.re)?;
            Some((k, psi, channel.intensities.sigma_u_sq))
        }
        ChannelKind::Cavity { .. } => None,
    }
}

/// Closed-form optimal design for static channels: the phase corrector
/// `k^*/|k|` when `psi <= (1+sigma_u^2)|k|`, the interior optimum
/// `(1+sigma_u^2) k^*/psi` otherwise.
pub fn static_optimal(channel: &ChannelModel) -> Result<EqualizerDesign> {
    let (k, psi, su2) = static_params(channel).ok_or(SynthesisError::BranchMismatch)?;
    let ka = k.norm();
    if psi == 0.0 && ka == 0.0 {
        return Err(SynthesisError::DegenerateChannel);
    }
    if psi <= (1.0 + su2) * ka {
        // boundary branch: phase correction only; h11 is inner, so the
        // completion carries no noise channel
        let h11 = RationalFunction::constant(k.conj() / ka);
        let bound = psi - 2.0 * (1.0 + su2) * ka + 2.0 + su2;
        let mut design = complete_equalizer(&h11)?;
        design.gamma_sq_bound = bound;
        Ok(design)
    } else {
        let h11 = RationalFunction::constant(k.conj() * (1.0 + su2) / psi);
        let bound = 2.0 + su2 - (1.0 + su2).powi(2) * k.norm_sqr() / psi;
        let mut design = complete_equalizer(&h11)?;
        design.gamma_sq_bound = bound;
        Ok(design)
    }
}

/// The environment-intensity threshold above which the contraction
/// constraint becomes inactive:
/// `sigma_w_bar^2 = ((1+sigma_u^2)|k| - sigma_u^2 |k|^2)/|m|^2`.
pub fn static_threshold(channel: &ChannelModel) -> Result<f64> {
    let ChannelKind::Static { k, m, .. } = channel.kind else {
        return Err(SynthesisError::BranchMismatch);
    };
    let su2 = channel.intensities.sigma_u_sq;
    Ok(((1.0 + su2) * k.norm() - su2 * k.norm_sqr()) / m.norm_sqr())
}

/// S-procedure feasibility: a multiplier `theta > 0` making the
/// frequency-domain LMI hold at all grid points, or `None`.
///
/// Static channels use the closed-form criterion; everything else goes
/// through the grid line search.
pub fn threshold_lmi_feasible(channel: &ChannelModel, gamma_sq: f64) -> Option<f64> {
    if let Some((k, psi, su2)) = static_params(channel) {
        // feasible iff psi - (1+su2)^2 |k|^2 / psi > 0, i.e.
        // psi > (1+su2)|k|; the multiplier interval is
        // 1/theta in (0, psi - (1+su2)^2 |k|^2 / psi)
        let q_sq = (1.0 + su2).powi(2) * k.norm_sqr();
        let span = psi - q_sq / psi;
        if span > 0.0 && gamma_sq >= 2.0 + su2 - q_sq / psi {
            return Some(2.0 / span);
        }
        return None;
    }
    let grid = FrequencyGrid::log_symmetric(1e-4, 1e3, 500);
    crate::verify::certify_threshold(channel, gamma_sq, &grid).map(|c| c.theta)
}

/// Guaranteed-cost cavity design at a fixed `gamma^2` and constant
/// `Theta`.
pub fn cavity_suboptimal(
    channel: &ChannelModel,
    gamma_sq: f64,
    theta_const: f64,
) -> Result<EqualizerDesign> {
    let ChannelKind::Cavity { kappa, omega_c, .. } = channel.kind else {
        return Err(SynthesisError::BranchMismatch);
    };
    let cc = cavity_constants(channel, gamma_sq)?;
    let su2 = channel.intensities.sigma_u_sq;
    let upsilon3 = (su2 + 2.0 - gamma_sq).sqrt();
    let bound_ratio = upsilon3 / cc.mu;
    if cc.beta + cc.alpha <= bound_ratio {
        return Err(SynthesisError::ThetaIntervalEmpty(
            cc.beta + cc.alpha,
            bound_ratio,
        ));
    }
    let upper = ((cc.beta - bound_ratio) / cc.alpha).min(0.0);
    if !(theta_const > -1.0 && theta_const < upper) {
        return Err(SynthesisError::ThetaOutOfInterval(theta_const, -1.0, upper));
    }

    let a = -upsilon3 / (cc.mu * (cc.beta - theta_const * cc.alpha));
    let c = (cc.beta * cc.delta_hat - theta_const * cc.nu)
        / (cc.beta - theta_const * cc.alpha);
    let h11 = &RationalFunction::new(
        Polynomial::new(vec![Complex64::new(kappa, omega_c), ONE]),
        Polynomial::new(vec![Complex64::new(c * kappa, omega_c), ONE]),
    ) * Complex64::new(a, 0.0);

    let mut design = complete_equalizer(&h11)?;
    design.gamma_sq_bound = gamma_sq;
    design.theta = RationalFunction::real_constant(theta_const);
    design.aux = Some(j_spectral_factor(channel, gamma_sq)?);
    design.cavity_realization = Some(realization_from_ac(a, c, kappa));
    Ok(design)
}

fn realization_from_ac(a: f64, c: f64, kappa: f64) -> CavityRealization {
    let root = ((c * c - a * a) * (1.0 - a * a)).sqrt();
    let eta1 = -(((c + a * a - root) / (2.0 * c)).max(0.0)).sqrt();
    let xi1 = (1.0 - eta1 * eta1).sqrt();
    let eta2 = -(((c - a * a - root) / (2.0 * c)).max(0.0)).sqrt();
    let xi2 = (1.0 - eta2 * eta2).sqrt();
    CavityRealization {
        a,
        c,
        eta1,
        xi1,
        eta2,
        xi2,
        hc_pole: c * kappa,
    }
}

fn cavity_feasible(channel: &ChannelModel, gamma_sq: f64, theta: f64) -> bool {
    let su2 = channel.intensities.sigma_u_sq;
    if !(gamma_sq > 0.0 && gamma_sq < su2 + 2.0) {
        return false;
    }
    let Ok(cc) = cavity_constants(channel, gamma_sq) else {
        return false;
    };
    let bound_ratio = (su2 + 2.0 - gamma_sq).sqrt() / cc.mu;
    if cc.beta + cc.alpha <= bound_ratio {
        return false;
    }
    // the chosen near-endpoint Theta must lie strictly inside the interval
    let upper = ((cc.beta - bound_ratio) / cc.alpha).min(0.0);
    theta > -1.0 && theta < upper
}

/// Minimizes the guaranteed bound `gamma^2` over the feasible set by
/// bisection, holding `Theta` at the configured offset from the interval
/// endpoint `-1`.  Returns the bound (with a small safety margin) and the
/// corresponding design; when nothing in `(0, sigma_u^2 + 2)` is feasible
/// the trivial filter `H11 = 0` with bound `sigma_u^2 + 2` is returned.
pub fn cavity_gamma_search(channel: &ChannelModel) -> Result<(f64, EqualizerDesign)> {
    cavity_gamma_search_with_theta(channel, -1.0 + tol::THETA_ENDPOINT_OFFSET)
}

pub fn cavity_gamma_search_with_theta(
    channel: &ChannelModel,
    theta: f64,
) -> Result<(f64, EqualizerDesign)> {
    if !matches!(channel.kind, ChannelKind::Cavity { .. }) {
        return Err(SynthesisError::BranchMismatch);
    }
    let su2 = channel.intensities.sigma_u_sq;
    let hi_end = su2 + 2.0;
    let mut hi = hi_end - 1e-9;
    if !cavity_feasible(channel, hi, theta) {
        // nothing below sigma_u^2 + 2 works; report the trivial filter
        let mut design = complete_equalizer(&RationalFunction::zero())?;
        design.gamma_sq_bound = hi_end;
        return Ok((hi_end, design));
    }
    let mut lo = 0.0_f64;
    while hi - lo > tol::GAMMA_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if cavity_feasible(channel, mid, theta) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let gamma_sq = hi + tol::GAMMA_SAFETY_MARGIN;
    let design = cavity_suboptimal(channel, gamma_sq, theta)?;
    Ok((gamma_sq, design))
}

/// Beam-splitter amplitudes of a cavity design; available only for designs
/// produced by the cavity synthesis path.
pub fn cavity_realization(design: &EqualizerDesign) -> Result<CavityRealization> {
    design
        .cavity_realization
        .ok_or(SynthesisError::BranchMismatch)
}

/// Transmittance of the single-beam-splitter implementation of the
/// interior static optimum.
pub fn static_realization(channel: &ChannelModel) -> Result<StaticRealization> {
    let (k, psi, su2) = static_params(channel).ok_or(SynthesisError::BranchMismatch)?;
    if psi <= (1.0 + su2) * k.norm() {
        return Err(SynthesisError::BranchMismatch);
    }
    let eta = k.norm_sqr();
    let sw2 = channel.intensities.sigma_w_sq;
    Ok(StaticRealization {
        equalizer_transmittance: (1.0 + su2).powi(2) * eta
            / (su2 * eta + sw2 * (1.0 - eta)).powi(2),
    })
}
