//! Passive channel models and the error power-spectral-density functional.
//!
//! Two channel families are supported: a static two-port (a beam splitter
//! with a phase) and an optical cavity whose inputs and outputs pass through
//! beam splitters.  Both are paraunitary 2x2 transfer matrices; the
//! constructors check that numerically.  The module also evaluates the
//! equalization error PSD `P_e(iw, H11)` in two independent ways, which
//! cross-check each other whenever the filter row is co-isometric.

use num_complex::Complex64;

use crate::rational::{Polynomial, RationalFunction, TransferMatrix};
use crate::tol;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, thiserror::Error)]
pub enum ChannelError {
    #[error("static channel requires |k|^2 + |m|^2 = 1; got {0}")]
    NotUnitary(f64),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("channel block fails paraunitarity check (residual {0:.3e})")]
    ParaunitarityViolation(f64),
    #[error(transparent)]
    Rational(#[from] crate::rational::RationalError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Thermal intensities of the channel input field and environment field.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FieldIntensities {
    pub sigma_u_sq: f64,
    pub sigma_w_sq: f64,
}

impl FieldIntensities {
    pub fn new(sigma_u_sq: f64, sigma_w_sq: f64) -> Result<Self> {
        if sigma_u_sq < 0.0 || sigma_w_sq < 0.0 {
            return Err(ChannelError::ParameterOutOfRange(
                "field intensities must be nonnegative".into(),
            ));
        }
        Ok(FieldIntensities { sigma_u_sq, sigma_w_sq })
    }
}

/// Which physical device the channel blocks came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    Static { k: Complex64, m: Complex64, phi: f64 },
    Cavity { k: f64, kappa: f64, omega_c: f64 },
}

/// Partitioned passive channel: annihilation-part blocks of the 2x2
/// paraunitary transfer matrix, plus the field intensities.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub g11: RationalFunction,
    pub g12: RationalFunction,
    pub g21: RationalFunction,
    pub g22: RationalFunction,
    pub intensities: FieldIntensities,
    pub kind: ChannelKind,
}

/// Sorted list of real frequencies (rad/s).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    /// Builds a grid from arbitrary finite points (sorted, deduplicated).
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|w| !w.is_finite()) {
            return Err(ChannelError::ParameterOutOfRange(
                "frequency grid must be finite".into(),
            ));
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        if points.is_empty() {
            return Err(ChannelError::ParameterOutOfRange(
                "frequency grid must be nonempty".into(),
            ));
        }
        Ok(FrequencyGrid { points })
    }

    /// Symmetric log-spaced grid: `n` magnitudes in `[lo, hi]`, mirrored,
    /// plus zero.
    pub fn log_symmetric(lo: f64, hi: f64, n: usize) -> Self {
        let mut points = vec![0.0];
        for k in 0..n {
            let w = if n == 1 {
                lo
            } else {
                lo * (hi / lo).powf(k as f64 / (n - 1) as f64)
            };
            points.push(w);
            points.push(-w);
        }
        FrequencyGrid::new(points).expect("log grid construction")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Returns a grid with `extra` merged in.
    pub fn with_points(&self, extra: &[f64]) -> Self {
        let mut pts = self.points.clone();
        pts.extend_from_slice(extra);
        FrequencyGrid::new(pts).expect("grid merge")
    }
}

impl ChannelModel {
    /// Static two-port: `g11 = k`, `g12 = m`, `g21 = -e^{i phi} conj(m)`,
    /// `g22 = e^{i phi} conj(k)`.
    pub fn new_static(
        k: Complex64,
        m: Complex64,
        phi: f64,
        intensities: FieldIntensities,
    ) -> Result<Self> {
        let norm = k.norm_sqr() + m.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(ChannelError::NotUnitary(norm));
        }
        let phase = Complex64::from_polar(1.0, phi);
        let model = ChannelModel {
            g11: RationalFunction::constant(k),
            g12: RationalFunction::constant(m),
            g21: RationalFunction::constant(-phase * m.conj()),
            g22: RationalFunction::constant(phase * k.conj()),
            intensities,
            kind: ChannelKind::Static { k, m, phi },
        };
        model.check_paraunitarity()?;
        Ok(model)
    }

    /// Cavity with input/output beam splitters of (real) amplitude `k`,
    /// cavity half-width `kappa` and detuning `omega_c`:
    ///
    /// `G_c(s) = (s - kappa + i omega_c)/(s + kappa + i omega_c)` and
    /// `g11 = k^2 G_c - (1 - k^2)`, `g12 = k sqrt(1-k^2) (G_c + 1)`,
    /// `g21 = -g12`, `g22 = k^2 - (1-k^2) G_c`.
    pub fn new_cavity(
        k: f64,
        kappa: f64,
        omega_c: f64,
        intensities: FieldIntensities,
    ) -> Result<Self> {
        if !(k * k > 0.0 && k * k < 0.5) {
            return Err(ChannelError::ParameterOutOfRange(format!(
                "cavity coupling must satisfy 0 < k^2 < 1/2; got k = {k}"
            )));
        }
        if kappa <= 0.0 {
            return Err(ChannelError::ParameterOutOfRange(format!(
                "cavity half-width must be positive; got kappa = {kappa}"
            )));
        }
        let gc = cavity_mode(kappa, omega_c);
        let k2 = RationalFunction::real_constant(k * k);
        let one_minus_k2 = RationalFunction::real_constant(1.0 - k * k);
        let cross = RationalFunction::real_constant(k * (1.0 - k * k).sqrt());
        let g11 = &(&k2 * &gc) - &one_minus_k2;
        let g12 = &cross * &(&gc + &RationalFunction::one());
        let g21 = -&g12;
        let g22 = &k2 - &(&one_minus_k2 * &gc);
        let model = ChannelModel {
            g11,
            g12,
            g21,
            g22,
            intensities,
            kind: ChannelKind::Cavity { k, kappa, omega_c },
        };
        model.check_paraunitarity()?;
        Ok(model)
    }

    /// The 2x2 block matrix view.
    pub fn g_matrix(&self) -> TransferMatrix {
        TransferMatrix::new(
            2,
            2,
            vec![
                self.g11.clone(),
                self.g12.clone(),
                self.g21.clone(),
                self.g22.clone(),
            ],
        )
        .expect("2x2 channel matrix")
    }

    /// Internal constructor check: `G(iw) G(iw)^dagger = I` on a 200-point
    /// grid plus the cavity resonance.
    fn check_paraunitarity(&self) -> Result<()> {
        let residual = self.paraunitarity_residual(&self.default_check_grid())?;
        if residual > tol::CHANNEL_PARAUNITARITY_TOL {
            return Err(ChannelError::ParaunitarityViolation(residual));
        }
        Ok(())
    }

    fn default_check_grid(&self) -> FrequencyGrid {
        let base = FrequencyGrid::log_symmetric(1e-3, 1e3, 100);
        match self.kind {
            ChannelKind::Cavity { omega_c, .. } => base.with_points(&[-omega_c, omega_c]),
            ChannelKind::Static { .. } => base,
        }
    }

    /// Max over the grid of `||G(iw) G(iw)^dagger - I||` (entrywise max).
    pub fn paraunitarity_residual(&self, grid: &FrequencyGrid) -> Result<f64> {
        let g = self.g_matrix();
        let mut worst = 0.0_f64;
        for &w in grid.points() {
            let m = g.eval(Complex64::new(0.0, w))?;
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
        Ok(worst)
    }

    /// The para-Hermitian weight
    /// `Psi = G11 sigma_u^2 G11^H + G12 sigma_w^2 G12^H`.
    pub fn psi(&self) -> RationalFunction {
        let su = RationalFunction::real_constant(self.intensities.sigma_u_sq);
        let sw = RationalFunction::real_constant(self.intensities.sigma_w_sq);
        let t1 = &(&self.g11 * &su) * &self.g11.para_conjugate();
        let t2 = &(&self.g12 * &sw) * &self.g12.para_conjugate();
        &t1 + &t2
    }

    /// Error PSD `P_e(iw, H11)` through the reduced quadratic form:
    /// `|H11|^2 Psi - 2 (1+sigma_u^2) Re[H11 G11] + sigma_u^2 + 2`.
    pub fn error_psd(&self, h11: &RationalFunction, omega: f64) -> Result<f64> {
        let s = Complex64::new(0.0, omega);
        let h = h11.eval(s)?;
        let g = self.g11.eval(s)?;
        let psi = self.psi().eval(s)?.re;
        let su2 = self.intensities.sigma_u_sq;
        Ok(h.norm_sqr() * psi - 2.0 * (1.0 + su2) * (h * g).re + su2 + 2.0)
    }

    /// Error PSD at a single frequency for a pointwise filter value `h`,
    /// through the same reduced quadratic form as [`Self::error_psd`].
    pub fn error_psd_at(&self, h: Complex64, omega: f64) -> Result<f64> {
        let s = Complex64::new(0.0, omega);
        let g = self.g11.eval(s)?;
        let psi = self.psi().eval(s)?.re;
        let su2 = self.intensities.sigma_u_sq;
        Ok(h.norm_sqr() * psi - 2.0 * (1.0 + su2) * (h * g).re + su2 + 2.0)
    }

    /// Independent error-PSD path through the error operator row
    /// `E_-(iw) = [H11 G11 - 1, H11 G12, H12]` and the upper-left blocks
    /// `diag(1 + sigma_u^2, 1 + sigma_w^2, 1)` of the combined-field
    /// intensity matrix (filter environment in vacuum):
    /// `P_e = E_- F_v E_-^dagger`.
    ///
    /// Agrees with [`Self::error_psd`] whenever `|H11|^2 + |H12|^2 = 1` at
    /// the evaluated frequency.
    pub fn error_psd_oracle(
        &self,
        h11: &RationalFunction,
        h12: &RationalFunction,
        omega: f64,
    ) -> Result<f64> {
        let s = Complex64::new(0.0, omega);
        let h11v = h11.eval(s)?;
        let h12v = h12.eval(s)?;
        let g11v = self.g11.eval(s)?;
        let g12v = self.g12.eval(s)?;
        let e = [h11v * g11v - ONE, h11v * g12v, h12v];
        let fv = [
            1.0 + self.intensities.sigma_u_sq,
            1.0 + self.intensities.sigma_w_sq,
            1.0,
        ];
        Ok(e.iter().zip(fv).map(|(ei, f)| ei.norm_sqr() * f).sum())
    }

    /// PSD of the raw channel error `y - u` (pass-through filter
    /// `H11 = 1`, `H12 = 0`).
    pub fn unequalized_psd(&self, omega: f64) -> Result<f64> {
        self.error_psd_oracle(&RationalFunction::one(), &RationalFunction::zero(), omega)
    }
}

/// The cavity mode transfer function
/// `G_c(s) = (s - kappa + i omega_c)/(s + kappa + i omega_c)`.
pub fn cavity_mode(kappa: f64, omega_c: f64) -> RationalFunction {
    RationalFunction::new(
        Polynomial::new(vec![Complex64::new(-kappa, omega_c), ONE]),
        Polynomial::new(vec![Complex64::new(kappa, omega_c), ONE]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn intensities(su2: f64, sw2: f64) -> FieldIntensities {
        FieldIntensities::new(su2, sw2).unwrap()
    }

    fn static_eta(eta: f64, su2: f64, sw2: f64) -> ChannelModel {
        ChannelModel::new_static(
            c(eta.sqrt(), 0.0),
            c((1.0 - eta).sqrt(), 0.0),
            0.0,
            intensities(su2, sw2),
        )
        .unwrap()
    }

    fn reference_cavity(sw2: f64) -> ChannelModel {
        ChannelModel::new_cavity(0.4, 5.0, 10.0, intensities(0.1, sw2)).unwrap()
    }

    #[test]
    fn identity_static_channel() {
        let ch = ChannelModel::new_static(c(1.0, 0.0), c(0.0, 0.0), 0.0, intensities(0.1, 0.2))
            .unwrap();
        assert_eq!(ch.g11.as_constant().unwrap(), c(1.0, 0.0));
        assert_eq!(ch.g12.as_constant().unwrap(), c(0.0, 0.0));
        assert_eq!(ch.g22.as_constant().unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn static_channel_blocks_and_unitarity() {
        let ch = static_eta(0.7, 0.1, 0.2);
        assert_abs_diff_eq!(
            ch.g11.as_constant().unwrap().re,
            0.7_f64.sqrt(),
            epsilon = 1e-12
        );
        let grid = FrequencyGrid::log_symmetric(1e-3, 1e3, 100);
        assert!(ch.paraunitarity_residual(&grid).unwrap() < 1e-12);
    }

    #[test]
    fn non_unitary_static_rejected() {
        let err =
            ChannelModel::new_static(c(0.5, 0.0), c(0.5, 0.0), 0.0, intensities(0.1, 0.2));
        assert!(matches!(err, Err(ChannelError::NotUnitary(_))));
    }

    #[test]
    fn cavity_resonance_value() {
        // at w = -omega_c the cavity mode is -1, so g11 = -k^2 - (1-k^2) = -1
        let ch = reference_cavity(0.2);
        let v = ch.g11.eval(c(0.0, -10.0)).unwrap();
        assert_abs_diff_eq!(v.re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
        let g12 = ch.g12.eval(c(0.0, -10.0)).unwrap();
        assert!(g12.norm() < 1e-12);
    }

    #[test]
    fn cavity_paraunitarity_on_grid() {
        let ch = reference_cavity(0.2);
        let grid = FrequencyGrid::log_symmetric(1e-3, 1e3, 100).with_points(&[-10.0, 10.0]);
        assert!(ch.paraunitarity_residual(&grid).unwrap() < 1e-9);
    }

    #[test]
    fn cavity_k_out_of_range() {
        let err = ChannelModel::new_cavity(0.8, 5.0, 10.0, intensities(0.1, 0.2));
        assert!(matches!(err, Err(ChannelError::ParameterOutOfRange(_))));
    }

    #[test]
    fn static_psi_is_constant_mix() {
        // psi = eta sigma_u^2 + (1-eta) sigma_w^2
        let ch = static_eta(0.7, 0.1, 0.2);
        let psi = ch.psi();
        let v = psi.as_constant().unwrap();
        assert_abs_diff_eq!(v.re, 0.13, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);

        // equal intensities give psi = sigma^2 identically
        let eq = static_eta(0.3, 0.5, 0.5);
        assert_abs_diff_eq!(eq.psi().as_constant().unwrap().re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn cavity_psi_at_resonance() {
        // at w = -omega_c: |g11| = 1, g12 = 0, so Psi = sigma_u^2
        let ch = reference_cavity(0.2);
        let v = ch.psi().eval(c(0.0, -10.0)).unwrap();
        assert_abs_diff_eq!(v.re, 0.1, epsilon = 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn psi_para_hermitian_and_nonnegative() {
        let ch = reference_cavity(4.0);
        let psi = ch.psi();
        let ph = psi.para_conjugate();
        for k in 0..200 {
            let w = -100.0 + k as f64;
            let s = c(0.0, w);
            let a = psi.eval(s).unwrap();
            let b = ph.eval(s).unwrap();
            assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
            assert!(a.re >= -1e-12);
            assert!(a.im.abs() < 1e-10);
        }
    }

    #[test]
    fn error_psd_zero_filter() {
        let ch = reference_cavity(0.2);
        for w in [-10.0, -1.0, 0.0, 2.5, 100.0] {
            let v = ch.error_psd(&RationalFunction::zero(), w).unwrap();
            assert_abs_diff_eq!(v, 2.1, epsilon = 1e-14);
        }
    }

    #[test]
    fn error_psd_static_branch_b_value() {
        // eta = 0.7, sigma_u^2 = 0.1, sigma_w^2 = 4: psi = 1.27 and the
        // interior optimum h = (1+0.1) sqrt(0.7)/1.27 gives
        // 2.1 - 1.21*0.7/1.27
        let ch = static_eta(0.7, 0.1, 4.0);
        let h = RationalFunction::real_constant(1.1 * 0.7_f64.sqrt() / 1.27);
        let v = ch.error_psd(&h, 0.37).unwrap();
        assert_abs_diff_eq!(v, 2.1 - 1.21 * 0.7 / 1.27, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 1.4330708661417323, epsilon = 1e-10);
    }

    #[test]
    fn pass_through_oracle_static() {
        // H11 = 1, H12 = 0: value = |k-1|^2 (1+su2) + (1-k^2)(1+sw2)
        let ch = static_eta(0.7, 0.1, 4.0);
        let k = 0.7_f64.sqrt();
        let expect = (k - 1.0).powi(2) * 1.1 + 0.3 * 5.0;
        let v = ch.unequalized_psd(1.23).unwrap();
        assert_abs_diff_eq!(v, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 1.5293479416, epsilon = 1e-9);

        // gap identity: P_{y-u} - gamma_o^2 = |psi - (1+su2) k|^2 / psi
        let psi = 1.27;
        let gamma_o_sq = 2.1 - (1.1_f64).powi(2) * 0.7 / psi;
        let gap = (psi - 1.1 * k).powi(2) / psi;
        assert_abs_diff_eq!(v - gamma_o_sq, gap, epsilon = 1e-12);
    }

    #[test]
    fn oracle_matches_reduced_form_on_coisometric_rows() {
        // any |h11|^2 + |h12|^2 = 1 pair must agree between the two paths
        let channels = [static_eta(0.7, 0.1, 4.0), reference_cavity(0.2)];
        for ch in &channels {
            for (a, wshift) in [(0.3, 0.0), (0.75, 1.0), (0.0, -2.0), (1.0, 3.0)] {
                let h11 = RationalFunction::real_constant(a);
                let h12 = RationalFunction::real_constant((1.0_f64 - a * a).sqrt());
                for k in 0..100 {
                    let w = -50.0 + k as f64 + wshift * 0.01;
                    let lhs = ch.error_psd(&h11, w).unwrap();
                    let rhs = ch.error_psd_oracle(&h11, &h12, w).unwrap();
                    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn grid_constructor_sorts_and_dedups() {
        let g = FrequencyGrid::new(vec![3.0, -1.0, 3.0, 0.0]).unwrap();
        assert_eq!(g.points(), &[-1.0, 0.0, 3.0]);
        assert!(FrequencyGrid::new(vec![f64::NAN]).is_err());
        assert!(FrequencyGrid::new(vec![]).is_err());
    }
}
