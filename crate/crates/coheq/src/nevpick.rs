//! Nevanlinna-Pick interpolation of the per-frequency optima: boundary
//! nodes `iw_l` are moved into the open right half plane by a conformal
//! shift `tau`, the Pick matrix is assembled and factorized, and the
//! linear-fractional parameterization produces a stable contraction
//! matching the node values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::rational::{Polynomial, RationalFunction, RationalError};
use crate::tol;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest node count for which the interpolant is returned in explicit
/// rational form; beyond this the state dimension would exceed the degree
/// cap of the rational arithmetic.
pub const RATIONAL_NODE_LIMIT: usize = 8;

#[derive(Debug, Clone, thiserror::Error)]
pub enum NevpickError {
    #[error("duplicate interpolation nodes at indices {0} and {1}")]
    DuplicateNodes(usize, usize),
    #[error("the shift tau must be positive, got {0}")]
    NodeInLeftHalfPlane(f64),
    #[error("node value {0} is not strictly inside the unit disc (|v| = {1})")]
    ValueNotContractive(usize, f64),
    #[error("node and value counts differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("Pick matrix is not positive definite (min eigenvalue {0})")]
    PickNotPositiveDefinite(f64),
    #[error("no admissible tau found after {0} halvings")]
    TauSelectionFailed(usize),
    #[error(transparent)]
    Rational(#[from] RationalError),
}

pub type Result<T> = std::result::Result<T, NevpickError>;

/// A shifted interpolation problem with its Pick matrix.
#[derive(Debug, Clone)]
pub struct PickProblem {
    pub omegas: Vec<f64>,
    pub values: Vec<Complex64>,
    pub tau: f64,
    pick: DMatrix<Complex64>,
}

impl PickProblem {
    /// Shifted right-half-plane nodes `s_l = i w_l + tau`.
    pub fn nodes(&self) -> Vec<Complex64> {
        self.omegas
            .iter()
            .map(|&w| Complex64::new(self.tau, w))
            .collect()
    }

    pub fn pick_matrix(&self) -> &DMatrix<Complex64> {
        &self.pick
    }

    /// Smallest eigenvalue of the (Hermitian) Pick matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.pick
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &e| m.min(e))
    }
}

/// Assembles the Pick matrix
/// `P_{lk} = (1 - v_l conj(v_k)) / (s_l + conj(s_k))` for the shifted
/// nodes.
pub fn build_pick(omegas: &[f64], values: &[Complex64], tau: f64) -> Result<PickProblem> {
    if omegas.len() != values.len() {
        return Err(NevpickError::LengthMismatch(omegas.len(), values.len()));
    }
    if !(tau > 0.0) {
        return Err(NevpickError::NodeInLeftHalfPlane(tau));
    }
    for (i, &a) in omegas.iter().enumerate() {
        for (j, &b) in omegas.iter().enumerate().skip(i + 1) {
            if (a - b).abs() < 1e-12 {
                return Err(NevpickError::DuplicateNodes(i, j));
            }
        }
    }
    for (i, v) in values.iter().enumerate() {
        if v.norm() >= 1.0 {
            return Err(NevpickError::ValueNotContractive(i, v.norm()));
        }
    }
    let l = omegas.len();
    let nodes: Vec<Complex64> = omegas.iter().map(|&w| Complex64::new(tau, w)).collect();
    let pick = DMatrix::from_fn(l, l, |r, c| {
        (ONE - values[r] * values[c].conj()) / (nodes[r] + nodes[c].conj())
    });
    Ok(PickProblem {
        omegas: omegas.to_vec(),
        values: values.to_vec(),
        tau,
        pick,
    })
}

/// Selects the conformal shift by halving from the default until the Pick
/// matrix is safely positive definite.
///
/// Shrinking `tau` scales the diagonal like `1/(2 tau)`, so positivity is
/// always reached for strictly contractive values; the acceptance
/// threshold scales the same way to stay meaningful across magnitudes.
pub fn choose_tau(omegas: &[f64], values: &[Complex64]) -> Result<PickProblem> {
    choose_tau_from(omegas, values, tol::TAU_DEFAULT)
}

/// [`choose_tau`] with a caller-supplied starting shift.
pub fn choose_tau_from(omegas: &[f64], values: &[Complex64], start: f64) -> Result<PickProblem> {
    let mut tau = start;
    const MAX_HALVINGS: usize = 60;
    for _ in 0..=MAX_HALVINGS {
        let p = build_pick(omegas, values, tau)?;
        if p.min_eigenvalue() > 1e-12 / (2.0 * tau) {
            return Ok(p);
        }
        tau /= 2.0;
    }
    Err(NevpickError::TauSelectionFailed(MAX_HALVINGS))
}

/// `P^{-1} B` where `B` stacks the rows `(1, -v_l)`; solved through the
/// Cholesky factorization of the Pick matrix.
pub fn coefficient_matrix(problem: &PickProblem) -> Result<DMatrix<Complex64>> {
    let l = problem.values.len();
    let chol = problem
        .pick
        .clone()
        .cholesky()
        .ok_or_else(|| NevpickError::PickNotPositiveDefinite(problem.min_eigenvalue()))?;
    let b = DMatrix::from_fn(l, 2, |r, c| {
        if c == 0 {
            ONE
        } else {
            -problem.values[r]
        }
    });
    Ok(chol.solve(&b))
}

/// Evaluates the interpolant without constructing rational coefficients;
/// used when the node count exceeds [`RATIONAL_NODE_LIMIT`].
#[derive(Debug, Clone)]
pub struct PointwiseInterpolant {
    nodes: Vec<Complex64>,
    values: Vec<Complex64>,
    coeff: DMatrix<Complex64>,
    theta: RationalFunction,
    tau: f64,
}

impl PointwiseInterpolant {
    /// `H11(s) = Hhat(s + tau)` with
    /// `Hhat = (W11 Theta + W12) / (W21 Theta + W22)`.
    pub fn eval(&self, s: Complex64) -> std::result::Result<Complex64, RationalError> {
        let z = s + self.tau;
        let mut w = [[ONE, Complex64::ZERO], [Complex64::ZERO, ONE]];
        for (k, node) in self.nodes.iter().enumerate() {
            let base = 1.0 / (z + node.conj());
            let a = [base, self.values[k].conj() * base];
            for i in 0..2 {
                for j in 0..2 {
                    w[i][j] -= a[i] * self.coeff[(k, j)];
                }
            }
        }
        let th = self.theta.eval(z)?;
        let den = w[1][0] * th + w[1][1];
        if den.norm() < 1e-14 {
            return Err(RationalError::PoleHit(s));
        }
        Ok((w[0][0] * th + w[0][1]) / den)
    }
}

/// The linear-fractional interpolant for a contractive parameter `Theta`.
#[derive(Debug, Clone)]
pub enum Interpolant {
    Rational(RationalFunction),
    Pointwise(PointwiseInterpolant),
}

impl Interpolant {
    pub fn eval(&self, s: Complex64) -> std::result::Result<Complex64, RationalError> {
        match self {
            Interpolant::Rational(r) => r.eval(s),
            Interpolant::Pointwise(p) => p.eval(s),
        }
    }

    pub fn as_rational(&self) -> Option<&RationalFunction> {
        match self {
            Interpolant::Rational(r) => Some(r),
            Interpolant::Pointwise(_) => None,
        }
    }
}

/// Builds the interpolant `H11` matching `H11(i w_l) = v_l`.
///
/// For small problems the four blocks of the resolvent `W` are assembled
/// over the common denominator `prod_k (s + conj(s_k))` and returned as an
/// explicit rational function; larger problems return a pointwise
/// evaluator.
pub fn interpolant(problem: &PickProblem, theta: &RationalFunction) -> Result<Interpolant> {
    let coeff = coefficient_matrix(problem)?;
    let nodes = problem.nodes();
    if problem.values.len() > RATIONAL_NODE_LIMIT {
        return Ok(Interpolant::Pointwise(PointwiseInterpolant {
            nodes,
            values: problem.values.clone(),
            coeff,
            theta: theta.clone(),
            tau: problem.tau,
        }));
    }

    // common denominator and the residue sums of each W block
    let den = Polynomial::from_roots(
        ONE,
        &nodes.iter().map(|s| -s.conj()).collect::<Vec<_>>(),
    );
    let mut num = [
        den.clone(),
        Polynomial::zero(),
        Polynomial::zero(),
        den.clone(),
    ];
    for k in 0..nodes.len() {
        // den / (s + conj(s_k))
        let others: Vec<Complex64> = nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, s)| -s.conj())
            .collect();
        let cof = Polynomial::from_roots(ONE, &others);
        let vk = problem.values[k].conj();
        num[0] = &num[0] - &cof.scale(coeff[(k, 0)]);
        num[1] = &num[1] - &cof.scale(coeff[(k, 1)]);
        num[2] = &num[2] - &cof.scale(vk * coeff[(k, 0)]);
        num[3] = &num[3] - &cof.scale(vk * coeff[(k, 1)]);
    }
    let [w11, w12, w21, w22] = num;
    // Hhat = (w11 Theta + w12) / (w21 Theta + w22): the common denominator
    // of the W blocks cancels
    let hat_num = &(&w11 * theta.num()) + &(&w12 * theta.den());
    let hat_den = &(&w21 * theta.num()) + &(&w22 * theta.den());
    let hat = RationalFunction::new(hat_num, hat_den);
    Ok(Interpolant::Rational(hat.shift(Complex64::new(
        problem.tau,
        0.0,
    ))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelModel, FieldIntensities, FrequencyGrid};
    use crate::sdp;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference_cavity(sw2: f64) -> ChannelModel {
        ChannelModel::new_cavity(0.4, 5.0, 10.0, FieldIntensities::new(0.1, sw2).unwrap())
            .unwrap()
    }

    fn grid_nodes(sw2: f64) -> (Vec<f64>, Vec<Complex64>, f64) {
        let ch = reference_cavity(sw2);
        let sol = sdp::grid_solve(&ch, &sdp::paper_grid()).unwrap();
        let shrunk = sdp::shrink_to_interior(&sol.h11_values);
        (sol.omegas, shrunk, sol.gamma_tilde_sq)
    }

    #[test]
    fn pick_matrix_basics() {
        let omegas = [0.0, 1.0, -2.0];
        let values = [c(0.5, 0.0), c(0.1, 0.2), c(-0.3, 0.1)];
        let p = build_pick(&omegas, &values, 1e-3).unwrap();
        // Hermitian with positive diagonal (1-|v|^2)/(2 tau)
        let m = p.pick_matrix();
        for i in 0..3 {
            assert_abs_diff_eq!(
                m[(i, i)].re,
                (1.0 - values[i].norm_sqr()) / 2e-3,
                epsilon = 1e-9
            );
            for j in 0..3 {
                assert!((m[(i, j)] - m[(j, i)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(matches!(
            build_pick(&[0.0, 0.0], &[c(0.1, 0.0), c(0.2, 0.0)], 1e-3),
            Err(NevpickError::DuplicateNodes(0, 1))
        ));
        assert!(matches!(
            build_pick(&[0.0], &[c(0.1, 0.0)], -1.0),
            Err(NevpickError::NodeInLeftHalfPlane(_))
        ));
        assert!(matches!(
            build_pick(&[0.0], &[c(1.0, 0.0)], 1e-3),
            Err(NevpickError::ValueNotContractive(0, _))
        ));
        assert!(matches!(
            build_pick(&[0.0, 1.0], &[c(0.1, 0.0)], 1e-3),
            Err(NevpickError::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn tau_default_accepted_for_mild_values() {
        // sigma_w^2 = 4: node magnitudes stay moderate and the default
        // shift already yields a positive definite Pick matrix
        let (omegas, values, _) = grid_nodes(4.0);
        let p = choose_tau(&omegas, &values).unwrap();
        assert_abs_diff_eq!(p.tau, tol::TAU_DEFAULT, epsilon = 1e-18);
    }

    #[test]
    fn tau_halves_for_near_boundary_values() {
        // sigma_w^2 = 0.2: several nodes sit at the shrunk boundary and the
        // default shift fails; halving settles at 1e-3 / 2^6
        let (omegas, values, _) = grid_nodes(0.2);
        let p = choose_tau(&omegas, &values).unwrap();
        assert!(p.tau < tol::TAU_DEFAULT);
        assert_abs_diff_eq!(p.tau, 1e-3 / 64.0, epsilon = 1e-18);
        assert!(p.min_eigenvalue() > 0.0);
    }

    #[test]
    fn interpolant_matches_nodes_pointwise() {
        for sw2 in [0.2, 4.0] {
            let (omegas, values, _) = grid_nodes(sw2);
            let p = choose_tau(&omegas, &values).unwrap();
            let h = interpolant(&p, &RationalFunction::zero()).unwrap();
            assert!(h.as_rational().is_none(), "21 nodes must be pointwise");
            for (w, v) in omegas.iter().zip(values.iter()) {
                let got = h.eval(c(0.0, *w)).unwrap();
                assert!((got - v).norm() < 1e-8, "sw2={sw2} w={w}");
            }
        }
    }

    #[test]
    fn interpolant_is_contractive_off_nodes() {
        let (omegas, values, _) = grid_nodes(4.0);
        let p = choose_tau(&omegas, &values).unwrap();
        let h = interpolant(&p, &RationalFunction::zero()).unwrap();
        for &w in FrequencyGrid::log_symmetric(1e-4, 1e3, 400).points() {
            assert!(h.eval(c(0.0, w)).unwrap().norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn node_costs_stay_near_lower_bound() {
        // the interpolated filter reproduces the per-frequency optima up to
        // the boundary shrink, so the node costs exceed the lower bound by
        // at most a few parts in 1e6
        for sw2 in [0.2, 4.0] {
            let ch = reference_cavity(sw2);
            let (omegas, values, gamma_tilde_sq) = grid_nodes(sw2);
            let p = choose_tau(&omegas, &values).unwrap();
            let h = interpolant(&p, &RationalFunction::zero()).unwrap();
            for &w in &omegas {
                let hv = h.eval(c(0.0, w)).unwrap();
                let cost = ch.error_psd_at(hv, w).unwrap();
                assert!(
                    cost <= gamma_tilde_sq + 3e-6,
                    "sw2={sw2} w={w} cost={cost} bound={gamma_tilde_sq}"
                );
            }
        }
    }

    #[test]
    fn rational_form_for_small_problems() {
        let omegas = [-2.0, -0.5, 0.0, 0.5, 2.0];
        let values = [
            c(0.3, 0.1),
            c(0.5, -0.2),
            c(0.6, 0.0),
            c(0.5, 0.2),
            c(0.3, -0.1),
        ];
        let p = choose_tau(&omegas, &values).unwrap();
        let h = interpolant(&p, &RationalFunction::zero()).unwrap();
        let r = h.as_rational().expect("5 nodes fit the rational path");
        assert!(r.is_stable());
        for (w, v) in omegas.iter().zip(values.iter()) {
            assert!((r.eval(c(0.0, *w)).unwrap() - v).norm() < 1e-9);
        }
        // agrees with the pointwise evaluator everywhere
        let coeff = coefficient_matrix(&p).unwrap();
        let pw = PointwiseInterpolant {
            nodes: p.nodes(),
            values: p.values.clone(),
            coeff,
            theta: RationalFunction::zero(),
            tau: p.tau,
        };
        for w in [-7.3, -1.0, 0.2, 4.4, 100.0] {
            let a = r.eval(c(0.0, w)).unwrap();
            let b = pw.eval(c(0.0, w)).unwrap();
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn nonzero_theta_still_interpolates() {
        let omegas = [-1.0, 0.0, 1.0];
        let values = [c(0.2, 0.3), c(0.5, 0.0), c(0.2, -0.3)];
        let p = choose_tau(&omegas, &values).unwrap();
        for th in [-0.7, 0.3, 0.9] {
            let h = interpolant(&p, &RationalFunction::real_constant(th)).unwrap();
            for (w, v) in omegas.iter().zip(values.iter()) {
                assert!((h.eval(c(0.0, *w)).unwrap() - v).norm() < 1e-9);
            }
        }
    }
}
