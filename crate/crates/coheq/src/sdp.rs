//! Pointwise-in-frequency lower bound on the achievable equalization
//! error: at each frequency the error PSD is a convex quadratic in
//! `H11(iw)`, minimized in closed form over the unit disc.

use num_complex::Complex64;

use crate::channel::{ChannelError, ChannelModel, FrequencyGrid};
use crate::tol;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SdpError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rational(#[from] crate::rational::RationalError),
}

pub type Result<T> = std::result::Result<T, SdpError>;

/// Disc-constrained per-frequency optima over a grid, and the resulting
/// lower bound `gamma_tilde^2 = sup_w P_e^*(w)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GridSolution {
    pub omegas: Vec<f64>,
    pub h11_values: Vec<Complex64>,
    pub per_freq_cost: Vec<f64>,
    pub gamma_tilde_sq: f64,
    /// Set when `gamma_tilde_sq >= sigma_u^2 + 2`, i.e. the trivial filter
    /// `H11 = 0` is already optimal and equalization cannot help.
    pub trivial: bool,
}

/// Minimizer and minimum of the error PSD over `|h| <= 1` at a single
/// frequency.
///
/// The unconstrained optimum is
/// `h* = (1 + sigma_u^2) conj(G11(iw)) / Psi(iw)`; when it leaves the unit
/// disc the convexity of the cost makes its radial projection optimal.
/// Degenerate points with `Psi = 0` are handled directly: the cost is
/// linear there, minimized on the boundary (or by `h = 0` when `G11` also
/// vanishes).
pub fn per_frequency_optimum(channel: &ChannelModel, omega: f64) -> Result<(Complex64, f64)> {
    let su2 = channel.intensities.sigma_u_sq;
    let s = Complex64::new(0.0, omega);
    let g = channel.g11.eval(s)?;
    let psi = channel.psi().eval(s)?.re;

    let h = if psi <= 0.0 {
        // Psi is a sum of weighted squared magnitudes, so psi <= 0 means
        // psi = 0; the quadratic term vanishes
        if g.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            g.conj() / g.norm()
        }
    } else {
        let unconstrained = g.conj() * (1.0 + su2) / psi;
        if unconstrained.norm() > 1.0 {
            unconstrained / unconstrained.norm()
        } else {
            unconstrained
        }
    };
    let cost = psi * h.norm_sqr() - 2.0 * (1.0 + su2) * (h * g).re + su2 + 2.0;
    Ok((h, cost))
}

/// Per-frequency optima over `grid` and the induced lower bound.
pub fn grid_solve(channel: &ChannelModel, grid: &FrequencyGrid) -> Result<GridSolution> {
    let su2 = channel.intensities.sigma_u_sq;
    let mut h11_values = Vec::with_capacity(grid.len());
    let mut per_freq_cost = Vec::with_capacity(grid.len());
    for &w in grid.points() {
        let (h, cost) = per_frequency_optimum(channel, w)?;
        h11_values.push(h);
        per_freq_cost.push(cost);
    }
    let gamma_tilde_sq = per_freq_cost.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let trivial = gamma_tilde_sq >= su2 + 2.0;
    Ok(GridSolution {
        omegas: grid.points().to_vec(),
        h11_values: if trivial {
            vec![Complex64::new(0.0, 0.0); grid.len()]
        } else {
            h11_values
        },
        per_freq_cost,
        gamma_tilde_sq,
        trivial,
    })
}

/// The 21-node frequency grid used by the interpolation pipeline:
/// zero plus ten logarithmically spaced points per sign in `[1e-3, 10]`.
pub fn paper_grid() -> FrequencyGrid {
    let mut pts = vec![0.0];
    let (lo, hi, n) = (1e-3_f64, 10.0_f64, 10usize);
    for i in 0..n {
        let w = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        pts.push(w);
        pts.push(-w);
    }
    FrequencyGrid::new(pts).expect("static grid")
}

/// Pulls boundary-touching values strictly inside the unit disc so that
/// the interpolation problem sees a strict contraction.
pub fn shrink_to_interior(values: &[Complex64]) -> Vec<Complex64> {
    values
        .iter()
        .map(|&v| {
            if v.norm() >= 1.0 - tol::BOUNDARY_SHRINK {
                v * ((1.0 - tol::BOUNDARY_SHRINK) / v.norm())
            } else {
                v
            }
        })
        .collect()
}
