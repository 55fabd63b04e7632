//! Experiment configuration, the serialized design record, and the
//! orchestration behind the command-line verbs.
//!
//! Records serialize to JSON with complex numbers as `[re, im]` pairs;
//! filter coefficients are written as decimal strings with 17 significant
//! digits so that records round-trip losslessly.

use std::path::PathBuf;

use num_complex::Complex64;

use crate::channel::{ChannelModel, FieldIntensities, FrequencyGrid};
use crate::nevpick::{self, Interpolant};
use crate::rational::{Polynomial, RationalFunction};
use crate::sdp;
use crate::spectral::j_spectral_factor;
use crate::synthesis::{self, CavityRealization, EqualizerDesign, StaticRealization};
use crate::tol;
use crate::verify;

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("synthesis is infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
    #[error(transparent)]
    Synthesis(#[from] crate::synthesis::SynthesisError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error(transparent)]
    Sdp(#[from] crate::sdp::SdpError),
    #[error(transparent)]
    Nevpick(#[from] crate::nevpick::NevpickError),
    #[error(transparent)]
    Rational(#[from] crate::rational::RationalError),
}

pub type Result<T> = std::result::Result<T, RecordError>;

/// Formats a float as a decimal string with 17 significant digits, enough
/// to reconstruct the exact bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|e| RecordError::MalformedRecord(format!("bad float {s:?}: {e}")))
}

fn fmt_complex(z: Complex64) -> [String; 2] {
    [fmt_f64(z.re), fmt_f64(z.im)]
}

fn parse_complex(p: &[String; 2]) -> Result<Complex64> {
    Ok(Complex64::new(parse_f64(&p[0])?, parse_f64(&p[1])?))
}

/// A complex scalar in a config file: a plain number or an `[re, im]`
/// pair.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum ComplexParam {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexParam {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexParam::Real(x) => Complex64::new(x, 0.0),
            ComplexParam::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    Static {
        k: ComplexParam,
        m: ComplexParam,
        #[serde(default)]
        phi: f64,
    },
    Cavity {
        k: f64,
        kappa: f64,
        omega_c: f64,
    },
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitiesConfig {
    pub sigma_u_sq: f64,
    pub sigma_w_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Jspectral,
    SdpNevpick,
}

/// Constant parameter value or a sweep directive `"sweep:[a, b, ...]"`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Value(f64),
    Sweep(String),
}

impl ThetaSpec {
    /// The constant values this spec expands to.
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            ThetaSpec::Value(v) => Ok(vec![*v]),
            ThetaSpec::Sweep(s) => {
                let body = s
                    .strip_prefix("sweep:")
                    .ok_or_else(|| {
                        RecordError::InvalidConfig(format!(
                            "theta string must start with \"sweep:\", got {s:?}"
                        ))
                    })?
                    .trim();
                serde_json::from_str::<Vec<f64>>(body).map_err(|e| {
                    RecordError::InvalidConfig(format!("bad theta sweep {body:?}: {e}"))
                })
            }
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Preset { preset: String },
    Explicit { omegas: Vec<f64> },
}

impl GridConfig {
    pub fn build(&self) -> Result<FrequencyGrid> {
        match self {
            GridConfig::Preset { preset } if preset == "paper21" => Ok(sdp::paper_grid()),
            GridConfig::Preset { preset } => Err(RecordError::InvalidConfig(format!(
                "unknown grid preset {preset:?} (supported: \"paper21\")"
            ))),
            GridConfig::Explicit { omegas } => {
                FrequencyGrid::new(omegas.clone()).map_err(RecordError::Channel)
            }
        }
    }
}

/// One experiment: channel, noise intensities, synthesis method, and the
/// method knobs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub intensities: IntensitiesConfig,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build_channel(&self) -> Result<ChannelModel> {
        let fields =
            FieldIntensities::new(self.intensities.sigma_u_sq, self.intensities.sigma_w_sq)?;
        match &self.channel {
            ChannelConfig::Static { k, m, phi } => {
                Ok(ChannelModel::new_static(k.value(), m.value(), *phi, fields)?)
            }
            ChannelConfig::Cavity { k, kappa, omega_c } => {
                Ok(ChannelModel::new_cavity(*k, *kappa, *omega_c, fields)?)
            }
        }
    }

    fn first_theta(&self) -> Result<Option<f64>> {
        Ok(match &self.theta {
            Some(spec) => spec.values()?.first().copied(),
            None => None,
        })
    }
}

/// A rational block as coefficient lists, constant term first.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RationalBlock {
    pub num_coeffs: Vec<[String; 2]>,
    pub den_coeffs: Vec<[String; 2]>,
}

impl RationalBlock {
    pub fn from_rational(r: &RationalFunction) -> Self {
        RationalBlock {
            num_coeffs: r.num().coeffs().iter().map(|&c| fmt_complex(c)).collect(),
            den_coeffs: r.den().coeffs().iter().map(|&c| fmt_complex(c)).collect(),
        }
    }

    pub fn to_rational(&self) -> Result<RationalFunction> {
        let num = self
            .num_coeffs
            .iter()
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()?;
        let den = self
            .den_coeffs
            .iter()
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()?;
        let den = Polynomial::new(den);
        if den.is_zero() {
            return Err(RecordError::MalformedRecord("zero denominator".into()));
        }
        RationalFunction::try_new(Polynomial::new(num), den).map_err(RecordError::Rational)
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EqualizerBlocks {
    pub h11: RationalBlock,
    pub h12: RationalBlock,
    pub h21: RationalBlock,
    pub h22: RationalBlock,
}

impl EqualizerBlocks {
    pub fn from_design(d: &EqualizerDesign) -> Self {
        EqualizerBlocks {
            h11: RationalBlock::from_rational(&d.h11),
            h12: RationalBlock::from_rational(&d.h12),
            h21: RationalBlock::from_rational(&d.h21),
            h22: RationalBlock::from_rational(&d.h22),
        }
    }
}

/// Node data of an interpolation-based design; large node counts have no
/// in-cap rational form, so the record keeps the data the evaluator is
/// rebuilt from.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct InterpolationData {
    pub omegas: Vec<f64>,
    pub values: Vec<[String; 2]>,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RealizationRecord {
    Cavity {
        a: f64,
        c: f64,
        eta1: f64,
        xi1: f64,
        eta2: f64,
        xi2: f64,
        hc_pole: f64,
    },
    StaticBeamSplitter {
        equalizer_transmittance: f64,
    },
}

impl From<CavityRealization> for RealizationRecord {
    fn from(r: CavityRealization) -> Self {
        RealizationRecord::Cavity {
            a: r.a,
            c: r.c,
            eta1: r.eta1,
            xi1: r.xi1,
            eta2: r.eta2,
            xi2: r.xi2,
            hc_pole: r.hc_pole,
        }
    }
}

impl From<StaticRealization> for RealizationRecord {
    fn from(r: StaticRealization) -> Self {
        RealizationRecord::StaticBeamSplitter {
            equalizer_transmittance: r.equalizer_transmittance,
        }
    }
}

/// Verification outcome stored with a record.  Paraunitarity and rank
/// constancy apply only to designs with explicit completion blocks.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VerificationSummary {
    pub paraunitarity_residual_max: Option<f64>,
    pub contraction_margin: f64,
    pub psd_bound_margin: f64,
    pub h3_rank_constant: Option<bool>,
    pub grid_points: usize,
    pub passed: bool,
}

/// The serialized outcome of a design run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DesignRecord {
    pub config: ExperimentConfig,
    pub method: Method,
    pub theta: f64,
    /// Offset from the interval endpoint -1 used when no explicit theta
    /// was configured for the cavity bound search.
    pub theta_endpoint_offset: f64,
    pub gamma_sq_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_tilde_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<EqualizerBlocks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<InterpolationData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realization: Option<RealizationRecord>,
    pub verification: VerificationSummary,
}

impl DesignRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rebuilds the equalizer blocks of a completed design.
    pub fn to_design(&self) -> Result<EqualizerDesign> {
        let blocks = self
            .blocks
            .as_ref()
            .ok_or_else(|| RecordError::MalformedRecord("record has no blocks".into()))?;
        Ok(EqualizerDesign {
            h11: blocks.h11.to_rational()?,
            h12: blocks.h12.to_rational()?,
            h21: blocks.h21.to_rational()?,
            h22: blocks.h22.to_rational()?,
            gamma_sq_bound: self.gamma_sq_bound,
            theta: RationalFunction::real_constant(self.theta),
            u_allpass: RationalFunction::one(),
            aux: None,
            cavity_realization: None,
        })
    }

    /// Rebuilds the pointwise evaluator of an interpolation design.
    pub fn to_interpolant(&self) -> Result<Interpolant> {
        let data = self.interpolation.as_ref().ok_or_else(|| {
            RecordError::MalformedRecord("record has no interpolation data".into())
        })?;
        let values = data
            .values
            .iter()
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()?;
        let problem = nevpick::build_pick(&data.omegas, &values, data.tau)?;
        Ok(nevpick::interpolant(
            &problem,
            &RationalFunction::real_constant(self.theta),
        )?)
    }
}

/// Sampled curves emitted next to a record.
#[derive(Debug, Clone)]
pub struct PsdRow {
    pub omega: f64,
    pub p_e: f64,
    pub p_y_minus_u: f64,
    pub gamma_sq: f64,
}

#[derive(Debug, Clone)]
pub struct BodeRow {
    pub omega: f64,
    /// `(magnitude, phase)` per block; completion blocks absent for
    /// interpolation designs.
    pub h11: (f64, f64),
    pub rest: Option<[(f64, f64); 3]>,
}

#[derive(Debug, Clone)]
pub struct DesignOutput {
    pub record: DesignRecord,
    pub psd_rows: Vec<PsdRow>,
    pub bode_rows: Vec<BodeRow>,
}

fn dense_grid(channel: &ChannelModel, density: usize) -> FrequencyGrid {
    let mut grid = FrequencyGrid::log_symmetric(1e-4, 1e3, density.max(10));
    if let crate::channel::ChannelKind::Cavity { omega_c, .. } = channel.kind {
        grid = grid.with_points(&[omega_c, -omega_c]);
    }
    grid.with_points(&[0.0])
}

fn summarize_design(
    channel: &ChannelModel,
    design: &EqualizerDesign,
    grid: &FrequencyGrid,
) -> VerificationSummary {
    let r = verify::verify_design(channel, design, grid);
    VerificationSummary {
        paraunitarity_residual_max: Some(r.paraunitarity_residual_max),
        contraction_margin: r.contraction_margin,
        psd_bound_margin: r.psd_bound_margin,
        h3_rank_constant: Some(r.h3_rank_constant),
        grid_points: grid.len(),
        passed: r.passed,
    }
}

fn interpolant_summary(
    channel: &ChannelModel,
    h: &Interpolant,
    bound: f64,
    grid: &FrequencyGrid,
) -> Result<VerificationSummary> {
    let mut max_mag = 0.0_f64;
    let mut max_pe = f64::NEG_INFINITY;
    for &w in grid.points() {
        let v = h.eval(Complex64::new(0.0, w))?;
        max_mag = max_mag.max(v.norm());
        max_pe = max_pe.max(channel.error_psd_at(v, w)?);
    }
    let contraction_margin = 1.0 - max_mag;
    let psd_bound_margin = bound - max_pe;
    let profile = tol::Profile::from_env();
    Ok(VerificationSummary {
        paraunitarity_residual_max: None,
        contraction_margin,
        psd_bound_margin,
        h3_rank_constant: None,
        grid_points: grid.len(),
        passed: contraction_margin >= profile.contraction_margin()
            && psd_bound_margin >= -1e-9 * (1.0 + bound.abs()),
    })
}

fn eval_mag_phase(r: &RationalFunction, w: f64) -> (f64, f64) {
    match r.eval(Complex64::new(0.0, w)) {
        Ok(v) => (v.norm(), v.arg()),
        Err(_) => (f64::INFINITY, 0.0),
    }
}

/// Runs one design experiment: synthesizes per the configured method,
/// verifies on a dense grid, and samples the PSD/Bode curves.
pub fn run_design(
    config: &ExperimentConfig,
    theta_override: Option<f64>,
    grid_density: usize,
) -> Result<DesignOutput> {
    let channel = config.build_channel()?;
    let grid = dense_grid(&channel, grid_density);
    let theta_cfg = match theta_override {
        Some(t) => Some(t),
        None => config.first_theta()?,
    };

    let is_cavity = matches!(channel.kind, crate::channel::ChannelKind::Cavity { .. });

    if config.method == Method::SdpNevpick {
        return run_sdp_nevpick(config, &channel, &grid, theta_cfg);
    }

    let (design, theta_used) = match (config.method, is_cavity) {
        (Method::ClosedForm, false) => (synthesis::static_optimal(&channel)?, 0.0),
        (Method::ClosedForm, true) | (Method::Jspectral, true) => {
            let theta = theta_cfg.unwrap_or(-1.0 + tol::THETA_ENDPOINT_OFFSET);
            let design = match config.gamma_sq {
                Some(g) => synthesis::cavity_suboptimal(&channel, g, theta)?,
                None => synthesis::cavity_gamma_search_with_theta(&channel, theta)?.1,
            };
            (design, theta)
        }
        (Method::Jspectral, false) => {
            // near-optimal guaranteed-cost design through the factorization
            // route; the bound defaults to just above the closed-form optimum
            let opt = synthesis::static_optimal(&channel)?;
            let gamma_sq = config.gamma_sq.unwrap_or(opt.gamma_sq_bound + 1e-6);
            let theta = theta_cfg.unwrap_or_else(|| {
                // boundary channels need Theta near 1 to push |h11| to the
                // disc edge; interior channels use Theta = 0
                if opt.h11.as_constant().map(|v| v.norm() >= 1.0 - 1e-12) == Some(true) {
                    tol::STATIC_THETA_EPSILON
                } else {
                    0.0
                }
            });
            let aux = j_spectral_factor(&channel, gamma_sq)?;
            let p = synthesis::parameterize_h11(&aux, &RationalFunction::real_constant(theta))?;
            let mut d = synthesis::complete_equalizer(&p.h11)?;
            d.gamma_sq_bound = gamma_sq;
            d.theta = RationalFunction::real_constant(theta);
            d.aux = Some(aux);
            (d, theta)
        }
        (Method::SdpNevpick, _) => unreachable!(),
    };

    let verification = summarize_design(&channel, &design, &grid);
    let realization = if is_cavity {
        design.cavity_realization.map(RealizationRecord::from)
    } else {
        synthesis::static_realization(&channel)
            .ok()
            .map(RealizationRecord::from)
    };

    let mut psd_rows = Vec::with_capacity(grid.len());
    let mut bode_rows = Vec::with_capacity(grid.len());
    for &w in grid.points() {
        psd_rows.push(PsdRow {
            omega: w,
            p_e: channel.error_psd(&design.h11, w)?,
            p_y_minus_u: channel.unequalized_psd(w)?,
            gamma_sq: design.gamma_sq_bound,
        });
        bode_rows.push(BodeRow {
            omega: w,
            h11: eval_mag_phase(&design.h11, w),
            rest: Some([
                eval_mag_phase(&design.h12, w),
                eval_mag_phase(&design.h21, w),
                eval_mag_phase(&design.h22, w),
            ]),
        });
    }

    let record = DesignRecord {
        config: config.clone(),
        method: config.method,
        theta: theta_used,
        theta_endpoint_offset: tol::THETA_ENDPOINT_OFFSET,
        gamma_sq_bound: design.gamma_sq_bound,
        gamma_tilde_sq: None,
        blocks: Some(EqualizerBlocks::from_design(&design)),
        interpolation: None,
        realization,
        verification,
    };
    Ok(DesignOutput {
        record,
        psd_rows,
        bode_rows,
    })
}

fn run_sdp_nevpick(
    config: &ExperimentConfig,
    channel: &ChannelModel,
    grid: &FrequencyGrid,
    theta_cfg: Option<f64>,
) -> Result<DesignOutput> {
    let node_grid = match &config.grid {
        Some(g) => g.build()?,
        None => sdp::paper_grid(),
    };
    let sol = sdp::grid_solve(channel, &node_grid)?;
    let theta = theta_cfg.unwrap_or(0.0);
    if !(theta.abs() < 1.0) {
        return Err(RecordError::InvalidConfig(format!(
            "interpolation theta must satisfy |theta| < 1, got {theta}"
        )));
    }

    let shrunk = sdp::shrink_to_interior(&sol.h11_values);
    let problem = nevpick::choose_tau_from(
        &sol.omegas,
        &shrunk,
        config.tau.unwrap_or(tol::TAU_DEFAULT),
    )?;
    let h = nevpick::interpolant(&problem, &RationalFunction::real_constant(theta))?;

    // the interpolant carries no frequency-uniform guarantee; the record
    // claims the realized supremum over the verification grid as its bound
    let mut max_pe = f64::NEG_INFINITY;
    for &w in grid.points() {
        let v = h.eval(Complex64::new(0.0, w))?;
        max_pe = max_pe.max(channel.error_psd_at(v, w)?);
    }
    let bound = max_pe;
    let verification = interpolant_summary(channel, &h, bound, grid)?;

    let mut psd_rows = Vec::with_capacity(grid.len());
    let mut bode_rows = Vec::with_capacity(grid.len());
    for &w in grid.points() {
        let v = h.eval(Complex64::new(0.0, w))?;
        psd_rows.push(PsdRow {
            omega: w,
            p_e: channel.error_psd_at(v, w)?,
            p_y_minus_u: channel.unequalized_psd(w)?,
            gamma_sq: bound,
        });
        bode_rows.push(BodeRow {
            omega: w,
            h11: (v.norm(), v.arg()),
            rest: None,
        });
    }

    let record = DesignRecord {
        config: config.clone(),
        method: Method::SdpNevpick,
        theta,
        theta_endpoint_offset: tol::THETA_ENDPOINT_OFFSET,
        gamma_sq_bound: bound,
        gamma_tilde_sq: Some(sol.gamma_tilde_sq),
        blocks: None,
        interpolation: Some(InterpolationData {
            omegas: sol.omegas.clone(),
            values: shrunk.iter().map(|&v| fmt_complex(v)).collect(),
            tau: problem.tau,
        }),
        realization: None,
        verification,
    };
    Ok(DesignOutput {
        record,
        psd_rows,
        bode_rows,
    })
}

/// Re-verifies a stored record on a freshly built dense grid.
pub fn verify_record(record: &DesignRecord, grid_density: usize) -> Result<VerificationSummary> {
    let channel = record.config.build_channel()?;
    let grid = dense_grid(&channel, grid_density);
    if record.blocks.is_some() {
        let design = record.to_design()?;
        Ok(summarize_design(&channel, &design, &grid))
    } else {
        let h = record.to_interpolant()?;
        interpolant_summary(&channel, &h, record.gamma_sq_bound, &grid)
    }
}

/// One row of the static noise-sweep figure.
#[derive(Debug, Clone)]
pub struct StaticSweepRow {
    pub sigma_w_sq: f64,
    pub h11_mag: f64,
    pub p_e_sup: f64,
    pub p_y_minus_u_sup: f64,
}

/// Sweeps the environment intensity of a static channel and reports the
/// optimal gain and error levels at each point.
pub fn static_sweep_rows(
    k: Complex64,
    m: Complex64,
    phi: f64,
    sigma_u_sq: f64,
    sweep: &[f64],
) -> Result<Vec<StaticSweepRow>> {
    let mut rows = Vec::with_capacity(sweep.len());
    for &sw2 in sweep {
        let channel = ChannelModel::new_static(
            k,
            m,
            phi,
            FieldIntensities::new(sigma_u_sq, sw2)?,
        )?;
        let d = synthesis::static_optimal(&channel)?;
        rows.push(StaticSweepRow {
            sigma_w_sq: sw2,
            h11_mag: d.h11.as_constant().map(|v| v.norm()).unwrap_or(f64::NAN),
            p_e_sup: d.gamma_sq_bound,
            p_y_minus_u_sup: channel.unequalized_psd(0.0)?,
        });
    }
    Ok(rows)
}

/// One row of the cavity bound-vs-raw-error figure.
#[derive(Debug, Clone)]
pub struct CavitySweepRow {
    pub sigma_w_sq: f64,
    pub p_y_minus_u_sup: f64,
    pub gamma_sq_bound: f64,
}

/// Sweeps the environment intensity of a cavity channel, comparing the
/// optimized guaranteed bound with the unequalized error level.
pub fn cavity_sweep_rows(
    k: f64,
    kappa: f64,
    omega_c: f64,
    sigma_u_sq: f64,
    sweep: &[f64],
    grid_density: usize,
) -> Result<Vec<CavitySweepRow>> {
    let mut rows = Vec::with_capacity(sweep.len());
    for &sw2 in sweep {
        let channel =
            ChannelModel::new_cavity(k, kappa, omega_c, FieldIntensities::new(sigma_u_sq, sw2)?)?;
        let grid = dense_grid(&channel, grid_density);
        let mut raw_sup = f64::NEG_INFINITY;
        for &w in grid.points() {
            raw_sup = raw_sup.max(channel.unequalized_psd(w)?);
        }
        let (gamma_sq, _) = synthesis::cavity_gamma_search(&channel)?;
        rows.push(CavitySweepRow {
            sigma_w_sq: sw2,
            p_y_minus_u_sup: raw_sup,
            gamma_sq_bound: gamma_sq,
        });
    }
    Ok(rows)
}

/// Normalized PSD curves `P_e/gamma_tilde^2` of interpolation designs for
/// several constant parameters.
#[derive(Debug, Clone)]
pub struct PsdRatioCurves {
    pub thetas: Vec<f64>,
    pub omegas: Vec<f64>,
    /// `ratios[i][j]` is the curve for `thetas[i]` at `omegas[j]`.
    pub ratios: Vec<Vec<f64>>,
    pub gamma_tilde_sq: f64,
}

pub fn psd_ratio_curves(
    config: &ExperimentConfig,
    thetas: &[f64],
    grid_density: usize,
) -> Result<PsdRatioCurves> {
    let channel = config.build_channel()?;
    let node_grid = match &config.grid {
        Some(g) => g.build()?,
        None => sdp::paper_grid(),
    };
    let sol = sdp::grid_solve(&channel, &node_grid)?;
    let shrunk = sdp::shrink_to_interior(&sol.h11_values);
    let grid = dense_grid(&channel, grid_density).with_points(node_grid.points());
    let mut ratios = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let problem = nevpick::choose_tau_from(
            &sol.omegas,
            &shrunk,
            config.tau.unwrap_or(tol::TAU_DEFAULT),
        )?;
        let h = nevpick::interpolant(&problem, &RationalFunction::real_constant(theta))?;
        let mut curve = Vec::with_capacity(grid.len());
        for &w in grid.points() {
            let v = h.eval(Complex64::new(0.0, w))?;
            curve.push(channel.error_psd_at(v, w)? / sol.gamma_tilde_sq);
        }
        ratios.push(curve);
    }
    Ok(PsdRatioCurves {
        thetas: thetas.to_vec(),
        omegas: grid.points().to_vec(),
        ratios,
        gamma_tilde_sq: sol.gamma_tilde_sq,
    })
}
