//! Command-line front end: experiment configs in, design records,
//! verification reports, and plot-ready CSV files out.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coheq::records::{
    self, ChannelConfig, DesignOutput, DesignRecord, ExperimentConfig, RecordError,
};

const EXIT_OK: u8 = 0;
const EXIT_PARSE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "coheq",
    about = "Synthesis and verification of passive coherent equalizers for linear quantum channels",
    after_help = "EXIT CODES:\n  \
        0  success (design verified / verification passed)\n  \
        1  unreadable input: bad flags, unparseable config or record\n  \
        2  infeasible synthesis or invalid channel parameters\n  \
        3  verification failure on an otherwise well-formed design\n\n\
        ENVIRONMENT:\n  \
        COHEQ_TOLERANCE_PROFILE  'default' or 'strict' verification tolerances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an equalizer from a config; writes design.json, psd.csv
    /// and bode.csv
    Design {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Points per side of the logarithmic verification grid
        #[arg(long, default_value_t = 1000)]
        grid_density: usize,
        /// Constant filter parameter (overrides the config's theta)
        #[arg(long)]
        theta: Option<f64>,
        /// Seed echoed into outputs; only randomized property checks in the
        /// test suite consume seeds
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-verify a stored design record on a fresh dense grid
    Verify {
        /// design.json produced by the design verb
        #[arg(long)]
        record: PathBuf,
        #[arg(long, default_value_t = 1000)]
        grid_density: usize,
    },
    /// Emit the CSV data behind the survey figures (no plotting)
    Figures {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Which figure to emit (static_sweep, cav_subopt, psds); all
        /// applicable figures when omitted
        #[arg(long)]
        fig: Option<String>,
        #[arg(long, default_value_t = 400)]
        grid_density: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Design {
            config,
            out,
            grid_density,
            theta,
            seed: _,
        } => cmd_design(&config, out.as_deref(), grid_density, theta),
        Command::Verify {
            record,
            grid_density,
        } => cmd_verify(&record, grid_density),
        Command::Figures {
            config,
            out,
            fig,
            grid_density,
            seed: _,
        } => cmd_figures(&config, out.as_deref(), fig.as_deref(), grid_density),
    };
    ExitCode::from(code)
}

/// Prints a machine-readable error object and picks the matching exit
/// code.
fn report_error(err: &RecordError) -> u8 {
    let (kind, code) = match err {
        RecordError::Json(_) | RecordError::MalformedRecord(_) => ("parse", EXIT_PARSE),
        RecordError::InvalidConfig(_)
        | RecordError::Infeasible(_)
        | RecordError::Channel(_)
        | RecordError::Synthesis(_)
        | RecordError::Spectral(_)
        | RecordError::Sdp(_)
        | RecordError::Nevpick(_)
        | RecordError::Rational(_) => ("infeasible", EXIT_INFEASIBLE),
    };
    let detail = match err {
        RecordError::Channel(e) => format!("{e:?}"),
        _ => String::new(),
    };
    println!(
        "{}",
        serde_json::json!({"error": err.to_string(), "kind": kind, "detail": detail})
    );
    code
}

/// Writes through a temp file in the destination directory and renames, so
/// readers never observe a partial file.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, u8> {
    let text = fs::read_to_string(path).map_err(|e| {
        println!(
            "{}",
            serde_json::json!({"error": format!("cannot read {}: {e}", path.display()), "kind": "parse"})
        );
        EXIT_PARSE
    })?;
    ExperimentConfig::from_json(&text).map_err(|e| report_error(&e))
}

fn output_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn emit(path: &Path, contents: &str) -> Result<(), u8> {
    write_atomic(path, contents).map_err(|e| {
        println!(
            "{}",
            serde_json::json!({"error": format!("cannot write {}: {e}", path.display()), "kind": "io"})
        );
        EXIT_PARSE
    })
}

fn psd_csv(out: &DesignOutput) -> String {
    let mut s = String::from("omega,P_e,P_y_minus_u,gamma_sq\n");
    for r in &out.psd_rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.omega, r.p_e, r.p_y_minus_u, r.gamma_sq
        ));
    }
    s
}

fn bode_csv(out: &DesignOutput) -> String {
    let full = out.bode_rows.first().map(|r| r.rest.is_some()).unwrap_or(false);
    let mut s = if full {
        String::from(
            "omega,mag_h11,phase_h11,mag_h12,phase_h12,mag_h21,phase_h21,mag_h22,phase_h22\n",
        )
    } else {
        String::from("omega,mag_h11,phase_h11\n")
    };
    for r in &out.bode_rows {
        s.push_str(&format!("{},{},{}", r.omega, r.h11.0, r.h11.1));
        if let Some(rest) = r.rest {
            for (mag, phase) in rest {
                s.push_str(&format!(",{mag},{phase}"));
            }
        }
        s.push('\n');
    }
    s
}

fn cmd_design(
    config_path: &Path,
    out: Option<&Path>,
    grid_density: usize,
    theta: Option<f64>,
) -> u8 {
    let config = match load_config(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let output = match records::run_design(&config, theta, grid_density) {
        Ok(o) => o,
        Err(e) => return report_error(&e),
    };
    let dir = output_dir(&config, out);
    let record_json = match output.record.to_json() {
        Ok(j) => j,
        Err(e) => return report_error(&e),
    };
    for (name, contents) in [
        ("design.json", record_json),
        ("psd.csv", psd_csv(&output)),
        ("bode.csv", bode_csv(&output)),
    ] {
        if let Err(code) = emit(&dir.join(name), &contents) {
            return code;
        }
    }
    println!(
        "{}",
        serde_json::json!({
            "gamma_sq_bound": output.record.gamma_sq_bound,
            "gamma_tilde_sq": output.record.gamma_tilde_sq,
            "verification_passed": output.record.verification.passed,
            "output_dir": dir.display().to_string(),
        })
    );
    if output.record.verification.passed {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    }
}

fn cmd_verify(record_path: &Path, grid_density: usize) -> u8 {
    let text = match fs::read_to_string(record_path) {
        Ok(t) => t,
        Err(e) => {
            println!(
                "{}",
                serde_json::json!({"error": format!("cannot read {}: {e}", record_path.display()), "kind": "parse"})
            );
            return EXIT_PARSE;
        }
    };
    let record = match DesignRecord::from_json(&text) {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    let summary = match records::verify_record(&record, grid_density) {
        Ok(s) => s,
        Err(e) => return report_error(&e),
    };
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    if summary.passed {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    }
}

fn cmd_figures(
    config_path: &Path,
    out: Option<&Path>,
    fig: Option<&str>,
    grid_density: usize,
) -> u8 {
    let config = match load_config(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = output_dir(&config, out);
    let wants = |name: &str| fig.map(|f| f == name).unwrap_or(true);
    let mut emitted = 0usize;

    match &config.channel {
        ChannelConfig::Static { k, m, phi } => {
            if wants("static_sweep") {
                let sweep: Vec<f64> =
                    (0..40).map(|i| 0.05 + i as f64 * (8.0 - 0.05) / 39.0).collect();
                let rows = match records::static_sweep_rows(
                    k.value(),
                    m.value(),
                    *phi,
                    config.intensities.sigma_u_sq,
                    &sweep,
                ) {
                    Ok(r) => r,
                    Err(e) => return report_error(&e),
                };
                let mut s = String::from("sigma_w_sq,h11_mag,p_e_sup,p_y_minus_u_sup\n");
                for r in rows {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        r.sigma_w_sq, r.h11_mag, r.p_e_sup, r.p_y_minus_u_sup
                    ));
                }
                if let Err(code) = emit(&dir.join("static_sweep.csv"), &s) {
                    return code;
                }
                emitted += 1;
            }
        }
        ChannelConfig::Cavity { k, kappa, omega_c } => {
            if wants("cav_subopt") {
                let sweep: Vec<f64> =
                    (0..20).map(|i| 0.15 + i as f64 * (4.0 - 0.15) / 19.0).collect();
                let rows = match records::cavity_sweep_rows(
                    *k,
                    *kappa,
                    *omega_c,
                    config.intensities.sigma_u_sq,
                    &sweep,
                    grid_density,
                ) {
                    Ok(r) => r,
                    Err(e) => return report_error(&e),
                };
                let mut s = String::from("sigma_w_sq,p_y_minus_u_sup,gamma_sq_bound\n");
                for r in rows {
                    s.push_str(&format!(
                        "{},{},{}\n",
                        r.sigma_w_sq, r.p_y_minus_u_sup, r.gamma_sq_bound
                    ));
                }
                if let Err(code) = emit(&dir.join("cav_subopt.csv"), &s) {
                    return code;
                }
                emitted += 1;
            }
            if wants("psds") {
                let thetas: Vec<f64> = match &config.theta {
                    Some(spec) => match spec.values() {
                        Ok(v) => v,
                        Err(e) => return report_error(&e),
                    },
                    None => vec![-0.95, 0.0, 0.95],
                };
                let curves = match records::psd_ratio_curves(&config, &thetas, grid_density) {
                    Ok(c) => c,
                    Err(e) => return report_error(&e),
                };
                let mut s = String::from("omega");
                for t in &curves.thetas {
                    s.push_str(&format!(",ratio_theta_{t}"));
                }
                s.push('\n');
                for (j, w) in curves.omegas.iter().enumerate() {
                    s.push_str(&format!("{w}"));
                    for curve in &curves.ratios {
                        s.push_str(&format!(",{}", curve[j]));
                    }
                    s.push('\n');
                }
                if let Err(code) = emit(&dir.join("psds.csv"), &s) {
                    return code;
                }
                emitted += 1;
            }
        }
    }
    if emitted == 0 {
        println!(
            "{}",
            serde_json::json!({
                "error": format!("figure {fig:?} is not applicable to this channel type"),
                "kind": "parse",
            })
        );
        return EXIT_PARSE;
    }
    println!(
        "{}",
        serde_json::json!({"figures_written": emitted, "output_dir": dir.display().to_string()})
    );
    EXIT_OK
}
