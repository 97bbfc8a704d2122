//! Command-line front end: flags, configuration loading and the seven commands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Overrides, RunConfig};
use crate::error::{Result, RifError};
use crate::medium::Side;
use crate::modes::{branch_ranges, labelled_modes};
use crate::output::{fmt_f64, write_csv, write_json, write_s_matrices, write_spectrum, Provenance};
use crate::scattering::{s_matrix, Scenario};
use crate::spectra::{
    default_comoving_grid, fit_line, fit_power_law, lab_spectrum, moving_frame_spectrum,
    photon_number, photon_sweep, sli_width, wavelength_grid, LinearFit, PowerLawFit,
    SpectrumTable,
};
use crate::units::{um_to_nm, wavelength_from_omega};

#[derive(Debug, Parser)]
#[command(name = "rif", version, about = "Photon emission at a moving refractive-index front")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true, env = "RIF_CONFIG")]
    pub config: Option<PathBuf>,
    /// Index step height δn.
    #[arg(long, global = true, env = "RIF_DELTA_N", allow_negative_numbers = true)]
    pub delta_n: Option<f64>,
    /// Front speed in units of c.
    #[arg(long, global = true, env = "RIF_U", allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, env = "RIF_OUT")]
    pub out: Option<PathBuf>,
    /// Points of the comoving-frequency grid.
    #[arg(long, global = true, env = "RIF_GRID_POINTS")]
    pub grid_points: Option<usize>,
    /// Propagation length of the front in mm.
    #[arg(long, global = true, env = "RIF_LENGTH_MM", allow_negative_numbers = true)]
    pub length_mm: Option<f64>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true, env = "RIF_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate (k, ω) along the four positive branches of both media.
    Dispersion,
    /// List the eight local modes of each side at one comoving frequency.
    Modes {
        /// Comoving frequency in rad/µm (c = 1).
        #[arg(long, env = "RIF_OMEGA_PRIME", allow_negative_numbers = true)]
        omega_prime: Option<f64>,
    },
    /// Report the subluminal intervals and horizon-interval width.
    Sli,
    /// Moving-frame emission spectrum per out-mode.
    Spectrum,
    /// Lab-frame emission spectrum per unit wavelength.
    Labspectrum,
    /// Total photons emitted into moR over the propagation length.
    Photons,
    /// Photon number and interval width over a list of step heights, with fits.
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Modes { .. } => "modes",
            Command::Sli => "sli",
            Command::Spectrum => "spectrum",
            Command::Labspectrum => "labspectrum",
            Command::Photons => "photons",
            Command::Sweep => "sweep",
        }
    }
}

/// Loads the file (or defaults) and applies flag and environment overrides.
pub fn resolve_config(flags: &Flags, command: &Command) -> Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let omega_prime = match command {
        Command::Modes { omega_prime } => *omega_prime,
        _ => None,
    };
    cfg.apply(&Overrides {
        delta_n: flags.delta_n,
        u: flags.u,
        out: flags.out.clone(),
        grid_points: flags.grid_points,
        length_mm: flags.length_mm,
        omega_prime,
    })?;
    Ok(cfg)
}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = resolve_config(&cli.flags, &cli.command)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.flags.jobs {
        if j == 0 {
            return Err(RifError::Config {
                path: "jobs".into(),
                message: "must be at least 1".into(),
            });
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| RifError::Config {
        path: "jobs".into(),
        message: e.to_string(),
    })?;
    pool.install(|| execute(&cli.command, &cfg))
}

pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    match command {
        Command::Dispersion => cmd_dispersion(cfg),
        Command::Modes { .. } => cmd_modes(cfg),
        Command::Sli => cmd_sli(cfg),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Labspectrum => cmd_labspectrum(cfg),
        Command::Photons => cmd_photons(cfg),
        Command::Sweep => cmd_sweep(cfg),
    }
}

fn provenance(command: &str, cfg: &RunConfig) -> Provenance {
    Provenance::new(command, &cfg.hash())
}

fn comments(p: &Provenance, cfg: &RunConfig) -> Vec<String> {
    vec![
        format!("tool = {} {}", p.tool, p.version),
        format!("command = {}", p.command),
        format!("config_sha256 = {}", p.config_sha256),
        format!("delta_n = {}", fmt_f64(cfg.step.delta_n)),
        format!("u = {}", fmt_f64(cfg.front.u)),
    ]
}

fn strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    provenance: &'a Provenance,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn sidecar<T: Serialize>(path: &Path, p: &Provenance, cfg: &RunConfig, body: T) -> Result<()> {
    write_json(
        path,
        &Sidecar {
            provenance: p,
            config: cfg,
            body,
        },
    )
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

/// `dispersion.csv`: side, branch, lab ω, k, n and v_g along each positive branch.
pub fn cmd_dispersion(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = provenance("dispersion", cfg);
    let step = cfg.step_for(cfg.step.delta_n)?;
    let n = cfg.dispersion.samples_per_branch;
    let mut rows = Vec::new();
    for side in [Side::Left, Side::Right] {
        let m = step.medium(side);
        for (branch, a, b) in branch_ranges(m, cfg.dispersion.top_factor) {
            for i in 0..n {
                let w = a + (b - a) * i as f64 / (n - 1) as f64;
                m.check_guard(w)?;
                // the branch may start exactly at ε = 0
                let idx = m.permittivity(Complex64::new(w, 0.0)).re.max(0.0).sqrt();
                let vg = if w > 0.0 { m.group_velocity(w).unwrap_or(0.0) } else { 1.0 / idx };
                rows.push(vec![
                    side.to_string(),
                    branch.to_string(),
                    fmt_f64(w),
                    fmt_f64(idx * w),
                    fmt_f64(idx),
                    fmt_f64(vg),
                ]);
            }
        }
    }
    let csv = out_path(cfg, "dispersion.csv");
    write_csv(
        &csv,
        &comments(&p, cfg),
        &strings(&["side", "branch", "omega", "k", "n", "group_velocity"]),
        rows,
    )?;
    Ok(vec![csv])
}

#[derive(Serialize)]
struct ModesSummary {
    omega_prime: f64,
    configuration: String,
    configuration_number: u8,
    degenerate: bool,
    max_residual: f64,
}

/// `modes.csv`: the eight labelled roots of each side at `modes.omega_prime`.
pub fn cmd_modes(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = provenance("modes", cfg);
    let sc = cfg.scenario()?;
    let wp = cfg.modes.omega_prime;
    let conf = sc.configuration(wp);
    let mut rows = Vec::new();
    let mut max_residual = 0.0_f64;
    for side in [Side::Left, Side::Right] {
        let roots = labelled_modes(
            sc.step().medium(side),
            wp,
            sc.frame(),
            side,
            sc.sli(side),
            &sc.settings().modes,
        )?;
        for r in roots {
            max_residual = max_residual.max(r.residual);
            rows.push(vec![
                side.to_string(),
                r.label.map(|l| l.to_string()).unwrap_or_default(),
                fmt_f64(r.lab.omega.re),
                fmt_f64(r.lab.omega.im),
                fmt_f64(r.lab.k.re),
                fmt_f64(r.lab.k.im),
                fmt_f64(r.comoving.k.re),
                fmt_f64(r.comoving.k.im),
                u8::from(r.propagating).to_string(),
                fmt_f64(r.norm_sign.map(|s| s.value()).unwrap_or(0.0)),
                fmt_f64(r.lab_group_velocity.unwrap_or(f64::NAN)),
                fmt_f64(r.comoving_group_velocity.unwrap_or(f64::NAN)),
                fmt_f64(r.residual),
            ]);
        }
    }
    let mut c = comments(&p, cfg);
    c.push(format!("omega_prime = {}", fmt_f64(wp)));
    c.push(format!("configuration = {}", conf.configuration));
    let csv = out_path(cfg, "modes.csv");
    write_csv(
        &csv,
        &c,
        &strings(&[
            "side",
            "label",
            "omega_re",
            "omega_im",
            "k_re",
            "k_im",
            "k_prime_re",
            "k_prime_im",
            "propagating",
            "norm",
            "lab_group_velocity",
            "comoving_group_velocity",
            "residual",
        ]),
        rows,
    )?;
    let json = out_path(cfg, "modes.json");
    sidecar(
        &json,
        &p,
        cfg,
        ModesSummary {
            omega_prime: wp,
            configuration: conf.configuration.to_string(),
            configuration_number: conf.configuration.number(),
            degenerate: conf.degenerate,
            max_residual,
        },
    )?;
    Ok(vec![csv, json])
}

/// `sli.csv`: each side's interval in ω′ and in lab wavelength.
pub fn cmd_sli(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = provenance("sli", cfg);
    let sc = cfg.scenario()?;
    let mut rows = Vec::new();
    for side in [Side::Left, Side::Right] {
        if let Some(s) = sc.sli(side) {
            rows.push(vec![
                side.to_string(),
                fmt_f64(s.omega_min),
                fmt_f64(s.omega_max),
                fmt_f64(um_to_nm(wavelength_from_omega(s.lab_omega_at_min))),
                fmt_f64(um_to_nm(wavelength_from_omega(s.lab_omega_at_max))),
                fmt_f64(s.width()),
            ]);
        }
    }
    let csv = out_path(cfg, "sli.csv");
    write_csv(
        &csv,
        &comments(&p, cfg),
        &strings(&[
            "side",
            "omega_prime_min",
            "omega_prime_max",
            "wavelength_nm_at_min",
            "wavelength_nm_at_max",
            "width",
        ]),
        rows,
    )?;
    let json = out_path(cfg, "sli.json");
    sidecar(&json, &p, cfg, sli_width(&sc))?;
    Ok(vec![csv, json])
}

fn moving_table(cfg: &RunConfig, sc: &Scenario) -> Result<(SpectrumTable, Vec<f64>)> {
    let grid = default_comoving_grid(sc, cfg.grid.points)?;
    let desc = format!(
        "log-edge-refined segments between SLI edges over [0.8*min_R, 1.2*max_R], {} points",
        cfg.grid.points
    );
    Ok((moving_frame_spectrum(sc, &grid, &desc), grid))
}

#[derive(Serialize)]
struct SpectrumSummary {
    strongest_mode: Option<String>,
    column_integrals: Vec<(String, f64)>,
}

/// `spectrum.csv` and sidecar; `smatrix.jsonl` when requested.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = provenance("spectrum", cfg);
    let sc = cfg.scenario()?;
    let (table, grid) = moving_table(cfg, &sc)?;
    let column_integrals: Vec<(String, f64)> = table
        .columns
        .iter()
        .map(|c| (c.name.clone(), crate::spectra::trapezoid(&table.axis, &c.values)))
        .collect();
    let strongest_mode = column_integrals
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|c| c.1 > 0.0)
        .map(|c| c.0.clone());
    let summary = SpectrumSummary {
        strongest_mode,
        column_integrals,
    };
    let (csv, json) = write_spectrum(&cfg.output.dir, "spectrum", &table, &p, &summary)?;
    let mut files = vec![csv, json];
    if cfg.output.dump_s_matrix {
        let mats: Vec<_> = grid
            .par_iter()
            .map(|&w| s_matrix(&sc, w))
            .collect::<Vec<_>>()
            .into_iter()
            .filter_map(|r| r.ok())
            .collect();
        let path = out_path(cfg, "smatrix.jsonl");
        write_s_matrices(&path, &mats)?;
        files.push(path);
    }
    Ok(files)
}

#[derive(Serialize)]
struct LabSummary {
    peak_wavelength_nm: Option<f64>,
    peak_total: Option<f64>,
    peak_mode: Option<String>,
    peak_in_uv: bool,
}

fn lab_summary(t: &SpectrumTable) -> LabSummary {
    let peak = t
        .total
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .filter(|(_, v)| **v > 0.0);
    match peak {
        Some((i, v)) => {
            let mode = t
                .columns
                .iter()
                .max_by(|a, b| a.values[i].total_cmp(&b.values[i]))
                .map(|c| c.name.clone());
            LabSummary {
                peak_wavelength_nm: Some(t.axis[i]),
                peak_total: Some(*v),
                peak_mode: mode,
                peak_in_uv: t.axis[i] < 400.0,
            }
        }
        None => LabSummary {
            peak_wavelength_nm: None,
            peak_total: None,
            peak_mode: None,
            peak_in_uv: false,
        },
    }
}

/// `labspectrum.csv` and sidecar with the peak summary.
pub fn cmd_labspectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = provenance("labspectrum", cfg);
    let sc = cfg.scenario()?;
    let g = &cfg.grid;
    let grid = wavelength_grid(g.lab_min_nm, g.lab_max_nm, g.lab_points)?;
    let desc = format!(
        "geometric wavelengths over [{}, {}] nm, {} points",
        g.lab_min_nm, g.lab_max_nm, g.lab_points
    );
    let table = lab_spectrum(&sc, &grid, &desc)?;
    let (csv, json) = write_spectrum(&cfg.output.dir, "labspectrum", &table, &p, &lab_summary(&table))?;
    Ok(vec![csv, json])
}

/// `photons.csv`: photons emitted into moR over `photons.length_mm`.
pub fn cmd_photons(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = provenance("photons", cfg);
    let sc = cfg.scenario()?;
    let n = photon_number(&sc, cfg.length_um(), &cfg.photon_options())?;
    let csv = out_path(cfg, "photons.csv");
    let mut c = comments(&p, cfg);
    c.push(format!("delta_tau_convention = {}", crate::output::DELTA_TAU_CONVENTION));
    write_csv(
        &csv,
        &c,
        &strings(&[
            "delta_n",
            "photons",
            "integral",
            "delta_tau",
            "length_um",
            "omega_prime_low",
            "omega_prime_high",
        ]),
        [vec![
            fmt_f64(cfg.step.delta_n),
            fmt_f64(n.photons),
            fmt_f64(n.integral),
            fmt_f64(n.delta_tau),
            fmt_f64(n.length_um),
            fmt_f64(n.interval.0),
            fmt_f64(n.interval.1),
        ]],
    )?;
    let json = out_path(cfg, "photons.json");
    sidecar(&json, &p, cfg, &n)?;
    Ok(vec![csv, json])
}

#[derive(Serialize)]
struct SweepSummary {
    growth_fit: std::result::Result<PowerLawFit, String>,
    saturation_fit: std::result::Result<PowerLawFit, String>,
    width_fit: std::result::Result<LinearFit, String>,
    rows: Vec<crate::spectra::SweepRow>,
}

/// `sweep.csv`: photon number and interval widths per δn; fits in the sidecar.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = provenance("sweep", cfg);
    let base = cfg.scenario()?;
    let rows = photon_sweep(&base, &cfg.sweep.delta_n, cfg.length_um(), &cfg.photon_options())?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta_n, r.photons.photons)).collect();
    let [a, b] = cfg.sweep.fit_range;
    let growth_fit = fit_power_law(&pts, (a, b)).map_err(|e| e.to_string());
    let largest = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let saturation_fit =
        fit_power_law(&pts, (cfg.sweep.saturation_min, largest)).map_err(|e| e.to_string());
    let widths: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.delta_n <= cfg.sweep.width_fit_max)
        .map(|r| (r.delta_n, r.width.horizon))
        .collect();
    let width_fit = fit_line(&widths).map_err(|e| e.to_string());
    let csv = out_path(cfg, "sweep.csv");
    let mut c = comments(&p, cfg);
    c.push(format!("length_um = {}", fmt_f64(cfg.length_um())));
    c.push(format!("delta_tau_convention = {}", crate::output::DELTA_TAU_CONVENTION));
    write_csv(
        &csv,
        &c,
        &strings(&[
            "delta_n",
            "sigma",
            "photons",
            "integral",
            "delta_tau",
            "horizon_width",
            "full_width",
            "quarantined",
        ]),
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.delta_n),
                fmt_f64(r.sigma),
                fmt_f64(r.photons.photons),
                fmt_f64(r.photons.integral),
                fmt_f64(r.photons.delta_tau),
                fmt_f64(r.width.horizon),
                fmt_f64(r.width.full),
                r.photons.quarantine.len().to_string(),
            ]
        }),
    )?;
    let json = out_path(cfg, "sweep.json");
    sidecar(
        &json,
        &p,
        cfg,
        SweepSummary {
            growth_fit,
            saturation_fit,
            width_fit,
            rows,
        },
    )?;
    Ok(vec![csv, json])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::read_csv;

    fn cfg(dir: &Path) -> RunConfig {
        let mut c = RunConfig::default();
        c.output.dir = dir.to_path_buf();
        c.grid.points = 80;
        c.grid.lab_points = 60;
        c.photons.quadrature_intervals = 16;
        c
    }

    #[test]
    fn flags_parse_and_override() {
        let cli = Cli::try_parse_from([
            "rif", "modes", "--delta-n", "0.03", "--u", "0.65", "--omega-prime", "0.3", "--jobs", "2",
        ])
        .unwrap();
        let c = resolve_config(&cli.flags, &cli.command).unwrap();
        assert_eq!((c.step.delta_n, c.front.u, c.modes.omega_prime), (0.03, 0.65, 0.3));
        assert_eq!(cli.flags.jobs, Some(2));
        assert!(Cli::try_parse_from(["rif", "bogus"]).is_err());
    }

    #[test]
    fn vacuum_dispersion_is_the_light_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.medium.elastic_constants = [0.0; 3];
        c.step.delta_n = 0.0;
        let files = cmd_dispersion(&c).unwrap();
        let (h, rows) = read_csv(&files[0]).unwrap();
        let (w, k) = (
            h.iter().position(|x| x == "omega").unwrap(),
            h.iter().position(|x| x == "k").unwrap(),
        );
        assert!(!rows.is_empty());
        for r in rows {
            assert_eq!(r[w], r[k]);
        }
    }

    #[test]
    fn black_hole_frequency_reports_its_configuration() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.modes.omega_prime = 0.5;
        let files = cmd_modes(&c).unwrap();
        let (h, rows) = read_csv(&files[0]).unwrap();
        assert_eq!(rows.len(), 16);
        let res = h.iter().position(|x| x == "residual").unwrap();
        assert!(rows.iter().all(|r| r[res] <= 1e-9));
        let json = std::fs::read_to_string(&files[1]).unwrap();
        assert!(json.contains("\"configuration\": \"BlackHole\""));
    }

    #[test]
    fn jobs_zero_is_rejected() {
        let cli = Cli::try_parse_from(["rif", "sli", "--jobs", "0"]).unwrap();
        assert!(run(&cli).is_err());
    }
}
