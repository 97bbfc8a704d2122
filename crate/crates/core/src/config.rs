//! Run configuration: a TOML file with flat sections, validated before use.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, RifError};
use crate::medium::{
    scale_medium, FrontFrame, IndexStep, SellmeierMedium, DEFAULT_GUARD_BAND,
    FUSED_SILICA_ELASTIC, FUSED_SILICA_WAVELENGTHS_UM,
};
use crate::modes::ModeSettings;
use crate::scattering::{ScatteringSettings, Scenario};
use crate::spectra::{
    EmissionInterval, PhotonOptions, DEFAULT_COMOVING_POINTS, DEFAULT_LAB_MAX_NM,
    DEFAULT_LAB_POINTS, DEFAULT_QUADRATURE_INTERVALS, LAB_CUTOFF_NM,
};
use crate::units::mm_to_um;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    pub resonance_wavelengths_um: [f64; 3],
    pub elastic_constants: [f64; 3],
    pub guard_band: f64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        Self {
            resonance_wavelengths_um: FUSED_SILICA_WAVELENGTHS_UM,
            elastic_constants: FUSED_SILICA_ELASTIC,
            guard_band: DEFAULT_GUARD_BAND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontConfig {
    /// Front speed in units of c.
    pub u: f64,
}

impl Default for FrontConfig {
    fn default() -> Self {
        Self { u: 0.66 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub delta_n: f64,
    /// Reference index for the left-medium scaling; the static index when absent.
    pub n_ref: Option<f64>,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            delta_n: 0.02,
            n_ref: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Comoving-frequency points of the moving-frame spectrum.
    pub points: usize,
    pub lab_min_nm: f64,
    pub lab_max_nm: f64,
    pub lab_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: DEFAULT_COMOVING_POINTS,
            lab_min_nm: LAB_CUTOFF_NM,
            lab_max_nm: DEFAULT_LAB_MAX_NM,
            lab_points: DEFAULT_LAB_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotonConfig {
    pub length_mm: f64,
    pub interval: EmissionInterval,
    pub quadrature_intervals: usize,
}

impl Default for PhotonConfig {
    fn default() -> Self {
        Self {
            length_mm: 1.0,
            interval: EmissionInterval::Horizon,
            quadrature_intervals: DEFAULT_QUADRATURE_INTERVALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub delta_n: Vec<f64>,
    /// δn range of the growth-law fit.
    pub fit_range: [f64; 2],
    /// Smallest δn of the saturation fit.
    pub saturation_min: f64,
    /// Largest δn of the linear fit of the horizon-interval width.
    pub width_fit_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            delta_n: vec![
                1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 1.5e-2, 2e-2, 3e-2, 4e-2, 4.5e-2, 5e-2,
                5.2e-2, 5.4e-2, 5.6e-2, 5.8e-2, 6e-2,
            ],
            fit_range: [1e-3, 4e-2],
            saturation_min: 0.052,
            width_fit_max: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub omega_prime: f64,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self { omega_prime: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub samples_per_branch: usize,
    /// Top branch ends at this multiple of the highest resonance frequency.
    pub top_factor: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            samples_per_branch: 200,
            top_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub propagation: f64,
    pub edge: f64,
    pub residual: f64,
    pub unitarity: f64,
    pub condition_limit: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let s = ScatteringSettings::default();
        Self {
            propagation: s.modes.propagation_tolerance,
            edge: s.modes.edge_tolerance,
            residual: s.modes.residual_tolerance,
            unitarity: s.unitarity_tolerance,
            condition_limit: s.condition_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write every scattering matrix of a moving-frame run.
    pub dump_s_matrix: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            dump_s_matrix: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub medium: MediumConfig,
    pub front: FrontConfig,
    pub step: StepConfig,
    pub grid: GridConfig,
    pub photons: PhotonConfig,
    pub sweep: SweepConfig,
    pub modes: ModesConfig,
    pub dispersion: DispersionConfig,
    pub tolerances: ToleranceConfig,
    pub output: OutputConfig,
}

/// Command-line and environment values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub delta_n: Option<f64>,
    pub u: Option<f64>,
    pub out: Option<PathBuf>,
    pub grid_points: Option<usize>,
    pub length_mm: Option<f64>,
    pub omega_prime: Option<f64>,
}

fn field(path: &str, message: impl Into<String>) -> RifError {
    RifError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn positive(path: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(field(path, format!("must be finite and positive, got {x}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<document>".into());
            field(&path, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RifError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            RifError::Config { path: p, message } => RifError::Config {
                path: p,
                message: format!("{message} (in {})", path.display()),
            },
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(x) = o.delta_n {
            self.step.delta_n = x;
        }
        if let Some(x) = o.u {
            self.front.u = x;
        }
        if let Some(x) = &o.out {
            self.output.dir = x.clone();
        }
        if let Some(x) = o.grid_points {
            self.grid.points = x;
        }
        if let Some(x) = o.length_mm {
            self.photons.length_mm = x;
        }
        if let Some(x) = o.omega_prime {
            self.modes.omega_prime = x;
        }
        self.validate()
    }

    /// Checks every field, reporting the first failure by its key path.
    pub fn validate(&self) -> Result<()> {
        SellmeierMedium::new(
            self.medium.resonance_wavelengths_um,
            self.medium.elastic_constants,
        )
        .and_then(|m| m.with_guard_band(self.medium.guard_band))
        .map_err(|e| match e {
            RifError::InvalidParameter { field: f, reason } => field(&f, reason),
            other => other,
        })?;
        let u = self.front.u;
        if !(u.is_finite() && u > 0.0 && u < 1.0) {
            return Err(field("front.u", format!("must lie in (0, 1), got {u}")));
        }
        let dn = self.step.delta_n;
        if !(dn.is_finite() && dn >= 0.0) {
            return Err(field("step.delta_n", format!("must be finite and non-negative, got {dn}")));
        }
        if let Some(n) = self.step.n_ref {
            if !(n.is_finite() && n > 1.0) {
                return Err(field("step.n_ref", format!("must exceed 1, got {n}")));
            }
        }
        if self.grid.points < 40 {
            return Err(field("grid.points", "must be at least 40"));
        }
        if !(self.grid.lab_min_nm >= LAB_CUTOFF_NM) {
            return Err(field(
                "grid.lab_min_nm",
                format!("must be at least the {LAB_CUTOFF_NM} nm cutoff"),
            ));
        }
        if !(self.grid.lab_max_nm.is_finite() && self.grid.lab_max_nm > self.grid.lab_min_nm) {
            return Err(field("grid.lab_max_nm", "must exceed grid.lab_min_nm"));
        }
        if self.grid.lab_points < 2 {
            return Err(field("grid.lab_points", "must be at least 2"));
        }
        positive("photons.length_mm", self.photons.length_mm)?;
        if self.photons.quadrature_intervals < 2 {
            return Err(field("photons.quadrature_intervals", "must be at least 2"));
        }
        for (i, &d) in self.sweep.delta_n.iter().enumerate() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(field(
                    &format!("sweep.delta_n[{i}]"),
                    format!("must be finite and non-negative, got {d}"),
                ));
            }
        }
        let [a, b] = self.sweep.fit_range;
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(field("sweep.fit_range", "must satisfy 0 < lower < upper"));
        }
        positive("sweep.saturation_min", self.sweep.saturation_min)?;
        positive("sweep.width_fit_max", self.sweep.width_fit_max)?;
        positive("modes.omega_prime", self.modes.omega_prime)?;
        if self.dispersion.samples_per_branch < 2 {
            return Err(field("dispersion.samples_per_branch", "must be at least 2"));
        }
        if !(self.dispersion.top_factor > 1.0 && self.dispersion.top_factor.is_finite()) {
            return Err(field("dispersion.top_factor", "must exceed 1"));
        }
        let t = &self.tolerances;
        positive("tolerances.propagation", t.propagation)?;
        positive("tolerances.edge", t.edge)?;
        positive("tolerances.residual", t.residual)?;
        positive("tolerances.unitarity", t.unitarity)?;
        positive("tolerances.condition_limit", t.condition_limit)?;
        if self.output.dir.as_os_str().is_empty() {
            return Err(field("output.dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn medium(&self) -> Result<SellmeierMedium> {
        SellmeierMedium::new(
            self.medium.resonance_wavelengths_um,
            self.medium.elastic_constants,
        )?
        .with_guard_band(self.medium.guard_band)
    }

    pub fn frame(&self) -> Result<FrontFrame> {
        FrontFrame::new(self.front.u)
    }

    pub fn settings(&self) -> ScatteringSettings {
        let t = &self.tolerances;
        ScatteringSettings {
            modes: ModeSettings {
                propagation_tolerance: t.propagation,
                edge_tolerance: t.edge,
                residual_tolerance: t.residual,
            },
            condition_limit: t.condition_limit,
            unitarity_tolerance: t.unitarity,
        }
    }

    pub fn step_for(&self, delta_n: f64) -> Result<IndexStep> {
        let right = self.medium()?;
        match self.step.n_ref {
            Some(n) => scale_medium(right, delta_n, n),
            None => IndexStep::new(right, delta_n),
        }
    }

    pub fn scenario_for(&self, delta_n: f64) -> Result<Scenario> {
        Scenario::new(self.step_for(delta_n)?, self.frame()?, self.settings())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario_for(self.step.delta_n)
    }

    pub fn photon_options(&self) -> PhotonOptions {
        PhotonOptions {
            interval: self.photons.interval,
            intervals: self.photons.quadrature_intervals,
        }
    }

    pub fn length_um(&self) -> f64 {
        mm_to_um(self.photons.length_mm)
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of [`RunConfig::to_toml`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml_str("[step]\ndelta_n = 0.01\n[front]\nu = 0.7\n").unwrap();
        assert_eq!(c.step.delta_n, 0.01);
        assert_eq!(c.front.u, 0.7);
        assert_eq!(c.grid, GridConfig::default());
    }

    #[test]
    fn invalid_fields_report_their_path() {
        let path = |text: &str| match RunConfig::from_toml_str(text) {
            Err(RifError::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(path("[front]\nu = 1.2\n"), "front.u");
        assert_eq!(path("[step]\ndelta_n = -0.1\n"), "step.delta_n");
        assert_eq!(path("[grid]\nlab_min_nm = 200.0\n"), "grid.lab_min_nm");
        assert_eq!(path("[sweep]\ndelta_n = [0.01, -1.0]\n"), "sweep.delta_n[1]");
        assert_eq!(
            path("[medium]\nresonance_wavelengths_um = [0.1, 0.2, 0.3]\n"),
            "medium.resonance_wavelengths"
        );
        assert!(matches!(
            RunConfig::from_toml_str("[front]\nspeed = 0.5\n"),
            Err(RifError::Config { .. })
        ));
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut c = RunConfig::default();
        c.apply(&Overrides {
            delta_n: Some(0.03),
            u: Some(0.6),
            grid_points: Some(100),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((c.step.delta_n, c.front.u, c.grid.points), (0.03, 0.6, 100));
        let before = c.hash();
        c.apply(&Overrides::default()).unwrap();
        assert_eq!(c.hash(), before);
        assert!(c
            .apply(&Overrides {
                u: Some(1.5),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn explicit_reference_index_is_used() {
        let mut c = RunConfig::default();
        c.step.n_ref = Some(1.45);
        let s = c.step_for(0.02).unwrap();
        assert_eq!(s.n_ref_right(), 1.45);
        let d = RunConfig::default().step_for(0.02).unwrap();
        assert_eq!(d.n_ref_right(), d.right().static_index());
    }
}
