//! Emission spectra in the comoving and laboratory frames, photon numbers, and fits.
//!
//! Moving-frame columns are the flux densities `I′^α(ω′)` of every out-mode.
//! A lab wavelength λ maps to `ω′ = γω(1 − u·n(ω))` for a positive-frequency
//! mode and to `ω′ = γω(u·n(ω) − 1)` for the negative-norm partner; the lab
//! density per unit ω is `|1 − u/v_g(ω)|·I′`, and per unit wavelength it gains
//! the factor `ω²/(2π)`. With these conventions `∫I dω = (1/γ)∫I′ dω′`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RifError};
use crate::medium::{scale_medium, SellmeierMedium, Side};
use crate::modes::{bisect, optical_branch_range, ModeKind, ModeLabel, SubluminalInterval};
use crate::scattering::{s_matrix, Scenario, ScatteringMatrix};
use crate::units::{nm_to_um, omega_from_wavelength};

/// Shortest lab wavelength kept in lab spectra, nm.
pub const LAB_CUTOFF_NM: f64 = 230.0;
pub const DEFAULT_COMOVING_POINTS: usize = 400;
pub const DEFAULT_LAB_POINTS: usize = 2000;
pub const DEFAULT_LAB_MAX_NM: f64 = 4000.0;
/// Simpson intervals per segment in [`photon_number`].
pub const DEFAULT_QUADRATURE_INTERVALS: usize = 200;
/// Fewest grid points given to any segment between two SLI edges.
const MIN_SEGMENT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumFrame {
    Moving,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumColumn {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub name: String,
    pub value: f64,
}

/// A grid point that failed, kept with its error instead of being dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarantinedPoint {
    pub axis_value: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub delta_n: f64,
    pub u: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub n_ref: f64,
    pub grid: String,
    /// SLI edges in ω′, sorted.
    pub edges: Vec<f64>,
    pub markers: Vec<Marker>,
    pub quarantine: Vec<QuarantinedPoint>,
}

impl SpectrumMetadata {
    fn new(scenario: &Scenario, grid: String) -> Self {
        let step = scenario.step();
        let frame = scenario.frame();
        Self {
            delta_n: step.delta_n(),
            u: frame.u(),
            gamma: frame.gamma(),
            sigma: step.sigma(),
            n_ref: step.n_ref_right(),
            grid,
            edges: scenario.edges(),
            markers: Vec::new(),
            quarantine: Vec::new(),
        }
    }

    pub fn marker(&self, name: &str) -> Option<f64> {
        self.markers.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// Flux densities per out-mode over a sorted axis.
///
/// Moving frame: axis ω′ (c/µm), densities per unit ω′ and unit τ.
/// Lab frame: axis λ (nm), densities per µm of wavelength and unit lab time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub frame: SpectrumFrame,
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub columns: Vec<SpectrumColumn>,
    pub total: Vec<f64>,
    /// Per-row side data: configuration number (moving), preimage ω′ per mode (lab).
    pub aux: Vec<SpectrumColumn>,
    pub metadata: SpectrumMetadata,
}

impl SpectrumTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn aux_column(&self, name: &str) -> Option<&[f64]> {
        self.aux
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }
}

fn sorted_labels<'a>(labels: impl Iterator<Item = &'a ModeLabel>) -> Vec<ModeLabel> {
    let mut v: Vec<ModeLabel> = labels.copied().collect();
    v.sort_by_key(|l| l.ordering_key());
    v.dedup();
    v
}

/// Edges that split `[lo, hi]`, deduplicated.
fn interior_edges(scenario: &Scenario, lo: f64, hi: f64) -> Vec<f64> {
    let tol = scenario.settings().modes.edge_tolerance;
    let mut out: Vec<f64> = Vec::new();
    for e in scenario.edges() {
        if e > lo && e < hi && out.last().is_none_or(|l| (e - l).abs() > tol * e) {
            out.push(e);
        }
    }
    out
}

/// Smallest edge offset of the log-spaced clusters, relative to the segment length.
const EDGE_REFINEMENT: f64 = 1e-5;
/// Largest edge offset of the log-spaced clusters, relative to the segment length.
const EDGE_CLUSTER_SPAN: f64 = 0.2;
/// Smallest distance in rad/µm between a grid node and an SLI edge.
const EDGE_OFFSET_FLOOR: f64 = 1e-6;

/// `2·per_end` nodes log-spaced towards both ends of `(a, b)` and `uniform`
/// cell-centred nodes, all strictly inside.
fn segment_nodes(a: f64, b: f64, per_end: usize, uniform: usize) -> Vec<f64> {
    let len = b - a;
    let mut out: Vec<f64> = (0..uniform)
        .map(|j| a + len * (j as f64 + 0.5) / uniform as f64)
        .collect();
    let span = len * EDGE_CLUSTER_SPAN;
    let first = (len * EDGE_REFINEMENT).max(EDGE_OFFSET_FLOOR).min(0.5 * span);
    let ratio = (span / first).ln();
    for i in 0..per_end {
        let t = if per_end == 1 { 0.0 } else { i as f64 / (per_end - 1) as f64 };
        let d = first * (ratio * t).exp();
        out.push(a + d);
        out.push(b - d);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Default ω′ grid over `[0.8·ω′_minR, 1.2·ω′_maxR]`, split at every SLI edge.
///
/// Half the points are shared equally between segments as log-spaced clusters
/// at both segment ends; the other half are uniform, shared by segment length.
pub fn default_comoving_grid(scenario: &Scenario, points: usize) -> Result<Vec<f64>> {
    let r = scenario
        .sli(Side::Right)
        .ok_or_else(|| RifError::invalid("grid", "right medium has no subluminal interval"))?;
    let lo = 0.8 * r.omega_min;
    let hi = 1.2 * r.omega_max;
    let mut breaks = vec![lo];
    breaks.extend(interior_edges(scenario, lo, hi));
    breaks.push(hi);
    let segments: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
    let nseg = segments.len();
    if points < MIN_SEGMENT_POINTS * nseg {
        return Err(RifError::invalid(
            "grid.points",
            format!("need at least {} points", MIN_SEGMENT_POINTS * nseg),
        ));
    }
    let per_end = (points / 2 / nseg / 2).max(MIN_SEGMENT_POINTS / 4);
    let budget = points - 2 * per_end * nseg;
    let total = hi - lo;
    let mut uniform: Vec<usize> = segments
        .iter()
        .map(|(a, b)| ((budget as f64 * (b - a) / total).floor() as usize).max(MIN_SEGMENT_POINTS / 2))
        .collect();
    let longest = (0..nseg)
        .max_by(|&i, &j| {
            (segments[i].1 - segments[i].0).total_cmp(&(segments[j].1 - segments[j].0))
        })
        .unwrap_or(0);
    let assigned: usize = uniform.iter().sum();
    uniform[longest] = (uniform[longest] + budget).saturating_sub(assigned).max(MIN_SEGMENT_POINTS / 2);
    Ok(segments
        .iter()
        .zip(&uniform)
        .flat_map(|(&(a, b), &m)| segment_nodes(a, b, per_end, m))
        .collect())
}

/// Geometric wavelength grid in nm.
pub fn wavelength_grid(min_nm: f64, max_nm: f64, points: usize) -> Result<Vec<f64>> {
    if !(min_nm > 0.0 && max_nm > min_nm && points >= 2) {
        return Err(RifError::invalid(
            "lab_grid",
            "need 0 < min < max and at least two points",
        ));
    }
    let r = (max_nm / min_nm).ln();
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                max_nm
            } else {
                min_nm * (r * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}

fn default_lab_grid() -> Vec<f64> {
    wavelength_grid(LAB_CUTOFF_NM, DEFAULT_LAB_MAX_NM, DEFAULT_LAB_POINTS)
        .expect("default lab grid is valid")
}

/// Moving-frame spectrum of every out-mode over `grid`.
pub fn moving_frame_spectrum(scenario: &Scenario, grid: &[f64], grid_description: &str) -> SpectrumTable {
    let results: Vec<Result<ScatteringMatrix>> =
        grid.par_iter().map(|&wp| s_matrix(scenario, wp)).collect();
    let mut meta = SpectrumMetadata::new(scenario, grid_description.to_string());
    let mut rows: Vec<(f64, ScatteringMatrix)> = Vec::with_capacity(grid.len());
    for (&wp, r) in grid.iter().zip(results) {
        match r {
            Ok(s) => rows.push((wp, s)),
            Err(e) => meta.quarantine.push(QuarantinedPoint {
                axis_value: wp,
                error: e.to_string(),
            }),
        }
    }
    let labels = sorted_labels(rows.iter().flat_map(|(_, s)| s.out_labels.iter()));
    let mut columns: Vec<SpectrumColumn> = labels
        .iter()
        .map(|l| SpectrumColumn {
            name: l.to_string(),
            values: Vec::with_capacity(rows.len()),
        })
        .collect();
    let mut config = Vec::with_capacity(rows.len());
    let mut total = Vec::with_capacity(rows.len());
    for (_, s) in &rows {
        let f = s.fluxes();
        for (col, l) in columns.iter_mut().zip(&labels) {
            col.values.push(s.out_index(*l).map(|b| f[b]).unwrap_or(0.0));
        }
        total.push(f.iter().sum());
        config.push(s.configuration.configuration.number() as f64);
    }
    SpectrumTable {
        frame: SpectrumFrame::Moving,
        axis_name: "omega_prime".into(),
        axis: rows.iter().map(|(w, _)| *w).collect(),
        columns,
        total,
        aux: vec![SpectrumColumn {
            name: "configuration".into(),
            values: config,
        }],
        metadata: meta,
    }
}

/// Moving-frame spectrum on the default grid.
pub fn default_moving_frame_spectrum(scenario: &Scenario, points: usize) -> Result<SpectrumTable> {
    let grid = default_comoving_grid(scenario, points)?;
    let desc = format!(
        "log-edge-refined segments between SLI edges over [0.8*min_R, 1.2*max_R], {points} points"
    );
    Ok(moving_frame_spectrum(scenario, &grid, &desc))
}

/// One lab-frame contribution at fixed wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LabContribution {
    label: ModeLabel,
    omega_prime: f64,
    /// Photons per unit lab time per µm of wavelength.
    density: f64,
}

fn lab_contributions(scenario: &Scenario, omega: f64) -> (Vec<LabContribution>, Vec<String>) {
    let frame = scenario.frame();
    let (u, g) = (frame.u(), frame.gamma());
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for side in [Side::Left, Side::Right] {
        let medium = scenario.step().medium(side);
        let (n, vg) = match (medium.refractive_index(omega), medium.group_velocity(omega)) {
            (Ok(n), Ok(v)) => (n, v),
            _ => continue,
        };
        for sign in [1.0, -1.0] {
            let wp = sign * g * omega * (1.0 - u * n);
            if wp <= 0.0 {
                continue;
            }
            let s = match s_matrix(scenario, wp) {
                Ok(s) => s,
                Err(e) => {
                    errors.push(format!("{side} {}: {e}", if sign > 0.0 { "+" } else { "-" }));
                    continue;
                }
            };
            let target = sign * omega;
            let hit = s.out_modes.iter().position(|r| {
                r.side == side && (r.lab.omega.re - target).abs() <= 1e-8 * omega
            });
            if let Some(b) = hit {
                let flux = s.fluxes()[b];
                let per_omega = (1.0 - u / vg).abs() * flux;
                out.push(LabContribution {
                    label: s.out_labels[b],
                    omega_prime: wp,
                    density: per_omega * omega * omega / (2.0 * PI),
                });
            }
        }
    }
    (out, errors)
}

/// Lab-frame spectrum over `wavelengths_nm` (sorted, all at or above the cutoff).
pub fn lab_spectrum(scenario: &Scenario, wavelengths_nm: &[f64], grid_description: &str) -> Result<SpectrumTable> {
    if let Some(&bad) = wavelengths_nm.iter().find(|&&l| !(l >= LAB_CUTOFF_NM)) {
        return Err(RifError::BelowCutoff {
            wavelength_nm: bad,
            cutoff_nm: LAB_CUTOFF_NM,
        });
    }
    let rows: Vec<(Vec<LabContribution>, Vec<String>)> = wavelengths_nm
        .par_iter()
        .map(|&l| lab_contributions(scenario, omega_from_wavelength(nm_to_um(l))))
        .collect();
    let mut meta = SpectrumMetadata::new(scenario, grid_description.to_string());
    for (&l, (_, errs)) in wavelengths_nm.iter().zip(&rows) {
        for e in errs {
            meta.quarantine.push(QuarantinedPoint {
                axis_value: l,
                error: e.clone(),
            });
        }
    }
    let labels = sorted_labels(rows.iter().flat_map(|(c, _)| c.iter().map(|x| &x.label)));
    let mut columns = Vec::new();
    let mut aux = Vec::new();
    for l in &labels {
        let pick = |f: fn(&LabContribution) -> f64, empty: f64| -> Vec<f64> {
            rows.iter()
                .map(|(c, _)| c.iter().find(|x| x.label == *l).map(f).unwrap_or(empty))
                .collect()
        };
        columns.push(SpectrumColumn {
            name: l.to_string(),
            values: pick(|x| x.density, 0.0),
        });
        aux.push(SpectrumColumn {
            name: format!("omega_prime_{l}"),
            values: pick(|x| x.omega_prime, f64::NAN),
        });
    }
    let total = (0..wavelengths_nm.len())
        .map(|i| columns.iter().map(|c| c.values[i]).sum())
        .collect();
    meta.markers = lab_markers(scenario);
    Ok(SpectrumTable {
        frame: SpectrumFrame::Lab,
        axis_name: "wavelength_nm".into(),
        axis: wavelengths_nm.to_vec(),
        columns,
        total,
        aux,
        metadata: meta,
    })
}

/// Lab spectrum on the default geometric grid from the cutoff to 4 µm.
pub fn default_lab_spectrum(scenario: &Scenario) -> Result<SpectrumTable> {
    let desc = format!(
        "geometric wavelengths over [{LAB_CUTOFF_NM}, {DEFAULT_LAB_MAX_NM}] nm, {DEFAULT_LAB_POINTS} points"
    );
    lab_spectrum(scenario, &default_lab_grid(), &desc)
}

fn comoving_of(medium: &SellmeierMedium, scenario: &Scenario, omega: f64) -> f64 {
    let f = scenario.frame();
    match medium.refractive_index(omega) {
        Ok(n) => f.gamma() * omega * (1.0 - f.u() * n),
        Err(_) => f64::NAN,
    }
}

fn wavelength_nm(omega: f64) -> f64 {
    2.0 * PI / omega * 1e3
}

/// Lab wavelength (nm) of the positive-frequency root with comoving frequency
/// `target`, searched on the lab-frequency bracket `[a, b]`.
fn preimage(scenario: &Scenario, side: Side, target: f64, a: f64, b: f64) -> Option<f64> {
    let m = scenario.step().medium(side);
    let f = |w: f64| comoving_of(m, scenario, w) - target;
    let (fa, fb) = (f(a), f(b));
    if !(fa.is_finite() && fb.is_finite()) || (fa < 0.0) == (fb < 0.0) {
        return None;
    }
    Some(wavelength_nm(bisect(a, b, f)))
}

/// Lab-frequency bracket of the lower, middle and upper optical segments of one side.
fn lab_edges(sli: &SubluminalInterval) -> (f64, f64) {
    let (a, b) = (sli.lab_omega_at_min, sli.lab_omega_at_max);
    (a.min(b), a.max(b))
}

/// Marker wavelengths in nm: the zero-ω′ line of each side, the black-hole band of
/// moR (`ω′ ∈ (max(ω′_maxL, ω′_minR), ω′_maxR)`) and the white-hole band of loL
/// (`ω′ ∈ (ω′_minL, ω′_minR)`).
pub fn lab_markers(scenario: &Scenario) -> Vec<Marker> {
    let mut out = Vec::new();
    let u = scenario.frame().u();
    for side in [Side::Left, Side::Right] {
        let m = scenario.step().medium(side);
        let (start, end) = optical_branch_range(m);
        let f = |w: f64| u * u * m.permittivity(Complex64::new(w, 0.0)).re - 1.0;
        if f(start) < 0.0 && f(end) > 0.0 {
            out.push(Marker {
                name: format!("zero_omega_prime_{side}"),
                value: wavelength_nm(bisect(start, end, f)),
            });
        }
    }
    let (Some(l), Some(r)) = (scenario.sli(Side::Left), scenario.sli(Side::Right)) else {
        return out;
    };
    let (ra, rb) = lab_edges(r);
    let bh_low = l.omega_max.max(r.omega_min);
    if bh_low < r.omega_max {
        out.push(Marker {
            name: "black_hole_short_nm".into(),
            value: wavelength_nm(rb),
        });
        if let Some(x) = preimage(scenario, Side::Right, bh_low, ra, rb) {
            out.push(Marker {
                name: "black_hole_long_nm".into(),
                value: x,
            });
        }
    }
    if l.omega_min < r.omega_min {
        let (la, _) = lab_edges(l);
        let (start, _) = optical_branch_range(scenario.step().left());
        let hi = r.omega_min.min(l.omega_max);
        if let Some(x) = preimage(scenario, Side::Left, hi, start * (1.0 + 1e-9), la) {
            out.push(Marker {
                name: "white_hole_long_nm".into(),
                value: x,
            });
        }
        out.push(Marker {
            name: "white_hole_short_nm".into(),
            value: wavelength_nm(la),
        });
    }
    out
}

/// Which part of the right SLI [`photon_number`] integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionInterval {
    /// `[max(ω′_maxL, ω′_minR), ω′_maxR]`, where moR sees a black-hole horizon.
    Horizon,
    /// The full right SLI `[ω′_minR, ω′_maxR]`.
    FullSli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonOptions {
    pub interval: EmissionInterval,
    /// Simpson intervals per segment, rounded up to even.
    pub intervals: usize,
}

impl Default for PhotonOptions {
    fn default() -> Self {
        Self {
            interval: EmissionInterval::Horizon,
            intervals: DEFAULT_QUADRATURE_INTERVALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumber {
    /// Total photons emitted into moR.
    pub photons: f64,
    /// `∫ I′^{moR} dω′` over the interval.
    pub integral: f64,
    /// Comoving duration `Δτ = L/(uγ)` in µm/c.
    pub delta_tau: f64,
    pub length_um: f64,
    pub interval: (f64, f64),
    pub quarantine: Vec<QuarantinedPoint>,
}

/// Composite Simpson rule on the cosine map `ω′ = a + (b − a)(1 − cos θ)/2`,
/// which clusters nodes at both ends and never evaluates the endpoints.
fn cosine_simpson(
    a: f64,
    b: f64,
    intervals: usize,
    f: impl Fn(f64) -> std::result::Result<f64, String> + Sync,
) -> (f64, Vec<QuarantinedPoint>) {
    let n = intervals.max(2).div_ceil(2) * 2;
    let h = PI / n as f64;
    let evals: Vec<(f64, std::result::Result<f64, String>)> = (1..n)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 * h;
            let x = a + 0.5 * (b - a) * (1.0 - t.cos());
            (x, f(x).map(|v| v * 0.5 * (b - a) * t.sin()))
        })
        .collect();
    let mut sum = 0.0;
    let mut bad = Vec::new();
    for (j, (x, r)) in evals.into_iter().enumerate() {
        let w = if (j + 1) % 2 == 1 { 4.0 } else { 2.0 };
        match r {
            Ok(v) => sum += w * v,
            Err(e) => bad.push(QuarantinedPoint {
                axis_value: x,
                error: e,
            }),
        }
    }
    (sum * h / 3.0, bad)
}

/// Integration bounds for moR emission.
pub fn emission_interval(scenario: &Scenario, which: EmissionInterval) -> Option<(f64, f64)> {
    let r = scenario.sli(Side::Right)?;
    let lo = match (which, scenario.sli(Side::Left)) {
        (EmissionInterval::Horizon, Some(l)) => l.omega_max.max(r.omega_min),
        _ => r.omega_min,
    };
    (lo < r.omega_max).then_some((lo, r.omega_max))
}

/// Photons emitted into moR while the front travels a lab distance `length_um`,
/// `N = Δτ/(2π)·∫ I′^{moR} dω′` with `Δτ = L/(uγ)`.
pub fn photon_number(scenario: &Scenario, length_um: f64, options: &PhotonOptions) -> Result<PhotonNumber> {
    if !(length_um > 0.0 && length_um.is_finite()) {
        return Err(RifError::invalid("length", "must be positive"));
    }
    let frame = scenario.frame();
    let delta_tau = length_um / (frame.u() * frame.gamma());
    let Some((a, b)) = emission_interval(scenario, options.interval) else {
        return Ok(PhotonNumber {
            photons: 0.0,
            integral: 0.0,
            delta_tau,
            length_um,
            interval: (0.0, 0.0),
            quarantine: Vec::new(),
        });
    };
    let mo_r = ModeLabel::new(ModeKind::Mo, Side::Right);
    let integrand = |wp: f64| -> std::result::Result<f64, String> {
        let s = s_matrix(scenario, wp).map_err(|e| e.to_string())?;
        Ok(s.out_index(mo_r).map(|i| s.fluxes()[i]).unwrap_or(0.0))
    };
    let mut breaks = vec![a];
    breaks.extend(interior_edges(scenario, a, b));
    breaks.push(b);
    let mut integral = 0.0;
    let mut quarantine = Vec::new();
    for w in breaks.windows(2) {
        let (v, q) = cosine_simpson(w[0], w[1], options.intervals, integrand);
        integral += v;
        quarantine.extend(q);
    }
    Ok(PhotonNumber {
        photons: delta_tau / (2.0 * PI) * integral,
        integral,
        delta_tau,
        length_um,
        interval: (a, b),
        quarantine,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliWidth {
    /// `ω′_maxR − max(ω′_maxL, ω′_minR)`, zero when there is no horizon interval.
    pub horizon: f64,
    /// `ω′_maxR − ω′_minR`.
    pub full: f64,
    /// Set when the right side has no subluminal interval.
    pub empty: bool,
}

pub fn sli_width(scenario: &Scenario) -> SliWidth {
    let Some(r) = scenario.sli(Side::Right) else {
        return SliWidth {
            horizon: 0.0,
            full: 0.0,
            empty: true,
        };
    };
    let horizon = emission_interval(scenario, EmissionInterval::Horizon)
        .map(|(a, b)| b - a)
        .unwrap_or(0.0);
    SliWidth {
        horizon,
        full: r.width(),
        empty: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub fit_range: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(RifError::Fit("need at least two points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(RifError::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        samples: points.len(),
    })
}

/// Least-squares fit of `N = prefactor·δn^exponent` on log–log axes over `range`.
pub fn fit_power_law(samples: &[(f64, f64)], range: (f64, f64)) -> Result<PowerLawFit> {
    let sel: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(x, _)| *x >= range.0 && *x <= range.1)
        .collect();
    if sel.len() < 5 {
        return Err(RifError::Fit(format!(
            "need at least 5 samples in range, got {}",
            sel.len()
        )));
    }
    if let Some(p) = sel.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(RifError::Fit(format!("nonpositive sample ({}, {})", p.0, p.1)));
    }
    let logs: Vec<(f64, f64)> = sel.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let line = fit_line(&logs)?;
    Ok(PowerLawFit {
        exponent: line.slope,
        prefactor: line.intercept.exp(),
        fit_range: range,
        r_squared: line.r_squared,
        samples: sel.len(),
    })
}

/// One δn of a photon-number sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta_n: f64,
    pub sigma: f64,
    pub photons: PhotonNumber,
    pub width: SliWidth,
}

/// Photon number and interval widths for each step height.
pub fn photon_sweep(
    base: &Scenario,
    delta_ns: &[f64],
    length_um: f64,
    options: &PhotonOptions,
) -> Result<Vec<SweepRow>> {
    delta_ns
        .iter()
        .map(|&dn| {
            let step = scale_medium(*base.step().right(), dn, base.step().n_ref_right())?;
            let sc = Scenario::new(step, *base.frame(), *base.settings())?;
            Ok(SweepRow {
                delta_n: dn,
                sigma: sc.step().sigma(),
                photons: photon_number(&sc, length_um, options)?,
                width: sli_width(&sc),
            })
        })
        .collect()
}

/// Trapezoid rule over possibly unsorted abscissae.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum::<f64>()
        .abs()
}

/// Result of comparing a mode's lab-frame and moving-frame integrated rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bookkeeping {
    /// `γ·∫ I dω` over the lab rows whose ω′ lies in the moving grid.
    pub lab: f64,
    /// `∫ I′ dω′` over the same ω′ range.
    pub moving: f64,
    pub omega_prime_range: (f64, f64),
    pub relative_error: f64,
    pub lab_rows: usize,
}

/// Linear interpolation of `(x, y)` (x ascending) at `t`, clamped.
fn interpolate(x: &[f64], y: &[f64], t: f64) -> f64 {
    let i = x.partition_point(|&v| v < t);
    if i == 0 {
        return y[0];
    }
    if i >= x.len() {
        return y[x.len() - 1];
    }
    let w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    y[i - 1] + w * (y[i] - y[i - 1])
}

/// Integral of the moving-frame column over `[a, b]`, trapezoidal with
/// interpolated end cells.
fn moving_integral(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let mut xs = vec![a];
    let mut ys = vec![interpolate(x, y, a)];
    for (xi, yi) in x.iter().zip(y) {
        if *xi > a && *xi < b {
            xs.push(*xi);
            ys.push(*yi);
        }
    }
    xs.push(b);
    ys.push(interpolate(x, y, b));
    trapezoid(&xs, &ys)
}

/// Change-of-variables check for one out-mode: `γ∫I dω` against `∫I′ dω′`.
pub fn frame_bookkeeping(lab: &SpectrumTable, moving: &SpectrumTable, label: &str) -> Result<Bookkeeping> {
    let values = lab
        .column(label)
        .ok_or_else(|| RifError::UnknownLabel(label.to_string()))?;
    let wp = lab
        .aux_column(&format!("omega_prime_{label}"))
        .ok_or_else(|| RifError::UnknownLabel(label.to_string()))?;
    let mcol = moving
        .column(label)
        .ok_or_else(|| RifError::UnknownLabel(label.to_string()))?;
    let (lo, hi) = (moving.axis[0], moving.axis[moving.axis.len() - 1]);
    let rows: Vec<usize> = (0..lab.len())
        .filter(|&i| wp[i].is_finite() && wp[i] >= lo && wp[i] <= hi)
        .collect();
    if rows.len() < 2 {
        return Err(RifError::Fit(format!("{label} has no lab band inside the moving grid")));
    }
    // per-wavelength density in µm⁻¹, axis in nm
    let lam: Vec<f64> = rows.iter().map(|&i| nm_to_um(lab.axis[i])).collect();
    let dens: Vec<f64> = rows.iter().map(|&i| values[i]).collect();
    let lab_int = lab.metadata.gamma * trapezoid(&lam, &dens);
    let a = rows.iter().map(|&i| wp[i]).fold(f64::INFINITY, f64::min);
    let b = rows.iter().map(|&i| wp[i]).fold(f64::NEG_INFINITY, f64::max);
    let mov = moving_integral(&moving.axis, mcol, a, b);
    let scale = lab_int.abs().max(mov.abs());
    Ok(Bookkeeping {
        lab: lab_int,
        moving: mov,
        omega_prime_range: (a, b),
        relative_error: if scale == 0.0 { 0.0 } else { (lab_int - mov).abs() / scale },
        lab_rows: rows.len(),
    })
}

/// Minimax single-constant scaling of `trace` onto `reference`; returns the
/// constant and the largest remaining relative deviation.
pub fn shape_match(trace: &[f64], reference: &[f64]) -> Result<(f64, f64)> {
    if trace.len() != reference.len() || trace.is_empty() {
        return Err(RifError::Fit("traces must be nonempty and equally long".into()));
    }
    if trace.iter().chain(reference).any(|v| !(*v > 0.0)) {
        return Err(RifError::Fit("traces must be positive".into()));
    }
    let ratios: Vec<f64> = reference.iter().zip(trace).map(|(r, t)| r / t).collect();
    let rmin = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = 2.0 / (1.0 / rmin + 1.0 / rmax);
    let dev = ratios
        .iter()
        .map(|r| (c / r - 1.0).abs())
        .fold(0.0_f64, f64::max);
    Ok((c, dev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{FrontFrame, IndexStep};
    use crate::scattering::ScatteringSettings;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scenario(dn: f64) -> Scenario {
        let step = IndexStep::new(SellmeierMedium::fused_silica(), dn).unwrap();
        Scenario::new(step, FrontFrame::new(0.66).unwrap(), ScatteringSettings::default()).unwrap()
    }

    #[test]
    fn fitter_recovers_exact_power_law() {
        let s: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let x = 1e-3 * 1.4f64.powi(i);
                (x, 3.7 * x.powf(2.5))
            })
            .collect();
        let f = fit_power_law(&s, (1e-4, 1.0)).unwrap();
        assert!((f.exponent - 2.5).abs() <= 1e-10);
        assert_relative_eq!(f.prefactor, 3.7, max_relative = 1e-9);
        assert!((f.r_squared - 1.0).abs() <= 1e-12);
        assert!(fit_power_law(&s[..3], (1e-4, 1.0)).is_err());
        let mut neg = s.clone();
        neg[2].1 = 0.0;
        assert!(fit_power_law(&neg, (1e-4, 1.0)).is_err());
    }

    #[test]
    fn simpson_on_cosine_map_converges_at_fourth_order() {
        // ∫ x² sin x = 2x sin x − (x² − 2) cos x
        let f = |x: f64| 2.0 * x * x.sin() - (x * x - 2.0) * x.cos();
        let exact = f(1.3) - f(0.2);
        let err = |n| {
            let (v, q) = cosine_simpson(0.2, 1.3, n, |x| Ok(x * x * x.sin()));
            assert!(q.is_empty());
            (v - exact).abs() / exact
        };
        let (e32, e64) = (err(32), err(64));
        assert!(e64 < 1e-6);
        assert!((e32 / e64 - 16.0).abs() < 2.0, "order ratio {}", e32 / e64);
    }

    #[test]
    fn default_grid_avoids_edges_and_is_sorted() {
        let sc = scenario(0.02);
        let g = default_comoving_grid(&sc, DEFAULT_COMOVING_POINTS).unwrap();
        assert_eq!(g.len(), DEFAULT_COMOVING_POINTS);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        for e in sc.edges() {
            assert!(g.iter().all(|x| (x - e).abs() > 1e-9 * e));
            // clustering: some node within 1e-3 relative of each edge
            assert!(g.iter().any(|x| (x - e).abs() < 1e-3 * e));
        }
    }

    #[test]
    fn null_step_is_dark() {
        let sc = scenario(0.0);
        let t = default_moving_frame_spectrum(&sc, 80).unwrap();
        assert!(t.metadata.quarantine.is_empty());
        assert!(t.total.iter().all(|v| *v <= 1e-24));
        let n = photon_number(&sc, 1000.0, &PhotonOptions::default()).unwrap();
        assert_eq!(n.photons, 0.0);
        let full = PhotonOptions {
            interval: EmissionInterval::FullSli,
            intervals: 20,
        };
        assert!(photon_number(&sc, 1000.0, &full).unwrap().photons <= 1e-20);
        assert_eq!(sli_width(&sc).horizon, 0.0);
    }

    #[test]
    fn mo_right_column_confined_to_right_sli() {
        let sc = scenario(0.02);
        let t = default_moving_frame_spectrum(&sc, 120).unwrap();
        let r = sc.sli(Side::Right).unwrap();
        let col = t.column("moR").unwrap();
        for (x, v) in t.axis.iter().zip(col) {
            if !r.contains(*x) {
                assert_eq!(*v, 0.0);
            } else {
                assert!(*v > 0.0);
            }
        }
    }

    #[test]
    fn doubling_length_doubles_photons() {
        let sc = scenario(0.02);
        let o = PhotonOptions {
            interval: EmissionInterval::Horizon,
            intervals: 24,
        };
        let a = photon_number(&sc, 1000.0, &o).unwrap();
        let b = photon_number(&sc, 2000.0, &o).unwrap();
        assert_eq!(b.photons, 2.0 * a.photons);
        assert_relative_eq!(a.delta_tau, 1000.0 / (0.66 * sc.frame().gamma()), max_relative = 1e-15);
    }

    #[test]
    fn below_cutoff_rejected() {
        let sc = scenario(0.02);
        assert!(matches!(
            lab_spectrum(&sc, &[229.0, 300.0], ""),
            Err(RifError::BelowCutoff { .. })
        ));
    }

    #[test]
    fn lab_total_is_sum_of_columns() {
        let sc = scenario(0.02);
        let grid = wavelength_grid(230.0, 4000.0, 60).unwrap();
        let t = lab_spectrum(&sc, &grid, "").unwrap();
        for i in 0..t.len() {
            let s: f64 = t.columns.iter().map(|c| c.values[i]).sum();
            assert_eq!(s, t.total[i]);
        }
    }

    #[test]
    fn markers_order_black_hole_before_white_hole() {
        let sc = scenario(0.02);
        let m = lab_markers(&sc);
        let get = |n: &str| m.iter().find(|x| x.name == n).unwrap().value;
        assert!(get("black_hole_short_nm") < get("black_hole_long_nm"));
        assert!(get("black_hole_long_nm") < get("white_hole_short_nm"));
        assert!(get("white_hole_short_nm") < get("white_hole_long_nm"));
        assert!(get("zero_omega_prime_L") > 230.0);
    }

    #[test]
    fn horizon_width_saturates_to_full_width() {
        let big = sli_width(&scenario(0.07));
        assert_eq!(big.horizon, big.full);
        let small = sli_width(&scenario(0.01));
        assert!(small.horizon < small.full && small.horizon > 0.0);
    }

    #[test]
    fn shape_match_of_scaled_copy_is_exact() {
        let a = [1.0, 2.0, 3.0];
        let b = [2.5, 5.0, 7.5];
        let (c, d) = shape_match(&a, &b).unwrap();
        assert_relative_eq!(c, 2.5, max_relative = 1e-15);
        assert!(d <= 1e-15);
    }

    proptest! {
        #[test]
        fn fit_line_recovers_exact_lines(slope in -5.0f64..5.0, intercept in -3.0f64..3.0) {
            let pts: Vec<(f64, f64)> = (0..7).map(|i| (i as f64 * 0.3, slope * i as f64 * 0.3 + intercept)).collect();
            let f = fit_line(&pts).unwrap();
            prop_assert!((f.slope - slope).abs() <= 1e-10);
            prop_assert!((f.intercept - intercept).abs() <= 1e-10);
            prop_assert!(f.r_squared >= 0.0 && f.r_squared <= 1.0);
        }

        #[test]
        fn wavelength_grid_is_sorted_and_bounded(lo in 230.0f64..500.0, span in 10.0f64..4000.0, n in 2usize..300) {
            let g = wavelength_grid(lo, lo + span, n).unwrap();
            prop_assert_eq!(g.len(), n);
            prop_assert_eq!(g[0], lo);
            prop_assert_eq!(g[n - 1], lo + span);
            prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
